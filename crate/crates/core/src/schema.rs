//! Star schemas extracted from formalized informational goals.
//!
//! One fact table per tactical goal (in its context): its measures are the
//! fact parameters of the tactical goal's informational goals, and its
//! dimension references their dimension parameters. Dimensions are
//! identified by normalized name across the whole model, so a parameter
//! shared by several goals yields one conformed dimension.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use serde::Serialize;
use thiserror::Error;

use crate::model::{normalize_name, Goal, GoalKind, RequirementsModel};

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Measure {
    pub name: String,
    pub source_goal: String,
    pub verb: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DimensionTable {
    pub name: String,
    pub source_goals: BTreeSet<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Grain {
    pub activity: String,
    pub context: String,
    pub tactical_goal: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FactTable {
    pub name: String,
    pub grain: Grain,
    pub measures: Vec<Measure>,
    pub dimension_refs: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct StarSchema {
    pub fact: FactTable,
    pub dimensions: Vec<DimensionTable>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SchemaError {
    #[error("informational goal `{0}` is not formalized")]
    NotFormalized(String),
}

pub fn dimension_name(param: &str) -> String {
    format!("dim_{}", normalize_name(param))
}

pub fn fact_name(tactical_goal: &str) -> String {
    format!("fact_{tactical_goal}")
}

fn informational_children<'m>(model: &'m RequirementsModel, tactical: &Goal) -> Vec<&'m Goal> {
    model
        .children_of(&tactical.id)
        .into_iter()
        .filter(|g| g.kind == GoalKind::Informational && g.same_scope(tactical))
        .collect()
}

/// Builds one star schema per tactical goal with at least one formalized
/// informational goal, ordered by fact name.
pub fn build_star_schemas(model: &RequirementsModel) -> Result<Vec<StarSchema>, SchemaError> {
    let mut facts: Vec<FactTable> = Vec::new();
    let mut dimensions: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();

    for tactical in model.goals_by_kind(GoalKind::Tactical) {
        let children = informational_children(model, tactical);
        if children.is_empty() {
            continue;
        }
        let mut measures: Vec<Measure> = Vec::new();
        let mut dimension_refs: Vec<String> = Vec::new();
        for goal in children {
            let block = goal
                .formalization
                .as_ref()
                .ok_or_else(|| SchemaError::NotFormalized(goal.id.clone()))?;
            for param in &block.fact_params {
                let name = normalize_name(param);
                if !measures.iter().any(|m| m.name == name) {
                    measures.push(Measure {
                        name,
                        source_goal: goal.id.clone(),
                        verb: block.verb.clone(),
                    });
                }
            }
            for param in &block.dimension_params {
                let name = dimension_name(param);
                dimensions
                    .entry(name.clone())
                    .or_default()
                    .insert(goal.id.clone());
                if !dimension_refs.contains(&name) {
                    dimension_refs.push(name);
                }
            }
        }
        facts.push(FactTable {
            name: fact_name(&tactical.id),
            grain: Grain {
                activity: tactical.activity.clone(),
                context: tactical.context.clone(),
                tactical_goal: tactical.id.clone(),
            },
            measures,
            dimension_refs,
        });
    }

    facts.sort_by(|a, b| a.name.cmp(&b.name));
    Ok(facts
        .into_iter()
        .map(|fact| {
            let dimensions = fact
                .dimension_refs
                .iter()
                .map(|name| DimensionTable {
                    name: name.clone(),
                    source_goals: dimensions[name].clone(),
                })
                .collect();
            StarSchema { fact, dimensions }
        })
        .collect())
}

/// Every dimension used by at least two fact tables, with those facts.
pub fn shared_dimensions(schemas: &[StarSchema]) -> Vec<(String, Vec<String>)> {
    let mut users: BTreeMap<&str, BTreeSet<&str>> = BTreeMap::new();
    for schema in schemas {
        for dim in &schema.fact.dimension_refs {
            users.entry(dim).or_default().insert(&schema.fact.name);
        }
    }
    users
        .into_iter()
        .filter(|(_, facts)| facts.len() >= 2)
        .map(|(dim, facts)| {
            (
                dim.to_owned(),
                facts.into_iter().map(str::to_owned).collect(),
            )
        })
        .collect()
}

/// Distinct dimension tables across schemas, sorted by name.
pub fn all_dimensions(schemas: &[StarSchema]) -> Vec<&DimensionTable> {
    let mut dims: BTreeMap<&str, &DimensionTable> = BTreeMap::new();
    for schema in schemas {
        for dim in &schema.dimensions {
            dims.entry(&dim.name).or_insert(dim);
        }
    }
    dims.into_values().collect()
}

fn sql_ident(name: &str) -> String {
    format!("\"{}\"", name.replace('"', "\"\""))
}

fn sql_comment(text: &str) -> String {
    text.replace(['\n', '\r'], " ")
}

/// Dialect-neutral DDL: dimension tables first, then fact tables.
pub fn emit_sql(schemas: &[StarSchema]) -> String {
    let mut out = String::new();
    for dim in all_dimensions(schemas) {
        let key = format!("{}_key", dim.name);
        let _ = writeln!(out, "-- {}: from {}", dim.name, join(&dim.source_goals));
        let _ = writeln!(out, "CREATE TABLE {} (", sql_ident(&dim.name));
        let _ = writeln!(out, "  {} INTEGER NOT NULL,", sql_ident(&key));
        let _ = writeln!(out, "  {} TEXT NOT NULL,", sql_ident("label"));
        let _ = writeln!(out, "  PRIMARY KEY ({})", sql_ident(&key));
        out.push_str(");\n\n");
    }
    for schema in schemas {
        let fact = &schema.fact;
        let grain = &fact.grain;
        let _ = writeln!(
            out,
            "-- {}: grain = activity \"{}\", context \"{}\", tactical goal {}",
            fact.name,
            sql_comment(&grain.activity),
            sql_comment(&grain.context),
            grain.tactical_goal
        );
        let _ = writeln!(out, "CREATE TABLE {} (", sql_ident(&fact.name));
        let mut lines: Vec<String> = Vec::new();
        for dim in &fact.dimension_refs {
            lines.push(format!(
                "  {} INTEGER NOT NULL",
                sql_ident(&format!("{dim}_key"))
            ));
        }
        for measure in &fact.measures {
            lines.push(format!("  {} NUMERIC", sql_ident(&measure.name)));
        }
        for dim in &fact.dimension_refs {
            let key = sql_ident(&format!("{dim}_key"));
            lines.push(format!(
                "  FOREIGN KEY ({key}) REFERENCES {} ({key})",
                sql_ident(dim)
            ));
        }
        out.push_str(&lines.join(",\n"));
        out.push_str("\n);\n\n");
    }
    if out.ends_with("\n\n") {
        out.pop();
    }
    out
}

fn join(items: &BTreeSet<String>) -> String {
    items.iter().cloned().collect::<Vec<_>>().join(", ")
}

/// Canonical JSON, two-space indented, with a trailing newline.
pub fn emit_json(schemas: &[StarSchema]) -> String {
    let mut out = serde_json::to_string_pretty(schemas).expect("schemas serialize");
    out.push('\n');
    out
}

fn dot_id(name: &str) -> String {
    format!("\"{}\"", name.replace('\\', "\\\\").replace('"', "\\\""))
}

/// One node per table, one edge per fact → dimension reference.
pub fn emit_dot(schemas: &[StarSchema]) -> String {
    let mut out = String::from("digraph star_schemas {\n");
    for dim in all_dimensions(schemas) {
        let _ = writeln!(out, "  {} [shape=ellipse];", dot_id(&dim.name));
    }
    for schema in schemas {
        let fact = &schema.fact;
        let _ = writeln!(out, "  {} [shape=box];", dot_id(&fact.name));
    }
    for schema in schemas {
        for dim in &schema.fact.dimension_refs {
            let _ = writeln!(out, "  {} -> {};", dot_id(&schema.fact.name), dot_id(dim));
        }
    }
    out.push_str("}\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Activity, Actor, ActorKind, BusinessDiagnosis, FormalizationBlock};

    fn model(infos: &[(&str, &str, &[&str], &[&str])]) -> RequirementsModel {
        let mut m = RequirementsModel::new(BusinessDiagnosis {
            business_name: "B".into(),
            activities: vec![Activity::new("A", ["C"])],
        });
        m.actors = vec![
            Actor::new("boss", ActorKind::Strategic),
            Actor::new("lead", ActorKind::Tactical),
        ];
        m.goals
            .push(Goal::new("S", GoalKind::Strategic, "s", "boss", "A", "C"));
        let tacticals: BTreeSet<&str> = infos.iter().map(|i| i.1).collect();
        for t in tacticals {
            m.goals
                .push(Goal::new(t, GoalKind::Tactical, "t", "lead", "A", "C").refining("S"));
        }
        for (id, parent, facts, dims) in infos {
            m.goals.push(
                Goal::new(*id, GoalKind::Informational, "i", "lead", "A", "C")
                    .refining(*parent)
                    .formalized(FormalizationBlock::new(
                        "V",
                        facts.iter().copied(),
                        dims.iter().copied(),
                    )),
            );
        }
        m
    }

    #[test]
    fn minimal_formalization_row() {
        let m = model(&[("I", "T", &["FP1", "FP2", "FP3"], &["DP1", "DP2", "DP3"])]);
        let schemas = build_star_schemas(&m).unwrap();
        assert_eq!(schemas.len(), 1);
        let names: Vec<_> = schemas[0]
            .fact
            .measures
            .iter()
            .map(|m| m.name.as_str())
            .collect();
        assert_eq!(names, ["fp1", "fp2", "fp3"]);
        assert_eq!(
            schemas[0].fact.dimension_refs,
            ["dim_dp1", "dim_dp2", "dim_dp3"]
        );
        assert_eq!(schemas[0].fact.name, "fact_T");
    }

    #[test]
    fn sibling_goals_merge_dimensions() {
        let m = model(&[
            ("I1", "T", &["amount"], &["store", "month"]),
            ("I2", "T", &["amount"], &["month", "product"]),
        ]);
        let schemas = build_star_schemas(&m).unwrap();
        assert_eq!(schemas.len(), 1);
        assert_eq!(
            schemas[0].fact.dimension_refs,
            ["dim_store", "dim_month", "dim_product"]
        );
        assert_eq!(schemas[0].fact.measures.len(), 1);
        assert_eq!(schemas[0].fact.measures[0].source_goal, "I1");
        let month = &schemas[0].dimensions[1];
        assert_eq!(month.source_goals.iter().collect::<Vec<_>>(), ["I1", "I2"]);
    }

    #[test]
    fn no_informational_goals_no_schemas() {
        assert!(build_star_schemas(&model(&[])).unwrap().is_empty());
        assert!(emit_sql(&[]).is_empty());
        assert_eq!(emit_json(&[]), "[]\n");
        assert_eq!(emit_dot(&[]), "digraph star_schemas {\n}\n");
    }

    #[test]
    fn unformalized_goal_is_reported() {
        let mut m = model(&[("I", "T", &["x"], &[])]);
        m.goals.last_mut().unwrap().formalization = None;
        assert_eq!(
            build_star_schemas(&m),
            Err(SchemaError::NotFormalized("I".into()))
        );
    }

    #[test]
    fn shared_dimension_listing() {
        let m = model(&[
            ("I1", "Ta", &["x"], &["month"]),
            ("I2", "Tb", &["y"], &["month", "store"]),
        ]);
        let schemas = build_star_schemas(&m).unwrap();
        assert_eq!(
            shared_dimensions(&schemas),
            [(
                "dim_month".to_owned(),
                vec!["fact_Ta".to_owned(), "fact_Tb".to_owned()]
            )]
        );
        assert!(shared_dimensions(&schemas[..1]).is_empty());
        assert!(shared_dimensions(&[]).is_empty());
        let sql = emit_sql(&schemas);
        assert_eq!(sql.matches("CREATE TABLE \"dim_month\"").count(), 1);
        let dot = emit_dot(&schemas);
        assert_eq!(dot.matches("\"dim_month\" [").count(), 1);
        assert_eq!(dot.matches(" -> ").count(), 3);
    }

    #[test]
    fn sql_shape() {
        let m = model(&[("I", "T", &["FP1", "FP2", "FP3"], &["DP1", "DP2", "DP3"])]);
        let sql = emit_sql(&build_star_schemas(&m).unwrap());
        for needle in [
            "CREATE TABLE \"dim_dp1\"",
            "\"dim_dp1_key\" INTEGER NOT NULL",
            "\"label\" TEXT NOT NULL",
            "CREATE TABLE \"fact_T\"",
            "\"fp1\" NUMERIC",
            "\"fp3\" NUMERIC",
            "FOREIGN KEY (\"dim_dp2_key\") REFERENCES \"dim_dp2\" (\"dim_dp2_key\")",
            "-- fact_T: grain = activity \"A\", context \"C\", tactical goal T",
        ] {
            assert!(sql.contains(needle), "missing {needle} in\n{sql}");
        }
    }
}
