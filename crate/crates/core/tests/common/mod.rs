//! Shared helpers for integration tests: fixture paths, a seeded generator
//! of valid requirements models and a brute-force star schema oracle.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use disreqc::model::{Activity, Actor, ActorKind, BusinessDiagnosis, FormalizationBlock};
use disreqc::{Goal, GoalKind, RequirementsModel};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures")
}

pub fn fixture(rel: &str) -> PathBuf {
    fixtures().join(rel)
}

pub fn read_fixture(rel: &str) -> String {
    std::fs::read_to_string(fixture(rel)).unwrap_or_else(|e| panic!("{rel}: {e}"))
}

pub fn retail() -> RequirementsModel {
    disreqc::parse(&read_fixture("retail.dis")).expect("retail fixture parses")
}

/// Every `.dis` fixture expected to parse.
pub fn valid_fixtures() -> Vec<PathBuf> {
    let mut out = vec![
        fixture("retail.dis"),
        fixture("business_only.dis"),
        fixture("orphan_tactical.dis"),
    ];
    for entry in std::fs::read_dir(fixture("rules")).unwrap() {
        let path = entry.unwrap().path();
        let stem = path.file_stem().unwrap().to_string_lossy().into_owned();
        if !stem.starts_with('P') {
            out.push(path);
        }
    }
    out.sort();
    out
}

const ACTIVITIES: [&str; 4] = ["Sales", "Procurement", "Human resources", "Logistics"];
const CONTEXTS: [&str; 5] = [
    "Online",
    "In store",
    "Wholesale",
    "Region \"North\"",
    "Back office",
];
// Parameters are identifiers in the DSL; mixed case exercises normalization.
const FACTS: [&str; 6] = [
    "amount",
    "Quantity",
    "unit_price",
    "Margin",
    "delay_Days",
    "COST",
];
const DIMENSIONS: [&str; 7] = [
    "store",
    "Month",
    "product_line",
    "Supplier",
    "REGION",
    "WeekDay",
    "channel",
];
const VERBS: [&str; 4] = ["analyze", "compare", "track", "measure"];

/// A random model that passes every validation rule: at most `max_goals`
/// goals, every refinement in scope and of the right kind, every
/// informational goal formalized with disjoint fact and dimension lists.
pub fn random_valid_model(seed: u64, max_goals: usize) -> RequirementsModel {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let activities: Vec<Activity> = ACTIVITIES[..rng.gen_range(1..=ACTIVITIES.len())]
        .iter()
        .map(|a| {
            let n = rng.gen_range(1..=3);
            let mut contexts: Vec<&str> = CONTEXTS.to_vec();
            contexts.shuffle(&mut rng);
            Activity::new(*a, contexts.into_iter().take(n))
        })
        .collect();
    let scopes: Vec<(String, String)> = activities
        .iter()
        .flat_map(|a| a.contexts.iter().map(move |c| (a.name.clone(), c.clone())))
        .collect();

    let mut model = RequirementsModel::new(BusinessDiagnosis {
        business_name: format!("Business {}", seed % 97),
        activities,
    });
    model.actors = vec![
        Actor::new("Director", ActorKind::Strategic),
        Actor::new("Analyst", ActorKind::Tactical),
        Actor::new("Warehouse", ActorKind::System),
    ];

    let mut goals: Vec<Goal> = Vec::new();
    let mut next_id = 0usize;
    let mut fresh = |prefix: &str| {
        next_id += 1;
        format!("{prefix}{next_id:02}")
    };
    let n_strategic = rng.gen_range(1..=3.min(max_goals));
    for _ in 0..n_strategic {
        let (a, c) = scopes.choose(&mut rng).unwrap().clone();
        let id = fresh("s");
        goals.push(Goal::new(
            &id,
            GoalKind::Strategic,
            format!("Grow {id}"),
            "Director",
            a,
            c,
        ));
    }
    let n_tactical = rng.gen_range(0..=6.min(max_goals - n_strategic));
    for _ in 0..n_tactical {
        let parent = goals[..n_strategic].choose(&mut rng).unwrap().clone();
        let id = fresh("t");
        goals.push(
            Goal::new(
                &id,
                GoalKind::Tactical,
                format!("Steer {id}"),
                "Analyst",
                &parent.activity,
                &parent.context,
            )
            .refining(&parent.id),
        );
    }
    let n_info = if n_tactical == 0 {
        0
    } else {
        rng.gen_range(0..=max_goals - n_strategic - n_tactical)
    };
    for _ in 0..n_info {
        let parent = goals[n_strategic..n_strategic + n_tactical]
            .choose(&mut rng)
            .unwrap()
            .clone();
        let id = fresh("i");
        let (n_facts, n_dims) = (rng.gen_range(1..=3), rng.gen_range(0..=3));
        let facts: Vec<&str> = FACTS.choose_multiple(&mut rng, n_facts).copied().collect();
        let dims: Vec<&str> = DIMENSIONS
            .choose_multiple(&mut rng, n_dims)
            .copied()
            .collect();
        let verb = *VERBS.choose(&mut rng).unwrap();
        goals.push(
            Goal::new(
                &id,
                GoalKind::Informational,
                format!("Know \\ \"{id}\""),
                "Analyst",
                &parent.activity,
                &parent.context,
            )
            .refining(&parent.id)
            .formalized(FormalizationBlock::new(verb, facts, dims)),
        );
    }
    goals.shuffle(&mut rng);
    model.goals = goals;
    model
}

/// Independent of the library's helper on purpose.
pub fn oracle_normalize(s: &str) -> String {
    s.split_whitespace()
        .map(str::to_lowercase)
        .collect::<Vec<_>>()
        .join("_")
}

#[derive(Debug, Default, PartialEq, Eq)]
pub struct OracleSchemas {
    /// fact name → measure names
    pub measures: BTreeMap<String, BTreeSet<String>>,
    /// fact name → dimension names
    pub dimensions: BTreeMap<String, BTreeSet<String>>,
    pub global_dimensions: BTreeSet<String>,
}

/// Groups (tactical, informational, parameter) triples by scanning every
/// pair of goals; no use of the model's query helpers.
pub fn oracle_schemas(model: &RequirementsModel) -> OracleSchemas {
    let mut out = OracleSchemas::default();
    for t in &model.goals {
        if t.kind != GoalKind::Tactical {
            continue;
        }
        for i in &model.goals {
            let child = i.kind == GoalKind::Informational
                && i.parent.as_deref() == Some(t.id.as_str())
                && i.activity == t.activity
                && i.context == t.context;
            if !child {
                continue;
            }
            let fact = format!("fact_{}", t.id);
            let block = i
                .formalization
                .as_ref()
                .expect("valid models are formalized");
            let measures = out.measures.entry(fact.clone()).or_default();
            for p in &block.fact_params {
                measures.insert(oracle_normalize(p));
            }
            let dims = out.dimensions.entry(fact).or_default();
            for p in &block.dimension_params {
                let name = format!("dim_{}", oracle_normalize(p));
                dims.insert(name.clone());
                out.global_dimensions.insert(name);
            }
        }
    }
    out
}

/// The same sets, read off the library's schemas.
pub fn observed_schemas(schemas: &[disreqc::StarSchema]) -> OracleSchemas {
    let mut out = OracleSchemas::default();
    for s in schemas {
        out.measures.insert(
            s.fact.name.clone(),
            s.fact.measures.iter().map(|m| m.name.clone()).collect(),
        );
        out.dimensions.insert(
            s.fact.name.clone(),
            s.fact.dimension_refs.iter().cloned().collect(),
        );
        out.global_dimensions
            .extend(s.dimensions.iter().map(|d| d.name.clone()));
    }
    out
}

fn partition_of(
    rows: &[disreqc::pipeline::AssociationRow],
    expected: BTreeSet<String>,
    what: &str,
) -> Result<(), String> {
    let mut seen: BTreeMap<&str, usize> = BTreeMap::new();
    for row in rows {
        for child in &row.children {
            *seen.entry(child).or_default() += 1;
        }
    }
    if let Some((child, n)) = seen.iter().find(|(_, n)| **n != 1) {
        return Err(format!("{what}: `{child}` appears in {n} rows"));
    }
    let union: BTreeSet<String> = seen.keys().map(|s| s.to_string()).collect();
    if union != expected {
        return Err(format!(
            "{what}: rows cover {union:?}, scope holds {expected:?}"
        ));
    }
    Ok(())
}

/// Every association table partitions the goals of its scope.
pub fn check_partitions(
    model: &RequirementsModel,
    result: &disreqc::PipelineResult,
) -> Result<(), String> {
    let in_scope = |g: &Goal, a: &str, c: &str| g.activity == a && g.context == c;
    for table in result
        .assoc_st
        .as_ref()
        .ok_or("no strategic/tactical tables")?
    {
        let expected = model
            .goals
            .iter()
            .filter(|g| {
                g.kind == GoalKind::Tactical && in_scope(g, &table.activity, &table.context)
            })
            .map(|g| g.id.clone())
            .collect();
        partition_of(
            &table.rows,
            expected,
            &format!("st {}/{}", table.activity, table.context),
        )?;
    }
    for table in result
        .assoc_ti
        .as_ref()
        .ok_or("no tactical/informational tables")?
    {
        let strategic = table
            .strategic_goal
            .as_deref()
            .ok_or("ti table without strategic goal")?;
        let tacticals: BTreeSet<&str> = model
            .goals
            .iter()
            .filter(|g| g.kind == GoalKind::Tactical && g.parent.as_deref() == Some(strategic))
            .map(|g| g.id.as_str())
            .collect();
        let expected = model
            .goals
            .iter()
            .filter(|g| {
                g.kind == GoalKind::Informational
                    && in_scope(g, &table.activity, &table.context)
                    && g.parent.as_deref().is_some_and(|p| tacticals.contains(p))
            })
            .map(|g| g.id.clone())
            .collect();
        partition_of(&table.rows, expected, &format!("ti {strategic}"))?;
    }
    Ok(())
}

/// Every measure's source goal traces back to its fact's grain.
pub fn check_traces(
    model: &RequirementsModel,
    schemas: &[disreqc::StarSchema],
) -> Result<(), String> {
    for s in schemas {
        for m in &s.fact.measures {
            let chain = model
                .trace(&m.source_goal)
                .map_err(|e| format!("trace {}: {e}", m.source_goal))?;
            let grain = &s.fact.grain;
            if chain.tactical_goal_id != grain.tactical_goal
                || chain.activity != grain.activity
                || chain.context != grain.context
                || chain.business != model.diagnosis.business_name
            {
                return Err(format!(
                    "trace {} does not match grain of {}",
                    m.source_goal, s.fact.name
                ));
            }
        }
    }
    Ok(())
}
