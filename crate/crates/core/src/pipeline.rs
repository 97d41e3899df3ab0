//! The five analysis stages, run in the catalog's `requires` order.
//!
//! Each stage validates one aspect of a [`RequirementsModel`] and derives
//! the model document of its pattern. A stage that reports an error halts
//! the run; all findings of that stage are still reported.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::Serialize;

use crate::catalog::{
    self, Catalog, ResolveError, ASSOC_STRATEGIC_TACTICAL, ASSOC_TACTICAL_INFORMATIONAL,
    BUILTIN_SYMBOLS, DIAGNOSIS, FORMALIZATION, IDENTIFICATION,
};
use crate::model::{
    normalize_name, Activity, ActorKind, ElementRef, Goal, GoalKind, RequirementsModel, Severity,
    SourceLocation,
};

/// Validation rules. Gaps in the numbering are unused codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum RuleCode {
    /// Empty business name.
    E000,
    /// Reference to an undeclared actor, activity, context or goal.
    E002,
    /// Goal owned by an actor of the wrong kind.
    E003,
    /// Tactical goal without a parent.
    E004,
    /// Informational goal without a parent.
    E005,
    /// Parent goal of the wrong kind.
    E006,
    /// Refinement across contexts.
    E007,
    /// Informational goal without formalization or fact parameters.
    E008,
    /// Parameter name used twice in one formalization.
    E009,
    /// Refinement cycle.
    E011,
    /// Formalization without dimension parameters.
    W001,
    /// Activity without contexts.
    W002,
    /// Strategic or tactical actor that owns no goal.
    W003,
}

impl RuleCode {
    pub const ALL: [RuleCode; 13] = [
        RuleCode::E000,
        RuleCode::E002,
        RuleCode::E003,
        RuleCode::E004,
        RuleCode::E005,
        RuleCode::E006,
        RuleCode::E007,
        RuleCode::E008,
        RuleCode::E009,
        RuleCode::E011,
        RuleCode::W001,
        RuleCode::W002,
        RuleCode::W003,
    ];

    pub fn severity(self) -> Severity {
        match self {
            RuleCode::W001 | RuleCode::W002 | RuleCode::W003 => Severity::Warning,
            _ => Severity::Error,
        }
    }
}

impl fmt::Display for RuleCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ValidationFinding {
    pub severity: Severity,
    pub code: RuleCode,
    pub message: String,
    pub subject: ElementRef,
    pub stage: String,
    pub location: Option<SourceLocation>,
}

impl fmt::Display for ValidationFinding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}[{}] {} ({}): {}",
            self.severity, self.code, self.subject, self.stage, self.message
        )
    }
}

/// The business, its activities and their contexts.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DiagnosisDocument {
    pub business: String,
    pub activities: Vec<Activity>,
}

/// Ownership edges `(actor, goal id)` between actors and their goals.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct UseCaseModel {
    pub edges: BTreeSet<(String, String)>,
    /// Declared actors with their kind, including those owning no goal.
    pub actors: BTreeMap<String, ActorKind>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum AssociationLevel {
    StrategicTactical,
    TacticalInformational,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AssociationRow {
    pub parent: String,
    pub children: Vec<String>,
}

/// Children grouped under their parents within one context. For the
/// tactical → informational level the table is also scoped to one
/// strategic goal.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AssociationTable {
    pub activity: String,
    pub context: String,
    pub strategic_goal: Option<String>,
    pub level: AssociationLevel,
    pub rows: Vec<AssociationRow>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FormalizationRow {
    pub goal_id: String,
    pub verb: String,
    pub fact_params: Vec<String>,
    pub dimension_params: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FormalizationTable {
    pub activity: String,
    pub context: String,
    pub strategic_goal: String,
    pub tactical_goal: String,
    pub rows: Vec<FormalizationRow>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct PipelineOptions {
    /// Report warnings as errors.
    pub strict: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PipelineResult {
    pub stages_run: Vec<String>,
    pub findings: Vec<ValidationFinding>,
    /// The stage whose errors stopped the run.
    pub halted_at: Option<String>,
    pub diagnosis: Option<DiagnosisDocument>,
    pub use_cases: Option<UseCaseModel>,
    pub assoc_st: Option<Vec<AssociationTable>>,
    pub assoc_ti: Option<Vec<AssociationTable>>,
    pub formalization: Option<Vec<FormalizationTable>>,
}

impl PipelineResult {
    pub fn errors(&self) -> impl Iterator<Item = &ValidationFinding> {
        self.findings
            .iter()
            .filter(|f| f.severity == Severity::Error)
    }

    pub fn warnings(&self) -> impl Iterator<Item = &ValidationFinding> {
        self.findings
            .iter()
            .filter(|f| f.severity == Severity::Warning)
    }

    pub fn has_errors(&self) -> bool {
        self.errors().next().is_some()
    }

    /// Whether a stage ran without errors.
    pub fn succeeded(&self, stage: &str) -> bool {
        self.stages_run.iter().any(|s| s == stage) && self.halted_at.as_deref() != Some(stage)
    }
}

struct Findings<'m> {
    model: &'m RequirementsModel,
    stage: &'static str,
    findings: Vec<ValidationFinding>,
}

impl<'m> Findings<'m> {
    fn new(model: &'m RequirementsModel, stage: &'static str) -> Self {
        Findings {
            model,
            stage,
            findings: Vec::new(),
        }
    }

    fn push(&mut self, code: RuleCode, subject: ElementRef, message: impl Into<String>) {
        let location = self.model.source_map.get(&subject);
        self.findings.push(ValidationFinding {
            severity: code.severity(),
            code,
            message: message.into(),
            subject,
            stage: self.stage.to_owned(),
            location,
        });
    }

    fn goal(&mut self, code: RuleCode, goal: &Goal, message: impl Into<String>) {
        self.push(code, ElementRef::Goal(goal.id.clone()), message);
    }
}

fn goals_by_id(model: &RequirementsModel) -> Vec<&Goal> {
    let mut goals: Vec<&Goal> = model.goals.iter().collect();
    goals.sort_by(|a, b| a.id.cmp(&b.id));
    goals
}

fn scoped_children<'m>(
    model: &'m RequirementsModel,
    parent: &Goal,
    kind: GoalKind,
) -> Vec<&'m Goal> {
    model
        .children_of(&parent.id)
        .into_iter()
        .filter(|g| g.kind == kind && g.same_scope(parent))
        .collect()
}

fn scope_goals<'m>(
    model: &'m RequirementsModel,
    activity: &str,
    context: &str,
    kind: GoalKind,
) -> Vec<&'m Goal> {
    model
        .goals_by_kind(kind)
        .into_iter()
        .filter(|g| g.activity == activity && g.context == context)
        .collect()
}

fn ids(goals: &[&Goal]) -> Vec<String> {
    goals.iter().map(|g| g.id.clone()).collect()
}

/// Business, activities and contexts of the organization.
pub fn stage_diagnose(model: &RequirementsModel) -> (DiagnosisDocument, Vec<ValidationFinding>) {
    let mut out = Findings::new(model, DIAGNOSIS);
    let diagnosis = &model.diagnosis;
    if diagnosis.business_name.trim().is_empty() {
        out.push(
            RuleCode::E000,
            ElementRef::Business,
            "the business name is empty",
        );
    }
    for activity in &diagnosis.activities {
        if activity.contexts.is_empty() {
            out.push(
                RuleCode::W002,
                ElementRef::Activity(activity.name.clone()),
                format!("activity \"{}\" lists no context", activity.name),
            );
        }
    }
    let doc = DiagnosisDocument {
        business: diagnosis.business_name.clone(),
        activities: diagnosis.activities.clone(),
    };
    (doc, out.findings)
}

/// Actors and the goals they own.
pub fn stage_identify(model: &RequirementsModel) -> (UseCaseModel, Vec<ValidationFinding>) {
    let mut out = Findings::new(model, IDENTIFICATION);
    let mut ucm = UseCaseModel {
        actors: model
            .actors
            .iter()
            .map(|a| (a.name.clone(), a.kind))
            .collect(),
        ..Default::default()
    };
    for goal in goals_by_id(model) {
        match model.actor(&goal.actor) {
            None => out.goal(
                RuleCode::E002,
                goal,
                format!(
                    "goal `{}` is owned by undeclared actor \"{}\"",
                    goal.id, goal.actor
                ),
            ),
            Some(actor) => {
                ucm.edges.insert((actor.name.clone(), goal.id.clone()));
                let expected = goal.kind.owner_kind();
                if actor.kind != expected {
                    out.goal(
                        RuleCode::E003,
                        goal,
                        format!(
                            "{} goal `{}` is owned by {} actor \"{}\", expected a {expected} actor",
                            goal.kind, goal.id, actor.kind, actor.name
                        ),
                    );
                }
            }
        }
        match model.diagnosis.activity(&goal.activity) {
            None => out.goal(
                RuleCode::E002,
                goal,
                format!(
                    "goal `{}` names undeclared activity \"{}\"",
                    goal.id, goal.activity
                ),
            ),
            Some(activity) if !activity.has_context(&goal.context) => out.goal(
                RuleCode::E002,
                goal,
                format!(
                    "goal `{}` names context \"{}\" which activity \"{}\" does not list",
                    goal.id, goal.context, goal.activity
                ),
            ),
            Some(_) => {}
        }
        if let Some(parent) = &goal.parent {
            if model.goal(parent).is_none() {
                out.goal(
                    RuleCode::E002,
                    goal,
                    format!("goal `{}` refines undeclared goal `{parent}`", goal.id),
                );
            }
        }
    }
    let mut actors: Vec<_> = model.actors.iter().collect();
    actors.sort();
    for actor in actors {
        let owns_goal = model.goals.iter().any(|g| g.actor == actor.name);
        if actor.kind != ActorKind::System && !owns_goal {
            out.push(
                RuleCode::W003,
                ElementRef::Actor(actor.name.clone()),
                format!("{} actor \"{}\" owns no goal", actor.kind, actor.name),
            );
        }
    }
    (ucm, out.findings)
}

/// Refinement cycles, each listed once starting from its smallest id.
fn refinement_cycles(model: &RequirementsModel) -> Vec<Vec<String>> {
    let parent: BTreeMap<&str, &str> = model
        .goals
        .iter()
        .filter_map(|g| g.parent.as_deref().map(|p| (g.id.as_str(), p)))
        .collect();
    let mut cycles: BTreeSet<Vec<String>> = BTreeSet::new();
    for start in parent.keys() {
        let mut path: Vec<&str> = vec![start];
        while let Some(&next) = parent.get(path.last().expect("non-empty")) {
            if let Some(pos) = path.iter().position(|&p| p == next) {
                let cycle = &path[pos..];
                let min = cycle
                    .iter()
                    .enumerate()
                    .min_by_key(|(_, id)| **id)
                    .map(|(i, _)| i)
                    .expect("non-empty");
                let rotated: Vec<String> = cycle[min..]
                    .iter()
                    .chain(&cycle[..min])
                    .map(|s| s.to_string())
                    .collect();
                cycles.insert(rotated);
                break;
            }
            path.push(next);
        }
    }
    cycles.into_iter().collect()
}

/// Checks a goal's parent link: kind and context.
fn check_parent(
    out: &mut Findings<'_>,
    model: &RequirementsModel,
    goal: &Goal,
    expected: GoalKind,
) {
    let Some(parent) = goal.parent.as_deref().and_then(|p| model.goal(p)) else {
        return;
    };
    if parent.kind != expected {
        out.goal(
            RuleCode::E006,
            goal,
            format!(
                "{} goal `{}` refines {} goal `{}`, expected a {expected} goal",
                goal.kind, goal.id, parent.kind, parent.id
            ),
        );
    } else if !goal.same_scope(parent) {
        out.goal(
            RuleCode::E007,
            goal,
            format!(
                "goal `{}` in \"{}\"/\"{}\" refines `{}` in \"{}\"/\"{}\"",
                goal.id, goal.activity, goal.context, parent.id, parent.activity, parent.context
            ),
        );
    }
}

/// Tactical goals grouped under their strategic goals, per context.
pub fn stage_associate_st(
    model: &RequirementsModel,
) -> (Vec<AssociationTable>, Vec<ValidationFinding>) {
    let mut out = Findings::new(model, ASSOC_STRATEGIC_TACTICAL);
    let mut in_cycle: BTreeSet<String> = BTreeSet::new();
    for cycle in refinement_cycles(model) {
        let mut shown = cycle.clone();
        shown.push(cycle[0].clone());
        out.push(
            RuleCode::E011,
            ElementRef::Goal(cycle[0].clone()),
            format!("refinement cycle {}", shown.join(" -> ")),
        );
        in_cycle.extend(cycle);
    }
    for goal in goals_by_id(model) {
        if in_cycle.contains(&goal.id) {
            continue;
        }
        match goal.kind {
            GoalKind::Strategic => {
                if let Some(parent) = &goal.parent {
                    out.goal(
                        RuleCode::E006,
                        goal,
                        format!("strategic goal `{}` cannot refine goal `{parent}`", goal.id),
                    );
                }
            }
            GoalKind::Tactical if goal.parent.is_none() => out.goal(
                RuleCode::E004,
                goal,
                format!("tactical goal `{}` refines no strategic goal", goal.id),
            ),
            GoalKind::Tactical => check_parent(&mut out, model, goal, GoalKind::Strategic),
            GoalKind::Informational => {}
        }
    }

    let mut tables = Vec::new();
    for (activity, context) in model.diagnosis.scopes() {
        let strategic = scope_goals(model, activity, context, GoalKind::Strategic);
        if strategic.is_empty() {
            continue;
        }
        let rows = strategic
            .iter()
            .map(|s| AssociationRow {
                parent: s.id.clone(),
                children: ids(&scoped_children(model, s, GoalKind::Tactical)),
            })
            .collect();
        tables.push(AssociationTable {
            activity: activity.to_owned(),
            context: context.to_owned(),
            strategic_goal: None,
            level: AssociationLevel::StrategicTactical,
            rows,
        });
    }
    (tables, out.findings)
}

/// Informational goals grouped under their tactical goals, per context
/// and strategic goal.
pub fn stage_associate_ti(
    model: &RequirementsModel,
) -> (Vec<AssociationTable>, Vec<ValidationFinding>) {
    let mut out = Findings::new(model, ASSOC_TACTICAL_INFORMATIONAL);
    for goal in model.goals_by_kind(GoalKind::Informational) {
        if goal.parent.is_none() {
            out.goal(
                RuleCode::E005,
                goal,
                format!("informational goal `{}` refines no tactical goal", goal.id),
            );
        } else {
            check_parent(&mut out, model, goal, GoalKind::Tactical);
        }
    }

    let mut tables = Vec::new();
    for (activity, context) in model.diagnosis.scopes() {
        for strategic in scope_goals(model, activity, context, GoalKind::Strategic) {
            let rows = scoped_children(model, strategic, GoalKind::Tactical)
                .into_iter()
                .map(|t| AssociationRow {
                    parent: t.id.clone(),
                    children: ids(&scoped_children(model, t, GoalKind::Informational)),
                })
                .collect();
            tables.push(AssociationTable {
                activity: activity.to_owned(),
                context: context.to_owned(),
                strategic_goal: Some(strategic.id.clone()),
                level: AssociationLevel::TacticalInformational,
                rows,
            });
        }
    }
    (tables, out.findings)
}

/// Verb, fact and dimension parameters of every informational goal.
pub fn stage_formalize(
    model: &RequirementsModel,
) -> (Vec<FormalizationTable>, Vec<ValidationFinding>) {
    let mut out = Findings::new(model, FORMALIZATION);
    for goal in model.goals_by_kind(GoalKind::Informational) {
        let Some(block) = &goal.formalization else {
            out.goal(
                RuleCode::E008,
                goal,
                format!("informational goal `{}` has no formalization", goal.id),
            );
            continue;
        };
        if block.fact_params.is_empty() {
            out.goal(
                RuleCode::E008,
                goal,
                format!("informational goal `{}` has no fact parameter", goal.id),
            );
        }
        if block.dimension_params.is_empty() {
            out.goal(
                RuleCode::W001,
                goal,
                format!(
                    "informational goal `{}` has no dimension parameter",
                    goal.id
                ),
            );
        }
        let facts: Vec<String> = block
            .fact_params
            .iter()
            .map(|p| normalize_name(p))
            .collect();
        let dims: Vec<String> = block
            .dimension_params
            .iter()
            .map(|p| normalize_name(p))
            .collect();
        for (list, what) in [(&facts, "fact"), (&dims, "dimension")] {
            let mut seen = BTreeSet::new();
            for name in list {
                if !seen.insert(name) {
                    out.goal(
                        RuleCode::E009,
                        goal,
                        format!(
                            "{what} parameter `{name}` appears twice in goal `{}`",
                            goal.id
                        ),
                    );
                }
            }
        }
        let fact_set: BTreeSet<&String> = facts.iter().collect();
        let clashes: BTreeSet<&String> = dims.iter().filter(|d| fact_set.contains(d)).collect();
        for name in clashes {
            out.goal(
                RuleCode::E009,
                goal,
                format!(
                    "parameter `{name}` is both a fact and a dimension parameter of goal `{}`",
                    goal.id
                ),
            );
        }
    }

    let mut tables = Vec::new();
    for (activity, context) in model.diagnosis.scopes() {
        for strategic in scope_goals(model, activity, context, GoalKind::Strategic) {
            for tactical in scoped_children(model, strategic, GoalKind::Tactical) {
                let rows = scoped_children(model, tactical, GoalKind::Informational)
                    .into_iter()
                    .filter_map(|g| {
                        g.formalization.as_ref().map(|f| FormalizationRow {
                            goal_id: g.id.clone(),
                            verb: f.verb.clone(),
                            fact_params: f.fact_params.clone(),
                            dimension_params: f.dimension_params.clone(),
                        })
                    })
                    .collect();
                tables.push(FormalizationTable {
                    activity: activity.to_owned(),
                    context: context.to_owned(),
                    strategic_goal: strategic.id.clone(),
                    tactical_goal: tactical.id.clone(),
                    rows,
                });
            }
        }
    }
    (tables, out.findings)
}

pub fn run_pipeline(
    model: &RequirementsModel,
    catalog: &Catalog,
) -> Result<PipelineResult, ResolveError> {
    run_pipeline_with(model, catalog, PipelineOptions::default())
}

/// Runs the analysis stages in `requires` order, stopping after the first
/// stage that reports an error.
pub fn run_pipeline_with(
    model: &RequirementsModel,
    catalog: &Catalog,
    options: PipelineOptions,
) -> Result<PipelineResult, ResolveError> {
    if let Some(missing) = BUILTIN_SYMBOLS.iter().find(|s| catalog.get(s).is_none()) {
        return Err(ResolveError::UnknownPattern(missing.to_string()));
    }
    let order = catalog::resolve_order(catalog, &BUILTIN_SYMBOLS)?;
    let mut result = PipelineResult::default();
    for stage in order {
        let mut findings = match stage.as_str() {
            DIAGNOSIS => {
                let (doc, findings) = stage_diagnose(model);
                result.diagnosis = Some(doc);
                findings
            }
            IDENTIFICATION => {
                let (ucm, findings) = stage_identify(model);
                result.use_cases = Some(ucm);
                findings
            }
            ASSOC_STRATEGIC_TACTICAL => {
                let (tables, findings) = stage_associate_st(model);
                result.assoc_st = Some(tables);
                findings
            }
            ASSOC_TACTICAL_INFORMATIONAL => {
                let (tables, findings) = stage_associate_ti(model);
                result.assoc_ti = Some(tables);
                findings
            }
            FORMALIZATION => {
                let (tables, findings) = stage_formalize(model);
                result.formalization = Some(tables);
                findings
            }
            // Patterns outside the built-in five carry no executable stage.
            _ => Vec::new(),
        };
        if options.strict {
            for f in &mut findings {
                f.severity = Severity::Error;
            }
        }
        let failed = findings.iter().any(|f| f.severity == Severity::Error);
        result.findings.extend(findings);
        result.stages_run.push(stage.clone());
        if failed {
            match stage.as_str() {
                DIAGNOSIS => result.diagnosis = None,
                IDENTIFICATION => result.use_cases = None,
                ASSOC_STRATEGIC_TACTICAL => result.assoc_st = None,
                ASSOC_TACTICAL_INFORMATIONAL => result.assoc_ti = None,
                FORMALIZATION => result.formalization = None,
                _ => {}
            }
            result.halted_at = Some(stage);
            break;
        }
    }
    Ok(result)
}
