//! Domain types for a decisional information system's requirements:
//! the organization diagnosis, its actors, and the three-level goal
//! hierarchy with the formalization of informational goals.

use std::collections::BTreeMap;
use std::fmt;

use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ActorKind {
    Strategic,
    Tactical,
    System,
}

impl ActorKind {
    pub fn keyword(self) -> &'static str {
        match self {
            ActorKind::Strategic => "strategic",
            ActorKind::Tactical => "tactical",
            ActorKind::System => "system",
        }
    }
}

impl fmt::Display for ActorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.keyword())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum GoalKind {
    Strategic,
    Tactical,
    Informational,
}

impl GoalKind {
    pub const ALL: [GoalKind; 3] = [
        GoalKind::Strategic,
        GoalKind::Tactical,
        GoalKind::Informational,
    ];

    pub fn keyword(self) -> &'static str {
        match self {
            GoalKind::Strategic => "strategic",
            GoalKind::Tactical => "tactical",
            GoalKind::Informational => "informational",
        }
    }

    /// The kind a parent goal must have, `None` for top-level goals.
    pub fn expected_parent(self) -> Option<GoalKind> {
        match self {
            GoalKind::Strategic => None,
            GoalKind::Tactical => Some(GoalKind::Strategic),
            GoalKind::Informational => Some(GoalKind::Tactical),
        }
    }

    /// The actor kind allowed to own goals of this kind.
    pub fn owner_kind(self) -> ActorKind {
        match self {
            GoalKind::Strategic => ActorKind::Strategic,
            GoalKind::Tactical | GoalKind::Informational => ActorKind::Tactical,
        }
    }
}

impl fmt::Display for GoalKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.keyword())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Activity {
    pub name: String,
    pub contexts: Vec<String>,
}

impl Activity {
    pub fn new(
        name: impl Into<String>,
        contexts: impl IntoIterator<Item = impl Into<String>>,
    ) -> Self {
        Activity {
            name: name.into(),
            contexts: contexts.into_iter().map(Into::into).collect(),
        }
    }

    pub fn has_context(&self, context: &str) -> bool {
        self.contexts.iter().any(|c| c == context)
    }
}

/// The business of the organization with its activities and their contexts.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct BusinessDiagnosis {
    pub business_name: String,
    pub activities: Vec<Activity>,
}

impl BusinessDiagnosis {
    pub fn activity(&self, name: &str) -> Option<&Activity> {
        self.activities.iter().find(|a| a.name == name)
    }

    pub fn has_context(&self, activity: &str, context: &str) -> bool {
        self.activity(activity)
            .is_some_and(|a| a.has_context(context))
    }

    /// All (activity, context) pairs in declaration order.
    pub fn scopes(&self) -> impl Iterator<Item = (&str, &str)> {
        self.activities.iter().flat_map(|a| {
            a.contexts
                .iter()
                .map(move |c| (a.name.as_str(), c.as_str()))
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Actor {
    pub name: String,
    pub kind: ActorKind,
}

impl Actor {
    pub fn new(name: impl Into<String>, kind: ActorKind) -> Self {
        Actor {
            name: name.into(),
            kind,
        }
    }
}

/// Verb, fact parameters and dimension parameters of an informational goal.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct FormalizationBlock {
    pub verb: String,
    pub fact_params: Vec<String>,
    pub dimension_params: Vec<String>,
}

impl FormalizationBlock {
    pub fn new(
        verb: impl Into<String>,
        facts: impl IntoIterator<Item = impl Into<String>>,
        dimensions: impl IntoIterator<Item = impl Into<String>>,
    ) -> Self {
        FormalizationBlock {
            verb: verb.into(),
            fact_params: facts.into_iter().map(Into::into).collect(),
            dimension_params: dimensions.into_iter().map(Into::into).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Goal {
    pub id: String,
    pub kind: GoalKind,
    pub statement: String,
    pub actor: String,
    pub activity: String,
    pub context: String,
    pub parent: Option<String>,
    pub formalization: Option<FormalizationBlock>,
}

impl Goal {
    pub fn new(
        id: impl Into<String>,
        kind: GoalKind,
        statement: impl Into<String>,
        actor: impl Into<String>,
        activity: impl Into<String>,
        context: impl Into<String>,
    ) -> Self {
        Goal {
            id: id.into(),
            kind,
            statement: statement.into(),
            actor: actor.into(),
            activity: activity.into(),
            context: context.into(),
            parent: None,
            formalization: None,
        }
    }

    pub fn refining(mut self, parent: impl Into<String>) -> Self {
        self.parent = Some(parent.into());
        self
    }

    pub fn formalized(mut self, block: FormalizationBlock) -> Self {
        self.formalization = Some(block);
        self
    }

    pub fn same_scope(&self, other: &Goal) -> bool {
        self.activity == other.activity && self.context == other.context
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Error,
    Warning,
}

impl fmt::Display for Severity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Severity::Error => "error",
            Severity::Warning => "warning",
        })
    }
}

/// 1-based position in a source document.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct SourceLocation {
    pub line: usize,
    pub column: usize,
}

impl fmt::Display for SourceLocation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.column)
    }
}

/// A model element that findings and source locations can point at.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ElementRef {
    Business,
    Activity(String),
    Context { activity: String, context: String },
    Actor(String),
    Goal(String),
}

impl fmt::Display for ElementRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ElementRef::Business => f.write_str("business"),
            ElementRef::Activity(name) => write!(f, "activity:{name}"),
            ElementRef::Context { activity, context } => write!(f, "context:{activity}/{context}"),
            ElementRef::Actor(name) => write!(f, "actor:{name}"),
            ElementRef::Goal(id) => write!(f, "goal:{id}"),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SourceMap {
    pub file: Option<String>,
    entries: BTreeMap<ElementRef, SourceLocation>,
}

impl SourceMap {
    /// Records the first location seen for an element.
    pub fn record(&mut self, element: ElementRef, location: SourceLocation) {
        self.entries.entry(element).or_insert(location);
    }

    pub fn get(&self, element: &ElementRef) -> Option<SourceLocation> {
        self.entries.get(element).copied()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// A whole requirements document.
///
/// Equality is semantic: actor and goal declaration order and the source
/// map are ignored, activity and context order is not.
#[derive(Debug, Clone, Default)]
pub struct RequirementsModel {
    pub diagnosis: BusinessDiagnosis,
    pub actors: Vec<Actor>,
    pub goals: Vec<Goal>,
    pub source_map: SourceMap,
}

impl PartialEq for RequirementsModel {
    fn eq(&self, other: &Self) -> bool {
        fn sorted<T: Ord + Clone>(items: &[T]) -> Vec<T> {
            let mut v = items.to_vec();
            v.sort();
            v
        }
        self.diagnosis == other.diagnosis
            && sorted(&self.actors) == sorted(&other.actors)
            && sorted(&self.goals) == sorted(&other.goals)
    }
}

impl Eq for RequirementsModel {}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ModelError {
    #[error("unknown goal `{0}`")]
    UnknownGoal(String),
    #[error("goal `{id}` is {found}, expected {expected}")]
    WrongKind {
        id: String,
        expected: GoalKind,
        found: GoalKind,
    },
    #[error("broken refinement chain at goal `{id}`: {reason}")]
    BrokenChain { id: String, reason: String },
}

/// The path from an informational goal up to the business.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TraceChain {
    pub informational_goal_id: String,
    pub tactical_goal_id: String,
    pub strategic_goal_id: String,
    pub context: String,
    pub activity: String,
    pub business: String,
}

impl TraceChain {
    /// Bottom-up `(label, value)` pairs.
    pub fn links(&self) -> [(&'static str, &str); 6] {
        [
            ("informational", &self.informational_goal_id),
            ("tactical", &self.tactical_goal_id),
            ("strategic", &self.strategic_goal_id),
            ("context", &self.context),
            ("activity", &self.activity),
            ("business", &self.business),
        ]
    }
}

impl RequirementsModel {
    pub fn new(diagnosis: BusinessDiagnosis) -> Self {
        RequirementsModel {
            diagnosis,
            ..Default::default()
        }
    }

    pub fn actor(&self, name: &str) -> Option<&Actor> {
        self.actors.iter().find(|a| a.name == name)
    }

    pub fn goal(&self, id: &str) -> Option<&Goal> {
        self.goals.iter().find(|g| g.id == id)
    }

    pub fn find_goal(&self, id: &str) -> Result<&Goal, ModelError> {
        self.goal(id)
            .ok_or_else(|| ModelError::UnknownGoal(id.to_owned()))
    }

    /// Goals of one kind ordered by id.
    pub fn goals_by_kind(&self, kind: GoalKind) -> Vec<&Goal> {
        let mut goals: Vec<&Goal> = self.goals.iter().filter(|g| g.kind == kind).collect();
        goals.sort_by(|a, b| a.id.cmp(&b.id));
        goals
    }

    /// Direct children of a goal ordered by id.
    pub fn children_of(&self, id: &str) -> Vec<&Goal> {
        let mut goals: Vec<&Goal> = self
            .goals
            .iter()
            .filter(|g| g.parent.as_deref() == Some(id))
            .collect();
        goals.sort_by(|a, b| a.id.cmp(&b.id));
        goals
    }

    pub fn trace(&self, id: &str) -> Result<TraceChain, ModelError> {
        let info = self.find_goal(id)?;
        if info.kind != GoalKind::Informational {
            return Err(ModelError::WrongKind {
                id: id.to_owned(),
                expected: GoalKind::Informational,
                found: info.kind,
            });
        }
        let tactical = self.parent_link(info)?;
        let strategic = self.parent_link(tactical)?;
        Ok(TraceChain {
            informational_goal_id: info.id.clone(),
            tactical_goal_id: tactical.id.clone(),
            strategic_goal_id: strategic.id.clone(),
            context: info.context.clone(),
            activity: info.activity.clone(),
            business: self.diagnosis.business_name.clone(),
        })
    }

    fn parent_link(&self, child: &Goal) -> Result<&Goal, ModelError> {
        let broken = |reason: String| ModelError::BrokenChain {
            id: child.id.clone(),
            reason,
        };
        let expected = child
            .kind
            .expected_parent()
            .ok_or_else(|| broken("strategic goals have no parent".into()))?;
        let parent_id = child
            .parent
            .as_deref()
            .ok_or_else(|| broken("no parent goal".into()))?;
        let parent = self
            .goal(parent_id)
            .ok_or_else(|| broken(format!("parent `{parent_id}` does not exist")))?;
        if parent.kind != expected {
            return Err(broken(format!(
                "parent `{parent_id}` is {}, expected {expected}",
                parent.kind
            )));
        }
        if !child.same_scope(parent) {
            return Err(broken(format!(
                "parent `{parent_id}` belongs to another context"
            )));
        }
        Ok(parent)
    }
}

/// Canonical form of a parameter name: lowercase, whitespace runs
/// collapsed to a single underscore.
pub fn normalize_name(name: &str) -> String {
    name.split_whitespace()
        .map(str::to_lowercase)
        .collect::<Vec<_>>()
        .join("_")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_model() -> RequirementsModel {
        let mut m = RequirementsModel::new(BusinessDiagnosis {
            business_name: "B".into(),
            activities: vec![Activity::new("A", ["C"])],
        });
        m.actors = vec![
            Actor::new("boss", ActorKind::Strategic),
            Actor::new("lead", ActorKind::Tactical),
        ];
        m.goals = vec![
            Goal::new("S1", GoalKind::Strategic, "s", "boss", "A", "C"),
            Goal::new("T2", GoalKind::Tactical, "t", "lead", "A", "C").refining("S1"),
            Goal::new("T1", GoalKind::Tactical, "t", "lead", "A", "C").refining("S1"),
            Goal::new("I1", GoalKind::Informational, "i", "lead", "A", "C")
                .refining("T1")
                .formalized(FormalizationBlock::new("analyze", ["amount"], ["store"])),
        ];
        m
    }

    #[test]
    fn find_goal_hits_and_misses() {
        let m = small_model();
        assert_eq!(m.find_goal("S1").unwrap().kind, GoalKind::Strategic);
        assert_eq!(
            RequirementsModel::default().find_goal("G1"),
            Err(ModelError::UnknownGoal("G1".into()))
        );
    }

    #[test]
    fn goals_by_kind_sorted_by_id() {
        let m = small_model();
        let ids: Vec<_> = m
            .goals_by_kind(GoalKind::Tactical)
            .iter()
            .map(|g| g.id.as_str())
            .collect();
        assert_eq!(ids, ["T1", "T2"]);
        assert!(RequirementsModel::default()
            .goals_by_kind(GoalKind::Informational)
            .is_empty());
    }

    #[test]
    fn trace_walks_to_business() {
        let chain = small_model().trace("I1").unwrap();
        assert_eq!(chain.tactical_goal_id, "T1");
        assert_eq!(chain.strategic_goal_id, "S1");
        assert_eq!(chain.business, "B");
    }

    #[test]
    fn trace_errors() {
        let mut m = small_model();
        assert!(matches!(m.trace("S1"), Err(ModelError::WrongKind { .. })));
        assert!(matches!(m.trace("nope"), Err(ModelError::UnknownGoal(_))));
        m.goals.retain(|g| g.id != "T1");
        assert!(matches!(m.trace("I1"), Err(ModelError::BrokenChain { .. })));
    }

    #[test]
    fn equality_ignores_goal_order_and_source_map() {
        let a = small_model();
        let mut b = small_model();
        b.goals.reverse();
        b.actors.reverse();
        b.source_map
            .record(ElementRef::Business, SourceLocation { line: 1, column: 1 });
        assert_eq!(a, b);
        b.goals[0].statement.push('!');
        assert_ne!(a, b);
    }

    #[test]
    fn normalization() {
        assert_eq!(normalize_name("Order  Date"), "order_date");
        assert_eq!(normalize_name(" amount\t"), "amount");
        assert_eq!(normalize_name("Store_ID"), "store_id");
    }
}
