mod common;

use std::collections::BTreeSet;

use common::random_valid_model;
use disreqc::model::{normalize_name, ModelError};
use disreqc::{builtin_catalog, run_pipeline, GoalKind};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn generated_models_are_valid(seed in any::<u64>()) {
        let model = random_valid_model(seed, 20);
        prop_assert!(model.goals.len() <= 20);
        let result = run_pipeline(&model, &builtin_catalog()).unwrap();
        prop_assert!(!result.has_errors(), "{:?}", result.findings);
    }

    #[test]
    fn goal_kinds_partition_the_goals(seed in any::<u64>()) {
        let model = random_valid_model(seed, 20);
        let mut seen = BTreeSet::new();
        for kind in GoalKind::ALL {
            for g in model.goals_by_kind(kind) {
                prop_assert_eq!(g.kind, kind);
                prop_assert!(seen.insert(g.id.clone()), "{} listed twice", g.id);
            }
        }
        let all: BTreeSet<String> = model.goals.iter().map(|g| g.id.clone()).collect();
        prop_assert_eq!(seen, all);
    }

    #[test]
    fn chains_read_informational_tactical_strategic(seed in any::<u64>()) {
        let model = random_valid_model(seed, 20);
        for g in model.goals_by_kind(GoalKind::Informational) {
            let chain = model.trace(&g.id).unwrap();
            prop_assert_eq!(&chain.informational_goal_id, &g.id);
            prop_assert_eq!(model.goal(&chain.tactical_goal_id).unwrap().kind, GoalKind::Tactical);
            prop_assert_eq!(model.goal(&chain.strategic_goal_id).unwrap().kind, GoalKind::Strategic);
            prop_assert_eq!(&chain.business, &model.diagnosis.business_name);
        }
    }

    #[test]
    fn parents_share_the_context(seed in any::<u64>()) {
        let model = random_valid_model(seed, 20);
        for g in &model.goals {
            if let Some(p) = &g.parent {
                let parent = model.goal(p).unwrap();
                prop_assert_eq!(&g.activity, &parent.activity);
                prop_assert_eq!(&g.context, &parent.context);
            }
        }
    }

    #[test]
    fn normalization_is_idempotent(name in "[ a-zA-Z0-9_\t]{0,24}") {
        let once = normalize_name(&name);
        prop_assert_eq!(normalize_name(&once), once.clone());
        prop_assert!(!once.chars().any(char::is_whitespace));
    }
}

#[test]
fn trace_errors() {
    let mut model = common::retail();
    assert!(matches!(
        model.trace("nope"),
        Err(ModelError::UnknownGoal(_))
    ));
    assert!(matches!(
        model.trace("increase_revenue"),
        Err(ModelError::WrongKind { .. })
    ));
    model.goals.retain(|g| g.id != "sales_by_store");
    assert!(matches!(
        model.trace("monthly_amount"),
        Err(ModelError::BrokenChain { .. })
    ));
}
