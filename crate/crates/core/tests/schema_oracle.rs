mod common;

use std::collections::{BTreeMap, BTreeSet};

use common::{
    check_partitions, check_traces, observed_schemas, oracle_schemas, random_valid_model, retail,
};
use disreqc::schema::shared_dimensions;
use disreqc::{build_star_schemas, builtin_catalog, run_pipeline, GoalKind};
use proptest::prelude::*;

fn set(items: &[&str]) -> BTreeSet<String> {
    items.iter().map(|s| s.to_string()).collect()
}

#[test]
fn retail_matches_hand_computation() {
    let schemas = build_star_schemas(&retail()).unwrap();
    let facts: Vec<&str> = schemas.iter().map(|s| s.fact.name.as_str()).collect();
    assert_eq!(
        facts,
        [
            "fact_sales_by_product",
            "fact_sales_by_store",
            "fact_supplier_performance"
        ]
    );

    let measures = |i: usize| -> Vec<&str> {
        schemas[i]
            .fact
            .measures
            .iter()
            .map(|m| m.name.as_str())
            .collect()
    };
    assert_eq!(measures(0), ["margin", "amount"]);
    assert_eq!(measures(1), ["amount", "quantity"]);
    assert_eq!(measures(2), ["cost", "quantity", "delay_days"]);
    assert_eq!(schemas[0].fact.dimension_refs, ["dim_product", "dim_month"]);
    assert_eq!(
        schemas[1].fact.dimension_refs,
        ["dim_store", "dim_month", "dim_product"]
    );
    assert_eq!(
        schemas[2].fact.dimension_refs,
        ["dim_supplier", "dim_product", "dim_month"]
    );

    let sources: BTreeMap<&str, &BTreeSet<String>> = schemas
        .iter()
        .flat_map(|s| {
            s.dimensions
                .iter()
                .map(|d| (d.name.as_str(), &d.source_goals))
        })
        .collect();
    assert_eq!(sources.len(), 4);
    assert_eq!(
        *sources["dim_month"],
        set(&[
            "monthly_amount",
            "monthly_quantity",
            "product_margin",
            "supplier_delay"
        ])
    );
    assert_eq!(
        *sources["dim_product"],
        set(&["monthly_quantity", "order_cost", "product_margin"])
    );
    assert_eq!(*sources["dim_store"], set(&["monthly_amount"]));
    assert_eq!(
        *sources["dim_supplier"],
        set(&["order_cost", "supplier_delay"])
    );

    let all = vec![
        "fact_sales_by_product".to_owned(),
        "fact_sales_by_store".to_owned(),
        "fact_supplier_performance".to_owned(),
    ];
    assert_eq!(
        shared_dimensions(&schemas),
        [
            ("dim_month".to_owned(), all.clone()),
            ("dim_product".to_owned(), all)
        ]
    );
}

#[test]
fn retail_matches_oracle() {
    let model = retail();
    assert_eq!(
        observed_schemas(&build_star_schemas(&model).unwrap()),
        oracle_schemas(&model)
    );
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn schemas_match_oracle(seed in any::<u64>()) {
        let model = random_valid_model(seed, 20);
        let schemas = build_star_schemas(&model).unwrap();
        prop_assert_eq!(observed_schemas(&schemas), oracle_schemas(&model));
    }

    #[test]
    fn every_parameter_is_covered(seed in any::<u64>()) {
        let model = random_valid_model(seed, 20);
        let schemas = build_star_schemas(&model).unwrap();
        let columns: BTreeSet<String> = schemas
            .iter()
            .flat_map(|s| {
                s.fact.measures.iter().map(|m| m.name.clone())
                    .chain(s.fact.dimension_refs.iter().cloned())
            })
            .collect();
        for g in model.goals_by_kind(GoalKind::Informational) {
            let block = g.formalization.as_ref().unwrap();
            for p in &block.fact_params {
                prop_assert!(columns.contains(&p.to_lowercase()), "{} missing", p);
            }
            for p in &block.dimension_params {
                prop_assert!(columns.contains(&format!("dim_{}", p.to_lowercase())), "{} missing", p);
            }
        }
    }

    #[test]
    fn partitions_and_traces_hold(seed in any::<u64>()) {
        let model = random_valid_model(seed, 20);
        let result = run_pipeline(&model, &builtin_catalog()).unwrap();
        check_partitions(&model, &result).map_err(TestCaseError::fail)?;
        let schemas = build_star_schemas(&model).unwrap();
        check_traces(&model, &schemas).map_err(TestCaseError::fail)?;
    }
}
