mod common;

use std::collections::BTreeSet;

use fairtopk::klevel::{canonical_subset, find_fair_hd, KlevelConfig, KlevelOutcome};
use fairtopk::milp::{
    check_indicator_semantics, parse_lp, solve_feasibility, to_lp_string, verify_solution, window_admits, MilpModel, MilpOutcome,
    DEFAULT_NODE_BUDGET,
};
use fairtopk::model::{exact_score, Dataset, FairnessSpec, WeightBox};
use fairtopk::oracle::{brute_force_hd, feasible_subsets_hd, gen_random_instance};
use fairtopk::rational::q_frac;
use proptest::prelude::*;
use rand::Rng;

struct Case {
    ds: Dataset,
    spec: FairnessSpec,
    region: WeightBox,
}

fn case(seed: u64) -> Case {
    let mut rng = common::rng(seed);
    let n = rng.random_range(1..=10usize);
    let d = rng.random_range(3..=4usize);
    let ds = if rng.random_bool(0.3) {
        common::duplicated_instance(&mut rng, n, d)
    } else {
        gen_random_instance(seed, n, d, 0.1, rng.random_range(0.2..0.8)).unwrap()
    };
    let spec = common::random_spec(&mut rng, n, 3);
    let (_, _, region) = common::random_box(&mut rng, d);
    Case { ds, spec, region }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(120))]

    #[test]
    fn klevel_matches_oracle(seed in any::<u64>()) {
        let c = case(seed);
        let oracle = brute_force_hd(&c.ds, &c.spec, &c.region).unwrap();
        for workers in [1, 4] {
            let cfg = KlevelConfig { workers, seed, ..KlevelConfig::default() };
            let r = find_fair_hd(&c.ds, &c.spec, &c.region, &cfg).unwrap();
            match &r.outcome {
                KlevelOutcome::Found { weight, subset } => {
                    prop_assert!(oracle.is_found());
                    prop_assert!(common::witness_ok(&c.ds, &c.spec, &c.region, weight, Some(subset)));
                }
                KlevelOutcome::Infeasible => prop_assert!(!oracle.is_found()),
                KlevelOutcome::BudgetExhausted => prop_assert!(false, "no budget was set"),
            }
        }
    }

    #[test]
    fn milp_matches_oracle(seed in any::<u64>()) {
        let c = case(seed);
        let oracle = brute_force_hd(&c.ds, &c.spec, &c.region).unwrap();
        let m = MilpModel::build(&c.ds, &c.spec, &c.region).unwrap();
        let r = solve_feasibility(&m, seed, DEFAULT_NODE_BUDGET).unwrap();
        match &r.outcome {
            MilpOutcome::Found(sol) => {
                prop_assert!(oracle.is_found());
                prop_assert!(verify_solution(&m, sol).is_ok());
                let subset = sol.subset(&m);
                prop_assert!(common::witness_ok(&c.ds, &c.spec, &c.region, &sol.weight, Some(&subset)));
            }
            MilpOutcome::Infeasible => prop_assert!(!oracle.is_found()),
            MilpOutcome::BudgetExhausted => prop_assert!(false, "budget exhausted on a tiny instance"),
        }
    }

    #[test]
    fn exploration_reaches_every_feasible_subset(seed in any::<u64>()) {
        let c = case(seed);
        let cfg = KlevelConfig { explore_all: true, workers: 2, seed, ..KlevelConfig::default() };
        let r = find_fair_hd(&c.ds, &c.spec, &c.region, &cfg).unwrap();
        let brute: BTreeSet<Vec<usize>> = feasible_subsets_hd(&c.ds, c.spec.k, &c.region)
            .unwrap()
            .iter()
            .map(|ids| canonical_subset(&c.ds, ids).unwrap())
            .collect();
        let reached: BTreeSet<Vec<usize>> = r.reached.iter().cloned().collect();
        prop_assert_eq!(reached.len(), r.reached.len(), "a subset was reported twice");
        prop_assert_eq!(&reached, &brute);
        // expanded states are exactly the certified ones, each once
        prop_assert_eq!(r.stats.expansions, r.stats.visited);
        prop_assert_eq!(r.stats.visited as usize, r.reached.len());
    }

    #[test]
    fn pruning_never_changes_the_verdict(seed in any::<u64>()) {
        let c = case(seed);
        let on = find_fair_hd(&c.ds, &c.spec, &c.region, &KlevelConfig { seed, ..KlevelConfig::default() }).unwrap();
        let off = find_fair_hd(&c.ds, &c.spec, &c.region, &KlevelConfig { seed, prune: false, ..KlevelConfig::default() }).unwrap();
        prop_assert_eq!(on.outcome.is_found(), off.outcome.is_found());
    }

    #[test]
    fn indicator_window_is_exact(seed in any::<u64>()) {
        let mut rng = common::rng(seed);
        let d = rng.random_range(1..=4usize);
        let w = common::grid_weight(&mut rng, d, 1000);
        let ds = gen_random_instance(seed, 1, d, 0.001, 0.5).unwrap();
        let score = exact_score(&w, ds.candidate(0)).unwrap();
        let lambda = if rng.random_bool(0.2) { score.clone() } else { q_frac(rng.random_range(0..=1000), 1000) };
        for delta in [false, true] {
            prop_assert_eq!(window_admits(&score, &lambda, delta), check_indicator_semantics(&score, &lambda, delta));
        }
    }

    #[test]
    fn lp_file_round_trips(seed in any::<u64>()) {
        let c = case(seed);
        let m = MilpModel::build(&c.ds, &c.spec, &c.region).unwrap();
        let text = to_lp_string(&m).unwrap();
        let back = parse_lp(&text).unwrap();
        prop_assert_eq!(to_lp_string(&back).unwrap(), text);
        prop_assert_eq!(back.ids(), m.ids());
        prop_assert_eq!(back.spec(), m.spec());
    }
}

#[test]
fn ties_admit_every_fair_completion() {
    // four identical candidates, two protected: any protected count in
    // [0, 2] is reachable for k = 2 at every weight
    let rows: Vec<(Vec<f64>, bool)> = (0..4).map(|i| (vec![0.5, 0.5, 0.5], i < 2)).collect();
    let ds = Dataset::from_scores(6, &rows).unwrap();
    let region = WeightBox::simplex(3);
    for (lower, upper) in [(0, 0), (1, 1), (2, 2), (0, 2)] {
        let spec = FairnessSpec::new(2, lower, upper).unwrap();
        let m = MilpModel::build(&ds, &spec, &region).unwrap();
        let r = solve_feasibility(&m, 0, DEFAULT_NODE_BUDGET).unwrap();
        assert!(r.outcome.is_found(), "[{lower}, {upper}]");
        let k = find_fair_hd(&ds, &spec, &region, &KlevelConfig::default()).unwrap();
        assert!(k.outcome.is_found(), "[{lower}, {upper}]");
    }
}

#[test]
fn budget_is_reported_not_infeasible() {
    let spec = FairnessSpec::new(3, 3, 3).unwrap();
    let region = WeightBox::simplex(3);
    let (ds, full) = (0..200)
        .map(|seed| gen_random_instance(seed, 10, 3, 0.1, 0.2).unwrap())
        .map(|ds| {
            let r = find_fair_hd(&ds, &spec, &region, &KlevelConfig::default()).unwrap();
            (ds, r)
        })
        .find(|(_, r)| !r.outcome.is_found() && r.stats.expansions > 2)
        .expect("an infeasible instance that needs several expansions");
    assert_eq!(full.outcome, KlevelOutcome::Infeasible);
    let tiny = find_fair_hd(&ds, &spec, &region, &KlevelConfig { budget: Some(1), ..KlevelConfig::default() }).unwrap();
    assert_eq!(tiny.outcome, KlevelOutcome::BudgetExhausted);
    let m = MilpModel::build(&ds, &spec, &region).unwrap();
    assert_eq!(solve_feasibility(&m, 0, 0).unwrap().outcome, MilpOutcome::BudgetExhausted);
}
