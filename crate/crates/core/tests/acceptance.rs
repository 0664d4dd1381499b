//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero when any criterion fails.

mod common;

use std::collections::BTreeSet;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::Instant;

use common::kinetic_schedule::run_schedule;
use common::solvers::run_all;
use fairtopk::app::{run_bench, synthetic_dataset, Algorithm, BenchConfig, BenchMetrics};
use fairtopk::geometry::k_skyband;
use fairtopk::ingest::{ingest_csv, DerivedColumn, IngestionSpec};
use fairtopk::klevel::{find_fair_hd, KlevelConfig};
use fairtopk::lp::coordinate_range;
use fairtopk::milp::{check_indicator_semantics, window_admits};
use fairtopk::model::{exact_score, top_k, Dataset, FairnessSpec, WeightBox, WeightVector};
use fairtopk::oracle::{
    brute_force_2d, brute_force_hd, feasible_subsets_hd, gen_random_instance, pad_dominated, pad_dominating,
};
use fairtopk::rational::q_frac;
use fairtopk::Control;
use rand::Rng;
use rand_distr::Exp1;

type Check = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn instance_2d(seed: u64) -> (Dataset, FairnessSpec, WeightBox) {
    let mut rng = common::rng(seed);
    let n = rng.random_range(1..=12usize);
    let ds = gen_random_instance(seed, n, 2, 0.05, rng.random_range(0.2..0.8)).unwrap();
    let spec = common::random_spec(&mut rng, n, 4);
    let (_, _, region) = common::random_box(&mut rng, 2);
    (ds, spec, region)
}

fn instance_hd(seed: u64) -> (Dataset, FairnessSpec, WeightBox) {
    let mut rng = common::rng(seed ^ 0x5eed);
    let n = rng.random_range(1..=10usize);
    let d = rng.random_range(3..=4usize);
    let ds = gen_random_instance(seed, n, d, 0.1, rng.random_range(0.2..0.8)).unwrap();
    let spec = common::random_spec(&mut rng, n, 3);
    let (_, _, region) = common::random_box(&mut rng, d);
    (ds, spec, region)
}

const SUITE_2D: u64 = 500;
const SUITE_HD: u64 = 300;

fn cross_solver() -> Check {
    let (mut found, mut witnesses) = (0, 0);
    for seed in 0..SUITE_2D {
        let (ds, spec, region) = instance_2d(seed);
        let v = run_all(&ds, &spec, &region, &[1], seed).map_err(|e| format!("2-D seed {seed}: {e}"))?;
        ensure(v.agree(), || format!("2-D seed {seed}: verdicts disagree {v:?}"))?;
        found += v.oracle as usize;
        witnesses += v.witnesses;
    }
    let mut found_hd = 0;
    for seed in 0..SUITE_HD {
        let (ds, spec, region) = instance_hd(seed);
        let v = run_all(&ds, &spec, &region, &[1], seed).map_err(|e| format!("d>2 seed {seed}: {e}"))?;
        ensure(v.agree(), || format!("d>2 seed {seed}: verdicts disagree {v:?}"))?;
        found_hd += v.oracle as usize;
        witnesses += v.witnesses;
    }
    Ok(format!(
        "{SUITE_2D} 2-D instances ({found} feasible), {SUITE_HD} d in {{3,4}} instances ({found_hd} feasible), {witnesses} witnesses re-verified"
    ))
}

fn degeneracy() -> Check {
    let mut rng = common::rng(77);
    let (mut cases, mut simultaneous) = (0, 0);
    let half_in = WeightBox::from_epsilon_box(&WeightVector::parse("0.4,0.6").unwrap(), &q_frac(1, 5)).unwrap();
    let half_out = WeightBox::from_epsilon_box(&WeightVector::parse("0.2,0.8").unwrap(), &q_frac(1, 10)).unwrap();
    for n in 3..=9usize {
        let mut masks = vec![1u32 << (n - 1), 1, 0b101];
        masks.extend((0..8).map(|_| rng.random_range(0..1u32 << n)));
        for mask in masks {
            let ds = common::concurrent_lines(n, mask);
            for k in 1..=n.min(4) {
                for lower in 0..=k {
                    for upper in lower..=k {
                        let spec = FairnessSpec::new(k, lower, upper).unwrap();
                        for region in [WeightBox::simplex(2), half_in.clone(), half_out.clone()] {
                            let v = run_all(&ds, &spec, &region, &[1, 4], 1)
                                .map_err(|e| format!("concurrent n={n} mask={mask:b} k={k}: {e}"))?;
                            ensure(v.agree(), || format!("concurrent n={n} mask={mask:b} {spec:?}: {v:?}"))?;
                            cases += 1;
                            simultaneous += v.simultaneous_events;
                        }
                    }
                }
            }
        }
        // the T1 pattern only becomes fair where every line meets
        let ds = common::concurrent_lines(n, 1 << (n - 1));
        let spec = FairnessSpec::new(1, 1, 1).unwrap();
        let v = run_all(&ds, &spec, &WeightBox::simplex(2), &[1], 0)?;
        ensure(v.oracle && v.simultaneous_events > 0, || format!("n={n}: simultaneous branch not taken ({v:?})"))?;
    }
    for seed in 0..150u64 {
        let d = if seed % 2 == 0 { 2 } else { 3 };
        let n = rng.random_range(2..=10usize);
        let ds = common::duplicated_instance(&mut rng, n, d);
        let spec = common::random_spec(&mut rng, n, 3);
        let (_, _, region) = common::random_box(&mut rng, d);
        let v = run_all(&ds, &spec, &region, &[1], seed).map_err(|e| format!("duplicates seed {seed}: {e}"))?;
        ensure(v.agree(), || format!("duplicates seed {seed}: {v:?}"))?;
        cases += 1;
        simultaneous += v.simultaneous_events;
    }
    ensure(simultaneous > 0, || "simultaneous-event branch never exercised".into())?;
    Ok(format!("{cases} degenerate cases agree; {simultaneous} simultaneous sweep events"))
}

fn indicator_window() -> Check {
    let mut rng = common::rng(5150);
    let mut failures = 0;
    let mut equal_cases = 0;
    for i in 0..10_000u64 {
        let d = rng.random_range(1..=4usize);
        let w = common::grid_weight(&mut rng, d, 1000);
        let p: Vec<f64> = (0..d).map(|_| rng.random_range(0..=1000) as f64 / 1000.0).collect();
        let ds = Dataset::from_scores(6, &[(p, false)]).unwrap();
        let score = exact_score(&w, ds.candidate(0)).unwrap();
        let lambda = if i % 5 == 0 {
            equal_cases += 1;
            score.clone()
        } else {
            q_frac(rng.random_range(0..=1000), 1000)
        };
        for delta in [false, true] {
            if window_admits(&score, &lambda, delta) != check_indicator_semantics(&score, &lambda, delta) {
                failures += 1;
            }
        }
    }
    ensure(failures == 0, || format!("{failures} mismatches"))?;
    Ok(format!("10000 triples ({equal_cases} at the threshold), 0 failures"))
}

fn kinetic() -> Check {
    let mut advances = 0;
    for seed in 0..200 {
        advances += run_schedule(seed)?;
    }
    Ok(format!("200 schedules, {advances} events checked against naive scans"))
}

fn workers() -> Check {
    let mut checked = 0;
    for seed in 0..SUITE_2D {
        let (ds, spec, region) = instance_2d(seed);
        let v = run_all(&ds, &spec, &region, &[1, 4, 16], seed).map_err(|e| format!("2-D seed {seed}: {e}"))?;
        ensure(v.agree(), || format!("2-D seed {seed}: {v:?}"))?;
        checked += 1;
    }
    for seed in 0..SUITE_HD {
        let (ds, spec, region) = instance_hd(seed);
        let v = run_all(&ds, &spec, &region, &[1, 4, 16], seed).map_err(|e| format!("d>2 seed {seed}: {e}"))?;
        ensure(v.agree(), || format!("d>2 seed {seed}: {v:?}"))?;
        checked += 1;
    }

    // high contention: many feasible states and no early exit
    let ds = gen_random_instance(4242, 15, 3, 0.05, 0.5).unwrap();
    let region = WeightBox::simplex(3);
    let spec = FairnessSpec::new(4, 0, 4).unwrap();
    let brute: BTreeSet<Vec<usize>> = feasible_subsets_hd(&ds, 4, &region)
        .unwrap()
        .iter()
        .map(|ids| fairtopk::klevel::canonical_subset(&ds, ids).unwrap())
        .collect();
    let explore = KlevelConfig { workers: 16, explore_all: true, ..KlevelConfig::default() };
    let tight = FairnessSpec::new(4, 4, 4).unwrap();
    let base = find_fair_hd(&ds, &tight, &region, &KlevelConfig::default()).unwrap();
    for run in 0..100u64 {
        let r = find_fair_hd(&ds, &spec, &region, &KlevelConfig { seed: run, ..explore.clone() }).unwrap();
        let reached: BTreeSet<Vec<usize>> = r.reached.into_iter().collect();
        ensure(reached == brute, || format!("run {run}: reached {} of {} states", reached.len(), brute.len()))?;
        let t = find_fair_hd(&ds, &tight, &region, &KlevelConfig { workers: 16, seed: run, ..KlevelConfig::default() }).unwrap();
        ensure(t.outcome.is_found() == base.outcome.is_found(), || format!("run {run}: verdict flipped"))?;
        if !base.outcome.is_found() {
            ensure(t.stats.visited == base.stats.visited, || format!("run {run}: visited {} vs {}", t.stats.visited, base.stats.visited))?;
        }
    }
    Ok(format!(
        "{checked} instances agree for workers 1/4/16; 100 contended runs reached all {} states",
        brute.len()
    ))
}

fn skyband() -> Check {
    let mut rng = common::rng(31337);
    let mut checks = 0;
    for seed in 0..40u64 {
        let d = rng.random_range(2..=4usize);
        let n = rng.random_range(50..=500usize);
        let ds = gen_random_instance(seed, n, d, 0.01, 0.5).unwrap();
        for k in [1, 5, 10, 20] {
            let band: BTreeSet<usize> = k_skyband(&ds, k).into_iter().collect();
            for _ in 0..100 {
                let e: Vec<f64> = (0..d).map(|_| rng.sample::<f64, _>(Exp1)).collect();
                let sum: f64 = e.iter().sum();
                let w = WeightVector::from_f64s(&e.iter().map(|x| x / sum).collect::<Vec<_>>()).unwrap();
                let r = top_k(&ds, &w, k).unwrap();
                if let Some(bad) = r.strictly_in.iter().chain(&r.tied_pool).find(|id| !band.contains(id)) {
                    return Err(format!("seed {seed} k={k}: candidate {bad} outside the skyband"));
                }
                checks += 1;
            }
        }
    }
    Ok(format!("{checks} weight vectors, 0 violations"))
}

fn gadgets() -> Check {
    let mut rng = common::rng(909);
    let mut cases = 0;
    for seed in 0..120u64 {
        let d = if seed % 3 == 0 { 3 } else { 2 };
        let n = rng.random_range(2..=8usize);
        let ds = common::interior_instance(&mut rng, n, d);
        let g = rng.random_range(1..=3usize);
        let k = rng.random_range(1..=n.min(4 - g.min(3)).max(1));
        let lower = rng.random_range(0..=k);
        let upper = rng.random_range(lower..=k);
        let spec = FairnessSpec::new(k, lower, upper).unwrap();
        let (_, _, region) = common::random_box(&mut rng, d);
        let truth = if d == 2 {
            match coordinate_range(&region, 0, 0).unwrap() {
                Some((lb, ub)) => brute_force_2d(&ds, &spec, &lb, &ub).unwrap().is_found(),
                None => false,
            }
        } else {
            brute_force_hd(&ds, &spec, &region).unwrap().is_found()
        };

        let low = pad_dominated(&ds, g, "G2").map_err(|e| e.to_string())?;
        let v = run_all(&low, &spec, &region, &[1, 4], seed)?;
        ensure(v.agree() && v.oracle == truth, || format!("seed {seed}: dominated padding changed the verdict {v:?}"))?;

        let high = pad_dominating(&ds, g, "G2").map_err(|e| e.to_string())?;
        let shifted = FairnessSpec::new(k + g, lower, upper).unwrap();
        let v = run_all(&high, &shifted, &region, &[1, 4], seed)?;
        ensure(v.agree() && v.oracle == truth, || format!("seed {seed}: dominating padding did not shift k by {g} {v:?}"))?;
        cases += 1;
    }
    Ok(format!("{cases} padded instances, 0 violations"))
}

fn bench_protocol() -> Check {
    let ds = synthetic_dataset(2024, 100_000, 2, 0.5, 0.5).map_err(|e| e.to_string())?;
    let cfg = BenchConfig { ks: vec![50], samples: 20, algorithms: vec![Algorithm::Sweep2d], time_limit_secs: 10.0, ..BenchConfig::default() };
    let metrics = run_bench(&ds, &cfg, &Control::new()).map_err(|e| e.to_string())?;
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let path = dir.path().join("metrics.json");
    std::fs::write(&path, serde_json::to_string_pretty(&metrics).unwrap()).map_err(|e| e.to_string())?;
    let back: BenchMetrics = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).map_err(|e| e.to_string())?;
    ensure(back.runs.len() == 20 && back.rows.len() == 1, || format!("{} runs, {} rows", back.runs.len(), back.rows.len()))?;
    ensure(back.samples[0].1.len() == 20, || "sample list not recorded".into())?;
    let slowest = back.runs.iter().map(|r| r.wall_millis).fold(0.0, f64::max);
    ensure(back.runs.iter().all(|r| r.status != "timeout") && slowest < 10_000.0, || format!("slowest run {slowest:.0} ms"))?;
    let row = &back.rows[0];
    Ok(format!(
        "n=100000 k=50: {} of 20 repaired, mean {:.1} ms, slowest {:.1} ms, mean {:.0} events",
        row.found, row.mean_wall_millis, slowest, row.mean_events
    ))
}

fn ingestion() -> Check {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let compas = dir.path().join("compas.csv");
    common::fixtures::write_compas(&compas, 1).map_err(|e| e.to_string())?;
    let mut spec = IngestionSpec::new(
        &compas,
        vec!["juv_other_count".into(), "c_days_from_compas".into()],
        "race",
        "African-American",
    );
    let two = ingest_csv(&spec).map_err(|e| e.to_string())?;
    spec.score_columns = ["priors_count", "juv_other_count", "c_days_from_compas", "start", "end", "jail_days"]
        .map(String::from)
        .to_vec();
    spec.derived_columns = vec![DerivedColumn::parse("jail_days = days(c_jail_out) - days(c_jail_in)").unwrap()];
    let six = ingest_csv(&spec).map_err(|e| e.to_string())?;
    let jee = dir.path().join("jee.csv");
    common::fixtures::write_jee(&jee, 2).map_err(|e| e.to_string())?;
    let jee_ds = ingest_csv(&IngestionSpec::new(&jee, vec!["phys".into(), "chem".into()], "gender", "Female"))
        .map_err(|e| e.to_string())?;

    let c = two.dataset.protected_share();
    let c6 = six.dataset.protected_share();
    let j = jee_ds.dataset.protected_share();
    ensure((c - 0.513).abs() <= 0.001 && (c6 - 0.513).abs() <= 0.001, || format!("COMPAS share {c:.5}"))?;
    ensure((j - 0.255).abs() <= 0.001, || format!("IIT-JEE share {j:.5}"))?;
    ensure(two.dataset.n() == common::fixtures::COMPAS_ROWS, || format!("COMPAS kept {} rows", two.dataset.n()))?;
    ensure(two.report.rows_dropped == common::fixtures::COMPAS_BROKEN_ROWS, || "COMPAS drop count".into())?;
    ensure(jee_ds.report.rows_dropped == common::fixtures::JEE_ABSENT_ROWS, || "IIT-JEE drop count".into())?;
    Ok(format!(
        "COMPAS {:.3}% of {} rows ({} dropped), IIT-JEE {:.3}% of {} rows ({} dropped)",
        100.0 * c,
        two.dataset.n(),
        two.report.rows_dropped,
        100.0 * j,
        jee_ds.dataset.n(),
        jee_ds.report.rows_dropped
    ))
}

fn main() {
    let criteria: Vec<(&str, fn() -> Check)> = vec![
        ("cross-solver/oracle equivalence", cross_solver),
        ("degeneracy suite", degeneracy),
        ("indicator window semantics", indicator_window),
        ("kinetic queue oracle", kinetic),
        ("worker independence", workers),
        ("skyband soundness", skyband),
        ("hardness gadgets", gadgets),
        ("desk-scale bench protocol", bench_protocol),
        ("ingestion shares", ingestion),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (name, check) in criteria {
        if !filter.is_empty() && !filter.iter().any(|f| name.contains(f.as_str())) {
            continue;
        }
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            Err(p.downcast_ref::<String>().cloned().or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string())).unwrap_or_default())
        });
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS  {name}: {detail} [{secs:.1}s]"),
            Err(detail) => {
                failed += 1;
                println!("FAIL  {name}: {detail} [{secs:.1}s]");
            }
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}
