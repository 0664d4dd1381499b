#![allow(dead_code)]

pub mod fixtures;
pub mod kinetic_schedule;
pub mod solvers;

use fairtopk::model::{fairness_interval, is_fair, top_k, Dataset, FairnessSpec, WeightBox, WeightVector};
use fairtopk::rational::{q_frac, Q};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// A point of the simplex with coordinates on a `1/steps` grid.
pub fn grid_weight(rng: &mut ChaCha8Rng, d: usize, steps: i64) -> WeightVector {
    let mut cuts: Vec<i64> = (0..d - 1).map(|_| rng.random_range(0..=steps)).collect();
    cuts.sort();
    let mut parts = Vec::with_capacity(d);
    let mut prev = 0;
    for c in cuts {
        parts.push(q_frac(c - prev, steps));
        prev = c;
    }
    parts.push(q_frac(steps - prev, steps));
    WeightVector::from_rationals(parts).unwrap()
}

/// Random epsilon box around a grid weight; eps drawn from a small menu that
/// includes zero and boxes covering the whole simplex.
pub fn random_box(rng: &mut ChaCha8Rng, d: usize) -> (WeightVector, Q, WeightBox) {
    let w0 = grid_weight(rng, d, 20);
    let menu = [q_frac(0, 1), q_frac(1, 20), q_frac(1, 10), q_frac(1, 5), q_frac(1, 2), q_frac(1, 1)];
    let eps = menu[rng.random_range(0..menu.len())].clone();
    let b = WeightBox::from_epsilon_box(&w0, &eps).unwrap();
    (w0, eps, b)
}

/// Bounds drawn so that both feasible and infeasible instances are common.
pub fn random_spec(rng: &mut ChaCha8Rng, n: usize, kmax: usize) -> FairnessSpec {
    let k = rng.random_range(1..=kmax.min(n));
    let lower = rng.random_range(0..=k);
    let upper = rng.random_range(lower..=k);
    FairnessSpec::new(k, lower, upper).unwrap()
}

/// Scores on the 1/20 grid kept away from 0 and 1 so padding gadgets fit.
pub fn interior_instance(rng: &mut ChaCha8Rng, n: usize, d: usize) -> Dataset {
    let rows: Vec<(Vec<f64>, bool)> = (0..n)
        .map(|_| {
            let scores = (0..d).map(|_| rng.random_range(1..=19) as f64 / 20.0).collect();
            (scores, rng.random_bool(0.5))
        })
        .collect();
    Dataset::from_scores(6, &rows).unwrap()
}

/// A random instance where some candidates are exact copies of others,
/// possibly with a different group.
pub fn duplicated_instance(rng: &mut ChaCha8Rng, n: usize, d: usize) -> Dataset {
    let base = (n / 2).max(1);
    let mut rows: Vec<(Vec<f64>, bool)> = (0..base)
        .map(|_| ((0..d).map(|_| rng.random_range(0..=4) as f64 / 4.0).collect(), rng.random_bool(0.5)))
        .collect();
    while rows.len() < n {
        let src = rows[rng.random_range(0..base)].0.clone();
        rows.push((src, rng.random_bool(0.5)));
    }
    Dataset::from_scores(6, &rows).unwrap()
}

/// `n` points on the anti-diagonal `p_1 + p_2 = 1`; all dual lines pass
/// through `(1/2, 1/2)`. Candidate `i` is protected when bit `i` of `mask`
/// is set.
pub fn concurrent_lines(n: usize, mask: u32) -> Dataset {
    let scale = 1_000_000i64;
    let rows: Vec<(Vec<f64>, bool)> = (0..n)
        .map(|i| {
            let a = (i as i64 * scale) / (n as i64 - 1);
            (vec![a as f64 / scale as f64, (scale - a) as f64 / scale as f64], mask >> i & 1 == 1)
        })
        .collect();
    Dataset::from_scores(6, &rows).unwrap()
}

/// Independent acceptance check for a claimed fair weight and subset.
pub fn witness_ok(ds: &Dataset, spec: &FairnessSpec, region: &WeightBox, w: &WeightVector, subset: Option<&[usize]>) -> bool {
    if !region.contains(w) {
        return false;
    }
    let r = top_k(ds, w, spec.k).unwrap();
    if !is_fair(spec, fairness_interval(ds, &r)) {
        return false;
    }
    match subset {
        None => true,
        Some(ids) => {
            let g1 = ids.iter().filter(|&&id| ds.by_id(id).unwrap().is_protected()).count();
            r.admits_subset(ids) && spec.admits(g1)
        }
    }
}
