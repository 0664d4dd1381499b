//! Brute-force reference solvers and adversarial instance generators.
//!
//! The oracles share nothing with the solvers they check besides the domain
//! model and the exact LP routine: the 2-D oracle evaluates every arrangement
//! vertex and every gap between them, the d-dimensional oracle enumerates
//! all subsets and certifies each with its own LP in the full weight space.

use itertools::Itertools;
use num_traits::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::lp::{self, LinearProgram, LpOutcome};
use crate::model::{fairness_interval, is_fair, top_k, Dataset, FairnessSpec, WeightBox, WeightVector};
use crate::rational::{self, Q};

pub const HD_MAX_N: usize = 15;
pub const HD_MAX_K: usize = 4;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Oracle2dOutcome {
    Found { t: Q, weight: WeightVector },
    Infeasible,
}

impl Oracle2dOutcome {
    pub fn is_found(&self) -> bool {
        matches!(self, Oracle2dOutcome::Found { .. })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum OracleHdOutcome {
    Found { weight: WeightVector, subset: Vec<usize> },
    Infeasible,
}

impl OracleHdOutcome {
    pub fn is_found(&self) -> bool {
        matches!(self, OracleHdOutcome::Found { .. })
    }
}

fn fair_at(ds: &Dataset, spec: &FairnessSpec, t: &Q) -> Result<bool> {
    let w = WeightVector::from_first_coordinate(t.clone())?;
    let r = top_k(ds, &w, spec.k)?;
    Ok(is_fair(spec, fairness_interval(ds, &r)))
}

/// Earliest `t in [lb, ub]` such that `(t, 1 - t)` admits a fair top-k.
pub fn brute_force_2d(ds: &Dataset, spec: &FairnessSpec, lb: &Q, ub: &Q) -> Result<Oracle2dOutcome> {
    if ds.dim() != 2 {
        return Err(Error::UnsupportedDimension { dim: ds.dim(), reason: "the 2-D oracle needs two attributes" });
    }
    if *lb < Q::zero() || lb > ub || *ub > Q::one() {
        return Err(Error::Parameter("oracle range must satisfy 0 <= lb <= ub <= 1".into()));
    }
    spec.validate_for(ds)?;
    // score(t) = (p1 - p2) t + p2
    let lines: Vec<(Q, Q)> = ds
        .candidates()
        .iter()
        .map(|c| (c.exact_score(0) - c.exact_score(1), c.exact_score(1)))
        .collect();
    let mut coords = vec![lb.clone(), ub.clone()];
    for (a, b) in lines.iter().tuple_combinations() {
        if a.0 != b.0 {
            let x = (&b.1 - &a.1) / (&a.0 - &b.0);
            if lb <= &x && &x <= ub {
                coords.push(x);
            }
        }
    }
    coords.sort();
    coords.dedup();
    let two = Q::from_integer(2.into());
    let mut probes = Vec::with_capacity(2 * coords.len());
    for (i, c) in coords.iter().enumerate() {
        probes.push(c.clone());
        if let Some(next) = coords.get(i + 1) {
            probes.push((c + next) / &two);
        }
    }
    for t in probes {
        if fair_at(ds, spec, &t)? {
            let weight = WeightVector::from_first_coordinate(t.clone())?;
            return Ok(Oracle2dOutcome::Found { t, weight });
        }
    }
    Ok(Oracle2dOutcome::Infeasible)
}

fn check_hd_guard(ds: &Dataset, k: usize) -> Result<()> {
    if ds.n() > HD_MAX_N || k > HD_MAX_K {
        return Err(Error::Parameter(format!(
            "the subset oracle is limited to n <= {HD_MAX_N} and k <= {HD_MAX_K} (got n = {}, k = {k})",
            ds.n()
        )));
    }
    if k == 0 || k > ds.n() {
        return Err(Error::Parameter(format!("k = {k} must lie in [1, {}]", ds.n())));
    }
    Ok(())
}

/// LP over the full weight vector: simplex, box, and every member of
/// `subset` scoring at least every non-member.
fn subset_witness(ds: &Dataset, subset: &[usize], wbox: &WeightBox, seed: u64) -> Result<Option<WeightVector>> {
    let d = ds.dim();
    let mut prog = LinearProgram::new(d)?;
    for i in 0..d {
        let mut e = vec![Q::zero(); d];
        e[i] = Q::one();
        prog.ge(e, Q::zero())?;
    }
    prog.le(vec![Q::one(); d], Q::one())?;
    prog.ge(vec![Q::one(); d], Q::one())?;
    for h in wbox.inequalities() {
        prog.le(h.coeffs.clone(), h.bound.clone())?;
    }
    let cands = ds.candidates();
    for &i in subset {
        for (j, other) in cands.iter().enumerate() {
            if subset.contains(&j) {
                continue;
            }
            let a: Vec<Q> = (0..d).map(|x| other.exact_score(x) - cands[i].exact_score(x)).collect();
            prog.le(a, Q::zero())?;
        }
    }
    match lp::solve(&prog, seed)? {
        LpOutcome::Feasible(w) => Ok(Some(WeightVector::from_rationals(w)?)),
        _ => Ok(None),
    }
}

/// Every fair-by-count subset is tested for a separating weight in the
/// region; the first one found (in lexicographic index order) is returned.
pub fn brute_force_hd(ds: &Dataset, spec: &FairnessSpec, wbox: &WeightBox) -> Result<OracleHdOutcome> {
    check_hd_guard(ds, spec.k)?;
    if wbox.dim() != ds.dim() {
        return Err(Error::Parameter("weight region dimension mismatch".into()));
    }
    let cands = ds.candidates();
    for subset in (0..ds.n()).combinations(spec.k) {
        let g1 = subset.iter().filter(|&&i| cands[i].is_protected()).count();
        if !spec.admits(g1) {
            continue;
        }
        if let Some(weight) = subset_witness(ds, &subset, wbox, 0)? {
            let ids = subset.iter().map(|&i| cands[i].id()).collect();
            return Ok(OracleHdOutcome::Found { weight, subset: ids });
        }
    }
    Ok(OracleHdOutcome::Infeasible)
}

/// All id subsets of size `k` that are a valid top-k somewhere in the region.
pub fn feasible_subsets_hd(ds: &Dataset, k: usize, wbox: &WeightBox) -> Result<Vec<Vec<usize>>> {
    check_hd_guard(ds, k)?;
    let cands = ds.candidates();
    let mut out = Vec::new();
    for subset in (0..ds.n()).combinations(k) {
        if subset_witness(ds, &subset, wbox, 0)?.is_some() {
            out.push(subset.iter().map(|&i| cands[i].id()).collect());
        }
    }
    Ok(out)
}

/// Appends `count` copies of a point strictly below every candidate in
/// every coordinate.
pub fn pad_dominated(ds: &Dataset, count: usize, group: &str) -> Result<Dataset> {
    if count == 0 {
        return Ok(ds.clone());
    }
    let mut point = Vec::with_capacity(ds.dim());
    for i in 0..ds.dim() {
        let min = ds.candidates().iter().map(|c| c.units()[i]).min().expect("non-empty dataset");
        if min == 0 {
            return Err(Error::Construction(format!(
                "coordinate {i} already reaches 0; no margin below it for a dominated candidate"
            )));
        }
        point.push(min / 2);
    }
    ds.with_appended(group, vec![point; count])
}

/// Appends `count` copies of a point strictly above every candidate in
/// every coordinate.
pub fn pad_dominating(ds: &Dataset, count: usize, group: &str) -> Result<Dataset> {
    if count == 0 {
        return Ok(ds.clone());
    }
    let scale = ds.grid().scale();
    let mut point = Vec::with_capacity(ds.dim());
    for i in 0..ds.dim() {
        let max = ds.candidates().iter().map(|c| c.units()[i]).max().expect("non-empty dataset");
        if max >= scale {
            return Err(Error::Construction(format!(
                "coordinate {i} already reaches 1; no margin above it for a dominating candidate"
            )));
        }
        point.push(max + (scale - max + 1) / 2);
    }
    ds.with_appended(group, vec![point; count])
}

/// Reproducible instance with scores on the grid `{0, step, 2 step, .., 1}`.
pub fn gen_random_instance(seed: u64, n: usize, d: usize, step: f64, p_g1: f64) -> Result<Dataset> {
    if !(step > 0.0 && step <= 1.0) {
        return Err(Error::Parameter(format!("grid step {step} must lie in (0, 1]")));
    }
    let levels = (1.0 / step).round();
    if ((1.0 / step) - levels).abs() > 1e-9 {
        return Err(Error::Parameter(format!("grid step {step} does not divide 1")));
    }
    if !(0.0..=1.0).contains(&p_g1) {
        return Err(Error::Parameter(format!("protected probability {p_g1} outside [0,1]")));
    }
    let levels = levels as u32;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rows: Vec<(Vec<f64>, bool)> = (0..n)
        .map(|_| {
            let scores = (0..d).map(|_| rng.random_range(0..=levels) as f64 / levels as f64).collect();
            (scores, rng.random_bool(p_g1))
        })
        .collect();
    Dataset::from_scores(6, &rows)
}

/// Decimal rendering used in oracle diagnostics.
pub fn describe_t(t: &Q) -> String {
    rational::display(t)
}
