//! Dual transform, dominance and k-skyband preprocessing.
//!
//! A candidate `p` maps to the hyperplane
//! `x_d = (p_1 - p_d) x_1 + ... + (p_{d-1} - p_d) x_{d-1} + p_d`, whose
//! height above `(w_1..w_{d-1})` equals the candidate's score under the
//! simplex weight `(w_1, .., w_{d-1}, 1 - sum)`.

use num_bigint::BigInt;
use num_traits::Zero;

use crate::error::Result;
use crate::exec::{self, Exec};
use crate::model::{Candidate, Dataset};
use crate::rational::{self, Q};

/// Image of a candidate under the dual transform.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DualHyperplane {
    pub owner: usize,
    pub coeffs: Vec<Q>,
    pub intercept: Q,
}

impl DualHyperplane {
    /// Height of the hyperplane above `(x_1..x_{d-1})`.
    pub fn evaluate(&self, x: &[Q]) -> Q {
        rational::dot(&self.coeffs, x) + &self.intercept
    }
}

pub fn dual_transform(c: &Candidate) -> DualHyperplane {
    let d = c.dim();
    let last = c.exact_score(d - 1);
    let coeffs = (0..d - 1).map(|i| c.exact_score(i) - &last).collect();
    DualHyperplane { owner: c.id(), coeffs, intercept: last }
}

/// The 2-D dual line `y = slope * x + intercept`, kept in integer grid units.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct DualLine {
    pub owner: usize,
    pub slope: i64,
    pub intercept: i64,
    /// Ingestion order, the last tie-breaker between identical lines.
    pub stable_index: usize,
    pub protected: bool,
}

impl DualLine {
    pub fn from_candidate(c: &Candidate, stable_index: usize) -> Self {
        debug_assert_eq!(c.dim(), 2);
        let u = c.units();
        DualLine {
            owner: c.id(),
            slope: u[0] - u[1],
            intercept: u[1],
            stable_index,
            protected: c.is_protected(),
        }
    }

    /// Exact value at `x` as a rational (grid units divided by `scale`).
    pub fn value_at(&self, x: &Q, scale: i64) -> Q {
        (Q::from_integer(BigInt::from(self.slope)) * x + Q::from_integer(BigInt::from(self.intercept)))
            / Q::from_integer(BigInt::from(scale))
    }
}

/// Dual lines of a 2-D dataset in dataset order.
pub fn dual_lines(ds: &Dataset) -> Vec<DualLine> {
    ds.candidates()
        .iter()
        .enumerate()
        .map(|(i, c)| DualLine::from_candidate(c, i))
        .collect()
}

/// Strict coordinatewise dominance: `a_i > b_i` for every `i`.
pub fn dominates(a: &Candidate, b: &Candidate) -> bool {
    a.dim() == b.dim() && a.units().iter().zip(b.units()).all(|(x, y)| x > y)
}

/// Same relation on raw unit vectors.
pub fn dominates_units(a: &[i64], b: &[i64]) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|(x, y)| x > y)
}

/// Ids of the candidates dominated by at most `k - 1` others.
pub fn k_skyband(ds: &Dataset, k: usize) -> Vec<usize> {
    k_skyband_with(ds, k, Exec::default())
}

pub fn k_skyband_with(ds: &Dataset, k: usize, exec: Exec) -> Vec<usize> {
    let cands = ds.candidates();
    let keep = exec::map_range(exec, cands.len(), |i| {
        let mut dominators = 0usize;
        for (j, other) in cands.iter().enumerate() {
            if j != i && dominates(other, &cands[i]) {
                dominators += 1;
                if dominators >= k {
                    return false;
                }
            }
        }
        true
    });
    cands
        .iter()
        .zip(keep)
        .filter_map(|(c, keep)| keep.then_some(c.id()))
        .collect()
}

/// Preprocessing hook: returns the ids that can ever appear in a top-k.
pub trait Reducer: Send + Sync {
    fn reduce(&self, ds: &Dataset, k: usize) -> Vec<usize>;
}

/// The default reducer: the k-skyband.
#[derive(Debug, Default, Clone, Copy)]
pub struct SkybandReducer {
    pub exec: Option<Exec>,
}

impl Reducer for SkybandReducer {
    fn reduce(&self, ds: &Dataset, k: usize) -> Vec<usize> {
        k_skyband_with(ds, k, self.exec.unwrap_or_default())
    }
}

/// Applies `reducer` and returns the restricted dataset (ids preserved).
pub fn reduce_dataset(ds: &Dataset, k: usize, reducer: &dyn Reducer) -> Result<Dataset> {
    let keep = reducer.reduce(ds, k);
    if keep.len() == ds.n() {
        return Ok(ds.clone());
    }
    ds.restrict(&keep)
}

/// Number of candidates strictly dominating each candidate, and the number
/// each one strictly dominates (by index).
pub fn dominance_counts(ds: &Dataset) -> (Vec<usize>, Vec<usize>) {
    let cands = ds.candidates();
    let n = cands.len();
    let mut dominated_by = vec![0usize; n];
    let mut dominating = vec![0usize; n];
    for i in 0..n {
        for j in 0..n {
            if i != j && dominates(&cands[i], &cands[j]) {
                dominating[i] += 1;
                dominated_by[j] += 1;
            }
        }
    }
    (dominated_by, dominating)
}

/// Whether the hyperplane is flat, i.e. the candidate scores the same under
/// every weight.
pub fn is_constant_hyperplane(h: &DualHyperplane) -> bool {
    h.coeffs.iter().all(|c| c.is_zero())
}
