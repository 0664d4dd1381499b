//! Domain types shared by every solver: candidates, datasets, fairness
//! bounds, weight vectors, the feasible weight region and top-k results.
//!
//! Scores live on a fixed decimal grid (integer "units" of `10^-places`) so
//! that tie detection downstream is exact.

use std::cmp::Ordering;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::{self, Exec};
use crate::rational::{self, Q};

pub const MAX_GRID_PLACES: u32 = 9;
pub const WEIGHT_SUM_TOLERANCE: f64 = 1e-9;
/// Decimal places kept when a float weight is converted to an exact rational.
pub const WEIGHT_PLACES: u32 = 12;

/// Decimal snapping grid for scores.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Grid {
    places: u32,
}

impl Grid {
    pub fn new(places: u32) -> Result<Self> {
        if places > MAX_GRID_PLACES {
            return Err(Error::Parameter(format!(
                "grid places {places} exceeds the supported maximum {MAX_GRID_PLACES}"
            )));
        }
        Ok(Self { places })
    }

    pub fn places(&self) -> u32 {
        self.places
    }

    pub fn scale(&self) -> i64 {
        10i64.pow(self.places)
    }

    /// Snaps a value in `[0,1]` to grid units.
    pub fn snap(&self, x: f64) -> Result<i64> {
        if !x.is_finite() || !(0.0..=1.0).contains(&x) {
            return Err(Error::Validation(format!("score {x} outside [0,1]")));
        }
        Ok((x * self.scale() as f64).round() as i64)
    }
}

impl Default for Grid {
    fn default() -> Self {
        Self { places: 6 }
    }
}

/// One item: `d` grid-snapped scores plus a group label.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Candidate {
    id: usize,
    units: Vec<i64>,
    scale: i64,
    group: usize,
    protected: bool,
}

impl Candidate {
    pub fn id(&self) -> usize {
        self.id
    }

    pub fn dim(&self) -> usize {
        self.units.len()
    }

    /// Scores as integer multiples of the grid step.
    pub fn units(&self) -> &[i64] {
        &self.units
    }

    pub fn scale(&self) -> i64 {
        self.scale
    }

    pub fn score(&self, i: usize) -> f64 {
        self.units[i] as f64 / self.scale as f64
    }

    pub fn scores(&self) -> Vec<f64> {
        (0..self.dim()).map(|i| self.score(i)).collect()
    }

    pub fn exact_score(&self, i: usize) -> Q {
        rational::q_frac(self.units[i], self.scale)
    }

    pub fn group(&self) -> usize {
        self.group
    }

    pub fn is_protected(&self) -> bool {
        self.protected
    }
}

/// Raw input row used to assemble a [`Dataset`].
#[derive(Debug, Clone)]
pub struct CandidateRow {
    pub id: usize,
    pub units: Vec<i64>,
    pub group: usize,
}

/// A labeled point set. Candidates are kept sorted by id; exactly one group
/// is protected.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Dataset {
    grid: Grid,
    dim: usize,
    groups: Vec<String>,
    protected_group: usize,
    candidates: Vec<Candidate>,
}

impl Dataset {
    pub fn new(
        grid: Grid,
        groups: Vec<String>,
        protected_group: usize,
        mut rows: Vec<CandidateRow>,
    ) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::Validation("dataset must contain at least one candidate".into()));
        }
        if protected_group >= groups.len() {
            return Err(Error::Validation("protected group index out of range".into()));
        }
        let dim = rows[0].units.len();
        if dim == 0 {
            return Err(Error::Validation("candidates need at least one score".into()));
        }
        let scale = grid.scale();
        rows.sort_by_key(|r| r.id);
        for pair in rows.windows(2) {
            if pair[0].id == pair[1].id {
                return Err(Error::Validation(format!("duplicate candidate id {}", pair[0].id)));
            }
        }
        let mut candidates = Vec::with_capacity(rows.len());
        for row in rows {
            if row.units.len() != dim {
                return Err(Error::Validation(format!(
                    "candidate {} has {} scores, expected {dim}",
                    row.id,
                    row.units.len()
                )));
            }
            if let Some(bad) = row.units.iter().find(|&&u| u < 0 || u > scale) {
                return Err(Error::Validation(format!(
                    "candidate {} has score {} outside [0,1]",
                    row.id,
                    *bad as f64 / scale as f64
                )));
            }
            if row.group >= groups.len() {
                return Err(Error::Validation(format!("candidate {} has unknown group", row.id)));
            }
            candidates.push(Candidate {
                id: row.id,
                units: row.units,
                scale,
                group: row.group,
                protected: row.group == protected_group,
            });
        }
        Ok(Self { grid, dim, groups, protected_group, candidates })
    }

    /// Convenience constructor: scores in `[0,1]` snapped to `places`, with
    /// the flag selecting group `G1` (protected) or `G2`. Ids are positions.
    pub fn from_scores(places: u32, rows: &[(Vec<f64>, bool)]) -> Result<Self> {
        let grid = Grid::new(places)?;
        let rows = rows
            .iter()
            .enumerate()
            .map(|(id, (scores, protected))| {
                let units = scores.iter().map(|&x| grid.snap(x)).collect::<Result<Vec<_>>>()?;
                Ok(CandidateRow { id, units, group: if *protected { 0 } else { 1 } })
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(grid, vec!["G1".into(), "G2".into()], 0, rows)
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn n(&self) -> usize {
        self.candidates.len()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn groups(&self) -> &[String] {
        &self.groups
    }

    pub fn protected_group(&self) -> usize {
        self.protected_group
    }

    pub fn protected_label(&self) -> &str {
        &self.groups[self.protected_group]
    }

    pub fn candidates(&self) -> &[Candidate] {
        &self.candidates
    }

    pub fn candidate(&self, index: usize) -> &Candidate {
        &self.candidates[index]
    }

    pub fn index_of(&self, id: usize) -> Option<usize> {
        self.candidates.binary_search_by_key(&id, |c| c.id).ok()
    }

    pub fn by_id(&self, id: usize) -> Option<&Candidate> {
        self.index_of(id).map(|i| &self.candidates[i])
    }

    pub fn ids(&self) -> Vec<usize> {
        self.candidates.iter().map(|c| c.id).collect()
    }

    /// Number of candidates in the protected group.
    pub fn protected_count(&self) -> usize {
        self.candidates.iter().filter(|c| c.protected).count()
    }

    pub fn protected_share(&self) -> f64 {
        self.protected_count() as f64 / self.n() as f64
    }

    /// Sub-dataset keeping the listed ids (ids are preserved).
    pub fn restrict(&self, ids: &[usize]) -> Result<Self> {
        let mut rows = Vec::with_capacity(ids.len());
        for &id in ids {
            let c = self
                .by_id(id)
                .ok_or_else(|| Error::Parameter(format!("unknown candidate id {id}")))?;
            rows.push(CandidateRow { id, units: c.units.clone(), group: c.group });
        }
        Self::new(self.grid, self.groups.clone(), self.protected_group, rows)
    }

    /// Returns a copy extended with extra rows; `label` is added to the group
    /// list when unknown. New ids continue after the current maximum id.
    pub fn with_appended(&self, label: &str, units: Vec<Vec<i64>>) -> Result<Self> {
        let mut groups = self.groups.clone();
        let group = match groups.iter().position(|g| g == label) {
            Some(g) => g,
            None => {
                groups.push(label.to_string());
                groups.len() - 1
            }
        };
        let mut next_id = self.candidates.last().map(|c| c.id + 1).unwrap_or(0);
        let mut rows: Vec<CandidateRow> = self
            .candidates
            .iter()
            .map(|c| CandidateRow { id: c.id, units: c.units.clone(), group: c.group })
            .collect();
        for u in units {
            rows.push(CandidateRow { id: next_id, units: u, group });
            next_id += 1;
        }
        Self::new(self.grid, groups, self.protected_group, rows)
    }
}

/// Bounds on the protected-group count within the top-k.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FairnessSpec {
    pub k: usize,
    pub lower: usize,
    pub upper: usize,
}

impl FairnessSpec {
    pub fn new(k: usize, lower: usize, upper: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::Parameter("k must be positive".into()));
        }
        if lower > upper || upper > k {
            return Err(Error::Parameter(format!(
                "fairness bounds must satisfy 0 <= lower <= upper <= k (got {lower}, {upper}, k={k})"
            )));
        }
        Ok(Self { k, lower, upper })
    }

    /// Checks `k <= n`; a lower bound above the protected population is only
    /// warned about since "no fair vector" is then the correct answer.
    pub fn validate_for(&self, ds: &Dataset) -> Result<()> {
        if self.k > ds.n() {
            return Err(Error::Parameter(format!("k = {} exceeds n = {}", self.k, ds.n())));
        }
        if self.lower > ds.protected_count() {
            log::warn!(
                "lower bound {} exceeds the protected population {}; no weight vector can be fair",
                self.lower,
                ds.protected_count()
            );
        }
        Ok(())
    }

    pub fn admits(&self, protected_count: usize) -> bool {
        (self.lower..=self.upper).contains(&protected_count)
    }
}

/// A point of the simplex, kept as exact rationals.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct WeightVector {
    w: Vec<Q>,
}

impl WeightVector {
    /// Accepts non-negative components whose sum is within `1e-9` of one;
    /// the stored vector is rescaled so the sum is exactly one.
    pub fn from_rationals(w: Vec<Q>) -> Result<Self> {
        if w.is_empty() {
            return Err(Error::Parameter("weight vector must be non-empty".into()));
        }
        if let Some(neg) = w.iter().find(|x| x.is_negative()) {
            return Err(Error::Parameter(format!(
                "weight component {} is negative",
                rational::display(neg)
            )));
        }
        let sum: Q = w.iter().sum();
        let gap = rational::to_f64(&(&sum - Q::one())).abs();
        if gap > WEIGHT_SUM_TOLERANCE {
            return Err(Error::Parameter(format!(
                "weight components sum to {} (must be 1)",
                rational::display(&sum)
            )));
        }
        let w = if sum.is_one() { w } else { w.into_iter().map(|x| x / &sum).collect() };
        Ok(Self { w })
    }

    pub fn from_f64s(w: &[f64]) -> Result<Self> {
        let w = w
            .iter()
            .map(|&x| rational::from_f64_snapped(x, WEIGHT_PLACES))
            .collect::<Result<Vec<_>>>()?;
        Self::from_rationals(w)
    }

    /// Parses a comma separated list of decimals or fractions.
    pub fn parse(s: &str) -> Result<Self> {
        let w = s.split(',').map(rational::parse_rational).collect::<Result<Vec<_>>>()?;
        Self::from_rationals(w)
    }

    /// The 2-D weight `(t, 1 - t)`.
    pub fn from_first_coordinate(t: Q) -> Result<Self> {
        let rest = Q::one() - &t;
        Self::from_rationals(vec![t, rest])
    }

    /// Completes `(w_1..w_{d-1})` with `w_d = 1 - sum`.
    pub fn from_reduced(head: &[Q]) -> Result<Self> {
        let sum: Q = head.iter().sum();
        let mut w = head.to_vec();
        w.push(Q::one() - sum);
        Self::from_rationals(w)
    }

    pub fn dim(&self) -> usize {
        self.w.len()
    }

    pub fn components(&self) -> &[Q] {
        &self.w
    }

    pub fn to_f64(&self) -> Vec<f64> {
        self.w.iter().map(rational::to_f64).collect()
    }

    pub fn to_strings(&self) -> Vec<String> {
        self.w.iter().map(rational::display).collect()
    }
}

/// `coeffs . w <= bound`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LinearInequality {
    pub coeffs: Vec<Q>,
    pub bound: Q,
}

/// The feasible weight region: the simplex intersected with linear
/// inequalities.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WeightBox {
    dim: usize,
    inequalities: Vec<LinearInequality>,
}

impl WeightBox {
    pub fn simplex(dim: usize) -> Self {
        Self { dim, inequalities: Vec::new() }
    }

    pub fn new(dim: usize, inequalities: Vec<LinearInequality>) -> Result<Self> {
        if let Some(bad) = inequalities.iter().find(|h| h.coeffs.len() != dim) {
            return Err(Error::Parameter(format!(
                "inequality has {} coefficients, expected {dim}",
                bad.coeffs.len()
            )));
        }
        Ok(Self { dim, inequalities })
    }

    /// `w0_i - eps <= w_i <= w0_i + eps` for every coordinate.
    pub fn from_epsilon_box(w0: &WeightVector, eps: &Q) -> Result<Self> {
        if eps.is_negative() || *eps > Q::one() {
            return Err(Error::Parameter(format!(
                "eps must lie in [0,1], got {}",
                rational::display(eps)
            )));
        }
        let dim = w0.dim();
        let mut inequalities = Vec::with_capacity(2 * dim);
        for (i, wi) in w0.components().iter().enumerate() {
            let mut upper = vec![Q::zero(); dim];
            upper[i] = Q::one();
            inequalities.push(LinearInequality { coeffs: upper, bound: wi + eps });
            let mut lower = vec![Q::zero(); dim];
            lower[i] = -Q::one();
            inequalities.push(LinearInequality { coeffs: lower, bound: -(wi - eps) });
        }
        Ok(Self { dim, inequalities })
    }

    pub fn from_epsilon_box_f64(w0: &WeightVector, eps: f64) -> Result<Self> {
        if !eps.is_finite() || eps < 0.0 {
            return Err(Error::Parameter(format!("eps must be finite and non-negative, got {eps}")));
        }
        Self::from_epsilon_box(w0, &rational::from_f64_snapped(eps, WEIGHT_PLACES)?)
    }

    pub fn with_inequality(mut self, coeffs: Vec<Q>, bound: Q) -> Result<Self> {
        if coeffs.len() != self.dim {
            return Err(Error::Parameter("inequality dimension mismatch".into()));
        }
        self.inequalities.push(LinearInequality { coeffs, bound });
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn inequalities(&self) -> &[LinearInequality] {
        &self.inequalities
    }

    /// Exact membership test (simplex constraints included).
    pub fn contains(&self, w: &WeightVector) -> bool {
        w.dim() == self.dim
            && w.components().iter().all(|x| !x.is_negative())
            && w.components().iter().sum::<Q>().is_one()
            && self
                .inequalities
                .iter()
                .all(|h| rational::dot(&h.coeffs, w.components()) <= h.bound)
    }
}

/// Top-k described by tie classes: every choice of `slots` ids from
/// `tied_pool` together with `strictly_in` is a valid top-k subset.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TopKResult {
    pub k: usize,
    pub strictly_in: Vec<usize>,
    pub tied_pool: Vec<usize>,
    pub slots: usize,
}

impl TopKResult {
    /// One valid top-k subset: the strict part plus the first tied ids.
    pub fn a_completion(&self) -> Vec<usize> {
        let mut ids = self.strictly_in.clone();
        ids.extend(self.tied_pool.iter().take(self.slots));
        ids.sort_unstable();
        ids
    }

    /// Whether `ids` (any order) is one of the top-k subsets described.
    pub fn admits_subset(&self, ids: &[usize]) -> bool {
        let mut ids = ids.to_vec();
        ids.sort_unstable();
        ids.dedup();
        if ids.len() != self.k {
            return false;
        }
        let strict_ok = self.strictly_in.iter().all(|s| ids.binary_search(s).is_ok());
        let rest_ok = ids
            .iter()
            .filter(|id| self.strictly_in.binary_search(id).is_err())
            .all(|id| self.tied_pool.binary_search(id).is_ok());
        strict_ok && rest_ok
    }
}

/// Integer sort keys proportional to the scores under `w`.
pub(crate) enum ScoreKeys {
    Small(Vec<i128>),
    Big(Vec<BigInt>),
}

impl ScoreKeys {
    pub(crate) fn compute(ds: &Dataset, w: &WeightVector, exec: Exec) -> Self {
        let denom = w
            .components()
            .iter()
            .fold(BigInt::one(), |acc, x| acc.lcm(x.denom()));
        let ints: Vec<BigInt> = w
            .components()
            .iter()
            .map(|x| (x * Q::from_integer(denom.clone())).to_integer())
            .collect();
        let small: Option<Vec<i64>> = ints.iter().map(|a| a.to_i64()).collect();
        let cands = ds.candidates();
        match small {
            Some(a) => ScoreKeys::Small(exec::map_range(exec, cands.len(), |i| {
                cands[i]
                    .units
                    .iter()
                    .zip(&a)
                    .map(|(&u, &ai)| u as i128 * ai as i128)
                    .sum()
            })),
            None => ScoreKeys::Big(exec::map_range(exec, cands.len(), |i| {
                cands[i]
                    .units
                    .iter()
                    .zip(&ints)
                    .map(|(&u, ai)| ai * BigInt::from(u))
                    .sum()
            })),
        }
    }
}

fn cut_by_keys<T: Ord>(keys: &[T], k: usize) -> (Vec<usize>, Vec<usize>) {
    let mut order: Vec<usize> = (0..keys.len()).collect();
    // k-th largest key
    order.select_nth_unstable_by(k - 1, |&a, &b| keys[b].cmp(&keys[a]));
    let kth = &keys[order[k - 1]];
    let at_least = keys.iter().filter(|key| *key >= kth).count();
    if at_least == k {
        // the k-th score is not shared with anything outside the top-k
        let mut strict: Vec<usize> = (0..keys.len()).filter(|&i| keys[i] >= *kth).collect();
        strict.sort_unstable();
        return (strict, Vec::new());
    }
    let mut strict = Vec::new();
    let mut tied = Vec::new();
    for (i, key) in keys.iter().enumerate() {
        match key.cmp(kth) {
            Ordering::Greater => strict.push(i),
            Ordering::Equal => tied.push(i),
            Ordering::Less => {}
        }
    }
    (strict, tied)
}

/// Inner product of `w` with the candidate's scores.
pub fn score_of(w: &WeightVector, c: &Candidate) -> Result<f64> {
    Ok(rational::to_f64(&exact_score(w, c)?))
}

pub fn exact_score(w: &WeightVector, c: &Candidate) -> Result<Q> {
    if w.dim() != c.dim() {
        return Err(Error::Parameter(format!(
            "weight dimension {} does not match candidate dimension {}",
            w.dim(),
            c.dim()
        )));
    }
    let sum = w
        .components()
        .iter()
        .zip(&c.units)
        .fold(Q::zero(), |acc, (wi, &u)| acc + wi * Q::from_integer(BigInt::from(u)));
    Ok(sum / Q::from_integer(BigInt::from(c.scale)))
}

pub fn top_k(ds: &Dataset, w: &WeightVector, k: usize) -> Result<TopKResult> {
    top_k_with(ds, w, k, Exec::default())
}

pub fn top_k_with(ds: &Dataset, w: &WeightVector, k: usize, exec: Exec) -> Result<TopKResult> {
    if k == 0 || k > ds.n() {
        return Err(Error::Parameter(format!("k = {k} must lie in [1, {}]", ds.n())));
    }
    if w.dim() != ds.dim() {
        return Err(Error::Parameter(format!(
            "weight dimension {} does not match dataset dimension {}",
            w.dim(),
            ds.dim()
        )));
    }
    let (strict, tied) = match ScoreKeys::compute(ds, w, exec) {
        ScoreKeys::Small(keys) => cut_by_keys(&keys, k),
        ScoreKeys::Big(keys) => cut_by_keys(&keys, k),
    };
    let slots = k - strict.len();
    let to_ids = |v: Vec<usize>| v.into_iter().map(|i| ds.candidate(i).id).collect::<Vec<_>>();
    Ok(TopKResult { k, strictly_in: to_ids(strict), tied_pool: to_ids(tied), slots })
}

/// Tight range of protected counts over every completion of `r`.
pub fn fairness_interval(ds: &Dataset, r: &TopKResult) -> (usize, usize) {
    let protected = |id: &&usize| ds.by_id(**id).is_some_and(|c| c.is_protected());
    let fixed = r.strictly_in.iter().filter(protected).count();
    let g = r.tied_pool.iter().filter(protected).count();
    tie_interval(fixed, g, r.tied_pool.len() - g, r.slots)
}

/// Protected-count range when `slots` items are drawn from a pool with `g`
/// protected and `o` other members, on top of `fixed` protected items.
pub fn tie_interval(fixed: usize, g: usize, o: usize, slots: usize) -> (usize, usize) {
    (fixed + slots.saturating_sub(o), fixed + slots.min(g))
}

pub fn is_fair(spec: &FairnessSpec, interval: (usize, usize)) -> bool {
    interval.0 <= spec.upper && spec.lower <= interval.1
}

/// Picks a completion of `r` whose protected count is admitted by `spec`.
pub fn fair_completion(ds: &Dataset, r: &TopKResult, spec: &FairnessSpec) -> Option<Vec<usize>> {
    let (lo, hi) = fairness_interval(ds, r);
    if !is_fair(spec, (lo, hi)) {
        return None;
    }
    let fixed = r
        .strictly_in
        .iter()
        .filter(|id| ds.by_id(**id).is_some_and(|c| c.is_protected()))
        .count();
    let target = lo.max(spec.lower);
    let want_protected = target - fixed;
    let (prot, other): (Vec<usize>, Vec<usize>) = r
        .tied_pool
        .iter()
        .partition(|id| ds.by_id(**id).is_some_and(|c| c.is_protected()));
    let mut ids = r.strictly_in.clone();
    ids.extend(prot.iter().take(want_protected));
    ids.extend(other.iter().take(r.slots - want_protected));
    ids.sort_unstable();
    Some(ids)
}
