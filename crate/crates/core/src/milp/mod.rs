//! Mixed-integer feasibility formulation and an in-repo branch-and-bound.
//!
//! Variables are the weights `w_1..w_d`, a score threshold `lam` and one
//! binary `delta_c` per candidate. The window `-1 <= w.p(c) - lam - delta_c <= 0`
//! forces `delta_c = 1` above the threshold and `delta_c = 0` below it, so a
//! feasible point is a weight vector together with one of its top-k subsets.
//!
//! For a fixed partial assignment the window rows only constrain
//! `(w, lam)`: `delta_c = 1` needs `w.p(c) >= lam`, `delta_c = 0` needs
//! `w.p(c) <= lam`, and a free `delta_c` relaxed to `[0,1]` is always
//! satisfiable. The relaxation solved at each node is therefore the
//! separation LP over the fixed indicators plus the count constraints,
//! which keeps the LP dimension at `d` regardless of `n`.

mod lpfile;

pub use lpfile::{export_lp_file, parse_lp, to_lp_string};

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::Serialize;

use crate::control::Control;
use crate::error::{Error, Result};
use crate::geometry::dominates_units;
use crate::lp::{separation_lp, simplex_rows, MAX_LP_DIM};
use crate::model::{Dataset, FairnessSpec, LinearInequality, WeightBox, WeightVector};
use crate::rational::{self, Q};

pub const DEFAULT_NODE_BUDGET: u64 = 1_000_000;

/// The structured model; rows are generated on demand.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MilpModel {
    d: usize,
    ids: Vec<usize>,
    scores: Vec<Vec<Q>>,
    protected: Vec<bool>,
    k: usize,
    lower: usize,
    upper: usize,
    box_rows: Vec<LinearInequality>,
}

/// Scales a row to integer coefficients with no common factor.
fn primitive_row(h: &LinearInequality) -> LinearInequality {
    let denom = h
        .coeffs
        .iter()
        .chain(std::iter::once(&h.bound))
        .fold(BigInt::one(), |acc, x| acc.lcm(x.denom()));
    let ints: Vec<BigInt> = h
        .coeffs
        .iter()
        .chain(std::iter::once(&h.bound))
        .map(|x| (x * Q::from_integer(denom.clone())).to_integer())
        .collect();
    let g = ints.iter().fold(BigInt::zero(), |acc, x| acc.gcd(x));
    let g = if g.is_zero() { BigInt::one() } else { g };
    let mut scaled: Vec<Q> = ints.into_iter().map(|x| Q::from_integer(x / &g)).collect();
    let bound = scaled.pop().expect("bound");
    LinearInequality { coeffs: scaled, bound }
}

impl MilpModel {
    pub fn build(ds: &Dataset, spec: &FairnessSpec, wbox: &WeightBox) -> Result<Self> {
        if wbox.dim() != ds.dim() {
            return Err(Error::Parameter(format!(
                "weight region has dimension {}, dataset {}",
                wbox.dim(),
                ds.dim()
            )));
        }
        spec.validate_for(ds)?;
        let scores: Vec<Vec<Q>> = ds
            .candidates()
            .iter()
            .map(|c| (0..c.dim()).map(|i| c.exact_score(i)).collect())
            .collect();
        Self::from_parts(
            ds.dim(),
            ds.ids(),
            scores,
            ds.candidates().iter().map(|c| c.is_protected()).collect(),
            *spec,
            wbox.inequalities().to_vec(),
        )
    }

    pub(crate) fn from_parts(
        d: usize,
        ids: Vec<usize>,
        scores: Vec<Vec<Q>>,
        protected: Vec<bool>,
        spec: FairnessSpec,
        box_rows: Vec<LinearInequality>,
    ) -> Result<Self> {
        let n = scores.len();
        if n == 0 {
            return Err(Error::Validation("the model needs at least one candidate".into()));
        }
        if ids.len() != n || protected.len() != n {
            return Err(Error::Validation("candidate metadata length mismatch".into()));
        }
        for (id, row) in ids.iter().zip(&scores) {
            if row.len() != d {
                return Err(Error::Validation(format!("candidate {id} has {} scores, expected {d}", row.len())));
            }
            if row.iter().any(|x| x.is_negative() || *x > Q::one()) {
                return Err(Error::Validation(format!("candidate {id} has a score outside [0,1]")));
            }
        }
        if spec.k > n {
            return Err(Error::Parameter(format!("k = {} exceeds n = {n}", spec.k)));
        }
        if box_rows.iter().any(|h| h.coeffs.len() != d) {
            return Err(Error::Validation("box row dimension mismatch".into()));
        }
        Ok(Self {
            d,
            ids,
            scores,
            protected,
            k: spec.k,
            lower: spec.lower,
            upper: spec.upper,
            box_rows: box_rows.iter().map(primitive_row).collect(),
        })
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn n(&self) -> usize {
        self.scores.len()
    }

    pub fn ids(&self) -> &[usize] {
        &self.ids
    }

    pub fn scores(&self) -> &[Vec<Q>] {
        &self.scores
    }

    pub fn protected(&self) -> &[bool] {
        &self.protected
    }

    pub fn spec(&self) -> FairnessSpec {
        FairnessSpec { k: self.k, lower: self.lower, upper: self.upper }
    }

    pub fn box_rows(&self) -> &[LinearInequality] {
        &self.box_rows
    }

    /// `w`, `lam` and one indicator per candidate.
    pub fn variable_count(&self) -> usize {
        self.d + 1 + self.n()
    }

    pub fn window_row_count(&self) -> usize {
        2 * self.n()
    }

    pub fn cardinality_row_count(&self) -> usize {
        1
    }

    pub fn fairness_row_count(&self) -> usize {
        2
    }

    /// Scores as integers over one common scale.
    fn unit_scores(&self) -> Result<(Vec<Vec<i64>>, i64)> {
        let denom = self
            .scores
            .iter()
            .flatten()
            .fold(BigInt::one(), |acc, x| acc.lcm(x.denom()));
        let scale = denom
            .to_i64()
            .filter(|s| *s <= 1_000_000_000)
            .ok_or_else(|| Error::Validation("scores need a common decimal grid".into()))?;
        let units = self
            .scores
            .iter()
            .map(|row| {
                row.iter()
                    .map(|x| (x * Q::from_integer(denom.clone())).to_integer().to_i64().expect("bounded by scale"))
                    .collect()
            })
            .collect();
        Ok((units, scale))
    }

    fn weight_box(&self) -> Result<WeightBox> {
        WeightBox::new(self.d, self.box_rows.clone())
    }
}

/// Whether `delta` is consistent with the threshold semantics: above the
/// threshold it must be 1, below it 0, and at the threshold either value.
pub fn check_indicator_semantics(score: &Q, lambda: &Q, delta: bool) -> bool {
    let below = score < lambda;
    let above = score > lambda;
    (!below || !delta) && (!above || delta)
}

/// The window row `-1 <= score - lambda - delta <= 0` itself.
pub fn window_admits(score: &Q, lambda: &Q, delta: bool) -> bool {
    let slack = score - lambda - if delta { Q::one() } else { Q::zero() };
    slack >= -Q::one() && slack <= Q::zero()
}

/// A solution of the model.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MilpSolution {
    pub weight: WeightVector,
    pub lambda: Q,
    pub delta: Vec<bool>,
}

impl MilpSolution {
    /// Ids with `delta = 1`.
    pub fn subset(&self, m: &MilpModel) -> Vec<usize> {
        let mut ids: Vec<usize> = m.ids.iter().zip(&self.delta).filter(|(_, &d)| d).map(|(&id, _)| id).collect();
        ids.sort_unstable();
        ids
    }
}

/// Exact check of every row of the model.
pub fn verify_solution(m: &MilpModel, s: &MilpSolution) -> Result<()> {
    let fail = |what: String| Err(Error::Verification(what));
    let w = s.weight.components();
    if w.len() != m.d || s.delta.len() != m.n() {
        return fail("solution shape does not match the model".into());
    }
    if w.iter().any(|x| x.is_negative() || *x > Q::one()) || w.iter().sum::<Q>() != Q::one() {
        return fail("weight is not on the simplex".into());
    }
    if s.lambda.is_negative() || s.lambda > Q::one() {
        return fail("threshold outside [0,1]".into());
    }
    for (i, row) in m.scores.iter().enumerate() {
        if !window_admits(&rational::dot(row, w), &s.lambda, s.delta[i]) {
            return fail(format!("window row of candidate {} violated", m.ids[i]));
        }
    }
    let ones = s.delta.iter().filter(|&&d| d).count();
    if ones != m.k {
        return fail(format!("{ones} indicators set, expected {}", m.k));
    }
    let protected = s.delta.iter().zip(&m.protected).filter(|(&d, &p)| d && p).count();
    if protected < m.lower || protected > m.upper {
        return fail(format!("protected count {protected} outside [{}, {}]", m.lower, m.upper));
    }
    if let Some(h) = m.box_rows.iter().find(|h| rational::dot(&h.coeffs, w) > h.bound) {
        return fail(format!("box row {:?} violated", h.coeffs.iter().map(rational::display).collect::<Vec<_>>()));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum MilpOutcome {
    Found(MilpSolution),
    Infeasible,
    BudgetExhausted,
}

impl MilpOutcome {
    pub fn is_found(&self) -> bool {
        matches!(self, MilpOutcome::Found(_))
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct MilpStats {
    pub nodes: u64,
    pub lps: u64,
    pub fixed_by_dominance: u64,
}

#[derive(Debug, Clone)]
pub struct MilpReport {
    pub outcome: MilpOutcome,
    pub stats: MilpStats,
}

pub fn solve_feasibility(m: &MilpModel, seed: u64, budget: u64) -> Result<MilpReport> {
    solve_feasibility_with(m, seed, budget, &Control::new())
}

struct Solver<'a> {
    m: &'a MilpModel,
    units: Vec<Vec<i64>>,
    scale: i64,
    region: Vec<crate::lp::Halfspace>,
    seed: u64,
}

enum NodeResult {
    Pruned,
    Solved(MilpSolution),
    Branch(usize),
}

impl Solver<'_> {
    /// Count feasibility of a partial assignment, with forced completions.
    fn propagate(&self, fix: &mut [Option<bool>]) -> bool {
        let m = self.m;
        loop {
            let mut ones = 0;
            let mut ones_g1 = 0;
            let mut free = 0;
            let mut free_g1 = 0;
            for (f, &p) in fix.iter().zip(&m.protected) {
                match f {
                    Some(true) => {
                        ones += 1;
                        ones_g1 += p as usize;
                    }
                    Some(false) => {}
                    None => {
                        free += 1;
                        free_g1 += p as usize;
                    }
                }
            }
            if ones > m.k || ones + free < m.k {
                return false;
            }
            let r = m.k - ones;
            let free_g2 = free - free_g1;
            let x_lo = m.lower.saturating_sub(ones_g1).max(r.saturating_sub(free_g2));
            let x_hi = free_g1.min(r).min(m.upper.saturating_sub(ones_g1));
            if ones_g1 > m.upper || x_lo > x_hi {
                return false;
            }
            // forced values of whole groups of free indicators
            let force = |protected: bool| -> Option<bool> {
                let (avail, lo, hi) = if protected {
                    (free_g1, x_lo, x_hi)
                } else {
                    (free_g2, r - x_hi, r - x_lo)
                };
                if avail == 0 {
                    None
                } else if hi == 0 {
                    Some(false)
                } else if lo == avail {
                    Some(true)
                } else {
                    None
                }
            };
            let mut changed = false;
            for (f, &p) in fix.iter_mut().zip(&m.protected) {
                if f.is_none() {
                    if let Some(v) = force(p) {
                        *f = Some(v);
                        changed = true;
                    }
                }
            }
            if !changed {
                return true;
            }
        }
    }

    /// Tries to complete the node at a fixed `(w, lam)`; otherwise picks
    /// the free indicator closest to the threshold.
    fn node(&self, fix: &[Option<bool>], stats: &mut MilpStats) -> Result<NodeResult> {
        let m = self.m;
        let above = (0..m.n()).filter(|&i| fix[i] == Some(true)).map(|i| &self.units[i][..]);
        let below = (0..m.n()).filter(|&i| fix[i] == Some(false)).map(|i| &self.units[i][..]);
        let sep = separation_lp(&self.region, self.scale, above, below)?;
        stats.lps += 1;
        let Some((w, lambda)) = sep.solve(self.seed ^ stats.nodes)? else {
            return Ok(NodeResult::Pruned);
        };
        let scores: Vec<Q> = m.scores.iter().map(|row| rational::dot(row, w.components())).collect();
        // thresholds allowed by the fixed indicators
        let lo = (0..m.n()).filter(|&i| fix[i] == Some(false)).map(|i| &scores[i]).max();
        let hi = (0..m.n()).filter(|&i| fix[i] == Some(true)).map(|i| &scores[i]).min();
        let in_range = |t: &Q| lo.is_none_or(|l| l <= t) && hi.is_none_or(|h| t <= h);
        let mut thresholds = vec![lambda.clone()];
        thresholds.extend((0..m.n()).filter(|&i| fix[i].is_none()).map(|i| scores[i].clone()).filter(|t| in_range(t)));
        thresholds.sort();
        thresholds.dedup();
        for t in thresholds {
            if t.is_negative() || t > Q::one() {
                continue;
            }
            if let Some(delta) = self.complete(fix, &scores, &t) {
                return Ok(NodeResult::Solved(MilpSolution { weight: w, lambda: t, delta }));
            }
        }
        let branch = (0..m.n())
            .filter(|&i| fix[i].is_none())
            .min_by(|&a, &b| (&scores[a] - &lambda).abs().cmp(&(&scores[b] - &lambda).abs()).then(a.cmp(&b)));
        Ok(branch.map_or(NodeResult::Pruned, NodeResult::Branch))
    }

    /// Indicator values at threshold `t` meeting the count rows, if any.
    fn complete(&self, fix: &[Option<bool>], scores: &[Q], t: &Q) -> Option<Vec<bool>> {
        let m = self.m;
        let mut delta = vec![false; m.n()];
        let mut ones = 0;
        let mut ones_g1 = 0;
        let mut tied_g1 = Vec::new();
        let mut tied_g2 = Vec::new();
        for i in 0..m.n() {
            let value = match fix[i] {
                Some(v) => Some(v),
                None if scores[i] > *t => Some(true),
                None if scores[i] < *t => Some(false),
                None => None,
            };
            match value {
                Some(true) => {
                    delta[i] = true;
                    ones += 1;
                    ones_g1 += m.protected[i] as usize;
                }
                Some(false) => {}
                None if m.protected[i] => tied_g1.push(i),
                None => tied_g2.push(i),
            }
        }
        let r = m.k.checked_sub(ones)?;
        if r > tied_g1.len() + tied_g2.len() {
            return None;
        }
        let x_lo = r.saturating_sub(tied_g2.len()).max(m.lower.saturating_sub(ones_g1));
        let x_hi = r.min(tied_g1.len()).min(m.upper.checked_sub(ones_g1)?);
        if x_lo > x_hi {
            return None;
        }
        for &i in tied_g1.iter().take(x_lo) {
            delta[i] = true;
        }
        for &i in tied_g2.iter().take(r - x_lo) {
            delta[i] = true;
        }
        Some(delta)
    }
}

pub fn solve_feasibility_with(m: &MilpModel, seed: u64, budget: u64, control: &Control) -> Result<MilpReport> {
    if m.d < 2 || m.d > MAX_LP_DIM {
        return Err(Error::UnsupportedDimension { dim: m.d, reason: "the relaxation supports 2 to 12 attributes" });
    }
    let (units, scale) = m.unit_scores()?;
    let solver = Solver { m, region: simplex_rows(&m.weight_box()?), units, scale, seed };
    let mut stats = MilpStats::default();

    let n = m.n();
    let mut root: Vec<Option<bool>> = vec![None; n];
    for i in 0..n {
        let mut dominated_by = 0;
        let mut dominating = 0;
        for j in 0..n {
            if dominates_units(&solver.units[j], &solver.units[i]) {
                dominated_by += 1;
            }
            if dominates_units(&solver.units[i], &solver.units[j]) {
                dominating += 1;
            }
        }
        if dominated_by >= m.k {
            root[i] = Some(false);
            stats.fixed_by_dominance += 1;
        } else if dominating >= n - m.k {
            root[i] = Some(true);
            stats.fixed_by_dominance += 1;
        }
    }

    let mut stack = vec![root];
    while let Some(mut fix) = stack.pop() {
        if stats.nodes >= budget {
            return Ok(MilpReport { outcome: MilpOutcome::BudgetExhausted, stats });
        }
        stats.nodes += 1;
        if stats.nodes % 64 == 0 {
            control.check()?;
        }
        if !solver.propagate(&mut fix) {
            continue;
        }
        match solver.node(&fix, &mut stats)? {
            NodeResult::Pruned => {}
            NodeResult::Solved(sol) => {
                verify_solution(m, &sol)?;
                return Ok(MilpReport { outcome: MilpOutcome::Found(sol), stats });
            }
            NodeResult::Branch(i) => {
                let mut zero = fix.clone();
                zero[i] = Some(false);
                fix[i] = Some(true);
                stack.push(zero);
                stack.push(fix);
            }
        }
    }
    Ok(MilpReport { outcome: MilpOutcome::Infeasible, stats })
}
