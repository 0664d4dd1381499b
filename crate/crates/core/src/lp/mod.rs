//! Exact fixed-dimension linear programming by randomized incremental
//! construction (Seidel).
//!
//! Every variable is implicitly clipped to `[-M, M]` with `M = 2^64`, and the
//! objective is extended lexicographically by the coordinate directions, so
//! the optimum at every step is a unique point. A constraint violated by the
//! current optimum is made tight by eliminating one variable, and the
//! problem recurses one dimension down on the constraints seen so far.

mod region;

pub use region::{
    coordinate_range, feasible_point_in_box, separation_lp, simplex_rows, SeparationLp,
};

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::rational::{self, Q};

/// Largest number of variables accepted by [`solve`].
pub const MAX_LP_DIM: usize = 12;

/// `a . x <= b`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Halfspace {
    pub a: Vec<Q>,
    pub b: Q,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LinearProgram {
    dim: usize,
    constraints: Vec<Halfspace>,
    objective: Option<Vec<Q>>,
}

impl LinearProgram {
    pub fn new(dim: usize) -> Result<Self> {
        if dim == 0 || dim > MAX_LP_DIM {
            return Err(Error::UnsupportedDimension {
                dim,
                reason: "linear programs must have between 1 and 12 variables",
            });
        }
        Ok(Self { dim, constraints: Vec::new(), objective: None })
    }

    fn check_len(&self, a: &[Q]) -> Result<()> {
        if a.len() != self.dim {
            return Err(Error::Parameter(format!(
                "constraint has {} coefficients, expected {}",
                a.len(),
                self.dim
            )));
        }
        Ok(())
    }

    /// Adds `a . x <= b`.
    pub fn le(&mut self, a: Vec<Q>, b: Q) -> Result<&mut Self> {
        self.check_len(&a)?;
        self.constraints.push(Halfspace { a, b });
        Ok(self)
    }

    /// Adds `a . x >= b`.
    pub fn ge(&mut self, a: Vec<Q>, b: Q) -> Result<&mut Self> {
        let a = a.into_iter().map(|x| -x).collect();
        self.le(a, -b)
    }

    /// Adds `a . x = b` as two inequalities.
    pub fn equal(&mut self, a: Vec<Q>, b: Q) -> Result<&mut Self> {
        self.le(a.clone(), b.clone())?;
        self.ge(a, b)
    }

    /// Sets the objective `maximize c . x`.
    pub fn maximize(&mut self, c: Vec<Q>) -> Result<&mut Self> {
        self.check_len(&c)?;
        self.objective = Some(c);
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn constraints(&self) -> &[Halfspace] {
        &self.constraints
    }

    pub fn objective(&self) -> Option<&[Q]> {
        self.objective.as_deref()
    }

    /// Exact check of every constraint.
    pub fn is_satisfied_by(&self, x: &[Q]) -> bool {
        x.len() == self.dim && self.constraints.iter().all(|h| rational::dot(&h.a, x) <= h.b)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LpOutcome {
    Feasible(Vec<Q>),
    Infeasible,
    Unbounded,
}

impl LpOutcome {
    pub fn is_feasible(&self) -> bool {
        matches!(self, LpOutcome::Feasible(_))
    }

    pub fn point(&self) -> Option<&[Q]> {
        match self {
            LpOutcome::Feasible(x) => Some(x),
            _ => None,
        }
    }
}

fn big_m() -> Q {
    Q::from_integer(BigInt::one() << 64)
}

/// Solves `lp` exactly. The answer is a deterministic function of
/// `(lp, seed)`; feasible points are re-verified before they are returned.
pub fn solve(lp: &LinearProgram, seed: u64) -> Result<LpOutcome> {
    let cons: Vec<(Vec<Q>, Q)> = lp.constraints.iter().map(|h| (h.a.clone(), h.b.clone())).collect();
    let mut objs: Vec<Vec<Q>> = Vec::with_capacity(lp.dim + 1);
    if let Some(c) = &lp.objective {
        objs.push(c.clone());
    }
    for i in 0..lp.dim {
        let mut e = vec![Q::zero(); lp.dim];
        e[i] = Q::one();
        objs.push(e);
    }
    let m = big_m();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let Some(x) = seidel(lp.dim, &cons, &objs, &m, &mut rng) else {
        return Ok(LpOutcome::Infeasible);
    };
    if !lp.is_satisfied_by(&x) {
        return Err(Error::Verification("lp solution violates a constraint".into()));
    }
    if let Some(c) = &lp.objective {
        // an optimum that moves with the clipping box is unbounded
        let m2 = &m + &m;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let y = seidel(lp.dim, &cons, &objs, &m2, &mut rng)
            .ok_or_else(|| Error::State("lp became infeasible on a larger box".into()))?;
        if rational::dot(c, &y) != rational::dot(c, &x) {
            return Ok(LpOutcome::Unbounded);
        }
    }
    Ok(LpOutcome::Feasible(x))
}

/// Lexicographic maximum of `objs` over the box `[-m, m]^dim`.
fn box_optimum(dim: usize, objs: &[Vec<Q>], m: &Q) -> Vec<Q> {
    (0..dim)
        .map(|i| match objs.iter().map(|o| &o[i]).find(|c| !c.is_zero()) {
            Some(c) if c.is_negative() => -m.clone(),
            _ => m.clone(),
        })
        .collect()
}

/// Rewrites `(a, b)` after substituting `x_j = (hb - sum_{i != j} ha_i x_i) / ha_j`.
fn substitute(a: &[Q], b: &Q, ha: &[Q], hb: &Q, j: usize) -> (Vec<Q>, Q) {
    let f = &a[j] / &ha[j];
    let a2 = a
        .iter()
        .zip(ha)
        .enumerate()
        .filter(|(i, _)| *i != j)
        .map(|(_, (ai, hi))| if f.is_zero() { ai.clone() } else { ai - &f * hi })
        .collect();
    (a2, b - &f * hb)
}

fn seidel(dim: usize, cons: &[(Vec<Q>, Q)], objs: &[Vec<Q>], m: &Q, rng: &mut ChaCha8Rng) -> Option<Vec<Q>> {
    if dim == 0 {
        return cons.iter().all(|(_, b)| !b.is_negative()).then(Vec::new);
    }
    let mut order: Vec<usize> = (0..cons.len()).collect();
    order.shuffle(rng);
    let mut x = box_optimum(dim, objs, m);
    for pos in 0..order.len() {
        let (ha, hb) = &cons[order[pos]];
        if rational::dot(ha, &x) <= *hb {
            continue;
        }
        // pivot on the largest coefficient to keep the numbers small
        let j = (0..dim)
            .filter(|&i| !ha[i].is_zero())
            .max_by(|&p, &q| ha[p].abs().cmp(&ha[q].abs()))?;
        let mut sub: Vec<(Vec<Q>, Q)> = Vec::with_capacity(pos + 2);
        let mut unit = vec![Q::zero(); dim];
        unit[j] = Q::one();
        sub.push(substitute(&unit, m, ha, hb, j));
        unit[j] = -Q::one();
        sub.push(substitute(&unit, m, ha, hb, j));
        for &prev in &order[..pos] {
            let (a, b) = &cons[prev];
            sub.push(substitute(a, b, ha, hb, j));
        }
        let sub_objs: Vec<Vec<Q>> = objs
            .iter()
            .map(|o| substitute(o, &Q::zero(), ha, hb, j).0)
            .collect();
        let y = seidel(dim - 1, &sub, &sub_objs, m, rng)?;
        let rest: Q = ha
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != j)
            .zip(&y)
            .map(|((_, ai), yi)| ai * yi)
            .sum();
        let xj = (hb - rest) / &ha[j];
        let mut next = y;
        next.insert(j, xj);
        x = next;
    }
    Some(x)
}
