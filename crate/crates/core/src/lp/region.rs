//! Linear programs over the feasible weight region.
//!
//! Weights are parameterized by the reduced coordinates `(w_1..w_{d-1})`
//! with `w_d = 1 - sum`, which turns the simplex into `w_i >= 0,
//! sum <= 1` and keeps every program one dimension smaller.

use num_bigint::BigInt;
use num_traits::{One, Zero};

use super::{solve, Halfspace, LinearProgram, LpOutcome};
use crate::error::{Error, Result};
use crate::model::{WeightBox, WeightVector};
use crate::rational::Q;

fn unit(dim: usize, i: usize, value: Q) -> Vec<Q> {
    let mut e = vec![Q::zero(); dim];
    e[i] = value;
    e
}

/// The simplex and the box inequalities in reduced coordinates.
pub fn simplex_rows(wbox: &WeightBox) -> Vec<Halfspace> {
    let r = wbox.dim() - 1;
    let mut rows = Vec::with_capacity(r + 1 + wbox.inequalities().len());
    for i in 0..r {
        rows.push(Halfspace { a: unit(r, i, -Q::one()), b: Q::zero() });
    }
    rows.push(Halfspace { a: vec![Q::one(); r], b: Q::one() });
    for h in wbox.inequalities() {
        let last = &h.coeffs[r];
        rows.push(Halfspace {
            a: h.coeffs[..r].iter().map(|a| a - last).collect(),
            b: &h.bound - last,
        });
    }
    rows
}

fn region_lp(wbox: &WeightBox) -> Result<LinearProgram> {
    let mut lp = LinearProgram::new(wbox.dim() - 1)?;
    for h in simplex_rows(wbox) {
        lp.le(h.a, h.b)?;
    }
    Ok(lp)
}

fn check_dim(wbox: &WeightBox) -> Result<()> {
    if wbox.dim() < 2 {
        return Err(Error::UnsupportedDimension {
            dim: wbox.dim(),
            reason: "weight regions need at least two attributes",
        });
    }
    Ok(())
}

/// Some weight vector of the region, or `None` when the region is empty.
pub fn feasible_point_in_box(wbox: &WeightBox, seed: u64) -> Result<Option<WeightVector>> {
    check_dim(wbox)?;
    match solve(&region_lp(wbox)?, seed)? {
        LpOutcome::Feasible(x) => Ok(Some(WeightVector::from_reduced(&x)?)),
        _ => Ok(None),
    }
}

/// Exact range of `w_i` over the region.
pub fn coordinate_range(wbox: &WeightBox, i: usize, seed: u64) -> Result<Option<(Q, Q)>> {
    check_dim(wbox)?;
    let d = wbox.dim();
    if i >= d {
        return Err(Error::Parameter(format!("coordinate {i} out of range for dimension {d}")));
    }
    let extreme = |sign: Q| -> Result<Option<Q>> {
        let mut lp = region_lp(wbox)?;
        // w_d = 1 - sum of the reduced coordinates
        let c = if i + 1 == d { vec![-sign.clone(); d - 1] } else { unit(d - 1, i, sign.clone()) };
        lp.maximize(c.clone())?;
        match solve(&lp, seed)? {
            LpOutcome::Feasible(x) => {
                let head: Q = c.iter().zip(&x).map(|(a, b)| a * b).sum();
                let value = if i + 1 == d { &sign + head } else { head };
                Ok(Some(&sign * value))
            }
            LpOutcome::Infeasible => Ok(None),
            LpOutcome::Unbounded => Err(Error::State("weight region is unbounded".into())),
        }
    };
    let Some(hi) = extreme(Q::one())? else { return Ok(None) };
    let lo = extreme(-Q::one())?.ok_or_else(|| Error::State("region lost feasibility".into()))?;
    Ok(Some((lo, hi)))
}

/// Separation program: is there a weight in the region under which every
/// `above` row scores at least every `below` row? Variables are the reduced
/// weights plus a threshold `lambda` kept in grid units.
#[derive(Debug, Clone)]
pub struct SeparationLp {
    lp: LinearProgram,
    scale: i64,
}

pub fn separation_lp<'a>(
    region: &[Halfspace],
    scale: i64,
    above: impl IntoIterator<Item = &'a [i64]>,
    below: impl IntoIterator<Item = &'a [i64]>,
) -> Result<SeparationLp> {
    let r = region.first().map(|h| h.a.len()).ok_or_else(|| {
        Error::Parameter("separation program needs the simplex rows".into())
    })?;
    let dim = r + 1;
    let mut lp = LinearProgram::new(dim)?;
    for h in region {
        let mut a = h.a.clone();
        a.push(Q::zero());
        lp.le(a, h.b.clone())?;
    }
    let big = |x: i64| Q::from_integer(BigInt::from(x));
    lp.le(unit(dim, r, Q::one()), big(scale))?;
    lp.le(unit(dim, r, -Q::one()), Q::zero())?;
    let row = |u: &[i64], sign: i64| -> Vec<Q> {
        let last = u[r];
        let mut a: Vec<Q> = u[..r].iter().map(|&ui| big(sign * (ui - last))).collect();
        a.push(big(-sign));
        a
    };
    for u in above {
        // lambda <= score(u)
        lp.le(row(u, -1), big(u[r]))?;
    }
    for u in below {
        // score(u) <= lambda
        lp.le(row(u, 1), big(-u[r]))?;
    }
    Ok(SeparationLp { lp, scale })
}

impl SeparationLp {
    pub fn program(&self) -> &LinearProgram {
        &self.lp
    }

    /// A separating weight and threshold (in score units), if any.
    pub fn solve(&self, seed: u64) -> Result<Option<(WeightVector, Q)>> {
        match solve(&self.lp, seed)? {
            LpOutcome::Feasible(mut x) => {
                let lambda = x.pop().expect("threshold variable") / Q::from_integer(BigInt::from(self.scale));
                Ok(Some((WeightVector::from_reduced(&x)?, lambda)))
            }
            _ => Ok(None),
        }
    }
}
