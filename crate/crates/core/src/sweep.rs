//! Kinetic k-level sweep for two scoring attributes.
//!
//! Weight vectors `(t, 1 - t)` are swept over `t in [lb, ub]`. The current
//! top-k lives in a min-queue `S1`, everything else in a max-queue `S2`; the
//! top-k can only change where the two queue tops cross.

use std::cmp::Ordering;

use num_traits::{One, Signed};
use serde::Serialize;

use crate::control::Control;
use crate::error::{Error, Result};
use crate::geometry::{dual_lines, DualLine};
use crate::kinetic::{perturbed_cmp, Coord, KineticTournament, Mode};
use crate::model::{fairness_interval, is_fair, tie_interval, top_k, Dataset, FairnessSpec, WeightVector};
use crate::rational::{self, Q};

/// Counters describing one sweep.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct SweepStats {
    /// Loop iterations, i.e. event coordinates taken from the queues.
    pub events: u64,
    pub advances: u64,
    pub exchanges: u64,
    pub boundary_events: u64,
    /// Boundary events where more than two lines meet the queue tops.
    pub simultaneous_events: u64,
    pub fairness_checks: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SweepOutcome {
    Found { t: Q, weight: WeightVector },
    Infeasible,
}

impl SweepOutcome {
    pub fn is_found(&self) -> bool {
        matches!(self, SweepOutcome::Found { .. })
    }

    /// Nearest decimal of the found coordinate.
    pub fn t_f64(&self) -> Option<f64> {
        match self {
            SweepOutcome::Found { t, .. } => Some(rational::to_f64(t)),
            SweepOutcome::Infeasible => None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SweepReport {
    pub outcome: SweepOutcome,
    pub stats: SweepStats,
}

/// State exposed to a sweep observer before each event is processed.
#[derive(Debug)]
pub struct SweepSnapshot<'a> {
    pub now: Coord,
    /// Coordinate of the event about to be processed (`None`: no more).
    pub next: Option<Coord>,
    pub s1: &'a [DualLine],
}

pub fn find_fair_2d(ds: &Dataset, spec: &FairnessSpec, lb: &Q, ub: &Q) -> Result<SweepReport> {
    find_fair_2d_with(ds, spec, lb, ub, &Control::new())
}

pub fn find_fair_2d_with(
    ds: &Dataset,
    spec: &FairnessSpec,
    lb: &Q,
    ub: &Q,
    control: &Control,
) -> Result<SweepReport> {
    find_fair_2d_observed(ds, spec, lb, ub, control, &mut |_| {})
}

/// Same as [`find_fair_2d_with`], calling `observer` before every event.
pub fn find_fair_2d_observed(
    ds: &Dataset,
    spec: &FairnessSpec,
    lb: &Q,
    ub: &Q,
    control: &Control,
    observer: &mut dyn FnMut(&SweepSnapshot<'_>),
) -> Result<SweepReport> {
    if ds.dim() != 2 {
        return Err(Error::UnsupportedDimension {
            dim: ds.dim(),
            reason: "the kinetic sweep handles two scoring attributes only",
        });
    }
    spec.validate_for(ds)?;
    if lb.is_negative() || lb > ub || *ub > Q::one() {
        return Err(Error::Parameter(format!(
            "sweep range must satisfy 0 <= lb <= ub <= 1 (got {}, {})",
            rational::display(lb),
            rational::display(ub)
        )));
    }
    let mut stats = SweepStats { fairness_checks: 1, ..SweepStats::default() };
    let found = |t: Q, stats: SweepStats| -> Result<SweepReport> {
        let weight = WeightVector::from_first_coordinate(t.clone())?;
        Ok(SweepReport { outcome: SweepOutcome::Found { t, weight }, stats })
    };

    let w_lb = WeightVector::from_first_coordinate(lb.clone())?;
    let at_lb = top_k(ds, &w_lb, spec.k)?;
    if is_fair(spec, fairness_interval(ds, &at_lb)) {
        return found(lb.clone(), stats);
    }
    let infeasible = |stats| Ok(SweepReport { outcome: SweepOutcome::Infeasible, stats });
    // the top-n set never changes
    if spec.k == ds.n() || lb == ub {
        return infeasible(stats);
    }

    let lb_c = Coord::from_rational(lb)?;
    let ub_c = Coord::from_rational(ub)?;
    let mut lines = dual_lines(ds);
    lines.sort_by(|a, b| perturbed_cmp(b, a, lb_c));
    let rest = lines.split_off(spec.k);
    let mut s1 = KineticTournament::build(lines, Mode::Min, lb_c)?;
    let mut s2 = KineticTournament::build(rest, Mode::Max, lb_c)?;
    let mut now = lb_c;

    loop {
        if stats.events % 1024 == 0 {
            control.check()?;
        }
        let t1 = s1.next_event_time();
        let t2 = s2.next_event_time();
        let t3 = boundary_crossing(s1.top(), s2.top(), now);
        let next = [t1, t2, t3].into_iter().flatten().min();
        observer(&SweepSnapshot { now, next, s1: s1.lines() });
        let t = match next {
            Some(t) if t <= ub_c => t,
            _ => return infeasible(stats),
        };
        stats.events += 1;
        now = t;

        if t3 == Some(t) {
            stats.boundary_events += 1;
            for (q, tq) in [(&mut s1, t1), (&mut s2, t2)] {
                if tq == Some(t) {
                    while q.next_event_time() == Some(t) {
                        q.advance()?;
                        stats.advances += 1;
                    }
                }
                q.fast_forward(t)?;
            }
            let m1 = s1.collect_tied_with_top(t)?;
            let m2 = s2.collect_tied_with_top(t)?;
            if m1.len() + m2.len() > 2 {
                stats.simultaneous_events += 1;
            }
            let g1_m1 = m1.iter().filter(|l| l.protected).count();
            let g1_m2 = m2.iter().filter(|l| l.protected).count();
            let fixed = s1.pg_count() - g1_m1;
            let g = g1_m1 + g1_m2;
            let o = m1.len() + m2.len() - g;
            stats.fairness_checks += 1;
            if is_fair(spec, tie_interval(fixed, g, o, m1.len())) {
                return found(t.to_rational(), stats);
            }
            while perturbed_cmp(s1.top(), s2.top(), t) == Ordering::Less {
                let low = *s1.top();
                let high = *s2.top();
                s1.replace(low.owner, high)?;
                s2.replace(high.owner, low)?;
                stats.exchanges += 1;
            }
        } else if t1 == Some(t) {
            s1.advance()?;
            stats.advances += 1;
        } else {
            s2.advance()?;
            stats.advances += 1;
        }
    }
}

/// Where the best outside line rises to meet the worst inside line.
fn boundary_crossing(s1_top: &DualLine, s2_top: &DualLine, now: Coord) -> Option<Coord> {
    if s2_top.slope <= s1_top.slope {
        return None;
    }
    Coord::crossing(s1_top, s2_top).map(|c| c.max(now))
}
