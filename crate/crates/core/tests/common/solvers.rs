//! Runs every solver on one instance and cross-checks each witness.

use fairtopk::klevel::{find_fair_hd, KlevelConfig, KlevelOutcome};
use fairtopk::lp::coordinate_range;
use fairtopk::milp::{solve_feasibility, verify_solution, MilpModel, MilpOutcome, DEFAULT_NODE_BUDGET};
use fairtopk::model::{Dataset, FairnessSpec, WeightBox};
use fairtopk::oracle::{brute_force_2d, brute_force_hd, Oracle2dOutcome};
use fairtopk::sweep::{find_fair_2d, SweepOutcome};

use super::witness_ok;

#[derive(Debug, Default)]
pub struct Verdicts {
    pub oracle: bool,
    pub sweep: Option<bool>,
    pub klevel: Vec<bool>,
    pub milp: bool,
    pub simultaneous_events: u64,
    pub witnesses: usize,
}

impl Verdicts {
    pub fn agree(&self) -> bool {
        self.sweep.is_none_or(|s| s == self.oracle)
            && self.klevel.iter().all(|&k| k == self.oracle)
            && self.milp == self.oracle
    }
}

pub fn run_all(ds: &Dataset, spec: &FairnessSpec, region: &WeightBox, workers: &[usize], seed: u64) -> Result<Verdicts, String> {
    let err = |e: fairtopk::Error| e.to_string();
    let mut v = Verdicts::default();
    let range = coordinate_range(region, 0, seed).map_err(err)?;
    if ds.dim() == 2 {
        v.oracle = match &range {
            Some((lb, ub)) => match brute_force_2d(ds, spec, lb, ub).map_err(err)? {
                Oracle2dOutcome::Found { weight, .. } => {
                    if !witness_ok(ds, spec, region, &weight, None) {
                        return Err("oracle witness fails".into());
                    }
                    true
                }
                Oracle2dOutcome::Infeasible => false,
            },
            None => false,
        };
        v.sweep = Some(match &range {
            Some((lb, ub)) => {
                let r = find_fair_2d(ds, spec, lb, ub).map_err(err)?;
                v.simultaneous_events = r.stats.simultaneous_events;
                match r.outcome {
                    SweepOutcome::Found { weight, .. } => {
                        if !witness_ok(ds, spec, region, &weight, None) {
                            return Err("sweep witness fails".into());
                        }
                        v.witnesses += 1;
                        true
                    }
                    SweepOutcome::Infeasible => false,
                }
            }
            None => false,
        });
    } else {
        v.oracle = brute_force_hd(ds, spec, region).map_err(err)?.is_found();
    }
    for &w in workers {
        let cfg = KlevelConfig { workers: w, seed, ..KlevelConfig::default() };
        let r = find_fair_hd(ds, spec, region, &cfg).map_err(err)?;
        v.klevel.push(match r.outcome {
            KlevelOutcome::Found { weight, subset } => {
                if !witness_ok(ds, spec, region, &weight, Some(&subset)) {
                    return Err(format!("k-level witness fails with {w} workers"));
                }
                v.witnesses += 1;
                true
            }
            KlevelOutcome::Infeasible => false,
            KlevelOutcome::BudgetExhausted => return Err("k-level ran out of budget".into()),
        });
    }
    let m = MilpModel::build(ds, spec, region).map_err(err)?;
    v.milp = match solve_feasibility(&m, seed, DEFAULT_NODE_BUDGET).map_err(err)?.outcome {
        MilpOutcome::Found(sol) => {
            verify_solution(&m, &sol).map_err(err)?;
            if !witness_ok(ds, spec, region, &sol.weight, Some(&sol.subset(&m))) {
                return Err("milp witness fails".into());
            }
            v.witnesses += 1;
            true
        }
        MilpOutcome::Infeasible => false,
        MilpOutcome::BudgetExhausted => return Err("milp ran out of nodes".into()),
    };
    Ok(v)
}
