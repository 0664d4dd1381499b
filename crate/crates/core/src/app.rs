//! Audit, repair and benchmark drivers shared by the command line and the
//! HTTP service. Every `Found` answer is re-checked on the full dataset
//! before it is reported.

use std::fmt::{self, Write as _};
use std::str::FromStr;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;
use serde::{Deserialize, Serialize};

use crate::control::Control;
use crate::error::{Error, Result};
use crate::geometry::{reduce_dataset, SkybandReducer};
use crate::klevel::{find_fair_hd_with, KlevelConfig, KlevelOutcome};
use crate::lp::coordinate_range;
use crate::milp::{solve_feasibility_with, verify_solution, MilpModel, MilpOutcome, DEFAULT_NODE_BUDGET};
use crate::model::{
    exact_score, fair_completion, fairness_interval, is_fair, top_k, CandidateRow, Dataset, FairnessSpec, Grid,
    TopKResult, WeightBox, WeightVector,
};
use crate::oracle::{brute_force_2d, brute_force_hd, Oracle2dOutcome, OracleHdOutcome};
use crate::rational::{self, Q};
use crate::sweep::{find_fair_2d_with, SweepOutcome};

/// Number of top-k rows included in an audit preview.
pub const PREVIEW_ROWS: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Algorithm {
    #[serde(rename = "sweep2d")]
    Sweep2d,
    #[serde(rename = "klevel-hd")]
    KlevelHd,
    #[serde(rename = "milp")]
    Milp,
    #[serde(rename = "oracle")]
    Oracle,
}

impl Algorithm {
    pub const ALL: [Algorithm; 4] = [Algorithm::Sweep2d, Algorithm::KlevelHd, Algorithm::Milp, Algorithm::Oracle];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Sweep2d => "sweep2d",
            Algorithm::KlevelHd => "klevel-hd",
            Algorithm::Milp => "milp",
            Algorithm::Oracle => "oracle",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Algorithm::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| Error::Parameter(format!("unknown algorithm {s:?} (expected sweep2d, klevel-hd, milp or oracle)")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum Verdict {
    Fair,
    Unfair,
    Found,
    Infeasible,
    BudgetExhausted,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Counters {
    pub events: u64,
    pub lps: u64,
    pub nodes: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PreviewRow {
    pub id: usize,
    pub score: f64,
    pub group: String,
}

/// Machine-readable result of an audit or a repair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Report {
    pub verdict: Verdict,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub algorithm: Option<Algorithm>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub weight: Option<Vec<f64>>,
    /// Exact decimal or fractional form of `weight`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub weight_exact: Option<Vec<String>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub subset_ids: Option<Vec<usize>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fair: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub interval_min: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub interval_max: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub topk_preview: Option<Vec<PreviewRow>>,
    pub counters: Counters,
    pub wall_millis: f64,
    pub verified: bool,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub transcript: Vec<String>,
}

impl Report {
    fn new(verdict: Verdict) -> Self {
        Self {
            verdict,
            algorithm: None,
            weight: None,
            weight_exact: None,
            subset_ids: None,
            fair: None,
            interval_min: None,
            interval_max: None,
            topk_preview: None,
            counters: Counters::default(),
            wall_millis: 0.0,
            verified: false,
            transcript: Vec::new(),
        }
    }

    fn with_weight(mut self, w: &WeightVector) -> Self {
        self.weight = Some(w.to_f64());
        self.weight_exact = Some(w.to_strings());
        self
    }

    /// Human-readable rendering.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "verdict: {}", serde_json::to_value(self.verdict).unwrap_or_default().as_str().unwrap_or(""));
        if let Some(a) = self.algorithm {
            let _ = writeln!(out, "algorithm: {a}");
        }
        if let Some(w) = &self.weight_exact {
            let _ = writeln!(out, "weight: ({})", w.join(", "));
        }
        if let (Some(lo), Some(hi)) = (self.interval_min, self.interval_max) {
            let _ = writeln!(out, "protected count in top-k: [{lo}, {hi}]");
        }
        if let Some(ids) = &self.subset_ids {
            let shown: Vec<String> = ids.iter().take(PREVIEW_ROWS).map(|i| i.to_string()).collect();
            let more = if ids.len() > PREVIEW_ROWS { format!(" (+{} more)", ids.len() - PREVIEW_ROWS) } else { String::new() };
            let _ = writeln!(out, "subset: {}{more}", shown.join(" "));
        }
        let c = &self.counters;
        let _ = writeln!(out, "counters: events={} lps={} nodes={}", c.events, c.lps, c.nodes);
        let _ = writeln!(out, "wall time: {:.3} ms", self.wall_millis);
        let _ = writeln!(out, "verified: {}", self.verified);
        for line in &self.transcript {
            let _ = writeln!(out, "  {line}");
        }
        out
    }
}

fn ordered_preview(ds: &Dataset, w: &WeightVector, ids: &[usize]) -> Result<Vec<PreviewRow>> {
    let mut scored = ids
        .iter()
        .map(|&id| {
            let c = ds.by_id(id).ok_or_else(|| Error::State(format!("unknown id {id}")))?;
            Ok((exact_score(w, c)?, c))
        })
        .collect::<Result<Vec<_>>>()?;
    scored.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.id().cmp(&b.1.id())));
    Ok(scored
        .into_iter()
        .take(PREVIEW_ROWS)
        .map(|(s, c)| PreviewRow { id: c.id(), score: rational::to_f64(&s), group: ds.groups()[c.group()].clone() })
        .collect())
}

pub fn run_audit(ds: &Dataset, w: &WeightVector, spec: &FairnessSpec) -> Result<Report> {
    let start = Instant::now();
    spec.validate_for(ds)?;
    let r = top_k(ds, w, spec.k)?;
    let interval = fairness_interval(ds, &r);
    let fair = is_fair(spec, interval);
    let subset = fair_completion(ds, &r, spec).unwrap_or_else(|| r.a_completion());
    let mut report = Report::new(if fair { Verdict::Fair } else { Verdict::Unfair }).with_weight(w);
    report.fair = Some(fair);
    report.interval_min = Some(interval.0);
    report.interval_max = Some(interval.1);
    report.topk_preview = Some(ordered_preview(ds, w, &subset)?);
    report.subset_ids = Some(subset);
    report.verified = true;
    report.wall_millis = start.elapsed().as_secs_f64() * 1e3;
    Ok(report)
}

#[derive(Debug, Clone)]
pub struct RepairOptions {
    pub algorithm: Algorithm,
    pub workers: usize,
    pub seed: u64,
    /// Expansion budget for klevel-hd, node budget for milp.
    pub budget: Option<u64>,
    pub time_limit: Option<Duration>,
    /// Drop candidates outside the k-skyband before solving.
    pub skyband: bool,
}

impl Default for RepairOptions {
    fn default() -> Self {
        Self { algorithm: Algorithm::Sweep2d, workers: 1, seed: 0, budget: None, time_limit: None, skyband: true }
    }
}

/// Candidates that can never enter a top-k: those strictly beaten in every
/// coordinate by at least `k` others.
pub fn preprocess(ds: &Dataset, k: usize) -> Result<Dataset> {
    reduce_dataset(ds, k, &SkybandReducer::default())
}

/// Searches `|w_i - w0_i| <= eps` (within the simplex) for a fair weight.
pub fn run_repair(
    ds: &Dataset,
    w0: &WeightVector,
    eps: &Q,
    spec: &FairnessSpec,
    opts: &RepairOptions,
    control: &Control,
) -> Result<Report> {
    let start = Instant::now();
    spec.validate_for(ds)?;
    if w0.dim() != ds.dim() {
        return Err(Error::Parameter(format!(
            "w0 has {} components, dataset has {} attributes",
            w0.dim(),
            ds.dim()
        )));
    }
    if opts.algorithm == Algorithm::Sweep2d && ds.dim() != 2 {
        return Err(Error::UnsupportedDimension { dim: ds.dim(), reason: "sweep2d handles two scoring attributes only" });
    }
    let region = WeightBox::from_epsilon_box(w0, eps)?;
    let reduced = if opts.skyband { preprocess(ds, spec.k)? } else { ds.clone() };
    let control = match opts.time_limit {
        Some(limit) => control.clone().with_time_limit(Some(limit)),
        None => control.clone(),
    };
    let mut report = repair_prepared(ds, &reduced, &region, spec, opts, &control)?;
    report.wall_millis = start.elapsed().as_secs_f64() * 1e3;
    Ok(report)
}

/// Repair on an already preprocessed dataset; `full` is used for the
/// verification transcript.
pub fn repair_prepared(
    full: &Dataset,
    reduced: &Dataset,
    region: &WeightBox,
    spec: &FairnessSpec,
    opts: &RepairOptions,
    control: &Control,
) -> Result<Report> {
    let start = Instant::now();
    let mut counters = Counters::default();
    let found: Option<(WeightVector, Option<Vec<usize>>)>;
    let mut verdict = Verdict::Infeasible;
    match opts.algorithm {
        Algorithm::Sweep2d => {
            if reduced.dim() != 2 {
                return Err(Error::UnsupportedDimension { dim: reduced.dim(), reason: "sweep2d handles two scoring attributes only" });
            }
            found = match coordinate_range(region, 0, opts.seed)? {
                None => None,
                Some((lb, ub)) => {
                    let r = find_fair_2d_with(reduced, spec, &lb, &ub, control)?;
                    counters.events = r.stats.events;
                    match r.outcome {
                        SweepOutcome::Found { weight, .. } => Some((weight, None)),
                        SweepOutcome::Infeasible => None,
                    }
                }
            };
        }
        Algorithm::KlevelHd => {
            let cfg = KlevelConfig { workers: opts.workers, seed: opts.seed, budget: opts.budget, ..KlevelConfig::default() };
            let r = find_fair_hd_with(reduced, spec, region, &cfg, control)?;
            counters.lps = r.stats.lps;
            counters.nodes = r.stats.expansions;
            found = match r.outcome {
                KlevelOutcome::Found { weight, subset } => Some((weight, Some(subset))),
                KlevelOutcome::Infeasible => None,
                KlevelOutcome::BudgetExhausted => {
                    verdict = Verdict::BudgetExhausted;
                    None
                }
            };
        }
        Algorithm::Milp => {
            let model = MilpModel::build(reduced, spec, region)?;
            let r = solve_feasibility_with(&model, opts.seed, opts.budget.unwrap_or(DEFAULT_NODE_BUDGET), control)?;
            counters.lps = r.stats.lps;
            counters.nodes = r.stats.nodes;
            found = match r.outcome {
                MilpOutcome::Found(sol) => {
                    verify_solution(&model, &sol)?;
                    let subset = sol.subset(&model);
                    Some((sol.weight, Some(subset)))
                }
                MilpOutcome::Infeasible => None,
                MilpOutcome::BudgetExhausted => {
                    verdict = Verdict::BudgetExhausted;
                    None
                }
            };
        }
        Algorithm::Oracle => {
            found = if reduced.dim() == 2 {
                match coordinate_range(region, 0, opts.seed)? {
                    None => None,
                    Some((lb, ub)) => match brute_force_2d(reduced, spec, &lb, &ub)? {
                        Oracle2dOutcome::Found { weight, .. } => Some((weight, None)),
                        Oracle2dOutcome::Infeasible => None,
                    },
                }
            } else {
                match brute_force_hd(reduced, spec, region)? {
                    OracleHdOutcome::Found { weight, subset } => Some((weight, Some(subset))),
                    OracleHdOutcome::Infeasible => None,
                }
            };
        }
    }
    let mut report = match found {
        Some((w, subset)) => {
            let (transcript, subset) = verify_found(full, region, spec, &w, subset.as_deref())?;
            let mut report = Report::new(Verdict::Found).with_weight(&w);
            report.subset_ids = Some(subset);
            report.transcript = transcript;
            report.verified = true;
            report
        }
        None => Report::new(verdict),
    };
    report.algorithm = Some(opts.algorithm);
    report.counters = counters;
    report.wall_millis = start.elapsed().as_secs_f64() * 1e3;
    Ok(report)
}

/// Independent re-check of a repair answer against the full dataset.
/// Returns the transcript and the subset to report.
pub fn verify_found(
    ds: &Dataset,
    region: &WeightBox,
    spec: &FairnessSpec,
    w: &WeightVector,
    subset: Option<&[usize]>,
) -> Result<(Vec<String>, Vec<usize>)> {
    let fail = |what: String| Err(Error::Verification(what));
    let mut lines = Vec::new();
    if !region.contains(w) {
        return fail("weight lies outside the search region".into());
    }
    lines.push("weight lies in the simplex and the search region".to_string());
    let r: TopKResult = top_k(ds, w, spec.k)?;
    let interval = fairness_interval(ds, &r);
    lines.push(format!(
        "top-{} recomputed over {} candidates: {} strict, {} tied for {} slots",
        spec.k,
        ds.n(),
        r.strictly_in.len(),
        r.tied_pool.len(),
        r.slots
    ));
    if !is_fair(spec, interval) {
        return fail(format!(
            "protected count range [{}, {}] misses [{}, {}]",
            interval.0, interval.1, spec.lower, spec.upper
        ));
    }
    lines.push(format!(
        "protected count range [{}, {}] meets bounds [{}, {}]",
        interval.0, interval.1, spec.lower, spec.upper
    ));
    let chosen = match subset {
        Some(ids) => {
            if !r.admits_subset(ids) {
                return fail("reported subset is not a top-k under the reported weight".into());
            }
            let g1 = ids.iter().filter(|&&id| ds.by_id(id).is_some_and(|c| c.is_protected())).count();
            if !spec.admits(g1) {
                return fail(format!("reported subset has {g1} protected members"));
            }
            lines.push(format!("reported subset is a valid top-k with {g1} protected members"));
            let mut ids = ids.to_vec();
            ids.sort_unstable();
            ids
        }
        None => {
            let ids = fair_completion(ds, &r, spec).ok_or_else(|| Error::Verification("no fair completion".into()))?;
            lines.push("fair completion selected from the tie classes".to_string());
            ids
        }
    };
    Ok((lines, chosen))
}

/// `eps` given as a float is snapped to the weight grid.
pub fn eps_from_f64(eps: f64) -> Result<Q> {
    if !eps.is_finite() || !(0.0..=1.0).contains(&eps) {
        return Err(Error::Parameter(format!("eps must lie in [0,1], got {eps}")));
    }
    rational::from_f64_snapped(eps, crate::model::WEIGHT_PLACES)
}

/// Bounds given as shares of k: `ceil(lo k)` and `floor(hi k)`.
pub fn bounds_from_shares(k: usize, lo: f64, hi: f64) -> Result<FairnessSpec> {
    if !(0.0..=1.0).contains(&lo) || !(0.0..=1.0).contains(&hi) || lo > hi {
        return Err(Error::Parameter(format!("shares must satisfy 0 <= {lo} <= {hi} <= 1")));
    }
    let lower = (lo * k as f64 - 1e-9).ceil().max(0.0) as usize;
    let upper = (hi * k as f64 + 1e-9).floor() as usize;
    FairnessSpec::new(k, lower, upper.min(k))
}

/// Draws weight vectors uniformly from the simplex (normalized
/// exponentials) until `count` of them are unfair for `spec`.
pub fn sample_unfair_weights(ds: &Dataset, spec: &FairnessSpec, count: usize, seed: u64, max_draws: usize) -> Result<Vec<WeightVector>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    let mut draws = 0;
    while out.len() < count {
        if draws == max_draws {
            return Err(Error::Parameter(format!(
                "only {} unfair weight vectors in {max_draws} draws",
                out.len()
            )));
        }
        draws += 1;
        let e: Vec<f64> = (0..ds.dim()).map(|_| rng.sample::<f64, _>(Exp1)).collect();
        let sum: f64 = e.iter().sum();
        let snapped: Vec<Q> = e
            .iter()
            .map(|x| rational::from_f64_snapped(x / sum, 6))
            .collect::<Result<_>>()?;
        // put the rounding residue on the last coordinate
        let head = &snapped[..snapped.len() - 1];
        let Ok(w) = WeightVector::from_reduced(head) else { continue };
        let r = top_k(ds, &w, spec.k)?;
        if !is_fair(spec, fairness_interval(ds, &r)) {
            out.push(w);
        }
    }
    Ok(out)
}

/// Synthetic scores in `[0,1]` where protected candidates are drawn lower on
/// every attribute after the first by the factor `1 - bias`.
pub fn synthetic_dataset(seed: u64, n: usize, d: usize, p_protected: f64, bias: f64) -> Result<Dataset> {
    if d == 0 || n == 0 || !(0.0..=1.0).contains(&p_protected) || !(0.0..1.0).contains(&bias) {
        return Err(Error::Parameter("synthetic dataset parameters out of range".into()));
    }
    let grid = Grid::default();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rows = (0..n)
        .map(|id| {
            let protected = rng.random_bool(p_protected);
            let units = (0..d)
                .map(|j| {
                    let x: f64 = rng.random();
                    let x = if protected && j > 0 { x * (1.0 - bias) } else { x };
                    grid.snap(x)
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(CandidateRow { id, units, group: if protected { 0 } else { 1 } })
        })
        .collect::<Result<Vec<_>>>()?;
    Dataset::new(grid, vec!["G1".into(), "G2".into()], 0, rows)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct BenchConfig {
    pub ks: Vec<usize>,
    pub eps: Vec<f64>,
    pub algorithms: Vec<Algorithm>,
    pub workers: Vec<usize>,
    pub samples: usize,
    pub lower_share: f64,
    pub upper_share: f64,
    pub time_limit_secs: f64,
    pub seed: u64,
    pub budget: Option<u64>,
    pub skyband: bool,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self {
            ks: vec![50],
            eps: vec![0.05],
            algorithms: vec![Algorithm::Sweep2d],
            workers: vec![1],
            samples: 20,
            lower_share: 0.4,
            upper_share: 0.6,
            time_limit_secs: 10.0,
            seed: 0,
            budget: None,
            skyband: true,
        }
    }
}

impl BenchConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Parameter(m.to_string()));
        if self.ks.is_empty() || self.eps.is_empty() || self.algorithms.is_empty() || self.workers.is_empty() {
            return bad("bench lists must be non-empty");
        }
        if self.samples == 0 {
            return bad("sample count must be positive");
        }
        if self.workers.contains(&0) {
            return bad("worker counts must be positive");
        }
        if !(self.time_limit_secs > 0.0) {
            return bad("time limit must be positive");
        }
        for e in &self.eps {
            eps_from_f64(*e)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct BenchRun {
    pub algorithm: Algorithm,
    pub k: usize,
    pub eps: f64,
    pub workers: usize,
    pub sample: usize,
    /// `found`, `infeasible`, `budgetExhausted` or `timeout`.
    pub status: String,
    pub wall_millis: f64,
    pub counters: Counters,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct BenchRow {
    pub algorithm: Algorithm,
    pub k: usize,
    pub eps: f64,
    pub workers: usize,
    pub runs: usize,
    pub found: usize,
    pub timeouts: usize,
    /// Mean over the runs that finished.
    pub mean_wall_millis: f64,
    pub mean_events: f64,
    pub mean_lps: f64,
    pub mean_nodes: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct BenchMetrics {
    pub config: BenchConfig,
    pub n: usize,
    pub d: usize,
    /// Per k, the weight samples shared by every configuration.
    pub samples: Vec<(usize, Vec<Vec<String>>)>,
    pub preprocess_millis: Vec<(usize, f64)>,
    pub rows: Vec<BenchRow>,
    pub runs: Vec<BenchRun>,
}

pub fn run_bench(ds: &Dataset, cfg: &BenchConfig, control: &Control) -> Result<BenchMetrics> {
    cfg.validate()?;
    let mut metrics = BenchMetrics {
        config: cfg.clone(),
        n: ds.n(),
        d: ds.dim(),
        samples: Vec::new(),
        preprocess_millis: Vec::new(),
        rows: Vec::new(),
        runs: Vec::new(),
    };
    for &k in &cfg.ks {
        let spec = bounds_from_shares(k, cfg.lower_share, cfg.upper_share)?;
        spec.validate_for(ds)?;
        let samples = sample_unfair_weights(ds, &spec, cfg.samples, cfg.seed ^ k as u64, 1_000_000)?;
        metrics.samples.push((k, samples.iter().map(|w| w.to_strings()).collect()));
        let start = Instant::now();
        let reduced = if cfg.skyband { preprocess(ds, k)? } else { ds.clone() };
        metrics.preprocess_millis.push((k, start.elapsed().as_secs_f64() * 1e3));
        for &eps in &cfg.eps {
            let eps_q = eps_from_f64(eps)?;
            for &algorithm in &cfg.algorithms {
                let workers: &[usize] = if algorithm == Algorithm::KlevelHd { &cfg.workers } else { &cfg.workers[..1] };
                for &w in workers {
                    let opts = RepairOptions {
                        algorithm,
                        workers: w,
                        seed: cfg.seed,
                        budget: cfg.budget,
                        time_limit: None,
                        skyband: cfg.skyband,
                    };
                    let mut runs = Vec::with_capacity(samples.len());
                    for (i, w0) in samples.iter().enumerate() {
                        control.check()?;
                        let region = WeightBox::from_epsilon_box(w0, &eps_q)?;
                        let run_control = control.clone().with_time_limit(Some(Duration::from_secs_f64(cfg.time_limit_secs)));
                        let start = Instant::now();
                        let (status, counters) = match repair_prepared(ds, &reduced, &region, &spec, &opts, &run_control) {
                            Ok(r) => (serde_json::to_value(r.verdict)?.as_str().unwrap_or("").to_string(), r.counters),
                            Err(Error::TimedOut) => ("timeout".to_string(), Counters::default()),
                            Err(e) => return Err(e),
                        };
                        runs.push(BenchRun {
                            algorithm,
                            k,
                            eps,
                            workers: w,
                            sample: i,
                            status,
                            wall_millis: start.elapsed().as_secs_f64() * 1e3,
                            counters,
                        });
                    }
                    metrics.rows.push(summarize(&runs));
                    metrics.runs.extend(runs);
                }
            }
        }
    }
    Ok(metrics)
}

fn summarize(runs: &[BenchRun]) -> BenchRow {
    let first = &runs[0];
    let done: Vec<&BenchRun> = runs.iter().filter(|r| r.status != "timeout").collect();
    let mean = |f: &dyn Fn(&BenchRun) -> f64| {
        if done.is_empty() {
            f64::NAN
        } else {
            done.iter().map(|r| f(r)).sum::<f64>() / done.len() as f64
        }
    };
    BenchRow {
        algorithm: first.algorithm,
        k: first.k,
        eps: first.eps,
        workers: first.workers,
        runs: runs.len(),
        found: runs.iter().filter(|r| r.status == "found").count(),
        timeouts: runs.len() - done.len(),
        mean_wall_millis: mean(&|r| r.wall_millis),
        mean_events: mean(&|r| r.counters.events as f64),
        mean_lps: mean(&|r| r.counters.lps as f64),
        mean_nodes: mean(&|r| r.counters.nodes as f64),
    }
}
