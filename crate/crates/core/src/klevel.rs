//! Parallel implicit traversal of the (k-1)-level.
//!
//! Cells of the k-level that meet the weight region correspond to top-k
//! subsets certified by a separation LP; adjacent cells differ by one swap.
//! The traversal is a breadth-first search over those subsets, shared by a
//! pool of workers through a concurrent queue.
//!
//! Candidates with identical score vectors are merged into classes; a search
//! state records how many members of each class are taken, and fairness is
//! decided over every way of choosing those members.

use std::collections::hash_map::DefaultHasher;
use std::hash::{Hash, Hasher};
use std::sync::atomic::{AtomicBool, AtomicU64, AtomicUsize, Ordering};
use std::sync::{Mutex, OnceLock};

use crossbeam::queue::SegQueue;
use dashmap::DashSet;
use serde::Serialize;

use crate::control::Control;
use crate::error::{Error, Result};
use crate::geometry::dominates_units;
use crate::lp::{feasible_point_in_box, separation_lp, simplex_rows, Halfspace, MAX_LP_DIM};
use crate::model::{fair_completion, top_k, Dataset, FairnessSpec, WeightBox, WeightVector};

#[derive(Debug, Clone)]
pub struct KlevelConfig {
    pub workers: usize,
    pub seed: u64,
    /// Maximum number of subsets expanded before giving up.
    pub budget: Option<u64>,
    /// Skip swaps where the outgoing candidate dominates the incoming one.
    pub prune: bool,
    /// Keep searching after a fair subset is found and report every
    /// LP-feasible subset reached.
    pub explore_all: bool,
}

impl Default for KlevelConfig {
    fn default() -> Self {
        Self { workers: 1, seed: 0, budget: None, prune: true, explore_all: false }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum KlevelOutcome {
    Found { weight: WeightVector, subset: Vec<usize> },
    Infeasible,
    BudgetExhausted,
}

impl KlevelOutcome {
    pub fn is_found(&self) -> bool {
        matches!(self, KlevelOutcome::Found { .. })
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct KlevelStats {
    pub lps: u64,
    pub expansions: u64,
    pub enqueued: u64,
    pub pruned: u64,
    pub visited: u64,
}

#[derive(Debug, Clone)]
pub struct KlevelReport {
    pub outcome: KlevelOutcome,
    pub stats: KlevelStats,
    /// Canonical id subsets of every LP-feasible state reached (only filled
    /// in explore-all mode).
    pub reached: Vec<Vec<usize>>,
}

/// Candidates sharing one score vector.
#[derive(Debug, Clone)]
struct Class {
    units: Vec<i64>,
    protected: Vec<usize>,
    others: Vec<usize>,
}

impl Class {
    fn size(&self) -> usize {
        self.protected.len() + self.others.len()
    }

    /// Protected-count range when `taken` members are chosen.
    fn range(&self, taken: usize) -> (usize, usize) {
        (taken.saturating_sub(self.others.len()), taken.min(self.protected.len()))
    }
}

fn classes_of(ds: &Dataset) -> (Vec<Class>, Vec<usize>) {
    let mut by_units: std::collections::HashMap<&[i64], usize> = std::collections::HashMap::new();
    let mut classes: Vec<Class> = Vec::new();
    let mut class_of = Vec::with_capacity(ds.n());
    for c in ds.candidates() {
        let idx = *by_units.entry(c.units()).or_insert_with(|| {
            classes.push(Class { units: c.units().to_vec(), protected: Vec::new(), others: Vec::new() });
            classes.len() - 1
        });
        if c.is_protected() {
            classes[idx].protected.push(c.id());
        } else {
            classes[idx].others.push(c.id());
        }
        class_of.push(idx);
    }
    (classes, class_of)
}

/// Search state: `(class, taken)` pairs sorted by class, `taken > 0`.
type Key = Vec<(u32, u32)>;

/// Maps any id subset to the representative used in reports: within each
/// class of identical score vectors, the protected members come first and
/// ids ascend.
pub fn canonical_subset(ds: &Dataset, ids: &[usize]) -> Result<Vec<usize>> {
    let (classes, class_of) = classes_of(ds);
    let mut counts = vec![0usize; classes.len()];
    for &id in ids {
        let i = ds
            .index_of(id)
            .ok_or_else(|| Error::Parameter(format!("unknown candidate id {id}")))?;
        counts[class_of[i]] += 1;
    }
    let key: Key = counts
        .iter()
        .enumerate()
        .filter(|(_, &c)| c > 0)
        .map(|(i, &c)| (i as u32, c as u32))
        .collect();
    Ok(canonical_ids(&classes, &key))
}

fn canonical_ids(classes: &[Class], key: &Key) -> Vec<usize> {
    let mut ids: Vec<usize> = key
        .iter()
        .flat_map(|&(c, t)| {
            let class = &classes[c as usize];
            class.protected.iter().chain(&class.others).take(t as usize).copied()
        })
        .collect();
    ids.sort_unstable();
    ids
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

fn job_seed(seed: u64, key: &Key) -> u64 {
    let mut h = DefaultHasher::new();
    key.hash(&mut h);
    splitmix64(seed ^ h.finish())
}

struct Search<'a> {
    classes: &'a [Class],
    region: Vec<Halfspace>,
    scale: i64,
    spec: FairnessSpec,
    cfg: &'a KlevelConfig,
    control: &'a Control,
    queue: SegQueue<Key>,
    seen: DashSet<Key>,
    visited: DashSet<Key>,
    pending: AtomicUsize,
    stop: AtomicBool,
    budget_hit: AtomicBool,
    result: OnceLock<(WeightVector, Key)>,
    failure: Mutex<Option<Error>>,
    reached: Mutex<Vec<Key>>,
    lps: AtomicU64,
    expansions: AtomicU64,
    enqueued: AtomicU64,
    pruned: AtomicU64,
}

impl Search<'_> {
    fn is_fair(&self, key: &Key) -> bool {
        let (lo, hi) = key.iter().fold((0, 0), |(lo, hi), &(c, t)| {
            let (a, b) = self.classes[c as usize].range(t as usize);
            (lo + a, hi + b)
        });
        lo <= self.spec.upper && self.spec.lower <= hi
    }

    fn certify(&self, key: &Key) -> Result<Option<WeightVector>> {
        let mut taken = vec![0u32; self.classes.len()];
        for &(c, t) in key {
            taken[c as usize] = t;
        }
        let above = key.iter().map(|&(c, _)| &self.classes[c as usize].units[..]);
        let below = self
            .classes
            .iter()
            .zip(&taken)
            .filter(|(class, &t)| (t as usize) < class.size())
            .map(|(class, _)| &class.units[..]);
        let sep = separation_lp(&self.region, self.scale, above, below)?;
        self.lps.fetch_add(1, Ordering::Relaxed);
        Ok(sep.solve(job_seed(self.cfg.seed, key))?.map(|(w, _)| w))
    }

    fn push(&self, key: Key) {
        if self.seen.insert(key.clone()) {
            self.enqueued.fetch_add(1, Ordering::Relaxed);
            self.queue.push(key);
        }
    }

    fn expand(&self, key: &Key) {
        if !self.visited.insert(key.clone()) {
            return;
        }
        let expanded = self.expansions.fetch_add(1, Ordering::SeqCst) + 1;
        if self.cfg.budget.is_some_and(|b| expanded > b) {
            self.budget_hit.store(true, Ordering::SeqCst);
            self.stop.store(true, Ordering::SeqCst);
            return;
        }
        let mut taken = vec![0u32; self.classes.len()];
        for &(c, t) in key {
            taken[c as usize] = t;
        }
        for &(out, _) in key {
            let out_units = &self.classes[out as usize].units;
            for (inc, class) in self.classes.iter().enumerate() {
                if inc as u32 == out || taken[inc] as usize >= class.size() {
                    continue;
                }
                if self.cfg.prune && dominates_units(out_units, &class.units) {
                    self.pruned.fetch_add(1, Ordering::Relaxed);
                    continue;
                }
                let mut next = taken.clone();
                next[out as usize] -= 1;
                next[inc] += 1;
                self.push(key_of(&next));
            }
        }
    }

    fn process(&self, key: Key) -> Result<()> {
        let Some(w) = self.certify(&key)? else { return Ok(()) };
        if self.cfg.explore_all {
            self.reached.lock().expect("reached lock").push(key.clone());
        }
        if self.is_fair(&key) {
            let _ = self.result.set((w, key.clone()));
            if !self.cfg.explore_all {
                self.stop.store(true, Ordering::SeqCst);
                return Ok(());
            }
        }
        self.expand(&key);
        Ok(())
    }

    fn work(&self) {
        let mut idle_spins = 0u32;
        while !self.stop.load(Ordering::SeqCst) {
            // announce before looking so an empty queue never hides a job
            // that is still being expanded
            self.pending.fetch_add(1, Ordering::SeqCst);
            match self.queue.pop() {
                Some(key) => {
                    idle_spins = 0;
                    let outcome = self.control.check().and_then(|_| self.process(key));
                    if let Err(e) = outcome {
                        self.failure.lock().expect("failure lock").get_or_insert(e);
                        self.stop.store(true, Ordering::SeqCst);
                    }
                    self.pending.fetch_sub(1, Ordering::SeqCst);
                }
                None => {
                    self.pending.fetch_sub(1, Ordering::SeqCst);
                    if self.pending.load(Ordering::SeqCst) == 0 && self.queue.is_empty() {
                        break;
                    }
                    idle_spins += 1;
                    if idle_spins > 1024 {
                        std::thread::sleep(std::time::Duration::from_micros(50));
                    } else if idle_spins > 64 {
                        std::thread::yield_now();
                    } else {
                        std::hint::spin_loop();
                    }
                }
            }
        }
    }
}

fn key_of(taken: &[u32]) -> Key {
    taken
        .iter()
        .enumerate()
        .filter(|(_, &t)| t > 0)
        .map(|(c, &t)| (c as u32, t))
        .collect()
}

/// Picks concrete ids for a fair state.
fn fair_ids(classes: &[Class], key: &Key, spec: &FairnessSpec) -> Vec<usize> {
    let ranges: Vec<(usize, usize)> = key.iter().map(|&(c, t)| classes[c as usize].range(t as usize)).collect();
    let lo: usize = ranges.iter().map(|r| r.0).sum();
    let mut extra = spec.lower.saturating_sub(lo);
    let mut ids = Vec::new();
    for (&(c, t), &(rlo, rhi)) in key.iter().zip(&ranges) {
        let class = &classes[c as usize];
        let p = rlo + extra.min(rhi - rlo);
        extra -= p - rlo;
        ids.extend(class.protected.iter().take(p));
        ids.extend(class.others.iter().take(t as usize - p));
    }
    ids.sort_unstable();
    ids
}

pub fn find_fair_hd(ds: &Dataset, spec: &FairnessSpec, wbox: &WeightBox, cfg: &KlevelConfig) -> Result<KlevelReport> {
    find_fair_hd_with(ds, spec, wbox, cfg, &Control::new())
}

pub fn find_fair_hd_with(
    ds: &Dataset,
    spec: &FairnessSpec,
    wbox: &WeightBox,
    cfg: &KlevelConfig,
    control: &Control,
) -> Result<KlevelReport> {
    let d = ds.dim();
    if !(2..=MAX_LP_DIM).contains(&d) {
        return Err(Error::UnsupportedDimension { dim: d, reason: "the k-level search supports 2 to 12 attributes" });
    }
    if wbox.dim() != d {
        return Err(Error::Parameter(format!("weight region has dimension {}, dataset {d}", wbox.dim())));
    }
    if cfg.workers == 0 {
        return Err(Error::Parameter("at least one worker is required".into()));
    }
    spec.validate_for(ds)?;
    let empty = |outcome| KlevelReport { outcome, stats: KlevelStats::default(), reached: Vec::new() };
    let Some(w0) = feasible_point_in_box(wbox, cfg.seed)? else {
        return Ok(empty(KlevelOutcome::Infeasible));
    };
    let r0 = top_k(ds, &w0, spec.k)?;
    if !cfg.explore_all {
        if let Some(subset) = fair_completion(ds, &r0, spec) {
            return Ok(empty(KlevelOutcome::Found { weight: w0, subset }));
        }
    }

    let (classes, class_of) = classes_of(ds);
    let mut taken = vec![0u32; classes.len()];
    for id in r0.a_completion() {
        let i = ds.index_of(id).expect("top-k ids belong to the dataset");
        taken[class_of[i]] += 1;
    }
    let search = Search {
        classes: &classes,
        region: simplex_rows(wbox),
        scale: ds.grid().scale(),
        spec: *spec,
        cfg,
        control,
        queue: SegQueue::new(),
        seen: DashSet::new(),
        visited: DashSet::new(),
        pending: AtomicUsize::new(0),
        stop: AtomicBool::new(false),
        budget_hit: AtomicBool::new(false),
        result: OnceLock::new(),
        failure: Mutex::new(None),
        reached: Mutex::new(Vec::new()),
        lps: AtomicU64::new(0),
        expansions: AtomicU64::new(0),
        enqueued: AtomicU64::new(0),
        pruned: AtomicU64::new(0),
    };
    let root = key_of(&taken);
    search.seen.insert(root.clone());
    if cfg.explore_all {
        // the root goes through the same LP path as every other state
        search.enqueued.fetch_add(1, Ordering::Relaxed);
        search.queue.push(root);
    } else {
        search.expand(&root);
    }

    std::thread::scope(|scope| {
        for _ in 1..cfg.workers {
            scope.spawn(|| search.work());
        }
        search.work();
    });

    if let Some(e) = search.failure.lock().expect("failure lock").take() {
        return Err(e);
    }
    let stats = KlevelStats {
        lps: search.lps.load(Ordering::SeqCst),
        expansions: search.expansions.load(Ordering::SeqCst),
        enqueued: search.enqueued.load(Ordering::SeqCst),
        pruned: search.pruned.load(Ordering::SeqCst),
        visited: search.visited.len() as u64,
    };
    let mut reached: Vec<Vec<usize>> = search
        .reached
        .into_inner()
        .expect("reached lock")
        .iter()
        .map(|k| canonical_ids(&classes, k))
        .collect();
    reached.sort();
    let outcome = match search.result.into_inner() {
        Some((weight, key)) => KlevelOutcome::Found { weight, subset: fair_ids(&classes, &key, spec) },
        None if search.budget_hit.load(Ordering::SeqCst) => KlevelOutcome::BudgetExhausted,
        None => KlevelOutcome::Infeasible,
    };
    Ok(KlevelReport { outcome, stats, reached })
}
