//! Kinetic tournament tree over 2-D dual lines.
//!
//! A fixed-size kinetic priority queue parameterized by the sweep coordinate.
//! The full binary tree is flattened in pre-order; every internal node caches
//! the winner of its subtree just after `now` and the coordinate at which
//! that winner certificate fails. Ties at a crossing are broken by the
//! perturbed order: value at `t`, then slope (the value at `t + eps`), then
//! the smaller stable index ranks higher.

use std::cmp::Ordering;
use std::collections::HashMap;
use std::fmt;

use num_bigint::BigInt;
use num_traits::ToPrimitive;

use crate::error::{Error, Result};
use crate::geometry::DualLine;
use crate::rational::Q;

/// Largest numerator/denominator accepted for a sweep coordinate; keeps
/// every product in the predicates inside `i128`.
const COORD_LIMIT: i128 = 1_000_000_000_000_000_000;

/// Exact sweep coordinate `num / den` (`den > 0`, not necessarily reduced).
#[derive(Clone, Copy)]
pub struct Coord {
    num: i128,
    den: i128,
}

impl Coord {
    pub fn new(num: i128, den: i128) -> Self {
        assert!(den != 0, "zero denominator");
        if den < 0 {
            Coord { num: -num, den: -den }
        } else {
            Coord { num, den }
        }
    }

    pub fn zero() -> Self {
        Coord { num: 0, den: 1 }
    }

    pub fn num(&self) -> i128 {
        self.num
    }

    pub fn den(&self) -> i128 {
        self.den
    }

    pub fn from_rational(x: &Q) -> Result<Self> {
        let too_big = || {
            Error::Parameter(format!(
                "sweep coordinate {x} needs more precision than the exact predicates support"
            ))
        };
        let num = x.numer().to_i128().ok_or_else(too_big)?;
        let den = x.denom().to_i128().ok_or_else(too_big)?;
        if num.abs() > COORD_LIMIT || den > COORD_LIMIT {
            return Err(too_big());
        }
        Ok(Coord::new(num, den))
    }

    pub fn to_rational(self) -> Q {
        Q::new(BigInt::from(self.num), BigInt::from(self.den))
    }

    pub fn to_f64(self) -> f64 {
        self.num as f64 / self.den as f64
    }

    /// Coordinate where two lines meet; `None` for parallel lines.
    pub fn crossing(a: &DualLine, b: &DualLine) -> Option<Coord> {
        let dm = a.slope as i128 - b.slope as i128;
        if dm == 0 {
            return None;
        }
        Some(Coord::new(b.intercept as i128 - a.intercept as i128, dm))
    }
}

impl PartialEq for Coord {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Coord {}

impl PartialOrd for Coord {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Coord {
    fn cmp(&self, other: &Self) -> Ordering {
        (self.num * other.den).cmp(&(other.num * self.den))
    }
}

impl fmt::Debug for Coord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.num, self.den)
    }
}

/// `value(line, t) * t.den`, exact.
#[inline]
pub fn scaled_value(line: &DualLine, t: Coord) -> i128 {
    line.slope as i128 * t.num + line.intercept as i128 * t.den
}

/// Compares the two lines' values at exactly `t`.
#[inline]
pub fn value_cmp(a: &DualLine, b: &DualLine, t: Coord) -> Ordering {
    scaled_value(a, t).cmp(&scaled_value(b, t))
}

/// The perturbed order at `t`: `Greater` means `a` lies above `b` just after
/// `t`. Identical lines are ordered by stable index (smaller ranks higher).
#[inline]
pub fn perturbed_cmp(a: &DualLine, b: &DualLine, t: Coord) -> Ordering {
    value_cmp(a, b, t)
        .then(a.slope.cmp(&b.slope))
        .then(b.stable_index.cmp(&a.stable_index))
}

fn min_time(a: Option<Coord>, b: Option<Coord>) -> Option<Coord> {
    match (a, b) {
        (Some(x), Some(y)) => Some(x.min(y)),
        (x, None) => x,
        (None, y) => y,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Min,
    Max,
}

const NONE: u32 = u32::MAX;

#[derive(Debug, Clone)]
struct Node {
    winner: u32,
    event: Option<Coord>,
    min_event: Option<Coord>,
    left: u32,
    right: u32,
    parent: u32,
}

/// Fixed-size kinetic priority queue (min or max) over dual lines.
#[derive(Debug, Clone)]
pub struct KineticTournament {
    mode: Mode,
    leaves: Vec<DualLine>,
    leaf_node: Vec<u32>,
    nodes: Vec<Node>,
    position: HashMap<usize, u32>,
    now: Coord,
    pg_count: usize,
    depth: usize,
    last_updates: usize,
}

impl KineticTournament {
    pub fn build(lines: Vec<DualLine>, mode: Mode, t0: Coord) -> Result<Self> {
        if lines.is_empty() {
            return Err(Error::Parameter("kinetic tournament needs at least one line".into()));
        }
        let n = lines.len();
        if n >= NONE as usize / 2 {
            return Err(Error::Parameter("too many lines".into()));
        }
        let mut position = HashMap::with_capacity(n);
        for (i, l) in lines.iter().enumerate() {
            if position.insert(l.owner, i as u32).is_some() {
                return Err(Error::Parameter(format!("line {} appears twice", l.owner)));
            }
        }
        let mut tree = KineticTournament {
            mode,
            pg_count: lines.iter().filter(|l| l.protected).count(),
            leaves: lines,
            leaf_node: vec![NONE; n],
            nodes: Vec::with_capacity(2 * n - 1),
            position,
            now: t0,
            depth: 0,
            last_updates: 0,
        };
        tree.layout(0, n, NONE, 0);
        // pre-order: children always follow their parent
        for i in (0..tree.nodes.len()).rev() {
            tree.recompute(i);
        }
        tree.last_updates = tree.nodes.len();
        Ok(tree)
    }

    fn layout(&mut self, lo: usize, hi: usize, parent: u32, depth: usize) -> u32 {
        let idx = self.nodes.len() as u32;
        self.depth = self.depth.max(depth);
        self.nodes.push(Node {
            winner: lo as u32,
            event: None,
            min_event: None,
            left: NONE,
            right: NONE,
            parent,
        });
        if hi - lo == 1 {
            self.leaf_node[lo] = idx;
        } else {
            let mid = lo + (hi - lo).div_ceil(2);
            let left = self.layout(lo, mid, idx, depth + 1);
            let right = self.layout(mid, hi, idx, depth + 1);
            let node = &mut self.nodes[idx as usize];
            node.left = left;
            node.right = right;
        }
        idx
    }

    #[inline]
    fn beats(&self, a: &DualLine, b: &DualLine) -> bool {
        let ord = perturbed_cmp(a, b, self.now);
        match self.mode {
            Mode::Max => ord == Ordering::Greater,
            Mode::Min => ord == Ordering::Less,
        }
    }

    /// When `loser` overtakes `winner` after `now`, if ever.
    fn certificate(&self, winner: &DualLine, loser: &DualLine) -> Option<Coord> {
        let overtakes = match self.mode {
            Mode::Max => loser.slope > winner.slope,
            Mode::Min => loser.slope < winner.slope,
        };
        if !overtakes {
            return None;
        }
        Coord::crossing(winner, loser).filter(|&c| c > self.now)
    }

    fn recompute(&mut self, i: usize) {
        let (left, right) = (self.nodes[i].left, self.nodes[i].right);
        if left == NONE {
            let node = &mut self.nodes[i];
            node.event = None;
            node.min_event = None;
            return;
        }
        let (left, right) = (left as usize, right as usize);
        let a = self.nodes[left].winner;
        let b = self.nodes[right].winner;
        let (la, lb) = (&self.leaves[a as usize], &self.leaves[b as usize]);
        let (winner, event) = if self.beats(la, lb) {
            (a, self.certificate(la, lb))
        } else {
            (b, self.certificate(lb, la))
        };
        let min_event = min_time(event, min_time(self.nodes[left].min_event, self.nodes[right].min_event));
        let node = &mut self.nodes[i];
        node.winner = winner;
        node.event = event;
        node.min_event = min_event;
    }

    fn repair_path(&mut self, mut i: usize) {
        let mut updates = 0;
        loop {
            self.recompute(i);
            updates += 1;
            let parent = self.nodes[i].parent;
            if parent == NONE {
                break;
            }
            i = parent as usize;
        }
        self.last_updates = updates;
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn now(&self) -> Coord {
        self.now
    }

    pub fn len(&self) -> usize {
        self.leaves.len()
    }

    pub fn is_empty(&self) -> bool {
        self.leaves.is_empty()
    }

    /// Depth of the deepest leaf; equals `ceil(log2(len))`.
    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn lines(&self) -> &[DualLine] {
        &self.leaves
    }

    pub fn contains(&self, owner: usize) -> bool {
        self.position.contains_key(&owner)
    }

    /// Nodes recomputed by the most recent `advance` or `replace`.
    pub fn last_update_count(&self) -> usize {
        self.last_updates
    }

    pub fn top(&self) -> &DualLine {
        &self.leaves[self.nodes[0].winner as usize]
    }

    /// Number of leaves owned by the protected group.
    pub fn pg_count(&self) -> usize {
        self.pg_count
    }

    /// Earliest pending certificate failure, or `None` (never). Failures
    /// that share the current coordinate stay pending until advanced.
    pub fn next_event_time(&self) -> Option<Coord> {
        self.nodes[0].min_event
    }

    /// Processes one certificate failure at the earliest pending coordinate.
    pub fn advance(&mut self) -> Result<()> {
        let t = self
            .next_event_time()
            .ok_or_else(|| Error::State("advance called with no pending event".into()))?;
        self.now = self.now.max(t);
        let mut i = 0usize;
        while self.nodes[i].event != Some(t) {
            let node = &self.nodes[i];
            debug_assert!(node.left != NONE);
            i = if self.nodes[node.left as usize].min_event == Some(t) {
                node.left as usize
            } else {
                node.right as usize
            };
        }
        self.repair_path(i);
        Ok(())
    }

    /// Moves `now` forward to `t` when no certificate fails before `t`.
    pub fn fast_forward(&mut self, t: Coord) -> Result<()> {
        if t < self.now {
            return Err(Error::State(format!("cannot move back from {:?} to {t:?}", self.now)));
        }
        if let Some(next) = self.next_event_time() {
            if next < t {
                return Err(Error::State(format!("pending event at {next:?} precedes {t:?}")));
            }
        }
        self.now = t;
        Ok(())
    }

    /// Swaps the leaf owned by `out` for `line` and repairs its path.
    pub fn replace(&mut self, out: usize, line: DualLine) -> Result<()> {
        let leaf = *self
            .position
            .get(&out)
            .ok_or_else(|| Error::Parameter(format!("line {out} is not in the queue")))?;
        if line.owner != out && self.position.contains_key(&line.owner) {
            return Err(Error::Parameter(format!("line {} is already in the queue", line.owner)));
        }
        let old = self.leaves[leaf as usize];
        self.pg_count = self.pg_count - old.protected as usize + line.protected as usize;
        self.position.remove(&out);
        self.position.insert(line.owner, leaf);
        self.leaves[leaf as usize] = line;
        self.repair_path(self.leaf_node[leaf as usize] as usize);
        Ok(())
    }

    /// Every leaf whose value at `t` equals the top's value at `t`.
    /// `t` must not lie beyond the next pending event.
    pub fn collect_tied_with_top(&self, t: Coord) -> Result<Vec<DualLine>> {
        if t < self.now || self.next_event_time().is_some_and(|e| e < t) {
            return Err(Error::State(format!("tree is not valid at {t:?}")));
        }
        let target = scaled_value(self.top(), t);
        let mut out = Vec::new();
        let mut stack = vec![0usize];
        while let Some(i) = stack.pop() {
            let node = &self.nodes[i];
            if scaled_value(&self.leaves[node.winner as usize], t) != target {
                continue;
            }
            if node.left == NONE {
                out.push(self.leaves[node.winner as usize]);
            } else {
                stack.push(node.right as usize);
                stack.push(node.left as usize);
            }
        }
        Ok(out)
    }
}

/// Exact rational value of `line` at `t` in grid units.
pub fn value_units(line: &DualLine, t: Coord) -> Q {
    Q::new(BigInt::from(scaled_value(line, t)), BigInt::from(t.den))
}
