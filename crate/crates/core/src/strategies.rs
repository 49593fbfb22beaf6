//! DTX time-slot prioritization strategies.
//!
//! Every strategy turns last frame's slot capacities into a [`SlotPriority`]:
//! the scheduler fills slots in that order and leaves the unconsumed tail in
//! DTX. Slot indices are zero-based.

use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::channel::SinrTensor;

/// Hypothetical sum capacity `B_t` of every slot, in bits per channel use.
#[derive(Debug, Clone, PartialEq)]
pub struct SlotCapacity(pub Vec<f64>);

impl SlotCapacity {
    pub fn num_slots(&self) -> usize {
        self.0.len()
    }
}

/// `B_t = sum_k sum_n log2(1 + s[n][t][k])`.
pub fn slot_sum_capacity(sinr: &SinrTensor) -> SlotCapacity {
    let mut b = vec![0.0; sinr.num_slots()];
    for k in 0..sinr.num_mobiles() {
        for n in 0..sinr.num_subcarriers() {
            for (t, bt) in b.iter_mut().enumerate() {
                *bt += (1.0 + sinr.get(n, t, k)).log2();
            }
        }
    }
    SlotCapacity(b)
}

/// Slot indices in descending priority.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SlotPriority(pub Vec<usize>);

impl SlotPriority {
    pub fn slots(&self) -> &[usize] {
        &self.0
    }

    pub fn is_permutation_of(&self, num_slots: usize) -> bool {
        let mut seen = vec![false; num_slots];
        self.0.len() == num_slots
            && self
                .0
                .iter()
                .all(|&t| t < num_slots && !std::mem::replace(&mut seen[t], true))
    }
}

/// Slots sorted by descending capacity, lower index first on ties.
pub fn rank_by_capacity(b: &SlotCapacity) -> SlotPriority {
    let mut order: Vec<usize> = (0..b.num_slots()).collect();
    order.sort_by(|&x, &y| b.0[y].total_cmp(&b.0[x]).then(x.cmp(&y)));
    SlotPriority(order)
}

/// Fills slots in index order every frame.
pub fn sequential_priority(num_slots: usize) -> SlotPriority {
    assert!(num_slots >= 1);
    SlotPriority((0..num_slots).collect())
}

/// A fresh uniform permutation of the slots.
pub fn random_priority<R: Rng + ?Sized>(num_slots: usize, rng: &mut R) -> SlotPriority {
    assert!(num_slots >= 1);
    let mut v: Vec<usize> = (0..num_slots).collect();
    v.shuffle(rng);
    SlotPriority(v)
}

/// Capacity ranking adopted with probability `p`, otherwise the previous
/// priority is kept. Without a previous priority the ranking is adopted.
pub fn p_persistent_priority<R: Rng + ?Sized>(
    b: &SlotCapacity,
    prev: Option<&SlotPriority>,
    p: f64,
    rng: &mut R,
) -> SlotPriority {
    assert!((0.0..=1.0).contains(&p), "persistence probability out of range");
    let candidate = rank_by_capacity(b);
    match prev {
        Some(prev) if rng.random::<f64>() >= p => prev.clone(),
        _ => candidate,
    }
}

/// Persistent per-slot scores of the memory strategy.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScoreState {
    pub psi: Vec<i32>,
    pub psi_ul: i32,
    pub psi_ll: i32,
    /// Slots used for transmission in the previous frame.
    pub used_last: Vec<bool>,
}

impl ScoreState {
    /// All scores at the lower bound and every slot marked as used, matching a
    /// full-power first frame.
    pub fn initial(num_slots: usize, psi_ul: i32, psi_ll: i32) -> Self {
        assert!(psi_ll <= psi_ul);
        ScoreState {
            psi: vec![psi_ll; num_slots],
            psi_ul,
            psi_ll,
            used_last: vec![true; num_slots],
        }
    }

    pub fn num_slots(&self) -> usize {
        self.psi.len()
    }

    pub fn in_bounds(&self) -> bool {
        self.psi.iter().all(|&s| (self.psi_ll..=self.psi_ul).contains(&s))
    }
}

/// One memory update given the capacity ranking `R` directly.
///
/// Used slots gain one point, unused slots other than `R_0` lose one, and
/// `R_0` gains one more; all moves are clamped to `[psi_ll, psi_ul]`. The
/// priority is `R` stably re-sorted by descending score, so equal scores keep
/// their capacity order.
pub fn memory_update_ranked(state: &ScoreState, ranking: &SlotPriority) -> (ScoreState, SlotPriority) {
    let mut next = state.clone();
    let best = ranking.0[0];
    for (t, &used) in state.used_last.iter().enumerate() {
        if used {
            if next.psi[t] < next.psi_ul {
                next.psi[t] += 1;
            }
        } else if t != best && next.psi[t] > next.psi_ll {
            next.psi[t] -= 1;
        }
    }
    if next.psi[best] < next.psi_ul {
        next.psi[best] += 1;
    }
    let mut v = ranking.0.clone();
    v.sort_by_key(|&t| std::cmp::Reverse(next.psi[t]));
    (next, SlotPriority(v))
}

/// Memory update from slot capacities.
pub fn memory_update(state: &ScoreState, b: &SlotCapacity) -> (ScoreState, SlotPriority) {
    memory_update_ranked(state, &rank_by_capacity(b))
}

/// Strategy selection.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StrategyKind {
    Sequential,
    Random,
    PPersistent,
    Memory,
}

impl StrategyKind {
    pub const ALL: [StrategyKind; 4] = [
        StrategyKind::Sequential,
        StrategyKind::Random,
        StrategyKind::PPersistent,
        StrategyKind::Memory,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            StrategyKind::Sequential => "sequential",
            StrategyKind::Random => "random",
            StrategyKind::PPersistent => "p_persistent",
            StrategyKind::Memory => "memory",
        }
    }
}

impl fmt::Display for StrategyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for StrategyKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.replace('-', "_").as_str() {
            "sequential" => Ok(StrategyKind::Sequential),
            "random" => Ok(StrategyKind::Random),
            "p_persistent" | "ppersistent" => Ok(StrategyKind::PPersistent),
            "memory" => Ok(StrategyKind::Memory),
            other => Err(format!(
                "unknown strategy `{other}` (expected sequential, random, p_persistent or memory)"
            )),
        }
    }
}

/// Scores, capacity ranking and resulting priority of one memory update.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MemoryTrace {
    pub used: Vec<usize>,
    pub ranking: SlotPriority,
    pub psi: Vec<i32>,
    pub priority: SlotPriority,
}

impl MemoryTrace {
    /// One-line rendering with slots named by `label`, e.g.
    /// `used={c} R=(b,c,a) psi={a:0,b:3,c:5} V=(c,b,a)`.
    pub fn to_line(&self, label: impl Fn(usize) -> String) -> String {
        let join = |slots: &[usize]| slots.iter().map(|&t| label(t)).collect::<Vec<_>>().join(",");
        let psi = self
            .psi
            .iter()
            .enumerate()
            .map(|(t, s)| format!("{}:{}", label(t), s))
            .collect::<Vec<_>>()
            .join(",");
        format!(
            "used={{{}}} R=({}) psi={{{}}} V=({})",
            join(&self.used),
            join(self.ranking.slots()),
            psi,
            join(self.priority.slots())
        )
    }
}

/// Per-cell strategy state driven once per frame.
pub trait SlotStrategy: Send {
    fn kind(&self) -> StrategyKind;

    /// Priority for the coming frame from last frame's capacities.
    fn prioritize(&mut self, capacity: &SlotCapacity) -> SlotPriority;

    /// Slots that actually carried traffic in the frame just scheduled.
    fn record_usage(&mut self, _used: &[bool]) {}

    fn last_trace(&self) -> Option<&MemoryTrace> {
        None
    }
}

pub struct Sequential {
    num_slots: usize,
}

impl Sequential {
    pub fn new(num_slots: usize) -> Self {
        Sequential { num_slots }
    }
}

impl SlotStrategy for Sequential {
    fn kind(&self) -> StrategyKind {
        StrategyKind::Sequential
    }

    fn prioritize(&mut self, _capacity: &SlotCapacity) -> SlotPriority {
        sequential_priority(self.num_slots)
    }
}

pub struct RandomAlignment {
    num_slots: usize,
    rng: ChaCha8Rng,
}

impl RandomAlignment {
    pub fn new(num_slots: usize, rng: ChaCha8Rng) -> Self {
        RandomAlignment { num_slots, rng }
    }
}

impl SlotStrategy for RandomAlignment {
    fn kind(&self) -> StrategyKind {
        StrategyKind::Random
    }

    fn prioritize(&mut self, _capacity: &SlotCapacity) -> SlotPriority {
        random_priority(self.num_slots, &mut self.rng)
    }
}

pub struct PPersistent {
    p: f64,
    prev: Option<SlotPriority>,
    rng: ChaCha8Rng,
}

impl PPersistent {
    pub fn new(p: f64, rng: ChaCha8Rng) -> Self {
        PPersistent { p, prev: None, rng }
    }
}

impl SlotStrategy for PPersistent {
    fn kind(&self) -> StrategyKind {
        StrategyKind::PPersistent
    }

    fn prioritize(&mut self, capacity: &SlotCapacity) -> SlotPriority {
        let v = p_persistent_priority(capacity, self.prev.as_ref(), self.p, &mut self.rng);
        self.prev = Some(v.clone());
        v
    }
}

pub struct MemoryAlignment {
    state: ScoreState,
    trace: Option<MemoryTrace>,
}

impl MemoryAlignment {
    pub fn new(num_slots: usize, psi_ul: i32, psi_ll: i32) -> Self {
        MemoryAlignment {
            state: ScoreState::initial(num_slots, psi_ul, psi_ll),
            trace: None,
        }
    }

    pub fn state(&self) -> &ScoreState {
        &self.state
    }
}

impl SlotStrategy for MemoryAlignment {
    fn kind(&self) -> StrategyKind {
        StrategyKind::Memory
    }

    fn prioritize(&mut self, capacity: &SlotCapacity) -> SlotPriority {
        let ranking = rank_by_capacity(capacity);
        let (state, priority) = memory_update_ranked(&self.state, &ranking);
        self.trace = Some(MemoryTrace {
            used: used_slots(&self.state.used_last),
            ranking,
            psi: state.psi.clone(),
            priority: priority.clone(),
        });
        self.state = state;
        priority
    }

    fn record_usage(&mut self, used: &[bool]) {
        self.state.used_last = used.to_vec();
    }

    fn last_trace(&self) -> Option<&MemoryTrace> {
        self.trace.as_ref()
    }
}

/// One scripted input to [`replay_memory`]: the slots used in the previous
/// frame and the capacity ranking seen now.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReplayStep {
    pub used: Vec<usize>,
    pub ranking: SlotPriority,
}

/// Applies scripted memory updates starting from `initial`.
pub fn replay_memory(initial: &ScoreState, steps: &[ReplayStep]) -> Vec<MemoryTrace> {
    let mut state = initial.clone();
    steps
        .iter()
        .map(|step| {
            state.used_last = (0..state.num_slots()).map(|t| step.used.contains(&t)).collect();
            let (next, priority) = memory_update_ranked(&state, &step.ranking);
            state = next;
            MemoryTrace {
                used: step.used.clone(),
                ranking: step.ranking.clone(),
                psi: state.psi.clone(),
                priority,
            }
        })
        .collect()
}

/// Three slots `a, b, c` starting from scores `{a:0, b:2, c:5}`, replayed
/// over three frames.
pub fn three_slot_example() -> (ScoreState, Vec<ReplayStep>) {
    let (a, b, c) = (0, 1, 2);
    let initial = ScoreState {
        psi: vec![0, 2, 5],
        psi_ul: 5,
        psi_ll: 0,
        used_last: vec![false, false, true],
    };
    let step = |used: &[usize], ranking: [usize; 3]| ReplayStep {
        used: used.to_vec(),
        ranking: SlotPriority(ranking.to_vec()),
    };
    let steps = vec![
        step(&[c], [b, c, a]),
        step(&[b, c], [b, c, a]),
        step(&[b], [b, a, c]),
    ];
    (initial, steps)
}

/// Letter names `a, b, ...` for slot indices below 26, numbers beyond.
pub fn slot_letter(t: usize) -> String {
    if t < 26 {
        char::from(b'a' + t as u8).to_string()
    } else {
        t.to_string()
    }
}

fn used_slots(mask: &[bool]) -> Vec<usize> {
    mask.iter().enumerate().filter(|(_, &u)| u).map(|(t, _)| t).collect()
}

/// Fresh per-cell state for `kind`.
pub fn build_strategy(
    kind: StrategyKind,
    num_slots: usize,
    p: f64,
    psi_ul: i32,
    psi_ll: i32,
    rng: ChaCha8Rng,
) -> Box<dyn SlotStrategy> {
    match kind {
        StrategyKind::Sequential => Box::new(Sequential::new(num_slots)),
        StrategyKind::Random => Box::new(RandomAlignment::new(num_slots, rng)),
        StrategyKind::PPersistent => Box::new(PPersistent::new(p, rng)),
        StrategyKind::Memory => Box::new(MemoryAlignment::new(num_slots, psi_ul, psi_ll)),
    }
}
