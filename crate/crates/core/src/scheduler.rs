//! Sequential resource-block allocation.
//!
//! Mobiles are served one after another in index order. Each one takes RBs
//! slot by slot in priority order, subcarriers ascending, loading every RB at
//! its Shannon capacity until its per-frame target is met. Slots that end up
//! with no RB assigned are DTX slots.

use crate::channel::SinrTensor;
use crate::strategies::SlotPriority;

/// Subcarrier bandwidth and slot duration of one RB.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RbNumerology {
    pub subcarrier_bw_hz: f64,
    pub slot_duration_s: f64,
}

impl RbNumerology {
    pub fn bits(&self, sinr: f64) -> f64 {
        rb_bits(sinr, self.subcarrier_bw_hz, self.slot_duration_s)
    }
}

/// Shannon bits carried by one RB at linear SINR `s`.
pub fn rb_bits(s: f64, subcarrier_bw_hz: f64, slot_duration_s: f64) -> f64 {
    debug_assert!(s >= 0.0);
    subcarrier_bw_hz * slot_duration_s * (1.0 + s).log2()
}

/// Per-mobile bits to deliver in each frame.
#[derive(Debug, Clone, PartialEq)]
pub struct RateTargets(pub Vec<f64>);

impl RateTargets {
    /// Same rate for `k` mobiles, converted to bits per frame.
    pub fn uniform_mbps(rate_mbps: f64, k: usize, frame_duration_s: f64) -> Self {
        assert!(rate_mbps > 0.0, "target rate must be positive");
        RateTargets(vec![rate_mbps * 1e6 * frame_duration_s; k])
    }

    pub fn num_mobiles(&self) -> usize {
        self.0.len()
    }
}

/// The RB-to-mobile mapping of one cell for one frame.
#[derive(Debug, Clone, PartialEq)]
pub struct ScheduleMap {
    num_subcarriers: usize,
    num_slots: usize,
    owner: Vec<Option<usize>>,
    bits: Vec<f64>,
}

impl ScheduleMap {
    pub fn empty(num_subcarriers: usize, num_slots: usize) -> Self {
        ScheduleMap {
            num_subcarriers,
            num_slots,
            owner: vec![None; num_subcarriers * num_slots],
            bits: vec![0.0; num_subcarriers * num_slots],
        }
    }

    #[inline]
    fn index(&self, n: usize, t: usize) -> usize {
        n * self.num_slots + t
    }

    pub fn num_subcarriers(&self) -> usize {
        self.num_subcarriers
    }

    pub fn num_slots(&self) -> usize {
        self.num_slots
    }

    /// Mobile owning RB `(n, t)`, or `None` when it is unscheduled.
    pub fn owner(&self, n: usize, t: usize) -> Option<usize> {
        self.owner[self.index(n, t)]
    }

    pub fn bits(&self, n: usize, t: usize) -> f64 {
        self.bits[self.index(n, t)]
    }

    /// Assigns an RB. `bits` must be positive.
    pub fn assign(&mut self, n: usize, t: usize, mobile: usize, bits: f64) {
        assert!(bits > 0.0, "scheduled RBs carry a positive bit load");
        let i = self.index(n, t);
        assert!(self.owner[i].is_none(), "RB ({n}, {t}) assigned twice");
        self.owner[i] = Some(mobile);
        self.bits[i] = bits;
    }

    pub fn scheduled_rbs(&self) -> usize {
        self.owner.iter().filter(|o| o.is_some()).count()
    }

    pub fn slot_used(&self, t: usize) -> bool {
        (0..self.num_subcarriers).any(|n| self.owner(n, t).is_some())
    }

    pub fn used_slots(&self) -> Vec<bool> {
        (0..self.num_slots).map(|t| self.slot_used(t)).collect()
    }

    /// Number of transmission slots.
    pub fn t_tx(&self) -> usize {
        self.used_slots().iter().filter(|&&u| u).count()
    }

    /// Number of DTX slots: no RB scheduled on any subcarrier.
    pub fn t_s(&self) -> usize {
        self.num_slots - self.t_tx()
    }

    /// Scheduled `(n, t, bits)` of `mobile`.
    pub fn rbs_of(&self, mobile: usize) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        self.owner
            .iter()
            .enumerate()
            .filter(move |(_, o)| **o == Some(mobile))
            .map(move |(i, _)| (i / self.num_slots, i % self.num_slots, self.bits[i]))
    }

    pub fn scheduled_bits(&self, mobile: usize) -> f64 {
        self.rbs_of(mobile).map(|(_, _, b)| b).sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Allocation {
    pub schedule: ScheduleMap,
    /// Mobiles whose target could not be met with the remaining RBs.
    pub infeasible: Vec<bool>,
}

/// Fills RBs mobile by mobile in `priority` slot order.
///
/// RBs whose estimated load is zero bits are passed over. A mobile that runs
/// out of RBs keeps what it got and is flagged infeasible.
pub fn allocate(
    priority: &SlotPriority,
    est: &SinrTensor,
    targets: &RateTargets,
    numerology: &RbNumerology,
) -> Allocation {
    let n_sc = est.num_subcarriers();
    let slots = est.num_slots();
    assert_eq!(targets.num_mobiles(), est.num_mobiles());
    debug_assert!(priority.is_permutation_of(slots));

    let mut schedule = ScheduleMap::empty(n_sc, slots);
    let mut infeasible = vec![false; targets.num_mobiles()];
    for (k, &target) in targets.0.iter().enumerate() {
        let mut loaded = 0.0;
        'fill: for &t in priority.slots() {
            for n in 0..n_sc {
                if loaded >= target {
                    break 'fill;
                }
                if schedule.owner(n, t).is_some() {
                    continue;
                }
                let bits = numerology.bits(est.get(n, t, k));
                if bits > 0.0 {
                    schedule.assign(n, t, k, bits);
                    loaded += bits;
                }
            }
        }
        infeasible[k] = loaded < target;
    }
    Allocation { schedule, infeasible }
}
