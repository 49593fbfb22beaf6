//! Base-station power consumption of one frame.
//!
//! `P = P_S T_S / T + rho_tx N_tx + P_0 (T - T_S) / T`, where `N_tx` is the
//! average number of transmitting RBs per slot and `rho_tx` is the load
//! factor times the per-RB transmit power.

use serde::{Deserialize, Serialize};

use crate::scheduler::ScheduleMap;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerParams {
    /// DTX power `P_S`, W.
    pub p_sleep: f64,
    /// Idle power `P_0`, W.
    pub p_idle: f64,
    pub load_factor: f64,
    /// Transmit power per RB, W.
    pub p_rb_tx: f64,
}

impl Default for PowerParams {
    fn default() -> Self {
        PowerParams {
            p_sleep: 90.0,
            p_idle: 200.0,
            load_factor: 3.75,
            p_rb_tx: 0.8,
        }
    }
}

impl PowerParams {
    /// Consumption per transmitting RB, `rho_tx`.
    pub fn rho_tx(&self) -> f64 {
        self.load_factor * self.p_rb_tx
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerBreakdown {
    pub total: f64,
    pub sleep_part: f64,
    pub tx_part: f64,
    pub idle_part: f64,
    pub t_s: usize,
    pub n_tx_avg: f64,
}

/// Power from the number of DTX slots and scheduled RBs of a frame.
pub fn power_from_counts(t_s: usize, scheduled_rbs: usize, num_slots: usize, params: &PowerParams) -> PowerBreakdown {
    assert!(t_s <= num_slots && num_slots > 0);
    let slots = num_slots as f64;
    let n_tx_avg = scheduled_rbs as f64 / slots;
    let sleep_part = params.p_sleep * t_s as f64 / slots;
    let tx_part = params.rho_tx() * n_tx_avg;
    let idle_part = params.p_idle * (num_slots - t_s) as f64 / slots;
    PowerBreakdown {
        total: sleep_part + tx_part + idle_part,
        sleep_part,
        tx_part,
        idle_part,
        t_s,
        n_tx_avg,
    }
}

pub fn total_power(schedule: &ScheduleMap, params: &PowerParams) -> PowerBreakdown {
    power_from_counts(schedule.t_s(), schedule.scheduled_rbs(), schedule.num_slots(), params)
}
