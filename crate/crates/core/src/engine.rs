//! Synchronous multi-cell frame loop and Monte-Carlo aggregation.
//!
//! Frame 0 transmits on every RB of every cell. In each later frame all cells
//! first pick their schedules from the previous frame's SINR reports, then the
//! joint transmit pattern is evaluated once and delivery is checked RB by RB
//! against the realized SINR. Only the centre cell feeds the statistics.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::channel::{compute_sinr, drop_network, noise_power, ChannelParams, SinrTensor, TransmitPattern};
use crate::config::SimConfig;
use crate::geometry::build_hex_layout;
use crate::power::{power_from_counts, total_power, PowerBreakdown};
use crate::scheduler::{allocate, Allocation, RateTargets, ScheduleMap};
use crate::strategies::{build_strategy, slot_sum_capacity, MemoryTrace, SlotStrategy, StrategyKind};

#[derive(Debug, Error, PartialEq)]
pub enum EngineError {
    #[error("no frame metrics to evaluate")]
    EmptyMetrics,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MobileMetrics {
    pub scheduled_bits: f64,
    pub delivered_bits: f64,
    /// Delivered less than the per-frame target.
    pub retransmission: bool,
    /// The scheduler could not fit the target at all.
    pub infeasible: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CellMetrics {
    pub power: PowerBreakdown,
    pub used_slots: Vec<bool>,
    pub mobiles: Vec<MobileMetrics>,
    pub is_center: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FrameMetrics {
    pub frame: usize,
    pub cells: Vec<CellMetrics>,
    /// Memory-strategy update of the centre cell for this frame.
    pub center_trace: Option<MemoryTrace>,
}

impl FrameMetrics {
    pub fn center(&self) -> &CellMetrics {
        self.cells.iter().find(|c| c.is_center).expect("layout has a centre cell")
    }
}

/// Observer of the frame loop's ordering.
pub trait FrameProbe {
    /// Cell `cell` computed its frame-`frame` schedule from the reports of
    /// frame `report_frame`.
    fn on_schedule(&mut self, _frame: usize, _cell: usize, _report_frame: usize) {}

    /// The joint SINR of frame `frame` was evaluated.
    fn on_transmit(&mut self, _frame: usize) {}
}

struct NoProbe;

impl FrameProbe for NoProbe {}

/// Seed of drop `index` derived from the master seed.
pub fn derive_seed(master: u64, index: u64) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(master);
    rng.set_stream(index);
    rng.next_u64()
}

pub fn run_drop(cfg: &SimConfig, drop_seed: u64) -> Vec<FrameMetrics> {
    run_drop_with_probe(cfg, drop_seed, &mut NoProbe)
}

pub fn run_drop_with_probe(cfg: &SimConfig, drop_seed: u64, probe: &mut dyn FrameProbe) -> Vec<FrameMetrics> {
    let layout = build_hex_layout(cfg.tiers, cfg.isd_m);
    let mut rng = ChaCha8Rng::seed_from_u64(drop_seed);
    let channel = ChannelParams {
        shadowing_std_db: cfg.shadowing_std_db,
        num_subcarriers: cfg.subcarriers,
        num_slots: cfg.slots,
        fading: cfg.fading,
    };
    let (_, gains) = drop_network(&layout, cfg.mobiles_per_cell, &channel, cfg.association, &mut rng);
    let n0 = noise_power(cfg.subcarrier_bw_hz(), cfg.noise_temperature_k);
    let numerology = cfg.numerology();
    let power = cfg.power_params();
    let targets = RateTargets::uniform_mbps(cfg.target_rate_mbps, cfg.mobiles_per_cell, cfg.frame_duration_s());
    let cells = layout.num_cells();
    let center = layout.center_cell_index;
    let (n_sc, slots) = (cfg.subcarriers, cfg.slots);

    let mut strategies: Vec<Box<dyn SlotStrategy>> = (0..cells)
        .map(|c| {
            let mut cell_rng = ChaCha8Rng::seed_from_u64(drop_seed);
            cell_rng.set_stream(1 + c as u64);
            build_strategy(cfg.strategy, slots, cfg.p, cfg.psi_ul, cfg.psi_ll, cell_rng)
        })
        .collect();

    let mut metrics = Vec::with_capacity(cfg.frames + 1);

    // frame 0: every RB of every cell carries traffic at the realized SINR
    let full = TransmitPattern::full(cells, n_sc, slots);
    probe.on_transmit(0);
    let mut reports = compute_sinr(&gains, &full, cfg.p_rb_tx_w, n0);
    let initial: Vec<CellMetrics> = reports
        .iter()
        .enumerate()
        .map(|(c, sinr)| {
            let schedule = full_load_schedule(sinr, &numerology);
            let mobiles = (0..cfg.mobiles_per_cell)
                .map(|k| {
                    let bits = schedule.scheduled_bits(k);
                    MobileMetrics {
                        scheduled_bits: bits,
                        delivered_bits: bits,
                        retransmission: bits < targets.0[k],
                        infeasible: false,
                    }
                })
                .collect();
            CellMetrics {
                power: power_from_counts(0, n_sc * slots, slots, &power),
                used_slots: vec![true; slots],
                mobiles,
                is_center: c == center,
            }
        })
        .collect();
    metrics.push(FrameMetrics { frame: 0, cells: initial, center_trace: None });

    for frame in 1..=cfg.frames {
        let allocations: Vec<Allocation> = strategies
            .iter_mut()
            .zip(&reports)
            .enumerate()
            .map(|(c, (strategy, report))| {
                let priority = strategy.prioritize(&slot_sum_capacity(report));
                probe.on_schedule(frame, c, frame - 1);
                allocate(&priority, report, &targets, &numerology)
            })
            .collect();

        let mut pattern = TransmitPattern::silent(cells, n_sc, slots);
        for (c, alloc) in allocations.iter().enumerate() {
            for n in 0..n_sc {
                for t in 0..slots {
                    if alloc.schedule.owner(n, t).is_some() {
                        pattern.set(c, n, t, true);
                    }
                }
            }
        }
        probe.on_transmit(frame);
        let actual = compute_sinr(&gains, &pattern, cfg.p_rb_tx_w, n0);

        let cell_metrics: Vec<CellMetrics> = allocations
            .iter()
            .zip(&actual)
            .zip(strategies.iter_mut())
            .enumerate()
            .map(|(c, ((alloc, sinr), strategy))| {
                let used = alloc.schedule.used_slots();
                strategy.record_usage(&used);
                CellMetrics {
                    power: total_power(&alloc.schedule, &power),
                    used_slots: used,
                    mobiles: deliver(alloc, sinr, &targets, &numerology),
                    is_center: c == center,
                }
            })
            .collect();
        metrics.push(FrameMetrics {
            frame,
            cells: cell_metrics,
            center_trace: strategies[center].last_trace().cloned(),
        });
        reports = actual;
    }
    metrics
}

/// Round-robin assignment of every RB, loaded at the given SINR.
fn full_load_schedule(sinr: &SinrTensor, numerology: &crate::scheduler::RbNumerology) -> ScheduleMap {
    let (n_sc, slots, k) = (sinr.num_subcarriers(), sinr.num_slots(), sinr.num_mobiles());
    let mut schedule = ScheduleMap::empty(n_sc, slots);
    for t in 0..slots {
        for n in 0..n_sc {
            let mobile = (t * n_sc + n) % k;
            let bits = numerology.bits(sinr.get(n, t, mobile));
            if bits > 0.0 {
                schedule.assign(n, t, mobile, bits);
            }
        }
    }
    schedule
}

/// An RB delivers its scheduled bits iff the realized SINR supports them,
/// otherwise nothing.
pub fn deliver(
    alloc: &Allocation,
    actual: &SinrTensor,
    targets: &RateTargets,
    numerology: &crate::scheduler::RbNumerology,
) -> Vec<MobileMetrics> {
    let schedule = &alloc.schedule;
    let mut out: Vec<MobileMetrics> = alloc
        .infeasible
        .iter()
        .map(|&infeasible| MobileMetrics {
            scheduled_bits: 0.0,
            delivered_bits: 0.0,
            retransmission: false,
            infeasible,
        })
        .collect();
    for n in 0..schedule.num_subcarriers() {
        for t in 0..schedule.num_slots() {
            if let Some(k) = schedule.owner(n, t) {
                let scheduled = schedule.bits(n, t);
                out[k].scheduled_bits += scheduled;
                if numerology.bits(actual.get(n, t, k)) >= scheduled {
                    out[k].delivered_bits += scheduled;
                }
            }
        }
    }
    for (m, target) in out.iter_mut().zip(&targets.0) {
        m.retransmission = m.infeasible || m.delivered_bits < *target;
    }
    out
}

/// Fraction of (frame, centre-cell mobile) pairs flagged for retransmission.
pub fn retransmission_probability(metrics: &[FrameMetrics]) -> Result<f64, EngineError> {
    let (flagged, total) = metrics.iter().fold((0usize, 0usize), |(f, n), m| {
        let mobiles = &m.center().mobiles;
        (f + mobiles.iter().filter(|x| x.retransmission).count(), n + mobiles.len())
    });
    if total == 0 {
        return Err(EngineError::EmptyMetrics);
    }
    Ok(flagged as f64 / total as f64)
}

/// First frame from which every later trace value stays within `rel_tol` of
/// `final_value`.
pub fn convergence_frame(trace: &[f64], final_value: f64, rel_tol: f64) -> Option<usize> {
    let within = |v: &f64| (v - final_value).abs() <= rel_tol * final_value.abs();
    if !trace.last().is_some_and(within) {
        return None;
    }
    let tail = trace.iter().rev().take_while(|v| within(v)).count();
    Some(trace.len() - tail)
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub strategy: StrategyKind,
    pub rate_mbps: f64,
    /// Steady-state centre-cell power, W.
    pub mean_power_w: f64,
    /// Centre-cell power per frame averaged over drops; entry 0 is the
    /// full-power initial frame.
    pub power_trace: Vec<f64>,
    pub retransmission_probability: f64,
    pub outage_rate: f64,
    pub convergence_frame: Option<usize>,
}

impl RunSummary {
    pub fn cell_sum_rate_mbps(&self, mobiles_per_cell: usize) -> f64 {
        self.rate_mbps * mobiles_per_cell as f64
    }
}

struct DropStats {
    power_trace: Vec<f64>,
    flagged: usize,
    infeasible: usize,
    pairs: usize,
}

fn drop_stats(metrics: &[FrameMetrics], warmup: usize) -> DropStats {
    let steady = &metrics[warmup.min(metrics.len())..];
    let (mut flagged, mut infeasible, mut pairs) = (0, 0, 0);
    for m in steady {
        for mobile in &m.center().mobiles {
            flagged += mobile.retransmission as usize;
            infeasible += mobile.infeasible as usize;
            pairs += 1;
        }
    }
    DropStats {
        power_trace: metrics.iter().map(|m| m.center().power.total).collect(),
        flagged,
        infeasible,
        pairs,
    }
}

/// Runs every drop of `cfg` and aggregates the centre-cell statistics.
///
/// Drops run in parallel; results are reduced in drop order, so the summary
/// does not depend on the number of worker threads.
pub fn run_summary(cfg: &SimConfig) -> RunSummary {
    let stats: Vec<DropStats> = (0..cfg.drops as u64)
        .into_par_iter()
        .map(|d| drop_stats(&run_drop(cfg, derive_seed(cfg.seed, d)), cfg.warmup_frames))
        .collect();

    let frames = cfg.frames + 1;
    let mut power_trace = vec![0.0; frames];
    for s in &stats {
        for (acc, p) in power_trace.iter_mut().zip(&s.power_trace) {
            *acc += p;
        }
    }
    for p in &mut power_trace {
        *p /= stats.len() as f64;
    }
    let steady = &power_trace[cfg.warmup_frames..];
    let mean_power_w = steady.iter().sum::<f64>() / steady.len() as f64;
    let pairs: usize = stats.iter().map(|s| s.pairs).sum();
    let flagged: usize = stats.iter().map(|s| s.flagged).sum();
    let infeasible: usize = stats.iter().map(|s| s.infeasible).sum();

    RunSummary {
        strategy: cfg.strategy,
        rate_mbps: cfg.target_rate_mbps,
        mean_power_w,
        convergence_frame: convergence_frame(&power_trace, mean_power_w, 0.01),
        power_trace,
        retransmission_probability: flagged as f64 / pairs as f64,
        outage_rate: infeasible as f64 / pairs as f64,
    }
}

/// One summary per target rate for the configured strategy.
pub fn run_experiment(cfg: &SimConfig, rate_sweep: &[f64]) -> Vec<RunSummary> {
    rate_sweep
        .iter()
        .map(|&rate| {
            run_summary(&SimConfig {
                target_rate_mbps: rate,
                ..cfg.clone()
            })
        })
        .collect()
}
