//! Link gains and per-resource-block SINR.
//!
//! Gains combine the 2 GHz macro NLOS pathloss curve, lognormal shadowing per
//! (cell, mobile) link and unit-mean exponential fading per RB or per
//! subcarrier. All three are frozen for the lifetime of a drop,
//! so frame-to-frame SINR changes come only from the transmit pattern.

use rand::Rng;
use rand_distr::{Distribution, Exp1, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{drop_mobiles, sample_in_cell, Mobile, MobileDrop, NetworkLayout, Point};

pub const BOLTZMANN: f64 = 1.380_649e-23;

/// Distances below this are evaluated at the floor.
pub const MIN_DISTANCE_M: f64 = 35.0;

#[derive(Debug, Error, PartialEq)]
pub enum ChannelError {
    #[error("distance must be positive, got {0} m")]
    NonPositiveDistance(f64),
}

/// Macro NLOS pathloss `128.1 + 37.6 log10(d / 1 km)` in dB.
pub fn pathloss_db(distance_m: f64) -> Result<f64, ChannelError> {
    if distance_m.is_nan() || distance_m <= 0.0 {
        return Err(ChannelError::NonPositiveDistance(distance_m));
    }
    let d = distance_m.max(MIN_DISTANCE_M);
    Ok(128.1 + 37.6 * (d / 1000.0).log10())
}

/// Zero-mean Gaussian shadowing in dB.
pub fn sample_shadowing<R: Rng + ?Sized>(rng: &mut R, std_db: f64) -> f64 {
    Normal::new(0.0, std_db)
        .expect("shadowing standard deviation must be finite and non-negative")
        .sample(rng)
}

/// Thermal noise power `k_B T B` in watts.
pub fn noise_power(bandwidth_hz: f64, temperature_k: f64) -> f64 {
    BOLTZMANN * temperature_k * bandwidth_hz
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// Linear power gain from every cell to every mobile on every RB.
#[derive(Debug, Clone)]
pub struct LinkGainMap {
    num_cells: usize,
    num_mobiles: usize,
    num_subcarriers: usize,
    num_slots: usize,
    mobiles_per_cell: usize,
    gain: Vec<f64>,
}

impl LinkGainMap {
    /// Builds a map from an explicit `gain[cell][mobile][subcarrier][slot]` array.
    ///
    /// Mobile `m` is served by cell `m / mobiles_per_cell`.
    pub fn from_fn(
        num_cells: usize,
        mobiles_per_cell: usize,
        num_subcarriers: usize,
        num_slots: usize,
        mut f: impl FnMut(usize, usize, usize, usize) -> f64,
    ) -> Self {
        let num_mobiles = num_cells * mobiles_per_cell;
        let mut gain = Vec::with_capacity(num_cells * num_mobiles * num_subcarriers * num_slots);
        for c in 0..num_cells {
            for m in 0..num_mobiles {
                for n in 0..num_subcarriers {
                    for t in 0..num_slots {
                        gain.push(f(c, m, n, t));
                    }
                }
            }
        }
        LinkGainMap {
            num_cells,
            num_mobiles,
            num_subcarriers,
            num_slots,
            mobiles_per_cell,
            gain,
        }
    }

    pub fn num_cells(&self) -> usize {
        self.num_cells
    }

    pub fn num_mobiles(&self) -> usize {
        self.num_mobiles
    }

    pub fn num_subcarriers(&self) -> usize {
        self.num_subcarriers
    }

    pub fn num_slots(&self) -> usize {
        self.num_slots
    }

    pub fn mobiles_per_cell(&self) -> usize {
        self.mobiles_per_cell
    }

    #[inline]
    pub fn gain(&self, cell: usize, mobile: usize, subcarrier: usize, slot: usize) -> f64 {
        self.gain[((cell * self.num_mobiles + mobile) * self.num_subcarriers + subcarrier) * self.num_slots + slot]
    }

    /// Gains of one link, indexed `n * num_slots + t`.
    fn link_gains(&self, cell: usize, mobile: usize) -> &[f64] {
        let len = self.num_subcarriers * self.num_slots;
        let start = (cell * self.num_mobiles + mobile) * len;
        &self.gain[start..start + len]
    }
}

/// Granularity of the small-scale fading draw.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Fading {
    /// One draw per subcarrier, shared by all slots of the frame.
    PerSubcarrier,
    /// An independent draw for every (subcarrier, slot) RB.
    #[default]
    PerResourceBlock,
}

/// How mobiles are attached to cells.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Association {
    /// A mobile dropped in a hexagon is served by that hexagon's cell.
    Geometric,
    /// Drops are redrawn until the hexagon's cell is also the mobile's
    /// strongest link after shadowing.
    #[default]
    StrongestCell,
}

#[derive(Debug, Clone, Copy)]
pub struct ChannelParams {
    pub shadowing_std_db: f64,
    pub num_subcarriers: usize,
    pub num_slots: usize,
    pub fading: Fading,
}

/// Large-scale gain `10^(-(PL + shadowing) / 10)` of every cell towards `position`.
fn large_scale_gains<R: Rng + ?Sized>(
    layout: &NetworkLayout,
    position: &Point,
    shadowing_std_db: f64,
    rng: &mut R,
) -> Vec<f64> {
    layout
        .cell_positions
        .iter()
        .map(|site| {
            // a mobile exactly on a site is evaluated at the distance floor
            let d = site.distance(position).max(f64::MIN_POSITIVE);
            let pl = pathloss_db(d).expect("positive distance");
            db_to_linear(-(pl + sample_shadowing(rng, shadowing_std_db)))
        })
        .collect()
}

/// Applies small-scale fading to `large_scale[cell][mobile]`.
fn with_fading<R: Rng + ?Sized>(
    large_scale: &[Vec<f64>],
    mobiles_per_cell: usize,
    params: &ChannelParams,
    rng: &mut R,
) -> LinkGainMap {
    let cells = large_scale.len();
    let mobiles = cells * mobiles_per_cell;
    let (n_sc, slots) = (params.num_subcarriers, params.num_slots);
    let blocks = match params.fading {
        Fading::PerSubcarrier => 1,
        Fading::PerResourceBlock => slots,
    };
    let fading: Vec<f64> = (0..cells * mobiles * n_sc * blocks)
        .map(|_| Exp1.sample(rng))
        .collect();
    LinkGainMap::from_fn(cells, mobiles_per_cell, n_sc, slots, |c, m, n, t| {
        large_scale[c][m] * fading[((c * mobiles + m) * n_sc + n) * blocks + t % blocks]
    })
}

/// Draws pathloss, shadowing and fading for every link of a given drop.
///
/// Shadowing is drawn per mobile for all cells, then fading in cell-major
/// order.
pub fn build_link_gains<R: Rng + ?Sized>(
    layout: &NetworkLayout,
    drop: &MobileDrop,
    params: &ChannelParams,
    rng: &mut R,
) -> LinkGainMap {
    let per_mobile: Vec<Vec<f64>> = drop
        .mobiles
        .iter()
        .map(|m| large_scale_gains(layout, &m.position, params.shadowing_std_db, rng))
        .collect();
    let large_scale = transpose(&per_mobile, layout.num_cells());
    with_fading(&large_scale, drop.mobiles_per_cell, params, rng)
}

/// Drops `k_per_cell` mobiles per cell and draws their link gains.
///
/// With [`Association::StrongestCell`] a candidate position and its shadowing
/// are redrawn until the dropping cell has the largest large-scale gain, so
/// every mobile still lies in its serving hexagon.
pub fn drop_network<R: Rng + ?Sized>(
    layout: &NetworkLayout,
    k_per_cell: usize,
    params: &ChannelParams,
    association: Association,
    rng: &mut R,
) -> (MobileDrop, LinkGainMap) {
    if association == Association::Geometric {
        let drop = drop_mobiles(layout, k_per_cell, rng);
        let gains = build_link_gains(layout, &drop, params, rng);
        return (drop, gains);
    }
    let mut mobiles = Vec::with_capacity(layout.num_cells() * k_per_cell);
    let mut per_mobile = Vec::with_capacity(layout.num_cells() * k_per_cell);
    for cell in 0..layout.num_cells() {
        for _ in 0..k_per_cell {
            loop {
                let position = sample_in_cell(layout, cell, rng);
                let gains = large_scale_gains(layout, &position, params.shadowing_std_db, rng);
                if strongest(&gains) == cell {
                    mobiles.push(Mobile { position, serving_cell: cell });
                    per_mobile.push(gains);
                    break;
                }
            }
        }
    }
    let large_scale = transpose(&per_mobile, layout.num_cells());
    let drop = MobileDrop { mobiles, mobiles_per_cell: k_per_cell };
    let gains = with_fading(&large_scale, k_per_cell, params, rng);
    (drop, gains)
}

fn strongest(gains: &[f64]) -> usize {
    gains
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .map(|(c, _)| c)
        .expect("at least one cell")
}

fn transpose(per_mobile: &[Vec<f64>], cells: usize) -> Vec<Vec<f64>> {
    (0..cells)
        .map(|c| per_mobile.iter().map(|g| g[c]).collect())
        .collect()
}

/// Per-RB transmit activity of every cell.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TransmitPattern {
    num_cells: usize,
    num_subcarriers: usize,
    num_slots: usize,
    active: Vec<bool>,
}

impl TransmitPattern {
    pub fn silent(num_cells: usize, num_subcarriers: usize, num_slots: usize) -> Self {
        TransmitPattern {
            num_cells,
            num_subcarriers,
            num_slots,
            active: vec![false; num_cells * num_subcarriers * num_slots],
        }
    }

    pub fn full(num_cells: usize, num_subcarriers: usize, num_slots: usize) -> Self {
        TransmitPattern {
            active: vec![true; num_cells * num_subcarriers * num_slots],
            ..Self::silent(num_cells, num_subcarriers, num_slots)
        }
    }

    pub fn num_cells(&self) -> usize {
        self.num_cells
    }

    #[inline]
    fn index(&self, cell: usize, n: usize, t: usize) -> usize {
        (cell * self.num_subcarriers + n) * self.num_slots + t
    }

    pub fn is_active(&self, cell: usize, n: usize, t: usize) -> bool {
        self.active[self.index(cell, n, t)]
    }

    pub fn set(&mut self, cell: usize, n: usize, t: usize, active: bool) {
        let i = self.index(cell, n, t);
        self.active[i] = active;
    }

    /// Turns every RB of `cell` in `slot` off.
    pub fn silence_slot(&mut self, cell: usize, slot: usize) {
        for n in 0..self.num_subcarriers {
            self.set(cell, n, slot, false);
        }
    }
}

/// Linear SINR `s[n][t][k]` reported by the mobiles of one cell.
#[derive(Debug, Clone, PartialEq)]
pub struct SinrTensor {
    num_subcarriers: usize,
    num_slots: usize,
    num_mobiles: usize,
    values: Vec<f64>,
}

impl SinrTensor {
    pub fn zeros(num_subcarriers: usize, num_slots: usize, num_mobiles: usize) -> Self {
        SinrTensor {
            num_subcarriers,
            num_slots,
            num_mobiles,
            values: vec![0.0; num_subcarriers * num_slots * num_mobiles],
        }
    }

    pub fn from_fn(
        num_subcarriers: usize,
        num_slots: usize,
        num_mobiles: usize,
        mut f: impl FnMut(usize, usize, usize) -> f64,
    ) -> Self {
        let mut s = Self::zeros(num_subcarriers, num_slots, num_mobiles);
        for n in 0..num_subcarriers {
            for t in 0..num_slots {
                for k in 0..num_mobiles {
                    s.set(n, t, k, f(n, t, k));
                }
            }
        }
        s
    }

    pub fn num_subcarriers(&self) -> usize {
        self.num_subcarriers
    }

    pub fn num_slots(&self) -> usize {
        self.num_slots
    }

    pub fn num_mobiles(&self) -> usize {
        self.num_mobiles
    }

    #[inline]
    fn index(&self, n: usize, t: usize, k: usize) -> usize {
        (n * self.num_slots + t) * self.num_mobiles + k
    }

    #[inline]
    pub fn get(&self, n: usize, t: usize, k: usize) -> f64 {
        self.values[self.index(n, t, k)]
    }

    #[inline]
    pub fn set(&mut self, n: usize, t: usize, k: usize, value: f64) {
        let i = self.index(n, t, k);
        self.values[i] = value;
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

/// SINR tensors of every cell under the given joint transmit pattern.
///
/// The desired-link term is evaluated on every RB whether or not the serving
/// cell transmits there; only interference depends on the pattern.
/// Interferers are summed in ascending cell order.
pub fn compute_sinr(
    gains: &LinkGainMap,
    pattern: &TransmitPattern,
    p_rb: f64,
    n0: f64,
) -> Vec<SinrTensor> {
    assert!(p_rb > 0.0, "per-RB transmit power must be positive");
    assert_eq!(gains.num_cells(), pattern.num_cells);
    assert_eq!(gains.num_subcarriers(), pattern.num_subcarriers);
    assert_eq!(gains.num_slots(), pattern.num_slots);
    let cells = gains.num_cells();
    let n_sc = gains.num_subcarriers();
    let slots = pattern.num_slots;
    let k_per_cell = gains.mobiles_per_cell();

    // active cells per (n, t), ascending
    let active: Vec<Vec<usize>> = (0..n_sc * slots)
        .map(|i| {
            let (n, t) = (i / slots, i % slots);
            (0..cells).filter(|&c| pattern.is_active(c, n, t)).collect()
        })
        .collect();

    let mut rx: Vec<&[f64]> = vec![&[]; cells];
    (0..cells)
        .map(|serving| {
            let mut tensor = SinrTensor::zeros(n_sc, slots, k_per_cell);
            for k in 0..k_per_cell {
                let mobile = serving * k_per_cell + k;
                for (c, r) in rx.iter_mut().enumerate() {
                    *r = gains.link_gains(c, mobile);
                }
                for n in 0..n_sc {
                    for t in 0..slots {
                        let i = n * slots + t;
                        let signal = p_rb * rx[serving][i];
                        let interference: f64 = active[i]
                            .iter()
                            .filter(|&&c| c != serving)
                            .map(|&c| p_rb * rx[c][i])
                            .sum();
                        tensor.set(n, t, k, signal / (n0 + interference));
                    }
                }
            }
            tensor
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{build_hex_layout, drop_mobiles};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn pathloss_reference_points() {
        assert!((pathloss_db(1000.0).unwrap() - 128.1).abs() < 1e-12);
        let expected = 128.1 + 37.6 * 0.5f64.log10();
        assert!((pathloss_db(500.0).unwrap() - expected).abs() < 1e-12);
        assert!((pathloss_db(500.0).unwrap() - 116.78).abs() < 5e-3);
    }

    #[test]
    fn pathloss_floor_and_errors() {
        assert_eq!(pathloss_db(1.0).unwrap(), pathloss_db(MIN_DISTANCE_M).unwrap());
        assert_eq!(pathloss_db(0.0), Err(ChannelError::NonPositiveDistance(0.0)));
        assert!(pathloss_db(-3.0).is_err());
        assert!(pathloss_db(f64::NAN).is_err());
    }

    #[test]
    fn pathloss_is_monotone_above_floor() {
        let mut prev = pathloss_db(MIN_DISTANCE_M).unwrap();
        for i in 1..500 {
            let pl = pathloss_db(MIN_DISTANCE_M + i as f64 * 7.3).unwrap();
            assert!(pl > prev);
            prev = pl;
        }
    }

    #[test]
    fn shadowing_moments() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let draws: Vec<f64> = (0..100_000).map(|_| sample_shadowing(&mut rng, 8.0)).collect();
        let mean = draws.iter().sum::<f64>() / draws.len() as f64;
        let var = draws.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (draws.len() - 1) as f64;
        assert!(mean.abs() < 0.1, "mean {mean}");
        assert!((var.sqrt() - 8.0).abs() < 0.2, "std {}", var.sqrt());
    }

    #[test]
    fn shadowing_is_seeded() {
        let a: Vec<f64> = {
            let mut rng = ChaCha8Rng::seed_from_u64(9);
            (0..16).map(|_| sample_shadowing(&mut rng, 8.0)).collect()
        };
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let b: Vec<f64> = (0..16).map(|_| sample_shadowing(&mut rng, 8.0)).collect();
        assert_eq!(a, b);
    }

    #[test]
    fn noise_power_values() {
        let n = noise_power(200e3, 290.0);
        assert!((n - 8.008e-16).abs() / 8.008e-16 < 1e-3);
        let dbm = 10.0 * (n / 1e-3).log10();
        assert!((dbm + 120.97).abs() < 0.01);
        assert_eq!(noise_power(400e3, 290.0), 2.0 * n);
        assert!(noise_power(1e-12, 290.0) < 1e-32);
    }

    fn small_drop(isd: f64, seed: u64) -> LinkGainMap {
        drop_with(isd, seed, 4, Fading::PerResourceBlock)
    }

    fn drop_with(isd: f64, seed: u64, slots: usize, fading: Fading) -> LinkGainMap {
        let layout = build_hex_layout(2, isd);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let drop = drop_mobiles(&layout, 10, &mut rng);
        let params = ChannelParams {
            shadowing_std_db: 8.0,
            num_subcarriers: 50,
            num_slots: slots,
            fading,
        };
        build_link_gains(&layout, &drop, &params, &mut rng)
    }

    #[test]
    fn gains_are_seeded_positive_and_finite() {
        let a = small_drop(500.0, 5);
        let b = small_drop(500.0, 5);
        assert_eq!(a.gain, b.gain);
        assert!(a.gain.iter().all(|g| g.is_finite() && *g > 0.0));
    }

    #[test]
    fn fading_granularity() {
        let per_sc = drop_with(500.0, 3, 4, Fading::PerSubcarrier);
        let per_rb = drop_with(500.0, 3, 4, Fading::PerResourceBlock);
        for n in 0..50 {
            let g = per_sc.gain(2, 7, n, 0);
            assert!((1..4).all(|t| per_sc.gain(2, 7, n, t) == g));
            assert!((1..4).any(|t| per_rb.gain(2, 7, n, t) != per_rb.gain(2, 7, n, 0)));
        }
    }

    #[test]
    fn fading_has_unit_mean() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mean = (0..100_000).map(|_| -> f64 { Exp1.sample(&mut rng) }).sum::<f64>() / 1e5;
        assert!((mean - 1.0).abs() < 0.02);
    }

    #[test]
    fn doubling_distances_follows_pathloss_slope() {
        // same seed: positions scale by two, shadowing and fading repeat
        let near = small_drop(500.0, 21);
        let far = small_drop(1000.0, 21);
        let mut ratios: Vec<f64> = near
            .gain
            .iter()
            .zip(&far.gain)
            .map(|(a, b)| 10.0 * (a / b).log10())
            .collect();
        ratios.sort_by(f64::total_cmp);
        let median = ratios[ratios.len() / 2];
        assert!((median - 37.6 * 2f64.log10()).abs() < 0.05, "median {median}");
    }

    #[test]
    fn noise_limited_sinr() {
        let gains = LinkGainMap::from_fn(2, 1, 3, 2, |_, _, _, _| 1.0);
        let pattern = TransmitPattern::silent(2, 3, 2);
        let n0 = 8.008e-16;
        let sinr = compute_sinr(&gains, &pattern, 0.8, n0);
        for s in sinr[0].values() {
            assert!((s - 0.8 / n0).abs() / s < 1e-12);
            assert!((s - 9.99e14).abs() / 9.99e14 < 1e-3);
        }
    }

    #[test]
    fn single_equal_interferer_gives_zero_db() {
        let gains = LinkGainMap::from_fn(2, 1, 2, 2, |_, _, _, _| 1.0);
        let mut pattern = TransmitPattern::silent(2, 2, 2);
        pattern.set(1, 0, 1, true);
        let sinr = compute_sinr(&gains, &pattern, 0.8, 8.008e-16);
        assert!((sinr[0].get(0, 1, 0) - 1.0).abs() < 1e-12);
        // other RBs stay noise limited
        assert!(sinr[0].get(1, 1, 0) > 1e14);
        assert!(sinr[0].get(0, 0, 0) > 1e14);
    }

    #[test]
    fn own_activity_does_not_change_own_sinr() {
        let gains = small_drop(500.0, 2);
        let mut pattern = TransmitPattern::full(19, 50, 4);
        let before = compute_sinr(&gains, &pattern, 0.8, 1e-15);
        pattern.silence_slot(0, 2);
        let after = compute_sinr(&gains, &pattern, 0.8, 1e-15);
        assert_eq!(before[0], after[0]);
    }

    #[test]
    fn neighbour_change_only_touches_its_slot() {
        let gains = small_drop(500.0, 4);
        let mut pattern = TransmitPattern::full(19, 50, 4);
        let before = compute_sinr(&gains, &pattern, 0.8, 1e-15);
        pattern.silence_slot(3, 1);
        let after = compute_sinr(&gains, &pattern, 0.8, 1e-15);
        for n in 0..50 {
            for t in 0..4 {
                for k in 0..10 {
                    let (b, a) = (before[0].get(n, t, k), after[0].get(n, t, k));
                    if t == 1 {
                        assert!(a > b);
                    } else {
                        assert_eq!(a, b);
                    }
                }
            }
        }
    }

    #[test]
    fn serving_cell_alone_is_noise_limited() {
        let gains = small_drop(500.0, 8);
        let mut pattern = TransmitPattern::full(19, 50, 4);
        for c in 1..19 {
            pattern.silence_slot(c, 0);
        }
        let sinr = compute_sinr(&gains, &pattern, 0.8, 1e-15);
        for n in 0..50 {
            for k in 0..10 {
                assert_eq!(sinr[0].get(n, 0, k), 0.8 * gains.gain(0, k, n, 0) / 1e-15);
            }
        }
    }
}
