use dtxsim::channel::{compute_sinr, drop_network, noise_power, ChannelParams, TransmitPattern};
use dtxsim::config::SimConfig;
use dtxsim::engine::{derive_seed, run_drop, run_drop_with_probe, run_summary, FrameProbe};
use dtxsim::geometry::build_hex_layout;
use dtxsim::strategies::StrategyKind;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Default)]
struct Recorder {
    events: Vec<(char, usize, usize, usize)>,
}

impl FrameProbe for Recorder {
    fn on_schedule(&mut self, frame: usize, cell: usize, report_frame: usize) {
        self.events.push(('s', frame, cell, report_frame));
    }

    fn on_transmit(&mut self, frame: usize) {
        self.events.push(('t', frame, 0, 0));
    }
}

fn seven_cells(strategy: StrategyKind, rate: f64) -> SimConfig {
    SimConfig {
        tiers: 1,
        strategy,
        target_rate_mbps: rate,
        frames: 12,
        drops: 2,
        warmup_frames: 2,
        ..Default::default()
    }
}

#[test]
fn schedules_only_see_the_previous_frame() {
    let cfg = seven_cells(StrategyKind::Memory, 0.5);
    let mut probe = Recorder::default();
    run_drop_with_probe(&cfg, 9, &mut probe);

    let mut expected = vec![('t', 0, 0, 0)];
    for frame in 1..=cfg.frames {
        expected.extend((0..7).map(|c| ('s', frame, c, frame - 1)));
        expected.push(('t', frame, 0, 0));
    }
    assert_eq!(probe.events, expected);
}

#[test]
fn random_neighbours_collide_one_time_in_ten() {
    // every cell needs exactly one slot at this rate
    let cfg = SimConfig { frames: 50, ..seven_cells(StrategyKind::Random, 0.05) };
    let (mut pairs, mut collisions) = (0usize, 0usize);
    for d in 0..40 {
        for m in run_drop(&cfg, derive_seed(77, d)).iter().skip(1) {
            let center = &m.cells[0].used_slots;
            let neighbour = &m.cells[1].used_slots;
            assert_eq!(center.iter().filter(|&&u| u).count(), 1);
            assert_eq!(neighbour.iter().filter(|&&u| u).count(), 1);
            pairs += 1;
            collisions += (center == neighbour) as usize;
        }
    }
    let rate = collisions as f64 / pairs as f64;
    // binomial standard deviation is about 0.0067 for 2000 pairs
    assert!((rate - 0.1).abs() < 0.025, "collision rate {rate}");
}

#[test]
fn neighbour_dtx_strictly_raises_centre_sinr() {
    let layout = build_hex_layout(2, 500.0);
    let params = ChannelParams {
        shadowing_std_db: 8.0,
        num_subcarriers: 50,
        num_slots: 10,
        fading: Default::default(),
    };
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let (_, gains) = drop_network(&layout, 10, &params, Default::default(), &mut rng);
    let n0 = noise_power(200e3, 290.0);
    let mut pattern = TransmitPattern::full(19, 50, 10);
    let before = compute_sinr(&gains, &pattern, 0.8, n0);
    pattern.silence_slot(4, 6);
    let after = compute_sinr(&gains, &pattern, 0.8, n0);
    for n in 0..50 {
        for k in 0..10 {
            assert!(after[0].get(n, 6, k) > before[0].get(n, 6, k));
            for t in (0..10).filter(|&t| t != 6) {
                assert_eq!(after[0].get(n, t, k), before[0].get(n, t, k));
            }
        }
    }
}

#[test]
fn delivery_never_exceeds_schedule_and_flags_follow_targets() {
    for strategy in StrategyKind::ALL {
        let cfg = seven_cells(strategy, 1.5);
        let target = 1.5e6 * cfg.frame_duration_s();
        for m in run_drop(&cfg, 4).iter().skip(1) {
            for cell in &m.cells {
                for mobile in &cell.mobiles {
                    assert!(mobile.delivered_bits <= mobile.scheduled_bits);
                    assert_eq!(mobile.retransmission, mobile.infeasible || mobile.delivered_bits < target);
                }
            }
        }
    }
}

#[test]
fn memory_trace_follows_centre_usage() {
    let cfg = seven_cells(StrategyKind::Memory, 1.0);
    let frames = run_drop(&cfg, 12);
    for pair in frames.windows(2) {
        let trace = pair[1].center_trace.as_ref().expect("memory strategy traces every frame");
        let used_before: Vec<usize> = (0..cfg.slots).filter(|&t| pair[0].center().used_slots[t]).collect();
        assert_eq!(trace.used, used_before);
        assert!(trace.priority.is_permutation_of(cfg.slots));
    }
}

#[test]
fn summaries_are_reproducible() {
    let cfg = seven_cells(StrategyKind::PPersistent, 1.0);
    assert_eq!(run_summary(&cfg), run_summary(&cfg));
    let other = SimConfig { seed: 2, ..cfg.clone() };
    assert_ne!(run_summary(&cfg).power_trace, run_summary(&other).power_trace);
}

#[test]
fn every_strategy_settles_at_default_load() {
    for strategy in StrategyKind::ALL {
        let cfg = SimConfig { strategy, drops: 20, ..Default::default() };
        let trace = run_summary(&cfg).power_trace;
        let tail = &trace[trace.len() - 10..];
        let mean = tail.iter().sum::<f64>() / 10.0;
        let var = tail.iter().map(|p| (p - mean).powi(2)).sum::<f64>() / 10.0;
        let cv = var.sqrt() / mean;
        assert!(cv < 0.01, "{strategy}: coefficient of variation {cv}");
    }
}
