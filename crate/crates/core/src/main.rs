use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use dtxsim::config::{parse_config, Overrides, SimConfig};
use dtxsim::engine::{derive_seed, run_drop, run_summary, RunSummary};
use dtxsim::output::{emit_algorithm_trace, emit_results, format_sig6};
use dtxsim::strategies::{replay_memory, slot_letter, three_slot_example, StrategyKind};

#[derive(Parser)]
#[command(name = "dtxsim", version, about = "DTX time-slot alignment simulator")]
struct Cli {
    /// Worker threads for Monte-Carlo drops (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one strategy at one target rate.
    Run(Common),
    /// Sweep target rates for several strategies.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// Rates in Mbps, as `start:stop:step` or a comma separated list.
        #[arg(long, default_value = "0.5:3.0:0.25")]
        rates: String,
        /// `all` or a comma separated list of strategy names.
        #[arg(long, default_value = "all")]
        strategies: String,
    },
    /// Per-frame power traces of every strategy at one rate.
    Convergence {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value = "all")]
        strategies: String,
    },
    /// Step-by-step scores and priorities of the memory strategy.
    TraceAlgorithm {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 3)]
        steps: usize,
        #[arg(long, value_enum, default_value_t = Scenario::Example)]
        scenario: Scenario,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Scenario {
    /// Three slots with scripted usage and capacity rankings.
    Example,
    /// The centre cell of one simulated drop.
    Simulation,
}

#[derive(Args)]
struct Common {
    /// TOML configuration file; missing keys take default values.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    strategy: Option<StrategyKind>,
    #[arg(long)]
    rate_mbps: Option<f64>,
    #[arg(long)]
    drops: Option<usize>,
    #[arg(long)]
    frames: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, default_value = "results")]
    out: PathBuf,
}

impl Common {
    fn resolve(&self) -> Result<SimConfig> {
        let overrides = Overrides {
            strategy: self.strategy,
            target_rate_mbps: self.rate_mbps,
            drops: self.drops,
            frames: self.frames,
            seed: self.seed,
        };
        Ok(parse_config(self.config.as_deref(), &overrides)?)
    }
}

fn parse_rates(text: &str) -> Result<Vec<f64>> {
    let parse = |s: &str| -> Result<f64> {
        let v: f64 = s.trim().parse().with_context(|| format!("invalid rate `{s}`"))?;
        if !(v.is_finite() && v > 0.0) {
            bail!("rate `{s}` must be positive");
        }
        Ok(v)
    };
    if let [start, stop, step] = text.split(':').collect::<Vec<_>>()[..] {
        let (start, stop, step) = (parse(start)?, parse(stop)?, parse(step)?);
        if stop < start {
            bail!("rate range `{text}` is empty");
        }
        let count = ((stop - start) / step + 1e-9).floor() as usize + 1;
        return Ok((0..count).map(|i| start + i as f64 * step).collect());
    }
    text.split(',').map(parse).collect()
}

fn parse_strategies(text: &str) -> Result<Vec<StrategyKind>> {
    if text == "all" {
        return Ok(StrategyKind::ALL.to_vec());
    }
    text.split(',')
        .map(|s| s.trim().parse::<StrategyKind>().map_err(|e| anyhow::anyhow!(e)))
        .collect()
}

fn print_summaries(summaries: &[RunSummary]) {
    println!(
        "{:<13} {:>9} {:>12} {:>10} {:>8} {:>6}",
        "strategy", "rate_mbps", "mean_power_w", "retx_prob", "outage", "conv"
    );
    for s in summaries {
        let conv = s.convergence_frame.map(|f| f.to_string()).unwrap_or_else(|| "-".into());
        println!(
            "{:<13} {:>9} {:>12} {:>10} {:>8} {:>6}",
            s.strategy.name(),
            format_sig6(s.rate_mbps),
            format_sig6(s.mean_power_w),
            format_sig6(s.retransmission_probability),
            format_sig6(s.outage_rate),
            conv
        );
    }
}

fn run_grid(cfg: &SimConfig, strategies: &[StrategyKind], rates: &[f64]) -> Vec<RunSummary> {
    strategies
        .iter()
        .flat_map(|&strategy| {
            rates.iter().map(move |&rate| {
                run_summary(&SimConfig { strategy, target_rate_mbps: rate, ..cfg.clone() })
            })
        })
        .collect()
}

fn report_written(paths: &[PathBuf]) {
    for p in paths {
        eprintln!("wrote {}", p.display());
    }
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("cannot start worker threads")?;
    }

    match cli.command {
        Command::Run(common) => {
            let cfg = common.resolve()?;
            let summaries = vec![run_summary(&cfg)];
            print_summaries(&summaries);
            report_written(&emit_results(&common.out, &cfg, &summaries)?);
        }
        Command::Sweep { common, rates, strategies } => {
            let cfg = common.resolve()?;
            let rates = parse_rates(&rates)?;
            let strategies = parse_strategies(&strategies)?;
            let summaries = run_grid(&cfg, &strategies, &rates);
            print_summaries(&summaries);
            report_written(&emit_results(&common.out, &cfg, &summaries)?);
        }
        Command::Convergence { common, strategies } => {
            let cfg = common.resolve()?;
            let strategies = parse_strategies(&strategies)?;
            let summaries = run_grid(&cfg, &strategies, &[cfg.target_rate_mbps]);
            for s in &summaries {
                let head: Vec<String> = s.power_trace.iter().take(11).map(|p| format_sig6(*p)).collect();
                println!("{:<13} frames 0-10: {}", s.strategy.name(), head.join(" "));
            }
            print_summaries(&summaries);
            report_written(&emit_results(&common.out, &cfg, &summaries)?);
        }
        Command::TraceAlgorithm { common, steps, scenario } => {
            let cfg = common.resolve()?;
            let rows = match scenario {
                Scenario::Example => {
                    let (initial, script) = three_slot_example();
                    if steps == 0 || steps > script.len() {
                        bail!("the example scenario has 1 to {} steps, got {steps}", script.len());
                    }
                    replay_memory(&initial, &script[..steps])
                        .into_iter()
                        .enumerate()
                        .map(|(i, t)| (i + 1, t))
                        .collect::<Vec<_>>()
                }
                Scenario::Simulation => {
                    if steps == 0 {
                        bail!("steps must be at least 1");
                    }
                    let sim = SimConfig { strategy: StrategyKind::Memory, frames: steps, ..cfg.clone() };
                    run_drop(&sim, derive_seed(sim.seed, 0))
                        .into_iter()
                        .filter_map(|m| m.center_trace.map(|t| (m.frame, t)))
                        .collect()
                }
            };
            for (frame, trace) in &rows {
                println!("{frame}: {}", trace.to_line(slot_letter));
            }
            report_written(&emit_algorithm_trace(&common.out, &cfg, &rows, slot_letter)?);
        }
    }
    Ok(())
}
