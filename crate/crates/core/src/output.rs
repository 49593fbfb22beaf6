//! Plot-ready CSV files.
//!
//! Every file starts with a `# config-hash: <hash>` comment line followed by
//! a header row. Floating-point fields carry six significant digits.

use std::fs;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::config::SimConfig;
use crate::engine::RunSummary;
use crate::strategies::MemoryTrace;

pub const SWEEP_FILE: &str = "sweep.csv";
pub const TRACE_FILE: &str = "trace.csv";
pub const ALGORITHM_TRACE_FILE: &str = "algorithm_trace.csv";
pub const CONFIG_FILE: &str = "resolved_config.toml";

#[derive(Debug, Error)]
pub enum OutputError {
    #[error("cannot write {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("nothing to write")]
    Empty,
}

/// Fixed-point rendering with six significant digits, e.g. `350.000`,
/// `0.150000`, `1234570`.
pub fn format_sig6(x: f64) -> String {
    if !x.is_finite() {
        return x.to_string();
    }
    if x == 0.0 {
        return "0.00000".to_string();
    }
    let decimals = |v: f64| (5 - v.abs().log10().floor() as i32).max(0) as usize;
    let d = decimals(x);
    let s = format!("{x:.d$}");
    // rounding can carry into a new leading digit (999.9996 -> 1000.000)
    let rounded: f64 = s.parse().expect("formatted float parses");
    let d2 = decimals(rounded);
    if d2 < d {
        format!("{x:.d2$}")
    } else {
        s
    }
}

fn header(hash: &str, columns: &str) -> String {
    format!("# config-hash: {hash}\n{columns}\n")
}

pub fn sweep_csv(hash: &str, summaries: &[RunSummary], mobiles_per_cell: usize) -> String {
    let mut out = header(
        hash,
        "strategy,rate_mbps,cell_sum_rate_mbps,mean_power_w,retransmission_probability,outage_rate,convergence_frame",
    );
    for s in summaries {
        let conv = s.convergence_frame.map(|f| f.to_string()).unwrap_or_default();
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            s.strategy,
            format_sig6(s.rate_mbps),
            format_sig6(s.cell_sum_rate_mbps(mobiles_per_cell)),
            format_sig6(s.mean_power_w),
            format_sig6(s.retransmission_probability),
            format_sig6(s.outage_rate),
            conv
        ));
    }
    out
}

pub fn trace_csv(hash: &str, summaries: &[RunSummary]) -> String {
    let mut out = header(hash, "strategy,rate_mbps,frame,power_w");
    for s in summaries {
        for (frame, p) in s.power_trace.iter().enumerate() {
            out.push_str(&format!(
                "{},{},{},{}\n",
                s.strategy,
                format_sig6(s.rate_mbps),
                frame,
                format_sig6(*p)
            ));
        }
    }
    out
}

/// One row per memory update; slot lists are space separated.
pub fn algorithm_trace_csv(hash: &str, rows: &[(usize, MemoryTrace)], label: impl Fn(usize) -> String) -> String {
    let mut out = header(hash, "frame,used,ranking,psi,priority");
    let list = |slots: &[usize]| slots.iter().map(|&t| label(t)).collect::<Vec<_>>().join(" ");
    for (frame, trace) in rows {
        let psi = trace
            .psi
            .iter()
            .enumerate()
            .map(|(t, s)| format!("{}:{}", label(t), s))
            .collect::<Vec<_>>()
            .join(" ");
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            frame,
            list(&trace.used),
            list(trace.ranking.slots()),
            psi,
            list(trace.priority.slots())
        ));
    }
    out
}

fn write(dir: &Path, name: &str, contents: &str) -> Result<PathBuf, OutputError> {
    let path = dir.join(name);
    fs::write(&path, contents).map_err(|source| OutputError::Io {
        path: path.display().to_string(),
        source,
    })?;
    Ok(path)
}

fn ensure_dir(dir: &Path) -> Result<(), OutputError> {
    fs::create_dir_all(dir).map_err(|source| OutputError::Io {
        path: dir.display().to_string(),
        source,
    })
}

/// Echoes the resolved configuration into `dir`.
pub fn write_resolved_config(dir: &Path, cfg: &SimConfig) -> Result<PathBuf, OutputError> {
    ensure_dir(dir)?;
    let text = format!("# config-hash: {}\n{}", cfg.hash(), cfg.to_toml());
    write(dir, CONFIG_FILE, &text)
}

/// Writes the sweep and trace files plus the resolved configuration.
pub fn emit_results(dir: &Path, cfg: &SimConfig, summaries: &[RunSummary]) -> Result<Vec<PathBuf>, OutputError> {
    if summaries.is_empty() {
        return Err(OutputError::Empty);
    }
    let hash = cfg.hash();
    Ok(vec![
        write_resolved_config(dir, cfg)?,
        write(dir, SWEEP_FILE, &sweep_csv(&hash, summaries, cfg.mobiles_per_cell))?,
        write(dir, TRACE_FILE, &trace_csv(&hash, summaries))?,
    ])
}

pub fn emit_algorithm_trace(
    dir: &Path,
    cfg: &SimConfig,
    rows: &[(usize, MemoryTrace)],
    label: impl Fn(usize) -> String,
) -> Result<Vec<PathBuf>, OutputError> {
    if rows.is_empty() {
        return Err(OutputError::Empty);
    }
    Ok(vec![
        write_resolved_config(dir, cfg)?,
        write(dir, ALGORITHM_TRACE_FILE, &algorithm_trace_csv(&cfg.hash(), rows, label))?,
    ])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::strategies::{replay_memory, slot_letter, three_slot_example, StrategyKind};

    #[test]
    fn six_significant_digits() {
        assert_eq!(format_sig6(350.0), "350.000");
        assert_eq!(format_sig6(90.0), "90.0000");
        assert_eq!(format_sig6(0.15), "0.150000");
        assert_eq!(format_sig6(2.0), "2.00000");
        assert_eq!(format_sig6(20.0), "20.0000");
        assert_eq!(format_sig6(1234567.0), "1234567");
        assert_eq!(format_sig6(0.0), "0.00000");
        assert_eq!(format_sig6(999.9996), "1000.00");
        assert_eq!(format_sig6(-3.5), "-3.50000");
        assert_eq!(format_sig6(1e-4), "0.000100000");
    }

    fn summary(strategy: StrategyKind, rate: f64) -> RunSummary {
        RunSummary {
            strategy,
            rate_mbps: rate,
            mean_power_w: 159.0,
            power_trace: vec![350.0, 200.0, 159.0],
            retransmission_probability: 0.15,
            outage_rate: 0.0,
            convergence_frame: Some(2),
        }
    }

    #[test]
    fn sweep_rows_and_header() {
        let rows: Vec<_> = [1.0, 2.0, 3.0]
            .iter()
            .flat_map(|&r| StrategyKind::ALL.map(|k| summary(k, r)))
            .collect();
        let text = sweep_csv("abc", &rows, 10);
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "# config-hash: abc");
        assert_eq!(lines.len(), 2 + 12);
        assert_eq!(lines[2], "sequential,1.00000,10.0000,159.000,0.150000,0.00000,2");
    }

    #[test]
    fn trace_has_one_row_per_frame() {
        let text = trace_csv("h", &[summary(StrategyKind::Memory, 1.0)]);
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[1], "strategy,rate_mbps,frame,power_w");
        assert_eq!(lines[2], "memory,1.00000,0,350.000");
        assert_eq!(lines.len(), 5);
    }

    #[test]
    fn algorithm_trace_rows() {
        let (initial, steps) = three_slot_example();
        let rows: Vec<_> = replay_memory(&initial, &steps).into_iter().enumerate().map(|(i, t)| (i + 1, t)).collect();
        let text = algorithm_trace_csv("h", &rows, slot_letter);
        assert_eq!(text.lines().nth(2), Some("1,c,b c a,a:0 b:3 c:5,c b a"));
        assert_eq!(text.lines().nth(4), Some("3,b,b a c,a:0 b:5 c:4,b c a"));
    }

    #[test]
    fn files_carry_the_hash_and_unwritable_dirs_fail() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = SimConfig::default();
        let paths = emit_results(dir.path(), &cfg, &[summary(StrategyKind::Random, 2.0)]).unwrap();
        for p in &paths {
            let first = fs::read_to_string(p).unwrap().lines().next().unwrap().to_string();
            assert_eq!(first, format!("# config-hash: {}", cfg.hash()));
        }

        let blocker = dir.path().join("file");
        fs::write(&blocker, "x").unwrap();
        let err = emit_results(&blocker.join("sub"), &cfg, &[summary(StrategyKind::Random, 2.0)]).unwrap_err();
        assert!(matches!(err, OutputError::Io { .. }));
        assert!(matches!(emit_results(dir.path(), &cfg, &[]), Err(OutputError::Empty)));
    }
}
