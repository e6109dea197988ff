//! Experiment drivers. Each experiment turns an [`ExperimentSpec`] into CSV
//! rows plus a list of pass/fail [`Check`]s on the trends it is meant to show.

pub mod codec;
pub mod sessions;
pub mod tables;

use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::coop::SessionConfig;
use crate::exec::Exec;
use crate::lt::{CodingParams, LtError};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("invalid experiment spec: {0}")]
    Spec(String),
    #[error(transparent)]
    Codec(#[from] LtError),
    #[error(transparent)]
    Game(#[from] crate::incentive::GameError),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    OverheadMatrix,
    DecodeThroughput,
    GoodputVsAus,
    Churn,
    LossSweep,
    ArqCompare,
    IncentiveTables,
    Roundtrip,
}

impl Experiment {
    pub const ALL: [Experiment; 8] = [
        Experiment::OverheadMatrix,
        Experiment::DecodeThroughput,
        Experiment::GoodputVsAus,
        Experiment::Churn,
        Experiment::LossSweep,
        Experiment::ArqCompare,
        Experiment::IncentiveTables,
        Experiment::Roundtrip,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Experiment::OverheadMatrix => "overhead-matrix",
            Experiment::DecodeThroughput => "decode-throughput",
            Experiment::GoodputVsAus => "goodput-vs-aus",
            Experiment::Churn => "churn",
            Experiment::LossSweep => "loss-sweep",
            Experiment::ArqCompare => "arq-compare",
            Experiment::IncentiveTables => "incentive-tables",
            Experiment::Roundtrip => "roundtrip",
        }
    }

    pub fn default_trials(self) -> usize {
        match self {
            Experiment::OverheadMatrix | Experiment::IncentiveTables => 100,
            Experiment::DecodeThroughput | Experiment::Roundtrip => 20,
            Experiment::GoodputVsAus | Experiment::Churn | Experiment::LossSweep | Experiment::ArqCompare => 3,
        }
    }
}

impl FromStr for Experiment {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|e| e.name() == s)
            .ok_or_else(|| HarnessError::Spec(format!("unknown experiment {s:?}")))
    }
}

/// Parameter overrides. Anything left unset takes the experiment's default.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Grid {
    /// Source symbols per block.
    pub n: Option<Vec<usize>>,
    /// Symbol sizes in bytes.
    pub symbol_size: Option<Vec<usize>>,
    /// Assistant counts.
    pub aus: Option<Vec<usize>>,
    /// Loss rates on the server's outgoing links.
    pub loss: Option<Vec<f64>>,
    pub eps_max: Option<Vec<f64>>,
    /// Bidder counts for the |AU| table.
    pub au_counts: Option<Vec<usize>>,
    /// Participant caps for the |K| table.
    pub k_sizes: Option<Vec<usize>>,
    pub users: Option<usize>,
    pub gamma: Option<f64>,
    pub mu0: Option<f64>,
    pub c: Option<f64>,
    pub delta: Option<f64>,
    pub file_size: Option<usize>,
    /// Per-link rate in bytes per second for generated topologies.
    pub rate: Option<f64>,
    pub latency_ms: Option<f64>,
    pub message_len: Option<usize>,
}

impl Grid {
    pub fn n_or(&self, d: &[usize]) -> Vec<usize> {
        self.n.clone().unwrap_or_else(|| d.to_vec())
    }

    pub fn symbol_size_or(&self, d: &[usize]) -> Vec<usize> {
        self.symbol_size.clone().unwrap_or_else(|| d.to_vec())
    }

    pub fn coding(&self, n: usize, symbol_size: usize) -> CodingParams {
        let base = CodingParams::new(n, symbol_size);
        CodingParams { c: self.c.unwrap_or(base.c), delta: self.delta.unwrap_or(base.delta), ..base }
    }
}

pub const DEFAULT_BLOCK_SIZES: [usize; 6] = [32, 64, 128, 256, 512, 1024];
pub const DEFAULT_SYMBOL_SIZES: [usize; 6] = [64, 128, 256, 512, 1024, 1448];

/// What to run. Loaded from TOML or assembled from CLI flags.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    pub name: Experiment,
    #[serde(default)]
    pub trials: Option<usize>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub output: Option<PathBuf>,
    #[serde(default)]
    pub grid: Grid,
    /// Template for session experiments: coding, timing knobs and the direct link.
    #[serde(default)]
    pub session: Option<SessionConfig>,
}

impl ExperimentSpec {
    pub fn new(name: Experiment) -> Self {
        Self { name, trials: None, seed: 1, output: None, grid: Grid::default(), session: None }
    }

    pub fn from_toml_str(s: &str) -> Result<Self, HarnessError> {
        toml::from_str(s).map_err(|e| HarnessError::Spec(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml_str(&text)
    }

    pub fn trials(&self) -> usize {
        self.trials.unwrap_or_else(|| self.name.default_trials())
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        let bad = |m: &str| Err(HarnessError::Spec(m.into()));
        if self.trials() == 0 {
            return bad("trials must be at least 1");
        }
        let g = &self.grid;
        let empty = [
            g.n.as_ref().is_some_and(Vec::is_empty),
            g.symbol_size.as_ref().is_some_and(Vec::is_empty),
            g.aus.as_ref().is_some_and(Vec::is_empty),
            g.loss.as_ref().is_some_and(Vec::is_empty),
            g.eps_max.as_ref().is_some_and(Vec::is_empty),
            g.au_counts.as_ref().is_some_and(Vec::is_empty),
            g.k_sizes.as_ref().is_some_and(Vec::is_empty),
        ];
        if empty.into_iter().any(|e| e) {
            return bad("grid lists must not be empty");
        }
        if g.loss.iter().flatten().any(|p| !(0.0..1.0).contains(p)) {
            return bad("loss rates must lie in [0, 1)");
        }
        if let Some(s) = &self.session {
            s.validate().map_err(|e| HarnessError::Spec(e.to_string()))?;
        }
        Ok(())
    }
}

/// One asserted trend.
#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    pub fn new(name: impl Into<String>, passed: bool, detail: impl Into<String>) -> Self {
        Self { name: name.into(), passed, detail: detail.into() }
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentReport {
    pub experiment: Experiment,
    pub csv: String,
    pub rows: usize,
    pub checks: Vec<Check>,
    /// Human-readable lines for the terminal.
    pub summary: Vec<String>,
}

impl ExperimentReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn write_csv(&self, path: &Path) -> Result<(), HarnessError> {
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            std::fs::create_dir_all(dir)?;
        }
        std::fs::write(path, &self.csv)?;
        Ok(())
    }
}

pub fn to_csv<T: Serialize>(rows: &[T]) -> Result<String, HarnessError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r)?;
    }
    let bytes = w.into_inner().map_err(|e| HarnessError::Io(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

/// Ordinary least squares `y = a + b x`; returns `(a, b, r_squared)`.
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> (f64, f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let b = sxy / sxx;
    let a = my - b * mx;
    let r2 = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    (a, b, r2)
}

/// Runs one experiment end to end.
pub fn run(spec: &ExperimentSpec, exec: Exec) -> Result<ExperimentReport, HarnessError> {
    spec.validate()?;
    match spec.name {
        Experiment::OverheadMatrix => codec_experiments::overhead(spec, exec),
        Experiment::DecodeThroughput => codec_experiments::throughput(spec),
        Experiment::Roundtrip => codec_experiments::roundtrip(spec, exec),
        Experiment::GoodputVsAus => sessions::goodput_vs_aus(spec, exec),
        Experiment::Churn => sessions::churn(spec, exec),
        Experiment::LossSweep => sessions::loss_sweep(spec, exec),
        Experiment::ArqCompare => sessions::arq_compare(spec, exec),
        Experiment::IncentiveTables => tables::incentive_tables(spec, exec),
    }
}

mod codec_experiments {
    use super::codec::{decode_throughput_cell, message_roundtrip, overhead_matrix};
    use super::*;
    use crate::exec::trial_seed;

    pub fn overhead(spec: &ExperimentSpec, exec: Exec) -> Result<ExperimentReport, HarnessError> {
        let g = &spec.grid;
        let ns = g.n_or(&DEFAULT_BLOCK_SIZES);
        let sizes = g.symbol_size_or(&DEFAULT_SYMBOL_SIZES);
        let cells = overhead_matrix(&ns, &sizes, g.coding(64, 1024), spec.trials(), spec.seed, exec)?;
        let mut checks = vec![Check::new(
            "overhead nonnegative and every block exact",
            cells.iter().all(|c| c.min_overhead >= 0.0 && c.all_exact),
            format!("{} cells", cells.len()),
        )];
        let mut summary = Vec::new();
        for &size in &sizes {
            let col: Vec<_> = cells.iter().filter(|c| c.symbol_size == size).collect();
            let means: Vec<f64> = col.iter().map(|c| c.mean_overhead).collect();
            summary.push(format!(
                "N={size}: {}",
                col.iter().map(|c| format!("n={} {:.3}", c.n, c.mean_overhead)).collect::<Vec<_>>().join(", ")
            ));
            if size == 1448 && col.len() > 1 {
                checks.push(Check::new(
                    "N=1448 overhead strictly decreasing in n",
                    means.windows(2).all(|w| w[1] < w[0]),
                    format!("{means:.3?}"),
                ));
            }
        }
        Ok(ExperimentReport { experiment: spec.name, rows: cells.len(), csv: to_csv(&cells)?, checks, summary })
    }

    pub fn throughput(spec: &ExperimentSpec) -> Result<ExperimentReport, HarnessError> {
        let g = &spec.grid;
        let mut cells = Vec::new();
        for &n in &g.n_or(&DEFAULT_BLOCK_SIZES) {
            for &size in &g.symbol_size_or(&DEFAULT_SYMBOL_SIZES) {
                cells.push(decode_throughput_cell(g.coding(n, size), spec.trials(), spec.seed)?);
            }
        }
        let find = |n, s| cells.iter().find(|c| c.n == n && c.symbol_size == s).map(|c| c.bytes_per_second);
        let mut checks = vec![Check::new(
            "throughput positive everywhere",
            cells.iter().all(|c| c.bytes_per_second > 0.0),
            format!("{} cells", cells.len()),
        )];
        if let (Some(fast), Some(slow)) = (find(32, 1448), find(1024, 64)) {
            checks.push(Check::new(
                "throughput(n=32, N=1448) > throughput(n=1024, N=64)",
                fast > slow,
                format!("{:.1} MB/s vs {:.1} MB/s", fast / 1e6, slow / 1e6),
            ));
        }
        let summary = cells
            .iter()
            .map(|c| format!("n={} N={}: {:.1} MB/s", c.n, c.symbol_size, c.bytes_per_second / 1e6))
            .collect();
        Ok(ExperimentReport { experiment: spec.name, rows: cells.len(), csv: to_csv(&cells)?, checks, summary })
    }

    pub fn roundtrip(spec: &ExperimentSpec, exec: Exec) -> Result<ExperimentReport, HarnessError> {
        let g = &spec.grid;
        let mut jobs = Vec::new();
        for &n in &g.n_or(&DEFAULT_BLOCK_SIZES) {
            for &size in &g.symbol_size_or(&DEFAULT_SYMBOL_SIZES) {
                for t in 0..spec.trials() {
                    jobs.push((g.coding(n, size), t));
                }
            }
        }
        // Default: one full block plus a ragged tail.
        let len_for = |p: &CodingParams| g.message_len.unwrap_or(p.block_bytes() + p.block_bytes() / 3 + 7);
        let rows = exec
            .map_items(&jobs, |(p, t)| message_roundtrip(*p, len_for(p), trial_seed(spec.seed, *t)))
            .into_iter()
            .collect::<Result<Vec<_>, _>>()?;
        let bad = rows.iter().filter(|r| !r.exact).count();
        let checks = vec![Check::new("every message reassembles exactly", bad == 0, format!("{bad} of {} differ", rows.len()))];
        let summary = vec![format!("{} messages, {} exact", rows.len(), rows.len() - bad)];
        Ok(ExperimentReport { experiment: spec.name, rows: rows.len(), csv: to_csv(&rows)?, checks, summary })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fit_recovers_line() {
        let xs = [1.0, 2.0, 3.0, 4.0];
        let ys: Vec<f64> = xs.iter().map(|x| 3.0 + 2.0 * x).collect();
        let (a, b, r2) = linear_fit(&xs, &ys);
        assert!((a - 3.0).abs() < 1e-12 && (b - 2.0).abs() < 1e-12 && (r2 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn spec_from_toml() {
        let spec = ExperimentSpec::from_toml_str(
            r#"
            name = "loss-sweep"
            trials = 2
            seed = 9
            [grid]
            loss = [0.0, 0.1]
            aus = [2]
            "#,
        )
        .unwrap();
        assert_eq!(spec.name, Experiment::LossSweep);
        assert_eq!(spec.trials(), 2);
        assert_eq!(spec.grid.loss, Some(vec![0.0, 0.1]));
        assert!(ExperimentSpec::from_toml_str("name = \"nope\"").is_err());
        assert!(ExperimentSpec::from_toml_str("name = \"churn\"\nbogus = 1").is_err());
    }

    #[test]
    fn empty_grid_rejected() {
        let mut spec = ExperimentSpec::new(Experiment::OverheadMatrix);
        spec.grid.n = Some(vec![]);
        assert!(spec.validate().is_err());
        spec.grid.n = None;
        spec.trials = Some(0);
        assert!(spec.validate().is_err());
    }

    #[test]
    fn names_round_trip() {
        for e in Experiment::ALL {
            assert_eq!(e.name().parse::<Experiment>().unwrap(), e);
        }
    }

    #[test]
    fn small_overhead_matrix_runs() {
        let mut spec = ExperimentSpec::new(Experiment::OverheadMatrix);
        spec.trials = Some(5);
        spec.grid.n = Some(vec![16, 32]);
        spec.grid.symbol_size = Some(vec![8]);
        let r = run(&spec, Exec::Sequential).unwrap();
        assert_eq!(r.rows, 2);
        assert!(r.csv.starts_with("n,symbol_size,c,delta,trials,seed,mean_overhead"));
    }
}
