//! Cooperative-session experiments on the virtual clock.

use serde::Serialize;

use super::{linear_fit, to_csv, Check, ExperimentReport, ExperimentSpec, HarnessError};
use crate::coop::{run, ChurnAction, ChurnEvent, Mode, SessionConfig, SessionReport};
use crate::exec::{trial_seed, Exec};

pub const DEFAULT_RATE: f64 = 250_000.0;
pub const DEFAULT_LATENCY_MS: f64 = 20.0;
pub const DEFAULT_FILE_SIZE: usize = 2_000_000;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SessionRow {
    pub experiment: &'static str,
    pub scenario: String,
    pub mode: Mode,
    pub aus: usize,
    pub loss: f64,
    pub trial: usize,
    pub seed: u64,
    pub file_size: usize,
    pub n: usize,
    pub symbol_size: usize,
    pub rate: f64,
    pub latency_ms: f64,
    pub setup_time: f64,
    pub completion_time: f64,
    pub goodput: f64,
    pub overhead: f64,
    pub packets_received: u64,
    pub redundant: u64,
    pub retransmissions: u64,
    pub reassigned: u64,
    pub exact: bool,
    pub error: String,
}

struct Job {
    scenario: String,
    aus: usize,
    loss: f64,
    trial: usize,
    cfg: SessionConfig,
}

/// Equal-rate topology for one grid point. Loss sits on the server's
/// outgoing links; AU-to-RU relays are lossless.
pub fn build_session(spec: &ExperimentSpec, aus: usize, loss: f64, seed: u64, mode: Mode) -> SessionConfig {
    let g = &spec.grid;
    let t = spec.session.as_ref();
    let rate = g.rate.or(t.map(|t| t.direct.rate_limit)).unwrap_or(DEFAULT_RATE);
    let latency = g.latency_ms.or(t.map(|t| t.direct.latency_ms)).unwrap_or(DEFAULT_LATENCY_MS);
    let file_size = g.file_size.or(t.map(SessionConfig::file_len)).unwrap_or(DEFAULT_FILE_SIZE);
    let mut cfg = SessionConfig::equal_paths(aus, rate, 0.0, latency, file_size, seed);
    match t {
        Some(t) => {
            cfg.coding = t.coding;
            cfg.control_latency_ms = t.control_latency_ms;
            cfg.block_window = t.block_window;
            cfg.monitor_window = t.monitor_window;
            cfg.max_time = t.max_time;
            cfg.arq = t.arq;
        }
        None => cfg.coding = g.coding(g.n_or(&[64])[0], g.symbol_size_or(&[1024])[0]),
    }
    cfg.direct.loss_rate = loss;
    for a in &mut cfg.assistants {
        a.uplink.loss_rate = loss;
    }
    cfg.mode = mode;
    cfg
}

fn row(spec: &ExperimentSpec, job: &Job, result: &Result<SessionReport, crate::coop::SessionError>) -> SessionRow {
    let c = &job.cfg;
    let mut r = SessionRow {
        experiment: spec.name.name(),
        scenario: job.scenario.clone(),
        mode: c.mode,
        aus: job.aus,
        loss: job.loss,
        trial: job.trial,
        seed: c.session_seed,
        file_size: c.file_len(),
        n: c.coding.n,
        symbol_size: c.coding.symbol_size,
        rate: c.direct.rate_limit,
        latency_ms: c.direct.latency_ms,
        setup_time: 0.0,
        completion_time: 0.0,
        goodput: 0.0,
        overhead: 0.0,
        packets_received: 0,
        redundant: 0,
        retransmissions: 0,
        reassigned: 0,
        exact: false,
        error: String::new(),
    };
    match result {
        Ok(s) => {
            r.setup_time = s.setup_time;
            r.completion_time = s.completion_time;
            r.goodput = s.goodput;
            r.overhead = s.total_overhead;
            r.packets_received = s.packets_received;
            r.redundant = s.redundant;
            r.retransmissions = s.retransmissions;
            r.reassigned = s.reassigned;
            r.exact = s.exact;
        }
        Err(e) => r.error = e.to_string(),
    }
    r
}

fn execute(spec: &ExperimentSpec, jobs: &[Job], exec: Exec) -> Vec<(SessionRow, Option<SessionReport>)> {
    exec.map_items(jobs, |job| {
        let res = run(&job.cfg);
        (row(spec, job, &res), res.ok())
    })
}

fn mean_goodput<'a>(rows: impl Iterator<Item = &'a SessionRow>) -> f64 {
    let g: Vec<f64> = rows.map(|r| r.goodput).collect();
    g.iter().sum::<f64>() / g.len().max(1) as f64
}

fn exact_check(rows: &[SessionRow], what: &str) -> Check {
    let bad: Vec<String> = rows
        .iter()
        .filter(|r| !r.exact)
        .map(|r| format!("{} {} aus={} p={} trial={} {}", r.scenario, mode_name(r.mode), r.aus, r.loss, r.trial, r.error))
        .collect();
    Check::new(format!("{what} complete exactly"), bad.is_empty(), if bad.is_empty() { format!("{} runs", rows.len()) } else { bad.join("; ") })
}

fn mode_name(m: Mode) -> &'static str {
    match m {
        Mode::Lt => "lt",
        Mode::Arq => "arq",
    }
}

fn report(spec: &ExperimentSpec, rows: Vec<SessionRow>, checks: Vec<Check>, summary: Vec<String>) -> Result<ExperimentReport, HarnessError> {
    Ok(ExperimentReport { experiment: spec.name, rows: rows.len(), csv: to_csv(&rows)?, checks, summary })
}

/// Goodput against assistant count on lossless equal-rate paths.
///
/// The line is fitted over the runs with at least one AU; its intercept (zero
/// AUs) should land on the measured direct-only goodput.
pub fn goodput_vs_aus(spec: &ExperimentSpec, exec: Exec) -> Result<ExperimentReport, HarnessError> {
    let mut aus = spec.grid.aus.clone().unwrap_or_else(|| (0..=5).collect());
    aus.sort_unstable();
    aus.dedup();
    let loss = spec.grid.loss.as_ref().map_or(0.0, |l| l[0]);
    let mut jobs = Vec::new();
    for &k in &aus {
        for t in 0..spec.trials() {
            let cfg = build_session(spec, k, loss, trial_seed(spec.seed, t), Mode::Lt);
            jobs.push(Job { scenario: String::new(), aus: k, loss, trial: t, cfg });
        }
    }
    let rows: Vec<SessionRow> = execute(spec, &jobs, exec).into_iter().map(|r| r.0).collect();
    let means: Vec<(usize, f64)> = aus.iter().map(|&k| (k, mean_goodput(rows.iter().filter(|r| r.aus == k)))).collect();
    let mut checks = vec![exact_check(&rows, "all sessions")];
    let summary = means.iter().map(|(k, g)| format!("aus={k}: {:.1} kB/s", g / 1e3)).collect();
    let fitted: Vec<(f64, f64)> = means.iter().filter(|(k, _)| *k >= 1).map(|&(k, g)| (k as f64, g)).collect();
    if fitted.len() >= 3 {
        let (xs, ys): (Vec<f64>, Vec<f64>) = fitted.into_iter().unzip();
        let (a, b, r2) = linear_fit(&xs, &ys);
        checks.push(Check::new("linear fit R^2 >= 0.99", r2 >= 0.99, format!("R^2 = {r2:.5}, slope {:.1} kB/s per AU", b / 1e3)));
        if let Some(&(_, single)) = means.iter().find(|(k, _)| *k == 0) {
            let rel = (a - single).abs() / single;
            checks.push(Check::new(
                "intercept within 10% of single-path goodput",
                rel <= 0.10,
                format!("intercept {:.1} kB/s, single path {:.1} kB/s ({:.1}%)", a / 1e3, single / 1e3, rel * 100.0),
            ));
        }
    }
    report(spec, rows, checks, summary)
}

/// Three AUs with one leaving, one leaving and coming back, and one joining late.
/// Event times are fractions of the churn-free completion time of the same trial.
pub fn churn(spec: &ExperimentSpec, exec: Exec) -> Result<ExperimentReport, HarnessError> {
    let aus = spec.grid.aus.as_ref().map_or(3, |a| a[0]).max(2);
    let loss = spec.grid.loss.as_ref().map_or(0.0, |l| l[0]);
    let trials = spec.trials();
    let base_jobs: Vec<Job> = (0..trials)
        .map(|t| Job { scenario: "none".into(), aus, loss, trial: t, cfg: build_session(spec, aus, loss, trial_seed(spec.seed, t), Mode::Lt) })
        .collect();
    let base = execute(spec, &base_jobs, exec);

    let leaver = 2;
    let late = aus as u32;
    let mut jobs = Vec::new();
    for (job, (_, rep)) in base_jobs.iter().zip(&base) {
        let Some(rep) = rep else { continue };
        let at = |f: f64| rep.setup_time + f * rep.completion_time;
        let mut push = |label: &str, events: Vec<ChurnEvent>, late_start: bool| {
            let mut cfg = job.cfg.clone();
            cfg.churn = events;
            if late_start {
                cfg.assistants.iter_mut().filter(|a| a.id == late).for_each(|a| a.present_at_start = false);
            }
            jobs.push(Job { scenario: label.into(), aus, loss, trial: job.trial, cfg });
        };
        let ev = |t, au, action| ChurnEvent { at: t, au, action };
        push("leave", vec![ev(at(0.3), leaver, ChurnAction::Leave)], false);
        push("leave-rejoin", vec![ev(at(0.3), leaver, ChurnAction::Leave), ev(at(0.6), leaver, ChurnAction::Join)], false);
        push("late-join", vec![ev(at(0.3), late, ChurnAction::Join)], true);
    }
    let churned = execute(spec, &jobs, exec);
    let mut rows: Vec<SessionRow> = base.iter().map(|r| r.0.clone()).collect();
    rows.extend(churned.iter().map(|r| r.0.clone()));

    let mut checks = vec![exact_check(&rows, "churned and churn-free sessions")];
    let slower: Vec<bool> = rows
        .iter()
        .filter(|r| r.scenario == "leave")
        .map(|r| {
            let b = rows.iter().find(|b| b.scenario == "none" && b.trial == r.trial).expect("baseline row");
            r.exact && r.completion_time > b.completion_time
        })
        .collect();
    checks.push(Check::new(
        "removing an AU strictly lengthens completion",
        !slower.is_empty() && slower.iter().all(|&s| s),
        format!("{} of {} trials", slower.iter().filter(|&&s| s).count(), slower.len()),
    ));
    let terminated_once = base.iter().chain(&churned).all(|(_, r)| r.as_ref().is_none_or(|r| r.terminate_signals == 1));
    checks.push(Check::new("exactly one terminate per session", terminated_once, ""));
    let summary = ["none", "leave", "leave-rejoin", "late-join"]
        .iter()
        .map(|s| {
            let sel: Vec<&SessionRow> = rows.iter().filter(|r| r.scenario == *s).collect();
            let t = sel.iter().map(|r| r.completion_time).sum::<f64>() / sel.len().max(1) as f64;
            format!("{s}: mean completion {t:.2} s")
        })
        .collect();
    report(spec, rows, checks, summary)
}

fn mode_grid(spec: &ExperimentSpec, aus: &[usize], loss: &[f64]) -> Vec<Job> {
    let mut jobs = Vec::new();
    for &mode in &[Mode::Lt, Mode::Arq] {
        for &k in aus {
            for &p in loss {
                for t in 0..spec.trials() {
                    let cfg = build_session(spec, k, p, trial_seed(spec.seed, t), mode);
                    jobs.push(Job { scenario: String::new(), aus: k, loss: p, trial: t, cfg });
                }
            }
        }
    }
    jobs
}

/// LT and ARQ across server-side loss rates with a fixed number of AUs.
pub fn loss_sweep(spec: &ExperimentSpec, exec: Exec) -> Result<ExperimentReport, HarnessError> {
    let aus = spec.grid.aus.as_ref().map_or(4, |a| a[0]);
    let loss = spec.grid.loss.clone().unwrap_or_else(|| vec![0.0, 0.05, 0.1, 0.15, 0.2]);
    let rows: Vec<SessionRow> = execute(spec, &mode_grid(spec, &[aus], &loss), exec).into_iter().map(|r| r.0).collect();
    let mean = |mode, p: f64| mean_goodput(rows.iter().filter(|r| r.mode == mode && r.loss == p));
    let lt: Vec<SessionRow> = rows.iter().filter(|r| r.mode == Mode::Lt).cloned().collect();
    let mut checks = vec![exact_check(&lt, "LT sessions")];
    if loss.contains(&0.0) {
        let g0 = mean(Mode::Lt, 0.0);
        let detail: Vec<String> = loss.iter().map(|&p| format!("p={p}: {:.3}", mean(Mode::Lt, p) / (g0 * (1.0 - p)))).collect();
        checks.push(Check::new(
            "LT goodput(p) >= 0.8 (1-p) goodput(0)",
            loss.iter().all(|&p| mean(Mode::Lt, p) >= 0.8 * (1.0 - p) * g0),
            format!("ratio to (1-p) goodput(0): {}", detail.join(", ")),
        ));
    }
    let pmax = loss.iter().copied().fold(0.0, f64::max);
    if pmax > 0.0 {
        let (l, a) = (mean(Mode::Lt, pmax), mean(Mode::Arq, pmax));
        checks.push(Check::new(
            format!("LT beats ARQ at p={pmax}"),
            l > a,
            format!("LT {:.1} kB/s, ARQ {:.1} kB/s", l / 1e3, a / 1e3),
        ));
    }
    let summary = loss
        .iter()
        .map(|&p| format!("p={p}: LT {:.1} kB/s, ARQ {:.1} kB/s", mean(Mode::Lt, p) / 1e3, mean(Mode::Arq, p) / 1e3))
        .collect();
    report(spec, rows, checks, summary)
}

/// LT against ARQ for each AU count at one loss rate.
pub fn arq_compare(spec: &ExperimentSpec, exec: Exec) -> Result<ExperimentReport, HarnessError> {
    let aus = spec.grid.aus.clone().unwrap_or_else(|| (0..=4).collect());
    let loss = spec.grid.loss.clone().unwrap_or_else(|| vec![0.1]);
    let rows: Vec<SessionRow> = execute(spec, &mode_grid(spec, &aus, &loss), exec).into_iter().map(|r| r.0).collect();
    let checks = vec![exact_check(&rows, "LT and ARQ sessions")];
    let mut summary = Vec::new();
    for &p in &loss {
        for &k in &aus {
            let m = |mode| mean_goodput(rows.iter().filter(|r| r.mode == mode && r.aus == k && r.loss == p));
            summary.push(format!("p={p} aus={k}: LT {:.1} kB/s, ARQ {:.1} kB/s", m(Mode::Lt) / 1e3, m(Mode::Arq) / 1e3));
        }
    }
    report(spec, rows, checks, summary)
}
