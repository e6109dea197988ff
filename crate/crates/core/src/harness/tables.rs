//! Monte-Carlo incentive tables.
//!
//! Instance `i` draws `u_1, u_2, ..` once and every cell maps them to costs
//! `1 + u_j (eps_max - 1)`, so cells differ only in the parameter they vary.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::{to_csv, Check, ExperimentReport, ExperimentSpec, HarnessError};
use crate::exec::{trial_seed, Exec};
use crate::incentive::{bids_from_costs, optimal_reward, ru_payment, GameError};

pub const BISECTION_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TableRow {
    /// `eps_max`, `k` (cheapest-k bidders of `users`) or `au` (first |AU| bidders).
    pub table: &'static str,
    pub eps_max: f64,
    pub bidders: usize,
    pub users: usize,
    pub gamma: f64,
    pub mu0: f64,
    pub trials: usize,
    pub seed: u64,
    pub mean_mu: f64,
    pub mean_payment: f64,
    pub mean_reward: f64,
    pub mean_participants: f64,
}

#[derive(Debug, Clone, Copy)]
pub struct TableParams {
    pub users: usize,
    pub gamma: f64,
    pub mu0: f64,
    pub trials: usize,
    pub seed: u64,
}

fn uniforms(seed: u64, count: usize) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count).map(|_| rng.gen::<f64>()).collect()
}

fn costs(u: &[f64], eps_max: f64) -> Vec<f64> {
    u.iter().map(|x| 1.0 + x * (eps_max - 1.0)).collect()
}

/// Means over instances of one cell. `pick` turns an instance's cost list into the bids used.
fn cell<F>(table: &'static str, eps_max: f64, bidders: usize, p: TableParams, exec: Exec, pick: F) -> Result<TableRow, GameError>
where
    F: Fn(Vec<f64>) -> Vec<f64> + Sync + Send,
{
    let per = exec
        .map(p.trials, |i| {
            let c = pick(costs(&uniforms(trial_seed(p.seed, i), p.users), eps_max));
            let out = optimal_reward(&bids_from_costs(&c), p.gamma, BISECTION_TOL)?;
            Ok((out.server_utility, ru_payment(&out, p.mu0), out.reward, out.profile.participants.len() as f64))
        })
        .into_iter()
        .collect::<Result<Vec<_>, GameError>>()?;
    let n = per.len() as f64;
    let mean = |f: fn(&(f64, f64, f64, f64)) -> f64| per.iter().map(f).sum::<f64>() / n;
    Ok(TableRow {
        table,
        eps_max,
        bidders,
        users: p.users,
        gamma: p.gamma,
        mu0: p.mu0,
        trials: p.trials,
        seed: p.seed,
        mean_mu: mean(|r| r.0),
        mean_payment: mean(|r| r.1),
        mean_reward: mean(|r| r.2),
        mean_participants: mean(|r| r.3),
    })
}

/// Mean server utility and payment against cost spread, all `users` bidding.
pub fn eps_max_table(eps: &[f64], p: TableParams, exec: Exec) -> Result<Vec<TableRow>, GameError> {
    eps.iter().map(|&e| cell("eps_max", e, p.users, p, exec, |c| c)).collect()
}

/// Only the `k` cheapest of `users` bidders take part.
pub fn k_table(ks: &[usize], eps_max: f64, p: TableParams, exec: Exec) -> Result<Vec<TableRow>, GameError> {
    ks.iter()
        .map(|&k| {
            cell("k", eps_max, k, p, exec, move |mut c| {
                c.sort_by(f64::total_cmp);
                c.truncate(k);
                c
            })
        })
        .collect()
}

/// The first `m` bidders of each instance, so larger pools extend smaller ones.
pub fn au_table(ms: &[usize], eps_max: f64, p: TableParams, exec: Exec) -> Result<Vec<TableRow>, GameError> {
    ms.iter()
        .map(|&m| {
            let q = TableParams { users: p.users.max(m), ..p };
            cell("au", eps_max, m, q, exec, move |mut c| {
                c.truncate(m);
                c
            })
        })
        .collect()
}

fn strictly_decreasing(xs: &[f64]) -> bool {
    xs.windows(2).all(|w| w[1] < w[0])
}

pub fn incentive_tables(spec: &ExperimentSpec, exec: Exec) -> Result<ExperimentReport, HarnessError> {
    let g = &spec.grid;
    let p = TableParams {
        users: g.users.unwrap_or(20),
        gamma: g.gamma.unwrap_or(10.0),
        mu0: g.mu0.unwrap_or(0.0),
        trials: spec.trials(),
        seed: spec.seed,
    };
    let eps = g.eps_max.clone().unwrap_or_else(|| vec![1.0, 2.0, 3.0, 4.0, 5.0]);
    let ks = g.k_sizes.clone().unwrap_or_else(|| (2..=7).collect());
    let ms = g.au_counts.clone().unwrap_or_else(|| vec![5, 10, 15, 20]);
    let fixed = eps.iter().copied().fold(f64::NEG_INFINITY, f64::max);

    let t3 = eps_max_table(&eps, p, exec)?;
    let t4 = k_table(&ks, fixed, p, exec)?;
    let t5 = au_table(&ms, fixed, p, exec)?;

    let mu3: Vec<f64> = t3.iter().map(|r| r.mean_mu).collect();
    let pay3: Vec<f64> = t3.iter().map(|r| r.mean_payment).collect();
    let mu5: Vec<f64> = t5.iter().map(|r| r.mean_mu).collect();
    let inc5: Vec<f64> = mu5.windows(2).map(|w| w[1] - w[0]).collect();
    let mut checks = Vec::new();
    if t3.len() > 1 {
        checks.push(Check::new("mean mu strictly decreasing in eps_max", strictly_decreasing(&mu3), format!("{mu3:.3?}")));
        checks.push(Check::new("mean payment nonincreasing in eps_max", pay3.windows(2).all(|w| w[1] <= w[0]), format!("{pay3:.3?}")));
        let (first, last) = (mu3[0], mu3[mu3.len() - 1]);
        checks.push(Check::new(
            "first eps_max mean mu exceeds last by >= 25%",
            first >= 1.25 * last,
            format!("{first:.3} vs {last:.3}"),
        ));
    }
    if t5.len() > 1 {
        checks.push(Check::new(
            "mean mu increasing in |AU| with shrinking increments",
            inc5.iter().all(|&d| d > 0.0) && strictly_decreasing(&inc5),
            format!("mu {mu5:.3?}, increments {inc5:.3?}"),
        ));
    }
    let mut summary = Vec::new();
    for (title, rows) in [("eps_max", &t3), ("|K| cap", &t4), ("|AU|", &t5)] {
        summary.push(format!(
            "{title}: {}",
            rows.iter()
                .map(|r| {
                    let x = if r.table == "eps_max" { format!("{}", r.eps_max) } else { r.bidders.to_string() };
                    format!("{x} -> mu {:.3} P {:.3}", r.mean_mu, r.mean_payment)
                })
                .collect::<Vec<_>>()
                .join(", ")
        ));
    }
    let rows: Vec<TableRow> = t3.into_iter().chain(t4).chain(t5).collect();
    Ok(ExperimentReport { experiment: spec.name, rows: rows.len(), csv: to_csv(&rows)?, checks, summary })
}
