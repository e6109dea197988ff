//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any failure.

mod common;

use std::process::ExitCode;
use std::sync::Arc;
use std::time::Instant;

use ltcoop::exec::{trial_seed, Exec};
use ltcoop::harness::codec::{block_trial, overhead_cell};
use ltcoop::harness::{self, Check, Experiment, ExperimentSpec, DEFAULT_BLOCK_SIZES, DEFAULT_SYMBOL_SIZES};
use ltcoop::incentive::{bids_from_costs, compute_equilibrium, optimal_reward, reward_utility};
use ltcoop::lt::{ideal_soliton, robust_soliton, CodingParams, DecoderState, LtCode, SolitonParams};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn codec_round_trip(exec: Exec) -> Check {
    let mut cells = 0;
    let mut bad = Vec::new();
    for &n in &DEFAULT_BLOCK_SIZES {
        for &size in &DEFAULT_SYMBOL_SIZES {
            let code = LtCode::new(CodingParams::new(n, size)).expect("grid parameters are valid");
            let exact = exec.map(20, |i| block_trial(&code, trial_seed(0xC0DE ^ (n * 10_000 + size) as u64, i)).1);
            cells += 1;
            if !exact.iter().all(|&e| e) {
                bad.push(format!("n={n} N={size}"));
            }
        }
    }
    Check::new("codec round-trip", bad.is_empty(), format!("{cells} cells x 20 blocks, mismatches: {bad:?}"))
}

fn overhead_trend(exec: Exec) -> Check {
    let means: Vec<f64> = DEFAULT_BLOCK_SIZES
        .iter()
        .map(|&n| overhead_cell(CodingParams::new(n, 1448), 200, 2024, exec).expect("valid cell").mean_overhead)
        .collect();
    let decreasing = means.windows(2).all(|w| w[1] < w[0]);
    let last = *means.last().unwrap();
    Check::new(
        "overhead trend at N=1448",
        decreasing && (0.03..=0.20).contains(&last),
        format!("means over 200 blocks for n=32..1024: {means:.3?}"),
    )
}

fn peeling_vs_oracle() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(31337);
    let (mut instances, mut peeled, mut full_rank, mut violations) = (0, 0, 0, 0);
    while instances < 20_000 {
        instances += 1;
        let n = rng.gen_range(1..=8);
        let size = rng.gen_range(1..=3);
        let source: Vec<Vec<u8>> = (0..n).map(|_| (0..size).map(|_| rng.gen()).collect()).collect();
        let mut dec = DecoderState::new(0, n, size, Arc::new(ideal_soliton(n).unwrap()));
        let mut eqs = Vec::new();
        for _ in 0..rng.gen_range(1..=2 * n + 1) {
            let mask: u32 = rng.gen_range(1..(1u32 << n));
            let idx: Vec<u32> = (0..n as u32).filter(|i| mask >> i & 1 == 1).collect();
            let mut p = vec![0u8; size];
            for &i in &idx {
                p.iter_mut().zip(&source[i as usize]).for_each(|(a, b)| *a ^= b);
            }
            dec.push_equation(&idx, &p).unwrap();
            eqs.push((idx, p));
        }
        let (rank, solved) = common::gf2_solve(n, &eqs);
        full_rank += usize::from(rank == n);
        // A rank-deficient system has no solution to agree with, so it counts too.
        if dec.is_complete() {
            peeled += 1;
            let agrees = solved.is_some_and(|s| s.iter().enumerate().all(|(i, x)| dec.recovered_symbol(i) == Some(x.as_slice())));
            violations += usize::from(!agrees);
        }
    }
    Check::new(
        "peeling vs GF(2) elimination",
        violations == 0,
        format!("{instances} instances, {peeled} peeled, {full_rank} full rank, {violations} disagreements"),
    )
}

fn soliton_correctness() -> Check {
    let mut worst_sum = 0f64;
    for n in 1..=2048 {
        worst_sum = worst_sum.max((ideal_soliton(n).unwrap().pmf().iter().sum::<f64>() - 1.0).abs());
        if let Ok(d) = robust_soliton(SolitonParams::with_defaults(n).unwrap()) {
            worst_sum = worst_sum.max((d.pmf().iter().sum::<f64>() - 1.0).abs());
        }
    }
    let lib = robust_soliton(SolitonParams::new(10, 0.1, 0.5).unwrap()).unwrap();
    let oracle = common::robust_soliton_direct(10, 0.1, 0.5);
    let worst_point = lib.pmf().iter().zip(&oracle).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    Check::new(
        "soliton correctness",
        worst_sum < 1e-9 && worst_point < 1e-12,
        format!("max |sum - 1| = {worst_sum:.1e} over n=1..2048, max pmf error at n=10: {worst_point:.1e}"),
    )
}

fn equilibrium_validity() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let (mut worst_residual, mut deviations, mut outsiders) = (0f64, 0, 0);
    for _ in 0..1000 {
        let k = rng.gen_range(2..=20);
        let eps: Vec<f64> = (0..k).map(|_| rng.gen_range(1.0..=5.0)).collect();
        let reward = 10.0 * (1.0 - rng.gen::<f64>());
        let prof = compute_equilibrium(&bids_from_costs(&eps), reward).unwrap();
        let total: f64 = prof.t.iter().sum();
        for i in 0..k {
            if prof.participants.contains(&i) {
                worst_residual = worst_residual.max(common::follower_marginal(&prof.t, i, reward, &eps).abs());
                let base = common::follower_utility(&prof.t, i, reward, &eps);
                for h in [-1e-4, 1e-4] {
                    let mut d = prof.t.clone();
                    d[i] = (d[i] + h).max(0.0);
                    if common::follower_utility(&d, i, reward, &eps) > base + 1e-8 {
                        deviations += 1;
                    }
                }
            } else if reward / total > eps[i] {
                outsiders += 1;
            }
        }
    }
    Check::new(
        "equilibrium validity",
        worst_residual < 1e-6 && deviations == 0 && outsiders == 0,
        format!("1000 games, max residual {worst_residual:.1e}, profitable deviations {deviations}, outsiders wanting in {outsiders}"),
    )
}

fn reward_optimality() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let (mut worst, mut convex_points) = (0f64, 0);
    for _ in 0..100 {
        let k = rng.gen_range(2..=20);
        let eps: Vec<f64> = (0..k).map(|_| rng.gen_range(1.0..=5.0)).collect();
        let gamma = rng.gen_range(2.0..=15.0);
        let out = optimal_reward(&bids_from_costs(&eps), gamma, 1e-9).unwrap();
        let hi = (2.0 * out.reward).max(1.0);
        let grid = common::grid_argmax(&out.coefficients, gamma, hi, 1e-4);
        worst = worst.max((grid - out.reward).abs());
        let h = 1e-3;
        for j in 1..50 {
            let r = hi * j as f64 / 50.0;
            let f = |x| reward_utility(&out.coefficients, gamma, x);
            if f(r + h) - 2.0 * f(r) + f(r - h) >= 0.0 {
                convex_points += 1;
            }
        }
    }
    Check::new(
        "reward optimality",
        worst < 1e-3 && convex_points == 0,
        format!("100 instances, max |R* - grid argmax| = {worst:.1e}, non-concave samples {convex_points}"),
    )
}

fn experiment(name: Experiment, label: &str, exec: Exec, tune: impl FnOnce(&mut ExperimentSpec)) -> Check {
    let mut spec = ExperimentSpec::new(name);
    spec.seed = 2025;
    tune(&mut spec);
    match harness::run(&spec, exec) {
        Ok(r) => {
            let failed: Vec<&Check> = r.checks.iter().filter(|c| !c.passed).collect();
            let detail = if failed.is_empty() {
                r.checks.iter().map(|c| format!("{} ({})", c.name, c.detail)).collect::<Vec<_>>().join("; ")
            } else {
                failed.iter().map(|c| format!("FAILED {} ({})", c.name, c.detail)).collect::<Vec<_>>().join("; ")
            };
            Check::new(label, failed.is_empty() && !r.checks.is_empty(), detail)
        }
        Err(e) => Check::new(label, false, e.to_string()),
    }
}

fn main() -> ExitCode {
    let exec = Exec::default();
    type Criterion = Box<dyn Fn() -> Check>;
    let criteria: Vec<Criterion> = vec![
        Box::new(move || codec_round_trip(exec)),
        Box::new(move || overhead_trend(exec)),
        Box::new(peeling_vs_oracle),
        Box::new(soliton_correctness),
        Box::new(equilibrium_validity),
        Box::new(reward_optimality),
        Box::new(move || experiment(Experiment::IncentiveTables, "incentive trends", exec, |s| s.trials = Some(100))),
        Box::new(move || {
            experiment(Experiment::GoodputVsAus, "goodput linearity", exec, |s| s.grid.aus = Some((0..=5).collect()))
        }),
        Box::new(move || experiment(Experiment::LossSweep, "loss robustness", exec, |_| {})),
        Box::new(move || experiment(Experiment::Churn, "churn safety", exec, |_| {})),
    ];
    let mut failures = 0;
    for (i, c) in criteria.iter().enumerate() {
        let start = Instant::now();
        let check = c();
        failures += usize::from(!check.passed);
        println!(
            "[{}] criterion {}: {} ({:.1}s) {}",
            if check.passed { "PASS" } else { "FAIL" },
            i + 1,
            check.name,
            start.elapsed().as_secs_f64(),
            check.detail
        );
    }
    println!("{} of {} criteria passed", criteria.len() - failures, criteria.len());
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
