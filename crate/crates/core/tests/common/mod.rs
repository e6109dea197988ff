//! Reference implementations the library is checked against. Written from
//! the formulas directly, sharing no code with the crate.

#![allow(dead_code)]

/// Robust soliton pmf over degrees `1..=n`, straight from the definition.
pub fn robust_soliton_direct(n: usize, c: f64, delta: f64) -> Vec<f64> {
    let nf = n as f64;
    let r = c * nf.sqrt() * (nf / delta).ln();
    let spike = ((nf / r).ceil() as usize).min(n);
    let mut mass = Vec::with_capacity(n);
    for d in 1..=n {
        let df = d as f64;
        let rho = if d == 1 { 1.0 / nf } else { 1.0 / (df * (df - 1.0)) };
        let tau = if d < spike {
            r / (df * nf)
        } else if d == spike {
            r * (r / delta).ln() / nf
        } else {
            0.0
        };
        mass.push(rho + tau);
    }
    let beta: f64 = mass.iter().sum();
    mass.into_iter().map(|m| m / beta).collect()
}

/// Gauss-Jordan elimination over GF(2) for `n <= 64` unknowns.
/// Returns the rank and, when it is full, every source symbol.
pub fn gf2_solve(n: usize, equations: &[(Vec<u32>, Vec<u8>)]) -> (usize, Option<Vec<Vec<u8>>>) {
    assert!(n <= 64);
    let mut rows: Vec<(u64, Vec<u8>)> = equations
        .iter()
        .map(|(idx, p)| (idx.iter().fold(0u64, |m, &i| m | (1 << i)), p.clone()))
        .collect();
    let mut rank = 0;
    let mut pivot_row = vec![usize::MAX; n];
    for col in 0..n {
        let Some(r) = (rank..rows.len()).find(|&r| rows[r].0 >> col & 1 == 1) else { continue };
        rows.swap(rank, r);
        let (mask, payload) = rows[rank].clone();
        for (k, row) in rows.iter_mut().enumerate() {
            if k != rank && row.0 >> col & 1 == 1 {
                row.0 ^= mask;
                row.1.iter_mut().zip(&payload).for_each(|(a, b)| *a ^= b);
            }
        }
        pivot_row[col] = rank;
        rank += 1;
    }
    if rank < n {
        return (rank, None);
    }
    (rank, Some((0..n).map(|c| rows[pivot_row[c]].1.clone()).collect()))
}

/// `gamma * ln(1 + sum ln(1 + T_i R)) - R`.
pub fn leader_utility(coeffs: &[f64], gamma: f64, r: f64) -> f64 {
    let s: f64 = coeffs.iter().map(|t| (1.0 + t * r).ln()).sum();
    gamma * (1.0 + s).ln() - r
}

/// Argmax of [`leader_utility`] on `0, step, 2 step, ..` up to `hi`.
pub fn grid_argmax(coeffs: &[f64], gamma: f64, hi: f64, step: f64) -> f64 {
    let steps = (hi / step).ceil() as usize;
    let mut best = (0.0, leader_utility(coeffs, gamma, 0.0));
    for k in 1..=steps {
        let r = k as f64 * step;
        let u = leader_utility(coeffs, gamma, r);
        if u > best.1 {
            best = (r, u);
        }
    }
    best.0
}

/// Follower payoff `t_i / sum(t) R - eps_i t_i`.
pub fn follower_utility(t: &[f64], i: usize, r: f64, eps: &[f64]) -> f64 {
    let s: f64 = t.iter().sum();
    t[i] / s * r - eps[i] * t[i]
}

/// `d/dt_i` of [`follower_utility`]: `R (S - t_i) / S^2 - eps_i`.
pub fn follower_marginal(t: &[f64], i: usize, r: f64, eps: &[f64]) -> f64 {
    let s: f64 = t.iter().sum();
    r * (s - t[i]) / (s * s) - eps[i]
}

/// Upper chi-square quantile (Wilson-Hilferty) at one-sided normal quantile `z`.
pub fn chi2_critical(dof: usize, z: f64) -> f64 {
    let k = dof as f64;
    let a = 2.0 / (9.0 * k);
    k * (1.0 - a + z * a.sqrt()).powi(3)
}

/// Pearson statistic over bins merged left to right until each expects at least 5.
pub fn chi2_statistic(observed: &[u64], expected: &[f64]) -> (f64, usize) {
    let (mut stat, mut bins) = (0.0, 0usize);
    let (mut o, mut e) = (0.0, 0.0);
    for (&ob, &ex) in observed.iter().zip(expected) {
        o += ob as f64;
        e += ex;
        if e >= 5.0 {
            stat += (o - e).powi(2) / e;
            bins += 1;
            o = 0.0;
            e = 0.0;
        }
    }
    if e > 0.0 {
        stat += (o - e).powi(2) / e;
        bins += 1;
    }
    (stat, bins.saturating_sub(1))
}
