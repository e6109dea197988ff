//! Two-stage reward game between the server (leader, announces reward `R`)
//! and assistant users (followers, choose service times `t_i`).
//!
//! AU utility is its reward share minus cost, `t_i / sum(t) * R - t_i * eps_i`.
//! Server utility is `gamma * ln(1 + sum ln(1 + t_i)) - R`. Logarithms are natural.

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GameError {
    #[error("game needs at least two bids, got {0}")]
    DegenerateGame(usize),
    #[error("reward share undefined when every service time is zero")]
    UndefinedShare,
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AuBid {
    pub id: u32,
    /// Cost per unit of service time.
    pub unit_cost: f64,
}

impl AuBid {
    pub fn new(id: u32, unit_cost: f64) -> Self {
        Self { id, unit_cost }
    }
}

/// Builds bids with ids `0..costs.len()`.
pub fn bids_from_costs(costs: &[f64]) -> Vec<AuBid> {
    costs.iter().enumerate().map(|(i, &c)| AuBid::new(i as u32, c)).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct GameParams {
    pub gamma: f64,
    pub bids: Vec<AuBid>,
    /// Subtracted from the server's gross valuation when pricing the requester.
    pub reservation_utility: f64,
}

impl GameParams {
    pub fn validate(&self) -> Result<(), GameError> {
        if !(self.gamma > 1.0 && self.gamma.is_finite()) {
            return Err(GameError::InvalidParameter(format!("gamma must exceed 1, got {}", self.gamma)));
        }
        if !(self.reservation_utility >= 0.0) {
            return Err(GameError::InvalidParameter("reservation utility must be nonnegative".into()));
        }
        validate_bids(&self.bids)
    }

    /// Optimal reward, equilibrium and requester payment in one call.
    pub fn solve(&self, tol: f64) -> Result<GameOutcome, GameError> {
        self.validate()?;
        let mut outcome = optimal_reward(&self.bids, self.gamma, tol)?;
        outcome.payment = ru_payment(&outcome, self.reservation_utility);
        Ok(outcome)
    }
}

fn validate_bids(bids: &[AuBid]) -> Result<(), GameError> {
    if bids.len() < 2 {
        return Err(GameError::DegenerateGame(bids.len()));
    }
    if let Some(b) = bids.iter().find(|b| !(b.unit_cost > 0.0 && b.unit_cost.is_finite())) {
        return Err(GameError::InvalidParameter(format!("unit cost of AU {} must be positive", b.id)));
    }
    Ok(())
}

/// Service times in bid order, plus the participating set.
#[derive(Debug, Clone, PartialEq)]
pub struct StrategyProfile {
    pub t: Vec<f64>,
    /// Bid indices with `t_i > 0`, cheapest first.
    pub participants: Vec<usize>,
}

impl StrategyProfile {
    pub fn zero(k: usize) -> Self {
        Self { t: vec![0.0; k], participants: Vec::new() }
    }

    pub fn total(&self) -> f64 {
        self.t.iter().sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GameOutcome {
    pub gamma: f64,
    pub reward: f64,
    pub profile: StrategyProfile,
    /// `T_i` with `t_i = T_i * reward`.
    pub coefficients: Vec<f64>,
    pub server_utility: f64,
    pub au_utilities: Vec<f64>,
    /// Requester payment with zero reservation utility; see [`ru_payment`].
    pub payment: f64,
}

/// `t_i / sum(t) * reward - t_i * eps_i`.
pub fn au_utility(t: &[f64], i: usize, reward: f64, bids: &[AuBid]) -> Result<f64, GameError> {
    let total: f64 = t.iter().sum();
    if total <= 0.0 {
        return Err(GameError::UndefinedShare);
    }
    Ok(t[i] / total * reward - t[i] * bids[i].unit_cost)
}

/// `gamma * ln(1 + sum ln(1 + t_i)) - reward`.
pub fn server_utility(t: &[f64], reward: f64, gamma: f64) -> f64 {
    let inner: f64 = t.iter().map(|&ti| ti.ln_1p()).sum();
    gamma * inner.ln_1p() - reward
}

/// Indices of the participating set, cheapest first.
///
/// Bids are stably sorted by cost; the two cheapest always join, then each
/// next candidate joins while `(|K| - 1) * eps_i < sum_{j in K} eps_j`.
/// The set does not depend on the reward.
pub fn participants(bids: &[AuBid]) -> Result<Vec<usize>, GameError> {
    validate_bids(bids)?;
    let mut order: Vec<usize> = (0..bids.len()).collect();
    order.sort_by(|&a, &b| bids[a].unit_cost.total_cmp(&bids[b].unit_cost));
    let mut sum = bids[order[0]].unit_cost + bids[order[1]].unit_cost;
    let mut size = 2;
    while size < order.len() {
        let cost = bids[order[size]].unit_cost;
        if (size as f64 - 1.0) * cost >= sum {
            break;
        }
        sum += cost;
        size += 1;
    }
    order.truncate(size);
    Ok(order)
}

/// `T_i = ((|K|-1) / S) * (1 - (|K|-1) eps_i / S)` for `i` in `K`, zero otherwise,
/// where `S` is the total cost over `K`.
pub fn coefficients(bids: &[AuBid], members: &[usize]) -> Result<Vec<f64>, GameError> {
    if members.len() < 2 {
        return Err(GameError::DegenerateGame(members.len()));
    }
    let k1 = members.len() as f64 - 1.0;
    let sum: f64 = members.iter().map(|&i| bids[i].unit_cost).sum();
    let mut out = vec![0.0; bids.len()];
    for &i in members {
        out[i] = k1 / sum * (1.0 - k1 * bids[i].unit_cost / sum);
    }
    Ok(out)
}

/// Followers' equilibrium service times for an announced `reward`.
pub fn compute_equilibrium(bids: &[AuBid], reward: f64) -> Result<StrategyProfile, GameError> {
    if !(reward > 0.0 && reward.is_finite()) {
        return Err(GameError::InvalidParameter(format!("reward must be positive, got {reward}")));
    }
    let members = participants(bids)?;
    let coeffs = coefficients(bids, &members)?;
    let t = coeffs.iter().map(|c| c * reward).collect();
    Ok(StrategyProfile { t, participants: members })
}

/// Best response of AU `i` to the others' total: `sqrt(R * others / eps_i) - others`, floored at 0.
pub fn best_response(t: &[f64], i: usize, reward: f64, bids: &[AuBid]) -> f64 {
    let others: f64 = t.iter().enumerate().filter(|(j, _)| *j != i).map(|(_, x)| x).sum();
    ((reward * others / bids[i].unit_cost).sqrt() - others).max(0.0)
}

/// Server utility as a function of reward once followers play their equilibrium.
pub fn reward_utility(coeffs: &[f64], gamma: f64, reward: f64) -> f64 {
    let inner: f64 = coeffs.iter().map(|&c| (c * reward).ln_1p()).sum();
    gamma * inner.ln_1p() - reward
}

/// Derivative of [`reward_utility`] in the reward.
pub fn reward_derivative(coeffs: &[f64], gamma: f64, reward: f64) -> f64 {
    let x: f64 = 1.0 + coeffs.iter().map(|&c| (c * reward).ln_1p()).sum::<f64>();
    let num: f64 = coeffs.iter().filter(|&&c| c > 0.0).map(|&c| c / (1.0 + c * reward)).sum();
    gamma * num / x - 1.0
}

/// Leader's optimal reward by bisection on the derivative, with the resulting outcome.
///
/// The bracket starts at `[0, 1]` and doubles its upper end until the
/// derivative turns negative. A nonpositive derivative at zero yields the
/// zero-reward, zero-participation outcome.
pub fn optimal_reward(bids: &[AuBid], gamma: f64, tol: f64) -> Result<GameOutcome, GameError> {
    if !(gamma > 1.0 && gamma.is_finite()) {
        return Err(GameError::InvalidParameter(format!("gamma must exceed 1, got {gamma}")));
    }
    if !(tol > 0.0) {
        return Err(GameError::InvalidParameter("tolerance must be positive".into()));
    }
    let members = participants(bids)?;
    let coeffs = coefficients(bids, &members)?;
    if reward_derivative(&coeffs, gamma, 0.0) <= 0.0 {
        return Ok(GameOutcome {
            gamma,
            reward: 0.0,
            profile: StrategyProfile::zero(bids.len()),
            coefficients: coeffs,
            server_utility: 0.0,
            au_utilities: vec![0.0; bids.len()],
            payment: 0.0,
        });
    }
    let (mut lo, mut hi) = (0.0, 1.0);
    while reward_derivative(&coeffs, gamma, hi) > 0.0 {
        lo = hi;
        hi *= 2.0;
        if !hi.is_finite() {
            return Err(GameError::InvalidParameter("reward bracket diverged".into()));
        }
    }
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if reward_derivative(&coeffs, gamma, mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let reward = 0.5 * (lo + hi);
    let t: Vec<f64> = coeffs.iter().map(|c| c * reward).collect();
    let au_utilities = (0..bids.len())
        .map(|i| au_utility(&t, i, reward, bids))
        .collect::<Result<Vec<_>, _>>()?;
    let mut outcome = GameOutcome {
        gamma,
        reward,
        server_utility: server_utility(&t, reward, gamma),
        profile: StrategyProfile { t, participants: members },
        coefficients: coeffs,
        au_utilities,
        payment: 0.0,
    };
    outcome.payment = ru_payment(&outcome, 0.0);
    Ok(outcome)
}

/// What the requester pays: the server's gross valuation less `reservation_utility`.
pub fn ru_payment(outcome: &GameOutcome, reservation_utility: f64) -> f64 {
    let inner: f64 = outcome.coefficients.iter().map(|&c| (c * outcome.reward).ln_1p()).sum();
    outcome.gamma * inner.ln_1p() - reservation_utility
}
