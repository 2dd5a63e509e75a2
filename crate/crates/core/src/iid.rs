//! Guaranteed infidelity and planning for the i.i.d. scenario.
//!
//! With identically prepared subsystems both planning conditions reduce to
//! plain binomial tails: acceptance is `B_{N,k}(nu eps_state)` and the
//! guaranteed infidelity is the root of `B_{N,k}(nu eps) = delta`.

use crate::adversarial::Strategy;
use crate::error::{Error, Result};
use crate::stats::{
    self, binom_tail, certified_le, floor_guarded, largest_accepting_m, rel_entropy,
    rel_entropy_zero, AcceptingBound,
};
use serde::{Deserialize, Serialize};

/// Certified plan returned by [`plan_min_tests_iid`].
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct IidPlanResult {
    pub k_min: u64,
    pub n_min: u64,
    /// `B_{N,k}(nu eps)` at the plan; at most `delta` by construction.
    pub tail_at_eps: f64,
    /// `B_{N,k}(nu r eps)` at the plan; at least `1 - delta` by construction.
    pub tail_at_r_eps: f64,
}

fn check_kn(k: u64, n: u64) -> Result<()> {
    if k + 1 > n {
        return Err(Error::domain(format!("requires k <= N-1, got k={k}, N={n}")));
    }
    Ok(())
}

fn check_delta(delta: f64) -> Result<()> {
    if !(delta > 0.0 && delta <= 1.0) {
        return Err(Error::domain(format!("delta must lie in (0, 1], got {delta}")));
    }
    Ok(())
}

fn check_epsilon(epsilon: f64) -> Result<()> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::domain(format!("epsilon must lie in (0, 1), got {epsilon}")));
    }
    Ok(())
}

/// Acceptance probability for an honest i.i.d. device at state infidelity
/// `eps_state`: `B_{N,k}(nu eps_state)`.
pub fn accept_prob_iid(n: u64, k: u64, strategy: Strategy, eps_state: f64) -> Result<f64> {
    check_kn(k, n)?;
    if !(0.0..=1.0).contains(&eps_state) {
        return Err(Error::domain(format!(
            "state infidelity must lie in [0, 1], got {eps_state}"
        )));
    }
    binom_tail(n, k, strategy.nu() * eps_state)
}

const BISECTION_ITER_CAP: u32 = 200;

/// Guaranteed infidelity in the i.i.d. scenario: the unique `eps` in `[0, 1]`
/// with `B_{N,k}(nu eps) = delta`, or 1 when even `eps = 1` keeps the tail at
/// or above `delta`.
///
/// Solved by bisection; the tail is strictly decreasing in `eps`, and Newton
/// steps are avoided because the tail derivative is ill conditioned near the
/// endpoints.
pub fn eps_bar_iid(k: u64, n: u64, delta: f64, strategy: Strategy) -> Result<f64> {
    check_kn(k, n)?;
    check_delta(delta)?;
    let nu = strategy.nu();
    if nu == 0.0 {
        return Err(Error::domain("spectral gap must be positive".to_string()));
    }
    if binom_tail(n, k, nu)? >= delta {
        return Ok(1.0);
    }
    let mut lo = 0.0_f64; // tail(lo) = 1 >= delta
    let mut hi = 1.0_f64; // tail(hi) < delta
    for _ in 0..BISECTION_ITER_CAP {
        let mid = 0.5 * (lo + hi);
        if binom_tail(n, k, nu * mid)? >= delta {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-12 {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Largest certified failure budget for `N` tests in the i.i.d. scenario:
/// `floor(nu eps N - sqrt(2 nu eps N ln(1/delta)))`. May be negative.
pub fn l_iid(n: u64, epsilon: f64, delta: f64, strategy: Strategy) -> Result<i64> {
    check_epsilon(epsilon)?;
    if !(delta > 0.0 && delta <= 0.5) {
        return Err(Error::domain(format!("requires 0 < delta <= 1/2, got {delta}")));
    }
    let nu = strategy.nu();
    let nf = n as f64;
    let l = (1.0 / delta).ln();
    let value = nu * epsilon * nf - (2.0 * nu * epsilon * nf * l).sqrt();
    let floored = floor_guarded(value);
    if floored.abs() >= i64::MAX as f64 {
        return Err(Error::resource("failure budget exceeds i64 range".to_string()));
    }
    Ok(floored as i64)
}

/// Sufficient i.i.d. test count at error rate `s`:
/// `ceil(ln(1/delta) / D(nu s || nu eps))`, with the `s = 0` limit
/// `D(0 || q) = -ln(1 - q)` handled analytically.
pub fn sufficient_n_iid(s: f64, epsilon: f64, delta: f64, strategy: Strategy) -> Result<u64> {
    if !(0.0..1.0).contains(&s) || s >= epsilon {
        return Err(Error::domain(format!(
            "requires 0 <= s < epsilon, got s={s}, epsilon={epsilon}"
        )));
    }
    check_epsilon(epsilon)?;
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::domain(format!("delta must lie in (0, 1), got {delta}")));
    }
    let nu = strategy.nu();
    let d = if s == 0.0 {
        rel_entropy_zero(nu * epsilon)?
    } else {
        rel_entropy(nu * s, nu * epsilon)?
    };
    let n = stats::ceil_guarded((1.0 / delta).ln() / d).max(1.0);
    if n >= u64::MAX as f64 {
        return Err(Error::resource("required N exceeds u64 range".to_string()));
    }
    Ok(n as u64)
}

/// Smallest `N >= k + 1` with `B_{N,k}(nu eps) <= delta`.
pub fn n_fixed_failures_iid(k: u64, epsilon: f64, delta: f64, strategy: Strategy) -> Result<u64> {
    check_epsilon(epsilon)?;
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::domain(format!("delta must lie in (0, 1), got {delta}")));
    }
    let nu = strategy.nu();
    if nu == 0.0 {
        return Err(Error::domain("spectral gap must be positive".to_string()));
    }
    let p = nu * epsilon;
    let sound = |n: u64| -> Result<bool> { Ok(certified_le(binom_tail(n, k, p)?, delta)) };
    let mut lo = k;
    let mut hi = (k + 1).max(1);
    while !sound(hi)? {
        lo = hi;
        hi = hi.saturating_mul(2);
        if hi > (1 << 52) {
            return Err(Error::resource("no feasible N below 2^52".to_string()));
        }
    }
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if sound(mid)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi.max(k + 1))
}

/// Minimum robust test number in the i.i.d. scenario.
///
/// Same loop shape as the adversarial planner with the exact guaranteed
/// infidelity replaced by the tail condition `B_{M,k}(nu eps) <= delta`. The
/// budget loop is capped through the coefficient bound
/// `N <= ceil(xi(r) ln(1/delta) / (nu eps))`, which certifies a feasible plan.
pub fn plan_min_tests_iid(epsilon: f64, delta: f64, strategy: Strategy, r: f64) -> Result<IidPlanResult> {
    check_epsilon(epsilon)?;
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::domain(format!("delta must lie in (0, 1), got {delta}")));
    }
    if !(0.0..1.0).contains(&r) {
        return Err(Error::domain(format!("robustness must lie in [0, 1), got {r}")));
    }
    let nu = strategy.nu();
    if nu == 0.0 {
        return Err(Error::domain("spectral gap must be positive".to_string()));
    }

    let k_min = if r == 0.0 {
        0
    } else {
        let n_ub = (xi_coeff(r)? * (1.0 / delta).ln() / (nu * epsilon)).ceil();
        let cap = stats::ceil_guarded(nu * epsilon * n_ub) as u64 + 1;
        let p_rob = nu * r * epsilon;
        let p_eps = nu * epsilon;
        let mut found = None;
        for k in 0..=cap {
            let m = match largest_accepting_m(k, p_rob, delta)? {
                AcceptingBound::Finite(m) => m,
                AcceptingBound::Unbounded => unreachable!("p_rob > 0 when r > 0"),
            };
            if m >= k + 1 && certified_le(binom_tail(m, k, p_eps)?, delta) {
                found = Some(k);
                break;
            }
        }
        found.ok_or_else(|| {
            Error::resource(format!(
                "failure-budget search exceeded its certified cap {cap}; \
                 parameters epsilon={epsilon}, delta={delta}, r={r}"
            ))
        })?
    };

    let n_min = n_fixed_failures_iid(k_min, epsilon, delta, strategy)?;
    Ok(IidPlanResult {
        k_min,
        n_min,
        tail_at_eps: binom_tail(n_min, k_min, nu * epsilon)?,
        tail_at_r_eps: binom_tail(n_min, k_min, nu * r * epsilon)?,
    })
}

/// Closed-form robust pair for any error rate `s` strictly between `r eps`
/// and `eps`: `N = ceil(ln(1/delta) / min{D(nu s || nu r eps), D(nu s || nu eps)})`
/// and `k = floor(nu s N)`.
pub fn robust_pair_iid(
    epsilon: f64,
    delta: f64,
    strategy: Strategy,
    r: f64,
    s: f64,
) -> Result<(u64, u64)> {
    check_epsilon(epsilon)?;
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::domain(format!("delta must lie in (0, 1), got {delta}")));
    }
    if !(0.0..1.0).contains(&r) {
        return Err(Error::domain(format!("robustness must lie in [0, 1), got {r}")));
    }
    if !(s > r * epsilon && s < epsilon) {
        return Err(Error::domain(format!(
            "error rate must lie in (r eps, eps) = ({}, {epsilon}), got {s}",
            r * epsilon
        )));
    }
    let nu = strategy.nu();
    let d_sound = rel_entropy(nu * s, nu * epsilon)?;
    let d_robust = if r == 0.0 {
        f64::INFINITY
    } else {
        rel_entropy(nu * s, nu * r * epsilon)?
    };
    let n = stats::ceil_guarded((1.0 / delta).ln() / d_sound.min(d_robust)).max(1.0);
    if n >= u64::MAX as f64 {
        return Err(Error::resource("required N exceeds u64 range".to_string()));
    }
    let n = n as u64;
    let k = floor_guarded(nu * s * n as f64).max(0.0) as u64;
    Ok((k.min(n.saturating_sub(1)), n))
}

/// Error rate equalizing the two exponents in [`robust_pair_iid`]:
/// `ln((1-nu eps)/(1-nu r eps)) / [nu ln r + nu ln((1-nu eps)/(1-nu r eps))]`.
/// Lies strictly between `r eps` and `eps`.
pub fn s_opt(strategy: Strategy, r: f64, epsilon: f64) -> Result<f64> {
    check_epsilon(epsilon)?;
    if !(r > 0.0 && r < 1.0) {
        return Err(Error::domain(format!("requires 0 < r < 1, got {r}")));
    }
    let nu = strategy.nu();
    let ratio_log = (((1.0 - nu * epsilon) / (1.0 - nu * r * epsilon)) as f64).ln();
    Ok(ratio_log / (nu * r.ln() + nu * ratio_log))
}

/// Coefficient `zeta(r, p) = p / D(beta(r, p) || p)` bounding the i.i.d.
/// minimum test count, where `beta` equalizes `D(. || rp)` and `D(. || p)`.
/// Strictly decreasing in `p`.
pub fn zeta_coeff(r: f64, p: f64) -> Result<f64> {
    if !(r > 0.0 && r < 1.0) {
        return Err(Error::domain(format!("requires 0 < r < 1, got {r}")));
    }
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::domain(format!("requires 0 < p < 1, got {p}")));
    }
    let ratio_log = ((1.0 - p) / (1.0 - r * p)).ln();
    let beta = ratio_log / (r.ln() + ratio_log);
    Ok(p / rel_entropy(beta, p)?)
}

/// Limit of `zeta(r, p)` as `p -> 0`:
/// `[(u ln u) + (1 - u)]^{-1}` with `u = (r-1)/ln r`.
pub fn xi_coeff(r: f64) -> Result<f64> {
    if !(r > 0.0 && r < 1.0) {
        return Err(Error::domain(format!("requires 0 < r < 1, got {r}")));
    }
    let u = (r - 1.0) / r.ln();
    Ok(1.0 / (u * u.ln() + 1.0 - u))
}

/// Quantile of the Poisson tail: the unique `x >= 0` solving
/// `exp(-x) sum_{j<=k} x^j/j! = delta`, found by bisection.
///
/// Governs the small-`eps` limit of the fixed-failure i.i.d. test count.
pub fn poisson_quantile(k: u64, delta: f64) -> Result<f64> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::domain(format!("delta must lie in (0, 1), got {delta}")));
    }
    let tail = |x: f64| -> f64 {
        // exp(-x) sum_{j<=k} x^j/j!, summed in log space from the largest term.
        let mut term = (-x).exp();
        let mut acc = term;
        for j in 1..=k {
            term *= x / j as f64;
            acc += term;
        }
        acc
    };
    let mut lo = 0.0_f64; // tail(0) = 1 > delta
    let mut hi = 1.0_f64;
    while tail(hi) > delta {
        hi *= 2.0;
        if hi > 1e12 {
            return Err(Error::resource("poisson quantile bracket overflow".to_string()));
        }
    }
    for _ in 0..BISECTION_ITER_CAP {
        let mid = 0.5 * (lo + hi);
        if tail(mid) > delta {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-12 * hi.max(1.0) {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}
