//! Reference implementations used as independent test oracles.
//!
//! Everything in this module favors transparency over speed: exact rational
//! arithmetic where feasible, exhaustive scans elsewhere. Production code must
//! never call into here; the test suites compare the fast paths against these.

use crate::adversarial::{MixtureSpec, Strategy};
use crate::error::{Error, Result};
use crate::stats::{approx_ge, certified_le};
use num::bigint::BigInt;
use num::rational::BigRational;
use num::traits::{One, Signed, ToPrimitive, Zero};

/// Exact binomial coefficient.
pub fn choose_exact(n: u64, k: u64) -> BigInt {
    if k > n {
        return BigInt::zero();
    }
    let k = k.min(n - k);
    let mut c = BigInt::one();
    for i in 0..k {
        c *= BigInt::from(n - i);
        c /= BigInt::from(i + 1);
    }
    c
}

/// Exact rational value of `B_{z,k}(p)` at the exact dyadic value of the f64 `p`.
pub fn binom_tail_exact(z: u64, k: u64, p: f64) -> Result<BigRational> {
    if k > z {
        return Err(Error::domain(format!("binom_tail_exact: k={k} > z={z}")));
    }
    let p = BigRational::from_float(p)
        .ok_or_else(|| Error::domain("p is not finite".to_string()))?;
    if p.is_negative() || &p > &BigRational::one() {
        return Err(Error::domain("p outside [0, 1]".to_string()));
    }
    let q = BigRational::one() - &p;
    if q.is_zero() {
        // p = 1 exactly: only the j = z term survives.
        return Ok(if k == z { BigRational::one() } else { BigRational::zero() });
    }
    // Term recurrence t_{j+1} = t_j * (z-j)/(j+1) * p/q starting from q^z,
    // so the large power is taken once.
    let mut term = pow_exact(&q, z);
    let mut sum = term.clone();
    let ratio = &p / &q;
    for j in 0..k {
        term = term * &ratio * BigRational::from(BigInt::from(z - j))
            / BigRational::from(BigInt::from(j + 1));
        sum += &term;
    }
    Ok(sum)
}

fn pow_exact(x: &BigRational, mut e: u64) -> BigRational {
    let mut base = x.clone();
    let mut acc = BigRational::one();
    while e > 0 {
        if e & 1 == 1 {
            acc *= &base;
        }
        base = &base * &base;
        e >>= 1;
    }
    acc
}

pub fn rational_to_f64(x: &BigRational) -> f64 {
    if x.numer().is_zero() {
        return 0.0;
    }
    // Shift numerator and denominator independently into f64 range and
    // reapply the power of two afterwards.
    let sn = (x.numer().bits() as i64 - 900).max(0) as u64;
    let sd = (x.denom().bits() as i64 - 900).max(0) as u64;
    let n = (x.numer() >> sn).to_f64().unwrap_or(f64::MAX);
    let d = (x.denom() >> sd).to_f64().unwrap_or(f64::MAX);
    let e = (sn as i64 - sd as i64).clamp(-2100, 2100) as i32;
    (n / d) * 2f64.powi(e)
}

/// Natural log of a positive rational, accurate enough to check log-space
/// tails whose linear values underflow f64.
pub fn rational_ln(x: &BigRational) -> f64 {
    assert!(x.is_positive(), "rational_ln requires a positive value");
    let sn = (x.numer().bits() as i64 - 900).max(0) as u64;
    let sd = (x.denom().bits() as i64 - 900).max(0) as u64;
    let n = (x.numer() >> sn).to_f64().unwrap_or(f64::MAX);
    let d = (x.denom() >> sd).to_f64().unwrap_or(f64::MAX);
    n.ln() - d.ln() + (sn as f64 - sd as f64) * std::f64::consts::LN_2
}

/// Exact per-point acceptance probability `h_z` and joint accept-and-bad mass
/// `b_z` for a point mass of `z` bad subsystems among `n + 1` slots.
fn point_masses_exact(k: u64, n: u64, lambda: f64) -> Result<(Vec<BigRational>, Vec<BigRational>)> {
    // Same rounded spectral gap the production path uses, then made exact.
    let nu_f = 1.0 - lambda;
    let total = BigRational::from(BigInt::from(n + 1));
    let mut h = Vec::with_capacity(n as usize + 2);
    let mut b = Vec::with_capacity(n as usize + 2);
    for z in 0..=(n + 1) {
        if z <= k {
            h.push(BigRational::one());
            b.push(BigRational::from(BigInt::from(z)) / &total);
        } else {
            let tz = binom_tail_exact(z, k, nu_f)?;
            let tz1 = binom_tail_exact(z - 1, k, nu_f)?;
            let hz = (BigRational::from(BigInt::from(n + 1 - z)) * &tz
                + BigRational::from(BigInt::from(z)) * &tz1)
                / &total;
            h.push(hz);
            b.push(BigRational::from(BigInt::from(z)) * tz1 / &total);
        }
    }
    Ok((h, b))
}

/// Result of the brute-force guaranteed-infidelity maximization.
pub struct BruteForceEpsBar {
    pub value: f64,
    /// A maximizing mixture over the count of bad subsystems.
    pub argmax: MixtureSpec,
}

/// Maximizes the conditional bad-remainder probability over two-point
/// mixtures on `{0, ..., n+1}` subject to acceptance probability `>= delta`.
///
/// The feasible set is a polytope cut from the simplex, so the optimum sits on
/// a vertex: a feasible point mass or an edge mixture with the acceptance
/// constraint active. This scans all of them, independently of the exact
/// interpolation formula it is used to check.
pub fn eps_bar_bruteforce(k: u64, n: u64, delta: f64, strategy: Strategy) -> Result<BruteForceEpsBar> {
    if k + 1 > n {
        return Err(Error::domain(format!("requires k <= n-1, got k={k}, n={n}")));
    }
    if !(delta > 0.0 && delta <= 1.0) {
        return Err(Error::domain(format!("delta must lie in (0, 1], got {delta}")));
    }
    let (h_exact, b_exact) = point_masses_exact(k, n, strategy.lambda())?;
    let h: Vec<f64> = h_exact.iter().map(rational_to_f64).collect();
    let b: Vec<f64> = b_exact.iter().map(rational_to_f64).collect();
    let m = n as usize + 2;

    let mut best = 0.0_f64;
    let mut best_mix: Vec<(u64, f64)> = vec![(0, 1.0)];
    let mut consider = |mix: &[(usize, f64)]| {
        let p: f64 = mix.iter().map(|&(z, w)| w * h[z]).sum();
        if p <= 0.0 || !approx_ge(p, delta) {
            return;
        }
        let f: f64 = mix.iter().map(|&(z, w)| w * b[z]).sum();
        let obj = f / p;
        if obj > best {
            best = obj;
            best_mix = mix.iter().map(|&(z, w)| (z as u64, w)).collect();
        }
    };

    for z1 in 0..m {
        consider(&[(z1, 1.0)]);
        for z2 in (z1 + 1)..m {
            let (h1, h2) = (h[z1], h[z2]);
            if (h1 - h2).abs() > 1e-300 {
                let w = (delta - h2) / (h1 - h2);
                if (0.0..=1.0).contains(&w) {
                    consider(&[(z1, w), (z2, 1.0 - w)]);
                }
            }
        }
    }

    Ok(BruteForceEpsBar {
        value: best,
        argmax: MixtureSpec::new(best_mix)?,
    })
}

/// Exhaustive scan for the minimum robust test number in the adversarial
/// scenario: smallest `N <= n_cap` admitting some `k < N` with
/// `eps_bar(k, N, delta) <= epsilon` and `B_{N,k}(nu r eps) >= 1 - delta`.
pub fn plan_scan_adversarial(
    epsilon: f64,
    delta: f64,
    strategy: Strategy,
    r: f64,
    n_cap: u64,
) -> Result<Option<(u64, u64)>> {
    let p_rob = strategy.nu() * r * epsilon;
    for n in 1..=n_cap {
        for k in 0..n {
            let sound = certified_le(
                crate::adversarial::eps_bar(k, n, delta, strategy)?,
                epsilon,
            );
            if !sound {
                // eps_bar is nondecreasing in k at fixed N.
                break;
            }
            let robust = approx_ge(
                crate::stats::binom_tail(n, k, p_rob)?,
                1.0 - delta,
            );
            if robust {
                return Ok(Some((k, n)));
            }
        }
    }
    Ok(None)
}

/// Exhaustive scan counterpart for the i.i.d. scenario conditions
/// `B_{N,k}(nu eps) <= delta` and `B_{N,k}(nu r eps) >= 1 - delta`.
pub fn plan_scan_iid(
    epsilon: f64,
    delta: f64,
    strategy: Strategy,
    r: f64,
    n_cap: u64,
) -> Result<Option<(u64, u64)>> {
    let nu = strategy.nu();
    for n in 1..=n_cap {
        for k in 0..n {
            let sound = certified_le(crate::stats::binom_tail(n, k, nu * epsilon)?, delta);
            if !sound {
                // The tail is increasing in k, so larger k stays unsound.
                break;
            }
            let robust = approx_ge(
                crate::stats::binom_tail(n, k, nu * r * epsilon)?,
                1.0 - delta,
            );
            if robust {
                return Ok(Some((k, n)));
            }
        }
    }
    Ok(None)
}

/// Smallest feasible failure budget within the cap, by direct scan.
pub fn k_min_scan_adversarial(
    epsilon: f64,
    delta: f64,
    strategy: Strategy,
    r: f64,
    n_cap: u64,
) -> Result<Option<u64>> {
    let p_rob = strategy.nu() * r * epsilon;
    for k in 0..n_cap {
        for n in (k + 1)..=n_cap {
            let sound = certified_le(
                crate::adversarial::eps_bar(k, n, delta, strategy)?,
                epsilon,
            );
            let robust = approx_ge(crate::stats::binom_tail(n, k, p_rob)?, 1.0 - delta);
            if sound && robust {
                return Ok(Some(k));
            }
        }
    }
    Ok(None)
}

/// Linear-scan version of the fixed-failure minimum test count.
pub fn n_fixed_failures_scan(
    k: u64,
    epsilon: f64,
    delta: f64,
    strategy: Strategy,
    n_cap: u64,
) -> Result<Option<u64>> {
    for n in (k + 1)..=n_cap {
        if certified_le(crate::adversarial::eps_bar(k, n, delta, strategy)?, epsilon) {
            return Ok(Some(n));
        }
    }
    Ok(None)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_tail_small_value() {
        let v = binom_tail_exact(5, 2, 0.3).unwrap();
        // 0.3 as f64 is not exactly 3/10, so compare through f64.
        assert!((rational_to_f64(&v) - 0.83692).abs() < 1e-12);
    }

    #[test]
    fn exact_tail_sums_to_one() {
        let v = binom_tail_exact(12, 12, 0.371).unwrap();
        assert_eq!(v, BigRational::one());
    }

    #[test]
    fn exact_tail_handles_large_z_small_k() {
        // The value is far below f64 range; its log is still computable.
        let v = binom_tail_exact(100_000, 3, 0.5).unwrap();
        assert!(v.is_positive());
        let ln = rational_ln(&v);
        assert!(ln < -60_000.0 && ln.is_finite());
    }

    #[test]
    fn brute_force_known_point() {
        let s = Strategy::new(0.5).unwrap();
        let bf = eps_bar_bruteforce(2, 12, 0.3, s).unwrap();
        assert!((bf.value - 0.6294566544566544).abs() < 1e-11);
    }
}
