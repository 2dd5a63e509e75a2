//! Binomial-tail, entropy, and search kernels.
//!
//! Everything here is a pure function of its arguments. The binomial tail is
//! evaluated by mode-centered summation with compensated accumulation, so it
//! stays accurate both deep in the tail (values far below 1) and next to 1
//! (via the complementary upper tail). All sums have strictly positive terms,
//! so no cancellation occurs anywhere on the direct path.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::sync::OnceLock;

/// Relative tolerance for boundary comparisons against a target such as
/// `B <= delta` or `B >= 1 - delta`.
pub const BOUNDARY_REL_TOL: f64 = 1e-12;

/// Lenient `a <= b`: equality up to `BOUNDARY_REL_TOL` counts as satisfied.
pub fn approx_le(a: f64, b: f64) -> bool {
    a <= b * (1.0 + BOUNDARY_REL_TOL) || a <= b + f64::MIN_POSITIVE
}

/// Lenient `a >= b`: equality up to `BOUNDARY_REL_TOL` counts as satisfied.
pub fn approx_ge(a: f64, b: f64) -> bool {
    a >= b * (1.0 - BOUNDARY_REL_TOL)
}

/// Conservative `a <= b` for conditions that certify soundness: the favorable
/// side is shrunk by the tolerance, so rounding can never certify an unsound
/// plan.
pub fn certified_le(a: f64, b: f64) -> bool {
    a <= b * (1.0 - BOUNDARY_REL_TOL)
}

/// Guarded floor: absorbs floating error up to 1e-9 below an exact integer.
pub fn floor_guarded(x: f64) -> f64 {
    (x + 1e-9).floor()
}

/// Guarded ceiling: absorbs floating error up to 1e-9 above an exact integer.
pub fn ceil_guarded(x: f64) -> f64 {
    (x - 1e-9).ceil()
}

/// A probability value validated to lie in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Probability(f64);

impl Probability {
    pub fn new(value: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&value) || value.is_nan() {
            return Err(Error::domain(format!(
                "probability must lie in [0, 1], got {value}"
            )));
        }
        Ok(Probability(value))
    }

    pub fn get(self) -> f64 {
        self.0
    }
}

/// Arguments of a binomial lower-tail query: `z` trials, failure budget `k`,
/// per-trial failure probability `p`.
#[derive(Debug, Clone, Copy)]
pub struct TailQuery {
    pub z: u64,
    pub k: u64,
    pub p: Probability,
}

impl TailQuery {
    pub fn new(z: u64, k: u64, p: Probability) -> Result<Self> {
        if k > z {
            return Err(Error::domain(format!(
                "failure budget k={k} exceeds trial count z={z}"
            )));
        }
        Ok(TailQuery { z, k, p })
    }

    /// Evaluates the cumulative probability of at most `k` failures.
    pub fn eval(&self) -> f64 {
        tail_unchecked(self.z, self.k, self.p.get())
    }
}

fn check_prob(p: f64, name: &str) -> Result<()> {
    if !(0.0..=1.0).contains(&p) || p.is_nan() {
        return Err(Error::domain(format!("{name} must lie in [0, 1], got {p}")));
    }
    Ok(())
}

fn check_open_prob(p: f64, name: &str) -> Result<()> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::domain(format!("{name} must lie in (0, 1), got {p}")));
    }
    Ok(())
}

/// Cumulative binomial distribution function `B_{z,k}(p) = sum_{j<=k} C(z,j) p^j (1-p)^{z-j}`.
///
/// The convention `0^0 = 1` applies, so `p = 0` gives 1 for every `k <= z`.
pub fn binom_tail(z: u64, k: u64, p: f64) -> Result<f64> {
    check_prob(p, "p")?;
    if k > z {
        return Err(Error::domain(format!("binom_tail: k={k} > z={z}")));
    }
    Ok(tail_unchecked(z, k, p))
}

/// Natural log of `binom_tail`; finite even where the linear value underflows.
pub fn ln_binom_tail(z: u64, k: u64, p: f64) -> Result<f64> {
    check_prob(p, "p")?;
    if k > z {
        return Err(Error::domain(format!("ln_binom_tail: k={k} > z={z}")));
    }
    Ok(ln_tail_unchecked(z, k, p))
}

/// Upper tail `P(X > k) = 1 - B_{z,k}(p)` computed without cancellation.
pub fn binom_upper_tail(z: u64, k: u64, p: f64) -> Result<f64> {
    check_prob(p, "p")?;
    if k > z {
        return Err(Error::domain(format!("binom_upper_tail: k={k} > z={z}")));
    }
    if k == z || p == 0.0 {
        return Ok(0.0);
    }
    if p == 1.0 {
        return Ok(1.0);
    }
    // P(X > k) = P(z - X <= z - k - 1) with z - X ~ Bin(z, 1-p).
    Ok(tail_unchecked(z, z - k - 1, 1.0 - p))
}

fn tail_unchecked(z: u64, k: u64, p: f64) -> f64 {
    if k == z || p == 0.0 {
        return 1.0;
    }
    if p == 1.0 {
        return 0.0; // k < z here
    }
    let mode = ((z as f64 + 1.0) * p).floor();
    if (k as f64) < mode {
        let (ln_max, acc) = mode_centered_sum(z, k, p);
        (ln_max + acc.ln()).exp()
    } else {
        // Tail near 1: compute the small upper tail and complement.
        let (ln_max, acc) = mode_centered_sum(z, z - k - 1, 1.0 - p);
        1.0 - (ln_max + acc.ln()).exp()
    }
}

fn ln_tail_unchecked(z: u64, k: u64, p: f64) -> f64 {
    if k == z || p == 0.0 {
        return 0.0;
    }
    if p == 1.0 {
        return f64::NEG_INFINITY;
    }
    let mode = ((z as f64 + 1.0) * p).floor();
    if (k as f64) < mode {
        let (ln_max, acc) = mode_centered_sum(z, k, p);
        ln_max + acc.ln()
    } else {
        let (ln_max, acc) = mode_centered_sum(z, z - k - 1, 1.0 - p);
        (-(ln_max + acc.ln()).exp()).ln_1p()
    }
}

/// Sums the pmf over `j = 0..=k` relative to its largest term.
///
/// Returns `(ln t_max, acc)` with the tail equal to `exp(ln t_max) * acc`.
/// Terms are generated by the pmf ratio recurrence outward from the largest
/// one and accumulation stops once increments fall below 1e-19 of the total,
/// so the cost is bounded by the effective support width rather than `k`.
fn mode_centered_sum(z: u64, k: u64, p: f64) -> (f64, f64) {
    debug_assert!(k < z && p > 0.0 && p < 1.0);
    let q = 1.0 - p;
    let mode = ((z as f64 + 1.0) * p).floor() as u64;
    let jmax = k.min(mode.min(z));
    let ln_tmax = ln_choose(z, jmax) + jmax as f64 * p.ln() + (z - jmax) as f64 * (-p).ln_1p();

    let mut acc = Neumaier::new(1.0);
    // Downward from jmax: term ratio t_{j-1}/t_j = j q / ((z-j+1) p).
    let mut t = 1.0_f64;
    let mut j = jmax;
    while j >= 1 {
        t *= (j as f64 * q) / ((z - j + 1) as f64 * p);
        acc.add(t);
        if t < acc.value() * 1e-19 {
            break;
        }
        j -= 1;
    }
    // Upward from jmax to k: term ratio t_j/t_{j-1} = (z-j+1) p / (j q).
    t = 1.0;
    j = jmax + 1;
    while j <= k {
        t *= ((z - j + 1) as f64 * p) / (j as f64 * q);
        acc.add(t);
        if t < acc.value() * 1e-19 {
            break;
        }
        j += 1;
    }
    (ln_tmax, acc.value())
}

/// Neumaier-compensated accumulator for sums of positive terms.
struct Neumaier {
    sum: f64,
    comp: f64,
}

impl Neumaier {
    fn new(x: f64) -> Self {
        Neumaier { sum: x, comp: 0.0 }
    }

    fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

const LNFACT_TABLE_LEN: usize = 1030;

fn lnfact_table() -> &'static [f64; LNFACT_TABLE_LEN] {
    static TABLE: OnceLock<[f64; LNFACT_TABLE_LEN]> = OnceLock::new();
    TABLE.get_or_init(|| {
        // Exact products: C(z, j) <= C(1029, 514) < f64::MAX, so binomial
        // coefficients below the table bound are representable and the log
        // is taken once at the end. The table itself stores ln(i!) built from
        // lgamma only for indexing convenience; ln_choose below avoids it for
        // small z.
        let mut t = [0.0_f64; LNFACT_TABLE_LEN];
        for i in 2..LNFACT_TABLE_LEN {
            t[i] = libm::lgamma(i as f64 + 1.0);
        }
        t
    })
}

/// `ln C(z, j)` with accuracy matched to the tail targets: a direct product
/// for small `z` (the coefficient fits in an f64), a pairwise log sum for
/// moderate `j`, and lgamma for the rest.
fn ln_choose(z: u64, j: u64) -> f64 {
    let j = j.min(z - j);
    if j == 0 {
        return 0.0;
    }
    if j == 1 {
        return (z as f64).ln();
    }
    if z < LNFACT_TABLE_LEN as u64 {
        // Multiplicative form: relative error ~j ulps, well below 1e-13.
        let mut c = 1.0_f64;
        for i in 1..=j {
            c *= (z - j + i) as f64 / i as f64;
        }
        return c.ln();
    }
    if j <= 65_536 {
        let mut acc = Neumaier::new(0.0);
        for i in 1..=j {
            acc.add(((z - j + i) as f64 / i as f64).ln());
        }
        return acc.value();
    }
    let _ = lnfact_table();
    libm::lgamma(z as f64 + 1.0) - libm::lgamma(j as f64 + 1.0) - libm::lgamma((z - j) as f64 + 1.0)
}

/// Relative entropy `D(p || q)` between binary distributions `(p, 1-p)` and
/// `(q, 1-q)`, in nats.
///
/// Arguments must lie strictly inside `(0, 1)`; callers needing the
/// `D(0 || q)` limit handle it explicitly.
pub fn rel_entropy(p: f64, q: f64) -> Result<f64> {
    check_open_prob(p, "p")?;
    check_open_prob(q, "q")?;
    // ln(p/q) = ln1p((p-q)/q) keeps accuracy when p and q are close.
    Ok(p * ((p - q) / q).ln_1p() + (1.0 - p) * ((q - p) / (1.0 - q)).ln_1p())
}

/// `D(0 || q) = -ln(1-q)`, the relative entropy limit used by error rate 0.
pub fn rel_entropy_zero(q: f64) -> Result<f64> {
    check_open_prob(q, "q")?;
    Ok(-(-q).ln_1p())
}

/// Chernoff upper bound `exp(-z D(k/z || p)) >= B_{z,k}(p)`, valid for `k <= p z`.
pub fn chernoff_upper(z: u64, k: u64, p: f64) -> Result<f64> {
    check_open_prob(p, "p")?;
    if k as f64 > p * z as f64 {
        return Err(Error::domain(format!(
            "chernoff_upper requires k <= p z, got k={k}, p z={}",
            p * z as f64
        )));
    }
    if z == 0 {
        return Ok(1.0);
    }
    let d = if k == 0 {
        rel_entropy_zero(p)?
    } else {
        rel_entropy(k as f64 / z as f64, p)?
    };
    Ok((-(z as f64) * d).exp())
}

/// Reverse Chernoff bound `(e sqrt(k))^{-1} exp(-z D(k/z || p)) <= B_{z,k}(p)`,
/// valid for `1 <= k <= z-1`.
pub fn chernoff_lower(z: u64, k: u64, p: f64) -> Result<f64> {
    check_open_prob(p, "p")?;
    if k == 0 || k >= z {
        return Err(Error::domain(format!(
            "chernoff_lower requires 1 <= k <= z-1, got k={k}, z={z}"
        )));
    }
    let d = rel_entropy(k as f64 / z as f64, p)?;
    Ok((-(z as f64) * d).exp() / (std::f64::consts::E * (k as f64).sqrt()))
}

/// Smallest `z >= k` with `B_{z,k}(1-lambda) <= delta`.
///
/// The tail is strictly decreasing in `z`, so exponential bracketing followed
/// by binary search finds the boundary in `O(log z)` evaluations.
pub fn z_star(k: u64, delta: f64, lambda: f64) -> Result<u64> {
    if !(delta > 0.0 && delta <= 1.0) {
        return Err(Error::domain(format!("delta must lie in (0, 1], got {delta}")));
    }
    if !(0.0..=1.0).contains(&lambda) {
        return Err(Error::domain(format!("lambda must lie in [0, 1], got {lambda}")));
    }
    let nu = 1.0 - lambda;
    if delta >= 1.0 {
        return Ok(k);
    }
    if nu == 0.0 {
        return Err(Error::no_solution(
            "tail equals 1 for every z when the spectral gap is 0",
        ));
    }
    let reached = |z: u64| approx_le(tail_unchecked(z, k, nu), delta);
    let mut lo = k; // B_{k,k} = 1 > delta here
    let mut hi = k.max(1) * 2;
    while !reached(hi) {
        lo = hi;
        hi *= 2;
    }
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if reached(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

/// Result of [`largest_accepting_m`]: either the finite boundary or a marker
/// that every `M` keeps the acceptance probability above the target.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AcceptingBound {
    Finite(u64),
    Unbounded,
}

/// Largest `M >= k` with `B_{M,k}(p) >= 1 - delta`.
///
/// `B_{k,k} = 1`, so the boundary always exists for `p > 0`; `p = 0` keeps the
/// tail at 1 forever and yields [`AcceptingBound::Unbounded`].
pub fn largest_accepting_m(k: u64, p: f64, delta: f64) -> Result<AcceptingBound> {
    check_prob(p, "p")?;
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::domain(format!("delta must lie in (0, 1), got {delta}")));
    }
    if p == 0.0 {
        return Ok(AcceptingBound::Unbounded);
    }
    // B_{M,k}(p) >= 1-delta  <=>  P(X > k) <= delta; the upper tail avoids
    // cancellation when delta is small.
    let holds = |m: u64| {
        if m == k {
            return true;
        }
        approx_le(tail_unchecked(m, m - k - 1, 1.0 - p), delta)
    };
    let mut lo = k.max(1);
    if !holds(lo) {
        return Ok(AcceptingBound::Finite(k));
    }
    let mut hi = lo * 2;
    while holds(hi) {
        lo = hi;
        hi *= 2;
    }
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if holds(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(AcceptingBound::Finite(lo))
}
