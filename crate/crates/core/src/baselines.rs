//! Cost and acceptance formulas of earlier verification protocols, for
//! side-by-side comparison tables and figure data.
//!
//! Several of these counts are astronomical by design, so totals are carried
//! as exact integers only up to 10^15 and as base-10 logarithms beyond that.

use crate::adversarial::{self, Strategy};
use crate::error::{Error, Result};
use crate::iid;
use serde::{Deserialize, Serialize};
use std::fmt;

const EXACT_LIMIT: f64 = 1e15;

/// A count that may exceed 64-bit range: exact below 10^15, `(mantissa, exponent)`
/// via its base-10 logarithm above.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum ExtNat {
    Exact(u64),
    /// Base-10 logarithm of the count.
    Log10(f64),
}

impl ExtNat {
    pub fn from_u64(v: u64) -> Self {
        ExtNat::Exact(v)
    }

    pub fn from_log10(log10: f64) -> Self {
        if log10 < EXACT_LIMIT.log10() {
            let v = 10f64.powf(log10);
            ExtNat::Exact(v.round() as u64)
        } else {
            ExtNat::Log10(log10)
        }
    }

    pub fn log10(self) -> f64 {
        match self {
            ExtNat::Exact(v) => (v as f64).log10(),
            ExtNat::Log10(l) => l,
        }
    }

    pub fn mul(self, other: ExtNat) -> ExtNat {
        match (self, other) {
            (ExtNat::Exact(a), ExtNat::Exact(b)) => match a.checked_mul(b) {
                Some(p) if (p as f64) < EXACT_LIMIT => ExtNat::Exact(p),
                _ => ExtNat::Log10((a as f64).log10() + (b as f64).log10()),
            },
            _ => ExtNat::Log10(self.log10() + other.log10()),
        }
    }
}

impl fmt::Display for ExtNat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExtNat::Exact(v) => write!(f, "{v}"),
            ExtNat::Log10(l) => {
                let exp = l.floor();
                let mantissa = 10f64.powf(l - exp);
                write!(f, "{mantissa:.3}e+{exp:.0}")
            }
        }
    }
}

/// Protocols covered by the comparison table.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum ProtocolName {
    Hm,
    Zh,
    Tmmmf,
    Tm,
    This,
}

impl fmt::Display for ProtocolName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            ProtocolName::Hm => "HM",
            ProtocolName::Zh => "ZH",
            ProtocolName::Tmmmf => "TMMMF",
            ProtocolName::Tm => "TM",
            ProtocolName::This => "THIS",
        };
        f.write_str(s)
    }
}

/// One comparison row: tests per repetition, acceptance bound for an honest
/// device at infidelity `eps/2` (as a base-10 log), repetitions needed for
/// one acceptance with confidence `1 - delta`, and the resulting total.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProtocolCost {
    pub name: ProtocolName,
    pub tests: ExtNat,
    /// Base-10 logarithm of the acceptance probability (bound); 0 means 1.
    pub accept_log10: f64,
    pub repetitions: ExtNat,
    pub total: ExtNat,
    /// Context notes (e.g. the qudit count a row was pinned at).
    pub note: String,
}

fn check_open(value: f64, name: &str) -> Result<()> {
    if !(value > 0.0 && value < 1.0) {
        return Err(Error::domain(format!("{name} must lie in (0, 1), got {value}")));
    }
    Ok(())
}

/// Test count of the all-pass two-colorable protocol: `ceil(1/(delta eps) - 1)`.
pub fn hm_tests(epsilon: f64, delta: f64) -> Result<u64> {
    check_open(epsilon, "epsilon")?;
    check_open(delta, "delta")?;
    Ok((1.0 / (delta * epsilon) - 1.0).ceil().max(1.0) as u64)
}

/// Acceptance bound `(1 - eps_tau/2)^N` for the all-pass protocol.
pub fn hm_accept_bound(eps_tau: f64, n: u64) -> Result<f64> {
    if !(0.0..=1.0).contains(&eps_tau) {
        return Err(Error::domain(format!("eps_tau must lie in [0, 1], got {eps_tau}")));
    }
    Ok((n as f64 * (-eps_tau / 2.0).ln_1p()).exp())
}

fn hm_accept_log10(eps_tau: f64, n: u64) -> f64 {
    n as f64 * (-eps_tau / 2.0).ln_1p() / std::f64::consts::LN_10
}

/// Test count of the zero-failure homogeneous protocol, i.e. the fixed-failure
/// minimum at budget 0.
pub fn zh_tests(epsilon: f64, delta: f64, strategy: Strategy) -> Result<u64> {
    adversarial::n_fixed_failures(0, epsilon, delta, strategy)
}

/// Acceptance probability `(1 - nu eps_tau)^N` of the zero-failure protocol.
pub fn zh_accept(eps_tau: f64, n: u64, strategy: Strategy) -> Result<f64> {
    if !(0.0..=1.0).contains(&eps_tau) {
        return Err(Error::domain(format!("eps_tau must lie in [0, 1], got {eps_tau}")));
    }
    Ok((n as f64 * (-strategy.nu() * eps_tau).ln_1p()).exp())
}

/// Lower bound on the zero-failure test count:
/// `k_- + ceil(k_-(1-eps)/(lam eps))` with `k_- = floor(log_lam delta)`.
pub fn zh_lower_bound(epsilon: f64, delta: f64, strategy: Strategy) -> Result<u64> {
    check_open(epsilon, "epsilon")?;
    check_open(delta, "delta")?;
    let lam = strategy.lambda();
    if lam <= 0.0 {
        return Err(Error::domain("requires lambda > 0".to_string()));
    }
    let k_minus = (delta.ln() / lam.ln()).floor();
    Ok((k_minus + (k_minus * (1.0 - epsilon) / (lam * epsilon)).ceil()).max(0.0) as u64)
}

/// Repetitions needed so a protocol with per-run acceptance `p_acc` accepts at
/// least once with probability `1 - confidence_delta`:
/// `ceil(ln(confidence_delta) / ln(1 - p_acc))`.
pub fn repetitions_required(p_acc: f64, confidence_delta: f64) -> Result<u64> {
    check_open(p_acc, "p_acc")?;
    check_open(confidence_delta, "confidence_delta")?;
    let m = (confidence_delta.ln() / (-p_acc).ln_1p()).ceil().max(1.0);
    if m >= u64::MAX as f64 {
        return Err(Error::resource("repetition count exceeds u64 range".to_string()));
    }
    Ok(m as u64)
}

/// Repetition count in log10 form for acceptance probabilities far below f64
/// range: `log10(ln(1/delta)) - log10(p_acc)`.
pub fn repetitions_log10(p_acc_log10: f64, confidence_delta: f64) -> Result<f64> {
    check_open(confidence_delta, "confidence_delta")?;
    if p_acc_log10 > 0.0 {
        return Err(Error::domain("acceptance log10 must be <= 0".to_string()));
    }
    Ok((1.0 / confidence_delta).ln().log10() - p_acc_log10)
}

/// Parameters induced by the qudit count `n` and constant `c` for the
/// coloring-based protocol: total copies `2n ceil(5 n^4 ln n / 32)`, half of
/// them tests, infidelity `(2 sqrt(c)+1)/n`, significance `n^{1-5c/64}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TmmmfParams {
    pub n_total: ExtNat,
    pub n_test: ExtNat,
    pub epsilon: f64,
    pub delta: f64,
}

pub fn tmmmf_params(n: u64, c: f64) -> Result<TmmmfParams> {
    if n < 2 {
        return Err(Error::domain("requires n >= 2".to_string()));
    }
    let upper = (n as f64 - 1.0).powi(2) / 4.0;
    if !(c > 64.0 / 5.0 && c < upper) {
        return Err(Error::domain(format!(
            "requires 64/5 < c < (n-1)^2/4 = {upper}, got c={c}"
        )));
    }
    let nf = n as f64;
    let block = (5.0 * nf.powi(4) * nf.ln() / 32.0).ceil();
    let per_test_log10 = nf.log10() + block.log10();
    Ok(TmmmfParams {
        n_total: ExtNat::from_log10(per_test_log10 + 2f64.log10()),
        n_test: ExtNat::from_log10(per_test_log10),
        epsilon: (2.0 * c.sqrt() + 1.0) / nf,
        delta: nf.powf(1.0 - 5.0 * c / 64.0),
    })
}

/// Acceptance bound `exp(-0.245 n^3 ln n)` for the coloring-based protocol,
/// reported as a base-10 logarithm.
pub fn tmmmf_accept_log10(n: u64) -> f64 {
    let nf = n as f64;
    -0.245 * nf.powi(3) * nf.ln() / std::f64::consts::LN_10
}

/// Total sample count of the hypergraph-state protocol at its minimal
/// admissible parameters `k = (4n)^7`, `m = (2 ln 2) n^3 k^{18/7}`.
pub fn tm_samples(n: u64) -> Result<ExtNat> {
    if n == 0 {
        return Err(Error::domain("requires n >= 1".to_string()));
    }
    let nf = n as f64;
    // m = (2 ln 2) n^3 (4n)^18 and tests = n (4n)^7, combined in log10.
    let log_m = (2.0 * std::f64::consts::LN_2).log10() + 3.0 * nf.log10() + 18.0 * (4.0 * nf).log10();
    let log_nk = nf.log10() + 7.0 * (4.0 * nf).log10();
    let hi = log_m.max(log_nk);
    let sum_log10 = hi + (10f64.powf(log_m - hi) + 10f64.powf(log_nk - hi)).log10();
    Ok(ExtNat::from_log10(sum_log10))
}

/// Builds the full comparison table at target `(epsilon, delta)`, strategy
/// eigenvalue `lambda`, and robustness `r`. Honest-device acceptance is
/// evaluated at infidelity `eps_tau = epsilon / 2` throughout.
pub fn protocol_comparison(
    epsilon: f64,
    delta: f64,
    strategy: Strategy,
    r: f64,
) -> Result<Vec<ProtocolCost>> {
    check_open(epsilon, "epsilon")?;
    check_open(delta, "delta")?;
    let eps_tau = epsilon / 2.0;
    let mut rows = Vec::new();

    // HM: accept bound may underflow f64, so repetitions go through log10.
    let hm_n = hm_tests(epsilon, delta)?;
    let hm_log10 = hm_accept_log10(eps_tau, hm_n);
    let hm_reps = ExtNat::from_log10(repetitions_log10(hm_log10, delta)?);
    let hm_tests_ext = ExtNat::from_u64(hm_n);
    rows.push(ProtocolCost {
        name: ProtocolName::Hm,
        tests: hm_tests_ext,
        accept_log10: hm_log10,
        repetitions: hm_reps,
        total: hm_tests_ext.mul(hm_reps),
        note: String::new(),
    });

    // ZH: zero-failure homogeneous protocol.
    let zh_n = zh_tests(epsilon, delta, strategy)?;
    let zh_p = zh_accept(eps_tau, zh_n, strategy)?;
    let zh_log10 = zh_n as f64 * (-strategy.nu() * eps_tau).ln_1p() / std::f64::consts::LN_10;
    let zh_reps = if zh_p > 1e-300 {
        ExtNat::from_u64(repetitions_required(zh_p, delta)?)
    } else {
        ExtNat::from_log10(repetitions_log10(zh_log10, delta)?)
    };
    let zh_tests_ext = ExtNat::from_u64(zh_n);
    rows.push(ProtocolCost {
        name: ProtocolName::Zh,
        tests: zh_tests_ext,
        accept_log10: zh_log10,
        repetitions: zh_reps,
        total: zh_tests_ext.mul(zh_reps),
        note: String::new(),
    });

    // TMMMF: the qudit count is pinned by the target infidelity at the
    // infimum c -> 64/5, and the protocol's own significance is restricted.
    let tmmmf_n = ((2.0 * (64.0f64 / 5.0).sqrt() + 1.0) / epsilon).ceil() as u64;
    if tmmmf_n >= 2 {
        let block = {
            let nf = tmmmf_n as f64;
            nf.log10() + (5.0 * nf.powi(4) * nf.ln() / 32.0).ceil().log10()
        };
        let tests = ExtNat::from_log10(block + 2f64.log10());
        let acc = tmmmf_accept_log10(tmmmf_n);
        let reps = ExtNat::from_log10(repetitions_log10(acc, delta)?);
        rows.push(ProtocolCost {
            name: ProtocolName::Tmmmf,
            tests,
            accept_log10: acc,
            repetitions: reps,
            total: tests.mul(reps),
            note: format!("n = {tmmmf_n} pinned by epsilon; delta restricted by protocol"),
        });
    }

    // TM: epsilon = 1/(4n) pins n; delta is likewise restricted.
    let tm_n = (1.0 / (4.0 * epsilon)).ceil().max(1.0) as u64;
    let tm_total = tm_samples(tm_n)?;
    rows.push(ProtocolCost {
        name: ProtocolName::Tm,
        tests: tm_total,
        accept_log10: f64::NAN,
        repetitions: ExtNat::from_u64(1),
        total: tm_total,
        note: format!("n = {tm_n} pinned by epsilon; acceptance not analyzed"),
    });

    // This work: robust by construction, a single repetition suffices.
    let plan = adversarial::plan_min_tests(epsilon, delta, strategy, r)?;
    let this_tests = ExtNat::from_u64(plan.n_min);
    rows.push(ProtocolCost {
        name: ProtocolName::This,
        tests: this_tests,
        accept_log10: plan.accept_prob_at_r.log10(),
        repetitions: ExtNat::from_u64(1),
        total: this_tests,
        note: format!("k_min = {}", plan.k_min),
    });

    Ok(rows)
}

/// i.i.d. planner row used by figure data; grouped here because the
/// comparison concerns protocol economics, not the planner math.
pub fn iid_total(epsilon: f64, delta: f64, strategy: Strategy, r: f64) -> Result<u64> {
    Ok(iid::plan_min_tests_iid(epsilon, delta, strategy, r)?.n_min)
}
