//! Seeded Monte Carlo runs of the verification protocol.
//!
//! A test draw picks the trivial stabilizer with probability `1 - p` and a
//! uniform label otherwise, then samples the joint outcome of the commuting
//! site observables from the state's probability weights in their common
//! eigenbasis. Trials use counter-based RNG streams derived from the master
//! seed, so any trial reproduces in isolation and batches parallelize
//! deterministically.

use crate::adversarial::{MixtureSpec, Strategy};
use crate::error::{Error, Result};
use crate::sim::graph::GraphSpec;
use crate::sim::pauli::{site_observables, stabilizer_element, SiteBasis};
use crate::sim::state::{mixing_weight, QuantumState};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;

/// Hard cap on total sampled tests per run.
pub const TEST_BUDGET_CAP: u64 = 200_000_000;

/// One sampled stabilizer test: the label drawn, the per-site outcome digits,
/// and whether they summed to zero mod `d`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TestRecord {
    pub k_vec: Vec<u32>,
    pub outcomes: Vec<u32>,
    pub passed: bool,
}

/// Per-trial summary of a protocol run.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct TrialRecord {
    pub failures: u64,
    pub accepted: bool,
}

/// Aggregate of an i.i.d. protocol run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IidRunReport {
    pub trials: u64,
    pub accepted: u64,
    pub acceptance_frequency: f64,
    pub records: Vec<TrialRecord>,
}

/// Aggregate of a mixture-adversary protocol run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MixtureRunReport {
    pub trials: u64,
    pub accepted: u64,
    pub acceptance_frequency: f64,
    /// Fraction of accepting trials whose unmeasured slot was bad; `None`
    /// when no trial accepted.
    pub bad_remainder_given_accept: Option<f64>,
}

/// Cached per-label outcome distributions for one state, reused across tests.
pub struct TestSampler<'a> {
    spec: &'a GraphSpec,
    state: &'a QuantumState,
    p_nontrivial: f64,
    cache: HashMap<Vec<u32>, OutcomeTable>,
}

struct OutcomeTable {
    /// Cumulative joint probabilities over eigenvector indices.
    cumulative: Vec<f64>,
    /// Outcome digits per site for each joint index.
    labels: Vec<Vec<u32>>,
}

impl<'a> TestSampler<'a> {
    pub fn new(spec: &'a GraphSpec, strategy: Strategy, state: &'a QuantumState) -> Result<Self> {
        if state.d() != spec.d() || state.n() != spec.n() {
            return Err(Error::domain("state and graph shapes do not match".to_string()));
        }
        let p_nontrivial = mixing_weight(spec.d(), strategy.lambda())?;
        Ok(TestSampler { spec, state, p_nontrivial, cache: HashMap::new() })
    }

    /// Draws a test label (trivial with probability `1 - p`) and samples the
    /// joint outcome on the cached distribution for that label.
    pub fn sample(&mut self, rng: &mut impl Rng) -> Result<TestRecord> {
        let d = self.spec.d();
        let n = self.spec.n();
        let mut k_vec = vec![0u32; n];
        if rng.gen::<f64>() < self.p_nontrivial {
            for digit in k_vec.iter_mut() {
                *digit = rng.gen_range(0..d);
            }
        }
        self.sample_label(&k_vec, rng)
    }

    /// Samples outcomes for a fixed label.
    pub fn sample_label(&mut self, k_vec: &[u32], rng: &mut impl Rng) -> Result<TestRecord> {
        let d = self.spec.d();
        if !self.cache.contains_key(k_vec) {
            let table = build_outcome_table(self.spec, self.state, k_vec)?;
            self.cache.insert(k_vec.to_vec(), table);
        }
        let table = &self.cache[k_vec];
        let u: f64 = rng.gen();
        let idx = match table.cumulative.binary_search_by(|c| c.partial_cmp(&u).unwrap()) {
            Ok(i) => i + 1,
            Err(i) => i,
        }
        .min(table.cumulative.len() - 1);
        let outcomes = table.labels[idx].clone();
        let digit_sum: u32 = outcomes.iter().sum();
        Ok(TestRecord {
            k_vec: k_vec.to_vec(),
            outcomes,
            passed: digit_sum % d == 0,
        })
    }
}

fn build_outcome_table(
    spec: &GraphSpec,
    state: &QuantumState,
    k_vec: &[u32],
) -> Result<OutcomeTable> {
    let g = stabilizer_element(spec, k_vec)?;
    let bases = site_observables(&g)?;
    let probs = joint_probabilities(state, &bases)?;
    let d = spec.d() as usize;
    let n = spec.n();
    let dim = probs.len();

    let mut labels = Vec::with_capacity(dim);
    for idx in 0..dim {
        let mut digits = Vec::with_capacity(n);
        let mut rem = idx;
        let mut stride = d.pow((n - 1) as u32);
        for basis in bases.iter() {
            let col = rem / stride;
            rem %= stride;
            digits.push(basis.labels[col]);
            stride = (stride / d).max(1);
        }
        labels.push(digits);
    }
    let mut cumulative = Vec::with_capacity(dim);
    let mut acc = 0.0;
    for p in probs {
        acc += p;
        cumulative.push(acc);
    }
    // Normalize away rounding so the final entry is exactly 1.
    let total = *cumulative.last().expect("nonempty distribution");
    for c in cumulative.iter_mut() {
        *c /= total;
    }
    Ok(OutcomeTable { cumulative, labels })
}

/// Probability of each joint eigenvector (site 0 most significant) under the
/// state: `|<v|psi>|^2`, or `<v|rho|v>` for mixed states.
fn joint_probabilities(state: &QuantumState, bases: &[SiteBasis]) -> Result<Vec<f64>> {
    let d = state.d() as usize;
    let n = state.n();
    let dim = state.dimension();
    if let Some(psi) = state.amplitudes() {
        // Transform site by site with U_i^dagger.
        let mut v: Vec<Complex64> = psi.iter().copied().collect();
        for (site, basis) in bases.iter().enumerate() {
            let u = &basis.vectors;
            let stride = d.pow((n - 1 - site) as u32);
            let block = stride * d;
            let mut scratch = vec![Complex64::new(0.0, 0.0); d];
            for base in (0..dim).step_by(block) {
                for offset in 0..stride {
                    for (s, slot) in scratch.iter_mut().enumerate() {
                        *slot = v[base + offset + s * stride];
                    }
                    for row in 0..d {
                        let mut acc = Complex64::new(0.0, 0.0);
                        for (s, &amp) in scratch.iter().enumerate() {
                            // (U^dagger)_{row, s} = conj(U_{s, row})
                            acc += u[(s, row)].conj() * amp;
                        }
                        v[base + offset + row * stride] = acc;
                    }
                }
            }
        }
        return Ok(v.into_iter().map(|c| c.norm_sqr()).collect());
    }

    let rho = state.density().expect("state is pure or mixed");
    // Dense joint transform; mixed states are capped to small dimensions.
    let mut q = nalgebra::DMatrix::from_element(1, 1, Complex64::new(1.0, 0.0));
    for basis in bases {
        q = q.kronecker(&basis.vectors);
    }
    let transformed = q.adjoint() * rho * q;
    Ok((0..dim).map(|i| transformed[(i, i)].re.max(0.0)).collect())
}

/// Draws one stabilizer test on the state: trivial with probability `1 - p`,
/// otherwise uniform over all `d^n` labels.
pub fn sample_test(
    state: &QuantumState,
    spec: &GraphSpec,
    strategy: Strategy,
    rng: &mut impl Rng,
) -> Result<TestRecord> {
    TestSampler::new(spec, strategy, state)?.sample(rng)
}

/// RNG stream for one trial: same cipher keyed by the master seed, stream
/// index set to the trial number.
fn trial_rng(seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}

/// Runs `trials` independent protocol executions against i.i.d. copies of
/// `tau`: each trial samples `n_tests` tests and accepts at up to `k`
/// failures. The acceptance frequency estimates `B_{N,k}(nu eps_tau)`.
pub fn run_protocol_iid(
    spec: &GraphSpec,
    strategy: Strategy,
    tau: &QuantumState,
    n_tests: u64,
    k: u64,
    trials: u64,
    seed: u64,
) -> Result<IidRunReport> {
    if trials == 0 {
        return Err(Error::domain("at least one trial is required".to_string()));
    }
    if n_tests == 0 || k + 1 > n_tests {
        return Err(Error::domain(format!(
            "requires 1 <= k+1 <= N, got k={k}, N={n_tests}"
        )));
    }
    if trials.saturating_mul(n_tests) > TEST_BUDGET_CAP {
        return Err(Error::resource(format!(
            "trials*N = {} exceeds the test budget {TEST_BUDGET_CAP}",
            trials.saturating_mul(n_tests)
        )));
    }
    // Precompute outcome tables for every label once, then share them.
    let mut sampler = TestSampler::new(spec, strategy, tau)?;
    let d = spec.d();
    let n = spec.n();
    let label_count = spec.dimension() as u64;
    {
        let mut k_vec = vec![0u32; n];
        for code in 0..label_count {
            let mut c = code;
            for digit in k_vec.iter_mut().rev() {
                *digit = (c % d as u64) as u32;
                c /= d as u64;
            }
            sampler.sample_label(&k_vec, &mut trial_rng(seed, u64::MAX))?;
        }
    }
    let sampler = &sampler;

    let records: Vec<TrialRecord> = (0..trials)
        .into_par_iter()
        .map(|trial| {
            let mut rng = trial_rng(seed, trial);
            let mut failures = 0u64;
            for _ in 0..n_tests {
                // Redo the label draw inline against the shared cache.
                let mut k_vec = vec![0u32; n];
                if rng.gen::<f64>() < sampler.p_nontrivial {
                    for digit in k_vec.iter_mut() {
                        *digit = rng.gen_range(0..d);
                    }
                }
                let table = &sampler.cache[&k_vec];
                let u: f64 = rng.gen();
                let idx = match table
                    .cumulative
                    .binary_search_by(|c| c.partial_cmp(&u).unwrap())
                {
                    Ok(i) => i + 1,
                    Err(i) => i,
                }
                .min(table.cumulative.len() - 1);
                let digit_sum: u32 = table.labels[idx].iter().sum();
                if digit_sum % d != 0 {
                    failures += 1;
                }
            }
            TrialRecord { failures, accepted: failures <= k }
        })
        .collect();

    let accepted = records.iter().filter(|r| r.accepted).count() as u64;
    Ok(IidRunReport {
        trials,
        accepted,
        acceptance_frequency: accepted as f64 / trials as f64,
        records,
    })
}

/// Runs the classical reduction of the adversarial protocol: each trial draws
/// a bad-subsystem count from the mixture, scatters the bad labels uniformly
/// over `N + 1` slots, passes each tested bad slot with probability `lambda`,
/// and accepts at up to `k` failures. Reports the acceptance rate and the
/// conditional rate of a bad unmeasured slot.
pub fn run_protocol_mixture(
    mixture: &MixtureSpec,
    strategy: Strategy,
    n_tests: u64,
    k: u64,
    trials: u64,
    seed: u64,
) -> Result<MixtureRunReport> {
    if trials == 0 {
        return Err(Error::domain("at least one trial is required".to_string()));
    }
    if n_tests == 0 || k + 1 > n_tests {
        return Err(Error::domain(format!(
            "requires 1 <= k+1 <= N, got k={k}, N={n_tests}"
        )));
    }
    if mixture.max_support() > n_tests + 1 {
        return Err(Error::domain(format!(
            "mixture support {} exceeds N+1={}",
            mixture.max_support(),
            n_tests + 1
        )));
    }
    if trials.saturating_mul(n_tests) > TEST_BUDGET_CAP {
        return Err(Error::resource(format!(
            "trials*N = {} exceeds the test budget {TEST_BUDGET_CAP}",
            trials.saturating_mul(n_tests)
        )));
    }
    let lambda = strategy.lambda();
    let weights = mixture.weights().to_vec();
    let slots = (n_tests + 1) as usize;

    let outcomes: Vec<(bool, bool)> = (0..trials)
        .into_par_iter()
        .map(|trial| {
            let mut rng = trial_rng(seed, trial);
            // Draw z from the mixture.
            let mut u: f64 = rng.gen();
            let mut z = weights.last().map(|&(z, _)| z).unwrap_or(0);
            for &(zi, w) in &weights {
                if u < w {
                    z = zi;
                    break;
                }
                u -= w;
            }
            // Scatter z bad labels uniformly: partial Fisher-Yates over slots.
            let mut slot_ids: Vec<u32> = (0..slots as u32).collect();
            for i in 0..(z as usize).min(slots) {
                let j = rng.gen_range(i..slots);
                slot_ids.swap(i, j);
            }
            let bad_remainder = slot_ids[..(z as usize).min(slots)]
                .iter()
                .any(|&s| s as u64 == n_tests);
            let mut failures = 0u64;
            for &s in &slot_ids[..(z as usize).min(slots)] {
                if (s as u64) < n_tests && rng.gen::<f64>() >= lambda {
                    failures += 1;
                }
            }
            (failures <= k, bad_remainder)
        })
        .collect();

    let accepted = outcomes.iter().filter(|&&(a, _)| a).count() as u64;
    let bad_given_accept = if accepted > 0 {
        let bad = outcomes.iter().filter(|&&(a, b)| a && b).count() as u64;
        Some(bad as f64 / accepted as f64)
    } else {
        None
    };
    Ok(MixtureRunReport {
        trials,
        accepted,
        acceptance_frequency: accepted as f64 / trials as f64,
        bad_remainder_given_accept: bad_given_accept,
    })
}
