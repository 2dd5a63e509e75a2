//! Dense qudit states, graph-state construction, verification operators, and
//! the noise models used to dial in a target infidelity.

use crate::error::{Error, Result};
use crate::sim::graph::{GraphSpec, DIM_CAP};
use crate::sim::pauli::{stabilizer_element, PauliString, OPERATOR_DIM_CAP};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use std::f64::consts::PI;

/// Density matrices are only materialized below this dimension.
pub const MIXED_DIM_CAP: usize = 1 << 10;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

#[derive(Debug, Clone)]
enum Repr {
    Pure(DVector<Complex64>),
    Mixed(DMatrix<Complex64>),
}

/// A dense pure or mixed state over `n` qudits of dimension `d`.
#[derive(Debug, Clone)]
pub struct QuantumState {
    d: u32,
    n: usize,
    repr: Repr,
}

impl QuantumState {
    pub fn pure_from_amplitudes(d: u32, n: usize, amplitudes: Vec<Complex64>) -> Result<Self> {
        let dim = (d as usize).checked_pow(n as u32).unwrap_or(usize::MAX);
        if dim > DIM_CAP {
            return Err(Error::resource(format!("dimension {dim} exceeds cap {DIM_CAP}")));
        }
        if amplitudes.len() != dim {
            return Err(Error::domain(format!(
                "amplitude count {} does not match dimension {dim}",
                amplitudes.len()
            )));
        }
        let v = DVector::from_vec(amplitudes);
        let norm = v.norm();
        if (norm - 1.0).abs() > 1e-10 {
            return Err(Error::domain(format!("state norm {norm} deviates from 1")));
        }
        Ok(QuantumState { d, n, repr: Repr::Pure(v) })
    }

    pub fn mixed_from_density(d: u32, n: usize, density: DMatrix<Complex64>) -> Result<Self> {
        let dim = (d as usize).checked_pow(n as u32).unwrap_or(usize::MAX);
        if dim > MIXED_DIM_CAP {
            return Err(Error::resource(format!(
                "density dimension {dim} exceeds cap {MIXED_DIM_CAP}"
            )));
        }
        if density.nrows() != dim || density.ncols() != dim {
            return Err(Error::domain("density matrix has the wrong shape".to_string()));
        }
        if (&density - density.adjoint()).norm() > 1e-10 {
            return Err(Error::domain("density matrix is not Hermitian".to_string()));
        }
        let trace = density.trace();
        if (trace.re - 1.0).abs() > 1e-10 || trace.im.abs() > 1e-10 {
            return Err(Error::domain(format!("density trace {trace} deviates from 1")));
        }
        let eigs = density.clone().symmetric_eigenvalues();
        if eigs.iter().any(|&e| e < -1e-10) {
            return Err(Error::domain("density matrix has a negative eigenvalue".to_string()));
        }
        Ok(QuantumState { d, n, repr: Repr::Mixed(density) })
    }

    pub fn d(&self) -> u32 {
        self.d
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dimension(&self) -> usize {
        (self.d as usize).pow(self.n as u32)
    }

    pub fn is_pure(&self) -> bool {
        matches!(self.repr, Repr::Pure(_))
    }

    pub fn amplitudes(&self) -> Option<&DVector<Complex64>> {
        match &self.repr {
            Repr::Pure(v) => Some(v),
            Repr::Mixed(_) => None,
        }
    }

    pub fn density(&self) -> Option<&DMatrix<Complex64>> {
        match &self.repr {
            Repr::Mixed(m) => Some(m),
            Repr::Pure(_) => None,
        }
    }

    /// Density-matrix view, materializing `|psi><psi|` for pure states.
    pub fn to_density(&self) -> Result<DMatrix<Complex64>> {
        match &self.repr {
            Repr::Mixed(m) => Ok(m.clone()),
            Repr::Pure(v) => {
                if v.len() > MIXED_DIM_CAP {
                    return Err(Error::resource(format!(
                        "projector dimension {} exceeds cap {MIXED_DIM_CAP}",
                        v.len()
                    )));
                }
                Ok(v * v.adjoint())
            }
        }
    }

    /// Overlap `<psi|state|psi>` with a pure reference vector.
    pub fn overlap_with(&self, psi: &DVector<Complex64>) -> Result<f64> {
        if psi.len() != self.dimension() {
            return Err(Error::domain("reference vector dimension mismatch".to_string()));
        }
        Ok(match &self.repr {
            Repr::Pure(v) => psi.dotc(v).norm_sqr(),
            Repr::Mixed(m) => (psi.adjoint() * m * psi)[(0, 0)].re,
        })
    }

    /// Amplitudes (pure) or row-major density entries (mixed) as `(re, im)`
    /// pairs in JSON, for debugging dumps.
    pub fn to_json(&self) -> String {
        let pairs: Vec<[f64; 2]> = match &self.repr {
            Repr::Pure(v) => v.iter().map(|c| [c.re, c.im]).collect(),
            Repr::Mixed(m) => m.transpose().iter().map(|c| [c.re, c.im]).collect(),
        };
        serde_json::to_string(&pairs).expect("serializing f64 pairs cannot fail")
    }
}

/// Builds the graph state: `|+>^n` with `m_e` controlled-phase layers applied
/// along every edge `e`. Site 0 is the most significant digit of the basis
/// index.
pub fn build_graph_state(spec: &GraphSpec) -> Result<QuantumState> {
    let d = spec.d();
    let n = spec.n();
    let dim = spec.dimension();
    let amp = Complex64::new(1.0 / (dim as f64).sqrt(), 0.0);
    let mut v = vec![amp; dim];
    let ds = d as usize;
    let stride = |site: usize| ds.pow((n - 1 - site) as u32);
    for &(a, b, m) in spec.edges() {
        if m == 0 {
            continue;
        }
        let (sa, sb) = (stride(a), stride(b));
        for (idx, value) in v.iter_mut().enumerate() {
            let da = (idx / sa) % ds;
            let db = (idx / sb) % ds;
            let e = (m as usize * da * db) % ds;
            *value *= Complex64::from_polar(1.0, 2.0 * PI * e as f64 / d as f64);
        }
    }
    QuantumState::pure_from_amplitudes(d, n, v)
}

/// Projector onto the eigenvalue-1 eigenspace of the stabilizer element
/// `g_k`: the average of its powers `g_k^j / d` over `j` in `Z_d`.
pub fn test_projector(spec: &GraphSpec, k_vec: &[u32]) -> Result<DMatrix<Complex64>> {
    let dim = spec.dimension();
    if dim > OPERATOR_DIM_CAP {
        return Err(Error::resource(format!(
            "dense projector of dimension {dim} exceeds cap {OPERATOR_DIM_CAP}"
        )));
    }
    let g = stabilizer_element(spec, k_vec)?;
    let mut acc = DMatrix::identity(dim, dim).map(|x: f64| Complex64::new(x, 0.0));
    let mut power = PauliString::identity(spec.d(), spec.n());
    for _ in 1..spec.d() {
        power = power.mul(&g)?;
        acc += power.matrix()?;
    }
    Ok(acc / Complex64::new(spec.d() as f64, 0.0))
}

/// Verification operator in its spectral form: eigenvalue 1 on the graph
/// state and `lambda` on its orthocomplement.
pub fn strategy_operator(spec: &GraphSpec, lambda: f64) -> Result<DMatrix<Complex64>> {
    if !(0.0..1.0).contains(&lambda) {
        return Err(Error::domain(format!("lambda must lie in [0, 1), got {lambda}")));
    }
    let dim = spec.dimension();
    if dim > OPERATOR_DIM_CAP {
        return Err(Error::resource(format!(
            "dense operator of dimension {dim} exceeds cap {OPERATOR_DIM_CAP}"
        )));
    }
    let g = build_graph_state(spec)?;
    let v = g.amplitudes().expect("graph state is pure");
    let proj = v * v.adjoint();
    let eye = DMatrix::identity(dim, dim).map(|x: f64| Complex64::new(x, 0.0));
    Ok(&proj + (eye - &proj) * Complex64::new(lambda, 0.0))
}

/// Verification operator built operationally: the uniform average of all
/// `d^n` test projectors mixed with the trivial test at weight `1 - p`,
/// `p = d(1-lambda)/(d-1)`. Requires `lambda >= 1/d` so `p <= 1`.
pub fn strategy_operator_mixing(spec: &GraphSpec, lambda: f64) -> Result<DMatrix<Complex64>> {
    let d = spec.d();
    let p = mixing_weight(d, lambda)?;
    let dim = spec.dimension();
    if dim > OPERATOR_DIM_CAP {
        return Err(Error::resource(format!(
            "dense operator of dimension {dim} exceeds cap {OPERATOR_DIM_CAP}"
        )));
    }
    let n = spec.n();
    let total = dim as u64; // d^n labels
    let mut avg = DMatrix::from_element(dim, dim, ZERO);
    let mut k_vec = vec![0u32; n];
    for code in 0..total {
        let mut c = code;
        for digit in k_vec.iter_mut().rev() {
            *digit = (c % d as u64) as u32;
            c /= d as u64;
        }
        avg += test_projector(spec, &k_vec)?;
    }
    avg /= Complex64::new(total as f64, 0.0);
    let eye = DMatrix::identity(dim, dim).map(|x: f64| Complex64::new(x, 0.0));
    Ok(avg * Complex64::new(p, 0.0) + eye * Complex64::new(1.0 - p, 0.0))
}

/// Probability weight of the nontrivial test draw: `p = d(1-lambda)/(d-1)`.
pub fn mixing_weight(d: u32, lambda: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&lambda) {
        return Err(Error::domain(format!("lambda must lie in [0, 1), got {lambda}")));
    }
    let p = d as f64 * (1.0 - lambda) / (d as f64 - 1.0);
    if p > 1.0 + 1e-12 {
        return Err(Error::domain(format!(
            "lambda = {lambda} below 1/d = {}; the test-mixing construction needs p <= 1",
            1.0 / d as f64
        )));
    }
    Ok(p.min(1.0))
}

/// Probability that `state` passes the stabilizer test labeled `k_vec`:
/// `tr(P_k rho)`, evaluated through the powers of `g_k` so no dense projector
/// is materialized.
pub fn pass_probability(state: &QuantumState, spec: &GraphSpec, k_vec: &[u32]) -> Result<f64> {
    if state.d() != spec.d() || state.n() != spec.n() {
        return Err(Error::domain("state and graph shapes do not match".to_string()));
    }
    let g = stabilizer_element(spec, k_vec)?;
    let d = spec.d();
    let mut acc = 1.0; // j = 0 term contributes tr(rho) = 1
    let mut power = PauliString::identity(d, spec.n());
    for _ in 1..d {
        power = power.mul(&g)?;
        let val = match &state.repr {
            Repr::Pure(v) => {
                let gv = power.apply(v)?;
                v.dotc(&gv)
            }
            Repr::Mixed(m) => power.trace_with(m)?,
        };
        acc += val.re;
    }
    Ok((acc / d as f64).clamp(0.0, 1.0))
}

/// Global depolarizing channel: `(1-s) rho + s I/d^n`. Returns a mixed state.
pub fn apply_depolarizing(state: &QuantumState, strength: f64) -> Result<QuantumState> {
    if !(0.0..=1.0).contains(&strength) {
        return Err(Error::domain(format!("strength must lie in [0, 1], got {strength}")));
    }
    if strength == 0.0 {
        return Ok(state.clone());
    }
    let dim = state.dimension();
    let mut rho = state.to_density()? * Complex64::new(1.0 - strength, 0.0);
    let fill = Complex64::new(strength / dim as f64, 0.0);
    for i in 0..dim {
        rho[(i, i)] += fill;
    }
    QuantumState::mixed_from_density(state.d(), state.n(), rho)
}

/// Single-site dephasing: with probability `s` the site is hit by a uniform
/// nonidentity `Z` power.
pub fn apply_site_dephasing(state: &QuantumState, site: usize, strength: f64) -> Result<QuantumState> {
    if site >= state.n() {
        return Err(Error::domain(format!("site {site} outside 0..{}", state.n())));
    }
    if !(0.0..=1.0).contains(&strength) {
        return Err(Error::domain(format!("strength must lie in [0, 1], got {strength}")));
    }
    let d = state.d();
    let n = state.n();
    let rho = state.to_density()?;
    let mut out = rho.clone() * Complex64::new(1.0 - strength, 0.0);
    let share = Complex64::new(strength / (d as f64 - 1.0), 0.0);
    for zpow in 1..d {
        let mut z = vec![0u32; n];
        z[site] = zpow;
        let op = PauliString::new(d, vec![0; n], z, 0)?;
        let m = op_on_density(&op, &rho)?;
        out += m * share;
    }
    QuantumState::mixed_from_density(d, n, out)
}

/// Coherent single-site rotation `diag(exp(i theta j))`, a unitary error.
pub fn apply_site_rotation(state: &QuantumState, site: usize, theta: f64) -> Result<QuantumState> {
    if site >= state.n() {
        return Err(Error::domain(format!("site {site} outside 0..{}", state.n())));
    }
    let d = state.d() as usize;
    let n = state.n();
    let stride = d.pow((n - 1 - site) as u32);
    let phase = |idx: usize| {
        let digit = (idx / stride) % d;
        Complex64::from_polar(1.0, theta * digit as f64)
    };
    match &state.repr {
        Repr::Pure(v) => {
            let rotated: Vec<Complex64> =
                v.iter().enumerate().map(|(i, c)| phase(i) * c).collect();
            QuantumState::pure_from_amplitudes(state.d(), n, rotated)
        }
        Repr::Mixed(m) => {
            let dim = state.dimension();
            let mut out = m.clone();
            for r in 0..dim {
                for c in 0..dim {
                    out[(r, c)] *= phase(r) * phase(c).conj();
                }
            }
            QuantumState::mixed_from_density(state.d(), n, out)
        }
    }
}

fn op_on_density(op: &PauliString, rho: &DMatrix<Complex64>) -> Result<DMatrix<Complex64>> {
    // op rho op^dagger through the generalized-permutation structure.
    let dim = rho.nrows();
    let mut out = DMatrix::from_element(dim, dim, ZERO);
    let actions: Vec<(usize, Complex64)> = (0..dim).map(|i| op.column_action(i)).collect();
    for r in 0..dim {
        let (tr, cr) = actions[r];
        for c in 0..dim {
            let (tc, cc) = actions[c];
            out[(tr, tc)] += cr * cc.conj() * rho[(r, c)];
        }
    }
    Ok(out)
}

/// Infidelity `1 - <G| state |G>` against the ideal graph state.
pub fn infidelity(state: &QuantumState, spec: &GraphSpec) -> Result<f64> {
    let g = build_graph_state(spec)?;
    let overlap = state.overlap_with(g.amplitudes().expect("graph state is pure"))?;
    Ok((1.0 - overlap).clamp(0.0, 1.0))
}

/// Depolarized graph state whose infidelity equals `target_eps` exactly:
/// the channel strength solves `s (1 - 1/d^n) = target_eps` in closed form.
pub fn calibrate_noise(spec: &GraphSpec, target_eps: f64) -> Result<QuantumState> {
    let dim = spec.dimension() as f64;
    let reach = 1.0 - 1.0 / dim;
    if !(0.0..1.0).contains(&target_eps) || target_eps >= reach {
        return Err(Error::domain(format!(
            "target infidelity must lie in [0, {reach}), got {target_eps}"
        )));
    }
    let g = build_graph_state(spec)?;
    apply_depolarizing(&g, target_eps / reach)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::pauli::stabilizer_generator;

    #[test]
    fn bare_plus_state() {
        let spec = GraphSpec::new(2, 1, vec![]).unwrap();
        let g = build_graph_state(&spec).unwrap();
        let v = g.amplitudes().unwrap();
        let inv = 1.0 / 2f64.sqrt();
        assert!((v[0].re - inv).abs() < 1e-15 && (v[1].re - inv).abs() < 1e-15);
    }

    #[test]
    fn two_qubit_graph_state() {
        let spec = GraphSpec::new(2, 2, vec![(0, 1, 1)]).unwrap();
        let g = build_graph_state(&spec).unwrap();
        let v = g.amplitudes().unwrap();
        let expect = [0.5, 0.5, 0.5, -0.5];
        for (a, e) in v.iter().zip(expect) {
            assert!((a.re - e).abs() < 1e-14 && a.im.abs() < 1e-14);
        }
    }

    #[test]
    fn stabilizers_fix_graph_state() {
        for spec in [GraphSpec::triangle(3).unwrap(), GraphSpec::linear_cluster(2, 4).unwrap()] {
            let g = build_graph_state(&spec).unwrap();
            let v = g.amplitudes().unwrap();
            for i in 0..spec.n() {
                let s = stabilizer_generator(&spec, i).unwrap();
                let sv = s.apply(v).unwrap();
                assert!((sv - v).norm() < 1e-12, "stabilizer {i} moved the state");
            }
        }
    }

    #[test]
    fn projector_properties() {
        let spec = GraphSpec::triangle(3).unwrap();
        let p = test_projector(&spec, &[1, 0, 2]).unwrap();
        // Idempotent and of trace d^{n-1}.
        assert!(((&p * &p) - &p).norm() < 1e-10);
        assert!((p.trace().re - 9.0).abs() < 1e-9);
        // Trivial test is the identity.
        let triv = test_projector(&spec, &[0, 0, 0]).unwrap();
        let eye = DMatrix::identity(27, 27).map(|x: f64| Complex64::new(x, 0.0));
        assert!((triv - eye).norm() < 1e-12);
    }

    #[test]
    fn projector_fixes_graph_state() {
        let spec = GraphSpec::linear_cluster(2, 3).unwrap();
        let g = build_graph_state(&spec).unwrap();
        let v = g.amplitudes().unwrap();
        let p = test_projector(&spec, &[1, 1, 0]).unwrap();
        assert!((&p * v - v).norm() < 1e-12);
    }

    #[test]
    fn strategy_routes_agree() {
        // Mixing route equals the spectral form wherever p <= 1.
        let spec = GraphSpec::new(2, 2, vec![(0, 1, 1)]).unwrap();
        for lambda in [0.5, 0.6, 0.75] {
            let direct = strategy_operator(&spec, lambda).unwrap();
            let mixed = strategy_operator_mixing(&spec, lambda).unwrap();
            assert!((direct - mixed).norm() < 1e-10, "mismatch at lambda={lambda}");
        }
        assert!(strategy_operator_mixing(&spec, 0.2).is_err()); // p > 1
    }

    #[test]
    fn uniform_projector_average_has_gap_one_over_d() {
        // With p = 1 the mixing route is the bare projector average, whose
        // spectrum is {1, 1/d}.
        let spec = GraphSpec::triangle(3).unwrap();
        let lambda = 1.0 / 3.0;
        let avg = strategy_operator_mixing(&spec, lambda).unwrap();
        let direct = strategy_operator(&spec, lambda).unwrap();
        assert!((avg - direct).norm() < 1e-10);
    }

    #[test]
    fn pass_probability_cases() {
        let spec = GraphSpec::triangle(3).unwrap();
        let g = build_graph_state(&spec).unwrap();
        assert!((pass_probability(&g, &spec, &[2, 1, 0]).unwrap() - 1.0).abs() < 1e-12);

        // Maximally mixed state passes a nontrivial test with probability 1/d.
        let dim = spec.dimension();
        let eye = DMatrix::identity(dim, dim).map(|x: f64| Complex64::new(x / dim as f64, 0.0));
        let mixed = QuantumState::mixed_from_density(3, 3, eye).unwrap();
        assert!((pass_probability(&mixed, &spec, &[1, 1, 1]).unwrap() - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn depolarizing_affine_in_strength() {
        let spec = GraphSpec::linear_cluster(2, 3).unwrap();
        let g = build_graph_state(&spec).unwrap();
        let k = [1u32, 0, 1];
        let p0 = pass_probability(&g, &spec, &k).unwrap();
        let p_mix = 1.0 / 2.0; // nontrivial test on the maximally mixed state
        for s in [0.1, 0.5, 0.9] {
            let noisy = apply_depolarizing(&g, s).unwrap();
            let p = pass_probability(&noisy, &spec, &k).unwrap();
            assert!((p - ((1.0 - s) * p0 + s * p_mix)).abs() < 1e-12);
        }
    }

    #[test]
    fn depolarizing_extremes() {
        let spec = GraphSpec::linear_cluster(2, 3).unwrap();
        let g = build_graph_state(&spec).unwrap();
        assert!(apply_depolarizing(&g, 0.0).unwrap().is_pure());
        let full = apply_depolarizing(&g, 1.0).unwrap();
        assert!((infidelity(&full, &spec).unwrap() - (1.0 - 1.0 / 8.0)).abs() < 1e-12);
    }

    #[test]
    fn calibrated_noise_hits_target() {
        let spec = GraphSpec::linear_cluster(2, 3).unwrap();
        for eps in [0.0, 0.05, 0.3] {
            let state = calibrate_noise(&spec, eps).unwrap();
            assert!((infidelity(&state, &spec).unwrap() - eps).abs() < 1e-12);
        }
        assert!(calibrate_noise(&spec, 0.95).is_err()); // beyond reach
    }

    #[test]
    fn dephasing_and_rotation_report_through_infidelity() {
        let spec = GraphSpec::linear_cluster(2, 3).unwrap();
        let g = build_graph_state(&spec).unwrap();
        let dephased = apply_site_dephasing(&g, 1, 0.2).unwrap();
        let e1 = infidelity(&dephased, &spec).unwrap();
        assert!(e1 > 0.0 && e1 < 0.2 + 1e-12);
        let rotated = apply_site_rotation(&g, 0, 0.3).unwrap();
        assert!(rotated.is_pure());
        let e2 = infidelity(&rotated, &spec).unwrap();
        assert!(e2 > 0.0 && e2 < 0.1);
        // Trace and Hermiticity preserved by the channels.
        let rho = dephased.density().unwrap();
        assert!((rho.trace().re - 1.0).abs() < 1e-10);
        assert!((rho - rho.adjoint()).norm() < 1e-10);
    }

    #[test]
    fn state_validation() {
        assert!(QuantumState::pure_from_amplitudes(
            2,
            1,
            vec![Complex64::new(0.9, 0.0), Complex64::new(0.1, 0.0)]
        )
        .is_err());
        let bad = DMatrix::from_diagonal(&DVector::from_vec(vec![
            Complex64::new(1.5, 0.0),
            Complex64::new(-0.5, 0.0),
        ]));
        assert!(QuantumState::mixed_from_density(2, 1, bad).is_err());
    }

    #[test]
    fn json_export_shape() {
        let spec = GraphSpec::new(2, 1, vec![]).unwrap();
        let g = build_graph_state(&spec).unwrap();
        let parsed: Vec<[f64; 2]> = serde_json::from_str(&g.to_json()).unwrap();
        assert_eq!(parsed.len(), 2);
    }
}
