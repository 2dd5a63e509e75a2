//! Generalized Pauli strings in symplectic form, stabilizer elements of graph
//! states, and the per-site eigenbases used to sample measurement outcomes.

use crate::error::{Error, Result};
use crate::sim::graph::GraphSpec;
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Dense operators are only materialized below this dimension.
pub const OPERATOR_DIM_CAP: usize = 1 << 10;

fn omega_pow(d: u32, e: i64) -> Complex64 {
    let e = e.rem_euclid(d as i64);
    Complex64::from_polar(1.0, 2.0 * PI * e as f64 / d as f64)
}

/// `omega^{phase} * tensor_i X_i^{x_i} Z_i^{z_i}` over `n` qudits of prime
/// dimension `d`.
///
/// Products of graph-state stabilizer generators stay inside this phase
/// convention: exponent reduction is phase free because `X^d = Z^d = 1`
/// exactly, and reordering only produces `omega` powers.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PauliString {
    d: u32,
    x_exps: Vec<u32>,
    z_exps: Vec<u32>,
    phase_exp: u32,
}

impl PauliString {
    pub fn new(d: u32, x_exps: Vec<u32>, z_exps: Vec<u32>, phase_exp: u32) -> Result<Self> {
        if x_exps.len() != z_exps.len() {
            return Err(Error::domain("x/z exponent vectors differ in length".to_string()));
        }
        if x_exps.iter().chain(&z_exps).any(|&e| e >= d) || phase_exp >= d {
            return Err(Error::domain(format!("exponents must be residues mod {d}")));
        }
        Ok(PauliString { d, x_exps, z_exps, phase_exp })
    }

    pub fn identity(d: u32, n: usize) -> Self {
        PauliString { d, x_exps: vec![0; n], z_exps: vec![0; n], phase_exp: 0 }
    }

    pub fn d(&self) -> u32 {
        self.d
    }

    pub fn n(&self) -> usize {
        self.x_exps.len()
    }

    pub fn x_exps(&self) -> &[u32] {
        &self.x_exps
    }

    pub fn z_exps(&self) -> &[u32] {
        &self.z_exps
    }

    pub fn phase_exp(&self) -> u32 {
        self.phase_exp
    }

    pub fn is_identity_string(&self) -> bool {
        self.x_exps.iter().all(|&e| e == 0) && self.z_exps.iter().all(|&e| e == 0)
    }

    /// Operator product `self * other`. Reordering each site's `Z^z X^x'`
    /// pair contributes `omega^{z x'}`.
    pub fn mul(&self, other: &PauliString) -> Result<PauliString> {
        if self.d != other.d || self.n() != other.n() {
            return Err(Error::domain("mismatched Pauli string shapes".to_string()));
        }
        let d = self.d;
        let mut phase = (self.phase_exp + other.phase_exp) % d;
        let mut x = Vec::with_capacity(self.n());
        let mut z = Vec::with_capacity(self.n());
        for i in 0..self.n() {
            phase = (phase + self.z_exps[i] * other.x_exps[i]) % d;
            x.push((self.x_exps[i] + other.x_exps[i]) % d);
            z.push((self.z_exps[i] + other.z_exps[i]) % d);
        }
        Ok(PauliString { d, x_exps: x, z_exps: z, phase_exp: phase })
    }

    /// `self^e` by repeated multiplication (`e < d` in all uses).
    pub fn pow(&self, e: u32) -> Result<PauliString> {
        let mut acc = PauliString::identity(self.d, self.n());
        for _ in 0..e {
            acc = acc.mul(self)?;
        }
        Ok(acc)
    }

    /// Basis-state action: `|j> -> omega^{phase + sum z_i j_i} |j + x>`.
    /// Returns the image index and coefficient for column `index`.
    pub fn column_action(&self, index: usize) -> (usize, Complex64) {
        let d = self.d as usize;
        let n = self.n();
        let mut target = 0usize;
        let mut exp = self.phase_exp as i64;
        let mut rem = index;
        // Site 0 is the most significant digit.
        let mut stride = d.pow((n - 1) as u32);
        for i in 0..n {
            let digit = rem / stride;
            rem %= stride;
            exp += (self.z_exps[i] as i64) * digit as i64;
            let new_digit = (digit + self.x_exps[i] as usize) % d;
            target += new_digit * stride;
            stride /= d;
            if stride == 0 {
                break;
            }
        }
        (target, omega_pow(self.d, exp))
    }

    /// Applies the operator to a dense state vector.
    pub fn apply(&self, v: &DVector<Complex64>) -> Result<DVector<Complex64>> {
        let dim = (self.d as usize).pow(self.n() as u32);
        if v.len() != dim {
            return Err(Error::domain(format!(
                "vector length {} does not match dimension {dim}",
                v.len()
            )));
        }
        let mut out = DVector::from_element(dim, Complex64::new(0.0, 0.0));
        for idx in 0..dim {
            let (t, c) = self.column_action(idx);
            out[t] += c * v[idx];
        }
        Ok(out)
    }

    /// Trace of `self * rho` using the generalized-permutation structure.
    pub fn trace_with(&self, rho: &DMatrix<Complex64>) -> Result<Complex64> {
        let dim = (self.d as usize).pow(self.n() as u32);
        if rho.nrows() != dim || rho.ncols() != dim {
            return Err(Error::domain("density matrix dimension mismatch".to_string()));
        }
        let mut acc = Complex64::new(0.0, 0.0);
        for idx in 0..dim {
            let (t, c) = self.column_action(idx);
            acc += c * rho[(idx, t)];
        }
        Ok(acc)
    }

    /// Dense matrix of the operator. Only available below the operator cap.
    pub fn matrix(&self) -> Result<DMatrix<Complex64>> {
        let dim = (self.d as usize).pow(self.n() as u32);
        if dim > OPERATOR_DIM_CAP {
            return Err(Error::resource(format!(
                "dense operator of dimension {dim} exceeds cap {OPERATOR_DIM_CAP}"
            )));
        }
        let mut m = DMatrix::from_element(dim, dim, Complex64::new(0.0, 0.0));
        for idx in 0..dim {
            let (t, c) = self.column_action(idx);
            m[(t, idx)] = c;
        }
        Ok(m)
    }
}

/// Single-site `d x d` matrix of `X^x Z^z`.
pub fn site_pauli_matrix(d: u32, x: u32, z: u32) -> DMatrix<Complex64> {
    let ds = d as usize;
    let mut m = DMatrix::from_element(ds, ds, Complex64::new(0.0, 0.0));
    for j in 0..ds {
        let row = (j + x as usize) % ds;
        m[(row, j)] = omega_pow(d, (z as i64) * j as i64);
    }
    m
}

/// Stabilizer generator of vertex `v`: `X_v` tensored with `Z_j^{m_{vj}}`
/// over the neighbors `j` of `v`.
pub fn stabilizer_generator(spec: &GraphSpec, v: usize) -> Result<PauliString> {
    if v >= spec.n() {
        return Err(Error::domain(format!("vertex {v} outside 0..{}", spec.n())));
    }
    let mut x = vec![0u32; spec.n()];
    let mut z = vec![0u32; spec.n()];
    x[v] = 1;
    for (j, m) in spec.neighbors(v) {
        z[j] = (z[j] + m) % spec.d();
    }
    PauliString::new(spec.d(), x, z, 0)
}

/// Stabilizer element `prod_i S_i^{k_i}` with the scalar phase tracked so the
/// string's matrix equals the product of generator matrices exactly.
pub fn stabilizer_element(spec: &GraphSpec, k_vec: &[u32]) -> Result<PauliString> {
    if k_vec.len() != spec.n() {
        return Err(Error::domain(format!(
            "label length {} does not match vertex count {}",
            k_vec.len(),
            spec.n()
        )));
    }
    if k_vec.iter().any(|&k| k >= spec.d()) {
        return Err(Error::domain("labels must be residues mod d".to_string()));
    }
    let mut acc = PauliString::identity(spec.d(), spec.n());
    for (v, &k) in k_vec.iter().enumerate() {
        let gen = stabilizer_generator(spec, v)?;
        acc = acc.mul(&gen.pow(k)?)?;
    }
    Ok(acc)
}

/// Outcome-labeled eigenbasis of one site's local test observable.
///
/// `vectors` holds orthonormal eigenvectors as columns; `labels[c]` is the
/// outcome digit `o` with eigenvalue `omega^o` for column `c`.
#[derive(Debug, Clone)]
pub struct SiteBasis {
    pub vectors: DMatrix<Complex64>,
    pub labels: Vec<u32>,
}

fn phase_label(d: u32, c: Complex64) -> Result<u32> {
    for t in 0..d {
        if (c - omega_pow(d, t as i64)).norm() < 1e-8 {
            return Ok(t);
        }
    }
    Err(Error::domain(format!(
        "eigenvalue {c} is not a {d}-th root of unity; the string admits no \
         digit-labeled local measurement"
    )))
}

/// Eigenbasis of a local operator with the cyclic structure
/// `V |j> = c_j |j + x>` and `V^d = 1`.
fn cyclic_eigenbasis(d: u32, x: u32, v_mat: &DMatrix<Complex64>) -> Result<SiteBasis> {
    let ds = d as usize;
    if x == 0 {
        // Diagonal: computational basis with labels read off the diagonal.
        let mut labels = Vec::with_capacity(ds);
        for j in 0..ds {
            labels.push(phase_label(d, v_mat[(j, j)])?);
        }
        return Ok(SiteBasis { vectors: DMatrix::identity(ds, ds), labels });
    }
    // Orbit 0 -> x -> 2x -> ... covers Z_d (d prime, x != 0). Accumulated
    // phases phi_m satisfy V^m |0> = phi_m |m x>.
    let mut orbit = Vec::with_capacity(ds);
    let mut phi = Vec::with_capacity(ds + 1);
    phi.push(Complex64::new(1.0, 0.0));
    let mut j = 0usize;
    for _ in 0..ds {
        orbit.push(j);
        let next = (j + x as usize) % ds;
        let c = v_mat[(next, j)];
        phi.push(phi.last().unwrap() * c);
        j = next;
    }
    if (phi[ds] - Complex64::new(1.0, 0.0)).norm() > 1e-8 {
        return Err(Error::domain(
            "local factor does not close after d steps; no digit labeling exists".to_string(),
        ));
    }
    let norm = 1.0 / (ds as f64).sqrt();
    let mut vectors = DMatrix::from_element(ds, ds, Complex64::new(0.0, 0.0));
    let labels: Vec<u32> = (0..d).collect();
    for t in 0..ds {
        for (m, &jm) in orbit.iter().enumerate() {
            // v_t = d^{-1/2} sum_m omega^{-t m} phi_m |j_m>, eigenvalue omega^t.
            let rot = omega_pow(d, -((t * m) as i64));
            vectors[(jm, t)] = rot * phi[m] * norm;
        }
    }
    Ok(SiteBasis { vectors, labels })
}

/// Splits a stabilizer string into per-site measurable observables.
///
/// Each site gets `X^x Z^z`, Hermitized with a factor `i` at `d = 2` when both
/// exponents are 1; the leftover scalar (the tracked string phase combined
/// with the Hermitization factors) is folded into site 0 so that the product
/// of the returned observables equals the string exactly. Outcomes `o_i`
/// label eigenvalues `omega^{o_i}`, making "digits sum to 0 mod d" coincide
/// with the string's eigenvalue-1 eigenspace.
pub fn site_observables(string: &PauliString) -> Result<Vec<SiteBasis>> {
    let d = string.d();
    let n = string.n();
    let i_unit = Complex64::new(0.0, 1.0);

    let mut y_total = 0u32;
    let mut mats = Vec::with_capacity(n);
    for i in 0..n {
        let (x, z) = (string.x_exps()[i], string.z_exps()[i]);
        let mut m = site_pauli_matrix(d, x, z);
        if d == 2 && x == 1 && z == 1 {
            m *= i_unit;
            y_total += 1;
        }
        mats.push(m);
    }
    // string = omega^{phase} (-i)^{y_total} * prod(site observables), so the
    // leftover scalar must itself be a d-th root of unity.
    let leftover = omega_pow(d, string.phase_exp() as i64) * (-i_unit).powu(y_total);
    phase_label(d, leftover)?;
    mats[0] *= leftover;

    let mut out = Vec::with_capacity(n);
    for (i, m) in mats.into_iter().enumerate() {
        out.push(cyclic_eigenbasis(d, string.x_exps()[i], &m)?);
    }
    Ok(out)
}

/// Kronecker product of per-site matrices, site 0 most significant.
pub fn kron_all(mats: &[DMatrix<Complex64>]) -> DMatrix<Complex64> {
    let mut acc = DMatrix::from_element(1, 1, Complex64::new(1.0, 0.0));
    for m in mats {
        acc = acc.kronecker(m);
    }
    acc
}
