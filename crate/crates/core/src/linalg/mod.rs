//! Dense complex kernel.
//!
//! Multipartite objects use big-endian ordering: party 0 owns the most
//! significant digit of a basis index.

mod eigen;
mod matrix;

pub use eigen::{
    hermitian_eigenvalues, hermitian_function, min_eigenvalue, pd_inv_sqrt, psd_sqrt,
    symmetric_eigen,
};
pub use matrix::{
    exp_i_pauli, hermitian_to_real_vec, pauli, real_vec_to_hermitian, tensor, CMatrix, C64, I,
    ONE, ZERO,
};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_TOL: f64 = 1e-9;

/// Multipartite pure state, amplitudes in big-endian order.
#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    dims: Vec<usize>,
    amps: Vec<C64>,
}

impl StateVector {
    /// Wraps amplitudes without normalizing them.
    pub fn new(dims: Vec<usize>, amps: Vec<C64>) -> Result<Self> {
        if dims.is_empty() || dims.contains(&0) {
            return Err(Error::DimensionMismatch(format!("invalid party dims {dims:?}")));
        }
        let total: usize = dims.iter().product();
        if total != amps.len() {
            return Err(Error::DimensionMismatch(format!(
                "dims {dims:?} need {total} amplitudes, got {}",
                amps.len()
            )));
        }
        if amps.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFinite("state amplitudes"));
        }
        Ok(Self { dims, amps })
    }

    pub fn qubits(n: usize, amps: Vec<C64>) -> Result<Self> {
        Self::new(vec![2; n], amps)
    }

    pub fn basis(dims: Vec<usize>, index: usize) -> Result<Self> {
        let total: usize = dims.iter().product();
        if index >= total {
            return Err(Error::OutOfRange(format!("basis index {index} >= {total}")));
        }
        let mut amps = vec![ZERO; total];
        amps[index] = ONE;
        Self::new(dims, amps)
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amps
    }

    pub fn into_amplitudes(self) -> Vec<C64> {
        self.amps
    }

    pub fn parties(&self) -> usize {
        self.dims.len()
    }

    pub fn norm(&self) -> f64 {
        self.amps.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn normalized(&self) -> Result<Self> {
        let n = self.norm();
        if n <= f64::MIN_POSITIVE {
            return Err(Error::Annihilated(n));
        }
        Ok(Self {
            dims: self.dims.clone(),
            amps: self.amps.iter().map(|z| z / n).collect(),
        })
    }

    pub fn is_normalized(&self, tol: f64) -> bool {
        (self.norm() - 1.0).abs() <= tol
    }

    pub fn inner(&self, other: &StateVector) -> C64 {
        self.amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    pub fn distance(&self, other: &StateVector) -> f64 {
        self.amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    /// |⟨self|other⟩|² / (‖self‖²‖other‖²).
    pub fn fidelity(&self, other: &StateVector) -> f64 {
        let d = self.norm() * other.norm();
        if d == 0.0 {
            return 0.0;
        }
        (self.inner(other).norm() / d).powi(2)
    }

    pub fn scale(&self, s: C64) -> Self {
        Self {
            dims: self.dims.clone(),
            amps: self.amps.iter().map(|z| z * s).collect(),
        }
    }

    pub fn kron(&self, other: &StateVector) -> Self {
        let mut dims = self.dims.clone();
        dims.extend_from_slice(&other.dims);
        let amps = self
            .amps
            .iter()
            .flat_map(|a| other.amps.iter().map(move |b| a * b))
            .collect();
        Self { dims, amps }
    }
}

/// Real Bloch coordinates of a qubit operator `𝟙/2 + g·σ`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlochVec {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl BlochVec {
    pub const ZERO: BlochVec = BlochVec {
        x: 0.0,
        y: 0.0,
        z: 0.0,
    };

    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn from_array(a: [f64; 3]) -> Self {
        Self::new(a[0], a[1], a[2])
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }

    pub fn norm(self) -> f64 {
        (self.x * self.x + self.y * self.y + self.z * self.z).sqrt()
    }

    pub fn dot(self, o: BlochVec) -> f64 {
        self.x * o.x + self.y * o.y + self.z * o.z
    }

    pub fn encode(self) -> CMatrix {
        let half = C64::new(0.5, 0.0);
        CMatrix::from_rows(&[
            &[half + self.z, C64::new(self.x, -self.y)],
            &[C64::new(self.x, self.y), half - self.z],
        ])
    }

    /// Inverse of [`BlochVec::encode`]; requires a Hermitian 2×2 of unit trace.
    pub fn decode(op: &CMatrix, tol: f64) -> Result<Self> {
        if op.rows() != 2 || op.cols() != 2 {
            return Err(Error::DimensionMismatch(format!(
                "Bloch decode needs 2x2, got {}x{}",
                op.rows(),
                op.cols()
            )));
        }
        let r = op.hermitian_residual();
        if r > tol {
            return Err(Error::NotHermitian(r));
        }
        let tr = op.trace();
        if (tr.re - 1.0).abs() > tol || tr.im.abs() > tol {
            return Err(Error::InvalidTrace(tr.re));
        }
        let off = op.get(1, 0);
        Ok(Self::new(
            off.re,
            off.im,
            0.5 * (op.get(0, 0).re - op.get(1, 1).re),
        ))
    }
}

/// Bloch codec direction for qubit operators.
#[derive(Clone, Debug)]
pub enum BlochInput<'a> {
    Encode(BlochVec),
    Decode(&'a CMatrix),
}

#[derive(Clone, Debug)]
pub enum BlochOutput {
    Matrix(CMatrix),
    Vector(BlochVec),
}

pub fn bloch_codec(input: BlochInput<'_>, tol: f64) -> Result<BlochOutput> {
    match input {
        BlochInput::Encode(g) => {
            if !g.norm().is_finite() {
                return Err(Error::NonFinite("Bloch vector"));
            }
            Ok(BlochOutput::Matrix(g.encode()))
        }
        BlochInput::Decode(m) => BlochVec::decode(m, tol).map(BlochOutput::Vector),
    }
}

/// Real 3×3 rotation R with `R·g = bloch(u·encode(g)·u†)`.
pub fn su2_to_so3(u: &CMatrix, tol: f64) -> Result<[[f64; 3]; 3]> {
    if u.rows() != 2 || u.cols() != 2 {
        return Err(Error::DimensionMismatch("su2_to_so3 needs 2x2".into()));
    }
    let r = u.unitarity_residual();
    if r > tol {
        return Err(Error::NotUnitary(r));
    }
    let ud = u.adjoint();
    let sig = [pauli(1), pauli(2), pauli(3)];
    let mut out = [[0.0; 3]; 3];
    for (b, sb) in sig.iter().enumerate() {
        let conj = &(u * sb) * &ud;
        for (a, sa) in sig.iter().enumerate() {
            out[a][b] = 0.5 * (sa * &conj).trace().re;
        }
    }
    Ok(out)
}

pub fn rotate(r: &[[f64; 3]; 3], g: BlochVec) -> BlochVec {
    let v = g.to_array();
    let f = |row: &[f64; 3]| row[0] * v[0] + row[1] * v[1] + row[2] * v[2];
    BlochVec::new(f(&r[0]), f(&r[1]), f(&r[2]))
}

pub fn rotate_transpose(r: &[[f64; 3]; 3], g: BlochVec) -> BlochVec {
    let v = g.to_array();
    let f = |c: usize| r[0][c] * v[0] + r[1][c] * v[1] + r[2][c] * v[2];
    BlochVec::new(f(0), f(1), f(2))
}

/// `(⊗ ops)·psi`, one party at a time.
pub fn apply_local(ops: &[CMatrix], psi: &StateVector) -> Result<StateVector> {
    if ops.len() != psi.parties() {
        return Err(Error::DimensionMismatch(format!(
            "{} local operators for {} parties",
            ops.len(),
            psi.parties()
        )));
    }
    let mut amps = psi.amps.clone();
    let mut dims = psi.dims.clone();
    for (party, op) in ops.iter().enumerate() {
        let d_in = psi.dims[party];
        if op.cols() != d_in {
            return Err(Error::DimensionMismatch(format!(
                "operator on party {party} is {}x{}, party dim {d_in}",
                op.rows(),
                op.cols()
            )));
        }
        amps = apply_on_axis(op, &amps, &dims, party);
        dims[party] = op.rows();
    }
    Ok(StateVector { dims, amps })
}

/// Applies `op` to one party of a state; used for single-party updates.
pub fn apply_single(op: &CMatrix, party: usize, psi: &StateVector) -> Result<StateVector> {
    if party >= psi.parties() || op.cols() != psi.dims[party] {
        return Err(Error::DimensionMismatch(format!(
            "operator {}x{} on party {party}",
            op.rows(),
            op.cols()
        )));
    }
    let amps = apply_on_axis(op, &psi.amps, &psi.dims, party);
    let mut dims = psi.dims.clone();
    dims[party] = op.rows();
    Ok(StateVector { dims, amps })
}

fn apply_on_axis(op: &CMatrix, amps: &[C64], dims: &[usize], axis: usize) -> Vec<C64> {
    if op.is_square() && is_identity(op) {
        return amps.to_vec();
    }
    let d_in = dims[axis];
    let d_out = op.rows();
    let inner: usize = dims[axis + 1..].iter().product();
    let outer: usize = dims[..axis].iter().product();
    let mut out = vec![ZERO; outer * d_out * inner];
    for o in 0..outer {
        let src = &amps[o * d_in * inner..(o + 1) * d_in * inner];
        let dst = &mut out[o * d_out * inner..(o + 1) * d_out * inner];
        for r in 0..d_out {
            for c in 0..d_in {
                let a = op.get(r, c);
                if a == ZERO {
                    continue;
                }
                let s = &src[c * inner..(c + 1) * inner];
                let d = &mut dst[r * inner..(r + 1) * inner];
                for (x, y) in d.iter_mut().zip(s) {
                    *x += a * y;
                }
            }
        }
    }
    out
}

fn is_identity(op: &CMatrix) -> bool {
    let n = op.rows();
    (0..n).all(|i| (0..n).all(|j| op.get(i, j) == if i == j { ONE } else { ZERO }))
}
