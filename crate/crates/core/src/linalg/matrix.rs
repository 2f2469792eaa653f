use std::fmt;
use std::ops::{Add, Mul, Sub};

use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

/// Dense complex matrix in row-major order.
#[derive(Clone, PartialEq)]
pub struct CMatrix {
    rows: usize,
    cols: usize,
    data: Vec<C64>,
}

impl CMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<C64>) -> Result<Self> {
        if rows * cols != data.len() {
            return Err(Error::DimensionMismatch(format!(
                "{rows}x{cols} matrix needs {} entries, got {}",
                rows * cols,
                data.len()
            )));
        }
        if data.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFinite("matrix"));
        }
        Ok(Self { rows, cols, data })
    }

    /// Builds a matrix from row slices. Panics on ragged input; meant for literals.
    pub fn from_rows(rows: &[&[C64]]) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, |row| row.len());
        assert!(rows.iter().all(|row| row.len() == c), "ragged rows");
        let data = rows.iter().flat_map(|row| row.iter().copied()).collect();
        Self {
            rows: r,
            cols: c,
            data,
        }
    }

    pub fn from_real_rows(rows: &[&[f64]]) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, |row| row.len());
        assert!(rows.iter().all(|row| row.len() == c), "ragged rows");
        let data = rows
            .iter()
            .flat_map(|row| row.iter().map(|&x| C64::new(x, 0.0)))
            .collect();
        Self {
            rows: r,
            cols: c,
            data,
        }
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![ZERO; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = ONE;
        }
        m
    }

    pub fn diag(entries: &[C64]) -> Self {
        let n = entries.len();
        let mut m = Self::zeros(n, n);
        for (i, &z) in entries.iter().enumerate() {
            m.data[i * n + i] = z;
        }
        m
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    #[inline]
    pub fn data(&self) -> &[C64] {
        &self.data
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, z: C64) {
        self.data[i * self.cols + j] = z;
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    pub fn adjoint(&self) -> Self {
        let mut out = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out.data[j * self.rows + i] = self.get(i, j).conj();
            }
        }
        out
    }

    pub fn scale(&self, s: C64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&z| z * s).collect(),
        }
    }

    pub fn scale_real(&self, s: f64) -> Self {
        self.scale(C64::new(s, 0.0))
    }

    pub fn trace(&self) -> C64 {
        (0..self.rows.min(self.cols)).map(|i| self.get(i, i)).sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Hilbert–Schmidt inner product tr(self† other).
    pub fn inner(&self, other: &CMatrix) -> C64 {
        debug_assert_eq!(self.data.len(), other.data.len());
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    /// Frobenius distance ‖self − other‖.
    pub fn distance(&self, other: &CMatrix) -> f64 {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    pub fn matmul(&self, other: &CMatrix) -> Result<CMatrix> {
        if self.cols != other.rows {
            return Err(Error::DimensionMismatch(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.data[i * self.cols + k];
                if a == ZERO {
                    continue;
                }
                let row = &other.data[k * other.cols..(k + 1) * other.cols];
                let dst = &mut out.data[i * other.cols..(i + 1) * other.cols];
                for (d, &b) in dst.iter_mut().zip(row) {
                    *d += a * b;
                }
            }
        }
        Ok(out)
    }

    pub fn apply(&self, v: &[C64]) -> Vec<C64> {
        assert_eq!(self.cols, v.len());
        (0..self.rows)
            .map(|i| {
                self.data[i * self.cols..(i + 1) * self.cols]
                    .iter()
                    .zip(v)
                    .map(|(a, b)| a * b)
                    .sum()
            })
            .collect()
    }

    /// ‖A − A†‖.
    pub fn hermitian_residual(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        let n = self.rows;
        let mut acc = 0.0;
        for i in 0..n {
            for j in 0..n {
                acc += (self.get(i, j) - self.get(j, i).conj()).norm_sqr();
            }
        }
        acc.sqrt()
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.hermitian_residual() <= tol
    }

    /// ‖A†A − 𝟙‖.
    pub fn unitarity_residual(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        let prod = &self.adjoint() * self;
        prod.distance(&Self::identity(self.rows))
    }

    pub fn is_unitary(&self, tol: f64) -> bool {
        self.unitarity_residual() <= tol
    }

    /// Hermitian part (A + A†)/2.
    pub fn hermitian_part(&self) -> CMatrix {
        (self + &self.adjoint()).scale_real(0.5)
    }

    pub fn commutator(&self, other: &CMatrix) -> CMatrix {
        &(self * other) - &(other * self)
    }

    /// `u · self · u†`.
    pub fn conjugate_by(&self, u: &CMatrix) -> CMatrix {
        &(u * self) * &u.adjoint()
    }

    /// `u† · self · u`.
    pub fn conjugate_by_adjoint(&self, u: &CMatrix) -> CMatrix {
        &(&u.adjoint() * self) * u
    }

    /// Kronecker product `self ⊗ other`.
    pub fn kron(&self, other: &CMatrix) -> CMatrix {
        let (r0, c0, r1, c1) = (self.rows, self.cols, other.rows, other.cols);
        let mut out = Self::zeros(r0 * r1, c0 * c1);
        let oc = c0 * c1;
        for i in 0..r0 {
            for j in 0..c0 {
                let a = self.get(i, j);
                if a == ZERO {
                    continue;
                }
                for k in 0..r1 {
                    for l in 0..c1 {
                        out.data[(i * r1 + k) * oc + j * c1 + l] = a * other.get(k, l);
                    }
                }
            }
        }
        out
    }

    /// Entry of largest modulus, as (row, col).
    pub fn argmax_abs(&self) -> (usize, usize) {
        let mut best = 0;
        let mut best_val = -1.0;
        for (idx, z) in self.data.iter().enumerate() {
            let v = z.norm_sqr();
            if v > best_val {
                best_val = v;
                best = idx;
            }
        }
        (best / self.cols, best % self.cols)
    }

    /// If `self ≈ c · other`, returns `(c, ‖self − c·other‖)` with c the
    /// least-squares coefficient; `None` when `other` vanishes.
    pub fn proportionality(&self, other: &CMatrix) -> Option<(C64, f64)> {
        let den = other.inner(other).re;
        if den <= f64::MIN_POSITIVE {
            return None;
        }
        let c = other.inner(self) / den;
        let resid = self.distance(&other.scale(c));
        Some((c, resid))
    }

    /// True when the matrix is a scalar multiple of the identity.
    pub fn is_scalar(&self, tol: f64) -> bool {
        if !self.is_square() {
            return false;
        }
        let n = self.rows;
        let c = self.trace() / n as f64;
        self.distance(&Self::identity(n).scale(c)) <= tol
    }

    /// Inverse by Gauss–Jordan elimination with partial pivoting.
    pub fn inverse(&self) -> Result<CMatrix> {
        if !self.is_square() {
            return Err(Error::DimensionMismatch(format!(
                "cannot invert {}x{}",
                self.rows, self.cols
            )));
        }
        let n = self.rows;
        let mut a = self.data.clone();
        let mut inv = Self::identity(n).data;
        let scale = self.frobenius_norm().max(f64::MIN_POSITIVE);
        for col in 0..n {
            let pivot = (col..n)
                .max_by(|&x, &y| {
                    a[x * n + col]
                        .norm()
                        .partial_cmp(&a[y * n + col].norm())
                        .unwrap_or(std::cmp::Ordering::Equal)
                })
                .unwrap();
            if a[pivot * n + col].norm() <= 1e-14 * scale {
                return Err(Error::Singular);
            }
            if pivot != col {
                for j in 0..n {
                    a.swap(pivot * n + j, col * n + j);
                    inv.swap(pivot * n + j, col * n + j);
                }
            }
            let p = a[col * n + col];
            for j in 0..n {
                a[col * n + j] /= p;
                inv[col * n + j] /= p;
            }
            for r in 0..n {
                if r == col {
                    continue;
                }
                let f = a[r * n + col];
                if f == ZERO {
                    continue;
                }
                for j in 0..n {
                    let (ac, ic) = (a[col * n + j], inv[col * n + j]);
                    a[r * n + j] -= f * ac;
                    inv[r * n + j] -= f * ic;
                }
            }
        }
        Ok(Self {
            rows: n,
            cols: n,
            data: inv,
        })
    }
}

impl fmt::Debug for CMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "CMatrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            write!(f, "  ")?;
            for j in 0..self.cols {
                let z = self.get(i, j);
                write!(f, "{:+.6}{:+.6}i ", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

impl<'a> Mul<&'a CMatrix> for &'a CMatrix {
    type Output = CMatrix;
    fn mul(self, rhs: &'a CMatrix) -> CMatrix {
        self.matmul(rhs).expect("matrix product dimension mismatch")
    }
}

impl<'a> Add<&'a CMatrix> for &'a CMatrix {
    type Output = CMatrix;
    fn add(self, rhs: &'a CMatrix) -> CMatrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        CMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect(),
        }
    }
}

impl<'a> Sub<&'a CMatrix> for &'a CMatrix {
    type Output = CMatrix;
    fn sub(self, rhs: &'a CMatrix) -> CMatrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        CMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect(),
        }
    }
}

/// Pauli matrix σ_i, with σ_0 = 𝟙.
/// Serialized as rows of `[re, im]` pairs.
impl serde::Serialize for CMatrix {
    fn serialize<S: serde::Serializer>(&self, ser: S) -> std::result::Result<S::Ok, S::Error> {
        let rows: Vec<Vec<[f64; 2]>> = (0..self.rows)
            .map(|i| (0..self.cols).map(|j| {
                let z = self.get(i, j);
                [z.re, z.im]
            }).collect())
            .collect();
        rows.serialize(ser)
    }
}

impl<'de> serde::Deserialize<'de> for CMatrix {
    fn deserialize<D: serde::Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        let rows = Vec::<Vec<[f64; 2]>>::deserialize(de)?;
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|row| row.len() != c) {
            return Err(serde::de::Error::custom("ragged matrix rows"));
        }
        let data = rows.iter().flatten().map(|&[re, im]| C64::new(re, im)).collect();
        CMatrix::new(r, c, data).map_err(serde::de::Error::custom)
    }
}

pub fn pauli(i: usize) -> CMatrix {
    match i {
        0 => CMatrix::identity(2),
        1 => CMatrix::from_rows(&[&[ZERO, ONE], &[ONE, ZERO]]),
        2 => CMatrix::from_rows(&[&[ZERO, -I], &[I, ZERO]]),
        3 => CMatrix::from_rows(&[&[ONE, ZERO], &[ZERO, -ONE]]),
        _ => panic!("pauli index {i} out of range"),
    }
}

/// exp(iθσ_axis) = cos θ 𝟙 + i sin θ σ_axis.
pub fn exp_i_pauli(theta: f64, axis: usize) -> CMatrix {
    &CMatrix::identity(2).scale_real(theta.cos()) + &pauli(axis).scale(I * theta.sin())
}

/// Kronecker product of a non-empty list, in listed order.
pub fn tensor(factors: &[CMatrix]) -> Result<CMatrix> {
    let (first, rest) = factors.split_first().ok_or(Error::Empty("tensor factors"))?;
    if factors.iter().any(|f| !f.is_finite()) {
        return Err(Error::NonFinite("tensor factor"));
    }
    Ok(rest.iter().fold(first.clone(), |acc, f| acc.kron(f)))
}

/// Real coordinates of a Hermitian matrix: diagonal, then √2·Re and √2·Im of
/// the strict upper triangle. Frobenius norms are preserved.
pub fn hermitian_to_real_vec(h: &CMatrix) -> Vec<f64> {
    let n = h.rows();
    let mut v = Vec::with_capacity(n * n);
    for i in 0..n {
        v.push(h.get(i, i).re);
    }
    let s = std::f64::consts::SQRT_2;
    for i in 0..n {
        for j in i + 1..n {
            v.push(s * h.get(i, j).re);
        }
    }
    for i in 0..n {
        for j in i + 1..n {
            v.push(s * h.get(i, j).im);
        }
    }
    v
}

/// Inverse of [`hermitian_to_real_vec`].
pub fn real_vec_to_hermitian(v: &[f64], n: usize) -> CMatrix {
    assert_eq!(v.len(), n * n);
    let mut h = CMatrix::zeros(n, n);
    for i in 0..n {
        h.set(i, i, C64::new(v[i], 0.0));
    }
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let upper = n * (n - 1) / 2;
    let mut k = 0;
    for i in 0..n {
        for j in i + 1..n {
            let z = C64::new(s * v[n + k], s * v[n + upper + k]);
            h.set(i, j, z);
            h.set(j, i, z.conj());
            k += 1;
        }
    }
    h
}
