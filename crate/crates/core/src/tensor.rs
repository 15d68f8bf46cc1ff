//! Dense complex matrix kernel.
//!
//! Basis ordering is the computational basis with the first subsystem as the
//! most significant index: for dimensions `(dA, dB, dC)` the state `|a b c⟩`
//! sits at row `(a * dB + b) * dC + c`.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::ops::{Index, IndexMut};

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Entrywise tolerance on `|m - m†|` for a matrix to count as hermitian.
pub const HERMITIAN_TOL: f64 = 1e-10;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Dense complex matrix stored in row-major order.
#[derive(Clone, PartialEq)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

impl ComplexMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        assert!(rows >= 1 && cols >= 1, "matrix sides must be positive");
        Self { rows, cols, data: vec![ZERO; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = ONE;
        }
        m
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<Complex64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::InvalidDims(format!("matrix sides must be positive, got {rows}x{cols}")));
        }
        if data.len() != rows * cols {
            return Err(Error::InvalidDims(format!(
                "{} entries supplied for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        Ok(Self { rows, cols, data })
    }

    /// Builds a matrix from real entries given row by row.
    pub fn from_real_rows(rows: &[&[f64]]) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, |row| row.len());
        let mut data = Vec::with_capacity(r * c);
        for row in rows {
            if row.len() != c {
                return Err(Error::InvalidDims(format!("ragged rows: {} vs {c}", row.len())));
            }
            data.extend(row.iter().map(|&x| Complex64::new(x, 0.0)));
        }
        Self::from_vec(r, c, data)
    }

    pub fn diagonal(values: &[f64]) -> Self {
        let mut m = Self::zeros(values.len(), values.len());
        for (i, &v) in values.iter().enumerate() {
            m[(i, i)] = Complex64::new(v, 0.0);
        }
        m
    }

    /// Projector `|ψ⟩⟨ψ|` onto an (unnormalized) vector.
    pub fn projector(psi: &[Complex64]) -> Self {
        let n = psi.len();
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                m[(i, j)] = psi[i] * psi[j].conj();
            }
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

    pub fn as_slice(&self) -> &[Complex64] {
        &self.data
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    pub fn adjoint(&self) -> Self {
        let mut out = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out[(j, i)] = self[(i, j)].conj();
            }
        }
        out
    }

    pub fn transpose(&self) -> Self {
        let mut out = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out[(j, i)] = self[(i, j)];
            }
        }
        out
    }

    pub fn scale(&self, s: Complex64) -> Self {
        Self { rows: self.rows, cols: self.cols, data: self.data.iter().map(|&z| z * s).collect() }
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols), "shape mismatch in add");
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect();
        Self { rows: self.rows, cols: self.cols, data }
    }

    pub fn sub(&self, other: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols), "shape mismatch in sub");
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect();
        Self { rows: self.rows, cols: self.cols, data }
    }

    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.rows, "inner dimensions differ in matmul");
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            let row = &self.data[i * self.cols..(i + 1) * self.cols];
            let dst = &mut out.data[i * other.cols..(i + 1) * other.cols];
            for (k, &a) in row.iter().enumerate() {
                if a == ZERO {
                    continue;
                }
                let src = &other.data[k * other.cols..(k + 1) * other.cols];
                for (d, &b) in dst.iter_mut().zip(src) {
                    *d += a * b;
                }
            }
        }
        out
    }

    /// `u · self · u†`.
    pub fn conjugate_by(&self, u: &Self) -> Self {
        u.matmul(self).matmul(&u.adjoint())
    }

    /// Largest entrywise modulus of `self - other`.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols), "shape mismatch");
        self.data.iter().zip(&other.data).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max)
    }

    /// Largest entrywise modulus of `self - self†`.
    pub fn hermitian_deviation(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        let mut dev = 0.0f64;
        for i in 0..self.rows {
            for j in i..self.cols {
                dev = dev.max((self[(i, j)] - self[(j, i)].conj()).norm());
            }
        }
        dev
    }

    pub fn ensure_hermitian(&self) -> Result<()> {
        let max_deviation = self.hermitian_deviation();
        if max_deviation > HERMITIAN_TOL {
            return Err(Error::NotHermitian { max_deviation });
        }
        Ok(())
    }

    /// Sum of squared moduli of all entries.
    pub fn frobenius_sq(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum()
    }

    pub(crate) fn to_nalgebra(&self) -> DMatrix<Complex64> {
        DMatrix::from_row_slice(self.rows, self.cols, &self.data)
    }
}

impl Index<(usize, usize)> for ComplexMatrix {
    type Output = Complex64;

    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &Complex64 {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for ComplexMatrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex64 {
        &mut self.data[i * self.cols + j]
    }
}

impl fmt::Debug for ComplexMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "ComplexMatrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            write!(f, " ")?;
            for j in 0..self.cols {
                let z = self[(i, j)];
                write!(f, " {:+.4}{:+.4}i", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

/// One of the three parties.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Subsystem {
    A,
    B,
    C,
}

impl Subsystem {
    pub const ALL: [Subsystem; 3] = [Subsystem::A, Subsystem::B, Subsystem::C];

    #[inline]
    pub fn index(self) -> usize {
        self as usize
    }

    pub fn label(self) -> char {
        match self {
            Subsystem::A => 'A',
            Subsystem::B => 'B',
            Subsystem::C => 'C',
        }
    }
}

/// Local dimensions of a tripartite system.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct DimTriple {
    pub a: usize,
    pub b: usize,
    pub c: usize,
}

impl DimTriple {
    pub const QUBITS: DimTriple = DimTriple { a: 2, b: 2, c: 2 };

    pub fn new(a: usize, b: usize, c: usize) -> Result<Self> {
        if a < 2 || b < 2 || c < 2 {
            return Err(Error::InvalidDims(format!(
                "every local dimension must be at least 2, got ({a}, {b}, {c})"
            )));
        }
        Ok(Self { a, b, c })
    }

    /// Total dimension `dA · dB · dC`.
    #[inline]
    pub fn total(&self) -> usize {
        self.a * self.b * self.c
    }

    #[inline]
    pub fn as_array(&self) -> [usize; 3] {
        [self.a, self.b, self.c]
    }

    #[inline]
    pub fn local(&self, s: Subsystem) -> usize {
        self.as_array()[s.index()]
    }

    pub fn is_qubits(&self) -> bool {
        *self == Self::QUBITS
    }
}

impl fmt::Display for DimTriple {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}x{}x{}", self.a, self.b, self.c)
    }
}

/// Real eigenvalues sorted in non-increasing order.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    values: Vec<f64>,
}

impl Spectrum {
    /// Sorts the given values into non-increasing order.
    pub fn new(mut values: Vec<f64>) -> Self {
        values.sort_by(|a, b| b.total_cmp(a));
        Self { values }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn sum(&self) -> f64 {
        self.values.iter().sum()
    }

    pub fn min(&self) -> f64 {
        self.values.last().copied().unwrap_or(0.0)
    }

    /// `Σ λ_i^k`.
    pub fn power_sum(&self, k: u32) -> f64 {
        self.values.iter().map(|&x| powi(x, k)).sum()
    }

    /// `Σ |λ_i|`.
    pub fn abs_sum(&self) -> f64 {
        self.values.iter().map(|x| x.abs()).sum()
    }
}

#[inline]
pub(crate) fn powi(x: f64, k: u32) -> f64 {
    let mut acc = 1.0;
    for _ in 0..k {
        acc *= x;
    }
    acc
}

fn product(dims: &[usize]) -> usize {
    dims.iter().product()
}

fn check_square_dims(m: &ComplexMatrix, dims: &[usize]) -> Result<usize> {
    let n = product(dims);
    if !m.is_square() || m.rows() != n {
        return Err(Error::InvalidDims(format!(
            "{}x{} matrix does not match subsystem dimensions {:?} (product {n})",
            m.rows(),
            m.cols(),
            dims
        )));
    }
    Ok(n)
}

/// Splits a flat index into per-subsystem digits (first subsystem most significant).
pub(crate) fn unravel(mut index: usize, dims: &[usize], out: &mut [usize]) {
    for (slot, &d) in out.iter_mut().zip(dims).rev() {
        *slot = index % d;
        index /= d;
    }
}

pub(crate) fn ravel(digits: &[usize], dims: &[usize]) -> usize {
    digits.iter().zip(dims).fold(0, |acc, (&x, &d)| acc * d + x)
}

/// Kronecker product.
pub fn kron(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    let (ra, ca, rb, cb) = (a.rows(), a.cols(), b.rows(), b.cols());
    let mut out = ComplexMatrix::zeros(ra * rb, ca * cb);
    for i in 0..ra {
        for j in 0..ca {
            let s = a[(i, j)];
            if s == ZERO {
                continue;
            }
            for k in 0..rb {
                for l in 0..cb {
                    out[(i * rb + k, j * cb + l)] = s * b[(k, l)];
                }
            }
        }
    }
    out
}

/// Transposes the indices of subsystem `subsystem` of a square matrix over
/// the tensor product of `dims`, leaving all other indices in place.
pub fn partial_transpose(m: &ComplexMatrix, dims: &[usize], subsystem: usize) -> Result<ComplexMatrix> {
    let n = check_square_dims(m, dims)?;
    if subsystem >= dims.len() {
        return Err(Error::InvalidDims(format!(
            "subsystem {subsystem} out of range for {} factors",
            dims.len()
        )));
    }
    let mut out = ComplexMatrix::zeros(n, n);
    let mut ri = vec![0; dims.len()];
    let mut ci = vec![0; dims.len()];
    for row in 0..n {
        unravel(row, dims, &mut ri);
        for col in 0..n {
            unravel(col, dims, &mut ci);
            core::mem::swap(&mut ri[subsystem], &mut ci[subsystem]);
            out[(ravel(&ri, dims), ravel(&ci, dims))] = m[(row, col)];
            core::mem::swap(&mut ri[subsystem], &mut ci[subsystem]);
        }
    }
    Ok(out)
}

/// Traces out every subsystem not listed in `keep` (indices into `dims`).
pub fn partial_trace(m: &ComplexMatrix, dims: &[usize], keep: &[usize]) -> Result<ComplexMatrix> {
    let n = check_square_dims(m, dims)?;
    let mut kept: Vec<usize> = keep.to_vec();
    kept.sort_unstable();
    kept.dedup();
    if kept.iter().any(|&s| s >= dims.len()) {
        return Err(Error::InvalidDims(format!("keep set {keep:?} out of range for {dims:?}")));
    }
    if kept.is_empty() {
        return Err(Error::InvalidDims("partial trace must keep at least one subsystem".into()));
    }
    let kept_dims: Vec<usize> = kept.iter().map(|&s| dims[s]).collect();
    let out_n = product(&kept_dims);
    let mut out = ComplexMatrix::zeros(out_n, out_n);
    let mut ri = vec![0; dims.len()];
    let mut ci = vec![0; dims.len()];
    let mut rk = vec![0; kept.len()];
    let mut ck = vec![0; kept.len()];
    for row in 0..n {
        unravel(row, dims, &mut ri);
        for col in 0..n {
            unravel(col, dims, &mut ci);
            let traced_diagonal =
                (0..dims.len()).all(|s| kept.binary_search(&s).is_ok() || ri[s] == ci[s]);
            if !traced_diagonal {
                continue;
            }
            for (slot, &s) in kept.iter().enumerate() {
                rk[slot] = ri[s];
                ck[slot] = ci[s];
            }
            out[(ravel(&rk, &kept_dims), ravel(&ck, &kept_dims))] += m[(row, col)];
        }
    }
    Ok(out)
}

/// Real eigenvalues of a hermitian matrix, sorted non-increasing.
pub fn hermitian_spectrum(m: &ComplexMatrix) -> Result<Spectrum> {
    Ok(hermitian_eigen(m)?.0)
}

/// Eigenvalues (non-increasing) and matching orthonormal eigenvectors as
/// matrix columns.
pub fn hermitian_eigen(m: &ComplexMatrix) -> Result<(Spectrum, ComplexMatrix)> {
    m.ensure_hermitian()?;
    let n = m.rows();
    let eig = nalgebra::linalg::SymmetricEigen::new(m.to_nalgebra());
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vectors = ComplexMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        for r in 0..n {
            vectors[(r, dst)] = eig.eigenvectors[(r, src)];
        }
    }
    Ok((Spectrum { values }, vectors))
}

/// `Tr(m^k)` for hermitian `m`, computed by repeated squaring.
pub fn trace_power(m: &ComplexMatrix, k: u32) -> Result<f64> {
    m.ensure_hermitian()?;
    if k == 0 {
        return Err(Error::InvalidParams("trace power requires k >= 1".into()));
    }
    // Tr(X Y) for X = m^lo, Y = m^hi avoids one multiplication.
    let lo = k / 2;
    let hi = k - lo;
    let p_hi = matrix_power(m, hi);
    let t = if lo == 0 {
        p_hi.trace()
    } else {
        let p_lo = if lo == hi { p_hi.clone() } else { matrix_power(m, lo) };
        let n = m.rows();
        let mut acc = ZERO;
        for i in 0..n {
            for j in 0..n {
                acc += p_lo[(i, j)] * p_hi[(j, i)];
            }
        }
        acc
    };
    let tol = 1e-12 * t.re.abs().max(1.0);
    if t.im.abs() > tol {
        return Err(Error::Internal(format!("trace power has imaginary residue {:e}", t.im)));
    }
    Ok(t.re)
}

fn matrix_power(m: &ComplexMatrix, mut k: u32) -> ComplexMatrix {
    let mut result: Option<ComplexMatrix> = None;
    let mut base = m.clone();
    loop {
        if k & 1 == 1 {
            result = Some(match result {
                None => base.clone(),
                Some(r) => r.matmul(&base),
            });
        }
        k >>= 1;
        if k == 0 {
            break;
        }
        base = base.matmul(&base);
    }
    result.unwrap_or_else(|| ComplexMatrix::identity(m.rows()))
}

/// Trace norm `Σ |λ_i|` of a hermitian matrix.
pub fn trace_norm(m: &ComplexMatrix) -> Result<f64> {
    Ok(hermitian_spectrum(m)?.abs_sum())
}
