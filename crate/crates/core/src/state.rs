//! Validated tripartite density matrices and reference state constructors.
//!
//! Random states are drawn as `G G† / Tr(G G†)` where `G` is a `d × rank`
//! matrix whose real and imaginary parts are independent standard normals
//! produced by `ChaCha8Rng::seed_from_u64(seed)` (row-major, real part first).

use alloc::format;
use alloc::vec::Vec;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::tensor::{self, hermitian_spectrum, kron, ComplexMatrix, DimTriple, Subsystem};

/// Trace tolerance for a density matrix.
pub const TRACE_TOL: f64 = 1e-10;
/// Smallest eigenvalue accepted as non-negative.
pub const PSD_TOL: f64 = -1e-10;

/// Checks the density-matrix invariants on a square matrix.
pub fn validate_density(m: &ComplexMatrix) -> Result<()> {
    if !m.is_square() {
        return Err(Error::InvalidState(format!("matrix is {}x{}, not square", m.rows(), m.cols())));
    }
    m.ensure_hermitian()?;
    let tr = m.trace().re;
    if (tr - 1.0).abs() > TRACE_TOL {
        return Err(Error::InvalidState(format!("trace is {tr}, expected 1")));
    }
    let min = hermitian_spectrum(m)?.min();
    if min < PSD_TOL {
        return Err(Error::InvalidState(format!("not positive semidefinite (min eigenvalue {min:e})")));
    }
    Ok(())
}

/// A density matrix on `H_A ⊗ H_B ⊗ H_C`.
#[derive(Debug, Clone, PartialEq)]
pub struct TripartiteState {
    dims: DimTriple,
    matrix: ComplexMatrix,
}

impl TripartiteState {
    pub fn new(dims: DimTriple, matrix: ComplexMatrix) -> Result<Self> {
        if !matrix.is_square() || matrix.rows() != dims.total() {
            return Err(Error::InvalidDims(format!(
                "{}x{} matrix for dimensions {dims} (total {})",
                matrix.rows(),
                matrix.cols(),
                dims.total()
            )));
        }
        validate_density(&matrix)?;
        Ok(Self { dims, matrix })
    }

    pub fn dims(&self) -> DimTriple {
        self.dims
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.matrix
    }

    /// Reduced state on the listed parties, in A, B, C order.
    pub fn reduced(&self, keep: &[Subsystem]) -> ComplexMatrix {
        let idx: Vec<usize> = keep.iter().map(|s| s.index()).collect();
        tensor::partial_trace(&self.matrix, &self.dims.as_array(), &idx)
            .expect("state dimensions are validated on construction")
    }

    /// `ρ^{T_X}` for one party.
    pub fn partial_transpose(&self, s: Subsystem) -> ComplexMatrix {
        tensor::partial_transpose(&self.matrix, &self.dims.as_array(), s.index())
            .expect("state dimensions are validated on construction")
    }

    /// Applies a local unitary `uA ⊗ uB ⊗ uC`.
    pub fn apply_local_unitaries(&self, ua: &ComplexMatrix, ub: &ComplexMatrix, uc: &ComplexMatrix) -> Result<Self> {
        let u = kron(&kron(ua, ub), uc);
        if u.rows() != self.dims.total() {
            return Err(Error::InvalidDims("local unitaries do not match the state dimensions".into()));
        }
        Self::new(self.dims, self.matrix.conjugate_by(&u))
    }
}

/// Mixture weights of the three-qubit GHZ-diagonal family
/// `Σ_σ λ0^σ |Ψ0^σ⟩⟨Ψ0^σ| + Σ_k λk (|Ψk^+⟩⟨Ψk^+| + |Ψk^-⟩⟨Ψk^-|)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DctParams {
    pub lambda0_plus: f64,
    pub lambda0_minus: f64,
    pub lambda01: f64,
    pub lambda10: f64,
    pub lambda11: f64,
}

impl DctParams {
    /// Weights of the bound entangled member of the family.
    pub const BOUND: DctParams = DctParams {
        lambda0_plus: 1.0 / 3.0,
        lambda0_minus: 0.0,
        lambda01: 1.0 / 6.0,
        lambda10: 0.0,
        lambda11: 1.0 / 6.0,
    };

    pub fn total_weight(&self) -> f64 {
        self.lambda0_plus + self.lambda0_minus + 2.0 * (self.lambda01 + self.lambda10 + self.lambda11)
    }

    pub fn validate(&self) -> Result<()> {
        let w = [self.lambda0_plus, self.lambda0_minus, self.lambda01, self.lambda10, self.lambda11];
        if w.iter().any(|&x| !x.is_finite() || x < 0.0) {
            return Err(Error::InvalidParams(format!("weights must be non-negative, got {w:?}")));
        }
        let total = self.total_weight();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidParams(format!("weights sum to {total}, expected 1")));
        }
        Ok(())
    }
}

/// Basis indices of `|k1 k2 0⟩` and `|~k1 ~k2 1⟩`.
fn dct_pair(k1: usize, k2: usize) -> (usize, usize) {
    ((k1 << 2) | (k2 << 1), ((1 - k1) << 2) | ((1 - k2) << 1) | 1)
}

/// Mixture of the projectors onto `(|k1 k2 0⟩ ± |~k1 ~k2 1⟩)/√2`, assembled
/// entry by entry so that equal weights give bit-identical matrices.
pub fn dct_state(p: &DctParams) -> Result<TripartiteState> {
    p.validate()?;
    let mut m = ComplexMatrix::zeros(8, 8);
    let mut add = |weight: f64, (i, j): (usize, usize), sign: f64| {
        let h = Complex64::new(weight / 2.0, 0.0);
        m[(i, i)] += h;
        m[(j, j)] += h;
        m[(i, j)] += h * sign;
        m[(j, i)] += h * sign;
    };
    add(p.lambda0_plus, dct_pair(0, 0), 1.0);
    add(p.lambda0_minus, dct_pair(0, 0), -1.0);
    for (weight, k1, k2) in [(p.lambda01, 0, 1), (p.lambda10, 1, 0), (p.lambda11, 1, 1)] {
        add(weight, dct_pair(k1, k2), 1.0);
        add(weight, dct_pair(k1, k2), -1.0);
    }
    TripartiteState::new(DimTriple::QUBITS, m)
}

/// The bound entangled three-qubit state: weight 1/6 on the diagonal at
/// |000⟩, |001⟩, |010⟩, |101⟩, |110⟩, |111⟩ plus the |000⟩⟨111| coherence.
pub fn bound_state() -> TripartiteState {
    let s = 1.0 / 6.0;
    let mut m = ComplexMatrix::diagonal(&[s, s, s, 0.0, 0.0, s, s, s]);
    m[(0, 7)] = Complex64::new(s, 0.0);
    m[(7, 0)] = Complex64::new(s, 0.0);
    TripartiteState::new(DimTriple::QUBITS, m).expect("constant state is valid")
}

fn pure_state(amplitudes: &[(usize, f64)]) -> TripartiteState {
    let mut v = [Complex64::new(0.0, 0.0); 8];
    for &(i, a) in amplitudes {
        v[i] = Complex64::new(a, 0.0);
    }
    TripartiteState::new(DimTriple::QUBITS, ComplexMatrix::projector(&v)).expect("constant state is valid")
}

/// `(|000⟩ + |111⟩)/√2`.
pub fn ghz() -> TripartiteState {
    let h = core::f64::consts::FRAC_1_SQRT_2;
    pure_state(&[(0, h), (7, h)])
}

/// `(|100⟩ + |010⟩ + |001⟩)/√3`.
pub fn w_state() -> TripartiteState {
    let t = 1.0 / libm::sqrt(3.0);
    pure_state(&[(4, t), (2, t), (1, t)])
}

pub fn maximally_mixed(dims: DimTriple) -> TripartiteState {
    let d = dims.total();
    let m = ComplexMatrix::identity(d).scale(Complex64::new(1.0 / d as f64, 0.0));
    TripartiteState::new(dims, m).expect("maximally mixed state is valid")
}

/// Seeded `d × cols` matrix of complex standard normals.
pub fn ginibre(rows: usize, cols: usize, seed: u64) -> ComplexMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let data = (0..rows * cols)
        .map(|_| {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            Complex64::new(re, im)
        })
        .collect();
    ComplexMatrix::from_vec(rows, cols, data).expect("shape is consistent")
}

/// Normalized `G G†` for a seeded `d × rank` Ginibre matrix `G`.
pub fn random_density(d: usize, rank: usize, seed: u64) -> Result<ComplexMatrix> {
    if rank == 0 || rank > d {
        return Err(Error::RankOutOfRange { rank, dim: d });
    }
    let g = ginibre(d, rank, seed);
    let mut m = g.matmul(&g.adjoint());
    // exact hermiticity; the product leaves rounding asymmetry in the off-diagonals
    for i in 0..d {
        m[(i, i)].im = 0.0;
        for j in i + 1..d {
            let avg = (m[(i, j)] + m[(j, i)].conj()) * 0.5;
            m[(i, j)] = avg;
            m[(j, i)] = avg.conj();
        }
    }
    let tr = m.trace().re;
    Ok(m.scale(Complex64::new(1.0 / tr, 0.0)))
}

/// Seeded Haar-random unitary: Gram–Schmidt on the columns of a Ginibre matrix.
pub fn random_unitary(d: usize, seed: u64) -> ComplexMatrix {
    let g = ginibre(d, d, seed);
    let mut u = ComplexMatrix::zeros(d, d);
    for j in 0..d {
        let mut col: Vec<Complex64> = (0..d).map(|i| g[(i, j)]).collect();
        for prev in 0..j {
            let dot: Complex64 = (0..d).map(|i| u[(i, prev)].conj() * col[i]).sum();
            for (i, c) in col.iter_mut().enumerate() {
                *c -= dot * u[(i, prev)];
            }
        }
        let norm = libm::sqrt(col.iter().map(|c| c.norm_sqr()).sum::<f64>());
        for (i, c) in col.iter().enumerate() {
            u[(i, j)] = c / norm;
        }
    }
    u
}

pub fn random_state(dims: DimTriple, rank: usize, seed: u64) -> Result<TripartiteState> {
    TripartiteState::new(dims, random_density(dims.total(), rank, seed)?)
}

/// `ρA ⊗ ρB ⊗ ρC`; each factor must be a valid density matrix.
pub fn product_state(rho_a: &ComplexMatrix, rho_b: &ComplexMatrix, rho_c: &ComplexMatrix) -> Result<TripartiteState> {
    for (name, f) in [('A', rho_a), ('B', rho_b), ('C', rho_c)] {
        validate_density(f).map_err(|e| Error::InvalidState(format!("factor {name}: {e}")))?;
    }
    let dims = DimTriple::new(rho_a.rows(), rho_b.rows(), rho_c.rows())?;
    TripartiteState::new(dims, kron(&kron(rho_a, rho_b), rho_c))
}
