//! Gate-level simulation of the two-stage interferometer network.
//!
//! Stage one: each party X owns an ancilla (a1, b1, c1) that controls the
//! cyclic shift `V_{X,k}` on the k copies of its subsystem, sandwiched
//! between Hadamards. Stage two: fresh ancillas (a2, b2, c2) control `R±`
//! on the stage-one ancillas, again between Hadamards. Operators are applied
//! in operator order, rightmost first.
//!
//! Layouts:
//! * `ρ^{⊗k}` places copies outermost: `copy1(A B C) copy2(A B C) …`.
//! * Stage one joins the ancillas after the system: `ρ^{⊗k} ⊗ ρ_{a1 b1 c1}`.
//! * Stage two is a six-qubit register `a1 b1 c1 a2 b2 c2`, `a1` most significant.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_distr::{Binomial, Distribution};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::state::{validate_density, TripartiteState};
use crate::tensor::{self, kron, ComplexMatrix, DimTriple, Subsystem};

/// Default cap on the joint (system copies × ancilla) dimension of the gate path.
pub const DEFAULT_SIZE_CAP: usize = 8192;

const UNITARY_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub fn as_f64(self) -> f64 {
        match self {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
        }
    }

    fn symbol(self) -> char {
        match self {
            Sign::Plus => '+',
            Sign::Minus => '-',
        }
    }
}

/// Choice of controlled-`R+` or controlled-`R-` for Alice, Bob and Charlie.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SignConfig {
    pub a: Sign,
    pub b: Sign,
    pub c: Sign,
}

impl SignConfig {
    pub const fn new(a: Sign, b: Sign, c: Sign) -> Self {
        Self { a, b, c }
    }

    pub const MPP: SignConfig = SignConfig::new(Sign::Minus, Sign::Plus, Sign::Plus);
    pub const MPM: SignConfig = SignConfig::new(Sign::Minus, Sign::Plus, Sign::Minus);
    pub const PPM: SignConfig = SignConfig::new(Sign::Plus, Sign::Plus, Sign::Minus);
    pub const PPP: SignConfig = SignConfig::new(Sign::Plus, Sign::Plus, Sign::Plus);

    /// All eight configurations, `+++` first, in binary order with `-` as 1.
    pub fn all() -> [SignConfig; 8] {
        let s = |bit: usize| if bit == 1 { Sign::Minus } else { Sign::Plus };
        core::array::from_fn(|i| SignConfig::new(s((i >> 2) & 1), s((i >> 1) & 1), s(i & 1)))
    }

    pub fn sign(&self, s: Subsystem) -> Sign {
        match s {
            Subsystem::A => self.a,
            Subsystem::B => self.b,
            Subsystem::C => self.c,
        }
    }

    /// Index in `0..8` matching the order of [`SignConfig::all`].
    pub fn ordinal(&self) -> usize {
        let bit = |s: Sign| usize::from(s == Sign::Minus);
        (bit(self.a) << 2) | (bit(self.b) << 1) | bit(self.c)
    }
}

impl fmt::Display for SignConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}{}", self.a.symbol(), self.b.symbol(), self.c.symbol())
    }
}

impl FromStr for SignConfig {
    type Err = Error;

    /// Accepts `-++` style strings or the letter form `mpp`.
    fn from_str(s: &str) -> Result<Self> {
        let signs: Vec<Sign> = s
            .chars()
            .map(|ch| match ch {
                '+' | 'p' | 'P' => Ok(Sign::Plus),
                '-' | 'm' | 'M' => Ok(Sign::Minus),
                _ => Err(()),
            })
            .collect::<core::result::Result<_, _>>()
            .map_err(|_| Error::InvalidParams(format!("invalid sign configuration '{s}'")))?;
        match signs.as_slice() {
            &[a, b, c] => Ok(SignConfig::new(a, b, c)),
            _ => Err(Error::InvalidParams(format!("sign configuration '{s}' needs three signs"))),
        }
    }
}

/// A pair of ancillas read out jointly.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum AncillaPair {
    AB,
    AC,
    BC,
}

impl AncillaPair {
    pub const ALL: [AncillaPair; 3] = [AncillaPair::AB, AncillaPair::AC, AncillaPair::BC];

    pub fn parties(self) -> (Subsystem, Subsystem) {
        match self {
            AncillaPair::AB => (Subsystem::A, Subsystem::B),
            AncillaPair::AC => (Subsystem::A, Subsystem::C),
            AncillaPair::BC => (Subsystem::B, Subsystem::C),
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn label(self) -> &'static str {
        match self {
            AncillaPair::AB => "ab",
            AncillaPair::AC => "ac",
            AncillaPair::BC => "bc",
        }
    }
}

/// Outcome probabilities `P(ijl)` of one three-ancilla readout, indexed by
/// `4i + 2j + l`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AncillaDistribution {
    probs: [f64; 8],
}

impl AncillaDistribution {
    pub fn new(probs: [f64; 8]) -> Result<Self> {
        if let Some(p) = probs.iter().find(|p| !(-1e-12..=1.0 + 1e-12).contains(*p)) {
            return Err(Error::InvalidParams(format!("probability {p} outside [0, 1]")));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > 1e-10 {
            return Err(Error::InvalidParams(format!("probabilities sum to {total}")));
        }
        Ok(Self { probs })
    }

    pub fn uniform() -> Self {
        Self { probs: [0.125; 8] }
    }

    pub fn point_mass(outcome: usize) -> Self {
        let mut probs = [0.0; 8];
        probs[outcome] = 1.0;
        Self { probs }
    }

    pub fn probs(&self) -> &[f64; 8] {
        &self.probs
    }

    fn signed_sum(&self, mask: usize) -> f64 {
        self.probs
            .iter()
            .enumerate()
            .map(|(i, &p)| if (i & mask).count_ones().is_multiple_of(2) { p } else { -p })
            .sum()
    }
}

fn ancilla_bit(s: Subsystem) -> usize {
    match s {
        Subsystem::A => 0b100,
        Subsystem::B => 0b010,
        Subsystem::C => 0b001,
    }
}

/// `⟨σz ⊗ σz ⊗ σz⟩`.
pub fn measure_zzz(dist: &AncillaDistribution) -> f64 {
    dist.signed_sum(0b111)
}

/// `⟨σz ⊗ σz⟩` on one ancilla pair.
pub fn measure_zz(dist: &AncillaDistribution, pair: AncillaPair) -> f64 {
    let (x, y) = pair.parties();
    dist.signed_sum(ancilla_bit(x) | ancilla_bit(y))
}

/// `⟨σz⟩` on one ancilla.
pub fn measure_z(dist: &AncillaDistribution, single: Subsystem) -> f64 {
    dist.signed_sum(ancilla_bit(single))
}

/// Joint density matrix of the three stage-one ancillas.
#[derive(Debug, Clone, PartialEq)]
pub struct AncillaState3 {
    matrix: ComplexMatrix,
}

impl AncillaState3 {
    pub fn new(matrix: ComplexMatrix) -> Result<Self> {
        if matrix.rows() != 8 || !matrix.is_square() {
            return Err(Error::InvalidDims(format!(
                "ancilla state must be 8x8, got {}x{}",
                matrix.rows(),
                matrix.cols()
            )));
        }
        validate_density(&matrix)?;
        Ok(Self { matrix })
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    /// Computational-basis readout of `a1 b1 c1`.
    pub fn distribution(&self) -> AncillaDistribution {
        diagonal_distribution(&self.matrix)
    }
}

fn diagonal_distribution(m: &ComplexMatrix) -> AncillaDistribution {
    let probs = core::array::from_fn(|i| m[(i, i)].re);
    AncillaDistribution { probs }
}

/// Counts of sampled outcomes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ShotCounts {
    pub counts: [u64; 8],
    pub total: u64,
}

impl ShotCounts {
    /// Relative frequencies as a distribution.
    pub fn empirical(&self) -> AncillaDistribution {
        let n = self.total as f64;
        AncillaDistribution { probs: core::array::from_fn(|i| self.counts[i] as f64 / n) }
    }
}

/// `n` independent categorical draws, counted as a multinomial.
///
/// The generator is `ChaCha8Rng::seed_from_u64(seed)`. Outcome `i` receives
/// `Binomial(remaining, p_i / remaining mass)` draws in outcome order, which
/// has the same law as `n` single draws at a cost independent of `n`.
pub fn sample_shots(dist: &AncillaDistribution, n: u64, seed: u64) -> Result<ShotCounts> {
    if n == 0 {
        return Err(Error::InvalidParams("shot count must be at least 1".into()));
    }
    let probs = dist.probs().map(|p| p.max(0.0));
    let mut mass: f64 = probs.iter().sum();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut counts = [0u64; 8];
    let mut remaining = n;
    for i in 0..8 {
        if remaining == 0 {
            break;
        }
        if i == 7 || mass <= 0.0 {
            counts[i] = remaining;
            break;
        }
        let q = (probs[i] / mass).clamp(0.0, 1.0);
        let c = Binomial::new(remaining, q)
            .map_err(|e| Error::Internal(format!("binomial sampler: {e}")))?
            .sample(&mut rng);
        counts[i] = c;
        remaining -= c;
        mass -= probs[i];
    }
    Ok(ShotCounts { counts, total: n })
}

fn checked_pow(base: usize, exp: usize) -> Option<usize> {
    (0..exp).try_fold(1usize, |acc, _| acc.checked_mul(base))
}

/// Permutation matrix with `m[(perm[j], j)] = 1`, i.e. `|j⟩ ↦ |perm[j]⟩`.
pub fn permutation_matrix(perm: &[usize]) -> ComplexMatrix {
    let n = perm.len();
    let mut m = ComplexMatrix::zeros(n, n);
    for (j, &i) in perm.iter().enumerate() {
        m[(i, j)] = Complex64::new(1.0, 0.0);
    }
    m
}

/// Cyclic shift on k copies of a `dloc`-dimensional system:
/// `|φ1⟩|φ2⟩…|φk⟩ ↦ |φk⟩|φ1⟩…|φ(k-1)⟩`.
pub fn shift_operator(dloc: usize, k: usize) -> Result<ComplexMatrix> {
    if dloc == 0 || k == 0 {
        return Err(Error::InvalidParams("shift operator needs dloc >= 1 and k >= 1".into()));
    }
    let n = checked_pow(dloc, k)
        .filter(|&n| n <= DEFAULT_SIZE_CAP)
        .ok_or(Error::SizeCap { required: checked_pow(dloc, k).unwrap_or(usize::MAX), cap: DEFAULT_SIZE_CAP })?;
    let dims = vec![dloc; k];
    let mut digits = vec![0; k];
    let perm: Vec<usize> = (0..n)
        .map(|j| {
            tensor::unravel(j, &dims, &mut digits);
            digits.rotate_right(1);
            tensor::ravel(&digits, &dims)
        })
        .collect();
    Ok(permutation_matrix(&perm))
}

/// Global-index permutation of `V_{X,k}` acting on `ρ^{⊗k}` in the
/// copies-outer layout: shifts the X slots of the k copies cyclically and
/// leaves every other slot alone. Returns `perm` with `V|j⟩ = |perm[j]⟩`.
pub fn copy_shift_permutation(dims: DimTriple, k: usize, party: Subsystem) -> Vec<usize> {
    let local = dims.as_array();
    let slot_dims: Vec<usize> = (0..k).flat_map(|_| local).collect();
    let n: usize = slot_dims.iter().product();
    let slots: Vec<usize> = (0..k).map(|c| 3 * c + party.index()).collect();
    let mut digits = vec![0; slot_dims.len()];
    let mut vals = vec![0; k];
    (0..n)
        .map(|j| {
            tensor::unravel(j, &slot_dims, &mut digits);
            for (v, &s) in vals.iter_mut().zip(&slots) {
                *v = digits[s];
            }
            vals.rotate_right(1);
            for (&v, &s) in vals.iter().zip(&slots) {
                digits[s] = v;
            }
            tensor::ravel(&digits, &slot_dims)
        })
        .collect()
}

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn hadamard() -> ComplexMatrix {
    let h = core::f64::consts::FRAC_1_SQRT_2;
    ComplexMatrix::from_real_rows(&[&[h, h], &[h, -h]]).expect("constant")
}

/// `(σz + σy)/√2`.
pub fn r_plus() -> ComplexMatrix {
    let h = core::f64::consts::FRAC_1_SQRT_2;
    ComplexMatrix::from_vec(2, 2, vec![c(h, 0.0), c(0.0, -h), c(0.0, h), c(-h, 0.0)]).expect("constant")
}

/// `(σz - σy)/√2`.
pub fn r_minus() -> ComplexMatrix {
    let h = core::f64::consts::FRAC_1_SQRT_2;
    ComplexMatrix::from_vec(2, 2, vec![c(h, 0.0), c(0.0, h), c(0.0, -h), c(-h, 0.0)]).expect("constant")
}

pub fn r_gate(sign: Sign) -> ComplexMatrix {
    match sign {
        Sign::Plus => r_plus(),
        Sign::Minus => r_minus(),
    }
}

fn ensure_unitary(u: &ComplexMatrix) -> Result<()> {
    if !u.is_square() {
        return Err(Error::NotUnitary { max_deviation: f64::INFINITY });
    }
    let max_deviation = u.matmul(&u.adjoint()).max_abs_diff(&ComplexMatrix::identity(u.rows()));
    if max_deviation > UNITARY_TOL {
        return Err(Error::NotUnitary { max_deviation });
    }
    Ok(())
}

/// `|0⟩⟨0| ⊗ I + |1⟩⟨1| ⊗ u`, control qubit first.
pub fn controlled_gate(u: &ComplexMatrix) -> Result<ComplexMatrix> {
    ensure_unitary(u)?;
    let p0 = ComplexMatrix::diagonal(&[1.0, 0.0]);
    let p1 = ComplexMatrix::diagonal(&[0.0, 1.0]);
    Ok(kron(&p0, &ComplexMatrix::identity(u.rows())).add(&kron(&p1, u)))
}

/// Single-qubit gate `u` on qubit `target` of an `n`-qubit register
/// (qubit 0 most significant).
pub fn embed_single(n: usize, target: usize, u: &ComplexMatrix) -> ComplexMatrix {
    let dim = 1usize << n;
    let shift = n - 1 - target;
    let mut m = ComplexMatrix::zeros(dim, dim);
    for col in 0..dim {
        let t_in = (col >> shift) & 1;
        for t_out in 0..2 {
            let row = (col & !(1 << shift)) | (t_out << shift);
            m[(row, col)] = u[(t_out, t_in)];
        }
    }
    m
}

/// Controlled single-qubit gate between arbitrary qubits of an `n`-qubit register.
pub fn embed_controlled(n: usize, control: usize, target: usize, u: &ComplexMatrix) -> Result<ComplexMatrix> {
    ensure_unitary(u)?;
    if control == target || control >= n || target >= n {
        return Err(Error::InvalidParams(format!("bad control/target ({control}, {target}) for {n} qubits")));
    }
    let dim = 1usize << n;
    let cshift = n - 1 - control;
    let tshift = n - 1 - target;
    let mut m = ComplexMatrix::zeros(dim, dim);
    for col in 0..dim {
        if (col >> cshift) & 1 == 0 {
            m[(col, col)] = Complex64::new(1.0, 0.0);
            continue;
        }
        let t_in = (col >> tshift) & 1;
        for t_out in 0..2 {
            let row = (col & !(1 << tshift)) | (t_out << tshift);
            m[(row, col)] = u[(t_out, t_in)];
        }
    }
    Ok(m)
}

fn hadamard3() -> ComplexMatrix {
    let h = hadamard();
    kron(&kron(&h, &h), &h)
}

/// Stage one with the default size cap.
pub fn first_stage(rho: &TripartiteState, k: usize) -> Result<AncillaState3> {
    first_stage_with_cap(rho, k, DEFAULT_SIZE_CAP)
}

/// Reduced ancilla state `Tr_sys[U_h U_cv U_h (ρ^{⊗k} ⊗ |000⟩⟨000|) U_h† U_cv† U_h†]`.
///
/// The Hadamard layers act on the ancillas only, and the controlled shifts
/// map the ancilla block `(x, y)` of the joint state to `V_x (·) V_y†`, where
/// `V_x = V_A^{x_a} V_B^{x_b} V_C^{x_c}`. The system register therefore
/// enters the reduced state only through `Tr(V_x ρ^{⊗k} V_y†)`, which is
/// evaluated entry by entry from `ρ` and the permutations, so the joint
/// state is never stored.
pub fn first_stage_with_cap(rho: &TripartiteState, k: usize, cap: usize) -> Result<AncillaState3> {
    if k == 0 {
        return Err(Error::InvalidParams("copy count must be at least 1".into()));
    }
    let dims = rho.dims();
    let d = dims.total();
    let sys = checked_pow(d, k).ok_or(Error::SizeCap { required: usize::MAX, cap })?;
    let required = sys.saturating_mul(8);
    if required > cap {
        return Err(Error::SizeCap { required, cap });
    }

    // ancilla after the first Hadamard layer
    let mut anc = ComplexMatrix::zeros(8, 8);
    anc[(0, 0)] = Complex64::new(1.0, 0.0);
    let h3 = hadamard3();
    let anc = anc.conjugate_by(&h3);

    // branch permutations V_x and their inverses
    let shifts: Vec<Vec<usize>> = Subsystem::ALL.iter().map(|&s| copy_shift_permutation(dims, k, s)).collect();
    let branch: Vec<Vec<usize>> = (0..8usize)
        .map(|x| {
            let mut perm: Vec<usize> = (0..sys).collect();
            for (s, shift) in Subsystem::ALL.iter().zip(&shifts) {
                if x & ancilla_bit(*s) != 0 {
                    perm = perm.iter().map(|&j| shift[j]).collect();
                }
            }
            perm
        })
        .collect();
    let inverse: Vec<Vec<usize>> = branch
        .iter()
        .map(|p| {
            let mut inv = vec![0; p.len()];
            for (j, &i) in p.iter().enumerate() {
                inv[i] = j;
            }
            inv
        })
        .collect();

    let m = rho.matrix();
    let copy_entry = |row: usize, col: usize| -> Complex64 {
        let (mut r, mut cl) = (row, col);
        let mut acc = Complex64::new(1.0, 0.0);
        for _ in 0..k {
            acc *= m[(r % d, cl % d)];
            r /= d;
            cl /= d;
        }
        acc
    };

    let mut traced = ComplexMatrix::zeros(8, 8);
    for x in 0..8 {
        for y in 0..8 {
            let coeff = anc[(x, y)];
            if coeff.norm() == 0.0 {
                continue;
            }
            // Tr(V_x σ V_y†) = Σ_i σ[V_x^{-1} i, V_y^{-1} i]
            let t: Complex64 = (0..sys).map(|i| copy_entry(inverse[x][i], inverse[y][i])).sum();
            traced[(x, y)] = coeff * t;
        }
    }
    let out = traced.conjugate_by(&h3);
    AncillaState3::new(clean_hermitian(out))
}

/// Stage two: `a1 b1 c1` joined with fresh `a2 b2 c2` in `|000⟩`, Hadamards on
/// the new ancillas, controlled-`R` from each new ancilla onto its stage-one
/// partner, Hadamards, then a diagonal readout of `a2 b2 c2`.
pub fn second_stage(first: &AncillaState3, config: SignConfig) -> AncillaDistribution {
    let mut fresh = ComplexMatrix::zeros(8, 8);
    fresh[(0, 0)] = Complex64::new(1.0, 0.0);
    let input = kron(first.matrix(), &fresh);
    let h = hadamard();
    let mut uh = ComplexMatrix::identity(64);
    for q in 3..6 {
        uh = embed_single(6, q, &h).matmul(&uh);
    }
    let mut ucr = ComplexMatrix::identity(64);
    for s in Subsystem::ALL {
        let gate = embed_controlled(6, 3 + s.index(), s.index(), &r_gate(config.sign(s)))
            .expect("R gates are unitary");
        ucr = gate.matmul(&ucr);
    }
    let u = uh.matmul(&ucr).matmul(&uh);
    let out = input.conjugate_by(&u);
    let reduced = tensor::partial_trace(&out, &[8, 8], &[1]).expect("64 = 8 x 8");
    diagonal_distribution(&reduced)
}

/// Symmetrizes away rounding-level anti-hermitian residue.
pub(crate) fn clean_hermitian(m: ComplexMatrix) -> ComplexMatrix {
    m.add(&m.adjoint()).scale(Complex64::new(0.5, 0.0))
}

/// Human-readable name of an outcome `ijl`.
pub fn outcome_label(i: usize) -> String {
    format!("{}{}{}", (i >> 2) & 1, (i >> 1) & 1, i & 1)
}
