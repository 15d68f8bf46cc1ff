//! Closed-form ancilla statistics and recovery of partial-transpose moments.
//!
//! For a copy count k the stage-one ancilla state depends on fourteen
//! primitives built from trace powers of `ρ`, its reduced matrices and their
//! partial transposes:
//!
//! * `α`: signed sums of `Tr ρ_A^k`, `Tr ρ_B^k`, `Tr ρ_C^k`,
//! * `β1..β3 = ½ Tr ρ_XY^k`, `β4..β6 = ½ Tr (ρ_XY^{T_X})^k` for XY = AB, AC, BC,
//! * `γ1 = ¼ Tr ρ^k`, `γ2..γ4 = ¼ Tr (ρ^{T_X})^k` for X = A, B, C.
//!
//! Group one reads the stage-one ancillas directly. Every other group runs
//! stage two with a [`SignConfig`] whose [`SignPattern`] says which signed
//! combination of γ appears in the three-ancilla correlator and whether each
//! ancilla pair reports the plain or the transposed β.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::ToString;
use alloc::vec::Vec;
use core::fmt;

use once_cell::race::OnceBox;

use crate::error::{Error, Result};
use crate::network::{
    self, measure_z, measure_zz, measure_zzz, AncillaDistribution, AncillaPair, AncillaState3, Sign, SignConfig,
};
use crate::state::{random_state, TripartiteState};
use crate::tensor::{self, trace_power, ComplexMatrix, DimTriple, Subsystem};

const SQRT2: f64 = core::f64::consts::SQRT_2;
const FRAC_1_SQRT2: f64 = core::f64::consts::FRAC_1_SQRT_2;

/// The α, β, γ primitives for one copy count.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentPrimitives {
    pub k: usize,
    pub alpha: [f64; 4],
    pub beta: [f64; 6],
    pub gamma: [f64; 4],
}

impl MomentPrimitives {
    /// `Tr ρ_X^k` recovered from the α combinations.
    pub fn single_trace(&self, s: Subsystem) -> f64 {
        let a = &self.alpha;
        match s {
            Subsystem::A => 0.5 * (a[0] + a[3]),
            Subsystem::B => 0.5 * (a[0] - a[2]),
            Subsystem::C => 0.5 * (a[0] - a[1]),
        }
    }

    /// β for a pair, plain or transposed.
    pub fn pair_beta(&self, pair: AncillaPair, readout: PairReadout) -> f64 {
        match readout {
            PairReadout::Plain => self.beta[pair.index()],
            PairReadout::Transposed => self.beta[3 + pair.index()],
        }
    }
}

/// Direct evaluation of the primitives from trace powers.
pub fn primitives(rho: &TripartiteState, k: usize) -> Result<MomentPrimitives> {
    if k == 0 {
        return Err(Error::InvalidParams("copy count must be at least 1".into()));
    }
    let kp = k as u32;
    let dims = rho.dims();
    let single = |s: Subsystem| trace_power(&rho.reduced(&[s]), kp);
    let (ta, tb, tc) = (single(Subsystem::A)?, single(Subsystem::B)?, single(Subsystem::C)?);
    let mut beta = [0.0; 6];
    for pair in AncillaPair::ALL {
        let (x, y) = pair.parties();
        let reduced = rho.reduced(&[x, y]);
        let pair_dims = [dims.local(x), dims.local(y)];
        let transposed = tensor::partial_transpose(&reduced, &pair_dims, 0)?;
        beta[pair.index()] = 0.5 * trace_power(&reduced, kp)?;
        beta[3 + pair.index()] = 0.5 * trace_power(&transposed, kp)?;
    }
    let mut gamma = [0.25 * trace_power(rho.matrix(), kp)?, 0.0, 0.0, 0.0];
    for s in Subsystem::ALL {
        gamma[1 + s.index()] = 0.25 * trace_power(&rho.partial_transpose(s), kp)?;
    }
    Ok(MomentPrimitives { k, alpha: [ta + tb + tc, ta + tb - tc, ta - tb + tc, ta - tb - tc], beta, gamma })
}

/// The fourteen μ values parametrizing the stage-one ancilla state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MuVector {
    pub mu: [f64; 14],
}

pub fn mu_vector(p: &MomentPrimitives) -> MuVector {
    let [a1, a2, a3, a4] = p.alpha;
    let [b1, b2, b3, b4, b5, b6] = p.beta;
    let [g1, g2, g3, g4] = p.gamma;
    let g = g1 + g2 + g3 + g4;
    // pair correlators of group one: β_plain + β_transposed
    let (ab, ac, bc) = (b1 + b4, b2 + b5, b3 + b6);
    MuVector {
        mu: [
            1.0 + a1 + ab + ac + bc + g,
            1.0 + a2 + ab - ac - bc - g,
            1.0 + a3 - ab + ac - bc - g,
            1.0 + a4 - ab - ac + bc + g,
            1.0 - a4 - ab - ac + bc - g,
            1.0 - a3 - ab + ac - bc + g,
            1.0 - a2 + ab - ac - bc + g,
            1.0 - a1 + ab + ac + bc - g,
            b3 - b6 + g1 + g2 - g3 - g4,
            b2 - b5 + g1 - g2 + g3 - g4,
            b1 - b4 + g1 - g2 - g3 + g4,
            b1 - b4 - g1 + g2 + g3 - g4,
            b2 - b5 - g1 + g2 - g3 + g4,
            b3 - b6 - g1 - g2 + g3 + g4,
        ],
    }
}

impl MuVector {
    /// The 8×8 stage-one ancilla matrix (1/8 times the μ pattern).
    pub fn ancilla_matrix(&self) -> ComplexMatrix {
        let m = |i: usize| self.mu[i - 1];
        let z = 0.0;
        #[rustfmt::skip]
        let rows: [[f64; 8]; 8] = [
            [m(1),   z,      z,      m(9),   z,      m(10),  m(11),  z    ],
            [z,      m(2),   -m(9),  z,      -m(10), z,      z,      m(12)],
            [z,      -m(9),  m(3),   z,      -m(11), z,      z,      m(13)],
            [m(9),   z,      z,      m(4),   z,      -m(12), -m(13), z    ],
            [z,      -m(10), -m(11), z,      m(5),   z,      z,      m(14)],
            [m(10),  z,      z,      -m(12), z,      m(6),   -m(14), z    ],
            [m(11),  z,      z,      -m(13), z,      -m(14), m(7),   z    ],
            [z,      m(12),  m(13),  z,      m(14),  z,      z,      m(8) ],
        ];
        let refs: Vec<&[f64]> = rows.iter().map(|r| r.as_slice()).collect();
        ComplexMatrix::from_real_rows(&refs)
            .expect("constant shape")
            .scale(num_complex::Complex64::new(0.125, 0.0))
    }

    pub fn ancilla_state(&self) -> Result<AncillaState3> {
        AncillaState3::new(self.ancilla_matrix())
    }

    pub fn distribution(&self) -> Result<AncillaDistribution> {
        AncillaDistribution::new(core::array::from_fn(|i| self.mu[i] / 8.0))
    }
}

/// Which β a stage-two ancilla pair reports.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PairReadout {
    Plain,
    Transposed,
}

impl PairReadout {
    pub fn other(self) -> Self {
        match self {
            PairReadout::Plain => PairReadout::Transposed,
            PairReadout::Transposed => PairReadout::Plain,
        }
    }
}

/// Stage-two readout pattern of one sign configuration: the three-ancilla
/// correlator equals `Σ_i gamma[i] γ_i / √2`, and pair `p` reports
/// `pairs[p]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SignPattern {
    pub gamma: [Sign; 4],
    pub pairs: [PairReadout; 3],
}

impl SignPattern {
    /// `Γ = Σ ε_i γ_i`.
    pub fn gamma_combo(&self, gamma: &[f64; 4]) -> f64 {
        self.gamma.iter().zip(gamma).map(|(s, g)| s.as_f64() * g).sum()
    }

    /// Index of the single negative γ coefficient, if exactly one exists.
    pub fn isolated_gamma(&self) -> Option<usize> {
        let neg: Vec<usize> = (0..4).filter(|&i| self.gamma[i] == Sign::Minus).collect();
        match neg.as_slice() {
            &[j] => Some(j),
            _ => None,
        }
    }
}

/// Readout patterns indexed by sign configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationTable {
    patterns: [Option<SignPattern>; 8],
}

impl CalibrationTable {
    /// The three configurations whose patterns are stated in closed form.
    pub fn closed_form() -> Self {
        use PairReadout::{Plain, Transposed};
        use Sign::{Minus as M, Plus as P};
        let mut patterns = [None; 8];
        patterns[SignConfig::MPP.ordinal()] =
            Some(SignPattern { gamma: [P, M, P, P], pairs: [Plain, Plain, Transposed] });
        patterns[SignConfig::MPM.ordinal()] =
            Some(SignPattern { gamma: [P, P, M, P], pairs: [Plain, Transposed, Plain] });
        patterns[SignConfig::PPM.ordinal()] =
            Some(SignPattern { gamma: [P, P, P, M], pairs: [Transposed, Plain, Plain] });
        Self { patterns }
    }

    /// All eight configurations, calibrated once against the gate-level
    /// network and shared afterwards.
    pub fn calibrated() -> Result<&'static CalibrationTable> {
        static TABLE: OnceBox<CalibrationTable> = OnceBox::new();
        if let Some(t) = TABLE.get() {
            return Ok(t);
        }
        let mut patterns = [None; 8];
        for cfg in SignConfig::all() {
            patterns[cfg.ordinal()] = Some(calibrate_config(cfg)?);
        }
        let table = CalibrationTable { patterns };
        let closed = Self::closed_form();
        for cfg in SignConfig::all() {
            if let Some(expected) = closed.get(cfg) {
                if table.get(cfg) != Some(expected) {
                    return Err(Error::Internal(format!(
                        "calibrated pattern for {cfg} disagrees with the closed form"
                    )));
                }
            }
        }
        Ok(TABLE.get_or_init(|| alloc::boxed::Box::new(table)))
    }

    pub fn get(&self, cfg: SignConfig) -> Option<SignPattern> {
        self.patterns[cfg.ordinal()]
    }

    pub fn pattern(&self, cfg: SignConfig) -> Result<SignPattern> {
        self.get(cfg).ok_or(Error::NotCalibrated(cfg))
    }
}

/// Calibration inputs: a handful of seeded full-rank qubit states at k = 3.
const CALIBRATION_SEEDS: [u64; 4] = [0xca1_0001, 0xca1_0002, 0xca1_0003, 0xca1_0004];

/// Determines the readout pattern of a configuration by running the
/// gate-level stage two on stage-one states from states with linearly
/// independent γ vectors and solving for the coefficients.
pub fn calibrate_config(config: SignConfig) -> Result<SignPattern> {
    let mut gammas = [[0.0; 4]; 4];
    let mut zzz = [0.0; 4];
    let mut pair_rows: [Vec<([f64; 2], f64)>; 3] = [Vec::new(), Vec::new(), Vec::new()];
    for (row, &seed) in CALIBRATION_SEEDS.iter().enumerate() {
        let rho = random_state(DimTriple::QUBITS, 8, seed)?;
        let p = primitives(&rho, 3)?;
        let dist = network::second_stage(&network::first_stage(&rho, 3)?, config);
        gammas[row] = p.gamma;
        zzz[row] = measure_zzz(&dist);
        for pair in AncillaPair::ALL {
            let plain = p.pair_beta(pair, PairReadout::Plain);
            let transposed = p.pair_beta(pair, PairReadout::Transposed);
            pair_rows[pair.index()].push(([plain, transposed], measure_zz(&dist, pair)));
        }
    }

    let coeffs = solve_linear::<4>(gammas, zzz)
        .ok_or_else(|| Error::Internal(format!("singular γ calibration system for {config}")))?;
    let mut gamma = [Sign::Plus; 4];
    for (g, &c) in gamma.iter_mut().zip(&coeffs) {
        *g = unit_sign(c * SQRT2)
            .ok_or_else(|| Error::Internal(format!("γ coefficient {c} for {config} is not ±1/√2")))?;
    }

    let mut pairs = [PairReadout::Plain; 3];
    for pair in AncillaPair::ALL {
        let rows = &pair_rows[pair.index()];
        let sol = solve_linear::<2>([rows[0].0, rows[1].0], [rows[0].1, rows[1].1])
            .ok_or_else(|| Error::Internal(format!("singular β calibration system for {config}")))?;
        let close = |x: f64, y: f64| (x - y).abs() < 1e-6;
        pairs[pair.index()] = match (sol[0], sol[1]) {
            (a, b) if close(a, 1.0) && close(b, 0.0) => PairReadout::Plain,
            (a, b) if close(a, 0.0) && close(b, 1.0) => PairReadout::Transposed,
            (a, b) => {
                return Err(Error::Internal(format!(
                    "pair {} of {config} mixes β readouts ({a}, {b})",
                    pair.label()
                )))
            }
        };
    }
    Ok(SignPattern { gamma, pairs })
}

fn unit_sign(x: f64) -> Option<Sign> {
    if (x - 1.0).abs() < 1e-6 {
        Some(Sign::Plus)
    } else if (x + 1.0).abs() < 1e-6 {
        Some(Sign::Minus)
    } else {
        None
    }
}

/// Gaussian elimination with partial pivoting; `None` when singular.
fn solve_linear<const N: usize>(a: [[f64; N]; N], b: [f64; N]) -> Option<[f64; N]> {
    let m = nalgebra::DMatrix::<f64>::from_fn(N, N, |i, j| a[i][j]);
    let sv = m.clone().singular_values();
    if sv.min() <= 1e-12 * sv.max() {
        return None;
    }
    let x = m.lu().solve(&nalgebra::DVector::<f64>::from_fn(N, |i, _| b[i]))?;
    Some(core::array::from_fn(|i| x[i]))
}

/// Diagonal of the stage-two ancilla state, scaled by 8.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NuVector {
    pub nu: [f64; 8],
    pub config: SignConfig,
    /// `Γ = Σ ε_i γ_i` for this configuration.
    pub gamma_combo: f64,
}

impl NuVector {
    pub fn distribution(&self) -> Result<AncillaDistribution> {
        AncillaDistribution::new(core::array::from_fn(|i| self.nu[i] / 8.0))
    }
}

pub fn nu_vector(p: &MomentPrimitives, config: SignConfig, table: &CalibrationTable) -> Result<NuVector> {
    let pattern = table.pattern(config)?;
    let gamma_combo = pattern.gamma_combo(&p.gamma);
    let pair = |pr: AncillaPair| p.pair_beta(pr, pattern.pairs[pr.index()]);
    let (ab, ac, bc) = (pair(AncillaPair::AB), pair(AncillaPair::AC), pair(AncillaPair::BC));
    let [a1, a2, a3, a4] = p.alpha.map(|a| a * FRAC_1_SQRT2);
    let g = gamma_combo * FRAC_1_SQRT2;
    let nu = [
        1.0 + a1 + ab + ac + bc + g,
        1.0 + a2 + ab - ac - bc - g,
        1.0 + a3 - ab + ac - bc - g,
        1.0 + a4 - ab - ac + bc + g,
        1.0 - a4 - ab - ac + bc - g,
        1.0 - a3 - ab + ac - bc + g,
        1.0 - a2 + ab - ac - bc + g,
        1.0 - a1 + ab + ac + bc - g,
    ];
    Ok(NuVector { nu, config, gamma_combo })
}

/// A measurement group: the bare stage-one readout, or stage two with a
/// sign configuration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Group {
    First,
    Second(SignConfig),
}

impl Group {
    /// Smallest copy count at which the group carries information.
    pub fn min_k(self) -> usize {
        match self {
            Group::First => 2,
            Group::Second(_) => 3,
        }
    }
}

impl fmt::Display for Group {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Group::First => f.write_str("1"),
            Group::Second(cfg) => write!(f, "{cfg}"),
        }
    }
}

impl core::str::FromStr for Group {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "1" | "first" => Ok(Group::First),
            other => other.parse().map(Group::Second),
        }
    }
}

/// Correlators read from one ancilla distribution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GroupExpectations {
    pub zzz: f64,
    /// Indexed by [`AncillaPair::index`].
    pub zz: [f64; 3],
    /// Indexed by [`Subsystem::index`].
    pub z: [f64; 3],
}

impl GroupExpectations {
    pub fn from_distribution(dist: &AncillaDistribution) -> Self {
        Self {
            zzz: measure_zzz(dist),
            zz: AncillaPair::ALL.map(|p| measure_zz(dist, p)),
            z: Subsystem::ALL.map(|s| measure_z(dist, s)),
        }
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        let mut d = (self.zzz - other.zzz).abs();
        for i in 0..3 {
            d = d.max((self.zz[i] - other.zz[i]).abs()).max((self.z[i] - other.z[i]).abs());
        }
        d
    }
}

/// Analytic outcome distribution of a group.
pub fn group_distribution(
    rho: &TripartiteState,
    k: usize,
    group: Group,
    table: &CalibrationTable,
) -> Result<AncillaDistribution> {
    let p = primitives(rho, k)?;
    match group {
        Group::First => mu_vector(&p).distribution(),
        Group::Second(cfg) => nu_vector(&p, cfg, table)?.distribution(),
    }
}

/// Analytic correlators of a group, read off the μ/ν distributions.
pub fn group_expectations(
    rho: &TripartiteState,
    k: usize,
    group: Group,
    table: &CalibrationTable,
) -> Result<GroupExpectations> {
    Ok(GroupExpectations::from_distribution(&group_distribution(rho, k, group, table)?))
}

/// Gate-level outcome distribution of a group (subject to the size cap).
pub fn gate_distribution(rho: &TripartiteState, k: usize, group: Group, cap: usize) -> Result<AncillaDistribution> {
    let first = network::first_stage_with_cap(rho, k, cap)?;
    Ok(match group {
        Group::First => first.distribution(),
        Group::Second(cfg) => network::second_stage(&first, cfg),
    })
}

/// Which negativities (or majorization spectra) a run targets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DetectionMode {
    Full,
    ASide,
    BSide,
    CSide,
    Majorization,
}

impl DetectionMode {
    pub fn groups(self) -> Vec<Group> {
        let second = match self {
            DetectionMode::Full => return [Group::First, Group::Second(SignConfig::MPP), Group::Second(SignConfig::MPM), Group::Second(SignConfig::PPM)].to_vec(),
            DetectionMode::ASide => SignConfig::MPP,
            DetectionMode::BSide => SignConfig::MPM,
            DetectionMode::CSide => SignConfig::PPM,
            DetectionMode::Majorization => SignConfig::PPP,
        };
        [Group::First, Group::Second(second)].to_vec()
    }

    /// Matrices whose moments the mode recovers.
    pub fn labels(self) -> &'static [MatrixLabel] {
        use MatrixLabel::*;
        match self {
            DetectionMode::Full => &[AbcTa, AbcTb, AbcTc, AbTa, AcTa, BcTb],
            DetectionMode::ASide => &[AbcTa, AbTa, AcTa],
            DetectionMode::BSide => &[AbcTb, AbTa, BcTb],
            DetectionMode::CSide => &[AbcTc, AcTa, BcTb],
            DetectionMode::Majorization => &[Abc, Ab, Ac, Bc, A, B, C],
        }
    }

    /// Number of three-ancilla correlators measured for total dimension `d`.
    pub fn parameter_count(self, d: usize) -> usize {
        self.groups().iter().map(|g| (g.min_k()..=d).count()).sum()
    }

    pub fn name(self) -> &'static str {
        match self {
            DetectionMode::Full => "full",
            DetectionMode::ASide => "a-side",
            DetectionMode::BSide => "b-side",
            DetectionMode::CSide => "c-side",
            DetectionMode::Majorization => "majorization",
        }
    }
}

impl core::str::FromStr for DetectionMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "full" => DetectionMode::Full,
            "a-side" => DetectionMode::ASide,
            "b-side" => DetectionMode::BSide,
            "c-side" => DetectionMode::CSide,
            "majorization" => DetectionMode::Majorization,
            other => return Err(Error::InvalidParams(format!("unknown mode '{other}'"))),
        })
    }
}

/// How expectations are produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MeasurementPath {
    /// Closed-form μ/ν distributions.
    Analytic,
    /// Gate-level network, limited by a size cap.
    Gate { cap: usize },
    /// Finite shots sampled from the analytic distributions.
    Shots { n: u64, seed: u64 },
}

/// Seed for the `(group, k)` sampling stream of a shots run (SplitMix64 finalizer).
pub fn stream_seed(seed: u64, group: Group, k: usize) -> u64 {
    let tag = match group {
        Group::First => 0u64,
        Group::Second(cfg) => 1 + cfg.ordinal() as u64,
    };
    let mut z = seed ^ (tag << 40) ^ (k as u64) ^ 0x9e37_79b9_7f4a_7c15;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Expectations per `(group, k)`, optionally tagged with the shot count that
/// produced them.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementSet {
    pub dims: DimTriple,
    pub shots: Option<u64>,
    pub entries: BTreeMap<(Group, usize), GroupExpectations>,
}

impl MeasurementSet {
    pub fn new(dims: DimTriple) -> Self {
        Self { dims, shots: None, entries: BTreeMap::new() }
    }

    pub fn insert(&mut self, group: Group, k: usize, e: GroupExpectations) {
        self.entries.insert((group, k), e);
    }

    pub fn get(&self, group: Group, k: usize) -> Option<&GroupExpectations> {
        self.entries.get(&(group, k))
    }

    fn require(&self, group: Group, k: usize) -> Result<&GroupExpectations> {
        self.get(group, k).ok_or_else(|| Error::MissingData { group: group.to_string(), k })
    }

    /// Number of `(group, k)` three-ancilla correlators present.
    pub fn parameter_count(&self) -> usize {
        self.entries.keys().filter(|(g, k)| *k >= g.min_k()).count()
    }

    /// Standard error of a ±1-valued correlator estimate.
    fn std_err(&self, e: f64) -> f64 {
        match self.shots {
            Some(n) => libm::sqrt((1.0 - e * e).max(0.0) / n as f64),
            None => 0.0,
        }
    }

    /// Checks that every group of the mode is present for all k it needs.
    pub fn check_complete(&self, mode: DetectionMode) -> Result<()> {
        let d = self.dims.total();
        for g in mode.groups() {
            for k in g.min_k()..=d {
                self.require(g, k)?;
            }
        }
        Ok(())
    }
}

/// Runs the network for every `(group, k)` the mode needs.
pub fn collect_measurements(
    rho: &TripartiteState,
    mode: DetectionMode,
    path: MeasurementPath,
    table: &CalibrationTable,
) -> Result<MeasurementSet> {
    let dims = rho.dims();
    let mut set = MeasurementSet::new(dims);
    if let MeasurementPath::Shots { n, .. } = path {
        set.shots = Some(n);
    }
    for g in mode.groups() {
        for k in g.min_k()..=dims.total() {
            let dist = match path {
                MeasurementPath::Analytic => group_distribution(rho, k, g, table)?,
                MeasurementPath::Gate { cap } => gate_distribution(rho, k, g, cap)?,
                MeasurementPath::Shots { n, seed } => {
                    let exact = group_distribution(rho, k, g, table)?;
                    network::sample_shots(&exact, n, stream_seed(seed, g, k))?.empirical()
                }
            };
            set.insert(g, k, GroupExpectations::from_distribution(&dist));
        }
    }
    Ok(set)
}

/// Matrices whose trace powers the protocol reaches.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum MatrixLabel {
    Abc,
    AbcTa,
    AbcTb,
    AbcTc,
    Ab,
    AbTa,
    Ac,
    AcTa,
    Bc,
    BcTb,
    A,
    B,
    C,
}

impl MatrixLabel {
    pub const ALL: [MatrixLabel; 13] = [
        MatrixLabel::Abc,
        MatrixLabel::AbcTa,
        MatrixLabel::AbcTb,
        MatrixLabel::AbcTc,
        MatrixLabel::Ab,
        MatrixLabel::AbTa,
        MatrixLabel::Ac,
        MatrixLabel::AcTa,
        MatrixLabel::Bc,
        MatrixLabel::BcTb,
        MatrixLabel::A,
        MatrixLabel::B,
        MatrixLabel::C,
    ];

    pub fn name(self) -> &'static str {
        match self {
            MatrixLabel::Abc => "ABC",
            MatrixLabel::AbcTa => "ABC^TA",
            MatrixLabel::AbcTb => "ABC^TB",
            MatrixLabel::AbcTc => "ABC^TC",
            MatrixLabel::Ab => "AB",
            MatrixLabel::AbTa => "AB^TA",
            MatrixLabel::Ac => "AC",
            MatrixLabel::AcTa => "AC^TA",
            MatrixLabel::Bc => "BC",
            MatrixLabel::BcTb => "BC^TB",
            MatrixLabel::A => "A",
            MatrixLabel::B => "B",
            MatrixLabel::C => "C",
        }
    }

    /// Parties the matrix lives on.
    pub fn parties(self) -> &'static [Subsystem] {
        use Subsystem as S;
        match self {
            MatrixLabel::Abc | MatrixLabel::AbcTa | MatrixLabel::AbcTb | MatrixLabel::AbcTc => &[S::A, S::B, S::C],
            MatrixLabel::Ab | MatrixLabel::AbTa => &[S::A, S::B],
            MatrixLabel::Ac | MatrixLabel::AcTa => &[S::A, S::C],
            MatrixLabel::Bc | MatrixLabel::BcTb => &[S::B, S::C],
            MatrixLabel::A => &[S::A],
            MatrixLabel::B => &[S::B],
            MatrixLabel::C => &[S::C],
        }
    }

    /// Transposed party, if any.
    pub fn transposed(self) -> Option<Subsystem> {
        match self {
            MatrixLabel::AbcTa | MatrixLabel::AbTa | MatrixLabel::AcTa => Some(Subsystem::A),
            MatrixLabel::AbcTb | MatrixLabel::BcTb => Some(Subsystem::B),
            MatrixLabel::AbcTc => Some(Subsystem::C),
            _ => None,
        }
    }

    pub fn dim(self, dims: DimTriple) -> usize {
        self.parties().iter().map(|&s| dims.local(s)).product()
    }

    fn pair(self) -> Option<AncillaPair> {
        match self {
            MatrixLabel::Ab | MatrixLabel::AbTa => Some(AncillaPair::AB),
            MatrixLabel::Ac | MatrixLabel::AcTa => Some(AncillaPair::AC),
            MatrixLabel::Bc | MatrixLabel::BcTb => Some(AncillaPair::BC),
            _ => None,
        }
    }

    /// The matrix itself, computed directly from the state.
    pub fn matrix_of(self, rho: &TripartiteState) -> ComplexMatrix {
        let parties = self.parties();
        let reduced =
            if parties.len() == 3 { rho.matrix().clone() } else { rho.reduced(parties) };
        match self.transposed() {
            None => reduced,
            Some(t) => {
                let dims = rho.dims();
                let local: Vec<usize> = parties.iter().map(|&s| dims.local(s)).collect();
                let slot = parties.iter().position(|&s| s == t).expect("transposed party is present");
                tensor::partial_transpose(&reduced, &local, slot).expect("dimensions are consistent")
            }
        }
    }
}

impl fmt::Display for MatrixLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A recovered trace power with its standard error (zero when exact).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Moment {
    pub value: f64,
    pub std_err: f64,
}

impl Moment {
    pub const fn exact(value: f64) -> Self {
        Self { value, std_err: 0.0 }
    }
}

/// Recovered `Tr M^k` per matrix label and k.
#[derive(Debug, Clone, PartialEq)]
pub struct PTMomentTable {
    pub dims: DimTriple,
    pub entries: BTreeMap<(MatrixLabel, usize), Moment>,
}

impl PTMomentTable {
    pub fn get(&self, label: MatrixLabel, k: usize) -> Option<Moment> {
        self.entries.get(&(label, k)).copied()
    }

    /// `Tr M^1 .. Tr M^n` for `n = dim M`, if all are present.
    pub fn power_sums(&self, label: MatrixLabel) -> Option<Vec<Moment>> {
        (1..=label.dim(self.dims)).map(|k| self.get(label, k)).collect()
    }

    pub fn labels(&self) -> Vec<MatrixLabel> {
        let mut out: Vec<MatrixLabel> = self.entries.keys().map(|(l, _)| *l).collect();
        out.dedup();
        out
    }
}

/// Preference order of stage-two groups when several can supply a moment.
const GROUP_PREFERENCE: [SignConfig; 4] = [SignConfig::MPP, SignConfig::MPM, SignConfig::PPM, SignConfig::PPP];

fn available_configs(set: &MeasurementSet) -> Vec<SignConfig> {
    let mut present: Vec<SignConfig> = set
        .entries
        .keys()
        .filter_map(|(g, _)| match g {
            Group::Second(cfg) => Some(*cfg),
            Group::First => None,
        })
        .collect();
    present.sort_by_key(|cfg| GROUP_PREFERENCE.iter().position(|p| p == cfg).unwrap_or(usize::MAX));
    present.dedup();
    present
}

/// Inverts the measured correlators into trace powers of the mode's matrices.
///
/// * k = 1: unit trace, inserted without measurement.
/// * k = 2: the shift is hermitian, so every partial transpose shares the
///   plain second moment: the group-one correlators give them directly.
/// * k ≥ 3, tripartite: a configuration whose γ pattern has its single minus
///   sign on index j isolates `4γ_j = 2·zzz₁ − 2√2·zzz_cfg`.
/// * k ≥ 3, pairs: group one gives `β_plain + β_T`; a stage-two pair reports
///   one of them, leaving the other as the difference.
/// * single parties: `Tr ρ_X^k` is the group-one single-ancilla correlator.
pub fn recover_pt_moments(
    set: &MeasurementSet,
    mode: DetectionMode,
    table: &CalibrationTable,
) -> Result<PTMomentTable> {
    set.check_complete(mode)?;
    let dims = set.dims;
    let configs = available_configs(set);
    let mut entries = BTreeMap::new();
    for &label in mode.labels() {
        for k in 1..=label.dim(dims) {
            let m = recover_one(set, label, k, &configs, table)?;
            entries.insert((label, k), m);
        }
    }
    Ok(PTMomentTable { dims, entries })
}

fn gamma_index(label: MatrixLabel) -> Option<usize> {
    match label {
        MatrixLabel::Abc => Some(0),
        MatrixLabel::AbcTa => Some(1),
        MatrixLabel::AbcTb => Some(2),
        MatrixLabel::AbcTc => Some(3),
        _ => None,
    }
}

fn recover_one(
    set: &MeasurementSet,
    label: MatrixLabel,
    k: usize,
    configs: &[SignConfig],
    table: &CalibrationTable,
) -> Result<Moment> {
    if k == 1 {
        return Ok(Moment::exact(1.0));
    }
    let first = set.require(Group::First, k)?;
    let err = |e: f64| set.std_err(e);
    let quad = |a: f64, b: f64| libm::sqrt(a * a + b * b);

    if let Some(single) = match label {
        MatrixLabel::A => Some(Subsystem::A),
        MatrixLabel::B => Some(Subsystem::B),
        MatrixLabel::C => Some(Subsystem::C),
        _ => None,
    } {
        let v = first.z[single.index()];
        return Ok(Moment { value: v, std_err: err(v) });
    }

    if let Some(j) = gamma_index(label) {
        if k == 2 {
            return Ok(Moment { value: first.zzz, std_err: err(first.zzz) });
        }
        for &cfg in configs {
            let pattern = table.pattern(cfg)?;
            if pattern.isolated_gamma() == Some(j) {
                let second = set.require(Group::Second(cfg), k)?;
                let value = 2.0 * first.zzz - 2.0 * SQRT2 * second.zzz;
                let std_err = quad(2.0 * err(first.zzz), 2.0 * SQRT2 * err(second.zzz));
                return Ok(Moment { value, std_err });
            }
        }
        let wanted = if j == 0 { SignConfig::PPP } else { GROUP_PREFERENCE[j - 1] };
        return Err(Error::MissingData { group: wanted.to_string(), k });
    }

    let pair = label.pair().expect("remaining labels are pair matrices");
    let target = if label.transposed().is_some() { PairReadout::Transposed } else { PairReadout::Plain };
    let sum = first.zz[pair.index()];
    if k == 2 {
        return Ok(Moment { value: sum, std_err: err(sum) });
    }
    let cfg = *configs
        .first()
        .ok_or_else(|| Error::MissingData { group: SignConfig::MPP.to_string(), k })?;
    let reported = table.pattern(cfg)?.pairs[pair.index()];
    let second = set.require(Group::Second(cfg), k)?.zz[pair.index()];
    Ok(if reported == target {
        Moment { value: 2.0 * second, std_err: 2.0 * err(second) }
    } else {
        Moment { value: 2.0 * (sum - second), std_err: 2.0 * quad(err(sum), err(second)) }
    })
}

/// Direct trace powers of the mode's matrices, for comparison.
pub fn direct_moments(rho: &TripartiteState, labels: &[MatrixLabel]) -> Result<PTMomentTable> {
    let dims = rho.dims();
    let mut entries = BTreeMap::new();
    for &label in labels {
        let m = label.matrix_of(rho);
        for k in 1..=label.dim(dims) {
            entries.insert((label, k), Moment::exact(trace_power(&m, k as u32)?));
        }
    }
    Ok(PTMomentTable { dims, entries })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::state::{bound_state, maximally_mixed};

    #[test]
    fn primitives_of_bound_state_at_k3() {
        let p = primitives(&bound_state(), 3).unwrap();
        let expect = [1.0 / 72.0, 1.0 / 144.0, 1.0 / 72.0, 1.0 / 72.0];
        for (g, e) in p.gamma.iter().zip(expect) {
            assert!((g - e).abs() < 1e-16);
        }
    }

    #[test]
    fn primitives_of_maximally_mixed_and_k1() {
        for k in 1..5usize {
            let p = primitives(&maximally_mixed(DimTriple::QUBITS), k).unwrap();
            let expect = libm::pow(8.0, 1.0 - k as f64) / 4.0;
            assert!(p.gamma.iter().all(|g| (g - expect).abs() < 1e-15));
        }
        let p = primitives(&bound_state(), 1).unwrap();
        assert!((p.alpha[0] - 3.0).abs() < 1e-15);
        assert!(p.beta.iter().all(|b| (b - 0.5).abs() < 1e-15));
        assert!(p.gamma.iter().all(|g| (g - 0.25).abs() < 1e-15));
    }

    #[test]
    fn mu_examples() {
        let mm = mu_vector(&primitives(&maximally_mixed(DimTriple::QUBITS), 2).unwrap());
        assert!((mm.mu[0] - 27.0 / 8.0).abs() < 1e-14);
        assert!(mm.mu[8..].iter().all(|m| m.abs() < 1e-16));
        // μ1 − μ8 = 2α1 + 2Σγ; here 2·(3/2) + 2·(2/9)
        let b = mu_vector(&primitives(&bound_state(), 2).unwrap());
        assert!((b.mu[0] - b.mu[7] - 31.0 / 9.0).abs() < 1e-14);
        let gate = network::first_stage(&bound_state(), 2).unwrap().distribution();
        assert!((8.0 * (gate.probs()[0] - gate.probs()[7]) - 31.0 / 9.0).abs() < 1e-12);
        let trivial = MomentPrimitives { k: 0, alpha: [0.0; 4], beta: [0.0; 6], gamma: [0.0; 4] };
        let t = mu_vector(&trivial);
        assert!(t.mu[..8].iter().all(|&m| m == 1.0));
        assert!(t.mu[8..].iter().all(|&m| m == 0.0));
    }

    #[test]
    fn nu_examples() {
        let table = CalibrationTable::closed_form();
        let p = primitives(&bound_state(), 3).unwrap();
        let zzz = |cfg| {
            let nu = nu_vector(&p, cfg, &table).unwrap();
            measure_zzz(&nu.distribution().unwrap())
        };
        assert!((zzz(SignConfig::MPP) - 5.0 / (144.0 * SQRT2)).abs() < 1e-15);
        assert!((zzz(SignConfig::PPM) - 1.0 / (48.0 * SQRT2)).abs() < 1e-15);
        let mm = primitives(&maximally_mixed(DimTriple::QUBITS), 2).unwrap();
        let nu = nu_vector(&mm, SignConfig::MPP, &table).unwrap();
        assert!((measure_zzz(&nu.distribution().unwrap()) - 1.0 / (16.0 * SQRT2)).abs() < 1e-15);
        assert_eq!(nu_vector(&p, SignConfig::PPP, &table).unwrap_err(), Error::NotCalibrated(SignConfig::PPP));
    }

    #[test]
    fn closed_form_patterns_isolate_one_gamma() {
        let t = CalibrationTable::closed_form();
        assert_eq!(t.pattern(SignConfig::MPP).unwrap().isolated_gamma(), Some(1));
        assert_eq!(t.pattern(SignConfig::MPM).unwrap().isolated_gamma(), Some(2));
        assert_eq!(t.pattern(SignConfig::PPM).unwrap().isolated_gamma(), Some(3));
    }

    #[test]
    fn parameter_counts() {
        assert_eq!(DetectionMode::Full.parameter_count(8), 25);
        assert_eq!(DetectionMode::ASide.parameter_count(8), 13);
        assert_eq!(DetectionMode::Majorization.parameter_count(8), 13);
    }

    #[test]
    fn group_parsing() {
        assert_eq!("1".parse::<Group>().unwrap(), Group::First);
        assert_eq!("-+-".parse::<Group>().unwrap(), Group::Second(SignConfig::MPM));
        assert_eq!(Group::Second(SignConfig::PPM).to_string(), "++-");
    }

    #[test]
    fn missing_group_is_named() {
        let table = CalibrationTable::closed_form();
        let rho = bound_state();
        let mut set = collect_measurements(&rho, DetectionMode::ASide, MeasurementPath::Analytic, &table).unwrap();
        set.entries.remove(&(Group::Second(SignConfig::MPP), 5));
        match recover_pt_moments(&set, DetectionMode::ASide, &table) {
            Err(Error::MissingData { group, k }) => {
                assert_eq!(group, "-++");
                assert_eq!(k, 5);
            }
            other => panic!("expected missing data, got {other:?}"),
        }
    }

    #[test]
    fn solve_linear_detects_singular() {
        assert!(solve_linear::<2>([[1.0, 2.0], [2.0, 4.0]], [1.0, 2.0]).is_none());
        let x = solve_linear::<2>([[2.0, 1.0], [1.0, 3.0]], [3.0, 5.0]).unwrap();
        assert!((x[0] - 0.8).abs() < 1e-15 && (x[1] - 1.4).abs() < 1e-15);
    }
}
