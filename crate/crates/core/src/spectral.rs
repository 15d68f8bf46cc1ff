//! Spectra from trace powers, negativities, majorization and verdicts.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use nalgebra::{Cholesky, DMatrix, SymmetricEigen};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::moments::{
    collect_measurements, recover_pt_moments, stream_seed, CalibrationTable, DetectionMode, Group, MatrixLabel,
    MeasurementPath, MeasurementSet, Moment, PTMomentTable,
};
use crate::state::TripartiteState;
use crate::tensor::{hermitian_spectrum, DimTriple, Spectrum};

/// Largest imaginary part tolerated on a recovered root.
pub const IMAG_TOL: f64 = 1e-6;
/// Moment round-trip residual above which a recovery is flagged.
pub const RESIDUAL_TOL: f64 = 1e-6;
/// Allowed deviation of a spectrum's sum from 1.
pub const SPECTRUM_TRACE_TOL: f64 = 1e-6;
/// Negativities in `[-NEGATIVITY_TOL, 0)` are clamped to zero.
pub const NEGATIVITY_TOL: f64 = 1e-9;
/// Boundary between "zero" and "entangled".
pub const DETECTION_THRESHOLD: f64 = 1e-7;
pub const MAJORIZATION_TOL: f64 = 1e-9;
/// Total dimension above which reports carry a conditioning warning.
pub const CONDITIONING_DIM: usize = 12;
/// Multiple of the bootstrap standard error a noisy negativity must exceed.
pub const SHOT_SIGMA_FACTOR: f64 = 4.0;
/// Significance factor for accepting another quadrature node.
pub const QUADRATURE_KAPPA: f64 = 4.0;
pub const BOOTSTRAP_RESAMPLES: usize = 200;

/// A spectrum recovered from power sums.
#[derive(Debug, Clone, PartialEq)]
pub struct RecoveredSpectrum {
    pub spectrum: Spectrum,
    /// Largest imaginary root part when no real spectrum fits, else 0.
    pub imaginary_residue: f64,
    /// `max_k |Σ λ_i^k − p_k|`.
    pub residual: f64,
}

impl RecoveredSpectrum {
    pub fn has_warning(&self) -> bool {
        self.residual > RESIDUAL_TOL
    }
}

/// Elementary symmetric polynomials `e_0..e_n` from power sums `p_1..p_n`.
pub fn elementary_symmetric(power_sums: &[f64]) -> Vec<f64> {
    let n = power_sums.len();
    let mut e = Vec::with_capacity(n + 1);
    e.push(1.0);
    for k in 1..=n {
        let mut s = 0.0;
        for i in 1..=k {
            let sign = if i % 2 == 1 { 1.0 } else { -1.0 };
            s += sign * e[k - i] * power_sums[i - 1];
        }
        e.push(s / k as f64);
    }
    e
}

/// Roots of `λ^n − e1 λ^{n−1} + e2 λ^{n−2} − …` as companion-matrix eigenvalues.
fn characteristic_roots(e: &[f64]) -> Vec<(f64, f64)> {
    let n = e.len() - 1;
    if n == 1 {
        return vec![(e[1], 0.0)];
    }
    let mut c = DMatrix::<f64>::zeros(n, n);
    for i in 1..n {
        c[(i, i - 1)] = 1.0;
    }
    // coefficient of λ^i is (−1)^{n−i} e_{n−i}
    for i in 0..n {
        let j = n - i;
        let coeff = if j.is_multiple_of(2) { e[j] } else { -e[j] };
        c[(i, n - 1)] = -coeff;
    }
    c.complex_eigenvalues().iter().map(|z| (z.re, z.im)).collect()
}

fn round_trip_residual(values: &[f64], power_sums: &[f64]) -> f64 {
    let mut pw: Vec<f64> = values.to_vec();
    let mut worst = 0.0f64;
    for &p in power_sums {
        let s: f64 = pw.iter().sum();
        worst = worst.max((s - p).abs());
        for (w, v) in pw.iter_mut().zip(values) {
            *w *= v;
        }
    }
    worst
}

/// Groups roots by single linkage at distance `t`, as lists of root indices.
fn link_groups(roots: &[(f64, f64)], t: f64) -> Vec<Vec<usize>> {
    let n = roots.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut [usize], mut i: usize) -> usize {
        while parent[i] != i {
            parent[i] = parent[parent[i]];
            i = parent[i];
        }
        i
    }
    for i in 0..n {
        for j in i + 1..n {
            if root_distance(roots[i], roots[j]) <= t * (1.0 + 1e-12) {
                let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                parent[a] = b;
            }
        }
    }
    let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for i in 0..n {
        groups.entry(find(&mut parent, i)).or_default().push(i);
    }
    groups.into_values().collect()
}

/// Member `member` of group `which` split off as a singleton.
///
/// A tiny eigenvalue next to a multiple root can sit inside that root's
/// ring, where no linkage distance separates it.
fn peeled(groups: &[Vec<usize>], which: usize, member: usize) -> Vec<Vec<usize>> {
    let mut out: Vec<Vec<usize>> = groups.to_vec();
    let root = out[which].remove(member);
    out.push(vec![root]);
    out
}

/// The distinct single-linkage groupings over all pairwise distances,
/// finest first.
fn linkage_groupings(roots: &[(f64, f64)]) -> Vec<Vec<Vec<usize>>> {
    let mut thresholds = vec![0.0];
    for i in 0..roots.len() {
        for j in i + 1..roots.len() {
            thresholds.push(root_distance(roots[i], roots[j]));
        }
    }
    thresholds.sort_by(f64::total_cmp);
    let mut out: Vec<Vec<Vec<usize>>> = Vec::new();
    for t in thresholds {
        let groups = link_groups(roots, t);
        if out.last() != Some(&groups) {
            out.push(groups);
        }
    }
    out
}

/// Each group replaced by its mean and multiplicity.
fn cluster_means(roots: &[(f64, f64)], groups: &[Vec<usize>]) -> Vec<(f64, f64, usize)> {
    groups
        .iter()
        .map(|g| {
            let m = g.len() as f64;
            let re = g.iter().map(|&i| roots[i].0).sum::<f64>() / m;
            let im = g.iter().map(|&i| roots[i].1).sum::<f64>() / m;
            (re, im, g.len())
        })
        .collect()
}

fn root_distance(a: (f64, f64), b: (f64, f64)) -> f64 {
    libm::hypot(a.0 - b.0, a.1 - b.1)
}

/// Refines cluster values with fixed multiplicities by Gauss–Newton on
/// `Σ_j m_j c_j^k = p_k`. Returns the values and their round-trip residual.
fn polish(clusters: &[(f64, f64, usize)], power_sums: &[f64]) -> (Vec<f64>, f64) {
    let n = power_sums.len();
    let r = clusters.len();
    let mult: Vec<f64> = clusters.iter().map(|c| c.2 as f64).collect();
    let mut c: Vec<f64> = clusters.iter().map(|c| c.0).collect();
    let spread = |c: &[f64]| -> Vec<f64> {
        c.iter().zip(clusters).flat_map(|(&v, cl)| core::iter::repeat_n(v, cl.2)).collect()
    };
    let mut best_res = round_trip_residual(&spread(&c), power_sums);
    let mut best = c.clone();
    for _ in 0..POLISH_ITERATIONS {
        let mut jac = DMatrix::<f64>::zeros(n, r);
        let mut rhs = nalgebra::DVector::<f64>::zeros(n);
        for (j, &v) in c.iter().enumerate() {
            let mut pw = 1.0; // v^{k-1}
            for k in 0..n {
                jac[(k, j)] = mult[j] * (k + 1) as f64 * pw;
                rhs[k] -= mult[j] * pw * v;
                pw *= v;
            }
        }
        for k in 0..n {
            rhs[k] += power_sums[k];
        }
        let Ok(step) = jac.svd(true, true).solve(&rhs, 1e-14) else { break };
        // halve the step until it improves the fit
        let mut scale = 1.0;
        let mut improved = false;
        for _ in 0..STEP_HALVINGS {
            let trial: Vec<f64> = c.iter().zip(step.iter()).map(|(v, d)| v + scale * d).collect();
            let res = round_trip_residual(&spread(&trial), power_sums);
            if res.is_finite() && res < best_res {
                best_res = res;
                best = trial.clone();
                c = trial;
                improved = true;
                break;
            }
            scale *= 0.5;
        }
        if !improved {
            break;
        }
    }
    (spread(&best), best_res)
}

const POLISH_ITERATIONS: usize = 30;
const STEP_HALVINGS: usize = 20;
/// Residual regarded as exact when choosing between root groupings.
const MERGE_ACCEPT: f64 = 1e-13;

/// Spectrum of an `n × n` hermitian matrix from `p_k = Tr M^k`, `k = 1..n`.
///
/// Companion-matrix root finding splits a root of multiplicity m into a
/// small ring of radius about `ε^{1/m}`. Roots are therefore grouped by
/// single linkage at every pairwise distance (plus each grouping with one
/// root split off, and groupings of the roots left after deflating an
/// exact zero of each multiplicity), each grouping is polished with its
/// multiplicities held fixed. Among the groupings that reproduce the power
/// sums, the least negative and then the one with the fewest clusters wins.
/// When no grouping fits, the raw roots are
/// used and their imaginary parts decide whether the input was hermitian.
pub fn newton_spectrum(power_sums: &[f64], n: usize) -> Result<RecoveredSpectrum> {
    if n == 0 || power_sums.len() != n {
        return Err(Error::InvalidParams(format!(
            "expected {n} power sums, got {}",
            power_sums.len()
        )));
    }
    if power_sums.iter().any(|p| !p.is_finite()) {
        return Err(Error::InvalidParams("power sums must be finite".into()));
    }
    let e = elementary_symmetric(power_sums);
    let roots = characteristic_roots(&e);

    let mut layouts: Vec<Vec<(f64, f64, usize)>> = Vec::new();
    for groups in linkage_groupings(&roots) {
        for which in 0..groups.len() {
            if groups[which].len() > 1 {
                for member in 0..groups[which].len() {
                    layouts.push(cluster_means(&roots, &peeled(&groups, which, member)));
                }
            }
        }
        layouts.push(cluster_means(&roots, &groups));
    }
    // Rank r leaves e_{r+1}..e_n at rounding level; dropping them factors
    // out an exact zero root of multiplicity n − r.
    for r in 1..n {
        let reduced = characteristic_roots(&e[..=r]);
        for groups in linkage_groupings(&reduced) {
            let mut layout = cluster_means(&reduced, &groups);
            layout.push((0.0, 0.0, n - r));
            layouts.push(layout);
        }
    }

    let candidates: Vec<(usize, Vec<f64>, f64)> = layouts
        .iter()
        .map(|layout| {
            let (values, res) = polish(layout, power_sums);
            (layout.len(), values, res)
        })
        .collect();
    let min_res = candidates.iter().map(|c| c.2).fold(f64::INFINITY, f64::min);

    // Power sums p_1..p_n fix the roots, so a real spectrum that reproduces
    // them leaves any imaginary parts to root splitting.
    let (values, residual, imaginary_residue) = if min_res <= RESIDUAL_TOL {
        let accept = MERGE_ACCEPT.max(4.0 * min_res);
        // Several groupings can fit equally well when small eigenvalues
        // fall below the rounding of the higher power sums. The least
        // negative of them is kept, so a negative eigenvalue is reported
        // only when every fitting spectrum has one.
        let fits: Vec<_> = candidates.into_iter().filter(|c| c.2 <= accept).collect();
        let neg = |v: &[f64]| -> f64 { v.iter().filter(|&&x| x < 0.0).map(|x| -x).sum() };
        let least = fits.iter().map(|c| neg(&c.1)).fold(f64::INFINITY, f64::min);
        let (_, values, res) = fits
            .into_iter()
            .filter(|c| neg(&c.1) <= least + MERGE_ACCEPT)
            .min_by(|a, b| a.0.cmp(&b.0).then(a.2.total_cmp(&b.2)))
            .expect("the minimum is accepted");
        (values, res, 0.0)
    } else {
        let raw: Vec<(f64, f64, usize)> = roots.iter().map(|&(re, im)| (re, im, 1)).collect();
        let (values, res) = polish(&raw, power_sums);
        (values, res, roots.iter().fold(0.0f64, |m, r| m.max(r.1.abs())))
    };
    if imaginary_residue > IMAG_TOL {
        return Err(Error::IllConditioned { residue: imaginary_residue });
    }
    Ok(RecoveredSpectrum { spectrum: Spectrum::new(values), imaginary_residue, residual })
}

/// `(Σ|λ| − 1)/2`; values in `[-1e-9, 0)` become 0.
pub fn negativity(spec: &Spectrum) -> Result<f64> {
    Ok(clamp_negativity(raw_negativity(spec)?))
}

/// `(Σ|λ| − 1)/2` without clamping.
pub fn raw_negativity(spec: &Spectrum) -> Result<f64> {
    let trace = spec.sum();
    if (trace - 1.0).abs() > SPECTRUM_TRACE_TOL {
        return Err(Error::InvalidSpectrum { trace });
    }
    Ok((spec.abs_sum() - 1.0) / 2.0)
}

fn clamp_negativity(raw: f64) -> f64 {
    if (-NEGATIVITY_TOL..0.0).contains(&raw) {
        0.0
    } else {
        raw
    }
}

/// A discrete measure matching the low-order moments of a spectrum.
#[derive(Debug, Clone, PartialEq)]
pub struct Quadrature {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl Quadrature {
    /// `(Σ w_i |x_i| − 1)/2`.
    pub fn negativity(&self) -> f64 {
        let s: f64 = self.nodes.iter().zip(&self.weights).map(|(x, w)| w * x.abs()).sum();
        (s - 1.0) / 2.0
    }
}

/// Moment vector `m_0..m_n` (with `m_0 = n`, `m_1 = 1`) and standard errors.
fn moment_vector(moments: &[Moment]) -> (Vec<f64>, Vec<f64>) {
    let n = moments.len();
    let mut m = vec![n as f64];
    let mut s = vec![0.0];
    for mo in moments {
        m.push(mo.value);
        s.push(mo.std_err);
    }
    (m, s)
}

fn hankel(m: &[f64], r: usize, shift: usize) -> DMatrix<f64> {
    DMatrix::from_fn(r, r, |i, j| m[i + j + shift])
}

/// Number of nodes supported by the data: monic orthogonal polynomials are
/// added while their squared norm exceeds `kappa` standard errors.
fn supported_nodes(m: &[f64], sig: &[f64], kappa: f64) -> usize {
    let max_r = m.len() / 2;
    let mut r = 0;
    while r < max_r && 2 * r < m.len() {
        let c: Vec<f64> = if r == 0 {
            vec![1.0]
        } else {
            let h = hankel(m, r, 0);
            let rhs = nalgebra::DVector::from_fn(r, |i, _| -m[i + r]);
            match h.lu().solve(&rhs) {
                Some(sol) => sol.iter().copied().chain(core::iter::once(1.0)).collect(),
                None => break,
            }
        };
        let mut norm = 0.0;
        let mut var = 0.0;
        for s in 0..=2 * r {
            let coef: f64 = (0..=r).filter(|&i| s >= i && s - i <= r).map(|i| c[i] * c[s - i]).sum();
            norm += coef * m[s];
            var += (coef * sig[s]) * (coef * sig[s]);
        }
        if norm > 0.0 && norm > kappa * libm::sqrt(var) {
            r += 1;
        } else {
            break;
        }
    }
    r.clamp(1, max_r)
}

/// Gauss quadrature with `r` nodes from `m_0..m_{2r−1}` (Golub–Welsch).
fn gauss_quadrature(m: &[f64], r: usize) -> Option<Quadrature> {
    let chol = Cholesky::new(hankel(m, r, 0))?;
    let l = chol.l();
    let l_inv = l.clone().try_inverse()?;
    let j = &l_inv * hankel(m, r, 1) * l_inv.transpose();
    let j = (&j + j.transpose()) * 0.5;
    let eig = SymmetricEigen::new(j);
    let nodes: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    let weights: Vec<f64> = (0..r).map(|c| m[0] * eig.eigenvectors[(0, c)] * eig.eigenvectors[(0, c)]).collect();
    Some(Quadrature { nodes, weights })
}

/// Quadrature estimate from noisy power sums `p_1..p_n`.
pub fn quadrature_estimate(moments: &[Moment], kappa: f64) -> Result<Quadrature> {
    let (m, sig) = moment_vector(moments);
    if m.len() < 2 {
        return Err(Error::InvalidParams("need at least one power sum".into()));
    }
    let mut r = supported_nodes(&m, &sig, kappa);
    while r >= 1 {
        if let Some(q) = gauss_quadrature(&m, r) {
            return Ok(q);
        }
        r -= 1;
    }
    Err(Error::IllConditioned { residue: f64::NAN })
}

/// Parametric bootstrap standard error of the quadrature negativity.
pub fn bootstrap_negativity_error(moments: &[Moment], kappa: f64, resamples: usize, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut vals = Vec::with_capacity(resamples);
    let mut perturbed = moments.to_vec();
    for _ in 0..resamples {
        for (p, m) in perturbed.iter_mut().zip(moments) {
            let z: f64 = StandardNormal.sample(&mut rng);
            p.value = m.value + z * m.std_err;
        }
        if let Ok(q) = quadrature_estimate(&perturbed, kappa) {
            let n = q.negativity();
            if n.is_finite() {
                vals.push(n);
            }
        }
    }
    if vals.len() < 2 {
        return f64::INFINITY;
    }
    let mean = vals.iter().sum::<f64>() / vals.len() as f64;
    let var = vals.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (vals.len() - 1) as f64;
    libm::sqrt(var)
}

/// A bipartite cut whose negativity is reported.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Split {
    ABc,
    BAc,
    CAb,
    AB,
    AC,
    BC,
}

impl Split {
    pub const ALL: [Split; 6] = [Split::ABc, Split::BAc, Split::CAb, Split::AB, Split::AC, Split::BC];

    pub fn name(self) -> &'static str {
        match self {
            Split::ABc => "A-BC",
            Split::BAc => "B-AC",
            Split::CAb => "C-AB",
            Split::AB => "A-B",
            Split::AC => "A-C",
            Split::BC => "B-C",
        }
    }

    /// The partially transposed matrix whose spectrum decides the split.
    pub fn matrix(self) -> MatrixLabel {
        match self {
            Split::ABc => MatrixLabel::AbcTa,
            Split::BAc => MatrixLabel::AbcTb,
            Split::CAb => MatrixLabel::AbcTc,
            Split::AB => MatrixLabel::AbTa,
            Split::AC => MatrixLabel::AcTa,
            Split::BC => MatrixLabel::BcTb,
        }
    }

    pub fn for_mode(mode: DetectionMode) -> Vec<Split> {
        Split::ALL.into_iter().filter(|s| mode.labels().contains(&s.matrix())).collect()
    }
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Verdict {
    Entangled,
    Ppt,
}

impl Verdict {
    pub fn name(self) -> &'static str {
        match self {
            Verdict::Entangled => "entangled",
            Verdict::Ppt => "ppt",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Provenance {
    LoccPipeline,
    DirectOracle,
}

impl Provenance {
    pub fn name(self) -> &'static str {
        match self {
            Provenance::LoccPipeline => "locc-pipeline",
            Provenance::DirectOracle => "direct-oracle",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum GenuineFlag {
    Detected,
    NotInferable,
    NotApplicable,
}

impl GenuineFlag {
    pub fn name(self) -> &'static str {
        match self {
            GenuineFlag::Detected => "detected",
            GenuineFlag::NotInferable => "not-inferable",
            GenuineFlag::NotApplicable => "not-applicable",
        }
    }
}

/// Result for one split.
#[derive(Debug, Clone, PartialEq)]
pub struct SplitEstimate {
    /// Signed value before clamping.
    pub raw: f64,
    /// Reported value (tiny negatives clamped to zero).
    pub negativity: f64,
    pub verdict: Verdict,
    /// Value the negativity had to exceed for an "entangled" verdict.
    pub threshold: f64,
    /// Standard error, for shot-based estimates.
    pub std_err: Option<f64>,
    /// Eigenvalues (exact paths) or quadrature nodes (shots).
    pub spectrum: Vec<f64>,
    /// Quadrature weights, for shot-based estimates.
    pub weights: Option<Vec<f64>>,
    /// Moment round-trip residual of the spectrum recovery.
    pub residual: f64,
}

impl SplitEstimate {
    pub fn min_eigenvalue(&self) -> f64 {
        self.spectrum.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn has_residual_warning(&self) -> bool {
        self.residual > RESIDUAL_TOL
    }

    fn exact(raw: f64, spectrum: Vec<f64>, residual: f64) -> Self {
        let negativity = clamp_negativity(raw);
        let verdict = if negativity > DETECTION_THRESHOLD { Verdict::Entangled } else { Verdict::Ppt };
        SplitEstimate {
            raw,
            negativity,
            verdict,
            threshold: DETECTION_THRESHOLD,
            std_err: None,
            spectrum,
            weights: None,
            residual,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SplitResult {
    pub split: Split,
    pub estimate: core::result::Result<SplitEstimate, Error>,
}

/// Negativities of a run with their verdicts and diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct NegativityReport {
    pub dims: DimTriple,
    pub provenance: Provenance,
    pub mode: DetectionMode,
    pub splits: Vec<SplitResult>,
    /// Three-ancilla correlators measured (pipeline runs only).
    pub parameter_count: Option<usize>,
    pub shots: Option<u64>,
    /// Recovered moments (pipeline runs only).
    pub moments: Option<PTMomentTable>,
    /// Worst round-trip residual, attached when the dimension exceeds
    /// [`CONDITIONING_DIM`].
    pub conditioning_warning: Option<f64>,
    pub genuine: GenuineFlag,
}

impl NegativityReport {
    pub fn get(&self, split: Split) -> Option<&SplitEstimate> {
        self.splits.iter().find(|r| r.split == split).and_then(|r| r.estimate.as_ref().ok())
    }

    pub fn negativity(&self, split: Split) -> Option<f64> {
        self.get(split).map(|e| e.negativity)
    }

    pub fn verdict(&self, split: Split) -> Option<Verdict> {
        self.get(split).map(|e| e.verdict)
    }

    /// First per-split failure, if any.
    pub fn first_error(&self) -> Option<&Error> {
        self.splits.iter().find_map(|r| r.estimate.as_ref().err())
    }

    fn finish(mut self) -> Self {
        if self.dims.total() > CONDITIONING_DIM {
            let worst = self
                .splits
                .iter()
                .filter_map(|r| r.estimate.as_ref().ok())
                .fold(0.0f64, |m, e| m.max(e.residual));
            self.conditioning_warning = Some(worst);
        }
        self.genuine = genuine_tripartite_flag(&self, self.dims);
        self
    }
}

/// Six negativities from explicit partial transposes and eigendecomposition.
pub fn negativity_set_direct(rho: &TripartiteState) -> Result<NegativityReport> {
    let mut splits = Vec::with_capacity(6);
    for split in Split::ALL {
        let spec = hermitian_spectrum(&split.matrix().matrix_of(rho))?;
        let raw = raw_negativity(&spec)?;
        splits.push(SplitResult { split, estimate: Ok(SplitEstimate::exact(raw, spec.values().to_vec(), 0.0)) });
    }
    let report = NegativityReport {
        dims: rho.dims(),
        provenance: Provenance::DirectOracle,
        mode: DetectionMode::Full,
        splits,
        parameter_count: None,
        shots: None,
        moments: None,
        conditioning_warning: None,
        genuine: GenuineFlag::NotInferable,
    };
    Ok(report.finish())
}

/// Negativities through the measurement pipeline.
///
/// `d_max` must equal the total dimension: fewer moments cannot fix a spectrum.
pub fn negativity_set_via_locc(
    rho: &TripartiteState,
    d_max: usize,
    mode: DetectionMode,
    path: MeasurementPath,
    table: &CalibrationTable,
) -> Result<NegativityReport> {
    let d = rho.dims().total();
    if d_max != d {
        return Err(Error::InvalidParams(format!(
            "moments up to k = {d} are needed to fix a spectrum of dimension {d}, got {d_max}"
        )));
    }
    if mode == DetectionMode::Majorization {
        return Err(Error::InvalidParams("majorization mode produces a majorization report".into()));
    }
    let set = collect_measurements(rho, mode, path, table)?;
    let seed = match path {
        MeasurementPath::Shots { seed, .. } => stream_seed(seed, Group::First, 0),
        _ => 0,
    };
    negativity_report_from_measurements(&set, mode, table, seed)
}

/// Negativities from an existing measurement set.
///
/// Exact sets go through [`newton_spectrum`]; sets tagged with a shot count
/// use a Gauss-quadrature estimate with a bootstrap error and a
/// [`SHOT_SIGMA_FACTOR`]σ detection rule.
pub fn negativity_report_from_measurements(
    set: &MeasurementSet,
    mode: DetectionMode,
    table: &CalibrationTable,
    bootstrap_seed: u64,
) -> Result<NegativityReport> {
    if mode == DetectionMode::Majorization {
        return Err(Error::InvalidParams("majorization mode produces a majorization report".into()));
    }
    let moments = recover_pt_moments(set, mode, table)?;
    let mut splits = Vec::new();
    for (i, split) in Split::for_mode(mode).into_iter().enumerate() {
        let power_sums = moments.power_sums(split.matrix()).expect("recovery fills every k");
        let estimate = match set.shots {
            None => exact_estimate(&power_sums),
            Some(_) => Ok(shot_estimate(&power_sums, bootstrap_seed.wrapping_add(i as u64))),
        };
        splits.push(SplitResult { split, estimate });
    }
    let report = NegativityReport {
        dims: set.dims,
        provenance: Provenance::LoccPipeline,
        mode,
        splits,
        parameter_count: Some(set.parameter_count()),
        shots: set.shots,
        moments: Some(moments),
        conditioning_warning: None,
        genuine: GenuineFlag::NotInferable,
    };
    Ok(report.finish())
}

fn exact_estimate(power_sums: &[Moment]) -> Result<SplitEstimate> {
    let p: Vec<f64> = power_sums.iter().map(|m| m.value).collect();
    let rec = newton_spectrum(&p, p.len())?;
    let raw = raw_negativity(&rec.spectrum)?;
    Ok(SplitEstimate::exact(raw, rec.spectrum.values().to_vec(), rec.residual))
}

fn shot_estimate(power_sums: &[Moment], seed: u64) -> SplitEstimate {
    let (nodes, weights, raw) = match quadrature_estimate(power_sums, QUADRATURE_KAPPA) {
        Ok(q) => {
            let raw = q.negativity();
            (q.nodes, q.weights, raw)
        }
        Err(_) => (Vec::new(), Vec::new(), 0.0),
    };
    let sigma = bootstrap_negativity_error(power_sums, QUADRATURE_KAPPA, BOOTSTRAP_RESAMPLES, seed);
    let threshold = DETECTION_THRESHOLD.max(SHOT_SIGMA_FACTOR * sigma);
    let negativity = raw.max(0.0);
    let verdict = if negativity > threshold { Verdict::Entangled } else { Verdict::Ppt };
    let (m, _) = moment_vector(power_sums);
    let residual = quadrature_residual(&nodes, &weights, &m);
    SplitEstimate {
        raw,
        negativity,
        verdict,
        threshold,
        std_err: Some(sigma),
        spectrum: nodes,
        weights: Some(weights),
        residual,
    }
}

/// Largest mismatch between the quadrature moments and the measured ones
/// it was built to reproduce.
fn quadrature_residual(nodes: &[f64], weights: &[f64], m: &[f64]) -> f64 {
    let used = (2 * nodes.len()).min(m.len());
    (0..used)
        .map(|k| {
            let s: f64 = nodes.iter().zip(weights).map(|(x, w)| w * libm::pow(*x, k as f64)).sum();
            (s - m[k]).abs()
        })
        .fold(0.0, f64::max)
}

/// Genuine tripartite entanglement inferred from vanishing two-party and
/// non-vanishing one-versus-two negativities (qubits only).
pub fn genuine_tripartite_flag(report: &NegativityReport, dims: DimTriple) -> GenuineFlag {
    if !dims.is_qubits() {
        return GenuineFlag::NotApplicable;
    }
    let patterns = [
        (Split::AB, Split::AC, Split::ABc),
        (Split::AB, Split::BC, Split::BAc),
        (Split::AC, Split::BC, Split::CAb),
    ];
    let detected = patterns.iter().any(|&(z1, z2, pos)| {
        matches!(
            (report.verdict(z1), report.verdict(z2), report.verdict(pos)),
            (Some(Verdict::Ppt), Some(Verdict::Ppt), Some(Verdict::Entangled))
        )
    });
    if detected {
        GenuineFlag::Detected
    } else {
        GenuineFlag::NotInferable
    }
}

/// `x ≺ y`: zero-padded, sorted partial sums of x never exceed those of y.
pub fn majorization_prec(x: &Spectrum, y: &Spectrum) -> Result<bool> {
    let (sx, sy) = (x.sum(), y.sum());
    if (sx - sy).abs() > MAJORIZATION_TOL {
        return Err(Error::InvalidComparison { left: sx, right: sy });
    }
    let len = x.len().max(y.len());
    let at = |s: &Spectrum, i: usize| s.values().get(i).copied().unwrap_or(0.0);
    let (mut px, mut py) = (0.0, 0.0);
    for i in 0..len {
        px += at(x, i);
        py += at(y, i);
        if px > py + MAJORIZATION_TOL {
            return Ok(false);
        }
    }
    Ok(true)
}

/// One `λ(left) ≺ λ(right)` test.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MajorizationRelation {
    pub left: MatrixLabel,
    pub right: MatrixLabel,
    pub holds: bool,
}

/// The twelve relations between a state and its marginals.
pub const MAJORIZATION_PAIRS: [(MatrixLabel, MatrixLabel); 12] = {
    use MatrixLabel::*;
    [
        (Abc, A),
        (Abc, B),
        (Abc, C),
        (Abc, Ab),
        (Abc, Ac),
        (Abc, Bc),
        (Ab, A),
        (Ab, B),
        (Ac, A),
        (Ac, C),
        (Bc, B),
        (Bc, C),
    ]
};

#[derive(Debug, Clone, PartialEq)]
pub struct MajorizationReport {
    pub dims: DimTriple,
    pub provenance: Provenance,
    pub spectra: BTreeMap<MatrixLabel, Spectrum>,
    pub relations: Vec<MajorizationRelation>,
    pub parameter_count: Option<usize>,
    pub moments: Option<PTMomentTable>,
}

impl MajorizationReport {
    /// True when some relation fails, which certifies entanglement.
    pub fn detected(&self) -> bool {
        self.relations.iter().any(|r| !r.holds)
    }

    pub fn relation(&self, left: MatrixLabel, right: MatrixLabel) -> Option<bool> {
        self.relations.iter().find(|r| r.left == left && r.right == right).map(|r| r.holds)
    }
}

/// Where majorization spectra come from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MajorizationSource {
    Locc(MeasurementPath),
    Oracle,
}

pub fn majorization_report(
    rho: &TripartiteState,
    via: MajorizationSource,
    table: &CalibrationTable,
) -> Result<MajorizationReport> {
    match via {
        MajorizationSource::Oracle => {
            let mut spectra = BTreeMap::new();
            for &label in DetectionMode::Majorization.labels() {
                spectra.insert(label, hermitian_spectrum(&label.matrix_of(rho))?);
            }
            build_majorization(rho.dims(), Provenance::DirectOracle, spectra, None, None)
        }
        MajorizationSource::Locc(path) => {
            let set = collect_measurements(rho, DetectionMode::Majorization, path, table)?;
            majorization_from_measurements(&set, table)
        }
    }
}

/// Majorization relations from a measurement set holding groups 1 and (+++).
pub fn majorization_from_measurements(set: &MeasurementSet, table: &CalibrationTable) -> Result<MajorizationReport> {
    let moments = recover_pt_moments(set, DetectionMode::Majorization, table)?;
    let mut spectra = BTreeMap::new();
    for &label in DetectionMode::Majorization.labels() {
        let p: Vec<f64> = moments.power_sums(label).expect("recovery fills every k").iter().map(|m| m.value).collect();
        spectra.insert(label, newton_spectrum(&p, p.len())?.spectrum);
    }
    build_majorization(set.dims, Provenance::LoccPipeline, spectra, Some(set.parameter_count()), Some(moments))
}

fn build_majorization(
    dims: DimTriple,
    provenance: Provenance,
    spectra: BTreeMap<MatrixLabel, Spectrum>,
    parameter_count: Option<usize>,
    moments: Option<PTMomentTable>,
) -> Result<MajorizationReport> {
    let mut relations = Vec::with_capacity(MAJORIZATION_PAIRS.len());
    for (left, right) in MAJORIZATION_PAIRS {
        let holds = majorization_prec(&spectra[&left], &spectra[&right])?;
        relations.push(MajorizationRelation { left, right, holds });
    }
    Ok(MajorizationReport { dims, provenance, spectra, relations, parameter_count, moments })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::state::{bound_state, ghz, product_state, w_state};
    use crate::tensor::trace_power;

    fn moments_of(m: &crate::tensor::ComplexMatrix) -> Vec<f64> {
        (1..=m.rows() as u32).map(|k| trace_power(m, k).unwrap()).collect()
    }

    #[test]
    fn small_eigenvalue_inside_zero_ring() {
        let truth = [0.78, 0.215, 0.0041, 0.0009, 0.0, 0.0, 0.0, 0.0];
        let p: Vec<f64> = (1..=8).map(|k| truth.iter().map(|x: &f64| x.powi(k)).sum()).collect();
        let rec = newton_spectrum(&p, 8).unwrap();
        for (got, want) in rec.spectrum.values().iter().zip(truth) {
            assert!((got - want).abs() < 1e-9, "{:?}", rec.spectrum);
        }
        assert!(negativity(&rec.spectrum).unwrap() < 1e-9);
    }

    #[test]
    fn rank_one_power_sums() {
        let rec = newton_spectrum(&[1.0; 8], 8).unwrap();
        assert!((rec.spectrum.values()[0] - 1.0).abs() < 1e-12);
        assert!(rec.spectrum.values()[1..].iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn bound_state_spectra() {
        let rho = bound_state();
        let rec = newton_spectrum(&moments_of(rho.matrix()), 8).unwrap();
        let want = [1.0 / 3.0, 1.0 / 6.0, 1.0 / 6.0, 1.0 / 6.0, 1.0 / 6.0, 0.0, 0.0, 0.0];
        for (a, b) in rec.spectrum.values().iter().zip(want) {
            assert!((a - b).abs() < 1e-9, "{a} vs {b}");
        }
        let pt = rho.partial_transpose(crate::tensor::Subsystem::A);
        let rec = newton_spectrum(&moments_of(&pt), 8).unwrap();
        let v = rec.spectrum.values();
        assert!(v[..7].iter().all(|x| (x - 1.0 / 6.0).abs() < 1e-9));
        assert!((v[7] + 1.0 / 6.0).abs() < 1e-9);
        assert!((negativity(&rec.spectrum).unwrap() - 1.0 / 6.0).abs() < 1e-9);
    }

    #[test]
    fn newton_rejects_bad_input() {
        assert!(newton_spectrum(&[1.0, 0.5], 3).is_err());
        // power sums of (1/2 ± i/2): not a hermitian spectrum
        match newton_spectrum(&[1.0, 0.0], 2) {
            Err(Error::IllConditioned { residue }) => assert!((residue - 0.5).abs() < 1e-12),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn negativity_examples() {
        assert_eq!(negativity(&Spectrum::new(vec![0.5, 0.5])).unwrap(), 0.0);
        assert!(matches!(negativity(&Spectrum::new(vec![0.5, 0.4])), Err(Error::InvalidSpectrum { .. })));
        let r = negativity_set_direct(&ghz()).unwrap();
        assert!((r.negativity(Split::ABc).unwrap() - 0.5).abs() < 1e-12);
        let w = negativity_set_direct(&w_state()).unwrap();
        assert!((w.negativity(Split::ABc).unwrap() - libm::sqrt(2.0) / 3.0).abs() < 1e-12);
    }

    #[test]
    fn direct_bound_state_report() {
        let r = negativity_set_direct(&bound_state()).unwrap();
        assert!((r.negativity(Split::ABc).unwrap() - 1.0 / 6.0).abs() < 1e-12);
        for s in &Split::ALL[1..] {
            assert!(r.negativity(*s).unwrap().abs() < 1e-12);
        }
        assert_eq!(r.genuine, GenuineFlag::Detected);
        let f = |x: f64| crate::tensor::ComplexMatrix::diagonal(&[x, 1.0 - x]);
        let p = negativity_set_direct(&product_state(&f(0.3), &f(0.2), &f(0.1)).unwrap()).unwrap();
        assert_eq!(p.genuine, GenuineFlag::NotInferable);
    }

    #[test]
    fn majorization_examples() {
        let ghz_full = Spectrum::new(vec![1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
        let half = Spectrum::new(vec![0.5, 0.5]);
        assert!(!majorization_prec(&ghz_full, &half).unwrap());
        assert!(majorization_prec(&half, &half).unwrap());
        let bound = Spectrum::new(vec![1.0 / 3.0, 1.0 / 6.0, 1.0 / 6.0, 1.0 / 6.0, 1.0 / 6.0]);
        assert!(majorization_prec(&bound, &half).unwrap());
        assert!(majorization_prec(&bound, &Spectrum::new(vec![0.7])).is_err());
    }

    #[test]
    fn quadrature_on_exact_two_point_measure() {
        // 7 × 1/6 and 1 × (−1/6): two distinct atoms, four exact moments suffice
        let moments: Vec<Moment> = (1..=8)
            .map(|k| {
                let v = 7.0 * libm::pow(1.0 / 6.0, k as f64) + libm::pow(-1.0 / 6.0, k as f64);
                Moment { value: v, std_err: 1e-12 }
            })
            .collect();
        let q = quadrature_estimate(&moments, QUADRATURE_KAPPA).unwrap();
        assert!((q.negativity() - 1.0 / 6.0).abs() < 1e-8);
    }
}

