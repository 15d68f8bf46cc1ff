//! Acceptance run: one PASS/FAIL line per criterion, then a single assert.

use std::io::Write;
use std::time::{Duration, Instant};

use tripneg::table1::{self, CellStatus, Exact};
use tripneg_core::moments::{
    collect_measurements, direct_moments, gate_distribution, group_distribution, recover_pt_moments, CalibrationTable,
    DetectionMode, Group, MatrixLabel, MeasurementPath,
};
use tripneg_core::network::{AncillaDistribution, SignConfig, DEFAULT_SIZE_CAP};
use tripneg_core::spectral::{
    majorization_report, negativity_set_direct, negativity_set_via_locc, GenuineFlag, MajorizationSource,
    NegativityReport, Split, Verdict, DETECTION_THRESHOLD,
};
use tripneg_core::state::{bound_state, ghz, product_state, random_density, random_state, w_state, TripartiteState};
use tripneg_core::tensor::{trace_power, DimTriple};

struct Outcome {
    pass: bool,
    detail: String,
}

type Criterion = (&'static str, Option<Duration>, fn() -> Outcome);

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn table() -> &'static CalibrationTable {
    CalibrationTable::calibrated().unwrap()
}

fn full(rho: &TripartiteState) -> NegativityReport {
    negativity_set_via_locc(rho, 8, DetectionMode::Full, MeasurementPath::Analytic, table()).unwrap()
}

fn random_pool(n: u64, base: u64) -> Vec<TripartiteState> {
    (0..n).map(|s| random_state(DimTriple::QUBITS, 1 + (s as usize % 8), base + s).unwrap()).collect()
}

fn gap(a: &AncillaDistribution, b: &AncillaDistribution) -> f64 {
    a.probs().iter().zip(b.probs()).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn timed(limit: Option<Duration>, f: impl FnOnce() -> Outcome) -> Outcome {
    let start = Instant::now();
    let mut o = f();
    let took = start.elapsed();
    o.detail = format!("{} [{:.3}s]", o.detail, took.as_secs_f64());
    if let Some(limit) = limit {
        if took > limit {
            o.pass = false;
            o.detail.push_str(&format!(" exceeds {}s", limit.as_secs_f64()));
        }
    }
    o
}

fn table1_cells() -> Outcome {
    let cells = table1::compute();
    let mut bad = Vec::new();
    for c in &cells {
        let ok = match (c.group, c.k) {
            (Group::First, 5) => c.status == CellStatus::Flagged { corrected: Exact::new(19, 5184, false) },
            _ => c.status == CellStatus::Match,
        };
        if !ok {
            bad.push(format!("{}@k={} printed {} computed {:.6e}", c.group, c.k, c.printed, c.computed));
        }
    }
    let pass = cells.len() == 25 && bad.is_empty();
    outcome(pass, format!("{} cells, {} off: {}", cells.len(), bad.len(), bad.join("; ")))
}

fn headline() -> Outcome {
    let r = full(&bound_state());
    let mut pass = (r.negativity(Split::ABc).unwrap() - 1.0 / 6.0).abs() <= 1e-9;
    pass &= r.verdict(Split::ABc) == Some(Verdict::Entangled);
    let mut worst: f64 = 0.0;
    for s in &Split::ALL[1..] {
        worst = worst.max(r.negativity(*s).unwrap());
        pass &= r.verdict(*s) == Some(Verdict::Ppt);
    }
    pass &= worst <= 1e-9;
    outcome(pass, format!("N_A-BC={:.12} max other={worst:.1e}", r.negativity(Split::ABc).unwrap()))
}

fn parameter_counts() -> Outcome {
    let want = [(8, 25, 63), (12, 41, 143), (16, 57, 255), (18, 65, 323)];
    let got: Vec<_> = want.iter().map(|&(d, _, _)| tripneg::commands::paramcount_row(d)).collect();
    let pass = got == want && got.iter().all(|&(d, p, t)| p == 4 * (d - 2) + 1 && t == d * d - 1);
    outcome(pass, format!("{got:?}"))
}

fn oracle_equivalence() -> Outcome {
    let mut neg_gap: f64 = 0.0;
    let mut moment_gap: f64 = 0.0;
    for rho in random_pool(100, 40_000) {
        let direct = negativity_set_direct(&rho).unwrap();
        let locc = full(&rho);
        for s in Split::ALL {
            neg_gap = neg_gap.max((direct.negativity(s).unwrap() - locc.negativity(s).unwrap()).abs());
        }
        let set = collect_measurements(&rho, DetectionMode::Full, MeasurementPath::Analytic, table()).unwrap();
        let rec = recover_pt_moments(&set, DetectionMode::Full, table()).unwrap();
        let exact = direct_moments(&rho, DetectionMode::Full.labels()).unwrap();
        for (key, m) in &rec.entries {
            moment_gap = moment_gap.max((m.value - exact.entries[key].value).abs());
        }
    }
    outcome(neg_gap <= 1e-6 && moment_gap <= 1e-9, format!("negativity gap {neg_gap:.1e}, moment gap {moment_gap:.1e}"))
}

fn gate_equivalence() -> Outcome {
    let mut pool = vec![ghz(), w_state(), bound_state()];
    pool.extend(random_pool(10, 50_000));
    let configs = [SignConfig::MPP, SignConfig::MPM, SignConfig::PPM, SignConfig::PPP];
    let mut worst: f64 = 0.0;
    for rho in &pool {
        for k in 2..=3 {
            for g in core::iter::once(Group::First).chain(configs.map(Group::Second)) {
                let gate = gate_distribution(rho, k, g, DEFAULT_SIZE_CAP).unwrap();
                worst = worst.max(gap(&gate, &group_distribution(rho, k, g, table()).unwrap()));
            }
        }
    }
    outcome(worst <= 1e-10, format!("{} states, max gap {worst:.1e}", pool.len()))
}

fn second_moment_degeneracy() -> Outcome {
    let mut pool = vec![ghz(), w_state(), bound_state()];
    pool.extend(random_pool(100, 40_000));
    let mut worst: f64 = 0.0;
    for rho in &pool {
        let purity = trace_power(rho.matrix(), 2).unwrap();
        for mode in [DetectionMode::Full, DetectionMode::Majorization] {
            let set = collect_measurements(rho, mode, MeasurementPath::Analytic, table()).unwrap();
            let rec = recover_pt_moments(&set, mode, table()).unwrap();
            for label in rec.labels() {
                let global = matches!(
                    label,
                    MatrixLabel::Abc | MatrixLabel::AbcTa | MatrixLabel::AbcTb | MatrixLabel::AbcTc
                );
                if global {
                    worst = worst.max((rec.get(label, 2).unwrap().value - purity).abs());
                }
            }
        }
    }
    outcome(worst <= 1e-12, format!("{} states, max gap {worst:.1e}", pool.len()))
}

fn majorization() -> Outcome {
    let src = MajorizationSource::Locc(MeasurementPath::Analytic);
    let g = majorization_report(&ghz(), src, table()).unwrap();
    let b = majorization_report(&bound_state(), src, table()).unwrap();
    let ghz_ok = g.relation(MatrixLabel::Abc, MatrixLabel::A) == Some(false);
    let bound_ok = b.relations.iter().all(|r| r.holds);
    let mut violations = 0;
    let mut detected = 0;
    for rho in random_pool(100, 40_000) {
        let m = majorization_report(&rho, src, table()).unwrap().detected();
        let ppt = negativity_set_direct(&rho).unwrap().splits.iter().any(|s| s.estimate.as_ref().unwrap().negativity > DETECTION_THRESHOLD);
        detected += m as usize;
        violations += (m && !ppt) as usize;
    }
    outcome(
        ghz_ok && bound_ok && violations == 0,
        format!("ghz violates: {ghz_ok}, bound undetected: {bound_ok}, pool {detected} detected, {violations} outside PPT"),
    )
}

fn partial_modes() -> Outcome {
    let rho = bound_state();
    let a = negativity_set_via_locc(&rho, 8, DetectionMode::ASide, MeasurementPath::Analytic, table()).unwrap();
    let f = full(&rho);
    let want = [(Split::ABc, 1.0 / 6.0), (Split::AB, 0.0), (Split::AC, 0.0)];
    let mut pass = a.parameter_count == Some(13) && a.splits.len() == 3;
    for (s, v) in want {
        let got = a.negativity(s).unwrap();
        pass &= (got - v).abs() <= 1e-9 && (got - f.negativity(s).unwrap()).abs() <= 1e-9;
    }
    outcome(pass, format!("{:?} parameters", a.parameter_count))
}

fn genuine_flag() -> Outcome {
    let bound = full(&bound_state()).genuine;
    let mut products = 0;
    for seed in 0..20u64 {
        let part = |i: u64| random_density(2, 1 + (seed as usize + i as usize) % 2, seed * 3 + i).unwrap();
        let rho = product_state(&part(0), &part(1), &part(2)).unwrap();
        products += (full(&rho).genuine == GenuineFlag::NotInferable) as usize;
    }
    outcome(
        bound == GenuineFlag::Detected && products == 20,
        format!("bound {}, {products}/20 products not-inferable", bound.name()),
    )
}

fn shot_noise() -> Outcome {
    let mut within = 0;
    let mut worst: f64 = 0.0;
    for seed in 0..100u64 {
        let r = negativity_set_via_locc(
            &bound_state(),
            8,
            DetectionMode::Full,
            MeasurementPath::Shots { n: 1_000_000, seed },
            table(),
        )
        .unwrap();
        let dev = (r.negativity(Split::ABc).unwrap() - 1.0 / 6.0).abs();
        worst = worst.max(dev);
        within += (dev < 0.02) as usize;
    }
    outcome(within >= 95, format!("{within}/100 seeds within 0.02, worst {worst:.4}"))
}

#[test]
fn acceptance() {
    let secs = |s| Some(Duration::from_secs(s));
    let criteria: Vec<Criterion> = vec![
        ("table reproduction", secs(1), table1_cells),
        ("bound state headline", secs(1), headline),
        ("parameter counts", None, parameter_counts),
        ("oracle equivalence", secs(30), oracle_equivalence),
        ("gate/analytic equivalence", secs(120), gate_equivalence),
        ("second-moment degeneracy", None, second_moment_degeneracy),
        ("majorization", None, majorization),
        ("partial modes", None, partial_modes),
        ("genuine tripartite flag", None, genuine_flag),
        ("shot noise", None, shot_noise),
    ];
    // warm the calibration cache so its one-off cost is not charged to a timed criterion
    table();
    let mut failed = Vec::new();
    let mut out = std::io::stdout().lock();
    for (i, (name, limit, f)) in criteria.into_iter().enumerate() {
        let o = timed(limit, f);
        let tag = if o.pass { "PASS" } else { "FAIL" };
        writeln!(out, "criterion {:>2} {tag} {name}: {}", i + 1, o.detail).unwrap();
        if !o.pass {
            failed.push(i + 1);
        }
    }
    out.flush().unwrap();
    assert!(failed.is_empty(), "failing criteria: {failed:?}");
}
