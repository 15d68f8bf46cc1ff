//! Text renderings of reports: `kv` is line-oriented `key=value` with stable
//! keys, `table` is for people.

use std::fmt::Write;

use tripneg_core::moments::{GroupExpectations, PTMomentTable};
use tripneg_core::network::{outcome_label, AncillaDistribution};
use tripneg_core::spectral::{MajorizationReport, NegativityReport, Split, SplitEstimate};
use tripneg_core::tensor::{DimTriple, Subsystem};

use crate::format_f64;
use crate::table1::{Cell, CellStatus};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Table,
    Kv,
}

fn list(values: &[f64]) -> String {
    values.iter().map(|v| format_f64(*v)).collect::<Vec<_>>().join(",")
}

fn dims_kv(d: DimTriple) -> String {
    format!("{},{},{}", d.a, d.b, d.c)
}

fn transposed_party(split: Split) -> Subsystem {
    split.matrix().transposed().expect("split matrices are partial transposes")
}

fn moments_kv(out: &mut String, m: &PTMomentTable, with_errors: bool) {
    for ((label, k), mo) in &m.entries {
        let _ = writeln!(out, "moment.{label}.{k}={}", format_f64(mo.value));
        if with_errors {
            let _ = writeln!(out, "moment_err.{label}.{k}={}", format_f64(mo.std_err));
        }
    }
}

fn moments_table(out: &mut String, m: &PTMomentTable) {
    let labels = m.labels();
    let _ = writeln!(out, "recovered trace powers Tr M^k:");
    for label in labels {
        let vals: Vec<String> = (1..=label.dim(m.dims))
            .filter_map(|k| m.get(label, k))
            .map(|mo| if mo.std_err > 0.0 { format!("{:.6e}±{:.1e}", mo.value, mo.std_err) } else { format!("{:.10e}", mo.value) })
            .collect();
        let _ = writeln!(out, "  {:<7} {}", label.name(), vals.join("  "));
    }
}

pub fn negativity_report(r: &NegativityReport, fmt: Format) -> String {
    let mut out = String::new();
    match fmt {
        Format::Kv => {
            let _ = writeln!(out, "report=negativity");
            let _ = writeln!(out, "provenance={}", r.provenance.name());
            let _ = writeln!(out, "mode={}", r.mode.name());
            let _ = writeln!(out, "dims={}", dims_kv(r.dims));
            if let Some(n) = r.shots {
                let _ = writeln!(out, "shots={n}");
            }
            if let Some(p) = r.parameter_count {
                let _ = writeln!(out, "parameters={p}");
            }
            if let Some(m) = &r.moments {
                moments_kv(&mut out, m, r.shots.is_some());
            }
            for s in &r.splits {
                let name = s.split.name();
                match &s.estimate {
                    Ok(e) => split_kv(&mut out, name, e),
                    Err(err) => {
                        let _ = writeln!(out, "error.{name}={err}");
                    }
                }
            }
            if let Some(w) = r.conditioning_warning {
                let _ = writeln!(out, "conditioning_warning={}", format_f64(w));
            }
            let _ = writeln!(out, "genuine_tripartite={}", r.genuine.name());
        }
        Format::Table => {
            let _ = writeln!(out, "negativity report ({}, mode {}, dims {})", r.provenance.name(), r.mode.name(), r.dims);
            if let Some(p) = r.parameter_count {
                let _ = writeln!(out, "measured parameters: {p}");
            }
            if let Some(n) = r.shots {
                let _ = writeln!(out, "shots per (group, k): {n}");
            }
            if let Some(m) = &r.moments {
                moments_table(&mut out, m);
            }
            let _ = writeln!(out, "{:<6} {:>22} {:>10} {:>22}", "split", "negativity", "verdict", "min eigenvalue");
            for s in &r.splits {
                match &s.estimate {
                    Ok(e) => {
                        let n = match e.std_err {
                            Some(se) => format!("{:.6} ± {:.1e}", e.negativity, se),
                            None => format!("{:.15}", e.negativity),
                        };
                        let _ = writeln!(out, "{:<6} {:>22} {:>10} {:>22.15}", s.split.name(), n, e.verdict.name(), e.min_eigenvalue());
                    }
                    Err(err) => {
                        let _ = writeln!(out, "{:<6} error: {err}", s.split.name());
                    }
                }
            }
            for s in &r.splits {
                if let Ok(e) = &s.estimate {
                    let party = transposed_party(s.split);
                    let verdict = match e.verdict {
                        tripneg_core::spectral::Verdict::Entangled => "has a negative eigenvalue",
                        tripneg_core::spectral::Verdict::Ppt => "is positive semidefinite",
                    };
                    let _ = writeln!(out, "partial transpose on {} for {}: {verdict}", party.label(), s.split.name());
                    if e.has_residual_warning() {
                        let _ = writeln!(out, "  warning: moment round-trip residual {:.2e}", e.residual);
                    }
                }
            }
            if let Some(w) = r.conditioning_warning {
                let _ = writeln!(out, "conditioning warning: dimension {} > 12, worst residual {:.2e}", r.dims.total(), w);
            }
            let _ = writeln!(out, "genuine tripartite entanglement: {}", r.genuine.name());
        }
    }
    out
}

fn split_kv(out: &mut String, name: &str, e: &SplitEstimate) {
    let _ = writeln!(out, "negativity.{name}={}", format_f64(e.negativity));
    let _ = writeln!(out, "negativity_raw.{name}={}", format_f64(e.raw));
    let _ = writeln!(out, "verdict.{name}={}", e.verdict.name());
    let _ = writeln!(out, "threshold.{name}={}", format_f64(e.threshold));
    if let Some(se) = e.std_err {
        let _ = writeln!(out, "std_err.{name}={}", format_f64(se));
    }
    let _ = writeln!(out, "min_eigenvalue.{name}={}", format_f64(e.min_eigenvalue()));
    let _ = writeln!(out, "spectrum.{name}={}", list(&e.spectrum));
    if let Some(w) = &e.weights {
        let _ = writeln!(out, "weights.{name}={}", list(w));
    }
    let _ = writeln!(out, "residual.{name}={}", format_f64(e.residual));
}

pub fn majorization_report(r: &MajorizationReport, fmt: Format) -> String {
    let mut out = String::new();
    match fmt {
        Format::Kv => {
            let _ = writeln!(out, "report=majorization");
            let _ = writeln!(out, "provenance={}", r.provenance.name());
            let _ = writeln!(out, "dims={}", dims_kv(r.dims));
            if let Some(p) = r.parameter_count {
                let _ = writeln!(out, "parameters={p}");
            }
            if let Some(m) = &r.moments {
                moments_kv(&mut out, m, false);
            }
            for (label, spec) in &r.spectra {
                let _ = writeln!(out, "spectrum.{label}={}", list(spec.values()));
            }
            for rel in &r.relations {
                let _ = writeln!(out, "relation.{}<{}={}", rel.left, rel.right, if rel.holds { "holds" } else { "fails" });
            }
            let _ = writeln!(out, "detected={}", r.detected());
        }
        Format::Table => {
            let _ = writeln!(out, "majorization report ({}, dims {})", r.provenance.name(), r.dims);
            if let Some(p) = r.parameter_count {
                let _ = writeln!(out, "measured parameters: {p}");
            }
            for (label, spec) in &r.spectra {
                let vals: Vec<String> = spec.values().iter().map(|v| format!("{v:.6}")).collect();
                let _ = writeln!(out, "  λ({:<3}) = ({})", label.name(), vals.join(", "));
            }
            for rel in &r.relations {
                let _ = writeln!(out, "  λ({}) ≺ λ({}): {}", rel.left, rel.right, if rel.holds { "holds" } else { "FAILS" });
            }
            let verdict = if r.detected() { "entangled (a relation fails)" } else { "not detected (all relations hold)" };
            let _ = writeln!(out, "verdict: {verdict}");
        }
    }
    out
}

pub fn simulation(
    k: usize,
    group: &str,
    dist: &AncillaDistribution,
    e: &GroupExpectations,
    deviation: Option<f64>,
    fmt: Format,
) -> String {
    let mut out = String::new();
    let names = ["zz_ab", "zz_ac", "zz_bc"];
    let singles = ["z_a", "z_b", "z_c"];
    match fmt {
        Format::Kv => {
            let _ = writeln!(out, "k={k}");
            let _ = writeln!(out, "group={group}");
            for (i, p) in dist.probs().iter().enumerate() {
                let _ = writeln!(out, "p.{}={}", outcome_label(i), format_f64(*p));
            }
            let _ = writeln!(out, "zzz={}", format_f64(e.zzz));
            for (n, v) in names.iter().zip(e.zz) {
                let _ = writeln!(out, "{n}={}", format_f64(v));
            }
            for (n, v) in singles.iter().zip(e.z) {
                let _ = writeln!(out, "{n}={}", format_f64(v));
            }
            if let Some(d) = deviation {
                let _ = writeln!(out, "max_deviation={}", format_f64(d));
            }
        }
        Format::Table => {
            let _ = writeln!(out, "group {group}, k = {k}");
            for (i, p) in dist.probs().iter().enumerate() {
                let _ = writeln!(out, "  P({}) = {:.17}", outcome_label(i), p);
            }
            let _ = writeln!(out, "  <zzz> = {:.17}", e.zzz);
            for (n, v) in names.iter().zip(e.zz) {
                let _ = writeln!(out, "  <{n}> = {v:.17}");
            }
            for (n, v) in singles.iter().zip(e.z) {
                let _ = writeln!(out, "  <{n}> = {v:.17}");
            }
            if let Some(d) = deviation {
                let _ = writeln!(out, "  max deviation from closed form: {d:.3e}");
            }
        }
    }
    out
}

pub fn table1(cells: &[Cell], fmt: Format) -> String {
    let mut out = String::new();
    match fmt {
        Format::Kv => {
            for c in cells {
                let key = format!("cell.{}.{}", c.group, c.k);
                let _ = writeln!(out, "{key}.computed={}", format_f64(c.computed));
                let _ = writeln!(out, "{key}.printed={}", c.printed);
                let _ = writeln!(out, "{key}.status={}", c.status.name());
                if let CellStatus::Flagged { corrected } = c.status {
                    let _ = writeln!(out, "{key}.corrected={corrected}");
                }
            }
            let _ = writeln!(out, "mismatches={}", crate::table1::mismatches(cells));
        }
        Format::Table => {
            let _ = writeln!(out, "{:<5} {:>2} {:>24} {:>22}  status", "group", "k", "computed", "printed");
            for c in cells {
                let status = match c.status {
                    CellStatus::Flagged { corrected } => format!("flagged: printed entry is a misprint, computed matches {corrected}"),
                    CellStatus::Mismatch => format!("MISMATCH (printed {:.17e})", c.printed.value()),
                    CellStatus::Match => "match".into(),
                };
                let _ = writeln!(out, "{:<5} {:>2} {:>24.17e} {:>22}  {status}", c.group.to_string(), c.k, c.computed, c.printed.to_string());
            }
            let _ = writeln!(out, "mismatching cells: {}", crate::table1::mismatches(cells));
        }
    }
    out
}

pub fn paramcount(rows: &[(usize, usize, usize)], fmt: Format) -> String {
    let mut out = String::new();
    match fmt {
        Format::Kv => {
            for (d, direct, tomo) in rows {
                let _ = writeln!(out, "direct.{d}={direct}");
                let _ = writeln!(out, "tomography.{d}={tomo}");
            }
        }
        Format::Table => {
            let _ = writeln!(out, "{:>4} {:>8} {:>11}", "d", "direct", "tomography");
            for (d, direct, tomo) in rows {
                let _ = writeln!(out, "{d:>4} {direct:>8} {tomo:>11}");
            }
        }
    }
    out
}
