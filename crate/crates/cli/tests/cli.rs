//! End-to-end behaviour of the `tripneg` binary and its command layer.

use std::collections::HashMap;
use std::path::Path;
use std::process::Command;

use clap::Parser;
use proptest::prelude::*;
use tripneg::{run, statefile, Cli};
use tripneg_core::state::{bound_state, maximally_mixed, random_state};
use tripneg_core::tensor::DimTriple;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_tripneg"))
}

fn exec(args: &[&str]) -> (String, i32) {
    let out = bin().args(args).output().unwrap();
    (String::from_utf8(out.stdout).unwrap(), out.status.code().unwrap())
}

fn call(args: &[&str]) -> tripneg::Output {
    let mut full = vec!["tripneg"];
    full.extend_from_slice(args);
    run(Cli::try_parse_from(full).unwrap()).unwrap()
}

fn kv(text: &str) -> HashMap<String, String> {
    text.lines().filter_map(|l| l.split_once('=')).map(|(k, v)| (k.to_string(), v.to_string())).collect()
}

fn num(map: &HashMap<String, String>, key: &str) -> f64 {
    map.get(key).unwrap_or_else(|| panic!("missing {key}")).parse().unwrap()
}

fn gen_file(dir: &Path, name: &str, args: &[&str]) -> String {
    let path = dir.join(name).to_str().unwrap().to_string();
    let mut full = vec!["gen"];
    full.extend_from_slice(args);
    full.extend_from_slice(&["--out", &path]);
    assert_eq!(call(&full).code, 0);
    path
}

#[test]
fn bound_file_reproduces_the_state() {
    let dir = tempfile::tempdir().unwrap();
    let b = gen_file(dir.path(), "b.txt", &["bound"]);
    let loaded = statefile::parse(&std::fs::read_to_string(&b).unwrap()).unwrap();
    assert_eq!(loaded.matrix(), bound_state().matrix());
    let d = gen_file(dir.path(), "d.txt", &["dct", "--params", "1/3", "0", "1/6", "0", "1/6"]);
    assert_eq!(std::fs::read(&b).unwrap(), std::fs::read(&d).unwrap());
}

#[test]
fn random_generation_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let a = gen_file(dir.path(), "a.txt", &["random", "--seed", "17", "--rank", "3"]);
    let b = gen_file(dir.path(), "b.txt", &["random", "--seed", "17", "--rank", "3"]);
    let c = gen_file(dir.path(), "c.txt", &["random", "--seed", "18", "--rank", "3"]);
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    assert_ne!(std::fs::read(&a).unwrap(), std::fs::read(&c).unwrap());
}

#[test]
fn detect_bound_state_full() {
    let dir = tempfile::tempdir().unwrap();
    let b = gen_file(dir.path(), "b.txt", &["bound"]);
    let (out, code) = exec(&["detect", "--state", &b, "--format", "kv"]);
    assert_eq!(code, 0);
    let m = kv(&out);
    assert_eq!(m["parameters"], "25");
    assert_eq!(m["provenance"], "locc-pipeline");
    assert!((num(&m, "negativity.A-BC") - 1.0 / 6.0).abs() < 1e-9);
    for s in ["B-AC", "C-AB", "A-B", "A-C", "B-C"] {
        assert!(num(&m, &format!("negativity.{s}")) < 1e-9);
        assert_eq!(m[&format!("verdict.{s}")], "ppt");
    }
    assert_eq!(m["verdict.A-BC"], "entangled");
    assert_eq!(m["genuine_tripartite"], "detected");
}

#[test]
fn detect_ghz_a_side() {
    let dir = tempfile::tempdir().unwrap();
    let g = gen_file(dir.path(), "g.txt", &["ghz"]);
    let m = kv(&call(&["detect", "--state", &g, "--mode", "a-side", "--format", "kv"]).stdout);
    assert_eq!(m["parameters"], "13");
    assert!((num(&m, "negativity.A-BC") - 0.5).abs() < 1e-9);
    assert!(num(&m, "negativity.A-B") < 1e-9);
    assert!(num(&m, "negativity.A-C") < 1e-9);
    assert!(!m.contains_key("negativity.B-AC"));
}

#[test]
fn detect_product_majorization() {
    let dir = tempfile::tempdir().unwrap();
    let p = gen_file(dir.path(), "p.txt", &["product", "--seed", "5"]);
    let m = kv(&call(&["detect", "--state", &p, "--mode", "majorization", "--format", "kv"]).stdout);
    assert_eq!(m["detected"], "false");
    assert_eq!(m.keys().filter(|k| k.starts_with("relation.")).count(), 12);
    assert!(m.iter().filter(|(k, _)| k.starts_with("relation.")).all(|(_, v)| v == "holds"));
}

#[test]
fn saved_measurements_reproduce_the_report() {
    let dir = tempfile::tempdir().unwrap();
    let r = gen_file(dir.path(), "r.txt", &["random", "--seed", "2"]);
    let saved = dir.path().join("m.kv").to_str().unwrap().to_string();
    let first = call(&["detect", "--state", &r, "--format", "kv", "--save-measurements", &saved]);
    let second = call(&["detect", "--measurements", &saved, "--format", "kv"]);
    assert_eq!(first, second);
}

#[test]
fn table1_flags_and_exit_status() {
    let (out, code) = exec(&["table1", "--format", "kv"]);
    let m = kv(&out);
    assert_eq!(m["cell.1.5.status"], "flagged");
    assert_eq!(m["cell.1.5.corrected"], "19/5184");
    assert_eq!(m["cell.-++.8.status"], "match");
    // the printed k = 6 entry of the first row is 51/46656; the state gives 53/46656
    assert_eq!(m["cell.1.6.status"], "mismatch");
    assert_eq!(m["mismatches"], "1");
    assert_eq!(code, 2);
    for k in 3..=8 {
        assert_eq!(m[&format!("cell.-+-.{k}.computed")], m[&format!("cell.++-.{k}.computed")]);
    }
}

#[test]
fn paramcount_values() {
    let m = kv(&call(&["paramcount", "8", "18", "3", "--format", "kv"]).stdout);
    assert_eq!((m["direct.8"].as_str(), m["tomography.8"].as_str()), ("25", "63"));
    assert_eq!((m["direct.18"].as_str(), m["tomography.18"].as_str()), ("65", "323"));
    assert_eq!((m["direct.3"].as_str(), m["tomography.3"].as_str()), ("5", "8"));
    let (_, code) = exec(&["paramcount", "2"]);
    assert_eq!(code, 1);
}

#[test]
fn simulate_examples() {
    let dir = tempfile::tempdir().unwrap();
    let mm = dir.path().join("mm.txt");
    std::fs::write(&mm, statefile::write(&maximally_mixed(DimTriple::QUBITS))).unwrap();
    let mm = mm.to_str().unwrap();
    let m = kv(&call(&["simulate", "--state", mm, "--k", "2", "--format", "kv"]).stdout);
    assert!((num(&m, "p.000") - 27.0 / 64.0).abs() < 1e-14);

    let b = gen_file(dir.path(), "b.txt", &["bound"]);
    let m = kv(&call(&["simulate", "--state", &b, "--k", "2", "--path", "gate", "--format", "kv"]).stdout);
    assert!(num(&m, "max_deviation") <= 1e-10);
    let m = kv(&call(&["simulate", "--state", &b, "--k", "3", "--group", "+++", "--path", "gate", "--format", "kv"]).stdout);
    assert!(num(&m, "max_deviation") <= 1e-10);

    let m = kv(&call(&["simulate", "--state", &b, "--k", "1", "--format", "kv"]).stdout);
    assert!((num(&m, "p.000") - 1.0).abs() < 1e-14);
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let b = gen_file(dir.path(), "b.txt", &["bound"]);
    assert_eq!(exec(&["detect"]).1, 1);
    assert_eq!(exec(&["nonsense"]).1, 1);
    assert_eq!(exec(&["--help"]).1, 0);
    assert_eq!(exec(&["detect", "--state", &b, "--path", "shots"]).1, 1);
    assert_eq!(exec(&["detect", "--state", &b, "--path", "gate"]).1, 2);
    assert_eq!(exec(&["simulate", "--state", &b, "--k", "5", "--path", "gate"]).1, 2);
    let bad = dir.path().join("bad.txt");
    std::fs::write(&bad, "2 2 2\n1 0\nx 0\n").unwrap();
    let out = bin().args(["detect", "--state", bad.to_str().unwrap()]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 3"));
    assert_eq!(exec(&["gen", "dct", "--params", "0.5", "0.5", "0.5", "0", "0"]).1, 2);
    assert_eq!(exec(&["gen", "ghz", "--dims", "2", "2", "3"]).1, 1);
}

#[test]
fn ill_conditioned_measurements_exit_3() {
    let dir = tempfile::tempdir().unwrap();
    let mut text = String::from("format=tripneg-measurements-v1\ndims=2,2,2\n");
    for k in 2..=8 {
        let groups: &[&str] = if k == 2 { &["1"] } else { &["1", "-++"] };
        for g in groups {
            // all correlators zero: moments inconsistent with any hermitian spectrum
            for obs in ["zzz", "zz_ab", "zz_ac", "zz_bc", "z_a", "z_b", "z_c"] {
                text.push_str(&format!("e.{g}.{k}.{obs}=0\n"));
            }
        }
    }
    let path = dir.path().join("bad.kv");
    std::fs::write(&path, text).unwrap();
    let (out, code) = exec(&["detect", "--measurements", path.to_str().unwrap(), "--mode", "a-side", "--format", "kv"]);
    assert_eq!(code, 3, "{out}");
    assert!(out.contains("error.A-BC="));
}

#[test]
fn shots_converge_to_analytic_verdicts() {
    let dir = tempfile::tempdir().unwrap();
    let states = [
        gen_file(dir.path(), "b.txt", &["bound"]),
        gen_file(dir.path(), "g.txt", &["ghz"]),
        gen_file(dir.path(), "w.txt", &["w"]),
        gen_file(dir.path(), "p.txt", &["product", "--seed", "1"]),
    ];
    for s in &states {
        let exact = kv(&call(&["detect", "--state", s, "--mode", "a-side", "--format", "kv"]).stdout);
        let noisy = kv(&call(&["detect", "--state", s, "--mode", "a-side", "--shots", "1000000", "--seed", "9", "--format", "kv"]).stdout);
        for split in ["A-BC", "A-B", "A-C"] {
            let key = format!("verdict.{split}");
            assert_eq!(exact[&key], noisy[&key], "{s} {split}");
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn state_files_round_trip(seed in any::<u64>(), rank in 1usize..=12, a in 2usize..=3, c in 2usize..=3) {
        let dims = DimTriple::new(a, 2, c).unwrap();
        let rho = random_state(dims, rank.min(dims.total()), seed).unwrap();
        let back = statefile::parse(&statefile::write(&rho)).unwrap();
        prop_assert!(back.matrix().max_abs_diff(rho.matrix()) <= 1e-15);
        prop_assert_eq!(back.dims(), dims);
    }
}
