//! The structured stage-one evaluation against a literal circuit on the full
//! register, and gate-level distributions against the closed forms.

use num_complex::Complex64;
use tripneg_core::moments::{
    gate_distribution, group_distribution, mu_vector, primitives, CalibrationTable, Group, PairReadout,
};
use tripneg_core::network::{self, first_stage, second_stage, AncillaDistribution, Sign, SignConfig};
use tripneg_core::state::{bound_state, ghz, maximally_mixed, random_state, w_state, TripartiteState};
use tripneg_core::tensor::{kron, ComplexMatrix, DimTriple};

fn hadamard3() -> ComplexMatrix {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let h = ComplexMatrix::from_real_rows(&[&[s, s], &[s, -s]]).unwrap();
    kron(&kron(&h, &h), &h)
}

/// `ρ^{⊗k}`, copies outer.
fn tensor_power(rho: &ComplexMatrix, k: usize) -> ComplexMatrix {
    let mut out = rho.clone();
    for _ in 1..k {
        out = kron(&out, rho);
    }
    out
}

/// Index map of the cyclic shift on party `x` across `k` copies of a qubit triple.
fn shifted(s: usize, k: usize, x: usize) -> usize {
    let digits: Vec<[usize; 3]> =
        (0..k).map(|c| { let v = (s >> (3 * (k - 1 - c))) & 7; [(v >> 2) & 1, (v >> 1) & 1, v & 1] }).collect();
    let mut out = digits.clone();
    for c in 0..k {
        out[(c + 1) % k][x] = digits[c][x];
    }
    out.iter().fold(0, |acc, d| (acc << 3) | (d[0] << 2) | (d[1] << 1) | d[2])
}

fn literal_first_stage(rho: &TripartiteState, k: usize) -> ComplexMatrix {
    let sys = 1usize << (3 * k);
    let n = sys * 8;
    let h3 = hadamard3();
    let plus = h3.matmul(&ComplexMatrix::diagonal(&[1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0])).matmul(&h3);
    let mut state = kron(&tensor_power(rho.matrix(), k), &plus);
    for x in 0..3 {
        let mut u = ComplexMatrix::zeros(n, n);
        for s in 0..sys {
            for a in 0..8 {
                let control = (a >> (2 - x)) & 1 == 1;
                let target = if control { shifted(s, k, x) } else { s };
                u[(target * 8 + a, s * 8 + a)] = Complex64::new(1.0, 0.0);
            }
        }
        state = u.matmul(&state).matmul(&u.adjoint());
    }
    let h_full = kron(&ComplexMatrix::identity(sys), &h3);
    state = h_full.matmul(&state).matmul(&h_full);
    let mut reduced = ComplexMatrix::zeros(8, 8);
    for s in 0..sys {
        for a in 0..8 {
            for b in 0..8 {
                reduced[(a, b)] += state[(s * 8 + a, s * 8 + b)];
            }
        }
    }
    reduced
}

fn pool() -> Vec<TripartiteState> {
    let mut v = vec![bound_state(), ghz(), w_state()];
    for seed in 0..10 {
        v.push(random_state(DimTriple::QUBITS, 8, 7000 + seed).unwrap());
    }
    v
}

#[test]
fn structured_first_stage_matches_literal_circuit() {
    for rho in [bound_state(), random_state(DimTriple::QUBITS, 3, 11).unwrap()] {
        for k in 1..=2 {
            let literal = literal_first_stage(&rho, k);
            let structured = first_stage(&rho, k).unwrap();
            assert!(structured.matrix().max_abs_diff(&literal) < 1e-12);
        }
    }
}

#[test]
fn mu_matrix_matches_gate_level_state() {
    for rho in pool() {
        for k in 2..=3 {
            let gate = first_stage(&rho, k).unwrap();
            let analytic = mu_vector(&primitives(&rho, k).unwrap()).ancilla_matrix();
            assert!(gate.matrix().max_abs_diff(&analytic) < 1e-12);
        }
    }
}

#[test]
fn maximally_mixed_k2_first_outcome() {
    let d = first_stage(&maximally_mixed(DimTriple::QUBITS), 2).unwrap().distribution();
    assert!((d.probs()[0] - 27.0 / 64.0).abs() < 1e-14);
}

#[test]
fn k1_gives_point_mass() {
    for rho in pool() {
        let d = first_stage(&rho, 1).unwrap().distribution();
        assert!((d.probs()[0] - 1.0).abs() < 1e-14);
    }
}

fn max_gap(a: &AncillaDistribution, b: &AncillaDistribution) -> f64 {
    a.probs().iter().zip(b.probs()).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

#[test]
fn calibrated_patterns() {
    let table = CalibrationTable::calibrated().unwrap();
    let closed = CalibrationTable::closed_form();
    for cfg in [SignConfig::MPP, SignConfig::MPM, SignConfig::PPM] {
        assert_eq!(table.get(cfg), closed.get(cfg));
    }
    let ppp = table.pattern(SignConfig::PPP).unwrap();
    assert_eq!(ppp.gamma, [Sign::Minus, Sign::Plus, Sign::Plus, Sign::Plus]);
    assert_eq!(ppp.pairs, [PairReadout::Transposed; 3]);
    // flipping every control sign leaves the readout unchanged
    for cfg in SignConfig::all() {
        let flipped = SignConfig::new(flip(cfg.a), flip(cfg.b), flip(cfg.c));
        assert_eq!(table.get(cfg), table.get(flipped));
    }
}

fn flip(s: Sign) -> Sign {
    match s {
        Sign::Plus => Sign::Minus,
        Sign::Minus => Sign::Plus,
    }
}

#[test]
fn gate_distributions_match_closed_forms() {
    let table = CalibrationTable::calibrated().unwrap();
    let groups = [
        Group::First,
        Group::Second(SignConfig::MPP),
        Group::Second(SignConfig::MPM),
        Group::Second(SignConfig::PPM),
        Group::Second(SignConfig::PPP),
    ];
    for rho in pool() {
        for k in 2..=3 {
            for g in groups {
                let gate = gate_distribution(&rho, k, g, network::DEFAULT_SIZE_CAP).unwrap();
                let analytic = group_distribution(&rho, k, g, table).unwrap();
                assert!(max_gap(&gate, &analytic) < 1e-10, "{g} k={k}");
            }
        }
    }
}

#[test]
fn second_stage_of_uniform_input_is_uniform() {
    let first = network::AncillaState3::new(ComplexMatrix::identity(8).scale(Complex64::new(0.125, 0.0))).unwrap();
    for cfg in SignConfig::all() {
        assert!(max_gap(&second_stage(&first, cfg), &AncillaDistribution::uniform()) < 1e-15);
    }
}

#[test]
fn size_cap_is_enforced() {
    let err = gate_distribution(&bound_state(), 5, Group::First, 8192).unwrap_err();
    assert!(matches!(err, tripneg_core::Error::SizeCap { .. }));
}
