//! Reference table of three-ancilla correlators for the bound entangled
//! state, recomputed and compared cell by cell.

use tripneg_core::moments::{group_expectations, CalibrationTable, Group};
use tripneg_core::network::SignConfig;
use tripneg_core::state::bound_state;

/// `num / den`, optionally divided by √2.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Exact {
    pub num: u64,
    pub den: u64,
    pub over_sqrt2: bool,
}

impl Exact {
    pub const fn new(num: u64, den: u64, over_sqrt2: bool) -> Self {
        Self { num, den, over_sqrt2 }
    }

    pub fn value(&self) -> f64 {
        let v = self.num as f64 / self.den as f64;
        if self.over_sqrt2 {
            v / std::f64::consts::SQRT_2
        } else {
            v
        }
    }
}

impl std::fmt::Display for Exact {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.over_sqrt2 {
            write!(f, "{}/({}*sqrt2)", self.num, self.den)
        } else {
            write!(f, "{}/{}", self.num, self.den)
        }
    }
}

pub const TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CellStatus {
    Match,
    Mismatch,
    /// A known misprint: the computed value matches `corrected`, not the
    /// printed entry.
    Flagged { corrected: Exact },
}

impl CellStatus {
    pub fn name(&self) -> &'static str {
        match self {
            CellStatus::Match => "match",
            CellStatus::Mismatch => "mismatch",
            CellStatus::Flagged { .. } => "flagged",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Cell {
    pub group: Group,
    pub k: usize,
    pub computed: f64,
    pub printed: Exact,
    pub status: CellStatus,
}

const D: [u64; 7] = [9, 144, 1296, 5184, 46656, 186624, 1679616];

/// The printed rows, k = 2..8 for group one and k = 3..8 otherwise.
pub fn printed_rows() -> Vec<(Group, Vec<Exact>)> {
    let first = [2, 7, 17, 19, 51, 67, 197];
    let mut first_row: Vec<Exact> = first.iter().zip(D).map(|(&n, d)| Exact::new(n, d, false)).collect();
    first_row[3] = Exact::new(19, 5284, false);
    let row = |nums: [u64; 6], dens: [u64; 6]| -> Vec<Exact> {
        nums.iter().zip(dens).map(|(&n, d)| Exact::new(n, d, true)).collect()
    };
    let mpp = row([5, 13, 17, 49, 65, 193], [144, 1296, 5184, 46656, 186624, 1679616]);
    let mpm = row([1, 7, 7, 19, 23, 67], [48, 1296, 5184, 46656, 186624, 1679616]);
    vec![
        (Group::First, first_row),
        (Group::Second(SignConfig::MPP), mpp),
        (Group::Second(SignConfig::MPM), mpm.clone()),
        (Group::Second(SignConfig::PPM), mpm),
    ]
}

/// Known misprints: `(group, k, corrected value)`.
pub fn known_misprints() -> Vec<(Group, usize, Exact)> {
    vec![(Group::First, 5, Exact::new(19, 5184, false))]
}

/// Computes every printed cell from the closed-form network output.
pub fn compute() -> Vec<Cell> {
    let table = CalibrationTable::closed_form();
    let rho = bound_state();
    let misprints = known_misprints();
    let mut cells = Vec::new();
    for (group, printed) in printed_rows() {
        for (i, exact) in printed.into_iter().enumerate() {
            let k = i + group.min_k();
            let computed = group_expectations(&rho, k, group, &table).expect("closed-form groups").zzz;
            let close = |e: &Exact| (computed - e.value()).abs() <= TOLERANCE;
            let status = match misprints.iter().find(|(g, kk, _)| *g == group && *kk == k) {
                Some(&(_, _, corrected)) if close(&corrected) && !close(&exact) => CellStatus::Flagged { corrected },
                _ if close(&exact) => CellStatus::Match,
                _ => CellStatus::Mismatch,
            };
            cells.push(Cell { group, k, computed, printed: exact, status });
        }
    }
    cells
}

pub fn mismatches(cells: &[Cell]) -> usize {
    cells.iter().filter(|c| c.status == CellStatus::Mismatch).count()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn twenty_five_cells() {
        assert_eq!(compute().len(), 25);
    }

    #[test]
    fn flagged_cell_matches_corrected_value() {
        let cells = compute();
        let c = cells.iter().find(|c| c.group == Group::First && c.k == 5).unwrap();
        assert!(matches!(c.status, CellStatus::Flagged { .. }));
        assert!((c.computed - 19.0 / 5184.0).abs() < 1e-15);
    }

    #[test]
    fn group_one_k6_is_53_over_46656() {
        // Σγ at k = 6: (3·68 + 8)/4 / 46656
        let cells = compute();
        let c = cells.iter().find(|c| c.group == Group::First && c.k == 6).unwrap();
        assert!((c.computed - 53.0 / 46656.0).abs() < 1e-15);
    }

    #[test]
    fn last_mpp_cell() {
        let cells = compute();
        let c = cells.iter().find(|c| c.group == Group::Second(SignConfig::MPP) && c.k == 8).unwrap();
        assert!((c.computed - 193.0 / (1679616.0 * std::f64::consts::SQRT_2)).abs() < 1e-15);
        assert_eq!(c.status, CellStatus::Match);
    }
}
