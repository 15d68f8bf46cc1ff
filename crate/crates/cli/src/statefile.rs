//! Plain-text density matrix files.
//!
//! ```text
//! # comment
//! 2 2 2
//! 0.5 0
//! 0 0
//! ...
//! ```
//!
//! The header holds the three local dimensions; the body holds `d²` lines of
//! `re im` in row-major order.

use num_complex::Complex64;
use tripneg_core::state::TripartiteState;
use tripneg_core::tensor::{ComplexMatrix, DimTriple};

use crate::format_f64;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum StateFileError {
    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },
    #[error("expected {expected} matrix entries, found {found}")]
    Length { expected: usize, found: usize },
    #[error("invalid state: {0}")]
    Invalid(#[from] tripneg_core::Error),
}

fn syntax(line: usize, msg: impl Into<String>) -> StateFileError {
    StateFileError::Syntax { line, msg: msg.into() }
}

pub fn parse(text: &str) -> Result<TripartiteState, StateFileError> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));

    let (hline, header) = lines.next().ok_or_else(|| syntax(1, "missing header 'dA dB dC'"))?;
    let dims: Vec<usize> = header
        .split_whitespace()
        .map(|t| t.parse().map_err(|_| syntax(hline, format!("bad dimension '{t}'"))))
        .collect::<Result<_, _>>()?;
    let [a, b, c] = dims[..] else {
        return Err(syntax(hline, format!("header needs three dimensions, found {}", dims.len())));
    };
    let dims = DimTriple::new(a, b, c).map_err(|e| syntax(hline, e.to_string()))?;
    let d = dims.total();

    let mut data = Vec::with_capacity(d * d);
    for (line, body) in lines {
        let fields: Vec<&str> = body.split_whitespace().collect();
        if fields.len() != 2 {
            return Err(syntax(line, format!("expected 're im', found {} fields", fields.len())));
        }
        let num = |t: &str| -> Result<f64, StateFileError> {
            let v: f64 = t.parse().map_err(|_| syntax(line, format!("bad number '{t}'")))?;
            if v.is_finite() {
                Ok(v)
            } else {
                Err(syntax(line, format!("non-finite number '{t}'")))
            }
        };
        data.push(Complex64::new(num(fields[0])?, num(fields[1])?));
    }
    if data.len() != d * d {
        return Err(StateFileError::Length { expected: d * d, found: data.len() });
    }
    let m = ComplexMatrix::from_vec(d, d, data)?;
    Ok(TripartiteState::new(dims, m)?)
}

pub fn write(state: &TripartiteState) -> String {
    let dims = state.dims();
    let mut out = format!("{} {} {}\n", dims.a, dims.b, dims.c);
    for z in state.matrix().as_slice() {
        out.push_str(&format_f64(z.re));
        out.push(' ');
        out.push_str(&format_f64(z.im));
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use tripneg_core::state::bound_state;

    #[test]
    fn round_trip() {
        let s = bound_state();
        let back = parse(&write(&s)).unwrap();
        assert_eq!(back, s);
    }

    #[test]
    fn reports_line_numbers() {
        let text = "# hi\n2 2 2\n0.5 0\nfoo 0\n";
        assert_eq!(parse(text).unwrap_err(), StateFileError::Syntax { line: 4, msg: "bad number 'foo'".into() });
        assert!(matches!(parse("2 2\n"), Err(StateFileError::Syntax { line: 1, .. })));
        assert!(matches!(parse("2 2 2\n1 0\n"), Err(StateFileError::Length { expected: 64, found: 1 })));
    }

    #[test]
    fn rejects_invalid_states() {
        let mut text = String::from("2 2 2\n");
        for i in 0..64 {
            text.push_str(if i == 0 { "2 0\n" } else { "0 0\n" });
        }
        assert!(matches!(parse(&text), Err(StateFileError::Invalid(_))));
    }
}
