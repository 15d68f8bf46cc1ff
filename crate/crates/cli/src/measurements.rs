//! Line-oriented `key=value` files holding measured correlators.
//!
//! ```text
//! format=tripneg-measurements-v1
//! dims=2,2,2
//! shots=1000000
//! e.1.2.zzz=0.22222222222222221
//! e.-++.3.zz_ab=...
//! ```
//!
//! Each `(group, k)` block has the keys `zzz`, `zz_ab`, `zz_ac`, `zz_bc`,
//! `z_a`, `z_b`, `z_c`. `shots` is omitted for exact expectations.

use std::collections::BTreeMap;

use tripneg_core::moments::{Group, GroupExpectations, MeasurementSet};
use tripneg_core::tensor::DimTriple;

use crate::format_f64;

pub const FORMAT_TAG: &str = "tripneg-measurements-v1";

const OBSERVABLES: [&str; 7] = ["zzz", "zz_ab", "zz_ac", "zz_bc", "z_a", "z_b", "z_c"];

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum MeasurementFileError {
    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },
    #[error("{0}")]
    Incomplete(String),
}

fn syntax(line: usize, msg: impl Into<String>) -> MeasurementFileError {
    MeasurementFileError::Syntax { line, msg: msg.into() }
}

pub fn write(set: &MeasurementSet) -> String {
    let d = set.dims;
    let mut out = format!("format={FORMAT_TAG}\ndims={},{},{}\n", d.a, d.b, d.c);
    if let Some(n) = set.shots {
        out.push_str(&format!("shots={n}\n"));
    }
    for ((g, k), e) in &set.entries {
        let values = [e.zzz, e.zz[0], e.zz[1], e.zz[2], e.z[0], e.z[1], e.z[2]];
        for (obs, v) in OBSERVABLES.iter().zip(values) {
            out.push_str(&format!("e.{g}.{k}.{obs}={}\n", format_f64(v)));
        }
    }
    out
}

pub fn parse(text: &str) -> Result<MeasurementSet, MeasurementFileError> {
    let mut dims = None;
    let mut shots = None;
    let mut tagged = false;
    let mut raw: BTreeMap<(Group, usize), [Option<f64>; 7]> = BTreeMap::new();
    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| syntax(line_no, "expected key=value"))?;
        match key {
            "format" => {
                if value != FORMAT_TAG {
                    return Err(syntax(line_no, format!("unsupported format '{value}'")));
                }
                tagged = true;
            }
            "dims" => {
                let v: Vec<usize> = value
                    .split(',')
                    .map(|t| t.trim().parse().map_err(|_| syntax(line_no, format!("bad dimension '{t}'"))))
                    .collect::<Result<_, _>>()?;
                let [a, b, c] = v[..] else {
                    return Err(syntax(line_no, "dims needs three values"));
                };
                dims = Some(DimTriple::new(a, b, c).map_err(|e| syntax(line_no, e.to_string()))?);
            }
            "shots" => {
                let n: u64 = value.parse().map_err(|_| syntax(line_no, format!("bad shot count '{value}'")))?;
                if n == 0 {
                    return Err(syntax(line_no, "shot count must be at least 1"));
                }
                shots = Some(n);
            }
            _ => {
                let rest = key.strip_prefix("e.").ok_or_else(|| syntax(line_no, format!("unknown key '{key}'")))?;
                let mut parts = rest.rsplitn(3, '.');
                let (obs, k, group) = match (parts.next(), parts.next(), parts.next()) {
                    (Some(o), Some(k), Some(g)) => (o, k, g),
                    _ => return Err(syntax(line_no, format!("malformed key '{key}'"))),
                };
                let group: Group = group.parse().map_err(|_| syntax(line_no, format!("unknown group '{group}'")))?;
                let k: usize = k.parse().map_err(|_| syntax(line_no, format!("bad copy count '{k}'")))?;
                let slot = OBSERVABLES
                    .iter()
                    .position(|o| *o == obs)
                    .ok_or_else(|| syntax(line_no, format!("unknown observable '{obs}'")))?;
                let v: f64 = value.parse().map_err(|_| syntax(line_no, format!("bad number '{value}'")))?;
                if !v.is_finite() || v.abs() > 1.0 + 1e-12 {
                    return Err(syntax(line_no, format!("expectation {v} outside [-1, 1]")));
                }
                raw.entry((group, k)).or_default()[slot] = Some(v);
            }
        }
    }
    if !tagged {
        return Err(MeasurementFileError::Incomplete(format!("missing 'format={FORMAT_TAG}'")));
    }
    let dims = dims.ok_or_else(|| MeasurementFileError::Incomplete("missing 'dims'".into()))?;
    let mut set = MeasurementSet::new(dims);
    set.shots = shots;
    for ((g, k), vals) in raw {
        let mut v = [0.0; 7];
        for (i, x) in vals.iter().enumerate() {
            v[i] = x.ok_or_else(|| {
                MeasurementFileError::Incomplete(format!("group {g} at k = {k} lacks '{}'", OBSERVABLES[i]))
            })?;
        }
        set.insert(g, k, GroupExpectations { zzz: v[0], zz: [v[1], v[2], v[3]], z: [v[4], v[5], v[6]] });
    }
    Ok(set)
}
