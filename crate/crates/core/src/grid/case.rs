//! Plain-text bus/branch case files.
//!
//! ```text
//! # comment
//! BUS id injection_re injection_im
//! BRANCH i j admittance_re admittance_im
//! SLACK id          (optional; defaults to the first BUS record)
//! ```
//!
//! Bus ids are arbitrary integers and are re-indexed densely from 0 in the
//! order their `BUS` records appear.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

use num_complex::Complex64;

use super::{Branch, PowerGrid};
use crate::error::{Error, Result};

/// Names of the cases compiled into the library.
pub const BUNDLED_CASES: [&str; 4] = ["ieee9", "ieee14", "ieee30", "ieee118"];

/// Raw text of a bundled case.
pub fn bundled_case(name: &str) -> Option<&'static str> {
    match name {
        "ieee9" => Some(include_str!("../../data/cases/ieee9.case")),
        "ieee14" => Some(include_str!("../../data/cases/ieee14.case")),
        "ieee30" => Some(include_str!("../../data/cases/ieee30.case")),
        "ieee118" => Some(include_str!("../../data/cases/ieee118.case")),
        _ => None,
    }
}

pub fn load_bundled(name: &str) -> Result<PowerGrid> {
    let text = bundled_case(name)
        .ok_or_else(|| Error::InvalidArgument(format!("unknown bundled case {name:?}")))?;
    parse_case(text, name)
}

pub fn load_case(path: impl AsRef<Path>) -> Result<PowerGrid> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_case(&text, &path.display().to_string())
}

/// Parses case text. `origin` names the source in error messages.
pub fn parse_case(text: &str, origin: &str) -> Result<PowerGrid> {
    let fail = |line: usize, msg: String| Error::CaseParse {
        path: origin.to_string(),
        line,
        msg,
    };

    let mut bus_ids = Vec::new();
    let mut injections = Vec::new();
    let mut index: HashMap<i64, usize> = HashMap::new();
    let mut raw_branches: Vec<(usize, i64, i64, Complex64)> = Vec::new();
    let mut slack: Option<(usize, i64)> = None;

    for (lineno, raw) in text.lines().enumerate() {
        let lineno = lineno + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let tokens: Vec<&str> = line.split_whitespace().collect();
        let int = |s: &str| {
            s.parse::<i64>()
                .map_err(|_| fail(lineno, format!("expected integer, found {s:?}")))
        };
        let real = |s: &str| {
            s.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| fail(lineno, format!("expected finite number, found {s:?}")))
        };
        match tokens[0].to_ascii_uppercase().as_str() {
            "BUS" => {
                if tokens.len() != 4 {
                    return Err(fail(lineno, "BUS expects: id injection_re injection_im".into()));
                }
                let id = int(tokens[1])?;
                if index.insert(id, bus_ids.len()).is_some() {
                    return Err(fail(lineno, format!("duplicate bus {id}")));
                }
                bus_ids.push(id);
                injections.push(Complex64::new(real(tokens[2])?, real(tokens[3])?));
            }
            "BRANCH" => {
                if tokens.len() != 5 {
                    return Err(fail(lineno, "BRANCH expects: i j admittance_re admittance_im".into()));
                }
                let (i, j) = (int(tokens[1])?, int(tokens[2])?);
                if i == j {
                    return Err(fail(lineno, format!("self-loop on bus {i}")));
                }
                let y = Complex64::new(real(tokens[3])?, real(tokens[4])?);
                if y.norm() == 0.0 {
                    return Err(fail(lineno, "zero admittance".into()));
                }
                raw_branches.push((lineno, i, j, y));
            }
            "SLACK" => {
                if tokens.len() != 2 {
                    return Err(fail(lineno, "SLACK expects: id".into()));
                }
                if slack.is_some() {
                    return Err(fail(lineno, "duplicate SLACK record".into()));
                }
                slack = Some((lineno, int(tokens[1])?));
            }
            other => return Err(fail(lineno, format!("unknown record {other:?}"))),
        }
    }

    if bus_ids.is_empty() {
        return Err(fail(0, "no BUS records".into()));
    }

    let mut seen: HashMap<(usize, usize), usize> = HashMap::new();
    let mut branches = Vec::with_capacity(raw_branches.len());
    for (lineno, i, j, y) in raw_branches {
        let lookup = |id: i64| {
            index
                .get(&id)
                .copied()
                .ok_or_else(|| fail(lineno, format!("unknown bus {id}")))
        };
        let (a, b) = (lookup(i)?, lookup(j)?);
        let key = (a.min(b), a.max(b));
        if let Some(first) = seen.insert(key, lineno) {
            return Err(fail(
                lineno,
                format!("duplicate edge ({i}, {j}), first declared on line {first}"),
            ));
        }
        branches.push(Branch {
            from: a,
            to: b,
            admittance: y,
        });
    }

    let slack = match slack {
        None => 0,
        Some((lineno, id)) => *index
            .get(&id)
            .ok_or_else(|| fail(lineno, format!("unknown slack bus {id}")))?,
    };

    PowerGrid::new(bus_ids, branches, injections, slack).map_err(|e| match e {
        Error::InvalidGrid(msg) => fail(0, msg),
        other => other,
    })
}

impl PowerGrid {
    /// Serializes the grid back into case-file text.
    pub fn to_case_string(&self) -> String {
        let mut out = String::new();
        for (id, inj) in self.bus_ids.iter().zip(&self.injections) {
            let _ = writeln!(out, "BUS {id} {:?} {:?}", inj.re, inj.im);
        }
        let _ = writeln!(out, "SLACK {}", self.bus_ids[self.slack]);
        for b in &self.branches {
            let _ = writeln!(
                out,
                "BRANCH {} {} {:?} {:?}",
                self.bus_ids[b.from], self.bus_ids[b.to], b.admittance.re, b.admittance.im
            );
        }
        out
    }
}
