//! TOML problem-definition files.
//!
//! ```toml
//! rho = [1.0, 2.0]
//! potential = [[0.0], [0.0, 1.0]]   # optional; ascending coefficients per piece
//!
//! [domain]
//! a = -1.0
//! b = 1.0
//! xi = [0.0]                        # optional when there are no interfaces
//!
//! [boundary.left]
//! delta1 = 1.0
//! delta2 = 0.0
//! delta3 = 0.0
//! delta4 = -1.0
//!
//! [boundary.right]
//! gamma1 = 1.0
//! gamma2 = 0.0
//! gamma3 = 0.0
//! gamma4 = -1.0
//!
//! [transmission.1]
//! row1 = [1.0, 0.0, -0.5, 0.0]
//! row2 = [0.0, 1.0, 0.0, -2.0]
//! ```
//!
//! Unknown keys are rejected. Transmission sections are numbered `1..=n` in
//! the order of `xi`.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::problem::{validate_problem, Polynomial, ProblemSpec, TransmissionMatrix, ValidatedProblem};

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct FileRepr {
    domain: DomainRepr,
    rho: Vec<f64>,
    #[serde(default)]
    potential: Option<Vec<Vec<f64>>>,
    boundary: BoundaryRepr,
    #[serde(default)]
    transmission: BTreeMap<String, TransmissionRepr>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct DomainRepr {
    a: f64,
    b: f64,
    #[serde(default)]
    xi: Vec<f64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct BoundaryRepr {
    left: LeftRepr,
    right: RightRepr,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct LeftRepr {
    delta1: f64,
    delta2: f64,
    delta3: f64,
    delta4: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RightRepr {
    gamma1: f64,
    gamma2: f64,
    gamma3: f64,
    gamma4: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct TransmissionRepr {
    row1: [f64; 4],
    row2: [f64; 4],
}

fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].matches('\n').count() + 1
}

/// Parses problem-file text into an unvalidated [`ProblemSpec`].
pub fn parse_problem(text: &str) -> Result<ProblemSpec> {
    let repr: FileRepr = toml::from_str(text).map_err(|e| Error::Parse {
        line: e.span().map(|s| line_of(text, s.start)),
        message: e.message().trim().to_string(),
    })?;

    let n = repr.domain.xi.len();
    let mut trans = Vec::with_capacity(n);
    for i in 1..=n {
        let t = repr.transmission.get(&i.to_string()).ok_or_else(|| Error::Parse {
            line: None,
            message: format!("missing section [transmission.{i}] ({n} interface points given)"),
        })?;
        trans.push(TransmissionMatrix::new(t.row1, t.row2));
    }
    if let Some(extra) = repr
        .transmission
        .keys()
        .find(|k| k.parse::<usize>().map_or(true, |i| i == 0 || i > n))
    {
        let line = text
            .find(&format!("transmission.{extra}"))
            .map(|off| line_of(text, off));
        return Err(Error::Parse {
            line,
            message: format!("unexpected section [transmission.{extra}] ({n} interface points given)"),
        });
    }

    let q = match repr.potential {
        Some(p) => p.into_iter().map(Polynomial::new).collect(),
        None => vec![Polynomial::zero(); repr.rho.len()],
    };
    let l = repr.boundary.left;
    let r = repr.boundary.right;
    Ok(ProblemSpec {
        a: repr.domain.a,
        b: repr.domain.b,
        xi: repr.domain.xi,
        rho: repr.rho,
        q,
        delta: [l.delta1, l.delta2, l.delta3, l.delta4],
        gamma: [r.gamma1, r.gamma2, r.gamma3, r.gamma4],
        trans,
    })
}

/// Reads a problem file without validating it.
pub fn read_problem_spec(path: impl AsRef<Path>) -> Result<ProblemSpec> {
    parse_problem(&std::fs::read_to_string(path)?)
}

/// Reads and validates a problem file.
pub fn load_problem(path: impl AsRef<Path>) -> Result<ValidatedProblem> {
    validate_problem(read_problem_spec(path)?)
}

fn list(v: &[f64]) -> String {
    let items: Vec<String> = v.iter().map(|x| format!("{x:?}")).collect();
    format!("[{}]", items.join(", "))
}

/// Renders a spec in the file format; `parse_problem` inverts it exactly.
pub fn to_toml_string(spec: &ProblemSpec) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "rho = {}", list(&spec.rho));
    let pots: Vec<String> = spec
        .q
        .iter()
        .map(|p| list(p.coefficients()))
        .collect();
    let _ = writeln!(s, "potential = [{}]", pots.join(", "));
    let _ = writeln!(s, "\n[domain]\na = {:?}\nb = {:?}\nxi = {}", spec.a, spec.b, list(&spec.xi));
    s.push_str("\n[boundary.left]\n");
    for (k, v) in spec.delta.iter().enumerate() {
        let _ = writeln!(s, "delta{} = {v:?}", k + 1);
    }
    s.push_str("\n[boundary.right]\n");
    for (k, v) in spec.gamma.iter().enumerate() {
        let _ = writeln!(s, "gamma{} = {v:?}", k + 1);
    }
    for (i, t) in spec.trans.iter().enumerate() {
        let _ = writeln!(s, "\n[transmission.{}]\nrow1 = {}\nrow2 = {}", i + 1, list(&t.row1), list(&t.row2));
    }
    s
}
