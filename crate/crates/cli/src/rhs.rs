//! Right-hand-side specifiers: `const:v` or `poly:c0,c1,...`, with `;`
//! separating per-piece coefficient lists.

use bvtp_core::{PiecewisePolynomial, Polynomial, ValidatedProblem};

use crate::CliError;

pub fn parse_rhs(spec: &str, problem: &ValidatedProblem) -> Result<PiecewisePolynomial, CliError> {
    let bad = |msg: String| CliError::Input(format!("invalid f specifier {spec:?}: {msg}"));
    let num = |t: &str| t.trim().parse::<f64>().map_err(|e| bad(format!("{t:?}: {e}")));
    let n = problem.n_pieces();
    if let Some(v) = spec.strip_prefix("const:") {
        return Ok(PiecewisePolynomial::constant(problem, num(v)?));
    }
    let Some(body) = spec.strip_prefix("poly:") else {
        return Err(bad("expected \"const:v\" or \"poly:c0,c1,...\"".into()));
    };
    let pieces = body
        .split(';')
        .map(|p| {
            p.split(',')
                .filter(|t| !t.trim().is_empty())
                .map(num)
                .collect::<Result<Vec<f64>, _>>()
                .map(Polynomial::new)
        })
        .collect::<Result<Vec<_>, _>>()?;
    match pieces.len() {
        1 => Ok(PiecewisePolynomial::uniform(problem, pieces[0].clone())),
        k if k == n => Ok(PiecewisePolynomial::new(pieces)),
        k => Err(bad(format!("{k} coefficient lists for {n} pieces"))),
    }
}
