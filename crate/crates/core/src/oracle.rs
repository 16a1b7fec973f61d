//! Finite-difference discretization of the full problem as a matrix pencil.
//!
//! Every piece gets `N + 1` equally spaced nodes, so interface points appear
//! twice (once as `xi-`, once as `xi+`) and are tied together only through
//! the two transmission conditions. Interior nodes carry the central
//! second-difference operator with identity `B` row; the end nodes carry the
//! two boundary conditions split into a `lambda`-free part (in `A`) and a
//! `lambda` coefficient (in `B`); interface nodes carry the transmission
//! conditions with zero `B` rows. Derivatives in boundary and interface rows
//! use second-order one-sided stencils. `A v = lambda B v` is then the
//! discrete eigenproblem and `(lambda B - A) v = f` the discrete resolvent.

use faer::linalg::solvers::Solve;
use faer::Mat;
use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::function::PiecewiseFunction;
use crate::problem::ValidatedProblem;

/// Smallest admissible `nodes_per_subinterval`.
pub const MIN_NODES: usize = 8;

/// Pencil eigenvalues beyond this magnitude are treated as infinite.
pub const INFINITE_EIGENVALUE: f64 = 1e12;

type SparseRow = Vec<(usize, f64)>;

/// The pencil `(A, B)` with its grid.
#[derive(Clone, Debug)]
pub struct PencilPair {
    a: Vec<SparseRow>,
    b: Vec<SparseRow>,
    /// Node coordinates per piece, interface points included on both sides.
    pub grid: Vec<Vec<f64>>,
    pub size: usize,
    /// Intervals per piece.
    pub n: usize,
}

impl PencilPair {
    pub fn a_row(&self, i: usize) -> &[(usize, f64)] {
        &self.a[i]
    }

    pub fn b_row(&self, i: usize) -> &[(usize, f64)] {
        &self.b[i]
    }

    /// Global index of node `j` of `piece`.
    pub fn index(&self, piece: usize, j: usize) -> usize {
        piece * (self.n + 1) + j
    }

    /// Dense copies of `A` and `B`, row-major.
    pub fn to_dense(&self) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
        let dense = |rows: &[SparseRow]| {
            rows.iter()
                .map(|r| {
                    let mut d = vec![0.0; self.size];
                    for &(j, v) in r {
                        d[j] += v;
                    }
                    d
                })
                .collect()
        };
        (dense(&self.a), dense(&self.b))
    }

    /// Rows whose `B` part is neither zero nor the unit row.
    pub fn lambda_dependent_rows(&self) -> Vec<usize> {
        (0..self.size)
            .filter(|&i| {
                let r = &self.b[i];
                let nonzero = r.iter().any(|&(_, v)| v != 0.0);
                let unit = r.len() == 1 && r[0] == (i, 1.0);
                nonzero && !unit
            })
            .collect()
    }

    /// Rows whose `B` part is zero.
    pub fn constraint_rows(&self) -> Vec<usize> {
        (0..self.size)
            .filter(|&i| self.b[i].iter().all(|&(_, v)| v == 0.0))
            .collect()
    }

    fn matrix_pair(&self) -> (Mat<f64>, Mat<f64>) {
        let mut a = Mat::<f64>::zeros(self.size, self.size);
        let mut b = Mat::<f64>::zeros(self.size, self.size);
        for i in 0..self.size {
            for &(j, v) in &self.a[i] {
                a[(i, j)] += v;
            }
            for &(j, v) in &self.b[i] {
                b[(i, j)] += v;
            }
        }
        (a, b)
    }
}

/// Builds the pencil with `nodes_per_subinterval` intervals on every piece.
pub fn assemble_pencil(problem: &ValidatedProblem, nodes_per_subinterval: usize) -> Result<PencilPair> {
    let n = nodes_per_subinterval;
    if n < MIN_NODES {
        return Err(Error::InvalidProblem(format!(
            "nodes_per_subinterval must be at least {MIN_NODES}, got {n}"
        )));
    }
    let pieces = problem.n_pieces();
    let size = pieces * (n + 1);
    let idx = |p: usize, j: usize| p * (n + 1) + j;
    let mut a: Vec<SparseRow> = vec![Vec::new(); size];
    let mut b: Vec<SparseRow> = vec![Vec::new(); size];
    let mut grid = Vec::with_capacity(pieces);

    for p in 0..pieces {
        let (lo, hi) = problem.piece_bounds(p);
        let h = (hi - lo) / n as f64;
        let xs: Vec<f64> = (0..=n).map(|j| if j == n { hi } else { lo + h * j as f64 }).collect();
        let r2 = problem.rho_sq(p) / (h * h);
        for j in 1..n {
            let q = problem.potential(p).eval(xs[j]);
            a[idx(p, j)] = vec![(idx(p, j - 1), -r2), (idx(p, j), 2.0 * r2 + q), (idx(p, j + 1), -r2)];
            b[idx(p, j)] = vec![(idx(p, j), 1.0)];
        }
        grid.push(xs);
    }

    let h_of = |p: usize| {
        let (lo, hi) = problem.piece_bounds(p);
        (hi - lo) / n as f64
    };
    // u'(x_0) and u'(x_N) of piece p.
    let d_first = |p: usize| {
        let h = h_of(p);
        [(idx(p, 0), -1.5 / h), (idx(p, 1), 2.0 / h), (idx(p, 2), -0.5 / h)]
    };
    let d_last = |p: usize| {
        let h = h_of(p);
        [(idx(p, n - 2), 0.5 / h), (idx(p, n - 1), -2.0 / h), (idx(p, n), 1.5 / h)]
    };
    // c0 u + c1 u' at an end node.
    let combo = |node: usize, stencil: [(usize, f64); 3], c0: f64, c1: f64| -> SparseRow {
        let mut row: SparseRow = stencil.iter().map(|&(j, v)| (j, c1 * v)).collect();
        row.push((node, c0));
        row
    };

    let [d1, d2, d3, d4] = problem.delta();
    let first = idx(0, 0);
    a[first] = combo(first, d_first(0), d1, -d2);
    b[first] = combo(first, d_first(0), d3, -d4);

    let [g1, g2, g3, g4] = problem.gamma();
    let last = idx(pieces - 1, n);
    a[last] = combo(last, d_last(pieces - 1), g1, -g2);
    b[last] = combo(last, d_last(pieces - 1), -g3, g4);

    for i in 0..problem.n_interfaces() {
        let tm = problem.transmission(i);
        let (minus, plus) = (idx(i, n), idx(i + 1, 0));
        let functional = |row: &[f64; 4]| -> SparseRow {
            let mut r: SparseRow = Vec::with_capacity(8);
            r.extend(d_first(i + 1).iter().map(|&(j, v)| (j, row[0] * v)));
            r.push((plus, row[1]));
            r.extend(d_last(i).iter().map(|&(j, v)| (j, row[2] * v)));
            r.push((minus, row[3]));
            r
        };
        a[minus] = functional(&tm.row1);
        a[plus] = functional(&tm.row2);
    }

    Ok(PencilPair { a, b, grid, size, n })
}

/// Finite eigenvalues of the pencil, sorted by real part.
pub fn pencil_eigenvalues(pencil: &PencilPair) -> Result<Vec<Complex64>> {
    let (a, b) = pencil.matrix_pair();
    let mut last = None;
    for &shift in &SHIFTS {
        match shifted_eigenvalues(&a, &b, shift) {
            Ok(out) => return Ok(out),
            Err(e) => last = Some(e),
        }
    }
    Err(last.unwrap_or_else(|| Error::Eigensolver("no shift attempted".into())))
}

const SHIFTS: [f64; 3] = [-std::f64::consts::E, 0.5772156649015329, -10.0 * std::f64::consts::PI];

// A v = lambda B v  <=>  (A - s B)^{-1} B v = v / (lambda - s).
fn shifted_eigenvalues(a: &Mat<f64>, b: &Mat<f64>, shift: f64) -> Result<Vec<Complex64>> {
    let n = a.nrows();
    let shifted = Mat::<f64>::from_fn(n, n, |i, j| a[(i, j)] - shift * b[(i, j)]);
    let m = shifted.partial_piv_lu().solve(b);
    let scale = m.norm_max();
    if !scale.is_finite() || scale == 0.0 {
        return Err(Error::Eigensolver(format!("shift {shift} is singular for the pencil")));
    }
    let mu = m
        .eigenvalues()
        .map_err(|e| Error::Eigensolver(format!("{e:?}")))?;
    let mut out: Vec<Complex64> = mu
        .into_iter()
        .filter(|z| z.norm() > scale / INFINITE_EIGENVALUE)
        .map(|z| Complex64::new(shift, 0.0) + Complex64::new(z.re, z.im).inv())
        .filter(|l| l.is_finite() && l.norm() <= INFINITE_EIGENVALUE)
        .collect();
    out.sort_by(|x, y| x.re.total_cmp(&y.re).then(x.im.total_cmp(&y.im)));
    Ok(out)
}

/// Extrapolated oracle eigenvalues.
#[derive(Clone, Debug)]
pub struct OracleSpectrum {
    /// Base resolution `N`; the pencils use `N`, `2N` and `4N`.
    pub n: usize,
    /// Raw eigenvalues at `N`, `2N`, `4N`.
    pub levels: [Vec<f64>; 3],
    /// Richardson-extrapolated values from `(2N, 4N)`.
    pub eigenvalues: Vec<f64>,
    /// Per-eigenvalue error estimate of `eigenvalues`.
    pub error_estimates: Vec<f64>,
    /// `|lambda(N) - lambda(2N)| / |lambda(2N) - lambda(4N)|`.
    pub convergence_ratios: Vec<f64>,
    /// Largest imaginary part among the reported raw eigenvalues.
    pub max_imaginary: f64,
    /// Spurious-mode warnings: indices whose `2N -> 4N` drift exceeds ten
    /// times the error predicted from `N -> 2N`.
    pub spurious: Vec<usize>,
}

impl OracleSpectrum {
    pub fn warnings(&self) -> Vec<String> {
        self.spurious
            .iter()
            .map(|&k| {
                format!(
                    "SpuriousModeWarning: oracle eigenvalue {} ({}) is unstable under refinement",
                    k + 1,
                    self.eigenvalues[k]
                )
            })
            .collect()
    }
}

/// Polishes a real eigenvalue estimate by inverse iteration on the sparse
/// pencil. Forming `(A - s B)^{-1} B` densely loses accuracy on these badly
/// row-scaled pencils at large `N`; the banded factorization does not.
pub fn refine_eigenvalue(pencil: &PencilPair, estimate: f64) -> Result<f64> {
    const ITERATIONS: usize = 4;
    // Offset keeps the factorization away from exact singularity.
    let shift = estimate + 1e-9 * estimate.abs().max(1.0);
    let rows: Vec<SparseRow> = (0..pencil.size)
        .map(|i| {
            let mut r = pencil.a[i].clone();
            r.extend(pencil.b[i].iter().map(|&(j, v)| (j, -shift * v)));
            r
        })
        .collect();
    let apply_b = |x: &[f64]| -> Vec<f64> {
        pencil
            .b
            .iter()
            .map(|r| r.iter().map(|&(j, v)| v * x[j]).sum())
            .collect()
    };
    let mut x: Vec<f64> = (0..pencil.size).map(|i| 1.0 + 0.25 * (i as f64 * 0.7).sin()).collect();
    let mut mu = 0.0;
    for _ in 0..ITERATIONS {
        let y = banded_solve(rows.clone(), apply_b(&x))?;
        let xx: f64 = x.iter().map(|v| v * v).sum();
        mu = x.iter().zip(&y).map(|(a, b)| a * b).sum::<f64>() / xx;
        let norm = y.iter().map(|v| v * v).sum::<f64>().sqrt();
        x = y.into_iter().map(|v| v / norm).collect();
    }
    let refined = shift + 1.0 / mu;
    if refined.is_finite() && (refined - estimate).abs() <= 1e-3 * estimate.abs().max(1.0) {
        Ok(refined)
    } else {
        Ok(estimate)
    }
}

/// The `count` lowest real eigenvalues at one resolution, with the largest
/// imaginary part among them.
pub fn oracle_level(problem: &ValidatedProblem, n: usize, count: usize) -> Result<(Vec<f64>, f64)> {
    let pencil = assemble_pencil(problem, n)?;
    let ev = pencil_eigenvalues(&pencil)?;
    if ev.len() < count {
        return Err(Error::InsufficientEigenvalues {
            requested: count,
            found: ev.len(),
        });
    }
    let imag = ev[..count].iter().map(|l| l.im.abs()).fold(0.0, f64::max);
    let refined = ev[..count]
        .iter()
        .map(|l| refine_eigenvalue(&pencil, l.re))
        .collect::<Result<Vec<_>>>()?;
    Ok((refined, imag))
}

/// Oracle eigenvalues with Richardson extrapolation over `N`, `2N`, `4N`.
///
/// With `R1`, `R2` the second-order extrapolants from `(N, 2N)` and
/// `(2N, 4N)`, the value is `R2` and the error estimate is
/// `max(|R2 - R1|, |lambda(4N) - lambda(2N)| / 3)`; the second term keeps the
/// estimate honest when third-order terms from the one-sided stencils make
/// `R1` and `R2` accidentally close.
pub fn oracle_eigenvalues(problem: &ValidatedProblem, nodes_per_subinterval: usize, count: usize) -> Result<OracleSpectrum> {
    let n = nodes_per_subinterval;
    let levels = [n, 2 * n, 4 * n]
        .par_iter()
        .map(|&m| oracle_level(problem, m, count))
        .collect::<Result<Vec<_>>>()?;
    let max_imaginary = levels.iter().map(|l| l.1).fold(0.0, f64::max);
    let [l0, l1, l2]: [Vec<f64>; 3] = levels
        .into_iter()
        .map(|l| l.0)
        .collect::<Vec<_>>()
        .try_into()
        .expect("three levels");
    let mut eigenvalues = Vec::with_capacity(count);
    let mut error_estimates = Vec::with_capacity(count);
    let mut convergence_ratios = Vec::with_capacity(count);
    let mut spurious = Vec::new();
    for k in 0..count {
        let r1 = (4.0 * l1[k] - l0[k]) / 3.0;
        let r2 = (4.0 * l2[k] - l1[k]) / 3.0;
        let d01 = (l0[k] - l1[k]).abs();
        let d12 = (l1[k] - l2[k]).abs();
        eigenvalues.push(r2);
        error_estimates.push((r2 - r1).abs().max(d12 / 3.0));
        convergence_ratios.push(if d12 == 0.0 { f64::INFINITY } else { d01 / d12 });
        if d12 > 10.0 * d01 / 3.0 {
            spurious.push(k);
        }
    }
    Ok(OracleSpectrum {
        n,
        levels: [l0, l1, l2],
        eigenvalues,
        error_estimates,
        convergence_ratios,
        max_imaginary,
        spurious,
    })
}

/// Grid solution of the discrete resolvent equation.
#[derive(Clone, Debug)]
pub struct OracleSolution {
    pub grid: Vec<Vec<f64>>,
    /// Values per piece at the grid nodes; interface nodes appear on both sides.
    pub values: Vec<Vec<f64>>,
}

/// Solves `(lambda B - A) v = f` with `f` sampled on the interior rows and
/// zero on the boundary and interface rows.
pub fn oracle_solve(
    problem: &ValidatedProblem,
    lambda: f64,
    f: &dyn PiecewiseFunction,
    nodes_per_subinterval: usize,
) -> Result<OracleSolution> {
    let pencil = assemble_pencil(problem, nodes_per_subinterval)?;
    let n = pencil.n;
    let mut rows: Vec<SparseRow> = Vec::with_capacity(pencil.size);
    let mut rhs = vec![0.0; pencil.size];
    for i in 0..pencil.size {
        let mut r: SparseRow = pencil.b[i].iter().map(|&(j, v)| (j, lambda * v)).collect();
        r.extend(pencil.a[i].iter().map(|&(j, v)| (j, -v)));
        rows.push(r);
    }
    for (p, xs) in pencil.grid.iter().enumerate() {
        for j in 1..n {
            rhs[pencil.index(p, j)] = f.value(p, xs[j]).re;
        }
    }
    let v = banded_solve(rows, rhs)?;
    let values = (0..problem.n_pieces())
        .map(|p| v[pencil.index(p, 0)..=pencil.index(p, n)].to_vec())
        .collect();
    Ok(OracleSolution {
        grid: pencil.grid,
        values,
    })
}

/// Row with a contiguous dense window of columns.
struct WindowRow {
    start: usize,
    vals: Vec<f64>,
}

impl WindowRow {
    fn from_sparse(r: &SparseRow) -> Self {
        let start = r.iter().map(|e| e.0).min().unwrap_or(0);
        let end = r.iter().map(|e| e.0).max().unwrap_or(0);
        let mut vals = vec![0.0; end + 1 - start];
        for &(j, v) in r {
            vals[j - start] += v;
        }
        Self { start, vals }
    }

    fn get(&self, j: usize) -> f64 {
        if j < self.start {
            return 0.0;
        }
        self.vals.get(j - self.start).copied().unwrap_or(0.0)
    }

    fn end(&self) -> usize {
        self.start + self.vals.len()
    }

    fn cover(&mut self, lo: usize, hi: usize) {
        if lo < self.start {
            let mut v = vec![0.0; self.start - lo];
            v.extend_from_slice(&self.vals);
            self.vals = v;
            self.start = lo;
        }
        if hi > self.end() {
            self.vals.resize(hi - self.start, 0.0);
        }
    }
}

/// Gaussian elimination with partial pivoting for narrow-band systems.
fn banded_solve(rows: Vec<SparseRow>, mut rhs: Vec<f64>) -> Result<Vec<f64>> {
    let n = rows.len();
    let mut rows: Vec<WindowRow> = rows.iter().map(WindowRow::from_sparse).collect();
    // Rows that can hold a nonzero in column k are those starting at or before k.
    let kl = rows
        .iter()
        .enumerate()
        .map(|(i, r)| i.saturating_sub(r.start))
        .max()
        .unwrap_or(0);
    let scale = rows
        .iter()
        .flat_map(|r| r.vals.iter())
        .fold(0.0_f64, |m, v| m.max(v.abs()));
    for k in 0..n {
        let last = (k + kl).min(n - 1);
        let piv = (k..=last)
            .max_by(|&i, &j| rows[i].get(k).abs().total_cmp(&rows[j].get(k).abs()))
            .expect("non-empty range");
        if rows[piv].get(k).abs() <= f64::EPSILON * scale * 1e-3 {
            return Err(Error::SingularSystem { column: k });
        }
        rows.swap(k, piv);
        rhs.swap(k, piv);
        let pivot = rows[k].get(k);
        let (head, tail) = rows.split_at_mut(k + 1);
        let prow = &head[k];
        for (off, r) in tail.iter_mut().take(last - k).enumerate() {
            let m = r.get(k) / pivot;
            if m == 0.0 {
                continue;
            }
            r.cover(k, prow.end());
            for j in k..prow.end() {
                let pv = prow.get(j);
                if pv != 0.0 {
                    r.vals[j - r.start] -= m * pv;
                }
            }
            rhs[k + 1 + off] -= m * rhs[k];
        }
    }
    let mut x = vec![0.0; n];
    for k in (0..n).rev() {
        let r = &rows[k];
        let mut s = rhs[k];
        for (j, xj) in x.iter().enumerate().take(r.end().min(n)).skip(k + 1) {
            s -= r.get(j) * xj;
        }
        x[k] = s / r.get(k);
    }
    Ok(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::function::PiecewisePolynomial;

    #[test]
    fn structure_counts() {
        let p0 = fixtures::validated(fixtures::p0());
        let pen = assemble_pencil(&p0, 8).unwrap();
        assert_eq!(pen.size, 9);
        assert_eq!(pen.lambda_dependent_rows(), vec![0, 8]);
        assert!(pen.constraint_rows().is_empty());

        let p2 = fixtures::validated(fixtures::p2());
        let pen = assemble_pencil(&p2, 8).unwrap();
        assert_eq!(pen.size, 18);
        assert_eq!(pen.constraint_rows(), vec![8, 9]);
        assert!(assemble_pencil(&p2, 7).is_err());
    }

    #[test]
    fn interior_rows_annihilate_constants() {
        let p2 = fixtures::validated(fixtures::p2());
        let pen = assemble_pencil(&p2, 10).unwrap();
        for p in 0..2 {
            for j in 1..10 {
                let s: f64 = pen.a_row(pen.index(p, j)).iter().map(|e| e.1).sum();
                assert!(s.abs() < 1e-9, "row sum {s}");
            }
        }
    }

    #[test]
    fn banded_solver_matches_dense() {
        let rows: Vec<SparseRow> = vec![
            vec![(0, 1e-3), (1, 2.0), (2, 1.0)],
            vec![(0, 3.0), (1, 1.0), (2, -1.0)],
            vec![(0, 1.0), (1, -2.0), (2, 4.0), (3, 1.0)],
            vec![(1, 1.0), (2, 1.0), (3, 5.0)],
        ];
        let x_true = [1.0, -2.0, 0.5, 3.0];
        let rhs: Vec<f64> = rows
            .iter()
            .map(|r| r.iter().map(|&(j, v)| v * x_true[j]).sum())
            .collect();
        let x = banded_solve(rows, rhs).unwrap();
        for (a, b) in x.iter().zip(x_true) {
            assert!((a - b).abs() < 1e-12);
        }
        assert!(matches!(
            banded_solve(vec![vec![(0, 1.0), (1, 1.0)], vec![(0, 2.0), (1, 2.0)]], vec![1.0, 2.0]),
            Err(Error::SingularSystem { column: 1 })
        ));
    }

    #[test]
    fn zero_rhs_gives_zero() {
        let p2 = fixtures::validated(fixtures::p2());
        let zero = PiecewisePolynomial::constant(&p2, 0.0);
        let s = oracle_solve(&p2, -3.0, &zero, 50).unwrap();
        assert!(s.values.iter().flatten().all(|&v| v == 0.0));
    }

    #[test]
    fn p0_levels_are_real_and_converge() {
        let p0 = fixtures::validated(fixtures::p0());
        let o = oracle_eigenvalues(&p0, 50, 3).unwrap();
        assert!(o.max_imaginary < 1e-8);
        assert!(o.spurious.is_empty());
        for r in &o.convergence_ratios {
            assert!((3.0..=5.0).contains(r), "ratio {r}");
        }
    }
}
