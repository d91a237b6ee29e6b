//! Solver for linear intertwining problems `T X_k = Y_k T`.
//!
//! The pairs `(X_k, Y_k)` must be images of a *-closed generating set under
//! two *-representations. A generic Hermitian combination is diagonalised on
//! both sides first; only eigenvector pairs with matching eigenvalues can
//! carry a solution, which shrinks the unknowns from `p·q` to the sum of
//! products of multiplicities. The remaining constraints are then stacked and
//! the null space is read off with a singular-value cut at the tolerance.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::linalg::{dist, eye, fro, hermitian_eigen, real, vec_of, Mat, Span, StackedRows};

const SEED: u64 = 0x5EC7_0125;

pub struct Problem<'a> {
    /// Square `p × p` images on the source side.
    pub source: Vec<Mat>,
    /// Square `q × q` images on the target side.
    pub target: Vec<Mat>,
    /// Projection the solutions must start from (`T = T · source_unit`).
    pub source_unit: Mat,
    /// Projection the solutions must end in (`T = target_unit · T`).
    pub target_unit: Mat,
    /// Optional constraint: every `block × block` block of `T` lies in the span.
    pub entries: Option<(&'a Span, usize)>,
}

impl<'a> Problem<'a> {
    /// Commutant-style problem: same images on both sides, no units.
    pub fn commuting(gens: &[Mat]) -> Self {
        let n = gens.first().map(|g| g.nrows()).unwrap_or(0);
        Self {
            source: gens.to_vec(),
            target: gens.to_vec(),
            source_unit: eye(n),
            target_unit: eye(n),
            entries: None,
        }
    }
}

fn shifted_generic(images: &[Mat], unit: &Mat, weights: &[f64], offset: f64) -> Mat {
    let n = unit.nrows();
    let mut h = Mat::zeros(n, n);
    for (x, w) in images.iter().zip(weights) {
        h += (x + x.adjoint()) * real(0.5 * w);
    }
    h - (eye(n) - unit) * real(offset)
}

/// Orthonormal (Hilbert–Schmidt) basis of the solution space.
pub fn solve(problem: &Problem, tol: f64) -> Vec<Mat> {
    let p = problem.source_unit.nrows();
    let q = problem.target_unit.nrows();
    assert_eq!(problem.source.len(), problem.target.len(), "generator lists differ in length");
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let weights: Vec<f64> = (0..problem.source.len()).map(|_| rng.random_range(-1.0..1.0)).collect();
    let bound: f64 = problem
        .source
        .iter()
        .chain(&problem.target)
        .zip(weights.iter().chain(&weights))
        .map(|(x, w)| w.abs() * fro(x))
        .sum::<f64>()
        + 1.0;
    let hx = shifted_generic(&problem.source, &problem.source_unit, &weights, 3.0 * bound + 1.0);
    let hy = shifted_generic(&problem.target, &problem.target_unit, &weights, 5.0 * bound + 2.0);
    let (mu, u) = hermitian_eigen(&hx);
    let (nu, v) = hermitian_eigen(&hy);
    let gap = 1e-8 * bound;
    let mut cands: Vec<Mat> = Vec::new();
    for i in 0..q {
        for j in 0..p {
            if (nu[i] - mu[j]).abs() < gap {
                cands.push(v.column(i) * u.column(j).adjoint());
            }
        }
    }
    if cands.is_empty() {
        return Vec::new();
    }
    let r = cands.len();
    let mut stack = StackedRows::new(r);
    for (x, y) in problem.source.iter().zip(&problem.target) {
        let mut rows = Mat::zeros(p * q, r);
        for (k, t) in cands.iter().enumerate() {
            rows.set_column(k, &vec_of(&(t * x - y * t)));
        }
        stack.push(rows);
    }
    if let Some((span, b)) = problem.entries {
        let (nq, np) = (q / b, p / b);
        let mut rows = Mat::zeros(nq * np * b * b, r);
        for (k, t) in cands.iter().enumerate() {
            let mut col = Vec::with_capacity(nq * np * b * b);
            for bi in 0..nq {
                for bj in 0..np {
                    let blk = t.view((bi * b, bj * b), (b, b)).into_owned();
                    let res = &blk - span.project(&blk);
                    col.extend_from_slice(res.as_slice());
                }
            }
            rows.set_column(k, &crate::linalg::Vector::from_vec(col));
        }
        stack.push(rows);
    }
    let coeffs = stack.nullspace(tol);
    let mut out = Vec::with_capacity(coeffs.ncols());
    for s in 0..coeffs.ncols() {
        let mut t = Mat::zeros(q, p);
        for (k, cand) in cands.iter().enumerate() {
            t += cand * coeffs[(k, s)];
        }
        out.push(t);
    }
    out
}

/// Largest residual of `t` against the intertwining relations.
pub fn residual(problem: &Problem, t: &Mat) -> f64 {
    let mut worst = dist(&(t * &problem.source_unit), t).max(dist(&(&problem.target_unit * t), t));
    for (x, y) in problem.source.iter().zip(&problem.target) {
        worst = worst.max(dist(&(t * x), &(y * t)));
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{block_diag, c, matrix_unit, DEFAULT_TOL};

    #[test]
    fn commutant_of_diagonal_algebra_is_diagonal() {
        let gens = vec![matrix_unit(2, 0, 0), matrix_unit(2, 1, 1)];
        let sols = solve(&Problem::commuting(&gens), DEFAULT_TOL);
        assert_eq!(sols.len(), 2);
        for s in sols {
            assert!(s[(0, 1)].norm() < 1e-12 && s[(1, 0)].norm() < 1e-12);
        }
    }

    #[test]
    fn equivalent_representations_have_one_intertwiner() {
        // a -> a and a -> w a w* for a unitary w: solutions are multiples of w.
        let w = Mat::from_row_slice(2, 2, &[real(0.0), real(1.0), real(1.0), real(0.0)]);
        let gens: Vec<Mat> = (0..2).flat_map(|i| (0..2).map(move |j| matrix_unit(2, i, j))).collect();
        let target: Vec<Mat> = gens.iter().map(|g| &w * g * w.adjoint()).collect();
        let prob = Problem { source: gens.clone(), target, source_unit: eye(2), target_unit: eye(2), entries: None };
        let sols = solve(&prob, DEFAULT_TOL);
        assert_eq!(sols.len(), 1);
        let ratio = sols[0][(1, 0)] / w[(1, 0)];
        assert!(dist(&sols[0], &(&w * ratio)) < 1e-10);
        assert!(residual(&prob, &sols[0]) < 1e-10);
    }

    #[test]
    fn units_cut_the_solution_space() {
        let gens = vec![block_diag(&[eye(1), Mat::zeros(1, 1)]), block_diag(&[Mat::zeros(1, 1), eye(1)])];
        let mut prob = Problem::commuting(&gens);
        prob.source_unit = matrix_unit(2, 0, 0);
        prob.target_unit = matrix_unit(2, 0, 0);
        let sols = solve(&prob, DEFAULT_TOL);
        assert_eq!(sols.len(), 1);
        assert!((sols[0][(0, 0)].norm() - 1.0).abs() < 1e-12);
        let _ = c(0.0, 0.0);
    }
}
