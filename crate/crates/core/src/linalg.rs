//! Dense complex matrices and the handful of decompositions the engine needs.
//!
//! Matrices are `nalgebra` dynamic matrices over `Complex<f64>`. Vectorisation
//! is column-major, matching nalgebra storage. Every rank decision compares a
//! singular value or a Frobenius residual against an absolute tolerance; the
//! Frobenius norm bounds the operator norm from above, so a residual accepted
//! here is also small in operator norm.

use nalgebra::{Complex, DMatrix, DVector, SymmetricEigen};

pub type C64 = Complex<f64>;
pub type Mat = DMatrix<C64>;
pub type Vector = DVector<C64>;

/// Absolute tolerance on norms and singular values.
pub const DEFAULT_TOL: f64 = 1e-9;

#[inline]
pub fn c(re: f64, im: f64) -> C64 {
    Complex::new(re, im)
}

#[inline]
pub fn real(re: f64) -> C64 {
    Complex::new(re, 0.0)
}

pub fn eye(n: usize) -> Mat {
    Mat::identity(n, n)
}

pub fn zeros(rows: usize, cols: usize) -> Mat {
    Mat::zeros(rows, cols)
}

/// `kron(a, b)` has `a` as the outer (slow) factor.
pub fn kron(a: &Mat, b: &Mat) -> Mat {
    a.kronecker(b)
}

pub fn adjoint(a: &Mat) -> Mat {
    a.adjoint()
}

/// Hilbert–Schmidt inner product `tr(a* b)`.
pub fn hs_inner(a: &Mat, b: &Mat) -> C64 {
    a.iter()
        .zip(b.iter())
        .fold(c(0.0, 0.0), |acc, (x, y)| acc + x.conj() * y)
}

pub fn fro(a: &Mat) -> f64 {
    a.norm()
}

pub fn dist(a: &Mat, b: &Mat) -> f64 {
    (a - b).norm()
}

pub fn op_norm(a: &Mat) -> f64 {
    if a.is_empty() {
        return 0.0;
    }
    a.clone()
        .svd(false, false)
        .singular_values
        .iter()
        .cloned()
        .fold(0.0, f64::max)
}

pub fn commutator(a: &Mat, b: &Mat) -> Mat {
    a * b - b * a
}

pub fn vec_of(a: &Mat) -> Vector {
    Vector::from_column_slice(a.as_slice())
}

/// Matrix of the linear map sending `basis[k]` to `images[k]`, acting on
/// column-major vectorisations. `basis` must be orthonormal.
pub fn superoperator(basis: &[Mat], images: &[Mat], in_len: usize, out_len: usize) -> Mat {
    let mut b = Mat::zeros(in_len, basis.len());
    let mut v = Mat::zeros(out_len, images.len());
    for (k, (x, y)) in basis.iter().zip(images).enumerate() {
        b.column_mut(k).copy_from_slice(x.as_slice());
        v.column_mut(k).copy_from_slice(y.as_slice());
    }
    v * b.adjoint()
}

pub fn unvec(v: &Vector, rows: usize, cols: usize) -> Mat {
    Mat::from_column_slice(rows, cols, v.as_slice())
}

pub fn matrix_unit(n: usize, i: usize, j: usize) -> Mat {
    let mut m = zeros(n, n);
    m[(i, j)] = real(1.0);
    m
}

/// Block `(i, j)` of a matrix cut into `rows × cols` blocks.
pub fn block(m: &Mat, i: usize, j: usize, rows: usize, cols: usize) -> Mat {
    m.view((i * rows, j * cols), (rows, cols)).into_owned()
}

pub fn set_block(m: &mut Mat, i: usize, j: usize, b: &Mat) {
    let (r, c) = b.shape();
    m.view_mut((i * r, j * c), (r, c)).copy_from(b);
}

/// Assemble a `nr × nc` grid of equally sized blocks produced by `f`.
pub fn from_blocks<F: FnMut(usize, usize) -> Mat>(nr: usize, nc: usize, rows: usize, cols: usize, mut f: F) -> Mat {
    let mut m = zeros(nr * rows, nc * cols);
    for i in 0..nr {
        for j in 0..nc {
            let b = f(i, j);
            set_block(&mut m, i, j, &b);
        }
    }
    m
}

/// Block-diagonal sum.
pub fn block_diag(parts: &[Mat]) -> Mat {
    let rows: usize = parts.iter().map(|p| p.nrows()).sum();
    let cols: usize = parts.iter().map(|p| p.ncols()).sum();
    let mut m = zeros(rows, cols);
    let (mut r, mut cc) = (0, 0);
    for p in parts {
        m.view_mut((r, cc), p.shape()).copy_from(p);
        r += p.nrows();
        cc += p.ncols();
    }
    m
}

pub fn is_hermitian(a: &Mat, tol: f64) -> bool {
    a.is_square() && dist(a, &a.adjoint()) < tol
}

pub fn is_projection(p: &Mat, tol: f64) -> bool {
    is_hermitian(p, tol) && dist(&(p * p), p) < tol
}

/// Eigen-decomposition of a Hermitian matrix, eigenvalues ascending.
pub fn hermitian_eigen(h: &Mat) -> (Vec<f64>, Mat) {
    let n = h.nrows();
    if n == 0 {
        return (vec![], zeros(0, 0));
    }
    let sym = (h + h.adjoint()) * real(0.5);
    let eig = SymmetricEigen::new(sym);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let mut vectors = zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        vectors.set_column(dst, &eig.eigenvectors.column(src));
    }
    (values, vectors)
}

pub fn min_eigenvalue(h: &Mat) -> f64 {
    hermitian_eigen(h).0.first().cloned().unwrap_or(0.0)
}

/// Orthonormal basis of the null space of `m`, as columns.
pub fn nullspace(m: &Mat, tol: f64) -> Mat {
    let cols = m.ncols();
    if cols == 0 {
        return zeros(0, 0);
    }
    let square = if m.nrows() > cols {
        m.clone().qr().r()
    } else {
        let mut padded = zeros(cols, cols);
        padded.view_mut((0, 0), m.shape()).copy_from(m);
        padded
    };
    let svd = square.svd(false, true);
    let vt = svd.v_t.expect("right singular vectors requested");
    let picked: Vec<usize> = (0..svd.singular_values.len())
        .filter(|&k| svd.singular_values[k] < tol)
        .collect();
    let mut out = zeros(cols, picked.len());
    for (dst, &k) in picked.iter().enumerate() {
        out.set_column(dst, &vt.row(k).adjoint());
    }
    out
}

/// Null space of a tall matrix given as a stream of row blocks. Keeps only
/// the triangular factor, so memory stays at `cols × cols`.
pub struct StackedRows {
    cols: usize,
    r: Option<Mat>,
}

impl StackedRows {
    pub fn new(cols: usize) -> Self {
        Self { cols, r: None }
    }

    pub fn push(&mut self, rows: Mat) {
        assert_eq!(rows.ncols(), self.cols);
        let stacked = match self.r.take() {
            None => rows,
            Some(r) => {
                let mut s = zeros(r.nrows() + rows.nrows(), self.cols);
                s.view_mut((0, 0), r.shape()).copy_from(&r);
                s.view_mut((r.nrows(), 0), rows.shape()).copy_from(&rows);
                s
            }
        };
        self.r = Some(if stacked.nrows() > self.cols { stacked.qr().r() } else { stacked });
    }

    pub fn nullspace(&self, tol: f64) -> Mat {
        match &self.r {
            None => eye(self.cols),
            Some(r) => nullspace(r, tol),
        }
    }
}

/// Polar part `U V*` of `t = U Σ V*`, keeping singular values above `tol`.
pub fn polar_isometry(t: &Mat, tol: f64) -> Mat {
    let svd = t.clone().svd(true, true);
    let u = svd.u.expect("left vectors");
    let vt = svd.v_t.expect("right vectors");
    let mut out = zeros(t.nrows(), t.ncols());
    for k in 0..svd.singular_values.len() {
        if svd.singular_values[k] > tol {
            out += u.column(k) * vt.row(k);
        }
    }
    out
}

/// Orthogonal projection onto the column space of `m`.
pub fn range_projection(m: &Mat, tol: f64) -> Mat {
    let n = m.nrows();
    if m.ncols() == 0 {
        return zeros(n, n);
    }
    let svd = m.clone().svd(true, false);
    let u = svd.u.expect("left vectors");
    let mut p = zeros(n, n);
    for k in 0..svd.singular_values.len() {
        if svd.singular_values[k] > tol {
            p += u.column(k) * u.column(k).adjoint();
        }
    }
    p
}

pub fn rank(m: &Mat, tol: f64) -> usize {
    if m.is_empty() {
        return 0;
    }
    m.clone().svd(false, false).singular_values.iter().filter(|s| **s > tol).count()
}

/// Inverse of a square matrix, refused when its smallest singular value is
/// below `tol`.
pub fn checked_inverse(m: &Mat, tol: f64) -> Option<Mat> {
    if !m.is_square() {
        return None;
    }
    let smin = m.clone().svd(false, false).singular_values.iter().cloned().fold(f64::INFINITY, f64::min);
    if smin < tol {
        return None;
    }
    m.clone().try_inverse()
}

/// Orthonormal (Hilbert–Schmidt) span of equally shaped matrices.
#[derive(Clone, Debug)]
pub struct Span {
    rows: usize,
    cols: usize,
    basis: Vec<Mat>,
}

impl Span {
    pub fn new(rows: usize, cols: usize) -> Self {
        Self { rows, cols, basis: Vec::new() }
    }

    /// Build from arbitrary spanning matrices; dependent ones are dropped.
    pub fn from_matrices<'a, I: IntoIterator<Item = &'a Mat>>(rows: usize, cols: usize, items: I, tol: f64) -> Self {
        let mut s = Self::new(rows, cols);
        for m in items {
            s.insert(m, tol);
        }
        s
    }

    /// Wrap matrices already known to be orthonormal.
    pub fn from_orthonormal(rows: usize, cols: usize, basis: Vec<Mat>) -> Self {
        Self { rows, cols, basis }
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn basis(&self) -> &[Mat] {
        &self.basis
    }

    pub fn coefficients(&self, a: &Mat) -> Vec<C64> {
        self.basis.iter().map(|b| hs_inner(b, a)).collect()
    }

    pub fn combine(&self, coeffs: &[C64]) -> Mat {
        let mut out = zeros(self.rows, self.cols);
        for (b, w) in self.basis.iter().zip(coeffs) {
            out += b * *w;
        }
        out
    }

    pub fn project(&self, a: &Mat) -> Mat {
        self.combine(&self.coefficients(a))
    }

    pub fn residual(&self, a: &Mat) -> f64 {
        dist(a, &self.project(a))
    }

    pub fn contains(&self, a: &Mat, tol: f64) -> bool {
        self.residual(a) < tol
    }

    /// Add the direction of `a` if it is independent after normalisation.
    /// Returns whether the span grew.
    pub fn insert(&mut self, a: &Mat, tol: f64) -> bool {
        assert_eq!(a.shape(), (self.rows, self.cols), "span shape mismatch");
        let n = fro(a);
        if n < tol {
            return false;
        }
        let mut v = a / real(n);
        for _ in 0..2 {
            for b in &self.basis {
                let w = hs_inner(b, &v);
                v -= b * w;
            }
        }
        let r = fro(&v);
        if r < tol {
            return false;
        }
        self.basis.push(v / real(r));
        true
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nullspace_of_rank_one() {
        let m = Mat::from_row_slice(2, 3, &[real(1.0), real(1.0), real(0.0), real(2.0), real(2.0), real(0.0)]);
        let n = nullspace(&m, DEFAULT_TOL);
        assert_eq!(n.ncols(), 2);
        assert!(fro(&(&m * &n)) < 1e-12);
    }

    #[test]
    fn stacked_rows_agree_with_direct() {
        let a = Mat::from_fn(40, 5, |i, j| c(((i * 7 + j * 3) % 5) as f64, ((i + j) % 3) as f64 - 1.0));
        let mut a2 = a.clone();
        a2.set_column(4, &(a.column(0) + a.column(1)));
        let mut s = StackedRows::new(5);
        s.push(a2.rows(0, 17).into_owned());
        s.push(a2.rows(17, 23).into_owned());
        assert_eq!(s.nullspace(1e-9).ncols(), nullspace(&a2, 1e-9).ncols());
        assert_eq!(s.nullspace(1e-9).ncols(), 1);
    }

    #[test]
    fn span_projection_and_membership() {
        let e00 = matrix_unit(2, 0, 0);
        let e11 = matrix_unit(2, 1, 1);
        let s = Span::from_matrices(2, 2, [&e00, &e11, &(&e00 + &e11)], DEFAULT_TOL);
        assert_eq!(s.dim(), 2);
        assert!(s.contains(&eye(2), DEFAULT_TOL));
        assert!(!s.contains(&matrix_unit(2, 0, 1), DEFAULT_TOL));
    }

    #[test]
    fn polar_of_scaled_unitary() {
        let u = Mat::from_row_slice(2, 2, &[real(0.0), c(0.0, 1.0), real(1.0), real(0.0)]);
        let p = polar_isometry(&(&u * real(3.5)), DEFAULT_TOL);
        assert!(dist(&p, &u) < 1e-12);
    }
}
