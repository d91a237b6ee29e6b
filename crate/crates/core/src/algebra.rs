//! Concrete finite-dimensional *-algebras on a fixed reference space.

use crate::error::{Error, Result};
use crate::intertwine::{self, Problem};
use crate::linalg::{dist, eye, fro, is_projection, matrix_unit, range_projection, Mat, Span, C64};

/// A *-algebra given by an orthonormal Hilbert–Schmidt basis.
#[derive(Clone, Debug)]
pub struct ConcreteAlgebra {
    span: Span,
}

/// Outcome of checking the algebra invariants.
#[derive(Clone, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct AlgebraCheck {
    pub product_defect: f64,
    pub adjoint_defect: f64,
    pub identity_defect: f64,
    pub independent: bool,
}

impl AlgebraCheck {
    pub fn holds(&self, tol: f64) -> bool {
        self.product_defect < tol && self.adjoint_defect < tol && self.identity_defect < tol && self.independent
    }
}

impl ConcreteAlgebra {
    /// Span of the given matrices, orthonormalised. No closure is taken.
    pub fn from_span(dim: usize, items: &[Mat], tol: f64) -> Self {
        Self { span: Span::from_matrices(dim, dim, items, tol) }
    }

    pub fn from_orthonormal(dim: usize, basis: Vec<Mat>) -> Self {
        Self { span: Span::from_orthonormal(dim, dim, basis) }
    }

    pub fn scalars(dim: usize) -> Self {
        Self::from_span(dim, &[eye(dim)], 0.5)
    }

    /// Full matrix algebra with the matrix-unit basis, row-major order.
    pub fn full(dim: usize) -> Self {
        let basis = (0..dim).flat_map(|i| (0..dim).map(move |j| matrix_unit(dim, i, j))).collect();
        Self::from_orthonormal(dim, basis)
    }

    /// Unital *-algebra generated by `gens`: breadth-first closure under left
    /// multiplication by the generators and their adjoints. A full matrix
    /// algebra is returned with its canonical matrix-unit basis.
    pub fn generated(dim: usize, gens: &[Mat], tol: f64) -> Self {
        let mut letters: Vec<Mat> = Vec::new();
        let mut letter_span = Span::new(dim, dim);
        for g in gens {
            for h in [g.clone(), g.adjoint()] {
                if letter_span.insert(&h, tol) {
                    letters.push(h);
                }
            }
        }
        let mut span = Span::new(dim, dim);
        span.insert(&eye(dim), tol);
        let mut frontier = vec![eye(dim)];
        while !frontier.is_empty() && span.dim() < dim * dim {
            let mut next = Vec::new();
            for w in &frontier {
                for l in &letters {
                    let cand = l * w;
                    if span.insert(&cand, tol) {
                        next.push(cand);
                    }
                }
            }
            frontier = next;
        }
        if span.dim() == dim * dim {
            Self::full(dim)
        } else {
            Self { span }
        }
    }

    pub fn ambient_dim(&self) -> usize {
        self.span.shape().0
    }

    pub fn dim(&self) -> usize {
        self.span.dim()
    }

    pub fn basis(&self) -> &[Mat] {
        self.span.basis()
    }

    pub fn span(&self) -> &Span {
        &self.span
    }

    pub fn is_full(&self) -> bool {
        self.dim() == self.ambient_dim() * self.ambient_dim()
    }

    pub fn contains(&self, a: &Mat, tol: f64) -> bool {
        self.span.contains(a, tol)
    }

    pub fn residual(&self, a: &Mat) -> f64 {
        self.span.residual(a)
    }

    pub fn coefficients(&self, a: &Mat) -> Vec<C64> {
        self.span.coefficients(a)
    }

    pub fn project(&self, a: &Mat) -> Mat {
        self.span.project(a)
    }

    /// True when every basis element of `self` lies in `other`.
    pub fn within(&self, other: &ConcreteAlgebra, tol: f64) -> bool {
        self.containment_defect(other) < tol
    }

    /// Largest residual of a basis element of `self` projected onto `other`.
    pub fn containment_defect(&self, other: &ConcreteAlgebra) -> f64 {
        self.basis().iter().map(|b| other.residual(b)).fold(0.0, f64::max)
    }

    pub fn same_span(&self, other: &ConcreteAlgebra, tol: f64) -> bool {
        self.dim() == other.dim() && self.within(other, tol) && other.within(self, tol)
    }

    pub fn check(&self) -> AlgebraCheck {
        let dim = self.ambient_dim();
        let mut product_defect: f64 = 0.0;
        let mut adjoint_defect: f64 = 0.0;
        for a in self.basis() {
            adjoint_defect = adjoint_defect.max(self.residual(&a.adjoint()));
            for b in self.basis() {
                product_defect = product_defect.max(self.residual(&(a * b)));
            }
        }
        let rank = Span::from_matrices(dim, dim, self.basis(), 1e-12).dim();
        AlgebraCheck {
            product_defect,
            adjoint_defect,
            identity_defect: self.residual(&eye(dim)),
            independent: rank == self.dim(),
        }
    }

    /// Commutant in the full matrix algebra of the reference space.
    pub fn commutant(&self, tol: f64) -> ConcreteAlgebra {
        let dim = self.ambient_dim();
        let sols = intertwine::solve(&Problem::commuting(self.basis()), tol);
        if sols.len() == dim * dim {
            return Self::full(dim);
        }
        Self::from_span(dim, &sols, tol)
    }

    /// Center `A ∩ A'`.
    pub fn center(&self, tol: f64) -> ConcreteAlgebra {
        let comm = self.commutant(tol);
        let dim = self.ambient_dim();
        let inside: Vec<Mat> = comm.basis().iter().map(|x| self.project(x)).collect();
        let mut span = Span::new(dim, dim);
        for x in &inside {
            if comm.contains(x, tol) {
                span.insert(x, tol);
            }
        }
        ConcreteAlgebra { span }
    }

    pub fn is_irreducible(&self, tol: f64) -> bool {
        self.commutant(tol).dim() == 1
    }

    /// Smallest central projection dominating `p`: the range projection of
    /// the ideal generated by `p`.
    pub fn central_support(&self, p: &Mat, tol: f64) -> Result<Mat> {
        let dim = self.ambient_dim();
        if p.shape() != (dim, dim) {
            return Err(Error::Shape(format!("expected {dim}x{dim}, got {:?}", p.shape())));
        }
        if !is_projection(p, tol) {
            return Err(Error::NotProjection("central support argument".into()));
        }
        let r = self.residual(p);
        if r >= tol {
            return Err(Error::NotInAlgebra(r));
        }
        let mut cols = Mat::zeros(dim, dim * self.dim());
        for (k, b) in self.basis().iter().enumerate() {
            cols.view_mut((0, k * dim), (dim, dim)).copy_from(&(b * p));
        }
        Ok(range_projection(&cols, tol))
    }
}

/// Algebra generated by a family of algebras.
pub fn generated_by(dim: usize, algebras: &[&ConcreteAlgebra], tol: f64) -> ConcreteAlgebra {
    let gens: Vec<Mat> = algebras.iter().flat_map(|a| a.basis().iter().cloned()).collect();
    if gens.is_empty() {
        return ConcreteAlgebra::scalars(dim);
    }
    ConcreteAlgebra::generated(dim, &gens, tol)
}

/// True if the central support is the identity.
pub fn has_full_central_support(alg: &ConcreteAlgebra, p: &Mat, tol: f64) -> Result<bool> {
    let z = alg.central_support(p, tol)?;
    Ok(dist(&z, &eye(alg.ambient_dim())) < tol && fro(p) > tol)
}
