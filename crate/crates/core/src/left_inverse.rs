//! Left inverses, stored by their generating map on the reduced algebra
//! `(A ⊗ M_n)_{ρ(1)}`, and the calculus built on them.
//!
//! The generator `φ` is a linear map from `(dim·n) × (dim·n)` matrices to
//! `dim × dim` matrices, kept as its matrix on column-major vectorisations.
//! The family `Φ_{σ,τ}` acts on an arrow `E ∈ (ρσ, ρτ)` by applying `φ` to each
//! `(dim·n) × (dim·n)` block of `E`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{
    block, dist, eye, from_blocks, hermitian_eigen, hs_inner, kron, matrix_unit, min_eigenvalue, rank, real, unvec, vec_of,
    zeros, Mat, Span, C64,
};
use crate::net::NetModel;
use crate::object::{entries_defect, Amplimorphism};
use crate::symmetry::{symmetrizer, symmetry, SymmetrizerKind};

#[derive(Clone, Debug)]
pub struct LeftInverse {
    pub label: String,
    pub multiplicity: usize,
    pub ambient_dim: usize,
    map: Mat,
}

/// Scalar `c` with `y ≈ c·unit`, fitted by Hilbert–Schmidt projection.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalarFit {
    pub re: f64,
    pub im: f64,
    pub residual: f64,
}

impl ScalarFit {
    pub fn of(y: &Mat, unit: &Mat) -> Self {
        let norm = hs_inner(unit, unit).re;
        let value = if norm > 0.0 { hs_inner(unit, y) / norm } else { C64::new(0.0, 0.0) };
        let residual = dist(y, &(unit * value));
        Self { re: value.re, im: value.im, residual }
    }

    pub fn value(&self) -> C64 {
        C64::new(self.re, self.im)
    }

    pub fn is_scalar(&self, tol: f64) -> bool {
        self.residual < tol
    }
}

impl LeftInverse {
    /// Build from the action of `f` on the matrix units of size `dim·n`.
    pub fn from_fn<F: Fn(&Mat) -> Mat>(label: impl Into<String>, dim: usize, multiplicity: usize, f: F) -> Self {
        let s = dim * multiplicity;
        let mut map = zeros(dim * dim, s * s);
        for j in 0..s {
            for i in 0..s {
                map.set_column(i + j * s, &vec_of(&f(&matrix_unit(s, i, j))));
            }
        }
        Self { label: label.into(), multiplicity, ambient_dim: dim, map }
    }

    /// Wrap a `dim² × (dim·n)²` matrix acting on column-major vectorisations.
    pub fn from_matrix(label: impl Into<String>, dim: usize, multiplicity: usize, map: Mat) -> Result<Self> {
        let s = dim * multiplicity;
        if map.shape() != (dim * dim, s * s) {
            return Err(Error::Shape(format!("left inverse matrix {:?}, expected {}x{}", map.shape(), dim * dim, s * s)));
        }
        Ok(Self { label: label.into(), multiplicity, ambient_dim: dim, map })
    }

    pub fn matrix(&self) -> &Mat {
        &self.map
    }

    pub fn size(&self) -> usize {
        self.ambient_dim * self.multiplicity
    }

    /// The generator `φ`.
    pub fn apply(&self, x: &Mat) -> Mat {
        unvec(&(&self.map * vec_of(x)), self.ambient_dim, self.ambient_dim)
    }

    /// `Φ_{σ,τ}(e)`: `φ` applied to each `(dim·n) × (dim·n)` block.
    pub fn family(&self, e: &Mat) -> Mat {
        let s = self.size();
        let d = self.ambient_dim;
        from_blocks(e.nrows() / s, e.ncols() / s, d, d, |i, j| self.apply(&block(e, i, j, s, s)))
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }
}

/// Left inverse of `ι`: the identity map.
pub fn identity(net: &NetModel) -> LeftInverse {
    LeftInverse::from_fn("id", net.ambient_dim, 1, |x| x.clone())
}

/// `ρ^{-1}` composed with the trace-preserving projection onto the global
/// algebra, for a unital automorphism `ρ`.
pub fn from_inverse(net: &NetModel, rho: &Amplimorphism) -> Result<LeftInverse> {
    let inv = crate::object::inverse(net, rho)?;
    let global = net.global();
    Ok(LeftInverse::from_fn(format!("inv({})", rho.label), net.ambient_dim, 1, |x| inv.apply(&global.project(x))))
}

/// `γ^{-1}` on the image of an injective `γ`, precomposed with the orthogonal
/// projection onto that image. This is the left inverse of a simple object.
pub fn from_simple(net: &NetModel, gamma: &Amplimorphism) -> Result<LeftInverse> {
    inverse_on_image(
        format!("inv({})", gamma.label),
        net.ambient_dim,
        gamma.multiplicity,
        net.global().basis(),
        &gamma.values,
        net.tol,
    )
}

/// The map sending `images[k]` to `domain[k]`, extended by zero off the span
/// of the images. Fails unless the images are linearly independent.
pub fn inverse_on_image(
    label: impl Into<String>,
    dim: usize,
    multiplicity: usize,
    domain: &[Mat],
    images: &[Mat],
    tol: f64,
) -> Result<LeftInverse> {
    let label = label.into();
    let (s, m) = (dim * multiplicity, domain.len());
    let mut img = zeros(s * s, m);
    let mut dom = zeros(dim * dim, m);
    for (k, (b, v)) in domain.iter().zip(images).enumerate() {
        img.set_column(k, &vec_of(v));
        dom.set_column(k, &vec_of(b));
    }
    if rank(&img, tol) < m {
        return Err(Error::Undefined(format!("`{label}`: map is not injective")));
    }
    let pinv = img.pseudo_inverse(tol).map_err(|e| Error::Undefined(e.to_string()))?;
    LeftInverse::from_matrix(label, dim, multiplicity, dom * pinv)
}

/// `φ(X) = (R*R)^{-1} R* (1_ρ̄ × X) R` for `R ∈ (ι, ρ̄ρ)`.
pub fn from_conjugate(net: &NetModel, rho: &Amplimorphism, rho_bar: &Amplimorphism, r: &Mat) -> Result<LeftInverse> {
    let norm = ScalarFit::of(&(r.adjoint() * r), &eye(net.ambient_dim));
    if norm.value().norm() < net.tol {
        return Err(Error::Undefined("R*R vanishes".into()));
    }
    let scale = real(1.0) / norm.value();
    Ok(LeftInverse::from_fn(format!("conj({})", rho.label), net.ambient_dim, rho.multiplicity, |x| {
        r.adjoint() * rho_bar.apply_blocks(x) * r * scale
    }))
}

/// Left inverse of `ρ2ρ1` from left inverses of `ρ1` (`outer`) and `ρ2`
/// (`inner`): `φ(X) = φ1(Φ2_{ρ1,ρ1}(X))`.
pub fn compose(outer: &LeftInverse, inner: &LeftInverse) -> LeftInverse {
    LeftInverse::from_fn(
        format!("{}.{}", outer.label, inner.label),
        outer.ambient_dim,
        outer.multiplicity * inner.multiplicity,
        |x| outer.apply(&inner.family(x)),
    )
}

/// `s φ1(W1* B W1) + (1-s) φ2(W2* B W2)` for injections `W_i ∈ (ρ_i, α)`.
pub fn convex(s: f64, first: &LeftInverse, second: &LeftInverse, w1: &Mat, w2: &Mat) -> Result<LeftInverse> {
    if !(0.0..=1.0).contains(&s) {
        return Err(Error::Undefined(format!("convex weight {s} outside [0, 1]")));
    }
    let d = first.ambient_dim;
    let n = w1.nrows() / d;
    Ok(LeftInverse::from_fn(format!("{}+{}", first.label, second.label), d, n, |b| {
        first.apply(&(w1.adjoint() * b * w1)) * real(s) + second.apply(&(w2.adjoint() * b * w2)) * real(1.0 - s)
    }))
}

/// Left inverse of the subobject cut out by `e`, with isometry `v` (`v v* = e`):
/// `φ(e)^{-1} φ(v C v*)`. Undefined when `φ(e)` vanishes.
pub fn compress(phi: &LeftInverse, e: &Mat, v: &Mat, tol: f64) -> Result<LeftInverse> {
    let fit = ScalarFit::of(&phi.apply(e), &eye(phi.ambient_dim));
    if !fit.is_scalar(tol) {
        return Err(Error::NotScalar(fit.residual));
    }
    if fit.value().norm() < tol {
        return Err(Error::Undefined("subobject left inverse undefined: φ(E) = 0".into()));
    }
    let scale = real(1.0) / fit.value();
    let n = v.ncols() / phi.ambient_dim;
    Ok(LeftInverse::from_fn(format!("{}|E", phi.label), phi.ambient_dim, n, |c| phi.apply(&(v * c * v.adjoint())) * scale))
}

/// Orthonormal basis of `(A ⊗ M_n)_{ρ(1)}`.
pub fn reduced_algebra(net: &NetModel, rho: &Amplimorphism) -> Span {
    let n = rho.multiplicity;
    let s = rho.size();
    let unit = rho.unit();
    if net.global().is_full() {
        let (vals, vecs) = hermitian_eigen(&unit);
        let cols: Vec<usize> = (0..s).filter(|&k| vals[k] > 0.5).collect();
        let mut q = zeros(s, cols.len());
        for (c, &k) in cols.iter().enumerate() {
            q.set_column(c, &vecs.column(k));
        }
        let r = cols.len();
        let basis = (0..r)
            .flat_map(|i| (0..r).map(move |j| (i, j)))
            .map(|(i, j)| &q * matrix_unit(r, i, j) * q.adjoint())
            .collect();
        return Span::from_orthonormal(s, s, basis);
    }
    let mut items = Vec::new();
    for b in net.global().basis() {
        for i in 0..n {
            for j in 0..n {
                items.push(&unit * kron(&matrix_unit(n, i, j), b) * &unit);
            }
        }
    }
    Span::from_matrices(s, s, &items, net.tol)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LeftInverseReport {
    pub label: String,
    pub tolerance: f64,
    /// `|φ(ρ(1)) - 1|`.
    pub normalization: f64,
    /// Worst `|φ(B ρ(A)) - φ(B) A|`.
    pub module: f64,
    /// Worst residual of `φ(B)` outside the global algebra.
    pub values_in_algebra: f64,
    /// Worst `|φ(B*) - φ(B)*|`.
    pub adjoint: f64,
    /// Smallest eigenvalue of `φ(B*B) - φ(B)*φ(B)` over the sampled `B`.
    pub schwarz_min_eigenvalue: f64,
    pub valid: bool,
}

/// Checks of the generator on the reduced algebra of `ρ`.
pub fn check(net: &NetModel, rho: &Amplimorphism, phi: &LeftInverse) -> LeftInverseReport {
    let tol = net.tol;
    let normalization = dist(&phi.apply(&rho.unit()), &eye(net.ambient_dim));
    let reduced = reduced_algebra(net, rho);
    let gens = net.generators();
    let gen_images: Vec<Mat> = gens.iter().map(|g| rho.apply(g)).collect();
    let mut module: f64 = 0.0;
    let mut values_in_algebra: f64 = 0.0;
    let mut adjoint: f64 = 0.0;
    let mut schwarz = f64::INFINITY;
    for b in reduced.basis() {
        let pb = phi.apply(b);
        values_in_algebra = values_in_algebra.max(entries_defect(net, &pb));
        adjoint = adjoint.max(dist(&phi.apply(&b.adjoint()), &pb.adjoint()));
        let gap = phi.apply(&(b.adjoint() * b)) - pb.adjoint() * &pb;
        schwarz = schwarz.min(min_eigenvalue(&((&gap + gap.adjoint()) * real(0.5))));
        for (g, gi) in gens.iter().zip(&gen_images) {
            module = module.max(dist(&phi.apply(&(b * gi)), &(&pb * g)));
        }
    }
    let valid = normalization < tol && module < tol && values_in_algebra < tol && adjoint < tol && schwarz > -tol;
    LeftInverseReport {
        label: phi.label.clone(),
        tolerance: tol,
        normalization,
        module,
        values_in_algebra,
        adjoint,
        schwarz_min_eigenvalue: schwarz,
        valid,
    }
}

/// Smallest eigenvalue of the Gram form `(B, C) ↦ tr φ(B* C)` on the reduced
/// algebra; positive iff `φ` is faithful.
pub fn faithfulness_margin(net: &NetModel, rho: &Amplimorphism, phi: &LeftInverse) -> f64 {
    let basis = reduced_algebra(net, rho).basis().to_vec();
    let k = basis.len();
    let mut gram = zeros(k, k);
    for i in 0..k {
        for j in 0..k {
            gram[(i, j)] = phi.apply(&(basis[i].adjoint() * &basis[j])).trace();
        }
    }
    min_eigenvalue(&((&gram + gram.adjoint()) * real(0.5)))
}

/// `Φ_{ρ,ρ}(ε(ρ,ρ))`.
pub fn self_statistics(net: &NetModel, rho: &Amplimorphism, phi: &LeftInverse) -> Result<Mat> {
    let eps = symmetry(net, rho, rho)?.matrix;
    Ok(phi.family(&eps))
}

/// `λ` with `Φ_{ρ,ρ}(ε(ρ,ρ)) = λ 1_ρ`; errors when the value is not scalar.
pub fn statistics_parameter(net: &NetModel, rho: &Amplimorphism, phi: &LeftInverse) -> Result<ScalarFit> {
    let fit = ScalarFit::of(&self_statistics(net, rho, phi)?, &rho.unit());
    if !fit.is_scalar(net.tol) {
        return Err(Error::NotScalar(fit.residual));
    }
    Ok(fit)
}

/// `d!^{-1} (1-λ)(1-2λ)···(1-(d-1)λ)`.
pub fn antisymmetric_trace(lambda: f64, d: usize) -> f64 {
    let mut out = 1.0;
    for k in 1..d {
        out *= (1.0 - k as f64 * lambda) / (k + 1) as f64;
    }
    out
}

/// The `d`-fold left inverse of `ρ^d`.
pub fn power_left_inverse(phi: &LeftInverse, d: usize) -> LeftInverse {
    let mut out = phi.clone();
    for _ in 1..d {
        out = compose(&out, phi);
    }
    out.with_label(format!("{}^{}", phi.label, d))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FormulaCheck {
    pub d: usize,
    pub lambda: f64,
    pub lhs: ScalarFit,
    pub rhs: f64,
    pub residual: f64,
}

/// Compare `Φ^{∘d}_{ι,ι}(A_d)` with the closed form in `λ`.
pub fn antisymmetrizer_formula(net: &NetModel, rho: &Amplimorphism, phi: &LeftInverse, d: usize) -> Result<FormulaCheck> {
    let lambda = statistics_parameter(net, rho, phi)?;
    let a_d = symmetrizer(net, rho, d, SymmetrizerKind::Antisymmetric)?;
    let phi_d = power_left_inverse(phi, d);
    let lhs = ScalarFit::of(&phi_d.apply(&a_d), &eye(net.ambient_dim));
    let rhs = antisymmetric_trace(lambda.re, d);
    let residual = (lhs.value() - real(rhs)).norm() + lhs.residual;
    Ok(FormulaCheck { d, lambda: lambda.re, lhs, rhs, residual })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimpleReport {
    pub label: String,
    /// `Φ(ε(γ,γ))` fitted against `1_γ`.
    pub left_inverse_fit: Option<ScalarFit>,
    /// `ε(γ,γ)` fitted against `1_{γ²}`.
    pub symmetry_fit: ScalarFit,
    pub square_commutant_dim: usize,
    pub by_left_inverse: Option<bool>,
    pub by_symmetry: bool,
    pub by_square: bool,
    /// `χ_γ` when simple.
    pub sign: Option<i32>,
}

fn is_sign(fit: &ScalarFit, tol: f64) -> Option<i32> {
    if !fit.is_scalar(tol) || fit.im.abs() >= tol {
        return None;
    }
    if (fit.re - 1.0).abs() < tol {
        Some(1)
    } else if (fit.re + 1.0).abs() < tol {
        Some(-1)
    } else {
        None
    }
}

/// The three equivalent characterisations of a simple object; disagreement is
/// an error.
pub fn check_simple(net: &NetModel, gamma: &Amplimorphism, phi: Option<&LeftInverse>) -> Result<SimpleReport> {
    use crate::object::{intertwiner_space, tensor};
    let tol = net.tol;
    let eps = symmetry(net, gamma, gamma)?.matrix;
    let square = tensor(net, gamma, gamma)?;
    let symmetry_fit = ScalarFit::of(&eps, &square.unit());
    let square_commutant_dim = intertwiner_space(net, &square, &square).len();
    let left_inverse_fit = phi.map(|p| ScalarFit::of(&p.family(&eps), &gamma.unit()));
    let sign_eps = is_sign(&symmetry_fit, tol);
    let sign_phi = left_inverse_fit.as_ref().map(|f| is_sign(f, tol));
    let by_symmetry = sign_eps.is_some();
    let by_square = square_commutant_dim == 1;
    let by_left_inverse = sign_phi.map(|s| s.is_some());
    let agree = by_symmetry == by_square && by_left_inverse.is_none_or(|b| b == by_symmetry);
    if !agree {
        return Err(Error::Inconsistent(format!(
            "simplicity tests disagree for `{}`: left inverse {by_left_inverse:?}, symmetry {by_symmetry}, square {by_square}",
            gamma.label
        )));
    }
    if let (Some(Some(a)), Some(b)) = (sign_phi, sign_eps) {
        if a != b {
            return Err(Error::Inconsistent(format!("signs disagree for `{}`", gamma.label)));
        }
    }
    Ok(SimpleReport {
        label: gamma.label.clone(),
        left_inverse_fit,
        symmetry_fit,
        square_commutant_dim,
        by_left_inverse,
        by_symmetry,
        by_square,
        sign: sign_eps,
    })
}

/// Family axiom i: `Φ(1_ρ×T · X · 1_ρ×S*) - T Φ(X) S*`.
pub fn naturality_defect(rho: &Amplimorphism, phi: &LeftInverse, x: &Mat, t: &Mat, s: &Mat) -> f64 {
    let lhs = phi.family(&(rho.apply_blocks(t) * x * rho.apply_blocks(&s.adjoint())));
    dist(&lhs, &(t * phi.family(x) * s.adjoint()))
}

/// Family axiom ii: `Φ(X × 1_π) - Φ(X) × 1_π` for `X ∈ (ρσ, ρτ)`.
pub fn amplification_defect(
    net: &NetModel,
    rho: &Amplimorphism,
    sigma: &Amplimorphism,
    pi: &Amplimorphism,
    phi: &LeftInverse,
    x: &Mat,
) -> Result<f64> {
    use crate::object::{tensor, tensor_arrows};
    let rho_sigma = tensor(net, rho, sigma)?;
    let lhs = phi.family(&tensor_arrows(x, &pi.unit(), &rho_sigma));
    let rhs = tensor_arrows(&phi.family(x), &pi.unit(), sigma);
    Ok(dist(&lhs, &rhs))
}

/// Family version of Lemma-style adjoint and Schwarz properties on an arrow
/// `r ∈ (ρσ, ργ)`: returns `(|Φ(r)* - Φ(r*)|, min eig(Φ(r*r) - Φ(r*)Φ(r)))`.
pub fn adjoint_and_schwarz(phi: &LeftInverse, r: &Mat) -> (f64, f64) {
    let pr = phi.family(r);
    let pra = phi.family(&r.adjoint());
    let gap = phi.family(&(r.adjoint() * r)) - &pra * &pr;
    (dist(&pr.adjoint(), &pra), min_eigenvalue(&((&gap + gap.adjoint()) * real(0.5))))
}

/// `(Ψ∘Φ)(ε(ρσ,ρσ))` against `Φ(ε(ρ,ρ)) × Ψ(ε(σ,σ))` for `Φ` of `ρ`, `Ψ` of `σ`.
pub fn multiplicativity_defect(
    net: &NetModel,
    rho: &Amplimorphism,
    phi: &LeftInverse,
    sigma: &Amplimorphism,
    psi: &LeftInverse,
) -> Result<f64> {
    use crate::object::{tensor, tensor_arrows};
    let rs = tensor(net, rho, sigma)?;
    let composed = compose(psi, phi);
    let lhs = composed.family(&symmetry(net, &rs, &rs)?.matrix);
    let rhs = tensor_arrows(&self_statistics(net, rho, phi)?, &self_statistics(net, sigma, psi)?, rho);
    Ok(dist(&lhs, &rhs))
}
