//! Conjugate equations: solving them, standard normalization, the explicit
//! constructions for simple objects and finite statistics, and the chain
//! from a solution to membership in the relevant subcategory.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec;
use crate::left_inverse::{self, check_simple, from_conjugate, ScalarFit};
use crate::linalg::{block, c, dist, eye, hermitian_eigen, rank, real, set_block, zeros, Mat, C64};
use crate::net::NetModel;
use crate::object::{intertwiner_space, power, tensor, tensor_arrows, Amplimorphism, Support};
use crate::presheaf::{self, check_double_faithfulness, Commutants};
use crate::statistics::{classify, Witness};
use crate::symmetry::symmetry;

/// Upper bound on sweep candidates.
pub const SWEEP_CAP: usize = 10_000;
/// Lattice values per coordinate; the sweep visits `LATTICE.len()^dim` points.
const LATTICE: [(f64, f64); 10] =
    [(0.0, 0.0), (1.0, 0.0), (-1.0, 0.0), (0.0, 1.0), (0.0, -1.0), (2.0, 0.0), (-2.0, 0.0), (0.0, 2.0), (0.0, -2.0), (1.0, 1.0)];
const CHUNK: usize = 256;

#[derive(Clone, Debug)]
pub struct ConjugateSolution {
    pub rho: Amplimorphism,
    pub rho_bar: Amplimorphism,
    /// `R ∈ (ι, ρ̄ρ)`.
    pub r: Mat,
    /// `R̄ ∈ (ι, ρρ̄)`.
    pub r_bar: Mat,
    pub residuals: (f64, f64),
}

/// `(1_ρ, 1_ρ̄)` residuals of `R̄*×1_ρ · 1_ρ×R` and `R*×1_ρ̄ · 1_ρ̄×R̄`.
pub fn conjugate_residuals(net: &NetModel, rho: &Amplimorphism, rho_bar: &Amplimorphism, r: &Mat, r_bar: &Mat) -> Result<(f64, f64)> {
    let rr_bar = tensor(net, rho, rho_bar)?;
    let r_bar_r = tensor(net, rho_bar, rho)?;
    let first = zigzag(rho, &rr_bar, r, r_bar);
    let second = zigzag(rho_bar, &r_bar_r, r_bar, r);
    let (e1, e2) = (rho.unit(), rho_bar.unit());
    if first.shape() != e1.shape() || second.shape() != e2.shape() {
        return Err(Error::Shape("conjugate arrows do not match the objects".into()));
    }
    Ok((dist(&first, &e1), dist(&second, &e2)))
}

/// `Q* × 1_ρ · 1_ρ × P` for `P ∈ (ι, ρ̄ρ)`, `Q ∈ (ι, ρρ̄)`; `rho_rho_bar` is `ρρ̄`.
fn zigzag(rho: &Amplimorphism, rho_rho_bar: &Amplimorphism, p: &Mat, q: &Mat) -> Mat {
    let unit = rho.unit();
    tensor_arrows(&q.adjoint(), &unit, rho_rho_bar) * tensor_arrows(&unit, p, rho)
}

impl ConjugateSolution {
    pub fn new(net: &NetModel, rho: Amplimorphism, rho_bar: Amplimorphism, r: Mat, r_bar: Mat) -> Result<Self> {
        let residuals = conjugate_residuals(net, &rho, &rho_bar, &r, &r_bar)?;
        Ok(Self { rho, rho_bar, r, r_bar, residuals })
    }

    pub fn holds(&self, tol: f64) -> bool {
        self.residuals.0 < tol && self.residuals.1 < tol
    }

    /// `(ρ, R̄, R)` as a solution for `ρ̄`.
    pub fn swapped(&self, net: &NetModel) -> Result<Self> {
        Self::new(net, self.rho_bar.clone(), self.rho.clone(), self.r_bar.clone(), self.r.clone())
    }

    pub fn summary(&self) -> SolutionSummary {
        SolutionSummary {
            rho: self.rho.label.clone(),
            rho_bar: self.rho_bar.label.clone(),
            r: crate::document::encode_matrix(&self.r),
            r_bar: crate::document::encode_matrix(&self.r_bar),
            r_norm_sq: self.r.norm_squared() / self.rho.ambient_dim as f64,
            r_bar_norm_sq: self.r_bar.norm_squared() / self.rho.ambient_dim as f64,
            residuals: [self.residuals.0, self.residuals.1],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolutionSummary {
    pub rho: String,
    pub rho_bar: String,
    pub r: crate::document::MatrixJson,
    pub r_bar: crate::document::MatrixJson,
    /// `R*R` as a scalar.
    pub r_norm_sq: f64,
    pub r_bar_norm_sq: f64,
    pub residuals: [f64; 2],
}

#[derive(Clone, Debug)]
pub struct SweepOutcome {
    pub solution: Option<ConjugateSolution>,
    pub r_space_dim: usize,
    pub r_bar_space_dim: usize,
    pub candidates: usize,
    /// Candidates evaluated before the first success, or all of them.
    pub tried: usize,
    /// True when the sweep decides solvability: an empty space, or a
    /// one-dimensional one where `R` is fixed up to scale.
    pub exhaustive: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepSummary {
    pub found: bool,
    pub r_space_dim: usize,
    pub r_bar_space_dim: usize,
    pub candidates: usize,
    pub tried: usize,
    pub exhaustive: bool,
    pub note: String,
}

impl SweepOutcome {
    pub fn summary(&self) -> SweepSummary {
        let note = match (&self.solution, self.exhaustive) {
            (Some(_), _) => format!("solution at candidate {} of {}", self.tried, self.candidates),
            (None, true) => "no solution exists".to_string(),
            (None, false) => format!("no solution found among {} lattice candidates (cap {SWEEP_CAP})", self.candidates),
        };
        SweepSummary {
            found: self.solution.is_some(),
            r_space_dim: self.r_space_dim,
            r_bar_space_dim: self.r_bar_space_dim,
            candidates: self.candidates,
            tried: self.tried,
            exhaustive: self.exhaustive,
            note,
        }
    }
}

/// Coefficients of the `k`-th lattice point, normalized to unit length.
fn lattice_point(k: usize, dim: usize) -> Option<Vec<C64>> {
    let mut idx = k;
    let mut out = Vec::with_capacity(dim);
    for _ in 0..dim {
        let (re, im) = LATTICE[idx % LATTICE.len()];
        out.push(c(re, im));
        idx /= LATTICE.len();
    }
    let norm = out.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    if norm == 0.0 {
        return None;
    }
    Some(out.into_iter().map(|z| z / norm).collect())
}

fn combine(basis: &[Mat], coeffs: &[C64]) -> Mat {
    let mut out = zeros(basis[0].nrows(), basis[0].ncols());
    for (b, z) in basis.iter().zip(coeffs) {
        out += b * *z;
    }
    out
}

/// `R̄` from the first conjugate equation by least squares, given `R`.
fn solve_r_bar(net: &NetModel, rho: &Amplimorphism, rho_rho_bar: &Amplimorphism, r: &Mat, bar_basis: &[Mat]) -> Option<Mat> {
    let unit = rho.unit();
    let right = tensor_arrows(&unit, r, rho);
    let cols: Vec<Mat> = bar_basis.iter().map(|b| tensor_arrows(&b.adjoint(), &unit, rho_rho_bar) * &right).collect();
    let n = unit.len();
    let mut a = zeros(n, cols.len());
    for (k, m) in cols.iter().enumerate() {
        a.set_column(k, &crate::linalg::vec_of(m));
    }
    let target = crate::linalg::vec_of(&unit);
    let pinv = a.clone().pseudo_inverse(net.tol).ok()?;
    let conj_coeffs = pinv * &target;
    if (&a * &conj_coeffs - &target).norm() >= net.tol {
        return None;
    }
    let coeffs: Vec<C64> = conj_coeffs.iter().map(|z| z.conj()).collect();
    Some(combine(bar_basis, &coeffs))
}

/// Sweep `R` over the lattice in `(ι, ρ̄ρ)`, solve `R̄` linearly, keep the
/// first candidate passing both equations.
pub fn solve_conjugate(net: &NetModel, rho: &Amplimorphism, rho_bar: &Amplimorphism) -> Result<SweepOutcome> {
    let iota = Amplimorphism::identity(net);
    let r_bar_r = tensor(net, rho_bar, rho)?;
    let rr_bar = tensor(net, rho, rho_bar)?;
    let basis = intertwiner_space(net, &iota, &r_bar_r);
    let bar_basis = intertwiner_space(net, &iota, &rr_bar);
    let (m, mb) = (basis.len(), bar_basis.len());
    let mut outcome =
        SweepOutcome { solution: None, r_space_dim: m, r_bar_space_dim: mb, candidates: 0, tried: 0, exhaustive: m <= 1 };
    if m == 0 || mb == 0 {
        outcome.exhaustive = true;
        return Ok(outcome);
    }
    let total = LATTICE.len().checked_pow(m as u32).map_or(SWEEP_CAP, |t| t.min(SWEEP_CAP));
    let points: Vec<Vec<C64>> = (0..total).filter_map(|k| lattice_point(k, m)).collect();
    outcome.candidates = points.len();
    let evaluate = |coeffs: &Vec<C64>| -> Option<(Mat, Mat)> {
        let r = combine(&basis, coeffs);
        let r_bar = solve_r_bar(net, rho, &rr_bar, &r, &bar_basis)?;
        let second = zigzag(rho_bar, &r_bar_r, &r_bar, &r);
        (dist(&second, &rho_bar.unit()) < net.tol).then_some((r, r_bar))
    };
    for (ci, chunk) in points.chunks(CHUNK).enumerate() {
        let results = exec::map(chunk, evaluate);
        if let Some((k, (r, r_bar))) = results.into_iter().enumerate().find_map(|(k, x)| x.map(|x| (k, x))) {
            outcome.tried = ci * CHUNK + k + 1;
            outcome.solution = Some(ConjugateSolution::new(net, rho.clone(), rho_bar.clone(), r, r_bar)?);
            return Ok(outcome);
        }
    }
    outcome.tried = outcome.candidates;
    Ok(outcome)
}

/// Hermitian functional calculus on the support of `h` (eigenvalues above `tol`).
fn hermitian_fn(h: &Mat, tol: f64, f: impl Fn(f64) -> f64) -> Result<Mat> {
    let (vals, vecs) = hermitian_eigen(&((h + h.adjoint()) * real(0.5)));
    let mut out = zeros(h.nrows(), h.ncols());
    for (k, v) in vals.iter().enumerate() {
        if *v < -tol {
            return Err(Error::Inconsistent(format!("expected a positive operator, eigenvalue {v:e}")));
        }
        if *v > tol {
            out += vecs.column(k) * vecs.column(k).adjoint() * real(f(*v));
        }
    }
    Ok(out)
}

/// Density against the matrix trace of the functional on `(ρ, ρ)` taking
/// `values[k]` on `space[k]` (an orthonormal basis).
fn density(space: &[Mat], values: &[C64]) -> Mat {
    let mut out = zeros(space[0].nrows(), space[0].ncols());
    for (t, v) in space.iter().zip(values) {
        out += t.adjoint() * *v;
    }
    out
}

/// `R*(1_ρ̄ × T)R` and `R̄*(T × 1_ρ̄)R̄` as scalars, for each `T`.
fn trace_functionals(net: &NetModel, sol: &ConjugateSolution, space: &[Mat]) -> (Vec<C64>, Vec<C64>) {
    let one = eye(net.ambient_dim);
    let unit_bar = sol.rho_bar.unit();
    space
        .iter()
        .map(|t| {
            let l = sol.r.adjoint() * tensor_arrows(&unit_bar, t, &sol.rho_bar) * &sol.r;
            let r = sol.r_bar.adjoint() * tensor_arrows(t, &unit_bar, &sol.rho) * &sol.r_bar;
            (ScalarFit::of(&l, &one).value(), ScalarFit::of(&r, &one).value())
        })
        .unzip()
}

/// Rebalance `R = (1 × Y) R`, `R̄ = (Y^{-1*} × 1) R̄` with `Y ∈ (ρ, ρ)` so
/// that `R*(1 × T)R = R̄*(T × 1)R̄` for every `T ∈ (ρ, ρ)`. The output does
/// not depend on the scale of the input.
pub fn standardize(net: &NetModel, sol: &ConjugateSolution) -> Result<ConjugateSolution> {
    let tol = net.tol;
    if !sol.holds(tol) {
        return Err(Error::Undefined(format!("residuals {:?} exceed the tolerance", sol.residuals)));
    }
    let space = intertwiner_space(net, &sol.rho, &sol.rho);
    if space.is_empty() {
        return Err(Error::Undefined("(ρ, ρ) is empty".into()));
    }
    let (left, right) = trace_functionals(net, sol, &space);
    let a = density(&space, &left);
    let b = density(&space, &right);
    let unit = sol.rho.unit();
    let support = rank(&unit, tol);
    if rank(&a, tol) != support || rank(&b, tol) != support {
        return Err(Error::Undefined("solution is not faithful on (ρ, ρ); input is not a finite sum of irreducibles".into()));
    }
    // P A P = B with P > 0: P = A^{-1/2} (A^{1/2} B A^{1/2})^{1/2} A^{-1/2}.
    let a_half = hermitian_fn(&a, tol, f64::sqrt)?;
    let a_neg_half = hermitian_fn(&a, tol, |x| 1.0 / x.sqrt())?;
    let mid = hermitian_fn(&(&a_half * &b * &a_half), tol, f64::sqrt)?;
    let p = &a_neg_half * mid * &a_neg_half;
    let y = hermitian_fn(&p, tol, f64::sqrt)?;
    let y_inv = hermitian_fn(&p, tol, |x| 1.0 / x.sqrt())?;
    let r = tensor_arrows(&sol.rho_bar.unit(), &y, &sol.rho_bar) * &sol.r;
    let r_bar = tensor_arrows(&y_inv.adjoint(), &sol.rho_bar.unit(), &sol.rho) * &sol.r_bar;
    let out = ConjugateSolution::new(net, sol.rho.clone(), sol.rho_bar.clone(), r, r_bar)?;
    if !out.holds(tol) {
        return Err(Error::Inconsistent(format!("rebalanced solution fails the equations: {:?}", out.residuals)));
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Standardness {
    /// `Φ(ε(ρ,ρ))² = c 1_ρ` for the left inverse induced by the solution.
    pub c: ScalarFit,
    /// Worst `|R*(1 × T)R - R̄*(T × 1)R̄|` over an orthonormal basis of `(ρ, ρ)`.
    pub trace_defect: f64,
    /// `R*R` and `R̄*R̄`.
    pub norms: [f64; 2],
    pub standard: bool,
}

pub fn standardness(net: &NetModel, sol: &ConjugateSolution) -> Result<Standardness> {
    let tol = net.tol;
    let phi = from_conjugate(net, &sol.rho, &sol.rho_bar, &sol.r)?;
    let s = left_inverse::self_statistics(net, &sol.rho, &phi)?;
    let c = ScalarFit::of(&(&s * &s), &sol.rho.unit());
    let space = intertwiner_space(net, &sol.rho, &sol.rho);
    let (left, right) = trace_functionals(net, sol, &space);
    let trace_defect = left.iter().zip(&right).map(|(l, r)| (l - r).norm()).fold(0.0, f64::max);
    let d = net.ambient_dim as f64;
    let norms = [sol.r.norm_squared() / d, sol.r_bar.norm_squared() / d];
    let standard = c.is_scalar(tol) && c.re > tol && c.im.abs() < tol && trace_defect < tol;
    Ok(Standardness { c, trace_defect, norms, standard })
}

/// A-valued isometry `V` with `V V* = γ(1)` and blocks in `A(o)`.
fn local_isometry(net: &NetModel, gamma: &Amplimorphism, o: &str) -> Result<std::result::Result<Mat, String>> {
    let tol = net.tol;
    let d = net.ambient_dim;
    let n = gamma.multiplicity;
    let unit = gamma.unit();
    let r = rank(&unit, tol);
    if r != d {
        return Ok(Err(format!(
            "rank obstruction: rank γ(1) = {r} differs from {d}; requires properly infinite local algebra"
        )));
    }
    let alg = net.algebra(o)?;
    let mut candidates: Vec<Mat> = Vec::new();
    for i in 0..n {
        for b in std::iter::once(eye(d)).chain(alg.basis().iter().cloned()) {
            let mut y = zeros(d * n, d);
            set_block(&mut y, i, 0, &b);
            candidates.push(y);
        }
    }
    for cand in candidates {
        let x = &unit * cand;
        let v = crate::linalg::polar_isometry(&x, tol);
        if dist(&(v.adjoint() * &v), &eye(d)) >= tol || dist(&(&v * v.adjoint()), &unit) >= tol {
            continue;
        }
        let off = (0..n).map(|i| alg.residual(&block(&v, i, 0, d, d))).fold(0.0, f64::max);
        if off < tol {
            return Ok(Ok(v));
        }
    }
    Ok(Err(format!("no A({o})-valued isometry onto γ(1) in the polar sweep; requires properly infinite local algebra")))
}

#[derive(Clone, Debug)]
pub struct SimpleConjugate {
    pub isometry: Mat,
    pub gamma_bar: Amplimorphism,
    pub solution: ConjugateSolution,
}

#[derive(Clone, Debug)]
pub enum SimpleOutcome {
    Found(Box<SimpleConjugate>),
    Obstructed(String),
}

/// The inverse of the automorphism `A ↦ V* γ(A) V` as an object localized in `o`.
pub fn conjugate_for_simple(net: &NetModel, cache: &Commutants, gamma: &Amplimorphism) -> Result<SimpleOutcome> {
    let simple = check_simple(net, gamma, None)?;
    if simple.sign.is_none() {
        return Err(Error::Undefined(format!("`{}` is not simple", gamma.label)));
    }
    let faith = check_double_faithfulness(net, cache, gamma)?;
    if !(faith.by_kernel && faith.by_central_support) {
        return Ok(SimpleOutcome::Obstructed(format!(
            "`{}` is not doubly faithful (kernel test {}, central support test {})",
            gamma.label, faith.by_kernel, faith.by_central_support
        )));
    }
    let o = presheaf::localization_region(net, gamma)?;
    let v = match local_isometry(net, gamma, &o)? {
        Ok(v) => v,
        Err(msg) => return Ok(SimpleOutcome::Obstructed(msg)),
    };
    let basis = net.global().basis();
    let k = basis.len();
    let mut m = zeros(k, k);
    for (j, b) in basis.iter().enumerate() {
        let image = v.adjoint() * gamma.apply(b) * &v;
        let coeffs = net.global().coefficients(&image);
        for (i, z) in coeffs.iter().enumerate() {
            m[(i, j)] = *z;
        }
    }
    let inv = crate::linalg::checked_inverse(&m, net.tol)
        .ok_or_else(|| Error::Inconsistent("V* γ( ) V is not invertible".into()))?;
    let values: Vec<Mat> = (0..k).map(|j| combine(basis, &inv.column(j).iter().cloned().collect::<Vec<_>>())).collect();
    let mut gamma_bar = Amplimorphism::new(net, format!("conj({})", gamma.label), 1, values, Support::Region(o.clone()), BTreeMap::new())?;
    // Transporter to a: γ̄(w_a)* with w_a = V_a* U_a V.
    let mut transporters = BTreeMap::new();
    for a in &net.site.regions {
        let Some(u) = gamma.transporters.get(a) else { continue };
        let moved = gamma.transported(net, a)?;
        let Ok(va) = local_isometry(net, &moved, a)? else { continue };
        let w = va.adjoint() * u * &v;
        transporters.insert(a.clone(), gamma_bar.apply(&w).adjoint());
    }
    gamma_bar = gamma_bar.with_transporters(transporters);
    let r = gamma_bar.apply_blocks(&v);
    let sol = ConjugateSolution::new(net, gamma.clone(), gamma_bar.clone(), r, v.clone())?;
    if !sol.holds(net.tol) {
        return Err(Error::Inconsistent(format!("constructed pair fails the conjugate equations: {:?}", sol.residuals)));
    }
    Ok(SimpleOutcome::Found(Box::new(SimpleConjugate { isometry: v, gamma_bar, solution: sol })))
}

/// `ρ̄ = γ̄ρ^{d-1}`, `R = (1_γ̄ × V) T`, `R̄ ∝ ε(ρ̄, ρ) R` from a witness and a
/// solution `(γ̄, T, T̄)` for `γ`.
pub fn conjugate_for_finite_stats(net: &NetModel, rho: &Amplimorphism, w: &Witness, gamma_sol: &ConjugateSolution) -> Result<ConjugateSolution> {
    let gamma_bar = &gamma_sol.rho_bar;
    let rho_bar = if w.d == 1 {
        gamma_bar.clone()
    } else {
        tensor(net, gamma_bar, &power(net, rho, w.d - 1)?)?.with_label(format!("conj({})", rho.label))
    };
    let r = tensor_arrows(&gamma_bar.unit(), &w.isometry, gamma_bar) * &gamma_sol.r;
    let eps = symmetry(net, &rho_bar, rho)?.matrix;
    let raw = &eps * &r;
    let rr_bar = tensor(net, rho, &rho_bar)?;
    let kappa = ScalarFit::of(&zigzag(rho, &rr_bar, &r, &raw), &rho.unit());
    if !kappa.is_scalar(net.tol) || kappa.value().norm() < net.tol {
        return Err(Error::Inconsistent(format!("ε(ρ̄, ρ) R does not pair with R to a scalar (residual {:e})", kappa.residual)));
    }
    let r_bar = raw * (real(1.0) / kappa.value().conj());
    let sol = ConjugateSolution::new(net, rho.clone(), rho_bar, r, r_bar)?;
    if !sol.holds(net.tol) {
        return Err(Error::Inconsistent(format!("construction residuals {:?}", sol.residuals)));
    }
    Ok(sol)
}

/// Solution for `ρ1ρ2` with conjugate `ρ̄2ρ̄1` from solutions for each factor.
pub fn tensor_solution(net: &NetModel, first: &ConjugateSolution, second: &ConjugateSolution) -> Result<ConjugateSolution> {
    let (r1, r2) = (&first.rho, &second.rho);
    let (b1, b2) = (&first.rho_bar, &second.rho_bar);
    let rho = tensor(net, r1, r2)?;
    let rho_bar = tensor(net, b2, b1)?;
    let mid = tensor_arrows(&b2.unit(), &first.r, b2);
    // (1_ρ̄2 × R1) × 1_ρ2 has source ρ̄2·ι = ρ̄2.
    let r = tensor_arrows(&mid, &r2.unit(), b2) * &second.r;
    let mid_bar = tensor_arrows(&r1.unit(), &second.r_bar, r1);
    let r_bar = tensor_arrows(&mid_bar, &b1.unit(), r1) * &first.r_bar;
    ConjugateSolution::new(net, rho, rho_bar, r, r_bar)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Stage {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConjugationReport {
    pub label: String,
    pub tolerance: f64,
    pub dmax: usize,
    pub stages: Vec<Stage>,
    /// First failing stage; later stages are not run.
    pub aborted_at: Option<String>,
    pub member: bool,
}

/// Evidence chain from a solution of the conjugate equations to membership
/// in the relevant subcategory.
pub fn verify_conjugation_theorems(net: &NetModel, cache: &Commutants, sol: &ConjugateSolution, dmax: usize) -> Result<ConjugationReport> {
    let tol = net.tol;
    let rho = &sol.rho;
    let mut report =
        ConjugationReport { label: rho.label.clone(), tolerance: tol, dmax, stages: Vec::new(), aborted_at: None, member: false };
    let push = |report: &mut ConjugationReport, name: &str, passed: bool, detail: String| -> bool {
        report.stages.push(Stage { name: name.into(), passed, detail });
        if !passed {
            report.aborted_at = Some(name.into());
        }
        passed
    };

    if !push(&mut report, "conjugate equations", sol.holds(tol), format!("residuals {:e}, {:e}", sol.residuals.0, sol.residuals.1)) {
        return Ok(report);
    }
    let phi = match from_conjugate(net, rho, &sol.rho_bar, &sol.r) {
        Ok(p) => p,
        Err(e) => {
            push(&mut report, "left inverse", false, e.to_string());
            return Ok(report);
        }
    };
    let li = left_inverse::check(net, rho, &phi);
    if !push(&mut report, "left inverse", li.valid, format!("family and Schwarz checks valid = {}", li.valid)) {
        return Ok(report);
    }
    let st = standardness(net, sol)?;
    let detail = format!("Φ(ε)² = {:.12} · 1 (residual {:e}), trace defect {:e}", st.c.re, st.c.residual, st.trace_defect);
    if !push(&mut report, "standard", st.standard, detail) {
        return Ok(report);
    }
    let cl = classify(net, rho, Some(&phi), dmax)?;
    let detail = cl
        .report
        .summands
        .iter()
        .map(|s| format!("{}: λ = {}, d = {}", s.label, s.lambda.map_or("-".into(), |l| format!("{:.12}", l.re)), s.d.map_or("-".into(), |d| d.to_string())))
        .collect::<Vec<_>>()
        .join("; ");
    if !push(&mut report, "finite statistics", cl.report.finite, detail) {
        return Ok(report);
    }
    let pli = presheaf::conjugate_route(net, cache, rho, &sol.rho_bar, &sol.r)
        .and_then(|p| presheaf::check_presheaf_left_inverse(net, cache, rho, &p));
    let (ok, detail) = match pli {
        Ok(r) => (r.valid, format!("{} components valid = {}", r.regions.len(), r.valid)),
        Err(e) => (false, e.to_string()),
    };
    if !push(&mut report, "presheaf-left inverse", ok, detail) {
        return Ok(report);
    }
    let hom = presheaf::check_homogeneous(net, cache, rho, dmax)?;
    let detail = format!("{} regions, failing {:?}", hom.regions.len(), hom.failing);
    if !push(&mut report, "homogeneous", hom.homogeneous, detail) {
        return Ok(report);
    }
    let m = presheaf::check_relevant_membership(net, cache, rho, dmax)?;
    let detail = m.summands.iter().map(|s| format!("{}: {}", s.label, s.evidence.join(", "))).collect::<Vec<_>>().join("; ");
    push(&mut report, "membership", m.member, detail);
    report.member = m.member;
    Ok(report)
}
