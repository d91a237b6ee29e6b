//! Objects (amplimorphisms) and arrows (intertwiners).
//!
//! An amplimorphism of multiplicity `n` maps the global algebra into
//! `A ⊗ M_n`, realised as `(dim·n) × (dim·n)` matrices made of an `n × n`
//! grid of `dim × dim` blocks. It is stored by its values on the orthonormal
//! basis of the global algebra and applied through the induced linear map.
//!
//! Tensor products use the lexicographic order: in `ρσ` the multiplicity index
//! of `ρ` runs fastest, so `ρσ(A)` is `ρ` applied to every block of `σ(A)`.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::intertwine::{self, Problem};
use crate::linalg::{
    block, block_diag, checked_inverse, dist, eye, fro, from_blocks, is_projection, kron, polar_isometry, real,
    set_block, superoperator, unvec, vec_of, zeros, Mat, Span, C64,
};
use crate::net::NetModel;

/// Where an object is claimed to be localized.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Support {
    /// Localized in every region (the identity, central projections).
    Everywhere,
    Region(String),
    /// No region of the site contains the support.
    Unlocalized,
}

impl Support {
    pub fn region(&self) -> Option<&str> {
        match self {
            Support::Region(r) => Some(r),
            _ => None,
        }
    }

    /// True if the object is localized in `a` by this claim.
    pub fn within(&self, net: &NetModel, a: &str) -> bool {
        match self {
            Support::Everywhere => true,
            Support::Region(o) => net.site.is_leq(o, a),
            Support::Unlocalized => false,
        }
    }

    /// Regions spacelike to the support.
    pub fn spacelike_regions(&self, net: &NetModel) -> Vec<String> {
        match self {
            Support::Everywhere => net.site.regions.clone(),
            Support::Region(o) => net.site.spacelike_complement(o).unwrap_or_default(),
            Support::Unlocalized => Vec::new(),
        }
    }
}

#[derive(Clone, Debug)]
pub struct Amplimorphism {
    pub label: String,
    pub multiplicity: usize,
    pub ambient_dim: usize,
    /// Images of the global basis, in basis order.
    pub values: Vec<Mat>,
    pub claimed_support: Support,
    /// Region → unitary `U_a ∈ (ρ, ρ_a)` with `ρ_a = Ad(U_a)∘ρ` localized in `a`.
    pub transporters: BTreeMap<String, Mat>,
    superop: Mat,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ObjectReport {
    pub label: String,
    pub multiplicity: usize,
    pub multiplicativity_defect: f64,
    pub adjoint_defect: f64,
    pub unit_is_projection: bool,
    pub values_in_algebra_defect: f64,
    pub support: Support,
    pub localization_defect: Option<f64>,
    /// Region → worst defect over unitarity, localization of the target and entries.
    pub transporter_defects: BTreeMap<String, f64>,
    pub valid: bool,
}

impl Amplimorphism {
    pub fn new(
        net: &NetModel,
        label: impl Into<String>,
        multiplicity: usize,
        values: Vec<Mat>,
        claimed_support: Support,
        transporters: BTreeMap<String, Mat>,
    ) -> Result<Self> {
        let label = label.into();
        let dim = net.ambient_dim;
        let size = dim * multiplicity;
        let basis = net.global().basis();
        if values.len() != basis.len() {
            return Err(Error::InvalidObject {
                label,
                reason: format!("{} values for a {}-dimensional global algebra", values.len(), basis.len()),
            });
        }
        if let Some(v) = values.iter().find(|v| v.shape() != (size, size)) {
            return Err(Error::InvalidObject { label, reason: format!("value of shape {:?}, expected {size}x{size}", v.shape()) });
        }
        if let Support::Region(s) = &claimed_support {
            net.algebra(s)?;
        }
        let superop = superoperator(basis, &values, dim * dim, size * size);
        Ok(Self { label, multiplicity, ambient_dim: dim, values, claimed_support, transporters, superop })
    }

    /// Build from a map evaluated on the global basis.
    pub fn from_fn<F: Fn(&Mat) -> Mat>(
        net: &NetModel,
        label: impl Into<String>,
        multiplicity: usize,
        claimed_support: Support,
        f: F,
    ) -> Result<Self> {
        let values = net.global().basis().iter().map(&f).collect();
        Self::new(net, label, multiplicity, values, claimed_support, BTreeMap::new())
    }

    /// The tensor unit ι, localized everywhere with identity transporters.
    pub fn identity(net: &NetModel) -> Self {
        let mut obj = Self::from_fn(net, "id", 1, Support::Everywhere, |a| a.clone()).expect("identity is well formed");
        for r in &net.site.regions {
            obj.transporters.insert(r.clone(), eye(net.ambient_dim));
        }
        obj
    }

    /// `A ↦ u A u*` for a unitary `u`.
    pub fn inner(net: &NetModel, label: impl Into<String>, u: &Mat, support: Support) -> Result<Self> {
        Self::from_fn(net, label, 1, support, |a| u * a * u.adjoint())
    }

    pub fn size(&self) -> usize {
        self.ambient_dim * self.multiplicity
    }

    pub fn apply(&self, a: &Mat) -> Mat {
        let s = self.size();
        unvec(&(&self.superop * vec_of(a)), s, s)
    }

    /// `1_ρ = ρ(1)`.
    pub fn unit(&self) -> Mat {
        self.apply(&eye(self.ambient_dim))
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn with_transporters(mut self, transporters: BTreeMap<String, Mat>) -> Self {
        self.transporters = transporters;
        self
    }

    /// `ρ` applied to every `dim × dim` block of `x`.
    pub fn apply_blocks(&self, x: &Mat) -> Mat {
        let d = self.ambient_dim;
        let (nr, nc) = (x.nrows() / d, x.ncols() / d);
        let s = self.size();
        from_blocks(nr, nc, s, s, |i, j| self.apply(&block(x, i, j, d, d)))
    }

    /// `(A ⊗ 1_n) ρ(1) - ρ(A)` worst case over A(a), a ⊥ o.
    pub fn localization_defect(&self, net: &NetModel, o: &str) -> Result<f64> {
        let unit = self.unit();
        let ones = eye(self.multiplicity);
        let mut worst: f64 = 0.0;
        for a in net.site.spacelike_complement(o)? {
            for b in net.algebra(&a)?.basis() {
                worst = worst.max(dist(&self.apply(b), &(kron(&ones, b) * &unit)));
            }
        }
        Ok(worst)
    }

    pub fn is_localized_in(&self, net: &NetModel, o: &str) -> Result<bool> {
        Ok(self.localization_defect(net, o)? < net.tol)
    }

    /// `ρ_a = Ad(U_a)∘ρ` with transporters re-based at `a`.
    pub fn transported(&self, net: &NetModel, a: &str) -> Result<Amplimorphism> {
        let u = self
            .transporters
            .get(a)
            .ok_or_else(|| Error::MissingTransporter { label: self.label.clone(), region: a.to_string() })?;
        let values = self.values.iter().map(|v| u * v * u.adjoint()).collect();
        let transporters = self.transporters.iter().map(|(k, w)| (k.clone(), w * u.adjoint())).collect();
        Self::new(net, format!("{}@{}", self.label, a), self.multiplicity, values, Support::Region(a.to_string()), transporters)
    }

    /// Full validation against the net: homomorphism, *-preservation, unit,
    /// localization and transporters.
    pub fn check(&self, net: &NetModel) -> ObjectReport {
        let tol = net.tol;
        let basis = net.global().basis();
        let gens = net.generators();
        let gen_images: Vec<Mat> = gens.iter().map(|g| self.apply(g)).collect();
        let mut mult: f64 = 0.0;
        let mut adj: f64 = 0.0;
        for (b, v) in basis.iter().zip(&self.values) {
            adj = adj.max(dist(&self.apply(&b.adjoint()), &v.adjoint()));
            for (g, gi) in gens.iter().zip(&gen_images) {
                mult = mult.max(dist(&self.apply(&(b * g)), &(v * gi)));
            }
        }
        let unit = self.unit();
        let values_in_algebra_defect =
            self.values.iter().map(|v| entries_defect(net, v)).fold(0.0, f64::max);
        let localization_defect = match &self.claimed_support {
            Support::Region(o) => self.localization_defect(net, o).ok(),
            Support::Everywhere => {
                net.site.regions.iter().filter_map(|o| self.localization_defect(net, o).ok()).reduce(f64::max)
            }
            Support::Unlocalized => None,
        };
        let mut transporter_defects = BTreeMap::new();
        for (a, u) in &self.transporters {
            let d = transporter_defect(net, self, a, u).unwrap_or(f64::INFINITY);
            transporter_defects.insert(a.clone(), d);
        }
        let valid = mult < tol
            && adj < tol
            && is_projection(&unit, tol)
            && values_in_algebra_defect < tol
            && localization_defect.is_none_or(|d| d < tol)
            && transporter_defects.values().all(|d| *d < tol);
        ObjectReport {
            label: self.label.clone(),
            multiplicity: self.multiplicity,
            multiplicativity_defect: mult,
            adjoint_defect: adj,
            unit_is_projection: is_projection(&unit, tol),
            values_in_algebra_defect,
            support: self.claimed_support.clone(),
            localization_defect,
            transporter_defects,
            valid,
        }
    }

    /// Kernel dimension of `ρ` on the global algebra.
    pub fn kernel_dim(&self, net: &NetModel) -> usize {
        let m = net.global().dim();
        let s = self.size();
        let mut map = zeros(s * s, m);
        for (k, v) in self.values.iter().enumerate() {
            map.set_column(k, &vec_of(v));
        }
        crate::linalg::nullspace(&map, net.tol).ncols()
    }

    pub fn is_faithful(&self, net: &NetModel) -> bool {
        self.kernel_dim(net) == 0
    }
}

/// Worst residual of the `dim × dim` blocks of `x` outside the global algebra.
pub fn entries_defect(net: &NetModel, x: &Mat) -> f64 {
    let d = net.ambient_dim;
    let mut worst: f64 = 0.0;
    for i in 0..x.nrows() / d {
        for j in 0..x.ncols() / d {
            worst = worst.max(net.global().residual(&block(x, i, j, d, d)));
        }
    }
    worst
}

fn transporter_defect(net: &NetModel, rho: &Amplimorphism, a: &str, u: &Mat) -> Result<f64> {
    let unit = rho.unit();
    if u.ncols() != unit.nrows() || !u.nrows().is_multiple_of(net.ambient_dim) {
        return Ok(f64::INFINITY);
    }
    let uu = u * u.adjoint();
    let mut worst = dist(&(u.adjoint() * u), &unit);
    worst = worst.max(dist(&(&uu * &uu), &uu));
    worst = worst.max(entries_defect(net, u));
    let moved = rho.transported(net, a)?;
    worst = worst.max(moved.localization_defect(net, a)?);
    Ok(worst)
}

/// Arrow tensor `T × S` for `T ∈ (ρ1, ρ2)` and `S ∈ (σ1, σ2)`: block `(i, j)`
/// of the result is `T · ρ1(S_ij)`.
pub fn tensor_arrows(t: &Mat, s: &Mat, rho1: &Amplimorphism) -> Mat {
    tensor_arrows_with(t, s, rho1.ambient_dim, |x| rho1.apply(x))
}

/// Same as [`tensor_arrows`] with `ρ1` given as a closure.
pub fn tensor_arrows_with<F: Fn(&Mat) -> Mat>(t: &Mat, s: &Mat, dim: usize, rho1: F) -> Mat {
    let (nr, nc) = (s.nrows() / dim, s.ncols() / dim);
    let (tr, tc) = t.shape();
    let mut out = zeros(nr * tr, nc * tc);
    for i in 0..nr {
        for j in 0..nc {
            let b = t * rho1(&block(s, i, j, dim, dim));
            set_block(&mut out, i, j, &b);
        }
    }
    out
}

/// Smallest region containing both supports.
fn join_support(net: &NetModel, a: &Support, b: &Support) -> Support {
    match (a, b) {
        (Support::Everywhere, x) | (x, Support::Everywhere) => x.clone(),
        (Support::Unlocalized, _) | (_, Support::Unlocalized) => Support::Unlocalized,
        (Support::Region(x), Support::Region(y)) if x == y => Support::Region(x.clone()),
        (Support::Region(x), Support::Region(y)) => net
            .site
            .regions
            .iter()
            .filter(|r| net.site.is_leq(x, r) && net.site.is_leq(y, r))
            .min_by_key(|r| net.site.regions.iter().filter(|q| net.site.is_leq(q, r)).count())
            .map_or(Support::Unlocalized, |r| Support::Region(r.clone())),
    }
}

/// Values on the global basis of a linear map known on some elements.
#[derive(Clone, Debug)]
pub struct ClosureFit {
    pub values: Vec<Mat>,
    /// Dimension of the span reached by products of the known elements.
    pub closure_dim: usize,
    /// Worst residual of expressing a global basis element in that span.
    pub residual: f64,
}

/// Extend `x ↦ image` multiplicatively: products of known elements map to
/// products of their images. The global basis is then fitted by least
/// squares over the products reached.
pub fn fit_values(net: &NetModel, seeds: &[(Mat, Mat)], size: usize) -> Result<ClosureFit> {
    let tol = net.tol;
    let d = net.ambient_dim;
    let target = net.global().dim();
    let mut span = Span::new(d, d);
    let mut words: Vec<(Mat, Mat)> = Vec::new();
    let mut frontier = Vec::new();
    for (x, img) in seeds {
        if span.insert(x, tol) {
            words.push((x.clone(), img.clone()));
            frontier.push(words.len() - 1);
        }
    }
    while span.dim() < target && !frontier.is_empty() {
        let mut next = Vec::new();
        for &k in &frontier {
            for (g, gi) in seeds {
                let w = &words[k].0 * g;
                if span.insert(&w, tol) {
                    let img = &words[k].1 * gi;
                    words.push((w, img));
                    next.push(words.len() - 1);
                }
                if span.dim() == target {
                    break;
                }
            }
        }
        frontier = next;
    }
    let mut wm = zeros(d * d, words.len());
    let mut im = zeros(size * size, words.len());
    for (c, (w, img)) in words.iter().enumerate() {
        wm.set_column(c, &vec_of(w));
        im.set_column(c, &vec_of(img));
    }
    let pinv = wm.clone().pseudo_inverse(tol).map_err(|e| Error::Undefined(e.to_string()))?;
    let mut residual: f64 = 0.0;
    let mut values = Vec::new();
    for g in net.global().basis() {
        let c = &pinv * vec_of(g);
        residual = residual.max((&wm * &c - vec_of(g)).norm());
        values.push(unvec(&(&im * c), size, size));
    }
    Ok(ClosureFit { values, closure_dim: span.dim(), residual })
}

/// Tensor product `ρσ`; multiplicity `n_ρ n_σ`.
pub fn tensor(net: &NetModel, rho: &Amplimorphism, sigma: &Amplimorphism) -> Result<Amplimorphism> {
    let values = sigma.values.iter().map(|v| rho.apply_blocks(v)).collect();
    let mut transporters = BTreeMap::new();
    for (a, u) in &rho.transporters {
        if let Some(v) = sigma.transporters.get(a) {
            transporters.insert(a.clone(), tensor_arrows(u, v, rho));
        }
    }
    Amplimorphism::new(
        net,
        format!("{}*{}", rho.label, sigma.label),
        rho.multiplicity * sigma.multiplicity,
        values,
        join_support(net, &rho.claimed_support, &sigma.claimed_support),
        transporters,
    )
}

/// `ρ^n` with `ρ^0 = ι`.
pub fn power(net: &NetModel, rho: &Amplimorphism, n: usize) -> Result<Amplimorphism> {
    if n == 0 {
        return Ok(Amplimorphism::identity(net));
    }
    let mut out = rho.clone();
    for _ in 1..n {
        out = tensor(net, rho, &out)?;
    }
    Ok(out.with_label(format!("{}^{}", rho.label, n)))
}

/// Canonical block-diagonal direct sum and its injections `W_i ∈ (ρ_i, ⊕ρ)`.
pub fn direct_sum(net: &NetModel, parts: &[&Amplimorphism]) -> Result<(Amplimorphism, Vec<Mat>)> {
    let d = net.ambient_dim;
    let n: usize = parts.iter().map(|p| p.multiplicity).sum();
    let m = net.global().dim();
    let values = (0..m)
        .map(|k| block_diag(&parts.iter().map(|p| p.values[k].clone()).collect::<Vec<_>>()))
        .collect();
    let mut injections = Vec::new();
    let mut offset = 0;
    for p in parts {
        let mut w = zeros(d * n, p.size());
        w.view_mut((offset * d, 0), (p.size(), p.size())).copy_from(&p.unit());
        injections.push(w);
        offset += p.multiplicity;
    }
    let mut transporters = BTreeMap::new();
    for r in &net.site.regions {
        let us: Option<Vec<Mat>> = parts.iter().map(|p| p.transporters.get(r).cloned()).collect();
        if let Some(us) = us {
            transporters.insert(r.clone(), block_diag(&us));
        }
    }
    let mut support = Support::Everywhere;
    for p in parts {
        support = join_support(net, &support, &p.claimed_support);
    }
    let label = parts.iter().map(|p| p.label.as_str()).collect::<Vec<_>>().join("+");
    Ok((Amplimorphism::new(net, format!("({label})"), n, values, support, transporters)?, injections))
}

/// Residual of `t` against `t ∈ (ρ, σ)`, including entries in the global algebra.
pub fn intertwiner_defect(net: &NetModel, t: &Mat, rho: &Amplimorphism, sigma: &Amplimorphism) -> f64 {
    if t.shape() != (sigma.size(), rho.size()) {
        return f64::INFINITY;
    }
    let mut worst = dist(&(t * rho.unit()), t).max(dist(&(sigma.unit() * t), t));
    for g in net.generators() {
        worst = worst.max(dist(&(t * rho.apply(g)), &(sigma.apply(g) * t)));
    }
    worst.max(entries_defect(net, t))
}

/// Orthonormal basis of `(ρ, σ)`.
pub fn intertwiner_space(net: &NetModel, rho: &Amplimorphism, sigma: &Amplimorphism) -> Vec<Mat> {
    let gens = net.generators();
    let problem = Problem {
        source: gens.iter().map(|g| rho.apply(g)).collect(),
        target: gens.iter().map(|g| sigma.apply(g)).collect(),
        source_unit: rho.unit(),
        target_unit: sigma.unit(),
        entries: Some((net.global().span(), net.ambient_dim)),
    };
    intertwine::solve(&problem, net.tol)
}

/// Subobject cut out by a projection `E ∈ (ρ, ρ)`: `γ(A) = E ρ(A) E` with
/// the isometry `V = E ∈ (γ, ρ)`.
pub fn subobject(net: &NetModel, rho: &Amplimorphism, e: &Mat) -> Result<(Amplimorphism, Mat)> {
    if !is_projection(e, net.tol) {
        return Err(Error::NotProjection("subobject projection".into()));
    }
    let defect = intertwiner_defect(net, e, rho, rho);
    if defect >= net.tol {
        return Err(Error::Undefined(format!("projection is not in (ρ, ρ): defect {defect:e}")));
    }
    if fro(e) < net.tol {
        return Err(Error::Undefined("zero projection has no subobject".into()));
    }
    let values = rho.values.iter().map(|v| e * v * e).collect();
    let transporters = rho.transporters.iter().map(|(k, u)| (k.clone(), u * e)).collect();
    let gamma = Amplimorphism::new(
        net,
        format!("sub({})", rho.label),
        rho.multiplicity,
        values,
        rho.claimed_support.clone(),
        transporters,
    )?;
    Ok((gamma, e.clone()))
}

/// Inverse of an automorphism of the global algebra (`n = 1`, unital, bijective).
pub fn inverse(net: &NetModel, rho: &Amplimorphism) -> Result<Amplimorphism> {
    let coeff = automorphism_coefficients(net, rho)?;
    let inv = checked_inverse(&coeff, net.tol)
        .ok_or_else(|| Error::Undefined(format!("`{}` is not bijective on the global algebra", rho.label)))?;
    let basis = net.global().basis();
    let values: Vec<Mat> = (0..basis.len())
        .map(|l| {
            let mut out = zeros(net.ambient_dim, net.ambient_dim);
            for (k, b) in basis.iter().enumerate() {
                out += b * inv[(k, l)];
            }
            out
        })
        .collect();
    let mut obj = Amplimorphism::new(net, format!("inv({})", rho.label), 1, values, rho.claimed_support.clone(), BTreeMap::new())?;
    let transporters = rho.transporters.iter().map(|(k, u)| (k.clone(), obj.apply(&u.adjoint()))).collect();
    obj.transporters = transporters;
    Ok(obj)
}

/// Matrix of `ρ` in the global basis, for `n = 1` unital objects.
pub fn automorphism_coefficients(net: &NetModel, rho: &Amplimorphism) -> Result<Mat> {
    if rho.multiplicity != 1 || dist(&rho.unit(), &eye(net.ambient_dim)) >= net.tol {
        return Err(Error::Undefined(format!("`{}` is not a unital endomorphism", rho.label)));
    }
    let basis = net.global().basis();
    let m = basis.len();
    let mut coeff = zeros(m, m);
    for (l, v) in rho.values.iter().enumerate() {
        for (k, c) in net.global().coefficients(v).into_iter().enumerate() {
            coeff[(k, l)] = c;
        }
    }
    Ok(coeff)
}

/// Outcome of the unitary search.
#[derive(Clone, Debug)]
pub struct Equivalence {
    pub unitary: Option<Mat>,
    pub space_dim: usize,
    pub tried: usize,
}

/// Deterministic sweep over coefficient vectors of `(ρ, σ)`; the polar part
/// of each candidate is accepted once it is a unitary intertwiner.
pub fn find_unitary_equivalence(net: &NetModel, rho: &Amplimorphism, sigma: &Amplimorphism) -> Equivalence {
    let space = intertwiner_space(net, rho, sigma);
    let dim = space.len();
    if dim == 0 {
        return Equivalence { unitary: None, space_dim: 0, tried: 0 };
    }
    let (ru, su) = (rho.unit(), sigma.unit());
    let budget = 10usize.saturating_pow(dim as u32).min(10_000);
    let candidates = coefficient_sweep(dim, budget);
    for (k, coeffs) in candidates.iter().enumerate() {
        let mut t = zeros(sigma.size(), rho.size());
        for (b, w) in space.iter().zip(coeffs) {
            t += b * *w;
        }
        let u = polar_isometry(&t, net.tol);
        if dist(&(u.adjoint() * &u), &ru) < net.tol
            && dist(&(&u * u.adjoint()), &su) < net.tol
            && intertwiner_defect(net, &u, rho, sigma) < net.tol
        {
            return Equivalence { unitary: Some(u), space_dim: dim, tried: k + 1 };
        }
    }
    Equivalence { unitary: None, space_dim: dim, tried: candidates.len() }
}

/// Unit basis vectors first, then seeded complex Gaussian-like points on the
/// unit sphere.
pub fn coefficient_sweep(dim: usize, budget: usize) -> Vec<Vec<C64>> {
    let mut out = Vec::with_capacity(budget);
    for k in 0..dim.min(budget) {
        let mut v = vec![real(0.0); dim];
        v[k] = real(1.0);
        out.push(v);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(0xC0EF_F1C1);
    while out.len() < budget {
        let v: Vec<C64> = (0..dim).map(|_| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).collect();
        let n = v.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
        if n > 1e-3 {
            out.push(v.into_iter().map(|x| x / n).collect());
        }
    }
    out
}

/// `x ⊗ 1_n` in block form.
pub fn amplify(x: &Mat, n: usize) -> Mat {
    kron(&eye(n), x)
}
