//! The presheaf side of the theory.
//!
//! An object `ρ` with transporters `U_a` extends to the commutants: on
//! `A(a)'` its component is `_aρ(X) = U_a* (X ⊗ 1) U_a`. From the extension
//! one restricts back to the net, builds presheaf-left inverses region by
//! region, and tests double faithfulness and homogeneity.
//!
//! Components are linear maps stored on the cached orthonormal basis of
//! `A(a)'`; applied to a matrix outside that algebra they act on its
//! orthogonal projection.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::algebra::ConcreteAlgebra;
use crate::error::{Error, Result};
use crate::exec;
use crate::left_inverse::{self, check_simple, compose, compress, convex, inverse_on_image, LeftInverse, ScalarFit};
use crate::linalg::{
    block, dist, eye, from_blocks, hermitian_eigen, kron, matrix_unit, min_eigenvalue, rank, real, superoperator,
    unvec, vec_of, zeros, Mat, Span,
};
use crate::net::{NetModel, PairDefect};
use crate::object::{fit_values, intertwiner_defect, power, tensor, Amplimorphism, Support};
use crate::statistics::{classify, Witness};

/// `A(a)'` and `A(a⊥)` for every region, computed once.
#[derive(Clone, Debug)]
pub struct Commutants {
    commutants: BTreeMap<String, ConcreteAlgebra>,
    complements: BTreeMap<String, ConcreteAlgebra>,
}

impl Commutants {
    pub fn new(net: &NetModel) -> Result<Self> {
        let regions = net.site.regions.clone();
        let comm = exec::map(&regions, |r| net.local_commutant(r));
        let compl = exec::map(&regions, |r| net.complement_algebra(r));
        let mut commutants = BTreeMap::new();
        let mut complements = BTreeMap::new();
        for ((r, c), k) in regions.iter().zip(comm).zip(compl) {
            commutants.insert(r.clone(), c?);
            complements.insert(r.clone(), k?);
        }
        Ok(Self { commutants, complements })
    }

    /// `A(a)'`.
    pub fn commutant(&self, a: &str) -> Result<&ConcreteAlgebra> {
        self.commutants.get(a).ok_or_else(|| Error::UnknownRegion(a.to_string()))
    }

    /// `A(a⊥)`.
    pub fn complement(&self, a: &str) -> Result<&ConcreteAlgebra> {
        self.complements.get(a).ok_or_else(|| Error::UnknownRegion(a.to_string()))
    }
}

/// One component `_aρ`, a linear map `A(a)' → M_{dim·n}`.
#[derive(Clone, Debug)]
pub struct Component {
    /// Images of the commutant basis, in basis order.
    pub images: Vec<Mat>,
    size: usize,
    superop: Mat,
}

impl Component {
    fn new(basis: &[Mat], images: Vec<Mat>, dim: usize, size: usize) -> Self {
        let superop = superoperator(basis, &images, dim * dim, size * size);
        Self { images, size, superop }
    }

    pub fn apply(&self, x: &Mat) -> Mat {
        unvec(&(&self.superop * vec_of(x)), self.size, self.size)
    }

    /// The component applied to each `dim × dim` block of `x`.
    pub fn apply_blocks(&self, x: &Mat, dim: usize) -> Mat {
        let s = self.size;
        from_blocks(x.nrows() / dim, x.ncols() / dim, s, s, |i, j| self.apply(&block(x, i, j, dim, dim)))
    }
}

/// A morphism of the presheaf `a ↦ A(a)'`.
#[derive(Clone, Debug)]
pub struct PresheafMorphism {
    pub label: String,
    pub multiplicity: usize,
    pub ambient_dim: usize,
    pub support: Support,
    pub components: BTreeMap<String, Component>,
    pub transporters: BTreeMap<String, Mat>,
}

impl PresheafMorphism {
    pub fn size(&self) -> usize {
        self.ambient_dim * self.multiplicity
    }

    pub fn component(&self, a: &str) -> Result<&Component> {
        self.components.get(a).ok_or_else(|| Error::UnknownRegion(a.to_string()))
    }

    pub fn apply(&self, a: &str, x: &Mat) -> Result<Mat> {
        Ok(self.component(a)?.apply(x))
    }
}

/// `_aρ(X) = U_a* (X ⊗ 1_n) U_a` on the basis of `A(a)'`.
pub fn extension_component(cache: &Commutants, rho: &Amplimorphism, a: &str) -> Result<Component> {
    let u = rho
        .transporters
        .get(a)
        .ok_or_else(|| Error::MissingTransporter { label: rho.label.clone(), region: a.to_string() })?;
    let ones = eye(rho.multiplicity);
    let basis = cache.commutant(a)?.basis();
    let images = basis.iter().map(|b| u.adjoint() * kron(&ones, b) * u).collect();
    Ok(Component::new(basis, images, rho.ambient_dim, rho.size()))
}

/// The extension functor.
pub fn extend(net: &NetModel, cache: &Commutants, rho: &Amplimorphism) -> Result<PresheafMorphism> {
    let regions = net.site.regions.clone();
    let comps = exec::map(&regions, |a| extension_component(cache, rho, a));
    let mut components = BTreeMap::new();
    for (a, c) in regions.iter().zip(comps) {
        components.insert(a.clone(), c?);
    }
    Ok(PresheafMorphism {
        label: rho.label.clone(),
        multiplicity: rho.multiplicity,
        ambient_dim: rho.ambient_dim,
        support: rho.claimed_support.clone(),
        components,
        transporters: rho.transporters.clone(),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExtensionReport {
    pub label: String,
    pub tolerance: f64,
    /// Worst `|_aρ(1) - ρ(1)|`.
    pub unit: f64,
    pub homomorphism: f64,
    pub adjoint: f64,
    /// `a ⊆ b`: `_aρ` and `_bρ` on `A(b)'`.
    pub compatibility: Vec<PairDefect>,
    /// `_oρ(X) - (X ⊗ 1) ρ(1)` on `A(o)'` at the support `o`.
    pub localization: Option<f64>,
    /// For `a ⊥ o`: entries of `_aρ(A(a)')` outside `A(a)'`.
    pub commutant_values: BTreeMap<String, f64>,
    /// `_aρ` against `ρ` on `A(a⊥)`.
    pub agrees_with_object: BTreeMap<String, f64>,
    /// Worst `|_aρ(X) - _bρ(X)|` for `X ∈ A(c)`, `c ⊥ a, b`.
    pub spacelike_agreement: f64,
    pub holds: bool,
}

fn blocks_outside(alg: &ConcreteAlgebra, x: &Mat, dim: usize) -> f64 {
    let mut worst: f64 = 0.0;
    for i in 0..x.nrows() / dim {
        for j in 0..x.ncols() / dim {
            worst = worst.max(alg.residual(&block(x, i, j, dim, dim)));
        }
    }
    worst
}

pub fn check_extension(
    net: &NetModel,
    cache: &Commutants,
    rho: &Amplimorphism,
    hat: &PresheafMorphism,
) -> Result<ExtensionReport> {
    let tol = net.tol;
    let d = net.ambient_dim;
    let regions = net.site.regions.clone();
    let unit = rho.unit();
    let ones = eye(rho.multiplicity);

    let per_region = exec::map(&regions, |a| -> Result<(f64, f64, f64)> {
        let comp = hat.component(a)?;
        let basis = cache.commutant(a)?.basis();
        let u = dist(&comp.apply(&eye(d)), &unit);
        let mut hom: f64 = 0.0;
        let mut adj: f64 = 0.0;
        for (x, fx) in basis.iter().zip(&comp.images) {
            adj = adj.max(dist(&comp.apply(&x.adjoint()), &fx.adjoint()));
            for (y, fy) in basis.iter().zip(&comp.images) {
                hom = hom.max(dist(&comp.apply(&(x * y)), &(fx * fy)));
            }
        }
        Ok((u, hom, adj))
    });
    let (mut unit_defect, mut homomorphism, mut adjoint) = (0.0f64, 0.0f64, 0.0f64);
    for r in per_region {
        let (u, h, a) = r?;
        unit_defect = unit_defect.max(u);
        homomorphism = homomorphism.max(h);
        adjoint = adjoint.max(a);
    }

    let mut compatibility = Vec::new();
    for (a, b) in &net.site.leq {
        if a == b {
            continue;
        }
        let (ca, cb) = (hat.component(a)?, hat.component(b)?);
        let worst = cache.commutant(b)?.basis().iter().map(|x| dist(&ca.apply(x), &cb.apply(x))).fold(0.0, f64::max);
        compatibility.push(PairDefect { first: a.clone(), second: b.clone(), defect: worst });
    }

    let localization = match &hat.support {
        Support::Region(o) => {
            let comp = hat.component(o)?;
            Some(
                cache
                    .commutant(o)?
                    .basis()
                    .iter()
                    .map(|x| dist(&comp.apply(x), &(kron(&ones, x) * &unit)))
                    .fold(0.0, f64::max),
            )
        }
        _ => None,
    };

    let mut commutant_values = BTreeMap::new();
    for a in hat.support.spacelike_regions(net) {
        let alg = cache.commutant(&a)?;
        let comp = hat.component(&a)?;
        let worst = comp.images.iter().map(|v| blocks_outside(alg, v, d)).fold(0.0, f64::max);
        commutant_values.insert(a, worst);
    }

    let mut agrees_with_object = BTreeMap::new();
    for a in &regions {
        let comp = hat.component(a)?;
        let worst =
            cache.complement(a)?.basis().iter().map(|x| dist(&comp.apply(x), &rho.apply(x))).fold(0.0, f64::max);
        agrees_with_object.insert(a.clone(), worst);
    }

    let mut spacelike_agreement: f64 = 0.0;
    for c in &regions {
        let around = net.site.spacelike_complement(c)?;
        for a in &around {
            for b in &around {
                if a >= b {
                    continue;
                }
                let (ca, cb) = (hat.component(a)?, hat.component(b)?);
                for x in net.algebra(c)?.basis() {
                    spacelike_agreement = spacelike_agreement.max(dist(&ca.apply(x), &cb.apply(x)));
                }
            }
        }
    }

    let holds = unit_defect < tol
        && homomorphism < tol
        && adjoint < tol
        && compatibility.iter().all(|p| p.defect < tol)
        && localization.is_none_or(|l| l < tol)
        && commutant_values.values().all(|v| *v < tol)
        && agrees_with_object.values().all(|v| *v < tol)
        && spacelike_agreement < tol;
    Ok(ExtensionReport {
        label: hat.label.clone(),
        tolerance: tol,
        unit: unit_defect,
        homomorphism,
        adjoint,
        compatibility,
        localization,
        commutant_values,
        agrees_with_object,
        spacelike_agreement,
        holds,
    })
}

/// Worst difference of two presheaf morphisms over every component.
pub fn presheaf_distance(a: &PresheafMorphism, b: &PresheafMorphism) -> f64 {
    let mut worst: f64 = 0.0;
    for (r, ca) in &a.components {
        match b.components.get(r) {
            Some(cb) if ca.images.len() == cb.images.len() => {
                for (x, y) in ca.images.iter().zip(&cb.images) {
                    worst = worst.max(if x.shape() == y.shape() { dist(x, y) } else { f64::INFINITY });
                }
            }
            _ => return f64::INFINITY,
        }
    }
    worst
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RestrictionReport {
    pub label: String,
    /// Worst disagreement between the choices `b ⊥ a` used to evaluate on `A(a)`.
    pub choice_discrepancy: f64,
    /// Dimension reached by products of local elements.
    pub closure_dim: usize,
    /// Residual of expressing the global basis through those products.
    pub fit_residual: f64,
}

/// The restriction functor: `ρ(A) = _bρ(A)` for `A ∈ A(a)`, `b ⊥ a`, extended
/// to the global algebra through products of local elements.
pub fn restrict(net: &NetModel, hat: &PresheafMorphism) -> Result<(Amplimorphism, RestrictionReport)> {
    let s = hat.size();
    let mut choice_discrepancy: f64 = 0.0;
    let mut seeds: Vec<(Mat, Mat)> = Vec::new();
    for a in &net.site.regions {
        let comp = net.site.spacelike_complement(a)?;
        let first = comp.first().ok_or_else(|| Error::EmptyComplement(a.clone()))?;
        for x in net.algebra(a)?.basis() {
            let img = hat.apply(first, x)?;
            for b in &comp[1..] {
                choice_discrepancy = choice_discrepancy.max(dist(&hat.apply(b, x)?, &img));
            }
            seeds.push((x.clone(), img));
        }
    }
    let fit = fit_values(net, &seeds, s)?;
    let obj = Amplimorphism::new(net, hat.label.clone(), hat.multiplicity, fit.values, hat.support.clone(), hat.transporters.clone())?;
    let report = RestrictionReport {
        label: hat.label.clone(),
        choice_discrepancy,
        closure_dim: fit.closure_dim,
        fit_residual: fit.residual,
    };
    Ok((obj, report))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RoundTrip {
    pub label: String,
    /// `|R(E(ρ)) - ρ|` over the global basis.
    pub object: f64,
    /// `|E(R(ρ̂)) - ρ̂|` over every component.
    pub presheaf: f64,
    pub restriction: RestrictionReport,
}

pub fn round_trip(net: &NetModel, cache: &Commutants, rho: &Amplimorphism) -> Result<RoundTrip> {
    let hat = extend(net, cache, rho)?;
    let (back, restriction) = restrict(net, &hat)?;
    let object = rho.values.iter().zip(&back.values).map(|(x, y)| dist(x, y)).fold(0.0, f64::max);
    let again = extend(net, cache, &back)?;
    let presheaf = presheaf_distance(&hat, &again);
    Ok(RoundTrip { label: rho.label.clone(), object, presheaf, restriction })
}

/// Extension of `ρσ`.
pub fn presheaf_tensor(net: &NetModel, cache: &Commutants, rho: &Amplimorphism, sigma: &Amplimorphism) -> Result<PresheafMorphism> {
    extend(net, cache, &tensor(net, rho, sigma)?)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TensorIdentityReport {
    pub label: String,
    /// Number of `(a, b, c)` with `c ⊥ a` and `c ⊥ b`.
    pub cases: usize,
    pub worst: f64,
    pub worst_case: Option<(String, String, String)>,
}

/// `_c(ρ_a σ_b)(X) = _cρ_a(_cσ_b(X))` for the copies transported to `a` and
/// `b` and every `c` spacelike to both.
pub fn tensor_identity(net: &NetModel, cache: &Commutants, rho: &Amplimorphism, sigma: &Amplimorphism) -> Result<TensorIdentityReport> {
    let d = net.ambient_dim;
    let regions = net.site.regions.clone();
    let pairs: Vec<(String, String)> =
        regions.iter().flat_map(|a| regions.iter().map(move |b| (a.clone(), b.clone()))).collect();
    let results = exec::map(&pairs, |(a, b)| -> Result<Vec<(String, f64)>> {
        let ra = rho.transported(net, a)?;
        let sb = sigma.transported(net, b)?;
        let prod = tensor(net, &ra, &sb)?;
        let mut out = Vec::new();
        for c in net.site.common_complement(&[a.as_str(), b.as_str()])? {
            let lhs = extension_component(cache, &prod, &c)?;
            let cr = extension_component(cache, &ra, &c)?;
            let cs = extension_component(cache, &sb, &c)?;
            let worst = cache
                .commutant(&c)?
                .basis()
                .iter()
                .zip(&lhs.images)
                .map(|(x, l)| dist(l, &cr.apply_blocks(&cs.apply(x), d)))
                .fold(0.0, f64::max);
            out.push((c, worst));
        }
        Ok(out)
    });
    let mut report = TensorIdentityReport { label: format!("{}*{}", rho.label, sigma.label), cases: 0, worst: 0.0, worst_case: None };
    for ((a, b), r) in pairs.iter().zip(results) {
        for (c, w) in r? {
            report.cases += 1;
            if w > report.worst || report.worst_case.is_none() {
                report.worst = report.worst.max(w);
                report.worst_case = Some((a.clone(), b.clone(), c));
            }
        }
    }
    Ok(report)
}

/// `z_ab = U_a U_b*` for every ordered pair of regions.
#[derive(Clone, Debug)]
pub struct Cocycle {
    pub label: String,
    pub values: BTreeMap<(String, String), Mat>,
}

pub fn cocycle(net: &NetModel, rho: &Amplimorphism) -> Result<Cocycle> {
    let mut values = BTreeMap::new();
    for a in &net.site.regions {
        for b in &net.site.regions {
            let ua = transporter(rho, a)?;
            let ub = transporter(rho, b)?;
            values.insert((a.clone(), b.clone()), ua * ub.adjoint());
        }
    }
    Ok(Cocycle { label: rho.label.clone(), values })
}

fn transporter<'a>(rho: &'a Amplimorphism, a: &str) -> Result<&'a Mat> {
    rho.transporters.get(a).ok_or_else(|| Error::MissingTransporter { label: rho.label.clone(), region: a.to_string() })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CocycleReport {
    pub label: String,
    pub tolerance: f64,
    /// Per pair `(a, b)`: worst `|z_ab z_bc - z_ac|` over `c`.
    pub identity: Vec<PairDefect>,
    /// `|z_aa - U_a U_a*|`.
    pub diagonal: BTreeMap<String, f64>,
    /// Per pair: entries of `z_ab` outside `A(d)`, worst over regions `d ⊇ a ∪ b`.
    /// Pairs with no such region are omitted.
    pub locality: Vec<PairDefect>,
    /// `|ρ(A) - U_a* (A ⊗ 1) U_a|` for `A ∈ A(b)`, `b ⊥ a`, worst per `a`.
    pub spacelike: BTreeMap<String, f64>,
    pub worst: f64,
    pub holds: bool,
}

pub fn check_cocycle(net: &NetModel, rho: &Amplimorphism) -> Result<CocycleReport> {
    let tol = net.tol;
    let z = cocycle(net, rho)?;
    let regions = &net.site.regions;
    let mut identity = Vec::new();
    let mut diagonal = BTreeMap::new();
    let mut locality = Vec::new();
    for a in regions {
        for b in regions {
            let zab = &z.values[&(a.clone(), b.clone())];
            let mut worst: f64 = 0.0;
            for c in regions {
                let lhs = zab * &z.values[&(b.clone(), c.clone())];
                worst = worst.max(dist(&lhs, &z.values[&(a.clone(), c.clone())]));
            }
            identity.push(PairDefect { first: a.clone(), second: b.clone(), defect: worst });
            let mut entries: Option<f64> = None;
            for dreg in regions {
                if net.site.is_leq(a, dreg) && net.site.is_leq(b, dreg) {
                    let r = blocks_outside(net.algebra(dreg)?, zab, net.ambient_dim);
                    entries = Some(entries.map_or(r, |e: f64| e.max(r)));
                }
            }
            if let Some(e) = entries {
                locality.push(PairDefect { first: a.clone(), second: b.clone(), defect: e });
            }
        }
        let ua = transporter(rho, a)?;
        diagonal.insert(a.clone(), dist(&z.values[&(a.clone(), a.clone())], &(ua * ua.adjoint())));
    }
    let ones = eye(rho.multiplicity);
    let mut spacelike = BTreeMap::new();
    for a in regions {
        let ua = transporter(rho, a)?;
        let mut worst: f64 = 0.0;
        for b in net.site.spacelike_complement(a)? {
            for x in net.algebra(&b)?.basis() {
                worst = worst.max(dist(&rho.apply(x), &(ua.adjoint() * kron(&ones, x) * ua)));
            }
        }
        spacelike.insert(a.clone(), worst);
    }
    let worst = identity
        .iter()
        .chain(&locality)
        .map(|p| p.defect)
        .chain(diagonal.values().cloned())
        .chain(spacelike.values().cloned())
        .fold(0.0, f64::max);
    Ok(CocycleReport { label: rho.label.clone(), tolerance: tol, identity, diagonal, locality, spacelike, worst, holds: worst < tol })
}

/// Two transporter families for the same object: `u_a = Ū_a U_a*` must lie in
/// `(τ_a, τ̄_a)` and relate the cocycles by `z̄_ab = u_a z_ab u_b*`.
pub fn cohomology_defect(net: &NetModel, rho: &Amplimorphism, alt: &Amplimorphism) -> Result<f64> {
    let z = cocycle(net, rho)?;
    let zb = cocycle(net, alt)?;
    let mut u = BTreeMap::new();
    let mut worst: f64 = 0.0;
    for a in &net.site.regions {
        let ua = transporter(alt, a)? * transporter(rho, a)?.adjoint();
        let tau = rho.transported(net, a)?;
        let tau_bar = alt.transported(net, a)?;
        worst = worst.max(intertwiner_defect(net, &ua, &tau, &tau_bar));
        u.insert(a.clone(), ua);
    }
    for ((a, b), zab) in &z.values {
        let lhs = &zb.values[&(a.clone(), b.clone())];
        worst = worst.max(dist(lhs, &(&u[a] * zab * u[b].adjoint())));
    }
    Ok(worst)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FaithfulnessReport {
    pub label: String,
    pub tolerance: f64,
    pub kernel_dim: usize,
    pub faithful: bool,
    /// Kernel dimension of `_aρ` on `A(a)'`.
    pub commutant_kernels: BTreeMap<String, usize>,
    pub by_kernel: bool,
    /// `|z - 1|` for the central support `z` of `σ_o(1)` in `A(o) ⊗ M_n`;
    /// `None` when `σ_o(1)` is not in that algebra.
    pub central_supports: BTreeMap<String, Option<f64>>,
    pub by_central_support: bool,
    pub consistent: bool,
}

/// `A(o) ⊗ M_n` acting on `C^n ⊗ H`.
pub fn amplified_local(net: &NetModel, o: &str, n: usize) -> Result<ConcreteAlgebra> {
    let alg = net.algebra(o)?;
    let basis = (0..n)
        .flat_map(|i| (0..n).map(move |j| (i, j)))
        .flat_map(|(i, j)| alg.basis().iter().map(move |b| kron(&matrix_unit(n, i, j), b)))
        .collect();
    Ok(ConcreteAlgebra::from_orthonormal(n * net.ambient_dim, basis))
}

pub fn check_double_faithfulness(net: &NetModel, cache: &Commutants, rho: &Amplimorphism) -> Result<FaithfulnessReport> {
    let tol = net.tol;
    let hat = extend(net, cache, rho)?;
    let mut commutant_kernels = BTreeMap::new();
    for (a, comp) in &hat.components {
        let s = rho.size();
        let mut m = zeros(s * s, comp.images.len());
        for (k, v) in comp.images.iter().enumerate() {
            m.set_column(k, &vec_of(v));
        }
        commutant_kernels.insert(a.clone(), comp.images.len() - rank(&m, tol));
    }
    let by_kernel = commutant_kernels.values().all(|k| *k == 0);
    let mut central_supports = BTreeMap::new();
    for o in &net.site.regions {
        let sigma = rho.transported(net, o)?;
        let alg = amplified_local(net, o, rho.multiplicity)?;
        let defect = alg.central_support(&sigma.unit(), tol).ok().map(|z| dist(&z, &eye(rho.size())));
        central_supports.insert(o.clone(), defect);
    }
    let by_central_support = central_supports.values().all(|d| d.is_some_and(|d| d < tol));
    let kernel_dim = rho.kernel_dim(net);
    Ok(FaithfulnessReport {
        label: rho.label.clone(),
        tolerance: tol,
        kernel_dim,
        faithful: kernel_dim == 0,
        commutant_kernels,
        by_kernel,
        central_supports,
        by_central_support,
        consistent: by_kernel == by_central_support,
    })
}

/// Components `_aφ` for every `a ⊥ o`, each a map on
/// `(A(a)' ⊗ M_n)_{ρ(1)}` with values in `A(a)'`.
#[derive(Clone, Debug)]
pub struct PresheafLeftInverse {
    pub label: String,
    pub support: String,
    pub multiplicity: usize,
    pub components: BTreeMap<String, LeftInverse>,
}

/// Region `o` with `ρ ∈ Δ_t(o)`. The unit is localized everywhere and is
/// anchored at the first region.
pub fn localization_region(net: &NetModel, rho: &Amplimorphism) -> Result<String> {
    match &rho.claimed_support {
        Support::Region(o) => Ok(o.clone()),
        Support::Everywhere => net.site.regions.first().cloned().ok_or_else(|| Error::Undefined("empty site".into())),
        Support::Unlocalized => {
            Err(Error::Undefined(format!("`{}` is not localized in a region of the site; transport it first", rho.label)))
        }
    }
}

fn build_components<F>(net: &NetModel, rho: &Amplimorphism, label: &str, f: F) -> Result<PresheafLeftInverse>
where
    F: Fn(&str) -> Result<LeftInverse> + Sync + Send,
{
    let o = localization_region(net, rho)?;
    let regions = net.site.spacelike_complement(&o)?;
    let built = exec::map(&regions, |a| f(a));
    let mut components = BTreeMap::new();
    for (a, c) in regions.iter().zip(built) {
        components.insert(a.clone(), c?);
    }
    Ok(PresheafLeftInverse { label: label.to_string(), support: o, multiplicity: rho.multiplicity, components })
}

/// `_aγ^{-1}` on the image of each component, for a simple `γ`.
pub fn simple_route(net: &NetModel, cache: &Commutants, gamma: &Amplimorphism) -> Result<PresheafLeftInverse> {
    build_components(net, gamma, &format!("inv^({})", gamma.label), |a| {
        let comp = extension_component(cache, gamma, a)?;
        inverse_on_image(
            format!("inv_{a}({})", gamma.label),
            net.ambient_dim,
            gamma.multiplicity,
            cache.commutant(a)?.basis(),
            &comp.images,
            net.tol,
        )
        .map_err(|_| Error::Undefined(format!("_{a}({}) is not injective on A({a})'", gamma.label)))
    })
}

/// `_aφ(X) = _aγ^{-1}(V* _aρ^{d-1}(X) V)` from a witness `(d, γ, V)`.
pub fn finite_stats_route(net: &NetModel, cache: &Commutants, rho: &Amplimorphism, w: &Witness) -> Result<PresheafLeftInverse> {
    let d = net.ambient_dim;
    let gamma_inv = simple_route(net, cache, &w.gamma)?;
    let lower = if w.d > 1 { Some(power(net, rho, w.d - 1)?) } else { None };
    let label = format!("fs^({})", rho.label);
    build_components(net, rho, &label, |a| {
        let g = gamma_inv
            .components
            .get(a)
            .ok_or_else(|| Error::Undefined(format!("witness object has no component at `{a}`")))?;
        let lifted = match &lower {
            Some(p) => Some(extension_component(cache, p, a)?),
            None => None,
        };
        Ok(LeftInverse::from_fn(format!("fs_{a}({})", rho.label), d, rho.multiplicity, |x| {
            let y = match &lifted {
                Some(c) => c.apply_blocks(x, d),
                None => x.clone(),
            };
            g.apply(&(w.isometry.adjoint() * y * &w.isometry))
        }))
    })
}

/// `_aφ(X) = (R*R)^{-1} R* _aρ̄(X) R` for `R ∈ (ι, ρ̄ρ)`.
pub fn conjugate_route(
    net: &NetModel,
    cache: &Commutants,
    rho: &Amplimorphism,
    rho_bar: &Amplimorphism,
    r: &Mat,
) -> Result<PresheafLeftInverse> {
    let d = net.ambient_dim;
    let norm = ScalarFit::of(&(r.adjoint() * r), &eye(d));
    if norm.value().norm() < net.tol {
        return Err(Error::Undefined("R*R vanishes".into()));
    }
    let scale = real(1.0) / norm.value();
    build_components(net, rho, &format!("conj^({})", rho.label), |a| {
        let c = extension_component(cache, rho_bar, a)?;
        Ok(LeftInverse::from_fn(format!("conj_{a}({})", rho.label), d, rho.multiplicity, |x| {
            r.adjoint() * c.apply_blocks(x, d) * r * scale
        }))
    })
}

/// Average of presheaf-left inverses of the summands `E_k ρ E_k`.
pub fn decomposed_route(
    net: &NetModel,
    rho: &Amplimorphism,
    parts: &[(Mat, PresheafLeftInverse)],
) -> Result<PresheafLeftInverse> {
    if parts.is_empty() {
        return Err(Error::Undefined("no summands".into()));
    }
    let w = 1.0 / parts.len() as f64;
    build_components(net, rho, &format!("avg^({})", rho.label), |a| {
        let comps: Vec<&LeftInverse> = parts
            .iter()
            .map(|(_, p)| p.components.get(a).ok_or_else(|| Error::Undefined(format!("summand has no component at `{a}`"))))
            .collect::<Result<_>>()?;
        Ok(LeftInverse::from_fn(format!("avg_{a}({})", rho.label), net.ambient_dim, rho.multiplicity, |x| {
            let mut out = zeros(net.ambient_dim, net.ambient_dim);
            for ((e, _), c) in parts.iter().zip(&comps) {
                out += c.apply(&(e * x * e)) * real(w);
            }
            out
        }))
    })
}

fn zip_components<F>(first: &PresheafLeftInverse, second: &PresheafLeftInverse, label: String, f: F) -> Result<PresheafLeftInverse>
where
    F: Fn(&LeftInverse, &LeftInverse) -> Result<LeftInverse>,
{
    if first.support != second.support {
        return Err(Error::Undefined(format!("supports `{}` and `{}` differ", first.support, second.support)));
    }
    let mut components = BTreeMap::new();
    let mut multiplicity = 0;
    for (a, c1) in &first.components {
        let c2 = second.components.get(a).ok_or_else(|| Error::UnknownRegion(a.clone()))?;
        let c = f(c1, c2)?;
        multiplicity = c.multiplicity;
        components.insert(a.clone(), c);
    }
    Ok(PresheafLeftInverse { label, support: first.support.clone(), multiplicity, components })
}

/// Componentwise composition: a presheaf-left inverse of `ρ2ρ1` from those
/// of `ρ1` (`outer`) and `ρ2` (`inner`).
pub fn compose_presheaf(outer: &PresheafLeftInverse, inner: &PresheafLeftInverse) -> Result<PresheafLeftInverse> {
    zip_components(outer, inner, format!("{}.{}", outer.label, inner.label), |a, b| Ok(compose(a, b)))
}

/// Componentwise convex combination through injections `W_i ∈ (ρ_i, α)`.
pub fn convex_presheaf(
    s: f64,
    first: &PresheafLeftInverse,
    second: &PresheafLeftInverse,
    w1: &Mat,
    w2: &Mat,
) -> Result<PresheafLeftInverse> {
    zip_components(first, second, format!("{}+{}", first.label, second.label), |a, b| convex(s, a, b, w1, w2))
}

/// Componentwise compression to the subobject cut out by `e = v v*`.
pub fn compress_presheaf(phi: &PresheafLeftInverse, e: &Mat, v: &Mat, tol: f64) -> Result<PresheafLeftInverse> {
    let mut components = BTreeMap::new();
    let mut multiplicity = phi.multiplicity;
    for (a, c) in &phi.components {
        let out = compress(c, e, v, tol)?;
        multiplicity = out.multiplicity;
        components.insert(a.clone(), out);
    }
    Ok(PresheafLeftInverse { label: format!("{}|E", phi.label), support: phi.support.clone(), multiplicity, components })
}

/// Orthonormal basis of `(B ⊗ M_n)_{ρ(1)}` for an algebra `B`.
pub fn reduced_span(alg: &ConcreteAlgebra, rho: &Amplimorphism, tol: f64) -> Span {
    let n = rho.multiplicity;
    let unit = rho.unit();
    let mut items = Vec::new();
    for b in alg.basis() {
        for i in 0..n {
            for j in 0..n {
                items.push(&unit * kron(&matrix_unit(n, i, j), b) * &unit);
            }
        }
    }
    Span::from_matrices(rho.size(), rho.size(), &items, tol)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegionLeftInverseCheck {
    pub normalization: f64,
    pub module: f64,
    pub values_in_commutant: f64,
    pub schwarz_min_eigenvalue: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PresheafLeftInverseReport {
    pub label: String,
    pub support: String,
    pub tolerance: f64,
    pub regions: BTreeMap<String, RegionLeftInverseCheck>,
    /// `a ⊆ b`: `_aφ` against `_bφ` on `(A(b)' ⊗ M_n)_{ρ(1)}`.
    pub restriction: Vec<PairDefect>,
    pub valid: bool,
}

pub fn check_presheaf_left_inverse(
    net: &NetModel,
    cache: &Commutants,
    rho: &Amplimorphism,
    phi: &PresheafLeftInverse,
) -> Result<PresheafLeftInverseReport> {
    let tol = net.tol;
    let d = net.ambient_dim;
    let unit = rho.unit();
    let keys: Vec<String> = phi.components.keys().cloned().collect();
    let checks = exec::map(&keys, |a| -> Result<RegionLeftInverseCheck> {
        let c = &phi.components[a];
        let alg = cache.commutant(a)?;
        let ext = extension_component(cache, rho, a)?;
        let reduced = reduced_span(alg, rho, tol);
        let normalization = dist(&c.apply(&unit), &eye(d));
        let mut module: f64 = 0.0;
        let mut values: f64 = 0.0;
        let mut schwarz = f64::INFINITY;
        for b in reduced.basis() {
            let pb = c.apply(b);
            values = values.max(alg.residual(&pb));
            let gap = c.apply(&(b.adjoint() * b)) - pb.adjoint() * &pb;
            schwarz = schwarz.min(min_eigenvalue(&((&gap + gap.adjoint()) * real(0.5))));
            for (x, rx) in alg.basis().iter().zip(&ext.images) {
                module = module.max(dist(&c.apply(&(b * rx)), &(&pb * x)));
            }
        }
        Ok(RegionLeftInverseCheck { normalization, module, values_in_commutant: values, schwarz_min_eigenvalue: schwarz })
    });
    let mut regions = BTreeMap::new();
    for (a, r) in keys.iter().zip(checks) {
        regions.insert(a.clone(), r?);
    }
    let mut restriction = Vec::new();
    for (a, b) in &net.site.leq {
        if a == b {
            continue;
        }
        if let (Some(ca), Some(cb)) = (phi.components.get(a), phi.components.get(b)) {
            let reduced = reduced_span(cache.commutant(b)?, rho, tol);
            let worst = reduced.basis().iter().map(|x| dist(&ca.apply(x), &cb.apply(x))).fold(0.0, f64::max);
            restriction.push(PairDefect { first: a.clone(), second: b.clone(), defect: worst });
        }
    }
    let valid = !regions.is_empty()
        && regions.values().all(|r| {
            r.normalization < tol && r.module < tol && r.values_in_commutant < tol && r.schwarz_min_eigenvalue > -tol
        })
        && restriction.iter().all(|p| p.defect < tol);
    Ok(PresheafLeftInverseReport { label: phi.label.clone(), support: phi.support.clone(), tolerance: tol, regions, restriction, valid })
}

/// The net-left inverse agreeing with `_bφ` on every `(A(a) ⊗ M_n)_{ρ(1)}`,
/// `b ⊥ a, o`, fitted by least squares over `B ρ(W) ↦ _bφ(B) W`. Returns the
/// map and the worst fit residual.
pub fn associated_left_inverse(
    net: &NetModel,
    rho: &Amplimorphism,
    phi: &PresheafLeftInverse,
) -> Result<(LeftInverse, f64)> {
    let tol = net.tol;
    let d = net.ambient_dim;
    let s = rho.size();
    let mut samples: Vec<(String, Mat)> = Vec::new();
    for a in &net.site.regions {
        let Some(b) = net.site.spacelike_complement(a)?.into_iter().find(|b| phi.components.contains_key(b)) else {
            continue;
        };
        for x in reduced_span(net.algebra(a)?, rho, tol).basis() {
            samples.push((b.clone(), x.clone()));
        }
    }
    if samples.is_empty() {
        return Err(Error::Undefined("no region admits a spacelike component".into()));
    }
    let words = net.global().basis();
    let word_images: Vec<Mat> = words.iter().map(|w| rho.apply(w)).collect();
    let mut gram = zeros(s * s, s * s);
    let mut cross = zeros(d * d, s * s);
    for (b, x) in &samples {
        let fx = phi.components[b].apply(x);
        for (w, rw) in words.iter().zip(&word_images) {
            let input = vec_of(&(x * rw));
            let output = vec_of(&(&fx * w));
            gram += &input * input.adjoint();
            cross += &output * input.adjoint();
        }
    }
    let (vals, vecs) = hermitian_eigen(&gram);
    let mut pinv = zeros(s * s, s * s);
    for (k, v) in vals.iter().enumerate() {
        if *v > tol {
            pinv += vecs.column(k) * vecs.column(k).adjoint() * real(1.0 / v);
        }
    }
    let map = cross * pinv;
    let li = LeftInverse::from_matrix(format!("l({})", phi.label), d, rho.multiplicity, map)?;
    let mut residual: f64 = 0.0;
    for (b, x) in &samples {
        let fx = phi.components[b].apply(x);
        for (w, rw) in words.iter().zip(&word_images) {
            residual = residual.max(dist(&li.apply(&(x * rw)), &(&fx * w)));
        }
    }
    Ok((li, residual))
}

/// Worst difference of two left inverses of `ρ` on `(A ⊗ M_n)_{ρ(1)}`.
pub fn left_inverse_distance(net: &NetModel, rho: &Amplimorphism, a: &LeftInverse, b: &LeftInverse) -> f64 {
    left_inverse::reduced_algebra(net, rho).basis().iter().map(|x| dist(&a.apply(x), &b.apply(x))).fold(0.0, f64::max)
}

/// Build some presheaf-left inverse of `ρ ∈ Δ_t(o)`: the simple route when
/// `ρ` is simple, the witness route when irreducible with finite statistics,
/// and the average over summands when reducible.
pub fn presheaf_left_inverse(
    net: &NetModel,
    cache: &Commutants,
    rho: &Amplimorphism,
    dmax: usize,
) -> Result<(PresheafLeftInverse, String)> {
    if check_simple(net, rho, None).map(|r| r.sign.is_some()).unwrap_or(false) {
        return Ok((simple_route(net, cache, rho)?, "simple".into()));
    }
    let c = classify(net, rho, None, dmax)?;
    if c.summands.len() == 1 {
        return match &c.witnesses[0] {
            Some(w) => Ok((finite_stats_route(net, cache, rho, w)?, format!("finite statistics, d = {}", w.d))),
            None => Err(Error::Undefined(format!("`{}`: no finite-statistics witness for d ≤ {dmax}", rho.label))),
        };
    }
    let mut parts = Vec::new();
    for s in &c.summands {
        let (p, _) = presheaf_left_inverse(net, cache, &s.object, dmax)?;
        parts.push((s.projection.clone(), p));
    }
    Ok((decomposed_route(net, rho, &parts)?, format!("average over {} summands", parts.len())))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegionOutcome {
    pub region: String,
    pub route: Option<String>,
    pub valid: bool,
    pub reason: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HomogeneityReport {
    pub label: String,
    pub regions: Vec<RegionOutcome>,
    pub failing: Vec<String>,
    pub homogeneous: bool,
}

/// For every region `a`, transport `ρ` into `a` and build a presheaf-left
/// inverse of the copy as an element of `Δ_t(a)`.
pub fn check_homogeneous(net: &NetModel, cache: &Commutants, rho: &Amplimorphism, dmax: usize) -> Result<HomogeneityReport> {
    let regions = net.site.regions.clone();
    let outcomes = exec::map(&regions, |a| {
        let attempt = || -> Result<(String, bool, Option<String>)> {
            let sigma = rho.transported(net, a)?;
            let (phi, route) = presheaf_left_inverse(net, cache, &sigma, dmax)?;
            let report = check_presheaf_left_inverse(net, cache, &sigma, &phi)?;
            let reason = (!report.valid).then(|| "constructed maps fail the presheaf-left-inverse checks".to_string());
            Ok((route, report.valid, reason))
        };
        match attempt() {
            Ok((route, valid, reason)) => RegionOutcome { region: a.clone(), route: Some(route), valid, reason },
            Err(e) => RegionOutcome { region: a.clone(), route: None, valid: false, reason: Some(e.to_string()) },
        }
    });
    let failing: Vec<String> = outcomes.iter().filter(|o| !o.valid).map(|o| o.region.clone()).collect();
    Ok(HomogeneityReport { label: rho.label.clone(), homogeneous: failing.is_empty(), regions: outcomes, failing })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SummandMembership {
    pub label: String,
    pub finite: bool,
    pub d: Option<usize>,
    pub witness_doubly_faithful: Option<bool>,
    pub homogeneous: bool,
    pub member: bool,
    /// Irreducible summands: membership agrees with "homogeneous and finite".
    pub characterisation_agrees: bool,
    pub evidence: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MembershipReport {
    pub label: String,
    pub tolerance: f64,
    pub dmax: usize,
    pub statistics: crate::statistics::StatisticsReport,
    pub summands: Vec<SummandMembership>,
    pub member: bool,
}

/// Membership in the relevant subcategory, summand by summand.
pub fn check_relevant_membership(net: &NetModel, cache: &Commutants, rho: &Amplimorphism, dmax: usize) -> Result<MembershipReport> {
    let c = classify(net, rho, None, dmax)?;
    let mut summands = Vec::new();
    for ((s, w), sr) in c.summands.iter().zip(&c.witnesses).zip(&c.report.summands) {
        let mut evidence = Vec::new();
        let finite = w.is_some();
        match (&sr.lambda, sr.infinite) {
            (Some(l), false) => evidence.push(format!("λ = {:.12} (residual {:.1e})", l.re, l.residual)),
            (_, true) => evidence.push("λ = 0: infinite statistics".into()),
            _ => evidence.push("no left inverse for λ".into()),
        }
        let witness_doubly_faithful = match w {
            Some(w) => {
                let f = check_double_faithfulness(net, cache, &w.gamma)?;
                evidence.push(format!(
                    "witness d = {}: γ doubly faithful by kernel {}, by central support {}",
                    w.d, f.by_kernel, f.by_central_support
                ));
                Some(f.by_kernel && f.by_central_support)
            }
            None => {
                evidence.push(sr.note.clone().unwrap_or_else(|| "no witness".into()));
                None
            }
        };
        if witness_doubly_faithful == Some(false) {
            evidence.push("γ not doubly faithful".into());
        }
        let hom = check_homogeneous(net, cache, &s.object, dmax)?;
        if !hom.homogeneous {
            evidence.push(format!("not homogeneous: failing regions {:?}", hom.failing));
        }
        let member = finite && witness_doubly_faithful == Some(true);
        let characterisation_agrees = !sr.irreducible || member == (hom.homogeneous && finite);
        summands.push(SummandMembership {
            label: s.object.label.clone(),
            finite,
            d: w.as_ref().map(|w| w.d),
            witness_doubly_faithful,
            homogeneous: hom.homogeneous,
            member,
            characterisation_agrees,
            evidence,
        });
    }
    let member = !summands.is_empty() && summands.iter().all(|s| s.member);
    Ok(MembershipReport { label: rho.label.clone(), tolerance: net.tol, dmax, statistics: c.report, summands, member })
}
