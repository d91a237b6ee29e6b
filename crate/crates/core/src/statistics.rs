//! Decomposition into irreducibles and the finite-statistics classification.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::left_inverse::{self, check_simple, compress, statistics_parameter, LeftInverse, ScalarFit};
use crate::linalg::{dist, eye, fro, hermitian_eigen, real, zeros, Mat};
use crate::net::NetModel;
use crate::object::{intertwiner_defect, intertwiner_space, power, subobject, Amplimorphism};
use crate::symmetry::{symmetrizer, SymmetrizerKind};

/// Largest `γ^d` (matrix side) for which a witness search is attempted; the
/// simplicity test squares it again.
pub const WITNESS_SIZE_CAP: usize = 128;

/// An irreducible summand of `ρ`, cut out by a minimal projection of `(ρ, ρ)`.
#[derive(Clone, Debug)]
pub struct Summand {
    pub projection: Mat,
    pub object: Amplimorphism,
    pub commutant_dim: usize,
}

/// Minimal projections of `(ρ, ρ)` from the spectral decomposition of a
/// generic Hermitian element. Order follows the eigenvalues.
pub fn minimal_projections(net: &NetModel, rho: &Amplimorphism) -> Vec<Mat> {
    let space = intertwiner_space(net, rho, rho);
    let unit = rho.unit();
    if space.len() <= 1 {
        return vec![unit];
    }
    let mut rng = ChaCha8Rng::seed_from_u64(0x5EC7_0125);
    let mut h = zeros(rho.size(), rho.size());
    for b in &space {
        let w = rng.random_range(0.5..1.5);
        h += (b + b.adjoint()) * real(w);
    }
    // Park the complement of ρ(1) far above the spectrum of h.
    let parked = 2.0 * fro(&h) + 10.0;
    let shifted = &h + (eye(rho.size()) - &unit) * real(parked);
    let (vals, vecs) = hermitian_eigen(&shifted);
    let gap = 1e-6 * (1.0 + parked);
    let mut out = Vec::new();
    let mut start = 0;
    while start < vals.len() {
        let mut end = start + 1;
        while end < vals.len() && vals[end] - vals[end - 1] < gap {
            end += 1;
        }
        if (vals[start] - parked).abs() > gap * 10.0 {
            let mut p = zeros(rho.size(), rho.size());
            for k in start..end {
                p += vecs.column(k) * vecs.column(k).adjoint();
            }
            out.push(p);
        }
        start = end;
    }
    out
}

/// Split `ρ` along [`minimal_projections`].
pub fn decompose(net: &NetModel, rho: &Amplimorphism) -> Result<Vec<Summand>> {
    let mut out = Vec::new();
    for (k, e) in minimal_projections(net, rho).into_iter().enumerate() {
        let (object, _) = subobject(net, rho, &e)?;
        let object = object.with_label(format!("{}[{k}]", rho.label));
        let commutant_dim = intertwiner_space(net, &object, &object).len();
        out.push(Summand { projection: e, object, commutant_dim });
    }
    Ok(out)
}

/// `(d, γ, V)` with `V V* = A_d` or `S_d` in `(ρ^d, ρ^d)` and `γ` simple and faithful.
#[derive(Clone, Debug)]
pub struct Witness {
    pub d: usize,
    pub kind: SymmetrizerKind,
    pub gamma: Amplimorphism,
    pub isometry: Mat,
    /// `|V V* - P|` for the (anti)symmetrizer `P`.
    pub residual: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WitnessSummary {
    pub d: usize,
    pub kind: SymmetrizerKind,
    pub gamma: String,
    pub gamma_multiplicity: usize,
    pub residual: f64,
}

impl Witness {
    pub fn summary(&self) -> WitnessSummary {
        WitnessSummary {
            d: self.d,
            kind: self.kind,
            gamma: self.gamma.label.clone(),
            gamma_multiplicity: self.gamma.multiplicity,
            residual: self.residual,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SummandReport {
    pub label: String,
    pub irreducible: bool,
    /// Where the summand's left inverse came from, if one was found.
    pub left_inverse: Option<String>,
    pub lambda: Option<ScalarFit>,
    /// Set when `λ = 0`: infinite statistics.
    pub infinite: bool,
    pub sign: Option<i32>,
    pub d: Option<usize>,
    pub witness: Option<WitnessSummary>,
    /// Why no witness was produced.
    pub note: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StatisticsReport {
    pub label: String,
    pub tolerance: f64,
    pub dmax: usize,
    pub commutant_dim: usize,
    pub summands: Vec<SummandReport>,
    /// Every summand has a witness.
    pub finite: bool,
}

#[derive(Clone, Debug)]
pub struct Classification {
    pub report: StatisticsReport,
    pub summands: Vec<Summand>,
    pub witnesses: Vec<Option<Witness>>,
    pub left_inverses: Vec<Option<LeftInverse>>,
}

/// Left inverse of a summand: compressed from `φ` when given, otherwise the
/// inverse on the image.
fn summand_left_inverse(net: &NetModel, s: &Summand, phi: Option<&LeftInverse>) -> Option<(LeftInverse, String)> {
    if let Some(phi) = phi {
        if let Ok(c) = compress(phi, &s.projection, &s.projection, net.tol) {
            return Some((c, "compressed".into()));
        }
    }
    left_inverse::from_simple(net, &s.object).ok().map(|l| (l, "inverse on image".into()))
}

/// Search `d ≤ dmax` for a witness of finite statistics of an irreducible `ρ`.
pub fn find_witness(net: &NetModel, rho: &Amplimorphism, dmax: usize) -> (Option<Witness>, Option<String>) {
    for d in 1..=dmax {
        if rho.size() * rho.multiplicity.pow(d as u32 - 1) > WITNESS_SIZE_CAP {
            return (None, Some(format!("unclassified for d ≤ {}: size cap {WITNESS_SIZE_CAP} reached at d = {d}", d - 1)));
        }
        let Ok(rho_d) = power(net, rho, d) else { break };
        for kind in [SymmetrizerKind::Antisymmetric, SymmetrizerKind::Symmetric] {
            let Ok(p) = symmetrizer(net, rho, d, kind) else { continue };
            if fro(&p) < net.tol {
                continue;
            }
            let Ok((gamma, v)) = subobject(net, &rho_d, &p) else { continue };
            if !gamma.is_faithful(net) {
                continue;
            }
            let simple = check_simple(net, &gamma, None).map(|r| r.sign.is_some()).unwrap_or(false);
            if simple {
                let residual = dist(&(&v * v.adjoint()), &p);
                let gamma = gamma.with_label(format!("{}^{d}|{kind:?}", rho.label));
                return (Some(Witness { d, kind, gamma, isometry: v, residual }), None);
            }
        }
    }
    (None, Some(format!("unclassified for d ≤ {dmax}")))
}

/// Decompose `ρ`, fit `λ` on each summand and search for witnesses.
pub fn classify(net: &NetModel, rho: &Amplimorphism, phi: Option<&LeftInverse>, dmax: usize) -> Result<Classification> {
    let commutant_dim = intertwiner_space(net, rho, rho).len();
    let summands = decompose(net, rho)?;
    let mut reports = Vec::new();
    let mut witnesses = Vec::new();
    let mut lis = Vec::new();
    for s in &summands {
        let irreducible = s.commutant_dim == 1;
        let li = summand_left_inverse(net, s, phi);
        let lambda = li.as_ref().and_then(|(l, _)| statistics_parameter(net, &s.object, l).ok());
        let infinite = lambda.is_some_and(|f| f.value().norm() < net.tol);
        let sign = check_simple(net, &s.object, li.as_ref().map(|(l, _)| l)).ok().and_then(|r| r.sign);
        let (witness, note) = if !irreducible {
            (None, Some("summand is not irreducible".to_string()))
        } else if infinite {
            (None, Some("infinite statistics: λ = 0".to_string()))
        } else {
            find_witness(net, &s.object, dmax)
        };
        reports.push(SummandReport {
            label: s.object.label.clone(),
            irreducible,
            left_inverse: li.as_ref().map(|(_, how)| how.clone()),
            lambda,
            infinite,
            sign,
            d: witness.as_ref().map(|w| w.d),
            witness: witness.as_ref().map(Witness::summary),
            note,
        });
        witnesses.push(witness);
        lis.push(li.map(|(l, _)| l));
    }
    let finite = !witnesses.is_empty() && witnesses.iter().all(Option::is_some);
    let report = StatisticsReport { label: rho.label.clone(), tolerance: net.tol, dmax, commutant_dim, summands: reports, finite };
    Ok(Classification { report, summands, witnesses, left_inverses: lis })
}

/// `|V V* - P|` and whether `V` is an intertwiner of `ρ^d`.
pub fn witness_defect(net: &NetModel, rho: &Amplimorphism, w: &Witness) -> Result<f64> {
    let rho_d = power(net, rho, w.d)?;
    let p = symmetrizer(net, rho, w.d, w.kind)?;
    Ok(dist(&(&w.isometry * w.isometry.adjoint()), &p).max(intertwiner_defect(net, &w.isometry, &w.gamma, &rho_d)))
}
