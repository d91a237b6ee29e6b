//! Nets of concrete algebras over a causal site.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::algebra::{generated_by, AlgebraCheck, ConcreteAlgebra};
use crate::error::{Error, Result};
use crate::exec;
use crate::linalg::{commutator, fro, Mat, Span};
use crate::site::{CausalSite, ValidationReport};

#[derive(Clone, Debug)]
pub struct NetModel {
    pub site: CausalSite,
    pub ambient_dim: usize,
    pub local: BTreeMap<String, ConcreteAlgebra>,
    pub tol: f64,
    global: ConcreteAlgebra,
    generators: Vec<Mat>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DualityReport {
    pub region: String,
    pub local_dim: usize,
    pub dual_dim: usize,
    /// Largest residual of a basis element of A(a) outside A(a⊥)'.
    pub local_in_dual_defect: f64,
    /// Largest residual of a basis element of A(a⊥)' outside A(a).
    pub dual_in_local_defect: f64,
    pub holds: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairDefect {
    pub first: String,
    pub second: String,
    pub defect: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NetReport {
    pub tolerance: f64,
    pub site: ValidationReport,
    pub algebras: BTreeMap<String, AlgebraCheck>,
    pub isotony: Vec<PairDefect>,
    pub locality: Vec<PairDefect>,
    pub global_dim: usize,
    pub irreducible: bool,
    pub duality: Vec<DualityReport>,
    pub passed: bool,
}

impl NetModel {
    pub fn new(site: CausalSite, ambient_dim: usize, local: BTreeMap<String, ConcreteAlgebra>, tol: f64) -> Result<Self> {
        for r in &site.regions {
            let alg = local.get(r).ok_or_else(|| Error::UnknownRegion(r.clone()))?;
            if alg.ambient_dim() != ambient_dim {
                return Err(Error::Shape(format!("algebra of `{r}` acts on dimension {}", alg.ambient_dim())));
            }
        }
        if let Some(extra) = local.keys().find(|k| !site.contains_region(k)) {
            return Err(Error::UnknownRegion(extra.clone()));
        }
        let mut span = Span::new(ambient_dim, ambient_dim);
        for a in local.values() {
            for b in a.basis() {
                span.insert(b, tol);
            }
        }
        let generators = span.basis().to_vec();
        let global = ConcreteAlgebra::generated(ambient_dim, &generators, tol);
        Ok(Self { site, ambient_dim, local, tol, global, generators })
    }

    pub fn algebra(&self, a: &str) -> Result<&ConcreteAlgebra> {
        self.local.get(a).ok_or_else(|| Error::UnknownRegion(a.to_string()))
    }

    /// Algebra generated by every local algebra.
    pub fn global(&self) -> &ConcreteAlgebra {
        &self.global
    }

    /// Orthonormal spanning set of the union of local algebras. It is closed
    /// under adjoints as a span and generates the global algebra.
    pub fn generators(&self) -> &[Mat] {
        &self.generators
    }

    pub fn generated_algebra(&self, regions: &[String]) -> Result<ConcreteAlgebra> {
        let algs = regions.iter().map(|r| self.algebra(r)).collect::<Result<Vec<_>>>()?;
        Ok(generated_by(self.ambient_dim, &algs, self.tol))
    }

    /// A(a⊥): generated by the algebras of regions spacelike to `a`.
    pub fn complement_algebra(&self, a: &str) -> Result<ConcreteAlgebra> {
        let comp = self.site.spacelike_complement(a)?;
        if comp.is_empty() {
            return Err(Error::EmptyComplement(a.to_string()));
        }
        self.generated_algebra(&comp)
    }

    /// A(a)' in the full matrix algebra.
    pub fn local_commutant(&self, a: &str) -> Result<ConcreteAlgebra> {
        Ok(self.algebra(a)?.commutant(self.tol))
    }

    pub fn check_isotony(&self) -> Vec<PairDefect> {
        let mut out = Vec::new();
        for (a, b) in &self.site.leq {
            if let (Ok(x), Ok(y)) = (self.algebra(a), self.algebra(b)) {
                out.push(PairDefect { first: a.clone(), second: b.clone(), defect: x.containment_defect(y) });
            }
        }
        out
    }

    pub fn check_locality(&self) -> Vec<PairDefect> {
        let mut out = Vec::new();
        for (a, b) in &self.site.disjoint {
            if a > b {
                continue;
            }
            if let (Ok(x), Ok(y)) = (self.algebra(a), self.algebra(b)) {
                let mut worst: f64 = 0.0;
                for p in x.basis() {
                    for q in y.basis() {
                        worst = worst.max(fro(&commutator(p, q)));
                    }
                }
                out.push(PairDefect { first: a.clone(), second: b.clone(), defect: worst });
            }
        }
        out
    }

    pub fn check_haag_duality(&self, a: &str) -> Result<DualityReport> {
        let local = self.algebra(a)?;
        let dual = self.complement_algebra(a)?.commutant(self.tol);
        let local_in_dual_defect = local.containment_defect(&dual);
        let dual_in_local_defect = dual.containment_defect(local);
        Ok(DualityReport {
            region: a.to_string(),
            local_dim: local.dim(),
            dual_dim: dual.dim(),
            local_in_dual_defect,
            dual_in_local_defect,
            holds: local_in_dual_defect < self.tol && dual_in_local_defect < self.tol,
        })
    }

    pub fn check_irreducibility(&self) -> bool {
        self.global.is_irreducible(self.tol)
    }

    /// Every net-level check in one report.
    pub fn check(&self) -> NetReport {
        let site = self.site.validate();
        let algebras = self.local.iter().map(|(k, a)| (k.clone(), a.check())).collect::<BTreeMap<_, _>>();
        let isotony = self.check_isotony();
        let locality = self.check_locality();
        let regions = self.site.regions.clone();
        let duality: Vec<DualityReport> =
            exec::map(&regions, |r| self.check_haag_duality(r)).into_iter().filter_map(|r| r.ok()).collect();
        let irreducible = self.check_irreducibility();
        let passed = site.valid
            && algebras.values().all(|c| c.holds(self.tol))
            && isotony.iter().all(|d| d.defect < self.tol)
            && locality.iter().all(|d| d.defect < self.tol)
            && irreducible
            && duality.len() == regions.len()
            && duality.iter().all(|d| d.holds);
        NetReport {
            tolerance: self.tol,
            site,
            algebras,
            isotony,
            locality,
            global_dim: self.global.dim(),
            irreducible,
            duality,
            passed,
        }
    }
}
