//! Abstract causal site: a finite set of regions with containment and
//! spacelike disjointness.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Regions are opaque ids. `leq` is stored without its reflexive pairs being
/// required; reflexivity is implied.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CausalSite {
    pub regions: Vec<String>,
    pub leq: Vec<(String, String)>,
    pub disjoint: Vec<(String, String)>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub rule: String,
    pub regions: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub valid: bool,
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn has(&self, rule: &str) -> bool {
        self.violations.iter().any(|v| v.rule == rule)
    }
}

impl CausalSite {
    pub fn new(regions: Vec<String>, leq: Vec<(String, String)>, disjoint: Vec<(String, String)>) -> Self {
        Self { regions, leq, disjoint }
    }

    pub fn contains_region(&self, a: &str) -> bool {
        self.regions.iter().any(|r| r == a)
    }

    fn require(&self, a: &str) -> Result<()> {
        if self.contains_region(a) {
            Ok(())
        } else {
            Err(Error::UnknownRegion(a.to_string()))
        }
    }

    pub fn is_leq(&self, a: &str, b: &str) -> bool {
        a == b || self.leq.iter().any(|(x, y)| x == a && y == b)
    }

    /// Symmetric reading of the disjointness list.
    pub fn is_disjoint(&self, a: &str, b: &str) -> bool {
        self.disjoint.iter().any(|(x, y)| (x == a && y == b) || (x == b && y == a))
    }

    /// Regions spacelike to `a`, in site order.
    pub fn spacelike_complement(&self, a: &str) -> Result<Vec<String>> {
        self.require(a)?;
        Ok(self.regions.iter().filter(|b| self.is_disjoint(a, b)).cloned().collect())
    }

    /// Regions spacelike to every region in `set`.
    pub fn common_complement(&self, set: &[&str]) -> Result<Vec<String>> {
        for a in set {
            self.require(a)?;
        }
        Ok(self
            .regions
            .iter()
            .filter(|b| set.iter().all(|a| self.is_disjoint(a, b)))
            .cloned()
            .collect())
    }

    /// Connectivity of the containment graph restricted to the complement of `a`.
    pub fn complement_connected(&self, a: &str) -> Result<bool> {
        let comp = self.spacelike_complement(a)?;
        if comp.is_empty() {
            return Ok(false);
        }
        let mut seen = BTreeSet::new();
        let mut queue = VecDeque::from([comp[0].clone()]);
        seen.insert(comp[0].clone());
        while let Some(x) = queue.pop_front() {
            for y in &comp {
                if !seen.contains(y) && (self.is_leq(&x, y) || self.is_leq(y, &x)) {
                    seen.insert(y.clone());
                    queue.push_back(y.clone());
                }
            }
        }
        Ok(seen.len() == comp.len())
    }

    /// Every violated invariant, in a fixed order.
    pub fn validate(&self) -> ValidationReport {
        let mut v = Vec::new();
        let mut push = |rule: &str, regions: Vec<&str>| {
            v.push(Violation { rule: rule.to_string(), regions: regions.into_iter().map(String::from).collect() })
        };
        let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
        for r in &self.regions {
            *counts.entry(r.as_str()).or_default() += 1;
        }
        for (r, k) in &counts {
            if *k > 1 {
                push("duplicate_region", vec![r]);
            }
        }
        for (a, b) in self.leq.iter().chain(&self.disjoint) {
            for x in [a, b] {
                if !self.contains_region(x) {
                    push("unknown_region", vec![x]);
                }
            }
        }
        let rs: Vec<&str> = self.regions.iter().map(String::as_str).collect();
        for &a in &rs {
            for &b in &rs {
                if a != b && self.is_leq(a, b) && self.is_leq(b, a) && a < b {
                    push("antisymmetry", vec![a, b]);
                }
            }
        }
        for &a in &rs {
            for &b in &rs {
                if !self.is_leq(a, b) || a == b {
                    continue;
                }
                for &c in &rs {
                    if b != c && self.is_leq(b, c) && !self.is_leq(a, c) {
                        push("transitivity", vec![a, b, c]);
                    }
                }
            }
        }
        for &a in &rs {
            if self.is_disjoint(a, a) {
                push("irreflexivity", vec![a]);
            }
        }
        for (a, b) in &self.disjoint {
            if !self.disjoint.iter().any(|(x, y)| x == b && y == a) {
                push("symmetry", vec![a, b]);
            }
        }
        for &a in &rs {
            for &b in &rs {
                if !self.is_leq(a, b) {
                    continue;
                }
                for &c in &rs {
                    if self.is_disjoint(c, b) && !self.is_disjoint(c, a) {
                        push("monotonicity", vec![a, b, c]);
                    }
                }
            }
        }
        for &a in &rs {
            if !rs.iter().any(|b| self.is_disjoint(a, b)) {
                push("empty_complement", vec![a]);
            }
        }
        ValidationReport { valid: v.is_empty(), violations: v }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn s(x: &str) -> String {
        x.to_string()
    }

    fn two_point() -> CausalSite {
        CausalSite::new(vec![s("a"), s("b")], vec![], vec![(s("a"), s("b")), (s("b"), s("a"))])
    }

    #[test]
    fn two_disjoint_points_are_valid() {
        let r = two_point().validate();
        assert!(r.valid, "{:?}", r);
    }

    #[test]
    fn self_disjoint_region_flags_irreflexivity() {
        let mut site = two_point();
        site.disjoint.push((s("a"), s("a")));
        assert!(site.validate().has("irreflexivity"));
    }

    #[test]
    fn missing_inherited_disjointness_flags_monotonicity() {
        let site = CausalSite::new(
            vec![s("a"), s("b"), s("c")],
            vec![(s("a"), s("b"))],
            vec![(s("c"), s("b")), (s("b"), s("c")), (s("a"), s("b")), (s("b"), s("a"))],
        );
        let r = site.validate();
        assert!(r.has("monotonicity"));
    }

    #[test]
    fn unknown_region_is_an_error() {
        assert!(matches!(two_point().spacelike_complement("zz"), Err(Error::UnknownRegion(_))));
        assert!(two_point().complement_connected("zz").is_err());
    }

    #[test]
    fn single_vertex_complement_is_connected() {
        assert!(two_point().complement_connected("a").unwrap());
    }

    #[test]
    fn unrelated_pair_complement_is_disconnected() {
        let site = CausalSite::new(
            vec![s("a"), s("b"), s("c")],
            vec![],
            vec![(s("a"), s("b")), (s("b"), s("a")), (s("a"), s("c")), (s("c"), s("a"))],
        );
        assert!(!site.complement_connected("a").unwrap());
    }

    #[test]
    fn empty_complement_is_flagged() {
        let site = CausalSite::new(vec![s("a")], vec![], vec![]);
        assert_eq!(site.spacelike_complement("a").unwrap(), Vec::<String>::new());
        assert!(site.validate().has("empty_complement"));
    }
}
