//! The flip, the symmetry `ε(ρ, σ) ∈ (ρσ, σρ)` and permutation statistics.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec;
use crate::linalg::{dist, eye, kron, real, zeros, Mat};
use crate::net::NetModel;
use crate::object::{tensor_arrows, tensor_arrows_with, Amplimorphism};

/// Scalar permutation `θ(n, m)` sending basis index `i + n·j` to `j + m·i`.
pub fn flip(n: usize, m: usize) -> Mat {
    let mut t = zeros(n * m, n * m);
    for i in 0..n {
        for j in 0..m {
            t[(j + m * i, i + n * j)] = real(1.0);
        }
    }
    t
}

/// `θ(n, m) ⊗ 1_dim`, the flip acting on block indices.
pub fn block_flip(n: usize, m: usize, dim: usize) -> Mat {
    kron(&flip(n, m), &eye(dim))
}

/// `1_ρ × x`: `ρ` applied to every block.
pub fn left_unit(rho: &Amplimorphism, x: &Mat) -> Mat {
    rho.apply_blocks(x)
}

/// `x × 1_τ` for `x` with source `src`.
pub fn right_unit(x: &Mat, src: &Amplimorphism, tau: &Amplimorphism) -> Mat {
    tensor_arrows(x, &tau.unit(), src)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TransportConfiguration {
    pub first_region: String,
    pub second_region: String,
}

#[derive(Clone, Debug)]
pub struct SymmetryValue {
    pub matrix: Mat,
    pub configurations: Vec<TransportConfiguration>,
    /// Distance between the values from the two configurations.
    pub discrepancy: f64,
}

/// Ordered spacelike pairs `(a, b)` at which `ρ` and `σ` both have transporters.
fn admissible_pairs(net: &NetModel, rho: &Amplimorphism, sigma: &Amplimorphism) -> Vec<(String, String)> {
    let mut pairs: Vec<(String, String)> = net
        .site
        .disjoint
        .iter()
        .filter(|(a, b)| rho.transporters.contains_key(a) && sigma.transporters.contains_key(b))
        .cloned()
        .collect();
    pairs.sort();
    pairs.dedup();
    pairs
}

/// `(V* × U*) · θ · (U × V)` for `U ∈ (ρ, ρ_a)`, `V ∈ (σ, σ_b)`.
pub fn symmetry_at(rho: &Amplimorphism, sigma: &Amplimorphism, u: &Mat, v: &Mat) -> Mat {
    let dim = rho.ambient_dim;
    let forward = tensor_arrows(u, v, rho);
    let theta = block_flip(rho.multiplicity, sigma.multiplicity, dim);
    // σ_b(x) = V σ(x) V*
    let back = tensor_arrows_with(&v.adjoint(), &u.adjoint(), dim, |x| v * sigma.apply(x) * v.adjoint());
    back * theta * forward
}

/// `ε(ρ, σ)` computed from the first and the last admissible spacelike pair;
/// the two values must agree within the net tolerance.
pub fn symmetry(net: &NetModel, rho: &Amplimorphism, sigma: &Amplimorphism) -> Result<SymmetryValue> {
    let pairs = admissible_pairs(net, rho, sigma);
    let (first, last) = match (pairs.first(), pairs.last()) {
        (Some(f), Some(l)) => (f.clone(), l.clone()),
        _ => return Err(Error::NoSpacelikePair),
    };
    let eval = |(a, b): &(String, String)| symmetry_at(rho, sigma, &rho.transporters[a], &sigma.transporters[b]);
    let m1 = eval(&first);
    let m2 = eval(&last);
    let discrepancy = dist(&m1, &m2);
    if discrepancy >= net.tol {
        return Err(Error::SymmetryInconsistent(discrepancy));
    }
    let configurations = [first, last]
        .into_iter()
        .map(|(a, b)| TransportConfiguration { first_region: a, second_region: b })
        .collect();
    Ok(SymmetryValue { matrix: m1, configurations, discrepancy })
}

/// Residuals of the symmetry axioms on a triple of objects.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SymmetryAxioms {
    /// `ε(ρ,σ)` is a unitary in `(ρσ, σρ)`.
    pub intertwiner: f64,
    /// `ε(ρ,σ)* = ε(σ,ρ)`.
    pub adjoint: f64,
    /// `ε(ρ,τσ) = (1_τ × ε(ρ,σ)) · (ε(ρ,τ) × 1_σ)`.
    pub tensor: f64,
    /// `ε(ρ,σ) · ε(σ,ρ) = 1_{σρ}`.
    pub inverse: f64,
    /// `ε(ρ,ι) = ε(ι,ρ) = 1_ρ`.
    pub unit: f64,
}

impl SymmetryAxioms {
    pub fn worst(&self) -> f64 {
        [self.intertwiner, self.adjoint, self.tensor, self.inverse, self.unit].into_iter().fold(0.0, f64::max)
    }
}

pub fn check_axioms(net: &NetModel, rho: &Amplimorphism, sigma: &Amplimorphism, tau: &Amplimorphism) -> Result<SymmetryAxioms> {
    use crate::object::{intertwiner_defect, tensor};
    let rs = symmetry(net, rho, sigma)?.matrix;
    let sr = symmetry(net, sigma, rho)?.matrix;
    let rho_sigma = tensor(net, rho, sigma)?;
    let sigma_rho = tensor(net, sigma, rho)?;
    let intertwiner = intertwiner_defect(net, &rs, &rho_sigma, &sigma_rho)
        .max(dist(&(rs.adjoint() * &rs), &rho_sigma.unit()))
        .max(dist(&(&rs * rs.adjoint()), &sigma_rho.unit()));
    let adjoint = dist(&rs.adjoint(), &sr);
    let inverse = dist(&(&rs * &sr), &sigma_rho.unit());

    let tau_sigma = tensor(net, tau, sigma)?;
    let lhs = symmetry(net, rho, &tau_sigma)?.matrix;
    let rt = symmetry(net, rho, tau)?.matrix;
    let first = right_unit(&rt, &tensor(net, rho, tau)?, sigma);
    let second = left_unit(tau, &rs);
    let tensor_defect = dist(&lhs, &(second * first));

    let iota = Amplimorphism::identity(net);
    let unit = dist(&symmetry(net, rho, &iota)?.matrix, &rho.unit())
        .max(dist(&symmetry(net, &iota, rho)?.matrix, &rho.unit()));
    Ok(SymmetryAxioms { intertwiner, adjoint, tensor: tensor_defect, inverse, unit })
}

/// Naturality `ε(ρ,σ) · (T × S) = (S × T) · ε(τ,β)` for `T ∈ (τ,ρ)`, `S ∈ (β,σ)`.
pub fn naturality_defect(
    net: &NetModel,
    t: &Mat,
    s: &Mat,
    tau: &Amplimorphism,
    beta: &Amplimorphism,
    rho: &Amplimorphism,
    sigma: &Amplimorphism,
) -> Result<f64> {
    let e_rs = symmetry(net, rho, sigma)?.matrix;
    let e_tb = symmetry(net, tau, beta)?.matrix;
    let lhs = e_rs * tensor_arrows(t, s, tau);
    let rhs = tensor_arrows(s, t, beta) * e_tb;
    Ok(dist(&lhs, &rhs))
}

/// Generators `u_k = 1_{ρ^{k-1}} × ε(ρ,ρ) × 1_{ρ^{n-k-1}}`, `k = 1..n-1`, of the
/// permutation representation on `ρ^n`.
pub fn perm_generators(net: &NetModel, rho: &Amplimorphism, n: usize) -> Result<Vec<Mat>> {
    use crate::object::{power, tensor};
    if n < 2 {
        return Ok(Vec::new());
    }
    let eps = symmetry(net, rho, rho)?.matrix;
    let rho2 = tensor(net, rho, rho)?;
    let mut out = Vec::with_capacity(n - 1);
    for k in 1..n {
        let before = power(net, rho, k - 1)?;
        let after = power(net, rho, n - k - 1)?;
        let inner = left_unit(&before, &eps);
        let src = tensor(net, &before, &rho2)?;
        out.push(right_unit(&inner, &src, &after));
    }
    Ok(out)
}

/// Largest defect of the Coxeter relations of the generators, given the unit.
pub fn coxeter_defect(gens: &[Mat], unit: &Mat) -> f64 {
    let mut worst: f64 = 0.0;
    for (i, u) in gens.iter().enumerate() {
        worst = worst.max(dist(&(u * u), unit));
        for (j, v) in gens.iter().enumerate().skip(i + 1) {
            if j == i + 1 {
                worst = worst.max(dist(&(u * v * u), &(v * u * v)));
            } else {
                worst = worst.max(dist(&(u * v), &(v * u)));
            }
        }
    }
    worst
}

/// All permutations of `0..d` in lexicographic order.
pub fn permutations(d: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut p: Vec<usize> = (0..d).collect();
    loop {
        out.push(p.clone());
        let Some(i) = (1..d).rev().find(|&i| p[i - 1] < p[i]) else { break };
        let j = (i..d).rev().find(|&j| p[j] > p[i - 1]).expect("successor exists");
        p.swap(i - 1, j);
        p[i..].reverse();
    }
    out
}

/// Adjacent transpositions (0-based `k` meaning `(k, k+1)`) whose product is `p`,
/// obtained by bubble sort, together with the sign.
pub fn reduced_word(p: &[usize]) -> (Vec<usize>, f64) {
    let mut q = p.to_vec();
    let mut word = Vec::new();
    for pass in 0..q.len() {
        for k in 0..q.len().saturating_sub(pass + 1) {
            if q[k] > q[k + 1] {
                q.swap(k, k + 1);
                word.push(k);
            }
        }
    }
    word.reverse();
    let sign = if word.len() % 2 == 0 { 1.0 } else { -1.0 };
    (word, sign)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum SymmetrizerKind {
    Symmetric,
    Antisymmetric,
}

/// `S_d` or `A_d` on `ρ^d`: the (signed) average of the permutation operators.
pub fn symmetrizer(net: &NetModel, rho: &Amplimorphism, d: usize, kind: SymmetrizerKind) -> Result<Mat> {
    use crate::object::power;
    let rho_d = power(net, rho, d)?;
    let unit = rho_d.unit();
    if d < 2 {
        return Ok(unit);
    }
    let gens = perm_generators(net, rho, d)?;
    let perms = permutations(d);
    let terms = exec::map(&perms, |p| {
        let (word, sign) = reduced_word(p);
        let op = word.iter().fold(unit.clone(), |acc, &k| acc * &gens[k]);
        match kind {
            SymmetrizerKind::Symmetric => op,
            SymmetrizerKind::Antisymmetric => op * real(sign),
        }
    });
    let total = exec::tree_sum(terms).expect("at least one permutation");
    Ok(total * real(1.0 / perms.len() as f64))
}
