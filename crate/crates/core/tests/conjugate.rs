use std::sync::OnceLock;

use sectors_core::conjugate::{self, ConjugateSolution, SimpleOutcome};
use sectors_core::fixtures::{self, GaugeFixture, GridBox};
use sectors_core::linalg::{dist, eye, real, Mat};
use sectors_core::object::{direct_sum, find_unitary_equivalence, Amplimorphism};
use sectors_core::presheaf::Commutants;
use sectors_core::statistics::find_witness;

const TOL: f64 = 1e-9;

struct Setup {
    f: GaugeFixture,
    cache: Commutants,
}

fn z2() -> &'static Setup {
    static CELL: OnceLock<Setup> = OnceLock::new();
    CELL.get_or_init(|| {
        let f = fixtures::named("z2", TOL).unwrap();
        let cache = Commutants::new(&f.net).unwrap();
        Setup { f, cache }
    })
}

fn rho() -> Amplimorphism {
    z2().f.charged_morphism(&GridBox::cell(0, 0), 1).unwrap()
}

#[test]
fn unit_is_self_conjugate_with_unit_arrows() {
    let net = &z2().f.net;
    let iota = Amplimorphism::identity(net);
    let one = eye(net.ambient_dim);
    let sol = ConjugateSolution::new(net, iota.clone(), iota, one.clone(), one).unwrap();
    assert!(sol.holds(TOL));
    let st = conjugate::standardness(net, &sol).unwrap();
    assert!(st.standard && (st.c.re - 1.0).abs() < TOL);
}

#[test]
fn sweep_finds_self_conjugate_charge() {
    let net = &z2().f.net;
    let r = rho();
    let out = conjugate::solve_conjugate(net, &r, &r).unwrap();
    assert_eq!((out.r_space_dim, out.r_bar_space_dim), (1, 1));
    assert!(out.exhaustive);
    let sol = out.solution.unwrap();
    assert!(sol.residuals.0 < TOL && sol.residuals.1 < TOL);
    let swapped = sol.swapped(net).unwrap();
    assert!(swapped.holds(TOL));
}

#[test]
fn sweep_reports_missing_solution() {
    let net = &z2().f.net;
    let r = rho();
    let (sum, _) = direct_sum(net, &[&r, &r]).unwrap();
    let out = conjugate::solve_conjugate(net, &r, &sum).unwrap();
    assert!(out.solution.is_none());
    let summary = out.summary();
    assert!(!summary.found);
    assert!(summary.note.contains("no solution"), "{}", summary.note);
}

#[test]
fn standardization_is_independent_of_scale() {
    let net = &z2().f.net;
    let r = rho();
    let sol = conjugate::solve_conjugate(net, &r, &r).unwrap().solution.unwrap();
    let reference = conjugate::standardize(net, &sol).unwrap();
    for t in [0.5, 3.0, 17.0] {
        let scaled = ConjugateSolution::new(net, sol.rho.clone(), sol.rho_bar.clone(), &sol.r * real(t), &sol.r_bar * real(1.0 / t)).unwrap();
        assert!(scaled.holds(TOL));
        let std = conjugate::standardize(net, &scaled).unwrap();
        let st = conjugate::standardness(net, &std).unwrap();
        assert!(st.standard);
        let gram = |m: &Mat| m.adjoint() * m;
        assert!(dist(&gram(&std.r), &gram(&reference.r)) < 1e-8);
        assert!(dist(&gram(&std.r_bar), &gram(&reference.r_bar)) < 1e-8);
    }
}

#[test]
fn chain_rejects_perturbed_solution() {
    let s = z2();
    let r = rho();
    let sol = conjugate::solve_conjugate(&s.f.net, &r, &r).unwrap().solution.unwrap();
    let bad_r = &sol.r + Mat::from_element(sol.r.nrows(), sol.r.ncols(), real(1e-3));
    let bad = ConjugateSolution::new(&s.f.net, sol.rho.clone(), sol.rho_bar.clone(), bad_r, sol.r_bar.clone()).unwrap();
    assert!(bad.residuals.0.max(bad.residuals.1) > 1e-4);
    let report = conjugate::verify_conjugation_theorems(&s.f.net, &s.cache, &bad, 3).unwrap();
    assert_eq!(report.aborted_at.as_deref(), Some("conjugate equations"));
    assert!(!report.member);
}

#[test]
fn simple_conjugate_is_the_charge_itself() {
    let s = z2();
    let r = rho();
    let SimpleOutcome::Found(found) = conjugate::conjugate_for_simple(&s.f.net, &s.cache, &r).unwrap() else {
        panic!("obstructed")
    };
    assert!(found.solution.holds(TOL));
    assert!(find_unitary_equivalence(&s.f.net, &found.gamma_bar, &r).unitary.is_some());
    let w = find_witness(&s.f.net, &r, 3).0.unwrap();
    assert_eq!(w.d, 1);
    let fs = conjugate::conjugate_for_finite_stats(&s.f.net, &r, &w, &found.solution).unwrap();
    assert!(fs.holds(TOL));
    let both = conjugate::tensor_solution(&s.f.net, &fs, &fs).unwrap();
    assert!(both.holds(TOL), "{:?}", both.residuals);
}

#[test]
fn non_doubly_faithful_simple_object_is_obstructed() {
    let f = fixtures::named("z2-center", TOL).unwrap();
    let cache = Commutants::new(&f.net).unwrap();
    let bit = f.classical_compression().unwrap();
    match conjugate::conjugate_for_simple(&f.net, &cache, &bit).unwrap() {
        SimpleOutcome::Obstructed(why) => assert!(why.contains("doubly faithful"), "{why}"),
        SimpleOutcome::Found(_) => panic!("bit0 should be obstructed"),
    }
}

#[test]
fn non_simple_input_is_an_error() {
    let s = z2();
    let r = rho();
    let (sum, _) = direct_sum(&s.f.net, &[&r, &r]).unwrap();
    assert!(conjugate::conjugate_for_simple(&s.f.net, &s.cache, &sum).is_err());
}
