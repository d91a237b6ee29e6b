//! Fixture manifests frozen for regression, plus the sector structure of the
//! shipped fixtures.

use sectors_core::fixtures::{self, GridBox};
use sectors_core::object::{find_unitary_equivalence, intertwiner_space, tensor, Amplimorphism};

const TOL: f64 = 1e-9;

/// Number of gauge-invariant monomials `X^a Z^b` on `sites` sites of a
/// `k`-level system under the global `Z_k`: one in `k` shift patterns.
fn invariant_count(k: usize, sites: usize) -> usize {
    k.pow(2 * sites as u32) / k
}

struct Frozen {
    name: &'static str,
    field_dim: usize,
    ambient_dim: usize,
    global_dim: usize,
    irreducible: bool,
    duality_everywhere: bool,
    cell: (usize, usize),
    pair: (usize, usize),
}

fn frozen() -> Vec<Frozen> {
    // field space 2^4; vacuum restriction keeps the even half
    let field = 16;
    vec![
        Frozen {
            name: "z2",
            field_dim: field,
            ambient_dim: field / 2,
            global_dim: 64,
            irreducible: true,
            duality_everywhere: true,
            cell: (invariant_count(2, 1), 2),
            pair: (invariant_count(2, 2), 8),
        },
        Frozen {
            name: "z2-unrestricted",
            field_dim: field,
            ambient_dim: field,
            global_dim: 2 * 64,
            irreducible: false,
            duality_everywhere: false,
            cell: (2, 8),
            pair: (8, 32),
        },
        Frozen {
            name: "z2-center",
            field_dim: field,
            ambient_dim: 2 * field / 2,
            global_dim: 2 * 64,
            irreducible: false,
            duality_everywhere: true,
            cell: (2 * invariant_count(2, 1), 4),
            pair: (2 * invariant_count(2, 2), 16),
        },
        Frozen {
            name: "trivial",
            field_dim: field,
            ambient_dim: field,
            global_dim: field * field,
            irreducible: true,
            duality_everywhere: true,
            cell: (4, 4),
            pair: (16, 16),
        },
    ]
}

#[test]
fn manifests_match_frozen_values() {
    for want in frozen() {
        let f = fixtures::named(want.name, TOL).unwrap();
        let m = f.manifest(want.name);
        assert_eq!(m.field_dim, want.field_dim, "{}", want.name);
        assert_eq!(m.ambient_dim, want.ambient_dim, "{}", want.name);
        assert_eq!(m.global_dim, want.global_dim, "{}", want.name);
        assert!(m.site_valid && m.complements_connected, "{}", want.name);
        assert!(m.isotony_defect < TOL && m.locality_defect < TOL, "{}", want.name);
        assert_eq!(m.irreducible, want.irreducible, "{}", want.name);
        assert_eq!(m.duality_holds_everywhere, want.duality_everywhere, "{}", want.name);
        assert_eq!(m.duality.len(), 8);
        for d in &m.duality {
            let expected = if d.region.len() == 5 && d.region[..2] == d.region[3..] { want.cell } else { want.pair };
            assert_eq!((d.local_dim, d.dual_dim), expected, "{} {}", want.name, d.region);
            assert_eq!(d.holds, want.duality_everywhere, "{} {}", want.name, d.region);
        }
    }
}

fn reproducible(name: &str) {
    let a = serde_json::to_string(&fixtures::named(name, TOL).unwrap().manifest(name)).unwrap();
    let b = serde_json::to_string(&fixtures::named(name, TOL).unwrap().manifest(name)).unwrap();
    assert_eq!(a, b, "{name}");
}

fn objects_valid(name: &str) {
    let f = fixtures::named(name, TOL).unwrap();
    for (id, obj) in f.standard_objects().unwrap() {
        let r = obj.check(&f.net);
        assert!(r.valid, "{name}/{id}: {r:?}");
        assert_eq!(r.transporter_defects.len(), 8, "{name}/{id}");
        assert!(r.transporter_defects.values().all(|d| *d < TOL), "{name}/{id}");
    }
}

macro_rules! per_fixture {
    ($($module:ident => $name:literal),*) => {
        $(mod $module {
            #[test]
            fn manifest_is_reproducible() {
                super::reproducible($name);
            }

            #[test]
            fn standard_objects_are_valid_and_transportable() {
                super::objects_valid($name);
            }
        })*
    };
}

per_fixture!(z2 => "z2", z2_unrestricted => "z2-unrestricted", z2_center => "z2-center", trivial => "trivial");

#[test]
fn charges_at_different_cells_are_equivalent() {
    let f = fixtures::named("z2", TOL).unwrap();
    let cells: Vec<Amplimorphism> =
        [(0, 0), (0, 1), (1, 0), (1, 1)].iter().map(|&(r, c)| f.charged_morphism(&GridBox::cell(r, c), 1).unwrap()).collect();
    for a in &cells {
        for b in &cells {
            assert_eq!(intertwiner_space(&f.net, a, b).len(), 1);
            assert!(find_unitary_equivalence(&f.net, a, b).unitary.is_some());
        }
    }
}

#[test]
fn vacuum_charge_is_equivalent_to_the_unit() {
    // On the invariant subspace the localized automorphism is implemented by
    // an observable, so it intertwines with the unit.
    let f = fixtures::named("z2", TOL).unwrap();
    let rho = f.charged_morphism(&GridBox::cell(0, 0), 1).unwrap();
    let iota = Amplimorphism::identity(&f.net);
    assert_eq!(intertwiner_space(&f.net, &rho, &iota).len(), 1);
}

#[test]
fn unrestricted_charge_is_disjoint_from_the_unit() {
    let f = fixtures::named("z2-unrestricted", TOL).unwrap();
    let rho = f.charged_morphism(&GridBox::cell(0, 0), 1).unwrap();
    let iota = Amplimorphism::identity(&f.net);
    assert_eq!(intertwiner_space(&f.net, &rho, &iota).len(), 0);
    let square = tensor(&f.net, &rho, &rho).unwrap();
    assert!(find_unitary_equivalence(&f.net, &square, &iota).unitary.is_some());
}

#[test]
fn squared_charge_is_the_unit() {
    let f = fixtures::named("z2", TOL).unwrap();
    let rho = f.charged_morphism(&GridBox::cell(0, 0), 1).unwrap();
    let square = tensor(&f.net, &rho, &rho).unwrap();
    let iota = Amplimorphism::identity(&f.net);
    let basis = f.net.global().basis();
    let worst = basis.iter().map(|b| sectors_core::linalg::dist(&square.apply(b), b)).fold(0.0, f64::max);
    assert!(worst < TOL);
    assert!(find_unitary_equivalence(&f.net, &square, &iota).unitary.is_some());
}

#[test]
fn trivial_group_has_only_the_vacuum() {
    let f = fixtures::named("trivial", TOL).unwrap();
    let iota = Amplimorphism::identity(&f.net);
    for (id, obj) in f.standard_objects().unwrap() {
        if obj.multiplicity == 1 {
            assert!(find_unitary_equivalence(&f.net, &obj, &iota).unitary.is_some(), "{id}");
        }
    }
    assert!(f.charged_morphism(&GridBox::cell(0, 0), 1).is_err());
}

#[test]
fn invalid_specs_are_rejected() {
    assert!(fixtures::named("z3", TOL).is_err());
    let f = fixtures::named("z2", TOL).unwrap();
    assert!(f.charged_morphism(&GridBox::cell(2, 0), 1).is_err());
    assert!(f.charged_morphism(&GridBox::cell(0, 0), 2).is_err());
    assert!(f.classical_compression().is_err());
}
