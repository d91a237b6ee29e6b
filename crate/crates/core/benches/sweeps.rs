use std::hint::black_box;
use std::time::Duration;

use criterion::{criterion_group, criterion_main, Criterion};

use sectors_core::conjugate;
use sectors_core::exec;
use sectors_core::fixtures::{self, GridBox};
use sectors_core::presheaf::{self, Commutants};
use sectors_core::symmetry;

fn modes(c: &mut Criterion, name: &str, mut run: impl FnMut()) {
    let mut group = c.benchmark_group(name);
    group.sample_size(10).measurement_time(Duration::from_secs(10));
    for (label, sequential) in [("parallel", false), ("sequential", true)] {
        exec::set_sequential(sequential);
        group.bench_function(label, |b| b.iter(&mut run));
    }
    exec::set_sequential(false);
    group.finish();
}

fn sweeps(c: &mut Criterion) {
    let f = fixtures::named("z2", 1e-9).unwrap();
    let net = &f.net;
    let cache = Commutants::new(net).unwrap();
    let rho = f.charged_morphism(&GridBox::cell(0, 0), 1).unwrap();
    let other = f.charged_morphism(&GridBox::cell(1, 1), 1).unwrap();

    modes(c, "symmetry", || {
        black_box(symmetry::symmetry(net, &rho, &other).unwrap());
    });
    modes(c, "solve_conjugate", || {
        black_box(conjugate::solve_conjugate(net, &rho, &rho).unwrap());
    });
    modes(c, "check_homogeneous", || {
        black_box(presheaf::check_homogeneous(net, &cache, &rho, 3).unwrap());
    });
}

criterion_group!(benches, sweeps);
criterion_main!(benches);
