//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Runs without the libtest harness so the lines always reach stdout; the
//! process exits nonzero when any criterion fails.

use std::time::Instant;

use sectors_core::conjugate::{self, ConjugateSolution};
use sectors_core::document::NetSpecDocument;
use sectors_core::exec;
use sectors_core::fixtures::{self, Anchor, GaugeFixture, GridBox};
use sectors_core::left_inverse::{self, LeftInverse};
use sectors_core::linalg::{dist, eye, kron, real, Mat};
use sectors_core::net::NetModel;
use sectors_core::object::{direct_sum, intertwiner_defect, intertwiner_space, power, tensor, Amplimorphism};
use sectors_core::presheaf::{self, Commutants};
use sectors_core::symmetry::{self, SymmetrizerKind};

const TOL: f64 = 1e-9;
const DMAX: usize = 3;

type Outcome = Result<String, String>;

struct Ctx {
    fixture: GaugeFixture,
    cache: Commutants,
    objects: Vec<(String, Amplimorphism)>,
}

impl Ctx {
    fn net(&self) -> &NetModel {
        &self.fixture.net
    }

    fn obj(&self, id: &str) -> &Amplimorphism {
        &self.objects.iter().find(|(k, _)| k == id).expect("fixture object").1
    }
}

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

fn net_axioms() -> Outcome {
    let start = Instant::now();
    let f = fixtures::named("z2", TOL).map_err(err)?;
    let manifest = f.manifest("z2");
    ensure(manifest.site_valid && manifest.complements_connected, || "site invalid".into())?;
    ensure(manifest.isotony_defect < TOL && manifest.locality_defect < TOL, || {
        format!("isotony {:e}, locality {:e}", manifest.isotony_defect, manifest.locality_defect)
    })?;
    ensure(manifest.irreducible, || "not irreducible".into())?;
    let worst = manifest.duality.iter().map(|d| d.local_in_dual_defect.max(d.dual_in_local_defect)).fold(0.0, f64::max);
    ensure(manifest.duality.len() == 8 && manifest.duality_holds_everywhere && worst < TOL, || {
        format!("duality worst {worst:e} over {} regions", manifest.duality.len())
    })?;
    // the check-net pipeline: document out, document in, full report
    let objects = f.standard_objects().map_err(err)?;
    let refs: Vec<(&str, &Amplimorphism)> = objects.iter().map(|(k, o)| (k.as_str(), o)).collect();
    let doc = NetSpecDocument::from_json(&NetSpecDocument::from_net(&f.net, &refs).to_json()).map_err(err)?;
    let report = doc.net(None).map_err(err)?.check();
    ensure(report.passed, || "reloaded net fails check".into())?;
    let elapsed = start.elapsed().as_secs_f64();
    ensure(elapsed < 10.0, || format!("took {elapsed:.1} s"))?;
    Ok(format!("8 regions, duality defect ≤ {worst:.1e}, {elapsed:.2} s"))
}

fn symmetry_suite(ctx: &Ctx) -> Outcome {
    let net = ctx.net();
    let tau = ctx.obj("rho11");
    let mut pairs = 0;
    let mut worst: f64 = 0.0;
    for (_, rho) in &ctx.objects {
        for (_, sigma) in &ctx.objects {
            let ax = symmetry::check_axioms(net, rho, sigma, tau).map_err(err)?;
            ensure(ax.worst() < TOL, || format!("({}, {}): {ax:?}", rho.label, sigma.label))?;
            worst = worst.max(ax.worst());
            pairs += 1;
        }
    }
    ensure(pairs >= 20, || format!("only {pairs} pairs"))?;
    // spacelike supports: ε is the flip of the multiplicity indices
    let mut flips = 0;
    for (a, b) in [("rho", "rho11"), ("rho+rho", "rho11+rho11"), ("rho+rho", "rho11"), ("rho11", "rho+rho")] {
        let (rho, sigma) = (ctx.obj(a), ctx.obj(b));
        let eps = symmetry::symmetry(net, rho, sigma).map_err(err)?.matrix;
        let theta = kron(&flip_oracle(rho.multiplicity, sigma.multiplicity), &eye(net.ambient_dim));
        let d = dist(&eps, &theta);
        ensure(d < TOL, || format!("ε({a}, {b}) differs from the flip by {d:e}"))?;
        flips += 1;
    }
    // two transport configurations: first-corner and last-corner transporters
    let f = &ctx.fixture;
    let mut config_worst: f64 = 0.0;
    for (cell, other) in [(GridBox::cell(0, 0), GridBox::cell(1, 1)), (GridBox::cell(0, 1), GridBox::cell(1, 0))] {
        let first = f.charged_morphism_anchored(&cell, 1, Anchor::First).map_err(err)?;
        let last = f.charged_morphism_anchored(&cell, 1, Anchor::Last).map_err(err)?;
        let sigma = f.charged_morphism_anchored(&other, 1, Anchor::Last).map_err(err)?;
        let e1 = symmetry::symmetry(net, &first, &sigma).map_err(err)?;
        let e2 = symmetry::symmetry(net, &last, &sigma).map_err(err)?;
        config_worst = config_worst.max(dist(&e1.matrix, &e2.matrix)).max(e1.discrepancy).max(e2.discrepancy);
    }
    ensure(config_worst < TOL, || format!("transport configurations differ by {config_worst:e}"))?;
    Ok(format!("{pairs} pairs worst {worst:.1e}; {flips} spacelike flips; configurations agree to {config_worst:.1e}"))
}

/// Flip matrix built from its action on product vectors: `u ⊗ v ↦ v ⊗ u`.
fn flip_oracle(n: usize, m: usize) -> Mat {
    let mut t = Mat::zeros(n * m, n * m);
    for j in 0..m {
        for i in 0..n {
            let mut u = Mat::zeros(m, 1);
            let mut v = Mat::zeros(n, 1);
            u[(j, 0)] = real(1.0);
            v[(i, 0)] = real(1.0);
            let src = kron(&u, &v);
            let dst = kron(&v, &u);
            t += dst * src.adjoint();
        }
    }
    t
}

fn permutation_statistics(ctx: &Ctx) -> Outcome {
    let net = ctx.net();
    let mut worst: f64 = 0.0;
    let mut checked = 0;
    for (id, rho) in &ctx.objects {
        for n in 2..=3 {
            let gens = symmetry::perm_generators(net, rho, n).map_err(err)?;
            let unit = power(net, rho, n).map_err(err)?.unit();
            let cox = symmetry::coxeter_defect(&gens, &unit);
            ensure(cox < TOL, || format!("{id}, n = {n}: relations off by {cox:e}"))?;
            worst = worst.max(cox);
        }
        for d in 1..=3 {
            let rho_d = power(net, rho, d).map_err(err)?;
            for kind in [SymmetrizerKind::Symmetric, SymmetrizerKind::Antisymmetric] {
                let p = symmetry::symmetrizer(net, rho, d, kind).map_err(err)?;
                let defect = dist(&(&p * &p), &p).max(dist(&p.adjoint(), &p)).max(intertwiner_defect(net, &p, &rho_d, &rho_d));
                ensure(defect < TOL, || format!("{id}: {kind:?} symmetrizer for d = {d} off by {defect:e}"))?;
                worst = worst.max(defect);
            }
        }
        checked += 1;
    }
    Ok(format!("{checked} objects, n ≤ 3, worst {worst:.1e}"))
}

fn statistics_parameter(ctx: &Ctx) -> Outcome {
    let net = ctx.net();
    let rho = ctx.obj("rho");
    let phi = left_inverse::from_simple(net, rho).map_err(err)?;
    let lambda = left_inverse::statistics_parameter(net, rho, &phi).map_err(err)?;
    ensure((lambda.value() - real(1.0)).norm() < TOL, || format!("λ = {lambda:?}"))?;
    let mut regions = 0;
    let mut spread: f64 = 0.0;
    for a in &net.site.regions {
        let moved = rho.transported(net, a).map_err(err)?;
        let phi_a = left_inverse::from_simple(net, &moved).map_err(err)?;
        let l = left_inverse::statistics_parameter(net, &moved, &phi_a).map_err(err)?;
        spread = spread.max((l.value() - lambda.value()).norm());
        regions += 1;
    }
    ensure(regions == 8 && spread < TOL, || format!("λ varies by {spread:e} over {regions} regions"))?;
    let mut formula: f64 = 0.0;
    for d in 2..=3 {
        let check = left_inverse::antisymmetrizer_formula(net, rho, &phi, d).map_err(err)?;
        // closed form evaluated independently: prod_{k<d} (1 - k λ) / d!
        let oracle = (1..d).map(|k| 1.0 - k as f64 * lambda.re).product::<f64>() / (1..=d).product::<usize>() as f64;
        let r = (check.lhs.value() - real(oracle)).norm() + check.lhs.residual;
        ensure(r < TOL && check.residual < TOL, || format!("d = {d}: {check:?}"))?;
        formula = formula.max(r);
    }
    Ok(format!("λ = {:.12} (residual {:.1e}), invariant over {regions} regions, formula worst {formula:.1e}", lambda.re, lambda.residual))
}

fn sum_left_inverse(net: &NetModel, rho: &Amplimorphism, sum_isometries: &[Mat], s: f64) -> Result<LeftInverse, String> {
    let phi = left_inverse::from_simple(net, rho).map_err(err)?;
    left_inverse::convex(s, &phi, &phi, &sum_isometries[0], &sum_isometries[1]).map_err(err)
}

fn simple_objects(ctx: &Ctx) -> Outcome {
    let net = ctx.net();
    let mut lines = Vec::new();
    for id in ["iota", "rho"] {
        let g = ctx.obj(id);
        let phi = left_inverse::from_simple(net, g).map_err(err)?;
        let r = left_inverse::check_simple(net, g, Some(&phi)).map_err(err)?;
        ensure(r.by_left_inverse == Some(true) && r.by_symmetry && r.by_square && r.sign == Some(1), || format!("{id}: {r:?}"))?;
        lines.push(format!("{id} simple (+1)"));
    }
    let rho = ctx.obj("rho");
    let (sum, w) = direct_sum(net, &[rho, rho]).map_err(err)?;
    let phi = sum_left_inverse(net, rho, &w, 0.5)?;
    let r = left_inverse::check_simple(net, &sum, Some(&phi)).map_err(err)?;
    ensure(r.by_left_inverse == Some(false) && !r.by_symmetry && !r.by_square, || format!("rho+rho: {r:?}"))?;
    lines.push(format!("rho+rho fails all three ((ρ²,ρ²) dim {})", r.square_commutant_dim));
    Ok(lines.join("; "))
}

fn functor_round_trip(ctx: &Ctx) -> Outcome {
    let net = ctx.net();
    let mut trip: f64 = 0.0;
    let mut coc: f64 = 0.0;
    for (id, rho) in &ctx.objects {
        let rt = presheaf::round_trip(net, &ctx.cache, rho).map_err(err)?;
        ensure(rt.object < TOL && rt.presheaf < TOL, || format!("{id}: round trip {:e}, {:e}", rt.object, rt.presheaf))?;
        trip = trip.max(rt.object).max(rt.presheaf);
        let c = presheaf::check_cocycle(net, rho).map_err(err)?;
        ensure(c.holds, || format!("{id}: cocycle worst {:e}", c.worst))?;
        coc = coc.max(c.worst);
    }
    let mut cases = 0;
    let mut tens: f64 = 0.0;
    for (a, b) in [("rho", "rho11"), ("rho", "rho"), ("iota", "rho"), ("rho11", "rho+rho")] {
        let r = presheaf::tensor_identity(net, &ctx.cache, ctx.obj(a), ctx.obj(b)).map_err(err)?;
        ensure(r.worst < TOL, || format!("({a}, {b}): tensor identity {:e} at {:?}", r.worst, r.worst_case))?;
        cases += r.cases;
        tens = tens.max(r.worst);
    }
    Ok(format!(
        "{} objects round trip ≤ {trip:.1e}, cocycle ≤ {coc:.1e}; tensor identity {cases} cases ≤ {tens:.1e}",
        ctx.objects.len()
    ))
}

fn left_inverse_calculus(ctx: &Ctx) -> Outcome {
    let net = ctx.net();
    let tol = net.tol;
    let rho = ctx.obj("rho");
    let rho11 = ctx.obj("rho11");
    let (sum, w) = direct_sum(net, &[rho, rho]).map_err(err)?;
    let phi = left_inverse::from_simple(net, rho).map_err(err)?;
    let psi = left_inverse::from_simple(net, rho11).map_err(err)?;
    let phi_sum = sum_left_inverse(net, rho, &w, 0.3)?;

    for (obj, li) in [(rho, &phi), (rho11, &psi), (&sum, &phi_sum)] {
        let r = left_inverse::check(net, obj, li);
        ensure(r.valid, || format!("{}: {r:?}", obj.label))?;
    }

    // family axioms on (ρσ, ρσ) with σ = ρ⊕ρ, whose commutant is M_2
    let rho_sigma = tensor(net, rho, &sum).map_err(err)?;
    let arrows = intertwiner_space(net, &rho_sigma, &rho_sigma);
    let ts = intertwiner_space(net, &sum, &sum);
    ensure(arrows.len() == 4 && ts.len() == 4, || format!("dims {} and {}", arrows.len(), ts.len()))?;
    let mut family: f64 = 0.0;
    let mut schwarz = f64::INFINITY;
    let mut adjoint: f64 = 0.0;
    for x in &arrows {
        for (t, s) in ts.iter().zip(ts.iter().rev()) {
            family = family.max(left_inverse::naturality_defect(rho, &phi, x, t, s));
        }
        family = family.max(left_inverse::amplification_defect(net, rho, &sum, rho11, &phi, x).map_err(err)?);
        let (a, m) = left_inverse::adjoint_and_schwarz(&phi, x);
        adjoint = adjoint.max(a);
        schwarz = schwarz.min(m);
    }
    let generic: Mat = arrows.iter().enumerate().map(|(k, x)| x * real(1.0 + k as f64)).fold(Mat::zeros(rho_sigma.size(), rho_sigma.size()), |a, b| a + b);
    let (a, m) = left_inverse::adjoint_and_schwarz(&phi, &generic);
    adjoint = adjoint.max(a);
    schwarz = schwarz.min(m);
    ensure(family < tol, || format!("family axioms off by {family:e}"))?;
    ensure(adjoint < tol && schwarz > -tol, || format!("adjoint {adjoint:e}, Schwarz eigenvalue {schwarz:e}"))?;

    let mult = left_inverse::multiplicativity_defect(net, rho, &phi, rho11, &psi).map_err(err)?;
    ensure(mult < tol, || format!("multiplicativity {mult:e}"))?;

    // compatibility of the presheaf calculus with the net calculus
    let cache = &ctx.cache;
    let hat = presheaf::simple_route(net, cache, rho).map_err(err)?;
    let (l_hat, fit) = presheaf::associated_left_inverse(net, rho, &hat).map_err(err)?;
    ensure(fit < tol, || format!("associated fit {fit:e}"))?;
    let rr = tensor(net, rho, rho).map_err(err)?;
    let composed_hat = presheaf::compose_presheaf(&hat, &hat).map_err(err)?;
    let (l_comp, fit_c) = presheaf::associated_left_inverse(net, &rr, &composed_hat).map_err(err)?;
    let compose_gap = presheaf::left_inverse_distance(net, &rr, &l_comp, &left_inverse::compose(&l_hat, &l_hat)).max(fit_c);

    let convex_hat = presheaf::convex_presheaf(0.3, &hat, &hat, &w[0], &w[1]).map_err(err)?;
    let (l_conv, fit_v) = presheaf::associated_left_inverse(net, &sum, &convex_hat).map_err(err)?;
    let net_convex = left_inverse::convex(0.3, &l_hat, &l_hat, &w[0], &w[1]).map_err(err)?;
    let convex_gap = presheaf::left_inverse_distance(net, &sum, &l_conv, &net_convex).max(fit_v);

    let e = &w[0] * w[0].adjoint();
    let gate = left_inverse::ScalarFit::of(&l_conv.apply(&e), &eye(net.ambient_dim));
    ensure((gate.value() - real(0.3)).norm() < tol, || format!("l(φ)(E) = {gate:?}"))?;
    let compressed_hat = presheaf::compress_presheaf(&convex_hat, &e, &w[0], tol).map_err(err)?;
    let (l_cmp, fit_p) = presheaf::associated_left_inverse(net, rho, &compressed_hat).map_err(err)?;
    let net_cmp = left_inverse::compress(&l_conv, &e, &w[0], tol).map_err(err)?;
    let compress_gap = presheaf::left_inverse_distance(net, rho, &l_cmp, &net_cmp).max(fit_p);
    let compat = compose_gap.max(convex_gap).max(compress_gap);
    ensure(compat < tol, || format!("compatibility: compose {compose_gap:e}, convex {convex_gap:e}, compress {compress_gap:e}"))?;

    Ok(format!(
        "family ≤ {family:.1e}, adjoint ≤ {adjoint:.1e}, Schwarz min eig {schwarz:.1e}, multiplicativity {mult:.1e}, compatibility ≤ {compat:.1e}"
    ))
}

fn conjugation_chain(ctx: &Ctx) -> Outcome {
    let net = ctx.net();
    let rho = ctx.obj("rho");
    let sweep = conjugate::solve_conjugate(net, rho, rho).map_err(err)?;
    let sol = sweep.solution.ok_or("no self-conjugate solution")?;
    ensure(sol.residuals.0 < TOL && sol.residuals.1 < TOL, || format!("residuals {:?}", sol.residuals))?;
    let std = conjugate::standardize(net, &sol).map_err(err)?;
    let st = conjugate::standardness(net, &std).map_err(err)?;
    ensure(st.standard && st.c.re > 0.0, || format!("{st:?}"))?;
    let chain = conjugate::verify_conjugation_theorems(net, &ctx.cache, &std, DMAX).map_err(err)?;
    ensure(chain.member && chain.aborted_at.is_none() && chain.stages.iter().all(|s| s.passed), || {
        format!("chain aborted at {:?}", chain.aborted_at)
    })?;
    let perturbed_r = &std.r + Mat::from_element(std.r.nrows(), std.r.ncols(), real(1e-3));
    let bad = ConjugateSolution::new(net, std.rho.clone(), std.rho_bar.clone(), perturbed_r, std.r_bar.clone()).map_err(err)?;
    let detected = bad.residuals.0.max(bad.residuals.1);
    let bad_chain = conjugate::verify_conjugation_theorems(net, &ctx.cache, &bad, DMAX).map_err(err)?;
    ensure(detected > 1e-4 && !bad_chain.member, || format!("perturbation residual only {detected:e}"))?;
    Ok(format!(
        "residuals {:.1e}, {:.1e}; standard c = {:.12}; {} stages pass; perturbed residual {detected:.1e} aborts at {:?}",
        std.residuals.0,
        std.residuals.1,
        st.c.re,
        chain.stages.len(),
        bad_chain.aborted_at.unwrap_or_default()
    ))
}

fn homogeneity(ctx: &Ctx) -> Outcome {
    let net = ctx.net();
    let rho = ctx.obj("rho");
    let f = presheaf::check_double_faithfulness(net, &ctx.cache, rho).map_err(err)?;
    ensure(f.by_kernel && f.by_central_support && f.consistent, || format!("{f:?}"))?;
    let h = presheaf::check_homogeneous(net, &ctx.cache, rho, DMAX).map_err(err)?;
    ensure(h.homogeneous && h.regions.len() == 8, || format!("failing {:?}", h.failing))?;
    let center = fixtures::named("z2-center", TOL).map_err(err)?;
    let cache = Commutants::new(&center.net).map_err(err)?;
    let bit = center.classical_compression().map_err(err)?;
    let b = presheaf::check_double_faithfulness(&center.net, &cache, &bit).map_err(err)?;
    ensure(!b.by_kernel && !b.by_central_support && b.consistent, || format!("bit0: {b:?}"))?;
    Ok(format!("rho doubly faithful by both tests, homogeneous on {} regions; bit0 fails both", h.regions.len()))
}

/// Every report the suite produces, serialized.
fn report_bundle() -> Result<Vec<String>, String> {
    let f = fixtures::named("z2", TOL).map_err(err)?;
    let net = &f.net;
    let cache = Commutants::new(net).map_err(err)?;
    let mut out = vec![serde_json::to_string(&f.manifest("z2")).map_err(err)?, serde_json::to_string(&net.check()).map_err(err)?];
    for (_, obj) in f.standard_objects().map_err(err)? {
        if obj.multiplicity > 1 {
            out.push(serde_json::to_string(&obj.check(net)).map_err(err)?);
            continue;
        }
        out.push(serde_json::to_string(&presheaf::check_cocycle(net, &obj).map_err(err)?).map_err(err)?);
        out.push(serde_json::to_string(&presheaf::round_trip(net, &cache, &obj).map_err(err)?).map_err(err)?);
        out.push(serde_json::to_string(&presheaf::check_relevant_membership(net, &cache, &obj, DMAX).map_err(err)?).map_err(err)?);
        let sweep = conjugate::solve_conjugate(net, &obj, &obj).map_err(err)?;
        out.push(serde_json::to_string(&sweep.summary()).map_err(err)?);
        if let Some(sol) = sweep.solution {
            let std = conjugate::standardize(net, &sol).map_err(err)?;
            out.push(serde_json::to_string(&std.summary()).map_err(err)?);
            let chain = conjugate::verify_conjugation_theorems(net, &cache, &std, DMAX).map_err(err)?;
            out.push(serde_json::to_string(&chain).map_err(err)?);
        }
    }
    Ok(out)
}

fn determinism() -> Outcome {
    let first = report_bundle()?;
    let second = report_bundle()?;
    exec::set_sequential(true);
    let sequential = report_bundle();
    exec::set_sequential(false);
    let sequential = sequential?;
    let bytes: usize = first.iter().map(String::len).sum();
    ensure(first == second, || "repeated runs differ".into())?;
    ensure(first == sequential, || "parallel and sequential runs differ".into())?;
    Ok(format!("{} reports, {bytes} bytes, identical across two parallel runs and one sequential run", first.len()))
}

fn main() {
    let mut failures = 0;
    let mut run = |n: usize, name: &str, f: &dyn Fn() -> Outcome| {
        let start = Instant::now();
        let outcome = f();
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("criterion {n:>2} PASS  {name}: {detail} [{secs:.1} s]"),
            Err(why) => {
                failures += 1;
                println!("criterion {n:>2} FAIL  {name}: {why} [{secs:.1} s]");
            }
        }
    };
    run(1, "net axioms and duality", &net_axioms);
    let ctx = (|| -> Result<Ctx, String> {
        let fixture = fixtures::named("z2", TOL).map_err(err)?;
        let cache = Commutants::new(&fixture.net).map_err(err)?;
        let mut objects = fixture.standard_objects().map_err(err)?;
        let rho11 = objects.iter().find(|(k, _)| k == "rho11").expect("rho11").1.clone();
        let (sum11, _) = direct_sum(&fixture.net, &[&rho11, &rho11]).map_err(err)?;
        objects.push(("rho11+rho11".into(), sum11.with_label("rho11+rho11")));
        Ok(Ctx { fixture, cache, objects })
    })();
    let ctx = match ctx {
        Ok(c) => c,
        Err(e) => {
            println!("fixture setup failed: {e}");
            std::process::exit(1);
        }
    };
    run(2, "symmetry axioms", &|| symmetry_suite(&ctx));
    run(3, "permutation statistics", &|| permutation_statistics(&ctx));
    run(4, "statistics parameter", &|| statistics_parameter(&ctx));
    run(5, "simple objects", &|| simple_objects(&ctx));
    run(6, "extension and restriction", &|| functor_round_trip(&ctx));
    run(7, "left-inverse calculus", &|| left_inverse_calculus(&ctx));
    run(8, "conjugation chain", &|| conjugation_chain(&ctx));
    run(9, "double faithfulness and homogeneity", &|| homogeneity(&ctx));
    run(10, "determinism", &determinism);
    if failures > 0 {
        println!("{failures} criteria failed");
        std::process::exit(1);
    }
}
