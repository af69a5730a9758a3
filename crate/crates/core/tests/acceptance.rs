//! Acceptance gate: one check per numbered criterion, each printing a single
//! PASS/FAIL line. The test fails if any criterion fails.

use std::io::Write;
use std::time::{Duration, Instant};

use lemnilab_core::hyper::{dfun_length, dfun_ode_residual, dfun_ode_residual_sampled, gamma, DFunctionSpec};
use lemnilab_core::jets::{CatalogKind, CatalogParams};
use lemnilab_core::laurent::{cm_check, invert_at_infinity, lower_estimate_check, second_coefficient, sqrt_phi_prime};
use lemnilab_core::moments::{
    asymptote_check, convexity_report, exp_convexity_kernel, hankel_from_moments, length_derivatives, length_or_limit,
    traced_length, uniform_grid, Method,
};
use lemnilab_core::{catalog, Complex64, ComplexPoly, LaurentModel, TraceOptions, Tracer, Weight, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const TAU: f64 = std::f64::consts::TAU;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn length(p: &ComplexPoly, t: f64) -> f64 {
    let tr = Tracer::new(p, TraceOptions::default()).expect("tracer");
    traced_length(&tr, t).expect("traced length").length
}

/// Monic polynomial with roots drawn uniformly from the disk of radius 1.5.
fn random_poly(rng: &mut ChaCha8Rng, max_degree: usize) -> ComplexPoly {
    let n = rng.gen_range(2..=max_degree);
    let roots: Vec<Complex64> = (0..n)
        .map(|_| {
            let r = 1.5 * rng.gen::<f64>().sqrt();
            Complex64::from_polar(r, TAU * rng.gen::<f64>())
        })
        .collect();
    ComplexPoly::from_roots(&roots).expect("roots")
}

/// Level at distance at least `margin` from every critical value.
fn random_regular_level(rng: &mut ChaCha8Rng, critical: &[f64], margin: f64) -> f64 {
    let lo = critical.iter().copied().fold(0.0f64, f64::min) - 2.0;
    let hi = critical.iter().copied().fold(0.0f64, f64::max) + 2.0;
    loop {
        let t = rng.gen_range(lo..hi);
        if critical.iter().all(|c| (t - c).abs() >= margin) {
            return t;
        }
    }
}

struct SuiteCase {
    p: ComplexPoly,
    t: f64,
    hankel_min: f64,
    hankel_scale: f64,
    spread: f64,
}

fn hankel_suite() -> Vec<SuiteCase> {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    (0..20)
        .map(|_| {
            let p = random_poly(&mut rng, 5);
            let tr = Tracer::new(&p, TraceOptions::default()).expect("tracer");
            let t = random_regular_level(&mut rng, tr.critical_values(), 0.1);
            let d = length_derivatives(&tr, t, 6, &Weight::One).expect("derivatives");
            let h = hankel_from_moments(t, 3, &d.values, d.j_spread.clone()).expect("hankel");
            let spread = d.j_spread[..=4].iter().copied().fold(0.0, f64::max);
            SuiteCase { p, t, hankel_min: h.min_eigenvalue, hankel_scale: h.scale, spread }
        })
        .collect()
}

fn criterion_1() -> Outcome {
    let mut worst_len = 0.0f64;
    let mut worst_phi = 0.0f64;
    for n in 1..=3usize {
        for a in [c(0.0, 0.0), c(1.0, 1.0)] {
            let p = ComplexPoly::from_roots(&vec![a; n]).unwrap();
            for t in [-1.0, 0.0, 1.0] {
                let l = length(&p, t);
                worst_len = worst_len.max(rel(l, TAU * (t / n as f64).exp()));
                worst_phi = worst_phi.max((l.ln() - t / n as f64 - TAU.ln()).abs());
            }
        }
    }
    outcome(
        worst_len <= 1e-8 && worst_phi <= 1e-9,
        format!("max rel length error {worst_len:.2e} (<= 1e-8), max |Φ - ln 2π| {worst_phi:.2e} (<= 1e-9)"),
    )
}

fn criterion_2() -> Outcome {
    let p = ComplexPoly::from_real(&[1.0, 0.0, -1.0]);
    let model = LaurentModel::new(&p, 32).unwrap();
    let above = length(&p, 1.0);
    let tail = model.tail_length(1.0, 1e-10).unwrap();
    let below = length(&p, -1.0);
    let spec = DFunctionSpec::for_catalog(CatalogKind::OneMinusZn { n: 2 }).unwrap();
    let closed = 2.0 * dfun_length(&spec, -1.0).unwrap();
    let (e1, e2) = (rel(above, tail), rel(below, closed));
    outcome(
        e1 <= 1e-8 && e2 <= 1e-6,
        format!("t=1 traced {above:.12} vs tail {tail:.12} (rel {e1:.1e}); t=-1 traced {below:.10} vs closed form {closed:.10} (rel {e2:.1e})"),
    )
}

fn criterion_3() -> Outcome {
    let c2 = |p: &ComplexPoly| sqrt_phi_prime(&invert_at_infinity(p, 16).unwrap()).unwrap()[2];
    let two = ComplexPoly::from_real(&[1.0, 0.0, -1.0]);
    let three = ComplexPoly::from_real(&[1.0, 0.0, 1.0, 0.0]);
    let (a, b) = (c2(&two), c2(&three));
    let e_two = (a - c(-0.25, 0.0)).norm();
    let e_three = (b - c(1.0 / 6.0, 0.0)).norm();
    let formula = (a - second_coefficient(&two)).norm().max((b - second_coefficient(&three)).norm());
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut exact_zero = true;
    for _ in 0..10 {
        let n = rng.gen_range(2..=6);
        let mut coeffs = vec![c(1.0, 0.0)];
        coeffs.extend((0..n).map(|_| c(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0))));
        let cs = sqrt_phi_prime(&invert_at_infinity(&ComplexPoly::new(coeffs), 24).unwrap()).unwrap();
        exact_zero &= cs[1] == c(0.0, 0.0);
    }
    outcome(
        e_two <= 1e-12 && e_three <= 1e-12 && formula <= 1e-12 && exact_zero,
        format!(
            "c₋₂(z²-1) = {:.15} (err {e_two:.1e}); c₋₂(z³+z) = {:.15} = ((n-1)a₁²-2na₂)/(4n²) with sign (err {e_three:.1e}); c₋₁ = 0 exactly on 10 random: {exact_zero}",
            a.re, b.re
        ),
    )
}

fn criterion_4() -> Outcome {
    let p = ComplexPoly::from_real(&[1.0, 0.0, -1.0]);
    let tr = Tracer::new(&p, TraceOptions::default()).unwrap();
    let s = length_or_limit(&tr, 0.0).unwrap();
    let oracle = TAU * gamma(0.5) / (gamma(0.75) * gamma(0.75));
    let e = rel(s.length, oracle);
    outcome(
        s.method == Method::Extrapolated && e <= 1e-2 && s.length >= TAU && s.length <= 9.173 * 2.0,
        format!(
            "extrapolated {:.6} vs Gauss limit {oracle:.6} (rel {e:.1e}, <= 1e-2); 2π <= value <= 9.173·n",
            s.length
        ),
    )
}

fn criterion_5(suite: &[SuiteCase]) -> Outcome {
    let worst = suite.iter().map(|s| s.hankel_min / s.hankel_scale).fold(f64::INFINITY, f64::min);
    let p = ComplexPoly::from_real(&[1.0, 0.5, -1.0, 0.25]);
    let tr = Tracer::new(&p, TraceOptions::default()).unwrap();
    let t = suite[0].t.max(tr.critical_values().iter().copied().fold(f64::NEG_INFINITY, f64::max) + 0.3);
    let z = Weight::Poly(ComplexPoly::identity());
    let d = length_derivatives(&tr, t, 6, &z).unwrap();
    let h = hankel_from_moments(t, 3, &d.values, d.j_spread).unwrap();
    let wz = h.min_eigenvalue / h.scale;
    outcome(
        worst >= -1e-8 && wz >= -1e-8,
        format!("min λ/‖H‖ over 20 random (p=3, w=1): {worst:.2e}; w=z: {wz:.2e} (>= -1e-8)"),
    )
}

fn criterion_6(suite: &[SuiteCase]) -> Outcome {
    let worst = suite.iter().map(|s| s.spread).fold(0.0, f64::max);
    let degrees: Vec<usize> = suite.iter().map(|s| s.p.degree()).collect();
    outcome(worst <= 1e-6, format!("max relative j-spread for k <= 4: {worst:.2e} (<= 1e-6); degrees {degrees:?}"))
}

fn criterion_7() -> Outcome {
    let p = ComplexPoly::from_real(&[1.0, 0.0, -1.0]);
    let tr = Tracer::new(&p, TraceOptions::default()).unwrap();
    let t = 1.0;
    let d1 = length_derivatives(&tr, t, 1, &Weight::One).unwrap().values[1];
    let errs: Vec<f64> = [1e-2, 5e-3, 2.5e-3]
        .iter()
        .map(|h| {
            let fd = (length(&p, t + h) - length(&p, t - h)) / (2.0 * h);
            (d1 - fd).abs()
        })
        .collect();
    let orders: Vec<f64> = errs.windows(2).map(|w| (w[0] / w[1]).log2()).collect();
    let last = errs[2] / d1.abs();
    outcome(
        orders.iter().all(|o| *o >= 1.8) && last <= 1e-4,
        format!(
            "FD errors {errs:?}, observed orders {orders:.3?} (>= 1.8), final rel {last:.1e} (<= 1e-4)",
            errs = errs.iter().map(|e| format!("{e:.2e}")).collect::<Vec<_>>()
        ),
    )
}

fn criterion_8() -> Outcome {
    let ln2 = 2f64.ln();
    let cases = [
        (ComplexPoly::from_real(&[1.0, 0.0, -1.0]), vec![(-3.0, -0.2), (0.2, 3.0)]),
        (ComplexPoly::from_real(&[1.0, 0.0, -3.0, 0.0]), vec![(ln2 - 3.0, ln2 - 0.2), (ln2 + 0.2, ln2 + 3.0)]),
    ];
    let mut strict = true;
    let mut min_second = f64::INFINITY;
    for (p, intervals) in &cases {
        let tr = Tracer::new(p, TraceOptions::default()).unwrap();
        for iv in intervals {
            let r =
                convexity_report(
                    *iv,
                    20,
                    p.degree(),
                    tr.critical_values(),
                    1e-6,
                    |t| Ok(traced_length(&tr, t)?.length),
                )
                .unwrap();
            strict &= r.strictly_convex;
            min_second = r.second_ln.iter().chain(&r.second_phi).copied().fold(min_second, f64::min);
        }
    }
    let trivial = ComplexPoly::from_roots(&[c(0.5, -0.5); 3]).unwrap();
    let tr = Tracer::new(&trivial, TraceOptions::default()).unwrap();
    let r = convexity_report((-2.0, 2.0), 20, 3, tr.critical_values(), 1e-6, |t| Ok(traced_length(&tr, t)?.length))
        .unwrap();
    let flat = r.second_phi.iter().map(|d| d.abs()).fold(0.0, f64::max);
    outcome(
        strict && flat <= 1e-9,
        format!(
            "all second differences > 0: {strict} (smallest {min_second:.2e}); trivial max |Δ²Φ| {flat:.1e} (<= 1e-9)"
        ),
    )
}

fn criterion_9() -> Outcome {
    let p = ComplexPoly::from_real(&[1.0, 0.0, -1.0]);
    let tr = Tracer::new(&p, TraceOptions::default()).unwrap();
    let mut worst = f64::INFINITY;
    for (a, b) in [(-2.5, -0.5), (0.5, 2.5)] {
        let k = exp_convexity_kernel(&uniform_grid(a, b, 5), tr.critical_values(), 1e-6, |t| {
            Ok(traced_length(&tr, t)?.length)
        })
        .unwrap();
        worst = worst.min(k.min_eigenvalue / k.scale);
    }
    outcome(worst >= -1e-7, format!("min λ/scale of 5×5 midpoint kernels: {worst:.2e} (>= -1e-7)"))
}

fn criterion_10() -> Outcome {
    let a = asymptote_check(&LaurentModel::new(&ComplexPoly::from_real(&[1.0, 0.0, -1.0]), 64).unwrap(), 20.0).unwrap();
    let b = asymptote_check(&LaurentModel::new(&ComplexPoly::from_real(&[1.0, 0.0, -3.0, 0.0]), 64).unwrap(), 30.0)
        .unwrap();
    outcome(
        a.deviation <= 1e-8 && b.deviation <= 1e-6,
        format!("|Φ - ln 2π|: z²-1 at 20 {:.2e} (<= 1e-8), z³-3z at 30 {:.2e} (<= 1e-6)", a.deviation, b.deviation),
    )
}

fn criterion_11() -> Outcome {
    let mut pass = true;
    let mut details = Vec::new();
    for p in [ComplexPoly::from_real(&[1.0, 0.0, -1.0]), ComplexPoly::from_real(&[1.0, 0.0, 1.0, 0.0])] {
        let m = LaurentModel::new(&p, 256).unwrap();
        let grid = uniform_grid(m.critical_level, m.critical_level + 5.0, 21);
        let r = lower_estimate_check(&p, &m, &grid).unwrap();
        let c2 = m.c[2].norm_sqr();
        let last = r.grid.last().unwrap().1;
        let ok = r.decreasing && rel(last, c2) <= 0.1;
        pass &= ok;
        details.push(format!("deg {}: decreasing {} h(T+5) {last:.6} vs |c₋₂|² {c2:.6}", p.degree(), r.decreasing));
    }
    outcome(pass, details.join("; "))
}

fn criterion_12(suite: &[SuiteCase]) -> Outcome {
    let mut worst = f64::INFINITY;
    for s in suite {
        let m = LaurentModel::new(&s.p, 64).unwrap();
        let grid = uniform_grid(m.critical_level + 0.5, m.critical_level + 5.0, 19);
        let r = cm_check(&m, &grid, 6).unwrap();
        worst = worst.min(r.min_signed.iter().copied().fold(f64::INFINITY, f64::min));
    }
    outcome(worst >= -1e-10, format!("min (-1)^k d^k(e^(-t/n)L) over 20 polynomials, k <= 6: {worst:.2e} (>= -1e-10)"))
}

fn criterion_13() -> Outcome {
    let grid = uniform_grid(-3.0, -0.5, 26);
    let mut worst = 0.0f64;
    for kind in [CatalogKind::OneMinusZn { n: 2 }, CatalogKind::Sin, CatalogKind::Tanh, CatalogKind::ExpPlusOne] {
        let spec = DFunctionSpec::for_catalog(kind).unwrap();
        worst = worst.max(dfun_ode_residual(&spec, &grid).unwrap());
    }
    let f = catalog("sin", CatalogParams::default()).unwrap();
    let tr = Tracer::with_zeros(&f, vec![Zero { z: c(0.0, 0.0), multiplicity: 1 }], TraceOptions::default()).unwrap();
    let samples: Vec<(f64, f64)> =
        uniform_grid(-3.0, -0.5, 101).into_iter().map(|t| (t, traced_length(&tr, t).unwrap().length)).collect();
    let sin = DFunctionSpec::for_catalog(CatalogKind::Sin).unwrap();
    let traced = dfun_ode_residual_sampled(&sin, &samples).unwrap();
    let agree = samples.iter().map(|&(t, l)| rel(l, dfun_length(&sin, t).unwrap())).fold(0.0, f64::max);
    outcome(
        worst <= 1e-9 && traced <= 1e-3 && agree <= 1e-5,
        format!("closed-form residual over four rows {worst:.2e} (<= 1e-9); traced sin FD residual {traced:.2e} (<= 1e-3); traced vs closed form {agree:.1e} (<= 1e-5)"),
    )
}

fn criterion_14() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    let mut worst_len = 0.0f64;
    let mut worst_phi = 0.0f64;
    for _ in 0..10 {
        let p = random_poly(&mut rng, 4);
        let n = p.degree() as f64;
        let alpha = rng.gen_range(-1.0..1.0);
        let tr = Tracer::new(&p, TraceOptions::default()).unwrap();
        let s = random_regular_level(&mut rng, tr.critical_values(), 0.05);
        let beta = s - alpha;
        let q = p.dilate(alpha);
        let lp = length(&p, alpha + beta);
        let lq = length(&q, beta);
        worst_len = worst_len.max(rel(lq, (-alpha / n).exp() * lp));
        let (phi_p, phi_q) = (lp.ln() - (alpha + beta) / n, lq.ln() - beta / n);
        worst_phi = worst_phi.max((phi_p - phi_q).abs());
    }
    outcome(
        worst_len <= 1e-8 && worst_phi <= 1e-8,
        format!("max rel scaling error {worst_len:.2e} (<= 1e-8), max Φ shift error {worst_phi:.2e} (<= 1e-8)"),
    )
}

fn timed<F: FnOnce() -> Outcome>(f: F) -> (Outcome, Duration) {
    let start = Instant::now();
    let o = f();
    (o, start.elapsed())
}

#[test]
fn acceptance() {
    let mut results: Vec<(usize, &str, Outcome, Duration, Option<f64>)> = Vec::new();
    let mut push = |i, name, (o, d): (Outcome, Duration), limit: Option<f64>| results.push((i, name, o, d, limit));

    push(1, "trivial polynomial exactness", timed(criterion_1), Some(1.0));
    push(2, "three-way agreement for z²-1", timed(criterion_2), Some(5.0));
    push(3, "Laurent coefficients", timed(criterion_3), None);
    push(4, "singular-level limit", timed(criterion_4), None);
    let start = Instant::now();
    let suite = hankel_suite();
    let suite_time = start.elapsed();
    let (o, d) = timed(|| criterion_5(&suite));
    push(5, "Hankel positivity", (o, d + suite_time), Some(60.0));
    push(6, "j-independence", timed(|| criterion_6(&suite)), None);
    push(7, "derivatives vs finite differences", timed(criterion_7), None);
    push(8, "strict convexity", timed(criterion_8), None);
    push(9, "exponential convexity", timed(criterion_9), None);
    push(10, "asymptote", timed(criterion_10), None);
    push(11, "lower estimate", timed(criterion_11), None);
    push(12, "complete monotonicity", timed(|| criterion_12(&suite)), None);
    push(13, "D-function ODE residual", timed(criterion_13), None);
    push(14, "dilatation covariance", timed(criterion_14), None);

    let mut failed = Vec::new();
    for (i, name, o, d, limit) in &results {
        let in_time = limit.is_none_or(|l| d.as_secs_f64() < l);
        let pass = o.pass && in_time;
        let budget = limit.map(|l| format!(", budget {l}s")).unwrap_or_default();
        let _ = writeln!(
            std::io::stderr(),
            "criterion {i:>2} {} {name}: {} [{:.2}s{budget}]",
            if pass { "PASS" } else { "FAIL" },
            o.detail,
            d.as_secs_f64()
        );
        if !pass {
            failed.push(*i);
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
