//! The `analyze`, `verify` and `laurent` commands.

use lemnilab_core::hyper::{dfun_length, dfun_ode_residual, DFunctionSpec};
use lemnilab_core::laurent::{cm_check, lower_estimate_check};
use lemnilab_core::moments::{
    asymptote_check, convexity_report, exp_convexity_kernel, hankel_from_moments, k_polynomial_check,
    length_derivatives, length_or_limit, phi_max_scan, traced_length, uniform_grid, Derivatives, PhiMax,
};
use lemnilab_core::{ComplexPoly, HankelReport, LaurentModel, LengthSample, LevelSet, Method, Tracer, Weight};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use crate::error::{CliError, CliResult};
use crate::spec::{Function, Problem, Region};
use crate::SCHEMA;

/// Distance kept from critical values when sampling a regular interval.
const INTERVAL_MARGIN: f64 = 0.2;
const CONVEXITY_POINTS: usize = 20;
const KERNEL_POINTS: usize = 5;

fn pair(z: lemnilab_core::Complex64) -> [f64; 2] {
    [z.re, z.im]
}

fn opt(x: f64) -> Value {
    if x.is_finite() {
        json!(x)
    } else {
        Value::Null
    }
}

fn function_json(f: &Function) -> Value {
    match f {
        Function::Polynomial(p) => json!({
            "kind": "polynomial",
            "degree": p.degree(),
            "coeffs": p.coeffs().iter().map(|c| pair(*c)).collect::<Vec<_>>(),
            "trivial": p.is_trivial(),
        }),
        Function::Catalog { f, region } => json!({
            "kind": "catalog",
            "name": f.name(),
            "window": f.window,
            "region": match region { Region::All => "all", Region::Principal => "principal" },
        }),
    }
}

fn critical_json(tracer: &Tracer<'_>) -> Value {
    let values = tracer.critical_values();
    json!({
        "values": values,
        "T": values.last().copied().map(opt).unwrap_or(Value::Null),
    })
}

/// Regular sub-intervals of `[lo, hi]`, kept `INTERVAL_MARGIN` away from the
/// critical values.
fn regular_windows(critical: &[f64], lo: f64, hi: f64) -> Vec<(f64, f64)> {
    let mut cuts = vec![f64::NEG_INFINITY];
    cuts.extend_from_slice(critical);
    cuts.push(f64::INFINITY);
    cuts.windows(2)
        .filter_map(|w| {
            let a = if w[0].is_finite() { lo.max(w[0] + INTERVAL_MARGIN) } else { lo };
            let b = if w[1].is_finite() { hi.min(w[1] - INTERVAL_MARGIN) } else { hi };
            (b - a > 1e-3).then_some((a, b))
        })
        .collect()
}

/// One per-level report row.
#[derive(Debug, Clone, Serialize)]
pub struct LevelReport {
    pub t: f64,
    #[serde(rename = "L")]
    pub length: f64,
    pub phi: Option<f64>,
    pub method: &'static str,
    pub err_estimate: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub derivatives: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub j_spread: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub hankel: Option<HankelSummary>,
    pub flags: Vec<&'static str>,
}

#[derive(Debug, Clone, Serialize)]
pub struct HankelSummary {
    pub p: usize,
    pub min_eig: f64,
    pub scale: f64,
    pub psd: bool,
    pub rank_one: bool,
}

impl From<&HankelReport> for HankelSummary {
    fn from(h: &HankelReport) -> Self {
        HankelSummary {
            p: h.p,
            min_eig: h.min_eigenvalue,
            scale: h.scale,
            psd: h.is_psd(1e-8),
            rank_one: h.is_rank_one(1e-8),
        }
    }
}

struct LevelResult {
    sample: LengthSample,
    derivatives: Option<Derivatives>,
    hankel: Option<HankelReport>,
    set: Option<LevelSet>,
}

fn run_level(problem: &Problem, t: f64, with_derivatives: bool) -> CliResult<LevelResult> {
    let tracer = problem.function.tracer(problem.options)?;
    let sample = length_or_limit(&tracer, t)?;
    let regular = sample.method == Method::Traced;
    let derivatives = if with_derivatives && regular {
        Some(length_derivatives(&tracer, t, 2 * problem.order, &problem.weight)?)
    } else {
        None
    };
    let hankel = match &derivatives {
        Some(d) if problem.selection.hankel => {
            Some(hankel_from_moments(t, problem.order, &d.values, d.j_spread.clone())?)
        }
        _ => None,
    };
    let set = if problem.selection.samples && regular { Some(tracer.level_set(t)?) } else { None };
    Ok(LevelResult { sample, derivatives, hankel, set })
}

fn level_report(problem: &Problem, r: &LevelResult, t_max: Option<f64>) -> LevelReport {
    let mut flags = vec![r.sample.method.as_str()];
    if let Some(tm) = t_max {
        flags.push(if r.sample.t > tm { "post_critical" } else { "pre_critical" });
    }
    if problem.weight != Weight::One {
        flags.push("weighted");
    }
    if let Some(h) = &r.hankel {
        flags.push(if h.is_psd(1e-8) { "hankel_psd" } else { "hankel_not_psd" });
    }
    LevelReport {
        t: r.sample.t,
        length: r.sample.length,
        phi: r.sample.phi,
        method: r.sample.method.as_str(),
        err_estimate: r.sample.err_estimate,
        derivatives: r.derivatives.as_ref().map(|d| d.values.clone()),
        j_spread: r.derivatives.as_ref().map(|d| d.j_spread.clone()),
        hankel: r.hankel.as_ref().map(HankelSummary::from),
        flags,
    }
}

/// Everything `analyze` produces.
#[derive(Debug, Clone)]
pub struct AnalyzeOutput {
    pub rows: Vec<LengthSample>,
    pub summary: Value,
    pub samples: Option<Vec<LevelSet>>,
}

pub fn analyze(problem: &Problem) -> CliResult<AnalyzeOutput> {
    if problem.levels.is_empty() {
        return Err(CliError::spec("no levels given (use `t`, `grid`, --t or --grid)"));
    }
    let sel = problem.selection;
    let with_derivatives = sel.derivatives || sel.hankel;
    let results: Vec<LevelResult> =
        problem.levels.par_iter().map(|&t| run_level(problem, t, with_derivatives)).collect::<CliResult<_>>()?;

    let tracer = problem.function.tracer(problem.options)?;
    let critical = tracer.critical_values().to_vec();
    let t_max = critical.last().copied();
    let reports: Vec<LevelReport> = results.iter().map(|r| level_report(problem, r, t_max)).collect();
    let (lo, hi) = (problem.levels[0], *problem.levels.last().unwrap_or(&problem.levels[0]));
    let band = problem.options.critical_band;
    let length = |t: f64| Ok(traced_length(&tracer, t)?.length);

    let mut summary = json!({
        "schema": SCHEMA,
        "command": "analyze",
        "function": function_json(&problem.function),
        "critical": critical_json(&tracer),
        "reports": reports,
        "warnings": problem.warnings,
    });

    if let Some(p) = problem.function.polynomial() {
        let windows = regular_windows(&critical, lo, hi);
        if sel.convexity {
            let mut out = Vec::new();
            for &(a, b) in &windows {
                let r = convexity_report((a, b), CONVEXITY_POINTS, p.degree(), &critical, band, length)?;
                out.push(json!({
                    "interval": [a, b],
                    "convex": r.convex,
                    "strictly_convex": r.strictly_convex,
                    "min_second_ln": r.second_ln.iter().copied().fold(f64::INFINITY, f64::min),
                    "min_second_phi": r.second_phi.iter().copied().fold(f64::INFINITY, f64::min),
                    "max_abs_second_phi": r.second_phi.iter().map(|v| v.abs()).fold(0.0, f64::max),
                }));
            }
            summary["convexity"] = json!(out);
        }
        if sel.kernel {
            let mut out = Vec::new();
            for &(a, b) in &windows {
                let k = exp_convexity_kernel(&uniform_grid(a, b, KERNEL_POINTS), &critical, band, length)?;
                out.push(json!({ "interval": [a, b], "min_eig": k.min_eigenvalue, "scale": k.scale }));
            }
            summary["kernel"] = json!(out);
        }
        if sel.asymptote {
            let model = LaurentModel::new(p, problem.laurent_n)?;
            summary["asymptote"] = if hi >= model.critical_level {
                let a = asymptote_check(&model, hi)?;
                json!({ "t": a.t, "deviation": a.deviation, "bound": opt(a.bound) })
            } else {
                Value::Null
            };
        }
        if sel.phi_scan && hi > lo {
            let count = problem.levels.len().clamp(CONVEXITY_POINTS, 200);
            let scan = phi_max_scan(&tracer, (lo, hi), count)?;
            let (location, at) = match scan.location {
                PhiMax::Degenerate => ("degenerate", Value::Null),
                PhiMax::AtCriticalValue(c) => ("critical_value", json!(c)),
                PhiMax::Interior(c) => ("window_end", json!(c)),
            };
            summary["phi_max"] = json!({ "argmax": scan.argmax, "max": scan.max, "location": location, "at": at });
        }
        if sel.k_polynomial && p.degree() >= 2 {
            let k = k_polynomial_check(&tracer)?;
            summary["k_polynomial"] = json!({
                "is_k_polynomial": k.is_k_polynomial,
                "trivial": k.trivial,
                "length_at_zero": k.length_at_zero.map(|s| s.length),
                "at_least_two_pi": k.at_least_two_pi,
            });
        }
    }

    let samples = sel.samples.then(|| results.iter().filter_map(|r| r.set.clone()).collect());
    Ok(AnalyzeOutput { rows: results.into_iter().map(|r| r.sample).collect(), summary, samples })
}

/// Outcome of one verified invariant.
#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: &'static str,
    pub measured: f64,
    pub threshold: f64,
    /// `"le"` (measured ≤ threshold), `"ge"` or `"gt"`.
    pub relation: &'static str,
    pub verdict: &'static str,
    #[serde(skip_serializing_if = "String::is_empty")]
    pub detail: String,
}

impl Check {
    fn le(name: &'static str, measured: f64, threshold: f64) -> Self {
        let verdict = if measured <= threshold { "pass" } else { "fail" };
        Check { name, measured, threshold, relation: "le", verdict, detail: String::new() }
    }

    fn ge(name: &'static str, measured: f64, threshold: f64) -> Self {
        let verdict = if measured >= threshold { "pass" } else { "fail" };
        Check { name, measured, threshold, relation: "ge", verdict, detail: String::new() }
    }

    fn gt(name: &'static str, measured: f64, threshold: f64) -> Self {
        let verdict = if measured > threshold { "pass" } else { "fail" };
        Check { name, measured, threshold, relation: "gt", verdict, detail: String::new() }
    }

    fn degenerate(mut self, holds: bool) -> Self {
        self.verdict = if holds { "degenerate-pass" } else { "fail" };
        self
    }

    fn detail(mut self, d: impl Into<String>) -> Self {
        self.detail = d.into();
        self
    }

    pub fn passed(&self) -> bool {
        self.verdict != "fail"
    }
}

#[derive(Debug, Clone)]
pub struct VerifyOutput {
    pub checks: Vec<Check>,
    pub summary: Value,
}

impl VerifyOutput {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(Check::passed)
    }
}

fn default_levels(problem: &Problem, tracer: &Tracer<'_>) -> Vec<f64> {
    if !problem.levels.is_empty() {
        return problem.levels.clone();
    }
    match &problem.function {
        Function::Polynomial(_) => vec![tracer.critical_values().last().copied().unwrap_or(0.0) + 1.0],
        Function::Catalog { .. } => vec![-1.0],
    }
}

pub fn verify(problem: &Problem) -> CliResult<VerifyOutput> {
    let tracer = problem.function.tracer(problem.options)?;
    let levels = default_levels(problem, &tracer);
    let sets: Vec<LevelSet> = levels.iter().map(|&t| tracer.level_set(t)).collect::<Result<_, _>>()?;
    let mut checks = Vec::new();

    let bad_winding = sets
        .iter()
        .filter(|s| {
            s.is_partial()
                || !s.components.iter().all(|c| c.winding_verified)
                || problem.function.degree().is_some_and(|n| s.total_winding() != n)
        })
        .count();
    checks.push(Check::le("winding", bad_winding as f64, 0.0).detail("levels whose winding or zero count disagrees"));

    match &problem.function {
        Function::Polynomial(p) => verify_polynomial(problem, p, &tracer, &levels, &mut checks)?,
        Function::Catalog { f, .. } => {
            let spec = DFunctionSpec::for_catalog(f.kind)?;
            let grid = uniform_grid(-3.0, -0.5, 26);
            checks.push(Check::le("dfunction_ode_residual", dfun_ode_residual(&spec, &grid)?, 1e-9));
            let principal = Function::Catalog { f: f.clone(), region: Region::Principal };
            let pt = principal.tracer(problem.options)?;
            let mut worst = 0.0f64;
            let mut used = levels.iter().copied().filter(|t| *t <= 0.0).collect::<Vec<_>>();
            if used.is_empty() {
                used.push(-1.0);
            }
            for t in used {
                let traced = traced_length(&pt, t)?.length;
                let closed = dfun_length(&spec, t)?;
                worst = worst.max((traced - closed).abs() / closed);
            }
            checks.push(
                Check::le("dfunction_closed_form", worst, 1e-5).detail("principal region, traced vs hypergeometric"),
            );
        }
    }

    let summary = json!({
        "schema": SCHEMA,
        "command": "verify",
        "function": function_json(&problem.function),
        "critical": critical_json(&tracer),
        "levels": levels,
        "checks": checks,
        "passed": checks.iter().all(Check::passed),
        "warnings": problem.warnings,
    });
    Ok(VerifyOutput { checks, summary })
}

fn verify_polynomial(
    problem: &Problem,
    p: &ComplexPoly,
    tracer: &Tracer<'_>,
    levels: &[f64],
    checks: &mut Vec<Check>,
) -> CliResult<()> {
    let trivial = p.is_trivial();
    let critical = tracer.critical_values().to_vec();
    let band = problem.options.critical_band;
    let length = |t: f64| Ok(traced_length(tracer, t)?.length);

    let derivs: Vec<Derivatives> = levels
        .par_iter()
        .map(|&t| {
            let tr = problem.function.tracer(problem.options)?;
            Ok(length_derivatives(&tr, t, 2 * problem.order, &problem.weight)?)
        })
        .collect::<CliResult<_>>()?;
    let spread = derivs.iter().flat_map(|d| d.j_spread.iter().copied()).fold(0.0, f64::max);
    checks.push(Check::le("j_independence", spread, 1e-6));

    let hankels: Vec<HankelReport> = derivs
        .iter()
        .map(|d| hankel_from_moments(d.t, problem.order, &d.values, d.j_spread.clone()))
        .collect::<Result<_, _>>()?;
    let min_rel = hankels.iter().map(|h| h.min_eigenvalue / h.scale).fold(f64::INFINITY, f64::min);
    let psd = Check::ge("hankel_psd", min_rel, -1e-8).detail(format!("order p = {}", problem.order));
    checks.push(if trivial { psd.degenerate(hankels.iter().all(|h| h.is_rank_one(1e-8))) } else { psd });

    let (lo, hi) = (levels[0], levels[levels.len() - 1]);
    let (lo, hi) = if hi - lo < 1.0 { (lo - 1.0, hi + 1.0) } else { (lo, hi) };
    let windows = regular_windows(&critical, lo, hi);
    if !windows.is_empty() {
        let mut min_second = f64::INFINITY;
        let mut flat = 0.0f64;
        let mut min_kernel = f64::INFINITY;
        for &(a, b) in &windows {
            let r = convexity_report((a, b), CONVEXITY_POINTS, p.degree(), &critical, band, length)?;
            min_second = r.second_ln.iter().copied().fold(min_second, f64::min);
            flat = r.second_phi.iter().map(|v| v.abs()).fold(flat, f64::max);
            let k = exp_convexity_kernel(&uniform_grid(a, b, KERNEL_POINTS), &critical, band, length)?;
            min_kernel = min_kernel.min(k.min_eigenvalue / k.scale);
        }
        let conv = Check::gt("strict_convexity", min_second, 0.0)
            .detail(format!("{} regular window(s), second differences of ln L", windows.len()));
        checks.push(if trivial { conv.degenerate(flat <= 1e-9) } else { conv });
        checks.push(Check::ge("exp_convexity_kernel", min_kernel, -1e-7));
    }

    let model = LaurentModel::new(p, problem.laurent_n)?;
    let t_top = critical.last().copied().unwrap_or(0.0);
    let mut post: Vec<f64> = levels.iter().copied().filter(|t| *t >= t_top + 1.0).collect();
    if post.is_empty() {
        post.push(t_top + 2.0);
    }
    let mut worst = 0.0f64;
    for &t in &post {
        let tail = model.tail_value(t);
        let traced = traced_length(tracer, t)?.length;
        worst = worst.max((traced - tail.value).abs() / traced);
    }
    checks.push(Check::le("laurent_tail", worst, 1e-8).detail(format!("N = {}", problem.laurent_n)));

    let base = if model.critical_level.is_finite() { model.critical_level } else { 0.0 };
    let low = lower_estimate_check(p, &model, &uniform_grid(base, base + 5.0, 21))?;
    let margin = low.grid.iter().map(|(_, h)| h - low.bound).fold(f64::INFINITY, f64::min);
    let le = Check::ge("lower_estimate", margin, -1e-9).detail(format!("decreasing: {}", low.decreasing));
    checks.push(if low.decreasing { le } else { Check { verdict: "fail", ..le } });

    let cm = cm_check(&model, &uniform_grid(base + 0.5, base + 5.0, 19), 6)?;
    checks.push(Check::ge(
        "complete_monotonicity",
        cm.min_signed.iter().copied().fold(f64::INFINITY, f64::min),
        -1e-10,
    ));

    let a = asymptote_check(&model, base + 5.0 * p.degree() as f64)?;
    checks.push(Check::le("asymptote", a.deviation, 1e-6).detail(format!("at t = {}", a.t)));
    Ok(())
}

/// Laurent model dump.
pub fn laurent(problem: &Problem) -> CliResult<(Value, LaurentModel)> {
    let p = problem.function.polynomial().ok_or_else(|| CliError::spec("laurent needs a polynomial input"))?;
    let model = LaurentModel::new(p, problem.laurent_n)?;
    let value = json!({
        "schema": SCHEMA,
        "command": "laurent",
        "n": model.n,
        "N": model.truncation,
        "c": model.c.iter().map(|c| pair(*c)).collect::<Vec<_>>(),
        "T": opt(model.critical_level),
        "atoms": model.atoms.iter().map(|(x, w)| [*x, *w]).collect::<Vec<_>>(),
    });
    Ok((value, model))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn windows_avoid_critical_values() {
        let w = regular_windows(&[0.0], -3.0, 3.0);
        assert_eq!(w, vec![(-3.0, -0.2), (0.2, 3.0)]);
        assert!(regular_windows(&[0.0], -0.1, 0.1).is_empty());
        assert_eq!(regular_windows(&[], 1.0, 2.0), vec![(1.0, 2.0)]);
    }
}
