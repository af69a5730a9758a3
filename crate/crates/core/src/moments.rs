//! Analysis of length functions `L_w(t) = ∫_{E(t)} |w|² |dz|`.
//!
//! Derivatives come from the iterates of `G_f`: `L_w^{(k)}(t) = ⟨w_[j], w_[k-j]⟩_t`
//! for every `0 ≤ j ≤ k`. The derivatives at a fixed level form a Hamburger
//! moment sequence, so their Hankel matrices are positive semidefinite.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::laurent::LaurentModel;
use crate::operator::{IterateTower, Weight};
use crate::prelude::*;
use crate::tracer::Tracer;
use crate::{Error, Result};

pub const MAX_DERIVATIVE_ORDER: usize = 8;

/// Offsets from a critical value used for one-sided extrapolation.
pub const SINGULAR_OFFSETS: [f64; 3] = [1e-2, 1e-3, 1e-4];

/// How a length value was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Traced,
    TailFormula,
    Extrapolated,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::Traced => "traced",
            Method::TailFormula => "tail_formula",
            Method::Extrapolated => "extrapolated",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LengthSample {
    pub t: f64,
    pub length: f64,
    /// `ln L - t/n` (polynomials only).
    pub phi: Option<f64>,
    pub method: Method,
    pub err_estimate: f64,
}

impl LengthSample {
    fn new(t: f64, length: f64, degree: Option<usize>, method: Method, err_estimate: f64) -> Self {
        let phi = degree.map(|n| length.ln() - t / n as f64);
        Self { t, length, phi, method, err_estimate }
    }
}

fn degree_of(tracer: &Tracer<'_>) -> Option<usize> {
    tracer.function().as_polynomial().map(|p| p.degree())
}

/// Total traced length of the level set.
pub fn traced_length(tracer: &Tracer<'_>, t: f64) -> Result<LengthSample> {
    let set = tracer.level_set(t)?;
    if let Some((_, e)) = set.failures.first() {
        return Err(e.clone());
    }
    Ok(LengthSample::new(t, set.total_length, degree_of(tracer), Method::Traced, set.length_error()))
}

/// Length from the exponential-sum formula (for `t ≥ T(P)`), refusing when
/// its truncation bound exceeds `tolerance`.
pub fn tail_length_sample(model: &LaurentModel, t: f64, tolerance: f64) -> Result<LengthSample> {
    if t < model.critical_level {
        return Err(Error::InvalidInput("tail formula needs t >= T(P)"));
    }
    let length = model.tail_length(t, tolerance)?;
    let bound = model.tail_value(t).bound;
    Ok(LengthSample::new(t, length, Some(model.n), Method::TailFormula, bound))
}

/// One-sided limit of a length function at a critical value from values at
/// `T ± ε`, `ε ∈ SINGULAR_OFFSETS`, fitted by `L₀ + a√ε + bε`.
pub fn extrapolate_singular<L>(mut length: L, critical: f64, side: f64) -> Result<(f64, f64)>
where
    L: FnMut(f64) -> Result<f64>,
{
    let sign = if side < 0.0 { -1.0 } else { 1.0 };
    let mut rows = [[0.0; 3]; 3];
    let mut rhs = [0.0; 3];
    for (i, eps) in SINGULAR_OFFSETS.iter().enumerate() {
        rows[i] = [1.0, eps.sqrt(), *eps];
        rhs[i] = length(critical + sign * eps)?;
    }
    let m = nalgebra::Matrix3::from_fn(|i, j| rows[i][j]);
    let v = nalgebra::Vector3::from_fn(|i, _| rhs[i]);
    let sol = m.lu().solve(&v).ok_or(Error::InvalidInput("singular extrapolation system"))?;
    // Two-term fit on the two smallest offsets as a consistency estimate.
    let (e1, e2) = (SINGULAR_OFFSETS[1], SINGULAR_OFFSETS[2]);
    let slope = (rhs[1] - rhs[2]) / (e1.sqrt() - e2.sqrt());
    let crude = rhs[2] - slope * e2.sqrt();
    Ok((sol[0], (sol[0] - crude).abs()))
}

/// Length at `t`, extrapolated from above when `t` is within the critical
/// band of a critical value.
pub fn length_or_limit(tracer: &Tracer<'_>, t: f64) -> Result<LengthSample> {
    match tracer.check_regular(t) {
        Ok(()) => traced_length(tracer, t),
        Err(Error::NearCriticalValue { critical, .. }) => {
            let (value, err) = extrapolate_singular(|s| Ok(traced_length(tracer, s)?.length), critical, 1.0)?;
            Ok(LengthSample::new(t, value, degree_of(tracer), Method::Extrapolated, err))
        }
        Err(e) => Err(e),
    }
}

/// `L_w^{(k)}(t)` for `k = 0..=max_k` with the spread over `j`.
#[derive(Debug, Clone, PartialEq)]
pub struct Derivatives {
    pub t: f64,
    pub values: Vec<f64>,
    /// Relative spread `(max - min)/|value|` of `⟨w_[j], w_[k-j]⟩` over `j`.
    pub j_spread: Vec<f64>,
    /// Accumulated quadrature error estimate per order.
    pub errors: Vec<f64>,
}

/// All derivatives up to `max_k` from one pass over each component.
pub fn length_derivatives(tracer: &Tracer<'_>, t: f64, max_k: usize, weight: &Weight) -> Result<Derivatives> {
    if max_k > MAX_DERIVATIVE_ORDER {
        return Err(Error::OrderOverflow { requested: max_k, limit: MAX_DERIVATIVE_ORDER });
    }
    let tower = IterateTower::for_function(tracer.function(), weight, max_k)?;
    let mut pairs = Vec::new();
    for i in 0..=max_k {
        for l in i..=max_k - i {
            pairs.push((i, l));
        }
    }
    let set = tracer.level_set(t)?;
    if let Some((_, e)) = set.failures.first() {
        return Err(e.clone());
    }
    let mut totals = vec![0.0; pairs.len()];
    let mut errs = vec![0.0; pairs.len()];
    let mut w = vec![c64(0.0, 0.0); max_k + 1];
    for comp in &set.components {
        let q = tracer.integrate(comp, pairs.len(), |z, rates, mags| {
            tower.eval_into(z, &mut w)?;
            if w.iter().any(|x| !(x.re.is_finite() && x.im.is_finite())) {
                return Err(Error::PoleOnContour);
            }
            for (slot, &(i, l)) in pairs.iter().enumerate() {
                rates[slot] = (w[i].conj() * w[l]).re;
                mags[slot] = w[i].norm() * w[l].norm();
            }
            Ok(())
        })?;
        for s in 0..pairs.len() {
            totals[s] += q.values[s];
            errs[s] += q.errors[s];
        }
    }
    let mut values = Vec::with_capacity(max_k + 1);
    let mut j_spread = Vec::with_capacity(max_k + 1);
    let mut errors = Vec::with_capacity(max_k + 1);
    for k in 0..=max_k {
        let j = k / 2;
        let idx = |a: usize| pairs.iter().position(|&p| p == (a.min(k - a), a.max(k - a))).unwrap_or(0);
        let value = totals[idx(j)];
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for a in 0..=j {
            lo = lo.min(totals[idx(a)]);
            hi = hi.max(totals[idx(a)]);
        }
        values.push(value);
        j_spread.push(if value != 0.0 { (hi - lo) / value.abs() } else { hi - lo });
        errors.push(errs[idx(j)]);
    }
    Ok(Derivatives { t, values, j_spread, errors })
}

/// `L_w^{(k)}(t)` with its `j` spread.
pub fn length_derivative(tracer: &Tracer<'_>, t: f64, k: usize, weight: &Weight) -> Result<(f64, f64)> {
    let d = length_derivatives(tracer, t, k, weight)?;
    Ok((d.values[k], d.j_spread[k]))
}

/// Hankel matrix of derivatives at one level.
#[derive(Debug, Clone, PartialEq)]
pub struct HankelReport {
    pub t: f64,
    pub p: usize,
    /// `entries[i][j] = L_w^{(i+j)}(t)`.
    pub entries: Vec<Vec<f64>>,
    pub j_spread: Vec<f64>,
    pub eigenvalues: Vec<f64>,
    pub min_eigenvalue: f64,
    /// Max-norm of the matrix.
    pub scale: f64,
    /// Largest 2×2 minor divided by `scale²`.
    pub max_minor: f64,
}

impl HankelReport {
    pub fn is_psd(&self, rel_tol: f64) -> bool {
        self.min_eigenvalue >= -rel_tol * self.scale
    }

    /// Rank one up to `rel_tol` (every 2×2 minor vanishes).
    pub fn is_rank_one(&self, rel_tol: f64) -> bool {
        self.max_minor <= rel_tol
    }
}

pub fn hankel_from_moments(t: f64, p: usize, moments: &[f64], j_spread: Vec<f64>) -> Result<HankelReport> {
    if moments.len() < 2 * p + 1 {
        return Err(Error::InvalidInput("not enough moments for the requested order"));
    }
    let size = p + 1;
    let entries: Vec<Vec<f64>> = (0..size).map(|i| (0..size).map(|j| moments[i + j]).collect()).collect();
    let scale = entries.iter().flatten().map(|v| v.abs()).fold(0.0, f64::max);
    let eig = SymmetricEigen::new(DMatrix::from_fn(size, size, |i, j| entries[i][j]));
    let mut eigenvalues: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    eigenvalues.sort_by(|a, b| a.partial_cmp(b).unwrap_or(core::cmp::Ordering::Equal));
    let min_eigenvalue = eigenvalues.first().copied().unwrap_or(0.0);
    let mut max_minor = 0.0f64;
    for a in 0..size {
        for b in a + 1..size {
            for c in 0..size {
                for d in c + 1..size {
                    let m = entries[a][c] * entries[b][d] - entries[a][d] * entries[b][c];
                    max_minor = max_minor.max(m.abs());
                }
            }
        }
    }
    let max_minor = if scale > 0.0 { max_minor / (scale * scale) } else { 0.0 };
    Ok(HankelReport { t, p, entries, j_spread, eigenvalues, min_eigenvalue, scale, max_minor })
}

/// Hankel matrix of order `p ≤ 4` at a regular level.
pub fn hankel(tracer: &Tracer<'_>, t: f64, p: usize, weight: &Weight) -> Result<HankelReport> {
    if 2 * p > MAX_DERIVATIVE_ORDER {
        return Err(Error::OrderOverflow { requested: 2 * p, limit: MAX_DERIVATIVE_ORDER });
    }
    let d = length_derivatives(tracer, t, 2 * p, weight)?;
    hankel_from_moments(t, p, &d.values, d.j_spread)
}

/// `L''L - L'²` and its scale `L''L`; zero exactly when `ln L` is affine.
pub fn cauchy_gap(tracer: &Tracer<'_>, t: f64) -> Result<(f64, f64)> {
    let d = length_derivatives(tracer, t, 2, &Weight::One)?;
    let scale = d.values[2] * d.values[0];
    Ok((scale - d.values[1] * d.values[1], scale))
}

/// Critical value separating `a` and `b`, if any.
pub fn separating_critical(critical_values: &[f64], a: f64, b: f64, band: f64) -> Option<f64> {
    let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
    critical_values.iter().copied().find(|c| *c > lo - band && *c < hi + band)
}

/// Smallest eigenvalue of the midpoint kernel `[L((t_i + t_j)/2)]`.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelReport {
    pub points: Vec<f64>,
    pub min_eigenvalue: f64,
    pub scale: f64,
}

pub fn exp_convexity_kernel<L>(
    points: &[f64],
    critical_values: &[f64],
    band: f64,
    mut length: L,
) -> Result<KernelReport>
where
    L: FnMut(f64) -> Result<f64>,
{
    if points.is_empty() {
        return Err(Error::InvalidInput("no sample points"));
    }
    let lo = points.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = points.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if let Some(c) = separating_critical(critical_values, lo, hi, band) {
        return Err(Error::MixedIntervals(c));
    }
    let m = points.len();
    let mut cache: Vec<(f64, f64)> = Vec::new();
    let mut kernel = DMatrix::zeros(m, m);
    for i in 0..m {
        for j in i..m {
            let mid = 0.5 * (points[i] + points[j]);
            let v = match cache.iter().find(|(s, _)| *s == mid) {
                Some((_, v)) => *v,
                None => {
                    let v = length(mid)?;
                    cache.push((mid, v));
                    v
                }
            };
            kernel[(i, j)] = v;
            kernel[(j, i)] = v;
        }
    }
    let scale = kernel.iter().map(|v: &f64| v.abs()).fold(0.0, f64::max);
    let eig = SymmetricEigen::new(kernel);
    let min_eigenvalue = eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(KernelReport { points: points.to_vec(), min_eigenvalue, scale })
}

/// Second central differences of `ln L` and `Φ` on a uniform grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvexityReport {
    pub grid: Vec<f64>,
    pub lengths: Vec<f64>,
    pub second_ln: Vec<f64>,
    pub second_phi: Vec<f64>,
    /// No second difference below `-1e-7·|value|`.
    pub convex: bool,
    /// Every second difference strictly positive.
    pub strictly_convex: bool,
}

pub fn uniform_grid(a: f64, b: f64, count: usize) -> Vec<f64> {
    match count {
        0 => Vec::new(),
        1 => vec![a],
        _ => (0..count).map(|i| a + (b - a) * i as f64 / (count - 1) as f64).collect(),
    }
}

pub fn convexity_report<L>(
    interval: (f64, f64),
    count: usize,
    degree: usize,
    critical_values: &[f64],
    band: f64,
    mut length: L,
) -> Result<ConvexityReport>
where
    L: FnMut(f64) -> Result<f64>,
{
    if count < 3 {
        return Err(Error::InvalidInput("convexity needs at least three points"));
    }
    if let Some(c) = separating_critical(critical_values, interval.0, interval.1, band) {
        return Err(Error::MixedIntervals(c));
    }
    let grid = uniform_grid(interval.0, interval.1, count);
    let lengths = grid.iter().map(|&t| length(t)).collect::<Result<Vec<f64>>>()?;
    let ln: Vec<f64> = lengths.iter().map(|l| l.ln()).collect();
    let phi: Vec<f64> = ln.iter().zip(&grid).map(|(l, t)| l - t / degree as f64).collect();
    let second = |v: &[f64]| -> Vec<f64> { v.windows(3).map(|w| w[2] - 2.0 * w[1] + w[0]).collect() };
    let second_ln = second(&ln);
    let second_phi = second(&phi);
    let convex = second_ln.iter().zip(ln.iter().skip(1)).all(|(d, v)| *d >= -1e-7 * v.abs().max(1e-300));
    let strictly_convex = second_ln.iter().all(|d| *d > 0.0) && second_phi.iter().all(|d| *d > 0.0);
    Ok(ConvexityReport { grid, lengths, second_ln, second_phi, convex, strictly_convex })
}

/// `|Φ(t) - ln 2π|` from the exponential sum, with the truncation bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AsymptoteReport {
    pub t: f64,
    pub deviation: f64,
    pub bound: f64,
}

pub fn asymptote_check(model: &LaurentModel, t: f64) -> Result<AsymptoteReport> {
    if t < model.critical_level {
        return Err(Error::InvalidInput("asymptote check needs t >= T(P)"));
    }
    let n = model.n as f64;
    let s: f64 = model.c.iter().enumerate().skip(2).map(|(k, c)| c.norm_sqr() * (-2.0 * k as f64 * t / n).exp()).sum();
    let tail = model.tail_value(t);
    Ok(AsymptoteReport { t, deviation: libm::log1p(s), bound: tail.bound / tail.value })
}

/// Length of the unit lemniscate compared with `2π`.
#[derive(Debug, Clone, PartialEq)]
pub struct KPolynomialReport {
    /// All finite critical values are `≤ 0`.
    pub is_k_polynomial: bool,
    pub trivial: bool,
    pub length_at_zero: Option<LengthSample>,
    /// `length ≥ 2π - 1e-3`.
    pub at_least_two_pi: Option<bool>,
}

pub fn k_polynomial_check(tracer: &Tracer<'_>) -> Result<KPolynomialReport> {
    let p =
        tracer.function().as_polynomial().ok_or(Error::InvalidInput("the unit lemniscate check needs a polynomial"))?;
    if p.degree() < 2 || !p.is_monic() {
        return Err(Error::InvalidInput("need a monic polynomial of degree >= 2"));
    }
    let trivial = p.is_trivial();
    let is_k = tracer.critical_values().iter().all(|c| *c <= tracer.options().critical_band);
    if !is_k {
        return Ok(KPolynomialReport { is_k_polynomial: false, trivial, length_at_zero: None, at_least_two_pi: None });
    }
    let sample = length_or_limit(tracer, 0.0)?;
    let ok = sample.length >= TAU - 1e-3;
    Ok(KPolynomialReport { is_k_polynomial: true, trivial, length_at_zero: Some(sample), at_least_two_pi: Some(ok) })
}

/// Location of the maximum of `Φ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PhiMax {
    /// `Φ` is constant on the window.
    Degenerate,
    AtCriticalValue(f64),
    Interior(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhiScan {
    pub samples: Vec<LengthSample>,
    pub argmax: f64,
    pub max: f64,
    pub location: PhiMax,
}

/// Scan of `Φ` over `window` on `count` grid points plus the critical values
/// (taken as one-sided limits from above). Since `Φ` is convex on each regular
/// interval, a maximum away from the critical values can only sit at an end
/// of the window.
pub fn phi_max_scan(tracer: &Tracer<'_>, window: (f64, f64), count: usize) -> Result<PhiScan> {
    let n = degree_of(tracer).ok_or(Error::InvalidInput("Φ is defined for polynomials"))?;
    let band = tracer.options().critical_band;
    let crit: Vec<f64> = tracer.critical_values().to_vec();
    let mut samples = Vec::new();
    for t in uniform_grid(window.0, window.1, count) {
        if crit.iter().any(|c| (t - c).abs() < 10.0 * band) {
            continue;
        }
        samples.push(traced_length(tracer, t)?);
    }
    for &c in crit.iter().filter(|c| **c >= window.0 && **c <= window.1) {
        let (v, err) = extrapolate_singular(|s| Ok(traced_length(tracer, s)?.length), c, 1.0)?;
        samples.push(LengthSample::new(c, v, Some(n), Method::Extrapolated, err));
    }
    samples.sort_by(|a, b| a.t.partial_cmp(&b.t).unwrap_or(core::cmp::Ordering::Equal));
    let phis: Vec<f64> = samples.iter().map(|s| s.phi.unwrap_or(f64::NAN)).collect();
    let (mut best, mut max) = (0usize, f64::NEG_INFINITY);
    let mut min = f64::INFINITY;
    for (i, v) in phis.iter().enumerate() {
        if *v > max {
            max = *v;
            best = i;
        }
        min = min.min(*v);
    }
    let argmax = samples[best].t;
    let location = if max - min <= 1e-9 * max.abs().max(1.0) {
        PhiMax::Degenerate
    } else if samples[best].method == Method::Extrapolated {
        PhiMax::AtCriticalValue(argmax)
    } else {
        PhiMax::Interior(argmax)
    };
    Ok(PhiScan { samples, argmax, max, location })
}
