//! Continuation of level curves `ln|f| = t`.
//!
//! A component is parameterized by the phase `θ` of `f`: along the curve
//! `ln f(z(θ)) = t + i(θ₀ + θ)`, so `dz/dθ = i·g(z)` with `g = f/f'`, and
//! `|dz| = |g| dθ`. The curve closes when `θ = 2πm`, `m` being the number of
//! zeros it encloses.

use crate::jets::{Analytic, Zero};
use crate::ode::{next_step, Dopri5};
use crate::prelude::*;
use crate::{Error, Result};

/// Tolerances and limits for seeding and tracing.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceOptions {
    /// Relative local error per step for position and quadratures.
    pub rtol: f64,
    /// Admissible `|ln|f(z)| - t|` at every sample.
    pub level_tol: f64,
    /// Closure tolerance relative to the curve scale.
    pub closure_tol: f64,
    /// Refusal band around critical values.
    pub critical_band: f64,
    pub max_steps: usize,
    pub max_winding: usize,
}

impl Default for TraceOptions {
    fn default() -> Self {
        Self {
            rtol: 1e-12,
            level_tol: 1e-10,
            closure_tol: 1e-8,
            critical_band: 1e-6,
            max_steps: 1_000_000,
            max_winding: 64,
        }
    }
}

/// One closed component of a level set.
#[derive(Debug, Clone, PartialEq)]
pub struct LevelComponent {
    pub t: f64,
    /// `(θ, z)` at every accepted step; the last sample closes the curve.
    pub samples: Vec<(f64, Complex64)>,
    /// Total phase change divided by `2π`.
    pub winding: usize,
    pub length: f64,
    pub closure_residual: f64,
    /// Accumulated local error estimate of the length quadrature.
    pub length_error: f64,
    /// `arg f` at the start point.
    pub phase0: f64,
    /// Indices (into the tracer's zero list) of the zeros inside the curve.
    pub enclosed: Vec<usize>,
    /// Winding of `f` along the sampled polygon, counted from the sampled
    /// values of `f` alone.
    pub argument_winding: i64,
    /// `winding` equals both the argument count and the enclosed multiplicity.
    pub winding_verified: bool,
}

impl LevelComponent {
    pub fn start(&self) -> Complex64 {
        self.samples[0].1
    }

    pub fn total_phase(&self) -> f64 {
        TAU * self.winding as f64
    }

    /// Largest distance of a sample from the start point.
    pub fn scale(&self) -> f64 {
        curve_scale(&self.samples)
    }
}

/// All components reachable from the known zeros.
#[derive(Debug, Clone, PartialEq)]
pub struct LevelSet {
    pub t: f64,
    pub components: Vec<LevelComponent>,
    pub total_length: f64,
    /// For each component, the indices of the zeros it encloses.
    pub enclosed_zero_map: Vec<Vec<usize>>,
    /// Zeros from which no component could be traced.
    pub failures: Vec<(usize, Error)>,
}

impl LevelSet {
    pub fn is_partial(&self) -> bool {
        !self.failures.is_empty()
    }

    pub fn total_winding(&self) -> usize {
        self.components.iter().map(|c| c.winding).sum()
    }

    pub fn length_error(&self) -> f64 {
        self.components.iter().map(|c| c.length_error).sum()
    }
}

/// Values and accumulated error estimates of contour quadratures.
#[derive(Debug, Clone, PartialEq)]
pub struct Quadrature {
    pub values: Vec<f64>,
    pub errors: Vec<f64>,
}

/// Level-curve tracer for one analytic function.
pub struct Tracer<'f> {
    f: &'f dyn Analytic,
    zeros: Vec<Zero>,
    critical_points: Vec<Complex64>,
    critical_values: Vec<f64>,
    opts: TraceOptions,
}

impl core::fmt::Debug for Tracer<'_> {
    fn fmt(&self, out: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        out.debug_struct("Tracer")
            .field("f", &self.f.describe())
            .field("zeros", &self.zeros)
            .field("critical_values", &self.critical_values)
            .field("opts", &self.opts)
            .finish()
    }
}

enum Stop {
    Closure,
    Phase(f64),
}

struct Marched {
    samples: Vec<(f64, Complex64)>,
    end: Complex64,
    theta: f64,
    quad: Quadrature,
}

impl<'f> Tracer<'f> {
    pub fn new(f: &'f dyn Analytic, opts: TraceOptions) -> Result<Self> {
        Self::with_zeros(f, f.zeros()?, opts)
    }

    /// Tracer restricted to the given zeros (the working region).
    pub fn with_zeros(f: &'f dyn Analytic, zeros: Vec<Zero>, opts: TraceOptions) -> Result<Self> {
        if !(opts.rtol > 0.0 && opts.level_tol > 0.0 && opts.closure_tol > 0.0 && opts.critical_band >= 0.0) {
            return Err(Error::InvalidInput("tolerances must be positive"));
        }
        Ok(Self { f, zeros, critical_points: f.critical_points()?, critical_values: f.critical_values()?, opts })
    }

    pub fn function(&self) -> &'f dyn Analytic {
        self.f
    }

    pub fn zeros(&self) -> &[Zero] {
        &self.zeros
    }

    pub fn critical_values(&self) -> &[f64] {
        &self.critical_values
    }

    pub fn options(&self) -> &TraceOptions {
        &self.opts
    }

    /// Refuses levels within the critical band.
    pub fn check_regular(&self, t: f64) -> Result<()> {
        if !t.is_finite() {
            return Err(Error::InvalidInput("level must be finite"));
        }
        for &c in &self.critical_values {
            if (t - c).abs() < self.opts.critical_band {
                return Err(Error::NearCriticalValue { t, critical: c, band: self.opts.critical_band });
            }
        }
        Ok(())
    }

    fn g(&self, z: Complex64) -> Result<(Complex64, Complex64)> {
        let (f, df) = self.f.eval_with_derivative(z);
        if df.norm() == 0.0 {
            return Err(Error::TraceDivergence("hit a critical point"));
        }
        Ok((f, f / df))
    }

    /// Point of the `t`-level reached by steepest ascent of `ln|f|` from a zero.
    pub fn seed(&self, zero: &Zero, t: f64) -> Result<Complex64> {
        if !t.is_finite() {
            return Err(Error::InvalidInput("level must be finite"));
        }
        let z0 = zero.z;
        let bound = self.f.bounding_radius(t, &self.zeros);
        let mut near = 1.0f64;
        for w in self.zeros.iter().map(|r| r.z).chain(self.critical_points.iter().copied()) {
            let d = (w - z0).norm();
            if d > 0.0 {
                near = near.min(d);
            }
        }
        const GOLDEN: f64 = 2.399_963_229_728_653;
        let mut last = Error::SeedEscape;
        for attempt in 0..8 {
            let dir = Complex64::from_polar(1.0, 0.3 + GOLDEN * attempt as f64);
            match self.seed_along(z0, dir, 0.25 * near, t, bound) {
                Ok(z) => return Ok(z),
                Err(e) => last = e,
            }
        }
        Err(last)
    }

    fn seed_along(&self, z0: Complex64, dir: Complex64, r0: f64, t: f64, bound: f64) -> Result<Complex64> {
        let floor = 1e-14 * (1.0 + z0.norm());
        let mut r = r0;
        let (mut z, mut u) = loop {
            let z = z0 + dir * r;
            let u = self.f.eval(z).norm().ln();
            if u < t - 0.1 {
                break (z, u);
            }
            r *= 0.1;
            if r < floor {
                return Err(Error::SeedEscape);
            }
        };
        let mut stepper = Dopri5::new(0);
        let mut field = |z: Complex64, _: &mut [f64], _: &mut [f64]| Ok(self.g(z)?.1);
        let mut h = (t - u) / 8.0;
        let mut steps = 0usize;
        while t - u > 1e-13 * (1.0 + t.abs()) {
            h = h.min(t - u);
            let st = stepper.step(&mut field, z, h, 1e-10).map_err(|_| Error::SeedEscape)?;
            if st.error_ratio <= 1.0 {
                u += h;
                z = st.z;
                if z.norm() > bound || self.critical_points.iter().any(|c| (z - c).norm() < 1e-8) {
                    return Err(Error::SeedEscape);
                }
            }
            h = next_step(h, st.error_ratio);
            steps += 1;
            if steps > self.opts.max_steps || h < 1e-14 {
                return Err(Error::SeedEscape);
            }
        }
        for _ in 0..8 {
            let (f, g) = self.g(z).map_err(|_| Error::SeedEscape)?;
            let r = f.norm().ln() - t;
            z -= g * r;
            if r.abs() < 1e-15 * (1.0 + t.abs()) {
                break;
            }
        }
        if (self.f.eval(z).norm().ln() - t).abs() > self.opts.level_tol {
            return Err(Error::SeedEscape);
        }
        Ok(z)
    }

    /// Newton projection onto `ln f = t + iφ`.
    fn project(&self, mut z: Complex64, t: f64, phase: f64) -> Result<Complex64> {
        let target = Complex64::from_polar(t.exp(), phase);
        for _ in 0..6 {
            let (f, g) = self.g(z)?;
            let r = (f / target).ln();
            z -= r * g;
            if r.norm() < 1e-15 {
                break;
            }
        }
        Ok(z)
    }

    fn march<I>(
        &self,
        start: Complex64,
        t: f64,
        phase0: f64,
        count: usize,
        mut integrand: I,
        stop: Stop,
    ) -> Result<Marched>
    where
        I: FnMut(Complex64, &mut [f64], &mut [f64]) -> Result<()>,
    {
        let bound = self.f.bounding_radius(t, &self.zeros);
        let record = matches!(stop, Stop::Closure);
        let limit = match stop {
            Stop::Closure => TAU * self.opts.max_winding as f64,
            Stop::Phase(end) => end,
        };
        let mut stepper = Dopri5::new(count);
        let mut field = |z: Complex64, rates: &mut [f64], mags: &mut [f64]| {
            let (_, g) = self.g(z)?;
            let speed = g.norm();
            integrand(z, rates, mags)?;
            for (r, m) in rates.iter_mut().zip(mags.iter_mut()) {
                *r *= speed;
                *m *= speed;
            }
            Ok(g * c64(0.0, 1.0))
        };
        let mut samples = Vec::new();
        if record {
            samples.push((0.0, start));
        }
        let mut quad = Quadrature { values: vec![0.0; count], errors: vec![0.0; count] };
        let (mut z, mut theta, mut h) = (start, 0.0f64, 0.05f64);
        let mut scale = 0.0f64;
        let mut next_turn = if record { TAU.min(limit) } else { limit };
        let mut steps = 0usize;
        loop {
            steps += 1;
            if steps > self.opts.max_steps {
                return Err(Error::TraceDivergence("step limit exceeded"));
            }
            h = h.min(0.5);
            let rest = next_turn - theta;
            if rest <= h {
                h = rest;
            } else if rest < 2.0 * h {
                h = 0.5 * rest;
            }
            let st = stepper.step(&mut field, z, h, self.opts.rtol)?;
            if st.error_ratio > 1.0 {
                h = next_step(h, st.error_ratio);
                if h < 1e-13 {
                    return Err(Error::TraceDivergence("step size underflow"));
                }
                continue;
            }
            let landed = next_turn - theta <= h;
            theta = if landed { next_turn } else { theta + h };
            z = self.project(st.z, t, phase0 + theta)?;
            for i in 0..count {
                quad.values[i] += st.increments[i];
                quad.errors[i] += st.increment_errors[i];
            }
            if z.norm() > bound {
                return Err(Error::TraceDivergence("left the bounding region"));
            }
            if (self.f.eval(z).norm().ln() - t).abs() > self.opts.level_tol {
                return Err(Error::TraceDivergence("lost the level curve"));
            }
            scale = scale.max((z - start).norm());
            if record {
                samples.push((theta, z));
            }
            h = next_step(h, st.error_ratio);
            if landed {
                match stop {
                    Stop::Phase(_) => return Ok(Marched { samples, end: z, theta, quad }),
                    Stop::Closure => {
                        if (z - start).norm() <= self.opts.closure_tol * scale.max(f64::MIN_POSITIVE) {
                            return Ok(Marched { samples, end: z, theta, quad });
                        }
                        if next_turn >= limit {
                            return Err(Error::TraceDivergence("curve did not close"));
                        }
                        next_turn = (next_turn + TAU).min(limit);
                    }
                }
            }
        }
    }

    /// Traces the component through `start` (which must lie on the level).
    pub fn trace(&self, start: Complex64, t: f64) -> Result<LevelComponent> {
        self.check_regular(t)?;
        let f0 = self.f.eval(start);
        if (f0.norm().ln() - t).abs() > self.opts.level_tol {
            return Err(Error::InvalidInput("start point is not on the level"));
        }
        let phase0 = f0.arg();
        let marched = self.march(
            start,
            t,
            phase0,
            1,
            |_, r, m| {
                r[0] = 1.0;
                m[0] = 1.0;
                Ok(())
            },
            Stop::Closure,
        )?;
        let winding = libm::round(marched.theta / TAU) as usize;
        let mut samples = marched.samples;
        let closure_residual = (marched.end - start).norm();
        if let Some(last) = samples.last_mut() {
            last.1 = start;
        }
        let enclosed: Vec<usize> = self
            .zeros
            .iter()
            .enumerate()
            .filter(|(_, r)| polygon_winding(&samples, r.z) != 0)
            .map(|(i, _)| i)
            .collect();
        let multiplicity: usize = enclosed.iter().map(|&i| self.zeros[i].multiplicity).sum();
        let argument_winding = self.argument_winding(&samples);
        Ok(LevelComponent {
            t,
            winding,
            length: marched.quad.values[0],
            length_error: marched.quad.errors[0],
            closure_residual,
            phase0,
            winding_verified: argument_winding == winding as i64 && multiplicity == winding,
            enclosed,
            argument_winding,
            samples,
        })
    }

    /// Sum of the phase increments of `f` between consecutive samples.
    fn argument_winding(&self, samples: &[(f64, Complex64)]) -> i64 {
        let mut total = 0.0;
        for pair in samples.windows(2) {
            total += (self.f.eval(pair[1].1) / self.f.eval(pair[0].1)).arg();
        }
        libm::round(total / TAU) as i64
    }

    /// Seeds from every zero and traces every distinct component.
    pub fn level_set(&self, t: f64) -> Result<LevelSet> {
        self.check_regular(t)?;
        let mut components: Vec<LevelComponent> = Vec::new();
        let mut covered = vec![false; self.zeros.len()];
        let mut failures = Vec::new();
        for (i, zero) in self.zeros.iter().enumerate() {
            if covered[i] {
                continue;
            }
            let traced = self.seed(zero, t).and_then(|s| self.trace(s, t));
            match traced {
                Ok(c) if c.enclosed.contains(&i) => {
                    for &j in &c.enclosed {
                        covered[j] = true;
                    }
                    if !components.iter().any(|o| o.enclosed == c.enclosed) {
                        components.push(c);
                    }
                }
                Ok(_) => failures.push((i, Error::TraceDivergence("component does not enclose its seed zero"))),
                Err(e) => failures.push((i, e)),
            }
        }
        if components.is_empty() {
            if let Some((_, e)) = failures.into_iter().next() {
                return Err(e);
            }
            return Err(Error::InvalidInput("function has no zeros in the working region"));
        }
        let total_length = components.iter().map(|c| c.length).sum();
        let enclosed_zero_map = components.iter().map(|c| c.enclosed.clone()).collect();
        Ok(LevelSet { t, components, total_length, enclosed_zero_map, failures })
    }

    /// Quadratures `∫ F_i(z) |dz|` over a traced component. The integrand
    /// writes the values `F_i(z)` and magnitudes bounding them (used for
    /// relative error control).
    pub fn integrate<I>(&self, component: &LevelComponent, count: usize, integrand: I) -> Result<Quadrature>
    where
        I: FnMut(Complex64, &mut [f64], &mut [f64]) -> Result<()>,
    {
        let start = component.start();
        let marched =
            self.march(start, component.t, component.phase0, count, integrand, Stop::Phase(component.total_phase()))?;
        if (marched.end - start).norm() > self.opts.closure_tol * component.scale().max(f64::MIN_POSITIVE) {
            return Err(Error::TraceDivergence("re-integration did not close"));
        }
        Ok(marched.quad)
    }

    /// Scalar product `⟨u, v⟩ = ∫ Re(conj(u) v) |dz|` over a component.
    pub fn functional<U, V>(&self, component: &LevelComponent, u: U, v: V) -> Result<f64>
    where
        U: Fn(Complex64) -> Result<Complex64>,
        V: Fn(Complex64) -> Result<Complex64>,
    {
        let q = self.integrate(component, 1, |z, r, m| {
            let (a, b) = (u(z)?, v(z)?);
            if !(a.re.is_finite() && a.im.is_finite() && b.re.is_finite() && b.im.is_finite()) {
                return Err(Error::PoleOnContour);
            }
            r[0] = (a.conj() * b).re;
            m[0] = a.norm() * b.norm();
            Ok(())
        })?;
        Ok(q.values[0])
    }
}

fn curve_scale(samples: &[(f64, Complex64)]) -> f64 {
    let s = samples.first().map(|p| p.1).unwrap_or_default();
    samples.iter().map(|p| (p.1 - s).norm()).fold(0.0, f64::max)
}

/// Winding number of the closed polygon through the sample points about `p`.
pub fn polygon_winding(samples: &[(f64, Complex64)], p: Complex64) -> i64 {
    let mut total = 0.0;
    for pair in samples.windows(2) {
        let a = pair[0].1 - p;
        let b = pair[1].1 - p;
        total += (b / a).arg();
    }
    if let (Some(first), Some(last)) = (samples.first(), samples.last()) {
        total += ((first.1 - p) / (last.1 - p)).arg();
    }
    libm::round(total / TAU) as i64
}
