//! Complex polynomials: arithmetic, simultaneous root finding, critical data
//! of `ln|P|` and the dilatation family `P_α(z) = e^{-α} P(z e^{α/n})`.

use core::ops::{Add, Mul, Neg, Sub};

use crate::prelude::*;
use crate::{Error, Result};

/// Largest degree accepted from user input.
pub const MAX_DEGREE: usize = 64;

/// Two critical values merge when closer than this (relative to `max(1, |T|)`).
pub const CRITICAL_VALUE_DEDUP: f64 = 1e-9;

/// Relative radius used to cluster numerically coincident roots.
pub const CLUSTER_RADIUS: f64 = 1e-7;

const MAX_ABERTH_ITERATIONS: usize = 2000;

/// Polynomial with complex coefficients, stored leading coefficient first.
///
/// The zero polynomial is stored as a single zero coefficient; otherwise the
/// leading coefficient is nonzero, so `degree() == coeffs().len() - 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexPoly {
    coeffs: Vec<Complex64>,
}

/// A root together with its multiplicity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Root {
    pub z: Complex64,
    pub multiplicity: usize,
}

impl ComplexPoly {
    /// Builds a polynomial from leading-first coefficients, trimming exact
    /// leading zeros.
    pub fn new(coeffs: Vec<Complex64>) -> Self {
        let first = coeffs.iter().position(|c| *c != Complex64::new(0.0, 0.0));
        match first {
            Some(i) => Self { coeffs: coeffs[i..].to_vec() },
            None => Self::zero(),
        }
    }

    pub fn from_real(coeffs: &[f64]) -> Self {
        Self::new(coeffs.iter().map(|&c| c64(c, 0.0)).collect())
    }

    pub fn zero() -> Self {
        Self { coeffs: vec![c64(0.0, 0.0)] }
    }

    pub fn constant(c: Complex64) -> Self {
        Self::new(vec![c])
    }

    pub fn one() -> Self {
        Self::constant(c64(1.0, 0.0))
    }

    /// The identity polynomial `z`.
    pub fn identity() -> Self {
        Self { coeffs: vec![c64(1.0, 0.0), c64(0.0, 0.0)] }
    }

    /// Validated input constructor. A leading coefficient that is not 1
    /// (within `1e-12`) is divided out; the returned flag reports whether
    /// that normalization happened.
    pub fn monic(coeffs: Vec<Complex64>) -> Result<(Self, bool)> {
        let p = Self::new(coeffs);
        if p.is_zero() || p.degree() == 0 {
            return Err(Error::InvalidInput("polynomial must have degree at least 1"));
        }
        if p.degree() > MAX_DEGREE {
            return Err(Error::DegreeTooLarge(p.degree()));
        }
        if p.coeffs.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
            return Err(Error::InvalidInput("non-finite coefficient"));
        }
        let normalized = (p.leading() - 1.0).norm() > 1e-12;
        Ok((p.to_monic(), normalized))
    }

    /// Monic polynomial `Π (z - r_j)`.
    pub fn from_roots(roots: &[Complex64]) -> Result<Self> {
        if roots.is_empty() {
            return Err(Error::InvalidInput("at least one root is required"));
        }
        if roots.len() > MAX_DEGREE {
            return Err(Error::DegreeTooLarge(roots.len()));
        }
        let mut coeffs = vec![c64(1.0, 0.0)];
        for &r in roots {
            coeffs.push(c64(0.0, 0.0));
            for j in (1..coeffs.len()).rev() {
                let prev = coeffs[j - 1];
                coeffs[j] -= r * prev;
            }
        }
        Ok(Self { coeffs })
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn leading(&self) -> Complex64 {
        self.coeffs[0]
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.len() == 1 && self.coeffs[0] == c64(0.0, 0.0)
    }

    pub fn is_monic(&self) -> bool {
        (self.leading() - 1.0).norm() <= 1e-12
    }

    /// Largest coefficient modulus.
    pub fn max_coeff(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    pub fn to_monic(&self) -> Self {
        let lead = self.leading();
        Self { coeffs: self.coeffs.iter().map(|c| c / lead).collect() }
    }

    pub fn scale(&self, s: Complex64) -> Self {
        Self::new(self.coeffs.iter().map(|c| c * s).collect())
    }

    pub fn eval(&self, z: Complex64) -> Complex64 {
        self.coeffs.iter().fold(c64(0.0, 0.0), |acc, &c| acc * z + c)
    }

    /// `(P(z), P'(z))` by a single Horner pass.
    pub fn eval_with_derivative(&self, z: Complex64) -> (Complex64, Complex64) {
        let mut p = c64(0.0, 0.0);
        let mut dp = c64(0.0, 0.0);
        for &c in &self.coeffs {
            dp = dp * z + p;
            p = p * z + c;
        }
        (p, dp)
    }

    /// Bound on the rounding error of Horner evaluation at `z`, up to a
    /// factor of machine epsilon: `Σ |a_k| |z|^{n-k}`.
    pub fn magnitude_at(&self, z: Complex64) -> f64 {
        let r = z.norm();
        self.coeffs.iter().fold(0.0, |acc, c| acc * r + c.norm())
    }

    /// Taylor coefficients of `h -> P(z + h)`, lowest order first, truncated
    /// to `order` (entries beyond the degree are zero).
    pub fn taylor_shift(&self, z: Complex64, order: usize) -> Vec<Complex64> {
        let n = self.degree();
        let mut c = self.coeffs.clone();
        let passes = order.min(n) + 1;
        for i in 0..passes {
            for j in 1..=(n - i) {
                let prev = c[j - 1];
                c[j] += z * prev;
            }
        }
        (0..=order).map(|k| if k <= n { c[n - k] } else { c64(0.0, 0.0) }).collect()
    }

    pub fn derivative(&self) -> Self {
        let n = self.degree();
        if n == 0 {
            return Self::zero();
        }
        Self::new(self.coeffs[..n].iter().enumerate().map(|(i, c)| c * (n - i) as f64).collect())
    }

    pub fn nth_derivative(&self, m: usize) -> Self {
        (0..m).fold(self.clone(), |p, _| p.derivative())
    }

    /// Multiplies by `z^k`.
    pub fn shift_up(&self, k: usize) -> Self {
        if self.is_zero() {
            return Self::zero();
        }
        let mut coeffs = self.coeffs.clone();
        coeffs.extend(core::iter::repeat_n(c64(0.0, 0.0), k));
        Self { coeffs }
    }

    pub fn pow(&self, k: usize) -> Self {
        (0..k).fold(Self::one(), |acc, _| &acc * self)
    }

    /// `P_α(z) = e^{-α} P(z e^{α/n})`; coefficient `a_j` is scaled by
    /// `e^{-α j / n}`. Monic input stays monic.
    pub fn dilate(&self, alpha: f64) -> Self {
        let n = self.degree() as f64;
        Self { coeffs: self.coeffs.iter().enumerate().map(|(j, c)| c * (-alpha * j as f64 / n).exp()).collect() }
    }

    /// True when the polynomial is `c (z - a)^n` to working precision.
    pub fn is_trivial(&self) -> bool {
        let n = self.degree();
        if n <= 1 {
            return true;
        }
        let m = self.to_monic();
        let a = -m.coeffs[1] / n as f64;
        let shifted = m.taylor_shift(a, n);
        let scale = 1.0 + a.norm();
        shifted[..n].iter().enumerate().all(|(k, b)| b.norm() <= 1e-10 * m.max_coeff() * scale.powi((n - k) as i32))
    }

    /// All roots with multiplicities, by Aberth–Ehrlich simultaneous
    /// iteration followed by inclusion-disk clustering and polishing.
    ///
    /// Every returned root satisfies
    /// `|P(z)| <= 1e-10 · max|a_k| · max(1,|z|)^n`.
    pub fn roots(&self) -> Result<Vec<Root>> {
        let n = self.degree();
        if self.is_zero() || n == 0 {
            return Err(Error::InvalidInput("constant polynomial has no roots"));
        }
        if n > MAX_DEGREE {
            return Err(Error::DegreeTooLarge(n));
        }
        let p = self.to_monic();
        if n == 1 {
            return Ok(vec![Root { z: -p.coeffs[1], multiplicity: 1 }]);
        }
        let approx = aberth(&p)?;
        let mut roots = cluster_roots(&p, &approx);
        roots.sort_by(|a, b| {
            a.z.re
                .partial_cmp(&b.z.re)
                .unwrap_or(core::cmp::Ordering::Equal)
                .then(a.z.im.partial_cmp(&b.z.im).unwrap_or(core::cmp::Ordering::Equal))
        });
        let scale = p.max_coeff();
        for r in &roots {
            let bound = 1e-10 * scale * r.z.norm().max(1.0).powi(n as i32);
            if p.eval(r.z).norm() > bound {
                return Err(Error::NonConvergence { iterations: MAX_ABERTH_ITERATIONS });
            }
        }
        Ok(roots)
    }

    /// Critical points of `ln|P|`, their critical values and the regular
    /// intervals between consecutive values.
    pub fn critical_data(&self) -> Result<CriticalData> {
        if self.degree() < 1 {
            return Err(Error::InvalidInput("critical data needs degree at least 1"));
        }
        let dp = self.derivative();
        if dp.is_zero() {
            return Err(Error::DegenerateDerivative);
        }
        if dp.degree() == 0 {
            return Ok(CriticalData::from_parts(Vec::new(), Vec::new(), Vec::new()));
        }
        let critical_points = dp.roots()?;
        let zeros = self.roots()?;
        let mut finite: Vec<(f64, Complex64)> = Vec::new();
        let mut zero_critical = Vec::new();
        for cp in &critical_points {
            let on_zero = zeros
                .iter()
                .any(|r| r.multiplicity >= 2 && (r.z - cp.z).norm() <= CLUSTER_RADIUS * (1.0 + cp.z.norm()));
            if on_zero {
                zero_critical.push(cp.z);
            } else {
                finite.push((self.eval(cp.z).norm().ln(), cp.z));
            }
        }
        Ok(CriticalData::from_parts(critical_points, finite, zero_critical))
    }
}

impl From<&ComplexPoly> for ComplexPoly {
    fn from(p: &ComplexPoly) -> Self {
        p.clone()
    }
}

impl Add for &ComplexPoly {
    type Output = ComplexPoly;
    fn add(self, rhs: &ComplexPoly) -> ComplexPoly {
        let (long, short) = if self.coeffs.len() >= rhs.coeffs.len() { (self, rhs) } else { (rhs, self) };
        let offset = long.coeffs.len() - short.coeffs.len();
        let mut coeffs = long.coeffs.clone();
        for (i, c) in short.coeffs.iter().enumerate() {
            coeffs[offset + i] += c;
        }
        ComplexPoly::new(coeffs)
    }
}

impl Neg for &ComplexPoly {
    type Output = ComplexPoly;
    fn neg(self) -> ComplexPoly {
        ComplexPoly { coeffs: self.coeffs.iter().map(|c| -c).collect() }
    }
}

impl Sub for &ComplexPoly {
    type Output = ComplexPoly;
    fn sub(self, rhs: &ComplexPoly) -> ComplexPoly {
        self + &(-rhs)
    }
}

impl Mul for &ComplexPoly {
    type Output = ComplexPoly;
    fn mul(self, rhs: &ComplexPoly) -> ComplexPoly {
        if self.is_zero() || rhs.is_zero() {
            return ComplexPoly::zero();
        }
        let mut coeffs = vec![c64(0.0, 0.0); self.coeffs.len() + rhs.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in rhs.coeffs.iter().enumerate() {
                coeffs[i + j] += a * b;
            }
        }
        ComplexPoly::new(coeffs)
    }
}

/// A finite critical value together with all critical points mapping to it.
#[derive(Debug, Clone, PartialEq)]
pub struct CriticalValue {
    pub value: f64,
    pub points: Vec<Complex64>,
}

/// Critical structure of `ln|P|`.
#[derive(Debug, Clone, PartialEq)]
pub struct CriticalData {
    /// Roots of `P'` with multiplicity.
    pub critical_points: Vec<Root>,
    /// Distinct finite critical values, strictly increasing.
    pub critical_values: Vec<CriticalValue>,
    /// Critical points that are also zeros of `P` (no finite value).
    pub zero_critical_points: Vec<Complex64>,
    /// Open intervals `(T_{j-1}, T_j)` with `T_0 = -∞`, `T_ν = +∞`.
    pub regular_intervals: Vec<(f64, f64)>,
    /// Largest finite critical value `T(P)`.
    pub t_max: Option<f64>,
}

impl CriticalData {
    pub(crate) fn from_parts(
        critical_points: Vec<Root>,
        mut finite: Vec<(f64, Complex64)>,
        zero_critical_points: Vec<Complex64>,
    ) -> Self {
        finite.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap_or(core::cmp::Ordering::Equal));
        let mut values: Vec<CriticalValue> = Vec::new();
        for (v, z) in finite {
            match values.last_mut() {
                Some(last) if (v - last.value).abs() <= CRITICAL_VALUE_DEDUP * v.abs().max(1.0) => last.points.push(z),
                _ => values.push(CriticalValue { value: v, points: vec![z] }),
            }
        }
        let mut regular_intervals = Vec::with_capacity(values.len() + 1);
        let mut lo = f64::NEG_INFINITY;
        for v in &values {
            regular_intervals.push((lo, v.value));
            lo = v.value;
        }
        regular_intervals.push((lo, f64::INFINITY));
        let t_max = values.last().map(|v| v.value);
        Self { critical_points, critical_values: values, zero_critical_points, regular_intervals, t_max }
    }

    pub fn values(&self) -> Vec<f64> {
        self.critical_values.iter().map(|c| c.value).collect()
    }

    /// Index of the regular interval containing `t`, or `None` when `t` is a
    /// critical value.
    pub fn interval_index(&self, t: f64) -> Option<usize> {
        self.regular_intervals.iter().position(|&(a, b)| a < t && t < b)
    }

    /// Closest critical value to `t`.
    pub fn nearest(&self, t: f64) -> Option<f64> {
        self.critical_values
            .iter()
            .map(|c| c.value)
            .min_by(|a, b| (a - t).abs().partial_cmp(&(b - t).abs()).unwrap_or(core::cmp::Ordering::Equal))
    }
}

fn aberth(p: &ComplexPoly) -> Result<Vec<Complex64>> {
    let n = p.degree();
    let center = -p.coeffs[1] / n as f64;
    let shifted = p.taylor_shift(center, n);
    // Scale of the roots around the centroid: max |b_k|^{1/k} of the shifted
    // monic polynomial w^n + b_1 w^{n-1} + ... (b_k = shifted[n - k]).
    let mut radius: f64 = (1..=n).map(|k| shifted[n - k].norm().powf(1.0 / k as f64)).fold(0.0, f64::max);
    if radius == 0.0 {
        radius = 1e-3 * (1.0 + center.norm());
    }
    let mut z: Vec<Complex64> =
        (0..n).map(|k| center + Complex64::from_polar(radius, TAU * k as f64 / n as f64 + 0.4)).collect();
    let mut done = vec![false; n];
    let eps = f64::EPSILON;
    for _ in 0..MAX_ABERTH_ITERATIONS {
        let mut all_done = true;
        for j in 0..n {
            if done[j] {
                continue;
            }
            let (pv, dpv) = p.eval_with_derivative(z[j]);
            let noise = 4.0 * n as f64 * eps * p.magnitude_at(z[j]);
            if pv.norm() <= noise {
                done[j] = true;
                continue;
            }
            all_done = false;
            let mut repulsion = c64(0.0, 0.0);
            for k in 0..n {
                if k != j {
                    let d = z[j] - z[k];
                    if d.norm() > 0.0 {
                        repulsion += d.inv();
                    }
                }
            }
            let denom = dpv / pv - repulsion;
            let step = if denom.norm() > 0.0 { denom.inv() } else { c64(radius * 1e-3, 0.0) };
            z[j] -= step;
            if step.norm() <= 4.0 * eps * z[j].norm().max(eps) {
                done[j] = true;
            }
        }
        if all_done {
            return Ok(z);
        }
    }
    // Slow linear convergence near multiple roots can stall above the
    // rounding floor; accept when the loose residual bound holds.
    let scale = p.max_coeff();
    if z.iter().all(|&r| p.eval(r).norm() <= 1e-10 * scale * r.norm().max(1.0).powi(n as i32)) {
        Ok(z)
    } else {
        Err(Error::NonConvergence { iterations: MAX_ABERTH_ITERATIONS })
    }
}

fn cluster_roots(p: &ComplexPoly, z: &[Complex64]) -> Vec<Root> {
    let n = z.len();
    let eps = f64::EPSILON;
    // Inclusion radii n (|P(z_j)| + rounding) / |Π_{k≠j} (z_j - z_k)|; a
    // connected union of m such disks contains exactly m roots.
    let radii: Vec<f64> = (0..n)
        .map(|j| {
            let prod = (0..n).filter(|&k| k != j).fold(1.0, |acc, k| acc * (z[j] - z[k]).norm());
            let resid = p.eval(z[j]).norm() + 4.0 * n as f64 * eps * p.magnitude_at(z[j]);
            if prod > 0.0 {
                n as f64 * resid / prod
            } else {
                f64::INFINITY
            }
        })
        .collect();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut [usize], i: usize) -> usize {
        let mut r = i;
        while parent[r] != r {
            r = parent[r];
        }
        let mut k = i;
        while parent[k] != r {
            let next = parent[k];
            parent[k] = r;
            k = next;
        }
        r
    }
    for j in 0..n {
        for k in (j + 1)..n {
            let d = (z[j] - z[k]).norm();
            let close = d <= radii[j] + radii[k] || d <= CLUSTER_RADIUS * (1.0 + z[j].norm());
            if close {
                let (a, b) = (find(&mut parent, j), find(&mut parent, k));
                if a != b {
                    parent[a] = b;
                }
            }
        }
    }
    let mut groups: Vec<(usize, Vec<usize>)> = Vec::new();
    for j in 0..n {
        let r = find(&mut parent, j);
        match groups.iter_mut().find(|(root, _)| *root == r) {
            Some((_, members)) => members.push(j),
            None => groups.push((r, vec![j])),
        }
    }
    groups
        .into_iter()
        .map(|(_, members)| {
            let m = members.len();
            let mut center = members.iter().fold(c64(0.0, 0.0), |acc, &j| acc + z[j]) / m as f64;
            // A root of multiplicity m is a simple root of P^{(m-1)}.
            let q = p.nth_derivative(m - 1);
            let spread = members.iter().map(|&j| (z[j] - center).norm()).fold(0.0, f64::max);
            let window = 10.0 * spread + 1e-12 * (1.0 + center.norm());
            let start = center;
            for _ in 0..30 {
                let (qv, dqv) = q.eval_with_derivative(center);
                if dqv.norm() == 0.0 {
                    break;
                }
                let step = qv / dqv;
                let next = center - step;
                if (next - start).norm() > window || !next.re.is_finite() {
                    break;
                }
                center = next;
                if step.norm() <= 2.0 * eps * center.norm().max(eps) {
                    break;
                }
            }
            if p.eval(center).norm() > p.eval(start).norm() && m == 1 {
                center = start;
            }
            Root { z: center, multiplicity: m }
        })
        .collect()
}
