//! The exterior map at infinity.
//!
//! For monic `P` of degree `n`, `φ(ζ) = ζ + b₀ + b₁/ζ + …` solves
//! `P(φ(ζ)) = ζⁿ`. With `√φ'(ζ) = 1 + Σ_{k≥2} c₋ₖ ζ^{-k}` the length of
//! `E_P(t)` for `t ≥ T(P)` is
//!
//! ```text
//! L(t) = 2π e^{t/n} (1 + Σ_{k≥2} |c₋ₖ|² e^{-2kt/n}),
//! ```
//!
//! an exponential sum whose atoms are `((1-2k)/n, 2π|c₋ₖ|²)`.

use crate::poly::ComplexPoly;
use crate::prelude::*;
use crate::{Error, Result};

pub const MAX_TRUNCATION: usize = 256;
pub const DEFAULT_TRUNCATION: usize = 64;

/// Truncated Laurent series `leading·ζ + Σ_{k=0}^{N} coeffs[k] ζ^{-k}`.
#[derive(Debug, Clone, PartialEq)]
pub struct LaurentTail {
    pub leading: Complex64,
    pub coeffs: Vec<Complex64>,
}

impl LaurentTail {
    pub fn truncation(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }

    /// Term-wise derivative; the `ζ^{-N-1}` term is dropped.
    pub fn derivative(&self) -> LaurentTail {
        let mut coeffs = vec![c64(0.0, 0.0); self.coeffs.len()];
        if let Some(first) = coeffs.first_mut() {
            *first = self.leading;
        }
        for k in 1..self.coeffs.len().saturating_sub(1) {
            coeffs[k + 1] = self.coeffs[k] * -(k as f64);
        }
        LaurentTail { leading: c64(0.0, 0.0), coeffs }
    }

    /// Square root with constant term 1; needs `leading = 0` and `coeffs[0] = 1`.
    pub fn sqrt(&self) -> Result<LaurentTail> {
        if self.leading != c64(0.0, 0.0) || self.coeffs.first() != Some(&c64(1.0, 0.0)) {
            return Err(Error::InvalidInput("series must start with 1"));
        }
        Ok(LaurentTail { leading: c64(0.0, 0.0), coeffs: series_sqrt(&self.coeffs) })
    }

    pub fn eval(&self, zeta: Complex64) -> Complex64 {
        let x = zeta.inv();
        let mut acc = c64(0.0, 0.0);
        for c in self.coeffs.iter().rev() {
            acc = acc * x + c;
        }
        self.leading * zeta + acc
    }
}

fn series_mul(a: &[Complex64], b: &[Complex64], len: usize) -> Vec<Complex64> {
    let mut out = vec![c64(0.0, 0.0); len];
    for (i, x) in a.iter().enumerate().take(len) {
        if *x == c64(0.0, 0.0) {
            continue;
        }
        for (j, y) in b.iter().enumerate().take(len - i) {
            out[i + j] += x * y;
        }
    }
    out
}

fn series_inv(a: &[Complex64], len: usize) -> Vec<Complex64> {
    let mut out = vec![c64(0.0, 0.0); len];
    let inv0 = a[0].inv();
    out[0] = inv0;
    for k in 1..len {
        let mut s = c64(0.0, 0.0);
        for j in 1..=k.min(a.len() - 1) {
            s += a[j] * out[k - j];
        }
        out[k] = -s * inv0;
    }
    out
}

/// `√a` with `a[0] = 1` and `√1 = 1`.
fn series_sqrt(a: &[Complex64]) -> Vec<Complex64> {
    let mut s = vec![c64(0.0, 0.0); a.len()];
    if a.is_empty() {
        return s;
    }
    s[0] = c64(1.0, 0.0);
    for k in 1..a.len() {
        let mut acc = a[k];
        for j in 1..k {
            acc -= s[j] * s[k - j];
        }
        s[k] = acc * 0.5;
    }
    s
}

/// `R(u) = Σ a_j x^j u^{n-j} - 1` and `R'(u)` to `len` terms (Horner in `u`).
fn residual_and_slope(a: &[Complex64], u: &[Complex64], len: usize) -> (Vec<Complex64>, Vec<Complex64>) {
    let n = a.len() - 1;
    let mut r = vec![c64(0.0, 0.0); len];
    let mut dr = vec![c64(0.0, 0.0); len];
    r[0] = a[0];
    for j in 1..=n {
        dr = series_mul(&dr, u, len);
        for (d, x) in dr.iter_mut().zip(&r) {
            *d += x;
        }
        r = series_mul(&r, u, len);
        if j < len {
            r[j] += a[j];
        }
    }
    r[0] -= 1.0;
    (r, dr)
}

/// `φ` with `P(φ(ζ)) = ζⁿ` to order `ζ^{-N}`, by series Newton with order
/// doubling.
pub fn invert_at_infinity(p: &ComplexPoly, truncation: usize) -> Result<LaurentTail> {
    if p.degree() == 0 || !p.is_monic() {
        return Err(Error::InvalidInput("polynomial must be monic of degree >= 1"));
    }
    if truncation > MAX_TRUNCATION {
        return Err(Error::OrderOverflow { requested: truncation, limit: MAX_TRUNCATION });
    }
    let a = p.coeffs();
    let full = truncation + 2;
    let mut u = vec![c64(1.0, 0.0)];
    let mut len = 1usize;
    let mut iterations = 0usize;
    loop {
        let grown = (2 * len).min(full);
        let finishing = grown == len;
        len = grown;
        u.resize(len, c64(0.0, 0.0));
        let (r, dr) = residual_and_slope(a, &u, len);
        let delta = series_mul(&r, &series_inv(&dr, len), len);
        for (x, d) in u.iter_mut().zip(&delta) {
            *x -= d;
        }
        iterations += 1;
        if finishing {
            break;
        }
        if iterations > 64 {
            return Err(Error::NonConvergence { iterations });
        }
    }
    let scale = p.max_coeff().max(1.0);
    let (r, _) = residual_and_slope(a, &u, len);
    let worst = r.iter().map(|x| x.norm()).fold(0.0, f64::max);
    let ref_scale = u.iter().map(|x| x.norm()).fold(1.0, f64::max).powi(p.degree() as i32) * scale;
    if !(worst <= 1e-10 * ref_scale) {
        return Err(Error::NonConvergence { iterations });
    }
    Ok(LaurentTail { leading: u[0], coeffs: u[1..].to_vec() })
}

/// Coefficients of `P(φ(ζ)) ζ^{-n} - 1` in powers of `1/ζ` (should vanish).
pub fn composition_residual(p: &ComplexPoly, phi: &LaurentTail) -> Vec<Complex64> {
    let mut u = vec![phi.leading];
    u.extend_from_slice(&phi.coeffs);
    let len = u.len();
    residual_and_slope(p.coeffs(), &u, len).0
}

/// `c[k] = c₋ₖ`, the coefficients of `√φ'` (so `c[0] = 1` and `c[1] = 0`).
pub fn sqrt_phi_prime(phi: &LaurentTail) -> Result<Vec<Complex64>> {
    let c = phi.derivative().sqrt()?.coeffs;
    debug_assert!(c.len() < 2 || c[1] == c64(0.0, 0.0));
    Ok(c)
}

/// `c₋₂` from the two leading coefficients of monic `P`.
pub fn second_coefficient(p: &ComplexPoly) -> Complex64 {
    let n = p.degree() as f64;
    let a = p.coeffs();
    let a1 = a.get(1).copied().unwrap_or_default();
    let a2 = a.get(2).copied().unwrap_or_default();
    -(a1 * a1 * (n - 1.0) - a2 * (2.0 * n)) / (4.0 * n * n)
}

/// Exponential-sum model of the post-critical length function.
#[derive(Debug, Clone, PartialEq)]
pub struct LaurentModel {
    pub n: usize,
    pub truncation: usize,
    /// `c[k] = c₋ₖ` for `k = 0..=N`.
    pub c: Vec<Complex64>,
    /// Largest finite critical value of `ln|P|` (`-∞` if none).
    pub critical_level: f64,
    /// `(x_k, w_k) = ((1-2k)/n, 2π|c₋ₖ|²)` for the non-vanishing terms.
    pub atoms: Vec<(f64, f64)>,
}

/// Truncated tail sum with its error information.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TailValue {
    /// Partial sum up to the truncation order.
    pub value: f64,
    /// Bound on the omitted terms from a geometric fit of the last
    /// coefficients (`∞` when the fit does not decay).
    pub bound: f64,
    /// Partial sums at `N/4, N/2, N` extrapolated by Aitken's Δ²; useful when
    /// the omitted terms decay like a power (at `t = T(P)`).
    pub accelerated: f64,
}

impl LaurentModel {
    pub fn new(p: &ComplexPoly, truncation: usize) -> Result<Self> {
        if truncation < 2 {
            return Err(Error::InvalidInput("truncation must be at least 2"));
        }
        let phi = invert_at_infinity(p, truncation)?;
        let c = sqrt_phi_prime(&phi)?;
        let n = p.degree();
        let critical_level = p.critical_data()?.t_max.unwrap_or(f64::NEG_INFINITY);
        let mut atoms = vec![(1.0 / n as f64, TAU)];
        for (k, ck) in c.iter().enumerate().skip(2) {
            let w = TAU * ck.norm_sqr();
            if w > 0.0 {
                atoms.push(((1.0 - 2.0 * k as f64) / n as f64, w));
            }
        }
        Ok(Self { n, truncation, c, critical_level, atoms })
    }

    fn partial(&self, t: f64, upto: usize) -> f64 {
        let n = self.n as f64;
        let mut s = 0.0;
        for (k, ck) in self.c.iter().enumerate().take(upto + 1).skip(2) {
            s += ck.norm_sqr() * (-2.0 * k as f64 * t / n).exp();
        }
        TAU * (t / n).exp() * (1.0 + s)
    }

    /// Geometric fit `|c₋ₖ| ≤ C r^k` from the last non-vanishing coefficients.
    pub fn geometric_fit(&self) -> (f64, f64) {
        let tail: Vec<(f64, f64)> = self
            .c
            .iter()
            .enumerate()
            .skip(2)
            .rev()
            .take(16)
            .filter(|(_, c)| c.norm() > 0.0)
            .take(8)
            .map(|(k, c)| (k as f64, c.norm().ln()))
            .collect();
        match tail.len() {
            0 => (0.0, 0.0),
            1 => (1.0, (tail[0].1 / tail[0].0).exp()),
            m => {
                let mx = tail.iter().map(|p| p.0).sum::<f64>() / m as f64;
                let my = tail.iter().map(|p| p.1).sum::<f64>() / m as f64;
                let sxy: f64 = tail.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
                let sxx: f64 = tail.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
                let slope = sxy / sxx;
                let cst = tail.iter().map(|p| p.1 - slope * p.0).fold(f64::NEG_INFINITY, f64::max);
                (cst.exp(), slope.exp())
            }
        }
    }

    /// Length at real `t` with truncation information.
    pub fn tail_value(&self, t: f64) -> TailValue {
        let n = self.n as f64;
        let big_n = self.truncation;
        let value = self.partial(t, big_n);
        let (cst, r) = self.geometric_fit();
        let rho = r * r * (-2.0 * t / n).exp();
        let bound = if cst == 0.0 {
            0.0
        } else if rho < 1.0 {
            TAU * (t / n).exp() * cst * cst * rho.powi(big_n as i32 + 1) / (1.0 - rho)
        } else {
            f64::INFINITY
        };
        let s1 = self.partial(t, big_n / 4);
        let s2 = self.partial(t, big_n / 2);
        let (d1, d2) = (s2 - s1, value - s2);
        let accelerated = if d1 != 0.0 && d2 != 0.0 && (d2 / d1) < 1.0 && (d2 / d1) > 0.0 {
            let ratio = d2 / d1;
            value + d2 * ratio / (1.0 - ratio)
        } else {
            value
        };
        TailValue { value, bound, accelerated }
    }

    /// `L(t)`, refusing when the truncation bound exceeds `tolerance`
    /// relative to the value.
    pub fn tail_length(&self, t: f64, tolerance: f64) -> Result<f64> {
        let v = self.tail_value(t);
        if !(v.bound <= tolerance * v.value) {
            return Err(Error::TailTooFat { bound: v.bound / v.value, tolerance });
        }
        Ok(v.value)
    }

    /// Analytic continuation of the length series to complex `t`.
    pub fn tail_length_complex(&self, t: Complex64) -> Complex64 {
        let n = self.n as f64;
        let mut s = c64(1.0, 0.0);
        for (k, ck) in self.c.iter().enumerate().skip(2) {
            s += (t * (-2.0 * k as f64 / n)).exp() * ck.norm_sqr();
        }
        (t / n).exp() * s * TAU
    }

    /// `λ(s) = 2π(s + Σ|c₋ₖ|² s^{1-2k})`, so that `L(t) = λ(e^{t/n})`.
    pub fn lambda(&self, s: Complex64) -> Complex64 {
        let inv2 = (s * s).inv();
        let mut pw = s * inv2;
        let mut acc = s;
        for ck in self.c.iter().skip(2) {
            pw *= inv2;
            acc += pw * ck.norm_sqr();
        }
        acc * TAU
    }

    pub fn sigma_atoms(&self) -> &[(f64, f64)] {
        &self.atoms
    }

    /// `Σ w_k e^{x_k t}`.
    pub fn reconstruct(&self, t: f64) -> f64 {
        self.atoms.iter().map(|(x, w)| w * (x * t).exp()).sum()
    }

    /// `d^j/dt^j (e^{-t/n} L(t))` by term-wise differentiation.
    pub fn normalized_derivative(&self, t: f64, j: usize) -> f64 {
        let n = self.n as f64;
        let mut s = if j == 0 { 1.0 } else { 0.0 };
        for (k, ck) in self.c.iter().enumerate().skip(2) {
            let rate = -2.0 * k as f64 / n;
            s += ck.norm_sqr() * rate.powi(j as i32) * (rate * t).exp();
        }
        TAU * s
    }

    /// `h(t) = e^{4t/n}(e^{-t/n}L(t)/(2π) - 1)`, summed directly from the series.
    pub fn lower_estimate_h(&self, t: f64) -> f64 {
        let n = self.n as f64;
        self.c.iter().enumerate().skip(2).map(|(k, ck)| ck.norm_sqr() * (-2.0 * (k as f64 - 2.0) * t / n).exp()).sum()
    }
}

/// Outcome of the lower-estimate check.
#[derive(Debug, Clone, PartialEq)]
pub struct LowerEstimateReport {
    pub grid: Vec<(f64, f64)>,
    /// `|((n-1)a₁² - 2na₂)/(4n²)|²`.
    pub bound: f64,
    pub above_bound: bool,
    pub decreasing: bool,
    /// `|h(t_max) - |c₋₂|²|`.
    pub limit_gap: f64,
}

pub fn lower_estimate_check(p: &ComplexPoly, model: &LaurentModel, grid: &[f64]) -> Result<LowerEstimateReport> {
    if grid.iter().any(|t| *t < model.critical_level) {
        return Err(Error::InvalidInput("grid must lie in [T(P), ∞)"));
    }
    let bound = second_coefficient(p).norm_sqr();
    let values: Vec<(f64, f64)> = grid.iter().map(|&t| (t, model.lower_estimate_h(t))).collect();
    let above_bound = values.iter().all(|(_, h)| *h >= bound - 1e-9);
    let decreasing = values.windows(2).all(|w| w[1].1 <= w[0].1);
    let c2 = model.c.get(2).map(|c| c.norm_sqr()).unwrap_or(0.0);
    let limit_gap = values.last().map(|(_, h)| (h - c2).abs()).unwrap_or(0.0);
    Ok(LowerEstimateReport { grid: values, bound, above_bound, decreasing, limit_gap })
}

/// Worst value of `(-1)^k d^k/dt^k (e^{-t/n}L)` for each `k = 0..=K` over a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct MonotonicityReport {
    pub min_signed: Vec<f64>,
    pub holds: bool,
}

pub fn cm_check(model: &LaurentModel, grid: &[f64], max_k: usize) -> Result<MonotonicityReport> {
    if max_k > 8 {
        return Err(Error::OrderOverflow { requested: max_k, limit: 8 });
    }
    let min_signed: Vec<f64> = (0..=max_k)
        .map(|k| {
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            grid.iter().map(|&t| sign * model.normalized_derivative(t, k)).fold(f64::INFINITY, f64::min)
        })
        .collect();
    let holds = min_signed.iter().all(|v| *v >= -1e-10);
    Ok(MonotonicityReport { min_signed, holds })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(c: &[f64]) -> ComplexPoly {
        ComplexPoly::from_real(c)
    }

    /// Binomial series of (1 + y)^e.
    fn binomial(e: f64, m: usize) -> Vec<f64> {
        let mut out = vec![1.0];
        for j in 1..m {
            let prev = out[j - 1];
            out.push(prev * (e - (j as f64 - 1.0)) / j as f64);
        }
        out
    }

    #[test]
    fn monomial_is_identity() {
        let phi = invert_at_infinity(&p(&[1.0, 0.0, 0.0, 0.0]), 16).unwrap();
        assert_eq!(phi.leading, c64(1.0, 0.0));
        assert!(phi.coeffs.iter().all(|c| *c == c64(0.0, 0.0)));
        let m = LaurentModel::new(&p(&[1.0, 0.0, 0.0, 0.0]), 16).unwrap();
        assert_eq!(m.atoms, vec![(1.0 / 3.0, TAU)]);
        assert_eq!(m.tail_length(0.7, 1e-12).unwrap(), TAU * (0.7f64 / 3.0).exp());
    }

    #[test]
    fn two_point_binomial_series() {
        let phi = invert_at_infinity(&p(&[1.0, 0.0, -1.0]), 24).unwrap();
        let b = binomial(0.5, 13);
        for (j, bj) in b.iter().enumerate() {
            let k = 2 * j;
            if k >= 1 && k - 1 < phi.coeffs.len() {
                assert!((phi.coeffs[k - 1] - bj).norm() < 1e-14, "{k}");
            }
        }
        let c = sqrt_phi_prime(&phi).unwrap();
        let d = binomial(-0.25, 13);
        for (j, dj) in d.iter().enumerate() {
            assert!((c[2 * j] - dj).norm() < 1e-14);
            if 2 * j + 1 < c.len() {
                assert_eq!(c[2 * j + 1].norm(), 0.0);
            }
        }
        assert_eq!(c[2], c64(-0.25, 0.0));
        assert_eq!(c[4], c64(5.0 / 32.0, 0.0));
    }

    #[test]
    fn center_shift() {
        let q = ComplexPoly::new(vec![c64(1.0, 0.0), c64(0.6, -1.2), c64(0.3, 0.4)]);
        let phi = invert_at_infinity(&q, 8).unwrap();
        assert!((phi.coeffs[0] - c64(-0.3, 0.6)).norm() < 1e-15);
    }

    #[test]
    fn second_coefficient_formula() {
        let q = p(&[1.0, 0.0, 1.0, 0.0]);
        let c = sqrt_phi_prime(&invert_at_infinity(&q, 8).unwrap()).unwrap();
        assert!((c[2] - c64(1.0 / 6.0, 0.0)).norm() < 1e-15);
        assert!((second_coefficient(&q) - c[2]).norm() < 1e-15);
        let q = ComplexPoly::new(vec![c64(1.0, 0.0), c64(0.5, 0.2), c64(-0.3, 1.0), c64(2.0, 0.0)]);
        let c = sqrt_phi_prime(&invert_at_infinity(&q, 8).unwrap()).unwrap();
        assert!((second_coefficient(&q) - c[2]).norm() < 1e-14);
    }

    #[test]
    fn atoms_and_reconstruction() {
        let m = LaurentModel::new(&p(&[1.0, 0.0, -1.0]), 32).unwrap();
        assert_eq!(m.critical_level, 0.0);
        assert_eq!(m.atoms[0], (0.5, TAU));
        assert_eq!(m.atoms[1], (-1.5, TAU / 16.0));
        assert!((m.atoms[2].1 - TAU * 25.0 / 1024.0).abs() < 1e-15);
        for t in [0.5, 1.0, 3.0] {
            let v = m.tail_value(t);
            assert!((m.reconstruct(t) - v.value).abs() < 1e-13 * v.value);
            assert!(t < 1.0 || v.bound < 1e-12 * v.value);
        }
    }

    #[test]
    fn critical_level_needs_acceleration() {
        let m = LaurentModel::new(&p(&[1.0, 0.0, -1.0]), 256).unwrap();
        assert!(matches!(m.tail_length(0.0, 1e-8), Err(Error::TailTooFat { .. })));
        let v = m.tail_value(0.0);
        let exact = 7.416_298_709_205_487;
        assert!((v.accelerated - exact).abs() < 1e-3 * exact);
        assert!((v.value - exact).abs() > (v.accelerated - exact).abs());
    }

    #[test]
    fn complex_continuation() {
        let m = LaurentModel::new(&p(&[1.0, 0.0, 1.0, -0.5]), 48).unwrap();
        let t = c64(m.critical_level + 1.0, 0.3);
        let shifted = t + c64(0.0, TAU * 3.0);
        let (a, b) = (m.tail_length_complex(t), m.tail_length_complex(shifted));
        assert!((a - b).norm() < 1e-12 * a.norm());
        let real = m.tail_value(t.re).value;
        assert!((m.tail_length_complex(c64(t.re, 0.0)).re - real).abs() < 1e-12 * real);
        let s = c64(1.7, -0.4);
        assert!((m.lambda(-s) + m.lambda(s)).norm() < 1e-12 * m.lambda(s).norm());
        let e = (t.re / 3.0).exp();
        assert!((m.lambda(c64(e, 0.0)).re - real).abs() < 1e-12 * real);
    }

    #[test]
    fn lower_estimate_and_monotonicity() {
        for q in [p(&[1.0, 0.0, -1.0]), p(&[1.0, 0.0, 1.0, 0.0])] {
            let m = LaurentModel::new(&q, 64).unwrap();
            let t0 = m.critical_level;
            let grid: Vec<f64> = (0..=20).map(|i| t0 + 0.25 * i as f64).collect();
            let r = lower_estimate_check(&q, &m, &grid).unwrap();
            assert!(r.above_bound && r.decreasing);
            assert!(r.limit_gap < 0.1 * r.bound);
            let grid: Vec<f64> = (0..=9).map(|i| t0 + 0.5 + 0.5 * i as f64).collect();
            assert!(cm_check(&m, &grid, 6).unwrap().holds);
        }
    }
}
