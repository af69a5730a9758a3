//! Gauss hypergeometric function and closed-form lengths for solutions of
//! `φ' = C(1 - φ^ν)^{(k+1)/ν}`.

use crate::jets::CatalogKind;
use crate::prelude::*;
use crate::{Error, Result};

const MAX_TERMS: usize = 200_000;

const LANCZOS_G: f64 = 7.0;
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

/// Gamma function for real arguments (Lanczos, `g = 7`).
pub fn gamma(x: f64) -> f64 {
    if x < 0.5 {
        let pi = core::f64::consts::PI;
        return pi / ((pi * x).sin() * gamma(1.0 - x));
    }
    let x = x - 1.0;
    let mut acc = LANCZOS[0];
    for (i, c) in LANCZOS.iter().enumerate().skip(1) {
        acc += c / (x + i as f64);
    }
    let t = x + LANCZOS_G + 0.5;
    (2.0 * core::f64::consts::PI).sqrt() * t.powf(x + 0.5) * (-t).exp() * acc
}

fn nonpositive_integer(c: f64) -> bool {
    c <= 0.0 && c == c.round()
}

/// `₂F₁(a, b; c; z)` for complex `|z| < 1` by direct summation.
pub fn gauss_2f1_complex(a: f64, b: f64, c: f64, z: Complex64) -> Result<Complex64> {
    if nonpositive_integer(c) {
        return Err(Error::InvalidInput("c must not be a non-positive integer"));
    }
    let r = z.norm();
    if !(r < 1.0) {
        return Err(Error::InvalidInput("series needs |z| < 1"));
    }
    let mut term = c64(1.0, 0.0);
    let mut sum = term;
    for k in 0..MAX_TERMS {
        let kf = k as f64;
        let ratio = (a + kf) * (b + kf) / ((c + kf) * (kf + 1.0));
        term *= z * ratio;
        sum += term;
        if term.norm() == 0.0 {
            return Ok(sum);
        }
        // Ratios of later terms approach r from above when a + b > c + 1;
        // bound the remainder by the larger of the two.
        let rho = ratio.abs().max(1.0) * r;
        if rho < 1.0 && term.norm() * rho / (1.0 - rho) <= 1e-16 * sum.norm() {
            return Ok(sum);
        }
    }
    Err(Error::SlowConvergence(r))
}

/// `₂F₁(a, b; c; x)` for real `x ∈ [0, 1]`; `x = 1` uses Gauss's summation.
pub fn gauss_2f1(a: f64, b: f64, c: f64, x: f64) -> Result<f64> {
    if !(x <= 1.0) || x < -1.0 {
        return Err(Error::InvalidInput("argument outside [-1, 1]"));
    }
    if x == 1.0 {
        let s = c - a - b;
        if s <= 0.0 {
            return Err(Error::DivergesAtOne(s));
        }
        if nonpositive_integer(c) {
            return Err(Error::InvalidInput("c must not be a non-positive integer"));
        }
        return Ok(gamma(c) * gamma(s) / (gamma(c - a) * gamma(c - b)));
    }
    Ok(gauss_2f1_complex(a, b, c, c64(x, 0.0))?.re)
}

/// Parameters of a D-function `φ' = C(1 - φ^ν)^{(k+1)/ν}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DFunctionSpec {
    pub k: f64,
    pub nu: u32,
    pub c: Complex64,
}

impl DFunctionSpec {
    pub fn new(k: f64, nu: u32, c: Complex64) -> Result<Self> {
        if nu == 0 {
            return Err(Error::InvalidInput("ν must be a positive integer"));
        }
        if c.norm() == 0.0 {
            return Err(Error::InvalidInput("C must be non-zero"));
        }
        if !(k + 1.0 <= nu as f64 && k + 1.0 > 0.0) {
            return Err(Error::InvalidInput("need 0 < k + 1 <= ν"));
        }
        Ok(Self { k, nu, c })
    }

    /// Row for a catalog member.
    pub fn for_catalog(kind: CatalogKind) -> Result<Self> {
        match kind {
            CatalogKind::OneMinusZn { n } if n >= 2 => Self::new(-1.0 / n as f64, 1, c64(-(n as f64), 0.0)),
            CatalogKind::OneMinusZn { .. } => Err(Error::InvalidInput("1 - z^n needs n >= 2")),
            CatalogKind::Sin => Self::new(0.0, 2, c64(1.0, 0.0)),
            CatalogKind::Tanh => Self::new(1.0, 2, c64(1.0, 0.0)),
            CatalogKind::ExpPlusOne => Self::new(0.0, 1, c64(1.0, 0.0)),
        }
    }

    pub fn p(&self) -> f64 {
        (self.k + 1.0) / (2.0 * self.nu as f64)
    }

    fn x(&self, t: f64) -> f64 {
        (2.0 * self.nu as f64 * t).exp()
    }
}

/// Length of the `t`-level inside one region, `(2π e^t/|C|) ₂F₁(p, p; 1; e^{2νt})`.
pub fn dfun_length(spec: &DFunctionSpec, t: f64) -> Result<f64> {
    if t > 0.0 {
        return Err(Error::InvalidInput("closed form needs t <= 0"));
    }
    let p = spec.p();
    Ok(TAU * t.exp() / spec.c.norm() * gauss_2f1(p, p, 1.0, spec.x(t))?)
}

/// `(L, L', L'')` of the closed form at `t < 0`.
pub fn dfun_derivatives(spec: &DFunctionSpec, t: f64) -> Result<(f64, f64, f64)> {
    if t >= 0.0 {
        return Err(Error::InvalidInput("derivatives need t < 0"));
    }
    let (p, nu, x) = (spec.p(), spec.nu as f64, spec.x(t));
    let y = gauss_2f1(p, p, 1.0, x)?;
    let y1 = p * p * gauss_2f1(p + 1.0, p + 1.0, 2.0, x)?;
    let y2 = p * p * (p + 1.0) * (p + 1.0) / 2.0 * gauss_2f1(p + 2.0, p + 2.0, 3.0, x)?;
    let a = TAU * t.exp() / spec.c.norm();
    let l1 = y + 2.0 * nu * x * y1;
    let l2 = y + 4.0 * nu * x * y1 + 4.0 * nu * nu * x * y1 + 4.0 * nu * nu * x * x * y2;
    Ok((a * y, a * l1, a * l2))
}

fn ode_terms(spec: &DFunctionSpec, t: f64, l: f64, l1: f64, l2: f64) -> (f64, f64) {
    let x = spec.x(t);
    let k = spec.k;
    let parts = [(x - 1.0) * l2, 2.0 * (k * x + 1.0) * l1, (k * k * x - 1.0) * l];
    let scale = parts.iter().map(|v| v.abs()).fold(0.0, f64::max);
    (parts.iter().sum(), scale)
}

/// Largest `|(x-1)L'' + 2(kx+1)L' + (k²x-1)L|` over the grid (`x = e^{2νt}`),
/// divided by the largest term magnitude; derivatives from the closed form.
pub fn dfun_ode_residual(spec: &DFunctionSpec, grid: &[f64]) -> Result<f64> {
    let mut worst = 0.0f64;
    let mut scale = 0.0f64;
    for &t in grid {
        let (l, l1, l2) = dfun_derivatives(spec, t)?;
        let (r, s) = ode_terms(spec, t, l, l1, l2);
        worst = worst.max(r.abs());
        scale = scale.max(s);
    }
    Ok(worst / scale)
}

/// Same residual for sampled lengths on a uniform grid, with centered
/// differences at the interior points.
pub fn dfun_ode_residual_sampled(spec: &DFunctionSpec, samples: &[(f64, f64)]) -> Result<f64> {
    if samples.len() < 3 {
        return Err(Error::InvalidInput("need at least three samples"));
    }
    let h = samples[1].0 - samples[0].0;
    if !(h > 0.0) || samples.windows(2).any(|w| ((w[1].0 - w[0].0) - h).abs() > 1e-9 * h.abs().max(1.0)) {
        return Err(Error::InvalidInput("samples must lie on a uniform increasing grid"));
    }
    let mut worst = 0.0f64;
    let mut scale = 0.0f64;
    for w in samples.windows(3) {
        let (t, l) = w[1];
        let l1 = (w[2].1 - w[0].1) / (2.0 * h);
        let l2 = (w[2].1 - 2.0 * l + w[0].1) / (h * h);
        let (r, s) = ode_terms(spec, t, l, l1, l2);
        worst = worst.max(r.abs());
        scale = scale.max(s);
    }
    Ok(worst / scale)
}

/// `F(ζ) = ζ ₂F₁((1+k)/ν, 1/ν; (1+ν)/ν; ζ^ν)` for `|ζ| < 1`.
pub fn dfun_f(spec: &DFunctionSpec, zeta: Complex64) -> Result<Complex64> {
    let nu = spec.nu as f64;
    let w = zeta.powu(spec.nu);
    Ok(zeta * gauss_2f1_complex((1.0 + spec.k) / nu, 1.0 / nu, (1.0 + nu) / nu, w)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gamma_values() {
        let pi = core::f64::consts::PI;
        assert!((gamma(0.5) - pi.sqrt()).abs() < 1e-14);
        assert!((gamma(5.0) - 24.0).abs() < 1e-12);
        for x in [0.1, 0.25, 0.75, 1.3, 2.2, 2.9] {
            let r = libm::tgamma(x);
            assert!((gamma(x) - r).abs() < 1e-13 * r, "{x}");
        }
    }

    #[test]
    fn series_examples() {
        assert_eq!(gauss_2f1(0.3, 0.7, 1.1, 0.0).unwrap(), 1.0);
        let x = (-2.0f64).exp();
        let v = gauss_2f1(0.25, 0.25, 1.0, x).unwrap();
        let mut term = 1.0;
        let mut sum = 1.0;
        for k in 0..60 {
            let kf = k as f64;
            term *= (0.25 + kf) * (0.25 + kf) / ((1.0 + kf) * (1.0 + kf)) * x;
            sum += term;
        }
        assert!((v - sum).abs() < 1e-15);
        assert!((v - 1.008_943_028_022_78).abs() < 1e-13);
        let at_one = gauss_2f1(0.25, 0.25, 1.0, 1.0).unwrap();
        assert!((at_one - 1.180_340_599_016_096).abs() < 1e-12);
        assert!(matches!(gauss_2f1(0.5, 0.5, 1.0, 1.0), Err(Error::DivergesAtOne(_))));
        // ₂F₁(1, 1; 2; x) = -ln(1-x)/x
        let x = 0.9;
        assert!((gauss_2f1(1.0, 1.0, 2.0, x).unwrap() + (1.0f64 - x).ln() / x).abs() < 1e-13);
    }

    #[test]
    fn length_examples() {
        let rose = DFunctionSpec::for_catalog(CatalogKind::OneMinusZn { n: 2 }).unwrap();
        assert_eq!(rose.p(), 0.25);
        let v = dfun_length(&rose, -1.0).unwrap();
        assert!((v - 1.166_063_051_866_8).abs() < 1e-12);
        let sin = DFunctionSpec::for_catalog(CatalogKind::Sin).unwrap();
        let t = -12.0;
        assert!((dfun_length(&sin, t).unwrap() / (TAU * t.exp()) - 1.0).abs() < 1e-15);
        let tanh = DFunctionSpec::for_catalog(CatalogKind::Tanh).unwrap();
        assert!(matches!(dfun_length(&tanh, 0.0), Err(Error::DivergesAtOne(_))));
        assert_eq!(DFunctionSpec::for_catalog(CatalogKind::ExpPlusOne).unwrap().p(), 0.5);
    }

    #[test]
    fn ode_residuals() {
        let grid: Vec<f64> = (0..=25).map(|i| -3.0 + 0.1 * i as f64).collect();
        for kind in [CatalogKind::OneMinusZn { n: 2 }, CatalogKind::Sin, CatalogKind::Tanh, CatalogKind::ExpPlusOne] {
            let spec = DFunctionSpec::for_catalog(kind).unwrap();
            assert!(dfun_ode_residual(&spec, &grid).unwrap() < 1e-12, "{kind:?}");
        }
    }

    #[test]
    fn primitive_examples() {
        let sin = DFunctionSpec::for_catalog(CatalogKind::Sin).unwrap();
        assert_eq!(dfun_f(&sin, c64(0.0, 0.0)).unwrap(), c64(0.0, 0.0));
        for x in [0.1, 0.5, -0.7] {
            assert!((dfun_f(&sin, c64(x, 0.0)).unwrap().re - libm::asin(x)).abs() < 1e-14);
        }
        let rose = DFunctionSpec::for_catalog(CatalogKind::OneMinusZn { n: 2 }).unwrap();
        let z = c64(0.3, 0.4);
        let exact = (c64(1.0, 0.0) - (c64(1.0, 0.0) - z).sqrt()) * 2.0;
        assert!((dfun_f(&rose, z).unwrap() - exact).norm() < 1e-14);
    }

    #[test]
    fn monotone_in_argument() {
        let mut prev = 0.0;
        for i in 0..95 {
            let v = gauss_2f1(0.25, 0.25, 1.0, i as f64 / 100.0).unwrap();
            assert!(v > prev);
            prev = v;
        }
    }
}
