//! Truncated Taylor arithmetic over `ℂ` and the catalog of analytic
//! functions used as level-curve sources.

use alloc::string::String;
use core::ops::{Add, Mul, Sub};

use crate::poly::{ComplexPoly, Root};
use crate::prelude::*;
use crate::{Error, Result};

/// A zero of an analytic function with its multiplicity.
pub type Zero = Root;

const SINGULAR: f64 = 1e-300;

/// Taylor coefficients `(f(c), f'(c), f''(c)/2!, …)` truncated at `order`.
#[derive(Debug, Clone, PartialEq)]
pub struct Jet {
    center: Complex64,
    coeffs: Vec<Complex64>,
}

impl Jet {
    pub fn new(center: Complex64, coeffs: Vec<Complex64>) -> Self {
        assert!(!coeffs.is_empty(), "a jet carries at least its value");
        Self { center, coeffs }
    }

    pub fn constant(center: Complex64, value: Complex64, order: usize) -> Self {
        let mut coeffs = vec![c64(0.0, 0.0); order + 1];
        coeffs[0] = value;
        Self { center, coeffs }
    }

    /// The jet of the identity map at `center`.
    pub fn variable(center: Complex64, order: usize) -> Self {
        let mut j = Self::constant(center, center, order);
        if order >= 1 {
            j.coeffs[1] = c64(1.0, 0.0);
        }
        j
    }

    /// Jet of a polynomial at `center`.
    pub fn of_poly(p: &ComplexPoly, center: Complex64, order: usize) -> Self {
        Self { center, coeffs: p.taylor_shift(center, order) }
    }

    pub fn center(&self) -> Complex64 {
        self.center
    }

    pub fn order(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn value(&self) -> Complex64 {
        self.coeffs[0]
    }

    /// `k`-th derivative at the center, `k! c_k`.
    pub fn derivative_value(&self, k: usize) -> Complex64 {
        let fact: f64 = (1..=k).map(|i| i as f64).product();
        self.coeffs[k] * fact
    }

    pub fn truncate(&self, order: usize) -> Self {
        Self { center: self.center, coeffs: self.coeffs[..=order.min(self.order())].to_vec() }
    }

    /// Jet of the derivative; one order is consumed.
    pub fn derivative(&self) -> Self {
        if self.order() == 0 {
            return Self::constant(self.center, c64(0.0, 0.0), 0);
        }
        let coeffs = (1..self.coeffs.len()).map(|k| self.coeffs[k] * k as f64).collect();
        Self { center: self.center, coeffs }
    }

    pub fn scale(&self, s: Complex64) -> Self {
        Self { center: self.center, coeffs: self.coeffs.iter().map(|c| c * s).collect() }
    }

    pub fn add_scalar(&self, s: Complex64) -> Self {
        let mut out = self.clone();
        out.coeffs[0] += s;
        out
    }

    pub fn div(&self, rhs: &Jet) -> Result<Jet> {
        let b0 = rhs.coeffs[0];
        if b0.norm() < SINGULAR {
            return Err(Error::DivisionBySingular);
        }
        let order = self.order().min(rhs.order());
        let mut q: Vec<Complex64> = Vec::with_capacity(order + 1);
        for k in 0..=order {
            let mut acc = self.coeffs[k];
            for j in 1..=k {
                acc -= rhs.coeffs[j] * q[k - j];
            }
            q.push(acc / b0);
        }
        Ok(Jet { center: self.center, coeffs: q })
    }

    pub fn recip(&self) -> Result<Jet> {
        Jet::constant(self.center, c64(1.0, 0.0), self.order()).div(self)
    }

    /// Principal square root; the constant term must be nonzero.
    pub fn sqrt(&self) -> Result<Jet> {
        let a0 = self.coeffs[0];
        if a0.norm() < SINGULAR {
            return Err(Error::DivisionBySingular);
        }
        let r0 = a0.sqrt();
        let mut r = vec![r0];
        for k in 1..=self.order() {
            let mut acc = self.coeffs[k];
            for j in 1..k {
                acc -= r[j] * r[k - j];
            }
            r.push(acc / (r0 * 2.0));
        }
        Ok(Jet { center: self.center, coeffs: r })
    }

    pub fn exp(&self) -> Jet {
        let mut e = vec![self.coeffs[0].exp()];
        for k in 1..=self.order() {
            let mut acc = c64(0.0, 0.0);
            for j in 1..=k {
                acc += self.coeffs[j] * e[k - j] * j as f64;
            }
            e.push(acc / k as f64);
        }
        Jet { center: self.center, coeffs: e }
    }

    pub fn sin_cos(&self) -> (Jet, Jet) {
        let x0 = self.coeffs[0];
        let mut s = vec![x0.sin()];
        let mut c = vec![x0.cos()];
        for k in 1..=self.order() {
            let mut sk = c64(0.0, 0.0);
            let mut ck = c64(0.0, 0.0);
            for j in 1..=k {
                let w = self.coeffs[j] * j as f64;
                sk += w * c[k - j];
                ck -= w * s[k - j];
            }
            s.push(sk / k as f64);
            c.push(ck / k as f64);
        }
        (Jet { center: self.center, coeffs: s }, Jet { center: self.center, coeffs: c })
    }

    pub fn sin(&self) -> Jet {
        self.sin_cos().0
    }

    /// `tanh x = 1 - 2 / (e^{2x} + 1)`.
    pub fn tanh(&self) -> Result<Jet> {
        let e2 = self.scale(c64(2.0, 0.0)).exp().add_scalar(c64(1.0, 0.0));
        Ok(e2.recip()?.scale(c64(-2.0, 0.0)).add_scalar(c64(1.0, 0.0)))
    }

    pub fn powi(&self, k: usize) -> Jet {
        let mut acc = Jet::constant(self.center, c64(1.0, 0.0), self.order());
        for _ in 0..k {
            acc = &acc * self;
        }
        acc
    }

    /// `p(self)` by Horner's rule in the jet ring.
    pub fn compose_poly(&self, p: &ComplexPoly) -> Jet {
        let mut acc = Jet::constant(self.center, c64(0.0, 0.0), self.order());
        for &c in p.coeffs() {
            acc = (&acc * self).add_scalar(c);
        }
        acc
    }

    fn zip_with(&self, rhs: &Jet, f: impl Fn(Complex64, Complex64) -> Complex64) -> Jet {
        debug_assert!((self.center - rhs.center).norm() <= 1e-15 * (1.0 + self.center.norm()));
        let order = self.order().min(rhs.order());
        let coeffs = (0..=order).map(|k| f(self.coeffs[k], rhs.coeffs[k])).collect();
        Jet { center: self.center, coeffs }
    }
}

impl Add for &Jet {
    type Output = Jet;
    fn add(self, rhs: &Jet) -> Jet {
        self.zip_with(rhs, |a, b| a + b)
    }
}

impl Sub for &Jet {
    type Output = Jet;
    fn sub(self, rhs: &Jet) -> Jet {
        self.zip_with(rhs, |a, b| a - b)
    }
}

impl Mul for &Jet {
    type Output = Jet;
    fn mul(self, rhs: &Jet) -> Jet {
        let order = self.order().min(rhs.order());
        let coeffs = (0..=order)
            .map(|k| (0..=k).fold(c64(0.0, 0.0), |acc, j| acc + self.coeffs[j] * rhs.coeffs[k - j]))
            .collect();
        Jet { center: self.center, coeffs }
    }
}

/// An analytic function whose level curves `ln|f| = t` can be traced.
pub trait Analytic {
    fn eval(&self, z: Complex64) -> Complex64;

    fn eval_with_derivative(&self, z: Complex64) -> (Complex64, Complex64);

    /// Taylor jet of `f` at `z` truncated at `order`.
    fn jet_at(&self, z: Complex64, order: usize) -> Result<Jet>;

    /// Known zeros with multiplicities (windowed for transcendental members).
    fn zeros(&self) -> Result<Vec<Zero>>;

    /// Zeros of `f'` inside the working window.
    fn critical_points(&self) -> Result<Vec<Complex64>>;

    /// Distinct finite critical values of `ln|f|`, increasing.
    fn critical_values(&self) -> Result<Vec<f64>>;

    /// Radius of a disk outside which no traced point of the `t`-level
    /// belonging to the working region can lie.
    fn bounding_radius(&self, t: f64, zeros: &[Zero]) -> f64;

    fn as_polynomial(&self) -> Option<&ComplexPoly> {
        None
    }

    fn describe(&self) -> String;
}

impl Analytic for ComplexPoly {
    fn eval(&self, z: Complex64) -> Complex64 {
        ComplexPoly::eval(self, z)
    }

    fn eval_with_derivative(&self, z: Complex64) -> (Complex64, Complex64) {
        ComplexPoly::eval_with_derivative(self, z)
    }

    fn jet_at(&self, z: Complex64, order: usize) -> Result<Jet> {
        Ok(Jet::of_poly(self, z, order))
    }

    fn zeros(&self) -> Result<Vec<Zero>> {
        self.roots()
    }

    fn critical_points(&self) -> Result<Vec<Complex64>> {
        let dp = self.derivative();
        if dp.degree() == 0 {
            return Ok(Vec::new());
        }
        Ok(dp.roots()?.into_iter().map(|r| r.z).collect())
    }

    fn critical_values(&self) -> Result<Vec<f64>> {
        Ok(self.critical_data()?.values())
    }

    fn bounding_radius(&self, t: f64, zeros: &[Zero]) -> f64 {
        let rmax = zeros.iter().map(|r| r.z.norm()).fold(1.0, f64::max);
        2.0 + 2.0 * rmax + (t / self.degree() as f64).exp()
    }

    fn as_polynomial(&self) -> Option<&ComplexPoly> {
        Some(self)
    }

    fn describe(&self) -> String {
        alloc::format!("polynomial of degree {}", self.degree())
    }
}

/// Members of the built-in catalog.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CatalogKind {
    /// `1 - z^n`
    OneMinusZn {
        n: usize,
    },
    Sin,
    Tanh,
    /// `e^{-z} + 1`
    ExpPlusOne,
}

/// Parameters accepted by [`catalog`].
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct CatalogParams {
    pub n: Option<usize>,
    /// Half-width of the square window used to list zeros (default 20).
    pub window: Option<f64>,
}

pub const DEFAULT_WINDOW: f64 = 20.0;

/// A catalog function together with its zero window.
#[derive(Debug, Clone, PartialEq)]
pub struct CatalogFunction {
    pub kind: CatalogKind,
    pub window: f64,
    poly: Option<ComplexPoly>,
}

/// Looks up a catalog member by name: `one_minus_zn` (param `n`), `sin`,
/// `tanh`, `exp_plus_one`.
pub fn catalog(name: &str, params: CatalogParams) -> Result<CatalogFunction> {
    let window = params.window.unwrap_or(DEFAULT_WINDOW);
    if !(window > 0.0) {
        return Err(Error::InvalidInput("window must be positive"));
    }
    let kind = match name {
        "one_minus_zn" => {
            let n = params.n.ok_or(Error::InvalidInput("one_minus_zn needs parameter n"))?;
            if n == 0 || n > crate::poly::MAX_DEGREE {
                return Err(Error::InvalidInput("n must lie in 1..=64"));
            }
            CatalogKind::OneMinusZn { n }
        }
        "sin" => CatalogKind::Sin,
        "tanh" => CatalogKind::Tanh,
        "exp_plus_one" => CatalogKind::ExpPlusOne,
        other => return Err(Error::UnknownFamily(other.into())),
    };
    let poly = match kind {
        CatalogKind::OneMinusZn { n } => {
            let mut c = vec![c64(0.0, 0.0); n + 1];
            c[0] = c64(-1.0, 0.0);
            c[n] = c64(1.0, 0.0);
            Some(ComplexPoly::new(c))
        }
        _ => None,
    };
    Ok(CatalogFunction { kind, window, poly })
}

impl CatalogFunction {
    pub fn name(&self) -> &'static str {
        match self.kind {
            CatalogKind::OneMinusZn { .. } => "one_minus_zn",
            CatalogKind::Sin => "sin",
            CatalogKind::Tanh => "tanh",
            CatalogKind::ExpPlusOne => "exp_plus_one",
        }
    }

    fn in_window(&self, z: Complex64) -> bool {
        z.re.abs() <= self.window && z.im.abs() <= self.window
    }

    /// Values `x0 + k·step` inside the window, in order of distance to 0.
    fn lattice(&self, x0: Complex64, step: Complex64) -> Vec<Complex64> {
        let kmax = (self.window / step.norm()).ceil() as i64 + 1;
        let mut out: Vec<Complex64> =
            (-kmax..=kmax).map(|k| x0 + step * k as f64).filter(|z| self.in_window(*z)).collect();
        out.sort_by(|a, b| a.norm().partial_cmp(&b.norm()).unwrap_or(core::cmp::Ordering::Equal));
        out
    }
}

impl Analytic for CatalogFunction {
    fn eval(&self, z: Complex64) -> Complex64 {
        match self.kind {
            CatalogKind::OneMinusZn { .. } => self.poly.as_ref().map(|p| p.eval(z)).unwrap_or_default(),
            CatalogKind::Sin => z.sin(),
            CatalogKind::Tanh => z.tanh(),
            CatalogKind::ExpPlusOne => (-z).exp() + 1.0,
        }
    }

    fn eval_with_derivative(&self, z: Complex64) -> (Complex64, Complex64) {
        match self.kind {
            CatalogKind::OneMinusZn { .. } => self.poly.as_ref().map(|p| p.eval_with_derivative(z)).unwrap_or_default(),
            CatalogKind::Sin => (z.sin(), z.cos()),
            CatalogKind::Tanh => {
                let t = z.tanh();
                (t, 1.0 - t * t)
            }
            CatalogKind::ExpPlusOne => {
                let e = (-z).exp();
                (e + 1.0, -e)
            }
        }
    }

    fn jet_at(&self, z: Complex64, order: usize) -> Result<Jet> {
        let x = Jet::variable(z, order);
        match self.kind {
            CatalogKind::OneMinusZn { .. } => {
                Ok(Jet::of_poly(self.poly.as_ref().ok_or(Error::DegenerateDerivative)?, z, order))
            }
            CatalogKind::Sin => Ok(x.sin()),
            CatalogKind::Tanh => x.tanh(),
            CatalogKind::ExpPlusOne => Ok(x.scale(c64(-1.0, 0.0)).exp().add_scalar(c64(1.0, 0.0))),
        }
    }

    fn zeros(&self) -> Result<Vec<Zero>> {
        let simple = |zs: Vec<Complex64>| zs.into_iter().map(|z| Root { z, multiplicity: 1 }).collect();
        Ok(match self.kind {
            CatalogKind::OneMinusZn { n } => {
                simple((0..n).map(|k| Complex64::from_polar(1.0, TAU * k as f64 / n as f64)).collect())
            }
            CatalogKind::Sin => simple(self.lattice(c64(0.0, 0.0), c64(core::f64::consts::PI, 0.0))),
            CatalogKind::Tanh => simple(self.lattice(c64(0.0, 0.0), c64(0.0, core::f64::consts::PI))),
            CatalogKind::ExpPlusOne => simple(self.lattice(c64(0.0, core::f64::consts::PI), c64(0.0, TAU))),
        })
    }

    fn critical_points(&self) -> Result<Vec<Complex64>> {
        Ok(match self.kind {
            CatalogKind::OneMinusZn { n } if n >= 2 => vec![c64(0.0, 0.0)],
            CatalogKind::Sin => self.lattice(c64(core::f64::consts::FRAC_PI_2, 0.0), c64(core::f64::consts::PI, 0.0)),
            _ => Vec::new(),
        })
    }

    fn critical_values(&self) -> Result<Vec<f64>> {
        Ok(match self.kind {
            CatalogKind::OneMinusZn { n } if n >= 2 => vec![0.0],
            CatalogKind::Sin => vec![0.0],
            _ => Vec::new(),
        })
    }

    fn bounding_radius(&self, t: f64, zeros: &[Zero]) -> f64 {
        match (&self.kind, &self.poly) {
            (CatalogKind::OneMinusZn { .. }, Some(p)) => p.bounding_radius(t, zeros),
            _ => self.window * core::f64::consts::SQRT_2 + TAU,
        }
    }

    fn as_polynomial(&self) -> Option<&ComplexPoly> {
        self.poly.as_ref()
    }

    fn describe(&self) -> String {
        match self.kind {
            CatalogKind::OneMinusZn { n } => alloc::format!("1 - z^{n}"),
            CatalogKind::Sin => "sin z".into(),
            CatalogKind::Tanh => "tanh z".into(),
            CatalogKind::ExpPlusOne => "exp(-z) + 1".into(),
        }
    }
}


#[cfg(test)]
mod proptests {
    use super::*;
    use proptest::prelude::*;

    fn arb_jet() -> impl Strategy<Value = Jet> {
        prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64), 6)
            .prop_map(|v| Jet::new(c64(0.1, 0.2), v.into_iter().map(|(a, b)| c64(a, b)).collect()))
    }

    proptest! {
        #[test]
        fn multiplication_commutes_and_associates(a in arb_jet(), b in arb_jet(), c in arb_jet()) {
            let ab = &a * &b;
            let ba = &b * &a;
            let abc = &ab * &c;
            let a_bc = &a * &(&b * &c);
            for k in 0..=5 {
                prop_assert!((ab.coeffs()[k] - ba.coeffs()[k]).norm() <= 1e-14);
                prop_assert!((abc.coeffs()[k] - a_bc.coeffs()[k]).norm() <= 1e-14 * 10.0);
            }
        }
    }
}
