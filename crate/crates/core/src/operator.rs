//! The first-order operator `G_f(w) = 2 g w' + g' w` with `g = f / f'`, and
//! its iterates `w_[k] = G_f^k(w)`.
//!
//! Two independent representations are provided: exact rational functions
//! when `f` is a polynomial, and pointwise evaluation through Taylor jets for
//! any [`Analytic`] source.

use crate::jets::{Analytic, Jet};
use crate::poly::{ComplexPoly, CLUSTER_RADIUS};
use crate::prelude::*;
use crate::{Error, Result};

/// Iterates beyond this order are refused.
pub const MAX_ITERATE_ORDER: usize = 16;

/// Quotient of two complex polynomials.
#[derive(Debug, Clone, PartialEq)]
pub struct RationalFn {
    pub num: ComplexPoly,
    pub den: ComplexPoly,
}

impl RationalFn {
    pub fn new(num: ComplexPoly, den: ComplexPoly) -> Result<Self> {
        if den.is_zero() {
            return Err(Error::InvalidInput("denominator is identically zero"));
        }
        Ok(Self { num, den })
    }

    pub fn polynomial(p: ComplexPoly) -> Self {
        Self { num: p, den: ComplexPoly::one() }
    }

    pub fn eval(&self, z: Complex64) -> Complex64 {
        self.num.eval(z) / self.den.eval(z)
    }

    pub fn derivative(&self) -> Self {
        let num = &(&self.num.derivative() * &self.den) - &(&self.num * &self.den.derivative());
        Self { num, den: &self.den * &self.den }
    }

    /// Cancels roots shared by numerator and denominator (within the root
    /// clustering tolerance). Intended for display.
    pub fn reduce(&self) -> Result<Self> {
        if self.num.is_zero() {
            return Ok(Self::polynomial(ComplexPoly::zero()));
        }
        if self.num.degree() == 0 || self.den.degree() == 0 {
            return Ok(self.clone());
        }
        let expand = |roots: &[crate::poly::Root]| {
            let mut out = Vec::new();
            for r in roots {
                out.extend(core::iter::repeat_n(r.z, r.multiplicity));
            }
            out
        };
        let mut num_roots = expand(&self.num.roots()?);
        let mut den_roots = expand(&self.den.roots()?);
        let mut i = 0;
        while i < num_roots.len() {
            let z = num_roots[i];
            let hit = den_roots.iter().position(|w| (w - z).norm() <= 1e3 * CLUSTER_RADIUS * (1.0 + z.norm()));
            match hit {
                Some(j) => {
                    num_roots.swap_remove(i);
                    den_roots.swap_remove(j);
                }
                None => i += 1,
            }
        }
        let build = |roots: &[Complex64], lead: Complex64| -> Result<ComplexPoly> {
            if roots.is_empty() {
                Ok(ComplexPoly::constant(lead))
            } else {
                Ok(ComplexPoly::from_roots(roots)?.scale(lead))
            }
        };
        Ok(Self { num: build(&num_roots, self.num.leading())?, den: build(&den_roots, self.den.leading())? })
    }
}

/// `g = P / P'` as an exact rational function.
pub fn g_of_poly(p: &ComplexPoly) -> Result<RationalFn> {
    RationalFn::new(p.clone(), p.derivative()).map_err(|_| Error::DegenerateDerivative)
}

/// Jet of `g = f / f'` at `z`, truncated at `order`.
pub fn g_jet<F: Analytic + ?Sized>(f: &F, z: Complex64, order: usize) -> Result<Jet> {
    let fj = f.jet_at(z, order + 1)?;
    fj.truncate(order).div(&fj.derivative())
}

/// The weight `w = w_[0]`; the length function corresponds to `w ≡ 1`.
#[derive(Debug, Clone, PartialEq)]
pub enum Weight {
    One,
    Poly(ComplexPoly),
}

impl Weight {
    pub fn as_poly(&self) -> ComplexPoly {
        match self {
            Weight::One => ComplexPoly::one(),
            Weight::Poly(p) => p.clone(),
        }
    }
}

/// Iterates `w_[0..=K]` of `G_f`, built once and evaluated pointwise.
pub enum IterateTower<'f> {
    /// Exact rational iterates for polynomial `f`: `w_[k] = N_k / P'^{2k}`.
    Symbolic { dp: ComplexPoly, numerators: Vec<ComplexPoly>, denominators: Vec<ComplexPoly> },
    /// Jet evaluation for any analytic `f`.
    Pointwise { f: &'f dyn Analytic, weight: ComplexPoly, max_order: usize },
}

impl core::fmt::Debug for IterateTower<'_> {
    fn fmt(&self, fmt: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            IterateTower::Symbolic { numerators, .. } => {
                write!(fmt, "IterateTower::Symbolic(max_order = {})", numerators.len() - 1)
            }
            IterateTower::Pointwise { f, max_order, .. } => {
                write!(fmt, "IterateTower::Pointwise({}, max_order = {})", f.describe(), max_order)
            }
        }
    }
}

fn check_order(k: usize) -> Result<()> {
    if k > MAX_ITERATE_ORDER {
        return Err(Error::OrderOverflow { requested: k, limit: MAX_ITERATE_ORDER });
    }
    Ok(())
}

impl<'f> IterateTower<'f> {
    /// Builds `w_[0..=max_order]` symbolically. With `w = N / P'^{2k}`,
    /// `G_P(w) = (2P (N' P' - 2k N P'') + (P'^2 - P P'') N) / P'^{2k+2}`.
    pub fn symbolic(p: &ComplexPoly, weight: &Weight, max_order: usize) -> Result<Self> {
        check_order(max_order)?;
        let dp = p.derivative();
        if dp.is_zero() {
            return Err(Error::DegenerateDerivative);
        }
        let ddp = dp.derivative();
        let dp2 = &dp * &dp;
        let gprime_num = &dp2 - &(p * &ddp);
        let two_p = p.scale(c64(2.0, 0.0));
        let mut numerators = vec![weight.as_poly()];
        let mut denominators = vec![ComplexPoly::one()];
        for k in 0..max_order {
            let n = &numerators[k];
            let inner = &(&n.derivative() * &dp) - &(n * &ddp).scale(c64(2.0 * k as f64, 0.0));
            let next = &(&two_p * &inner) + &(&gprime_num * n);
            numerators.push(next);
            denominators.push(&denominators[k] * &dp2);
        }
        Ok(IterateTower::Symbolic { dp, numerators, denominators })
    }

    pub fn pointwise(f: &'f dyn Analytic, weight: &Weight, max_order: usize) -> Result<Self> {
        check_order(max_order)?;
        Ok(IterateTower::Pointwise { f, weight: weight.as_poly(), max_order })
    }

    /// Tower used for quadrature. Jets are preferred even for polynomials:
    /// the expanded numerators `N_k` lose digits to cancellation on the curve.
    pub fn for_function(f: &'f dyn Analytic, weight: &Weight, max_order: usize) -> Result<Self> {
        Self::pointwise(f, weight, max_order)
    }

    pub fn max_order(&self) -> usize {
        match self {
            IterateTower::Symbolic { numerators, .. } => numerators.len() - 1,
            IterateTower::Pointwise { max_order, .. } => *max_order,
        }
    }

    /// `w_[k]` as a rational function (symbolic towers only).
    pub fn iterate(&self, k: usize) -> Result<RationalFn> {
        check_order(k)?;
        match self {
            IterateTower::Symbolic { numerators, denominators, .. } => {
                let num = numerators.get(k).ok_or(Error::OrderOverflow { requested: k, limit: self.max_order() })?;
                RationalFn::new(num.clone(), denominators[k].clone())
            }
            IterateTower::Pointwise { .. } => Err(Error::InvalidInput("pointwise towers have no rational form")),
        }
    }

    /// Writes `w_[0](z), …, w_[m-1](z)` into `out` (`m = out.len()`).
    pub fn eval_into(&self, z: Complex64, out: &mut [Complex64]) -> Result<()> {
        let m = out.len();
        if m == 0 {
            return Ok(());
        }
        if m - 1 > self.max_order() {
            return Err(Error::OrderOverflow { requested: m - 1, limit: self.max_order() });
        }
        match self {
            IterateTower::Symbolic { dp, numerators, .. } => {
                let d = dp.eval(z);
                let d2 = d * d;
                if d2.norm() == 0.0 {
                    return Err(Error::PoleOnContour);
                }
                let inv = d2.inv();
                let mut scale = c64(1.0, 0.0);
                for (k, slot) in out.iter_mut().enumerate() {
                    *slot = numerators[k].eval(z) * scale;
                    scale *= inv;
                }
                Ok(())
            }
            IterateTower::Pointwise { f, weight, .. } => {
                let k = m - 1;
                let g = g_jet(*f, z, k)?;
                let dg = g.derivative();
                let mut w = Jet::of_poly(weight, z, k);
                out[0] = w.value();
                let two = c64(2.0, 0.0);
                for slot in out.iter_mut().skip(1) {
                    let dw = w.derivative();
                    w = &(&g * &dw).scale(two) + &(&dg * &w);
                    *slot = w.value();
                }
                Ok(())
            }
        }
    }

    pub fn eval(&self, k: usize, z: Complex64) -> Result<Complex64> {
        let mut buf = vec![c64(0.0, 0.0); k + 1];
        self.eval_into(z, &mut buf)?;
        Ok(buf[k])
    }
}

/// Relative discrepancy `|a - b| / (1 + |a|)` between the `k`-th iterates of
/// two towers at `z`.
pub fn cross_check(a: &IterateTower<'_>, b: &IterateTower<'_>, z: Complex64, k: usize) -> Result<f64> {
    let x = a.eval(k, z)?;
    let y = b.eval(k, z)?;
    Ok((x - y).norm() / (1.0 + x.norm()))
}
