//! Embedded Dormand–Prince 5(4) steps for a complex position `z(s)` carried
//! together with real quadratures `I_i' = F_i(z)`.

use crate::prelude::*;
use crate::Result;

const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];

const B5: [f64; 7] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];

const B4: [f64; 7] =
    [5179.0 / 57600.0, 0.0, 7571.0 / 16695.0, 393.0 / 640.0, -92097.0 / 339200.0, 187.0 / 2100.0, 1.0 / 40.0];

/// Vector field evaluated at a stage: returns `dz/ds` and writes the
/// quadrature rates `F_i(z)` and their magnitudes (used to scale the local
/// error of each quadrature).
pub trait Field {
    fn eval(&mut self, z: Complex64, rates: &mut [f64], mags: &mut [f64]) -> Result<Complex64>;
}

impl<T> Field for T
where
    T: FnMut(Complex64, &mut [f64], &mut [f64]) -> Result<Complex64>,
{
    fn eval(&mut self, z: Complex64, rates: &mut [f64], mags: &mut [f64]) -> Result<Complex64> {
        self(z, rates, mags)
    }
}

/// Result of one trial step.
#[derive(Debug, Clone)]
pub struct Step {
    pub z: Complex64,
    /// Quadrature increments (fifth order).
    pub increments: Vec<f64>,
    /// Local error estimate measured in units of the requested tolerance;
    /// the step is acceptable when this is at most 1.
    pub error_ratio: f64,
    /// Raw local error of each quadrature.
    pub increment_errors: Vec<f64>,
}

/// Dormand–Prince 5(4) stepper with reusable stage storage.
pub struct Dopri5 {
    m: usize,
    kz: [Complex64; 7],
    rates: Vec<[f64; 7]>,
    mags: Vec<[f64; 7]>,
    buf_r: Vec<f64>,
    buf_m: Vec<f64>,
}

impl Dopri5 {
    pub fn new(quadratures: usize) -> Self {
        Self {
            m: quadratures,
            kz: [c64(0.0, 0.0); 7],
            rates: vec![[0.0; 7]; quadratures],
            mags: vec![[0.0; 7]; quadratures],
            buf_r: vec![0.0; quadratures],
            buf_m: vec![0.0; quadratures],
        }
    }

    /// One trial step of size `h` from `z`. `rtol` scales the local error:
    /// position errors relative to the step's arc length, quadrature errors
    /// relative to the step's magnitude integral.
    #[allow(clippy::needless_range_loop)]
    pub fn step<F: Field>(&mut self, field: &mut F, z: Complex64, h: f64, rtol: f64) -> Result<Step> {
        for s in 0..7 {
            let mut zs = z;
            for (j, a) in A[s].iter().enumerate().take(s) {
                zs += self.kz[j] * (h * a);
            }
            self.kz[s] = field.eval(zs, &mut self.buf_r, &mut self.buf_m)?;
            for i in 0..self.m {
                self.rates[i][s] = self.buf_r[i];
                self.mags[i][s] = self.buf_m[i];
            }
        }
        let mut z5 = z;
        let mut z4 = z;
        for s in 0..7 {
            z5 += self.kz[s] * (h * B5[s]);
            z4 += self.kz[s] * (h * B4[s]);
        }
        let tiny = 1e-300;
        let arc = h.abs() * self.kz[0].norm().max(self.kz[6].norm());
        let floor = 4.0 * f64::EPSILON * z.norm();
        let mut ratio = (z5 - z4).norm() / (rtol * arc + floor + tiny);
        let mut increments = Vec::with_capacity(self.m);
        let mut increment_errors = Vec::with_capacity(self.m);
        for i in 0..self.m {
            let (mut i5, mut i4, mut mag) = (0.0, 0.0, 0.0);
            for s in 0..7 {
                i5 += B5[s] * self.rates[i][s];
                i4 += B4[s] * self.rates[i][s];
                mag += (B5[s].abs() + B4[s].abs()) * 0.5 * self.mags[i][s];
            }
            let err = h * (i5 - i4);
            ratio = ratio.max(err.abs() / (rtol * h.abs() * mag + tiny));
            increments.push(h * i5);
            increment_errors.push(err.abs());
        }
        if !ratio.is_finite() || !z5.re.is_finite() || !z5.im.is_finite() {
            ratio = f64::INFINITY;
        }
        Ok(Step { z: z5, increments, error_ratio: ratio, increment_errors })
    }
}

/// Step-size update for an embedded pair of order 5(4).
pub fn next_step(h: f64, error_ratio: f64) -> f64 {
    let factor = if error_ratio <= 1e-12 { 5.0 } else { 0.9 * error_ratio.powf(-0.2) };
    h * factor.clamp(0.2, 5.0)
}
