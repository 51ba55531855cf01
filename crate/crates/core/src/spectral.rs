//! Periodic fields on the uniform grid `x_j = -π + 2πj/M` and their Fourier
//! calculus: spectral derivatives, the mean-zero primitive `P_c`, the
//! zero-Dirichlet primitive `P_0` and trigonometric interpolation.
//!
//! Coefficients are stored in FFT order and normalized by `1/M`, with the
//! phase measured from the first node, so that
//!
//! ```text
//! f(x) = Σ_k ĉ_k exp(i k (x + π)).
//! ```
//!
//! The Nyquist mode `k = M/2` is treated as a pure cosine: odd-order
//! operators annihilate it, even-order derivatives keep it.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, Mutex, OnceLock};

pub use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::GeometryError;

struct Plans {
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

fn plans(m: usize) -> Arc<Plans> {
    static CACHE: OnceLock<Mutex<HashMap<usize, Arc<Plans>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let mut guard = cache.lock().expect("fft plan cache poisoned");
    guard
        .entry(m)
        .or_insert_with(|| {
            let mut planner = FftPlanner::new();
            Arc::new(Plans {
                forward: planner.plan_fft_forward(m),
                inverse: planner.plan_fft_inverse(m),
            })
        })
        .clone()
}

/// Smallest admissible grid size.
pub const MIN_GRID: usize = 16;

/// Checks that `m` is a power of two no smaller than [`MIN_GRID`].
pub fn check_grid(m: usize) -> Result<(), GeometryError> {
    if m >= MIN_GRID && m.is_power_of_two() {
        Ok(())
    } else {
        Err(GeometryError::InvalidGrid { m })
    }
}

/// Grid spacing `2π/M`.
pub fn spacing(m: usize) -> f64 {
    2.0 * PI / m as f64
}

/// Node `x_j = -π + 2πj/M`.
pub fn node(m: usize, j: usize) -> f64 {
    -PI + spacing(m) * j as f64
}

pub fn nodes(m: usize) -> Vec<f64> {
    (0..m).map(|j| node(m, j)).collect()
}

/// Signed wavenumber of FFT index `idx`; the Nyquist index maps to `+M/2`.
pub fn wavenumber(m: usize, idx: usize) -> i64 {
    if idx <= m / 2 {
        idx as i64
    } else {
        idx as i64 - m as i64
    }
}

/// Normalized forward transform of real samples.
pub fn forward(values: &[f64]) -> Vec<Complex64> {
    let m = values.len();
    let mut buf: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    plans(m).forward.process(&mut buf);
    let scale = 1.0 / m as f64;
    for c in &mut buf {
        *c *= scale;
    }
    buf
}

/// Inverse of [`forward`]; the imaginary part is discarded.
pub fn inverse(coeffs: &[Complex64]) -> Vec<f64> {
    let m = coeffs.len();
    let mut buf = coeffs.to_vec();
    plans(m).inverse.process(&mut buf);
    buf.iter().map(|c| c.re).collect()
}

/// Multiplier of the order-`order` derivative at FFT index `idx`.
fn derivative_multiplier(m: usize, idx: usize, order: u32) -> Complex64 {
    let k = wavenumber(m, idx) as f64;
    if idx == m / 2 && order % 2 == 1 {
        return Complex64::new(0.0, 0.0);
    }
    Complex64::new(0.0, k).powu(order)
}

/// A real field sampled on the uniform periodic grid.
#[derive(Debug, Clone, PartialEq)]
pub struct PeriodicField {
    values: Vec<f64>,
}

impl PeriodicField {
    pub fn new(values: Vec<f64>) -> Result<Self, GeometryError> {
        check_grid(values.len())?;
        Ok(Self { values })
    }

    /// Samples `f` at the grid nodes.
    pub fn from_fn(m: usize, f: impl Fn(f64) -> f64) -> Result<Self, GeometryError> {
        Self::new((0..m).map(|j| f(node(m, j))).collect())
    }

    pub fn constant(m: usize, value: f64) -> Result<Self, GeometryError> {
        Self::new(vec![value; m])
    }

    pub fn zeros(m: usize) -> Result<Self, GeometryError> {
        Self::constant(m, 0.0)
    }

    pub fn from_coefficients(coeffs: &[Complex64]) -> Result<Self, GeometryError> {
        Self::new(inverse(coeffs))
    }

    // Internal constructor for results on an already validated grid.
    pub(crate) fn from_values_unchecked(values: Vec<f64>) -> Self {
        debug_assert!(check_grid(values.len()).is_ok());
        Self { values }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// Grid mean, equal to the continuum mean for band-limited fields.
    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.len() as f64
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()))
    }

    /// Periodic trapezoid rule for `∫_{-π}^{π} f`.
    pub fn integral(&self) -> f64 {
        spacing(self.len()) * self.values.iter().sum::<f64>()
    }

    pub fn coefficients(&self) -> Vec<Complex64> {
        forward(&self.values)
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self::from_values_unchecked(self.values.iter().map(|&v| f(v)).collect())
    }

    /// Pointwise combination of two fields on the same grid.
    pub fn zip_map(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Self {
        assert_eq!(self.len(), other.len(), "grid size mismatch");
        Self::from_values_unchecked(
            self.values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        )
    }

    pub fn add(&self, other: &Self) -> Self {
        self.zip_map(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.zip_map(other, |a, b| a - b)
    }

    pub fn mul(&self, other: &Self) -> Self {
        self.zip_map(other, |a, b| a * b)
    }

    pub fn scale(&self, s: f64) -> Self {
        self.map(|v| v * s)
    }

    pub fn shift(&self, c: f64) -> Self {
        self.map(|v| v + c)
    }

    /// Applies a Fourier multiplier given per FFT index.
    pub fn apply_multiplier(&self, mult: impl Fn(usize) -> Complex64) -> Self {
        let mut coeffs = self.coefficients();
        for (idx, c) in coeffs.iter_mut().enumerate() {
            *c *= mult(idx);
        }
        Self::from_values_unchecked(inverse(&coeffs))
    }

    /// Spectral derivative of order 1, 2 or 3 (any positive order works).
    pub fn derivative(&self, order: u32) -> Self {
        let m = self.len();
        if order == 0 {
            return self.clone();
        }
        self.apply_multiplier(|idx| derivative_multiplier(m, idx, order))
    }

    /// Mean-zero periodic antiderivative of `f - μ_f`.
    pub fn periodic_primitive(&self) -> Self {
        let m = self.len();
        self.apply_multiplier(|idx| {
            if idx == 0 || idx == m / 2 {
                Complex64::new(0.0, 0.0)
            } else {
                Complex64::new(0.0, -1.0 / wavenumber(m, idx) as f64)
            }
        })
    }

    /// `P_c f(x) = ⨍(z-π) f(z) dz + ∫_{-π}^x f`.
    ///
    /// This reduces to `μ_f x + F̃(x)` with `F̃` the mean-zero periodic
    /// primitive, so the linear part vanishes exactly for mean-free input.
    pub fn mean_zero_primitive(&self) -> Self {
        let m = self.len();
        let mu = self.mean();
        let periodic = self.periodic_primitive();
        let mut values = periodic.values;
        for (j, v) in values.iter_mut().enumerate() {
            *v += mu * node(m, j);
        }
        Self::from_values_unchecked(values)
    }

    /// `P_0 f(x) = ∫_{-π}^x f - (x+π) μ_f`, vanishing at both endpoints.
    pub fn zero_dirichlet_primitive(&self) -> Self {
        let periodic = self.periodic_primitive();
        let offset = periodic.values[0];
        periodic.shift(-offset)
    }

    /// Evaluates the trigonometric interpolant at an arbitrary `x`.
    pub fn eval_at(&self, x: f64) -> f64 {
        Interpolant::new(self).eval(x)
    }

    /// Cyclic shift of the samples: result[j] = self[j + shift].
    pub fn rotate_grid(&self, shift: usize) -> Self {
        let m = self.len();
        Self::from_values_unchecked((0..m).map(|j| self.values[(j + shift) % m]).collect())
    }
}

/// Trigonometric interpolant of a periodic field, evaluable off-grid.
#[derive(Debug, Clone)]
pub struct Interpolant {
    coeffs: Vec<Complex64>,
}

impl Interpolant {
    pub fn new(field: &PeriodicField) -> Self {
        Self {
            coeffs: field.coefficients(),
        }
    }

    pub fn from_coefficients(coeffs: Vec<Complex64>) -> Self {
        Self { coeffs }
    }

    pub fn eval(&self, x: f64) -> f64 {
        let m = self.coeffs.len();
        let t = x + PI;
        let step = Complex64::new(t.cos(), t.sin());
        let mut phase = step;
        let mut sum = self.coeffs[0].re;
        for k in 1..m / 2 {
            sum += 2.0 * (self.coeffs[k] * phase).re;
            phase *= step;
        }
        sum + self.coeffs[m / 2].re * ((m / 2) as f64 * t).cos()
    }

    /// Derivative of the interpolant at `x`.
    pub fn eval_derivative(&self, x: f64) -> f64 {
        let m = self.coeffs.len();
        let t = x + PI;
        let step = Complex64::new(t.cos(), t.sin());
        let mut phase = step;
        let mut sum = 0.0;
        for k in 1..m / 2 {
            sum += 2.0 * (self.coeffs[k] * Complex64::new(0.0, k as f64) * phase).re;
            phase *= step;
        }
        sum
    }

    /// `∫_{-π}^x` of the interpolant with the Nyquist mode dropped.
    pub fn eval_integral(&self, x: f64) -> f64 {
        let m = self.coeffs.len();
        let t = x + PI;
        let step = Complex64::new(t.cos(), t.sin());
        let mut phase = step;
        let mut sum = self.coeffs[0].re * t;
        for k in 1..m / 2 {
            let term = self.coeffs[k] * (phase - 1.0) / Complex64::new(0.0, k as f64);
            sum += 2.0 * term.re;
            phase *= step;
        }
        sum
    }
}
