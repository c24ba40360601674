//! Fourier transforms with continuum scaling, fractional seminorms and
//! multipliers.
//!
//! Coefficients approximate `f̂_k = ∫ e^{-ik·x} f(x) dx` (raw DFT times the
//! cell area) and the inverse is `f(x) = ℓ⁻² Σ_k e^{ik·x} f̂_k`, so Parseval
//! reads `∫ f² = ℓ⁻² Σ |f̂_k|²`. Wavenumbers are `k = (2π/ℓ)(n₁, n₂)` with
//! `n_i ∈ [−n/2, n/2)`, stored in FFT order.

use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use crate::grid::{ScalarField, TorusGrid};
use crate::real::{pairwise_sum, pairwise_sum_by, Real};
use crate::{Error, Result};

/// Parity of a Fourier multiplier. Odd multipliers zero the Nyquist lines.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Parity {
    Even,
    Odd,
}

/// Complex coefficients of a real field, FFT-ordered, index `i₂·n + i₁`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralField<T: Real = f64> {
    grid: TorusGrid<T>,
    coeffs: Vec<Complex<T>>,
}

fn signed_freq(i: usize, n: usize) -> i64 {
    if i < n / 2 {
        i as i64
    } else {
        i as i64 - n as i64
    }
}

impl<T: Real> SpectralField<T> {
    pub fn grid(&self) -> &TorusGrid<T> {
        &self.grid
    }

    pub fn coeffs(&self) -> &[Complex<T>] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [Complex<T>] {
        &mut self.coeffs
    }

    pub fn zeros(grid: TorusGrid<T>) -> Self {
        Self { grid, coeffs: vec![Complex::new(T::zero(), T::zero()); grid.len()] }
    }

    /// Integer frequency pair of storage slot `idx`.
    pub fn frequency(&self, idx: usize) -> (i64, i64) {
        frequency(&self.grid, idx)
    }

    /// Wavenumber vector of storage slot `idx`.
    pub fn wavenumber(&self, idx: usize) -> (T, T) {
        wavenumber(&self.grid, idx)
    }

    /// Coefficient at integer frequency `(n₁, n₂)`, each in `[−n/2, n/2)`.
    pub fn get(&self, n1: i64, n2: i64) -> Option<Complex<T>> {
        let n = self.grid.n() as i64;
        if n1 < -n / 2 || n1 >= n / 2 || n2 < -n / 2 || n2 >= n / 2 {
            return None;
        }
        if self.grid.is_x2_invariant() {
            return Some(if n2 == 0 {
                self.coeffs[n1.rem_euclid(n) as usize]
            } else {
                Complex::new(T::zero(), T::zero())
            });
        }
        let i1 = n1.rem_euclid(n) as usize;
        let i2 = n2.rem_euclid(n) as usize;
        Some(self.coeffs[i2 * self.grid.n() + i1])
    }

    /// `ℓ⁻² Σ w(k) |f̂_k|²`.
    pub fn weighted_norm_sq(&self, w: impl Fn(usize) -> T + Copy) -> T {
        let l = self.grid.side_length();
        pairwise_sum_by(self.coeffs.len(), |i| w(i) * self.coeffs[i].norm_sqr()) / (l * l)
    }

    /// Multiplies every coefficient by `sigma(|k|)`.
    pub fn apply_multiplier(&self, sigma: impl Fn(T) -> T, parity: Parity) -> Self {
        let mut out = self.clone();
        for i in 0..out.coeffs.len() {
            if parity == Parity::Odd && is_nyquist(&self.grid, i) {
                out.coeffs[i] = Complex::new(T::zero(), T::zero());
                continue;
            }
            let (k1, k2) = self.wavenumber(i);
            out.coeffs[i] = out.coeffs[i] * sigma((k1 * k1 + k2 * k2).sqrt());
        }
        out
    }
}

pub fn frequency<T: Real>(grid: &TorusGrid<T>, idx: usize) -> (i64, i64) {
    let n = grid.n();
    let n2 = if grid.is_x2_invariant() { 0 } else { signed_freq(idx / n, n) };
    (signed_freq(idx % n, n), n2)
}

pub fn wavenumber<T: Real>(grid: &TorusGrid<T>, idx: usize) -> (T, T) {
    let (a, b) = frequency(grid, idx);
    let scale = T::TAU() / grid.side_length();
    (T::lit(a as f64) * scale, T::lit(b as f64) * scale)
}

/// True on the n/2 frequency lines, where odd multipliers are zeroed.
pub fn is_nyquist<T: Real>(grid: &TorusGrid<T>, idx: usize) -> bool {
    let n = grid.n();
    idx % n == n / 2 || (!grid.is_x2_invariant() && idx / n == n / 2)
}

/// Reusable FFT plans for one grid.
#[derive(Clone)]
pub struct SpectralPlan<T: Real = f64> {
    grid: TorusGrid<T>,
    fwd: Arc<dyn Fft<T>>,
    inv: Arc<dyn Fft<T>>,
}

impl<T: Real> std::fmt::Debug for SpectralPlan<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SpectralPlan").field("grid", &self.grid).finish()
    }
}

impl<T: Real> SpectralPlan<T> {
    pub fn new(grid: TorusGrid<T>) -> Self {
        let mut planner = FftPlanner::new();
        let fwd = planner.plan_fft_forward(grid.n());
        let inv = planner.plan_fft_inverse(grid.n());
        Self { grid, fwd, inv }
    }

    pub fn grid(&self) -> &TorusGrid<T> {
        &self.grid
    }

    fn transform(&self, buf: &mut Vec<Complex<T>>, fft: &Arc<dyn Fft<T>>) {
        let n = self.grid.n();
        let mut scratch = vec![Complex::new(T::zero(), T::zero()); fft.get_inplace_scratch_len()];
        fft.process_with_scratch(buf, &mut scratch);
        if self.grid.is_x2_invariant() {
            return;
        }
        let mut t = transpose(buf, n);
        fft.process_with_scratch(&mut t, &mut scratch);
        *buf = transpose(&t, n);
    }

    pub fn fft(&self, f: &ScalarField<T>) -> SpectralField<T> {
        self.fft_slice(f.values())
    }

    pub(crate) fn fft_slice(&self, values: &[T]) -> SpectralField<T> {
        assert_eq!(values.len(), self.grid.len(), "field does not match plan grid");
        let mut buf: Vec<Complex<T>> = values.iter().map(|&v| Complex::new(v, T::zero())).collect();
        self.transform(&mut buf, &self.fwd);
        let a = self.grid.cell_area();
        for c in &mut buf {
            *c = *c * a;
        }
        SpectralField { grid: self.grid, coeffs: buf }
    }

    pub fn ifft(&self, spec: &SpectralField<T>) -> ScalarField<T> {
        ScalarField::from_raw(self.grid, self.ifft_values(spec))
    }

    pub(crate) fn ifft_values(&self, spec: &SpectralField<T>) -> Vec<T> {
        assert_eq!(spec.grid.len(), self.grid.len(), "spectrum does not match plan grid");
        let mut buf = spec.coeffs.clone();
        self.transform(&mut buf, &self.inv);
        let l = self.grid.side_length();
        let s = T::one() / (l * l);
        buf.into_iter().map(|c| c.re * s).collect()
    }

    /// `∫ |∇^s f|² = ℓ⁻² Σ_{k≠0} |k|^{2s} |f̂_k|²` for `s ∈ [−1, 1]`.
    pub fn frac_seminorm_sq(&self, f: &ScalarField<T>, s: T) -> Result<T> {
        if !(s >= -T::one() && s <= T::one()) {
            return Err(Error::InvalidParameter(format!("seminorm order {s} outside [−1, 1]")));
        }
        let spec = self.fft(f);
        if s < T::zero() {
            let tol = T::lit(1e-10).max(T::lit(1e3) * T::epsilon());
            let scale = f.max_abs().max(T::min_positive_value());
            if f.mean().abs() > tol * scale {
                return Err(Error::Precondition(format!(
                    "negative order {s} needs a zero-mean field, mean is {}",
                    f.mean()
                )));
            }
        }
        Ok(seminorm_of_spectrum(&spec, s))
    }

    /// Spectral gradient `(∂₁f, ∂₂f)`; Nyquist lines are zeroed.
    pub fn gradient(&self, f: &ScalarField<T>) -> [ScalarField<T>; 2] {
        let spec = self.fft(f);
        let d = |axis: usize| {
            let mut out = spec.clone();
            for i in 0..out.coeffs.len() {
                if is_nyquist(&self.grid, i) {
                    out.coeffs[i] = Complex::new(T::zero(), T::zero());
                    continue;
                }
                let k = spec.wavenumber(i);
                let ki = if axis == 0 { k.0 } else { k.1 };
                out.coeffs[i] = out.coeffs[i] * Complex::new(T::zero(), ki);
            }
            self.ifft(&out)
        };
        [d(0), d(1)]
    }

    /// `∫ |∇f|` with the spectral gradient evaluated at the samples.
    pub fn total_variation(&self, f: &ScalarField<T>) -> T {
        let [a, b] = self.gradient(f);
        let mags: Vec<T> =
            a.values().iter().zip(b.values()).map(|(&x, &y)| (x * x + y * y).sqrt()).collect();
        pairwise_sum(&mags) * self.grid.cell_area()
    }

    /// Applies `sigma(|k|)` in Fourier space and transforms back.
    pub fn filter(&self, f: &ScalarField<T>, sigma: impl Fn(T) -> T, parity: Parity) -> ScalarField<T> {
        self.ifft(&self.fft(f).apply_multiplier(sigma, parity))
    }
}

/// `ℓ⁻² Σ_{k≠0} |k|^{2s} |f̂_k|²`.
pub fn seminorm_of_spectrum<T: Real>(spec: &SpectralField<T>, s: T) -> T {
    spec.weighted_norm_sq(|i| {
        if i == 0 {
            return T::zero();
        }
        let (k1, k2) = spec.wavenumber(i);
        (k1 * k1 + k2 * k2).powf(s)
    })
}

fn transpose<T: Copy>(a: &[T], n: usize) -> Vec<T> {
    let mut out = Vec::with_capacity(a.len());
    for c in 0..n {
        for r in 0..n {
            out.push(a[r * n + c]);
        }
    }
    out
}

pub fn fft<T: Real>(f: &ScalarField<T>) -> SpectralField<T> {
    SpectralPlan::new(*f.grid()).fft(f)
}

pub fn ifft<T: Real>(spec: &SpectralField<T>) -> ScalarField<T> {
    SpectralPlan::new(*spec.grid()).ifft(spec)
}

pub fn frac_seminorm_sq<T: Real>(f: &ScalarField<T>, s: T) -> Result<T> {
    SpectralPlan::new(*f.grid()).frac_seminorm_sq(f, s)
}

pub fn apply_multiplier<T: Real>(
    spec: &SpectralField<T>,
    sigma: impl Fn(T) -> T,
    parity: Parity,
) -> SpectralField<T> {
    spec.apply_multiplier(sigma, parity)
}

/// Mean of `|∇f|²` estimated with fourth-order central differences.
pub(crate) fn dirichlet_fd<T: Real>(f: &ScalarField<T>) -> T {
    let g = f.grid();
    let n = g.n();
    let rows = g.rows();
    let h = g.spacing();
    let v = f.values();
    let at = |i1: isize, i2: isize| {
        let a = i1.rem_euclid(n as isize) as usize;
        let b = i2.rem_euclid(rows as isize) as usize;
        v[b * n + a]
    };
    let c8 = T::lit(8.0);
    let d12 = T::lit(12.0) * h;
    let terms: Vec<T> = (0..g.len())
        .map(|idx| {
            let i1 = (idx % n) as isize;
            let i2 = (idx / n) as isize;
            let dx = (-at(i1 + 2, i2) + c8 * at(i1 + 1, i2) - c8 * at(i1 - 1, i2) + at(i1 - 2, i2)) / d12;
            let dy = if rows == 1 {
                T::zero()
            } else {
                (-at(i1, i2 + 2) + c8 * at(i1, i2 + 1) - c8 * at(i1, i2 - 1) + at(i1, i2 - 2)) / d12
            };
            dx * dx + dy * dy
        })
        .collect();
    pairwise_sum(&terms) * g.cell_area()
}

/// Minus the analytic continuation of the square-lattice Epstein zeta
/// Σ' |m|^{-1} at its singular order; the lattice sum of `1/|y|` over
/// `hℤ² \ {0}` undershoots the integral by `h` times this constant.
pub(crate) const LATTICE_ORIGIN_CONSTANT: f64 = 3.900_264_920_001_955;

/// Mean-square difference `D(j) = ∫ |f(x + jh) − f(x)|² dx` for every lattice
/// offset, computed directly.
pub(crate) fn difference_table<T: Real>(f: &ScalarField<T>) -> Vec<T> {
    let g = f.grid();
    let n = g.n();
    let rows = g.rows();
    let v = f.values();
    let area = g.cell_area();
    let mut out = vec![T::zero(); g.len()];
    let mut buf = vec![T::zero(); g.len()];
    for j2 in 0..rows {
        for j1 in 0..n {
            for x2 in 0..rows {
                let y2 = (x2 + j2) % rows;
                for x1 in 0..n {
                    let y1 = (x1 + j1) % n;
                    let d = v[y2 * n + y1] - v[x2 * n + x1];
                    buf[x2 * n + x1] = d * d;
                }
            }
            out[j2 * n + j1] = pairwise_sum(&buf) * area;
        }
    }
    out
}

/// Visits every lattice point `y = h·(a, b)` with `0 < |y| ≤ radius`,
/// passing the difference table slot of its offset and `|y|`. On an
/// x₂-invariant grid the second lattice coordinate still runs over `hℤ`.
pub(crate) fn for_each_lattice_offset<T: Real>(
    grid: &TorusGrid<T>,
    radius: T,
    mut visit: impl FnMut(usize, T),
) {
    let n = grid.n() as i64;
    let h = grid.spacing();
    let amax = (radius / h).floor().to_f64_lossy() as i64;
    let r2 = radius * radius;
    for b in -amax..=amax {
        let yb = T::lit(b as f64) * h;
        for a in -amax..=amax {
            if a == 0 && b == 0 {
                continue;
            }
            let ya = T::lit(a as f64) * h;
            let d2 = ya * ya + yb * yb;
            if d2 > r2 {
                continue;
            }
            let j1 = a.rem_euclid(n) as usize;
            let slot = if grid.is_x2_invariant() { j1 } else { b.rem_euclid(n) as usize * grid.n() + j1 };
            visit(slot, d2.sqrt());
        }
    }
}

/// Real-space evaluation of `(1/4π) ∫_T ∫_{ℝ²} |f(x+y) − f(x)|² / |y|³`.
///
/// The `y` integral runs over lattice points within `truncation_radius`,
/// with a leading-order correction at the excluded origin cell and the
/// mean-field tail `2 ∫(f − f̄)² · 2π/R` beyond the radius. Slow; meant as
/// an independent check of the spectral seminorm.
pub fn h12_realspace<T: Real>(f: &ScalarField<T>, truncation_radius: T) -> Result<T> {
    let g = f.grid();
    if !(truncation_radius >= T::lit(5.0) * g.side_length()) {
        return Err(Error::InvalidParameter(format!(
            "truncation radius {truncation_radius} must be at least 5ℓ"
        )));
    }
    let table = difference_table(f);
    let h = g.spacing();
    let w = h * h;
    let mut terms = Vec::new();
    for_each_lattice_offset(g, truncation_radius, |slot, r| terms.push(table[slot] * w / (r * r * r)));
    let lattice = pairwise_sum(&terms);
    let origin = T::lit(0.5 * LATTICE_ORIGIN_CONSTANT) * h * dirichlet_fd(f);
    let mean = f.mean();
    let var = integrate_sq_dev(f, mean);
    let tail = T::lit(2.0) * var * T::TAU() / truncation_radius;
    Ok((lattice + origin + tail) / (T::lit(4.0) * T::PI()))
}

pub(crate) fn integrate_sq_dev<T: Real>(f: &ScalarField<T>, mean: T) -> T {
    let d: Vec<T> = f.values().iter().map(|&v| (v - mean) * (v - mean)).collect();
    pairwise_sum(&d) * f.grid().cell_area()
}
