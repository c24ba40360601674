//! The reduced energy
//!
//! `F[m] = ∫ ε/2 |∇m|² + (1 − m₃²)/(2ε) − λ/|log ε| ∫ |∇^{1/2} m₃|² − 2 ∫ g m₃`
//!
//! and the renormalized film energy `J = (E − ℓ²t)/(ℓt√(Q−1))` of a
//! z-constant magnetization, both with L² gradients for the minimizer.

use rustfft::num_complex::Complex;
use serde::Serialize;

use crate::grid::{Magnetization, PhysicalParams, ReducedParams, ScalarField, TorusGrid, VectorField};
use crate::real::{pairwise_sum, Real};
use crate::spectral::{seminorm_of_spectrum, SpectralField, SpectralPlan};
use crate::strayfield::{one_minus_sigma, volume_charge_energy};
use crate::Result;

/// Energy split into its parts; `total = exchange + penalty − nonlocal + volume + zeeman`.
///
/// `volume` is the in-plane charge energy of the renormalized functional and
/// stays zero for the reduced one.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct EnergyBreakdown<T: Real = f64> {
    pub exchange: T,
    pub penalty: T,
    pub nonlocal: T,
    pub volume: T,
    pub zeeman: T,
    pub total: T,
}

impl<T: Real> EnergyBreakdown<T> {
    fn assemble(exchange: T, penalty: T, nonlocal: T, volume: T, zeeman: T) -> Self {
        let total = exchange + penalty - nonlocal + volume + zeeman;
        Self { exchange, penalty, nonlocal, volume, zeeman, total }
    }

    /// Exchange plus penalty.
    pub fn local(&self) -> T {
        self.exchange + self.penalty
    }
}

/// `∫ ε/2 |∇m|² + (1 − m₃²)/(2ε) − ∫ |∇m₃|`, nonnegative up to round-off.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BlochDeviation<T: Real = f64> {
    pub value: T,
}

/// Vector field tangent to a magnetization, `v(x)·m(x) = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct TangentField<T: Real = f64> {
    inner: VectorField<T>,
}

impl<T: Real> TangentField<T> {
    /// Projects `v` onto the tangent planes of `m`.
    pub fn project(v: VectorField<T>, m: &Magnetization<T>) -> Result<Self> {
        v.grid().ensure_same(m.grid())?;
        let mut v = v;
        for i in 0..m.grid().len() {
            let a = m.at(i);
            let b = v.at(i);
            let d = a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
            for c in 0..3 {
                v.component_mut(c)[i] = b[c] - d * a[c];
            }
        }
        Ok(Self { inner: v })
    }

    pub fn as_vector_field(&self) -> &VectorField<T> {
        &self.inner
    }

    /// Largest pointwise Euclidean length.
    pub fn sup_norm(&self) -> T {
        self.inner.max_norm()
    }

    /// L² inner product with another field on the same grid.
    pub fn dot(&self, other: &VectorField<T>) -> Result<T> {
        self.inner.dot(other)
    }
}

fn check_unit_compatible<T: Real>(m: &Magnetization<T>, g: Option<&ScalarField<T>>) -> Result<()> {
    if let Some(g) = g {
        m.grid().ensure_same(g.grid())?;
    }
    Ok(())
}

fn penalty_integral<T: Real>(m: &Magnetization<T>) -> T {
    let m3 = m.component(2);
    let v: Vec<T> = m3.iter().map(|&x| T::one() - x * x).collect();
    pairwise_sum(&v) * m.grid().cell_area()
}

fn zeeman_integral<T: Real>(m: &Magnetization<T>, g: Option<&ScalarField<T>>) -> T {
    match g {
        None => T::zero(),
        Some(g) => {
            let v: Vec<T> = m.component(2).iter().zip(g.values()).map(|(&a, &b)| a * b).collect();
            pairwise_sum(&v) * m.grid().cell_area()
        }
    }
}

fn spectra<T: Real>(plan: &SpectralPlan<T>, m: &Magnetization<T>) -> [SpectralField<T>; 3] {
    [plan.fft_slice(m.component(0)), plan.fft_slice(m.component(1)), plan.fft_slice(m.component(2))]
}

fn multiply<T: Real>(spec: &SpectralField<T>, w: impl Fn(T) -> T) -> SpectralField<T> {
    spec.apply_multiplier(w, crate::spectral::Parity::Even)
}

/// Something the minimizer can descend.
pub trait Functional<T: Real>: Sync {
    fn grid(&self) -> &TorusGrid<T>;
    /// Natural length scale, used to seed step lengths.
    fn length_scale(&self) -> T;
    fn evaluate(&self, m: &Magnetization<T>) -> Result<EnergyBreakdown<T>>;
    /// Energy and tangent L² gradient at `m`.
    fn evaluate_with_gradient(&self, m: &Magnetization<T>) -> Result<(EnergyBreakdown<T>, TangentField<T>)>;
}

/// `F_{ε,λ}` with an optional external field, on a fixed grid.
#[derive(Debug, Clone)]
pub struct ReducedFunctional<T: Real = f64> {
    pub params: ReducedParams<T>,
    pub g: Option<ScalarField<T>>,
    plan: SpectralPlan<T>,
}

impl<T: Real> ReducedFunctional<T> {
    pub fn new(grid: TorusGrid<T>, params: ReducedParams<T>, g: Option<ScalarField<T>>) -> Result<Self> {
        let params = ReducedParams::new(params.eps, params.lambda)?;
        if let Some(g) = &g {
            grid.ensure_same(g.grid())?;
        }
        Ok(Self { params, g, plan: SpectralPlan::new(grid) })
    }

    fn parts(&self, m: &Magnetization<T>, s: &[SpectralField<T>; 3]) -> EnergyBreakdown<T> {
        let eps = self.params.eps;
        let two = T::lit(2.0);
        let dir = seminorm_of_spectrum(&s[0], T::one())
            + seminorm_of_spectrum(&s[1], T::one())
            + seminorm_of_spectrum(&s[2], T::one());
        let half = seminorm_of_spectrum(&s[2], T::lit(0.5));
        EnergyBreakdown::assemble(
            eps / two * dir,
            penalty_integral(m) / (two * eps),
            self.params.nonlocal_coefficient() * half,
            T::zero(),
            -two * zeeman_integral(m, self.g.as_ref()),
        )
    }
}

impl<T: Real> Functional<T> for ReducedFunctional<T> {
    fn grid(&self) -> &TorusGrid<T> {
        self.plan.grid()
    }

    fn length_scale(&self) -> T {
        self.params.eps
    }

    fn evaluate(&self, m: &Magnetization<T>) -> Result<EnergyBreakdown<T>> {
        self.grid().ensure_same(m.grid())?;
        Ok(self.parts(m, &spectra(&self.plan, m)))
    }

    fn evaluate_with_gradient(&self, m: &Magnetization<T>) -> Result<(EnergyBreakdown<T>, TangentField<T>)> {
        self.grid().ensure_same(m.grid())?;
        let s = spectra(&self.plan, m);
        let parts = self.parts(m, &s);
        let eps = self.params.eps;
        let two = T::lit(2.0);
        let mut comps: [Vec<T>; 3] = [0, 1, 2].map(|c| {
            let lap = self.plan.ifft_values(&multiply(&s[c], |k| k * k));
            lap.into_iter().map(|v| eps * v).collect()
        });
        let half = self.plan.ifft_values(&multiply(&s[2], |k| k));
        let coef = two * self.params.nonlocal_coefficient();
        let m3 = m.component(2);
        for i in 0..m3.len() {
            let gz = self.g.as_ref().map_or(T::zero(), |g| g.values()[i]);
            comps[2][i] = comps[2][i] - m3[i] / eps - coef * half[i] - two * gz;
        }
        let grad = TangentField::project(VectorField::new(*m.grid(), comps)?, m)?;
        Ok((parts, grad))
    }
}

/// Evaluates `F_{ε,λ}[m]`.
pub fn energy_f<T: Real>(m: &Magnetization<T>, rp: &ReducedParams<T>, g: Option<&ScalarField<T>>) -> Result<EnergyBreakdown<T>> {
    check_unit_compatible(m, g)?;
    ReducedFunctional::new(*m.grid(), *rp, g.cloned())?.evaluate(m)
}

/// Tangent L² gradient of `F_{ε,λ}` at `m`.
pub fn grad_f<T: Real>(m: &Magnetization<T>, rp: &ReducedParams<T>, g: Option<&ScalarField<T>>) -> Result<TangentField<T>> {
    check_unit_compatible(m, g)?;
    Ok(ReducedFunctional::new(*m.grid(), *rp, g.cloned())?.evaluate_with_gradient(m)?.1)
}

/// Renormalized energy `J` of the z-constant extension of `m̄`.
///
/// The grid is read as the rescaled torus `T² = T²_ℓ/ℓ` stretched to the
/// grid's side length, so only shape matters, not the grid's period.
/// With `ε = 1/(ℓ√(Q−1))` and `w(κ) = 1 − σ(tκ/ℓ)` on unit-torus
/// wavenumbers,
///
/// `J = ε∫|∇m̄|² + ε⁻¹∫(1 − m̄₃²) − ℓ/√(Q−1) Σ w |m̂₃|² + ℓ/√(Q−1) Σ w |k̂·m̂′|² − 2∫g m̄₃`.
#[derive(Debug, Clone)]
pub struct RenormalizedFunctional<T: Real = f64> {
    pub params: PhysicalParams<T>,
    plan: SpectralPlan<T>,
}

impl<T: Real> RenormalizedFunctional<T> {
    pub fn new(grid: TorusGrid<T>, params: PhysicalParams<T>) -> Result<Self> {
        let params = PhysicalParams::new(params.ell, params.t, params.q, params.g)?;
        if let Some(g) = &params.g {
            grid.ensure_same(g.grid())?;
        }
        Ok(Self { params, plan: SpectralPlan::new(grid) })
    }

    /// `ε = 1/(ℓ√(Q−1))`; may exceed 1 for small films, J stays defined.
    pub fn eps(&self) -> T {
        T::one() / self.params.scaled_period()
    }

    /// Scale factor between grid wavenumbers and physical ones.
    fn physical_k(&self) -> T {
        self.plan.grid().side_length() / self.params.ell
    }

    fn stray_prefactor(&self) -> T {
        let s = self.plan.grid().side_length();
        self.params.ell / ((self.params.q - T::one()).sqrt() * s * s)
    }

    fn weight(&self) -> impl Fn(T) -> T + Copy {
        let t = self.params.t;
        let kp = self.physical_k();
        move |k: T| one_minus_sigma(t * k * kp)
    }

    fn parts(&self, m: &Magnetization<T>, s: &[SpectralField<T>; 3]) -> EnergyBreakdown<T> {
        let side = self.plan.grid().side_length();
        let inv_area = T::one() / (side * side);
        let eps = self.eps();
        let w = self.weight();
        let pre = self.stray_prefactor();
        let dir = seminorm_of_spectrum(&s[0], T::one())
            + seminorm_of_spectrum(&s[1], T::one())
            + seminorm_of_spectrum(&s[2], T::one());
        let deficit = pre * s[2].weighted_norm_sq(|i| {
            let (k1, k2) = s[2].wavenumber(i);
            w((k1 * k1 + k2 * k2).sqrt())
        });
        let volume = pre * volume_charge_energy(&s[0], &s[1], w);
        EnergyBreakdown::assemble(
            eps * dir,
            penalty_integral(m) * inv_area / eps,
            deficit,
            volume,
            -T::lit(2.0) * zeeman_integral(m, self.params.g.as_ref()) * inv_area,
        )
    }
}

impl<T: Real> Functional<T> for RenormalizedFunctional<T> {
    fn grid(&self) -> &TorusGrid<T> {
        self.plan.grid()
    }

    fn length_scale(&self) -> T {
        self.eps() * self.plan.grid().side_length()
    }

    fn evaluate(&self, m: &Magnetization<T>) -> Result<EnergyBreakdown<T>> {
        self.grid().ensure_same(m.grid())?;
        Ok(self.parts(m, &spectra(&self.plan, m)))
    }

    fn evaluate_with_gradient(&self, m: &Magnetization<T>) -> Result<(EnergyBreakdown<T>, TangentField<T>)> {
        self.grid().ensure_same(m.grid())?;
        let s = spectra(&self.plan, m);
        let parts = self.parts(m, &s);
        let side = self.plan.grid().side_length();
        let inv_area = T::one() / (side * side);
        let two = T::lit(2.0);
        let eps = self.eps();
        let w = self.weight();
        let pre = two * self.stray_prefactor();
        let mut comps: [Vec<T>; 3] = [0, 1, 2].map(|c| {
            let lap = self.plan.ifft_values(&multiply(&s[c], |k| k * k));
            lap.into_iter().map(|v| two * eps * v).collect()
        });
        let w3 = self.plan.ifft_values(&multiply(&s[2], w));
        // Projection of the in-plane part onto the wavevector, weighted by w.
        let g = *self.plan.grid();
        let mut p1 = SpectralField::zeros(g);
        let mut p2 = SpectralField::zeros(g);
        for i in 1..g.len() {
            let (k1, k2) = s[0].wavenumber(i);
            let kk = k1 * k1 + k2 * k2;
            let d: Complex<T> = (s[0].coeffs()[i] * k1 + s[1].coeffs()[i] * k2) * (w(kk.sqrt()) / kk);
            p1.coeffs_mut()[i] = d * k1;
            p2.coeffs_mut()[i] = d * k2;
        }
        let p1 = self.plan.ifft_values(&p1);
        let p2 = self.plan.ifft_values(&p2);
        let m3 = m.component(2);
        for i in 0..m3.len() {
            let gz = self.params.g.as_ref().map_or(T::zero(), |g| g.values()[i]);
            comps[0][i] = comps[0][i] + pre * p1[i];
            comps[1][i] = comps[1][i] + pre * p2[i];
            comps[2][i] = comps[2][i] - two * inv_area * m3[i] / eps - pre * w3[i] - two * inv_area * gz;
        }
        let grad = TangentField::project(VectorField::new(g, comps)?, m)?;
        Ok((parts, grad))
    }
}

/// `J[m̄]` for the film parameters `p`; see [`RenormalizedFunctional`].
pub fn energy_j_2d<T: Real>(mbar: &Magnetization<T>, p: &PhysicalParams<T>) -> Result<T> {
    Ok(RenormalizedFunctional::new(*mbar.grid(), p.clone())?.evaluate(mbar)?.total)
}

/// `D_ε[m] = ∫ ε/2 |∇m|² + (1 − m₃²)/(2ε) − ∫ |∇m₃|`.
pub fn bloch_deviation<T: Real>(m: &Magnetization<T>, eps: T) -> Result<BlochDeviation<T>> {
    let rp = ReducedParams::new(eps, T::zero())?;
    let local = energy_f(m, &rp, None)?.local();
    let plan = SpectralPlan::new(*m.grid());
    let tv = plan.total_variation(&m.component_field(2));
    let mut value = local - tv;
    if value < T::zero() && value >= -T::lit(1e-10) {
        value = T::zero();
    }
    Ok(BlochDeviation { value })
}

/// `∫ |∇m₃|` by quadrature of the spectral gradient magnitude.
pub fn wall_length<T: Real>(m: &Magnetization<T>) -> T {
    SpectralPlan::new(*m.grid()).total_variation(&m.component_field(2))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn grid(n: usize) -> TorusGrid<f64> {
        TorusGrid::<f64>::new(n, 1.0).unwrap()
    }

    #[test]
    fn constant_states() {
        let g = grid(8);
        let rp = ReducedParams::new(0.1, 0.0).unwrap();
        let up = energy_f(&Magnetization::constant(g, [0.0, 0.0, 1.0]).unwrap(), &rp, None).unwrap();
        assert_eq!(up.total, 0.0);
        let e1 = energy_f(&Magnetization::constant(g, [1.0, 0.0, 0.0]).unwrap(), &rp, None).unwrap();
        assert!((e1.penalty - 5.0).abs() < 1e-13 && e1.exchange == 0.0);
        assert!((e1.total - 5.0).abs() < 1e-13);
        let gr = grad_f(&Magnetization::constant(g, [1.0, 0.0, 0.0]).unwrap(), &rp, None).unwrap();
        assert!(gr.sup_norm() < 1e-14);
        let gr = grad_f(&Magnetization::constant(g, [0.0, 0.0, 1.0]).unwrap(), &ReducedParams::new(0.1, 1.3).unwrap(), None).unwrap();
        assert!(gr.sup_norm() < 1e-13);
    }

    #[test]
    fn renormalized_constant_states() {
        let g = grid(8);
        let p = PhysicalParams::new(40.0, 0.7, 1.5, None).unwrap();
        let j = energy_j_2d(&Magnetization::constant(g, [0.0, 0.0, 1.0]).unwrap(), &p).unwrap();
        assert!(j.abs() < 1e-12);
        let j = energy_j_2d(&Magnetization::constant(g, [1.0, 0.0, 0.0]).unwrap(), &p).unwrap();
        assert!((j - 40.0 * 0.5f64.sqrt()).abs() < 1e-11);
    }

    #[test]
    fn grid_period_does_not_change_j() {
        let p = PhysicalParams::new(30.0, 0.4, 1.8, None).unwrap();
        let f = |s: f64| {
            move |x: f64, y: f64| {
                let a = 2.0 * PI * x / s;
                let b = 2.0 * PI * y / s;
                [0.2 * b.sin(), a.sin(), a.cos() + 0.1]
            }
        };
        let a = energy_j_2d(&Magnetization::from_fn(grid(32), f(1.0)).unwrap(), &p).unwrap();
        let g2 = TorusGrid::<f64>::new(32, 3.0).unwrap();
        let b = energy_j_2d(&Magnetization::from_fn(g2, f(3.0)).unwrap(), &p).unwrap();
        assert!((a - b).abs() < 1e-11 * a.abs());
    }

    #[test]
    fn bloch_deviation_examples() {
        let g = grid(8);
        assert_eq!(bloch_deviation(&Magnetization::constant(g, [0.0, 0.0, 1.0]).unwrap(), 0.1).unwrap().value, 0.0);
        let d = bloch_deviation(&Magnetization::constant(g, [1.0, 0.0, 0.0]).unwrap(), 0.1).unwrap();
        assert!((d.value - 5.0).abs() < 1e-13);
    }

    fn directional_check<F: Functional<f64>>(f: &F, m: &Magnetization<f64>, seed: u64) {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let g = *m.grid();
        let (a, b) = (rng.gen_range(1..4) as f64, rng.gen_range(0..3) as f64);
        let ph = rng.gen::<f64>();
        let raw = VectorField::from_fn(g, |x, y| {
            let s = (2.0 * PI * (a * x + b * y) + ph).sin();
            [s, 0.5 * s * s, (2.0 * PI * y).cos()]
        });
        let u = TangentField::project(raw, m).unwrap();
        let (_, grad) = f.evaluate_with_gradient(m).unwrap();
        let pred = grad.dot(u.as_vector_field()).unwrap();
        let d = 1e-5;
        let shift = |s: f64| {
            let mut v = m.as_vector_field().clone();
            for c in 0..3 {
                for (x, &y) in v.component_mut(c).iter_mut().zip(u.as_vector_field().component(c)) {
                    *x += s * y;
                }
            }
            f.evaluate(&crate::grid::normalize(&v).unwrap()).unwrap().total
        };
        let fd = (shift(d) - shift(-d)) / (2.0 * d);
        assert!((fd - pred).abs() <= 1e-3 * pred.abs().max(1e-6), "fd {fd} vs {pred}");
    }

    fn wavy(g: TorusGrid<f64>) -> Magnetization<f64> {
        Magnetization::from_fn(g, |x, y| {
            let a = 2.0 * PI * x;
            let b = 2.0 * PI * y;
            [0.3 * b.sin() + 0.2, 0.8 * a.sin(), a.cos() + 0.2 * (a + b).cos()]
        })
        .unwrap()
    }

    #[test]
    fn reduced_gradient_matches_finite_differences() {
        let g = grid(32);
        let gz = ScalarField::from_fn(g, |x, _| 0.3 * (2.0 * PI * x).sin());
        let f = ReducedFunctional::new(g, ReducedParams::new(0.1, 1.7).unwrap(), Some(gz)).unwrap();
        for seed in 0..5 {
            directional_check(&f, &wavy(g), seed);
        }
    }

    #[test]
    fn renormalized_gradient_matches_finite_differences() {
        let g = TorusGrid::<f64>::new(32, 2.0).unwrap();
        let gz = ScalarField::from_fn(g, |_, y| 0.2 * (PI * y).cos());
        let f = RenormalizedFunctional::new(g, PhysicalParams::new(25.0, 0.8, 1.6, Some(gz)).unwrap()).unwrap();
        for seed in 0..5 {
            directional_check(&f, &wavy(g), seed);
        }
    }
}
