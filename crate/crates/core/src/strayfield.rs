//! Stray-field energy of a film `T²_ℓ × (0, t)`.
//!
//! For z-constant magnetizations the energy is diagonal in Fourier space:
//! a surface part `ℓ⁻² Σ tσ(t|k|) |m̂₃|²` and a volume part
//! `ℓ⁻² Σ_{k≠0} t(1 − σ(t|k|)) |k̂·m̂′|²` with `σ(s) = (1 − e^{-s})/s`.
//!
//! [`stray_energy_zquadrature`] is an independent evaluation for fields that
//! vary across the thickness. Each layer is treated as constant on its slab
//! of width `Δ = t/nz`; the magnetic charge is then a set of sheets at the
//! slab interfaces (jumps of `m₃`) plus piecewise constant volume charges
//! `−ik·m̂′`, and the interaction through `H_k(z) = e^{-|k||z|}/|k|`
//! (`−|z|` for `k = 0`) is integrated in closed form on every pair of slabs.

use rayon::prelude::*;
use rustfft::num_complex::Complex;
use serde::Serialize;

use crate::grid::{Magnetization, TorusGrid, VectorField};
use crate::real::{pairwise_sum, Real};
use crate::spectral::{seminorm_of_spectrum, SpectralField, SpectralPlan};
use crate::{Error, Result};

/// `σ(s) = (1 − e^{-s})/s`, with a series near zero.
pub fn sigma<T: Real>(s: T) -> T {
    if s > T::lit(1e-8) {
        -(-s).exp_m1() / s
    } else {
        T::one() - s / T::lit(2.0) + s * s / T::lit(6.0)
    }
}

/// `1 − σ(s)`, accurate for small `s`.
pub fn one_minus_sigma<T: Real>(s: T) -> T {
    if s < T::lit(0.5) {
        // Σ_{j≥2} (−s)^{j−1} / j! · (−1)
        let mut term = s / T::lit(2.0);
        let mut acc = term;
        let mut j = 2.0;
        while term.abs() > T::epsilon() * acc.abs() {
            j += 1.0;
            term = -term * s / T::lit(j);
            acc = acc + term;
        }
        acc
    } else {
        T::one() - sigma(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StrayDecomposition<T: Real = f64> {
    pub surface_term: T,
    pub volume_term: T,
    pub total: T,
}

/// Stray-field energy of the z-constant extension of `mbar` to thickness `t`.
pub fn stray_energy_multiplier<T: Real>(mbar: &Magnetization<T>, t: T) -> Result<StrayDecomposition<T>> {
    stray_energy_multiplier_vec(mbar.as_vector_field(), t)
}

/// As [`stray_energy_multiplier`] for an arbitrary (not unit) vector field.
pub fn stray_energy_multiplier_vec<T: Real>(v: &VectorField<T>, t: T) -> Result<StrayDecomposition<T>> {
    if !(t > T::zero()) {
        return Err(Error::InvalidParameter(format!("thickness must be positive, got {t}")));
    }
    let plan = SpectralPlan::new(*v.grid());
    let specs: Vec<SpectralField<T>> = (0..3).map(|c| plan.fft_slice(v.component(c))).collect();
    Ok(decomposition_from_spectra(&specs, t))
}

pub(crate) fn decomposition_from_spectra<T: Real>(specs: &[SpectralField<T>], t: T) -> StrayDecomposition<T> {
    let s3 = &specs[2];
    let surface = s3.weighted_norm_sq(|i| {
        let (k1, k2) = s3.wavenumber(i);
        t * sigma(t * (k1 * k1 + k2 * k2).sqrt())
    });
    let volume = volume_charge_energy(&specs[0], &specs[1], |k| t * one_minus_sigma(t * k));
    StrayDecomposition { surface_term: surface, volume_term: volume, total: surface + volume }
}

/// `ℓ⁻² Σ_{k≠0} w(|k|) |k̂·(m̂₁, m̂₂)|²`.
pub(crate) fn volume_charge_energy<T: Real>(
    s1: &SpectralField<T>,
    s2: &SpectralField<T>,
    w: impl Fn(T) -> T,
) -> T {
    let g = s1.grid();
    let l = g.side_length();
    let terms: Vec<T> = (1..g.len())
        .map(|i| {
            let (k1, k2) = s1.wavenumber(i);
            let k = (k1 * k1 + k2 * k2).sqrt();
            let d = (s1.coeffs()[i] * k1 + s2.coeffs()[i] * k2) / k;
            w(k) * d.norm_sqr()
        })
        .collect();
    pairwise_sum(&terms) / (l * l)
}

/// Unit field sampled at `nz` slab centres `z_j = (j + ½) t / nz`.
#[derive(Debug, Clone, PartialEq)]
pub struct ZResolvedMag<T: Real = f64> {
    grid: TorusGrid<T>,
    t: T,
    layers: Vec<VectorField<T>>,
}

impl<T: Real> ZResolvedMag<T> {
    pub fn new(t: T, layers: Vec<Magnetization<T>>) -> Result<Self> {
        if layers.len() < 2 {
            return Err(Error::InvalidParameter("need at least two z layers".into()));
        }
        if !(t > T::zero()) {
            return Err(Error::InvalidParameter(format!("thickness must be positive, got {t}")));
        }
        let grid = *layers[0].grid();
        for l in &layers {
            grid.ensure_same(l.grid())?;
        }
        Ok(Self { grid, t, layers: layers.into_iter().map(|m| m.into_vector_field()).collect() })
    }

    /// Samples `f(x₁, x₂, z)` and normalizes.
    pub fn from_fn(grid: TorusGrid<T>, nz: usize, t: T, f: impl Fn(T, T, T) -> [T; 3]) -> Result<Self> {
        let dz = t / T::from_usize_lossy(nz);
        let layers = (0..nz)
            .map(|j| {
                let z = (T::from_usize_lossy(j) + T::lit(0.5)) * dz;
                Magnetization::from_fn(grid, |x, y| f(x, y, z))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(t, layers)
    }

    /// Copies of `m` in every layer.
    pub fn z_constant(m: &Magnetization<T>, nz: usize, t: T) -> Result<Self> {
        Self::new(t, vec![m.clone(); nz])
    }

    pub fn grid(&self) -> &TorusGrid<T> {
        &self.grid
    }

    pub fn nz(&self) -> usize {
        self.layers.len()
    }

    pub fn thickness(&self) -> T {
        self.t
    }

    pub fn layer(&self, j: usize) -> &VectorField<T> {
        &self.layers[j]
    }

    /// Thickness average `(1/t) ∫₀ᵗ m dz`.
    pub fn average(&self) -> VectorField<T> {
        average_layers(&self.layers)
    }
}

fn average_layers<T: Real>(layers: &[VectorField<T>]) -> VectorField<T> {
    let grid = *layers[0].grid();
    let mut out = VectorField::zeros(grid);
    let inv = T::one() / T::from_usize_lossy(layers.len());
    for c in 0..3 {
        let dst = out.component_mut(c);
        let mut col = vec![T::zero(); layers.len()];
        for i in 0..grid.len() {
            for (j, l) in layers.iter().enumerate() {
                col[j] = l.component(c)[i];
            }
            dst[i] = pairwise_sum(&col) * inv;
        }
    }
    out
}

/// Interaction tables for one |k| and slab width `Δ`, indexed by distance in
/// slab units.
struct Kernel<T: Real> {
    /// Sheet–sheet: `H(dΔ)`, d = 0..=nz.
    sheet: Vec<T>,
    /// Slab–slab: `∫∫ H` over two slabs `d` apart, d = 0..nz.
    slab: Vec<T>,
    /// Sheet–slab: `∫ H(z_i − z′) dz′` with the near slab edge `dΔ` away.
    cross: Vec<T>,
}

impl<T: Real> Kernel<T> {
    fn new(a: T, dz: T, nz: usize) -> Self {
        let fd = |d: usize| T::from_usize_lossy(d);
        if a == T::zero() {
            let sheet = (0..=nz).map(|d| -fd(d) * dz).collect();
            let mut slab: Vec<T> = (0..nz).map(|d| -fd(d) * dz * dz * dz).collect();
            slab[0] = -dz * dz * dz / T::lit(3.0);
            let cross = (0..=nz).map(|d| -dz * dz * (fd(d) + T::lit(0.5))).collect();
            return Self { sheet, slab, cross };
        }
        let s = sigma(a * dz);
        let sheet = (0..=nz).map(|d| (-a * fd(d) * dz).exp() / a).collect();
        let mut slab: Vec<T> =
            (0..nz).map(|d| (-a * (fd(d) - T::one()) * dz).exp() * dz * dz * s * s / a).collect();
        slab[0] = T::lit(2.0) * dz * one_minus_sigma(a * dz) / (a * a);
        let cross = (0..=nz).map(|d| (-a * fd(d) * dz).exp() * dz * s / a).collect();
        Self { sheet, slab, cross }
    }
}

fn dist(i: usize, j: usize) -> usize {
    i.abs_diff(j)
}

/// Energy of the charges of one wavevector: sheets `q` at the nz+1 slab
/// interfaces and volume densities `v` on the nz slabs.
fn mode_energy<T: Real>(q: &[Complex<T>], v: &[Complex<T>], ker: &Kernel<T>) -> T {
    let nz = v.len();
    let mut acc = T::zero();
    for i in 0..=nz {
        let mut s = Complex::new(T::zero(), T::zero());
        for i2 in 0..=nz {
            s = s + q[i2] * ker.sheet[dist(i, i2)];
        }
        let mut c = Complex::new(T::zero(), T::zero());
        for j in 0..nz {
            let d = if i <= j { j - i } else { i - j - 1 };
            c = c + v[j] * ker.cross[d];
        }
        acc = acc + (q[i].conj() * (s + c + c)).re;
    }
    for j in 0..nz {
        let mut s = Complex::new(T::zero(), T::zero());
        for j2 in 0..nz {
            s = s + v[j2] * ker.slab[dist(j, j2)];
        }
        acc = acc + (v[j].conj() * s).re;
    }
    acc
}

fn zquad_layers<T: Real>(layers: &[VectorField<T>], t: T) -> T {
    let grid = *layers[0].grid();
    let nz = layers.len();
    let plan = SpectralPlan::new(grid);
    let spec: Vec<[SpectralField<T>; 3]> = layers
        .iter()
        .map(|l| [plan.fft_slice(l.component(0)), plan.fft_slice(l.component(1)), plan.fft_slice(l.component(2))])
        .collect();
    let dz = t / T::from_usize_lossy(nz);
    let zero = Complex::new(T::zero(), T::zero());
    let per_mode: Vec<T> = (0..grid.len())
        .into_par_iter()
        .map(|idx| {
            let (k1, k2) = spec[0][0].wavenumber(idx);
            let a = (k1 * k1 + k2 * k2).sqrt();
            let ker = Kernel::new(a, dz, nz);
            let m3 = |j: usize| spec[j][2].coeffs()[idx];
            let q: Vec<Complex<T>> = (0..=nz)
                .map(|i| {
                    let above = if i < nz { m3(i) } else { zero };
                    let below = if i > 0 { m3(i - 1) } else { zero };
                    above - below
                })
                .collect();
            let v: Vec<Complex<T>> = (0..nz)
                .map(|j| {
                    let d = spec[j][0].coeffs()[idx] * k1 + spec[j][1].coeffs()[idx] * k2;
                    Complex::new(d.im, -d.re)
                })
                .collect();
            mode_energy(&q, &v, &ker)
        })
        .collect();
    let l = grid.side_length();
    pairwise_sum(&per_mode) / (T::lit(2.0) * l * l)
}

/// Stray-field energy of a z-resolved field from the Fourier representation
/// with the fundamental solution `H_k`.
pub fn stray_energy_zquadrature<T: Real>(m: &ZResolvedMag<T>) -> T {
    zquad_layers(&m.layers, m.t)
}

/// Which estimate of the thin-film stray-field approximation to check.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Estimate {
    /// Splitting into out-of-plane and in-plane parts.
    Split,
    /// Replacing m by its thickness average.
    Average,
    /// Out-of-plane part against `∫m₃² − t²/2 ∫|∇^{1/2} m̄₃|²`.
    M3,
    /// In-plane part against `t²/2 ∫ |∇^{-1/2} ∇′·m̄′|²`.
    Mprime,
    /// In-plane part against `t² ∫ (|∇m|² + |m′|²)`.
    MprimeBound,
}

impl Estimate {
    pub const ALL: [Estimate; 5] =
        [Estimate::Split, Estimate::Average, Estimate::M3, Estimate::Mprime, Estimate::MprimeBound];

    pub fn name(self) -> &'static str {
        match self {
            Estimate::Split => "split",
            Estimate::Average => "average",
            Estimate::M3 => "m3",
            Estimate::Mprime => "mprime",
            Estimate::MprimeBound => "mprime_bound",
        }
    }
}

impl std::str::FromStr for Estimate {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Estimate::ALL
            .into_iter()
            .find(|e| e.name() == s)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown estimate {s:?}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Theorem51Report<T: Real = f64> {
    pub estimate: Estimate,
    pub t: T,
    pub nz: usize,
    pub n: usize,
    pub lhs_exact: T,
    pub approx: T,
    pub error: T,
    pub exchange_bound: T,
    pub ratio: T,
}

impl<T: Real> Theorem51Report<T> {
    pub const CSV_HEADER: &'static str = "estimate,t,nz,n,lhs_exact,approx,error,exchange_bound,ratio";

    pub fn csv_row(&self) -> String {
        format!(
            "{},{:.16e},{},{},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
            self.estimate.name(),
            self.t,
            self.nz,
            self.n,
            self.lhs_exact,
            self.approx,
            self.error,
            self.exchange_bound,
            self.ratio
        )
    }
}

fn select<T: Real>(layers: &[VectorField<T>], keep: [bool; 3]) -> Vec<VectorField<T>> {
    layers
        .iter()
        .map(|l| {
            let mut out = VectorField::zeros(*l.grid());
            for c in 0..3 {
                if keep[c] {
                    out.component_mut(c).copy_from_slice(l.component(c));
                }
            }
            out
        })
        .collect()
}

/// `∫_{T²×(0,t)} |∇m|²`: spectral in-plane derivatives, differences of
/// neighbouring layers across the thickness.
pub fn dirichlet_3d<T: Real>(m: &ZResolvedMag<T>) -> T {
    let plan = SpectralPlan::new(m.grid);
    let dz = m.t / T::from_usize_lossy(m.nz());
    let mut parts = Vec::new();
    for l in &m.layers {
        for c in 0..3 {
            parts.push(dz * seminorm_of_spectrum(&plan.fft_slice(l.component(c)), T::one()));
        }
    }
    for w in m.layers.windows(2) {
        for c in 0..3 {
            let d: Vec<T> = w[1].component(c).iter().zip(w[0].component(c)).map(|(&a, &b)| (a - b) * (a - b)).collect();
            parts.push(pairwise_sum(&d) * m.grid.cell_area() / dz);
        }
    }
    pairwise_sum(&parts)
}

fn integral_3d<T: Real>(m: &ZResolvedMag<T>, f: impl Fn([T; 3]) -> T) -> T {
    let dz = m.t / T::from_usize_lossy(m.nz());
    let layer_sums: Vec<T> = m
        .layers
        .iter()
        .map(|l| {
            let vals: Vec<T> = (0..m.grid.len()).map(|i| f(l.at(i))).collect();
            pairwise_sum(&vals)
        })
        .collect();
    pairwise_sum(&layer_sums) * m.grid.cell_area() * dz
}

/// Evaluates both sides of one estimate and the ratio of their difference
/// to `t² ∫ |∇m|²`.
pub fn verify_theorem51<T: Real>(m: &ZResolvedMag<T>, which: Estimate) -> Result<Theorem51Report<T>> {
    let t = m.t;
    let t2 = t * t;
    let grad = dirichlet_3d(m);
    if !(grad > T::zero()) {
        return Err(Error::Precondition("estimate needs a non-constant magnetization".into()));
    }
    let plan = SpectralPlan::new(m.grid);
    let avg = m.average();
    let half = T::lit(0.5);
    let (lhs, approx, bound) = match which {
        Estimate::Split => {
            let lhs = zquad_layers(&m.layers, t);
            let a = zquad_layers(&select(&m.layers, [false, false, true]), t)
                + zquad_layers(&select(&m.layers, [true, true, false]), t);
            (lhs, a, t2 * grad)
        }
        Estimate::Average => {
            let lhs = zquad_layers(&m.layers, t);
            (lhs, stray_energy_multiplier_vec(&avg, t)?.total, t2 * grad)
        }
        Estimate::M3 => {
            let lhs = zquad_layers(&select(&m.layers, [false, false, true]), t);
            let m3sq = integral_3d(m, |v| v[2] * v[2]);
            let s3 = plan.fft_slice(avg.component(2));
            (lhs, m3sq - t2 * half * seminorm_of_spectrum(&s3, half), t2 * grad)
        }
        Estimate::Mprime => {
            let lhs = zquad_layers(&select(&m.layers, [true, true, false]), t);
            let s1 = plan.fft_slice(avg.component(0));
            let s2 = plan.fft_slice(avg.component(1));
            // |∇^{-1/2} ∇′·m̄′|² has weight |k|⁻¹ |k·m̂′|² = |k| |k̂·m̂′|².
            let a = t2 * half * volume_charge_energy(&s1, &s2, |k| k);
            (lhs, a, t2 * grad)
        }
        Estimate::MprimeBound => {
            let lhs = zquad_layers(&select(&m.layers, [true, true, false]), t);
            let inplane = integral_3d(m, |v| v[0] * v[0] + v[1] * v[1]);
            (lhs, T::zero(), t2 * (grad + inplane))
        }
    };
    let error = (lhs - approx).abs();
    Ok(Theorem51Report {
        estimate: which,
        t,
        nz: m.nz(),
        n: m.grid.n(),
        lhs_exact: lhs,
        approx,
        error,
        exchange_bound: bound,
        ratio: error / bound,
    })
}

/// Doubles the number of layers of `f` until the z-quadrature changes by
/// less than `rel_tol`; returns the value and the final `nz`.
pub fn converged_zquadrature<T: Real>(
    grid: TorusGrid<T>,
    t: T,
    f: impl Fn(T, T, T) -> [T; 3] + Copy,
    nz_start: usize,
    rel_tol: T,
    nz_max: usize,
) -> Result<(T, usize)> {
    let mut nz = nz_start.max(2);
    let mut prev = stray_energy_zquadrature(&ZResolvedMag::from_fn(grid, nz, t, f)?);
    while nz * 2 <= nz_max {
        nz *= 2;
        let cur = stray_energy_zquadrature(&ZResolvedMag::from_fn(grid, nz, t, f)?);
        if (cur - prev).abs() <= rel_tol * cur.abs() {
            return Ok((cur, nz));
        }
        prev = cur;
    }
    Err(Error::Numerical(format!("z-quadrature not converged at nz = {nz}")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{E, PI};

    fn grid(n: usize) -> TorusGrid<f64> {
        TorusGrid::<f64>::new(n, 1.0).unwrap()
    }

    fn mode_field(g: TorusGrid<f64>) -> Magnetization<f64> {
        Magnetization::from_fn(g, |x, _| {
            let c = (2.0 * PI * x).cos();
            [0.0, (1.0 - c * c).sqrt(), c]
        })
        .unwrap()
    }

    #[test]
    fn sigma_values() {
        assert_eq!(sigma(0.0f64), 1.0);
        assert!((sigma(1.0f64) - (1.0 - 1.0 / E)).abs() < 1e-15);
        assert!(sigma(2.0f64) < sigma(1.0));
        let a = sigma(1e-8f64 * (1.0 + 1e-9));
        let b = sigma(1e-8f64 * (1.0 - 1e-9));
        assert!((a - b).abs() < 1e-15);
        assert!((one_minus_sigma(1e-6f64) - (0.5e-6 - 1e-12 / 6.0 + 1e-18 / 24.0)).abs() < 1e-21);
        for s in [1e-3f64, 0.1, 0.49, 0.51, 3.0] {
            let direct = (s - 1.0 + (-s).exp()) / s;
            assert!((one_minus_sigma(s) - direct).abs() < 1e-9 * direct);
        }
    }

    #[test]
    fn uniform_states() {
        let g = TorusGrid::<f64>::new(8, 1.7).unwrap();
        let t = 0.3;
        let up = stray_energy_multiplier(&Magnetization::constant(g, [0.0, 0.0, 1.0]).unwrap(), t).unwrap();
        assert!((up.surface_term - t * 1.7 * 1.7).abs() < 1e-13);
        assert_eq!(up.volume_term, 0.0);
        let e1 = stray_energy_multiplier(&Magnetization::constant(g, [1.0, 0.0, 0.0]).unwrap(), t).unwrap();
        assert!(e1.total.abs() < 1e-14);
    }

    #[test]
    fn single_mode_surface() {
        for t in [0.05, 0.4, 2.0] {
            let d = stray_energy_multiplier(&mode_field(grid(32)), t).unwrap();
            assert!((d.surface_term - t / 2.0 * sigma(2.0 * PI * t)).abs() < 1e-13);
        }
    }

    #[test]
    fn zquadrature_matches_multiplier_for_z_constant() {
        let g = grid(16);
        let m = Magnetization::from_fn(g, |x, y| {
            [(2.0 * PI * y).sin() + 0.3, (4.0 * PI * x).cos(), 0.5 + (2.0 * PI * (x + y)).sin()]
        })
        .unwrap();
        for t in [1.0, 0.1, 0.01] {
            let a = stray_energy_multiplier(&m, t).unwrap().total;
            let b = stray_energy_zquadrature(&ZResolvedMag::z_constant(&m, 5, t).unwrap());
            assert!((a - b).abs() < 1e-10 * a, "t={t}: {a} vs {b}");
        }
        let up = Magnetization::constant(g, [0.0, 0.0, 1.0]).unwrap();
        let b = stray_energy_zquadrature(&ZResolvedMag::z_constant(&up, 3, 0.2).unwrap());
        assert!((b - 0.2).abs() < 1e-14);
    }

    #[test]
    fn inplane_mode_volume_term() {
        // m′ = (cos(2πx), sin(2πx)), m₃ = 0: only the k = ±2π e₁ modes of m₁
        // carry charge, each with |m̂₁|² = 1/4.
        let g = grid(16);
        let m = Magnetization::from_fn(g, |x, _| [(2.0 * PI * x).cos(), (2.0 * PI * x).sin(), 0.0]).unwrap();
        let t = 0.3;
        let expect = 2.0 * t * one_minus_sigma(2.0 * PI * t) * 0.25;
        let z = stray_energy_zquadrature(&ZResolvedMag::z_constant(&m, 4, t).unwrap());
        assert!((z - expect).abs() < 1e-12 * expect);
    }

    #[test]
    fn average_estimate_vanishes_for_z_constant() {
        let m = ZResolvedMag::z_constant(&mode_field(grid(16)), 4, 0.1).unwrap();
        let r = verify_theorem51(&m, Estimate::Average).unwrap();
        assert!(r.error <= 1e-10 * r.lhs_exact);
    }

    #[test]
    fn constant_field_is_rejected() {
        let m = ZResolvedMag::z_constant(&Magnetization::constant(grid(8), [0.0, 0.0, 1.0]).unwrap(), 2, 0.1).unwrap();
        assert!(verify_theorem51(&m, Estimate::M3).is_err());
    }

    #[test]
    fn estimate_names_round_trip() {
        for e in Estimate::ALL {
            assert_eq!(e.name().parse::<Estimate>().unwrap(), e);
        }
        assert!("nope".parse::<Estimate>().is_err());
    }
}
