//! Scale-split estimates for the `H^{1/2}` seminorm on the unit torus.
//!
//! The kernel integral `∫_T ∫_{ℝ²} |f(x+z) − f(x)|²/|z|³` is split into
//! `|z| < r`, `r ≤ |z| < R` and `|z| ≥ R` and each piece compared with its
//! elementary bound; the assembled inequality uses a constant `c_*`
//! calibrated on a fixed corpus.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use rustfft::num_complex::Complex;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::grid::{ScalarField, TorusGrid};
use crate::real::{pairwise_sum, Real};
use crate::spectral::{for_each_lattice_offset, integrate_sq_dev, SpectralPlan, LATTICE_ORIGIN_CONSTANT};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Pieces<T: Real = f64> {
    pub small: T,
    pub medium: T,
    pub large: T,
}

impl<T: Real> Pieces<T> {
    pub fn sum(&self) -> T {
        self.small + self.medium + self.large
    }
}

/// `‖f‖_∞`, `∫|∇f|` and `∫|∇f|²`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FieldStats<T: Real = f64> {
    pub sup: T,
    pub tv: T,
    pub dirichlet: T,
}

pub fn field_stats<T: Real>(f: &ScalarField<T>) -> FieldStats<T> {
    let plan = SpectralPlan::new(*f.grid());
    let spec = plan.fft(f);
    FieldStats {
        sup: f.max_abs(),
        tv: plan.total_variation(f),
        dirichlet: crate::spectral::seminorm_of_spectrum(&spec, T::one()),
    }
}

/// `D(y) = ∫|f(x+y) − f(x)|²` at every lattice offset, through the
/// autocorrelation of `f − f̄`.
fn difference_table_fft<T: Real>(f: &ScalarField<T>) -> (Vec<T>, T) {
    let plan = SpectralPlan::new(*f.grid());
    let mean = f.mean();
    let mut spec = plan.fft(&f.map(|v| v - mean));
    for c in spec.coeffs_mut() {
        *c = Complex::new(c.norm_sqr(), T::zero());
    }
    let corr = plan.ifft_values(&spec);
    let var = integrate_sq_dev(f, mean);
    let two = T::lit(2.0);
    (corr.iter().map(|&c| (two * (var - c)).max(T::zero())).collect(), var)
}

/// Kernel integral split at `r` and `big_r`. Offsets beyond `truncation`
/// contribute their mean value `2 ∫(f − f̄)²`. The origin cell uses the
/// leading-order lattice correction and needs `r ≥ 4h`.
pub fn split_kernel_integrals<T: Real>(f: &ScalarField<T>, r: T, big_r: T, truncation: T) -> Result<Pieces<T>> {
    if !(r > T::zero() && r <= big_r && big_r <= truncation) {
        return Err(Error::InvalidParameter(format!(
            "need 0 < r <= R <= truncation, got r = {r}, R = {big_r}, truncation = {truncation}"
        )));
    }
    let grid = f.grid();
    let h = grid.spacing();
    if r < T::lit(4.0) * h {
        return Err(Error::Resolution(format!("inner radius {r} must be at least 4h = {}", T::lit(4.0) * h)));
    }
    let first = f.values()[0];
    if f.values().iter().all(|&v| v == first) {
        return Ok(Pieces { small: T::zero(), medium: T::zero(), large: T::zero() });
    }
    let (table, var) = difference_table_fft(f);
    let w = h * h;
    let (mut small, mut medium, mut large) = (Vec::new(), Vec::new(), Vec::new());
    for_each_lattice_offset(grid, truncation, |slot, d| {
        let v = table[slot] * w / (d * d * d);
        if d < r {
            small.push(v);
        } else if d < big_r {
            medium.push(v);
        } else {
            large.push(v);
        }
    });
    let dirichlet = field_stats(f).dirichlet;
    let origin = T::lit(0.5 * LATTICE_ORIGIN_CONSTANT) * h * dirichlet;
    let tail = T::lit(2.0) * var * T::TAU() / truncation;
    Ok(Pieces { small: pairwise_sum(&small) + origin, medium: pairwise_sum(&medium), large: pairwise_sum(&large) + tail })
}

/// Elementary upper bounds for the three pieces on the unit torus.
pub fn piece_bounds<T: Real>(s: &FieldStats<T>, r: T, big_r: T) -> Pieces<T> {
    Pieces {
        small: T::PI() * r * s.dirichlet,
        medium: T::lit(8.0) * (big_r / r).ln() * s.sup * s.tv,
        large: T::TAU() * s.sup / big_r * (T::lit(4.0) * s.sup).min(s.tv),
    }
}

/// Argument of the logarithm in the sharp bound, before multiplying by `c_*`.
fn log_argument<T: Real>(s: &FieldStats<T>, eps: T) -> T {
    let inv = T::one() / eps;
    T::one().max((s.sup / (eps * s.tv)).min(inv))
}

/// Right-hand side of the sharp inequality.
pub fn lemma41_rhs<T: Real>(s: &FieldStats<T>, eps: T, c_star: T) -> T {
    if s.tv == T::zero() {
        return eps / T::lit(2.0) * s.dirichlet;
    }
    eps / T::lit(2.0) * s.dirichlet + T::lit(2.0) / T::PI() * (c_star * log_argument(s, eps)).ln() * s.sup * s.tv
}

/// Right-hand side of the weakened form with `log(c_*/ε)`.
pub fn weak_rhs<T: Real>(s: &FieldStats<T>, eps: T, c_star: T) -> T {
    eps / T::lit(2.0) * s.dirichlet + T::lit(2.0) / T::PI() * (c_star / eps).ln() * s.sup * s.tv
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundReport<T: Real = f64> {
    pub eps: T,
    pub c_star: T,
    pub r: T,
    pub big_r: T,
    /// `∫|∇^{1/2} f|²`, spectrally.
    pub lhs: T,
    pub rhs: T,
    pub rhs_weak: T,
    pub slack: T,
    pub pieces: Pieces<T>,
    pub piece_bounds: Pieces<T>,
    /// The `‖f‖_∞/(ε∫|∇f|)` argument is strictly below `1/ε`.
    pub min_branch_active: bool,
}

impl<T: Real> BoundReport<T> {
    pub fn pieces_within_bounds(&self, rel_tol: T) -> bool {
        let ok = |v: T, b: T| v <= b * (T::one() + rel_tol) + T::lit(1e-14);
        ok(self.pieces.small, self.piece_bounds.small)
            && ok(self.pieces.medium, self.piece_bounds.medium)
            && ok(self.pieces.large, self.piece_bounds.large)
    }
}

/// Evaluates both sides at `eps` with radii `r = 2ε` and
/// `R = max{2ε, min{4‖f‖_∞/∫|∇f|, 1}}`. Pieces are skipped (left at zero)
/// when the grid does not resolve `r`.
pub fn check_lemma41<T: Real>(f: &ScalarField<T>, eps: T, c_star: T) -> Result<BoundReport<T>> {
    report(f, eps, c_star, true)
}

fn report<T: Real>(f: &ScalarField<T>, eps: T, c_star: T, with_pieces: bool) -> Result<BoundReport<T>> {
    if !(eps > T::zero()) {
        return Err(Error::InvalidParameter(format!("eps must be positive, got {eps}")));
    }
    if !(c_star >= T::one()) {
        return Err(Error::InvalidParameter(format!("c_star must be at least 1, got {c_star}")));
    }
    let grid = f.grid();
    if (grid.side_length() - T::one()).abs() > T::lit(1e-12) {
        return Err(Error::Geometry("the inequality is stated on the unit torus".into()));
    }
    let s = field_stats(f);
    let lhs = SpectralPlan::new(*grid).frac_seminorm_sq(f, T::lit(0.5))?;
    let rhs = lemma41_rhs(&s, eps, c_star);
    let two = T::lit(2.0);
    let r = two * eps;
    let big_r = if s.tv > T::zero() { r.max((T::lit(4.0) * s.sup / s.tv).min(T::one())) } else { r.max(T::one()) };
    let zero = Pieces { small: T::zero(), medium: T::zero(), large: T::zero() };
    let pieces = if with_pieces && s.tv > T::zero() && r >= T::lit(4.0) * grid.spacing() {
        split_kernel_integrals(f, r, big_r, T::lit(5.0).max(two * big_r))?
    } else {
        zero
    };
    Ok(BoundReport {
        eps,
        c_star,
        r,
        big_r,
        lhs,
        rhs,
        rhs_weak: weak_rhs(&s, eps, c_star),
        slack: rhs - lhs,
        pieces,
        piece_bounds: piece_bounds(&s, r, big_r),
        min_branch_active: s.tv > T::zero() && s.sup / (eps * s.tv) < T::one() / eps,
    })
}

pub const REPORT_HEADER: &str = "field_id,eps,r,R,lhs,rhs,slack,small,medium,large";

pub fn report_csv_row<T: Real>(field_id: &str, r: &BoundReport<T>) -> String {
    format!(
        "{field_id},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
        r.eps, r.r, r.big_r, r.lhs, r.rhs, r.slack, r.pieces.small, r.pieces.medium, r.pieces.large
    )
}

#[derive(Debug, Clone)]
pub struct CorpusEntry {
    pub id: String,
    pub field: ScalarField<f64>,
    pub eps: f64,
}

pub const CORPUS_FIELDS: usize = 50;
pub const CORPUS_GRIDS: [usize; 3] = [32, 64, 128];

/// Zero-mean trigonometric polynomial with random coefficients and
/// frequencies up to `kmax`, scaled to sup-norm 1 on the sample grid.
fn band_limited(grid: TorusGrid<f64>, terms: &[(f64, f64, f64, f64)]) -> ScalarField<f64> {
    let tau = std::f64::consts::TAU;
    let f = ScalarField::from_fn(grid, |x, y| {
        terms.iter().map(|&(k1, k2, ph, a)| a * (tau * (k1 * x + k2 * y) + ph).cos()).sum()
    });
    let s = f.max_abs();
    f.map(|v| v / s)
}

/// The calibration corpus: `CORPUS_FIELDS` band-limited fields, each
/// sampled on every grid of [`CORPUS_GRIDS`] and paired with a width
/// `ε ∈ [1/16, 1]` (log-uniform), plus tanh stripe arrays at `ε = 0.02`.
pub fn default_corpus(seed: u64) -> Result<Vec<CorpusEntry>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    for i in 0..CORPUS_FIELDS {
        let kmax = [1i64, 2, 3, 4][i % 4];
        let nterms = rng.gen_range(1..=6usize);
        let terms: Vec<(f64, f64, f64, f64)> = (0..nterms)
            .map(|_| {
                let mut k = (0, 0);
                while k == (0, 0) {
                    k = (rng.gen_range(-kmax..=kmax), rng.gen_range(-kmax..=kmax));
                }
                (k.0 as f64, k.1 as f64, rng.gen_range(0.0..std::f64::consts::TAU), rng.gen_range(0.2..1.0))
            })
            .collect();
        let eps = (rng.gen_range((1.0f64 / 16.0).ln()..0.0)).exp();
        for &n in &CORPUS_GRIDS {
            out.push(CorpusEntry {
                id: format!("band{i:02}_n{n}"),
                field: band_limited(TorusGrid::new(n, 1.0)?, &terms),
                eps,
            });
        }
    }
    for nt in [2usize, 4, 8] {
        let grid = TorusGrid::x2_invariant(512, 1.0)?;
        let m = crate::profiles::periodic_walls(&grid, nt, 0.02, crate::profiles::Axis::X1)?;
        out.push(CorpusEntry { id: format!("stripes{nt}"), field: m.component_field(2), eps: 0.02 });
    }
    Ok(out)
}

/// SHA-256 over ids, widths and sample bits, in corpus order.
pub fn corpus_hash(corpus: &[CorpusEntry]) -> String {
    let mut h = Sha256::new();
    for e in corpus {
        h.update(e.id.as_bytes());
        h.update(e.eps.to_le_bytes());
        h.update((e.field.grid().n() as u64).to_le_bytes());
        h.update((e.field.grid().rows() as u64).to_le_bytes());
        for v in e.field.values() {
            h.update(v.to_le_bytes());
        }
    }
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CStarCalibration {
    pub c_star: f64,
    pub corpus_hash: String,
    pub entries: usize,
    /// Smallest slack over the corpus at `c_star`.
    pub min_slack: f64,
    /// Whether the weak form also holds everywhere (entries with ε ≤ 1).
    pub weak_form_holds: bool,
}

pub const C_STAR_MAX_EXPONENT: u32 = 40;

/// Smallest `c ∈ {1, 2, 4, …}` with nonnegative slack on every entry.
pub fn calibrate_c_star(corpus: &[CorpusEntry]) -> Result<CStarCalibration> {
    if corpus.is_empty() {
        return Err(Error::Precondition("empty calibration corpus".into()));
    }
    let base: Vec<(FieldStats<f64>, f64, f64)> = corpus
        .par_iter()
        .map(|e| {
            let lhs = SpectralPlan::new(*e.field.grid()).frac_seminorm_sq(&e.field, 0.5)?;
            Ok((field_stats(&e.field), e.eps, lhs))
        })
        .collect::<Result<_>>()?;
    for k in 0..=C_STAR_MAX_EXPONENT {
        let c = 2f64.powi(k as i32);
        let min_slack =
            base.iter().map(|(s, eps, lhs)| lemma41_rhs(s, *eps, c) - lhs).fold(f64::INFINITY, f64::min);
        if min_slack >= 0.0 {
            let weak_form_holds = base.iter().all(|(s, eps, lhs)| *eps > 1.0 || weak_rhs(s, *eps, c) >= *lhs);
            return Ok(CStarCalibration {
                c_star: c,
                corpus_hash: corpus_hash(corpus),
                entries: corpus.len(),
                min_slack,
                weak_form_holds,
            });
        }
    }
    Err(Error::Numerical(format!("no c_* up to 2^{C_STAR_MAX_EXPONENT} satisfies the corpus")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn unit(n: usize) -> TorusGrid<f64> {
        TorusGrid::new(n, 1.0).unwrap()
    }

    #[test]
    fn constant_field() {
        let f = ScalarField::constant(unit(32), 0.7);
        let p = split_kernel_integrals(&f, 0.2, 0.5, 5.0).unwrap();
        assert_eq!(p.sum(), 0.0);
        let r = check_lemma41(&f, 0.1, 1.0).unwrap();
        assert_eq!(r.lhs, 0.0);
        assert_eq!(r.rhs, 0.0);
    }

    #[test]
    fn radius_ordering_and_resolution() {
        let f = ScalarField::from_fn(unit(32), |x, _| (2.0 * PI * x).cos());
        assert!(split_kernel_integrals(&f, 0.3, 0.2, 5.0).is_err());
        assert!(split_kernel_integrals(&f, 0.2, 6.0, 5.0).is_err());
        assert!(matches!(split_kernel_integrals(&f, 0.05, 0.2, 5.0), Err(Error::Resolution(_))));
    }

    #[test]
    fn cosine_pieces() {
        let f = ScalarField::from_fn(unit(128), |x, _| (2.0 * PI * x).cos());
        let s = field_stats(&f);
        let r = 0.05;
        let p = split_kernel_integrals(&f, r, 0.3, 5.0).unwrap();
        let b = piece_bounds(&s, r, 0.3);
        assert!(p.small <= b.small, "small ratio {}", p.small / b.small);
        assert!(p.medium <= b.medium && p.large <= b.large);
        // ∫|∇^{1/2} f|² = π for this f.
        assert!((p.sum() - 4.0 * PI * PI).abs() <= 0.02 * 4.0 * PI * PI, "{}", p.sum() / (4.0 * PI));
    }

    #[test]
    fn pieces_partition_the_kernel_integral() {
        let corpus = default_corpus(3).unwrap();
        for e in corpus.iter().filter(|e| e.field.grid().n() == 64).take(8) {
            let lhs = SpectralPlan::new(*e.field.grid()).frac_seminorm_sq(&e.field, 0.5).unwrap();
            let p = split_kernel_integrals(&e.field, 0.1, 0.4, 5.0).unwrap();
            assert!(p.small >= 0.0 && p.medium >= 0.0 && p.large >= 0.0);
            let rel = (p.sum() - 4.0 * PI * lhs).abs() / (4.0 * PI * lhs);
            assert!(rel <= 0.02, "{}: {rel}", e.id);
        }
    }

    #[test]
    fn stripe_slack_with_calibrated_constant() {
        let corpus = default_corpus(0).unwrap();
        let cal = calibrate_c_star(&corpus).unwrap();
        assert_eq!(cal.entries, CORPUS_FIELDS * 3 + 3);
        assert!(cal.weak_form_holds);
        let stripe = corpus.iter().find(|e| e.id == "stripes2").unwrap();
        let r = check_lemma41(&stripe.field, 0.02, cal.c_star).unwrap();
        assert!(r.slack >= 0.0);
        assert!(r.pieces_within_bounds(1e-3), "{r:?}");
        assert_eq!(cal.corpus_hash, corpus_hash(&default_corpus(0).unwrap()));
        assert_ne!(cal.corpus_hash, corpus_hash(&default_corpus(1).unwrap()));
    }

    #[test]
    fn oscillatory_field_uses_min_branch() {
        let eps = 1e-4;
        // ∫|∇f| = 4k for cos(2πk x₁); pick 4k ≈ ε^{-1/2}.
        let k = 25.0;
        let f = ScalarField::from_fn(TorusGrid::x2_invariant(1024, 1.0).unwrap(), |x, _| (2.0 * PI * k * x).cos());
        let r = check_lemma41(&f, eps, 1.0).unwrap();
        assert!(r.min_branch_active);
        assert!(r.rhs < r.rhs_weak);
    }

    #[test]
    fn rhs_monotone_in_c_star() {
        let f = ScalarField::from_fn(unit(32), |x, y| (2.0 * PI * x).sin() * (2.0 * PI * y).cos());
        let s = field_stats(&f);
        let mut prev = f64::NEG_INFINITY;
        for c in [1.0, 1.5, 2.0, 8.0, 100.0] {
            let v = lemma41_rhs(&s, 0.1, c);
            assert!(v >= prev);
            prev = v;
        }
    }
}
