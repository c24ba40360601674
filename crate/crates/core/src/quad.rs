//! Globally adaptive Gauss–Kronrod (7/15) quadrature on finite intervals.

use crate::real::Real;
use crate::{Error, Result};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_83,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadOptions {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_intervals: usize,
}

impl Default for QuadOptions {
    fn default() -> Self {
        Self { abs_tol: 1e-13, rel_tol: 1e-12, max_intervals: 2000 }
    }
}

fn gk15<T: Real>(f: &impl Fn(T) -> T, a: T, b: T) -> (T, T) {
    let c = (a + b) * T::lit(0.5);
    let h = (b - a) * T::lit(0.5);
    let fc = f(c);
    let mut kron = fc * T::lit(WGK[7]);
    let mut gauss = fc * T::lit(WG[3]);
    for j in 0..7 {
        let dx = h * T::lit(XGK[j]);
        let s = f(c - dx) + f(c + dx);
        kron = kron + s * T::lit(WGK[j]);
        if j % 2 == 1 {
            gauss = gauss + s * T::lit(WG[j / 2]);
        }
    }
    (kron * h, ((kron - gauss) * h).abs())
}

/// Integrates `f` over `[a, b]` split at `breaks` (which may be empty or
/// unsorted; points outside `(a, b)` are ignored).
pub fn integrate<T: Real>(f: impl Fn(T) -> T, a: T, b: T, breaks: &[T], opts: QuadOptions) -> Result<T> {
    if a == b {
        return Ok(T::zero());
    }
    let (lo, hi, sign) = if a < b { (a, b, T::one()) } else { (b, a, -T::one()) };
    let mut pts: Vec<T> = breaks.iter().copied().filter(|&p| p > lo && p < hi).collect();
    pts.sort_by(|x, y| x.partial_cmp(y).unwrap());
    pts.insert(0, lo);
    pts.push(hi);
    let mut ivs: Vec<(T, T, T, T)> = pts
        .windows(2)
        .map(|w| {
            let (v, e) = gk15(&f, w[0], w[1]);
            (w[0], w[1], v, e)
        })
        .collect();
    loop {
        let total: T = ivs.iter().map(|iv| iv.2).sum();
        let err: T = ivs.iter().map(|iv| iv.3).sum();
        if !total.is_finite() {
            return Err(Error::Numerical("non-finite integrand".into()));
        }
        let tol = T::lit(opts.abs_tol).max(T::lit(opts.rel_tol) * total.abs());
        if err <= tol {
            return Ok(sign * total);
        }
        if ivs.len() >= opts.max_intervals {
            return Err(Error::Numerical(format!("quadrature did not converge: error {err:e}")));
        }
        let (worst, _) = ivs
            .iter()
            .enumerate()
            .fold((0, T::zero()), |acc, (i, iv)| if iv.3 > acc.1 { (i, iv.3) } else { acc });
        let (x0, x1, _, _) = ivs.swap_remove(worst);
        let mid = (x0 + x1) * T::lit(0.5);
        if !(mid > x0 && mid < x1) {
            return Ok(sign * total);
        }
        let (v0, e0) = gk15(&f, x0, mid);
        let (v1, e1) = gk15(&f, mid, x1);
        ivs.push((x0, mid, v0, e0));
        ivs.push((mid, x1, v1, e1));
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomials_and_smooth_functions() {
        let o = QuadOptions::default();
        assert!((integrate(|x: f64| x * x, 0.0, 3.0, &[], o).unwrap() - 9.0).abs() < 1e-13);
        let v = integrate(|x: f64| x.sin(), 0.0, std::f64::consts::PI, &[], o).unwrap();
        assert!((v - 2.0).abs() < 1e-13);
        let v = integrate(|x: f64| 1.0 / (1e-4 + x * x), -1.0, 1.0, &[0.0], o).unwrap();
        let exact = 2.0 * 100.0 * (100.0f64).atan();
        assert!((v - exact).abs() < 1e-9 * exact);
        assert!((integrate(|x: f64| x, 2.0, 0.0, &[], o).unwrap() + 2.0).abs() < 1e-14);
    }

    #[test]
    fn integrable_endpoint_singularity() {
        let o = QuadOptions { max_intervals: 5000, ..Default::default() };
        let v = integrate(|x: f64| 1.0 / x.sqrt(), 0.0, 1.0, &[], QuadOptions { rel_tol: 1e-9, ..o }).unwrap();
        assert!((v - 2.0).abs() < 1e-7);
    }
}
