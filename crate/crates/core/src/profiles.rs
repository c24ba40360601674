//! One-dimensional wall profiles and the fields built from them.
//!
//! The finite-R profile is tabulated through the angle substitution
//! ξ = sin θ, under which the inverse map reads
//! x(θ) = ε ∫₀^θ dφ / √(cos²φ + a²) with a = πε/(2R). The integrand is
//! smooth on [0, π/2], so η = x(π/2) is a proper integral.

use serde::{Deserialize, Serialize};

use crate::grid::{Magnetization, TorusGrid, VectorField};
use crate::quad::{self, QuadOptions};
use crate::real::Real;
use crate::{Error, Result};

const TABLE_NODES: usize = 4096;

fn tight() -> QuadOptions {
    QuadOptions { abs_tol: 1e-15, rel_tol: 1e-14, max_intervals: 4000 }
}

#[derive(Debug, Clone)]
struct Table {
    x: Vec<f64>,
    theta: Vec<f64>,
    slope: Vec<f64>,
}

/// The profile ξ_{ε,R}: odd, nondecreasing, saturating at ±1 for |x| ≥ η.
#[derive(Debug, Clone)]
pub struct WallProfile<T: Real = f64> {
    eps: T,
    radius: T,
    eta: T,
    a: f64,
    table: Option<Table>,
}

pub fn make_profile<T: Real>(eps: T, r: T) -> Result<WallProfile<T>> {
    if !(eps > T::zero()) || !eps.is_finite() {
        return Err(Error::InvalidParameter(format!("profile width must be positive, got {eps}")));
    }
    if !(r > T::zero()) {
        return Err(Error::InvalidParameter(format!("cutoff radius must be positive, got {r}")));
    }
    if r.is_infinite() {
        return Ok(WallProfile { eps, radius: r, eta: T::infinity(), a: 0.0, table: None });
    }
    let e = eps.to_f64_lossy();
    let a = std::f64::consts::PI * e / (2.0 * r.to_f64_lossy());
    let dx = |phi: f64| e / (phi.cos().powi(2) + a * a).sqrt();
    let h = std::f64::consts::FRAC_PI_2 / TABLE_NODES as f64;
    let mut x = Vec::with_capacity(TABLE_NODES + 1);
    let mut theta = Vec::with_capacity(TABLE_NODES + 1);
    let mut slope = Vec::with_capacity(TABLE_NODES + 1);
    let mut acc = 0.0;
    // Cumulative sums of per-cell integrals; each cell converges on its own.
    let mut cells = Vec::with_capacity(TABLE_NODES);
    for i in 0..TABLE_NODES {
        cells.push(quad::integrate(dx, i as f64 * h, (i + 1) as f64 * h, &[], tight())?);
    }
    for i in 0..=TABLE_NODES {
        let th = if i == TABLE_NODES { std::f64::consts::FRAC_PI_2 } else { i as f64 * h };
        x.push(acc);
        theta.push(th);
        slope.push(1.0 / dx(th));
        if i < TABLE_NODES {
            acc += cells[i];
        }
    }
    let eta = acc;
    Ok(WallProfile { eps, radius: r, eta: T::lit(eta), a, table: Some(Table { x, theta, slope }) })
}

impl<T: Real> WallProfile<T> {
    pub fn eps(&self) -> T {
        self.eps
    }

    pub fn cutoff(&self) -> T {
        self.radius
    }

    /// Support half-width; infinite for the tanh profile.
    pub fn eta(&self) -> T {
        self.eta
    }

    pub fn is_saturating(&self) -> bool {
        self.table.is_some()
    }

    /// θ(|x|) and its interpolated derivative.
    fn angle(&self, t: &Table, x: f64) -> (f64, f64) {
        let last = t.x.len() - 1;
        if x >= t.x[last] {
            return (std::f64::consts::FRAC_PI_2, 0.0);
        }
        let j = t.x.partition_point(|&v| v <= x).clamp(1, last) - 1;
        let (x0, x1) = (t.x[j], t.x[j + 1]);
        let w = x1 - x0;
        let s = (x - x0) / w;
        let (y0, y1) = (t.theta[j], t.theta[j + 1]);
        let (d0, d1) = (t.slope[j] * w, t.slope[j + 1] * w);
        let s2 = s * s;
        let s3 = s2 * s;
        let val = (2.0 * s3 - 3.0 * s2 + 1.0) * y0
            + (s3 - 2.0 * s2 + s) * d0
            + (-2.0 * s3 + 3.0 * s2) * y1
            + (s3 - s2) * d1;
        let der = ((6.0 * s2 - 6.0 * s) * y0
            + (3.0 * s2 - 4.0 * s + 1.0) * d0
            + (-6.0 * s2 + 6.0 * s) * y1
            + (3.0 * s2 - 2.0 * s) * d1)
            / w;
        (val.min(std::f64::consts::FRAC_PI_2), der)
    }

    pub fn eval(&self, x: T) -> T {
        match &self.table {
            None => (x / self.eps).tanh(),
            Some(t) => {
                let xf = x.to_f64_lossy();
                let (th, _) = self.angle(t, xf.abs());
                T::lit(th.sin().copysign(xf))
            }
        }
    }

    /// ξ′(x). For finite R this differentiates the interpolant.
    pub fn derivative(&self, x: T) -> T {
        match &self.table {
            None => {
                let c = (x / self.eps).cosh();
                T::one() / (self.eps * c * c)
            }
            Some(t) => {
                let (th, d) = self.angle(t, x.to_f64_lossy().abs());
                T::lit(th.cos() * d)
            }
        }
    }

    /// Right-hand side of the profile ODE divided by ε, evaluated at ξ.
    pub fn ode_rhs(&self, xi: T) -> T {
        let one_m = (T::one() - xi * xi).max(T::zero());
        one_m.sqrt() * (one_m + T::lit(self.a * self.a)).sqrt() / self.eps
    }
}

/// ½∫(ε|ξ′|²/(1−ξ²) + (1−ξ²)/ε) over the support.
pub fn profile_local_energy<T: Real>(p: &WallProfile<T>) -> Result<T> {
    let a2 = p.a * p.a;
    let f = |th: f64| {
        let c2 = th.cos().powi(2);
        (2.0 * c2 + a2) / (c2 + a2).sqrt()
    };
    Ok(T::lit(quad::integrate(f, 0.0, std::f64::consts::FRAC_PI_2, &[], tight())?))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Axis {
    /// Walls are lines of constant x₁; the field is constant in x₂.
    X1,
    X2,
}

/// Periodic array of `transitions` tanh walls.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StripeSpec<T: Real = f64> {
    transitions: usize,
    eps: T,
    axis: Axis,
}

impl<T: Real> StripeSpec<T> {
    pub fn new(transitions: usize, eps: T, axis: Axis) -> Result<Self> {
        if transitions < 2 || !transitions.is_multiple_of(2) {
            return Err(Error::InvalidParameter(format!(
                "number of transitions must be even and at least 2, got {transitions}"
            )));
        }
        if !(eps > T::zero()) {
            return Err(Error::InvalidParameter(format!("wall width must be positive, got {eps}")));
        }
        if eps * T::from_usize_lossy(transitions) > T::lit(0.25) {
            return Err(Error::InvalidParameter(format!(
                "eps * N = {} exceeds 1/4",
                eps * T::from_usize_lossy(transitions)
            )));
        }
        Ok(Self { transitions, eps, axis })
    }

    pub fn transitions(&self) -> usize {
        self.transitions
    }

    pub fn eps(&self) -> T {
        self.eps
    }

    pub fn axis(&self) -> Axis {
        self.axis
    }
}

pub fn stripe_field<T: Real>(spec: &StripeSpec<T>, grid: &TorusGrid<T>) -> Result<Magnetization<T>> {
    if grid.spacing() > spec.eps / T::lit(8.0) {
        return Err(Error::Resolution(format!(
            "spacing {} does not resolve eps = {} with 8 points",
            grid.spacing(),
            spec.eps
        )));
    }
    periodic_walls(grid, spec.transitions, spec.eps, spec.axis)
}

/// Alternating walls ξ = tanh(·/width) centred at odd multiples of
/// side/(2N), with the in-plane part along e₂. No resolution check.
pub fn periodic_walls<T: Real>(
    grid: &TorusGrid<T>,
    transitions: usize,
    width: T,
    axis: Axis,
) -> Result<Magnetization<T>> {
    if transitions == 0 || !transitions.is_multiple_of(2) {
        return Err(Error::InvalidParameter(format!("need an even, positive transition count, got {transitions}")));
    }
    if axis == Axis::X2 && grid.is_x2_invariant() {
        return Err(Error::Geometry("x2-invariant grid cannot hold walls varying in x2".into()));
    }
    let side = grid.side_length();
    let cell = side / T::from_usize_lossy(transitions);
    let period = cell + cell;
    let half = cell * T::lit(0.5);
    let prof = |x: T| {
        let u = x - (x / period).floor() * period;
        let d = if u < cell { u - half } else { cell + half - u };
        (d / width).tanh()
    };
    let n = grid.len();
    let (mut c2, mut c3) = (Vec::with_capacity(n), Vec::with_capacity(n));
    for idx in 0..n {
        let (x1, x2) = grid.point(idx);
        let xi = prof(if axis == Axis::X1 { x1 } else { x2 });
        c3.push(xi);
        c2.push((T::one() - xi * xi).max(T::zero()).sqrt());
    }
    Magnetization::new(VectorField::new(*grid, [vec![T::zero(); n], c2, c3])?)
}

/// Recovery field for a centred disk: ξ_{ε,R} of the signed distance
/// (positive inside) along e₃ and the counterclockwise tangent in-plane.
pub fn disk_recovery_field<T: Real>(radius: T, eps: T, r: T, grid: &TorusGrid<T>) -> Result<Magnetization<T>> {
    if grid.is_x2_invariant() {
        return Err(Error::Geometry("disk needs a full two-dimensional grid".into()));
    }
    let side = grid.side_length();
    if !(r > T::zero() && r < radius && radius < side * T::lit(0.5) - r) {
        return Err(Error::Geometry(format!(
            "need 0 < R < radius < side/2 - R, got R = {r}, radius = {radius}, side = {side}"
        )));
    }
    let p = make_profile(eps, r)?;
    let eta = p.eta();
    let c = side * T::lit(0.5);
    let n = grid.len();
    let mut comps = [vec![T::zero(); n], vec![T::zero(); n], vec![T::zero(); n]];
    for idx in 0..n {
        let (x1, x2) = grid.point(idx);
        let (dx, dy) = (x1 - c, x2 - c);
        let rho = (dx * dx + dy * dy).sqrt();
        let d = radius - rho;
        if d >= eta {
            comps[2][idx] = T::one();
        } else if d <= -eta {
            comps[2][idx] = -T::one();
        } else {
            let xi = p.eval(d);
            let s = (T::one() - xi * xi).max(T::zero()).sqrt();
            comps[0][idx] = -dy / rho * s;
            comps[1][idx] = dx / rho * s;
            comps[2][idx] = xi;
        }
    }
    Magnetization::new(VectorField::new(*grid, comps)?)
}

/// ∬_{(−ρ,ρ)²} |tanh u − tanh v|² / |u − v|² du dv; the tanh-profile
/// double integral over (−X, X)² with ρ = X/ε.
pub fn tanh_pair_integral(rho: f64) -> Result<f64> {
    if !(rho > 0.0) || !rho.is_finite() {
        return Err(Error::InvalidParameter(format!("rho must be positive, got {rho}")));
    }
    let opts = QuadOptions { abs_tol: 1e-12, rel_tol: 1e-11, max_intervals: 4000 };
    // |tanh(v+z) − tanh v|/z = sinh z / (z cosh(v+z) cosh v), written
    // without overflow or cancellation.
    let kernel = |z: f64, v: f64| {
        let u = v + z;
        let num = -(-2.0 * z).exp_m1() * 0.5;
        let e = (z - u.abs() - v.abs()).exp();
        let den = (1.0 + (-2.0 * u.abs()).exp()) * (1.0 + (-2.0 * v.abs()).exp());
        let q = num * e * 4.0 / den / z;
        q * q
    };
    let inner = |z: f64| -> f64 {
        let lo = -rho;
        let hi = rho - z;
        if hi <= lo {
            return 0.0;
        }
        quad::integrate(|v| kernel(z, v), lo, hi, &[-z, 0.0], opts).unwrap_or(f64::NAN)
    };
    let mut breaks = vec![1.0];
    let mut b = 2.0;
    while b < 2.0 * rho {
        breaks.push(b);
        b *= 2.0;
    }
    let outer = quad::integrate(inner, 0.0, 2.0 * rho, &breaks, opts)?;
    Ok(2.0 * outer)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationRecord {
    pub c_hat: f64,
    pub fit_range: Vec<(f64, f64)>,
    /// Root-mean-square deviation of the per-pair log c estimates.
    pub residual: f64,
}

pub const CALIBRATION_RESIDUAL_MAX: f64 = 0.05;

/// Fits the tanh double integral to 8 log(X/ε) + 8 log c over every
/// (ε, X) combination.
pub fn calibrate_c(eps_list: &[f64], x_list: &[f64]) -> Result<CalibrationRecord> {
    let mut pairs = Vec::new();
    for &e in eps_list {
        for &x in x_list {
            if !(e > 0.0) || !(x >= 2.0 * e) {
                return Err(Error::Precondition(format!("need X >= 2 eps, got eps = {e}, X = {x}")));
            }
            pairs.push((e, x));
        }
    }
    if pairs.len() < 6 {
        return Err(Error::Precondition(format!("need at least 6 (eps, X) pairs, got {}", pairs.len())));
    }
    let logs = pairs
        .iter()
        .map(|&(e, x)| Ok(tanh_pair_integral(x / e)? / 8.0 - (x / e).ln()))
        .collect::<Result<Vec<f64>>>()?;
    let mean = logs.iter().sum::<f64>() / logs.len() as f64;
    let residual = (logs.iter().map(|l| (l - mean).powi(2)).sum::<f64>() / logs.len() as f64).sqrt();
    if residual > CALIBRATION_RESIDUAL_MAX {
        return Err(Error::Numerical(format!(
            "log-fit residual {residual:.4} exceeds {CALIBRATION_RESIDUAL_MAX}; choose larger X/eps"
        )));
    }
    Ok(CalibrationRecord { c_hat: mean.exp(), fit_range: pairs, residual })
}

/// Default fit range: X/ε between 16 and 128.
pub fn default_calibration() -> Result<CalibrationRecord> {
    calibrate_c(&[0.01, 0.005, 0.0025], &[0.16, 0.32])
}
