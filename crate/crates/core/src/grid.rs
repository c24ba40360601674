//! Uniform grids on the flat torus, field containers and quadrature.
//!
//! Samples are stored row-major with x₁ fastest: sample `(i₁, i₂)` sits at
//! `(i₁ h, i₂ h)` and lives at index `i₂·n + i₁`. Vector fields store their
//! three components one after another.
//!
//! A grid may also be *x₂-invariant*: a single row that stands for fields
//! depending on x₁ only. Integrals and transforms then treat the row as
//! constant along x₂, which is exact for one-dimensional patterns such as
//! stripes and saves a factor n in work.

use crate::real::{pairwise_sum, Real};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TorusGrid<T: Real = f64> {
    n: usize,
    rows: usize,
    side: T,
}

impl<T: Real> TorusGrid<T> {
    /// Square grid with `n × n` samples on a torus of period `side`.
    pub fn new(n: usize, side: T) -> Result<Self> {
        Self::check(n, side)?;
        Ok(Self { n, rows: n, side })
    }

    /// Single-row grid for fields that do not depend on x₂.
    pub fn x2_invariant(n: usize, side: T) -> Result<Self> {
        Self::check(n, side)?;
        Ok(Self { n, rows: 1, side })
    }

    fn check(n: usize, side: T) -> Result<()> {
        if n < 4 || !n.is_multiple_of(2) {
            return Err(Error::InvalidParameter(format!(
                "grid size must be even and at least 4, got {n}"
            )));
        }
        if !(side > T::zero()) || !side.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "side length must be positive and finite, got {side}"
            )));
        }
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of sample rows along x₂ (`n`, or 1 for an x₂-invariant grid).
    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn is_x2_invariant(&self) -> bool {
        self.rows == 1
    }

    pub fn side_length(&self) -> T {
        self.side
    }

    pub fn spacing(&self) -> T {
        self.side / T::from_usize_lossy(self.n)
    }

    /// Quadrature weight of one sample.
    pub fn cell_area(&self) -> T {
        self.spacing() * (self.side / T::from_usize_lossy(self.rows))
    }

    pub fn len(&self) -> usize {
        self.n * self.rows
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Coordinates of sample `idx`.
    pub fn point(&self, idx: usize) -> (T, T) {
        let h = self.spacing();
        let i1 = idx % self.n;
        let i2 = idx / self.n;
        let x2 = if self.rows == 1 {
            T::zero()
        } else {
            T::from_usize_lossy(i2) * h
        };
        (T::from_usize_lossy(i1) * h, x2)
    }

    /// Same samples relabelled onto a torus of a different period.
    pub fn with_side(&self, side: T) -> Result<Self> {
        Self::check(self.n, side)?;
        Ok(Self { side, ..*self })
    }

    pub(crate) fn ensure_same(&self, other: &Self) -> Result<()> {
        if self.n != other.n || self.rows != other.rows || self.side != other.side {
            return Err(Error::GridMismatch(format!(
                "{}x{} side {} vs {}x{} side {}",
                self.n, self.rows, self.side, other.n, other.rows, other.side
            )));
        }
        Ok(())
    }
}

/// Real samples on a [`TorusGrid`].
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField<T: Real = f64> {
    grid: TorusGrid<T>,
    values: Vec<T>,
}

impl<T: Real> ScalarField<T> {
    pub fn new(grid: TorusGrid<T>, values: Vec<T>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::GridMismatch(format!(
                "expected {} samples, got {}",
                grid.len(),
                values.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter(format!("non-finite sample at {i}")));
        }
        Ok(Self { grid, values })
    }

    pub(crate) fn from_raw(grid: TorusGrid<T>, values: Vec<T>) -> Self {
        debug_assert_eq!(values.len(), grid.len());
        Self { grid, values }
    }

    pub fn constant(grid: TorusGrid<T>, c: T) -> Self {
        Self { grid, values: vec![c; grid.len()] }
    }

    pub fn zeros(grid: TorusGrid<T>) -> Self {
        Self::constant(grid, T::zero())
    }

    /// Samples `f(x₁, x₂)` at the grid points.
    pub fn from_fn(grid: TorusGrid<T>, f: impl Fn(T, T) -> T) -> Self {
        let values = (0..grid.len())
            .map(|i| {
                let (x1, x2) = grid.point(i);
                f(x1, x2)
            })
            .collect();
        Self { grid, values }
    }

    pub fn grid(&self) -> &TorusGrid<T> {
        &self.grid
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [T] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<T> {
        self.values
    }

    pub fn map(&self, f: impl Fn(T) -> T) -> Self {
        Self { grid: self.grid, values: self.values.iter().map(|&v| f(v)).collect() }
    }

    pub fn zip_map(&self, other: &Self, f: impl Fn(T, T) -> T) -> Result<Self> {
        self.grid.ensure_same(&other.grid)?;
        let values = self.values.iter().zip(&other.values).map(|(&a, &b)| f(a, b)).collect();
        Ok(Self { grid: self.grid, values })
    }

    pub fn max_abs(&self) -> T {
        self.values.iter().fold(T::zero(), |m, v| m.max(v.abs()))
    }

    pub fn mean(&self) -> T {
        integrate(self) / (self.grid.side * self.grid.side)
    }
}

/// Three-component field with no constraint on its length.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorField<T: Real = f64> {
    grid: TorusGrid<T>,
    comps: [Vec<T>; 3],
}

impl<T: Real> VectorField<T> {
    pub fn new(grid: TorusGrid<T>, comps: [Vec<T>; 3]) -> Result<Self> {
        for c in &comps {
            if c.len() != grid.len() {
                return Err(Error::GridMismatch(format!(
                    "expected {} samples per component, got {}",
                    grid.len(),
                    c.len()
                )));
            }
            if c.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidParameter("non-finite component sample".into()));
            }
        }
        Ok(Self { grid, comps })
    }

    pub fn from_fields(a: ScalarField<T>, b: ScalarField<T>, c: ScalarField<T>) -> Result<Self> {
        a.grid.ensure_same(&b.grid)?;
        a.grid.ensure_same(&c.grid)?;
        Ok(Self { grid: a.grid, comps: [a.values, b.values, c.values] })
    }

    pub fn zeros(grid: TorusGrid<T>) -> Self {
        let z = vec![T::zero(); grid.len()];
        Self { grid, comps: [z.clone(), z.clone(), z] }
    }

    pub fn from_fn(grid: TorusGrid<T>, f: impl Fn(T, T) -> [T; 3]) -> Self {
        let mut comps = [Vec::with_capacity(grid.len()), Vec::with_capacity(grid.len()), Vec::with_capacity(grid.len())];
        for i in 0..grid.len() {
            let (x1, x2) = grid.point(i);
            let v = f(x1, x2);
            for c in 0..3 {
                comps[c].push(v[c]);
            }
        }
        Self { grid, comps }
    }

    pub fn grid(&self) -> &TorusGrid<T> {
        &self.grid
    }

    pub fn component(&self, c: usize) -> &[T] {
        &self.comps[c]
    }

    pub fn component_mut(&mut self, c: usize) -> &mut [T] {
        &mut self.comps[c]
    }

    pub fn component_field(&self, c: usize) -> ScalarField<T> {
        ScalarField::from_raw(self.grid, self.comps[c].clone())
    }

    pub fn at(&self, i: usize) -> [T; 3] {
        [self.comps[0][i], self.comps[1][i], self.comps[2][i]]
    }

    pub fn components(&self) -> &[Vec<T>; 3] {
        &self.comps
    }

    pub fn max_norm(&self) -> T {
        (0..self.grid.len()).fold(T::zero(), |m, i| {
            let v = self.at(i);
            m.max((v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt())
        })
    }

    /// L² inner product with quadrature weights.
    pub fn dot(&self, other: &Self) -> Result<T> {
        self.grid.ensure_same(&other.grid)?;
        let mut parts = [T::zero(); 3];
        for c in 0..3 {
            let prods: Vec<T> = self.comps[c].iter().zip(&other.comps[c]).map(|(&a, &b)| a * b).collect();
            parts[c] = pairwise_sum(&prods);
        }
        Ok((parts[0] + parts[1] + parts[2]) * self.grid.cell_area())
    }
}

/// Unit vector field, |m(x)| = 1 at every sample.
#[derive(Debug, Clone, PartialEq)]
pub struct Magnetization<T: Real = f64> {
    inner: VectorField<T>,
}

impl<T: Real> Magnetization<T> {
    /// Tolerance on | |m|² − 1 | accepted by [`Magnetization::new`].
    pub fn unit_tolerance() -> T {
        T::lit(1e-12).max(T::lit(64.0) * T::epsilon())
    }

    /// Wraps a vector field, checking the unit-length constraint.
    pub fn new(v: VectorField<T>) -> Result<Self> {
        let tol = Self::unit_tolerance();
        for i in 0..v.grid.len() {
            let a = v.at(i);
            let r = a[0] * a[0] + a[1] * a[1] + a[2] * a[2];
            if (r - T::one()).abs() > tol {
                return Err(Error::InvalidParameter(format!(
                    "sample {i} has |m|² = {r}, not unit"
                )));
            }
        }
        Ok(Self { inner: v })
    }

    pub fn from_fields(a: ScalarField<T>, b: ScalarField<T>, c: ScalarField<T>) -> Result<Self> {
        Self::new(VectorField::from_fields(a, b, c)?)
    }

    pub fn constant(grid: TorusGrid<T>, dir: [T; 3]) -> Result<Self> {
        let v = VectorField::from_fn(grid, |_, _| dir);
        normalize(&v)
    }

    /// Samples `f` and projects each value onto the sphere.
    pub fn from_fn(grid: TorusGrid<T>, f: impl Fn(T, T) -> [T; 3]) -> Result<Self> {
        normalize(&VectorField::from_fn(grid, f))
    }

    pub fn grid(&self) -> &TorusGrid<T> {
        &self.inner.grid
    }

    pub fn component(&self, c: usize) -> &[T] {
        &self.inner.comps[c]
    }

    pub fn component_field(&self, c: usize) -> ScalarField<T> {
        self.inner.component_field(c)
    }

    pub fn at(&self, i: usize) -> [T; 3] {
        self.inner.at(i)
    }

    pub fn as_vector_field(&self) -> &VectorField<T> {
        &self.inner
    }

    pub fn into_vector_field(self) -> VectorField<T> {
        self.inner
    }
}

/// Film period ℓ, thickness t, quality factor Q and an optional rescaled
/// external field g on the unit torus.
#[derive(Debug, Clone, PartialEq)]
pub struct PhysicalParams<T: Real = f64> {
    pub ell: T,
    pub t: T,
    pub q: T,
    pub g: Option<ScalarField<T>>,
}

impl<T: Real> PhysicalParams<T> {
    pub fn new(ell: T, t: T, q: T, g: Option<ScalarField<T>>) -> Result<Self> {
        if !(ell > T::zero()) || !(t > T::zero()) || !ell.is_finite() || !t.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "need ℓ > 0 and t > 0, got ℓ = {ell}, t = {t}"
            )));
        }
        if !(q > T::one()) || !q.is_finite() {
            return Err(Error::InvalidParameter(format!("need Q > 1, got {q}")));
        }
        Ok(Self { ell, t, q, g })
    }

    /// ℓ√(Q−1), the inverse of the reduced wall width.
    pub fn scaled_period(&self) -> T {
        self.ell * (self.q - T::one()).sqrt()
    }

    /// Thickness at which the nonlocal coefficient reaches its critical
    /// value for this ℓ and Q.
    pub fn critical_thickness(&self) -> Result<T> {
        let s = self.scaled_period();
        if !(s > T::one()) {
            return Err(Error::Domain(format!("ℓ√(Q−1) = {s} must exceed 1")));
        }
        Ok(T::TAU() * (self.q - T::one()).sqrt() / s.ln())
    }
}

/// Reduced wall width ε ∈ (0, 1) and nonlocal strength λ ≥ 0.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReducedParams<T: Real = f64> {
    pub eps: T,
    pub lambda: T,
}

impl<T: Real> ReducedParams<T> {
    pub fn new(eps: T, lambda: T) -> Result<Self> {
        if !(eps > T::zero() && eps < T::one()) {
            return Err(Error::InvalidParameter(format!("need 0 < ε < 1, got {eps}")));
        }
        if !(lambda >= T::zero()) || !lambda.is_finite() {
            return Err(Error::InvalidParameter(format!("need λ ≥ 0, got {lambda}")));
        }
        Ok(Self { eps, lambda })
    }

    /// |log ε|.
    pub fn log_inv_eps(&self) -> T {
        -self.eps.ln()
    }

    /// Coefficient λ/|log ε| in front of the H^{1/2} term.
    pub fn nonlocal_coefficient(&self) -> T {
        self.lambda / self.log_inv_eps()
    }
}

/// Maps film parameters to ε = 1/(ℓ√(Q−1)) and λ = t log(ℓ√(Q−1)) / (4√(Q−1)).
pub fn params_to_reduced<T: Real>(p: &PhysicalParams<T>) -> Result<ReducedParams<T>> {
    let s = p.scaled_period();
    if !(s > T::one()) {
        return Err(Error::Domain(format!("ℓ√(Q−1) = {s} must exceed 1")));
    }
    let root = (p.q - T::one()).sqrt();
    ReducedParams::new(T::one() / s, p.t * s.ln() / (T::lit(4.0) * root))
}

/// Rectangle-rule quadrature over the torus.
pub fn integrate<T: Real>(f: &ScalarField<T>) -> T {
    pairwise_sum(&f.values) * f.grid.cell_area()
}

#[allow(dead_code)]
pub(crate) fn integrate_slice<T: Real>(grid: &TorusGrid<T>, values: &[T]) -> T {
    pairwise_sum(values) * grid.cell_area()
}

/// Projects every sample onto the unit sphere.
pub fn normalize<T: Real>(v: &VectorField<T>) -> Result<Magnetization<T>> {
    let floor = T::lit(1e-14).max(T::min_positive_value());
    let len = v.grid.len();
    let mut out = VectorField::zeros(v.grid);
    for i in 0..len {
        let a = v.at(i);
        let r = (a[0] * a[0] + a[1] * a[1] + a[2] * a[2]).sqrt();
        if !(r >= floor) {
            return Err(Error::DegenerateVector { index: i, norm: r.to_f64_lossy() });
        }
        for c in 0..3 {
            out.comps[c][i] = a[c] / r;
        }
    }
    Ok(Magnetization { inner: out })
}
