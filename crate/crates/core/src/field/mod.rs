//! Profiles on symmetry-reduced grids and the functionals `J` and `M`.

mod grid;
mod interp;
pub mod io;
mod operator;

use std::sync::Arc;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{Nonlinearity, ProblemSpec};

pub use grid::{axis_exponent, Grid, GridKind, GridParams};
pub use interp::Interpolator;
pub use operator::{crank_nicolson, preconditioner, AxialModes, ModalSolver, Operator};

/// Real profile sampled on a grid.
#[derive(Clone)]
pub struct Field {
    grid: Arc<Grid>,
    values: Vec<f64>,
}

impl Field {
    pub fn new(grid: Arc<Grid>, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::GridMismatch(format!(
                "{} values for {} nodes",
                values.len(),
                grid.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("field values"));
        }
        Ok(Self { grid, values })
    }

    pub fn from_fn(grid: &Arc<Grid>, f: impl Fn(f64, f64) -> f64) -> Self {
        Self {
            grid: grid.clone(),
            values: grid.sample(f),
        }
    }

    pub fn zeros(grid: &Arc<Grid>) -> Self {
        Self {
            grid: grid.clone(),
            values: vec![0.0; grid.len()],
        }
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }
    pub fn values(&self) -> &[f64] {
        &self.values
    }
    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }
    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn scaled(&self, c: f64) -> Field {
        self.map(|v| c * v)
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Field {
        Field {
            grid: self.grid.clone(),
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    /// `∫u²`
    pub fn mass(&self) -> f64 {
        weighted_sum(&self.grid, self.values.iter().map(|v| v * v))
    }

    /// `⟨self, other⟩_w`
    pub fn dot(&self, other: &Field) -> f64 {
        weighted_sum(&self.grid, self.values.iter().zip(&other.values).map(|(a, b)| a * b))
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub(crate) fn check_grid(&self, other: &Field) -> Result<()> {
        if Arc::ptr_eq(&self.grid, &other.grid) || self.grid.same_as(&other.grid) {
            Ok(())
        } else {
            Err(Error::GridMismatch("fields live on different grids".into()))
        }
    }
}

impl std::fmt::Debug for Field {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Field")
            .field("grid", self.grid.params())
            .field("max_abs", &self.max_abs())
            .finish()
    }
}

/// Complex profile, used by the time-dependent flow.
#[derive(Clone)]
pub struct ComplexField {
    grid: Arc<Grid>,
    values: Vec<Complex64>,
}

impl std::fmt::Debug for ComplexField {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ComplexField")
            .field("grid", self.grid.params())
            .finish()
    }
}

impl ComplexField {
    pub fn new(grid: Arc<Grid>, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::GridMismatch(format!(
                "{} values for {} nodes",
                values.len(),
                grid.len()
            )));
        }
        if values.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
            return Err(Error::NonFinite("complex field values"));
        }
        Ok(Self { grid, values })
    }

    pub fn from_real(field: &Field) -> Self {
        Self {
            grid: field.grid.clone(),
            values: field.values.iter().map(|&v| Complex64::new(v, 0.0)).collect(),
        }
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }
    pub fn values(&self) -> &[Complex64] {
        &self.values
    }
    pub fn values_mut(&mut self) -> &mut [Complex64] {
        &mut self.values
    }

    pub fn modulus(&self) -> Field {
        Field {
            grid: self.grid.clone(),
            values: self.values.iter().map(|v| v.norm()).collect(),
        }
    }

    pub fn mass(&self) -> f64 {
        weighted_sum(&self.grid, self.values.iter().map(|v| v.norm_sqr()))
    }
}

fn weighted_sum(grid: &Grid, samples: impl Iterator<Item = f64>) -> f64 {
    grid.weights().iter().zip(samples).map(|(w, s)| w * s).sum()
}

/// Weighted quadrature of nodal samples over `ℝ^N`.
pub fn integrate(grid: &Grid, samples: &[f64]) -> Result<f64> {
    if samples.len() != grid.len() {
        return Err(Error::GridMismatch(format!(
            "{} samples for {} nodes",
            samples.len(),
            grid.len()
        )));
    }
    if samples.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("integrand"));
    }
    Ok(weighted_sum(grid, samples.iter().copied()))
}

/// `∫|∇^m u|²` through the symmetric discrete form.
pub fn seminorm_m_sq(field: &Field, m: usize) -> Result<f64> {
    Ok(Operator::new(&field.grid, m, 0.0)?.seminorm_form(&field.values))
}

/// `∫u²/|y|^{2m}`
pub fn hardy_sq(field: &Field, m: usize) -> f64 {
    let g = field.grid.as_ref();
    let n_z = g.n_z();
    let e = 2 * m as i32;
    let w = g.weights();
    let mut acc = 0.0;
    for (i, &r) in g.r().iter().enumerate() {
        let inv = 1.0 / r.powi(e);
        for j in 0..n_z {
            let k = i * n_z + j;
            acc += w[k] * field.values[k] * field.values[k] * inv;
        }
    }
    acc
}

pub(crate) fn check_spec(grid: &Grid, spec: &ProblemSpec) -> Result<()> {
    if grid.dim_n() != spec.n || grid.dim_k() != spec.k {
        return Err(Error::GridMismatch(format!(
            "grid is for (N, K) = ({}, {}), problem has ({}, {})",
            grid.dim_n(),
            grid.dim_k(),
            spec.n,
            spec.k
        )));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FunctionalReport {
    pub mass: f64,
    pub seminorm_m_sq: f64,
    pub hardy_sq: f64,
    pub bracket_mu_sq: f64,
    #[serde(rename = "G_int")]
    pub g_int: f64,
    #[serde(rename = "H_int")]
    pub h_int: f64,
    /// `∫g(u)u`
    pub gu_int: f64,
    #[serde(rename = "J")]
    pub j: f64,
    #[serde(rename = "M")]
    pub m: f64,
}

impl FunctionalReport {
    /// `J` recomputed from the stored parts.
    pub fn energy_from_parts(&self) -> f64 {
        self.bracket_mu_sq / 2.0 - self.g_int
    }

    pub fn constraint_from_parts(&self, spec: &ProblemSpec) -> f64 {
        self.bracket_mu_sq - spec.pohozaev_factor() * self.h_int
    }
}

/// `(∫G(u), ∫H(u), ∫g(u)u)`
pub fn nonlinear_integrals(field: &Field, nl: &Nonlinearity) -> (f64, f64, f64) {
    let w = field.grid.weights();
    let mut gi = 0.0;
    let mut hi = 0.0;
    let mut gu = 0.0;
    for (&wk, &u) in w.iter().zip(&field.values) {
        let big_g = nl.big_g(u);
        let gu_k = nl.g(u) * u;
        gi += wk * big_g;
        gu += wk * gu_k;
        hi += wk * (gu_k - 2.0 * big_g);
    }
    (gi, hi, gu)
}

pub fn functional_report(field: &Field, spec: &ProblemSpec, nl: &Nonlinearity) -> Result<FunctionalReport> {
    check_spec(&field.grid, spec)?;
    if field.values.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("field values"));
    }
    let seminorm = seminorm_m_sq(field, spec.m)?;
    let hardy = hardy_sq(field, spec.m);
    let bracket = seminorm + spec.mu * hardy;
    let (g_int, h_int, gu_int) = nonlinear_integrals(field, nl);
    let mut report = FunctionalReport {
        mass: field.mass(),
        seminorm_m_sq: seminorm,
        hardy_sq: hardy,
        bracket_mu_sq: bracket,
        g_int,
        h_int,
        gu_int,
        j: 0.0,
        m: 0.0,
    };
    report.j = report.energy_from_parts();
    report.m = report.constraint_from_parts(spec);
    Ok(report)
}

/// `L u - g(u)` with `L = (-Δ_h)^m + μ|y|^{-2m}` (no `λ` term).
pub fn euler_lagrange(field: &Field, op: &Operator<'_>, nl: &Nonlinearity) -> Vec<f64> {
    let mut out = vec![0.0; field.values.len()];
    op.apply(&field.values, &mut out);
    for (o, &u) in out.iter_mut().zip(&field.values) {
        *o -= nl.g(u);
    }
    out
}

#[derive(Debug, Clone)]
pub struct Gradient {
    /// `(-Δ_h)^m u + μ|y|^{-2m}u + λu - g(u)`
    pub residual: Field,
    /// `P⁻¹` applied to the residual, `P = 1 + L⁺`.
    pub direction: Field,
}

/// Preconditioned residual of the stationary equation at `λ`.
pub fn sobolev_gradient(field: &Field, spec: &ProblemSpec, nl: &Nonlinearity, lambda: f64) -> Result<Gradient> {
    check_spec(&field.grid, spec)?;
    let op = Operator::new(&field.grid, spec.m, spec.mu)?;
    let pre = preconditioner(&op, AxialModes::new(&field.grid), 1.0)?;
    let mut res = euler_lagrange(field, &op, nl);
    for (r, &u) in res.iter_mut().zip(&field.values) {
        *r += lambda * u;
    }
    let mut dir = res.clone();
    pre.solve_in_place(&mut dir);
    if dir.iter().any(|v| !v.is_finite()) {
        return Err(Error::LinearSolve("non-finite preconditioned residual".into()));
    }
    Ok(Gradient {
        residual: Field::new(field.grid.clone(), res)?,
        direction: Field::new(field.grid.clone(), dir)?,
    })
}

#[cfg(test)]
mod tests;
