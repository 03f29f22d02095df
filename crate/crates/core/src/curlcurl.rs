//! Equivariant lift `U(x) = (u(x)/r)(-x₂, x₁, 0)` of `K = 2`, `N = 3`
//! profiles and its curl-curl diagnostics on a Cartesian box.

use std::io::Write;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::field::{functional_report, Field, GridKind, Interpolator};
use crate::model::{Nonlinearity, ProblemSpec};

/// Cell-centered box `[-L, L]³` with `n` cells per side.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoxParams {
    pub n: usize,
    pub half_width: f64,
}

impl BoxParams {
    pub const DEFAULT_N: usize = 96;
    /// Half-width in units of the decay length `λ^{-1/2}`.
    pub const DEFAULT_WIDTH: f64 = 12.0;

    /// `96³` cells over `[-12/√λ, 12/√λ]³`.
    pub fn natural(lambda: f64) -> Self {
        Self {
            n: Self::DEFAULT_N,
            half_width: Self::DEFAULT_WIDTH / lambda.sqrt(),
        }
    }

    pub fn with_n(self, n: usize) -> Self {
        Self { n, ..self }
    }

    fn h(&self) -> f64 {
        2.0 * self.half_width / self.n as f64
    }
}

#[derive(Debug, Clone)]
pub struct VectorField3 {
    pub params: BoxParams,
    pub h: f64,
    /// Components, index `(i·n + j)·n + k` for node `(x_i, x_j, x_k)`.
    pub u: [Vec<f64>; 3],
    /// `max |U|` on the outer cell layer over `max |U|`.
    pub boundary_ratio: f64,
}

impl VectorField3 {
    pub fn n(&self) -> usize {
        self.params.n
    }

    pub fn coord(&self, i: usize) -> f64 {
        (i as f64 + 0.5 - 0.5 * self.params.n as f64) * self.h
    }

    pub fn index(&self, i: usize, j: usize, k: usize) -> usize {
        let n = self.params.n;
        (i * n + j) * n + k
    }

    pub fn get(&self, i: usize, j: usize, k: usize) -> [f64; 3] {
        let q = self.index(i, j, k);
        [self.u[0][q], self.u[1][q], self.u[2][q]]
    }

    /// `Σ h³ φ(U)`
    fn integrate(&self, phi: impl Fn([f64; 3]) -> f64) -> f64 {
        let h3 = self.h.powi(3);
        (0..self.u[0].len())
            .map(|q| phi([self.u[0][q], self.u[1][q], self.u[2][q]]))
            .sum::<f64>()
            * h3
    }
}

/// `(u/r)(-x₂, x₁, 0)`
pub fn equivariant_vector(u: f64, x: [f64; 3]) -> [f64; 3] {
    let r = x[0].hypot(x[1]);
    if r == 0.0 {
        return [0.0; 3];
    }
    [-u * x[1] / r, u * x[0] / r, 0.0]
}

/// Samples the lift of `field` on the box. The interpolated quantity is the
/// smooth part `u/r^a`, so nodes near the axis need no special treatment.
pub fn lift(field: &Field, bx: BoxParams) -> Result<VectorField3> {
    let g = field.grid();
    if g.kind() != GridKind::Cylindrical || g.dim_n() != 3 || g.dim_k() != 2 {
        return Err(Error::GridMismatch(
            "lift needs a cylindrical grid with N = 3, K = 2".into(),
        ));
    }
    if bx.n < 8 || !(bx.half_width > 0.0) {
        return Err(Error::Range(format!("box n = {}, L = {}", bx.n, bx.half_width)));
    }
    let interp = Interpolator::new(field);
    let a = g.axis_exponent();
    let n = bx.n;
    let h = bx.h();
    let x: Vec<f64> = (0..n).map(|i| (i as f64 + 0.5 - 0.5 * n as f64) * h).collect();
    let mut u = [vec![0.0; n * n * n], vec![0.0; n * n * n], vec![0.0; n * n * n]];
    // v depends on (r, x₃) only: tabulate per (i, j) column
    let mut column = vec![0.0; n];
    for i in 0..n {
        for j in 0..n {
            let r = x[i].hypot(x[j]);
            let radial = if a == 1.0 { 1.0 } else { r.powf(a - 1.0) };
            for (k, c) in column.iter_mut().enumerate() {
                *c = radial * interp.eval_v(r, x[k]);
            }
            let base = (i * n + j) * n;
            for k in 0..n {
                u[0][base + k] = -column[k] * x[j];
                u[1][base + k] = column[k] * x[i];
            }
        }
    }
    let mut vf = VectorField3 {
        params: bx,
        h,
        u,
        boundary_ratio: 0.0,
    };
    let mut max_all = 0.0f64;
    let mut max_edge = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                let [a, b, c] = vf.get(i, j, k);
                let m = (a * a + b * b + c * c).sqrt();
                max_all = max_all.max(m);
                let edge = [i, j, k].iter().any(|&t| t == 0 || t == n - 1);
                if edge {
                    max_edge = max_edge.max(m);
                }
            }
        }
    }
    vf.boundary_ratio = if max_all > 0.0 { max_edge / max_all } else { 0.0 };
    Ok(vf)
}

/// `V ↦ g(|V|) V/|V|`, zero at the origin.
#[derive(Debug, Clone, Copy)]
pub struct VectorNonlinearity {
    pub scalar: Nonlinearity,
}

pub fn f_from_g(nl: &Nonlinearity) -> VectorNonlinearity {
    VectorNonlinearity { scalar: *nl }
}

impl VectorNonlinearity {
    pub fn apply(&self, v: [f64; 3]) -> [f64; 3] {
        let a = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
        let c = self.scalar.phase_rate(a);
        [c * v[0], c * v[1], c * v[2]]
    }

    /// `F(V) = G(|V|)`
    pub fn primitive(&self, v: [f64; 3]) -> f64 {
        self.scalar.big_g((v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt())
    }
}

/// Tenth-order centered first derivative along `axis` with zero
/// extension outside the box.
fn derivative(vf: &VectorField3, comp: usize, axis: usize) -> Vec<f64> {
    const C: [f64; 5] = [5.0 / 6.0, -5.0 / 21.0, 5.0 / 84.0, -5.0 / 504.0, 1.0 / 1260.0];
    stencil_derivative(vf, comp, axis, &C)
}

fn stencil_derivative(vf: &VectorField3, comp: usize, axis: usize, c: &[f64]) -> Vec<f64> {
    let n = vf.n();
    let stride = match axis {
        0 => n * n,
        1 => n,
        _ => 1,
    };
    let src = &vf.u[comp];
    let mut out = vec![0.0; src.len()];
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                let q = (i * n + j) * n + k;
                let pos = [i, j, k][axis];
                let mut acc = 0.0;
                for (s, &cs) in c.iter().enumerate() {
                    let d = s + 1;
                    let plus = if pos + d < n { src[q + d * stride] } else { 0.0 };
                    let minus = if pos >= d { src[q - d * stride] } else { 0.0 };
                    acc += cs * (plus - minus);
                }
                out[q] = acc / vf.h;
            }
        }
    }
    out
}

/// Second-order centered divergence.
pub fn divergence(vf: &VectorField3) -> Vec<f64> {
    let mut div = vec![0.0; vf.u[0].len()];
    for axis in 0..3 {
        let d = stencil_derivative(vf, axis, axis, &[0.5]);
        div.iter_mut().zip(&d).for_each(|(a, b)| *a += b);
    }
    div
}

/// `(Σ h³ (div U)²)^{1/2}`
pub fn divergence_l2(vf: &VectorField3) -> f64 {
    let h3 = vf.h.powi(3);
    (divergence(vf).iter().map(|d| d * d).sum::<f64>() * h3).sqrt()
}

#[derive(Debug, Clone, Serialize)]
pub struct LiftReport {
    #[serde(rename = "box")]
    pub bx: BoxParams,
    pub div_l2: f64,
    /// `‖div U‖ / ‖∇U‖`
    pub div_rel: f64,
    /// `E(U)` from the weak curl form.
    pub energy_vector: f64,
    /// `J(u)` on the scalar grid.
    pub energy_scalar: f64,
    pub energy_rel_diff: f64,
    /// `∫|∇×U|²` on the box and `[u]_μ²` on the scalar grid.
    pub curl_sq: f64,
    pub bracket_scalar: f64,
    /// `(∫|∇×U|² - (N/2)∫H̄(U)) / ∫|∇×U|²`
    #[serde(rename = "Q_rel")]
    pub q_rel: f64,
    /// `M / [u]_μ²` on the scalar grid.
    #[serde(rename = "M_rel")]
    pub m_rel: f64,
    /// Pointwise `∇(div U) - ΔU + λU - f(U)` with second-order stencils,
    /// relative to `‖λU‖`, outside a two-cell collar around the axis.
    #[serde(rename = "classical_residual_informative")]
    pub classical_residual: f64,
    pub boundary_ratio: f64,
    pub truncation_warning: Option<String>,
}

/// Boundary ratio above which the box is rejected.
pub const BOX_REJECT: f64 = 1e-3;
/// Boundary ratio above which a truncation warning is issued.
pub const BOX_WARN: f64 = 1e-6;

/// Lifts a scalar solution and compares the vector problem against it.
pub fn lift_report(
    field: &Field,
    lambda: f64,
    spec: &ProblemSpec,
    nl: &Nonlinearity,
    bx: BoxParams,
) -> Result<LiftReport> {
    if spec.n != 3 || spec.k != 2 || spec.m != 1 || spec.mu != 1.0 {
        return Err(Error::constraint(
            "(N, K, m, mu) = (3, 2, 1, 1)",
            format!("({}, {}, {}, {})", spec.n, spec.k, spec.m, spec.mu),
        ));
    }
    let vf = lift(field, bx)?;
    if vf.boundary_ratio > BOX_REJECT {
        return Err(Error::Range(format!(
            "box too small: boundary |U| is {:e} of the maximum",
            vf.boundary_ratio
        )));
    }
    let truncation_warning = (vf.boundary_ratio > BOX_WARN)
        .then(|| format!("field is {:e} of its maximum on the box boundary", vf.boundary_ratio));
    let rep = functional_report(field, spec, nl)?;
    let f = f_from_g(nl);
    let h3 = vf.h.powi(3);
    let len = vf.u[0].len();

    // ∂_j U_i, tenth order
    let mut grad_sq = vec![0.0; len];
    let mut div = vec![0.0; len];
    let mut d = [
        [Vec::new(), Vec::new(), Vec::new()],
        [Vec::new(), Vec::new(), Vec::new()],
        [Vec::new(), Vec::new(), Vec::new()],
    ];
    for (i, row) in d.iter_mut().enumerate() {
        for (j, slot) in row.iter_mut().enumerate() {
            *slot = derivative(&vf, i, j);
            for q in 0..len {
                grad_sq[q] += slot[q] * slot[q];
            }
            if i == j {
                for q in 0..len {
                    div[q] += slot[q];
                }
            }
        }
    }
    let weak: f64 = (0..len).map(|q| grad_sq[q] - div[q] * div[q]).sum::<f64>() * h3;
    let curl_sq: f64 = (0..len)
        .map(|q| {
            let c0 = d[2][1][q] - d[1][2][q];
            let c1 = d[0][2][q] - d[2][0][q];
            let c2 = d[1][0][q] - d[0][1][q];
            c0 * c0 + c1 * c1 + c2 * c2
        })
        .sum::<f64>()
        * h3;
    let grad_norm = (grad_sq.iter().sum::<f64>() * h3).sqrt();
    let big_f = vf.integrate(|v| f.primitive(v));
    let h_bar = vf.integrate(|v| nl.big_h((v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt()));
    let energy_vector = 0.5 * weak - big_f;
    let div_l2 = divergence_l2(&vf);

    let classical_residual = classical_residual(&vf, lambda, &f);
    Ok(LiftReport {
        bx,
        div_l2,
        div_rel: div_l2 / grad_norm,
        energy_vector,
        energy_scalar: rep.j,
        energy_rel_diff: (energy_vector - rep.j).abs() / rep.j.abs(),
        curl_sq,
        bracket_scalar: rep.bracket_mu_sq,
        q_rel: (curl_sq - 1.5 * h_bar) / curl_sq,
        m_rel: rep.m / rep.bracket_mu_sq,
        classical_residual,
        boundary_ratio: vf.boundary_ratio,
        truncation_warning,
    })
}

fn classical_residual(vf: &VectorField3, lambda: f64, f: &VectorNonlinearity) -> f64 {
    let n = vf.n();
    let h = vf.h;
    let div = divergence(vf);
    let at = |a: &[f64], i: isize, j: isize, k: isize| -> f64 {
        let n = n as isize;
        if i < 0 || j < 0 || k < 0 || i >= n || j >= n || k >= n {
            0.0
        } else {
            a[((i * n + j) * n + k) as usize]
        }
    };
    let collar = 2.0 * h;
    let (mut num, mut den) = (0.0, 0.0);
    for i in 0..n {
        for j in 0..n {
            if vf.coord(i).hypot(vf.coord(j)) < collar {
                continue;
            }
            for k in 0..n {
                let (ii, jj, kk) = (i as isize, j as isize, k as isize);
                let q = vf.index(i, j, k);
                let grad_div = [
                    (at(&div, ii + 1, jj, kk) - at(&div, ii - 1, jj, kk)) / (2.0 * h),
                    (at(&div, ii, jj + 1, kk) - at(&div, ii, jj - 1, kk)) / (2.0 * h),
                    (at(&div, ii, jj, kk + 1) - at(&div, ii, jj, kk - 1)) / (2.0 * h),
                ];
                let fv = f.apply(vf.get(i, j, k));
                for c in 0..3 {
                    let a = &vf.u[c];
                    let lap = (at(a, ii + 1, jj, kk)
                        + at(a, ii - 1, jj, kk)
                        + at(a, ii, jj + 1, kk)
                        + at(a, ii, jj - 1, kk)
                        + at(a, ii, jj, kk + 1)
                        + at(a, ii, jj, kk - 1)
                        - 6.0 * a[q])
                        / (h * h);
                    let res = grad_div[c] - lap + lambda * a[q] - fv[c];
                    num += res * res;
                    den += (lambda * a[q]).powi(2);
                }
            }
        }
    }
    (num / den).sqrt()
}

/// CSV rows `x1,x2,x3,U1,U2,U3`.
pub fn write_vector_csv(vf: &VectorField3, mut out: impl Write) -> std::io::Result<()> {
    writeln!(out, "# box n={} L={}", vf.n(), vf.params.half_width)?;
    writeln!(out, "x1,x2,x3,U1,U2,U3")?;
    let n = vf.n();
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                let [a, b, c] = vf.get(i, j, k);
                writeln!(
                    out,
                    "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
                    vf.coord(i),
                    vf.coord(j),
                    vf.coord(k),
                    a,
                    b,
                    c
                )?;
            }
        }
    }
    Ok(())
}
