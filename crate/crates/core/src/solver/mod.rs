//! Minimization of `J` over `𝓓 ∩ 𝓜`, the Lagrange multiplier, a shooting
//! oracle for pure-power ground states, and mass scans.
//!
//! Each iteration takes a preconditioned descent step tangent to the mass
//! sphere, rescales back onto the sphere (the tangent step only ever raises
//! the mass), and retracts onto `M = 0` along the fiber. Near `𝓜` the
//! retracted energy `u ↦ max_s φ_u(s)` has the same gradient as `J`, so
//! Armijo backtracking on `J` after retraction is a descent method.

mod rk45;
mod shooting;

use std::sync::Arc;

use serde::{Deserialize, Serialize};

pub use rk45::{integrate, Step, Tolerances};
pub use shooting::{shooting_oracle, OracleProfile};

use crate::diagnostics::{gn_constant, identity_report};
use crate::error::{Error, Result};
use crate::fiber::{fiber_retract, FiberMap};
use crate::field::{
    check_spec, euler_lagrange, functional_report, preconditioner, AxialModes, Field, FunctionalReport, Grid,
    ModalSolver, Operator,
};
use crate::model::{eta_limit, mass_threshold_ok, Nonlinearity, ProblemSpec};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", deny_unknown_fields)]
pub enum InitChoice {
    /// `r^a exp(-|x|²/(2σ²))`, `σ = width` or an eighth of the box.
    Gaussian { width: Option<f64> },
}

impl Default for InitChoice {
    fn default() -> Self {
        InitChoice::Gaussian { width: None }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverOptions {
    /// Relative preconditioned PDE residual.
    pub tol: f64,
    /// Relative `|M|` at termination.
    pub constraint_tol: f64,
    pub max_iter: usize,
    pub armijo: f64,
    pub backtrack: f64,
    /// Polak–Ribière directions in the preconditioned metric.
    pub conjugate: bool,
    pub init: InitChoice,
    /// `C_{N,2_*}` for the threshold check; estimated when absent.
    pub gn_constant: Option<f64>,
    pub record_trace: bool,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            tol: 1e-6,
            constraint_tol: 1e-10,
            max_iter: 5000,
            armijo: 1e-4,
            backtrack: 0.5,
            conjugate: true,
            init: InitChoice::default(),
            gn_constant: None,
            record_trace: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TraceRow {
    #[serde(rename = "J")]
    pub j: f64,
    pub m_abs: f64,
    pub step: f64,
    pub residual: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SolveResult {
    #[serde(skip)]
    pub profile: Field,
    pub lambda: f64,
    pub energy: f64,
    pub iterations: usize,
    pub converged: bool,
    /// `‖(1 + L⁺)⁻¹ r_T‖ / ‖u‖` for the residual `r_T` left after removing
    /// its components along `u` and `∇M`; the stopping criterion.
    pub residual: f64,
    /// Same norm of the full residual `L u + λ u - g(u)`. On a grid it
    /// levels off at the discretization error of the constraint.
    pub residual_pde: f64,
    /// Coefficient of `∇M` removed from the residual; vanishes with `h`.
    pub constraint_multiplier: f64,
    pub residual_nehari: f64,
    pub residual_pohozaev: f64,
    /// `M / [u]_μ²`
    pub constraint_rel: f64,
    pub mass: f64,
    pub on_sphere: bool,
    pub functionals: FunctionalReport,
    pub trace: Vec<TraceRow>,
}

/// `λ = (∫g(u)u - [u]_μ²) / ∫u²`.
pub fn lagrange_multiplier(field: &Field, spec: &ProblemSpec, nl: &Nonlinearity) -> Result<f64> {
    let rep = functional_report(field, spec, nl)?;
    multiplier_from(&rep)
}

fn multiplier_from(rep: &FunctionalReport) -> Result<f64> {
    if !(rep.mass > 0.0) {
        return Err(Error::ZeroMass);
    }
    Ok((rep.gu_int - rep.bracket_mu_sq) / rep.mass)
}

/// Nonnegative default start `r^a e^{-|x|²/(2σ²)}` scaled to mass `ρ`.
///
/// Without an explicit width, `σ` starts at an eighth of the box and is
/// divided by the fiber maximizer of that Gaussian, which puts the start
/// near `𝓜` without resampling.
pub fn default_init(grid: &Arc<Grid>, spec: &ProblemSpec, nl: &Nonlinearity, init: InitChoice) -> Result<Field> {
    let InitChoice::Gaussian { width } = init;
    let box_size = if grid.n_z() > 1 {
        grid.r_max().min(grid.z_max())
    } else {
        grid.r_max()
    };
    let a = grid.axis_exponent();
    let gaussian = |sigma: f64| -> Result<Field> {
        let f = Field::from_fn(grid, |r, z| {
            r.powf(a) * (-(r * r + z * z) / (2.0 * sigma * sigma)).exp()
        });
        let mass = f.mass();
        if !(mass > 0.0) {
            return Err(Error::ZeroMass);
        }
        Ok(f.scaled((spec.rho / mass).sqrt()))
    };
    match width {
        Some(sigma) => gaussian(sigma),
        None => {
            let sigma = box_size / 8.0;
            let f = gaussian(sigma)?;
            match FiberMap::of_field(&f, spec, nl).and_then(|m| m.maximize()) {
                Ok(max) if max.s_star.is_finite() && max.s_star > 0.0 => {
                    let width = sigma / max.s_star;
                    let h = if grid.n_z() > 1 {
                        grid.h_r().max(grid.h_z())
                    } else {
                        grid.h_r()
                    };
                    if width < h {
                        return Err(Error::Range(format!(
                            "fiber-scaled start width {width:.3e} is below the grid spacing {h:.3e}; shrink the box"
                        )));
                    }
                    gaussian(width)
                }
                _ => Ok(f),
            }
        }
    }
}

/// Refuses to start when the mass threshold fails.
pub fn check_threshold(spec: &ProblemSpec, nl: &Nonlinearity, gn: Option<f64>) -> Result<()> {
    let eta = eta_limit(nl, spec);
    if eta == 0.0 {
        return Ok(());
    }
    let c = match gn {
        Some(c) => c,
        None => {
            if spec.m != 1 || spec.n > 3 {
                return Err(Error::Unsupported(
                    "threshold check needs a Gagliardo–Nirenberg constant for this (N, m)".into(),
                ));
            }
            gn_constant(spec, spec.two_star_low)?.c_best
        }
    };
    let t = mass_threshold_ok(spec, eta, c);
    if t.holds {
        Ok(())
    } else {
        Err(Error::Threshold { lhs: t.lhs })
    }
}

struct Workspace<'g> {
    op: Operator<'g>,
    modes: AxialModes,
    /// `1 + L⁺`, for reported residuals.
    p1: ModalSolver<f64>,
    /// `c + L⁺` with `c = max(1, λ)`, for steps.
    pc: ModalSolver<f64>,
    shift: f64,
}

impl<'g> Workspace<'g> {
    fn new(grid: &'g Grid, spec: &ProblemSpec, lambda: f64) -> Result<Self> {
        let op = Operator::new(grid, spec.m, spec.mu)?;
        let modes = AxialModes::new(grid);
        let p1 = preconditioner(&op, modes.clone(), 1.0)?;
        let shift = lambda.max(1.0);
        let pc = if shift == 1.0 {
            p1.clone()
        } else {
            preconditioner(&op, modes.clone(), shift)?
        };
        Ok(Self {
            op,
            modes,
            p1,
            pc,
            shift,
        })
    }

    fn refresh(&mut self, lambda: f64) -> Result<()> {
        let shift = lambda.max(1.0);
        if (shift / self.shift - 1.0).abs() > 0.25 {
            self.pc = preconditioner(&self.op, self.modes.clone(), shift)?;
            self.shift = shift;
        }
        Ok(())
    }
}

fn weighted_dot(w: &[f64], a: &[f64], b: &[f64]) -> f64 {
    w.iter().zip(a).zip(b).map(|((w, x), y)| w * x * y).sum()
}

/// `L u + λ u - g(u)`
fn residual(u: &Field, op: &Operator<'_>, nl: &Nonlinearity, lambda: f64) -> Vec<f64> {
    let mut r = euler_lagrange(u, op, nl);
    for (ri, &ui) in r.iter_mut().zip(u.values()) {
        *ri += lambda * ui;
    }
    r
}

/// `‖(1 + L⁺)⁻¹ r‖ / ‖u‖`
fn reported_residual(ws: &Workspace<'_>, u: &Field, r: &[f64]) -> f64 {
    let mut x = r.to_vec();
    ws.p1.solve_in_place(&mut x);
    let w = u.grid().weights();
    (weighted_dot(w, &x, &x) / weighted_dot(w, u.values(), u.values())).sqrt()
}

struct Iterate {
    u: Field,
    rep: FunctionalReport,
    lambda: f64,
    /// `L u + λ u - g(u)` with the Nehari `λ`
    r: Vec<f64>,
}

fn make_iterate(u: Field, spec: &ProblemSpec, nl: &Nonlinearity, op: &Operator<'_>) -> Result<Iterate> {
    let rep = functional_report(&u, spec, nl)?;
    let lambda = multiplier_from(&rep)?;
    let r = residual(&u, op, nl, lambda);
    Ok(Iterate { u, rep, lambda, r })
}

/// Rescale to mass `ρ`, optionally take `|u|`, retract onto `𝓜`.
fn project(values: Vec<f64>, grid: &Arc<Grid>, spec: &ProblemSpec, nl: &Nonlinearity, abs: bool) -> Result<Field> {
    let mut f = Field::new(grid.clone(), values)?;
    if abs {
        f.values_mut().iter_mut().for_each(|v| *v = v.abs());
    }
    let mass = f.mass();
    if !(mass > 0.0) {
        return Err(Error::ZeroMass);
    }
    if mass > spec.rho {
        let c = (spec.rho / mass).sqrt();
        f.values_mut().iter_mut().for_each(|v| *v *= c);
    }
    Ok(fiber_retract(&f, spec, nl)?.retracted)
}

/// Normals `u` and `∇M` at an iterate with the projection onto their
/// complement, orthogonal in the preconditioner metric.
struct Tangent {
    normals: [Vec<f64>; 2],
    pn: [Vec<f64>; 2],
    gram: [[f64; 2]; 2],
}

impl Tangent {
    fn new(it: &Iterate, pc: &ModalSolver<f64>, spec: &ProblemSpec, nl: &Nonlinearity, w: &[f64]) -> Self {
        let fac = spec.pohozaev_factor();
        let u = it.u.values();
        let grad_m = u
            .iter()
            .zip(&it.r)
            .map(|(&u, &ri)| 2.0 * (ri - it.lambda * u + nl.g(u)) - fac * nl.small_h(u))
            .collect();
        let normals = [u.to_vec(), grad_m];
        let pn = normals.clone().map(|mut x| {
            pc.solve_in_place(&mut x);
            x
        });
        let mut gram = [[0.0; 2]; 2];
        for i in 0..2 {
            for j in 0..2 {
                gram[i][j] = weighted_dot(w, &normals[i], &pn[j]);
            }
        }
        Self { normals, pn, gram }
    }

    /// Projects `v = P⁻¹x` in place; returns `α` with `v ← P⁻¹(x - Σα_j n_j)`.
    fn project(&self, w: &[f64], v: &mut [f64]) -> [f64; 2] {
        let g = &self.gram;
        let b = [
            weighted_dot(w, &self.normals[0], v),
            weighted_dot(w, &self.normals[1], v),
        ];
        let det = g[0][0] * g[1][1] - g[0][1] * g[1][0];
        let a = [
            (b[0] * g[1][1] - b[1] * g[0][1]) / det,
            (g[0][0] * b[1] - g[1][0] * b[0]) / det,
        ];
        for (i, vi) in v.iter_mut().enumerate() {
            *vi -= a[0] * self.pn[0][i] + a[1] * self.pn[1][i];
        }
        a
    }
}

/// Minimizes `J` on `𝓓 ∩ 𝓜` starting from `init`.
pub fn minimize_on_ball(
    init: &Field,
    spec: &ProblemSpec,
    nl: &Nonlinearity,
    options: &SolverOptions,
) -> Result<SolveResult> {
    let grid = init.grid().clone();
    check_spec(&grid, spec)?;
    check_threshold(spec, nl, options.gn_constant)?;
    let mass0 = init.mass();
    if !(mass0 > 0.0) {
        return Err(Error::ZeroMass);
    }
    if mass0 > spec.rho * (1.0 + 1e-8) {
        return Err(Error::constraint(
            "mass(init) ≤ rho",
            format!("mass = {mass0}, rho = {}", spec.rho),
        ));
    }
    let keep_sign = spec.m == 1 && nl.is_odd() && init.values().iter().all(|&v| v >= 0.0);

    // start on the sphere: the minimizer is there for these problems
    let start = project(
        init.scaled((spec.rho / mass0).sqrt()).into_values(),
        &grid,
        spec,
        nl,
        keep_sign,
    )?;
    let rep = functional_report(&start, spec, nl)?;
    let mut ws = Workspace::new(&grid, spec, multiplier_from(&rep)?)?;
    let mut it = make_iterate(start, spec, nl, &ws.op)?;
    let w = grid.weights().to_vec();
    let norm_u = it.u.mass().sqrt();

    let mut trace = Vec::new();
    let mut tau = 1.0f64;
    let mut prev_dir: Option<(Vec<f64>, Vec<f64>, f64)> = None; // (d, g, <r, g>)
    let mut iterations = 0;
    let mut stalled = false;
    let (res_c, sigma) = loop {
        ws.refresh(it.lambda)?;
        let tan = Tangent::new(&it, &ws.pc, spec, nl, &w);
        let mut g = it.r.clone();
        ws.pc.solve_in_place(&mut g);
        let alpha = tan.project(&w, &mut g);
        let mut rt: Vec<f64> = (0..g.len())
            .map(|i| it.r[i] - alpha[0] * tan.normals[0][i] - alpha[1] * tan.normals[1][i])
            .collect();
        ws.p1.solve_in_place(&mut rt);
        let res_c = weighted_dot(&w, &rt, &rt).sqrt() / norm_u;
        let m_rel = it.rep.m / it.rep.bracket_mu_sq;
        if options.record_trace {
            trace.push(TraceRow {
                j: it.rep.j,
                m_abs: it.rep.m.abs(),
                step: tau,
                residual: res_c,
            });
        }
        if res_c < options.tol && m_rel.abs() <= options.constraint_tol {
            break (res_c, alpha[1]);
        }
        if iterations >= options.max_iter || stalled {
            let best = finish(it, &ws, spec, nl, iterations, res_c, alpha[1], false, trace)?;
            return Err(Error::NotConverged {
                iterations,
                residual: res_c,
                best: Box::new(best),
            });
        }
        iterations += 1;

        let r = &it.r;
        let rg = weighted_dot(&w, r, &g);
        let mut d = g.clone();
        if options.conjugate {
            if let Some((dp, gp, rgp)) = &prev_dir {
                // Polak–Ribière+ with the previous direction re-projected
                let beta = ((rg - weighted_dot(&w, r, gp)) / rgp).max(0.0);
                if beta > 0.0 {
                    let mut dp = dp.clone();
                    tan.project(&w, &mut dp);
                    for (di, pi) in d.iter_mut().zip(&dp) {
                        *di += beta * pi;
                    }
                }
            }
        }
        let mut slope = weighted_dot(&w, r, &d);
        if !(slope > 0.5 * rg) {
            d.clone_from(&g);
            slope = rg;
        }
        if !(slope > 0.0) {
            // residual is orthogonal to every descent direction
            stalled = true;
            continue;
        }

        let j0 = it.rep.j;
        let armijo_ok = |c: &Iterate, t: f64| c.rep.j <= j0 - options.armijo * t * slope + 1e-14 * j0.abs();
        let eval = |t: f64| -> Option<(Iterate, f64)> {
            let trial: Vec<f64> = it.u.values().iter().zip(&d).map(|(u, d)| u - t * d).collect();
            let c = project(trial, &grid, spec, nl, keep_sign)
                .and_then(|f| make_iterate(f, spec, nl, &ws.op))
                .ok()?;
            let s = weighted_dot(&w, &c.r, &d);
            Some((c, s))
        };
        // secant on the directional derivative, guarded by Armijo
        let mut accepted: Option<(f64, Iterate)> = None;
        if let Some((c1, s1)) = eval(tau) {
            let t_star = if s1 < slope {
                tau * slope / (slope - s1)
            } else {
                4.0 * tau
            };
            let t_star = t_star.clamp(0.25 * tau, 4.0 * tau);
            let ok1 = armijo_ok(&c1, tau);
            let second = if (t_star / tau - 1.0).abs() > 0.1 {
                eval(t_star).filter(|(c, _)| armijo_ok(c, t_star))
            } else {
                None
            };
            accepted = match (ok1, second) {
                (true, Some((c2, _))) => {
                    if c2.rep.j <= c1.rep.j + 1e-13 * j0.abs() {
                        Some((t_star, c2))
                    } else {
                        Some((tau, c1))
                    }
                }
                (false, Some((c2, _))) => Some((t_star, c2)),
                (true, None) => Some((tau, c1)),
                (false, None) => None,
            };
        }
        if accepted.is_none() {
            let mut t = tau * options.backtrack;
            while t > 1e-14 {
                if let Some((c, _)) = eval(t) {
                    if armijo_ok(&c, t) {
                        accepted = Some((t, c));
                        break;
                    }
                }
                t *= options.backtrack;
            }
        }
        match accepted {
            Some((t, c)) => {
                tau = t.min(1e3);
                prev_dir = Some((d, g, rg));
                it = c;
            }
            None => {
                tau = 1.0;
                if prev_dir.take().is_none() {
                    stalled = true;
                }
            }
        }
    };
    finish(it, &ws, spec, nl, iterations, res_c, sigma, true, trace)
}

#[allow(clippy::too_many_arguments)]
fn finish(
    it: Iterate,
    ws: &Workspace<'_>,
    spec: &ProblemSpec,
    nl: &Nonlinearity,
    iterations: usize,
    res_c: f64,
    sigma: f64,
    converged: bool,
    trace: Vec<TraceRow>,
) -> Result<SolveResult> {
    let ids = identity_report(&it.u, it.lambda, spec, nl)?;
    let mass = it.rep.mass;
    Ok(SolveResult {
        lambda: it.lambda,
        energy: it.rep.j,
        iterations,
        converged,
        residual: res_c,
        residual_pde: reported_residual(ws, &it.u, &it.r),
        constraint_multiplier: sigma,
        residual_nehari: ids.nehari_rel,
        residual_pohozaev: ids.pohozaev_rel,
        constraint_rel: it.rep.m / it.rep.bracket_mu_sq,
        mass,
        on_sphere: (mass - spec.rho).abs() <= 1e-8 * spec.rho,
        functionals: it.rep,
        profile: it.u,
        trace,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct ScanRow {
    pub rho: f64,
    pub lambda: Option<f64>,
    #[serde(rename = "J")]
    pub j: Option<f64>,
    pub residual_pde: Option<f64>,
    pub residual_nehari: Option<f64>,
    pub residual_pohozaev: Option<f64>,
    pub iterations: Option<usize>,
    pub converged: bool,
    pub error: Option<String>,
}

/// Solves along `rho_list`, warm-starting each row from the previous
/// profile. Failures are recorded and the scan continues.
pub fn mass_scan(
    spec: &ProblemSpec,
    nl: &Nonlinearity,
    grid: &Arc<Grid>,
    rho_list: &[f64],
    options: &SolverOptions,
) -> Vec<(ScanRow, Option<SolveResult>)> {
    let mut warm: Option<Field> = None;
    let mut out = Vec::with_capacity(rho_list.len());
    for &rho in rho_list {
        let row = spec.with_rho(rho).and_then(|s| {
            let init = match &warm {
                Some(f) => {
                    let m = f.mass();
                    f.scaled((rho / m).sqrt())
                }
                None => default_init(grid, &s, nl, options.init)?,
            };
            minimize_on_ball(&init, &s, nl, options)
        });
        match row {
            Ok(res) => {
                warm = Some(res.profile.clone());
                out.push((
                    ScanRow {
                        rho,
                        lambda: Some(res.lambda),
                        j: Some(res.energy),
                        residual_pde: Some(res.residual_pde),
                        residual_nehari: Some(res.residual_nehari),
                        residual_pohozaev: Some(res.residual_pohozaev),
                        iterations: Some(res.iterations),
                        converged: true,
                        error: None,
                    },
                    Some(res),
                ));
            }
            Err(e) => {
                let best = match &e {
                    Error::NotConverged { best, .. } => Some(best.as_ref().clone()),
                    _ => None,
                };
                out.push((
                    ScanRow {
                        rho,
                        lambda: best.as_ref().map(|b| b.lambda),
                        j: best.as_ref().map(|b| b.energy),
                        residual_pde: best.as_ref().map(|b| b.residual_pde),
                        residual_nehari: best.as_ref().map(|b| b.residual_nehari),
                        residual_pohozaev: best.as_ref().map(|b| b.residual_pohozaev),
                        iterations: best.as_ref().map(|b| b.iterations),
                        converged: false,
                        error: Some(e.to_string()),
                    },
                    best,
                ));
            }
        }
    }
    out
}

#[cfg(test)]
mod tests;
