//! Time-dependent flow `i∂ₜΨ = (-Δ)^m Ψ + μ|y|^{-2m}Ψ - f(|Ψ|)Ψ` with
//! `f(a) = g(a)/a`, so that `e^{iλt}u` is stationary exactly when `(λ, u)`
//! solves the stationary problem.
//!
//! Strang splitting: a half-step of the pointwise phase rotation
//! `Ψ ← e^{i(dt/2) f(|Ψ|)} Ψ`, a Crank–Nicolson step of the linear part, and
//! a second half-step of the rotation.

use std::io::Write;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::field::{crank_nicolson, AxialModes, ComplexField, Field, Operator};
use crate::model::{Nonlinearity, ProblemSpec};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HistoryRow {
    pub t: f64,
    pub mass: f64,
    pub energy: f64,
}

#[derive(Debug, Clone)]
pub struct EvolutionState {
    pub psi: ComplexField,
    pub t: f64,
    pub dt: f64,
    pub steps: usize,
    pub history: Vec<HistoryRow>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvolveOptions {
    /// History row every this many steps (and at the end).
    pub record_every: usize,
    /// Abort once `max|Ψ|²` exceeds this multiple of its initial value.
    pub blowup_factor: f64,
}

impl Default for EvolveOptions {
    fn default() -> Self {
        Self {
            record_every: 1,
            blowup_factor: 1e6,
        }
    }
}

/// `J(Ψ) = ½ Re⟨Ψ, LΨ⟩ - ∫G(|Ψ|)`
pub fn energy(psi: &ComplexField, op: &Operator<'_>, nl: &Nonlinearity) -> f64 {
    let v = psi.values();
    let mut lv = vec![Complex64::new(0.0, 0.0); v.len()];
    op.apply(v, &mut lv);
    let w = psi.grid().weights();
    let mut quad = 0.0;
    let mut pot = 0.0;
    for k in 0..v.len() {
        quad += w[k] * (v[k].conj() * lv[k]).re;
        pot += w[k] * nl.big_g(v[k].norm());
    }
    0.5 * quad - pot
}

fn max_density(psi: &ComplexField) -> f64 {
    psi.values().iter().fold(0.0, |m, z| m.max(z.norm_sqr()))
}

fn rotate(psi: &mut [Complex64], nl: &Nonlinearity, tau: f64) {
    if nl.is_zero() {
        return;
    }
    for z in psi.iter_mut() {
        let theta = tau * nl.phase_rate(z.norm());
        *z *= Complex64::from_polar(1.0, theta);
    }
}

pub fn propagate(
    psi0: &ComplexField,
    spec: &ProblemSpec,
    nl: &Nonlinearity,
    t_end: f64,
    dt: f64,
) -> Result<EvolutionState> {
    propagate_with(psi0, spec, nl, t_end, dt, EvolveOptions::default())
}

/// Propagates to `t_end` in `⌈t_end/dt⌉` equal steps.
pub fn propagate_with(
    psi0: &ComplexField,
    spec: &ProblemSpec,
    nl: &Nonlinearity,
    t_end: f64,
    dt: f64,
    options: EvolveOptions,
) -> Result<EvolutionState> {
    if !(dt > 0.0) || !(t_end >= dt) || !t_end.is_finite() {
        return Err(Error::constraint("dt > 0, T ≥ dt", format!("dt = {dt}, T = {t_end}")));
    }
    if !(1..=2).contains(&spec.m) {
        return Err(Error::Unsupported(format!("m = {}", spec.m)));
    }
    let grid = psi0.grid().clone();
    crate::field::check_spec(&grid, spec)?;
    let steps = (t_end / dt - 1e-9).ceil().max(1.0) as usize;
    let dt = t_end / steps as f64;
    let op = Operator::new(&grid, spec.m, spec.mu)?;
    let cn = crank_nicolson(&op, AxialModes::new(&grid), dt)?;
    let half = Complex64::new(0.0, 0.5 * dt);

    let mut psi = psi0.clone();
    let bound = options.blowup_factor * max_density(&psi);
    let mut history = vec![HistoryRow {
        t: 0.0,
        mass: psi.mass(),
        energy: energy(&psi, &op, nl),
    }];
    let mut lpsi = vec![Complex64::new(0.0, 0.0); grid.len()];
    for step in 1..=steps {
        let v = psi.values_mut();
        rotate(v, nl, 0.5 * dt);
        op.apply(v, &mut lpsi);
        for (x, l) in v.iter_mut().zip(&lpsi) {
            *x -= half * l;
        }
        cn.solve_in_place(v);
        rotate(v, nl, 0.5 * dt);
        let t = step as f64 * dt;
        let density = max_density(&psi);
        if !density.is_finite() {
            return Err(Error::NonFinite("wave function"));
        }
        if density > bound {
            return Err(Error::BlowUp { t, density, bound });
        }
        if step % options.record_every.max(1) == 0 || step == steps {
            history.push(HistoryRow {
                t,
                mass: psi.mass(),
                energy: energy(&psi, &op, nl),
            });
        }
    }
    Ok(EvolutionState {
        psi,
        t: t_end,
        dt,
        steps,
        history,
    })
}

/// `‖|Ψ| - u‖₂ / ‖u‖₂`
pub fn soliton_deviation(state: &EvolutionState, u: &Field) -> Result<f64> {
    let modulus = state.psi.modulus();
    modulus.check_grid(u)?;
    let w = u.grid().weights();
    let (mut num, mut den) = (0.0, 0.0);
    for ((w, a), b) in w.iter().zip(modulus.values()).zip(u.values()) {
        num += w * (a - b.abs()).powi(2);
        den += w * b * b;
    }
    Ok((num / den).sqrt())
}

/// CSV rows `t,mass,energy`.
pub fn write_history_csv(history: &[HistoryRow], mut out: impl Write) -> std::io::Result<()> {
    writeln!(out, "t,mass,energy")?;
    for h in history {
        writeln!(out, "{:.16e},{:.16e},{:.16e}", h.t, h.mass, h.energy)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests;
