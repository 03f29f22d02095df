//! Radial ground state of `w'' + (N-1)/r w' - w + |w|^{p-2}w = 0` by
//! shooting on `w(0)`.
//!
//! Overshooting trajectories cross zero; undershooting ones turn back up
//! while still positive. The profile is the undershooting side of the
//! bisected separatrix, cut at its minimum (where the growing mode takes
//! over), and zero beyond.

use std::sync::Arc;

use serde::Serialize;

use super::rk45::{integrate, Step, Tolerances};
use crate::error::{Error, Result};
use crate::field::{Field, Grid};
use crate::model::{Nonlinearity, ProblemSpec};
use crate::special::sphere_area;

#[derive(Debug, Clone, Serialize)]
pub struct OracleProfile {
    pub n: usize,
    pub p: f64,
    pub w0: f64,
    pub r_cut: f64,
    /// `|w|₂²`
    pub mass: f64,
    /// `|∇w|₂²`
    pub grad_sq: f64,
    /// `|w|_p^p`
    pub lp: f64,
    #[serde(skip)]
    nodes: Vec<[f64; 3]>,
    #[serde(skip)]
    series: [f64; 3],
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Outcome {
    Over,
    Under,
}

struct Shooter {
    n: f64,
    p: f64,
    omega: f64,
    r0: f64,
    tol: Tolerances,
}

impl Shooter {
    fn force(&self, w: f64) -> f64 {
        w - w.abs().powf(self.p - 2.0) * w
    }

    fn series(&self, w0: f64) -> [f64; 3] {
        let f0 = self.force(w0);
        let df0 = 1.0 - (self.p - 1.0) * w0.abs().powf(self.p - 2.0);
        let c2 = f0 / (2.0 * self.n);
        let c4 = df0 * c2 / (4.0 * (self.n + 2.0));
        [w0, c2, c4]
    }

    fn initial(&self, w0: f64) -> [f64; 5] {
        let [w0, c2, c4] = self.series(w0);
        let (r0, n, p, om) = (self.r0, self.n, self.p, self.omega);
        let w = w0 + c2 * r0 * r0 + c4 * r0.powi(4);
        let dw = 2.0 * c2 * r0 + 4.0 * c4 * r0.powi(3);
        let rn = r0.powf(n);
        let rn2 = r0.powf(n + 2.0);
        let mass = om * (w0 * w0 * rn / n + 2.0 * w0 * c2 * rn2 / (n + 2.0));
        let grad = om * 4.0 * c2 * c2 * rn2 / (n + 2.0);
        let lp = om * (w0.powf(p) * rn / n + p * w0.powf(p - 1.0) * c2 * rn2 / (n + 2.0));
        [w, dw, mass, grad, lp]
    }

    fn rhs(&self, r: f64, y: &[f64; 5]) -> [f64; 5] {
        let (w, dw) = (y[0], y[1]);
        let rn1 = self.omega * r.powf(self.n - 1.0);
        [
            dw,
            -(self.n - 1.0) / r * dw + self.force(w),
            rn1 * w * w,
            rn1 * dw * dw,
            rn1 * w.abs().powf(self.p),
        ]
    }

    fn shoot(&self, w0: f64, mut record: Option<&mut Vec<[f64; 3]>>) -> (Outcome, Step<5>) {
        let y0 = self.initial(w0);
        if let Some(rec) = record.as_deref_mut() {
            rec.push([self.r0, y0[0], y0[1]]);
        }
        let mut outcome = Outcome::Under;
        let end = integrate(
            |r, y| self.rhs(r, y),
            self.r0,
            y0,
            80.0,
            self.tol,
            |s| {
                if s.y[0] <= 0.0 {
                    outcome = Outcome::Over;
                    return true;
                }
                if let Some(rec) = record.as_deref_mut() {
                    rec.push([s.t, s.y[0], s.y[1]]);
                }
                if s.y[1] >= 0.0 {
                    outcome = Outcome::Under;
                    return true;
                }
                false
            },
        );
        (outcome, end)
    }
}

/// Ground state `w` of the pure-power problem with `m = 1`, `μ = 0`,
/// `K = N`, `g(u) = |u|^{p-2}u`. `tol` is the relative ODE tolerance.
pub fn shooting_oracle(spec: &ProblemSpec, nl: &Nonlinearity, tol: f64) -> Result<OracleProfile> {
    if spec.m != 1 || spec.mu != 0.0 || spec.k != spec.n {
        return Err(Error::Unsupported(
            "shooting oracle needs m = 1, μ = 0 and K = N".into(),
        ));
    }
    if nl.eta1 != 0.0 || nl.eta2 != 1.0 {
        return Err(Error::Unsupported("shooting oracle needs g(u) = |u|^{p-2}u".into()));
    }
    let p = nl.p;
    if !(p > 2.0 && p < spec.two_star_high) {
        return Err(Error::Range(format!("p = {p} outside (2, 2^*)")));
    }
    let sh = Shooter {
        n: spec.n as f64,
        p,
        omega: sphere_area(spec.n),
        r0: 1e-3,
        tol: Tolerances {
            rtol: tol,
            atol: 1e-18,
            h_init: 1e-4,
            h_max: 0.05,
        },
    };
    let mut lo = 1.0 + 1e-9;
    if sh.shoot(lo, None).0 != Outcome::Under {
        return Err(Error::Bracket("w(0) just above 1 does not undershoot".into()));
    }
    let mut hi = 2.0;
    let mut k = 0;
    while sh.shoot(hi, None).0 != Outcome::Over {
        lo = hi;
        hi *= 2.0;
        k += 1;
        if k > 40 {
            return Err(Error::Bracket("no overshooting w(0) found".into()));
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        match sh.shoot(mid, None).0 {
            Outcome::Under => lo = mid,
            Outcome::Over => hi = mid,
        }
    }
    let mut nodes = Vec::new();
    let (outcome, end) = sh.shoot(lo, Some(&mut nodes));
    if outcome != Outcome::Under {
        return Err(Error::Bracket("bisection endpoint lost its undershoot".into()));
    }
    Ok(OracleProfile {
        n: spec.n,
        p,
        w0: lo,
        r_cut: end.t,
        mass: end.y[2],
        grad_sq: end.y[3],
        lp: end.y[4],
        series: sh.series(lo),
        nodes,
    })
}

impl OracleProfile {
    /// `w(r)` by cubic Hermite interpolation of the accepted steps.
    pub fn eval(&self, r: f64) -> f64 {
        let r = r.abs();
        let first = self.nodes[0][0];
        if r <= first {
            let [w0, c2, c4] = self.series;
            return w0 + c2 * r * r + c4 * r.powi(4);
        }
        if r >= self.r_cut {
            return 0.0;
        }
        let k = self.nodes.partition_point(|n| n[0] <= r);
        let [r0, w0, d0] = self.nodes[k - 1];
        let [r1, w1, d1] = self.nodes[k];
        let h = r1 - r0;
        let t = (r - r0) / h;
        let t2 = t * t;
        let t3 = t2 * t;
        (2.0 * t3 - 3.0 * t2 + 1.0) * w0
            + (t3 - 2.0 * t2 + t) * h * d0
            + (-2.0 * t3 + 3.0 * t2) * w1
            + (t3 - t2) * h * d1
    }

    /// `λ` such that `λ^{1/(p-2)} w(√λ x)` has mass `rho`.
    pub fn lambda_for_mass(&self, rho: f64) -> f64 {
        let e = 2.0 / (self.p - 2.0) - self.n as f64 / 2.0;
        (rho / self.mass).powf(1.0 / e)
    }

    /// `(λ, u)` with `u = λ^{1/(p-2)} w(√λ ·)` sampled on `grid`.
    pub fn rescaled(&self, grid: &Arc<Grid>, rho: f64) -> (f64, Field) {
        let lambda = self.lambda_for_mass(rho);
        let amp = lambda.powf(1.0 / (self.p - 2.0));
        let k = lambda.sqrt();
        (lambda, Field::from_fn(grid, |r, _| amp * self.eval(k * r)))
    }

    /// `(|∇w|² + |w|² - |w|_p^p) / |w|_p^p`
    pub fn nehari_rel(&self) -> f64 {
        (self.grad_sq + self.mass - self.lp) / self.lp
    }

    /// Relative residual of `(N-2)/2 |∇w|² + N/2 |w|² = N/p |w|_p^p`.
    pub fn pohozaev_rel(&self) -> f64 {
        let n = self.n as f64;
        let rhs = n / self.p * self.lp;
        ((n - 2.0) / 2.0 * self.grad_sq + n / 2.0 * self.mass - rhs) / rhs
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn three_dimensional_cubic() {
        let spec = ProblemSpec::new(3, 3, 1, 0.0, 1.0).unwrap();
        let nl = Nonlinearity::pure_power(4.0, &spec).unwrap();
        let w = shooting_oracle(&spec, &nl, 1e-12).unwrap();
        assert!(w.nehari_rel().abs() < 1e-6, "{}", w.nehari_rel());
        assert!(w.pohozaev_rel().abs() < 1e-6, "{}", w.pohozaev_rel());
        assert!(w.w0 > 4.0 && w.w0 < 4.7, "{}", w.w0);
        let mut prev = f64::INFINITY;
        for i in 0..200 {
            let v = w.eval(i as f64 * 0.05);
            assert!(v <= prev);
            prev = v;
        }
    }

    #[test]
    fn townes_profile() {
        let spec = ProblemSpec::new(2, 2, 1, 0.0, 1.0).unwrap();
        let nl = Nonlinearity::pure_power(4.0, &spec).unwrap();
        let q = shooting_oracle(&spec, &nl, 1e-12).unwrap();
        assert!(q.nehari_rel().abs() < 1e-6 && q.pohozaev_rel().abs() < 1e-6);
        // Pohožaev in 2D with p = 4: |Q|² = |Q|_4^4 / 2
        assert!((q.mass - q.lp / 2.0).abs() < 1e-6 * q.mass);
    }
}
