//! Dilations, the fiber map `φ_u(s) = J(s^{N/2}u(s·))`, retraction onto the
//! constraint `M = 0`, and the plain rescaling `r(u)`.
//!
//! With `t = s^{N/2}`, `φ'(s) = m s^{2m-1} F(s)` where
//! `F(s) = [u]_μ² - (N/2m) s^{-(N+2m)} ∫H(t u)` is non-increasing, and
//! `M(s^{N/2}u(s·)) = s^{2m} F(s)`. For power sums `∫G(tu)` and `∫H(tu)` are
//! polynomials in `t` with coefficients `∫|u|^q`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::field::{functional_report, Field, GridKind, Interpolator};
use crate::model::{eta_limit, Nonlinearity, ProblemSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DilationMode {
    /// `s^{N/2} u(s·)`
    MassPreserving,
    /// `u(s·)`
    Plain,
}

#[derive(Debug, Clone)]
pub struct Dilation {
    pub field: Field,
    /// Fraction of the input mass that the dilation pushes off the grid.
    pub mass_loss_estimate: f64,
    /// `mass_loss_estimate` above `1e-8`.
    pub truncated: bool,
}

/// Resamples `s^{N/2}u(s·)` or `u(s·)` onto the same grid by cubic
/// interpolation.
pub fn dilate(field: &Field, s: f64, mode: DilationMode) -> Result<Dilation> {
    if !(s > 0.0) || !s.is_finite() {
        return Err(Error::Range(format!("dilation parameter s = {s}")));
    }
    let grid = field.grid().clone();
    if s == 1.0 {
        return Ok(Dilation {
            field: field.clone(),
            mass_loss_estimate: 0.0,
            truncated: false,
        });
    }
    let pref = match mode {
        DilationMode::MassPreserving => s.powf(grid.dim_n() as f64 / 2.0),
        DilationMode::Plain => 1.0,
    };
    let it = Interpolator::new(field);
    let values: Vec<f64> = grid.nodes().map(|(r, z)| pref * it.eval(s * r, s * z)).collect();

    // mass of u outside the image sR × sZ of the box
    let mut lost = 0.0;
    if s < 1.0 {
        let n_z = grid.n_z();
        let cyl = grid.kind() == GridKind::Cylindrical;
        let w = grid.weights();
        for (i, &r) in grid.r().iter().enumerate() {
            for (j, &z) in grid.z().iter().enumerate() {
                if r > s * grid.r_max() || (cyl && z.abs() > s * grid.z_max()) {
                    let k = i * n_z + j;
                    lost += w[k] * field.values()[k].powi(2);
                }
            }
        }
    }
    let mass = field.mass();
    let estimate = if mass > 0.0 { lost / mass } else { 0.0 };
    Ok(Dilation {
        field: Field::new(grid, values)?,
        mass_loss_estimate: estimate,
        truncated: estimate > 1e-8,
    })
}

/// `φ_u(s)` by pointwise quadrature on the original grid.
pub fn fiber_phi(field: &Field, s: f64, spec: &ProblemSpec, nl: &Nonlinearity) -> Result<f64> {
    if !(s > 0.0) || !s.is_finite() {
        return Err(Error::Range(format!("fiber parameter s = {s}")));
    }
    let rep = functional_report(field, spec, nl)?;
    let n = spec.n as f64;
    let t = s.powf(n / 2.0);
    let g: f64 = field
        .grid()
        .weights()
        .iter()
        .zip(field.values())
        .map(|(w, &u)| w * nl.big_g(t * u))
        .sum();
    let phi = s.powi(2 * spec.m as i32) * rep.bracket_mu_sq / 2.0 - g / s.powf(n);
    if !phi.is_finite() {
        return Err(Error::Range(format!("φ overflows at s = {s}")));
    }
    Ok(phi)
}

/// The fiber map of a profile reduced to scalars: `[u]_μ²` and the moments
/// `∫|u|^q` of the power-sum terms.
#[derive(Debug, Clone, Copy)]
pub struct FiberMap {
    bracket: f64,
    n: f64,
    m: f64,
    /// `(η_q / q, q, ∫|u|^q)`
    terms: [(f64, f64, f64); 2],
}

impl FiberMap {
    pub fn new(bracket: f64, values: &[f64], weights: &[f64], nl: &Nonlinearity, spec: &ProblemSpec) -> Self {
        let pt = nl.primitive_terms();
        let mut terms = [(0.0, 0.0, 0.0); 2];
        for (slot, &(c, q)) in terms.iter_mut().zip(&pt) {
            let moment = if c != 0.0 {
                weights.iter().zip(values).map(|(w, u)| w * u.abs().powf(q)).sum()
            } else {
                0.0
            };
            *slot = (c, q, moment);
        }
        Self {
            bracket,
            n: spec.n as f64,
            m: spec.m as f64,
            terms,
        }
    }

    pub fn of_field(field: &Field, spec: &ProblemSpec, nl: &Nonlinearity) -> Result<Self> {
        let rep = functional_report(field, spec, nl)?;
        Ok(Self::new(
            rep.bracket_mu_sq,
            field.values(),
            field.grid().weights(),
            nl,
            spec,
        ))
    }

    pub fn bracket(&self) -> f64 {
        self.bracket
    }

    /// `s^{-N} ∫G(s^{N/2}u)`, `s^{-N} ∫H(s^{N/2}u)`
    fn nonlinear(&self, s: f64) -> (f64, f64) {
        let ln_s = s.ln();
        let mut g = 0.0;
        let mut h = 0.0;
        for &(c, q, a) in &self.terms {
            if c == 0.0 || a == 0.0 {
                continue;
            }
            let scale = ((q * self.n / 2.0 - self.n) * ln_s).exp();
            g += c * a * scale;
            h += c * (q - 2.0) * a * scale;
        }
        (g, h)
    }

    pub fn phi(&self, s: f64) -> f64 {
        let (g, _) = self.nonlinear(s);
        s.powf(2.0 * self.m) * self.bracket / 2.0 - g
    }

    /// `F(s) = φ'(s) / (m s^{2m-1})`
    pub fn slope_factor(&self, s: f64) -> f64 {
        let (_, h) = self.nonlinear(s);
        self.bracket - self.n / (2.0 * self.m) * h * s.powf(-2.0 * self.m)
    }

    pub fn dphi(&self, s: f64) -> f64 {
        self.m * s.powf(2.0 * self.m - 1.0) * self.slope_factor(s)
    }

    /// `∫H(u)` at `s = 1`.
    pub fn h_int(&self) -> f64 {
        self.nonlinear(1.0).1
    }

    /// `∫|u|^{2_*}` when the critical term is present.
    fn critical_moment(&self) -> f64 {
        self.terms[0].2
    }

    /// Continuous maximizer of `φ`: log-bracketing by factors of 2, then
    /// bisection in `ln s` on the sign of `F`.
    pub fn maximize(&self) -> Result<FiberMax> {
        if !(self.h_int() > 0.0) {
            return Err(Error::RetractionInfeasible(format!(
                "∫H(u) = {:e} is not positive",
                self.h_int()
            )));
        }
        if !(self.bracket > 0.0) {
            return Err(Error::RetractionInfeasible(format!(
                "[u]_μ² = {:e} is not positive",
                self.bracket
            )));
        }
        let f = |s: f64| self.slope_factor(s);
        let (mut lo, mut hi) = (1.0f64, 1.0f64);
        if f(1.0) > 0.0 {
            let mut k = 0;
            while f(hi) > 0.0 {
                lo = hi;
                hi *= 2.0;
                k += 1;
                if k > 400 || !hi.is_finite() {
                    return Err(Error::RetractionInfeasible(
                        "φ' stays positive: no maximizer on the fiber".into(),
                    ));
                }
            }
        } else {
            let mut k = 0;
            while f(lo) <= 0.0 {
                hi = lo;
                lo /= 2.0;
                k += 1;
                if k > 400 || lo == 0.0 {
                    return Err(Error::RetractionInfeasible("φ' stays non-positive as s → 0".into()));
                }
            }
        }
        // lo: F > 0, hi: F ≤ 0
        let root = bisect_log(lo, hi, |s| f(s) > 0.0);
        let s_star = root;
        let phi_star = self.phi(s_star);

        // set where |φ'| is numerically zero
        let tol = 1e-12 * phi_star.abs().max(1.0);
        let flat = |s: f64| self.dphi(s).abs() < tol;
        let (a, b) = if flat(s_star) {
            let mut a_lo = s_star;
            let mut k = 0;
            while flat(a_lo) && k < 200 {
                a_lo /= 2.0;
                k += 1;
            }
            let a = bisect_log(a_lo, s_star, |s| !flat(s));
            let mut b_hi = s_star;
            k = 0;
            while flat(b_hi) && k < 200 {
                b_hi *= 2.0;
                k += 1;
            }
            let b = bisect_log(s_star, b_hi, flat);
            (a, b)
        } else {
            (s_star, s_star)
        };
        let probes: Vec<f64> = (1..=5).map(|i| a * (b / a).powf(i as f64 / 6.0)).collect();
        let is_plateau = b > a * (1.0 + 1e-9) && probes.iter().all(|&s| flat(s));
        Ok(FiberMax {
            s_star,
            phi_at_star: phi_star,
            plateau: [a, b],
            is_plateau,
        })
    }
}

/// Bisection in `ln s`; `left(s)` holds at `lo` and fails at `hi`. Returns
/// the last point where `left` holds.
fn bisect_log(lo: f64, hi: f64, left: impl Fn(f64) -> bool) -> f64 {
    let (mut a, mut b) = (lo.ln(), hi.ln());
    for _ in 0..200 {
        let c = 0.5 * (a + b);
        if c == a || c == b {
            break;
        }
        if left(c.exp()) {
            a = c;
        } else {
            b = c;
        }
    }
    a.exp()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FiberMax {
    pub s_star: f64,
    pub phi_at_star: f64,
    /// Interval where `|φ'| < 1e-12 max(1, |φ|)`; degenerate when `φ` has a
    /// strict maximum.
    pub plateau: [f64; 2],
    pub is_plateau: bool,
}

#[derive(Debug, Clone)]
pub struct FiberResult {
    /// Maximizer of the continuous fiber map of the input.
    pub s_star: f64,
    pub phi_at_star: f64,
    pub plateau: [f64; 2],
    pub is_plateau: bool,
    /// Dilation actually applied, after correcting for resampling so that
    /// the discrete constraint vanishes.
    pub s_refined: f64,
    pub retracted: Field,
    /// Relative `M` of the retracted field, `M / [u]_μ²`.
    pub constraint_rel: f64,
    pub mass_loss_estimate: f64,
}

/// Checks the retraction precondition: `∫H(u) > 0` and
/// `[u]_μ² / |u|_{2_*}^{2_*} > η N / 2m`.
pub fn retraction_precondition(map: &FiberMap, nl: &Nonlinearity, spec: &ProblemSpec) -> Result<()> {
    if !(map.h_int() > 0.0) {
        return Err(Error::RetractionInfeasible(format!(
            "∫H(u) = {:e} is not positive",
            map.h_int()
        )));
    }
    let eta = eta_limit(nl, spec);
    if eta > 0.0 {
        let moment = if nl.eta1 > 0.0 {
            map.critical_moment()
        } else {
            map.terms[1].2
        };
        let ratio = map.bracket / moment;
        let need = eta * spec.pohozaev_factor();
        if !(ratio > need) {
            return Err(Error::RetractionInfeasible(format!(
                "[u]_μ²/|u|_{{2_*}}^{{2_*}} = {ratio:e} does not exceed ηN/2m = {need:e}"
            )));
        }
    }
    Ok(())
}

/// Retraction target tolerance on `|M| / [u]_μ²`.
pub const RETRACTION_TOL: f64 = 1e-10;

/// Mass-preserving dilation onto `M = 0` along the fiber of `field`.
pub fn fiber_retract(field: &Field, spec: &ProblemSpec, nl: &Nonlinearity) -> Result<FiberResult> {
    let map = FiberMap::of_field(field, spec, nl)?;
    retraction_precondition(&map, nl, spec)?;
    let max = map.maximize()?;
    let mass = field.mass();

    let on_manifold = |f: &Field| -> Result<f64> {
        let rep = functional_report(f, spec, nl)?;
        Ok(rep.m / rep.bracket_mu_sq)
    };
    let m0 = on_manifold(field)?;
    if m0.abs() <= RETRACTION_TOL {
        return Ok(FiberResult {
            s_star: max.s_star,
            phi_at_star: max.phi_at_star,
            plateau: max.plateau,
            is_plateau: max.is_plateau,
            s_refined: 1.0,
            retracted: field.clone(),
            constraint_rel: m0,
            mass_loss_estimate: 0.0,
        });
    }

    // discrete constraint along resampled, mass-normalized dilations
    let eval = |s: f64| -> Result<(f64, Dilation)> {
        let mut d = dilate(field, s, DilationMode::MassPreserving)?;
        let dm = d.field.mass();
        if !(dm > 0.0) {
            return Err(Error::RetractionInfeasible("dilation lost all mass".into()));
        }
        let c = (mass / dm).sqrt();
        d.field.values_mut().iter_mut().for_each(|v| *v *= c);
        let rel = on_manifold(&d.field)?;
        Ok((rel, d))
    };

    let s0 = max.s_star;
    let (m_a, d_a) = eval(s0)?;
    if m_a.abs() <= RETRACTION_TOL {
        return Ok(finish(max, s0, d_a, m_a));
    }
    // bracket the discrete root around s0; M_h decreases in s near the root
    let step = 1e-6f64.max(m_a.abs());
    let (mut a, mut fa) = (s0, m_a);
    let mut b = if m_a > 0.0 {
        s0 * (1.0 + step)
    } else {
        s0 / (1.0 + step)
    };
    let (mut fb, mut db) = eval(b)?;
    let mut k = 0;
    while fa.signum() == fb.signum() {
        a = b;
        fa = fb;
        b = if m_a > 0.0 { b * (1.0 + step) } else { b / (1.0 + step) };
        let r = eval(b)?;
        fb = r.0;
        db = r.1;
        k += 1;
        if k > 60 {
            return Err(Error::RetractionInfeasible(
                "could not bracket the discrete constraint root".into(),
            ));
        }
    }
    if fb.abs() <= RETRACTION_TOL {
        return Ok(finish(max, b, db, fb));
    }
    // Illinois-modified regula falsi
    let mut side = 0i8;
    let mut best = (fb.abs(), b, db, fb);
    for _ in 0..100 {
        let c = (a * fb - b * fa) / (fb - fa);
        let c = if c > a.min(b) && c < a.max(b) { c } else { 0.5 * (a + b) };
        let (fc, dc) = eval(c)?;
        if fc.abs() < best.0 {
            best = (fc.abs(), c, dc.clone(), fc);
        }
        if fc.abs() <= RETRACTION_TOL {
            return Ok(finish(max, c, dc, fc));
        }
        if fc.signum() == fb.signum() {
            b = c;
            fb = fc;
            if side == -1 {
                fa *= 0.5;
            }
            side = -1;
        } else {
            a = c;
            fa = fc;
            if side == 1 {
                fb *= 0.5;
            }
            side = 1;
        }
        if (a - b).abs() <= 4.0 * f64::EPSILON * a.abs().max(b.abs()) {
            break;
        }
    }
    Err(Error::RetractionInfeasible(format!(
        "discrete constraint stalls at |M|/[u]² = {:e} (s = {})",
        best.0, best.1
    )))
}

fn finish(max: FiberMax, s: f64, d: Dilation, rel: f64) -> FiberResult {
    FiberResult {
        s_star: max.s_star,
        phi_at_star: max.phi_at_star,
        plateau: max.plateau,
        is_plateau: max.is_plateau,
        s_refined: s,
        retracted: d.field,
        constraint_rel: rel,
        mass_loss_estimate: d.mass_loss_estimate,
    }
}

/// `r(u) = [(N/2m) ∫H(u) / [u]_μ²]^{1/(2m)}` and `u(r·)`, which satisfies
/// `M = 0` without preserving mass.
pub fn pohozaev_scale(field: &Field, spec: &ProblemSpec, nl: &Nonlinearity) -> Result<(f64, Dilation)> {
    let rep = functional_report(field, spec, nl)?;
    if !(rep.h_int > 0.0) {
        return Err(Error::RetractionInfeasible(format!(
            "∫H(u) = {:e} is not positive",
            rep.h_int
        )));
    }
    let r = (spec.pohozaev_factor() * rep.h_int / rep.bracket_mu_sq).powf(1.0 / (2.0 * spec.m as f64));
    let scaled = dilate(field, r, DilationMode::Plain)?;
    Ok((r, scaled))
}
