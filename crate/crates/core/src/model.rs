//! Problem parameters, derived exponents, the power-sum nonlinearity and the
//! admissibility and threshold predicates.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::special::gamma;

/// Returns `(2_*, 2^*)` with `2^* = +∞` when `N = 2m`.
pub fn derive_exponents(n: usize, m: usize) -> Result<(f64, f64)> {
    if m < 1 || n < 2 * m {
        return Err(Error::constraint("N ≥ 2m ≥ 2", format!("N = {n}, m = {m}")));
    }
    let nf = n as f64;
    let mf = m as f64;
    let low = 2.0 + 4.0 * mf / nf;
    let high = if n > 2 * m {
        2.0 * nf / (nf - 2.0 * mf)
    } else {
        f64::INFINITY
    };
    Ok((low, high))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HardyData {
    /// Best constant in the Hardy inequality; `+∞` when `K = 2m`.
    pub hardy_constant: f64,
    /// Admissibility bound on `mu` (strict when `K > 2m`, `mu ≥ 0` otherwise).
    pub mu_lower_bound: f64,
    pub tau: f64,
}

/// Hardy constant, admissibility bound and coercivity factor for `(K, m, mu)`.
pub fn hardy_and_tau(k: usize, m: usize, mu: f64) -> Result<HardyData> {
    if m < 1 || k < 2 * m {
        return Err(Error::constraint("K ≥ 2m", format!("K = {k}, m = {m}")));
    }
    if !mu.is_finite() {
        return Err(Error::NonFinite("mu"));
    }
    if k == 2 * m {
        if mu < 0.0 {
            return Err(Error::Admissibility {
                mu,
                bound: "mu ≥ 0 required when K = 2m".into(),
            });
        }
        return Ok(HardyData {
            hardy_constant: f64::INFINITY,
            mu_lower_bound: 0.0,
            tau: 1.0,
        });
    }
    let kf = k as f64;
    let mf = m as f64;
    let ratio = gamma((kf - 2.0 * mf) / 4.0) / (2f64.powi(m as i32) * gamma((kf + 2.0 * mf) / 4.0));
    let hardy_constant = ratio * ratio;
    let mu_lower_bound = -1.0 / hardy_constant;
    if mu <= mu_lower_bound {
        return Err(Error::Admissibility {
            mu,
            bound: format!("mu > -(2^m Γ((K+2m)/4) / Γ((K-2m)/4))^2 = {mu_lower_bound:.17e}"),
        });
    }
    let tau = if mu >= 0.0 { 1.0 } else { 1.0 + hardy_constant * mu };
    Ok(HardyData {
        hardy_constant,
        mu_lower_bound,
        tau,
    })
}

/// Validated problem parameters together with their derived constants.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProblemSpec {
    pub n: usize,
    pub k: usize,
    pub m: usize,
    pub mu: f64,
    pub rho: f64,
    pub two_star_low: f64,
    /// `+∞` (serialized as null) when `N = 2m`.
    pub two_star_high: f64,
    pub hardy_constant: f64,
    pub tau: f64,
}

impl ProblemSpec {
    pub fn new(n: usize, k: usize, m: usize, mu: f64, rho: f64) -> Result<Self> {
        if m < 1 {
            return Err(Error::constraint("2m ≥ 2", format!("m = {m}")));
        }
        if k > n {
            return Err(Error::constraint("N ≥ K", format!("N = {n}, K = {k}")));
        }
        if k < 2 * m {
            return Err(Error::constraint("K ≥ 2m", format!("K = {k}, m = {m}")));
        }
        if !(rho > 0.0) || !rho.is_finite() {
            return Err(Error::constraint("rho > 0", format!("rho = {rho}")));
        }
        let (two_star_low, two_star_high) = derive_exponents(n, m)?;
        let hardy = hardy_and_tau(k, m, mu)?;
        Ok(Self {
            n,
            k,
            m,
            mu,
            rho,
            two_star_low,
            two_star_high,
            hardy_constant: hardy.hardy_constant,
            tau: hardy.tau,
        })
    }

    pub fn with_rho(&self, rho: f64) -> Result<Self> {
        Self::new(self.n, self.k, self.m, self.mu, rho)
    }

    pub fn with_mu(&self, mu: f64) -> Result<Self> {
        Self::new(self.n, self.k, self.m, mu, self.rho)
    }

    /// `N / 2m`, the factor in front of `∫H` in the constraint.
    pub fn pohozaev_factor(&self) -> f64 {
        self.n as f64 / (2.0 * self.m as f64)
    }
}

/// Which scalar map of the nonlinearity to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NlComponent {
    /// `g`
    Force,
    /// `G`, the primitive of `g`
    Primitive,
    /// `H = g(s)s - 2G(s)`
    H,
    /// `h = H'`
    HPrime,
}

/// Power-sum nonlinearity `g(u) = η₁|u|^{2_*-2}u + η₂|u|^{p-2}u`.
///
/// Construction is permissive about `p` (degenerate inputs such as `p = 2_*`
/// or `p > 2^*` are representable so that [`assumption_spotcheck`] can flag
/// them).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Nonlinearity {
    pub eta1: f64,
    pub eta2: f64,
    pub p: f64,
    /// The mass-critical exponent the `η₁` term is built on.
    pub critical: f64,
}

impl Nonlinearity {
    pub fn power_sum(eta1: f64, eta2: f64, p: f64, spec: &ProblemSpec) -> Result<Self> {
        Self::with_critical(eta1, eta2, p, spec.two_star_low)
    }

    pub fn with_critical(eta1: f64, eta2: f64, p: f64, critical: f64) -> Result<Self> {
        if !(eta1 >= 0.0) {
            return Err(Error::constraint("η₁ ≥ 0", format!("η₁ = {eta1}")));
        }
        if !(eta2 >= 0.0) {
            return Err(Error::constraint("η₂ ≥ 0", format!("η₂ = {eta2}")));
        }
        if !(p > 2.0) || !p.is_finite() {
            return Err(Error::constraint("p > 2", format!("p = {p}")));
        }
        Ok(Self {
            eta1,
            eta2,
            p,
            critical,
        })
    }

    /// Pure power `|u|^{p-2}u`.
    pub fn pure_power(p: f64, spec: &ProblemSpec) -> Result<Self> {
        Self::power_sum(0.0, 1.0, p, spec)
    }

    /// `g ≡ 0`.
    pub fn zero(spec: &ProblemSpec) -> Self {
        Self {
            eta1: 0.0,
            eta2: 0.0,
            p: 4.0,
            critical: spec.two_star_low,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.eta1 == 0.0 && self.eta2 == 0.0
    }

    /// Every power-sum nonlinearity is odd.
    pub fn is_odd(&self) -> bool {
        true
    }

    /// Returns the exponent list `(coefficient of |s|^q in G, q)`.
    pub fn primitive_terms(&self) -> [(f64, f64); 2] {
        [(self.eta1 / self.critical, self.critical), (self.eta2 / self.p, self.p)]
    }

    #[inline]
    pub fn g(&self, s: f64) -> f64 {
        let a = s.abs();
        let mut out = 0.0;
        if self.eta1 != 0.0 {
            out += self.eta1 * a.powf(self.critical - 2.0) * s;
        }
        if self.eta2 != 0.0 {
            out += self.eta2 * a.powf(self.p - 2.0) * s;
        }
        out
    }

    #[inline]
    pub fn big_g(&self, s: f64) -> f64 {
        let a = s.abs();
        let mut out = 0.0;
        if self.eta1 != 0.0 {
            out += self.eta1 * a.powf(self.critical) / self.critical;
        }
        if self.eta2 != 0.0 {
            out += self.eta2 * a.powf(self.p) / self.p;
        }
        out
    }

    #[inline]
    pub fn big_h(&self, s: f64) -> f64 {
        let a = s.abs();
        let mut out = 0.0;
        if self.eta1 != 0.0 {
            out += self.eta1 * (self.critical - 2.0) / self.critical * a.powf(self.critical);
        }
        if self.eta2 != 0.0 {
            out += self.eta2 * (self.p - 2.0) / self.p * a.powf(self.p);
        }
        out
    }

    #[inline]
    pub fn small_h(&self, s: f64) -> f64 {
        let a = s.abs();
        let mut out = 0.0;
        if self.eta1 != 0.0 {
            out += self.eta1 * (self.critical - 2.0) * a.powf(self.critical - 2.0) * s;
        }
        if self.eta2 != 0.0 {
            out += self.eta2 * (self.p - 2.0) * a.powf(self.p - 2.0) * s;
        }
        out
    }

    /// `f(a) = g(a)/a` for `a ≥ 0`, extended by continuity at 0.
    #[inline]
    pub fn phase_rate(&self, a: f64) -> f64 {
        let mut out = 0.0;
        if self.eta1 != 0.0 {
            out += self.eta1 * a.powf(self.critical - 2.0);
        }
        if self.eta2 != 0.0 {
            out += self.eta2 * a.powf(self.p - 2.0);
        }
        out
    }

    pub fn eval(&self, s: f64, which: NlComponent) -> f64 {
        match which {
            NlComponent::Force => self.g(s),
            NlComponent::Primitive => self.big_g(s),
            NlComponent::H => self.big_h(s),
            NlComponent::HPrime => self.small_h(s),
        }
    }
}

/// `η = limsup_{s→0} H(s)/|s|^{2_*}` in closed form for the power-sum family.
///
/// Panics in debug builds if the nonlinearity was built on a different
/// critical exponent than `spec`.
pub fn eta_limit(nl: &Nonlinearity, spec: &ProblemSpec) -> f64 {
    debug_assert!((nl.critical - spec.two_star_low).abs() < 1e-14);
    let crit = spec.two_star_low;
    let mut eta = nl.eta1 * (crit - 2.0) / crit;
    // a p-term at the critical exponent does not vanish in the limit
    if nl.eta2 != 0.0 && (nl.p - crit).abs() < 1e-14 {
        eta += nl.eta2 * (nl.p - 2.0) / nl.p;
    }
    eta
}

/// Numeric `limsup` of `H(s)/|s|^{2_*}` on the ladder `s = ±10^{-k}`,
/// `k = 2..=8`, for nonlinearities given only as a callable.
///
/// The ladder suprema `sup_{j ≥ k}` are formed from the small end and the
/// tail value (`k ≥ 6`) is returned.
pub fn numeric_eta(big_h: impl Fn(f64) -> f64, two_star_low: f64) -> f64 {
    let ratios: Vec<f64> = (2..=8)
        .map(|k| {
            let s = 10f64.powi(-k);
            let q = |x: f64| big_h(x) / x.abs().powf(two_star_low);
            q(s).max(q(-s))
        })
        .collect();
    ratios[4..].iter().copied().fold(f64::NEG_INFINITY, f64::max)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ThresholdReport {
    pub holds: bool,
    /// `(N/2m) η C_*^{2_*} ρ^{2m/N} τ^{-1}`
    pub lhs: f64,
    pub margin: f64,
    /// Mass at which the left-hand side equals 1 (`+∞` when `η = 0`).
    pub boundary_mass: f64,
}

pub fn mass_threshold_ok(spec: &ProblemSpec, eta: f64, gn_constant: f64) -> ThresholdReport {
    let n = spec.n as f64;
    let m = spec.m as f64;
    let coeff = spec.pohozaev_factor() * eta * gn_constant.powf(spec.two_star_low) / spec.tau;
    let lhs = coeff * spec.rho.powf(2.0 * m / n);
    let boundary_mass = if coeff > 0.0 {
        coeff.powf(-n / (2.0 * m))
    } else {
        f64::INFINITY
    };
    ThresholdReport {
        holds: lhs < 1.0,
        lhs,
        margin: 1.0 - lhs,
        boundary_mass,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InequalityCheck {
    pub name: String,
    /// `f₁(s) ≤ f₂(s)` at every sample point.
    pub holds: bool,
    /// Equality held (to relative 1e-12) at every sample point.
    pub non_strict_everywhere: bool,
    pub first_violation: Option<f64>,
}

impl InequalityCheck {
    fn run(name: &str, sample: &[f64], lhs: impl Fn(f64) -> f64, rhs: impl Fn(f64) -> f64) -> Self {
        let mut first_violation = None;
        let mut strict = false;
        for &s in sample {
            let a = lhs(s);
            let b = rhs(s);
            let scale = a.abs().max(b.abs()).max(f64::MIN_POSITIVE);
            if a > b + 1e-12 * scale {
                first_violation.get_or_insert(s);
            } else if a < b - 1e-12 * scale {
                strict = true;
            }
        }
        Self {
            name: name.to_string(),
            holds: first_violation.is_none(),
            non_strict_everywhere: !strict,
            first_violation,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AssumptionReport {
    pub checks: Vec<InequalityCheck>,
    pub pass: bool,
}

impl AssumptionReport {
    pub fn check(&self, name: &str) -> Option<&InequalityCheck> {
        self.checks.iter().find(|c| c.name == name)
    }
}

/// Samples the growth bounds `2_* H ≤ h s` and `(4m/N) G ≤ H ≤ (2^* - 2) G` with `G ≥ 0`.
pub fn assumption_spotcheck(nl: &Nonlinearity, spec: &ProblemSpec, sample: &[f64]) -> Result<AssumptionReport> {
    if sample.is_empty() {
        return Err(Error::constraint("sample nonempty", "empty sample"));
    }
    if sample.iter().any(|&s| s == 0.0 || !s.is_finite()) {
        return Err(Error::constraint("sample excludes 0", "zero or non-finite point"));
    }
    let crit = spec.two_star_low;
    let lower = 4.0 * spec.m as f64 / spec.n as f64;
    let mut checks = vec![
        InequalityCheck::run("2_* H ≤ h s", sample, |s| crit * nl.big_h(s), |s| nl.small_h(s) * s),
        InequalityCheck::run("0 ≤ (4m/N) G", sample, |_| 0.0, |s| lower * nl.big_g(s)),
        InequalityCheck::run("(4m/N) G ≤ H", sample, |s| lower * nl.big_g(s), |s| nl.big_h(s)),
    ];
    if spec.two_star_high.is_finite() {
        let high = spec.two_star_high;
        checks.push(InequalityCheck::run(
            "H ≤ (2^* - 2) G",
            sample,
            |s| nl.big_h(s),
            |s| (high - 2.0) * nl.big_g(s),
        ));
    }
    let pass = checks.iter().all(|c| c.holds);
    Ok(AssumptionReport { checks, pass })
}
