use std::path::Path;
use std::sync::Arc;

use polyground::curlcurl::BoxParams;
use polyground::field::Grid;
use polyground::solver::SolverOptions;
use polyground::{Nonlinearity, ProblemSpec};
use serde::{Deserialize, Serialize};

use crate::Failure;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(rename = "N")]
    pub n: usize,
    #[serde(rename = "K")]
    pub k: usize,
    pub m: usize,
    pub mu: f64,
    pub rho: f64,
    pub eta1: f64,
    pub eta2: f64,
    pub p: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub grid: GridConfig,
    #[serde(default)]
    pub solver: SolverOptions,
    #[serde(default, rename = "box")]
    pub lift: LiftConfig,
    #[serde(default)]
    pub evolve: EvolveConfig,
    #[serde(default)]
    pub scan: ScanConfig,
    #[serde(default)]
    pub probe: ProbeConfig,
    #[serde(default)]
    pub coercivity: CoercivityConfig,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridConfig {
    pub n_r: usize,
    #[serde(rename = "R")]
    pub r_max: f64,
    /// Ignored on radial grids.
    pub n_z: usize,
    #[serde(rename = "Z")]
    pub z_max: f64,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            n_r: 512,
            r_max: 12.0,
            n_z: 128,
            z_max: 12.0,
        }
    }
}

/// `half_width = None` picks `12/√λ` from the solved multiplier.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LiftConfig {
    pub n: usize,
    #[serde(rename = "L")]
    pub half_width: Option<f64>,
}

impl Default for LiftConfig {
    fn default() -> Self {
        Self {
            n: BoxParams::DEFAULT_N,
            half_width: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EvolveStart {
    /// The solved ground state.
    Solution,
    /// The default Gaussian of the solver, unsolved.
    Gaussian,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvolveConfig {
    #[serde(rename = "T")]
    pub t_end: f64,
    pub dt: f64,
    pub record_every: usize,
    pub start: EvolveStart,
}

impl Default for EvolveConfig {
    fn default() -> Self {
        Self {
            t_end: 1.0,
            dt: 0.005,
            record_every: 1,
            start: EvolveStart::Solution,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScanConfig {
    pub rho_list: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProbeProfile {
    /// `r^a (1 - r²/b²)⁴` on `r < b`.
    Bump,
    Solution,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProbeConfig {
    pub offsets: Vec<f64>,
    pub profile: ProbeProfile,
    pub bump_radius: f64,
}

impl Default for ProbeConfig {
    fn default() -> Self {
        Self {
            offsets: vec![0.0, 1.0, 2.0, 5.0, 10.0, 20.0, 50.0],
            profile: ProbeProfile::Bump,
            bump_radius: 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CoercivityConfig {
    /// Random fields for the coercivity probe; 0 skips it.
    pub count: usize,
}

impl Default for CoercivityConfig {
    fn default() -> Self {
        Self { count: 100 }
    }
}

/// Validated pieces built from a [`RunConfig`].
pub struct Resolved {
    pub spec: ProblemSpec,
    pub nl: Nonlinearity,
}

impl RunConfig {
    pub fn resolve(&self) -> Result<Resolved, Failure> {
        let spec = ProblemSpec::new(self.n, self.k, self.m, self.mu, self.rho).map_err(Failure::from)?;
        let nl = Nonlinearity::power_sum(self.eta1, self.eta2, self.p, &spec).map_err(Failure::from)?;
        let s = &self.solver;
        if !(s.tol > 0.0) || !(s.constraint_tol > 0.0) {
            return Err(Failure::constraint(
                "tol > 0",
                format!("tol = {}, constraint_tol = {}", s.tol, s.constraint_tol),
            ));
        }
        if s.max_iter == 0 {
            return Err(Failure::constraint("max_iter ≥ 1", "max_iter = 0"));
        }
        let e = &self.evolve;
        if !(e.dt > 0.0) || !(e.t_end >= e.dt) {
            return Err(Failure::constraint(
                "0 < dt ≤ T",
                format!("dt = {}, T = {}", e.dt, e.t_end),
            ));
        }
        if self.scan.rho_list.iter().any(|&r| !(r > 0.0)) {
            return Err(Failure::constraint("rho > 0", "nonpositive entry in rho_list"));
        }
        if !(self.probe.bump_radius > 0.0) {
            return Err(Failure::constraint(
                "bump_radius > 0",
                format!("{}", self.probe.bump_radius),
            ));
        }
        if let Some(l) = self.lift.half_width {
            if !(l > 0.0) {
                return Err(Failure::constraint("L > 0", format!("L = {l}")));
            }
        }
        Ok(Resolved { spec, nl })
    }

    pub fn grid(&self, spec: &ProblemSpec) -> Result<Arc<Grid>, Failure> {
        let g = &self.grid;
        Grid::for_problem(spec, g.n_r, g.r_max, g.n_z, g.z_max)
            .map(Arc::new)
            .map_err(Failure::from)
    }
}

pub fn parse_config(path: &Path) -> Result<RunConfig, Failure> {
    let text = std::fs::read_to_string(path).map_err(|e| Failure::parse(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Failure::parse(format!("{}: {e}", path.display())))
}
