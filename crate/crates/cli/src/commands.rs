use std::path::Path;

use polyground::curlcurl::{lift, lift_report, write_vector_csv, BoxParams};
use polyground::diagnostics::{coercivity_probe, gn_constant_seeded, identity_report, translation_probe, GnConstants};
use polyground::dynamics::{propagate_with, soliton_deviation, write_history_csv, EvolveOptions};
use polyground::field::{io::write_complex_csv, io::write_profile_csv, ComplexField, Field};
use polyground::model::{assumption_spotcheck, eta_limit, mass_threshold_ok};
use polyground::solver::{default_init, mass_scan, minimize_on_ball, SolveResult};
use polyground::Error;
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::{EvolveStart, ProbeProfile, Resolved, RunConfig};
use crate::report::{write_data, Report};
use crate::{Command, Failure, EXIT_NOT_CONVERGED};

fn value(v: &impl Serialize) -> Value {
    serde_json::to_value(v).unwrap_or(Value::Null)
}

struct Ctx<'a> {
    cfg: &'a RunConfig,
    res: &'a Resolved,
    out: &'a Path,
}

impl Ctx<'_> {
    fn artifact(
        &self,
        report: &mut Report,
        name: &str,
        fill: impl FnOnce(&mut std::io::BufWriter<std::fs::File>) -> std::io::Result<()>,
    ) -> Result<(), Failure> {
        write_data(self.out, name, fill).map_err(Failure::io)?;
        report.artifacts.push(name.to_string());
        Ok(())
    }

    fn profile(&self, report: &mut Report, field: &Field) -> Result<(), Failure> {
        self.artifact(report, "profile.csv", |w| write_profile_csv(field, w))
    }

    /// Solves from the default start; the best iterate of a non-converged
    /// run is still written out.
    fn solve(&self, report: &mut Report, result: &mut serde_json::Map<String, Value>) -> Result<SolveResult, Failure> {
        let grid = self.cfg.grid(&self.res.spec)?;
        let init = default_init(&grid, &self.res.spec, &self.res.nl, self.cfg.solver.init)?;
        match minimize_on_ball(&init, &self.res.spec, &self.res.nl, &self.cfg.solver) {
            Ok(s) => {
                result.insert("solve".into(), value(&s));
                self.profile(report, &s.profile)?;
                Ok(s)
            }
            Err(Error::NotConverged {
                iterations,
                residual,
                best,
            }) => {
                result.insert("solve".into(), value(best.as_ref()));
                self.profile(report, &best.profile)?;
                Err(Failure::from(Error::NotConverged {
                    iterations,
                    residual,
                    best,
                }))
            }
            Err(e) => Err(e.into()),
        }
    }
}

pub fn run_command(
    cmd: Command,
    cfg: &RunConfig,
    res: &Resolved,
    out: &Path,
    report: &mut Report,
) -> Result<(), Failure> {
    let ctx = Ctx { cfg, res, out };
    let mut result = serde_json::Map::new();
    let outcome = match cmd {
        Command::Solve => ctx.solve(report, &mut result).map(|_| ()),
        Command::Identities => identities(&ctx, report, &mut result),
        Command::Threshold => threshold(&ctx, &mut result),
        Command::Gn => gn(&ctx, &mut result),
        Command::Lift => lift_cmd(&ctx, report, &mut result),
        Command::Evolve => evolve(&ctx, report, &mut result),
        Command::Scan => scan(&ctx, report, &mut result),
        Command::Probe => probe(&ctx, report, &mut result),
    };
    report.result = Value::Object(result);
    outcome
}

/// `±10^k`, `k ∈ [-6, 6]` in steps of 0.1.
fn log_sample() -> Vec<f64> {
    (-60..=60)
        .flat_map(|k| {
            let s = 10f64.powf(k as f64 / 10.0);
            [s, -s]
        })
        .collect()
}

fn identities(ctx: &Ctx, report: &mut Report, result: &mut serde_json::Map<String, Value>) -> Result<(), Failure> {
    let assumptions = assumption_spotcheck(&ctx.res.nl, &ctx.res.spec, &log_sample())?;
    result.insert("assumptions".into(), value(&assumptions));
    let s = ctx.solve(report, result)?;
    let rep = identity_report(&s.profile, s.lambda, &ctx.res.spec, &ctx.res.nl)?;
    result.insert("identities".into(), value(&rep));
    Ok(())
}

fn threshold(ctx: &Ctx, result: &mut serde_json::Map<String, Value>) -> Result<(), Failure> {
    let spec = &ctx.res.spec;
    let eta = eta_limit(&ctx.res.nl, spec);
    result.insert("eta".into(), json!(eta));
    let c = if eta == 0.0 {
        None
    } else if let Some(c) = ctx.cfg.solver.gn_constant {
        Some(c)
    } else {
        let gn = gn_constant_seeded(spec, spec.two_star_low, ctx.cfg.seed)?;
        result.insert("gn".into(), value(&gn));
        Some(gn.c_best)
    };
    result.insert("gn_constant".into(), json!(c));
    let t = mass_threshold_ok(spec, eta, c.unwrap_or(0.0));
    result.insert("threshold".into(), value(&t));
    Ok(())
}

fn gn(ctx: &Ctx, result: &mut serde_json::Map<String, Value>) -> Result<(), Failure> {
    let spec = &ctx.res.spec;
    let nl = &ctx.res.nl;
    let star = gn_constant_seeded(spec, spec.two_star_low, ctx.cfg.seed)?;
    result.insert("gn_critical".into(), value(&star));
    let at_p = if (nl.p - spec.two_star_low).abs() > 1e-14 && nl.p < spec.two_star_high {
        let r = gn_constant_seeded(spec, nl.p, ctx.cfg.seed)?;
        result.insert("gn_p".into(), value(&r));
        Some(r.c_best)
    } else {
        Some(star.c_best)
    };
    if ctx.cfg.coercivity.count > 0 {
        let grid = ctx.cfg.grid(spec)?;
        let constants = GnConstants {
            c_star: Some(star.c_best),
            c_p: at_p,
        };
        let rep = coercivity_probe(&grid, spec, nl, ctx.cfg.coercivity.count, ctx.cfg.seed, constants)?;
        result.insert("coercivity".into(), value(&rep));
    }
    Ok(())
}

fn lift_cmd(ctx: &Ctx, report: &mut Report, result: &mut serde_json::Map<String, Value>) -> Result<(), Failure> {
    let s = ctx.solve(report, result)?;
    let l = ctx.cfg.lift;
    let bx = match l.half_width {
        Some(half_width) => BoxParams { n: l.n, half_width },
        None => BoxParams::natural(s.lambda).with_n(l.n),
    };
    let rep = lift_report(&s.profile, s.lambda, &ctx.res.spec, &ctx.res.nl, bx)?;
    result.insert("lift".into(), value(&rep));
    let vf = lift(&s.profile, bx)?;
    ctx.artifact(report, "vector.csv", |w| write_vector_csv(&vf, w))
}

fn evolve(ctx: &Ctx, report: &mut Report, result: &mut serde_json::Map<String, Value>) -> Result<(), Failure> {
    let e = ctx.cfg.evolve;
    let u = match e.start {
        EvolveStart::Solution => Some(ctx.solve(report, result)?.profile),
        EvolveStart::Gaussian => None,
    };
    let psi0 = match &u {
        Some(u) => ComplexField::from_real(u),
        None => {
            let grid = ctx.cfg.grid(&ctx.res.spec)?;
            let f = default_init(&grid, &ctx.res.spec, &ctx.res.nl, ctx.cfg.solver.init)?;
            ctx.profile(report, &f)?;
            ComplexField::from_real(&f)
        }
    };
    let opts = EvolveOptions {
        record_every: e.record_every,
        ..Default::default()
    };
    let st = propagate_with(&psi0, &ctx.res.spec, &ctx.res.nl, e.t_end, e.dt, opts)?;
    let first = st.history[0];
    let drift = |f: fn(&polyground::dynamics::HistoryRow) -> f64| {
        st.history
            .iter()
            .map(|h| ((f(h) - f(&first)) / f(&first)).abs())
            .fold(0.0, f64::max)
    };
    let deviation = match &u {
        Some(u) => Some(soliton_deviation(&st, u)?),
        None => None,
    };
    result.insert(
        "evolve".into(),
        json!({
            "T": st.t,
            "dt": st.dt,
            "steps": st.steps,
            "mass_drift_rel": drift(|h| h.mass),
            "energy_drift_rel": drift(|h| h.energy),
            "soliton_deviation": deviation,
        }),
    );
    ctx.artifact(report, "history.csv", |w| write_history_csv(&st.history, w))?;
    ctx.artifact(report, "state.csv", |w| write_complex_csv(&st.psi, w))
}

fn scan(ctx: &Ctx, report: &mut Report, result: &mut serde_json::Map<String, Value>) -> Result<(), Failure> {
    let list = &ctx.cfg.scan.rho_list;
    if list.is_empty() {
        return Err(Failure::constraint("rho_list nonempty", "empty scan"));
    }
    let grid = ctx.cfg.grid(&ctx.res.spec)?;
    let rows: Vec<_> = mass_scan(&ctx.res.spec, &ctx.res.nl, &grid, list, &ctx.cfg.solver)
        .into_iter()
        .map(|(row, _)| row)
        .collect();
    result.insert("rows".into(), value(&rows));
    ctx.artifact(report, "scan.csv", |w| {
        use std::io::Write;
        writeln!(w, "rho,lambda,J,residual_pde,iterations,converged")?;
        let opt = |x: Option<f64>| x.map_or(String::new(), |v| format!("{v:.16e}"));
        for r in &rows {
            writeln!(
                w,
                "{:.16e},{},{},{},{},{}",
                r.rho,
                opt(r.lambda),
                opt(r.j),
                opt(r.residual_pde),
                r.iterations.map_or(String::new(), |n| n.to_string()),
                r.converged
            )?;
        }
        Ok(())
    })?;
    let failed = rows.iter().filter(|r| !r.converged).count();
    if failed > 0 {
        return Err(Failure {
            code: EXIT_NOT_CONVERGED,
            message: format!("{failed} of {} scan rows failed", rows.len()),
        });
    }
    Ok(())
}

fn probe(ctx: &Ctx, report: &mut Report, result: &mut serde_json::Map<String, Value>) -> Result<(), Failure> {
    let p = &ctx.cfg.probe;
    let field = match p.profile {
        ProbeProfile::Bump => {
            let grid = ctx.cfg.grid(&ctx.res.spec)?;
            let a = grid.axis_exponent();
            let b = p.bump_radius;
            let f = Field::from_fn(&grid, |r, z| {
                let s = (r * r + z * z) / (b * b);
                if s < 1.0 {
                    r.powf(a) * (1.0 - s).powi(4)
                } else {
                    0.0
                }
            });
            ctx.profile(report, &f)?;
            f
        }
        ProbeProfile::Solution => ctx.solve(report, result)?.profile,
    };
    let rep = translation_probe(&field, &ctx.res.spec, &ctx.res.nl, &p.offsets)?;
    result.insert("probe".into(), value(&rep));
    Ok(())
}
