use std::sync::Arc;

use super::*;
use crate::field::Grid;
use crate::solver::{minimize_on_ball, shooting_oracle, SolverOptions};

fn free3(n_r: usize, r_max: f64) -> (ProblemSpec, Nonlinearity, ComplexField) {
    let spec = ProblemSpec::new(3, 3, 1, 0.0, 1.0).unwrap();
    let grid = Arc::new(Grid::for_problem(&spec, n_r, r_max, 1, 0.0).unwrap());
    let psi = ComplexField::from_real(&Field::from_fn(&grid, |r, _| (-r * r).exp()));
    let nl = Nonlinearity::zero(&spec);
    (spec, nl, psi)
}

fn l2_diff(a: &ComplexField, b: &ComplexField) -> f64 {
    let w = a.grid().weights();
    let num: f64 = a
        .values()
        .iter()
        .zip(b.values())
        .zip(w)
        .map(|((x, y), w)| w * (x - y).norm_sqr())
        .sum();
    (num / a.mass()).sqrt()
}

#[test]
fn free_flow_conserves_mass() {
    let (spec, nl, psi) = free3(256, 12.0);
    let st = propagate_with(
        &psi,
        &spec,
        &nl,
        1.0,
        1e-3,
        EvolveOptions {
            record_every: 100,
            ..Default::default()
        },
    )
    .unwrap();
    assert_eq!(st.steps, 1000);
    let m0 = st.history[0].mass;
    for h in &st.history {
        assert!((h.mass / m0 - 1.0).abs() < 1e-10, "{}", h.mass / m0);
        assert!((h.energy / st.history[0].energy - 1.0).abs() < 1e-10);
    }
}

#[test]
fn conjugated_backward_flow_returns() {
    let spec = ProblemSpec::new(3, 3, 1, 0.0, 1.0).unwrap();
    let nl = Nonlinearity::power_sum(1.0, 0.0, 4.0, &spec).unwrap();
    let grid = Arc::new(Grid::for_problem(&spec, 128, 10.0, 1, 0.0).unwrap());
    let psi = ComplexField::from_real(&Field::from_fn(&grid, |r, _| 1.5 * (-r * r / 2.0).exp()));
    let fwd = propagate(&psi, &spec, &nl, 0.5, 0.01).unwrap();
    let mut back = fwd.psi.clone();
    back.values_mut().iter_mut().for_each(|z| *z = z.conj());
    let mut ret = propagate(&back, &spec, &nl, 0.5, 0.01).unwrap().psi;
    ret.values_mut().iter_mut().for_each(|z| *z = z.conj());
    assert!(l2_diff(&psi, &ret) < 1e-10, "{}", l2_diff(&psi, &ret));
}

#[test]
fn strang_is_second_order() {
    let spec = ProblemSpec::new(3, 3, 1, 0.0, 1.0).unwrap();
    let nl = Nonlinearity::power_sum(1.0, 0.0, 4.0, &spec).unwrap();
    let grid = Arc::new(Grid::for_problem(&spec, 128, 10.0, 1, 0.0).unwrap());
    let psi = ComplexField::from_real(&Field::from_fn(&grid, |r, _| 1.5 * (-r * r / 2.0).exp()));
    let run = |dt| propagate(&psi, &spec, &nl, 0.4, dt).unwrap().psi;
    let (a, b, c) = (run(0.02), run(0.01), run(0.005));
    let order = (l2_diff(&a, &b) / l2_diff(&b, &c)).log2();
    assert!(order > 1.8, "{order}");
}

/// Kerr ground state with λ = 1/4.
fn soliton() -> (ProblemSpec, Nonlinearity, Field) {
    let spec0 = ProblemSpec::new(3, 3, 1, 0.0, 1.0).unwrap();
    let nl = Nonlinearity::pure_power(4.0, &spec0).unwrap();
    let w = shooting_oracle(&spec0, &nl, 1e-12).unwrap();
    let rho = 2.0 * w.lambda_for_mass(1.0).sqrt();
    let spec = ProblemSpec::new(3, 3, 1, 0.0, rho).unwrap();
    let grid = Arc::new(Grid::for_problem(&spec, 512, 40.0, 1, 0.0).unwrap());
    let (_, u0) = w.rescaled(&grid, rho);
    let res = minimize_on_ball(
        &u0,
        &spec,
        &nl,
        &SolverOptions {
            tol: 1e-7,
            ..Default::default()
        },
    )
    .unwrap();
    assert!((res.lambda - 0.25).abs() < 1e-4, "{}", res.lambda);
    (spec, nl, res.profile)
}

#[test]
fn ground_state_only_rotates() {
    let (spec, nl, u) = soliton();
    let psi = ComplexField::from_real(&u);
    let dev = |dt| soliton_deviation(&propagate(&psi, &spec, &nl, 1.0, dt).unwrap(), &u).unwrap();
    let (a, b) = (dev(0.01), dev(0.005));
    assert!(b < 1e-3, "{b}");
    assert!((a / b).log2() > 1.8, "{a} {b}");
    let st = propagate(&psi, &spec, &nl, 1.0, 0.005).unwrap();
    let e0 = st.history[0].energy;
    for h in &st.history {
        assert!((h.energy / e0 - 1.0).abs() < 1e-4);
    }
}

#[test]
fn blowup_is_reported() {
    let spec = ProblemSpec::new(2, 2, 1, 0.0, 1.0).unwrap();
    let nl = Nonlinearity::pure_power(4.0, &spec).unwrap();
    let grid = Arc::new(Grid::for_problem(&spec, 256, 4.0, 1, 0.0).unwrap());
    let psi = ComplexField::from_real(&Field::from_fn(&grid, |r, _| 6.0 * (-r * r).exp()));
    let opts = EvolveOptions {
        blowup_factor: 50.0,
        ..Default::default()
    };
    let r = propagate_with(&psi, &spec, &nl, 2.0, 1e-4, opts);
    assert!(matches!(r, Err(Error::BlowUp { .. })), "{r:?}");
}

#[test]
fn history_csv_header() {
    let mut buf = Vec::new();
    write_history_csv(
        &[HistoryRow {
            t: 0.0,
            mass: 1.0,
            energy: -2.0,
        }],
        &mut buf,
    )
    .unwrap();
    let s = String::from_utf8(buf).unwrap();
    assert!(s.starts_with("t,mass,energy\n0.0"));
}

proptest::proptest! {
    #![proptest_config(proptest::prelude::ProptestConfig::with_cases(12))]

    #[test]
    fn kerr_flow_is_unitary_and_reversible(amp in 0.1f64..1.5, width in 0.5f64..2.0, dt in 0.005f64..0.05) {
        let spec = ProblemSpec::new(3, 3, 1, 0.0, 1.0).unwrap();
        let nl = Nonlinearity::pure_power(4.0, &spec).unwrap();
        let grid = Arc::new(Grid::for_problem(&spec, 96, 10.0, 1, 0.0).unwrap());
        let psi = ComplexField::from_real(&Field::from_fn(&grid, |r, _| amp * (-(r / width).powi(2)).exp()));
        let fwd = propagate(&psi, &spec, &nl, 0.2, dt).unwrap();
        let m0 = psi.mass();
        for h in &fwd.history {
            proptest::prop_assert!((h.mass / m0 - 1.0).abs() < 1e-11);
        }
        for w in fwd.history.windows(2) {
            proptest::prop_assert!(w[1].t > w[0].t);
        }
        let mut back = fwd.psi.clone();
        back.values_mut().iter_mut().for_each(|z| *z = z.conj());
        let mut ret = propagate(&back, &spec, &nl, 0.2, dt).unwrap().psi;
        ret.values_mut().iter_mut().for_each(|z| *z = z.conj());
        proptest::prop_assert!(l2_diff(&psi, &ret) < 1e-6);
    }
}
