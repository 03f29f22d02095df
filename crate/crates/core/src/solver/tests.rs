use super::*;

fn case_a(n_r: usize, r_max: f64) -> (ProblemSpec, Nonlinearity, Arc<Grid>) {
    let spec = ProblemSpec::new(3, 3, 1, 0.0, 1.0).unwrap();
    let nl = Nonlinearity::pure_power(4.0, &spec).unwrap();
    let grid = Arc::new(Grid::for_problem(&spec, n_r, r_max, 1, 0.0).unwrap());
    (spec, nl, grid)
}

#[test]
fn kerr_ground_state_matches_oracle() {
    let (spec, nl, grid) = case_a(512, 1.5);
    let init = default_init(&grid, &spec, &nl, InitChoice::default()).unwrap();
    let res = minimize_on_ball(&init, &spec, &nl, &SolverOptions::default()).unwrap();
    let w = shooting_oracle(&spec, &nl, 1e-12).unwrap();
    let (lambda, u) = w.rescaled(&grid, spec.rho);
    assert!(res.converged && res.lambda > 0.0);
    assert!((res.lambda / lambda - 1.0).abs() < 1e-3, "{} vs {lambda}", res.lambda);
    let diff = Field::new(
        grid.clone(),
        res.profile
            .values()
            .iter()
            .zip(u.values())
            .map(|(a, b)| a - b)
            .collect(),
    )
    .unwrap();
    assert!((diff.mass() / u.mass()).sqrt() < 1e-3);
    assert!(res.residual_nehari.abs() < 1e-6 && res.residual_pohozaev.abs() < 1e-6);
    for t in res.trace.windows(2) {
        assert!(t[1].j <= t[0].j + 1e-12 * t[0].j.abs());
    }
}

#[test]
fn multiplier_needs_mass() {
    let (spec, nl, grid) = case_a(64, 1.5);
    assert!(matches!(
        lagrange_multiplier(&Field::zeros(&grid), &spec, &nl),
        Err(Error::ZeroMass)
    ));
}

#[test]
fn refuses_above_threshold() {
    let spec = ProblemSpec::new(2, 2, 1, 0.0, 20.0).unwrap();
    let nl = Nonlinearity::power_sum(1.0, 1.0, 6.0, &spec).unwrap();
    let grid = Arc::new(Grid::for_problem(&spec, 128, 8.0, 1, 0.0).unwrap());
    let init = default_init(&grid, &spec, &nl, InitChoice::default()).unwrap();
    let r = minimize_on_ball(&init, &spec, &nl, &SolverOptions::default());
    assert!(matches!(r, Err(Error::Threshold { .. })));
}

#[test]
fn unresolved_start_is_a_range_error() {
    // λ ≈ 357 at unit mass: the ground state is far thinner than a cell of this grid
    let (spec, nl, grid) = case_a(64, 40.0);
    let err = default_init(&grid, &spec, &nl, InitChoice::default()).unwrap_err();
    assert!(matches!(err, Error::Range(_)), "{err}");
}
