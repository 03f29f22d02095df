use std::f64::consts::PI;
use std::sync::Arc;

use proptest::prelude::*;

use super::*;

fn gauss3(n_r: usize, r_max: f64) -> Field {
    let g = Arc::new(Grid::radial(3, n_r, r_max).unwrap());
    Field::from_fn(&g, |r, _| (-r * r / 2.0).exp())
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

#[test]
fn gaussian_closed_forms_radial() {
    let f = gauss3(1024, 16.0);
    let p32 = PI.powf(1.5);
    assert!(rel(f.mass(), p32) < 1e-12);
    assert!(rel(seminorm_m_sq(&f, 1).unwrap(), 1.5 * p32) < 1e-10);
    assert!(rel(hardy_sq(&f, 1), 2.0 * p32) < 1e-10);
    let zero = Field::zeros(f.grid());
    assert_eq!(integrate(f.grid(), zero.values()).unwrap(), 0.0);
    assert_eq!(seminorm_m_sq(&zero, 1).unwrap(), 0.0);
}

#[test]
fn cylindrical_second_moment() {
    let p32 = PI.powf(1.5);
    for a in [0.0, 1.0] {
        let g = Arc::new(
            Grid::cylindrical(3, 2, 256, 10.0, 256, 10.0)
                .unwrap()
                .with_axis_exponent(a)
                .unwrap(),
        );
        let f = Field::from_fn(&g, |r, z| r * (-(r * r + z * z) / 2.0).exp());
        assert!(rel(f.mass(), p32) < 1e-7, "a = {a}: {}", f.mass());
        // odd integrand at the axis: midpoint rule is second order here
        assert!(rel(hardy_sq(&f, 1), p32) < 3e-4);
    }
}

#[test]
fn bilaplacian_gaussian_four_dimensions() {
    let g = Arc::new(Grid::radial(4, 512, 12.0).unwrap());
    let f = Field::from_fn(&g, |r, _| (-r * r / 2.0).exp());
    let s = seminorm_m_sq(&f, 2).unwrap();
    assert!(rel(s, 6.0 * PI * PI) < 1e-6, "{s}");
}

#[test]
fn report_examples() {
    let f = gauss3(1024, 16.0);
    let spec = ProblemSpec::new(3, 3, 1, 0.0, 1.0).unwrap();
    let zero = Nonlinearity::zero(&spec);
    let rep = functional_report(&f, &spec, &zero).unwrap();
    assert!(rel(rep.j, 0.75 * PI.powf(1.5)) < 1e-10);
    assert_eq!(rep.m, rep.seminorm_m_sq);
    assert_eq!(rep.j, rep.energy_from_parts());
    let kerr = Nonlinearity::pure_power(4.0, &spec).unwrap();
    let rep = functional_report(&f, &spec, &kerr).unwrap();
    assert!(rel(rep.g_int, 0.25 * (PI / 2.0).powf(1.5)) < 1e-12);
    assert_eq!(rep.j.to_bits(), (rep.bracket_mu_sq / 2.0 - rep.g_int).to_bits());
}

#[test]
fn hardy_inequality_on_random_profiles() {
    use rand::{Rng, SeedableRng};
    let g = Arc::new(Grid::radial(3, 512, 16.0).unwrap());
    let c_h = crate::model::hardy_and_tau(3, 1, 0.0).unwrap().hardy_constant;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
    for _ in 0..20 {
        let c: f64 = rng.gen_range(0.0..3.0);
        let w: f64 = rng.gen_range(0.3..2.0);
        let b: f64 = rng.gen_range(-1.0..1.0);
        let f = Field::from_fn(&g, |r, _| (1.0 + b * r) * (-(r - c).powi(2) / (w * w)).exp());
        assert!(hardy_sq(&f, 1) <= c_h * seminorm_m_sq(&f, 1).unwrap());
    }
}

#[test]
fn discrete_eigenfunction_has_zero_residual() {
    use nalgebra::{DMatrix, SymmetricEigen};
    let g = Arc::new(Grid::radial(3, 48, 6.0).unwrap());
    let spec = ProblemSpec::new(3, 3, 1, 0.0, 1.0).unwrap();
    let op = Operator::new(&g, 1, 0.0).unwrap();
    let n = g.n_r();
    let sw: Vec<f64> = g.weights().iter().map(|w| w.sqrt()).collect();
    let mut dense = DMatrix::zeros(n, n);
    let mut e = vec![0.0; n];
    let mut col = vec![0.0; n];
    for j in 0..n {
        e.iter_mut().for_each(|x| *x = 0.0);
        e[j] = 1.0 / sw[j];
        op.apply(&e, &mut col);
        for i in 0..n {
            dense[(i, j)] = col[i] * sw[i];
        }
    }
    let dense = (&dense + dense.transpose()) * 0.5;
    let eig = SymmetricEigen::new(dense);
    let (k, &mu0) = eig
        .eigenvalues
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .unwrap();
    let u: Vec<f64> = (0..n).map(|i| eig.eigenvectors[(i, k)] / sw[i]).collect();
    let f = Field::new(g.clone(), u).unwrap();
    let grad = sobolev_gradient(&f, &spec, &Nonlinearity::zero(&spec), -mu0).unwrap();
    let norm = f.mass().sqrt();
    assert!(grad.direction.mass().sqrt() < 1e-10 * norm);
    let zero = Field::zeros(&g);
    let grad = sobolev_gradient(&zero, &spec, &Nonlinearity::pure_power(4.0, &spec).unwrap(), 1.0).unwrap();
    assert_eq!(grad.direction.max_abs(), 0.0);
}

#[test]
fn tau_bound_on_bracket() {
    let spec = ProblemSpec::new(3, 3, 1, -0.2, 1.0).unwrap();
    let g = Arc::new(Grid::for_problem(&spec, 512, 12.0, 1, 0.0).unwrap());
    let f = Field::from_fn(&g, |r, _| (-r * r).exp() * (1.0 + r));
    let rep = functional_report(&f, &spec, &Nonlinearity::zero(&spec)).unwrap();
    assert!(rep.bracket_mu_sq >= spec.tau * rep.seminorm_m_sq - 1e-10 * rep.seminorm_m_sq);
}

#[test]
fn refinement_order_cylindrical_quadrature() {
    // r^0 axis exponent on K = 2 leaves an algebraic axis error
    let p32 = PI.powf(1.5);
    let err = |n: usize| {
        let g = Arc::new(Grid::cylindrical(3, 2, n, 8.0, n, 8.0).unwrap());
        let f = Field::from_fn(&g, |r, z| r * (-(r * r + z * z) / 2.0).exp());
        (seminorm_m_sq(&f, 1).unwrap() - 1.5 * p32).abs()
    };
    let (e1, e2) = (err(32), err(64));
    assert!((e1 / e2).log2() >= 1.8, "{e1} {e2}");
}

fn smooth_profile(g: &Arc<Grid>, c: [f64; 4]) -> Field {
    Field::from_fn(g, move |r, z| {
        (c[0] + c[1] * r * r) * (-(r - c[2]).powi(2) - (z - c[3]).powi(2)).exp()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn operator_symmetry(c in prop::array::uniform4(-1.0f64..1.0), d in prop::array::uniform4(-1.0f64..1.0),
                         m in 1usize..3, mu in 0.0f64..2.0) {
        let g = Arc::new(if m == 1 {
            Grid::cylindrical(3, 2, 32, 5.0, 24, 4.0).unwrap().with_axis_exponent(axis_exponent(2, 1, mu)).unwrap()
        } else {
            Grid::cylindrical(5, 4, 32, 5.0, 24, 4.0).unwrap()
        });
        let op = Operator::new(&g, m, mu).unwrap();
        let a = smooth_profile(&g, c);
        let b = smooth_profile(&g, d);
        let mut la = vec![0.0; g.len()];
        let mut lb = vec![0.0; g.len()];
        op.apply(a.values(), &mut la);
        op.apply(b.values(), &mut lb);
        let la = Field::new(g.clone(), la).unwrap();
        let lb = Field::new(g.clone(), lb).unwrap();
        let x = la.dot(&b);
        let y = a.dot(&lb);
        let scale = la.mass().sqrt() * b.mass().sqrt() + a.mass().sqrt() * lb.mass().sqrt();
        prop_assert!((x - y).abs() <= 1e-12 * scale);
    }

    #[test]
    fn nonnegative_forms(c in prop::array::uniform4(-1.0f64..1.0), m in 1usize..3) {
        let g = Arc::new(Grid::radial(5, 64, 6.0).unwrap());
        let f = smooth_profile(&g, [c[0], c[1], c[2].abs() * 2.0, 0.0]);
        prop_assert!(seminorm_m_sq(&f, m).unwrap() >= 0.0);
        prop_assert!(hardy_sq(&f, m) >= 0.0);
    }

    #[test]
    fn report_consistency(c in prop::array::uniform4(-1.0f64..1.0)) {
        let spec = ProblemSpec::new(3, 2, 1, 1.0, 1.0).unwrap();
        let g = Arc::new(Grid::for_problem(&spec, 32, 6.0, 32, 6.0).unwrap());
        let nl = Nonlinearity::power_sum(0.5, 1.0, 4.0, &spec).unwrap();
        let rep = functional_report(&smooth_profile(&g, c), &spec, &nl).unwrap();
        prop_assert_eq!(rep.j.to_bits(), rep.energy_from_parts().to_bits());
        prop_assert_eq!(rep.m.to_bits(), rep.constraint_from_parts(&spec).to_bits());
    }
}
