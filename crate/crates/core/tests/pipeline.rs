use dampwave::{
    bump_profile, check_thm23, concavity_check, default_s_samples, discriminant_check,
    fd_energy_check, poincare_alpha, simulate, DensityProfile, EigenOptions, Model, Nonlinearity,
    Outcome, RadialField, RadialGrid, Scalar, SolverConfig, Tolerances,
};
use proptest::prelude::*;

fn model<T: Scalar>(radius: f64, cells: usize, mass: f64) -> Model<T> {
    let grid = RadialGrid::new(3, T::from(radius).unwrap(), cells).unwrap();
    let density = DensityProfile::inverse_power(T::one(), T::from(2.0).unwrap()).unwrap();
    let nl = Nonlinearity::new(T::from(2.0).unwrap(), T::one()).unwrap();
    Model::new(grid, density, nl, T::from(mass).unwrap()).unwrap()
}

fn solver<T: Scalar>(t_end: f64, sample_every: f64) -> SolverConfig<T> {
    SolverConfig {
        dt_init: T::from(1e-4).unwrap(),
        t_end: T::from(t_end).unwrap(),
        sample_every: T::from(sample_every).unwrap(),
        ..SolverConfig::default()
    }
}

fn small_run<T: Scalar>() -> (T, T) {
    let m = model::<T>(10.0, 128, 0.0);
    let phi = bump_profile(m.grid(), T::from(4.0).unwrap(), T::from(2.0).unwrap());
    let u0 = phi.scaled(T::from(0.5).unwrap());
    let u1 = RadialField::zeros(m.grid());
    let rec = simulate(&m, &u0, &u1, &solver(1.0, 0.1), None).unwrap();
    assert!(matches!(rec.outcome, Outcome::Survived { .. }));
    (rec.initial_energy(), rec.energy_residual())
}

#[test]
fn single_and_double_precision_agree() {
    let (e64, r64) = small_run::<f64>();
    let (e32, r32) = small_run::<f32>();
    assert!(r64 < 1e-6 * e64, "f64 residual {r64} vs energy {e64}");
    assert!(r32 < 1e-2 * e32, "f32 residual {r32} vs energy {e32}");
    assert!((e32 as f64 - e64).abs() < 1e-5 * e64);

    let opts = EigenOptions::default();
    let a64 = poincare_alpha(
        model::<f64>(10.0, 256, 0.0).grid(),
        &DensityProfile::constant(1.0).unwrap(),
        &opts,
    )
    .unwrap()
    .alpha;
    let opts32 = EigenOptions {
        tol: 1e-6f32,
        ..EigenOptions::default()
    };
    let a32 = poincare_alpha(
        model::<f32>(10.0, 256, 0.0).grid(),
        &DensityProfile::constant(1.0f32).unwrap(),
        &opts32,
    )
    .unwrap()
    .alpha;
    assert!((a32 as f64 - a64).abs() < 1e-4 * a64, "{a32} vs {a64}");
}

#[test]
fn negative_energy_pipeline() {
    let m = model::<f64>(20.0, 256, 0.0);
    let phi = bump_profile(m.grid(), 4.0, 2.0);
    let zero = RadialField::zeros(m.grid());
    let lambda = (1..)
        .map(|k| k as f64 * 0.5)
        .find(|&l| m.energy_of(&phi.scaled(l), &zero).unwrap().total < 0.0)
        .unwrap();
    let u0 = phi.scaled(lambda);
    let alpha = poincare_alpha(m.grid(), m.density(), &EigenOptions::default())
        .unwrap()
        .alpha;
    let report = check_thm23(&m, &u0, &zero, alpha, &Tolerances::default()).unwrap();
    assert!(report.satisfied);
    let gp = report.derived.unwrap();
    let bound = report.bound.unwrap();

    let rec = simulate(&m, &u0, &zero, &solver(bound, 0.01), Some(&gp)).unwrap();
    let Outcome::BlownUp { t_detect, .. } = rec.outcome else {
        panic!("expected blow-up, got {:?}", rec.outcome);
    };
    assert!(t_detect < bound);

    let disc = discriminant_check(&rec, &gp, &default_s_samples(), 1e-8);
    assert!(disc.iter().all(|d| !d.flagged));
    let conc = concavity_check(&rec, &gp, 1e-6).unwrap();
    assert_eq!(conc.violations, 0);
    // Energy stays balanced until the final approach.
    let early = dampwave::TrajectoryRecord {
        samples: rec
            .samples
            .iter()
            .copied()
            .filter(|s| s.t < 0.5 * t_detect)
            .collect(),
        ..rec.clone()
    };
    assert!(early.energy_residual() < 1e-4 * report.e0.abs());
    assert!(fd_energy_check(&early).unwrap().max_deviation < 1e-2);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn green_identity_holds_in_every_dimension(
        n_dim in 3usize..7,
        cells in 8usize..200,
        radius in 0.5f64..50.0,
        seed in prop::collection::vec(-1.0f64..1.0, 200),
    ) {
        let grid = RadialGrid::new(n_dim, radius, cells).unwrap();
        let mut u: Vec<f64> = seed[..grid.len()].to_vec();
        *u.last_mut().unwrap() = 0.0;
        let lap = grid.laplacian(&u).unwrap();
        let lhs: f64 = grid.weights().iter().zip(&u).zip(lap.iter()).map(|((w, a), b)| w * a * b).sum();
        let grad = grid.grad_sq_integral(&u).unwrap();
        prop_assert!((lhs + grad).abs() <= 1e-10 * grad.max(f64::MIN_POSITIVE));
    }

    #[test]
    fn energy_is_even_in_the_datum(lambda in 0.0f64..20.0, kappa in -5.0f64..5.0) {
        let m = model::<f64>(10.0, 64, 1.0);
        let phi = bump_profile(m.grid(), 4.0, 2.0);
        let e = m.energy_of(&phi.scaled(lambda), &phi.scaled(kappa)).unwrap();
        let f = m.energy_of(&phi.scaled(-lambda), &phi.scaled(-kappa)).unwrap();
        prop_assert!((e.total - f.total).abs() <= 1e-12 * e.scale().max(1.0));
    }
}
