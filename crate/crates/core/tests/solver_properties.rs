use infoacq_core::characteristics::{gamma_field, optimal_theta_path};
use infoacq_core::detcontrol::{value_of_schedule, DetControlProblem};
use infoacq_core::hjsolver::{solve_grid_default, theta_from_grid};
use infoacq_core::{CostModel, ModelParams, StrategyPath};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn bench() -> (ModelParams, CostModel) {
    (ModelParams::default(), CostModel::benchmark())
}

#[test]
fn mu0_invariance_all_solvers() {
    let (p, k) = bench();
    let variants = [0.0, 0.172, 1.0].map(|mu0| ModelParams { mu0, ..p });
    let ch: Vec<StrategyPath> = variants.iter().map(|q| optimal_theta_path(q, &k, 256).unwrap()).collect();
    let up: Vec<StrategyPath> = variants.iter().map(|q| theta_from_grid(&solve_grid_default(q, &k, 0.05).unwrap(), q, &k).unwrap()).collect();
    let dc: Vec<StrategyPath> = variants.iter().map(|q| DetControlProblem::new(q, &k, 256).unwrap().solve().unwrap().path).collect();
    for set in [&ch, &up, &dc] {
        assert!(set[0].bitwise_eq(&set[1]) && set[1].bitwise_eq(&set[2]));
    }
}

#[test]
fn optimal_schedule_beats_perturbations() {
    let (p, k) = bench();
    let opt = DetControlProblem::new(&p, &k, 512).unwrap().solve().unwrap().path;
    let v_opt = value_of_schedule(&p, &k, &opt, 0.0).unwrap();
    for f in [0.0, 0.5, 0.9, 1.1, 1.5, 2.0] {
        let v = value_of_schedule(&p, &k, &opt.scaled(&p, f).unwrap(), 0.0).unwrap();
        assert!(v < v_opt, "factor {f}: {v} vs {v_opt}");
    }
    // Moving mass later in time never helps.
    let late: Vec<f64> = opt.times.iter().map(|&t| opt.theta_sq_at(p.horizon - t)).collect();
    let late = StrategyPath::from_theta_sq(&p, opt.times.clone(), late, infoacq_core::SolverTag::Custom).unwrap();
    assert!(value_of_schedule(&p, &k, &late, 0.0).unwrap() < v_opt);
}

#[test]
fn detcontrol_objective_optimal_and_convex() {
    let (p, k) = bench();
    let prob = DetControlProblem::new(&p, &k, 128).unwrap();
    let sol = prob.solve().unwrap();
    let j = sol.objective;
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..100 {
        let a: Vec<f64> = (0..sol.controls.len()).map(|_| rng.random_range(0.0..0.5)).collect();
        let ja = prob.objective(&a).unwrap();
        assert!(j <= ja + 1e-12);
        let mid: Vec<f64> = a.iter().zip(&sol.controls).map(|(x, y)| 0.5 * (x + y)).collect();
        assert!(prob.objective(&mid).unwrap() <= 0.5 * (ja + j) + 1e-12);
    }
}

#[test]
fn value_identity_on_coarse_field() {
    let (p, k) = bench();
    let field = gamma_field(&p, &k, 512).unwrap();
    let path = optimal_theta_path(&p, &k, 512).unwrap();
    let v = value_of_schedule(&p, &k, &path, 0.3).unwrap();
    let g = infoacq_core::detcontrol::value_from_gamma(&p, field.gamma(0.0, p.u_start()).unwrap(), 0.3).unwrap();
    assert!(((v - g) / g).abs() < 1e-6);
}

#[test]
fn derivative_bound_on_random_points() {
    let (p, k) = bench();
    let field = gamma_field(&p, &k, 256).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let s0 = p.sigma0_sq();
    for _ in 0..200 {
        let t = rng.random_range(0.0..0.999);
        let u = rng.random_range(0.0..60.0);
        let g = -field.gamma_u(t, u).unwrap() / p.gamma;
        let bound = s0 * s0 * (p.horizon - t) / (2.0 * p.sigma_sq() * p.gamma);
        assert!(g > 0.0 && g <= bound * (1.0 + 1e-9), "({t},{u}): {g} vs {bound}");
    }
}
