use infoacq_core::detcontrol::{value_of_schedule, DetControlProblem};
use infoacq_core::filtersim::*;
use infoacq_core::{CostModel, ModelParams, StrategyPath};

fn cfg(n_paths: usize) -> SimConfig {
    SimConfig { n_paths, n_steps: 128, seed: 99, antithetic: false }
}

#[test]
fn z_recursion_matches_closed_sum() {
    let p = ModelParams::default();
    let k = CostModel::benchmark();
    let path = DetControlProblem::new(&p, &k, 256).unwrap().solve().unwrap().path;
    let c = cfg(1);
    let sim = Simulator::new(&p, &k, &path, Trading::Feedback, c).unwrap();
    struct Zs(Vec<f64>);
    impl Recorder for Zs {
        fn record(&mut self, _: usize, s: &PathState) {
            self.0.push(s.z);
        }
    }
    let mut zs = Zs(Vec::new());
    sim.run_path(0, &mut zs);
    let dt = p.horizon / c.n_steps as f64;
    let mut acc = 0.0;
    for i in 0..c.n_steps {
        let th = path.theta_sq_at((i as f64 + 0.5) * dt).sqrt();
        acc += th * th * dt;
        let direct = (i + 1) as f64 * dt / p.sigma_sq() + acc;
        assert!((zs.0[i + 1] - direct).abs() < 1e-12);
    }
}

#[test]
fn small_prior_variance_freezes_learning() {
    let p = ModelParams { sigma0: 1e-9, ..ModelParams::default() };
    let k = CostModel::benchmark();
    let path = StrategyPath::constant(&p, 0.0, 128).unwrap();
    let sim = Simulator::new(&p, &k, &path, Trading::Feedback, cfg(4)).unwrap();
    struct Means(f64);
    impl Recorder for Means {
        fn record(&mut self, _: usize, s: &PathState) {
            self.0 = self.0.max((s.post_mean - 0.172).abs());
        }
    }
    let mut m = Means(0.0);
    for i in 0..4 {
        sim.run_path(i, &mut m);
    }
    assert!(m.0 < 1e-12);
}

#[test]
fn mc_mean_agrees_with_schedule_value() {
    let p = ModelParams::default();
    let k = CostModel::benchmark();
    let path = StrategyPath::constant(&p, 0.1, 256).unwrap();
    let b = simulate(&p, &k, &path, Trading::Feedback, SimConfig { antithetic: true, ..cfg(40_000) }).unwrap();
    let v = value_of_schedule(&p, &k, &path, 0.0).unwrap();
    assert!((b.mean_utility - v).abs() < 4.0 * b.std_error, "{} vs {v} (se {})", b.mean_utility, b.std_error);
}

#[test]
fn feedback_beats_myopic_merton() {
    let p = ModelParams::default();
    let k = CostModel::benchmark();
    let path = StrategyPath::constant(&p, 0.0, 64).unwrap();
    let c = cfg(40_000);
    let fb = simulate(&p, &k, &path, Trading::Feedback, c).unwrap();
    let my = simulate(&p, &k, &path, Trading::MertonMyopic, c).unwrap();
    let (d, se) = paired_difference(&fb, &my);
    assert!(d > 2.0 * se, "{d} ± {se}");
}

#[test]
fn filter_calibrated_on_small_batch() {
    let p = ModelParams::default();
    let k = CostModel::benchmark();
    let path = StrategyPath::constant(&p, 0.2, 64).unwrap();
    for s in filter_consistency(&p, &k, &path, cfg(20_000)).unwrap() {
        assert!(s.passes(4.0), "{s:?}");
    }
}
