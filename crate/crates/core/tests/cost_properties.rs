use infoacq_core::{CostModel, ModelParams};
use proptest::prelude::*;

fn smooth_cost() -> impl Strategy<Value = CostModel> {
    prop_oneof![
        (1e-4..1e-1f64).prop_map(|c| CostModel::power(c, 2.0).unwrap()),
        (1e-4..1e-1f64, 2.0..5.0f64).prop_map(|(c, p)| CostModel::power(c, p).unwrap()),
        (1e-4..1e-1f64, 1e-5..1e-1f64).prop_map(|(c, b)| CostModel::regularized(c, 3.0, b).unwrap()),
        (1e-4..1e-1f64, 2.0..5.0f64, 1e-5..1e-1f64).prop_map(|(c, p, b)| CostModel::regularized(c, p, b).unwrap()),
    ]
}

proptest! {
    #[test]
    fn fenchel_young(k in smooth_cost(), x in 0.0..10.0f64, y in 0.0..10.0f64) {
        let kx = k.eval_smooth(x).unwrap();
        let ky = k.conjugate(y).unwrap();
        prop_assert!(x * y <= kx + ky + 1e-12 * (1.0 + kx + ky));
    }

    #[test]
    fn conjugate_equality_at_the_maximiser(k in smooth_cost(), y in 1e-6..10.0f64) {
        let x = k.marginal_inverse(y).unwrap();
        let lhs = x * y;
        let rhs = k.eval_smooth(x).unwrap() + k.conjugate(y).unwrap();
        prop_assert!((lhs - rhs).abs() <= 1e-9 * (1.0 + lhs.abs()));
    }

    #[test]
    fn conjugate_monotone_and_convex(k in smooth_cost(), top in 0.01..10.0f64) {
        let ys: Vec<f64> = (0..100).map(|i| top * i as f64 / 99.0).collect();
        let v: Vec<f64> = ys.iter().map(|&y| k.conjugate(y).unwrap()).collect();
        for w in v.windows(2) {
            prop_assert!(w[0] <= w[1]);
        }
        for w in v.windows(3) {
            prop_assert!(w[0] - 2.0 * w[1] + w[2] >= -1e-12 * (1.0 + w[1].abs()));
        }
    }

    #[test]
    fn marginal_inverse_is_two_sided(k in smooth_cost(), x in 1e-6..20.0f64, y in 1e-6..20.0f64) {
        let back = k.marginal_inverse(k.marginal(x)).unwrap();
        prop_assert!((back - x).abs() <= 1e-9 * (1.0 + x));
        let fwd = k.marginal(k.marginal_inverse(y).unwrap());
        prop_assert!((fwd - y).abs() <= 1e-9 * (1.0 + y));
    }

    #[test]
    fn kernel_monotone(t in 0.0..0.99f64, z in 0.0..100.0f64, dt in 1e-3..0.01f64, dz in 1e-3..1.0f64) {
        let kern = ModelParams::default().kernel();
        let h = kern.h(t, z).unwrap();
        prop_assert!(kern.h(t, z + dz).unwrap() < h);
        prop_assert!(kern.h(t + dt, z).unwrap() > h);
    }

    #[test]
    fn posterior_mean_from_log_derivative(y in -5.0..5.0f64, z in 0.0..50.0f64) {
        let kern = ModelParams::default().kernel();
        let e = 1e-4;
        let lf = |y: f64| kern.f(y, z).unwrap().ln();
        let fd = (lf(y + e) - lf(y - e)) / (2.0 * e);
        let (mean, _) = kern.posterior_moments(y, z).unwrap();
        prop_assert!((fd - mean).abs() <= 1e-6 * (1.0 + mean.abs()));
    }
}

#[test]
fn correlated_conjugate_matches_grid_search() {
    let k = CostModel::power(0.002, 2.0).unwrap();
    for (rho, sigma, x) in [(0.3, 0.192, 1e-4), (0.6, 0.192, 5e-4), (0.1, 0.5, 2e-3), (0.8, 0.3, 1e-5)] {
        let (val, theta) = k.correlated_conjugate(rho, sigma, x).unwrap();
        let obj = |th: f64| (th - rho / sigma).powi(2) * x / (1.0 - rho * rho) - k.eval_smooth(th * th).unwrap();
        let best = (0..=500_000).map(|i| obj(-50.0 + i as f64 * 1e-4)).fold(f64::NEG_INFINITY, f64::max);
        assert!((val - best).abs() < 1e-6, "rho={rho}: {val} vs {best}");
        assert!(theta <= 0.0);
        assert!((obj(theta) - val).abs() < 1e-12);
        let (mirror, th_m) = k.correlated_conjugate(-rho, sigma, x).unwrap();
        assert_eq!(mirror, val);
        assert_eq!(th_m, -theta);
    }
}
