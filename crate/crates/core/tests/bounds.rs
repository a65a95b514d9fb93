use gaussrep::concentration::{
    chernoff_optimal_t, estimate_sup_gradient_norm_sq, estimate_sup_seminorm, improved_tail_bound, mgf_bound,
    tail_bound, AscentConfig, BoundKind,
};
use gaussrep::empirics::{certify, empirical_tail, mean_positive_part};
use gaussrep::generators::{random_model, random_smooth_field};
use gaussrep::stats::normal_tail;
use gaussrep::{GaussianModel, RngStream, ScalarField};
use rand::Rng;

#[test]
fn chernoff_closed_form_and_grid_search() {
    let mut rng = RngStream::new(60, 0).rng();
    for _ in 0..50 {
        let s: f64 = rng.random_range(0.2..4.0);
        let x: f64 = rng.random_range(0.2..4.0);
        let t = chernoff_optimal_t(s, x).unwrap();
        let at_opt = (-t * x).exp() * mgf_bound(s, t);
        let basic = tail_bound(s, x).unwrap();
        assert!((at_opt - basic).abs() < 1e-14, "{at_opt} vs {basic}");
        let best_grid = (1..=10_000).map(|k| k as f64 * 1e-3).map(|t| (-t * x).exp() * mgf_bound(s, t)).fold(f64::INFINITY, f64::min);
        assert!(best_grid >= at_opt * (1.0 - 1e-9), "grid {best_grid} beats {at_opt}");
    }
}

#[test]
fn tail_bound_scaling_and_monotonicity() {
    for c in [0.5, 2.0, 3.0] {
        for (s, x) in [(1.0, 1.0), (2.0, 0.5), (0.3, 2.0)] {
            let a = tail_bound(s, x).unwrap();
            let b = tail_bound(c * c * s, c * x).unwrap();
            assert!((a - b).abs() <= 1e-15 * a.max(1e-300));
        }
    }
    let mut prev = 1.0;
    for k in 1..50 {
        let v = tail_bound(1.0, 0.1 * k as f64).unwrap();
        assert!(v < prev);
        prev = v;
        assert!(tail_bound(1.0 + 0.1 * k as f64, 1.0).unwrap() > tail_bound(1.0, 1.0).unwrap());
    }
}

#[test]
fn exact_tail_below_basic_bound() {
    for (x, phibar, basic) in [(1.0, 0.1587, 0.6065), (2.0, 0.0228, 0.1353), (3.0, 0.00135, 0.0111)] {
        let exact = normal_tail(x);
        let b = tail_bound(1.0, x).unwrap();
        assert!((exact - phibar).abs() < 5e-5, "{exact}");
        assert!((b - basic).abs() < 5e-5, "{b}");
        assert!(exact <= b);
    }
}

#[test]
fn improved_mean_is_below_improved_const_for_linear() {
    let model = GaussianModel::standard(2).unwrap();
    let f = ScalarField::coordinate(2, 0);
    let est = mean_positive_part(&model, &f, 1_000_000, RngStream::new(61, 0)).unwrap();
    let half_normal = (1.0 / (2.0 * std::f64::consts::PI)).sqrt();
    assert!(est.at_level(0.99).covers(half_normal), "{est:?}");
    // E(f - Ef)^+ <= sqrt(pi/8) sigma, so the ordering holds up to the CI
    for x in [0.5, 1.0, 2.0, 3.0] {
        let mean_b = improved_tail_bound(BoundKind::ImprovedMean, 1.0, x, Some(&est)).unwrap();
        let const_b = improved_tail_bound(BoundKind::ImprovedConst, 1.0, x, None).unwrap();
        let slack = est.ci_half_width / x * (-x * x / 2.0f64).exp();
        assert!(mean_b <= const_b + slack, "x={x}: {mean_b} > {const_b}");
    }
}

#[test]
fn seminorm_dominated_by_lambda_times_gradient_sup() {
    let mut rng = RngStream::new(62, 0).rng();
    let cfg = AscentConfig { starts: 16, probes: 2000, ..AscentConfig::default() };
    for k in 0..8 {
        let dim = rng.random_range(1..=3);
        let model = random_model(&mut rng, dim, 2.0).unwrap();
        let f = random_smooth_field(&mut rng, dim).unwrap();
        let s = estimate_sup_seminorm(&model, &f, &cfg, RngStream::new(63, k)).unwrap();
        let g = estimate_sup_gradient_norm_sq(&model, &f, &cfg, RngStream::new(64, k)).unwrap();
        // at the seminorm witness, <grad, Sigma grad> <= lambda* |grad|^2 <= lambda* sup|grad|^2
        assert!(s.value <= model.max_eigenvalue() * g.value * (1.0 + 1e-6) + 1e-9, "{} > {} * {}", s.value, model.max_eigenvalue(), g.value);
    }
    let model = GaussianModel::from_rows(&[0.0, 0.0], &[vec![2.0, 1.0], vec![1.0, 2.0]]).unwrap();
    let lin = ScalarField::linear(vec![1.0, 1.0]);
    let s = estimate_sup_seminorm(&model, &lin, &cfg, RngStream::new(65, 0)).unwrap();
    let g = estimate_sup_gradient_norm_sq(&model, &lin, &cfg, RngStream::new(66, 0)).unwrap();
    assert!(s.is_exact && g.is_exact);
    assert!((s.value - 6.0).abs() < 1e-12);
    assert!((model.max_eigenvalue() * g.value - 6.0).abs() < 1e-12);
}

#[test]
fn linear_tail_interval_calibration() {
    // 99% Clopper–Pearson intervals should cover the true tail in >= 95% of runs
    let model = GaussianModel::standard(1).unwrap();
    let f = ScalarField::coordinate(1, 0);
    let runs = 200;
    let mut covered = [0usize; 2];
    for r in 0..runs {
        let sweep = empirical_tail(&model, &f, &[1.0, 2.0], 20_000, RngStream::new(67, r)).unwrap();
        for (k, p) in sweep.points.iter().enumerate() {
            let truth = normal_tail(p.x);
            if p.cp_lower <= truth && truth <= p.cp_upper {
                covered[k] += 1;
            }
        }
    }
    for c in covered {
        assert!(c as f64 >= 0.95 * runs as f64, "covered {c}/{runs}");
    }
}

#[test]
fn deep_level_reports_zero_count_interval() {
    let model = GaussianModel::standard(1).unwrap();
    let f = ScalarField::coordinate(1, 0);
    let n = 100_000;
    let sweep = empirical_tail(&model, &f, &[20.0, 0.0], n, RngStream::new(68, 0)).unwrap();
    let deep = &sweep.points[0];
    assert_eq!(deep.count, 0);
    let m = (n - n / 2) as f64;
    assert!((deep.cp_upper - (1.0 - 0.005f64.powf(1.0 / m))).abs() < 1e-12);
    assert!((sweep.points[1].empirical.mean - 0.5).abs() < 0.01);
}

#[test]
fn max_coord_certifies_in_sixteen_dimensions() {
    let model = GaussianModel::standard(16).unwrap();
    let f = ScalarField::max_coord(16);
    let report = certify(&model, &f, &[1.0, 2.0, 3.0], &[BoundKind::Basic, BoundKind::StrongMoment], 1_000_000, RngStream::new(69, 0)).unwrap();
    assert!(report.seminorm.is_exact);
    assert_eq!(report.seminorm.value, 1.0);
    assert!(report.overall);
}
