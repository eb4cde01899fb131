use ssde::mc::*;
use ssde::params::Parameters;
use ssde::sde::SchemeConfig;
use ssde::stable::sample_stable_increment;
use ssde::RngStream;

#[test]
fn streams_replay_and_differ() {
    let draw = |seed, id| {
        let mut r = derive_stream(seed, id);
        (0..1000).map(|_| r.open_unit()).collect::<Vec<f64>>()
    };
    assert_eq!(draw(7, 0), draw(7, 0));
    assert_ne!(draw(7, 0), draw(7, 1));
    assert_ne!(draw(7, 0), draw(8, 0));
}

#[test]
fn streams_uncorrelated() {
    let (mut a, mut b) = (derive_stream(9, 0), derive_stream(9, 1));
    let n = 100_000;
    let pairs: Vec<(f64, f64)> = (0..n).map(|_| (a.open_unit(), b.open_unit())).collect();
    let mx = pairs.iter().map(|p| p.0).sum::<f64>() / n as f64;
    let my = pairs.iter().map(|p| p.1).sum::<f64>() / n as f64;
    let cov = pairs.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<f64>();
    let vx = pairs.iter().map(|p| (p.0 - mx).powi(2)).sum::<f64>();
    let vy = pairs.iter().map(|p| (p.1 - my).powi(2)).sum::<f64>();
    assert!((cov / (vx * vy).sqrt()).abs() < 0.01);
}

#[test]
fn ks_null_same_stable_law() {
    let a = parallel_indexed(10_000, 41, 0, 1, |_, rng| sample_stable_increment(1.0, 1.5, rng)).unwrap();
    let b = parallel_indexed(10_000, 41, SIDE_B_OFFSET, 1, |_, rng| sample_stable_increment(1.0, 1.5, rng)).unwrap();
    let r = ks_two_sample(&a, &b).unwrap();
    assert!(r.pass, "{r:?}");
    assert_eq!(r.pass, r.statistic < r.critical_value_1pct);
}

#[test]
fn estimates_do_not_depend_on_worker_count() {
    let p = Parameters::derive(1.5, 0.5, 0.3).unwrap();
    let cfg = SchemeConfig::new(1e-2, 2e-2, true, 5.0).unwrap();
    let one = estimate_extinction_probability(&p, 0.5, &cfg, &McConfig::new(300, 5).with_workers(1)).unwrap();
    let three = estimate_extinction_probability(&p, 0.5, &cfg, &McConfig::new(300, 5).with_workers(3)).unwrap();
    assert_eq!(one, three);

    let scfg = SchemeConfig::new(1e-3, 1e-2, false, 1.0).unwrap();
    let q = p.with_theta(0.5).unwrap();
    let d1 = drift_identity_check(&q, 1.0, 0.3, &scfg, &McConfig::new(200, 6).with_workers(1)).unwrap();
    let d4 = drift_identity_check(&q, 1.0, 0.3, &scfg, &McConfig::new(200, 6).with_workers(4)).unwrap();
    assert_eq!(d1.mean.to_bits(), d4.mean.to_bits());
    assert_eq!(d1.std_error.to_bits(), d4.std_error.to_bits());
}

#[test]
fn extinction_small_scale() {
    let cfg = SchemeConfig::new(1e-3, 1e-2, true, 10.0).unwrap();
    let mc = McConfig::new(500, 42);
    let mut sweep = Vec::new();
    for &theta in &[0.0, 0.3, 0.6, 0.9, 1.2] {
        let p = Parameters::derive(1.5, 0.5, theta).unwrap();
        let curve = extinction_curve(&p, 0.5, &cfg, &[2.0, 5.0, 10.0], &mc).unwrap();
        assert!(curve.windows(2).all(|w| w[1].mean >= w[0].mean));
        sweep.push(curve[2]);
    }
    assert!(nonincreasing_up_to_overlap(&sweep), "{sweep:?}");
    assert!(sweep[0].mean >= 0.9);
    assert!(sweep[4].mean <= 0.05);
    assert!(estimate_extinction_probability(
        &Parameters::derive(1.5, 0.5, 0.0).unwrap(),
        0.5,
        &cfg,
        &McConfig::new(50, 0)
    )
    .is_err());
}

#[test]
fn summaries_are_consistent() {
    let p = Parameters::derive(1.2, 0.5, 0.5).unwrap();
    for e in laplace_check_xi(&p, &[0.25, 0.5], 1e-2, true, &McConfig::new(2000, 43)).unwrap() {
        assert!(e.std_error > 0.0 && e.estimate.is_finite());
    }
    let s = McSummary::from_samples(&[1.0, 1.0, 1.0]).unwrap();
    assert_eq!((s.ci95_low, s.ci95_high), (1.0, 1.0));
    let mut rng = RngStream::new(0, 0);
    let xs: Vec<f64> = (0..1000).map(|_| rng.std_normal()).collect();
    let s = McSummary::from_samples(&xs).unwrap();
    assert!(s.std_error > 0.025 && s.std_error < 0.04);
}

#[test]
fn negative_controls_fail() {
    let p = Parameters::derive(1.5, 0.5, 0.5).unwrap();
    let cfg = SchemeConfig::new(1e-3, 1e-2, false, 1.0).unwrap();
    let lcfg = ssde::lamperti::LampertiConfig { cutoff: 1e-2, ..ssde::lamperti::LampertiConfig::default_for(1.5) };
    let shifted = p.with_theta(1.0).unwrap();
    let r = lamperti_vs_sde_test_with(&shifted, &p, 1.0, 0.5, &lcfg, &cfg, &McConfig::new(2000, 44)).unwrap();
    assert!(!r.pass, "{r:?}");
}
