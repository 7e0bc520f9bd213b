use gjsoq::oracle::solve_stationary;
use gjsoq::sim::{simulate, simulate_with, Scenario, SimOptions};
use gjsoq::SystemParams;

#[test]
fn event_rate_is_between_slowest_and_fastest_outflow() {
    for s in Scenario::ALL {
        let p = s.preset();
        let tr = simulate(&p, 1e5, 3, 0.0);
        let rate = tr.summary.events as f64 / tr.horizon;
        assert!(rate >= p.total_arrival() && rate <= p.theta(), "{}: {rate}", s.name());
    }
}

#[test]
fn symmetric_system_matches_oracle() {
    let p = SystemParams::new(0.2, 0.05, 0.05, 0.6, 0.3, 0.3).unwrap();
    let sol = solve_stationary(&p, 50).unwrap();
    let s = simulate(&p, 2e5, 11, 0.0).summary;
    for (est, exact) in [(s.busy, sol.busy_fraction()), (s.min, sol.mean_min())] {
        assert!((est.mean - exact).abs() < 3.0 * est.std_err, "{est:?} vs {exact}");
    }
    // Mirror symmetry shows up as equal orbit means.
    let spread = 3.0 * (s.n1.std_err.powi(2) + s.n2.std_err.powi(2)).sqrt();
    assert!((s.n1.mean - s.n2.mean).abs() < spread);
}

#[test]
fn options_control_warmup_and_batches() {
    let p = Scenario::Criterion1Pooled.preset();
    let mut opt = SimOptions::new(1e4, 5, 0.0);
    opt.warmup_fraction = 0.2;
    opt.batches = 8;
    let tr = simulate_with(&p, &opt);
    assert_eq!(tr.summary.warmup, 2e3);
    assert_eq!(tr.summary.batches, 8);
    assert!(tr.samples.is_empty());
    let sampled = simulate(&p, 100.0, 5, 0.5);
    assert_eq!(sampled.samples.len(), 201);
    assert!(sampled.samples.windows(2).all(|w| w[1].t > w[0].t));
}
