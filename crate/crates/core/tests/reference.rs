use gjsoq::reference::{reference_decay_rate, reference_stationary};
use gjsoq::SystemParams;
use nalgebra::{DMatrix, DVector};

/// Direct solve of the reference chain truncated at `top`, arrivals at the
/// top level blocked. Returns the mass of each level.
fn truncated_levels(p: &SystemParams, top: usize) -> Vec<f64> {
    let n = 2 * (top + 1);
    let idx = |level: usize, busy: usize| 2 * level + busy;
    let lambda = p.total_arrival();
    let mut q = DMatrix::<f64>::zeros(n, n);
    for level in 0..=top {
        q[(idx(level, 0), idx(level, 1))] += lambda;
        let retry = match level {
            0 => 0.0,
            1 => p.alpha1,
            _ => p.alpha1 + p.alpha2,
        };
        if level > 0 {
            q[(idx(level, 0), idx(level - 1, 1))] += retry;
        }
        if level < top {
            q[(idx(level, 1), idx(level + 1, 1))] += lambda;
        }
        q[(idx(level, 1), idx(level, 0))] += p.mu;
    }
    for r in 0..n {
        let s: f64 = q.row(r).sum();
        q[(r, r)] = -s;
    }
    // pi Q = 0 with one equation replaced by normalization.
    let mut a = q.transpose();
    a.row_mut(0).fill(1.0);
    let mut b = DVector::<f64>::zeros(n);
    b[0] = 1.0;
    let pi = a.lu().solve(&b).unwrap();
    (0..=top).map(|l| pi[idx(l, 0)] + pi[idx(l, 1)]).collect()
}

#[test]
fn truncated_solve_decays_at_zeta() {
    for p in [
        SystemParams::new(0.15, 0.05, 0.01, 0.44, 0.25, 0.1).unwrap(),
        SystemParams::new(0.04, 0.01, 0.01, 0.44, 0.25, 0.25).unwrap(),
        SystemParams::new(0.3, 0.02, 0.0, 0.5, 0.6, 0.3).unwrap(),
    ] {
        let zeta = reference_decay_rate(&p).unwrap();
        let levels = truncated_levels(&p, 80);
        for n in 30..40 {
            let ratio = levels[n + 1] / levels[n];
            assert!((ratio / zeta - 1.0).abs() < 0.01, "{p:?} level {n}: {ratio} vs {zeta}");
        }
    }
}

#[test]
fn matrix_geometric_matches_truncated_solve() {
    let p = SystemParams::new(0.15, 0.05, 0.01, 0.44, 0.25, 0.1).unwrap();
    let exact = reference_stationary(&p, 30).unwrap();
    let levels = truncated_levels(&p, 200);
    for n in 0..=30 {
        let rel = (exact.level_mass(n) / levels[n] - 1.0).abs();
        assert!(rel < 1e-10, "level {n}: {rel}");
    }
}
