//! Positive-recurrence criteria of the censored chain and the region-wise
//! mean drifts behind them.

use serde::Serialize;

use crate::model::SystemParams;

/// Mean one-step displacement `(M_i, M_j)` of the censored chain in each
/// region, in units of the uniformized chain (rates divided by theta).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DriftVectors {
    pub r1: (f64, f64),
    pub r2: (f64, f64),
    pub d: (f64, f64),
    pub h: (f64, f64),
    pub v: (f64, f64),
}

pub fn drift_vectors(p: &SystemParams) -> DriftVectors {
    let d = p.derived();
    let (l0, l1, l2) = (p.lambda0, p.lambda1, p.lambda2);
    let lambda = d.lambda;
    let s = p.idle_exit();
    let theta = p.theta();
    let r1 = (l1 - d.mu_hat_1 / s, l0 + l2 - d.mu_hat_2 / s);
    let r2 = (l0 + l1 - d.mu_hat_1 / s, l2 - d.mu_hat_2 / s);
    let dd = ((r1.0 + r2.0) / 2.0, (r1.1 + r2.1) / 2.0);
    let h = (l1 - d.mu_hat_1 / (lambda + p.alpha1), l0 + l2);
    let v = (l0 + l1, l2 - d.mu_hat_2 / (lambda + p.alpha2));
    let n = |x: (f64, f64)| (x.0 / theta, x.1 / theta);
    DriftVectors {
        r1: n(r1),
        r2: n(r2),
        d: n(dd),
        h: n(h),
        v: n(v),
    }
}

pub const TRANSFER_CAVEAT: &str = "criteria classify the censored chain at busy states; \
transfer of positive recurrence to the original chain is conjectured, not proven, and is checked only by simulation";

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StabilityReport {
    pub rho: f64,
    pub rho1: f64,
    pub rho2: f64,
    /// `rho1 < 1`, `rho2 < 1` and `rho < 1`.
    pub criterion1: bool,
    /// `rho1 >= 1` and `f1 < 0`.
    pub criterion2: bool,
    /// `rho2 >= 1` and `f2 < 0`.
    pub criterion3: bool,
    pub f1: f64,
    pub f2: f64,
    pub stable: bool,
    pub pooling_margin: f64,
    pub strongly_pooled: bool,
    pub strongly_balanced: bool,
    pub drifts: DriftVectors,
    pub caveat: &'static str,
}

/// Evaluates the three criteria. Equality cases (`rho = 1`, `f1 = 0`, ...)
/// fall on the unstable side because all inequalities are strict.
pub fn check_stability(p: &SystemParams) -> StabilityReport {
    let d = p.derived();
    let lambda = d.lambda;
    let f1 = lambda * (p.lambda1 + p.alpha1) / d.mu_hat_1 - 1.0;
    let f2 = lambda * (p.lambda2 + p.alpha2) / d.mu_hat_2 - 1.0;
    let criterion1 = d.rho1 < 1.0 && d.rho2 < 1.0 && d.rho < 1.0;
    let criterion2 = d.rho1 >= 1.0 && f1 < 0.0;
    let criterion3 = d.rho2 >= 1.0 && f2 < 0.0;
    StabilityReport {
        rho: d.rho,
        rho1: d.rho1,
        rho2: d.rho2,
        criterion1,
        criterion2,
        criterion3,
        f1,
        f2,
        stable: criterion1 || criterion2 || criterion3,
        pooling_margin: d.pooling_margin(),
        strongly_pooled: d.strongly_pooled(),
        strongly_balanced: d.strongly_balanced(),
        drifts: drift_vectors(p),
        caveat: TRANSFER_CAVEAT,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table1_report() {
        let p = SystemParams::new(0.15, 0.05, 0.01, 0.44, 0.25, 0.1).unwrap();
        let r = check_stability(&p);
        assert!(r.criterion1 && !r.criterion2 && !r.criterion3 && r.stable);
        assert!(r.strongly_pooled && r.strongly_balanced);
        assert!((r.pooling_margin - 0.067913).abs() < 5e-6);
        assert!(r.drifts.r1.0 + r.drifts.r1.1 < 0.0);
    }

    #[test]
    fn drift_sums_match_load() {
        let p = SystemParams::new(0.15, 0.05, 0.01, 0.44, 0.25, 0.1).unwrap();
        let d = p.derived();
        let m = drift_vectors(&p);
        let expect = (d.lambda_hat - d.mu_hat_1 - d.mu_hat_2) / p.idle_exit() / p.theta();
        assert!((m.r1.0 + m.r1.1 - expect).abs() < 1e-12);
        assert!((m.r2.0 + m.r2.1 - expect).abs() < 1e-12);
        assert!((m.d.0 - (m.r1.0 + m.r2.0) / 2.0).abs() < 1e-15);
    }

    #[test]
    fn no_dedicated_orbit1_drifts_down() {
        let p = SystemParams::new(0.3, 0.0, 0.1, 1.0, 0.5, 0.5).unwrap();
        let m = drift_vectors(&p);
        let d = p.derived();
        assert!((m.r1.0 + d.mu_hat_1 / p.idle_exit() / p.theta()).abs() < 1e-15);
        assert!(m.r1.0 < 0.0);
    }

    #[test]
    fn overloaded_but_dedicated_light() {
        let p = SystemParams::new(0.2, 0.05, 0.04, 0.45, 0.15, 0.11).unwrap();
        let r = check_stability(&p);
        assert!(r.rho > 1.0 && r.rho1 < 1.0 && r.rho2 < 1.0);
        assert!(!r.stable);
    }

    #[test]
    fn criterion2_example() {
        let p = SystemParams::new(0.01, 0.1, 0.02, 0.8, 0.04, 0.5).unwrap();
        let r = check_stability(&p);
        assert!(r.rho1 >= 1.0 && r.f1 < 0.0);
        assert!(r.criterion2 && r.stable && !r.criterion1 && !r.criterion3);
    }

    #[test]
    fn boundary_rho_one_is_unstable() {
        let p = SystemParams::new(1.0, 0.0, 0.0, 1.5, 1.0, 1.0).unwrap();
        let r = check_stability(&p);
        assert_eq!(r.rho, 1.0);
        assert!(!r.criterion1 && !r.stable);
    }
}
