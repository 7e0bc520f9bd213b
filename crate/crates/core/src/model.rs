//! Model parameters, derived rates and the uniformized transition blocks.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// The six exogenous rates of the two-orbit retrial system.
///
/// `lambda0` is the smart stream (blocked jobs join the shorter orbit),
/// `lambda1`/`lambda2` the dedicated streams, `mu` the service rate and
/// `alpha1`/`alpha2` the constant retrial rates of the two orbits.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemParams {
    pub lambda0: f64,
    pub lambda1: f64,
    pub lambda2: f64,
    pub mu: f64,
    pub alpha1: f64,
    pub alpha2: f64,
}

impl SystemParams {
    /// Builds and validates a parameter set.
    pub fn new(
        lambda0: f64,
        lambda1: f64,
        lambda2: f64,
        mu: f64,
        alpha1: f64,
        alpha2: f64,
    ) -> Result<Self> {
        let p = SystemParams {
            lambda0,
            lambda1,
            lambda2,
            mu,
            alpha1,
            alpha2,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("lambda0", self.lambda0),
            ("lambda1", self.lambda1),
            ("lambda2", self.lambda2),
            ("mu", self.mu),
            ("alpha1", self.alpha1),
            ("alpha2", self.alpha2),
        ];
        for (field, value) in fields {
            if !value.is_finite() {
                return Err(Error::InvalidParam {
                    field,
                    value,
                    reason: "must be finite",
                });
            }
            if value < 0.0 {
                return Err(Error::InvalidParam {
                    field,
                    value,
                    reason: "must be nonnegative",
                });
            }
        }
        for (field, value) in [("mu", self.mu), ("alpha1", self.alpha1), ("alpha2", self.alpha2)] {
            if value <= 0.0 {
                return Err(Error::InvalidParam {
                    field,
                    value,
                    reason: "must be strictly positive",
                });
            }
        }
        if self.lambda0 == 0.0 && (self.lambda1 == 0.0 || self.lambda2 == 0.0) {
            return Err(Error::InvalidParam {
                field: "lambda0",
                value: self.lambda0,
                reason: "may be zero only if lambda1 and lambda2 are both positive",
            });
        }
        Ok(())
    }

    /// Parses a JSON object with keys `lambda0`, `lambda1`, `lambda2`, `mu`,
    /// `alpha1`, `alpha2` and validates it.
    pub fn from_json(text: &str) -> Result<Self> {
        let p: SystemParams =
            serde_json::from_str(text).map_err(|e| Error::Input(format!("bad parameter JSON: {e}")))?;
        p.validate()?;
        Ok(p)
    }

    /// All six rates multiplied by `c`.
    pub fn scaled(&self, c: f64) -> Self {
        SystemParams {
            lambda0: self.lambda0 * c,
            lambda1: self.lambda1 * c,
            lambda2: self.lambda2 * c,
            mu: self.mu * c,
            alpha1: self.alpha1 * c,
            alpha2: self.alpha2 * c,
        }
    }

    /// Swaps the roles of the two orbits.
    pub fn mirrored(&self) -> Self {
        SystemParams {
            lambda1: self.lambda2,
            lambda2: self.lambda1,
            alpha1: self.alpha2,
            alpha2: self.alpha1,
            ..*self
        }
    }

    pub fn total_arrival(&self) -> f64 {
        self.lambda0 + self.lambda1 + self.lambda2
    }

    /// Uniformization constant `lambda + mu + alpha1 + alpha2`.
    pub fn theta(&self) -> f64 {
        self.total_arrival() + self.mu + self.alpha1 + self.alpha2
    }

    /// Total outflow rate of an idle state with both orbits nonempty.
    pub fn idle_exit(&self) -> f64 {
        self.total_arrival() + self.alpha1 + self.alpha2
    }

    pub fn is_symmetric(&self, tol: f64) -> bool {
        let close = |a: f64, b: f64| (a - b).abs() <= tol * a.abs().max(b.abs()).max(f64::MIN_POSITIVE);
        close(self.lambda1, self.lambda2) && close(self.alpha1, self.alpha2)
    }

    pub fn derived(&self) -> DerivedRates {
        DerivedRates::new(self)
    }
}

/// Hatted rates and loads shared by every closed form.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DerivedRates {
    pub lambda: f64,
    pub lambda_hat: f64,
    pub lambda_hat_0: f64,
    pub lambda_hat_1: f64,
    pub lambda_hat_2: f64,
    pub mu_hat_1: f64,
    pub mu_hat_2: f64,
    pub rho: f64,
    pub rho1: f64,
    pub rho2: f64,
    pub gamma1: f64,
    pub gamma2: f64,
}

impl DerivedRates {
    pub fn new(p: &SystemParams) -> Self {
        let lambda = p.total_arrival();
        let s = p.idle_exit();
        let mu_hat_1 = p.mu * p.alpha1;
        let mu_hat_2 = p.mu * p.alpha2;
        let lambda_hat = lambda * s;
        let lambda_hat_1 = p.lambda1 * s;
        let lambda_hat_2 = p.lambda2 * s;
        let rho = lambda_hat / (mu_hat_1 + mu_hat_2);
        let rho2sq = rho * rho;
        DerivedRates {
            lambda,
            lambda_hat,
            lambda_hat_0: p.lambda0 * s,
            lambda_hat_1,
            lambda_hat_2,
            mu_hat_1,
            mu_hat_2,
            rho,
            rho1: lambda_hat_1 / mu_hat_1,
            rho2: lambda_hat_2 / mu_hat_2,
            gamma1: mu_hat_1 * rho2sq + lambda_hat_2,
            gamma2: mu_hat_2 * rho2sq + lambda_hat_1,
        }
    }

    /// `lambda_hat + mu_hat_1 + mu_hat_2`.
    pub fn s_hat(&self) -> f64 {
        self.lambda_hat + self.mu_hat_1 + self.mu_hat_2
    }

    /// Signed strong-pooling margin `lambda_hat_0 - |lambda_hat_2 - lambda_hat_1 + rho^2 (mu_hat_1 - mu_hat_2)|`.
    pub fn pooling_margin(&self) -> f64 {
        let r2 = self.rho * self.rho;
        self.lambda_hat_0 - (self.lambda_hat_2 - self.lambda_hat_1 + r2 * (self.mu_hat_1 - self.mu_hat_2)).abs()
    }

    pub fn strongly_pooled(&self) -> bool {
        self.pooling_margin() > 0.0
    }

    pub fn strongly_balanced(&self) -> bool {
        let (g1, g2, l0) = (self.gamma1, self.gamma2, self.lambda_hat_0);
        g2 < self.rho * (g1 + l0) && g1 < self.rho * (g2 + l0)
    }
}

/// Position of a lattice point `(i, j)` in the quarter plane.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum RegionLabel {
    /// `i > j > 0`
    R1,
    /// `j > i > 0`
    R2,
    /// `i = j > 0`
    D,
    /// `j = 0 < i`
    H,
    /// `i = 0 < j`
    V,
    /// `i = j = 0`
    Origin,
}

impl RegionLabel {
    pub const ALL: [RegionLabel; 6] = [
        RegionLabel::R1,
        RegionLabel::R2,
        RegionLabel::D,
        RegionLabel::H,
        RegionLabel::V,
        RegionLabel::Origin,
    ];

    pub fn of(i: usize, j: usize) -> Self {
        match (i, j) {
            (0, 0) => RegionLabel::Origin,
            (_, 0) => RegionLabel::H,
            (0, _) => RegionLabel::V,
            _ if i > j => RegionLabel::R1,
            _ if j > i => RegionLabel::R2,
            _ => RegionLabel::D,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            RegionLabel::R1 => "r1",
            RegionLabel::R2 => "r2",
            RegionLabel::D => "d",
            RegionLabel::H => "h",
            RegionLabel::V => "v",
            RegionLabel::Origin => "O",
        }
    }
}

/// One block `A_{di,dj}` of the uniformized chain, indexed by server state
/// (0 = idle, 1 = busy).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransitionBlock {
    pub direction: (i8, i8),
    pub matrix: [[f64; 2]; 2],
}

/// Nonzero blocks of the uniformized chain in `region`, divided by `theta`.
pub fn transition_blocks(p: &SystemParams, region: RegionLabel) -> Vec<TransitionBlock> {
    use RegionLabel::*;
    let (l0, l1, l2, mu, a1, a2) = (p.lambda0, p.lambda1, p.lambda2, p.mu, p.alpha1, p.alpha2);
    let lambda = p.total_arrival();
    let theta = p.theta();

    // Busy-server arrivals that end up in orbit 1 / orbit 2.
    let (to1, to2) = match region {
        R1 | H => (l1, l0 + l2),
        R2 | V => (l0 + l1, l2),
        D | Origin => (l1 + l0 / 2.0, l2 + l0 / 2.0),
    };
    let retry1 = matches!(region, R1 | R2 | D | H);
    let retry2 = matches!(region, R1 | R2 | D | V);
    // Idle-state retrial rates that are suppressed by an empty orbit become self-loops.
    let idle_loop = mu + if retry1 { 0.0 } else { a1 } + if retry2 { 0.0 } else { a2 };

    let mut blocks = vec![
        TransitionBlock {
            direction: (0, 0),
            matrix: [[idle_loop, lambda], [mu, a1 + a2]],
        },
        TransitionBlock {
            direction: (1, 0),
            matrix: [[0.0, 0.0], [0.0, to1]],
        },
        TransitionBlock {
            direction: (0, 1),
            matrix: [[0.0, 0.0], [0.0, to2]],
        },
    ];
    if retry1 {
        blocks.push(TransitionBlock {
            direction: (-1, 0),
            matrix: [[0.0, a1], [0.0, 0.0]],
        });
    }
    if retry2 {
        blocks.push(TransitionBlock {
            direction: (0, -1),
            matrix: [[0.0, a2], [0.0, 0.0]],
        });
    }
    for b in &mut blocks {
        for row in &mut b.matrix {
            for x in row.iter_mut() {
                *x /= theta;
            }
        }
    }
    blocks
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table1() -> SystemParams {
        SystemParams::new(0.15, 0.05, 0.01, 0.44, 0.25, 0.1).unwrap()
    }

    #[test]
    fn table1_loads() {
        let d = table1().derived();
        assert_eq!(format!("{:.4}", d.rho), "0.7636");
        assert_eq!(format!("{:.4}", d.rho1), "0.2545");
        assert_eq!(format!("{:.4}", d.rho2), "0.1273");
        assert_eq!(format!("{:.4}", d.pooling_margin()), "0.0679");
    }

    #[test]
    fn dedicated_rho_matches_smart_only_limit() {
        let d = SystemParams::new(0.04, 0.01, 0.01, 0.44, 0.25, 0.25).unwrap().derived();
        assert_eq!(format!("{:.4}", d.rho), "0.1527");
    }

    #[test]
    fn zero_dedicated_load_is_zero() {
        let d = SystemParams::new(0.06, 0.0, 0.0, 0.44, 0.15, 0.35).unwrap().derived();
        assert_eq!(d.rho1, 0.0);
        assert_eq!(d.rho2, 0.0);
    }

    #[test]
    fn symmetric_gammas_coincide() {
        let d = SystemParams::new(0.3, 0.07, 0.07, 1.0, 0.4, 0.4).unwrap().derived();
        assert_eq!(d.gamma1, d.gamma2);
    }

    #[test]
    fn validation_names_field() {
        let e = SystemParams::new(0.1, 0.1, 0.1, 0.0, 0.2, 0.2).unwrap_err();
        assert!(e.to_string().contains("`mu`"));
        let e = SystemParams::new(0.1, -0.1, 0.1, 1.0, 0.2, 0.2).unwrap_err();
        assert!(e.to_string().contains("`lambda1`"));
        let e = SystemParams::new(0.0, 0.0, 0.1, 1.0, 0.2, 0.2).unwrap_err();
        assert!(e.to_string().contains("`lambda0`"));
        assert!(SystemParams::new(0.0, 0.1, 0.1, 1.0, 0.2, 0.2).is_ok());
    }

    #[test]
    fn json_roundtrip() {
        let p = SystemParams::from_json(
            r#"{"lambda0":0.15,"lambda1":0.05,"lambda2":0.01,"mu":0.44,"alpha1":0.25,"alpha2":0.1}"#,
        )
        .unwrap();
        assert_eq!(p, table1());
        assert!(SystemParams::from_json(r#"{"lambda0":0.15}"#).is_err());
    }

    #[test]
    fn region_labels() {
        assert_eq!(RegionLabel::of(0, 0), RegionLabel::Origin);
        assert_eq!(RegionLabel::of(3, 0), RegionLabel::H);
        assert_eq!(RegionLabel::of(0, 3), RegionLabel::V);
        assert_eq!(RegionLabel::of(3, 2), RegionLabel::R1);
        assert_eq!(RegionLabel::of(2, 3), RegionLabel::R2);
        assert_eq!(RegionLabel::of(2, 2), RegionLabel::D);
    }

    #[test]
    fn block_examples() {
        let p = table1();
        let theta = p.theta();
        let find = |r, dir| {
            transition_blocks(&p, r)
                .into_iter()
                .find(|b| b.direction == dir)
                .unwrap()
                .matrix
        };
        assert_eq!(find(RegionLabel::R1, (1, 0)), [[0.0, 0.0], [0.0, 0.05 / theta]]);
        let d = find(RegionLabel::D, (1, 0));
        assert!((d[1][1] - (0.05 + 0.075) / theta).abs() < 1e-15);
        assert!(transition_blocks(&p, RegionLabel::H).iter().all(|b| b.direction != (0, -1)));
        assert!(transition_blocks(&p, RegionLabel::V).iter().all(|b| b.direction != (-1, 0)));
    }

    #[test]
    fn blocks_row_stochastic() {
        let p = table1();
        for r in RegionLabel::ALL {
            let blocks = transition_blocks(&p, r);
            for row in 0..2 {
                let s: f64 = blocks.iter().map(|b| b.matrix[row][0] + b.matrix[row][1]).sum();
                assert!((s - 1.0).abs() < 1e-12, "{r:?} row {row}: {s}");
            }
        }
    }
}
