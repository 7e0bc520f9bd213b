//! Single-orbit reference retrial queue: a level-independent QBD whose
//! level is the total orbit length. Its decay rate equals `rho`.

use nalgebra::{Matrix2, Matrix4, RowVector2, Vector4};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::SystemParams;

/// Generator blocks, phases ordered (idle, busy).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReferenceQbd {
    /// Local block at level 0.
    pub l0_level0: Matrix2<f64>,
    /// Local block at level 1.
    pub l0_level1: Matrix2<f64>,
    /// Local block at levels >= 2.
    pub l0: Matrix2<f64>,
    /// Level up (blocked arrivals).
    pub l_up: Matrix2<f64>,
    /// Level 1 -> 0 (only the first orbit can retry).
    pub l_down_level1: Matrix2<f64>,
    /// Level n -> n-1 for n >= 2.
    pub l_down: Matrix2<f64>,
}

impl ReferenceQbd {
    pub fn new(p: &SystemParams) -> Self {
        let lambda = p.total_arrival();
        let (mu, a1, a2) = (p.mu, p.alpha1, p.alpha2);
        ReferenceQbd {
            l0_level0: Matrix2::new(-lambda, lambda, mu, -(lambda + mu)),
            l0_level1: Matrix2::new(-(lambda + a1), lambda, mu, -(lambda + mu)),
            l0: Matrix2::new(-(lambda + a1 + a2), lambda, mu, -(lambda + mu)),
            l_up: Matrix2::new(0.0, 0.0, 0.0, lambda),
            l_down_level1: Matrix2::new(0.0, a1, 0.0, 0.0),
            l_down: Matrix2::new(0.0, a1 + a2, 0.0, 0.0),
        }
    }

    /// `det(L_up + L0 z + L_down z^2)`.
    pub fn characteristic(&self, z: f64) -> f64 {
        (self.l_up + self.l0 * z + self.l_down * (z * z)).determinant()
    }

    /// Mean level drift `(up, down)` under the phase distribution of `L_up + L0 + L_down`.
    pub fn drift(&self) -> (f64, f64) {
        let u = self.phase_stationary();
        let ones = nalgebra::Vector2::<f64>::new(1.0, 1.0);
        ((u * self.l_up * ones)[0], (u * self.l_down * ones)[0])
    }

    /// Normalized stationary vector of the phase generator `L_up + L0 + L_down`.
    pub fn phase_stationary(&self) -> RowVector2<f64> {
        let g = self.l_up + self.l0 + self.l_down;
        // Two-state generator: u proportional to (g10, g01).
        let u = RowVector2::new(g[(1, 0)], g[(0, 1)]);
        u / u.sum()
    }

    /// Minimal nonnegative solution of `L_up + R L0 + R^2 L_down = 0`.
    pub fn rate_matrix(&self) -> Result<Matrix2<f64>> {
        let inv = self
            .l0
            .try_inverse()
            .ok_or(Error::Singular("local block of the reference chain"))?;
        let mut r: Matrix2<f64> = Matrix2::zeros();
        for _ in 0..100_000 {
            let next = -(self.l_up + r * r * self.l_down) * inv;
            let diff = (next - r).abs().max();
            r = next;
            if diff < 1e-14 {
                return Ok(r);
            }
        }
        Err(Error::NoConvergence {
            what: "rate matrix iteration",
            iterations: 100_000,
        })
    }
}

/// Root in `(0, 1)` of the characteristic determinant, by bisection.
pub fn reference_decay_rate(p: &SystemParams) -> Result<f64> {
    let d = p.derived();
    if d.rho >= 1.0 {
        return Err(Error::Unstable { rho: d.rho });
    }
    let q = ReferenceQbd::new(p);
    // The determinant vanishes at 0 and 1 and changes sign once in between.
    let (mut a, mut b) = (1e-12, 1.0 - 1e-12);
    let fa = q.characteristic(a);
    if fa * q.characteristic(b) > 0.0 {
        return Err(Error::RootNotFound { z_max: 1.0 });
    }
    while b - a > 1e-15 {
        let m = 0.5 * (a + b);
        if q.characteristic(m) * fa > 0.0 {
            a = m;
        } else {
            b = m;
        }
    }
    Ok(0.5 * (a + b))
}

/// Matrix-geometric stationary distribution of the reference chain.
#[derive(Debug, Clone, Serialize)]
pub struct ReferenceSolution {
    pub zeta: f64,
    /// Rate matrix in row-major order.
    pub r: [[f64; 2]; 2],
    /// `(idle, busy)` probability per level `0..=n_max`.
    pub levels: Vec<[f64; 2]>,
}

impl ReferenceSolution {
    pub fn level_mass(&self, n: usize) -> f64 {
        self.levels[n][0] + self.levels[n][1]
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("n,idle_prob,busy_prob\n");
        for (n, l) in self.levels.iter().enumerate() {
            out.push_str(&format!("{n},{},{}\n", l[0], l[1]));
        }
        out
    }
}

pub fn reference_stationary(p: &SystemParams, n_max: usize) -> Result<ReferenceSolution> {
    let d = p.derived();
    if d.rho >= 1.0 {
        return Err(Error::Unstable { rho: d.rho });
    }
    let q = ReferenceQbd::new(p);
    let r = q.rate_matrix()?;
    let eye = Matrix2::identity();
    let geo = (eye - r)
        .try_inverse()
        .ok_or(Error::Singular("I - R"))?;

    // Unknowns (pi0_idle, pi0_busy, pi1_idle, pi1_busy), written as columns:
    // x^T [B00 B01; B10 B11] = 0 plus normalization.
    let b01 = q.l_up;
    let b11 = q.l0_level1 + r * q.l_down;
    let mut m = Matrix4::zeros();
    let mut rhs = Vector4::zeros();
    // Column c of the level-0 and level-1 balance equations.
    for c in 0..2 {
        for row in 0..2 {
            m[(c, row)] = q.l0_level0[(row, c)];
            m[(c, row + 2)] = q.l_down_level1[(row, c)];
        }
    }
    for c in 0..2 {
        for row in 0..2 {
            m[(2 + c, row)] = b01[(row, c)];
            m[(2 + c, row + 2)] = b11[(row, c)];
        }
    }
    // One balance equation is redundant; replace it with normalization.
    let tail_sum = geo * nalgebra::Vector2::<f64>::new(1.0, 1.0);
    m[(0, 0)] = 1.0;
    m[(0, 1)] = 1.0;
    m[(0, 2)] = tail_sum[0];
    m[(0, 3)] = tail_sum[1];
    rhs[0] = 1.0;
    let x = m.lu().solve(&rhs).ok_or(Error::Singular("reference boundary equations"))?;

    let mut levels = vec![[x[0], x[1]]];
    let mut cur = RowVector2::new(x[2], x[3]);
    for _ in 1..=n_max {
        levels.push([cur[0], cur[1]]);
        cur *= r;
    }
    Ok(ReferenceSolution {
        zeta: r[(1, 1)],
        r: [[r[(0, 0)], r[(0, 1)]], [r[(1, 0)], r[(1, 1)]]],
        levels,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table2() -> SystemParams {
        SystemParams::new(0.04, 0.01, 0.01, 0.44, 0.25, 0.25).unwrap()
    }

    #[test]
    fn decay_rate_is_rho() {
        let p = table2();
        let z = reference_decay_rate(&p).unwrap();
        assert_eq!(format!("{z:.4}"), "0.1527");
        assert!((z - p.derived().rho).abs() < 1e-10);
        assert!(ReferenceQbd::new(&p).characteristic(z).abs() < 1e-12);
    }

    #[test]
    fn generator_rows_vanish() {
        let q = ReferenceQbd::new(&table2());
        let ones = nalgebra::Vector2::<f64>::new(1.0, 1.0);
        assert!(((q.l0_level0 + q.l_up) * ones).abs().max() < 1e-15);
        assert!(((q.l_down_level1 + q.l0_level1 + q.l_up) * ones).abs().max() < 1e-15);
        assert!(((q.l_down + q.l0 + q.l_up) * ones).abs().max() < 1e-15);
    }

    #[test]
    fn phase_vector() {
        let p = SystemParams::new(0.15, 0.05, 0.01, 0.44, 0.25, 0.1).unwrap();
        let u = ReferenceQbd::new(&p).phase_stationary();
        let s = p.idle_exit();
        assert!((u[0] / u[1] - p.mu / s).abs() < 1e-14);
        let (up, down) = ReferenceQbd::new(&p).drift();
        assert!(up < down);
    }

    #[test]
    fn stationary_levels() {
        let p = SystemParams::new(0.15, 0.05, 0.01, 0.44, 0.25, 0.1).unwrap();
        let sol = reference_stationary(&p, 200).unwrap();
        let total: f64 = (0..=200).map(|n| sol.level_mass(n)).sum();
        assert!((total - 1.0).abs() < 1e-12);
        assert!(sol.levels.iter().all(|l| l[0] >= 0.0 && l[1] >= 0.0));
        let ratio = sol.level_mass(31) / sol.level_mass(30);
        assert!((ratio - sol.zeta).abs() < 1e-6);
        assert!((sol.zeta - p.derived().rho).abs() < 1e-10);
    }

    #[test]
    fn unstable_is_rejected() {
        let p = SystemParams::new(0.2, 0.05, 0.04, 0.45, 0.15, 0.11).unwrap();
        assert!(matches!(reference_decay_rate(&p), Err(Error::Unstable { .. })));
        let (up, down) = ReferenceQbd::new(&p).drift();
        assert!(up >= down);
    }
}
