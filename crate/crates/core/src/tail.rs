//! Exact geometric tail of the minimum orbit length: the root of
//! `f(z) = 1`, the quadratic roots behind the invariant vector `x_l`, and
//! the evaluator `rho^(2m) x_l`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{DerivedRates, SystemParams};

/// Coefficients `(lead, constant)` of `phi_-(eta) = lead eta^2 - S eta + constant`.
fn phi_minus(d: &DerivedRates, z: f64) -> (f64, f64) {
    (
        d.mu_hat_1 + (d.lambda_hat_0 + d.lambda_hat_2) * z,
        d.mu_hat_2 / z + d.lambda_hat_1,
    )
}

/// Coefficients of `phi_+(theta) = lead theta^2 - S theta + constant`.
fn phi_plus(d: &DerivedRates, z: f64) -> (f64, f64) {
    (
        d.mu_hat_2 + (d.lambda_hat_0 + d.lambda_hat_1) * z,
        d.mu_hat_1 / z + d.lambda_hat_2,
    )
}

/// `beta_{1,2}(z)`, the discriminant of `phi_-`.
pub fn beta12(d: &DerivedRates, z: f64) -> f64 {
    let (a, c) = phi_minus(d, z);
    let s = d.s_hat();
    s * s - 4.0 * a * c
}

/// `beta_{2,1}(z)`, the discriminant of `phi_+`.
pub fn beta21(d: &DerivedRates, z: f64) -> f64 {
    let (a, c) = phi_plus(d, z);
    let s = d.s_hat();
    s * s - 4.0 * a * c
}

/// Rounding slack below which a negative discriminant is read as zero.
fn disc_sqrt(beta: f64, s: f64, which: &'static str, z: f64) -> Result<f64> {
    if beta >= 0.0 {
        Ok(beta.sqrt())
    } else if beta > -1e-13 * s * s {
        Ok(0.0)
    } else {
        Err(Error::NegativeDiscriminant { which, z })
    }
}

/// Evaluates `f(z)`, defined where both discriminants are nonnegative.
pub fn f_value(d: &DerivedRates, z: f64) -> Result<f64> {
    let s = d.s_hat();
    let l0 = d.lambda_hat_0;
    let r12 = disc_sqrt(beta12(d, z), s, "beta_12", z)?;
    let r21 = disc_sqrt(beta21(d, z), s, "beta_21", z)?;
    let a = d.mu_hat_2 / z + d.lambda_hat_1;
    let b = d.mu_hat_1 / z + d.lambda_hat_2;
    Ok((a + l0 / 2.0) / (2.0 * a) * (1.0 - r12 / s) + (b + l0 / 2.0) / (2.0 * b) * (1.0 - r21 / s))
}

/// Largest `z > 0` at which both discriminants are still nonnegative.
///
/// `z beta(z)` is a concave quadratic in `z` whose larger root is the edge
/// of the admissible interval.
pub fn discriminant_limit(d: &DerivedRates) -> f64 {
    let s = d.s_hat();
    let edge = |(a0, a1): (f64, f64), (c0, c1): (f64, f64)| {
        // (a0 + a1 z)(c0 / z + c1): z beta = -4 a1 c1 z^2 + (S^2 - 4(a0 c1 + a1 c0)) z - 4 a0 c0
        let qa = -4.0 * a1 * c1;
        let qb = s * s - 4.0 * (a0 * c1 + a1 * c0);
        let qc = -4.0 * a0 * c0;
        if qa == 0.0 {
            return if qb > 0.0 { f64::INFINITY } else { -qc / qb };
        }
        let disc = (qb * qb - 4.0 * qa * qc).max(0.0).sqrt();
        // qa < 0: the larger root uses the minus sign.
        (-qb - disc) / (2.0 * qa)
    };
    let z12 = edge(
        (d.mu_hat_1, d.lambda_hat_0 + d.lambda_hat_2),
        (d.mu_hat_2, d.lambda_hat_1),
    );
    let z21 = edge(
        (d.mu_hat_2, d.lambda_hat_0 + d.lambda_hat_1),
        (d.mu_hat_1, d.lambda_hat_2),
    );
    z12.min(z21)
}

/// Root of `f(z) = 1` in `(1, z_max]`.
///
/// `f - 1` vanishes at `z = 1`, dips below zero and crosses back up at the
/// sought root, so the bracket is the last negative-to-nonnegative sign
/// change on a scan of the admissible interval, refined by bisection.
pub fn solve_f(p: &SystemParams) -> Result<f64> {
    let d = p.derived();
    if d.rho >= 1.0 {
        return Err(Error::Unstable { rho: d.rho });
    }
    let z_max = discriminant_limit(&d) * (1.0 - 1e-14);
    let z_lo = 1.0 + 1e-9;
    let hi = if z_max.is_finite() { z_max } else { 4.0 * d.rho.powi(-2) };
    if hi <= z_lo {
        return Err(Error::RootNotFound { z_max });
    }
    let g = |z: f64| f_value(&d, z).map(|v| v - 1.0);

    const SCAN: usize = 512;
    let mut bracket = None;
    let mut prev = (z_lo, g(z_lo)?);
    for k in 1..=SCAN {
        let z = z_lo + (hi - z_lo) * k as f64 / SCAN as f64;
        let gz = g(z)?;
        if prev.1 < 0.0 && gz >= 0.0 {
            bracket = Some((prev.0, z));
        }
        prev = (z, gz);
    }
    let (mut a, mut b) = bracket.ok_or(Error::RootNotFound { z_max })?;
    for _ in 0..200 {
        if b - a <= 1e-12 * b {
            break;
        }
        let mid = 0.5 * (a + b);
        if g(mid)? < 0.0 {
            a = mid;
        } else {
            b = mid;
        }
    }
    Ok(0.5 * (a + b))
}

/// Roots of `phi_-` and `phi_+` at `z`, each ordered min <= max.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QuadraticRoots {
    pub eta_min: f64,
    pub eta_max: f64,
    pub theta_min: f64,
    pub theta_max: f64,
}

pub fn quadratic_roots(p: &SystemParams, z: f64) -> Result<QuadraticRoots> {
    let d = p.derived();
    let s = d.s_hat();
    let roots = |(a, c): (f64, f64), beta: f64, which| -> Result<(f64, f64)> {
        let r = disc_sqrt(beta, s, which, z)?;
        // The larger root has no cancellation; the smaller follows from Vieta.
        let big = (s + r) / (2.0 * a);
        Ok((c / (a * big), big))
    };
    let (eta_min, eta_max) = roots(phi_minus(&d, z), beta12(&d, z), "beta_12")?;
    let (theta_min, theta_max) = roots(phi_plus(&d, z), beta21(&d, z), "beta_21")?;
    Ok(QuadraticRoots {
        eta_min,
        eta_max,
        theta_min,
        theta_max,
    })
}

/// Exact tail profile: `pi_{m,l}(1) ~ rho^(2m) x_l` as `m -> infinity`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DecayProfile {
    pub rho: f64,
    pub z_star: f64,
    pub decay_rate: f64,
    pub eta_min: f64,
    pub eta_max: f64,
    pub theta_min: f64,
    pub theta_max: f64,
    pub x0: f64,
    /// Geometric ratio of `x_l` for `l <= -1`.
    pub ratio_neg: f64,
    /// Geometric ratio of `x_l` for `l >= 1`.
    pub ratio_pos: f64,
    pub prefactor_neg: f64,
    pub prefactor_pos: f64,
    /// `mu / (lambda + alpha1 + alpha2)`, idle over busy.
    pub idle_factor: f64,
    pub strongly_balanced: bool,
    /// Largest scaled residual of the invariant-vector equations over `|l| <= 10`.
    pub residual: f64,
}

impl DecayProfile {
    /// `x_l(rho^-2)`.
    pub fn x(&self, l: i64) -> f64 {
        match l {
            0 => self.x0,
            l if l < 0 => self.prefactor_neg * self.x0 * self.ratio_neg.powf(-l as f64),
            l => self.prefactor_pos * self.x0 * self.ratio_pos.powf(l as f64),
        }
    }

    /// `x_l / rho^|l|`, finite where `x_l` itself underflows.
    pub fn x_scaled(&self, l: i64) -> f64 {
        let n = l.unsigned_abs() as f64;
        match l {
            0 => self.x0,
            l if l < 0 => self.prefactor_neg * self.x0 * (self.ratio_neg / self.rho).powf(n),
            _ => self.prefactor_pos * self.x0 * (self.ratio_pos / self.rho).powf(n),
        }
    }
}

/// Residual of `x S = x A(z)` in the hatted scale, `|l| <= span`, for a
/// candidate invariant vector `x`.
fn invariant_residual(d: &DerivedRates, z: f64, x: &dyn Fn(i64) -> f64, span: i64) -> f64 {
    let s = d.s_hat();
    let l0 = d.lambda_hat_0;
    let (a_up, a_down) = (d.mu_hat_1 + (l0 + d.lambda_hat_2) * z, d.mu_hat_2 / z + d.lambda_hat_1);
    let (b_down, b_up) = (d.mu_hat_2 + (l0 + d.lambda_hat_1) * z, d.mu_hat_1 / z + d.lambda_hat_2);
    // Rate from level k to level k + step.
    let rate = |k: i64, step: i64| match (k.signum(), step) {
        (-1, -1) => a_down,
        (-1, 1) => a_up,
        (0, -1) => a_down + l0 / 2.0,
        (0, 1) => b_up + l0 / 2.0,
        (1, -1) => b_down,
        (1, 1) => b_up,
        _ => unreachable!(),
    };
    let scale = x(0).abs().max(1e-300);
    (-span..=span)
        .map(|l| {
            let inflow = x(l - 1) * rate(l - 1, 1) + x(l + 1) * rate(l + 1, -1);
            (x(l) * s - inflow).abs() / (s * scale)
        })
        .fold(0.0, f64::max)
}

pub fn decay_profile(p: &SystemParams) -> Result<DecayProfile> {
    let d = p.derived();
    if !(d.rho < 1.0 && d.rho1 < d.rho && d.rho2 < d.rho) {
        return Err(Error::NotCriterion1 {
            rho: d.rho,
            rho1: d.rho1,
            rho2: d.rho2,
        });
    }
    if !d.strongly_pooled() {
        return Err(Error::NotStronglyPooled {
            margin: d.pooling_margin(),
        });
    }
    let z_star = solve_f(p)?;
    let z = d.rho.powi(-2);
    let q = quadratic_roots(p, z)?;
    let l0 = d.lambda_hat_0;
    let (_, c_neg) = phi_minus(&d, z);
    let (_, c_pos) = phi_plus(&d, z);
    let prefactor_neg = (c_neg + l0 / 2.0) / c_neg;
    let prefactor_pos = (c_pos + l0 / 2.0) / c_pos;

    // Every root pair solves the bulk recursions; only the l = 0 row tells
    // them apart. Keep the admissible pair with the smallest residual.
    let mut best: Option<(f64, f64, f64)> = None;
    for eta in [q.eta_min, q.eta_max] {
        for th in [q.theta_min, q.theta_max] {
            if !(eta < 1.0 && th < 1.0) {
                continue;
            }
            let x = |l: i64| match l {
                0 => 1.0,
                l if l < 0 => prefactor_neg * eta.powf(-l as f64),
                l => prefactor_pos * th.powf(l as f64),
            };
            let r = invariant_residual(&d, z, &x, 10);
            if best.is_none_or(|b| r < b.2) {
                best = Some((eta, th, r));
            }
        }
    }
    let (ratio_neg, ratio_pos, residual) = best.ok_or(Error::RootNotFound { z_max: z })?;
    if residual > 1e-10 {
        return Err(Error::RootNotFound { z_max: z });
    }
    Ok(DecayProfile {
        rho: d.rho,
        z_star,
        decay_rate: d.rho * d.rho,
        eta_min: q.eta_min,
        eta_max: q.eta_max,
        theta_min: q.theta_min,
        theta_max: q.theta_max,
        x0: 1.0,
        ratio_neg,
        ratio_pos,
        prefactor_neg,
        prefactor_pos,
        idle_factor: p.mu / p.idle_exit(),
        strongly_balanced: d.strongly_balanced(),
        residual,
    })
}

/// `rho^(2m) x_l`, times the idle factor when `server == 0`.
pub fn tail_evaluate(profile: &DecayProfile, m: u32, l: i64, server: u8) -> f64 {
    let busy = profile.decay_rate.powf(m as f64) * profile.x(l);
    if server == 0 {
        busy * profile.idle_factor
    } else {
        busy
    }
}

/// Scaled marginal constant `(1 / (1 - mu/theta)) sum_l x_l`.
///
/// The limit exchange behind this constant is unproven, so the value is
/// tagged conjectural.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MarginalSum {
    pub value: f64,
    pub sum_x: f64,
    pub conjectural: bool,
}

pub fn marginal_sum(p: &SystemParams, profile: &DecayProfile) -> Result<MarginalSum> {
    if !profile.strongly_balanced {
        return Err(Error::NotStronglyBalanced);
    }
    let (rn, rp) = (profile.ratio_neg, profile.ratio_pos);
    let sum_x = profile.x0
        * (1.0 + profile.prefactor_neg * rn / (1.0 - rn) + profile.prefactor_pos * rp / (1.0 - rp));
    Ok(MarginalSum {
        value: sum_x / (1.0 - p.mu / p.theta()),
        sum_x,
        conjectural: true,
    })
}

/// CSV rows `m,l,server,value` for `0 <= m <= m_max`, `l` in `l_range`.
pub fn tail_table_csv(profile: &DecayProfile, m_max: u32, l_range: (i64, i64)) -> String {
    let mut out = String::from("m,l,server,value\n");
    for m in 0..=m_max {
        for l in l_range.0..=l_range.1 {
            for server in [0u8, 1] {
                let v = tail_evaluate(profile, m, l, server);
                out.push_str(&format!("{m},{l},{server},{v}\n"));
            }
        }
    }
    out
}
