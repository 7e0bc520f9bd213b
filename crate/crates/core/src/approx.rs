//! Closed-form product-type approximations of the stationary distribution,
//! valid when one orbit is long, and the anti-diagonal ratio curves built
//! from them.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::SystemParams;

/// Anything that approximates `p_{i,j}(server)` up to a constant.
pub trait Approximation {
    /// Unnormalized value divided by `rho^(i+j)`. Keeps far cells finite.
    fn scaled_value(&self, i: u32, j: u32, server: u8) -> f64;
    fn rho(&self) -> f64;
    fn normalization(&self) -> f64;

    /// `c * p_{i,j}(server)`.
    fn value(&self, i: u32, j: u32, server: u8) -> f64 {
        self.normalization() * self.scaled_value(i, j, server) * self.rho().powf((i + j) as f64)
    }
}

fn idle_factor(p: &SystemParams, i: u32, j: u32) -> f64 {
    let a1 = if i > 0 { p.alpha1 } else { 0.0 };
    let a2 = if j > 0 { p.alpha2 } else { 0.0 };
    p.mu / (p.total_arrival() + a1 + a2)
}

/// Boundary-correction coefficient solving the `m = 0` equation of the
/// branch with geometric ratios `x_plus` (dominant) and `x_minus`.
///
/// `k1` is the service flow from the idle boundary, `k0` collects the
/// remaining boundary rates; both are in the hatted scale.
fn boundary_correction(k1: f64, k0: f64, x_plus: f64, x_minus: f64) -> f64 {
    (k1 * x_plus - k0) / (k0 - k1 * x_minus)
}

/// Symmetric case `lambda1 = lambda2`, `alpha1 = alpha2`.
#[derive(Debug, Clone, Serialize)]
pub struct SymmetricApprox {
    pub params: SystemParams,
    pub lambda_hat: f64,
    pub lambda_hat_0: f64,
    pub lambda_hat_plus: f64,
    pub mu_hat: f64,
    pub rho: f64,
    pub delta: f64,
    pub x_plus: f64,
    pub x_minus: f64,
    pub a_minus: f64,
    pub diagonal: f64,
    pub c: f64,
}

impl SymmetricApprox {
    pub fn new(p: &SystemParams) -> Result<Self> {
        if !p.is_symmetric(1e-12) {
            return Err(Error::NotSymmetric);
        }
        let d = p.derived();
        let (lh, lh0, lhp, mh) = (d.lambda_hat, d.lambda_hat_0, d.lambda_hat_1, d.mu_hat_1);
        if lh >= 2.0 * mh {
            return Err(Error::Unstable { rho: d.rho });
        }
        let rho = lh / (2.0 * mh);
        let delta = (lh * lh + 4.0 * lhp * mh) / (lh * lh + 4.0 * (lh0 + lhp) * mh);
        let x_plus = lh * (lh * lh + 4.0 * mh * (lh0 + lhp)) / (2.0 * mh * (lh * lh + 4.0 * mh * lhp));
        let x_minus = (lh0 + lhp) / (mh * x_plus);

        let lambda = d.lambda;
        let alpha = p.alpha1;
        let w = rho * rho / x_plus;
        let k1 = mh * (lambda + alpha) / (lambda + 2.0 * alpha);
        let k0 = lambda * (lambda + alpha) + mh - mh * w - p.lambda1 * (lambda + alpha) / w;
        let a_minus = boundary_correction(k1, k0, x_plus, x_minus);
        Ok(SymmetricApprox {
            params: *p,
            lambda_hat: lh,
            lambda_hat_0: lh0,
            lambda_hat_plus: lhp,
            mu_hat: mh,
            rho,
            delta,
            x_plus,
            x_minus,
            a_minus,
            diagonal: (lh * lh + 4.0 * lhp * mh) / (lh * (lh + 2.0 * mh)),
            c: 1.0,
        })
    }

    /// `1 + A_-(x_-/x_+)^n`, the boundary correction at distance `n` from the axis.
    pub fn correction(&self, n: u32) -> f64 {
        1.0 + self.a_minus * (self.x_minus / self.x_plus).powf(n as f64)
    }
}

impl Approximation for SymmetricApprox {
    fn scaled_value(&self, i: u32, j: u32, server: u8) -> f64 {
        let busy = if i == j {
            self.diagonal
        } else {
            let (lo, hi) = (i.min(j), i.max(j));
            self.delta.powf((hi - lo) as f64) * self.correction(lo)
        };
        if server == 0 {
            busy * idle_factor(&self.params, i, j)
        } else {
            busy
        }
    }

    fn rho(&self) -> f64 {
        self.rho
    }

    fn normalization(&self) -> f64 {
        self.c
    }
}

/// General case; requires `rho < 1` and strong pooling.
#[derive(Debug, Clone, Serialize)]
pub struct AsymmetricApprox {
    pub params: SystemParams,
    pub rho: f64,
    /// Off-diagonal geometric factor for `j > i`.
    pub delta_plus: f64,
    /// Off-diagonal geometric factor for `i > j`.
    pub delta_minus: f64,
    pub x_plus: f64,
    pub x_minus: f64,
    pub y_plus: f64,
    pub y_minus: f64,
    pub a_minus: f64,
    pub b_minus: f64,
    pub eps_plus: f64,
    pub eps_minus: f64,
    pub diagonal: f64,
    pub c: f64,
    pub warnings: Vec<String>,
}

impl AsymmetricApprox {
    pub fn new(p: &SystemParams) -> Result<Self> {
        let d = p.derived();
        if d.rho >= 1.0 {
            return Err(Error::Unstable { rho: d.rho });
        }
        if !d.strongly_pooled() {
            return Err(Error::NotStronglyPooled {
                margin: d.pooling_margin(),
            });
        }
        let (lh, lh0, lh1, lh2, mh1, mh2) = (
            d.lambda_hat,
            d.lambda_hat_0,
            d.lambda_hat_1,
            d.lambda_hat_2,
            d.mu_hat_1,
            d.mu_hat_2,
        );
        let rho = d.rho;
        let r2 = rho * rho;
        let g1 = lh2 + r2 * mh1;
        let g2 = lh1 + r2 * mh2;
        let delta_plus = g1 / (lh0 + lh1 + r2 * mh2);
        let delta_minus = g2 / (lh0 + lh2 + r2 * mh1);
        let x_plus = rho / delta_plus;
        let y_plus = rho / delta_minus;
        let x_minus = (lh0 + lh1) * g1 / (mh1 * rho * (lh0 + lh1 + r2 * mh2));
        let y_minus = (lh0 + lh2) * g2 / (mh2 * rho * (lh0 + lh2 + r2 * mh1));
        let eps_plus = g1 * (lh0 + 2.0 * lh1 + 2.0 * mh2 * r2) / (2.0 * r2);
        let eps_minus = g2 * (lh0 + 2.0 * lh2 + 2.0 * mh1 * r2) / (2.0 * r2);
        let diagonal = (g2 * (eps_plus / eps_minus).sqrt() + g1 * (eps_minus / eps_plus).sqrt()) / (lh * (1.0 + rho));

        let lambda = d.lambda;
        let s = p.idle_exit();
        let (l0, l1, l2, a1, a2) = (p.lambda0, p.lambda1, p.lambda2, p.alpha1, p.alpha2);
        let e2 = lambda + a2;
        let a_minus = (x_plus * x_plus * (mh1 * e2 / s + l2 * e2 / r2) - x_plus * (lambda * e2 + mh2) + r2 * mh2)
            / (x_plus * (lambda * e2 + mh2) - ((l0 + l1) * e2 + r2 * mh2) - l2 * e2 * x_plus * x_plus / r2);
        let e1 = lambda + a1;
        let b_minus = (y_plus * y_plus * (mh2 * e1 / s + l1 * e1 / r2) - y_plus * (lambda * e1 + mh1) + r2 * mh1)
            / (y_plus * (lambda * e1 + mh1) - ((l0 + l2) * e1 + r2 * mh1) - l1 * e1 * y_plus * y_plus / r2);

        let mut warnings = Vec::new();
        if !(x_minus < x_plus) {
            warnings.push(format!("x_minus/x_plus = {} >= 1: boundary correction does not decay", x_minus / x_plus));
        }
        if !(y_minus < y_plus) {
            warnings.push(format!("y_minus/y_plus = {} >= 1: boundary correction does not decay", y_minus / y_plus));
        }
        Ok(AsymmetricApprox {
            params: *p,
            rho,
            delta_plus,
            delta_minus,
            x_plus,
            x_minus,
            y_plus,
            y_minus,
            a_minus,
            b_minus,
            eps_plus,
            eps_minus,
            diagonal,
            c: 1.0,
            warnings,
        })
    }

    /// `1 + A_-(x_-/x_+)^i` for cells above the diagonal.
    pub fn correction_upper(&self, i: u32) -> f64 {
        1.0 + self.a_minus * (self.x_minus / self.x_plus).powf(i as f64)
    }

    /// `1 + B_-(y_-/y_+)^j` for cells below the diagonal.
    pub fn correction_lower(&self, j: u32) -> f64 {
        1.0 + self.b_minus * (self.y_minus / self.y_plus).powf(j as f64)
    }
}

impl Approximation for AsymmetricApprox {
    fn scaled_value(&self, i: u32, j: u32, server: u8) -> f64 {
        let busy = match i.cmp(&j) {
            std::cmp::Ordering::Less => {
                (self.eps_minus / self.eps_plus).sqrt()
                    * self.delta_plus.powf((j - i) as f64)
                    * self.correction_upper(i)
            }
            std::cmp::Ordering::Equal => self.diagonal,
            std::cmp::Ordering::Greater => {
                (self.eps_plus / self.eps_minus).sqrt()
                    * self.delta_minus.powf((i - j) as f64)
                    * self.correction_lower(j)
            }
        };
        if server == 0 {
            busy * idle_factor(&self.params, i, j)
        } else {
            busy
        }
    }

    fn rho(&self) -> f64 {
        self.rho
    }

    fn normalization(&self) -> f64 {
        self.c
    }
}

/// `c * p_{i,j}(server)` from the symmetric formulas.
pub fn approx_symmetric(p: &SystemParams, i: u32, j: u32, server: u8) -> Result<f64> {
    Ok(SymmetricApprox::new(p)?.value(i, j, server))
}

/// `c * p_{i,j}(server)` from the general formulas.
pub fn approx_asymmetric(p: &SystemParams, i: u32, j: u32, server: u8) -> Result<f64> {
    Ok(AsymmetricApprox::new(p)?.value(i, j, server))
}

/// The symmetric evaluator on symmetric input, the general one otherwise.
pub fn applicable(p: &SystemParams) -> Result<Box<dyn Approximation + Send + Sync>> {
    if p.is_symmetric(1e-12) {
        let d = p.derived();
        if !d.strongly_pooled() {
            return Err(Error::NotStronglyPooled {
                margin: d.pooling_margin(),
            });
        }
        Ok(Box::new(SymmetricApprox::new(p)?))
    } else {
        Ok(Box::new(AsymmetricApprox::new(p)?))
    }
}

/// `Pr(k) / rho^k` with `Pr(k)` the total mass on the anti-diagonal `i + j = k`.
pub fn antidiagonal_scaled(a: &dyn Approximation, k: u32) -> f64 {
    (0..=k)
        .map(|i| a.scaled_value(i, k - i, 0) + a.scaled_value(i, k - i, 1))
        .sum()
}

/// `(k, Pr(k+1)/Pr(k))` for `k = 0..=k_max`. The limit is `rho`.
pub fn ratio_curve(p: &SystemParams, k_max: u32) -> Result<Vec<(u32, f64)>> {
    let a = applicable(p)?;
    let rho = a.rho();
    let mut prev = antidiagonal_scaled(a.as_ref(), 0);
    let mut out = Vec::with_capacity(k_max as usize + 1);
    for k in 0..=k_max {
        let next = antidiagonal_scaled(a.as_ref(), k + 1);
        out.push((k, rho * next / prev));
        prev = next;
    }
    Ok(out)
}

pub fn ratio_curve_csv(curve: &[(u32, f64)]) -> String {
    let mut out = String::from("k,ratio\n");
    for (k, r) in curve {
        out.push_str(&format!("{k},{r}\n"));
    }
    out
}

/// One exported grid cell.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GridCell {
    pub i: u32,
    pub j: u32,
    pub server: u8,
    pub value: f64,
    pub asymptotic: bool,
}

/// Evaluates `0 <= i, j <= n` for both server states. Cells with
/// `max(i, j) < regime_threshold` are tagged as outside the asymptotic
/// regime. With `normalize`, values are divided by their grid total.
pub fn evaluate_grid(a: &dyn Approximation, n: u32, regime_threshold: u32, normalize: bool) -> Vec<GridCell> {
    let mut cells = Vec::with_capacity(2 * (n as usize + 1).pow(2));
    for i in 0..=n {
        for j in 0..=n {
            for server in [0u8, 1] {
                cells.push(GridCell {
                    i,
                    j,
                    server,
                    value: a.value(i, j, server),
                    asymptotic: i.max(j) >= regime_threshold,
                });
            }
        }
    }
    if normalize {
        let total: f64 = cells.iter().map(|c| c.value).sum();
        for c in &mut cells {
            c.value /= total;
        }
    }
    cells
}

pub fn grid_csv(cells: &[GridCell]) -> String {
    let mut out = String::from("i,j,server,value,regime_tag\n");
    for c in cells {
        let tag = if c.asymptotic { "asymptotic" } else { "outside_asymptotic_regime" };
        out.push_str(&format!("{},{},{},{},{}\n", c.i, c.j, c.server, c.value, tag));
    }
    out
}

/// Cells whose boundary-corrected value is not positive.
pub fn positivity_violations(cells: &[GridCell]) -> Vec<(u32, u32, u8)> {
    cells
        .iter()
        .filter(|c| !(c.value > 0.0))
        .map(|c| (c.i, c.j, c.server))
        .collect()
}
