//! Stationary distribution of the original chain on a finite grid
//! `0 <= i, j <= n_max`, used as ground truth for the closed forms.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::SystemParams;

/// Index of state `(i, j, k)` on a grid with side `n_max + 1`.
pub fn state_index(n_max: usize, i: usize, j: usize, k: usize) -> usize {
    ((i * (n_max + 1)) + j) * 2 + k
}

/// Sparse CTMC generator stored by rows.
#[derive(Debug, Clone)]
pub struct Generator {
    pub n_max: usize,
    /// Off-diagonal rates `(target, rate)` per state.
    pub rows: Vec<Vec<(usize, f64)>>,
    pub diagonal: Vec<f64>,
}

impl Generator {
    pub fn n_states(&self) -> usize {
        self.rows.len()
    }

    /// `max_s |(pi Q)_s|`.
    pub fn residual(&self, pi: &[f64]) -> f64 {
        let mut flow: Vec<f64> = pi.iter().zip(&self.diagonal).map(|(p, d)| p * d).collect();
        for (s, row) in self.rows.iter().enumerate() {
            for &(t, r) in row {
                flow[t] += pi[s] * r;
            }
        }
        flow.into_iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    pub fn max_row_sum(&self) -> f64 {
        self.rows
            .iter()
            .zip(&self.diagonal)
            .map(|(row, d)| (row.iter().map(|e| e.1).sum::<f64>() + d).abs())
            .fold(0.0, f64::max)
    }

    pub fn rate(&self, from: usize, to: usize) -> f64 {
        if from == to {
            return self.diagonal[from];
        }
        self.rows[from].iter().filter(|e| e.0 == to).map(|e| e.1).sum()
    }
}

/// Generator of the chain on the grid. Blocked arrivals that would push an
/// orbit past `n_max` are dropped (reflecting truncation).
pub fn build_generator(p: &SystemParams, n_max: usize) -> Generator {
    let n_states = 2 * (n_max + 1) * (n_max + 1);
    let mut rows = vec![Vec::new(); n_states];
    let lambda = p.total_arrival();
    let idx = |i, j, k| state_index(n_max, i, j, k);
    for i in 0..=n_max {
        for j in 0..=n_max {
            let idle = &mut rows[idx(i, j, 0)];
            idle.push((idx(i, j, 1), lambda));
            if i > 0 {
                idle.push((idx(i - 1, j, 1), p.alpha1));
            }
            if j > 0 {
                idle.push((idx(i, j - 1, 1), p.alpha2));
            }

            let (mut to1, mut to2) = (p.lambda1, p.lambda2);
            match i.cmp(&j) {
                std::cmp::Ordering::Less => to1 += p.lambda0,
                std::cmp::Ordering::Greater => to2 += p.lambda0,
                std::cmp::Ordering::Equal => {
                    to1 += p.lambda0 / 2.0;
                    to2 += p.lambda0 / 2.0;
                }
            }
            let busy = &mut rows[idx(i, j, 1)];
            busy.push((idx(i, j, 0), p.mu));
            if i < n_max && to1 > 0.0 {
                busy.push((idx(i + 1, j, 1), to1));
            }
            if j < n_max && to2 > 0.0 {
                busy.push((idx(i, j + 1, 1), to2));
            }
        }
    }
    let diagonal = rows.iter().map(|r| -r.iter().map(|e| e.1).sum::<f64>()).collect();
    Generator { n_max, rows, diagonal }
}

/// Stationary vector by GTH state reduction on the banded generator.
///
/// Every update adds nonnegative quantities, so small probabilities keep
/// full relative accuracy; states are eliminated from the far corner
/// toward the origin.
pub fn gth_solve(g: &Generator) -> Result<Vec<f64>> {
    let n = g.n_states();
    let w = 2 * (g.n_max + 1) + 1;
    let width = 2 * w + 1;
    let mut band = vec![0.0; n * width];
    let at = |i: usize, j: usize| i * width + (j + w - i);
    for (s, row) in g.rows.iter().enumerate() {
        for &(t, r) in row {
            if t.abs_diff(s) > w {
                return Err(Error::Singular("transition outside the band"));
            }
            band[at(s, t)] += r;
        }
    }
    let mut out_rate = vec![0.0; n];
    for k in (1..n).rev() {
        let lo = k.saturating_sub(w);
        let s: f64 = (lo..k).map(|j| band[at(k, j)]).sum();
        if !(s > 0.0) {
            return Err(Error::Singular("reducible truncation (state with no path toward the origin)"));
        }
        out_rate[k] = s;
        for i in lo..k {
            let q_ik = band[at(i, k)];
            if q_ik == 0.0 {
                continue;
            }
            let f = q_ik / s;
            for j in lo..k {
                if j != i {
                    let q_kj = band[at(k, j)];
                    if q_kj != 0.0 {
                        band[at(i, j)] += f * q_kj;
                    }
                }
            }
        }
    }
    let mut pi = vec![0.0; n];
    pi[0] = 1.0;
    for k in 1..n {
        let lo = k.saturating_sub(w);
        let inflow: f64 = (lo..k).map(|i| pi[i] * band[at(i, k)]).sum();
        pi[k] = inflow / out_rate[k];
    }
    let total: f64 = pi.iter().sum();
    for x in &mut pi {
        *x /= total;
    }
    Ok(pi)
}

#[derive(Debug, Clone, Serialize)]
pub struct TruncatedSolution {
    pub n_max: usize,
    /// Probabilities indexed by [`state_index`].
    pub probs: Vec<f64>,
    /// Mass on states with `i = n_max` or `j = n_max`.
    pub mass_at_boundary: f64,
    pub residual_norm: f64,
    pub warnings: Vec<String>,
}

impl TruncatedSolution {
    pub fn p(&self, i: usize, j: usize, k: usize) -> f64 {
        self.probs[state_index(self.n_max, i, j, k)]
    }

    pub fn busy_fraction(&self) -> f64 {
        self.probs.iter().skip(1).step_by(2).sum()
    }

    /// Expectation of `g(i, j)` under the solution.
    pub fn expect(&self, g: impl Fn(usize, usize) -> f64) -> f64 {
        let n = self.n_max;
        let mut acc = 0.0;
        for i in 0..=n {
            for j in 0..=n {
                acc += g(i, j) * (self.p(i, j, 0) + self.p(i, j, 1));
            }
        }
        acc
    }

    pub fn mean_min(&self) -> f64 {
        self.expect(|i, j| i.min(j) as f64)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("i,j,k,probability\n");
        for i in 0..=self.n_max {
            for j in 0..=self.n_max {
                for k in 0..2 {
                    out.push_str(&format!("{i},{j},{k},{}\n", self.p(i, j, k)));
                }
            }
        }
        out
    }

    pub fn diagnostics_json(&self) -> serde_json::Value {
        serde_json::json!({
            "n_max": self.n_max,
            "residual_norm": self.residual_norm,
            "boundary_mass": self.mass_at_boundary,
            "busy_fraction": self.busy_fraction(),
            "mean_min": self.mean_min(),
            "warnings": self.warnings,
        })
    }
}

pub fn solve_stationary(p: &SystemParams, n_max: usize) -> Result<TruncatedSolution> {
    if n_max < 3 {
        return Err(Error::Input(format!("n_max must be at least 3, got {n_max}")));
    }
    let g = build_generator(p, n_max);
    let probs = gth_solve(&g)?;
    let residual_norm = g.residual(&probs);
    let mut mass_at_boundary = 0.0;
    for i in 0..=n_max {
        for j in 0..=n_max {
            if i == n_max || j == n_max {
                for k in 0..2 {
                    mass_at_boundary += probs[state_index(n_max, i, j, k)];
                }
            }
        }
    }
    let mut warnings = Vec::new();
    if mass_at_boundary > 1e-6 {
        warnings.push(format!(
            "boundary mass {mass_at_boundary:.3e} exceeds 1e-6; increase n_max"
        ));
    }
    Ok(TruncatedSolution {
        n_max,
        probs,
        mass_at_boundary,
        residual_norm,
        warnings,
    })
}

/// The solution relabelled by `(m, l) = (min(i, j), j - i)`.
#[derive(Debug, Clone, Copy)]
pub struct MinDiffView<'a> {
    sol: &'a TruncatedSolution,
}

impl MinDiffView<'_> {
    /// `pi_{m,l}(k)`, or `None` outside the grid.
    pub fn get(&self, m: usize, l: i64, k: usize) -> Option<f64> {
        let (i, j) = if l >= 0 {
            (m, m + l as usize)
        } else {
            (m + l.unsigned_abs() as usize, m)
        };
        (i <= self.sol.n_max && j <= self.sol.n_max).then(|| self.sol.p(i, j, k))
    }

    /// All cells as `(m, l, k, probability)`.
    pub fn entries(&self) -> Vec<(usize, i64, usize, f64)> {
        let n = self.sol.n_max;
        let mut out = Vec::with_capacity(self.sol.probs.len());
        for i in 0..=n {
            for j in 0..=n {
                for k in 0..2 {
                    out.push((i.min(j), j as i64 - i as i64, k, self.sol.p(i, j, k)));
                }
            }
        }
        out
    }
}

pub fn transform_min_diff(sol: &TruncatedSolution) -> MinDiffView<'_> {
    MinDiffView { sol }
}
