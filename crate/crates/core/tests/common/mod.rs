#![allow(dead_code)]

use gjsoq::{transition_blocks, RegionLabel, SystemParams};
use nalgebra::DMatrix;

pub fn table1() -> SystemParams {
    SystemParams::new(0.15, 0.05, 0.01, 0.44, 0.25, 0.1).unwrap()
}

/// Censored kernel on an `n x n` grid by explicit block algebra:
/// `P11 + P10 (I - P00)^-1 P01` over busy/idle states. Arrivals leaving
/// the grid are dropped, so only rows with `i, j < n - 1` are exact.
pub fn block_censored(p: &SystemParams, n: usize) -> DMatrix<f64> {
    let cells = n * n;
    let at = |i: usize, j: usize| i * n + j;
    let mut p11 = DMatrix::<f64>::zeros(cells, cells);
    let mut p10 = DMatrix::<f64>::zeros(cells, cells);
    let mut p00 = DMatrix::<f64>::zeros(cells, cells);
    let mut p01 = DMatrix::<f64>::zeros(cells, cells);
    for i in 0..n {
        for j in 0..n {
            for b in transition_blocks(p, RegionLabel::of(i, j)) {
                let (ti, tj) = (i as i64 + b.direction.0 as i64, j as i64 + b.direction.1 as i64);
                if ti < 0 || tj < 0 || ti >= n as i64 || tj >= n as i64 {
                    continue;
                }
                let (s, t) = (at(i, j), at(ti as usize, tj as usize));
                p00[(s, t)] += b.matrix[0][0];
                p01[(s, t)] += b.matrix[0][1];
                p10[(s, t)] += b.matrix[1][0];
                p11[(s, t)] += b.matrix[1][1];
            }
        }
    }
    let fundamental = DMatrix::<f64>::identity(cells, cells) - p00;
    let excursion = fundamental.lu().solve(&p01).expect("I - P00 is invertible");
    p11 + p10 * excursion
}

/// Largest deviation between the closed-form kernel and [`block_censored`]
/// over rows with `i, j <= n - 2`.
pub fn kernel_vs_blocks(p: &SystemParams, n: usize) -> f64 {
    let pe = block_censored(p, n);
    let kernel = gjsoq::censored::censored_kernel(p);
    let at = |i: usize, j: usize| i * n + j;
    let mut worst = 0.0f64;
    for i in 0..n - 1 {
        for j in 0..n - 1 {
            let region = RegionLabel::of(i, j);
            let mut expected = vec![0.0; n * n];
            for e in kernel.row(region) {
                let (ti, tj) = ((i as i64 + e.di as i64) as usize, (j as i64 + e.dj as i64) as usize);
                expected[at(ti, tj)] += e.prob;
            }
            for t in 0..n * n {
                worst = worst.max((pe[(at(i, j), t)] - expected[t]).abs());
            }
        }
    }
    worst
}

/// Largest deviation between the half-plane kernel and the censored kernel
/// pushed through `(i, j) -> (min(i, j), j - i)` on `0 <= i, j < n`.
pub fn halfplane_vs_transform(p: &SystemParams, n: usize) -> f64 {
    use gjsoq::censored::{halfplane_kernel, Step, Zone};
    use std::collections::HashMap;
    let kernel = gjsoq::censored::censored_kernel(p);
    let half = halfplane_kernel(p);
    let ml = |i: i64, j: i64| (i.min(j), j - i);
    let mut worst = 0.0f64;
    for i in 0..n as i64 {
        for j in 0..n as i64 {
            let (m, l) = ml(i, j);
            let zone = Zone::of(m as usize, l);
            let mut pushed: HashMap<Step, f64> = HashMap::new();
            for e in kernel.row(RegionLabel::of(i as usize, j as usize)) {
                let (m2, l2) = ml(i + e.di as i64, j + e.dj as i64);
                let step = Step {
                    dm: (m2 - m) as i8,
                    dl: (l2 - l) as i8,
                };
                *pushed.entry(step).or_default() += e.prob;
            }
            for (step, v) in &pushed {
                worst = worst.max((half.prob(zone, *step) - v).abs());
            }
            for (step, v) in half.row(zone) {
                worst = worst.max((pushed.get(&step).copied().unwrap_or(0.0) - v).abs());
            }
        }
    }
    worst
}
