//! One-step kernels of the chain observed only at busy epochs, in the
//! original `(i, j)` coordinates and in the half-plane coordinates
//! `(m, l) = (min(i, j), j - i)`.

use serde::Serialize;

use crate::model::{RegionLabel, SystemParams};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KernelEntry {
    pub region: RegionLabel,
    pub di: i8,
    pub dj: i8,
    pub prob: f64,
}

/// Region-wise transition probabilities of the censored chain.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CensoredKernel {
    pub entries: Vec<KernelEntry>,
}

impl CensoredKernel {
    pub fn row(&self, region: RegionLabel) -> impl Iterator<Item = &KernelEntry> {
        self.entries.iter().filter(move |e| e.region == region)
    }

    /// Probability of the step `(di, dj)` from `region`; zero if absent.
    pub fn prob(&self, region: RegionLabel, di: i8, dj: i8) -> f64 {
        self.row(region)
            .find(|e| e.di == di && e.dj == dj)
            .map_or(0.0, |e| e.prob)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("region,di,dj,probability\n");
        for e in &self.entries {
            out.push_str(&format!("{},{},{},{}\n", e.region.name(), e.di, e.dj, e.prob));
        }
        out
    }
}

pub fn censored_kernel(p: &SystemParams) -> CensoredKernel {
    use RegionLabel::*;
    let d = p.derived();
    let (l0, l1, l2, mu, a1, a2) = (p.lambda0, p.lambda1, p.lambda2, p.mu, p.alpha1, p.alpha2);
    let lambda = d.lambda;
    let s = p.idle_exit();
    let theta = p.theta();
    let (mh1, mh2) = (d.mu_hat_1, d.mu_hat_2);

    let mut entries = Vec::new();
    let mut push = |region, rows: &[((i8, i8), f64)]| {
        for &((di, dj), v) in rows {
            entries.push(KernelEntry {
                region,
                di,
                dj,
                prob: v / theta,
            });
        }
    };
    let interior = |to1: f64, to2: f64| {
        [
            ((1, 0), to1),
            ((0, 1), to2),
            ((-1, 0), mh1 / s),
            ((0, -1), mh2 / s),
            ((0, 0), a1 + a2 + lambda * mu / s),
        ]
    };
    push(R1, &interior(l1, l0 + l2));
    push(R2, &interior(l0 + l1, l2));
    push(D, &interior(l0 / 2.0 + l1, l0 / 2.0 + l2));
    push(
        H,
        &[
            ((1, 0), l1),
            ((0, 1), l0 + l2),
            ((-1, 0), mh1 / (lambda + a1)),
            ((0, 0), a1 + a2 + lambda * mu / (lambda + a1)),
        ],
    );
    push(
        V,
        &[
            ((1, 0), l0 + l1),
            ((0, 1), l2),
            ((0, -1), mh2 / (lambda + a2)),
            ((0, 0), a1 + a2 + lambda * mu / (lambda + a2)),
        ],
    );
    push(
        Origin,
        &[
            ((1, 0), l1 + l0 / 2.0),
            ((0, 1), l2 + l0 / 2.0),
            ((0, 0), a1 + a2 + mu),
        ],
    );
    CensoredKernel { entries }
}

/// Zones of the half-plane walk in `(m, l)` coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Zone {
    /// `m >= 1`, `l <= -1`
    Minus,
    /// `m >= 1`, `l >= 1`
    Plus,
    /// `m >= 1`, `l = 0`
    Diagonal,
    /// `m = 0`, `l < 0`
    BoundaryMinus,
    /// `m = 0`, `l > 0`
    BoundaryPlus,
    /// `m = 0`, `l = 0`
    Origin,
}

impl Zone {
    pub const ALL: [Zone; 6] = [
        Zone::Minus,
        Zone::Plus,
        Zone::Diagonal,
        Zone::BoundaryMinus,
        Zone::BoundaryPlus,
        Zone::Origin,
    ];

    pub fn of(m: usize, l: i64) -> Self {
        match (m, l.signum()) {
            (0, -1) => Zone::BoundaryMinus,
            (0, 1) => Zone::BoundaryPlus,
            (0, _) => Zone::Origin,
            (_, -1) => Zone::Minus,
            (_, 1) => Zone::Plus,
            _ => Zone::Diagonal,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Zone::Minus => "-",
            Zone::Plus => "+",
            Zone::Diagonal => "2",
            Zone::BoundaryMinus => "1-",
            Zone::BoundaryPlus => "1+",
            Zone::Origin => "0",
        }
    }
}

/// A half-plane step: change of the minimum `dm` and of the difference `dl`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub struct Step {
    pub dm: i8,
    pub dl: i8,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HalfPlaneKernel {
    pub entries: Vec<(Zone, Step, f64)>,
}

impl HalfPlaneKernel {
    pub fn prob(&self, zone: Zone, step: Step) -> f64 {
        self.entries
            .iter()
            .find(|(z, s, _)| *z == zone && *s == step)
            .map_or(0.0, |e| e.2)
    }

    pub fn row(&self, zone: Zone) -> impl Iterator<Item = (Step, f64)> + '_ {
        self.entries.iter().filter(move |e| e.0 == zone).map(|e| (e.1, e.2))
    }
}

pub fn halfplane_kernel(p: &SystemParams) -> HalfPlaneKernel {
    let d = p.derived();
    let (l0, l1, l2, mu, a1, a2) = (p.lambda0, p.lambda1, p.lambda2, p.mu, p.alpha1, p.alpha2);
    let lambda = d.lambda;
    let s = p.idle_exit();
    let theta = p.theta();
    let (mh1, mh2) = (d.mu_hat_1, d.mu_hat_2);
    let st = |dm, dl| Step { dm, dl };
    let stay = a1 + a2 + lambda * mu / s;

    let table: [(Zone, Vec<(Step, f64)>); 6] = [
        (
            Zone::Minus,
            vec![
                (st(0, -1), l1),
                (st(-1, -1), mh2 / s),
                (st(0, 1), mh1 / s),
                (st(1, 1), l0 + l2),
                (st(0, 0), stay),
            ],
        ),
        (
            Zone::Plus,
            vec![
                (st(0, 1), l2),
                (st(0, -1), mh2 / s),
                (st(-1, 1), mh1 / s),
                (st(1, -1), l0 + l1),
                (st(0, 0), stay),
            ],
        ),
        (
            Zone::Diagonal,
            vec![
                (st(0, 1), l2 + l0 / 2.0),
                (st(-1, -1), mh2 / s),
                (st(-1, 1), mh1 / s),
                (st(0, -1), l0 / 2.0 + l1),
                (st(0, 0), stay),
            ],
        ),
        (
            Zone::BoundaryMinus,
            vec![
                (st(0, -1), l1),
                (st(0, 1), mh1 / (lambda + a1)),
                (st(1, 1), l0 + l2),
                (st(0, 0), a1 + a2 + lambda * mu / (lambda + a1)),
            ],
        ),
        (
            Zone::BoundaryPlus,
            vec![
                (st(0, 1), l2),
                (st(0, -1), mh2 / (lambda + a2)),
                (st(1, -1), l0 + l1),
                (st(0, 0), a1 + a2 + lambda * mu / (lambda + a2)),
            ],
        ),
        (
            Zone::Origin,
            vec![
                (st(0, 1), l2 + l0 / 2.0),
                (st(0, -1), l1 + l0 / 2.0),
                (st(0, 0), a1 + a2 + mu),
            ],
        ),
    ];
    let entries = table
        .into_iter()
        .flat_map(|(z, rows)| rows.into_iter().map(move |(s, v)| (z, s, v / theta)))
        .collect();
    HalfPlaneKernel { entries }
}
