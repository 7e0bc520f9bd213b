//! Event-driven simulation of the original continuous-time process.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::model::SystemParams;
use crate::stability::{check_stability, StabilityReport};

pub const RNG_ALGORITHM: &str = "ChaCha8 (rand_chacha 0.3, seed_from_u64)";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct SimState {
    pub n1: u64,
    pub n2: u64,
    pub busy: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Sample {
    pub t: f64,
    pub n1: u64,
    pub n2: u64,
    pub busy: bool,
}

/// Time-average with its batch-means standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Estimate {
    pub mean: f64,
    pub std_err: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    /// Statistics below cover `[warmup, horizon]`.
    pub warmup: f64,
    pub batches: usize,
    pub n1: Estimate,
    pub n2: Estimate,
    pub busy: Estimate,
    pub min: Estimate,
    pub abs_diff: Estimate,
    /// Time-average of `n1 + n2` over `[0, horizon]`.
    pub total_full: f64,
    /// Time-average of `n1 + n2` over `[0, horizon / 2]`.
    pub total_first_half: f64,
    pub events: u64,
    pub final_state: SimState,
}

impl Summary {
    /// `total_full / total_first_half`; about 2 under linear growth, about 1 when stable.
    pub fn growth_ratio(&self) -> f64 {
        if self.total_first_half > 0.0 {
            self.total_full / self.total_first_half
        } else if self.total_full > 0.0 {
            f64::INFINITY
        } else {
            1.0
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Trajectory {
    pub rng: &'static str,
    pub seed: u64,
    pub horizon: f64,
    pub sample_dt: f64,
    pub samples: Vec<Sample>,
    pub summary: Summary,
}

impl Trajectory {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,n1,n2,busy\n");
        for s in &self.samples {
            out.push_str(&format!("{},{},{},{}\n", s.t, s.n1, s.n2, u8::from(s.busy)));
        }
        out
    }
}

#[derive(Debug, Clone)]
pub struct SimOptions {
    pub horizon: f64,
    pub seed: u64,
    pub sample_dt: f64,
    /// Fraction of the horizon discarded before collecting statistics.
    pub warmup_fraction: f64,
    pub batches: usize,
}

impl SimOptions {
    pub fn new(horizon: f64, seed: u64, sample_dt: f64) -> Self {
        SimOptions {
            horizon,
            seed,
            sample_dt,
            warmup_fraction: 0.5,
            batches: 20,
        }
    }
}

/// Running integrals of the tracked quantities over one batch.
#[derive(Default, Clone, Copy)]
struct Acc {
    n1: f64,
    n2: f64,
    busy: f64,
    min: f64,
    diff: f64,
}

impl Acc {
    fn add(&mut self, s: &SimState, dt: f64) {
        self.n1 += s.n1 as f64 * dt;
        self.n2 += s.n2 as f64 * dt;
        self.busy += if s.busy { dt } else { 0.0 };
        self.min += s.n1.min(s.n2) as f64 * dt;
        self.diff += s.n1.abs_diff(s.n2) as f64 * dt;
    }
}

fn estimate(values: impl Iterator<Item = f64>) -> Estimate {
    let v: Vec<f64> = values.collect();
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    Estimate {
        mean,
        std_err: (var / n).sqrt(),
    }
}

fn exp_sample(rng: &mut ChaCha8Rng, rate: f64) -> f64 {
    let u: f64 = rng.gen();
    -(1.0 - u).ln() / rate
}

pub fn simulate(p: &SystemParams, horizon: f64, seed: u64, sample_dt: f64) -> Trajectory {
    simulate_with(p, &SimOptions::new(horizon, seed, sample_dt))
}

pub fn simulate_with(p: &SystemParams, opt: &SimOptions) -> Trajectory {
    assert!(opt.horizon > 0.0, "horizon must be positive");
    assert!(opt.batches >= 2, "need at least two batches");
    let mut rng = ChaCha8Rng::seed_from_u64(opt.seed);
    let mut st = SimState { n1: 0, n2: 0, busy: false };
    let mut t = 0.0;
    let mut events = 0u64;

    let warmup = opt.horizon * opt.warmup_fraction;
    let batch_len = (opt.horizon - warmup) / opt.batches as f64;
    let mut batches = vec![Acc::default(); opt.batches];
    let half = opt.horizon / 2.0;
    let (mut total_full, mut total_half) = (0.0, 0.0);

    let mut samples = Vec::new();
    let mut next_sample = 0.0;
    let sampling = opt.sample_dt > 0.0;

    // Credits the state held on [a, b) to every statistic.
    let mut account = |st: &SimState, a: f64, b: f64| {
        let tot = (st.n1 + st.n2) as f64;
        total_full += tot * (b - a);
        if a < half {
            total_half += tot * (b.min(half) - a);
        }
        if b <= warmup {
            return;
        }
        let mut lo = a.max(warmup);
        while lo < b {
            let k = (((lo - warmup) / batch_len) as usize).min(opt.batches - 1);
            let end = if k + 1 == opt.batches { b } else { b.min(warmup + (k + 1) as f64 * batch_len) };
            batches[k].add(st, end - lo);
            if end <= lo {
                break;
            }
            lo = end;
        }
    };

    let lambda = p.total_arrival();
    loop {
        let r1 = if !st.busy && st.n1 > 0 { p.alpha1 } else { 0.0 };
        let r2 = if !st.busy && st.n2 > 0 { p.alpha2 } else { 0.0 };
        let rs = if st.busy { p.mu } else { 0.0 };
        let total = lambda + r1 + r2 + rs;
        let t_next = if total > 0.0 { t + exp_sample(&mut rng, total) } else { f64::INFINITY };
        let stop = t_next.min(opt.horizon);
        while sampling && next_sample <= stop && next_sample <= opt.horizon {
            samples.push(Sample {
                t: next_sample,
                n1: st.n1,
                n2: st.n2,
                busy: st.busy,
            });
            next_sample += opt.sample_dt;
        }
        account(&st, t, stop);
        if t_next >= opt.horizon {
            break;
        }
        t = t_next;
        events += 1;

        let mut u = rng.gen::<f64>() * total;
        let mut pick = |r: f64| {
            if u < r {
                true
            } else {
                u -= r;
                false
            }
        };
        if pick(p.lambda0) {
            if !st.busy {
                st.busy = true;
            } else if st.n1 < st.n2 || (st.n1 == st.n2 && rng.gen::<bool>()) {
                st.n1 += 1;
            } else {
                st.n2 += 1;
            }
        } else if pick(p.lambda1) {
            if st.busy {
                st.n1 += 1;
            } else {
                st.busy = true;
            }
        } else if pick(p.lambda2) {
            if st.busy {
                st.n2 += 1;
            } else {
                st.busy = true;
            }
        } else if pick(r1) {
            st.n1 -= 1;
            st.busy = true;
        } else if pick(r2) {
            st.n2 -= 1;
            st.busy = true;
        } else {
            st.busy = false;
        }
    }

    let norm = |a: &Acc| {
        let l = batch_len;
        [a.n1 / l, a.n2 / l, a.busy / l, a.min / l, a.diff / l]
    };
    let means: Vec<[f64; 5]> = batches.iter().map(norm).collect();
    let col = |c: usize| estimate(means.iter().map(|m| m[c]));
    let summary = Summary {
        warmup,
        batches: opt.batches,
        n1: col(0),
        n2: col(1),
        busy: col(2),
        min: col(3),
        abs_diff: col(4),
        total_full: total_full / opt.horizon,
        total_first_half: total_half / half,
        events,
        final_state: st,
    };
    Trajectory {
        rng: RNG_ALGORITHM,
        seed: opt.seed,
        horizon: opt.horizon,
        sample_dt: opt.sample_dt,
        samples,
        summary,
    }
}

/// Parameter regimes with shipped presets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Scenario {
    /// `max(rho1, rho2) < rho < 1`, strongly pooled.
    Criterion1Pooled,
    /// `rho < 1` but not strongly pooled.
    Criterion1Unpooled,
    /// `rho > 1` with `rho1, rho2 < 1`.
    RhoGe1,
    /// `rho1 >= 1`, `f1 < 0`.
    Criterion2Stable,
    /// `rho1 >= 1`, `f1 > 0`.
    Criterion2Unstable,
    /// `rho2 >= 1`, `f2 < 0`.
    Criterion3Stable,
    /// `rho2 >= 1`, `f2 > 0`.
    Criterion3Unstable,
    /// Smart traffic dominates and `rho` slightly above 1.
    HeavyTrafficCollapse,
}

impl Scenario {
    pub const ALL: [Scenario; 8] = [
        Scenario::Criterion1Pooled,
        Scenario::Criterion1Unpooled,
        Scenario::RhoGe1,
        Scenario::Criterion2Stable,
        Scenario::Criterion2Unstable,
        Scenario::Criterion3Stable,
        Scenario::Criterion3Unstable,
        Scenario::HeavyTrafficCollapse,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Scenario::Criterion1Pooled => "criterion1-pooled",
            Scenario::Criterion1Unpooled => "criterion1-unpooled",
            Scenario::RhoGe1 => "rho-ge-1",
            Scenario::Criterion2Stable => "criterion2-stable",
            Scenario::Criterion2Unstable => "criterion2-unstable",
            Scenario::Criterion3Stable => "criterion3-stable",
            Scenario::Criterion3Unstable => "criterion3-unstable",
            Scenario::HeavyTrafficCollapse => "heavy-traffic-collapse",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Scenario::ALL.into_iter().find(|x| x.name() == s)
    }

    pub fn preset(&self) -> SystemParams {
        let p = |l0, l1, l2, mu, a1, a2| SystemParams {
            lambda0: l0,
            lambda1: l1,
            lambda2: l2,
            mu,
            alpha1: a1,
            alpha2: a2,
        };
        match self {
            Scenario::Criterion1Pooled => p(0.15, 0.05, 0.01, 0.44, 0.25, 0.1),
            Scenario::Criterion1Unpooled => p(0.02, 0.12, 0.02, 0.44, 0.4, 0.1),
            Scenario::RhoGe1 => p(0.2, 0.05, 0.04, 0.45, 0.15, 0.11),
            Scenario::Criterion2Stable => p(0.01, 0.1, 0.02, 0.8, 0.04, 0.5),
            Scenario::Criterion2Unstable => p(0.02, 0.2, 0.02, 0.6, 0.08, 0.5),
            Scenario::Criterion3Stable => Scenario::Criterion2Stable.preset().mirrored(),
            Scenario::Criterion3Unstable => Scenario::Criterion2Unstable.preset().mirrored(),
            Scenario::HeavyTrafficCollapse => p(0.1, 0.1, 0.1, 0.5, 0.2, 0.2),
        }
    }

    /// Whether `report` satisfies the defining inequalities of the regime.
    pub fn holds(&self, r: &StabilityReport) -> bool {
        match self {
            Scenario::Criterion1Pooled => r.criterion1 && r.strongly_pooled,
            Scenario::Criterion1Unpooled => r.criterion1 && !r.strongly_pooled,
            Scenario::RhoGe1 => r.rho > 1.0 && r.rho1 < 1.0 && r.rho2 < 1.0,
            Scenario::Criterion2Stable => r.criterion2,
            Scenario::Criterion2Unstable => r.rho1 >= 1.0 && r.f1 > 0.0,
            Scenario::Criterion3Stable => r.criterion3,
            Scenario::Criterion3Unstable => r.rho2 >= 1.0 && r.f2 > 0.0,
            Scenario::HeavyTrafficCollapse => r.rho > 1.0 && r.strongly_pooled,
        }
    }

    pub fn caption(&self) -> &'static str {
        match self {
            Scenario::Criterion1Pooled => "stable, strongly pooled: orbits stay bounded and close to each other",
            Scenario::Criterion1Unpooled => "stable, weakly pooled: orbits bounded but the difference wanders",
            Scenario::RhoGe1 => "rho > 1 with rho1, rho2 < 1: both orbits grow",
            Scenario::Criterion2Stable => "rho1 >= 1, f1 < 0: stable",
            Scenario::Criterion2Unstable => "rho1 >= 1, f1 > 0: orbit 1 grows, orbit 2 stays bounded",
            Scenario::Criterion3Stable => "rho2 >= 1, f2 < 0: stable",
            Scenario::Criterion3Unstable => "rho2 >= 1, f2 > 0: orbit 2 grows, orbit 1 stays bounded",
            Scenario::HeavyTrafficCollapse => "rho > 1, smart traffic dominant: total grows, difference stays O(1)",
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RegimeDemo {
    pub scenario: &'static str,
    pub caption: &'static str,
    pub params: SystemParams,
    pub report: StabilityReport,
    /// Whether the parameters actually satisfy the scenario's inequalities.
    pub regime_holds: bool,
    pub trajectory: Trajectory,
}

pub fn regime_demo(
    p: &SystemParams,
    scenario: Scenario,
    horizon: f64,
    seed: u64,
    sample_dt: f64,
) -> RegimeDemo {
    let report = check_stability(p);
    RegimeDemo {
        scenario: scenario.name(),
        caption: scenario.caption(),
        params: *p,
        regime_holds: scenario.holds(&report),
        report,
        trajectory: simulate(p, horizon, seed, sample_dt),
    }
}
