//! How large a buffer MG needs so that overflow is rare.
//!
//! Long runs are simulated on a count grid indexed by `(deadline mod
//! (d_max+1), weight)` instead of packet lists: MG only looks at the earliest
//! deadline's heaviest class and the heaviest class's earliest deadline, and
//! packets within a class are interchangeable for occupancy.

use std::io::Write;

use rand::Rng;
use rand_distr::{Distribution, Poisson};

use crate::error::{Error, Result};
use crate::harness::{fmt_g, map_indexed, Exec};
use crate::model::Time;
use crate::policies::GOLDEN_RATIO;
use crate::workload::rng_for;

/// Pending packets as counts per (deadline residue, weight).
#[derive(Debug, Clone)]
pub struct GridMg {
    span: usize,
    w_max: usize,
    divisor: f64,
    counts: Vec<u32>,
    per_slot: Vec<u64>,
    per_weight: Vec<u64>,
    total: u64,
}

impl GridMg {
    pub fn new(w_max: u32, d_max: u32, divisor: f64) -> Self {
        let span = d_max as usize + 1;
        let w_max = w_max as usize;
        GridMg {
            span,
            w_max,
            divisor,
            counts: vec![0; span * w_max],
            per_slot: vec![0; span],
            per_weight: vec![0; w_max + 1],
            total: 0,
        }
    }

    pub fn len(&self) -> u64 {
        self.total
    }

    pub fn is_empty(&self) -> bool {
        self.total == 0
    }

    fn slot(&self, d: Time) -> usize {
        d.rem_euclid(self.span as Time) as usize
    }

    /// Drops everything with deadline `t − 1`. Must run before step `t`'s
    /// arrivals, which may reuse that residue.
    pub fn expire_before(&mut self, t: Time) {
        let s = self.slot(t - 1);
        if self.per_slot[s] == 0 {
            return;
        }
        for w in 1..=self.w_max {
            let c = std::mem::take(&mut self.counts[s * self.w_max + w - 1]) as u64;
            self.per_weight[w] -= c;
        }
        self.total -= self.per_slot[s];
        self.per_slot[s] = 0;
    }

    /// Adds a packet with weight in `1..=w_max` and deadline in `t..=t+d_max`.
    pub fn insert(&mut self, deadline: Time, weight: u32) {
        let s = self.slot(deadline);
        self.counts[s * self.w_max + weight as usize - 1] += 1;
        self.per_slot[s] += 1;
        self.per_weight[weight as usize] += 1;
        self.total += 1;
    }

    fn remove(&mut self, s: usize, w: usize) {
        self.counts[s * self.w_max + w - 1] -= 1;
        self.per_slot[s] -= 1;
        self.per_weight[w] -= 1;
        self.total -= 1;
    }

    /// MG's send at step `t`, as `(deadline, weight)`.
    pub fn send(&mut self, t: Time) -> Option<(Time, u32)> {
        if self.total == 0 {
            return None;
        }
        let slots = (0..self.span as Time).map(|k| (t + k, self.slot(t + k)));
        let (d_e, s_e) = slots.clone().find(|&(_, s)| self.per_slot[s] > 0)?;
        let w_e = (1..=self.w_max).rev().find(|&w| self.counts[s_e * self.w_max + w - 1] > 0)?;
        let w_h = (1..=self.w_max).rev().find(|&w| self.per_weight[w] > 0)?;
        let (d_h, s_h) = slots.clone().find(|&(_, s)| self.counts[s * self.w_max + w_h - 1] > 0)?;
        if w_e as f64 >= w_h as f64 / self.divisor {
            self.remove(s_e, w_e);
            Some((d_e, w_e as u32))
        } else {
            self.remove(s_h, w_h);
            Some((d_h, w_h as u32))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BufferStudyConfig {
    pub w_max: u32,
    pub d_max: u32,
    pub divisor: f64,
}

impl Default for BufferStudyConfig {
    fn default() -> Self {
        BufferStudyConfig { w_max: 20, d_max: 20, divisor: GOLDEN_RATIO }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BufferSizeResult {
    pub lambda: f64,
    pub target: f64,
    /// Smallest size whose empirical exceedance fraction is at most `target`.
    pub b: u64,
    pub ratio: f64,
    /// Fraction of steps with occupancy above `b`.
    pub exceed_fraction: f64,
    pub mean_occupancy: f64,
    pub max_occupancy: u64,
    pub run_length: u64,
    /// `false` when `run_length < 10 / target`: too few steps to resolve the
    /// target, so `b` is only an estimate.
    pub resolved: bool,
}

/// Occupancy histogram of a Model-1 MG run of `run_length` steps. Arrivals
/// are drawn exactly as the instance generator draws them for `seed`.
pub fn occupancy_histogram(lambda: f64, cfg: BufferStudyConfig, run_length: u64, seed: u64) -> Result<Vec<u64>> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(Error::config(format!("lambda must be > 0, got {lambda}")));
    }
    if cfg.w_max < 1 {
        return Err(Error::config("w_max must be >= 1"));
    }
    let mut rng = rng_for(seed);
    let arrivals = Poisson::new(lambda).map_err(|e| Error::config(format!("poisson: {e}")))?;
    let mut grid = GridMg::new(cfg.w_max, cfg.d_max, cfg.divisor);
    let mut hist: Vec<u64> = Vec::new();
    for t in 1..=run_length as Time {
        grid.expire_before(t);
        let k = arrivals.sample(&mut rng) as u64;
        for _ in 0..k {
            let w = rng.random_range(1..=cfg.w_max);
            let tau = rng.random_range(0..=cfg.d_max) as Time;
            grid.insert(t + tau, w);
        }
        let n = grid.len() as usize;
        if hist.len() <= n {
            hist.resize(n + 1, 0);
        }
        hist[n] += 1;
        grid.send(t);
    }
    Ok(hist)
}

/// Smallest `b` with `#{steps: occupancy > b} ≤ target · steps`.
pub fn quantile_size(hist: &[u64], target: f64) -> u64 {
    let steps: u64 = hist.iter().sum();
    let allowed = target * steps as f64;
    let mut above = 0u64;
    for b in (0..hist.len()).rev() {
        // `above` counts steps with occupancy > b
        if above as f64 > allowed {
            return b as u64 + 1;
        }
        above += hist[b];
    }
    0
}

pub fn buffer_size_study(
    lambda: f64,
    target: f64,
    cfg: BufferStudyConfig,
    run_length: u64,
    seed: u64,
) -> Result<BufferSizeResult> {
    if !(target > 0.0 && target <= 1.0) {
        return Err(Error::config(format!("target must lie in (0, 1], got {target}")));
    }
    if run_length < 1 {
        return Err(Error::config("run length must be >= 1"));
    }
    let hist = occupancy_histogram(lambda, cfg, run_length, seed)?;
    let b = quantile_size(&hist, target);
    let above: u64 = hist.iter().skip(b as usize + 1).sum();
    let mean = hist.iter().enumerate().map(|(n, c)| n as f64 * *c as f64).sum::<f64>() / run_length as f64;
    Ok(BufferSizeResult {
        lambda,
        target,
        b,
        ratio: b as f64 / lambda,
        exceed_fraction: above as f64 / run_length as f64,
        mean_occupancy: mean,
        max_occupancy: hist.len().saturating_sub(1) as u64,
        run_length,
        resolved: run_length as f64 >= 10.0 / target,
    })
}

/// One study per λ, each with its own seed stream.
pub fn buffer_size_sweep(
    lambdas: &[f64],
    target: f64,
    cfg: BufferStudyConfig,
    run_length: u64,
    master_seed: u64,
    exec: Exec,
) -> Result<Vec<BufferSizeResult>> {
    map_indexed(exec, lambdas.len(), |i| {
        let seed = crate::workload::derive_seed(master_seed, i as u64, 0);
        buffer_size_study(lambdas[i], target, cfg, run_length, seed)
    })
    .into_iter()
    .collect()
}

/// `(λ, b, b/λ)` table with the diagnostics.
pub fn write_buffer_csv<W: Write>(out: W, results: &[BufferSizeResult]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "lambda",
        "b",
        "ratio",
        "target",
        "exceed_fraction",
        "mean_occupancy",
        "max_occupancy",
        "run_length",
        "resolved",
    ])?;
    for r in results {
        w.write_record([
            fmt_g(r.lambda),
            r.b.to_string(),
            fmt_g(r.ratio),
            fmt_g(r.target),
            fmt_g(r.exceed_fraction),
            fmt_g(r.mean_occupancy),
            r.max_occupancy.to_string(),
            r.run_length.to_string(),
            r.resolved.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
