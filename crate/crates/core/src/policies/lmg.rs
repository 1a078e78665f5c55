//! Learning MG: MG whose divisor is re-tuned every epoch by replaying the
//! epoch just finished under neighbouring divisors.

use super::{select_mg, MgPolicy, PolicySpec};
use crate::engine::{drive, simulate, Buffer, Policy, StepContext, StepObserver};
use crate::error::{Error, Result};
use crate::model::{Instance, Packet, PacketId, RunResult, Time, Window};

pub const PHI_MIN: f64 = 1.0;
pub const PHI_MAX: f64 = 2.5;
pub const PHI_STEP: f64 = 0.05;

const GRID_EPS: f64 = 1e-9;

/// `⌈max(0.1·T, 30 / min(1, λ))⌉`.
pub fn lmg_epoch_length(steps: u32, lambda: f64) -> u32 {
    let f = (0.1 * steps as f64).max(30.0 / lambda.min(1.0));
    // 0.1·T carries representation error (0.1·300 = 30.000000000000004)
    (f - 1e-9).ceil().max(1.0) as u32
}

/// Hill-climbs from `phi_star` over the grid `phi_star ± k·0.05` inside
/// `[1, 2.5]`: left while throughput strictly increases, then right likewise.
/// Returns the endpoint with higher throughput, or `phi_star` on a tie.
///
/// `eval` yields the replayed throughput at a divisor, or `None` to stop the
/// walk there.
pub fn choose_better(phi_star: f64, mut eval: impl FnMut(f64) -> Option<f64>) -> f64 {
    let Some(base) = eval(phi_star) else {
        return phi_star;
    };
    let mut walk = |dir: f64| {
        let (mut best_phi, mut best) = (phi_star, base);
        for k in 1.. {
            let phi = phi_star + dir * k as f64 * PHI_STEP;
            if !(PHI_MIN - GRID_EPS..=PHI_MAX + GRID_EPS).contains(&phi) {
                break;
            }
            match eval(phi) {
                Some(v) if v > best => (best_phi, best) = (phi, v),
                _ => break,
            }
        }
        (best_phi, best)
    };
    let (left_phi, left) = walk(-1.0);
    let (right_phi, right) = walk(1.0);
    if left > right {
        left_phi
    } else if right > left {
        right_phi
    } else {
        phi_star
    }
}

struct Throughput(f64);

impl StepObserver for Throughput {
    fn sent(&mut self, _t: Time, p: &Packet) {
        self.0 += p.weight;
    }
}

/// Weight MG with `divisor` sends over `start..=end`, starting from
/// `snapshot` and seeing `arrivals`.
fn replay_mg(snapshot: &[Packet], arrivals: &[Packet], start: Time, end: Time, divisor: f64) -> Result<f64> {
    let mut mg = MgPolicy::new(divisor);
    let mut thr = Throughput(0.0);
    drive(&mut mg, Buffer::from_packets(start - 1, snapshot.to_vec()), arrivals, start, end, &mut thr)?;
    Ok(thr.0)
}

#[derive(Debug, Clone)]
pub struct LmgPolicy {
    phi: f64,
    smoothing: f64,
    epoch_len: u32,
    epoch_start: Time,
    snapshot: Vec<Packet>,
    arrivals: Vec<Packet>,
    history: Vec<f64>,
    replay_error: Option<String>,
}

impl LmgPolicy {
    pub fn new(divisor: f64, smoothing: f64, epoch_len: u32) -> Self {
        LmgPolicy {
            phi: divisor,
            smoothing,
            epoch_len: epoch_len.max(1),
            epoch_start: 1,
            snapshot: Vec::new(),
            arrivals: Vec::new(),
            history: Vec::new(),
            replay_error: None,
        }
    }

    /// Current divisor `φ*`.
    pub fn divisor(&self) -> f64 {
        self.phi
    }

    /// `φ*` after each completed epoch.
    pub fn history(&self) -> &[f64] {
        &self.history
    }

    fn learn(&mut self, end: Time) {
        let (snapshot, arrivals, start) = (&self.snapshot, &self.arrivals, self.epoch_start);
        let mut failure = None;
        let better = choose_better(self.phi, |phi| match replay_mg(snapshot, arrivals, start, end, phi) {
            Ok(v) => Some(v),
            Err(e) => {
                failure = Some(e.to_string());
                None
            }
        });
        if failure.is_some() {
            self.replay_error = failure;
        }
        let next = self.smoothing * self.phi + (1.0 - self.smoothing) * better;
        self.phi = next.clamp(PHI_MIN, PHI_MAX);
        self.history.push(self.phi);
    }
}

impl Policy for LmgPolicy {
    fn observe_arrivals(&mut self, t: Time, carried: &Buffer, arrivals: &[Packet]) {
        if t == self.epoch_start {
            self.snapshot.clear();
            self.snapshot.extend_from_slice(carried.pending());
        }
        self.arrivals.extend_from_slice(arrivals);
    }

    fn select(&mut self, buffer: &Buffer, _ctx: &StepContext) -> Option<PacketId> {
        select_mg(buffer.pending(), self.phi).map(|c| c.pick())
    }

    fn end_step(&mut self, t: Time) {
        if t - self.epoch_start + 1 >= self.epoch_len as Time {
            self.learn(t);
            self.epoch_start = t + 1;
            self.arrivals.clear();
        }
    }
}

/// Runs LMG over `instance`. `spec` must be [`PolicySpec::Lmg`].
pub fn lmg_run(instance: &Instance, t_end: Time, window: Window, spec: &PolicySpec) -> Result<RunResult> {
    let PolicySpec::Lmg { .. } = spec else {
        return Err(Error::config(format!("lmg_run needs an LMG spec, got {spec}")));
    };
    window.check(t_end)?;
    let mut policy = spec.build(instance)?;
    simulate(policy.as_mut(), instance, t_end, window)
}

/// Like [`lmg_run`] but also returns the divisor trajectory.
pub fn lmg_run_traced(
    instance: &Instance,
    t_end: Time,
    window: Window,
    divisor: f64,
    smoothing: f64,
    epoch_len: u32,
) -> Result<(RunResult, Vec<f64>)> {
    let mut policy = LmgPolicy::new(divisor, smoothing, epoch_len);
    let result = simulate(&mut policy, instance, t_end, window)?;
    if let Some(e) = policy.replay_error {
        return Err(Error::Simulation(format!("LMG replay failed: {e}")));
    }
    Ok((result, policy.history))
}
