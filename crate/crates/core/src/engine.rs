//! Single-node discrete-time engine.
//!
//! Each step `t` runs, in order: arrivals with `r = t` join the buffer,
//! packets with `d < t` are dropped, occupancy is sampled, the policy picks
//! at most one pending packet, and that packet is sent.

use crate::error::{Error, Result};
use crate::model::{Instance, Packet, PacketId, RunResult, Time, Window};
use crate::policies::PolicySpec;

/// Pending packets at the current step.
#[derive(Debug, Clone, Default)]
pub struct Buffer {
    pending: Vec<Packet>,
    now: Time,
}

impl Buffer {
    pub fn new() -> Self {
        Self::default()
    }

    /// A buffer at step `now` holding `packets`. Used by tests and replays.
    pub fn from_packets(now: Time, packets: Vec<Packet>) -> Self {
        Buffer { pending: packets, now }
    }

    pub fn now(&self) -> Time {
        self.now
    }

    pub fn pending(&self) -> &[Packet] {
        &self.pending
    }

    pub fn len(&self) -> usize {
        self.pending.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pending.is_empty()
    }

    pub fn get(&self, id: PacketId) -> Option<&Packet> {
        self.pending.iter().find(|p| p.id == id)
    }

    pub(crate) fn insert(&mut self, p: Packet) {
        self.pending.push(p);
    }

    /// Advances the clock to `t` and drops every packet with `d < t`.
    /// Returns the number dropped.
    pub(crate) fn expire(&mut self, t: Time) -> usize {
        self.now = t;
        let before = self.pending.len();
        self.pending.retain(|p| p.deadline >= t);
        before - self.pending.len()
    }

    pub(crate) fn take(&mut self, id: PacketId) -> Option<Packet> {
        let pos = self.pending.iter().position(|p| p.id == id)?;
        Some(self.pending.swap_remove(pos))
    }
}

/// What the engine tells a policy about the current step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepContext {
    pub t: Time,
    /// Pending count sampled this step.
    pub occupancy: usize,
    /// Cumulative mean of the occupancy samples from the first simulated
    /// step through `t`.
    pub running_nbar: f64,
}

/// An online selection rule.
///
/// `select` is called every step, also with an empty buffer, so stateful
/// policies see every occupancy sample. It must return `None` exactly when
/// the buffer is empty.
pub trait Policy {
    /// Called before the step's arrivals are inserted. `carried` still holds
    /// the previous step's leftovers (not yet expired for `t`).
    fn observe_arrivals(&mut self, _t: Time, _carried: &Buffer, _arrivals: &[Packet]) {}

    fn select(&mut self, buffer: &Buffer, ctx: &StepContext) -> Option<PacketId>;

    /// Called after the send of step `t`.
    fn end_step(&mut self, _t: Time) {}
}

/// Callbacks for [`drive`].
pub(crate) trait StepObserver {
    fn occupancy(&mut self, _t: Time, _n: usize) {}
    fn sent(&mut self, _t: Time, _p: &Packet) {}
}

/// Running occupancy mean of one buffer.
#[derive(Debug, Clone, Copy, Default)]
pub(crate) struct OccupancyMean {
    sum: usize,
    steps: usize,
}

/// What happened at one buffer in one step.
#[derive(Debug, Clone, Copy)]
pub(crate) struct StepOutcome {
    pub occupancy: usize,
    pub dropped: usize,
    pub sent: Option<Packet>,
}

/// One step at one buffer: insert `batch`, expire, sample occupancy, let
/// `policy` pick, remove the pick.
pub(crate) fn step(
    policy: &mut dyn Policy,
    buffer: &mut Buffer,
    batch: &[Packet],
    t: Time,
    mean: &mut OccupancyMean,
) -> Result<StepOutcome> {
    policy.observe_arrivals(t, buffer, batch);
    for p in batch {
        buffer.insert(*p);
    }
    let dropped = buffer.expire(t);

    let occupancy = buffer.len();
    mean.sum += occupancy;
    mean.steps += 1;
    let ctx = StepContext { t, occupancy, running_nbar: mean.sum as f64 / mean.steps as f64 };

    let sent = match policy.select(buffer, &ctx) {
        Some(id) => {
            let p = buffer
                .take(id)
                .ok_or_else(|| Error::Simulation(format!("policy picked packet {id} which is not pending at t={t}")))?;
            debug_assert!(p.is_pending_at(t));
            Some(p)
        }
        None if !buffer.is_empty() => {
            return Err(Error::Simulation(format!("policy idled at t={t} with {} pending packets", buffer.len())));
        }
        None => None,
    };
    policy.end_step(t);
    Ok(StepOutcome { occupancy, dropped, sent })
}

/// Runs `policy` over steps `t_start..=t_end` starting from `buffer`.
/// `arrivals` must be sorted by release; packets released before `t_start`
/// are skipped. Returns the buffer left after `t_end`.
pub(crate) fn drive(
    policy: &mut dyn Policy,
    mut buffer: Buffer,
    arrivals: &[Packet],
    t_start: Time,
    t_end: Time,
    obs: &mut dyn StepObserver,
) -> Result<Buffer> {
    let mut next = arrivals.partition_point(|p| p.release < t_start);
    let mut mean = OccupancyMean::default();
    for t in t_start..=t_end {
        let first = next;
        while next < arrivals.len() && arrivals[next].release == t {
            next += 1;
        }
        let out = step(policy, &mut buffer, &arrivals[first..next], t, &mut mean)?;
        obs.occupancy(t, out.occupancy);
        if let Some(p) = &out.sent {
            obs.sent(t, p);
        }
    }
    Ok(buffer)
}

struct Recorder {
    window: Window,
    sent: Vec<(Time, PacketId)>,
    zeta: f64,
    zeta_total: f64,
    occupancy: Vec<usize>,
}

impl StepObserver for Recorder {
    fn occupancy(&mut self, _t: Time, n: usize) {
        self.occupancy.push(n);
    }

    fn sent(&mut self, t: Time, p: &Packet) {
        self.sent.push((t, p.id));
        self.zeta_total += p.weight;
        if self.window.contains(t) {
            self.zeta += p.weight;
        }
    }
}

/// Runs an already-built policy over `instance` for steps `1..=t_end`.
pub fn simulate(policy: &mut dyn Policy, instance: &Instance, t_end: Time, window: Window) -> Result<RunResult> {
    window.check(t_end)?;
    let mut rec = Recorder {
        window,
        sent: Vec::new(),
        zeta: 0.0,
        zeta_total: 0.0,
        occupancy: Vec::with_capacity(t_end as usize),
    };
    drive(policy, Buffer::new(), &instance.packets, 1, t_end, &mut rec)?;
    Ok(RunResult { sent: rec.sent, zeta: rec.zeta, zeta_total: rec.zeta_total, occupancy_trace: rec.occupancy, window })
}

/// Builds the policy described by `spec` and runs it over `instance`.
///
/// `seed` is reserved for randomized policies; every policy implemented here
/// is deterministic and ignores it.
pub fn run(spec: &PolicySpec, instance: &Instance, t_end: Time, window: Window, seed: u64) -> Result<RunResult> {
    let _ = seed;
    window.check(t_end)?;
    let mut policy = spec.build(instance)?;
    simulate(policy.as_mut(), instance, t_end, window)
}
