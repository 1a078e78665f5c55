use super::{select_mg, NbarEstimator, GOLDEN_RATIO};
use crate::assignment::{schedule_table, AssignmentItem};
use crate::engine::{Buffer, Policy, StepContext};
use crate::model::{Packet, PacketId, Time};

/// Solves the max-weight assignment of the pending packets to the relative
/// slots `0..=d_max - t`, assuming no further arrivals, and returns the
/// packet placed in slot 0.
pub fn select_mlp(pending: &[Packet], t: Time) -> Option<PacketId> {
    let last = pending.iter().map(|p| p.deadline).max()? - t;
    let items: Vec<AssignmentItem> =
        pending.iter().map(|p| AssignmentItem { id: p.id, weight: p.weight, lo: 0, hi: p.deadline - t }).collect();
    let table = schedule_table(&items, 0, last);
    // Every pending packet is feasible at slot 0, so the optimal EDF table fills it.
    table[0].map(|i| items[i].id)
}

#[derive(Debug, Clone, Copy)]
pub struct MlpPolicy;

impl Policy for MlpPolicy {
    fn select(&mut self, buffer: &Buffer, ctx: &StepContext) -> Option<PacketId> {
        select_mlp(buffer.pending(), ctx.t)
    }
}

/// Mix and match: MG under high load, MLP otherwise.
#[derive(Debug, Clone)]
pub struct MmPolicy {
    pub threshold: f64,
    pub estimator: NbarEstimator,
    ewma: Option<f64>,
    mg_steps: u64,
    mlp_steps: u64,
}

impl MmPolicy {
    pub fn new(threshold: f64, estimator: NbarEstimator) -> Self {
        MmPolicy { threshold, estimator, ewma: None, mg_steps: 0, mlp_steps: 0 }
    }

    /// `(steps decided by MG, steps decided by MLP)`.
    pub fn usage(&self) -> (u64, u64) {
        (self.mg_steps, self.mlp_steps)
    }

    fn nbar(&mut self, ctx: &StepContext) -> f64 {
        match self.estimator {
            NbarEstimator::Cumulative => ctx.running_nbar,
            NbarEstimator::Ewma(weight) => {
                let x = ctx.occupancy as f64;
                let next = match self.ewma {
                    None => x,
                    Some(prev) => weight * x + (1.0 - weight) * prev,
                };
                self.ewma = Some(next);
                next
            }
        }
    }
}

impl Policy for MmPolicy {
    fn select(&mut self, buffer: &Buffer, ctx: &StepContext) -> Option<PacketId> {
        let nbar = self.nbar(ctx);
        if buffer.is_empty() {
            return None;
        }
        if nbar > self.threshold {
            self.mg_steps += 1;
            select_mg(buffer.pending(), GOLDEN_RATIO).map(|c| c.pick())
        } else {
            self.mlp_steps += 1;
            select_mlp(buffer.pending(), ctx.t)
        }
    }
}
