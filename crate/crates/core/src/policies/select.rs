use std::cmp::Ordering;

use super::{SecondMaxRule, PSI_THRESHOLD};
use crate::engine::{Buffer, Policy, StepContext};
use crate::model::{Packet, PacketId, Window};

/// Earliest deadline, then heavier, then lower id.
pub(crate) fn edf_order(a: &Packet, b: &Packet) -> Ordering {
    a.deadline.cmp(&b.deadline).then(b.weight.total_cmp(&a.weight)).then(a.id.cmp(&b.id))
}

/// Heavier, then earlier deadline, then lower id.
pub(crate) fn weight_order(a: &Packet, b: &Packet) -> Ordering {
    b.weight.total_cmp(&a.weight).then(a.deadline.cmp(&b.deadline)).then(a.id.cmp(&b.id))
}

/// The two non-dominated candidates of a nonempty buffer.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EhPair {
    /// Heaviest among the earliest-deadline packets.
    pub e: Packet,
    /// Earliest-deadline among the heaviest packets.
    pub h: Packet,
}

/// MG's decision at one step.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EhChoice {
    pub e: PacketId,
    pub h: PacketId,
    pub chose_h: bool,
    /// `w_h > 1.618·w_e`.
    pub indicator_psi: bool,
}

impl EhChoice {
    pub fn pick(&self) -> PacketId {
        if self.chose_h {
            self.h
        } else {
            self.e
        }
    }
}

pub fn select_eh(pending: &[Packet]) -> Option<EhPair> {
    let e = *pending.iter().min_by(|a, b| edf_order(a, b))?;
    let h = *pending.iter().min_by(|a, b| weight_order(a, b))?;
    Some(EhPair { e, h })
}

/// Sends `e` when `w_e ≥ w_h / divisor`, otherwise `h`.
pub fn select_mg(pending: &[Packet], divisor: f64) -> Option<EhChoice> {
    let EhPair { e, h } = select_eh(pending)?;
    Some(EhChoice {
        e: e.id,
        h: h.id,
        chose_h: e.weight < h.weight / divisor,
        indicator_psi: h.weight > PSI_THRESHOLD * e.weight,
    })
}

/// A maximum-weight packet, ties by earlier deadline then lower id.
pub fn select_greedy(pending: &[Packet]) -> Option<PacketId> {
    pending.iter().min_by(|a, b| weight_order(a, b)).map(|p| p.id)
}

/// Earliest-deadline packet among those with `w ≥ w_max / alpha`; ties by
/// heavier, then lower id.
pub fn select_edf_alpha(pending: &[Packet], alpha: f64) -> Option<PacketId> {
    let w_max = pending.iter().map(|p| p.weight).fold(f64::NEG_INFINITY, f64::max);
    let threshold = w_max / alpha;
    pending.iter().filter(|p| p.weight >= threshold).min_by(|a, b| edf_order(a, b)).map(|p| p.id)
}

/// MG, except that when MG would send `h`, an earlier-deadline packet `s`
/// close enough in weight to `h` is sent instead:
/// `d_s < d_h` and `w_s ≥ max(w_e, fraction·w_h)`.
pub fn select_smmg(pending: &[Packet], divisor: f64, fraction: f64, rule: SecondMaxRule) -> Option<PacketId> {
    let EhPair { e, h } = select_eh(pending)?;
    if e.weight >= h.weight / divisor {
        return Some(e.id);
    }
    let s = match rule {
        SecondMaxRule::StrictlyBelow => {
            let second_weight =
                pending.iter().map(|p| p.weight).filter(|&w| w < h.weight).fold(f64::NEG_INFINITY, f64::max);
            pending.iter().filter(|p| p.weight == second_weight).min_by(|a, b| edf_order(a, b))
        }
        SecondMaxRule::SortedSecond => pending.iter().filter(|p| p.id != h.id).min_by(|a, b| weight_order(a, b)),
    };
    match s {
        Some(s) if s.deadline < h.deadline && s.weight >= e.weight.max(fraction * h.weight) => Some(s.id),
        _ => Some(h.id),
    }
}

/// Counters for MG's `e`/`h` decisions over the steps of a window.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct EhStats {
    pub nonempty_steps: u64,
    pub psi_hits: u64,
    pub h_sent: u64,
}

#[derive(Debug, Clone)]
pub struct MgPolicy {
    pub divisor: f64,
    window: Option<Window>,
    stats: EhStats,
}

impl MgPolicy {
    pub fn new(divisor: f64) -> Self {
        MgPolicy { divisor, window: None, stats: EhStats::default() }
    }

    /// Counts decisions only at steps inside `window`.
    pub fn with_stats_window(divisor: f64, window: Window) -> Self {
        MgPolicy { divisor, window: Some(window), stats: EhStats::default() }
    }

    pub fn stats(&self) -> EhStats {
        self.stats
    }
}

impl Policy for MgPolicy {
    fn select(&mut self, buffer: &Buffer, ctx: &StepContext) -> Option<PacketId> {
        let choice = select_mg(buffer.pending(), self.divisor)?;
        if self.window.is_none_or(|w| w.contains(ctx.t)) {
            self.stats.nonempty_steps += 1;
            self.stats.psi_hits += choice.indicator_psi as u64;
            self.stats.h_sent += (choice.chose_h && choice.h != choice.e) as u64;
        }
        Some(choice.pick())
    }
}

#[derive(Debug, Clone, Copy)]
pub struct GreedyPolicy;

impl Policy for GreedyPolicy {
    fn select(&mut self, buffer: &Buffer, _ctx: &StepContext) -> Option<PacketId> {
        select_greedy(buffer.pending())
    }
}

#[derive(Debug, Clone, Copy)]
pub struct EdfAlphaPolicy {
    pub alpha: f64,
}

impl Policy for EdfAlphaPolicy {
    fn select(&mut self, buffer: &Buffer, _ctx: &StepContext) -> Option<PacketId> {
        select_edf_alpha(buffer.pending(), self.alpha)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct SmmgPolicy {
    pub divisor: f64,
    pub fraction: f64,
    pub rule: SecondMaxRule,
}

impl Policy for SmmgPolicy {
    fn select(&mut self, buffer: &Buffer, _ctx: &StepContext) -> Option<PacketId> {
        select_smmg(buffer.pending(), self.divisor, self.fraction, self.rule)
    }
}
