//! Packets, instances, measurement windows and run results, plus the
//! line-oriented instance text format.
//!
//! The text format is one header line `H=<horizon>` followed by one packet per
//! line as `id r d w`. Blank lines and lines starting with `#` are ignored.
//! Schedules extend each packet line with an `@slot` column.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::{BufRead, Write};

use crate::error::{Error, Result};
use crate::workload::GenConfig;

/// Integer time step. The clock starts at 1.
pub type Time = i64;

/// Index of a packet within its instance (arrival order).
pub type PacketId = usize;

/// A unit-length packet released at `release` that may be sent at any step
/// in `release..=deadline`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Packet {
    pub id: PacketId,
    pub release: Time,
    pub deadline: Time,
    pub weight: f64,
}

impl Packet {
    pub fn new(id: PacketId, release: Time, deadline: Time, weight: f64) -> Result<Self> {
        let p = Packet { id, release, deadline, weight };
        p.validate()?;
        Ok(p)
    }

    fn validate(&self) -> Result<()> {
        if self.release < 1 {
            return Err(Error::InvalidInstance(format!("packet {} has release {} < 1", self.id, self.release)));
        }
        if self.deadline < self.release {
            return Err(Error::InvalidInstance(format!(
                "packet {} has deadline {} before release {}",
                self.id, self.deadline, self.release
            )));
        }
        if !(self.weight > 0.0 && self.weight.is_finite()) {
            return Err(Error::InvalidInstance(format!("packet {} has non-positive weight {}", self.id, self.weight)));
        }
        Ok(())
    }

    /// Time to expire, `d - r`.
    pub fn slack(&self) -> Time {
        self.deadline - self.release
    }

    /// Whether the packet may be sent at step `t`.
    pub fn is_pending_at(&self, t: Time) -> bool {
        self.release <= t && t <= self.deadline
    }
}

/// Where an instance came from.
#[derive(Debug, Clone, PartialEq)]
pub enum InstanceMeta {
    External,
    Generated(GenConfig),
}

/// A full arrival schedule over `1..=horizon`.
#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    pub horizon: Time,
    pub packets: Vec<Packet>,
    pub meta: InstanceMeta,
}

impl Instance {
    /// Builds an instance from `(release, deadline, weight)` triples. Packets
    /// are sorted by release (stable) and numbered in that order.
    pub fn from_triples(horizon: Time, triples: &[(Time, Time, f64)]) -> Result<Self> {
        let mut sorted: Vec<_> = triples.to_vec();
        sorted.sort_by_key(|&(r, _, _)| r);
        let packets = sorted
            .into_iter()
            .enumerate()
            .map(|(id, (r, d, w))| Packet::new(id, r, d, w))
            .collect::<Result<Vec<_>>>()?;
        Self::new(horizon, packets, InstanceMeta::External)
    }

    /// Validates and wraps an already-numbered packet list.
    pub fn new(horizon: Time, packets: Vec<Packet>, meta: InstanceMeta) -> Result<Self> {
        let inst = Instance { horizon, packets, meta };
        inst.validate()?;
        Ok(inst)
    }

    pub fn empty(horizon: Time) -> Self {
        Instance { horizon, packets: Vec::new(), meta: InstanceMeta::External }
    }

    pub fn validate(&self) -> Result<()> {
        if self.horizon < 0 {
            return Err(Error::InvalidInstance(format!("negative horizon {}", self.horizon)));
        }
        let mut prev_release = Time::MIN;
        for (idx, p) in self.packets.iter().enumerate() {
            p.validate()?;
            if p.id != idx {
                return Err(Error::InvalidInstance(format!(
                    "packet ids must be 0..n-1 in order; found {} at position {}",
                    p.id, idx
                )));
            }
            if p.release > self.horizon {
                return Err(Error::InvalidInstance(format!(
                    "packet {} released at {} after horizon {}",
                    p.id, p.release, self.horizon
                )));
            }
            if p.release < prev_release {
                return Err(Error::InvalidInstance(format!("packets not sorted by release at id {}", p.id)));
            }
            prev_release = p.release;
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.packets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.packets.is_empty()
    }

    pub fn packet(&self, id: PacketId) -> Option<&Packet> {
        self.packets.get(id)
    }

    pub fn max_deadline(&self) -> Time {
        self.packets.iter().map(|p| p.deadline).max().unwrap_or(0)
    }

    pub fn total_weight(&self) -> f64 {
        self.packets.iter().map(|p| p.weight).sum()
    }

    /// The generating configuration, if any.
    pub fn gen_config(&self) -> Option<&GenConfig> {
        match &self.meta {
            InstanceMeta::Generated(cfg) => Some(cfg),
            InstanceMeta::External => None,
        }
    }

    pub fn write_text<W: Write>(&self, mut out: W) -> Result<()> {
        out.write_all(self.to_text().as_bytes())?;
        Ok(())
    }

    pub fn to_text(&self) -> String {
        let mut s = format!("H={}\n", self.horizon);
        for p in &self.packets {
            let _ = writeln!(s, "{} {} {} {}", p.id, p.release, p.deadline, fmt_weight(p.weight));
        }
        s
    }

    pub fn parse_text(text: &str) -> Result<Self> {
        Self::read_text(text.as_bytes())
    }

    pub fn read_text<R: BufRead>(input: R) -> Result<Self> {
        let mut horizon: Option<Time> = None;
        let mut packets = Vec::new();
        for (idx, line) in input.lines().enumerate() {
            let line = line?;
            let lineno = idx + 1;
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            if let Some(h) = line.strip_prefix("H=") {
                if horizon.is_some() {
                    return Err(Error::Parse { line: lineno, msg: "duplicate header".into() });
                }
                horizon = Some(
                    h.trim().parse().map_err(|_| Error::Parse { line: lineno, msg: format!("bad horizon {h:?}") })?,
                );
                continue;
            }
            if horizon.is_none() {
                return Err(Error::Parse { line: lineno, msg: "missing H=<horizon> header".into() });
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.len() < 4 {
                return Err(Error::Parse { line: lineno, msg: format!("expected `id r d w`, got {line:?}") });
            }
            let bad = |what: &str| Error::Parse { line: lineno, msg: format!("bad {what}") };
            let id: PacketId = fields[0].parse().map_err(|_| bad("id"))?;
            let r: Time = fields[1].parse().map_err(|_| bad("release"))?;
            let d: Time = fields[2].parse().map_err(|_| bad("deadline"))?;
            let w: f64 = fields[3].parse().map_err(|_| bad("weight"))?;
            packets.push(Packet { id, release: r, deadline: d, weight: w });
        }
        let horizon = horizon.unwrap_or(0);
        Instance::new(horizon, packets, InstanceMeta::External)
    }
}

/// Integral weights print without a fractional part; others use the
/// shortest round-tripping representation.
pub(crate) fn fmt_weight(w: f64) -> String {
    if w.fract() == 0.0 && w.abs() < 9.0e15 {
        format!("{}", w as i64)
    } else {
        format!("{w}")
    }
}

/// Inclusive range of steps whose sends are counted.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Window {
    pub first: Time,
    pub last: Time,
}

impl Window {
    pub fn new(first: Time, last: Time) -> Self {
        Window { first, last }
    }

    /// The whole run `1..=t_end`.
    pub fn full(t_end: Time) -> Self {
        Window { first: 1, last: t_end }
    }

    pub fn contains(&self, t: Time) -> bool {
        self.first <= t && t <= self.last
    }

    pub fn len(&self) -> usize {
        (self.last - self.first + 1).max(0) as usize
    }

    pub fn is_empty(&self) -> bool {
        self.last < self.first
    }

    /// Checks `self ⊆ [1, t_end]` and that the window is nonempty.
    pub fn check(&self, t_end: Time) -> Result<()> {
        if t_end < 1 {
            return Err(Error::config(format!("t_end must be >= 1, got {t_end}")));
        }
        if self.is_empty() {
            return Err(Error::config(format!("empty window ({}, {})", self.first, self.last)));
        }
        if self.first < 1 || self.last > t_end {
            return Err(Error::config(format!("window ({}, {}) not inside [1, {}]", self.first, self.last, t_end)));
        }
        Ok(())
    }
}

/// Outcome of one simulated run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunResult {
    /// `(step, packet id)` in increasing step order.
    pub sent: Vec<(Time, PacketId)>,
    /// Weight sent inside `window`.
    pub zeta: f64,
    /// Weight sent over the whole run.
    pub zeta_total: f64,
    /// Pending count per step, indexed by `t - 1`, sampled after arrivals
    /// and expiry and before the send.
    pub occupancy_trace: Vec<usize>,
    pub window: Window,
}

impl RunResult {
    /// Mean occupancy over the measurement window (`n̄`).
    pub fn mean_occupancy(&self) -> f64 {
        let lo = (self.window.first - 1).max(0) as usize;
        let hi = (self.window.last as usize).min(self.occupancy_trace.len());
        if hi <= lo {
            return 0.0;
        }
        let slice = &self.occupancy_trace[lo..hi];
        slice.iter().sum::<usize>() as f64 / slice.len() as f64
    }

    /// Renders the send log as an instance-format schedule with `@slot`.
    pub fn send_log_text(&self, instance: &Instance) -> String {
        schedule_text(instance, self.sent.iter().map(|&(t, id)| (id, t)))
    }
}

/// Instance text with an extra `@slot` column for every scheduled packet.
/// Unscheduled packets are omitted.
pub fn schedule_text(instance: &Instance, assigned: impl IntoIterator<Item = (PacketId, Time)>) -> String {
    let by_id: BTreeMap<PacketId, Time> = assigned.into_iter().collect();
    let mut s = format!("H={}\n", instance.horizon);
    for (id, slot) in by_id {
        if let Some(p) = instance.packet(id) {
            let _ = writeln!(s, "{} {} {} {} @{}", p.id, p.release, p.deadline, fmt_weight(p.weight), slot);
        }
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn text_round_trip() {
        let inst = Instance::from_triples(3, &[(1, 1, 1.0), (1, 2, 100.0), (2, 2, 2.5)]).unwrap();
        let text = inst.to_text();
        assert_eq!(text, "H=3\n0 1 1 1\n1 1 2 100\n2 2 2 2.5\n");
        assert_eq!(Instance::parse_text(&text).unwrap(), inst);
    }

    #[test]
    fn parse_rejects_bad_input() {
        assert!(matches!(Instance::parse_text("0 1 1 1\n"), Err(Error::Parse { line: 1, .. })));
        assert!(matches!(Instance::parse_text("H=2\n0 1 x 1\n"), Err(Error::Parse { line: 2, .. })));
        // deadline before release
        assert!(matches!(Instance::parse_text("H=2\n0 2 1 1\n"), Err(Error::InvalidInstance(_))));
        // ids out of order
        assert!(matches!(Instance::parse_text("H=2\n1 1 1 1\n0 1 1 1\n"), Err(Error::InvalidInstance(_))));
        // release after horizon
        assert!(Instance::parse_text("H=1\n0 2 2 1\n").is_err());
    }

    #[test]
    fn empty_text_is_empty_instance() {
        let inst = Instance::parse_text("# nothing\nH=5\n").unwrap();
        assert!(inst.is_empty());
        assert_eq!(inst.horizon, 5);
    }

    #[test]
    fn window_checks() {
        assert!(Window::new(1, 10).check(10).is_ok());
        assert!(Window::new(5, 4).check(10).is_err());
        assert!(Window::new(0, 4).check(10).is_err());
        assert!(Window::new(1, 11).check(10).is_err());
        assert_eq!(Window::new(3, 5).len(), 3);
    }

    #[test]
    fn mean_occupancy_uses_window_only() {
        let r = RunResult {
            sent: vec![],
            zeta: 0.0,
            zeta_total: 0.0,
            occupancy_trace: vec![10, 10, 1, 3],
            window: Window::new(3, 4),
        };
        assert_eq!(r.mean_occupancy(), 2.0);
    }
}
