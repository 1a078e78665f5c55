//! A chain of nodes: every packet must cross all of them before its
//! deadline, one hop per step.

use std::io::Write;

use crate::engine::{step, Buffer, OccupancyMean, Policy};
use crate::error::{Error, Result};
use crate::harness::{fmt_g, map_indexed, Exec};
use crate::model::{Instance, Packet, PacketId, Time, Window};
use crate::policies::PolicySpec;
use crate::workload::{derive_seed, generate, GenConfig};

#[derive(Debug, Clone, PartialEq)]
pub struct TandemConfig {
    /// Number of nodes including the sink, at least 2.
    pub nodes: usize,
    /// Give node `k` the temporary deadline `d − (N−1−k)`.
    pub adjust_deadlines: bool,
    /// Policy used at every sending node without an override.
    pub policy: PolicySpec,
    /// Per-node overrides, indexed from node 1; missing entries use `policy`.
    pub node_policies: Vec<Option<PolicySpec>>,
    pub gen: GenConfig,
}

impl Default for TandemConfig {
    fn default() -> Self {
        TandemConfig {
            nodes: 3,
            adjust_deadlines: true,
            policy: PolicySpec::mg(),
            node_policies: Vec::new(),
            gen: GenConfig::default(),
        }
    }
}

impl TandemConfig {
    pub fn validate(&self) -> Result<()> {
        if self.nodes < 2 {
            return Err(Error::config(format!("a tandem needs at least 2 nodes, got {}", self.nodes)));
        }
        if self.node_policies.len() > self.nodes - 1 {
            return Err(Error::config("more node policies than sending nodes"));
        }
        self.policy.validate()?;
        self.node_policies.iter().flatten().try_for_each(|p| p.validate())?;
        self.gen.validate()
    }

    /// Policy spec of sending node `k` (1-based).
    pub fn policy_at(&self, k: usize) -> &PolicySpec {
        self.node_policies.get(k - 1).and_then(|p| p.as_ref()).unwrap_or(&self.policy)
    }

    /// Deadline a packet with final deadline `d` carries at node `k` (1-based).
    pub fn effective_deadline(&self, k: usize, d: Time) -> Time {
        if self.adjust_deadlines {
            d - (self.nodes - 1 - k) as Time
        } else {
            d
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TandemResult {
    /// Windowed weight sent by each sending node `1..N−1`. Node `k`'s window
    /// is the given one shifted by `k−1` steps (capped at `t_end`), so each
    /// node is measured on the packets its predecessor sent in its window.
    pub node_zeta: Vec<f64>,
    pub node_sent: Vec<Vec<(Time, PacketId)>>,
    pub node_dropped: Vec<usize>,
}

impl TandemResult {
    /// Weight delivered to the sink.
    pub fn final_zeta(&self) -> f64 {
        *self.node_zeta.last().expect("at least one sending node")
    }
}

/// Generates `config.gen` and runs the chain over it.
pub fn run_tandem(config: &TandemConfig, t_end: Time, window: Window) -> Result<TandemResult> {
    config.validate()?;
    let instance = generate(&config.gen)?;
    run_tandem_on(config, &instance, t_end, window)
}

/// Runs the chain over a given instance; `config.gen` is ignored.
pub fn run_tandem_on(config: &TandemConfig, instance: &Instance, t_end: Time, window: Window) -> Result<TandemResult> {
    if config.nodes < 2 {
        return Err(Error::config(format!("a tandem needs at least 2 nodes, got {}", config.nodes)));
    }
    window.check(t_end)?;
    let senders = config.nodes - 1;
    let mut policies: Vec<Box<dyn Policy>> =
        (1..=senders).map(|k| config.policy_at(k).build(instance)).collect::<Result<_>>()?;
    let windows: Vec<Window> =
        (0..senders).map(|k| Window::new(window.first + k as Time, (window.last + k as Time).min(t_end))).collect();
    let mut buffers = vec![Buffer::new(); senders];
    let mut means = vec![OccupancyMean::default(); senders];
    let mut in_flight: Vec<Option<Packet>> = vec![None; senders];
    let mut result = TandemResult {
        node_zeta: vec![0.0; senders],
        node_sent: vec![Vec::new(); senders],
        node_dropped: vec![0; senders],
    };

    let packets = &instance.packets;
    let mut next = 0;
    for t in 1..=t_end {
        let first = next;
        while next < packets.len() && packets[next].release == t {
            next += 1;
        }
        let fresh: Vec<Packet> = packets[first..next]
            .iter()
            .map(|p| Packet { deadline: config.effective_deadline(1, p.deadline), ..*p })
            .collect();
        // downstream first, so a node only sees what was sent at t-1
        for k in (0..senders).rev() {
            let batch: Vec<Packet> = if k == 0 {
                fresh.clone()
            } else {
                in_flight[k - 1]
                    .take()
                    .map(|p| {
                        let d = instance.packets[p.id].deadline;
                        Packet { release: t, deadline: config.effective_deadline(k + 1, d), ..p }
                    })
                    .into_iter()
                    .collect()
            };
            let out = step(policies[k].as_mut(), &mut buffers[k], &batch, t, &mut means[k])?;
            result.node_dropped[k] += out.dropped;
            if let Some(p) = out.sent {
                result.node_sent[k].push((t, p.id));
                if windows[k].contains(t) {
                    result.node_zeta[k] += p.weight;
                }
                if k + 1 < senders {
                    in_flight[k] = Some(p);
                }
            }
        }
    }
    // packets still queued, or sent at t_end towards a next node, never arrive
    for (k, b) in buffers.iter().enumerate() {
        result.node_dropped[k] += b.len();
    }
    for (k, p) in in_flight.iter().enumerate().take(senders - 1) {
        result.node_dropped[k + 1] += p.is_some() as usize;
    }
    Ok(result)
}

/// Clock length that lets every generated packet drain: `H + d_max + N`.
pub fn tandem_t_end(config: &TandemConfig) -> Time {
    config.gen.horizon() + config.gen.d_max as Time + config.nodes as Time
}

/// One seeded instance run with and without the deadline adjustment.
#[derive(Debug, Clone, PartialEq)]
pub struct TandemPair {
    pub run: usize,
    pub seed: u64,
    pub adjusted: TandemResult,
    pub unadjusted: TandemResult,
}

/// `runs` seeded instances, each simulated both ways over the full clock of
/// [`tandem_t_end`].
pub fn tandem_study(config: &TandemConfig, runs: usize, master_seed: u64, exec: Exec) -> Result<Vec<TandemPair>> {
    config.validate()?;
    if runs < 1 {
        return Err(Error::config("runs must be >= 1"));
    }
    let t_end = tandem_t_end(config);
    let window = Window::full(t_end);
    map_indexed(exec, runs, |run| {
        let seed = derive_seed(master_seed, run as u64, 0);
        let instance = generate(&GenConfig { seed, ..config.gen.clone() })?;
        let with = TandemConfig { adjust_deadlines: true, ..config.clone() };
        let without = TandemConfig { adjust_deadlines: false, ..config.clone() };
        Ok(TandemPair {
            run,
            seed,
            adjusted: run_tandem_on(&with, &instance, t_end, window)?,
            unadjusted: run_tandem_on(&without, &instance, t_end, window)?,
        })
    })
    .into_iter()
    .collect()
}

/// Per-node throughput table, two rows per run.
pub fn write_tandem_csv<W: Write>(out: W, pairs: &[TandemPair]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let senders = pairs.first().map_or(0, |p| p.adjusted.node_zeta.len());
    let mut header = vec!["run".to_string(), "seed".into(), "adjusted".into()];
    header.extend((1..=senders).map(|k| format!("zeta_node{k}")));
    header.extend((1..=senders).map(|k| format!("dropped_node{k}")));
    w.write_record(&header)?;
    for p in pairs {
        for (flag, r) in [("true", &p.adjusted), ("false", &p.unadjusted)] {
            let mut row = vec![p.run.to_string(), p.seed.to_string(), flag.to_string()];
            row.extend(r.node_zeta.iter().map(|&z| fmt_g(z)));
            row.extend(r.node_dropped.iter().map(|d| d.to_string()));
            w.write_record(&row)?;
        }
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(nodes: usize, adjust: bool) -> TandemConfig {
        TandemConfig { nodes, adjust_deadlines: adjust, ..Default::default() }
    }

    fn one(r: Time, d: Time, w: f64) -> Instance {
        Instance::from_triples(r, &[(r, d, w)]).unwrap()
    }

    #[test]
    fn too_tight_for_the_hops_is_dropped_at_node_one() {
        let res = run_tandem_on(&cfg(3, true), &one(1, 1, 5.0), 5, Window::full(5)).unwrap();
        assert_eq!(res.node_zeta, vec![0.0, 0.0]);
        assert_eq!(res.node_dropped, vec![1, 0]);
    }

    #[test]
    fn adjusted_packet_crosses_in_time() {
        let res = run_tandem_on(&cfg(3, true), &one(1, 2, 5.0), 5, Window::full(5)).unwrap();
        assert_eq!(res.node_sent, vec![vec![(1, 0)], vec![(2, 0)]]);
        assert_eq!(res.final_zeta(), 5.0);
    }

    #[test]
    fn unadjusted_late_packet_expires_downstream() {
        // the packet is still at node 1 at t=7 = d: it hops, then dies at node 2
        let mut triples = vec![(1, 7, 1.0)];
        for t in 1..=6 {
            triples.push((t, 9, 50.0));
        }
        let inst = Instance::from_triples(7, &triples).unwrap();
        let res = run_tandem_on(&cfg(3, false), &inst, 20, Window::full(20)).unwrap();
        let light = inst.packets.iter().find(|p| p.weight == 1.0).unwrap().id;
        assert!(res.node_sent[0].contains(&(7, light)));
        assert!(res.node_sent[1].iter().all(|&(_, id)| id != light));
        assert_eq!(res.node_dropped[1], 1);
    }

    #[test]
    fn two_nodes_match_single_engine() {
        let gen = GenConfig { steps: 80, lambda: 3.0, w_max: 10, d_max: 6, seed: 3, ..Default::default() };
        let inst = generate(&gen).unwrap();
        let c = TandemConfig { nodes: 2, gen, ..Default::default() };
        let t_end = tandem_t_end(&c);
        let w = Window::full(t_end);
        let single = crate::engine::run(&PolicySpec::mg(), &inst, t_end, w, 0).unwrap();
        let res = run_tandem_on(&c, &inst, t_end, w).unwrap();
        assert_eq!(res.node_sent[0], single.sent);
        assert_eq!(res.final_zeta(), single.zeta);
    }

    #[test]
    fn downstream_never_beats_upstream() {
        for seed in 0..10 {
            for adjust in [true, false] {
                let gen = GenConfig {
                    steps: 100,
                    lambda: 2.0 + seed as f64,
                    w_max: 20,
                    d_max: 10,
                    seed,
                    ..Default::default()
                };
                let c = TandemConfig { nodes: 4, adjust_deadlines: adjust, gen, ..Default::default() };
                let t_end = tandem_t_end(&c);
                for w in [Window::full(t_end), Window::new(30, 90)] {
                    let r = run_tandem(&c, t_end, w).unwrap();
                    for k in 1..r.node_zeta.len() {
                        assert!(r.node_zeta[k] <= r.node_zeta[k - 1] + 1e-9, "{:?}", r.node_zeta);
                    }
                }
            }
        }
    }

    #[test]
    fn conservation_per_node() {
        let gen = GenConfig { steps: 60, lambda: 4.0, w_max: 9, d_max: 5, seed: 8, ..Default::default() };
        let c = TandemConfig { gen: gen.clone(), ..Default::default() };
        let inst = generate(&gen).unwrap();
        let t_end = tandem_t_end(&c);
        let r = run_tandem_on(&c, &inst, t_end, Window::full(t_end)).unwrap();
        assert_eq!(r.node_sent[0].len() + r.node_dropped[0], inst.len());
        assert_eq!(r.node_sent[1].len() + r.node_dropped[1], r.node_sent[0].len());
    }

    #[test]
    fn node_overrides() {
        let c = TandemConfig { node_policies: vec![None, Some(PolicySpec::mlp())], ..Default::default() };
        assert_eq!(c.policy_at(1), &PolicySpec::mg());
        assert_eq!(c.policy_at(2), &PolicySpec::mlp());
        assert!(TandemConfig { nodes: 1, ..Default::default() }.validate().is_err());
    }

    #[test]
    fn study_is_deterministic_and_parallel_safe() {
        let c = TandemConfig {
            gen: GenConfig { steps: 60, lambda: 5.0, w_max: 20, d_max: 10, ..Default::default() },
            ..Default::default()
        };
        let a = tandem_study(&c, 4, 1, Exec::Sequential).unwrap();
        let b = tandem_study(&c, 4, 1, Exec::Parallel { jobs: 3 }).unwrap();
        assert_eq!(a, b);
        let mut buf = Vec::new();
        write_tandem_csv(&mut buf, &a).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap().lines().count(), 1 + 8);
    }
}
