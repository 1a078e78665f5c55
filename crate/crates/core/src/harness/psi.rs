//! How often MG's heaviest packet dwarfs its most urgent one.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use super::batch::{Combination, ParamSpace};
use super::exec::{map_indexed, Exec};
use crate::engine::simulate;
use crate::error::{Error, Result};
use crate::model::{Instance, Time, Window};
use crate::policies::{EhStats, MgPolicy, GOLDEN_RATIO};
use crate::workload::{derive_seed, generate, rng_for};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PsiStat {
    /// Fraction of nonempty steps with `w_h > 1.618·w_e`.
    pub psi: f64,
    /// Fraction of nonempty steps where MG sent `h ≠ e`.
    pub choice_freq_h: f64,
}

impl PsiStat {
    fn from_stats(s: EhStats) -> Option<Self> {
        (s.nonempty_steps > 0).then(|| PsiStat {
            psi: s.psi_hits as f64 / s.nonempty_steps as f64,
            choice_freq_h: s.h_sent as f64 / s.nonempty_steps as f64,
        })
    }
}

/// Runs MG with `divisor` over `1..=instance.max_deadline()` and reports the
/// ψ pair, or `None` when the buffer was never nonempty.
pub fn psi_stat(instance: &Instance, divisor: f64) -> Result<Option<PsiStat>> {
    let t_end = instance.max_deadline().max(instance.horizon).max(1);
    psi_stat_window(instance, divisor, t_end, Window::full(t_end))
}

/// Like [`psi_stat`], counting only steps inside `window`.
pub fn psi_stat_window(instance: &Instance, divisor: f64, t_end: Time, window: Window) -> Result<Option<PsiStat>> {
    window.check(t_end)?;
    let mut mg = MgPolicy::with_stats_window(divisor, window);
    simulate(&mut mg, instance, t_end, window)?;
    Ok(PsiStat::from_stats(mg.stats()))
}

/// How ψ values are pooled into cells.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PsiGrouping {
    #[default]
    WmaxDmax,
    Wmax,
    Dmax,
    /// One cell per combination.
    Combination,
}

impl FromStr for PsiGrouping {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "wmax-dmax" | "wmax,dmax" => Ok(PsiGrouping::WmaxDmax),
            "wmax" => Ok(PsiGrouping::Wmax),
            "dmax" => Ok(PsiGrouping::Dmax),
            "combination" | "none" => Ok(PsiGrouping::Combination),
            _ => Err(Error::config(format!("unknown psi grouping {s:?} (wmax-dmax, wmax, dmax, combination)"))),
        }
    }
}

impl fmt::Display for PsiGrouping {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PsiGrouping::WmaxDmax => "wmax-dmax",
            PsiGrouping::Wmax => "wmax",
            PsiGrouping::Dmax => "dmax",
            PsiGrouping::Combination => "combination",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PsiStudyConfig {
    pub space: ParamSpace,
    pub combinations: usize,
    /// Fresh instances per combination.
    pub reps: usize,
    pub master_seed: u64,
    pub grouping: PsiGrouping,
    pub exec: Exec,
}

impl Default for PsiStudyConfig {
    fn default() -> Self {
        PsiStudyConfig {
            space: ParamSpace { d_max: (1, 40), ..ParamSpace::default() },
            // enough combinations that every (w_max, d_max) cell averages
            // over several arrival rates
            combinations: 8000,
            reps: 5,
            master_seed: 0,
            grouping: PsiGrouping::default(),
            exec: Exec::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PsiRow {
    pub combination: Combination,
    pub psi: f64,
    pub choice_freq_h: f64,
}

/// ψ averaged over the combinations that share a cell key.
#[derive(Debug, Clone, PartialEq)]
pub struct PsiCell {
    pub w_max: Option<u32>,
    pub d_max: Option<u32>,
    pub combination: Option<usize>,
    pub psi: f64,
    pub choice_freq_h: f64,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PsiStudy {
    pub rows: Vec<PsiRow>,
    pub cells: Vec<PsiCell>,
}

/// Samples combinations, measures ψ on the window of fresh instances, and
/// pools rows into cells. Rows with no nonempty step are left out.
pub fn psi_study(cfg: &PsiStudyConfig) -> Result<PsiStudy> {
    cfg.space.validate()?;
    if cfg.combinations < 1 || cfg.reps < 1 {
        return Err(Error::config("psi study needs combinations >= 1 and reps >= 1"));
    }
    let mut rng = rng_for(derive_seed(cfg.master_seed, u64::MAX, 0));
    let combos: Vec<Combination> = (0..cfg.combinations).map(|i| cfg.space.sample_one(&mut rng, i)).collect();
    let reps = cfg.reps;
    let stats = map_indexed(cfg.exec, combos.len() * reps, |unit| -> Result<EhStats> {
        let combo = &combos[unit / reps];
        let seed = derive_seed(cfg.master_seed, combo.index as u64, (unit % reps) as u64);
        let inst = generate(&combo.gen_config(seed))?;
        let mut mg = MgPolicy::with_stats_window(GOLDEN_RATIO, combo.window());
        simulate(&mut mg, &inst, combo.t_end(), combo.window())?;
        Ok(mg.stats())
    });
    let mut stats = stats.into_iter();
    let mut rows = Vec::new();
    for combo in combos {
        let mut total = EhStats::default();
        for s in stats.by_ref().take(reps) {
            let s = s?;
            total.nonempty_steps += s.nonempty_steps;
            total.psi_hits += s.psi_hits;
            total.h_sent += s.h_sent;
        }
        if let Some(p) = PsiStat::from_stats(total) {
            rows.push(PsiRow { combination: combo, psi: p.psi, choice_freq_h: p.choice_freq_h });
        }
    }
    let cells = group(&rows, cfg.grouping);
    Ok(PsiStudy { rows, cells })
}

fn group(rows: &[PsiRow], grouping: PsiGrouping) -> Vec<PsiCell> {
    type Key = (Option<u32>, Option<u32>, Option<usize>);
    let mut acc: BTreeMap<Key, (f64, f64, usize)> = BTreeMap::new();
    for r in rows {
        let c = &r.combination;
        let key = match grouping {
            PsiGrouping::WmaxDmax => (Some(c.w_max), Some(c.d_max), None),
            PsiGrouping::Wmax => (Some(c.w_max), None, None),
            PsiGrouping::Dmax => (None, Some(c.d_max), None),
            PsiGrouping::Combination => (None, None, Some(c.index)),
        };
        let e = acc.entry(key).or_insert((0.0, 0.0, 0));
        e.0 += r.psi;
        e.1 += r.choice_freq_h;
        e.2 += 1;
    }
    acc.into_iter()
        .map(|((w_max, d_max, combination), (psi, freq, n))| PsiCell {
            w_max,
            d_max,
            combination,
            psi: psi / n as f64,
            choice_freq_h: freq / n as f64,
            count: n,
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_packet_steps_give_zero() {
        let inst = Instance::from_triples(3, &[(1, 1, 4.0), (2, 2, 9.0), (3, 3, 1.0)]).unwrap();
        let s = psi_stat(&inst, GOLDEN_RATIO).unwrap().unwrap();
        assert_eq!(s, PsiStat { psi: 0.0, choice_freq_h: 0.0 });
    }

    #[test]
    fn ratio_two_every_step() {
        // each step holds a fresh urgent w=1 packet and a lax w=2 one; MG
        // sends the w=2 packet and the urgent one expires
        let mut triples = Vec::new();
        for t in 1..=6 {
            triples.push((t, t, 1.0));
            triples.push((t, 20, 2.0));
        }
        let inst = Instance::from_triples(6, &triples).unwrap();
        let s = psi_stat_window(&inst, GOLDEN_RATIO, 6, Window::full(6)).unwrap().unwrap();
        assert_eq!(s, PsiStat { psi: 1.0, choice_freq_h: 1.0 });
    }

    #[test]
    fn empty_instance_is_absent() {
        assert_eq!(psi_stat(&Instance::empty(5), GOLDEN_RATIO).unwrap(), None);
    }

    #[test]
    fn equal_weights_give_zero() {
        let cfg = PsiStudyConfig {
            space: ParamSpace { w_max: (1, 1), steps: (60, 60), lambda: (1.0, 6.0), ..ParamSpace::default() },
            combinations: 8,
            reps: 2,
            ..Default::default()
        };
        let study = psi_study(&cfg).unwrap();
        assert!(!study.rows.is_empty());
        assert!(study.rows.iter().all(|r| r.psi == 0.0 && r.choice_freq_h == 0.0));
    }

    #[test]
    fn grouping_keys() {
        let cfg = PsiStudyConfig {
            space: ParamSpace { w_max: (2, 3), d_max: (1, 2), steps: (60, 60), ..ParamSpace::default() },
            combinations: 20,
            reps: 1,
            ..Default::default()
        };
        let study = psi_study(&cfg).unwrap();
        assert!(study.cells.len() <= 4);
        assert_eq!(study.cells.iter().map(|c| c.count).sum::<usize>(), study.rows.len());
        for c in &study.cells {
            assert!((0.0..=1.0).contains(&c.psi) && (0.0..=1.0).contains(&c.choice_freq_h));
        }
        let by_combo = psi_study(&PsiStudyConfig { grouping: PsiGrouping::Combination, ..cfg }).unwrap();
        assert_eq!(by_combo.cells.len(), by_combo.rows.len());
    }
}
