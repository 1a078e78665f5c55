//! The batch protocol: sample parameter combinations, generate instances with
//! a warm-up prefix, and compare each policy against the offline optimum on
//! the measured window.

use std::fmt;
use std::str::FromStr;

use rand::Rng;

use super::exec::{map_indexed, Exec};
use crate::assignment::{offline_optimum_with, OfflineMode};
use crate::engine::simulate;
use crate::error::{Error, Result};
use crate::model::{Instance, Time, Window};
use crate::policies::{MgPolicy, PolicySpec, GOLDEN_RATIO};
use crate::workload::{derive_seed, generate, rng_for, scenario1, warmup_for, ArrivalModel, GenConfig};

/// Stream coordinate reserved for combination sampling.
const SAMPLING_STREAM: u64 = u64::MAX;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Scenario {
    #[default]
    Plain,
    /// Weights multiplied by deadlines.
    S1,
    S2,
    /// Bimodal slack.
    S3,
}

impl Scenario {
    pub fn name(&self) -> &'static str {
        match self {
            Scenario::Plain => "plain",
            Scenario::S1 => "S1",
            Scenario::S2 => "S2",
            Scenario::S3 => "S3",
        }
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scenario {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "plain" => Ok(Scenario::Plain),
            "s1" => Ok(Scenario::S1),
            "s2" => Ok(Scenario::S2),
            "s3" => Ok(Scenario::S3),
            _ => Err(Error::config(format!("unknown scenario {s:?} (plain, S1, S2, S3)"))),
        }
    }
}

/// What a repetition repeats.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RepMode {
    /// Every repetition replays the same instance.
    #[default]
    Literal,
    /// Every repetition draws a new instance with the combination's parameters.
    FreshInstance,
}

impl FromStr for RepMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "literal" => Ok(RepMode::Literal),
            "fresh" | "fresh-instance" => Ok(RepMode::FreshInstance),
            _ => Err(Error::config(format!("unknown rep mode {s:?} (literal, fresh)"))),
        }
    }
}

impl fmt::Display for RepMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RepMode::Literal => "literal",
            RepMode::FreshInstance => "fresh",
        })
    }
}

/// Inclusive sampling ranges. Integer ranges are sampled uniformly over their
/// integers, `λ` and `p` uniformly over the reals.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamSpace {
    pub steps: (u32, u32),
    pub lambda: (f64, f64),
    pub w_max: (u32, u32),
    pub d_max: (u32, u32),
    pub bimodal_p: (f64, f64),
    pub model: ArrivalModel,
}

impl Default for ParamSpace {
    fn default() -> Self {
        ParamSpace {
            steps: (200, 200),
            lambda: (0.7, 20.0),
            w_max: (1, 20),
            d_max: (1, 20),
            bimodal_p: (0.85, 0.85),
            model: ArrivalModel::Model1,
        }
    }
}

impl ParamSpace {
    pub fn validate(&self) -> Result<()> {
        let bad = |name: &str, lo: String, hi: String| Err(Error::config(format!("empty {name} range [{lo}, {hi}]")));
        if self.steps.0 > self.steps.1 || self.steps.0 < 1 {
            return bad("T", self.steps.0.to_string(), self.steps.1.to_string());
        }
        if !(self.lambda.0 > 0.0 && self.lambda.0 <= self.lambda.1 && self.lambda.1.is_finite()) {
            return bad("lambda", self.lambda.0.to_string(), self.lambda.1.to_string());
        }
        if self.w_max.0 > self.w_max.1 || self.w_max.0 < 1 {
            return bad("w_max", self.w_max.0.to_string(), self.w_max.1.to_string());
        }
        if self.d_max.0 > self.d_max.1 {
            return bad("d_max", self.d_max.0.to_string(), self.d_max.1.to_string());
        }
        let (p0, p1) = self.bimodal_p;
        if !(0.0 <= p0 && p0 <= p1 && p1 <= 1.0) {
            return bad("p", p0.to_string(), p1.to_string());
        }
        Ok(())
    }

    pub(crate) fn sample_one<R: Rng>(&self, rng: &mut R, index: usize) -> Combination {
        let real = |rng: &mut R, (lo, hi): (f64, f64)| if lo < hi { rng.random_range(lo..=hi) } else { lo };
        let steps = rng.random_range(self.steps.0..=self.steps.1);
        let lambda = real(rng, self.lambda);
        let w_max = rng.random_range(self.w_max.0..=self.w_max.1);
        let d_max = rng.random_range(self.d_max.0..=self.d_max.1);
        let bimodal_p = real(rng, self.bimodal_p);
        Combination { index, steps, lambda, w_max, d_max, bimodal_p, model: self.model, kappa: warmup_for(steps) }
    }
}

/// One sampled point of the parameter space.
#[derive(Debug, Clone, PartialEq)]
pub struct Combination {
    pub index: usize,
    pub steps: u32,
    pub lambda: f64,
    pub w_max: u32,
    pub d_max: u32,
    pub bimodal_p: f64,
    pub model: ArrivalModel,
    pub kappa: u32,
}

impl Combination {
    pub fn gen_config(&self, seed: u64) -> GenConfig {
        GenConfig {
            steps: self.steps,
            lambda: self.lambda,
            w_max: self.w_max,
            d_max: self.d_max,
            model: self.model,
            bimodal_p: self.bimodal_p,
            kappa: self.kappa,
            seed,
        }
    }

    /// The clock stops at `κ + T`.
    pub fn t_end(&self) -> Time {
        self.kappa as Time + self.steps as Time
    }

    /// The last `T` steps, `κ+1 ..= κ+T`.
    pub fn window(&self) -> Window {
        Window::new(self.kappa as Time + 1, self.t_end())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BatchConfig {
    pub scenario: Scenario,
    pub space: ParamSpace,
    pub combinations: usize,
    pub reps: usize,
    pub rep_mode: RepMode,
    pub policies: Vec<PolicySpec>,
    pub master_seed: u64,
    pub offline_mode: OfflineMode,
    pub exec: Exec,
}

impl Default for BatchConfig {
    fn default() -> Self {
        BatchConfig {
            scenario: Scenario::Plain,
            space: ParamSpace::default(),
            combinations: 50,
            reps: 20,
            rep_mode: RepMode::Literal,
            policies: vec![PolicySpec::mg(), PolicySpec::mlp()],
            master_seed: 0,
            offline_mode: OfflineMode::FullHorizon,
            exec: Exec::default(),
        }
    }
}

impl BatchConfig {
    pub fn validate(&self) -> Result<()> {
        self.space.validate()?;
        if self.combinations < 1 {
            return Err(Error::config("combinations must be >= 1"));
        }
        if self.reps < 1 {
            return Err(Error::config("reps must be >= 1"));
        }
        if self.policies.is_empty() {
            return Err(Error::config("at least one policy is required"));
        }
        let mut labels: Vec<String> = self.policies.iter().map(|p| p.label()).collect();
        labels.sort();
        labels.dedup();
        if labels.len() != self.policies.len() {
            return Err(Error::config("policy list contains duplicates"));
        }
        self.policies.iter().try_for_each(|p| p.validate())
    }

    /// The sampled combinations, in index order.
    pub fn sample_combinations(&self) -> Vec<Combination> {
        let mut rng = rng_for(derive_seed(self.master_seed, SAMPLING_STREAM, 0));
        (0..self.combinations).map(|i| self.space.sample_one(&mut rng, i)).collect()
    }

    /// Seed of the instance used by repetition `rep` of `combo`.
    pub fn instance_seed(&self, combo: &Combination, rep: usize) -> u64 {
        let rep = match self.rep_mode {
            RepMode::Literal => 0,
            RepMode::FreshInstance => rep as u64,
        };
        derive_seed(self.master_seed, combo.index as u64, rep)
    }

    /// Instance for one repetition, with the scenario's weight transform applied.
    pub fn instance(&self, combo: &Combination, rep: usize) -> Result<Instance> {
        let inst = generate(&combo.gen_config(self.instance_seed(combo, rep)))?;
        Ok(match self.scenario {
            Scenario::S1 => scenario1(&inst),
            _ => inst,
        })
    }

    pub fn labels(&self) -> Vec<String> {
        self.policies.iter().map(|p| p.label()).collect()
    }

    fn mg_index(&self) -> Option<usize> {
        self.policies.iter().position(|p| *p == PolicySpec::mg())
    }

    fn mlp_index(&self) -> Option<usize> {
        self.policies.iter().position(|p| *p == PolicySpec::Mlp)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PolicyOutcome {
    pub label: String,
    /// Mean windowed throughput over the repetitions.
    pub zeta: f64,
    /// Mean of `ζ_A / ζ_OFF` over the repetitions.
    pub rho: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BatchRecord {
    pub scenario: Scenario,
    pub combination: Combination,
    pub reps: usize,
    /// Seed of the first repetition's instance.
    pub seed: u64,
    /// Mean windowed occupancy under the first listed policy.
    pub nbar: f64,
    pub psi: Option<f64>,
    pub choice_freq_h: Option<f64>,
    pub zeta_off: f64,
    pub policies: Vec<PolicyOutcome>,
    /// Mean of `ζ_MLP / ζ_MG`, when both are listed.
    pub rho_hat: Option<f64>,
}

impl BatchRecord {
    pub fn rho(&self, label: &str) -> Option<f64> {
        self.policies.iter().find(|p| p.label == label).map(|p| p.rho)
    }

    pub fn zeta(&self, label: &str) -> Option<f64> {
        self.policies.iter().find(|p| p.label == label).map(|p| p.zeta)
    }
}

/// Ratio with the convention `0/0 = 1`.
pub fn ratio(num: f64, den: f64) -> f64 {
    if den == 0.0 {
        if num == 0.0 {
            1.0
        } else {
            f64::INFINITY
        }
    } else {
        num / den
    }
}

/// Result of one repetition.
#[derive(Debug, Clone)]
struct RepOutcome {
    zeta_off: f64,
    zetas: Vec<f64>,
    nbar: f64,
    psi_hits: u64,
    h_sent: u64,
    nonempty: u64,
}

fn run_rep(cfg: &BatchConfig, combo: &Combination, rep: usize) -> Result<RepOutcome> {
    let inst = cfg.instance(combo, rep)?;
    let (t_end, window) = (combo.t_end(), combo.window());
    let off = offline_optimum_with(&inst, t_end, window, cfg.offline_mode)?;
    let mg_at = cfg.mg_index();
    let mut zetas = Vec::with_capacity(cfg.policies.len());
    let mut nbar = 0.0;
    let mut stats = None;
    for (i, spec) in cfg.policies.iter().enumerate() {
        let result = if Some(i) == mg_at {
            let mut mg = MgPolicy::with_stats_window(GOLDEN_RATIO, window);
            let r = simulate(&mut mg, &inst, t_end, window)?;
            stats = Some(mg.stats());
            r
        } else {
            let mut policy = spec.build(&inst)?;
            simulate(policy.as_mut(), &inst, t_end, window)?
        };
        if i == 0 {
            nbar = result.mean_occupancy();
        }
        zetas.push(result.zeta);
    }
    let stats = match stats {
        Some(s) => s,
        None => {
            let mut mg = MgPolicy::with_stats_window(GOLDEN_RATIO, window);
            simulate(&mut mg, &inst, t_end, window)?;
            mg.stats()
        }
    };
    Ok(RepOutcome {
        zeta_off: off.zeta_off,
        zetas,
        nbar,
        psi_hits: stats.psi_hits,
        h_sent: stats.h_sent,
        nonempty: stats.nonempty_steps,
    })
}

fn fold_record(cfg: &BatchConfig, combo: Combination, reps: &[RepOutcome]) -> BatchRecord {
    // Literal repetitions of deterministic policies are identical, so a single
    // outcome stands for all of them.
    let n = reps.len() as f64;
    let mean = |f: &dyn Fn(&RepOutcome) -> f64| reps.iter().map(f).sum::<f64>() / n;
    let policies = cfg
        .policies
        .iter()
        .enumerate()
        .map(|(i, spec)| PolicyOutcome {
            label: spec.label(),
            zeta: mean(&|r| r.zetas[i]),
            rho: mean(&|r| ratio(r.zetas[i], r.zeta_off)),
        })
        .collect();
    let rho_hat = match (cfg.mlp_index(), cfg.mg_index()) {
        (Some(a), Some(b)) => Some(mean(&|r| ratio(r.zetas[a], r.zetas[b]))),
        _ => None,
    };
    let nonempty: u64 = reps.iter().map(|r| r.nonempty).sum();
    let (psi, choice_freq_h) = if nonempty == 0 {
        (None, None)
    } else {
        let hits: u64 = reps.iter().map(|r| r.psi_hits).sum();
        let h: u64 = reps.iter().map(|r| r.h_sent).sum();
        (Some(hits as f64 / nonempty as f64), Some(h as f64 / nonempty as f64))
    };
    BatchRecord {
        scenario: cfg.scenario,
        seed: cfg.instance_seed(&combo, 0),
        combination: combo,
        reps: cfg.reps,
        nbar: mean(&|r| r.nbar),
        psi,
        choice_freq_h,
        zeta_off: mean(&|r| r.zeta_off),
        policies,
        rho_hat,
    }
}

/// Runs the whole batch. Records come back in combination order and do not
/// depend on the executor.
pub fn run_protocol(cfg: &BatchConfig) -> Result<Vec<BatchRecord>> {
    cfg.validate()?;
    let combos = cfg.sample_combinations();
    let reps_run = match cfg.rep_mode {
        RepMode::Literal => 1,
        RepMode::FreshInstance => cfg.reps,
    };
    let outcomes = map_indexed(cfg.exec, combos.len() * reps_run, |unit| {
        let combo = &combos[unit / reps_run];
        let rep = unit % reps_run;
        run_rep(cfg, combo, rep).map_err(|e| {
            Error::Simulation(format!(
                "combination {} (T={} lambda={} wmax={} dmax={}) rep {} seed {}: {e}",
                combo.index,
                combo.steps,
                combo.lambda,
                combo.w_max,
                combo.d_max,
                rep,
                cfg.instance_seed(combo, rep)
            ))
        })
    });
    let mut outcomes = outcomes.into_iter();
    let mut records = Vec::with_capacity(combos.len());
    for combo in combos {
        let reps: Vec<RepOutcome> = outcomes.by_ref().take(reps_run).collect::<Result<_>>()?;
        records.push(fold_record(cfg, combo, &reps));
    }
    Ok(records)
}

/// Sample mean and sample standard deviation (n−1 denominator; 0 for n < 2).
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    if n < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    (mean, var.sqrt())
}

#[derive(Debug, Clone, PartialEq)]
pub struct SummaryLine {
    pub name: String,
    pub mean: f64,
    pub std: f64,
    pub n: usize,
}

/// Mean and sample stddev of every `rho_<label>` column and of `rho_hat`.
pub fn summarize(labels: &[String], records: &[BatchRecord]) -> Vec<SummaryLine> {
    let mut out = Vec::new();
    for label in labels {
        let v: Vec<f64> = records.iter().filter_map(|r| r.rho(label)).collect();
        let (mean, std) = mean_std(&v);
        out.push(SummaryLine { name: format!("rho_{label}"), mean, std, n: v.len() });
    }
    let v: Vec<f64> = records.iter().filter_map(|r| r.rho_hat).collect();
    if !v.is_empty() {
        let (mean, std) = mean_std(&v);
        out.push(SummaryLine { name: "rho_hat".into(), mean, std, n: v.len() });
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(mode: RepMode) -> BatchConfig {
        BatchConfig {
            space: ParamSpace {
                steps: (40, 60),
                lambda: (0.5, 4.0),
                w_max: (1, 10),
                d_max: (0, 6),
                ..Default::default()
            },
            combinations: 6,
            reps: 3,
            rep_mode: mode,
            master_seed: 17,
            ..Default::default()
        }
    }

    #[test]
    fn kappa_formula() {
        assert_eq!(warmup_for(100), 40);
        assert_eq!(warmup_for(500), 200);
        assert_eq!(warmup_for(50), 40);
        assert_eq!(warmup_for(101), 41);
    }

    #[test]
    fn sampling_stays_in_ranges() {
        let cfg = BatchConfig { combinations: 200, ..small(RepMode::Literal) };
        for c in cfg.sample_combinations() {
            assert!((40..=60).contains(&c.steps));
            assert!((0.5..=4.0).contains(&c.lambda));
            assert!((1..=10).contains(&c.w_max));
            assert!(c.d_max <= 6);
            assert_eq!(c.kappa, 40);
            assert_eq!(c.window(), Window::new(41, 40 + c.steps as Time));
        }
    }

    #[test]
    fn literal_record_equals_single_run() {
        let cfg = small(RepMode::Literal);
        let records = run_protocol(&cfg).unwrap();
        assert_eq!(records.len(), 6);
        for (i, r) in records.iter().enumerate() {
            assert_eq!(r.combination.index, i);
            let combo = &r.combination;
            let inst = cfg.instance(combo, 0).unwrap();
            let mg = crate::engine::run(&PolicySpec::mg(), &inst, combo.t_end(), combo.window(), 0).unwrap();
            assert_eq!(r.zeta("mg"), Some(mg.zeta));
            assert_eq!(r.nbar, mg.mean_occupancy());
            let off = crate::assignment::offline_optimum_with(&inst, combo.t_end(), combo.window(), cfg.offline_mode)
                .unwrap();
            assert_eq!(r.zeta_off, off.zeta_off);
            assert_eq!(r.rho("mg"), Some(ratio(mg.zeta, off.zeta_off)));
        }
    }

    #[test]
    fn fresh_reps_use_distinct_instances() {
        let cfg = small(RepMode::FreshInstance);
        let c = &cfg.sample_combinations()[0];
        assert_ne!(cfg.instance_seed(c, 0), cfg.instance_seed(c, 1));
        let lit = small(RepMode::Literal);
        assert_eq!(lit.instance_seed(c, 0), lit.instance_seed(c, 2));
    }

    #[test]
    fn dominance_and_ranges() {
        for mode in [RepMode::Literal, RepMode::FreshInstance] {
            let mut cfg = small(mode);
            // only the window-restricted optimum bounds windowed throughput
            cfg.offline_mode = OfflineMode::WindowOnly;
            cfg.policies = vec![PolicySpec::mg(), PolicySpec::mlp(), PolicySpec::Greedy, PolicySpec::edf_alpha(2.0)];
            for r in run_protocol(&cfg).unwrap() {
                for p in &r.policies {
                    assert!(p.rho >= 0.0 && p.rho <= 1.0 + 1e-9, "{p:?}");
                }
                assert!(r.nbar >= 0.0);
                if let Some(psi) = r.psi {
                    assert!((0.0..=1.0).contains(&psi));
                }
            }
        }
    }

    #[test]
    fn executor_does_not_change_results() {
        let mut cfg = small(RepMode::FreshInstance);
        cfg.exec = Exec::Sequential;
        let a = run_protocol(&cfg).unwrap();
        cfg.exec = Exec::Parallel { jobs: 4 };
        let b = run_protocol(&cfg).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn rejects_bad_configs() {
        let base = small(RepMode::Literal);
        assert!(run_protocol(&BatchConfig { combinations: 0, ..base.clone() }).is_err());
        assert!(run_protocol(&BatchConfig { reps: 0, ..base.clone() }).is_err());
        let mut c = base.clone();
        c.space.w_max = (5, 2);
        assert!(run_protocol(&c).unwrap_err().is_usage());
        let mut c = base;
        c.policies = vec![PolicySpec::mg(), PolicySpec::mg()];
        assert!(c.validate().is_err());
    }

    #[test]
    fn mean_std_basics() {
        assert_eq!(mean_std(&[2.0]), (2.0, 0.0));
        let (m, s) = mean_std(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(m, 2.5);
        assert!((s - (5.0f64 / 3.0).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn ratio_convention() {
        assert_eq!(ratio(0.0, 0.0), 1.0);
        assert_eq!(ratio(3.0, 4.0), 0.75);
    }
}
