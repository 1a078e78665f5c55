//! Online selection policies and their textual specs.
//!
//! A spec is written `kind[:key=value,...]`, e.g. `mg`, `mg:phi=1.5`,
//! `edf:alpha=2`, `mm:nbar=10`, `lmg:alpha=0.5,f=30`, `smmg:p=0.95`.

use std::fmt;
use std::str::FromStr;

use crate::engine::Policy;
use crate::error::{Error, Result};
use crate::model::Instance;

mod lmg;
mod mlp;
mod select;

pub use lmg::{choose_better, lmg_epoch_length, lmg_run, lmg_run_traced, LmgPolicy, PHI_MAX, PHI_MIN, PHI_STEP};
pub use mlp::{select_mlp, MlpPolicy, MmPolicy};
pub use select::{
    select_edf_alpha, select_eh, select_greedy, select_mg, select_smmg, EdfAlphaPolicy, EhChoice, EhPair, EhStats,
    GreedyPolicy, MgPolicy, SmmgPolicy,
};

/// `(1 + √5) / 2`.
pub const GOLDEN_RATIO: f64 = 1.618_033_988_749_895;

/// Literal threshold used by the ψ indicator `w_h > 1.618·w_e`.
pub const PSI_THRESHOLD: f64 = 1.618;

/// How MM estimates the load `n̄` it compares against its threshold.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum NbarEstimator {
    /// Mean of all occupancy samples since the start of the run.
    #[default]
    Cumulative,
    /// Exponentially weighted mean with the given weight on the newest sample.
    Ewma(f64),
}

/// Which packet SMMG treats as the "second largest".
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SecondMaxRule {
    /// Earliest deadline among packets at the largest weight strictly below `w_h`.
    #[default]
    StrictlyBelow,
    /// Second entry of the pending list sorted by weight (descending, then
    /// deadline, then id), duplicates of `w_h` included.
    SortedSecond,
}

/// LMG learning-epoch length.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum EpochLength {
    Fixed(u32),
    /// `⌈max(0.1·T, 30 / min(1, λ))⌉`, from the instance's generator config.
    #[default]
    Auto,
}

#[derive(Debug, Clone, PartialEq)]
pub enum PolicySpec {
    Mg { divisor: f64 },
    Greedy,
    EdfAlpha { alpha: f64 },
    Mlp,
    Mm { threshold: f64, estimator: NbarEstimator },
    Lmg { divisor: f64, smoothing: f64, epoch: EpochLength },
    Smmg { divisor: f64, fraction: f64, rule: SecondMaxRule },
}

impl PolicySpec {
    pub fn mg() -> Self {
        PolicySpec::Mg { divisor: GOLDEN_RATIO }
    }

    pub fn mlp() -> Self {
        PolicySpec::Mlp
    }

    pub fn edf_alpha(alpha: f64) -> Self {
        PolicySpec::EdfAlpha { alpha }
    }

    pub fn mm(threshold: f64) -> Self {
        PolicySpec::Mm { threshold, estimator: NbarEstimator::Cumulative }
    }

    pub fn lmg() -> Self {
        PolicySpec::Lmg { divisor: GOLDEN_RATIO, smoothing: 0.5, epoch: EpochLength::Auto }
    }

    pub fn smmg(fraction: f64) -> Self {
        PolicySpec::Smmg { divisor: GOLDEN_RATIO, fraction, rule: SecondMaxRule::StrictlyBelow }
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            PolicySpec::Mg { .. } => "mg",
            PolicySpec::Greedy => "greedy",
            PolicySpec::EdfAlpha { .. } => "edf",
            PolicySpec::Mlp => "mlp",
            PolicySpec::Mm { .. } => "mm",
            PolicySpec::Lmg { .. } => "lmg",
            PolicySpec::Smmg { .. } => "smmg",
        }
    }

    /// Column-safe name, e.g. `mg`, `smmg_p0.95`.
    pub fn label(&self) -> String {
        self.to_string().replace(':', "_").replace('=', "").replace(',', "_")
    }

    pub fn validate(&self) -> Result<()> {
        let check_divisor = |d: f64| {
            if (PHI_MIN..=PHI_MAX).contains(&d) {
                Ok(())
            } else {
                Err(Error::config(format!("divisor must lie in [1, 2.5], got {d}")))
            }
        };
        match *self {
            PolicySpec::Mg { divisor } => check_divisor(divisor),
            PolicySpec::Greedy | PolicySpec::Mlp => Ok(()),
            PolicySpec::EdfAlpha { alpha } => {
                if alpha >= 1.0 {
                    Ok(())
                } else {
                    Err(Error::config(format!("EDF alpha must be >= 1, got {alpha}")))
                }
            }
            PolicySpec::Mm { threshold, estimator } => {
                if threshold.is_nan() || threshold <= 0.0 {
                    return Err(Error::config(format!("MM threshold must be > 0, got {threshold}")));
                }
                match estimator {
                    NbarEstimator::Ewma(w) if !(w > 0.0 && w <= 1.0) => {
                        Err(Error::config(format!("EWMA weight must lie in (0, 1], got {w}")))
                    }
                    _ => Ok(()),
                }
            }
            PolicySpec::Lmg { divisor, smoothing, epoch } => {
                check_divisor(divisor)?;
                if !(0.0..=1.0).contains(&smoothing) {
                    return Err(Error::config(format!("LMG smoothing must lie in [0, 1], got {smoothing}")));
                }
                if epoch == EpochLength::Fixed(0) {
                    return Err(Error::config("LMG epoch length must be >= 1"));
                }
                Ok(())
            }
            PolicySpec::Smmg { divisor, fraction, .. } => {
                check_divisor(divisor)?;
                if fraction > 0.0 && fraction < 1.0 {
                    Ok(())
                } else {
                    Err(Error::config(format!("SMMG p must lie in (0, 1), got {fraction}")))
                }
            }
        }
    }

    /// Instantiates a fresh policy for one run over `instance`.
    pub fn build(&self, instance: &Instance) -> Result<Box<dyn Policy>> {
        self.validate()?;
        Ok(match *self {
            PolicySpec::Mg { divisor } => Box::new(MgPolicy::new(divisor)),
            PolicySpec::Greedy => Box::new(GreedyPolicy),
            PolicySpec::EdfAlpha { alpha } => Box::new(EdfAlphaPolicy { alpha }),
            PolicySpec::Mlp => Box::new(MlpPolicy),
            PolicySpec::Mm { threshold, estimator } => Box::new(MmPolicy::new(threshold, estimator)),
            PolicySpec::Lmg { divisor, smoothing, epoch } => {
                let len = match epoch {
                    EpochLength::Fixed(f) => f,
                    EpochLength::Auto => {
                        let cfg = instance.gen_config().ok_or_else(|| {
                            Error::config("LMG with automatic epoch length needs a generated instance; pass f=<steps>")
                        })?;
                        lmg_epoch_length(cfg.steps, cfg.lambda)
                    }
                };
                Box::new(LmgPolicy::new(divisor, smoothing, len))
            }
            PolicySpec::Smmg { divisor, fraction, rule } => Box::new(SmmgPolicy { divisor, fraction, rule }),
        })
    }
}

fn same(a: f64, b: f64) -> bool {
    (a - b).abs() < 1e-12
}

impl fmt::Display for PolicySpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut params: Vec<String> = Vec::new();
        match *self {
            PolicySpec::Mg { divisor } => {
                if !same(divisor, GOLDEN_RATIO) {
                    params.push(format!("phi={divisor}"));
                }
            }
            PolicySpec::Greedy | PolicySpec::Mlp => {}
            PolicySpec::EdfAlpha { alpha } => params.push(format!("alpha={alpha}")),
            PolicySpec::Mm { threshold, estimator } => {
                params.push(format!("nbar={threshold}"));
                if let NbarEstimator::Ewma(w) = estimator {
                    params.push(format!("ewma={w}"));
                }
            }
            PolicySpec::Lmg { divisor, smoothing, epoch } => {
                if !same(divisor, GOLDEN_RATIO) {
                    params.push(format!("phi={divisor}"));
                }
                if !same(smoothing, 0.5) {
                    params.push(format!("alpha={smoothing}"));
                }
                if let EpochLength::Fixed(n) = epoch {
                    params.push(format!("f={n}"));
                }
            }
            PolicySpec::Smmg { divisor, fraction, rule } => {
                params.push(format!("p={fraction}"));
                if !same(divisor, GOLDEN_RATIO) {
                    params.push(format!("phi={divisor}"));
                }
                if rule == SecondMaxRule::SortedSecond {
                    params.push("rule=sorted".into());
                }
            }
        }
        f.write_str(self.kind_name())?;
        if !params.is_empty() {
            write!(f, ":{}", params.join(","))?;
        }
        Ok(())
    }
}

impl FromStr for PolicySpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let (kind, rest) = s.split_once(':').unwrap_or((s, ""));
        let mut spec = match kind.to_ascii_lowercase().as_str() {
            "mg" => PolicySpec::mg(),
            "greedy" => PolicySpec::Greedy,
            "edf" | "edfalpha" | "edf_alpha" => PolicySpec::edf_alpha(GOLDEN_RATIO),
            "mlp" => PolicySpec::Mlp,
            "mm" => PolicySpec::mm(10.0),
            "lmg" => PolicySpec::lmg(),
            "smmg" => PolicySpec::smmg(0.95),
            other => return Err(Error::config(format!("unknown policy {other:?}"))),
        };
        for kv in rest.split(',').filter(|kv| !kv.is_empty()) {
            let (key, value) =
                kv.split_once('=').ok_or_else(|| Error::config(format!("policy parameter {kv:?} is not key=value")))?;
            let num = || -> Result<f64> {
                value.parse::<f64>().map_err(|_| Error::config(format!("bad number {value:?} for {key}")))
            };
            match (&mut spec, key) {
                (
                    PolicySpec::Mg { divisor } | PolicySpec::Lmg { divisor, .. } | PolicySpec::Smmg { divisor, .. },
                    "phi",
                ) => *divisor = num()?,
                (PolicySpec::EdfAlpha { alpha }, "alpha") => *alpha = num()?,
                (PolicySpec::Mm { threshold, .. }, "nbar") => *threshold = num()?,
                (PolicySpec::Mm { estimator, .. }, "ewma") => *estimator = NbarEstimator::Ewma(num()?),
                (PolicySpec::Lmg { smoothing, .. }, "alpha") => *smoothing = num()?,
                (PolicySpec::Lmg { epoch, .. }, "f") => {
                    *epoch = if value == "auto" {
                        EpochLength::Auto
                    } else {
                        EpochLength::Fixed(
                            value.parse().map_err(|_| Error::config(format!("bad epoch length {value:?}")))?,
                        )
                    }
                }
                (PolicySpec::Smmg { fraction, .. }, "p") => *fraction = num()?,
                (PolicySpec::Smmg { rule, .. }, "rule") => {
                    *rule = match value {
                        "strict" => SecondMaxRule::StrictlyBelow,
                        "sorted" => SecondMaxRule::SortedSecond,
                        _ => return Err(Error::config(format!("unknown SMMG rule {value:?}"))),
                    }
                }
                _ => return Err(Error::config(format!("policy {kind} has no parameter {key:?}"))),
            }
        }
        spec.validate()?;
        Ok(spec)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_display() {
        for text in [
            "mg",
            "mlp",
            "greedy",
            "edf:alpha=2",
            "mm:nbar=10",
            "mm:nbar=5,ewma=0.1",
            "lmg",
            "lmg:alpha=1,f=30",
            "smmg:p=0.85",
            "smmg:p=0.95,rule=sorted",
            "mg:phi=1.5",
        ] {
            let spec: PolicySpec = text.parse().unwrap();
            assert_eq!(spec.to_string(), text);
        }
        assert_eq!("smmg:p=0.95".parse::<PolicySpec>().unwrap().label(), "smmg_p0.95");
        assert_eq!("MG".parse::<PolicySpec>().unwrap(), PolicySpec::mg());
    }

    #[test]
    fn parse_rejects_bad_specs() {
        for text in [
            "rmix",
            "mg:phi=3",
            "mg:phi=0.5",
            "smmg:p=1",
            "smmg:p=0",
            "lmg:alpha=2",
            "lmg:f=0",
            "edf:alpha=0.5",
            "mm:nbar=0",
            "mg:x=1",
            "mg:phi",
        ] {
            assert!(text.parse::<PolicySpec>().is_err(), "{text}");
        }
    }

    #[test]
    fn lmg_auto_epoch_needs_generated_instance() {
        let inst = Instance::empty(3);
        assert!(PolicySpec::lmg().build(&inst).is_err());
        assert!("lmg:f=5".parse::<PolicySpec>().unwrap().build(&inst).is_ok());
    }

    #[test]
    fn golden_ratio_value() {
        assert_eq!(GOLDEN_RATIO, (1.0 + 5f64.sqrt()) / 2.0);
    }
}
