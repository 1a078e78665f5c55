//! Named parameter spaces.

use super::batch::{BatchConfig, ParamSpace, RepMode, Scenario};
use crate::error::{Error, Result};
use crate::policies::PolicySpec;
use crate::workload::ArrivalModel;

/// Preset names accepted by [`scenario_presets`].
pub const PRESET_NAMES: [&str; 4] = ["S1", "S2", "S3", "MOD"];

/// Batch configuration for a named preset, at desk scale (50 combinations,
/// 20 repetitions). `MOD` is the space used to evaluate the MG variants.
pub fn scenario_presets(name: &str) -> Result<BatchConfig> {
    let base = BatchConfig::default();
    let cfg = match name.to_ascii_uppercase().as_str() {
        "S1" => BatchConfig {
            scenario: Scenario::S1,
            space: ParamSpace {
                steps: (200, 200),
                lambda: (0.7, 20.0),
                w_max: (1, 20),
                d_max: (1, 40),
                ..ParamSpace::default()
            },
            ..base
        },
        "S2" => BatchConfig {
            scenario: Scenario::S2,
            space: ParamSpace {
                steps: (50, 750),
                lambda: (0.5, 50.0),
                w_max: (2, 50),
                d_max: (1, 50),
                ..ParamSpace::default()
            },
            ..base
        },
        "S3" => BatchConfig {
            scenario: Scenario::S3,
            space: ParamSpace {
                steps: (100, 300),
                lambda: (0.7, 6.0),
                w_max: (2, 7),
                // slack comes from the bimodal law; d_max plays no part
                d_max: (0, 0),
                bimodal_p: (0.75, 0.95),
                model: ArrivalModel::Model2,
            },
            ..base
        },
        "MOD" => BatchConfig {
            scenario: Scenario::Plain,
            space: ParamSpace {
                steps: (200, 200),
                lambda: (0.7, 15.0),
                w_max: (1, 30),
                d_max: (1, 23),
                ..ParamSpace::default()
            },
            rep_mode: RepMode::Literal,
            policies: vec![PolicySpec::mg(), PolicySpec::mlp(), PolicySpec::lmg(), PolicySpec::smmg(0.95)],
            ..base
        },
        _ => {
            return Err(Error::config(format!("unknown preset {name:?} (expected one of {})", PRESET_NAMES.join(", "))))
        }
    };
    Ok(cfg)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn preset_ranges() {
        assert_eq!(scenario_presets("S2").unwrap().space.lambda, (0.5, 50.0));
        assert_eq!(scenario_presets("S3").unwrap().space.bimodal_p, (0.75, 0.95));
        assert_eq!(scenario_presets("S1").unwrap().space.d_max.1, 40);
        assert_eq!(scenario_presets("s1").unwrap().scenario, Scenario::S1);
        assert_eq!(scenario_presets("S3").unwrap().space.model, ArrivalModel::Model2);
        assert!(scenario_presets("S9").unwrap_err().is_usage());
        for name in PRESET_NAMES {
            let c = scenario_presets(name).unwrap();
            c.validate().unwrap();
            assert_eq!((c.combinations, c.reps), (50, 20));
        }
    }
}
