//! Experiment specification files.
//!
//! A spec file is TOML. Only `mu1`, `mu2` and `variance_pairs` are required:
//!
//! ```toml
//! setting_id = "setting1"
//! mu1 = 1.0
//! mu2 = [0.80, 0.85, 0.90, 0.95, 0.99]
//! variance_pairs = [[1, 5], [1, 10], [1, 20], [1, 50]]
//! pair_scale = "variance"      # or "std"
//! strategies = ["na-aipw", "na-ipw", "na-sa", "oracle", "uniform"]
//! trials = 1000
//! horizon = 10000
//! checkpoint_step = 100        # or an explicit `checkpoints = [...]`
//! init_rounds = 2
//! c_mu = 100.0
//! c_sigma2 = 1e-4
//! seed = 0
//! mixing = false
//! ```
//!
//! Unknown keys are rejected.

use std::path::Path;

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::harness::{ExperimentSpec, PairScale};
use crate::model::{step_checkpoints, ExperimentConfig, TruncationConstants};
use crate::strategies::StrategyKind;

pub const DEFAULT_TRIALS: u64 = 1000;
pub const DEFAULT_HORIZON: u64 = 10_000;
pub const DEFAULT_CHECKPOINT_STEP: u64 = 100;
pub const DEFAULT_INIT_ROUNDS: u64 = 2;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSpec {
    setting_id: Option<String>,
    mu1: f64,
    mu2: Vec<f64>,
    variance_pairs: Vec<[f64; 2]>,
    pair_scale: Option<String>,
    strategies: Option<Vec<String>>,
    trials: Option<u64>,
    horizon: Option<u64>,
    checkpoint_step: Option<u64>,
    checkpoints: Option<Vec<u64>>,
    init_rounds: Option<u64>,
    c_mu: Option<f64>,
    c_sigma2: Option<f64>,
    seed: Option<u64>,
    mixing: Option<bool>,
}

/// Command-line values that take precedence over the file.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct SpecOverrides {
    pub trials: Option<u64>,
    pub horizon: Option<u64>,
    pub checkpoint_step: Option<u64>,
    pub seed: Option<u64>,
}

pub fn parse_spec(path: &Path) -> Result<ExperimentSpec> {
    parse_spec_with(path, &SpecOverrides::default())
}

pub fn parse_spec_with(path: &Path, overrides: &SpecOverrides) -> Result<ExperimentSpec> {
    let text =
        std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    let stem = path
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or("experiment");
    parse_spec_str(&text, stem, overrides)
}

fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].matches('\n').count() + 1
}

/// Parse spec text; `default_id` names the setting when the file does not.
pub fn parse_spec_str(
    text: &str,
    default_id: &str,
    overrides: &SpecOverrides,
) -> Result<ExperimentSpec> {
    let raw: RawSpec = toml::from_str(text).map_err(|e| Error::Parse {
        line: e.span().map(|s| line_of(text, s.start)).unwrap_or(0),
        message: e.message().trim().to_string(),
    })?;

    let setting_id = raw.setting_id.unwrap_or_else(|| default_id.to_string());
    if setting_id.is_empty()
        || !setting_id
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || matches!(c, '_' | '-' | '.'))
    {
        return Err(Error::Validation(format!(
            "setting_id `{setting_id}` may only contain letters, digits, '_', '-' and '.'"
        )));
    }

    let pair_scale = match raw.pair_scale.as_deref() {
        None | Some("variance") => PairScale::Variance,
        Some("std") => PairScale::StdDev,
        Some(other) => {
            return Err(Error::Validation(format!(
                "pair_scale must be `variance` or `std` (got `{other}`)"
            )))
        }
    };

    let strategies = match raw.strategies {
        None => StrategyKind::ALL.to_vec(),
        Some(names) => names
            .iter()
            .map(|n| n.parse::<StrategyKind>())
            .collect::<Result<Vec<_>>>()
            .map_err(|e| Error::Validation(e.to_string()))?,
    };

    let horizon = overrides.horizon.or(raw.horizon).unwrap_or(DEFAULT_HORIZON);
    let init_rounds = raw.init_rounds.unwrap_or(DEFAULT_INIT_ROUNDS);
    let checkpoints = match (overrides.checkpoint_step, raw.checkpoints) {
        (None, Some(explicit)) => explicit.into_iter().filter(|&c| c <= horizon).collect(),
        (step, _) => {
            let step = step
                .or(raw.checkpoint_step)
                .unwrap_or(DEFAULT_CHECKPOINT_STEP);
            step_checkpoints(horizon, step, init_rounds)
                .map_err(|e| Error::Validation(e.to_string()))?
        }
    };
    let trunc = TruncationConstants::new(
        raw.c_mu.unwrap_or(TruncationConstants::DEFAULT_C_MU),
        raw.c_sigma2
            .unwrap_or(TruncationConstants::DEFAULT_C_SIGMA2),
    )
    .map_err(|e| Error::Validation(e.to_string()))?;
    let seed = overrides.seed.or(raw.seed).unwrap_or(0);
    let config = ExperimentConfig::new(horizon, init_rounds, trunc, checkpoints, seed)
        .map_err(|e| Error::Validation(e.to_string()))?
        .with_mixing(raw.mixing.unwrap_or(false));

    let spec = ExperimentSpec {
        setting_id,
        mu1: raw.mu1,
        mu2_list: raw.mu2,
        variance_pairs: raw
            .variance_pairs
            .into_iter()
            .map(|[a, b]| (a, b))
            .collect(),
        pair_scale,
        strategies,
        trials: overrides.trials.or(raw.trials).unwrap_or(DEFAULT_TRIALS),
        config,
    };
    spec.validate()?;
    Ok(spec)
}
