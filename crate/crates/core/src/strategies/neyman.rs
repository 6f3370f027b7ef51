//! Neyman-allocation sampling with three recommendation rules: AIPW, IPW and
//! the plain sample average.

use super::{
    recommend_na_aipw, recommend_na_ipw, recommend_na_sa, RoundScores, SamplingParams, Strategy,
    StrategyKind, StrategyState,
};
use crate::error::{Error, Result};
use crate::model::{ArmId, ExperimentConfig};

/// Arm for round `t`: forced alternation (arm 1 on odd rounds) through the
/// initialization prefix, then arm 1 with the estimated Neyman probability.
///
/// Stores the estimates used in `state.nuisance_current`.
pub fn na_next_arm(t: u64, state: &mut StrategyState, u: f64) -> ArmId {
    let init_rounds = state.params().init_rounds;
    let w1 = state.prepare(t).w_hat[ArmId::Arm1];
    if t <= init_rounds {
        if t % 2 == 1 {
            ArmId::Arm1
        } else {
            ArmId::Arm2
        }
    } else if u < w1 {
        ArmId::Arm1
    } else {
        ArmId::Arm2
    }
}

#[derive(Debug, Clone)]
pub struct NeymanStrategy {
    kind: StrategyKind,
    state: StrategyState,
}

impl NeymanStrategy {
    /// `kind` selects the recommendation rule and must be one of the three
    /// Neyman strategies.
    pub fn new(kind: StrategyKind, cfg: &ExperimentConfig) -> Result<Self> {
        match kind {
            StrategyKind::NaAipw | StrategyKind::NaIpw | StrategyKind::NaSa => Ok(NeymanStrategy {
                kind,
                state: StrategyState::new(SamplingParams::from(cfg)),
            }),
            other => Err(Error::InvalidConfig(format!(
                "{other} is not a Neyman-allocation strategy"
            ))),
        }
    }
}

impl Strategy for NeymanStrategy {
    fn kind(&self) -> StrategyKind {
        self.kind
    }

    fn next_arm(&mut self, t: u64, u: f64) -> ArmId {
        na_next_arm(t, &mut self.state, u)
    }

    fn record(&mut self, t: u64, arm: ArmId, reward: f64) -> Result<RoundScores> {
        self.state.record(t, arm, reward)
    }

    fn recommend(&self, t: u64) -> Result<ArmId> {
        match self.kind {
            StrategyKind::NaAipw => recommend_na_aipw(t, &self.state),
            StrategyKind::NaIpw => recommend_na_ipw(t, &self.state),
            _ => recommend_na_sa(t, &self.state),
        }
    }

    fn state(&self) -> &StrategyState {
        &self.state
    }
}
