use super::{recommend_na_sa, RoundScores, SamplingParams, Strategy, StrategyKind, StrategyState};
use crate::error::Result;
use crate::model::{ArmId, ExperimentConfig};

/// Arm 1 on odd rounds, arm 2 on even rounds.
pub fn uniform_next_arm(t: u64) -> ArmId {
    if t % 2 == 1 {
        ArmId::Arm1
    } else {
        ArmId::Arm2
    }
}

/// Equal split by alternation, recommending the larger sample average.
#[derive(Debug, Clone)]
pub struct UniformStrategy {
    state: StrategyState,
}

impl UniformStrategy {
    pub fn new(cfg: &ExperimentConfig) -> Self {
        UniformStrategy {
            state: StrategyState::new(SamplingParams::from(cfg)),
        }
    }
}

impl Strategy for UniformStrategy {
    fn kind(&self) -> StrategyKind {
        StrategyKind::Uniform
    }

    fn next_arm(&mut self, t: u64, _u: f64) -> ArmId {
        self.state.prepare(t);
        uniform_next_arm(t)
    }

    fn record(&mut self, t: u64, arm: ArmId, reward: f64) -> Result<RoundScores> {
        self.state.record(t, arm, reward)
    }

    fn recommend(&self, t: u64) -> Result<ArmId> {
        recommend_na_sa(t, &self.state)
    }

    fn state(&self) -> &StrategyState {
        &self.state
    }
}
