//! The known-variance benchmark: deterministic Neyman counts, arm 1 first,
//! sample-average recommendation.

use super::{recommend_na_sa, RoundScores, SamplingParams, Strategy, StrategyKind, StrategyState};
use crate::error::{Error, Result};
use crate::model::{ArmId, ExperimentConfig};
use crate::theory::target_allocation;

/// Number of arm-1 draws in a budget of `budget` rounds: the Neyman share
/// rounded half-to-even, clamped to `[1, budget - 1]`.
pub fn oracle_arm1_count(budget: u64, sigma1: f64, sigma2: f64) -> Result<u64> {
    if budget < 2 {
        return Err(Error::InvalidConfig(format!(
            "oracle budget must be >= 2 (got {budget})"
        )));
    }
    let (w1, _) = target_allocation(sigma1, sigma2)?;
    let n1 = (w1 * budget as f64).round_ties_even() as u64;
    Ok(n1.clamp(1, budget - 1))
}

/// Per-round arms for a single budget `t_budget`: arm 1 for the first `n1`
/// rounds, arm 2 after.
pub fn oracle_schedule(t_budget: u64, sigma1: f64, sigma2: f64) -> Result<Vec<ArmId>> {
    let n1 = oracle_arm1_count(t_budget, sigma1, sigma2)? as usize;
    let mut arms = vec![ArmId::Arm1; n1];
    arms.resize(t_budget as usize, ArmId::Arm2);
    Ok(arms)
}

/// Oracle strategy that stays valid at every checkpoint.
///
/// Rounds are split into segments ending at each checkpoint (and at the
/// horizon). Within a segment arm 1 is drawn until its count reaches the
/// oracle count for the segment's end, then arm 2. At each segment end the
/// counts therefore equal the single-budget schedule for that budget, and
/// with a single segment the draws are exactly [`oracle_schedule`].
#[derive(Debug, Clone)]
pub struct OracleStrategy {
    state: StrategyState,
    // (segment end, arm-1 count due by then)
    segments: Vec<(u64, u64)>,
    current: usize,
}

impl OracleStrategy {
    pub fn new(
        sigma1: f64,
        sigma2: f64,
        segment_ends: &[u64],
        params: SamplingParams,
    ) -> Result<Self> {
        if segment_ends.is_empty() || segment_ends.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidConfig(
                "oracle segment ends must be nonempty and ascending".into(),
            ));
        }
        let segments = segment_ends
            .iter()
            .map(|&end| Ok((end, oracle_arm1_count(end, sigma1, sigma2)?)))
            .collect::<Result<Vec<_>>>()?;
        Ok(OracleStrategy {
            state: StrategyState::new(params),
            segments,
            current: 0,
        })
    }

    /// Segments at the configured checkpoints plus the horizon.
    pub fn for_config(sigma1: f64, sigma2: f64, cfg: &ExperimentConfig) -> Result<Self> {
        let mut ends = cfg.checkpoints().to_vec();
        if ends.last() != Some(&cfg.horizon()) {
            ends.push(cfg.horizon());
        }
        Self::new(sigma1, sigma2, &ends, SamplingParams::from(cfg))
    }
}

impl Strategy for OracleStrategy {
    fn kind(&self) -> StrategyKind {
        StrategyKind::Oracle
    }

    fn next_arm(&mut self, t: u64, _u: f64) -> ArmId {
        self.state.prepare(t);
        while self.current + 1 < self.segments.len() && t > self.segments[self.current].0 {
            self.current += 1;
        }
        let due = self.segments[self.current].1;
        if self.state.stats[ArmId::Arm1].count < due {
            ArmId::Arm1
        } else {
            ArmId::Arm2
        }
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
