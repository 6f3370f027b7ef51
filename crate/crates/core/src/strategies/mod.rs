//! Sampling and recommendation strategies.
//!
//! Every strategy is driven through [`Strategy`]: the caller asks for the arm
//! of round `t`, passing one uniform variate that the strategy may use or
//! ignore, then records the reward of that arm, and may ask for a
//! recommendation after any recorded round.

mod neyman;
mod oracle;
mod uniform;

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::estimators::{aipw_score, ipw_score, nuisance, NuisanceEstimates, RunningArmStats};
use crate::model::{ArmId, BanditInstance, ExperimentConfig, PerArm, TruncationConstants};

pub use neyman::{na_next_arm, NeymanStrategy};
pub use oracle::{oracle_arm1_count, oracle_schedule, OracleStrategy};
pub use uniform::{uniform_next_arm, UniformStrategy};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum StrategyKind {
    NaAipw,
    NaIpw,
    NaSa,
    Oracle,
    Uniform,
}

impl StrategyKind {
    pub const ALL: [StrategyKind; 5] = [
        StrategyKind::NaAipw,
        StrategyKind::NaIpw,
        StrategyKind::NaSa,
        StrategyKind::Oracle,
        StrategyKind::Uniform,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            StrategyKind::NaAipw => "na-aipw",
            StrategyKind::NaIpw => "na-ipw",
            StrategyKind::NaSa => "na-sa",
            StrategyKind::Oracle => "oracle",
            StrategyKind::Uniform => "uniform",
        }
    }

    /// Stable small integer naming this strategy's random stream. Keyed by
    /// kind rather than list position, so adding a strategy to a run never
    /// changes the draws of the others.
    pub fn stream_id(self) -> u64 {
        match self {
            StrategyKind::NaAipw => 1,
            StrategyKind::NaIpw => 2,
            StrategyKind::NaSa => 3,
            StrategyKind::Oracle => 4,
            StrategyKind::Uniform => 5,
        }
    }

    /// Instantiate for one trial. The oracle reads the true standard
    /// deviations from `instance`; the other strategies ignore it.
    pub fn build(
        self,
        instance: &BanditInstance,
        cfg: &ExperimentConfig,
    ) -> Result<Box<dyn Strategy>> {
        Ok(match self {
            StrategyKind::NaAipw | StrategyKind::NaIpw | StrategyKind::NaSa => {
                Box::new(NeymanStrategy::new(self, cfg)?)
            }
            StrategyKind::Oracle => {
                let (s1, s2) = instance.sigmas();
                Box::new(OracleStrategy::for_config(s1, s2, cfg)?)
            }
            StrategyKind::Uniform => Box::new(UniformStrategy::new(cfg)),
        })
    }
}

impl fmt::Display for StrategyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for StrategyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        StrategyKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| Error::UnknownStrategy(s.to_string()))
    }
}

/// Scores contributed by one recorded round.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RoundScores {
    pub aipw: PerArm<f64>,
    pub ipw: PerArm<f64>,
}

/// Sampling parameters a state needs to rebuild its nuisance estimates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SamplingParams {
    pub trunc: TruncationConstants,
    pub init_rounds: u64,
    pub mixing: bool,
}

impl From<&ExperimentConfig> for SamplingParams {
    fn from(cfg: &ExperimentConfig) -> Self {
        SamplingParams {
            trunc: cfg.trunc(),
            init_rounds: cfg.init_rounds(),
            mixing: cfg.mixing(),
        }
    }
}

/// Adaptive state of one strategy within one trial.
///
/// `nuisance_current` always holds the estimates for round `prepared_for`,
/// computed from the statistics of rounds `1..prepared_for`.
#[derive(Debug, Clone, PartialEq)]
pub struct StrategyState {
    pub stats: PerArm<RunningArmStats>,
    pub nuisance_current: NuisanceEstimates,
    pub aipw_sums: PerArm<f64>,
    pub ipw_sums: PerArm<f64>,
    pub round: u64,
    prepared_for: u64,
    params: SamplingParams,
}

impl StrategyState {
    pub fn new(params: SamplingParams) -> Self {
        let stats = PerArm::default();
        StrategyState {
            nuisance_current: NuisanceEstimates::initial(&stats, &params.trunc),
            stats,
            aipw_sums: PerArm::default(),
            ipw_sums: PerArm::default(),
            round: 0,
            prepared_for: 0,
            params,
        }
    }

    pub fn params(&self) -> &SamplingParams {
        &self.params
    }

    /// Compute and store the nuisance estimates for round `t` from the
    /// observations recorded so far.
    ///
    /// Inside the initialization prefix, or while an arm is still unobserved,
    /// the allocation is fixed at one half.
    pub fn prepare(&mut self, t: u64) -> &NuisanceEstimates {
        let [s1, s2] = &self.stats.0;
        let nu = if t <= self.params.init_rounds || s1.count == 0 || s2.count == 0 {
            NuisanceEstimates::initial(&self.stats, &self.params.trunc)
        } else {
            let nu = nuisance(s1, s2, &self.params.trunc).expect("both arms observed");
            if self.params.mixing {
                nu.mixed(1.0 / t as f64)
            } else {
                nu
            }
        };
        self.nuisance_current = nu;
        self.prepared_for = t;
        &self.nuisance_current
    }

    /// Record the reward of round `t`, accumulating the AIPW and IPW scores
    /// of both arms under the estimates prepared for this round.
    pub fn record(&mut self, t: u64, arm: ArmId, reward: f64) -> Result<RoundScores> {
        if t != self.round + 1 {
            return Err(Error::OutOfOrder {
                expected: self.round + 1,
                got: t,
            });
        }
        if self.prepared_for != t {
            self.prepare(t);
        }
        let nu = &self.nuisance_current;
        let aipw = PerArm::new(
            aipw_score(arm, reward, nu, ArmId::Arm1),
            aipw_score(arm, reward, nu, ArmId::Arm2),
        );
        let ipw = PerArm::new(
            ipw_score(arm, reward, nu, ArmId::Arm1),
            ipw_score(arm, reward, nu, ArmId::Arm2),
        );
        for a in ArmId::BOTH {
            self.aipw_sums[a] += aipw[a];
            self.ipw_sums[a] += ipw[a];
        }
        self.stats[arm].update(reward);
        self.round = t;
        Ok(RoundScores { aipw, ipw })
    }

    fn check_round(&self, t: u64) -> Result<()> {
        if t == 0 || t != self.round {
            return Err(Error::OutOfOrder {
                expected: self.round,
                got: t,
            });
        }
        Ok(())
    }
}

/// The common interface of every strategy.
pub trait Strategy: Send {
    fn kind(&self) -> StrategyKind;

    /// Arm to draw at round `t`; `u` is a uniform variate on `[0, 1)`.
    fn next_arm(&mut self, t: u64, u: f64) -> ArmId;

    fn record(&mut self, t: u64, arm: ArmId, reward: f64) -> Result<RoundScores>;

    /// Recommendation after round `t`, which must be the last recorded round.
    fn recommend(&self, t: u64) -> Result<ArmId>;

    fn state(&self) -> &StrategyState;
}

fn argmax_ge(v: PerArm<f64>) -> ArmId {
    if v[ArmId::Arm1] >= v[ArmId::Arm2] {
        ArmId::Arm1
    } else {
        ArmId::Arm2
    }
}

/// Compare the AIPW sums; ties go to arm 1.
pub fn recommend_na_aipw(t: u64, state: &StrategyState) -> Result<ArmId> {
    state.check_round(t)?;
    Ok(argmax_ge(state.aipw_sums))
}

/// Compare the IPW sums; ties go to arm 1.
pub fn recommend_na_ipw(t: u64, state: &StrategyState) -> Result<ArmId> {
    state.check_round(t)?;
    Ok(argmax_ge(state.ipw_sums))
}

/// Compare the sample means; ties go to arm 1.
pub fn recommend_na_sa(t: u64, state: &StrategyState) -> Result<ArmId> {
    state.check_round(t)?;
    let m1 = state.stats[ArmId::Arm1].mean_tilde(ArmId::Arm1)?;
    let m2 = state.stats[ArmId::Arm2].mean_tilde(ArmId::Arm2)?;
    Ok(argmax_ge(PerArm::new(m1, m2)))
}
