//! Domain types shared across the crate: arms, bandit instances, truncation
//! constants and the per-trial experiment configuration.

use std::fmt;
use std::ops::{Index, IndexMut};

use crate::error::{Error, Result};

/// One of the two arms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ArmId {
    Arm1,
    Arm2,
}

impl ArmId {
    pub const BOTH: [ArmId; 2] = [ArmId::Arm1, ArmId::Arm2];

    pub fn other(self) -> ArmId {
        match self {
            ArmId::Arm1 => ArmId::Arm2,
            ArmId::Arm2 => ArmId::Arm1,
        }
    }

    /// Zero-based position, for array storage.
    pub fn index(self) -> usize {
        match self {
            ArmId::Arm1 => 0,
            ArmId::Arm2 => 1,
        }
    }
}

impl fmt::Display for ArmId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ArmId::Arm1 => f.write_str("arm 1"),
            ArmId::Arm2 => f.write_str("arm 2"),
        }
    }
}

/// A value per arm, indexable by [`ArmId`].
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PerArm<T>(pub [T; 2]);

impl<T> PerArm<T> {
    pub fn new(arm1: T, arm2: T) -> Self {
        PerArm([arm1, arm2])
    }
}

impl<T> Index<ArmId> for PerArm<T> {
    type Output = T;
    fn index(&self, arm: ArmId) -> &T {
        &self.0[arm.index()]
    }
}

impl<T> IndexMut<ArmId> for PerArm<T> {
    fn index_mut(&mut self, arm: ArmId) -> &mut T {
        &mut self.0[arm.index()]
    }
}

/// A two-armed Gaussian bandit: arm `a` pays `N(mu_a, var_a)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BanditInstance {
    pub mu1: f64,
    pub mu2: f64,
    pub var1: f64,
    pub var2: f64,
}

impl BanditInstance {
    pub fn new(mu1: f64, mu2: f64, var1: f64, var2: f64) -> Result<Self> {
        if !(mu1.is_finite() && mu2.is_finite()) {
            return Err(Error::InvalidInstance(format!(
                "means must be finite (got {mu1}, {mu2})"
            )));
        }
        if !(var1 > 0.0 && var2 > 0.0 && var1.is_finite() && var2.is_finite()) {
            return Err(Error::InvalidInstance(format!(
                "variances must be positive and finite (got {var1}, {var2})"
            )));
        }
        if mu1 == mu2 {
            return Err(Error::EqualMeans(mu1));
        }
        Ok(BanditInstance {
            mu1,
            mu2,
            var1,
            var2,
        })
    }

    /// Build from standard deviations instead of variances.
    pub fn from_std(mu1: f64, mu2: f64, sigma1: f64, sigma2: f64) -> Result<Self> {
        if !(sigma1 > 0.0 && sigma2 > 0.0) {
            return Err(Error::NonPositiveSigma(sigma1, sigma2));
        }
        Self::new(mu1, mu2, sigma1 * sigma1, sigma2 * sigma2)
    }

    pub fn mean(&self, arm: ArmId) -> f64 {
        match arm {
            ArmId::Arm1 => self.mu1,
            ArmId::Arm2 => self.mu2,
        }
    }

    pub fn sigma(&self, arm: ArmId) -> f64 {
        match arm {
            ArmId::Arm1 => self.var1.sqrt(),
            ArmId::Arm2 => self.var2.sqrt(),
        }
    }

    pub fn sigmas(&self) -> (f64, f64) {
        (self.var1.sqrt(), self.var2.sqrt())
    }
}

/// The arm with the strictly larger mean.
pub fn best_arm(instance: &BanditInstance) -> Result<ArmId> {
    if instance.mu1 > instance.mu2 {
        Ok(ArmId::Arm1)
    } else if instance.mu2 > instance.mu1 {
        Ok(ArmId::Arm2)
    } else {
        Err(Error::EqualMeans(instance.mu1))
    }
}

/// Signed gap `mu1 - mu2`.
pub fn gap(instance: &BanditInstance) -> f64 {
    instance.mu1 - instance.mu2
}

/// Clamp `v` into `[lo, hi]`.
pub fn truncate(v: f64, lo: f64, hi: f64) -> Result<f64> {
    if lo > hi || lo.is_nan() || hi.is_nan() {
        return Err(Error::InvalidBounds { lo, hi });
    }
    Ok(v.max(lo).min(hi))
}

/// Bounds used to keep the plug-in estimates well behaved: means are clamped
/// to `[-c_mu, c_mu]` and standard deviations to
/// `[sqrt(c_sigma2), 1/sqrt(c_sigma2)]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TruncationConstants {
    c_mu: f64,
    c_sigma2: f64,
}

impl TruncationConstants {
    pub const DEFAULT_C_MU: f64 = 100.0;
    pub const DEFAULT_C_SIGMA2: f64 = 1e-4;

    pub fn new(c_mu: f64, c_sigma2: f64) -> Result<Self> {
        if !(c_mu > 0.0 && c_mu.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "c_mu must be positive (got {c_mu})"
            )));
        }
        if !(c_sigma2 > 0.0 && c_sigma2 <= 1.0) {
            return Err(Error::InvalidConfig(format!(
                "c_sigma2 must lie in (0, 1] (got {c_sigma2})"
            )));
        }
        Ok(TruncationConstants { c_mu, c_sigma2 })
    }

    pub fn c_mu(&self) -> f64 {
        self.c_mu
    }

    pub fn c_sigma2(&self) -> f64 {
        self.c_sigma2
    }

    pub fn sigma_lo(&self) -> f64 {
        self.c_sigma2.sqrt()
    }

    pub fn sigma_hi(&self) -> f64 {
        1.0 / self.c_sigma2.sqrt()
    }

    pub fn clamp_mean(&self, v: f64) -> f64 {
        v.max(-self.c_mu).min(self.c_mu)
    }

    pub fn clamp_sigma(&self, v: f64) -> f64 {
        v.max(self.sigma_lo()).min(self.sigma_hi())
    }
}

impl Default for TruncationConstants {
    fn default() -> Self {
        TruncationConstants {
            c_mu: Self::DEFAULT_C_MU,
            c_sigma2: Self::DEFAULT_C_SIGMA2,
        }
    }
}

/// Per-trial run parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    horizon: u64,
    init_rounds: u64,
    trunc: TruncationConstants,
    checkpoints: Vec<u64>,
    master_seed: u64,
    mixing: bool,
}

impl ExperimentConfig {
    pub fn new(
        horizon: u64,
        init_rounds: u64,
        trunc: TruncationConstants,
        checkpoints: Vec<u64>,
        master_seed: u64,
    ) -> Result<Self> {
        if horizon < 2 {
            return Err(Error::InvalidConfig(format!(
                "horizon must be >= 2 (got {horizon})"
            )));
        }
        if init_rounds < 2 || !init_rounds.is_multiple_of(2) {
            return Err(Error::InvalidConfig(format!(
                "init_rounds must be even and >= 2 (got {init_rounds})"
            )));
        }
        if init_rounds > horizon {
            return Err(Error::InvalidConfig(format!(
                "init_rounds ({init_rounds}) exceeds horizon ({horizon})"
            )));
        }
        if checkpoints.is_empty() {
            return Err(Error::InvalidConfig("checkpoints must be nonempty".into()));
        }
        if checkpoints.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidConfig(
                "checkpoints must be strictly ascending".into(),
            ));
        }
        if checkpoints[0] < init_rounds || *checkpoints.last().unwrap() > horizon {
            return Err(Error::InvalidConfig(format!(
                "checkpoints must lie in [{init_rounds}, {horizon}]"
            )));
        }
        Ok(ExperimentConfig {
            horizon,
            init_rounds,
            trunc,
            checkpoints,
            master_seed,
            mixing: false,
        })
    }

    /// Defaults with checkpoints at every multiple of `step` up to `horizon`.
    pub fn with_step(horizon: u64, step: u64, master_seed: u64) -> Result<Self> {
        let checkpoints = step_checkpoints(horizon, step, 2)?;
        Self::new(
            horizon,
            2,
            TruncationConstants::default(),
            checkpoints,
            master_seed,
        )
    }

    /// Enable the decaying mixing `alpha_t / 2 + (1 - alpha_t) w_hat` with
    /// `alpha_t = 1/t` on the Neyman sampling probability.
    pub fn with_mixing(mut self, mixing: bool) -> Self {
        self.mixing = mixing;
        self
    }

    pub fn horizon(&self) -> u64 {
        self.horizon
    }

    pub fn init_rounds(&self) -> u64 {
        self.init_rounds
    }

    pub fn trunc(&self) -> TruncationConstants {
        self.trunc
    }

    pub fn checkpoints(&self) -> &[u64] {
        &self.checkpoints
    }

    pub fn master_seed(&self) -> u64 {
        self.master_seed
    }

    pub fn mixing(&self) -> bool {
        self.mixing
    }
}

/// `{step, 2 step, ...}` up to `horizon`, with `horizon` appended when it is
/// not a multiple of `step`; points below `min` are dropped.
pub fn step_checkpoints(horizon: u64, step: u64, min: u64) -> Result<Vec<u64>> {
    if step == 0 {
        return Err(Error::InvalidConfig(
            "checkpoint step must be positive".into(),
        ));
    }
    let mut cps: Vec<u64> = (1..=horizon / step)
        .map(|k| k * step)
        .filter(|&c| c >= min)
        .collect();
    if cps.last() != Some(&horizon) {
        cps.push(horizon);
    }
    Ok(cps)
}

/// One observed round.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Observation {
    pub round: u64,
    pub arm: ArmId,
    pub reward: f64,
}
