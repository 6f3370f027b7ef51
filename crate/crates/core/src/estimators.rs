//! Running per-arm statistics and the plug-in estimators built on them.
//!
//! Nuisance estimates at round `t` use only the observations of rounds
//! `1..t`. Means are clamped to `[-c_mu, c_mu]`, standard deviations to
//! `[sqrt(c_sigma2), 1/sqrt(c_sigma2)]`, and the allocation probability of
//! arm 1 is `sigma_hat_1 / (sigma_hat_1 + sigma_hat_2)`.

use crate::error::{Error, Result};
use crate::model::{ArmId, PerArm, TruncationConstants};

/// Count, sum and sum of squares of the rewards seen on one arm.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct RunningArmStats {
    pub count: u64,
    pub sum: f64,
    pub sum_sq: f64,
}

impl RunningArmStats {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn update(&mut self, reward: f64) {
        self.count += 1;
        self.sum += reward;
        self.sum_sq += reward * reward;
    }

    /// Functional form of [`update`](Self::update).
    pub fn updated(mut self, reward: f64) -> Self {
        self.update(reward);
        self
    }

    /// Sample mean.
    pub fn mean_tilde(&self, arm: ArmId) -> Result<f64> {
        if self.count == 0 {
            return Err(Error::NoObservations(arm));
        }
        Ok(self.sum / self.count as f64)
    }

    /// Plug-in standard deviation `sqrt(E[Y^2] - E[Y]^2)` (divide by count).
    pub fn sigma_tilde(&self, arm: ArmId) -> Result<f64> {
        let mean = self.mean_tilde(arm)?;
        let second = self.sum_sq / self.count as f64;
        Ok((second - mean * mean).max(0.0).sqrt())
    }
}

/// Truncated means, truncated standard deviations and the allocation
/// probabilities used for one round.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NuisanceEstimates {
    pub mu_hat: PerArm<f64>,
    pub sigma_hat: PerArm<f64>,
    pub w_hat: PerArm<f64>,
}

impl NuisanceEstimates {
    /// Estimates used during the forced-alternation prefix: equal
    /// probabilities, `sigma_hat = 1`, and the clamped running mean of each
    /// arm (0 for an arm not yet drawn).
    pub fn initial(stats: &PerArm<RunningArmStats>, trunc: &TruncationConstants) -> Self {
        let mu = |arm: ArmId| {
            stats[arm]
                .mean_tilde(arm)
                .map(|m| trunc.clamp_mean(m))
                .unwrap_or(0.0)
        };
        NuisanceEstimates {
            mu_hat: PerArm::new(mu(ArmId::Arm1), mu(ArmId::Arm2)),
            sigma_hat: PerArm::new(1.0, 1.0),
            w_hat: PerArm::new(0.5, 0.5),
        }
    }

    /// Replace the allocation with `alpha/2 + (1 - alpha) w_hat_1`.
    pub fn mixed(mut self, alpha: f64) -> Self {
        let w1 = 0.5 * alpha + (1.0 - alpha) * self.w_hat[ArmId::Arm1];
        self.w_hat = PerArm::new(w1, 1.0 - w1);
        self
    }
}

/// Nuisance estimates from the running statistics of both arms.
pub fn nuisance(
    stats1: &RunningArmStats,
    stats2: &RunningArmStats,
    trunc: &TruncationConstants,
) -> Result<NuisanceEstimates> {
    let s1 = trunc.clamp_sigma(stats1.sigma_tilde(ArmId::Arm1)?);
    let s2 = trunc.clamp_sigma(stats2.sigma_tilde(ArmId::Arm2)?);
    let m1 = trunc.clamp_mean(stats1.mean_tilde(ArmId::Arm1)?);
    let m2 = trunc.clamp_mean(stats2.mean_tilde(ArmId::Arm2)?);
    let w1 = s1 / (s1 + s2);
    Ok(NuisanceEstimates {
        mu_hat: PerArm::new(m1, m2),
        sigma_hat: PerArm::new(s1, s2),
        w_hat: PerArm::new(w1, 1.0 - w1),
    })
}

/// AIPW score of `target` for a round in which `drawn` paid `reward`.
pub fn aipw_score(drawn: ArmId, reward: f64, nu: &NuisanceEstimates, target: ArmId) -> f64 {
    let mu = nu.mu_hat[target];
    if drawn == target {
        (reward - mu) / nu.w_hat[target] + mu
    } else {
        mu
    }
}

/// IPW score of `target`; zero when the other arm was drawn.
pub fn ipw_score(drawn: ArmId, reward: f64, nu: &NuisanceEstimates, target: ArmId) -> f64 {
    if drawn == target {
        reward / nu.w_hat[target]
    } else {
        0.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};

    fn stats(count: u64, sum: f64, sum_sq: f64) -> RunningArmStats {
        RunningArmStats { count, sum, sum_sq }
    }

    fn from_rewards(rewards: &[f64]) -> RunningArmStats {
        rewards
            .iter()
            .fold(RunningArmStats::new(), |s, &r| s.updated(r))
    }

    fn nu(mu: (f64, f64), w1: f64) -> NuisanceEstimates {
        NuisanceEstimates {
            mu_hat: PerArm::new(mu.0, mu.1),
            sigma_hat: PerArm::new(1.0, 1.0),
            w_hat: PerArm::new(w1, 1.0 - w1),
        }
    }

    #[test]
    fn update_examples() {
        let s = RunningArmStats::new().updated(2.0);
        assert_eq!(s, stats(1, 2.0, 4.0));
        let s = s.updated(0.0);
        assert_eq!(s, stats(2, 2.0, 4.0));
        let s = s.updated(-2.0);
        assert_eq!(s, stats(3, 0.0, 8.0));
    }

    #[test]
    fn mean_tilde_examples() {
        assert_eq!(stats(2, 3.0, 5.0).mean_tilde(ArmId::Arm1).unwrap(), 1.5);
        assert_eq!(stats(1, -4.0, 16.0).mean_tilde(ArmId::Arm1).unwrap(), -4.0);
        assert_eq!(
            RunningArmStats::new().mean_tilde(ArmId::Arm2),
            Err(Error::NoObservations(ArmId::Arm2))
        );
    }

    #[test]
    fn sigma_tilde_examples() {
        assert_eq!(stats(2, 0.0, 2.0).sigma_tilde(ArmId::Arm1).unwrap(), 1.0);
        assert_eq!(stats(1, 5.0, 25.0).sigma_tilde(ArmId::Arm1).unwrap(), 0.0);
        // rewards 0, 2, 0, 2: second moment 2, mean 1
        let s = from_rewards(&[0.0, 2.0, 0.0, 2.0]);
        assert_eq!(s, stats(4, 4.0, 8.0));
        assert_eq!(s.sigma_tilde(ArmId::Arm1).unwrap(), 1.0);
        assert!(RunningArmStats::new().sigma_tilde(ArmId::Arm1).is_err());
    }

    #[test]
    fn sigma_tilde_clamps_negative_rounding() {
        // identical values: the raw plug-in variance may round below zero
        for v in [0.1, 0.3, 1.7, 1e3 / 7.0] {
            let s = from_rewards(&[v; 7]);
            let sd = s.sigma_tilde(ArmId::Arm1).unwrap();
            assert!(sd.is_finite() && (0.0..1e-6).contains(&sd), "{v}: {sd}");
        }
    }

    #[test]
    fn nuisance_examples() {
        let t = TruncationConstants::default();
        // sigma_tilde = 1 for both
        let a = from_rewards(&[1.0, -1.0]);
        let n = nuisance(&a, &a, &t).unwrap();
        assert_eq!(n.w_hat, PerArm::new(0.5, 0.5));

        // sigma_tilde = 3 on arm 2
        let b = from_rewards(&[3.0, -3.0]);
        let n = nuisance(&a, &b, &t).unwrap();
        assert_eq!(n.w_hat, PerArm::new(0.25, 0.75));

        // zero spread on arm 1 is lifted to sqrt(1e-4) = 0.01
        let z = from_rewards(&[4.0]);
        let n = nuisance(&z, &a, &t).unwrap();
        assert!((n.sigma_hat[ArmId::Arm1] - 0.01).abs() < 1e-15);
        assert!((n.w_hat[ArmId::Arm1] - 0.01 / 1.01).abs() < 1e-15);

        assert_eq!(
            nuisance(&a, &RunningArmStats::new(), &t),
            Err(Error::NoObservations(ArmId::Arm2))
        );
    }

    #[test]
    fn nuisance_clamps_means() {
        let t = TruncationConstants::new(5.0, 0.25).unwrap();
        let big = from_rewards(&[10.0, 12.0]);
        let small = from_rewards(&[-30.0, -30.0]);
        let n = nuisance(&big, &small, &t).unwrap();
        assert_eq!(n.mu_hat, PerArm::new(5.0, -5.0));
        // sigma bounds [0.5, 2]
        assert_eq!(n.sigma_hat, PerArm::new(1.0, 0.5));
    }

    #[test]
    fn aipw_score_examples() {
        let n = nu((1.0, 0.7), 0.5);
        assert_eq!(aipw_score(ArmId::Arm1, 2.0, &n, ArmId::Arm1), 3.0);
        assert_eq!(aipw_score(ArmId::Arm1, 2.0, &n, ArmId::Arm2), 0.7);
        assert_eq!(aipw_score(ArmId::Arm2, 0.7, &n, ArmId::Arm2), 0.7);
    }

    #[test]
    fn ipw_score_examples() {
        let n = nu((1.0, 0.7), 0.5);
        assert_eq!(ipw_score(ArmId::Arm1, 2.0, &n, ArmId::Arm1), 4.0);
        assert_eq!(ipw_score(ArmId::Arm1, 2.0, &n, ArmId::Arm2), 0.0);
        assert_eq!(ipw_score(ArmId::Arm2, 0.0, &n, ArmId::Arm2), 0.0);
    }

    #[test]
    fn mixing_moves_toward_half() {
        let n = nu((0.0, 0.0), 0.2).mixed(0.5);
        assert!((n.w_hat[ArmId::Arm1] - 0.35).abs() < 1e-15);
        assert_eq!(n.w_hat[ArmId::Arm1] + n.w_hat[ArmId::Arm2], 1.0);
    }

    #[test]
    fn aipw_score_is_conditionally_unbiased() {
        // fixed nuisance, drawn ~ Bernoulli(w_hat), reward ~ N(mu_a, sigma_a^2)
        let (mu, sd) = ([0.4, -0.3], [1.0, 2.0]);
        let n = nu((0.1, 0.5), 0.3);
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let dists = [
            Normal::new(mu[0], sd[0]).unwrap(),
            Normal::new(mu[1], sd[1]).unwrap(),
        ];
        for target in ArmId::BOTH {
            let draws = 1_000_000;
            let (mut s, mut s2) = (0.0, 0.0);
            for _ in 0..draws {
                let u: f64 = rand::Rng::random(&mut rng);
                let drawn = if u < n.w_hat[ArmId::Arm1] {
                    ArmId::Arm1
                } else {
                    ArmId::Arm2
                };
                let reward = dists[drawn.index()].sample(&mut rng);
                let score = aipw_score(drawn, reward, &n, target);
                s += score;
                s2 += score * score;
            }
            let mean = s / draws as f64;
            let sd = (s2 / draws as f64 - mean * mean).sqrt();
            let tol = 4.0 * sd / 1e3;
            assert!(
                (mean - mu[target.index()]).abs() <= tol,
                "{target}: mean {mean} vs {} (tol {tol})",
                mu[target.index()]
            );
        }
    }

    #[test]
    fn sigma_tilde_converges() {
        let (mu, sigma) = (3.0, 2.5);
        let normal = Normal::new(mu, sigma).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut s = RunningArmStats::new();
        for _ in 0..100_000 {
            s.update(normal.sample(&mut rng));
        }
        let est = s.sigma_tilde(ArmId::Arm1).unwrap();
        assert!((est - sigma).abs() <= 0.02 * sigma, "sigma_tilde = {est}");
    }

    proptest! {
        #[test]
        fn allocation_sums_to_one_and_is_bounded(
            r1 in prop::collection::vec(-1e3f64..1e3, 1..20),
            r2 in prop::collection::vec(-1e3f64..1e3, 1..20),
            c_sigma2 in 1e-6f64..1.0,
        ) {
            let t = TruncationConstants::new(100.0, c_sigma2).unwrap();
            let n = nuisance(&from_rewards(&r1), &from_rewards(&r2), &t).unwrap();
            let (lo, hi) = (t.sigma_lo(), t.sigma_hi());
            let w_lo = lo / (lo + hi);
            let w_hi = hi / (lo + hi);
            prop_assert_eq!(n.w_hat[ArmId::Arm1] + n.w_hat[ArmId::Arm2], 1.0);
            for a in ArmId::BOTH {
                prop_assert!(n.w_hat[a] > 0.0 && n.w_hat[a] < 1.0);
                prop_assert!(n.w_hat[a] >= w_lo * (1.0 - 1e-12) && n.w_hat[a] <= w_hi * (1.0 + 1e-12));
                prop_assert!(n.sigma_hat[a] >= lo && n.sigma_hat[a] <= hi);
                prop_assert!(n.mu_hat[a].abs() <= t.c_mu());
            }
        }

        #[test]
        fn running_stats_satisfy_cauchy_schwarz(r in prop::collection::vec(-1e3f64..1e3, 1..50)) {
            let s = from_rewards(&r);
            prop_assert!(s.sum_sq * s.count as f64 >= s.sum * s.sum * (1.0 - 1e-9));
        }

        #[test]
        fn aipw_with_zero_mean_is_ipw(reward in -50f64..50.0, w1 in 0.01f64..0.99, drawn1 in any::<bool>()) {
            let n = nu((0.0, 0.0), w1);
            let drawn = if drawn1 { ArmId::Arm1 } else { ArmId::Arm2 };
            for target in ArmId::BOTH {
                prop_assert_eq!(aipw_score(drawn, reward, &n, target), ipw_score(drawn, reward, &n, target));
            }
        }
    }
}
