//! Seeded, parallel Monte Carlo engine.
//!
//! Every trial owns a seed derived from `(master_seed, cell, trial)` by a
//! counter-based hash, so results do not depend on scheduling or on the
//! number of worker threads. Within a trial, a ChaCha8 generator keyed by the
//! trial seed provides independent streams:
//!
//! * stream 0: the reward pairs `(Y1_t, Y2_t)`, one pair per round, shared
//!   by all strategies (common random numbers);
//! * stream `k`: one uniform per round for the strategy with
//!   [`StrategyKind::stream_id`] `k`;
//! * [`INSTANCE_STREAM`]: the coin deciding the variance assignment.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::estimators::NuisanceEstimates;
use crate::model::{best_arm, gap, ArmId, BanditInstance, ExperimentConfig, PerArm};
use crate::strategies::{RoundScores, Strategy, StrategyKind};
use crate::theory::{aipw_variance, normalized_score};

/// Name of the uniform and Gaussian generators, written into CSV metadata.
pub const GENERATOR: &str = "chacha8+ziggurat";

pub const REWARD_STREAM: u64 = 0;
pub const INSTANCE_STREAM: u64 = 1 << 32;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of trial `trial` in cell `cell`.
pub fn split_seed(master_seed: u64, cell: u64, trial: u64) -> u64 {
    splitmix64(splitmix64(splitmix64(master_seed) ^ cell) ^ trial)
}

/// Generator for stream `stream` of the trial seeded with `trial_seed`.
pub fn trial_rng(trial_seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(trial_seed);
    rng.set_stream(stream);
    rng
}

/// The per-round reward pairs of one trial.
#[derive(Debug, Clone)]
pub struct RewardStream {
    rng: ChaCha8Rng,
    mean: PerArm<f64>,
    sd: PerArm<f64>,
}

impl RewardStream {
    pub fn new(instance: &BanditInstance, trial_seed: u64) -> Self {
        let (s1, s2) = instance.sigmas();
        RewardStream {
            rng: trial_rng(trial_seed, REWARD_STREAM),
            mean: PerArm::new(instance.mu1, instance.mu2),
            sd: PerArm::new(s1, s2),
        }
    }

    pub fn next_pair(&mut self) -> PerArm<f64> {
        let z1: f64 = StandardNormal.sample(&mut self.rng);
        let z2: f64 = StandardNormal.sample(&mut self.rng);
        PerArm::new(
            self.mean.0[0] + self.sd.0[0] * z1,
            self.mean.0[1] + self.sd.0[1] * z2,
        )
    }
}

/// How the two numbers of a variance pair are read.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PairScale {
    #[default]
    Variance,
    StdDev,
}

impl PairScale {
    pub fn to_variance(self, v: f64) -> f64 {
        match self {
            PairScale::Variance => v,
            PairScale::StdDev => v * v,
        }
    }

    pub fn to_std(self, v: f64) -> f64 {
        match self {
            PairScale::Variance => v.sqrt(),
            PairScale::StdDev => v,
        }
    }
}

/// Draw the instance of one trial: with probability 1/2 arm 1 gets `pair.0`
/// and arm 2 `pair.1`, otherwise the reverse.
pub fn sample_instance<R: Rng + ?Sized>(
    mu1: f64,
    mu2: f64,
    pair: (f64, f64),
    scale: PairScale,
    rng: &mut R,
) -> Result<BanditInstance> {
    if !(pair.0 > 0.0 && pair.1 > 0.0) {
        return Err(Error::InvalidInstance(format!(
            "variance pair must be positive (got {pair:?})"
        )));
    }
    let (a, b) = if rng.random::<bool>() {
        pair
    } else {
        (pair.1, pair.0)
    };
    BanditInstance::new(mu1, mu2, scale.to_variance(a), scale.to_variance(b))
}

/// What a strategy did in one round, handed to trial observers.
#[derive(Debug, Clone, Copy)]
pub struct RoundEvent {
    pub t: u64,
    pub strategy: StrategyKind,
    pub arm: ArmId,
    pub reward: f64,
    pub pair: PerArm<f64>,
    pub nuisance: NuisanceEstimates,
    pub scores: RoundScores,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialResult {
    pub strategies: Vec<StrategyKind>,
    /// `recommendations[s][k]`: strategy `s` at checkpoint `k`.
    pub recommendations: Vec<Vec<ArmId>>,
    pub arm_draw_counts: Vec<PerArm<u64>>,
}

/// Run every strategy through one trial on shared reward pairs.
pub fn run_trial(
    instance: &BanditInstance,
    strategies: &[StrategyKind],
    config: &ExperimentConfig,
    trial_seed: u64,
) -> Result<TrialResult> {
    run_trial_observed(instance, strategies, config, trial_seed, |_| {})
}

/// [`run_trial`] with a callback after every (round, strategy) step.
pub fn run_trial_observed<F: FnMut(&RoundEvent)>(
    instance: &BanditInstance,
    strategies: &[StrategyKind],
    config: &ExperimentConfig,
    trial_seed: u64,
    mut observer: F,
) -> Result<TrialResult> {
    let mut players: Vec<Box<dyn Strategy>> = strategies
        .iter()
        .map(|k| k.build(instance, config))
        .collect::<Result<_>>()?;
    let mut uniforms: Vec<ChaCha8Rng> = strategies
        .iter()
        .map(|k| trial_rng(trial_seed, k.stream_id()))
        .collect();
    let mut rewards = RewardStream::new(instance, trial_seed);

    let checkpoints = config.checkpoints();
    let mut recommendations = vec![Vec::with_capacity(checkpoints.len()); strategies.len()];
    let mut next_checkpoint = 0;

    for t in 1..=config.horizon() {
        let pair = rewards.next_pair();
        let at_checkpoint = checkpoints.get(next_checkpoint) == Some(&t);
        for (i, player) in players.iter_mut().enumerate() {
            let u: f64 = uniforms[i].random();
            let arm = player.next_arm(t, u);
            let reward = pair[arm];
            let scores = player.record(t, arm, reward)?;
            observer(&RoundEvent {
                t,
                strategy: strategies[i],
                arm,
                reward,
                pair,
                nuisance: player.state().nuisance_current,
                scores,
            });
            if at_checkpoint {
                recommendations[i].push(player.recommend(t)?);
            }
        }
        if at_checkpoint {
            next_checkpoint += 1;
        }
    }

    let arm_draw_counts = players
        .iter()
        .map(|p| {
            let s = &p.state().stats;
            PerArm::new(s[ArmId::Arm1].count, s[ArmId::Arm2].count)
        })
        .collect();
    Ok(TrialResult {
        strategies: strategies.to_vec(),
        recommendations,
        arm_draw_counts,
    })
}

/// A full experiment: a grid of `mu2` values times variance pairs, each
/// cell run for `trials` independent trials.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    pub setting_id: String,
    pub mu1: f64,
    pub mu2_list: Vec<f64>,
    pub variance_pairs: Vec<(f64, f64)>,
    pub pair_scale: PairScale,
    pub strategies: Vec<StrategyKind>,
    pub trials: u64,
    pub config: ExperimentConfig,
}

/// One `(mu2, pair)` combination of an experiment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cell {
    pub index: u64,
    pub mu2: f64,
    pub pair: (f64, f64),
}

impl ExperimentSpec {
    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::Validation("trials must be >= 1".into()));
        }
        if self.mu2_list.is_empty() || self.variance_pairs.is_empty() || self.strategies.is_empty()
        {
            return Err(Error::Validation(
                "mu2, variance_pairs and strategies must be nonempty".into(),
            ));
        }
        if !self.mu1.is_finite() || self.mu2_list.iter().any(|m| !m.is_finite()) {
            return Err(Error::Validation("means must be finite".into()));
        }
        if self.mu2_list.contains(&self.mu1) {
            return Err(Error::Validation(format!(
                "mu1 = {} also appears in mu2",
                self.mu1
            )));
        }
        if let Some(p) = self
            .variance_pairs
            .iter()
            .find(|p| !(p.0 > 0.0 && p.1 > 0.0 && p.0.is_finite() && p.1.is_finite()))
        {
            return Err(Error::Validation(format!(
                "variance pair {p:?} must be positive"
            )));
        }
        for (i, k) in self.strategies.iter().enumerate() {
            if self.strategies[..i].contains(k) {
                return Err(Error::Validation(format!("strategy {k} listed twice")));
            }
        }
        Ok(())
    }

    /// Cells in output order: `mu2` outer, variance pair inner.
    pub fn cells(&self) -> Vec<Cell> {
        let n_pairs = self.variance_pairs.len();
        self.mu2_list
            .iter()
            .enumerate()
            .flat_map(|(i, &mu2)| {
                self.variance_pairs
                    .iter()
                    .enumerate()
                    .map(move |(j, &pair)| Cell {
                        index: (i * n_pairs + j) as u64,
                        mu2,
                        pair,
                    })
            })
            .collect()
    }
}

/// Error counts of one strategy in one cell.
#[derive(Debug, Clone, PartialEq)]
pub struct AggregateResult {
    pub mu2: f64,
    pub variance_pair: (f64, f64),
    pub strategy: StrategyKind,
    pub checkpoints: Vec<u64>,
    pub error_counts: Vec<u64>,
    pub trials: u64,
}

impl AggregateResult {
    pub fn p_error(&self, k: usize) -> f64 {
        self.error_counts[k] as f64 / self.trials as f64
    }

    pub fn p_error_at(&self, t: u64) -> Option<f64> {
        self.checkpoints
            .iter()
            .position(|&c| c == t)
            .map(|k| self.p_error(k))
    }
}

/// Misidentification counts over a cell's trials, flattened as
/// `[strategy][checkpoint]`.
fn cell_error_counts(spec: &ExperimentSpec, cell: &Cell) -> Result<Vec<u64>> {
    let n_cp = spec.config.checkpoints().len();
    let width = spec.strategies.len() * n_cp;
    (0..spec.trials)
        .into_par_iter()
        .map(|trial| {
            let seed = split_seed(spec.config.master_seed(), cell.index, trial);
            let mut coin = trial_rng(seed, INSTANCE_STREAM);
            let instance =
                sample_instance(spec.mu1, cell.mu2, cell.pair, spec.pair_scale, &mut coin)?;
            let best = best_arm(&instance)?;
            let result = run_trial(&instance, &spec.strategies, &spec.config, seed)?;
            let mut errors = vec![0u64; width];
            for (s, recs) in result.recommendations.iter().enumerate() {
                for (k, &rec) in recs.iter().enumerate() {
                    errors[s * n_cp + k] = u64::from(rec != best);
                }
            }
            Ok(errors)
        })
        .try_reduce(
            || vec![0u64; width],
            |mut a, b| {
                a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
                Ok(a)
            },
        )
}

/// Run all cells on `workers` threads (`0` means rayon's default).
pub fn run_experiment(spec: &ExperimentSpec, workers: usize) -> Result<Vec<AggregateResult>> {
    run_experiment_with_progress(spec, workers, |_, _| {})
}

/// [`run_experiment`], calling `progress(done, total)` after each cell.
pub fn run_experiment_with_progress<P: FnMut(usize, usize)>(
    spec: &ExperimentSpec,
    workers: usize,
    mut progress: P,
) -> Result<Vec<AggregateResult>> {
    spec.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::InvalidConfig(format!("thread pool: {e}")))?;
    let cells = spec.cells();
    let checkpoints = spec.config.checkpoints().to_vec();
    let n_cp = checkpoints.len();
    let mut out = Vec::with_capacity(cells.len() * spec.strategies.len());
    for (done, cell) in cells.iter().enumerate() {
        let counts = pool.install(|| cell_error_counts(spec, cell))?;
        for (s, &strategy) in spec.strategies.iter().enumerate() {
            out.push(AggregateResult {
                mu2: cell.mu2,
                variance_pair: cell.pair,
                strategy,
                checkpoints: checkpoints.clone(),
                error_counts: counts[s * n_cp..(s + 1) * n_cp].to_vec(),
                trials: spec.trials,
            });
        }
        progress(done + 1, cells.len());
    }
    Ok(out)
}

/// `-ln(p_error) / T`; infinite when no error was observed.
pub fn empirical_rate(p_error: f64, horizon: u64) -> f64 {
    if p_error <= 0.0 {
        f64::INFINITY
    } else {
        -p_error.ln() / horizon as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MdsDiagnostic {
    /// Mean of the normalized score over the rounds after initialization.
    pub mean: f64,
    /// Mean of its square over the same rounds.
    pub second_moment: f64,
    pub rounds_used: u64,
}

/// Run NA-AIPW for `n_rounds` rounds and summarize the normalized score
/// `(psi_1 - psi_2 - delta) / sqrt(V)` computed with the true gap and
/// `V = (sigma1 + sigma2)^2`.
pub fn mds_diagnostic(
    instance: &BanditInstance,
    config: &ExperimentConfig,
    n_rounds: u64,
    seed: u64,
) -> Result<MdsDiagnostic> {
    if n_rounds < 1000 {
        return Err(Error::InvalidConfig(format!(
            "diagnostic needs at least 1000 rounds (got {n_rounds})"
        )));
    }
    let run_cfg = ExperimentConfig::new(
        n_rounds,
        config.init_rounds(),
        config.trunc(),
        vec![n_rounds],
        seed,
    )?
    .with_mixing(config.mixing());
    let (s1, s2) = instance.sigmas();
    let v = aipw_variance(s1, s2)?;
    let delta = gap(instance);
    let init = run_cfg.init_rounds();
    let (mut sum, mut sum_sq, mut n) = (0.0, 0.0, 0u64);
    let mut failure = None;
    run_trial_observed(instance, &[StrategyKind::NaAipw], &run_cfg, seed, |ev| {
        if ev.t <= init || failure.is_some() {
            return;
        }
        match normalized_score(
            ev.scores.aipw[ArmId::Arm1],
            ev.scores.aipw[ArmId::Arm2],
            delta,
            v,
        ) {
            Ok(psi) => {
                sum += psi;
                sum_sq += psi * psi;
                n += 1;
            }
            Err(e) => failure = Some(e),
        }
    })?;
    if let Some(e) = failure {
        return Err(e);
    }
    Ok(MdsDiagnostic {
        mean: sum / n as f64,
        second_moment: sum_sq / n as f64,
        rounds_used: n,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::TruncationConstants;

    #[test]
    fn empirical_rate_examples() {
        assert_eq!(empirical_rate(1.0, 123), 0.0);
        assert!((empirical_rate((-5f64).exp(), 1000) - 0.005).abs() < 1e-15);
        assert_eq!(empirical_rate(0.0, 10), f64::INFINITY);
    }

    #[test]
    fn split_seed_spreads_inputs() {
        let mut seen = std::collections::HashSet::new();
        for cell in 0..20 {
            for trial in 0..500 {
                assert!(seen.insert(split_seed(42, cell, trial)));
            }
        }
        assert_ne!(split_seed(1, 0, 0), split_seed(2, 0, 0));
    }

    #[test]
    fn symmetric_pair_never_flips() {
        let mut rng = trial_rng(3, INSTANCE_STREAM);
        for _ in 0..100 {
            let inst =
                sample_instance(1.0, 0.8, (1.0, 1.0), PairScale::Variance, &mut rng).unwrap();
            assert_eq!((inst.var1, inst.var2), (1.0, 1.0));
        }
    }

    #[test]
    fn variance_assignment_is_a_fair_coin() {
        let mut rng = trial_rng(11, INSTANCE_STREAM);
        let n = 10_000;
        let low_first = (0..n)
            .filter(|_| {
                sample_instance(1.0, 0.99, (1.0, 5.0), PairScale::Variance, &mut rng)
                    .unwrap()
                    .var1
                    == 1.0
            })
            .count();
        let frac = low_first as f64 / n as f64;
        assert!((frac - 0.5).abs() <= 0.02, "{frac}");
        let inst = sample_instance(1.0, 0.99, (1.0, 5.0), PairScale::Variance, &mut rng).unwrap();
        assert!((gap(&inst) - 0.01).abs() < 1e-12);
    }

    #[test]
    fn std_scale_squares_pair() {
        let mut rng = trial_rng(0, INSTANCE_STREAM);
        let inst = sample_instance(1.0, 0.8, (2.0, 2.0), PairScale::StdDev, &mut rng).unwrap();
        assert_eq!((inst.var1, inst.var2), (4.0, 4.0));
        assert!(sample_instance(1.0, 0.8, (0.0, 2.0), PairScale::StdDev, &mut rng).is_err());
    }

    #[test]
    fn mds_diagnostic_rejects_short_runs() {
        let inst = BanditInstance::new(1.0, 0.8, 1.0, 1.0).unwrap();
        let cfg =
            ExperimentConfig::new(10, 2, TruncationConstants::default(), vec![10], 0).unwrap();
        assert!(mds_diagnostic(&inst, &cfg, 10, 0).is_err());
    }
}
