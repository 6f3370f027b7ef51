//! Trial-level properties of the harness: determinism, shared rewards,
//! anytime checkpoints and the information each allocation may use.

use neyman_bai::estimators::NuisanceEstimates;
use neyman_bai::harness::{
    mds_diagnostic, run_experiment, run_trial, run_trial_observed, split_seed, ExperimentSpec,
    PairScale, RoundEvent,
};
use neyman_bai::strategies::SamplingParams;
use neyman_bai::{
    ArmId, BanditInstance, ExperimentConfig, StrategyKind, StrategyState, TruncationConstants,
};

fn cfg(horizon: u64, step: u64, seed: u64) -> ExperimentConfig {
    ExperimentConfig::with_step(horizon, step, seed).unwrap()
}

fn small_spec(seed: u64) -> ExperimentSpec {
    ExperimentSpec {
        setting_id: "small".into(),
        mu1: 1.0,
        mu2_list: vec![0.8, 0.95],
        variance_pairs: vec![(1.0, 5.0), (1.0, 20.0)],
        pair_scale: PairScale::Variance,
        strategies: StrategyKind::ALL.to_vec(),
        trials: 40,
        config: cfg(600, 200, seed),
    }
}

#[test]
fn same_seed_same_trial() {
    let inst = BanditInstance::new(1.0, 0.8, 1.0, 5.0).unwrap();
    let c = cfg(2000, 100, 0);
    let a = run_trial(&inst, &StrategyKind::ALL, &c, 99).unwrap();
    let b = run_trial(&inst, &StrategyKind::ALL, &c, 99).unwrap();
    assert_eq!(a, b);
    let other = run_trial(&inst, &StrategyKind::ALL, &c, 100).unwrap();
    assert_ne!(a.arm_draw_counts, other.arm_draw_counts);
}

#[test]
fn worker_count_does_not_change_results() {
    let spec = small_spec(42);
    let one = run_experiment(&spec, 1).unwrap();
    let many = run_experiment(&spec, 8).unwrap();
    assert_eq!(one, many);
    assert_eq!(one.len(), 4 * 5);
    assert_ne!(one, run_experiment(&small_spec(43), 1).unwrap());
}

#[test]
fn deterministic_allocations_hit_exact_counts() {
    let inst = BanditInstance::from_std(1.0, 0.8, 1.0, 3.0).unwrap();
    let c = cfg(10_000, 100, 0);
    let r = run_trial(&inst, &[StrategyKind::Uniform, StrategyKind::Oracle], &c, 5).unwrap();
    assert_eq!(r.arm_draw_counts[0].0, [5000, 5000]);
    assert_eq!(r.arm_draw_counts[1].0, [2500, 7500]);
}

#[test]
fn strategies_share_each_rounds_rewards() {
    let inst = BanditInstance::new(0.3, 0.1, 2.0, 0.5).unwrap();
    let c = cfg(3000, 1000, 0);
    let mut events: Vec<RoundEvent> = Vec::new();
    run_trial_observed(&inst, &StrategyKind::ALL, &c, 17, |ev| events.push(*ev)).unwrap();
    assert_eq!(events.len(), 3000 * 5);
    let mut same_arm_rounds = 0;
    for round in events.chunks(5) {
        let t = round[0].t;
        for ev in round {
            assert_eq!(ev.t, t);
            assert_eq!(ev.pair, round[0].pair);
            assert_eq!(ev.reward, ev.pair[ev.arm]);
        }
        let (oracle, uniform) = (&round[3], &round[4]);
        assert_eq!(
            (oracle.strategy, uniform.strategy),
            (StrategyKind::Oracle, StrategyKind::Uniform)
        );
        if oracle.arm == uniform.arm {
            assert_eq!(oracle.reward.to_bits(), uniform.reward.to_bits());
            same_arm_rounds += 1;
        }
    }
    assert!(same_arm_rounds > 100);
}

#[test]
fn checkpoint_recommendation_matches_shorter_run() {
    let inst = BanditInstance::new(1.0, 0.9, 1.0, 10.0).unwrap();
    for seed in 0..20 {
        let trial_seed = split_seed(3, 0, seed);
        let long = run_trial(&inst, &StrategyKind::ALL, &cfg(10_000, 100, 0), trial_seed).unwrap();
        let short = run_trial(&inst, &StrategyKind::ALL, &cfg(500, 100, 0), trial_seed).unwrap();
        for (l, s) in long.recommendations.iter().zip(&short.recommendations) {
            assert_eq!(&l[..5], &s[..]);
        }
    }
}

/// Two-pass sample standard deviation with the `1/n` convention.
fn sd(xs: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    (xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / n).sqrt()
}

#[test]
fn allocation_depends_only_on_past_rounds() {
    let trunc = TruncationConstants::default();
    for (k, inst) in [
        BanditInstance::new(1.0, 0.8, 1.0, 5.0).unwrap(),
        BanditInstance::new(10.0, 9.9, 20.0, 1.0).unwrap(),
        BanditInstance::new(-2.0, 0.0, 0.3, 0.3).unwrap(),
    ]
    .iter()
    .enumerate()
    {
        let c = cfg(3000, 3000, 0);
        let mut hist: [Vec<f64>; 2] = [Vec::new(), Vec::new()];
        let mut checked = 0;
        run_trial_observed(inst, &[StrategyKind::NaAipw], &c, k as u64, |ev| {
            let nu = ev.nuisance;
            if ev.t <= 2 {
                assert_eq!(ev.arm, if ev.t == 1 { ArmId::Arm1 } else { ArmId::Arm2 });
                assert_eq!(nu.w_hat.0, [0.5, 0.5]);
            } else {
                let s: Vec<f64> = hist.iter().map(|h| trunc.clamp_sigma(sd(h))).collect();
                let w1 = s[0] / (s[0] + s[1]);
                assert!(
                    (nu.w_hat[ArmId::Arm1] - w1).abs() < 1e-9,
                    "t={} {} vs {w1}",
                    ev.t,
                    nu.w_hat[ArmId::Arm1]
                );
                checked += 1;
            }
            hist[ev.arm.index()].push(ev.reward);
        })
        .unwrap();
        assert_eq!(checked, 2998);
    }
}

/// Replay a recorded arm sequence with transformed rewards and return the
/// allocation used at each round.
fn replay(arms: &[ArmId], rewards: &[f64], trunc: TruncationConstants) -> Vec<NuisanceEstimates> {
    let mut state = StrategyState::new(SamplingParams {
        trunc,
        init_rounds: 2,
        mixing: false,
    });
    arms.iter()
        .zip(rewards)
        .enumerate()
        .map(|(i, (&arm, &y))| {
            let t = i as u64 + 1;
            let nu = *state.prepare(t);
            state.record(t, arm, y).unwrap();
            nu
        })
        .collect()
}

#[test]
fn allocation_is_affine_invariant() {
    let inst = BanditInstance::new(1.0, 0.8, 1.0, 5.0).unwrap();
    let c = cfg(2000, 2000, 0);
    let (mut arms, mut ys) = (Vec::new(), Vec::new());
    run_trial_observed(&inst, &[StrategyKind::NaAipw], &c, 8, |ev| {
        arms.push(ev.arm);
        ys.push(ev.reward);
    })
    .unwrap();
    let wide = TruncationConstants::new(1e9, 1e-16).unwrap();
    let base = replay(&arms, &ys, wide);
    for (scale, shift) in [(7.5, 0.0), (0.01, 0.0), (1.0, 40.0), (3.0, -12.0)] {
        let moved: Vec<f64> = ys.iter().map(|y| scale * y + shift).collect();
        let other = replay(&arms, &moved, wide);
        let mut counts = [0u64; 2];
        for ((a, b), arm) in base.iter().zip(&other).zip(&arms) {
            // A single draw has zero spread, which only truncation resolves.
            if counts.iter().all(|&c| c >= 2) {
                assert!((a.w_hat[ArmId::Arm1] - b.w_hat[ArmId::Arm1]).abs() < 1e-9);
                assert!(
                    (a.sigma_hat[ArmId::Arm2] * scale - b.sigma_hat[ArmId::Arm2]).abs()
                        < 1e-7 * scale.max(1.0)
                );
            }
            counts[arm.index()] += 1;
        }
    }
}

#[test]
fn both_arms_observed_after_prefix() {
    for init in [2, 4, 10, 50] {
        let c =
            ExperimentConfig::new(200, init, TruncationConstants::default(), vec![200], 0).unwrap();
        let inst = BanditInstance::new(0.0, 1.0, 100.0, 0.01).unwrap();
        let mut counts = [0u64; 2];
        run_trial_observed(
            &inst,
            &[StrategyKind::NaAipw, StrategyKind::NaSa],
            &c,
            init,
            |ev| {
                if ev.strategy == StrategyKind::NaAipw {
                    counts[ev.arm.index()] += 1;
                    if ev.t == init {
                        assert_eq!(counts, [init / 2, init / 2]);
                    }
                }
            },
        )
        .unwrap();
    }
}

#[test]
fn smaller_gaps_are_harder() {
    let spec = ExperimentSpec {
        setting_id: "mono".into(),
        mu1: 1.0,
        mu2_list: vec![0.80, 0.85, 0.90, 0.95, 0.99],
        variance_pairs: vec![(1.0, 5.0)],
        pair_scale: PairScale::Variance,
        strategies: vec![StrategyKind::NaAipw],
        trials: 1000,
        config: ExperimentConfig::new(2000, 2, TruncationConstants::default(), vec![2000], 11)
            .unwrap(),
    };
    let res = run_experiment(&spec, 0).unwrap();
    let p: Vec<f64> = res.iter().map(|r| r.p_error(0)).collect();
    let n = spec.trials as f64;
    // Gap shrinks along the list, so the error should not fall.
    for w in p.windows(2) {
        let se = ((w[0] * (1.0 - w[0]) + w[1] * (1.0 - w[1])) / n).sqrt();
        assert!(w[1] >= w[0] - 2.0 * se, "{p:?}");
    }
    assert!(p[4] > p[0] + 0.1, "{p:?}");
}

#[test]
fn normalized_score_settles_with_more_rounds() {
    let inst = BanditInstance::new(1.0, 0.8, 1.0, 1.0).unwrap();
    let c = cfg(1000, 1000, 0);
    let (mut short, mut long) = (0.0, 0.0);
    for seed in 0..20 {
        short += (mds_diagnostic(&inst, &c, 1_000, seed)
            .unwrap()
            .second_moment
            - 1.0)
            .abs();
        long += (mds_diagnostic(&inst, &c, 100_000, seed)
            .unwrap()
            .second_moment
            - 1.0)
            .abs();
    }
    assert!(
        long <= short,
        "n=1e5 {} vs n=1e3 {}",
        long / 20.0,
        short / 20.0
    );
}
