use proptest::prelude::*;
use varmdp::edgeworth::{
    estimate_cdf, linspace, pareto_front_long, state_rewarded, EdgeworthOptions,
};
use varmdp::montecarlo::{empirical_distance, simulate, step_distance};
use varmdp::rational::{int, ratio};
use varmdp::*;

fn three_state(reward: [i64; 3], horizon: usize) -> MarkovRewardProcess {
    MarkovRewardProcess::new(
        horizon,
        vec!["a".into(), "b".into(), "c".into()],
        vec![
            vec![ratio(1, 5), ratio(1, 2), ratio(3, 10)],
            vec![ratio(3, 5), ratio(1, 10), ratio(3, 10)],
            vec![ratio(1, 10), ratio(7, 10), ratio(1, 5)],
        ],
        MrpReward::State(reward.iter().map(|&v| int(v)).collect()),
        vec![int(1), int(0), int(0)],
        None,
    )
    .unwrap()
}

#[test]
fn value_at_mean_tends_to_half() {
    let chain = three_state([4, -1, 2], 10);
    let mut previous = f64::INFINITY;
    for n in [100, 1000, 10000, 100000] {
        let c = estimate_cdf(&chain, n, &EdgeworthOptions::default())
            .unwrap()
            .cdf;
        let at_mean = c.eval(n as f64 * c.zeta);
        let closed = 0.5
            + varmdp::edgeworth::normal_pdf(0.0) * (c.kappa / (6.0 * c.sigma2) - c.rhat_start)
                / c.scale();
        assert!((at_mean - closed).abs() < 1e-12);
        let offset = (at_mean - 0.5).abs();
        assert!(offset < previous);
        previous = offset;
    }
}

#[test]
fn non_ergodic_chain_is_rejected_by_name() {
    let m = MarkovRewardProcess::new(
        5,
        vec!["left".into(), "right".into(), "mid".into()],
        vec![
            vec![int(1), int(0), int(0)],
            vec![int(0), int(1), int(0)],
            vec![ratio(1, 2), ratio(1, 2), int(0)],
        ],
        MrpReward::State(vec![int(1), int(2), int(3)]),
        vec![int(0), int(0), int(1)],
        None,
    )
    .unwrap();
    let err = estimate_cdf(&m, 100, &EdgeworthOptions::default()).unwrap_err();
    assert_eq!(err.kind(), ErrorKind::Ergodicity);
    assert!(
        err.to_string().contains("left") && err.to_string().contains("right"),
        "{err}"
    );
}

#[test]
fn unreachable_closed_class_does_not_matter() {
    // State "island" is closed but never entered from the start.
    let m = MarkovRewardProcess::new(
        5,
        vec!["a".into(), "b".into(), "island".into()],
        vec![
            vec![ratio(1, 2), ratio(1, 2), int(0)],
            vec![ratio(1, 3), ratio(2, 3), int(0)],
            vec![int(0), int(0), int(1)],
        ],
        MrpReward::State(vec![int(1), int(-1), int(7)]),
        vec![int(1), int(0), int(0)],
        None,
    )
    .unwrap();
    let e = estimate_cdf(&m, 100, &EdgeworthOptions::default()).unwrap();
    assert_eq!(e.states, vec![0, 1]);
}

#[test]
fn monte_carlo_matches_exact_short_horizon() {
    let mdp = build_inventory(&InventoryParams::paper_short()).unwrap();
    let best = expected_backward_induction(&mdp);
    let policy = DeterministicPolicy::Stationary(best.policy.rules()[0].to_vec());
    let chain = induced_mrp(&mdp, &policy).unwrap();
    let exact = mrp_distribution(&chain, PathBudget::default()).unwrap();
    let sim = simulate(&chain, 2, 1_000_000, 11).unwrap();
    assert!(step_distance(&sim, &exact) <= 0.005);
}

#[test]
fn transformed_and_original_simulations_agree() {
    let mdp = build_inventory(&InventoryParams::paper_long()).unwrap();
    let chain = induced_mrp(&mdp, &mdp.stationary_policy(5))
        .unwrap()
        .without_salvage();
    let pairs = state_rewarded(&chain).unwrap();
    let a = simulate(&chain, 50, 200_000, 1).unwrap();
    let b = simulate(&pairs, 50, 200_000, 2).unwrap();
    assert!(empirical_distance(&a, &b) <= 0.01);
}

/// Two states, two policies, rewards on an irrational-looking grid so the
/// totals are effectively non-lattice.
fn synthetic_mdp(horizon: usize) -> FiniteMdp {
    use varmdp::mdp::Outcome;
    let o = |next, p, r: Rational| Outcome {
        next,
        prob: p,
        reward: r,
    };
    let r = |n: i64| ratio(n, 997);
    FiniteMdp::new(
        horizon,
        vec!["low".into(), "high".into()],
        vec![vec!["stay".into(), "push".into()], vec!["hold".into()]],
        vec![
            vec![
                vec![o(0, ratio(7, 10), r(1000)), o(1, ratio(3, 10), r(3141))],
                vec![o(0, ratio(2, 10), r(-1414)), o(1, ratio(8, 10), r(2718))],
            ],
            vec![vec![o(0, ratio(1, 2), r(577)), o(1, ratio(1, 2), r(1732))]],
        ],
        RewardKind::Sas,
        vec![int(1), int(0)],
        vec![int(0), int(0)],
    )
    .unwrap()
}

use varmdp::Rational;

#[test]
fn estimated_front_matches_monte_carlo_minimum() {
    let n = 400;
    let mdp = synthetic_mdp(n);
    let sims: Vec<_> = (0..2u128)
        .map(|id| {
            let chain = induced_mrp(&mdp, &mdp.stationary_policy(id))
                .unwrap()
                .without_salvage();
            simulate(&chain, n, 400_000, 100 + id as u64).unwrap()
        })
        .collect();
    let lo = sims
        .iter()
        .map(|s| s.quantile(0.0005))
        .fold(f64::INFINITY, f64::min);
    let hi = sims
        .iter()
        .map(|s| s.quantile(0.9995))
        .fold(f64::NEG_INFINITY, f64::max);
    let grid = linspace(lo, hi, 3001);
    let front = pareto_front_long(&mdp, n, grid.clone(), &EdgeworthOptions::default())
        .unwrap()
        .front;
    let worst = grid
        .iter()
        .map(|&t| (front.eval(t) - sims[0].eval(t).min(sims[1].eval(t))).abs())
        .fold(0.0, f64::max);
    assert!(worst <= 0.02, "front vs Monte Carlo minimum: {worst}");
}

#[test]
fn long_front_skips_absorbing_policy() {
    let mdp = build_inventory(&InventoryParams::paper_long()).unwrap();
    let f = pareto_front_long(
        &mdp,
        500,
        linspace(0.0, 3000.0, 31),
        &EdgeworthOptions::default(),
    )
    .unwrap();
    let skipped: Vec<usize> = f.skipped().map(|(id, _)| id).collect();
    // Never ordering from stock 0 has zero variance.
    assert!(skipped.contains(&0), "{skipped:?}");
    assert!(f.front.value.windows(2).all(|w| w[0] <= w[1]));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn shift_and_scale_covariance(c in -20i64..20, s in 1i64..9, k in -3.0f64..3.0) {
        let n = 250;
        let base = estimate_cdf(&three_state([4, -1, 2], 10), n, &EdgeworthOptions::default()).unwrap().cdf;
        let tau = n as f64 * base.zeta + k * base.scale();
        let shifted = estimate_cdf(&three_state([4 + c, -1 + c, 2 + c], 10), n, &EdgeworthOptions::default()).unwrap().cdf;
        prop_assert!((shifted.eval(tau + (n as i64 * c) as f64) - base.eval(tau)).abs() < 1e-12);
        let scaled = estimate_cdf(&three_state([4 * s, -s, 2 * s], 10), n, &EdgeworthOptions::default()).unwrap().cdf;
        prop_assert!((scaled.eval(s as f64 * tau) - base.eval(tau)).abs() < 1e-12);
    }

    #[test]
    fn correction_decays_like_inverse_root(n in 50usize..5000) {
        let chain = three_state([4, -1, 2], 10);
        let a = estimate_cdf(&chain, n, &EdgeworthOptions::default()).unwrap().cdf.correction_sup();
        let b = estimate_cdf(&chain, 4 * n, &EdgeworthOptions::default()).unwrap().cdf.correction_sup();
        prop_assert!((a / b - 2.0).abs() < 1e-9);
    }
}
