use num_traits::{One, Zero};
use proptest::prelude::*;
use varmdp::rational::{int, ratio, to_f64, Rational};
use varmdp::spectral::stationary_distribution;
use varmdp::*;

fn chain_strategy() -> impl Strategy<Value = MarkovRewardProcess> {
    (1usize..=4, 2usize..=6).prop_flat_map(|(n, horizon)| {
        (
            prop::collection::vec(prop::collection::vec(0i64..=3, n), n),
            prop::collection::vec(prop::collection::vec((-6i64..=6, 1i64..=3), n), n),
            prop::collection::vec(0i64..=2, n),
            prop::option::of(prop::collection::vec(-3i64..=3, n)),
        )
            .prop_map(move |(weights, rewards, start, salvage)| {
                let normalize = |w: &[i64]| -> Vec<Rational> {
                    let mut w = w.to_vec();
                    if w.iter().all(|&v| v == 0) {
                        w[0] = 1;
                    }
                    let t: i64 = w.iter().sum();
                    w.iter().map(|&v| ratio(v, t)).collect()
                };
                MarkovRewardProcess::new(
                    horizon,
                    (0..n).map(|i| format!("s{i}")).collect(),
                    weights.iter().map(|w| normalize(w)).collect(),
                    MrpReward::Transition(
                        rewards
                            .iter()
                            .map(|row| row.iter().map(|&(a, b)| ratio(a, b)).collect())
                            .collect(),
                    ),
                    normalize(&start),
                    salvage.map(|v| v.into_iter().map(int).collect()),
                )
                .unwrap()
            })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn distribution_is_preserved(m in chain_strategy()) {
        let original = mrp_distribution(&m, PathBudget::default()).unwrap();
        let t = transform(&m).unwrap();
        prop_assert_eq!(&t.exact_distribution(PathBudget::default()).unwrap(), &original);
        prop_assert_eq!(&mrp_distribution(&t.to_state_mrp().unwrap(), PathBudget::default()).unwrap(), &original);
    }

    #[test]
    fn kernels_stay_stochastic(m in chain_strategy()) {
        let t = transform(&m).unwrap();
        for row in t.kernel() {
            prop_assert!(row.iter().sum::<Rational>().is_one());
        }
        prop_assert!(t.mu0().iter().sum::<Rational>().is_one());
        for (i, &(x, y)) in t.pairs().iter().enumerate() {
            prop_assert!(!m.kernel()[x][y].is_zero());
            prop_assert_eq!(t.state_names()[i].clone(), format!("s{x}->s{y}"));
        }
    }
}

#[test]
fn destination_free_reward_matches_state_reward() {
    let g = [int(3), int(-1), ratio(1, 2)];
    let kernel = vec![
        vec![ratio(1, 2), ratio(1, 4), ratio(1, 4)],
        vec![int(0), ratio(1, 3), ratio(2, 3)],
        vec![int(1), int(0), int(0)],
    ];
    let base = |reward| {
        MarkovRewardProcess::new(
            5,
            vec!["a".into(), "b".into(), "c".into()],
            kernel.clone(),
            reward,
            vec![int(1), int(0), int(0)],
            None,
        )
        .unwrap()
    };
    let by_state = base(MrpReward::State(g.to_vec()));
    let by_transition = base(MrpReward::Transition(
        (0..3).map(|x| vec![g[x].clone(); 3]).collect(),
    ));
    let t = transform(&by_transition).unwrap();
    assert_eq!(
        t.exact_distribution(PathBudget::default()).unwrap(),
        mrp_distribution(&by_state, PathBudget::default()).unwrap()
    );
}

#[test]
fn lifted_stationary_distribution_is_stationary() {
    let kernel = vec![
        vec![ratio(1, 5), ratio(4, 5), int(0)],
        vec![ratio(1, 2), int(0), ratio(1, 2)],
        vec![ratio(1, 3), ratio(1, 3), ratio(1, 3)],
    ];
    let m = MarkovRewardProcess::new(
        4,
        vec!["a".into(), "b".into(), "c".into()],
        kernel,
        MrpReward::Transition(vec![vec![int(1); 3]; 3]),
        vec![ratio(1, 3), ratio(1, 3), ratio(1, 3)],
        None,
    )
    .unwrap();
    let k = m.kernel_f64();
    let p = nalgebra::DMatrix::from_fn(3, 3, |i, j| k[i][j]);
    let xi = stationary_distribution(&p, &[]).unwrap();
    let t = transform(&m).unwrap();
    let lifted = t.lift_stationary(xi.as_slice(), &k);
    let n = t.num_states();
    for j in 0..n {
        let flow: f64 = (0..n).map(|i| lifted[i] * to_f64(&t.kernel()[i][j])).sum();
        assert!((flow - lifted[j]).abs() < 1e-14);
    }
}

#[test]
fn inventory_chain_has_at_most_nine_pairs() {
    let mdp = build_inventory(&InventoryParams::paper_short()).unwrap();
    let best = expected_backward_induction(&mdp);
    let rule = best.policy.rules()[0].to_vec();
    let chain = induced_mrp(&mdp, &DeterministicPolicy::Stationary(rule)).unwrap();
    let t = transform(&chain).unwrap();
    assert!(t.num_states() <= 9);
    for &(x, y) in t.pairs() {
        assert!(!chain.kernel()[x][y].is_zero());
    }
    // Salvage v(x) = x becomes the stock level after the transition.
    for (i, &(_, y)) in t.pairs().iter().enumerate() {
        assert_eq!(t.salvage().unwrap()[i], int(y as i64));
    }
}
