use num_traits::One;
use proptest::prelude::*;
use varmdp::augmented::AugmentedState;
use varmdp::distribution::mdp_distribution_with;
use varmdp::mdp::Outcome;
use varmdp::pareto::{pareto_front_exact, PolicyBudget, Threshold};
use varmdp::rational::{int, ratio, Rational};
use varmdp::*;

fn paper() -> (FiniteMdp, FiniteMdp) {
    let sas = build_inventory(&InventoryParams::paper_short()).unwrap();
    let sa = simplify_reward(&sas);
    (sas, sa)
}

fn layer(mdp: &FiniteMdp, tau: i64, t: usize) -> Vec<(usize, Rational)> {
    build_augmented(mdp, &int(tau))
        .unwrap()
        .layer(t)
        .iter()
        .map(|s| (s.state, s.cum.clone()))
        .collect()
}

#[test]
fn first_layer_of_printed_instance() {
    let (sas, _) = paper();
    let l1 = layer(&sas, 9, 1);
    for s in [(0, int(2)), (0, int(8)), (1, int(0))] {
        assert!(l1.contains(&s), "{s:?} missing from {l1:?}");
    }
    assert!(!l1.contains(&(1, int(6))));
}

#[test]
fn first_layer_of_capacity_variant() {
    let mdp = build_inventory(&InventoryParams::paper_short().capacity_variant()).unwrap();
    let l1 = layer(&mdp, 9, 1);
    for s in [
        (0, int(2)),
        (0, int(8)),
        (1, int(0)),
        (1, int(6)),
        (2, int(-2)),
    ] {
        assert!(l1.contains(&s), "{s:?} missing from {l1:?}");
    }
}

#[test]
fn capacity_variant_expected_value() {
    let mdp = build_inventory(&InventoryParams::paper_short().capacity_variant()).unwrap();
    assert_eq!(expected_backward_induction(&mdp).value, ratio(105, 16));
    assert_eq!(
        expected_backward_induction(&simplify_reward(&mdp)).value,
        ratio(105, 16)
    );
}

#[test]
fn printed_instance_expected_value_and_policy() {
    let (sas, sa) = paper();
    let a = expected_backward_induction(&sas);
    let b = expected_backward_induction(&sa);
    assert_eq!(a.value, ratio(45, 8));
    assert_eq!(a.value, b.value);
    assert_eq!(a.policy, b.policy);
    assert_eq!(
        a.policy,
        DeterministicPolicy::Markov(vec![vec![2, 0, 0], vec![2, 0, 0]])
    );
}

#[test]
fn threshold_var_paper_values() {
    let (sas, sa) = paper();
    assert_eq!(
        solve_threshold_var(&sas, &int(9)).unwrap().eta,
        ratio(5, 16)
    );
    assert_eq!(solve_threshold_var(&sa, &int(9)).unwrap().eta, ratio(3, 16));
    assert_eq!(
        solve_threshold_var(&sas, &ratio(15, 2)).unwrap().eta,
        ratio(11, 16)
    );
    assert_eq!(
        solve_threshold_var(&sa, &ratio(15, 2)).unwrap().eta,
        ratio(1, 4)
    );
    let sol = solve_threshold_var(&sas, &int(9)).unwrap();
    let origin = AugmentedState {
        state: 0,
        cum: int(0),
    };
    assert_eq!(sol.policy.action(0, &origin), Some(2));
}

#[test]
fn optimal_augmented_policy_attains_eta() {
    let (sas, _) = paper();
    for tau in [int(0), int(5), ratio(15, 2), int(9), int(12)] {
        let sol = solve_threshold_var(&sas, &tau).unwrap();
        let cdf = mdp_distribution_with(&sas, PathBudget::default(), |t, x, cum| {
            sol.policy
                .action_at(t, x, cum)
                .expect("reachable state has a rule")
        })
        .unwrap();
        assert_eq!(cdf.prob_at_least(&tau), sol.eta);
    }
}

#[test]
fn listing_is_stable() {
    let (_, sa) = paper();
    let sol = solve_threshold_var(&sa, &int(9)).unwrap();
    let text = sol.listing(&sa);
    assert!(text.starts_with("t=0 (0, 0) -> 2\n"), "{text}");
    assert!(text.contains("t=1 (2, "), "{text}");
}

#[test]
fn rho_on_exact_front() {
    let (sas, _) = paper();
    let front = pareto_front_exact(&sas, PolicyBudget::default()).unwrap();
    // Never ordering makes Phi = 0 surely, and every order risks a loss when
    // nothing is sold, so rho_1 is 0.
    assert_eq!(
        front.query_rho(&Rational::one()).unwrap(),
        Threshold::Finite(int(0))
    );
    assert_eq!(front.query_rho(&int(0)).unwrap(), Threshold::PlusInfinity);
    // eta below the whole support is one, above it zero.
    assert!(front.query_eta(&int(-100)).is_one());
    assert_eq!(front.query_eta(&int(100)), int(0));
}

/// Random SAS MDPs with up to 3 states, 2 actions and horizon 3.
fn random_mdp() -> impl Strategy<Value = FiniteMdp> {
    (1usize..=3, 1usize..=3).prop_flat_map(|(n, horizon)| {
        let outcome_table = prop::collection::vec(
            prop::collection::vec(
                (
                    prop::collection::vec(0u8..=2, n),
                    prop::collection::vec(-3i64..=3, n),
                ),
                1..=2,
            ),
            n,
        );
        (outcome_table, prop::collection::vec(-2i64..=2, n)).prop_map(move |(table, salvage)| {
            let actions: Vec<Vec<String>> = table
                .iter()
                .map(|a| (0..a.len()).map(|i| i.to_string()).collect())
                .collect();
            let outcomes = table
                .iter()
                .map(|acts| {
                    acts.iter()
                        .map(|(w, r)| {
                            let mut w: Vec<i64> = w.iter().map(|&v| v as i64).collect();
                            if w.iter().all(|&v| v == 0) {
                                w[0] = 1;
                            }
                            let total: i64 = w.iter().sum();
                            (0..n)
                                .map(|y| Outcome {
                                    next: y,
                                    prob: ratio(w[y], total),
                                    reward: int(r[y]),
                                })
                                .collect()
                        })
                        .collect()
                })
                .collect();
            let mut mu0 = vec![int(0); n];
            mu0[0] = int(1);
            FiniteMdp::new(
                horizon,
                (0..n).map(|i| format!("s{i}")).collect(),
                actions,
                outcomes,
                RewardKind::Sas,
                mu0,
                salvage.into_iter().map(int).collect(),
            )
            .unwrap()
        })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn front_matches_threshold_var_on_grid(mdp in random_mdp()) {
        for m in [mdp.clone(), simplify_reward(&mdp)] {
            let front = pareto_front_exact(&m, PolicyBudget::default()).unwrap();
            for (k, tau) in front.grid.iter().enumerate() {
                let eta = solve_threshold_var(&m, tau).unwrap().eta;
                prop_assert_eq!(Rational::one() - &front.value[k], eta);
            }
        }
    }

    #[test]
    fn simplification_keeps_expectations(mdp in random_mdp()) {
        let sa = simplify_reward(&mdp);
        prop_assert_eq!(expected_backward_induction(&mdp).value, expected_backward_induction(&sa).value);
        for id in 0..mdp.stationary_policy_count() {
            let p = mdp.stationary_policy(id);
            let mean = mdp_distribution(&mdp, &p, PathBudget::default()).unwrap().mean();
            prop_assert_eq!(&mean, &evaluate_policy(&mdp, &p).unwrap());
            prop_assert_eq!(mean, mdp_distribution(&sa, &p, PathBudget::default()).unwrap().mean());
        }
    }

    #[test]
    fn threshold_var_dominates_markov_policies(mdp in random_mdp(), tau in -6i64..=10) {
        let eta = solve_threshold_var(&mdp, &int(tau)).unwrap().eta;
        for id in 0..mdp.stationary_policy_count() {
            let p = mdp.stationary_policy(id);
            let q = mdp_distribution(&mdp, &p, PathBudget::default()).unwrap().prob_at_least(&int(tau));
            prop_assert!(q <= eta);
        }
    }
}

#[test]
fn budget_refusal_points_to_estimator() {
    let long = build_inventory(&InventoryParams::paper_long()).unwrap();
    let err =
        mdp_distribution(&long, &long.stationary_policy(1), PathBudget::default()).unwrap_err();
    assert_eq!(err.kind(), ErrorKind::Budget);
    assert!(err.to_string().contains("Edgeworth"), "{err}");
}
