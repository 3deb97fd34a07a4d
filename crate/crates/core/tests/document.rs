use proptest::prelude::*;
use varmdp::document::{parse_any, AnyDocument, MdpDocument, MrpDocument};
use varmdp::mdp::Outcome;
use varmdp::rational::{int, ratio};
use varmdp::*;

fn random_mdp() -> impl Strategy<Value = FiniteMdp> {
    (1usize..=3, 1usize..=4, any::<bool>()).prop_flat_map(|(n, horizon, sas)| {
        let table = prop::collection::vec(
            prop::collection::vec(
                (
                    prop::collection::vec(0u8..=3, n),
                    prop::collection::vec((-9i64..=9, 1i64..=7), n),
                ),
                1..=3,
            ),
            n,
        );
        (table, prop::collection::vec((-5i64..=5, 1i64..=4), n)).prop_map(
            move |(table, salvage)| {
                let actions = table
                    .iter()
                    .map(|a| (0..a.len()).map(|i| format!("a{i}")).collect())
                    .collect();
                let outcomes = table
                    .iter()
                    .map(|acts| {
                        acts.iter()
                            .map(|(w, r)| {
                                let mut w: Vec<i64> = w.iter().map(|&v| v as i64).collect();
                                if w.iter().all(|&v| v == 0) {
                                    w[n - 1] = 1;
                                }
                                let total: i64 = w.iter().sum();
                                (0..n)
                                    .filter(|&y| w[y] > 0)
                                    .map(|y| Outcome {
                                        next: y,
                                        prob: ratio(w[y], total),
                                        reward: ratio(r[y].0, r[y].1),
                                    })
                                    .collect()
                            })
                            .collect()
                    })
                    .collect();
                let mut mu0 = vec![int(0); n];
                mu0[n - 1] = int(1);
                let mdp = FiniteMdp::new(
                    horizon,
                    (0..n).map(|i| format!("x{i}")).collect(),
                    actions,
                    outcomes,
                    RewardKind::Sas,
                    mu0,
                    salvage.iter().map(|&(a, b)| ratio(a, b)).collect(),
                )
                .unwrap();
                if sas {
                    mdp
                } else {
                    simplify_reward(&mdp)
                }
            },
        )
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn mdp_documents_round_trip(mdp in random_mdp()) {
        let text = MdpDocument::from_mdp(&mdp).to_json();
        let back = MdpDocument::from_json(&text).unwrap().to_mdp().unwrap();
        prop_assert_eq!(&back, &mdp);
        prop_assert_eq!(MdpDocument::from_mdp(&back).to_json(), text.clone());
        prop_assert!(matches!(parse_any(&text).unwrap(), AnyDocument::Mdp(m) if m == mdp));
    }

    #[test]
    fn mrp_documents_round_trip(mdp in random_mdp(), id in any::<u64>()) {
        let policy = mdp.stationary_policy(id as u128 % mdp.stationary_policy_count());
        let chain = induced_mrp(&mdp, &policy).unwrap();
        let text = MrpDocument::from_mrp(&chain).to_json();
        let back = MrpDocument::from_json(&text).unwrap().to_mrp().unwrap();
        prop_assert_eq!(
            mrp_distribution(&back, PathBudget::default()).unwrap(),
            mrp_distribution(&chain, PathBudget::default()).unwrap()
        );
        prop_assert_eq!(MrpDocument::from_mrp(&back).to_json(), text);
    }
}

#[test]
fn inventory_presets_round_trip() {
    for params in [
        InventoryParams::paper_short(),
        InventoryParams::paper_long(),
        InventoryParams::paper_short().capacity_variant(),
    ] {
        let mdp = build_inventory(&params).unwrap();
        let back = MdpDocument::from_json(&MdpDocument::from_mdp(&mdp).to_json())
            .unwrap()
            .to_mdp()
            .unwrap();
        assert_eq!(back, mdp);
    }
}

#[test]
fn errors_name_the_field() {
    let base =
        MdpDocument::from_mdp(&build_inventory(&InventoryParams::paper_short()).unwrap()).to_json();
    let cases = [
        (
            base.replacen("\"reward_kind\": \"sas\"", "\"reward_kind\": \"xyz\"", 1),
            "xyz",
        ),
        (
            base.replacen("\"horizon\": 2", "\"horizon\": \"two\"", 1),
            "horizon",
        ),
        (base.replacen("\"p\": \"1/4\"", "\"p\": \"1/0\"", 1), "1/0"),
    ];
    for (text, needle) in cases {
        assert_ne!(text, base, "replacement for {needle} did not apply");
        let err = MdpDocument::from_json(&text)
            .and_then(|d| d.to_mdp())
            .unwrap_err();
        assert!(err.to_string().contains(needle), "{err}");
    }
}
