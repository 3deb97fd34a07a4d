//! Threshold VaR via the augmented-state 0-1 MDP.
//!
//! The state is extended with the reward accumulated so far. All in-horizon
//! rewards become zero and the terminal reward is the indicator
//! `c + v(x) >= tau`, so the optimal expected total reward of the augmented
//! model is `max_pi P(Phi >= tau)`. Cumulative values are enumerated exactly
//! and layer by layer, so each epoch only carries the pairs reachable at
//! that epoch.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt::Write as _;

use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::mdp::FiniteMdp;
use crate::rational::{self, Rational};

/// `(x, c)`: original state and reward accumulated before this epoch.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct AugmentedState {
    pub state: usize,
    pub cum: Rational,
}

#[derive(Debug, Clone, Copy)]
pub struct AugmentedBudget {
    /// Cap on the total number of augmented states over all epochs.
    pub max_states: usize,
}

impl Default for AugmentedBudget {
    fn default() -> Self {
        Self {
            max_states: 1_000_000,
        }
    }
}

type Edges = Vec<(usize, Rational)>;

#[derive(Debug, Clone)]
pub struct AugmentedMdp {
    horizon: usize,
    tau: Rational,
    layers: Vec<Vec<AugmentedState>>,
    index: Vec<HashMap<AugmentedState, usize>>,
    /// `edges[t][i][a]`: successors in layer `t + 1` of state `i` of layer `t`.
    edges: Vec<Vec<Vec<Edges>>>,
    terminal: Vec<bool>,
    mu0: Vec<Rational>,
}

impl AugmentedMdp {
    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn tau(&self) -> &Rational {
        &self.tau
    }

    /// Reachable augmented states `S'_t`, sorted by `(state, cum)`.
    pub fn layer(&self, t: usize) -> &[AugmentedState] {
        &self.layers[t]
    }

    pub fn position(&self, t: usize, s: &AugmentedState) -> Option<usize> {
        self.index[t].get(s).copied()
    }

    pub fn successors(&self, t: usize, i: usize, a: usize) -> &[(usize, Rational)] {
        &self.edges[t][i][a]
    }

    pub fn num_actions(&self, t: usize, i: usize) -> usize {
        self.edges[t][i].len()
    }

    /// `v'` on the last layer.
    pub fn terminal_indicator(&self) -> &[bool] {
        &self.terminal
    }

    /// `mu0'` on layer 0.
    pub fn initial(&self) -> &[Rational] {
        &self.mu0
    }

    pub fn total_states(&self) -> usize {
        self.layers.iter().map(Vec::len).sum()
    }

    /// The cumulative-reward set `C`: every value appearing in some layer.
    pub fn cumulative_values(&self) -> BTreeSet<Rational> {
        self.layers
            .iter()
            .flatten()
            .map(|s| s.cum.clone())
            .collect()
    }

    /// Expected terminal indicator under a fixed augmented policy.
    pub fn evaluate(&self, policy: &AugmentedPolicy) -> Result<Rational> {
        let mut u: Vec<Rational> = self
            .terminal
            .iter()
            .map(|&b| if b { Rational::one() } else { Rational::zero() })
            .collect();
        for t in (0..self.horizon).rev() {
            let mut next = Vec::with_capacity(self.layers[t].len());
            for (i, s) in self.layers[t].iter().enumerate() {
                let a = policy.action(t, s).ok_or_else(|| {
                    Error::Precondition(format!(
                        "policy has no action for ({}, {}) at epoch {t}",
                        s.state,
                        rational::format(&s.cum)
                    ))
                })?;
                if a >= self.num_actions(t, i) {
                    return Err(Error::Precondition(format!(
                        "action {a} is illegal at ({}, {})",
                        s.state,
                        rational::format(&s.cum)
                    )));
                }
                next.push(self.edges[t][i][a].iter().map(|(j, p)| p * &u[*j]).sum());
            }
            u = next;
        }
        Ok(self.mu0.iter().zip(&u).map(|(m, v)| m * v).sum())
    }
}

/// Builds the layered augmented model for threshold `tau`.
pub fn build_augmented(mdp: &FiniteMdp, tau: &Rational) -> Result<AugmentedMdp> {
    build_augmented_with(mdp, tau, AugmentedBudget::default())
}

pub fn build_augmented_with(
    mdp: &FiniteMdp,
    tau: &Rational,
    budget: AugmentedBudget,
) -> Result<AugmentedMdp> {
    let horizon = mdp.horizon();
    let mut layers: Vec<Vec<AugmentedState>> = Vec::with_capacity(horizon + 1);
    let first: Vec<AugmentedState> = mdp
        .mu0()
        .iter()
        .enumerate()
        .filter(|(_, p)| !p.is_zero())
        .map(|(x, _)| AugmentedState {
            state: x,
            cum: Rational::zero(),
        })
        .collect();
    let mu0 = first.iter().map(|s| mdp.mu0()[s.state].clone()).collect();
    layers.push(first);

    let mut total = layers[0].len();
    for t in 0..horizon {
        let mut next = BTreeSet::new();
        for s in &layers[t] {
            for a in 0..mdp.num_actions(s.state) {
                for o in mdp.outcomes(s.state, a) {
                    next.insert(AugmentedState {
                        state: o.next,
                        cum: &s.cum + &o.reward,
                    });
                }
            }
        }
        total += next.len();
        if total > budget.max_states {
            return Err(Error::BudgetExceeded {
                what: "augmented state count",
                count: total as u128,
                limit: budget.max_states as u128,
                hint: "",
            });
        }
        layers.push(next.into_iter().collect());
    }

    let index: Vec<HashMap<AugmentedState, usize>> = layers
        .iter()
        .map(|layer| {
            layer
                .iter()
                .cloned()
                .enumerate()
                .map(|(i, s)| (s, i))
                .collect()
        })
        .collect();

    let mut edges = Vec::with_capacity(horizon);
    for t in 0..horizon {
        let per_layer = layers[t]
            .iter()
            .map(|s| {
                (0..mdp.num_actions(s.state))
                    .map(|a| {
                        mdp.outcomes(s.state, a)
                            .iter()
                            .map(|o| {
                                let target = AugmentedState {
                                    state: o.next,
                                    cum: &s.cum + &o.reward,
                                };
                                (index[t + 1][&target], o.prob.clone())
                            })
                            .collect()
                    })
                    .collect()
            })
            .collect();
        edges.push(per_layer);
    }

    let terminal = layers[horizon]
        .iter()
        .map(|s| &s.cum + &mdp.salvage()[s.state] >= *tau)
        .collect();

    Ok(AugmentedMdp {
        horizon,
        tau: tau.clone(),
        layers,
        index,
        edges,
        terminal,
        mu0,
    })
}

/// Deterministic policy on augmented states, one rule per epoch.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct AugmentedPolicy {
    pub rules: Vec<BTreeMap<AugmentedState, usize>>,
}

impl AugmentedPolicy {
    pub fn action(&self, t: usize, s: &AugmentedState) -> Option<usize> {
        self.rules.get(t)?.get(s).copied()
    }

    pub fn action_at(&self, t: usize, state: usize, cum: &Rational) -> Option<usize> {
        self.action(
            t,
            &AugmentedState {
                state,
                cum: cum.clone(),
            },
        )
    }

    /// `t=<t> (<state>, <cum>) -> <action>` lines.
    pub fn listing(&self, mdp: &FiniteMdp) -> String {
        let mut out = String::new();
        for (t, rule) in self.rules.iter().enumerate() {
            for (s, &a) in rule {
                let _ = writeln!(
                    out,
                    "t={t} ({}, {}) -> {}",
                    mdp.state_name(s.state),
                    rational::format(&s.cum),
                    mdp.action_names(s.state)[a]
                );
            }
        }
        out
    }
}

#[derive(Debug, Clone)]
pub struct VarSolution {
    /// `eta_tau = max_pi P(Phi >= tau)`.
    pub eta: Rational,
    /// Lowest-index maximizer on every reachable augmented state.
    pub policy: AugmentedPolicy,
    /// Full maximizer sets `A*_{x', t}` keyed like `policy`.
    pub argmax: Vec<BTreeMap<AugmentedState, Vec<usize>>>,
    /// `values[t][i] = P(Phi >= tau | X'_t = layer(t)[i])` under the optimum.
    pub values: Vec<Vec<Rational>>,
}

impl VarSolution {
    /// Policy listing with the maximizer set appended whenever it has more
    /// than one element.
    pub fn listing(&self, mdp: &FiniteMdp) -> String {
        let mut out = String::new();
        for (t, rule) in self.policy.rules.iter().enumerate() {
            for (s, &a) in rule {
                let names = mdp.action_names(s.state);
                let _ = write!(
                    out,
                    "t={t} ({}, {}) -> {}",
                    mdp.state_name(s.state),
                    rational::format(&s.cum),
                    names[a]
                );
                let set = &self.argmax[t][s];
                if set.len() > 1 {
                    let alts: Vec<&str> = set.iter().map(|&b| names[b].as_str()).collect();
                    let _ = write!(out, "  [argmax: {}]", alts.join(", "));
                }
                out.push('\n');
            }
        }
        out
    }
}

/// Backward induction on the augmented 0-1 MDP.
pub fn solve_threshold_var(mdp: &FiniteMdp, tau: &Rational) -> Result<VarSolution> {
    let aug = build_augmented(mdp, tau)?;
    Ok(solve_augmented(&aug))
}

pub fn solve_augmented(aug: &AugmentedMdp) -> VarSolution {
    let horizon = aug.horizon;
    let mut values = vec![Vec::new(); horizon + 1];
    values[horizon] = aug
        .terminal
        .iter()
        .map(|&b| if b { Rational::one() } else { Rational::zero() })
        .collect();
    let mut rules = vec![BTreeMap::new(); horizon];
    let mut argmax = vec![BTreeMap::new(); horizon];
    for t in (0..horizon).rev() {
        let mut u = Vec::with_capacity(aug.layers[t].len());
        for (i, s) in aug.layers[t].iter().enumerate() {
            let q: Vec<Rational> = aug.edges[t][i]
                .iter()
                .map(|succ| succ.iter().map(|(j, p)| p * &values[t + 1][*j]).sum())
                .collect();
            let best = q.iter().max().expect("nonempty action set").clone();
            let set: Vec<usize> = (0..q.len()).filter(|&a| q[a] == best).collect();
            rules[t].insert(s.clone(), set[0]);
            argmax[t].insert(s.clone(), set);
            u.push(best);
        }
        values[t] = u;
    }
    let eta = aug.mu0.iter().zip(&values[0]).map(|(m, v)| m * v).sum();
    VarSolution {
        eta,
        policy: AugmentedPolicy { rules },
        argmax,
        values,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mdp::{Outcome, RewardKind};
    use crate::rational::{int, ratio};

    fn coin(reward_heads: i64) -> FiniteMdp {
        // Action 0 = safe (+1), action 1 = coin flip: heads pays `h` and
        // keeps playing, tails pays 0 and absorbs in `t`.
        let o = |p: Rational, r: i64| Outcome {
            next: 0,
            prob: p,
            reward: int(r),
        };
        FiniteMdp::new(
            2,
            vec!["s".into(), "t".into()],
            vec![vec!["safe".into(), "risky".into()], vec!["stay".into()]],
            vec![
                vec![
                    vec![o(int(1), 1)],
                    vec![
                        o(ratio(1, 2), reward_heads),
                        Outcome {
                            next: 1,
                            prob: ratio(1, 2),
                            reward: int(0),
                        },
                    ],
                ],
                vec![vec![Outcome {
                    next: 1,
                    prob: int(1),
                    reward: int(0),
                }]],
            ],
            RewardKind::Sas,
            vec![int(1), int(0)],
            vec![int(0), int(0)],
        )
        .unwrap()
    }

    #[test]
    fn zero_reward_model_collapses_c() {
        let o = |next| Outcome {
            next,
            prob: ratio(1, 2),
            reward: int(0),
        };
        let mdp = FiniteMdp::new(
            3,
            vec!["a".into(), "b".into()],
            vec![vec!["x".into()], vec!["x".into()]],
            vec![vec![vec![o(0), o(1)]], vec![vec![o(0), o(1)]]],
            RewardKind::Sas,
            vec![ratio(1, 2), ratio(1, 2)],
            vec![int(0), int(0)],
        )
        .unwrap();
        let aug = build_augmented(&mdp, &int(0)).unwrap();
        assert_eq!(
            aug.cumulative_values().into_iter().collect::<Vec<_>>(),
            vec![int(0)]
        );
        for t in 0..=3 {
            assert_eq!(aug.layer(t).len(), 2);
        }
    }

    #[test]
    fn risky_action_wins_for_high_threshold() {
        let mdp = coin(3);
        // Safe twice gives 2. Reaching 3 requires the risky action at t=0
        // (heads, 3) or safe then risky (1 + 3 w.p. 1/2).
        let sol = solve_threshold_var(&mdp, &int(3)).unwrap();
        assert_eq!(sol.eta, ratio(1, 2));
        let sol = solve_threshold_var(&mdp, &int(2)).unwrap();
        assert_eq!(sol.eta, int(1));
        assert_eq!(sol.policy.action_at(0, 0, &int(0)), Some(0));
        let sol = solve_threshold_var(&mdp, &int(4)).unwrap();
        // safe (1) then risky heads (3): 1/2; risky heads then safe: 3+1 = 4: 1/2.
        assert_eq!(sol.eta, ratio(1, 2));
        assert_eq!(
            sol.argmax[0][&AugmentedState {
                state: 0,
                cum: int(0)
            }],
            vec![0, 1]
        );
        let sol = solve_threshold_var(&mdp, &int(7)).unwrap();
        assert_eq!(sol.eta, int(0));
    }

    #[test]
    fn budget_is_enforced() {
        let mdp = coin(3);
        let err =
            build_augmented_with(&mdp, &int(0), AugmentedBudget { max_states: 3 }).unwrap_err();
        assert!(matches!(err, Error::BudgetExceeded { .. }));
    }

    #[test]
    fn listing_is_stable() {
        let mdp = coin(3);
        let sol = solve_threshold_var(&mdp, &int(4)).unwrap();
        let text = sol.listing(&mdp);
        assert!(
            text.starts_with("t=0 (s, 0) -> safe  [argmax: safe, risky]\n"),
            "{text}"
        );
        assert_eq!(text, sol.listing(&mdp));
    }
}
