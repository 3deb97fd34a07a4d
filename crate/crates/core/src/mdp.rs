//! Finite-horizon MDPs with either a state-action-state (SAS) or a
//! state-action (SA) reward table, deterministic policies, and the
//! expected-total-reward backward induction.

use std::fmt;

use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mrp::{MarkovRewardProcess, MrpReward};
use crate::rational::{self, Rational};

/// Which reward convention an instance carries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RewardKind {
    /// `r(x, a, y)` depends on the next state.
    Sas,
    /// `r'(x, a)`; stored on every outcome of `(x, a)` with the same value.
    Sa,
}

impl fmt::Display for RewardKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RewardKind::Sas => "sas",
            RewardKind::Sa => "sa",
        })
    }
}

/// One positive-probability outcome of taking an action.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Outcome {
    pub next: usize,
    pub prob: Rational,
    pub reward: Rational,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FiniteMdp {
    horizon: usize,
    states: Vec<String>,
    actions: Vec<Vec<String>>,
    /// `outcomes[x][a]`, sorted by next state, zero-probability entries dropped.
    outcomes: Vec<Vec<Vec<Outcome>>>,
    kind: RewardKind,
    mu0: Vec<Rational>,
    salvage: Vec<Rational>,
}

impl FiniteMdp {
    /// Validates and assembles an instance.
    ///
    /// `outcomes[x][a]` may contain zero-probability entries (they are
    /// dropped) but each next state may appear at most once. For
    /// [`RewardKind::Sa`] every outcome of `(x, a)` must carry the same reward.
    pub fn new(
        horizon: usize,
        states: Vec<String>,
        actions: Vec<Vec<String>>,
        outcomes: Vec<Vec<Vec<Outcome>>>,
        kind: RewardKind,
        mu0: Vec<Rational>,
        salvage: Vec<Rational>,
    ) -> Result<Self> {
        let n = states.len();
        let invalid = |msg: String| Err(Error::InvalidModel(msg));
        if horizon == 0 {
            return invalid("horizon must be at least 1".into());
        }
        if n == 0 {
            return invalid("state set is empty".into());
        }
        if actions.len() != n || outcomes.len() != n {
            return invalid(format!(
                "expected action and outcome tables for {n} states, got {} and {}",
                actions.len(),
                outcomes.len()
            ));
        }
        if mu0.len() != n || salvage.len() != n {
            return invalid(format!(
                "mu0 and salvage must have {n} entries, got {} and {}",
                mu0.len(),
                salvage.len()
            ));
        }
        let mut cleaned = Vec::with_capacity(n);
        for (x, (acts, outs)) in actions.iter().zip(outcomes).enumerate() {
            if acts.is_empty() {
                return invalid(format!("state `{}` has no actions", states[x]));
            }
            if outs.len() != acts.len() {
                return invalid(format!(
                    "state `{}`: {} actions but {} outcome lists",
                    states[x],
                    acts.len(),
                    outs.len()
                ));
            }
            let mut per_state = Vec::with_capacity(acts.len());
            for (a, mut list) in outs.into_iter().enumerate() {
                let label = || format!("({}, {})", states[x], acts[a]);
                list.sort_by_key(|o| o.next);
                if list.windows(2).any(|w| w[0].next == w[1].next) {
                    return invalid(format!("{}: duplicate next state", label()));
                }
                if let Some(o) = list.iter().find(|o| o.next >= n) {
                    return invalid(format!(
                        "{}: next state index {} out of range",
                        label(),
                        o.next
                    ));
                }
                if list.iter().any(|o| o.prob.is_negative()) {
                    return invalid(format!("{}: negative probability", label()));
                }
                let total: Rational = list.iter().map(|o| &o.prob).sum();
                if !total.is_one() {
                    return invalid(format!(
                        "{}: probabilities sum to {}, not 1",
                        label(),
                        rational::format(&total)
                    ));
                }
                list.retain(|o| !o.prob.is_zero());
                if kind == RewardKind::Sa && list.windows(2).any(|w| w[0].reward != w[1].reward) {
                    return invalid(format!(
                        "{}: SA reward must not depend on the next state",
                        label()
                    ));
                }
                per_state.push(list);
            }
            cleaned.push(per_state);
        }
        if mu0.iter().any(|p| p.is_negative()) {
            return invalid("mu0 has a negative entry".into());
        }
        let total: Rational = mu0.iter().sum();
        if !total.is_one() {
            return invalid(format!("mu0 sums to {}, not 1", rational::format(&total)));
        }
        Ok(Self {
            horizon,
            states,
            actions,
            outcomes: cleaned,
            kind,
            mu0,
            salvage,
        })
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn num_states(&self) -> usize {
        self.states.len()
    }

    pub fn state_names(&self) -> &[String] {
        &self.states
    }

    pub fn state_name(&self, x: usize) -> &str {
        &self.states[x]
    }

    pub fn action_names(&self, x: usize) -> &[String] {
        &self.actions[x]
    }

    pub fn num_actions(&self, x: usize) -> usize {
        self.actions[x].len()
    }

    pub fn outcomes(&self, x: usize, a: usize) -> &[Outcome] {
        &self.outcomes[x][a]
    }

    pub fn kind(&self) -> RewardKind {
        self.kind
    }

    pub fn mu0(&self) -> &[Rational] {
        &self.mu0
    }

    pub fn salvage(&self) -> &[Rational] {
        &self.salvage
    }

    /// `p(y | x, a)`, zero when `y` is not a listed outcome.
    pub fn prob(&self, x: usize, a: usize, y: usize) -> Rational {
        self.outcomes[x][a]
            .iter()
            .find(|o| o.next == y)
            .map(|o| o.prob.clone())
            .unwrap_or_else(Rational::zero)
    }

    /// `r'(x, a)`: the SA reward, or the expectation of the SAS reward.
    pub fn expected_reward(&self, x: usize, a: usize) -> Rational {
        self.outcomes[x][a]
            .iter()
            .map(|o| &o.prob * &o.reward)
            .sum()
    }

    /// Same instance with a different horizon.
    pub fn with_horizon(&self, horizon: usize) -> Result<Self> {
        if horizon == 0 {
            return Err(Error::InvalidModel("horizon must be at least 1".into()));
        }
        Ok(Self {
            horizon,
            ..self.clone()
        })
    }

    /// Upper bound on `(state, action)` assignment counts for stationary
    /// deterministic policies.
    pub fn stationary_policy_count(&self) -> u128 {
        self.actions
            .iter()
            .map(|a| a.len() as u128)
            .fold(1u128, |acc, k| acc.saturating_mul(k))
    }

    /// Stationary policy with the given mixed-radix index (state 0 is the
    /// fastest-varying digit).
    pub fn stationary_policy(&self, mut index: u128) -> DeterministicPolicy {
        let rule = self
            .actions
            .iter()
            .map(|acts| {
                let k = acts.len() as u128;
                let a = (index % k) as usize;
                index /= k;
                a
            })
            .collect();
        DeterministicPolicy::Stationary(rule)
    }

    pub fn check_policy(&self, policy: &DeterministicPolicy) -> Result<()> {
        if let DeterministicPolicy::Markov(rules) = policy {
            if rules.len() != self.horizon {
                return Err(Error::Precondition(format!(
                    "Markov policy has {} decision rules but the horizon is {}",
                    rules.len(),
                    self.horizon
                )));
            }
        }
        for rule in policy.rules() {
            if rule.len() != self.num_states() {
                return Err(Error::Precondition(format!(
                    "decision rule covers {} states, expected {}",
                    rule.len(),
                    self.num_states()
                )));
            }
            for (x, &a) in rule.iter().enumerate() {
                if a >= self.num_actions(x) {
                    return Err(Error::IllegalAction {
                        state: self.states[x].clone(),
                        action: a,
                        available: self.num_actions(x),
                    });
                }
            }
        }
        Ok(())
    }

    /// Human-readable `state->action` listing of a stationary rule.
    pub fn describe_rule(&self, rule: &[usize]) -> String {
        rule.iter()
            .enumerate()
            .map(|(x, &a)| format!("{}->{}", self.states[x], self.actions[x][a]))
            .collect::<Vec<_>>()
            .join(" ")
    }
}

/// Deterministic Markov policy, either one rule per epoch or a single
/// stationary rule. Rules map a state index to an action index.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum DeterministicPolicy {
    Stationary(Vec<usize>),
    Markov(Vec<Vec<usize>>),
}

impl DeterministicPolicy {
    pub fn action(&self, t: usize, x: usize) -> usize {
        match self {
            DeterministicPolicy::Stationary(rule) => rule[x],
            DeterministicPolicy::Markov(rules) => rules[t][x],
        }
    }

    pub fn rules(&self) -> Vec<&[usize]> {
        match self {
            DeterministicPolicy::Stationary(rule) => vec![rule.as_slice()],
            DeterministicPolicy::Markov(rules) => rules.iter().map(Vec::as_slice).collect(),
        }
    }
}

/// Replaces an SAS table by `r'(x, a) = sum_y r(x, a, y) p(y | x, a)`.
/// SA input is returned unchanged.
pub fn simplify_reward(mdp: &FiniteMdp) -> FiniteMdp {
    let mut out = mdp.clone();
    for (x, per_state) in out.outcomes.iter_mut().enumerate() {
        for (a, list) in per_state.iter_mut().enumerate() {
            let r = mdp.expected_reward(x, a);
            for o in list.iter_mut() {
                o.reward = r.clone();
            }
        }
    }
    out.kind = RewardKind::Sa;
    out
}

/// Markov chain induced by a stationary policy. Keeps the reward convention:
/// SAS input yields a transition reward, SA input a state reward.
pub fn induced_mrp(mdp: &FiniteMdp, policy: &DeterministicPolicy) -> Result<MarkovRewardProcess> {
    let rule = match policy {
        DeterministicPolicy::Stationary(rule) => rule,
        DeterministicPolicy::Markov(_) => {
            return Err(Error::Precondition(
                "an induced Markov reward process needs a stationary policy".into(),
            ))
        }
    };
    mdp.check_policy(policy)?;
    let n = mdp.num_states();
    let mut kernel = vec![vec![Rational::zero(); n]; n];
    let mut trans_reward = vec![vec![Rational::zero(); n]; n];
    for x in 0..n {
        for o in mdp.outcomes(x, rule[x]) {
            kernel[x][o.next] = o.prob.clone();
            trans_reward[x][o.next] = o.reward.clone();
        }
    }
    let reward = match mdp.kind() {
        RewardKind::Sas => MrpReward::Transition(trans_reward),
        RewardKind::Sa => {
            MrpReward::State((0..n).map(|x| mdp.expected_reward(x, rule[x])).collect())
        }
    };
    MarkovRewardProcess::new(
        mdp.horizon(),
        mdp.state_names().to_vec(),
        kernel,
        reward,
        mdp.mu0().to_vec(),
        Some(mdp.salvage().to_vec()),
    )
}

#[derive(Debug, Clone)]
pub struct ExpectedSolution {
    /// `sum_x mu0(x) u*_0(x)`.
    pub value: Rational,
    pub policy: DeterministicPolicy,
    /// `values[t][x] = u*_t(x)` for `t = 0..=N`.
    pub values: Vec<Vec<Rational>>,
}

/// One Bellman backup term for action `a` at `x` against `next`.
fn q_value(mdp: &FiniteMdp, x: usize, a: usize, next: &[Rational]) -> Rational {
    let outs = mdp.outcomes(x, a);
    match mdp.kind() {
        RewardKind::Sas => outs
            .iter()
            .map(|o| &o.prob * (&o.reward + &next[o.next]))
            .sum(),
        RewardKind::Sa => {
            let cont: Rational = outs.iter().map(|o| &o.prob * &next[o.next]).sum();
            mdp.expected_reward(x, a) + cont
        }
    }
}

/// Backward induction for the expected total reward. Ties go to the lowest
/// action index.
pub fn expected_backward_induction(mdp: &FiniteMdp) -> ExpectedSolution {
    let n = mdp.num_states();
    let horizon = mdp.horizon();
    let mut values = vec![Vec::new(); horizon + 1];
    values[horizon] = mdp.salvage().to_vec();
    let mut rules = vec![Vec::new(); horizon];
    for t in (0..horizon).rev() {
        let mut u = Vec::with_capacity(n);
        let mut rule = Vec::with_capacity(n);
        for x in 0..n {
            let mut best: Option<(Rational, usize)> = None;
            for a in 0..mdp.num_actions(x) {
                let q = q_value(mdp, x, a, &values[t + 1]);
                if best.as_ref().is_none_or(|(b, _)| q > *b) {
                    best = Some((q, a));
                }
            }
            let (q, a) = best.expect("action sets are nonempty");
            u.push(q);
            rule.push(a);
        }
        values[t] = u;
        rules[t] = rule;
    }
    let value = mdp.mu0().iter().zip(&values[0]).map(|(m, u)| m * u).sum();
    ExpectedSolution {
        value,
        policy: DeterministicPolicy::Markov(rules),
        values,
    }
}

/// Expected total reward of a fixed policy (policy-evaluation variant of the
/// induction).
pub fn evaluate_policy(mdp: &FiniteMdp, policy: &DeterministicPolicy) -> Result<Rational> {
    mdp.check_policy(policy)?;
    let mut u = mdp.salvage().to_vec();
    for t in (0..mdp.horizon()).rev() {
        u = (0..mdp.num_states())
            .map(|x| q_value(mdp, x, policy.action(t, x), &u))
            .collect();
    }
    Ok(mdp.mu0().iter().zip(&u).map(|(m, v)| m * v).sum())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{int, ratio};

    fn two_state(kind: RewardKind) -> FiniteMdp {
        let o = |next, p: Rational, r: i64| Outcome {
            next,
            prob: p,
            reward: int(r),
        };
        FiniteMdp::new(
            2,
            vec!["a".into(), "b".into()],
            vec![vec!["stay".into(), "go".into()], vec!["stay".into()]],
            vec![
                vec![
                    vec![o(0, int(1), 1)],
                    vec![o(0, ratio(1, 2), 3), o(1, ratio(1, 2), 3)],
                ],
                vec![vec![o(1, int(1), 2)]],
            ],
            kind,
            vec![int(1), int(0)],
            vec![int(0), int(0)],
        )
        .unwrap()
    }

    #[test]
    fn rejects_bad_rows() {
        let o = Outcome {
            next: 0,
            prob: ratio(1, 2),
            reward: int(0),
        };
        let err = FiniteMdp::new(
            1,
            vec!["s".into()],
            vec![vec!["a".into()]],
            vec![vec![vec![o]]],
            RewardKind::Sas,
            vec![int(1)],
            vec![int(0)],
        )
        .unwrap_err();
        assert!(err.to_string().contains("sum to 1/2"), "{err}");
    }

    #[test]
    fn rejects_y_dependent_sa_reward() {
        let o = |next, r| Outcome {
            next,
            prob: ratio(1, 2),
            reward: int(r),
        };
        let err = FiniteMdp::new(
            1,
            vec!["s".into(), "t".into()],
            vec![vec!["a".into()], vec!["a".into()]],
            vec![vec![vec![o(0, 1), o(1, 2)]], vec![vec![o(0, 0), o(1, 0)]]],
            RewardKind::Sa,
            vec![int(1), int(0)],
            vec![int(0), int(0)],
        )
        .unwrap_err();
        assert!(err.to_string().contains("SA reward"));
    }

    #[test]
    fn rejects_bad_mu0() {
        let o = Outcome {
            next: 0,
            prob: int(1),
            reward: int(0),
        };
        assert!(FiniteMdp::new(
            1,
            vec!["s".into()],
            vec![vec!["a".into()]],
            vec![vec![vec![o]]],
            RewardKind::Sas,
            vec![ratio(1, 2)],
            vec![int(0)],
        )
        .is_err());
    }

    #[test]
    fn constant_in_y_reward_simplifies_to_itself() {
        let mdp = two_state(RewardKind::Sas);
        let sa = simplify_reward(&mdp);
        assert_eq!(sa.kind(), RewardKind::Sa);
        assert_eq!(sa.expected_reward(0, 1), int(3));
        assert_eq!(sa.outcomes(0, 1), mdp.outcomes(0, 1));
    }

    #[test]
    fn illegal_action_names_the_state() {
        let mdp = two_state(RewardKind::Sas);
        let err = induced_mrp(&mdp, &DeterministicPolicy::Stationary(vec![0, 1])).unwrap_err();
        match err {
            Error::IllegalAction { state, .. } => assert_eq!(state, "b"),
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn induction_on_small_chain() {
        // From a: go (3 now, then 1 or 2 expected) vs stay (1 + best next).
        let mdp = two_state(RewardKind::Sas);
        let sol = expected_backward_induction(&mdp);
        // u1 = [max(1, 3), 2] = [3, 2]; u0(a) = max(1 + 3, 3 + (3+2)/2) = 11/2
        assert_eq!(sol.values[1], vec![int(3), int(2)]);
        assert_eq!(sol.value, ratio(11, 2));
        assert_eq!(sol.policy.action(0, 0), 1);
    }

    #[test]
    fn ties_pick_lowest_index() {
        let o = |r| Outcome {
            next: 0,
            prob: int(1),
            reward: int(r),
        };
        let mdp = FiniteMdp::new(
            1,
            vec!["s".into()],
            vec![vec!["x".into(), "y".into(), "z".into()]],
            vec![vec![vec![o(1)], vec![o(2)], vec![o(2)]]],
            RewardKind::Sas,
            vec![int(1)],
            vec![int(0)],
        )
        .unwrap();
        assert_eq!(expected_backward_induction(&mdp).policy.action(0, 0), 1);
    }

    #[test]
    fn stationary_policy_indexing() {
        let mdp = two_state(RewardKind::Sas);
        assert_eq!(mdp.stationary_policy_count(), 2);
        assert_eq!(
            mdp.stationary_policy(1),
            DeterministicPolicy::Stationary(vec![1, 0])
        );
        assert_eq!(mdp.describe_rule(&[1, 0]), "a->go b->stay");
    }
}
