//! Exact, finitely supported total-reward distributions obtained by
//! enumerating trajectories.

use std::collections::BTreeMap;

use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::mdp::{DeterministicPolicy, FiniteMdp};
use crate::mrp::MarkovRewardProcess;
use crate::rational::{self, Rational};

/// Exact CDF of a discrete random variable.
///
/// `support` is strictly increasing, `prob` is positive and sums to one.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StepCdf {
    support: Vec<Rational>,
    prob: Vec<Rational>,
}

impl StepCdf {
    /// Builds from unordered `(value, mass)` pairs, merging equal values and
    /// dropping zero masses.
    pub fn from_masses(masses: impl IntoIterator<Item = (Rational, Rational)>) -> Result<Self> {
        let mut merged: BTreeMap<Rational, Rational> = BTreeMap::new();
        for (v, p) in masses {
            if p < Rational::zero() {
                return Err(Error::InvalidModel("negative probability mass".into()));
            }
            *merged.entry(v).or_insert_with(Rational::zero) += p;
        }
        merged.retain(|_, p| !p.is_zero());
        let total: Rational = merged.values().sum();
        if !total.is_one() {
            return Err(Error::InvalidModel(format!(
                "masses sum to {}, not 1",
                rational::format(&total)
            )));
        }
        let (support, prob) = merged.into_iter().unzip();
        Ok(Self { support, prob })
    }

    pub fn point(value: Rational) -> Self {
        Self {
            support: vec![value],
            prob: vec![Rational::one()],
        }
    }

    pub fn support(&self) -> &[Rational] {
        &self.support
    }

    pub fn prob(&self) -> &[Rational] {
        &self.prob
    }

    pub fn len(&self) -> usize {
        self.support.len()
    }

    pub fn is_empty(&self) -> bool {
        self.support.is_empty()
    }

    /// `F(tau) = P(Phi <= tau)`.
    pub fn cdf(&self, tau: &Rational) -> Rational {
        let k = self.support.partition_point(|s| s <= tau);
        self.prob[..k].iter().sum()
    }

    /// `F(tau-) = P(Phi < tau)`.
    pub fn cdf_below(&self, tau: &Rational) -> Rational {
        let k = self.support.partition_point(|s| s < tau);
        self.prob[..k].iter().sum()
    }

    /// `P(Phi >= tau)`.
    pub fn prob_at_least(&self, tau: &Rational) -> Rational {
        Rational::one() - self.cdf_below(tau)
    }

    /// `P(Phi > tau)`.
    pub fn prob_greater(&self, tau: &Rational) -> Rational {
        Rational::one() - self.cdf(tau)
    }

    pub fn mean(&self) -> Rational {
        self.support
            .iter()
            .zip(&self.prob)
            .map(|(s, p)| s * p)
            .sum()
    }

    pub fn cdf_f64(&self, tau: f64) -> f64 {
        let k = self.support.partition_point(|s| rational::to_f64(s) <= tau);
        self.prob[..k].iter().map(rational::to_f64).sum()
    }
}

/// Refuses enumerations whose trajectory count could exceed `max_paths`.
///
/// The bound used is `|supp mu0| * d^N` with `d` the largest number of
/// positive-probability successors of any state-action pair.
#[derive(Debug, Clone, Copy)]
pub struct PathBudget {
    pub max_paths: u128,
}

impl Default for PathBudget {
    fn default() -> Self {
        Self { max_paths: 1 << 24 }
    }
}

impl PathBudget {
    pub fn unlimited() -> Self {
        Self {
            max_paths: u128::MAX,
        }
    }

    pub(crate) fn check(&self, starts: usize, max_degree: usize, horizon: usize) -> Result<()> {
        let mut bound = starts as u128;
        for _ in 0..horizon {
            bound = bound.saturating_mul(max_degree as u128);
        }
        if bound > self.max_paths {
            return Err(Error::BudgetExceeded {
                what: "trajectory enumeration bound",
                count: bound,
                limit: self.max_paths,
                hint: "; use the Edgeworth estimator for long horizons",
            });
        }
        Ok(())
    }
}

/// Exact distribution of `sum_{t<N} r + v(X_N)` for a Markov reward process.
pub fn mrp_distribution(mrp: &MarkovRewardProcess, budget: PathBudget) -> Result<StepCdf> {
    let n = mrp.num_states();
    let starts = mrp.mu0().iter().filter(|p| !p.is_zero()).count();
    let degree = (0..n).map(|x| mrp.successors(x).count()).max().unwrap_or(0);
    budget.check(starts, degree, mrp.horizon())?;

    fn walk(
        mrp: &MarkovRewardProcess,
        t: usize,
        x: usize,
        cum: Rational,
        mass: Rational,
        acc: &mut Vec<(Rational, Rational)>,
    ) {
        if t == mrp.horizon() {
            let total = match mrp.salvage() {
                Some(v) => cum + &v[x],
                None => cum,
            };
            acc.push((total, mass));
            return;
        }
        for (y, p) in mrp.successors(x) {
            walk(mrp, t + 1, y, &cum + mrp.step_reward(x, y), &mass * p, acc);
        }
    }

    let mut acc = Vec::new();
    for (x, p) in mrp.mu0().iter().enumerate() {
        if !p.is_zero() {
            walk(mrp, 0, x, Rational::zero(), p.clone(), &mut acc);
        }
    }
    StepCdf::from_masses(acc)
}

/// Exact distribution under a deterministic Markov (or stationary) policy.
pub fn mdp_distribution(
    mdp: &FiniteMdp,
    policy: &DeterministicPolicy,
    budget: PathBudget,
) -> Result<StepCdf> {
    mdp.check_policy(policy)?;
    mdp_distribution_with(mdp, budget, |t, x, _| policy.action(t, x))
}

/// Exact distribution when the action may depend on the epoch, the current
/// state and the reward accumulated so far. `decide(t, x, cum)` must return
/// a legal action index; an illegal one is reported as an error.
pub fn mdp_distribution_with<F>(mdp: &FiniteMdp, budget: PathBudget, decide: F) -> Result<StepCdf>
where
    F: Fn(usize, usize, &Rational) -> usize,
{
    let n = mdp.num_states();
    let starts = mdp.mu0().iter().filter(|p| !p.is_zero()).count();
    let degree = (0..n)
        .flat_map(|x| (0..mdp.num_actions(x)).map(move |a| (x, a)))
        .map(|(x, a)| mdp.outcomes(x, a).len())
        .max()
        .unwrap_or(0);
    budget.check(starts, degree, mdp.horizon())?;

    struct Walker<'a, F> {
        mdp: &'a FiniteMdp,
        decide: F,
        acc: Vec<(Rational, Rational)>,
    }

    impl<F: Fn(usize, usize, &Rational) -> usize> Walker<'_, F> {
        fn walk(&mut self, t: usize, x: usize, cum: Rational, mass: Rational) -> Result<()> {
            if t == self.mdp.horizon() {
                self.acc.push((cum + &self.mdp.salvage()[x], mass));
                return Ok(());
            }
            let a = (self.decide)(t, x, &cum);
            if a >= self.mdp.num_actions(x) {
                return Err(Error::IllegalAction {
                    state: self.mdp.state_name(x).to_string(),
                    action: a,
                    available: self.mdp.num_actions(x),
                });
            }
            let mdp = self.mdp;
            for o in mdp.outcomes(x, a) {
                self.walk(t + 1, o.next, &cum + &o.reward, &mass * &o.prob)?;
            }
            Ok(())
        }
    }

    let mut walker = Walker {
        mdp,
        decide,
        acc: Vec::new(),
    };
    for (x, p) in mdp.mu0().iter().enumerate() {
        if !p.is_zero() {
            walker.walk(0, x, Rational::zero(), p.clone())?;
        }
    }
    StepCdf::from_masses(walker.acc)
}
