//! Pareto fronts of total-reward CDF sets and the two VaR queries on them.
//!
//! Conventions at atoms of exact (step) fronts:
//!
//! * `value` holds `min_pi P(Phi < tau)`, so `1 - value` is
//!   `max_pi P(Phi >= tau)`, the same non-strict event the augmented 0-1 MDP
//!   scores. [`ExactParetoFront::query_eta`] uses this.
//! * `value_right` holds `min_pi P(Phi <= tau)`, the right-continuous front.
//!   [`ExactParetoFront::query_eta_strict`] (`max_pi P(Phi > tau)`) and
//!   [`ExactParetoFront::query_rho`] use this.

use std::collections::{BTreeMap, BTreeSet};

use num_traits::{One, Zero};
use serde::Serialize;

use crate::augmented::{build_augmented, AugmentedPolicy, AugmentedState};
use crate::distribution::StepCdf;
use crate::error::{Error, Result};
use crate::mdp::FiniteMdp;
use crate::rational::Rational;

/// Result of a threshold query that may fall outside the front.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum Threshold<T> {
    Finite(T),
    /// The level is never exceeded on the front's span.
    PlusInfinity,
    /// The level is below the front everywhere on its span.
    MinusInfinity,
}

impl<T> Threshold<T> {
    pub fn finite(self) -> Option<T> {
        match self {
            Threshold::Finite(v) => Some(v),
            _ => None,
        }
    }

    pub fn is_finite(&self) -> bool {
        matches!(self, Threshold::Finite(_))
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::Precondition(format!(
            "percentile alpha must lie in [0, 1], got {alpha}"
        )));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy)]
pub struct PolicyBudget {
    pub max_policies: usize,
}

impl Default for PolicyBudget {
    fn default() -> Self {
        Self {
            max_policies: 100_000,
        }
    }
}

/// Exact front over deterministic policies on the augmented state space.
#[derive(Debug, Clone)]
pub struct ExactParetoFront {
    /// Union of the supports of all member CDFs.
    pub grid: Vec<Rational>,
    /// `min_pi P(Phi < tau)`.
    pub value: Vec<Rational>,
    pub witness: Vec<usize>,
    /// `min_pi P(Phi <= tau)`.
    pub value_right: Vec<Rational>,
    pub witness_right: Vec<usize>,
    /// Enumerated policies, indexed by witness id.
    pub policies: Vec<AugmentedPolicy>,
    pub cdfs: Vec<StepCdf>,
}

impl ExactParetoFront {
    /// Pointwise minimum of the given CDFs.
    pub fn from_cdfs(policies: Vec<AugmentedPolicy>, cdfs: Vec<StepCdf>) -> Result<Self> {
        if cdfs.is_empty() {
            return Err(Error::EmptyFront);
        }
        let grid: Vec<Rational> = cdfs
            .iter()
            .flat_map(|c| c.support().iter().cloned())
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        let argmin = |f: &dyn Fn(&StepCdf) -> Rational| -> (Rational, usize) {
            let mut best: Option<(Rational, usize)> = None;
            for (id, c) in cdfs.iter().enumerate() {
                let v = f(c);
                if best.as_ref().is_none_or(|(b, _)| v < *b) {
                    best = Some((v, id));
                }
            }
            best.expect("nonempty")
        };
        let mut value = Vec::with_capacity(grid.len());
        let mut witness = Vec::with_capacity(grid.len());
        let mut value_right = Vec::with_capacity(grid.len());
        let mut witness_right = Vec::with_capacity(grid.len());
        for tau in &grid {
            let (v, w) = argmin(&|c| c.cdf_below(tau));
            value.push(v);
            witness.push(w);
            let (v, w) = argmin(&|c| c.cdf(tau));
            value_right.push(v);
            witness_right.push(w);
        }
        Ok(Self {
            grid,
            value,
            witness,
            value_right,
            witness_right,
            policies,
            cdfs,
        })
    }

    /// `eta_tau = 1 - P_Phi(tau) = max_pi P(Phi >= tau)`.
    pub fn query_eta(&self, tau: &Rational) -> Rational {
        let k = self.grid.partition_point(|g| g < tau);
        match self.value.get(k) {
            Some(v) => Rational::one() - v,
            None => Rational::zero(),
        }
    }

    /// Policy attaining [`Self::query_eta`]; `None` above the grid where
    /// every policy gives zero.
    pub fn eta_witness(&self, tau: &Rational) -> Option<usize> {
        let k = self.grid.partition_point(|g| g < tau);
        self.witness.get(k).copied()
    }

    /// `max_pi P(Phi > tau)`.
    pub fn query_eta_strict(&self, tau: &Rational) -> Rational {
        let k = self.grid.partition_point(|g| g <= tau);
        if k == 0 {
            Rational::one()
        } else {
            Rational::one() - &self.value_right[k - 1]
        }
    }

    /// `rho_alpha = sup { tau : min_pi P(Phi <= tau) <= 1 - alpha }`.
    pub fn query_rho(&self, alpha: &Rational) -> Result<Threshold<Rational>> {
        if *alpha < Rational::zero() || *alpha > Rational::one() {
            return Err(Error::Precondition(format!(
                "percentile alpha must lie in [0, 1], got {alpha}"
            )));
        }
        let level = Rational::one() - alpha;
        Ok(match self.value_right.iter().position(|v| *v > level) {
            Some(k) => Threshold::Finite(self.grid[k].clone()),
            None => Threshold::PlusInfinity,
        })
    }
}

/// Enumerates deterministic policies on the reachable augmented state space
/// and returns the exact front of their total-reward CDFs.
///
/// Only decisions at augmented states the policy itself can reach are
/// enumerated, so policies that differ only off their own support are not
/// repeated.
pub fn pareto_front_exact(mdp: &FiniteMdp, budget: PolicyBudget) -> Result<ExactParetoFront> {
    let (policies, cdfs) = enumerate_augmented_policies(mdp, budget)?;
    ExactParetoFront::from_cdfs(policies, cdfs)
}

type Layer = BTreeMap<AugmentedState, Rational>;

/// All effective deterministic augmented policies with their exact CDFs.
pub fn enumerate_augmented_policies(
    mdp: &FiniteMdp,
    budget: PolicyBudget,
) -> Result<(Vec<AugmentedPolicy>, Vec<StepCdf>)> {
    struct Enumerator<'a> {
        mdp: &'a FiniteMdp,
        budget: usize,
        policies: Vec<AugmentedPolicy>,
        cdfs: Vec<StepCdf>,
    }

    impl Enumerator<'_> {
        fn recurse(
            &mut self,
            t: usize,
            layer: Layer,
            rules: &mut Vec<BTreeMap<AugmentedState, usize>>,
        ) -> Result<bool> {
            let mdp = self.mdp;
            if t == mdp.horizon() {
                if self.policies.len() >= self.budget {
                    return Ok(false);
                }
                let masses = layer
                    .into_iter()
                    .map(|(s, p)| (s.cum + &mdp.salvage()[s.state], p));
                self.cdfs.push(StepCdf::from_masses(masses)?);
                self.policies.push(AugmentedPolicy {
                    rules: rules.clone(),
                });
                return Ok(true);
            }
            let states: Vec<(&AugmentedState, &Rational)> = layer.iter().collect();
            let radices: Vec<usize> = states
                .iter()
                .map(|(s, _)| mdp.num_actions(s.state))
                .collect();
            let mut digits = vec![0usize; states.len()];
            loop {
                let mut next = Layer::new();
                let mut rule = BTreeMap::new();
                for ((s, mass), &a) in states.iter().zip(&digits) {
                    rule.insert((*s).clone(), a);
                    for o in mdp.outcomes(s.state, a) {
                        let target = AugmentedState {
                            state: o.next,
                            cum: &s.cum + &o.reward,
                        };
                        *next.entry(target).or_insert_with(Rational::zero) += *mass * &o.prob;
                    }
                }
                rules.push(rule);
                let keep_going = self.recurse(t + 1, next, rules)?;
                rules.pop();
                if !keep_going {
                    return Ok(false);
                }
                // Mixed-radix increment, first state fastest.
                let mut i = 0;
                loop {
                    if i == digits.len() {
                        return Ok(true);
                    }
                    digits[i] += 1;
                    if digits[i] < radices[i] {
                        break;
                    }
                    digits[i] = 0;
                    i += 1;
                }
            }
        }
    }

    let mut first = Layer::new();
    for (x, p) in mdp.mu0().iter().enumerate() {
        if !p.is_zero() {
            first.insert(
                AugmentedState {
                    state: x,
                    cum: Rational::zero(),
                },
                p.clone(),
            );
        }
    }
    let mut e = Enumerator {
        mdp,
        budget: budget.max_policies,
        policies: Vec::new(),
        cdfs: Vec::new(),
    };
    let finished = e.recurse(0, first, &mut Vec::new())?;
    if !finished {
        // Name an explicit count: the product of action-set sizes over every
        // reachable augmented state bounds the effective count from above.
        let aug = build_augmented(mdp, &Rational::zero())?;
        let bound = (0..mdp.horizon())
            .flat_map(|t| aug.layer(t).iter())
            .fold(1u128, |acc, s| {
                acc.saturating_mul(mdp.num_actions(s.state) as u128)
            });
        return Err(Error::BudgetExceeded {
            what: "augmented deterministic policy count (upper bound)",
            count: bound,
            limit: budget.max_policies as u128,
            hint: "",
        });
    }
    Ok((e.policies, e.cdfs))
}

/// Estimated front on a real grid, evaluated by linear interpolation.
///
/// Below the grid the front is taken as 0 and above it as 1.
#[derive(Debug, Clone, Serialize)]
pub struct EstimatedParetoFront {
    pub grid: Vec<f64>,
    pub value: Vec<f64>,
    pub witness: Vec<usize>,
    /// Human-readable description of each candidate policy, by id.
    pub labels: Vec<String>,
}

impl EstimatedParetoFront {
    /// Pointwise minimum of `curves[k][i]` over `k` at each `grid[i]`; ties
    /// go to the lowest id.
    pub fn from_curves(
        grid: Vec<f64>,
        curves: &[(usize, Vec<f64>)],
        labels: Vec<String>,
    ) -> Result<Self> {
        if curves.is_empty() {
            return Err(Error::EmptyFront);
        }
        if grid.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Precondition(
                "tau grid must be strictly increasing".into(),
            ));
        }
        let mut value = Vec::with_capacity(grid.len());
        let mut witness = Vec::with_capacity(grid.len());
        for i in 0..grid.len() {
            let (id, v) = curves.iter().map(|(id, c)| (*id, c[i])).fold(
                (usize::MAX, f64::INFINITY),
                |best, cand| {
                    if cand.1 < best.1 {
                        cand
                    } else {
                        best
                    }
                },
            );
            value.push(v);
            witness.push(id);
        }
        Ok(Self {
            grid,
            value,
            witness,
            labels,
        })
    }

    /// `P_Phi(tau)` by linear interpolation.
    pub fn eval(&self, tau: f64) -> f64 {
        let g = &self.grid;
        if g.is_empty() || tau < g[0] {
            return 0.0;
        }
        if tau > g[g.len() - 1] {
            return 1.0;
        }
        let k = g.partition_point(|x| *x <= tau);
        if k == g.len() {
            return self.value[k - 1];
        }
        let (x0, x1) = (g[k - 1], g[k]);
        let (y0, y1) = (self.value[k - 1], self.value[k]);
        y0 + (y1 - y0) * (tau - x0) / (x1 - x0)
    }

    pub fn query_eta(&self, tau: f64) -> f64 {
        1.0 - self.eval(tau)
    }

    /// `sup { tau : P_Phi(tau) <= 1 - alpha }` on the interpolated front.
    pub fn query_rho(&self, alpha: f64) -> Result<Threshold<f64>> {
        check_alpha(alpha)?;
        let level = 1.0 - alpha;
        let v = &self.value;
        if v.is_empty() || level < v[0] {
            return Ok(Threshold::MinusInfinity);
        }
        if v[v.len() - 1] <= level {
            return Ok(Threshold::PlusInfinity);
        }
        // Last grid point still at or below the level; the next is above.
        let k = v.partition_point(|x| *x <= level) - 1;
        let (x0, x1) = (self.grid[k], self.grid[k + 1]);
        let (y0, y1) = (v[k], v[k + 1]);
        Ok(Threshold::Finite(x0 + (level - y0) * (x1 - x0) / (y1 - y0)))
    }

    /// `tau` with `P_Phi(tau) = q`.
    pub fn quantile(&self, q: f64) -> Result<Threshold<f64>> {
        self.query_rho(1.0 - q)
    }

    pub fn is_strictly_increasing(&self) -> bool {
        self.value.windows(2).all(|w| w[0] < w[1])
    }
}
