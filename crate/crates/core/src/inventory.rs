//! Single-product stochastic inventory control with lost sales.
//!
//! State `x` is the stock before ordering, action `a` the order size,
//! `X_{t+1} = max(x + a - D_t, 0)`, and the SAS reward is
//! `f(x + a - X_{t+1}) - O(a)` with `O(u) = (K + c(u)) 1[u > 0]`.
//! Salvage is the leftover stock, `v(x) = x`.

use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};
use crate::mdp::{FiniteMdp, Outcome, RewardKind};
use crate::rational::{int, ratio, Rational};

/// How the per-state order sets are generated.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ActionSets {
    /// Explicit order sizes per stock level; the state space is
    /// `0..sets.len()`.
    Explicit(Vec<Vec<u32>>),
    /// States `0..=M` with orders `0..=M-x`.
    CapacityDerived,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InventoryParams {
    pub horizon: usize,
    /// Warehouse capacity `M`.
    pub capacity: u32,
    /// Fixed cost `K` of placing a nonzero order.
    pub fixed_cost: Rational,
    /// Slope of the variable order cost `c(u) = slope * u`.
    pub unit_cost: Rational,
    /// Slope of the revenue `f(u) = price * u`.
    pub unit_price: Rational,
    /// `P(D = d)` for `d = 0..demand.len()`.
    pub demand: Vec<Rational>,
    /// Initial distribution as `(stock level, probability)` pairs.
    pub initial: Vec<(u32, Rational)>,
    pub action_sets: ActionSets,
}

impl InventoryParams {
    /// The two-epoch instance: `K = 4`, `c(u) = 2u`, `f(u) = 8u`, `M = 3`,
    /// demand `0/1/2` with probabilities `1/4, 1/2, 1/4`, starting empty,
    /// order sets `A_0 = {0,1,2}`, `A_1 = {0,1}`, `A_2 = {0}`.
    pub fn paper_short() -> Self {
        Self {
            horizon: 2,
            capacity: 3,
            fixed_cost: int(4),
            unit_cost: int(2),
            unit_price: int(8),
            demand: vec![ratio(1, 4), ratio(1, 2), ratio(1, 4)],
            initial: vec![(0, int(1))],
            action_sets: ActionSets::Explicit(vec![vec![0, 1, 2], vec![0, 1], vec![0]]),
        }
    }

    /// Same data with `N = 500`.
    pub fn paper_long() -> Self {
        Self {
            horizon: 500,
            ..Self::paper_short()
        }
    }

    /// Same data with order sets derived from the capacity (`M = 3`, four
    /// stock levels).
    pub fn capacity_variant(self) -> Self {
        Self {
            action_sets: ActionSets::CapacityDerived,
            ..self
        }
    }

    /// `(K + c(u)) 1[u > 0]`.
    pub fn order_cost(&self, u: u32) -> Rational {
        if u == 0 {
            Rational::zero()
        } else {
            &self.fixed_cost + &self.unit_cost * int(u as i64)
        }
    }

    pub fn revenue(&self, sold: u32) -> Rational {
        &self.unit_price * int(sold as i64)
    }

    fn order_sets(&self) -> Vec<Vec<u32>> {
        match &self.action_sets {
            ActionSets::Explicit(sets) => sets.clone(),
            ActionSets::CapacityDerived => (0..=self.capacity)
                .map(|x| (0..=self.capacity - x).collect())
                .collect(),
        }
    }

    fn validate(&self, sets: &[Vec<u32>]) -> Result<()> {
        let invalid = |m: String| Err(Error::InvalidModel(m));
        if self.horizon == 0 {
            return invalid("inventory horizon must be at least 1".into());
        }
        if self.demand.is_empty() || self.demand.iter().any(|p| p.is_negative()) {
            return invalid("demand distribution must be nonempty and nonnegative".into());
        }
        if !self.demand.iter().sum::<Rational>().is_one() {
            return invalid("demand probabilities must sum to 1".into());
        }
        if sets.is_empty() {
            return invalid("no stock levels".into());
        }
        let top = sets.len() as u32 - 1;
        for (x, orders) in sets.iter().enumerate() {
            if orders.is_empty() {
                return invalid(format!("stock level {x} has no order options"));
            }
            for &a in orders {
                let level = x as u32 + a;
                if level > self.capacity || level > top {
                    return invalid(format!(
                        "order {a} at stock {x} exceeds capacity {} or the top state {top}",
                        self.capacity
                    ));
                }
            }
        }
        let total: Rational = self.initial.iter().map(|(_, p)| p).sum();
        if !total.is_one()
            || self
                .initial
                .iter()
                .any(|(x, p)| *x > top || p.is_negative())
        {
            return invalid(
                "initial distribution must be a probability vector over stock levels".into(),
            );
        }
        Ok(())
    }
}

/// Builds the SAS-rewarded inventory MDP.
pub fn build_inventory(params: &InventoryParams) -> Result<FiniteMdp> {
    let sets = params.order_sets();
    params.validate(&sets)?;
    let n = sets.len();
    let mut outcomes = Vec::with_capacity(n);
    for (x, orders) in sets.iter().enumerate() {
        let per_state = orders
            .iter()
            .map(|&a| {
                let level = x as u32 + a;
                let mut probs = vec![Rational::zero(); level as usize + 1];
                for (d, p) in params.demand.iter().enumerate() {
                    let y = level.saturating_sub(d as u32);
                    probs[y as usize] += p;
                }
                probs
                    .into_iter()
                    .enumerate()
                    .filter(|(_, p)| !p.is_zero())
                    .map(|(y, prob)| Outcome {
                        next: y,
                        prob,
                        reward: params.revenue(level - y as u32) - params.order_cost(a),
                    })
                    .collect()
            })
            .collect();
        outcomes.push(per_state);
    }
    let mut mu0 = vec![Rational::zero(); n];
    for (x, p) in &params.initial {
        mu0[*x as usize] += p;
    }
    FiniteMdp::new(
        params.horizon,
        (0..n).map(|x| x.to_string()).collect(),
        sets.iter()
            .map(|s| s.iter().map(|a| a.to_string()).collect())
            .collect(),
        outcomes,
        RewardKind::Sas,
        mu0,
        (0..n).map(|x| int(x as i64)).collect(),
    )
}
