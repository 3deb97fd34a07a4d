use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};
use crate::rational::{self, Rational};

/// Reward attached to a Markov chain.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum MrpReward {
    /// `r(x)` collected at epochs `0..N`.
    State(Vec<Rational>),
    /// `r(x, y)` collected on each of the `N` transitions.
    Transition(Vec<Vec<Rational>>),
}

/// A policy-induced chain: `Phi = sum_{t<N} r(X_t[, X_{t+1}]) + v(X_N)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MarkovRewardProcess {
    horizon: usize,
    states: Vec<String>,
    kernel: Vec<Vec<Rational>>,
    reward: MrpReward,
    mu0: Vec<Rational>,
    salvage: Option<Vec<Rational>>,
}

impl MarkovRewardProcess {
    pub fn new(
        horizon: usize,
        states: Vec<String>,
        kernel: Vec<Vec<Rational>>,
        reward: MrpReward,
        mu0: Vec<Rational>,
        salvage: Option<Vec<Rational>>,
    ) -> Result<Self> {
        let n = states.len();
        let invalid = |msg: String| Err(Error::InvalidModel(msg));
        if horizon == 0 {
            return invalid("horizon must be at least 1".into());
        }
        if n == 0 {
            return invalid("state set is empty".into());
        }
        if kernel.len() != n || kernel.iter().any(|row| row.len() != n) {
            return invalid(format!("kernel must be {n}x{n}"));
        }
        for (x, row) in kernel.iter().enumerate() {
            if row.iter().any(|p| p.is_negative()) {
                return invalid(format!("kernel row `{}` has a negative entry", states[x]));
            }
            let total: Rational = row.iter().sum();
            if !total.is_one() {
                return invalid(format!(
                    "kernel row `{}` sums to {}, not 1",
                    states[x],
                    rational::format(&total)
                ));
            }
        }
        match &reward {
            MrpReward::State(r) if r.len() != n => {
                return invalid(format!("state reward needs {n} entries, got {}", r.len()))
            }
            MrpReward::Transition(r) if r.len() != n || r.iter().any(|row| row.len() != n) => {
                return invalid(format!("transition reward must be {n}x{n}"))
            }
            _ => {}
        }
        if mu0.len() != n || mu0.iter().any(|p| p.is_negative()) {
            return invalid(format!("mu0 must be a nonnegative vector of length {n}"));
        }
        let total: Rational = mu0.iter().sum();
        if !total.is_one() {
            return invalid(format!("mu0 sums to {}, not 1", rational::format(&total)));
        }
        if salvage.as_ref().is_some_and(|v| v.len() != n) {
            return invalid(format!("salvage must have {n} entries"));
        }
        Ok(Self {
            horizon,
            states,
            kernel,
            reward,
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

    pub fn kernel(&self) -> &[Vec<Rational>] {
        &self.kernel
    }

    pub fn reward(&self) -> &MrpReward {
        &self.reward
    }

    pub fn mu0(&self) -> &[Rational] {
        &self.mu0
    }

    pub fn salvage(&self) -> Option<&[Rational]> {
        self.salvage.as_deref()
    }

    pub fn is_transition_rewarded(&self) -> bool {
        matches!(self.reward, MrpReward::Transition(_))
    }

    /// Reward earned when moving `x -> y`, whatever the convention.
    pub fn step_reward(&self, x: usize, y: usize) -> &Rational {
        match &self.reward {
            MrpReward::State(r) => &r[x],
            MrpReward::Transition(r) => &r[x][y],
        }
    }

    /// Positive-probability successors of `x`.
    pub fn successors(&self, x: usize) -> impl Iterator<Item = (usize, &Rational)> + '_ {
        self.kernel[x]
            .iter()
            .enumerate()
            .filter(|(_, p)| !p.is_zero())
    }

    pub fn with_horizon(&self, horizon: usize) -> Result<Self> {
        if horizon == 0 {
            return Err(Error::InvalidModel("horizon must be at least 1".into()));
        }
        Ok(Self {
            horizon,
            ..self.clone()
        })
    }

    pub fn without_salvage(&self) -> Self {
        Self {
            salvage: None,
            ..self.clone()
        }
    }

    pub fn with_salvage(&self, salvage: Vec<Rational>) -> Result<Self> {
        if salvage.len() != self.num_states() {
            return Err(Error::InvalidModel(format!(
                "salvage must have {} entries",
                self.num_states()
            )));
        }
        Ok(Self {
            salvage: Some(salvage),
            ..self.clone()
        })
    }

    pub fn with_reward(&self, reward: MrpReward) -> Result<Self> {
        Self::new(
            self.horizon,
            self.states.clone(),
            self.kernel.clone(),
            reward,
            self.mu0.clone(),
            self.salvage.clone(),
        )
    }

    pub fn kernel_f64(&self) -> Vec<Vec<f64>> {
        self.kernel
            .iter()
            .map(|row| row.iter().map(rational::to_f64).collect())
            .collect()
    }

    pub fn mu0_f64(&self) -> Vec<f64> {
        self.mu0.iter().map(rational::to_f64).collect()
    }
}
