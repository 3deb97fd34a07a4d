//! State-transition transformation.
//!
//! A chain with transition reward `r(x, y)` is rewritten as a chain over the
//! pairs `(x, y)` with `P(x, y) > 0`, carrying the state reward
//! `r((x, y)) = r(x, y)`. Out of `(x, y)` only pairs `(y, z)` are reachable,
//! with probability `P(y, z)`; the original state acts as a router between
//! its incoming and outgoing pairs.
//!
//! Horizon bookkeeping: the original collects `N` transition rewards on
//! `X_0..X_N`. The transformed chain has horizon `N - 1`, visits
//! `(X_0, X_1) .. (X_{N-1}, X_N)` and collects a reward at every one of
//! those `N` epochs, including the last. Salvage `v(X_N)` becomes
//! `v((x, y)) = v(y)` on the last pair.

use std::collections::VecDeque;

use num_traits::Zero;

use crate::distribution::{PathBudget, StepCdf};
use crate::error::{Error, Result};
use crate::mrp::{MarkovRewardProcess, MrpReward};
use crate::rational::Rational;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TransformedMrp {
    horizon: usize,
    pairs: Vec<(usize, usize)>,
    names: Vec<String>,
    reward: Vec<Rational>,
    kernel: Vec<Vec<Rational>>,
    mu0: Vec<Rational>,
    salvage: Option<Vec<Rational>>,
}

/// Transforms a transition-rewarded chain. Any salvage on the input is
/// carried over as `v((x, y)) = v(y)`.
pub fn transform(mrp: &MarkovRewardProcess) -> Result<TransformedMrp> {
    let reward = match mrp.reward() {
        MrpReward::Transition(r) => r,
        MrpReward::State(_) => {
            return Err(Error::Precondition(
                "chain already has a state reward; no transformation needed".into(),
            ))
        }
    };
    if mrp.horizon() < 2 {
        return Err(Error::Precondition(format!(
            "transformation needs a horizon of at least 2, got {}",
            mrp.horizon()
        )));
    }
    let n = mrp.num_states();
    let p = mrp.kernel();

    // Pairs reachable from the initial pairs; everything else is pruned.
    let mut id = vec![vec![None::<usize>; n]; n];
    let mut pairs = Vec::new();
    let mut queue = VecDeque::new();
    for (x, w) in mrp.mu0().iter().enumerate() {
        if w.is_zero() {
            continue;
        }
        for (y, _) in mrp.successors(x) {
            if id[x][y].is_none() {
                id[x][y] = Some(0);
                pairs.push((x, y));
                queue.push_back((x, y));
            }
        }
    }
    while let Some((_, y)) = queue.pop_front() {
        for (z, _) in mrp.successors(y) {
            if id[y][z].is_none() {
                id[y][z] = Some(0);
                pairs.push((y, z));
                queue.push_back((y, z));
            }
        }
    }
    pairs.sort_unstable();
    for (i, &(x, y)) in pairs.iter().enumerate() {
        id[x][y] = Some(i);
    }

    let m = pairs.len();
    let mut kernel = vec![vec![Rational::zero(); m]; m];
    for (i, &(_, y)) in pairs.iter().enumerate() {
        for (z, pz) in mrp.successors(y) {
            let j = id[y][z].expect("successor pairs of kept pairs are kept");
            kernel[i][j] = pz.clone();
        }
    }
    let names = pairs
        .iter()
        .map(|&(x, y)| format!("{}->{}", mrp.state_names()[x], mrp.state_names()[y]))
        .collect();
    let rewards = pairs.iter().map(|&(x, y)| reward[x][y].clone()).collect();
    let mu0 = pairs
        .iter()
        .map(|&(x, y)| &mrp.mu0()[x] * &p[x][y])
        .collect();
    let salvage = mrp
        .salvage()
        .map(|v| pairs.iter().map(|&(_, y)| v[y].clone()).collect());
    Ok(TransformedMrp {
        horizon: mrp.horizon() - 1,
        pairs,
        names,
        reward: rewards,
        kernel,
        mu0,
        salvage,
    })
}

/// Transforms and attaches `v((x, y)) = v(y)` for the given salvage.
pub fn transformed_salvage(
    mrp: &MarkovRewardProcess,
    salvage: &[Rational],
) -> Result<TransformedMrp> {
    let mut out = transform(&mrp.without_salvage())?;
    if salvage.len() != mrp.num_states() {
        return Err(Error::InvalidModel(format!(
            "salvage must have {} entries",
            mrp.num_states()
        )));
    }
    out.salvage = Some(out.pairs.iter().map(|&(_, y)| salvage[y].clone()).collect());
    Ok(out)
}

impl TransformedMrp {
    /// `N - 1` for an original horizon `N`.
    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn num_states(&self) -> usize {
        self.pairs.len()
    }

    pub fn pairs(&self) -> &[(usize, usize)] {
        &self.pairs
    }

    /// `"x->y"` names.
    pub fn state_names(&self) -> &[String] {
        &self.names
    }

    pub fn reward(&self) -> &[Rational] {
        &self.reward
    }

    pub fn kernel(&self) -> &[Vec<Rational>] {
        &self.kernel
    }

    pub fn mu0(&self) -> &[Rational] {
        &self.mu0
    }

    pub fn salvage(&self) -> Option<&[Rational]> {
        self.salvage.as_deref()
    }

    pub fn position(&self, x: usize, y: usize) -> Option<usize> {
        self.pairs.binary_search(&(x, y)).ok()
    }

    /// `xi((x, y)) = xi(x) P(x, y)` lifted onto the kept pairs.
    pub fn lift_stationary(&self, xi: &[f64], original_kernel: &[Vec<f64>]) -> Vec<f64> {
        self.pairs
            .iter()
            .map(|&(x, y)| xi[x] * original_kernel[x][y])
            .collect()
    }

    /// Exact distribution of `sum_{t=0}^{N-1} r(X_t) + v(X_{N-1})` over the
    /// transformed chain.
    pub fn exact_distribution(&self, budget: PathBudget) -> Result<StepCdf> {
        let starts = self.mu0.iter().filter(|p| !p.is_zero()).count();
        let degree = self
            .kernel
            .iter()
            .map(|row| row.iter().filter(|p| !p.is_zero()).count())
            .max()
            .unwrap_or(0);
        budget.check(starts, degree, self.horizon)?;

        fn walk(
            m: &TransformedMrp,
            t: usize,
            i: usize,
            cum: Rational,
            mass: Rational,
            acc: &mut Vec<(Rational, Rational)>,
        ) {
            let cum = cum + &m.reward[i];
            if t == m.horizon {
                let total = match &m.salvage {
                    Some(v) => cum + &v[i],
                    None => cum,
                };
                acc.push((total, mass));
                return;
            }
            for (j, p) in m.kernel[i].iter().enumerate() {
                if !p.is_zero() {
                    walk(m, t + 1, j, cum.clone(), &mass * p, acc);
                }
            }
        }

        let mut acc = Vec::new();
        for (i, p) in self.mu0.iter().enumerate() {
            if !p.is_zero() {
                walk(self, 0, i, Rational::zero(), p.clone(), &mut acc);
            }
        }
        StepCdf::from_masses(acc)
    }

    /// The same process as an ordinary state-rewarded chain with horizon
    /// `N`: rewards on `X_0..X_{N-1}`, salvage read off the first coordinate
    /// of `X_N`, which is the original `X_N`.
    pub fn to_state_mrp(&self) -> Result<MarkovRewardProcess> {
        // Pair (a, b) at epoch N stands for original X_N = a, whose salvage
        // v(a) is stored on every kept pair ending in a. A pair whose first
        // coordinate is never entered cannot occur at epoch N >= 1.
        let salvage = self.salvage.as_ref().map(|v| {
            self.pairs
                .iter()
                .map(|&(a, _)| {
                    self.pairs
                        .iter()
                        .position(|&(_, y)| y == a)
                        .map(|i| v[i].clone())
                        .unwrap_or_else(Rational::zero)
                })
                .collect()
        });
        MarkovRewardProcess::new(
            self.horizon + 1,
            self.names.clone(),
            self.kernel.clone(),
            MrpReward::State(self.reward.clone()),
            self.mu0.clone(),
            salvage,
        )
    }
}
