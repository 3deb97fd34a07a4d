//! Seeded Monte Carlo simulation of total rewards and CDF distances.
//!
//! Sample `i` draws from a ChaCha8 stream seeded with the run seed and
//! positioned at stream `i`, so results do not depend on thread count or
//! scheduling.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::distribution::StepCdf;
use crate::edgeworth::EdgeworthCdf;
use crate::error::{Error, Result};
use crate::mrp::MarkovRewardProcess;
use crate::pareto::EstimatedParetoFront;
use crate::rational;

/// Anything that can be evaluated as `P(Phi <= tau)`.
pub trait Cdf {
    fn cdf(&self, tau: f64) -> f64;
}

impl Cdf for StepCdf {
    fn cdf(&self, tau: f64) -> f64 {
        self.cdf_f64(tau)
    }
}

impl Cdf for EdgeworthCdf {
    fn cdf(&self, tau: f64) -> f64 {
        self.eval(tau)
    }
}

impl Cdf for EstimatedParetoFront {
    fn cdf(&self, tau: f64) -> f64 {
        self.eval(tau)
    }
}

impl<F: Fn(f64) -> f64> Cdf for F {
    fn cdf(&self, tau: f64) -> f64 {
        self(tau)
    }
}

/// Empirical CDF of a sorted sample.
#[derive(Debug, Clone)]
pub struct EmpiricalCdf {
    samples: Vec<f64>,
    seed: u64,
}

impl EmpiricalCdf {
    pub fn from_samples(mut samples: Vec<f64>, seed: u64) -> Self {
        samples.sort_by(f64::total_cmp);
        Self { samples, seed }
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Fraction of samples `<= tau`.
    pub fn eval(&self, tau: f64) -> f64 {
        self.samples.partition_point(|&s| s <= tau) as f64 / self.samples.len() as f64
    }

    /// Fraction of samples `< tau`.
    pub fn eval_below(&self, tau: f64) -> f64 {
        self.samples.partition_point(|&s| s < tau) as f64 / self.samples.len() as f64
    }

    /// Smallest sample `s` with `eval(s) >= q`.
    pub fn quantile(&self, q: f64) -> f64 {
        let n = self.samples.len();
        let k = ((q * n as f64).ceil() as usize).clamp(1, n);
        self.samples[k - 1]
    }

    /// Distinct sample values, ascending.
    pub fn atoms(&self) -> Vec<f64> {
        let mut v = self.samples.clone();
        v.dedup();
        v
    }

    /// Exact `sup_tau |F_n(tau) - G(tau)|` for a continuous `G`: both
    /// one-sided limits at every atom.
    pub fn sup_distance_continuous(&self, other: &dyn Cdf) -> f64 {
        let n = self.samples.len() as f64;
        let mut best = 0.0f64;
        let mut i = 0;
        while i < self.samples.len() {
            let x = self.samples[i];
            let j = i + self.samples[i..].partition_point(|&s| s == x);
            let g = other.cdf(x);
            best = best
                .max((i as f64 / n - g).abs())
                .max((j as f64 / n - g).abs());
            i = j;
        }
        best
    }
}

impl Cdf for EmpiricalCdf {
    fn cdf(&self, tau: f64) -> f64 {
        self.eval(tau)
    }
}

/// Simulates `samples` trajectories of `sum_{t<N} r + v(X_N)` (salvage only
/// if the chain carries one).
pub fn simulate(
    mrp: &MarkovRewardProcess,
    horizon: usize,
    samples: usize,
    seed: u64,
) -> Result<EmpiricalCdf> {
    if samples == 0 {
        return Err(Error::Precondition("need at least one sample".into()));
    }
    let n = mrp.num_states();
    // Per state: successor indices, cumulative probabilities, step rewards.
    let rows: Vec<(Vec<usize>, Vec<f64>, Vec<f64>)> = (0..n)
        .map(|x| {
            let mut next = Vec::new();
            let mut cum = Vec::new();
            let mut rew = Vec::new();
            let mut acc = 0.0;
            for (y, p) in mrp.successors(x) {
                acc += rational::to_f64(p);
                next.push(y);
                cum.push(acc);
                rew.push(rational::to_f64(mrp.step_reward(x, y)));
            }
            (next, cum, rew)
        })
        .collect();
    let mut start_next = Vec::new();
    let mut start_cum = Vec::new();
    let mut acc = 0.0;
    for (x, p) in mrp.mu0().iter().enumerate() {
        let p = rational::to_f64(p);
        if p > 0.0 {
            acc += p;
            start_next.push(x);
            start_cum.push(acc);
        }
    }
    let salvage: Option<Vec<f64>> = mrp
        .salvage()
        .map(|v| v.iter().map(rational::to_f64).collect());

    fn pick(cum: &[f64], u: f64) -> usize {
        cum.partition_point(|&c| c <= u).min(cum.len() - 1)
    }

    let base = ChaCha8Rng::seed_from_u64(seed);
    let values: Vec<f64> = (0..samples)
        .into_par_iter()
        .map(|i| {
            let mut rng = base.clone();
            rng.set_stream(i as u64);
            let mut x = start_next[pick(&start_cum, rng.random::<f64>())];
            let mut total = 0.0;
            for _ in 0..horizon {
                let (next, cum, rew) = &rows[x];
                let k = pick(cum, rng.random::<f64>());
                total += rew[k];
                x = next[k];
            }
            if let Some(v) = &salvage {
                total += v[x];
            }
            total
        })
        .collect();
    Ok(EmpiricalCdf::from_samples(values, seed))
}

/// `max_{tau in grid} |A(tau) - B(tau)|`.
pub fn ks_distance(a: &dyn Cdf, b: &dyn Cdf, grid: &[f64]) -> Result<f64> {
    if grid.is_empty() {
        return Err(Error::Precondition("distance grid is empty".into()));
    }
    Ok(grid
        .iter()
        .map(|&t| (a.cdf(t) - b.cdf(t)).abs())
        .fold(0.0, f64::max))
}

/// Exact sup distance between two step CDFs: both are constant between
/// their atoms, so the union of atoms is enough.
pub fn step_distance(empirical: &EmpiricalCdf, exact: &StepCdf) -> f64 {
    let mut grid = empirical.atoms();
    grid.extend(exact.support().iter().map(rational::to_f64));
    grid.iter()
        .map(|&t| (empirical.eval(t) - exact.cdf_f64(t)).abs())
        .fold(0.0, f64::max)
}

/// Exact sup distance between two empirical CDFs.
pub fn empirical_distance(a: &EmpiricalCdf, b: &EmpiricalCdf) -> f64 {
    a.samples()
        .iter()
        .chain(b.samples())
        .map(|&t| (a.eval(t) - b.eval(t)).abs())
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mrp::MrpReward;
    use crate::rational::{int, ratio};

    fn coin() -> MarkovRewardProcess {
        MarkovRewardProcess::new(
            4,
            vec!["h".into(), "t".into()],
            vec![vec![ratio(1, 2), ratio(1, 2)]; 2],
            MrpReward::State(vec![int(1), int(0)]),
            vec![ratio(1, 2), ratio(1, 2)],
            None,
        )
        .unwrap()
    }

    #[test]
    fn deterministic_for_fixed_seed() {
        let a = simulate(&coin(), 4, 1000, 7).unwrap();
        let b = simulate(&coin(), 4, 1000, 7).unwrap();
        assert_eq!(a.samples(), b.samples());
        let c = simulate(&coin(), 4, 1000, 8).unwrap();
        assert_ne!(a.samples(), c.samples());
    }

    #[test]
    fn quantiles_and_eval() {
        let e = EmpiricalCdf::from_samples(vec![3.0, 1.0, 2.0, 2.0], 0);
        assert_eq!(e.eval(2.0), 0.75);
        assert_eq!(e.eval_below(2.0), 0.25);
        assert_eq!(e.quantile(0.5), 2.0);
        assert_eq!(e.quantile(1.0), 3.0);
        assert_eq!(e.quantile(0.0), 1.0);
    }

    #[test]
    fn binomial_close_to_exact() {
        let m = coin();
        let exact = crate::distribution::mrp_distribution(&m, Default::default()).unwrap();
        let e = simulate(&m, 4, 200_000, 1).unwrap();
        assert!(step_distance(&e, &exact) < 0.01);
    }

    #[test]
    fn continuous_distance_checks_both_sides() {
        let e = EmpiricalCdf::from_samples(vec![0.5], 0);
        let uniform = |t: f64| t.clamp(0.0, 1.0);
        assert!((e.sup_distance_continuous(&uniform) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn empty_grid_is_an_error() {
        let e = EmpiricalCdf::from_samples(vec![0.0], 0);
        assert!(ks_distance(&e, &e, &[]).is_err());
    }
}
