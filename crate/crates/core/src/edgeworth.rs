//! Edgeworth-expansion estimate of the total-reward CDF over a long horizon,
//! and the estimated Pareto front over stationary policies.

use std::f64::consts::{PI, SQRT_2};

use log::warn;
use nalgebra::{DMatrix, DVector};
use num_traits::Zero;
use rayon::prelude::*;
use serde::Serialize;
use statrs::function::erf::erfc;

use crate::error::{Error, Result};
use crate::mdp::{induced_mrp, FiniteMdp};
use crate::mrp::{MarkovRewardProcess, MrpReward};
use crate::pareto::EstimatedParetoFront;
use crate::rational;
use crate::spectral::{analyze_chain, ChainSpectralData, KappaOptions};
use crate::transform::transform;

/// Standard normal CDF.
pub fn normal_cdf(y: f64) -> f64 {
    0.5 * erfc(-y / SQRT_2)
}

/// Standard normal density.
pub fn normal_pdf(y: f64) -> f64 {
    (-0.5 * y * y).exp() / (2.0 * PI).sqrt()
}

/// `F(tau) = g(y) + gamma(y) / (sigma sqrt N) [kappa / (6 sigma^2) (1 - y^2) - rhat_start]`
/// with `y = (tau - N zeta) / (sigma sqrt N)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EdgeworthCdf {
    pub horizon: usize,
    pub zeta: f64,
    pub sigma2: f64,
    pub kappa: f64,
    pub rhat_start: f64,
}

impl EdgeworthCdf {
    pub fn scale(&self) -> f64 {
        (self.sigma2 * self.horizon as f64).sqrt()
    }

    pub fn standardize(&self, tau: f64) -> f64 {
        (tau - self.horizon as f64 * self.zeta) / self.scale()
    }

    pub fn eval(&self, tau: f64) -> f64 {
        let y = self.standardize(tau);
        let correction = self.kappa / (6.0 * self.sigma2) * (1.0 - y * y) - self.rhat_start;
        normal_cdf(y) + normal_pdf(y) / self.scale() * correction
    }

    /// The leading normal term alone.
    pub fn normal_approx(&self, tau: f64) -> f64 {
        normal_cdf(self.standardize(tau))
    }

    /// `sup_tau |F - normal|`, attained where `d/dy [gamma(y) c(y)] = 0`;
    /// evaluated on a fine grid in `y` over `[-8, 8]`.
    pub fn correction_sup(&self) -> f64 {
        let c0 = self.kappa / (6.0 * self.sigma2);
        (0..=16_000)
            .map(|i| -8.0 + i as f64 * 1e-3)
            .map(|y| (normal_pdf(y) / self.scale() * (c0 * (1.0 - y * y) - self.rhat_start)).abs())
            .fold(0.0, f64::max)
    }

    pub fn on_grid(&self, grid: &[f64]) -> Vec<f64> {
        grid.iter().map(|&t| self.eval(t)).collect()
    }
}

#[derive(Debug, Clone, Copy)]
pub struct EdgeworthOptions {
    pub kappa: KappaOptions,
    /// Compute on `(r - zeta) / max|r - zeta|`, which lies in `[-1, 1]`, and
    /// map the results back. The reported CDF is unchanged up to rounding.
    pub rescale: bool,
    /// Upper bound on stationary policies examined by the front.
    pub max_policies: u128,
}

impl Default for EdgeworthOptions {
    fn default() -> Self {
        Self {
            kappa: KappaOptions::default(),
            rescale: true,
            max_policies: 100_000,
        }
    }
}

/// An estimate together with the chain quantities behind it.
#[derive(Debug, Clone)]
pub struct CdfEstimate {
    pub cdf: EdgeworthCdf,
    /// Quantities of the reachable part of the chain, in the units of the
    /// original reward.
    pub spectral: ChainSpectralData,
    /// Indices into the input chain of the states analysed.
    pub states: Vec<usize>,
}

/// States reachable from the support of `mu0`, ascending.
fn reachable(mrp: &MarkovRewardProcess) -> Vec<usize> {
    let n = mrp.num_states();
    let mut seen = vec![false; n];
    let mut stack: Vec<usize> = (0..n).filter(|&x| !mrp.mu0()[x].is_zero()).collect();
    for &x in &stack {
        seen[x] = true;
    }
    while let Some(x) = stack.pop() {
        for (y, _) in mrp.successors(x) {
            if !seen[y] {
                seen[y] = true;
                stack.push(y);
            }
        }
    }
    (0..n).filter(|&x| seen[x]).collect()
}

/// Edgeworth estimate of the CDF of `sum_{t<N} r(X_t)` for a state-rewarded
/// chain, analysed on the states reachable from its start. Salvage is not
/// part of the estimate.
pub fn estimate_cdf(
    mrp: &MarkovRewardProcess,
    horizon: usize,
    opts: &EdgeworthOptions,
) -> Result<CdfEstimate> {
    let reward = match mrp.reward() {
        MrpReward::State(r) => r,
        MrpReward::Transition(_) => {
            return Err(Error::Precondition(
                "the Edgeworth estimate needs a state reward; transform the chain first".into(),
            ))
        }
    };
    if horizon == 0 {
        return Err(Error::Precondition("horizon must be at least 1".into()));
    }
    let states = reachable(mrp);
    let m = states.len();
    let kernel = mrp.kernel();
    let p = DMatrix::from_fn(m, m, |i, j| rational::to_f64(&kernel[states[i]][states[j]]));
    let r = DVector::from_fn(m, |i, _| rational::to_f64(&reward[states[i]]));
    let mu0 = DVector::from_fn(m, |i, _| rational::to_f64(&mrp.mu0()[states[i]]));
    let names: Vec<String> = states
        .iter()
        .map(|&x| mrp.state_names()[x].clone())
        .collect();

    let spectral = if opts.rescale {
        // Centre with the exact-data stationary mean, then scale into [-1, 1].
        let xi = crate::spectral::stationary_distribution(&p, &names)?;
        let zeta = xi.dot(&r);
        let centered = r.add_scalar(-zeta);
        let s = centered.amax();
        if s == 0.0 {
            return Err(Error::DegenerateVariance { sigma2: 0.0 });
        }
        let mut d = analyze_chain(&p, &(centered / s), &mu0, &names, &opts.kappa)?;
        d.zeta = zeta;
        d.rhat *= s;
        d.sigma2 *= s * s;
        d.kappa.k1 *= s * s * s;
        d.kappa.k2 *= s * s * s;
        d.kappa.k3 *= s * s * s;
        d
    } else {
        analyze_chain(&p, &r, &mu0, &names, &opts.kappa)?
    };

    let scale2 = r.amax().max(1.0).powi(2);
    if spectral.sigma2 <= 1e-12 * scale2 {
        return Err(Error::DegenerateVariance {
            sigma2: spectral.sigma2,
        });
    }
    let cdf = EdgeworthCdf {
        horizon,
        zeta: spectral.zeta,
        sigma2: spectral.sigma2,
        kappa: spectral.kappa.total(),
        rhat_start: mu0.dot(&spectral.rhat),
    };
    Ok(CdfEstimate {
        cdf,
        spectral,
        states,
    })
}

/// The state-rewarded chain whose estimate stands for policy-induced chain
/// `mrp`: transition-rewarded chains go through the pair transformation.
/// Salvage is dropped.
pub fn state_rewarded(mrp: &MarkovRewardProcess) -> Result<MarkovRewardProcess> {
    let mrp = mrp.without_salvage();
    if mrp.is_transition_rewarded() {
        let base = if mrp.horizon() < 2 {
            mrp.with_horizon(2)?
        } else {
            mrp
        };
        transform(&base)?.to_state_mrp()
    } else {
        Ok(mrp)
    }
}

/// Outcome of one stationary policy in the long-horizon front.
#[derive(Debug, Clone)]
pub enum PolicyOutcome {
    Estimated(EdgeworthCdf),
    /// Excluded, with the reason.
    Skipped(String),
}

#[derive(Debug, Clone)]
pub struct LongHorizonFront {
    pub front: EstimatedParetoFront,
    /// Indexed by stationary policy id.
    pub policies: Vec<PolicyOutcome>,
}

impl LongHorizonFront {
    pub fn skipped(&self) -> impl Iterator<Item = (usize, &str)> {
        self.policies
            .iter()
            .enumerate()
            .filter_map(|(i, p)| match p {
                PolicyOutcome::Skipped(why) => Some((i, why.as_str())),
                PolicyOutcome::Estimated(_) => None,
            })
    }
}

/// Clamp to `[0, 1]` and take the running maximum so that the curve is a
/// valid CDF on the grid.
pub fn monotone_envelope(values: &mut [f64]) {
    let mut best = 0.0f64;
    for v in values.iter_mut() {
        best = best.max(v.clamp(0.0, 1.0));
        *v = best;
    }
}

/// Pointwise-minimum front over the Edgeworth estimates of all stationary
/// policies at horizon `horizon`. Chains that are not ergodic or have zero
/// asymptotic variance are skipped with a warning.
pub fn pareto_front_long(
    mdp: &FiniteMdp,
    horizon: usize,
    grid: Vec<f64>,
    opts: &EdgeworthOptions,
) -> Result<LongHorizonFront> {
    let policies = estimate_policies(mdp, horizon, opts)?;
    front_on_grid(mdp, grid, policies)
}

/// Edgeworth estimate for every stationary policy, indexed by policy id.
pub fn estimate_policies(
    mdp: &FiniteMdp,
    horizon: usize,
    opts: &EdgeworthOptions,
) -> Result<Vec<PolicyOutcome>> {
    let count = mdp.stationary_policy_count();
    if count > opts.max_policies {
        return Err(Error::BudgetExceeded {
            what: "stationary policy count",
            count,
            limit: opts.max_policies,
            hint: "",
        });
    }
    let outcomes: Vec<Result<PolicyOutcome>> = (0..count as usize)
        .into_par_iter()
        .map(|id| {
            let policy = mdp.stationary_policy(id as u128);
            let chain = state_rewarded(&induced_mrp(mdp, &policy)?)?;
            match estimate_cdf(&chain, horizon, opts) {
                Ok(e) => Ok(PolicyOutcome::Estimated(e.cdf)),
                Err(e @ (Error::NotErgodic(_) | Error::DegenerateVariance { .. })) => {
                    let label = mdp.describe_rule(policy.rules()[0]);
                    warn!("skipping policy {id} ({label}): {e}");
                    Ok(PolicyOutcome::Skipped(e.to_string()))
                }
                Err(e) => Err(e),
            }
        })
        .collect();
    outcomes.into_iter().collect()
}

/// Front of already estimated policies on `grid`, each curve first passed
/// through [`monotone_envelope`].
pub fn front_on_grid(
    mdp: &FiniteMdp,
    grid: Vec<f64>,
    policies: Vec<PolicyOutcome>,
) -> Result<LongHorizonFront> {
    let curves: Vec<(usize, Vec<f64>)> = policies
        .iter()
        .enumerate()
        .filter_map(|(id, p)| match p {
            PolicyOutcome::Estimated(cdf) => {
                let mut v = cdf.on_grid(&grid);
                monotone_envelope(&mut v);
                Some((id, v))
            }
            PolicyOutcome::Skipped(_) => None,
        })
        .collect();
    let labels = (0..policies.len() as u128)
        .map(|id| mdp.describe_rule(mdp.stationary_policy(id).rules()[0]))
        .collect();
    let front = EstimatedParetoFront::from_curves(grid, &curves, labels)?;
    Ok(LongHorizonFront { front, policies })
}

impl PolicyOutcome {
    pub fn estimate(&self) -> Option<&EdgeworthCdf> {
        match self {
            PolicyOutcome::Estimated(c) => Some(c),
            PolicyOutcome::Skipped(_) => None,
        }
    }
}

/// A grid of `steps` evenly spaced points covering `mean +- width` standard
/// deviations of every estimated policy CDF.
pub fn auto_grid(cdfs: &[EdgeworthCdf], width: f64, steps: usize) -> Vec<f64> {
    let lo = cdfs
        .iter()
        .map(|c| c.horizon as f64 * c.zeta - width * c.scale())
        .fold(f64::INFINITY, f64::min);
    let hi = cdfs
        .iter()
        .map(|c| c.horizon as f64 * c.zeta + width * c.scale())
        .fold(f64::NEG_INFINITY, f64::max);
    linspace(lo, hi, steps)
}

/// `steps` evenly spaced points from `lo` to `hi` inclusive.
pub fn linspace(lo: f64, hi: f64, steps: usize) -> Vec<f64> {
    match steps {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..steps)
            .map(|i| lo + (hi - lo) * i as f64 / (steps - 1) as f64)
            .collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{int, ratio};

    fn two_state(reward: [i64; 2]) -> MarkovRewardProcess {
        MarkovRewardProcess::new(
            10,
            vec!["a".into(), "b".into()],
            vec![
                vec![ratio(3, 10), ratio(7, 10)],
                vec![ratio(6, 10), ratio(4, 10)],
            ],
            MrpReward::State(vec![int(reward[0]), int(reward[1])]),
            vec![int(1), int(0)],
            None,
        )
        .unwrap()
    }

    #[test]
    fn normal_helpers() {
        assert!((normal_cdf(0.0) - 0.5).abs() < 1e-16);
        let v = normal_cdf(1.959963984540054);
        assert!((v - 0.975).abs() < 1e-11, "{v}");
        assert!((normal_pdf(0.0) - 0.3989422804014327).abs() < 1e-15);
    }

    #[test]
    fn zero_correction_is_normal() {
        let c = EdgeworthCdf {
            horizon: 100,
            zeta: 1.0,
            sigma2: 4.0,
            kappa: 0.0,
            rhat_start: 0.0,
        };
        for tau in [50.0, 100.0, 130.0] {
            assert_eq!(c.eval(tau), normal_cdf((tau - 100.0) / 20.0));
        }
    }

    #[test]
    fn rescaling_is_invisible() {
        let m = two_state([3, -2]);
        let a = estimate_cdf(&m, 200, &EdgeworthOptions::default())
            .unwrap()
            .cdf;
        let b = estimate_cdf(
            &m,
            200,
            &EdgeworthOptions {
                rescale: false,
                ..Default::default()
            },
        )
        .unwrap()
        .cdf;
        for tau in [-50.0, 0.0, 40.0, 90.0] {
            assert!((a.eval(tau) - b.eval(tau)).abs() < 1e-12);
        }
    }

    #[test]
    fn transition_reward_is_rejected() {
        let m = two_state([1, 0])
            .with_reward(MrpReward::Transition(vec![vec![int(0); 2]; 2]))
            .unwrap();
        assert!(matches!(
            estimate_cdf(&m, 10, &EdgeworthOptions::default()),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn constant_reward_is_degenerate() {
        let m = two_state([2, 2]);
        assert!(matches!(
            estimate_cdf(&m, 10, &EdgeworthOptions::default()),
            Err(Error::DegenerateVariance { .. })
        ));
    }

    #[test]
    fn envelope_is_monotone_and_clamped() {
        let mut v = vec![-0.01, 0.2, 0.15, 0.7, 1.02, 0.99];
        monotone_envelope(&mut v);
        assert_eq!(v, vec![0.0, 0.2, 0.2, 0.7, 1.0, 1.0]);
    }

    #[test]
    fn linspace_endpoints() {
        let g = linspace(-1.0, 1.0, 5);
        assert_eq!(g, vec![-1.0, -0.5, 0.0, 0.5, 1.0]);
    }
}
