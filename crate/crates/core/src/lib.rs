//! Value-at-Risk criteria for finite-state Markov decision processes.
//!
//! Short horizons are solved exactly over rationals: expected-reward
//! backward induction, exact total-reward distributions, the
//! augmented-state 0-1 MDP for threshold VaR, and exact Pareto fronts of
//! the total-reward CDF set. Long horizons are handled by an Edgeworth
//! expansion of the total-reward CDF of each stationary policy, after
//! rewriting transition-rewarded chains as state-rewarded chains over
//! transition pairs. A seeded Monte Carlo simulator serves as an
//! independent check.

pub mod augmented;
pub mod distribution;
pub mod document;
pub mod edgeworth;
pub mod error;
pub mod inventory;
pub mod mdp;
pub mod montecarlo;
pub mod mrp;
pub mod pareto;
pub mod rational;
pub mod spectral;
pub mod transform;

pub use augmented::{
    build_augmented, solve_threshold_var, AugmentedMdp, AugmentedPolicy, VarSolution,
};
pub use distribution::{mdp_distribution, mrp_distribution, PathBudget, StepCdf};
pub use edgeworth::{estimate_cdf, pareto_front_long, EdgeworthCdf, EdgeworthOptions};
pub use error::{Error, ErrorKind, Result};
pub use inventory::{build_inventory, InventoryParams};
pub use mdp::{
    evaluate_policy, expected_backward_induction, induced_mrp, simplify_reward,
    DeterministicPolicy, FiniteMdp, RewardKind,
};
pub use montecarlo::{ks_distance, simulate, Cdf, EmpiricalCdf};
pub use mrp::{MarkovRewardProcess, MrpReward};
pub use pareto::{pareto_front_exact, EstimatedParetoFront, ExactParetoFront, Threshold};
pub use rational::Rational;
pub use transform::{transform, transformed_salvage, TransformedMrp};
