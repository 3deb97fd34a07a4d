//! Stationary distribution, Poisson equation, asymptotic variance and the
//! third-moment constant of a finite ergodic Markov chain.
//!
//! Geometric ergodicity is checked structurally: the chain must have a
//! single closed communicating class (transient states are allowed) and that
//! class must be aperiodic. On a finite state space this is equivalent to
//! the drift condition with a Lyapunov function.

use nalgebra::{DMatrix, DVector};
use petgraph::algo::tarjan_scc;
use petgraph::graph::DiGraph;

use crate::error::{Error, Result};

/// Tolerance on `||xi P - xi||_inf`.
pub const STATIONARY_TOL: f64 = 1e-12;
/// Tolerance on `||P rhat - rhat + r - zeta||_inf`.
pub const POISSON_TOL: f64 = 1e-10;
/// `sigma^2` values in `[-VARIANCE_CLAMP, 0)` are rounding noise and become 0.
pub const VARIANCE_CLAMP: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChainStructure {
    /// States of the unique closed class, ascending.
    pub recurrent: Vec<usize>,
    pub transient: Vec<usize>,
    pub period: usize,
}

fn name(names: &[String], i: usize) -> String {
    names.get(i).cloned().unwrap_or_else(|| i.to_string())
}

/// Checks for exactly one closed class, and that it is aperiodic.
pub fn check_ergodic(p: &DMatrix<f64>, names: &[String]) -> Result<ChainStructure> {
    let n = p.nrows();
    let mut graph = DiGraph::<usize, ()>::with_capacity(n, n * n);
    let nodes: Vec<_> = (0..n).map(|i| graph.add_node(i)).collect();
    for i in 0..n {
        for j in 0..n {
            if p[(i, j)] > 0.0 {
                graph.add_edge(nodes[i], nodes[j], ());
            }
        }
    }
    let sccs = tarjan_scc(&graph);
    let mut comp = vec![0usize; n];
    for (c, scc) in sccs.iter().enumerate() {
        for node in scc {
            comp[graph[*node]] = c;
        }
    }
    let closed: Vec<Vec<usize>> = sccs
        .iter()
        .enumerate()
        .filter(|(c, scc)| {
            scc.iter().all(|node| {
                let i = graph[*node];
                (0..n).all(|j| p[(i, j)] <= 0.0 || comp[j] == *c)
            })
        })
        .map(|(_, scc)| {
            let mut v: Vec<usize> = scc.iter().map(|node| graph[*node]).collect();
            v.sort_unstable();
            v
        })
        .collect();
    if closed.len() != 1 {
        let listing: Vec<String> = closed
            .iter()
            .map(|c| {
                let names: Vec<String> = c.iter().map(|&i| name(names, i)).collect();
                format!("{{{}}}", names.join(", "))
            })
            .collect();
        return Err(Error::NotErgodic(format!(
            "{} closed communicating classes: {}",
            closed.len(),
            listing.join(" ")
        )));
    }
    let recurrent = closed.into_iter().next().expect("one class");
    let period = class_period(p, &recurrent);
    if period != 1 {
        let names: Vec<String> = recurrent.iter().map(|&i| name(names, i)).collect();
        return Err(Error::NotErgodic(format!(
            "recurrent class {{{}}} has period {period}",
            names.join(", ")
        )));
    }
    let transient = (0..n).filter(|i| !recurrent.contains(i)).collect();
    Ok(ChainStructure {
        recurrent,
        transient,
        period,
    })
}

/// gcd of `level(u) + 1 - level(v)` over edges inside the class, with BFS
/// levels from its first state.
fn class_period(p: &DMatrix<f64>, class: &[usize]) -> usize {
    let n = p.nrows();
    let mut inside = vec![false; n];
    for &i in class {
        inside[i] = true;
    }
    let mut level = vec![usize::MAX; n];
    level[class[0]] = 0;
    let mut queue = std::collections::VecDeque::from([class[0]]);
    let mut g = 0usize;
    while let Some(u) = queue.pop_front() {
        for v in 0..n {
            if !(inside[v] && p[(u, v)] > 0.0) {
                continue;
            }
            if level[v] == usize::MAX {
                level[v] = level[u] + 1;
                queue.push_back(v);
            } else {
                let diff = (level[u] + 1).abs_diff(level[v]);
                g = num_integer::gcd(g, diff);
            }
        }
    }
    g
}

fn inf_norm_vec(v: &DVector<f64>) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Largest absolute row sum.
pub fn inf_norm(m: &DMatrix<f64>) -> f64 {
    (0..m.nrows())
        .map(|i| m.row(i).iter().map(|x| x.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

fn one_norm(m: &DMatrix<f64>) -> f64 {
    inf_norm(&m.transpose())
}

/// `xi` with `xi P = xi`, `sum xi = 1`, via a dense LU solve of the
/// transposed balance equations with one equation replaced by the
/// normalization.
pub fn stationary_distribution(p: &DMatrix<f64>, names: &[String]) -> Result<DVector<f64>> {
    check_ergodic(p, names)?;
    let n = p.nrows();
    let mut a = (DMatrix::identity(n, n) - p).transpose();
    for j in 0..n {
        a[(n - 1, j)] = 1.0;
    }
    let mut b = DVector::zeros(n);
    b[n - 1] = 1.0;
    let lu = a.clone().lu();
    let mut xi = lu.solve(&b).ok_or(Error::Singular {
        context: "stationary distribution",
        condition: f64::INFINITY,
    })?;
    // One step of iterative refinement.
    let res = &b - &a * &xi;
    if let Some(d) = lu.solve(&res) {
        xi += d;
    }
    for v in xi.iter_mut() {
        if *v < 0.0 {
            *v = 0.0;
        }
    }
    let total = xi.sum();
    xi /= total;
    let residual = stationary_residual(p, &xi);
    if residual > STATIONARY_TOL {
        return Err(Error::NoConvergence(format!(
            "stationary residual {residual:e} exceeds {STATIONARY_TOL:e}"
        )));
    }
    Ok(xi)
}

/// `||xi P - xi||_inf`.
pub fn stationary_residual(p: &DMatrix<f64>, xi: &DVector<f64>) -> f64 {
    let lhs = p.transpose() * xi;
    inf_norm_vec(&(lhs - xi))
}

#[derive(Debug, Clone)]
pub struct PoissonSolution {
    /// `zeta = xi . r`.
    pub zeta: f64,
    /// Solution of `P rhat = rhat - r + zeta`, normalized to `xi . rhat = 0`.
    pub rhat: DVector<f64>,
    /// `H = I - P - Xi`, with `Xi` stacking `xi` row-wise.
    pub h: DMatrix<f64>,
    /// Fundamental kernel `Z = H^{-1}`.
    pub z: DMatrix<f64>,
    /// `||H||_1 ||Z||_1`.
    pub condition: f64,
    pub residual: f64,
}

/// Solves the Poisson equation through the fundamental kernel.
pub fn solve_poisson(
    p: &DMatrix<f64>,
    xi: &DVector<f64>,
    r: &DVector<f64>,
) -> Result<PoissonSolution> {
    let n = p.nrows();
    let zeta = xi.dot(r);
    let ones = DVector::from_element(n, 1.0);
    let big_xi = &ones * xi.transpose();
    let h = DMatrix::identity(n, n) - p - big_xi;
    let z = h.clone().lu().try_inverse().ok_or(Error::Singular {
        context: "fundamental kernel I - P - Xi",
        condition: f64::INFINITY,
    })?;
    let condition = one_norm(&h) * one_norm(&z);
    if !condition.is_finite() || condition > 1e14 {
        return Err(Error::Singular {
            context: "fundamental kernel I - P - Xi",
            condition,
        });
    }
    let centered = r - DVector::from_element(n, zeta);
    let mut rhat = &z * &centered;
    for _ in 0..2 {
        let res = &centered - &h * &rhat;
        rhat += &z * res;
    }
    let gauge = xi.dot(&rhat);
    rhat -= DVector::from_element(n, gauge);
    let residual = poisson_residual(p, &rhat, r, zeta);
    if residual > POISSON_TOL {
        return Err(Error::NoConvergence(format!(
            "Poisson residual {residual:e} exceeds {POISSON_TOL:e} (condition {condition:e})"
        )));
    }
    Ok(PoissonSolution {
        zeta,
        rhat,
        h,
        z,
        condition,
        residual,
    })
}

/// `||P rhat - rhat + r - zeta 1||_inf`.
pub fn poisson_residual(p: &DMatrix<f64>, rhat: &DVector<f64>, r: &DVector<f64>, zeta: f64) -> f64 {
    let n = p.nrows();
    inf_norm_vec(&(p * rhat - rhat + r - DVector::from_element(n, zeta)))
}

/// `sigma^2 = sum_x [rhat(x)^2 - (P rhat)(x)^2] xi(x)`.
pub fn asymptotic_variance(
    p: &DMatrix<f64>,
    xi: &DVector<f64>,
    rhat: &DVector<f64>,
) -> Result<f64> {
    let prh = p * rhat;
    let s: f64 = (0..p.nrows())
        .map(|x| (rhat[x] * rhat[x] - prh[x] * prh[x]) * xi[x])
        .sum();
    if s < -VARIANCE_CLAMP {
        return Err(Error::NoConvergence(format!(
            "asymptotic variance came out negative ({s:e})"
        )));
    }
    Ok(s.max(0.0))
}

/// Weighting of the outer sums in the third-moment constant.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum KappaStart {
    /// Stationary start `xi`.
    #[default]
    Stationary,
    /// The chain's initial distribution. The double sum in `kappa_3` then
    /// does not settle as the truncation grows unless `mu0 . r~ = 0`.
    Initial,
}

#[derive(Debug, Clone, Copy)]
pub struct KappaOptions {
    pub start: KappaStart,
    /// Include the negative-lag term `E[r~(X_0) r~(X_i)^2]` in `kappa_2`.
    /// With it, `kappa` is the limit of the third cumulant of the sum over
    /// `N`; without it only positive lags `i = 1..T` enter.
    pub two_sided: bool,
    /// Truncate the lag sums at the first `T` with `||P^T - 1 xi||_inf <= tol`.
    pub mixing_tol: f64,
    pub max_truncation: usize,
    /// Use this `T` instead of the mixing-time rule.
    pub truncation: Option<usize>,
}

impl Default for KappaOptions {
    fn default() -> Self {
        Self {
            start: KappaStart::Stationary,
            two_sided: true,
            mixing_tol: 1e-12,
            max_truncation: 100_000,
            truncation: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KappaTerms {
    pub k1: f64,
    pub k2: f64,
    pub k3: f64,
    pub truncation: usize,
}

impl KappaTerms {
    pub fn total(&self) -> f64 {
        self.k1 + self.k2 + self.k3
    }
}

/// Smallest `T >= 1` with `||P^T - 1 xi||_inf <= tol`.
pub fn mixing_time(p: &DMatrix<f64>, xi: &DVector<f64>, tol: f64, max: usize) -> Result<usize> {
    let n = p.nrows();
    let limit = DVector::from_element(n, 1.0) * xi.transpose();
    let mut power = p.clone();
    let mut prev = f64::NAN;
    for t in 1..=max {
        let dist = inf_norm(&(&power - &limit));
        if dist <= tol {
            return Ok(t);
        }
        if t == max {
            let gap = 1.0 - dist / prev;
            return Err(Error::NoConvergence(format!(
                "||P^T - 1 xi|| = {dist:e} after T = {max} steps (spectral gap estimate {gap:e})"
            )));
        }
        prev = dist;
        power = &power * p;
    }
    unreachable!("loop returns")
}

/// `kappa = kappa_1 + kappa_2 + kappa_3` for the centered reward
/// `r~ = r - zeta`, with
///
/// * `kappa_1 = sum_x w(x) r~(x)^3`
/// * `kappa_2 = 3 sum_{i=1}^T sum_x w(x) [r~(x)^2 (P^i r~)(x) + r~(x) (P^i r~^2)(x)]`,
///   the second addend only when `opts.two_sided`
/// * `kappa_3 = 6 sum_{i,j=1}^T sum_x w(x) r~(x) (P^i (r~ . P^j r~))(x)`
///
/// where `w` is the start distribution chosen by `opts.start`.
pub fn kappa(
    p: &DMatrix<f64>,
    xi: &DVector<f64>,
    r: &DVector<f64>,
    mu0: &DVector<f64>,
    opts: &KappaOptions,
) -> Result<KappaTerms> {
    let n = p.nrows();
    let zeta = xi.dot(r);
    let rt = r - DVector::from_element(n, zeta);
    let w = match opts.start {
        KappaStart::Stationary => xi.clone(),
        KappaStart::Initial => mu0.clone(),
    };
    let t_max = match opts.truncation {
        Some(t) => t,
        None => mixing_time(p, xi, opts.mixing_tol, opts.max_truncation)?,
    };

    let rt2 = rt.component_mul(&rt);
    let k1 = w.dot(&rt2.component_mul(&rt));
    let w_rt = w.component_mul(&rt);
    let w_rt2 = w.component_mul(&rt2);

    let mut u = rt.clone();
    let mut v = rt2.clone();
    let mut s = DVector::zeros(n);
    let mut k2 = 0.0;
    for _ in 1..=t_max {
        u = p * &u;
        s += &u;
        k2 += w_rt2.dot(&u);
        if opts.two_sided {
            v = p * &v;
            k2 += w_rt.dot(&v);
        }
    }
    k2 *= 3.0;

    let mut q = rt.component_mul(&s);
    let mut k3 = 0.0;
    for _ in 1..=t_max {
        q = p * &q;
        k3 += w_rt.dot(&q);
    }
    k3 *= 6.0;

    Ok(KappaTerms {
        k1,
        k2,
        k3,
        truncation: t_max,
    })
}

/// Everything the Edgeworth estimate needs, plus diagnostics.
#[derive(Debug, Clone)]
pub struct ChainSpectralData {
    pub structure: ChainStructure,
    pub xi: DVector<f64>,
    pub zeta: f64,
    pub rhat: DVector<f64>,
    pub sigma2: f64,
    pub kappa: KappaTerms,
    pub h: DMatrix<f64>,
    pub z: DMatrix<f64>,
    pub condition: f64,
    pub stationary_residual: f64,
    pub poisson_residual: f64,
}

pub fn analyze_chain(
    p: &DMatrix<f64>,
    r: &DVector<f64>,
    mu0: &DVector<f64>,
    names: &[String],
    opts: &KappaOptions,
) -> Result<ChainSpectralData> {
    let structure = check_ergodic(p, names)?;
    let xi = stationary_distribution(p, names)?;
    let poisson = solve_poisson(p, &xi, r)?;
    let sigma2 = asymptotic_variance(p, &xi, &poisson.rhat)?;
    let kappa = kappa(p, &xi, r, mu0, opts)?;
    Ok(ChainSpectralData {
        structure,
        stationary_residual: stationary_residual(p, &xi),
        xi,
        zeta: poisson.zeta,
        rhat: poisson.rhat,
        sigma2,
        kappa,
        h: poisson.h,
        z: poisson.z,
        condition: poisson.condition,
        poisson_residual: poisson.residual,
    })
}
