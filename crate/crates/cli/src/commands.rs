use std::io::Read;
use std::path::Path;

use serde_json::{json, Value};
use varmdp::document::{parse_any, AnyDocument, MdpDocument, MrpDocument};
use varmdp::edgeworth::{
    auto_grid, estimate_policies, front_on_grid, linspace, state_rewarded, PolicyOutcome,
};
use varmdp::montecarlo::ks_distance;
use varmdp::pareto::PolicyBudget;
use varmdp::rational::{self, Rational};
use varmdp::spectral::{KappaOptions, KappaStart};
use varmdp::*;

use crate::cdf_file;
use crate::output::{exact, exact_cells, sig12, Cell, Format, Sink, Table};
use crate::{
    Cli, CliError, Command, Grid, Input, KappaArgs, KappaStartArg, PolicyArg, Preset, RewardKindArg,
};

type CmdResult = Result<(), CliError>;

/// Default number of points on an automatic grid.
const AUTO_STEPS: usize = 401;
/// Half-width of an automatic grid, in standard deviations.
const AUTO_WIDTH: f64 = 6.0;

pub fn run(cli: &Cli) -> CmdResult {
    let sink = Sink::from_arg(cli.output.as_deref());
    let format = cli.format;
    match &cli.command {
        Command::GenInventory {
            preset,
            capacity_variant,
            horizon,
            reward_kind,
        } => gen_inventory(&sink, *preset, *capacity_variant, *horizon, *reward_kind),
        Command::SolveExpected { input } => solve_expected(&sink, format, input),
        Command::DistExact { input, policy } => dist_exact(&sink, format, input, policy),
        Command::VarThreshold { input, tau } => var_threshold(&sink, format, input, tau),
        Command::ParetoShort {
            input,
            closed,
            alpha,
            policies,
            max_policies,
        } => pareto_short(
            &sink,
            format,
            input,
            *closed,
            alpha,
            policies.as_deref(),
            *max_policies,
        ),
        Command::Transform { input, policy } => transform_cmd(&sink, input, policy),
        Command::EstimateCdf {
            input,
            policy,
            horizon,
            grid,
            sidecar,
            kappa,
        } => estimate(
            &sink,
            format,
            input,
            policy,
            *horizon,
            *grid,
            sidecar.as_deref(),
            kappa,
        ),
        Command::ParetoLong {
            input,
            horizon,
            grid,
            alpha,
            policies,
            kappa,
        } => pareto_long(
            &sink,
            format,
            input,
            *horizon,
            *grid,
            alpha,
            policies.as_deref(),
            kappa,
        ),
        Command::Simulate {
            input,
            policy,
            n,
            samples,
            seed,
            quantiles,
        } => simulate_cmd(
            &sink, format, input, policy, *n, *samples, *seed, *quantiles,
        ),
        Command::Compare { first, second } => compare(&sink, format, first, second),
    }
}

fn io_err(what: &str, e: impl std::fmt::Display) -> CliError {
    CliError::Io(format!("{what}: {e}"))
}

fn read_text(path: Option<&Path>) -> Result<String, CliError> {
    let mut text = String::new();
    match path {
        Some(p) if p != Path::new("-") => {
            text = std::fs::read_to_string(p).map_err(|e| io_err(&p.display().to_string(), e))?;
        }
        _ => {
            std::io::stdin()
                .read_to_string(&mut text)
                .map_err(|e| io_err("stdin", e))?;
        }
    }
    Ok(text)
}

fn load(input: &Input) -> Result<AnyDocument, CliError> {
    let doc = parse_any(&read_text(input.input.as_deref())?)?;
    match doc {
        AnyDocument::Mdp(m) if input.simplify => Ok(AnyDocument::Mdp(simplify_reward(&m))),
        AnyDocument::Mrp(_) if input.simplify => Err(CliError::Precondition(
            "--simplify applies to MDP documents only".into(),
        )),
        other => Ok(other),
    }
}

fn load_mdp(input: &Input) -> Result<FiniteMdp, CliError> {
    match load(input)? {
        AnyDocument::Mdp(m) => Ok(m),
        AnyDocument::Mrp(_) => Err(CliError::Precondition(
            "this command needs an MDP document (with `reward_kind`), got an MRP document".into(),
        )),
    }
}

fn stationary(mdp: &FiniteMdp, policy: &PolicyArg) -> Result<DeterministicPolicy, CliError> {
    match policy.policy {
        Some(id) => {
            let count = mdp.stationary_policy_count();
            if id >= count {
                return Err(CliError::Precondition(format!(
                    "--policy: id {id} out of range, the instance has {count} stationary policies"
                )));
            }
            Ok(mdp.stationary_policy(id))
        }
        None => {
            let best = expected_backward_induction(mdp);
            let rules = best.policy.rules();
            if rules.windows(2).any(|w| w[0] != w[1]) {
                return Err(CliError::Precondition(
                    "the expected-optimal policy is not stationary; pass --policy".into(),
                ));
            }
            Ok(DeterministicPolicy::Stationary(
                rules.first().map(|r| r.to_vec()).unwrap_or_default(),
            ))
        }
    }
}

/// The chain a document describes, or the chain a stationary policy induces.
fn load_chain(input: &Input, policy: &PolicyArg) -> Result<MarkovRewardProcess, CliError> {
    match load(input)? {
        AnyDocument::Mrp(m) => {
            if policy.policy.is_some() {
                return Err(CliError::Precondition(
                    "--policy applies to MDP documents only".into(),
                ));
            }
            Ok(m)
        }
        AnyDocument::Mdp(m) => Ok(induced_mrp(&m, &stationary(&m, policy)?)?),
    }
}

fn with_newline(mut s: String) -> Vec<u8> {
    if !s.ends_with('\n') {
        s.push('\n');
    }
    s.into_bytes()
}

fn write_table(sink: &Sink, format: Format, table: &Table) -> CmdResult {
    let bytes = table
        .render(format)
        .map_err(|e| io_err("rendering table", e))?;
    sink.write(&bytes).map_err(|e| io_err("writing output", e))
}

fn write_json(path: &Path, value: &Value) -> CmdResult {
    let text = serde_json::to_string_pretty(value).expect("serializable");
    crate::output::write_atomic(path, &with_newline(text))
        .map_err(|e| io_err(&path.display().to_string(), e))
}

/// An estimate as a JSON number with 12 significant digits.
fn est(v: f64) -> Value {
    sig12(v)
        .parse::<f64>()
        .ok()
        .and_then(serde_json::Number::from_f64)
        .map_or(Value::Null, Value::Number)
}

fn rule_lines(mdp: &FiniteMdp, policy: &DeterministicPolicy) -> Vec<String> {
    match policy {
        DeterministicPolicy::Stationary(rule) => {
            vec![format!("all t: {}", mdp.describe_rule(rule))]
        }
        DeterministicPolicy::Markov(rules) => rules
            .iter()
            .enumerate()
            .map(|(t, r)| format!("t={t}: {}", mdp.describe_rule(r)))
            .collect(),
    }
}

fn gen_inventory(
    sink: &Sink,
    preset: Preset,
    capacity_variant: bool,
    horizon: Option<usize>,
    reward_kind: RewardKindArg,
) -> CmdResult {
    let mut params = match preset {
        Preset::PaperShort => InventoryParams::paper_short(),
        Preset::PaperLong => InventoryParams::paper_long(),
    };
    if capacity_variant {
        params = params.capacity_variant();
    }
    if let Some(n) = horizon {
        params.horizon = n;
    }
    let mut mdp = build_inventory(&params)?;
    if reward_kind == RewardKindArg::Sa {
        mdp = simplify_reward(&mdp);
    }
    sink.write(&with_newline(MdpDocument::from_mdp(&mdp).to_json()))
        .map_err(|e| io_err("writing output", e))
}

fn solve_expected(sink: &Sink, format: Format, input: &Input) -> CmdResult {
    let mdp = load_mdp(input)?;
    let sol = expected_backward_induction(&mdp);
    let lines = rule_lines(&mdp, &sol.policy);
    let bytes = match format {
        Format::Csv => {
            let mut s = format!("expected total reward: {}\npolicy:\n", exact(&sol.value));
            for l in &lines {
                s.push_str(&format!("  {l}\n"));
            }
            s.into_bytes()
        }
        Format::Jsonl => with_newline(
            json!({
                "value": rational::format(&sol.value),
                "value_decimal": est(rational::to_f64(&sol.value)),
                "policy": lines,
            })
            .to_string(),
        ),
    };
    sink.write(&bytes).map_err(|e| io_err("writing output", e))
}

fn dist_exact(sink: &Sink, format: Format, input: &Input, policy: &PolicyArg) -> CmdResult {
    let cdf = match load(input)? {
        AnyDocument::Mrp(m) => {
            if policy.policy.is_some() {
                return Err(CliError::Precondition(
                    "--policy applies to MDP documents only".into(),
                ));
            }
            mrp_distribution(&m, PathBudget::default())?
        }
        AnyDocument::Mdp(m) => {
            let p = match policy.policy {
                Some(_) => stationary(&m, policy)?,
                None => expected_backward_induction(&m).policy,
            };
            mdp_distribution(&m, &p, PathBudget::default())?
        }
    };
    let mut table = Table::new(vec![
        "value",
        "value_decimal",
        "prob",
        "prob_decimal",
        "cdf",
        "cdf_decimal",
    ]);
    let mut acc = Rational::from_integer(0.into());
    for (v, p) in cdf.support().iter().zip(cdf.prob()) {
        acc += p;
        let mut row = Vec::with_capacity(6);
        row.extend(exact_cells(v));
        row.extend(exact_cells(p));
        row.extend(exact_cells(&acc));
        table.push(row);
    }
    write_table(sink, format, &table)
}

fn var_threshold(sink: &Sink, format: Format, input: &Input, tau: &Rational) -> CmdResult {
    let mdp = load_mdp(input)?;
    let sol = solve_threshold_var(&mdp, tau)?;
    let listing = sol.listing(&mdp);
    let bytes = match format {
        Format::Csv => {
            format!("tau: {}\neta: {}\n{listing}", exact(tau), exact(&sol.eta)).into_bytes()
        }
        Format::Jsonl => with_newline(
            json!({
                "tau": rational::format(tau),
                "eta": rational::format(&sol.eta),
                "eta_decimal": est(rational::to_f64(&sol.eta)),
                "policy": listing.lines().collect::<Vec<_>>(),
            })
            .to_string(),
        ),
    };
    sink.write(&bytes).map_err(|e| io_err("writing output", e))
}

fn threshold_text<T>(t: &Threshold<T>, show: impl Fn(&T) -> String) -> String {
    match t {
        Threshold::Finite(v) => show(v),
        Threshold::PlusInfinity => "+inf".into(),
        Threshold::MinusInfinity => "-inf".into(),
    }
}

fn companion_path(sink: &Sink, explicit: Option<&Path>) -> Option<std::path::PathBuf> {
    explicit
        .map(Path::to_path_buf)
        .or_else(|| sink.companion("policies.json"))
}

fn pareto_short(
    sink: &Sink,
    format: Format,
    input: &Input,
    closed: bool,
    alphas: &[Rational],
    policies: Option<&Path>,
    max_policies: usize,
) -> CmdResult {
    let mdp = load_mdp(input)?;
    let front = pareto_front_exact(&mdp, PolicyBudget { max_policies })?;
    let (values, witnesses) = if closed {
        (&front.value_right, &front.witness_right)
    } else {
        (&front.value, &front.witness)
    };
    let mut table = Table::new(vec![
        "tau",
        "pareto_value",
        "witness_policy_id",
        "tau_exact",
        "pareto_value_exact",
    ]);
    for ((tau, v), &w) in front.grid.iter().zip(values).zip(witnesses) {
        let [tau_r, tau_d] = exact_cells(tau);
        let [v_r, v_d] = exact_cells(v);
        table.push(vec![tau_d, v_d, Cell::Int(w as i128), tau_r, v_r]);
    }
    let rho: Vec<Value> = alphas
        .iter()
        .map(|a| {
            let r = front.query_rho(a)?;
            Ok(json!({"alpha": rational::format(a), "rho": threshold_text(&r, exact)}))
        })
        .collect::<Result<_, varmdp::Error>>()?;
    let mut ids: Vec<usize> = witnesses.clone();
    ids.sort_unstable();
    ids.dedup();
    let listed: Vec<Value> = ids
        .iter()
        .map(|&id| json!({"id": id, "listing": front.policies[id].listing(&mdp).lines().collect::<Vec<_>>()}))
        .collect();
    let companion = json!({
        "schema": varmdp::document::SCHEMA_VERSION,
        "value": if closed { "min P(Phi <= tau)" } else { "min P(Phi < tau)" },
        "policies_enumerated": front.policies.len(),
        "policies": listed,
        "rho": rho,
    });
    write_table(sink, format, &table)?;
    emit_companion(sink, policies, &companion)
}

fn emit_companion(sink: &Sink, explicit: Option<&Path>, value: &Value) -> CmdResult {
    match companion_path(sink, explicit) {
        Some(p) => write_json(&p, value),
        None => {
            log::info!("no companion path (output is stdout and --policies not given); skipping");
            if let Some(rho) = value.get("rho").and_then(Value::as_array) {
                for r in rho {
                    eprintln!("rho: {r}");
                }
            }
            Ok(())
        }
    }
}

fn transform_cmd(sink: &Sink, input: &Input, policy: &PolicyArg) -> CmdResult {
    let chain = load_chain(input, policy)?;
    let pairs = transform(&chain)?.to_state_mrp()?;
    sink.write(&with_newline(MrpDocument::from_mrp(&pairs).to_json()))
        .map_err(|e| io_err("writing output", e))
}

fn edgeworth_options(k: &KappaArgs) -> Result<EdgeworthOptions, CliError> {
    if !(k.mixing_tol > 0.0 && k.mixing_tol < 1.0) {
        return Err(CliError::Precondition(format!(
            "--mixing-tol must lie in (0, 1), got {}",
            k.mixing_tol
        )));
    }
    let mut opts = EdgeworthOptions::default();
    opts.kappa = KappaOptions {
        start: match k.kappa_start {
            KappaStartArg::Stationary => KappaStart::Stationary,
            KappaStartArg::Initial => KappaStart::Initial,
        },
        two_sided: !k.one_sided,
        mixing_tol: k.mixing_tol,
        truncation: k.truncation,
        ..opts.kappa
    };
    Ok(opts)
}

fn grid_points(grid: Option<Grid>, cdfs: &[EdgeworthCdf]) -> Vec<f64> {
    match grid {
        Some(g) => linspace(g.lo, g.hi, g.steps),
        None => auto_grid(cdfs, AUTO_WIDTH, AUTO_STEPS),
    }
}

#[allow(clippy::too_many_arguments)]
fn estimate(
    sink: &Sink,
    format: Format,
    input: &Input,
    policy: &PolicyArg,
    horizon: Option<usize>,
    grid: Option<Grid>,
    sidecar: Option<&Path>,
    kappa: &KappaArgs,
) -> CmdResult {
    let chain = load_chain(input, policy)?;
    let n = horizon.unwrap_or(chain.horizon());
    let chain = state_rewarded(&chain)?;
    let e = estimate_cdf(&chain, n, &edgeworth_options(kappa)?)?;
    let c = e.cdf;
    let mut table = Table::new(vec!["tau", "F"]);
    for t in grid_points(grid, &[c]) {
        table.push(vec![Cell::estimate(t), Cell::estimate(c.eval(t))]);
    }
    let s = &e.spectral;
    let side = json!({
        "schema": varmdp::document::SCHEMA_VERSION,
        "horizon": n,
        "states": e.states.iter().map(|&i| chain.state_names()[i].clone()).collect::<Vec<_>>(),
        "transient_states": s.structure.transient.len(),
        "zeta": est(c.zeta),
        "sigma2": est(c.sigma2),
        "kappa": est(c.kappa),
        "kappa_terms": {"k1": est(s.kappa.k1), "k2": est(s.kappa.k2), "k3": est(s.kappa.k3), "truncation": s.kappa.truncation},
        "rhat_start": est(c.rhat_start),
        "condition_number": est(s.condition),
        "stationary_residual": est(s.stationary_residual),
        "poisson_residual": est(s.poisson_residual),
    });
    write_table(sink, format, &table)?;
    match sidecar
        .map(Path::to_path_buf)
        .or_else(|| sink.companion("sidecar.json"))
    {
        Some(p) => write_json(&p, &side),
        None => {
            eprintln!(
                "{}",
                serde_json::to_string_pretty(&side).expect("serializable")
            );
            Ok(())
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn pareto_long(
    sink: &Sink,
    format: Format,
    input: &Input,
    horizon: Option<usize>,
    grid: Option<Grid>,
    alphas: &[f64],
    policies: Option<&Path>,
    kappa: &KappaArgs,
) -> CmdResult {
    let mdp = load_mdp(input)?;
    let n = horizon.unwrap_or(mdp.horizon());
    let outcomes = estimate_policies(&mdp, n, &edgeworth_options(kappa)?)?;
    let cdfs: Vec<EdgeworthCdf> = outcomes
        .iter()
        .filter_map(|o| o.estimate().copied())
        .collect();
    if cdfs.is_empty() {
        return Err(varmdp::Error::EmptyFront.into());
    }
    let long = front_on_grid(&mdp, grid_points(grid, &cdfs), outcomes)?;
    let front = &long.front;
    let mut table = Table::new(vec!["tau", "pareto_value", "witness_policy_id"]);
    for ((&t, &v), &w) in front.grid.iter().zip(&front.value).zip(&front.witness) {
        table.push(vec![
            Cell::estimate(t),
            Cell::estimate(v),
            Cell::Int(w as i128),
        ]);
    }
    let listed: Vec<Value> = long
        .policies
        .iter()
        .enumerate()
        .map(|(id, o)| match o {
            PolicyOutcome::Estimated(c) => json!({
                "id": id, "rule": front.labels[id], "status": "estimated",
                "zeta": est(c.zeta), "sigma2": est(c.sigma2), "kappa": est(c.kappa), "rhat_start": est(c.rhat_start),
            }),
            PolicyOutcome::Skipped(why) => json!({
                "id": id, "rule": front.labels[id], "status": "skipped", "reason": why,
            }),
        })
        .collect();
    let rho: Vec<Value> = alphas
        .iter()
        .map(|&a| {
            let r = front.query_rho(a)?;
            Ok(json!({"alpha": a, "rho": threshold_text(&r, |v| sig12(*v))}))
        })
        .collect::<Result<_, varmdp::Error>>()?;
    let companion = json!({
        "schema": varmdp::document::SCHEMA_VERSION,
        "horizon": n,
        "policies": listed,
        "rho": rho,
    });
    write_table(sink, format, &table)?;
    emit_companion(sink, policies, &companion)
}

#[allow(clippy::too_many_arguments)]
fn simulate_cmd(
    sink: &Sink,
    format: Format,
    input: &Input,
    policy: &PolicyArg,
    n: Option<usize>,
    samples: usize,
    seed: u64,
    quantiles: usize,
) -> CmdResult {
    if samples == 0 {
        return Err(CliError::Precondition("--samples must be positive".into()));
    }
    if quantiles < 2 {
        return Err(CliError::Precondition(format!(
            "--quantiles must be at least 2, got {quantiles}"
        )));
    }
    let chain = load_chain(input, policy)?;
    let n = n.unwrap_or(chain.horizon());
    let sim = simulate(&chain, n, samples, seed)?;
    let mut table = Table::new(vec!["q", "value"]);
    for i in 0..quantiles {
        let q = i as f64 / (quantiles - 1) as f64;
        table.push(vec![Cell::estimate(q), Cell::estimate(sim.quantile(q))]);
    }
    write_table(sink, format, &table)
}

fn compare(sink: &Sink, format: Format, first: &Path, second: &Path) -> CmdResult {
    let load = |p: &Path| -> Result<cdf_file::TabulatedCdf, CliError> {
        let text = std::fs::read_to_string(p).map_err(|e| io_err(&p.display().to_string(), e))?;
        cdf_file::parse(&text, &p.display().to_string()).map_err(CliError::Parse)
    };
    let (a, b) = (load(first)?, load(second)?);
    let mut grid = a.probe_points();
    grid.extend(b.probe_points());
    grid.sort_by(f64::total_cmp);
    grid.dedup();
    let d = ks_distance(&|t: f64| a.eval(t), &|t: f64| b.eval(t), &grid)?;
    let mut table = Table::new(vec!["ks_distance"]);
    table.push(vec![Cell::estimate(d)]);
    write_table(sink, format, &table)
}
