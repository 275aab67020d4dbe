//! Subcommand orchestration. Every run computes all outputs in memory and
//! returns them; nothing touches the disk until the caller writes them.

use fracctrl_core::bolza::{cost_eval, optimize};
use fracctrl_core::grammian::{closed_loop_solve, lambda_sweep, linear_controllability_check, terminal_error, GrammianPair};
use fracctrl_core::mlfunc::{sectorial_diagnostic, SectorParams};
use fracctrl_core::system::hypothesis_check;
use fracctrl_core::{SolverContext, SystemSpec};
use serde_json::{json, Value};

use crate::error::CliError;
use crate::output::{controls_csv, fmt_f64, table_csv, to_json, trajectory_csv, RunOutput};
use crate::scenario::Scenario;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Command {
    Check,
    Simulate,
    Synthesize,
    Sweep,
    Optimize,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Self::Check => "check",
            Self::Simulate => "simulate",
            Self::Synthesize => "synthesize",
            Self::Sweep => "sweep",
            Self::Optimize => "optimize",
        }
    }
}

/// Command-line overrides of scenario values.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunOptions {
    pub lambda: Option<f64>,
    pub nodes: Option<usize>,
    /// Worker cap for sweep rows.
    pub threads: Option<usize>,
}

fn core(context: &str) -> impl Fn(fracctrl_core::Error) -> CliError + '_ {
    move |source| CliError::Core { context: context.to_string(), source }
}

fn context(scenario: &Scenario, opts: &RunOptions) -> Result<(SystemSpec<f64>, SolverContext<f64>), CliError> {
    let spec = scenario.spec();
    let mut cfg = scenario.solver_config();
    if let Some(n) = opts.nodes {
        cfg.nodes_per_segment = n;
    }
    let ctx = SolverContext::new(&spec, &cfg).map_err(core("solver setup"))?;
    Ok((spec, ctx))
}

fn vec_json(v: &nalgebra::DVector<f64>) -> Value {
    json!(v.iter().copied().collect::<Vec<f64>>())
}

fn header(scenario: &Scenario, cmd: Command, nodes: usize) -> Value {
    json!({
        "command": cmd.name(),
        "scenario": scenario.name,
        "q": scenario.system.q,
        "n": scenario.n(),
        "p": scenario.p(),
        "m": scenario.m(),
        "nodes_per_segment": nodes,
    })
}

fn merge(mut base: Value, extra: Value) -> Value {
    if let (Value::Object(b), Value::Object(e)) = (&mut base, extra) {
        b.extend(e);
    }
    base
}

pub fn run(cmd: Command, scenario: &Scenario, opts: &RunOptions) -> Result<RunOutput, CliError> {
    let issues = scenario.issues();
    if !issues.is_empty() {
        return Err(CliError::Scenario(crate::scenario::ScenarioError::Invalid(issues)));
    }
    match cmd {
        Command::Check => check(scenario, opts),
        Command::Simulate => simulate(scenario, opts),
        Command::Synthesize => synthesize(scenario, opts),
        Command::Sweep => sweep(scenario, opts),
        Command::Optimize => optimize_cmd(scenario, opts),
    }
}

/// Diagnostics only: a failing part is reported in the summary rather
/// than failing the run.
fn check(scenario: &Scenario, opts: &RunOptions) -> Result<RunOutput, CliError> {
    let (spec, ctx) = context(scenario, opts)?;
    let hypothesis = match hypothesis_check(&spec, &spec.declared, None) {
        Ok(r) => json!({
            "m_est": r.m_est,
            "delta": r.delta,
            "beta": r.beta,
            "m_beta": r.m_beta,
            "d": r.d,
            "k_star": r.k_star,
            "contraction_nonlocal": r.contraction.nonlocal,
            "contraction_impulses": r.contraction.impulses,
            "contraction_ok": r.contraction_ok,
            "negative_constants": r.negative_constants,
        }),
        Err(e) => json!({ "error": e.to_string() }),
    };
    let sector = match spec.order() {
        Ok(q) => {
            let r = sectorial_diagnostic(&spec.a, q, SectorParams::default());
            json!({
                "all_pass": r.all_pass,
                "eigenvalues": r.eigenvalues.iter().map(|e| json!({
                    "re": e.eigenvalue.re,
                    "im": e.eigenvalue.im,
                    "pass": e.pass,
                })).collect::<Vec<_>>(),
            })
        }
        Err(e) => json!({ "error": e.to_string() }),
    };
    let controllability = match linear_controllability_check(&ctx) {
        Ok(r) => json!({
            "verdict": if r.controllable { "pass" } else { "fail" },
            "segments": r.segments.iter().map(|s| json!({
                "segment": s.segment,
                "min_eig_psi1": s.min_eig_psi1,
                "min_eig_psi2": s.min_eig_psi2,
                "controllable": s.controllable,
                "decay": s.decay.iter().map(|(l, d1, d2)| json!([l, d1, d2])).collect::<Vec<_>>(),
            })).collect::<Vec<_>>(),
        }),
        Err(e) => json!({ "verdict": "unavailable", "error": e.to_string() }),
    };
    let summary = merge(
        header(scenario, Command::Check, ctx.nodes()),
        json!({ "hypothesis": hypothesis, "sectorial": sector, "controllability": controllability }),
    );
    let mut out = RunOutput::default();
    out.add("summary.json", to_json(&summary));
    Ok(out)
}

fn simulate(scenario: &Scenario, opts: &RunOptions) -> Result<RunOutput, CliError> {
    let (_, ctx) = context(scenario, opts)?;
    let controls = scenario.control_law();
    let report = ctx.picard(&controls, None).map_err(core("simulate"))?;
    let mut out = RunOutput::default();
    out.add("trajectory.csv", trajectory_csv(&report.trajectory));
    out.add("controls.csv", controls_csv(&ctx, &controls).map_err(core("controls output"))?);
    let summary = merge(
        header(scenario, Command::Simulate, ctx.nodes()),
        json!({
            "picard_iterations": report.iterations,
            "residual": report.residual,
            "final_damping": report.final_damping,
            "terminal_state": vec_json(report.trajectory.segments.last().expect("one segment").last()),
        }),
    );
    out.add("summary.json", to_json(&summary));
    Ok(out)
}

fn synthesize(scenario: &Scenario, opts: &RunOptions) -> Result<RunOutput, CliError> {
    let waypoints = scenario
        .waypoints()
        .ok_or_else(|| CliError::Requirement("synthesize needs `waypoints`".into()))?;
    let lambda = opts
        .lambda
        .or(scenario.lambda)
        .ok_or_else(|| CliError::Requirement("synthesize needs `lambda` (scenario or --lambda)".into()))?;
    let (_, ctx) = context(scenario, opts)?;
    let grammians = GrammianPair::compute(&ctx).map_err(core("grammian"))?;
    let closed = closed_loop_solve(&ctx, &grammians, lambda, &waypoints).map_err(core("closed loop"))?;
    let errors = terminal_error(&ctx, &grammians, lambda, &waypoints, &closed).map_err(core("terminal error"))?;
    let mut out = RunOutput::default();
    out.add("trajectory.csv", trajectory_csv(&closed.report.trajectory));
    out.add("controls.csv", controls_csv(&ctx, &closed.controls).map_err(core("controls output"))?);
    let summary = merge(
        header(scenario, Command::Synthesize, ctx.nodes()),
        json!({
            "lambda": lambda,
            "outer_iterations": closed.outer_iterations,
            "picard_iterations": closed.picard_iterations,
            "last_update": closed.last_update,
            "terminal_errors": errors.iter().enumerate().map(|(k, e)| json!({
                "waypoint": k + 1,
                "direct": e.direct,
                "identity": e.identity,
                "mismatch": e.mismatch,
                "derived": e.derived,
            })).collect::<Vec<_>>(),
        }),
    );
    out.add("summary.json", to_json(&summary));
    Ok(out)
}

fn sweep(scenario: &Scenario, opts: &RunOptions) -> Result<RunOutput, CliError> {
    let waypoints = scenario
        .waypoints()
        .ok_or_else(|| CliError::Requirement("sweep needs `waypoints`".into()))?;
    let (_, ctx) = context(scenario, opts)?;
    let mut params = scenario.sweep_params();
    if let Some(l) = opts.lambda {
        params.lambda0 = l;
    }
    let report = lambda_sweep(&ctx, &waypoints, params, opts.threads).map_err(core("sweep"))?;
    let k = scenario.m() + 1;
    let mut header_row = vec!["lambda".to_string()];
    header_row.extend((1..=k).map(|j| format!("error_{j}")));
    header_row.extend((1..=k).map(|j| format!("identity_{j}")));
    header_row.extend(["energy_u", "energy_v", "picard_iterations", "outer_iterations", "status"].map(String::from));
    let rows: Vec<Vec<String>> = report
        .rows
        .iter()
        .map(|r| {
            let mut row = vec![fmt_f64(r.lambda)];
            match &r.outcome {
                Ok(o) => {
                    row.extend(o.errors.iter().map(|e| fmt_f64(e.direct)));
                    row.extend(o.errors.iter().map(|e| fmt_f64(e.identity)));
                    row.extend([fmt_f64(o.energy_u), fmt_f64(o.energy_v)]);
                    row.extend([o.picard_iterations.to_string(), o.outer_iterations.to_string(), "ok".into()]);
                }
                Err(msg) => {
                    row.extend(std::iter::repeat_n(String::new(), 2 * k + 4));
                    row.push(msg.clone());
                }
            }
            row
        })
        .collect();
    let controllable = linear_controllability_check(&ctx).map(|r| r.controllable).ok();
    let mut out = RunOutput::default();
    out.add("sweep.csv", table_csv(&header_row, &rows));
    let summary = merge(
        header(scenario, Command::Sweep, ctx.nodes()),
        json!({
            "lambdas": report.lambdas,
            "decreasing": report.decreasing,
            "failed_rows": report.rows.iter().filter(|r| r.outcome.is_err()).count(),
            "controllable": controllable,
        }),
    );
    out.add("summary.json", to_json(&summary));
    Ok(out)
}

fn optimize_cmd(scenario: &Scenario, opts: &RunOptions) -> Result<RunOutput, CliError> {
    let cost = scenario
        .cost()
        .ok_or_else(|| CliError::Requirement("optimize needs `cost`".into()))?;
    let set = scenario
        .admissible_set()
        .ok_or_else(|| CliError::Requirement("optimize needs `admissible`".into()))?
        .map_err(core("admissible set"))?;
    let (_, ctx) = context(scenario, opts)?;
    let cfg = scenario.optimize_config();
    let opt = optimize(&ctx, &cost, &set, &cfg).map_err(core("optimize"))?;
    let check = cost_eval(&ctx, &cost, &opt.trajectory, &opt.controls).map_err(core("cost"))?;
    let mut out = RunOutput::default();
    out.add("trajectory.csv", trajectory_csv(&opt.trajectory));
    out.add("controls.csv", controls_csv(&ctx, &opt.controls).map_err(core("controls output"))?);
    let trace: Vec<Vec<String>> = opt
        .trace
        .iter()
        .map(|t| vec![t.iteration.to_string(), fmt_f64(t.cost), fmt_f64(t.energy)])
        .collect();
    out.add("trace.csv", table_csv(&["iteration".into(), "cost".into(), "energy".into()], &trace));
    let summary = merge(
        header(scenario, Command::Optimize, ctx.nodes()),
        json!({
            "cost": opt.cost,
            "cost_recomputed": check,
            "initial_cost": opt.trace.first().map(|t| t.cost),
            "iterations": opt.iterations,
            "rejected_evaluations": opt.rejected,
            "intervals_per_segment": cfg.intervals_per_segment,
            "parameters": opt.parameters,
        }),
    );
    out.add("summary.json", to_json(&summary));
    Ok(out)
}
