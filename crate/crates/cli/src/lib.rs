//! Command-line driver: dataset ingestion, schedule construction and
//! evaluation, oracles, metrics, simulation and cross-validation, with a run
//! manifest next to every output so each run can be replayed and checked.

pub mod args;
pub mod crossval;
pub mod manifest;

#[cfg(test)]
mod end_to_end;

use std::fmt;
use std::fmt::Write as _;
use std::fs;
use std::io::Write;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};

use anyhow::{anyhow, Context};
use clap::error::ErrorKind;
use clap::Parser;
use heursched_core::dataset::avg_iteration_cost;
use heursched_core::miqp::MiqpModel;
use heursched_core::numfmt::sig6;
use heursched_core::sim::{baseline_from_config, collect_shadow_dataset, compare_policies, generate_instance, run_with_schedule, SimConfig};
use heursched_core::{
    build_schedule, evaluate, primal_integral, solve_exact, Dataset, ExactLimits, GreedyOptions, IncumbentTimeline,
    IterationCostProfile, Schedule, ScheduleEvaluation, Sense,
};

pub use args::{Cli, Command};
use manifest::{sha256_hex, strip_manifest_flag, FileDigest, RunManifest};

pub const TOOL: &str = "heursched";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Failure of a command, split by exit status.
#[derive(Debug)]
pub enum CliError {
    /// Rejected input (exit 1).
    Input(anyhow::Error),
    /// Internal failure (exit 2).
    Internal(anyhow::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) => 1,
            CliError::Internal(_) => 2,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Input(e) | CliError::Internal(e) => write!(f, "{e:#}"),
        }
    }
}

impl From<heursched_core::Error> for CliError {
    fn from(e: heursched_core::Error) -> Self {
        CliError::Input(e.into())
    }
}

fn rejected(e: impl Into<anyhow::Error>) -> CliError {
    CliError::Input(e.into())
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Output {
    pub path: PathBuf,
    pub bytes: Vec<u8>,
}

/// Everything a command produced, held in memory until committed.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Report {
    pub stdout: String,
    pub outputs: Vec<Output>,
    pub inputs: Vec<FileDigest>,
    pub seeds: Vec<u64>,
}

impl Report {
    fn read(&mut self, path: &Path) -> Result<String, CliError> {
        let bytes = fs::read(path)
            .with_context(|| format!("cannot read `{}`", path.display()))
            .map_err(CliError::Input)?;
        self.inputs.push(FileDigest {
            path: path.to_path_buf(),
            sha256: sha256_hex(&bytes),
        });
        String::from_utf8(bytes).map_err(|_| rejected(anyhow!("`{}` is not UTF-8 text", path.display())))
    }

    fn dataset(&mut self, path: &Path) -> Result<Dataset, CliError> {
        let text = self.read(path)?;
        Dataset::from_csv(&text)
            .with_context(|| format!("in `{}`", path.display()))
            .map_err(CliError::Input)
    }

    fn schedule(&mut self, path: &Path) -> Result<Schedule, CliError> {
        let text = self.read(path)?;
        Schedule::from_csv(&text)
            .with_context(|| format!("in `{}`", path.display()))
            .map_err(CliError::Input)
    }

    fn config(&mut self, path: &Path) -> Result<SimConfig, CliError> {
        let text = self.read(path)?;
        SimConfig::parse(&text)
            .with_context(|| format!("in `{}`", path.display()))
            .map_err(CliError::Input)
    }

    fn emit(&mut self, path: &Option<PathBuf>, text: String) {
        if let Some(path) = path {
            self.outputs.push(Output {
                path: path.clone(),
                bytes: text.into_bytes(),
            });
        }
    }

    fn line(&mut self, text: impl AsRef<str>) {
        self.stdout.push_str(text.as_ref());
        self.stdout.push('\n');
    }
}

pub fn command_name(cmd: &Command) -> &'static str {
    match cmd {
        Command::Build(_) => "build",
        Command::Eval(_) => "eval",
        Command::Exact(_) => "exact",
        Command::ExportMiqp(_) => "export-miqp",
        Command::Simulate(_) => "simulate",
        Command::Run(_) => "run",
        Command::Compare(_) => "compare",
        Command::Metrics(_) => "metrics",
        Command::Crossval(_) => "crossval",
        Command::Replay(_) => "replay",
    }
}

fn summary(rep: &mut Report, e: &ScheduleEvaluation) {
    rep.line(format!("objective: {}", sig6(e.objective)));
    rep.line(format!("solved: {}/{}", e.solved_nodes, e.total_nodes));
    rep.line(format!("success rate: {}", sig6(e.success_rate)));
    rep.line(format!("alpha: {}", sig6(e.alpha)));
    rep.line(format!("status: {}", if e.feasible { "FEASIBLE" } else { "INFEASIBLE" }));
}

fn cost_profile(rep: &mut Report, d: &Dataset, normalize: bool) -> IterationCostProfile {
    if !normalize {
        return IterationCostProfile::uniform(d.num_heuristics());
    }
    let costs = avg_iteration_cost(d);
    for &h in costs.fallbacks() {
        rep.line(format!(
            "warning: `{}` has no positive recorded time; using 1 second per iteration",
            d.heuristics()[h]
        ));
    }
    costs
}

/// Seeds given as `a,b,c` or as a half-open range `a..b`.
pub fn parse_seeds(text: &str) -> Result<Vec<u64>, CliError> {
    let bad = || rejected(anyhow!("invalid seed list `{text}`"));
    let seeds: Vec<u64> = if let Some((a, b)) = text.split_once("..") {
        let a: u64 = a.trim().parse().map_err(|_| bad())?;
        let b: u64 = b.trim().parse().map_err(|_| bad())?;
        (a..b).collect()
    } else {
        text.split(',')
            .map(|s| s.trim().parse().map_err(|_| bad()))
            .collect::<Result<_, _>>()?
    };
    if seeds.is_empty() {
        return Err(rejected(anyhow!("seed list `{text}` is empty")));
    }
    Ok(seeds)
}

/// Runs one command without touching the file system beyond reading inputs.
pub fn execute(cmd: &Command) -> Result<Report, CliError> {
    let mut rep = Report::default();
    match cmd {
        Command::Build(a) => {
            let d = rep.dataset(&a.data)?;
            let opts = GreedyOptions {
                allow_extension: !a.no_extension,
                normalize_costs: a.normalize,
                alpha_report: a.alpha,
            };
            cost_profile(&mut rep, &d, a.normalize);
            let out = build_schedule(&d, opts)?;
            rep.line(format!("schedule: {}", out.schedule));
            rep.stdout.push_str(&out.trace.to_string());
            summary(&mut rep, &out.evaluation);
            rep.emit(&a.out, out.schedule.to_csv());
        }
        Command::Eval(a) => {
            let d = rep.dataset(&a.data)?;
            let s = rep.schedule(&a.schedule)?;
            let costs = cost_profile(&mut rep, &d, a.normalize);
            let e = evaluate(&s, &d, a.alpha, &costs, a.normalize)?;
            rep.line(format!("schedule: {s}"));
            summary(&mut rep, &e);
            let mut csv = String::from("node,first_success_position,cost\n");
            for o in &e.per_node {
                let pos = o.first_success_position.map_or(String::new(), |p| p.to_string());
                writeln!(csv, "{},{},{}", o.node, pos, sig6(o.cost)).unwrap();
            }
            rep.emit(&a.out, csv);
        }
        Command::Exact(a) => {
            let d = rep.dataset(&a.data)?;
            let costs = cost_profile(&mut rep, &d, a.normalize);
            let limits = ExactLimits {
                max_heuristics: a.max_heuristics,
                max_breakpoints_per_heuristic: a.max_breakpoints,
                enumeration_budget: a.enumeration_budget,
            };
            match solve_exact(&d, a.alpha, &costs, a.normalize, limits)? {
                Some(sol) => {
                    rep.line(format!("schedule: {}", sol.schedule));
                    rep.line(format!("objective: {}", sig6(sol.objective)));
                    rep.line(format!("solved: {}/{}", sol.solved_nodes, d.num_nodes()));
                    rep.line(format!("candidates: {}", sol.candidates_evaluated));
                    rep.emit(&a.out, sol.schedule.to_csv());
                }
                None => rep.line(format!("INFEASIBLE: no schedule solves a fraction {} of the nodes", sig6(a.alpha))),
            }
        }
        Command::ExportMiqp(a) => {
            let d = rep.dataset(&a.data)?;
            let model = MiqpModel::build(&d, a.alpha)?;
            let text = model.render();
            if a.out.is_some() {
                let f = &model.formulation;
                rep.line(format!("variables: {}", f.variables.len()));
                rep.line(format!(
                    "rows: {} ({} quadratic)",
                    f.rows.len(),
                    f.rows.iter().filter(|r| !r.bilinear.is_empty()).count()
                ));
                rep.emit(&a.out, text);
            } else {
                rep.stdout.push_str(&text);
            }
        }
        Command::Simulate(a) => {
            let cfg = rep.config(&a.config)?;
            let count = a.instances.unwrap_or(cfg.instances);
            if count == 0 {
                return Err(rejected(anyhow!("instances must be positive")));
            }
            rep.seeds = (0..count).map(|i| crossval::instance_seed(a.seed, 0, i)).collect();
            let instances = rep
                .seeds
                .iter()
                .map(|&s| generate_instance(&cfg, s))
                .collect::<Result<Vec<_>, _>>()?;
            let d = collect_shadow_dataset(&instances)?;
            let costs = avg_iteration_cost(&d);
            rep.line(format!(
                "instances: {count}  nodes: {}  observations: {}",
                d.num_nodes(),
                d.observations().len()
            ));
            for (h, id) in d.heuristics().iter().enumerate() {
                let solved = (0..d.num_nodes()).filter(|&n| d.tau(h, n).is_some()).count();
                rep.line(format!(
                    "{id}: success rate {}  breakpoints {}  seconds/iteration {}",
                    sig6(solved as f64 / d.num_nodes() as f64),
                    d.breakpoints_of(h).len(),
                    sig6(costs.get(h))
                ));
            }
            rep.emit(&a.out, d.to_csv());
        }
        Command::Run(a) => {
            let cfg = rep.config(&a.config)?;
            let s = rep.schedule(&a.schedule)?;
            rep.seeds = vec![a.seed];
            let inst = generate_instance(&cfg, a.seed)?;
            let trace = run_with_schedule(&inst, &s, a.time_limit)?;
            let p = primal_integral(&trace.timeline, a.time_limit)?;
            rep.line(format!("nodes processed: {}/{}", trace.records.len(), inst.nodes.len()));
            rep.line(format!("incumbents: {}", trace.timeline.events().len()));
            for (t, v) in trace.timeline.events() {
                rep.line(format!("  t = {}  value = {}", sig6(*t), sig6(*v)));
            }
            rep.line(format!("P(T) = {}", sig6(p)));
            rep.emit(&a.out, trace.timeline.to_csv());
        }
        Command::Compare(a) => {
            let cfg = rep.config(&a.config)?;
            let s = rep.schedule(&a.schedule)?;
            let baseline = match &a.baseline {
                Some(p) => rep.schedule(p)?,
                None => baseline_from_config(&cfg),
            };
            rep.seeds = parse_seeds(&a.seeds)?;
            let report = compare_policies(&cfg, &rep.seeds, &s, &baseline, a.time_limit)?;
            rep.line(format!("schedule: {s}"));
            rep.line(format!("baseline: {baseline}"));
            rep.stdout.push_str(&report.to_table());
            rep.emit(&a.out, report.to_csv());
        }
        Command::Metrics(a) => {
            let sense: Sense = a.sense.parse()?;
            let text = rep.read(&a.timeline)?;
            let tl = IncumbentTimeline::from_csv(&text, a.best_known, sense)
                .with_context(|| format!("in `{}`", a.timeline.display()))
                .map_err(CliError::Input)?;
            let p = primal_integral(&tl, a.time_limit)?;
            rep.line(format!("incumbents: {}", tl.events().len()));
            rep.line(format!("P(T) = {}", sig6(p)));
        }
        Command::Crossval(a) => {
            let mut configs = Vec::with_capacity(a.configs.len());
            for path in &a.configs {
                let cfg = rep.config(path)?;
                let name = cfg.name.clone().unwrap_or_else(|| {
                    path.file_stem()
                        .map_or_else(|| path.display().to_string(), |s| s.to_string_lossy().into_owned())
                });
                configs.push((name, cfg));
            }
            rep.seeds = vec![a.seed];
            let report = crossval::crossval(&configs, a.folds, a.seed, a.time_limit)?;
            rep.stdout.push_str(&report.to_table());
            rep.emit(&a.out, report.to_csv());
        }
        Command::Replay(_) => {
            return Err(CliError::Input(anyhow!("replay cannot be executed from a manifest")));
        }
    }
    Ok(rep)
}

fn manifest_for(cmd: &Command, args: &[String], rep: &Report) -> RunManifest {
    RunManifest {
        tool: TOOL.into(),
        version: VERSION.into(),
        command: command_name(cmd).into(),
        args: args.to_vec(),
        inputs: rep.inputs.clone(),
        seeds: rep.seeds.clone(),
        outputs: rep
            .outputs
            .iter()
            .map(|o| FileDigest {
                path: o.path.clone(),
                sha256: sha256_hex(&o.bytes),
            })
            .collect(),
        stdout_sha256: sha256_hex(rep.stdout.as_bytes()),
    }
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    fs::write(path, bytes)
        .with_context(|| format!("cannot write `{}`", path.display()))
        .map_err(CliError::Input)
}

fn replay(path: &Path, out: &mut dyn Write) -> Result<(), CliError> {
    let text = fs::read_to_string(path)
        .with_context(|| format!("cannot read manifest `{}`", path.display()))
        .map_err(CliError::Input)?;
    let m = RunManifest::from_json(&text)
        .with_context(|| format!("malformed manifest `{}`", path.display()))
        .map_err(CliError::Input)?;
    if m.tool != TOOL {
        return Err(rejected(anyhow!("manifest was written by `{}`", m.tool)));
    }
    for input in &m.inputs {
        let bytes = fs::read(&input.path)
            .with_context(|| format!("cannot read input `{}`", input.path.display()))
            .map_err(CliError::Input)?;
        if sha256_hex(&bytes) != input.sha256 {
            return Err(rejected(anyhow!(
                "input `{}` changed since the manifest was written",
                input.path.display()
            )));
        }
    }
    let argv: Vec<String> = std::iter::once(TOOL.to_string()).chain(m.args.iter().cloned()).collect();
    let cli = Cli::try_parse_from(&argv).map_err(|e| rejected(anyhow!("manifest arguments: {e}")))?;
    let rep = execute(&cli.command)?;
    let again = manifest_for(&cli.command, &m.args, &rep);

    let mut mismatches = Vec::new();
    let mut lines = String::new();
    let stdout_ok = again.stdout_sha256 == m.stdout_sha256;
    if !stdout_ok {
        mismatches.push("stdout".to_string());
    }
    writeln!(lines, "stdout: {}", if stdout_ok { "identical" } else { "DIFFERS" }).unwrap();
    for expected in &m.outputs {
        let status = match again.outputs.iter().find(|o| o.path == expected.path) {
            Some(o) if o.sha256 == expected.sha256 => "identical",
            Some(_) => "DIFFERS",
            None => "MISSING",
        };
        if status != "identical" {
            mismatches.push(expected.path.display().to_string());
        }
        writeln!(lines, "{}: {status}", expected.path.display()).unwrap();
    }
    for extra in again.outputs.iter().filter(|o| !m.outputs.iter().any(|e| e.path == o.path)) {
        mismatches.push(extra.path.display().to_string());
        writeln!(lines, "{}: UNEXPECTED", extra.path.display()).unwrap();
    }
    if m.version != VERSION {
        writeln!(lines, "note: manifest written by version {}, replayed with {VERSION}", m.version).unwrap();
    }
    out.write_all(lines.as_bytes())
        .map_err(|e| CliError::Internal(e.into()))?;
    if mismatches.is_empty() {
        writeln!(out, "replay of `{}` reproduced every output", m.command).map_err(|e| CliError::Internal(e.into()))?;
        Ok(())
    } else {
        Err(CliError::Internal(anyhow!("replay differs in: {}", mismatches.join(", "))))
    }
}

fn run_cli(cli: &Cli, args: &[String], out: &mut dyn Write) -> Result<(), CliError> {
    if let Command::Replay(r) = &cli.command {
        return replay(&r.path, out);
    }
    let rep = execute(&cli.command)?;
    out.write_all(rep.stdout.as_bytes())
        .map_err(|e| CliError::Internal(e.into()))?;
    for o in &rep.outputs {
        write_file(&o.path, &o.bytes)?;
    }
    let manifest_path = cli
        .manifest
        .clone()
        .or_else(|| rep.outputs.first().map(|o| RunManifest::default_path(&o.path)));
    if let Some(p) = manifest_path {
        let m = manifest_for(&cli.command, args, &rep);
        write_file(&p, m.to_json().as_bytes())?;
    }
    Ok(())
}

/// Parses `argv` (program name first), runs the command and returns the exit
/// status: 0 on success, 1 on rejected input, 2 on internal failure.
pub fn dispatch_to(argv: &[String], out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{e}");
                    0
                }
                _ => {
                    let _ = write!(err, "{}", e.render());
                    1
                }
            };
        }
    };
    let args = strip_manifest_flag(argv.get(1..).unwrap_or_default());
    let result = catch_unwind(AssertUnwindSafe(|| run_cli(&cli, &args, out)))
        .unwrap_or_else(|_| Err(CliError::Internal(anyhow!("internal error"))));
    match result {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}

pub fn dispatch(argv: &[String]) -> i32 {
    dispatch_to(argv, &mut std::io::stdout().lock(), &mut std::io::stderr().lock())
}
