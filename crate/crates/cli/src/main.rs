//! `mutsel`: run simulations, equilibrium solves and stability diagnostics
//! from scenario files or named presets.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Map, Value};

use mutsel::acceptance;
use mutsel::analysis::{
    convergence_rate, global_stability_experiment, perturbation_sweep, solve_equilibrium,
    spectral_gap, stability_with_initials, theorem_scope,
};
use mutsel::dynamics::{integrate, Trajectory};
use mutsel::entropy::{diagnostics, diagnostics_csv, EntropyKernel};
use mutsel::equilibrium::{
    equilibrium_homotopy, equilibrium_uniform, EquilibriumResult, HomotopyConfig,
};
use mutsel::presets::list_presets;
use mutsel::scenario::{EquilibriumMethod, InitialSpec, Scenario, Task};
use mutsel::{Interaction, Mat};

#[derive(Parser)]
#[command(
    name = "mutsel",
    version,
    about = "Mutation-selection dynamics with nonlocal competition"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone, Default)]
struct Source {
    /// Scenario JSON file.
    #[arg(long, conflicts_with = "preset")]
    scenario: Option<PathBuf>,
    /// Named preset (see `mutsel presets`).
    #[arg(long)]
    preset: Option<String>,
    /// Output directory; artifacts go to stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Run analyses outside the scope of the attraction results.
    #[arg(long)]
    force: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Report which standing hypotheses hold.
    Validate(Source),
    /// Integrate the ODE and write `trajectory.csv`.
    Simulate(Source),
    /// Solve for the positive stationary state.
    Equilibrium {
        #[command(flatten)]
        source: Source,
        #[arg(long, value_parser = ["perron", "homotopy", "auto"])]
        method: Option<String>,
    },
    /// Spectral gap of the linearised mutation operator.
    Spectrum(Source),
    /// Relative entropy diagnostics along a trajectory.
    Entropy {
        #[command(flatten)]
        source: Source,
        /// `linear`, `quadratic` or `poly:c0,c1,...`.
        #[arg(long)]
        kernel: String,
    },
    /// Fitted exponential convergence rate.
    Rates(Source),
    /// Convergence of many initial states to one attractor.
    Stability {
        #[command(flatten)]
        source: Source,
        #[arg(long)]
        samples: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        t_end: Option<f64>,
        #[arg(long)]
        tol: Option<f64>,
    },
    /// Equilibrium distance along a grid of perturbation sizes.
    Sweep(Source),
    /// Run the acceptance suite.
    Verify {
        /// Accepted for symmetry with the other commands; the suite always
        /// covers every preset.
        #[arg(long)]
        preset: Option<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// List the preset catalog.
    Presets,
    /// Run every task listed in the scenario.
    Run(Source),
}

#[derive(Debug)]
enum CliError {
    Lib(mutsel::Error),
    Io { path: PathBuf, message: String },
    Usage(String),
}

impl From<mutsel::Error> for CliError {
    fn from(e: mutsel::Error) -> Self {
        CliError::Lib(e)
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Lib(e) => write!(f, "{e}"),
            CliError::Io { path, message } => write!(f, "{}: {message}", path.display()),
            CliError::Usage(m) => f.write_str(m),
        }
    }
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Lib(e) if !e.is_usage() => 3,
            _ => 2,
        }
    }

    fn to_json(&self) -> Value {
        let mut obj = Map::new();
        let kind = match self {
            CliError::Lib(e) => e.kind(),
            CliError::Io { .. } => "Io",
            CliError::Usage(_) => "Usage",
        };
        obj.insert("error".into(), kind.into());
        obj.insert("message".into(), self.to_string().into());
        if let CliError::Lib(mutsel::Error::Parse { path, .. }) = self {
            obj.insert("path".into(), path.clone().into());
        }
        Value::Object(obj)
    }
}

type CliResult<T> = Result<T, CliError>;

enum Artifact {
    File {
        name: &'static str,
        contents: String,
    },
    Report {
        task: &'static str,
        value: Value,
    },
}

struct TaskOutput {
    artifact: Artifact,
    passed: bool,
}

impl TaskOutput {
    fn file(name: &'static str, contents: String) -> Self {
        TaskOutput {
            artifact: Artifact::File { name, contents },
            passed: true,
        }
    }

    fn report(task: &'static str, value: Value, passed: bool) -> Self {
        TaskOutput {
            artifact: Artifact::Report { task, value },
            passed,
        }
    }
}

fn pretty(v: &impl serde::Serialize) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("serializable");
    s.push('\n');
    s
}

fn load(source: &Source) -> CliResult<Scenario> {
    match (&source.scenario, &source.preset) {
        (Some(path), _) => {
            let text = fs::read_to_string(path).map_err(|e| CliError::Io {
                path: path.clone(),
                message: e.to_string(),
            })?;
            Ok(Scenario::from_json_str(&text)?)
        }
        (None, Some(name)) => Ok(Scenario::from_preset(name)?),
        (None, None) => Err(CliError::Usage(
            "pass --scenario <file> or --preset <name>".into(),
        )),
    }
}

fn warn_if_out_of_scope(sc: &Scenario, force: bool) {
    if force {
        if let Err(why) = theorem_scope(&sc.model) {
            eprintln!(
                "WARNING: --force: running outside the scope of the attraction results: {why}"
            );
        }
    }
}

fn first_initial(sc: &Scenario) -> Vec<f64> {
    let all = sc.initial_states();
    if all.len() > 1 {
        eprintln!("note: {} initial states given; using the first", all.len());
    }
    all.into_iter().next().expect("at least one initial state")
}

fn simulate(sc: &Scenario) -> CliResult<Trajectory> {
    Ok(integrate(
        &sc.model,
        &first_initial(sc),
        sc.t_end,
        sc.rtol,
        sc.atol,
        sc.record_every,
    )?)
}

fn equilibrium(sc: &Scenario) -> CliResult<EquilibriumResult> {
    Ok(match sc.method {
        EquilibriumMethod::Perron => equilibrium_uniform(&sc.model)?,
        EquilibriumMethod::Homotopy => equilibrium_homotopy(&sc.model, &HomotopyConfig::default())?,
        EquilibriumMethod::Auto => solve_equilibrium(&sc.model)?,
    })
}

fn run_task(task: Task, sc: &Scenario, force: bool) -> CliResult<TaskOutput> {
    match task {
        Task::Validate => {
            let rep = sc.model.validate();
            let passed = rep.standing();
            let mut value = serde_json::to_value(&rep).expect("serializable");
            value["standing"] = passed.into();
            Ok(TaskOutput::report("validate", value, passed))
        }
        Task::Simulate => Ok(TaskOutput::file("trajectory.csv", simulate(sc)?.to_csv())),
        Task::Equilibrium => Ok(TaskOutput::file(
            "equilibrium.json",
            equilibrium(sc)?.to_json_pretty(),
        )),
        Task::Spectrum => {
            let eq = equilibrium(sc)?;
            Ok(TaskOutput::file(
                "spectrum.json",
                pretty(&spectral_gap(&sc.model, &eq.v_bar)?),
            ))
        }
        Task::Entropy => {
            let eq = equilibrium(sc)?;
            let tr = simulate(sc)?;
            let rows = diagnostics(&sc.model, &tr, &eq.v_bar, &sc.kernel)?;
            Ok(TaskOutput::file("entropy.csv", diagnostics_csv(&rows)))
        }
        Task::Rates => {
            let eq = equilibrium(sc)?;
            let tr = simulate(sc)?;
            let rep = convergence_rate(&sc.model, &tr, &eq.v_bar, sc.tail_fraction)?;
            Ok(TaskOutput::report(
                "rates",
                serde_json::to_value(&rep).expect("serializable"),
                true,
            ))
        }
        Task::Stability => {
            warn_if_out_of_scope(sc, force);
            let rep = match &sc.initial {
                InitialSpec::Sampler(_) => stability_with_initials(
                    &sc.model,
                    sc.initial_states(),
                    sc.t_end,
                    sc.tol,
                    force,
                )?,
                InitialSpec::State(_) => global_stability_experiment(
                    &sc.model, sc.samples, sc.seed, sc.t_end, sc.tol, force,
                )?,
            };
            let passed = rep.converged;
            Ok(TaskOutput::report(
                "stability",
                serde_json::to_value(&rep).expect("serializable"),
                passed,
            ))
        }
        Task::Sweep => {
            let (base, amp, w) = sweep_parts(sc)?;
            let table =
                perturbation_sweep(&base, &amp, &w, &sc.eps_grid, &HomotopyConfig::default())?;
            let mut value = serde_json::to_value(&table).expect("serializable");
            value["ratio_spread"] = json!(table.ratio_spread());
            let passed = table.rows.iter().all(|r| r.error.is_none());
            Ok(TaskOutput::report("sweep", value, passed))
        }
    }
}

/// Unperturbed base and perturbation shape: taken from the model itself when
/// it is already perturbed, from the scenario otherwise.
fn sweep_parts(sc: &Scenario) -> CliResult<(mutsel::Model, Vec<f64>, Mat)> {
    match sc.model.interaction() {
        Interaction::Perturbed { a, amp, w, .. } => {
            let base = sc
                .model
                .with_interaction(Interaction::UniformLinear { a: a.clone() })?;
            Ok((base, amp.clone(), w.clone()))
        }
        _ => {
            let (amp, w) = sc.perturbation_parts();
            Ok((sc.model.clone(), amp, w))
        }
    }
}

fn emit(out: Option<&Path>, outputs: Vec<TaskOutput>) -> CliResult<bool> {
    let passed = outputs.iter().all(|o| o.passed);
    let mut files: Vec<(&'static str, String)> = Vec::new();
    let mut reports: Vec<(&'static str, Value)> = Vec::new();
    for o in outputs {
        match o.artifact {
            Artifact::File { name, mut contents } => {
                if !contents.ends_with('\n') {
                    contents.push('\n');
                }
                files.push((name, contents))
            }
            Artifact::Report { task, value } => reports.push((task, value)),
        }
    }
    match reports.len() {
        0 => {}
        1 => {
            let (_, v) = reports.pop().expect("one report");
            files.push(("report.json", pretty(&v)));
        }
        _ => {
            let merged: Map<String, Value> = reports
                .into_iter()
                .map(|(k, v)| (k.to_string(), v))
                .collect();
            files.push(("report.json", pretty(&Value::Object(merged))));
        }
    }
    match out {
        Some(dir) => {
            let io = |e: std::io::Error, p: &Path| CliError::Io {
                path: p.to_path_buf(),
                message: e.to_string(),
            };
            fs::create_dir_all(dir).map_err(|e| io(e, dir))?;
            for (name, contents) in files {
                let path = dir.join(name);
                fs::write(&path, contents).map_err(|e| io(e, &path))?;
            }
        }
        None => {
            for (_, contents) in files {
                print!("{contents}");
            }
        }
    }
    Ok(passed)
}

fn out_dir(source: &Source, sc: &Scenario) -> Option<PathBuf> {
    source
        .out
        .clone()
        .or_else(|| sc.outputs.as_ref().map(PathBuf::from))
}

fn run_single(
    source: &Source,
    task: Task,
    edit: impl FnOnce(&mut Scenario) -> CliResult<()>,
) -> CliResult<bool> {
    let mut sc = load(source)?;
    edit(&mut sc)?;
    let output = run_task(task, &sc, source.force)?;
    emit(out_dir(source, &sc).as_deref(), vec![output])
}

fn verify(out: Option<&Path>) -> CliResult<bool> {
    let outcomes = acceptance::run_all();
    for o in &outcomes {
        println!("{o}");
    }
    let passed = outcomes.iter().filter(|o| o.passed).count();
    println!("{passed}/{} criteria passed", outcomes.len());
    let all = passed == outcomes.len();
    if let Some(dir) = out {
        let report = json!({ "passed": all, "criteria": outcomes });
        emit(Some(dir), vec![TaskOutput::report("verify", report, all)])?;
    }
    Ok(all)
}

fn presets() {
    for p in list_presets() {
        println!("{:<9} {}", p.name, p.description);
        println!("{:<9} realizes: {}", "", p.realizes);
    }
}

fn dispatch(cmd: Command) -> CliResult<bool> {
    match cmd {
        Command::Validate(s) => run_single(&s, Task::Validate, |_| Ok(())),
        Command::Simulate(s) => run_single(&s, Task::Simulate, |_| Ok(())),
        Command::Equilibrium { source, method } => run_single(&source, Task::Equilibrium, |sc| {
            if let Some(m) = method {
                sc.method = m.parse()?;
            }
            Ok(())
        }),
        Command::Spectrum(s) => run_single(&s, Task::Spectrum, |_| Ok(())),
        Command::Entropy { source, kernel } => run_single(&source, Task::Entropy, |sc| {
            sc.kernel = kernel.parse::<EntropyKernel>()?;
            Ok(())
        }),
        Command::Rates(s) => run_single(&s, Task::Rates, |_| Ok(())),
        Command::Stability {
            source,
            samples,
            seed,
            t_end,
            tol,
        } => run_single(&source, Task::Stability, |sc| {
            if let Some(n) = samples {
                sc.samples = n;
            }
            if let Some(s) = seed {
                sc.seed = s;
            }
            if let Some(t) = t_end {
                sc.t_end = t;
            }
            if let Some(t) = tol {
                sc.tol = t;
            }
            Ok(())
        }),
        Command::Sweep(s) => run_single(&s, Task::Sweep, |_| Ok(())),
        Command::Verify { preset, out } => {
            if let Some(name) = preset {
                mutsel::presets::preset(&name)?;
            }
            verify(out.as_deref())
        }
        Command::Presets => {
            presets();
            Ok(true)
        }
        Command::Run(source) => {
            let sc = load(&source)?;
            let outputs = sc
                .tasks
                .iter()
                .map(|&t| run_task(t, &sc, source.force))
                .collect::<CliResult<Vec<_>>>()?;
            emit(out_dir(&source, &sc).as_deref(), outputs)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            print!("{e}");
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let err = CliError::Usage(e.to_string().trim_end().to_string());
            eprintln!("{}", err.to_json());
            return ExitCode::from(2);
        }
    };
    match dispatch(cli.command) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("{}", e.to_json());
            ExitCode::from(e.exit_code())
        }
    }
}
