//! Run configuration from the command line or a `key = value` file.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, CommandFactory, FromArgMatches, Parser, Subcommand, ValueEnum};
use unvartop::fem::SolverStrategy;
use unvartop::material::PlaneModel;
use unvartop::optimizer::{ConstraintMethod, RootMethod, TimeSchedule};
use unvartop::problems::{example_info, ProblemKind, EXAMPLES};

use crate::error::{usage, CliError};

/// Initial penalty of the augmented Lagrangian update.
pub const DEFAULT_RHO0: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SolverArg {
    Direct,
    Iterative,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum RootArg {
    Bisection,
    RegulaFalsi,
    #[value(alias = "illinois")]
    AndersonBjorck,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ConstraintArg {
    Bisection,
    #[value(alias = "augmented-lagrangian")]
    Augmented,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModelArg {
    PlaneStress,
    PlaneStrain,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum KindArg {
    Compliance,
    Multiload,
    Mechanism,
    Thermal,
}

#[derive(Debug, Parser)]
#[command(
    name = "unvartop",
    version,
    about = "2D topology optimization with relaxed topological derivatives"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Optimize a library example or a configured problem.
    Run(RunArgs),
}

#[derive(Debug, Args)]
#[command(allow_negative_numbers = true)]
struct RunArgs {
    /// Library example to optimize.
    #[arg(long, value_name = "NAME", conflicts_with = "config")]
    example: Option<String>,
    /// Flat `key = value` file with the run settings.
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Elements along x.
    nelx: Option<usize>,
    /// Elements along y.
    nely: Option<usize>,
    /// Number of pseudo-time steps.
    nsteps: Option<usize>,
    /// Initial void fraction.
    vol0: Option<f64>,
    /// Final void fraction.
    vol: Option<f64>,
    /// Schedule curvature (0 = equal increments).
    k: Option<f64>,
    /// Regularization parameter.
    tau: Option<f64>,
    /// Problem family; selects its default example when --example is absent.
    #[arg(long, value_enum)]
    problem: Option<KindArg>,
    #[arg(long, value_enum)]
    solver: Option<SolverArg>,
    /// Multiplier search for the volume constraint.
    #[arg(long, value_enum)]
    rootfind: Option<RootArg>,
    /// Volume constraint treatment.
    #[arg(long, value_enum)]
    constraint: Option<ConstraintArg>,
    /// Initial penalty for --constraint augmented.
    #[arg(long)]
    rho0: Option<f64>,
    /// Plane elasticity model (elastic problems only).
    #[arg(long, value_enum)]
    model: Option<ModelArg>,
    /// Output directory.
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Write only history.csv.
    #[arg(long)]
    no_snapshots: bool,
}

/// Fully resolved settings of one optimization run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub nelx: usize,
    pub nely: usize,
    pub nsteps: usize,
    pub vol0: f64,
    pub vol: f64,
    pub k: f64,
    pub tau: f64,
    pub example: String,
    pub problem: ProblemKind,
    pub solver: SolverStrategy,
    pub root_method: RootMethod,
    pub constraint: ConstraintMethod,
    /// `None` keeps the material of the example.
    pub model: Option<PlaneModel>,
    pub out: PathBuf,
    pub snapshots: bool,
}

impl RunConfig {
    /// Default settings for `example` with its library call.
    pub fn for_example(name: &str) -> Result<Self, CliError> {
        let info = example_info(name)?;
        Ok(Self {
            nelx: info.nelx,
            nely: info.nely,
            nsteps: info.nsteps,
            vol0: info.vol0,
            vol: info.vol,
            k: info.k,
            tau: info.tau,
            example: info.name.to_string(),
            problem: info.kind,
            solver: SolverStrategy::Direct,
            root_method: RootMethod::Bisection,
            constraint: ConstraintMethod::Threshold,
            model: None,
            out: PathBuf::from("unvartop-out"),
            snapshots: true,
        })
    }

    pub fn schedule(&self) -> Result<TimeSchedule, CliError> {
        TimeSchedule::new(self.vol0, self.vol, self.nsteps, self.k).map_err(Into::into)
    }

    fn validate(&self) -> Result<(), CliError> {
        if self.nelx == 0 || self.nely == 0 {
            return usage("nelx and nely must be positive");
        }
        if !(self.tau >= 0.0 && self.tau.is_finite()) {
            return usage(format!("tau must be a non-negative number, got {}", self.tau));
        }
        self.schedule().map_err(|e| CliError::Usage(e.to_string()))?;
        if let ConstraintMethod::AugmentedLagrangian { rho0 } = self.constraint {
            if !(rho0 > 0.0 && rho0.is_finite()) {
                return usage(format!("rho0 must be positive, got {rho0}"));
            }
        }
        if self.problem == ProblemKind::Thermal && self.model.is_some() {
            return usage("--model applies to elastic problems only");
        }
        Ok(())
    }
}

/// What the command line asks for.
#[derive(Debug, Clone, PartialEq)]
pub enum Invocation {
    Run(RunConfig),
    /// Help or version text to print before exiting successfully.
    Info(String),
}

fn examples_help() -> String {
    let mut s = String::from("Examples (name: kind, default call NELX NELY NSTEPS VOL0 VOL K TAU):\n");
    for name in EXAMPLES {
        if let Ok(i) = example_info(name) {
            s.push_str(&format!(
                "  {:<18} {:<11} {} {} {} {} {} {} {}  {}\n",
                i.name,
                i.kind.name(),
                i.nelx,
                i.nely,
                i.nsteps,
                i.vol0,
                i.vol,
                i.k,
                i.tau,
                i.summary
            ));
        }
    }
    s.push_str("\nEnvironment: UNVARTOP_THREADS caps worker threads (0 or unset = all cores).");
    s
}

/// Parses `argv` (program name first).
pub fn parse_args<I, T>(argv: I) -> Result<Invocation, CliError>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let help = examples_help();
    let cmd = Cli::command().mut_subcommand("run", |c| c.after_help(help));
    let matches = match cmd.try_get_matches_from(argv) {
        Ok(m) => m,
        Err(e) => {
            use clap::error::ErrorKind;
            return match e.kind() {
                ErrorKind::DisplayHelp
                | ErrorKind::DisplayVersion
                | ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand => {
                    Ok(Invocation::Info(e.render().to_string()))
                }
                _ => Err(CliError::Usage(e.render().to_string())),
            };
        }
    };
    let cli = Cli::from_arg_matches(&matches).map_err(|e| CliError::Usage(e.to_string()))?;
    let Command::Run(args) = cli.command;
    resolve(args).map(Invocation::Run)
}

fn resolve(args: RunArgs) -> Result<RunConfig, CliError> {
    let positional = [
        args.nelx.is_some(),
        args.nely.is_some(),
        args.nsteps.is_some(),
        args.vol0.is_some(),
        args.vol.is_some(),
        args.k.is_some(),
        args.tau.is_some(),
    ];
    let mut cfg = match &args.config {
        Some(path) => {
            if positional.iter().any(|&p| p) {
                return usage("NELX .. TAU come from the config file; do not repeat them");
            }
            let text = std::fs::read_to_string(path).map_err(|source| CliError::Read {
                path: path.clone(),
                source,
            })?;
            parse_config_text(&text, path)?
        }
        None => {
            if !positional.iter().all(|&p| p) {
                return usage("expected seven positional values: NELX NELY NSTEPS VOL0 VOL K TAU");
            }
            let problem = args.problem.map(kind_of);
            let name = select_example(args.example.as_deref(), problem)?;
            let mut cfg = RunConfig::for_example(&name)?;
            cfg.nelx = args.nelx.unwrap_or_default();
            cfg.nely = args.nely.unwrap_or_default();
            cfg.nsteps = args.nsteps.unwrap_or_default();
            cfg.vol0 = args.vol0.unwrap_or_default();
            cfg.vol = args.vol.unwrap_or_default();
            cfg.k = args.k.unwrap_or_default();
            cfg.tau = args.tau.unwrap_or_default();
            cfg
        }
    };
    if let Some(p) = args.problem {
        if kind_of(p) != cfg.problem {
            return usage(format!(
                "example `{}` is a {} problem, not {}",
                cfg.example,
                cfg.problem.name(),
                kind_of(p).name()
            ));
        }
    }
    if let Some(s) = args.solver {
        cfg.solver = solver_of(s);
    }
    if let Some(r) = args.rootfind {
        cfg.root_method = root_of(r);
    }
    if let Some(c) = args.constraint {
        cfg.constraint = constraint_of(c, DEFAULT_RHO0);
    }
    if let Some(rho0) = args.rho0 {
        match &mut cfg.constraint {
            ConstraintMethod::AugmentedLagrangian { rho0: r } => *r = rho0,
            ConstraintMethod::Threshold => return usage("--rho0 requires --constraint augmented"),
        }
    }
    if let Some(m) = args.model {
        cfg.model = Some(model_of(m));
    }
    if let Some(out) = args.out {
        cfg.out = out;
    }
    if args.no_snapshots {
        cfg.snapshots = false;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn select_example(example: Option<&str>, problem: Option<ProblemKind>) -> Result<String, CliError> {
    Ok(match (example, problem) {
        (Some(name), _) => name.to_string(),
        (None, Some(kind)) => unvartop::problems::default_example(kind).to_string(),
        (None, None) => "cantilever".to_string(),
    })
}

const KEYS: [&str; 16] = [
    "nelx",
    "nely",
    "nsteps",
    "vol0",
    "vol",
    "k",
    "tau",
    "example",
    "problem",
    "solver",
    "rootfind",
    "constraint",
    "rho0",
    "model",
    "out",
    "snapshots",
];

/// Parses the flat `key = value` format. Blank lines and `#` comments are
/// skipped; every key may appear once.
pub fn parse_config_text(text: &str, origin: &Path) -> Result<RunConfig, CliError> {
    let mut map = BTreeMap::new();
    for (no, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let at = || format!("{}:{}", origin.display(), no + 1);
        let Some((key, value)) = line.split_once('=') else {
            return usage(format!("{}: expected key = value", at()));
        };
        let (key, value) = (key.trim(), value.trim());
        if !KEYS.contains(&key) {
            return usage(format!(
                "{}: unknown key `{key}` (valid: {})",
                at(),
                KEYS.join(", ")
            ));
        }
        if map.insert(key.to_string(), value.to_string()).is_some() {
            return usage(format!("{}: duplicate key `{key}`", at()));
        }
    }

    let problem = map
        .get("problem")
        .map(|v| enum_value::<KindArg>("problem", v))
        .transpose()?
        .map(kind_of);
    let name = select_example(map.get("example").map(String::as_str), problem)?;
    let mut cfg = RunConfig::for_example(&name)?;
    if let Some(p) = problem {
        if p != cfg.problem {
            return usage(format!(
                "example `{name}` is a {} problem, not {}",
                cfg.problem.name(),
                p.name()
            ));
        }
    }
    for key in ["nelx", "nely", "nsteps", "vol0", "vol", "k", "tau"] {
        if !map.contains_key(key) {
            return usage(format!("{}: missing key `{key}`", origin.display()));
        }
    }
    cfg.nelx = number(&map, "nelx")?;
    cfg.nely = number(&map, "nely")?;
    cfg.nsteps = number(&map, "nsteps")?;
    cfg.vol0 = number(&map, "vol0")?;
    cfg.vol = number(&map, "vol")?;
    cfg.k = number(&map, "k")?;
    cfg.tau = number(&map, "tau")?;
    if let Some(v) = map.get("solver") {
        cfg.solver = solver_of(enum_value("solver", v)?);
    }
    if let Some(v) = map.get("rootfind") {
        cfg.root_method = root_of(enum_value("rootfind", v)?);
    }
    let rho0 = map.get("rho0").map(|_| number::<f64>(&map, "rho0")).transpose()?;
    if let Some(v) = map.get("constraint") {
        cfg.constraint = constraint_of(enum_value("constraint", v)?, rho0.unwrap_or(DEFAULT_RHO0));
    }
    if rho0.is_some() && cfg.constraint == ConstraintMethod::Threshold {
        return usage("rho0 requires constraint = augmented");
    }
    if let Some(v) = map.get("model") {
        cfg.model = Some(model_of(enum_value("model", v)?));
    }
    if let Some(v) = map.get("out") {
        cfg.out = PathBuf::from(v);
    }
    if map.contains_key("snapshots") {
        cfg.snapshots = number(&map, "snapshots")?;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn number<T: FromStr>(map: &BTreeMap<String, String>, key: &str) -> Result<T, CliError> {
    let v = &map[key];
    v.parse()
        .map_err(|_| CliError::Usage(format!("invalid value `{v}` for `{key}`")))
}

fn enum_value<T: ValueEnum>(key: &str, v: &str) -> Result<T, CliError> {
    T::from_str(v, false).map_err(|_| {
        let valid: Vec<String> = T::value_variants()
            .iter()
            .filter_map(|x| x.to_possible_value().map(|p| p.get_name().to_string()))
            .collect();
        CliError::Usage(format!(
            "invalid value `{v}` for `{key}` (valid: {})",
            valid.join(", ")
        ))
    })
}

fn kind_of(k: KindArg) -> ProblemKind {
    match k {
        KindArg::Compliance => ProblemKind::Compliance,
        KindArg::Multiload => ProblemKind::Multiload,
        KindArg::Mechanism => ProblemKind::Mechanism,
        KindArg::Thermal => ProblemKind::Thermal,
    }
}

fn solver_of(s: SolverArg) -> SolverStrategy {
    match s {
        SolverArg::Direct => SolverStrategy::Direct,
        SolverArg::Iterative => SolverStrategy::Iterative,
    }
}

fn root_of(r: RootArg) -> RootMethod {
    match r {
        RootArg::Bisection => RootMethod::Bisection,
        RootArg::RegulaFalsi => RootMethod::RegulaFalsi,
        RootArg::AndersonBjorck => RootMethod::AndersonBjorck,
    }
}

fn constraint_of(c: ConstraintArg, rho0: f64) -> ConstraintMethod {
    match c {
        ConstraintArg::Bisection => ConstraintMethod::Threshold,
        ConstraintArg::Augmented => ConstraintMethod::AugmentedLagrangian { rho0 },
    }
}

fn model_of(m: ModelArg) -> PlaneModel {
    match m {
        ModelArg::PlaneStress => PlaneModel::PlaneStress,
        ModelArg::PlaneStrain => PlaneModel::PlaneStrain,
    }
}
