mod output;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::Value;

use steerlat::bases::{basis_set_to_json, load_basis_set, max_overlap, mub_set, save_basis_set};
use steerlat::bounds::{bounds_general, bounds_mub, bounds_profile_general, bounds_profile_mub};
use steerlat::cem::{cem_minimize, CEMConfig, CemObjective};
use steerlat::omega::{omega_exact_with, omega_profile_with, omega_two_bases, ur_bound_from_profile};
use steerlat::states::{parse_state_spec, witness, witness_with, Strategy};
use steerlat::thresholds::{
    bound_threshold, exact_threshold, family_l, infinite_settings_limit, threshold_from_omega_bar, BoundSource,
    Scenario, ThresholdReport, CAP_TOL,
};
use steerlat::{BoundsProfile, Error, Family, OmegaOptions, OmegaResult};

use output::{num, Cell, Format, Table};

#[derive(Parser, Debug)]
#[command(
    name = "steerlat",
    version,
    about = "Majorization-lattice steering witnesses and bounds"
)]
struct Cli {
    /// Output format for result tables.
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Worker threads; defaults to the available parallelism.
    #[arg(long, global = true, env = "STEERLAT_THREADS")]
    threads: Option<usize>,
    /// Repeat for more progress output on stderr.
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Build a set of mutually unbiased bases.
    Mub {
        #[arg(long)]
        d: usize,
        #[arg(long)]
        n: usize,
        /// Basis-set JSON destination; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Exact Omega_L of a basis-set file.
    Omega {
        #[arg(long)]
        bases: PathBuf,
        #[command(flatten)]
        range: LRange,
        #[arg(long, value_enum, default_value_t = Method::Exact)]
        method: Method,
        #[arg(long)]
        symmetry_reduction: bool,
    },
    /// Theta, Gamma and Lambda bounds.
    Bounds {
        #[arg(long, requires = "n")]
        d: Option<usize>,
        #[arg(long, requires = "d")]
        n: Option<usize>,
        /// Closed forms for MUBs of the given `d` and `n`.
        #[arg(long, requires = "d", conflicts_with = "bases")]
        mub: bool,
        /// Enumerated bounds for a basis-set file.
        #[arg(long, required_unless_present = "mub")]
        bases: Option<PathBuf>,
        #[command(flatten)]
        range: LRange,
    },
    /// Steering thresholds for a state family with MUB settings.
    Threshold {
        #[arg(long, value_enum)]
        family: FamilyArg,
        #[arg(long)]
        d: usize,
        /// Sweep `d..=d_max`.
        #[arg(long)]
        d_max: Option<usize>,
        #[arg(long)]
        n: usize,
        #[arg(long, value_enum, default_value_t = SourceArg::Exact)]
        source: SourceArg,
        #[arg(long)]
        symmetry_reduction: bool,
    },
    /// Apply the witness to a state.
    Witness {
        /// `iso:<d>:<w>`, `werner:<d>:<eta>`, `werner2q:<w>` or a state JSON file.
        #[arg(long)]
        state: String,
        /// Settings whose Omega profile is the bound.
        #[arg(long)]
        bases: PathBuf,
        /// Alice's settings, measured against `--bases` on Bob's side.
        #[arg(long, conflicts_with = "strategy")]
        bases_a: Option<PathBuf>,
        #[arg(long, value_enum)]
        strategy: Option<StrategyArg>,
        #[arg(long)]
        symmetry_reduction: bool,
    },
    /// Cross-entropy search for settings with low thresholds.
    Optimize {
        #[arg(long, value_enum)]
        family: SearchFamily,
        #[arg(long)]
        d: usize,
        #[arg(long)]
        n: usize,
        /// Sweep `n..=n_max`.
        #[arg(long)]
        n_max: Option<usize>,
        #[command(flatten)]
        cem: CemArgs,
        /// Directory for settings JSON files and the threshold CSV.
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
    /// Omega_N / N for many qubit settings spread over a region.
    Limit {
        #[arg(long, value_enum)]
        scenario: ScenarioArg,
        #[arg(long, default_value_t = 5000)]
        grid: usize,
    },
}

#[derive(Args, Debug)]
struct LRange {
    #[arg(long, required_unless_present = "all", conflicts_with = "all")]
    l: Option<usize>,
    /// Every admissible L.
    #[arg(long)]
    all: bool,
}

#[derive(Args, Debug)]
struct CemArgs {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = CEMConfig::default().population)]
    population: usize,
    #[arg(long, default_value_t = CEMConfig::default().elite_fraction)]
    elite_fraction: f64,
    #[arg(long, default_value_t = CEMConfig::default().smoothing)]
    smoothing: f64,
    #[arg(long, default_value_t = CEMConfig::default().max_iters)]
    max_iters: usize,
    #[arg(long, default_value_t = CEMConfig::default().init_stddev)]
    init_stddev: f64,
    #[arg(long, default_value_t = CEMConfig::default().stall_patience)]
    stall_patience: usize,
    #[arg(long, default_value_t = CEMConfig::default().restarts)]
    restarts: usize,
    /// Evaluate every candidate exactly.
    #[arg(long)]
    no_screening: bool,
    #[arg(long, value_enum, default_value_t = ObjectiveArg::OmegaBar)]
    objective: ObjectiveArg,
}

impl CemArgs {
    fn config(&self) -> CEMConfig {
        CEMConfig {
            population: self.population,
            elite_fraction: self.elite_fraction,
            smoothing: self.smoothing,
            max_iters: self.max_iters,
            init_stddev: self.init_stddev,
            seed: self.seed,
            stall_patience: self.stall_patience,
            restarts: self.restarts,
            screening: !self.no_screening,
            ..CEMConfig::default()
        }
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Method {
    Exact,
    TwoBases,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum FamilyArg {
    Isotropic,
    Werner,
    TwoQubit,
}

impl FamilyArg {
    fn family(self) -> Family {
        match self {
            FamilyArg::Isotropic => Family::Isotropic,
            FamilyArg::Werner => Family::Werner,
            FamilyArg::TwoQubit => Family::TwoQubitWerner,
        }
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum SearchFamily {
    Isotropic,
    Werner,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum SourceArg {
    Exact,
    Gamma,
    Theta,
    Lambda,
    All,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum StrategyArg {
    Identity,
    ConjugateBob,
    SvdAligned,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ObjectiveArg {
    OmegaBar,
    TrX2,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ScenarioArg {
    Hemisphere,
    HalfPlane,
}

/// Failures with their process exit codes.
#[derive(Debug)]
enum CliError {
    Usage(String),
    Core(Error),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Core(e)
    }
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Core(Error::Capability(_)) => 2,
            CliError::Core(Error::Computation(_)) => 1,
            CliError::Core(_) => 3,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Core(e) => write!(f, "{e}"),
        }
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(cli) {
        Ok(text) => {
            print!("{text}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn run(cli: Cli) -> CliResult<String> {
    if let Some(t) = cli.threads {
        if t == 0 {
            return Err(CliError::Usage("--threads must be positive".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .map_err(|e| CliError::Usage(e.to_string()))?;
    }
    let format = cli.format;
    let table = match cli.command {
        Command::Mub { d, n, out } => return cmd_mub(d, n, out.as_deref(), format),
        Command::Omega {
            bases,
            range,
            method,
            symmetry_reduction,
        } => cmd_omega(&bases, &range, method, symmetry_reduction)?,
        Command::Bounds {
            d,
            n,
            mub,
            bases,
            range,
        } => cmd_bounds(d, n, mub, bases.as_deref(), &range)?,
        Command::Threshold {
            family,
            d,
            d_max,
            n,
            source,
            symmetry_reduction,
        } => cmd_threshold(family, d, d_max.unwrap_or(d), n, source, symmetry_reduction)?,
        Command::Witness {
            state,
            bases,
            bases_a,
            strategy,
            symmetry_reduction,
        } => cmd_witness(&state, &bases, bases_a.as_deref(), strategy, symmetry_reduction)?,
        Command::Optimize {
            family,
            d,
            n,
            n_max,
            cem,
            out_dir,
        } => cmd_optimize(family, d, n, n_max.unwrap_or(n), &cem, out_dir.as_deref())?,
        Command::Limit { scenario, grid } => cmd_limit(scenario, grid)?,
    };
    Ok(table.render(format))
}

fn cmd_mub(d: usize, n: usize, out: Option<&Path>, format: Format) -> CliResult<String> {
    let bs = mub_set(d, n)?;
    let Some(path) = out else {
        if format == Format::Csv {
            return Err(CliError::Usage(
                "basis sets are JSON only; use --out for a CSV summary".into(),
            ));
        }
        return Ok(basis_set_to_json(&bs));
    };
    save_basis_set(&bs, path)?;
    let mut t = Table::new("mub", &["d", "n", "max_overlap", "path"]);
    t.push(vec![
        d.into(),
        n.into(),
        max_overlap(&bs)?.into(),
        path.display().to_string().into(),
    ]);
    Ok(t.render(format))
}

fn selection_text(r: &OmegaResult) -> String {
    r.selection
        .iter()
        .map(|(mu, i)| format!("{mu}:{i}"))
        .collect::<Vec<_>>()
        .join(" ")
}

fn cmd_omega(path: &Path, range: &LRange, method: Method, symmetry_reduction: bool) -> CliResult<Table> {
    let bs = load_basis_set(path)?;
    let opts = OmegaOptions { symmetry_reduction };
    let mut t = Table::new("omega", &["l", "omega", "omega_bar", "ur_component", "selection"]);
    t.meta("d", bs.dim());
    t.meta("n", bs.len());
    let results: Vec<OmegaResult> = match (method, range.l) {
        (Method::TwoBases, _) if bs.len() != 2 => {
            return Err(CliError::Usage(format!(
                "--method two-bases needs exactly 2 bases, the file has {}",
                bs.len()
            )));
        }
        (Method::TwoBases, Some(l)) => vec![omega_two_bases(bs.basis(0), bs.basis(1), l)?],
        (Method::TwoBases, None) => (1..=2 * bs.dim())
            .map(|l| omega_two_bases(bs.basis(0), bs.basis(1), l))
            .collect::<Result<_, _>>()?,
        (Method::Exact, Some(l)) => vec![omega_exact_with(&bs, l, &opts)?],
        (Method::Exact, None) => omega_profile_with(&bs, &opts)?,
    };
    let ur = if range.all {
        let profile: Vec<f64> = results.iter().map(|r| r.value).collect();
        let s = ur_bound_from_profile(&profile, bs.len() as f64)?;
        t.meta(
            "ur_bound",
            s.components().iter().map(|&x| num(x)).collect::<Vec<Value>>(),
        );
        Some(s.components().to_vec())
    } else {
        None
    };
    for (k, r) in results.iter().enumerate() {
        t.push(vec![
            r.l.into(),
            r.value.into(),
            r.value_bar.into(),
            ur.as_ref().map(|s| s[k]).into(),
            selection_text(r).into(),
        ]);
    }
    Ok(t)
}

fn cmd_bounds(d: Option<usize>, n: Option<usize>, mub: bool, path: Option<&Path>, range: &LRange) -> CliResult<Table> {
    let profiles: Vec<BoundsProfile> = if mub {
        let (d, n) = (d.unwrap_or_default(), n.unwrap_or_default());
        match range.l {
            Some(l) => vec![bounds_mub(l, d, n)?],
            None => bounds_profile_mub(d, n)?,
        }
    } else {
        let path = path.ok_or_else(|| CliError::Usage("give --mub or --bases".into()))?;
        let bs = load_basis_set(path)?;
        if d.is_some_and(|d| d != bs.dim()) || n.is_some_and(|n| n != bs.len()) {
            return Err(CliError::Core(Error::Validation(format!(
                "--d/--n disagree with the file ({} bases in dimension {})",
                bs.len(),
                bs.dim()
            ))));
        }
        match range.l {
            Some(l) => vec![bounds_general(&bs, l)?],
            None => bounds_profile_general(&bs)?,
        }
    };
    let mut t = Table::new(
        "bounds",
        &[
            "l",
            "theta",
            "gamma",
            "lambda",
            "theta_bar",
            "gamma_bar",
            "lambda_bar",
            "regime",
        ],
    );
    for p in profiles {
        let regime = serde_json::to_value(p.regime).expect("serializable");
        t.push(vec![
            p.l.into(),
            p.theta.into(),
            p.gamma.into(),
            p.lambda.into(),
            p.theta_bar.into(),
            p.gamma_bar.into(),
            p.lambda_bar.into(),
            regime.as_str().unwrap_or_default().into(),
        ]);
    }
    Ok(t)
}

fn report_row(r: &ThresholdReport) -> Vec<Cell> {
    let family = serde_json::to_value(r.family).expect("serializable");
    vec![
        family.as_str().unwrap_or_default().into(),
        r.d.into(),
        r.n.into(),
        r.source.name().into(),
        r.value.into(),
        r.capped.into(),
        r.reference_constant.into(),
    ]
}

fn cmd_threshold(
    family: FamilyArg,
    d_min: usize,
    d_max: usize,
    n: usize,
    source: SourceArg,
    symmetry_reduction: bool,
) -> CliResult<Table> {
    let family = family.family();
    if family == Family::TwoQubitWerner && (d_min != 2 || d_max != 2) {
        return Err(CliError::Core(Error::Validation(
            "the two-qubit family needs --d 2".into(),
        )));
    }
    if d_max < d_min {
        return Err(CliError::Usage(format!("--d-max {d_max} is below --d {d_min}")));
    }
    let sources: &[BoundSource] = match source {
        SourceArg::Exact => &[BoundSource::Exact],
        SourceArg::Gamma => &[BoundSource::Gamma],
        SourceArg::Theta => &[BoundSource::Theta],
        SourceArg::Lambda => &[BoundSource::Lambda],
        SourceArg::All => &[
            BoundSource::Exact,
            BoundSource::Gamma,
            BoundSource::Theta,
            BoundSource::Lambda,
        ],
    };
    let opts = OmegaOptions { symmetry_reduction };
    let columns: Vec<&'static str> = ThresholdReport::CSV_HEADER.split(',').collect();
    let mut t = Table::new("threshold", &columns);
    for d in d_min..=d_max {
        for &s in sources {
            let r = match s {
                BoundSource::Exact => exact_threshold(family, d, n, &opts)?,
                _ => bound_threshold(family, d, n, s)?,
            };
            t.push(report_row(&r));
        }
    }
    Ok(t)
}

fn cmd_witness(
    spec: &str,
    bases: &Path,
    bases_a: Option<&Path>,
    strategy: Option<StrategyArg>,
    symmetry_reduction: bool,
) -> CliResult<Table> {
    let parsed = parse_state_spec(spec).map_err(|e| match e {
        Error::Validation(m) => CliError::Usage(m),
        other => CliError::Core(other),
    })?;
    let bs = load_basis_set(bases)?;
    let opts = OmegaOptions { symmetry_reduction };
    let (verdict, label) = match bases_a {
        Some(pa) => {
            let a = load_basis_set(pa)?;
            (witness(&parsed.state, &a, &bs)?, "explicit")
        }
        None => {
            let (s, label) = match strategy {
                Some(StrategyArg::Identity) => (Strategy::Identity, "identity"),
                Some(StrategyArg::ConjugateBob) => (Strategy::ConjugateBob, "conjugate_bob"),
                Some(StrategyArg::SvdAligned) => (Strategy::SvdAligned, "svd_aligned"),
                None => {
                    let s = Strategy::for_family(parsed.family);
                    let label = match s {
                        Strategy::ConjugateBob => "conjugate_bob",
                        Strategy::SvdAligned => "svd_aligned",
                        _ => "identity",
                    };
                    (s, label)
                }
            };
            (witness_with(&parsed.state, &bs, &s, &opts)?, label)
        }
    };
    let mut t = Table::new("witness", &["l", "s", "omega_bar", "exceeds"]);
    t.meta("steerable", verdict.steerable);
    t.meta("best_l", verdict.best_l);
    t.meta("margin", num(verdict.margin));
    t.meta("strategy", label);
    for (k, (s, o)) in verdict.s_profile.iter().zip(&verdict.omega_bar_profile).enumerate() {
        t.push(vec![(k + 2).into(), (*s).into(), (*o).into(), (s - o > 1e-9).into()]);
    }
    Ok(t)
}

fn cmd_optimize(
    family: SearchFamily,
    d: usize,
    n_min: usize,
    n_max: usize,
    args: &CemArgs,
    out_dir: Option<&Path>,
) -> CliResult<Table> {
    let family = match family {
        SearchFamily::Isotropic => Family::Isotropic,
        SearchFamily::Werner => Family::Werner,
    };
    let name = match family {
        Family::Werner => "werner",
        _ => "isotropic",
    };
    if n_max < n_min {
        return Err(CliError::Usage(format!("--n-max {n_max} is below --n {n_min}")));
    }
    let config = args.config();
    let objective = match args.objective {
        ObjectiveArg::OmegaBar => CemObjective::OmegaBar,
        ObjectiveArg::TrX2 => CemObjective::TrX2Relaxation,
    };
    if let Some(dir) = out_dir {
        fs::create_dir_all(dir).map_err(|source| Error::Io {
            path: dir.to_path_buf(),
            source,
        })?;
    }
    let mut t = Table::new(
        "optimize",
        &[
            "family",
            "d",
            "N",
            "L",
            "omega_bar",
            "threshold",
            "capped",
            "evaluations",
            "settings",
        ],
    );
    t.meta("seed", args.seed);
    for n in n_min..=n_max {
        let l = family_l(family, d, n);
        let res = cem_minimize(d, n, l, &config, objective)?;
        let threshold = threshold_from_omega_bar(family, d, res.best_omega_bar)?;
        let settings = match out_dir {
            Some(dir) => {
                let p = dir.join(format!("{name}_d{d}_n{n}.json"));
                save_basis_set(&res.best_basis_set, &p)?;
                Cell::Text(p.display().to_string())
            }
            None => Cell::Empty,
        };
        t.push(vec![
            name.into(),
            d.into(),
            n.into(),
            l.into(),
            res.best_omega_bar.into(),
            threshold.into(),
            (threshold >= 1.0 - CAP_TOL).into(),
            res.evaluations.into(),
            settings,
        ]);
    }
    if let Some(dir) = out_dir {
        let p = dir.join(format!("{name}_d{d}_thresholds.csv"));
        fs::write(&p, t.render(Format::Csv)).map_err(|source| Error::Io { path: p, source })?;
    }
    Ok(t)
}

fn cmd_limit(scenario: ScenarioArg, grid: usize) -> CliResult<Table> {
    let (sc, name) = match scenario {
        ScenarioArg::Hemisphere => (Scenario::Hemisphere, "hemisphere"),
        ScenarioArg::HalfPlane => (Scenario::HalfPlane, "half_plane"),
    };
    let value = infinite_settings_limit(sc, grid)?;
    let mut t = Table::new("limit", &["scenario", "grid", "omega_over_n"]);
    t.push(vec![name.into(), grid.into(), value.into()]);
    Ok(t)
}
