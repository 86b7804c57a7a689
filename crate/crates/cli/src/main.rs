mod output;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use triplet_odmr::experiments::{
    analyse, run_preset, run_sequence, Axis, ExperimentConfig, ExperimentError, Preset,
};
use triplet_odmr::sensitivity::{
    eta_v, profile, sweep_eta, SensingMode, SensingParams, SweepAxis, PROFILE_NAMES,
};
use triplet_odmr::seqlang::{parse, SequenceAst};

use output::Sidecar;

/// Seed used when `--seed` is not given.
const DEFAULT_SEED: u64 = 1;

#[derive(Debug)]
pub struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    /// Bad config, sequence or parameters: exit 2.
    pub fn input(message: impl Into<String>) -> Self {
        Self {
            code: 2,
            message: message.into(),
        }
    }

    pub fn io(message: impl Into<String>) -> Self {
        Self {
            code: 1,
            message: message.into(),
        }
    }
}

impl From<ExperimentError> for Failure {
    fn from(e: ExperimentError) -> Self {
        Failure::input(e.to_string())
    }
}

#[derive(Parser)]
#[command(
    name = "sim",
    version,
    about = "Simulate optically detected magnetic resonance of photoexcited triplets"
)]
struct Cli {
    /// Worker threads for sweep points (default: all cores). Output does not depend on it.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a preset experiment and fit it.
    Experiment(ExperimentArgs),
    /// Run a pulse sequence file.
    Run(RunArgs),
    /// Volume-normalised magnetic sensitivity.
    Sensitivity(SensitivityArgs),
    /// Parse a sequence or config file without running it.
    Validate { file: PathBuf },
}

#[derive(Args)]
struct ExperimentArgs {
    /// Preset name, e.g. rabi, chevron, hahn.
    name: Option<String>,
    #[arg(long, conflicts_with = "name")]
    preset: Option<String>,
    /// TOML config, or a JSON sidecar from an earlier run.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, default_value = ".")]
    out: PathBuf,
    /// Noise seed [default: 1, or the sidecar's seed].
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct RunArgs {
    /// Sequence file (.pseq). May be omitted when --config is a sidecar.
    file: Option<PathBuf>,
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, default_value = ".")]
    out: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
#[command(allow_negative_numbers = true)]
struct SensitivityArgs {
    /// Built-in parameter set: film, crystal or projected.
    #[arg(long)]
    profile: Option<String>,
    /// Config with a [sensing] section.
    #[arg(long, conflicts_with = "profile")]
    config: Option<PathBuf>,
    #[arg(long, default_value = "dc")]
    mode: String,
    #[arg(long)]
    contrast: Option<f64>,
    /// Dopant concentration (mol/mol).
    #[arg(long)]
    concentration: Option<f64>,
    #[arg(long)]
    photons: Option<f64>,
    /// Overhead per measurement (s).
    #[arg(long)]
    overhead: Option<f64>,
    /// Coherence time (s): T2* for dc, T2 for ac.
    #[arg(long)]
    coherence: Option<f64>,
    /// Parameter to sweep: contrast, concentration, photons, overhead or coherence.
    #[arg(long, requires_all = ["from", "to", "steps"])]
    sweep: Option<String>,
    #[arg(long)]
    from: Option<f64>,
    #[arg(long)]
    to: Option<f64>,
    #[arg(long)]
    steps: Option<usize>,
    /// Write the sweep table as CSV here instead of stdout.
    #[arg(long, requires = "sweep")]
    out: Option<PathBuf>,
}

fn in_pool<T: Send>(jobs: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T, Failure> {
    match jobs {
        None => Ok(f()),
        Some(0) => Err(Failure::input("--jobs must be at least 1")),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map(|pool| pool.install(f))
            .map_err(|e| Failure::io(e.to_string())),
    }
}

fn load_config(path: Option<&Path>) -> Result<ExperimentConfig, Failure> {
    match path {
        None => Ok(ExperimentConfig::default()),
        Some(p) => ExperimentConfig::load(p).map_err(|e| Failure::input(e.to_string())),
    }
}

fn experiment(args: ExperimentArgs, jobs: Option<usize>) -> Result<u8, Failure> {
    let from_sidecar = args.config.as_deref().filter(|p| output::is_sidecar(p));
    let (cfg, name, seed) = match from_sidecar {
        Some(p) => {
            let s = Sidecar::load(p)?;
            let name = args.name.or(args.preset).or(s.preset);
            (s.config, name, args.seed.unwrap_or(s.seed))
        }
        None => (
            load_config(args.config.as_deref())?,
            args.name.or(args.preset),
            args.seed.unwrap_or(DEFAULT_SEED),
        ),
    };
    let name = name.ok_or_else(|| {
        let names: Vec<&str> = Preset::ALL.iter().map(|p| p.name()).collect();
        Failure::input(format!(
            "no preset given; choose one of {}",
            names.join(", ")
        ))
    })?;
    let preset: Preset = name.parse()?;
    let trace = in_pool(jobs, || run_preset(&cfg, preset, seed))??;
    let fits = analyse(&trace, &cfg);
    let sidecar = Sidecar {
        command: "experiment".into(),
        name: preset.name().into(),
        preset: Some(preset.name().into()),
        seed,
        sequence: preset.sequence_text(&cfg)?,
        columns: trace.columns.iter().map(|c| c.header()).collect(),
        points: trace.len(),
        fits,
        config: cfg,
    };
    let csv = output::write(&args.out, &trace, &sidecar)?;
    for fit in &sidecar.fits {
        let values: Vec<String> = fit
            .derived
            .iter()
            .map(|(k, v)| format!("{k} = {v:.6}"))
            .collect();
        println!("{}: {}", fit.label, values.join(", "));
    }
    let failed: Vec<&str> = sidecar
        .fits
        .iter()
        .filter(|f| !f.converged())
        .map(|f| f.label.as_str())
        .collect();
    if failed.is_empty() {
        Ok(0)
    } else {
        eprintln!(
            "warning: fit did not converge for {}; data written to {}",
            failed.join(", "),
            csv.display()
        );
        Ok(3)
    }
}

fn parse_file(path: &Path) -> Result<(String, SequenceAst), Failure> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::input(format!("{}: {e}", path.display())))?;
    let ast = parse(&text).map_err(|e| Failure::input(format!("{}: {e}", path.display())))?;
    Ok((text, ast))
}

fn run(args: RunArgs, jobs: Option<usize>) -> Result<u8, Failure> {
    let sidecar = args
        .config
        .as_deref()
        .filter(|p| output::is_sidecar(p))
        .map(Sidecar::load)
        .transpose()?;
    let (cfg, name, text, ast, seed) = match (args.file, sidecar) {
        (Some(file), sidecar) => {
            let (text, ast) = parse_file(&file)?;
            let name = file
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| "sequence".into());
            let (cfg, seed) = match sidecar {
                Some(s) => (s.config, args.seed.unwrap_or(s.seed)),
                None => (
                    load_config(args.config.as_deref())?,
                    args.seed.unwrap_or(DEFAULT_SEED),
                ),
            };
            (cfg, name, text, ast, seed)
        }
        (None, Some(s)) => {
            let text = s
                .sequence
                .ok_or_else(|| Failure::input("sidecar holds no sequence"))?;
            let ast = parse(&text).map_err(|e| Failure::input(format!("sidecar sequence: {e}")))?;
            (s.config, s.name, text, ast, args.seed.unwrap_or(s.seed))
        }
        (None, None) => return Err(Failure::input("no sequence file given")),
    };
    let axes: Vec<Axis> = ast
        .sweeps
        .iter()
        .map(|s| Axis::new(s.symbol.trim_start_matches('$'), ""))
        .collect();
    let trace = in_pool(jobs, || run_sequence(&cfg, &name, &ast, &axes, seed))??;
    let sidecar = Sidecar {
        command: "run".into(),
        name,
        preset: None,
        seed,
        sequence: Some(text),
        columns: trace.columns.iter().map(|c| c.header()).collect(),
        points: trace.len(),
        fits: Vec::new(),
        config: cfg,
    };
    output::write(&args.out, &trace, &sidecar)?;
    println!("{} points", trace.len());
    Ok(0)
}

fn sensitivity(args: SensitivityArgs) -> Result<u8, Failure> {
    let bad = |e: &dyn std::fmt::Display| Failure::input(e.to_string());
    let mode: SensingMode = args.mode.parse().map_err(|e| bad(&e))?;
    let mut params: SensingParams = match (&args.profile, &args.config) {
        (Some(name), _) => profile(name, mode).map_err(|e| bad(&e))?,
        (None, Some(path)) => {
            let cfg = ExperimentConfig::load(path).map_err(|e| bad(&e))?;
            let section = cfg.sensing.ok_or_else(|| {
                Failure::input(format!("{}: no [sensing] section", path.display()))
            })?;
            SensingParams::from_section(&section, mode).map_err(|e| bad(&e))?
        }
        (None, None) => {
            return Err(Failure::input(format!(
                "give --profile ({}) or --config with a [sensing] section",
                PROFILE_NAMES.join(", ")
            )))
        }
    };
    let overrides = [
        (SweepAxis::Contrast, args.contrast),
        (SweepAxis::Concentration, args.concentration),
        (SweepAxis::Photons, args.photons),
        (SweepAxis::Overhead, args.overhead),
        (SweepAxis::Coherence, args.coherence),
    ];
    for (axis, value) in overrides {
        if let Some(v) = value {
            params = params.with(axis, v);
        }
    }
    let result = eta_v(&params).map_err(|e| bad(&e))?;
    println!(
        "eta_v ({mode}) = {:.4} nT um^3/2 Hz^-1/2 (spin density {:.4e} um^-3)",
        result.eta_v_nt(),
        result.spin_density
    );
    let Some(axis_name) = args.sweep else {
        return Ok(0);
    };
    let axis: SweepAxis = axis_name.parse().map_err(|e| bad(&e))?;
    let (from, to, steps) = (args.from.unwrap(), args.to.unwrap(), args.steps.unwrap());
    if steps == 0 {
        return Err(Failure::input("--steps must be at least 1"));
    }
    let values: Vec<f64> = (0..steps)
        .map(|k| {
            if steps == 1 {
                from
            } else {
                from + (to - from) * k as f64 / (steps - 1) as f64
            }
        })
        .collect();
    let table = sweep_eta(&params, axis, &values).map_err(|e| bad(&e))?;
    let mut csv = format!("{axis_name},eta_v_nT\n");
    for (v, r) in table {
        csv.push_str(&format!("{v:e},{:e}\n", r.eta_v_nt()));
    }
    match args.out {
        Some(path) => std::fs::write(&path, csv)
            .map_err(|e| Failure::io(format!("{}: {e}", path.display())))?,
        None => print!("{csv}"),
    }
    Ok(0)
}

fn validate(file: &Path) -> Result<u8, Failure> {
    if file.extension().is_some_and(|e| e == "pseq") {
        let (_, ast) = parse_file(file)?;
        println!(
            "{}: ok, {} tones, {} statements, {} sweep points",
            file.display(),
            ast.tones.len(),
            ast.statements.len(),
            ast.cardinality()
        );
    } else if output::is_sidecar(file) {
        Sidecar::load(file)?;
        println!("{}: ok", file.display());
    } else {
        ExperimentConfig::load(file).map_err(|e| Failure::input(e.to_string()))?;
        println!("{}: ok", file.display());
    }
    Ok(0)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Experiment(a) => experiment(a, cli.jobs),
        Command::Run(a) => run(a, cli.jobs),
        Command::Sensitivity(a) => sensitivity(a),
        Command::Validate { file } => validate(&file),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
