//! Experiment runner CLI: one subcommand per experiment kind, plus
//! `validate-config` and `all`. Outputs land under
//! `<out>/<experiment>/<confighash>/{table.csv, summary.json, fields/*.bin}`.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use scnls::harness::{
    config::{default_config, ExperimentConfig, ExperimentKind},
    emit_reports,
    experiments::run_experiment,
    report::print_outcome,
};

#[derive(Parser)]
#[command(name = "scnls", version, about = "semiclassical NLS experiment runner")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct RunArgs {
    /// Experiment config file (flat JSON); defaults are used when omitted
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory root
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads for sweep cells (default: all cores)
    #[arg(long)]
    workers: Option<usize>,
    /// Override the step-size rule with a fixed dt
    #[arg(long)]
    dt_override: Option<f64>,
    /// Smoke-test mode: halve the grid and truncate the eps sweep
    #[arg(long)]
    quick: bool,
}

#[derive(Subcommand, Clone)]
enum Command {
    /// Boundary-layer profile comparison inside |t| <= lambda*eps
    InsideLayer(RunArgs),
    /// Comparison against the linear evolution of scattering data past the layer
    BeyondLayer(RunArgs),
    /// Single-time matching defect at t = lambda*eps
    Matching(RunArgs),
    /// Moving-frame equivalence for concentration at (x0, xi0)
    MovingFrame(RunArgs),
    /// Layer asymptotics for general subquadratic time-dependent potentials
    GeneralSubquadratic(RunArgs),
    /// Mass/energy/observable-norm conservation checks
    ConservationSuite(RunArgs),
    /// Commutator rigidity: quadratic potentials vs a quartic counterexample
    RigidityDemo(RunArgs),
    /// L^r amplification slopes and dispersion-integral scaling checks
    DispersionSuite(RunArgs),
    /// Parse, resolve and validate a config, echoing the canonical potential
    ValidateConfig {
        #[arg(long)]
        config: PathBuf,
    },
    /// Run every experiment kind with its default (or overridden) config
    All(RunArgs),
}

fn load_config(kind: ExperimentKind, args: &RunArgs) -> Result<ExperimentConfig, String> {
    let mut cfg = match &args.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| format!("cannot read {}: {e}", path.display()))?;
            let cfg = ExperimentConfig::from_json(&text).map_err(|e| e.to_string())?;
            if cfg.experiment != kind {
                return Err(format!(
                    "config declares experiment '{}' but the subcommand asked for '{}'",
                    cfg.experiment.as_str(),
                    kind.as_str()
                ));
            }
            cfg
        }
        None => default_config(kind),
    };
    if let Some(dt) = args.dt_override {
        cfg.dt_override = Some(dt);
    }
    if let Some(out) = &args.out {
        cfg.out_dir = out.display().to_string();
    }
    if args.quick {
        cfg = cfg.quick();
    }
    Ok(cfg)
}

fn set_workers(args: &RunArgs) {
    if let Some(k) = args.workers {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(k).build_global() {
            eprintln!("note: worker pool already initialized ({e})");
        }
    }
}

fn run_one(kind: ExperimentKind, args: &RunArgs) -> Result<bool, String> {
    let cfg = load_config(kind, args)?;
    let record = run_experiment(&cfg).map_err(|e| e.to_string())?;
    let out_root = PathBuf::from(&cfg.out_dir);
    let dir = emit_reports(&record, &out_root).map_err(|e| e.to_string())?;
    print_outcome(&record);
    println!("wrote {}", dir.display());
    Ok(record.passed())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::InsideLayer(a) => dispatch(ExperimentKind::InsideLayer, a),
        Command::BeyondLayer(a) => dispatch(ExperimentKind::BeyondLayer, a),
        Command::Matching(a) => dispatch(ExperimentKind::Matching, a),
        Command::MovingFrame(a) => dispatch(ExperimentKind::MovingFrame, a),
        Command::GeneralSubquadratic(a) => dispatch(ExperimentKind::GeneralSubquadratic, a),
        Command::ConservationSuite(a) => dispatch(ExperimentKind::ConservationSuite, a),
        Command::RigidityDemo(a) => dispatch(ExperimentKind::RigidityDemo, a),
        Command::DispersionSuite(a) => dispatch(ExperimentKind::DispersionSuite, a),
        Command::ValidateConfig { config } => validate(config),
        Command::All(a) => run_all(a),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

fn dispatch(kind: ExperimentKind, args: &RunArgs) -> Result<bool, String> {
    set_workers(args);
    run_one(kind, args)
}

fn validate(path: &PathBuf) -> Result<bool, String> {
    let text =
        std::fs::read_to_string(path).map_err(|e| format!("cannot read {}: {e}", path.display()))?;
    let cfg = ExperimentConfig::from_json(&text).map_err(|e| e.to_string())?;
    let notes = cfg.validate().map_err(|e| e.to_string())?;
    println!("config ok: {}", cfg.experiment.as_str());
    println!("hash: {}", cfg.hash());
    let (_, echo) = cfg.potential().map_err(|e| e.to_string())?;
    println!(
        "canonical potential: {}",
        serde_json::to_string_pretty(&echo).map_err(|e| e.to_string())?
    );
    for n in notes {
        println!("note: {n}");
    }
    println!("{}", cfg.to_canonical_json());
    Ok(true)
}

fn run_all(args: &RunArgs) -> Result<bool, String> {
    set_workers(args);
    if args.config.is_some() {
        return Err("`all` runs the built-in default configs; pass --config to a single subcommand instead".into());
    }
    let mut all_pass = true;
    for kind in ExperimentKind::all() {
        println!("=== {} ===", kind.as_str());
        // sanity mode precedes the main mode for layer experiments
        if matches!(
            kind,
            ExperimentKind::InsideLayer | ExperimentKind::BeyondLayer
        ) {
            let mut sanity = default_config(kind);
            match kind {
                ExperimentKind::InsideLayer => {
                    sanity.potential_delta = vec![0];
                    sanity.potential_omega = vec![1.0];
                    sanity.potential_b = vec![0.0];
                }
                _ => sanity.nonlinearity_on = false,
            }
            if let Some(out) = &args.out {
                sanity.out_dir = out.display().to_string();
            }
            if args.quick {
                sanity = sanity.quick();
            }
            let record = run_experiment(&sanity).map_err(|e| e.to_string())?;
            emit_reports(&record, &PathBuf::from(&sanity.out_dir)).map_err(|e| e.to_string())?;
            print_outcome(&record);
            if !record.passed() {
                println!("sanity mode failed; skipping main mode of {}", kind.as_str());
                all_pass = false;
                continue;
            }
        }
        match run_one(kind, args) {
            Ok(pass) => all_pass &= pass,
            Err(e) => {
                eprintln!("{} failed: {e}", kind.as_str());
                all_pass = false;
            }
        }
    }
    Ok(all_pass)
}
