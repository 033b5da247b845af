use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use aokr::epsmap::PortraitGrid;
use aokr::scan::{self, PortraitSpec, ScanSpec};
use aokr::theory::{self, DiffusionInputs, PeakModel, Regime};
use aokr::{Error, Result};

/// Atom-optics kicked rotor simulations with pulse-train noise.
#[derive(Parser)]
#[command(name = "aokr", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Energy curve over hbar, epsilon or kick period.
    Scan(ScanArgs),
    /// Phase portrait of the epsilon-classical map.
    Portrait(PortraitArgs),
    /// Diffusion rates and resonance heights from the closed forms.
    Predict(PredictArgs),
    /// Kick strength from a measured resonance energy.
    ExtractK(ExtractArgs),
}

#[derive(Args)]
struct ScanArgs {
    /// TOML scan configuration; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output CSV; a JSON sidecar is written next to it. Defaults to stdout.
    #[arg(long, short)]
    out: Option<PathBuf>,
    /// quantum, eps-classical or theory.
    #[arg(long)]
    engine: Option<String>,
    /// hbar, epsilon or period-us.
    #[arg(long)]
    abscissa: Option<String>,
    #[arg(long, num_args = 2, value_names = ["LO", "HI"], allow_negative_numbers = true)]
    range: Option<Vec<f64>>,
    #[arg(long)]
    step: Option<f64>,
    /// Kick strength kappa / hbar.
    #[arg(long)]
    k: Option<f64>,
    /// none, amplitude, period or se.
    #[arg(long)]
    noise: Option<String>,
    /// Comma-separated noise levels.
    #[arg(long, value_delimiter = ',')]
    levels: Option<Vec<f64>>,
    #[arg(long)]
    kicks: Option<usize>,
    #[arg(long)]
    realizations: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    resonance: Option<u32>,
    #[arg(long)]
    se_probability: Option<f64>,
    #[arg(long)]
    atoms: Option<usize>,
    #[arg(long)]
    cutoff: Option<usize>,
    #[arg(long)]
    detection_window: Option<f64>,
}

#[derive(Args)]
struct PortraitArgs {
    #[arg(long, allow_negative_numbers = true)]
    epsilon: f64,
    #[arg(long, default_value_t = 3.7)]
    k: f64,
    /// Amplitude noise level.
    #[arg(long, default_value_t = 0.0)]
    level: f64,
    #[arg(long, default_value_t = 0.0)]
    beta: f64,
    #[arg(long, default_value_t = 200)]
    iters: usize,
    #[arg(long, default_value_t = 12)]
    n_phi: usize,
    #[arg(long, default_value_t = 12)]
    n_rho: usize,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    rho_min: f64,
    #[arg(long, default_value_t = std::f64::consts::TAU, allow_negative_numbers = true)]
    rho_max: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, short)]
    out: PathBuf,
}

#[derive(Args)]
struct PredictArgs {
    #[arg(long)]
    hbar: f64,
    /// Kick strength kappa / hbar.
    #[arg(long)]
    k: f64,
    /// Amplitude noise level.
    #[arg(long, default_value_t = 0.0)]
    level: f64,
    #[arg(long, default_value_t = 20)]
    kicks: u32,
}

#[derive(Args)]
struct ExtractArgs {
    /// Mean energy at the resonance peak.
    #[arg(long)]
    energy: f64,
    #[arg(long, default_value_t = 20)]
    kicks: u32,
    /// Amplitude noise level, 0 or 2.
    #[arg(long, default_value_t = 0.0)]
    level: f64,
}

fn set<T: Into<toml::Value>>(table: &mut toml::Table, key: &str, value: Option<T>) {
    if let Some(v) = value {
        table.insert(key.to_string(), v.into());
    }
}

/// Defaults come from the spec types, the config file overrides them, and
/// flags override the file.
fn resolve_scan(args: &ScanArgs) -> Result<ScanSpec> {
    let mut table = match &args.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
                path: path.clone(),
                source,
            })?;
            text.parse::<toml::Table>().map_err(|e| Error::Parse {
                path: path.clone(),
                message: e.to_string(),
            })?
        }
        None => toml::Table::new(),
    };
    set(&mut table, "engine", args.engine.clone());
    set(&mut table, "abscissa", args.abscissa.clone());
    set(&mut table, "range", args.range.clone());
    set(&mut table, "step", args.step);
    set(&mut table, "k", args.k);
    set(&mut table, "noise", args.noise.clone());
    set(&mut table, "levels", args.levels.clone());
    set(&mut table, "kicks", args.kicks.map(|v| v as i64));
    set(
        &mut table,
        "realizations",
        args.realizations.map(|v| v as i64),
    );
    set(&mut table, "seed", args.seed.map(|v| v as i64));
    set(&mut table, "resonance", args.resonance.map(i64::from));
    set(&mut table, "se_probability", args.se_probability);
    if args.atoms.is_some() || args.cutoff.is_some() || args.detection_window.is_some() {
        let entry = table
            .entry("ensemble")
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        let ensemble = entry.as_table_mut().ok_or_else(|| Error::Config {
            field: "ensemble".into(),
            reason: "must be a table".into(),
        })?;
        set(ensemble, "atoms", args.atoms.map(|v| v as i64));
        set(ensemble, "cutoff", args.cutoff.map(|v| v as i64));
        set(ensemble, "detection_window", args.detection_window);
    }
    let path = args.config.clone().unwrap_or_else(|| "<flags>".into());
    scan::parse_config(&table.to_string()).map_err(|e| match e {
        Error::Parse { message, .. } => Error::Parse { path, message },
        other => other,
    })
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Scan(args) => {
            let spec = resolve_scan(&args)?;
            let curve = scan::run_scan(&spec)?;
            match &args.out {
                Some(path) => {
                    scan::write_curve(&curve, path)?;
                    log::info!("wrote {}", path.display());
                }
                None => print_stdout(&curve.to_csv()?)?,
            }
        }
        Command::Portrait(a) => {
            let spec = PortraitSpec {
                epsilon: a.epsilon,
                k: a.k,
                level: a.level,
                beta: a.beta,
                grid: PortraitGrid {
                    n_phi: a.n_phi,
                    n_rho: a.n_rho,
                    rho_min: a.rho_min,
                    rho_max: a.rho_max,
                },
                iters: a.iters,
                seed: a.seed,
            };
            let n = scan::run_portrait(&spec, &a.out)?;
            log::info!("wrote {n} points to {}", a.out.display());
        }
        Command::Predict(a) => {
            let kappa = a.k * a.hbar;
            let rate = |regime| {
                theory::diffusion_rate_with_noise(
                    &DiffusionInputs::new(kappa, a.hbar, regime).with_amplitude_noise(a.level),
                )
            };
            let mut doc = json!({
                "hbar": a.hbar,
                "k": a.k,
                "kappa": kappa,
                "kappa_q": theory::quantum_kick_strength(kappa, a.hbar),
                "amplitude_level": a.level,
                "d_classical": rate(Regime::Classical)?,
                "d_quantum": rate(Regime::Quantum)?,
                "quasilinear_energy": theory::resonance_height(a.k, a.kicks, PeakModel::Quasilinear),
            });
            if let Ok(model) = PeakModel::from_amplitude_level(a.level) {
                doc["resonance_energy"] = json!(theory::resonance_height(a.k, a.kicks, model));
            }
            print_stdout(&format!("{}\n", serde_json::to_string_pretty(&doc)?))?;
        }
        Command::ExtractK(a) => {
            let model = PeakModel::from_amplitude_level(a.level)?;
            let k = theory::extract_k_from_energy(a.energy, a.kicks, model)?;
            print_stdout(&format!("{k}\n"))?;
        }
    }
    Ok(())
}

fn print_stdout(text: &str) -> Result<()> {
    std::io::stdout()
        .lock()
        .write_all(text.as_bytes())
        .map_err(|source| Error::Io {
            path: "<stdout>".into(),
            source,
        })
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            log::error!("{e}");
            ExitCode::from(if e.is_validation() { 1 } else { 2 })
        }
    }
}
