//! `qresponse`: run response-theory experiments described by a config file.

mod config;
mod error;
mod output;
mod tasks;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use qresponse::dynamics::DriveProtocol;
use qresponse::model::SystemSpec;
use qresponse::thermal::ThermalState;
use qresponse::tolerance::ToleranceProfile;

use config::{ExperimentConfig, Format, KkModel, TaskConfig};
use error::CliError;
use output::{standard_metadata, Emitter};

#[derive(Parser, Debug)]
#[command(name = "qresponse", version, about = "Exact-diagonalization response theory experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
struct Common {
    /// Experiment config (TOML, or JSON if it starts with `{`).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory (overrides `output.dir`).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Output encoding (overrides `output.format`).
    #[arg(long, value_enum)]
    format: Option<Format>,
    /// Threshold bundle used for pass/fail flags.
    #[arg(long, value_enum, default_value_t = Profile::Strict)]
    tolerance_profile: Profile,
    /// Print the normalized config and exit.
    #[arg(long)]
    dump_config: bool,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Profile {
    Strict,
    Numeric,
}

impl Profile {
    fn name(self) -> &'static str {
        match self {
            Profile::Strict => "strict",
            Profile::Numeric => "numeric",
        }
    }
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run every task in the config.
    Run {
        #[command(flatten)]
        common: Common,
    },
    /// Spectral function and one generalized covariance as delta-comb lines.
    Spectrum {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        f: Option<String>,
        #[arg(long)]
        m: Option<usize>,
        #[arg(long)]
        n: Option<usize>,
    },
    /// Delayed linear response and relaxation function in time.
    Respond {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        m: Option<usize>,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        t_max: Option<f64>,
        #[arg(long)]
        points: Option<usize>,
    },
    /// Isothermal and isolated static susceptibilities with the Suzuki term.
    StaticSusc {
        #[command(flatten)]
        common: Common,
    },
    /// Per-line fluctuation-dissipation ratios.
    FdrCheck {
        #[command(flatten)]
        common: Common,
        /// Function tags, comma separated (default: the whole whitelist).
        #[arg(long, value_delimiter = ',')]
        f: Vec<String>,
        #[arg(long)]
        m: Option<usize>,
        #[arg(long)]
        n: Option<usize>,
    },
    /// Volterra prediction errors against exact propagation and fitted exponents.
    VolterraCheck {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_delimiter = ',')]
        orders: Vec<usize>,
        #[arg(long, value_delimiter = ',')]
        amplitudes: Vec<f64>,
    },
    /// Two-point-measurement work distribution, Jarzynski and optionally Crooks.
    WorkStats {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        crooks: bool,
    },
    /// Kramers-Kronig reconstruction on a frequency grid.
    Kk {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum)]
        model: Option<KkKind>,
        #[arg(long)]
        half_width: Option<f64>,
        #[arg(long)]
        points: Option<usize>,
    },
    /// RC circuit and damped oscillator in time and frequency.
    ReferenceModels {
        #[command(flatten)]
        common: Common,
    },
    /// Diffusive current response with Ward-identity residuals.
    FluidCurrent {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        sigma: Option<f64>,
        #[arg(long = "D", alias = "d")]
        d: Option<f64>,
        #[arg(long)]
        tau: Option<f64>,
        #[arg(long)]
        points: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
    },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum KkKind {
    Lorentzian,
    Rc,
    Oscillator,
    Response,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.record());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn load(common: &Common) -> Result<ExperimentConfig, CliError> {
    let mut cfg = match &common.config {
        Some(path) => config::load(path)?,
        None => ExperimentConfig::default(),
    };
    if let Some(dir) = &common.out {
        cfg.output.dir = dir.to_string_lossy().into_owned();
    }
    if let Some(f) = common.format {
        cfg.output.format = f;
    }
    Ok(cfg)
}

/// The config's first task of this kind, or the default one.
fn pick(cfg: &ExperimentConfig, default: TaskConfig) -> TaskConfig {
    cfg.tasks.iter().find(|t| t.name() == default.name()).cloned().unwrap_or(default)
}

fn default_task(text: &str) -> TaskConfig {
    let value = toml::Value::try_from(toml::toml! { name = text }).expect("static toml");
    value.try_into().expect("every task has defaults")
}

fn execute(command: Command) -> Result<(), CliError> {
    let (common, task) = match command {
        Command::Run { common } => {
            let cfg = load(&common)?;
            if cfg.tasks.is_empty() {
                return Err(CliError::Validation { path: "tasks".into(), message: "no tasks to run".into() });
            }
            return finish(&common, cfg);
        }
        Command::Spectrum { common, f, m, n } => {
            let cfg = load(&common)?;
            let mut task = pick(&cfg, default_task("spectrum"));
            if let TaskConfig::Spectrum { f: tf, m: tm, n: tn, .. } = &mut task {
                override_with(tf, f);
                override_with(tm, m);
                override_with(tn, n);
            }
            (common, (cfg, task))
        }
        Command::Respond { common, m, n, t_max, points } => {
            let cfg = load(&common)?;
            let mut task = pick(&cfg, default_task("respond"));
            if let TaskConfig::Respond { m: tm, n: tn, t_max: tt, points: tp, .. } = &mut task {
                override_with(tm, m);
                override_with(tn, n);
                override_with(tt, t_max);
                override_with(tp, points);
            }
            (common, (cfg, task))
        }
        Command::StaticSusc { common } => {
            let cfg = load(&common)?;
            let task = pick(&cfg, default_task("static-susc"));
            (common, (cfg, task))
        }
        Command::FdrCheck { common, f, m, n } => {
            let cfg = load(&common)?;
            let mut task = pick(&cfg, default_task("fdr-check"));
            if let TaskConfig::FdrCheck { f: tf, m: tm, n: tn, .. } = &mut task {
                if !f.is_empty() {
                    *tf = f;
                }
                override_with(tm, m);
                override_with(tn, n);
            }
            (common, (cfg, task))
        }
        Command::VolterraCheck { common, orders, amplitudes } => {
            let mut cfg = load(&common)?;
            if common.config.is_none() {
                // A lone transverse source has no second-order response by parity.
                cfg.system = config::SystemConfig::Qubit { omega0: 1.0, z_source: true };
            }
            if cfg.protocol.is_none() {
                cfg.protocol = Some(default_pulse(&cfg)?);
            }
            let mut task = pick(&cfg, default_task("volterra-check"));
            if let TaskConfig::VolterraCheck { orders: to, amplitudes: ta, .. } = &mut task {
                if !orders.is_empty() {
                    *to = orders;
                }
                if !amplitudes.is_empty() {
                    *ta = amplitudes;
                }
            }
            (common, (cfg, task))
        }
        Command::WorkStats { common, crooks } => {
            let mut cfg = load(&common)?;
            if cfg.protocol.is_none() {
                cfg.protocol = Some(default_pulse(&cfg)?);
            }
            let mut task = pick(&cfg, default_task("work-stats"));
            if let TaskConfig::WorkStats { crooks: tc, .. } = &mut task {
                *tc |= crooks;
            }
            (common, (cfg, task))
        }
        Command::Kk { common, model, half_width, points } => {
            let cfg = load(&common)?;
            let mut task = pick(&cfg, default_task("kk"));
            if let TaskConfig::Kk { model: tm, half_width: th, points: tp, .. } = &mut task {
                if let Some(kind) = model {
                    *tm = match kind {
                        KkKind::Lorentzian => KkModel::Lorentzian { omega0: 0.0, gamma: 1.0 },
                        KkKind::Rc => KkModel::Rc { r: 1.0, c: 1.0 },
                        KkKind::Oscillator => KkModel::Oscillator { omega0: 1.0, zeta: 0.3 },
                        KkKind::Response => KkModel::Response { m: 0, n: 0, eta: 0.5 },
                    };
                }
                override_with(th, half_width);
                override_with(tp, points);
            }
            (common, (cfg, task))
        }
        Command::ReferenceModels { common } => {
            let cfg = load(&common)?;
            let task = pick(&cfg, default_task("reference-models"));
            (common, (cfg, task))
        }
        Command::FluidCurrent { common, sigma, d, tau, points, seed } => {
            let cfg = load(&common)?;
            let mut task = pick(&cfg, default_task("fluid-current"));
            if let TaskConfig::FluidCurrent { sigma: ts, d: td, tau: tt, points: tp, seed: tseed, .. } = &mut task {
                override_with(ts, sigma);
                override_with(td, d);
                override_with(tt, tau);
                override_with(tp, points);
                if seed.is_some() {
                    *tseed = seed;
                }
            }
            (common, (cfg, task))
        }
    };
    let (mut cfg, task) = task;
    cfg.tasks = vec![task];
    config::validate(&cfg)?;
    finish(&common, cfg)
}

fn override_with<T>(slot: &mut T, value: Option<T>) {
    if let Some(v) = value {
        *slot = v;
    }
}

/// Gaussian pulse on every source, centered in `[0, 8]`.
fn default_pulse(cfg: &ExperimentConfig) -> Result<config::ProtocolConfig, CliError> {
    let spec = config::build_system(&cfg.system)?;
    let sources = spec
        .labels()
        .iter()
        .zip(spec.j_init())
        .map(|(label, &j0)| config::SourceDrive {
            source: label.to_string(),
            waveform: config::WaveformConfig::Gaussian { base: j0, amp: 1.0, center: 4.0, width: 0.6 },
        })
        .collect();
    Ok(config::ProtocolConfig { t_i: 0.0, t_f: 8.0, steps: 4000, sources })
}

fn finish(common: &Common, cfg: ExperimentConfig) -> Result<(), CliError> {
    if common.dump_config {
        print!("{}", config::dump(&cfg));
        return Ok(());
    }
    let tolerance = ToleranceProfile::by_name(common.tolerance_profile.name()).expect("profile names match");
    let needs_system = cfg.tasks.iter().any(|t| t.uses_system());
    let spec: Option<SystemSpec> = if needs_system { Some(config::build_system(&cfg.system)?) } else { None };
    let protocol: Option<DriveProtocol> = match (&cfg.protocol, &spec) {
        (Some(p), Some(s)) => Some(config::build_protocol(p, s)?),
        _ => None,
    };
    let state: Option<ThermalState> = match &spec {
        Some(s) => Some(
            ThermalState::at_sources(s, s.j_init(), cfg.ensemble.beta, cfg.ensemble.mu)
                .map_err(error::numeric("ensemble"))?,
        ),
        None => None,
    };
    let ctx = tasks::Context {
        spec: spec.as_ref(),
        state: state.as_ref(),
        protocol: protocol.as_ref(),
        steps: cfg.protocol.as_ref().map_or(qresponse::dynamics::DEFAULT_STEPS, |p| p.steps),
        tolerance,
    };
    let mut emitter = Emitter::new(std::path::Path::new(&cfg.output.dir), cfg.output.format)?;
    for (i, task) in cfg.tasks.iter().enumerate() {
        let mut table = tasks::run(task, i, &ctx)?;
        let mut meta = standard_metadata(&cfg, task.name(), common.tolerance_profile.name());
        meta.append(&mut table.metadata);
        table.metadata = meta;
        let path = emitter.write(task.label(), &table)?;
        println!("{}", path.display());
    }
    Ok(())
}
