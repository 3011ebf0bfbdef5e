use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use gyrodda::app::{self, Context, OptimizeOptions, RunOptions};
use gyrodda::optimizer::{Encoding, GAConfig, TrainConfig};
use gyrodda::{Error, Result};

#[derive(Parser)]
#[command(name = "gyrodda", version, about = "Coupled-dipole THz antenna and emitter studies")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// Scene file, or one of the bundled scene names.
    #[arg(long)]
    scene: String,
    /// Worker threads (default: logical cores).
    #[arg(long)]
    jobs: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// GMRES relative residual tolerance.
    #[arg(long)]
    tol: Option<f64>,
    /// Grid spacing in micrometres.
    #[arg(long)]
    spacing: Option<f64>,
    /// Bias field override in tesla.
    #[arg(long)]
    bz: Option<f64>,
}

#[derive(Subcommand)]
enum Command {
    /// Multipole scattering spectra for the plane-wave sources.
    Scatter(Common),
    /// Decay-rate spectra (and the distance sweep, if the scene has one).
    Decay(Common),
    /// Every output listed in the scene.
    Sweep(Common),
    /// Surrogate-guided emitter placement.
    Optimize {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 200)]
        samples: usize,
        /// Frequency in units of the plasma frequency.
        #[arg(long)]
        omega: Option<f64>,
        #[arg(long, default_value_t = 32)]
        population: usize,
        #[arg(long, default_value_t = 40)]
        generations: usize,
        #[arg(long, default_value_t = 0.05)]
        mutation: f64,
        #[arg(long, default_value_t = 500)]
        epochs: usize,
        #[arg(long, default_value_t = 1e-2)]
        learning_rate: f64,
        /// One-hot frequency and bias with this many bins.
        #[arg(long)]
        bins: Option<usize>,
        #[arg(long)]
        feature_selection: bool,
        /// Optimize a known test function instead of solver data.
        #[arg(long)]
        synthetic: bool,
        #[arg(long)]
        no_verify: bool,
    },
    /// Compare the solver with the sphere series.
    MieCheck {
        #[command(flatten)]
        common: Common,
        /// Exit with status 4 unless the agreement limits are met.
        #[arg(long)]
        strict: bool,
    },
    /// Grid utilities.
    Grid {
        #[command(subcommand)]
        action: GridAction,
    },
}

#[derive(Subcommand)]
enum GridAction {
    /// Voxel centers and material labels as CSV.
    Dump(Common),
}

fn context(c: &Common) -> Result<Context> {
    if let Some(n) = c.jobs {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build_global()
            .map_err(|e| Error::config("jobs", e.to_string()))?;
    }
    let opts = RunOptions {
        seed: c.seed,
        tol: c.tol,
        spacing: c.spacing.map(|s| s * 1e-6),
        b_z: c.bz,
    };
    Context::new(app::load_scene(&c.scene)?, &opts)
}

fn finish(name: &str, c: &Common, ctx: &Context, artifacts: &[app::Artifact]) -> Result<()> {
    app::write_run(name, &ctx.scene, c.seed, &c.out, artifacts)?;
    for a in artifacts {
        println!("{}", c.out.join(&a.name).display());
    }
    Ok(())
}

fn run(cli: Cli) -> Result<u8> {
    match cli.command {
        Command::Scatter(c) => {
            let ctx = context(&c)?;
            finish("scatter", &c, &ctx, &app::scatter(&ctx)?)?;
        }
        Command::Decay(c) => {
            let ctx = context(&c)?;
            let mut out = app::decay_frequency(&ctx)?;
            if ctx.scene.distance_sweep.is_some() {
                out.extend(app::decay_distance(&ctx)?);
            }
            finish("decay", &c, &ctx, &out)?;
        }
        Command::Sweep(c) => {
            let ctx = context(&c)?;
            finish("sweep", &c, &ctx, &app::sweep(&ctx)?)?;
        }
        Command::Grid {
            action: GridAction::Dump(c),
        } => {
            let ctx = context(&c)?;
            finish("grid dump", &c, &ctx, &app::grid_dump(&ctx))?;
        }
        Command::MieCheck { common: c, strict } => {
            let ctx = context(&c)?;
            let check = app::mie_check(&ctx)?;
            if let Some(w) = &check.warning {
                eprintln!("{w}");
            }
            finish("mie-check", &c, &ctx, &check.artifacts)?;
            eprintln!(
                "max |delta C_sca| = {:.4}, max |delta rate| = {:.4}",
                check.max_csca_delta, check.max_rate_delta
            );
            if strict && !check.passed() {
                return Ok(4);
            }
        }
        Command::Optimize {
            common: c,
            samples,
            omega,
            population,
            generations,
            mutation,
            epochs,
            learning_rate,
            bins,
            feature_selection,
            synthetic,
            no_verify,
        } => {
            let ctx = context(&c)?;
            let encoding = match bins {
                None => Encoding::Continuous,
                Some(b) => {
                    let w = ctx.omegas();
                    Encoding::Binned {
                        bins: b,
                        omega: (w[0], w[w.len() - 1]),
                        b_z: (0.0, ctx.scene.b_z.abs().max(1e-3)),
                    }
                }
            };
            let opts = OptimizeOptions {
                samples,
                omega,
                encoding,
                feature_selection,
                synthetic,
                verify: !no_verify,
                train: TrainConfig {
                    epochs,
                    learning_rate,
                    ..Default::default()
                },
                ga: GAConfig {
                    population,
                    generations,
                    mutation_rate: mutation,
                    ..Default::default()
                },
                ..Default::default()
            };
            let run = app::optimize(&ctx, &opts, c.seed)?;
            finish("optimize", &c, &ctx, &run.artifacts)?;
        }
    }
    Ok(0)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(app::exit_code(&e) as u8)
        }
    }
}
