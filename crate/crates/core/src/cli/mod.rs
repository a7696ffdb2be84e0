//! The `dg` command line.
//!
//! Every command resolves its flags and input files into a [`CommandConfig`],
//! echoes it, then runs. Exit codes: 0 success, 2 invalid input, 3 numerical
//! failure.

mod config;
mod exec;
mod sweep;

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde_json::json;

pub use config::*;
pub use exec::{execute, Outcome};
pub use sweep::{cells as sweep_cells, HEADER as SWEEP_HEADER};

use crate::catalog::SolutionSpec;
use crate::error::{Error, Result};
use crate::evolver::DEFAULT_SAFETY;
use crate::field::{Boundary, Grid1D};
use crate::gaussian::{GaussianState, DEFAULT_DT, DEFAULT_HORIZON};
use crate::io::{self, ParamsDocument, TimeRange};
use crate::params::{GaugeElement, Invariants, NuMuParams};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

#[derive(Parser, Debug)]
#[command(name = "dg", version, about = "Doebner-Goldin nonlinear Schrodinger toolkit")]
struct Cli {
    /// Machine-readable JSON on stdout.
    #[arg(long, global = true)]
    json: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Gauge invariants of a parameter set.
    Invariants {
        #[arg(long)]
        params: PathBuf,
    },
    /// Gauge group operations.
    #[command(subcommand)]
    Gauge(GaugeCommand),
    /// Sample a catalog solution and certify it against the equations.
    Solution {
        #[arg(long)]
        spec: PathBuf,
        #[command(flatten)]
        grid: GridArgs,
        /// `t` or `t0:t1:dt`.
        #[arg(long, default_value = "0")]
        t: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Residuals of a field file or a catalog solution.
    Residual {
        #[arg(long, conflicts_with = "field", required_unless_present = "field")]
        spec: Option<PathBuf>,
        #[arg(long)]
        field: Option<PathBuf>,
        /// Parameters for a field file; defaults to the gauge-fixed representative of `--inv`.
        #[arg(long, conflicts_with = "spec")]
        params: Option<PathBuf>,
        #[arg(long, allow_hyphen_values = true, conflicts_with = "spec")]
        inv: Option<String>,
        #[arg(long, allow_hyphen_values = true)]
        kappa: Option<f64>,
        #[command(flatten)]
        grid: GridArgs,
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        t: f64,
    },
    /// Gaussian moment dynamics.
    #[command(subcommand)]
    Gaussian(GaussianCommand),
    /// Integrate the amplitude and phase equations in time.
    Evolve {
        #[arg(long, conflicts_with = "field", required_unless_present = "field")]
        spec: Option<PathBuf>,
        #[arg(long)]
        field: Option<PathBuf>,
        #[command(flatten)]
        grid: GridArgs,
        #[command(flatten)]
        params: ParamArgs,
        /// Time at which the spec is sampled for the initial field.
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        t0: f64,
        #[arg(long)]
        t_end: f64,
        /// Defaults to the stability limit.
        #[arg(long)]
        dt: Option<f64>,
        #[arg(long, default_value_t = 1)]
        record_every: usize,
        #[arg(long, default_value_t = DEFAULT_SAFETY)]
        safety: f64,
        #[arg(long)]
        dealias: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Classify Gaussian asymptotics over a grid of invariants.
    Sweep {
        /// JSON file with `base`, `axes` and optional `kappa`, `initial`.
        #[arg(long)]
        grid: PathBuf,
        #[arg(long, default_value_t = DEFAULT_HORIZON)]
        horizon: f64,
        #[arg(long, default_value_t = DEFAULT_DT)]
        dt: f64,
        #[arg(long)]
        out: PathBuf,
        /// Worker threads; output does not depend on it.
        #[arg(long, default_value_t = default_jobs())]
        jobs: usize,
    },
    /// Re-run an echoed configuration.
    Replay {
        #[arg(long)]
        config: PathBuf,
    },
}

#[derive(Subcommand, Debug)]
enum GaugeCommand {
    /// Push parameters through a gauge element.
    Apply {
        #[arg(long)]
        params: PathBuf,
        #[arg(long, allow_hyphen_values = true)]
        lambda: f64,
        #[arg(long, allow_hyphen_values = true)]
        gamma: f64,
    },
    /// Element taking `--params` to `--target`.
    Find {
        #[arg(long)]
        params: PathBuf,
        #[arg(long)]
        target: PathBuf,
    },
    /// Element taking `--params` to the representative with nu1 = 1, mu1 = 0.
    Fix {
        #[arg(long)]
        params: PathBuf,
    },
}

#[derive(Subcommand, Debug)]
enum GaussianCommand {
    /// Integrate the width and center equations and write the trajectory.
    Integrate {
        #[command(flatten)]
        common: GaussianArgs,
        #[arg(long, default_value_t = 1)]
        every: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Label the long-time behaviour.
    Classify {
        #[command(flatten)]
        common: GaussianArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args, Debug)]
struct GridArgs {
    /// `min:max:n`
    #[arg(long, allow_hyphen_values = true)]
    grid: Option<String>,
    /// `dirichlet` (finite differences) or `periodic` (spectral).
    #[arg(long, default_value = "dirichlet")]
    boundary: String,
}

#[derive(Args, Debug)]
struct ParamArgs {
    /// Comma-separated invariants `i0,...,i5`.
    #[arg(long, allow_hyphen_values = true, conflicts_with = "params")]
    inv: Option<String>,
    #[arg(long)]
    params: Option<PathBuf>,
    #[arg(long, allow_hyphen_values = true)]
    kappa: Option<f64>,
}

#[derive(Args, Debug)]
struct GaussianArgs {
    #[command(flatten)]
    params: ParamArgs,
    #[arg(long, default_value_t = 1.0)]
    sigma0: f64,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    dsigma0: f64,
    #[arg(long, default_value_t = 0.5, allow_hyphen_values = true)]
    s0: f64,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    ds0: f64,
    #[arg(long, default_value_t = DEFAULT_HORIZON)]
    horizon: f64,
    #[arg(long, default_value_t = DEFAULT_DT)]
    dt: f64,
}

fn default_jobs() -> usize {
    std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
}

fn load_doc(path: &Path) -> Result<ParamsDocument> {
    io::load_params(path)
}

fn load_numu(path: &Path) -> Result<NuMuParams> {
    load_doc(path)?.normalize()
}

fn load_spec(path: &Path) -> Result<SolutionSpec> {
    serde_json::from_str(&io::read(path)?).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))
}

impl GridArgs {
    fn boundary(&self) -> Result<Boundary> {
        self.boundary.parse()
    }

    fn resolve(&self) -> Result<Grid1D> {
        let spec = self
            .grid
            .as_deref()
            .ok_or_else(|| Error::InvalidGrid("--grid min:max:n is required".into()))?;
        let g: Grid1D = spec.parse()?;
        Grid1D::new(g.x_min, g.x_max, g.n, self.boundary()?)
    }
}

impl ParamArgs {
    /// Invariants and spring constant, if given.
    fn resolve(&self) -> Result<(Option<Invariants>, Option<f64>)> {
        if let Some(s) = &self.inv {
            return Ok((Some(io::parse_invariants(s)?), self.kappa));
        }
        if let Some(p) = &self.params {
            let doc = load_doc(p)?;
            return Ok((Some(doc.normalize()?.invariants()), self.kappa.or(doc.kappa())));
        }
        Ok((None, self.kappa))
    }
}

impl GaussianArgs {
    fn resolve(&self, out: Option<PathBuf>, every: usize) -> Result<GaussianConfig> {
        let (inv, kappa) = self.params.resolve()?;
        let invariants = inv.ok_or_else(|| Error::InvalidParams("--inv or --params is required".into()))?;
        Ok(GaussianConfig {
            invariants,
            kappa: kappa.unwrap_or(0.0),
            initial: GaussianState::new(self.sigma0, self.dsigma0, self.s0, self.ds0),
            horizon: self.horizon,
            dt: self.dt,
            every,
            out,
        })
    }
}

fn resolve(cmd: Command) -> Result<CommandConfig> {
    Ok(match cmd {
        Command::Invariants { params } => CommandConfig::Invariants {
            params: load_numu(&params)?,
        },
        Command::Gauge(GaugeCommand::Apply { params, lambda, gamma }) => CommandConfig::GaugeApply {
            params: load_numu(&params)?,
            element: GaugeElement::new(lambda, gamma)?,
        },
        Command::Gauge(GaugeCommand::Find { params, target }) => CommandConfig::GaugeFind {
            from: load_numu(&params)?,
            to: load_numu(&target)?,
        },
        Command::Gauge(GaugeCommand::Fix { params }) => CommandConfig::GaugeFix {
            params: load_numu(&params)?,
        },
        Command::Solution { spec, grid, t, out } => CommandConfig::Solution(SolutionConfig {
            spec: load_spec(&spec)?,
            grid: grid.resolve()?,
            times: t.parse::<TimeRange>()?,
            out,
        }),
        Command::Residual {
            spec,
            field,
            params,
            inv,
            kappa,
            grid,
            t,
        } => {
            let (source, grid, p) = match (spec, field) {
                (Some(path), _) => {
                    let spec = load_spec(&path)?;
                    let p = spec.invariants.gauge_fixed();
                    (FieldSource::Spec { spec, t }, grid.resolve()?, p)
                }
                (None, Some(path)) => {
                    let g = exec::field_grid(&path, grid.boundary()?)?;
                    let p = match (params, inv) {
                        (Some(pp), _) => load_numu(&pp)?,
                        (None, Some(s)) => io::parse_invariants(&s)?.gauge_fixed(),
                        (None, None) => {
                            return Err(Error::InvalidParams("--params or --inv is required with --field".into()))
                        }
                    };
                    (FieldSource::Field { path }, g, p)
                }
                (None, None) => return Err(Error::InvalidParams("--spec or --field is required".into())),
            };
            CommandConfig::Residual(ResidualConfig {
                source,
                grid,
                params: p,
                kappa: kappa.unwrap_or(0.0),
            })
        }
        Command::Gaussian(GaussianCommand::Integrate { common, every, out }) => {
            CommandConfig::GaussianIntegrate(common.resolve(out, every)?)
        }
        Command::Gaussian(GaussianCommand::Classify { common, out }) => {
            CommandConfig::GaussianClassify(common.resolve(out, 1)?)
        }
        Command::Evolve {
            spec,
            field,
            grid,
            params,
            t0,
            t_end,
            dt,
            record_every,
            safety,
            dealias,
            out,
        } => {
            let (inv, kappa) = params.resolve()?;
            let (source, grid, invariants, kappa) = match (spec, field) {
                (Some(path), _) => {
                    let spec = load_spec(&path)?;
                    let sol_kappa = match &spec.extras.potential {
                        Some(p) => p.harmonic_kappa().ok_or_else(|| {
                            Error::InvalidParams("the evolver supports free and harmonic potentials only".into())
                        })?,
                        None => spec.extras.kappa.unwrap_or(0.0),
                    };
                    let invariants = inv.unwrap_or(spec.invariants);
                    (FieldSource::Spec { spec, t: t0 }, grid.resolve()?, invariants, kappa.unwrap_or(sol_kappa))
                }
                (None, Some(path)) => {
                    let g = exec::field_grid(&path, grid.boundary()?)?;
                    let invariants =
                        inv.ok_or_else(|| Error::InvalidParams("--inv or --params is required with --field".into()))?;
                    (FieldSource::Field { path }, g, invariants, kappa.unwrap_or(0.0))
                }
                (None, None) => return Err(Error::InvalidParams("--spec or --field is required".into())),
            };
            let mut cfg = crate::evolver::EvolverConfig::new(grid, 1.0, t_end, invariants, kappa);
            cfg.safety = safety;
            let dt = dt.unwrap_or_else(|| {
                let limit = cfg.dt_limit();
                if t_end > 0.0 {
                    t_end / (t_end / limit).ceil()
                } else {
                    limit
                }
            });
            CommandConfig::Evolve(EvolveConfig {
                source,
                grid,
                invariants,
                kappa,
                dt,
                t_end,
                record_every,
                safety,
                dealias,
                out,
            })
        }
        Command::Sweep {
            grid,
            horizon,
            dt,
            out,
            jobs,
        } => {
            let text = io::read(&grid)?;
            let grid: SweepGrid =
                serde_json::from_str(&text).map_err(|e| Error::Parse(format!("sweep grid: {e}")))?;
            CommandConfig::Sweep(SweepConfig {
                grid,
                horizon,
                dt,
                out,
                jobs,
            })
        }
        Command::Replay { config } => {
            let value: serde_json::Value = serde_json::from_str(&io::read(&config)?)?;
            let inner = value.get("config").cloned().unwrap_or(value);
            serde_json::from_value(inner).map_err(|e| Error::Parse(format!("replay config: {e}")))?
        }
    })
}

fn exit_code(e: &Error) -> i32 {
    if e.is_validation() {
        EXIT_VALIDATION
    } else {
        EXIT_NUMERICAL
    }
}

fn init_logging() {
    let env = env_logger::Env::new().filter_or("DG_LOG", "warn");
    let _ = env_logger::Builder::from_env(env).format_timestamp(None).try_init();
}

/// Parses `argv`, runs the command and returns the process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    init_logging();
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_VALIDATION } else { EXIT_OK };
        }
    };
    let json_mode = cli.json;
    let outcome = resolve(cli.command).and_then(|cfg| {
        let echo = serde_json::to_string(&cfg)?;
        if json_mode {
            println!("{{\"config\":{echo}}}");
        } else {
            println!("config: {echo}");
        }
        execute(&cfg)
    });
    match outcome {
        Ok(out) => {
            if json_mode {
                println!("{}", json!({ "result": out.result }));
            } else {
                println!("{}", out.text);
            }
            EXIT_OK
        }
        Err(e) => {
            eprintln!("error: {e}");
            let code = exit_code(&e);
            if json_mode {
                println!("{}", json!({ "error": e.to_string(), "exit_code": code }));
            }
            code
        }
    }
}
