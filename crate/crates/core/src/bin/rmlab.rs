use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use rmlab::calibration::BERRY_ESSEEN_REGIME;
use rmlab::experiments::{self, ExperimentConfig, ExperimentKind, OutputFormat};
use rmlab::nets::{self, Body};
use rmlab::small_ball::{self, Method, SmallBallQuery};
use rmlab::sphere_profile::{classify_profile, classify_sphere, PartitionParams, SphereClass};
use rmlab::{EntryDistribution, Error, Result};

#[derive(Parser)]
#[command(name = "rmlab", version, about = "Random matrix small-ball laboratory")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment from a TOML config; flags override file values.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        trials: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        /// Comma-separated dimensions.
        #[arg(long, value_delimiter = ',')]
        n_list: Option<Vec<usize>>,
        #[arg(long)]
        dist: Option<EntryDistribution>,
        #[arg(long)]
        threads: Option<usize>,
        /// Output file; JSON on stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
        /// csv or json; inferred from the extension of `--out` otherwise.
        #[arg(long)]
        format: Option<OutputFormat>,
    },
    /// Smallest singular values of random matrices.
    SigmaMin {
        #[arg(long, required = true, num_args = 1.., value_delimiter = ',')]
        n: Vec<usize>,
        #[arg(long, default_value_t = 100)]
        trials: usize,
        #[arg(long, default_value = "rademacher")]
        dist: EntryDistribution,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 0.1)]
        eps: f64,
        #[arg(long)]
        threads: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        format: Option<OutputFormat>,
    },
    /// Sphere class and Δ-profile classification of a unit vector.
    Profile {
        /// File with one coordinate per line.
        #[arg(long)]
        x: PathBuf,
        #[arg(long)]
        delta: f64,
        #[arg(long)]
        q: f64,
        #[arg(long, default_value_t = 0.25)]
        r: f64,
        #[arg(long = "R", default_value_t = 40.0)]
        big_r: f64,
    },
    /// Small-ball probability `P(|Σ β_j x_j − v| < t)` or one of its bounds.
    SmallBall {
        #[arg(long)]
        x: PathBuf,
        #[arg(long, default_value = "rademacher")]
        dist: EntryDistribution,
        #[arg(long, default_value_t = 0.0)]
        v: f64,
        #[arg(long)]
        t: f64,
        #[arg(long, default_value = "exact")]
        method: Method,
        #[arg(long, default_value_t = 100_000)]
        trials: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Grid step for `convolution`; `t/100` when absent.
        #[arg(long)]
        h: Option<f64>,
        /// Bin width for the Halász bounds; `t` when absent.
        #[arg(long)]
        delta: Option<f64>,
    },
    /// Covering-number formulas, with a greedy net for comparison.
    Nets {
        #[arg(long)]
        check: NetKind,
        #[arg(long)]
        n: usize,
        #[arg(long = "K", value_enum, default_value = "euclidean-ball")]
        k: BodyArg,
        #[arg(long = "D", value_enum, default_value = "euclidean-ball")]
        d: BodyArg,
        #[arg(long)]
        t: Option<f64>,
        #[arg(long)]
        r: Option<f64>,
        #[arg(long = "R")]
        big_r: Option<f64>,
        #[arg(long)]
        delta: Option<f64>,
        /// Size of `J` for the grid; coordinates `0..l`.
        #[arg(long)]
        l: Option<usize>,
        /// Sampled points for the greedy net; 0 skips it.
        #[arg(long, default_value_t = 0)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum NetKind {
    Volumetric,
    Vp,
    Grid,
}

#[derive(Clone, Copy, ValueEnum)]
enum BodyArg {
    EuclideanBall,
    Cube,
}

impl From<BodyArg> for Body {
    fn from(b: BodyArg) -> Body {
        match b {
            BodyArg::EuclideanBall => Body::EuclideanBall,
            BodyArg::Cube => Body::Cube,
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("rmlab: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn dispatch(command: Command) -> Result<()> {
    match command {
        Command::Run {
            config,
            trials,
            seed,
            n_list,
            dist,
            threads,
            out,
            format,
        } => {
            let mut c = ExperimentConfig::read_path(&config)?;
            if let Some(v) = trials {
                c.trials = v;
            }
            if let Some(v) = seed {
                c.master_seed = v;
            }
            if let Some(v) = n_list {
                c.n_list = v;
            }
            if let Some(v) = dist {
                c.dist = v;
            }
            if threads.is_some() {
                c.threads = threads;
            }
            run_and_emit(&c, out.as_deref(), format)
        }
        Command::SigmaMin {
            n,
            trials,
            dist,
            seed,
            eps,
            threads,
            out,
            format,
        } => {
            let mut c = ExperimentConfig::new(ExperimentKind::SigmaMinTail, dist, n, trials, seed);
            c.params.eps = eps;
            c.threads = threads;
            run_and_emit(&c, out.as_deref(), format)
        }
        Command::Profile { x, delta, q, r, big_r } => {
            let x = read_vector(&x)?;
            let params = PartitionParams::new(r, big_r)?;
            let (class, sigma) = classify_sphere(&x, &params)?;
            let value = if class == SphereClass::Peaked {
                json!({ "sphere_class": class, "sigma_set": sigma })
            } else {
                to_value(&classify_profile(&x, &params, delta, q)?)
            };
            print_json(&value)
        }
        Command::SmallBall {
            x,
            dist,
            v,
            t,
            method,
            trials,
            seed,
            h,
            delta,
        } => {
            let q = SmallBallQuery::new(read_vector(&x)?, dist, v, t)?;
            let delta = delta.unwrap_or(t);
            let est = match method {
                Method::Exact => small_ball::exact_concentration(&q)?,
                Method::Convolution => small_ball::exact_by_convolution(&q, h.unwrap_or(t / 100.0))?,
                Method::MonteCarlo => small_ball::monte_carlo_concentration(&q, trials, seed)?,
                Method::EsseenBound => small_ball::esseen_bound(&q)?,
                Method::HalaszProfileBound => small_ball::halasz_profile_bound(&q.x, delta)?,
                Method::HalaszIntegralBound => {
                    let a = q.x.iter().map(|w| w.abs()).fold(f64::INFINITY, f64::min);
                    small_ball::halasz_integral_bound(&q.x, &q.dist, delta, a)?
                }
                Method::BerryEsseenBound => small_ball::berry_esseen_bound(&q, &BERRY_ESSEEN_REGIME)?,
            };
            print_json(&to_value(&est))
        }
        Command::Nets {
            check,
            n,
            k,
            d,
            t,
            r,
            big_r,
            delta,
            l,
            samples,
            seed,
        } => {
            let value = match check {
                NetKind::Volumetric => {
                    let t = need(t, "t")?;
                    if samples > 0 {
                        to_value(&nets::volumetric_check(n, k.into(), d.into(), t, samples, seed)?)
                    } else {
                        json!({ "formula": nets::volumetric_bound(n, k.into(), d.into(), t)? })
                    }
                }
                NetKind::Vp => {
                    let (r, big_r) = (need(r, "r")?, need(big_r, "R")?);
                    if samples > 0 {
                        to_value(&nets::vp_check(n, r, big_r, samples, seed)?)
                    } else {
                        json!({ "formula": nets::vp_entropy_bound(n, r, big_r)? })
                    }
                }
                NetKind::Grid => {
                    let (delta, r, big_r, l) = (need(delta, "delta")?, need(r, "r")?, need(big_r, "R")?, need(l, "l")?);
                    let j: Vec<usize> = (0..l.min(n)).collect();
                    to_value(&nets::singular_grid_net(n, delta, r, big_r, &j)?)
                }
            };
            print_json(&value)
        }
    }
}

fn need<T>(v: Option<T>, name: &str) -> Result<T> {
    v.ok_or_else(|| Error::Config(format!("--{name} is required for this check")))
}

fn run_and_emit(config: &ExperimentConfig, out: Option<&Path>, format: Option<OutputFormat>) -> Result<()> {
    let result = experiments::run(config)?;
    match out {
        Some(path) => {
            let format = format.unwrap_or_else(|| OutputFormat::from_path(path));
            experiments::emit(&result, format, path)
        }
        None => {
            let text = match format.unwrap_or(OutputFormat::Json) {
                OutputFormat::Csv => experiments::to_csv(&result),
                OutputFormat::Json => experiments::to_json(&result),
            };
            write_stdout(&text)
        }
    }
}

fn read_vector(path: &Path) -> Result<Vec<f64>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io {
        path: path.to_owned(),
        source: e,
    })?;
    text.lines()
        .map(str::trim)
        .filter(|s| !s.is_empty() && !s.starts_with('#'))
        .map(|s| {
            s.parse::<f64>().map_err(|e| Error::Parse {
                what: "vector",
                detail: format!("`{s}`: {e}"),
            })
        })
        .collect()
}

fn to_value<T: serde::Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("serializable")
}

fn print_json(v: &Value) -> Result<()> {
    let mut text = serde_json::to_string_pretty(v).expect("serializable");
    text.push('\n');
    write_stdout(&text)
}

/// A closed pipe on the reading end is not an error.
fn write_stdout(text: &str) -> Result<()> {
    match std::io::stdout().lock().write_all(text.as_bytes()) {
        Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(Error::Io {
            path: "<stdout>".into(),
            source: e,
        }),
        _ => Ok(()),
    }
}
