use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use hypercurv::curvature::{coarse_curvature, curvature_matrix, default_schedule, kantorovich_difference, KdOptions};
use hypercurv::heat::{heat_flow, FlowMethod};
use hypercurv::io::{emit_report, parse_function, parse_instance, write_instance, Format, InstanceInfo, OracleVector, Report};
use hypercurv::laplacian::{canonical_laplacian, DEFAULT_TOL};
use hypercurv::oracle::{oracle_kd, oracle_min_norm, oracle_resolvent, OracleConfig};
use hypercurv::resolvent::{resolvent_with, ResolventOptions};
use hypercurv::rigidity::{maximal_diameter_rigidity, RigidityOptions};
use hypercurv::{instances, Error, Hypergraph, Result};

#[derive(Parser)]
#[command(name = "hypercurv", version, about = "Laplacian, heat flow and coarse Ricci curvature of weighted hypergraphs")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Solver tolerance; each solver has its own default.
    #[arg(long, global = true)]
    tol: Option<f64>,

    /// Use the slow reference solvers (laplacian, resolvent, kd only).
    #[arg(long, global = true)]
    oracle: bool,

    /// Output format: json or csv.
    #[arg(long, global = true, default_value_t = Format::Json)]
    format: Format,

    /// Seed for randomised searches.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct FunctionArg {
    /// `rho_<vertex>` or a JSON file with the function values.
    #[arg(long = "fn", conflicts_with = "rho")]
    function: Option<String>,

    /// Use the distance function from this vertex.
    #[arg(long)]
    rho: Option<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Degrees, distances and diameter.
    Info { instance: PathBuf },
    /// Minimal-norm element of the Laplacian.
    Laplacian {
        instance: PathBuf,
        #[command(flatten)]
        function: FunctionArg,
    },
    /// Resolvent `(I + λ𝓛)⁻¹ f`.
    Resolvent {
        instance: PathBuf,
        #[command(flatten)]
        function: FunctionArg,
        #[arg(long)]
        lambda: f64,
    },
    /// Heat flow trajectory.
    Heat {
        instance: PathBuf,
        #[command(flatten)]
        function: FunctionArg,
        #[arg(long)]
        t: f64,
        #[arg(long, default_value_t = 64)]
        steps: usize,
        #[arg(long, value_parser = parse_method, default_value = "euler")]
        method: FlowMethod,
    },
    /// Kantorovich difference of one pair at one λ.
    Kd {
        instance: PathBuf,
        #[arg(long)]
        x: String,
        #[arg(long)]
        y: String,
        #[arg(long)]
        lambda: f64,
        #[arg(long, default_value_t = 64)]
        starts: usize,
    },
    /// Curvature estimates over a λ schedule.
    Curvature {
        instance: PathBuf,
        /// Pair `X,Y` of vertex names.
        #[arg(long, conflicts_with = "all", required_unless_present = "all")]
        pair: Option<String>,
        /// Every unordered pair.
        #[arg(long)]
        all: bool,
        /// Comma-separated decreasing λ values.
        #[arg(long, value_delimiter = ',')]
        schedule: Option<Vec<f64>>,
        #[arg(long, default_value_t = 64)]
        starts: usize,
    },
    /// Bonnet–Myers check and maximal-diameter rigidity analysis.
    Rigidity {
        instance: PathBuf,
        /// Curvature lower bound K.
        #[arg(long = "K")]
        k: f64,
        /// Also estimate curvature for every pair.
        #[arg(long)]
        curvature: bool,
    },
    /// Write the bundled instances and the test corpus.
    Examples {
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
}

fn parse_method(s: &str) -> std::result::Result<FlowMethod, String> {
    match s {
        "euler" => Ok(FlowMethod::Euler),
        "resolvent" => Ok(FlowMethod::Resolvent),
        other => Err(format!("unknown method `{other}`, expected euler or resolvent")),
    }
}

fn function(h: &Hypergraph, arg: &FunctionArg) -> Result<Vec<f64>> {
    match (&arg.function, &arg.rho) {
        (Some(spec), None) => parse_function(h, spec),
        (None, Some(v)) => h.rho(h.vertex_index(v)?),
        _ => Err(Error::InvalidArgument("give exactly one of --fn and --rho".into())),
    }
}

fn no_oracle(cli: &Cli, command: &str) -> Result<()> {
    if cli.oracle {
        return Err(Error::InvalidArgument(format!("--oracle is not available for `{command}`")));
    }
    Ok(())
}

fn kd_options(cli: &Cli, starts: usize) -> KdOptions {
    KdOptions {
        starts,
        seed: cli.seed,
        tol: cli.tol,
        ..Default::default()
    }
}

fn run(cli: &Cli) -> Result<Option<(Hypergraph, Report)>> {
    let report = match &cli.command {
        Command::Info { instance } => {
            no_oracle(cli, "info")?;
            let h = parse_instance(instance)?;
            let info = InstanceInfo::of(&h);
            (h, Report::Info(info))
        }
        Command::Laplacian { instance, function: arg } => {
            let h = parse_instance(instance)?;
            let f = function(&h, arg)?;
            let report = if cli.oracle {
                Report::Oracle(OracleVector {
                    kind: "min_norm".into(),
                    values: oracle_min_norm(&h, &f, &OracleConfig::default())?,
                    input: f,
                })
            } else {
                Report::Laplacian(canonical_laplacian(&h, &f, cli.tol.unwrap_or(DEFAULT_TOL))?)
            };
            (h, report)
        }
        Command::Resolvent { instance, function: arg, lambda } => {
            let h = parse_instance(instance)?;
            let f = function(&h, arg)?;
            let report = if cli.oracle {
                Report::Oracle(OracleVector {
                    kind: "resolvent".into(),
                    values: oracle_resolvent(&h, &f, *lambda, &OracleConfig::default())?,
                    input: f,
                })
            } else {
                let opts = ResolventOptions {
                    tol: cli.tol,
                    ..Default::default()
                };
                Report::Resolvent(resolvent_with(&h, &f, *lambda, &opts)?)
            };
            (h, report)
        }
        Command::Heat { instance, function: arg, t, steps, method } => {
            no_oracle(cli, "heat")?;
            let h = parse_instance(instance)?;
            let f = function(&h, arg)?;
            let traj = heat_flow(&h, &f, *t, *steps, *method, cli.tol.unwrap_or(DEFAULT_TOL))?;
            (h, Report::Heat(traj))
        }
        Command::Kd { instance, x, y, lambda, starts } => {
            let h = parse_instance(instance)?;
            let (x, y) = (h.vertex_index(x)?, h.vertex_index(y)?);
            let report = if cli.oracle {
                let cfg = OracleConfig {
                    seed: cli.seed,
                    ..Default::default()
                };
                Report::OracleKd(oracle_kd(&h, x, y, *lambda, &cfg)?)
            } else {
                Report::Kd(kantorovich_difference(&h, x, y, *lambda, &kd_options(cli, *starts))?)
            };
            (h, report)
        }
        Command::Curvature { instance, pair, all, schedule, starts } => {
            no_oracle(cli, "curvature")?;
            let h = parse_instance(instance)?;
            let schedule = schedule.clone().unwrap_or_else(default_schedule);
            let opts = kd_options(cli, *starts);
            let estimates = match (pair, all) {
                (Some(p), false) => {
                    let (x, y) = p
                        .split_once(',')
                        .ok_or_else(|| Error::InvalidArgument(format!("--pair expects X,Y, got `{p}`")))?;
                    let (x, y) = (h.vertex_index(x.trim())?, h.vertex_index(y.trim())?);
                    vec![coarse_curvature(&h, x, y, &schedule, &opts)?]
                }
                (None, true) => curvature_matrix(&h, &schedule, &opts)?,
                _ => return Err(Error::InvalidArgument("give exactly one of --pair and --all".into())),
            };
            (h, Report::Curvature(estimates))
        }
        Command::Rigidity { instance, k, curvature } => {
            no_oracle(cli, "rigidity")?;
            let h = parse_instance(instance)?;
            let opts = RigidityOptions {
                curvature: *curvature,
                kd: kd_options(cli, KdOptions::default().starts),
                tol: cli.tol.unwrap_or(DEFAULT_TOL),
                ..Default::default()
            };
            let report = maximal_diameter_rigidity(&h, *k, &opts)?;
            (h, Report::Rigidity(report))
        }
        Command::Examples { out } => {
            no_oracle(cli, "examples")?;
            write_examples(out)?;
            return Ok(None);
        }
    };
    Ok(Some(report))
}

fn write_examples(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir.join("corpus"))?;
    write_instance(&instances::h1(), dir.join("h1.json"))?;
    write_instance(&instances::h2(), dir.join("h2.json"))?;
    for h in instances::corpus() {
        let file = format!("{}.json", h.name().to_lowercase().replace('+', "-"));
        write_instance(&h, dir.join("corpus").join(file))?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    let outcome = run(&cli).and_then(|r| match r {
        Some((h, report)) => emit_report(&h, &report, cli.format).map(Some),
        None => Ok(None),
    });
    match outcome {
        Ok(text) => {
            if let Some(text) = text {
                print!("{text}");
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
