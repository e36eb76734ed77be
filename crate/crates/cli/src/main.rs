use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use degcert_cli::{
    inputs_from_text, run_certify, run_degree, run_distance, run_experiment, run_homotopy,
    BallMode, ExperimentConfig, Input, Outcome, RunReport, Summary,
};
use degcert_core::certificates::{BallOptions, MIN_T_STEPS};
use degcert_core::degree::default_sample_resolution;
use degcert_core::{parse, DegreeParams, Dim};

#[derive(Parser)]
#[command(
    name = "degcert",
    version,
    about = "Brouwer degree and non-iterate certificates for self-maps of S¹ and S²"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Degree of each expression.
    Degree {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        params: ParamArgs,
    },
    /// Certify that each expression is not an iterated map.
    Certify {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        params: ParamArgs,
        /// Certify through the unit ball around this base map instead.
        #[arg(long)]
        base: Option<String>,
        /// Grid resolution for the ball distance and homotopy sweeps.
        #[arg(long)]
        ball_resolution: Option<usize>,
        #[arg(long, default_value_t = MIN_T_STEPS)]
        t_steps: usize,
        /// Lipschitz constants of the base and subject maps (enables the rigorous bound).
        #[arg(long, num_args = 2, value_names = ["L_BASE", "L_SUBJECT"])]
        lipschitz: Option<Vec<f64>>,
    },
    /// Sampled sup distance between two maps.
    Distance {
        #[arg(short = 'a')]
        a: String,
        #[arg(short = 'b')]
        b: String,
        #[arg(long)]
        resolution: Option<usize>,
        #[arg(long, num_args = 2, value_names = ["L_A", "L_B"])]
        lipschitz: Option<Vec<f64>>,
        #[arg(long, hide = true)]
        json: bool,
    },
    /// Validity of the normalized straight-line homotopy between two maps.
    Homotopy {
        #[arg(short = 'a')]
        a: String,
        #[arg(short = 'b')]
        b: String,
        #[arg(long)]
        resolution: Option<usize>,
        #[arg(long, default_value_t = MIN_T_STEPS)]
        t_steps: usize,
        #[arg(long, hide = true)]
        json: bool,
    },
    /// Certify random perturbations of a degree-2 map through its unit ball.
    Experiment {
        #[arg(long, default_value_t = 1)]
        dim: u8,
        #[arg(long, default_value_t = 100)]
        count: usize,
        #[arg(long, default_value_t = 0.9)]
        epsilon_max: f64,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long)]
        ball_resolution: Option<usize>,
        #[arg(long, default_value_t = MIN_T_STEPS)]
        t_steps: usize,
        #[command(flatten)]
        params: ParamArgs,
    },
}

#[derive(Args)]
#[group(required = true, multiple = false)]
struct InputArgs {
    /// Inline expression.
    #[arg(short = 'e', long = "expr")]
    expr: Option<String>,
    /// File with one expression per line; `#` starts a comment line.
    #[arg(short = 'f', long = "file")]
    file: Option<PathBuf>,
}

#[derive(Args)]
struct ParamArgs {
    /// Initial resolution of the adaptive degree loop (both dimensions).
    #[arg(long)]
    resolution: Option<usize>,
    /// Maximum resolution of the adaptive degree loop (both dimensions).
    #[arg(long)]
    max_resolution: Option<usize>,
    /// Largest accepted distance of the raw degree from an integer.
    #[arg(long)]
    tolerance: Option<f64>,
    /// JSON-lines output (the only format; accepted for scripts).
    #[arg(long)]
    json: bool,
}

impl ParamArgs {
    fn params(&self) -> DegreeParams {
        let mut p = DegreeParams::default();
        if let Some(n) = self.resolution {
            p.circle.initial = n;
            p.sphere.initial = n;
        }
        if let Some(n) = self.max_resolution {
            p.circle.max = n;
            p.sphere.max = n;
        }
        if let Some(t) = self.tolerance {
            p.tolerance = t;
        }
        p
    }
}

fn read_inputs(args: &InputArgs) -> Result<Vec<Input>, String> {
    match (&args.expr, &args.file) {
        (Some(e), _) => Ok(vec![(1, e.trim().to_string())]),
        (None, Some(path)) => std::fs::read_to_string(path)
            .map(|t| inputs_from_text(&t))
            .map_err(|e| format!("cannot read {}: {e}", path.display())),
        (None, None) => Err("no input given".into()),
    }
}

fn lipschitz_pair(v: &Option<Vec<f64>>) -> Option<(f64, f64)> {
    v.as_ref().map(|l| (l[0], l[1]))
}

fn emit(reports: &[RunReport]) -> io::Result<()> {
    let mut out = io::stdout().lock();
    for r in reports {
        writeln!(out, "{}", r.to_json_line())?;
    }
    out.flush()
}

fn exit_for(reports: &[RunReport], refusal_code: u8) -> ExitCode {
    if reports.iter().any(|r| r.outcome == Outcome::Error) {
        ExitCode::from(1)
    } else if reports.iter().any(|r| r.outcome == Outcome::Refused) {
        ExitCode::from(refusal_code)
    } else {
        ExitCode::SUCCESS
    }
}

fn report_summary(s: &Summary) {
    eprintln!(
        "{}: {} inputs, {} ok, {} refused, {} errors",
        s.command, s.count, s.issued, s.refused, s.errors
    );
}

fn run(cli: Cli) -> Result<ExitCode, String> {
    let io_err = |e: io::Error| e.to_string();
    match cli.command {
        Command::Degree { input, params } => {
            let reports = run_degree(&read_inputs(&input)?, &params.params());
            emit(&reports).map_err(io_err)?;
            report_summary(&Summary::of("degree", &reports));
            Ok(exit_for(&reports, 0))
        }
        Command::Certify {
            input,
            params,
            base,
            ball_resolution,
            t_steps,
            lipschitz,
        } => {
            let ball = match base {
                Some(text) => {
                    let base = parse(&text).map_err(|e| format!("--base: {e}"))?;
                    let resolution = ball_resolution
                        .unwrap_or_else(|| default_sample_resolution(base.dimension()));
                    Some(BallMode {
                        base,
                        options: BallOptions {
                            resolution,
                            t_steps,
                            lipschitz: lipschitz_pair(&lipschitz),
                        },
                    })
                }
                None => None,
            };
            let reports = run_certify(&read_inputs(&input)?, &params.params(), ball.as_ref());
            emit(&reports).map_err(io_err)?;
            report_summary(&Summary::of("certify", &reports));
            Ok(exit_for(&reports, 2))
        }
        Command::Distance {
            a,
            b,
            resolution,
            lipschitz,
            ..
        } => {
            let r = [run_distance(&a, &b, resolution, lipschitz_pair(&lipschitz))];
            emit(&r).map_err(io_err)?;
            Ok(exit_for(&r, 0))
        }
        Command::Homotopy {
            a,
            b,
            resolution,
            t_steps,
            ..
        } => {
            let r = [run_homotopy(&a, &b, resolution, t_steps)];
            emit(&r).map_err(io_err)?;
            Ok(exit_for(&r, 0))
        }
        Command::Experiment {
            dim,
            count,
            epsilon_max,
            seed,
            ball_resolution,
            t_steps,
            params,
        } => {
            let dim = Dim::from_m(dim as u64)
                .ok_or_else(|| format!("--dim must be 1 or 2, got {dim}"))?;
            let cfg = ExperimentConfig {
                dim,
                count,
                epsilon_max,
                seed,
                ball_resolution,
                t_steps,
            };
            let (reports, summary) = run_experiment(&cfg, &params.params())?;
            emit(&reports).map_err(io_err)?;
            println!("{}", summary.to_json_line());
            report_summary(&summary);
            Ok(if summary.refused == 0 && summary.errors == 0 {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            })
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(msg) => {
            eprintln!("degcert: {msg}");
            ExitCode::from(1)
        }
    }
}
