use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use hjfront::cli::{parse_spec, render_dump, run, Command, Emit, OutputFormat, RunOutput};
use hjfront::minmax::Engine;
use hjfront::plfun::EnvelopeKind;
use hjfront::Error;

const AFTER_HELP: &str = "\
Specs are JSON; see the README for the schema.

CSV columns:
  profiles (solve_profile, minmax_profile, iterate_profiles, compare_profiles):
      series,x,u            one row per breakpoint in the window
  solve_shocks:       t_birth,x_birth,t_end,x_end,speed,left_slope,right_slope
  iterate_shocks:     path,t,x,left_slope,right_slope
  iterate_errors:     t,error
  compare_errors:     steps,mesh,error,bound
  wavefront:          x_start,x_end,slope,intercept,fan
  riemann:            speed,left_slope,right_slope
  conjugate:          y,value
  envelope:           p,value
  minmax --at X:      x,exact_minmax,grid_minmax,grid_maxmin,tolerance

Exit status: 0 success, 2 spec or argument error, 3 numerical failure
(fiber box too small, collision budget), 1 i/o error.

Environment: HJFRONT_THREADS caps the worker threads used for sampling.";

#[derive(Parser)]
#[command(name = "hjfront", version, about = "Front tracking and minmax solvers for u_t + H(u_x) = 0", after_help = AFTER_HELP)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Args)]
struct Common {
    /// Problem spec (JSON).
    spec: PathBuf,
    /// Directory for the artifacts; nothing is written without it.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Print the first artifact in this format to stdout.
    #[arg(long, value_enum)]
    stdout: Option<Format>,
    /// Override the spec's engine.
    #[arg(long, value_enum)]
    engine: Option<EngineArg>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Front tracking to T: profile and shock diagram.
    Solve(Common),
    /// One-step minmax profile at T.
    Minmax {
        #[command(flatten)]
        common: Common,
        /// Also report pointwise exact and grid values at this x.
        #[arg(long, allow_hyphen_values = true)]
        at: Option<f64>,
    },
    /// Iterated minmax over the subdivision.
    Iterate {
        #[command(flatten)]
        common: Common,
        /// Uniform step count, overriding the spec's subdivision.
        #[arg(long)]
        steps: Option<usize>,
        #[arg(long, value_enum, default_value = "profiles")]
        emit: EmitArg,
    },
    /// Wave front at T.
    Wavefront(Common),
    /// Riemann fan of the single kink of v.
    Riemann(Common),
    /// Legendre-Fenchel conjugate of H.
    Conjugate(Common),
    /// Convex or concave envelope of H.
    Envelope {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum, default_value = "convex")]
        kind: KindArg,
        /// Interval (default: slope range of v).
        #[arg(long, num_args = 2, allow_hyphen_values = true, value_names = ["A", "B"])]
        interval: Option<Vec<f64>>,
    },
    /// Front tracking vs one-step and iterated minmax.
    Compare(Common),
    /// Regenerate CSV and SVG from a JSON dump.
    Render {
        dump: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Csv,
    Svg,
}

#[derive(Clone, Copy, ValueEnum)]
enum EngineArg {
    Exact,
    Grid,
}

#[derive(Clone, Copy, ValueEnum)]
enum EmitArg {
    Profiles,
    Shocks,
    Errors,
}

#[derive(Clone, Copy, ValueEnum)]
enum KindArg {
    Convex,
    Concave,
}

impl From<Format> for OutputFormat {
    fn from(f: Format) -> Self {
        match f {
            Format::Json => OutputFormat::Json,
            Format::Csv => OutputFormat::Csv,
            Format::Svg => OutputFormat::Svg,
        }
    }
}

fn execute(common: Common, command: Command) -> Result<(), Error> {
    let text = std::fs::read_to_string(&common.spec)
        .map_err(|e| Error::Io(format!("{}: {e}", common.spec.display())))?;
    let mut spec = parse_spec(&text)?;
    match common.engine {
        Some(EngineArg::Exact) => spec.engine = Engine::Exact,
        Some(EngineArg::Grid) => {
            spec.engine = Engine::Grid {
                nx: spec.grid.0,
                ny: spec.grid.1,
            }
        }
        None => {}
    }
    let output: RunOutput = run(&spec, &command)?;
    print!("{}", output.summary);
    if let Some(dir) = &common.out {
        for p in output.write(dir, &spec.outputs)? {
            println!("wrote {}", p.display());
        }
    }
    if let (Some(f), Some(r)) = (common.stdout, output.reports.first()) {
        print!("{}", r.render(f.into()));
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Cmd::Solve(c) => execute(c, Command::Solve),
        Cmd::Minmax { common, at } => execute(common, Command::Minmax { at }),
        Cmd::Iterate { common, steps, emit } => {
            let emit = match emit {
                EmitArg::Profiles => Emit::Profiles,
                EmitArg::Shocks => Emit::Shocks,
                EmitArg::Errors => Emit::Errors,
            };
            execute(common, Command::Iterate { steps, emit })
        }
        Cmd::Wavefront(c) => execute(c, Command::Wavefront),
        Cmd::Riemann(c) => execute(c, Command::Riemann),
        Cmd::Conjugate(c) => execute(c, Command::Conjugate),
        Cmd::Envelope { common, kind, interval } => {
            let kind = match kind {
                KindArg::Convex => EnvelopeKind::Convex,
                KindArg::Concave => EnvelopeKind::Concave,
            };
            let interval = interval.map(|v| (v[0], v[1]));
            execute(common, Command::Envelope { kind, interval })
        }
        Cmd::Compare(c) => execute(c, Command::Compare),
        Cmd::Render { dump, out } => std::fs::read_to_string(&dump)
            .map_err(|e| Error::Io(format!("{}: {e}", dump.display())))
            .and_then(|text| render_dump(&text))
            .and_then(|r| {
                let output = RunOutput {
                    reports: vec![r],
                    summary: String::new(),
                };
                for p in output.write(&out, &[OutputFormat::Csv, OutputFormat::Svg])? {
                    println!("wrote {}", p.display());
                }
                Ok(())
            }),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
