//! `henon-lab`: command-line front end of henon-core.
//!
//! Every command prints its JSON report on stdout. `--output` (or the
//! `HENON_LAB_OUT` directory) also writes the report and its CSV tables to
//! disk. Errors go to stderr as JSON with a nonzero exit status.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use henon_core::halfspace::Core;
use henon_core::nonlinearity::{Kernel, Preset};
use henon_core::pipeline::{self, Command, Format, OutputSpec, PipelineError, RunConfig, Span};
use henon_core::regimes::Domain;
use henon_core::Tolerances;

#[derive(Parser, Debug)]
#[command(name = "henon-lab", version, about = "Numerical laboratory for -Δu = |x|^(-ℓ) u^q and relatives")]
struct Cli {
    /// Write the report (and CSV tables) here.
    #[arg(long, global = true)]
    output: Option<PathBuf>,
    /// Format of the file at --output.
    #[arg(long, global = true, value_enum)]
    format: Option<OutFormat>,
    /// Random seed; required by mp-check.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// JSON file with tolerance overrides (missing fields keep their defaults).
    #[arg(long, global = true)]
    tolerances: Option<PathBuf>,
    /// Record wall time in the report.
    #[arg(long, global = true)]
    timing: bool,
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum OutFormat {
    Json,
    Csv,
}

impl From<OutFormat> for Format {
    fn from(f: OutFormat) -> Self {
        match f {
            OutFormat::Json => Format::Json,
            OutFormat::Csv => Format::Csv,
        }
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum PresetName {
    Henon,
    Matukuma,
    ScalarCurvature,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum CoreArg {
    Clamp,
    Singular,
}

fn dim_arg(s: &str) -> Result<u32, String> {
    let n: u32 = s.parse().map_err(|e| format!("{e}"))?;
    if n < 3 {
        return Err(format!("the dimension must be at least 3 (got {n})"));
    }
    Ok(n)
}

#[derive(Args, Debug)]
struct PresetArgs {
    #[arg(long, value_enum, default_value = "henon")]
    preset: PresetName,
    #[arg(long)]
    ell: Option<f64>,
    #[arg(long)]
    q: Option<f64>,
    /// Matukuma parameter.
    #[arg(long)]
    lambda: Option<f64>,
    /// Scalar-curvature kernel (1 + r²)^(-ℓ/2) instead of r^(-ℓ).
    #[arg(long)]
    regularized: bool,
}

impl PresetArgs {
    fn preset(&self, dim: Option<u32>) -> Result<Preset, String> {
        let need = |x: Option<f64>, name: &str| x.ok_or_else(|| format!("--{name} is required for this preset"));
        Ok(match self.preset {
            PresetName::Henon => Preset::Henon {
                ell: need(self.ell, "ell")?,
                q: need(self.q, "q")?,
            },
            PresetName::Matukuma => Preset::Matukuma {
                lambda: need(self.lambda, "lambda")?,
                q: need(self.q, "q")?,
            },
            PresetName::ScalarCurvature => {
                let ell = need(self.ell, "ell")?;
                Preset::ScalarCurvature {
                    n: dim.ok_or("--dim is required for the scalar-curvature preset")?,
                    kernel: if self.regularized {
                        Kernel::Regularized { ell }
                    } else {
                        Kernel::Power { ell }
                    },
                }
            }
        })
    }
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Regime tag, constants and windows for (N, ℓ, q).
    Classify {
        #[arg(long, value_parser = dim_arg)]
        dim: u32,
        #[arg(long, allow_hyphen_values = true)]
        ell: f64,
        #[arg(long)]
        q: f64,
        /// Allow solutions singular at the origin.
        #[arg(long)]
        punctured: bool,
        /// Accepted for compatibility; reports are always JSON.
        #[arg(long)]
        json: bool,
    },
    /// Regime tags over an (ℓ, q) grid, as CSV rows (ell, q, tag).
    Sweep {
        #[arg(long, value_parser = dim_arg)]
        dim: u32,
        #[arg(long, allow_hyphen_values = true)]
        ell_range: Span,
        #[arg(long)]
        q_range: Span,
    },
    /// Regular radial solution with u(0) = alpha.
    SolveRadial {
        #[command(flatten)]
        preset: PresetArgs,
        #[arg(long, value_parser = dim_arg)]
        dim: u32,
        #[arg(long)]
        alpha: f64,
        #[arg(long, default_value_t = 1e4)]
        rmax: f64,
        /// Emden–Fowler columns (t, v, vdot).
        #[arg(long)]
        ef: bool,
        /// Write the profile CSV here.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Periodic Ψ orbit of the critical exponent q = q2.
    Psi {
        #[arg(long, value_parser = dim_arg)]
        dim: u32,
        #[arg(long, allow_hyphen_values = true)]
        ell: f64,
        #[arg(long, allow_hyphen_values = true, default_value_t = 0.1)]
        psi0_offset: f64,
        #[arg(long, default_value_t = 10)]
        periods: usize,
    },
    /// Decay classification of a radial profile CSV (r, u, du).
    Decay {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, value_parser = dim_arg)]
        dim: u32,
        #[arg(long, allow_hyphen_values = true)]
        ell: f64,
        #[arg(long)]
        q: f64,
        /// Fraction of the log-radius span used as the tail window.
        #[arg(long)]
        window: Option<f64>,
    },
    /// Zonal solutions of the sphere equation for coefficient a.
    Sphere {
        #[arg(long, value_parser = dim_arg)]
        dim: u32,
        #[arg(long)]
        q: f64,
        #[arg(long)]
        a: f64,
        #[arg(long)]
        scan_s: Option<Span>,
    },
    /// Non-radial solution u = |x|^(-γ)V(θ) from the zonal branch.
    Nonradial {
        #[arg(long, value_parser = dim_arg)]
        dim: u32,
        #[arg(long)]
        q: f64,
        #[arg(long)]
        ell: Option<f64>,
        /// Write the (theta, V) profile CSV here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Seeded random instances of the discrete half-space maximum principle.
    MpCheck {
        #[arg(long, default_value_t = 3)]
        dim: usize,
        #[arg(long, default_value_t = 200)]
        instances: usize,
        /// Format of the file at --output.
        #[arg(long, value_enum)]
        report: Option<OutFormat>,
    },
    /// Moving-plane reflection scan of a radial profile CSV.
    Reflect {
        #[arg(long)]
        solution: PathBuf,
        #[arg(long, value_parser = dim_arg, default_value_t = 3)]
        dim: u32,
        /// 1-based coordinate index.
        #[arg(long, default_value_t = 1)]
        axis: usize,
        #[arg(long, allow_hyphen_values = true, default_value = "-1:1:21")]
        lambda: Span,
        #[arg(long, value_enum, default_value = "clamp")]
        core: CoreArg,
        /// Translate the profile along the axis first.
        #[arg(long, allow_hyphen_values = true, default_value_t = 0.0)]
        shift: f64,
    },
    /// Hypothesis audit of a nonlinearity; with --dim and --alpha also the
    /// radial symmetry pipeline.
    Validate {
        #[command(flatten)]
        preset: PresetArgs,
        #[arg(long, value_parser = dim_arg)]
        dim: Option<u32>,
        /// Log-spaced central values lo:hi:n.
        #[arg(long)]
        alpha: Option<Span>,
        #[arg(long, default_value_t = 1e20)]
        rmax: f64,
    },
    /// Re-runs a configuration echoed in an earlier report or given as JSON.
    Replay {
        config: PathBuf,
    },
}

fn usage(msg: impl Into<String>) -> PipelineError {
    PipelineError::Usage(msg.into())
}

fn read_json(path: &PathBuf) -> Result<serde_json::Value, PipelineError> {
    let text = std::fs::read_to_string(path).map_err(|e| PipelineError::Io(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| usage(format!("{}: {e}", path.display())))
}

fn build_config(cli: Cli) -> Result<RunConfig, PipelineError> {
    let mut format = cli.format.map(Format::from);
    let mut output = cli.output;
    let command = match cli.command {
        Cmd::Classify {
            dim,
            ell,
            q,
            punctured,
            json: _,
        } => Command::Classify {
            dim,
            ell,
            q,
            domain: if punctured { Domain::Punctured } else { Domain::Whole },
        },
        Cmd::Sweep {
            dim,
            ell_range,
            q_range,
        } => Command::Sweep {
            dim,
            ell_range,
            q_range,
        },
        Cmd::SolveRadial {
            preset,
            dim,
            alpha,
            rmax,
            ef,
            csv,
        } => {
            if let Some(p) = csv {
                output = Some(p);
                format = Some(Format::Csv);
            }
            Command::SolveRadial {
                preset: preset.preset(Some(dim)).map_err(usage)?,
                dim,
                alpha,
                rmax,
                ef,
            }
        }
        Cmd::Psi {
            dim,
            ell,
            psi0_offset,
            periods,
        } => Command::Psi {
            dim,
            ell,
            psi0_offset,
            periods,
        },
        Cmd::Decay {
            input,
            dim,
            ell,
            q,
            window,
        } => Command::Decay {
            input,
            dim,
            ell,
            q,
            window,
        },
        Cmd::Sphere { dim, q, a, scan_s } => Command::Sphere { dim, q, a, scan_s },
        Cmd::Nonradial { dim, q, ell, out } => {
            if let Some(p) = out {
                output = Some(p);
                format = Some(Format::Csv);
            }
            Command::Nonradial { dim, q, ell }
        }
        Cmd::MpCheck { dim, instances, report } => {
            if let Some(f) = report {
                format = Some(f.into());
            }
            Command::MpCheck { dim, instances }
        }
        Cmd::Reflect {
            solution,
            dim,
            axis,
            lambda,
            core,
            shift,
        } => Command::Reflect {
            solution,
            dim,
            axis,
            lambda,
            core: match core {
                CoreArg::Clamp => Core::Clamp,
                CoreArg::Singular => Core::Singular,
            },
            shift,
        },
        Cmd::Validate {
            preset,
            dim,
            alpha,
            rmax,
        } => Command::Validate {
            preset: preset.preset(dim).map_err(usage)?,
            dim,
            alpha,
            rmax,
        },
        Cmd::Replay { config } => {
            let v = read_json(&config)?;
            // accept either a bare config or a full report envelope
            let cfg = v.get("config").cloned().unwrap_or(v);
            let mut cfg: RunConfig = serde_json::from_value(cfg).map_err(|e| usage(format!("config: {e}")))?;
            if output.is_some() {
                cfg.output = output.map(|path| OutputSpec {
                    format: format.unwrap_or(Format::Json),
                    path,
                });
            }
            return Ok(cfg);
        }
    };
    let mut cfg = RunConfig::new(command);
    cfg.seed = cli.seed;
    cfg.timing = cli.timing;
    if let Some(path) = &cli.tolerances {
        cfg.tolerances =
            serde_json::from_value::<Tolerances>(read_json(path)?).map_err(|e| usage(format!("tolerances: {e}")))?;
    }
    cfg.output = match output {
        Some(path) => Some(OutputSpec {
            format: format.unwrap_or_else(|| guess_format(&path)),
            path,
        }),
        None => std::env::var_os("HENON_LAB_OUT").map(|dir| {
            let mut spec = pipeline::default_output(dir.as_ref(), &cfg.command);
            if let Some(f) = format {
                spec.format = f;
                if f == Format::Csv {
                    spec.path.set_extension("csv");
                }
            }
            spec
        }),
    };
    Ok(cfg)
}

fn guess_format(path: &std::path::Path) -> Format {
    match path.extension().and_then(|e| e.to_str()) {
        Some("csv") => Format::Csv,
        _ => Format::Json,
    }
}

fn fail(e: &PipelineError) -> ExitCode {
    eprintln!("{}", serde_json::to_string_pretty(&e.to_report()).expect("error report serialises"));
    ExitCode::from(e.exit_code() as u8)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                e.exit();
            }
            return fail(&usage(e.to_string().trim_end()));
        }
    };
    let cfg = match build_config(cli) {
        Ok(c) => c,
        Err(e) => return fail(&e),
    };
    let out = match pipeline::run(&cfg) {
        Ok(o) => o,
        Err(e) => return fail(&e),
    };
    println!("{}", out.to_json());
    if let Some(spec) = &cfg.output {
        match out.write(spec) {
            Ok(paths) => {
                for p in paths {
                    eprintln!("wrote {}", p.display());
                }
            }
            Err(e) => return fail(&e),
        }
    }
    ExitCode::SUCCESS
}
