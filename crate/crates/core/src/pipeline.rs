//! Serialisable run configurations, the report envelope and the dispatcher
//! behind the command-line front end.
//!
//! A [`RunConfig`] fully determines a run: [`run`] returns the same envelope
//! and tables for the same config (wall time is only recorded on request).
//! Reports are JSON; profiles and scans are CSV tables whose first line is a
//! `#` comment echoing the config.

mod nonradial;
mod symmetry;

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;

use crate::config::Tolerances;
use crate::halfspace::{self, reflection_scan, Core, HalfspaceError, RadialField, SamplingSpec, Translated};
use crate::nonlinearity::{self, AuditGrid, HypothesisProfile, Nonlinearity, Preset, PresetError};
use crate::radial::io::{read_radial_file, write_ef_csv, write_radial_csv};
use crate::radial::psi::PsiConstants;
use crate::radial::{self, classify_decay, OriginKind, RadialError, RadialSolution, ShootOutcome};
use crate::regimes::{
    self, classify_on, derive_constants, nonradial_windows, Domain, ParamError, ProblemParams, RegimeTag,
    DEFAULT_EPSILON0,
};
use crate::roots::{linspace, logspace};
use crate::sphere::{self, SphereError, SphereProfile};

pub use nonradial::{nonradial_pipeline, NonradialReport, ProfileSummary, ReflectionSummary};
pub use symmetry::{pipeline_symmetry_report, AlphaRecord, FamilyCheck, RunMode, SymmetryReport};

pub const SCHEMA: &str = "henon-lab/report/v1";
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PipelineError {
    #[error("usage: {0}")]
    Usage(String),
    #[error("{module}: {message}")]
    Domain {
        module: &'static str,
        message: String,
        witness: Option<Value>,
    },
    #[error("refused for {tag}: {message}")]
    Refused { tag: RegimeTag, message: String },
    #[error("i/o: {0}")]
    Io(String),
}

impl PipelineError {
    fn domain(module: &'static str, message: impl Into<String>, witness: Option<Value>) -> Self {
        PipelineError::Domain {
            module,
            message: message.into(),
            witness,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            PipelineError::Usage(_) => "usage",
            PipelineError::Domain { .. } => "domain",
            PipelineError::Refused { .. } => "refused",
            PipelineError::Io(_) => "io",
        }
    }

    /// Process exit status for this error.
    pub fn exit_code(&self) -> i32 {
        match self {
            PipelineError::Usage(_) => 2,
            PipelineError::Domain { .. } => 3,
            PipelineError::Refused { .. } => 4,
            PipelineError::Io(_) => 5,
        }
    }

    /// Machine-readable error report.
    pub fn to_report(&self) -> Value {
        let mut err = json!({ "kind": self.kind(), "message": self.to_string() });
        match self {
            PipelineError::Domain { module, witness, .. } => {
                err["module"] = json!(module);
                err["witness"] = witness.clone().unwrap_or(Value::Null);
            }
            PipelineError::Refused { tag, .. } => err["tag"] = json!(tag),
            _ => {}
        }
        json!({ "schema": SCHEMA, "tool_version": TOOL_VERSION, "error": err })
    }
}

impl From<ParamError> for PipelineError {
    fn from(e: ParamError) -> Self {
        match e {
            ParamError::Dimension(_) | ParamError::Exponent(_) | ParamError::Ell(_) => {
                PipelineError::Usage(e.to_string())
            }
            _ => PipelineError::domain("regimes", e.to_string(), None),
        }
    }
}

impl From<PresetError> for PipelineError {
    fn from(e: PresetError) -> Self {
        PipelineError::Usage(e.to_string())
    }
}

impl From<RadialError> for PipelineError {
    fn from(e: RadialError) -> Self {
        let witness = match &e {
            RadialError::Params(p) => return p.clone().into(),
            RadialError::StepFailure { r, .. } => Some(json!({ "r": r })),
            RadialError::Divergence { t, v } => Some(json!({ "t": t, "v": v })),
            RadialError::Invalid(_) => None,
        };
        PipelineError::domain("radial", e.to_string(), witness)
    }
}

impl From<SphereError> for PipelineError {
    fn from(e: SphereError) -> Self {
        let witness = match &e {
            SphereError::Params(p) => return p.clone().into(),
            SphereError::Blowup(th) | SphereError::NonPositive(th) => Some(json!({ "theta": th })),
            SphereError::NoMatch { s } => Some(json!({ "s": s })),
            SphereError::Step(_) | SphereError::Invalid(_) => None,
        };
        PipelineError::domain("sphere", e.to_string(), witness)
    }
}

impl From<HalfspaceError> for PipelineError {
    fn from(e: HalfspaceError) -> Self {
        match e {
            HalfspaceError::Params(p) => p.into(),
            other => PipelineError::domain("halfspace", other.to_string(), None),
        }
    }
}

// ------------------------------------------------------------------ config

/// `lo:hi:n`, sampled linearly unless a command says otherwise.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Span {
    pub lo: f64,
    pub hi: f64,
    pub n: usize,
}

impl Span {
    pub fn new(lo: f64, hi: f64, n: usize) -> Self {
        Self { lo, hi, n }
    }

    pub fn linspace(&self) -> Vec<f64> {
        linspace(self.lo, self.hi, self.n)
    }

    pub fn logspace(&self) -> Vec<f64> {
        logspace(self.lo, self.hi, self.n)
    }

    fn check(&self, what: &str) -> Result<(), PipelineError> {
        let ok = self.lo.is_finite() && self.hi.is_finite() && self.n >= 1 && (self.n == 1 || self.hi > self.lo);
        if ok {
            Ok(())
        } else {
            Err(PipelineError::Usage(format!(
                "{what}: need finite lo < hi and n >= 1 (got {self})"
            )))
        }
    }

    fn check_positive(&self, what: &str) -> Result<(), PipelineError> {
        self.check(what)?;
        if self.lo > 0.0 {
            Ok(())
        } else {
            Err(PipelineError::Usage(format!("{what}: values must be positive (got {self})")))
        }
    }
}

impl fmt::Display for Span {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}:{}", self.lo, self.hi, self.n)
    }
}

impl FromStr for Span {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let parts: Vec<&str> = s.split(':').collect();
        if parts.len() != 3 {
            return Err(format!("expected lo:hi:n, got {s:?}"));
        }
        let lo = parts[0].trim().parse::<f64>().map_err(|e| format!("lo: {e}"))?;
        let hi = parts[1].trim().parse::<f64>().map_err(|e| format!("hi: {e}"))?;
        let n = parts[2].trim().parse::<usize>().map_err(|e| format!("n: {e}"))?;
        Ok(Span { lo, hi, n })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "kebab-case")]
pub enum Command {
    Classify {
        #[serde(rename = "N")]
        dim: u32,
        ell: f64,
        q: f64,
        #[serde(default)]
        domain: Domain,
    },
    Sweep {
        #[serde(rename = "N")]
        dim: u32,
        ell_range: Span,
        q_range: Span,
    },
    SolveRadial {
        preset: Preset,
        #[serde(rename = "N")]
        dim: u32,
        alpha: f64,
        rmax: f64,
        /// Emit Emden–Fowler columns (t, v, vdot) instead of (r, u, du).
        #[serde(default)]
        ef: bool,
    },
    Psi {
        #[serde(rename = "N")]
        dim: u32,
        ell: f64,
        /// Start at rest from Ψ₀ + offset.
        psi0_offset: f64,
        periods: usize,
    },
    Decay {
        input: PathBuf,
        #[serde(rename = "N")]
        dim: u32,
        ell: f64,
        q: f64,
        #[serde(default)]
        window: Option<f64>,
    },
    Sphere {
        #[serde(rename = "N")]
        dim: u32,
        q: f64,
        a: f64,
        /// Linear grid of pole values; the default grid is used otherwise.
        #[serde(default)]
        scan_s: Option<Span>,
    },
    Nonradial {
        #[serde(rename = "N")]
        dim: u32,
        q: f64,
        /// Chosen inside the empirical window when absent.
        #[serde(default)]
        ell: Option<f64>,
    },
    MpCheck {
        #[serde(rename = "N")]
        dim: usize,
        instances: usize,
    },
    Reflect {
        solution: PathBuf,
        #[serde(rename = "N")]
        dim: u32,
        /// 1-based coordinate index of the reflection direction.
        axis: usize,
        lambda: Span,
        #[serde(default = "default_core")]
        core: Core,
        /// Translate the profile by this amount along the axis before scanning.
        #[serde(default)]
        shift: f64,
    },
    Validate {
        preset: Preset,
        /// With a dimension and an α span (log-spaced), also runs the
        /// symmetry pipeline for Hénon presets.
        #[serde(rename = "N", default)]
        dim: Option<u32>,
        #[serde(default)]
        alpha: Option<Span>,
        #[serde(default = "default_rmax")]
        rmax: f64,
    },
}

fn default_core() -> Core {
    Core::Clamp
}

fn default_rmax() -> f64 {
    symmetry::DEFAULT_RMAX
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Classify { .. } => "classify",
            Command::Sweep { .. } => "sweep",
            Command::SolveRadial { .. } => "solve-radial",
            Command::Psi { .. } => "psi",
            Command::Decay { .. } => "decay",
            Command::Sphere { .. } => "sphere",
            Command::Nonradial { .. } => "nonradial",
            Command::MpCheck { .. } => "mp-check",
            Command::Reflect { .. } => "reflect",
            Command::Validate { .. } => "validate",
        }
    }

    fn randomized(&self) -> bool {
        matches!(self, Command::MpCheck { .. })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutputSpec {
    pub path: PathBuf,
    pub format: Format,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    #[serde(flatten)]
    pub command: Command,
    #[serde(default)]
    pub output: Option<OutputSpec>,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub tolerances: Tolerances,
    /// Record wall time in the envelope (makes reports non-reproducible).
    #[serde(default)]
    pub timing: bool,
}

impl RunConfig {
    pub fn new(command: Command) -> Self {
        Self {
            command,
            output: None,
            seed: None,
            tolerances: Tolerances::default(),
            timing: false,
        }
    }

    pub fn validate(&self) -> Result<(), PipelineError> {
        let dim_ok = |n: u32| -> Result<(), PipelineError> {
            if n < 3 {
                Err(PipelineError::Usage(format!("dimension must be at least 3 (got {n})")))
            } else {
                Ok(())
            }
        };
        if self.command.randomized() && self.seed.is_none() {
            return Err(PipelineError::Usage(format!("{} needs --seed", self.command.name())));
        }
        match &self.command {
            Command::Classify { dim, .. } | Command::Psi { dim, .. } | Command::Decay { dim, .. } => dim_ok(*dim),
            Command::Sweep { dim, ell_range, q_range } => {
                dim_ok(*dim)?;
                ell_range.check("ell range")?;
                q_range.check_positive("q range")
            }
            Command::SolveRadial { dim, alpha, rmax, .. } => {
                dim_ok(*dim)?;
                if !(*alpha > 0.0 && alpha.is_finite() && *rmax > 0.0 && rmax.is_finite()) {
                    return Err(PipelineError::Usage("alpha and rmax must be positive".into()));
                }
                Ok(())
            }
            Command::Sphere { dim, scan_s, .. } => {
                dim_ok(*dim)?;
                if let Some(s) = scan_s {
                    s.check_positive("pole-value scan")?;
                    if s.n < 2 {
                        return Err(PipelineError::Usage("pole-value scan needs n >= 2".into()));
                    }
                }
                Ok(())
            }
            Command::Nonradial { dim, .. } => {
                dim_ok(*dim)?;
                if *dim < 4 {
                    return Err(PipelineError::Usage(format!(
                        "non-radial construction needs N >= 4 (got {dim})"
                    )));
                }
                Ok(())
            }
            Command::MpCheck { dim, instances } => {
                if !(2..=3).contains(dim) {
                    return Err(PipelineError::Usage(format!("mp-check grids are 2-D or 3-D (got {dim})")));
                }
                if *instances == 0 {
                    return Err(PipelineError::Usage("need at least one instance".into()));
                }
                Ok(())
            }
            Command::Reflect { dim, axis, lambda, .. } => {
                dim_ok(*dim)?;
                if !(1..=*dim as usize).contains(axis) {
                    return Err(PipelineError::Usage(format!("axis must lie in 1..={dim} (got {axis})")));
                }
                lambda.check("lambda grid")
            }
            Command::Validate { dim, alpha, rmax, .. } => {
                if let Some(n) = dim {
                    dim_ok(*n)?;
                }
                if let Some(a) = alpha {
                    a.check_positive("alpha span")?;
                    if dim.is_none() {
                        return Err(PipelineError::Usage("an alpha span needs a dimension".into()));
                    }
                }
                if !(*rmax > 1.0) {
                    return Err(PipelineError::Usage("rmax must exceed 1".into()));
                }
                Ok(())
            }
        }
    }
}

// ---------------------------------------------------------------- reports

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportEnvelope {
    pub schema: String,
    pub tool_version: String,
    pub config: RunConfig,
    pub results: Value,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wall_time_s: Option<f64>,
}

/// A CSV table produced by a run, header included.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub name: String,
    pub csv: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub envelope: ReportEnvelope,
    /// The first table is the primary one (written to the output path in CSV format).
    pub tables: Vec<Table>,
}

impl RunOutput {
    pub fn table(&self, name: &str) -> Option<&Table> {
        self.tables.iter().find(|t| t.name == name)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.envelope).expect("report serialises")
    }

    /// Writes the artifacts described by `spec` and returns their paths.
    ///
    /// JSON: the envelope goes to `path`, tables to `<stem>.<table>.csv`.
    /// CSV: the primary table goes to `path`, the envelope to `<stem>.json`
    /// and the other tables next to it.
    pub fn write(&self, spec: &OutputSpec) -> Result<Vec<PathBuf>, PipelineError> {
        let sibling = |suffix: &str| -> PathBuf {
            let stem = spec.path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
            spec.path.with_file_name(format!("{stem}.{suffix}"))
        };
        let mut written = Vec::new();
        let mut put = |path: PathBuf, body: &str| -> Result<(), PipelineError> {
            if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
                std::fs::create_dir_all(dir).map_err(|e| PipelineError::Io(format!("{}: {e}", dir.display())))?;
            }
            std::fs::write(&path, body).map_err(|e| PipelineError::Io(format!("{}: {e}", path.display())))?;
            written.push(path);
            Ok(())
        };
        match spec.format {
            Format::Json => {
                put(spec.path.clone(), &self.to_json())?;
                for t in &self.tables {
                    put(sibling(&format!("{}.csv", t.name)), &t.csv)?;
                }
            }
            Format::Csv => {
                let mut tables = self.tables.iter();
                match tables.next() {
                    Some(t) => put(spec.path.clone(), &t.csv)?,
                    None => {
                        return Err(PipelineError::Usage(format!(
                            "{} produces no table; use JSON output",
                            self.envelope.config.command.name()
                        )))
                    }
                }
                put(sibling("json"), &self.to_json())?;
                for t in tables {
                    put(sibling(&format!("{}.csv", t.name)), &t.csv)?;
                }
            }
        }
        Ok(written)
    }
}

/// Default artifact location inside `dir` for a command.
pub fn default_output(dir: &Path, command: &Command) -> OutputSpec {
    OutputSpec {
        path: dir.join(format!("{}.json", command.name())),
        format: Format::Json,
    }
}

struct Tables {
    header: String,
    list: Vec<Table>,
}

impl Tables {
    fn new(config: &RunConfig) -> Self {
        let cfg = serde_json::to_string(config).expect("config serialises");
        Self {
            header: format!("# {SCHEMA} {TOOL_VERSION} config={cfg}\n"),
            list: Vec::new(),
        }
    }

    fn push_raw(&mut self, name: &str, body: &[u8]) {
        let mut csv = self.header.clone();
        csv.push_str(&String::from_utf8_lossy(body));
        self.list.push(Table {
            name: name.into(),
            csv,
        });
    }

    fn push<I, R>(&mut self, name: &str, header: &[&str], rows: I)
    where
        I: IntoIterator<Item = R>,
        R: IntoIterator<Item = String>,
    {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(header).expect("in-memory csv");
        for r in rows {
            w.write_record(r.into_iter().collect::<Vec<_>>()).expect("in-memory csv");
        }
        let body = w.into_inner().expect("in-memory csv");
        self.push_raw(name, &body);
    }
}

fn num(x: f64) -> String {
    // ryu shortest round-trip form, as serde_json and csv use
    let mut s = serde_json::to_string(&x).unwrap_or_default();
    if s == "null" {
        s = if x.is_nan() { "NaN".into() } else if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    s
}

fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

fn to_value<T: Serialize>(x: &T) -> Value {
    serde_json::to_value(x).expect("result serialises")
}

// -------------------------------------------------------------- dispatcher

pub fn run(config: &RunConfig) -> Result<RunOutput, PipelineError> {
    config.validate()?;
    let start = Instant::now();
    let tol = &config.tolerances;
    let mut tables = Tables::new(config);
    let results = match &config.command {
        Command::Classify { dim, ell, q, domain } => run_classify(*dim, *ell, *q, *domain)?,
        Command::Sweep { dim, ell_range, q_range } => run_sweep(*dim, ell_range, q_range, &mut tables),
        Command::SolveRadial {
            preset,
            dim,
            alpha,
            rmax,
            ef,
        } => run_solve_radial(*preset, *dim, *alpha, *rmax, *ef, tol, &mut tables)?,
        Command::Psi {
            dim,
            ell,
            psi0_offset,
            periods,
        } => run_psi(*dim, *ell, *psi0_offset, *periods, tol, &mut tables)?,
        Command::Decay {
            input,
            dim,
            ell,
            q,
            window,
        } => run_decay(input, *dim, *ell, *q, *window)?,
        Command::Sphere { dim, q, a, scan_s } => run_sphere(*dim, *q, *a, scan_s.as_ref(), tol, &mut tables)?,
        Command::Nonradial { dim, q, ell } => {
            let rep = nonradial_pipeline(*dim, *q, *ell, config.seed.unwrap_or(0), tol)?;
            tables.push(
                "profile",
                &["theta", "V", "dV"],
                (0..rep.profile.theta.len()).map(|i| {
                    [num(rep.profile.theta[i]), num(rep.profile.v[i]), num(rep.profile.dv[i])]
                }),
            );
            let n = *dim as usize;
            let mut header: Vec<String> = (1..=n).map(|i| format!("x{i}")).collect();
            header.extend(["r", "theta", "u", "relative_residual"].map(String::from));
            let header: Vec<&str> = header.iter().map(|s| s.as_str()).collect();
            tables.push(
                "samples",
                &header,
                rep.samples.iter().map(|s| {
                    let mut row: Vec<String> = s.x.iter().map(|&c| num(c)).collect();
                    row.extend([num(s.r), num(s.theta), num(s.u), num(s.relative_residual)]);
                    row
                }),
            );
            to_value(&rep.summary())
        }
        Command::MpCheck { dim, instances } => {
            let seed = config.seed.expect("validated");
            let rep = halfspace::run_mp_batch(*dim, *instances, seed, tol);
            tables.push(
                "instances",
                &[
                    "id",
                    "n",
                    "omega_nodes",
                    "a",
                    "b",
                    "K",
                    "equality",
                    "max_interior",
                    "violations",
                    "iterations",
                    "error",
                ],
                rep.summaries.iter().map(|s| {
                    [
                        s.id.to_string(),
                        s.n.to_string(),
                        s.omega_nodes.to_string(),
                        num(s.a),
                        num(s.b),
                        num(s.k),
                        s.equality.to_string(),
                        opt(s.max_interior),
                        s.violations.to_string(),
                        s.iterations.to_string(),
                        s.error.clone().unwrap_or_default(),
                    ]
                }),
            );
            to_value(&rep)
        }
        Command::Reflect {
            solution,
            dim,
            axis,
            lambda,
            core,
            shift,
        } => run_reflect(solution, *dim, *axis, lambda, *core, *shift, config.seed.unwrap_or(0), &mut tables)?,
        Command::Validate {
            preset,
            dim,
            alpha,
            rmax,
        } => run_validate(*preset, *dim, alpha.as_ref(), *rmax, tol, &mut tables)?,
    };
    Ok(RunOutput {
        envelope: ReportEnvelope {
            schema: SCHEMA.into(),
            tool_version: TOOL_VERSION.into(),
            config: config.clone(),
            results,
            wall_time_s: config.timing.then(|| start.elapsed().as_secs_f64()),
        },
        tables: tables.list,
    })
}

fn run_classify(n: u32, ell: f64, q: f64, domain: Domain) -> Result<Value, PipelineError> {
    let p = ProblemParams::new(n, ell, q)?;
    let label = classify_on(&p, domain);
    let constants = derive_constants(&p)?;
    // windows only make sense for N ≥ 4 and q > 1; ε₀ is the nominal default here
    let windows = if n >= 4 && q > 1.0 {
        nonradial_windows(&p, DEFAULT_EPSILON0.min(0.5 * (p.nf() - 1.0) / (q - 1.0))).ok()
    } else {
        None
    };
    Ok(json!({
        "params": p,
        "domain": domain,
        "tag": label.tag,
        "requirements": label.requirements,
        "symmetry_center": label.symmetry_center,
        "constants": constants,
        "windows": windows,
        "tie_tolerance": regimes::TIE_REL,
    }))
}

fn run_sweep(n: u32, ell_range: &Span, q_range: &Span, tables: &mut Tables) -> Value {
    let mut counts: BTreeMap<String, usize> = BTreeMap::new();
    let mut rows = Vec::new();
    for &q in &q_range.linspace() {
        for &ell in &ell_range.linspace() {
            let tag = match ProblemParams::new(n, ell, q) {
                Ok(p) => regimes::classify(&p).tag.as_str().to_string(),
                Err(_) => "Invalid".to_string(),
            };
            *counts.entry(tag.clone()).or_default() += 1;
            rows.push([num(ell), num(q), tag]);
        }
    }
    let points = rows.len();
    tables.push("regions", &["ell", "q", "tag"], rows);
    json!({
        "N": n,
        "ell_range": ell_range,
        "q_range": q_range,
        "points": points,
        "counts": counts,
        "tie_tolerance": regimes::TIE_REL,
    })
}

fn run_solve_radial(
    preset: Preset,
    n: u32,
    alpha: f64,
    rmax: f64,
    ef: bool,
    tol: &Tolerances,
    tables: &mut Tables,
) -> Result<Value, PipelineError> {
    let nl = Nonlinearity::from_preset(preset)?;
    let shot = radial::shoot_regular(&nl, n, alpha, rmax, tol)?;
    let sol = &shot.solution;
    let residual = sol.residual().ok();
    let mut buf = Vec::new();
    if ef {
        let traj = radial::to_emden_fowler(sol)?;
        write_ef_csv(&traj, &mut buf)?;
    } else {
        write_radial_csv(sol, &mut buf)?;
    }
    tables.push_raw("profile", &buf);
    Ok(json!({
        "nonlinearity": nl.label,
        "params": sol.params,
        "alpha": alpha,
        "rmax": rmax,
        "outcome": shot.outcome,
        "positive": shot.outcome == ShootOutcome::Reached,
        "r_last": sol.r_last(),
        "nodes": sol.len(),
        "residual": residual,
        "residual_tolerance": tol.radial_residual,
        "ode_tolerances": { "rtol": tol.ode_rtol, "atol": tol.ode_atol },
        "columns": if ef { "t,v,vdot" } else { "r,u,du" },
    }))
}

fn run_psi(
    n: u32,
    ell: f64,
    offset: f64,
    periods: usize,
    tol: &Tolerances,
    tables: &mut Tables,
) -> Result<Value, PipelineError> {
    let q = regimes::q2(n, ell);
    let p = ProblemParams::new(n, ell, q)?;
    let c = PsiConstants::new(&p)?;
    let init = c.psi0 + offset;
    let orbit = radial::integrate_psi(&p, init, periods, tol)?;
    let lin = c.linear_period();
    tables.push(
        "orbit",
        &["t", "psi", "dpsi"],
        (0..orbit.t.len()).map(|i| [num(orbit.t[i]), num(orbit.psi[i]), num(orbit.dpsi[i])]),
    );
    Ok(json!({
        "params": p,
        "p": orbit.p,
        "psi0": orbit.psi0,
        "psi_init": init,
        "well_top": c.well_top(),
        "energy": orbit.energy,
        "energy_drift": orbit.energy_drift,
        "energy_drift_tolerance": 1e-6,
        "period": orbit.period,
        "linear_period": lin,
        "period_relative_deviation": orbit.period.map(|t| (t - lin).abs() / lin),
        "is_equilibrium": orbit.is_equilibrium,
        "extrema": orbit.extrema.len(),
        "ode_tolerances": { "rtol": tol.fine_rtol, "atol": tol.fine_atol },
    }))
}

fn run_decay(input: &Path, n: u32, ell: f64, q: f64, window: Option<f64>) -> Result<Value, PipelineError> {
    let p = ProblemParams::new(n, ell, q)?;
    let s = read_radial_file(input)?;
    let sol = RadialSolution {
        params: p,
        nl: Nonlinearity::henon(ell, q),
        grid: s.r,
        u: s.u,
        du: s.du,
        origin_kind: OriginKind::Singular,
    };
    let rep = classify_decay(&sol, window.unwrap_or(radial::decay::DEFAULT_WINDOW))?;
    Ok(json!({ "input": input, "params": p, "report": rep }))
}

fn profile_table(tables: &mut Tables, name: &str, profiles: &[&SphereProfile]) {
    let mut header = vec!["theta".to_string()];
    header.extend((0..profiles.len()).map(|k| format!("V{k}")));
    let header: Vec<&str> = header.iter().map(|s| s.as_str()).collect();
    let theta = sphere::uniform_theta();
    tables.push(
        name,
        &header,
        (0..theta.len()).map(|i| {
            let mut row = vec![num(theta[i])];
            row.extend(profiles.iter().map(|p| num(p.v[i])));
            row
        }),
    );
}

fn run_sphere(
    n: u32,
    q: f64,
    a: f64,
    scan_s: Option<&Span>,
    tol: &Tolerances,
    tables: &mut Tables,
) -> Result<Value, PipelineError> {
    let grid = scan_s.map(|s| s.linspace());
    let scan = sphere::find_roots(n, a, q, grid.as_deref(), tol)?;
    let constant = sphere::constant_solution(n, a, q)?;
    let const_shot = sphere::mismatch(n, a, q, scan.constant_value, tol)?;
    tables.push(
        "mismatch",
        &["s", "mismatch"],
        scan.samples.iter().map(|(s, m)| [num(*s), opt(*m)]),
    );
    let mut profiles = vec![&constant];
    profiles.extend(scan.branch.iter());
    profile_table(tables, "profiles", &profiles);
    let branch: Vec<ProfileSummary> = scan.branch.iter().map(ProfileSummary::of).collect();
    Ok(json!({
        "N": n,
        "q": q,
        "a": a,
        "a_star": (n as f64 - 1.0) / (q - 1.0),
        "uniqueness": sphere::uniqueness_verdict(n, a, q),
        "constant_value": scan.constant_value,
        "constant_mismatch": const_shot.mismatch,
        "constant_root": scan.constant_root,
        "branch": branch,
        "rejected_roots": scan.rejected,
        "samples": scan.samples.len(),
        "failed_samples": scan.samples.iter().filter(|s| s.1.is_none()).count(),
        "residual_tolerance": tol.sphere_residual,
        "profile_columns": "V0 is the constant solution, V1.. the non-constant roots",
    }))
}

#[allow(clippy::too_many_arguments)]
fn run_reflect(
    path: &Path,
    n: u32,
    axis: usize,
    lambda: &Span,
    core: Core,
    shift: f64,
    seed: u64,
    tables: &mut Tables,
) -> Result<Value, PipelineError> {
    let s = read_radial_file(path)?;
    let field = RadialField::from_samples(&s, n as usize, core)?;
    let mut delta = vec![0.0; n as usize];
    delta[axis - 1] = shift;
    let moved = Translated { inner: field, shift: delta };
    let spec = SamplingSpec {
        seed,
        ..SamplingSpec::default()
    };
    let scan = reflection_scan(&moved, axis - 1, &lambda.linspace(), &spec)?;
    tables.push(
        "scan",
        &["lambda", "sup_w", "positive", "hopf_max"],
        (0..scan.lambda_grid.len()).map(|i| {
            [
                num(scan.lambda_grid[i]),
                opt(scan.sup_w_lambda[i]),
                scan.positive[i].to_string(),
                opt(scan.hopf_max[i]),
            ]
        }),
    );
    // a radial profile centred at `shift` along the axis
    let agrees = scan.lambda_plus.map(|l| (l - shift).abs() <= scan.resolution * (1.0 + 1e-9));
    Ok(json!({
        "input": path,
        "N": n,
        "axis": axis,
        "shift": shift,
        "sampling": spec,
        "lambda_plus": scan.lambda_plus,
        "lambda_plus_uncertainty": scan.resolution,
        "expected_lambda_plus": shift,
        "agrees_with_centre": agrees,
        "scan": scan,
    }))
}

fn run_validate(
    preset: Preset,
    dim: Option<u32>,
    alpha: Option<&Span>,
    rmax: f64,
    tol: &Tolerances,
    tables: &mut Tables,
) -> Result<Value, PipelineError> {
    let nl = Nonlinearity::from_preset(preset)?;
    let grid = AuditGrid::default();
    let audit = nonlinearity::audit(&nl, &HypothesisProfile::for_power(nl.q), &grid);
    let fits = nonlinearity::fit_leading_order(&nl);
    let mut out = json!({
        "nonlinearity": nl.label,
        "preset": preset,
        "audit_grid": grid,
        "audit": audit,
        "all_passed": audit.all_passed(),
        "leading_order": fits,
    });
    if let (Some(n), Some(span)) = (dim, alpha) {
        let Preset::Henon { ell, q } = preset else {
            return Err(PipelineError::Usage("the symmetry pipeline runs on the henon preset only".into()));
        };
        let p = ProblemParams::new(n, ell, q)?;
        let rep = pipeline_symmetry_report(&p, &span.logspace(), rmax, tol)?;
        tables.push(
            "alphas",
            &["alpha", "outcome", "kind", "tail_limit", "tail_limit_rel_error", "lambda_plus", "discrepancies"],
            rep.alphas.iter().map(|r| {
                [
                    num(r.alpha),
                    r.outcome.clone().unwrap_or_default(),
                    r.decay_kind.map(|k| format!("{k:?}")).unwrap_or_default(),
                    opt(r.tail_limit),
                    opt(r.tail_limit_rel_error),
                    opt(r.lambda_plus),
                    r.discrepancies.join("; "),
                ]
            }),
        );
        out["symmetry"] = to_value(&rep);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn classify_cfg(dim: u32, ell: f64, q: f64) -> RunConfig {
        RunConfig::new(Command::Classify {
            dim,
            ell,
            q,
            domain: Domain::Whole,
        })
    }

    #[test]
    fn classify_example() {
        let out = run(&classify_cfg(5, 3.0, 0.5)).unwrap();
        let r = &out.envelope.results;
        assert_eq!(r["tag"], "Case_ii");
        assert!((r["constants"]["gamma"].as_f64().unwrap() - 2.0).abs() < 1e-14);
        assert!((r["constants"]["L"].as_f64().unwrap() - 0.25).abs() < 1e-14);
        assert_eq!(out.envelope.schema, SCHEMA);
        assert!(out.envelope.wall_time_s.is_none());
    }

    #[test]
    fn low_dimension_is_a_usage_error() {
        let e = run(&classify_cfg(2, 0.0, 3.0)).unwrap_err();
        assert!(matches!(e, PipelineError::Usage(_)));
        assert_eq!(e.exit_code(), 2);
        assert_eq!(e.to_report()["error"]["kind"], "usage");
    }

    #[test]
    fn mp_check_requires_a_seed() {
        let cfg = RunConfig::new(Command::MpCheck { dim: 3, instances: 2 });
        assert!(matches!(run(&cfg), Err(PipelineError::Usage(_))));
    }

    #[test]
    fn config_round_trips_through_json() {
        let mut cfg = RunConfig::new(Command::Sphere {
            dim: 4,
            q: 6.0,
            a: 0.5,
            scan_s: Some(Span::new(0.1, 2.0, 30)),
        });
        cfg.seed = Some(7);
        let text = serde_json::to_string(&cfg).unwrap();
        assert!(text.contains("\"command\":\"sphere\""));
        let back: RunConfig = serde_json::from_str(&text).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn span_parsing() {
        assert_eq!("-1:1:21".parse::<Span>().unwrap(), Span::new(-1.0, 1.0, 21));
        assert!("1:2".parse::<Span>().is_err());
        assert!("a:2:3".parse::<Span>().is_err());
    }

    #[test]
    fn identical_configs_give_identical_bytes() {
        let cfg = RunConfig::new(Command::Sweep {
            dim: 4,
            ell_range: Span::new(-1.0, 3.0, 9),
            q_range: Span::new(0.5, 6.0, 12),
        });
        let a = run(&cfg).unwrap();
        let b = run(&cfg).unwrap();
        assert_eq!(a.to_json(), b.to_json());
        assert_eq!(a.tables, b.tables);
        assert_eq!(a.envelope.results["points"], 108);
    }

    #[test]
    fn radial_csv_round_trips_into_reflect() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = RunConfig::new(Command::SolveRadial {
            preset: Preset::Henon { ell: 0.0, q: 7.0 },
            dim: 3,
            alpha: 1.0,
            rmax: 1e6,
            ef: false,
        });
        let path = dir.path().join("sol.csv");
        cfg.output = Some(OutputSpec {
            path: path.clone(),
            format: Format::Csv,
        });
        let out = run(&cfg).unwrap();
        let files = out.write(cfg.output.as_ref().unwrap()).unwrap();
        assert_eq!(files.len(), 2);
        assert!(std::fs::read_to_string(&path).unwrap().starts_with("# henon-lab/report/v1"));

        for shift in [0.0, 1.0] {
            let cfg = RunConfig::new(Command::Reflect {
                solution: path.clone(),
                dim: 3,
                axis: 1,
                lambda: Span::new(-1.0, 2.0, 31),
                core: Core::Clamp,
                shift,
            });
            let r = run(&cfg).unwrap().envelope.results;
            assert_eq!(r["agrees_with_centre"], true, "{shift}: {}", r["lambda_plus"]);
        }
    }

    #[test]
    fn psi_reports_drift_and_period() {
        let cfg = RunConfig::new(Command::Psi {
            dim: 6,
            ell: 0.0,
            psi0_offset: 0.01,
            periods: 4,
        });
        let r = run(&cfg).unwrap().envelope.results;
        assert!(r["energy_drift"].as_f64().unwrap() <= 1e-6);
        assert!(r["period_relative_deviation"].as_f64().unwrap() < 0.01);
    }
}
