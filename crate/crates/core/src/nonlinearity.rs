//! Nonlinearities `f(r, u)` with their partial derivatives, the standard
//! presets, and a sampling auditor for the growth and monotonicity hypotheses.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::roots::logspace;

pub type ScalarFn = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PresetError {
    #[error("Matukuma preset needs lambda > 0 (got {0})")]
    Lambda(f64),
    #[error("exponent q must be positive (got {0})")]
    Exponent(f64),
    #[error("scalar curvature preset needs N >= 3 (got {0})")]
    Dimension(u32),
    #[error("kernel exponent must be positive (got {0})")]
    Kernel(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Kernel {
    /// K(r) = r^(-ℓ)
    Power { ell: f64 },
    /// K(r) = (1 + r²)^(-ℓ/2), bounded at the origin with the same tail
    Regularized { ell: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "preset", rename_all = "snake_case")]
pub enum Preset {
    Henon { ell: f64, q: f64 },
    Matukuma { lambda: f64, q: f64 },
    ScalarCurvature { n: u32, kernel: Kernel },
}

#[derive(Clone)]
pub struct Nonlinearity {
    pub f: ScalarFn,
    pub f_r: ScalarFn,
    pub f_u: ScalarFn,
    pub ell: f64,
    pub q: f64,
    pub label: String,
    pub preset: Option<Preset>,
}

impl fmt::Debug for Nonlinearity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Nonlinearity")
            .field("label", &self.label)
            .field("ell", &self.ell)
            .field("q", &self.q)
            .field("preset", &self.preset)
            .finish()
    }
}

impl Nonlinearity {
    pub fn eval(&self, r: f64, u: f64) -> f64 {
        (self.f)(r, u)
    }

    pub fn henon(ell: f64, q: f64) -> Self {
        Self {
            f: Arc::new(move |r, u| r.powf(-ell) * u.powf(q)),
            f_r: Arc::new(move |r, u| -ell * r.powf(-ell - 1.0) * u.powf(q)),
            f_u: Arc::new(move |r, u| q * r.powf(-ell) * u.powf(q - 1.0)),
            ell,
            q,
            label: format!("henon(ell={ell}, q={q})"),
            preset: Some(Preset::Henon { ell, q }),
        }
    }

    /// `f(r,u) = r^(λ-2) (1+r²)^(-λ/2) u^q`; behaves like `r^(-2) u^q` at infinity.
    pub fn matukuma(lambda: f64, q: f64) -> Result<Self, PresetError> {
        if !(lambda > 0.0) {
            return Err(PresetError::Lambda(lambda));
        }
        if !(q > 0.0) {
            return Err(PresetError::Exponent(q));
        }
        let k = move |r: f64| r.powf(lambda - 2.0) * (1.0 + r * r).powf(-lambda / 2.0);
        // d/dr log K = (λ-2)/r - λ r/(1+r²)
        let dk = move |r: f64| k(r) * ((lambda - 2.0) / r - lambda * r / (1.0 + r * r));
        Ok(Self {
            f: Arc::new(move |r, u| k(r) * u.powf(q)),
            f_r: Arc::new(move |r, u| dk(r) * u.powf(q)),
            f_u: Arc::new(move |r, u| q * k(r) * u.powf(q - 1.0)),
            ell: 2.0,
            q,
            label: format!("matukuma(lambda={lambda}, q={q})"),
            preset: Some(Preset::Matukuma { lambda, q }),
        })
    }

    /// `f(r,u) = K(r) u^((N+2)/(N-2))`.
    pub fn scalar_curvature(n: u32, kernel: Kernel) -> Result<Self, PresetError> {
        if n < 3 {
            return Err(PresetError::Dimension(n));
        }
        let q = (n as f64 + 2.0) / (n as f64 - 2.0);
        let (ell, k, dk): (f64, ScalarFn, ScalarFn) = match kernel {
            Kernel::Power { ell } => {
                if !(ell > 0.0) {
                    return Err(PresetError::Kernel(ell));
                }
                (
                    ell,
                    Arc::new(move |r, _| r.powf(-ell)),
                    Arc::new(move |r, _| -ell * r.powf(-ell - 1.0)),
                )
            }
            Kernel::Regularized { ell } => {
                if !(ell > 0.0) {
                    return Err(PresetError::Kernel(ell));
                }
                (
                    ell,
                    Arc::new(move |r, _| (1.0 + r * r).powf(-ell / 2.0)),
                    Arc::new(move |r, _| -ell * r * (1.0 + r * r).powf(-ell / 2.0 - 1.0)),
                )
            }
        };
        let k1 = k.clone();
        Ok(Self {
            f: Arc::new(move |r, u| k1(r, u) * u.powf(q)),
            f_r: Arc::new(move |r, u| dk(r, u) * u.powf(q)),
            f_u: Arc::new(move |r, u| q * k(r, u) * u.powf(q - 1.0)),
            ell,
            q,
            label: format!("scalar_curvature(N={n}, K ~ r^-{ell})"),
            preset: Some(Preset::ScalarCurvature { n, kernel }),
        })
    }

    pub fn from_preset(p: Preset) -> Result<Self, PresetError> {
        match p {
            Preset::Henon { ell, q } => {
                if !(q > 0.0) {
                    return Err(PresetError::Exponent(q));
                }
                Ok(Self::henon(ell, q))
            }
            Preset::Matukuma { lambda, q } => Self::matukuma(lambda, q),
            Preset::ScalarCurvature { n, kernel } => Self::scalar_curvature(n, kernel),
        }
    }

    /// A user-supplied `f`; partial derivatives by centred differences.
    pub fn custom<F>(label: &str, ell: f64, q: f64, f: F) -> Self
    where
        F: Fn(f64, f64) -> f64 + Send + Sync + 'static,
    {
        let f: ScalarFn = Arc::new(f);
        let (fa, fb) = (f.clone(), f.clone());
        Self {
            f_r: Arc::new(move |r, u| central_diff(|x| fa(x, u), r)),
            f_u: Arc::new(move |r, u| central_diff(|x| fb(r, x), u)),
            f,
            ell,
            q,
            label: label.to_string(),
            preset: None,
        }
    }

    pub fn zero() -> Self {
        Self::custom("zero", 0.0, 1.0, |_, _| 0.0)
    }

    pub fn is_henon(&self) -> bool {
        matches!(self.preset, Some(Preset::Henon { .. }))
    }
}

/// Fourth-order centred difference with a step relative to `x`.
pub fn central_diff<F: Fn(f64) -> f64>(g: F, x: f64) -> f64 {
    let h = 1e-3 * x.abs().max(1e-8);
    (8.0 * (g(x + h) - g(x - h)) - (g(x + 2.0 * h) - g(x - 2.0 * h))) / (12.0 * h)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub r: f64,
    pub u: f64,
    /// The quantity that should have satisfied the inequality.
    pub value: f64,
    /// The bound it was compared against.
    pub bound: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckOutcome {
    pub passed: bool,
    pub witness: Option<Witness>,
    pub samples: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatioFit {
    /// Fitted order ε̂ of the relative deviation; `None` when the ratio is exact.
    pub epsilon_hat: Option<f64>,
    pub max_deviation: f64,
    pub deviations: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HypothesisProfile {
    pub u0: f64,
    pub r0: f64,
    pub d1: f64,
    pub d2: f64,
    pub d3: f64,
    pub epsilon: f64,
    pub checks: BTreeMap<String, CheckOutcome>,
    pub fxluq: BTreeMap<String, RatioFit>,
}

impl HypothesisProfile {
    pub fn new(u0: f64, r0: f64, d1: f64, d2: f64, d3: f64) -> Self {
        Self {
            u0,
            r0,
            d1,
            d2,
            d3,
            epsilon: 1.0,
            checks: BTreeMap::new(),
            fxluq: BTreeMap::new(),
        }
    }

    /// Constants that an exact power `r^(-ℓ)u^q` satisfies.
    pub fn for_power(q: f64) -> Self {
        Self::new(1.0, 1.0, q.max(1.0), q.max(1.0), 1.0)
    }

    pub fn passed(&self, name: &str) -> Option<bool> {
        self.checks.get(name).map(|c| c.passed)
    }

    pub fn all_passed(&self) -> bool {
        self.checks.values().all(|c| c.passed)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AuditGrid {
    pub n_r: usize,
    pub n_u: usize,
    /// Radii span `[r0, r0·r_span]`.
    pub r_span: f64,
    /// Values span `[u0/u_span, u0]`.
    pub u_span: f64,
}

impl Default for AuditGrid {
    fn default() -> Self {
        Self {
            n_r: 64,
            n_u: 64,
            r_span: 1e6,
            u_span: 1e6,
        }
    }
}

struct Tracker {
    passed: bool,
    worst: f64,
    witness: Option<Witness>,
    samples: usize,
}

impl Tracker {
    fn new() -> Self {
        Self {
            passed: true,
            worst: 0.0,
            witness: None,
            samples: 0,
        }
    }

    /// Records `value <= bound`, scaled violation `excess`.
    fn record(&mut self, r: f64, u: f64, value: f64, bound: f64, excess: f64) {
        self.samples += 1;
        if excess > 0.0 || !value.is_finite() {
            self.passed = false;
            let e = if excess.is_finite() { excess } else { f64::INFINITY };
            if self.witness.is_none() || e > self.worst {
                self.worst = e;
                self.witness = Some(Witness { r, u, value, bound });
            }
        }
    }

    fn finish(self) -> CheckOutcome {
        CheckOutcome {
            passed: self.passed,
            witness: self.witness,
            samples: self.samples,
        }
    }
}

const REL_SLACK: f64 = 1e-12;

pub fn audit(nl: &Nonlinearity, prof: &HypothesisProfile, grid: &AuditGrid) -> HypothesisProfile {
    let mut out = prof.clone();
    out.checks.clear();
    out.fxluq.clear();
    // open ranges r > r0, 0 < u < u0
    let rs = logspace(prof.r0 * (1.0 + 1e-9), prof.r0 * grid.r_span, grid.n_r.max(2));
    let us = logspace(prof.u0 / grid.u_span, prof.u0 * (1.0 - 1e-9), grid.n_u.max(2));
    let (ell, q) = (nl.ell, nl.q);

    let mut radial = Tracker::new();
    let mut upper = Tracker::new();
    let mut upper_u = Tracker::new();
    let mut lower = Tracker::new();
    let mut deriv = Tracker::new();
    for &u in &us {
        let mut prev: Option<(f64, f64)> = None;
        for &r in &rs {
            let f = nl.eval(r, u);
            let power = r.powf(-ell) * u.powf(q);
            if let Some((_, fp)) = prev {
                radial.record(r, u, f, fp, f - fp - REL_SLACK * fp.abs());
            }
            prev = Some((r, f));

            let b1 = prof.d1 * power;
            let pos_excess = if f > 0.0 { 0.0 } else { 1.0 };
            upper.record(r, u, f, b1, (f - b1 - REL_SLACK * b1).max(0.0) + pos_excess);

            let fu = (nl.f_u)(r, u);
            let b2 = prof.d2 * r.powf(-ell) * u.powf(q - 1.0);
            upper_u.record(r, u, fu, b2, fu - b2 - REL_SLACK * b2.abs());

            let b3 = prof.d3 * power;
            lower.record(r, u, b3, f, b3 - f - REL_SLACK * b3);

            let fr = (nl.f_r)(r, u);
            let fd_r = central_diff(|x| nl.eval(x, u), r);
            let fd_u = central_diff(|x| nl.eval(r, x), u);
            let er = (fr - fd_r).abs() - 1e-5 * (1.0 + fr.abs().max(fd_r.abs()) * 1.0);
            let eu = (fu - fd_u).abs() - 1e-5 * (1.0 + fu.abs().max(fd_u.abs()) * 1.0);
            if er > eu {
                deriv.record(r, u, fr, fd_r, er);
            } else {
                deriv.record(r, u, fu, fd_u, eu);
            }
        }
    }
    out.checks.insert("fradial".into(), radial.finish());
    out.checks.insert("fxluqsimple_f".into(), upper.finish());
    out.checks.insert("fxluqsimple_fu".into(), upper_u.finish());
    out.checks.insert("fsub".into(), lower.finish());
    out.checks.insert("derivatives".into(), deriv.finish());

    let fits = fit_leading_order(nl);
    let eps = fits
        .values()
        .filter_map(|f| f.epsilon_hat)
        .fold(f64::INFINITY, f64::min);
    out.epsilon = if eps.is_finite() { eps.clamp(0.0, 1.0) } else { 1.0 };
    out.fxluq = fits;
    out
}

/// Relative deviations of `f`, `f_r`, `f_u` from the pure power along
/// r = 10¹..10⁶, u = 10⁻¹..10⁻⁶, and the fitted order ε̂ in
/// `deviation ~ (r^-2 + u^2)^(ε/2)`.
pub fn fit_leading_order(nl: &Nonlinearity) -> BTreeMap<String, RatioFit> {
    let (ell, q) = (nl.ell, nl.q);
    let pts: Vec<(f64, f64)> = (1..=6)
        .map(|k| (10f64.powi(k), 10f64.powi(-k)))
        .collect();
    let mut out = BTreeMap::new();
    let mut push = |name: &str, dev: Vec<f64>| {
        out.insert(name.to_string(), fit_deviation(&pts, dev));
    };
    push(
        "f",
        pts.iter()
            .map(|&(r, u)| (nl.eval(r, u) / (r.powf(-ell) * u.powf(q)) - 1.0).abs())
            .collect(),
    );
    push(
        "f_u",
        pts.iter()
            .map(|&(r, u)| ((nl.f_u)(r, u) / (q * r.powf(-ell) * u.powf(q - 1.0)) - 1.0).abs())
            .collect(),
    );
    push(
        "f_r",
        pts.iter()
            .map(|&(r, u)| {
                let lead = r.powf(-ell - 1.0) * u.powf(q);
                if ell == 0.0 {
                    ((nl.f_r)(r, u) / lead).abs()
                } else {
                    ((nl.f_r)(r, u) / (-ell * lead) - 1.0).abs()
                }
            })
            .collect(),
    );
    out
}

fn fit_deviation(pts: &[(f64, f64)], dev: Vec<f64>) -> RatioFit {
    let max_deviation = dev.iter().cloned().fold(0.0, f64::max);
    if max_deviation <= 1e-12 || dev.iter().any(|d| !d.is_finite()) {
        return RatioFit {
            epsilon_hat: if max_deviation <= 1e-12 { None } else { Some(0.0) },
            max_deviation,
            deviations: dev,
        };
    }
    // least squares of ln dev against ln (r^-2 + u^2)^(1/2)
    let xy: Vec<(f64, f64)> = pts
        .iter()
        .zip(&dev)
        .filter(|(_, d)| **d > 1e-15)
        .map(|(&(r, u), d)| (0.5 * (r.powi(-2) + u * u).ln(), d.ln()))
        .collect();
    let eps = if xy.len() < 2 {
        None
    } else {
        let n = xy.len() as f64;
        let mx = xy.iter().map(|p| p.0).sum::<f64>() / n;
        let my = xy.iter().map(|p| p.1).sum::<f64>() / n;
        let sxy: f64 = xy.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        let sxx: f64 = xy.iter().map(|p| (p.0 - mx).powi(2)).sum();
        Some(sxy / sxx)
    };
    RatioFit {
        epsilon_hat: eps,
        max_deviation,
        deviations: dev,
    }
}
