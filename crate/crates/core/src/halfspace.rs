//! Half-space tools: the exponent `a` feeding the comparison function
//! `w(x) = x₁|x|^(a-N/2)`, a discrete maximum-principle harness on open sets
//! of the half-space, and moving-plane reflection scans.

pub mod mp;
pub mod reflect;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::regimes::{classify, ParamError, ProblemParams, RegimeTag};

pub use mp::{
    check_mp_hypotheses, discrete_mp_test, random_instance, run_mp_batch, MPBatchReport,
    MPCertificate, MPInstance, MPOutcome,
};
pub use reflect::{reflection_scan, Core, Field, RadialField, ReflectionScan, SamplingSpec, Translated};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum HalfspaceError {
    #[error(transparent)]
    Params(#[from] ParamError),
    #[error("{0}")]
    Invalid(String),
    #[error("linear solver failed: {0}")]
    Solver(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExponentSelection {
    pub a: f64,
    /// (N-2)/2 - γ.
    pub a0: f64,
    /// N²/4 - a0² - qγ(N-2-γ).
    #[serde(rename = "D")]
    pub d: f64,
    /// 2a + 2γ + 2 - N.
    pub ineq_a1_margin: f64,
    /// N²/4 - a² - max{1,q}γ(N-2-γ).
    pub ineq_a2_margin: f64,
}

/// Chooses a ∈ [0, N/2) with N < 2a + 2γ + 2 and
/// max{1,q}γ(N-2-γ) < N²/4 - a², for Case_i and Case_ii parameters.
pub fn select_halfspace_exponent(p: &ProblemParams) -> Result<ExponentSelection, HalfspaceError> {
    let tag = classify(p).tag;
    if !matches!(tag, RegimeTag::CaseI | RegimeTag::CaseII) {
        return Err(HalfspaceError::Invalid(format!(
            "exponent selection needs Case_i or Case_ii parameters (got {tag})"
        )));
    }
    let n = p.nf();
    let g = p.gamma()?;
    let lin = g * (n - 2.0 - g);
    let m = p.q.max(1.0) * lin;
    let a0 = (n - 2.0) / 2.0 - g;
    let d = n * n / 4.0 - a0 * a0 - p.q * lin;
    let a = if a0 < 0.0 {
        0.0
    } else {
        // a = a0 + δ with δ² + 2a0δ = D'/2, where D' is the (a2) margin at a0
        let dm = n * n / 4.0 - a0 * a0 - m;
        (a0 * a0 + 0.5 * dm).sqrt()
    };
    let sel = ExponentSelection {
        a,
        a0,
        d,
        ineq_a1_margin: 2.0 * a + 2.0 * g + 2.0 - n,
        ineq_a2_margin: n * n / 4.0 - a * a - m,
    };
    if !(sel.ineq_a1_margin > 0.0 && sel.ineq_a2_margin > 0.0 && a < n / 2.0) {
        return Err(HalfspaceError::Invalid(format!(
            "no admissible exponent found for {p:?}: {sel:?}"
        )));
    }
    Ok(sel)
}

/// `w(x) = x₁|x|^(a-N/2)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComparisonFunction {
    pub a: f64,
    #[serde(rename = "N")]
    pub n: u32,
}

fn norm2(x: &[f64]) -> f64 {
    x.iter().map(|c| c * c).sum()
}

impl ComparisonFunction {
    pub fn new(a: f64, n: u32) -> Result<Self, HalfspaceError> {
        if n < 2 {
            return Err(HalfspaceError::Invalid(format!("dimension must be at least 2 (got {n})")));
        }
        let half = n as f64 / 2.0;
        if !(0.0..=half).contains(&a) {
            return Err(HalfspaceError::Invalid(format!("a must lie in [0, {half}] (got {a})")));
        }
        Ok(Self { a, n })
    }

    fn beta(&self) -> f64 {
        self.a - self.n as f64 / 2.0
    }

    pub fn coefficient(&self) -> f64 {
        let n = self.n as f64;
        n * n / 4.0 - self.a * self.a
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        x[0] * norm2(x).powf(self.beta() / 2.0)
    }

    /// Δw summed from the closed-form diagonal second derivatives
    /// ∂ᵢ²w = 2δᵢ₁βr^(β-2)xᵢ + x₁β[(β-2)r^(β-4)xᵢ² + r^(β-2)].
    pub fn laplacian(&self, x: &[f64]) -> f64 {
        let b = self.beta();
        let r2 = norm2(x);
        let rb2 = r2.powf((b - 2.0) / 2.0);
        let rb4 = rb2 / r2;
        x.iter()
            .enumerate()
            .map(|(i, &xi)| {
                let first = if i == 0 { 2.0 * b * rb2 * xi } else { 0.0 };
                first + x[0] * b * ((b - 2.0) * rb4 * xi * xi + rb2)
            })
            .sum()
    }

    pub fn laplacian_fd(&self, x: &[f64]) -> f64 {
        let h = 1e-3 * norm2(x).sqrt();
        let w0 = self.value(x);
        let mut y = x.to_vec();
        let mut sum = 0.0;
        for i in 0..x.len() {
            let mut at = |d: f64| {
                y[i] = x[i] + d;
                let w = self.value(&y);
                y[i] = x[i];
                w
            };
            let (p1, m1, p2, m2) = (at(h), at(-h), at(2.0 * h), at(-2.0 * h));
            sum += (-p2 + 16.0 * p1 - 30.0 * w0 + 16.0 * m1 - m2) / (12.0 * h * h);
        }
        sum
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IdentityResiduals {
    /// max |x|²|Δw + c w/|x|²| / w with Δw in closed form.
    pub analytic: f64,
    /// The same with Δw by fourth-order finite differences.
    pub finite_difference: f64,
}

/// Checks -Δw = (N²/4 - a²) w/|x|² at the sample points, relative to w/|x|².
pub fn comparison_identity_check(
    a: f64,
    n: u32,
    points: &[Vec<f64>],
) -> Result<IdentityResiduals, HalfspaceError> {
    let w = ComparisonFunction::new(a, n)?;
    let c = w.coefficient();
    let mut out = IdentityResiduals {
        analytic: 0.0,
        finite_difference: 0.0,
    };
    for x in points {
        if x.len() != n as usize {
            return Err(HalfspaceError::Invalid(format!(
                "sample point has {} coordinates, expected {n}",
                x.len()
            )));
        }
        if !(x[0] > 0.0) {
            return Err(HalfspaceError::Invalid(format!(
                "sample point {x:?} is not in the open half-space"
            )));
        }
        let r2 = norm2(x);
        let scale = w.value(x) / r2;
        out.analytic = out.analytic.max((w.laplacian(x) + c * scale).abs() / scale);
        out.finite_difference = out
            .finite_difference
            .max((w.laplacian_fd(x) + c * scale).abs() / scale);
    }
    Ok(out)
}
