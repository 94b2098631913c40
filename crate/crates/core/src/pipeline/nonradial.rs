//! classify → sphere branch → non-radial assembly → reflection scan.

use serde::{Deserialize, Serialize};
use serde_json::json;

use super::PipelineError;
use crate::config::Tolerances;
use crate::halfspace::{reflection_scan, SamplingSpec};
use crate::regimes::{classify, lane_emden_window, nonradial_windows, NonradialWindow, ProblemParams, RegimeTag};
use crate::roots::linspace;
use crate::sphere::assemble::ResidualSample;
use crate::sphere::{assemble_nonradial, find_roots, trace_branch, SphereProfile};

/// The branch is traced over [LO, HI]·a*.
const TRACE_LO: f64 = 0.8;
const TRACE_HI: f64 = 1.03;
const TRACE_STEPS: usize = 13;
pub const RESIDUAL_TOL: f64 = 1e-5;
pub const DEFECT_MIN: f64 = 1e-3;
const SAMPLES_PER_RADIUS: usize = 5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileSummary {
    pub pole_value: f64,
    pub south_pole_value: f64,
    pub max_v: f64,
    pub min_v: f64,
    pub mean_v: f64,
    pub relative_amplitude: f64,
    pub mismatch: f64,
    pub residual: f64,
}

impl ProfileSummary {
    pub fn of(p: &SphereProfile) -> Self {
        Self {
            pole_value: p.pole_value,
            south_pole_value: p.south_pole_value,
            max_v: p.max_v(),
            min_v: p.min_v(),
            mean_v: p.mean_v(),
            relative_amplitude: p.relative_amplitude(),
            mismatch: p.mismatch,
            residual: p.residual,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReflectionSummary {
    /// 1-based coordinate index.
    pub axis: usize,
    pub lambda_plus: Option<f64>,
    pub resolution: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NonradialReport {
    pub params: ProblemParams,
    pub tag: RegimeTag,
    pub gamma: f64,
    /// Sphere coefficient γ(N-2-γ) of the assembled solution.
    pub a: f64,
    pub a_star: f64,
    pub onset: Option<f64>,
    pub linear_onset: Option<f64>,
    /// a* minus the smallest traced a with a branch root.
    pub epsilon0_empirical: f64,
    /// True when the branch was still present at the end of the traced range,
    /// so the empirical ε₀ is only a lower bound.
    pub epsilon0_truncated: bool,
    pub window: NonradialWindow,
    pub q_in_lane_emden_window: bool,
    pub profile: SphereProfile,
    pub samples: Vec<ResidualSample>,
    pub pde_residual_max: f64,
    pub pde_residual_tolerance: f64,
    /// (max - min)/max of u on the unit sphere.
    pub symmetry_defect: f64,
    pub symmetry_defect_threshold: f64,
    /// Across the zonal axis (x₁): u is even there, so λ₊ should be 0.
    pub reflection_transverse: ReflectionSummary,
    /// Along the zonal axis (x_N), where u has no mirror symmetry.
    pub reflection_zonal: ReflectionSummary,
    pub sphere_residual_tolerance: f64,
}

impl NonradialReport {
    /// Report without the full profile (which goes to the CSV table).
    pub fn summary(&self) -> serde_json::Value {
        let mut v = serde_json::to_value(self).expect("report serialises");
        v["profile"] = json!(ProfileSummary::of(&self.profile));
        v
    }

    pub fn passed(&self) -> bool {
        self.pde_residual_max <= self.pde_residual_tolerance && self.symmetry_defect >= self.symmetry_defect_threshold
    }
}

/// Traces the zonal branch for (N, q), picks ℓ inside the empirical window
/// (or checks the given one), assembles `u = |x|^(-γ)V` and measures its
/// PDE residual, symmetry defect and reflection behaviour.
pub fn nonradial_pipeline(
    n: u32,
    q: f64,
    ell: Option<f64>,
    seed: u64,
    tol: &Tolerances,
) -> Result<NonradialReport, PipelineError> {
    let lane = lane_emden_window(n)?;
    if !(q > 1.0) {
        return Err(PipelineError::Usage(format!("q must exceed 1 (got {q})")));
    }
    let a_star = (n as f64 - 1.0) / (q - 1.0);
    let bw = trace_branch(n, q, TRACE_LO * a_star, TRACE_HI * a_star, TRACE_STEPS, tol)?;
    if bw.branch.is_empty() {
        return Err(PipelineError::domain(
            "sphere",
            "no non-constant zonal branch found below a*",
            Some(json!({ "scanned": bw.scanned })),
        ));
    }
    let eps = bw.epsilon0_empirical;
    let window = nonradial_windows(&ProblemParams::new(n, 0.0, q)?, eps)?;
    let range = window.henon_ell_range.ok_or_else(|| {
        PipelineError::domain("regimes", "no ell realises the branch coefficients", Some(json!({ "epsilon0": eps })))
    })?;
    let ell = match ell {
        Some(l) => {
            // the window is closed at the traced end, where the branch was still found
            let inside = l > range.lo && l <= range.hi.value() * (1.0 + 1e-12);
            if !inside {
                return Err(PipelineError::domain(
                    "sphere",
                    format!("ell = {l} lies outside the empirical window"),
                    Some(json!({ "ell": l, "window": range })),
                ));
            }
            l
        }
        None => {
            let a = a_star - (0.25 * eps).min(0.002);
            crate::regimes::ell_for_sphere_coefficient(n, q, a).expect("a lies below ((N-2)/2)^2")
        }
    };
    let p = ProblemParams::new(n, ell, q)?;
    let a = p.a_sphere()?;

    // the traced branch predicts the pole value at a
    let pred = predict_pole(&bw.branch, a);
    let scan = find_roots(n, a, q, None, tol)?;
    let profile = scan
        .branch
        .iter()
        .filter(|b| b.pole_value > scan.constant_value)
        .min_by(|x, y| {
            let dx = pred.map_or(x.pole_value, |s| (x.pole_value - s).abs());
            let dy = pred.map_or(y.pole_value, |s| (y.pole_value - s).abs());
            dx.total_cmp(&dy)
        })
        .cloned()
        .ok_or_else(|| {
            PipelineError::domain(
                "sphere",
                format!("no non-constant root found at a = {a}"),
                Some(json!({ "a": a, "rejected": scan.rejected })),
            )
        })?;
    let sol = assemble_nonradial(&profile, &p)?;
    let samples = sol.residual_samples(SAMPLES_PER_RADIUS, seed);
    let pde_residual_max = samples.iter().map(|s| s.relative_residual).fold(0.0, f64::max);

    let lambdas = linspace(-1.0, 1.0, 21);
    let spec = SamplingSpec {
        seed,
        radius: 2.0,
        ..SamplingSpec::default()
    };
    let reflect = |axis: usize| -> Result<ReflectionSummary, PipelineError> {
        let s = reflection_scan(&sol, axis, &lambdas, &spec)?;
        Ok(ReflectionSummary {
            axis: axis + 1,
            lambda_plus: s.lambda_plus,
            resolution: s.resolution,
        })
    };
    let reflection_transverse = reflect(0)?;
    let reflection_zonal = reflect(n as usize - 1)?;

    Ok(NonradialReport {
        params: p,
        tag: classify(&p).tag,
        gamma: sol.gamma,
        a,
        a_star,
        onset: bw.onset,
        linear_onset: bw.linear_onset,
        epsilon0_empirical: eps,
        epsilon0_truncated: bw.branch_loss.is_none(),
        window,
        q_in_lane_emden_window: lane.contains(q),
        symmetry_defect: sol.symmetry_defect(),
        symmetry_defect_threshold: DEFECT_MIN,
        profile,
        samples,
        pde_residual_max,
        pde_residual_tolerance: RESIDUAL_TOL,
        reflection_transverse,
        reflection_zonal,
        sphere_residual_tolerance: tol.sphere_residual,
    })
}

/// Linear interpolation of the traced pole values in a.
fn predict_pole(branch: &[crate::sphere::BranchPoint], a: f64) -> Option<f64> {
    let mut pts: Vec<(f64, f64)> = branch.iter().map(|b| (b.a, b.pole_value)).collect();
    pts.sort_by(|x, y| x.0.total_cmp(&y.0));
    pts.windows(2)
        .find(|w| w[0].0 <= a && a <= w[1].0)
        .map(|w| w[0].1 + (w[1].1 - w[0].1) * (a - w[0].0) / (w[1].0 - w[0].0))
        .or_else(|| pts.last().map(|p| p.1))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_pipeline_n4_q6() {
        let rep = nonradial_pipeline(4, 6.0, None, 3, &Tolerances::default()).unwrap();
        assert!(rep.passed(), "{} {}", rep.pde_residual_max, rep.symmetry_defect);
        assert_eq!(rep.samples.len(), 20);
        assert!(rep.a < rep.a_star);
        let t = &rep.reflection_transverse;
        assert!(t.lambda_plus.unwrap().abs() <= t.resolution);
    }

    #[test]
    fn ell_outside_the_window_is_rejected() {
        // ell = 1 gives a = γ(2-γ) with γ = 0.2, far below the traced range
        let e = nonradial_pipeline(4, 6.0, Some(1.0), 0, &Tolerances::default()).unwrap_err();
        assert!(matches!(e, PipelineError::Domain { .. }), "{e}");
    }
}
