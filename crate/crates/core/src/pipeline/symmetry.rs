//! Regime report → radial solve → decay report → reflection scan, per α.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::PipelineError;
use crate::config::Tolerances;
use crate::halfspace::{reflection_scan, Core, RadialField, SamplingSpec};
use crate::nonlinearity::Nonlinearity;
use crate::radial::psi::PsiConstants;
use crate::radial::{
    self, classify_decay, exact_residual_analytic, exact_residual_fd, exact_solution, DecayKind, ExactKind,
    ShootOutcome,
};
use crate::regimes::{classify, ProblemParams, RegimeTag, SymmetryCenter};
use crate::roots::{linspace, logspace};

pub const DEFAULT_RMAX: f64 = 1e20;
/// Relative tolerance on the tail limit of slowly decaying solutions.
pub const TAIL_LIMIT_REL: f64 = 0.01;
const ANALYTIC_TOL: f64 = 1e-10;
const FD_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunMode {
    Symmetry,
    /// Only the closed-form radial families are checked.
    Validation,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlphaRecord {
    pub alpha: f64,
    pub outcome: Option<String>,
    /// Radius where u reached zero, for solutions that are not positive.
    pub crossing_r: Option<f64>,
    pub positive: bool,
    pub residual: Option<f64>,
    pub residual_tolerance: f64,
    pub decay_kind: Option<DecayKind>,
    pub fitted_exponent: Option<f64>,
    pub fit_rms: Option<f64>,
    pub tail_limit: Option<f64>,
    pub expected_tail_limit: Option<f64>,
    pub tail_limit_rel_error: Option<f64>,
    pub tail_limit_tolerance: f64,
    pub lambda_plus: Option<f64>,
    pub lambda_resolution: Option<f64>,
    pub discrepancies: Vec<String>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FamilyCheck {
    pub family: String,
    pub analytic_residual_max: Option<f64>,
    pub fd_residual_max: Option<f64>,
    /// Residual of the sampled profile (families without a closed form).
    pub sampled_residual_max: Option<f64>,
    pub analytic_tolerance: f64,
    pub fd_tolerance: f64,
    pub passed: bool,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SymmetryReport {
    pub params: ProblemParams,
    pub tag: RegimeTag,
    pub symmetry_center: SymmetryCenter,
    pub mode: RunMode,
    pub prediction: String,
    pub rmax: f64,
    pub lambda_grid: Vec<f64>,
    pub alphas: Vec<AlphaRecord>,
    pub families: Vec<FamilyCheck>,
    pub discrepancies: usize,
    pub failures: usize,
}

pub fn pipeline_symmetry_report(
    p: &ProblemParams,
    alphas: &[f64],
    r_max: f64,
    tol: &Tolerances,
) -> Result<SymmetryReport, PipelineError> {
    let label = classify(p);
    if label.tag.is_nonexistence() {
        return Err(PipelineError::Refused {
            tag: label.tag,
            message: "no positive solution exists in this parameter region, so there is nothing to solve".into(),
        });
    }
    let lambdas = linspace(-1.0, 1.0, 21);
    let mut rep = SymmetryReport {
        params: *p,
        tag: label.tag,
        symmetry_center: label.symmetry_center,
        mode: RunMode::Symmetry,
        prediction: String::new(),
        rmax: r_max,
        lambda_grid: lambdas.clone(),
        alphas: vec![],
        families: vec![],
        discrepancies: 0,
        failures: 0,
    };
    if label.tag == RegimeTag::BorderlineQ2 {
        rep.mode = RunMode::Validation;
        rep.prediction = "closed-form radial families only".into();
        rep.families = validate_families(p, tol);
        rep.failures = rep.families.iter().filter(|f| !f.passed).count();
        return Ok(rep);
    }
    rep.prediction = if label.tag.is_symmetric() {
        match label.symmetry_center {
            SymmetryCenter::Origin => "radial about the origin".into(),
            SymmetryCenter::SomePoint => "radial about some point".into(),
        }
    } else {
        "no symmetry statement for this regime".into()
    };
    let nl = Nonlinearity::henon(p.ell, p.q);
    rep.alphas = alphas
        .par_iter()
        .map(|&a| alpha_record(&nl, p, a, r_max, &lambdas, tol))
        .collect();
    rep.discrepancies = rep.alphas.iter().filter(|r| !r.discrepancies.is_empty()).count();
    rep.failures = rep.alphas.iter().filter(|r| r.error.is_some()).count();
    Ok(rep)
}

fn alpha_record(
    nl: &Nonlinearity,
    p: &ProblemParams,
    alpha: f64,
    r_max: f64,
    lambdas: &[f64],
    tol: &Tolerances,
) -> AlphaRecord {
    let mut rec = AlphaRecord {
        alpha,
        outcome: None,
        crossing_r: None,
        positive: false,
        residual: None,
        residual_tolerance: tol.radial_residual,
        decay_kind: None,
        fitted_exponent: None,
        fit_rms: None,
        tail_limit: None,
        expected_tail_limit: p.a_sphere().ok().filter(|a| *a > 0.0),
        tail_limit_rel_error: None,
        tail_limit_tolerance: TAIL_LIMIT_REL,
        lambda_plus: None,
        lambda_resolution: None,
        discrepancies: vec![],
        error: None,
    };
    let shot = match radial::shoot_regular(nl, p.n, alpha, r_max, tol) {
        Ok(s) => s,
        Err(e) => {
            rec.error = Some(e.to_string());
            return rec;
        }
    };
    rec.outcome = Some(
        match shot.outcome {
            ShootOutcome::Reached => "reached",
            ShootOutcome::Crossing { .. } => "crossing",
            ShootOutcome::Growth { .. } => "growth",
        }
        .into(),
    );
    if let ShootOutcome::Crossing { r } = shot.outcome {
        rec.crossing_r = Some(r);
    }
    rec.positive = shot.outcome == ShootOutcome::Reached;
    let sol = shot.solution;
    rec.residual = sol.residual().ok();
    if let Some(res) = rec.residual.filter(|r| *r > tol.radial_residual) {
        rec.discrepancies.push(format!("radial residual {res:e} above tolerance"));
    }
    if !rec.positive {
        return rec;
    }
    match classify_decay(&sol, radial::decay::DEFAULT_WINDOW) {
        Ok(d) => {
            rec.decay_kind = Some(d.kind);
            rec.fitted_exponent = Some(d.fitted_exponent);
            rec.fit_rms = Some(d.fit_rms);
            rec.tail_limit = Some(d.tail_limit);
            if d.kind == DecayKind::Slow {
                if let Some(e) = rec.expected_tail_limit {
                    let err = (d.tail_limit - e).abs() / e;
                    rec.tail_limit_rel_error = Some(err);
                    if err > TAIL_LIMIT_REL {
                        rec.discrepancies.push(format!("tail limit {} differs from {e} by {err:.3e}", d.tail_limit));
                    }
                }
            }
        }
        Err(e) => rec.error = Some(format!("decay: {e}")),
    }
    let field = match RadialField::from_solution(&sol, Core::Clamp) {
        Ok(f) => f,
        Err(e) => {
            rec.error = Some(format!("reflection: {e}"));
            return rec;
        }
    };
    match reflection_scan(&field, 0, lambdas, &SamplingSpec::default()) {
        Ok(scan) => {
            rec.lambda_resolution = Some(scan.resolution);
            rec.lambda_plus = scan.lambda_plus;
            // the solution is centred at the origin
            match scan.lambda_plus {
                Some(l) if l.abs() <= scan.resolution * (1.0 + 1e-9) => {}
                other => rec
                    .discrepancies
                    .push(format!("lambda_plus = {other:?}, expected 0 within {}", scan.resolution)),
            }
        }
        Err(e) => rec.error = Some(format!("reflection: {e}")),
    }
    rec
}

fn validate_families(p: &ProblemParams, tol: &Tolerances) -> Vec<FamilyCheck> {
    let radii = logspace(1e-2, 1e2, 100);
    let closed = |name: &str, kind: ExactKind| -> FamilyCheck {
        let mut c = FamilyCheck {
            family: name.into(),
            analytic_residual_max: None,
            fd_residual_max: None,
            sampled_residual_max: None,
            analytic_tolerance: ANALYTIC_TOL,
            fd_tolerance: FD_TOL,
            passed: false,
            error: None,
        };
        // exact_solution validates the parameters for the family
        if let Err(e) = exact_solution(&kind, p, 1e-2, 1e2, 2) {
            c.error = Some(e.to_string());
            return c;
        }
        let an = radii.iter().map(|&r| exact_residual_analytic(&kind, p, r)).fold(0.0, f64::max);
        let fd = radii.iter().map(|&r| exact_residual_fd(&kind, p, r)).fold(0.0, f64::max);
        c.analytic_residual_max = Some(an);
        c.fd_residual_max = Some(fd);
        c.passed = an <= ANALYTIC_TOL && fd <= FD_TOL;
        c
    };
    let mut out = vec![closed("critical_fast", ExactKind::CriticalFast { mu: 1.0 })];
    if p.a_sphere().is_ok_and(|a| a > 0.0) {
        out.push(closed("basic", ExactKind::Basic));
    }

    let mut slow = FamilyCheck {
        family: "critical_slow".into(),
        analytic_residual_max: None,
        fd_residual_max: None,
        sampled_residual_max: None,
        analytic_tolerance: ANALYTIC_TOL,
        fd_tolerance: tol.radial_residual,
        passed: false,
        error: None,
    };
    let sampled = PsiConstants::new(p).and_then(|c| {
        let orbit = radial::integrate_psi(p, 0.9 * c.psi0, 4, tol)?;
        let t_end = *orbit.t.last().unwrap();
        let sol = exact_solution(&ExactKind::CriticalSlow { orbit }, p, 1.0, t_end.exp(), 0)?;
        sol.residual()
    });
    match sampled {
        Ok(r) => {
            slow.sampled_residual_max = Some(r);
            slow.passed = r <= tol.radial_residual;
        }
        Err(e) => slow.error = Some(e.to_string()),
    }
    out.push(slow);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lane_emden_supercritical_pipeline() {
        let p = ProblemParams::new(3, 0.0, 7.0).unwrap();
        let alphas = logspace(0.1, 10.0, 8);
        let rep = pipeline_symmetry_report(&p, &alphas, DEFAULT_RMAX, &Tolerances::default()).unwrap();
        assert_eq!(rep.mode, RunMode::Symmetry);
        assert_eq!(rep.discrepancies, 0);
        assert_eq!(rep.failures, 0);
        for r in &rep.alphas {
            assert_eq!(r.decay_kind, Some(DecayKind::Slow), "{r:?}");
            assert!(r.tail_limit_rel_error.unwrap() <= 0.01);
            assert!(r.lambda_plus.unwrap().abs() <= r.lambda_resolution.unwrap());
        }
    }

    #[test]
    fn nonexistence_is_refused() {
        // N = 3, ell = 0, q = 3 lies below the Sobolev exponent
        let p = ProblemParams::new(3, 0.0, 3.0).unwrap();
        let tag = classify(&p).tag;
        assert!(tag.is_nonexistence(), "{tag}");
        let e = pipeline_symmetry_report(&p, &[1.0], 1e4, &Tolerances::default()).unwrap_err();
        assert!(matches!(e, PipelineError::Refused { .. }));
    }

    #[test]
    fn borderline_runs_in_validation_mode() {
        let p = ProblemParams::new(3, 0.0, 5.0).unwrap();
        assert_eq!(classify(&p).tag, RegimeTag::BorderlineQ2);
        let rep = pipeline_symmetry_report(&p, &[1.0], 1e4, &Tolerances::default()).unwrap();
        assert_eq!(rep.mode, RunMode::Validation);
        assert!(rep.alphas.is_empty());
        assert_eq!(rep.failures, 0, "{:?}", rep.families);
        assert_eq!(rep.families.len(), 3);
    }
}
