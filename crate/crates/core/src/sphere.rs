//! The sphere problem `-Δ_θ V + aV = V^q` on S^(N-1), restricted to zonal
//! profiles `V(θ)` of the colatitude:
//!
//! ```text
//! V'' + (N-2) cot θ V' - aV + V^q = 0,   V'(0) = V'(π) = 0.
//! ```
//!
//! Shooting runs from both poles and meets at θ_m = 3π/4: the north leg starts
//! from the pole value `s`, the south leg from a pole value σ chosen by Newton
//! iteration so that the values agree at θ_m. The mismatch of the slopes there
//! is a smooth function of `s` whose zeros are exactly the zonal solutions.
//! Shooting straight into the opposite pole would not do: the singular mode
//! `φ^(3-N)` there amplifies rounding in the constant solution far beyond
//! any useful tolerance.

pub mod assemble;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::{ties, Tolerances};
use crate::ode::{Control, Dopri5, OdeError};
use crate::regimes::{q_sobolev, ParamError, ProblemParams, RegimeTag};
use crate::roots::{bisect, logspace, sign_changes};

pub use assemble::{assemble_nonradial, NonradialSolution};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SphereError {
    #[error("{0}")]
    Invalid(String),
    #[error(transparent)]
    Params(#[from] ParamError),
    #[error("profile blew up at theta = {0}")]
    Blowup(f64),
    #[error("profile reached zero at theta = {0}")]
    NonPositive(f64),
    #[error("integrator failed: {0}")]
    Step(#[from] OdeError),
    #[error("south-pole value did not converge (s = {s})")]
    NoMatch { s: f64 },
}

/// Number of uniform intervals on [0, π] used for stored profiles.
pub const GRID: usize = 2048;
const MATCH_NODE: usize = 3 * GRID / 4;
const BLOWUP_FACTOR: f64 = 1e6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SphereProfile {
    #[serde(rename = "N")]
    pub n: u32,
    pub a: f64,
    pub q: f64,
    /// Uniform grid on [0, π]; pole values come from the regular series.
    pub theta: Vec<f64>,
    #[serde(rename = "V")]
    pub v: Vec<f64>,
    #[serde(rename = "dV")]
    pub dv: Vec<f64>,
    pub pole_value: f64,
    pub south_pole_value: f64,
    pub is_constant: bool,
    /// Slope jump at the matching colatitude.
    pub mismatch: f64,
    /// Max of |V'' + (N-2)cot θ V' - aV + V^q| over interior nodes, with V''
    /// taken by finite differences of the stored V'.
    pub residual: f64,
}

impl SphereProfile {
    fn h(&self) -> f64 {
        std::f64::consts::PI / (self.theta.len() - 1) as f64
    }

    pub fn max_v(&self) -> f64 {
        self.v.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min_v(&self) -> f64 {
        self.v.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    pub fn mean_v(&self) -> f64 {
        self.v.iter().sum::<f64>() / self.v.len() as f64
    }

    /// max V - min V relative to the mean.
    pub fn relative_amplitude(&self) -> f64 {
        (self.max_v() - self.min_v()) / self.mean_v()
    }

    /// Second derivative from the equation itself (regular limit at the poles).
    pub fn ddv(&self) -> Vec<f64> {
        let nf = self.n as f64;
        let last = self.theta.len() - 1;
        (0..=last)
            .map(|k| {
                let v = self.v[k];
                let src = self.a * v - v.powf(self.q);
                if k == 0 || k == last {
                    src / (nf - 1.0)
                } else {
                    src - (nf - 2.0) * self.dv[k] / self.theta[k].tan()
                }
            })
            .collect()
    }

    pub fn compute_residual(&self) -> f64 {
        let h = self.h();
        let nf = self.n as f64;
        let m = self.theta.len() - 1;
        (2..m - 1)
            .map(|k| {
                let dd = (-self.dv[k + 2] + 8.0 * self.dv[k + 1] - 8.0 * self.dv[k - 1]
                    + self.dv[k - 2])
                    / (12.0 * h);
                let v = self.v[k];
                (dd + (nf - 2.0) * self.dv[k] / self.theta[k].tan() - self.a * v + v.powf(self.q))
                    .abs()
            })
            .fold(0.0, f64::max)
    }

    /// Largest |V'|/dist(θ, pole) over the nodes within 0.1 of either pole.
    pub fn pole_slope_bound(&self) -> f64 {
        let pi = std::f64::consts::PI;
        self.theta
            .iter()
            .zip(&self.dv)
            .filter_map(|(&t, &d)| {
                let dist = t.min(pi - t);
                (dist > 0.0 && dist <= 0.1).then(|| d.abs() / dist)
            })
            .fold(0.0, f64::max)
    }

    /// The profile under θ ↦ π - θ.
    pub fn reflected(&self) -> Self {
        let mut out = self.clone();
        out.v.reverse();
        out.dv = self.dv.iter().rev().map(|d| -d).collect();
        out.pole_value = self.south_pole_value;
        out.south_pole_value = self.pole_value;
        out.mismatch = -self.mismatch;
        out.residual = out.compute_residual();
        out
    }
}

fn check_inputs(n: u32, a: f64, q: f64) -> Result<(), SphereError> {
    if n < 3 {
        return Err(ParamError::Dimension(n).into());
    }
    if !(a > 0.0 && a.is_finite()) {
        return Err(SphereError::Invalid(format!("a must be positive (got {a})")));
    }
    if !(q > 1.0 && q.is_finite()) {
        return Err(SphereError::Invalid(format!("q must exceed 1 (got {q})")));
    }
    Ok(())
}

pub fn constant_value(a: f64, q: f64) -> f64 {
    a.powf(1.0 / (q - 1.0))
}

pub fn uniform_theta() -> Vec<f64> {
    let h = std::f64::consts::PI / GRID as f64;
    (0..=GRID).map(|k| k as f64 * h).collect()
}

pub fn constant_solution(n: u32, a: f64, q: f64) -> Result<SphereProfile, SphereError> {
    if n < 3 {
        return Err(ParamError::Dimension(n).into());
    }
    if !(a > 0.0) {
        return Err(SphereError::Invalid(format!("a must be positive (got {a})")));
    }
    if q == 1.0 || !q.is_finite() {
        return Err(SphereError::Invalid("constant solution needs q != 1".into()));
    }
    let c = constant_value(a, q);
    let theta = uniform_theta();
    let len = theta.len();
    let mut p = SphereProfile {
        n,
        a,
        q,
        theta,
        v: vec![c; len],
        dv: vec![0.0; len],
        pole_value: c,
        south_pole_value: c,
        is_constant: true,
        mismatch: 0.0,
        residual: 0.0,
    };
    p.residual = p.compute_residual();
    Ok(p)
}

// ---------------------------------------------------------------- uniqueness

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Strictness {
    Aq1,
    Aq2,
    Both,
    Neither,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum UniquenessConclusion {
    OnlyConstant,
    NotCovered,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UniquenessVerdict {
    /// a ≤ (N-1)/(q-1).
    pub condition_aq1: bool,
    /// q ≤ qS; vacuous (true) for N = 3.
    pub condition_aq2: bool,
    pub strictness: Strictness,
    pub conclusion: UniquenessConclusion,
    /// N-1 - a(q-1).
    pub aq1_margin: f64,
}

/// φ(z) = (N-3)z²/4 - (N-2)z + N-1.
pub fn phi(n: u32, z: f64) -> f64 {
    let nf = n as f64;
    (nf - 3.0) * z * z / 4.0 - (nf - 2.0) * z + nf - 1.0
}

pub fn uniqueness_verdict(n: u32, a: f64, q: f64) -> UniquenessVerdict {
    let nf = n as f64;
    let rel = crate::regimes::TIE_REL;
    let bound = (nf - 1.0) / (q - 1.0);
    let aq1 = a <= bound || ties(a, bound, rel);
    let aq1_strict = a < bound && !ties(a, bound, rel);
    let qs = q_sobolev(n).value();
    let (aq2, aq2_strict) = if n == 3 {
        (true, true)
    } else {
        (q <= qs || ties(q, qs, rel), q < qs && !ties(q, qs, rel))
    };
    let strictness = match (aq1 && aq1_strict, aq2 && aq2_strict) {
        (true, true) => Strictness::Both,
        (true, false) => Strictness::Aq1,
        (false, true) => Strictness::Aq2,
        (false, false) => Strictness::Neither,
    };
    let covered = aq1 && aq2 && (n == 3 || strictness != Strictness::Neither);
    UniquenessVerdict {
        condition_aq1: aq1,
        condition_aq2: aq2,
        strictness,
        conclusion: if covered {
            UniquenessConclusion::OnlyConstant
        } else {
            UniquenessConclusion::NotCovered
        },
        aq1_margin: nf - 1.0 - a * (q - 1.0),
    }
}

/// For Case_i parameters: `(N-1 - a(q-1), φ(2-ℓ))` with a = γ(N-2-γ); the
/// first dominates the second, which is non-negative.
pub fn case_i_chain(p: &ProblemParams) -> Result<(f64, f64), SphereError> {
    if crate::regimes::classify(p).tag != RegimeTag::CaseI {
        return Err(SphereError::Invalid("chain applies to Case_i parameters".into()));
    }
    let a = p.a_sphere()?;
    Ok((p.nf() - 1.0 - a * (p.q - 1.0), phi(p.n, 2.0 - p.ell)))
}

// ------------------------------------------------------------------ shooting

struct Leg {
    /// [V, V', Z, Z'] at the end of the leg.
    end: [f64; 4],
    /// (V, V') at the requested nodes.
    samples: Vec<(f64, f64)>,
}

/// Integrates from the pole (offset `eps`) with pole value `s` to `t_end`,
/// optionally with the variation Z = ∂V/∂s.
fn leg(
    n: u32,
    a: f64,
    q: f64,
    s: f64,
    t_end: f64,
    with_var: bool,
    nodes: &[f64],
    tol: &Tolerances,
) -> Result<Leg, SphereError> {
    let nf = n as f64;
    let eps = tol.theta_eps;
    let c = (a * s - s.powf(q)) / (2.0 * (nf - 1.0));
    let cz = (a - q * s.powf(q - 1.0)) / (2.0 * (nf - 1.0));
    let dim = if with_var { 4 } else { 2 };
    let y0 = [
        s + c * eps * eps,
        2.0 * c * eps,
        1.0 + cz * eps * eps,
        2.0 * cz * eps,
    ];
    let k = nf - 2.0;
    let rhs = move |t: f64, y: &[f64], dy: &mut [f64]| {
        let cot = 1.0 / t.tan();
        let v = y[0].max(0.0);
        dy[0] = y[1];
        dy[1] = -k * cot * y[1] + a * y[0] - v.powf(q);
        if dy.len() == 4 {
            dy[2] = y[3];
            dy[3] = -k * cot * y[3] + (a - q * v.powf(q - 1.0)) * y[2];
        }
    };
    let solver = Dopri5::new(tol.fine_rtol, tol.fine_atol)
        .with_h_max(if nodes.is_empty() { 0.05 } else { 0.01 })
        .with_max_steps(200_000);
    let cap = BLOWUP_FACTOR * s.max(constant_value(a, q));
    let mut fail: Option<SphereError> = None;
    let mut end = [0.0; 4];
    let mut samples = Vec::with_capacity(nodes.len());
    let mut next = 0;
    solver.integrate(rhs, eps, &y0[..dim], t_end, |st| {
        if let Some(tz) = st.locate(|_, y| y[0]) {
            fail = Some(SphereError::NonPositive(tz));
            return Control::Stop;
        }
        if st.y1[0] > cap {
            fail = Some(SphereError::Blowup(st.t1));
            return Control::Stop;
        }
        while next < nodes.len() && st.contains(nodes[next]) {
            let y = st.eval(nodes[next]);
            samples.push((y[0], y[1]));
            next += 1;
        }
        end[..dim].copy_from_slice(&st.y1);
        Control::Continue
    })?;
    if let Some(e) = fail {
        return Err(e);
    }
    Ok(Leg { end, samples })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Shot {
    pub s: f64,
    /// South pole value matched at θ_m.
    pub sigma: f64,
    pub mismatch: f64,
}

fn theta_match() -> f64 {
    MATCH_NODE as f64 * std::f64::consts::PI / GRID as f64
}

/// Newton iteration for σ with V_south(π - θ_m; σ) = target.
fn match_south(n: u32, a: f64, q: f64, s: f64, target: f64, tol: &Tolerances) -> Result<(f64, f64), SphereError> {
    let phi_m = std::f64::consts::PI - theta_match();
    let mut sigma = target;
    for _ in 0..60 {
        let lg = match leg(n, a, q, sigma, phi_m, true, &[], tol) {
            Ok(l) => l,
            Err(SphereError::Step(e)) => return Err(e.into()),
            Err(_) => {
                // overshoot: pull back towards the target value
                sigma = 0.5 * (sigma + target);
                continue;
            }
        };
        let f = lg.end[0] - target;
        if f.abs() <= 1e-13 * target.abs().max(1e-300) {
            return Ok((sigma, -lg.end[1]));
        }
        let z = lg.end[2];
        if !(z.abs() > 1e-300) {
            break;
        }
        let mut step = f / z;
        // damping keeps σ positive and the step moderate
        let cap = 0.5 * sigma;
        if step.abs() > cap {
            step = cap * step.signum();
        }
        sigma -= step;
    }
    Err(SphereError::NoMatch { s })
}

/// Slope mismatch at θ_m for pole value `s`.
pub fn mismatch(n: u32, a: f64, q: f64, s: f64, tol: &Tolerances) -> Result<Shot, SphereError> {
    check_inputs(n, a, q)?;
    if !(s > 0.0) {
        return Err(SphereError::Invalid(format!("pole value must be positive (got {s})")));
    }
    let north = leg(n, a, q, s, theta_match(), false, &[], tol)?;
    let (sigma, dv_south) = match_south(n, a, q, s, north.end[0], tol)?;
    Ok(Shot {
        s,
        sigma,
        mismatch: north.end[1] - dv_south,
    })
}

/// Shoots from pole value `s` and returns the stitched profile together with
/// its slope mismatch at θ_m.
pub fn shoot_axisymmetric(
    n: u32,
    a: f64,
    q: f64,
    s: f64,
    tol: &Tolerances,
) -> Result<(SphereProfile, f64), SphereError> {
    let shot = mismatch(n, a, q, s, tol)?;
    let theta = uniform_theta();
    let pi = std::f64::consts::PI;
    let north_nodes: Vec<f64> = theta[1..=MATCH_NODE].to_vec();
    let south_nodes: Vec<f64> = (1..=GRID - MATCH_NODE).map(|j| theta[j]).collect();
    let north = leg(n, a, q, s, theta_match(), false, &north_nodes, tol)?;
    let south = leg(n, a, q, shot.sigma, pi - theta_match(), false, &south_nodes, tol)?;
    if north.samples.len() != north_nodes.len() || south.samples.len() != south_nodes.len() {
        return Err(SphereError::Invalid("profile sampling incomplete".into()));
    }
    let mut v = vec![0.0; GRID + 1];
    let mut dv = vec![0.0; GRID + 1];
    v[0] = s;
    for (k, &(x, d)) in north.samples.iter().enumerate() {
        v[k + 1] = x;
        dv[k + 1] = d;
    }
    // south samples fill θ = π - φ_j, skipping the shared matching node
    for (j, &(x, d)) in south.samples.iter().enumerate() {
        let k = GRID - 1 - j;
        if k > MATCH_NODE {
            v[k] = x;
            dv[k] = -d;
        }
    }
    v[GRID] = shot.sigma;
    let vc = constant_value(a, q);
    let mut p = SphereProfile {
        n,
        a,
        q,
        theta,
        v,
        dv,
        pole_value: s,
        south_pole_value: shot.sigma,
        is_constant: false,
        mismatch: shot.mismatch,
        residual: 0.0,
    };
    p.is_constant = (p.max_v() - p.min_v()) <= 1e-9 * vc;
    p.residual = p.compute_residual();
    Ok((p, shot.mismatch))
}

// ---------------------------------------------------------------- root scans

/// Pole values for a full scan: 200 log-spaced points in [0.1, 10]·V_c plus a
/// cluster V_c(1 ± η) resolving small-amplitude branches near the constant.
pub fn default_s_grid(vc: f64) -> Vec<f64> {
    let mut s = logspace(0.1 * vc, 10.0 * vc, 200);
    s.extend(cluster_grid(vc, 0.5));
    s.sort_by(|a, b| a.partial_cmp(b).unwrap());
    s.dedup_by(|a, b| (*a - *b).abs() <= 1e-14 * b.abs());
    s
}

fn cluster_grid(vc: f64, eta_max: f64) -> Vec<f64> {
    let mut s: Vec<f64> = logspace(1e-6, eta_max, 60)
        .into_iter()
        .flat_map(|e| [vc * (1.0 - e), vc * (1.0 + e)])
        .collect();
    s.push(vc);
    s.sort_by(|a, b| a.partial_cmp(b).unwrap());
    s
}

pub fn scan_mismatch(n: u32, a: f64, q: f64, s: &[f64], tol: &Tolerances) -> Vec<Option<f64>> {
    s.par_iter()
        .map(|&x| mismatch(n, a, q, x, tol).ok().map(|r| r.mismatch))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RootScan {
    pub a: f64,
    pub constant_value: f64,
    /// Samples of the scan as (s, mismatch); failed shots are `None`.
    pub samples: Vec<(f64, Option<f64>)>,
    /// Root found at the constant, if any bracket converged there.
    pub constant_root: Option<f64>,
    /// Accepted non-constant profiles, sorted by pole value.
    pub branch: Vec<SphereProfile>,
    /// Roots rejected as spurious (nearly constant or residual too large).
    pub rejected: Vec<f64>,
}

fn refine_roots(
    n: u32,
    a: f64,
    q: f64,
    s: &[f64],
    m: &[Option<f64>],
    tol: &Tolerances,
) -> (Option<f64>, Vec<SphereProfile>, Vec<f64>) {
    let vc = constant_value(a, q);
    let roots: Vec<f64> = sign_changes(s, m)
        .into_par_iter()
        .map(|(lo, hi, flo)| {
            if lo == hi {
                lo
            } else {
                bisect(
                    |x| mismatch(n, a, q, x, tol).ok().map(|r| r.mismatch),
                    lo,
                    hi,
                    flo,
                    1e-15 * hi,
                    200,
                )
            }
        })
        .collect();
    let mut constant_root = None;
    let mut branch = Vec::new();
    let mut rejected = Vec::new();
    for r in roots {
        if (r - vc).abs() <= 1e-9 * vc {
            constant_root = Some(r);
            continue;
        }
        match shoot_axisymmetric(n, a, q, r, tol) {
            Ok((p, _))
                if p.residual <= tol.sphere_residual
                    && p.max_v() - p.min_v() > 1e-4 * p.mean_v() =>
            {
                branch.push(p)
            }
            _ => rejected.push(r),
        }
    }
    (constant_root, branch, rejected)
}

/// Scans the mismatch over `s_grid` (or the default grid), brackets its sign
/// changes and refines them by bisection.
pub fn find_roots(
    n: u32,
    a: f64,
    q: f64,
    s_grid: Option<&[f64]>,
    tol: &Tolerances,
) -> Result<RootScan, SphereError> {
    check_inputs(n, a, q)?;
    let vc = constant_value(a, q);
    let s: Vec<f64> = match s_grid {
        Some(g) => g.to_vec(),
        None => default_s_grid(vc),
    };
    if s.windows(2).any(|w| !(w[1] > w[0])) || s.first().map_or(true, |x| !(*x > 0.0)) {
        return Err(SphereError::Invalid("s grid must be positive and increasing".into()));
    }
    let m = scan_mismatch(n, a, q, &s, tol);
    let (constant_root, branch, rejected) = refine_roots(n, a, q, &s, &m, tol);
    Ok(RootScan {
        a,
        constant_value: vc,
        samples: s.into_iter().zip(m).collect(),
        constant_root,
        branch,
        rejected,
    })
}

fn branch_near(n: u32, a: f64, q: f64, center: f64, halfwidth: f64, tol: &Tolerances) -> Vec<SphereProfile> {
    let lo = (center - halfwidth).max(1e-3 * center);
    let s = crate::roots::linspace(lo, center + halfwidth, 41);
    let m = scan_mismatch(n, a, q, &s, tol);
    refine_roots(n, a, q, &s, &m, tol).1
}

/// Non-constant roots within |s - V_c| ≤ 0.5 V_c.
fn small_branch(n: u32, a: f64, q: f64, tol: &Tolerances) -> Vec<SphereProfile> {
    let vc = constant_value(a, q);
    let s = cluster_grid(vc, 0.5);
    let m = scan_mismatch(n, a, q, &s, tol);
    refine_roots(n, a, q, &s, &m, tol).1
}

/// dM/ds at the constant, by central differences.
pub fn mismatch_slope_at_constant(n: u32, a: f64, q: f64, tol: &Tolerances) -> Result<f64, SphereError> {
    let vc = constant_value(a, q);
    let d = 1e-5 * vc;
    let hi = mismatch(n, a, q, vc + d, tol)?.mismatch;
    let lo = mismatch(n, a, q, vc - d, tol)?.mismatch;
    Ok((hi - lo) / (2.0 * d))
}

// ------------------------------------------------------------- continuation

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BranchPoint {
    pub a: f64,
    pub pole_value: f64,
    pub profile: SphereProfile,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BifurcationWindow {
    #[serde(rename = "N")]
    pub n: u32,
    pub q: f64,
    pub a_star: f64,
    /// a* minus the smallest a at which the branch was followed.
    pub epsilon0_empirical: f64,
    /// Largest a with a small-amplitude non-constant root, refined by bisection.
    pub onset: Option<f64>,
    /// Zero of dM/ds at the constant closest to the onset bracket.
    pub linear_onset: Option<f64>,
    /// Ordered from the onset towards smaller a.
    pub branch: Vec<BranchPoint>,
    /// Last a where the branch was still found, if it was lost before a_start.
    pub branch_loss: Option<f64>,
    /// Every scanned a together with whether a branch root was found.
    pub scanned: Vec<(f64, bool)>,
}

pub fn trace_branch(
    n: u32,
    q: f64,
    a_start: f64,
    a_end: f64,
    steps: usize,
    tol: &Tolerances,
) -> Result<BifurcationWindow, SphereError> {
    check_inputs(n, a_start.max(a_end), q)?;
    let nf = n as f64;
    let a_star = (nf - 1.0) / (q - 1.0);
    let (lo, hi) = (a_start.min(a_end), a_start.max(a_end));
    if !(lo > 0.0 && lo < a_star && hi > a_star) {
        return Err(SphereError::Invalid(format!(
            "a-range [{lo}, {hi}] must lie in (0, inf) and straddle a* = {a_star}"
        )));
    }
    let steps = steps.max(3);
    // descending: the branch leaves the constant at a* towards smaller a
    let grid: Vec<f64> = crate::roots::linspace(hi, lo, steps);

    let mut scanned = Vec::with_capacity(steps);
    let mut branch: Vec<BranchPoint> = Vec::new();
    let mut prev: Option<f64> = None;
    let mut branch_loss = None;
    let mut first_found: Option<usize> = None;
    for (i, &a) in grid.iter().enumerate() {
        if branch_loss.is_some() {
            scanned.push((a, false));
            continue;
        }
        let vc = constant_value(a, q);
        let found = match prev {
            Some(s0) => {
                // secant predictor from the last two branch points
                let pred = match branch.len() {
                    n if n >= 2 => {
                        let (p0, p1) = (&branch[n - 2], &branch[n - 1]);
                        p1.pole_value + (p1.pole_value - p0.pole_value) / (p1.a - p0.a) * (a - p1.a)
                    }
                    _ => s0,
                };
                let hw = 0.5 * (pred - s0).abs() + 0.05 * (s0 - vc).abs() + 1e-3 * vc;
                let pick = |v: Vec<SphereProfile>| {
                    v.into_iter().filter(|p| p.pole_value > vc).min_by(|x, y| {
                        (x.pole_value - pred)
                            .abs()
                            .partial_cmp(&(y.pole_value - pred).abs())
                            .unwrap()
                    })
                };
                pick(branch_near(n, a, q, pred, hw, tol))
                    .or_else(|| find_roots(n, a, q, None, tol).ok().and_then(|r| pick(r.branch)))
            }
            None => small_branch(n, a, q, tol)
                .into_iter()
                .filter(|p| p.pole_value > vc)
                .min_by(|x, y| x.pole_value.partial_cmp(&y.pole_value).unwrap()),
        };
        match found {
            Some(p) => {
                scanned.push((a, true));
                first_found.get_or_insert(i);
                prev = Some(p.pole_value);
                branch.push(BranchPoint {
                    a,
                    pole_value: p.pole_value,
                    profile: p,
                });
            }
            None => {
                scanned.push((a, false));
                if let Some(last) = branch.last() {
                    branch_loss = Some(last.a);
                }
            }
        }
    }

    let (onset, linear_onset) = match first_found {
        Some(i) if i > 0 => {
            let (a_no, a_yes) = (grid[i - 1], grid[i]);
            let has = |a: f64| !small_branch(n, a, q, tol).is_empty();
            let (mut x0, mut x1) = (a_yes, a_no);
            while x1 - x0 > 1e-7 * a_star {
                let mid = 0.5 * (x0 + x1);
                if has(mid) {
                    x0 = mid;
                } else {
                    x1 = mid;
                }
            }
            let slope = |a: f64| mismatch_slope_at_constant(n, a, q, tol).ok();
            let lin = match (slope(a_yes), slope(hi)) {
                (Some(f0), Some(f1)) if f0.signum() != f1.signum() => Some(bisect(
                    |a| slope(a),
                    a_yes,
                    hi,
                    f0,
                    1e-10 * a_star,
                    100,
                )),
                _ => None,
            };
            (Some(0.5 * (x0 + x1)), lin)
        }
        _ => (None, None),
    };
    let epsilon0_empirical = branch.last().map(|b| a_star - b.a).unwrap_or(0.0).max(0.0);
    Ok(BifurcationWindow {
        n,
        q,
        a_star,
        epsilon0_empirical,
        onset,
        linear_onset,
        branch,
        branch_loss,
        scanned,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn tol() -> Tolerances {
        Tolerances::default()
    }

    #[test]
    fn constant_values() {
        let p = constant_solution(4, 2.0, 3.0).unwrap();
        assert_relative_eq!(p.pole_value, 2f64.sqrt(), max_relative = 1e-15);
        assert!(p.residual <= 1e-14);
        for q in [1.5, 3.0, 7.0] {
            assert_eq!(constant_solution(5, 1.0, q).unwrap().pole_value, 1.0);
        }
        assert!(constant_solution(4, 1.0, 1.0).is_err());
    }

    #[test]
    fn constant_matches_slow_decay_amplitude() {
        let pp = ProblemParams::new(5, 0.5, 4.0).unwrap();
        let c = crate::regimes::derive_constants(&pp).unwrap();
        let p = constant_solution(5, pp.a_sphere().unwrap(), 4.0).unwrap();
        assert_relative_eq!(p.pole_value, c.l.unwrap(), max_relative = 1e-14);
    }

    #[test]
    fn phi_vanishes_at_two_and_is_positive_below() {
        for n in 4..15 {
            assert!(phi(n, 2.0).abs() < 1e-12);
            for k in 1..200 {
                assert!(phi(n, k as f64 / 100.0) > 0.0);
            }
        }
    }

    #[test]
    fn three_dimensional_case_i_is_covered_strictly() {
        for &(ell, q) in &[(0.0, 2.0), (0.0, 7.0), (0.5, 3.0), (1.5, 1.8)] {
            let p = ProblemParams::new(3, ell, q).unwrap();
            let a = p.a_sphere().unwrap();
            let v = uniqueness_verdict(3, a, q);
            assert_eq!(v.conclusion, UniquenessConclusion::OnlyConstant);
            assert!(matches!(v.strictness, Strictness::Aq1 | Strictness::Both));
            assert!(2.0 - a * (q - 1.0) > ell);
        }
    }

    #[test]
    fn supersobolev_is_not_covered() {
        let v = uniqueness_verdict(4, 0.99 * 0.6, 6.0);
        assert!(v.condition_aq1 && !v.condition_aq2);
        assert_eq!(v.conclusion, UniquenessConclusion::NotCovered);
    }

    #[test]
    fn both_equalities_are_not_covered() {
        // N=4: qS = 5, a = (N-1)/(q-1) = 3/4
        let v = uniqueness_verdict(4, 0.75, 5.0);
        assert!(v.condition_aq1 && v.condition_aq2);
        assert_eq!(v.strictness, Strictness::Neither);
        assert_eq!(v.conclusion, UniquenessConclusion::NotCovered);
        assert_eq!(uniqueness_verdict(4, 0.7, 5.0).conclusion, UniquenessConclusion::OnlyConstant);
        assert_eq!(uniqueness_verdict(4, 0.75, 4.0).conclusion, UniquenessConclusion::OnlyConstant);
    }

    proptest! {
        #[test]
        fn chain_holds_in_case_i(n in 4u32..12, ell in -3.0f64..1.99, t in 0.01f64..0.99) {
            let q1 = crate::regimes::q1(n, ell);
            let qs = q_sobolev(n).value();
            let q = q1 + t * (qs - q1);
            let p = ProblemParams::new(n, ell, q).unwrap();
            prop_assume!(crate::regimes::classify(&p).tag == RegimeTag::CaseI);
            let (lhs, ph) = case_i_chain(&p).unwrap();
            prop_assert!(lhs >= ph - 1e-9 && ph >= -1e-12);
            let v = uniqueness_verdict(n, p.a_sphere().unwrap(), q);
            prop_assert_eq!(v.conclusion, UniquenessConclusion::OnlyConstant);
        }

        #[test]
        fn constant_pole_value_has_no_mismatch(n in 3u32..7, a in 0.1f64..3.0, q in 1.5f64..8.0) {
            let vc = constant_value(a, q);
            let m = mismatch(n, a, q, vc, &tol()).unwrap();
            prop_assert!(m.mismatch.abs() <= 1e-10, "{}", m.mismatch);
            prop_assert!((m.sigma - vc).abs() <= 1e-10 * vc);
        }
    }

    #[test]
    fn shooting_the_constant_returns_it() {
        let vc = constant_value(0.5, 6.0);
        let (p, m) = shoot_axisymmetric(4, 0.5, 6.0, vc, &tol()).unwrap();
        assert!(m.abs() <= 1e-10);
        assert!(p.is_constant);
        assert!(p.residual <= 1e-8);
    }

    #[test]
    fn second_root_below_bifurcation() {
        let scan = find_roots(4, 0.58, 6.0, None, &tol()).unwrap();
        assert!(scan.constant_root.is_some());
        assert!(!scan.branch.is_empty());
        for p in &scan.branch {
            assert!(p.residual <= 1e-6, "{}", p.residual);
            assert!(p.relative_amplitude() > 1e-4);
            assert!(p.pole_slope_bound().is_finite());
            let r = p.reflected();
            assert!(r.residual <= 1e-6);
            assert_relative_eq!(r.pole_value, p.south_pole_value);
        }
    }

    #[test]
    fn no_branch_inside_uniqueness_region() {
        // N=4, q=4 < qS = 5, a = 0.9 < (N-1)/(q-1) = 1
        assert_eq!(uniqueness_verdict(4, 0.9, 4.0).conclusion, UniquenessConclusion::OnlyConstant);
        let scan = find_roots(4, 0.9, 4.0, None, &tol()).unwrap();
        assert!(scan.branch.is_empty());
    }

    #[test]
    fn onset_matches_first_eigenvalue() {
        let w = trace_branch(4, 6.0, 0.5, 0.62, 13, &tol()).unwrap();
        let onset = w.onset.unwrap();
        assert!((onset - 0.6).abs() <= 1e-3, "{onset}");
        assert!((w.linear_onset.unwrap() - 0.6).abs() <= 1e-3);
        assert!(w.epsilon0_empirical > 0.0);
        assert!(w.branch.iter().all(|b| b.profile.residual <= 1e-6));
    }
}
