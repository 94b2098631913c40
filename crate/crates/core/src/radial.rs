//! Radial solutions of `u'' + (N-1)u'/r + f(r,u) = 0`.
//!
//! All integration happens in logarithmic radius `t = ln r` on the scaled
//! variable `v = r^g u`: with `g = γ` this is the Emden–Fowler flow
//!
//! ```text
//! v'' + (N-2-2γ) v' - γ(N-2-γ) v + r^(γ+2) f(r, r^(-γ) v) = 0,
//! ```
//!
//! whose nonlinear term is exactly `v^q` for the Hénon nonlinearity. Near a
//! regular centre `v` would be tiny, so shooting starts with `g = 0` and
//! switches to `g = γ` once the solution has left the core region.

pub mod decay;
pub mod io;
pub mod psi;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::Tolerances;
use crate::interp::HermiteTable;
use crate::nonlinearity::Nonlinearity;
use crate::ode::{Control, Dopri5, OdeError};
use crate::regimes::{ParamError, ProblemParams};

pub use decay::{classify_decay, DecayKind, DecayReport};
pub use psi::{integrate_psi, PsiOrbit};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RadialError {
    #[error(transparent)]
    Params(#[from] ParamError),
    #[error("integrator failed near r = {r}: {source}")]
    StepFailure { r: f64, source: OdeError },
    #[error("{0}")]
    Invalid(String),
    #[error("trajectory escaped at t = {t} (v = {v})")]
    Divergence { t: f64, v: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum OriginKind {
    Regular { alpha: f64 },
    Singular,
}

#[derive(Debug, Clone)]
pub struct RadialSolution {
    pub params: ProblemParams,
    pub nl: Nonlinearity,
    pub grid: Vec<f64>,
    pub u: Vec<f64>,
    pub du: Vec<f64>,
    pub origin_kind: OriginKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum ShootOutcome {
    /// Positive all the way to `r_max`.
    Reached,
    /// `u` hit zero at this radius.
    Crossing { r: f64 },
    /// `u` exceeded ten times its central value at this radius.
    Growth { r: f64 },
}

#[derive(Debug, Clone)]
pub struct Shot {
    pub solution: RadialSolution,
    pub outcome: ShootOutcome,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EFTrajectory {
    pub params: ProblemParams,
    pub gamma: f64,
    pub t: Vec<f64>,
    pub v: Vec<f64>,
    pub vdot: Vec<f64>,
}

/// Step cap in `t`; keeps the dense output as accurate as the step endpoints.
const H_MAX: f64 = 0.1;

/// Output density on the logarithmic grid.
pub const POINTS_PER_DECADE: f64 = 100.0;

fn dt_default() -> f64 {
    std::f64::consts::LN_10 / POINTS_PER_DECADE
}

/// Right-hand side of the scaled flow for state `(v, v')`.
fn scaled_rhs(nl: &Nonlinearity, n: f64, g: f64) -> impl Fn(f64, &[f64], &mut [f64]) + '_ {
    let c = n - 2.0 - 2.0 * g;
    let a = g * (n - 2.0 - g);
    move |t, y, dy| {
        let r = t.exp();
        let u = (-g * t).exp() * y[0];
        let src = if u > 0.0 {
            r.powf(g + 2.0) * nl.eval(r, u)
        } else {
            0.0
        };
        dy[0] = y[1];
        dy[1] = -c * y[1] + a * y[0] - src;
    }
}

fn to_scaled(g: f64, t: f64, u: f64, du: f64) -> [f64; 2] {
    // v = e^{gt}u, v' = e^{gt}(g u + r u')
    let e = (g * t).exp();
    [e * u, e * (g * u + t.exp() * du)]
}

fn from_scaled(g: f64, t: f64, v: f64, vdot: f64) -> (f64, f64) {
    // u = e^{-gt}v, u' = e^{-(g+1)t}(v' - g v)
    (
        (-g * t).exp() * v,
        (-(g + 1.0) * t).exp() * (vdot - g * v),
    )
}

impl RadialSolution {
    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grid.is_empty()
    }

    pub fn r_last(&self) -> f64 {
        *self.grid.last().unwrap_or(&f64::NAN)
    }

    /// Cubic Hermite interpolant of `u` in `r`.
    pub fn interpolant(&self) -> HermiteTable {
        HermiteTable::cubic(self.grid.clone(), self.u.clone(), self.du.clone())
    }

    /// Largest relative residual of the radial equation over interior nodes,
    /// using fourth-order differences of `p = r u'` in `t = ln r`.
    /// Requires a grid that is uniform in `ln r`.
    pub fn residual(&self) -> Result<f64, RadialError> {
        let n = self.params.nf();
        let t: Vec<f64> = self.grid.iter().map(|r| r.ln()).collect();
        if t.len() < 5 {
            return Err(RadialError::Invalid("need at least 5 nodes".into()));
        }
        let dt = t[1] - t[0];
        for w in t.windows(2) {
            if ((w[1] - w[0]) - dt).abs() > 1e-6 * dt {
                return Err(RadialError::Invalid("grid is not uniform in ln r".into()));
            }
        }
        let p: Vec<f64> = self.grid.iter().zip(&self.du).map(|(r, d)| r * d).collect();
        let mut worst: f64 = 0.0;
        for i in 2..p.len() - 2 {
            let pt = (p[i - 2] - 8.0 * p[i - 1] + 8.0 * p[i + 1] - p[i + 2]) / (12.0 * dt);
            let r = self.grid[i];
            let src = r * r * self.nl.eval(r, self.u[i]);
            let res = pt + (n - 2.0) * p[i] + src;
            let scale = pt.abs() + ((n - 2.0) * p[i]).abs() + src.abs();
            if scale > 0.0 {
                worst = worst.max(res.abs() / scale);
            }
        }
        Ok(worst)
    }
}

/// Shoots the regular solution with `u(0) = alpha` out to `r_max`.
pub fn shoot_regular(
    nl: &Nonlinearity,
    n: u32,
    alpha: f64,
    r_max: f64,
    tol: &Tolerances,
) -> Result<Shot, RadialError> {
    let params = ProblemParams::new(n, nl.ell, nl.q)?;
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(RadialError::Invalid(format!("alpha must be positive (got {alpha})")));
    }
    let r_eps = tol.r_eps;
    if !(r_max > r_eps) {
        return Err(RadialError::Invalid(format!("r_max must exceed {r_eps}")));
    }
    let nf = n as f64;
    let ell = nl.ell;

    // regular-centre expansion
    let (u0, du0) = if ell < 2.0 {
        let f0 = nl.eval(r_eps, alpha);
        (
            alpha - r_eps * r_eps * f0 / ((2.0 - ell) * (nf - ell)),
            -r_eps * f0 / (nf - ell),
        )
    } else {
        (alpha, 0.0)
    };

    let gamma = params.gamma().ok().filter(|g| *g > 0.0);
    let t0 = r_eps.ln();
    let t_max = r_max.ln();
    let t_switch = match gamma {
        Some(g) => (-alpha.ln() / g).clamp(t0, t_max),
        None => t_max,
    };
    let dt = dt_default();
    let n_out = ((t_max - t0) / dt).floor() as usize;
    // the grid stays uniform in t so the residual check applies; it ends within one step of r_max
    let times: Vec<f64> = (0..=n_out).map(|k| t0 + k as f64 * dt).collect();

    let mut grid = Vec::with_capacity(times.len());
    let mut us = Vec::with_capacity(times.len());
    let mut dus = Vec::with_capacity(times.len());
    let mut outcome = ShootOutcome::Reached;
    let mut next = 0usize;

    let mut state = (t0, u0, du0);
    let phases: Vec<(f64, f64, f64)> = match gamma {
        Some(g) if t_switch < t_max => vec![(0.0, t0, t_switch), (g, t_switch, t_max)],
        _ => vec![(0.0, t0, t_max)],
    };

    for (g, ta, tb) in phases {
        if tb <= ta {
            continue;
        }
        let y0 = to_scaled(g, state.0, state.1, state.2);
        let mut stopped = false;
        let mut end_state = (tb, state.1, state.2);
        let rhs = scaled_rhs(nl, nf, g);
        // near the centre r u' is O(r^(2-ℓ)), far below the absolute tolerance
        let atol = if g == 0.0 && gamma.is_some() {
            tol.ode_atol * 1e-12
        } else {
            tol.ode_atol
        };
        let solver = Dopri5::new(tol.ode_rtol, atol).with_h_max(H_MAX);
        let res = solver.integrate(&rhs, ta, &y0, tb, |step| {
            let u_at = |t: f64, y: &[f64]| from_scaled(g, t, y[0], y[1]).0;
            if let Some(tc) = step.locate(|t, y| u_at(t, y)) {
                if u_at(step.t0, &step.y0) > 0.0 {
                    outcome = ShootOutcome::Crossing { r: tc.exp() };
                    end_state.0 = tc;
                    stopped = true;
                }
            }
            if !stopped {
                if let Some(tg) = step.locate(|t, y| u_at(t, y) - 10.0 * alpha) {
                    outcome = ShootOutcome::Growth { r: tg.exp() };
                    end_state.0 = tg;
                    stopped = true;
                }
            }
            let limit = if stopped { end_state.0 } else { step.t1 };
            while next < times.len() && times[next] <= limit + 1e-12 && step.contains(times[next])
            {
                let y = step.eval(times[next]);
                let (u, du) = from_scaled(g, times[next], y[0], y[1]);
                if !(stopped && u <= 0.0) {
                    grid.push(times[next].exp());
                    us.push(u);
                    dus.push(du);
                }
                next += 1;
            }
            if stopped {
                return Control::Stop;
            }
            let (u, du) = from_scaled(g, step.t1, step.y1[0], step.y1[1]);
            end_state = (step.t1, u, du);
            Control::Continue
        });
        if let Err(e) = res {
            return Err(RadialError::StepFailure {
                r: e_t(&e).exp(),
                source: e,
            });
        }
        if stopped {
            break;
        }
        state = end_state;
    }

    Ok(Shot {
        solution: RadialSolution {
            params,
            nl: nl.clone(),
            grid,
            u: us,
            du: dus,
            origin_kind: OriginKind::Regular { alpha },
        },
        outcome,
    })
}

fn e_t(e: &OdeError) -> f64 {
    match e {
        OdeError::StepUnderflow { t } | OdeError::NonFinite { t } => *t,
        OdeError::TooManySteps { t, .. } => *t,
    }
}

/// Shoots a batch of central values in parallel; results keep the input order.
pub fn scan_alpha(
    nl: &Nonlinearity,
    n: u32,
    alphas: &[f64],
    r_max: f64,
    tol: &Tolerances,
) -> Vec<Result<Shot, RadialError>> {
    alphas
        .par_iter()
        .map(|&a| shoot_regular(nl, n, a, r_max, tol))
        .collect()
}

/// Closed-form radial solutions of the Hénon equation.
#[derive(Debug, Clone)]
pub enum ExactKind {
    Basic,
    CriticalFast { mu: f64 },
    CriticalSlow { orbit: PsiOrbit },
}

/// `u`, `u'`, `u''` of the closed-form families at radius `r`.
fn exact_derivs(kind: &ExactKind, p: &ProblemParams, r: f64) -> (f64, f64, f64) {
    let (n, ell) = (p.nf(), p.ell);
    match kind {
        ExactKind::Basic => {
            let g = p.gamma().unwrap();
            let l = p.l().unwrap();
            let u = l * r.powf(-g);
            (u, -g * u / r, g * (g + 1.0) * u / (r * r))
        }
        ExactKind::CriticalFast { mu } => {
            let k = (n - 2.0) / (2.0 - ell);
            let c = mu * ((n - ell) * (n - 2.0)).sqrt();
            let s = 2.0 - ell;
            let b = mu * mu + r.powf(s);
            let u = (c / b).powf(k);
            // u = c^k b^{-k}, b' = s r^{s-1}, b'' = s(s-1) r^{s-2}
            let db = s * r.powf(s - 1.0);
            let ddb = s * (s - 1.0) * r.powf(s - 2.0);
            let du = -k * u * db / b;
            let ddu = k * u * ((k + 1.0) * db * db / (b * b) - ddb / b);
            (u, du, ddu)
        }
        ExactKind::CriticalSlow { .. } => unreachable!("sampled on the orbit grid"),
    }
}

pub fn exact_solution(
    kind: &ExactKind,
    p: &ProblemParams,
    r_min: f64,
    r_max: f64,
    n_points: usize,
) -> Result<RadialSolution, RadialError> {
    let p = ProblemParams::new(p.n, p.ell, p.q)?;
    let q2 = crate::regimes::q2(p.n, p.ell);
    let critical = crate::config::ties(p.q, q2, 1e-12);
    let nl = Nonlinearity::henon(p.ell, p.q);
    let (grid, u, du, origin_kind) = match kind {
        ExactKind::Basic => {
            if !(p.a_sphere().map(|a| a > 0.0).unwrap_or(false)) {
                return Err(RadialError::Invalid(
                    "basic solution needs gamma(N-2-gamma) > 0".into(),
                ));
            }
            let grid = crate::roots::logspace(r_min, r_max, n_points);
            let (u, du) = grid.iter().map(|&r| {
                let d = exact_derivs(kind, &p, r);
                (d.0, d.1)
            }).unzip();
            (grid, u, du, OriginKind::Singular)
        }
        ExactKind::CriticalFast { mu } => {
            if !(p.ell < 2.0 && critical && *mu > 0.0) {
                return Err(RadialError::Invalid(
                    "critical fast solution needs ell < 2, q = q2 and mu > 0".into(),
                ));
            }
            let grid = crate::roots::logspace(r_min, r_max, n_points);
            let (u, du) = grid.iter().map(|&r| {
                let d = exact_derivs(kind, &p, r);
                (d.0, d.1)
            }).unzip();
            let alpha = exact_derivs(kind, &p, 0.0).0;
            (grid, u, du, OriginKind::Regular { alpha })
        }
        ExactKind::CriticalSlow { orbit } => {
            if !(p.ell < 2.0 && critical) {
                return Err(RadialError::Invalid(
                    "critical slow solution needs ell < 2 and q = q2".into(),
                ));
            }
            if (orbit.p - p.q).abs() > 1e-12 * p.q {
                return Err(RadialError::Invalid("orbit belongs to a different exponent".into()));
            }
            let kappa = (p.nf() - 2.0) / 2.0;
            let mut grid = Vec::new();
            let mut u = Vec::new();
            let mut du = Vec::new();
            for i in 0..orbit.t.len() {
                let t = orbit.t[i];
                let r = t.exp();
                if r < r_min * (1.0 - 1e-12) || r > r_max * (1.0 + 1e-12) {
                    continue;
                }
                let (ui, dui) = from_scaled(kappa, t, orbit.psi[i], orbit.dpsi[i]);
                grid.push(r);
                u.push(ui);
                du.push(dui);
            }
            (grid, u, du, OriginKind::Singular)
        }
    };
    Ok(RadialSolution {
        params: p,
        nl,
        grid,
        u,
        du,
        origin_kind,
    })
}

/// Relative residual of the radial equation from the analytic second derivative.
pub fn exact_residual_analytic(kind: &ExactKind, p: &ProblemParams, r: f64) -> f64 {
    let (u, du, ddu) = exact_derivs(kind, p, r);
    let lap = ddu + (p.nf() - 1.0) * du / r;
    let f = r.powf(-p.ell) * u.powf(p.q);
    (lap + f).abs() / (ddu.abs() + ((p.nf() - 1.0) * du / r).abs() + f.abs())
}

/// Relative residual using fourth-order central differences of the closed form.
pub fn exact_residual_fd(kind: &ExactKind, p: &ProblemParams, r: f64) -> f64 {
    let u = |x: f64| exact_derivs(kind, p, x).0;
    let h = 1e-3 * r;
    let d1 = (8.0 * (u(r + h) - u(r - h)) - (u(r + 2.0 * h) - u(r - 2.0 * h))) / (12.0 * h);
    let d2 = (-u(r + 2.0 * h) + 16.0 * u(r + h) - 30.0 * u(r) + 16.0 * u(r - h) - u(r - 2.0 * h))
        / (12.0 * h * h);
    let f = r.powf(-p.ell) * u(r).powf(p.q);
    let lap = d2 + (p.nf() - 1.0) * d1 / r;
    (lap + f).abs() / (d2.abs() + ((p.nf() - 1.0) * d1 / r).abs() + f.abs())
}

fn is_uniform(t: &[f64]) -> bool {
    if t.len() < 3 {
        return true;
    }
    let dt = t[1] - t[0];
    t.windows(2).all(|w| ((w[1] - w[0]) - dt).abs() <= 1e-9 * dt.abs())
}

pub fn to_emden_fowler(sol: &RadialSolution) -> Result<EFTrajectory, RadialError> {
    let g = sol.params.gamma()?;
    if sol.len() < 2 {
        return Err(RadialError::Invalid("solution has fewer than two nodes".into()));
    }
    let t_raw: Vec<f64> = sol.grid.iter().map(|r| r.ln()).collect();
    let (t, u, du) = if is_uniform(&t_raw) {
        (t_raw, sol.u.clone(), sol.du.clone())
    } else {
        let table = sol.interpolant();
        let (ta, tb) = (t_raw[0], *t_raw.last().unwrap());
        let m = t_raw.len();
        let t: Vec<f64> = (0..m).map(|k| ta + (tb - ta) * k as f64 / (m - 1) as f64).collect();
        let (u, du) = t
            .iter()
            .map(|t| {
                let (a, b, _) = table.eval3(t.exp());
                (a, b)
            })
            .unzip();
        (t, u, du)
    };
    let (v, vdot) = t
        .iter()
        .zip(u.iter().zip(&du))
        .map(|(&t, (&u, &du))| {
            let s = to_scaled(g, t, u, du);
            (s[0], s[1])
        })
        .unzip();
    Ok(EFTrajectory {
        params: sol.params,
        gamma: g,
        t,
        v,
        vdot,
    })
}

pub fn from_emden_fowler(traj: &EFTrajectory, nl: &Nonlinearity) -> RadialSolution {
    let mut grid = Vec::with_capacity(traj.t.len());
    let mut u = Vec::with_capacity(traj.t.len());
    let mut du = Vec::with_capacity(traj.t.len());
    for i in 0..traj.t.len() {
        let (a, b) = from_scaled(traj.gamma, traj.t[i], traj.v[i], traj.vdot[i]);
        grid.push(traj.t[i].exp());
        u.push(a);
        du.push(b);
    }
    RadialSolution {
        params: traj.params,
        nl: nl.clone(),
        grid,
        u,
        du,
        origin_kind: OriginKind::Singular,
    }
}

impl EFTrajectory {
    /// Conserved quantity of the undamped Hénon flow (meaningful when q = q2).
    pub fn hamiltonian(&self, i: usize) -> f64 {
        let q = self.params.q;
        let a = self.gamma * (self.params.nf() - 2.0 - self.gamma);
        let v = self.v[i];
        0.5 * self.vdot[i].powi(2) - 0.5 * a * v * v + v.abs().powf(q + 1.0) / (q + 1.0)
    }

    /// Largest deviation of the Hamiltonian from its initial value, relative
    /// to the largest of its terms along the trajectory (the homoclinic orbit
    /// has zero energy).
    pub fn hamiltonian_drift(&self) -> f64 {
        let h0 = self.hamiltonian(0);
        let a = self.gamma * (self.params.nf() - 2.0 - self.gamma);
        let scale = (0..self.t.len())
            .map(|i| (0.5 * self.vdot[i].powi(2)).max(0.5 * a * self.v[i].powi(2)))
            .fold(h0.abs(), f64::max);
        (0..self.t.len())
            .map(|i| (self.hamiltonian(i) - h0).abs())
            .fold(0.0, f64::max)
            / scale.max(1e-300)
    }

    /// Relative residual of the Hénon flow via differences of `v'` on the
    /// uniform t-grid.
    pub fn residual(&self) -> f64 {
        let (n, q, g) = (self.params.nf(), self.params.q, self.gamma);
        let c = n - 2.0 - 2.0 * g;
        let a = g * (n - 2.0 - g);
        if self.t.len() < 5 {
            return f64::NAN;
        }
        let dt = self.t[1] - self.t[0];
        let w = &self.vdot;
        let mut worst: f64 = 0.0;
        for i in 2..w.len() - 2 {
            let acc = (w[i - 2] - 8.0 * w[i - 1] + 8.0 * w[i + 1] - w[i + 2]) / (12.0 * dt);
            let vq = self.v[i].max(0.0).powf(q);
            let res = acc + c * w[i] - a * self.v[i] + vq;
            let scale = acc.abs() + (c * w[i]).abs() + (a * self.v[i]).abs() + vq;
            if scale > 0.0 {
                worst = worst.max(res.abs() / scale);
            }
        }
        worst
    }
}

/// Equilibria `{0, L}` of the Hénon flow, i.e. the non-negative roots of
/// `v^q = γ(N-2-γ) v`.
pub fn flow_equilibria(p: &ProblemParams) -> Result<Vec<f64>, RadialError> {
    let l = p.l()?;
    Ok(vec![0.0, l])
}

/// Eigenvalues `(re, im)` of the linearisation of the Hénon flow at `L`:
/// roots of `μ² + (N-2-2γ)μ + (q-1)γ(N-2-γ)`.
pub fn linearization_at_l(p: &ProblemParams) -> Result<[(f64, f64); 2], RadialError> {
    let g = p.gamma()?;
    let c = p.nf() - 2.0 - 2.0 * g;
    let k = (p.q - 1.0) * p.a_sphere()?;
    Ok(quadratic_roots(c, k))
}

/// Eigenvalues at the origin of the flow, `γ` and `γ-(N-2)`.
pub fn linearization_at_zero(p: &ProblemParams) -> Result<[f64; 2], RadialError> {
    let g = p.gamma()?;
    Ok([g, g - (p.nf() - 2.0)])
}

fn quadratic_roots(b: f64, c: f64) -> [(f64, f64); 2] {
    let disc = b * b - 4.0 * c;
    if disc >= 0.0 {
        let s = disc.sqrt();
        [(0.5 * (-b - s), 0.0), (0.5 * (-b + s), 0.0)]
    } else {
        let s = (-disc).sqrt();
        [(-0.5 * b, -0.5 * s), (-0.5 * b, 0.5 * s)]
    }
}

/// Where a two-sided integration of the flow stopped.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Escape {
    pub backward: Option<f64>,
    pub forward: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct SingularShot {
    pub trajectory: EFTrajectory,
    /// Escape times (v left the band `(0, escape_bound)`) in each direction.
    pub escape: Escape,
}

/// Integrates the Emden–Fowler flow of `nl` (with `g = γ`) from `(v, v')` at
/// `t0` backward to `t_min` and forward to `t_max`, sampling on a uniform
/// t-grid through `t0`. Integration in a direction stops when `v` becomes
/// non-positive or exceeds `escape_bound`.
pub fn singular_shoot(
    nl: &Nonlinearity,
    n: u32,
    t0: f64,
    v_init: (f64, f64),
    t_min: f64,
    t_max: f64,
    escape_bound: f64,
    tol: &Tolerances,
) -> Result<SingularShot, RadialError> {
    let params = ProblemParams::new(n, nl.ell, nl.q)?;
    let g = params.gamma()?;
    if !(t_min <= t0 && t0 <= t_max) {
        return Err(RadialError::Invalid("need t_min <= t0 <= t_max".into()));
    }
    let rhs = scaled_rhs(nl, n as f64, g);
    let dt = dt_default();
    let solver = Dopri5::new(tol.ode_rtol, tol.ode_atol).with_h_max(H_MAX);

    let run = |t_end: f64| -> Result<(Vec<(f64, f64, f64)>, Option<f64>), RadialError> {
        let dir = if t_end >= t0 { 1.0 } else { -1.0 };
        let count = ((t_end - t0).abs() / dt).floor() as usize;
        let times: Vec<f64> = (1..=count).map(|k| t0 + dir * k as f64 * dt).collect();
        let mut out = Vec::with_capacity(times.len());
        let mut next = 0;
        let mut escaped = None;
        if t_end == t0 {
            return Ok((out, None));
        }
        solver
            .integrate(&rhs, t0, &[v_init.0, v_init.1], t_end, |step| {
                let hit = step
                    .locate(|_, y| y[0])
                    .or_else(|| step.locate(|_, y| y[0] - escape_bound));
                let limit = hit.unwrap_or(step.t1);
                while next < times.len() && step.contains(times[next]) {
                    if (times[next] - limit) * dir > 0.0 {
                        break;
                    }
                    let y = step.eval(times[next]);
                    out.push((times[next], y[0], y[1]));
                    next += 1;
                }
                if let Some(t) = hit {
                    escaped = Some(t);
                    return Control::Stop;
                }
                Control::Continue
            })
            .map_err(|e| RadialError::StepFailure {
                r: e_t(&e).exp(),
                source: e,
            })?;
        Ok((out, escaped))
    };

    let (back, esc_b) = run(t_min)?;
    let (fwd, esc_f) = run(t_max)?;
    let mut t = Vec::with_capacity(back.len() + fwd.len() + 1);
    let mut v = Vec::with_capacity(t.capacity());
    let mut vdot = Vec::with_capacity(t.capacity());
    for &(a, b, c) in back.iter().rev() {
        t.push(a);
        v.push(b);
        vdot.push(c);
    }
    t.push(t0);
    v.push(v_init.0);
    vdot.push(v_init.1);
    for &(a, b, c) in &fwd {
        t.push(a);
        v.push(b);
        vdot.push(c);
    }
    Ok(SingularShot {
        trajectory: EFTrajectory {
            params,
            gamma: g,
            t,
            v,
            vdot,
        },
        escape: Escape {
            backward: esc_b,
            forward: esc_f,
        },
    })
}

/// Initial data at `r_far` on the linear stable manifold of `v = 0`, i.e.
/// `u = lambda·r^(2-N)`, for the fast-decaying singular family.
pub fn fast_decay_seed(p: &ProblemParams, lambda: f64, r_far: f64) -> Result<(f64, (f64, f64)), RadialError> {
    let g = p.gamma()?;
    let [_, mu] = linearization_at_zero(p)?;
    let t = r_far.ln();
    let v = lambda * (g * t).exp() * r_far.powf(2.0 - p.nf());
    Ok((t, (v, mu * v)))
}
