//! Tail classification of radial profiles: fast (`r^(2-N)`), slow (`L r^(-γ)`)
//! or log-corrected (`r^(2-N) ln r`).

use serde::{Deserialize, Serialize};

use super::{RadialError, RadialSolution};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DecayKind {
    Fast,
    Slow,
    LogCorrected,
    Undetermined,
}

/// Constants of the two-sided tail bounds, fitted over the window.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailBounds {
    /// inf of `u r^(N-2)`: lower harmonic bound.
    pub c1: f64,
    /// inf and sup of `u r^γ`.
    pub c2: Option<f64>,
    pub c3: Option<f64>,
    /// sup of `u r^(N-2)`: upper harmonic bound.
    pub c4: f64,
    /// sup of `u r^(N-2) / ln r`.
    pub c5: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayReport {
    pub kind: DecayKind,
    /// `-d ln u / d ln r` over the window.
    pub fitted_exponent: f64,
    /// RMS residual of that fit (the exponent's uncertainty proxy).
    pub fit_rms: f64,
    /// λ for fast decay, `r^γ u` for slow decay, `u r^(N-2)/ln r` for log-corrected.
    pub coefficient: f64,
    /// `r^(2-ℓ) u^(q-1)` at the last node.
    pub tail_limit: f64,
    /// sup over the window of |tail(r) - tail(r_last)|.
    pub tail_variation: f64,
    /// Slope of `ln(u r^(N-2))` against `ln ln r`.
    pub log_slope: Option<f64>,
    pub window: (f64, f64),
    pub bounds: TailBounds,
    pub expected_fast: f64,
    pub expected_slow: Option<f64>,
    /// γ(N-2-γ), the slow-decay value of the tail limit.
    pub expected_tail_limit: Option<f64>,
}

pub const DEFAULT_WINDOW: f64 = 0.25;
const MIN_DECADES: f64 = 2.0;
const RMS_LIMIT: f64 = 0.05;

fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let slope = sxy / sxx;
    let icpt = my - slope * mx;
    let rms = (x
        .iter()
        .zip(y)
        .map(|(a, b)| (b - icpt - slope * a).powi(2))
        .sum::<f64>()
        / n)
        .sqrt();
    (slope, icpt, rms)
}

pub fn classify_decay(sol: &RadialSolution, window: f64) -> Result<DecayReport, RadialError> {
    let p = sol.params;
    let (n, ell, q) = (p.nf(), p.ell, p.q);
    if sol.len() < 8 {
        return Err(RadialError::Invalid("too few nodes to classify".into()));
    }
    let t_first = sol.grid[0].ln();
    let t_last = sol.r_last().ln();
    let span = t_last - t_first;
    let min_span = MIN_DECADES * std::f64::consts::LN_10;
    if span < min_span * (1.0 - 1e-9) {
        return Err(RadialError::Invalid(format!(
            "profile spans {:.2} decades, need at least {MIN_DECADES}",
            span / std::f64::consts::LN_10
        )));
    }
    let frac = window.clamp(0.0, 1.0);
    let t_start = (t_last - frac * span).min(t_last - min_span);
    let idx: Vec<usize> = (0..sol.len())
        .filter(|&i| sol.grid[i].ln() >= t_start - 1e-12)
        .collect();
    if idx.iter().any(|&i| !(sol.u[i] > 0.0)) {
        return Err(RadialError::Invalid("profile is not positive on the tail window".into()));
    }
    let x: Vec<f64> = idx.iter().map(|&i| sol.grid[i].ln()).collect();
    let y: Vec<f64> = idx.iter().map(|&i| sol.u[i].ln()).collect();
    let (slope, _, rms) = linear_fit(&x, &y);
    let e = -slope;

    let gamma = p.gamma().ok();
    let a = p.a_sphere().ok().filter(|a| *a > 0.0);
    let tail = |i: usize| sol.grid[i].powf(2.0 - ell) * sol.u[i].powf(q - 1.0);
    let last = *idx.last().unwrap();
    let tail_limit = tail(last);
    let tail_variation = idx
        .iter()
        .map(|&i| (tail(i) - tail_limit).abs())
        .fold(0.0, f64::max);

    let harm: Vec<f64> = idx.iter().map(|&i| sol.u[i] * sol.grid[i].powf(n - 2.0)).collect();
    let c1 = harm.iter().cloned().fold(f64::INFINITY, f64::min);
    let c4 = harm.iter().cloned().fold(0.0, f64::max);
    let (c2, c3) = match gamma {
        Some(g) => {
            let s: Vec<f64> = idx.iter().map(|&i| sol.u[i] * sol.grid[i].powf(g)).collect();
            (
                Some(s.iter().cloned().fold(f64::INFINITY, f64::min)),
                Some(s.iter().cloned().fold(0.0, f64::max)),
            )
        }
        None => (None, None),
    };
    let above_e = sol.grid[idx[0]] > std::f64::consts::E;
    let c5 = above_e.then(|| {
        idx.iter()
            .zip(&harm)
            .map(|(&i, h)| h / sol.grid[i].ln())
            .fold(0.0, f64::max)
    });
    let log_slope = above_e.then(|| {
        let lx: Vec<f64> = x.iter().map(|t| t.ln()).collect();
        let ly: Vec<f64> = harm.iter().map(|h| h.ln()).collect();
        linear_fit(&lx, &ly).0
    });

    let fast = n - 2.0;
    let slow_ok = match (gamma, a) {
        (Some(g), Some(a)) if g > 0.0 => {
            (e - g).abs() <= 0.05 * g
                && (e - g).abs() < (e - fast).abs()
                && (tail_limit - a).abs() <= 0.01 * a
        }
        _ => false,
    };
    let log_ok = log_slope.map(|k| (k - 1.0).abs() <= 0.25).unwrap_or(false)
        && (e - fast).abs() <= 0.15 * fast;
    let fast_ok = (e - fast).abs() <= 0.05 * fast;
    let kind = if rms > RMS_LIMIT {
        DecayKind::Undetermined
    } else if slow_ok {
        DecayKind::Slow
    } else if log_ok {
        DecayKind::LogCorrected
    } else if fast_ok {
        DecayKind::Fast
    } else {
        DecayKind::Undetermined
    };
    let r_l = sol.grid[last];
    let coefficient = match kind {
        DecayKind::Slow => sol.u[last] * r_l.powf(gamma.unwrap_or(0.0)),
        DecayKind::LogCorrected => harm.last().unwrap() / r_l.ln(),
        _ => *harm.last().unwrap(),
    };

    Ok(DecayReport {
        kind,
        fitted_exponent: e,
        fit_rms: rms,
        coefficient,
        tail_limit,
        tail_variation,
        log_slope,
        window: (sol.grid[idx[0]], r_l),
        bounds: TailBounds { c1, c2, c3, c4, c5 },
        expected_fast: fast,
        expected_slow: gamma,
        expected_tail_limit: a,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nonlinearity::Nonlinearity;
    use crate::radial::{exact_solution, ExactKind, OriginKind};
    use crate::regimes::ProblemParams;
    use crate::roots::logspace;

    fn synthetic(p: ProblemParams, f: impl Fn(f64) -> (f64, f64)) -> RadialSolution {
        let grid = logspace(10.0, 1e6, 501);
        let (u, du) = grid.iter().map(|&r| f(r)).unzip();
        RadialSolution {
            params: p,
            nl: Nonlinearity::henon(p.ell, p.q),
            grid,
            u,
            du,
            origin_kind: OriginKind::Singular,
        }
    }

    #[test]
    fn basic_solution_is_slow() {
        let p = ProblemParams::new(5, 0.0, 3.0).unwrap();
        let sol = exact_solution(&ExactKind::Basic, &p, 1.0, 1e5, 300).unwrap();
        let rep = classify_decay(&sol, DEFAULT_WINDOW).unwrap();
        assert_eq!(rep.kind, DecayKind::Slow);
        assert!((rep.fitted_exponent - 1.0).abs() < 1e-9);
        assert!((rep.tail_limit - 2.0).abs() < 1e-12);
    }

    #[test]
    fn critical_fast_is_fast() {
        let p = ProblemParams::new(3, 0.0, 5.0).unwrap();
        let sol = exact_solution(&ExactKind::CriticalFast { mu: 1.0 }, &p, 1.0, 1e6, 300).unwrap();
        let rep = classify_decay(&sol, DEFAULT_WINDOW).unwrap();
        assert_eq!(rep.kind, DecayKind::Fast);
        assert!((rep.fitted_exponent - 1.0).abs() < 0.05);
        assert!(rep.tail_limit < 1e-4);
    }

    #[test]
    fn log_corrected_profile() {
        let p = ProblemParams::new(5, 3.0, 2.0 / 3.0).unwrap();
        let sol = synthetic(p, |r| (r.powi(-3) * r.ln(), r.powi(-4) * (1.0 - 3.0 * r.ln())));
        let rep = classify_decay(&sol, DEFAULT_WINDOW).unwrap();
        assert_eq!(rep.kind, DecayKind::LogCorrected);
        assert!((rep.log_slope.unwrap() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn noisy_profile_is_undetermined() {
        let p = ProblemParams::new(4, 0.0, 2.5).unwrap();
        let sol = synthetic(p, |r| (r.powi(-2) * (2.0 + (5.0 * r.ln()).sin()), 0.0));
        assert_eq!(classify_decay(&sol, DEFAULT_WINDOW).unwrap().kind, DecayKind::Undetermined);
    }

    #[test]
    fn short_profile_is_rejected() {
        let p = ProblemParams::new(5, 0.0, 3.0).unwrap();
        let sol = exact_solution(&ExactKind::Basic, &p, 1.0, 50.0, 100).unwrap();
        assert!(classify_decay(&sol, DEFAULT_WINDOW).is_err());
    }
}
