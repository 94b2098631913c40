//! Dormand–Prince 5(4) integrator with step-size control and the standard
//! fourth-order continuous extension.
//!
//! The driver hands every accepted step to a callback as a [`DenseStep`], so
//! callers can sample output grids, locate events, or stop early without the
//! integrator knowing anything about the problem.

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OdeError {
    #[error("step size underflow at t = {t}")]
    StepUnderflow { t: f64 },
    #[error("maximum number of steps ({steps}) exceeded at t = {t}")]
    TooManySteps { t: f64, steps: usize },
    #[error("non-finite state encountered at t = {t}")]
    NonFinite { t: f64 },
}

const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];

const A: [[f64; 6]; 7] = [
    [0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];

// difference between the 5th and embedded 4th order weights
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

const D: [f64; 7] = [
    -12715105075.0 / 11282082432.0,
    0.0,
    87487479700.0 / 32700410799.0,
    -10690763975.0 / 1880347072.0,
    701980252875.0 / 199316789632.0,
    -1453857185.0 / 822651844.0,
    69997945.0 / 29380423.0,
];

/// An accepted step together with its continuous extension.
#[derive(Debug, Clone)]
pub struct DenseStep {
    pub t0: f64,
    pub t1: f64,
    pub y0: Vec<f64>,
    pub y1: Vec<f64>,
    cont: [Vec<f64>; 5],
}

impl DenseStep {
    /// Interpolated state at `t` (must lie inside the step).
    pub fn eval(&self, t: f64) -> Vec<f64> {
        let mut out = vec![0.0; self.y0.len()];
        self.eval_into(t, &mut out);
        out
    }

    pub fn eval_into(&self, t: f64, out: &mut [f64]) {
        let h = self.t1 - self.t0;
        let s = if h == 0.0 { 0.0 } else { (t - self.t0) / h };
        let s1 = 1.0 - s;
        let [c0, c1, c2, c3, c4] = &self.cont;
        for i in 0..out.len() {
            out[i] = c0[i] + (c1[i] + (c2[i] + (c3[i] + c4[i] * s1) * s) * s1) * s;
        }
    }

    pub fn contains(&self, t: f64) -> bool {
        let (lo, hi) = if self.t0 <= self.t1 {
            (self.t0, self.t1)
        } else {
            (self.t1, self.t0)
        };
        t >= lo && t <= hi
    }

    /// Locates a sign change of `g` inside the step by bisection on the
    /// dense output. Returns `None` when `g` has the same sign at both ends.
    pub fn locate<G>(&self, mut g: G) -> Option<f64>
    where
        G: FnMut(f64, &[f64]) -> f64,
    {
        let mut ga = g(self.t0, &self.y0);
        let gb = g(self.t1, &self.y1);
        if ga == 0.0 {
            return Some(self.t0);
        }
        if ga.signum() == gb.signum() && gb != 0.0 {
            return None;
        }
        let (mut a, mut b) = (self.t0, self.t1);
        let mut buf = vec![0.0; self.y0.len()];
        for _ in 0..200 {
            let m = 0.5 * (a + b);
            if m == a || m == b {
                break;
            }
            self.eval_into(m, &mut buf);
            let gm = g(m, &buf);
            if gm == 0.0 {
                return Some(m);
            }
            if gm.signum() == ga.signum() {
                a = m;
                ga = gm;
            } else {
                b = m;
            }
        }
        Some(0.5 * (a + b))
    }
}

/// What the step callback wants the driver to do next.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Control {
    Continue,
    Stop,
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Stats {
    pub accepted: usize,
    pub rejected: usize,
    pub evaluations: usize,
    /// Time reached when the driver returned.
    pub t_final: f64,
}

#[derive(Debug, Clone, Copy)]
pub struct Dopri5 {
    pub rtol: f64,
    pub atol: f64,
    pub h_max: f64,
    pub max_steps: usize,
    pub safety: f64,
}

impl Default for Dopri5 {
    fn default() -> Self {
        Self {
            rtol: 1e-8,
            atol: 1e-10,
            h_max: f64::INFINITY,
            max_steps: 1_000_000,
            safety: 0.9,
        }
    }
}

impl Dopri5 {
    pub fn new(rtol: f64, atol: f64) -> Self {
        Self {
            rtol,
            atol,
            ..Self::default()
        }
    }

    pub fn with_h_max(mut self, h_max: f64) -> Self {
        self.h_max = h_max;
        self
    }

    pub fn with_max_steps(mut self, max_steps: usize) -> Self {
        self.max_steps = max_steps;
        self
    }

    fn err_norm(&self, y0: &[f64], y1: &[f64], err: &[f64]) -> f64 {
        let n = y0.len() as f64;
        let sum: f64 = y0
            .iter()
            .zip(y1)
            .zip(err)
            .map(|((a, b), e)| {
                let sc = self.atol + self.rtol * a.abs().max(b.abs());
                (e / sc).powi(2)
            })
            .sum();
        (sum / n).sqrt()
    }

    fn initial_step<F>(&self, f: &mut F, t0: f64, y0: &[f64], f0: &[f64], dir: f64) -> f64
    where
        F: FnMut(f64, &[f64], &mut [f64]),
    {
        let n = y0.len() as f64;
        let sc: Vec<f64> = y0.iter().map(|y| self.atol + self.rtol * y.abs()).collect();
        let d0 = (y0.iter().zip(&sc).map(|(y, s)| (y / s).powi(2)).sum::<f64>() / n).sqrt();
        let d1 = (f0.iter().zip(&sc).map(|(y, s)| (y / s).powi(2)).sum::<f64>() / n).sqrt();
        let mut h0 = if d0 < 1e-5 || d1 < 1e-5 {
            1e-6
        } else {
            0.01 * d0 / d1
        };
        h0 = h0.min(self.h_max);
        let y1: Vec<f64> = y0.iter().zip(f0).map(|(y, k)| y + dir * h0 * k).collect();
        let mut f1 = vec![0.0; y0.len()];
        f(t0 + dir * h0, &y1, &mut f1);
        let d2 = (f1
            .iter()
            .zip(f0)
            .zip(&sc)
            .map(|((a, b), s)| ((a - b) / s).powi(2))
            .sum::<f64>()
            / n)
            .sqrt()
            / h0;
        let h1 = if d1.max(d2) <= 1e-15 {
            (h0 * 1e-3).max(1e-6)
        } else {
            (0.01 / d1.max(d2)).powf(1.0 / 5.0)
        };
        (100.0 * h0).min(h1).min(self.h_max)
    }

    /// Integrates `y' = f(t, y)` from `t0` to `t_end` (either direction).
    ///
    /// `on_step` sees every accepted step and may stop the integration.
    pub fn integrate<F, S>(
        &self,
        mut f: F,
        t0: f64,
        y0: &[f64],
        t_end: f64,
        mut on_step: S,
    ) -> Result<Stats, OdeError>
    where
        F: FnMut(f64, &[f64], &mut [f64]),
        S: FnMut(&DenseStep) -> Control,
    {
        let dim = y0.len();
        let dir = if t_end >= t0 { 1.0 } else { -1.0 };
        let mut stats = Stats {
            t_final: t0,
            ..Stats::default()
        };
        if t_end == t0 {
            return Ok(stats);
        }
        let mut t = t0;
        let mut y = y0.to_vec();
        let mut k: Vec<Vec<f64>> = vec![vec![0.0; dim]; 7];
        f(t, &y, &mut k[0]);
        stats.evaluations += 1;
        let mut h = self.initial_step(&mut f, t, &y, &k[0].clone(), dir);
        stats.evaluations += 1;
        let mut ytmp = vec![0.0; dim];
        let mut y_new = vec![0.0; dim];
        let mut err = vec![0.0; dim];
        let mut fac_old: f64 = 1e-4;
        let mut last_rejected = false;

        loop {
            if stats.accepted + stats.rejected >= self.max_steps {
                return Err(OdeError::TooManySteps {
                    t,
                    steps: self.max_steps,
                });
            }
            let remaining = (t_end - t).abs();
            let mut last = false;
            if h >= remaining {
                h = remaining;
                last = true;
            }
            if h < 1e-14 * t.abs().max(1.0) && !last {
                return Err(OdeError::StepUnderflow { t });
            }
            let hs = dir * h;

            for stage in 1..7 {
                for i in 0..dim {
                    let mut acc = 0.0;
                    for (j, kj) in k.iter().enumerate().take(stage) {
                        acc += A[stage][j] * kj[i];
                    }
                    ytmp[i] = y[i] + hs * acc;
                }
                let (done, rest) = k.split_at_mut(stage);
                let _ = done;
                f(t + C[stage] * hs, &ytmp, &mut rest[0]);
            }
            stats.evaluations += 6;
            // stage 7 was evaluated at the 5th order solution (FSAL)
            y_new.copy_from_slice(&ytmp);
            for i in 0..dim {
                let mut acc = 0.0;
                for (j, kj) in k.iter().enumerate() {
                    acc += E[j] * kj[i];
                }
                err[i] = hs * acc;
            }
            if y_new.iter().any(|v| !v.is_finite()) {
                if last_rejected && h < 1e-12 {
                    return Err(OdeError::NonFinite { t });
                }
                h *= 0.25;
                stats.rejected += 1;
                last_rejected = true;
                continue;
            }
            let en = self.err_norm(&y, &y_new, &err);
            if !en.is_finite() {
                return Err(OdeError::NonFinite { t });
            }

            // PI step-size controller
            let beta = 0.04;
            let expo = 0.2 - beta * 0.75;
            let fac11 = en.powf(expo);
            let fac = fac11 / fac_old.powf(beta);
            let fac = (1.0 / 10.0_f64).max((1.0 / 0.2_f64).min(fac / self.safety));
            let mut h_new = h / fac;

            if en <= 1.0 {
                fac_old = en.max(1e-4);
                stats.accepted += 1;
                let t_new = if last { t_end } else { t + hs };
                let ydiff: Vec<f64> = y_new.iter().zip(&y).map(|(a, b)| a - b).collect();
                let bspl: Vec<f64> = (0..dim).map(|i| hs * k[0][i] - ydiff[i]).collect();
                let c3: Vec<f64> = (0..dim).map(|i| ydiff[i] - hs * k[6][i] - bspl[i]).collect();
                let c4: Vec<f64> = (0..dim)
                    .map(|i| {
                        hs * k
                            .iter()
                            .zip(D.iter())
                            .map(|(kj, d)| d * kj[i])
                            .sum::<f64>()
                    })
                    .collect();
                let step = DenseStep {
                    t0: t,
                    t1: t_new,
                    y0: y.clone(),
                    y1: y_new.clone(),
                    cont: [y.clone(), ydiff, bspl, c3, c4],
                };
                t = t_new;
                y.copy_from_slice(&y_new);
                k.swap(0, 6);
                stats.t_final = t;
                if on_step(&step) == Control::Stop || last {
                    return Ok(stats);
                }
                if last_rejected {
                    h_new = h_new.min(h);
                }
                last_rejected = false;
                h = h_new.min(self.h_max);
            } else {
                h_new = h / (1.0 / 0.2_f64).min(fac11 / self.safety);
                stats.rejected += 1;
                last_rejected = true;
                h = h_new;
            }
        }
    }

    /// Integrates and returns the state at `t_end`.
    pub fn solve_to<F>(&self, f: F, t0: f64, y0: &[f64], t_end: f64) -> Result<Vec<f64>, OdeError>
    where
        F: FnMut(f64, &[f64], &mut [f64]),
    {
        let mut last = y0.to_vec();
        self.integrate(f, t0, y0, t_end, |s| {
            last.clone_from(&s.y1);
            Control::Continue
        })?;
        Ok(last)
    }

    /// Integrates and samples the dense output at the (monotone) `times`.
    /// Sampling stops early if the callback-driven integration is cut short.
    pub fn sample<F>(
        &self,
        f: F,
        t0: f64,
        y0: &[f64],
        times: &[f64],
    ) -> Result<Vec<Vec<f64>>, OdeError>
    where
        F: FnMut(f64, &[f64], &mut [f64]),
    {
        let Some(&t_end) = times.last() else {
            return Ok(Vec::new());
        };
        let mut out = Vec::with_capacity(times.len());
        let mut next = 0;
        while next < times.len() && times[next] == t0 {
            out.push(y0.to_vec());
            next += 1;
        }
        self.integrate(f, t0, y0, t_end, |s| {
            while next < times.len() && s.contains(times[next]) {
                out.push(s.eval(times[next]));
                next += 1;
            }
            Control::Continue
        })?;
        Ok(out)
    }
}
