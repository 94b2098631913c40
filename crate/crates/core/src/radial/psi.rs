//! The periodic orbit `Ψ'' - κ²Ψ + Ψ^p = 0` with κ = (N-2)/2 and
//! p = (N+2-2ℓ)/(N-2), which generates the critical slow-decay solutions.

use serde::{Deserialize, Serialize};

use super::RadialError;
use crate::config::{ties, Tolerances};
use crate::ode::{Control, Dopri5};
use crate::regimes::{q2, ProblemParams};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PsiOrbit {
    pub p: f64,
    pub psi0: f64,
    pub t: Vec<f64>,
    pub psi: Vec<f64>,
    pub dpsi: Vec<f64>,
    /// Hamiltonian at the initial point.
    pub energy: f64,
    /// Mean distance between consecutive maxima (or minima); `None` at the equilibrium.
    pub period: Option<f64>,
    pub is_equilibrium: bool,
    /// Extremal points `(t, ψ)` in time order, including the start.
    pub extrema: Vec<(f64, f64)>,
    /// Largest relative deviation of the Hamiltonian along the samples.
    pub energy_drift: f64,
}

#[derive(Debug, Clone, Copy)]
pub struct PsiConstants {
    pub kappa: f64,
    pub p: f64,
    pub psi0: f64,
}

impl PsiConstants {
    pub fn new(p: &ProblemParams) -> Result<Self, RadialError> {
        if !(p.ell < 2.0) {
            return Err(RadialError::Invalid("the critical orbit needs ell < 2".into()));
        }
        let q2 = q2(p.n, p.ell);
        if !ties(p.q, q2, 1e-12) {
            return Err(RadialError::Invalid(format!(
                "the critical orbit needs q = q2 = {q2} (got {})",
                p.q
            )));
        }
        let kappa = (p.nf() - 2.0) / 2.0;
        Ok(Self {
            kappa,
            p: q2,
            psi0: kappa.powf((p.nf() - 2.0) / (2.0 - p.ell)),
        })
    }

    pub fn hamiltonian(&self, psi: f64, dpsi: f64) -> f64 {
        let k2 = self.kappa * self.kappa;
        0.5 * dpsi * dpsi - 0.5 * k2 * psi * psi + psi.abs().powf(self.p + 1.0) / (self.p + 1.0)
    }

    /// Upper end of the potential well for data starting at rest.
    pub fn well_top(&self) -> f64 {
        ((self.p + 1.0) * self.kappa * self.kappa / 2.0).powf(1.0 / (self.p - 1.0))
    }

    /// Period of small oscillations about Ψ₀.
    pub fn linear_period(&self) -> f64 {
        2.0 * std::f64::consts::PI / (self.kappa * (self.p - 1.0).sqrt())
    }
}

/// Integrates the orbit starting at rest from `psi_init` for `periods` periods.
pub fn integrate_psi(
    p: &ProblemParams,
    psi_init: f64,
    periods: usize,
    tol: &Tolerances,
) -> Result<PsiOrbit, RadialError> {
    let c = PsiConstants::new(p)?;
    let top = c.well_top();
    if !(psi_init > 0.0 && psi_init < top) {
        return Err(RadialError::Invalid(format!(
            "psi_init must lie in the well (0, {top}) (got {psi_init})"
        )));
    }
    let periods = periods.max(1);
    let t_lin = c.linear_period();
    let dt = t_lin / 256.0;
    let energy = c.hamiltonian(psi_init, 0.0);

    if (psi_init - c.psi0).abs() <= 1e-14 * c.psi0 {
        let n = 256 * periods + 1;
        return Ok(PsiOrbit {
            p: c.p,
            psi0: c.psi0,
            t: (0..n).map(|k| k as f64 * dt).collect(),
            psi: vec![c.psi0; n],
            dpsi: vec![0.0; n],
            energy,
            period: None,
            is_equilibrium: true,
            extrema: vec![],
            energy_drift: 0.0,
        });
    }

    let k2 = c.kappa * c.kappa;
    let pe = c.p;
    let rhs = move |_t: f64, y: &[f64], dy: &mut [f64]| {
        dy[0] = y[1];
        dy[1] = k2 * y[0] - y[0].abs().powf(pe);
    };
    let solver = Dopri5::new(tol.fine_rtol, tol.fine_atol)
        .with_h_max(t_lin / 32.0)
        .with_max_steps(10_000_000);

    let mut t = vec![0.0];
    let mut psi = vec![psi_init];
    let mut dpsi = vec![0.0];
    let mut extrema = vec![(0.0, psi_init)];
    let needed = 2 * periods;
    let mut next_sample = dt;
    // the near-separatrix period can be far longer than the linear one
    let t_cap = 1e4 * t_lin;
    let mut t_stop = f64::INFINITY;
    solver
        .integrate(rhs, 0.0, &[psi_init, 0.0], t_cap, |step| {
            if let Some(te) = step.locate(|_, y| y[1]) {
                if te > 1e-9 * t_lin {
                    let y = step.eval(te);
                    extrema.push((te, y[0]));
                    if extrema.len() > needed {
                        t_stop = te;
                    }
                }
            }
            let limit = t_stop.min(step.t1);
            while next_sample <= limit && step.contains(next_sample) {
                let y = step.eval(next_sample);
                t.push(next_sample);
                psi.push(y[0]);
                dpsi.push(y[1]);
                next_sample += dt;
            }
            if t_stop.is_finite() {
                Control::Stop
            } else {
                Control::Continue
            }
        })
        .map_err(|e| RadialError::StepFailure { r: f64::NAN, source: e })?;
    if extrema.len() <= needed {
        return Err(RadialError::Invalid(
            "orbit did not complete the requested periods".into(),
        ));
    }

    let mut gaps = Vec::new();
    for parity in 0..2 {
        let times: Vec<f64> = extrema.iter().skip(parity).step_by(2).map(|e| e.0).collect();
        gaps.extend(times.windows(2).map(|w| w[1] - w[0]));
    }
    let period = gaps.iter().sum::<f64>() / gaps.len() as f64;
    let energy_drift = psi
        .iter()
        .zip(&dpsi)
        .map(|(a, b)| (c.hamiltonian(*a, *b) - energy).abs())
        .fold(0.0, f64::max)
        / energy.abs();

    Ok(PsiOrbit {
        p: c.p,
        psi0: c.psi0,
        t,
        psi,
        dpsi,
        energy,
        period: Some(period),
        is_equilibrium: false,
        extrema,
        energy_drift,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn six() -> ProblemParams {
        ProblemParams::new(6, 0.0, 2.0).unwrap()
    }

    #[test]
    fn six_dimensional_constants() {
        let c = PsiConstants::new(&six()).unwrap();
        assert_relative_eq!(c.p, 2.0);
        assert_relative_eq!(c.psi0, 4.0, max_relative = 1e-14);
        assert_relative_eq!(c.kappa * c.kappa, 4.0);
    }

    #[test]
    fn equilibrium_start() {
        let o = integrate_psi(&six(), 4.0, 3, &Tolerances::default()).unwrap();
        assert!(o.is_equilibrium && o.period.is_none());
        assert!(o.psi.iter().all(|&x| x == 4.0));
    }

    #[test]
    fn oscillates_about_psi0_and_conserves_energy() {
        let o = integrate_psi(&six(), 5.5, 10, &Tolerances::default()).unwrap();
        assert!(o.energy_drift <= 1e-6, "{}", o.energy_drift);
        for w in o.extrema.windows(2) {
            assert!((w[0].1 - 4.0) * (w[1].1 - 4.0) < 0.0);
        }
        assert!(o.psi.iter().all(|&x| x > 0.0));
    }

    #[test]
    fn small_amplitude_period() {
        let o = integrate_psi(&six(), 4.0 + 1e-3, 4, &Tolerances::default()).unwrap();
        let lin = std::f64::consts::PI;
        assert!((o.period.unwrap() - lin).abs() <= 0.01 * lin);
    }

    #[test]
    fn rejects_data_outside_well() {
        // well top for N=6: (3·4/2)^(1/1) = 6
        assert!(integrate_psi(&six(), 6.5, 1, &Tolerances::default()).is_err());
        assert!(integrate_psi(&ProblemParams::new(6, 0.0, 2.5).unwrap(), 4.0, 1, &Tolerances::default()).is_err());
    }
}
