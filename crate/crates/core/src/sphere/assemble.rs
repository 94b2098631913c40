//! Solutions `u(x) = |x|^(-γ) V(θ)` of `-Δu = |x|^(-ℓ) u^q` built from a
//! zonal sphere profile, with θ the angle between x and the last axis.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{SphereError, SphereProfile};
use crate::interp::HermiteTable;
use crate::regimes::ProblemParams;

#[derive(Debug, Clone)]
pub struct NonradialSolution {
    pub params: ProblemParams,
    pub gamma: f64,
    pub profile: SphereProfile,
    table: HermiteTable,
    /// V'' at the poles, for the on-axis limit of V'/sin θ.
    pole_curvature: (f64, f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResidualSample {
    pub x: Vec<f64>,
    pub r: f64,
    pub theta: f64,
    pub u: f64,
    /// |-Δu - |x|^(-ℓ)u^q| / (|x|^(-ℓ)u^q), with Δu by finite differences.
    pub relative_residual: f64,
}

pub fn assemble_nonradial(profile: &SphereProfile, p: &ProblemParams) -> Result<NonradialSolution, SphereError> {
    if !(p.ell > 0.0 && p.ell < 2.0) {
        return Err(SphereError::Invalid(format!(
            "non-radial assembly needs ell in (0, 2) (got {})",
            p.ell
        )));
    }
    if profile.n != p.n || (profile.q - p.q).abs() > 1e-12 * p.q {
        return Err(SphereError::Invalid("profile was computed for different (N, q)".into()));
    }
    let a = p.a_sphere()?;
    if (profile.a - a).abs() > 1e-9 * a.abs() {
        return Err(SphereError::Invalid(format!(
            "profile coefficient a = {} does not equal gamma(N-2-gamma) = {a}",
            profile.a
        )));
    }
    let ddv = profile.ddv();
    let pole_curvature = (ddv[0], *ddv.last().unwrap());
    let table = HermiteTable::quintic(profile.theta.clone(), profile.v.clone(), profile.dv.clone(), ddv);
    Ok(NonradialSolution {
        params: *p,
        gamma: p.gamma()?,
        profile: profile.clone(),
        table,
        pole_curvature,
    })
}

fn norm(x: &[f64]) -> f64 {
    x.iter().map(|c| c * c).sum::<f64>().sqrt()
}

impl NonradialSolution {
    fn angle(&self, x: &[f64]) -> (f64, f64) {
        let r = norm(x);
        let c = (x[x.len() - 1] / r).clamp(-1.0, 1.0);
        (r, c.acos())
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        let (r, th) = self.angle(x);
        r.powf(-self.gamma) * self.table.eval(th)
    }

    pub fn gradient(&self, x: &[f64]) -> Vec<f64> {
        let (r, th) = self.angle(x);
        let (v, dv, _) = self.table.eval3(th);
        let sin = th.sin();
        // V'(θ)/sin θ, continued onto the axis
        let g = if sin > 1e-8 {
            dv / sin
        } else if th < 1.0 {
            self.pole_curvature.0
        } else {
            -self.pole_curvature.1
        };
        let rg = r.powf(-self.gamma);
        let xn = x[x.len() - 1];
        x.iter()
            .enumerate()
            .map(|(i, &xi)| {
                let e = if i == x.len() - 1 { 1.0 } else { 0.0 };
                // ∇θ = -(e_N/r - x_N x/r³)/sin θ
                -self.gamma * rg * v * xi / (r * r) - rg * g * (e / r - xn * xi / (r * r * r))
            })
            .collect()
    }

    /// Δu by fourth-order central differences along each axis, h = 1e-3|x|.
    pub fn laplacian_fd(&self, x: &[f64]) -> f64 {
        let h = 1e-3 * norm(x);
        let u0 = self.value(x);
        let mut y = x.to_vec();
        let mut sum = 0.0;
        for i in 0..x.len() {
            let mut at = |d: f64| {
                y[i] = x[i] + d;
                let u = self.value(&y);
                y[i] = x[i];
                u
            };
            let (p1, m1, p2, m2) = (at(h), at(-h), at(2.0 * h), at(-2.0 * h));
            sum += (-p2 + 16.0 * p1 - 30.0 * u0 + 16.0 * m1 - m2) / (12.0 * h * h);
        }
        sum
    }

    pub fn relative_residual(&self, x: &[f64]) -> f64 {
        let u = self.value(x);
        let rhs = norm(x).powf(-self.params.ell) * u.powf(self.params.q);
        (-self.laplacian_fd(x) - rhs).abs() / rhs
    }

    /// Samples points at r ∈ {0.5, 1, 2, 10}, off the axis (θ ∈ [0.3, π-0.3]),
    /// `per_radius` per radius, with random directions drawn from `seed`.
    pub fn residual_samples(&self, per_radius: usize, seed: u64) -> Vec<ResidualSample> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = self.params.n as usize;
        let mut out = Vec::new();
        for &r in &[0.5, 1.0, 2.0, 10.0] {
            for _ in 0..per_radius {
                let th = rng.gen_range(0.3..std::f64::consts::PI - 0.3);
                // uniform direction in the first N-1 coordinates
                let mut w: Vec<f64> = (0..n - 1).map(|_| rng.gen_range(-1.0..1.0)).collect();
                let wn = norm(&w).max(1e-12);
                w.iter_mut().for_each(|c| *c *= r * th.sin() / wn);
                w.push(r * th.cos());
                out.push(ResidualSample {
                    r,
                    theta: th,
                    u: self.value(&w),
                    relative_residual: self.relative_residual(&w),
                    x: w,
                });
            }
        }
        out
    }

    /// (max - min) of u on the unit sphere relative to its max; zero exactly
    /// when the profile is constant.
    pub fn symmetry_defect(&self) -> f64 {
        let hi = self.profile.max_v();
        (hi - self.profile.min_v()) / hi
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::Tolerances;
    use crate::radial::{exact_solution, ExactKind};
    use crate::sphere::{constant_solution, find_roots};

    #[test]
    fn constant_profile_gives_the_basic_solution() {
        let p = ProblemParams::new(4, 0.7, 6.0).unwrap();
        let prof = constant_solution(4, p.a_sphere().unwrap(), 6.0).unwrap();
        let sol = assemble_nonradial(&prof, &p).unwrap();
        assert_eq!(sol.symmetry_defect(), 0.0);
        let basic = exact_solution(&ExactKind::Basic, &p, 0.5, 10.0, 7).unwrap();
        for (i, &r) in basic.grid.iter().enumerate() {
            let x = [0.3 * r, -0.5 * r, 0.1 * r, r * (1.0f64 - 0.35).sqrt()];
            let x: Vec<f64> = x.iter().map(|c| c / norm(&x) * r).collect();
            assert!((sol.value(&x) - basic.u[i]).abs() <= 1e-12 * basic.u[i]);
        }
    }

    #[test]
    fn rejects_bad_ell_and_coefficient() {
        let p = ProblemParams::new(4, 2.5, 6.0).unwrap();
        let prof = constant_solution(4, 0.5, 6.0).unwrap();
        assert!(assemble_nonradial(&prof, &p).is_err());
        let p = ProblemParams::new(4, 0.7, 6.0).unwrap();
        assert!(assemble_nonradial(&prof, &p).is_err());
    }

    #[test]
    fn gradient_matches_differences() {
        let tol = Tolerances::default();
        let a = 0.59;
        let ell = crate::regimes::ell_for_sphere_coefficient(4, 6.0, a).unwrap();
        let p = ProblemParams::new(4, ell, 6.0).unwrap();
        let scan = find_roots(4, p.a_sphere().unwrap(), 6.0, None, &tol).unwrap();
        let sol = assemble_nonradial(&scan.branch[0], &p).unwrap();
        assert!(sol.symmetry_defect() > 1e-3);
        let x = [0.4, -0.2, 0.7, 0.5];
        let g = sol.gradient(&x);
        for i in 0..4 {
            let h = 1e-5;
            let mut xp = x;
            let mut xm = x;
            xp[i] += h;
            xm[i] -= h;
            let fd = (sol.value(&xp) - sol.value(&xm)) / (2.0 * h);
            assert!((fd - g[i]).abs() <= 1e-7 * (1.0 + g[i].abs()), "{i} {fd} {}", g[i]);
        }
        for s in sol.residual_samples(5, 7) {
            assert!(s.relative_residual <= 1e-5, "{s:?}");
        }
    }
}
