//! Moving-plane reflection scans.
//!
//! For the plane T^λ = {x_k = λ}, the cap Σ(λ) = {x_k > λ} and the reflection
//! x^λ (x_k ↦ 2λ - x_k), the scan samples w^λ(x) = u(x) - u(x^λ) over Σ(λ)
//! and reports the first grid λ from which on w^λ stays non-positive.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::HalfspaceError;
use crate::interp::HermiteTable;
use crate::radial::io::RadialSamples;
use crate::radial::RadialSolution;
use crate::sphere::NonradialSolution;

/// A function on ℝ^N that can be sampled by the scan. `None` marks points
/// where the function is not available (outside a table, at a singularity).
pub trait Field: Sync {
    fn dim(&self) -> usize;
    fn value(&self, x: &[f64]) -> Option<f64>;
    fn gradient(&self, x: &[f64]) -> Option<Vec<f64>>;
    /// A point where the function blows up; its mirror image is excluded from Σ(λ).
    fn singular_point(&self) -> Option<Vec<f64>> {
        None
    }
}

/// How a tabulated radial profile is continued below its first radius.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Core {
    /// Regular centre: use the first tabulated value.
    Clamp,
    /// Singular centre: not available.
    Singular,
}

/// `u(x) = U(|x - centre|)` from tabulated `(r, U, U')`.
#[derive(Debug, Clone)]
pub struct RadialField {
    pub dim: usize,
    pub centre: Vec<f64>,
    pub core: Core,
    table: HermiteTable,
}

impl RadialField {
    pub fn new(r: Vec<f64>, u: Vec<f64>, du: Vec<f64>, dim: usize, core: Core) -> Result<Self, HalfspaceError> {
        if r.len() < 2 || r.len() != u.len() || u.len() != du.len() {
            return Err(HalfspaceError::Invalid("radial table needs matching columns and two rows".into()));
        }
        if r.windows(2).any(|w| !(w[1] > w[0])) || !(r[0] > 0.0) {
            return Err(HalfspaceError::Invalid("radii must be positive and increasing".into()));
        }
        Ok(Self {
            dim,
            centre: vec![0.0; dim],
            core,
            table: HermiteTable::cubic(r, u, du),
        })
    }

    pub fn from_samples(s: &RadialSamples, dim: usize, core: Core) -> Result<Self, HalfspaceError> {
        Self::new(s.r.clone(), s.u.clone(), s.du.clone(), dim, core)
    }

    pub fn from_solution(sol: &RadialSolution, core: Core) -> Result<Self, HalfspaceError> {
        Self::new(sol.grid.clone(), sol.u.clone(), sol.du.clone(), sol.params.n as usize, core)
    }

    fn radius(&self, x: &[f64]) -> f64 {
        x.iter().zip(&self.centre).map(|(a, c)| (a - c).powi(2)).sum::<f64>().sqrt()
    }

    fn profile(&self, r: f64) -> Option<(f64, f64)> {
        if r > self.table.hi() {
            return None;
        }
        if r < self.table.lo() {
            return match self.core {
                Core::Clamp => Some((self.table.y[0], 0.0)),
                Core::Singular => None,
            };
        }
        let (v, d, _) = self.table.eval3(r);
        Some((v, d))
    }
}

impl Field for RadialField {
    fn dim(&self) -> usize {
        self.dim
    }

    fn value(&self, x: &[f64]) -> Option<f64> {
        self.profile(self.radius(x)).map(|p| p.0)
    }

    fn gradient(&self, x: &[f64]) -> Option<Vec<f64>> {
        let r = self.radius(x);
        let (_, d) = self.profile(r)?;
        if r == 0.0 {
            return Some(vec![0.0; self.dim]);
        }
        Some(x.iter().zip(&self.centre).map(|(a, c)| d * (a - c) / r).collect())
    }

    fn singular_point(&self) -> Option<Vec<f64>> {
        (self.core == Core::Singular).then(|| self.centre.clone())
    }
}

/// `x ↦ u(x - shift)`.
#[derive(Debug, Clone)]
pub struct Translated<F> {
    pub inner: F,
    pub shift: Vec<f64>,
}

impl<F: Field> Translated<F> {
    fn pull(&self, x: &[f64]) -> Vec<f64> {
        x.iter().zip(&self.shift).map(|(a, s)| a - s).collect()
    }
}

impl<F: Field> Field for Translated<F> {
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn value(&self, x: &[f64]) -> Option<f64> {
        self.inner.value(&self.pull(x))
    }

    fn gradient(&self, x: &[f64]) -> Option<Vec<f64>> {
        self.inner.gradient(&self.pull(x))
    }

    fn singular_point(&self) -> Option<Vec<f64>> {
        self.inner
            .singular_point()
            .map(|z| z.iter().zip(&self.shift).map(|(a, s)| a + s).collect())
    }
}

impl Field for NonradialSolution {
    fn dim(&self) -> usize {
        self.params.n as usize
    }

    fn value(&self, x: &[f64]) -> Option<f64> {
        (x.iter().any(|&c| c != 0.0)).then(|| NonradialSolution::value(self, x))
    }

    fn gradient(&self, x: &[f64]) -> Option<Vec<f64>> {
        (x.iter().any(|&c| c != 0.0)).then(|| NonradialSolution::gradient(self, x))
    }

    fn singular_point(&self) -> Option<Vec<f64>> {
        Some(vec![0.0; self.params.n as usize])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SamplingSpec {
    /// Extent of the sampled cap, both along the axis and across it.
    pub radius: f64,
    /// Number of distances from the plane, clustered towards it.
    pub normal: usize,
    /// Number of transverse offsets (drawn once, shared by every λ).
    pub transverse: usize,
    /// Points closer than this to the mirrored singularity are skipped.
    pub exclusion: f64,
    /// Per-point threshold: w^λ counts as positive when it exceeds
    /// `rel_tol·(|u(x)| + |u(x^λ)|)`.
    pub rel_tol: f64,
    pub seed: u64,
}

impl Default for SamplingSpec {
    fn default() -> Self {
        Self {
            radius: 4.0,
            normal: 40,
            transverse: 120,
            exclusion: 0.05,
            rel_tol: 1e-9,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReflectionScan {
    /// Coordinate index of the reflection direction (0-based).
    pub axis: usize,
    pub lambda_grid: Vec<f64>,
    /// sup of w^λ over the sampled Σ(λ); `None` when nothing was sampled.
    pub sup_w_lambda: Vec<Option<f64>>,
    /// Whether some sample had w^λ above the per-point threshold.
    pub positive: Vec<bool>,
    /// max of ∂w^λ/∂x_k = 2∂_k u on sampled points of T^λ.
    pub hopf_max: Vec<Option<f64>>,
    pub lambda_plus: Option<f64>,
    /// Grid spacing: the uncertainty of `lambda_plus`.
    pub resolution: f64,
    pub samples_per_lambda: usize,
}

fn transverse_offsets(dim: usize, spec: &SamplingSpec) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut out = vec![vec![0.0; dim - 1]];
    // a few points on each transverse axis, then uniform in the ball
    for j in 0..dim - 1 {
        for s in [0.25, 1.0] {
            let mut v = vec![0.0; dim - 1];
            v[j] = s * spec.radius;
            out.push(v);
        }
    }
    while out.len() < spec.transverse.max(out.len()) {
        let v: Vec<f64> = (0..dim - 1).map(|_| rng.gen_range(-1.0..1.0)).collect();
        if v.iter().map(|c| c * c).sum::<f64>() <= 1.0 {
            out.push(v.into_iter().map(|c| c * spec.radius).collect());
        }
    }
    out
}

fn embed(axis: usize, along: f64, t: &[f64]) -> Vec<f64> {
    let mut x = Vec::with_capacity(t.len() + 1);
    x.extend_from_slice(&t[..axis]);
    x.push(along);
    x.extend_from_slice(&t[axis..]);
    x
}

pub fn reflection_scan<F: Field>(
    u: &F,
    axis: usize,
    lambdas: &[f64],
    spec: &SamplingSpec,
) -> Result<ReflectionScan, HalfspaceError> {
    let dim = u.dim();
    if axis >= dim {
        return Err(HalfspaceError::Invalid(format!("axis {axis} out of range for N = {dim}")));
    }
    if lambdas.windows(2).any(|w| !(w[1] > w[0])) || lambdas.is_empty() {
        return Err(HalfspaceError::Invalid("lambda grid must be non-empty and increasing".into()));
    }
    let offsets = transverse_offsets(dim, spec);
    let dists: Vec<f64> = (1..=spec.normal)
        .map(|j| spec.radius * (j as f64 / spec.normal as f64).powi(2))
        .collect();
    let sing = u.singular_point();

    let per: Vec<(Option<f64>, bool, Option<f64>)> = lambdas
        .par_iter()
        .map(|&lam| {
            let mirror_sing = sing.as_ref().map(|z| {
                let mut m = z.clone();
                m[axis] = 2.0 * lam - z[axis];
                m
            });
            let mut sup: Option<f64> = None;
            let mut positive = false;
            for t in &offsets {
                for &d in &dists {
                    let x = embed(axis, lam + d, t);
                    if let Some(m) = &mirror_sing {
                        let dd: f64 = x.iter().zip(m).map(|(a, b)| (a - b).powi(2)).sum();
                        if dd.sqrt() < spec.exclusion {
                            continue;
                        }
                    }
                    let mut xr = x.clone();
                    xr[axis] = 2.0 * lam - x[axis];
                    let (Some(a), Some(b)) = (u.value(&x), u.value(&xr)) else {
                        continue;
                    };
                    let w = a - b;
                    if !w.is_finite() {
                        continue;
                    }
                    sup = Some(sup.map_or(w, |s: f64| s.max(w)));
                    if w > spec.rel_tol * (a.abs() + b.abs()) {
                        positive = true;
                    }
                }
            }
            let hopf = offsets
                .iter()
                .filter_map(|t| u.gradient(&embed(axis, lam, t)).map(|g| 2.0 * g[axis]))
                .filter(|v| v.is_finite())
                .fold(None, |m: Option<f64>, v| Some(m.map_or(v, |m| m.max(v))));
            (sup, positive, hopf)
        })
        .collect();

    let positive: Vec<bool> = per.iter().map(|p| p.1 || p.0.is_none()).collect();
    // smallest grid λ from which on every scanned μ is non-positive
    let mut lambda_plus = None;
    for i in (0..lambdas.len()).rev() {
        if positive[i] {
            break;
        }
        lambda_plus = Some(lambdas[i]);
    }
    let resolution = if lambdas.len() > 1 {
        (lambdas[lambdas.len() - 1] - lambdas[0]) / (lambdas.len() - 1) as f64
    } else {
        0.0
    };
    Ok(ReflectionScan {
        axis,
        lambda_grid: lambdas.to_vec(),
        sup_w_lambda: per.iter().map(|p| p.0).collect(),
        positive: per.iter().map(|p| p.1).collect(),
        hopf_max: per.iter().map(|p| p.2).collect(),
        lambda_plus,
        resolution,
        samples_per_lambda: offsets.len() * dists.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::radial::{exact_solution, ExactKind};
    use crate::regimes::ProblemParams;
    use crate::roots::linspace;

    fn basic() -> RadialField {
        let p = ProblemParams::new(3, 0.0, 7.0).unwrap();
        let sol = exact_solution(&ExactKind::Basic, &p, 1e-3, 1e3, 2000).unwrap();
        RadialField::from_solution(&sol, Core::Singular).unwrap()
    }

    #[test]
    fn basic_solution_stops_at_the_origin() {
        let lam = linspace(-2.0, 2.0, 41);
        let s = reflection_scan(&basic(), 0, &lam, &SamplingSpec::default()).unwrap();
        let lp = s.lambda_plus.unwrap();
        assert!(lp.abs() <= s.resolution + 1e-12, "{lp}");
        for (i, &l) in lam.iter().enumerate() {
            if l > 1e-9 {
                assert!(s.sup_w_lambda[i].unwrap() < 0.0);
                assert!(s.hopf_max[i].unwrap() < 0.0);
            }
        }
    }

    #[test]
    fn translation_shifts_lambda_plus() {
        let lam = linspace(-2.0, 3.0, 51);
        let t = Translated {
            inner: basic(),
            shift: vec![1.0, 0.0, 0.0],
        };
        let s = reflection_scan(&t, 0, &lam, &SamplingSpec::default()).unwrap();
        assert!((s.lambda_plus.unwrap() - 1.0).abs() <= s.resolution + 1e-12);
    }

    #[test]
    fn transverse_axes_also_stop_at_the_centre() {
        let lam = linspace(-1.0, 1.0, 21);
        let t = Translated {
            inner: basic(),
            shift: vec![0.0, -0.5, 0.0],
        };
        let s = reflection_scan(&t, 1, &lam, &SamplingSpec::default()).unwrap();
        assert!((s.lambda_plus.unwrap() + 0.5).abs() <= s.resolution + 1e-12);
    }

    #[test]
    fn rejects_bad_axis() {
        assert!(reflection_scan(&basic(), 3, &[0.0, 1.0], &SamplingSpec::default()).is_err());
    }
}
