//! Discrete maximum principle on open subsets of the half-space {x₁ > 0}.
//!
//! An instance is a uniform grid with a node mask Ω whose closure stays at
//! least three cells away from x₁ = 0, non-positive Dirichlet data on the
//! discrete boundary ∂Ω and a constant K. The solve is
//! `-Δ_h u - K u/|x|² = 0` in Ω with the 2N+1-point Laplacian; the operator
//! is a symmetric Z-matrix, so Jacobi-preconditioned CG either converges or
//! exposes a loss of definiteness.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::HalfspaceError;
use crate::config::{ties, Tolerances};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MPInstance {
    #[serde(rename = "N")]
    pub dim: usize,
    /// Nodes per axis; node (i₀, i₁, …) sits at x₁ = i₀h and x_j = (i_j - (n-1)/2)h.
    pub n: usize,
    pub h: f64,
    pub mask: Vec<bool>,
    /// Dirichlet data, read on boundary nodes only.
    pub boundary_data: Vec<f64>,
    #[serde(rename = "K")]
    pub k: f64,
    pub a: f64,
    pub b: f64,
    /// K equals N²/4 - a² exactly.
    pub equality: bool,
    /// A discrete function on Ω ∪ ∂Ω, when the instance carries one.
    pub field: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MPCertificate {
    /// Smallest x₁ over Ω ∪ ∂Ω.
    pub placement_margin: f64,
    pub placement_ok: bool,
    pub boundary_max: f64,
    pub boundary_ok: bool,
    pub boundary_witness: Option<Vec<f64>>,
    /// N²/4 - a² - K.
    pub bound2_margin: f64,
    pub bound2_ok: bool,
    /// 2a + 2b + 2 - N.
    pub bound3_margin: f64,
    pub bound3_ok: bool,
    /// Fitted C in u ≤ C|x|^(-b).
    pub growth_constant: Option<f64>,
    /// min over Ω of (K u/|x|² + Δ_h u); non-negative when the inequality holds.
    pub diffineq_margin: Option<f64>,
    pub diffineq_ok: Option<bool>,
    pub diffineq_witness: Option<Vec<f64>>,
    /// Fitted D in u ≤ D x₁|x|^(-b-1); diagnostic only.
    pub d_hat: Option<f64>,
    /// Largest relative change of |x|^(-2) between neighbouring nodes.
    pub max_cell_variation: f64,
    pub equality: bool,
    pub applicable: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub x: Vec<f64>,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MPOutcome {
    pub violations: Vec<Violation>,
    /// Largest solved value on Ω.
    pub max_interior: f64,
    pub iterations: usize,
    pub relative_residual: f64,
    pub certificate: MPCertificate,
}

impl MPInstance {
    pub fn len(&self) -> usize {
        self.n.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn multi(&self, mut k: usize) -> Vec<usize> {
        (0..self.dim)
            .map(|_| {
                let i = k % self.n;
                k /= self.n;
                i
            })
            .collect()
    }

    pub fn coords(&self, k: usize) -> Vec<f64> {
        let c = (self.n as f64 - 1.0) / 2.0;
        self.multi(k)
            .iter()
            .enumerate()
            .map(|(j, &i)| if j == 0 { i as f64 * self.h } else { (i as f64 - c) * self.h })
            .collect()
    }

    fn r2(&self, k: usize) -> f64 {
        self.coords(k).iter().map(|c| c * c).sum()
    }

    /// Grid neighbours of node `k`, or `None` if `k` lies on the grid edge.
    fn neighbours(&self, k: usize) -> Option<Vec<usize>> {
        let m = self.multi(k);
        if m.iter().any(|&i| i == 0 || i + 1 == self.n) {
            return None;
        }
        let mut out = Vec::with_capacity(2 * self.dim);
        let mut stride = 1;
        for _ in 0..self.dim {
            out.push(k - stride);
            out.push(k + stride);
            stride *= self.n;
        }
        Some(out)
    }

    /// Nodes outside Ω with a neighbour in Ω.
    pub fn boundary_nodes(&self) -> Vec<usize> {
        let mut flag = vec![false; self.len()];
        for k in (0..self.len()).filter(|&k| self.mask[k]) {
            if let Some(nb) = self.neighbours(k) {
                for j in nb {
                    if !self.mask[j] {
                        flag[j] = true;
                    }
                }
            }
        }
        (0..self.len()).filter(|&k| flag[k]).collect()
    }

    fn validate(&self) -> Result<(), HalfspaceError> {
        if !(2..=3).contains(&self.dim) {
            return Err(HalfspaceError::Invalid(format!("grid dimension must be 2 or 3 (got {})", self.dim)));
        }
        if self.mask.len() != self.len() || self.boundary_data.len() != self.len() {
            return Err(HalfspaceError::Invalid("mask and data must cover the grid".into()));
        }
        if let Some(f) = &self.field {
            if f.len() != self.len() {
                return Err(HalfspaceError::Invalid("field must cover the grid".into()));
            }
        }
        if !(self.h > 0.0) {
            return Err(HalfspaceError::Invalid("grid spacing must be positive".into()));
        }
        if (0..self.len()).any(|k| self.mask[k] && self.neighbours(k).is_none()) {
            return Err(HalfspaceError::Invalid("Omega touches the grid edge".into()));
        }
        if !self.mask.iter().any(|&m| m) {
            return Err(HalfspaceError::Invalid("Omega is empty".into()));
        }
        Ok(())
    }

    fn laplacian_at(&self, u: &[f64], k: usize) -> f64 {
        let nb = self.neighbours(k).expect("interior node");
        let h2 = self.h * self.h;
        nb.iter().map(|&j| u[j] - u[k]).sum::<f64>() / h2
    }
}

fn max_cell_variation(inst: &MPInstance) -> f64 {
    (0..inst.len())
        .filter(|&k| inst.mask[k])
        .flat_map(|k| {
            let r2 = inst.r2(k);
            inst.neighbours(k)
                .unwrap_or_default()
                .into_iter()
                .map(move |j| (r2 / inst.r2(j) - 1.0).abs())
                .collect::<Vec<_>>()
        })
        .fold(0.0, f64::max)
}

pub fn check_mp_hypotheses(inst: &MPInstance) -> MPCertificate {
    let nf = inst.dim as f64;
    let omega: Vec<usize> = (0..inst.len()).filter(|&k| inst.mask[k]).collect();
    let bnd = inst.boundary_nodes();
    let placement_margin = omega
        .iter()
        .chain(&bnd)
        .map(|&k| inst.coords(k)[0])
        .fold(f64::INFINITY, f64::min);
    let (mut boundary_max, mut boundary_witness) = (f64::NEG_INFINITY, None);
    for &k in &bnd {
        let g = inst.field.as_ref().map_or(inst.boundary_data[k], |f| f[k]);
        if g > boundary_max {
            boundary_max = g;
            boundary_witness = (g > 0.0).then(|| inst.coords(k));
        }
    }
    let bound2_margin = nf * nf / 4.0 - inst.a * inst.a - inst.k;
    let bound3_margin = 2.0 * inst.a + 2.0 * inst.b + 2.0 - nf;

    let (mut growth, mut margin, mut ok, mut witness, mut d_hat) = (None, None, None, None, None);
    if let Some(u) = &inst.field {
        let mut c: f64 = 0.0;
        let mut d: f64 = 0.0;
        let mut worst = f64::INFINITY;
        let mut worst_rel = f64::INFINITY;
        let mut worst_node = None;
        let h2 = inst.h * inst.h;
        for &k in &omega {
            let x = inst.coords(k);
            let r2 = inst.r2(k);
            let r = r2.sqrt();
            c = c.max(u[k] * r.powf(inst.b));
            d = d.max(u[k] / (x[0] * r.powf(-inst.b - 1.0)));
            let lap = inst.laplacian_at(u, k);
            let m = inst.k * u[k] / r2 + lap;
            // scale of the terms entering the stencil
            let scale = 2.0 * nf * u[k].abs() / h2 + inst.k * u[k].abs() / r2
                + inst.neighbours(k).unwrap().iter().map(|&j| u[j].abs()).sum::<f64>() / h2;
            let rel = if scale > 0.0 { m / scale } else { 0.0 };
            worst = worst.min(m);
            if rel < worst_rel {
                worst_rel = rel;
                worst_node = Some(k);
            }
        }
        growth = Some(c);
        d_hat = Some(d);
        margin = Some(worst);
        let pass = worst_rel >= -1e-9;
        ok = Some(pass);
        if !pass {
            witness = worst_node.map(|k| inst.coords(k));
        }
    }
    let placement_ok = placement_margin > 0.0;
    let boundary_ok = boundary_max <= 0.0;
    let bound2_ok = bound2_margin >= 0.0 || ties(inst.k, nf * nf / 4.0 - inst.a * inst.a, 1e-12);
    let bound3_ok = bound3_margin > 0.0;
    let applicable = placement_ok
        && boundary_ok
        && bound2_ok
        && bound3_ok
        && (0.0..nf / 2.0).contains(&inst.a)
        && inst.b >= 0.0
        && inst.k > 0.0
        && ok.unwrap_or(true);
    MPCertificate {
        placement_margin,
        placement_ok,
        boundary_max,
        boundary_ok,
        boundary_witness,
        bound2_margin,
        bound2_ok,
        bound3_margin,
        bound3_ok,
        growth_constant: growth,
        diffineq_margin: margin,
        diffineq_ok: ok,
        diffineq_witness: witness,
        d_hat,
        max_cell_variation: max_cell_variation(inst),
        equality: inst.equality,
        applicable,
    }
}

struct System {
    unknowns: Vec<usize>,
    diag: Vec<f64>,
    /// Neighbour lists in unknown numbering.
    links: Vec<Vec<usize>>,
    rhs: Vec<f64>,
    off: f64,
}

impl System {
    fn build(inst: &MPInstance) -> Self {
        let unknowns: Vec<usize> = (0..inst.len()).filter(|&k| inst.mask[k]).collect();
        let mut id = vec![usize::MAX; inst.len()];
        for (i, &k) in unknowns.iter().enumerate() {
            id[k] = i;
        }
        let h2 = inst.h * inst.h;
        let mut diag = Vec::with_capacity(unknowns.len());
        let mut links = Vec::with_capacity(unknowns.len());
        let mut rhs = Vec::with_capacity(unknowns.len());
        for &k in &unknowns {
            diag.push(2.0 * inst.dim as f64 / h2 - inst.k / inst.r2(k));
            let mut l = Vec::new();
            let mut b = 0.0;
            for j in inst.neighbours(k).unwrap() {
                if inst.mask[j] {
                    l.push(id[j]);
                } else {
                    b += inst.boundary_data[j] / h2;
                }
            }
            links.push(l);
            rhs.push(b);
        }
        Self {
            unknowns,
            diag,
            links,
            rhs,
            off: 1.0 / h2,
        }
    }

    fn apply(&self, x: &[f64], out: &mut [f64]) {
        for i in 0..x.len() {
            out[i] = self.diag[i] * x[i] - self.off * self.links[i].iter().map(|&j| x[j]).sum::<f64>();
        }
    }

    /// Jacobi-preconditioned conjugate gradients from zero.
    fn solve(&self, rtol: f64) -> Result<(Vec<f64>, usize, f64), HalfspaceError> {
        let n = self.rhs.len();
        let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
        let bnorm = dot(&self.rhs, &self.rhs).sqrt();
        let mut x = vec![0.0; n];
        if bnorm == 0.0 {
            return Ok((x, 0, 0.0));
        }
        if self.diag.iter().any(|&d| !(d > 0.0)) {
            return Err(HalfspaceError::Solver("non-positive diagonal".into()));
        }
        let mut r = self.rhs.clone();
        let mut z: Vec<f64> = r.iter().zip(&self.diag).map(|(a, d)| a / d).collect();
        let mut p = z.clone();
        let mut ap = vec![0.0; n];
        let mut rz = dot(&r, &z);
        let max_iter = 20 * n + 100;
        for it in 1..=max_iter {
            self.apply(&p, &mut ap);
            let pap = dot(&p, &ap);
            if !(pap > 0.0) {
                return Err(HalfspaceError::Solver(format!(
                    "operator is not positive definite (p·Ap = {pap:e} at iteration {it})"
                )));
            }
            let alpha = rz / pap;
            for i in 0..n {
                x[i] += alpha * p[i];
                r[i] -= alpha * ap[i];
            }
            let rn = dot(&r, &r).sqrt() / bnorm;
            if rn <= rtol {
                // recompute the true residual to guard against drift
                self.apply(&x, &mut ap);
                let tr = ap
                    .iter()
                    .zip(&self.rhs)
                    .map(|(a, b)| (b - a).powi(2))
                    .sum::<f64>()
                    .sqrt()
                    / bnorm;
                return Ok((x, it, tr));
            }
            for i in 0..n {
                z[i] = r[i] / self.diag[i];
            }
            let rz_new = dot(&r, &z);
            let beta = rz_new / rz;
            rz = rz_new;
            for i in 0..n {
                p[i] = z[i] + beta * p[i];
            }
        }
        Err(HalfspaceError::Solver(format!("no convergence in {max_iter} iterations")))
    }
}

/// Solves the discrete problem with the instance's boundary data and reports
/// interior values above `tol.mp_violation`.
pub fn discrete_mp_test(inst: &MPInstance, tol: &Tolerances) -> Result<MPOutcome, HalfspaceError> {
    inst.validate()?;
    let mut pre = inst.clone();
    pre.field = None;
    let cert = check_mp_hypotheses(&pre);
    if !cert.applicable {
        return Err(HalfspaceError::Invalid(format!(
            "instance does not satisfy the hypotheses: {cert:?}"
        )));
    }
    let sys = System::build(inst);
    let (x, iterations, relative_residual) = sys.solve(tol.cg_rtol)?;
    let mut field = vec![0.0; inst.len()];
    for k in inst.boundary_nodes() {
        field[k] = inst.boundary_data[k];
    }
    let mut violations = Vec::new();
    let mut max_interior = f64::NEG_INFINITY;
    for (i, &k) in sys.unknowns.iter().enumerate() {
        field[k] = x[i];
        max_interior = max_interior.max(x[i]);
        if x[i] > tol.mp_violation {
            violations.push(Violation {
                x: inst.coords(k),
                value: x[i],
            });
        }
    }
    let mut solved = inst.clone();
    solved.field = Some(field);
    Ok(MPOutcome {
        violations,
        max_interior,
        iterations,
        relative_residual,
        certificate: check_mp_hypotheses(&solved),
    })
}

/// A random admissible instance: Ω is a union of one to five boxes and balls
/// kept at least three cells from x₁ = 0 and one cell from the grid edge.
pub fn random_instance<R: Rng>(rng: &mut R, dim: usize) -> MPInstance {
    let n: usize = if dim == 3 { rng.gen_range(16..=24) } else { rng.gen_range(32..=64) };
    let h = 0.25;
    let len = n.pow(dim as u32);
    let nf = dim as f64;
    let mut inst = MPInstance {
        dim,
        n,
        h,
        mask: vec![false; len],
        boundary_data: vec![0.0; len],
        k: 0.0,
        a: 0.0,
        b: 0.0,
        equality: false,
        field: None,
    };
    let lo = |axis: usize| if axis == 0 { 3 } else { 1 };
    let hi = n - 2;
    while !inst.mask.iter().any(|&m| m) {
        let shapes = rng.gen_range(1..=5);
        for _ in 0..shapes {
            if rng.gen_bool(0.5) {
                let bounds: Vec<(usize, usize)> = (0..dim)
                    .map(|ax| {
                        let x = rng.gen_range(lo(ax)..=hi);
                        let y = rng.gen_range(lo(ax)..=hi);
                        (x.min(y), x.max(y))
                    })
                    .collect();
                for k in 0..len {
                    let m = inst.multi(k);
                    if m.iter().zip(&bounds).all(|(&i, &(a, b))| i >= a && i <= b) {
                        inst.mask[k] = true;
                    }
                }
            } else {
                let centre: Vec<f64> = (0..dim).map(|ax| rng.gen_range(lo(ax) as f64..=hi as f64)).collect();
                let rad = rng.gen_range(1.5..(n as f64 / 3.0));
                for k in 0..len {
                    let m = inst.multi(k);
                    let inside = m.iter().enumerate().all(|(ax, &i)| i >= lo(ax) && i <= hi);
                    let d2: f64 = m.iter().zip(&centre).map(|(&i, c)| (i as f64 - c).powi(2)).sum();
                    if inside && d2 < rad * rad {
                        inst.mask[k] = true;
                    }
                }
            }
        }
    }
    for k in inst.boundary_nodes() {
        inst.boundary_data[k] = if rng.gen_bool(0.2) { 0.0 } else { -rng.gen_range(0.0..1.0) };
    }
    inst.a = rng.gen_range(0.0..nf / 2.0);
    inst.b = (nf / 2.0 - 1.0 - inst.a).max(0.0) + rng.gen_range(0.01..1.0);
    let top = nf * nf / 4.0 - inst.a * inst.a;
    if rng.gen_bool(0.1) {
        if rng.gen_bool(0.5) {
            inst.a = 0.0;
            inst.b = nf / 2.0 - 1.0 + rng.gen_range(0.01..1.0);
        }
        inst.k = nf * nf / 4.0 - inst.a * inst.a;
        inst.equality = true;
    } else {
        inst.k = rng.gen_range(0.01..1.0) * top;
    }
    inst
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceSummary {
    pub id: usize,
    pub n: usize,
    pub omega_nodes: usize,
    pub a: f64,
    pub b: f64,
    #[serde(rename = "K")]
    pub k: f64,
    pub equality: bool,
    pub max_interior: Option<f64>,
    pub violations: usize,
    pub iterations: usize,
    pub max_cell_variation: f64,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MPBatchReport {
    #[serde(rename = "N")]
    pub dim: usize,
    pub seed: u64,
    pub instances: usize,
    pub total_violations: usize,
    pub equality_instances: usize,
    pub equality_violations: usize,
    pub solver_failures: usize,
    /// Violation threshold used.
    pub tolerance: f64,
    pub summaries: Vec<InstanceSummary>,
}

/// Generates and solves `count` instances; instance `i` draws from stream `i`
/// of a ChaCha generator seeded with `seed`, so results do not depend on the
/// thread schedule.
pub fn run_mp_batch(dim: usize, count: usize, seed: u64, tol: &Tolerances) -> MPBatchReport {
    let summaries: Vec<InstanceSummary> = (0..count)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i as u64);
            let inst = random_instance(&mut rng, dim);
            let omega_nodes = inst.mask.iter().filter(|&&m| m).count();
            let mut s = InstanceSummary {
                id: i,
                n: inst.n,
                omega_nodes,
                a: inst.a,
                b: inst.b,
                k: inst.k,
                equality: inst.equality,
                max_interior: None,
                violations: 0,
                iterations: 0,
                max_cell_variation: max_cell_variation(&inst),
                error: None,
            };
            match discrete_mp_test(&inst, tol) {
                Ok(o) => {
                    s.max_interior = Some(o.max_interior);
                    s.violations = o.violations.len();
                    s.iterations = o.iterations;
                }
                Err(e) => s.error = Some(e.to_string()),
            }
            s
        })
        .collect();
    let total_violations = summaries.iter().filter(|s| !s.equality).map(|s| s.violations).sum();
    let equality_instances = summaries.iter().filter(|s| s.equality).count();
    let equality_violations = summaries.iter().filter(|s| s.equality).map(|s| s.violations).sum();
    let solver_failures = summaries.iter().filter(|s| s.error.is_some()).count();
    MPBatchReport {
        dim,
        seed,
        instances: count,
        total_violations,
        equality_instances,
        equality_violations,
        solver_failures,
        tolerance: tol.mp_violation,
        summaries,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::halfspace::ComparisonFunction;
    use proptest::prelude::*;

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    fn with_w_field(inst: &MPInstance, sign: f64) -> MPInstance {
        let w = ComparisonFunction::new(inst.a, inst.dim as u32).unwrap();
        let mut out = inst.clone();
        let f: Vec<f64> = (0..inst.len()).map(|k| sign * w.value(&inst.coords(k))).collect();
        for k in inst.boundary_nodes() {
            out.boundary_data[k] = f[k];
        }
        out.field = Some(f);
        out
    }

    #[test]
    fn generated_instances_are_admissible() {
        let mut r = rng(1);
        for _ in 0..20 {
            let inst = random_instance(&mut r, 3);
            inst.validate().unwrap();
            let c = check_mp_hypotheses(&inst);
            assert!(c.applicable, "{c:?}");
            // Ω keeps three cells from x₁ = 0, its discrete boundary two
            assert!(c.placement_margin >= 2.0 * inst.h - 1e-12);
            let omega_min = (0..inst.len())
                .filter(|&k| inst.mask[k])
                .map(|k| inst.coords(k)[0])
                .fold(f64::INFINITY, f64::min);
            assert!(omega_min >= 3.0 * inst.h - 1e-12);
        }
    }

    #[test]
    fn zero_data_gives_zero() {
        let mut inst = random_instance(&mut rng(2), 3);
        inst.boundary_data.iter_mut().for_each(|g| *g = 0.0);
        let o = discrete_mp_test(&inst, &Tolerances::default()).unwrap();
        assert!(o.violations.is_empty());
        assert_eq!(o.max_interior, 0.0);
    }

    #[test]
    fn negated_comparison_function_satisfies_hypotheses() {
        let mut inst = random_instance(&mut rng(3), 3);
        inst.k = 0.9 * (2.25 - inst.a * inst.a);
        inst.equality = false;
        let c = check_mp_hypotheses(&with_w_field(&inst, -1.0));
        assert!(c.applicable, "{c:?}");
        assert!(c.growth_constant.unwrap() <= 0.0);
    }

    #[test]
    fn comparison_function_fails_the_boundary_condition() {
        let inst = random_instance(&mut rng(4), 3);
        let c = check_mp_hypotheses(&with_w_field(&inst, 1.0));
        assert!(!c.boundary_ok && !c.applicable);
        assert!(c.boundary_witness.unwrap()[0] > 0.0);
    }

    #[test]
    fn solved_field_satisfies_the_inequality() {
        let inst = random_instance(&mut rng(5), 3);
        let o = discrete_mp_test(&inst, &Tolerances::default()).unwrap();
        assert_eq!(o.certificate.diffineq_ok, Some(true));
        assert!(o.relative_residual <= 1e-12);
        assert!(o.max_interior <= 1e-10);
    }

    #[test]
    fn two_dimensional_grid() {
        let report = run_mp_batch(2, 10, 11, &Tolerances::default());
        assert_eq!(report.solver_failures, 0);
        assert_eq!(report.total_violations + report.equality_violations, 0);
    }

    #[test]
    fn batch_is_reproducible() {
        let t = Tolerances::default();
        assert_eq!(run_mp_batch(3, 6, 9, &t), run_mp_batch(3, 6, 9, &t));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]
        #[test]
        fn smaller_k_or_omega_creates_no_violation(seed in 0u64..10_000) {
            let t = Tolerances::default();
            let inst = random_instance(&mut rng(seed), 3);
            let base = discrete_mp_test(&inst, &t).unwrap();
            prop_assume!(base.violations.is_empty());
            let mut weaker = inst.clone();
            weaker.k *= 0.5;
            weaker.equality = false;
            prop_assert!(discrete_mp_test(&weaker, &t).unwrap().violations.is_empty());
            // shrink Ω by dropping its nodes with largest x₁
            let mut smaller = inst.clone();
            let cut = (0..inst.len()).filter(|&k| inst.mask[k]).map(|k| inst.coords(k)[0]).fold(0.0, f64::max);
            for k in 0..inst.len() {
                if smaller.mask[k] && inst.coords(k)[0] >= cut {
                    smaller.mask[k] = false;
                }
            }
            if smaller.mask.iter().any(|&m| m) {
                smaller.boundary_data = vec![0.0; inst.len()];
                for k in smaller.boundary_nodes() {
                    smaller.boundary_data[k] = if inst.mask[k] { -0.5 } else { inst.boundary_data[k] };
                }
                prop_assert!(discrete_mp_test(&smaller, &t).unwrap().violations.is_empty());
            }
        }
    }
}
