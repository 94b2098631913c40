//! Desk-scale acceptance suite. Each criterion prints one PASS/FAIL line with
//! its measured figures and wall time; the test fails if any criterion does.
//! Criteria run one after another so their timings do not interfere.

use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use henon_core::halfspace::{
    comparison_identity_check, reflection_scan, run_mp_batch, select_halfspace_exponent, ComparisonFunction, Core,
    RadialField, SamplingSpec, Translated,
};
use henon_core::pipeline::nonradial_pipeline;
use henon_core::radial::psi::PsiConstants;
use henon_core::radial::{
    classify_decay, exact_residual_analytic, exact_residual_fd, exact_solution, fast_decay_seed, from_emden_fowler,
    integrate_psi, shoot_regular, singular_shoot, DecayKind, ExactKind, RadialSolution, ShootOutcome,
};
use henon_core::regimes::{derive_constants, ExtReal, ProblemParams, RegimeTag};
use henon_core::roots::{linspace, logspace};
use henon_core::sphere::{self, assemble_nonradial, trace_branch};
use henon_core::{classify, Nonlinearity, Tolerances};

struct Outcome {
    id: usize,
    pass: bool,
    detail: String,
}

fn criterion(id: usize, name: &str, limit: Duration, f: impl FnOnce() -> (bool, String)) -> Outcome {
    let start = Instant::now();
    let (ok, detail) = f();
    let took = start.elapsed();
    let pass = ok && took < limit;
    println!(
        "{} [{id:>2}] {name}: {detail}; {:.2} s (limit {} s)",
        if pass { "PASS" } else { "FAIL" },
        took.as_secs_f64(),
        limit.as_secs()
    );
    Outcome { id, pass, detail }
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

// --------------------------------------------------------------------- 1

fn constants_table() -> (bool, String) {
    // (N, ℓ, q) → q1, q2, qS, γ, L, worked out by hand
    let inf = f64::INFINITY;
    let table: [(u32, f64, f64, f64, f64, f64, f64, Option<f64>); 12] = [
        (3, 0.0, 7.0, 3.0, 5.0, inf, 1.0 / 3.0, Some((2.0f64 / 9.0).powf(1.0 / 6.0))),
        (4, 0.0, 3.0, 2.0, 3.0, 5.0, 1.0, Some(1.0)),
        (5, 3.0, 0.5, 2.0 / 3.0, 1.0 / 3.0, 3.0, 2.0, Some(0.25)),
        (5, 0.0, 3.0, 5.0 / 3.0, 7.0 / 3.0, 3.0, 1.0, Some(2f64.sqrt())),
        (6, 0.0, 2.0, 1.5, 2.0, 7.0 / 3.0, 2.0, Some(4.0)),
        (4, 1.0, 3.0, 1.5, 2.0, 5.0, 0.5, Some(0.75f64.sqrt())),
        (3, 1.0, 6.0, 2.0, 3.0, inf, 0.2, Some(0.16f64.powf(0.2))),
        (4, 0.0, 6.0, 2.0, 3.0, 5.0, 0.4, Some(0.64f64.powf(0.2))),
        (4, 0.0, 8.0, 2.0, 3.0, 5.0, 2.0 / 7.0, Some((24.0f64 / 49.0).powf(1.0 / 7.0))),
        (5, 0.0, 7.0, 5.0 / 3.0, 7.0 / 3.0, 3.0, 1.0 / 3.0, Some((8.0f64 / 9.0).powf(1.0 / 6.0))),
        // γ(N-2-γ) = 0: L does not exist
        (3, -1.0, 4.0, 4.0, 7.0, inf, 1.0, None),
        (7, 2.5, 0.5, 0.9, 0.8, 2.0, 1.0, Some(1.0 / 16.0)),
    ];
    let mut worst: f64 = 0.0;
    let mut ok = true;
    for (n, ell, q, q1, q2, qs, g, l) in table {
        let c = derive_constants(&ProblemParams::new(n, ell, q).unwrap()).unwrap();
        worst = worst.max(rel(c.q1, q1)).max(rel(c.q2, q2)).max(rel(c.gamma.unwrap(), g));
        match c.q_s {
            ExtReal::PosInf => ok &= qs.is_infinite(),
            ExtReal::Finite(x) => worst = worst.max(rel(x, qs)),
        }
        match (c.l, l) {
            (Some(x), Some(y)) => worst = worst.max(rel(x, y)),
            (None, None) => {}
            _ => ok = false,
        }
    }
    (ok && worst <= 1e-12, format!("12 triples, worst relative error {worst:.1e}"))
}

// --------------------------------------------------------------------- 2

fn exact_residuals() -> (bool, String) {
    let radii = logspace(1e-2, 1e2, 100);
    let mut an: f64 = 0.0;
    let mut fd: f64 = 0.0;
    let mut shape: f64 = 0.0;
    let basic = [(3, 0.0, 7.0), (5, 0.0, 3.0), (4, 1.0, 3.0), (6, -1.0, 4.0)];
    for (n, ell, q) in basic {
        let p = ProblemParams::new(n, ell, q).unwrap();
        let g = (2.0 - ell) / (q - 1.0);
        let l = (g * (n as f64 - 2.0 - g)).powf(1.0 / (q - 1.0));
        let sol = exact_solution(&ExactKind::Basic, &p, 1e-2, 1e2, 100).unwrap();
        for (r, u) in sol.grid.iter().zip(&sol.u) {
            shape = shape.max(rel(*u, l * r.powf(-g)));
        }
        for &r in &radii {
            an = an.max(exact_residual_analytic(&ExactKind::Basic, &p, r));
            fd = fd.max(exact_residual_fd(&ExactKind::Basic, &p, r));
        }
    }
    let p = ProblemParams::new(3, 0.0, 5.0).unwrap();
    let kind = ExactKind::CriticalFast { mu: 1.0 };
    let sol = exact_solution(&kind, &p, 1e-2, 1e2, 100).unwrap();
    for (r, u) in sol.grid.iter().zip(&sol.u) {
        shape = shape.max(rel(*u, (3f64.sqrt() / (1.0 + r * r)).sqrt()));
    }
    for &r in &radii {
        an = an.max(exact_residual_analytic(&kind, &p, r));
        fd = fd.max(exact_residual_fd(&kind, &p, r));
    }
    (
        an <= 1e-10 && fd <= 1e-6 && shape <= 1e-13,
        format!("analytic {an:.1e} (<= 1e-10), finite differences {fd:.1e} (<= 1e-6), closed-form mismatch {shape:.1e}"),
    )
}

// --------------------------------------------------------------------- 3

fn decay_dichotomy() -> (bool, String) {
    let tol = Tolerances::default();
    // N=3, q=7: slow decay, tail limit γ(N-2-γ) = 2/9
    let nl = Nonlinearity::henon(0.0, 7.0);
    let mut slow_ok = true;
    let mut worst_tail: f64 = 0.0;
    for &alpha in &logspace(0.1, 10.0, 8) {
        let shot = shoot_regular(&nl, 3, alpha, 1e20, &tol).unwrap();
        let rep = classify_decay(&shot.solution, 0.25).unwrap();
        slow_ok &= shot.outcome == ShootOutcome::Reached && rep.kind == DecayKind::Slow;
        worst_tail = worst_tail.max(rel(rep.tail_limit, 2.0 / 9.0));
    }

    // N=5, q=2: the fast family u ~ λ r^(-3), followed inwards from r = 1e6;
    // the classification only sees r ≤ 1e4
    let nl = Nonlinearity::henon(0.0, 2.0);
    let p = ProblemParams::new(5, 0.0, 2.0).unwrap();
    let mut fast_ok = true;
    let mut worst_exp: f64 = 0.0;
    let lambdas = [0.1, 0.3, 1.0, 3.0, 10.0];
    for &lambda in &lambdas {
        let (t0, v0) = fast_decay_seed(&p, lambda, 1e6).unwrap();
        let shot = singular_shoot(&nl, 5, t0, v0, (1e-3f64).ln(), t0, 1e3, &tol).unwrap();
        let full = from_emden_fowler(&shot.trajectory, &nl);
        let keep: Vec<usize> = (0..full.grid.len()).filter(|&i| full.grid[i] <= 1e4 * (1.0 + 1e-12)).collect();
        let sol = RadialSolution {
            grid: keep.iter().map(|&i| full.grid[i]).collect(),
            u: keep.iter().map(|&i| full.u[i]).collect(),
            du: keep.iter().map(|&i| full.du[i]).collect(),
            ..full
        };
        let positive = shot.escape.backward.is_none() && sol.u.iter().all(|&u| u > 0.0);
        let rep = classify_decay(&sol, 0.25).unwrap();
        fast_ok &= positive && rep.kind == DecayKind::Fast;
        worst_exp = worst_exp.max(rel(rep.fitted_exponent, 3.0));
    }
    let crossings = logspace(0.1, 10.0, 8)
        .iter()
        .filter(|&&a| {
            matches!(
                shoot_regular(&nl, 5, a, 1e4, &tol).unwrap().outcome,
                ShootOutcome::Crossing { .. }
            )
        })
        .count();
    (
        slow_ok && worst_tail <= 0.01 && fast_ok && worst_exp <= 0.05,
        format!(
            "N=3 q=7: 8/8 slow = {slow_ok}, worst tail-limit error {worst_tail:.2e}; \
             N=5 q=2: {} fast trajectories = {fast_ok}, worst exponent error {worst_exp:.2e}, \
             regular solutions crossing zero before 1e4: {crossings}/8",
            lambdas.len()
        ),
    )
}

// --------------------------------------------------------------------- 4

fn psi_orbit() -> (bool, String) {
    let tol = Tolerances::default();
    let p = ProblemParams::new(6, 0.0, 2.0).unwrap();
    let c = PsiConstants::new(&p).unwrap();
    // κ = 2, p = 2: Ψ₀ = 4, ω² = κ²(p-1) = 4, period π
    let lin = std::f64::consts::PI;
    let big = integrate_psi(&p, 0.5 * c.psi0, 10, &tol).unwrap();
    let small = integrate_psi(&p, c.psi0 * (1.0 + 1e-3), 10, &tol).unwrap();
    let drift = big.energy_drift.max(small.energy_drift);
    let period_err = rel(small.period.unwrap(), lin);
    let periods_run = big.extrema.len() / 2;
    (
        (c.psi0 - 4.0).abs() < 1e-14 && drift <= 1e-6 && period_err <= 0.01 && periods_run >= 10,
        format!(
            "Psi0 = {}, energy drift {drift:.1e} over {periods_run} periods, small-amplitude period error {period_err:.1e}",
            c.psi0
        ),
    )
}

// --------------------------------------------------------------------- 5

fn sphere_bifurcation() -> (bool, String) {
    let tol = Tolerances::default();
    let mut ok = true;
    let mut parts = Vec::new();
    for (n, q, a_star) in [(4u32, 6.0, 3.0 / 5.0), (4, 8.0, 3.0 / 7.0), (5, 7.0, 4.0 / 6.0)] {
        let w = trace_branch(n, q, a_star - 0.1, a_star + 0.02, 13, &tol).unwrap();
        let onset_err = w.onset.map_or(f64::INFINITY, |o| (o - a_star).abs());
        let worst_res = w.branch.iter().map(|b| b.profile.residual).fold(0.0, f64::max);
        let mut worst_const: f64 = 0.0;
        for a in [a_star, 0.9 * a_star, 0.5 * a_star, 1.5 * a_star] {
            let vc = a.powf(1.0 / (q - 1.0));
            worst_const = worst_const.max(sphere::mismatch(n, a, q, vc, &tol).unwrap().mismatch.abs());
        }
        ok &= onset_err <= 1e-3 && !w.branch.is_empty() && worst_res <= 1e-6 && worst_const <= 1e-10;
        parts.push(format!(
            "({n},{q}) onset error {onset_err:.1e}, {} branch profiles with residual <= {worst_res:.1e}, constant mismatch {worst_const:.1e}",
            w.branch.len()
        ));
    }
    (ok, parts.join("; "))
}

// --------------------------------------------------------------------- 6

fn nonradial_assembly() -> (bool, String) {
    let tol = Tolerances::default();
    let rep = nonradial_pipeline(4, 6.0, None, 6, &tol).unwrap();
    let range = rep.window.henon_ell_range.unwrap();
    let in_window = range.lo < rep.params.ell && rep.params.ell <= range.hi.value();
    // defect recomputed from u along a meridian of the unit sphere
    let sol = assemble_nonradial(&rep.profile, &rep.params).unwrap();
    let us: Vec<f64> = linspace(0.0, std::f64::consts::PI, 721)
        .iter()
        .map(|&t| sol.value(&[t.sin(), 0.0, 0.0, t.cos()]))
        .collect();
    let hi = us.iter().cloned().fold(f64::MIN, f64::max);
    let lo = us.iter().cloned().fold(f64::MAX, f64::min);
    let defect = (hi - lo) / hi;
    let off_axis = rep.samples.iter().all(|s| s.theta >= 0.3 && s.theta <= std::f64::consts::PI - 0.3);
    (
        in_window && off_axis && rep.samples.len() == 20 && rep.pde_residual_max <= 1e-5 && defect >= 1e-3,
        format!(
            "ell = {:.4} in empirical window ({:.4}, {:.4}] = {in_window}, eps0 = {:.4}, \
             max PDE residual {:.1e} at {} points, symmetry defect {defect:.3} at r=1",
            rep.params.ell,
            range.lo,
            range.hi.value(),
            rep.epsilon0_empirical,
            rep.pde_residual_max,
            rep.samples.len()
        ),
    )
}

// --------------------------------------------------------------------- 7

fn comparison_identity() -> (bool, String) {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut an: f64 = 0.0;
    let mut fd: f64 = 0.0;
    let mut hand: f64 = 0.0;
    for _ in 0..20 {
        let n: u32 = rng.gen_range(2..=8);
        let a = rng.gen_range(0.0..=n as f64 / 2.0);
        let pts: Vec<Vec<f64>> = (0..1000)
            .map(|_| {
                let mut x: Vec<f64> = (0..n).map(|_| rng.gen_range(-5.0..5.0)).collect();
                x[0] = rng.gen_range(0.05..5.0);
                x
            })
            .collect();
        let r = comparison_identity_check(a, n, &pts).unwrap();
        an = an.max(r.analytic);
        fd = fd.max(r.finite_difference);
        // Δ(x₁ r^β) = β(β+N) x₁ r^(β-2) with β = a - N/2
        let w = ComparisonFunction::new(a, n).unwrap();
        let b = a - n as f64 / 2.0;
        for x in pts.iter().take(50) {
            let r2: f64 = x.iter().map(|c| c * c).sum();
            let lap = b * (b + n as f64) * x[0] * r2.powf((b - 2.0) / 2.0);
            hand = hand.max((w.laplacian(x) - lap).abs() / (w.value(x) / r2));
        }
    }
    (
        an <= 1e-12 && fd <= 1e-6 && hand <= 1e-12,
        format!("20 pairs x 1000 points: analytic {an:.1e}, finite differences {fd:.1e}, hand formula {hand:.1e}"),
    )
}

// --------------------------------------------------------------------- 8

fn discrete_mp() -> (bool, String) {
    let tol = Tolerances::default();
    let rep = run_mp_batch(3, 200, 20_240_501, &tol);
    (
        rep.instances == 200 && rep.total_violations == 0 && rep.equality_violations == 0 && rep.solver_failures == 0,
        format!(
            "{} instances ({} at equality K = N^2/4 - a^2), violations above {:.0e}: {} (+{} at equality), solver failures {}",
            rep.instances,
            rep.equality_instances,
            rep.tolerance,
            rep.total_violations,
            rep.equality_violations,
            rep.solver_failures
        ),
    )
}

// --------------------------------------------------------------------- 9

fn exponent_selection() -> (bool, String) {
    let mut ok = true;
    let mut parts = Vec::new();
    for n in [3u32, 4, 5] {
        let nf = n as f64;
        let mut count = 0;
        let mut min_a1 = f64::INFINITY;
        let mut min_a2 = f64::INFINITY;
        for &ell in &linspace(-2.0, 4.0, 50) {
            for &q in &linspace(0.05, 12.0, 50) {
                let Ok(p) = ProblemParams::new(n, ell, q) else { continue };
                if !matches!(classify(&p).tag, RegimeTag::CaseI | RegimeTag::CaseII) {
                    continue;
                }
                count += 1;
                match select_halfspace_exponent(&p) {
                    Ok(s) => {
                        // recheck both inequalities from a alone
                        let g = (2.0 - ell) / (q - 1.0);
                        let m1 = 2.0 * s.a + 2.0 * g + 2.0 - nf;
                        let m2 = nf * nf / 4.0 - s.a * s.a - q.max(1.0) * g * (nf - 2.0 - g);
                        ok &= m1 > 0.0 && m2 > 0.0 && (0.0..nf / 2.0).contains(&s.a);
                        min_a1 = min_a1.min(m1);
                        min_a2 = min_a2.min(m2);
                    }
                    Err(_) => ok = false,
                }
            }
        }
        ok &= count > 0;
        parts.push(format!("N={n}: {count} points, min margins {min_a1:.2e} / {min_a2:.2e}"));
    }
    (ok, parts.join("; "))
}

// -------------------------------------------------------------------- 10

fn reflection() -> (bool, String) {
    let p = ProblemParams::new(3, 0.0, 7.0).unwrap();
    let sol = exact_solution(&ExactKind::Basic, &p, 1e-3, 1e3, 400).unwrap();
    let field = RadialField::from_solution(&sol, Core::Singular).unwrap();
    let lambdas = linspace(-1.0, 2.0, 31);
    let spec = SamplingSpec::default();
    let centred = reflection_scan(&field, 0, &lambdas, &spec).unwrap();
    let moved = Translated {
        inner: field,
        shift: vec![1.0, 0.0, 0.0],
    };
    let shifted = reflection_scan(&moved, 0, &lambdas, &spec).unwrap();
    let cell = centred.resolution;
    let l0 = centred.lambda_plus.unwrap_or(f64::NAN);
    let l1 = shifted.lambda_plus.unwrap_or(f64::NAN);
    (
        (l0 - 0.0).abs() <= cell * (1.0 + 1e-9) && (l1 - 1.0).abs() <= cell * (1.0 + 1e-9),
        format!("basic: lambda+ = {l0}, translated by 1: lambda+ = {l1}, grid cell {cell}"),
    )
}

#[test]
fn acceptance_criteria() {
    let s = Duration::from_secs;
    let results = [
        criterion(1, "constants table", s(1), constants_table),
        criterion(2, "exact-solution residuals", s(1), exact_residuals),
        criterion(3, "decay dichotomy", s(30), decay_dichotomy),
        criterion(4, "critical Psi orbit", s(5), psi_orbit),
        criterion(5, "sphere bifurcation", s(60), sphere_bifurcation),
        criterion(6, "non-radial assembly", s(30), nonradial_assembly),
        criterion(7, "comparison identity", s(5), comparison_identity),
        criterion(8, "discrete maximum principle", s(120), discrete_mp),
        criterion(9, "exponent selection", s(5), exponent_selection),
        criterion(10, "reflection scan", s(10), reflection),
    ];
    let failed: Vec<String> = results
        .iter()
        .filter(|r| !r.pass)
        .map(|r| format!("[{}] {}", r.id, r.detail))
        .collect();
    assert!(failed.is_empty(), "failed criteria:\n{}", failed.join("\n"));
}
