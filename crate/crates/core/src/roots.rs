//! Sign-change scanning and bisection.

/// Bisection on a bracket `[a, b]` with `f(a)` and `f(b)` of opposite sign.
/// Evaluation failures (`None`) shrink the bracket towards the side that
/// still evaluates; if both halves fail the current midpoint is returned.
pub fn bisect<F>(mut f: F, mut a: f64, mut b: f64, fa: f64, xtol: f64, max_iter: usize) -> f64
where
    F: FnMut(f64) -> Option<f64>,
{
    let mut fa = fa;
    for _ in 0..max_iter {
        let m = 0.5 * (a + b);
        if (b - a).abs() <= xtol || m == a || m == b {
            return m;
        }
        match f(m) {
            Some(fm) if fm == 0.0 => return m,
            Some(fm) if fm.signum() == fa.signum() => {
                a = m;
                fa = fm;
            }
            Some(_) => b = m,
            None => return m,
        }
    }
    0.5 * (a + b)
}

/// Brackets where consecutive samples change sign. Samples that failed to
/// evaluate break the chain instead of producing spurious brackets.
pub fn sign_changes(xs: &[f64], fs: &[Option<f64>]) -> Vec<(f64, f64, f64)> {
    let mut out = Vec::new();
    for i in 1..xs.len() {
        if let (Some(a), Some(b)) = (fs[i - 1], fs[i]) {
            if a == 0.0 {
                out.push((xs[i - 1], xs[i - 1], a));
            } else if a.signum() != b.signum() && b != 0.0 {
                out.push((xs[i - 1], xs[i], a));
            }
        }
    }
    if let Some(Some(last)) = fs.last() {
        if *last == 0.0 {
            let x = *xs.last().unwrap();
            out.push((x, x, 0.0));
        }
    }
    out
}

pub fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    match n {
        0 => vec![],
        1 => vec![a],
        _ => (0..n)
            .map(|i| a + (b - a) * i as f64 / (n - 1) as f64)
            .collect(),
    }
}

pub fn logspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    linspace(a.ln(), b.ln(), n).into_iter().map(f64::exp).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bisect_finds_sqrt2() {
        let f = |x: f64| Some(x * x - 2.0);
        let r = bisect(f, 0.0, 2.0, -2.0, 1e-14, 200);
        assert!((r - 2f64.sqrt()).abs() < 1e-13);
    }

    #[test]
    fn scan_reports_each_crossing() {
        let xs = linspace(0.1, 10.0, 400);
        let fs: Vec<_> = xs.iter().map(|x| Some(x.sin())).collect();
        assert_eq!(sign_changes(&xs, &fs).len(), 3);
    }

    #[test]
    fn failed_samples_do_not_bracket() {
        let xs = [0.0, 1.0, 2.0];
        let fs = [Some(-1.0), None, Some(1.0)];
        assert!(sign_changes(&xs, &fs).is_empty());
    }

    #[test]
    fn logspace_endpoints() {
        let v = logspace(1e-3, 1e3, 7);
        assert!((v[0] - 1e-3).abs() < 1e-15 && (v[6] - 1e3).abs() < 1e-9);
        assert!((v[3] - 1.0).abs() < 1e-12);
    }
}
