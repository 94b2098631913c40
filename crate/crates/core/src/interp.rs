//! Piecewise Hermite interpolation on tabulated values and derivatives.

/// Sorted table of `(x, y, y')`, optionally with `y''` for quintic accuracy.
#[derive(Debug, Clone)]
pub struct HermiteTable {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub dy: Vec<f64>,
    pub ddy: Option<Vec<f64>>,
}

impl HermiteTable {
    pub fn cubic(x: Vec<f64>, y: Vec<f64>, dy: Vec<f64>) -> Self {
        assert!(x.len() == y.len() && y.len() == dy.len() && x.len() >= 2);
        Self {
            x,
            y,
            dy,
            ddy: None,
        }
    }

    pub fn quintic(x: Vec<f64>, y: Vec<f64>, dy: Vec<f64>, ddy: Vec<f64>) -> Self {
        assert!(x.len() == ddy.len());
        let mut t = Self::cubic(x, y, dy);
        t.ddy = Some(ddy);
        t
    }

    pub fn lo(&self) -> f64 {
        self.x[0]
    }

    pub fn hi(&self) -> f64 {
        *self.x.last().unwrap()
    }

    fn segment(&self, x: f64) -> usize {
        let n = self.x.len();
        match self.x.partition_point(|&xi| xi <= x) {
            0 => 0,
            k if k >= n => n - 2,
            k => k - 1,
        }
    }

    /// Value, first and second derivative at `x` (clamped to the table).
    pub fn eval3(&self, x: f64) -> (f64, f64, f64) {
        let i = self.segment(x);
        let (x0, x1) = (self.x[i], self.x[i + 1]);
        let h = x1 - x0;
        let s = (x - x0) / h;
        match &self.ddy {
            None => {
                let (y0, y1) = (self.y[i], self.y[i + 1]);
                let (m0, m1) = (self.dy[i] * h, self.dy[i + 1] * h);
                let s2 = s * s;
                let s3 = s2 * s;
                let v = (2.0 * s3 - 3.0 * s2 + 1.0) * y0
                    + (s3 - 2.0 * s2 + s) * m0
                    + (-2.0 * s3 + 3.0 * s2) * y1
                    + (s3 - s2) * m1;
                let d = (6.0 * s2 - 6.0 * s) * y0
                    + (3.0 * s2 - 4.0 * s + 1.0) * m0
                    + (-6.0 * s2 + 6.0 * s) * y1
                    + (3.0 * s2 - 2.0 * s) * m1;
                let dd = (12.0 * s - 6.0) * y0
                    + (6.0 * s - 4.0) * m0
                    + (-12.0 * s + 6.0) * y1
                    + (6.0 * s - 2.0) * m1;
                (v, d / h, dd / (h * h))
            }
            Some(ddy) => {
                let p = [self.y[i], self.dy[i] * h, ddy[i] * h * h];
                let q = [self.y[i + 1], self.dy[i + 1] * h, ddy[i + 1] * h * h];
                let (v, d, dd) = quintic_basis(s, p, q);
                (v, d / h, dd / (h * h))
            }
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.eval3(x).0
    }
}

/// Quintic Hermite on [0,1] with endpoint data (value, slope, curvature).
fn quintic_basis(s: f64, p: [f64; 3], q: [f64; 3]) -> (f64, f64, f64) {
    let s2 = s * s;
    let s3 = s2 * s;
    let s4 = s3 * s;
    let s5 = s4 * s;
    let h0 = 1.0 - 10.0 * s3 + 15.0 * s4 - 6.0 * s5;
    let h1 = s - 6.0 * s3 + 8.0 * s4 - 3.0 * s5;
    let h2 = 0.5 * s2 - 1.5 * s3 + 1.5 * s4 - 0.5 * s5;
    let h3 = 0.5 * s3 - s4 + 0.5 * s5;
    let h4 = -4.0 * s3 + 7.0 * s4 - 3.0 * s5;
    let h5 = 10.0 * s3 - 15.0 * s4 + 6.0 * s5;
    let d0 = -30.0 * s2 + 60.0 * s3 - 30.0 * s4;
    let d1 = 1.0 - 18.0 * s2 + 32.0 * s3 - 15.0 * s4;
    let d2 = s - 4.5 * s2 + 6.0 * s3 - 2.5 * s4;
    let d3 = 1.5 * s2 - 4.0 * s3 + 2.5 * s4;
    let d4 = -12.0 * s2 + 28.0 * s3 - 15.0 * s4;
    let d5 = 30.0 * s2 - 60.0 * s3 + 30.0 * s4;
    let e0 = -60.0 * s + 180.0 * s2 - 120.0 * s3;
    let e1 = -36.0 * s + 96.0 * s2 - 60.0 * s3;
    let e2 = 1.0 - 9.0 * s + 18.0 * s2 - 10.0 * s3;
    let e3 = 3.0 * s - 12.0 * s2 + 10.0 * s3;
    let e4 = -24.0 * s + 84.0 * s2 - 60.0 * s3;
    let e5 = 60.0 * s - 180.0 * s2 + 120.0 * s3;
    (
        h0 * p[0] + h1 * p[1] + h2 * p[2] + h5 * q[0] + h4 * q[1] + h3 * q[2],
        d0 * p[0] + d1 * p[1] + d2 * p[2] + d5 * q[0] + d4 * q[1] + d3 * q[2],
        e0 * p[0] + e1 * p[1] + e2 * p[2] + e5 * q[0] + e4 * q[1] + e3 * q[2],
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cubic_reproduces_cubics() {
        let f = |x: f64| x * x * x - 2.0 * x + 1.0;
        let df = |x: f64| 3.0 * x * x - 2.0;
        let xs: Vec<f64> = (0..5).map(|i| i as f64 * 0.7).collect();
        let t = HermiteTable::cubic(
            xs.clone(),
            xs.iter().map(|&x| f(x)).collect(),
            xs.iter().map(|&x| df(x)).collect(),
        );
        for x in [0.1, 0.95, 2.3] {
            let (v, d, _) = t.eval3(x);
            assert!((v - f(x)).abs() < 1e-12 && (d - df(x)).abs() < 1e-12);
        }
    }

    #[test]
    fn quintic_reproduces_quintics() {
        let f = |x: f64| x.powi(5) - x.powi(3) + 0.5;
        let df = |x: f64| 5.0 * x.powi(4) - 3.0 * x * x;
        let ddf = |x: f64| 20.0 * x.powi(3) - 6.0 * x;
        let xs: Vec<f64> = vec![0.0, 0.4, 1.1, 1.5];
        let t = HermiteTable::quintic(
            xs.clone(),
            xs.iter().map(|&x| f(x)).collect(),
            xs.iter().map(|&x| df(x)).collect(),
            xs.iter().map(|&x| ddf(x)).collect(),
        );
        for x in [0.05, 0.77, 1.3] {
            let (v, d, dd) = t.eval3(x);
            assert!((v - f(x)).abs() < 1e-12, "{v} {}", f(x));
            assert!((d - df(x)).abs() < 1e-11);
            assert!((dd - ddf(x)).abs() < 1e-10);
        }
    }
}
