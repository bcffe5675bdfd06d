//! Piecewise cubic Hermite interpolation with Fritsch–Carlson limiting.
//!
//! The solvers store samples together with exact derivatives, so the
//! interpolants here take node slopes as input and only limit them when the
//! cubic would otherwise overshoot the data on an interval.

/// Index `i` such that `xs[i] <= x < xs[i + 1]`, clamped to `[0, len - 2]`.
pub fn locate(xs: &[f64], x: f64) -> usize {
    debug_assert!(xs.len() >= 2);
    let n = xs.len();
    if x <= xs[0] {
        return 0;
    }
    if x >= xs[n - 1] {
        return n - 2;
    }
    // partition_point returns the first index with xs[i] > x
    let idx = xs.partition_point(|&v| v <= x);
    idx.saturating_sub(1).min(n - 2)
}

/// Limits the slopes of a single interval so the cubic stays monotone.
fn limit_slopes(dy: f64, h: f64, m0: f64, m1: f64) -> (f64, f64) {
    let delta = dy / h;
    if delta == 0.0 {
        return (0.0, 0.0);
    }
    let mut a = m0 / delta;
    let mut b = m1 / delta;
    if a < 0.0 {
        a = 0.0;
    }
    if b < 0.0 {
        b = 0.0;
    }
    let s = a * a + b * b;
    if s > 9.0 {
        let tau = 3.0 / s.sqrt();
        a *= tau;
        b *= tau;
    }
    (a * delta, b * delta)
}

fn basis(x0: f64, x1: f64, x: f64) -> (f64, f64, f64, f64, f64) {
    let h = x1 - x0;
    let s = (x - x0) / h;
    let s2 = s * s;
    let s3 = s2 * s;
    let h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
    let h10 = s3 - 2.0 * s2 + s;
    let h01 = -2.0 * s3 + 3.0 * s2;
    let h11 = s3 - s2;
    (h, h00, h10, h01, h11)
}

/// Cubic Hermite value on `[x0, x1]`.
pub fn hermite(x0: f64, x1: f64, y0: f64, y1: f64, m0: f64, m1: f64, x: f64) -> f64 {
    let (h, h00, h10, h01, h11) = basis(x0, x1, x);
    h00 * y0 + h10 * h * m0 + h01 * y1 + h11 * h * m1
}

/// Cubic Hermite derivative on `[x0, x1]`.
pub fn hermite_deriv(x0: f64, x1: f64, y0: f64, y1: f64, m0: f64, m1: f64, x: f64) -> f64 {
    let h = x1 - x0;
    let s = (x - x0) / h;
    let s2 = s * s;
    let d00 = (6.0 * s2 - 6.0 * s) / h;
    let d10 = 3.0 * s2 - 4.0 * s + 1.0;
    let d01 = (-6.0 * s2 + 6.0 * s) / h;
    let d11 = 3.0 * s2 - 2.0 * s;
    d00 * y0 + d10 * m0 + d01 * y1 + d11 * m1
}

/// Shape-preserving cubic on one interval: node slopes are limited so the
/// interpolant is monotone whenever the data are.
pub fn monotone_hermite(x0: f64, x1: f64, y0: f64, y1: f64, m0: f64, m1: f64, x: f64) -> f64 {
    let (m0, m1) = limit_slopes(y1 - y0, x1 - x0, m0, m1);
    hermite(x0, x1, y0, y1, m0, m1, x)
}

/// Derivative of [`monotone_hermite`].
pub fn monotone_hermite_deriv(
    x0: f64,
    x1: f64,
    y0: f64,
    y1: f64,
    m0: f64,
    m1: f64,
    x: f64,
) -> f64 {
    let (m0, m1) = limit_slopes(y1 - y0, x1 - x0, m0, m1);
    hermite_deriv(x0, x1, y0, y1, m0, m1, x)
}

/// Monotone piecewise cubic through tabulated data.
///
/// Node slopes are either supplied (exact derivatives) or estimated with the
/// Fritsch–Butland harmonic mean, which is itself shape preserving.
#[derive(Clone, Debug)]
pub struct MonotoneCubic {
    xs: Vec<f64>,
    ys: Vec<f64>,
    slopes: Vec<f64>,
}

impl MonotoneCubic {
    pub fn with_slopes(xs: Vec<f64>, ys: Vec<f64>, slopes: Vec<f64>) -> Self {
        assert!(xs.len() >= 2 && xs.len() == ys.len() && ys.len() == slopes.len());
        Self { xs, ys, slopes }
    }

    pub fn new(xs: Vec<f64>, ys: Vec<f64>) -> Self {
        let slopes = pchip_slopes(&xs, &ys);
        Self::with_slopes(xs, ys, slopes)
    }

    pub fn xs(&self) -> &[f64] {
        &self.xs
    }

    pub fn ys(&self) -> &[f64] {
        &self.ys
    }

    /// Evaluates with constant extrapolation outside the node range.
    pub fn eval(&self, x: f64) -> f64 {
        let n = self.xs.len();
        if x <= self.xs[0] {
            return self.ys[0];
        }
        if x >= self.xs[n - 1] {
            return self.ys[n - 1];
        }
        let i = locate(&self.xs, x);
        monotone_hermite(
            self.xs[i],
            self.xs[i + 1],
            self.ys[i],
            self.ys[i + 1],
            self.slopes[i],
            self.slopes[i + 1],
            x,
        )
    }

    pub fn deriv(&self, x: f64) -> f64 {
        let i = locate(&self.xs, x);
        monotone_hermite_deriv(
            self.xs[i],
            self.xs[i + 1],
            self.ys[i],
            self.ys[i + 1],
            self.slopes[i],
            self.slopes[i + 1],
            x,
        )
    }
}

/// Fritsch–Butland slope estimates for monotone interpolation.
pub fn pchip_slopes(xs: &[f64], ys: &[f64]) -> Vec<f64> {
    let n = xs.len();
    let mut d = vec![0.0; n];
    if n < 2 {
        return d;
    }
    let h: Vec<f64> = xs.windows(2).map(|w| w[1] - w[0]).collect();
    let delta: Vec<f64> = (0..n - 1).map(|i| (ys[i + 1] - ys[i]) / h[i]).collect();
    if n == 2 {
        d[0] = delta[0];
        d[1] = delta[0];
        return d;
    }
    for i in 1..n - 1 {
        if delta[i - 1] * delta[i] <= 0.0 {
            d[i] = 0.0;
        } else {
            let w1 = 2.0 * h[i] + h[i - 1];
            let w2 = h[i] + 2.0 * h[i - 1];
            d[i] = (w1 + w2) / (w1 / delta[i - 1] + w2 / delta[i]);
        }
    }
    d[0] = end_slope(h[0], h[1], delta[0], delta[1]);
    d[n - 1] = end_slope(h[n - 2], h[n - 3], delta[n - 2], delta[n - 3]);
    d
}

fn end_slope(h0: f64, h1: f64, del0: f64, del1: f64) -> f64 {
    let d = ((2.0 * h0 + h1) * del0 - h0 * del1) / (h0 + h1);
    if d.signum() != del0.signum() {
        0.0
    } else if del0.signum() != del1.signum() && d.abs() > 3.0 * del0.abs() {
        3.0 * del0
    } else {
        d
    }
}
