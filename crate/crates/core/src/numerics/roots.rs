//! Bracketed scalar root finding and small fitting helpers.

/// Bisection on a sign-changing bracket. Runs until the bracket can no longer
/// be split in floating point or `|hi - lo| <= xtol`.
///
/// Returns `None` when `f(lo)` and `f(hi)` share a strict sign.
pub fn bisect<F: FnMut(f64) -> f64>(mut f: F, mut lo: f64, mut hi: f64, xtol: f64) -> Option<f64> {
    let mut flo = f(lo);
    let fhi = f(hi);
    if flo == 0.0 {
        return Some(lo);
    }
    if fhi == 0.0 {
        return Some(hi);
    }
    if flo.signum() == fhi.signum() {
        return None;
    }
    for _ in 0..400 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi || (hi - lo).abs() <= xtol {
            break;
        }
        let fm = f(mid);
        if fm == 0.0 {
            return Some(mid);
        }
        if fm.signum() == flo.signum() {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    // return the endpoint with the smaller residual
    let (a, b) = (f(lo), f(hi));
    Some(if a.abs() <= b.abs() { lo } else { hi })
}

/// Ordinary least-squares line.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

pub fn linear_fit(xs: &[f64], ys: &[f64]) -> Option<LineFit> {
    let n = xs.len();
    if n < 2 || n != ys.len() {
        return None;
    }
    let nf = n as f64;
    let mx = xs.iter().sum::<f64>() / nf;
    let my = ys.iter().sum::<f64>() / nf;
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        let dx = x - mx;
        let dy = y - my;
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    if sxx == 0.0 {
        return None;
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r_squared = if syy == 0.0 { 1.0 } else { (sxy * sxy) / (sxx * syy) };
    Some(LineFit {
        slope,
        intercept,
        r_squared,
    })
}

/// Fits `y ≈ A x^γ` by least squares in log–log coordinates.
/// Returns `(γ, A)`; non-positive samples are skipped.
pub fn power_law_fit(xs: &[f64], ys: &[f64]) -> Option<(f64, f64)> {
    let (lx, ly): (Vec<f64>, Vec<f64>) = xs
        .iter()
        .zip(ys)
        .filter(|(x, y)| **x > 0.0 && **y > 0.0)
        .map(|(x, y)| (x.ln(), y.ln()))
        .unzip();
    let fit = linear_fit(&lx, &ly)?;
    Some((fit.slope, fit.intercept.exp()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bisect_finds_ln2() {
        let r = bisect(|u| 2.0 * (-u).exp() - 1.0, 0.0, 5.0, 0.0).unwrap();
        assert!((r - std::f64::consts::LN_2).abs() < 1e-15);
    }

    #[test]
    fn bisect_rejects_same_sign() {
        assert!(bisect(|x| x * x + 1.0, -1.0, 1.0, 0.0).is_none());
    }

    #[test]
    fn line_fit_recovers_planted_line() {
        let xs: Vec<f64> = (0..10).map(|i| i as f64).collect();
        let ys: Vec<f64> = xs.iter().map(|x| 3.0 * x - 1.0).collect();
        let f = linear_fit(&xs, &ys).unwrap();
        assert!((f.slope - 3.0).abs() < 1e-14);
        assert!((f.intercept + 1.0).abs() < 1e-13);
        assert!((f.r_squared - 1.0).abs() < 1e-14);
    }

    #[test]
    fn power_law_recovers_exponent() {
        let xs: Vec<f64> = (1..20).map(|i| 1e-4 * i as f64).collect();
        let ys: Vec<f64> = xs.iter().map(|x| 2.5 * x.powf(1.7)).collect();
        let (g, a) = power_law_fit(&xs, &ys).unwrap();
        assert!((g - 1.7).abs() < 1e-12);
        assert!((a - 2.5).abs() < 1e-10);
    }
}
