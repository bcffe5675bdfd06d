//! Adaptive Gauss–Kronrod (7/15) quadrature.

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// One 15-point Kronrod panel; returns the estimate and |K15 − G7|.
pub fn gk15<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kron = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    for j in 0..7 {
        let dx = h * XGK[j];
        let f1 = f(c - dx);
        let f2 = f(c + dx);
        kron += WGK[j] * (f1 + f2);
        if j % 2 == 1 {
            gauss += WG[j / 2] * (f1 + f2);
        }
    }
    (kron * h, ((kron - gauss) * h).abs())
}

/// Result of an adaptive integration.
#[derive(Clone, Copy, Debug)]
pub struct Quad {
    pub value: f64,
    pub error: f64,
    pub converged: bool,
}

/// Globally adaptive bisection: the panel with the largest error estimate is
/// split until the summed error meets `max(abs_tol, rel_tol * |I|)`.
///
/// Panel nodes never touch the endpoints, so integrable endpoint
/// singularities are handled by refinement.
pub fn adaptive<F: FnMut(f64) -> f64>(
    mut f: F,
    a: f64,
    b: f64,
    abs_tol: f64,
    rel_tol: f64,
    max_panels: usize,
) -> Quad {
    if a == b {
        return Quad {
            value: 0.0,
            error: 0.0,
            converged: true,
        };
    }
    let (v, e) = gk15(&mut f, a, b);
    let mut panels = vec![(a, b, v, e)];
    let mut total = v;
    let mut err = e;
    while err > abs_tol.max(rel_tol * total.abs()) {
        if panels.len() >= max_panels || !total.is_finite() {
            return Quad {
                value: total,
                error: err,
                converged: false,
            };
        }
        let (idx, _) = panels
            .iter()
            .enumerate()
            .fold((0, -1.0), |best, (i, p)| if p.3 > best.1 { (i, p.3) } else { best });
        let (pa, pb, pv, pe) = panels.swap_remove(idx);
        let mid = 0.5 * (pa + pb);
        if mid <= pa || mid >= pb {
            // cannot split further in floating point
            return Quad {
                value: total,
                error: err,
                converged: false,
            };
        }
        let (v1, e1) = gk15(&mut f, pa, mid);
        let (v2, e2) = gk15(&mut f, mid, pb);
        total += v1 + v2 - pv;
        err += e1 + e2 - pe;
        panels.push((pa, mid, v1, e1));
        panels.push((mid, pb, v2, e2));
    }
    // re-sum to shed accumulated cancellation in the running totals
    let value = panels.iter().map(|p| p.2).sum();
    let error = panels.iter().map(|p| p.3).sum();
    Quad {
        value,
        error,
        converged: true,
    }
}

/// Integrates over consecutive breakpoints, splitting the tolerance evenly.
pub fn adaptive_pieces<F: FnMut(f64) -> f64>(
    mut f: F,
    breaks: &[f64],
    abs_tol: f64,
    rel_tol: f64,
) -> Quad {
    let pieces = breaks.len().saturating_sub(1).max(1);
    let tol = abs_tol / pieces as f64;
    let mut out = Quad {
        value: 0.0,
        error: 0.0,
        converged: true,
    };
    for w in breaks.windows(2) {
        let q = adaptive(&mut f, w[0], w[1], tol, rel_tol, 200);
        out.value += q.value;
        out.error += q.error;
        out.converged &= q.converged;
    }
    out
}
