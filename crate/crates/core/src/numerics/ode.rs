//! Dormand–Prince 5(4) embedded Runge–Kutta step with FSAL.
//!
//! Only the single-step kernel and the step-size controller live here. The
//! drivers (method-of-steps shooting, phase-plane integration) own their
//! loops because each needs its own event and history handling.

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Tolerance {
    pub rtol: f64,
    pub atol: f64,
}

impl Default for Tolerance {
    fn default() -> Self {
        Self {
            rtol: 1e-10,
            atol: 1e-13,
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct Step<const N: usize> {
    pub y: [f64; N],
    /// Derivative at the end of the step (first stage of the next one).
    pub dy: [f64; N],
    /// Scaled RMS error; `<= 1` means accept. NaN if a stage was not finite.
    pub err: f64,
}

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

fn axpy<const N: usize>(y: &[f64; N], h: f64, terms: &[(f64, &[f64; N])]) -> [f64; N] {
    let mut out = *y;
    for (i, o) in out.iter_mut().enumerate() {
        let mut acc = 0.0;
        for (a, k) in terms {
            acc += a * k[i];
        }
        *o += h * acc;
    }
    out
}

/// Takes one trial step of size `h` from `(t, y)` given `dy0 = f(t, y)`.
pub fn dopri5_step<const N: usize, F>(
    f: &mut F,
    t: f64,
    y: &[f64; N],
    dy0: &[f64; N],
    h: f64,
    tol: Tolerance,
) -> Step<N>
where
    F: FnMut(f64, &[f64; N]) -> [f64; N],
{
    let k1 = *dy0;
    let k2 = f(t + C2 * h, &axpy(y, h, &[(A21, &k1)]));
    let k3 = f(t + C3 * h, &axpy(y, h, &[(A31, &k1), (A32, &k2)]));
    let k4 = f(t + C4 * h, &axpy(y, h, &[(A41, &k1), (A42, &k2), (A43, &k3)]));
    let k5 = f(
        t + C5 * h,
        &axpy(y, h, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)]),
    );
    let k6 = f(
        t + h,
        &axpy(y, h, &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)]),
    );
    let y_new = axpy(y, h, &[(B1, &k1), (B3, &k3), (B4, &k4), (B5, &k5), (B6, &k6)]);
    let k7 = f(t + h, &y_new);

    let mut acc = 0.0;
    for i in 0..N {
        let e = h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
        let sc = tol.atol + tol.rtol * y[i].abs().max(y_new[i].abs());
        acc += (e / sc) * (e / sc);
    }
    let mut err = (acc / N as f64).sqrt();
    if !y_new.iter().chain(k7.iter()).all(|v| v.is_finite()) {
        err = f64::NAN;
    }
    Step { y: y_new, dy: k7, err }
}

/// Standard controller: `h * clamp(0.9 err^{-1/5}, 0.2, 5)`.
pub fn next_step_size(h: f64, err: f64) -> f64 {
    if !err.is_finite() {
        return 0.25 * h;
    }
    if err == 0.0 {
        return 5.0 * h;
    }
    h * (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
}
