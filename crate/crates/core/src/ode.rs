//! Dormand–Prince 5(4) integrator for small complex systems.
//!
//! Steps are forced to land exactly on every point of `stops`, which is how
//! potential discontinuities and output grid points are honoured.

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy)]
pub struct OdeOptions {
    pub rtol: f64,
    /// Absolute tolerance, taken relative to the current state's sup-norm.
    pub atol: f64,
    pub h_max: f64,
    pub max_steps: usize,
}

impl Default for OdeOptions {
    fn default() -> Self {
        Self { rtol: 1e-11, atol: 1e-13, h_max: f64::INFINITY, max_steps: 2_000_000 }
    }
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
// differences between the 5th and embedded 4th order weights
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

#[inline]
fn comb<const N: usize>(y: &[C64; N], h: f64, terms: &[(f64, &[C64; N])]) -> [C64; N] {
    let mut out = *y;
    for (c, k) in terms {
        let w = h * c;
        for i in 0..N {
            out[i] += k[i] * w;
        }
    }
    out
}

/// Integrate `y' = rhs(x, y)` from `x0` to `x1` (either direction).
///
/// `observe(x, y, forced)` is called after every accepted step; `forced` is
/// true when the step ended on a point of `stops` (or on `x1`).
pub fn dopri5<const N: usize, F, O>(
    rhs: F,
    x0: f64,
    y0: [C64; N],
    x1: f64,
    stops: &[f64],
    opts: &OdeOptions,
    mut observe: O,
) -> Result<[C64; N]>
where
    F: Fn(f64, &[C64; N]) -> [C64; N],
    O: FnMut(f64, &[C64; N], bool),
{
    if x0 == x1 {
        return Ok(y0);
    }
    let dir = (x1 - x0).signum();
    let mut targets: Vec<f64> = stops
        .iter()
        .copied()
        .filter(|&s| (s - x0) * dir > 0.0 && (x1 - s) * dir > 0.0)
        .collect();
    targets.sort_by(|a, b| (a * dir).total_cmp(&(b * dir)));
    targets.dedup();
    targets.push(x1);

    let span = (x1 - x0).abs();
    let mut x = x0;
    let mut y = y0;
    let mut k1 = rhs(x, &y);
    let mut h = (1e-3 * span).min(opts.h_max);
    let mut next = 0usize;
    let mut steps = 0usize;

    while next < targets.len() {
        steps += 1;
        if steps > opts.max_steps {
            return Err(Error::Accuracy(format!("step limit reached at x = {x}")));
        }
        let target = targets[next];
        let remaining = (target - x).abs();
        let forced = h >= remaining * (1.0 - 1e-12);
        let hs = if forced { remaining } else { h };
        let hd = hs * dir;

        let k2 = rhs(x + C2 * hd, &comb(&y, hd, &[(A21, &k1)]));
        let k3 = rhs(x + C3 * hd, &comb(&y, hd, &[(A31, &k1), (A32, &k2)]));
        let k4 = rhs(x + C4 * hd, &comb(&y, hd, &[(A41, &k1), (A42, &k2), (A43, &k3)]));
        let k5 = rhs(
            x + C5 * hd,
            &comb(&y, hd, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)]),
        );
        let x_new = if forced { target } else { x + hd };
        // end-of-step stages stay on this side of a forced stop, so a jump
        // located exactly at the stop is seen from the correct cell
        let x_end = if forced { target - dir * 1e-13 * target.abs().max(1e-3) } else { x_new };
        let k6 = rhs(
            x_end,
            &comb(&y, hd, &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)]),
        );
        let y_new = comb(&y, hd, &[(B1, &k1), (B3, &k3), (B4, &k4), (B5, &k5), (B6, &k6)]);
        let k7 = rhs(x_end, &y_new);

        let ynorm = y.iter().chain(y_new.iter()).map(|v| v.norm()).fold(0.0, f64::max);
        let mut err2 = 0.0;
        for i in 0..N {
            let e = (k1[i] * E1 + k3[i] * E3 + k4[i] * E4 + k5[i] * E5 + k6[i] * E6 + k7[i] * E7) * hd;
            let sc = opts.atol * ynorm + opts.rtol * y[i].norm().max(y_new[i].norm());
            let r = if sc > 0.0 { e.norm() / sc } else if e.norm() == 0.0 { 0.0 } else { f64::INFINITY };
            err2 += r * r;
        }
        let err = (err2 / N as f64).sqrt();
        if !err.is_finite() && y_new.iter().any(|v| !v.is_finite()) {
            return Err(Error::Accuracy(format!("non-finite state near x = {x}")));
        }

        if err <= 1.0 {
            x = x_new;
            y = y_new;
            k1 = if forced { rhs(x, &y) } else { k7 };
            observe(x, &y, forced);
            if forced {
                next += 1;
            }
            let fac = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
            // a forced short step says nothing about the natural step size
            h = if forced { h.max(hs * fac) } else { hs * fac };
        } else {
            let fac = (0.9 * err.powf(-0.2)).clamp(0.1, 0.9);
            h = hs * fac;
        }
        h = h.min(opts.h_max);
        if h < 1e-15 * span.max(x.abs()) {
            return Err(Error::Accuracy(format!("step size underflow at x = {x}")));
        }
    }
    Ok(y)
}
