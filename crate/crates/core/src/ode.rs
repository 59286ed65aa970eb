//! Adaptive Dormand–Prince 5(4) integration for small autonomous systems.

#[derive(Clone, Copy, Debug)]
pub struct Tolerances {
    pub rtol: f64,
    pub atol: f64,
    pub max_steps: usize,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            rtol: 1e-10,
            atol: 1e-12,
            max_steps: 1_000_000,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Outcome<const N: usize> {
    /// Reached the final time.
    Completed([f64; N]),
    /// The stop predicate fired at this time and state.
    Stopped { time: f64, state: [f64; N] },
    /// The step size underflowed or the step budget ran out.
    Stalled { time: f64, state: [f64; N] },
}

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

fn axpy<const N: usize>(y: &[f64; N], terms: &[(f64, &[f64; N])], h: f64) -> [f64; N] {
    let mut out = *y;
    for (c, k) in terms {
        for i in 0..N {
            out[i] += h * c * k[i];
        }
    }
    out
}

/// Integrate `y' = f(y)` from time 0 to `t_end`, stopping early when `stop(y)` holds.
pub fn integrate<const N: usize, F, S>(f: F, y0: [f64; N], t_end: f64, tol: Tolerances, stop: S) -> Outcome<N>
where
    F: Fn(&[f64; N]) -> [f64; N],
    S: Fn(&[f64; N]) -> bool,
{
    let mut t = 0.0;
    let mut y = y0;
    if stop(&y) {
        return Outcome::Stopped { time: 0.0, state: y };
    }
    if t_end <= 0.0 {
        return Outcome::Completed(y);
    }
    let mut h = (t_end * 1e-3).min(1e-3);
    let mut k1 = f(&y);
    for _ in 0..tol.max_steps {
        if t >= t_end {
            return Outcome::Completed(y);
        }
        h = h.min(t_end - t);
        let k2 = f(&axpy(&y, &[(A21, &k1)], h));
        let k3 = f(&axpy(&y, &[(A31, &k1), (A32, &k2)], h));
        let k4 = f(&axpy(&y, &[(A41, &k1), (A42, &k2), (A43, &k3)], h));
        let k5 = f(&axpy(&y, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)], h));
        let k6 = f(&axpy(&y, &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)], h));
        let y5 = axpy(&y, &[(B1, &k1), (B3, &k3), (B4, &k4), (B5, &k5), (B6, &k6)], h);
        let k7 = f(&y5);
        let mut err = 0.0f64;
        let mut finite = true;
        for i in 0..N {
            let e = h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
            let sc = tol.atol + tol.rtol * y[i].abs().max(y5[i].abs());
            err = err.max((e / sc).abs());
            finite &= y5[i].is_finite();
        }
        if finite && err <= 1.0 {
            t += h;
            y = y5;
            k1 = k7;
            if stop(&y) {
                return Outcome::Stopped { time: t, state: y };
            }
            let factor = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
            h *= factor;
        } else {
            let factor = if finite { (0.9 * err.powf(-0.2)).clamp(0.1, 0.9) } else { 0.1 };
            h *= factor;
        }
        if h < 1e-14 * t.max(1.0) {
            return Outcome::Stalled { time: t, state: y };
        }
    }
    Outcome::Stalled { time: t, state: y }
}
