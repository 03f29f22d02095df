//! Adaptive Dormand–Prince 5(4) integrator for small fixed-size systems.

const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
const B5: [f64; 7] = [
    35.0 / 384.0,
    0.0,
    500.0 / 1113.0,
    125.0 / 192.0,
    -2187.0 / 6784.0,
    11.0 / 84.0,
    0.0,
];
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

#[derive(Debug, Clone, Copy)]
pub struct Tolerances {
    pub rtol: f64,
    pub atol: f64,
    pub h_init: f64,
    pub h_max: f64,
}

/// One accepted step: new time, new state, derivative at the new time.
#[derive(Debug, Clone, Copy)]
pub struct Step<const D: usize> {
    pub t: f64,
    pub y: [f64; D],
    pub dy: [f64; D],
}

/// Integrates `y' = f(t, y)` from `t0` until `t_end` or until `stop` returns
/// true on an accepted step. Every accepted step is passed to `on_step`.
pub fn integrate<const D: usize>(
    f: impl Fn(f64, &[f64; D]) -> [f64; D],
    t0: f64,
    y0: [f64; D],
    t_end: f64,
    tol: Tolerances,
    mut on_step: impl FnMut(&Step<D>) -> bool,
) -> Step<D> {
    let mut t = t0;
    let mut y = y0;
    let mut k = [[0.0; D]; 7];
    k[0] = f(t, &y);
    let mut h = tol.h_init.min(t_end - t0);
    let mut cur = Step { t, y, dy: k[0] };
    while t < t_end {
        h = h.min(t_end - t).min(tol.h_max);
        for s in 1..7 {
            let mut ys = y;
            for (d, v) in ys.iter_mut().enumerate() {
                let mut acc = 0.0;
                for (j, kj) in k.iter().enumerate().take(s) {
                    acc += A[s][j] * kj[d];
                }
                *v += h * acc;
            }
            k[s] = f(t + C[s] * h, &ys);
        }
        let mut y5 = y;
        let mut err = 0.0f64;
        for d in 0..D {
            let mut s5 = 0.0;
            let mut s4 = 0.0;
            for s in 0..7 {
                s5 += B5[s] * k[s][d];
                s4 += B4[s] * k[s][d];
            }
            y5[d] += h * s5;
            let sc = tol.atol + tol.rtol * y[d].abs().max(y5[d].abs());
            err = err.max((h * (s5 - s4)).abs() / sc);
        }
        if err <= 1.0 || h <= 1e-14 * t.abs().max(1.0) {
            t += h;
            y = y5;
            // FSAL: the last stage is the derivative at the new point
            k[0] = k[6];
            cur = Step { t, y, dy: k[0] };
            if on_step(&cur) {
                return cur;
            }
            let fac = if err == 0.0 {
                5.0
            } else {
                (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
            };
            h *= fac;
        } else {
            h *= (0.9 * err.powf(-0.2)).clamp(0.1, 1.0);
        }
    }
    cur
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn harmonic_oscillator() {
        let tol = Tolerances {
            rtol: 1e-12,
            atol: 1e-14,
            h_init: 1e-3,
            h_max: 0.1,
        };
        let end = integrate(|_, y: &[f64; 2]| [y[1], -y[0]], 0.0, [1.0, 0.0], 10.0, tol, |_| false);
        assert!((end.y[0] - 10f64.cos()).abs() < 1e-10);
        assert!((end.y[1] + 10f64.sin()).abs() < 1e-10);
    }
}
