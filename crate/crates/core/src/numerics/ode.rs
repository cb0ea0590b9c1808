//! Dormand–Prince 5(4) with Hairer's fourth-order dense output.

const C: [f64; 7] = [0.0, 0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];
const A2: [f64; 1] = [0.2];
const A3: [f64; 2] = [3.0 / 40.0, 9.0 / 40.0];
const A4: [f64; 3] = [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0];
const A5: [f64; 4] = [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0];
const A6: [f64; 5] = [
    9017.0 / 3168.0,
    -355.0 / 33.0,
    46732.0 / 5247.0,
    49.0 / 176.0,
    -5103.0 / 18656.0,
];
const B: [f64; 6] = [
    35.0 / 384.0,
    0.0,
    500.0 / 1113.0,
    125.0 / 192.0,
    -2187.0 / 6784.0,
    11.0 / 84.0,
];
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];
const D: [f64; 7] = [
    -12715105075.0 / 11282082432.0,
    0.0,
    87487479700.0 / 32700410799.0,
    -10690763975.0 / 1880347072.0,
    701980252875.0 / 199316789632.0,
    -1453857185.0 / 822651844.0,
    69997945.0 / 29380423.0,
];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerance {
    pub rtol: f64,
    pub atol: f64,
}

/// Continuous extension of one accepted step over `[s0, s0 + h]`.
#[derive(Debug, Clone, Copy)]
pub struct Dense<const N: usize> {
    pub s0: f64,
    pub h: f64,
    coef: [[f64; N]; 5],
}

impl<const N: usize> Dense<N> {
    pub fn eval(&self, s: f64) -> [f64; N] {
        let t = (s - self.s0) / self.h;
        let t1 = 1.0 - t;
        let [c0, c1, c2, c3, c4] = &self.coef;
        std::array::from_fn(|i| c0[i] + t * (c1[i] + t1 * (c2[i] + t * (c3[i] + t1 * c4[i]))))
    }

    pub fn end(&self) -> f64 {
        self.s0 + self.h
    }
}

#[derive(Debug, Clone, Copy)]
pub struct Step<const N: usize> {
    pub y: [f64; N],
    /// Derivative at the new point, reused as the next step's first stage.
    pub dy: [f64; N],
    /// Scaled error norm; the step is acceptable when `<= 1`.
    pub err: f64,
    pub dense: Dense<N>,
}

fn axpy<const N: usize>(y: &[f64; N], h: f64, terms: &[(f64, &[f64; N])]) -> [f64; N] {
    std::array::from_fn(|i| y[i] + h * terms.iter().map(|(a, k)| a * k[i]).sum::<f64>())
}

/// One trial step from `(s, y)` with first stage `k1 = f(s, y)`.
pub fn dopri_step<const N: usize, F>(f: &F, s: f64, y: &[f64; N], k1: &[f64; N], h: f64, tol: Tolerance) -> Step<N>
where
    F: Fn(f64, &[f64; N]) -> [f64; N],
{
    let k2 = f(s + C[1] * h, &axpy(y, h, &[(A2[0], k1)]));
    let k3 = f(s + C[2] * h, &axpy(y, h, &[(A3[0], k1), (A3[1], &k2)]));
    let k4 = f(s + C[3] * h, &axpy(y, h, &[(A4[0], k1), (A4[1], &k2), (A4[2], &k3)]));
    let k5 = f(
        s + C[4] * h,
        &axpy(y, h, &[(A5[0], k1), (A5[1], &k2), (A5[2], &k3), (A5[3], &k4)]),
    );
    let k6 = f(
        s + C[5] * h,
        &axpy(
            y,
            h,
            &[(A6[0], k1), (A6[1], &k2), (A6[2], &k3), (A6[3], &k4), (A6[4], &k5)],
        ),
    );
    let y1 = axpy(y, h, &[(B[0], k1), (B[2], &k3), (B[3], &k4), (B[4], &k5), (B[5], &k6)]);
    let k7 = f(s + h, &y1);

    let ks = [k1, &k2, &k3, &k4, &k5, &k6, &k7];
    let mut acc = 0.0;
    for i in 0..N {
        let e = h * (0..7).map(|j| E[j] * ks[j][i]).sum::<f64>();
        let sc = tol.atol + tol.rtol * y[i].abs().max(y1[i].abs());
        acc += (e / sc).powi(2);
    }
    let err = (acc / N as f64).sqrt();

    let mut coef = [[0.0; N]; 5];
    for i in 0..N {
        let diff = y1[i] - y[i];
        let bspl = h * k1[i] - diff;
        coef[0][i] = y[i];
        coef[1][i] = diff;
        coef[2][i] = bspl;
        coef[3][i] = diff - h * k7[i] - bspl;
        coef[4][i] = h * (0..7).map(|j| D[j] * ks[j][i]).sum::<f64>();
    }
    Step {
        y: y1,
        dy: k7,
        err,
        dense: Dense { s0: s, h, coef },
    }
}

/// Step-size factor after a trial step with error norm `err`.
pub fn step_factor(err: f64, accepted: bool) -> f64 {
    let raw = if err > 0.0 { 0.9 * err.powf(-0.2) } else { 10.0 };
    if accepted {
        raw.clamp(0.2, 10.0)
    } else {
        raw.clamp(0.1, 0.9)
    }
}

/// Integrates from `s0` to `s1` and returns the final state; for tests and
/// short auxiliary integrations.
pub fn integrate_to<const N: usize, F>(f: F, s0: f64, y0: [f64; N], s1: f64, tol: Tolerance) -> Option<[f64; N]>
where
    F: Fn(f64, &[f64; N]) -> [f64; N],
{
    let mut s = s0;
    let mut y = y0;
    let mut k = f(s, &y);
    let mut h = (s1 - s0).abs().min(1e-2).copysign(s1 - s0);
    let min_h = 1e-14 * (s1 - s0).abs().max(1.0);
    while (s1 - s) * h.signum() > 0.0 {
        if (s + h - s1) * h.signum() > 0.0 {
            h = s1 - s;
        }
        let st = dopri_step(&f, s, &y, &k, h, tol);
        if st.err <= 1.0 {
            s = if (s1 - st.dense.end()).abs() < min_h { s1 } else { s + h };
            y = st.y;
            k = st.dy;
            h *= step_factor(st.err, true);
        } else {
            h *= step_factor(st.err, false);
            if h.abs() < min_h {
                return None;
            }
        }
    }
    Some(y)
}
