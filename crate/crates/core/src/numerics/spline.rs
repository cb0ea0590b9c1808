//! Cubic splines on uniform grids: nodal slopes for clamped and periodic
//! splines, and a tensor-product bicubic interpolant that is clamped in the
//! first axis and periodic in the second.

/// Cubic Hermite basis on the unit interval: value and the first two
/// derivatives of `p(t) = y0 h00 + m0 h10 + y1 h01 + m1 h11`.
#[inline]
fn hermite_basis(t: f64) -> [[f64; 4]; 3] {
    let t2 = t * t;
    let t3 = t2 * t;
    [
        [
            2.0 * t3 - 3.0 * t2 + 1.0,
            t3 - 2.0 * t2 + t,
            -2.0 * t3 + 3.0 * t2,
            t3 - t2,
        ],
        [
            6.0 * t2 - 6.0 * t,
            3.0 * t2 - 4.0 * t + 1.0,
            -6.0 * t2 + 6.0 * t,
            3.0 * t2 - 2.0 * t,
        ],
        [12.0 * t - 6.0, 6.0 * t - 4.0, -12.0 * t + 6.0, 6.0 * t - 2.0],
    ]
}

/// Evaluates the cubic Hermite segment with end values `y0, y1` and end slopes
/// `m0, m1` (per unit `x`), segment width `h`, at local coordinate `t ∈ [0,1]`.
/// Returns value and first derivative in `x`.
#[inline]
pub fn hermite(y0: f64, y1: f64, m0: f64, m1: f64, h: f64, t: f64) -> (f64, f64) {
    let b = hermite_basis(t);
    let v = y0 * b[0][0] + h * m0 * b[0][1] + y1 * b[0][2] + h * m1 * b[0][3];
    let d = (y0 * b[1][0] + h * m0 * b[1][1] + y1 * b[1][2] + h * m1 * b[1][3]) / h;
    (v, d)
}

/// Nodal slopes of the clamped cubic spline through `y` (uniform spacing `h`)
/// with prescribed end slopes.
pub fn clamped_slopes(y: &[f64], h: f64, start_slope: f64, end_slope: f64) -> Vec<f64> {
    let n = y.len();
    assert!(n >= 2, "spline needs at least two nodes");
    let mut m = vec![0.0; n];
    m[0] = start_slope;
    m[n - 1] = end_slope;
    if n == 2 {
        return m;
    }
    // Interior equations m[i-1] + 4 m[i] + m[i+1] = 3 (y[i+1] - y[i-1]) / h.
    let k = n - 2;
    let mut diag = vec![4.0; k];
    let mut rhs: Vec<f64> = (1..n - 1).map(|i| 3.0 * (y[i + 1] - y[i - 1]) / h).collect();
    rhs[0] -= start_slope;
    rhs[k - 1] -= end_slope;
    for i in 1..k {
        let w = 1.0 / diag[i - 1];
        diag[i] -= w;
        rhs[i] -= w * rhs[i - 1];
    }
    m[k] = rhs[k - 1] / diag[k - 1];
    for i in (0..k - 1).rev() {
        m[i + 1] = (rhs[i] - m[i + 2]) / diag[i];
    }
    m
}

/// Nodal slopes of the periodic cubic spline through `y`, where `y[i]` is the
/// value at `i h` and the period is `y.len() * h`.
pub fn periodic_slopes(y: &[f64], h: f64) -> Vec<f64> {
    let n = y.len();
    assert!(n >= 3, "periodic spline needs at least three nodes");
    let rhs: Vec<f64> = (0..n)
        .map(|i| 3.0 * (y[(i + 1) % n] - y[(i + n - 1) % n]) / h)
        .collect();
    solve_cyclic_141(&rhs)
}

/// Solves the cyclic tridiagonal system with 4 on the diagonal and 1 on the
/// off-diagonals (including the corners) by Sherman–Morrison.
fn solve_cyclic_141(rhs: &[f64]) -> Vec<f64> {
    let n = rhs.len();
    // A = T + u v^T with u = (γ, 0, …, 0, 1), v = (1, 0, …, 0, 1/γ).
    let gamma = -4.0;
    let mut diag = vec![4.0; n];
    diag[0] -= gamma;
    diag[n - 1] -= 1.0 / gamma;
    let solve = |d: &[f64], b: &[f64]| -> Vec<f64> {
        let mut c = vec![0.0; n];
        let mut x = vec![0.0; n];
        let mut denom = d[0];
        c[0] = 1.0 / denom;
        x[0] = b[0] / denom;
        for i in 1..n {
            denom = d[i] - c[i - 1];
            c[i] = 1.0 / denom;
            x[i] = (b[i] - x[i - 1]) / denom;
        }
        for i in (0..n - 1).rev() {
            x[i] -= c[i] * x[i + 1];
        }
        x
    };
    let y = solve(&diag, rhs);
    let mut u = vec![0.0; n];
    u[0] = gamma;
    u[n - 1] = 1.0;
    let z = solve(&diag, &u);
    let fact = (y[0] + y[n - 1] / gamma) / (1.0 + z[0] + z[n - 1] / gamma);
    y.iter().zip(&z).map(|(yi, zi)| yi - fact * zi).collect()
}

/// Value and derivatives up to second order of a scalar field of two
/// variables `(x, y)`.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Jet2 {
    pub v: f64,
    pub x: f64,
    pub y: f64,
    pub xx: f64,
    pub xy: f64,
    pub yy: f64,
}

/// Tensor-product cubic spline on `[x0, x0 + (nx-1) hx] × ℝ/(ny hy)`: clamped
/// in `x` with zero end slopes, periodic in `y`. Stored as bicubic Hermite
/// data (value, ∂x, ∂y, ∂x∂y) at each node, which reproduces the C² spline.
#[derive(Debug, Clone)]
pub struct ClampedPeriodicSpline {
    nx: usize,
    ny: usize,
    x0: f64,
    hx: f64,
    hy: f64,
    // node-major: index ix * ny + iy, entries [f, fx, fy, fxy]
    data: Vec<[f64; 4]>,
}

impl ClampedPeriodicSpline {
    /// `values[ix * ny + iy]`; zero slopes in `x` are imposed at both ends.
    pub fn new(values: &[f64], nx: usize, ny: usize, x0: f64, hx: f64, hy: f64) -> Self {
        assert_eq!(values.len(), nx * ny);
        let mut fx = vec![0.0; nx * ny];
        let mut col = vec![0.0; nx];
        for iy in 0..ny {
            for ix in 0..nx {
                col[ix] = values[ix * ny + iy];
            }
            let m = clamped_slopes(&col, hx, 0.0, 0.0);
            for ix in 0..nx {
                fx[ix * ny + iy] = m[ix];
            }
        }
        let mut data = Vec::with_capacity(nx * ny);
        for ix in 0..nx {
            let row = &values[ix * ny..(ix + 1) * ny];
            let row_x = &fx[ix * ny..(ix + 1) * ny];
            let fy = periodic_slopes(row, hy);
            let fxy = periodic_slopes(row_x, hy);
            for iy in 0..ny {
                data.push([row[iy], row_x[iy], fy[iy], fxy[iy]]);
            }
        }
        Self {
            nx,
            ny,
            x0,
            hx,
            hy,
            data,
        }
    }

    pub fn x_range(&self) -> (f64, f64) {
        (self.x0, self.x0 + (self.nx - 1) as f64 * self.hx)
    }

    /// Evaluates value and derivatives through second order. `x` is clamped
    /// to the grid; `y` is reduced by the period.
    pub fn eval(&self, x: f64, y: f64) -> Jet2 {
        let sx = ((x - self.x0) / self.hx).clamp(0.0, (self.nx - 1) as f64);
        let mut ix = sx.floor() as usize;
        if ix >= self.nx - 1 {
            ix = self.nx - 2;
        }
        let tx = sx - ix as f64;
        let period = self.ny as f64 * self.hy;
        let yr = y.rem_euclid(period);
        let sy = yr / self.hy;
        let mut iy = sy.floor() as usize;
        if iy >= self.ny {
            iy = self.ny - 1;
        }
        let ty = sy - iy as f64;
        let iy1 = (iy + 1) % self.ny;

        let bx = hermite_basis(tx);
        let by = hermite_basis(ty);
        let (hx, hy) = (self.hx, self.hy);
        let corners = [
            (0usize, 0usize, self.data[ix * self.ny + iy]),
            (0, 1, self.data[ix * self.ny + iy1]),
            (1, 0, self.data[(ix + 1) * self.ny + iy]),
            (1, 1, self.data[(ix + 1) * self.ny + iy1]),
        ];
        let mut out = [[0.0; 3]; 3];
        for (cx, cy, [f, fx, fy, fxy]) in corners {
            // Basis indices: value basis at 0/2, slope basis at 1/3.
            let vx = 2 * cx;
            let sx_ = 2 * cx + 1;
            let vy = 2 * cy;
            let sy_ = 2 * cy + 1;
            for dx in 0..3 {
                for dy in 0..3 {
                    if dx + dy > 2 {
                        continue;
                    }
                    out[dx][dy] += f * bx[dx][vx] * by[dy][vy]
                        + hx * fx * bx[dx][sx_] * by[dy][vy]
                        + hy * fy * bx[dx][vx] * by[dy][sy_]
                        + hx * hy * fxy * bx[dx][sx_] * by[dy][sy_];
                }
            }
        }
        Jet2 {
            v: out[0][0],
            x: out[1][0] / hx,
            y: out[0][1] / hy,
            xx: out[2][0] / (hx * hx),
            xy: out[1][1] / (hx * hy),
            yy: out[0][2] / (hy * hy),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn clamped_spline_reproduces_cubics() {
        let h = 0.25;
        let f = |x: f64| 1.0 + x - 2.0 * x * x + 0.5 * x * x * x;
        let df = |x: f64| 1.0 - 4.0 * x + 1.5 * x * x;
        let y: Vec<f64> = (0..9).map(|i| f(i as f64 * h)).collect();
        let m = clamped_slopes(&y, h, df(0.0), df(8.0 * h));
        for (i, mi) in m.iter().enumerate() {
            assert!((mi - df(i as f64 * h)).abs() < 1e-12);
        }
    }

    #[test]
    fn periodic_slopes_converge_at_fourth_order() {
        let err = |n: usize| {
            let h = 2.0 * PI / n as f64;
            let y: Vec<f64> = (0..n)
                .map(|i| (i as f64 * h).sin() + 0.3 * (3.0 * i as f64 * h).cos())
                .collect();
            let m = periodic_slopes(&y, h);
            m.iter()
                .enumerate()
                .map(|(i, mi)| {
                    let x = i as f64 * h;
                    (mi - (x.cos() - 0.9 * (3.0 * x).sin())).abs()
                })
                .fold(0.0, f64::max)
        };
        let (e1, e2) = (err(64), err(128));
        assert!(e1 / e2 > 14.0, "ratio {}", e1 / e2);
    }

    #[test]
    fn bicubic_matches_smooth_field() {
        let nx = 41;
        let ny = 64;
        let x0 = 1.0;
        let hx = 1.0 / (nx - 1) as f64;
        let hy = 2.0 * PI / ny as f64;
        // Zero x-slope at both ends: use cos(π (x - x0)).
        let f = |x: f64, y: f64| (PI * (x - x0)).cos() * (y.sin() + 0.5 * (2.0 * y).cos());
        let vals: Vec<f64> = (0..nx)
            .flat_map(|i| (0..ny).map(move |j| f(x0 + i as f64 * hx, j as f64 * hy)))
            .collect();
        let s = ClampedPeriodicSpline::new(&vals, nx, ny, x0, hx, hy);
        for &(x, y) in &[(1.13, 0.4), (1.5, 3.3), (1.97, -1.0), (1.0, 7.0)] {
            let j = s.eval(x, y);
            assert!((j.v - f(x, y)).abs() < 1e-6);
            let fx = -PI * (PI * (x - x0)).sin() * (y.sin() + 0.5 * (2.0 * y).cos());
            let fy = (PI * (x - x0)).cos() * (y.cos() - (2.0 * y).sin());
            assert!((j.x - fx).abs() < 1e-4, "{} {}", j.x, fx);
            assert!((j.y - fy).abs() < 1e-4, "{} {}", j.y, fy);
        }
        // Interpolation at nodes is exact.
        let j = s.eval(x0 + 7.0 * hx, 5.0 * hy);
        assert!((j.v - vals[7 * ny + 5]).abs() < 1e-15);
    }
}
