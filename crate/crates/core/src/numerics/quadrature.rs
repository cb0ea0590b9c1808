//! Adaptive Gauss–Kronrod and fixed Gauss–Legendre quadrature.

// Tabulated to more digits than f64 holds.
#![allow(clippy::excessive_precision)]

/// Kronrod abscissae of the 15-point rule on [-1, 1] (non-negative half).
const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];

const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];

/// Gauss weights of the embedded 7-point rule (nodes XGK[1], XGK[3], XGK[5], XGK[7]).
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

const MAX_DEPTH: u32 = 48;

/// Result of an adaptive integration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quadrature<const N: usize> {
    pub value: [f64; N],
    pub error: f64,
    pub converged: bool,
}

fn gk15<const N: usize, F>(f: &mut F, a: f64, b: f64) -> ([f64; N], f64)
where
    F: FnMut(f64) -> [f64; N],
{
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kron = [0.0; N];
    let mut gauss = [0.0; N];
    for j in 0..N {
        kron[j] = WGK[7] * fc[j];
        gauss[j] = WG[3] * fc[j];
    }
    for i in 0..7 {
        let dx = h * XGK[i];
        let f1 = f(c - dx);
        let f2 = f(c + dx);
        for j in 0..N {
            let s = f1[j] + f2[j];
            kron[j] += WGK[i] * s;
            if i % 2 == 1 {
                gauss[j] += WG[i / 2] * s;
            }
        }
    }
    let mut err: f64 = 0.0;
    for j in 0..N {
        kron[j] *= h;
        gauss[j] *= h;
        err = err.max((kron[j] - gauss[j]).abs());
    }
    (kron, err)
}

fn adapt<const N: usize, F>(
    f: &mut F,
    a: f64,
    b: f64,
    whole: ([f64; N], f64),
    tol: f64,
    depth: u32,
    out: &mut Quadrature<N>,
) where
    F: FnMut(f64) -> [f64; N],
{
    let (value, err) = whole;
    if err <= tol || depth >= MAX_DEPTH || (b - a).abs() < 1e-15 * (a.abs() + b.abs()) {
        if err > tol {
            out.converged = false;
        }
        for (acc, v) in out.value.iter_mut().zip(value) {
            *acc += v;
        }
        out.error += err;
        return;
    }
    let m = 0.5 * (a + b);
    let left = gk15(f, a, m);
    let right = gk15(f, m, b);
    adapt(f, a, m, left, 0.5 * tol, depth + 1, out);
    adapt(f, m, b, right, 0.5 * tol, depth + 1, out);
}

/// Integrates a vector-valued function over [a, b] to absolute tolerance `tol`
/// (measured as the max-norm of the Gauss/Kronrod discrepancy).
pub fn integrate_vec<const N: usize, F>(mut f: F, a: f64, b: f64, tol: f64) -> Quadrature<N>
where
    F: FnMut(f64) -> [f64; N],
{
    let mut out = Quadrature {
        value: [0.0; N],
        error: 0.0,
        converged: true,
    };
    if a == b {
        return out;
    }
    let whole = gk15(&mut f, a, b);
    adapt(&mut f, a, b, whole, tol, 0, &mut out);
    out
}

/// Scalar version of [`integrate_vec`].
pub fn integrate<F>(mut f: F, a: f64, b: f64, tol: f64) -> Quadrature<1>
where
    F: FnMut(f64) -> f64,
{
    integrate_vec(|x| [f(x)], a, b, tol)
}

/// Gauss–Legendre nodes and weights on [-1, 1].
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n > 0, "gauss_legendre needs at least one node");
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let mut p0 = 1.0;
            let mut p1 = 0.0;
            for j in 0..n {
                let p2 = p1;
                p1 = p0;
                p0 = ((2 * j + 1) as f64 * z * p1 - j as f64 * p2) / (j + 1) as f64;
            }
            dp = n as f64 * (z * p0 - p1) / (z * z - 1.0);
            let dz = p0 / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
        w[n - 1 - i] = w[i];
    }
    (x, w)
}

/// A fixed Gauss–Legendre rule that can be mapped onto any interval.
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussLegendre {
    pub fn new(n: usize) -> Self {
        let (nodes, weights) = gauss_legendre(n);
        Self { nodes, weights }
    }

    /// (node, weight) pairs mapped onto [a, b].
    pub fn on(&self, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let c = 0.5 * (a + b);
        let h = 0.5 * (b - a);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(move |(x, w)| (c + h * x, h * w))
    }

    pub fn integrate<F: FnMut(f64) -> f64>(&self, a: f64, b: f64, mut f: F) -> f64 {
        self.on(a, b).map(|(x, w)| w * f(x)).sum()
    }
}
