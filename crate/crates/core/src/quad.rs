//! Quadrature rules: Gauss-Legendre on intervals, symmetric triangle rules and
//! adaptive Gauss-Kronrod.

use std::f64::consts::PI;

/// Gauss-Legendre nodes and weights on `[-1, 1]`.
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    /// `n`-point rule, exact for polynomials of degree `2n - 1`.
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "Gauss-Legendre needs at least one node");
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let m = n.div_ceil(2);
        for i in 0..m {
            let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 1.0;
            for _ in 0..100 {
                let (p, d) = legendre(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre(n, x);
            dp = if d != 0.0 { d } else { dp };
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        if n % 2 == 1 {
            nodes[n / 2] = 0.0;
        }
        Self { nodes, weights }
    }

    /// Integrates `f` over `[a, b]`.
    pub fn integrate(&self, a: f64, b: f64, mut f: impl FnMut(f64) -> f64) -> f64 {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(mid + half * x))
            .sum::<f64>()
            * half
    }

    /// Nodes and weights mapped to `[0, 1]`.
    pub fn unit(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| (0.5 * (x + 1.0), 0.5 * w))
    }
}

fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Integrates over `[a, b]` with `panels` equal sub-intervals of an `n`-point rule.
pub fn composite(
    a: f64,
    b: f64,
    panels: usize,
    rule: &GaussLegendre,
    mut f: impl FnMut(f64) -> f64,
) -> f64 {
    let h = (b - a) / panels as f64;
    (0..panels)
        .map(|k| rule.integrate(a + k as f64 * h, a + (k + 1) as f64 * h, &mut f))
        .sum()
}

/// Triangle rule in barycentric coordinates; weights sum to one.
#[derive(Debug, Clone, Copy)]
pub struct TriangleRule {
    pub points: &'static [[f64; 3]],
    pub weights: &'static [f64],
}

const T3_POINTS: [[f64; 3]; 3] = [
    [2.0 / 3.0, 1.0 / 6.0, 1.0 / 6.0],
    [1.0 / 6.0, 2.0 / 3.0, 1.0 / 6.0],
    [1.0 / 6.0, 1.0 / 6.0, 2.0 / 3.0],
];
const T3_WEIGHTS: [f64; 3] = [1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0];

// (6 +- sqrt 15)/21 and (155 +- sqrt 15)/1200.
const B1: f64 = 0.470_142_064_105_115_1;
const A1: f64 = 1.0 - 2.0 * B1;
const B2: f64 = 0.101_286_507_323_456_3;
const A2: f64 = 1.0 - 2.0 * B2;
const W1: f64 = 0.132_394_152_788_506_2;
const W2: f64 = 0.125_939_180_544_827_2;

const T7_POINTS: [[f64; 3]; 7] = [
    [1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0],
    [A1, B1, B1],
    [B1, A1, B1],
    [B1, B1, A1],
    [A2, B2, B2],
    [B2, A2, B2],
    [B2, B2, A2],
];
const T7_WEIGHTS: [f64; 7] = [0.225, W1, W1, W1, W2, W2, W2];

/// Three-point rule, exact for degree 2.
pub const TRI3: TriangleRule = TriangleRule {
    points: &T3_POINTS,
    weights: &T3_WEIGHTS,
};
/// Seven-point rule, exact for degree 5.
pub const TRI7: TriangleRule = TriangleRule {
    points: &T7_POINTS,
    weights: &T7_WEIGHTS,
};

/// Adaptive Gauss-Kronrod (7/15) integration of `f` over `[a, b]`.
pub fn adaptive(a: f64, b: f64, tol: f64, f: &dyn Fn(f64) -> f64) -> f64 {
    if a == b {
        return 0.0;
    }
    adaptive_rec(a, b, tol, f, 0)
}

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
    0.209_482_141_084_728_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn gk15(a: f64, b: f64, f: &dyn Fn(f64) -> f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = WGK[7] * fc;
    let mut g = WG[3] * fc;
    for j in 0..7 {
        let x = h * XGK[j];
        let s = f(c - x) + f(c + x);
        k += WGK[j] * s;
        if j % 2 == 1 {
            g += WG[j / 2] * s;
        }
    }
    (k * h, ((k - g) * h).abs())
}

fn adaptive_rec(a: f64, b: f64, tol: f64, f: &dyn Fn(f64) -> f64, depth: usize) -> f64 {
    let (k, err) = gk15(a, b, f);
    if err <= tol.max(1e-15 * k.abs()) || depth >= 50 {
        return k;
    }
    let m = 0.5 * (a + b);
    adaptive_rec(a, m, 0.5 * tol, f, depth + 1) + adaptive_rec(m, b, 0.5 * tol, f, depth + 1)
}

/// Integrates `g(r) r^{-1/2}` over `[r0, r1]` (`0 <= r0 < r1`) with the substitution
/// `r = t^2`, which removes the endpoint singularity when `r0 = 0`.
pub fn inv_sqrt_weighted(
    r0: f64,
    r1: f64,
    rule: &GaussLegendre,
    mut g: impl FnMut(f64) -> f64,
) -> f64 {
    let (t0, t1) = (r0.max(0.0).sqrt(), r1.sqrt());
    rule.integrate(t0, t1, |t| 2.0 * g(t * t))
}
