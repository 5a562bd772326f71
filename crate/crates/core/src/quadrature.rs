//! Adaptive Gauss-Kronrod integration in one and two dimensions, Gauss-Legendre
//! rules, and two-point Richardson extrapolation in 1/kappa.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

// 15-point Kronrod abscissae on [-1, 1]; odd indices are the 7-point Gauss nodes.
const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_5,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_48,
    0.0,
];

const WGK: [f64; 8] = [
    0.022_935_322_010_529_224,
    0.063_092_092_629_978_56,
    0.104_790_010_322_250_19,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_42,
    0.204_432_940_075_298_89,
    0.209_482_141_084_727_82,
];

const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_64,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// Tolerances and limits for the adaptive integrators.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureConfig {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_subdivisions: usize,
    /// Gaussian integrands are truncated this many standard deviations from their centre.
    pub radius_sigmas: f64,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        Self {
            abs_tol: 1e-12,
            rel_tol: 1e-10,
            max_subdivisions: 4000,
            radius_sigmas: 12.0,
        }
    }
}

impl QuadratureConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.abs_tol > 0.0 && self.rel_tol > 0.0 && self.radius_sigmas > 0.0) {
            return Err(Error::Structural(
                "quadrature tolerances and radius must be positive".into(),
            ));
        }
        if self.max_subdivisions == 0 {
            return Err(Error::Structural(
                "max_subdivisions must be positive".into(),
            ));
        }
        Ok(())
    }

    fn target(&self, value: f64) -> f64 {
        self.abs_tol.max(self.rel_tol * value.abs())
    }
}

/// An integral value together with its estimated absolute error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub error: f64,
}

fn rescale_error(err: f64, res_abs: f64, res_asc: f64) -> f64 {
    let mut e = err.abs();
    if res_asc != 0.0 && e != 0.0 {
        e = res_asc * (200.0 * e / res_asc).powf(1.5).min(1.0);
    }
    if res_abs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        e = e.max(50.0 * f64::EPSILON * res_abs);
    }
    e
}

/// One 15-point Kronrod panel on `[a, b]`.
pub fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> Estimate {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut fv = [0.0f64; 15];
    fv[7] = fc;
    let mut k = WGK[7] * fc;
    let mut g = WG[3] * fc;
    for j in 0..7 {
        let x = h * XGK[j];
        let (f1, f2) = (f(c - x), f(c + x));
        fv[j] = f1;
        fv[14 - j] = f2;
        k += WGK[j] * (f1 + f2);
        if j % 2 == 1 {
            g += WG[j / 2] * (f1 + f2);
        }
    }
    let mean = 0.5 * k;
    let mut res_abs = WGK[7] * fc.abs();
    let mut res_asc = WGK[7] * (fc - mean).abs();
    for j in 0..7 {
        res_abs += WGK[j] * (fv[j].abs() + fv[14 - j].abs());
        res_asc += WGK[j] * ((fv[j] - mean).abs() + (fv[14 - j] - mean).abs());
    }
    let ah = h.abs();
    Estimate {
        value: k * h,
        error: rescale_error((k - g) * h, res_abs * ah, res_asc * ah),
    }
}

struct Panel1 {
    a: f64,
    b: f64,
    est: Estimate,
}

impl PartialEq for Panel1 {
    fn eq(&self, other: &Self) -> bool {
        self.est.error == other.est.error
    }
}
impl Eq for Panel1 {}
impl PartialOrd for Panel1 {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel1 {
    fn cmp(&self, other: &Self) -> Ordering {
        self.est.error.total_cmp(&other.est.error)
    }
}

/// Adaptive integration of `f` over `[a, b]`.
pub fn integrate<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    cfg: &QuadratureConfig,
) -> Result<Estimate> {
    integrate_breaks(f, &[a, b], cfg)
}

/// Adaptive integration starting from the panels delimited by `breaks` (ascending).
pub fn integrate_breaks<F: Fn(f64) -> f64>(
    f: F,
    breaks: &[f64],
    cfg: &QuadratureConfig,
) -> Result<Estimate> {
    if breaks.len() < 2 {
        return Ok(Estimate {
            value: 0.0,
            error: 0.0,
        });
    }
    let mut heap = BinaryHeap::new();
    let (mut value, mut error) = (0.0, 0.0);
    for w in breaks.windows(2) {
        let est = gk15(&f, w[0], w[1]);
        value += est.value;
        error += est.error;
        heap.push(Panel1 {
            a: w[0],
            b: w[1],
            est,
        });
    }
    let mut splits = 0;
    while error > cfg.target(value) {
        if splits >= cfg.max_subdivisions {
            return Err(Error::Quadrature(format!(
                "1-D error {error:.3e} above target {:.3e} after {splits} subdivisions",
                cfg.target(value)
            )));
        }
        let Some(p) = heap.pop() else { break };
        let m = 0.5 * (p.a + p.b);
        let l = gk15(&f, p.a, m);
        let r = gk15(&f, m, p.b);
        value += l.value + r.value - p.est.value;
        error += l.error + r.error - p.est.error;
        heap.push(Panel1 {
            a: p.a,
            b: m,
            est: l,
        });
        heap.push(Panel1 {
            a: m,
            b: p.b,
            est: r,
        });
        splits += 1;
    }
    // Re-sum to shed the drift of incremental updates.
    let (mut v, mut e) = (0.0, 0.0);
    let mut panels = heap.into_vec();
    panels.sort_by(|x, y| x.a.total_cmp(&y.a));
    for p in &panels {
        v += p.est.value;
        e += p.est.error;
    }
    Ok(Estimate { value: v, error: e })
}

/// Evenly spaced break points covering `[a, b]` with at most `max_width` per panel.
pub fn uniform_breaks(a: f64, b: f64, max_width: f64) -> Vec<f64> {
    let n = (((b - a) / max_width).ceil() as usize).max(1);
    (0..=n).map(|i| a + (b - a) * i as f64 / n as f64).collect()
}

/// One tensor-product 15x15 Kronrod panel with embedded 7x7 Gauss rule.
pub fn gk15_2d<F: Fn(f64, f64) -> f64>(f: &F, x: (f64, f64), y: (f64, f64)) -> Estimate {
    let (cx, hx) = (0.5 * (x.0 + x.1), 0.5 * (x.1 - x.0));
    let (cy, hy) = (0.5 * (y.0 + y.1), 0.5 * (y.1 - y.0));
    let node = |i: usize| {
        if i < 7 {
            -XGK[i]
        } else if i == 7 {
            0.0
        } else {
            XGK[14 - i]
        }
    };
    let wk = |i: usize| WGK[if i <= 7 { i } else { 14 - i }];
    let wg = |i: usize| -> f64 {
        let j = if i <= 7 { i } else { 14 - i };
        if j % 2 == 1 {
            WG[j / 2]
        } else if j == 7 {
            WG[3]
        } else {
            0.0
        }
    };
    let mut vals = [[0.0f64; 15]; 15];
    let (mut k, mut g) = (0.0, 0.0);
    for (i, row) in vals.iter_mut().enumerate() {
        let xi = cx + hx * node(i);
        for (j, slot) in row.iter_mut().enumerate() {
            let v = f(xi, cy + hy * node(j));
            *slot = v;
            k += wk(i) * wk(j) * v;
            g += wg(i) * wg(j) * v;
        }
    }
    let mean = 0.25 * k;
    let (mut res_abs, mut res_asc) = (0.0, 0.0);
    for (i, row) in vals.iter().enumerate() {
        for (j, v) in row.iter().enumerate() {
            let w = wk(i) * wk(j);
            res_abs += w * v.abs();
            res_asc += w * (v - mean).abs();
        }
    }
    let area = (hx * hy).abs();
    Estimate {
        value: k * hx * hy,
        error: rescale_error((k - g) * hx * hy, res_abs * area, res_asc * area),
    }
}

struct Panel2 {
    x: (f64, f64),
    y: (f64, f64),
    est: Estimate,
}

impl PartialEq for Panel2 {
    fn eq(&self, other: &Self) -> bool {
        self.est.error == other.est.error
    }
}
impl Eq for Panel2 {}
impl PartialOrd for Panel2 {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel2 {
    fn cmp(&self, other: &Self) -> Ordering {
        self.est.error.total_cmp(&other.est.error)
    }
}

/// Adaptive cubature over the rectangle spanned by the break grids `xs` x `ys`.
///
/// The panel with the largest error is bisected along its longer side until the
/// summed error meets the tolerance.
pub fn cubature<F: Fn(f64, f64) -> f64>(
    f: F,
    xs: &[f64],
    ys: &[f64],
    cfg: &QuadratureConfig,
) -> Result<Estimate> {
    let mut heap = BinaryHeap::new();
    let (mut value, mut error) = (0.0, 0.0);
    for wx in xs.windows(2) {
        for wy in ys.windows(2) {
            let est = gk15_2d(&f, (wx[0], wx[1]), (wy[0], wy[1]));
            value += est.value;
            error += est.error;
            heap.push(Panel2 {
                x: (wx[0], wx[1]),
                y: (wy[0], wy[1]),
                est,
            });
        }
    }
    let mut splits = 0;
    while error > cfg.target(value) {
        if splits >= cfg.max_subdivisions {
            return Err(Error::Quadrature(format!(
                "2-D error {error:.3e} above target {:.3e} after {splits} subdivisions",
                cfg.target(value)
            )));
        }
        let Some(p) = heap.pop() else { break };
        let halves = if p.x.1 - p.x.0 >= p.y.1 - p.y.0 {
            let m = 0.5 * (p.x.0 + p.x.1);
            [((p.x.0, m), p.y), ((m, p.x.1), p.y)]
        } else {
            let m = 0.5 * (p.y.0 + p.y.1);
            [(p.x, (p.y.0, m)), (p.x, (m, p.y.1))]
        };
        value -= p.est.value;
        error -= p.est.error;
        for (x, y) in halves {
            let est = gk15_2d(&f, x, y);
            value += est.value;
            error += est.error;
            heap.push(Panel2 { x, y, est });
        }
        splits += 1;
    }
    let mut panels = heap.into_vec();
    panels.sort_by(|a, b| a.x.0.total_cmp(&b.x.0).then(a.y.0.total_cmp(&b.y.0)));
    let (mut v, mut e) = (0.0, 0.0);
    for p in &panels {
        v += p.est.value;
        e += p.est.error;
    }
    Ok(Estimate { value: v, error: e })
}

/// Nodes and weights of the `n`-point Gauss-Legendre rule on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, 0.0);
            for k in 0..n {
                let p2 = p1;
                p1 = p0;
                p0 = ((2 * k + 1) as f64 * z * p1 - k as f64 * p2) / (k + 1) as f64;
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

/// Limit estimate from a sequence of finite-kappa values.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LimitEstimate {
    pub value: f64,
    /// Infinite when only one sample is available.
    pub error: f64,
}

/// Two-point Richardson extrapolation in 1/kappa from the last two samples.
///
/// The error estimate is `|R - f_N| + |f_N - f_{N-1}|`. A limit error is raised when
/// the last difference exceeds 1e-6 and grew relative to the previous one.
pub fn richardson(kappas: &[f64], values: &[f64]) -> Result<LimitEstimate> {
    let n = values.len();
    if n == 0 || kappas.len() != n {
        return Err(Error::Structural(
            "richardson needs matching nonempty schedules".into(),
        ));
    }
    if n == 1 {
        return Ok(LimitEstimate {
            value: values[0],
            error: f64::INFINITY,
        });
    }
    let (k1, k2) = (kappas[n - 2], kappas[n - 1]);
    let (f1, f2) = (values[n - 2], values[n - 1]);
    let d = (f2 - f1).abs();
    if n >= 3 {
        let prev = (f1 - values[n - 3]).abs();
        if d > 1e-6 && d > prev {
            return Err(Error::Limit(format!(
                "successive differences grew from {prev:.3e} to {d:.3e}"
            )));
        }
    }
    let r = (k2 * f2 - k1 * f1) / (k2 - k1);
    Ok(LimitEstimate {
        value: r,
        error: (r - f2).abs() + d,
    })
}
