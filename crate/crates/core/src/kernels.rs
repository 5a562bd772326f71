//! Gaussian kernels indexed by the sharpness kappa, the time antiderivative of the
//! one-dimensional kernel, their pairings, and numerical verifiers for the limit
//! identities they satisfy.
//!
//! All kernels are Gaussians, so every inner product reduces to an error function.
//! The `*_numeric` variants integrate the defining expressions directly and serve as
//! cross-checks.

use std::f64::consts::{PI, SQRT_2};
use std::sync::OnceLock;

use libm::{erf, erfc};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Point4;
use crate::quadrature::{self, Estimate, QuadratureConfig};

const SQRT_PI: f64 = 1.772_453_850_905_516;
const SQRT_2PI: f64 = 2.506_628_274_631_000_7;

/// Kernel sharpness with its derived normalising constants.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Kappa {
    pub kappa: f64,
    /// Volume prefactor (sqrt(pi)/2)(k/4)(k/sqrt(2 pi))^2 (k^2/8pi)^2.
    pub kappa_tilde: f64,
    /// Crossing prefactor (k/4pi)(k/sqrt(2 pi))^2 (k^2/8pi)^2.
    pub lambda: f64,
    /// (k/(2 sqrt(2 pi)))(k^2/8pi)^2.
    pub delta: f64,
}

impl Kappa {
    pub fn new(kappa: f64) -> Result<Self> {
        if !(kappa.is_finite() && kappa > 0.0) {
            return Err(Error::Domain(format!(
                "kappa must be positive, got {kappa}"
            )));
        }
        let g = (kappa / SQRT_2PI).powi(2);
        let h = (kappa * kappa / (8.0 * PI)).powi(2);
        Ok(Self {
            kappa,
            kappa_tilde: (SQRT_PI / 2.0) * (kappa / 4.0) * g * h,
            lambda: kappa / (4.0 * PI) * g * h,
            delta: kappa / (2.0 * SQRT_2PI) * h,
        })
    }
}

/// Standard normal distribution function.
pub fn norm_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / SQRT_2)
}

/// q_kappa^x(t) = sqrt(kappa) (2 pi)^{-1/4} exp(-kappa^2 (t-x)^2 / 4).
pub fn q_kernel(kappa: f64, x: f64, t: f64) -> f64 {
    let d = t - x;
    kappa.sqrt() * (2.0 * PI).powf(-0.25) * (-kappa * kappa * d * d / 4.0).exp()
}

/// Symmetric antiderivative of `q_kernel` in t: half the integral from the left minus half from the right.
pub fn dinv_q(kappa: f64, x: f64, t: f64) -> f64 {
    SQRT_PI * (2.0 * PI).powf(-0.25) / kappa.sqrt() * erf(kappa * (t - x) / 2.0)
}

/// `dinv_q` from its defining integral.
pub fn dinv_q_numeric(kappa: f64, x: f64, t: f64, cfg: &QuadratureConfig) -> Result<f64> {
    let r = cfg.radius_sigmas * SQRT_2 / kappa;
    let f = |u: f64| q_kernel(kappa, x, u);
    let lo = x - r;
    let hi = x + r;
    let left = if t > lo {
        quadrature::integrate(f, lo, t.min(hi), cfg)?.value
    } else {
        0.0
    };
    let right = if t < hi {
        quadrature::integrate(f, t.max(lo), hi, cfg)?.value
    } else {
        0.0
    };
    Ok(0.5 * left - 0.5 * right)
}

/// <dinv_q^s, q^z> over the real line, in closed form: (sqrt(2 pi)/kappa) erf(kappa (z - s) / (2 sqrt 2)).
pub fn inner_dinvq_q(kappa: f64, s: f64, z: f64) -> f64 {
    SQRT_2PI / kappa * erf(kappa * (z - s) / (2.0 * SQRT_2))
}

/// `inner_dinvq_q` by adaptive quadrature of the product of kernels.
pub fn inner_dinvq_q_numeric(
    kappa: f64,
    s: f64,
    z: f64,
    cfg: &QuadratureConfig,
) -> Result<Estimate> {
    let r = cfg.radius_sigmas * SQRT_2 / kappa;
    let breaks = quadrature::uniform_breaks(z - r, z + r, 2.0 / kappa);
    quadrature::integrate_breaks(
        |t| dinv_q(kappa, s, t) * q_kernel(kappa, z, t),
        &breaks,
        cfg,
    )
}

/// Overlap of two planar kernels: exp(-kappa^2 |a-b|^2 / 8).
pub fn overlap_2d(kappa: f64, a: [f64; 2], b: [f64; 2]) -> f64 {
    let d2 = (a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2);
    (-kappa * kappa * d2 / 8.0).exp()
}

/// Coordinates kept when projecting onto the plane with normal e_k, in right-handed order.
pub fn plane_axes(k: usize) -> (usize, usize) {
    match k {
        1 => (2, 3),
        2 => (3, 1),
        3 => (1, 2),
        _ => panic!("plane index must be 1, 2 or 3"),
    }
}

/// The pairing <p^x, p^y>_k: planar overlap transverse to e_k, an odd erf factor in
/// x_k - y_k, and the time factor <dinv_q^{x0}, q^{y0}>.
pub fn pairing_k(kappa: f64, x: &Point4, y: &Point4, k: usize) -> f64 {
    let (i, j) = plane_axes(k);
    let planar = overlap_2d(kappa, [x.coord(i), x.coord(j)], [y.coord(i), y.coord(j)]);
    let along = kappa * inner_dinvq_q(kappa, y.coord(k), x.coord(k));
    planar * along * inner_dinvq_q(kappa, x.x0, y.x0)
}

/// Residual of the planar Gaussian product identity
/// (k^2/8pi)^2 int exp(-k^2|a-z|^2/8) exp(-k^2|b-z|^2/8) dz = (k^2/16pi) exp(-k^2|a-b|^2/16).
pub fn gaussian_product_identity_residual(
    kappa: f64,
    a: [f64; 2],
    b: [f64; 2],
    cfg: &QuadratureConfig,
) -> Result<f64> {
    let c = (kappa * kappa / (8.0 * PI)).powi(2);
    let r = cfg.radius_sigmas * 2.0 / kappa;
    let xs = quadrature::uniform_breaks(a[0].min(b[0]) - r, a[0].max(b[0]) + r, 4.0 / kappa);
    let ys = quadrature::uniform_breaks(a[1].min(b[1]) - r, a[1].max(b[1]) + r, 4.0 / kappa);
    let lhs = quadrature::cubature(
        |x, y| c * overlap_2d(kappa, a, [x, y]) * overlap_2d(kappa, b, [x, y]),
        &xs,
        &ys,
        cfg,
    )?
    .value;
    let d2 = (a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2);
    let rhs = kappa * kappa / (16.0 * PI) * (-kappa * kappa * d2 / 16.0).exp();
    Ok((lhs - rhs).abs())
}

/// (kappa^2/4pi) int <dinv_q^s, q^z> exp(-kappa^2 (t-z)^2 / 8) dz, which tends to sgn(t - s).
pub fn sgn_limit_value(kappa: f64, s: f64, t: f64, cfg: &QuadratureConfig) -> Result<f64> {
    if s == t {
        return Err(Error::Domain("sgn_limit_value needs s != t".into()));
    }
    let r = cfg.radius_sigmas * 2.0 / kappa;
    let breaks = quadrature::uniform_breaks(t - r, t + r, 2.0 / kappa);
    let f = |z: f64| inner_dinvq_q(kappa, s, z) * (-kappa * kappa * (t - z).powi(2) / 8.0).exp();
    let e = quadrature::integrate_breaks(f, &breaks, cfg)?;
    Ok(kappa * kappa / (4.0 * PI) * e.value)
}

fn gl20() -> &'static (Vec<f64>, Vec<f64>) {
    static RULE: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    RULE.get_or_init(|| quadrature::gauss_legendre(20))
}

/// Bivariate standard normal upper orthant P(X > h, Y > k) with correlation `r`, |r| < 1.
///
/// Uses the integral over the angle asin(r) of the exponential in Plackett's identity.
pub fn bvn_upper(h: f64, k: f64, r: f64) -> f64 {
    let base = norm_cdf(-h) * norm_cdf(-k);
    if r == 0.0 {
        return base;
    }
    let top = r.asin();
    let (x, w) = gl20();
    let mut sum = 0.0;
    for (xi, wi) in x.iter().zip(w) {
        let th = 0.5 * top * (xi + 1.0);
        let (s, c) = th.sin_cos();
        sum += wi * (-(h * h + k * k - 2.0 * h * k * s) / (2.0 * c * c)).exp();
    }
    base + sum * 0.5 * top / (2.0 * PI)
}

/// Bivariate standard normal distribution function P(X < x, Y < y).
pub fn bvn_cdf(x: f64, y: f64, r: f64) -> f64 {
    bvn_upper(-x, -y, r)
}

/// int_a^b exp(-k^2 (y - r)^2 / 8) exp(-k^2 (yb - r)^2 / 8) dr, the per-axis
/// factor of a box integral over two planar kernels.
pub fn box_axis_factor(kappa: f64, y: f64, yb: f64, a: f64, b: f64) -> f64 {
    let m = 0.5 * (y + yb);
    (-kappa * kappa * (y - yb).powi(2) / 16.0).exp()
        * (SQRT_PI / kappa)
        * (erf(kappa * (b - m) / 2.0) - erf(kappa * (a - m) / 2.0))
}

/// int_a^b sqrt(2 pi) erf(k (y3 - r) / (2 sqrt 2)) exp(-k^2 (yb3 - r)^2 / 8) dr in closed form.
///
/// Writing r = yb3 + sigma z with sigma = 2/k, the erf becomes 2 Phi(h sqrt2 - z) - 1 and the
/// integral of Phi against the normal density is a bivariate normal probability with
/// correlation 1/sqrt 2.
pub fn box_depth_factor(kappa: f64, y3: f64, yb3: f64, a: f64, b: f64) -> f64 {
    let sigma = 2.0 / kappa;
    let alpha = (a - yb3) / sigma;
    let beta = (b - yb3) / sigma;
    let h = kappa * (y3 - yb3) / (2.0 * SQRT_2);
    let rho = std::f64::consts::FRAC_1_SQRT_2;
    let two_phi2 = 2.0 * (bvn_cdf(beta, h, rho) - bvn_cdf(alpha, h, rho));
    SQRT_2PI * sigma * SQRT_2PI * (two_phi2 - (norm_cdf(beta) - norm_cdf(alpha)))
}

/// Closed-form time factor -(sqrt(2 pi)/kappa) erf(kappa t / (2 sqrt 2)) = <dinv_q^t, q^0>.
pub fn time_factor(kappa: f64, t: f64) -> f64 {
    inner_dinvq_q(kappa, t, 0.0)
}

/// Two-point Richardson limit of `f(kappa)` over a schedule, with the per-kappa values.
pub fn limit_over<F>(kappas: &[f64], f: F) -> Result<(Vec<f64>, quadrature::LimitEstimate)>
where
    F: Fn(f64) -> Result<f64>,
{
    let vals = kappas.iter().map(|&k| f(k)).collect::<Result<Vec<_>>>()?;
    let lim = quadrature::richardson(kappas, &vals)?;
    Ok((vals, lim))
}
