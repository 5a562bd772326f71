//! Hyperlinking numbers, Wilson loops, the closed-form volume eigenvalue, and its
//! finite-kappa Gaussian-kernel approximant.
//!
//! Finite-kappa integrals are sums over segment pairs of 2-D cubatures in the two
//! local segment parameters. Pairs whose Gaussian factors are below e^-50 are skipped.
//! Work is split across segment pairs with rayon and reduced in a fixed order, so
//! results do not depend on scheduling.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::diagram::{find_crossings, Crossing};
use crate::error::{Error, Result};
use crate::geometry::{
    cross, displace_loop, project_plane, project_time, segment_closest, Box3, Hyperlink, Loop4,
    Point4, Region3, RegionPartition, Vec3,
};
use crate::kernels::{
    box_axis_factor, box_depth_factor, pairing_k, plane_axes, time_factor, Kappa,
};
use crate::quadrature::{self, Estimate, LimitEstimate, QuadratureConfig};
use crate::rep::{irrep, trace_exp_cal_e, wilson_factor, Spin};

/// Gaussian exponents beyond this are treated as zero.
const CUTOFF: f64 = 50.0;

/// Global orientation factor of the combinatorial hyperlinking number, fixed so that
/// it agrees with the kappa limit of the holonomy exponent.
pub const SK_ORIENTATION: i64 = 1;

fn time_sign(a: f64, b: f64) -> Result<i64> {
    if a == b {
        return Err(Error::GeneralPosition(
            "matter and geometric strands have equal times at a crossing".into(),
        ));
    }
    Ok(if b > a { 1 } else { -1 })
}

fn time_at(l: &Loop4, seg: usize, t: f64) -> f64 {
    let (a, b) = l.segment(seg);
    a.x0 + t * (b.x0 - a.x0)
}

/// Crossings between the projections of a matter and a geometric loop, each weighted
/// by its sign and the sign of (geometric time - matter time).
pub fn hyperlink_crossings(
    matter: &Loop4,
    geo: &Loop4,
    plane: usize,
) -> Result<Vec<(Crossing, i64)>> {
    let a = project_plane(&project_time(matter), plane)?;
    let b = project_plane(&project_time(geo), plane)?;
    find_crossings(&a, &b, (0, 1))?
        .into_iter()
        .map(|c| {
            let tau = time_sign(
                time_at(matter, c.seg_a, c.t_a),
                time_at(geo, c.seg_b, c.t_b),
            )?;
            Ok((c, tau))
        })
        .collect()
}

/// Half the sum of sign(crossing) * sign(time difference) over crossings of the two
/// projections in the given plane.
pub fn sk_combinatorial(matter: &Loop4, geo: &Loop4, plane: usize) -> Result<i64> {
    let total: i64 = hyperlink_crossings(matter, geo, plane)?
        .iter()
        .map(|(c, tau)| c.sign as i64 * tau)
        .sum();
    if total % 2 != 0 {
        return Err(Error::GeneralPosition(format!(
            "odd weighted crossing sum {total} in plane {plane}"
        )));
    }
    Ok(SK_ORIENTATION * total / 2)
}

/// Initial break points for a segment of the given length, panels no wider than
/// two Gaussian widths.
fn panel_breaks(len: f64, kappa: f64) -> Vec<f64> {
    let n = ((len * kappa / 4.0).ceil() as usize).clamp(1, 256);
    (0..=n).map(|i| i as f64 / n as f64).collect()
}

fn lerp4(a: &Point4, b: &Point4, t: f64) -> Point4 {
    Point4::new(
        a.x0 + t * (b.x0 - a.x0),
        a.x1 + t * (b.x1 - a.x1),
        a.x2 + t * (b.x2 - a.x2),
        a.x3 + t * (b.x3 - a.x3),
    )
}

fn sum_ordered(parts: Vec<Estimate>) -> Estimate {
    parts.iter().fold(
        Estimate {
            value: 0.0,
            error: 0.0,
        },
        |acc, e| Estimate {
            value: acc.value + e.value,
            error: acc.error + e.error,
        },
    )
}

/// Holonomy exponent divided by 6 pi at finite kappa:
/// (kappa^3 / 96 pi^2) sum_k int int (y' x w')_k <p^y(s), p^w(t)>_k ds dt.
///
/// Tends to the hyperlinking number of the pair as kappa grows.
pub fn sk_at_kappa(
    kappa: f64,
    matter: &Loop4,
    geo: &Loop4,
    cfg: &QuadratureConfig,
) -> Result<Estimate> {
    let pref = kappa.powi(3) / (16.0 * PI) / (6.0 * PI);
    let pairs: Vec<(usize, usize)> = (0..matter.len())
        .flat_map(|i| (0..geo.len()).map(move |j| (i, j)))
        .collect();
    let parts: Vec<Estimate> = pairs
        .par_iter()
        .map(|&(i, j)| {
            let (a0, a1) = matter.segment(i);
            let (b0, b1) = geo.segment(j);
            let da = crate::geometry::sub(&a1.spatial(), &a0.spatial());
            let db = crate::geometry::sub(&b1.spatial(), &b0.spatial());
            let c = cross(&da, &db);
            let mut weights = [0.0; 3];
            for k in 1..=3 {
                if c[k - 1] == 0.0 {
                    continue;
                }
                let (p, q) = plane_axes(k);
                let proj = |x: &Point4| [x.coord(p), x.coord(q)];
                let d = segment_closest(&proj(&a0), &proj(&a1), &proj(&b0), &proj(&b1)).2;
                if kappa * kappa * d * d / 8.0 <= CUTOFF {
                    weights[k - 1] = pref * c[k - 1];
                }
            }
            if weights.iter().all(|w| *w == 0.0) {
                return Ok(Estimate {
                    value: 0.0,
                    error: 0.0,
                });
            }
            let f = |u: f64, v: f64| {
                let y = lerp4(&a0, &a1, u);
                let w = lerp4(&b0, &b1, v);
                (1..=3)
                    .filter(|k| weights[k - 1] != 0.0)
                    .map(|k| weights[k - 1] * pairing_k(kappa, &y, &w, k))
                    .sum::<f64>()
            };
            quadrature::cubature(
                f,
                &panel_breaks(crate::geometry::norm(&da), kappa),
                &panel_breaks(crate::geometry::norm(&db), kappa),
                cfg,
            )
        })
        .collect::<Result<_>>()?;
    Ok(sum_ordered(parts))
}

/// Finite-kappa values and their extrapolated limit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KappaSeries {
    pub kappas: Vec<f64>,
    pub values: Vec<f64>,
    pub quad_errors: Vec<f64>,
    pub limit: LimitEstimate,
}

impl KappaSeries {
    /// Richardson limit over a schedule, with the quadrature errors of the last two
    /// samples added to the extrapolation error.
    pub fn from_estimates(kappas: &[f64], est: &[Estimate]) -> Result<Self> {
        let values: Vec<f64> = est.iter().map(|e| e.value).collect();
        let quad_errors: Vec<f64> = est.iter().map(|e| e.error).collect();
        let mut limit = quadrature::richardson(kappas, &values)?;
        limit.error += quad_errors.iter().rev().take(2).sum::<f64>();
        Ok(Self {
            kappas: kappas.to_vec(),
            values,
            quad_errors,
            limit,
        })
    }
}

/// sk of a matter loop against a set of geometric loops, summed, over a kappa schedule.
pub fn sk_numeric(
    matter: &Loop4,
    geos: &[Loop4],
    kappas: &[f64],
    cfg: &QuadratureConfig,
) -> Result<KappaSeries> {
    let est = kappas
        .iter()
        .map(|&k| {
            let parts = geos
                .iter()
                .map(|g| sk_at_kappa(k, matter, g, cfg))
                .collect::<Result<Vec<_>>>()?;
            Ok(sum_ordered(parts))
        })
        .collect::<Result<Vec<_>>>()?;
    KappaSeries::from_estimates(kappas, &est)
}

/// Hyperlinking number of one matter component against all geometric loops.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkEntry {
    pub component: usize,
    pub combinatorial: i64,
    pub numeric: Option<KappaSeries>,
}

/// Combinatorial sk per matter component, and the numeric series when `kappas` is nonempty.
pub fn sk_table(
    h: &Hyperlink,
    plane: usize,
    kappas: &[f64],
    cfg: &QuadratureConfig,
) -> Result<Vec<SkEntry>> {
    h.matter
        .iter()
        .enumerate()
        .map(|(u, m)| {
            let combinatorial = h
                .geometric
                .iter()
                .map(|g| sk_combinatorial(&m.curve, g, plane))
                .sum::<Result<i64>>()?;
            let numeric = if kappas.is_empty() {
                None
            } else {
                Some(sk_numeric(&m.curve, &h.geometric, kappas, cfg)?)
            };
            Ok(SkEntry {
                component: u,
                combinatorial,
                numeric,
            })
        })
        .collect()
}

/// Product over matter components of the Wilson factors.
pub fn wilson_loop(h: &Hyperlink, sk: &[f64], q: f64) -> Complex64 {
    h.matter
        .iter()
        .zip(sk)
        .map(|(m, s)| wilson_factor(m.j_plus, m.j_minus, q, *s))
        .product()
}

/// Errors when some matter loop passes through R at time zero.
pub fn check_region_disjoint(h: &Hyperlink, r: &Region3) -> Result<()> {
    for (u, m) in h.matter.iter().enumerate() {
        for i in 0..m.curve.len() {
            let (a, b) = m.curve.segment(i);
            let hits: Vec<Vec3> = if a.x0 == 0.0 && b.x0 == 0.0 {
                (0..=64)
                    .map(|k| lerp4(&a, &b, k as f64 / 64.0).spatial())
                    .collect()
            } else if (a.x0 <= 0.0 && b.x0 >= 0.0) || (a.x0 >= 0.0 && b.x0 <= 0.0) {
                let t = a.x0 / (a.x0 - b.x0);
                vec![lerp4(&a, &b, t).spatial()]
            } else {
                vec![]
            };
            if hits
                .iter()
                .any(|p| r.boxes().iter().any(|bx| bx.contains(p)))
            {
                return Err(Error::Precondition(format!(
                    "matter loop {u} meets the region at time zero (segment {i})"
                )));
            }
        }
    }
    Ok(())
}

/// Closed-form volume eigenvalue with its ingredients.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VolumeClosedForm {
    pub tdp_counts: Vec<usize>,
    /// sum_u |TDP_u| xi^+_u and sum_u |TDP_u| xi^-_u, before the 1/n root.
    pub plus_sum: f64,
    pub minus_sum: f64,
    /// The sums raised to the power 1/n.
    pub plus_weight: f64,
    pub minus_weight: f64,
    pub z_value: Complex64,
    pub v_value: Complex64,
}

/// Traces Tr_{j+} exp(-pi q sk E) and Tr_{j-} exp(pi q sk E).
pub fn component_traces(j_plus: Spin, j_minus: Spin, q: f64, sk: f64) -> (Complex64, Complex64) {
    let theta = PI * q * sk;
    (
        trace_exp_cal_e(&irrep(j_plus), Complex64::new(-theta, 0.0)),
        trace_exp_cal_e(&irrep(j_minus), Complex64::new(theta, 0.0)),
    )
}

fn weighted_product(
    h: &Hyperlink,
    q: f64,
    plus: f64,
    minus: f64,
    sk: &[f64],
) -> (f64, f64, Complex64) {
    let n = h.matter.len() as f64;
    let (wp, wm) = (plus.powf(1.0 / n), minus.powf(1.0 / n));
    let prod = h
        .matter
        .iter()
        .zip(sk)
        .map(|(m, s)| {
            let (tp, tm) = component_traces(m.j_plus, m.j_minus, q, *s);
            tp * wp + tm * wm
        })
        .product();
    (wp, wm, prod)
}

/// (q^2 pi^{3/2}/2) prod_u { [sum |TDP| xi+]^{1/n} Tr+ + [sum |TDP| xi-]^{1/n} Tr- }.
pub fn volume_operator(
    h: &Hyperlink,
    r: &Region3,
    q: f64,
    sk: &[f64],
    tdp_counts: &[usize],
) -> Result<VolumeClosedForm> {
    if h.matter.is_empty() {
        return Err(Error::Validation(
            "the volume needs at least one matter loop".into(),
        ));
    }
    if sk.len() != h.matter.len() || tdp_counts.len() != h.matter.len() {
        return Err(Error::Structural(
            "one sk and one TDP count per matter loop required".into(),
        ));
    }
    check_region_disjoint(h, r)?;
    let plus_sum: f64 = h
        .matter
        .iter()
        .zip(tdp_counts)
        .map(|(m, t)| *t as f64 * m.j_plus.casimir())
        .sum();
    let minus_sum: f64 = h
        .matter
        .iter()
        .zip(tdp_counts)
        .map(|(m, t)| *t as f64 * m.j_minus.casimir())
        .sum();
    let (plus_weight, minus_weight, prod) = weighted_product(h, q, plus_sum, minus_sum, sk);
    Ok(VolumeClosedForm {
        tdp_counts: tdp_counts.to_vec(),
        plus_sum,
        minus_sum,
        plus_weight,
        minus_weight,
        z_value: wilson_loop(h, sk, q),
        v_value: prod * (q * q * PI.powf(1.5) / 2.0),
    })
}

/// Lambda-scaled cell integral for one framed loop and its displaced copy over a box:
/// Lambda int_box dr int int (y' x w')_3 <p^y, p^r>_3 <dinv_q^{w0}, q^0> exp(-k^2 |w - r|^2 / 8).
///
/// The r-integral is done in closed form axis by axis; the remaining (s, t) integral
/// runs over segment pairs.
pub fn cell_integral(
    kappa: &Kappa,
    l: &Loop4,
    l_eps: &Loop4,
    bx: &Box3,
    cfg: &QuadratureConfig,
) -> Result<Estimate> {
    let k = kappa.kappa;
    let reach2 = (CUTOFF * 4.0).sqrt() / k;
    let reach3 = (CUTOFF * 8.0).sqrt() / k;
    let pairs: Vec<(usize, usize)> = (0..l.len())
        .flat_map(|i| (0..l_eps.len()).map(move |j| (i, j)))
        .collect();
    let parts: Vec<Estimate> = pairs
        .par_iter()
        .map(|&(i, j)| {
            let (a0, a1) = l.segment(i);
            let (b0, b1) = l_eps.segment(j);
            let det = (a1.x1 - a0.x1) * (b1.x2 - b0.x2) - (a1.x2 - a0.x2) * (b1.x1 - b0.x1);
            if det == 0.0 {
                return Ok(Estimate {
                    value: 0.0,
                    error: 0.0,
                });
            }
            let d = segment_closest(
                &[a0.x1, a0.x2],
                &[a1.x1, a1.x2],
                &[b0.x1, b0.x2],
                &[b1.x1, b1.x2],
            )
            .2;
            if k * k * d * d / 16.0 > CUTOFF {
                return Ok(Estimate {
                    value: 0.0,
                    error: 0.0,
                });
            }
            let far = |c: usize, reach: f64, pts: &[&Point4]| {
                let lo = pts.iter().map(|p| p.coord(c)).fold(f64::INFINITY, f64::min);
                let hi = pts
                    .iter()
                    .map(|p| p.coord(c))
                    .fold(f64::NEG_INFINITY, f64::max);
                lo > bx.max[c - 1] + reach || hi < bx.min[c - 1] - reach
            };
            if far(1, reach2, &[&a0, &a1, &b0, &b1])
                || far(2, reach2, &[&a0, &a1, &b0, &b1])
                || far(3, reach3, &[&b0, &b1])
            {
                return Ok(Estimate {
                    value: 0.0,
                    error: 0.0,
                });
            }
            let pref = kappa.lambda * det;
            let f = |u: f64, v: f64| {
                let y = lerp4(&a0, &a1, u);
                let w = lerp4(&b0, &b1, v);
                pref * box_axis_factor(k, y.x1, w.x1, bx.min[0], bx.max[0])
                    * box_axis_factor(k, y.x2, w.x2, bx.min[1], bx.max[1])
                    * box_depth_factor(k, y.x3, w.x3, bx.min[2], bx.max[2])
                    * time_factor(k, y.x0)
                    * time_factor(k, w.x0)
            };
            let la = ((a1.x1 - a0.x1).powi(2) + (a1.x2 - a0.x2).powi(2) + (a1.x3 - a0.x3).powi(2))
                .sqrt();
            let lb = ((b1.x1 - b0.x1).powi(2) + (b1.x2 - b0.x2).powi(2) + (b1.x3 - b0.x3).powi(2))
                .sqrt();
            quadrature::cubature(f, &panel_breaks(la, k), &panel_breaks(lb, k), cfg)
        })
        .collect::<Result<_>>()?;
    Ok(sum_ordered(parts))
}

/// Finite-kappa volume approximant at one displacement.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KappaApprox {
    pub kappa: f64,
    pub eps: f64,
    pub value: Complex64,
    /// kappa_tilde sum_cells sum_u |I| xi^+_u and the same with xi^-.
    pub plus_bracket: f64,
    pub minus_bracket: f64,
    /// Lambda-scaled signed cell integrals, indexed [cell][component].
    pub cell_values: Vec<Vec<f64>>,
    pub sk_kappa: Vec<f64>,
    /// Propagated quadrature error bound on `value`.
    pub error: f64,
}

/// Evaluates the finite-kappa approximant of the volume eigenvalue.
///
/// For each cell and matter loop the signed integral of the loop against its
/// eps-displaced copy is taken in absolute value and weighted by the Casimirs; the
/// bracketed sums are raised to 1/n and multiply the finite-kappa holonomy traces.
pub fn volume_kappa_approx(
    h: &Hyperlink,
    q: f64,
    kappa: f64,
    eps: f64,
    partition: &RegionPartition,
    cfg: &QuadratureConfig,
) -> Result<KappaApprox> {
    if h.matter.is_empty() {
        return Err(Error::Validation(
            "the volume needs at least one matter loop".into(),
        ));
    }
    let kp = Kappa::new(kappa)?;
    let displaced: Vec<Loop4> = h
        .matter
        .iter()
        .map(|m| displace_loop(&m.curve, &m.frame, eps))
        .collect::<Result<_>>()?;
    let ratio = kp.kappa_tilde / kp.lambda;
    let mut cell_values = Vec::with_capacity(partition.cells.len());
    let (mut plus, mut minus, mut abs_err_plus, mut abs_err_minus) = (0.0, 0.0, 0.0, 0.0);
    for cell in &partition.cells {
        let mut row = Vec::with_capacity(h.matter.len());
        for (u, m) in h.matter.iter().enumerate() {
            let e = cell_integral(&kp, &m.curve, &displaced[u], &cell.bx, cfg)?;
            row.push(e.value);
            plus += ratio * e.value.abs() * m.j_plus.casimir();
            minus += ratio * e.value.abs() * m.j_minus.casimir();
            abs_err_plus += ratio * e.error * m.j_plus.casimir();
            abs_err_minus += ratio * e.error * m.j_minus.casimir();
        }
        cell_values.push(row);
    }
    let sk_kappa: Vec<f64> = h
        .matter
        .iter()
        .map(|m| {
            let parts = h
                .geometric
                .iter()
                .map(|g| sk_at_kappa(kappa, &m.curve, g, cfg))
                .collect::<Result<Vec<_>>>()?;
            Ok(sum_ordered(parts).value)
        })
        .collect::<Result<_>>()?;
    let (_, _, prod) = weighted_product(h, q, plus, minus, &sk_kappa);
    let value = prod * (q * q);
    // First-order propagation of the bracket errors through the 1/n roots.
    let n = h.matter.len() as f64;
    let rel = |err: f64, s: f64| if s > 0.0 { err / (n * s) } else { 0.0 };
    let error = value.norm() * (rel(abs_err_plus, plus) + rel(abs_err_minus, minus)) * n;
    Ok(KappaApprox {
        kappa,
        eps,
        value,
        plus_bracket: plus,
        minus_bracket: minus,
        cell_values,
        sk_kappa,
        error,
    })
}

/// One row of a convergence table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRow {
    pub kappa: f64,
    pub eps: f64,
    pub value: Complex64,
    pub target: Complex64,
    pub abs_error: f64,
}

/// Per-displacement kappa extrapolation in a limit study.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpsLimit {
    pub eps: f64,
    pub limit: LimitEstimate,
    /// Distance to the target decreases along the kappa schedule.
    pub monotone: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LimitStudy {
    pub rows: Vec<ConvergenceRow>,
    pub per_eps: Vec<EpsLimit>,
    /// Each extrapolated value differs from the previous displacement's by less than
    /// the sum of their extrapolation errors.
    pub eps_stable: bool,
}

/// Runs the approximant over a kappa x eps grid, extrapolating in kappa for each eps.
///
/// The approximant is real for real traces; extrapolation uses the real part.
pub fn limit_study(
    h: &Hyperlink,
    q: f64,
    partition: &RegionPartition,
    kappas: &[f64],
    eps_list: &[f64],
    target: Complex64,
    cfg: &QuadratureConfig,
) -> Result<LimitStudy> {
    let mut rows = Vec::new();
    let mut per_eps = Vec::new();
    for &eps in eps_list {
        let mut est = Vec::new();
        for &k in kappas {
            let a = volume_kappa_approx(h, q, k, eps, partition, cfg)?;
            rows.push(ConvergenceRow {
                kappa: k,
                eps,
                value: a.value,
                target,
                abs_error: (a.value - target).norm(),
            });
            est.push(Estimate {
                value: a.value.re,
                error: a.error,
            });
        }
        let series = KappaSeries::from_estimates(kappas, &est)?;
        let errs: Vec<f64> = est.iter().map(|e| (e.value - target.re).abs()).collect();
        per_eps.push(EpsLimit {
            eps,
            limit: series.limit,
            monotone: errs.windows(2).all(|w| w[1] < w[0]),
        });
    }
    let eps_stable = per_eps
        .windows(2)
        .all(|w| (w[1].limit.value - w[0].limit.value).abs() < w[0].limit.error + w[1].limit.error);
    Ok(LimitStudy {
        rows,
        per_eps,
        eps_stable,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{Frame, MatterLoop};
    use approx::assert_relative_eq;
    use std::f64::consts::TAU;

    fn ring(n: usize, t: f64, phase: f64, f: impl Fn(f64) -> Vec3) -> Loop4 {
        Loop4::new(
            (0..n)
                .map(|i| {
                    let p = f(TAU * (i as f64 + phase) / n as f64);
                    Point4::new(t, p[0], p[1], p[2])
                })
                .collect(),
        )
        .unwrap()
    }

    fn spin(j: f64) -> Spin {
        Spin::new(j).unwrap()
    }

    fn matter(l: Loop4, jp: f64, jm: f64) -> MatterLoop {
        let n = l.len();
        let frame = Frame::new(&l, vec![[0.2, 0.1, 1.0]; n]).unwrap();
        MatterLoop {
            curve: l,
            frame,
            j_plus: spin(jp),
            j_minus: spin(jm),
        }
    }

    #[test]
    fn split_pair_has_zero_sk() {
        let a = ring(32, 0.0, 0.1, |t| [t.cos(), t.sin(), 0.0]);
        let b = ring(32, 0.5, 0.2, |t| [6.0 + t.cos(), 0.0, t.sin()]);
        assert_eq!(sk_combinatorial(&a, &b, 3).unwrap(), 0);
        let e = sk_at_kappa(4.0, &a, &b, &QuadratureConfig::default()).unwrap();
        assert!(e.value.abs() < 1e-6);
    }

    #[test]
    fn hopf_sk_numeric_matches_combinatorial() {
        let a = ring(48, 0.0, 0.123, |t| [t.cos(), t.sin(), 0.0]);
        let b = ring(48, 0.5, 0.371, |t| [1.0 + t.cos(), 0.0, t.sin()]);
        let comb = sk_combinatorial(&a, &b, 3).unwrap();
        assert_eq!(comb.abs(), 1);
        let cfg = QuadratureConfig {
            abs_tol: 1e-9,
            rel_tol: 1e-8,
            ..Default::default()
        };
        let v = sk_at_kappa(16.0, &a, &b, &cfg).unwrap().value;
        assert!((v - comb as f64).abs() < 0.01, "sk at kappa 16 = {v}");
    }

    #[test]
    fn volume_hand_value() {
        // One component, |TDP| = 2, j+ = j- = 1/2, sk = 0, q = 1: (pi^{3/2}/2)(2 * 3/4)(2 + 2).
        let a = ring(16, 1.0, 0.1, |t| [t.cos(), t.sin(), 0.0]);
        let h = Hyperlink {
            matter: vec![matter(a, 0.5, 0.5)],
            geometric: vec![],
        };
        let r = Region3::new(vec![Box3::new([-2.0; 3], [2.0; 3]).unwrap()]).unwrap();
        let v = volume_operator(&h, &r, 1.0, &[0.0], &[2]).unwrap();
        assert_relative_eq!(v.v_value.re, 3.0 * PI.powf(1.5), max_relative = 1e-14);
        let none = volume_operator(&h, &r, 1.0, &[0.0], &[0]).unwrap();
        assert_eq!(none.v_value, Complex64::new(0.0, 0.0));
        let v2 = volume_operator(&h, &r, 2.0, &[0.0], &[2]).unwrap();
        assert_relative_eq!(v2.v_value.re, 4.0 * v.v_value.re, max_relative = 1e-14);
    }

    #[test]
    fn volume_precondition() {
        let a = ring(16, 0.0, 0.1, |t| [t.cos(), t.sin(), 0.0]);
        let h = Hyperlink {
            matter: vec![matter(a, 0.5, 0.5)],
            geometric: vec![],
        };
        let r = Region3::new(vec![Box3::new([0.5, -0.5, -0.5], [1.5, 0.5, 0.5]).unwrap()]).unwrap();
        assert_eq!(
            volume_operator(&h, &r, 1.0, &[0.0], &[2])
                .unwrap_err()
                .category(),
            "precondition"
        );
    }

    #[test]
    fn wilson_examples() {
        let a = ring(16, 1.0, 0.1, |t| [t.cos(), t.sin(), 0.0]);
        let b = ring(16, 1.0, 0.1, |t| [5.0 + t.cos(), t.sin(), 0.0]);
        let h0 = Hyperlink {
            matter: vec![matter(a.clone(), 0.0, 0.0), matter(b.clone(), 0.0, 0.0)],
            geometric: vec![],
        };
        assert_relative_eq!(wilson_loop(&h0, &[0.7, -1.0], 1.0).re, 4.0, epsilon = 1e-13);
        let h1 = Hyperlink {
            matter: vec![matter(a.clone(), 0.5, 0.0)],
            geometric: vec![],
        };
        let want = 2.0 * (3f64.sqrt() * PI / 2.0).cos() + 1.0;
        assert_relative_eq!(wilson_loop(&h1, &[1.0], 1.0).re, want, epsilon = 1e-13);
        let h2 = Hyperlink {
            matter: vec![matter(a, 1.0, 0.5), matter(b, 1.5, 2.0)],
            geometric: vec![],
        };
        assert_relative_eq!(
            wilson_loop(&h2, &[0.0, 0.0], 1.0).re,
            5.0 * 9.0,
            epsilon = 1e-12
        );
    }

    #[test]
    fn far_region_cell_integral_vanishes() {
        let a = ring(32, 1.0, 0.1, |t| [t.cos(), t.sin(), 0.0]);
        let m = matter(a, 0.5, 0.5);
        let d = displace_loop(&m.curve, &m.frame, 0.1).unwrap();
        let bx = Box3::new([10.0; 3], [11.0; 3]).unwrap();
        let e = cell_integral(
            &Kappa::new(8.0).unwrap(),
            &m.curve,
            &d,
            &bx,
            &QuadratureConfig::default(),
        )
        .unwrap();
        assert_eq!(e.value, 0.0);
    }
}
