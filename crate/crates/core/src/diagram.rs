//! Planar link diagrams: exact segment crossings with over/under and sign, half-twists
//! of framed knots from the displaced copy, self-linking, and half-twist counts in a region.
//!
//! Strand parameters are vertex-index based: a point at local position `t` on segment
//! `i` of an `n`-gon has parameter `(i + t) / n`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{
    displace_loop, project_plane, project_time, Frame, Hyperlink, Loop4, PlanarPolyline, Region3,
    Vec2,
};

/// Relative tolerance for general-position decisions.
const GP_TOL: f64 = 1e-10;

fn cross2(a: Vec2, b: Vec2) -> f64 {
    a[0] * b[1] - a[1] * b[0]
}

fn sub2(a: Vec2, b: Vec2) -> Vec2 {
    [a[0] - b[0], a[1] - b[1]]
}

/// +1 when (over, under) is positively oriented, -1 when negatively.
pub fn crossing_sign(tangent_over: Vec2, tangent_under: Vec2) -> Result<i8> {
    let d = cross2(tangent_over, tangent_under);
    let scale = tangent_over[0].hypot(tangent_over[1]) * tangent_under[0].hypot(tangent_under[1]);
    if scale.is_nan() || scale <= 0.0 || d.abs() <= GP_TOL * scale {
        return Err(Error::GeneralPosition(
            "tangents at a crossing are parallel or zero".into(),
        ));
    }
    Ok(if d > 0.0 { 1 } else { -1 })
}

/// A transversal crossing of two strands in the plane with normal e_k.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Crossing {
    pub plane: usize,
    pub position: Vec2,
    /// Component ids of the first and second strand.
    pub components: (usize, usize),
    pub seg_a: usize,
    pub t_a: f64,
    pub seg_b: usize,
    pub t_b: f64,
    /// Strand parameters in [0, 1).
    pub s: f64,
    pub s_bar: f64,
    /// Whether the first strand passes over (has the larger dropped coordinate).
    pub a_over: bool,
    pub sign: i8,
}

impl Crossing {
    pub fn over_component(&self) -> usize {
        if self.a_over {
            self.components.0
        } else {
            self.components.1
        }
    }

    pub fn under_component(&self) -> usize {
        if self.a_over {
            self.components.1
        } else {
            self.components.0
        }
    }
}

fn seg_bbox(p: Vec2, q: Vec2) -> [f64; 4] {
    [
        p[0].min(q[0]),
        p[1].min(q[1]),
        p[0].max(q[0]),
        p[1].max(q[1]),
    ]
}

fn bbox_disjoint(a: &[f64; 4], b: &[f64; 4], pad: f64) -> bool {
    a[0] > b[2] + pad || b[0] > a[2] + pad || a[1] > b[3] + pad || b[1] > a[3] + pad
}

fn scale_of(a: &PlanarPolyline) -> f64 {
    a.points
        .iter()
        .flatten()
        .fold(1.0f64, |m, x| m.max(x.abs()))
}

/// Intersection of segment `i` of `a` with segment `j` of `b`, or a general-position error.
fn segment_crossing(
    a: &PlanarPolyline,
    i: usize,
    b: &PlanarPolyline,
    j: usize,
    ids: (usize, usize),
) -> Result<Option<Crossing>> {
    let (p0, p1) = a.segment(i);
    let (q0, q1) = b.segment(j);
    let d1 = sub2(p1, p0);
    let d2 = sub2(q1, q0);
    let w = sub2(q0, p0);
    let denom = cross2(d1, d2);
    let l1 = d1[0].hypot(d1[1]);
    let l2 = d2[0].hypot(d2[1]);
    if denom.abs() <= GP_TOL * l1 * l2 {
        // Parallel: only an overlap of collinear segments is degenerate.
        if cross2(w, d1).abs() <= GP_TOL * l1 * (l1 + w[0].hypot(w[1])) {
            let u0 = (w[0] * d1[0] + w[1] * d1[1]) / (l1 * l1);
            let e = sub2(q1, p0);
            let u1 = (e[0] * d1[0] + e[1] * d1[1]) / (l1 * l1);
            if u0.max(u1) >= -GP_TOL && u0.min(u1) <= 1.0 + GP_TOL {
                return Err(Error::GeneralPosition(format!(
                    "collinear overlap of segments {i} and {j} in plane {}",
                    a.plane
                )));
            }
        }
        return Ok(None);
    }
    let s = cross2(w, d2) / denom;
    let t = cross2(w, d1) / denom;
    let tol_s = GP_TOL * scale_of(a) / l1;
    let tol_t = GP_TOL * scale_of(b) / l2;
    let in_s = s > -tol_s && s < 1.0 + tol_s;
    let in_t = t > -tol_t && t < 1.0 + tol_t;
    if !(in_s && in_t) {
        return Ok(None);
    }
    if s.abs() <= tol_s || (1.0 - s).abs() <= tol_s || t.abs() <= tol_t || (1.0 - t).abs() <= tol_t
    {
        return Err(Error::GeneralPosition(format!(
            "crossing at a segment endpoint (segments {i} and {j}, plane {})",
            a.plane
        )));
    }
    let da = a.depth_at(i, s);
    let db = b.depth_at(j, t);
    if (da - db).abs() <= GP_TOL * (1.0 + da.abs().max(db.abs())) {
        return Err(Error::GeneralPosition(format!(
            "equal depths at the crossing of segments {i} and {j} in plane {}",
            a.plane
        )));
    }
    let a_over = da > db;
    let sign = if a_over {
        crossing_sign(d1, d2)?
    } else {
        crossing_sign(d2, d1)?
    };
    Ok(Some(Crossing {
        plane: a.plane,
        position: [p0[0] + s * d1[0], p0[1] + s * d1[1]],
        components: ids,
        seg_a: i,
        t_a: s,
        seg_b: j,
        t_b: t,
        s: (i as f64 + s) / a.len() as f64,
        s_bar: (j as f64 + t) / b.len() as f64,
        a_over,
        sign,
    }))
}

fn sort_crossings(v: &mut [Crossing]) {
    v.sort_by(|x, y| {
        x.components
            .cmp(&y.components)
            .then(x.s.total_cmp(&y.s))
            .then(x.s_bar.total_cmp(&y.s_bar))
    });
}

/// All transversal crossings between two planar polylines, sorted by (s, s_bar).
///
/// `ids` are the component ids recorded in each crossing.
pub fn find_crossings(
    a: &PlanarPolyline,
    b: &PlanarPolyline,
    ids: (usize, usize),
) -> Result<Vec<Crossing>> {
    if a.plane != b.plane {
        return Err(Error::Structural(
            "polylines lie in different planes".into(),
        ));
    }
    let pad = GP_TOL * scale_of(a).max(scale_of(b));
    let bb: Vec<_> = (0..b.len())
        .map(|j| {
            let (q0, q1) = b.segment(j);
            seg_bbox(q0, q1)
        })
        .collect();
    let rows: Vec<Vec<Crossing>> = (0..a.len())
        .into_par_iter()
        .map(|i| {
            let (p0, p1) = a.segment(i);
            let ba = seg_bbox(p0, p1);
            let mut out = Vec::new();
            for (j, bj) in bb.iter().enumerate() {
                if bbox_disjoint(&ba, bj, pad) {
                    continue;
                }
                if let Some(c) = segment_crossing(a, i, b, j, ids)? {
                    out.push(c);
                }
            }
            Ok(out)
        })
        .collect::<Result<_>>()?;
    let mut all: Vec<Crossing> = rows.into_iter().flatten().collect();
    sort_crossings(&mut all);
    Ok(all)
}

/// Crossings of a closed planar polyline with itself (non-adjacent segments only).
pub fn find_self_crossings(a: &PlanarPolyline, id: usize) -> Result<Vec<Crossing>> {
    let n = a.len();
    let mut out = Vec::new();
    for i in 0..n {
        let (p0, p1) = a.segment(i);
        let ba = seg_bbox(p0, p1);
        for j in (i + 2)..n {
            if i == 0 && j == n - 1 {
                continue;
            }
            let (q0, q1) = a.segment(j);
            if bbox_disjoint(&ba, &seg_bbox(q0, q1), 0.0) {
                continue;
            }
            if let Some(c) = segment_crossing(a, i, a, j, (id, id))? {
                out.push(c);
            }
        }
    }
    sort_crossings(&mut out);
    Ok(out)
}

/// Sum of crossing signs.
pub fn algebraic_crossing_number(crossings: &[Crossing]) -> i64 {
    crossings.iter().map(|c| c.sign as i64).sum()
}

/// Valency-2 vertex of a framed knot diagram.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HalfTwist {
    pub plane: usize,
    pub position: Vec2,
    pub component: usize,
    pub s: f64,
    pub sign: i8,
}

fn circular_gap(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(1.0);
    d.min(1.0 - d)
}

/// Knot and displaced-copy crossings at one displacement, split into half-twists
/// (the two strand parameters nearly agree) and the rest.
struct FramedCrossings {
    half: Vec<Crossing>,
    other: Vec<Crossing>,
}

fn framed_crossings(
    l: &Loop4,
    f: &Frame,
    plane: usize,
    eps: f64,
    id: usize,
) -> Result<FramedCrossings> {
    let k = project_plane(&project_time(l), plane)?;
    let ke = project_plane(&project_time(&displace_loop(l, f, eps)?), plane)?;
    let own = find_self_crossings(&k, id)?;
    let threshold = own
        .iter()
        .map(|c| circular_gap(c.s, c.s_bar))
        .fold(f64::INFINITY, f64::min)
        / 2.0;
    let (half, other) = find_crossings(&k, &ke, (id, id))?
        .into_iter()
        .partition(|c| circular_gap(c.s, c.s_bar) < threshold);
    Ok(FramedCrossings { half, other })
}

fn check_schedule(eps_schedule: &[f64], min_len: usize) -> Result<()> {
    if eps_schedule.len() < min_len {
        return Err(Error::Structural(format!(
            "displacement schedule needs at least {min_len} entries"
        )));
    }
    if eps_schedule.iter().any(|e| e.is_nan() || *e <= 0.0)
        || eps_schedule.windows(2).any(|w| w[1] >= w[0])
    {
        return Err(Error::Structural(
            "displacement schedule must be positive and strictly decreasing".into(),
        ));
    }
    Ok(())
}

/// Half-twists of a framed loop as the stable limit of crossings between the knot
/// projection and its displaced copy over a decreasing displacement schedule.
///
/// A crossing is a half-twist when its two strand parameters are closer than half
/// the smallest parameter gap among the knot's own self-crossings (every crossing
/// counts when there are none). The count and signs must agree on the last two
/// displacements, and positions must not drift apart as the displacement shrinks.
/// Limit positions are linear extrapolations to zero displacement.
pub fn half_twists(
    l: &Loop4,
    f: &Frame,
    plane: usize,
    eps_schedule: &[f64],
    component: usize,
) -> Result<Vec<HalfTwist>> {
    check_schedule(eps_schedule, 3)?;
    let per_eps: Vec<Vec<Crossing>> = eps_schedule
        .iter()
        .map(|&e| framed_crossings(l, f, plane, e, component).map(|fc| fc.half))
        .collect::<Result<_>>()?;
    let n = per_eps.len();
    let (prev, last) = (&per_eps[n - 2], &per_eps[n - 1]);
    if prev.len() != last.len() {
        return Err(Error::UnstableFraming(format!(
            "half-twist count changed from {} to {} between eps={} and eps={}",
            prev.len(),
            last.len(),
            eps_schedule[n - 2],
            eps_schedule[n - 1]
        )));
    }
    let older = &per_eps[n - 3];
    let mut out = Vec::with_capacity(last.len());
    for c in last {
        let nearest = |v: &[Crossing]| {
            v.iter()
                .min_by(|x, y| circular_gap(x.s, c.s).total_cmp(&circular_gap(y.s, c.s)))
                .copied()
        };
        let p =
            nearest(prev).ok_or_else(|| Error::UnstableFraming("no matching half-twist".into()))?;
        if p.sign != c.sign {
            return Err(Error::UnstableFraming(format!(
                "half-twist sign flips near s={:.4}",
                c.s
            )));
        }
        let dist = |x: Vec2, y: Vec2| (x[0] - y[0]).hypot(x[1] - y[1]);
        let step = dist(c.position, p.position);
        if let Some(o) = nearest(older) {
            let before = dist(p.position, o.position);
            let scale = scale_of(&project_plane(&project_time(l), plane)?);
            if step > before + 1e-9 * scale && step > 1e-9 * scale {
                return Err(Error::UnstableFraming(format!(
                    "half-twist near s={:.4} drifts as eps shrinks",
                    c.s
                )));
            }
        }
        let (e1, e2) = (eps_schedule[n - 2], eps_schedule[n - 1]);
        let w = e2 / (e1 - e2);
        let position = [
            c.position[0] + w * (c.position[0] - p.position[0]),
            c.position[1] + w * (c.position[1] - p.position[1]),
        ];
        out.push(HalfTwist {
            plane,
            position,
            component,
            s: c.s,
            sign: c.sign,
        });
    }
    Ok(out)
}

/// Linking number of a framed knot with its displaced copy: half the signed count of
/// their crossings at the smallest displacement. Equals half the signed half-twist
/// count plus the writhe of the knot diagram.
pub fn self_linking(l: &Loop4, f: &Frame, plane: usize, eps_schedule: &[f64]) -> Result<i64> {
    half_twists(l, f, plane, eps_schedule, 0)?;
    let eps = *eps_schedule.last().unwrap();
    let fc = framed_crossings(l, f, plane, eps, 0)?;
    let total = algebraic_crossing_number(&fc.half) + algebraic_crossing_number(&fc.other);
    let prev = framed_crossings(l, f, plane, eps_schedule[eps_schedule.len() - 2], 0)?;
    let total_prev = algebraic_crossing_number(&prev.half) + algebraic_crossing_number(&prev.other);
    if total != total_prev || total % 2 != 0 {
        return Err(Error::UnstableFraming(format!(
            "signed crossing count with the displaced copy is {total_prev} then {total}"
        )));
    }
    Ok(total / 2)
}

/// Half-twists of a framed knot lying strictly inside the projection of a region.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tdp {
    pub count: usize,
    pub signed: i64,
    pub members: Vec<HalfTwist>,
}

/// Filters half-twists to the interior of the union of projected boxes.
pub fn tdp_filter(twists: &[HalfTwist], r: &Region3, plane: usize) -> Result<Tdp> {
    let (i, j) = crate::kernels::plane_axes(plane);
    let rects: Vec<[f64; 4]> = r
        .boxes()
        .iter()
        .map(|b| [b.min[i - 1], b.min[j - 1], b.max[i - 1], b.max[j - 1]])
        .collect();
    let scale = rects.iter().flatten().fold(1.0f64, |m, x| m.max(x.abs()));
    let tol = 1e-9 * scale;
    let mut members = Vec::new();
    for h in twists {
        let [x, y] = h.position;
        let inside = rects
            .iter()
            .any(|r| x > r[0] + tol && x < r[2] - tol && y > r[1] + tol && y < r[3] - tol);
        if inside {
            members.push(*h);
            continue;
        }
        let on_edge = rects
            .iter()
            .any(|r| x >= r[0] - tol && x <= r[2] + tol && y >= r[1] - tol && y <= r[3] + tol);
        if on_edge {
            return Err(Error::DegenerateRegion(format!(
                "half-twist at ({x:.6}, {y:.6}) lies on the boundary of the projected region"
            )));
        }
    }
    Ok(Tdp {
        count: members.len(),
        signed: members.iter().map(|h| h.sign as i64).sum(),
        members,
    })
}

/// |TDP(l; R)| and its members for one framed loop.
pub fn tdp(l: &Loop4, f: &Frame, r: &Region3, plane: usize, eps_schedule: &[f64]) -> Result<Tdp> {
    tdp_filter(&half_twists(l, f, plane, eps_schedule, 0)?, r, plane)
}

/// Diagram of a whole hyperlink in one plane.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinkDiagram {
    pub plane: usize,
    /// Matter components first, then geometric ones.
    pub components: Vec<PlanarPolyline>,
    /// Valency-4 vertices: crossings between distinct components and self-crossings.
    pub crossings: Vec<Crossing>,
    /// Valency-2 vertices of the framed matter components.
    pub half_twists: Vec<HalfTwist>,
}

pub fn link_diagram(h: &Hyperlink, plane: usize, eps_schedule: &[f64]) -> Result<LinkDiagram> {
    let loops = h.loops();
    let components: Vec<PlanarPolyline> = loops
        .iter()
        .map(|l| project_plane(&project_time(l), plane))
        .collect::<Result<_>>()?;
    let mut crossings = Vec::new();
    for a in 0..components.len() {
        crossings.extend(find_self_crossings(&components[a], a)?);
        for b in (a + 1)..components.len() {
            crossings.extend(find_crossings(&components[a], &components[b], (a, b))?);
        }
    }
    sort_crossings(&mut crossings);
    let mut half = Vec::new();
    for (u, m) in h.matter.iter().enumerate() {
        half.extend(half_twists(&m.curve, &m.frame, plane, eps_schedule, u)?);
    }
    Ok(LinkDiagram {
        plane,
        components,
        crossings,
        half_twists: half,
    })
}
