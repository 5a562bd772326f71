//! Loops in R x R^3, framings, box regions, and their validation.
//!
//! Curves are closed polylines. Every operation is a pure function of immutable values.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rep::Spin;

pub type Vec3 = [f64; 3];
pub type Vec2 = [f64; 2];

/// A point with time coordinate `x0` and spatial coordinates `x1, x2, x3`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point4 {
    pub x0: f64,
    pub x1: f64,
    pub x2: f64,
    pub x3: f64,
}

impl Point4 {
    pub fn new(x0: f64, x1: f64, x2: f64, x3: f64) -> Self {
        Self { x0, x1, x2, x3 }
    }

    /// Coordinate by index, 0 being time.
    pub fn coord(&self, i: usize) -> f64 {
        match i {
            0 => self.x0,
            1 => self.x1,
            2 => self.x2,
            3 => self.x3,
            _ => panic!("coordinate index out of range"),
        }
    }

    pub fn spatial(&self) -> Vec3 {
        [self.x1, self.x2, self.x3]
    }

    pub fn is_finite(&self) -> bool {
        self.x0.is_finite() && self.x1.is_finite() && self.x2.is_finite() && self.x3.is_finite()
    }

    fn lerp(&self, o: &Point4, t: f64) -> Point4 {
        Point4::new(
            self.x0 + t * (o.x0 - self.x0),
            self.x1 + t * (o.x1 - self.x1),
            self.x2 + t * (o.x2 - self.x2),
            self.x3 + t * (o.x3 - self.x3),
        )
    }
}

pub(crate) fn sub<const N: usize>(a: &[f64; N], b: &[f64; N]) -> [f64; N] {
    std::array::from_fn(|i| a[i] - b[i])
}

pub(crate) fn dot<const N: usize>(a: &[f64; N], b: &[f64; N]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm<const N: usize>(a: &[f64; N]) -> f64 {
    dot(a, a).sqrt()
}

pub(crate) fn cross(a: &Vec3, b: &Vec3) -> Vec3 {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

pub(crate) fn lerp<const N: usize>(a: &[f64; N], b: &[f64; N], t: f64) -> [f64; N] {
    std::array::from_fn(|i| a[i] + t * (b[i] - a[i]))
}

/// Closest points between segments `p0p1` and `q0q1`: returns `(s, t, distance)`
/// with the closest points at `p0 + s (p1 - p0)` and `q0 + t (q1 - q0)`.
pub fn segment_closest<const N: usize>(
    p0: &[f64; N],
    p1: &[f64; N],
    q0: &[f64; N],
    q1: &[f64; N],
) -> (f64, f64, f64) {
    let d1 = sub(p1, p0);
    let d2 = sub(q1, q0);
    let r = sub(p0, q0);
    let a = dot(&d1, &d1);
    let e = dot(&d2, &d2);
    let f = dot(&d2, &r);
    let tiny = 1e-300;
    let (s, t) = if a <= tiny && e <= tiny {
        (0.0, 0.0)
    } else if a <= tiny {
        (0.0, (f / e).clamp(0.0, 1.0))
    } else {
        let c = dot(&d1, &r);
        if e <= tiny {
            ((-c / a).clamp(0.0, 1.0), 0.0)
        } else {
            let b = dot(&d1, &d2);
            let denom = a * e - b * b;
            let mut s = if denom > 1e-14 * a * e {
                ((b * f - c * e) / denom).clamp(0.0, 1.0)
            } else {
                0.0
            };
            let mut t = (b * s + f) / e;
            if t < 0.0 {
                t = 0.0;
                s = (-c / a).clamp(0.0, 1.0);
            } else if t > 1.0 {
                t = 1.0;
                s = ((b - c) / a).clamp(0.0, 1.0);
            }
            (s, t)
        }
    };
    let d = sub(&lerp(p0, p1, s), &lerp(q0, q1, t));
    (s, t, norm(&d))
}

/// Distance from `x` to the segment `a b`.
pub fn point_segment_distance(x: &Vec3, a: &Vec3, b: &Vec3) -> f64 {
    segment_closest(x, x, a, b).2
}

/// Closed oriented polyline in R x R^3.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Loop4 {
    vertices: Vec<Point4>,
}

impl Loop4 {
    /// Validates vertex count, finiteness, distinct consecutive spatial vertices and
    /// a simple spatial projection.
    pub fn new(vertices: Vec<Point4>) -> Result<Self> {
        if vertices.len() < 3 {
            return Err(Error::Structural(format!(
                "a loop needs at least 3 vertices, got {}",
                vertices.len()
            )));
        }
        if let Some(i) = vertices.iter().position(|p| !p.is_finite()) {
            return Err(Error::Structural(format!("vertex {i} is not finite")));
        }
        let l = Loop4 { vertices };
        let scale = l.spatial_scale();
        for (i, (a, b)) in l.spatial_segments().enumerate() {
            if norm(&sub(&b, &a)) <= 1e-12 * scale {
                return Err(Error::Structural(format!(
                    "segment {i} has zero spatial length"
                )));
            }
        }
        if let Some((i, j, d)) = l.closest_nonadjacent() {
            if d <= 1e-12 * scale {
                return Err(Error::Structural(format!(
                    "spatial projection is not simple: segments {i} and {j} meet"
                )));
            }
        }
        Ok(l)
    }

    pub fn vertices(&self) -> &[Point4] {
        &self.vertices
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    /// Segment `i` as its two endpoints; the last segment closes the loop.
    pub fn segment(&self, i: usize) -> (Point4, Point4) {
        let n = self.vertices.len();
        (self.vertices[i], self.vertices[(i + 1) % n])
    }

    pub fn spatial_segments(&self) -> impl Iterator<Item = (Vec3, Vec3)> + '_ {
        (0..self.len()).map(|i| {
            let (a, b) = self.segment(i);
            (a.spatial(), b.spatial())
        })
    }

    fn spatial_scale(&self) -> f64 {
        self.vertices
            .iter()
            .flat_map(|p| p.spatial())
            .fold(1.0, |m, x| m.max(x.abs()))
    }

    /// Spatial length of each segment.
    pub fn segment_lengths(&self) -> Vec<f64> {
        self.spatial_segments()
            .map(|(a, b)| norm(&sub(&b, &a)))
            .collect()
    }

    /// Parameter value in [0, 1) at the start of each segment, proportional to spatial arc length.
    pub fn breakpoints(&self) -> Vec<f64> {
        let lens = self.segment_lengths();
        let total: f64 = lens.iter().sum();
        let mut acc = 0.0;
        lens.iter()
            .map(|l| {
                let s = acc / total;
                acc += l;
                s
            })
            .collect()
    }

    /// Global parameter of local position `t` on segment `i`.
    pub fn parameter(&self, i: usize, t: f64) -> f64 {
        let lens = self.segment_lengths();
        let total: f64 = lens.iter().sum();
        (lens[..i].iter().sum::<f64>() + t * lens[i]) / total
    }

    /// Point at arc-length parameter `s`, taken modulo 1.
    pub fn point_at(&self, s: f64) -> Point4 {
        let lens = self.segment_lengths();
        let total: f64 = lens.iter().sum();
        let mut x = s.rem_euclid(1.0) * total;
        for (i, l) in lens.iter().enumerate() {
            if x <= *l || i + 1 == lens.len() {
                let (a, b) = self.segment(i);
                return a.lerp(&b, (x / l).min(1.0));
            }
            x -= l;
        }
        unreachable!()
    }

    fn closest_nonadjacent(&self) -> Option<(usize, usize, f64)> {
        let n = self.len();
        let segs: Vec<_> = self.spatial_segments().collect();
        let mut best: Option<(usize, usize, f64)> = None;
        for i in 0..n {
            for j in (i + 2)..n {
                if i == 0 && j == n - 1 {
                    continue;
                }
                let d = segment_closest(&segs[i].0, &segs[i].1, &segs[j].0, &segs[j].1).2;
                if best.is_none_or(|b| d < b.2) {
                    best = Some((i, j, d));
                }
            }
        }
        best
    }

    /// Same loop traversed backwards.
    pub fn reversed(&self) -> Loop4 {
        let mut v = self.vertices.clone();
        v.reverse();
        Loop4 { vertices: v }
    }
}

/// Unit normal field sampled at the vertices of a loop.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Frame {
    normals: Vec<Vec3>,
}

impl Frame {
    /// Normalises each vector and checks it is transverse to both adjacent segments.
    pub fn new(l: &Loop4, normals: Vec<Vec3>) -> Result<Self> {
        if normals.len() != l.len() {
            return Err(Error::Structural(format!(
                "frame has {} normals for {} vertices",
                normals.len(),
                l.len()
            )));
        }
        let n = l.len();
        let mut out = Vec::with_capacity(n);
        for (i, v) in normals.iter().enumerate() {
            let m = norm(v);
            if !(m.is_finite() && m > 1e-12) {
                return Err(Error::Structural(format!(
                    "frame normal {i} is zero or not finite"
                )));
            }
            let u = [v[0] / m, v[1] / m, v[2] / m];
            for seg in [(i + n - 1) % n, i] {
                let (a, b) = l.segment(seg);
                let t = sub(&b.spatial(), &a.spatial());
                if norm(&cross(&u, &t)) <= 1e-9 * norm(&t) {
                    return Err(Error::Structural(format!(
                        "frame normal {i} is parallel to segment {seg}"
                    )));
                }
            }
            out.push(u);
        }
        Ok(Frame { normals: out })
    }

    pub fn normals(&self) -> &[Vec3] {
        &self.normals
    }
}

/// A colored component of the matter hyperlink.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatterLoop {
    pub curve: Loop4,
    pub frame: Frame,
    pub j_plus: Spin,
    pub j_minus: Spin,
}

/// Matter (colored, framed) and geometric (uncolored) components.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Hyperlink {
    pub matter: Vec<MatterLoop>,
    pub geometric: Vec<Loop4>,
}

impl Hyperlink {
    /// Every loop, matter components first.
    pub fn loops(&self) -> Vec<&Loop4> {
        self.matter
            .iter()
            .map(|m| &m.curve)
            .chain(self.geometric.iter())
            .collect()
    }
}

/// One rule breach found by [`validate_timelike`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Violation {
    /// Two points closer than the separation threshold.
    Separation {
        loop_a: usize,
        seg_a: usize,
        loop_b: usize,
        seg_b: usize,
        distance: f64,
    },
    /// Two points sharing two spatial coordinates at (nearly) equal times.
    SharedCoordinates {
        loop_a: usize,
        seg_a: usize,
        loop_b: usize,
        seg_b: usize,
        axes: (usize, usize),
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
    /// Smallest spatial distance seen between distinct loops or non-adjacent segments.
    pub min_distance: f64,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

fn segment_bbox(a: &Vec3, b: &Vec3) -> (Vec3, Vec3) {
    (
        std::array::from_fn(|i| a[i].min(b[i])),
        std::array::from_fn(|i| a[i].max(b[i])),
    )
}

fn bbox_gap(x: &(Vec3, Vec3), y: &(Vec3, Vec3)) -> f64 {
    let g: Vec3 = std::array::from_fn(|i| (x.0[i] - y.1[i]).max(y.0[i] - x.1[i]).max(0.0));
    norm(&g)
}

/// Checks the time-like condition for the union of all loops.
///
/// (a) Points on distinct loops, and points on non-adjacent segments of one loop,
/// must be at least `min_spatial_sep` apart in space. (b) Points on distinct loops
/// whose projections agree in two spatial coordinates (within `min_spatial_sep`)
/// must differ in time by at least `min_spatial_sep`. Condition (b) is not applied
/// within a single loop, where a constant-time planar loop would always breach it.
pub fn validate_timelike(h: &Hyperlink, min_spatial_sep: f64) -> Result<ValidationReport> {
    if min_spatial_sep.is_nan() || min_spatial_sep <= 0.0 {
        return Err(Error::Structural("min_spatial_sep must be positive".into()));
    }
    let loops = h.loops();
    if loops.is_empty() {
        return Err(Error::Structural("hyperlink has no loops".into()));
    }
    let segs: Vec<Vec<(Vec3, Vec3)>> = loops
        .iter()
        .map(|l| l.spatial_segments().collect())
        .collect();
    let boxes: Vec<Vec<_>> = segs
        .iter()
        .map(|s| s.iter().map(|(a, b)| segment_bbox(a, b)).collect())
        .collect();
    let mut violations = Vec::new();
    let mut min_distance = f64::INFINITY;
    for la in 0..loops.len() {
        let n = segs[la].len();
        for lb in la..loops.len() {
            for i in 0..n {
                let start = if la == lb { i + 2 } else { 0 };
                for j in start..segs[lb].len() {
                    if la == lb && i == 0 && j == n - 1 {
                        continue;
                    }
                    let gap = bbox_gap(&boxes[la][i], &boxes[lb][j]);
                    if gap <= min_distance || gap < min_spatial_sep {
                        let (pa, pb) = segs[la][i];
                        let (qa, qb) = segs[lb][j];
                        let d = segment_closest(&pa, &pb, &qa, &qb).2;
                        min_distance = min_distance.min(d);
                        if d < min_spatial_sep {
                            violations.push(Violation::Separation {
                                loop_a: la,
                                seg_a: i,
                                loop_b: lb,
                                seg_b: j,
                                distance: d,
                            });
                        }
                    }
                    if la != lb {
                        if let Some(axes) = shared_coordinates(
                            loops[la].segment(i),
                            loops[lb].segment(j),
                            min_spatial_sep,
                        ) {
                            violations.push(Violation::SharedCoordinates {
                                loop_a: la,
                                seg_a: i,
                                loop_b: lb,
                                seg_b: j,
                                axes,
                            });
                        }
                    }
                }
            }
        }
    }
    Ok(ValidationReport {
        violations,
        min_distance,
    })
}

const SHARED_SAMPLES: usize = 64;

fn shared_coordinates(
    a: (Point4, Point4),
    b: (Point4, Point4),
    tol: f64,
) -> Option<(usize, usize)> {
    for (i, j) in [(1, 2), (1, 3), (2, 3)] {
        let p = |x: &Point4| [x.coord(i), x.coord(j)];
        let (p0, p1, q0, q1) = (p(&a.0), p(&a.1), p(&b.0), p(&b.1));
        let apart = (0..2).any(|c| {
            p0[c].min(p1[c]) - q0[c].max(q1[c]) >= tol || q0[c].min(q1[c]) - p0[c].max(p1[c]) >= tol
        });
        if apart {
            continue;
        }
        let da = sub(&p1, &p0);
        let db = sub(&q1, &q0);
        let det = da[0] * db[1] - da[1] * db[0];
        let hit = |s: f64, t: f64| {
            let ta = a.0.x0 + s * (a.1.x0 - a.0.x0);
            let tb = b.0.x0 + t * (b.1.x0 - b.0.x0);
            (ta - tb).abs() < tol
        };
        if det.abs() > 1e-9 * norm(&da) * norm(&db) {
            let (s, t, d) = segment_closest(&p0, &p1, &q0, &q1);
            if d < tol && hit(s, t) {
                return Some((i, j));
            }
        } else {
            // Near-parallel projections: sample along the first segment.
            for k in 0..=SHARED_SAMPLES {
                let s = k as f64 / SHARED_SAMPLES as f64;
                let x = lerp(&p0, &p1, s);
                let (_, t, d) = segment_closest(&x, &x, &q0, &q1);
                if d < tol && hit(s, t) {
                    return Some((i, j));
                }
            }
        }
    }
    None
}

/// Spatial polyline of a loop, in vertex order.
pub fn project_time(l: &Loop4) -> Vec<Vec3> {
    l.vertices.iter().map(Point4::spatial).collect()
}

/// A closed polyline in the plane with normal e_k, keeping the dropped coordinate as depth.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanarPolyline {
    pub plane: usize,
    pub points: Vec<Vec2>,
    pub depth: Vec<f64>,
}

impl PlanarPolyline {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn segment(&self, i: usize) -> (Vec2, Vec2) {
        (self.points[i], self.points[(i + 1) % self.points.len()])
    }

    pub fn depth_at(&self, i: usize, t: f64) -> f64 {
        let n = self.depth.len();
        self.depth[i] + t * (self.depth[(i + 1) % n] - self.depth[i])
    }

    pub fn reversed(&self) -> PlanarPolyline {
        let mut p = self.clone();
        p.points.reverse();
        p.depth.reverse();
        p
    }
}

/// Drops coordinate `x_k` of each point. The remaining pair is in right-handed cyclic
/// order: (x2, x3) for k = 1, (x3, x1) for k = 2, (x1, x2) for k = 3.
pub fn project_plane(c: &[Vec3], k: usize) -> Result<PlanarPolyline> {
    if !(1..=3).contains(&k) {
        return Err(Error::Domain(format!(
            "plane index must be 1, 2 or 3, got {k}"
        )));
    }
    let (i, j) = crate::kernels::plane_axes(k);
    Ok(PlanarPolyline {
        plane: k,
        points: c.iter().map(|p| [p[i - 1], p[j - 1]]).collect(),
        depth: c.iter().map(|p| p[k - 1]).collect(),
    })
}

/// Copy of `l` displaced by `eps` times the frame; time coordinates are unchanged.
pub fn displace_loop(l: &Loop4, f: &Frame, eps: f64) -> Result<Loop4> {
    if !(eps >= 0.0 && eps.is_finite()) {
        return Err(Error::Domain(format!(
            "displacement must be nonnegative, got {eps}"
        )));
    }
    let vertices: Vec<Point4> = l
        .vertices
        .iter()
        .zip(&f.normals)
        .map(|(p, n)| {
            Point4::new(
                p.x0,
                p.x1 + eps * n[0],
                p.x2 + eps * n[1],
                p.x3 + eps * n[2],
            )
        })
        .collect();
    Loop4::new(vertices)
        .map_err(|e| Error::Regularization(format!("displaced loop at eps={eps}: {e}")))
}

/// Axis-aligned box `[min, max]` in space.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Box3 {
    pub min: Vec3,
    pub max: Vec3,
}

impl Box3 {
    pub fn new(min: Vec3, max: Vec3) -> Result<Self> {
        for i in 0..3 {
            if !(min[i].is_finite() && max[i].is_finite() && min[i] < max[i]) {
                return Err(Error::Validation(format!(
                    "box needs min < max on every axis, axis {} has [{}, {}]",
                    i + 1,
                    min[i],
                    max[i]
                )));
            }
        }
        Ok(Self { min, max })
    }

    pub fn volume(&self) -> f64 {
        (0..3).map(|i| self.max[i] - self.min[i]).product()
    }

    pub fn center(&self) -> Vec3 {
        std::array::from_fn(|i| 0.5 * (self.min[i] + self.max[i]))
    }

    pub fn half_diagonal(&self) -> f64 {
        0.5 * norm(&sub(&self.max, &self.min))
    }

    pub fn max_edge(&self) -> f64 {
        (0..3)
            .map(|i| self.max[i] - self.min[i])
            .fold(0.0, f64::max)
    }

    /// Affine parametrization of the box by the unit cube.
    pub fn param(&self, r: Vec3) -> Vec3 {
        std::array::from_fn(|i| self.min[i] + r[i] * (self.max[i] - self.min[i]))
    }

    /// Constant Jacobian determinant of [`Box3::param`].
    pub fn jacobian(&self) -> f64 {
        self.volume()
    }

    pub fn contains(&self, x: &Vec3) -> bool {
        (0..3).all(|i| self.min[i] <= x[i] && x[i] <= self.max[i])
    }

    fn interiors_overlap(&self, o: &Box3) -> bool {
        (0..3).all(|i| self.min[i] < o.max[i] && o.min[i] < self.max[i])
    }

    fn octants(&self) -> [Box3; 8] {
        let c = self.center();
        std::array::from_fn(|k| {
            let mut lo = self.min;
            let mut hi = self.max;
            for (a, (l, h)) in lo.iter_mut().zip(hi.iter_mut()).enumerate() {
                if k >> a & 1 == 0 {
                    *h = c[a];
                } else {
                    *l = c[a];
                }
            }
            Box3 { min: lo, max: hi }
        })
    }
}

/// A compact region as a union of boxes with disjoint interiors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Region3 {
    boxes: Vec<Box3>,
}

impl Region3 {
    pub fn new(boxes: Vec<Box3>) -> Result<Self> {
        for i in 0..boxes.len() {
            for j in (i + 1)..boxes.len() {
                if boxes[i].interiors_overlap(&boxes[j]) {
                    return Err(Error::Validation(format!(
                        "region boxes {i} and {j} overlap"
                    )));
                }
            }
        }
        Ok(Self { boxes })
    }

    pub fn boxes(&self) -> &[Box3] {
        &self.boxes
    }

    pub fn volume(&self) -> f64 {
        self.boxes.iter().map(Box3::volume).sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CellTag {
    /// Inside the tube around matter component `u`.
    Tube(usize),
    Exterior,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub bx: Box3,
    pub tag: CellTag,
    /// Nonzero for cells at the depth limit that still straddle a tube boundary:
    /// the half-diagonal by which the classification may be off.
    pub slack: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionPartition {
    pub cells: Vec<Cell>,
    pub tube_radius: f64,
}

impl RegionPartition {
    pub fn volume(&self) -> f64 {
        self.cells.iter().map(|c| c.bx.volume()).sum()
    }
}

const MAX_DEPTH: u32 = 6;
const MAX_CELLS: usize = 200_000;

/// Distance from `x` to a closed spatial polyline.
pub fn distance_to_polyline(x: &Vec3, c: &[Vec3]) -> f64 {
    let n = c.len();
    (0..n)
        .map(|i| point_segment_distance(x, &c[i], &c[(i + 1) % n]))
        .fold(f64::INFINITY, f64::min)
}

/// Octree subdivision of `r` into cells lying inside exactly one matter tube or
/// outside all of them, each with edge length at most `max_cell`.
///
/// A cell is classified from its centre distance d to each knot and its half-diagonal
/// h: inside when d + h <= radius, outside when d - h >= radius. Cells still
/// straddling at depth 6 are tagged to the nearest tube with their slack recorded.
pub fn partition_region(
    r: &Region3,
    h: &Hyperlink,
    tube_radius: f64,
    max_cell: f64,
) -> Result<RegionPartition> {
    if !(tube_radius > 0.0 && max_cell > 0.0) {
        return Err(Error::Structural(
            "tube_radius and max_cell must be positive".into(),
        ));
    }
    let knots: Vec<Vec<Vec3>> = h.matter.iter().map(|m| project_time(&m.curve)).collect();
    for a in 0..knots.len() {
        for b in (a + 1)..knots.len() {
            let d = polyline_distance(&knots[a], &knots[b]);
            if d < 2.0 * tube_radius {
                return Err(Error::AmbiguousPartition(format!(
                    "tubes of radius {tube_radius} around matter loops {a} and {b} overlap (distance {d:.4})"
                )));
            }
        }
    }
    let mut cells = Vec::new();
    let mut stack: Vec<(Box3, u32)> = r.boxes.iter().rev().map(|b| (*b, 0)).collect();
    while let Some((bx, depth)) = stack.pop() {
        let c = bx.center();
        let hd = bx.half_diagonal();
        let dists: Vec<f64> = knots.iter().map(|k| distance_to_polyline(&c, k)).collect();
        let inside: Vec<usize> = (0..knots.len())
            .filter(|&u| dists[u] + hd <= tube_radius)
            .collect();
        let outside_all = dists.iter().all(|d| d - hd >= tube_radius);
        let small = bx.max_edge() <= max_cell;
        let tag = if outside_all {
            Some(CellTag::Exterior)
        } else if inside.len() == 1
            && dists
                .iter()
                .enumerate()
                .all(|(u, d)| u == inside[0] || d - hd >= tube_radius)
        {
            Some(CellTag::Tube(inside[0]))
        } else {
            None
        };
        match tag {
            Some(tag) if small => cells.push(Cell {
                bx,
                tag,
                slack: 0.0,
            }),
            _ if depth >= MAX_DEPTH && small => {
                let u = (0..dists.len())
                    .min_by(|&a, &b| dists[a].total_cmp(&dists[b]))
                    .unwrap_or(0);
                let tag = if knots.is_empty() {
                    CellTag::Exterior
                } else {
                    CellTag::Tube(u)
                };
                cells.push(Cell { bx, tag, slack: hd });
            }
            _ => {
                if depth >= MAX_DEPTH + 20 {
                    return Err(Error::Refinement(format!(
                        "cell at depth {depth} still exceeds max_cell {max_cell}"
                    )));
                }
                for o in bx.octants().iter().rev() {
                    stack.push((*o, depth + 1));
                }
            }
        }
        if cells.len() + stack.len() > MAX_CELLS {
            return Err(Error::Refinement(format!(
                "partition exceeded {MAX_CELLS} cells"
            )));
        }
    }
    Ok(RegionPartition { cells, tube_radius })
}

/// Minimum distance between two closed spatial polylines.
pub fn polyline_distance(a: &[Vec3], b: &[Vec3]) -> f64 {
    let (n, m) = (a.len(), b.len());
    let mut best = f64::INFINITY;
    for i in 0..n {
        for j in 0..m {
            let d = segment_closest(&a[i], &a[(i + 1) % n], &b[j], &b[(j + 1) % m]).2;
            best = best.min(d);
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::TAU;

    fn circle(n: usize, t: f64, f: impl Fn(f64) -> Vec3) -> Loop4 {
        Loop4::new(
            (0..n)
                .map(|i| {
                    let p = f(TAU * (i as f64 + 0.3) / n as f64);
                    Point4::new(t, p[0], p[1], p[2])
                })
                .collect(),
        )
        .unwrap()
    }

    fn hopf() -> (Loop4, Loop4) {
        (
            circle(64, 0.0, |a| [a.cos(), a.sin(), 0.0]),
            circle(64, 0.5, |a| [1.0 + a.cos(), 0.0, a.sin()]),
        )
    }

    fn bare(l: Loop4) -> MatterLoop {
        let frame = Frame::new(&l, vec![[0.3, 0.4, 1.0]; l.len()]).unwrap();
        MatterLoop {
            curve: l,
            frame,
            j_plus: Spin::new(0.5).unwrap(),
            j_minus: Spin::new(0.5).unwrap(),
        }
    }

    #[test]
    fn loop_rejects_degenerate_input() {
        let p = Point4::new(0.0, 0.0, 0.0, 0.0);
        assert_eq!(Loop4::new(vec![p, p]).unwrap_err().category(), "structural");
        let q = Point4::new(0.0, 1.0, 0.0, 0.0);
        let r = Point4::new(0.0, 0.0, 1.0, 0.0);
        assert!(Loop4::new(vec![p, q, q, r]).is_err());
        // A bow-tie crosses itself.
        let bow = [[0.0, 0.0], [1.0, 1.0], [1.0, 0.0], [0.0, 1.0]]
            .iter()
            .map(|v| Point4::new(0.0, v[0], v[1], 0.0))
            .collect();
        assert!(Loop4::new(bow).is_err());
    }

    #[test]
    fn timelike_examples() {
        let a = circle(32, 0.0, |t| [t.cos(), t.sin(), 0.0]);
        let b = circle(32, 1.0, |t| [5.0 + t.cos(), 0.0, t.sin()]);
        let h = Hyperlink {
            matter: vec![bare(a.clone())],
            geometric: vec![b],
        };
        assert!(validate_timelike(&h, 1e-6).unwrap().is_valid());

        let h = Hyperlink {
            matter: vec![bare(a.clone())],
            geometric: vec![a],
        };
        let rep = validate_timelike(&h, 1e-6).unwrap();
        assert!(rep
            .violations
            .iter()
            .any(|v| matches!(v, Violation::Separation { .. })));

        let (x, y) = hopf();
        let h = Hyperlink {
            matter: vec![bare(x.clone())],
            geometric: vec![y.clone()],
        };
        let rep = validate_timelike(&h, 1e-6).unwrap();
        assert!(rep.is_valid());
        // The same pair at equal times shares two coordinates where the x1-x2 projections cross.
        let y0 = Loop4::new(
            y.vertices()
                .iter()
                .map(|p| Point4 { x0: 0.0, ..*p })
                .collect(),
        )
        .unwrap();
        let h = Hyperlink {
            matter: vec![bare(x)],
            geometric: vec![y0],
        };
        let rep = validate_timelike(&h, 1e-6).unwrap();
        assert!(rep
            .violations
            .iter()
            .any(|v| matches!(v, Violation::SharedCoordinates { .. })));
    }

    #[test]
    fn hopf_min_distance_matches_sampling() {
        let (x, y) = hopf();
        let exact = polyline_distance(&project_time(&x), &project_time(&y));
        let m = 10_000;
        let px: Vec<Vec3> = (0..m)
            .map(|i| x.point_at(i as f64 / m as f64).spatial())
            .collect();
        let py: Vec<Vec3> = (0..m)
            .map(|i| y.point_at(i as f64 / m as f64).spatial())
            .collect();
        let mut best = f64::INFINITY;
        for p in &px {
            for q in &py {
                best = best.min(norm(&sub(p, q)));
            }
        }
        // Sampling overestimates by at most the sample spacing.
        assert!(exact <= best + 1e-12);
        assert!(best - exact < 2.0 * TAU / m as f64);
        assert!(exact > 0.9);
        let h = Hyperlink {
            matter: vec![bare(x)],
            geometric: vec![y],
        };
        assert!(validate_timelike(&h, 0.05).unwrap().is_valid());
    }

    #[test]
    fn projections() {
        let l = circle(16, 2.0, |t| [t.cos(), t.sin(), 0.0]);
        let c = project_time(&l);
        assert_eq!(c.len(), 16);
        assert_eq!(c[3], l.vertices()[3].spatial());
        let p = project_plane(&c, 3).unwrap();
        assert_eq!(p.points[5], [c[5][0], c[5][1]]);
        assert_eq!(p.depth[5], 0.0);
        let p1 = project_plane(&c, 1).unwrap();
        assert_eq!(p1.points[5], [c[5][1], c[5][2]]);
        let p2 = project_plane(&c, 2).unwrap();
        assert_eq!(p2.points[5], [c[5][2], c[5][0]]);
        assert!(project_plane(&c, 4).is_err());
    }

    #[test]
    fn displacement() {
        let l = circle(32, 0.0, |t| [t.cos(), t.sin(), 0.0]);
        let radial = Frame::new(&l, project_time(&l)).unwrap();
        assert_eq!(displace_loop(&l, &radial, 0.0).unwrap(), l);
        let d = displace_loop(&l, &radial, 0.1).unwrap();
        for p in d.vertices() {
            assert_relative_eq!(norm(&p.spatial()), 1.1, epsilon = 1e-14);
        }
        // Constant frame: every vertex moves by exactly eps.
        let f = Frame::new(&l, vec![[0.0, 0.6, 0.8]; 32]).unwrap();
        let d = displace_loop(&l, &f, 0.25).unwrap();
        for (a, b) in l.vertices().iter().zip(d.vertices()) {
            assert_relative_eq!(
                norm(&sub(&a.spatial(), &b.spatial())),
                0.25,
                epsilon = 1e-14
            );
        }
        // Inward radial displacement beyond the radius folds the loop onto itself.
        let l3 = circle(3, 0.0, |t| [t.cos(), t.sin(), 0.0]);
        let inward = Frame::new(
            &l3,
            project_time(&l3)
                .iter()
                .map(|p| [-p[0], -p[1], 0.0])
                .collect(),
        )
        .unwrap();
        assert_eq!(
            displace_loop(&l3, &inward, 1.0).unwrap_err().category(),
            "regularization"
        );
    }

    #[test]
    fn region_validation() {
        assert!(Box3::new([0.0; 3], [0.0, 1.0, 1.0]).is_err());
        let a = Box3::new([0.0; 3], [1.0; 3]).unwrap();
        let b = Box3::new([0.5, 0.0, 0.0], [1.5, 1.0, 1.0]).unwrap();
        assert!(Region3::new(vec![a, b]).is_err());
        let c = Box3::new([1.0, 0.0, 0.0], [2.0, 1.0, 1.0]).unwrap();
        assert!(Region3::new(vec![a, c]).is_ok());
        assert_eq!(a.param([0.5, 0.5, 0.5]), [0.5; 3]);
    }

    #[test]
    fn partition_examples() {
        let l = circle(32, 1.0, |t| [t.cos(), t.sin(), 0.0]);
        let h = Hyperlink {
            matter: vec![bare(l)],
            geometric: vec![],
        };
        let far = Region3::new(vec![Box3::new([10.0; 3], [11.0; 3]).unwrap()]).unwrap();
        let p = partition_region(&far, &h, 0.5, 5.0).unwrap();
        assert_eq!(p.cells.len(), 1);
        assert_eq!(p.cells[0].tag, CellTag::Exterior);

        let thin = Region3::new(vec![
            Box3::new([0.95, -0.05, -0.05], [1.05, 0.05, 0.05]).unwrap()
        ])
        .unwrap();
        let p = partition_region(&thin, &h, 0.5, 5.0).unwrap();
        assert_eq!(p.cells.len(), 1);
        assert_eq!(p.cells[0].tag, CellTag::Tube(0));

        let mixed =
            Region3::new(vec![Box3::new([0.0, -1.0, -1.0], [2.0, 1.0, 1.0]).unwrap()]).unwrap();
        let p = partition_region(&mixed, &h, 0.3, 5.0).unwrap();
        assert!(p.cells.iter().any(|c| c.tag == CellTag::Exterior));
        assert!(p.cells.iter().any(|c| c.tag == CellTag::Tube(0)));
        assert_relative_eq!(p.volume(), mixed.volume(), max_relative = 1e-9);
        for c in &p.cells {
            let d = distance_to_polyline(&c.bx.center(), &project_time(&h.matter[0].curve));
            match c.tag {
                CellTag::Tube(_) => assert!(d - c.bx.half_diagonal() <= 0.3 + c.slack + 1e-12),
                CellTag::Exterior => assert!(d - c.bx.half_diagonal() >= 0.3),
            }
        }
    }

    #[test]
    fn partition_rejects_close_tubes() {
        let a = circle(32, 1.0, |t| [t.cos(), t.sin(), 0.0]);
        let b = circle(32, 1.0, |t| [t.cos(), t.sin(), 0.5]);
        let h = Hyperlink {
            matter: vec![bare(a), bare(b)],
            geometric: vec![],
        };
        let r = Region3::new(vec![Box3::new([0.0; 3], [1.0; 3]).unwrap()]).unwrap();
        assert_eq!(
            partition_region(&r, &h, 0.3, 1.0).unwrap_err().category(),
            "ambiguous-partition"
        );
    }
}
