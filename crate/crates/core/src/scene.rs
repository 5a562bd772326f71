//! Scene files: a TOML description of a colored hyperlink, a region, and the
//! numerical schedules used to study it.
//!
//! Top-level keys (all required unless marked):
//!
//! ```toml
//! q = 1.0
//! plane = 3                      # optional, projection plane 1, 2 or 3
//! tube_radius = 12.0
//! max_cell = 10.0
//! min_spatial_sep = 0.05
//! kappa_schedule = [4.0, 8.0, 16.0, 32.0]
//! eps_schedule = [0.8, 0.4, 0.2]
//!
//! [tolerances]                   # optional
//! abs_tol = 1e-12
//! rel_tol = 1e-10
//! max_subdivisions = 4000
//!
//! [[matter]]
//! j_plus = 0.5
//! j_minus = 0.5
//! vertices = [[t, x1, x2, x3], ...]
//! frame = [[n1, n2, n3], ...]    # one normal per vertex
//!
//! [[geometric]]                  # optional, repeatable
//! vertices = [[t, x1, x2, x3], ...]
//!
//! [[region]]
//! min = [x1, x2, x3]
//! max = [x1, x2, x3]
//! ```

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use toml::Spanned;

use crate::error::{Error, Result};
use crate::geometry::{
    validate_timelike, Box3, Frame, Hyperlink, Loop4, MatterLoop, Point4, Region3,
    ValidationReport, Vec3,
};
use crate::quadrature::QuadratureConfig;
use crate::rep::Spin;

/// Half-width of the uniform perturbation applied by [`SceneFile::jittered`].
pub const JITTER: f64 = 1e-7;

fn default_plane() -> usize {
    3
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_subdivisions: usize,
}

impl Default for Tolerances {
    fn default() -> Self {
        let q = QuadratureConfig::default();
        Self {
            abs_tol: q.abs_tol,
            rel_tol: q.rel_tol,
            max_subdivisions: q.max_subdivisions,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MatterSpec {
    pub j_plus: Spin,
    pub j_minus: Spin,
    pub vertices: Vec<[f64; 4]>,
    pub frame: Vec<Vec3>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometricSpec {
    pub vertices: Vec<[f64; 4]>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoxSpec {
    pub min: Vec3,
    pub max: Vec3,
}

/// Scene as written on disk. Equality ignores source positions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneFile {
    pub q: f64,
    #[serde(default = "default_plane")]
    pub plane: usize,
    pub tube_radius: f64,
    pub max_cell: f64,
    pub min_spatial_sep: f64,
    pub kappa_schedule: Vec<f64>,
    pub eps_schedule: Vec<f64>,
    #[serde(default)]
    pub tolerances: Tolerances,
    pub matter: Vec<Spanned<MatterSpec>>,
    #[serde(default)]
    pub geometric: Vec<Spanned<GeometricSpec>>,
    pub region: Vec<Spanned<BoxSpec>>,
}

/// A validated scene ready for the observables.
#[derive(Debug, Clone, PartialEq)]
pub struct Scene {
    pub file: SceneFile,
    pub hyperlink: Hyperlink,
    pub region: Region3,
    pub quadrature: QuadratureConfig,
    pub report: ValidationReport,
}

fn line_of(src: Option<&str>, offset: usize) -> String {
    match src {
        Some(s) if offset <= s.len() => {
            format!(" (line {})", s[..offset].matches('\n').count() + 1)
        }
        _ => String::new(),
    }
}

fn to_loop(vertices: &[[f64; 4]]) -> Result<Loop4> {
    Loop4::new(
        vertices
            .iter()
            .map(|v| Point4::new(v[0], v[1], v[2], v[3]))
            .collect(),
    )
}

fn check_schedule(name: &str, xs: &[f64], increasing: bool, min_len: usize) -> Result<()> {
    if xs.len() < min_len {
        return Err(Error::Validation(format!(
            "{name} needs at least {min_len} entries"
        )));
    }
    let ordered = xs
        .windows(2)
        .all(|w| if increasing { w[1] > w[0] } else { w[1] < w[0] });
    if xs.iter().any(|x| !(x.is_finite() && *x > 0.0)) || !ordered {
        let dir = if increasing {
            "increasing"
        } else {
            "decreasing"
        };
        return Err(Error::Validation(format!(
            "{name} must be positive and strictly {dir}"
        )));
    }
    Ok(())
}

impl SceneFile {
    pub fn from_toml(src: &str) -> Result<Self> {
        toml::from_str(src).map_err(|e| Error::Parse(e.to_string().trim_end().to_string()))
    }

    /// Canonical text: fixed key order, shortest round-trip floats, one vertex or
    /// frame vector per line.
    pub fn to_canonical(&self) -> Result<String> {
        let flat = toml::to_string(self).map_err(|e| Error::Parse(e.to_string()))?;
        let mut out = String::with_capacity(flat.len() + flat.len() / 8);
        for line in flat.lines() {
            match line.split_once(" = [[") {
                Some((key, rest)) if key == "vertices" || key == "frame" => {
                    let body = rest.strip_suffix("]]").unwrap_or(rest);
                    out.push_str(key);
                    out.push_str(" = [\n");
                    for item in body.split("], [") {
                        out.push_str("    [");
                        out.push_str(item);
                        out.push_str("],\n");
                    }
                    out.push_str("]\n");
                }
                _ => {
                    out.push_str(line);
                    out.push('\n');
                }
            }
        }
        Ok(out)
    }

    /// SHA-256 of the canonical text, hex encoded.
    pub fn hash(&self) -> Result<String> {
        Ok(hex::encode(Sha256::digest(self.to_canonical()?.as_bytes())))
    }

    /// Copy with every spatial vertex coordinate moved by an independent uniform
    /// offset in [-JITTER, JITTER], drawn from ChaCha8 seeded with `seed`. Matter loops
    /// are visited before geometric ones, vertices in order, coordinates x1, x2, x3.
    /// Times and frames are left unchanged.
    pub fn jittered(&self, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut out = self.clone();
        let mut shake = |vs: &mut Vec<[f64; 4]>| {
            for v in vs.iter_mut() {
                for c in v.iter_mut().skip(1) {
                    *c += rng.random_range(-JITTER..=JITTER);
                }
            }
        };
        for m in out.matter.iter_mut() {
            shake(&mut m.get_mut().vertices);
        }
        for g in out.geometric.iter_mut() {
            shake(&mut g.get_mut().vertices);
        }
        out
    }

    /// Builds and validates the hyperlink and region. When `src` is the text this
    /// scene was parsed from, diagnostics carry line numbers.
    pub fn build(self, src: Option<&str>) -> Result<Scene> {
        if !self.q.is_finite() {
            return Err(Error::Validation("q must be finite".into()));
        }
        if !(1..=3).contains(&self.plane) {
            return Err(Error::Validation(format!(
                "plane must be 1, 2 or 3, got {}",
                self.plane
            )));
        }
        if !(self.tube_radius > 0.0 && self.max_cell > 0.0 && self.min_spatial_sep > 0.0) {
            return Err(Error::Validation(
                "tube_radius, max_cell and min_spatial_sep must be positive".into(),
            ));
        }
        check_schedule("kappa_schedule", &self.kappa_schedule, true, 1)?;
        check_schedule("eps_schedule", &self.eps_schedule, false, 3)?;
        if self.matter.is_empty() {
            return Err(Error::Validation("scene has no matter loops".into()));
        }
        let mut matter = Vec::new();
        for (u, m) in self.matter.iter().enumerate() {
            let ctx = format!("matter[{u}]{}", line_of(src, m.span().start));
            let spec = m.get_ref();
            let curve = to_loop(&spec.vertices).map_err(|e| e.context(&ctx))?;
            let frame = Frame::new(&curve, spec.frame.clone()).map_err(|e| e.context(&ctx))?;
            matter.push(MatterLoop {
                curve,
                frame,
                j_plus: spec.j_plus,
                j_minus: spec.j_minus,
            });
        }
        let geometric = self
            .geometric
            .iter()
            .enumerate()
            .map(|(i, g)| {
                to_loop(&g.get_ref().vertices).map_err(|e| {
                    e.context(&format!("geometric[{i}]{}", line_of(src, g.span().start)))
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let boxes = self
            .region
            .iter()
            .enumerate()
            .map(|(i, b)| {
                Box3::new(b.get_ref().min, b.get_ref().max)
                    .map_err(|e| e.context(&format!("region[{i}]{}", line_of(src, b.span().start))))
            })
            .collect::<Result<Vec<_>>>()?;
        let region = Region3::new(boxes)?;
        let hyperlink = Hyperlink { matter, geometric };
        let report = validate_timelike(&hyperlink, self.min_spatial_sep)?;
        if let Some(v) = report.violations.first() {
            return Err(Error::Validation(format!(
                "hyperlink is not time-like ({} violations), first: {v:?}",
                report.violations.len()
            )));
        }
        let t = self.tolerances;
        let quadrature = QuadratureConfig {
            abs_tol: t.abs_tol,
            rel_tol: t.rel_tol,
            max_subdivisions: t.max_subdivisions,
            ..QuadratureConfig::default()
        };
        quadrature.validate()?;
        Ok(Scene {
            file: self,
            hyperlink,
            region,
            quadrature,
            report,
        })
    }
}

/// Parses and validates scene text.
pub fn parse_scene_str(src: &str) -> Result<Scene> {
    SceneFile::from_toml(src)?.build(Some(src))
}

/// Reads, parses and validates a scene file.
pub fn parse_scene(path: &Path) -> Result<Scene> {
    let src =
        std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    parse_scene_str(&src).map_err(|e| e.context(&path.display().to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    const SMALL: &str = r#"
q = 1.0
tube_radius = 2.0
max_cell = 1.0
min_spatial_sep = 0.01
kappa_schedule = [4.0, 8.0]
eps_schedule = [0.2, 0.1, 0.05]

[[matter]]
j_plus = 0.5
j_minus = 0.0
vertices = [[1.0, 0.0, 0.0, 0.0], [1.0, 1.0, 0.1, 0.0], [1.0, 0.2, 1.0, 0.1]]
frame = [[0.0, 0.0, 1.0], [0.0, 0.0, 1.0], [0.1, 0.0, 1.0]]

[[region]]
min = [-1.0, -1.0, -1.0]
max = [2.0, 2.0, 1.0]
"#;

    #[test]
    fn parses_minimal_scene() {
        let s = parse_scene_str(SMALL).unwrap();
        assert_eq!(s.hyperlink.matter.len(), 1);
        assert!(s.hyperlink.geometric.is_empty());
        assert_eq!(s.file.plane, 3);
        assert_eq!(s.hyperlink.matter[0].j_plus.twice(), 1);
    }

    #[test]
    fn canonical_round_trip() {
        let f = SceneFile::from_toml(SMALL).unwrap();
        let text = f.to_canonical().unwrap();
        let g = SceneFile::from_toml(&text).unwrap();
        assert_eq!(f, g);
        assert_eq!(text, g.to_canonical().unwrap());
        assert_eq!(f.hash().unwrap(), g.hash().unwrap());
    }

    #[test]
    fn degenerate_box_reports_line() {
        let bad = SMALL.replace("max = [2.0, 2.0, 1.0]", "max = [-1.0, 2.0, 1.0]");
        let e = parse_scene_str(&bad).unwrap_err();
        assert_eq!(e.category(), "validation");
        assert!(e.to_string().contains("line 15"), "{e}");
    }

    #[test]
    fn empty_matter_rejected() {
        let text = r#"
q = 1.0
tube_radius = 2.0
max_cell = 1.0
min_spatial_sep = 0.01
kappa_schedule = [4.0]
eps_schedule = [0.2, 0.1, 0.05]
matter = []
region = [{ min = [0.0, 0.0, 0.0], max = [1.0, 1.0, 1.0] }]
"#;
        assert_eq!(parse_scene_str(text).unwrap_err().category(), "validation");
    }

    #[test]
    fn syntax_error_has_position() {
        let e = parse_scene_str("q = = 1").unwrap_err();
        assert_eq!(e.category(), "parse");
        assert!(e.to_string().contains("line 1"), "{e}");
    }

    #[test]
    fn jitter_is_seeded_and_small() {
        let f = SceneFile::from_toml(SMALL).unwrap();
        let a = f.jittered(7);
        assert_eq!(a, f.jittered(7));
        assert_ne!(a, f.jittered(8));
        for (m, n) in a.matter.iter().zip(&f.matter) {
            for (v, w) in m.get_ref().vertices.iter().zip(&n.get_ref().vertices) {
                assert_eq!(v[0], w[0]);
                for c in 1..4 {
                    assert!((v[c] - w[c]).abs() <= JITTER);
                }
            }
        }
    }
}
