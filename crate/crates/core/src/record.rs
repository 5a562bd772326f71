//! Result records, convergence tables, and diagram exports.

use std::io::Write;
use std::time::{SystemTime, UNIX_EPOCH};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::diagram::LinkDiagram;
use crate::error::{Error, Result};
use crate::geometry::Vec2;
use crate::observables::ConvergenceRow;

/// Flags that shaped a run, echoed into its record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfigEcho {
    pub plane: usize,
    pub kappa_max: Option<f64>,
    pub jitter_seed: Option<u64>,
    pub kappa_schedule: Vec<f64>,
    pub eps_schedule: Vec<f64>,
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_subdivisions: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Timestamps {
    /// Seconds since the Unix epoch.
    pub started: f64,
    pub finished: f64,
}

impl Timestamps {
    pub fn now() -> f64 {
        SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_secs_f64())
            .unwrap_or(0.0)
    }
}

/// Everything a command produced. Identical scene and flags give identical records
/// apart from `timestamps`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRecord {
    pub scene_hash: String,
    pub command: String,
    pub config: ConfigEcho,
    pub outputs: serde_json::Value,
    pub timestamps: Timestamps,
}

impl ResultRecord {
    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::Io(e.to_string()))
    }

    pub fn from_json(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(|e| Error::Parse(e.to_string()))
    }
}

/// One CSV line: kappa, eps, value_re, value_im, target_re, target_im, abs_error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CsvRow {
    pub kappa: f64,
    pub eps: f64,
    pub value_re: f64,
    pub value_im: f64,
    pub target_re: f64,
    pub target_im: f64,
    pub abs_error: f64,
}

impl CsvRow {
    pub fn new(kappa: f64, eps: f64, value: Complex64, target: Complex64) -> Self {
        Self {
            kappa,
            eps,
            value_re: value.re,
            value_im: value.im,
            target_re: target.re,
            target_im: target.im,
            abs_error: (value - target).norm(),
        }
    }

    pub fn real(kappa: f64, eps: f64, value: f64, target: f64) -> Self {
        Self::new(
            kappa,
            eps,
            Complex64::new(value, 0.0),
            Complex64::new(target, 0.0),
        )
    }
}

impl From<&ConvergenceRow> for CsvRow {
    fn from(r: &ConvergenceRow) -> Self {
        Self::new(r.kappa, r.eps, r.value, r.target)
    }
}

pub fn write_csv<W: Write>(w: W, rows: &[CsvRow]) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    if rows.is_empty() {
        wr.write_record([
            "kappa",
            "eps",
            "value_re",
            "value_im",
            "target_re",
            "target_im",
            "abs_error",
        ])
        .map_err(|e| Error::Io(e.to_string()))?;
    }
    for r in rows {
        wr.serialize(r).map_err(|e| Error::Io(e.to_string()))?;
    }
    wr.flush()?;
    Ok(())
}

pub fn csv_string(rows: &[CsvRow]) -> Result<String> {
    let mut buf = Vec::new();
    write_csv(&mut buf, rows)?;
    String::from_utf8(buf).map_err(|e| Error::Io(e.to_string()))
}

pub fn read_csv(s: &str) -> Result<Vec<CsvRow>> {
    csv::Reader::from_reader(s.as_bytes())
        .deserialize()
        .collect::<std::result::Result<_, _>>()
        .map_err(|e| Error::Parse(e.to_string()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum VertexKind {
    Crossing,
    HalfTwist,
    /// Placeholder on a component without crossings or half-twists.
    Marker,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagramVertex {
    pub id: usize,
    pub kind: VertexKind,
    pub position: Vec2,
    pub valency: u8,
    pub sign: i8,
    /// Components meeting at the vertex: (over, under) for crossings.
    pub components: Vec<usize>,
}

/// Arc of one component between consecutive vertices along its orientation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiagramEdge {
    pub component: usize,
    pub from: usize,
    pub to: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagramExport {
    pub plane: usize,
    pub components: usize,
    pub vertices: Vec<DiagramVertex>,
    pub edges: Vec<DiagramEdge>,
}

/// Graph view of a link diagram: crossings are valency-4 vertices, half-twists
/// valency-2 vertices, and edges follow each component's orientation.
pub fn export_diagram(d: &LinkDiagram) -> DiagramExport {
    let mut vertices = Vec::new();
    // (component, parameter, vertex id)
    let mut visits: Vec<(usize, f64, usize)> = Vec::new();
    for c in &d.crossings {
        let id = vertices.len();
        vertices.push(DiagramVertex {
            id,
            kind: VertexKind::Crossing,
            position: c.position,
            valency: 4,
            sign: c.sign,
            components: vec![c.over_component(), c.under_component()],
        });
        visits.push((c.components.0, c.s, id));
        visits.push((c.components.1, c.s_bar, id));
    }
    for h in &d.half_twists {
        let id = vertices.len();
        vertices.push(DiagramVertex {
            id,
            kind: VertexKind::HalfTwist,
            position: h.position,
            valency: 2,
            sign: h.sign,
            components: vec![h.component],
        });
        visits.push((h.component, h.s, id));
    }
    let mut edges = Vec::new();
    for (k, comp) in d.components.iter().enumerate() {
        let mut on: Vec<(f64, usize)> = visits
            .iter()
            .filter(|v| v.0 == k)
            .map(|v| (v.1, v.2))
            .collect();
        if on.is_empty() {
            let id = vertices.len();
            vertices.push(DiagramVertex {
                id,
                kind: VertexKind::Marker,
                position: comp.points[0],
                valency: 2,
                sign: 0,
                components: vec![k],
            });
            on.push((0.0, id));
        }
        on.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        for i in 0..on.len() {
            edges.push(DiagramEdge {
                component: k,
                from: on[i].1,
                to: on[(i + 1) % on.len()].1,
            });
        }
    }
    DiagramExport {
        plane: d.plane,
        components: d.components.len(),
        vertices,
        edges,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diagram::Crossing;
    use crate::geometry::PlanarPolyline;

    fn square(offset: f64) -> PlanarPolyline {
        PlanarPolyline {
            plane: 3,
            points: vec![
                [offset, 0.0],
                [offset + 1.0, 0.0],
                [offset + 1.0, 1.0],
                [offset, 1.0],
            ],
            depth: vec![0.0; 4],
        }
    }

    #[test]
    fn csv_header_and_round_trip() {
        let rows = vec![
            CsvRow::real(4.0, 0.5, 0.9, 1.0),
            CsvRow::new(8.0, 0.5, Complex64::new(1.0, 0.5), Complex64::new(1.0, 0.0)),
        ];
        let s = csv_string(&rows).unwrap();
        assert!(s.starts_with("kappa,eps,value_re,value_im,target_re,target_im,abs_error\n"));
        assert_eq!(read_csv(&s).unwrap(), rows);
        assert!(csv_string(&[]).unwrap().starts_with("kappa,eps,"));
    }

    #[test]
    fn export_counts_valency() {
        let c = Crossing {
            plane: 3,
            position: [0.5, 0.5],
            components: (0, 1),
            seg_a: 0,
            t_a: 0.5,
            seg_b: 1,
            t_b: 0.5,
            s: 0.1,
            s_bar: 0.4,
            a_over: true,
            sign: -1,
        };
        let d = LinkDiagram {
            plane: 3,
            components: vec![square(0.0), square(5.0), square(10.0)],
            crossings: vec![
                c,
                Crossing {
                    s: 0.6,
                    s_bar: 0.9,
                    sign: -1,
                    ..c
                },
            ],
            half_twists: vec![],
        };
        let e = export_diagram(&d);
        assert_eq!(e.vertices.len(), 3);
        assert_eq!(e.vertices[2].kind, VertexKind::Marker);
        let degree = |v: usize| {
            e.edges.iter().filter(|x| x.from == v).count()
                + e.edges.iter().filter(|x| x.to == v).count()
        };
        for v in &e.vertices {
            assert_eq!(degree(v.id), v.valency as usize);
        }
    }
}
