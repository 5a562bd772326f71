//! Command implementations behind the `hlvol` binary.

use std::f64::consts::PI;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::diagram::{half_twists, link_diagram, self_linking, tdp_filter};
use crate::error::{Error, Result};
use crate::geometry::partition_region;
use crate::kernels::{gaussian_product_identity_residual, sgn_limit_value};
use crate::observables::{
    check_region_disjoint, limit_study, sk_table, volume_operator, wilson_loop, LimitStudy,
    VolumeClosedForm,
};
use crate::record::{export_diagram, ConfigEcho, CsvRow, DiagramExport, ResultRecord, Timestamps};
use crate::scene::{Scene, SceneFile};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Validate,
    Diagram,
    Selflink,
    Sk,
    Wilson,
    Volume,
    VerifyLimits,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Validate => "validate",
            Command::Diagram => "diagram",
            Command::Selflink => "selflink",
            Command::Sk => "sk",
            Command::Wilson => "wilson",
            Command::Volume => "volume",
            Command::VerifyLimits => "verify-limits",
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Flags {
    pub kappa_max: Option<f64>,
    pub plane: Option<usize>,
    pub jitter: Option<u64>,
    /// Produce convergence tables.
    pub csv: bool,
}

/// A command's record plus any tables and diagram it produced.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub record: ResultRecord,
    /// (file stem, rows)
    pub tables: Vec<(String, Vec<CsvRow>)>,
    pub diagram: Option<DiagramExport>,
    pub canonical_scene: String,
}

/// Gaps |t - s| tabulated by verify-limits for the sign limit.
pub const SGN_GAPS: [f64; 3] = [0.25, 0.5, 1.0];
/// Number of random point pairs per kappa in the planar identity check.
pub const IDENTITY_PAIRS: usize = 50;

/// Parses a scene, applying jitter before validation when requested.
pub fn load_scene(path: &Path, jitter: Option<u64>) -> Result<Scene> {
    let src =
        std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    let ctx = path.display().to_string();
    let file = SceneFile::from_toml(&src).map_err(|e| e.context(&ctx))?;
    match jitter {
        Some(seed) => file.jittered(seed).build(None),
        None => file.build(Some(&src)),
    }
    .map_err(|e| e.context(&ctx))
}

fn kappas(scene: &Scene, flags: &Flags) -> Result<Vec<f64>> {
    let ks: Vec<f64> = scene
        .file
        .kappa_schedule
        .iter()
        .copied()
        .filter(|k| flags.kappa_max.is_none_or(|m| *k <= m))
        .collect();
    if ks.is_empty() {
        return Err(Error::Validation(
            "no kappa in the schedule is below --kappa-max".into(),
        ));
    }
    Ok(ks)
}

fn to_json<T: Serialize>(v: &T) -> Result<Value> {
    serde_json::to_value(v).map_err(|e| Error::Io(e.to_string()))
}

fn monotone(rows: &[CsvRow]) -> bool {
    rows.windows(2).all(|w| w[1].abs_error < w[0].abs_error)
}

/// TDP count and combinatorial sk per matter component.
fn tdp_and_sk(scene: &Scene, plane: usize) -> Result<(Vec<usize>, Vec<f64>)> {
    let h = &scene.hyperlink;
    let mut counts = Vec::new();
    for (u, m) in h.matter.iter().enumerate() {
        let tw = half_twists(&m.curve, &m.frame, plane, &scene.file.eps_schedule, u)?;
        counts.push(tdp_filter(&tw, &scene.region, plane)?.count);
    }
    Ok((counts, combinatorial_sk(scene, plane)?))
}

fn combinatorial_sk(scene: &Scene, plane: usize) -> Result<Vec<f64>> {
    Ok(sk_table(&scene.hyperlink, plane, &[], &scene.quadrature)?
        .iter()
        .map(|e| e.combinatorial as f64)
        .collect())
}

fn closed_form(scene: &Scene, plane: usize) -> Result<(VolumeClosedForm, Vec<f64>)> {
    check_region_disjoint(&scene.hyperlink, &scene.region)?;
    let (counts, sk) = tdp_and_sk(scene, plane)?;
    let v = volume_operator(&scene.hyperlink, &scene.region, scene.file.q, &sk, &counts)?;
    Ok((v, sk))
}

/// v/z against (q^2 pi^{3/2}/2) sum |TDP| xi when every component has j+ = j-.
fn proportionality(scene: &Scene, v: &VolumeClosedForm) -> Value {
    let h = &scene.hyperlink;
    if h.matter.iter().any(|m| m.j_plus != m.j_minus) || v.z_value.norm() == 0.0 {
        return Value::Null;
    }
    let q = scene.file.q;
    let expected = q * q * PI.powf(1.5) / 2.0 * v.plus_sum;
    let ratio = v.v_value / v.z_value;
    json!({
        "ratio_re": ratio.re,
        "ratio_im": ratio.im,
        "expected": expected,
        "relative_error": (ratio - expected).norm() / expected.abs().max(f64::MIN_POSITIVE),
    })
}

fn volume_study(scene: &Scene, plane: usize, ks: &[f64]) -> Result<(VolumeClosedForm, LimitStudy)> {
    let (v, _) = closed_form(scene, plane)?;
    let partition = partition_region(
        &scene.region,
        &scene.hyperlink,
        scene.file.tube_radius,
        scene.file.max_cell,
    )?;
    let eps = &scene.file.eps_schedule[..2];
    let study = limit_study(
        &scene.hyperlink,
        scene.file.q,
        &partition,
        ks,
        eps,
        v.v_value,
        &scene.quadrature,
    )?;
    Ok((v, study))
}

/// Runs one command on a validated scene.
pub fn run(command: Command, scene: &Scene, flags: &Flags) -> Result<Outcome> {
    let started = Timestamps::now();
    let plane = flags.plane.unwrap_or(scene.file.plane);
    if !(1..=3).contains(&plane) {
        return Err(Error::Validation(format!(
            "plane must be 1, 2 or 3, got {plane}"
        )));
    }
    let h = &scene.hyperlink;
    let eps = &scene.file.eps_schedule;
    let mut tables = Vec::new();
    let mut diagram = None;
    let outputs = match command {
        Command::Validate => json!({
            "valid": scene.report.is_valid(),
            "report": to_json(&scene.report)?,
            "matter_loops": h.matter.len(),
            "geometric_loops": h.geometric.len(),
            "region_volume": scene.region.volume(),
        }),
        Command::Diagram => {
            let d = link_diagram(h, plane, eps)?;
            let export = export_diagram(&d);
            let out = json!({
                "crossings": d.crossings.len(),
                "half_twists": d.half_twists.len(),
                "diagram": to_json(&export)?,
            });
            diagram = Some(export);
            out
        }
        Command::Selflink => {
            let mut rows = Vec::new();
            for (u, m) in h.matter.iter().enumerate() {
                let tw = half_twists(&m.curve, &m.frame, plane, eps, u)?;
                let t = tdp_filter(&tw, &scene.region, plane)?;
                rows.push(json!({
                    "component": u,
                    "self_linking": self_linking(&m.curve, &m.frame, plane, eps)?,
                    "half_twists": tw.len(),
                    "tdp": t.count,
                    "tdp_signed": t.signed,
                }));
            }
            json!({ "components": rows })
        }
        Command::Sk => {
            let ks = kappas(scene, flags)?;
            let table = sk_table(h, plane, &ks, &scene.quadrature)?;
            let agree = table.iter().all(|e| {
                e.numeric
                    .as_ref()
                    .is_some_and(|n| n.limit.value.round() as i64 == e.combinatorial)
            });
            json!({ "table": to_json(&table)?, "rounded_agreement": agree })
        }
        Command::Wilson => {
            let sk = combinatorial_sk(scene, plane)?;
            let z = wilson_loop(h, &sk, scene.file.q);
            json!({ "sk": sk, "z_re": z.re, "z_im": z.im })
        }
        Command::Volume => {
            let (v, sk) = closed_form(scene, plane)?;
            let mut out = json!({
                "sk": sk,
                "volume": to_json(&v)?,
                "proportionality": proportionality(scene, &v),
            });
            if flags.csv {
                let ks = kappas(scene, flags)?;
                let (_, study) = volume_study(scene, plane, &ks)?;
                tables.push((
                    "volume".to_string(),
                    study.rows.iter().map(CsvRow::from).collect(),
                ));
                out["limit_study"] = to_json(&study)?;
            }
            out
        }
        Command::VerifyLimits => {
            let ks = kappas(scene, flags)?;
            let cfg = &scene.quadrature;
            let mut sgn_rows = Vec::new();
            let mut sgn_monotone = Vec::new();
            for gap in SGN_GAPS {
                let rows = ks
                    .iter()
                    .map(|&k| {
                        Ok(CsvRow::real(
                            k,
                            gap,
                            sgn_limit_value(k, 0.0, gap, cfg)?,
                            1.0,
                        ))
                    })
                    .collect::<Result<Vec<_>>>()?;
                sgn_monotone.push(json!({ "gap": gap, "monotone": monotone(&rows) }));
                sgn_rows.extend(rows);
            }
            let mut rng = ChaCha8Rng::seed_from_u64(0);
            let pairs: Vec<([f64; 2], [f64; 2])> = (0..IDENTITY_PAIRS)
                .map(|_| ([rng.random(), rng.random()], [rng.random(), rng.random()]))
                .collect();
            let mut id_rows = Vec::new();
            for &k in &ks {
                let worst = pairs
                    .iter()
                    .map(|(a, b)| gaussian_product_identity_residual(k, *a, *b, cfg))
                    .collect::<Result<Vec<_>>>()?
                    .into_iter()
                    .fold(0.0, f64::max);
                id_rows.push(CsvRow::real(k, 0.0, worst, 0.0));
            }
            let sk = sk_table(h, plane, &ks, cfg)?;
            let mut sk_monotone = Vec::new();
            for e in &sk {
                let series = e.numeric.as_ref().expect("nonempty kappa schedule");
                let rows: Vec<CsvRow> = series
                    .kappas
                    .iter()
                    .zip(&series.values)
                    .map(|(&k, &v)| CsvRow::real(k, 0.0, v, e.combinatorial as f64))
                    .collect();
                sk_monotone.push(json!({ "component": e.component, "monotone": monotone(&rows) }));
                tables.push((format!("sk_{}", e.component), rows));
            }
            let (v, study) = volume_study(scene, plane, &ks)?;
            let vol_rows: Vec<CsvRow> = study.rows.iter().map(CsvRow::from).collect();
            let primary: Vec<CsvRow> = vol_rows
                .iter()
                .copied()
                .filter(|r| r.eps == eps[0])
                .collect();
            let out = json!({
                "sgn_limit": sgn_monotone,
                "gaussian_identity_max_residual": id_rows.iter().map(|r| r.value_re).fold(0.0, f64::max),
                "sk": to_json(&sk)?,
                "sk_monotone": sk_monotone,
                "volume_target": [v.v_value.re, v.v_value.im],
                "volume_study": to_json(&study)?,
                "volume_monotone": monotone(&primary),
            });
            tables.insert(0, ("gaussian_identity".to_string(), id_rows));
            tables.insert(0, ("sgn_limit".to_string(), sgn_rows));
            tables.push(("volume".to_string(), vol_rows));
            out
        }
    };
    let record = ResultRecord {
        scene_hash: scene.file.hash()?,
        command: command.name().to_string(),
        config: ConfigEcho {
            plane,
            kappa_max: flags.kappa_max,
            jitter_seed: flags.jitter,
            kappa_schedule: scene.file.kappa_schedule.clone(),
            eps_schedule: scene.file.eps_schedule.clone(),
            abs_tol: scene.quadrature.abs_tol,
            rel_tol: scene.quadrature.rel_tol,
            max_subdivisions: scene.quadrature.max_subdivisions,
        },
        outputs,
        timestamps: Timestamps {
            started,
            finished: Timestamps::now(),
        },
    };
    Ok(Outcome {
        record,
        tables,
        diagram,
        canonical_scene: scene.file.to_canonical()?,
    })
}

/// Writes `result.json`, `scene.toml`, `diagram.json` and `<table>.csv` files into `dir`.
pub fn write_outputs(o: &Outcome, dir: &Path, csv: bool) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    std::fs::write(dir.join("result.json"), o.record.to_json()?)?;
    std::fs::write(dir.join("scene.toml"), &o.canonical_scene)?;
    if let Some(d) = &o.diagram {
        let text = serde_json::to_string_pretty(d).map_err(|e| Error::Io(e.to_string()))?;
        std::fs::write(dir.join("diagram.json"), text)?;
    }
    if csv {
        for (name, rows) in &o.tables {
            crate::record::write_csv(
                std::fs::File::create(dir.join(format!("{name}.csv")))?,
                rows,
            )?;
        }
    }
    Ok(())
}
