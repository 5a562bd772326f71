use std::path::PathBuf;
use std::process::Command;

use hyperlink_volume::record::{read_csv, ResultRecord};
use hyperlink_volume::scene::SceneFile;
use hyperlink_volume::Error;

fn scene_path(name: &str) -> PathBuf {
    [
        env!("CARGO_MANIFEST_DIR"),
        "scenes",
        &format!("{name}.toml"),
    ]
    .iter()
    .collect()
}

fn hlvol(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_hlvol"))
        .args(args)
        .output()
        .unwrap()
}

fn record(out: &std::process::Output) -> ResultRecord {
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    ResultRecord::from_json(&String::from_utf8(out.stdout.clone()).unwrap()).unwrap()
}

#[test]
fn validate_reports_counts() {
    let p = scene_path("golden");
    let r = record(&hlvol(&[
        "--scene",
        p.to_str().unwrap(),
        "--command",
        "validate",
    ]));
    assert_eq!(r.command, "validate");
    assert_eq!(r.outputs["valid"], true);
    assert_eq!(r.outputs["matter_loops"], 1);
    assert_eq!(r.outputs["geometric_loops"], 1);
}

#[test]
fn records_are_deterministic_apart_from_timestamps() {
    let p = scene_path("two_matter");
    let args = [
        "--scene",
        p.to_str().unwrap(),
        "--command",
        "wilson",
        "--jitter",
        "3",
    ];
    let mut a = record(&hlvol(&args));
    let b = record(&hlvol(&args));
    a.timestamps = b.timestamps;
    assert_eq!(a.to_json().unwrap(), b.to_json().unwrap());
    assert_eq!(a.config.jitter_seed, Some(3));
}

#[test]
fn canonical_scene_round_trips_through_out_dir() {
    let dir = tempfile::tempdir().unwrap();
    let p = scene_path("hopf");
    let r = record(&hlvol(&[
        "--scene",
        p.to_str().unwrap(),
        "--command",
        "validate",
        "--out",
        dir.path().to_str().unwrap(),
    ]));
    let written = std::fs::read_to_string(dir.path().join("scene.toml")).unwrap();
    let original = std::fs::read_to_string(&p).unwrap();
    assert_eq!(written, original);
    let reparsed = SceneFile::from_toml(&written).unwrap();
    assert_eq!(reparsed.hash().unwrap(), r.scene_hash);
    let again = record(&hlvol(&[
        "--scene",
        dir.path().join("scene.toml").to_str().unwrap(),
        "--command",
        "validate",
    ]));
    assert_eq!(again.scene_hash, r.scene_hash);
}

#[test]
fn diagram_on_split_link_has_no_crossings() {
    let dir = tempfile::tempdir().unwrap();
    let p = scene_path("split");
    let r = record(&hlvol(&[
        "--scene",
        p.to_str().unwrap(),
        "--command",
        "diagram",
        "--out",
        dir.path().to_str().unwrap(),
    ]));
    assert_eq!(r.outputs["crossings"], 0);
    let d: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("diagram.json")).unwrap())
            .unwrap();
    let vertices = d["vertices"].as_array().unwrap();
    assert!(vertices.iter().all(|v| v["kind"] != "crossing"));
    assert!(vertices.iter().any(|v| v["kind"] == "marker"));
}

#[test]
fn diagram_vertices_have_declared_valency() {
    let p = scene_path("golden");
    let r = record(&hlvol(&[
        "--scene",
        p.to_str().unwrap(),
        "--command",
        "diagram",
    ]));
    let d = &r.outputs["diagram"];
    let edges = d["edges"].as_array().unwrap();
    for v in d["vertices"].as_array().unwrap() {
        let id = &v["id"];
        let degree = edges.iter().filter(|e| &e["from"] == id).count()
            + edges.iter().filter(|e| &e["to"] == id).count();
        assert_eq!(degree as u64, v["valency"].as_u64().unwrap());
    }
    assert_eq!(r.outputs["crossings"], 2);
    assert_eq!(r.outputs["half_twists"], 2);
}

#[test]
fn volume_on_golden_matches_closed_form() {
    let p = scene_path("golden");
    let r = record(&hlvol(&[
        "--scene",
        p.to_str().unwrap(),
        "--command",
        "volume",
    ]));
    let v = &r.outputs["volume"];
    assert_eq!(v["tdp_counts"][0], 2);
    let tr = 2.0 * (3f64.sqrt() * std::f64::consts::PI / 2.0).cos();
    let want = std::f64::consts::PI.powf(1.5) / 2.0 * 1.5 * 2.0 * tr;
    let got = v["v_value"][0].as_f64().unwrap();
    assert!((got - want).abs() < 1e-10, "{got} vs {want}");
    assert!(
        r.outputs["proportionality"]["relative_error"]
            .as_f64()
            .unwrap()
            < 1e-9
    );
}

#[test]
fn selflink_and_sk_commands() {
    let p = scene_path("golden");
    let r = record(&hlvol(&[
        "--scene",
        p.to_str().unwrap(),
        "--command",
        "selflink",
    ]));
    let c = &r.outputs["components"][0];
    assert_eq!(c["self_linking"].as_i64().unwrap().abs(), 1);
    assert_eq!(c["tdp"], 2);
    let p = scene_path("hopf");
    let r = record(&hlvol(&[
        "--scene",
        p.to_str().unwrap(),
        "--command",
        "sk",
        "--kappa-max",
        "16",
    ]));
    assert_eq!(r.outputs["rounded_agreement"], true);
    assert_eq!(r.config.kappa_max, Some(16.0));
    assert_eq!(
        r.outputs["table"][0]["numeric"]["kappas"]
            .as_array()
            .unwrap()
            .len(),
        3
    );
}

#[test]
fn verify_limits_writes_monotone_tables() {
    let dir = tempfile::tempdir().unwrap();
    let p = scene_path("golden");
    let r = record(&hlvol(&[
        "--scene",
        p.to_str().unwrap(),
        "--command",
        "verify-limits",
        "--csv",
        "--out",
        dir.path().to_str().unwrap(),
    ]));
    assert_eq!(r.outputs["volume_monotone"], true);
    for name in ["sgn_limit", "gaussian_identity", "sk_0", "volume"] {
        let text = std::fs::read_to_string(dir.path().join(format!("{name}.csv"))).unwrap();
        assert!(
            text.starts_with("kappa,eps,value_re,value_im,target_re,target_im,abs_error\n"),
            "{name}"
        );
        assert!(!read_csv(&text).unwrap().is_empty());
    }
    let vol = read_csv(&std::fs::read_to_string(dir.path().join("volume.csv")).unwrap()).unwrap();
    let primary: Vec<f64> = vol
        .iter()
        .filter(|r| r.eps == 0.8)
        .map(|r| r.abs_error)
        .collect();
    assert_eq!(primary.len(), 4);
    assert!(primary.windows(2).all(|w| w[1] < w[0]));
    let sgn =
        read_csv(&std::fs::read_to_string(dir.path().join("sgn_limit.csv")).unwrap()).unwrap();
    for gap in [0.25, 0.5, 1.0] {
        let e: Vec<f64> = sgn
            .iter()
            .filter(|r| r.eps == gap)
            .map(|r| r.abs_error)
            .collect();
        assert!(e.windows(2).all(|w| w[1] < w[0]), "gap {gap}");
    }
}

fn category_of(out: &std::process::Output) -> String {
    let line = String::from_utf8(out.stderr.clone()).unwrap();
    let v: serde_json::Value = serde_json::from_str(line.trim()).unwrap();
    v["error"]["category"].as_str().unwrap().to_string()
}

#[test]
fn errors_exit_nonzero_with_category() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("none.toml");
    let out = hlvol(&[
        "--scene",
        missing.to_str().unwrap(),
        "--command",
        "validate",
    ]);
    assert_eq!(category_of(&out), "io");
    assert_eq!(
        out.status.code(),
        Some(Error::Io(String::new()).exit_code())
    );

    let bad = dir.path().join("bad.toml");
    std::fs::write(&bad, "q = [").unwrap();
    let out = hlvol(&["--scene", bad.to_str().unwrap(), "--command", "validate"]);
    assert_eq!(category_of(&out), "parse");

    let text = std::fs::read_to_string(scene_path("golden")).unwrap();
    let degenerate = text.replace("max = [5.0, 13.0, 5.0]", "max = [-5.0, 13.0, 5.0]");
    assert_ne!(degenerate, text);
    std::fs::write(&bad, degenerate).unwrap();
    let out = hlvol(&["--scene", bad.to_str().unwrap(), "--command", "validate"]);
    assert_eq!(category_of(&out), "validation");
    assert!(String::from_utf8_lossy(&out.stderr).contains("line"));

    // Moving the matter loop to time zero, where it passes through R, violates the
    // volume precondition. The geometric loop moves away from time zero first.
    let at_zero = text.replace("[0.0, ", "[5.0, ").replace("[3.0, ", "[0.0, ");
    std::fs::write(&bad, at_zero).unwrap();
    let out = hlvol(&["--scene", bad.to_str().unwrap(), "--command", "volume"]);
    assert_eq!(category_of(&out), "precondition");
    assert_eq!(
        out.status.code(),
        Some(Error::Precondition(String::new()).exit_code())
    );
}
