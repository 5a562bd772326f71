use std::path::PathBuf;

use hyperlink_volume::commands::load_scene;
use hyperlink_volume::diagram::{half_twists, self_linking, tdp_filter};
use hyperlink_volume::geometry::{partition_region, Box3, Hyperlink, Region3};
use hyperlink_volume::observables::{
    limit_study, sk_combinatorial, sk_numeric, volume_kappa_approx, volume_operator,
};
use hyperlink_volume::scene::{Scene, SceneFile};
use num_complex::Complex64;
use proptest::prelude::*;

const CORPUS: [&str; 6] = [
    "golden",
    "split",
    "hopf",
    "hopf_scaled",
    "double_wind",
    "two_matter",
];

fn path(name: &str) -> PathBuf {
    [
        env!("CARGO_MANIFEST_DIR"),
        "scenes",
        &format!("{name}.toml"),
    ]
    .iter()
    .collect()
}

fn scene(name: &str) -> Scene {
    load_scene(&path(name), None).unwrap()
}

fn sk_comb(h: &Hyperlink, u: usize, plane: usize) -> i64 {
    h.geometric
        .iter()
        .map(|g| sk_combinatorial(&h.matter[u].curve, g, plane).unwrap())
        .sum()
}

fn tdp_counts(s: &Scene, r: &Region3) -> Vec<usize> {
    s.hyperlink
        .matter
        .iter()
        .enumerate()
        .map(|(u, m)| {
            let tw =
                half_twists(&m.curve, &m.frame, s.file.plane, &s.file.eps_schedule, u).unwrap();
            tdp_filter(&tw, r, s.file.plane).unwrap().count
        })
        .collect()
}

#[test]
fn numeric_sk_within_reported_error_on_corpus() {
    for name in CORPUS {
        let s = scene(name);
        for u in 0..s.hyperlink.matter.len() {
            let comb = sk_comb(&s.hyperlink, u, s.file.plane);
            let series = sk_numeric(
                &s.hyperlink.matter[u].curve,
                &s.hyperlink.geometric,
                &s.file.kappa_schedule,
                &s.quadrature,
            )
            .unwrap();
            let lim = series.limit;
            assert!(
                (lim.value - comb as f64).abs() <= lim.error.max(1e-12),
                "{name}[{u}]: {} vs {comb} (error {})",
                lim.value,
                lim.error
            );
        }
    }
}

#[test]
fn satellite_and_scaling() {
    let s = scene("double_wind");
    assert_eq!(sk_comb(&s.hyperlink, 0, 3).abs(), 2);
    let (a, b) = (scene("hopf"), scene("hopf_scaled"));
    assert_eq!(sk_comb(&a.hyperlink, 0, 3), sk_comb(&b.hyperlink, 0, 3));
}

#[test]
fn self_linking_is_plane_invariant() {
    let s = scene("hopf");
    let m = &s.hyperlink.matter[0];
    let per_plane: Vec<i64> = (1..=3)
        .map(|k| self_linking(&m.curve, &m.frame, k, &s.file.eps_schedule).unwrap())
        .collect();
    assert!(
        per_plane.iter().all(|x| *x == per_plane[0]),
        "{per_plane:?}"
    );
}

#[test]
fn volume_is_additive_over_covering_boxes() {
    let s = scene("golden");
    let sk = [sk_comb(&s.hyperlink, 0, 3) as f64];
    let whole = Region3::new(vec![
        Box3::new([-20.0, -20.0, -10.0], [20.0, 20.0, 10.0]).unwrap()
    ])
    .unwrap();
    let a = volume_operator(&s.hyperlink, &whole, 1.0, &sk, &tdp_counts(&s, &whole)).unwrap();
    let b = volume_operator(
        &s.hyperlink,
        &s.region,
        1.0,
        &sk,
        &tdp_counts(&s, &s.region),
    )
    .unwrap();
    assert_eq!(tdp_counts(&s, &whole), vec![2]);
    assert_eq!(a.v_value, b.v_value);
}

#[test]
fn permuting_matter_labels_keeps_values() {
    let s = scene("two_matter");
    let counts = tdp_counts(&s, &s.region);
    let sk: Vec<f64> = (0..2).map(|u| sk_comb(&s.hyperlink, u, 3) as f64).collect();
    let v = volume_operator(&s.hyperlink, &s.region, s.file.q, &sk, &counts).unwrap();
    let mut h = s.hyperlink.clone();
    h.matter.reverse();
    let w = volume_operator(
        &h,
        &s.region,
        s.file.q,
        &[sk[1], sk[0]],
        &[counts[1], counts[0]],
    )
    .unwrap();
    assert!((v.v_value - w.v_value).norm() <= 1e-12 * v.v_value.norm());
    assert!((v.z_value - w.z_value).norm() <= 1e-12 * v.z_value.norm());
}

#[test]
fn single_kappa_study_has_no_extrapolation() {
    let s = scene("golden");
    let p = partition_region(&s.region, &s.hyperlink, s.file.tube_radius, s.file.max_cell).unwrap();
    let study = limit_study(
        &s.hyperlink,
        s.file.q,
        &p,
        &[4.0],
        &s.file.eps_schedule[..2],
        Complex64::new(0.0, 0.0),
        &s.quadrature,
    )
    .unwrap();
    assert_eq!(study.rows.len(), 2);
    assert!(study.per_eps.iter().all(|e| e.limit.error.is_infinite()));
}

#[test]
fn region_away_from_matter_gives_small_values() {
    let s = scene("golden");
    let r = Region3::new(vec![Box3::new([-2.0; 3], [2.0; 3]).unwrap()]).unwrap();
    let p = partition_region(&r, &s.hyperlink, s.file.tube_radius, s.file.max_cell).unwrap();
    for kappa in [4.0, 8.0] {
        let a = volume_kappa_approx(
            &s.hyperlink,
            s.file.q,
            kappa,
            s.file.eps_schedule[0],
            &p,
            &s.quadrature,
        )
        .unwrap();
        assert!(a.value.norm() < 1e-6, "kappa {kappa}: {}", a.value);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn jitter_keeps_invariants(seed in any::<u64>()) {
        let text = std::fs::read_to_string(path("golden")).unwrap();
        let file = SceneFile::from_toml(&text).unwrap().jittered(seed);
        let reparsed = SceneFile::from_toml(&file.to_canonical().unwrap()).unwrap();
        prop_assert_eq!(&reparsed, &file);
        let s = file.build(None).unwrap();
        prop_assert_eq!(sk_comb(&s.hyperlink, 0, 3).abs(), 1);
        prop_assert_eq!(tdp_counts(&s, &s.region), vec![2]);
    }
}
