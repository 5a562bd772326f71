//! Regenerates the scene corpus in `scenes/`.
//!
//! Run with `cargo run --example make_scenes`.

use std::f64::consts::TAU;
use std::path::Path;

use hyperlink_volume::rep::Spin;
use hyperlink_volume::scene::{BoxSpec, GeometricSpec, MatterSpec, SceneFile, Tolerances};
use nalgebra::{Rotation3, Vector3};
use toml::Spanned;

type V4 = [f64; 4];

fn sample(n: usize, phase: f64, t: f64, f: impl Fn(f64) -> [f64; 3]) -> Vec<V4> {
    (0..n)
        .map(|i| {
            let p = f(TAU * (i as f64 + phase) / n as f64);
            [t, p[0], p[1], p[2]]
        })
        .collect()
}

fn rotate(vs: &[V4], r: &Rotation3<f64>) -> Vec<V4> {
    vs.iter()
        .map(|v| {
            let p = r * Vector3::new(v[1], v[2], v[3]);
            [v[0], p.x, p.y, p.z]
        })
        .collect()
}

fn rotate3(vs: &[[f64; 3]], r: &Rotation3<f64>) -> Vec<[f64; 3]> {
    vs.iter()
        .map(|v| {
            let p = r * Vector3::new(v[0], v[1], v[2]);
            [p.x, p.y, p.z]
        })
        .collect()
}

/// Circle of radius `r` about `center` in the x1x2 plane, framed by a normal that
/// turns `turns` times about the tangent, giving 2 * turns half-twists in the x1x2 plane.
fn framed_circle(
    n: usize,
    r: f64,
    center: [f64; 2],
    t: f64,
    turns: f64,
) -> (Vec<V4>, Vec<[f64; 3]>) {
    let v = sample(n, 0.123, t, |a| {
        [center[0] + r * a.cos(), center[1] + r * a.sin(), 0.0]
    });
    let frame = (0..n)
        .map(|i| {
            let a = TAU * (i as f64 + 0.123) / n as f64;
            let phi = turns * a;
            [phi.cos() * a.cos(), phi.cos() * a.sin(), phi.sin()]
        })
        .collect();
    (v, frame)
}

fn spin(j: f64) -> Spin {
    Spin::new(j).unwrap()
}

fn matter(vertices: Vec<V4>, frame: Vec<[f64; 3]>, jp: f64, jm: f64) -> Spanned<MatterSpec> {
    Spanned::new(
        0..0,
        MatterSpec {
            j_plus: spin(jp),
            j_minus: spin(jm),
            vertices,
            frame,
        },
    )
}

fn geometric(vertices: Vec<V4>) -> Spanned<GeometricSpec> {
    Spanned::new(0..0, GeometricSpec { vertices })
}

fn region(min: [f64; 3], max: [f64; 3]) -> Spanned<BoxSpec> {
    Spanned::new(0..0, BoxSpec { min, max })
}

fn base(
    matter: Vec<Spanned<MatterSpec>>,
    geometric: Vec<Spanned<GeometricSpec>>,
    region: Vec<Spanned<BoxSpec>>,
) -> SceneFile {
    SceneFile {
        q: 1.0,
        plane: 3,
        tube_radius: 12.0,
        max_cell: 10.0,
        min_spatial_sep: 0.05,
        kappa_schedule: vec![4.0, 8.0, 16.0, 32.0],
        eps_schedule: vec![0.2, 0.1, 0.05],
        tolerances: Tolerances::default(),
        matter,
        geometric,
        region,
    }
}

fn hopf(scale: f64) -> SceneFile {
    let rot = Rotation3::from_euler_angles(0.31, -0.47, 0.73);
    let a = sample(64, 0.123, 0.0, |t| [scale * t.cos(), scale * t.sin(), 0.0]);
    let b = sample(64, 0.371, 0.5 * scale, |t| {
        [scale * (1.0 + t.cos()), 0.0, scale * t.sin()]
    });
    let frame = rotate3(&vec![[0.0, 0.0, 1.0]; 64], &rot);
    let mut s = base(
        vec![matter(rotate(&a, &rot), frame, 0.5, 0.5)],
        vec![geometric(rotate(&b, &rot))],
        vec![region([-0.5 * scale; 3], [0.5 * scale; 3])],
    );
    s.eps_schedule = vec![0.05 * scale, 0.025 * scale, 0.0125 * scale];
    s
}

fn main() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("scenes");
    std::fs::create_dir_all(&dir).unwrap();

    // One framed circle with two half-twists, both inside R, linked once by a tilted
    // geometric circle.
    let (v, f) = framed_circle(64, 8.0, [0.0, 0.0], 3.0, 1.0);
    let tilt = Rotation3::from_axis_angle(&Vector3::x_axis(), 0.29);
    let g = rotate(
        &sample(48, 0.371, 0.0, |t| [3.0 * t.cos(), 0.0, 3.0 * t.sin()]),
        &tilt,
    )
    .into_iter()
    .map(|p| [p[0], p[1] + 8.0, p[2], p[3]])
    .collect();
    let mut golden = base(
        vec![matter(v, f, 0.5, 0.5)],
        vec![geometric(g)],
        vec![
            region([-5.0, 3.0, -5.0], [5.0, 13.0, 5.0]),
            region([-5.0, -13.0, -5.0], [5.0, -3.0, 5.0]),
        ],
    );
    golden.eps_schedule = vec![0.8, 0.4, 0.2];

    let rot = Rotation3::from_euler_angles(0.2, 0.5, -0.3);
    let a = sample(48, 0.123, 0.0, |t| [t.cos(), t.sin(), 0.0]);
    let b = sample(48, 0.371, 0.5, |t| [6.0 + t.cos(), 0.0, t.sin()]);
    let split = base(
        vec![matter(
            rotate(&a, &rot),
            rotate3(&vec![[0.0, 0.0, 1.0]; 48], &rot),
            0.5,
            0.0,
        )],
        vec![geometric(rotate(&b, &rot))],
        vec![region([-0.5; 3], [0.5; 3])],
    );

    // Torus curve winding twice around the core circle of its torus.
    let (rr, r) = (4.0, 1.5);
    let w = sample(96, 0.217, 0.0, |p| {
        let rad = rr + r * (2.0 * p).cos();
        [rad * p.cos(), rad * p.sin(), r * (2.0 * p).sin()]
    });
    let core = sample(64, 0.4, 1.0, |t| [rr * t.cos(), rr * t.sin(), 0.0]);
    let radial = (0..96)
        .map(|i| {
            let p = TAU * (i as f64 + 0.217) / 96.0;
            [p.cos(), p.sin(), 0.0]
        })
        .collect();
    let double_wind = base(
        vec![matter(w, radial, 1.0, 0.5)],
        vec![geometric(core)],
        vec![region([-1.0; 3], [1.0; 3])],
    );

    // Two framed circles, each with two half-twists; a geometric circle links the first.
    let (v1, f1) = framed_circle(48, 3.0, [0.0, 0.0], 2.0, 1.0);
    let (v2, f2) = framed_circle(48, 3.0, [12.0, 0.0], -2.0, 1.0);
    let g = sample(48, 0.371, 0.0, |t| {
        [3.0 + 1.5 * t.cos(), 0.0, 1.5 * t.sin()]
    });
    let g = rotate(&g, &Rotation3::from_euler_angles(0.27, 0.0, 0.21));
    let mut two = base(
        vec![matter(v1, f1, 0.5, 0.5), matter(v2, f2, 1.0, 1.0)],
        vec![geometric(g)],
        vec![
            region([-2.0, 1.0, -2.0], [2.0, 5.0, 2.0]),
            region([-2.0, -5.0, -2.0], [2.0, -1.0, 2.0]),
            region([10.0, 1.0, -2.0], [14.0, 5.0, 2.0]),
        ],
    );
    two.tube_radius = 4.0;
    two.max_cell = 4.0;
    two.eps_schedule = vec![0.3, 0.15, 0.075];

    for (name, s) in [
        ("golden", golden),
        ("split", split),
        ("hopf", hopf(1.0)),
        ("hopf_scaled", hopf(3.0)),
        ("double_wind", double_wind),
        ("two_matter", two),
    ] {
        let text = s.to_canonical().unwrap();
        std::fs::write(dir.join(format!("{name}.toml")), text).unwrap();
        println!("wrote {name}.toml");
    }
}
