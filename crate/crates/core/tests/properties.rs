use approx::assert_relative_eq;
use proptest::prelude::*;

use gyrodda::geometry::ShapeSpec;
use gyrodda::green::green_tensor_sep;
use gyrodda::material::{permittivity, MaterialParams};
use gyrodda::peaks::{find_peaks, linear_fit};
use gyrodda::scene::Scene;
use gyrodda::tensor::{vnorm, vsub, C64};

const UM: f64 = 1e-6;
const WP: f64 = 12.56e12;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn reversing_bias_transposes_permittivity(w in 0.05f64..3.0, b in -2.0f64..2.0) {
        let p = MaterialParams::default();
        let fwd = permittivity(&p, w * WP, b).unwrap().eps;
        let rev = permittivity(&p, w * WP, -b).unwrap().eps;
        for i in 0..3 {
            for j in 0..3 {
                prop_assert_eq!(fwd[i][j], rev[j][i]);
            }
        }
    }

    #[test]
    fn drude_tensor_is_passive(
        w in 0.05f64..3.0,
        b in -2.0f64..2.0,
        v in prop::array::uniform6(-1.0f64..1.0),
    ) {
        let t = permittivity(&MaterialParams::default(), w * WP, b).unwrap();
        let l = t.loss_part();
        let x = [C64::new(v[0], v[1]), C64::new(v[2], v[3]), C64::new(v[4], v[5])];
        let mut q = C64::new(0.0, 0.0);
        let mut scale: f64 = 0.0;
        for i in 0..3 {
            for j in 0..3 {
                q += x[i].conj() * l[i][j] * x[j];
                scale = scale.max(l[i][j].norm());
            }
        }
        prop_assert!(q.re >= -1e-12 * scale.max(1.0));
        prop_assert!(q.im.abs() <= 1e-9 * scale.max(1.0));
    }

    #[test]
    fn free_green_tensor_is_reciprocal(
        r in prop::array::uniform3(-50.0f64..50.0),
        k in 1e3f64..1e5,
    ) {
        let r = r.map(|c| c * UM);
        prop_assume!(vnorm(&r) > 1e-7);
        let g = green_tensor_sep(&r, k);
        let h = green_tensor_sep(&r.map(|c| -c), k);
        for i in 0..3 {
            for j in 0..3 {
                let tol = 1e-10 * g[i][j].norm().max(1.0);
                prop_assert!((g[i][j] - g[j][i]).norm() <= tol);
                prop_assert!((g[i][j] - h[i][j]).norm() <= tol);
            }
        }
    }

    #[test]
    fn offset_surface_keeps_its_gap(u in 0.0f64..=1.0, phi in -3.1f64..3.1, gap in 0.5f64..10.0) {
        for shape in [
            ShapeSpec::sphere(30.0 * UM, "insb"),
            ShapeSpec::hybrid_cylinder(35.0 * UM, 8.0 * UM, 80.0 * UM, "insb", "si"),
        ] {
            let s = shape.offset_surface(gap * UM);
            let p = s.point(u, phi);
            prop_assert!((shape.signed_distance(&p.position) - gap * UM).abs() < 1e-3 * gap * UM);
            prop_assert!((vnorm(&p.normal) - 1.0).abs() < 1e-12);
            let (u2, phi2) = s.locate(&p.position);
            let back = s.point(u2, phi2).position;
            prop_assert!(vnorm(&vsub(&back, &p.position)) < 1e-9);
        }
    }

    #[test]
    fn separated_gaussians_are_found(c1 in 0.15f64..0.35, c2 in 0.6f64..0.85, h in 0.5f64..3.0) {
        let x: Vec<f64> = (0..401).map(|i| i as f64 / 400.0).collect();
        let y: Vec<f64> = x
            .iter()
            .map(|&t| (-((t - c1) / 0.03).powi(2)).exp() + h * (-((t - c2) / 0.03).powi(2)).exp())
            .collect();
        let peaks = find_peaks(&x, &y);
        prop_assert_eq!(peaks.len(), 2);
        prop_assert!((peaks[0].x - c1).abs() < 2e-3);
        prop_assert!((peaks[1].x - c2).abs() < 2e-3);
    }

    #[test]
    fn line_fit_recovers_exact_lines(a in -5.0f64..5.0, b in 0.1f64..5.0) {
        let x = [0.05, 0.1, 0.2, 0.3, 0.7];
        let y: Vec<f64> = x.iter().map(|t| a + b * t).collect();
        let (a2, b2, r2) = linear_fit(&x, &y);
        prop_assert!((a2 - a).abs() < 1e-9 && (b2 - b).abs() < 1e-9);
        prop_assert!((r2 - 1.0).abs() < 1e-9);
    }
}

#[test]
fn bundled_scenes_survive_a_json_round_trip() {
    for name in [
        "insb_sphere",
        "insb_sphere_enz",
        "hybrid_cylinder_ed",
        "hybrid_cylinder_md",
    ] {
        let s = Scene::bundled(name).unwrap();
        let back = Scene::from_json(&s.to_json()).unwrap();
        assert_eq!(back, s);
        assert_eq!(back.hash(), s.hash());
    }
}

#[test]
fn cyclotron_term_grows_linearly_with_bias() {
    let p = MaterialParams::default();
    let w = 1.2 * WP;
    let base = permittivity(&p, w, 0.0).unwrap();
    let small = permittivity(&p, w, 1e-4).unwrap();
    let double = permittivity(&p, w, 2e-4).unwrap();
    assert_eq!(base.xy(), C64::new(0.0, 0.0));
    assert_relative_eq!(double.xy().norm() / small.xy().norm(), 2.0, max_relative = 1e-3);
}

#[test]
fn bundled_emitters_sit_outside_their_grids() {
    for name in [
        "insb_sphere",
        "insb_sphere_enz",
        "hybrid_cylinder_ed",
        "hybrid_cylinder_md",
    ] {
        let s = Scene::bundled(name).unwrap();
        let grid = s.voxelize(None).unwrap();
        for src in s.point_sources() {
            let p = src.position().unwrap();
            assert!(grid.distance_to_cells(&p) > 0.0, "{name}: source touches a voxel");
        }
    }
}
