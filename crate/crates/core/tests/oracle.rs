use crtool::cr::a3_matrix;
use crtool::oracle::{flat_tube_a3_fd, max_relative_deviation};
use crtool::surface::{sample_points, Family};
use crtool::Complex64;
use proptest::prelude::*;

#[test]
fn first_row_at_axis_point() {
    let fam = Family::flat_tube(1.0).unwrap();
    let (z, w) = (Complex64::new(0.0, 0.0), Complex64::new(0.0, 1.0));
    let jet = a3_matrix(&fam, z, w, 6).unwrap().entries;
    let fd = flat_tube_a3_fd(z, w);
    let scale = jet[0].iter().map(|c| c.norm()).fold(0.0, f64::max);
    for k in 0..5 {
        assert!(
            (jet[0][k] - fd[0][k]).norm() <= 1e-6 * scale,
            "k = {k}: {} vs {}",
            jet[0][k],
            fd[0][k]
        );
    }
}

#[test]
fn sampled_points_match_finite_differences() {
    for eps in [0.5, 1.0, 2.0] {
        let fam = Family::flat_tube(eps).unwrap();
        for p in sample_points(&fam, fam.level(), 10, 11).unwrap() {
            let jet = a3_matrix(&fam, p.z, p.w, 6).unwrap().entries;
            let dev = max_relative_deviation(&flat_tube_a3_fd(p.z, p.w), &jet);
            assert!(dev <= 1e-5, "eps {eps}: {dev}");
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    // any point off the center, not just the surface
    #[test]
    fn arbitrary_points_match(re_z in -3.0f64..3.0, re_w in -3.0f64..3.0, t in 0.0f64..std::f64::consts::TAU, r in 0.3f64..2.0) {
        let fam = Family::flat_tube(1.0).unwrap();
        let z = Complex64::new(re_z, r * t.cos());
        let w = Complex64::new(re_w, r * t.sin());
        let jet = a3_matrix(&fam, z, w, 6).unwrap().entries;
        let dev = max_relative_deviation(&flat_tube_a3_fd(z, w), &jet);
        prop_assert!(dev <= 1e-5, "{}", dev);
    }
}
