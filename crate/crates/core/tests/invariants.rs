use crtool::cr::{a3_matrix, Thresholds, UmbilicFlag};
use crtool::scanner::{min_residual, scan_surface, ScanOptions};
use crtool::surface::Family;
use crtool::Complex64;
use proptest::prelude::*;

fn family(i: usize) -> Family {
    match i {
        0 => Family::flat_tube(0.7).unwrap(),
        1 => Family::log_tube(0.4).unwrap(),
        2 => Family::sphere(1.3).unwrap(),
        3 => Family::ellipsoid(1.0, 1.5, 2.0, 1.0).unwrap(),
        _ => Family::cartan_mu(2.5).unwrap(),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn flags_follow_thresholds(fi in 0usize..5, seed in any::<u64>(), n in 1usize..12) {
        let fam = family(fi);
        let recs = scan_surface(&fam, fam.level(), n, seed, &ScanOptions::default()).unwrap();
        prop_assert_eq!(recs.len(), n);
        let t = Thresholds::default();
        for r in &recs {
            prop_assert!(r.flag != UmbilicFlag::Poisoned, "{:?}", r.error);
            prop_assert_eq!(r.flag, t.classify(r.normalized_residual));
            prop_assert!(r.rho_residual.abs() <= 1e-12);
            // the Cartan defining function is oriented the other way
            if fi < 4 {
                prop_assert!(r.levi > 0.0);
            } else {
                prop_assert!(r.levi < 0.0);
            }
        }
    }

    #[test]
    fn scans_repeat_and_sharpen(fi in 0usize..5, seed in any::<u64>(), n in 1usize..8) {
        let fam = family(fi);
        let opts = ScanOptions::default();
        let a = scan_surface(&fam, fam.level(), n, seed, &opts).unwrap();
        let b = scan_surface(&fam, fam.level(), n, seed, &opts).unwrap();
        let big = scan_surface(&fam, fam.level(), 2 * n, seed, &opts).unwrap();
        prop_assert_eq!(&a, &b);
        prop_assert!(min_residual(&big) <= min_residual(&a));
    }

    #[test]
    fn flat_tube_motions(
        re_z in -3.0f64..3.0, re_w in -3.0f64..3.0, t in 0.0f64..std::f64::consts::TAU,
        a in -10.0f64..10.0, b in -10.0f64..10.0, phi in 0.0f64..std::f64::consts::TAU, reflect in any::<bool>(),
    ) {
        let fam = Family::flat_tube(1.0).unwrap();
        let z = Complex64::new(re_z, t.cos());
        let w = Complex64::new(re_w, t.sin());
        let d0 = a3_matrix(&fam, z, w, 6).unwrap().det();
        let dt = a3_matrix(&fam, z + a, w + b, 6).unwrap().det();
        let (s, c) = phi.sin_cos();
        let sg = if reflect { -1.0 } else { 1.0 };
        let dr = a3_matrix(&fam, z * c + w * s, (w * c - z * s) * sg, 6).unwrap().det();
        prop_assert!((dt - d0).norm() <= 1e-11 * d0.norm());
        prop_assert!((dr - d0).norm() <= 1e-11 * d0.norm());
    }
}
