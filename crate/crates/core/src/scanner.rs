//! Batch evaluation over sampled hypersurfaces.

mod nelder_mead;

pub use nelder_mead::{Minimum, NelderMead};

use num_complex::Complex64;
use rayon::prelude::*;
use thiserror::Error;

use crate::cr::{a3_from_rho, CrError, CrFrame, Thresholds, UmbilicFlag, DEFAULT_DEGREE};
use crate::surface::{rho_jet, sample_point, Family, FamilyKind, SurfaceError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ScanError {
    #[error("{0}")]
    Precondition(String),
    #[error(transparent)]
    Surface(#[from] SurfaceError),
    #[error(transparent)]
    Cr(#[from] CrError),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScanOptions {
    pub degree: usize,
    pub thresholds: Thresholds,
}

impl Default for ScanOptions {
    fn default() -> Self {
        ScanOptions {
            degree: DEFAULT_DEGREE,
            thresholds: Thresholds::default(),
        }
    }
}

/// Result of evaluating one point. A point that could not be sampled or
/// evaluated carries `flag = Poisoned`, the error text, and NaN in the
/// fields that were not reached.
#[derive(Clone, Debug, PartialEq)]
pub struct ScanRecord {
    pub family: Family,
    pub level: f64,
    pub param: Option<[f64; 3]>,
    pub z: Complex64,
    pub w: Complex64,
    pub rho_residual: f64,
    pub levi: f64,
    pub det_a3: Complex64,
    pub normalized_residual: f64,
    pub flag: UmbilicFlag,
    pub error: Option<String>,
}

impl ScanRecord {
    fn poisoned(
        family: &Family,
        level: f64,
        param: Option<[f64; 3]>,
        z: Complex64,
        w: Complex64,
        err: String,
    ) -> Self {
        let nan = f64::NAN;
        ScanRecord {
            family: *family,
            level,
            param,
            z,
            w,
            rho_residual: nan,
            levi: nan,
            det_a3: Complex64::new(nan, nan),
            normalized_residual: nan,
            flag: UmbilicFlag::Poisoned,
            error: Some(err),
        }
    }
}

/// Evaluates the CR data of `family` at `(z, w)`. Errors are folded into a
/// poisoned record.
pub fn evaluate_point(
    family: &Family,
    level: f64,
    z: Complex64,
    w: Complex64,
    param: Option<[f64; 3]>,
    opts: &ScanOptions,
) -> ScanRecord {
    let eval = || -> Result<ScanRecord, CrError> {
        let rho = rho_jet(family, z, w, opts.degree)?;
        let frame = CrFrame::from_rho(&rho)?;
        let m = a3_from_rho(family, &rho, z, w)?;
        let nr = m.normalized_residual();
        let det = m.det();
        let flag = if det.re.is_finite() && det.im.is_finite() && frame.levi.is_finite() {
            opts.thresholds.classify(nr)
        } else {
            UmbilicFlag::Poisoned
        };
        Ok(ScanRecord {
            family: *family,
            level,
            param,
            z,
            w,
            rho_residual: frame.rho - level,
            levi: frame.levi,
            det_a3: det,
            normalized_residual: nr,
            flag,
            error: None,
        })
    };
    eval().unwrap_or_else(|e| ScanRecord::poisoned(family, level, param, z, w, e.to_string()))
}

fn scan_index(
    family: &Family,
    level: f64,
    seed: u64,
    index: u64,
    opts: &ScanOptions,
) -> ScanRecord {
    match sample_point(family, level, seed, index) {
        Ok(p) => evaluate_point(family, level, p.z, p.w, p.param, opts),
        Err(e) => {
            let nan = Complex64::new(f64::NAN, f64::NAN);
            ScanRecord::poisoned(family, level, None, nan, nan, e.to_string())
        }
    }
}

/// Evaluates `count` sampled points of `{ρ = level}`. Records come back in
/// sample order whatever the thread count.
pub fn scan_surface(
    family: &Family,
    level: f64,
    count: usize,
    seed: u64,
    opts: &ScanOptions,
) -> Result<Vec<ScanRecord>, ScanError> {
    if count == 0 {
        return Err(ScanError::Precondition("count must be at least 1".into()));
    }
    Ok((0..count as u64)
        .into_par_iter()
        .map(|i| scan_index(family, level, seed, i, opts))
        .collect())
}

/// A local minimum of the normalized residual accepted by `find_umbilics`.
#[derive(Clone, Debug, PartialEq)]
pub struct UmbilicCandidate {
    pub start: usize,
    pub param: [f64; 3],
    pub z: Complex64,
    pub w: Complex64,
    pub normalized_residual: f64,
    pub det_a3: Complex64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct UmbilicSearch {
    pub starts: usize,
    /// Minima with residual at most `tol`, before deduplication.
    pub converged: usize,
    /// Deduplicated candidates, ordered by the start they came from.
    pub candidates: Vec<UmbilicCandidate>,
}

/// Candidates closer than this in `(Re z, Im z, Re w, Im w)` are merged.
pub const DEDUP_DISTANCE: f64 = 1e-4;

fn distance(a: &UmbilicCandidate, b: &UmbilicCandidate) -> f64 {
    ((a.z - b.z).norm_sqr() + (a.w - b.w).norm_sqr()).sqrt()
}

/// Multistart Nelder–Mead minimization of the normalized residual over the
/// three-parameter description of `{ρ = level}`. Starts are the parameters of
/// sampled points `0..starts` of stream `seed`.
pub fn find_umbilics(
    family: &Family,
    level: f64,
    starts: usize,
    seed: u64,
    tol: f64,
    opts: &ScanOptions,
) -> Result<UmbilicSearch, ScanError> {
    if starts == 0 {
        return Err(ScanError::Precondition("starts must be at least 1".into()));
    }
    let nm = NelderMead::default();
    let objective = |p: &[f64]| -> f64 {
        family
            .parameterize([p[0], p[1], p[2]], level)
            .map_err(CrError::from)
            .and_then(|(z, w)| {
                let rho = rho_jet(family, z, w, opts.degree)?;
                a3_from_rho(family, &rho, z, w)
            })
            .map(|m| m.normalized_residual())
            .unwrap_or(f64::INFINITY)
    };
    let minima: Vec<Option<UmbilicCandidate>> = (0..starts)
        .into_par_iter()
        .map(|i| {
            let x0 = sample_point(family, level, seed, i as u64).ok()?.param?;
            let min = nm.minimize(objective, &x0);
            if !(min.value <= tol) {
                return None;
            }
            let param = [min.x[0], min.x[1], min.x[2]];
            let (z, w) = family.parameterize(param, level).ok()?;
            let rho = rho_jet(family, z, w, opts.degree).ok()?;
            let m = a3_from_rho(family, &rho, z, w).ok()?;
            Some(UmbilicCandidate {
                start: i,
                param,
                z,
                w,
                normalized_residual: m.normalized_residual(),
                det_a3: m.det(),
            })
        })
        .collect();

    let converged = minima.iter().flatten().count();
    let mut candidates: Vec<UmbilicCandidate> = Vec::new();
    for c in minima.into_iter().flatten() {
        match candidates
            .iter_mut()
            .find(|k| distance(k, &c) < DEDUP_DISTANCE)
        {
            Some(k) if c.normalized_residual < k.normalized_residual => *k = c,
            Some(_) => {}
            None => candidates.push(c),
        }
    }
    Ok(UmbilicSearch {
        starts,
        converged,
        candidates,
    })
}

/// Relative spread above which a per-ε sample is not homogeneous.
pub const MAX_SPREAD: f64 = 1e-8;

#[derive(Clone, Debug, PartialEq)]
pub struct ScalingFit {
    pub eps_list: Vec<f64>,
    pub mean_abs_det: Vec<f64>,
    pub log_det: Vec<f64>,
    /// `(max − min) / mean` of `|det A₃|` over the points of each ε.
    pub spread: Vec<f64>,
    pub slope: f64,
    pub intercept: f64,
    /// `exp(intercept)`: the fitted `|det A₃|` at `ε = 1`.
    pub constant: f64,
    pub max_residual: f64,
    /// False when some spread exceeds `MAX_SPREAD`.
    pub valid: bool,
}

/// Least-squares fit of `log |det A₃|` against `log ε` on a tube family,
/// using the mean of `|det A₃|` over `points_per_eps` sampled points per ε.
pub fn fit_scaling(
    kind: FamilyKind,
    eps_list: &[f64],
    points_per_eps: usize,
    seed: u64,
    opts: &ScanOptions,
) -> Result<ScalingFit, ScanError> {
    let make = |eps: f64| match kind {
        FamilyKind::FlatTube => Family::flat_tube(eps),
        FamilyKind::LogTube => Family::log_tube(eps),
        other => Err(SurfaceError::InvalidParameter(format!(
            "scaling fits are defined for tube families, got {other}"
        ))),
    };
    let mut eps_sorted = eps_list.to_vec();
    eps_sorted.sort_by(f64::total_cmp);
    if eps_sorted.windows(2).any(|w| w[0] == w[1]) {
        return Err(ScanError::Precondition(
            "eps values must be distinct".into(),
        ));
    }
    if eps_sorted.len() < 3 {
        return Err(ScanError::Precondition(format!(
            "a scaling fit needs at least 3 distinct eps values, got {}",
            eps_sorted.len()
        )));
    }
    if points_per_eps == 0 {
        return Err(ScanError::Precondition(
            "points per eps must be at least 1".into(),
        ));
    }

    let mut mean_abs_det = Vec::with_capacity(eps_sorted.len());
    let mut spread = Vec::with_capacity(eps_sorted.len());
    for &eps in &eps_sorted {
        let family = make(eps)?;
        let records = scan_surface(&family, family.level(), points_per_eps, seed, opts)?;
        if let Some(bad) = records.iter().find(|r| r.flag == UmbilicFlag::Poisoned) {
            return Err(ScanError::Precondition(format!(
                "evaluation failed at eps = {eps}: {}",
                bad.error.as_deref().unwrap_or("non-finite value")
            )));
        }
        let dets: Vec<f64> = records.iter().map(|r| r.det_a3.norm()).collect();
        let mean = dets.iter().sum::<f64>() / dets.len() as f64;
        let (lo, hi) = dets
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &d| {
                (lo.min(d), hi.max(d))
            });
        mean_abs_det.push(mean);
        spread.push((hi - lo) / mean);
    }

    let xs: Vec<f64> = eps_sorted.iter().map(|e| e.ln()).collect();
    let ys: Vec<f64> = mean_abs_det.iter().map(|d| d.ln()).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let max_residual = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (y - (intercept + slope * x)).abs())
        .fold(0.0, f64::max);
    let valid = spread.iter().all(|s| *s <= MAX_SPREAD);

    Ok(ScalingFit {
        eps_list: eps_sorted,
        mean_abs_det,
        log_det: ys,
        spread,
        slope,
        intercept,
        constant: intercept.exp(),
        max_residual,
        valid,
    })
}

/// Smallest normalized residual among non-poisoned records.
pub fn min_residual(records: &[ScanRecord]) -> f64 {
    records
        .iter()
        .filter(|r| r.flag != UmbilicFlag::Poisoned)
        .map(|r| r.normalized_residual)
        .fold(f64::INFINITY, f64::min)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scan_is_deterministic_and_ordered() {
        let fam = Family::log_tube(0.5).unwrap();
        let opts = ScanOptions::default();
        let a = scan_surface(&fam, fam.level(), 40, 7, &opts).unwrap();
        let b = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .unwrap()
            .install(|| scan_surface(&fam, fam.level(), 40, 7, &opts).unwrap());
        assert_eq!(a.len(), 40);
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x.z.re.to_bits(), y.z.re.to_bits());
            assert_eq!(x.det_a3.im.to_bits(), y.det_a3.im.to_bits());
            assert_eq!(
                x.normalized_residual.to_bits(),
                y.normalized_residual.to_bits()
            );
        }
    }

    #[test]
    fn doubling_count_never_raises_the_floor() {
        let fam = Family::flat_tube(1.0).unwrap();
        let opts = ScanOptions::default();
        for n in [5, 20, 80] {
            let small = scan_surface(&fam, fam.level(), n, 3, &opts).unwrap();
            let big = scan_surface(&fam, fam.level(), 2 * n, 3, &opts).unwrap();
            assert_eq!(&big[..n], &small[..]);
            assert!(min_residual(&big) <= min_residual(&small));
        }
    }

    #[test]
    fn zero_count_is_rejected() {
        let fam = Family::sphere(1.0).unwrap();
        assert!(matches!(
            scan_surface(&fam, 0.0, 0, 0, &ScanOptions::default()),
            Err(ScanError::Precondition(_))
        ));
    }

    #[test]
    fn sphere_scan_is_all_candidates() {
        let fam = Family::sphere(1.0).unwrap();
        let recs = scan_surface(&fam, 0.0, 50, 1, &ScanOptions::default()).unwrap();
        assert!(recs
            .iter()
            .all(|r| r.flag == UmbilicFlag::Candidate && r.levi > 0.0));
    }

    #[test]
    fn off_domain_points_are_poisoned_not_fatal() {
        // log tube at the origin: log 0
        let fam = Family::log_tube(0.5).unwrap();
        let zero = Complex64::new(0.0, 0.0);
        let r = evaluate_point(&fam, fam.level(), zero, zero, None, &ScanOptions::default());
        assert_eq!(r.flag, UmbilicFlag::Poisoned);
        assert!(r.error.is_some());
        assert!(r.normalized_residual.is_nan());
    }

    #[test]
    fn flat_tube_has_no_umbilics() {
        let fam = Family::flat_tube(1.0).unwrap();
        let s = find_umbilics(&fam, fam.level(), 8, 0, 1e-7, &ScanOptions::default()).unwrap();
        assert_eq!(s.converged, 0);
        assert!(s.candidates.is_empty());
    }

    #[test]
    fn ellipsoid_search_finds_candidates() {
        let fam = Family::ellipsoid(1.0, 2.0, 1.0, 3.0).unwrap();
        let s = find_umbilics(&fam, 0.0, 16, 42, 1e-7, &ScanOptions::default()).unwrap();
        assert!(!s.candidates.is_empty());
        for c in &s.candidates {
            assert!(c.normalized_residual < 1e-7);
        }
        for (i, a) in s.candidates.iter().enumerate() {
            for b in &s.candidates[i + 1..] {
                assert!(distance(a, b) >= DEDUP_DISTANCE);
            }
        }
    }

    #[test]
    fn scaling_fit_on_flat_tube() {
        let fit = fit_scaling(
            FamilyKind::FlatTube,
            &[2.0, 0.5, 1.0],
            10,
            0,
            &ScanOptions::default(),
        )
        .unwrap();
        assert_eq!(fit.eps_list, vec![0.5, 1.0, 2.0]);
        assert!((fit.slope - 14.0).abs() < 1e-6, "{}", fit.slope);
        assert!(fit.valid);
    }

    #[test]
    fn scaling_fit_preconditions() {
        let opts = ScanOptions::default();
        assert!(fit_scaling(FamilyKind::FlatTube, &[1.0, 1.0, 2.0], 5, 0, &opts).is_err());
        assert!(fit_scaling(FamilyKind::FlatTube, &[1.0, 2.0], 5, 0, &opts).is_err());
        assert!(fit_scaling(FamilyKind::Sphere, &[1.0, 2.0, 3.0], 5, 0, &opts).is_err());
    }

    #[test]
    fn log_tube_is_not_homogeneous() {
        let fit = fit_scaling(
            FamilyKind::LogTube,
            &[0.25, 0.5, 1.0],
            20,
            0,
            &ScanOptions::default(),
        )
        .unwrap();
        assert!(!fit.valid);
    }
}
