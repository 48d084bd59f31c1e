//! CR data of a hypersurface `{ρ = const}` computed from jets of the
//! polarized defining function: the tangent `(1,0)` field
//! `L = −ρ_w ∂_z + ρ_z ∂_w`, iterated `L̄` derivatives, the Levi form, the
//! `5×5` umbilical obstruction matrix `A₃(ρ)` and related checks.

use std::fmt;

use num_complex::Complex64;
use thiserror::Error;

use crate::jet::{Jet, JetError, Var};
use crate::surface::{rho_jet, Family, FamilyKind, SurfaceError, SurfacePoint};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CrError {
    #[error(transparent)]
    Surface(#[from] SurfaceError),
    #[error(transparent)]
    Jet(#[from] JetError),
    #[error("{op} needs jets of degree at least {required}, got {actual}")]
    InsufficientDegree {
        op: &'static str,
        required: usize,
        actual: usize,
    },
    #[error("operation is only defined for the flat tube, got {0}")]
    NotFlatTube(FamilyKind),
    #[error("√ρ is not smooth where ρ = {0} ≤ 0")]
    NonPositiveRho(f64),
}

/// Smallest jet degree for which every entry of `A₃` is exact.
pub const A3_MIN_DEGREE: usize = 6;

/// Default working degree.
pub const DEFAULT_DEGREE: usize = 6;

fn need_degree(op: &'static str, jet: &Jet, required: usize) -> Result<(), CrError> {
    if jet.degree() < required {
        Err(CrError::InsufficientDegree {
            op,
            required,
            actual: jet.degree(),
        })
    } else {
        Ok(())
    }
}

/// Jets of the coefficients `(L₁, L₂) = (−ρ_w, ρ_z)` of `L`, of degree `D − 1`.
pub fn tangent_field(rho: &Jet) -> Result<(Jet, Jet), CrError> {
    need_degree("tangent_field", rho, 2)?;
    Ok((rho.pderiv(Var::W)?.neg(), rho.pderiv(Var::Z)?))
}

/// `L̄ = −ρ_ω ∂_ζ + ρ_ζ ∂_ω` as a derivation on polarized jets.
#[derive(Clone, Debug)]
pub struct LbarOperator {
    zeta_coeff: Jet,
    omega_coeff: Jet,
}

impl LbarOperator {
    pub fn new(rho: &Jet) -> Result<LbarOperator, CrError> {
        need_degree("lbar", rho, 1)?;
        Ok(LbarOperator {
            zeta_coeff: rho.pderiv(Var::Omega)?.neg(),
            omega_coeff: rho.pderiv(Var::Zeta)?,
        })
    }

    /// Applies `L̄` to `g`; the result has degree `g.degree() − 1`.
    pub fn apply(&self, g: &Jet) -> Result<Jet, CrError> {
        need_degree("lbar", g, 1)?;
        let out = g.degree() - 1;
        if self.zeta_coeff.degree() < out {
            return Err(CrError::InsufficientDegree {
                op: "lbar (defining function)",
                required: g.degree(),
                actual: self.zeta_coeff.degree() + 1,
            });
        }
        let a = self.zeta_coeff.truncate(out)?.mul(&g.pderiv(Var::Zeta)?)?;
        let b = self
            .omega_coeff
            .truncate(out)?
            .mul(&g.pderiv(Var::Omega)?)?;
        Ok(a.add(&b)?)
    }
}

/// `L̄ g` for a jet `g` and the defining-function jet `rho` (`deg ρ ≥ deg g`).
pub fn lbar_apply(g: &Jet, rho: &Jet) -> Result<Jet, CrError> {
    LbarOperator::new(rho)?.apply(g)
}

/// `ρ_{zζ}|L₁|² + ρ_{zω} L₁L̄₂ + ρ_{wζ} L₂L̄₁ + ρ_{wω}|L₂|²` at the base point,
/// before discarding the (round-off) imaginary part.
pub fn levi_value(rho: &Jet) -> Result<Complex64, CrError> {
    need_degree("levi_form", rho, 2)?;
    let l1 = -rho.coeff([0, 1, 0, 0]);
    let l2 = rho.coeff([1, 0, 0, 0]);
    let l1_bar = -rho.coeff([0, 0, 0, 1]);
    let l2_bar = rho.coeff([0, 0, 1, 0]);
    Ok(rho.partial([1, 0, 1, 0]) * l1 * l1_bar
        + rho.partial([1, 0, 0, 1]) * l1 * l2_bar
        + rho.partial([0, 1, 1, 0]) * l2 * l1_bar
        + rho.partial([0, 1, 0, 1]) * l2 * l2_bar)
}

/// Levi form evaluated on `(L, L̄)`.
pub fn levi_form(rho: &Jet) -> Result<f64, CrError> {
    Ok(levi_value(rho)?.re)
}

/// Jet of `ρ_{Z²}(L, L) = ρ_zz L₁² + 2 ρ_zw L₁L₂ + ρ_ww L₂²`, of degree `D − 2`.
pub fn hessian_form(rho: &Jet) -> Result<Jet, CrError> {
    need_degree("hessian_form", rho, 2)?;
    let rz = rho.pderiv(Var::Z)?;
    let rw = rho.pderiv(Var::W)?;
    let d = rho.degree() - 2;
    let l1 = rw.truncate(d)?.neg();
    let l2 = rz.truncate(d)?;
    let rzz = rz.pderiv(Var::Z)?;
    let rzw = rz.pderiv(Var::W)?;
    let rww = rw.pderiv(Var::W)?;
    Ok(rzz
        .mul(&l1.mul(&l1)?)?
        .add(&rzw.mul(&l1.mul(&l2)?)?.scale_re(2.0))?
        .add(&rww.mul(&l2.mul(&l2)?)?)?)
}

/// First- and second-order CR data at a point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CrFrame {
    pub rho: f64,
    /// `(ρ_z, ρ_w, ρ_ζ, ρ_ω)`
    pub grad: [Complex64; 4],
    /// `(−ρ_w, ρ_z)`
    pub l_coeffs: [Complex64; 2],
    pub levi: f64,
    pub hess_ll: Complex64,
}

impl CrFrame {
    pub fn from_rho(rho: &Jet) -> Result<CrFrame, CrError> {
        let grad = [
            rho.coeff([1, 0, 0, 0]),
            rho.coeff([0, 1, 0, 0]),
            rho.coeff([0, 0, 1, 0]),
            rho.coeff([0, 0, 0, 1]),
        ];
        Ok(CrFrame {
            rho: rho.value().re,
            grad,
            l_coeffs: [-grad[1], grad[0]],
            levi: levi_form(rho)?,
            hess_ll: hessian_form(rho)?.value(),
        })
    }
}

/// The matrix `A₃(ρ)`: rows generated by `ρ_w³, ρ_zρ_w², ρ_z²ρ_w, ρ_z³,
/// ρ_{Z²}(L,L)`, column `k` holding `L̄^k` of the row generator.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct A3Matrix {
    pub entries: [[Complex64; 5]; 5],
    pub row_generators: [Complex64; 5],
    pub point: SurfacePoint,
}

impl A3Matrix {
    pub fn det(&self) -> Complex64 {
        determinant(&self.entries)
    }

    pub fn normalized_residual(&self) -> f64 {
        equilibrated_ratio(&self.entries)
    }

    /// The `4×4` block of `L̄^k` (`k = 1..4`) applied to the first four generators.
    pub fn b_block(&self) -> [[Complex64; 4]; 4] {
        let mut b = [[Complex64::new(0.0, 0.0); 4]; 4];
        for (r, row) in b.iter_mut().enumerate() {
            row.copy_from_slice(&self.entries[r][1..5]);
        }
        b
    }
}

/// Entries of `A₃` from a jet of the defining function of degree `≥ 6`.
pub fn a3_entries(rho: &Jet) -> Result<[[Complex64; 5]; 5], CrError> {
    need_degree("a3_matrix", rho, A3_MIN_DEGREE)?;
    let lbar = LbarOperator::new(rho)?;
    // Four applications of L̄ only see terms up to degree 4.
    let a = rho.pderiv(Var::Z)?.truncate(4)?;
    let b = rho.pderiv(Var::W)?.truncate(4)?;
    let a2 = a.mul(&a)?;
    let b2 = b.mul(&b)?;
    let generators = [
        b2.mul(&b)?,
        a.mul(&b2)?,
        a2.mul(&b)?,
        a2.mul(&a)?,
        hessian_form(rho)?.truncate(4)?,
    ];
    let mut entries = [[Complex64::new(0.0, 0.0); 5]; 5];
    for (row, generator) in entries.iter_mut().zip(generators) {
        let mut g = generator;
        row[0] = g.value();
        for entry in row.iter_mut().skip(1) {
            g = lbar.apply(&g)?;
            *entry = g.value();
        }
    }
    Ok(entries)
}

/// `A₃(ρ)` for `family` at `(z, w)`. The point need not lie on the surface;
/// its residual is recorded.
pub fn a3_matrix(
    family: &Family,
    z: Complex64,
    w: Complex64,
    degree: usize,
) -> Result<A3Matrix, CrError> {
    let rho = rho_jet(family, z, w, degree)?;
    a3_from_rho(family, &rho, z, w)
}

/// `A₃` from an already computed jet of the defining function at `(z, w)`.
pub fn a3_from_rho(
    family: &Family,
    rho: &Jet,
    z: Complex64,
    w: Complex64,
) -> Result<A3Matrix, CrError> {
    let entries = a3_entries(rho)?;
    let mut row_generators = [Complex64::new(0.0, 0.0); 5];
    for (g, row) in row_generators.iter_mut().zip(&entries) {
        *g = row[0];
    }
    Ok(A3Matrix {
        entries,
        row_generators,
        point: SurfacePoint {
            z,
            w,
            residual: rho.value().re - family.level(),
            param: None,
        },
    })
}

pub fn det_a3(m: &A3Matrix) -> Complex64 {
    m.det()
}

pub fn normalized_residual(m: &A3Matrix) -> f64 {
    m.normalized_residual()
}

/// Determinant by LU factorization with partial pivoting.
pub fn determinant<const N: usize>(m: &[[Complex64; N]; N]) -> Complex64 {
    let mut a = *m;
    let mut det = Complex64::new(1.0, 0.0);
    for col in 0..N {
        let pivot = (col..N)
            .max_by(|&i, &j| a[i][col].norm().total_cmp(&a[j][col].norm()))
            .expect("non-empty range");
        let p = a[pivot][col];
        if p.norm() == 0.0 {
            return Complex64::new(0.0, 0.0);
        }
        if pivot != col {
            a.swap(pivot, col);
            det = -det;
        }
        det *= p;
        let (top, rest) = a.split_at_mut(col + 1);
        let pivot_row = &top[col];
        for row in rest.iter_mut() {
            let f = row[col] / p;
            for (x, upper) in row[col + 1..].iter_mut().zip(&pivot_row[col + 1..]) {
                *x -= f * upper;
            }
        }
    }
    det
}

/// `|det M| / Π ‖row_i‖`, which lies in `[0, 1]` by Hadamard's inequality.
/// Zero when some row vanishes.
pub fn hadamard_ratio<const N: usize>(m: &[[Complex64; N]; N]) -> f64 {
    let mut denom = 1.0;
    for row in m {
        let norm = row.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 {
            return 0.0;
        }
        denom *= norm;
    }
    determinant(m).norm() / denom
}

const BALANCING_SWEEPS: usize = 32;

/// Hadamard ratio after balancing the matrix so that every row and column
/// has unit Euclidean norm (alternating column and row scaling, a fixed
/// number of sweeps). Invariant under rescaling of individual rows and
/// columns, which makes it insensitive to the normalization of `L`.
/// Zero when some row or column vanishes.
pub fn equilibrated_ratio<const N: usize>(m: &[[Complex64; N]; N]) -> f64 {
    let mut a = *m;
    for _ in 0..BALANCING_SWEEPS {
        for col in 0..N {
            let norm = (0..N).map(|r| a[r][col].norm_sqr()).sum::<f64>().sqrt();
            if norm == 0.0 {
                return 0.0;
            }
            for row in a.iter_mut() {
                row[col] /= norm;
            }
        }
        for row in a.iter_mut() {
            let norm = row.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
            if norm == 0.0 {
                return 0.0;
            }
            for v in row.iter_mut() {
                *v /= norm;
            }
        }
    }
    hadamard_ratio(&a)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum UmbilicFlag {
    Nonumbilic,
    Candidate,
    Indeterminate,
    /// The point could not be evaluated.
    Poisoned,
}

impl UmbilicFlag {
    pub fn tag(self) -> &'static str {
        match self {
            UmbilicFlag::Nonumbilic => "nonumbilic",
            UmbilicFlag::Candidate => "candidate",
            UmbilicFlag::Indeterminate => "indeterminate",
            UmbilicFlag::Poisoned => "poisoned",
        }
    }
}

impl fmt::Display for UmbilicFlag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

/// Decision thresholds on the normalized residual.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Thresholds {
    /// Below this: umbilical candidate.
    pub candidate: f64,
    /// At or above this: non-umbilic. In between: indeterminate.
    pub nonumbilic: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Thresholds {
            candidate: 1e-7,
            nonumbilic: 1e-5,
        }
    }
}

impl Thresholds {
    pub fn classify(&self, normalized_residual: f64) -> UmbilicFlag {
        if !normalized_residual.is_finite() {
            UmbilicFlag::Poisoned
        } else if normalized_residual < self.candidate {
            UmbilicFlag::Candidate
        } else if normalized_residual < self.nonumbilic {
            UmbilicFlag::Indeterminate
        } else {
            UmbilicFlag::Nonumbilic
        }
    }
}

fn require_flat(family: &Family) -> Result<f64, CrError> {
    match family {
        Family::FlatTube { eps } => Ok(*eps),
        other => Err(CrError::NotFlatTube(other.kind())),
    }
}

/// The reduced matrix `B` of the flat tube.
pub fn b_matrix(
    family: &Family,
    z: Complex64,
    w: Complex64,
    degree: usize,
) -> Result<[[Complex64; 4]; 4], CrError> {
    require_flat(family)?;
    Ok(a3_matrix(family, z, w, degree)?.b_block())
}

/// `|det A₃ − ½ε² det B| / |det A₃|` on the flat tube.
pub fn reduction_check(
    family: &Family,
    z: Complex64,
    w: Complex64,
    degree: usize,
) -> Result<f64, CrError> {
    let eps = require_flat(family)?;
    let m = a3_matrix(family, z, w, degree)?;
    let det_a = m.det();
    let det_b = determinant(&m.b_block());
    Ok((det_a - det_b * (0.5 * eps * eps)).norm() / det_a.norm())
}

/// `|det (∂²√ρ / ∂z_i ∂z̄_j)|`, the complex Monge–Ampère determinant of `√ρ`.
pub fn monge_ampere_sqrt(
    family: &Family,
    z: Complex64,
    w: Complex64,
    degree: usize,
) -> Result<f64, CrError> {
    let rho = rho_jet(family, z, w, degree.max(2))?;
    let value = rho.value().re;
    if !(value > 0.0) {
        return Err(CrError::NonPositiveRho(value));
    }
    let s = rho.sqrt()?;
    let h = [
        [s.partial([1, 0, 1, 0]), s.partial([1, 0, 0, 1])],
        [s.partial([0, 1, 1, 0]), s.partial([0, 1, 0, 1])],
    ];
    Ok((h[0][0] * h[1][1] - h[0][1] * h[1][0]).norm())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::surface::sample_points;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    const ZERO: Complex64 = Complex64::new(0.0, 0.0);
    const ONE: Complex64 = Complex64::new(1.0, 0.0);

    fn flat(eps: f64) -> Family {
        Family::flat_tube(eps).unwrap()
    }

    #[test]
    fn tangent_field_examples() {
        let rho = rho_jet(&flat(1.0), ZERO, c(0.0, 1.0), 6).unwrap();
        let (l1, l2) = tangent_field(&rho).unwrap();
        assert!((l1.value() - c(0.0, 1.0)).norm() < 1e-15);
        assert!(l2.value().norm() < 1e-15);
        assert_eq!(l1.degree(), 5);

        let sphere = Family::sphere(1.0).unwrap();
        let rho = rho_jet(&sphere, ZERO, ONE, 6).unwrap();
        let (l1, l2) = tangent_field(&rho).unwrap();
        assert_eq!(l1.value(), -ONE);
        assert_eq!(l2.value(), ZERO);

        let low = rho_jet(&sphere, ZERO, ONE, 1).unwrap();
        assert!(matches!(
            tangent_field(&low),
            Err(CrError::InsufficientDegree { .. })
        ));
    }

    #[test]
    fn lbar_annihilates_rho() {
        for fam in [
            flat(1.0),
            Family::log_tube(0.5).unwrap(),
            Family::sphere(1.0).unwrap(),
            Family::ellipsoid(1.0, 2.0, 1.0, 3.0).unwrap(),
            Family::cartan_mu(2.0).unwrap(),
        ] {
            for p in sample_points(&fam, fam.level(), 10, 1).unwrap() {
                let rho = rho_jet(&fam, p.z, p.w, 6).unwrap();
                let t = lbar_apply(&rho, &rho).unwrap();
                assert_eq!(t.degree(), 5);
                assert!(t.max_abs() <= 1e-13, "{fam:?}: {}", t.max_abs());
            }
        }
    }

    #[test]
    fn lbar_of_rho_z_on_flat_tube() {
        let fam = flat(1.3);
        for p in sample_points(&fam, fam.level(), 10, 2).unwrap() {
            let rho = rho_jet(&fam, p.z, p.w, 6).unwrap();
            let rz = rho.pderiv(Var::Z).unwrap();
            let got = lbar_apply(&rz, &rho).unwrap().value();
            let rho_wbar = rho.coeff([0, 0, 0, 1]);
            assert!((got - (-rho_wbar * 0.5)).norm() < 1e-14);
        }
    }

    #[test]
    fn lbar_degree_checks() {
        let rho = rho_jet(&flat(1.0), ZERO, c(0.0, 1.0), 3).unwrap();
        let g = Jet::constant(ONE, 0);
        assert!(lbar_apply(&g, &rho).is_err());
        let big = rho_jet(&flat(1.0), ZERO, c(0.0, 1.0), 5).unwrap();
        assert!(lbar_apply(&big, &rho).is_err());
    }

    #[test]
    fn levi_examples() {
        let rho = rho_jet(&flat(1.0), ZERO, c(0.0, 1.0), 6).unwrap();
        assert!((levi_value(&rho).unwrap() - c(0.5, 0.0)).norm() < 1e-15);
        let rho = rho_jet(&Family::sphere(1.0).unwrap(), ZERO, ONE, 6).unwrap();
        assert!((levi_form(&rho).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn hessian_form_examples() {
        let f = flat(1.0);
        let rho = rho_jet(&f, ZERO, c(0.0, 1.0), 6).unwrap();
        let h = hessian_form(&rho).unwrap();
        assert_eq!(h.degree(), 4);
        assert!((h.value() - c(0.5, 0.0)).norm() < 1e-15);

        let f = flat(0.8);
        for p in sample_points(&f, f.level(), 20, 4).unwrap() {
            let rho = rho_jet(&f, p.z, p.w, 6).unwrap();
            let frame = CrFrame::from_rho(&rho).unwrap();
            assert!((frame.hess_ll - c(0.32, 0.0)).norm() < 1e-12);
            assert!(frame.levi > 0.0);
        }

        let s = Family::sphere(1.0).unwrap();
        let rho = rho_jet(&s, c(0.6, 0.0), c(0.0, 0.8), 6).unwrap();
        assert_eq!(hessian_form(&rho).unwrap(), Jet::zero(4));
    }

    #[test]
    fn determinant_basics() {
        let mut id = [[ZERO; 5]; 5];
        for (i, row) in id.iter_mut().enumerate() {
            row[i] = ONE;
        }
        assert_eq!(determinant(&id), ONE);
        assert_eq!(hadamard_ratio(&id), 1.0);
        assert_eq!(equilibrated_ratio(&id), 1.0);
        let mut zr = id;
        zr[2] = [ZERO; 5];
        assert_eq!(determinant(&zr), ZERO);
        assert_eq!(hadamard_ratio(&zr), 0.0);
        assert_eq!(equilibrated_ratio(&zr), 0.0);

        // 2x2 against the cofactor formula, with a required row swap
        let m = [[c(0.0, 0.0), c(1.0, 2.0)], [c(3.0, -1.0), c(0.5, 0.5)]];
        let expect = m[0][0] * m[1][1] - m[0][1] * m[1][0];
        assert!((determinant(&m) - expect).norm() < 1e-15);
    }

    #[test]
    fn determinant_matches_cofactor_expansion() {
        fn cofactor(m: &[Vec<Complex64>]) -> Complex64 {
            if m.len() == 1 {
                return m[0][0];
            }
            let mut acc = ZERO;
            for j in 0..m.len() {
                let minor: Vec<Vec<Complex64>> = m[1..]
                    .iter()
                    .map(|row| {
                        row.iter()
                            .enumerate()
                            .filter(|(k, _)| *k != j)
                            .map(|(_, v)| *v)
                            .collect()
                    })
                    .collect();
                let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
                acc += m[0][j] * cofactor(&minor) * sign;
            }
            acc
        }
        let mut m = [[ZERO; 5]; 5];
        for (i, row) in m.iter_mut().enumerate() {
            for (j, v) in row.iter_mut().enumerate() {
                *v = c(((3 * i + 7 * j) as f64).sin(), ((5 * i + j) as f64).cos());
            }
        }
        let rows: Vec<Vec<Complex64>> = m.iter().map(|r| r.to_vec()).collect();
        let expect = cofactor(&rows);
        assert!((determinant(&m) - expect).norm() < 1e-13 * expect.norm().max(1.0));
    }

    #[test]
    fn flat_tube_a3_structure() {
        let f = flat(1.0);
        let m = a3_matrix(&f, ZERO, c(0.0, 1.0), 6).unwrap();
        for k in 1..5 {
            assert!(m.entries[4][k].norm() <= 1e-12);
        }
        assert!((m.entries[4][0] - c(0.5, 0.0)).norm() < 1e-15);
        // ρ_w = −i at (0, i), so ρ_w³ = i
        assert!((m.row_generators[0] - c(0.0, 1.0)).norm() < 1e-15);
        assert!(m.det().norm() > 0.0);
        assert!(m.normalized_residual() > 1e-6);
        let b = b_matrix(&f, ZERO, c(0.0, 1.0), 6).unwrap();
        assert!(determinant(&b).norm() > 0.0);
        assert!(reduction_check(&f, ZERO, c(0.0, 1.0), 6).unwrap() < 1e-10);
    }

    #[test]
    fn a3_degree_requirements() {
        let f = flat(1.0);
        assert!(matches!(
            a3_matrix(&f, ZERO, c(0.0, 1.0), 5),
            Err(CrError::InsufficientDegree { .. })
        ));
        let m6 = a3_matrix(&f, c(0.2, 0.3), c(-0.1, 0.9), 6).unwrap();
        let m7 = a3_matrix(&f, c(0.2, 0.3), c(-0.1, 0.9), 7).unwrap();
        assert!((m6.det() - m7.det()).norm() <= 1e-12 * m6.det().norm());
    }

    #[test]
    fn sphere_is_umbilic_everywhere() {
        let s = Family::sphere(1.0).unwrap();
        for p in sample_points(&s, 0.0, 50, 5).unwrap() {
            let m = a3_matrix(&s, p.z, p.w, 6).unwrap();
            assert!(m.normalized_residual() < 1e-9);
            assert_eq!(
                Thresholds::default().classify(m.normalized_residual()),
                UmbilicFlag::Candidate
            );
        }
    }

    #[test]
    fn scaling_ratio_between_tubes() {
        // (z, w) ↦ (2z, 2w) maps the ε-tube onto the 2ε-tube
        let (z, w) = (c(0.3, 0.6), c(-1.2, 0.8));
        let d1 = a3_matrix(&flat(1.0), z, w, 6).unwrap().det();
        let d2 = a3_matrix(&flat(2.0), z * 2.0, w * 2.0, 6).unwrap().det();
        let ratio = d2.norm() / d1.norm();
        assert!((ratio / 16384.0 - 1.0).abs() < 1e-9, "{ratio}");
    }

    #[test]
    fn det_constant_on_flat_tube() {
        let f = flat(1.0);
        let pts = sample_points(&f, 1.0, 30, 6).unwrap();
        let dets: Vec<f64> = pts
            .iter()
            .map(|p| a3_matrix(&f, p.z, p.w, 6).unwrap().det().norm())
            .collect();
        for d in &dets {
            assert!((d / dets[0] - 1.0).abs() <= 1e-9);
        }
    }

    #[test]
    fn normalized_residual_translation_invariant() {
        let f = flat(1.0);
        let base = a3_matrix(&f, c(0.1, 0.6), c(0.2, 0.8), 6)
            .unwrap()
            .normalized_residual();
        for shift in [(-2.0, 0.5), (1.0, 3.0), (0.25, -0.75)] {
            let m = a3_matrix(&f, c(0.1 + shift.0, 0.6), c(0.2 + shift.1, 0.8), 6).unwrap();
            assert!((m.normalized_residual() - base).abs() <= 1e-9);
        }
    }

    proptest::proptest! {
        #![proptest_config(proptest::prelude::ProptestConfig::with_cases(64))]

        #[test]
        fn equilibrated_ratio_scale_invariant(
            seed in proptest::collection::vec(-1.0f64..1.0, 50),
            rs in proptest::collection::vec(0.01f64..100.0, 5),
            cs in proptest::collection::vec(0.01f64..100.0, 5),
        ) {
            let mut m = [[ZERO; 5]; 5];
            for i in 0..5 {
                for j in 0..5 {
                    m[i][j] = c(seed[2 * (5 * i + j)], seed[2 * (5 * i + j) + 1]);
                }
            }
            let mut scaled = m;
            for i in 0..5 {
                for j in 0..5 {
                    scaled[i][j] *= rs[i] * cs[j];
                }
            }
            let a = equilibrated_ratio(&m);
            let b = equilibrated_ratio(&scaled);
            proptest::prop_assert!((0.0..=1.0 + 1e-12).contains(&a));
            proptest::prop_assert!(hadamard_ratio(&m) <= 1.0 + 1e-12);
            proptest::prop_assert!((a - b).abs() <= 1e-6 * a.max(1e-3), "{} vs {}", a, b);
        }
    }

    #[test]
    fn thresholds() {
        let t = Thresholds::default();
        assert_eq!(t.classify(1e-8), UmbilicFlag::Candidate);
        assert_eq!(t.classify(1e-7), UmbilicFlag::Indeterminate);
        assert_eq!(t.classify(9.9e-6), UmbilicFlag::Indeterminate);
        assert_eq!(t.classify(1e-5), UmbilicFlag::Nonumbilic);
        assert_eq!(t.classify(f64::NAN), UmbilicFlag::Poisoned);
    }

    #[test]
    fn b_matrix_rejects_other_families() {
        let s = Family::sphere(1.0).unwrap();
        assert!(matches!(
            b_matrix(&s, ZERO, ONE, 6),
            Err(CrError::NotFlatTube(FamilyKind::Sphere))
        ));
        assert!(reduction_check(&s, ZERO, ONE, 6).is_err());
    }

    #[test]
    fn monge_ampere() {
        let f = flat(1.0);
        for p in sample_points(&f, 1.0, 20, 8).unwrap() {
            assert!(monge_ampere_sqrt(&f, p.z, p.w, 6).unwrap() <= 1e-10);
        }
        // sphere control: ρ = 0.44, |det| = |1 − 1.44/0.88| / (4 · 0.44)
        let s = Family::sphere(1.0).unwrap();
        let v = monge_ampere_sqrt(&s, ZERO, c(1.2, 0.0), 6).unwrap();
        let expect = (1.0f64 - 1.44 / 0.88).abs() / (4.0 * 0.44);
        assert!((v - expect).abs() < 1e-12, "{v} vs {expect}");
        assert!(matches!(
            monge_ampere_sqrt(&f, c(0.5, 0.0), c(-1.0, 0.0), 6),
            Err(CrError::NonPositiveRho(_))
        ));
    }
}
