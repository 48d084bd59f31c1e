//! Truncated multivariate Taylor polynomials ("jets") in four polarized
//! complex variables `(z, w, ζ, ω)`, where `ζ` and `ω` stand in for `z̄` and
//! `w̄` treated as independent variables.
//!
//! Coefficients are stored densely in graded order: all monomials of total
//! degree 0, then degree 1, and so on. A degree-`d` jet is therefore a
//! prefix of the same jet at any higher degree, and the truncated product
//! table for degree `d` is a prefix of the table for `MAX_DEGREE`.

use std::fmt;
use std::sync::OnceLock;

use num_complex::Complex64;
use thiserror::Error;

/// Number of polarized variables.
pub const NVARS: usize = 4;

/// Largest supported truncation degree.
pub const MAX_DEGREE: usize = 12;

/// Exponents `(a, b, c, d)` of `z^a w^b ζ^c ω^d`.
pub type MultiIndex = [usize; NVARS];

/// One of the four polarized coordinates.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Var {
    Z = 0,
    W = 1,
    Zeta = 2,
    Omega = 3,
}

impl Var {
    pub const ALL: [Var; NVARS] = [Var::Z, Var::W, Var::Zeta, Var::Omega];

    pub fn index(self) -> usize {
        self as usize
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum JetError {
    #[error("jet degree mismatch: {left} vs {right}")]
    DegreeMismatch { left: usize, right: usize },
    #[error("{op} needs a jet of degree at least {required}, got {actual}")]
    DegreeTooLow {
        op: &'static str,
        required: usize,
        actual: usize,
    },
    #[error("degree {0} exceeds the supported maximum {MAX_DEGREE}")]
    DegreeTooHigh(usize),
    #[error("{op} of a jet with zero constant term{}", fmt_base(.base))]
    ZeroConstant {
        op: &'static str,
        base: Option<[Complex64; NVARS]>,
    },
    #[error("log of a jet whose constant term {value} lies on the branch cut{}", fmt_base(.base))]
    BranchCut {
        value: Complex64,
        base: Option<[Complex64; NVARS]>,
    },
}

fn fmt_base(base: &Option<[Complex64; NVARS]>) -> String {
    match base {
        Some(b) => format!(" (base point z={}, w={})", b[0], b[1]),
        None => String::new(),
    }
}

struct Tables {
    monomials: Vec<MultiIndex>,
    lookup: Vec<u32>,
    /// Triples `(i, j, k)` with `monomial[i] + monomial[j] = monomial[k]`,
    /// grouped by `k` in graded order.
    products: Vec<(u32, u32, u32)>,
    /// `product_offsets[d]` is the number of triples whose result has degree `< d`.
    product_offsets: Vec<usize>,
}

const SIDE: usize = MAX_DEGREE + 1;

fn lookup_slot(m: &MultiIndex) -> usize {
    ((m[0] * SIDE + m[1]) * SIDE + m[2]) * SIDE + m[3]
}

fn tables() -> &'static Tables {
    static TABLES: OnceLock<Tables> = OnceLock::new();
    TABLES.get_or_init(build_tables)
}

fn build_tables() -> Tables {
    let mut monomials = Vec::new();
    for deg in 0..=MAX_DEGREE {
        for a in (0..=deg).rev() {
            for b in (0..=deg - a).rev() {
                for c in (0..=deg - a - b).rev() {
                    monomials.push([a, b, c, deg - a - b - c]);
                }
            }
        }
    }

    let mut lookup = vec![u32::MAX; SIDE.pow(4)];
    for (i, m) in monomials.iter().enumerate() {
        lookup[lookup_slot(m)] = i as u32;
    }

    let mut products = Vec::new();
    let mut product_offsets = vec![0usize; MAX_DEGREE + 2];
    for (k, mk) in monomials.iter().enumerate() {
        let deg: usize = mk.iter().sum();
        for a in 0..=mk[0] {
            for b in 0..=mk[1] {
                for c in 0..=mk[2] {
                    for d in 0..=mk[3] {
                        let mi = [a, b, c, d];
                        let mj = [mk[0] - a, mk[1] - b, mk[2] - c, mk[3] - d];
                        let i = lookup[lookup_slot(&mi)];
                        let j = lookup[lookup_slot(&mj)];
                        products.push((i, j, k as u32));
                    }
                }
            }
        }
        product_offsets[deg + 1] = products.len();
    }

    Tables {
        monomials,
        lookup,
        products,
        product_offsets,
    }
}

/// Number of monomials of total degree `≤ degree` in four variables, `C(degree+4, 4)`.
pub fn coeff_count(degree: usize) -> usize {
    (degree + 1) * (degree + 2) * (degree + 3) * (degree + 4) / 24
}

/// Position of a multi-index in the graded ordering, if it is representable.
pub fn rank(m: &MultiIndex) -> Option<usize> {
    if m.iter().sum::<usize>() > MAX_DEGREE {
        return None;
    }
    Some(tables().lookup[lookup_slot(m)] as usize)
}

/// Multi-index at a given position of the graded ordering.
pub fn unrank(i: usize) -> MultiIndex {
    tables().monomials[i]
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

fn check_degree(degree: usize) -> Result<(), JetError> {
    if degree > MAX_DEGREE {
        Err(JetError::DegreeTooHigh(degree))
    } else {
        Ok(())
    }
}

/// A truncated Taylor polynomial of total degree `≤ degree` about a base point.
///
/// The coefficient of multi-index `(a, b, c, d)` multiplies
/// `(z−z₀)^a (w−w₀)^b (ζ−ζ₀)^c (ω−ω₀)^d`.
#[derive(Clone)]
pub struct Jet {
    degree: usize,
    coeffs: Vec<Complex64>,
    // Only used in error messages.
    base: Option<[Complex64; NVARS]>,
}

impl PartialEq for Jet {
    fn eq(&self, other: &Self) -> bool {
        self.degree == other.degree && self.coeffs == other.coeffs
    }
}

impl fmt::Debug for Jet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut s = f.debug_map();
        for (i, c) in self.coeffs.iter().enumerate() {
            if *c != Complex64::new(0.0, 0.0) {
                s.entry(&unrank(i), c);
            }
        }
        s.finish()
    }
}

impl Jet {
    /// The zero jet of the given degree.
    ///
    /// Panics if `degree > MAX_DEGREE`.
    pub fn zero(degree: usize) -> Jet {
        assert!(degree <= MAX_DEGREE, "jet degree {degree} > {MAX_DEGREE}");
        Jet {
            degree,
            coeffs: vec![Complex64::new(0.0, 0.0); coeff_count(degree)],
            base: None,
        }
    }

    /// A constant jet.
    ///
    /// Panics if `degree > MAX_DEGREE`.
    pub fn constant(value: Complex64, degree: usize) -> Jet {
        let mut j = Jet::zero(degree);
        j.coeffs[0] = value;
        j
    }

    /// Jet of a coordinate function at a base value of that coordinate.
    pub fn variable(var: Var, base_value: Complex64, degree: usize) -> Result<Jet, JetError> {
        check_degree(degree)?;
        if degree == 0 {
            return Err(JetError::DegreeTooLow {
                op: "variable",
                required: 1,
                actual: 0,
            });
        }
        let mut j = Jet::constant(base_value, degree);
        j.coeffs[1 + var.index()] = Complex64::new(1.0, 0.0);
        Ok(j)
    }

    /// Builds a jet from coefficients in graded order.
    pub fn from_coeffs(degree: usize, coeffs: Vec<Complex64>) -> Result<Jet, JetError> {
        check_degree(degree)?;
        assert_eq!(coeffs.len(), coeff_count(degree), "coefficient count");
        Ok(Jet {
            degree,
            coeffs,
            base: None,
        })
    }

    /// Attaches a base point `(z₀, w₀, ζ₀, ω₀)` used in diagnostics.
    pub fn with_base(mut self, base: [Complex64; NVARS]) -> Jet {
        self.base = Some(base);
        self
    }

    pub fn base(&self) -> Option<[Complex64; NVARS]> {
        self.base
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    /// Coefficient of a multi-index; zero if its degree exceeds the jet's.
    pub fn coeff(&self, m: MultiIndex) -> Complex64 {
        if m.iter().sum::<usize>() > self.degree {
            return Complex64::new(0.0, 0.0);
        }
        self.coeffs[rank(&m).expect("degree checked")]
    }

    /// Partial derivative `∂^{a+b+c+d}/∂z^a∂w^b∂ζ^c∂ω^d` at the base point.
    pub fn partial(&self, m: MultiIndex) -> Complex64 {
        let scale: f64 = m.iter().map(|&k| factorial(k)).product();
        self.coeff(m) * scale
    }

    /// Value at the base point.
    pub fn value(&self) -> Complex64 {
        self.coeffs[0]
    }

    /// Largest coefficient modulus.
    pub fn max_abs(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    /// Drops every term above `degree`.
    pub fn truncate(&self, degree: usize) -> Result<Jet, JetError> {
        if degree > self.degree {
            return Err(JetError::DegreeTooLow {
                op: "truncate",
                required: degree,
                actual: self.degree,
            });
        }
        Ok(Jet {
            degree,
            coeffs: self.coeffs[..coeff_count(degree)].to_vec(),
            base: self.base,
        })
    }

    fn same_degree(&self, other: &Jet) -> Result<(), JetError> {
        if self.degree != other.degree {
            return Err(JetError::DegreeMismatch {
                left: self.degree,
                right: other.degree,
            });
        }
        Ok(())
    }

    fn merged_base(&self, other: &Jet) -> Option<[Complex64; NVARS]> {
        self.base.or(other.base)
    }

    fn zip_with(
        &self,
        other: &Jet,
        f: impl Fn(Complex64, Complex64) -> Complex64,
    ) -> Result<Jet, JetError> {
        self.same_degree(other)?;
        Ok(Jet {
            degree: self.degree,
            coeffs: self
                .coeffs
                .iter()
                .zip(&other.coeffs)
                .map(|(&a, &b)| f(a, b))
                .collect(),
            base: self.merged_base(other),
        })
    }

    pub fn add(&self, other: &Jet) -> Result<Jet, JetError> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Jet) -> Result<Jet, JetError> {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn neg(&self) -> Jet {
        self.map(|c| -c)
    }

    pub fn scale(&self, s: Complex64) -> Jet {
        self.map(|c| c * s)
    }

    pub fn scale_re(&self, s: f64) -> Jet {
        self.map(|c| c * s)
    }

    /// Adds a constant to the value.
    pub fn add_scalar(&self, s: Complex64) -> Jet {
        let mut out = self.clone();
        out.coeffs[0] += s;
        out
    }

    fn map(&self, f: impl Fn(Complex64) -> Complex64) -> Jet {
        Jet {
            degree: self.degree,
            coeffs: self.coeffs.iter().map(|&c| f(c)).collect(),
            base: self.base,
        }
    }

    /// Cauchy product truncated at the common degree.
    pub fn mul(&self, other: &Jet) -> Result<Jet, JetError> {
        self.same_degree(other)?;
        let t = tables();
        let mut out = vec![Complex64::new(0.0, 0.0); self.coeffs.len()];
        let end = t.product_offsets[self.degree + 1];
        for &(i, j, k) in &t.products[..end] {
            out[k as usize] += self.coeffs[i as usize] * other.coeffs[j as usize];
        }
        Ok(Jet {
            degree: self.degree,
            coeffs: out,
            base: self.merged_base(other),
        })
    }

    /// `self^n` by repeated squaring; `n = 0` gives the unit jet.
    pub fn pow(&self, n: u32) -> Jet {
        let mut result = Jet::constant(Complex64::new(1.0, 0.0), self.degree);
        result.base = self.base;
        let mut square = self.clone();
        let mut n = n;
        while n > 0 {
            if n & 1 == 1 {
                result = result.mul(&square).expect("equal degrees");
            }
            n >>= 1;
            if n > 0 {
                square = square.mul(&square).expect("equal degrees");
            }
        }
        result
    }

    /// Formal partial derivative; the result has degree `degree − 1`.
    pub fn pderiv(&self, var: Var) -> Result<Jet, JetError> {
        if self.degree == 0 {
            return Err(JetError::DegreeTooLow {
                op: "pderiv",
                required: 1,
                actual: 0,
            });
        }
        let t = tables();
        let v = var.index();
        let degree = self.degree - 1;
        let mut coeffs = vec![Complex64::new(0.0, 0.0); coeff_count(degree)];
        for (k, out) in coeffs.iter_mut().enumerate() {
            let mut m = t.monomials[k];
            m[v] += 1;
            let src = t.lookup[lookup_slot(&m)] as usize;
            *out = self.coeffs[src] * m[v] as f64;
        }
        Ok(Jet {
            degree,
            coeffs,
            base: self.base,
        })
    }

    /// Evaluates `Σ series[k] (self − self₀)^k`, where `series` holds the
    /// Taylor coefficients of a scalar function at the constant term.
    fn compose(&self, series: &[Complex64]) -> Jet {
        let mut nilpotent = self.clone();
        nilpotent.coeffs[0] = Complex64::new(0.0, 0.0);
        let mut acc = Jet::constant(series[self.degree], self.degree);
        acc.base = self.base;
        for k in (0..self.degree).rev() {
            acc = acc
                .mul(&nilpotent)
                .expect("equal degrees")
                .add_scalar(series[k]);
        }
        acc
    }

    pub fn exp(&self) -> Jet {
        let e = self.value().exp();
        let series: Vec<Complex64> = (0..=self.degree).map(|k| e / factorial(k)).collect();
        self.compose(&series)
    }

    /// Principal-branch logarithm. Rejects a zero constant term and constant
    /// terms on the negative real axis.
    pub fn log(&self) -> Result<Jet, JetError> {
        let a0 = self.value();
        if a0.norm() == 0.0 {
            return Err(JetError::ZeroConstant {
                op: "log",
                base: self.base,
            });
        }
        if a0.im == 0.0 && a0.re < 0.0 {
            return Err(JetError::BranchCut {
                value: a0,
                base: self.base,
            });
        }
        let inv = a0.inv();
        let mut series = Vec::with_capacity(self.degree + 1);
        series.push(a0.ln());
        let mut p = Complex64::new(1.0, 0.0);
        for k in 1..=self.degree {
            p *= inv;
            let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
            series.push(p * (sign / k as f64));
        }
        Ok(self.compose(&series))
    }

    /// Principal-branch square root.
    pub fn sqrt(&self) -> Result<Jet, JetError> {
        let a0 = self.value();
        if a0.norm() == 0.0 {
            return Err(JetError::ZeroConstant {
                op: "sqrt",
                base: self.base,
            });
        }
        let s = a0.sqrt();
        let inv = a0.inv();
        let mut series = Vec::with_capacity(self.degree + 1);
        // binom(1/2, k) / a0^k
        let mut binom = 1.0;
        let mut p = Complex64::new(1.0, 0.0);
        for k in 0..=self.degree {
            series.push(s * p * binom);
            binom *= (0.5 - k as f64) / (k as f64 + 1.0);
            p *= inv;
        }
        Ok(self.compose(&series))
    }
}
