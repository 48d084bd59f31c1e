//! Jet-free reference values for the flat tube.
//!
//! In polarized coordinates the vector field `L̄ = −ρ_ω ∂_ζ + ρ_ζ ∂_ω` of the
//! flat tube is linear: with `u = z − ζ`, `v = w − ω` it reads
//! `u' = v/2`, `v' = −u/2` (and `z`, `w` fixed), so its flow is a rotation.
//! Iterated derivatives `L̄^k g(p)` equal `d^k/dt^k g(Φ_t(p))` at `t = 0`,
//! which are estimated here with central differences and one Richardson step.

use num_complex::Complex64;

/// Step for first derivatives. Order `k` uses `FD_BASE_STEP · 4^(k−1)`:
/// a fourth difference at `10⁻³` would lose about `16 ε / h⁴ ≈ 10⁻³` to
/// cancellation.
pub const FD_BASE_STEP: f64 = 1e-3;

pub fn fd_step(order: usize) -> f64 {
    FD_BASE_STEP * 4f64.powi(order.saturating_sub(1) as i32)
}

/// Flow of `L̄` for time `t`, in the variables `(u, v)`.
pub fn flat_tube_flow(u: Complex64, v: Complex64, t: f64) -> (Complex64, Complex64) {
    let (s, c) = (0.5 * t).sin_cos();
    (u * c + v * s, v * c - u * s)
}

/// Row generators `(ρ_w³, ρ_zρ_w², ρ_z²ρ_w, ρ_z³, ρ/2)` of the flat tube as
/// closed-form functions of `(u, v)`: `ρ_z = −u/2`, `ρ_w = −v/2`,
/// `ρ = −(u² + v²)/4`.
pub fn flat_tube_generators(u: Complex64, v: Complex64) -> [Complex64; 5] {
    let a = -u * 0.5;
    let b = -v * 0.5;
    [
        b * b * b,
        a * b * b,
        a * a * b,
        a * a * a,
        -(u * u + v * v) * 0.125,
    ]
}

/// Central difference of order `0..=4` with step `h` (error `O(h²)`).
pub fn central_difference(f: &impl Fn(f64) -> Complex64, order: usize, h: f64) -> Complex64 {
    match order {
        0 => f(0.0),
        1 => (f(h) - f(-h)) / (2.0 * h),
        2 => (f(h) - f(0.0) * 2.0 + f(-h)) / (h * h),
        3 => (f(2.0 * h) - f(h) * 2.0 + f(-h) * 2.0 - f(-2.0 * h)) / (2.0 * h.powi(3)),
        4 => (f(2.0 * h) - f(h) * 4.0 + f(0.0) * 6.0 - f(-h) * 4.0 + f(-2.0 * h)) / h.powi(4),
        _ => panic!("central_difference supports orders 0..=4, got {order}"),
    }
}

/// Central difference with one Richardson extrapolation step (error `O(h⁴)`).
pub fn richardson(f: &impl Fn(f64) -> Complex64, order: usize, h: f64) -> Complex64 {
    if order == 0 {
        return f(0.0);
    }
    let coarse = central_difference(f, order, h);
    let fine = central_difference(f, order, 0.5 * h);
    (fine * 4.0 - coarse) / 3.0
}

/// Finite-difference estimate of the flat-tube matrix `A₃` at `(z, w)`.
pub fn flat_tube_a3_fd(z: Complex64, w: Complex64) -> [[Complex64; 5]; 5] {
    let u0 = z - z.conj();
    let v0 = w - w.conj();
    let mut out = [[Complex64::new(0.0, 0.0); 5]; 5];
    for (row, entries) in out.iter_mut().enumerate() {
        let g = |t: f64| {
            let (u, v) = flat_tube_flow(u0, v0, t);
            flat_tube_generators(u, v)[row]
        };
        for (k, entry) in entries.iter_mut().enumerate() {
            *entry = richardson(&g, k, fd_step(k));
        }
    }
    out
}

/// Largest entrywise deviation of `m` from `reference`, each entry measured
/// relative to the larger of its own modulus and the largest modulus in its
/// row of `reference` (entries that vanish identically have no scale of
/// their own).
pub fn max_relative_deviation<const N: usize>(
    m: &[[Complex64; N]; N],
    reference: &[[Complex64; N]; N],
) -> f64 {
    let mut worst: f64 = 0.0;
    for (row, ref_row) in m.iter().zip(reference) {
        let row_scale = ref_row.iter().map(|c| c.norm()).fold(0.0, f64::max);
        for (a, b) in row.iter().zip(ref_row) {
            let scale = b.norm().max(row_scale);
            if scale > 0.0 {
                worst = worst.max((a - b).norm() / scale);
            }
        }
    }
    worst
}
