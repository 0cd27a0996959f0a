//! Independent oracles shared by the integration tests. Nothing here calls
//! into the library's bound code; only plain coordinates go in.

#![allow(dead_code)]

/// Fisher information of one Gaussian observation `r ~ N(μ(θ), v(θ))`
/// about a scalar parameter, from the derivatives of its mean and variance:
/// `μ'²/v + v'²/(2v²)`.
pub fn gaussian_fim_term(mean_deriv: f64, var: f64, var_deriv: f64) -> f64 {
    mean_deriv * mean_deriv / var + var_deriv * var_deriv / (2.0 * var * var)
}

/// Diagonal Fisher terms and cross term `(j_x, j_y, j_xy)` for a ground user
/// at `(x, y)` ranging to `antennas` (x, y, z) with `v = k_e·d²`.
pub fn gaussian_fim(k_e: f64, x: f64, y: f64, antennas: &[(f64, f64, f64)]) -> (f64, f64, f64) {
    let mut j = (0.0, 0.0, 0.0);
    for &(ax, ay, az) in antennas {
        let (dx, dy) = (x - ax, y - ay);
        let d2 = dx * dx + dy * dy + az * az;
        let d = d2.sqrt();
        let var = k_e * d2;
        // ∂d/∂x = dx/d, ∂v/∂x = 2·k_e·dx.
        let (mx, my) = (dx / d, dy / d);
        let (vx, vy) = (2.0 * k_e * dx, 2.0 * k_e * dy);
        j.0 += gaussian_fim_term(mx, var, vx);
        j.1 += gaussian_fim_term(my, var, vy);
        j.2 += mx * my / var + vx * vy / (2.0 * var * var);
    }
    j
}

/// `1/j_x + 1/j_y`.
pub fn diagonal_bound(j: (f64, f64, f64)) -> f64 {
    1.0 / j.0 + 1.0 / j.1
}

/// Trace of the inverse 2×2 Fisher matrix.
pub fn full_bound(j: (f64, f64, f64)) -> f64 {
    (j.0 + j.1) / (j.0 * j.1 - j.2 * j.2)
}

/// Central-difference derivative of `f` at `x`.
pub fn central_diff(f: impl Fn(f64) -> f64, x: f64, h: f64) -> f64 {
    (f(x + h) - f(x - h)) / (2.0 * h)
}

pub fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}
