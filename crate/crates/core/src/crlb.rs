//! Range-noise model, likelihood, Fisher information and the position CRLB.
//!
//! Each antenna `n` yields a range estimate `d̂ = d + w` with
//! `w ~ N(0, K_E·d²)`. For a ground user at `(x, y)` the diagonal Fisher terms
//! are
//!
//! ```text
//! J_x = Σ (2K_E + 1) / σ² · (x − x_n)² / d²      σ² = K_E·d²
//! ```
//!
//! and the bound on `E[(x̂ − x)² + (ŷ − y)²]` is `1/J_x + 1/J_y`.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::geometry::{distance, AntennaArray, Point3};

/// Noise environment: range variance is `k_e · d²`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RangeModel {
    k_e: f64,
}

impl RangeModel {
    pub fn new(k_e: f64) -> Result<Self> {
        if !(k_e.is_finite() && k_e > 0.0) {
            return Err(Error::invalid("k_e", "must be positive"));
        }
        Ok(Self { k_e })
    }

    pub fn k_e(&self) -> f64 {
        self.k_e
    }

    /// `K_E / (2K_E + 1)`, the prefactor shared by every CRLB expression.
    pub fn prefactor(&self) -> f64 {
        self.k_e / (2.0 * self.k_e + 1.0)
    }
}

/// Fisher information about the user's ground coordinates.
///
/// `j_xy` is the off-diagonal entry of the full 2×2 matrix; the diagonal
/// bound ignores it, [`FisherInfo::full_crlb`] does not.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FisherInfo {
    pub j_x: f64,
    pub j_y: f64,
    pub j_xy: f64,
}

impl FisherInfo {
    /// `1/J_x + 1/J_y`, infinite when either diagonal term vanishes.
    pub fn diagonal_crlb(&self) -> CrlbValue {
        if self.j_x > 0.0 && self.j_y > 0.0 {
            CrlbValue::finite(1.0 / self.j_x + 1.0 / self.j_y)
        } else {
            CrlbValue::INFINITE
        }
    }

    /// Trace of the inverse of `[[j_x, j_xy], [j_xy, j_y]]`.
    pub fn full_crlb(&self) -> CrlbValue {
        let det = self.j_x * self.j_y - self.j_xy * self.j_xy;
        if det > 0.0 {
            CrlbValue::finite((self.j_x + self.j_y) / det)
        } else {
            CrlbValue::INFINITE
        }
    }
}

/// A CRLB value in m²; the infinite state marks a vanishing Fisher term.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CrlbValue {
    value: f64,
}

impl CrlbValue {
    pub const INFINITE: CrlbValue = CrlbValue {
        value: f64::INFINITY,
    };

    pub(crate) fn finite(value: f64) -> Self {
        if value.is_finite() {
            Self { value }
        } else {
            Self::INFINITE
        }
    }

    /// The bound in m², `f64::INFINITY` when singular.
    pub fn value(&self) -> f64 {
        self.value
    }

    pub fn is_finite(&self) -> bool {
        self.value.is_finite()
    }

    pub fn get(&self) -> Option<f64> {
        self.is_finite().then_some(self.value)
    }
}

/// `σ² = K_E · d²` for the link between `user` and `antenna`.
pub fn noise_variance(model: &RangeModel, user: &Point3, antenna: &Point3) -> f64 {
    let d = distance(user, antenna);
    model.k_e * d * d
}

/// Gaussian log-likelihood of the range estimates when the user is at
/// `user_hypothesis`.
pub fn log_likelihood(
    model: &RangeModel,
    user_hypothesis: &Point3,
    array: &AntennaArray,
    estimates: &[f64],
) -> Result<f64> {
    if estimates.len() != array.len() {
        return Err(Error::invalid(
            "estimates",
            format!("expected {} values, got {}", array.len(), estimates.len()),
        ));
    }
    Ok(log_likelihood_unchecked(
        model,
        user_hypothesis,
        array,
        estimates,
    ))
}

pub(crate) fn log_likelihood_unchecked(
    model: &RangeModel,
    user: &Point3,
    array: &AntennaArray,
    estimates: &[f64],
) -> f64 {
    let n = array.len() as f64;
    let mut acc = -0.5 * n * (2.0 * PI).ln();
    for (antenna, &d_hat) in array.antennas().iter().zip(estimates) {
        let d2 = squared_range(user, antenna);
        let var = model.k_e * d2;
        let r = d_hat - d2.sqrt();
        // ln σ = ½ ln σ²
        acc -= 0.5 * var.ln() + r * r / (2.0 * var);
    }
    acc
}

fn squared_range(user: &Point3, antenna: &Point3) -> f64 {
    let dx = user.x - antenna.x;
    let dy = user.y - antenna.y;
    let dz = antenna.z - user.z;
    dx * dx + dy * dy + dz * dz
}

pub fn fisher_info(model: &RangeModel, user: &Point3, array: &AntennaArray) -> FisherInfo {
    let scale = 2.0 * model.k_e + 1.0;
    let mut info = FisherInfo {
        j_x: 0.0,
        j_y: 0.0,
        j_xy: 0.0,
    };
    for antenna in array.antennas() {
        let dx = user.x - antenna.x;
        let dy = user.y - antenna.y;
        let d2 = squared_range(user, antenna);
        let w = scale / (model.k_e * d2) / d2;
        info.j_x += w * dx * dx;
        info.j_y += w * dy * dy;
        info.j_xy += w * dx * dy;
    }
    info
}

/// Geometry sums `Σ x̃²/d⁴` and `Σ ỹ²/d⁴`.
fn geometry_sums(user: &Point3, array: &AntennaArray) -> (f64, f64) {
    array.antennas().iter().fold((0.0, 0.0), |(sx, sy), a| {
        let dx = user.x - a.x;
        let dy = user.y - a.y;
        let d4 = squared_range(user, a).powi(2);
        (sx + dx * dx / d4, sy + dy * dy / d4)
    })
}

/// The position CRLB `K_E/(2K_E+1) · (1/S_x + 1/S_y)`.
pub fn crlb(model: &RangeModel, user: &Point3, array: &AntennaArray) -> CrlbValue {
    let (sx, sy) = geometry_sums(user, array);
    if sx > 0.0 && sy > 0.0 {
        CrlbValue::finite(model.prefactor() * (1.0 / sx + 1.0 / sy))
    } else {
        CrlbValue::INFINITE
    }
}

/// Trace of the inverse full Fisher matrix, including the cross term.
pub fn crlb_full(model: &RangeModel, user: &Point3, array: &AntennaArray) -> CrlbValue {
    fisher_info(model, user, array).full_crlb()
}

/// One axis of the analytic gradient. `along` is the offset on the
/// differentiation axis, `across` the other one.
fn gradient_component(
    model: &RangeModel,
    user: &Point3,
    array: &AntennaArray,
    along: impl Fn(&Point3) -> f64,
    across: impl Fn(&Point3) -> f64,
) -> f64 {
    let (mut g1, mut g2, mut g3, mut g4, mut g5) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for a in array.antennas() {
        let u = along(user) - along(a);
        let v = across(user) - across(a);
        let d2 = squared_range(user, a);
        let d4 = d2 * d2;
        let d6 = d4 * d2;
        g1 += u * u / d4;
        g2 += 2.0 * u / d4;
        g3 += 4.0 * u * u * u / d6;
        g4 += v * v / d4;
        g5 += 4.0 * u * v * v / d6;
    }
    model.prefactor() * (-(g2 - g3) / (g1 * g1) + g5 / (g4 * g4))
}

/// Exact gradient `(∂CRB/∂x, ∂CRB/∂y)` of [`crlb`] with respect to the user's
/// ground position.
pub fn crlb_gradient(
    model: &RangeModel,
    user: &Point3,
    array: &AntennaArray,
) -> Result<(f64, f64)> {
    let (sx, sy) = geometry_sums(user, array);
    if !(sx > 0.0) || !(sy > 0.0) {
        return Err(Error::Singular {
            x: user.x,
            y: user.y,
            axis: if sx > 0.0 { 'y' } else { 'x' },
        });
    }
    let gx = gradient_component(model, user, array, |p| p.x, |p| p.y);
    let gy = gradient_component(model, user, array, |p| p.y, |p| p.x);
    Ok((gx, gy))
}

/// Single-antenna bound `K_E/(2K_E+1)·(d⁴/x̃² + d⁴/ỹ²)`; it dominates
/// [`crlb`] because every other antenna only adds Fisher information.
pub fn crlb_upper_bound(
    model: &RangeModel,
    user: &Point3,
    array: &AntennaArray,
    antenna_index: usize,
) -> Result<f64> {
    let antenna = array.antennas().get(antenna_index).ok_or_else(|| {
        Error::invalid(
            "antenna_index",
            format!("{antenna_index} out of range for {} antennas", array.len()),
        )
    })?;
    let dx = user.x - antenna.x;
    let dy = user.y - antenna.y;
    if dx == 0.0 || dy == 0.0 {
        return Err(Error::invalid(
            "antenna_index",
            "antenna shares a coordinate with the user; the bound is infinite",
        ));
    }
    let d4 = squared_range(user, antenna).powi(2);
    Ok(model.prefactor() * (d4 / (dx * dx) + d4 / (dy * dy)))
}

/// Smallest finite single-antenna bound over the array, if any.
pub fn best_upper_bound(model: &RangeModel, user: &Point3, array: &AntennaArray) -> Option<f64> {
    (0..array.len())
        .filter_map(|i| crlb_upper_bound(model, user, array, i).ok())
        .min_by(f64::total_cmp)
}
