//! Closed forms for a user at the center of a square antenna cluster, and
//! spacing optimizers built on them.
//!
//! With the cluster offsets at `±(k − ½)Δ` the general bound reduces to
//!
//! ```text
//! CRB = K_E Δ² / (4(2K_E + 1)) · (1/S + 1/S′)
//! S  = Σ_{i,n} (n − ½)² / β²_ni      S′ = Σ_{i,n} (i − ½)² / β²_ni
//! β_ni = (n − ½)² + (i − ½)² + d_H²/Δ²
//! ```
//!
//! which for four antennas collapses to `2K_E Δ²/(2K_E+1) · (½ + d_H²/Δ²)²`,
//! minimized at `Δ* = √2·d_H`.

use crate::error::{Error, Result};

/// Iteration cap of [`optimize_spacing_numeric`].
pub const MAX_GOLDEN_ITERATIONS: usize = 200;

/// Square cluster of `(2·n_bar)²` antennas with pitch `spacing` at height
/// `height`, user at the center.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SquareGridSpec {
    spacing: f64,
    n_bar: usize,
    height: f64,
    k_e: f64,
}

impl SquareGridSpec {
    pub fn new(spacing: f64, n_bar: usize, height: f64, k_e: f64) -> Result<Self> {
        if !(spacing.is_finite() && spacing > 0.0) {
            return Err(Error::invalid("spacing", "must be positive"));
        }
        if n_bar == 0 {
            return Err(Error::invalid("n_bar", "must be at least 1"));
        }
        if !(height.is_finite() && height > 0.0) {
            return Err(Error::invalid("d_h", "must be positive"));
        }
        if !(k_e.is_finite() && k_e > 0.0) {
            return Err(Error::invalid("k_e", "must be positive"));
        }
        Ok(Self {
            spacing,
            n_bar,
            height,
            k_e,
        })
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn n_bar(&self) -> usize {
        self.n_bar
    }

    pub fn height(&self) -> f64 {
        self.height
    }

    pub fn k_e(&self) -> f64 {
        self.k_e
    }

    pub fn with_spacing(&self, spacing: f64) -> Result<Self> {
        Self::new(spacing, self.n_bar, self.height, self.k_e)
    }
}

pub fn square_grid_crlb(spec: &SquareGridSpec) -> f64 {
    let h2 = (spec.height / spec.spacing).powi(2);
    let (mut s, mut s_prime) = (0.0, 0.0);
    for i in 1..=spec.n_bar {
        let ci = i as f64 - 0.5;
        for n in 1..=spec.n_bar {
            let cn = n as f64 - 0.5;
            let beta = cn * cn + ci * ci + h2;
            let b2 = beta * beta;
            s += cn * cn / b2;
            s_prime += ci * ci / b2;
        }
    }
    let k = spec.k_e;
    k * spec.spacing * spec.spacing / (4.0 * (2.0 * k + 1.0)) * (1.0 / s + 1.0 / s_prime)
}

/// Four-antenna closed form.
pub fn crlb_n4(spacing: f64, height: f64, k_e: f64) -> f64 {
    let t = 0.5 + (height / spacing).powi(2);
    2.0 * k_e * spacing * spacing / (2.0 * k_e + 1.0) * t * t
}

/// First and second derivatives of [`crlb_n4`] with respect to the spacing.
pub fn crlb_n4_derivatives(spacing: f64, height: f64, k_e: f64) -> (f64, f64) {
    let c = 4.0 * k_e / (2.0 * k_e + 1.0);
    let h2 = height * height;
    let first = c * (spacing / 2.0 + h2 / spacing) * (0.5 - h2 / (spacing * spacing));
    let second = c * (0.25 + 3.0 * (h2 / (spacing * spacing)).powi(2));
    (first, second)
}

/// `√2 · height`, the four-antenna optimum.
pub fn optimal_spacing_analytic(height: f64) -> f64 {
    std::f64::consts::SQRT_2 * height
}

/// Golden-section minimizer of [`square_grid_crlb`] over `bracket`, stopping
/// once the bracket is narrower than `tol`.
pub fn optimize_spacing_numeric(
    n_bar: usize,
    height: f64,
    k_e: f64,
    bracket: (f64, f64),
    tol: f64,
) -> Result<f64> {
    let (lo, hi) = bracket;
    if !(lo.is_finite() && hi.is_finite() && lo > 0.0 && lo < hi) {
        return Err(Error::invalid(
            "bracket",
            format!("need 0 < lower < upper, got ({lo}, {hi})"),
        ));
    }
    if !(tol.is_finite() && tol > 0.0) {
        return Err(Error::invalid("tol", "must be positive"));
    }
    let spec = SquareGridSpec::new(lo, n_bar, height, k_e)?;
    let objective = |spacing: f64| square_grid_crlb(&spec.with_spacing(spacing).unwrap_or(spec));
    golden_section(objective, lo, hi, tol, MAX_GOLDEN_ITERATIONS)
}

/// Minimizes a unimodal `f` on `[a, b]` until the bracket is at most `tol`
/// wide; returns the bracket midpoint.
pub fn golden_section(
    f: impl Fn(f64) -> f64,
    mut a: f64,
    mut b: f64,
    tol: f64,
    max_iterations: usize,
) -> Result<f64> {
    // 1/φ
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    for _ in 0..max_iterations {
        if b - a <= tol {
            return Ok(0.5 * (a + b));
        }
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    if b - a <= tol {
        return Ok(0.5 * (a + b));
    }
    Err(Error::NoConvergence {
        iterations: max_iterations,
        width: b - a,
    })
}
