//! Area averages, heatmaps, local maxima, spacing sweeps and focal placements.
//!
//! Every grid here is a uniform partition of the service area sampled at cell
//! centers (midpoint rule). Cells are filled in parallel; reductions run in a
//! fixed order so results do not depend on the thread schedule.

use rayon::prelude::*;

use crate::closed_form::{square_grid_crlb, SquareGridSpec};
use crate::crlb::{crlb, crlb_gradient, CrlbValue, RangeModel};
use crate::error::{Error, Result};
use crate::geometry::{
    make_circular_array, make_focal_segment_array, make_waveguide_array, AntennaArray, Point3,
    ServiceArea,
};

/// Default integration grid for the 40 m × 10 m area.
pub const DEFAULT_RESOLUTION: (usize, usize) = (200, 50);
/// Finite-difference step for gradient validation, in meters.
pub const GRADIENT_FD_STEP: f64 = 1e-5;
/// Antenna counts of the averaged-CRLB comparison.
pub const COMPARE_COUNTS: [usize; 5] = [4, 8, 12, 16, 20];

/// Center of cell `(i, j)` of an `nx × ny` partition of `area`.
pub fn cell_center(area: &ServiceArea, nx: usize, ny: usize, i: usize, j: usize) -> Point3 {
    let dx = area.d_l() / nx as f64;
    let dy = area.d_w() / ny as f64;
    Point3::ground(
        -area.d_l() / 2.0 + (i as f64 + 0.5) * dx,
        -area.d_w() / 2.0 + (j as f64 + 0.5) * dy,
    )
}

/// CRLB sampled on a grid of cell centers; `values[j * nx + i]` holds cell
/// `(i, j)`, with `j` indexing `y`.
#[derive(Debug, Clone, PartialEq)]
pub struct CrlbField {
    pub area: ServiceArea,
    pub nx: usize,
    pub ny: usize,
    pub values: Vec<CrlbValue>,
    pub array_id: String,
}

impl CrlbField {
    pub fn get(&self, i: usize, j: usize) -> CrlbValue {
        self.values[j * self.nx + i]
    }

    pub fn center(&self, i: usize, j: usize) -> Point3 {
        cell_center(&self.area, self.nx, self.ny, i, j)
    }

    fn finite_values(&self) -> impl Iterator<Item = f64> + '_ {
        self.values.iter().filter_map(CrlbValue::get)
    }

    pub fn max_finite(&self) -> Option<f64> {
        self.finite_values().max_by(f64::total_cmp)
    }

    pub fn min_value(&self) -> Option<f64> {
        self.finite_values().min_by(f64::total_cmp)
    }

    /// Largest finite cell over smallest cell.
    pub fn disparity(&self) -> Option<f64> {
        Some(self.max_finite()? / self.min_value()?)
    }

    /// Cell with the smallest value; first in row-major order on ties.
    pub fn argmin(&self) -> Option<(usize, usize)> {
        let mut best: Option<(usize, f64)> = None;
        for (k, v) in self.values.iter().enumerate() {
            if let Some(v) = v.get() {
                if best.is_none_or(|(_, b)| v < b) {
                    best = Some((k, v));
                }
            }
        }
        best.map(|(k, _)| (k % self.nx, k / self.nx))
    }

    pub fn count_non_finite(&self) -> usize {
        self.values.iter().filter(|v| !v.is_finite()).count()
    }
}

fn check_resolution(resolution: (usize, usize), min: usize) -> Result<()> {
    if resolution.0 < min || resolution.1 < min {
        return Err(Error::invalid(
            "resolution",
            format!(
                "must be at least {min}x{min}, got {}x{}",
                resolution.0, resolution.1
            ),
        ));
    }
    Ok(())
}

/// Midpoint-rule mean of `f` over the cells whose centers lie outside the
/// exclusion square. Returns NaN when every cell is excluded.
pub fn midpoint_average(
    area: &ServiceArea,
    resolution: (usize, usize),
    f: impl Fn(&Point3) -> f64 + Sync,
) -> f64 {
    let (nx, ny) = resolution;
    let cells: Vec<Option<f64>> = (0..nx * ny)
        .into_par_iter()
        .map(|k| {
            let p = cell_center(area, nx, ny, k % nx, k / nx);
            (!area.is_excluded(&p)).then(|| f(&p))
        })
        .collect();
    let (sum, count) = cells
        .iter()
        .flatten()
        .fold((0.0, 0usize), |(s, c), v| (s + v, c + 1));
    sum / count as f64
}

/// Area-averaged CRLB outside the exclusion square; infinite if any included
/// cell is singular.
pub fn averaged_crlb(
    model: &RangeModel,
    array: &AntennaArray,
    area: &ServiceArea,
    resolution: (usize, usize),
) -> Result<f64> {
    check_resolution(resolution, 8)?;
    Ok(midpoint_average(area, resolution, |p| {
        crlb(model, p, array).value()
    }))
}

/// Difference of the pinching and conventional area averages over the same
/// cells. Negative means the pinching array is more accurate on average.
pub fn delta_crb(
    model: &RangeModel,
    pin: &AntennaArray,
    conv: &AntennaArray,
    area: &ServiceArea,
    resolution: (usize, usize),
) -> Result<f64> {
    Ok(
        averaged_crlb(model, pin, area, resolution)?
            - averaged_crlb(model, conv, area, resolution)?,
    )
}

pub fn heatmap(
    model: &RangeModel,
    array: &AntennaArray,
    area: &ServiceArea,
    resolution: (usize, usize),
) -> Result<CrlbField> {
    heatmap_labeled(model, array, area, resolution, "array")
}

pub fn heatmap_labeled(
    model: &RangeModel,
    array: &AntennaArray,
    area: &ServiceArea,
    resolution: (usize, usize),
    array_id: &str,
) -> Result<CrlbField> {
    check_resolution(resolution, 16)?;
    let (nx, ny) = resolution;
    let values = (0..nx * ny)
        .into_par_iter()
        .map(|k| crlb(model, &cell_center(area, nx, ny, k % nx, k / nx), array))
        .collect();
    Ok(CrlbField {
        area: *area,
        nx,
        ny,
        values,
        array_id: array_id.to_owned(),
    })
}

/// Centers of interior cells strictly larger than all eight neighbours,
/// ordered by `y` then `x`. Non-finite cells are never reported.
pub fn local_maxima(field: &CrlbField) -> Vec<Point3> {
    let mut out = Vec::new();
    if field.nx < 3 || field.ny < 3 {
        return out;
    }
    for j in 1..field.ny - 1 {
        for i in 1..field.nx - 1 {
            let Some(v) = field.get(i, j).get() else {
                continue;
            };
            let is_peak = (j - 1..=j + 1)
                .flat_map(|jj| (i - 1..=i + 1).map(move |ii| (ii, jj)))
                .filter(|&n| n != (i, j))
                .all(|(ii, jj)| v > field.get(ii, jj).value());
            if is_peak {
                out.push(field.center(i, j));
            }
        }
    }
    out
}

/// `(Δ, CRB)` pairs with strictly increasing `Δ`.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepCurve {
    pub points: Vec<(f64, f64)>,
}

impl SweepCurve {
    /// Index of the smallest CRB (first one on ties).
    pub fn argmin(&self) -> Option<usize> {
        let mut best: Option<(usize, f64)> = None;
        for (k, &(_, v)) in self.points.iter().enumerate() {
            if best.is_none_or(|(_, b)| v < b) {
                best = Some((k, v));
            }
        }
        best.map(|(k, _)| k)
    }

    /// Strictly decreasing up to the minimum and strictly increasing after.
    pub fn is_unimodal(&self) -> bool {
        let Some(m) = self.argmin() else {
            return true;
        };
        let v: Vec<f64> = self.points.iter().map(|p| p.1).collect();
        v[..=m].windows(2).all(|w| w[1] < w[0]) && v[m..].windows(2).all(|w| w[1] > w[0])
    }
}

/// Evenly spaced sweep values `start, start + step, …` up to `stop`
/// (inclusive within half a step), computed without accumulation.
pub fn linspace_step(start: f64, stop: f64, step: f64) -> Vec<f64> {
    let count = ((stop - start) / step + 0.5).floor() as usize + 1;
    (0..count).map(|k| start + k as f64 * step).collect()
}

pub fn spacing_sweep(n_bar: usize, height: f64, k_e: f64, deltas: &[f64]) -> Result<SweepCurve> {
    if deltas.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::invalid("deltas", "must be strictly increasing"));
    }
    let points = deltas
        .iter()
        .map(|&d| {
            Ok((
                d,
                square_grid_crlb(&SquareGridSpec::new(d, n_bar, height, k_e)?),
            ))
        })
        .collect::<Result<_>>()?;
    Ok(SweepCurve { points })
}

/// Heatmap of the array whose antennas occupy the segment of length
/// `D_L / 2` centered at `focal_x` on each waveguide.
pub fn focal_experiment(
    model: &RangeModel,
    area: &ServiceArea,
    focal_x: f64,
    n: usize,
    n_wg: usize,
    height: f64,
    resolution: (usize, usize),
) -> Result<CrlbField> {
    let n_per_wg = per_waveguide(n, n_wg)?;
    let array = make_focal_segment_array(focal_x, area.d_l() / 2.0, n_wg, n_per_wg, area, height)?;
    heatmap_labeled(
        model,
        &array,
        area,
        resolution,
        &format!("focal-segment@{focal_x}"),
    )
}

/// Antennas per waveguide when `n` are split evenly over `n_wg` guides.
pub fn per_waveguide(n: usize, n_wg: usize) -> Result<usize> {
    if n_wg == 0 || n == 0 || !n.is_multiple_of(n_wg) {
        return Err(Error::invalid(
            "n",
            format!("{n} antennas cannot be split evenly over {n_wg} waveguides"),
        ));
    }
    Ok(n / n_wg)
}

/// One row of the pinching-versus-conventional comparison.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CompareRow {
    pub n: usize,
    pub pinching: f64,
    pub conventional: f64,
    pub delta: f64,
}

/// Averaged CRLB of the waveguide layout and of the circular array for each
/// antenna count.
pub fn compare_arrays(
    model: &RangeModel,
    area: &ServiceArea,
    counts: &[usize],
    n_wg: usize,
    wavelength: f64,
    height: f64,
    resolution: (usize, usize),
) -> Result<Vec<CompareRow>> {
    counts
        .iter()
        .map(|&n| {
            let pin = make_waveguide_array(n_wg, per_waveguide(n, n_wg)?, area, height)?;
            let conv = make_circular_array(n, wavelength, height)?;
            let pinching = averaged_crlb(model, &pin, area, resolution)?;
            let conventional = averaged_crlb(model, &conv, area, resolution)?;
            Ok(CompareRow {
                n,
                pinching,
                conventional,
                delta: pinching - conventional,
            })
        })
        .collect()
}

/// Result of comparing the analytic gradient with central differences.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradientCheck {
    pub max_relative_error: f64,
    pub probes: usize,
    pub skipped: usize,
}

/// Relative error `‖g − g_fd‖ / ‖g_fd‖` at every cell center of an
/// `nx × ny` probe grid; singular probes are skipped.
pub fn gradient_check(
    model: &RangeModel,
    array: &AntennaArray,
    area: &ServiceArea,
    probes: (usize, usize),
    step: f64,
) -> GradientCheck {
    let (nx, ny) = probes;
    let errors: Vec<Option<f64>> = (0..nx * ny)
        .into_par_iter()
        .map(|k| {
            let p = cell_center(area, nx, ny, k % nx, k / nx);
            let (gx, gy) = crlb_gradient(model, &p, array).ok()?;
            let f = |x: f64, y: f64| crlb(model, &Point3::ground(x, y), array).value();
            let fx = (f(p.x + step, p.y) - f(p.x - step, p.y)) / (2.0 * step);
            let fy = (f(p.x, p.y + step) - f(p.x, p.y - step)) / (2.0 * step);
            let err = (gx - fx).hypot(gy - fy) / fx.hypot(fy);
            err.is_finite().then_some(err)
        })
        .collect();
    let skipped = errors.iter().filter(|e| e.is_none()).count();
    let max_relative_error = errors.iter().flatten().copied().fold(0.0, f64::max);
    GradientCheck {
        max_relative_error,
        probes: nx * ny,
        skipped,
    }
}
