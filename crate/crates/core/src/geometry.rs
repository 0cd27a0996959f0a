//! Positions, the rectangular service area and the antenna-array generators.
//!
//! Users live on the ground plane (`z = 0`); every antenna of an array sits at
//! the common height `d_H`. The service area is a `D_L × D_W` rectangle centered
//! at the origin, long side along `x`.

use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Default carrier wavelength of the conventional circular array, in meters.
pub const DEFAULT_WAVELENGTH: f64 = 0.01;

/// A point in meters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Point3 {
    pub fn new(x: f64, y: f64, z: f64) -> Result<Self> {
        if !(x.is_finite() && y.is_finite() && z.is_finite()) {
            return Err(Error::invalid("point", "coordinates must be finite"));
        }
        Ok(Self { x, y, z })
    }

    /// A user position on the ground plane.
    pub const fn ground(x: f64, y: f64) -> Self {
        Self { x, y, z: 0.0 }
    }

    pub(crate) const fn raw(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }
}

/// The `D_L × D_W` rectangle centered at the origin, optionally with a central
/// `a × a` square removed from area averages.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ServiceArea {
    d_w: f64,
    d_l: f64,
    exclusion_side: f64,
}

impl ServiceArea {
    pub fn new(d_w: f64, d_l: f64, exclusion_side: f64) -> Result<Self> {
        if !(d_w.is_finite() && d_w > 0.0) {
            return Err(Error::invalid("d_w", "must be positive"));
        }
        if !(d_l.is_finite() && d_l > 0.0) {
            return Err(Error::invalid("d_l", "must be positive"));
        }
        if !(exclusion_side >= 0.0 && exclusion_side < d_w.min(d_l)) {
            return Err(Error::invalid(
                "exclusion_side",
                format!("must satisfy 0 <= a < min(d_w, d_l) = {}", d_w.min(d_l)),
            ));
        }
        Ok(Self {
            d_w,
            d_l,
            exclusion_side,
        })
    }

    /// Width (extent along `y`).
    pub fn d_w(&self) -> f64 {
        self.d_w
    }

    /// Length (extent along `x`).
    pub fn d_l(&self) -> f64 {
        self.d_l
    }

    pub fn exclusion_side(&self) -> f64 {
        self.exclusion_side
    }

    /// Same rectangle without the exclusion square.
    pub fn without_exclusion(&self) -> Self {
        Self {
            exclusion_side: 0.0,
            ..*self
        }
    }

    pub fn with_exclusion(&self, exclusion_side: f64) -> Result<Self> {
        Self::new(self.d_w, self.d_l, exclusion_side)
    }

    pub fn contains(&self, p: &Point3) -> bool {
        p.x.abs() <= self.d_l / 2.0 && p.y.abs() <= self.d_w / 2.0
    }

    /// True when `p` lies strictly inside the central exclusion square.
    pub fn is_excluded(&self, p: &Point3) -> bool {
        let half = self.exclusion_side / 2.0;
        self.exclusion_side > 0.0 && p.x.abs() < half && p.y.abs() < half
    }
}

/// An ordered set of antennas at a common height.
#[derive(Debug, Clone, PartialEq)]
pub struct AntennaArray {
    antennas: Vec<Point3>,
    waveguide_index: Option<Vec<usize>>,
    height: f64,
}

impl AntennaArray {
    /// Builds an array, checking that it is non-empty, that every antenna sits
    /// at `height > 0` and that no two antennas coincide.
    pub fn new(
        antennas: Vec<Point3>,
        waveguide_index: Option<Vec<usize>>,
        height: f64,
    ) -> Result<Self> {
        if antennas.is_empty() {
            return Err(Error::invalid("array", "must contain at least one antenna"));
        }
        if !(height.is_finite() && height > 0.0) {
            return Err(Error::invalid("d_h", "antenna height must be positive"));
        }
        if let Some(tags) = &waveguide_index {
            if tags.len() != antennas.len() {
                return Err(Error::invalid(
                    "array",
                    "waveguide tags must match the antenna count",
                ));
            }
        }
        for (i, a) in antennas.iter().enumerate() {
            if !(a.x.is_finite() && a.y.is_finite()) || a.z != height {
                return Err(Error::invalid(
                    "array",
                    format!("antenna {i} must be finite and at height {height}"),
                ));
            }
            if antennas[..i].iter().any(|b| b.x == a.x && b.y == a.y) {
                return Err(Error::invalid(
                    "array",
                    format!("antenna {i} duplicates an earlier position"),
                ));
            }
        }
        Ok(Self {
            antennas,
            waveguide_index,
            height,
        })
    }

    pub fn antennas(&self) -> &[Point3] {
        &self.antennas
    }

    pub fn waveguide_index(&self) -> Option<&[usize]> {
        self.waveguide_index.as_deref()
    }

    pub fn height(&self) -> f64 {
        self.height
    }

    pub fn len(&self) -> usize {
        self.antennas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.antennas.is_empty()
    }

    /// Rigid translation in the ground plane.
    pub fn translated(&self, dx: f64, dy: f64) -> Result<Self> {
        let antennas = self
            .antennas
            .iter()
            .map(|a| Point3::raw(a.x + dx, a.y + dy, a.z))
            .collect();
        Self::new(antennas, self.waveguide_index.clone(), self.height)
    }
}

/// Slant range between a ground user and an elevated antenna.
pub fn distance(user: &Point3, antenna: &Point3) -> f64 {
    let dx = user.x - antenna.x;
    let dy = user.y - antenna.y;
    let dz = antenna.z - user.z;
    (dx * dx + dy * dy + dz * dz).sqrt()
}

/// Midpoints of `count` equal cells partitioning `[lo, lo + span]`.
fn midpoints(lo: f64, span: f64, count: usize) -> impl Iterator<Item = f64> {
    let step = span / count as f64;
    (0..count).map(move |k| lo + (k as f64 + 0.5) * step)
}

fn check_count(name: &str, value: usize) -> Result<()> {
    if value == 0 {
        return Err(Error::invalid(name, "must be at least 1"));
    }
    Ok(())
}

/// `n_wg` waveguides parallel to `x`, equally spaced across the width, each
/// carrying `n_per_wg` antennas equally spaced along the full length.
pub fn make_waveguide_array(
    n_wg: usize,
    n_per_wg: usize,
    area: &ServiceArea,
    height: f64,
) -> Result<AntennaArray> {
    make_segment_array(0.0, area.d_l(), n_wg, n_per_wg, area, height)
}

/// Conventional benchmark: `n` antennas on a circle of radius
/// `λ / (4 sin(π/n))` centered above the origin, so neighbours are `λ/2` apart.
pub fn make_circular_array(n: usize, wavelength: f64, height: f64) -> Result<AntennaArray> {
    if n < 2 {
        return Err(Error::invalid(
            "n",
            "circular array needs at least 2 antennas",
        ));
    }
    if !(wavelength.is_finite() && wavelength > 0.0) {
        return Err(Error::invalid("wavelength", "must be positive"));
    }
    let radius = circular_radius(n, wavelength);
    let antennas = (0..n)
        .map(|k| {
            let phi = 2.0 * PI * k as f64 / n as f64;
            Point3::raw(radius * phi.cos(), radius * phi.sin(), height)
        })
        .collect();
    AntennaArray::new(antennas, None, height)
}

pub fn circular_radius(n: usize, wavelength: f64) -> f64 {
    wavelength / (4.0 * (PI / n as f64).sin())
}

/// A `2n̄ × 2n̄` square grid with pitch `spacing` centered on a ground point:
/// offsets `±(k − ½)·spacing`, `k = 1..=n̄`, along both axes.
///
/// Rows (constant `y`) are tagged as waveguides.
pub fn make_square_cluster(
    center: &Point3,
    spacing: f64,
    n_bar: usize,
    height: f64,
) -> Result<AntennaArray> {
    if !(spacing.is_finite() && spacing > 0.0) {
        return Err(Error::invalid("spacing", "must be positive"));
    }
    check_count("n_bar", n_bar)?;
    let offsets: Vec<f64> = (0..2 * n_bar)
        .map(|k| (k as f64 - n_bar as f64 + 0.5) * spacing)
        .collect();
    let mut antennas = Vec::with_capacity(offsets.len() * offsets.len());
    let mut tags = Vec::with_capacity(antennas.capacity());
    for (row, oy) in offsets.iter().enumerate() {
        for ox in &offsets {
            antennas.push(Point3::raw(center.x + ox, center.y + oy, height));
            tags.push(row);
        }
    }
    AntennaArray::new(antennas, Some(tags), height)
}

/// Waveguide layout with all antennas confined to the segment of length
/// `segment_length` centered at `focal_x` on every waveguide.
pub fn make_focal_segment_array(
    focal_x: f64,
    segment_length: f64,
    n_wg: usize,
    n_per_wg: usize,
    area: &ServiceArea,
    height: f64,
) -> Result<AntennaArray> {
    if !(segment_length.is_finite() && segment_length > 0.0) {
        return Err(Error::invalid("segment_length", "must be positive"));
    }
    let half = area.d_l() / 2.0;
    let lo = focal_x - segment_length / 2.0;
    let hi = focal_x + segment_length / 2.0;
    // Small slack so that segments touching the boundary are accepted.
    let slack = 1e-12 * half;
    if !(lo >= -half - slack && hi <= half + slack) {
        return Err(Error::invalid(
            "focal_x",
            format!("segment [{lo}, {hi}] extends beyond the service length [-{half}, {half}]"),
        ));
    }
    make_segment_array(focal_x, segment_length, n_wg, n_per_wg, area, height)
}

fn make_segment_array(
    center_x: f64,
    segment_length: f64,
    n_wg: usize,
    n_per_wg: usize,
    area: &ServiceArea,
    height: f64,
) -> Result<AntennaArray> {
    check_count("n_wg", n_wg)?;
    check_count("n_per_wg", n_per_wg)?;
    let xs: Vec<f64> =
        midpoints(center_x - segment_length / 2.0, segment_length, n_per_wg).collect();
    let mut antennas = Vec::with_capacity(n_wg * n_per_wg);
    let mut tags = Vec::with_capacity(n_wg * n_per_wg);
    for (j, y) in midpoints(-area.d_w() / 2.0, area.d_w(), n_wg).enumerate() {
        for &x in &xs {
            antennas.push(Point3::raw(x, y, height));
            tags.push(j);
        }
    }
    AntennaArray::new(antennas, Some(tags), height)
}
