//! Noisy range sampling, maximum-likelihood positioning and Monte-Carlo
//! comparison of the estimator's MSE against the bound.
//!
//! Noise is drawn from counter-based streams: the draw for antenna `n` in
//! trial `t` depends only on `(seed, t, n)`, so trials can run in any order or
//! in parallel without changing a single bit of the result.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::crlb::{crlb, crlb_full, log_likelihood_unchecked, CrlbValue, RangeModel};
use crate::error::{Error, Result};
use crate::geometry::{distance, AntennaArray, Point3, ServiceArea};

/// Contraction factor of each refinement stage of [`mle_estimate`].
pub const REFINE_SHRINK: f64 = 0.3;
/// Number of contractions performed by [`mle_estimate`].
pub const REFINE_STAGES: usize = 12;
/// Coarse grid used by [`run_mc`].
pub const DEFAULT_COARSE_RESOLUTION: usize = 64;

/// Whether range estimates carry the model noise or are exact.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum NoiseMode {
    #[default]
    Model,
    /// Zero-noise switch: estimates equal the true ranges.
    Noiseless,
}

/// Range estimates from one trial.
#[derive(Debug, Clone, PartialEq)]
pub struct RangeSample {
    pub estimates: Vec<f64>,
    /// Trial index within the seeded stream.
    pub seed_tag: u64,
}

/// Standard-normal draw for `(seed, trial, antenna)`.
pub fn standard_normal(seed: u64, trial: u64, antenna: u64) -> f64 {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&trial.to_le_bytes());
    key[16..24].copy_from_slice(&antenna.to_le_bytes());
    let mut rng = ChaCha8Rng::from_seed(key);
    StandardNormal.sample(&mut rng)
}

/// `d̂ = d + w`, `w ~ N(0, K_E d²)`, independent across antennas.
pub fn sample_ranges(
    model: &RangeModel,
    user: &Point3,
    array: &AntennaArray,
    seed: u64,
    trial: u64,
    noise: NoiseMode,
) -> RangeSample {
    let sigma_scale = model.k_e().sqrt();
    let estimates = array
        .antennas()
        .iter()
        .enumerate()
        .map(|(n, antenna)| {
            let d = distance(user, antenna);
            match noise {
                NoiseMode::Model => d + sigma_scale * d * standard_normal(seed, trial, n as u64),
                NoiseMode::Noiseless => d,
            }
        })
        .collect();
    RangeSample {
        estimates,
        seed_tag: trial,
    }
}

/// Axis-aligned rectangle searched by the estimator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SearchRegion {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
}

impl SearchRegion {
    pub fn translated(&self, dx: f64, dy: f64) -> Self {
        Self {
            x_min: self.x_min + dx,
            x_max: self.x_max + dx,
            y_min: self.y_min + dy,
            y_max: self.y_max + dy,
        }
    }

    pub fn contains(&self, p: &Point3) -> bool {
        p.x >= self.x_min && p.x <= self.x_max && p.y >= self.y_min && p.y <= self.y_max
    }
}

impl From<&ServiceArea> for SearchRegion {
    fn from(area: &ServiceArea) -> Self {
        Self {
            x_min: -area.d_l() / 2.0,
            x_max: area.d_l() / 2.0,
            y_min: -area.d_w() / 2.0,
            y_max: area.d_w() / 2.0,
        }
    }
}

impl From<ServiceArea> for SearchRegion {
    fn from(area: ServiceArea) -> Self {
        Self::from(&area)
    }
}

/// Maximizes the log-likelihood over `search`.
///
/// A `coarse_resolution²` grid of cell centers picks the starting point (ties
/// go to the smallest `x`, then the smallest `y`). Refinement is a 3×3 pattern
/// search around the incumbent: the pattern moves while an outer point wins and
/// contracts by [`REFINE_SHRINK`] when the center wins, for
/// [`REFINE_STAGES`] contractions. Points outside `search` are never visited.
pub fn mle_estimate(
    model: &RangeModel,
    sample: &RangeSample,
    array: &AntennaArray,
    search: impl Into<SearchRegion>,
    coarse_resolution: usize,
) -> Result<Point3> {
    if coarse_resolution < 8 {
        return Err(Error::invalid("coarse_resolution", "must be at least 8"));
    }
    if sample.estimates.len() != array.len() {
        return Err(Error::invalid(
            "estimates",
            format!(
                "expected {} values, got {}",
                array.len(),
                sample.estimates.len()
            ),
        ));
    }
    let region = search.into();
    let ll = |x: f64, y: f64| {
        log_likelihood_unchecked(model, &Point3::ground(x, y), array, &sample.estimates)
    };

    let mut step_x = (region.x_max - region.x_min) / coarse_resolution as f64;
    let mut step_y = (region.y_max - region.y_min) / coarse_resolution as f64;
    let mut best = (f64::NAN, f64::NAN, f64::NEG_INFINITY);
    for i in 0..coarse_resolution {
        let x = region.x_min + (i as f64 + 0.5) * step_x;
        for j in 0..coarse_resolution {
            let y = region.y_min + (j as f64 + 0.5) * step_y;
            let v = ll(x, y);
            if v > best.2 {
                best = (x, y, v);
            }
        }
    }

    let (mut cx, mut cy, mut cv) = best;
    let mut contractions = 0;
    // Moves are bounded so a pathological surface cannot stall the search.
    let mut moves_left = 64 * REFINE_STAGES;
    while contractions < REFINE_STAGES {
        let mut next = (cx, cy, cv);
        for i in -1..=1 {
            let x = cx + i as f64 * step_x;
            if x < region.x_min || x > region.x_max {
                continue;
            }
            for j in -1..=1 {
                let y = cy + j as f64 * step_y;
                if (i == 0 && j == 0) || y < region.y_min || y > region.y_max {
                    continue;
                }
                let v = ll(x, y);
                if v > next.2 {
                    next = (x, y, v);
                }
            }
        }
        if next.2 > cv && moves_left > 0 {
            (cx, cy, cv) = next;
            moves_left -= 1;
        } else {
            step_x *= REFINE_SHRINK;
            step_y *= REFINE_SHRINK;
            contractions += 1;
        }
    }
    Ok(Point3::ground(cx, cy))
}

/// Outcome of a Monte-Carlo run.
#[derive(Debug, Clone, PartialEq)]
pub struct McReport {
    pub trials: usize,
    /// Mean of `(x̂ − x)² + (ŷ − y)²`.
    pub mse: f64,
    /// Diagonal-only bound `1/J_x + 1/J_y`.
    pub crlb_paper: CrlbValue,
    /// Trace of the inverse full Fisher matrix.
    pub crlb_full: CrlbValue,
    /// `mse / crlb_paper`; zero when the bound is infinite.
    pub ratio_paper: f64,
    pub mean_estimate: Point3,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McOptions {
    pub coarse_resolution: usize,
    pub noise: NoiseMode,
}

impl Default for McOptions {
    fn default() -> Self {
        Self {
            coarse_resolution: DEFAULT_COARSE_RESOLUTION,
            noise: NoiseMode::Model,
        }
    }
}

/// Runs `trials` independent sample/estimate rounds and compares the MSE with
/// both bounds.
pub fn run_mc(
    model: &RangeModel,
    user: &Point3,
    array: &AntennaArray,
    trials: usize,
    seed: u64,
    search: impl Into<SearchRegion>,
) -> Result<McReport> {
    run_mc_with(
        model,
        user,
        array,
        trials,
        seed,
        search,
        McOptions::default(),
    )
}

pub fn run_mc_with(
    model: &RangeModel,
    user: &Point3,
    array: &AntennaArray,
    trials: usize,
    seed: u64,
    search: impl Into<SearchRegion>,
    options: McOptions,
) -> Result<McReport> {
    if trials < 100 {
        return Err(Error::invalid("trials", "must be at least 100"));
    }
    let region = search.into();
    let estimates: Vec<Point3> = (0..trials as u64)
        .into_par_iter()
        .map(|t| {
            let sample = sample_ranges(model, user, array, seed, t, options.noise);
            mle_estimate(model, &sample, array, region, options.coarse_resolution)
        })
        .collect::<Result<_>>()?;

    // Ordered reduction keeps the result independent of the thread schedule.
    let (mut se, mut sx, mut sy) = (0.0, 0.0, 0.0);
    for e in &estimates {
        se += (e.x - user.x).powi(2) + (e.y - user.y).powi(2);
        sx += e.x;
        sy += e.y;
    }
    let n = trials as f64;
    let mse = se / n;
    let crlb_paper = crlb(model, user, array);
    let crlb_full = crlb_full(model, user, array);
    let ratio_paper = crlb_paper.get().map_or(0.0, |b| mse / b);
    Ok(McReport {
        trials,
        mse,
        crlb_paper,
        crlb_full,
        ratio_paper,
        mean_estimate: Point3::ground(sx / n, sy / n),
    })
}

/// Sample mean of `−∂²L/∂x²` and `−∂²L/∂y²` at the true position over `draws`
/// noise realizations, with second derivatives taken by central differences
/// of step `step`.
pub fn empirical_fisher(
    model: &RangeModel,
    user: &Point3,
    array: &AntennaArray,
    draws: usize,
    seed: u64,
    step: f64,
) -> (f64, f64) {
    let curvature = |t: u64| {
        let s = sample_ranges(model, user, array, seed, t, NoiseMode::Model);
        let ll = |x: f64, y: f64| {
            log_likelihood_unchecked(model, &Point3::ground(x, y), array, &s.estimates)
        };
        let c = ll(user.x, user.y);
        let cxx = (ll(user.x + step, user.y) - 2.0 * c + ll(user.x - step, user.y)) / (step * step);
        let cyy = (ll(user.x, user.y + step) - 2.0 * c + ll(user.x, user.y - step)) / (step * step);
        (-cxx, -cyy)
    };
    let per_draw: Vec<(f64, f64)> = (0..draws as u64).into_par_iter().map(curvature).collect();
    let (jx, jy) = per_draw
        .iter()
        .fold((0.0, 0.0), |(ax, ay), (x, y)| (ax + x, ay + y));
    (jx / draws as f64, jy / draws as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{make_square_cluster, make_waveguide_array};

    fn area() -> ServiceArea {
        ServiceArea::new(10.0, 40.0, 0.0).unwrap()
    }

    #[test]
    fn noiseless_sample_is_exact() {
        let m = RangeModel::new(0.01).unwrap();
        let arr = make_waveguide_array(2, 10, &area(), 3.0).unwrap();
        let u = Point3::ground(3.0, -1.0);
        let s = sample_ranges(&m, &u, &arr, 7, 0, NoiseMode::Noiseless);
        for (e, a) in s.estimates.iter().zip(arr.antennas()) {
            assert_eq!(*e, distance(&u, a));
        }
    }

    #[test]
    fn normal_stream_is_counter_based() {
        assert_eq!(standard_normal(1, 2, 3), standard_normal(1, 2, 3));
        assert_ne!(standard_normal(1, 2, 3), standard_normal(1, 2, 4));
        assert_ne!(standard_normal(1, 2, 3), standard_normal(1, 3, 3));
        assert_ne!(standard_normal(1, 2, 3), standard_normal(2, 2, 3));
    }

    #[test]
    fn sample_moments_match_model() {
        let m = RangeModel::new(0.01).unwrap();
        let a = Point3::raw(4.0, 6.0, 3.0);
        let arr = AntennaArray::new(vec![a], None, 3.0).unwrap();
        let u = Point3::ground(1.0, 2.0);
        let d = distance(&u, &a);
        let draws = 1_000_000u64;
        let xs: Vec<f64> = (0..draws)
            .into_par_iter()
            .map(|t| sample_ranges(&m, &u, &arr, 11, t, NoiseMode::Model).estimates[0])
            .collect();
        let mean = xs.iter().sum::<f64>() / draws as f64;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (draws - 1) as f64;
        let sigma2 = 0.01 * d * d;
        let se = (sigma2 / draws as f64).sqrt();
        assert!((mean - d).abs() < 4.0 * se, "mean {mean} vs {d}");
        assert!(
            (var - sigma2).abs() / sigma2 < 0.02,
            "var {var} vs {sigma2}"
        );
    }

    #[test]
    fn mle_recovers_symmetric_truth_exactly() {
        // Center of a square cluster on the coarse grid: stationary by symmetry.
        let m = RangeModel::new(0.01).unwrap();
        let c = Point3::ground(0.0, 0.0);
        let arr = make_square_cluster(&c, 3.0, 1, 3.0).unwrap();
        let s = sample_ranges(&m, &c, &arr, 0, 0, NoiseMode::Noiseless);
        let region = SearchRegion {
            x_min: -4.5,
            x_max: 4.5,
            y_min: -4.5,
            y_max: 4.5,
        };
        let e = mle_estimate(&m, &s, &arr, region, 9).unwrap();
        assert!(e.x.abs() <= 1e-4 && e.y.abs() <= 1e-4, "{e:?}");
    }

    #[test]
    fn mle_noiseless_default_array() {
        // The ln σ term pulls the maximizer toward the antennas by O(K_E) even
        // with exact ranges, so this check runs at a small K_E.
        let m = RangeModel::new(1e-4).unwrap();
        let arr = make_waveguide_array(2, 10, &area(), 3.0).unwrap();
        let u = Point3::ground(7.3, -1.2);
        let s = sample_ranges(&m, &u, &arr, 0, 0, NoiseMode::Noiseless);
        let e = mle_estimate(&m, &s, &arr, area(), 64).unwrap();
        assert!((e.x - u.x).hypot(e.y - u.y) < 1e-3, "{e:?}");
    }

    #[test]
    fn mle_noiseless_bias_is_likelihood_not_search() {
        let m = RangeModel::new(0.01).unwrap();
        let arr = make_waveguide_array(2, 10, &area(), 3.0).unwrap();
        let u = Point3::ground(7.3, -1.2);
        let s = sample_ranges(&m, &u, &arr, 0, 0, NoiseMode::Noiseless);
        let e = mle_estimate(&m, &s, &arr, area(), 64).unwrap();
        let at = |p: &Point3| log_likelihood_unchecked(&m, p, &arr, &s.estimates);
        assert!(at(&e) > at(&u));
        // no neighbour at 1e-5 m improves on the estimate
        for (dx, dy) in [(1e-5, 0.0), (-1e-5, 0.0), (0.0, 1e-5), (0.0, -1e-5)] {
            assert!(at(&Point3::ground(e.x + dx, e.y + dy)) <= at(&e));
        }
    }

    #[test]
    fn mle_stays_inside_search_area() {
        let m = RangeModel::new(0.05).unwrap();
        let arr = make_waveguide_array(2, 4, &area(), 3.0).unwrap();
        let region = SearchRegion::from(&area());
        for t in 0..50 {
            let s = sample_ranges(&m, &Point3::ground(19.9, 4.9), &arr, 5, t, NoiseMode::Model);
            let e = mle_estimate(&m, &s, &arr, region, 16).unwrap();
            assert!(region.contains(&e), "{e:?}");
        }
    }

    #[test]
    fn mle_rejects_small_coarse_grid() {
        let m = RangeModel::new(0.01).unwrap();
        let arr = make_waveguide_array(2, 2, &area(), 3.0).unwrap();
        let s = sample_ranges(&m, &Point3::ground(0.0, 0.0), &arr, 0, 0, NoiseMode::Model);
        assert!(mle_estimate(&m, &s, &arr, area(), 7).is_err());
    }

    #[test]
    fn run_mc_is_deterministic() {
        let m = RangeModel::new(0.001).unwrap();
        let arr = make_waveguide_array(2, 10, &area(), 3.0).unwrap();
        let u = Point3::ground(5.0, 1.0);
        let a = run_mc(&m, &u, &arr, 100, 42, area()).unwrap();
        let b = run_mc(&m, &u, &arr, 100, 42, area()).unwrap();
        assert_eq!(a, b);
        assert!(a.crlb_paper.value() <= a.crlb_full.value());
    }

    #[test]
    fn run_mc_rejects_few_trials() {
        let m = RangeModel::new(0.001).unwrap();
        let arr = make_waveguide_array(2, 10, &area(), 3.0).unwrap();
        assert!(run_mc(&m, &Point3::ground(0.0, 0.0), &arr, 99, 1, area()).is_err());
    }

    #[test]
    fn mse_is_translation_invariant() {
        let m = RangeModel::new(0.001).unwrap();
        let arr = make_waveguide_array(2, 10, &area(), 3.0).unwrap();
        let u = Point3::ground(5.0, 1.0);
        let base = run_mc(&m, &u, &arr, 100, 3, area()).unwrap();
        let (dx, dy) = (8.0, -4.0);
        let moved = run_mc(
            &m,
            &Point3::ground(u.x + dx, u.y + dy),
            &arr.translated(dx, dy).unwrap(),
            100,
            3,
            SearchRegion::from(&area()).translated(dx, dy),
        )
        .unwrap();
        assert!(
            (moved.mse - base.mse).abs() <= 1e-6 * base.mse,
            "{} {}",
            moved.mse,
            base.mse
        );
    }

    #[test]
    fn noiseless_mc_recovers_truth() {
        let m = RangeModel::new(1e-4).unwrap();
        let arr = make_waveguide_array(2, 10, &area(), 3.0).unwrap();
        let u = Point3::ground(-6.1, 2.2);
        let opts = McOptions {
            noise: NoiseMode::Noiseless,
            ..McOptions::default()
        };
        let r = run_mc_with(&m, &u, &arr, 100, 9, area(), opts).unwrap();
        assert!(r.mse.sqrt() < 1e-3, "{}", r.mse);
    }
}
