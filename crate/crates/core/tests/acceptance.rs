//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any
//! failure. Run with
//!
//! ```text
//! cargo test -p pinching-crlb --test acceptance
//! ```

mod common;

use std::fs;
use std::process::Command;
use std::time::{Duration, Instant};

use pinching_crlb::closed_form::{optimal_spacing_analytic, square_grid_crlb, SquareGridSpec};
use pinching_crlb::crlb::{best_upper_bound, crlb, fisher_info, RangeModel};
use pinching_crlb::estimation::{empirical_fisher, run_mc};
use pinching_crlb::experiments::{
    compare_arrays, focal_experiment, gradient_check, heatmap, linspace_step, local_maxima,
    spacing_sweep, COMPARE_COUNTS, GRADIENT_FD_STEP,
};
use pinching_crlb::format;
use pinching_crlb::geometry::{
    make_circular_array, make_square_cluster, make_waveguide_array, AntennaArray, Point3,
    ServiceArea,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::{gaussian_fim, rel_err};

const K_E: f64 = 0.01;
const D_H: f64 = 3.0;

type Outcome = Result<String, String>;

fn area(exclusion: f64) -> ServiceArea {
    ServiceArea::new(10.0, 40.0, exclusion).unwrap()
}

fn model(k_e: f64) -> RangeModel {
    RangeModel::new(k_e).unwrap()
}

fn default_array(n: usize) -> AntennaArray {
    make_waveguide_array(2, n / 2, &area(0.0), D_H).unwrap()
}

fn check(cond: bool, detail: String) -> Outcome {
    if cond {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_pinching-crlb")
}

fn summary_value(text: &str, key: &str) -> Option<f64> {
    text.lines()
        .find_map(|l| l.strip_prefix(key)?.trim_start().strip_prefix('='))
        .and_then(|v| v.split_whitespace().next()?.parse().ok())
}

fn c1_analytic_optimum() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let cfg = dir.path().join("c.toml");
    fs::write(&cfg, "d_h = 3.0\n[optimize]\nn_bar = 1\n").map_err(|e| e.to_string())?;
    let out = dir.path().join("d");
    let status = Command::new(bin())
        .args(["optimize-spacing", "--quiet", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&out)
        .status()
        .map_err(|e| e.to_string())?;
    let text = fs::read_to_string(out.join("summary.txt")).map_err(|e| e.to_string())?;
    let delta = summary_value(&text, "optimal_spacing").ok_or("no optimal_spacing line")?;
    let analytic = optimal_spacing_analytic(D_H);
    check(
        status.success() && (delta - 4.242641).abs() <= 1e-6 && (delta - analytic).abs() <= 1e-6,
        format!("optimal_spacing = {delta}, analytic = {analytic}"),
    )
}

fn c2_closed_form_consistency() -> Outcome {
    let mut worst: f64 = 0.0;
    for n_bar in 1..=4 {
        for spacing in [0.5, 1.0, 2.0, 5.0] {
            let spec = SquareGridSpec::new(spacing, n_bar, D_H, K_E).unwrap();
            let center = Point3::ground(1.5, -2.0);
            let cluster = make_square_cluster(&center, spacing, n_bar, D_H).unwrap();
            let general = crlb(&model(K_E), &center, &cluster).value();
            worst = worst.max(rel_err(square_grid_crlb(&spec), general));
        }
    }
    check(
        worst <= 1e-12,
        format!("max relative difference {worst:e} over 16 configurations"),
    )
}

fn c3_fisher_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let k_e = 10f64.powf(rng.gen_range(-4.0..0.0));
        let h = rng.gen_range(0.5..6.0);
        let n = rng.gen_range(1..=8);
        let antennas: Vec<(f64, f64, f64)> = (0..n)
            .map(|_| (rng.gen_range(-20.0..20.0), rng.gen_range(-5.0..5.0), h))
            .collect();
        let (x, y) = (rng.gen_range(-20.0..20.0), rng.gen_range(-5.0..5.0));
        let array = AntennaArray::new(
            antennas
                .iter()
                .map(|&(a, b, c)| Point3::new(a, b, c).unwrap())
                .collect(),
            None,
            h,
        )
        .unwrap();
        let lib = fisher_info(&model(k_e), &Point3::ground(x, y), &array);
        let oracle = gaussian_fim(k_e, x, y, &antennas);
        worst = worst
            .max(rel_err(lib.j_x, oracle.0))
            .max(rel_err(lib.j_y, oracle.1));
    }
    if worst > 1e-12 {
        return Err(format!("closed form vs Gaussian oracle: {worst:e}"));
    }
    let array = default_array(4);
    let user = Point3::ground(5.0, 1.0);
    let (ex, ey) = empirical_fisher(&model(K_E), &user, &array, 100_000, 11, 1e-4);
    let j = fisher_info(&model(K_E), &user, &array);
    let (dx, dy) = (rel_err(ex, j.j_x), rel_err(ey, j.j_y));
    check(
        dx <= 0.02 && dy <= 0.02,
        format!(
            "oracle {worst:.1e}; Monte-Carlo J_x off {:.2}%, J_y off {:.2}%",
            100.0 * dx,
            100.0 * dy
        ),
    )
}

fn c4_gradient() -> Outcome {
    let g = gradient_check(
        &model(K_E),
        &default_array(20),
        &area(0.0),
        (20, 20),
        GRADIENT_FD_STEP,
    );
    check(
        g.max_relative_error < 1e-6 && g.probes == 400,
        format!(
            "max relative error {:e} over {} probes ({} singular skipped)",
            g.max_relative_error, g.probes, g.skipped
        ),
    )
}

fn c5_dominance() -> Outcome {
    let mut worst_ratio = f64::INFINITY;
    for a in [1.0, 2.0] {
        let rows = compare_arrays(
            &model(K_E),
            &area(a),
            &COMPARE_COUNTS,
            2,
            0.01,
            D_H,
            (200, 50),
        )
        .map_err(|e| e.to_string())?;
        for r in rows {
            if r.pinching >= r.conventional {
                return Err(format!(
                    "a = {a}, N = {}: {} vs {}",
                    r.n, r.pinching, r.conventional
                ));
            }
            worst_ratio = worst_ratio.min(r.conventional / r.pinching);
        }
    }
    check(
        true,
        format!("conventional/pinching ratio ≥ {worst_ratio:.1} over 10 cases"),
    )
}

fn c6_singularity_trend() -> Outcome {
    let user = Point3::ground(20.0, 0.0);
    let m = model(K_E);
    let conv: Vec<f64> = [0.1, 0.03, 0.01, 0.003]
        .iter()
        .map(|&l| crlb(&m, &user, &make_circular_array(20, l, D_H).unwrap()).value())
        .collect();
    let increasing = conv.windows(2).all(|w| w[1] > w[0]);
    let pin_array = default_array(20);
    let pin = crlb(&m, &user, &pin_array);
    let bound = best_upper_bound(&m, &user, &pin_array);
    check(
        increasing && pin.is_finite() && bound.is_some_and(|b| pin.value() <= b),
        format!(
            "conventional {:?}; pinching {} ≤ bound {:?}",
            conv.iter().map(|v| format::sig(*v)).collect::<Vec<_>>(),
            format::crlb(pin),
            bound
        ),
    )
}

fn c7_local_maxima() -> Outcome {
    let array = default_array(20);
    let field = heatmap(&model(K_E), &array, &area(0.0), (400, 100)).map_err(|e| e.to_string())?;
    let maxima = local_maxima(&field);
    // Interior: at least two neighbours on either side along the waveguide.
    let interior: Vec<&Point3> = array
        .antennas()
        .iter()
        .filter(|a| a.x.abs() <= 10.0)
        .collect();
    let missed: Vec<String> = interior
        .iter()
        .filter(|a| !maxima.iter().any(|m| (m.x - a.x).hypot(m.y - a.y) <= 0.5))
        .map(|a| format!("({}, {})", a.x, a.y))
        .collect();
    check(
        missed.is_empty() && !interior.is_empty(),
        format!(
            "{} maxima; {} interior antennas, unmatched: {:?}",
            maxima.len(),
            interior.len(),
            missed
        ),
    )
}

fn c8_focal() -> Outcome {
    let m = model(K_E);
    let a = area(0.0);
    let left = focal_experiment(&m, &a, -10.0, 20, 2, D_H, (200, 50)).map_err(|e| e.to_string())?;
    let right = focal_experiment(&m, &a, 10.0, 20, 2, D_H, (200, 50)).map_err(|e| e.to_string())?;
    for (f, focal) in [(&left, -10.0), (&right, 10.0)] {
        let (i, j) = f.argmin().ok_or("empty field")?;
        let c = f.center(i, j);
        if (c.x - focal).hypot(c.y) > 2.0 {
            return Err(format!("focal {focal}: minimum at ({}, {})", c.x, c.y));
        }
    }
    let mut worst: f64 = 0.0;
    for j in 0..left.ny {
        for i in 0..left.nx {
            let l = left.get(i, j).value();
            let r = right.get(left.nx - 1 - i, j).value();
            worst = worst.max(rel_err(l, r));
        }
    }
    check(
        worst <= 1e-12,
        format!("minima within 2 m of focal points; mirror error {worst:e}"),
    )
}

fn c9_monte_carlo() -> Outcome {
    let m = model(0.001);
    let array = default_array(20);
    let user = Point3::ground(5.0, 1.0);
    let a = area(0.0);
    let r1 = run_mc(&m, &user, &array, 2000, 1, a).map_err(|e| e.to_string())?;
    let r2 = run_mc(&m, &user, &array, 2000, 1, a).map_err(|e| e.to_string())?;
    let ratio = r1.ratio_paper;
    let ordered = r1.crlb_paper.value() <= r1.crlb_full.value();
    let same = format!("{r1:?}") == format!("{r2:?}") && r1.mse.to_bits() == r2.mse.to_bits();
    // The CLI path: two runs write byte-identical reports.
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let cfg = dir.path().join("c.toml");
    fs::write(&cfg, "k_e = 0.001\ntrials = 2000\n").map_err(|e| e.to_string())?;
    let mut reports = Vec::new();
    for run in ["a", "b"] {
        let out = dir.path().join(run);
        let ok = Command::new(bin())
            .args(["validate-mc", "--quiet", "--seed", "1", "--config"])
            .arg(&cfg)
            .arg("--out")
            .arg(&out)
            .status()
            .map_err(|e| e.to_string())?
            .success();
        if !ok {
            return Err("validate-mc failed".into());
        }
        reports.push(fs::read(out.join("report.toml")).map_err(|e| e.to_string())?);
    }
    check(
        (0.9..=3.0).contains(&ratio) && ordered && same && reports[0] == reports[1],
        format!(
            "MSE/CRLB = {ratio:.4}, paper {} ≤ full {}, deterministic = {}",
            format::crlb(r1.crlb_paper),
            format::crlb(r1.crlb_full),
            same && reports[0] == reports[1]
        ),
    )
}

fn c10_convexity() -> Outcome {
    let deltas = linspace_step(0.2, 20.0, 0.01);
    for n_bar in 1..=4 {
        let f = |d: f64| square_grid_crlb(&SquareGridSpec::new(d, n_bar, D_H, K_E).unwrap());
        let h = 0.01;
        for &d in &deltas[1..deltas.len() - 1] {
            let second = f(d + h) - 2.0 * f(d) + f(d - h);
            if second <= 0.0 || second.is_nan() {
                return Err(format!(
                    "n_bar {n_bar}: second difference {second:e} at {d}"
                ));
            }
        }
    }
    let grid = linspace_step(0.5, 10.0, 0.1);
    let mut argmins = Vec::new();
    for n_bar in 1..=4 {
        let base = spacing_sweep(n_bar, D_H, K_E, &grid).map_err(|e| e.to_string())?;
        if !base.is_unimodal() {
            return Err(format!("n_bar {n_bar}: sweep not unimodal"));
        }
        let at = base.argmin();
        for k_e in [1e-4, 0.1, 1.0] {
            let scaled = spacing_sweep(n_bar, D_H, k_e, &grid).map_err(|e| e.to_string())?;
            if scaled.argmin() != at || !scaled.is_unimodal() {
                return Err(format!("n_bar {n_bar}: argmin moves at k_e = {k_e}"));
            }
        }
        argmins.push(format::sig(base.points[at.unwrap()].0));
    }
    check(
        true,
        format!("convex on [0.2, 20]; sweep argmins {argmins:?} invariant in k_e"),
    )
}

fn main() {
    type Criterion = (&'static str, Duration, fn() -> Outcome);
    let criteria: [Criterion; 10] = [
        (
            "1 analytic optimum",
            Duration::from_secs(1),
            c1_analytic_optimum,
        ),
        (
            "2 closed-form consistency",
            Duration::from_secs(1),
            c2_closed_form_consistency,
        ),
        ("3 Fisher oracle", Duration::from_secs(30), c3_fisher_oracle),
        ("4 gradient", Duration::from_secs(5), c4_gradient),
        ("5 dominance", Duration::from_secs(10), c5_dominance),
        ("6 singularity trend", Duration::MAX, c6_singularity_trend),
        ("7 local maxima", Duration::from_secs(20), c7_local_maxima),
        ("8 focal placement", Duration::MAX, c8_focal),
        (
            "9 Monte-Carlo bound",
            Duration::from_secs(60),
            c9_monte_carlo,
        ),
        ("10 convexity", Duration::MAX, c10_convexity),
    ];
    let mut failures = 0;
    for (name, budget, run) in criteria {
        let start = Instant::now();
        let outcome = run();
        let elapsed = start.elapsed();
        let (ok, detail) = match outcome {
            Ok(d) if elapsed <= budget => (true, d),
            Ok(d) => (false, format!("{d}; too slow")),
            Err(d) => (false, d),
        };
        failures += usize::from(!ok);
        println!(
            "{} criterion {name}: {detail} [{:.2}s]",
            if ok { "PASS" } else { "FAIL" },
            elapsed.as_secs_f64()
        );
    }
    if failures > 0 {
        println!("{failures} criteria failed");
        std::process::exit(1);
    }
}
