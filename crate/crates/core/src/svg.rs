//! Self-contained SVG rendering of a [`CrlbField`].
//!
//! Colors follow a linear scale from the smallest finite cell to the 99th
//! percentile of finite cells. Larger and non-finite cells are drawn with the
//! top color; the data files keep the real values.

use std::fmt::Write as _;

use crate::experiments::CrlbField;
use crate::format;
use crate::geometry::Point3;

/// Pixels per meter.
const SCALE: f64 = 20.0;
const LEGEND_HEIGHT: f64 = 40.0;

// Viridis anchor colors.
const STOPS: [(f64, [u8; 3]); 5] = [
    (0.0, [68, 1, 84]),
    (0.25, [59, 82, 139]),
    (0.5, [33, 145, 140]),
    (0.75, [94, 201, 98]),
    (1.0, [253, 231, 37]),
];

fn color(t: f64) -> String {
    let t = t.clamp(0.0, 1.0);
    let k = STOPS
        .iter()
        .rposition(|(s, _)| *s <= t)
        .unwrap_or(0)
        .min(STOPS.len() - 2);
    let (s0, c0) = STOPS[k];
    let (s1, c1) = STOPS[k + 1];
    let w = (t - s0) / (s1 - s0);
    let mix = |a: u8, b: u8| (a as f64 + w * (b as f64 - a as f64)).round() as u8;
    format!(
        "#{:02x}{:02x}{:02x}",
        mix(c0[0], c1[0]),
        mix(c0[1], c1[1]),
        mix(c0[2], c1[2])
    )
}

/// 99th percentile (nearest rank) of the finite values, if any.
pub fn display_ceiling(field: &CrlbField) -> Option<f64> {
    let mut finite: Vec<f64> = field.values.iter().filter_map(|v| v.get()).collect();
    if finite.is_empty() {
        return None;
    }
    finite.sort_by(f64::total_cmp);
    let rank = ((0.99 * finite.len() as f64).ceil() as usize).clamp(1, finite.len());
    Some(finite[rank - 1])
}

/// Renders `field` with `antennas` marked; `header` goes into a leading
/// XML comment.
pub fn render_field(field: &CrlbField, antennas: &[Point3], header: &str) -> String {
    let area = field.area;
    let width = area.d_l() * SCALE;
    let height = area.d_w() * SCALE;
    let cell_w = width / field.nx as f64;
    let cell_h = height / field.ny as f64;
    let lo = field.min_value().unwrap_or(0.0);
    let hi = display_ceiling(field).unwrap_or(1.0);
    let span = if hi > lo { hi - lo } else { 1.0 };

    let mut out = String::new();
    out.push_str("<!--\n");
    out.push_str(&header.replace("--", "- -"));
    out.push_str("-->\n");
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#,
        w = format::sig(width),
        h = format::sig(height + LEGEND_HEIGHT),
    );
    let _ = writeln!(out, r#"<g shape-rendering="crispEdges">"#);
    for j in 0..field.ny {
        // SVG y grows downward; row j = 0 is the bottom of the area.
        let y = height - (j + 1) as f64 * cell_h;
        for i in 0..field.nx {
            let t = match field.get(i, j).get() {
                Some(v) => (v - lo) / span,
                None => 1.0,
            };
            let _ = writeln!(
                out,
                r#"<rect x="{}" y="{}" width="{}" height="{}" fill="{}"/>"#,
                format::sig(i as f64 * cell_w),
                format::sig(y),
                format::sig(cell_w),
                format::sig(cell_h),
                color(t),
            );
        }
    }
    out.push_str("</g>\n");
    for a in antennas {
        let cx = (a.x + area.d_l() / 2.0) * SCALE;
        let cy = height - (a.y + area.d_w() / 2.0) * SCALE;
        let _ = writeln!(
            out,
            r#"<circle cx="{}" cy="{}" r="3" fill="none" stroke="white" stroke-width="1"/>"#,
            format::sig(cx),
            format::sig(cy),
        );
    }
    let bar_w = width / 2.0;
    let steps = 32;
    for k in 0..steps {
        let _ = writeln!(
            out,
            r#"<rect x="{}" y="{}" width="{}" height="12" fill="{}"/>"#,
            format::sig(10.0 + k as f64 * bar_w / steps as f64),
            format::sig(height + 8.0),
            format::sig(bar_w / steps as f64 + 0.5),
            color(k as f64 / (steps - 1) as f64),
        );
    }
    let _ = writeln!(
        out,
        r#"<text x="10" y="{}" font-family="sans-serif" font-size="11">{} m²</text>"#,
        format::sig(height + 34.0),
        format::sig(lo),
    );
    let _ = writeln!(
        out,
        r#"<text x="{}" y="{}" font-family="sans-serif" font-size="11" text-anchor="end">≥ {} m²</text>"#,
        format::sig(10.0 + bar_w),
        format::sig(height + 34.0),
        format::sig(hi),
    );
    out.push_str("</svg>\n");
    out
}
