//! Deterministic SVG scatter plots of 2-D projections.
//!
//! Inorganic records render as squares, organic records as circles; active
//! records use the dark shade of the domain color, inactive the light
//! shade. Coordinates are written with fixed precision so the same
//! projection always produces byte-identical output.

use std::fmt::Write as _;
use std::path::Path;

use super::{Projection2D, VizError};
use crate::featurize::Domain;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 480.0;
const MARGIN: f64 = 48.0;
const SQUARE_SIDE: f64 = 8.0;
const CIRCLE_RADIUS: f64 = 4.0;

const INORGANIC_ACTIVE: &str = "#8b1a1a";
const INORGANIC_INACTIVE: &str = "#e8a0a0";
const ORGANIC_ACTIVE: &str = "#1a3a8b";
const ORGANIC_INACTIVE: &str = "#a0b8e8";

fn fill(domain: Domain, active: bool) -> &'static str {
    match (domain, active) {
        (Domain::Inorganic, true) => INORGANIC_ACTIVE,
        (Domain::Inorganic, false) => INORGANIC_INACTIVE,
        (Domain::Organic, true) => ORGANIC_ACTIVE,
        (Domain::Organic, false) => ORGANIC_INACTIVE,
    }
}

/// Map data values on [lo, hi] onto pixel positions [a, b]; a constant
/// axis collapses to the midpoint.
fn scale(v: f64, lo: f64, hi: f64, a: f64, b: f64) -> f64 {
    if hi > lo {
        a + (v - lo) / (hi - lo) * (b - a)
    } else {
        (a + b) / 2.0
    }
}

fn glyph(out: &mut String, domain: Domain, active: bool, px: f64, py: f64) {
    let color = fill(domain, active);
    match domain {
        Domain::Inorganic => {
            let half = SQUARE_SIDE / 2.0;
            let _ = writeln!(
                out,
                r#"    <rect x="{:.2}" y="{:.2}" width="{SQUARE_SIDE}" height="{SQUARE_SIDE}" fill="{color}"/>"#,
                px - half,
                py - half,
            );
        }
        Domain::Organic => {
            let _ = writeln!(
                out,
                r#"    <circle cx="{px:.2}" cy="{py:.2}" r="{CIRCLE_RADIUS}" fill="{color}"/>"#,
            );
        }
    }
}

/// Render a projection as an SVG document string.
///
/// `domains` and `active` must be row-aligned with the projection. The
/// legend is always emitted, so an empty projection still yields a valid
/// document.
pub fn scatter_svg(projection: &Projection2D, domains: &[Domain], active: &[bool]) -> String {
    let n = projection.len();
    assert_eq!(n, domains.len(), "domain labels must match projection rows");
    assert_eq!(n, active.len(), "activity labels must match projection rows");
    let coords = &projection.coordinates;

    let mut x_lo = f64::INFINITY;
    let mut x_hi = f64::NEG_INFINITY;
    let mut y_lo = f64::INFINITY;
    let mut y_hi = f64::NEG_INFINITY;
    for i in 0..n {
        x_lo = x_lo.min(coords.get(i, 0));
        x_hi = x_hi.max(coords.get(i, 0));
        y_lo = y_lo.min(coords.get(i, 1));
        y_hi = y_hi.max(coords.get(i, 1));
    }

    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    );
    let _ = writeln!(
        out,
        r#"  <rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#
    );

    out.push_str("  <g id=\"points\">\n");
    for i in 0..n {
        let px = scale(coords.get(i, 0), x_lo, x_hi, MARGIN, WIDTH - MARGIN);
        // SVG y grows downward; flip so larger coordinates plot higher.
        let py = scale(coords.get(i, 1), y_lo, y_hi, HEIGHT - MARGIN, MARGIN);
        glyph(&mut out, domains[i], active[i], px, py);
    }
    out.push_str("  </g>\n");

    out.push_str("  <g id=\"legend\" font-family=\"sans-serif\" font-size=\"12\">\n");
    let entries = [
        (Domain::Inorganic, true, "inorganic active"),
        (Domain::Inorganic, false, "inorganic inactive"),
        (Domain::Organic, true, "organic active"),
        (Domain::Organic, false, "organic inactive"),
    ];
    for (row, (domain, is_active, label)) in entries.iter().enumerate() {
        let px = 16.0;
        let py = 18.0 + 16.0 * row as f64;
        glyph(&mut out, *domain, *is_active, px, py);
        let _ = writeln!(
            out,
            r#"    <text x="{:.2}" y="{:.2}">{label}</text>"#,
            px + 10.0,
            py + 4.0,
        );
    }
    out.push_str("  </g>\n");
    out.push_str("</svg>\n");
    out
}

/// Write [`scatter_svg`] output to a file.
pub fn render_scatter_svg(
    projection: &Projection2D,
    domains: &[Domain],
    active: &[bool],
    path: &Path,
) -> Result<(), VizError> {
    std::fs::write(path, scatter_svg(projection, domains, active))?;
    Ok(())
}
