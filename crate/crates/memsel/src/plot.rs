//! Plot-ready data from evaluation tables: one CSV per series plus a small SVG
//! with FDR lines, power bars and the `y = x` reference diagonal.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::report::EvalRow;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum XAxis {
    Alpha,
    PiTest,
    Rho,
    Eta,
}

impl std::str::FromStr for XAxis {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "alpha" => Ok(Self::Alpha),
            "pi-test" | "pi_test" => Ok(Self::PiTest),
            "rho" => Ok(Self::Rho),
            "eta" => Ok(Self::Eta),
            other => Err(format!("unknown plot kind {other:?} (expected alpha, pi-test, rho or eta)")),
        }
    }
}

impl XAxis {
    pub fn name(self) -> &'static str {
        match self {
            Self::Alpha => "alpha",
            Self::PiTest => "pi_test",
            Self::Rho => "rho",
            Self::Eta => "eta",
        }
    }

    fn value(self, row: &EvalRow) -> Option<f64> {
        match self {
            Self::Alpha => Some(row.alpha),
            Self::PiTest => row.pi_test,
            Self::Rho => row.rho,
            Self::Eta => row.eta,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Point {
    pub x: f64,
    pub fdr: f64,
    pub fdr_sd: f64,
    pub power: f64,
    pub power_sd: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    /// File-name-safe label built from the estimator and the fixed axes.
    pub name: String,
    pub points: Vec<Point>,
}

fn fmt_opt(label: &str, v: Option<f64>) -> Option<String> {
    v.map(|v| format!("{label}{v}"))
}

fn series_name(axis: XAxis, row: &EvalRow) -> String {
    let mut parts = vec![row.estimator.clone()];
    if axis != XAxis::Alpha {
        parts.push(format!("alpha{}", row.alpha));
    }
    if axis != XAxis::PiTest {
        parts.extend(fmt_opt("pi", row.pi_test));
    }
    if axis != XAxis::Rho {
        parts.extend(fmt_opt("rho", row.rho));
    }
    if axis != XAxis::Eta {
        parts.extend(fmt_opt("eta", row.eta));
    }
    parts.join("_")
}

/// Groups rows into series along `axis`; rows without a value on that axis are skipped.
pub fn build_series(rows: &[EvalRow], axis: XAxis) -> Vec<Series> {
    let mut groups: BTreeMap<String, Vec<Point>> = BTreeMap::new();
    for row in rows {
        let Some(x) = axis.value(row) else { continue };
        groups.entry(series_name(axis, row)).or_default().push(Point {
            x,
            fdr: row.fdr,
            fdr_sd: row.fdr_sd,
            power: row.power,
            power_sd: row.power_sd,
        });
    }
    groups
        .into_iter()
        .map(|(name, mut points)| {
            points.sort_by(|a, b| a.x.total_cmp(&b.x));
            Series { name, points }
        })
        .collect()
}

pub fn series_csv(axis: XAxis, series: &Series) -> String {
    let mut out = format!("{},fdr,fdr_sd,power,power_sd\n", axis.name());
    for p in &series.points {
        let _ = writeln!(out, "{},{},{},{},{}", p.x, p.fdr, p.fdr_sd, p.power, p.power_sd);
    }
    out
}

const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"];
const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 420.0;
const MARGIN: f64 = 50.0;

/// Renders all series on unit axes. The diagonal is drawn only when x is alpha.
pub fn render_svg(axis: XAxis, series: &[Series]) -> String {
    let xs: Vec<f64> = series.iter().flat_map(|s| s.points.iter().map(|p| p.x)).collect();
    let x_max = xs.iter().cloned().fold(0.0_f64, f64::max).max(1e-12);
    let plot_w = WIDTH - 2.0 * MARGIN;
    let plot_h = HEIGHT - 2.0 * MARGIN;
    let sx = |x: f64| MARGIN + x / x_max * plot_w;
    let sy = |y: f64| HEIGHT - MARGIN - y.clamp(0.0, 1.0) * plot_h;

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    );
    let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        svg,
        r#"<g id="axes" stroke="black"><line x1="{m}" y1="{b}" x2="{r}" y2="{b}"/><line x1="{m}" y1="{b}" x2="{m}" y2="{m}"/></g>"#,
        m = MARGIN,
        b = HEIGHT - MARGIN,
        r = WIDTH - MARGIN,
    );
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="{}" text-anchor="middle" font-size="12">{}</text>"#,
        WIDTH / 2.0,
        HEIGHT - 12.0,
        axis.name()
    );

    let bar_slots = series.len().max(1) as f64;
    let bar_w = (plot_w / (xs.len().max(1) as f64 + 1.0)).min(24.0);
    for (i, s) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let _ = writeln!(svg, r#"<g id="power-{}" fill="{color}" fill-opacity="0.3">"#, s.name);
        for p in &s.points {
            let w = bar_w / bar_slots;
            let x = sx(p.x) - bar_w / 2.0 + w * i as f64;
            let _ = writeln!(
                svg,
                r#"<rect x="{x:.2}" y="{:.2}" width="{w:.2}" height="{:.2}"/>"#,
                sy(p.power),
                sy(0.0) - sy(p.power)
            );
        }
        let _ = writeln!(svg, "</g>");
    }

    if axis == XAxis::Alpha {
        let d = x_max.min(1.0);
        let _ = writeln!(
            svg,
            r#"<line id="diagonal" x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="gray" stroke-dasharray="4 4"/>"#,
            sx(0.0),
            sy(0.0),
            sx(d),
            sy(d)
        );
    }

    for (i, s) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let points: Vec<String> = s.points.iter().map(|p| format!("{:.2},{:.2}", sx(p.x), sy(p.fdr))).collect();
        let _ = writeln!(
            svg,
            r#"<polyline id="fdr-{}" fill="none" stroke="{color}" stroke-width="2" points="{}"/>"#,
            s.name,
            points.join(" ")
        );
        let _ = writeln!(
            svg,
            r#"<text x="{}" y="{}" font-size="11" fill="{color}">{}</text>"#,
            MARGIN + 8.0,
            MARGIN + 14.0 * (i as f64 + 1.0),
            s.name
        );
    }
    svg.push_str("</svg>\n");
    svg
}
