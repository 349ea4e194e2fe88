//! Minimal line charts with a logarithmic x axis, written as standalone SVG.

use std::fmt::Write as _;

use crate::error::{Error, Result};

const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf", "#8c564b", "#e377c2",
];

/// One line on the chart. `band`, when present, holds a (low, high) pair for
/// every point and is drawn as a shaded polygon behind the line.
#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
    pub band: Option<Vec<(f64, f64)>>,
}

impl Series {
    pub fn new(label: impl Into<String>, points: Vec<(f64, f64)>) -> Self {
        Series {
            label: label.into(),
            points,
            band: None,
        }
    }

    pub fn with_band(mut self, band: Vec<(f64, f64)>) -> Self {
        self.band = Some(band);
        self
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChartSpec {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub width: f64,
    pub height: f64,
}

impl Default for ChartSpec {
    fn default() -> Self {
        ChartSpec {
            title: String::new(),
            x_label: String::new(),
            y_label: String::new(),
            width: 720.0,
            height: 440.0,
        }
    }
}

/// Drawing area inside the margins, in SVG user units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlotArea {
    pub left: f64,
    pub top: f64,
    pub right: f64,
    pub bottom: f64,
}

impl PlotArea {
    pub fn of(spec: &ChartSpec) -> Self {
        PlotArea {
            left: 70.0,
            top: 40.0,
            right: spec.width - 150.0,
            bottom: spec.height - 55.0,
        }
    }

    /// Inclusion test with slack for coordinates rounded when printed.
    pub fn contains(&self, x: f64, y: f64, slack: f64) -> bool {
        x >= self.left - slack && x <= self.right + slack && y >= self.top - slack && y <= self.bottom + slack
    }
}

struct Axes {
    area: PlotArea,
    log_x: (f64, f64),
    y: (f64, f64),
}

impl Axes {
    fn px(&self, x: f64) -> f64 {
        let t = (x.log10() - self.log_x.0) / (self.log_x.1 - self.log_x.0);
        self.area.left + t * (self.area.right - self.area.left)
    }

    fn py(&self, y: f64) -> f64 {
        let t = (y - self.y.0) / (self.y.1 - self.y.0);
        self.area.bottom - t * (self.area.bottom - self.area.top)
    }
}

fn check_series(s: &Series) -> Result<()> {
    if s.points.len() < 2 {
        return Err(Error::Precondition(format!(
            "series `{}` needs at least 2 points, got {}",
            s.label,
            s.points.len()
        )));
    }
    for w in s.points.windows(2) {
        if !(w[1].0 > w[0].0) {
            return Err(Error::Precondition(format!(
                "series `{}`: x values must be strictly increasing",
                s.label
            )));
        }
    }
    for &(x, y) in &s.points {
        if !(x > 0.0 && x.is_finite()) {
            return Err(Error::Domain(format!("series `{}`: x = {x} on a log axis", s.label)));
        }
        if !y.is_finite() {
            return Err(Error::NonFinite(format!("series `{}`: y = {y}", s.label)));
        }
    }
    if let Some(band) = &s.band {
        if band.len() != s.points.len() {
            return Err(Error::Dimension {
                expected: s.points.len(),
                got: band.len(),
            });
        }
        if band
            .iter()
            .any(|&(lo, hi)| !(lo.is_finite() && hi.is_finite()) || lo > hi)
        {
            return Err(Error::Precondition(format!("series `{}`: malformed band", s.label)));
        }
    }
    Ok(())
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

fn tick_label(v: f64) -> String {
    let s = format!("{v:.4}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" {
        "0".into()
    } else {
        s.into()
    }
}

/// Render the series as an SVG document.
pub fn render_svg(series: &[Series], spec: &ChartSpec) -> Result<String> {
    if series.is_empty() {
        return Err(Error::Precondition("nothing to plot".into()));
    }
    series.iter().try_for_each(check_series)?;

    let xs = series.iter().flat_map(|s| s.points.iter().map(|p| p.0));
    let (x_lo, x_hi) = xs.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), x| (a.min(x), b.max(x)));
    let ys = series.iter().flat_map(|s| {
        let band = s.band.iter().flatten().flat_map(|&(lo, hi)| [lo, hi]);
        s.points.iter().map(|p| p.1).chain(band)
    });
    let (mut y_lo, mut y_hi) = ys.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), y| (a.min(y), b.max(y)));
    let pad = if y_hi > y_lo {
        0.05 * (y_hi - y_lo)
    } else {
        0.5 * y_lo.abs().max(1.0)
    };
    y_lo -= pad;
    y_hi += pad;

    let area = PlotArea::of(spec);
    let axes = Axes {
        area,
        log_x: (x_lo.log10(), x_hi.log10()),
        y: (y_lo, y_hi),
    };

    let mut out = String::new();
    let w = &mut out;
    let _ = writeln!(
        w,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{0}" height="{1}" viewBox="0 0 {0} {1}" font-family="sans-serif" font-size="12">"#,
        spec.width, spec.height
    );
    let _ = writeln!(w, r#"<rect width="100%" height="100%" fill="white"/>"#);
    if !spec.title.is_empty() {
        let _ = writeln!(
            w,
            r#"<text x="{:.2}" y="22" text-anchor="middle" font-size="15">{}</text>"#,
            (area.left + area.right) / 2.0,
            escape(&spec.title)
        );
    }

    // decade ticks on x, five even ticks on y
    let _ = writeln!(w, r##"<g stroke="#dddddd" stroke-width="1">"##);
    let first = axes.log_x.0.ceil() as i32;
    let last = axes.log_x.1.floor() as i32;
    let step = ((last - first) / 10 + 1).max(1);
    let decades: Vec<i32> = (first..=last).step_by(step as usize).collect();
    for &e in &decades {
        let x = axes.px(10f64.powi(e));
        let _ = writeln!(
            w,
            r#"<line x1="{x:.2}" y1="{:.2}" x2="{x:.2}" y2="{:.2}"/>"#,
            area.top, area.bottom
        );
    }
    let y_ticks: Vec<f64> = (0..=4).map(|i| y_lo + (y_hi - y_lo) * i as f64 / 4.0).collect();
    for &v in &y_ticks {
        let y = axes.py(v);
        let _ = writeln!(
            w,
            r#"<line x1="{:.2}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}"/>"#,
            area.left, area.right
        );
    }
    let _ = writeln!(w, "</g>");
    for &e in &decades {
        let _ = writeln!(
            w,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">1e{e}</text>"#,
            axes.px(10f64.powi(e)),
            area.bottom + 16.0
        );
    }
    for &v in &y_ticks {
        let _ = writeln!(
            w,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#,
            area.left - 6.0,
            axes.py(v) + 4.0,
            tick_label(v)
        );
    }
    let _ = writeln!(
        w,
        r#"<rect x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="none" stroke="black"/>"#,
        area.left,
        area.top,
        area.right - area.left,
        area.bottom - area.top
    );
    if !spec.x_label.is_empty() {
        let _ = writeln!(
            w,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
            (area.left + area.right) / 2.0,
            area.bottom + 38.0,
            escape(&spec.x_label)
        );
    }
    if !spec.y_label.is_empty() {
        let cy = (area.top + area.bottom) / 2.0;
        let _ = writeln!(
            w,
            r#"<text x="18" y="{cy:.2}" text-anchor="middle" transform="rotate(-90 18 {cy:.2})">{}</text>"#,
            escape(&spec.y_label)
        );
    }

    for (i, s) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        if let Some(band) = &s.band {
            let upper = s.points.iter().zip(band).map(|(p, b)| (p.0, b.1));
            let lower = s.points.iter().zip(band).rev().map(|(p, b)| (p.0, b.0));
            let pts: Vec<String> = upper
                .chain(lower)
                .map(|(x, y)| format!("{:.2},{:.2}", axes.px(x), axes.py(y)))
                .collect();
            let _ = writeln!(
                w,
                r#"<polygon class="band" points="{}" fill="{color}" fill-opacity="0.18" stroke="none"/>"#,
                pts.join(" ")
            );
        }
        let pts: Vec<String> = s
            .points
            .iter()
            .map(|&(x, y)| format!("{:.2},{:.2}", axes.px(x), axes.py(y)))
            .collect();
        let _ = writeln!(
            w,
            r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="2"/>"#,
            pts.join(" ")
        );
        let ly = area.top + 10.0 + 18.0 * i as f64;
        let _ = writeln!(
            w,
            r#"<line x1="{0:.2}" y1="{ly:.2}" x2="{1:.2}" y2="{ly:.2}" stroke="{color}" stroke-width="2"/>"#,
            area.right + 12.0,
            area.right + 32.0
        );
        let _ = writeln!(
            w,
            r#"<text x="{:.2}" y="{:.2}">{}</text>"#,
            area.right + 38.0,
            ly + 4.0,
            escape(&s.label)
        );
    }
    let _ = writeln!(w, "</svg>");
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn coords(points: &str) -> Vec<(f64, f64)> {
        points
            .split_whitespace()
            .map(|pair| {
                let (x, y) = pair.split_once(',').unwrap();
                (x.parse().unwrap(), y.parse().unwrap())
            })
            .collect()
    }

    #[test]
    fn two_points_make_one_polyline_with_two_pairs() {
        let s = Series::new("speedup", vec![(1e-3, 1.5), (1e3, 2.5)]);
        let svg = render_svg(&[s], &ChartSpec::default()).unwrap();
        let doc = roxmltree::Document::parse(&svg).unwrap();
        let lines: Vec<_> = doc.descendants().filter(|n| n.has_tag_name("polyline")).collect();
        assert_eq!(lines.len(), 1);
        assert_eq!(coords(lines[0].attribute("points").unwrap()).len(), 2);
    }

    #[test]
    fn parses_as_xml_with_escaped_labels() {
        let spec = ChartSpec {
            title: "a < b & c".into(),
            x_label: "tau_comm / tau_1".into(),
            y_label: "\"ratio\"".into(),
            ..ChartSpec::default()
        };
        let s = Series::new("p<0.5", vec![(1.0, 1.0), (10.0, 1.0), (100.0, 1.0)]).with_band(vec![(1.0, 1.0); 3]);
        let svg = render_svg(&[s], &spec).unwrap();
        let doc = roxmltree::Document::parse(&svg).unwrap();
        assert!(doc.descendants().any(|n| n.text() == Some("a < b & c")));
        assert_eq!(doc.descendants().filter(|n| n.has_tag_name("polygon")).count(), 1);
    }

    #[test]
    fn log_axis_spaces_decades_evenly() {
        let s = Series::new("s", vec![(1.0, 0.0), (10.0, 1.0), (100.0, 2.0)]);
        let svg = render_svg(&[s], &ChartSpec::default()).unwrap();
        let doc = roxmltree::Document::parse(&svg).unwrap();
        let line = doc.descendants().find(|n| n.has_tag_name("polyline")).unwrap();
        let p = coords(line.attribute("points").unwrap());
        assert!(((p[1].0 - p[0].0) - (p[2].0 - p[1].0)).abs() < 0.02);
    }

    #[test]
    fn rejects_bad_input() {
        let spec = ChartSpec::default();
        assert!(render_svg(&[], &spec).is_err());
        assert!(render_svg(&[Series::new("one", vec![(1.0, 1.0)])], &spec).is_err());
        assert!(render_svg(&[Series::new("dec", vec![(2.0, 1.0), (1.0, 1.0)])], &spec).is_err());
        assert!(render_svg(&[Series::new("zero", vec![(0.0, 1.0), (1.0, 1.0)])], &spec).is_err());
        assert!(render_svg(&[Series::new("nan", vec![(1.0, f64::NAN), (2.0, 1.0)])], &spec).is_err());
        let short_band = Series::new("b", vec![(1.0, 1.0), (2.0, 1.0)]).with_band(vec![(0.0, 2.0)]);
        assert!(render_svg(&[short_band], &spec).is_err());
    }

    fn banded_series() -> impl Strategy<Value = Series> {
        (
            2usize..12,
            -8.0f64..8.0,
            prop::collection::vec((-1e3f64..1e3, 0.0f64..50.0, 0.0f64..50.0), 12),
        )
            .prop_map(|(n, start, vals)| {
                let points: Vec<(f64, f64)> = (0..n)
                    .map(|i| (10f64.powf(start + 0.7 * i as f64), vals[i].0))
                    .collect();
                let band = (0..n).map(|i| (vals[i].0 - vals[i].1, vals[i].0 + vals[i].2)).collect();
                Series::new("s", points).with_band(band)
            })
    }

    proptest! {
        #[test]
        fn band_stays_inside_plot_area(series in prop::collection::vec(banded_series(), 1..4)) {
            let spec = ChartSpec::default();
            let area = PlotArea::of(&spec);
            let svg = render_svg(&series, &spec).unwrap();
            let doc = roxmltree::Document::parse(&svg).unwrap();
            let mut seen = 0;
            for node in doc.descendants().filter(|n| n.has_tag_name("polygon") || n.has_tag_name("polyline")) {
                for (x, y) in coords(node.attribute("points").unwrap()) {
                        prop_assert!(area.contains(x, y, 0.01), "({x}, {y}) outside {area:?}");
                }
                seen += 1;
            }
            prop_assert_eq!(seen, 2 * series.len());
        }
    }
}
