//! Plot data as whitespace-separated tables and optional minimal SVG charts.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::Result;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Style {
    Line,
    Points,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub name: String,
    pub style: Style,
    pub points: Vec<(f64, f64)>,
}

impl Series {
    pub fn new(name: &str, style: Style, points: Vec<(f64, f64)>) -> Self {
        Self {
            name: name.to_string(),
            style,
            points,
        }
    }

    /// Two-column table with a `#` header line.
    pub fn to_dat(&self, x_label: &str) -> String {
        let mut out = format!("# {x_label} {}\n", self.name);
        for (x, y) in &self.points {
            let _ = writeln!(out, "{x} {y}");
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Panel {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub log_x: bool,
    pub log_y: bool,
    pub series: Vec<Series>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Figure {
    /// File stem, e.g. `fig2`.
    pub name: String,
    pub panels: Vec<Panel>,
}

impl Figure {
    /// Writes `plot/<name>_<panel>_<series>.dat` for every series.
    pub fn write_data(&self, dir: &Path) -> Result<()> {
        let plot_dir = dir.join("plot");
        fs::create_dir_all(&plot_dir)?;
        for (k, panel) in self.panels.iter().enumerate() {
            for s in &panel.series {
                let file = plot_dir.join(format!("{}_{}_{}.dat", self.name, k + 1, slug(&s.name)));
                fs::write(file, s.to_dat(&panel.x_label))?;
            }
        }
        Ok(())
    }

    pub fn write_svg(&self, dir: &Path) -> Result<()> {
        fs::write(dir.join(format!("{}.svg", self.name)), self.to_svg())?;
        Ok(())
    }

    pub fn to_svg(&self) -> String {
        const W: f64 = 480.0;
        const H: f64 = 360.0;
        let total_w = W * self.panels.len().max(1) as f64;
        let mut svg = format!(
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{total_w}\" height=\"{H}\" \
             font-family=\"sans-serif\" font-size=\"11\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
        );
        for (k, panel) in self.panels.iter().enumerate() {
            render_panel(&mut svg, panel, k as f64 * W, W, H);
        }
        svg.push_str("</svg>\n");
        svg
    }
}

fn slug(name: &str) -> String {
    name.chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() {
                c.to_ascii_lowercase()
            } else {
                '_'
            }
        })
        .collect()
}

const COLORS: [&str; 6] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b",
];

fn render_panel(svg: &mut String, panel: &Panel, x0: f64, w: f64, h: f64) {
    let (left, right, top, bottom) = (60.0, 15.0, 30.0, 45.0);
    let tx = |v: f64| if panel.log_x { v.log10() } else { v };
    let ty = |v: f64| if panel.log_y { v.log10() } else { v };
    let pts: Vec<(f64, f64)> = panel
        .series
        .iter()
        .flat_map(|s| s.points.iter().copied())
        .filter(|&(x, y)| (!panel.log_x || x > 0.0) && (!panel.log_y || y > 0.0))
        .map(|(x, y)| (tx(x), ty(y)))
        .filter(|(x, y)| x.is_finite() && y.is_finite())
        .collect();
    let _ = writeln!(
        svg,
        "<text x=\"{}\" y=\"18\" text-anchor=\"middle\" font-size=\"13\">{}</text>",
        x0 + w / 2.0,
        escape(&panel.title)
    );
    if pts.is_empty() {
        return;
    }
    let (mut xmin, mut xmax, mut ymin, mut ymax) = pts.iter().fold(
        (
            f64::INFINITY,
            f64::NEG_INFINITY,
            f64::INFINITY,
            f64::NEG_INFINITY,
        ),
        |(a, b, c, d), &(x, y)| (a.min(x), b.max(x), c.min(y), d.max(y)),
    );
    if xmax - xmin < 1e-12 {
        xmin -= 0.5;
        xmax += 0.5;
    }
    if ymax - ymin < 1e-12 {
        ymin -= 0.5;
        ymax += 0.5;
    }
    let pw = w - left - right;
    let ph = h - top - bottom;
    let sx = |x: f64| x0 + left + (x - xmin) / (xmax - xmin) * pw;
    let sy = |y: f64| top + ph - (y - ymin) / (ymax - ymin) * ph;

    let _ = writeln!(
        svg,
        "<rect x=\"{}\" y=\"{top}\" width=\"{pw}\" height=\"{ph}\" fill=\"none\" stroke=\"black\"/>",
        x0 + left
    );
    for i in 0..=4 {
        let fx = xmin + (xmax - xmin) * i as f64 / 4.0;
        let fy = ymin + (ymax - ymin) * i as f64 / 4.0;
        let lx = if panel.log_x { 10f64.powf(fx) } else { fx };
        let ly = if panel.log_y { 10f64.powf(fy) } else { fy };
        let _ = writeln!(
            svg,
            "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"middle\">{}</text>",
            sx(fx),
            top + ph + 15.0,
            tick(lx)
        );
        let _ = writeln!(
            svg,
            "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"end\">{}</text>",
            x0 + left - 4.0,
            sy(fy) + 4.0,
            tick(ly)
        );
    }
    let _ = writeln!(
        svg,
        "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">{}</text>",
        x0 + left + pw / 2.0,
        h - 8.0,
        escape(&panel.x_label)
    );
    let _ = writeln!(
        svg,
        "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\" transform=\"rotate(-90 {} {})\">{}</text>",
        x0 + 14.0,
        top + ph / 2.0,
        x0 + 14.0,
        top + ph / 2.0,
        escape(&panel.y_label)
    );

    for (k, s) in panel.series.iter().enumerate() {
        let color = COLORS[k % COLORS.len()];
        let mapped: Vec<(f64, f64)> = s
            .points
            .iter()
            .filter(|&&(x, y)| (!panel.log_x || x > 0.0) && (!panel.log_y || y > 0.0))
            .map(|&(x, y)| (sx(tx(x)), sy(ty(y))))
            .filter(|(x, y)| x.is_finite() && y.is_finite())
            .collect();
        match s.style {
            Style::Line => {
                let path: Vec<String> = mapped
                    .iter()
                    .map(|(x, y)| format!("{x:.1},{y:.1}"))
                    .collect();
                let _ = writeln!(
                    svg,
                    "<polyline fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\" points=\"{}\"/>",
                    path.join(" ")
                );
            }
            Style::Points => {
                for (x, y) in &mapped {
                    let _ = writeln!(
                        svg,
                        "<circle cx=\"{x:.1}\" cy=\"{y:.1}\" r=\"2\" fill=\"{color}\"/>"
                    );
                }
            }
        }
        let ly = top + 12.0 + 14.0 * k as f64;
        let _ = writeln!(
            svg,
            "<text x=\"{}\" y=\"{ly}\" fill=\"{color}\">{}</text>",
            x0 + left + 6.0,
            escape(&s.name)
        );
    }
}

fn tick(v: f64) -> String {
    if v != 0.0 && (v.abs() >= 1e4 || v.abs() < 1e-2) {
        format!("{v:.1e}")
    } else {
        format!("{v:.3}")
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}
