//! Minimal SVG plots: basin heatmaps with tree overlays, leaf curves, ladder charts.
//!
//! Tree depths are the only `<path>` elements in a basin plot, one per depth,
//! so the plot can be checked by counting them.

use std::fmt::Write;

use shadowlab_core::{GridBox, GridDomain, C64};

pub const SIZE: f64 = 512.0;
/// Heatmap blocks per side at most.
pub const HEATMAP_BLOCKS: usize = 128;

const PALETTE: [&str; 8] = ["#b2182b", "#d6604d", "#f4a582", "#4393c3", "#2166ac", "#1b7837", "#762a83", "#e08214"];

/// Affine map from a box of C onto the square canvas.
#[derive(Clone, Copy, Debug)]
pub struct Frame {
    bbox: GridBox,
}

impl Frame {
    pub fn new(bbox: GridBox) -> Self {
        Self { bbox }
    }

    pub fn xy(&self, z: C64) -> (f64, f64) {
        let b = &self.bbox;
        ((z.re - b.re_min) / (b.re_max - b.re_min) * SIZE, (b.im_max - z.im) / (b.im_max - b.im_min) * SIZE)
    }
}

pub fn document(title: &str, body: &str) -> String {
    format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{SIZE}\" height=\"{SIZE}\" viewBox=\"0 0 {SIZE} {SIZE}\">\n<title>{}</title>\n<rect width=\"{SIZE}\" height=\"{SIZE}\" fill=\"white\"/>\n{body}</svg>\n",
        escape(title)
    )
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Member blocks shaded by boundary distance (dark = deep inside).
pub fn heatmap(grid: &GridDomain) -> String {
    let n = grid.resolution();
    let step = n.div_ceil(HEATMAP_BLOCKS).max(1);
    let blocks = n.div_ceil(step);
    let dmax = grid.boundary_dist().iter().copied().filter(|d| d.is_finite()).fold(0.0, f64::max);
    let px = SIZE / blocks as f64;
    let mut out = String::from("<g class=\"basin\" stroke=\"none\">\n");
    for bj in 0..blocks {
        for bi in 0..blocks {
            let (mut count, mut depth) = (0usize, 0.0f64);
            for j in bj * step..((bj + 1) * step).min(n) {
                for i in bi * step..((bi + 1) * step).min(n) {
                    if grid.is_member_cell(i, j) {
                        count += 1;
                        if grid.has_boundary_dist() {
                            depth = depth.max(grid.boundary_dist()[grid.index(i, j)]);
                        }
                    }
                }
            }
            if count == 0 {
                continue;
            }
            let t = if dmax > 0.0 { (depth / dmax).sqrt() } else { 1.0 };
            let g = (235.0 - 175.0 * t).round() as u8;
            // row j = 0 is the bottom edge
            let y = SIZE - (bj + 1) as f64 * px;
            let _ = writeln!(
                out,
                "<rect x=\"{:.2}\" y=\"{:.2}\" width=\"{:.2}\" height=\"{:.2}\" fill=\"rgb({g},{g},{})\"/>",
                bi as f64 * px,
                y,
                px,
                px,
                g.saturating_add(20)
            );
        }
    }
    out.push_str("</g>\n");
    out
}

/// One `<path>` of dots per depth.
pub fn depth_layers(frame: Frame, layers: &[Vec<C64>]) -> String {
    let mut out = String::from("<g class=\"tree\">\n");
    for (k, pts) in layers.iter().enumerate() {
        let r = (3.0 - 0.25 * k as f64).max(0.8);
        let mut d = String::new();
        for &z in pts {
            let (x, y) = frame.xy(z);
            let _ = write!(d, "M{:.2} {:.2}m{:.2} 0a{r:.2} {r:.2} 0 1 0 {:.2} 0a{r:.2} {r:.2} 0 1 0 {:.2} 0", x, y, -r, 2.0 * r, -2.0 * r);
        }
        let _ = writeln!(
            out,
            "<path class=\"depth-{k}\" fill=\"{}\" fill-opacity=\"0.8\" d=\"{d}\"/>",
            PALETTE[k % PALETTE.len()]
        );
    }
    out.push_str("</g>\n");
    out
}

pub fn markers(frame: Frame, points: &[C64], color: &str) -> String {
    let mut out = String::from("<g class=\"probes\">\n");
    for &z in points {
        let (x, y) = frame.xy(z);
        let _ = writeln!(out, "<circle cx=\"{x:.2}\" cy=\"{y:.2}\" r=\"2.5\" fill=\"none\" stroke=\"{color}\"/>");
    }
    out.push_str("</g>\n");
    out
}

/// Closed curves through the given points, as polylines.
pub fn curves(frame: Frame, curves: &[Vec<C64>], class: &str) -> String {
    let mut out = format!("<g class=\"{class}\" fill=\"none\" stroke-width=\"1\">\n");
    for (i, c) in curves.iter().enumerate() {
        let pts: Vec<String> = c
            .iter()
            .chain(c.first())
            .map(|&z| {
                let (x, y) = frame.xy(z);
                format!("{x:.2},{y:.2}")
            })
            .collect();
        let _ = writeln!(out, "<polyline stroke=\"{}\" points=\"{}\"/>", PALETTE[i % PALETTE.len()], pts.join(" "));
    }
    out.push_str("</g>\n");
    out
}

/// Line chart of `(x, y)` series with horizontal threshold lines.
pub fn ladder_chart(series: &[(&str, &[[f64; 2]])], thresholds: &[f64], x_label: &str) -> String {
    let all = series.iter().flat_map(|(_, s)| s.iter());
    let (mut x0, mut x1, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, thresholds.iter().copied().fold(0.0, f64::max));
    for p in all {
        x0 = x0.min(p[0]);
        x1 = x1.max(p[0]);
        if p[1].is_finite() {
            y1 = y1.max(p[1]);
        }
    }
    if !(x1 > x0) {
        x1 = x0 + 1.0;
    }
    let y1 = y1 * 1.05 + 1e-12;
    let m = 40.0;
    let sx = |x: f64| m + (x - x0) / (x1 - x0) * (SIZE - 2.0 * m);
    let sy = |y: f64| SIZE - m - y / y1 * (SIZE - 2.0 * m);
    let mut out = String::new();
    let _ = writeln!(out, "<line x1=\"{m}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"black\"/>", SIZE - m, SIZE - m, SIZE - m);
    let _ = writeln!(out, "<line x1=\"{m}\" y1=\"{m}\" x2=\"{m}\" y2=\"{}\" stroke=\"black\"/>", SIZE - m);
    let _ = writeln!(out, "<text x=\"{}\" y=\"{}\" font-size=\"12\">{}</text>", SIZE / 2.0, SIZE - 10.0, escape(x_label));
    for t in thresholds {
        let _ = writeln!(
            out,
            "<line x1=\"{m}\" y1=\"{y:.2}\" x2=\"{}\" y2=\"{y:.2}\" stroke=\"gray\" stroke-dasharray=\"4 3\"/><text x=\"{}\" y=\"{y:.2}\" font-size=\"10\">C={t}</text>",
            SIZE - m,
            SIZE - m + 2.0,
            y = sy(*t)
        );
    }
    for (i, (name, s)) in series.iter().enumerate() {
        let pts: Vec<String> =
            s.iter().filter(|p| p[1].is_finite()).map(|p| format!("{:.2},{:.2}", sx(p[0]), sy(p[1]))).collect();
        let color = PALETTE[i % PALETTE.len()];
        let _ = writeln!(out, "<polyline fill=\"none\" stroke=\"{color}\" points=\"{}\"/>", pts.join(" "));
        let _ = writeln!(out, "<text x=\"{}\" y=\"{}\" font-size=\"11\" fill=\"{color}\">{}</text>", m + 8.0, m + 14.0 * (i + 1) as f64, escape(name));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_path_per_depth() {
        let frame = Frame::new(GridBox::square(1.0));
        let layers = vec![vec![C64::new(0.0, 0.0)], vec![C64::new(0.5, 0.0), C64::new(-0.5, 0.0)], vec![]];
        let s = document("t", &depth_layers(frame, &layers));
        assert_eq!(s.matches("<path").count(), 3);
        assert_eq!(frame.xy(C64::new(-1.0, 1.0)), (0.0, 0.0));
    }
}
