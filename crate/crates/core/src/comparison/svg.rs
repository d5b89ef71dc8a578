//! Byte-stable SVG figures built from plain rects and text.
//!
//! The heatmap colours each `(K, rho)` cell by `log10(T_L)` on a fixed
//! five-stop ramp clamped to `[RAMP_LOG_MIN, RAMP_LOG_MAX]`, so figures from
//! different runs share one scale. Cells with infinite `T_L` are grey.

use std::collections::BTreeSet;
use std::fmt::Write;

use super::CellReport;

pub const RAMP_LOG_MIN: f64 = -0.5;
pub const RAMP_LOG_MAX: f64 = 1.5;
/// Dark purple (short T_L, strongly chaotic) to yellow (long T_L).
pub const RAMP: [(u8, u8, u8); 5] = [
    (0x44, 0x01, 0x54),
    (0x3b, 0x52, 0x8b),
    (0x21, 0x91, 0x8c),
    (0x5e, 0xc9, 0x62),
    (0xfd, 0xe7, 0x25),
];
const NO_DATA: &str = "#bdbdbd";
const PALETTE: [&str; 8] = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#17becf",
];

const CELL_W: f64 = 96.0;
const CELL_H: f64 = 52.0;
const LEFT: f64 = 64.0;
const TOP: f64 = 48.0;

/// Hex colour for a Lyapunov time.
pub fn ramp_color(lyapunov_time: f64) -> String {
    if !lyapunov_time.is_finite() || lyapunov_time <= 0.0 {
        return NO_DATA.to_owned();
    }
    let t =
        ((lyapunov_time.log10() - RAMP_LOG_MIN) / (RAMP_LOG_MAX - RAMP_LOG_MIN)).clamp(0.0, 1.0);
    let x = t * (RAMP.len() - 1) as f64;
    let i = (x.floor() as usize).min(RAMP.len() - 2);
    let f = x - i as f64;
    let mix = |a: u8, b: u8| (a as f64 + (b as f64 - a as f64) * f).round() as u8;
    let (a, b) = (RAMP[i], RAMP[i + 1]);
    format!(
        "#{:02x}{:02x}{:02x}",
        mix(a.0, b.0),
        mix(a.1, b.1),
        mix(a.2, b.2)
    )
}

fn text_color(fill: &str) -> &'static str {
    let v = |s: &str| u8::from_str_radix(s, 16).unwrap_or(0) as f64;
    let lum = 0.299 * v(&fill[1..3]) + 0.587 * v(&fill[3..5]) + 0.114 * v(&fill[5..7]);
    if lum > 140.0 {
        "#000000"
    } else {
        "#ffffff"
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

struct Layout {
    ks: Vec<f64>,
    rhos: Vec<f64>,
}

impl Layout {
    fn new(cells: &[&CellReport]) -> Self {
        let sorted = |f: fn(&CellReport) -> f64| {
            let mut v: Vec<f64> = cells.iter().map(|c| f(c)).collect();
            v.sort_by(f64::total_cmp);
            v.dedup();
            v
        };
        Layout {
            ks: sorted(|c| c.k),
            rhos: sorted(|c| c.rho),
        }
    }

    fn width(&self) -> f64 {
        LEFT + CELL_W * self.rhos.len() as f64 + 16.0
    }

    fn height(&self) -> f64 {
        TOP + CELL_H * self.ks.len() as f64 + 40.0
    }

    fn origin(&self, c: &CellReport) -> (f64, f64) {
        let col = self
            .rhos
            .iter()
            .position(|&r| r == c.rho)
            .expect("rho in layout");
        let row = self.ks.iter().position(|&k| k == c.k).expect("K in layout");
        (LEFT + CELL_W * col as f64, TOP + CELL_H * row as f64)
    }

    fn open(&self, svg: &mut String, title: &str) {
        let (w, h) = (self.width(), self.height());
        writeln!(
            svg,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}" font-family="sans-serif">"#
        )
        .unwrap();
        writeln!(svg, r##"<rect width="{w}" height="{h}" fill="#ffffff"/>"##).unwrap();
        writeln!(
            svg,
            r#"<text x="{LEFT}" y="20" font-size="14">{}</text>"#,
            escape(title)
        )
        .unwrap();
        for (i, rho) in self.rhos.iter().enumerate() {
            let x = LEFT + CELL_W * (i as f64 + 0.5);
            writeln!(
                svg,
                r#"<text x="{x}" y="{}" font-size="11" text-anchor="middle">{rho:?}</text>"#,
                TOP - 6.0
            )
            .unwrap();
        }
        for (i, k) in self.ks.iter().enumerate() {
            let y = TOP + CELL_H * (i as f64 + 0.5) + 4.0;
            writeln!(
                svg,
                r#"<text x="{}" y="{y}" font-size="11" text-anchor="end">K={k:?}</text>"#,
                LEFT - 6.0
            )
            .unwrap();
        }
        let y = TOP + CELL_H * self.ks.len() as f64 + 24.0;
        let x = LEFT + CELL_W * self.rhos.len() as f64 / 2.0;
        writeln!(
            svg,
            r#"<text x="{x}" y="{y}" font-size="12" text-anchor="middle">rho = epsilon / K</text>"#
        )
        .unwrap();
    }
}

fn cell_text(svg: &mut String, x: f64, y: f64, color: &str, lines: &[String]) {
    for (i, line) in lines.iter().enumerate() {
        let ty = y + CELL_H / 2.0 + (i as f64 - (lines.len() as f64 - 1.0) / 2.0) * 14.0 + 4.0;
        writeln!(
            svg,
            r#"<text x="{}" y="{ty}" font-size="11" text-anchor="middle" fill="{color}">{}</text>"#,
            x + CELL_W / 2.0,
            escape(line)
        )
        .unwrap();
    }
}

fn for_n(cells: &[CellReport], n: usize) -> Vec<&CellReport> {
    cells.iter().filter(|c| c.n == n).collect()
}

/// `(K, rho)` grid at one N, coloured by Lyapunov time and labelled with
/// `T_L` and the chaotic fraction. `None` if there are no cells at `n`.
pub fn design_space_svg(cells: &[CellReport], n: usize) -> Option<String> {
    let cells = for_n(cells, n);
    if cells.is_empty() {
        return None;
    }
    let layout = Layout::new(&cells);
    let mut svg = String::new();
    layout.open(
        &mut svg,
        &format!("Lyapunov time and chaotic fraction, N={n}"),
    );
    for c in &cells {
        let (x, y) = layout.origin(c);
        let fill = ramp_color(c.lyapunov_time);
        writeln!(
            svg,
            r##"<rect x="{x}" y="{y}" width="{CELL_W}" height="{CELL_H}" fill="{fill}" stroke="#ffffff"/>"##
        )
        .unwrap();
        let tl = if c.lyapunov_time.is_finite() {
            format!("T_L={:.2}", c.lyapunov_time)
        } else {
            "T_L=inf".to_owned()
        };
        let frac = format!("{:.0}% chaotic", 100.0 * c.chaos_fraction);
        cell_text(&mut svg, x, y, text_color(&fill), &[tl, frac]);
    }
    svg.push_str("</svg>\n");
    Some(svg)
}

/// Winning model per `(K, rho)` cell at one N. `None` if no cell has a winner.
pub fn winner_map_svg(cells: &[CellReport], n: usize) -> Option<String> {
    let cells = for_n(cells, n);
    if cells.iter().all(|c| c.winner.is_empty()) {
        return None;
    }
    let models: BTreeSet<&str> = cells
        .iter()
        .flat_map(|c| c.winner.split('|'))
        .filter(|m| !m.is_empty())
        .collect();
    let color_of = |winner: &str| -> &str {
        if winner.is_empty() {
            return NO_DATA;
        }
        if winner.contains('|') {
            return "#7f7f7f";
        }
        let i = models.iter().position(|m| *m == winner).unwrap_or(0);
        PALETTE[i % PALETTE.len()]
    };
    let layout = Layout::new(&cells);
    let mut svg = String::new();
    layout.open(&mut svg, &format!("Winner by mean VPT, N={n}"));
    for c in &cells {
        let (x, y) = layout.origin(c);
        let fill = color_of(&c.winner);
        writeln!(
            svg,
            r##"<rect x="{x}" y="{y}" width="{CELL_W}" height="{CELL_H}" fill="{fill}" stroke="#ffffff"/>"##
        )
        .unwrap();
        let name = if c.winner.is_empty() {
            "no valid model".to_owned()
        } else {
            c.winner.clone()
        };
        let mut lines = vec![name];
        if let Some(m) = c.margin {
            lines.push(format!("+{m:.2}"));
        }
        cell_text(&mut svg, x, y, text_color(fill), &lines);
    }
    svg.push_str("</svg>\n");
    Some(svg)
}
