//! Minimal SVG 1.1 chart writer: axes, ticks, point glyphs and polylines.

use std::fmt::Write as _;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Glyph {
    Dot,
    Cross,
}

#[derive(Debug, Clone)]
pub enum Series {
    Points { label: String, glyph: Glyph, points: Vec<(f64, f64)> },
    Line { label: String, points: Vec<(f64, f64)> },
}

#[derive(Debug, Clone)]
pub struct Chart {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub x_range: (f64, f64),
    pub y_range: (f64, f64),
    pub series: Vec<Series>,
}

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 480.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 20.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 60.0;
const COLORS: [&str; 4] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd"];

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// About five round tick values covering `[lo, hi]`.
pub fn ticks(lo: f64, hi: f64) -> Vec<f64> {
    let span = hi - lo;
    if !(span > 0.0) || !span.is_finite() {
        return vec![lo];
    }
    let raw = span / 5.0;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 5.0, 10.0]
        .iter()
        .map(|m| m * mag)
        .find(|s| span / s <= 6.0)
        .unwrap_or(10.0 * mag);
    let first = (lo / step).ceil() as i64;
    let last = (hi / step + 1e-9).floor() as i64;
    (first..=last).map(|k| k as f64 * step).collect()
}

fn fmt_tick(v: f64) -> String {
    if v.fract().abs() < 1e-9 {
        format!("{}", v.round() as i64)
    } else {
        format!("{v:.2}")
    }
}

impl Chart {
    fn sx(&self, x: f64) -> f64 {
        let (lo, hi) = self.x_range;
        LEFT + (x - lo) / (hi - lo) * (WIDTH - LEFT - RIGHT)
    }

    fn sy(&self, y: f64) -> f64 {
        let (lo, hi) = self.y_range;
        HEIGHT - BOTTOM - (y - lo) / (hi - lo) * (HEIGHT - TOP - BOTTOM)
    }

    pub fn render(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(
            s,
            r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
        );
        let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
        let _ = writeln!(
            s,
            r#"<text x="{}" y="24" text-anchor="middle" font-family="sans-serif" font-size="16">{}</text>"#,
            WIDTH / 2.0,
            escape(&self.title)
        );
        let (x0, y0) = (self.sx(self.x_range.0), self.sy(self.y_range.0));
        let (x1, y1) = (self.sx(self.x_range.1), self.sy(self.y_range.1));
        let _ = writeln!(s, r#"<g stroke="black" stroke-width="1">"#);
        let _ = writeln!(s, r#"<line x1="{x0:.1}" y1="{y0:.1}" x2="{x1:.1}" y2="{y0:.1}"/>"#);
        let _ = writeln!(s, r#"<line x1="{x0:.1}" y1="{y0:.1}" x2="{x0:.1}" y2="{y1:.1}"/>"#);
        for t in ticks(self.x_range.0, self.x_range.1) {
            let x = self.sx(t);
            let _ = writeln!(s, r#"<line x1="{x:.1}" y1="{y0:.1}" x2="{x:.1}" y2="{:.1}"/>"#, y0 + 5.0);
        }
        for t in ticks(self.y_range.0, self.y_range.1) {
            let y = self.sy(t);
            let _ = writeln!(s, r#"<line x1="{:.1}" y1="{y:.1}" x2="{x0:.1}" y2="{y:.1}"/>"#, x0 - 5.0);
        }
        let _ = writeln!(s, "</g>");
        let _ = writeln!(s, r#"<g font-family="sans-serif" font-size="11">"#);
        for t in ticks(self.x_range.0, self.x_range.1) {
            let _ = writeln!(
                s,
                r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
                self.sx(t),
                y0 + 18.0,
                fmt_tick(t)
            );
        }
        for t in ticks(self.y_range.0, self.y_range.1) {
            let _ = writeln!(
                s,
                r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{}</text>"#,
                x0 - 8.0,
                self.sy(t) + 4.0,
                fmt_tick(t)
            );
        }
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="middle" font-size="13">{}</text>"#,
            (x0 + x1) / 2.0,
            HEIGHT - 15.0,
            escape(&self.x_label)
        );
        let _ = writeln!(
            s,
            r#"<text x="18" y="{:.1}" text-anchor="middle" font-size="13" transform="rotate(-90 18 {:.1})">{}</text>"#,
            (y0 + y1) / 2.0,
            (y0 + y1) / 2.0,
            escape(&self.y_label)
        );
        let _ = writeln!(s, "</g>");

        for (k, series) in self.series.iter().enumerate() {
            let color = COLORS[k % COLORS.len()];
            match series {
                Series::Points { label, glyph, points } => {
                    let _ = writeln!(s, r#"<g fill="{color}" stroke="{color}"><title>{}</title>"#, escape(label));
                    for &(x, y) in points {
                        let (px, py) = (self.sx(x), self.sy(y));
                        match glyph {
                            Glyph::Dot => {
                                let _ = writeln!(s, r#"<circle cx="{px:.1}" cy="{py:.1}" r="4"/>"#);
                            }
                            Glyph::Cross => {
                                let _ = writeln!(
                                    s,
                                    r#"<path d="M{:.1},{:.1}L{:.1},{:.1}M{:.1},{:.1}L{:.1},{:.1}" stroke-width="1.5" fill="none"/>"#,
                                    px - 4.0,
                                    py - 4.0,
                                    px + 4.0,
                                    py + 4.0,
                                    px - 4.0,
                                    py + 4.0,
                                    px + 4.0,
                                    py - 4.0
                                );
                            }
                        }
                    }
                    let _ = writeln!(s, "</g>");
                }
                Series::Line { label, points } => {
                    let coords: Vec<String> = points
                        .iter()
                        .map(|&(x, y)| format!("{:.1},{:.1}", self.sx(x), self.sy(y)))
                        .collect();
                    let _ = writeln!(
                        s,
                        r#"<polyline fill="none" stroke="{color}" stroke-width="2" points="{}"><title>{}</title></polyline>"#,
                        coords.join(" "),
                        escape(label)
                    );
                }
            }
        }
        let mut legend_y = TOP + 10.0;
        for (k, series) in self.series.iter().enumerate() {
            let label = match series {
                Series::Points { label, .. } | Series::Line { label, .. } => label,
            };
            let _ = writeln!(
                s,
                r#"<text x="{:.1}" y="{legend_y:.1}" fill="{}" font-family="sans-serif" font-size="12" text-anchor="end">{}</text>"#,
                WIDTH - RIGHT - 5.0,
                COLORS[k % COLORS.len()],
                escape(label)
            );
            legend_y += 16.0;
        }
        s.push_str("</svg>\n");
        s
    }
}
