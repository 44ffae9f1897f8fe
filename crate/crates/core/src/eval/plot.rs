//! Minimal SVG line chart: mean rand index against k, one line per method.

use std::fmt::Write as _;

use super::sweep::SummaryRow;
use crate::data::Domain;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 400.0;
const MARGIN: f64 = 50.0;
const COLOURS: [&str; 6] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b",
];

pub fn rand_index_svg(summary: &[SummaryRow], domain: Domain) -> String {
    let rows: Vec<&SummaryRow> = summary.iter().filter(|r| r.domain == domain).collect();
    let mut methods: Vec<_> = rows.iter().map(|r| r.method).collect();
    methods.sort();
    methods.dedup();
    let k_min = rows.iter().map(|r| r.k).min().unwrap_or(0) as f64;
    let k_max = rows.iter().map(|r| r.k).max().unwrap_or(1) as f64;
    let span = (k_max - k_min).max(1.0);
    let x = |k: usize| MARGIN + (k as f64 - k_min) / span * (WIDTH - 2.0 * MARGIN);
    let y = |ri: f64| HEIGHT - MARGIN - ri.clamp(0.0, 1.0) * (HEIGHT - 2.0 * MARGIN);

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{}" y="20" text-anchor="middle">{} rand index vs k</text>"#,
        WIDTH / 2.0,
        domain.name()
    );
    let (x0, x1, y0, y1) = (MARGIN, WIDTH - MARGIN, HEIGHT - MARGIN, MARGIN);
    let _ = writeln!(
        s,
        r#"<line x1="{x0}" y1="{y0}" x2="{x1}" y2="{y0}" stroke="black"/>"#
    );
    let _ = writeln!(
        s,
        r#"<line x1="{x0}" y1="{y0}" x2="{x0}" y2="{y1}" stroke="black"/>"#
    );
    for tick in 0..=5 {
        let v = tick as f64 / 5.0;
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{:.1}" text-anchor="end">{v:.1}</text>"#,
            x0 - 6.0,
            y(v) + 4.0
        );
    }
    let mut ks: Vec<usize> = rows.iter().map(|r| r.k).collect();
    ks.sort_unstable();
    ks.dedup();
    for &k in &ks {
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{}" text-anchor="middle">{k}</text>"#,
            x(k),
            y0 + 18.0
        );
    }
    for (i, method) in methods.iter().enumerate() {
        let colour = COLOURS[i % COLOURS.len()];
        let points: Vec<String> = rows
            .iter()
            .filter(|r| r.method == *method)
            .map(|r| format!("{:.1},{:.1}", x(r.k), y(r.mean_rand_index)))
            .collect();
        let _ = writeln!(
            s,
            r#"<polyline fill="none" stroke="{colour}" stroke-width="2" points="{}"/>"#,
            points.join(" ")
        );
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" fill="{colour}">{method}</text>"#,
            x1 - 140.0,
            y1 + 16.0 * (i as f64 + 1.0)
        );
    }
    s.push_str("</svg>\n");
    s
}
