//! Static SVG bar charts comparing model posteriors with human scores.

use std::fmt::Write;

const WIDTH: f64 = 560.0;
const HEIGHT: f64 = 320.0;
const LEFT: f64 = 56.0;
const RIGHT: f64 = 56.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 48.0;

const FULL_COLOR: &str = "#4c72b0";
const PPO_COLOR: &str = "#dd8452";
const HUMAN_COLOR: &str = "#55a868";

/// One task's numbers for plotting.
#[derive(Debug, Clone, PartialEq)]
pub struct TaskChart {
    pub title: String,
    pub candidates: Vec<String>,
    pub full: Vec<f64>,
    pub ppo: Vec<f64>,
    /// Mean human score per candidate on the 1–7 scale.
    pub human: Option<Vec<f64>>,
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

/// Grouped bars per candidate: full model and predictability model against
/// the left 0–1 axis, mean human score against the right 1–7 axis.
pub fn task_chart(chart: &TaskChart) -> String {
    let plot_w = WIDTH - LEFT - RIGHT;
    let plot_h = HEIGHT - TOP - BOTTOM;
    let base = TOP + plot_h;
    let n = chart.candidates.len().max(1) as f64;
    let group_w = plot_w / n;
    let series = if chart.human.is_some() { 3.0 } else { 2.0 };
    let bar_w = group_w * 0.7 / series;

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(
        s,
        r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#
    );
    let _ = writeln!(
        s,
        r#"<text x="{:.1}" y="18" text-anchor="middle" font-size="13">{}</text>"#,
        WIDTH / 2.0,
        escape(&chart.title)
    );

    for i in 0..=4 {
        let frac = f64::from(i) / 4.0;
        let y = base - frac * plot_h;
        let _ = writeln!(
            s,
            r##"<line x1="{LEFT:.1}" y1="{y:.1}" x2="{:.1}" y2="{y:.1}" stroke="#dddddd"/>"##,
            WIDTH - RIGHT
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{frac:.2}</text>"#,
            LEFT - 6.0,
            y + 4.0
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="14" y="{:.1}" text-anchor="middle" transform="rotate(-90 14 {:.1})">probability</text>"#,
        TOP + plot_h / 2.0,
        TOP + plot_h / 2.0
    );
    if chart.human.is_some() {
        for score in 1..=7 {
            let y = base - (f64::from(score) - 1.0) / 6.0 * plot_h;
            let _ = writeln!(
                s,
                r#"<text x="{:.1}" y="{:.1}">{score}</text>"#,
                WIDTH - RIGHT + 6.0,
                y + 4.0
            );
        }
        let x = WIDTH - 14.0;
        let _ = writeln!(
            s,
            r#"<text x="{x:.1}" y="{:.1}" text-anchor="middle" transform="rotate(90 {x:.1} {:.1})">mean score</text>"#,
            TOP + plot_h / 2.0,
            TOP + plot_h / 2.0
        );
    }

    for (i, cand) in chart.candidates.iter().enumerate() {
        let gx = LEFT + group_w * i as f64 + group_w * 0.15;
        let mut bars = vec![
            (chart.full.get(i).copied().unwrap_or(0.0), FULL_COLOR),
            (chart.ppo.get(i).copied().unwrap_or(0.0), PPO_COLOR),
        ];
        if let Some(h) = &chart.human {
            let score = h.get(i).copied().unwrap_or(1.0);
            bars.push((((score - 1.0) / 6.0).clamp(0.0, 1.0), HUMAN_COLOR));
        }
        for (j, (frac, color)) in bars.iter().enumerate() {
            let h = frac.clamp(0.0, 1.0) * plot_h;
            let _ = writeln!(
                s,
                r#"<rect x="{:.1}" y="{:.1}" width="{bar_w:.1}" height="{h:.1}" fill="{color}"/>"#,
                gx + bar_w * j as f64,
                base - h
            );
        }
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
            LEFT + group_w * (i as f64 + 0.5),
            base + 16.0,
            escape(cand)
        );
    }
    let _ = writeln!(
        s,
        r#"<line x1="{LEFT:.1}" y1="{base:.1}" x2="{:.1}" y2="{base:.1}" stroke="black"/>"#,
        WIDTH - RIGHT
    );

    let mut legend = vec![("full", FULL_COLOR), ("ppo", PPO_COLOR)];
    if chart.human.is_some() {
        legend.push(("human", HUMAN_COLOR));
    }
    for (i, (label, color)) in legend.iter().enumerate() {
        let x = LEFT + 90.0 * i as f64;
        let y = HEIGHT - 14.0;
        let _ = writeln!(
            s,
            r#"<rect x="{x:.1}" y="{:.1}" width="10" height="10" fill="{color}"/>"#,
            y - 9.0
        );
        let _ = writeln!(s, r#"<text x="{:.1}" y="{y:.1}">{label}</text>"#, x + 14.0);
    }
    s.push_str("</svg>\n");
    s
}
