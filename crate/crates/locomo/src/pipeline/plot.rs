//! Dependency-free SVG line charts.
//!
//! The plot area carries its data bounds and pixel box as `data-*`
//! attributes, so polyline points can be mapped back to data exactly.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::Value;

use crate::error::{Error, Result};

const WIDTH: f64 = 760.0;
const HEIGHT: f64 = 420.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 560.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 370.0;
const TICKS: usize = 5;
const PALETTE: [&str; 10] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"];

#[derive(Clone, Debug, PartialEq)]
pub struct Series {
    pub name: String,
    pub points: Vec<(f64, f64)>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Chart {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub series: Vec<Series>,
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

fn bounds(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values.filter(|v| v.is_finite()).fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
    if !lo.is_finite() {
        (0.0, 1.0)
    } else if lo == hi {
        (lo - 0.5, hi + 0.5)
    } else {
        (lo, hi)
    }
}

fn tick_label(v: f64) -> String {
    if v == 0.0 {
        "0".into()
    } else if v.abs() >= 1e4 || v.abs() < 1e-2 {
        format!("{v:.2e}")
    } else {
        format!("{:.3}", v).trim_end_matches('0').trim_end_matches('.').to_string()
    }
}

impl Chart {
    pub fn new(title: &str, x_label: &str, y_label: &str) -> Self {
        Self { title: title.into(), x_label: x_label.into(), y_label: y_label.into(), series: Vec::new() }
    }

    pub fn point_count(&self) -> usize {
        self.series.iter().map(|s| s.points.len()).sum()
    }

    pub fn render(&self) -> String {
        let pts = || self.series.iter().flat_map(|s| s.points.iter());
        let (x_min, x_max) = bounds(pts().map(|p| p.0));
        let (y_min, y_max) = bounds(pts().map(|p| p.1));
        let px = |x: f64| LEFT + (x - x_min) / (x_max - x_min) * (RIGHT - LEFT);
        let py = |y: f64| BOTTOM - (y - y_min) / (y_max - y_min) * (BOTTOM - TOP);

        let mut s = String::new();
        let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#);
        let _ = writeln!(s, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
        let _ = writeln!(s, r#"<text x="{}" y="22" text-anchor="middle" font-size="15">{}</text>"#, (LEFT + RIGHT) / 2.0, escape(&self.title));
        let _ = writeln!(s, r#"<g class="axes" stroke="black">"#);
        let _ = writeln!(s, r#"<line class="axis x-axis" x1="{LEFT}" y1="{BOTTOM}" x2="{RIGHT}" y2="{BOTTOM}"/>"#);
        let _ = writeln!(s, r#"<line class="axis y-axis" x1="{LEFT}" y1="{TOP}" x2="{LEFT}" y2="{BOTTOM}"/>"#);
        for k in 0..=TICKS {
            let f = k as f64 / TICKS as f64;
            let (x, y) = (LEFT + f * (RIGHT - LEFT), BOTTOM - f * (BOTTOM - TOP));
            let _ = writeln!(s, r#"<line x1="{x}" y1="{BOTTOM}" x2="{x}" y2="{}"/>"#, BOTTOM + 5.0);
            let _ = writeln!(s, r#"<line x1="{}" y1="{y}" x2="{LEFT}" y2="{y}"/>"#, LEFT - 5.0);
        }
        let _ = writeln!(s, "</g>");
        let _ = writeln!(s, r#"<g class="tick-labels">"#);
        for k in 0..=TICKS {
            let f = k as f64 / TICKS as f64;
            let (x, y) = (LEFT + f * (RIGHT - LEFT), BOTTOM - f * (BOTTOM - TOP));
            let _ = writeln!(s, r#"<text x="{x}" y="{}" text-anchor="middle">{}</text>"#, BOTTOM + 18.0, tick_label(x_min + f * (x_max - x_min)));
            let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="end">{}</text>"#, LEFT - 8.0, y + 4.0, tick_label(y_min + f * (y_max - y_min)));
        }
        let _ = writeln!(s, "</g>");
        let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#, (LEFT + RIGHT) / 2.0, HEIGHT - 12.0, escape(&self.x_label));
        let _ = writeln!(s, r#"<text x="16" y="{}" text-anchor="middle" transform="rotate(-90 16 {})">{}</text>"#, (TOP + BOTTOM) / 2.0, (TOP + BOTTOM) / 2.0, escape(&self.y_label));
        let _ = writeln!(
            s,
            r#"<g class="plot-area" data-x-min="{x_min:e}" data-x-max="{x_max:e}" data-y-min="{y_min:e}" data-y-max="{y_max:e}" data-left="{LEFT}" data-right="{RIGHT}" data-top="{TOP}" data-bottom="{BOTTOM}">"#
        );
        for (i, series) in self.series.iter().enumerate() {
            let color = PALETTE[i % PALETTE.len()];
            let mut points = String::new();
            for &(x, y) in series.points.iter().filter(|(x, y)| x.is_finite() && y.is_finite()) {
                let _ = write!(points, "{:.9},{:.9} ", px(x), py(y));
            }
            let _ = writeln!(
                s,
                r#"<polyline class="series" data-name="{}" fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#,
                escape(&series.name),
                points.trim_end()
            );
        }
        let _ = writeln!(s, "</g>");
        let _ = writeln!(s, r#"<g class="legend">"#);
        for (i, series) in self.series.iter().enumerate() {
            let y = TOP + 16.0 * i as f64;
            let color = PALETTE[i % PALETTE.len()];
            let _ = writeln!(s, r#"<line x1="{}" y1="{y}" x2="{}" y2="{y}" stroke="{color}" stroke-width="3"/>"#, RIGHT + 15.0, RIGHT + 35.0);
            let _ = writeln!(s, r#"<text x="{}" y="{}">{}</text>"#, RIGHT + 40.0, y + 4.0, escape(&series.name));
        }
        let _ = writeln!(s, "</g>");
        s.push_str("</svg>\n");
        s
    }
}

/// A chart written to disk.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PlotFile {
    pub path: PathBuf,
    pub chart: String,
    pub series: usize,
    pub points: usize,
}

fn num(v: &Value, key: &str) -> Option<f64> {
    v.get(key).and_then(Value::as_f64)
}

fn run_key(r: &Value) -> String {
    let mut parts = Vec::new();
    if let Some(s) = r.get("stage").and_then(Value::as_str) {
        parts.push(format!("stage {s}"));
    }
    if let Some(m) = r.get("reward_mode").and_then(Value::as_str) {
        parts.push(m.to_string());
    }
    if let Some(x) = num(r, "style_scale") {
        parts.push(format!("x{x}"));
    }
    if let Some(s) = r.get("seed").and_then(Value::as_u64) {
        parts.push(format!("seed {s}"));
    }
    parts.join(" ")
}

fn grouped(records: &[Value], kind: &str, key: impl Fn(&Value) -> String, point: impl Fn(&Value) -> Option<(f64, f64)>) -> Vec<Series> {
    let mut map: BTreeMap<String, Vec<(f64, f64)>> = BTreeMap::new();
    for r in records.iter().filter(|r| r.get("record").and_then(Value::as_str) == Some(kind)) {
        if let Some(p) = point(r) {
            map.entry(key(r)).or_default().push(p);
        }
    }
    map.into_iter().map(|(name, points)| Series { name, points }).collect()
}

/// Terrain level and reward curves from training iterations; velocity and
/// per-foot contact-force timelines from evaluation traces.
pub fn build_charts(records: &[Value]) -> Vec<(String, Chart)> {
    let mut charts = Vec::new();
    let iteration = |r: &Value| r.get("iteration").and_then(Value::as_u64).map(|i| i as f64);

    let mut terrain = Chart::new("Mean terrain level", "iteration", "level");
    terrain.series = grouped(records, "iteration", run_key, |r| Some((iteration(r)?, num(r, "terrain_level")?)));
    charts.push(("terrain_level".to_string(), terrain));

    let mut rewards = Chart::new("Mean step reward", "iteration", "reward");
    rewards.series = grouped(records, "iteration", run_key, |r| Some((iteration(r)?, num(r, "mean_reward")?)));
    charts.push(("rewards".to_string(), rewards));

    let traces: Vec<&Value> = records.iter().filter(|r| r.get("record").and_then(Value::as_str) == Some("trace")).collect();
    let mut policies: Vec<String> = traces.iter().filter_map(|r| r.get("policy").and_then(Value::as_str).map(String::from)).collect();
    policies.dedup();
    policies.sort();
    policies.dedup();
    for policy in policies {
        let mine: Vec<&Value> = traces.iter().copied().filter(|r| r.get("policy").and_then(Value::as_str) == Some(&policy)).collect();
        let at = |r: &Value, key: &str, j: usize| -> Option<(f64, f64)> { Some((num(r, "time")?, r.get(key)?.get(j)?.as_f64()?)) };
        let mut vel = Chart::new(&format!("Commanded vs achieved velocity ({policy})"), "time [s]", "velocity");
        for (j, axis) in ["vx", "vy", "wz"].iter().enumerate() {
            vel.series.push(Series { name: format!("command {axis}"), points: mine.iter().filter_map(|r| at(r, "command", j)).collect() });
            vel.series.push(Series { name: format!("achieved {axis}"), points: mine.iter().filter_map(|r| at(r, "velocity", j)).collect() });
        }
        charts.push((format!("velocity-{policy}"), vel));

        let feet = mine.iter().filter_map(|r| r.get("foot_forces").and_then(Value::as_array).map(Vec::len)).max().unwrap_or(0);
        let mut forces = Chart::new(&format!("Foot contact force ({policy})"), "time [s]", "force [N]");
        for f in 0..feet {
            forces.series.push(Series { name: format!("foot {f}"), points: mine.iter().filter_map(|r| at(r, "foot_forces", f)).collect() });
        }
        charts.push((format!("contact_forces-{policy}"), forces));
    }
    charts
}

pub fn emit_plots(records: &[Value], dir: &Path) -> Result<Vec<PlotFile>> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut out = Vec::new();
    for (name, chart) in build_charts(records) {
        let path = dir.join(format!("{name}.svg"));
        std::fs::write(&path, chart.render()).map_err(|e| Error::io(&path, e))?;
        out.push(PlotFile { path, chart: name, series: chart.series.len(), points: chart.point_count() });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    fn attr(tag: &str, name: &str) -> String {
        let key = format!("{name}=\"");
        let start = tag.find(&key).unwrap() + key.len();
        tag[start..start + tag[start..].find('"').unwrap()].to_string()
    }

    /// Maps polyline pixels back to data through the plot-area attributes.
    fn extract(svg: &str) -> Vec<(String, Vec<(f64, f64)>)> {
        let area = &svg[svg.find("<g class=\"plot-area\"").unwrap()..];
        let area_tag = &area[..area.find('>').unwrap()];
        let f = |n: &str| attr(area_tag, n).parse::<f64>().unwrap();
        let (x0, x1, y0, y1) = (f("data-x-min"), f("data-x-max"), f("data-y-min"), f("data-y-max"));
        let (l, r, t, b) = (f("data-left"), f("data-right"), f("data-top"), f("data-bottom"));
        svg.match_indices("<polyline")
            .map(|(i, _)| {
                let tag = &svg[i..i + svg[i..].find("/>").unwrap()];
                let pts = attr(tag, "points")
                    .split_whitespace()
                    .map(|p| {
                        let (px, py) = p.split_once(',').unwrap();
                        let (px, py): (f64, f64) = (px.parse().unwrap(), py.parse().unwrap());
                        (x0 + (px - l) / (r - l) * (x1 - x0), y0 + (b - py) / (b - t) * (y1 - y0))
                    })
                    .collect();
                (attr(tag, "data-name"), pts)
            })
            .collect()
    }

    #[test]
    fn polylines_echo_the_data() {
        let mut c = Chart::new("t", "x", "y");
        c.series.push(Series { name: "a & b".into(), points: (0..50).map(|i| (i as f64, (i as f64 * 0.3).sin() * 7.0 + 2.0)).collect() });
        c.series.push(Series { name: "c".into(), points: vec![(3.5, -4.25), (10.0, 100.0), (49.0, 0.001)] });
        let got = extract(&c.render());
        assert_eq!(got.len(), 2);
        assert_eq!(got[0].0, "a &amp; b");
        for (s, (_, pts)) in c.series.iter().zip(&got) {
            assert_eq!(s.points.len(), pts.len());
            for ((x, y), (gx, gy)) in s.points.iter().zip(pts) {
                assert!((x - gx).abs() < 1e-6 && (y - gy).abs() < 1e-6, "{x},{y} vs {gx},{gy}");
            }
        }
    }

    #[test]
    fn empty_chart_has_axes() {
        let svg = Chart::new("empty", "x", "y").render();
        assert!(svg.starts_with("<svg") && svg.trim_end().ends_with("</svg>"));
        assert_eq!(svg.matches("class=\"axis").count(), 2);
        assert_eq!(svg.matches("<g").count(), svg.matches("</g>").count());
        assert!(extract(&svg).is_empty());
    }

    #[test]
    fn empty_log_gives_base_charts() {
        let charts = build_charts(&[]);
        let names: Vec<&str> = charts.iter().map(|(n, _)| n.as_str()).collect();
        assert_eq!(names, ["terrain_level", "rewards"]);
        assert!(charts.iter().all(|(_, c)| c.series.is_empty()));
    }

    #[test]
    fn one_contact_series_per_foot() {
        let recs: Vec<Value> = (0..5)
            .map(|k| json!({"record": "trace", "policy": "teacher", "time": k as f64 * 0.02, "command": [0.1, 0.0, 0.0], "velocity": [0.05, 0.0, 0.0], "foot_forces": [1, 2, 3, 4, 5, 6]}))
            .collect();
        let charts = build_charts(&recs);
        let (_, forces) = charts.iter().find(|(n, _)| n == "contact_forces-teacher").unwrap();
        assert_eq!(forces.series.len(), 6);
        assert!(forces.series.iter().all(|s| s.points.len() == 5));
        let (_, vel) = charts.iter().find(|(n, _)| n == "velocity-teacher").unwrap();
        assert_eq!(vel.series.len(), 6);
    }

    #[test]
    fn terrain_series_grouped_by_run() {
        let mut recs = Vec::new();
        for mode in ["BR", "BR+ER"] {
            for it in 0..4 {
                recs.push(json!({"record": "iteration", "stage": "II", "iteration": it, "seed": 1, "reward_mode": mode, "terrain_level": it as f64 * 0.5, "mean_reward": 0.1}));
            }
        }
        let charts = build_charts(&recs);
        let terrain = &charts[0].1;
        assert_eq!(terrain.series.len(), 2);
        assert_eq!(terrain.series[1].name, "stage II BR+ER seed 1");
        assert_eq!(terrain.series[1].points[3], (3.0, 1.5));
    }
}
