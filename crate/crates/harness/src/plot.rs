//! Static SVG plots of a results CSV.
//!
//! Every plotted value is also written as an XML comment
//! (`<!-- data series=... x=... y=... err=... -->`) so the files can be
//! checked without rendering them.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::error::Result;
use crate::results::{read_csv, write_file, ResultRow};

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 420.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 150.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 50.0;
const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"];

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Style {
    /// Markers with error bars.
    Data,
    /// A curve without markers.
    Reference,
}

#[derive(Clone, Debug)]
pub struct Series {
    pub name: String,
    pub style: Style,
    /// `(x, y, stderr)`.
    pub points: Vec<(f64, f64, Option<f64>)>,
}

#[derive(Clone, Debug)]
pub struct Plot {
    pub title: String,
    pub xlabel: String,
    pub ylabel: String,
    pub log_x: bool,
    pub log_y: bool,
    pub series: Vec<Series>,
}

struct Axis {
    log: bool,
    lo: f64,
    hi: f64,
}

impl Axis {
    fn fit(values: impl Iterator<Item = f64>, log: bool) -> Self {
        let vals: Vec<f64> = values.filter(|v| v.is_finite()).collect();
        let log = log && !vals.is_empty() && vals.iter().all(|v| *v > 0.0);
        let t: Vec<f64> = vals.iter().map(|v| if log { v.log10() } else { *v }).collect();
        let (mut lo, mut hi) = t.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(*v), b.max(*v)));
        if !lo.is_finite() {
            (lo, hi) = (0.0, 1.0);
        }
        let pad = if hi > lo { 0.05 * (hi - lo) } else { 0.5 * lo.abs().max(1.0) };
        Axis { log, lo: lo - pad, hi: hi + pad }
    }

    fn unit(&self, v: f64) -> f64 {
        let t = if self.log { v.log10() } else { v };
        (t - self.lo) / (self.hi - self.lo)
    }

    fn tick_values(&self) -> Vec<f64> {
        (0..5)
            .map(|i| {
                let t = self.lo + (self.hi - self.lo) * i as f64 / 4.0;
                if self.log {
                    10f64.powf(t)
                } else {
                    t
                }
            })
            .collect()
    }
}

fn fmt_num(v: f64) -> String {
    if v == 0.0 {
        "0".into()
    } else if v.abs() >= 1e4 || v.abs() < 1e-2 {
        format!("{v:.2e}")
    } else {
        format!("{:.3}", v).trim_end_matches('0').trim_end_matches('.').to_string()
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

impl Plot {
    pub fn render(&self) -> String {
        let xs = self.series.iter().flat_map(|s| s.points.iter().map(|p| p.0));
        let ys = self.series.iter().flat_map(|s| {
            s.points.iter().flat_map(|&(_, y, e)| {
                let e = e.filter(|e| e.is_finite()).unwrap_or(0.0);
                [y, y - e, y + e]
            })
        });
        let ax = Axis::fit(xs, self.log_x);
        let ys: Vec<f64> = ys.collect();
        let ay = if self.log_y && ys.iter().any(|y| *y <= 0.0) {
            let positive: Vec<f64> = ys.iter().copied().filter(|y| *y > 0.0).collect();
            Axis::fit(positive.into_iter(), true)
        } else {
            Axis::fit(ys.into_iter(), self.log_y)
        };
        let pw = WIDTH - LEFT - RIGHT;
        let ph = HEIGHT - TOP - BOTTOM;
        let px = |x: f64| LEFT + ax.unit(x) * pw;
        let py = |y: f64| TOP + (1.0 - ay.unit(y)) * ph;
        let visible = |y: f64| y.is_finite() && (!ay.log || y > 0.0);

        let mut s = String::new();
        let _ = writeln!(
            s,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
        );
        let _ = writeln!(s, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
        let _ = writeln!(s, r#"<text x="{}" y="22" text-anchor="middle" font-size="15">{}</text>"#, WIDTH / 2.0, escape(&self.title));
        for series in &self.series {
            for &(x, y, e) in &series.points {
                let e = e.map_or("none".into(), |e| e.to_string());
                let _ = writeln!(s, "<!-- data series=\"{}\" x={x} y={y} err={e} -->", escape(&series.name));
            }
        }
        let _ = writeln!(
            s,
            r#"<rect x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"#
        );
        for v in ax.tick_values() {
            let x = px(v);
            let _ = writeln!(s, r#"<line x1="{x:.3}" y1="{}" x2="{x:.3}" y2="{}" stroke="black"/>"#, TOP + ph, TOP + ph + 5.0);
            let _ = writeln!(s, r#"<text x="{x:.3}" y="{}" text-anchor="middle">{}</text>"#, TOP + ph + 18.0, fmt_num(v));
        }
        for v in ay.tick_values() {
            let y = py(v);
            let _ = writeln!(s, r#"<line x1="{}" y1="{y:.3}" x2="{LEFT}" y2="{y:.3}" stroke="black"/>"#, LEFT - 5.0);
            let _ = writeln!(s, r#"<text x="{}" y="{:.3}" text-anchor="end">{}</text>"#, LEFT - 8.0, y + 4.0, fmt_num(v));
        }
        let scale = |log: bool| if log { " (log scale)" } else { "" };
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" text-anchor="middle">{}{}</text>"#,
            LEFT + pw / 2.0,
            HEIGHT - 10.0,
            escape(&self.xlabel),
            scale(ax.log)
        );
        let _ = writeln!(
            s,
            r#"<text x="16" y="{}" text-anchor="middle" transform="rotate(-90 16 {})">{}{}</text>"#,
            TOP + ph / 2.0,
            TOP + ph / 2.0,
            escape(&self.ylabel),
            scale(ay.log)
        );

        for (i, series) in self.series.iter().enumerate() {
            let color = COLORS[i % COLORS.len()];
            let name = escape(&series.name);
            let pts: Vec<String> = series
                .points
                .iter()
                .filter(|p| visible(p.1))
                .map(|&(x, y, _)| format!("{:.3},{:.3}", px(x), py(y)))
                .collect();
            match series.style {
                Style::Reference => {
                    let _ = writeln!(
                        s,
                        r#"<polyline class="reference" data-series="{name}" points="{}" fill="none" stroke="{color}" stroke-dasharray="6 4"/>"#,
                        pts.join(" ")
                    );
                }
                Style::Data => {
                    if pts.len() > 1 {
                        let _ = writeln!(
                            s,
                            r#"<polyline class="data-line" data-series="{name}" points="{}" fill="none" stroke="{color}"/>"#,
                            pts.join(" ")
                        );
                    }
                    for &(x, y, e) in series.points.iter().filter(|p| visible(p.1)) {
                        if let Some(e) = e.filter(|e| e.is_finite() && *e > 0.0) {
                            let lo = if ay.log && y - e <= 0.0 { y / 10.0 } else { y - e };
                            let _ = writeln!(
                                s,
                                r#"<line class="error-bar" x1="{0:.3}" y1="{1:.3}" x2="{0:.3}" y2="{2:.3}" stroke="{color}"/>"#,
                                px(x),
                                py(lo),
                                py(y + e)
                            );
                        }
                        let _ = writeln!(
                            s,
                            r#"<circle class="data" data-series="{name}" cx="{:.3}" cy="{:.3}" r="3.5" fill="{color}"/>"#,
                            px(x),
                            py(y)
                        );
                    }
                }
            }
            let ly = TOP + 14.0 + 18.0 * i as f64;
            let lx = WIDTH - RIGHT + 12.0;
            let dash = if series.style == Style::Reference { r#" stroke-dasharray="6 4""# } else { "" };
            let _ = writeln!(
                s,
                r#"<line x1="{lx}" y1="{ly}" x2="{}" y2="{ly}" stroke="{color}"{dash}/><text x="{}" y="{}">{name}</text>"#,
                lx + 20.0,
                lx + 25.0,
                ly + 4.0
            );
        }
        s.push_str("</svg>\n");
        s
    }
}

/// Reference curves `c n` and `c n / log n`, both passing through `(n0, v0)`.
pub fn reference_curves(n0: f64, v0: f64, xs: &[f64]) -> Vec<Series> {
    let mut grid: Vec<f64> = Vec::new();
    let (lo, hi) = xs.iter().fold((n0, n0), |(a, b), x| (a.min(*x), b.max(*x)));
    for i in 0..=32 {
        grid.push(lo * (hi / lo).powf(i as f64 / 32.0));
    }
    grid.retain(|x| *x != n0);
    grid.insert(0, n0);
    let linear = Series {
        name: "c n".into(),
        style: Style::Reference,
        points: grid.iter().map(|&x| (x, if x == n0 { v0 } else { v0 / n0 * x }, None)).collect(),
    };
    let mut out = vec![linear];
    if n0 > 1.0 {
        let c = v0 * n0.ln() / n0;
        out.push(Series {
            name: "c n / log n".into(),
            style: Style::Reference,
            points: grid
                .iter()
                .filter(|x| **x > 1.0)
                .map(|&x| (x, if x == n0 { v0 } else { c * x / x.ln() }, None))
                .collect(),
        });
    }
    out
}

fn data_series(name: &str, rows: &[&ResultRow]) -> Series {
    let mut pts: Vec<(f64, f64, Option<f64>)> = rows.iter().map(|r| (r.n, r.value, r.stderr)).collect();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    Series { name: name.into(), style: Style::Data, points: pts }
}

fn by_statistic(rows: &[ResultRow]) -> BTreeMap<&str, Vec<&ResultRow>> {
    let mut m: BTreeMap<&str, Vec<&ResultRow>> = BTreeMap::new();
    for r in rows {
        m.entry(r.statistic.as_str()).or_default().push(r);
    }
    m
}

/// All plots for a set of rows as `(file name, svg)`.
pub fn plots_for(rows: &[ResultRow]) -> Vec<(String, String)> {
    let stats = by_statistic(rows);
    let mut out = Vec::new();
    for (stat, rs) in &stats {
        if let Some(target) = stat.strip_prefix("var_").filter(|t| !t.starts_with("over_n_")) {
            let data = data_series(&format!("Var {target}"), rs);
            let (n0, v0, _) = data.points[0];
            let xs: Vec<f64> = data.points.iter().map(|p| p.0).collect();
            let mut series = vec![data];
            if v0 > 0.0 {
                series.extend(reference_curves(n0, v0, &xs));
            }
            let plot = Plot {
                title: format!("Variance of {target}"),
                xlabel: "n".into(),
                ylabel: "variance".into(),
                log_x: true,
                log_y: true,
                series,
            };
            out.push((format!("variance_{target}.svg"), plot.render()));
        }
    }
    let simple = [
        ("influence_max", "Largest box influence", "max_B E|F~ - F|", true),
        ("influence_sum", "Total box influence", "sum_B E|F~ - F|", true),
        ("gradient_sum", "Gradient sum", "sum |grad|^2", true),
        ("bit_sum", "Bit derivative sum", "sum (T(1) - T(0))^2", true),
        ("equality_rate", "Agreement of T' and T''", "P[T' = T'']", false),
        ("animal_greedy_per_m", "Greedy lattice animal", "M_m / m", false),
    ];
    for (stat, title, ylabel, log) in simple {
        if let Some(rs) = stats.get(stat) {
            let xlabel = if stat.starts_with("animal") { "m" } else { "n" };
            let plot = Plot {
                title: title.into(),
                xlabel: xlabel.into(),
                ylabel: ylabel.into(),
                log_x: true,
                log_y: log,
                series: vec![data_series(stat, rs)],
            };
            out.push((format!("{stat}.svg"), plot.render()));
        }
    }
    if let Some(rs) = stats.get("tail_survival") {
        let mut per_n: BTreeMap<u64, Vec<(f64, f64, Option<f64>)>> = BTreeMap::new();
        for r in rs {
            if let Some(x) = r.tag_value("x").and_then(|x| x.parse::<f64>().ok()) {
                per_n.entry(r.n.to_bits()).or_default().push((x, r.value, None));
            }
        }
        let series = per_n
            .into_iter()
            .map(|(n, mut pts)| {
                pts.sort_by(|a, b| a.0.total_cmp(&b.0));
                Series { name: format!("n = {}", f64::from_bits(n)), style: Style::Data, points: pts }
            })
            .collect();
        let plot = Plot {
            title: "Survival of T''".into(),
            xlabel: "x".into(),
            ylabel: "P[T'' > x]".into(),
            log_x: false,
            log_y: true,
            series,
        };
        out.push(("tail_survival.svg".into(), plot.render()));
    }
    out
}

/// Writes the plots of `csv` into `out`; an empty CSV yields no files.
pub fn emit_plots(csv: &Path, out: &Path) -> Result<Vec<PathBuf>> {
    let rows = read_csv(csv)?;
    std::fs::create_dir_all(out).map_err(|e| crate::error::HarnessError::io(out, e))?;
    let mut written = Vec::new();
    for (name, svg) in plots_for(&rows) {
        let path = out.join(name);
        write_file(&path, svg.as_bytes())?;
        written.push(path);
    }
    Ok(written)
}
