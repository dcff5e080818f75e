//! Static SVG charts. Output is a pure function of the input report: no
//! timestamps, fixed number formatting, fixed layout.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use rssiloc_core::{Algorithm, AnchorConfig};

use crate::evalsuite::{median, CellRecord, Metric, ReportDocument, ReportKind, TestSet, TimeRecord};
use crate::report::TrainRecord;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 400.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 20.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 70.0;

#[derive(Debug, Clone, PartialEq)]
pub struct Bar {
    pub label: String,
    pub value: f64,
}

/// Named SVG files plus the numbers behind them as `chart,label,value` CSV.
#[derive(Debug, Clone, PartialEq)]
pub struct PlotSet {
    pub charts: Vec<(String, String)>,
    pub data_csv: String,
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn header(title: &str) -> String {
    let mut s = String::new();
    writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    )
    .unwrap();
    writeln!(s, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#).unwrap();
    writeln!(s, r#"<text x="{}" y="24" text-anchor="middle" font-size="15">{}</text>"#, WIDTH / 2.0, escape(title))
        .unwrap();
    s
}

/// A "nice" axis top: 1, 2 or 5 times a power of ten at or above `max`.
fn axis_top(max: f64) -> f64 {
    if max <= 0.0 || !max.is_finite() {
        return 1.0;
    }
    let mag = 10f64.powf(max.log10().floor());
    [1.0, 2.0, 5.0, 10.0].into_iter().map(|m| m * mag).find(|&t| t >= max).unwrap_or(10.0 * mag)
}

fn y_axis(s: &mut String, top: f64, y_label: &str, ticks: usize) {
    let plot_h = HEIGHT - TOP - BOTTOM;
    for i in 0..=ticks {
        let v = top * i as f64 / ticks as f64;
        let y = HEIGHT - BOTTOM - plot_h * i as f64 / ticks as f64;
        writeln!(s, r##"<line x1="{LEFT}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="#ddd"/>"##, WIDTH - RIGHT)
            .unwrap();
        writeln!(s, r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#, LEFT - 6.0, y + 4.0, trim(v)).unwrap();
    }
    writeln!(
        s,
        r#"<text x="16" y="{:.2}" text-anchor="middle" transform="rotate(-90 16 {:.2})">{}</text>"#,
        TOP + plot_h / 2.0,
        TOP + plot_h / 2.0,
        escape(y_label)
    )
    .unwrap();
    writeln!(
        s,
        r#"<line x1="{LEFT}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="black"/>"#,
        HEIGHT - BOTTOM,
        WIDTH - RIGHT,
        HEIGHT - BOTTOM
    )
    .unwrap();
}

fn trim(v: f64) -> String {
    let s = format!("{v:.4}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s.is_empty() || s == "-" {
        "0".into()
    } else {
        s.into()
    }
}

pub fn bar_chart(title: &str, y_label: &str, bars: &[Bar]) -> String {
    let mut s = header(title);
    let top = axis_top(bars.iter().map(|b| b.value).fold(0.0, f64::max));
    y_axis(&mut s, top, y_label, 5);
    let plot_w = WIDTH - LEFT - RIGHT;
    let plot_h = HEIGHT - TOP - BOTTOM;
    let slot = plot_w / bars.len().max(1) as f64;
    for (i, b) in bars.iter().enumerate() {
        let h = (b.value.max(0.0) / top * plot_h).min(plot_h);
        let x = LEFT + slot * i as f64 + slot * 0.15;
        writeln!(
            s,
            r##"<rect class="bar" x="{x:.2}" y="{:.2}" width="{:.2}" height="{h:.2}" fill="#4878a8"><title>{}: {}</title></rect>"##,
            HEIGHT - BOTTOM - h,
            slot * 0.7,
            escape(&b.label),
            trim(b.value)
        )
        .unwrap();
        let cx = LEFT + slot * (i as f64 + 0.5);
        writeln!(
            s,
            r#"<text x="{cx:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
            HEIGHT - BOTTOM - h - 4.0,
            trim(b.value)
        )
        .unwrap();
        writeln!(
            s,
            r#"<text x="{cx:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
            HEIGHT - BOTTOM + 18.0,
            escape(&b.label)
        )
        .unwrap();
    }
    s.push_str("</svg>\n");
    s
}

/// Training-loss curves on a log scale, one polyline per series.
pub fn loss_chart(title: &str, series: &[(&str, &[f64])]) -> String {
    let mut s = header(title);
    let values = || series.iter().flat_map(|(_, v)| v.iter().copied()).filter(|v| *v > 0.0 && v.is_finite());
    let lo = values().fold(f64::INFINITY, f64::min);
    let hi = values().fold(0.0, f64::max);
    let (lo, hi) =
        if lo.is_finite() { (lo.log10().floor(), hi.log10().ceil().max(lo.log10().floor() + 1.0)) } else { (0.0, 1.0) };
    let epochs = series.iter().map(|(_, v)| v.len()).max().unwrap_or(0).max(1);
    let plot_w = WIDTH - LEFT - RIGHT;
    let plot_h = HEIGHT - TOP - BOTTOM;
    let decades = (hi - lo) as usize;
    for d in 0..=decades {
        let y = HEIGHT - BOTTOM - plot_h * d as f64 / decades as f64;
        writeln!(s, r##"<line x1="{LEFT}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="#ddd"/>"##, WIDTH - RIGHT)
            .unwrap();
        writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="end">1e{}</text>"#,
            LEFT - 6.0,
            y + 4.0,
            lo as i64 + d as i64
        )
        .unwrap();
    }
    writeln!(
        s,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">epoch (1 to {epochs})</text>"#,
        LEFT + plot_w / 2.0,
        HEIGHT - 30.0
    )
    .unwrap();
    for (k, (name, v)) in series.iter().enumerate() {
        let colour = ["#4878a8", "#d1743c"][k % 2];
        let pts: Vec<String> = v
            .iter()
            .enumerate()
            .filter(|(_, y)| **y > 0.0 && y.is_finite())
            .map(|(i, y)| {
                let x = LEFT + plot_w * (i + 1) as f64 / epochs as f64;
                let yy = HEIGHT - BOTTOM - plot_h * (y.log10() - lo) / (hi - lo);
                format!("{x:.2},{yy:.2}")
            })
            .collect();
        writeln!(s, r#"<polyline fill="none" stroke="{colour}" points="{}"/>"#, pts.join(" ")).unwrap();
        writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" fill="{colour}">{}</text>"#,
            WIDTH - RIGHT - 120.0,
            TOP + 16.0 * (k + 1) as f64,
            escape(name)
        )
        .unwrap();
    }
    s.push_str("</svg>\n");
    s
}

fn push_data(csv: &mut String, chart: &str, bars: &[Bar]) {
    for b in bars {
        writeln!(csv, "{chart},{},{:e}", b.label, b.value).unwrap();
    }
}

/// Cell groups in canonical order with a label for each.
fn groups(doc: &ReportDocument) -> Vec<(String, Vec<&CellRecord>)> {
    let rank = |c: &CellRecord| {
        (
            AnchorConfig::from_name(&c.config).and_then(|x| AnchorConfig::ALL.iter().position(|&a| a == x)),
            Algorithm::from_name(&c.algorithm).and_then(|x| Algorithm::ALL.iter().position(|&a| a == x)),
            c.config.clone(),
            c.algorithm.clone(),
        )
    };
    let mut map: BTreeMap<_, Vec<&CellRecord>> = BTreeMap::new();
    for c in &doc.cells {
        map.entry(rank(c)).or_default().push(c);
    }
    let configs: std::collections::BTreeSet<&str> = doc.cells.iter().map(|c| c.config.as_str()).collect();
    map.into_iter()
        .map(|((_, _, config, algorithm), cells)| {
            let label = match doc.kind {
                ReportKind::Comparison if configs.len() == 1 => algorithm,
                _ => format!("{config}/{algorithm}"),
            };
            (label, cells)
        })
        .collect()
}

/// One chart per metric (median over seeds), plus training time when a
/// sidecar is supplied.
pub fn plot_report(doc: &ReportDocument, times: Option<&[TimeRecord]>, set: TestSet) -> PlotSet {
    let groups = groups(doc);
    let set_name = match set {
        TestSet::Known => "known positions",
        TestSet::Unknown => "unknown positions",
    };
    let mut charts = Vec::new();
    let mut data_csv = String::from("chart,label,value\n");
    for (file, metric, title, unit) in [
        ("average_error", Metric::AverageError, "Average localization error", "meters"),
        ("max_error", Metric::MaxError, "Maximum localization error", "meters"),
        ("pct_below", Metric::PctBelow, "Share of errors below the threshold", "percent"),
    ] {
        let bars: Vec<Bar> = groups
            .iter()
            .map(|(label, cells)| Bar {
                label: label.clone(),
                value: median(&mut cells.iter().map(|c| c.metric(set, metric)).collect::<Vec<_>>()).unwrap_or(0.0),
            })
            .collect();
        let title = if metric == Metric::PctBelow {
            format!("{title} ({} m), {set_name}", trim(doc.threshold_m))
        } else {
            format!("{title}, {set_name}")
        };
        push_data(&mut data_csv, file, &bars);
        charts.push((format!("{file}.svg"), bar_chart(&title, unit, &bars)));
    }
    if let Some(times) = times {
        let bars: Vec<Bar> = groups
            .iter()
            .map(|(label, cells)| {
                let mut t: Vec<f64> = cells
                    .iter()
                    .filter_map(|c| {
                        times
                            .iter()
                            .find(|t| t.config == c.config && t.algorithm == c.algorithm && t.seed == c.seed)
                            .map(|t| t.wall_time_s)
                    })
                    .collect();
                Bar { label: label.clone(), value: median(&mut t).unwrap_or(0.0) }
            })
            .collect();
        push_data(&mut data_csv, "wall_time", &bars);
        charts.push(("wall_time.svg".into(), bar_chart("Training time", "seconds", &bars)));
    }
    PlotSet { charts, data_csv }
}

pub fn plot_training(record: &TrainRecord) -> PlotSet {
    let r = &record.report;
    let train: Vec<f64> = r.loss_trace.iter().map(|e| e.train_mse).collect();
    let val: Vec<f64> = r.loss_trace.iter().filter_map(|e| e.validation_mse).collect();
    let mut series: Vec<(&str, &[f64])> = vec![("train MSE", &train)];
    if !val.is_empty() {
        series.push(("validation MSE", &val));
    }
    let mut data_csv = String::from("chart,label,value\n");
    for (i, e) in r.loss_trace.iter().enumerate() {
        writeln!(data_csv, "train_mse,{},{:e}", i + 1, e.train_mse).unwrap();
        if let Some(v) = e.validation_mse {
            writeln!(data_csv, "validation_mse,{},{v:e}", i + 1).unwrap();
        }
    }
    let title = format!(
        "{} training loss ({} epochs, {})",
        r.algorithm.name().to_uppercase(),
        r.epochs_run,
        r.stop_reason.name()
    );
    PlotSet { charts: vec![("loss.svg".into(), loss_chart(&title, &series))], data_csv }
}
