//! Self-contained SVG convergence plots: chosen cost metric on x, objective
//! value (or gap) on a log-scaled y, one polyline per trace with a legend.
//! No rasterizer or plotting library involved.

use std::path::Path;

use crate::driver::Trace;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum XAxis {
    Iter,
    GradCalls,
    BitsSent,
}

impl XAxis {
    pub fn parse(name: &str) -> Result<Self> {
        match name {
            "iter" => Ok(XAxis::Iter),
            "grad_calls" => Ok(XAxis::GradCalls),
            "bits_sent" => Ok(XAxis::BitsSent),
            other => Err(Error::Config(format!(
                "unknown x axis `{other}` (expected iter|grad_calls|bits_sent)"
            ))),
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            XAxis::Iter => "iteration",
            XAxis::GradCalls => "stochastic gradient calls",
            XAxis::BitsSent => "bits sent (uplink)",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum YAxis {
    FValue,
    FwGap,
}

impl YAxis {
    pub fn parse(name: &str) -> Result<Self> {
        match name {
            "f_value" => Ok(YAxis::FValue),
            "fw_gap" => Ok(YAxis::FwGap),
            other => Err(Error::Config(format!(
                "unknown y axis `{other}` (expected f_value|fw_gap)"
            ))),
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            YAxis::FValue => "objective value",
            YAxis::FwGap => "Frank-Wolfe gap",
        }
    }
}

const WIDTH: f64 = 860.0;
const HEIGHT: f64 = 560.0;
const MARGIN_L: f64 = 80.0;
const MARGIN_R: f64 = 180.0;
const MARGIN_T: f64 = 40.0;
const MARGIN_B: f64 = 60.0;
const COLORS: &[&str] = &[
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f",
];

fn series(trace: &Trace, x_axis: XAxis, y_axis: YAxis, name: &str) -> Result<Vec<(f64, f64)>> {
    let pts: Vec<(f64, f64)> = trace
        .records
        .iter()
        .map(|r| {
            let x = match x_axis {
                XAxis::Iter => r.k as f64,
                XAxis::GradCalls => r.grad_calls as f64,
                XAxis::BitsSent => r.bits_sent as f64,
            };
            let y = match y_axis {
                YAxis::FValue => r.f_value,
                YAxis::FwGap => r.fw_gap,
            };
            (x, y)
        })
        .collect();
    if pts.len() < 2 {
        return Err(Error::Plot(format!(
            "trace `{name}` has fewer than 2 records; nothing to plot"
        )));
    }
    if x_axis == XAxis::BitsSent && pts.iter().all(|(x, _)| *x == 0.0) {
        return Err(Error::Plot(format!(
            "metric absent for method: trace `{name}` transmitted no bits"
        )));
    }
    Ok(pts)
}

/// Render traces to an SVG string.
pub fn render_svg(
    traces: &[(String, Trace)],
    x_axis: XAxis,
    y_axis: YAxis,
) -> Result<String> {
    if traces.is_empty() {
        return Err(Error::Plot("no traces given".into()));
    }
    let mut all: Vec<(String, Vec<(f64, f64)>)> = Vec::new();
    for (name, t) in traces {
        all.push((name.clone(), series(t, x_axis, y_axis, name)?));
    }

    // log-scale y; clamp nonpositive values to the smallest positive seen
    let min_pos_y = all
        .iter()
        .flat_map(|(_, pts)| pts.iter().map(|p| p.1))
        .filter(|v| *v > 0.0)
        .fold(f64::INFINITY, f64::min);
    if !min_pos_y.is_finite() {
        return Err(Error::Plot("no positive y values to draw on a log scale".into()));
    }
    let floor = min_pos_y * 0.5;
    let (mut x_min, mut x_max) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut y_min, mut y_max) = (f64::INFINITY, f64::NEG_INFINITY);
    for (_, pts) in &all {
        for &(x, y) in pts {
            let ly = y.max(floor).log10();
            x_min = x_min.min(x);
            x_max = x_max.max(x);
            y_min = y_min.min(ly);
            y_max = y_max.max(ly);
        }
    }
    if x_max == x_min {
        x_max = x_min + 1.0;
    }
    if y_max == y_min {
        y_max = y_min + 1.0;
    }

    let plot_w = WIDTH - MARGIN_L - MARGIN_R;
    let plot_h = HEIGHT - MARGIN_T - MARGIN_B;
    let sx = |x: f64| MARGIN_L + (x - x_min) / (x_max - x_min) * plot_w;
    let sy = |y: f64| {
        let ly = y.max(floor).log10();
        MARGIN_T + (y_max - ly) / (y_max - y_min) * plot_h
    };

    let mut svg = String::new();
    svg.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" viewBox=\"0 0 {WIDTH} {HEIGHT}\">\n"
    ));
    svg.push_str("<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n");
    // frame
    svg.push_str(&format!(
        "<rect x=\"{MARGIN_L}\" y=\"{MARGIN_T}\" width=\"{plot_w}\" height=\"{plot_h}\" fill=\"none\" stroke=\"black\"/>\n"
    ));

    // y ticks at integer powers of ten
    let lo = y_min.floor() as i64;
    let hi = y_max.ceil() as i64;
    for e in lo..=hi {
        let ly = e as f64;
        if ly < y_min || ly > y_max {
            continue;
        }
        let py = MARGIN_T + (y_max - ly) / (y_max - y_min) * plot_h;
        svg.push_str(&format!(
            "<line x1=\"{MARGIN_L}\" y1=\"{py}\" x2=\"{}\" y2=\"{py}\" stroke=\"#dddddd\"/>\n",
            MARGIN_L + plot_w
        ));
        svg.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" font-size=\"12\" text-anchor=\"end\">1e{e}</text>\n",
            MARGIN_L - 6.0,
            py + 4.0
        ));
    }
    // x ticks
    for t in 0..=4 {
        let x = x_min + (x_max - x_min) * t as f64 / 4.0;
        let px = sx(x);
        svg.push_str(&format!(
            "<line x1=\"{px}\" y1=\"{}\" x2=\"{px}\" y2=\"{}\" stroke=\"black\"/>\n",
            MARGIN_T + plot_h,
            MARGIN_T + plot_h + 5.0
        ));
        svg.push_str(&format!(
            "<text x=\"{px}\" y=\"{}\" font-size=\"12\" text-anchor=\"middle\">{:.3e}</text>\n",
            MARGIN_T + plot_h + 20.0,
            x
        ));
    }
    // axis labels
    svg.push_str(&format!(
        "<text x=\"{}\" y=\"{}\" font-size=\"14\" text-anchor=\"middle\">{}</text>\n",
        MARGIN_L + plot_w / 2.0,
        HEIGHT - 15.0,
        x_axis.label()
    ));
    svg.push_str(&format!(
        "<text x=\"18\" y=\"{}\" font-size=\"14\" text-anchor=\"middle\" transform=\"rotate(-90 18 {})\">{} (log scale)</text>\n",
        MARGIN_T + plot_h / 2.0,
        MARGIN_T + plot_h / 2.0,
        y_axis.label()
    ));

    // polylines + legend
    for (i, (name, pts)) in all.iter().enumerate() {
        let color = COLORS[i % COLORS.len()];
        let path: Vec<String> = pts
            .iter()
            .map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y)))
            .collect();
        svg.push_str(&format!(
            "<polyline fill=\"none\" stroke=\"{color}\" stroke-width=\"1.8\" points=\"{}\"/>\n",
            path.join(" ")
        ));
        let ly = MARGIN_T + 18.0 * (i as f64 + 1.0);
        let lx = MARGIN_L + plot_w + 12.0;
        svg.push_str(&format!(
            "<line x1=\"{lx}\" y1=\"{ly}\" x2=\"{}\" y2=\"{ly}\" stroke=\"{color}\" stroke-width=\"2.5\"/>\n",
            lx + 22.0
        ));
        svg.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" font-size=\"12\">{}</text>\n",
            lx + 28.0,
            ly + 4.0,
            name
        ));
    }
    svg.push_str("</svg>\n");
    Ok(svg)
}

pub fn emit_plot(
    traces: &[(String, Trace)],
    x_axis: XAxis,
    y_axis: YAxis,
    path: &Path,
) -> Result<()> {
    let svg = render_svg(traces, x_axis, y_axis)?;
    std::fs::write(path, svg)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::driver::IterationRecord;

    fn trace(bits: u64) -> Trace {
        Trace {
            records: (0..4)
                .map(|k| IterationRecord {
                    k,
                    f_value: 1.0 / (k + 1) as f64,
                    fw_gap: 0.5 / (k + 1) as f64,
                    grad_calls: 10 * k as u64,
                    coord_calls: 0,
                    bits_sent: bits * k as u64,
                    elapsed_ms: k as f64,
                })
                .collect(),
            f_star: None,
        }
    }

    #[test]
    fn two_traces_two_polylines_with_legend() {
        let traces = vec![("alpha".to_string(), trace(0)), ("beta".to_string(), trace(0))];
        let svg = render_svg(&traces, XAxis::Iter, YAxis::FValue).unwrap();
        assert_eq!(svg.matches("<polyline").count(), 2);
        assert!(svg.contains(">alpha<"));
        assert!(svg.contains(">beta<"));
        assert!(svg.contains("log scale"));
    }

    #[test]
    fn single_point_trace_rejected() {
        let mut t = trace(0);
        t.records.truncate(1);
        let err = render_svg(&[("x".into(), t)], XAxis::Iter, YAxis::FValue);
        assert!(err.is_err());
        assert!(format!("{}", err.unwrap_err()).contains("fewer than 2"));
    }

    #[test]
    fn zero_bits_axis_rejected() {
        let err = render_svg(&[("e".into(), trace(0))], XAxis::BitsSent, YAxis::FValue);
        assert!(err.is_err());
        assert!(format!("{}", err.unwrap_err()).contains("metric absent for method"));
        assert!(render_svg(&[("e".into(), trace(96))], XAxis::BitsSent, YAxis::FValue).is_ok());
    }

    #[test]
    fn empty_trace_set_rejected() {
        assert!(render_svg(&[], XAxis::Iter, YAxis::FValue).is_err());
    }
}
