//! Trace CSV and log-scale SVG plots.

use std::fmt::Write as _;
use std::path::Path;

use anyhow::Context;
use trajaccel::TraceRecord;

pub const CSV_HEADER: &str = "k,v_norm,cos_theta,objective,support_size,rank,extrapolated,cos_vartheta";

fn float(x: Option<f64>) -> String {
    x.map(|v| format!("{v:.16e}")).unwrap_or_default()
}

fn count(x: Option<usize>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

pub fn trace_csv(trace: &[TraceRecord]) -> String {
    let mut out = String::with_capacity(64 * (trace.len() + 1));
    out.push_str(CSV_HEADER);
    out.push('\n');
    for r in trace {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            r.k,
            float(Some(r.v_norm)),
            float(r.cos_theta),
            float(r.objective),
            count(r.support_size),
            count(r.rank),
            u8::from(r.extrapolated),
            float(r.cos_vartheta)
        )
        .unwrap();
    }
    out
}

pub fn write_csv(path: &Path, trace: &[TraceRecord]) -> anyhow::Result<()> {
    std::fs::write(path, trace_csv(trace)).with_context(|| format!("writing {}", path.display()))
}

/// Polyline of `log10 v_norm` against `k` for each named series.
pub fn trace_svg(series: &[(&str, &[TraceRecord])]) -> String {
    let (w, h, pad) = (640.0, 400.0, 40.0);
    let pts: Vec<Vec<(f64, f64)>> = series
        .iter()
        .map(|(_, t)| {
            t.iter()
                .filter(|r| r.v_norm > 0.0 && r.v_norm.is_finite())
                .map(|r| (r.k as f64, r.v_norm.log10()))
                .collect()
        })
        .collect();
    let all = pts.iter().flatten();
    let kmax = all.clone().map(|p| p.0).fold(1.0f64, f64::max);
    let ymin = all.clone().map(|p| p.1).fold(f64::INFINITY, f64::min);
    let ymax = all.map(|p| p.1).fold(f64::NEG_INFINITY, f64::max);
    let (ymin, ymax) = if ymin.is_finite() && ymax > ymin {
        (ymin.floor(), ymax.ceil())
    } else {
        (-1.0, 1.0)
    };
    let colours = ["black", "red", "blue", "green", "orange", "purple", "gray"];
    let mut out = String::new();
    writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#
    )
    .unwrap();
    writeln!(
        out,
        r##"<rect x="{pad}" y="{pad}" width="{}" height="{}" fill="none" stroke="#888"/>"##,
        w - 2.0 * pad,
        h - 2.0 * pad
    )
    .unwrap();
    writeln!(out, r#"<text x="4" y="{}" font-size="10">1e{ymax}</text>"#, pad + 4.0).unwrap();
    writeln!(out, r#"<text x="4" y="{}" font-size="10">1e{ymin}</text>"#, h - pad).unwrap();
    writeln!(out, r#"<text x="{}" y="{}" font-size="10">k={kmax}</text>"#, w - pad - 40.0, h - pad + 14.0).unwrap();
    for (i, ((name, _), p)) in series.iter().zip(&pts).enumerate() {
        let colour = colours[i % colours.len()];
        let coords: Vec<String> = p
            .iter()
            .map(|(k, y)| {
                let x = pad + (w - 2.0 * pad) * k / kmax;
                let yy = pad + (h - 2.0 * pad) * (ymax - y) / (ymax - ymin);
                format!("{x:.2},{yy:.2}")
            })
            .collect();
        writeln!(
            out,
            r#"<polyline fill="none" stroke="{colour}" stroke-width="1" points="{}"/>"#,
            coords.join(" ")
        )
        .unwrap();
        writeln!(
            out,
            r#"<text x="{}" y="{}" font-size="10" fill="{colour}">{name}</text>"#,
            pad + 6.0,
            pad + 12.0 * (i as f64 + 1.0)
        )
        .unwrap();
    }
    out.push_str("</svg>\n");
    out
}

pub fn write_svg(path: &Path, series: &[(&str, &[TraceRecord])]) -> anyhow::Result<()> {
    std::fs::write(path, trace_svg(series)).with_context(|| format!("writing {}", path.display()))
}
