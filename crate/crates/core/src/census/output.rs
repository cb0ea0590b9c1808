use std::fmt::Write as _;
use std::io::Write;

use super::{CensusReport, LineStatus, ScatterRecord};
use crate::geodesic_flow::GeodesicTrace;
use crate::{Error, Result, R0, R1};

pub fn write_census_json<W: Write>(report: &CensusReport, out: W) -> Result<()> {
    serde_json::to_writer_pretty(out, report).map_err(|e| Error::Io(e.into()))
}

fn opt(x: Option<f64>) -> String {
    x.map(|v| format!("{v:e}")).unwrap_or_default()
}

/// One row per azimuth.
pub fn write_census_csv<W: Write>(report: &CensusReport, mut out: W) -> Result<()> {
    writeln!(out, "theta,theta_plus,deviation,status,escaped,traced_length,s1,s2,x,y")?;
    for r in &report.records {
        let status = match r.status {
            LineStatus::BothEndsRadial => "both_ends_radial",
            LineStatus::SelfIntersecting => "self_intersecting",
            LineStatus::Undetermined => "undetermined",
        };
        let (s1, s2, x, y) = match r.intersection {
            Some(ev) => (Some(ev.s1), Some(ev.s2), Some(ev.point[0]), Some(ev.point[1])),
            None => (None, None, None, None),
        };
        writeln!(
            out,
            "{:e},{},{},{},{},{:e},{},{},{},{}",
            r.theta,
            opt(r.theta_plus),
            opt(r.deviation),
            status,
            r.escaped,
            r.traced_length,
            opt(s1),
            opt(s2),
            opt(x),
            opt(y)
        )?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_scatter_csv<W: Write>(records: &[ScatterRecord], mut out: W) -> Result<()> {
    writeln!(
        out,
        "theta,arrival_azimuth,azimuth_error,arrival_angle,angle_error,length,leaf_length"
    )?;
    for r in records {
        writeln!(
            out,
            "{:e},{:e},{:e},{:e},{:e},{:e},{:e}",
            r.theta, r.arrival_azimuth, r.azimuth_error, r.arrival_angle, r.angle_error, r.length, r.leaf_length
        )?;
    }
    out.flush()?;
    Ok(())
}

/// Planar picture `(r cos θ, r sin θ)` of the given traces, clipped to
/// `r ≤ extent`, with the circles `R₀` and `R₁`.
pub fn write_svg<W: Write>(traces: &[(&str, &GeodesicTrace)], extent: f64, mut out: W) -> Result<()> {
    let size = 800.0;
    let k = size / (2.0 * extent);
    let map = |p: [f64; 2]| (size / 2.0 + k * p[0], size / 2.0 - k * p[1]);
    let palette = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"];
    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}" viewBox="0 0 {size} {size}">"#
    );
    let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);
    for (rad, dash) in [(R0, ""), (R1, r#" stroke-dasharray="4 4""#)] {
        let _ = writeln!(
            svg,
            r##"<circle cx="{c}" cy="{c}" r="{:.3}" fill="none" stroke="#888"{dash}/>"##,
            k * rad,
            c = size / 2.0
        );
    }
    for (n, (label, t)) in traces.iter().enumerate() {
        let color = palette[n % palette.len()];
        let mut d = String::new();
        let mut pen_down = false;
        for s in &t.samples {
            if s.r > extent {
                pen_down = false;
                continue;
            }
            let (x, y) = map(s.planar());
            let _ = write!(d, "{}{x:.3},{y:.3} ", if pen_down { "L" } else { "M" });
            pen_down = true;
        }
        let _ = writeln!(
            svg,
            r#"<path d="{}" fill="none" stroke="{color}" stroke-width="1"><title>{}</title></path>"#,
            d.trim_end(),
            xml_escape(label)
        );
    }
    svg.push_str("</svg>\n");
    out.write_all(svg.as_bytes())?;
    out.flush()?;
    Ok(())
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
