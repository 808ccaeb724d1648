//! SVG overlay of executed paths, tube ribbons and obstacles.

use super::execution::{ExecutionRecord, Prepared};
use crate::dynamics::planar;
use std::fmt::Write;

const PALETTE: [&str; 6] = ["#d62728", "#1f77b4", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

/// Renders the campaign in the (px, py) plane: obstacles (dark), their
/// δ-inflation for the first execution (light), the nominal path of each
/// execution with a ribbon of width 2δ, and the flown path.
pub fn campaign_svg(prep: &Prepared, records: &[ExecutionRecord]) -> String {
    let b = &prep.scenario.workspace.bounds;
    let (x0, x1) = (b.lo[planar::PX], b.hi[planar::PX]);
    let (y0, y1) = (b.lo[planar::PY], b.hi[planar::PY]);
    let scale = 600.0 / (x1 - x0).max(y1 - y0);
    let (w, h) = ((x1 - x0) * scale, (y1 - y0) * scale);
    let px = |x: f64| (x - x0) * scale;
    let py = |y: f64| h - (y - y0) * scale;
    let mut s = String::new();
    let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w:.1}" height="{h:.1}" viewBox="0 0 {w:.1} {h:.1}">"#);
    let _ = writeln!(s, r##"<rect x="0" y="0" width="{w:.1}" height="{h:.1}" fill="#ffffff" stroke="#000000"/>"##);
    let rect = |s: &mut String, lo: &[f64], hi: &[f64], style: &str| {
        let _ = writeln!(
            s,
            r#"<rect x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" {style}/>"#,
            px(lo[0]),
            py(hi[1]),
            (hi[0] - lo[0]) * scale,
            (hi[1] - lo[1]) * scale
        );
    };
    if let Some(first) = records.first() {
        for o in &prep.scenario.workspace.obstacles {
            let inf = o.inflate(first.delta);
            rect(&mut s, &inf.lo, &inf.hi, r##"fill="#cccccc" fill-opacity="0.5""##);
        }
    }
    for o in &prep.scenario.workspace.obstacles {
        rect(&mut s, &o.lo, &o.hi, r##"fill="#444444""##);
    }
    let path = |pts: &mut dyn Iterator<Item = (f64, f64)>| -> String {
        let mut d = String::new();
        for (i, (x, y)) in pts.enumerate() {
            let _ = write!(d, "{}{:.2},{:.2} ", if i == 0 { "M" } else { "L" }, px(x), py(y));
        }
        d
    };
    for (k, r) in records.iter().enumerate() {
        let color = PALETTE[k % PALETTE.len()];
        let reference = path(&mut r.reference.states.iter().map(|x| (x[0], x[1])));
        let flown = path(&mut r.trajectory.states.iter().map(|x| (x[0], x[1])));
        let _ = writeln!(
            s,
            r#"<path d="{reference}" fill="none" stroke="{color}" stroke-opacity="0.15" stroke-width="{:.2}" stroke-linejoin="round" stroke-linecap="round"/>"#,
            2.0 * r.delta * scale
        );
        let _ = writeln!(
            s,
            r#"<path d="{flown}" fill="none" stroke="{color}" stroke-width="2"><title>execution {} cost {:.4}</title></path>"#,
            r.execution, r.plan_cost
        );
    }
    for (node, color) in [(&prep.scenario.start, "#000000"), (&prep.scenario.goal, "#008000")] {
        let p = prep.lattice.position(node);
        let _ = writeln!(s, r#"<circle cx="{:.2}" cy="{:.2}" r="5" fill="{color}"/>"#, px(p[0]), py(p[1]));
    }
    s.push_str("</svg>\n");
    s
}
