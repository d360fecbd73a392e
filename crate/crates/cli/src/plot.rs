//! Minimal SVG rendering of a trace. Coordinates become floats only here.

use std::fmt::Write as _;

use lcm_duo::engine::Trace;
use lcm_duo::exactgeom::{midpoint, Point, Rational};
use lcm_duo::model::RobotId;

const SIZE: f64 = 640.0;
const MARGIN: f64 = 32.0;

struct Frame {
    min_x: f64,
    max_y: f64,
    scale: f64,
}

impl Frame {
    fn fit(points: &[(f64, f64)]) -> Frame {
        let (mut min_x, mut max_x, mut min_y, mut max_y) = (f64::MAX, f64::MIN, f64::MAX, f64::MIN);
        for &(x, y) in points {
            min_x = min_x.min(x);
            max_x = max_x.max(x);
            min_y = min_y.min(y);
            max_y = max_y.max(y);
        }
        let span = (max_x - min_x).max(max_y - min_y);
        let scale = if span > 0.0 { (SIZE - 2.0 * MARGIN) / span } else { 1.0 };
        Frame { min_x, max_y, scale }
    }

    fn map(&self, (x, y): (f64, f64)) -> (f64, f64) {
        (MARGIN + (x - self.min_x) * self.scale, MARGIN + (self.max_y - y) * self.scale)
    }
}

fn f(p: &Point) -> (f64, f64) {
    (p.x.to_f64(), p.y.to_f64())
}

/// Corners of the square whose diagonal is `[a, b]`.
fn square(a: &Point, b: &Point) -> [Point; 4] {
    let m = midpoint(a, b);
    let w = (b - a).scale(&Rational::half()).perp_cw();
    [a.clone(), &m + &w, b.clone(), &m - &w]
}

fn path_of(trace: &Trace, r: RobotId) -> Vec<Point> {
    let mut pts = vec![trace.initial.positions[r].clone()];
    for s in trace.segments(r) {
        if !s.is_trivial() {
            pts.push(s.to.clone());
        }
    }
    pts
}

/// Both trajectories, every joint stop, and for SRO runs the nested squares.
pub fn render_svg(trace: &Trace) -> String {
    let paths = [path_of(trace, RobotId::A), path_of(trace, RobotId::B)];
    let stops = trace.stop_configurations();
    let squares: Vec<[Point; 4]> = if trace.algorithm == "alg.sro" {
        stops.iter().map(|(_, p)| square(&p.a, &p.b)).collect()
    } else {
        Vec::new()
    };
    let mut all: Vec<(f64, f64)> = paths.iter().flatten().map(f).collect();
    all.extend(squares.iter().flatten().map(f));
    let frame = Frame::fit(&all);

    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{SIZE}" height="{SIZE}" viewBox="0 0 {SIZE} {SIZE}">"#
    );
    let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(out, "<title>{} under {}</title>", trace.algorithm, trace.model);
    for sq in &squares {
        let pts: Vec<String> = sq.iter().map(|p| {
            let (x, y) = frame.map(f(p));
            format!("{x:.3},{y:.3}")
        }).collect();
        let _ = writeln!(out, r##"<polygon points="{}" fill="none" stroke="#999" stroke-width="0.8"/>"##, pts.join(" "));
    }
    for (path, color) in paths.iter().zip(["#1f5fbf", "#c0392b"]) {
        let pts: Vec<String> = path.iter().map(|p| {
            let (x, y) = frame.map(f(p));
            format!("{x:.3},{y:.3}")
        }).collect();
        let _ = writeln!(
            out,
            r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="1.5"/>"#,
            pts.join(" ")
        );
        let (x, y) = frame.map(f(&path[0]));
        let _ = writeln!(out, r#"<circle cx="{x:.3}" cy="{y:.3}" r="4" fill="{color}"/>"#);
    }
    for (_, p) in &stops {
        for q in [&p.a, &p.b] {
            let (x, y) = frame.map(f(q));
            let _ = writeln!(out, r#"<circle cx="{x:.3}" cy="{y:.3}" r="2" fill="black"/>"#);
        }
    }
    out.push_str("</svg>\n");
    out
}
