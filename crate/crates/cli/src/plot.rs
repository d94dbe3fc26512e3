//! Overhead SVG plot of regions and agent trajectories.

use std::fmt::Write;

use catlplus::dynamics::Rollout;
use catlplus::scenario::{Region, ScenarioConfig};

const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2", "#17becf",
];
const SIZE: f64 = 600.0;

struct Frame {
    min: [f64; 2],
    scale: f64,
    height: f64,
}

impl Frame {
    fn x(&self, v: f64) -> f64 {
        (v - self.min[0]) * self.scale
    }

    fn y(&self, v: f64) -> f64 {
        self.height - (v - self.min[1]) * self.scale
    }
}

fn region(out: &mut String, f: &Frame, r: &Region, style: &str) {
    match r {
        Region::Rect { min, max } => {
            let _ = writeln!(
                out,
                r#"<rect x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" {style}/>"#,
                f.x(min[0]),
                f.y(max[1]),
                (max[0] - min[0]) * f.scale,
                (max[1] - min[1]) * f.scale
            );
        }
        Region::Circle { center, radius } => {
            let _ = writeln!(
                out,
                r#"<circle cx="{:.2}" cy="{:.2}" r="{:.2}" {style}/>"#,
                f.x(center[0]),
                f.y(center[1]),
                radius * f.scale
            );
        }
        Region::Union { parts } => parts.iter().for_each(|p| region(out, f, p, style)),
    }
}

fn anchor(r: &Region) -> [f64; 2] {
    match r {
        Region::Rect { min, max } => [min[0] + 0.1, max[1] - 0.35],
        Region::Circle { center, .. } => *center,
        Region::Union { parts } => parts.first().map_or([0.0, 0.0], anchor),
    }
}

/// Renders the workspace, every named region and one polyline per agent
/// with a marker at each time step.
pub fn render(config: &ScenarioConfig, group_of: &[String], rollouts: &[Rollout<f64>]) -> String {
    let ws = config.workspace;
    let w = (ws.max[0] - ws.min[0]).max(1e-9);
    let h = (ws.max[1] - ws.min[1]).max(1e-9);
    let scale = SIZE / w.max(h);
    let f = Frame {
        min: ws.min,
        scale,
        height: h * scale,
    };
    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" viewBox="-10 -10 {:.2} {:.2}" font-family="sans-serif" font-size="12">"#,
        w * scale + 20.0,
        h * scale + 20.0
    );
    for (name, r) in &config.regions {
        region(&mut out, &f, r, r##"fill="#888" fill-opacity="0.12" stroke="#444" stroke-width="1""##);
        let [ax, ay] = anchor(r);
        let _ = writeln!(out, r#"<text x="{:.2}" y="{:.2}">{name}</text>"#, f.x(ax), f.y(ay));
    }
    for (j, r) in rollouts.iter().enumerate() {
        let color = PALETTE[j % PALETTE.len()];
        let pts: Vec<String> = r
            .workspace
            .iter()
            .map(|p| format!("{:.2},{:.2}", f.x(p[0]), f.y(p[1])))
            .collect();
        let group = group_of.get(j).map_or("", String::as_str);
        let _ = writeln!(
            out,
            r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="2"><title>agent {j} ({group})</title></polyline>"#,
            pts.join(" ")
        );
        for p in &r.workspace {
            let _ = writeln!(
                out,
                r#"<circle cx="{:.2}" cy="{:.2}" r="2.5" fill="{color}"/>"#,
                f.x(p[0]),
                f.y(p[1])
            );
        }
    }
    out.push_str("</svg>\n");
    out
}
