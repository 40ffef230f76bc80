//! Standalone SVG drawings of plans.
//!
//! Obstacles are dark, observation areas blue, goal nodes squares; every
//! branch gets its own color, listed in a legend by observation vector.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::cost::PlanTree;
use crate::error::Result;
use crate::geometry::{Point2, Rect, Region};
use crate::scenario::Scenario;

const CANVAS: f64 = 600.0;
const MARGIN: f64 = 20.0;
const LEGEND_WIDTH: f64 = 170.0;

const PALETTE: [&str; 10] = [
    "#1b9e77", "#d95f02", "#7570b3", "#e7298a", "#66a61e", "#e6ab02", "#a6761d", "#e41a1c",
    "#17becf", "#8c564b",
];

/// Color of branch `id`; beyond the palette, hues advance by the golden angle.
pub fn branch_color(id: usize) -> String {
    match PALETTE.get(id) {
        Some(c) => (*c).to_string(),
        None => {
            let hue = (id as f64 * 137.507_764) % 360.0;
            format!("hsl({hue:.1},70%,45%)")
        }
    }
}

struct Frame {
    bounds: Rect,
    scale: f64,
}

impl Frame {
    fn map(&self, p: Point2) -> (f64, f64) {
        (
            MARGIN + (p.x - self.bounds.min.x) * self.scale,
            MARGIN + (self.bounds.max.y - p.y) * self.scale,
        )
    }

    fn len(&self, d: f64) -> f64 {
        d * self.scale
    }
}

fn region(out: &mut String, f: &Frame, r: &Region, style: &str) {
    match r {
        Region::Rect(rect) => {
            let (x, y) = f.map(Point2::new(rect.min.x, rect.max.y));
            let _ = writeln!(
                out,
                r#"  <rect x="{x:.3}" y="{y:.3}" width="{:.3}" height="{:.3}" {style}/>"#,
                f.len(rect.width()),
                f.len(rect.height())
            );
        }
        Region::Disk(d) => {
            let (x, y) = f.map(d.center);
            let _ = writeln!(
                out,
                r#"  <circle cx="{x:.3}" cy="{y:.3}" r="{:.3}" {style}/>"#,
                f.len(d.radius)
            );
        }
    }
}

fn label(plan: &PlanTree, id: usize) -> String {
    let obs = plan.observation_vector(id);
    if obs.is_empty() {
        "root".into()
    } else {
        let parts: Vec<String> = obs.iter().map(|o| o.to_string()).collect();
        format!("o = ({})", parts.join(","))
    }
}

pub fn render_svg_string(plan: &PlanTree, scenario: &Scenario) -> String {
    let mut bounds = scenario.agents[0].workspace.bounds;
    for a in &scenario.agents[1..] {
        let b = a.workspace.bounds;
        bounds = Rect::new(
            Point2::new(bounds.min.x.min(b.min.x), bounds.min.y.min(b.min.y)),
            Point2::new(bounds.max.x.max(b.max.x), bounds.max.y.max(b.max.y)),
        );
    }
    let scale = CANVAS / bounds.width().max(bounds.height());
    let f = Frame { bounds, scale };
    let width = 2.0 * MARGIN + f.len(bounds.width()) + LEGEND_WIDTH;
    let height = (2.0 * MARGIN + f.len(bounds.height()))
        .max(MARGIN + 20.0 * (plan.branches.len() + 1) as f64);

    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width:.0}" height="{height:.0}" viewBox="0 0 {width:.3} {height:.3}">"#
    );
    let _ = writeln!(out, "  <title>{}</title>", escape(&scenario.name));
    region(
        &mut out,
        &f,
        &Region::Rect(bounds),
        r##"fill="#ffffff" stroke="#000000" stroke-width="1""##,
    );

    let mut drawn = BTreeSet::new();
    for (i, a) in scenario.agents.iter().enumerate() {
        for o in &a.workspace.obstacles {
            let key = format!("{o:?}");
            if drawn.insert(key) {
                let _ = writeln!(
                    out,
                    "  <!-- obstacle of agent {i} ({}) -->",
                    escape(&a.name)
                );
                region(&mut out, &f, o, r##"class="obstacle" fill="#333333""##);
            }
        }
    }
    for r in &scenario.env.observation_areas {
        region(
            &mut out,
            &f,
            r,
            r##"class="area" fill="#4a90d9" fill-opacity="0.35" stroke="#1f5fa8""##,
        );
    }
    let side = 12.0;
    for (e, g) in scenario.env.goal_nodes.iter().enumerate() {
        let (x, y) = f.map(*g);
        let _ = writeln!(
            out,
            r##"  <rect class="goal" x="{:.3}" y="{:.3}" width="{side}" height="{side}" fill="none" stroke="#000000" stroke-width="2"><title>goal {e}</title></rect>"##,
            x - side / 2.0,
            y - side / 2.0
        );
    }

    let _ = writeln!(out, r#"  <g class="plan" fill="none" stroke-width="2">"#);
    for b in &plan.branches {
        let color = branch_color(b.id);
        for (a, w) in b.waypoints.iter().enumerate() {
            let pts: Vec<String> = w
                .iter()
                .map(|p| {
                    let (x, y) = f.map(*p);
                    format!("{x:.3},{y:.3}")
                })
                .collect();
            // agents are told apart by dash pattern
            let dash = if a == 0 {
                String::new()
            } else {
                format!(r#" stroke-dasharray="{},{}""#, 4 + 2 * a, 3)
            };
            let _ = writeln!(
                out,
                r#"    <polyline data-branch="{}" data-agent="{a}" stroke="{color}"{dash} points="{}"/>"#,
                b.id,
                pts.join(" ")
            );
        }
    }
    let _ = writeln!(out, "  </g>");

    let lx = 2.0 * MARGIN + f.len(bounds.width());
    let _ = writeln!(
        out,
        r#"  <g class="legend" font-family="sans-serif" font-size="12">"#
    );
    for b in &plan.branches {
        let y = MARGIN + 20.0 * b.id as f64;
        let _ = writeln!(
            out,
            r#"    <rect x="{lx:.3}" y="{y:.3}" width="14" height="10" fill="{}"/>"#,
            branch_color(b.id)
        );
        let _ = writeln!(
            out,
            r#"    <text x="{:.3}" y="{:.3}">{} {}</text>"#,
            lx + 20.0,
            y + 10.0,
            b.id,
            escape(&label(plan, b.id))
        );
    }
    let _ = writeln!(out, "  </g>");
    out.push_str("</svg>\n");
    out
}

pub fn render_svg(plan: &PlanTree, scenario: &Scenario, out_path: impl AsRef<Path>) -> Result<()> {
    fs::write(out_path, render_svg_string(plan, scenario))?;
    Ok(())
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}
