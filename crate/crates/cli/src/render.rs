//! SVG rendering of a scene and configuration.

use std::fmt::Write;

use placer_core::geometry::{Part, Surface};
use placer_core::scene::{Configuration, ObjectKind, Scene};

const SURFACE: &str = "#7cb342";
const OBSTACLE: &str = "#fdd835";
const MOVABLE: &str = "#e53935";
const NEW: &str = "#1e88e5";
const OUTLINE: &str = "#000000";

fn num(v: f64) -> String {
    // Avoid "-0.000000".
    let s = format!("{v:.6}");
    if s.trim_start_matches('-').chars().all(|c| c == '0' || c == '.') {
        "0.000000".to_string()
    } else {
        s
    }
}

/// Shape elements for one part; y is flipped so the surface reads upright.
fn part_svg(out: &mut String, part: &Part) {
    match part {
        Part::Circle { center, radius } => {
            let _ = writeln!(
                out,
                r#"    <circle cx="{}" cy="{}" r="{}"/>"#,
                num(center.x),
                num(-center.y),
                num(*radius)
            );
        }
        Part::Polygon(p) => {
            let pts: Vec<String> = p
                .vertices()
                .iter()
                .map(|v| format!("{},{}", num(v.x), num(-v.y)))
                .collect();
            let _ = writeln!(out, r#"    <polygon points="{}"/>"#, pts.join(" "));
        }
    }
}

fn color(kind: ObjectKind) -> &'static str {
    match kind {
        ObjectKind::Obstacle => OBSTACLE,
        ObjectKind::Movable => MOVABLE,
        ObjectKind::New => NEW,
    }
}

/// Deterministic SVG of the surface and every placed object. Colliding pairs
/// are outlined in a `collision` group, overhanging objects in an `overhang`
/// group.
pub fn render_svg(scene: &Scene, config: &Configuration) -> String {
    let (lo, hi) = scene.surface.bounds();
    let (w, h) = (hi.x - lo.x, hi.y - lo.y);
    let (mx, my) = (0.05 * w, 0.05 * h);
    let stroke = 0.004 * w.max(h);
    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" viewBox="{} {} {} {}" width="800" height="{}">"#,
        num(lo.x - mx),
        num(-(hi.y + my)),
        num(w + 2.0 * mx),
        num(h + 2.0 * my),
        num(800.0 * (h + 2.0 * my) / (w + 2.0 * mx)),
    );
    let _ = writeln!(out, r#"  <g class="surface" fill="{SURFACE}">"#);
    match &scene.surface {
        Surface::Polygon(p) => part_svg(&mut out, &Part::Polygon(p.clone())),
        Surface::Circle { center, radius } => part_svg(
            &mut out,
            &Part::Circle {
                center: *center,
                radius: *radius,
            },
        ),
    }
    out.push_str("  </g>\n");

    let placed: Vec<_> = scene
        .objects
        .iter()
        .enumerate()
        .map(|(i, o)| config.get(i).map(|p| o.footprint.place(&p)))
        .collect();
    for (i, o) in scene.objects.iter().enumerate() {
        let Some(p) = &placed[i] else { continue };
        let _ = writeln!(
            out,
            r#"  <g class="{}" id="{}" fill="{}">"#,
            kind_name(o.kind),
            escape(&o.id),
            color(o.kind)
        );
        for part in &p.parts {
            part_svg(&mut out, part);
        }
        out.push_str("  </g>\n");
    }

    let contacts = scene.contacts(config).unwrap_or_default();
    for c in &contacts.pairs {
        let _ = writeln!(
            out,
            r#"  <g class="collision" data-a="{}" data-b="{}" fill="none" stroke="{OUTLINE}" stroke-width="{}">"#,
            escape(&scene.objects[c.a].id),
            escape(&scene.objects[c.b].id),
            num(stroke)
        );
        for idx in [c.a, c.b] {
            for part in &placed[idx].as_ref().expect("colliding objects are placed").parts {
                part_svg(&mut out, part);
            }
        }
        out.push_str("  </g>\n");
    }
    for (i, _) in &contacts.boundary {
        let _ = writeln!(
            out,
            r#"  <g class="overhang" data-a="{}" fill="none" stroke="{OUTLINE}" stroke-width="{}" stroke-dasharray="{} {}">"#,
            escape(&scene.objects[*i].id),
            num(stroke),
            num(3.0 * stroke),
            num(2.0 * stroke)
        );
        for part in &placed[*i].as_ref().expect("overhanging objects are placed").parts {
            part_svg(&mut out, part);
        }
        out.push_str("  </g>\n");
    }
    out.push_str("</svg>\n");
    out
}

fn kind_name(kind: ObjectKind) -> &'static str {
    match kind {
        ObjectKind::Obstacle => "obstacle",
        ObjectKind::Movable => "movable",
        ObjectKind::New => "new",
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}
