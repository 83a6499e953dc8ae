//! DOT, SVG and TikZ drawings of a score.
//!
//! All three read the same [`render_layout`] placement, so column positions
//! agree between formats. Level 3 is drawn at the top. Point counts label
//! straight edges, η edges are solid arcs and ε edges dashed arcs. Only ε
//! entries that are `1`, or `unknown` with their class defined, are drawn.

use std::fmt::Write as _;
use std::str::FromStr;

use flowcat_core::score::{render_layout, EdgeKind, EdgeLayout, Eps, FlowScore, Layout};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Dot,
    Svg,
    Tikz,
}

impl FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "dot" => Ok(Format::Dot),
            "svg" => Ok(Format::Svg),
            "tikz" => Ok(Format::Tikz),
            _ => Err(format!("unknown format `{s}` (expected dot, svg or tikz)")),
        }
    }
}

pub fn render(s: &FlowScore, format: Format) -> String {
    let layout = drawn_layout(s);
    match format {
        Format::Dot => dot(&layout),
        Format::Svg => svg(&layout),
        Format::Tikz => tikz(&layout),
    }
}

fn drawn_layout(s: &FlowScore) -> Layout {
    let mut layout = render_layout(s);
    layout.edges.retain(|e| match e.kind {
        EdgeKind::Eps(Eps::One) => true,
        EdgeKind::Eps(Eps::Unknown) => s.eps_support_holds(&e.from, &e.to),
        EdgeKind::Eps(Eps::Zero) => false,
        _ => true,
    });
    layout
}

fn edge_label(e: &EdgeLayout) -> String {
    match &e.kind {
        EdgeKind::Points(n) => n.to_string(),
        EdgeKind::Eta => String::new(),
        EdgeKind::Eps(Eps::Unknown) => "?".into(),
        EdgeKind::Eps(_) => String::new(),
    }
}

fn dot_quote(s: &str) -> String {
    format!("\"{}\"", s.replace('\\', "\\\\").replace('"', "\\\""))
}

pub fn dot(layout: &Layout) -> String {
    let mut out = String::new();
    out.push_str("digraph score {\n");
    out.push_str("  rankdir=TB;\n");
    out.push_str("  node [shape=circle, fontsize=10];\n");
    for level in (0..=3u8).rev() {
        let ids: Vec<String> = layout
            .nodes
            .iter()
            .filter(|n| n.level == level)
            .map(|n| dot_quote(&n.id))
            .collect();
        if ids.is_empty() {
            continue;
        }
        writeln!(out, "  {{ rank=same; {}; }}", ids.join("; ")).unwrap();
    }
    for n in &layout.nodes {
        let label = if n.label.is_empty() { &n.id } else { &n.label };
        writeln!(
            out,
            "  {} [label={}, degree={}];",
            dot_quote(&n.id),
            dot_quote(label),
            layout.base_degree + i64::from(n.level)
        )
        .unwrap();
    }
    for e in &layout.edges {
        let style = match e.kind {
            EdgeKind::Points(_) => "solid",
            EdgeKind::Eta => "bold",
            EdgeKind::Eps(_) => "dashed",
        };
        write!(
            out,
            "  {} -> {} [style={style}",
            dot_quote(&e.from),
            dot_quote(&e.to)
        )
        .unwrap();
        let label = edge_label(e);
        if !label.is_empty() {
            write!(out, ", label={}", dot_quote(&label)).unwrap();
        }
        out.push_str("];\n");
    }
    out.push_str("}\n");
    out
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

const COL: i64 = 60;
const ROW: i64 = 60;
const MARGIN: i64 = 50;

fn svg_pos(layout: &Layout, id: &str) -> (i64, i64) {
    let n = layout.node(id).expect("edge endpoints are nodes");
    (
        MARGIN + COL * n.x as i64,
        MARGIN + ROW * (3 - i64::from(n.level)),
    )
}

pub fn svg(layout: &Layout) -> String {
    let w = 2 * MARGIN + COL * layout.width.max(1) as i64;
    let h = 2 * MARGIN + 3 * ROW;
    let mut out = String::new();
    writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#
    )
    .unwrap();
    for level in 0..=3i64 {
        let y = MARGIN + ROW * (3 - level);
        writeln!(
            out,
            r##"<line x1="{}" y1="{y}" x2="{}" y2="{y}" stroke="#bbb" stroke-width="1"/>"##,
            MARGIN / 2,
            w - MARGIN / 2
        )
        .unwrap();
        writeln!(
            out,
            r#"<text x="4" y="{}" font-size="10">{}</text>"#,
            y + 4,
            layout.base_degree + level
        )
        .unwrap();
    }
    for e in &layout.edges {
        let (x1, y1) = svg_pos(layout, &e.from);
        let (x2, y2) = svg_pos(layout, &e.to);
        let label = xml_escape(&edge_label(e));
        match e.kind {
            EdgeKind::Points(_) => {
                writeln!(
                    out,
                    r#"<line x1="{x1}" y1="{y1}" x2="{x2}" y2="{y2}" stroke="black" stroke-width="1.5"/>"#
                )
                .unwrap();
                writeln!(
                    out,
                    r#"<text x="{}" y="{}" font-size="11">{label}</text>"#,
                    (x1 + x2) / 2 + 4,
                    (y1 + y2) / 2 + 4
                )
                .unwrap();
            }
            EdgeKind::Eta | EdgeKind::Eps(_) => {
                let bulge = if x1 == x2 { 30 } else { 0 };
                let (cx, cy) = ((x1 + x2) / 2 - bulge, (y1 + y2) / 2);
                let dash = if matches!(e.kind, EdgeKind::Eps(_)) {
                    r#" stroke-dasharray="5,4""#
                } else {
                    ""
                };
                writeln!(
                    out,
                    r#"<path d="M {x1} {y1} Q {cx} {cy} {x2} {y2}" fill="none" stroke="black" stroke-width="1.5"{dash}/>"#
                )
                .unwrap();
                if !label.is_empty() {
                    writeln!(
                        out,
                        r#"<text x="{}" y="{}" font-size="11">{label}</text>"#,
                        cx - 10,
                        cy
                    )
                    .unwrap();
                }
            }
        }
    }
    for n in &layout.nodes {
        let (x, y) = svg_pos(layout, &n.id);
        let label = if n.label.is_empty() { &n.id } else { &n.label };
        writeln!(out, r#"<circle cx="{x}" cy="{y}" r="4" fill="black"/>"#).unwrap();
        writeln!(
            out,
            r#"<text x="{}" y="{}" font-size="10">{}</text>"#,
            x + 6,
            y - 6,
            xml_escape(label)
        )
        .unwrap();
    }
    out.push_str("</svg>\n");
    out
}

fn tex_escape(s: &str) -> String {
    let mut out = String::new();
    for c in s.chars() {
        match c {
            '_' | '&' | '%' | '$' | '#' | '{' | '}' => {
                out.push('\\');
                out.push(c);
            }
            '\\' => out.push_str("\\textbackslash{}"),
            _ => out.push(c),
        }
    }
    out
}

pub fn tikz(layout: &Layout) -> String {
    let mut out = String::new();
    out.push_str("\\begin{tikzpicture}[x=1cm, y=1cm,\n");
    out.push_str("  stave/.style={gray!60, thin},\n");
    out.push_str("  obj/.style={circle, fill, inner sep=1.5pt},\n");
    out.push_str("  pts/.style={thick},\n");
    out.push_str("  eta/.style={thick, bend right=40},\n");
    out.push_str("  eps/.style={thick, dashed, bend right=40}]\n");
    let right = layout.width.max(1) as f64 - 0.5;
    for level in 0..=3i64 {
        writeln!(
            out,
            "  \\draw[stave] (-0.5,{level}) -- ({right},{level}) node[right] {{\\scriptsize {}}};",
            layout.base_degree + level
        )
        .unwrap();
    }
    let name = |id: &str| {
        let i = layout.nodes.iter().position(|n| n.id == id).expect("node");
        format!("o{i}")
    };
    for (i, n) in layout.nodes.iter().enumerate() {
        let label = if n.label.is_empty() { &n.id } else { &n.label };
        writeln!(
            out,
            "  \\node[obj, label=above left:{{\\scriptsize {}}}] (o{i}) at ({},{}) {{}};",
            tex_escape(label),
            n.x,
            n.level
        )
        .unwrap();
    }
    for e in &layout.edges {
        let (a, b) = (name(&e.from), name(&e.to));
        match &e.kind {
            EdgeKind::Points(n) => writeln!(
                out,
                "  \\draw[pts] ({a}) -- node[right] {{\\scriptsize ${n}$}} ({b});"
            )
            .unwrap(),
            EdgeKind::Eta => writeln!(out, "  \\draw[eta] ({a}) to ({b});").unwrap(),
            EdgeKind::Eps(v) => {
                let tag = if *v == Eps::Unknown {
                    " node[left] {\\scriptsize ?}"
                } else {
                    ""
                };
                writeln!(out, "  \\draw[eps] ({a}) to{tag} ({b});").unwrap()
            }
        }
    }
    out.push_str("\\end{tikzpicture}\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::document::parse_score;
    use crate::fixtures;

    fn moore() -> FlowScore {
        parse_score("object a level 1\nobject b level 0\npoints a b 2\n").unwrap()
    }

    #[test]
    fn moore_dot() {
        assert_eq!(
            render(&moore(), Format::Dot),
            "digraph score {\n  rankdir=TB;\n  node [shape=circle, fontsize=10];\n  \
             { rank=same; \"a\"; }\n  { rank=same; \"b\"; }\n  \
             \"a\" [label=\"a\", degree=1];\n  \"b\" [label=\"b\", degree=0];\n  \
             \"a\" -> \"b\" [style=solid, label=\"2\"];\n}\n"
        );
    }

    #[test]
    fn moore_in_every_format_has_two_nodes_and_one_label() {
        let s = moore();
        let svg = render(&s, Format::Svg);
        assert_eq!(svg.matches("<circle").count(), 2);
        assert_eq!(svg.matches(r#"font-size="11">2</text>"#).count(), 1);
        let tikz = render(&s, Format::Tikz);
        assert_eq!(tikz.matches("\\node[obj").count(), 2);
        assert_eq!(tikz.matches("$2$").count(), 1);
    }

    #[test]
    fn fix_a_svg_has_two_eta_chords_and_no_eps() {
        let svg = render(&fixtures::load("fix-a"), Format::Svg);
        assert_eq!(svg.matches("<path").count(), 2);
        assert!(!svg.contains("stroke-dasharray"));
    }

    #[test]
    fn fix_b_draws_its_eps_dashed() {
        let svg = render(&fixtures::load("fix-b"), Format::Svg);
        assert_eq!(svg.matches("stroke-dasharray").count(), 1);
        let dot = render(&fixtures::load("fix-b"), Format::Dot);
        assert!(dot.contains("\"a\" -> \"d\" [style=dashed];"));
    }

    #[test]
    fn chang_tikz_shape() {
        let s = parse_score(
            "object a level 2\nobject b1 level 1\nobject b2 level 1\nobject c level 0\n\
             eta a c\npoints a b1 2\npoints b2 c 4\n",
        )
        .unwrap();
        let t = render(&s, Format::Tikz);
        assert_eq!(t.matches("\\draw[eta]").count(), 1);
        assert_eq!(t.matches("\\draw[pts]").count(), 2);
        assert_eq!(t.matches("\\draw[stave]").count(), 4);
        assert!(t.contains("(o0) at (0,2)"));
    }

    #[test]
    fn output_is_deterministic() {
        let s = fixtures::load("fix-d");
        for f in [Format::Dot, Format::Svg, Format::Tikz] {
            assert_eq!(render(&s, f), render(&s.clone(), f));
        }
    }
}
