//! SVG output. Coordinates come from the float embedding of lattice points; y points
//! up in the plane and down in SVG, so it is negated.

use std::fmt::Write;

use trisub::postprocess::{substitute, RuleSet};
use trisub::problem::Problem;
use trisub::search::ResultTile;
use trisub::{Error, Result};

/// Arrows cover this fraction of their edge, starting at the edge's origin.
pub const ARROW_FRACTION: f64 = 0.25;

/// Largest patch `render_rule` will build.
pub const MAX_RENDER_TILES: u64 = 200_000;

const CELL: f64 = 320.0;
const MARGIN: f64 = 16.0;
const TITLE: f64 = 18.0;
const PALETTE: [&str; 6] = [
    "#f2c14e", "#5fa8d3", "#9bc53d", "#e76f51", "#b392ac", "#8d99ae",
];

pub struct Panel {
    pub title: String,
    pub tiles: Vec<ResultTile>,
    pub orientation: Option<Vec<bool>>,
}

type Tri = [(f64, f64); 3];

fn triangles(problem: &Problem, tiles: &[ResultTile]) -> Vec<(usize, Tri)> {
    tiles
        .iter()
        .map(|t| {
            let v = problem.tile_vertices(t.proto as usize, &t.motion);
            let e = v.map(|p| {
                let (x, y) = problem.lattice.embed(&p);
                (x, -y)
            });
            (t.proto as usize, e)
        })
        .collect()
}

fn bounds(tris: &[(usize, Tri)]) -> [f64; 4] {
    tris.iter().flat_map(|(_, t)| t.iter()).fold(
        [
            f64::INFINITY,
            f64::INFINITY,
            f64::NEG_INFINITY,
            f64::NEG_INFINITY,
        ],
        |b, &(x, y)| [b[0].min(x), b[1].min(y), b[2].max(x), b[3].max(y)],
    )
}

/// Draws panels on a grid, one patch each.
pub fn render_panels(problem: &Problem, panels: &[Panel]) -> String {
    let cols = (panels.len() as f64).sqrt().ceil().max(1.0) as usize;
    let rows = panels.len().div_ceil(cols).max(1);
    let width = cols as f64 * CELL;
    let height = rows as f64 * (CELL + TITLE);
    let mut out = String::new();
    writeln!(
        out,
        r#"<?xml version="1.0" encoding="UTF-8"?>
<svg xmlns="http://www.w3.org/2000/svg" width="{width:.0}" height="{height:.0}" viewBox="0 0 {width:.0} {height:.0}">
<defs>
<marker id="head" markerWidth="6" markerHeight="6" refX="5" refY="3" orient="auto" markerUnits="strokeWidth">
<path d="M0,0 L6,3 L0,6 z" fill="black"/>
</marker>
</defs>
<rect width="100%" height="100%" fill="white"/>"#
    )
    .unwrap();
    for (i, panel) in panels.iter().enumerate() {
        let (cx, cy) = ((i % cols) as f64 * CELL, (i / cols) as f64 * (CELL + TITLE));
        let tris = triangles(problem, &panel.tiles);
        if tris.is_empty() {
            continue;
        }
        let [x0, y0, x1, y1] = bounds(&tris);
        let inner = CELL - 2.0 * MARGIN;
        let scale = inner / (x1 - x0).max(y1 - y0).max(1e-9);
        let ox = cx + MARGIN + (inner - (x1 - x0) * scale) / 2.0;
        let oy = cy + MARGIN + (inner - (y1 - y0) * scale) / 2.0;
        let map = |(x, y): (f64, f64)| (ox + (x - x0) * scale, oy + (y - y0) * scale);
        // Thin lines for large patches.
        let stroke = (scale * 0.02).clamp(0.2, 1.5);
        writeln!(
            out,
            r#"<g stroke="black" stroke-width="{stroke:.3}" stroke-linejoin="round">"#
        )
        .unwrap();
        for (p, t) in &tris {
            let pts: Vec<String> = t
                .iter()
                .map(|&q| {
                    let (x, y) = map(q);
                    format!("{x:.3},{y:.3}")
                })
                .collect();
            writeln!(
                out,
                r#"<polygon points="{}" fill="{}"/>"#,
                pts.join(" "),
                PALETTE[p % PALETTE.len()]
            )
            .unwrap();
        }
        if let Some(x) = &panel.orientation {
            for (p, t) in &tris {
                for i in 0..3 {
                    let (a, b) = (t[(i + 1) % 3], t[(i + 2) % 3]);
                    let (from, to) = if x[Problem::var(*p, i)] {
                        (b, a)
                    } else {
                        (a, b)
                    };
                    let end = (
                        from.0 + ARROW_FRACTION * (to.0 - from.0),
                        from.1 + ARROW_FRACTION * (to.1 - from.1),
                    );
                    let (fx, fy) = map(from);
                    let (ex, ey) = map(end);
                    writeln!(out, r#"<line x1="{fx:.3}" y1="{fy:.3}" x2="{ex:.3}" y2="{ey:.3}" marker-end="url(#head)"/>"#).unwrap();
                }
            }
        }
        writeln!(out, "</g>").unwrap();
        writeln!(
            out,
            r#"<text x="{:.3}" y="{:.3}" font-family="sans-serif" font-size="12" text-anchor="middle">{}</text>"#,
            cx + CELL / 2.0,
            cy + CELL + TITLE / 2.0,
            escape(&panel.title)
        )
        .unwrap();
    }
    out.push_str("</svg>\n");
    out
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

/// `sigma^k(seed)`, refusing patches larger than [`MAX_RENDER_TILES`].
pub fn iterate(
    problem: &Problem,
    rule: &RuleSet,
    seed: &[ResultTile],
    k: u32,
) -> Result<Vec<ResultTile>> {
    let m = problem.substitution_matrix()?;
    let mut census = vec![0u64; problem.num_protos()];
    for t in seed {
        census[t.proto as usize] += 1;
    }
    for _ in 0..k {
        census = (0..census.len())
            .map(|i| {
                census
                    .iter()
                    .enumerate()
                    .map(|(j, &c)| (m.get(i, j) as u64).saturating_mul(c))
                    .fold(0u64, u64::saturating_add)
            })
            .collect();
        let total: u64 = census.iter().sum();
        if total > MAX_RENDER_TILES {
            return Err(Error::Config(format!(
                "k = {k} gives more than {MAX_RENDER_TILES} tiles; choose a smaller k"
            )));
        }
    }
    let mut patch = seed.to_vec();
    for _ in 0..k {
        patch = substitute(problem, rule, &patch);
    }
    Ok(patch)
}
