use std::collections::{BTreeMap, HashMap};
use std::fmt::Write;

use super::SchreierGraph;
use crate::actions::ActionPoint;
use crate::error::{Error, Result};

/// Per-generator edge attributes, e.g. `B => "style=solid"`.
pub type EdgeStyle = BTreeMap<char, String>;

struct BallEdges {
    nodes: Vec<(String, u64)>,
    edges: Vec<(String, String, char)>,
}

// Nodes sorted by (distance, name); one directed edge v -> v.s per vertex and
// positive generator, kept when both ends lie in the ball.
fn ball_edges(g: &SchreierGraph, center: &ActionPoint, radius: u64) -> Result<BallEdges> {
    let layers = g.ball_layers(center, radius)?;
    let mut dist: HashMap<ActionPoint, u64> = HashMap::new();
    let mut nodes = Vec::new();
    for (d, layer) in layers.iter().enumerate() {
        let mut names: Vec<(String, &ActionPoint)> = layer.iter().map(|p| (p.to_string(), p)).collect();
        names.sort_by(|a, b| a.0.cmp(&b.0));
        for (name, p) in names {
            dist.insert(p.clone(), d as u64);
            nodes.push((name, d as u64));
        }
    }
    let mut edges = Vec::new();
    for layer in &layers {
        let mut sorted: Vec<&ActionPoint> = layer.iter().collect();
        sorted.sort_by_cached_key(|p| p.to_string());
        for v in sorted {
            for (letter, w) in g.neighbors(v)? {
                if letter.inverted || !dist.contains_key(&w) {
                    continue;
                }
                edges.push((v.to_string(), w.to_string(), letter.symbol));
            }
        }
    }
    Ok(BallEdges { nodes, edges })
}

/// The ball of `radius` around `center` as a DOT digraph with generator-labeled
/// edges, loops included. Output is deterministic.
pub fn export_dot(g: &SchreierGraph, center: &ActionPoint, radius: u64, style: &EdgeStyle) -> Result<String> {
    let ball = ball_edges(g, center, radius)?;
    let mut out = String::new();
    writeln!(out, "digraph schreier {{").unwrap();
    for (name, d) in &ball.nodes {
        writeln!(out, "  \"{name}\" [dist={d}];").unwrap();
    }
    for (u, v, s) in &ball.edges {
        match style.get(s) {
            Some(extra) => writeln!(out, "  \"{u}\" -> \"{v}\" [label=\"{s}\", {extra}];").unwrap(),
            None => writeln!(out, "  \"{u}\" -> \"{v}\" [label=\"{s}\"];").unwrap(),
        }
    }
    out.push_str("}\n");
    Ok(out)
}

/// Same edges as [`export_dot`] as `source,target,label` rows.
pub fn export_csv(g: &SchreierGraph, center: &ActionPoint, radius: u64) -> Result<String> {
    let ball = ball_edges(g, center, radius)?;
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["source", "target", "label"])?;
    for (u, v, s) in &ball.edges {
        w.write_record([u.as_str(), v.as_str(), &s.to_string()])?;
    }
    let bytes = w.into_inner().map_err(|e| Error::from(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv of utf-8 fields"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::actions::Action;

    #[test]
    fn small_balls() {
        let c = Action::Thompson.parse_point("3/4").unwrap();
        let g = SchreierGraph::new(c.clone());
        let dot0 = export_dot(&g, &c, 0, &EdgeStyle::new()).unwrap();
        assert_eq!(dot0.matches("dist=").count(), 1);
        let style = EdgeStyle::from([('A', "style=dashed".to_string())]);
        let dot1 = export_dot(&g, &c, 1, &style).unwrap();
        assert_eq!(dot1.matches("dist=").count(), 4);
        assert!(dot1.contains("\"3/2^2\" -> \"1/2^1\" [label=\"A\", style=dashed];"));
        assert!(dot1.contains("\"7/2^3\" -> \"3/2^2\" [label=\"B\"];"));
        assert_eq!(dot1, export_dot(&g, &c, 1, &style).unwrap());
        let csv = export_csv(&g, &c, 1).unwrap();
        assert_eq!(csv.lines().count() - 1, dot1.matches("->").count());
        let o = ActionPoint::Psi(crate::actions::CombVertex::new(0, 0));
        let comb = export_csv(&SchreierGraph::new(o.clone()), &o, 1).unwrap();
        assert!(comb.contains("\"(0,0)\",\"(0,1)\",a"));
    }
}
