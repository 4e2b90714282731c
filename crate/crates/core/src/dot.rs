//! Graphviz output for diagrams.
//!
//! Node ids are stable: boundary slots are `in_i` / `out_j`, boxes are
//! `kind_variable_ordinal` where the ordinal counts earlier boxes of the same
//! kind on the same variable.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::diagram::{BoxKind, Diagram, Source, Target};
use crate::structure::CausalStructure;

fn quote(s: &str) -> String {
    format!("\"{}\"", s.replace('\\', "\\\\").replace('"', "\\\""))
}

/// Node ids of every box, in box order.
pub fn box_ids(d: &Diagram, g: &CausalStructure) -> Vec<String> {
    let mut seen: BTreeMap<BoxKind, usize> = BTreeMap::new();
    d.boxes()
        .iter()
        .map(|b| {
            let n = seen.entry(b.kind).or_default();
            let id = format!("{}_{}_{}", b.kind.tag(), g.name(b.kind.variable()), n);
            *n += 1;
            id
        })
        .collect()
}

pub fn to_dot(d: &Diagram, g: &CausalStructure, title: &str) -> String {
    let ids = box_ids(d, g);
    let mut out = String::new();
    writeln!(out, "digraph {} {{", quote(title)).unwrap();
    out.push_str("  rankdir=BT;\n  node [fontname=\"Helvetica\"];\n  edge [fontname=\"Helvetica\", fontsize=10];\n");
    for (i, &v) in d.dom_labels().iter().enumerate() {
        writeln!(out, "  {} [shape=plaintext, label={}];", quote(&format!("in_{i}")), quote(g.name(v))).unwrap();
    }
    for (b, id) in d.boxes().iter().zip(&ids) {
        let attrs = match b.kind {
            BoxKind::Mechanism(v) => {
                let pa: Vec<&str> = b.inputs.iter().map(|&p| g.name(p)).collect();
                let label = if pa.is_empty() { g.name(v).to_string() } else { format!("{} | {}", g.name(v), pa.join(" ")) };
                format!("shape=box, label={}", quote(&label))
            }
            BoxKind::Copy(_) => "shape=point, width=0.12".to_string(),
            BoxKind::Discard(_) => "shape=circle, label=\"\", width=0.12".to_string(),
        };
        writeln!(out, "  {} [{attrs}];", quote(id)).unwrap();
    }
    for (j, &v) in d.cod_labels().iter().enumerate() {
        writeln!(out, "  {} [shape=plaintext, label={}];", quote(&format!("out_{j}")), quote(g.name(v))).unwrap();
    }
    for w in d.wires() {
        let from = match w.source {
            Source::Input(i) => format!("in_{i}"),
            Source::Port { node, .. } => ids[node].clone(),
        };
        let to = match w.target {
            Target::Output(j) => format!("out_{j}"),
            Target::Port { node, .. } => ids[node].clone(),
        };
        writeln!(out, "  {} -> {} [label={}];", quote(&from), quote(&to), quote(g.name(w.label))).unwrap();
    }
    out.push_str("}\n");
    out
}
