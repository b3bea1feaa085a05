use std::collections::BTreeMap;
use std::fmt::Write;

use serde::{Deserialize, Serialize};

use super::{ProductGraph, SafetyClassification, Shield, ShieldEntry, ShieldMode, Verdict};
use crate::mdp::{DiscreteState, Mdp};
use crate::{Action, FeatureSet};

pub const PRODUCT_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProductExport {
    pub version: u32,
    pub formula: String,
    pub features: FeatureSet,
    pub verdict: Verdict,
    pub nodes: Vec<ProductNode>,
    pub edges: Vec<ProductExportEdge>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProductNode {
    pub id: usize,
    pub s: usize,
    pub q: usize,
    pub bins: DiscreteState,
    pub labels: Vec<String>,
    pub initial: bool,
    pub accepting: bool,
    pub hopeful: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProductExportEdge {
    pub src: usize,
    pub a: Action,
    pub dst: usize,
}

pub fn export_product(
    m: &Mdp,
    g: &ProductGraph,
    c: &SafetyClassification,
    verdict: Verdict,
    formula: &str,
) -> ProductExport {
    ProductExport {
        version: PRODUCT_FORMAT_VERSION,
        formula: formula.to_string(),
        features: m.features(),
        verdict,
        nodes: g
            .nodes()
            .iter()
            .enumerate()
            .map(|(id, &(s, q))| ProductNode {
                id,
                s,
                q,
                bins: m.state(s),
                labels: g.label(s).iter().cloned().collect(),
                initial: g.is_initial(id),
                accepting: g.is_accepting(id),
                hopeful: c.is_hopeful(id),
            })
            .collect(),
        edges: g
            .edges()
            .iter()
            .map(|e| ProductExportEdge {
                src: e.src,
                a: e.action,
                dst: e.dst,
            })
            .collect(),
    }
}

/// Graphviz rendering with doomed nodes filled red and accepting nodes
/// drawn as double circles. Parallel edges for different actions are merged
/// into one edge listing the actions.
pub fn product_to_dot(e: &ProductExport) -> String {
    let mut out = String::new();
    out.push_str("digraph product {\n");
    writeln!(out, "  label=\"{}\";", e.formula.replace('"', "\\\"")).unwrap();
    out.push_str("  node [shape=circle, style=filled, fillcolor=white];\n");
    for n in &e.nodes {
        let shape = if n.accepting { "doublecircle" } else { "circle" };
        let color = if n.hopeful { "white" } else { "red" };
        let pen = if n.initial { ", penwidth=2" } else { "" };
        writeln!(
            out,
            "  n{} [label=\"s{} q{}\\n{}\", shape={shape}, fillcolor={color}{pen}];",
            n.id, n.s, n.q, n.bins
        )
        .unwrap();
    }
    let mut merged: BTreeMap<(usize, usize), Vec<&str>> = BTreeMap::new();
    for edge in &e.edges {
        merged.entry((edge.src, edge.dst)).or_default().push(edge.a.name());
    }
    for ((src, dst), actions) in merged {
        writeln!(out, "  n{src} -> n{dst} [label=\"{}\"];", actions.join(",")).unwrap();
    }
    out.push_str("}\n");
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShieldExport {
    pub version: u32,
    pub formula: String,
    pub mode: ShieldMode,
    pub entries: Vec<ShieldEntry>,
}

pub fn export_shield(sh: &Shield) -> ShieldExport {
    ShieldExport {
        version: PRODUCT_FORMAT_VERSION,
        formula: sh.automaton().formula_text().to_string(),
        mode: sh.mode(),
        entries: sh.table(),
    }
}
