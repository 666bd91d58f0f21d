use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{IkfError, Result};

/// One node of a binary tree stored in a flat arena.
///
/// A split at depth `d` sends samples with `value < threshold` to `left`.
/// The root split has depth 1; leaves sit one level below their parent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Node {
    Split {
        var: usize,
        threshold: f64,
        depth: usize,
        left: usize,
        right: usize,
    },
    Leaf {
        value: f64,
        depth: usize,
    },
}

impl Node {
    pub fn depth(&self) -> usize {
        match self {
            Node::Split { depth, .. } | Node::Leaf { depth, .. } => *depth,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    nodes: Vec<Node>,
}

impl Tree {
    pub(crate) fn from_arena(nodes: Vec<Node>) -> Self {
        debug_assert!(!nodes.is_empty());
        Tree { nodes }
    }

    pub fn leaf(value: f64) -> Self {
        Tree {
            nodes: vec![Node::Leaf { value, depth: 1 }],
        }
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn root(&self) -> &Node {
        &self.nodes[0]
    }

    pub fn root_variable(&self) -> Option<usize> {
        match self.root() {
            Node::Split { var, .. } => Some(*var),
            Node::Leaf { .. } => None,
        }
    }

    /// Prediction for a row whose variable values are given by `value`.
    #[inline]
    pub fn predict_with(&self, value: impl Fn(usize) -> f64) -> f64 {
        let mut at = 0;
        loop {
            match &self.nodes[at] {
                Node::Split {
                    var,
                    threshold,
                    left,
                    right,
                    ..
                } => at = if value(*var) < *threshold { *left } else { *right },
                Node::Leaf { value, .. } => return *value,
            }
        }
    }

    pub fn predict_row(&self, data: &Dataset, row: usize) -> f64 {
        self.predict_with(|var| data.value(row, var))
    }

    pub fn uses(&self, var: usize) -> bool {
        self.nodes
            .iter()
            .any(|n| matches!(n, Node::Split { var: v, .. } if *v == var))
    }

    /// Distinct split variables, ascending.
    pub fn split_variables(&self) -> Vec<usize> {
        let mut vars: Vec<usize> = self
            .nodes
            .iter()
            .filter_map(|n| match n {
                Node::Split { var, .. } => Some(*var),
                Node::Leaf { .. } => None,
            })
            .collect();
        vars.sort_unstable();
        vars.dedup();
        vars
    }

    /// Deepest split level (0 for a single leaf).
    pub fn split_depth(&self) -> usize {
        self.nodes
            .iter()
            .filter_map(|n| match n {
                Node::Split { depth, .. } => Some(*depth),
                Node::Leaf { .. } => None,
            })
            .max()
            .unwrap_or(0)
    }

    /// Variable sequence from the root to every split node at depth `d`.
    pub fn depth_paths(&self, d: usize) -> Vec<Vec<usize>> {
        let mut out = Vec::new();
        let mut prefix = Vec::with_capacity(d);
        self.collect_paths(0, d, &mut prefix, &mut out);
        out
    }

    fn collect_paths(&self, at: usize, d: usize, prefix: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if let Node::Split {
            var,
            depth,
            left,
            right,
            ..
        } = &self.nodes[at]
        {
            prefix.push(*var);
            if *depth == d {
                out.push(prefix.clone());
            } else {
                self.collect_paths(*left, d, prefix, out);
                self.collect_paths(*right, d, prefix, out);
            }
            prefix.pop();
        }
    }

    /// Indented text dump, one node per line in pre-order (left before right):
    /// `<depth> <variable> <threshold>` for splits, `<depth> leaf <value>` for leaves.
    pub fn to_text(&self, names: &[String]) -> String {
        let mut out = String::new();
        for_each_preorder(&self.nodes, 0, &mut |node| {
            let indent = "  ".repeat(node.depth() - 1);
            match node {
                Node::Split {
                    var,
                    threshold,
                    depth,
                    ..
                } => {
                    let _ = writeln!(out, "{indent}{depth} {} {threshold}", names[*var]);
                }
                Node::Leaf { value, depth } => {
                    let _ = writeln!(out, "{indent}{depth} leaf {value}");
                }
            }
        });
        out
    }

    /// Parses the format written by [`Tree::to_text`].
    pub fn from_text(text: &str, names: &[String]) -> Result<Tree> {
        let lines: Vec<&str> = text.lines().map(str::trim).filter(|l| !l.is_empty()).collect();
        let mut nodes = Vec::new();
        let mut cursor = 0;
        parse_node(&lines, &mut cursor, 1, names, &mut nodes)?;
        if cursor != lines.len() {
            return Err(IkfError::InvalidParam(format!(
                "tree text has {} trailing lines",
                lines.len() - cursor
            )));
        }
        Ok(Tree { nodes })
    }
}

fn for_each_preorder(nodes: &[Node], at: usize, f: &mut impl FnMut(&Node)) {
    f(&nodes[at]);
    if let Node::Split { left, right, .. } = &nodes[at] {
        for_each_preorder(nodes, *left, f);
        for_each_preorder(nodes, *right, f);
    }
}

fn parse_node(
    lines: &[&str],
    cursor: &mut usize,
    expected_depth: usize,
    names: &[String],
    nodes: &mut Vec<Node>,
) -> Result<usize> {
    let bad = |msg: String| IkfError::InvalidParam(format!("tree text: {msg}"));
    let line = lines
        .get(*cursor)
        .ok_or_else(|| bad("unexpected end of input".into()))?;
    *cursor += 1;
    let fields: Vec<&str> = line.split_whitespace().collect();
    if fields.len() != 3 {
        return Err(bad(format!("expected 3 fields in `{line}`")));
    }
    let depth: usize = fields[0].parse().map_err(|_| bad(format!("bad depth in `{line}`")))?;
    if depth != expected_depth {
        return Err(bad(format!("depth {depth} where {expected_depth} expected")));
    }
    let number: f64 = fields[2].parse().map_err(|_| bad(format!("bad number in `{line}`")))?;
    let at = nodes.len();
    if fields[1] == "leaf" {
        nodes.push(Node::Leaf { value: number, depth });
        return Ok(at);
    }
    let var = names
        .iter()
        .position(|n| n == fields[1])
        .ok_or_else(|| IkfError::UnknownVariable(fields[1].to_string()))?;
    nodes.push(Node::Leaf { value: 0.0, depth });
    let left = parse_node(lines, cursor, depth + 1, names, nodes)?;
    let right = parse_node(lines, cursor, depth + 1, names, nodes)?;
    nodes[at] = Node::Split {
        var,
        threshold: number,
        depth,
        left,
        right,
    };
    Ok(at)
}
