//! Dependency trees and the tree path between two targets.
//!
//! Parses arrive as CoNLL-like rows, one per token of
//! [`crate::preprocess::tokenize`]:
//!
//! ```text
//! index  form  lemma  pos  head  relation
//! ```
//!
//! Columns are tab separated (any whitespace is accepted when a row has no
//! tab). `index` is 1-based; `head` 0 marks the root.

use std::collections::HashSet;
use std::fmt;
use std::ops::Range;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::preprocess::TargetSpans;

/// Longest path accepted in [`PathMode::Original`].
pub const ORIGINAL_MAX_EDGES: usize = 4;
/// Longest path accepted in [`PathMode::Customized`].
pub const CUSTOMIZED_MAX_EDGES: usize = 16;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DepNode {
    pub form: String,
    pub lemma: String,
    pub pos: String,
    /// 1-based head index; 0 is the artificial root.
    pub head: usize,
    pub relation: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DependencyGraph {
    nodes: Vec<DepNode>,
}

impl DependencyGraph {
    /// Validates that the heads form a single-rooted tree.
    pub fn new(nodes: Vec<DepNode>) -> Result<DependencyGraph> {
        let n = nodes.len();
        let roots = nodes.iter().filter(|d| d.head == 0).count();
        if roots != 1 {
            return Err(Error::Graph(format!("expected exactly one root, found {roots}")));
        }
        if let Some((i, d)) = nodes.iter().enumerate().find(|(_, d)| d.head > n) {
            return Err(Error::Graph(format!(
                "token {} has head {} outside 0..={n}",
                i + 1,
                d.head
            )));
        }
        for start in 0..n {
            let mut cur = start;
            let mut steps = 0;
            while nodes[cur].head != 0 {
                cur = nodes[cur].head - 1;
                steps += 1;
                if steps > n {
                    return Err(Error::Graph(format!("cycle through token {}", start + 1)));
                }
            }
        }
        Ok(DependencyGraph { nodes })
    }

    pub fn parse_conll(block: &str) -> Result<DependencyGraph> {
        let mut nodes = Vec::new();
        for (lineno, line) in block.lines().enumerate() {
            let line = line.trim_end_matches('\r');
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let cols: Vec<&str> = if line.contains('\t') {
                line.split('\t').map(str::trim).collect()
            } else {
                line.split_whitespace().collect()
            };
            if cols.len() < 6 {
                return Err(Error::Graph(format!(
                    "row {}: expected 6 columns, found {}",
                    lineno + 1,
                    cols.len()
                )));
            }
            let index: usize = cols[0]
                .parse()
                .map_err(|_| Error::Graph(format!("row {}: bad index `{}`", lineno + 1, cols[0])))?;
            if index != nodes.len() + 1 {
                return Err(Error::Graph(format!(
                    "row {}: index {index} out of sequence",
                    lineno + 1
                )));
            }
            let head: usize = cols[4]
                .parse()
                .map_err(|_| Error::Graph(format!("row {}: bad head `{}`", lineno + 1, cols[4])))?;
            nodes.push(DepNode {
                form: cols[1].to_string(),
                lemma: cols[2].to_string(),
                pos: cols[3].to_string(),
                head,
                relation: cols[5].to_string(),
            });
        }
        DependencyGraph::new(nodes)
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Node for 0-based token `i`.
    pub fn node(&self, i: usize) -> &DepNode {
        &self.nodes[i]
    }

    fn parent(&self, i: usize) -> Option<usize> {
        match self.nodes[i].head {
            0 => None,
            h => Some(h - 1),
        }
    }

    /// 0-based chain from `i` up to the root, inclusive.
    fn ancestors(&self, i: usize) -> Vec<usize> {
        let mut chain = vec![i];
        let mut cur = i;
        while let Some(p) = self.parent(cur) {
            chain.push(p);
            cur = p;
        }
        chain
    }

    /// Syntactic head of a token range: the first token whose head lies outside it.
    pub fn span_head(&self, span: &Range<usize>) -> usize {
        span.clone()
            .find(|&i| self.parent(i).is_none_or(|p| !span.contains(&p)))
            .unwrap_or(span.end - 1)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PathMode {
    /// At most four edges, first target left of the common head and second right of it.
    Original,
    /// At most sixteen edges in any direction.
    Customized,
}

impl FromStr for PathMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "original" => Ok(PathMode::Original),
            "customized" | "customised" => Ok(PathMode::Customized),
            other => Err(Error::InvalidArgument(format!("unknown path mode `{other}`"))),
        }
    }
}

impl fmt::Display for PathMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PathMode::Original => "original",
            PathMode::Customized => "customized",
        })
    }
}

/// Position of a node relative to the lowest common ancestor of the targets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    /// On the first target's side; the path climbs from here.
    Up,
    /// The lowest common ancestor itself.
    Lca,
    /// On the second target's side; the path descends to here.
    Down,
}

impl Direction {
    fn flipped(self) -> Direction {
        match self {
            Direction::Up => Direction::Down,
            Direction::Down => Direction::Up,
            Direction::Lca => Direction::Lca,
        }
    }

    fn symbol(self) -> &'static str {
        match self {
            Direction::Up => "up",
            Direction::Lca => "lca",
            Direction::Down => "down",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PathNode {
    pub lemma: String,
    pub pos: String,
    pub relation: String,
    pub direction: Direction,
}

impl PathNode {
    /// `lemma/POS/relation/direction`, the unit hashed into path features.
    pub fn render(&self) -> String {
        format!(
            "{}/{}/{}/{}",
            self.lemma.to_lowercase(),
            self.pos,
            self.relation,
            self.direction.symbol()
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum DependencyPath {
    NoPath,
    Path(Vec<PathNode>),
}

impl DependencyPath {
    /// Edge count; `None` for [`DependencyPath::NoPath`].
    pub fn edges(&self) -> Option<usize> {
        match self {
            DependencyPath::NoPath => None,
            DependencyPath::Path(nodes) => Some(nodes.len() - 1),
        }
    }

    pub fn is_nopath(&self) -> bool {
        matches!(self, DependencyPath::NoPath)
    }

    /// The same path walked from the second target to the first.
    pub fn reversed(&self) -> DependencyPath {
        match self {
            DependencyPath::NoPath => DependencyPath::NoPath,
            DependencyPath::Path(nodes) => DependencyPath::Path(
                nodes
                    .iter()
                    .rev()
                    .map(|n| PathNode {
                        direction: n.direction.flipped(),
                        ..n.clone()
                    })
                    .collect(),
            ),
        }
    }

    /// Replaces the endpoint lemmas with `ITEM_A` / `ITEM_B`.
    pub fn with_target_placeholders(&self) -> DependencyPath {
        match self {
            DependencyPath::NoPath => DependencyPath::NoPath,
            DependencyPath::Path(nodes) => {
                let mut nodes = nodes.clone();
                let last = nodes.len() - 1;
                if last > 0 {
                    nodes[last].lemma = "ITEM_B".into();
                }
                nodes[0].lemma = "ITEM_A".into();
                DependencyPath::Path(nodes)
            }
        }
    }
}

/// Tree path between the head tokens of the two target spans.
///
/// `spans.first` is the start of the path. Returns [`DependencyPath::NoPath`]
/// when the mode's constraints reject the path.
pub fn extract_dependency_path(
    graph: &DependencyGraph,
    spans: &TargetSpans,
    mode: PathMode,
) -> Result<DependencyPath> {
    let n = graph.len();
    for span in [&spans.first, &spans.second] {
        if span.start >= span.end || span.end > n {
            return Err(Error::Graph(format!(
                "span {span:?} outside a parse of {n} tokens"
            )));
        }
    }
    let from = graph.span_head(&spans.first);
    let to = graph.span_head(&spans.second);

    let up_chain = graph.ancestors(from);
    let down_chain = graph.ancestors(to);
    let down_set: HashSet<usize> = down_chain.iter().copied().collect();
    let lca_pos = up_chain
        .iter()
        .position(|a| down_set.contains(a))
        .expect("a tree has a common root");
    let lca = up_chain[lca_pos];
    let rising = &up_chain[..lca_pos];
    let descending: Vec<usize> = down_chain
        .iter()
        .take_while(|&&d| d != lca)
        .copied()
        .collect::<Vec<_>>()
        .into_iter()
        .rev()
        .collect();

    let edges = rising.len() + descending.len();
    let accepted = match mode {
        PathMode::Customized => edges <= CUSTOMIZED_MAX_EDGES,
        PathMode::Original => {
            edges <= ORIGINAL_MAX_EDGES
                && monotone_descent(lca, rising.iter().rev().copied(), |child, parent| child < parent)
                && monotone_descent(lca, descending.iter().copied(), |child, parent| child > parent)
        }
    };
    if !accepted {
        return Ok(DependencyPath::NoPath);
    }

    let node = |i: usize, direction: Direction| {
        let d = graph.node(i);
        PathNode {
            lemma: d.lemma.clone(),
            pos: d.pos.clone(),
            relation: d.relation.clone(),
            direction,
        }
    };
    let mut nodes: Vec<PathNode> = rising.iter().map(|&i| node(i, Direction::Up)).collect();
    nodes.push(node(lca, Direction::Lca));
    nodes.extend(descending.iter().map(|&i| node(i, Direction::Down)));
    Ok(DependencyPath::Path(nodes))
}

/// Walking from `lca` through `chain` (parent to child), every step satisfies `ok(child, parent)`.
fn monotone_descent<I, F>(lca: usize, chain: I, ok: F) -> bool
where
    I: Iterator<Item = usize>,
    F: Fn(usize, usize) -> bool,
{
    let mut parent = lca;
    for child in chain {
        if !ok(child, parent) {
            return false;
        }
        parent = child;
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::VecDeque;

    // Python is better than MATLAB
    const PARSE: &str = "1\tPython\tpython\tNNP\t3\tnsubj\n\
                         2\tis\tbe\tVBZ\t3\tcop\n\
                         3\tbetter\tgood\tJJR\t0\troot\n\
                         4\tthan\tthan\tIN\t3\tprep\n\
                         5\tMATLAB\tmatlab\tNNP\t4\tpobj\n";

    fn spans(a: Range<usize>, b: Range<usize>) -> TargetSpans {
        TargetSpans {
            first: a,
            second: b,
            swapped: false,
        }
    }

    /// Breadth-first shortest path over the undirected tree.
    fn bfs_edges(graph: &DependencyGraph, from: usize, to: usize) -> usize {
        let n = graph.len();
        let mut adj = vec![Vec::new(); n];
        for i in 0..n {
            if let Some(p) = graph.parent(i) {
                adj[i].push(p);
                adj[p].push(i);
            }
        }
        let mut dist = vec![usize::MAX; n];
        dist[from] = 0;
        let mut queue = VecDeque::from([from]);
        while let Some(u) = queue.pop_front() {
            for &v in &adj[u] {
                if dist[v] == usize::MAX {
                    dist[v] = dist[u] + 1;
                    queue.push_back(v);
                }
            }
        }
        dist[to]
    }

    #[test]
    fn path_through_comparative() {
        let g = DependencyGraph::parse_conll(PARSE).unwrap();
        let p = extract_dependency_path(&g, &spans(0..1, 4..5), PathMode::Customized).unwrap();
        assert_eq!(p.edges(), Some(bfs_edges(&g, 0, 4)));
        assert_eq!(p.edges(), Some(3));
        let DependencyPath::Path(nodes) = &p else { panic!() };
        let lemmas: Vec<&str> = nodes.iter().map(|n| n.lemma.as_str()).collect();
        assert_eq!(lemmas, ["python", "good", "than", "matlab"]);
        assert_eq!(nodes[1].direction, Direction::Lca);
        assert_eq!(nodes[0].render(), "python/NNP/nsubj/up");

        // left target left of the head, right target right of it: original accepts
        let o = extract_dependency_path(&g, &spans(0..1, 4..5), PathMode::Original).unwrap();
        assert_eq!(o, p);
    }

    #[test]
    fn same_head_token() {
        let g = DependencyGraph::parse_conll(PARSE).unwrap();
        let p = extract_dependency_path(&g, &spans(2..3, 2..3), PathMode::Customized).unwrap();
        assert_eq!(p.edges(), Some(0));
    }

    #[test]
    fn original_rejects_long_and_misdirected_paths() {
        // chain 1 <- 2 <- 3 <- 4 <- 5 <- 6(root): five edges from 1 to 6
        let rows: String = (1..=6)
            .map(|i| {
                let head = if i == 6 { 0 } else { i + 1 };
                format!("{i}\tw{i}\tw{i}\tNN\t{head}\tdep\n")
            })
            .collect();
        let g = DependencyGraph::parse_conll(&rows).unwrap();
        let s = spans(0..1, 5..6);
        assert!(extract_dependency_path(&g, &s, PathMode::Original).unwrap().is_nopath());
        assert_eq!(
            extract_dependency_path(&g, &s, PathMode::Customized).unwrap().edges(),
            Some(5)
        );

        // second target to the left of the common head
        let g = DependencyGraph::parse_conll(PARSE).unwrap();
        let s = spans(0..1, 1..2);
        assert!(extract_dependency_path(&g, &s, PathMode::Original).unwrap().is_nopath());
        assert_eq!(
            extract_dependency_path(&g, &s, PathMode::Customized).unwrap().edges(),
            Some(2)
        );
    }

    #[test]
    fn reversal_symmetry() {
        let g = DependencyGraph::parse_conll(PARSE).unwrap();
        let fwd = extract_dependency_path(&g, &spans(0..1, 4..5), PathMode::Customized).unwrap();
        let rev = extract_dependency_path(&g, &spans(4..5, 0..1), PathMode::Customized).unwrap();
        assert_eq!(rev, fwd.reversed());
    }

    #[test]
    fn malformed_graphs() {
        let two_roots = "1\ta\ta\tNN\t0\troot\n2\tb\tb\tNN\t0\troot\n";
        assert!(matches!(DependencyGraph::parse_conll(two_roots), Err(Error::Graph(_))));
        let cycle = "1\ta\ta\tNN\t2\tdep\n2\tb\tb\tNN\t1\tdep\n3\tc\tc\tNN\t0\troot\n";
        assert!(matches!(DependencyGraph::parse_conll(cycle), Err(Error::Graph(_))));
        let out_of_range = "1\ta\ta\tNN\t7\tdep\n2\tb\tb\tNN\t0\troot\n";
        assert!(DependencyGraph::parse_conll(out_of_range).is_err());
        let short_row = "1\ta\tNN\t0\n";
        assert!(DependencyGraph::parse_conll(short_row).is_err());
    }

    #[test]
    fn multiword_span_head() {
        // Windows <- 8 (nummod)
        let g = DependencyGraph::parse_conll(
            "1\tWindows\twindows\tNNP\t3\tnsubj\n2\t8\t8\tCD\t1\tnummod\n3\twins\twin\tVBZ\t0\troot\n",
        )
        .unwrap();
        assert_eq!(g.span_head(&(0..2)), 0);
    }

    #[test]
    fn placeholders() {
        let g = DependencyGraph::parse_conll(PARSE).unwrap();
        let p = extract_dependency_path(&g, &spans(0..1, 4..5), PathMode::Customized)
            .unwrap()
            .with_target_placeholders();
        let DependencyPath::Path(nodes) = p else { panic!() };
        assert_eq!(nodes[0].lemma, "ITEM_A");
        assert_eq!(nodes[3].lemma, "ITEM_B");
        assert_eq!(nodes[1].lemma, "good");
    }
}
