//! Undirected simple-graph storage for the hidden oracle.
//!
//! Node ids are contiguous integers. Loading an edge list remaps arbitrary
//! labels to ids and keeps the label map so results can be translated back.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};

pub type NodeId = usize;

/// The hidden ground-truth graph. Answers neighbor queries during probing.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OracleGraph {
    adjacency: Vec<Vec<NodeId>>,
    edge_count: usize,
    /// Original labels by node id, when the graph came from an edge list.
    labels: Option<Vec<String>>,
}

impl OracleGraph {
    /// Builds a graph on `node_count` nodes from an edge iterator.
    /// Self-loops and duplicate edges are dropped.
    pub fn from_edges<I>(node_count: usize, edges: I) -> Self
    where
        I: IntoIterator<Item = (NodeId, NodeId)>,
    {
        let mut adjacency = vec![Vec::new(); node_count];
        for (u, v) in edges {
            assert!(u < node_count && v < node_count, "edge endpoint out of range");
            if u == v {
                continue;
            }
            if let Err(pos) = adjacency[u].binary_search(&v) {
                adjacency[u].insert(pos, v);
                let pos_v = adjacency[v].binary_search(&u).unwrap_err();
                adjacency[v].insert(pos_v, u);
            }
        }
        let edge_count = adjacency.iter().map(Vec::len).sum::<usize>() / 2;
        OracleGraph {
            adjacency,
            edge_count,
            labels: None,
        }
    }

    pub fn node_count(&self) -> usize {
        self.adjacency.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edge_count
    }

    /// Neighbors of `u` in ascending id order.
    pub fn neighbors(&self, u: NodeId) -> &[NodeId] {
        &self.adjacency[u]
    }

    pub fn degree(&self, u: NodeId) -> usize {
        self.adjacency[u].len()
    }

    pub fn has_edge(&self, u: NodeId, v: NodeId) -> bool {
        self.adjacency[u].binary_search(&v).is_ok()
    }

    /// Edges as (u, v) pairs with u < v, in ascending order.
    pub fn edges(&self) -> impl Iterator<Item = (NodeId, NodeId)> + '_ {
        self.adjacency
            .iter()
            .enumerate()
            .flat_map(|(u, nbrs)| nbrs.iter().filter(move |&&v| u < v).map(move |&v| (u, v)))
    }

    /// Original label of a node, when loaded from an edge list.
    pub fn label(&self, u: NodeId) -> Option<&str> {
        self.labels.as_ref().map(|l| l[u].as_str())
    }

    pub fn has_labels(&self) -> bool {
        self.labels.is_some()
    }

    /// Global clustering coefficient (transitivity): 3 * triangles / wedges.
    /// Zero when the graph has no wedge.
    pub fn global_clustering(&self) -> f64 {
        let mut triangles_x3 = 0u64;
        let mut wedges = 0u64;
        for u in 0..self.node_count() {
            let d = self.degree(u) as u64;
            wedges += d * d.saturating_sub(1) / 2;
            // Count triangle corners at u: adjacent pairs among its neighbors.
            let nbrs = &self.adjacency[u];
            for (i, &a) in nbrs.iter().enumerate() {
                for &b in &nbrs[i + 1..] {
                    if self.has_edge(a, b) {
                        triangles_x3 += 1;
                    }
                }
            }
        }
        if wedges == 0 {
            0.0
        } else {
            triangles_x3 as f64 / wedges as f64
        }
    }

    /// Writes the graph in edge-list format: one `u v` line per edge.
    pub fn write_edge_list(&self, path: &Path) -> Result<()> {
        let file = File::create(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let mut w = BufWriter::new(file);
        let io_err = |source| Error::Io {
            path: path.to_path_buf(),
            source,
        };
        for (u, v) in self.edges() {
            writeln!(w, "{} {}", u, v).map_err(io_err)?;
        }
        w.flush().map_err(io_err)
    }

    /// Writes the label map as `original_label<TAB>integer_id` lines.
    /// No-op for graphs that never had labels.
    pub fn write_label_map(&self, path: &Path) -> Result<()> {
        let Some(labels) = &self.labels else {
            return Ok(());
        };
        let file = File::create(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let mut w = BufWriter::new(file);
        let io_err = |source| Error::Io {
            path: path.to_path_buf(),
            source,
        };
        for (id, label) in labels.iter().enumerate() {
            writeln!(w, "{}\t{}", label, id).map_err(io_err)?;
        }
        w.flush().map_err(io_err)
    }
}

/// Loads an undirected graph from a whitespace-separated edge list.
///
/// Lines starting with `#` are comments. Node labels may be arbitrary strings;
/// they are remapped to contiguous integer ids in order of first appearance.
/// Self-loops and duplicate edges are dropped. A file with lines but no usable
/// edge is an error; a fully empty file yields the empty graph.
pub fn load_edge_list(path: &Path) -> Result<OracleGraph> {
    let file = File::open(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let reader = BufReader::new(file);

    let mut ids: HashMap<String, NodeId> = HashMap::new();
    let mut labels: Vec<String> = Vec::new();
    let mut edges: Vec<(NodeId, NodeId)> = Vec::new();
    let mut saw_content = false;

    for (lineno, line) in reader.lines().enumerate() {
        let line = line.map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        saw_content = true;
        let mut parts = trimmed.split_whitespace();
        let (Some(a), Some(b)) = (parts.next(), parts.next()) else {
            return Err(Error::MalformedLine {
                path: path.to_path_buf(),
                line: lineno + 1,
                msg: format!("expected two labels, got {:?}", trimmed),
            });
        };
        if parts.next().is_some() {
            return Err(Error::MalformedLine {
                path: path.to_path_buf(),
                line: lineno + 1,
                msg: format!("expected two labels, got {:?}", trimmed),
            });
        }
        let mut intern = |label: &str| -> NodeId {
            *ids.entry(label.to_string()).or_insert_with(|| {
                labels.push(label.to_string());
                labels.len() - 1
            })
        };
        let u = intern(a);
        let v = intern(b);
        edges.push((u, v));
    }

    if saw_content && edges.iter().all(|&(u, v)| u == v) {
        return Err(Error::EmptyEdgeList {
            path: path.to_path_buf(),
        });
    }

    let mut graph = OracleGraph::from_edges(labels.len(), edges);
    graph.labels = Some(labels);
    Ok(graph)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write as _;

    fn write_temp(contents: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(contents.as_bytes()).unwrap();
        f
    }

    #[test]
    fn empty_file_is_empty_graph() {
        let f = write_temp("");
        let g = load_edge_list(f.path()).unwrap();
        assert_eq!(g.node_count(), 0);
        assert_eq!(g.edge_count(), 0);
    }

    #[test]
    fn dedup_and_self_loop_removal() {
        let f = write_temp("a b\nb a\na a\n");
        let g = load_edge_list(f.path()).unwrap();
        assert_eq!(g.node_count(), 2);
        assert_eq!(g.edge_count(), 1);
        assert!(g.has_edge(0, 1));
    }

    #[test]
    fn comments_and_blank_lines_skipped() {
        let f = write_temp("# header\n\n1 2\n# trailing\n2 3\n");
        let g = load_edge_list(f.path()).unwrap();
        assert_eq!(g.node_count(), 3);
        assert_eq!(g.edge_count(), 2);
    }

    #[test]
    fn malformed_line_reports_number() {
        let f = write_temp("a b\nc\n");
        match load_edge_list(f.path()) {
            Err(Error::MalformedLine { line, .. }) => assert_eq!(line, 2),
            other => panic!("expected malformed-line error, got {:?}", other.map(|_| ())),
        }
    }

    #[test]
    fn three_column_line_rejected() {
        let f = write_temp("a b 3\n");
        assert!(matches!(
            load_edge_list(f.path()),
            Err(Error::MalformedLine { line: 1, .. })
        ));
    }

    #[test]
    fn only_self_loops_is_empty() {
        let f = write_temp("a a\nb b\n");
        assert!(matches!(load_edge_list(f.path()), Err(Error::EmptyEdgeList { .. })));
    }

    #[test]
    fn labels_round_trip() {
        let f = write_temp("alpha beta\nbeta gamma\n");
        let g = load_edge_list(f.path()).unwrap();
        assert_eq!(g.label(0), Some("alpha"));
        assert_eq!(g.label(2), Some("gamma"));

        let dir = tempfile::tempdir().unwrap();
        let map_path = dir.path().join("labels.tsv");
        g.write_label_map(&map_path).unwrap();
        let contents = std::fs::read_to_string(&map_path).unwrap();
        assert_eq!(contents, "alpha\t0\nbeta\t1\ngamma\t2\n");
    }

    #[test]
    fn edge_list_round_trip() {
        let g = OracleGraph::from_edges(4, vec![(0, 1), (1, 2), (2, 3), (0, 3)]);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("g.txt");
        g.write_edge_list(&path).unwrap();
        let g2 = load_edge_list(&path).unwrap();
        assert_eq!(g2.node_count(), 4);
        assert_eq!(g2.edge_count(), 4);
    }

    #[test]
    fn undirected_invariant() {
        let g = OracleGraph::from_edges(5, vec![(0, 1), (3, 1), (2, 4), (4, 2), (1, 0)]);
        for u in 0..g.node_count() {
            for &v in g.neighbors(u) {
                assert!(g.has_edge(v, u));
                assert_ne!(u, v);
            }
        }
        assert_eq!(
            g.edge_count(),
            (0..g.node_count()).map(|u| g.degree(u)).sum::<usize>() / 2
        );
    }

    #[test]
    fn global_clustering_triangle_plus_tail() {
        // Triangle 0-1-2 with a pendant 3 attached to 0: 3 triangles-at-corner,
        // wedges = 3 + 1 + 1 + 0 + (deg0=3 -> 3) = C(3,2)+C(2,2 wedge counts)...
        let g = OracleGraph::from_edges(4, vec![(0, 1), (1, 2), (2, 0), (0, 3)]);
        // wedges: node0 C(3,2)=3, node1 C(2,2)=1, node2 1, node3 0 => 5
        // triangle corners: 3 (one triangle)
        let expected = 3.0 / 5.0;
        assert!((g.global_clustering() - expected).abs() < 1e-12);
    }
}
