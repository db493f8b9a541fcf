use std::collections::BTreeMap;
use std::fmt::Write as _;

use super::{BuildReport, Graph, GraphError};

/// A graph read from external ids, with the dense relabeling that was applied.
#[derive(Debug, Clone)]
pub struct LoadedGraph {
    pub graph: Graph,
    /// `id_map[new_id]` is the original id of node `new_id`.
    pub id_map: Vec<u64>,
    pub report: BuildReport,
}

/// Parses a whitespace-separated edge list. Lines starting with `#` and blank
/// lines are skipped. Original ids are relabeled densely in ascending order,
/// except that a `# nodes N ...` header (as written by [`write_edge_list`])
/// declares ids `0..N`, so isolated nodes survive a round trip.
pub fn load_edge_list(text: &str) -> Result<LoadedGraph, GraphError> {
    let mut raw = Vec::new();
    let mut declared: Option<usize> = None;
    for (index, line) in text.lines().enumerate() {
        let line_no = index + 1;
        let trimmed = line.trim();
        if let Some(comment) = trimmed.strip_prefix('#') {
            let mut words = comment.split_whitespace();
            if raw.is_empty() && declared.is_none() && words.next() == Some("nodes") {
                declared = words.next().and_then(|n| n.parse().ok());
            }
            continue;
        }
        if trimmed.is_empty() {
            continue;
        }
        let mut tokens = trimmed.split_whitespace();
        let mut next_id = |what: &str| -> Result<u64, GraphError> {
            let token = tokens.next().ok_or_else(|| GraphError::Parse {
                line: line_no,
                message: format!("missing {what} node id"),
            })?;
            token.parse::<u64>().map_err(|_| GraphError::Parse {
                line: line_no,
                message: format!("invalid node id {token:?}"),
            })
        };
        let source = next_id("source")?;
        let target = next_id("target")?;
        if let Some(extra) = tokens.next() {
            return Err(GraphError::Parse {
                line: line_no,
                message: format!("unexpected trailing token {extra:?}"),
            });
        }
        raw.push((source, target));
    }
    if let Some(n) = declared {
        if n == 0 {
            return Err(GraphError::Empty);
        }
        if let Some(&(a, b)) = raw.iter().find(|&&(a, b)| a.max(b) >= n as u64) {
            return Err(GraphError::NodeOutOfRange {
                index: a.max(b) as usize,
                n_nodes: n,
            });
        }
        let (graph, report) = Graph::from_pairs(n, raw.iter().map(|&(a, b)| (a as usize, b as usize)))?;
        return Ok(LoadedGraph {
            graph,
            id_map: (0..n as u64).collect(),
            report,
        });
    }
    if raw.is_empty() {
        return Err(GraphError::Empty);
    }

    let mut dense: BTreeMap<u64, usize> = raw.iter().flat_map(|&(a, b)| [(a, 0), (b, 0)]).collect();
    for (t, slot) in dense.values_mut().enumerate() {
        *slot = t;
    }
    let id_map: Vec<u64> = dense.keys().copied().collect();
    let (graph, report) = Graph::from_pairs(id_map.len(), raw.iter().map(|(a, b)| (dense[a], dense[b])))?;
    Ok(LoadedGraph { graph, id_map, report })
}

/// Writes one `i j` line per edge using the graph's own node indices.
///
/// Isolated nodes cannot be represented in this format; a header comment
/// records the node count so readers can tell.
pub fn write_edge_list(graph: &Graph) -> String {
    let mut out = String::with_capacity(graph.n_edges() * 12);
    let _ = writeln!(out, "# nodes {} edges {}", graph.n_nodes(), graph.n_edges());
    for &(i, j) in graph.edges() {
        let _ = writeln!(out, "{i} {j}");
    }
    out
}

/// CSV `orig_id,new_id` rows for a relabeling.
pub fn write_id_map(id_map: &[u64]) -> String {
    let mut out = String::from("orig_id,new_id\n");
    for (new_id, orig) in id_map.iter().enumerate() {
        let _ = writeln!(out, "{orig},{new_id}");
    }
    out
}

/// Reads a labels file: one integer per line, line `k` labelling node `k`.
pub fn read_labels(text: &str) -> Result<Vec<i64>, GraphError> {
    let mut labels = Vec::new();
    for (index, line) in text.lines().enumerate() {
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        labels.push(trimmed.parse::<i64>().map_err(|_| GraphError::Parse {
            line: index + 1,
            message: format!("invalid label {trimmed:?}"),
        })?);
    }
    if labels.is_empty() {
        return Err(GraphError::Empty);
    }
    Ok(labels)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn path_graph() {
        let loaded = load_edge_list("0 1\n1 2").unwrap();
        assert_eq!(loaded.graph.n_nodes(), 3);
        assert_eq!(loaded.graph.edges(), &[(0, 1), (1, 2)]);
    }

    #[test]
    fn duplicates_and_self_loops() {
        let loaded = load_edge_list("1 0\n0 1\n2 2").unwrap();
        assert_eq!(loaded.graph.n_nodes(), 3);
        assert_eq!(loaded.graph.edges(), &[(0, 1)]);
        assert_eq!(loaded.report.self_loops_dropped, 1);
        assert_eq!(loaded.report.duplicates_collapsed, 1);
    }

    #[test]
    fn sparse_ids_are_relabeled() {
        let loaded = load_edge_list("# comment\n10\t30\n\n30 20\n").unwrap();
        assert_eq!(loaded.id_map, vec![10, 20, 30]);
        assert_eq!(loaded.graph.edges(), &[(0, 2), (1, 2)]);
        assert_eq!(write_id_map(&loaded.id_map), "orig_id,new_id\n10,0\n20,1\n30,2\n");
    }

    #[test]
    fn malformed_line_reports_line_number() {
        let err = load_edge_list("0 1\n1 x\n").unwrap_err();
        assert!(matches!(err, GraphError::Parse { line: 2, .. }), "{err:?}");
        let err = load_edge_list("0 1\n-3 1\n").unwrap_err();
        assert!(matches!(err, GraphError::Parse { line: 2, .. }), "{err:?}");
        let err = load_edge_list("0\n").unwrap_err();
        assert!(matches!(err, GraphError::Parse { line: 1, .. }), "{err:?}");
    }

    #[test]
    fn empty_input_is_an_error() {
        assert_eq!(load_edge_list("").unwrap_err(), GraphError::Empty);
        assert_eq!(load_edge_list("# only a comment\n").unwrap_err(), GraphError::Empty);
    }

    #[test]
    fn node_count_header_keeps_isolated_nodes() {
        let (g, _) = Graph::from_pairs(5, [(1, 3)]).unwrap();
        let text = write_edge_list(&g);
        assert!(text.starts_with("# nodes 5 edges 1\n"));
        let loaded = load_edge_list(&text).unwrap();
        assert_eq!(loaded.graph, g);
        assert_eq!(loaded.id_map, vec![0, 1, 2, 3, 4]);
        assert_eq!(load_edge_list("# nodes 3\n").unwrap().graph.n_edges(), 0);
        assert!(matches!(
            load_edge_list("# nodes 2\n0 2\n"),
            Err(GraphError::NodeOutOfRange { index: 2, n_nodes: 2 })
        ));
        // Only a header before the first edge counts.
        assert_eq!(load_edge_list("5 6\n# nodes 9\n").unwrap().graph.n_nodes(), 2);
    }

    #[test]
    fn labels_parse() {
        assert_eq!(read_labels("7\n8\n\n12\n").unwrap(), vec![7, 8, 12]);
        assert!(matches!(
            read_labels("7\nseven\n"),
            Err(GraphError::Parse { line: 2, .. })
        ));
    }

    proptest! {
        #[test]
        fn write_then_load_preserves_edges(raw in proptest::collection::vec((0usize..40, 0usize..40), 1..150)) {
            let text: String = raw.iter().map(|(a, b)| format!("{a} {b}\n")).collect();
            let first = load_edge_list(&text).unwrap();
            prop_assume!(first.graph.n_edges() > 0);
            let second = load_edge_list(&write_edge_list(&first.graph)).unwrap();
            prop_assert_eq!(&second.graph, &first.graph);
        }
    }
}
