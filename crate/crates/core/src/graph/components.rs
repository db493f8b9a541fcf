use std::collections::VecDeque;

use super::Graph;

/// Connected components, each as a sorted node list. Components are ordered
/// by their smallest node index.
pub fn connected_components(g: &Graph) -> Vec<Vec<usize>> {
    let mut seen = vec![false; g.n_nodes()];
    let mut components = Vec::new();
    let mut queue = VecDeque::new();
    for root in 0..g.n_nodes() {
        if seen[root] {
            continue;
        }
        seen[root] = true;
        queue.push_back(root);
        let mut members = Vec::new();
        while let Some(u) = queue.pop_front() {
            members.push(u);
            for &v in g.neighbors(u) {
                if !seen[v] {
                    seen[v] = true;
                    queue.push_back(v);
                }
            }
        }
        members.sort_unstable();
        components.push(members);
    }
    components
}

/// Induced subgraph on the largest connected component. Ties go to the
/// component containing the smallest node index. Returns the subgraph and,
/// for each of its nodes, the index in `g`.
pub fn largest_connected_component(g: &Graph) -> (Graph, Vec<usize>) {
    let mut best: Vec<usize> = Vec::new();
    for component in connected_components(g) {
        if component.len() > best.len() {
            best = component;
        }
    }
    (g.induced_subgraph(&best), best)
}
