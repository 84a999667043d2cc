//! Minimax-path ultrametric of a finite metric space.
//!
//! The bottleneck of the cheapest path between two points (the smallest
//! possible largest hop) is attained on a minimum spanning tree, so it is
//! read off the tree path.

use petgraph::algo::min_spanning_tree;
use petgraph::data::FromElements;
use petgraph::graph::{NodeIndex, UnGraph};
use petgraph::visit::EdgeRef;

use crate::error::Result;
use crate::space::{pow_q, CostSpace};

/// Explicit space whose distance is `(minimax bottleneck of d)^q`.
///
/// The exponent is already applied to the returned distances, so the
/// returned space carries `q = 1` and its cost equals its distance.
pub fn build_minimax_ultrametric(space: &CostSpace) -> Result<CostSpace> {
    let n = space.len();
    let bottleneck = minimax_bottleneck(space);
    let q = space.q();
    let rows: Vec<Vec<f64>> = (0..n)
        .map(|x| (0..n).map(|y| pow_q(bottleneck[x * n + y], q)).collect())
        .collect();
    CostSpace::explicit(&rows, 1.0, true)
}

/// Row-major matrix of minimax path bottlenecks.
pub fn minimax_bottleneck(space: &CostSpace) -> Vec<f64> {
    let n = space.len();
    let mut full = UnGraph::<(), f64>::with_capacity(n, n * n.saturating_sub(1) / 2);
    let nodes: Vec<NodeIndex> = (0..n).map(|_| full.add_node(())).collect();
    for x in 0..n {
        for y in x + 1..n {
            full.add_edge(nodes[x], nodes[y], space.dist(x, y));
        }
    }
    let tree = UnGraph::<(), f64>::from_elements(min_spanning_tree(&full));
    let mut out = vec![0.0; n * n];
    let mut stack = Vec::with_capacity(n);
    for src in 0..n {
        let mut seen = vec![false; n];
        seen[src] = true;
        stack.push((src, 0.0f64));
        while let Some((u, worst)) = stack.pop() {
            out[src * n + u] = worst;
            for e in tree.edges(NodeIndex::new(u)) {
                let v = if e.source().index() == u {
                    e.target().index()
                } else {
                    e.source().index()
                };
                if !seen[v] {
                    seen[v] = true;
                    stack.push((v, worst.max(*e.weight())));
                }
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn path_metric_bottleneck() {
        let s = CostSpace::explicit(
            &[vec![0.0, 1.0, 2.0], vec![1.0, 0.0, 1.0], vec![2.0, 1.0, 0.0]],
            1.0,
            true,
        )
        .unwrap();
        let u = build_minimax_ultrametric(&s).unwrap();
        assert_eq!(u.dist(0, 2), 1.0);
        assert_eq!(u.dist(0, 1), 1.0);
    }

    #[test]
    fn ultrametric_input_is_unchanged() {
        let rows = vec![
            vec![0.0, 1.0, 3.0, 3.0],
            vec![1.0, 0.0, 3.0, 3.0],
            vec![3.0, 3.0, 0.0, 2.0],
            vec![3.0, 3.0, 2.0, 0.0],
        ];
        let s = CostSpace::explicit(&rows, 1.0, true).unwrap();
        let u = build_minimax_ultrametric(&s).unwrap();
        assert_eq!(u.dist_matrix(), s.dist_matrix());
    }
}
