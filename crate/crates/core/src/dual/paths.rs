//! Shortest paths inside one stage.
//!
//! Stage weights `w` can be negative (an energy price on a downhill
//! segment), so every source runs Bellman-Ford. A negative cycle would
//! mean a loop that gains energy, which a physical network cannot have;
//! it is reported rather than worked around.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::network::{EdgeId, NodeId, TransportGraph};

/// Single-source result: distance and predecessor edge per node.
#[derive(Debug, Clone, PartialEq)]
pub struct ShortestPaths {
    pub source: NodeId,
    pub dist: Vec<f64>,
    pred: Vec<Option<EdgeId>>,
}

impl ShortestPaths {
    pub fn cost(&self, to: NodeId) -> f64 {
        self.dist[to.index()]
    }

    /// Edge sequence from the source to `to`, or `None` if unreachable.
    pub fn path(&self, graph: &TransportGraph, to: NodeId) -> Option<Vec<EdgeId>> {
        if !self.dist[to.index()].is_finite() {
            return None;
        }
        let mut out = Vec::new();
        let mut at = to;
        while at != self.source {
            let e = self.pred[at.index()]?;
            out.push(e);
            at = graph.edge(e).from;
            if out.len() > graph.node_count() {
                return None;
            }
        }
        out.reverse();
        Some(out)
    }
}

/// Bellman-Ford from `source` with per-edge `weights`.
pub fn bellman_ford(
    graph: &TransportGraph,
    weights: &[f64],
    source: NodeId,
    stage: usize,
) -> Result<ShortestPaths> {
    let n = graph.node_count();
    let mut dist = vec![f64::INFINITY; n];
    let mut pred = vec![None; n];
    dist[source.index()] = 0.0;
    for _ in 0..n {
        let mut changed = false;
        for e in graph.edges() {
            let du = dist[e.from.index()];
            if !du.is_finite() {
                continue;
            }
            let cand = du + weights[e.id.index()];
            if cand < dist[e.to.index()] {
                dist[e.to.index()] = cand;
                pred[e.to.index()] = Some(e.id);
                changed = true;
            }
        }
        if !changed {
            return Ok(ShortestPaths { source, dist, pred });
        }
    }
    // still relaxing after n rounds: find a node on the cycle for the report
    for e in graph.edges() {
        let du = dist[e.from.index()];
        if du.is_finite() && du + weights[e.id.index()] < dist[e.to.index()] {
            return Err(Error::NegativeCycle { stage, node: e.to });
        }
    }
    Ok(ShortestPaths { source, dist, pred })
}

/// `SP^i(u, ·)` for every source `u` in `{origin} ∪ stations`.
#[derive(Debug, Clone, PartialEq)]
pub struct StagePaths {
    pub stage: usize,
    pub from_origin: ShortestPaths,
    /// One entry per station, in the graph's station order.
    pub from_station: Vec<ShortestPaths>,
}

impl StagePaths {
    pub fn from_source(&self, graph: &TransportGraph, node: NodeId) -> Option<&ShortestPaths> {
        if node == self.from_origin.source {
            return Some(&self.from_origin);
        }
        graph
            .stations()
            .iter()
            .position(|s| s.node == node)
            .map(|k| &self.from_station[k])
    }
}

/// All source-to-node shortest paths needed for stage `stage` (1-based).
pub fn all_pairs_stage_paths(
    graph: &TransportGraph,
    origin: NodeId,
    weights: &[f64],
    stage: usize,
) -> Result<StagePaths> {
    let from_origin = bellman_ford(graph, weights, origin, stage)?;
    let from_station = graph
        .stations()
        .iter()
        .map(|s| bellman_ford(graph, weights, s.node, stage))
        .collect::<Result<Vec<_>>>()?;
    Ok(StagePaths {
        stage,
        from_origin,
        from_station,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::{Node, RoadSegment};

    fn graph(n: u32, arcs: &[(u32, u32)]) -> TransportGraph {
        let nodes = (0..n)
            .map(|i| Node {
                id: NodeId(i),
                station: false,
            })
            .collect();
        let edges = arcs
            .iter()
            .enumerate()
            .map(|(i, (a, b))| RoadSegment {
                id: EdgeId(i as u32),
                from: NodeId(*a),
                to: NodeId(*b),
                length_km: 1.0,
                speed_min_kmh: 1.0,
                speed_max_kmh: 1.0,
                power_coeffs: [0.0; 4],
            })
            .collect();
        TransportGraph::new(nodes, edges, vec![]).unwrap()
    }

    #[test]
    fn line_sums_weights() {
        let g = graph(3, &[(0, 1), (1, 2)]);
        let sp = bellman_ford(&g, &[1.0, 2.0], NodeId(0), 1).unwrap();
        assert_eq!(sp.cost(NodeId(2)), 3.0);
        assert_eq!(sp.path(&g, NodeId(2)).unwrap(), vec![EdgeId(0), EdgeId(1)]);
        assert_eq!(sp.path(&g, NodeId(0)).unwrap(), vec![]);
    }

    #[test]
    fn negative_edges_without_cycles() {
        let g = graph(4, &[(0, 1), (0, 2), (2, 1), (1, 3)]);
        let sp = bellman_ford(&g, &[1.0, 2.0, -3.0, 1.0], NodeId(0), 1).unwrap();
        assert_eq!(sp.cost(NodeId(3)), 0.0);
        assert!(bellman_ford(&g, &[0.0; 4], NodeId(3), 1).unwrap().cost(NodeId(0)).is_infinite());
    }

    #[test]
    fn negative_cycle_is_an_error() {
        let g = graph(3, &[(0, 1), (1, 2), (2, 1)]);
        let err = bellman_ford(&g, &[1.0, -2.0, 1.0], NodeId(0), 2).unwrap_err();
        assert!(matches!(err, Error::NegativeCycle { stage: 2, .. }));
    }
}
