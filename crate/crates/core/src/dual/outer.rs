//! Stop selection as a shortest path on the extended graph.
//!
//! Layer `i` holds one copy `v^i` of every station (stop number `i`) and a
//! destination copy `d^i`. Arriving at `d^i` means the trip ends after
//! `i − 1` stops; the chain `d^1 → … → d^{N+1}` carries the difference of
//! the destination boundary terms so that every path is charged exactly
//! the boundary term of the stage in which it reaches the destination.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};

/// Costs the extended graph is built from. Stage and stop indices are
/// 0-based here: index `j` of the path tables is stage `j + 1`, `sigma[i]`
/// is stop `i + 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct OuterInput {
    /// Number of stations `m`; targets `0..m` are stations, `m` is the
    /// destination.
    pub stations: usize,
    /// `from_origin[j][t]`: cheapest stage-`j` path from the origin.
    pub from_origin: Vec<Vec<f64>>,
    /// `from_station[j][u][t]`: cheapest stage-`j` path from station `u`.
    pub from_station: Vec<Vec<Vec<f64>>>,
    /// `sigma[i][u]`: value of stopping at station `u` as stop `i`.
    pub sigma: Vec<Vec<f64>>,
    /// `exit[j]`: boundary term when the destination is reached in stage `j`.
    pub exit: Vec<f64>,
    /// Constant part of the dual function.
    pub base: f64,
}

impl OuterInput {
    pub fn max_stops(&self) -> usize {
        self.sigma.len()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ExNode {
    Source,
    /// Stop `stage` (1-based) at station index `station`.
    Stop { stage: usize, station: usize },
    /// Destination copy in stage `stage` (1-based).
    Dest { stage: usize },
}

/// Layered DAG; `nodes` is in topological order and the incoming edges of
/// each node are listed in tie-break order.
#[derive(Debug, Clone, PartialEq)]
pub struct ExtendedGraph {
    pub nodes: Vec<ExNode>,
    /// `(from, to, weight)` with node indices into `nodes`.
    pub edges: Vec<(usize, usize, f64)>,
    pub constant: f64,
}

impl ExtendedGraph {
    pub fn build(input: &OuterInput) -> Self {
        let m = input.stations;
        let n_stops = input.max_stops();
        let mut nodes = vec![ExNode::Source];
        let mut dest_idx = Vec::with_capacity(n_stops + 1);
        let mut stop_idx: Vec<Vec<usize>> = Vec::with_capacity(n_stops);
        for layer in 1..=n_stops + 1 {
            dest_idx.push(nodes.len());
            nodes.push(ExNode::Dest { stage: layer });
            if layer <= n_stops {
                stop_idx.push((0..m).map(|u| nodes.len() + u).collect());
                nodes.extend((0..m).map(|u| ExNode::Stop {
                    stage: layer,
                    station: u,
                }));
            }
        }
        let mut edges = Vec::new();
        let mut push = |a: usize, b: usize, w: f64| {
            if w.is_finite() {
                edges.push((a, b, w));
            }
        };
        for layer in 1..=n_stops + 1 {
            let j = layer - 1;
            // destination copy: self-transition first, then arrivals
            if layer > 1 {
                push(dest_idx[j - 1], dest_idx[j], input.exit[j - 1] - input.exit[j]);
                for u in 0..m {
                    push(
                        stop_idx[j - 1][u],
                        dest_idx[j],
                        input.sigma[j - 1][u] + input.from_station[j][u][m],
                    );
                }
            } else {
                push(0, dest_idx[0], input.from_origin[0][m]);
            }
            if layer <= n_stops {
                for v in 0..m {
                    if layer == 1 {
                        push(0, stop_idx[0][v], input.from_origin[0][v]);
                    } else {
                        for u in 0..m {
                            push(
                                stop_idx[j - 1][u],
                                stop_idx[j][v],
                                input.sigma[j - 1][u] + input.from_station[j][u][v],
                            );
                        }
                    }
                }
            }
        }
        Self {
            nodes,
            edges,
            constant: input.base + input.exit[n_stops],
        }
    }

    pub fn has_edge(&self, from: ExNode, to: ExNode) -> bool {
        let (Some(a), Some(b)) = (
            self.nodes.iter().position(|n| *n == from),
            self.nodes.iter().position(|n| *n == to),
        ) else {
            return false;
        };
        self.edges.iter().any(|(x, y, _)| *x == a && *y == b)
    }
}

/// Selected stops (station indices, in order) and the dual value.
#[derive(Debug, Clone, PartialEq)]
pub struct OuterSolution {
    pub stops: Vec<usize>,
    pub value: f64,
}

/// Shortest source → `d^{N+1}` path; ties keep the first relaxed edge.
pub fn solve_outer(input: &OuterInput) -> Result<OuterSolution> {
    let g = ExtendedGraph::build(input);
    let n = g.nodes.len();
    let mut dist = vec![f64::INFINITY; n];
    let mut pred = vec![usize::MAX; n];
    dist[0] = 0.0;
    // edges were generated grouped by head in topological order
    for (a, b, w) in &g.edges {
        let cand = dist[*a] + w;
        if cand < dist[*b] {
            dist[*b] = cand;
            pred[*b] = *a;
        }
    }
    // the last layer only holds d^{N+1}
    let sink = n - 1;
    if !dist[sink].is_finite() {
        return Err(Error::Unreachable);
    }
    let mut stops = Vec::new();
    let mut at = sink;
    while at != 0 {
        if let ExNode::Stop { station, .. } = g.nodes[at] {
            stops.push(station);
        }
        at = pred[at];
    }
    stops.reverse();
    Ok(OuterSolution {
        stops,
        value: g.constant + dist[sink],
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn input(n_stops: usize, m: usize, f: impl Fn(usize) -> f64) -> OuterInput {
        let mut k = 0;
        let mut next = || {
            k += 1;
            f(k)
        };
        OuterInput {
            stations: m,
            from_origin: (0..=n_stops).map(|_| (0..=m).map(|_| next()).collect()).collect(),
            from_station: (0..=n_stops)
                .map(|_| (0..m).map(|_| (0..=m).map(|_| next()).collect()).collect())
                .collect(),
            sigma: (0..n_stops).map(|_| (0..m).map(|_| next()).collect()).collect(),
            exit: (0..=n_stops).map(|_| next()).collect(),
            base: 0.5,
        }
    }

    #[test]
    fn no_stop_layer() {
        let inp = input(0, 2, |k| k as f64);
        let sol = solve_outer(&inp).unwrap();
        assert!(sol.stops.is_empty());
        assert_eq!(sol.value, inp.base + inp.exit[0] + inp.from_origin[0][2]);
    }

    #[test]
    fn two_station_topology() {
        let inp = input(2, 2, |_| 1.0);
        let g = ExtendedGraph::build(&inp);
        let u1 = ExNode::Stop { stage: 1, station: 0 };
        let v1 = ExNode::Stop { stage: 1, station: 1 };
        let u2 = ExNode::Stop { stage: 2, station: 0 };
        let v2 = ExNode::Stop { stage: 2, station: 1 };
        let d = ExNode::Dest { stage: 3 };
        for (a, b) in [
            (ExNode::Source, u1),
            (ExNode::Source, v1),
            (u1, u2),
            (u1, v2),
            (v1, u2),
            (v1, v2),
            (u2, d),
            (v2, d),
        ] {
            assert!(g.has_edge(a, b), "{a:?} -> {b:?}");
        }
        assert!(!g.has_edge(u2, u1));
    }

    #[test]
    fn zero_costs_prefer_direct_trip() {
        let inp = input(2, 3, |_| 0.0);
        assert!(solve_outer(&inp).unwrap().stops.is_empty());
    }
}
