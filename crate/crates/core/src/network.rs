//! Transportation graph, trip parameters and instance validation.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::charging::{ChargeCurve, IntensitySignal};
use crate::energy;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NodeId(pub u32);

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct EdgeId(pub u32);

impl NodeId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl EdgeId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "n{}", self.0)
    }
}

impl fmt::Display for EdgeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "e{}", self.0)
    }
}

/// A directed road segment with homogeneous grade.
///
/// Traction power (kW) at speed `r` (km/h) is the cubic
/// `a0 + a1·r + a2·r² + a3·r³` from `power_coeffs`.
#[derive(Debug, Clone, PartialEq)]
pub struct RoadSegment {
    pub id: EdgeId,
    pub from: NodeId,
    pub to: NodeId,
    pub length_km: f64,
    pub speed_min_kmh: f64,
    pub speed_max_kmh: f64,
    pub power_coeffs: [f64; 4],
}

impl RoadSegment {
    /// `(t_lb, t_ub)` in hours; assumes a validated segment.
    pub fn time_bounds(&self) -> (f64, f64) {
        (
            self.length_km / self.speed_max_kmh,
            self.length_km / self.speed_min_kmh,
        )
    }
}

/// Fastest and slowest traversal time of a segment (hours).
pub fn travel_time_bounds(segment: &RoadSegment) -> Result<(f64, f64)> {
    let bad = |reason| {
        Err(Error::InvalidSegment {
            edge: segment.id,
            reason,
        })
    };
    if !(segment.length_km > 0.0) || !segment.length_km.is_finite() {
        return bad("length must be positive");
    }
    if !(segment.speed_min_kmh > 0.0) || !segment.speed_max_kmh.is_finite() {
        return bad("speed bounds must be positive and finite");
    }
    if segment.speed_min_kmh > segment.speed_max_kmh {
        return bad("minimum speed exceeds maximum speed");
    }
    Ok(segment.time_bounds())
}

#[derive(Debug, Clone, PartialEq)]
pub struct Node {
    pub id: NodeId,
    pub station: bool,
}

/// Charging equipment and grid intensity at a station node.
#[derive(Debug, Clone, PartialEq)]
pub struct StationData {
    pub node: NodeId,
    pub curve: ChargeCurve,
    pub intensity: IntensitySignal,
}

/// Directed highway graph. Node ids are dense (`0..n`); station nodes are
/// flagged and carry [`StationData`].
#[derive(Debug, Clone, PartialEq)]
pub struct TransportGraph {
    nodes: Vec<Node>,
    edges: Vec<RoadSegment>,
    stations: Vec<StationData>,
    out_edges: Vec<Vec<EdgeId>>,
    station_slot: Vec<Option<usize>>,
}

impl TransportGraph {
    /// Checks id density and station flag consistency.
    pub fn new(nodes: Vec<Node>, edges: Vec<RoadSegment>, stations: Vec<StationData>) -> Result<Self> {
        for (i, n) in nodes.iter().enumerate() {
            if n.id.index() != i {
                return Err(Error::Config(alloc::format!(
                    "node ids must be dense: found {} at position {i}",
                    n.id
                )));
            }
        }
        let mut out_edges = vec![Vec::new(); nodes.len()];
        for (i, e) in edges.iter().enumerate() {
            if e.id.index() != i {
                return Err(Error::Config(alloc::format!(
                    "edge ids must be dense: found {} at position {i}",
                    e.id
                )));
            }
            for end in [e.from, e.to] {
                if end.index() >= nodes.len() {
                    return Err(Error::UnknownNode(end));
                }
            }
            out_edges[e.from.index()].push(e.id);
        }
        let mut station_slot = vec![None; nodes.len()];
        for (slot, s) in stations.iter().enumerate() {
            let Some(node) = nodes.get(s.node.index()) else {
                return Err(Error::UnknownNode(s.node));
            };
            if !node.station {
                return Err(Error::NotAStation(s.node));
            }
            if station_slot[s.node.index()].replace(slot).is_some() {
                return Err(Error::Config(alloc::format!(
                    "station {} listed twice",
                    s.node
                )));
            }
        }
        if let Some(n) = nodes
            .iter()
            .find(|n| n.station && station_slot[n.id.index()].is_none())
        {
            return Err(Error::Config(alloc::format!(
                "station node {} has no charging data",
                n.id
            )));
        }
        Ok(Self {
            nodes,
            edges,
            stations,
            out_edges,
            station_slot,
        })
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn edges(&self) -> &[RoadSegment] {
        &self.edges
    }

    pub fn edge(&self, id: EdgeId) -> &RoadSegment {
        &self.edges[id.index()]
    }

    pub fn try_edge(&self, id: EdgeId) -> Result<&RoadSegment> {
        self.edges.get(id.index()).ok_or(Error::UnknownEdge(id))
    }

    pub fn out_edges(&self, node: NodeId) -> &[EdgeId] {
        &self.out_edges[node.index()]
    }

    /// Stations in file order.
    pub fn stations(&self) -> &[StationData] {
        &self.stations
    }

    pub fn station(&self, node: NodeId) -> Option<&StationData> {
        self.station_slot
            .get(node.index())
            .copied()
            .flatten()
            .map(|slot| &self.stations[slot])
    }

    pub fn is_station(&self, node: NodeId) -> bool {
        self.station(node).is_some()
    }

    /// Nodes reachable from `from` following edge directions.
    pub fn reachable_from(&self, from: NodeId) -> Vec<bool> {
        let mut seen = vec![false; self.nodes.len()];
        let mut stack = vec![from];
        seen[from.index()] = true;
        while let Some(u) = stack.pop() {
            for e in self.out_edges(u) {
                let v = self.edge(*e).to;
                if !seen[v.index()] {
                    seen[v.index()] = true;
                    stack.push(v);
                }
            }
        }
        seen
    }
}

/// What a plan minimises.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ObjectiveMode {
    /// Carbon footprint of grid electricity drawn at the stops.
    Carbon,
    /// Grid energy drawn at the stops (intensity taken as 1).
    Energy,
    /// Total travel, waiting and charging time.
    Time,
}

impl ObjectiveMode {
    pub const ALL: [ObjectiveMode; 3] = [Self::Carbon, Self::Energy, Self::Time];

    pub fn name(self) -> &'static str {
        match self {
            Self::Carbon => "carbon",
            Self::Energy => "energy",
            Self::Time => "time",
        }
    }

    /// Whether travel time is part of the objective.
    pub fn counts_travel_time(self) -> bool {
        matches!(self, Self::Time)
    }
}

impl core::str::FromStr for ObjectiveMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "carbon" => Ok(Self::Carbon),
            "energy" => Ok(Self::Energy),
            "time" | "fast" => Ok(Self::Time),
            other => Err(Error::Config(alloc::format!("unknown objective `{other}`"))),
        }
    }
}

/// Trip parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct Params {
    /// Deadline `T` (hours after departure).
    pub deadline_h: f64,
    /// Battery capacity `B` (kWh).
    pub battery_kwh: f64,
    /// SoC at the origin (kWh).
    pub initial_soc_kwh: f64,
    /// Maximum number of charging stops `N`.
    pub max_stops: usize,
    /// Reservation ratio `α`: SoC on entering any stop is at least `α·B`.
    pub reservation: f64,
    /// Wait bounds per stop (hours); the lower bound is the stop overhead.
    pub wait_min_h: f64,
    pub wait_max_h: f64,
    /// Upper bound on the charging time per stop (hours).
    pub charge_max_h: f64,
    /// Charging efficiency `η`.
    pub efficiency: f64,
    pub objective: ObjectiveMode,
}

impl Params {
    pub fn reserve_kwh(&self) -> f64 {
        self.reservation * self.battery_kwh
    }
}

impl Default for Params {
    fn default() -> Self {
        Self {
            deadline_h: 24.0,
            battery_kwh: 1000.0,
            initial_soc_kwh: 1000.0,
            max_stops: 2,
            reservation: 0.05,
            wait_min_h: 0.25,
            wait_max_h: 4.0,
            charge_max_h: 1.5,
            efficiency: 1.0,
            objective: ObjectiveMode::Carbon,
        }
    }
}

/// A complete planning problem.
#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    pub graph: TransportGraph,
    pub origin: NodeId,
    pub destination: NodeId,
    pub params: Params,
}

impl Instance {
    pub fn with_objective(&self, objective: ObjectiveMode) -> Self {
        let mut out = self.clone();
        out.params.objective = objective;
        out
    }

    pub fn with_deadline(&self, deadline_h: f64) -> Self {
        let mut out = self.clone();
        out.params.deadline_h = deadline_h;
        out
    }

    pub fn with_reservation(&self, reservation: f64) -> Self {
        let mut out = self.clone();
        out.params.reservation = reservation;
        out
    }
}

/// Lagrange multipliers, one pair per stage `1..=N+1` (index 0 is stage 1).
#[derive(Debug, Clone, PartialEq)]
pub struct DualVector {
    /// Prices on the per-stage battery balance (kg per kWh).
    pub beta: Vec<f64>,
    /// Prices on the per-stage time window (kg per hour).
    pub tau: Vec<f64>,
}

impl DualVector {
    pub fn zeros(stages: usize) -> Self {
        Self {
            beta: vec![0.0; stages],
            tau: vec![0.0; stages],
        }
    }

    pub fn stages(&self) -> usize {
        self.beta.len()
    }

    pub fn is_nonnegative(&self) -> bool {
        self.beta.iter().chain(&self.tau).all(|v| *v >= 0.0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    InvalidSegment { edge: EdgeId, reason: &'static str },
    NonConvexEnergy { edge: EdgeId },
    ChargeCurve { station: NodeId, reason: &'static str },
    ChargeCurveCapacity { station: NodeId },
    NegativeIntensity { station: NodeId },
    IntensityDomain { station: NodeId },
    InitialSoc,
    Parameter(String),
    UnknownEndpoint,
    OriginIsDestination,
    DestinationUnreachable,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::InvalidSegment { edge, reason } => write!(f, "segment {edge}: {reason}"),
            Self::NonConvexEnergy { edge } => {
                write!(f, "segment {edge}: energy not convex in travel time")
            }
            Self::ChargeCurve { station, reason } => write!(f, "station {station}: {reason}"),
            Self::ChargeCurveCapacity { station } => {
                write!(f, "station {station}: charge curve does not end at the battery capacity")
            }
            Self::NegativeIntensity { station } => {
                write!(f, "station {station}: negative carbon intensity")
            }
            Self::IntensityDomain { station } => {
                write!(f, "station {station}: intensity not defined on [0, T]")
            }
            Self::InitialSoc => write!(f, "initial SoC outside [alpha*B, B]"),
            Self::Parameter(msg) => write!(f, "parameter: {msg}"),
            Self::UnknownEndpoint => write!(f, "origin or destination is not a node"),
            Self::OriginIsDestination => write!(f, "origin equals destination"),
            Self::DestinationUnreachable => write!(f, "destination unreachable from origin"),
        }
    }
}

/// Outcome of [`validate_instance`].
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn into_result(self) -> Result<()> {
        match self.violations.first() {
            None => Ok(()),
            Some(v) => Err(Error::Config(alloc::format!("invalid instance: {v}"))),
        }
    }
}

/// Grid size for the numerical convexity check of `c_e`.
pub const CONVEXITY_GRID: usize = 1000;

/// Whether `c_e` is convex on `[t_lb, t_ub]`, judged by second differences
/// on a uniform grid against `1e-9 · max |c_e|`.
pub fn energy_is_convex(segment: &RoadSegment) -> bool {
    let (lo, hi) = segment.time_bounds();
    if hi <= lo {
        return true;
    }
    let n = CONVEXITY_GRID;
    let vals: Vec<f64> = (0..n)
        .map(|k| {
            let t = lo + (hi - lo) * k as f64 / (n - 1) as f64;
            energy::edge_energy_unchecked(segment, t)
        })
        .collect();
    let scale = vals.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    vals.windows(3)
        .all(|w| w[0] - 2.0 * w[1] + w[2] >= -1e-9 * scale)
}

/// Checks the modelling assumptions; returns every violation found.
pub fn validate_instance(instance: &Instance) -> ValidationReport {
    let mut violations = Vec::new();
    let g = &instance.graph;
    let p = &instance.params;

    for e in g.edges() {
        match travel_time_bounds(e) {
            Err(Error::InvalidSegment { reason, .. }) => {
                violations.push(Violation::InvalidSegment { edge: e.id, reason })
            }
            Err(_) => unreachable!(),
            Ok(_) => {
                if e.power_coeffs.iter().any(|c| !c.is_finite()) {
                    violations.push(Violation::InvalidSegment {
                        edge: e.id,
                        reason: "non-finite power coefficient",
                    });
                } else if !energy_is_convex(e) {
                    violations.push(Violation::NonConvexEnergy { edge: e.id });
                }
            }
        }
    }

    for s in g.stations() {
        if let Some(reason) = s.curve.defect() {
            violations.push(Violation::ChargeCurve {
                station: s.node,
                reason,
            });
        } else if (s.curve.capacity() - p.battery_kwh).abs() > 1e-9 * p.battery_kwh {
            violations.push(Violation::ChargeCurveCapacity { station: s.node });
        }
        if !s.intensity.is_nonnegative() {
            violations.push(Violation::NegativeIntensity { station: s.node });
        }
        if !s.intensity.covers(0.0, p.deadline_h) {
            violations.push(Violation::IntensityDomain { station: s.node });
        }
    }

    let mut bad = |msg: &str| violations.push(Violation::Parameter(String::from(msg)));
    if !(p.deadline_h > 0.0) || !p.deadline_h.is_finite() {
        bad("deadline must be positive");
    }
    if !(p.battery_kwh > 0.0) || !p.battery_kwh.is_finite() {
        bad("battery capacity must be positive");
    }
    if !(0.0..1.0).contains(&p.reservation) {
        bad("reservation ratio must lie in [0, 1)");
    }
    if !(p.efficiency > 0.0 && p.efficiency <= 1.0) {
        bad("charging efficiency must lie in (0, 1]");
    }
    if !(p.wait_min_h >= 0.0 && p.wait_min_h <= p.wait_max_h) || !p.wait_max_h.is_finite() {
        bad("wait bounds must satisfy 0 <= min <= max < inf");
    }
    if !(p.charge_max_h >= 0.0) || !p.charge_max_h.is_finite() {
        bad("charge time bound must be non-negative and finite");
    }
    let reserve = p.reserve_kwh();
    if !(p.initial_soc_kwh >= reserve && p.initial_soc_kwh <= p.battery_kwh) {
        violations.push(Violation::InitialSoc);
    }

    let n = g.node_count();
    if instance.origin.index() >= n || instance.destination.index() >= n {
        violations.push(Violation::UnknownEndpoint);
    } else {
        if instance.origin == instance.destination {
            violations.push(Violation::OriginIsDestination);
        }
        if !g.reachable_from(instance.origin)[instance.destination.index()] {
            violations.push(Violation::DestinationUnreachable);
        }
    }
    ValidationReport { violations }
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn segment(id: u32, from: u32, to: u32, len: f64, coeffs: [f64; 4]) -> RoadSegment {
        RoadSegment {
            id: EdgeId(id),
            from: NodeId(from),
            to: NodeId(to),
            length_km: len,
            speed_min_kmh: 60.0,
            speed_max_kmh: 120.0,
            power_coeffs: coeffs,
        }
    }

    fn nodes(n: u32, stations: &[u32]) -> Vec<Node> {
        (0..n)
            .map(|i| Node {
                id: NodeId(i),
                station: stations.contains(&i),
            })
            .collect()
    }

    fn station(node: u32) -> StationData {
        StationData {
            node: NodeId(node),
            curve: ChargeCurve::default_for(1000.0),
            intensity: IntensitySignal::constant(0.39, 48.0).unwrap(),
        }
    }

    fn instance(graph: TransportGraph, dest: u32) -> Instance {
        Instance {
            graph,
            origin: NodeId(0),
            destination: NodeId(dest),
            params: Params::default(),
        }
    }

    #[test]
    fn time_bounds_by_division() {
        let s = segment(0, 0, 1, 120.0, [0.0; 4]);
        assert_eq!(travel_time_bounds(&s).unwrap(), (1.0, 2.0));
        let mut d = segment(0, 0, 1, 100.0, [0.0; 4]);
        d.speed_min_kmh = 50.0;
        d.speed_max_kmh = 50.0;
        assert_eq!(travel_time_bounds(&d).unwrap(), (2.0, 2.0));
        d.speed_min_kmh = 0.0;
        assert!(matches!(
            travel_time_bounds(&d),
            Err(Error::InvalidSegment { .. })
        ));
        d.speed_min_kmh = -3.0;
        assert!(travel_time_bounds(&d).is_err());
    }

    #[test]
    fn constant_power_single_edge_passes() {
        let g = TransportGraph::new(
            nodes(2, &[]),
            vec![segment(0, 0, 1, 100.0, [10.0, 0.0, 0.0, 0.0])],
            vec![],
        )
        .unwrap();
        let report = validate_instance(&instance(g, 1));
        assert!(report.is_ok(), "{:?}", report);
    }

    #[test]
    fn non_concave_curve_fails() {
        let mut st = station(1);
        st.curve = ChargeCurve::new(
            alloc::vec![0.0, 0.5, 1.0],
            alloc::vec![0.0, 200.0, 1000.0],
        )
        .unwrap();
        let g = TransportGraph::new(
            nodes(3, &[1]),
            vec![
                segment(0, 0, 1, 100.0, [10.0, 0.0, 0.0, 0.0]),
                segment(1, 1, 2, 100.0, [10.0, 0.0, 0.0, 0.0]),
            ],
            vec![st],
        )
        .unwrap();
        let report = validate_instance(&instance(g, 2));
        assert!(report.violations.iter().any(|v| matches!(
            v,
            Violation::ChargeCurve {
                reason: "charge curve not concave",
                ..
            }
        )));
    }

    #[test]
    fn stations_are_optional_on_the_path() {
        // 0 -> 1(station) -> 3 and 0 -> 2 -> 3; dropping the station leaves a path.
        let c = [10.0, 0.0, 0.0, 0.0];
        let g = TransportGraph::new(
            nodes(4, &[1]),
            vec![
                segment(0, 0, 1, 100.0, c),
                segment(1, 1, 3, 100.0, c),
                segment(2, 0, 2, 100.0, c),
                segment(3, 2, 3, 100.0, c),
            ],
            vec![station(1)],
        )
        .unwrap();
        assert!(validate_instance(&instance(g, 3)).is_ok());

        // only path runs through the station: still fine
        let g = TransportGraph::new(
            nodes(3, &[1]),
            vec![segment(0, 0, 1, 100.0, c), segment(1, 1, 2, 100.0, c)],
            vec![station(1)],
        )
        .unwrap();
        assert!(validate_instance(&instance(g, 2)).is_ok());
    }

    #[test]
    fn unreachable_and_bad_soc_reported() {
        let c = [10.0, 0.0, 0.0, 0.0];
        let g = TransportGraph::new(nodes(3, &[]), vec![segment(0, 0, 1, 50.0, c)], vec![]).unwrap();
        let mut inst = instance(g, 2);
        inst.params.initial_soc_kwh = 10.0;
        let report = validate_instance(&inst);
        assert!(report.violations.contains(&Violation::DestinationUnreachable));
        assert!(report.violations.contains(&Violation::InitialSoc));
    }

    #[test]
    fn concave_energy_is_rejected() {
        // negative cubic term makes c_e concave in t
        let g = TransportGraph::new(
            nodes(2, &[]),
            vec![segment(0, 0, 1, 100.0, [0.0, 0.0, 0.0, -1e-3])],
            vec![],
        )
        .unwrap();
        let report = validate_instance(&instance(g, 1));
        assert!(report
            .violations
            .contains(&Violation::NonConvexEnergy { edge: EdgeId(0) }));
    }

    #[test]
    fn station_flag_must_match_data() {
        let c = [10.0, 0.0, 0.0, 0.0];
        let err = TransportGraph::new(nodes(2, &[]), vec![segment(0, 0, 1, 50.0, c)], vec![station(1)]);
        assert!(matches!(err, Err(Error::NotAStation(_))));
        let err = TransportGraph::new(nodes(2, &[1]), vec![segment(0, 0, 1, 50.0, c)], vec![]);
        assert!(err.is_err());
    }
}
