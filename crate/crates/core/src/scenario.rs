//! Deterministic synthetic instances.
//!
//! Nodes get an elevation and every segment's grade is the elevation
//! difference over its length, capped at the grade bound. Segment power
//! follows a cubic family for a 36 t tractor-trailer at speed `r` (km/h):
//!
//! ```text
//! P(r) = A0 + m·g·(C_RR + grade)/3600 · r + A2·r² + A3·r³      [kW]
//! ```
//!
//! The linear term carries rolling resistance and the grade force, so a
//! steep enough descent gives negative power (regeneration). `A2, A3 ≥ 0`
//! keep every segment's energy convex in the travel time. Because grades
//! come from elevations, every cycle has non-negative net grade work and
//! positive total energy; this is re-checked after generation.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::charging::{ChargeCurve, IntensitySignal};
use crate::dual::bellman_ford;
use crate::energy::minimize_affine_tradeoff;
use crate::error::{Error, Result};
use crate::network::{
    validate_instance, EdgeId, Instance, Node, NodeId, ObjectiveMode, Params, RoadSegment,
    StationData, TransportGraph,
};

/// Auxiliary power (kW).
pub const A0: f64 = 5.0;
/// Rolling resistance coefficient.
pub const C_RR: f64 = 0.006;
/// Vehicle mass (kg).
pub const MASS_KG: f64 = 36_000.0;
/// Speed-dependent rolling and drivetrain losses (kW per (km/h)²).
pub const A2: f64 = 5e-4;
/// Aerodynamic drag (kW per (km/h)³).
pub const A3: f64 = 7.7e-5;
/// Planning horizon covered by the generated intensity signals (h).
pub const HORIZON_H: f64 = 72.0;

/// Linear power coefficient (kW per km/h) for a grade.
pub fn linear_coefficient(grade: f64) -> f64 {
    MASS_KG * 9.81 * (C_RR + grade) / 3600.0
}

/// Power coefficients of a segment with the given grade.
pub fn power_coefficients(grade: f64) -> [f64; 4] {
    [A0, linear_coefficient(grade), A2, A3]
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Topology {
    /// A path `0 → 1 → … → n−1`, driven in one direction.
    Line,
    /// Near-square grid with two-way streets; the trip runs corner to corner.
    Grid,
    /// Random points joined by non-crossing two-way roads.
    RandomPlanar,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum IntensityFamily {
    /// Same constant value at every station.
    Constant(f64),
    /// `mean + amplitude·cos(2π(τ − peak)/24)` sampled hourly, with a random
    /// peak hour per station.
    Diurnal { mean: f64, amplitude: f64 },
    /// Stations split between two constant levels.
    TwoRegion { high: f64, low: f64 },
}

impl IntensityFamily {
    /// Levels of a coal-heavy and a carbon-free grid.
    pub const CONTRAST: Self = Self::TwoRegion { high: 1.02, low: 0.0 };
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TruckPreset {
    /// Full battery, mild terrain.
    Standard,
    /// Half-full battery and the full grade range, so long descents
    /// recharge the battery inside stages.
    RegenerativeHeavy,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioSpec {
    pub seed: u64,
    pub topology: Topology,
    pub nodes: usize,
    /// Number of charging stations (never the origin or destination).
    pub stations: usize,
    /// Largest absolute grade.
    pub grade_max: f64,
    pub intensity: IntensityFamily,
    pub preset: TruckPreset,
    pub max_stops: usize,
    /// Segment length range (km).
    pub length_km: (f64, f64),
    pub objective: ObjectiveMode,
}

impl Default for ScenarioSpec {
    fn default() -> Self {
        Self {
            seed: 0,
            topology: Topology::Line,
            nodes: 5,
            stations: 1,
            grade_max: 0.06,
            intensity: IntensityFamily::Constant(0.39),
            preset: TruckPreset::Standard,
            max_stops: 2,
            length_km: (80.0, 200.0),
            objective: ObjectiveMode::Carbon,
        }
    }
}

fn params(spec: &ScenarioSpec, deadline: f64) -> Params {
    let battery = 1000.0;
    Params {
        deadline_h: deadline,
        battery_kwh: battery,
        initial_soc_kwh: match spec.preset {
            TruckPreset::Standard => battery,
            TruckPreset::RegenerativeHeavy => 0.5 * battery,
        },
        max_stops: spec.max_stops,
        reservation: 0.05,
        wait_min_h: 0.25,
        wait_max_h: 3.0,
        charge_max_h: 1.5,
        efficiency: 1.0,
        objective: spec.objective,
    }
}

struct Layout {
    /// Planar coordinates (km).
    points: Vec<(f64, f64)>,
    /// Undirected or directed links `(a, b, two_way)`.
    links: Vec<(usize, usize, bool)>,
    origin: usize,
    destination: usize,
}

fn crosses(p: (f64, f64), q: (f64, f64), r: (f64, f64), s: (f64, f64)) -> bool {
    let orient = |a: (f64, f64), b: (f64, f64), c: (f64, f64)| {
        (b.0 - a.0) * (c.1 - a.1) - (b.1 - a.1) * (c.0 - a.0)
    };
    let d1 = orient(r, s, p);
    let d2 = orient(r, s, q);
    let d3 = orient(p, q, r);
    let d4 = orient(p, q, s);
    d1 * d2 < 0.0 && d3 * d4 < 0.0
}

fn dist(a: (f64, f64), b: (f64, f64)) -> f64 {
    libm::hypot(a.0 - b.0, a.1 - b.1)
}

fn layout(spec: &ScenarioSpec, rng: &mut ChaCha8Rng) -> Result<Layout> {
    let n = spec.nodes;
    let (lo, hi) = spec.length_km;
    match spec.topology {
        Topology::Line => {
            let mut points = vec![(0.0, 0.0)];
            for i in 1..n {
                let x = points[i - 1].0 + rng.gen_range(lo..=hi);
                points.push((x, 0.0));
            }
            Ok(Layout {
                points,
                links: (1..n).map(|i| (i - 1, i, false)).collect(),
                origin: 0,
                destination: n - 1,
            })
        }
        Topology::Grid => {
            let cols = (1..=n).find(|c| c * c >= n).unwrap_or(1).max(2);
            let rows = n.div_ceil(cols);
            if rows * cols != n {
                return Err(Error::Generation(format!(
                    "grid topology needs a rectangular node count, got {n}"
                )));
            }
            let mut points = Vec::with_capacity(n);
            for r in 0..rows {
                for c in 0..cols {
                    points.push((
                        c as f64 * (lo + hi) / 2.0 + rng.gen_range(-0.1..0.1) * lo,
                        r as f64 * (lo + hi) / 2.0 + rng.gen_range(-0.1..0.1) * lo,
                    ));
                }
            }
            let mut links = Vec::new();
            for r in 0..rows {
                for c in 0..cols {
                    let i = r * cols + c;
                    if c + 1 < cols {
                        links.push((i, i + 1, true));
                    }
                    if r + 1 < rows {
                        links.push((i, i + cols, true));
                    }
                }
            }
            Ok(Layout {
                points,
                links,
                origin: 0,
                destination: n - 1,
            })
        }
        Topology::RandomPlanar => {
            let side = (lo + hi) / 2.0 * libm::sqrt(n as f64);
            let mut points: Vec<(f64, f64)> = Vec::with_capacity(n);
            let mut attempts = 0;
            while points.len() < n {
                attempts += 1;
                if attempts > 10_000 {
                    return Err(Error::Generation("could not place nodes".into()));
                }
                let p = (rng.gen_range(0.0..side), rng.gen_range(0.0..side));
                if points.iter().all(|q| dist(p, *q) >= 0.6 * lo) {
                    points.push(p);
                }
            }
            // Euclidean minimum spanning tree (planar, connected), then
            // extra non-crossing roads of plausible length
            let mut cand: Vec<(f64, usize, usize)> = Vec::new();
            for a in 0..n {
                for b in a + 1..n {
                    cand.push((dist(points[a], points[b]), a, b));
                }
            }
            cand.sort_by(|x, y| x.0.total_cmp(&y.0));
            let mut root: Vec<usize> = (0..n).collect();
            fn find(root: &mut [usize], mut v: usize) -> usize {
                while root[v] != v {
                    root[v] = root[root[v]];
                    v = root[v];
                }
                v
            }
            let mut links: Vec<(usize, usize, bool)> = Vec::new();
            let mut degree = vec![0usize; n];
            for &(_, a, b) in &cand {
                let (ra, rb) = (find(&mut root, a), find(&mut root, b));
                if ra != rb {
                    root[ra] = rb;
                    links.push((a, b, true));
                    degree[a] += 1;
                    degree[b] += 1;
                }
            }
            for &(d, a, b) in &cand {
                if d > 1.6 * hi || degree[a] >= 3 || degree[b] >= 3 || links.iter().any(|l| (l.0, l.1) == (a, b)) {
                    continue;
                }
                let ok = links.iter().all(|&(c, e, _)| {
                    c == a || c == b || e == a || e == b || !crosses(points[a], points[b], points[c], points[e])
                });
                if ok {
                    links.push((a, b, true));
                    degree[a] += 1;
                    degree[b] += 1;
                }
            }
            // trip between the two most distant nodes
            let (mut origin, mut destination, mut far) = (0, 1, 0.0);
            for a in 0..n {
                for b in a + 1..n {
                    let d = dist(points[a], points[b]);
                    if d > far {
                        (origin, destination, far) = (a, b, d);
                    }
                }
            }
            Ok(Layout {
                points,
                links,
                origin,
                destination,
            })
        }
    }
}

fn intensity(
    family: IntensityFamily,
    index: usize,
    low_set: &[bool],
    rng: &mut ChaCha8Rng,
) -> Result<IntensitySignal> {
    match family {
        IntensityFamily::Constant(v) => IntensitySignal::constant(v, HORIZON_H),
        IntensityFamily::TwoRegion { high, low } => {
            IntensitySignal::constant(if low_set[index] { low } else { high }, HORIZON_H)
        }
        IntensityFamily::Diurnal { mean, amplitude } => {
            let peak = rng.gen_range(0.0..24.0);
            let hours = HORIZON_H as usize;
            let times: Vec<f64> = (0..=hours).map(|h| h as f64).collect();
            let values = times
                .iter()
                .map(|t| {
                    let v = mean + amplitude * libm::cos(2.0 * core::f64::consts::PI * (t - peak) / 24.0);
                    v.max(0.0)
                })
                .collect();
            IntensitySignal::new(times, values)
        }
    }
}

/// Builds a validated instance from `spec`. Same spec, same instance.
pub fn generate(spec: &ScenarioSpec) -> Result<Instance> {
    if spec.nodes < 2 {
        return Err(Error::Generation("need at least two nodes".into()));
    }
    if spec.stations + 2 > spec.nodes {
        return Err(Error::Generation(format!(
            "{} stations do not fit in {} nodes besides origin and destination",
            spec.stations, spec.nodes
        )));
    }
    if spec.stations == 0 && spec.max_stops > 0 {
        return Err(Error::Generation("stops allowed but no stations requested".into()));
    }
    if !(spec.grade_max >= 0.0 && spec.grade_max < 0.5) {
        return Err(Error::Generation("grade bound outside [0, 0.5)".into()));
    }
    let (lo, hi) = spec.length_km;
    if !(lo > 0.0 && lo <= hi) {
        return Err(Error::Generation("empty segment length range".into()));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let lay = layout(spec, &mut rng)?;
    let n = spec.nodes;

    // elevations (m); the terrain is rougher for the regenerative preset
    let relief = match spec.preset {
        TruckPreset::Standard => 0.35,
        TruckPreset::RegenerativeHeavy => 1.0,
    };
    let elevation: Vec<f64> = (0..n)
        .map(|_| rng.gen_range(-1.0..1.0) * relief * spec.grade_max * hi * 1000.0 * 0.5)
        .collect();

    let mut edges = Vec::new();
    let add = |a: usize, b: usize, edges: &mut Vec<RoadSegment>| {
        let straight = dist(lay.points[a], lay.points[b]);
        let length = straight.max(1.0);
        let grade = ((elevation[b] - elevation[a]) / (length * 1000.0)).clamp(-spec.grade_max, spec.grade_max);
        edges.push(RoadSegment {
            id: EdgeId(edges.len() as u32),
            from: NodeId(a as u32),
            to: NodeId(b as u32),
            length_km: length,
            speed_min_kmh: 50.0,
            speed_max_kmh: 100.0,
            power_coeffs: power_coefficients(grade),
        });
    };
    for &(a, b, two_way) in &lay.links {
        add(a, b, &mut edges);
        if two_way {
            add(b, a, &mut edges);
        }
    }

    // stations on nodes other than the trip ends
    let mut pool: Vec<usize> = (0..n).filter(|v| *v != lay.origin && *v != lay.destination).collect();
    let mut station_nodes = Vec::with_capacity(spec.stations);
    for _ in 0..spec.stations {
        let k = rng.gen_range(0..pool.len());
        station_nodes.push(pool.swap_remove(k));
    }
    station_nodes.sort_unstable();
    // two-region split: at least one station of each kind when possible
    let mut low_set = vec![false; station_nodes.len()];
    if !station_nodes.is_empty() {
        let first = rng.gen_range(0..station_nodes.len());
        low_set[first] = true;
        for (i, slot) in low_set.iter_mut().enumerate() {
            if i != first && station_nodes.len() > 1 {
                *slot = rng.gen_bool(0.5);
            }
        }
        if station_nodes.len() > 1 && low_set.iter().all(|l| *l) {
            low_set[(first + 1) % station_nodes.len()] = false;
        }
    }
    let mut stations = Vec::with_capacity(station_nodes.len());
    for (i, v) in station_nodes.iter().enumerate() {
        stations.push(StationData {
            node: NodeId(*v as u32),
            curve: ChargeCurve::default_for(1000.0),
            intensity: intensity(spec.intensity, i, &low_set, &mut rng)?,
        });
    }
    let nodes = (0..n)
        .map(|v| Node {
            id: NodeId(v as u32),
            station: station_nodes.contains(&v),
        })
        .collect();

    // generous deadline: every segment at minimum speed plus full stops
    let p0 = params(spec, 0.0);
    let slow: f64 = edges.iter().map(|e| e.time_bounds().1).sum();
    let deadline = (slow + spec.max_stops as f64 * (p0.wait_max_h + p0.charge_max_h)).min(HORIZON_H);
    let graph = TransportGraph::new(nodes, edges, stations)?;
    let instance = Instance {
        graph,
        origin: NodeId(lay.origin as u32),
        destination: NodeId(lay.destination as u32),
        params: params(spec, deadline),
    };

    check_energy_cycles(&instance)?;
    if !instance.graph.reachable_from(instance.origin)[instance.destination.index()] {
        return Err(Error::Generation("destination unreachable".into()));
    }
    validate_instance(&instance).into_result()?;
    Ok(instance)
}

/// Fails if segments at their most economical speed close a cycle with
/// negative total energy.
pub fn check_energy_cycles(instance: &Instance) -> Result<()> {
    let g = &instance.graph;
    let mut weights = Vec::with_capacity(g.edges().len());
    for e in g.edges() {
        weights.push(minimize_affine_tradeoff(e, 0.0, 1.0)?.1);
    }
    for v in 0..g.node_count() {
        match bellman_ford(g, &weights, NodeId(v as u32), 0) {
            Ok(_) => {}
            Err(Error::NegativeCycle { .. }) => {
                return Err(Error::Generation("negative-energy cycle".into()))
            }
            Err(e) => return Err(e),
        }
    }
    Ok(())
}

/// `T = ρ·T_f` for a given fastest completion time.
pub fn deadline_from_factor(fastest_h: f64, factor: f64) -> Result<f64> {
    if !(factor >= 1.0) || !(fastest_h > 0.0) || !fastest_h.is_finite() {
        return Err(Error::Domain {
            what: "delay factor",
            value: factor,
            lo: 1.0,
            hi: f64::INFINITY,
        });
    }
    Ok(factor * fastest_h)
}
