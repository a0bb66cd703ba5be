//! Candidate trip plans on the stage-expanded graph and their evaluation.
//!
//! A plan with `k ≤ N` charging stops has `k + 1` stages. Stage `i`
//! drives from stop `i − 1` (the origin for `i = 1`) to stop `i` (the
//! destination for `i = k + 1`). Stages `k + 2 ..= N + 1` are destination
//! pass-throughs with nothing to drive; their residuals are zero.
//!
//! Every stop carries a *scheduled* arrival time `τ` and SoC `β`. The
//! schedule need not coincide with the driving timeline; the residuals
//! measure the slack between the two:
//!
//! * `δτ_i = travel_i + (t_w + t_c)_{i−1} − (τ_i − τ_{i−1})`, `τ_0 = 0`,
//! * `δβ_i = energy_i + β_i − (β_{i−1} + φ(t_c, β_{i−1}))`, `β_0 = β₀`,
//!   no charging at the origin.
//!
//! A plan is feasible when every residual is `≤ 0` and the boxes hold.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::charging::{carbon_footprint_extended, soc_increment_unchecked, stop_cost_extended};
use crate::energy::edge_energy_unchecked;
use crate::error::{Error, Result};
use crate::network::{EdgeId, Instance, NodeId};

/// Default feasibility tolerance (native units: hours, kWh).
pub const FEASIBILITY_TOL: f64 = 1e-6;

/// The driving part of one stage.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Stage {
    pub edges: Vec<EdgeId>,
    /// Travel time of each edge (hours), same length as `edges`.
    pub times: Vec<f64>,
}

impl Stage {
    pub fn empty() -> Self {
        Self::default()
    }
}

/// A charging stop with its schedule.
#[derive(Debug, Clone, PartialEq)]
pub struct Stop {
    pub station: NodeId,
    /// Scheduled arrival `τ` (hours since departure).
    pub arrival: f64,
    /// Scheduled SoC on arrival `β` (kWh).
    pub soc: f64,
    pub wait: f64,
    pub charge: f64,
}

/// Arrival schedule at the destination.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Arrival {
    pub time: f64,
    pub soc: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Plan {
    /// `stops.len() + 1` stages.
    pub stages: Vec<Stage>,
    pub stops: Vec<Stop>,
    pub destination: Arrival,
}

/// Signed slacks of the coupling constraints, one entry per stage
/// `1..=N+1`.
#[derive(Debug, Clone, PartialEq)]
pub struct Residuals {
    pub tau: Vec<f64>,
    pub beta: Vec<f64>,
}

impl Residuals {
    pub fn max(&self) -> f64 {
        self.tau
            .iter()
            .chain(&self.beta)
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.tau
            .iter()
            .chain(&self.beta)
            .fold(0.0f64, |m, v| m.max(v.abs()))
    }

    /// `Σ λ·δ`.
    pub fn dot(&self, duals: &crate::network::DualVector) -> f64 {
        let t: f64 = self.tau.iter().zip(&duals.tau).map(|(d, l)| d * l).sum();
        let b: f64 = self.beta.iter().zip(&duals.beta).map(|(d, l)| d * l).sum();
        t + b
    }
}

impl Plan {
    pub fn stop_count(&self) -> usize {
        self.stops.len()
    }

    /// Edges of the whole route, in driving order.
    pub fn route(&self) -> impl Iterator<Item = EdgeId> + '_ {
        self.stages.iter().flat_map(|s| s.edges.iter().copied())
    }

    /// Checks that stages chain origin → stops → destination and that
    /// per-edge data lines up.
    pub fn check_structure(&self, instance: &Instance) -> Result<()> {
        let g = &instance.graph;
        let p = &instance.params;
        if self.stages.len() != self.stops.len() + 1 {
            return Err(Error::MalformedPlan(format!(
                "{} stages for {} stops",
                self.stages.len(),
                self.stops.len()
            )));
        }
        if self.stops.len() > p.max_stops {
            return Err(Error::MalformedPlan(format!(
                "{} stops exceed the budget of {}",
                self.stops.len(),
                p.max_stops
            )));
        }
        let mut at = instance.origin;
        for (i, stage) in self.stages.iter().enumerate() {
            if stage.edges.len() != stage.times.len() {
                return Err(Error::MalformedPlan(format!(
                    "stage {}: {} edges but {} times",
                    i + 1,
                    stage.edges.len(),
                    stage.times.len()
                )));
            }
            for e in &stage.edges {
                let seg = g.try_edge(*e)?;
                if seg.from != at {
                    return Err(Error::MalformedPlan(format!(
                        "stage {}: edge {} does not start at {}",
                        i + 1,
                        e,
                        at
                    )));
                }
                at = seg.to;
            }
            let target = match self.stops.get(i) {
                Some(stop) => {
                    if !g.is_station(stop.station) {
                        return Err(Error::NotAStation(stop.station));
                    }
                    stop.station
                }
                None => instance.destination,
            };
            if at != target {
                return Err(Error::MalformedPlan(format!(
                    "stage {} ends at {} instead of {}",
                    i + 1,
                    at,
                    target
                )));
            }
        }
        Ok(())
    }

    fn stage_travel(&self, instance: &Instance, i: usize) -> (f64, f64) {
        let s = &self.stages[i];
        let mut time = 0.0;
        let mut energy = 0.0;
        for (e, t) in s.edges.iter().zip(&s.times) {
            time += t;
            energy += edge_energy_unchecked(instance.graph.edge(*e), *t);
        }
        (time, energy)
    }

    fn charged(&self, instance: &Instance, j: usize) -> f64 {
        let stop = &self.stops[j];
        let st = instance.graph.station(stop.station).expect("checked station");
        soc_increment_unchecked(&st.curve, stop.charge, stop.soc)
    }
}

/// `δτ` of stage `i` (1-based). Stages past the destination give 0.
pub fn residual_tau(plan: &Plan, instance: &Instance, stage: usize) -> f64 {
    let i = stage - 1;
    if i >= plan.stages.len() {
        return 0.0;
    }
    let (travel, _) = plan.stage_travel(instance, i);
    let (prev_tau, prev_stop) = match i.checked_sub(1) {
        None => (0.0, 0.0),
        Some(j) => {
            let s = &plan.stops[j];
            (s.arrival, s.wait + s.charge)
        }
    };
    let tau = plan
        .stops
        .get(i)
        .map_or(plan.destination.time, |s| s.arrival);
    travel + prev_stop - (tau - prev_tau)
}

/// `δβ` of stage `i` (1-based). Stages past the destination give 0.
pub fn residual_beta(plan: &Plan, instance: &Instance, stage: usize) -> f64 {
    let i = stage - 1;
    if i >= plan.stages.len() {
        return 0.0;
    }
    let (_, energy) = plan.stage_travel(instance, i);
    let departure = match i.checked_sub(1) {
        None => instance.params.initial_soc_kwh,
        Some(j) => plan.stops[j].soc + plan.charged(instance, j),
    };
    let beta = plan.stops.get(i).map_or(plan.destination.soc, |s| s.soc);
    energy + beta - departure
}

/// All residuals, padded to `N + 1` stages.
pub fn residuals(plan: &Plan, instance: &Instance) -> Residuals {
    let n = instance.params.max_stops + 1;
    Residuals {
        tau: (1..=n).map(|i| residual_tau(plan, instance, i)).collect(),
        beta: (1..=n).map(|i| residual_beta(plan, instance, i)).collect(),
    }
}

/// SoC after every segment, stage by stage.
#[derive(Debug, Clone, PartialEq)]
pub struct SocTrace {
    pub stages: Vec<Vec<f64>>,
    pub min_soc: f64,
}

/// Replays the SoC segment by segment. Each stage starts from its
/// scheduled departure SoC (`β₀` at the origin, `β + φ` after a stop); the
/// battery saturates at `B`.
pub fn soc_trace(plan: &Plan, instance: &Instance) -> SocTrace {
    let cap = instance.params.battery_kwh;
    let mut min_soc = f64::INFINITY;
    let mut stages = Vec::with_capacity(plan.stages.len());
    for (i, stage) in plan.stages.iter().enumerate() {
        let mut soc = match i.checked_sub(1) {
            None => instance.params.initial_soc_kwh,
            Some(j) => (plan.stops[j].soc + plan.charged(instance, j)).min(cap),
        };
        min_soc = min_soc.min(soc);
        let mut trace = Vec::with_capacity(stage.edges.len());
        for (e, t) in stage.edges.iter().zip(&stage.times) {
            soc = (soc - edge_energy_unchecked(instance.graph.edge(*e), *t)).min(cap);
            min_soc = min_soc.min(soc);
            trace.push(soc);
        }
        stages.push(trace);
    }
    SocTrace { stages, min_soc }
}

/// Sufficient condition for a subpath never to drain the battery when it
/// is entered with at most `B` and left with at least `αB`: the harvested
/// energy `½Σ(|c| − c)` is at most `α/(2(1−α))·Σc`.
pub fn lemma1_holds(energies: &[f64], alpha: f64) -> bool {
    let harvested: f64 = energies.iter().map(|c| 0.5 * (c.abs() - c)).sum();
    let net: f64 = energies.iter().sum();
    harvested <= alpha / (2.0 * (1.0 - alpha)) * net
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalOptions {
    pub tol: f64,
    /// Also require the per-segment SoC trace to stay non-negative.
    pub strict_soc: bool,
}

impl Default for EvalOptions {
    fn default() -> Self {
        Self {
            tol: FEASIBILITY_TOL,
            strict_soc: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Summary {
    /// Objective in the instance's mode.
    pub objective: f64,
    pub carbon_kg: f64,
    /// Grid energy drawn at the stops.
    pub energy_kwh: f64,
    pub distance_km: f64,
    /// Completion time of the driving timeline.
    pub time_h: f64,
    pub feasible: bool,
    pub residuals: Residuals,
    pub min_soc: f64,
}

/// Objective of `plan` under the instance's mode, without any checks.
pub fn objective(plan: &Plan, instance: &Instance) -> f64 {
    let p = &instance.params;
    let mut total = 0.0;
    for stop in &plan.stops {
        let st = instance.graph.station(stop.station).expect("checked station");
        total += stop_cost_extended(
            p.objective,
            &st.curve,
            &st.intensity,
            stop.soc,
            stop.charge,
            stop.wait,
            stop.arrival,
            p.efficiency,
        );
    }
    if p.objective.counts_travel_time() {
        total += plan.stages.iter().flat_map(|s| &s.times).sum::<f64>();
    }
    total
}

/// [`evaluate_with`] using the default tolerance, non-strict SoC.
pub fn evaluate(plan: &Plan, instance: &Instance) -> Result<Summary> {
    evaluate_with(plan, instance, EvalOptions::default())
}

pub fn evaluate_with(plan: &Plan, instance: &Instance, opts: EvalOptions) -> Result<Summary> {
    plan.check_structure(instance)?;
    let g = &instance.graph;
    let p = &instance.params;
    let tol = opts.tol;

    let mut carbon = 0.0;
    let mut energy = 0.0;
    for (j, stop) in plan.stops.iter().enumerate() {
        let st = g.station(stop.station).expect("checked station");
        carbon += carbon_footprint_extended(
            &st.curve,
            &st.intensity,
            stop.soc.clamp(0.0, st.curve.capacity()),
            stop.charge,
            stop.arrival + stop.wait,
            p.efficiency,
        );
        energy += plan.charged(instance, j) / p.efficiency;
    }
    let distance = plan.route().map(|e| g.edge(e).length_km).sum();
    let last = plan.stages.len() - 1;
    let (travel, _) = plan.stage_travel(instance, last);
    let time = match plan.stops.last() {
        None => travel,
        Some(s) => s.arrival + s.wait + s.charge + travel,
    };

    let residuals = residuals(plan, instance);
    let trace = soc_trace(plan, instance);
    let reserve = p.reserve_kwh();
    let in_box = |v: f64, lo: f64, hi: f64| v >= lo - tol && v <= hi + tol;

    let mut feasible = residuals.max() <= tol;
    for stage in &plan.stages {
        for (e, t) in stage.edges.iter().zip(&stage.times) {
            let (lo, hi) = g.edge(*e).time_bounds();
            feasible &= in_box(*t, lo, hi);
        }
    }
    for s in &plan.stops {
        feasible &= in_box(s.wait, p.wait_min_h, p.wait_max_h)
            && in_box(s.charge, 0.0, p.charge_max_h)
            && in_box(s.arrival, 0.0, p.deadline_h)
            && in_box(s.soc, reserve, p.battery_kwh);
    }
    feasible &= in_box(plan.destination.time, 0.0, p.deadline_h)
        && in_box(plan.destination.soc, reserve, p.battery_kwh)
        && time <= p.deadline_h + tol;
    if opts.strict_soc {
        feasible &= trace.min_soc >= -tol;
    }

    Ok(Summary {
        objective: objective(plan, instance),
        carbon_kg: carbon,
        energy_kwh: energy,
        distance_km: distance,
        time_h: time,
        feasible,
        residuals,
        min_soc: trace.min_soc,
    })
}

/// Builds the tightest schedule for fixed driving and stop decisions: `τ`
/// is the actual arrival time (no idling) and `β` the actual SoC, capped at
/// `B`. The destination arrival is recorded the same way.
pub fn schedule_tight(
    instance: &Instance,
    stages: Vec<Stage>,
    stations: &[NodeId],
    waits: &[f64],
    charges: &[f64],
) -> Plan {
    let cap = instance.params.battery_kwh;
    let mut stops = Vec::with_capacity(stations.len());
    let mut clock = 0.0;
    let mut soc = instance.params.initial_soc_kwh;
    let mut plan = Plan {
        stages,
        stops: vec![],
        destination: Arrival {
            time: 0.0,
            soc: 0.0,
        },
    };
    for i in 0..plan.stages.len() {
        let (travel, energy) = plan.stage_travel(instance, i);
        clock += travel;
        soc = (soc - energy).min(cap);
        if i < stations.len() {
            let st = instance.graph.station(stations[i]).expect("station");
            let stop = Stop {
                station: stations[i],
                arrival: clock,
                soc,
                wait: waits[i],
                charge: charges[i],
            };
            clock += stop.wait + stop.charge;
            soc += soc_increment_unchecked(&st.curve, stop.charge, soc.clamp(0.0, cap));
            stops.push(stop);
        } else {
            plan.destination = Arrival { time: clock, soc };
        }
    }
    plan.stops = stops;
    plan
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::charging::{ChargeCurve, IntensitySignal};
    use crate::network::{Node, Params, RoadSegment, StationData, TransportGraph};

    fn line(energies: &[f64], station: Option<u32>) -> Instance {
        let n = energies.len() as u32 + 1;
        let nodes = (0..n)
            .map(|i| Node {
                id: NodeId(i),
                station: Some(i) == station,
            })
            .collect();
        // constant power chosen so that the edge energy at 1 h is `c`
        let edges = energies
            .iter()
            .enumerate()
            .map(|(i, c)| RoadSegment {
                id: EdgeId(i as u32),
                from: NodeId(i as u32),
                to: NodeId(i as u32 + 1),
                length_km: 100.0,
                speed_min_kmh: 50.0,
                speed_max_kmh: 100.0,
                power_coeffs: [*c, 0.0, 0.0, 0.0],
            })
            .collect();
        let stations = station
            .map(|s| StationData {
                node: NodeId(s),
                curve: ChargeCurve::default_for(1000.0),
                intensity: IntensitySignal::constant(1.0, 48.0).unwrap(),
            })
            .into_iter()
            .collect();
        Instance {
            graph: TransportGraph::new(nodes, edges, stations).unwrap(),
            origin: NodeId(0),
            destination: NodeId(n - 1),
            params: Params {
                max_stops: 1,
                ..Params::default()
            },
        }
    }

    fn stage(edges: &[u32], times: &[f64]) -> Stage {
        Stage {
            edges: edges.iter().map(|e| EdgeId(*e)).collect(),
            times: times.to_vec(),
        }
    }

    #[test]
    fn trace_matches_cumulative_sums() {
        let inst = line(&[300.0, -50.0, 200.0], None);
        let plan = schedule_tight(&inst, vec![stage(&[0, 1, 2], &[1.0, 1.0, 1.0])], &[], &[], &[]);
        let tr = soc_trace(&plan, &inst);
        assert_eq!(tr.stages[0], vec![700.0, 750.0, 550.0]);
        assert_eq!(tr.min_soc, 550.0);
        let s = evaluate(&plan, &inst).unwrap();
        assert_eq!(s.carbon_kg, 0.0);
        assert!(s.feasible);
        assert_eq!(s.residuals.max_abs(), 0.0);
    }

    #[test]
    fn residual_arithmetic() {
        let inst = line(&[10.0, 10.0], Some(1));
        let mut plan = schedule_tight(
            &inst,
            vec![stage(&[0], &[2.0]), stage(&[1], &[1.0])],
            &[NodeId(1)],
            &[0.25],
            &[0.5],
        );
        plan.stops[0].arrival = 3.0;
        assert_eq!(residual_tau(&plan, &inst, 1), -1.0);
        // stage 2 departs at 3.75 and drives 1 h: arrival 4.75 per timeline
        plan.destination.time = 4.75;
        assert!((residual_tau(&plan, &inst, 2)).abs() < 1e-12);
        // 20 kWh used in stage 1; half an hour of charging tops up to full
        let phi = plan.charged(&inst, 0);
        assert!((phi - 20.0).abs() < 1e-9);
        plan.destination.soc = plan.stops[0].soc + phi - 10.0;
        assert!(residual_beta(&plan, &inst, 2).abs() < 1e-9);
    }

    #[test]
    fn charging_recorded_in_summary() {
        let inst = line(&[100.0, 100.0], Some(1));
        let plan = schedule_tight(
            &inst,
            vec![stage(&[0], &[1.0]), stage(&[1], &[1.0])],
            &[NodeId(1)],
            &[0.25],
            &[0.05],
        );
        let s = evaluate(&plan, &inst).unwrap();
        // π ≡ 1, η = 1: carbon equals charged energy
        assert!((s.carbon_kg - s.energy_kwh).abs() < 1e-9);
        assert!(s.energy_kwh > 0.0);
        assert!((s.time_h - 2.3).abs() < 1e-12);
    }

    #[test]
    fn malformed_plans_rejected() {
        let inst = line(&[10.0, 10.0], Some(1));
        let bad = schedule_tight(&inst, vec![stage(&[1], &[1.0])], &[], &[], &[]);
        assert!(matches!(evaluate(&bad, &inst), Err(Error::MalformedPlan(_))));
    }

    #[test]
    fn lemma1_cases() {
        assert!(lemma1_holds(&[1.0, 2.0, 3.0], 0.05));
        assert!(!lemma1_holds(&[10.0, -10.0], 0.05));
    }
}
