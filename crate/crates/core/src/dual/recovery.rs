//! Feasibility recovery: re-plan speeds and charging on a fixed route.
//!
//! Phase 1 drives every segment as fast as allowed, waits the minimum and
//! charges just enough to enter the next stop (or the destination) with
//! the reserve. If that misses the deadline or cannot be charged, a few
//! uniform slow-downs are tried before giving up. Phase 2 is a pattern
//! search over per-stage speed scalings, per-stop waits and per-stop
//! charge targets that only accepts feasible, strictly improving moves.

use alloc::vec;
use alloc::vec::Vec;

use crate::charging::soc_increment_unchecked;
use crate::energy::edge_energy_unchecked;
use crate::network::{EdgeId, Instance, NodeId};
use crate::plan::{evaluate_with, schedule_tight, EvalOptions, Plan, Stage, Summary};

/// Stops and the subpaths between them.
#[derive(Debug, Clone, PartialEq)]
pub struct Route {
    /// `stations.len() + 1` subpaths.
    pub stages: Vec<Vec<EdgeId>>,
    pub stations: Vec<NodeId>,
}

impl Route {
    pub fn of_plan(plan: &Plan) -> Self {
        Self {
            stages: plan.stages.iter().map(|s| s.edges.clone()).collect(),
            stations: plan.stops.iter().map(|s| s.station).collect(),
        }
    }
}

/// Which decisions phase 2 may change.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Coordinates {
    /// Speeds only; every stop waits the minimum and charges the minimum.
    Speed,
    /// Speeds, waits and charge targets.
    SpeedAndCharging,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RecoveryConfig {
    pub coordinates: Coordinates,
    /// Skip phase 2.
    pub feasibility_only: bool,
    pub strict_soc: bool,
    /// Smallest pattern step (fraction of a coordinate's range).
    pub min_step: f64,
    /// Required objective decrease to accept a move.
    pub improvement: f64,
    pub max_evaluations: usize,
}

impl Default for RecoveryConfig {
    fn default() -> Self {
        Self {
            coordinates: Coordinates::SpeedAndCharging,
            feasibility_only: false,
            strict_soc: false,
            min_step: 1.0 / 1024.0,
            improvement: 1e-6,
            max_evaluations: 20_000,
        }
    }
}

/// Decision vector: `[speeds (k+1) | waits (k) | charge targets (k)]`,
/// every entry in `[0, 1]`. Speed 0 is the fastest; wait 0 the minimum;
/// target 0 the least charge that keeps the reserve.
struct Decoder<'a> {
    instance: &'a Instance,
    route: &'a Route,
    opts: EvalOptions,
}

impl Decoder<'_> {
    fn stops(&self) -> usize {
        self.route.stations.len()
    }

    fn stage(&self, j: usize, speed: f64) -> Stage {
        let g = &self.instance.graph;
        let edges = self.route.stages[j].clone();
        let times = edges
            .iter()
            .map(|e| {
                let (lo, hi) = g.edge(*e).time_bounds();
                lo + speed * (hi - lo)
            })
            .collect();
        Stage { edges, times }
    }

    fn energy_profile(&self, stage: &Stage) -> (f64, f64) {
        let mut total = 0.0;
        let mut worst = 0.0f64;
        for (e, t) in stage.edges.iter().zip(&stage.times) {
            total += edge_energy_unchecked(self.instance.graph.edge(*e), *t);
            worst = worst.max(total);
        }
        (total, worst)
    }

    fn build(&self, z: &[f64]) -> Option<(Plan, Summary)> {
        let p = &self.instance.params;
        let k = self.stops();
        let stages: Vec<Stage> = (0..=k).map(|j| self.stage(j, z[j])).collect();
        let reserve = p.reserve_kwh();
        let mut waits = Vec::with_capacity(k);
        let mut charges = Vec::with_capacity(k);
        let mut soc = p.initial_soc_kwh;
        for j in 0..=k {
            let (used, _) = self.energy_profile(&stages[j]);
            soc = (soc - used).min(p.battery_kwh);
            if soc < reserve - self.opts.tol {
                return None;
            }
            if j == k {
                break;
            }
            let st = self.instance.graph.station(self.route.stations[j])?;
            let (next, worst) = self.energy_profile(&stages[j + 1]);
            let mut need = reserve + next;
            if self.opts.strict_soc {
                need = need.max(worst);
            }
            let x0 = st.curve.time_to_reach(soc.clamp(0.0, p.battery_kwh));
            let top = st.curve.soc_after(x0 + p.charge_max_h).min(p.battery_kwh);
            let lo = need.max(soc);
            if lo > top + self.opts.tol {
                return None;
            }
            let target = (lo + z[k + 1 + k + j] * (top - lo)).min(top);
            let charge = (st.curve.time_to_reach(target) - x0).clamp(0.0, p.charge_max_h);
            waits.push(p.wait_min_h + z[k + 1 + j] * (p.wait_max_h - p.wait_min_h));
            charges.push(charge);
            soc += soc_increment_unchecked(&st.curve, charge, soc.clamp(0.0, p.battery_kwh));
        }
        let plan = schedule_tight(self.instance, stages, &self.route.stations, &waits, &charges);
        let summary = evaluate_with(&plan, self.instance, self.opts).ok()?;
        summary.feasible.then_some((plan, summary))
    }
}

/// Phase 1 only: the fastest schedule with minimal charging, or `None`.
pub fn recover_feasible(instance: &Instance, route: &Route) -> Option<Plan> {
    reoptimize(
        instance,
        route,
        &RecoveryConfig {
            feasibility_only: true,
            ..RecoveryConfig::default()
        },
    )
    .map(|(p, _)| p)
}

/// Phase 1 followed by the pattern search of phase 2.
pub fn reoptimize(instance: &Instance, route: &Route, cfg: &RecoveryConfig) -> Option<(Plan, Summary)> {
    if route.stages.len() != route.stations.len() + 1 {
        return None;
    }
    let dec = Decoder {
        instance,
        route,
        opts: EvalOptions {
            strict_soc: cfg.strict_soc,
            ..EvalOptions::default()
        },
    };
    let k = dec.stops();
    let dim = 3 * k + 1;
    let mut z = vec![0.0; dim];
    let mut best = None;
    for s in [0.0, 0.25, 0.5, 0.75, 1.0] {
        z[..=k].iter_mut().for_each(|v| *v = s);
        if let Some(found) = dec.build(&z) {
            best = Some(found);
            break;
        }
    }
    let (mut plan, mut summary) = best?;
    if cfg.feasibility_only {
        return Some((plan, summary));
    }

    let coords: Vec<usize> = match cfg.coordinates {
        Coordinates::Speed => (0..=k).collect(),
        Coordinates::SpeedAndCharging => (0..dim).collect(),
    };
    let mut step = 0.25;
    let mut evals = 0;
    while step >= cfg.min_step && evals < cfg.max_evaluations {
        let mut improved = false;
        for &c in &coords {
            for dir in [1.0, -1.0] {
                let v = (z[c] + dir * step).clamp(0.0, 1.0);
                if v == z[c] {
                    continue;
                }
                let old = z[c];
                z[c] = v;
                evals += 1;
                match dec.build(&z) {
                    Some((p, s)) if s.objective < summary.objective - cfg.improvement => {
                        plan = p;
                        summary = s;
                        improved = true;
                        break;
                    }
                    _ => z[c] = old,
                }
            }
        }
        if !improved {
            step *= 0.5;
        }
    }
    Some((plan, summary))
}
