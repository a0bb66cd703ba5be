//! Dual subgradient method.
//!
//! The per-stage time and energy coupling constraints are priced with
//! multipliers `λ = (λβ, λτ) ≥ 0`. For fixed prices the Lagrangian splits
//! into speed subproblems (one per stage and segment), charging
//! subproblems (one per stop number and station) and a shortest path over
//! the extended graph that picks the stops. Its minimisers give a
//! subgradient (the residuals), and the prices move along it.
//!
//! Every dual value is a lower bound on the optimum. A minimiser whose
//! residuals are all non-positive is a feasible plan, and its distance to
//! the optimum is at most `−Σ λ·δ`.

pub mod charging_sub;
pub mod outer;
pub mod paths;
pub mod recovery;
pub mod speed;

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::network::{DualVector, Instance, NodeId};
use crate::plan::{evaluate_with, residuals, Arrival, EvalOptions, Plan, Residuals, Stage, Stop};

pub use charging_sub::{
    h_value, minimize_h, solve_charging_subproblem, BnbConfig, ChargingChoice, ChargingPrices,
};
pub use outer::{solve_outer, ExNode, ExtendedGraph, OuterInput, OuterSolution};
pub use paths::{all_pairs_stage_paths, bellman_ford, ShortestPaths, StagePaths};
pub use recovery::{recover_feasible, reoptimize, Coordinates, RecoveryConfig, Route};
pub use speed::{solve_speed_subproblem, stage_speeds, SpeedChoice};

/// `(λ + θ·δ)₊`, componentwise.
pub fn dual_update(duals: &DualVector, res: &Residuals, theta: f64) -> DualVector {
    scaled_update(duals, res, theta, 1.0, 1.0)
}

fn scaled_update(duals: &DualVector, res: &Residuals, theta: f64, s_beta: f64, s_tau: f64) -> DualVector {
    let step = |l: &[f64], d: &[f64], s: f64| -> Vec<f64> {
        l.iter().zip(d).map(|(l, d)| (l + theta * s * d).max(0.0)).collect()
    };
    DualVector {
        beta: step(&duals.beta, &res.beta, s_beta),
        tau: step(&duals.tau, &res.tau, s_tau),
    }
}

/// Everything produced by one evaluation of the dual function.
#[derive(Debug, Clone, PartialEq)]
pub struct DualEvaluation {
    /// `D(λ)` from the computed subproblem minima.
    pub value: f64,
    /// Same shortest path with every charging value replaced by its
    /// certified lower bound; never above the true `D(λ)`.
    pub certified: f64,
    /// Minimiser of the Lagrangian as a plan (destination scheduled at
    /// `T` with SoC `αB`).
    pub plan: Plan,
    pub residuals: Residuals,
    /// Largest branch-and-bound gap among the charging subproblems.
    pub sigma_gap: f64,
}

fn outer_input(
    instance: &Instance,
    duals: &DualVector,
    paths: &[StagePaths],
    sigma: &[Vec<ChargingChoice>],
    certified: bool,
) -> OuterInput {
    let g = &instance.graph;
    let p = &instance.params;
    let stations: Vec<NodeId> = g.stations().iter().map(|s| s.node).collect();
    let targets: Vec<NodeId> = stations
        .iter()
        .copied()
        .chain(core::iter::once(instance.destination))
        .collect();
    let row = |sp: &ShortestPaths| targets.iter().map(|t| sp.cost(*t)).collect::<Vec<_>>();
    OuterInput {
        stations: stations.len(),
        from_origin: paths.iter().map(|sp| row(&sp.from_origin)).collect(),
        from_station: paths
            .iter()
            .map(|sp| sp.from_station.iter().map(row).collect())
            .collect(),
        sigma: sigma
            .iter()
            .map(|layer| {
                layer
                    .iter()
                    .map(|c| if certified { c.lower_bound } else { c.value })
                    .collect()
            })
            .collect(),
        exit: (0..duals.stages())
            .map(|j| -duals.tau[j] * p.deadline_h + duals.beta[j] * p.reserve_kwh())
            .collect(),
        base: -duals.beta[0] * p.initial_soc_kwh,
    }
}

/// Evaluates `D(λ)` and returns a minimiser.
pub fn evaluate_dual(instance: &Instance, duals: &DualVector, bnb: &BnbConfig) -> Result<DualEvaluation> {
    let g = &instance.graph;
    let p = &instance.params;
    let stages = p.max_stops + 1;
    if duals.stages() != stages || duals.tau.len() != stages {
        return Err(Error::Config(alloc::format!(
            "expected {stages} multiplier pairs, got {}",
            duals.stages()
        )));
    }
    if !duals.is_nonnegative() {
        return Err(Error::Config("multipliers must be non-negative".into()));
    }
    let mut speeds = Vec::with_capacity(stages);
    let mut paths = Vec::with_capacity(stages);
    for j in 1..=stages {
        let sp = stage_speeds(instance, duals, j)?;
        let w: Vec<f64> = sp.iter().map(|c| c.value).collect();
        paths.push(all_pairs_stage_paths(g, instance.origin, &w, j)?);
        speeds.push(sp);
    }
    let prices_cfg = *bnb;
    let mut sigma = Vec::with_capacity(p.max_stops);
    for i in 1..=p.max_stops {
        let prices = ChargingPrices::for_stop(duals, i)?;
        let layer = g
            .stations()
            .iter()
            .map(|st| minimize_h(p, st, &prices, &prices_cfg))
            .collect::<Result<Vec<_>>>()?;
        sigma.push(layer);
    }
    let sigma_gap = sigma
        .iter()
        .flatten()
        .map(ChargingChoice::gap)
        .fold(0.0, f64::max);

    let sol = solve_outer(&outer_input(instance, duals, &paths, &sigma, false))?;
    let certified = solve_outer(&outer_input(instance, duals, &paths, &sigma, true))?.value;

    // rebuild the minimiser as a plan
    let stations: Vec<NodeId> = g.stations().iter().map(|s| s.node).collect();
    let mut plan_stages = Vec::with_capacity(sol.stops.len() + 1);
    let mut stops = Vec::with_capacity(sol.stops.len());
    let mut at = instance.origin;
    for (i, &u) in sol.stops.iter().chain(core::iter::once(&usize::MAX)).enumerate() {
        let to = if u == usize::MAX {
            instance.destination
        } else {
            stations[u]
        };
        let src = paths[i]
            .from_source(g, at)
            .ok_or(Error::Unreachable)?;
        let edges = src.path(g, to).ok_or(Error::Unreachable)?;
        let times = edges.iter().map(|e| speeds[i][e.index()].time).collect();
        plan_stages.push(Stage { edges, times });
        if u != usize::MAX {
            let c = &sigma[i][u];
            stops.push(Stop {
                station: to,
                arrival: c.arrival,
                soc: c.soc,
                wait: c.wait,
                charge: c.charge,
            });
        }
        at = to;
    }
    let plan = Plan {
        stages: plan_stages,
        stops,
        destination: Arrival {
            time: p.deadline_h,
            soc: p.reserve_kwh(),
        },
    };
    let res = residuals(&plan, instance);
    Ok(DualEvaluation {
        value: sol.value,
        certified: certified.min(sol.value),
        plan,
        residuals: res,
        sigma_gap,
    })
}

/// Step-size rule.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StepRule {
    /// `θ_k = 1/√K`.
    Constant,
    /// A fixed `θ`.
    Fixed(f64),
    /// Polyak-type step towards the best known objective (or an estimate).
    Polyak,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub iterations: usize,
    pub step: StepRule,
    pub bnb: BnbConfig,
    /// Residual tolerance for feasibility and early termination.
    pub tol: f64,
    /// Require non-negative SoC on every segment of accepted plans.
    pub strict_soc: bool,
    /// Re-optimise speeds and charging on the best route found.
    pub polish: bool,
    /// Optional per-component step scales `(S_β, S_τ)`; by default they are
    /// derived from the instance so both price families move at comparable
    /// relative rates.
    pub scale: Option<(f64, f64)>,
    /// Initial multipliers (zeros if `None`).
    pub start: Option<DualVector>,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            iterations: 200,
            step: StepRule::Constant,
            bnb: BnbConfig::default(),
            tol: crate::plan::FEASIBILITY_TOL,
            strict_soc: false,
            polish: true,
            scale: None,
            start: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    /// A dual minimiser was feasible with vanishing residuals or a zero
    /// posterior bound.
    Optimal,
    IterationLimit,
    /// The returned plan came out of the re-planning heuristic.
    Recovered,
    Infeasible,
}

impl Termination {
    pub fn name(self) -> &'static str {
        match self {
            Self::Optimal => "optimal",
            Self::IterationLimit => "iteration-limit",
            Self::Recovered => "recovered",
            Self::Infeasible => "infeasible",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IterationRecord {
    pub k: usize,
    pub dual: f64,
    pub certified_dual: f64,
    pub max_residual: f64,
    pub best_feasible: Option<f64>,
    pub gap_bound: Option<f64>,
    pub duals: DualVector,
    pub residuals: Residuals,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeasibleIterate {
    pub k: usize,
    pub objective: f64,
    /// `−Σ λ·δ` plus the subproblem slack `D − D_cert` of that iteration.
    pub posterior: f64,
    pub duals: DualVector,
    pub residuals: Residuals,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverReport {
    pub plan: Option<Plan>,
    pub objective: Option<f64>,
    /// Best `D(λ[k])`.
    pub best_dual: f64,
    /// Best certified dual value.
    pub best_certified_dual: f64,
    pub log: Vec<IterationRecord>,
    /// Feasible dual minimiser with the best objective, if any.
    pub iterate: Option<FeasibleIterate>,
    pub gap_bound: Option<f64>,
    pub termination: Termination,
}

/// Optimality gap of a feasible Lagrangian minimiser: `−Σ λ·δ`.
pub fn posterior_gap(duals: &DualVector, res: &Residuals) -> f64 {
    (-res.dot(duals)).max(0.0)
}

/// Objective and completion-time scales used to normalise the steps.
fn default_scale(instance: &Instance) -> (f64, f64) {
    let p = &instance.params;
    let g = &instance.graph;
    let objective_scale = match p.objective {
        crate::network::ObjectiveMode::Carbon => {
            let pi = g
                .stations()
                .iter()
                .map(|s| s.intensity.breakpoints().max_value())
                .fold(0.0, f64::max)
                .max(1e-3);
            pi * p.battery_kwh / p.efficiency
        }
        crate::network::ObjectiveMode::Energy => p.battery_kwh / p.efficiency,
        crate::network::ObjectiveMode::Time => p.deadline_h,
    };
    (
        objective_scale / (p.battery_kwh * p.battery_kwh),
        objective_scale / (p.deadline_h * p.deadline_h),
    )
}

/// Runs the dual subgradient method.
pub fn run(instance: &Instance, cfg: &SolverConfig) -> Result<SolverReport> {
    if cfg.iterations == 0 {
        return Err(Error::Config("iteration budget must be positive".into()));
    }
    let stages = instance.params.max_stops + 1;
    let mut duals = cfg.start.clone().unwrap_or_else(|| DualVector::zeros(stages));
    let (s_beta, s_tau) = cfg.scale.unwrap_or_else(|| default_scale(instance));
    let theta0 = 1.0 / libm::sqrt(cfg.iterations as f64);
    let eval_opts = EvalOptions {
        tol: cfg.tol,
        strict_soc: cfg.strict_soc,
    };

    let mut log = Vec::with_capacity(cfg.iterations);
    let mut best_dual = f64::NEG_INFINITY;
    let mut best_cert = f64::NEG_INFINITY;
    let mut best: Option<(Plan, FeasibleIterate)> = None;
    let mut routes: Vec<Route> = Vec::new();
    let mut termination = Termination::IterationLimit;

    for k in 0..cfg.iterations {
        let ev = evaluate_dual(instance, &duals, &cfg.bnb)?;
        best_dual = best_dual.max(ev.value);
        best_cert = best_cert.max(ev.certified);
        let route = Route::of_plan(&ev.plan);
        if !routes.contains(&route) {
            routes.push(route);
        }

        let summary = evaluate_with(&ev.plan, instance, eval_opts)?;
        let mut optimal = false;
        if summary.feasible {
            let posterior = posterior_gap(&duals, &ev.residuals) + (ev.value - ev.certified);
            if best.as_ref().map_or(true, |(_, b)| summary.objective < b.objective) {
                best = Some((
                    ev.plan.clone(),
                    FeasibleIterate {
                        k,
                        objective: summary.objective,
                        posterior,
                        duals: duals.clone(),
                        residuals: ev.residuals.clone(),
                    },
                ));
            }
            let scale = 1.0 + summary.objective.abs();
            optimal = ev.residuals.max_abs() <= cfg.tol || posterior <= cfg.tol * scale;
        }
        log.push(IterationRecord {
            k,
            dual: ev.value,
            certified_dual: ev.certified,
            max_residual: ev.residuals.max(),
            best_feasible: best.as_ref().map(|(_, b)| b.objective),
            gap_bound: best
                .as_ref()
                .map(|(_, b)| b.posterior.min(b.objective - best_cert).max(0.0)),
            duals: duals.clone(),
            residuals: ev.residuals.clone(),
        });
        if optimal {
            termination = Termination::Optimal;
            break;
        }

        let theta = match cfg.step {
            StepRule::Constant => theta0,
            StepRule::Fixed(t) => t,
            StepRule::Polyak => {
                let target = best
                    .as_ref()
                    .map(|(_, b)| b.objective)
                    .unwrap_or(best_dual.abs() * 1.1 + 1.0);
                let norm: f64 = ev.residuals.beta.iter().map(|d| s_beta * d * d).sum::<f64>()
                    + ev.residuals.tau.iter().map(|d| s_tau * d * d).sum::<f64>();
                if norm > 0.0 {
                    ((target - ev.value).max(0.0) / norm).min(1e3 * theta0)
                } else {
                    theta0
                }
            }
        };
        duals = scaled_update(&duals, &ev.residuals, theta, s_beta, s_tau);
    }

    let mut plan = best.as_ref().map(|(p, _)| p.clone());
    let mut objective = best.as_ref().map(|(_, b)| b.objective);
    let iterate = best.map(|(_, b)| b);

    if termination != Termination::Optimal && (cfg.polish || plan.is_none()) {
        let rc = RecoveryConfig {
            feasibility_only: !cfg.polish,
            strict_soc: cfg.strict_soc,
            ..RecoveryConfig::default()
        };
        let mut candidates: Vec<Route> = Vec::new();
        if let Some(p) = &plan {
            candidates.push(Route::of_plan(p));
        }
        // most recent routes first
        for r in routes.iter().rev() {
            if !candidates.contains(r) {
                candidates.push(r.clone());
            }
            if candidates.len() >= 4 {
                break;
            }
        }
        for r in &candidates {
            if let Some((p, s)) = reoptimize(instance, r, &rc) {
                if objective.map_or(true, |o| s.objective < o - 1e-9) {
                    objective = Some(s.objective);
                    plan = Some(p);
                    termination = Termination::Recovered;
                }
            }
        }
    }
    if plan.is_none() {
        termination = Termination::Infeasible;
    }

    let gap_bound = objective.map(|obj| {
        let dual_gap = obj - best_cert;
        let from_iterate = match (&iterate, termination) {
            (Some(it), t) if t != Termination::Recovered => it.posterior,
            _ => f64::INFINITY,
        };
        from_iterate.min(dual_gap).max(0.0)
    });
    Ok(SolverReport {
        plan,
        objective,
        best_dual,
        best_certified_dual: best_cert,
        log,
        iterate,
        gap_bound,
        termination,
    })
}

/// Zero multipliers sized for `instance`.
pub fn zero_duals(instance: &Instance) -> DualVector {
    DualVector::zeros(instance.params.max_stops + 1)
}

/// Lagrangian of a plan: objective plus `Σ λ·δ`.
pub fn lagrangian(plan: &Plan, instance: &Instance, duals: &DualVector) -> f64 {
    crate::plan::objective(plan, instance) + residuals(plan, instance).dot(duals)
}
