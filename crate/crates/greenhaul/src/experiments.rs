//! Solving helpers, fixed-path baselines and parameter sweeps.
//!
//! Sweeps run instances in parallel and report rows in a fixed order (by
//! parameter, then objective mode), so repeated runs give identical CSVs.

use greenhaul_core::dual::{self, reoptimize, Coordinates, RecoveryConfig, Route, SolverConfig};
use greenhaul_core::oracle::{self, OracleConfig};
use greenhaul_core::plan::{evaluate, Summary};
use greenhaul_core::{Instance, ObjectiveMode, Plan};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::Result;

/// SoC below this counts as running empty inside a stage.
pub const SOC_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub enum Method {
    /// Dual subgradient method (with its polishing step).
    Dual(SolverConfig),
    /// Grid enumeration; small instances only.
    Oracle(OracleConfig),
}

impl Default for Method {
    fn default() -> Self {
        Method::Dual(SolverConfig::default())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub plan: Option<Plan>,
    /// Non-strict evaluation of `plan`.
    pub summary: Option<Summary>,
    pub gap_bound: Option<f64>,
    /// Grid error of an oracle run; 0 for the dual method.
    pub error_bound: f64,
    pub status: &'static str,
}

impl Outcome {
    pub fn objective(&self) -> Option<f64> {
        self.summary.as_ref().map(|s| s.objective)
    }

    /// Whether the plan runs the battery below zero inside a stage.
    pub fn violates_soc(&self) -> bool {
        self.summary.as_ref().is_some_and(|s| s.min_soc < -SOC_TOL)
    }
}

pub fn solve(instance: &Instance, method: &Method) -> Result<Outcome> {
    match method {
        Method::Dual(cfg) => {
            let rep = dual::run(instance, cfg)?;
            let summary = rep.plan.as_ref().map(|p| evaluate(p, instance)).transpose()?;
            Ok(Outcome {
                plan: rep.plan,
                summary,
                gap_bound: rep.gap_bound,
                error_bound: 0.0,
                status: rep.termination.name(),
            })
        }
        Method::Oracle(cfg) => {
            let r = oracle::enumerate_optimal(instance, cfg)?;
            let instance = match cfg.objective {
                Some(m) => instance.with_objective(m),
                None => instance.clone(),
            };
            let summary = r.plan.as_ref().map(|p| evaluate(p, &instance)).transpose()?;
            Ok(Outcome {
                status: if r.plan.is_some() { "grid-optimal" } else { "infeasible" },
                plan: r.plan,
                summary,
                gap_bound: None,
                error_bound: r.error_bound,
            })
        }
    }
}

/// A deadline no plan can need: every segment at its slowest plus the
/// longest possible stops.
pub fn generous_deadline(instance: &Instance) -> f64 {
    let p = &instance.params;
    let slow: f64 = instance.graph.edges().iter().map(|e| e.time_bounds().1).sum();
    slow + p.max_stops as f64 * (p.wait_max_h + p.charge_max_h)
}

/// Completion time `T_f` of the TIME-mode solution, or `None` if the trip
/// is impossible.
pub fn fastest_completion(instance: &Instance, method: &Method) -> Result<Option<f64>> {
    let relaxed = instance
        .with_objective(ObjectiveMode::Time)
        .with_deadline(generous_deadline(instance));
    let method = match method {
        Method::Oracle(cfg) => Method::Oracle(OracleConfig {
            objective: None,
            ..*cfg
        }),
        m => m.clone(),
    };
    Ok(solve(&relaxed, &method)?.summary.map(|s| s.time_h))
}

/// Fixed-path baselines: the TIME-mode route re-optimised for the
/// instance's objective with speeds only (FAST-S) or with speeds and
/// charging (FAST-SC).
#[derive(Debug, Clone, PartialEq)]
pub struct Baselines {
    pub fast: Outcome,
    pub fast_s: Option<(Plan, Summary)>,
    pub fast_sc: Option<(Plan, Summary)>,
}

pub fn fast_baselines(instance: &Instance, method: &Method) -> Result<Baselines> {
    let fast = solve(&instance.with_objective(ObjectiveMode::Time), method)?;
    let (fast_s, fast_sc) = match &fast.plan {
        None => (None, None),
        Some(plan) => {
            let route = Route::of_plan(plan);
            let run = |coordinates| {
                reoptimize(
                    instance,
                    &route,
                    &RecoveryConfig {
                        coordinates,
                        ..RecoveryConfig::default()
                    },
                )
            };
            (run(Coordinates::Speed), run(Coordinates::SpeedAndCharging))
        }
    };
    Ok(Baselines {
        fast,
        fast_s,
        fast_sc,
    })
}

/// One row of the reservation sweep.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AlphaRow {
    pub alpha: f64,
    pub instances: usize,
    pub solved: usize,
    /// Share of instances with a feasible plan.
    pub feasible_fraction: f64,
    /// Share of solved instances whose plan runs empty inside a stage.
    pub violation_fraction: f64,
    pub mean_objective: f64,
    /// Mean of `(ALG_α − ALG_0)/ALG_0` over instances solved at both
    /// values with `ALG_0 > 0` (pairs with `ALG_0 = ALG_α = 0` count as 0).
    pub mean_loss: f64,
    pub mean_gap_bound: f64,
}

fn mean(v: impl Iterator<Item = f64>) -> f64 {
    let (s, n) = v.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    if n == 0 {
        f64::NAN
    } else {
        s / n as f64
    }
}

/// Solves every instance at every reservation ratio and compares with the
/// `α = 0` solution.
pub fn sweep_alpha(instances: &[Instance], alphas: &[f64], method: &Method) -> Result<Vec<AlphaRow>> {
    let mut values = vec![0.0];
    values.extend(alphas.iter().copied().filter(|a| *a != 0.0));
    let grid: Vec<(usize, usize)> = (0..instances.len())
        .flat_map(|i| (0..values.len()).map(move |a| (i, a)))
        .collect();
    let outcomes: Vec<Outcome> = grid
        .par_iter()
        .map(|&(i, a)| solve(&instances[i].with_reservation(values[a]), method))
        .collect::<Result<_>>()?;
    let at = |i: usize, a: usize| &outcomes[i * values.len() + a];

    let mut rows = Vec::with_capacity(alphas.len());
    for &alpha in alphas {
        let a = values.iter().position(|v| *v == alpha).expect("listed");
        let solved: Vec<&Outcome> = (0..instances.len())
            .map(|i| at(i, a))
            .filter(|o| o.summary.is_some())
            .collect();
        let losses = (0..instances.len()).filter_map(|i| {
            let (r, o) = (at(i, 0).objective()?, at(i, a).objective()?);
            if r > 0.0 {
                Some((o - r) / r)
            } else if o == 0.0 {
                Some(0.0)
            } else {
                None
            }
        });
        let n = instances.len().max(1) as f64;
        rows.push(AlphaRow {
            alpha,
            instances: instances.len(),
            solved: solved.len(),
            feasible_fraction: solved.len() as f64 / n,
            violation_fraction: if solved.is_empty() {
                0.0
            } else {
                solved.iter().filter(|o| o.violates_soc()).count() as f64 / solved.len() as f64
            },
            mean_objective: mean(solved.iter().filter_map(|o| o.objective())),
            mean_loss: mean(losses),
            mean_gap_bound: mean(solved.iter().filter_map(|o| o.gap_bound)),
        });
    }
    Ok(rows)
}

/// One row of the deadline sweep.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DeadlineRow {
    pub factor: f64,
    pub mode: &'static str,
    /// Instances solved in all three modes at this factor.
    pub instances: usize,
    pub mean_objective: f64,
    pub mean_carbon_kg: f64,
    pub mean_energy_kwh: f64,
    pub mean_time_h: f64,
    /// `1 − mean carbon / mean carbon of TIME mode`.
    pub carbon_reduction: f64,
    pub energy_reduction: f64,
}

/// Per instance: `T_f`, then every factor × mode with `T = factor·T_f`.
pub fn sweep_deadline(instances: &[Instance], factors: &[f64], method: &Method) -> Result<Vec<DeadlineRow>> {
    let fastest: Vec<Option<f64>> = instances
        .par_iter()
        .map(|inst| fastest_completion(inst, method))
        .collect::<Result<_>>()?;
    let modes = ObjectiveMode::ALL;
    let grid: Vec<(usize, usize, usize)> = (0..instances.len())
        .flat_map(|i| (0..factors.len()).flat_map(move |f| (0..modes.len()).map(move |m| (i, f, m))))
        .collect();
    let outcomes: Vec<Option<Outcome>> = grid
        .par_iter()
        .map(|&(i, f, m)| -> Result<Option<Outcome>> {
            let Some(tf) = fastest[i] else {
                return Ok(None);
            };
            let inst = instances[i]
                .with_deadline(factors[f] * tf)
                .with_objective(modes[m]);
            let method = match method {
                Method::Oracle(cfg) => Method::Oracle(OracleConfig {
                    objective: None,
                    ..*cfg
                }),
                m => m.clone(),
            };
            Ok(Some(solve(&inst, &method)?))
        })
        .collect::<Result<_>>()?;
    let at = |i: usize, f: usize, m: usize| &outcomes[(i * factors.len() + f) * modes.len() + m];

    let mut rows = Vec::new();
    for (f, &factor) in factors.iter().enumerate() {
        let complete: Vec<usize> = (0..instances.len())
            .filter(|&i| (0..modes.len()).all(|m| at(i, f, m).as_ref().is_some_and(|o| o.summary.is_some())))
            .collect();
        let stat = |m: usize, g: &dyn Fn(&Summary) -> f64| {
            mean(complete.iter().map(|&i| g(at(i, f, m).as_ref().unwrap().summary.as_ref().unwrap())))
        };
        let time_idx = modes.iter().position(|m| *m == ObjectiveMode::Time).unwrap();
        let base_carbon = stat(time_idx, &|s| s.carbon_kg);
        let base_energy = stat(time_idx, &|s| s.energy_kwh);
        let reduction = |v: f64, base: f64| if base > 0.0 { 1.0 - v / base } else { 0.0 };
        for (m, mode) in modes.iter().enumerate() {
            let carbon = stat(m, &|s| s.carbon_kg);
            let energy = stat(m, &|s| s.energy_kwh);
            rows.push(DeadlineRow {
                factor,
                mode: mode.name(),
                instances: complete.len(),
                mean_objective: stat(m, &|s| s.objective),
                mean_carbon_kg: carbon,
                mean_energy_kwh: energy,
                mean_time_h: stat(m, &|s| s.time_h),
                carbon_reduction: reduction(carbon, base_carbon),
                energy_reduction: reduction(energy, base_energy),
            });
        }
    }
    Ok(rows)
}
