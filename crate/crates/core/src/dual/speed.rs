//! Speed subproblems: one convex scalar problem per (stage, segment).

use alloc::vec::Vec;

use crate::energy::minimize_affine_tradeoff;
use crate::error::{Error, Result};
use crate::network::{DualVector, EdgeId, Instance};

/// Minimiser and value of `w` for one segment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpeedChoice {
    pub time: f64,
    pub value: f64,
}

fn check_stage(duals: &DualVector, stage: usize) -> Result<()> {
    if stage == 0 || stage > duals.stages() {
        return Err(Error::Config(alloc::format!(
            "stage {stage} outside 1..={}",
            duals.stages()
        )));
    }
    Ok(())
}

/// `w = min_t λτ·t + λβ·c(t)` on the segment's time box for stage `stage`
/// (1-based). In time mode the travel time itself is part of the
/// objective, so `λτ` is raised by one.
pub fn solve_speed_subproblem(
    instance: &Instance,
    duals: &DualVector,
    stage: usize,
    edge: EdgeId,
) -> Result<SpeedChoice> {
    check_stage(duals, stage)?;
    let seg = instance.graph.try_edge(edge)?;
    let extra = if instance.params.objective.counts_travel_time() {
        1.0
    } else {
        0.0
    };
    let (time, value) =
        minimize_affine_tradeoff(seg, duals.tau[stage - 1] + extra, duals.beta[stage - 1])?;
    Ok(SpeedChoice { time, value })
}

/// Speed choices for every segment in one stage, indexed by edge id.
pub fn stage_speeds(instance: &Instance, duals: &DualVector, stage: usize) -> Result<Vec<SpeedChoice>> {
    (0..instance.graph.edges().len())
        .map(|e| solve_speed_subproblem(instance, duals, stage, EdgeId(e as u32)))
        .collect()
}
