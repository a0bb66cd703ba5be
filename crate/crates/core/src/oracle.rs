//! Brute-force reference solver for small instances.
//!
//! Every stage decomposition (station sequence × simple subpaths) is
//! combined with every grid point of the per-segment travel times, waits
//! and charging times. Arrival times and SoC follow from the tight
//! timeline, so they are not gridded. Only exact pruning is used:
//! deadline lower bounds, infeasible SoC and, when all stop costs are
//! non-negative, the incumbent objective.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::charging::{soc_increment_unchecked, stop_cost_extended};
use crate::energy::edge_energy_unchecked;
use crate::error::{Error, Result};
use crate::network::{EdgeId, Instance, NodeId, ObjectiveMode};
use crate::plan::{evaluate_with, objective, schedule_tight, EvalOptions, Plan, Stage, Summary};

pub const MAX_NODES: usize = 15;
pub const MAX_STATIONS: usize = 4;
pub const MAX_STOPS: usize = 2;
pub const MAX_PATH_LEN: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleConfig {
    /// Grid points per segment travel time.
    pub g_t: usize,
    /// Grid points for the charging time.
    pub g_c: usize,
    /// Grid points for the wait.
    pub g_w: usize,
    pub max_path_len: usize,
    /// Objective override; the instance's own mode if `None`.
    pub objective: Option<ObjectiveMode>,
    /// Require a non-negative SoC after every segment.
    pub strict_soc: bool,
}

impl Default for OracleConfig {
    fn default() -> Self {
        Self {
            g_t: 4,
            g_c: 9,
            g_w: 3,
            max_path_len: MAX_PATH_LEN,
            objective: None,
            strict_soc: true,
        }
    }
}

impl OracleConfig {
    /// Every resolution doubled (in intervals), keeping the grid nested.
    pub fn refined(&self) -> Self {
        Self {
            g_t: 2 * self.g_t - 1,
            g_c: 2 * self.g_c - 1,
            g_w: 2 * self.g_w - 1,
            ..*self
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleResult {
    /// Grid optimum; `None` if no grid point is feasible.
    pub plan: Option<Plan>,
    pub summary: Option<Summary>,
    pub objective: Option<f64>,
    /// Sum over decision variables of the largest objective change caused
    /// by moving that variable one grid step from the optimum, capped by
    /// the distance to a trivial lower bound.
    pub error_bound: f64,
    /// Complete candidate plans examined.
    pub candidates: u64,
}

impl OracleResult {
    pub fn is_feasible(&self) -> bool {
        self.plan.is_some()
    }
}

fn grid(lo: f64, hi: f64, g: usize) -> Vec<f64> {
    let mut v: Vec<f64> = (0..g)
        .map(|k| lo + (hi - lo) * k as f64 / (g - 1) as f64)
        .collect();
    v[g - 1] = hi;
    v
}

struct PathInfo {
    edges: Vec<EdgeId>,
    /// `times[e][k]` and `energy[e][k]` for grid point `k` of edge `e`.
    times: Vec<Vec<f64>>,
    energy: Vec<Vec<f64>>,
    min_time: f64,
    /// `(total time, total energy, code)`; `code` packs the per-edge grid
    /// indices in base `g_t`.
    combos: Vec<(f64, f64, u32)>,
}

impl PathInfo {
    fn digits(&self, mut code: u32, g: usize) -> Vec<usize> {
        let mut d = vec![0; self.edges.len()];
        for slot in d.iter_mut() {
            *slot = code as usize % g;
            code /= g as u32;
        }
        d
    }

    /// Lowest SoC along the path when starting at `soc`, saturating at `cap`.
    fn min_trace(&self, code: u32, g: usize, mut soc: f64, cap: f64) -> f64 {
        let mut low = soc;
        let mut c = code as usize;
        for e in &self.energy {
            soc = (soc - e[c % g]).min(cap);
            low = low.min(soc);
            c /= g;
        }
        low
    }
}

/// Decisions of one candidate: per stage the path and its code, per stop
/// the wait and charge indices.
#[derive(Debug, Clone, Default)]
struct Choice {
    stations: Vec<NodeId>,
    paths: Vec<(usize, u32)>,
    waits: Vec<usize>,
    charges: Vec<usize>,
}

struct Search<'a> {
    instance: &'a Instance,
    cfg: OracleConfig,
    /// Paths keyed by their end points.
    paths: BTreeMap<(u32, u32), Vec<usize>>,
    store: Vec<PathInfo>,
    waits: Vec<f64>,
    charges: Vec<f64>,
    /// Fastest driving time from each node to the destination.
    to_dest: Vec<f64>,
    cost_prune: bool,
    best: Option<(f64, Choice, Plan, Summary)>,
    candidates: u64,
    opts: EvalOptions,
}

impl Search<'_> {
    /// Next stage ends: `(node, finishes the trip)`.
    fn targets(&self, from: NodeId, stage: usize) -> Vec<(NodeId, bool)> {
        let g = &self.instance.graph;
        let mut t = vec![(self.instance.destination, true)];
        if stage < self.instance.params.max_stops {
            t.extend(g.stations().iter().map(|s| (s.node, false)));
        }
        t.retain(|(n, _)| self.paths.contains_key(&(from.0, n.0)));
        t
    }

    fn build(&self, choice: &Choice) -> Plan {
        let stages = choice
            .paths
            .iter()
            .map(|&(pid, code)| {
                let p = &self.store[pid];
                let d = p.digits(code, self.cfg.g_t);
                Stage {
                    edges: p.edges.clone(),
                    times: d.iter().enumerate().map(|(e, k)| p.times[e][*k]).collect(),
                }
            })
            .collect();
        let waits: Vec<f64> = choice.waits.iter().map(|k| self.waits[*k]).collect();
        let charges: Vec<f64> = choice.charges.iter().map(|k| self.charges[*k]).collect();
        schedule_tight(self.instance, stages, &choice.stations, &waits, &charges)
    }

    fn offer(&mut self, value: f64, choice: &Choice) {
        self.candidates += 1;
        if self.best.as_ref().is_some_and(|b| value >= b.0) {
            return;
        }
        let plan = self.build(choice);
        let Ok(summary) = evaluate_with(&plan, self.instance, self.opts) else {
            return;
        };
        if summary.feasible && self.best.as_ref().map_or(true, |b| summary.objective < b.0) {
            self.best = Some((summary.objective, choice.clone(), plan, summary));
        }
    }

    fn dfs(&mut self, at: NodeId, stage: usize, clock: f64, soc: f64, cost: f64, choice: &mut Choice) {
        let inst = self.instance;
        let p = &inst.params;
        let (deadline, cap, reserve, tol) = (p.deadline_h, p.battery_kwh, p.reserve_kwh(), self.opts.tol);
        let counts_time = p.objective.counts_travel_time();
        for (target, finishing) in self.targets(at, stage) {
            // least time still needed after reaching `target`
            let rest = if finishing {
                0.0
            } else {
                p.wait_min_h + self.to_dest[target.index()]
            };
            let rest_cost = if counts_time { rest } else { 0.0 };
            let pids = self.paths[&(at.0, target.0)].clone();
            // paths by fastest time, combos by time: the time tests can stop
            // the scan
            for pid in pids {
                if clock + self.store[pid].min_time + rest > deadline + tol {
                    break;
                }
                let n_combos = self.store[pid].combos.len();
                for ci in 0..n_combos {
                    let (time, energy, code) = self.store[pid].combos[ci];
                    let arrive = clock + time;
                    if arrive + rest > deadline + tol {
                        break;
                    }
                    let travel_cost = if counts_time { time } else { 0.0 };
                    if self.cost_prune
                        && self.best.as_ref().is_some_and(|b| cost + travel_cost + rest_cost >= b.0)
                    {
                        if counts_time {
                            break;
                        }
                        continue;
                    }
                    let end = (soc - energy).min(cap);
                    if end < reserve - tol {
                        continue;
                    }
                    if self.cfg.strict_soc
                        && self.store[pid].min_trace(code, self.cfg.g_t, soc, cap) < -tol
                    {
                        continue;
                    }
                    choice.paths.push((pid, code));
                    if finishing {
                        self.offer(cost + travel_cost, choice);
                    } else {
                        self.stop(target, stage, arrive, end, cost + travel_cost, choice);
                    }
                    choice.paths.pop();
                }
            }
        }
    }

    fn stop(&mut self, station: NodeId, stage: usize, arrive: f64, soc: f64, cost: f64, choice: &mut Choice) {
        let inst = self.instance;
        let p = &inst.params;
        let st = inst.graph.station(station).expect("station target");
        let (curve, signal) = (&st.curve, &st.intensity);
        let cap = p.battery_kwh;
        let to_dest = self.to_dest[station.index()];
        let latest = p.deadline_h - to_dest + self.opts.tol;
        let rest_cost = if p.objective.counts_travel_time() { to_dest } else { 0.0 };
        choice.stations.push(station);
        for wi in 0..self.waits.len() {
            let w = self.waits[wi];
            // stop costs grow with the charging time when pruning is on
            for ci in 0..self.charges.len() {
                let c = self.charges[ci];
                if arrive + w + c > latest {
                    break;
                }
                let sc = stop_cost_extended(p.objective, curve, signal, soc, c, w, arrive, p.efficiency);
                let total = cost + sc;
                if self.cost_prune && self.best.as_ref().is_some_and(|b| total + rest_cost >= b.0) {
                    break;
                }
                let next = (soc + soc_increment_unchecked(curve, c, soc.clamp(0.0, cap))).min(cap);
                choice.waits.push(wi);
                choice.charges.push(ci);
                self.dfs(station, stage + 1, arrive + w + c, next, total, choice);
                choice.waits.pop();
                choice.charges.pop();
            }
        }
        choice.stations.pop();
    }
}

fn simple_paths(instance: &Instance, from: NodeId, to: NodeId, max_len: usize) -> Vec<Vec<EdgeId>> {
    let g = &instance.graph;
    let mut out = Vec::new();
    if from == to {
        out.push(Vec::new());
        return out;
    }
    let mut visited = vec![false; g.node_count()];
    let mut stack: Vec<EdgeId> = Vec::new();
    fn rec(
        g: &crate::network::TransportGraph,
        at: NodeId,
        to: NodeId,
        max_len: usize,
        visited: &mut Vec<bool>,
        stack: &mut Vec<EdgeId>,
        out: &mut Vec<Vec<EdgeId>>,
    ) {
        if at == to {
            out.push(stack.clone());
            return;
        }
        if stack.len() == max_len {
            return;
        }
        visited[at.index()] = true;
        for &e in g.out_edges(at) {
            let next = g.edge(e).to;
            if !visited[next.index()] {
                stack.push(e);
                rec(g, next, to, max_len, visited, stack, out);
                stack.pop();
            }
        }
        visited[at.index()] = false;
    }
    rec(g, from, to, max_len, &mut visited, &mut stack, &mut out);
    out
}

fn fastest_to(instance: &Instance, to: NodeId) -> Vec<f64> {
    let g = &instance.graph;
    let mut d = vec![f64::INFINITY; g.node_count()];
    d[to.index()] = 0.0;
    for _ in 0..g.node_count() {
        let mut changed = false;
        for e in g.edges() {
            let c = d[e.to.index()] + e.time_bounds().0;
            if c < d[e.from.index()] {
                d[e.from.index()] = c;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    d
}

/// Grid-optimal plan of a small instance.
pub fn enumerate_optimal(instance: &Instance, cfg: &OracleConfig) -> Result<OracleResult> {
    let g = &instance.graph;
    let p = &instance.params;
    if cfg.g_t < 2 || cfg.g_c < 2 || cfg.g_w < 2 {
        return Err(Error::Config("oracle grid resolutions must be at least 2".into()));
    }
    let refuse = |what: &str, have: usize, limit: usize| -> Result<()> {
        if have > limit {
            Err(Error::OracleRefused(format!("{what} {have} exceeds the limit of {limit}")))
        } else {
            Ok(())
        }
    };
    refuse("node count", g.node_count(), MAX_NODES)?;
    refuse("station count", g.stations().len(), MAX_STATIONS)?;
    refuse("stop budget", p.max_stops, MAX_STOPS)?;
    refuse("path length", cfg.max_path_len, MAX_PATH_LEN)?;
    if (cfg.g_t as u64).pow(cfg.max_path_len as u32) > u32::MAX as u64 {
        return Err(Error::OracleRefused("travel-time grid too fine for the path length".into()));
    }

    let owned;
    let instance = match cfg.objective {
        Some(mode) if mode != p.objective => {
            owned = instance.with_objective(mode);
            &owned
        }
        _ => instance,
    };
    let p = &instance.params;

    let to_dest = fastest_to(instance, instance.destination);
    let mut terminals = vec![instance.origin];
    terminals.extend(g.stations().iter().map(|s| s.node));
    let mut paths: BTreeMap<(u32, u32), Vec<usize>> = BTreeMap::new();
    let mut store = Vec::new();
    for &a in &terminals {
        let mut ends: Vec<NodeId> = g.stations().iter().map(|s| s.node).collect();
        ends.push(instance.destination);
        for &b in &ends {
            if paths.contains_key(&(a.0, b.0)) {
                continue;
            }
            let mut ids = Vec::new();
            for edges in simple_paths(instance, a, b, cfg.max_path_len) {
                let segs: Vec<_> = edges.iter().map(|e| g.edge(*e)).collect();
                let min_time: f64 = segs.iter().map(|s| s.time_bounds().0).sum();
                if min_time > p.deadline_h + 1e-9 {
                    continue;
                }
                let times: Vec<Vec<f64>> = segs
                    .iter()
                    .map(|s| {
                        let (lo, hi) = s.time_bounds();
                        grid(lo, hi, cfg.g_t)
                    })
                    .collect();
                let energy: Vec<Vec<f64>> = segs
                    .iter()
                    .zip(&times)
                    .map(|(s, ts)| ts.iter().map(|t| edge_energy_unchecked(s, *t)).collect())
                    .collect();
                let total = cfg.g_t.pow(edges.len() as u32);
                let mut combos = Vec::with_capacity(total);
                for code in 0..total {
                    let (mut t, mut e, mut c) = (0.0, 0.0, code);
                    for k in 0..edges.len() {
                        t += times[k][c % cfg.g_t];
                        e += energy[k][c % cfg.g_t];
                        c /= cfg.g_t;
                    }
                    if t <= p.deadline_h + 1e-9 {
                        combos.push((t, e, code as u32));
                    }
                }
                combos.sort_by(|x, y| x.0.total_cmp(&y.0));
                ids.push(store.len());
                store.push(PathInfo {
                    edges,
                    times,
                    energy,
                    min_time,
                    combos,
                });
            }
            ids.sort_by(|x, y| store[*x].min_time.total_cmp(&store[*y].min_time));
            paths.insert((a.0, b.0), ids);
        }
    }

    let cost_prune = p.efficiency > 0.0
        && g.stations().iter().all(|s| s.intensity.is_nonnegative());
    let mut search = Search {
        instance,
        cfg: *cfg,
        paths,
        store,
        waits: grid(p.wait_min_h, p.wait_max_h, cfg.g_w),
        charges: grid(0.0, p.charge_max_h, cfg.g_c),
        to_dest,
        cost_prune,
        best: None,
        candidates: 0,
        opts: EvalOptions {
            strict_soc: cfg.strict_soc,
            ..EvalOptions::default()
        },
    };
    let mut choice = Choice::default();
    if p.wait_min_h <= p.wait_max_h {
        search.dfs(instance.origin, 0, 0.0, p.initial_soc_kwh, 0.0, &mut choice);
    }

    let Some((value, best, plan, summary)) = search.best.take() else {
        return Ok(OracleResult {
            plan: None,
            summary: None,
            objective: None,
            error_bound: 0.0,
            candidates: search.candidates,
        });
    };
    // the true optimum cannot fall below a valid lower bound
    let floor = if !search.cost_prune {
        f64::NEG_INFINITY
    } else if p.objective.counts_travel_time() {
        search.to_dest[instance.origin.index()]
    } else {
        0.0
    };
    let error_bound = sensitivity(&search, &best, value).min(value - floor).max(0.0);
    Ok(OracleResult {
        plan: Some(plan),
        summary: Some(summary),
        objective: Some(value),
        error_bound,
        candidates: search.candidates,
    })
}

/// One-step finite differences of the objective around the optimum.
fn sensitivity(search: &Search, best: &Choice, value: f64) -> f64 {
    let gt = search.cfg.g_t;
    let mut total = 0.0;
    let probe = |c: &Choice| (objective(&search.build(c), search.instance) - value).abs();
    for s in 0..best.paths.len() {
        let (pid, code) = best.paths[s];
        let path = &search.store[pid];
        let digits = path.digits(code, gt);
        for e in 0..digits.len() {
            let mut worst = 0.0f64;
            for step in [-1i64, 1] {
                let k = digits[e] as i64 + step;
                if k < 0 || k >= gt as i64 {
                    continue;
                }
                let mut d = digits.clone();
                d[e] = k as usize;
                let code2 = d.iter().rev().fold(0u32, |acc, x| acc * gt as u32 + *x as u32);
                let mut c = best.clone();
                c.paths[s] = (pid, code2);
                worst = worst.max(probe(&c));
            }
            total += worst;
        }
    }
    for j in 0..best.waits.len() {
        for (field, n) in [(0, search.waits.len()), (1, search.charges.len())] {
            let mut worst = 0.0f64;
            for step in [-1i64, 1] {
                let cur = if field == 0 { best.waits[j] } else { best.charges[j] } as i64;
                let k = cur + step;
                if k < 0 || k >= n as i64 {
                    continue;
                }
                let mut c = best.clone();
                if field == 0 {
                    c.waits[j] = k as usize;
                } else {
                    c.charges[j] = k as usize;
                }
                worst = worst.max(probe(&c));
            }
            total += worst;
        }
    }
    total
}
