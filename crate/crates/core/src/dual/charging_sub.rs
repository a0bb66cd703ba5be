//! Charging subproblems: minimise the stop trade-off `h` over the box
//! `t_c ∈ [0, t_c^ub]`, `t_w ∈ [t_w^lb, t_w^ub]`, `β ∈ [αB, B]`, `τ ∈ [0, T]`.
//!
//! With `λ, λ'` the time prices of the stages before and after the stop and
//! `μ, μ'` the energy prices,
//!
//! `h = F + λ'(t_w + t_c) + (λ' − λ)τ + (μ − μ')β − μ'φ(t_c, β)`
//!
//! (plus `t_w + t_c` when time is the objective). The box is reduced
//! before branching:
//!
//! * `τ` and `t_w` only enter through the charging start `s = τ + t_w` and
//!   a term `λ·t_w` with a non-negative coefficient, so for fixed `s` the
//!   shortest feasible wait `t_w = max(t_w^lb, s − T)` is optimal.
//! * In curve time (`x = Φ⁻¹(β)`, `y = x + t_c`) and with `q = s − x`, the
//!   clock time at which the curve would have started, `h` splits into
//!   `A(y) + C(x)`, both piecewise quadratic for fixed `q`. That inner
//!   problem is solved exactly by enumerating piece ends and vertices.
//! * What remains is one dimension, `q`, searched by best-first branch and
//!   bound. Lower bounds linearise the footprint in `q`, subtract a
//!   curvature allowance derived from the concave kinks of `π` and take
//!   the clock terms at their minimum over the interval. A second bound
//!   replaces `π` by its minimum over the reachable window; the larger of
//!   the two is used.
//!
//! When the footprint does not depend on `q` (energy and time objectives,
//! or a constant signal over the reachable window) the problem separates
//! exactly and no branching is needed.

use alloc::collections::BinaryHeap;
use alloc::vec::Vec;
use core::cmp::Ordering;

use crate::charging::{soc_increment_unchecked, stop_cost_extended};
use crate::error::{Error, Result};
use crate::network::{DualVector, Instance, NodeId, ObjectiveMode, Params, StationData};
use crate::pwl::PiecewiseLinear;

/// Default absolute tolerance of the branch and bound (objective units).
pub const DEFAULT_EPS: f64 = 1e-3;
/// Default node budget of the branch and bound.
pub const DEFAULT_MAX_NODES: usize = 20_000;

/// Prices seen by a stop between stage `i` and stage `i + 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChargingPrices {
    /// `λτ_i`
    pub tau_in: f64,
    /// `λτ_{i+1}`
    pub tau_out: f64,
    /// `λβ_i`
    pub beta_in: f64,
    /// `λβ_{i+1}`
    pub beta_out: f64,
}

impl ChargingPrices {
    /// Prices for stop `stop` (1-based, at most `N`).
    pub fn for_stop(duals: &DualVector, stop: usize) -> Result<Self> {
        if stop == 0 || stop >= duals.stages() {
            return Err(Error::Config(alloc::format!(
                "stop {stop} outside 1..={}",
                duals.stages().saturating_sub(1)
            )));
        }
        Ok(Self {
            tau_in: duals.tau[stop - 1],
            tau_out: duals.tau[stop],
            beta_in: duals.beta[stop - 1],
            beta_out: duals.beta[stop],
        })
    }

    pub fn zero() -> Self {
        Self {
            tau_in: 0.0,
            tau_out: 0.0,
            beta_in: 0.0,
            beta_out: 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BnbConfig {
    pub eps: f64,
    pub max_nodes: usize,
}

impl Default for BnbConfig {
    fn default() -> Self {
        Self {
            eps: DEFAULT_EPS,
            max_nodes: DEFAULT_MAX_NODES,
        }
    }
}

/// Minimiser and value of `σ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChargingChoice {
    pub charge: f64,
    pub wait: f64,
    pub soc: f64,
    pub arrival: f64,
    /// `h` at the returned point.
    pub value: f64,
    /// Certified lower bound on `σ`; equals `value` when solved exactly.
    pub lower_bound: f64,
    /// Branch-and-bound nodes expanded (0 when separable).
    pub nodes: usize,
}

impl ChargingChoice {
    pub fn gap(&self) -> f64 {
        self.value - self.lower_bound
    }
}

/// The stop trade-off `h` evaluated directly.
#[allow(clippy::too_many_arguments)]
pub fn h_value(
    params: &Params,
    station: &StationData,
    prices: &ChargingPrices,
    charge: f64,
    wait: f64,
    soc: f64,
    arrival: f64,
) -> f64 {
    let p = prices;
    let cost = stop_cost_extended(
        params.objective,
        &station.curve,
        &station.intensity,
        soc,
        charge,
        wait,
        arrival,
        params.efficiency,
    );
    let phi = soc_increment_unchecked(&station.curve, charge, soc);
    cost + p.tau_out * (wait + charge)
        + (p.tau_out - p.tau_in) * arrival
        + (p.beta_in - p.beta_out) * soc
        - p.beta_out * phi
}

/// `σ` for stop `stop` (1-based) at `station`.
pub fn solve_charging_subproblem(
    instance: &Instance,
    duals: &DualVector,
    stop: usize,
    station: NodeId,
    eps: f64,
) -> Result<ChargingChoice> {
    let st = instance
        .graph
        .station(station)
        .ok_or(Error::NotAStation(station))?;
    let prices = ChargingPrices::for_stop(duals, stop)?;
    minimize_h(
        &instance.params,
        st,
        &prices,
        &BnbConfig {
            eps,
            ..BnbConfig::default()
        },
    )
}

#[derive(Clone, Copy)]
enum Rho {
    Const(f64),
    /// `π(c + u) + δ·π'(c + u)`
    Signal { c: f64, delta: f64 },
}

struct Ctx<'a> {
    curve: &'a PiecewiseLinear,
    signal: &'a PiecewiseLinear,
    eta: f64,
    tc: f64,
    twc: f64,
    ld: f64,
    mu: f64,
    mu_out: f64,
    deadline: f64,
    tw_lo: f64,
    tw_hi: f64,
    len: f64,
    x_lo: f64,
    x_hi: f64,
    r_max: f64,
}

impl Ctx<'_> {
    fn tw(&self, s: f64) -> f64 {
        self.tw_lo.max(s - self.deadline)
    }

    /// Wait and penalty-free part of the clock terms: `twc·tw(s) + ld·s`.
    fn clock_terms(&self, s: f64) -> f64 {
        self.twc * self.tw(s) + self.ld * s
    }

    /// Minimum of the (convex, piecewise-linear) clock terms over `[lo, hi]`.
    fn clock_min(&self, lo: f64, hi: f64) -> f64 {
        let s = if self.ld >= 0.0 {
            lo
        } else if self.twc + self.ld <= 0.0 {
            hi
        } else {
            (self.deadline + self.tw_lo).clamp(lo, hi)
        };
        self.clock_terms(s)
    }
}

/// `I(u) = ∫ ρ Φ' / η` on a fixed partition.
struct Profile {
    bps: Vec<f64>,
    cum: Vec<f64>,
    rate: Vec<f64>,
    rho0: Vec<f64>,
    rhos: Vec<f64>,
}

impl Profile {
    fn new(ctx: &Ctx<'_>, rho: Rho, lo: f64, hi: f64) -> Self {
        let mut extra: Vec<f64> = Vec::new();
        if let Rho::Signal { c, .. } = rho {
            extra.extend(ctx.signal.xs().iter().map(|t| t - c));
        }
        let bps = cuts(lo, hi, ctx.curve.xs().iter().copied().chain(extra));
        let n = bps.len();
        let mut cum = Vec::with_capacity(n);
        let mut rate = Vec::with_capacity(n);
        let mut rho0 = Vec::with_capacity(n);
        let mut rhos = Vec::with_capacity(n);
        cum.push(0.0);
        for k in 0..n.saturating_sub(1) {
            let (a, b) = (bps[k], bps[k + 1]);
            let m = 0.5 * (a + b);
            let r = ctx.curve.right_slope(m) / ctx.eta;
            let (r0, rs) = match rho {
                Rho::Const(v) => (v, 0.0),
                Rho::Signal { c, delta } => {
                    let ps = ctx.signal.right_slope(c + m);
                    (ctx.signal.eval_clamped(c + a) + delta * ps, ps)
                }
            };
            let d = b - a;
            cum.push(cum[k] + r * (r0 * d + 0.5 * rs * d * d));
            rate.push(r);
            rho0.push(r0);
            rhos.push(rs);
        }
        Self {
            bps,
            cum,
            rate,
            rho0,
            rhos,
        }
    }

    fn eval(&self, u: f64) -> f64 {
        let n = self.bps.len();
        if n < 2 {
            return 0.0;
        }
        let k = self.bps.partition_point(|b| *b <= u).clamp(1, n - 1) - 1;
        let d = (u - self.bps[k]).clamp(0.0, self.bps[k + 1] - self.bps[k]);
        self.cum[k] + self.rate[k] * (self.rho0[k] * d + 0.5 * self.rhos[k] * d * d)
    }
}

/// Sorted partition of `[lo, hi]` with the interior points of `pts`.
fn cuts(lo: f64, hi: f64, pts: impl Iterator<Item = f64>) -> Vec<f64> {
    let mut out: Vec<f64> = Vec::with_capacity(16);
    out.push(lo);
    out.extend(pts.filter(|p| *p > lo && *p < hi));
    if hi > lo {
        out.push(hi);
    }
    out.sort_by(f64::total_cmp);
    out.dedup();
    out
}

/// Piece ends and interior vertices of a function that is quadratic
/// between consecutive cuts, with their values.
fn candidates(f: &impl Fn(f64) -> f64, cuts: &[f64]) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(2 * cuts.len());
    let mut fa = f(cuts[0]);
    out.push((cuts[0], fa));
    for w in cuts.windows(2) {
        let (a, b) = (w[0], w[1]);
        let fb = f(b);
        let m = 0.5 * (a + b);
        let fm = f(m);
        let h = b - a;
        let curv = 4.0 * (fa + fb - 2.0 * fm) / (h * h);
        if curv > 0.0 {
            let v = m - (fb - fa) / h / curv;
            if v > a && v < b {
                out.push((v, f(v)));
            }
        }
        out.push((b, fb));
        fa = fb;
    }
    out
}

#[derive(Debug, Clone, Copy)]
struct InnerSol {
    x: f64,
    y: f64,
    val: f64,
}

/// `min A(y) + C(x)` over `x ∈ [xa, xb]`, `y ∈ [x, x + L]`.
///
/// `clock = Some((qa, qb))` adds the clock terms minimised over a charging
/// start `s ∈ [qa + x, qb + x]` (exact for `qa = qb`); `None` leaves them
/// out (separable case). Candidates with `y > x` are lowered by `pen`.
fn inner(ctx: &Ctx<'_>, rho: Rho, xa: f64, xb: f64, clock: Option<(f64, f64)>, pen: f64) -> Option<InnerSol> {
    if !(xa <= xb) {
        return None;
    }
    let len = ctx.len;
    let prof = Profile::new(ctx, rho, xa, xb + len);
    let a_fn = |y: f64| prof.eval(y) + ctx.tc * y - ctx.mu_out * ctx.curve.eval_clamped(y);
    let c_fn = |x: f64| {
        let mut v = -prof.eval(x) - ctx.tc * x + ctx.mu * ctx.curve.eval_clamped(x);
        if let Some((qa, qb)) = clock {
            v += ctx.clock_min(qa + x, qb + x);
        }
        v
    };
    let knee = ctx.deadline + ctx.tw_lo;
    let kinks = clock.into_iter().flat_map(|(qa, qb)| [knee - qa, knee - qb]);
    let cuts_c = cuts(xa, xb, prof.bps.iter().copied().chain(kinks));

    // no charging: y = x, preferring larger β on ties
    let f1 = |x: f64| a_fn(x) + c_fn(x);
    let mut best = InnerSol {
        x: xb,
        y: xb,
        val: f64::INFINITY,
    };
    for (x, v) in candidates(&f1, &cuts_c).into_iter().rev() {
        if v < best.val {
            best = InnerSol { x, y: x, val: v };
        }
    }
    if len <= 0.0 {
        return Some(best);
    }
    let tie = 1e-12 * (1.0 + best.val.abs());
    let consider = |x: f64, y: f64, v: f64, best: &mut InnerSol| {
        if v < best.val - tie {
            *best = InnerSol { x, y, val: v };
        }
    };

    // interior charge end: y at a piece end or vertex of A, x likewise for C
    let cuts_a = cuts(xa, xb + len, prof.bps.iter().copied());
    let cand_a = candidates(&a_fn, &cuts_a);
    let cand_c = candidates(&c_fn, &cuts_c);
    for (x, cv) in &cand_c {
        for (y, av) in &cand_a {
            if *y > *x && *y <= *x + len {
                consider(*x, *y, av + cv - pen, &mut best);
            }
        }
    }

    // full-length charge: y = x + L
    let f2 = |x: f64| a_fn(x + len) + c_fn(x);
    let cuts2 = cuts(
        xa,
        xb,
        cuts_c.iter().copied().chain(prof.bps.iter().map(|b| b - len)),
    );
    for (x, v) in candidates(&f2, &cuts2) {
        consider(x, x + len, v - pen, &mut best);
    }
    Some(best)
}

struct Point {
    charge: f64,
    wait: f64,
    soc: f64,
    arrival: f64,
}

fn to_point(ctx: &Ctx<'_>, x: f64, y: f64, s: f64) -> Point {
    let s = s.clamp(ctx.tw_lo, ctx.deadline + ctx.tw_hi);
    let wait = ctx.tw(s).min(ctx.tw_hi);
    Point {
        charge: (y - x).clamp(0.0, ctx.len),
        wait,
        soc: ctx.curve.eval_clamped(x),
        arrival: (s - wait).clamp(0.0, ctx.deadline),
    }
}

#[derive(PartialEq)]
struct Node {
    lb: f64,
    qa: f64,
    qb: f64,
}

impl Eq for Node {}

impl Ord for Node {
    fn cmp(&self, other: &Self) -> Ordering {
        // min-heap on the bound, then leftmost interval
        other
            .lb
            .total_cmp(&self.lb)
            .then_with(|| other.qa.total_cmp(&self.qa))
    }
}

impl PartialOrd for Node {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// `σ = min h` over the stop box for the given prices.
pub fn minimize_h(
    params: &Params,
    station: &StationData,
    prices: &ChargingPrices,
    cfg: &BnbConfig,
) -> Result<ChargingChoice> {
    let p = params;
    if !(p.wait_min_h <= p.wait_max_h) || !(p.charge_max_h >= 0.0) || !(p.deadline_h >= 0.0) {
        return Err(Error::Config("empty charging box".into()));
    }
    if !(cfg.eps > 0.0) {
        return Err(Error::Config("branch-and-bound tolerance must be positive".into()));
    }
    let reserve = p.reserve_kwh();
    if reserve > station.curve.capacity() {
        return Err(Error::Config("reserve exceeds the battery".into()));
    }
    let time = if p.objective == ObjectiveMode::Time {
        1.0
    } else {
        0.0
    };
    let ctx = Ctx {
        curve: station.curve.breakpoints(),
        signal: station.intensity.breakpoints(),
        eta: p.efficiency,
        tc: prices.tau_out + time,
        twc: prices.tau_in + time,
        ld: prices.tau_out - prices.tau_in,
        mu: prices.beta_in,
        mu_out: prices.beta_out,
        deadline: p.deadline_h,
        tw_lo: p.wait_min_h,
        tw_hi: p.wait_max_h,
        len: p.charge_max_h,
        x_lo: station.curve.time_to_reach(reserve),
        x_hi: station.curve.full_time(),
        r_max: station.curve.max_rate(),
    };
    let s_lo = ctx.tw_lo;
    let s_hi = ctx.deadline + ctx.tw_hi;

    let rho = match p.objective {
        ObjectiveMode::Time => Some(0.0),
        ObjectiveMode::Energy => Some(1.0),
        ObjectiveMode::Carbon => {
            let window_lo = s_lo;
            let window_hi = s_hi + ctx.len + (ctx.x_hi - ctx.x_lo);
            let (lo, hi) = station.intensity.breakpoints().range_on(window_lo, window_hi);
            (lo == hi).then_some(lo)
        }
    };

    let finish = |x: f64, y: f64, s: f64, nodes: usize, lb: Option<f64>| {
        let pt = to_point(&ctx, x, y, s);
        let value = h_value(p, station, prices, pt.charge, pt.wait, pt.soc, pt.arrival);
        ChargingChoice {
            charge: pt.charge,
            wait: pt.wait,
            soc: pt.soc,
            arrival: pt.arrival,
            value,
            lower_bound: lb.map_or(value, |l| l.min(value)),
            nodes,
        }
    };

    if let Some(v) = rho {
        // separable: the charging start is free of x
        let mut s_best = s_lo;
        for s in [ctx.deadline + ctx.tw_lo, s_hi] {
            if s >= s_lo && ctx.clock_terms(s) < ctx.clock_terms(s_best) {
                s_best = s;
            }
        }
        let sol = inner(&ctx, Rho::Const(v), ctx.x_lo, ctx.x_hi, None, 0.0)
            .ok_or_else(|| Error::Config("empty SoC box".into()))?;
        return Ok(finish(sol.x, sol.y, s_best, 0, None));
    }

    // branch and bound over q
    let x_range = |qa: f64, qb: f64| (ctx.x_lo.max(s_lo - qb), ctx.x_hi.min(s_hi - qa));
    let upper = |c: f64| -> Option<(f64, f64, f64, f64)> {
        let (xa, xb) = x_range(c, c);
        let sol = inner(&ctx, Rho::Signal { c, delta: 0.0 }, xa, xb, Some((c, c)), 0.0)?;
        let pt = to_point(&ctx, sol.x, sol.y, c + sol.x);
        let v = h_value(p, station, prices, pt.charge, pt.wait, pt.soc, pt.arrival);
        Some((v, sol.x, sol.y, c + sol.x))
    };
    let kinks = ctx.signal.concave_kinks();
    let lower = |qa: f64, qb: f64| -> f64 {
        let (xa, xb) = x_range(qa, qb);
        if !(xa <= xb) {
            return f64::INFINITY;
        }
        let c = 0.5 * (qa + qb);
        let w = qb - qa;
        let (ca, cb) = (qa + xa, qb + xb + ctx.len);
        let drops: f64 = kinks
            .iter()
            .filter(|(t, _)| *t >= ca && *t <= cb)
            .map(|(_, d)| d)
            .sum();
        let pen = ctx.r_max / ctx.eta * drops * w * w / 8.0;
        let mut lb = f64::INFINITY;
        for delta in [-0.5 * w, 0.5 * w] {
            if let Some(sol) = inner(&ctx, Rho::Signal { c, delta }, xa, xb, Some((qa, qb)), pen) {
                lb = lb.min(sol.val);
            }
        }
        // π at its window minimum is also a valid (and at low prices much
        // tighter) relaxation
        let (pi_min, _) = ctx.signal.range_on(ca, cb);
        let flat = inner(&ctx, Rho::Const(pi_min), xa, xb, Some((qa, qb)), 0.0).map_or(f64::INFINITY, |s| s.val);
        lb.max(flat)
    };

    let q_lo = s_lo - ctx.x_hi;
    let q_hi = s_hi - ctx.x_lo;
    let mut best: Option<(f64, f64, f64, f64)> = None;
    let offer = |cand: Option<(f64, f64, f64, f64)>, best: &mut Option<(f64, f64, f64, f64)>| {
        if let Some(c) = cand {
            if best.map_or(true, |b| c.0 < b.0) {
                *best = Some(c);
            }
        }
    };
    const SEEDS: usize = 16;
    for k in 0..=SEEDS {
        let c = q_lo + (q_hi - q_lo) * k as f64 / SEEDS as f64;
        offer(upper(c), &mut best);
    }
    let mut heap = BinaryHeap::new();
    heap.push(Node {
        lb: lower(q_lo, q_hi),
        qa: q_lo,
        qb: q_hi,
    });
    let mut pruned_lb = f64::INFINITY;
    let mut nodes = 1usize;
    let min_width = 1e-9 * (1.0 + q_hi - q_lo);
    while let Some(node) = heap.pop() {
        let ub = best.map_or(f64::INFINITY, |b| b.0);
        if ub - node.lb <= cfg.eps {
            pruned_lb = pruned_lb.min(node.lb);
            break;
        }
        if nodes >= cfg.max_nodes || node.qb - node.qa <= min_width {
            heap.push(node);
            break;
        }
        let mid = 0.5 * (node.qa + node.qb);
        for (a, b) in [(node.qa, mid), (mid, node.qb)] {
            nodes += 1;
            offer(upper(0.5 * (a + b)), &mut best);
            let lb = lower(a, b);
            let ub = best.map_or(f64::INFINITY, |b| b.0);
            if lb < ub - cfg.eps {
                heap.push(Node { lb, qa: a, qb: b });
            } else {
                pruned_lb = pruned_lb.min(lb);
            }
        }
    }
    let open_lb = heap.iter().map(|n| n.lb).fold(f64::INFINITY, f64::min);
    let (_, x, y, s) = best.ok_or_else(|| Error::Config("empty charging box".into()))?;
    Ok(finish(x, y, s, nodes, Some(open_lb.min(pruned_lb))))
}
