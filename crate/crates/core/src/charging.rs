//! Charging dynamics and the carbon footprint of a charging session.
//!
//! A station has a concave piecewise-linear charge curve `Φ` (SoC reached
//! after charging an empty battery for `t` hours) and a piecewise-linear
//! carbon-intensity signal `π` (kg CO₂ per kWh drawn, as a function of the
//! clock time since departure). Starting from SoC `β`, charging for `t_c`
//! adds `φ(t_c, β) = Φ(Φ⁻¹(β) + t_c) − β`; the session's footprint is the
//! integral of `π` against the charge rate, divided by the efficiency `η`.
//!
//! Both factors of that integrand are piecewise polynomial, so the integral
//! is evaluated exactly on the merged breakpoint partition.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::network::ObjectiveMode;
use crate::pwl::PiecewiseLinear;

/// Default SoC fractions of the charge-curve breakpoints.
pub const DEFAULT_SOC_FRACTIONS: [f64; 6] = [0.0, 0.80, 0.85, 0.90, 0.95, 1.00];

/// Minutes at which the default curve reaches [`DEFAULT_SOC_FRACTIONS`]:
/// 0 → 80 % in 48 min at constant current, then slowing down.
pub const DEFAULT_CURVE_MINUTES: [f64; 6] = [0.0, 48.0, 52.0, 57.0, 65.0, 77.0];

/// Monotone concave charge curve: hours of charging from empty → SoC (kWh).
#[derive(Debug, Clone, PartialEq)]
pub struct ChargeCurve {
    pwl: PiecewiseLinear,
}

impl ChargeCurve {
    /// Builds a curve from breakpoints (hours, kWh). Only the breakpoint
    /// structure is checked here; use [`ChargeCurve::defect`] for the curve
    /// invariants (origin, monotonicity, concavity).
    pub fn new(times_h: Vec<f64>, soc_kwh: Vec<f64>) -> Result<Self> {
        Ok(Self {
            pwl: PiecewiseLinear::new(times_h, soc_kwh)?,
        })
    }

    /// The default six-breakpoint curve scaled to a battery of
    /// `capacity_kwh`.
    pub fn default_for(capacity_kwh: f64) -> Self {
        let times = DEFAULT_CURVE_MINUTES.iter().map(|m| m / 60.0).collect();
        let socs = DEFAULT_SOC_FRACTIONS
            .iter()
            .map(|f| f * capacity_kwh)
            .collect();
        Self::new(times, socs).expect("default curve breakpoints are sorted")
    }

    /// First violated invariant, if any.
    pub fn defect(&self) -> Option<&'static str> {
        if self.pwl.xs()[0] != 0.0 || self.pwl.first_y() != 0.0 {
            return Some("charge curve must start at (0, 0)");
        }
        if !self.pwl.is_strictly_increasing() {
            return Some("charge curve not strictly increasing");
        }
        if !self.pwl.is_concave(1e-12) {
            return Some("charge curve not concave");
        }
        None
    }

    pub fn breakpoints(&self) -> &PiecewiseLinear {
        &self.pwl
    }

    /// SoC at the end of the curve.
    pub fn capacity(&self) -> f64 {
        self.pwl.last_y()
    }

    /// Charging time from empty to full.
    pub fn full_time(&self) -> f64 {
        self.pwl.domain().1
    }

    /// `Φ(t)`, saturating at the capacity.
    pub fn soc_after(&self, t: f64) -> f64 {
        self.pwl.eval_clamped(t)
    }

    /// `Φ⁻¹(β)` for `β` in `[0, capacity]`.
    pub fn time_to_reach(&self, soc: f64) -> f64 {
        self.pwl.inverse_clamped(soc)
    }

    /// Charge rate (kW) just left of curve time `t`; zero once full.
    pub fn left_rate(&self, t: f64) -> f64 {
        self.pwl.left_slope(t)
    }

    /// Largest charge rate (the constant-current slope).
    pub fn max_rate(&self) -> f64 {
        self.pwl.slopes().fold(0.0, f64::max)
    }
}

/// Piecewise-linear carbon intensity (kg/kWh) over clock hours.
#[derive(Debug, Clone, PartialEq)]
pub struct IntensitySignal {
    pwl: PiecewiseLinear,
}

impl IntensitySignal {
    pub fn new(times_h: Vec<f64>, kg_per_kwh: Vec<f64>) -> Result<Self> {
        Ok(Self {
            pwl: PiecewiseLinear::new(times_h, kg_per_kwh)?,
        })
    }

    pub fn constant(value: f64, horizon_h: f64) -> Result<Self> {
        Ok(Self {
            pwl: PiecewiseLinear::constant(value, 0.0, horizon_h)?,
        })
    }

    pub fn breakpoints(&self) -> &PiecewiseLinear {
        &self.pwl
    }

    pub fn domain(&self) -> (f64, f64) {
        self.pwl.domain()
    }

    pub fn covers(&self, lo: f64, hi: f64) -> bool {
        let (a, b) = self.domain();
        a <= lo && hi <= b
    }

    pub fn is_nonnegative(&self) -> bool {
        self.pwl.min_value() >= 0.0
    }

    pub fn is_constant(&self) -> bool {
        let y0 = self.pwl.first_y();
        self.pwl.ys().iter().all(|y| *y == y0)
    }

    /// Intensity with the boundary values held outside the domain.
    pub fn value_clamped(&self, tau: f64) -> f64 {
        self.pwl.eval_clamped(tau)
    }
}

/// `π(τ)` by linear interpolation.
pub fn intensity_at(signal: &IntensitySignal, tau: f64) -> Result<f64> {
    signal.pwl.eval(tau).map_err(|_| {
        let (lo, hi) = signal.domain();
        Error::Domain {
            what: "intensity time",
            value: tau,
            lo,
            hi,
        }
    })
}

fn check_soc(curve: &ChargeCurve, soc: f64) -> Result<()> {
    let cap = curve.capacity();
    if !(soc >= 0.0 && soc <= cap * (1.0 + 1e-12)) {
        return Err(Error::Domain {
            what: "state of charge",
            value: soc,
            lo: 0.0,
            hi: cap,
        });
    }
    Ok(())
}

fn check_charge_time(t_c: f64) -> Result<()> {
    if !(t_c >= 0.0) || !t_c.is_finite() {
        return Err(Error::Domain {
            what: "charge time",
            value: t_c,
            lo: 0.0,
            hi: f64::INFINITY,
        });
    }
    Ok(())
}

/// Energy added by charging for `t_c` hours from SoC `soc`; saturates at
/// the curve's capacity.
pub fn soc_increment(curve: &ChargeCurve, t_c: f64, soc: f64) -> Result<f64> {
    check_soc(curve, soc)?;
    check_charge_time(t_c)?;
    Ok(soc_increment_unchecked(curve, t_c, soc))
}

pub(crate) fn soc_increment_unchecked(curve: &ChargeCurve, t_c: f64, soc: f64) -> f64 {
    if t_c <= 0.0 {
        return 0.0;
    }
    let x0 = curve.time_to_reach(soc);
    (curve.soc_after(x0 + t_c) - soc).max(0.0)
}

/// Carbon footprint (kg) of charging from SoC `soc` for `t_c` hours
/// starting at clock time `start`:
/// `(1/η) ∫₀^{t_c} π(start + ξ) ∂₋φ/∂t(ξ, soc) dξ`.
///
/// The charging window must lie inside the signal's domain.
pub fn carbon_footprint(
    curve: &ChargeCurve,
    signal: &IntensitySignal,
    soc: f64,
    t_c: f64,
    start: f64,
    efficiency: f64,
) -> Result<f64> {
    check_soc(curve, soc)?;
    check_charge_time(t_c)?;
    let (lo, hi) = signal.domain();
    if start < lo || start + t_c > hi {
        return Err(Error::Domain {
            what: "charging window end",
            value: if start < lo { start } else { start + t_c },
            lo,
            hi,
        });
    }
    Ok(carbon_footprint_extended(
        curve, signal, soc, t_c, start, efficiency,
    ))
}

/// [`carbon_footprint`] without domain checks; the signal is held constant
/// outside its domain.
pub fn carbon_footprint_extended(
    curve: &ChargeCurve,
    signal: &IntensitySignal,
    soc: f64,
    t_c: f64,
    start: f64,
    efficiency: f64,
) -> f64 {
    if t_c <= 0.0 {
        return 0.0;
    }
    let x0 = curve.time_to_reach(soc);
    let x1 = (x0 + t_c).min(curve.full_time());
    if x1 <= x0 {
        return 0.0;
    }
    // curve time u corresponds to clock time u + shift
    let shift = start - x0;
    let mut cuts: Vec<f64> = Vec::with_capacity(16);
    cuts.push(x0);
    cuts.extend(
        curve
            .breakpoints()
            .xs()
            .iter()
            .copied()
            .filter(|&u| u > x0 && u < x1),
    );
    cuts.extend(
        signal
            .breakpoints()
            .xs()
            .iter()
            .map(|b| b - shift)
            .filter(|&u| u > x0 && u < x1),
    );
    cuts.push(x1);
    cuts.sort_by(f64::total_cmp);

    let mut total = 0.0;
    for w in cuts.windows(2) {
        let (a, b) = (w[0], w[1]);
        if b <= a {
            continue;
        }
        let rate = curve.left_rate(0.5 * (a + b));
        let pa = signal.value_clamped(a + shift);
        let pb = signal.value_clamped(b + shift);
        total += rate * 0.5 * (pa + pb) * (b - a);
    }
    total / efficiency
}

/// Cost of one stop under the given objective. Charging starts after the
/// wait, at `arrival + t_w`.
pub fn stop_cost(
    mode: ObjectiveMode,
    curve: &ChargeCurve,
    signal: &IntensitySignal,
    soc: f64,
    t_c: f64,
    t_w: f64,
    arrival: f64,
    efficiency: f64,
) -> Result<f64> {
    match mode {
        ObjectiveMode::Carbon => carbon_footprint(curve, signal, soc, t_c, arrival + t_w, efficiency),
        ObjectiveMode::Energy => Ok(soc_increment(curve, t_c, soc)? / efficiency),
        ObjectiveMode::Time => {
            check_charge_time(t_c)?;
            Ok(t_w + t_c)
        }
    }
}

/// [`stop_cost`] with the signal extended beyond its domain and no
/// argument checks.
pub(crate) fn stop_cost_extended(
    mode: ObjectiveMode,
    curve: &ChargeCurve,
    signal: &IntensitySignal,
    soc: f64,
    t_c: f64,
    t_w: f64,
    arrival: f64,
    efficiency: f64,
) -> f64 {
    match mode {
        ObjectiveMode::Carbon => {
            carbon_footprint_extended(curve, signal, soc, t_c, arrival + t_w, efficiency)
        }
        ObjectiveMode::Energy => soc_increment_unchecked(curve, t_c, soc) / efficiency,
        ObjectiveMode::Time => t_w + t_c,
    }
}
