//! Segment power and energy, and the one-dimensional speed trade-off.
//!
//! With traction power `f(r) = a0 + a1·r + a2·r² + a3·r³` (kW at speed
//! `r` km/h), the energy of crossing a segment of length `D` in `t` hours is
//! `c(t) = t·f(D/t) = a0·t + a1·D + a2·D²/t + a3·D³/t²`.

use crate::error::{Error, Result};
use crate::network::RoadSegment;

fn horner(c: &[f64; 4], r: f64) -> f64 {
    ((c[3] * r + c[2]) * r + c[1]) * r + c[0]
}

/// Traction power (kW) at speed `r`.
pub fn power_rate(segment: &RoadSegment, speed_kmh: f64) -> Result<f64> {
    let (lo, hi) = (segment.speed_min_kmh, segment.speed_max_kmh);
    if !(lo..=hi).contains(&speed_kmh) {
        return Err(Error::Domain {
            what: "speed",
            value: speed_kmh,
            lo,
            hi,
        });
    }
    Ok(horner(&segment.power_coeffs, speed_kmh))
}

/// Energy (kWh) to cross the segment in `t` hours; negative when the
/// segment regenerates more than it consumes.
pub fn edge_energy(segment: &RoadSegment, t: f64) -> Result<f64> {
    let (lo, hi) = segment.time_bounds();
    // allow a few ulps so that D/(D/r) round trips stay inside
    let slack = 4.0 * f64::EPSILON * hi;
    if !(t >= lo - slack && t <= hi + slack) {
        return Err(Error::Domain {
            what: "travel time",
            value: t,
            lo,
            hi,
        });
    }
    Ok(edge_energy_unchecked(segment, t))
}

pub(crate) fn edge_energy_unchecked(segment: &RoadSegment, t: f64) -> f64 {
    t * horner(&segment.power_coeffs, segment.length_km / t)
}

/// `dc/dt = a0 − a2·D²/t² − 2·a3·D³/t³`.
pub fn energy_derivative(segment: &RoadSegment, t: f64) -> f64 {
    let [a0, _, a2, a3] = segment.power_coeffs;
    let r = segment.length_km / t;
    a0 - a2 * r * r - 2.0 * a3 * r * r * r
}

/// Minimises `g(t) = λ_τ·t + λ_β·c(t)` over `[t_lb, t_ub]`.
///
/// `g` is convex, so its derivative is monotone and the minimiser is the
/// clamped root of `g'`, found by bisection. Among equal minimisers the
/// smallest `t` is returned.
pub fn minimize_affine_tradeoff(
    segment: &RoadSegment,
    lambda_tau: f64,
    lambda_beta: f64,
) -> Result<(f64, f64)> {
    if !(lambda_tau >= 0.0 && lambda_beta >= 0.0) {
        return Err(Error::Domain {
            what: "multiplier",
            value: lambda_tau.min(lambda_beta),
            lo: 0.0,
            hi: f64::INFINITY,
        });
    }
    let (lo, hi) = segment.time_bounds();
    let g = |t: f64| lambda_tau * t + lambda_beta * edge_energy_unchecked(segment, t);
    let dg = |t: f64| lambda_tau + lambda_beta * energy_derivative(segment, t);

    if lambda_beta == 0.0 || hi <= lo || dg(lo) >= 0.0 {
        return Ok((lo, g(lo)));
    }
    if dg(hi) <= 0.0 {
        // g non-increasing on the whole box; pick the leftmost minimiser
        let t = if dg(hi) == 0.0 { leftmost_zero(&dg, lo, hi) } else { hi };
        return Ok((t, g(t)));
    }
    let (mut a, mut b) = (lo, hi);
    // invariant: dg(a) < 0 < dg(b)
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if m <= a || m >= b {
            break;
        }
        if dg(m) < 0.0 {
            a = m;
        } else {
            b = m;
        }
    }
    let t = if g(a) <= g(b) { a } else { b };
    Ok((t, g(t)))
}

// smallest t in [lo, hi] with dg(t) >= 0, given dg(lo) < 0 <= dg(hi)
fn leftmost_zero(dg: &impl Fn(f64) -> f64, lo: f64, hi: f64) -> f64 {
    let (mut a, mut b) = (lo, hi);
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if m <= a || m >= b {
            break;
        }
        if dg(m) < 0.0 {
            a = m;
        } else {
            b = m;
        }
    }
    b
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::{EdgeId, NodeId};

    fn seg(coeffs: [f64; 4], len: f64, rmin: f64, rmax: f64) -> RoadSegment {
        RoadSegment {
            id: EdgeId(0),
            from: NodeId(0),
            to: NodeId(1),
            length_km: len,
            speed_min_kmh: rmin,
            speed_max_kmh: rmax,
            power_coeffs: coeffs,
        }
    }

    #[test]
    fn polynomial_terms() {
        let s = seg([5.0, 0.0, 0.0, 0.0], 100.0, 40.0, 120.0);
        assert_eq!(power_rate(&s, 80.0).unwrap(), 5.0);
        let s = seg([0.0, 1.0, 0.0, 0.0], 100.0, 40.0, 120.0);
        assert_eq!(power_rate(&s, 60.0).unwrap(), 60.0);
        let s = seg([-20.0, 0.1, 0.0, 0.00005], 100.0, 40.0, 120.0);
        let direct = -20.0 + 0.1 * 70.0 + 0.00005 * 70.0f64.powi(3);
        assert!((power_rate(&s, 70.0).unwrap() - direct).abs() < 1e-12);
        assert!(power_rate(&s, 130.0).is_err());
    }

    #[test]
    fn energy_is_time_times_power() {
        let s = seg([5.0, 0.0, 0.0, 0.0], 100.0, 40.0, 100.0);
        assert_eq!(edge_energy(&s, 2.0).unwrap(), 10.0);
        assert!(edge_energy(&s, 0.5).is_err());
        let down = seg([-80.0, 0.2, 0.0, 0.0], 100.0, 50.0, 100.0);
        for t in [1.0, 1.5, 2.0] {
            assert!(edge_energy(&down, t).unwrap() < 0.0);
        }
    }

    #[test]
    fn derivative_matches_finite_difference() {
        let s = seg([5.0, 0.6, 0.002, 7.7e-5], 150.0, 50.0, 100.0);
        for t in [1.6, 2.0, 2.9] {
            let h = 1e-6;
            let fd = (edge_energy_unchecked(&s, t + h) - edge_energy_unchecked(&s, t - h)) / (2.0 * h);
            assert!((fd - energy_derivative(&s, t)).abs() < 1e-5);
        }
    }

    #[test]
    fn tradeoff_corner_cases() {
        let s = seg([5.0, 0.6, 0.002, 7.7e-5], 150.0, 50.0, 100.0);
        let (t, v) = minimize_affine_tradeoff(&s, 1.0, 0.0).unwrap();
        assert_eq!((t, v), (1.5, 1.5));
        let (t, v) = minimize_affine_tradeoff(&s, 0.0, 0.0).unwrap();
        assert_eq!((t, v), (1.5, 0.0));
        // pure energy price: drive as slowly as the cubic allows
        let (t, _) = minimize_affine_tradeoff(&s, 0.0, 1.0).unwrap();
        assert!(t > 1.5);
        assert!(minimize_affine_tradeoff(&s, -1.0, 0.0).is_err());
    }

    #[test]
    fn interior_root() {
        // c(t) = D²/t (a2 = 1): g'(t) = λτ − λβ D²/t², root t = D·sqrt(λβ/λτ)
        let s = seg([0.0, 0.0, 1.0, 0.0], 10.0, 1.0, 100.0);
        let (t, v) = minimize_affine_tradeoff(&s, 4.0, 1.0).unwrap();
        assert!((t - 5.0).abs() < 1e-12);
        assert!((v - 40.0).abs() < 1e-12);
    }
}
