//! Continuous piecewise-linear functions given by breakpoints.

use alloc::vec::Vec;

use crate::error::{Error, Result};

/// Continuous piecewise-linear function through `(xs[k], ys[k])`.
///
/// `xs` is strictly increasing. Outside `[xs[0], xs[last]]` the function is
/// undefined for [`PiecewiseLinear::eval`]; [`PiecewiseLinear::eval_clamped`]
/// holds the boundary values instead.
#[derive(Debug, Clone, PartialEq)]
pub struct PiecewiseLinear {
    xs: Vec<f64>,
    ys: Vec<f64>,
}

impl PiecewiseLinear {
    pub fn new(xs: Vec<f64>, ys: Vec<f64>) -> Result<Self> {
        if xs.len() != ys.len() {
            return Err(Error::InvalidBreakpoints("x and y lengths differ"));
        }
        if xs.len() < 2 {
            return Err(Error::InvalidBreakpoints("need at least two breakpoints"));
        }
        if xs.iter().chain(ys.iter()).any(|v| !v.is_finite()) {
            return Err(Error::InvalidBreakpoints("non-finite breakpoint"));
        }
        if xs.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidBreakpoints("x not strictly increasing"));
        }
        Ok(Self { xs, ys })
    }

    /// Constant `value` on `[lo, hi]`.
    pub fn constant(value: f64, lo: f64, hi: f64) -> Result<Self> {
        Self::new(alloc::vec![lo, hi], alloc::vec![value, value])
    }

    pub fn xs(&self) -> &[f64] {
        &self.xs
    }

    pub fn ys(&self) -> &[f64] {
        &self.ys
    }

    pub fn len(&self) -> usize {
        self.xs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.xs.is_empty()
    }

    pub fn domain(&self) -> (f64, f64) {
        (self.xs[0], self.xs[self.xs.len() - 1])
    }

    pub fn first_y(&self) -> f64 {
        self.ys[0]
    }

    pub fn last_y(&self) -> f64 {
        self.ys[self.ys.len() - 1]
    }

    /// Slope of piece `k` (between breakpoints `k` and `k + 1`).
    pub fn slope(&self, k: usize) -> f64 {
        (self.ys[k + 1] - self.ys[k]) / (self.xs[k + 1] - self.xs[k])
    }

    pub fn slopes(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.xs.len() - 1).map(move |k| self.slope(k))
    }

    /// Index of the piece containing `x`; pieces are closed on the left,
    /// the last one is closed on both sides. Values outside the domain map
    /// to the first/last piece.
    pub fn piece_index(&self, x: f64) -> usize {
        let n = self.xs.len();
        match self.xs.partition_point(|&b| b <= x) {
            0 => 0,
            i if i >= n => n - 2,
            i => i - 1,
        }
    }

    pub fn eval(&self, x: f64) -> Result<f64> {
        let (lo, hi) = self.domain();
        if !(lo..=hi).contains(&x) {
            return Err(Error::Domain {
                what: "argument",
                value: x,
                lo,
                hi,
            });
        }
        Ok(self.eval_clamped(x))
    }

    /// Evaluates with constant extension beyond both ends of the domain.
    pub fn eval_clamped(&self, x: f64) -> f64 {
        let (lo, hi) = self.domain();
        if x <= lo {
            return self.ys[0];
        }
        if x >= hi {
            return self.last_y();
        }
        let k = self.piece_index(x);
        self.ys[k] + self.slope(k) * (x - self.xs[k])
    }

    /// Slope used for integration just left of `x`: the slope of the piece
    /// ending at or containing `x`. Zero outside the domain.
    pub fn left_slope(&self, x: f64) -> f64 {
        let (lo, hi) = self.domain();
        if x <= lo || x > hi {
            return 0.0;
        }
        let k = self.xs.partition_point(|&b| b < x);
        self.slope(k - 1)
    }

    /// Slope just right of `x`, zero outside the domain.
    pub fn right_slope(&self, x: f64) -> f64 {
        let (lo, hi) = self.domain();
        if x < lo || x >= hi {
            return 0.0;
        }
        self.slope(self.piece_index(x))
    }

    pub fn min_value(&self) -> f64 {
        self.ys.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max_value(&self) -> f64 {
        self.ys.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Minimum and maximum of the clamped extension over `[a, b]`; exact,
    /// since extrema of a piecewise-linear function sit at breakpoints or
    /// interval ends.
    pub fn range_on(&self, a: f64, b: f64) -> (f64, f64) {
        let mut lo = self.eval_clamped(a).min(self.eval_clamped(b));
        let mut hi = self.eval_clamped(a).max(self.eval_clamped(b));
        for (x, y) in self.xs.iter().zip(&self.ys) {
            if *x > a && *x < b {
                lo = lo.min(*y);
                hi = hi.max(*y);
            }
        }
        (lo, hi)
    }

    pub fn is_strictly_increasing(&self) -> bool {
        self.ys.windows(2).all(|w| w[1] > w[0])
    }

    /// Successive slopes never increase, up to `tol` relative to the
    /// largest slope magnitude.
    pub fn is_concave(&self, tol: f64) -> bool {
        let slopes: Vec<f64> = self.slopes().collect();
        let scale = slopes.iter().fold(0.0f64, |m, s| m.max(s.abs())).max(1e-300);
        slopes.windows(2).all(|w| w[1] <= w[0] + tol * scale)
    }

    /// Inverse of a strictly increasing function; `y` is clamped into the
    /// range.
    pub fn inverse_clamped(&self, y: f64) -> f64 {
        debug_assert!(self.is_strictly_increasing());
        if y <= self.ys[0] {
            return self.xs[0];
        }
        if y >= self.last_y() {
            return self.xs[self.xs.len() - 1];
        }
        let i = self.ys.partition_point(|&v| v <= y);
        let k = i - 1;
        self.xs[k] + (y - self.ys[k]) / self.slope(k)
    }

    /// Kinks where the slope drops when moving right, as `(x, slope_drop)`
    /// with `slope_drop > 0`. The flat extensions outside the domain are
    /// included, so the ends count as kinks too.
    pub fn concave_kinks(&self) -> Vec<(f64, f64)> {
        let n = self.xs.len();
        let mut out = Vec::new();
        for k in 0..n {
            let before = if k == 0 { 0.0 } else { self.slope(k - 1) };
            let after = if k + 1 == n { 0.0 } else { self.slope(k) };
            if after < before {
                out.push((self.xs[k], before - after));
            }
        }
        out
    }
}
