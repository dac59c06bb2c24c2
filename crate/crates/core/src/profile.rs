//! The snowflake profile: a concave homeomorphism of `[0, 1]` that is linear
//! with slope `L(alpha, c)` on `[0, c]` and a rescaled power `x^alpha` on
//! `[c, 1]`, glued so that it is differentiable at `c`.
//!
//! Profiles are stored through the exponent deficit `1 - alpha` and `ln c`
//! rather than `alpha` and `c` themselves. The default construction drives
//! `alpha` towards 1 and `c` towards 0 fast enough that both leave the range
//! of `f64` (`alpha` rounds to 1 past `1 - 2^-53`, `c` underflows once
//! `ln c < -745`), while every quantity actually evaluated stays finite.

use crate::error::{check_unit, Error, Result};

/// Relative window around `c` inside which the linear branch is used.
const BRANCH_WINDOW: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SnowflakeProfile {
    deficit: f64,
    ln_c: f64,
    alpha: f64,
    c: f64,
    slope: f64,
}

impl SnowflakeProfile {
    /// Builds the profile `phi_{alpha, c}`. Requires `0 < alpha < 1` and
    /// `0 < c <= 1`; `c = 1` gives the identity.
    pub fn new(alpha: f64, c: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::InvalidProfile(format!("alpha = {alpha} not in (0, 1)")));
        }
        if !(c > 0.0 && c <= 1.0) {
            return Err(Error::InvalidProfile(format!("c = {c} not in (0, 1]")));
        }
        Self::from_log_parts(1.0 - alpha, c.ln())
    }

    /// Builds a profile from `deficit = 1 - alpha` and `ln c`, which stay
    /// representable where `alpha` and `c` do not.
    pub fn from_log_parts(deficit: f64, ln_c: f64) -> Result<Self> {
        if !(deficit > 0.0 && deficit < 1.0) {
            return Err(Error::InvalidProfile(format!(
                "exponent deficit 1 - alpha = {deficit} not in (0, 1)"
            )));
        }
        if !(ln_c <= 0.0 && ln_c.is_finite()) {
            return Err(Error::InvalidProfile(format!("ln c = {ln_c} not in (-inf, 0]")));
        }
        let alpha = 1.0 - deficit;
        let c = ln_c.exp();
        let slope = slope_from_log_parts(deficit, ln_c);
        if !slope.is_finite() {
            return Err(Error::InvalidProfile(format!(
                "slope L overflows for 1 - alpha = {deficit}, ln c = {ln_c}"
            )));
        }
        Ok(Self {
            deficit,
            ln_c,
            alpha,
            c,
            slope,
        })
    }

    /// `alpha`, rounded to `f64` (may equal 1.0 for tiny deficits).
    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn deficit(&self) -> f64 {
        self.deficit
    }

    /// `c`, rounded to `f64` (may underflow to 0).
    pub fn c(&self) -> f64 {
        self.c
    }

    pub fn ln_c(&self) -> f64 {
        self.ln_c
    }

    /// The slope `L(alpha, c) = (1/c) (c alpha / (1 - c (1 - alpha)))^alpha`.
    pub fn slope(&self) -> f64 {
        self.slope
    }

    /// `phi(c) = c L`, the height at which the linear branch ends.
    pub fn knee_height(&self) -> f64 {
        self.c * self.slope
    }

    /// `2 - 2^alpha`, computed as `2 (1 - 2^-(1 - alpha))` so that it keeps
    /// full relative precision when `alpha` is close to 1.
    pub fn additivity_gap(&self) -> f64 {
        -2.0 * (-self.deficit * std::f64::consts::LN_2).exp_m1()
    }

    pub fn phi(&self, x: f64) -> Result<f64> {
        check_unit("x", x)?;
        Ok(self.phi_unchecked(x))
    }

    pub(crate) fn phi_unchecked(&self, x: f64) -> f64 {
        if x <= self.c * (1.0 + BRANCH_WINDOW) {
            return self.slope * x;
        }
        let shift = self.c * self.deficit;
        ((x - shift) / (1.0 - shift)).powf(self.alpha)
    }

    /// Closed-form inverse of `phi`.
    pub fn phi_inverse(&self, y: f64) -> Result<f64> {
        check_unit("y", y)?;
        Ok(self.phi_inverse_unchecked(y))
    }

    pub(crate) fn phi_inverse_unchecked(&self, y: f64) -> f64 {
        if y <= self.knee_height() {
            return (y / self.slope).min(self.c);
        }
        let shift = self.c * self.deficit;
        (shift + (1.0 - shift) * y.powf(1.0 / self.alpha)).min(1.0)
    }

    /// Inverse of `phi` by bisection on the forward map. Slow; kept as an
    /// independent reference for the closed form.
    pub fn phi_inverse_bisect(&self, y: f64) -> Result<f64> {
        check_unit("y", y)?;
        let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.phi_unchecked(mid) < y {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(0.5 * (lo + hi))
    }

    /// `phi(a) phi(b) - phi(a b)`; non-negative by submultiplicativity.
    pub fn submultiplicativity_defect(&self, a: f64, b: f64) -> Result<f64> {
        check_unit("a", a)?;
        check_unit("b", b)?;
        Ok(self.phi_unchecked(a) * self.phi_unchecked(b) - self.phi_unchecked(a * b))
    }

    /// Returns `(phi(t) + phi(x - t) - phi(x), (2 - 2^alpha) phi(x))` for
    /// `0 <= t <= x <= 1`. The first component never exceeds the second.
    pub fn concavity_defect_bound(&self, t: f64, x: f64) -> Result<(f64, f64)> {
        if !(0.0 <= t && t <= x && x <= 1.0) {
            return Err(Error::Precondition(format!(
                "need 0 <= t <= x <= 1, got t = {t}, x = {x}"
            )));
        }
        let phi_x = self.phi_unchecked(x);
        let lhs = self.phi_unchecked(t) + self.phi_unchecked(x - t) - phi_x;
        Ok((lhs, self.additivity_gap() * phi_x))
    }

    /// `s phi(min(d / s, 1))`: the metric `s phi(d / s)` on an interval of
    /// Euclidean length `s`, evaluated at Euclidean separation `d`.
    pub(crate) fn scaled(&self, s: f64, d: f64) -> f64 {
        s * self.phi_unchecked((d / s).clamp(0.0, 1.0))
    }

    /// Inverse of [`Self::scaled`] in `d`.
    pub(crate) fn scaled_inverse(&self, s: f64, r: f64) -> f64 {
        s * self.phi_inverse_unchecked((r / s).clamp(0.0, 1.0))
    }
}

/// `ln L = (1 - alpha)(-ln c) + alpha ln alpha - alpha ln(1 - c (1 - alpha))`.
pub fn log_slope(deficit: f64, ln_c: f64) -> f64 {
    let alpha = 1.0 - deficit;
    let c = ln_c.exp();
    deficit * -ln_c + alpha * (-deficit).ln_1p() - alpha * (-c * deficit).ln_1p()
}

fn slope_from_log_parts(deficit: f64, ln_c: f64) -> f64 {
    let c = ln_c.exp();
    if c >= f64::MIN_POSITIVE {
        // Same expression as the power branch at x = c, so the two branches
        // meet to within a few ulps.
        let alpha = 1.0 - deficit;
        let knee = (c * alpha / (1.0 - c * deficit)).powf(alpha);
        let slope = knee / c;
        if slope.is_finite() {
            return slope;
        }
    }
    log_slope(deficit, ln_c).exp()
}

/// Solves `L(alpha, c) = target` for `ln c` by bisection. `L` is continuous
/// and strictly decreasing in `c` with `L(alpha, 1) = 1`, so any
/// `target > 1` has a unique solution. Stops after `max_iter` halvings or
/// once `|L - target| <= tol`.
pub fn solve_log_c_for_slope(deficit: f64, target: f64, tol: f64, max_iter: usize) -> Result<f64> {
    if !(deficit > 0.0 && deficit < 1.0) {
        return Err(Error::InvalidProfile(format!(
            "exponent deficit 1 - alpha = {deficit} not in (0, 1)"
        )));
    }
    if !(target > 1.0 && target.is_finite()) {
        return Err(Error::Precondition(format!("target slope {target} must exceed 1")));
    }
    let ln_target = target.ln();
    // ln L >= deficit * (-ln c) + alpha ln alpha, which fixes a bracket.
    let alpha = 1.0 - deficit;
    let mut lo = -2.0 * (ln_target - alpha * (-deficit).ln_1p()) / deficit - 1.0;
    let mut hi = 0.0_f64;
    while log_slope(deficit, lo) <= ln_target {
        lo *= 2.0;
        if !lo.is_finite() {
            return Err(Error::Precondition(format!(
                "no representable ln c reaches slope {target}"
            )));
        }
    }
    let mut best = lo;
    for _ in 0..max_iter {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let l = slope_from_log_parts(deficit, mid);
        if (l - target).abs() <= tol {
            best = mid;
            break;
        }
        if l > target {
            lo = mid;
        } else {
            hi = mid;
        }
        best = mid;
    }
    Ok(best)
}
