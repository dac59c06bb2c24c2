//! `X_d = (R, delta) x R^(d-1)` with the metric
//! `rho = sqrt(delta^2 + |.|^2)` and the product of the length measure on
//! the first factor with Lebesgue measure on the rest.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::line_metric::LineMetricSpace;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProductPoint {
    /// Coordinate on the snowflaked line.
    pub t: f64,
    /// Euclidean coordinates, `d - 1` of them.
    pub v: Vec<f64>,
}

impl ProductPoint {
    pub fn new(t: f64, v: Vec<f64>) -> Self {
        Self { t, v }
    }

    pub fn on_axis(t: f64, d: usize) -> Self {
        Self {
            t,
            v: vec![0.0; d.saturating_sub(1)],
        }
    }
}

/// An axis-aligned box `t_range x v_ranges[0] x ...`; ranges may be
/// degenerate (a single value).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoxContinuum {
    pub t_range: (f64, f64),
    pub v_ranges: Vec<(f64, f64)>,
}

impl BoxContinuum {
    pub fn new(t_range: (f64, f64), v_ranges: Vec<(f64, f64)>) -> Result<Self> {
        let ok = |(lo, hi): (f64, f64)| lo.is_finite() && hi.is_finite() && lo <= hi;
        if !ok(t_range) || !v_ranges.iter().copied().all(ok) {
            return Err(Error::Precondition(format!(
                "box ranges must be finite with lo <= hi: {t_range:?} x {v_ranges:?}"
            )));
        }
        Ok(Self { t_range, v_ranges })
    }

    pub fn dim(&self) -> usize {
        self.v_ranges.len() + 1
    }
}

#[derive(Debug, Clone)]
pub struct ProductSpace {
    line: LineMetricSpace,
    d: usize,
}

impl ProductSpace {
    pub fn new(line: LineMetricSpace, d: usize) -> Result<Self> {
        if d < 2 {
            return Err(Error::Precondition(format!("product dimension must be >= 2, got {d}")));
        }
        Ok(Self { line, d })
    }

    pub fn line(&self) -> &LineMetricSpace {
        &self.line
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    fn check_point(&self, p: &ProductPoint) -> Result<()> {
        if p.v.len() + 1 != self.d {
            return Err(Error::DimensionMismatch {
                expected: self.d,
                got: p.v.len() + 1,
            });
        }
        Ok(())
    }

    fn check_box(&self, b: &BoxContinuum) -> Result<()> {
        if b.dim() != self.d {
            return Err(Error::DimensionMismatch {
                expected: self.d,
                got: b.dim(),
            });
        }
        Ok(())
    }

    pub fn rho(&self, x: &ProductPoint, y: &ProductPoint) -> Result<f64> {
        self.check_point(x)?;
        self.check_point(y)?;
        Ok(self.rho_unchecked(x, y))
    }

    pub(crate) fn rho_unchecked(&self, x: &ProductPoint, y: &ProductPoint) -> f64 {
        let line = self.line.delta(x.t, y.t);
        let flat = euclidean(&x.v, &y.v);
        line.hypot(flat)
    }

    /// `mu_1(t_range)` times the Lebesgue volume of the `v` ranges.
    pub fn measure_mud(&self, b: &BoxContinuum) -> Result<f64> {
        self.check_box(b)?;
        let (lo, hi) = b.t_range;
        let base = self.line.measure_mu1(lo, hi)?;
        Ok(b.v_ranges.iter().fold(base, |acc, (lo, hi)| acc * (hi - lo)))
    }

    /// `rho`-diameter of a box. `delta` restricted to an interval is
    /// maximised at its endpoints and the Euclidean part at opposite
    /// corners, and `rho` is increasing in both.
    pub fn box_diameter(&self, b: &BoxContinuum) -> Result<f64> {
        self.check_box(b)?;
        let line = self.line.delta(b.t_range.0, b.t_range.1);
        let flat = b
            .v_ranges
            .iter()
            .map(|(lo, hi)| (hi - lo) * (hi - lo))
            .sum::<f64>()
            .sqrt();
        Ok(line.hypot(flat))
    }

    /// `rho`-distance between two boxes: the closest pair of `t` values and
    /// the per-coordinate gaps of the `v` ranges are chosen independently.
    pub fn box_distance(&self, e: &BoxContinuum, f: &BoxContinuum) -> Result<f64> {
        self.check_box(e)?;
        self.check_box(f)?;
        let line = if e.t_range.1 < f.t_range.0 {
            self.line.delta(e.t_range.1, f.t_range.0)
        } else if f.t_range.1 < e.t_range.0 {
            self.line.delta(f.t_range.1, e.t_range.0)
        } else {
            0.0
        };
        let flat = e
            .v_ranges
            .iter()
            .zip(&f.v_ranges)
            .map(|(&(a0, a1), &(b0, b1))| {
                let gap = (b0 - a1).max(a0 - b1).max(0.0);
                gap * gap
            })
            .sum::<f64>()
            .sqrt();
        Ok(line.hypot(flat))
    }

    /// `dist(E, F) / min(diam E, diam F)`.
    pub fn separation_ratio(&self, e: &BoxContinuum, f: &BoxContinuum) -> Result<f64> {
        let de = self.box_diameter(e)?;
        let df = self.box_diameter(f)?;
        if !(de > 0.0 && df > 0.0) {
            return Err(Error::Degenerate(format!(
                "continua need positive diameter, got {de} and {df}"
            )));
        }
        let gap = self.box_distance(e, f)?;
        if !(gap > 0.0) {
            return Err(Error::Degenerate("continua intersect".into()));
        }
        Ok(gap / de.min(df))
    }

    /// The plates `E_n = I_n x {0} x [0, s_n]^(d-2)` and
    /// `F_n = I_n x {s_n} x [0, s_n]^(d-2)`.
    pub fn plates(&self, n: usize) -> (BoxContinuum, BoxContinuum) {
        let s = self.line.s(n);
        let t_range = self.line.interval(n);
        let mut lower = vec![(0.0, 0.0)];
        let mut upper = vec![(s, s)];
        for _ in 2..self.d {
            lower.push((0.0, s));
            upper.push((0.0, s));
        }
        (
            BoxContinuum {
                t_range,
                v_ranges: lower,
            },
            BoxContinuum {
                t_range,
                v_ranges: upper,
            },
        )
    }

    /// The bounded metric on the open unit ball of `R^d`:
    /// `rho(x', y') / (1 + rho(x', y'))` with `x' = x / (1 - |x|)` read as a
    /// point of `X_d` (first coordinate on the snowflaked line).
    pub fn compactified_metric(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        let xp = self.unball(x)?;
        let yp = self.unball(y)?;
        let r = self.rho_unchecked(&xp, &yp);
        Ok(r / (1.0 + r))
    }

    fn unball(&self, x: &[f64]) -> Result<ProductPoint> {
        if x.len() != self.d {
            return Err(Error::DimensionMismatch {
                expected: self.d,
                got: x.len(),
            });
        }
        let norm = x.iter().map(|c| c * c).sum::<f64>().sqrt();
        if !(norm < 1.0) {
            return Err(Error::Domain {
                what: "|x|",
                value: norm,
                domain: "[0, 1)",
            });
        }
        let scale = 1.0 / (1.0 - norm);
        Ok(ProductPoint {
            t: x[0] * scale,
            v: x[1..].iter().map(|c| c * scale).collect(),
        })
    }
}

pub(crate) fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}
