//! The modified metric on the real line.
//!
//! Each interval `I_n = [1/n - s_n, 1/n]` carries the snowflaked metric
//! `delta_n(x, y) = s_n phi_n(|x - y| / s_n)`; everywhere else the metric is
//! Euclidean, and a pair of points in different pieces is joined by walking
//! to the facing endpoints. Only `n <= n_max` intervals are materialised;
//! points closer to 0 than `a_{n_max}` see the Euclidean metric.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::profile::{solve_log_c_for_slope, SnowflakeProfile};

/// Tolerance on `L(alpha_n, c_n)` when solving for `c_n`.
pub const SLOPE_SOLVE_TOL: f64 = 1e-12;
pub const SLOPE_SOLVE_MAX_ITER: usize = 200;
pub const DEFAULT_N_MAX: usize = 64;

/// Per-interval parameter sequences, stored for `n = 1..=n_max` at index
/// `n - 1`. Exponents and thresholds are kept as `1 - alpha_n` and `ln c_n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstructionParams {
    pub alpha_deficit: Vec<f64>,
    pub ln_c: Vec<f64>,
    pub s: Vec<f64>,
}

impl ConstructionParams {
    /// The shipped recipe: `alpha_n = 1 - 2^-(n+1)`, `c_n` chosen so that
    /// `L(alpha_n, c_n) = n + 2`, and
    /// `s_n = min(1/n - 1/(n+1), 1/(n^2 L(alpha_n, c_n)))`.
    pub fn default_recipe(n_max: usize) -> Result<Self> {
        if n_max == 0 {
            return Err(Error::Precondition("n_max must be at least 1".into()));
        }
        let mut params = Self {
            alpha_deficit: Vec::with_capacity(n_max),
            ln_c: Vec::with_capacity(n_max),
            s: Vec::with_capacity(n_max),
        };
        for n in 1..=n_max {
            let deficit = 0.5_f64.powi(n as i32 + 1);
            let target = (n + 2) as f64;
            let ln_c = solve_log_c_for_slope(deficit, target, SLOPE_SOLVE_TOL, SLOPE_SOLVE_MAX_ITER).map_err(|e| {
                Error::Invariant {
                    index: n,
                    reason: e.to_string(),
                }
            })?;
            let slope = SnowflakeProfile::from_log_parts(deficit, ln_c)
                .map_err(|e| Error::Invariant {
                    index: n,
                    reason: e.to_string(),
                })?
                .slope();
            let nf = n as f64;
            let s = (1.0 / nf - 1.0 / (nf + 1.0)).min(1.0 / (nf * nf * slope));
            params.alpha_deficit.push(deficit);
            params.ln_c.push(ln_c);
            params.s.push(s);
        }
        params.profiles()?;
        Ok(params)
    }

    /// Builds parameters from plain `alpha_n`, `c_n`, `s_n` sequences.
    pub fn from_sequences(alpha: &[f64], c: &[f64], s: &[f64]) -> Result<Self> {
        if alpha.len() != c.len() || alpha.len() != s.len() {
            return Err(Error::Precondition(format!(
                "sequence lengths differ: alpha {}, c {}, s {}",
                alpha.len(),
                c.len(),
                s.len()
            )));
        }
        let params = Self {
            alpha_deficit: alpha.iter().map(|a| 1.0 - a).collect(),
            ln_c: c.iter().map(|c| c.ln()).collect(),
            s: s.to_vec(),
        };
        params.profiles()?;
        Ok(params)
    }

    pub fn n_max(&self) -> usize {
        self.s.len()
    }

    /// Validates every construction invariant and returns the per-interval
    /// profiles.
    pub fn profiles(&self) -> Result<Vec<SnowflakeProfile>> {
        let n_max = self.n_max();
        if n_max == 0 {
            return Err(Error::Precondition("at least one interval is required".into()));
        }
        if self.alpha_deficit.len() != n_max || self.ln_c.len() != n_max {
            return Err(Error::Precondition("parameter sequences have different lengths".into()));
        }
        let mut profiles = Vec::with_capacity(n_max);
        for i in 0..n_max {
            let n = i + 1;
            let fail = |reason: String| Error::Invariant { index: n, reason };
            let profile = SnowflakeProfile::from_log_parts(self.alpha_deficit[i], self.ln_c[i])
                .map_err(|e| fail(e.to_string()))?;
            let nf = n as f64;
            let s = self.s[i];
            let spacing = 1.0 / nf - 1.0 / (nf + 1.0);
            if !(s > 0.0 && s < 2.0 * spacing) {
                return Err(fail(format!("s_n = {s} must lie in (0, 2 (1/n - 1/(n+1)))")));
            }
            if s >= spacing {
                return Err(fail(format!(
                    "s_n = {s} must be below 1/n - 1/(n+1) = {spacing} for I_n and I_(n+1) to be disjoint"
                )));
            }
            if i > 0 {
                let prev: &SnowflakeProfile = &profiles[i - 1];
                if self.alpha_deficit[i] >= self.alpha_deficit[i - 1] {
                    return Err(fail("alpha_n must be strictly increasing".into()));
                }
                if profile.slope() <= prev.slope() {
                    return Err(fail("L(alpha_n, c_n) must be strictly increasing".into()));
                }
                if s * profile.slope() > self.s[i - 1] * prev.slope() {
                    return Err(fail("s_n L(alpha_n, c_n) must be non-increasing".into()));
                }
            }
            profiles.push(profile);
        }
        Ok(profiles)
    }
}

/// Result of [`LineMetricSpace::locate`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum IntervalLocation {
    Outside,
    /// Point `a_n + offset` of `I_n`, with `0 <= offset <= s_n`.
    Inside {
        n: usize,
        offset: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Left,
    Right,
}

#[derive(Debug, Clone, Copy)]
struct Interval {
    n: usize,
    a: f64,
    b: f64,
    s: f64,
    profile: SnowflakeProfile,
}

impl Interval {
    fn metric(&self, d: f64) -> f64 {
        self.profile.scaled(self.s, d)
    }

    fn metric_inverse(&self, r: f64) -> f64 {
        self.profile.scaled_inverse(self.s, r)
    }
}

#[derive(Debug, Clone)]
pub struct LineMetricSpace {
    params: ConstructionParams,
    /// Indexed by `n - 1`.
    intervals: Vec<Interval>,
    /// Interval indices sorted by position, left to right.
    ascending: Vec<usize>,
}

impl LineMetricSpace {
    pub fn new(params: ConstructionParams) -> Result<Self> {
        let profiles = params.profiles()?;
        let intervals: Vec<Interval> = profiles
            .into_iter()
            .enumerate()
            .map(|(i, profile)| {
                let n = i + 1;
                let b = 1.0 / n as f64;
                let s = params.s[i];
                Interval {
                    n,
                    a: b - s,
                    b,
                    s,
                    profile,
                }
            })
            .collect();
        let ascending = (0..intervals.len()).rev().collect();
        Ok(Self {
            params,
            intervals,
            ascending,
        })
    }

    pub fn with_default_params(n_max: usize) -> Result<Self> {
        Self::new(ConstructionParams::default_recipe(n_max)?)
    }

    pub fn params(&self) -> &ConstructionParams {
        &self.params
    }

    pub fn n_max(&self) -> usize {
        self.intervals.len()
    }

    fn get(&self, n: usize) -> &Interval {
        assert!(
            (1..=self.n_max()).contains(&n),
            "interval index {n} outside 1..={}",
            self.n_max()
        );
        &self.intervals[n - 1]
    }

    pub fn profile(&self, n: usize) -> &SnowflakeProfile {
        &self.get(n).profile
    }

    pub fn s(&self, n: usize) -> f64 {
        self.get(n).s
    }

    /// `(a_n, b_n)`.
    pub fn interval(&self, n: usize) -> (f64, f64) {
        let iv = self.get(n);
        (iv.a, iv.b)
    }

    pub fn slope(&self, n: usize) -> f64 {
        self.get(n).profile.slope()
    }

    pub fn midpoint(&self, n: usize) -> f64 {
        let iv = self.get(n);
        iv.a + 0.5 * iv.s
    }

    /// Upper bound on the length the untruncated construction would add
    /// beyond `n_max`: `sum_{n > n_max} s_n L_n <= sum_{n > n_max} 1/n^2`,
    /// valid for any parameters with `s_n L_n <= 1/n^2` (the default recipe).
    pub fn truncation_tail_bound(&self) -> f64 {
        let head: f64 = (1..=self.n_max()).map(|n| 1.0 / (n as f64 * n as f64)).sum();
        (std::f64::consts::PI * std::f64::consts::PI / 6.0 - head).max(0.0)
    }

    /// Finds the interval containing `x`, if any, by testing the indices
    /// adjacent to `floor(1/x)`.
    pub fn locate(&self, x: f64) -> IntervalLocation {
        if !(x > 0.0 && x <= 1.0) {
            return IntervalLocation::Outside;
        }
        let guess = (1.0 / x).floor();
        if guess > (self.n_max() + 1) as f64 {
            return IntervalLocation::Outside;
        }
        let guess = guess as usize;
        for n in guess.saturating_sub(1).max(1)..=(guess + 1).min(self.n_max()) {
            let iv = &self.intervals[n - 1];
            if iv.a <= x && x <= iv.b {
                return IntervalLocation::Inside { n, offset: x - iv.a };
            }
        }
        IntervalLocation::Outside
    }

    fn containing(&self, x: f64) -> Option<&Interval> {
        match self.locate(x) {
            IntervalLocation::Inside { n, .. } => Some(&self.intervals[n - 1]),
            IntervalLocation::Outside => None,
        }
    }

    /// The metric `delta(x, y)`.
    pub fn delta(&self, x: f64, y: f64) -> f64 {
        if x == y {
            return 0.0;
        }
        let (x, y) = if x < y { (x, y) } else { (y, x) };
        let left = self.containing(x);
        let right = self.containing(y);
        if let (Some(l), Some(r)) = (left, right) {
            if l.n == r.n {
                return l.metric(y - x);
            }
        }
        let (head, from) = match left {
            Some(iv) => (iv.metric(iv.b - x), iv.b),
            None => (0.0, x),
        };
        let (tail, to) = match right {
            Some(iv) => (iv.metric(y - iv.a), iv.a),
            None => (0.0, y),
        };
        head + (to - from) + tail
    }

    /// `delta(p, x)` with the sign of `x - p`: the map that straightens a
    /// ball around `p` onto an interval of the Euclidean line.
    pub fn signed_radial(&self, p: f64, x: f64) -> f64 {
        if x < p {
            -self.delta(p, x)
        } else {
            self.delta(p, x)
        }
    }

    /// `(delta(x, y) + delta(y, z) - delta(x, z), bound)` for `x <= y <= z`,
    /// where `bound = (2 - 2^alpha_N) min(s_N, delta(x, z))` and `N` is the
    /// smallest index of an interval containing one of the three points
    /// (`bound = 0` if there is none).
    pub fn additivity_defect(&self, x: f64, y: f64, z: f64) -> Result<(f64, f64)> {
        if !(x <= y && y <= z) {
            return Err(Error::Precondition(format!("need x <= y <= z, got {x}, {y}, {z}")));
        }
        let xz = self.delta(x, z);
        let defect = self.delta(x, y) + self.delta(y, z) - xz;
        let first = [x, y, z]
            .iter()
            .filter_map(|&p| self.containing(p).map(|iv| iv.n))
            .min();
        let bound = match first {
            Some(n) => {
                let iv = self.get(n);
                iv.profile.additivity_gap() * iv.s.min(xz)
            }
            None => 0.0,
        };
        Ok((defect, bound))
    }

    /// Length of `[x, y]`: Euclidean length outside the intervals plus
    /// `L(alpha_k, c_k)` times the overlap with each `I_k`.
    pub fn segment_length(&self, x: f64, y: f64) -> Result<f64> {
        if !(x <= y) {
            return Err(Error::Precondition(format!("segment needs x <= y, got [{x}, {y}]")));
        }
        let mut length = y - x;
        for iv in &self.intervals {
            let overlap = y.min(iv.b) - x.max(iv.a);
            if overlap > 0.0 {
                length += (iv.profile.slope() - 1.0) * overlap;
            }
        }
        Ok(length)
    }

    /// The length measure of `[x, y]`.
    pub fn measure_mu1(&self, x: f64, y: f64) -> Result<f64> {
        self.segment_length(x, y)
    }

    /// Metric derivative of the identity parametrisation at `t`: `L_k` on
    /// the interior of `I_k`, 1 elsewhere.
    pub fn length_density(&self, t: f64) -> f64 {
        match self.containing(t) {
            Some(iv) if iv.a < t && t < iv.b => iv.profile.slope(),
            _ => 1.0,
        }
    }

    /// Breakpoints `a_k, b_k` lying strictly inside `(x, y)`, ascending.
    pub fn breakpoints_between(&self, x: f64, y: f64) -> Vec<f64> {
        let mut out = Vec::new();
        for &i in &self.ascending {
            let iv = &self.intervals[i];
            for e in [iv.a, iv.b] {
                if x < e && e < y {
                    out.push(e);
                }
            }
        }
        out
    }

    /// Inverts the length measure: the `t >= x` with `mu_1([x, t]) = m`.
    pub fn advance_by_length(&self, x: f64, m: f64) -> f64 {
        let mut pos = x;
        let mut rem = m;
        loop {
            let here = match self.containing(pos) {
                Some(iv) if pos < iv.b => Some(iv),
                _ => None,
            };
            let (end, rate) = match here {
                Some(iv) => (iv.b, iv.profile.slope()),
                None => (self.next_start_right(pos).unwrap_or(f64::INFINITY), 1.0),
            };
            let span = (end - pos) * rate;
            if rem <= span || !end.is_finite() {
                return pos + rem / rate;
            }
            rem -= span;
            pos = end;
        }
    }

    fn next_start_right(&self, pos: f64) -> Option<f64> {
        // ascending by position; first interval with a > pos
        let k = self.ascending.partition_point(|&i| self.intervals[i].a <= pos);
        self.ascending.get(k).map(|&i| self.intervals[i].a)
    }

    fn next_right(&self, pos: f64) -> Option<&Interval> {
        let k = self.ascending.partition_point(|&i| self.intervals[i].a < pos);
        self.ascending.get(k).map(|&i| &self.intervals[i])
    }

    fn next_left(&self, pos: f64) -> Option<&Interval> {
        let k = self.ascending.partition_point(|&i| self.intervals[i].b <= pos);
        k.checked_sub(1).map(|k| &self.intervals[self.ascending[k]])
    }

    /// The point `x` on the given side of `p` with `delta(p, x) = r`.
    /// `delta(p, .)` is continuous and strictly monotone on each side of
    /// `p`, so this walks piece by piece and inverts the last piece exactly.
    pub fn point_at_distance(&self, p: f64, r: f64, dir: Direction) -> f64 {
        if r <= 0.0 {
            return p;
        }
        let mut rem = r;
        let mut pos = p;
        if let Some(iv) = self.containing(p) {
            let room = match dir {
                Direction::Right => iv.b - p,
                Direction::Left => p - iv.a,
            };
            let full = iv.metric(room);
            if rem <= full {
                let step = iv.metric_inverse(rem).min(room);
                return match dir {
                    Direction::Right => p + step,
                    Direction::Left => p - step,
                };
            }
            rem -= full;
            pos = match dir {
                Direction::Right => iv.b,
                Direction::Left => iv.a,
            };
        }
        loop {
            let next = match dir {
                Direction::Right => self.next_right(pos),
                Direction::Left => self.next_left(pos),
            };
            let Some(iv) = next else {
                return match dir {
                    Direction::Right => pos + rem,
                    Direction::Left => pos - rem,
                };
            };
            let gap = match dir {
                Direction::Right => iv.a - pos,
                Direction::Left => pos - iv.b,
            };
            if rem <= gap {
                return match dir {
                    Direction::Right => pos + rem,
                    Direction::Left => pos - rem,
                };
            }
            rem -= gap;
            // crossing the whole interval costs delta_n(a_n, b_n) = s_n
            let full = iv.metric(iv.b - iv.a);
            if rem <= full {
                let step = iv.metric_inverse(rem).min(iv.b - iv.a);
                return match dir {
                    Direction::Right => iv.a + step,
                    Direction::Left => iv.b - step,
                };
            }
            rem -= full;
            pos = match dir {
                Direction::Right => iv.b,
                Direction::Left => iv.a,
            };
        }
    }

    /// The closed ball `{x : delta(p, x) <= r}`, which is an interval.
    pub fn ball(&self, p: f64, r: f64) -> (f64, f64) {
        (
            self.point_at_distance(p, r, Direction::Left),
            self.point_at_distance(p, r, Direction::Right),
        )
    }

    /// Smallest index `n` with `I_n` meeting `[lo, hi]`.
    pub fn first_interval_meeting(&self, lo: f64, hi: f64) -> Option<usize> {
        self.intervals.iter().find(|iv| iv.a <= hi && lo <= iv.b).map(|iv| iv.n)
    }

    /// Minimal number of consecutive pieces of `delta`-diameter at most
    /// `piece` needed to cover `[x, y]`. Runs of identical pieces (flat
    /// gaps, or the inside of one `I_n`) are counted arithmetically.
    pub fn consecutive_cover_count(&self, x: f64, y: f64, piece: f64) -> Result<u64> {
        if !(x <= y) || !(piece > 0.0) {
            return Err(Error::Precondition(format!(
                "cover needs x <= y and piece > 0, got [{x}, {y}], piece {piece}"
            )));
        }
        const SLACK: f64 = 1e-12;
        let mut count: u64 = 0;
        let mut pos = x;
        loop {
            if self.delta(pos, y) <= piece * (1.0 + SLACK) {
                return Ok(count + 1);
            }
            let (end, step) = match self.containing(pos) {
                Some(iv) if pos < iv.b && piece < iv.s => (iv.b, iv.metric_inverse(piece)),
                Some(_) => (pos, piece),
                None => (self.next_start_right(pos).unwrap_or(f64::INFINITY), piece),
            };
            if end >= y {
                let pieces = ((y - pos) / step * (1.0 - SLACK)).ceil().max(1.0);
                return Ok(count + pieces as u64);
            }
            let k = ((end - pos) / step).floor();
            let next = if k >= 2.0 {
                let skip = k - 1.0;
                count += skip as u64;
                pos + skip * step
            } else {
                count += 1;
                self.point_at_distance(pos, piece, Direction::Right)
            };
            if !(next > pos) {
                return Err(Error::Degenerate(format!(
                    "piece {piece} is below floating resolution at {pos}"
                )));
            }
            pos = next;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn space(n_max: usize) -> LineMetricSpace {
        LineMetricSpace::with_default_params(n_max).unwrap()
    }

    #[test]
    fn default_recipe_values() {
        let p = ConstructionParams::default_recipe(1).unwrap();
        assert_eq!(1.0 - p.alpha_deficit[0], 0.75);
        let sp = space(64);
        for n in 1..=64 {
            assert!((sp.slope(n) - (n + 2) as f64).abs() <= 1e-12, "n = {n}");
            let nf = n as f64;
            assert!(sp.s(n) * sp.slope(n) <= 1.0 / (nf * nf) * (1.0 + 1e-15));
        }
    }

    #[test]
    fn invariant_violations_name_the_index() {
        let mut p = ConstructionParams::default_recipe(5).unwrap();
        p.s[2] = 0.5;
        match LineMetricSpace::new(p) {
            Err(Error::Invariant { index, .. }) => assert_eq!(index, 3),
            other => panic!("unexpected {other:?}"),
        }
        let mut p = ConstructionParams::default_recipe(5).unwrap();
        p.alpha_deficit[3] = p.alpha_deficit[2];
        assert!(matches!(
            LineMetricSpace::new(p),
            Err(Error::Invariant { index: 4, .. })
        ));
        assert!(ConstructionParams::default_recipe(0).is_err());
    }

    #[test]
    fn locate_examples() {
        let sp = space(16);
        for n in 1..=16 {
            let (a, b) = sp.interval(n);
            assert_eq!(sp.locate(b), IntervalLocation::Inside { n, offset: b - a });
            match sp.locate(b - sp.s(n) / 2.0) {
                IntervalLocation::Inside { n: m, offset } => {
                    assert_eq!(m, n);
                    assert_abs_diff_eq!(offset, sp.s(n) / 2.0, epsilon = 1e-16);
                }
                IntervalLocation::Outside => panic!("midpoint of I_{n} not located"),
            }
            assert_eq!(sp.locate(a - 1e-9), IntervalLocation::Outside);
        }
        assert_eq!(sp.locate(2.0), IntervalLocation::Outside);
        assert_eq!(sp.locate(0.0), IntervalLocation::Outside);
        assert_eq!(sp.locate(-0.5), IntervalLocation::Outside);
        assert_eq!(sp.locate(1e-6), IntervalLocation::Outside);
    }

    #[test]
    fn delta_examples() {
        let sp = space(64);
        for n in [1, 2, 7, 30, 64] {
            let (a, b) = sp.interval(n);
            assert!((sp.delta(a, b) - sp.s(n)).abs() <= 1e-15);
        }
        assert_eq!(sp.delta(0.3, 0.3), 0.0);
        assert_abs_diff_eq!(sp.delta(-1.0, 2.0), 3.0, epsilon = 1e-14);
    }

    #[test]
    fn segment_length_examples() {
        let sp = space(8);
        for n in 1..=8 {
            let (a, b) = sp.interval(n);
            let len = sp.segment_length(a, b).unwrap();
            assert!((len - sp.s(n) * sp.slope(n)).abs() <= 1e-15, "n = {n}");
            let c = sp.profile(n).c();
            let m = sp.measure_mu1(a, a + sp.s(n) * c).unwrap();
            assert!((m - sp.s(n) * c * sp.slope(n)).abs() <= 1e-15);
        }
        assert_eq!(sp.segment_length(0.4, 0.4).unwrap(), 0.0);
        assert_abs_diff_eq!(sp.measure_mu1(2.0, 3.0).unwrap(), 1.0, epsilon = 1e-15);
        assert!(sp.segment_length(1.0, 0.0).is_err());
        let extra: f64 = (1..=8).map(|n| sp.s(n) * (sp.slope(n) - 1.0)).sum();
        assert_abs_diff_eq!(sp.segment_length(-1.0, 2.0).unwrap(), 3.0 + extra, epsilon = 1e-14);
    }

    #[test]
    fn point_at_distance_inverts_delta() {
        let sp = space(12);
        let probes = [
            -0.3,
            0.05,
            0.2,
            sp.midpoint(3),
            sp.interval(5).0,
            sp.interval(2).1,
            0.9,
            1.5,
        ];
        for &p in &probes {
            for r in [1e-6, 1e-3, 0.02, 0.3, 1.1] {
                for dir in [Direction::Left, Direction::Right] {
                    let x = sp.point_at_distance(p, r, dir);
                    assert!((sp.delta(p, x) - r).abs() <= 1e-13, "p {p} r {r} {dir:?}");
                    match dir {
                        Direction::Left => assert!(x <= p),
                        Direction::Right => assert!(x >= p),
                    }
                }
            }
        }
    }

    #[test]
    fn advance_by_length_inverts_mu1() {
        let sp = space(6);
        for &(x, m) in &[(0.0, 0.5), (0.1, 0.01), (sp.interval(3).0, 0.002), (-1.0, 2.5)] {
            let t = sp.advance_by_length(x, m);
            assert_abs_diff_eq!(sp.measure_mu1(x, t).unwrap(), m, epsilon = 1e-14);
        }
    }

    #[test]
    fn cover_counts() {
        let sp = space(8);
        // flat interval of length 1, pieces of length 1/8
        assert_eq!(sp.consecutive_cover_count(2.0, 3.0, 0.125).unwrap(), 8);
        assert_eq!(sp.consecutive_cover_count(2.0, 3.0, 1e-9).unwrap(), 1_000_000_000);
        assert_eq!(sp.consecutive_cover_count(2.0, 2.0, 0.1).unwrap(), 1);
        // a whole interval at pieces of delta-diameter s_n / 2
        let (a, b) = sp.interval(4);
        let half = sp.s(4) / 2.0;
        let expected = (1.0 / sp.profile(4).phi_inverse(0.5).unwrap() - 1e-12).ceil() as u64;
        assert_eq!(sp.consecutive_cover_count(a, b, half).unwrap(), expected);
    }

    #[test]
    fn tail_bound_is_small() {
        let sp = space(64);
        assert!(sp.truncation_tail_bound() < 1.0 / 64.0);
        assert!(sp.truncation_tail_bound() > 1.0 / 65.0);
    }
}
