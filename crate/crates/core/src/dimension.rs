//! Covering numbers, doubling and Assouad-dimension estimates, and the
//! radial contraction check for `(R, delta)`.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::line_metric::{Direction, LineMetricSpace};
use crate::product_space::{BoxContinuum, ProductPoint, ProductSpace};
use crate::profile::{log_slope, SnowflakeProfile};

const COUNT_SLACK: f64 = 1e-12;
const CONTRACT_TOL: f64 = 1e-12;
const MAX_BALLS: usize = 1_000_000;
/// Pieces smaller than this multiple of `|x|` are not resolvable in f64.
const RESOLUTION: f64 = 1e6 * f64::EPSILON;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CoveringReport {
    pub n: usize,
    /// `delta`-diameter of the covered set.
    pub r: f64,
    pub eps: f64,
    pub count: u64,
    /// `2 eps^(-1/alpha_n)`.
    pub bound: f64,
}

impl CoveringReport {
    pub fn holds(&self) -> bool {
        self.count as f64 <= self.bound
    }
}

/// Covers a subinterval of `I_n` of `delta`-diameter `r` by consecutive
/// pieces of `delta`-diameter at most `eps r`. Inside `I_n` the metric
/// depends only on Euclidean separation, so every such subinterval needs
/// the same number of pieces: the ratio of the two inverse-profile lengths,
/// rounded up.
pub fn covering_number_interval(space: &LineMetricSpace, n: usize, r: f64, eps: f64) -> Result<CoveringReport> {
    if !(1..=space.n_max()).contains(&n) {
        return Err(Error::Precondition(format!(
            "interval index {n} outside 1..={}",
            space.n_max()
        )));
    }
    let s = space.s(n);
    if !(r > 0.0 && r <= s) || !(eps > 0.0 && eps <= 0.5) {
        return Err(Error::Precondition(format!(
            "need 0 < r <= s_n = {s} and 0 < eps <= 1/2, got r = {r}, eps = {eps}"
        )));
    }
    let profile = space.profile(n);
    let whole = profile.scaled_inverse(s, r);
    let piece = profile.scaled_inverse(s, eps * r);
    let count = (whole / piece * (1.0 - COUNT_SLACK)).ceil().max(1.0) as u64;
    Ok(CoveringReport {
        n,
        r,
        eps,
        count,
        bound: 2.0 * eps.powf(-1.0 / profile.alpha()),
    })
}

/// `ln c - ln(phi(c)^(1/alpha))`, which is non-negative exactly when
/// `phi(c)^(1/alpha) <= c`. Computed in logs so that underflowed `c` is fine.
pub fn knee_inequality_margin(profile: &SnowflakeProfile) -> f64 {
    let ln_knee = profile.ln_c() + log_slope(profile.deficit(), profile.ln_c());
    profile.ln_c() - ln_knee / profile.alpha()
}

/// Greedy cover of the closed ball `B(center, 2R)` by closed `R`-balls.
/// Balls are intervals with endpoints monotone in the centre, so the
/// greedy choice (leftmost uncovered point at distance exactly `R` from
/// the next centre) is optimal.
pub fn line_doubling_count(space: &LineMetricSpace, center: f64, radius: f64) -> Result<usize> {
    if !(radius > 0.0) {
        return Err(Error::Precondition(format!("radius must be positive, got {radius}")));
    }
    let (lo, hi) = space.ball(center, 2.0 * radius);
    let mut pos = lo;
    for count in 1..=MAX_BALLS {
        let c = space.point_at_distance(pos, radius, Direction::Right);
        pos = space.point_at_distance(c, radius, Direction::Right);
        if pos >= hi || space.delta(pos, hi) <= COUNT_SLACK * radius {
            return Ok(count);
        }
    }
    Err(Error::TooLarge {
        limit: MAX_BALLS,
        got: MAX_BALLS + 1,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DoublingReport {
    pub max_count: usize,
    pub worst_center: f64,
    pub worst_radius: f64,
}

/// Worst greedy doubling count over `centers` evenly spaced points of
/// `region` and every radius in `scales`.
pub fn doubling_constant_estimate_line(
    space: &LineMetricSpace,
    region: (f64, f64),
    scales: &[f64],
    centers: usize,
) -> Result<DoublingReport> {
    if scales.is_empty() || centers == 0 || !(region.0 <= region.1) {
        return Err(Error::Precondition(
            "need a region, scales and at least one centre".into(),
        ));
    }
    let samples = lattice(region, centers);
    let jobs: Vec<(f64, f64)> = samples
        .iter()
        .flat_map(|&p| scales.iter().map(move |&r| (p, r)))
        .collect();
    let counts = jobs
        .par_iter()
        .map(|&(p, r)| line_doubling_count(space, p, r))
        .collect::<Result<Vec<_>>>()?;
    Ok(worst(&jobs, &counts))
}

/// Doubling count in `X_d`: the `2R`-ball is sampled on the lattice of
/// spacing `R` in (signed `delta`, `v`) coordinates around the centre, and
/// covered greedily by `R`-balls centred at sample points (most new points
/// first, ties to the earliest sample).
pub fn product_doubling_count(space: &ProductSpace, center: &ProductPoint, radius: f64) -> Result<usize> {
    if !(radius > 0.0) {
        return Err(Error::Precondition(format!("radius must be positive, got {radius}")));
    }
    if center.v.len() + 1 != space.dim() {
        return Err(Error::DimensionMismatch {
            expected: space.dim(),
            got: center.v.len() + 1,
        });
    }
    let k = space.dim() - 1;
    let steps = [-2i32, -1, 0, 1, 2];
    let mut points = Vec::new();
    let mut idx = vec![0usize; k + 1];
    loop {
        let norm2: i32 = idx.iter().map(|&i| steps[i] * steps[i]).sum();
        if norm2 <= 4 {
            let tau = steps[idx[0]] as f64 * radius;
            let t = if tau < 0.0 {
                space.line().point_at_distance(center.t, -tau, Direction::Left)
            } else {
                space.line().point_at_distance(center.t, tau, Direction::Right)
            };
            let v = idx[1..]
                .iter()
                .zip(&center.v)
                .map(|(&i, &c)| c + steps[i] as f64 * radius)
                .collect();
            points.push(ProductPoint::new(t, v));
        }
        let mut axis = 0;
        while axis <= k {
            idx[axis] += 1;
            if idx[axis] < steps.len() {
                break;
            }
            idx[axis] = 0;
            axis += 1;
        }
        if axis > k {
            break;
        }
    }
    let reach = radius * (1.0 + COUNT_SLACK);
    let m = points.len();
    let covers: Vec<Vec<usize>> = (0..m)
        .map(|i| {
            (0..m)
                .filter(|&j| space.rho_unchecked(&points[i], &points[j]) <= reach)
                .collect()
        })
        .collect();
    Ok(greedy_set_cover(m, &covers))
}

fn greedy_set_cover(m: usize, covers: &[Vec<usize>]) -> usize {
    let mut covered = vec![false; m];
    let mut left = m;
    let mut count = 0;
    while left > 0 {
        let (best, gain) = covers
            .iter()
            .enumerate()
            .map(|(i, c)| (i, c.iter().filter(|&&j| !covered[j]).count()))
            .fold((0, 0), |acc, x| if x.1 > acc.1 { x } else { acc });
        debug_assert!(gain > 0, "every sample covers itself");
        for &j in &covers[best] {
            if !covered[j] {
                covered[j] = true;
                left -= 1;
            }
        }
        count += 1;
    }
    count
}

/// Worst [`product_doubling_count`] over a lattice of `centers` points per
/// axis in `region` and every radius in `scales`. `worst_center` reports
/// the `t` coordinate.
pub fn doubling_constant_estimate_product(
    space: &ProductSpace,
    region: &BoxContinuum,
    scales: &[f64],
    centers: usize,
) -> Result<DoublingReport> {
    if region.dim() != space.dim() {
        return Err(Error::DimensionMismatch {
            expected: space.dim(),
            got: region.dim(),
        });
    }
    if scales.is_empty() || centers == 0 {
        return Err(Error::Precondition("need scales and at least one centre".into()));
    }
    let axes: Vec<Vec<f64>> = std::iter::once(region.t_range)
        .chain(region.v_ranges.iter().copied())
        .map(|range| lattice(range, centers))
        .collect();
    let mut sample = Vec::new();
    let mut idx = vec![0usize; axes.len()];
    loop {
        let t = axes[0][idx[0]];
        let v = (1..axes.len()).map(|a| axes[a][idx[a]]).collect();
        sample.push(ProductPoint::new(t, v));
        let mut axis = 0;
        while axis < axes.len() {
            idx[axis] += 1;
            if idx[axis] < axes[axis].len() {
                break;
            }
            idx[axis] = 0;
            axis += 1;
        }
        if axis == axes.len() {
            break;
        }
    }
    let jobs: Vec<(usize, f64)> = (0..sample.len())
        .flat_map(|i| scales.iter().map(move |&r| (i, r)))
        .collect();
    let counts = jobs
        .par_iter()
        .map(|&(i, r)| product_doubling_count(space, &sample[i], r))
        .collect::<Result<Vec<_>>>()?;
    let located: Vec<(f64, f64)> = jobs.iter().map(|&(i, r)| (sample[i].t, r)).collect();
    Ok(worst(&located, &counts))
}

fn worst(jobs: &[(f64, f64)], counts: &[usize]) -> DoublingReport {
    let mut report = DoublingReport {
        max_count: 0,
        worst_center: f64::NAN,
        worst_radius: f64::NAN,
    };
    for (&(p, r), &count) in jobs.iter().zip(counts) {
        if count > report.max_count {
            report = DoublingReport {
                max_count: count,
                worst_center: p,
                worst_radius: r,
            };
        }
    }
    report
}

fn lattice((lo, hi): (f64, f64), k: usize) -> Vec<f64> {
    if k == 1 {
        return vec![0.5 * (lo + hi)];
    }
    (0..k).map(|i| lo + (hi - lo) * i as f64 / (k - 1) as f64).collect()
}

/// `C = max_{n < N} 2^(1/alpha_n - beta)` and at least 1, where `N` is the
/// first index with `1/alpha_N < beta`. When no index qualifies (always the
/// case for `beta <= 1`) the maximum runs over every interval.
pub fn assouad_constant(space: &LineMetricSpace, beta: f64) -> f64 {
    let first_good = (1..=space.n_max())
        .find(|&n| 1.0 / space.profile(n).alpha() < beta)
        .unwrap_or(space.n_max() + 1);
    (1..first_good)
        .map(|n| (1.0 / space.profile(n).alpha() - beta).exp2())
        .fold(1.0, f64::max)
}

/// Sample lattice for the Assouad sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct AssouadSweep {
    pub beta_grid: Vec<f64>,
    /// Set diameters: `r_steps` geometric values in `[r_min, r_max]`.
    pub r_min: f64,
    pub r_max: f64,
    pub r_steps: usize,
    pub eps_grid: Vec<f64>,
    /// Left endpoints of the covered sets.
    pub starts: Vec<f64>,
}

impl AssouadSweep {
    /// Flat points, left endpoints, midpoints and knees of every interval,
    /// and points just left of each interval so that sets straddle it.
    pub fn default_starts(space: &LineMetricSpace) -> Vec<f64> {
        let mut starts = vec![-1.0, 1.5, 2.0];
        for n in 1..=space.n_max() {
            let (a, _) = space.interval(n);
            let s = space.s(n);
            let knee = space.profile(n).c();
            starts.extend([a, a + 0.5 * s, a + knee * s, a - 0.25 * s]);
        }
        starts
    }

    pub fn radii(&self) -> Vec<f64> {
        if self.r_steps <= 1 {
            return vec![self.r_max];
        }
        let ratio = (self.r_max / self.r_min).ln();
        (0..self.r_steps)
            .map(|i| self.r_min * (ratio * i as f64 / (self.r_steps - 1) as f64).exp())
            .collect()
    }

    fn validate(&self) -> Result<()> {
        let eps_ok = self.eps_grid.iter().all(|&e| e > 0.0 && e <= 0.5);
        if self.beta_grid.is_empty()
            || self.eps_grid.is_empty()
            || self.starts.is_empty()
            || !eps_ok
            || !(self.r_min > 0.0 && self.r_min <= self.r_max)
        {
            return Err(Error::Precondition(
                "Assouad sweep needs nonempty grids, eps in (0, 1/2] and 0 < r_min <= r_max".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AssouadRow {
    pub beta: f64,
    pub constant: f64,
    pub max_violation: f64,
    pub worst_start: f64,
    pub worst_r: f64,
    pub worst_eps: f64,
    pub worst_count: u64,
    pub cells: usize,
}

/// For each `beta`, the largest `count / (4 C eps^-beta)` over the sweep,
/// where `count` is the minimal consecutive cover of `[x, y]` with
/// `delta(x, y) = r` by pieces of diameter `eps r`. Cells whose pieces
/// fall below floating resolution at `x` are skipped; `cells` counts the
/// rest.
pub fn assouad_dimension_estimate(space: &LineMetricSpace, sweep: &AssouadSweep) -> Result<Vec<AssouadRow>> {
    sweep.validate()?;
    let radii = sweep.radii();
    let mut cells = Vec::new();
    for &x in &sweep.starts {
        for &r in &radii {
            let y = space.point_at_distance(x, r, Direction::Right);
            let floor = RESOLUTION * x.abs().max(y.abs());
            for &eps in &sweep.eps_grid {
                if eps * r >= floor {
                    cells.push((x, y, r, eps));
                }
            }
        }
    }
    let counts = cells
        .par_iter()
        .map(|&(x, y, r, eps)| space.consecutive_cover_count(x, y, eps * r))
        .collect::<Result<Vec<u64>>>()?;
    Ok(sweep
        .beta_grid
        .iter()
        .map(|&beta| {
            let constant = assouad_constant(space, beta);
            let mut row = AssouadRow {
                beta,
                constant,
                max_violation: 0.0,
                worst_start: f64::NAN,
                worst_r: f64::NAN,
                worst_eps: f64::NAN,
                worst_count: 0,
                cells: cells.len(),
            };
            for (&(x, _, r, eps), &count) in cells.iter().zip(&counts) {
                let v = count as f64 / (4.0 * constant * eps.powf(-beta));
                if v > row.max_violation {
                    row.max_violation = v;
                    row.worst_start = x;
                    row.worst_r = r;
                    row.worst_eps = eps;
                    row.worst_count = count;
                }
            }
            row
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ContractibilityReport {
    /// Largest `delta(p, t x + (1 - t) p) - delta(p, x)` over the sample.
    pub max_excess: f64,
    pub pass: bool,
}

/// Samples `x` on an even grid of the ball `B(p, r)` and `t` on an even
/// grid of `[0, 1]`, and checks that the straight-line homotopy to `p`
/// never moves a point further from `p`.
pub fn radial_contractibility_check(
    space: &LineMetricSpace,
    p: f64,
    r: f64,
    steps: usize,
) -> Result<ContractibilityReport> {
    if !(r > 0.0) || steps < 2 {
        return Err(Error::Precondition(format!(
            "need r > 0 and steps >= 2, got r = {r}, steps = {steps}"
        )));
    }
    let (lo, hi) = space.ball(p, r);
    let mut max_excess = f64::NEG_INFINITY;
    for x in lattice((lo, hi), steps) {
        let dx = space.delta(p, x);
        for t in lattice((0.0, 1.0), steps) {
            let h = t * x + (1.0 - t) * p;
            max_excess = max_excess.max(space.delta(p, h) - dx);
        }
    }
    Ok(ContractibilityReport {
        max_excess,
        pass: max_excess <= CONTRACT_TOL,
    })
}
