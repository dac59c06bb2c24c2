//! Rough isometries between finite pointed metric spaces, certified upper
//! bounds on the pointed Gromov-Hausdorff distance, and the experiments
//! showing that rescaled balls of `(R, delta)` and `X_d` flatten out to
//! Euclidean balls.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::line_metric::{Direction, LineMetricSpace};
use crate::product_space::{euclidean, ProductPoint, ProductSpace};

/// Largest space accepted by [`gh_bruteforce`].
pub const BRUTEFORCE_LIMIT: usize = 8;

/// A finite metric space with a distinguished base point.
#[derive(Debug, Clone, PartialEq)]
pub struct FinitePointedSpace<P> {
    points: Vec<P>,
    dist: Vec<f64>,
    base: usize,
}

impl<P> FinitePointedSpace<P> {
    /// Fills the distance matrix from `metric`.
    pub fn from_metric(points: Vec<P>, base: usize, metric: impl Fn(&P, &P) -> f64) -> Result<Self> {
        let n = points.len();
        if base >= n {
            return Err(Error::Precondition(format!(
                "base index {base} out of range for {n} points"
            )));
        }
        let mut dist = vec![0.0; n * n];
        for i in 0..n {
            for j in (i + 1)..n {
                let d = metric(&points[i], &points[j]);
                dist[i * n + j] = d;
                dist[j * n + i] = d;
            }
        }
        Ok(Self { points, dist, base })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn base(&self) -> usize {
        self.base
    }

    pub fn points(&self) -> &[P] {
        &self.points
    }

    #[inline]
    pub fn d(&self, i: usize, j: usize) -> f64 {
        self.dist[i * self.points.len() + j]
    }

    /// Multiplies every distance by `lambda`.
    pub fn rescaled(mut self, lambda: f64) -> Self {
        self.dist.iter_mut().for_each(|d| *d *= lambda);
        self
    }

    /// Largest distance.
    pub fn diameter(&self) -> f64 {
        self.dist.iter().copied().fold(0.0, f64::max)
    }

    /// Checks symmetry, zero diagonal and the triangle inequality.
    pub fn check_metric(&self, tol: f64) -> Result<()> {
        let n = self.len();
        for i in 0..n {
            if self.d(i, i) != 0.0 {
                return Err(Error::Precondition(format!("nonzero diagonal at {i}")));
            }
            for j in 0..n {
                let d = self.d(i, j);
                if !(d >= 0.0) || d != self.d(j, i) {
                    return Err(Error::Precondition(format!("bad entry at ({i}, {j})")));
                }
                for k in 0..n {
                    if self.d(i, k) > d + self.d(j, k) + tol {
                        return Err(Error::Precondition(format!(
                            "triangle inequality fails for ({i}, {j}, {k})"
                        )));
                    }
                }
            }
        }
        Ok(())
    }
}

impl<P: Clone> FinitePointedSpace<P> {
    /// The subspace on `indices`, which must contain the base point.
    pub fn subspace(&self, indices: &[usize]) -> Result<Self> {
        let Some(base) = indices.iter().position(|&i| i == self.base) else {
            return Err(Error::Precondition("subspace must keep the base point".into()));
        };
        let m = indices.len();
        let mut dist = vec![0.0; m * m];
        for (a, &i) in indices.iter().enumerate() {
            for (b, &j) in indices.iter().enumerate() {
                dist[a * m + b] = self.d(i, j);
            }
        }
        Ok(Self {
            points: indices.iter().map(|&i| self.points[i].clone()).collect(),
            dist,
            base,
        })
    }
}

/// The three defects of a map between pointed spaces, and their maximum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RoughIsometryReport {
    pub eps_basepoint: f64,
    pub eps_density: f64,
    pub eps_distortion: f64,
    pub eps: f64,
}

/// Measures how far `map` (domain index to codomain index) is from being
/// a pointed isometry onto the codomain.
pub fn check_rough_isometry<P, Q>(
    domain: &FinitePointedSpace<P>,
    codomain: &FinitePointedSpace<Q>,
    map: &[usize],
) -> Result<RoughIsometryReport> {
    if map.len() != domain.len() {
        return Err(Error::Precondition(format!(
            "map has {} entries for {} domain points",
            map.len(),
            domain.len()
        )));
    }
    if let Some(&bad) = map.iter().find(|&&j| j >= codomain.len()) {
        return Err(Error::Precondition(format!(
            "map target {bad} out of range for {} codomain points",
            codomain.len()
        )));
    }
    let eps_basepoint = codomain.d(map[domain.base()], codomain.base());
    let mut eps_distortion: f64 = 0.0;
    for i in 0..domain.len() {
        for j in (i + 1)..domain.len() {
            let err = (codomain.d(map[i], map[j]) - domain.d(i, j)).abs();
            eps_distortion = eps_distortion.max(err);
        }
    }
    let eps_density = (0..codomain.len())
        .map(|y| map.iter().map(|&j| codomain.d(y, j)).fold(f64::INFINITY, f64::min))
        .fold(0.0, f64::max);
    Ok(RoughIsometryReport {
        eps_basepoint,
        eps_density,
        eps_distortion,
        eps: eps_basepoint.max(eps_density).max(eps_distortion),
    })
}

/// Upper bound on the pointed Gromov-Hausdorff distance certified by `map`.
pub fn gh_upper_bound<P, Q>(
    domain: &FinitePointedSpace<P>,
    codomain: &FinitePointedSpace<Q>,
    map: &[usize],
) -> Result<f64> {
    Ok(check_rough_isometry(domain, codomain, map)?.eps)
}

/// Smallest `eps` over all base-preserving maps `a -> b`, by exhaustive
/// search with branch-and-bound on the distortion. This is the pointed
/// Gromov-Hausdorff distance in its one-sided rough-isometry form.
/// Limited to [`BRUTEFORCE_LIMIT`] points per side.
pub fn gh_bruteforce<P, Q>(a: &FinitePointedSpace<P>, b: &FinitePointedSpace<Q>) -> Result<f64> {
    for len in [a.len(), b.len()] {
        if len > BRUTEFORCE_LIMIT {
            return Err(Error::TooLarge {
                limit: BRUTEFORCE_LIMIT,
                got: len,
            });
        }
    }
    Ok(best_map(a, b))
}

fn best_map<P, Q>(from: &FinitePointedSpace<P>, to: &FinitePointedSpace<Q>) -> f64 {
    let n = from.len();
    // base first, then the rest in index order
    let order: Vec<usize> = std::iter::once(from.base())
        .chain((0..n).filter(|&i| i != from.base()))
        .collect();
    let mut map = vec![usize::MAX; n];
    map[from.base()] = to.base();
    let mut best = f64::INFINITY;
    search(from, to, &order, 1, 0.0, &mut map, &mut best);
    best
}

fn search<P, Q>(
    from: &FinitePointedSpace<P>,
    to: &FinitePointedSpace<Q>,
    order: &[usize],
    depth: usize,
    distortion: f64,
    map: &mut Vec<usize>,
    best: &mut f64,
) {
    if distortion >= *best {
        return;
    }
    if depth == order.len() {
        let density = (0..to.len())
            .map(|y| map.iter().map(|&j| to.d(y, j)).fold(f64::INFINITY, f64::min))
            .fold(0.0, f64::max);
        *best = best.min(distortion.max(density));
        return;
    }
    let i = order[depth];
    for target in 0..to.len() {
        let mut worst = distortion;
        for &k in &order[..depth] {
            worst = worst.max((to.d(target, map[k]) - from.d(i, k)).abs());
        }
        map[i] = target;
        search(from, to, order, depth + 1, worst, map, best);
    }
    map[i] = usize::MAX;
}

/// A deterministic sample of a closed ball of `(R, delta)`.
#[derive(Debug, Clone)]
pub struct LineBallSample {
    /// Sample points in increasing order, with `delta` distances.
    pub space: FinitePointedSpace<f64>,
    /// Signed `delta`-distance of each point from the centre.
    pub radial: Vec<f64>,
    /// Largest gap between consecutive radial coordinates.
    pub mesh: f64,
}

impl LineBallSample {
    /// The radial coordinates as a subset of the Euclidean line, based at 0.
    pub fn euclidean_image(&self) -> FinitePointedSpace<f64> {
        FinitePointedSpace::from_metric(self.radial.clone(), self.space.base(), |a, b| (a - b).abs())
            .expect("base index carried over from a valid space")
    }
}

/// Samples `count` points of the closed ball `B(center, radius)`: the
/// centre, both extreme points (one when `count = 2`), and points at
/// evenly spaced `delta`-distances in between, located by inverting the
/// monotone radial function on each side.
pub fn sample_line_ball(line: &LineMetricSpace, center: f64, radius: f64, count: usize) -> Result<LineBallSample> {
    if !(radius > 0.0) || count < 2 {
        return Err(Error::Precondition(format!(
            "ball sample needs radius > 0 and count >= 2, got {radius}, {count}"
        )));
    }
    let others = count - 1;
    let left = others / 2;
    let right = others - left;
    let mut radial = Vec::with_capacity(count);
    for i in (1..=left).rev() {
        radial.push(-radius * i as f64 / left as f64);
    }
    radial.push(0.0);
    for i in 1..=right {
        radial.push(radius * i as f64 / right as f64);
    }
    let points: Vec<f64> = radial
        .iter()
        .map(|&tau| {
            if tau < 0.0 {
                line.point_at_distance(center, -tau, Direction::Left)
            } else {
                line.point_at_distance(center, tau, Direction::Right)
            }
        })
        .collect();
    let mesh = radial.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max);
    let space = FinitePointedSpace::from_metric(points, left, |&x, &y| line.delta(x, y))?;
    Ok(LineBallSample { space, radial, mesh })
}

/// The map straightening `[a, b] = B(p, r)` onto `[-r, r]`:
/// `x -> -delta(p, x)` left of `p`, `x -> delta(p, x)` right of it.
#[derive(Debug, Clone, Copy)]
pub struct RadialStraightening<'a> {
    line: &'a LineMetricSpace,
    pub center: f64,
    pub radius: f64,
    /// Smallest `n` with `I_n` meeting the ball.
    pub first_interval: Option<usize>,
    /// `(2 - 2^alpha_N) min(s_N, 2r)`, or 0 when the ball misses every
    /// interval or sits inside the linear scale of `I_N`.
    pub predicted_eps: f64,
}

impl RadialStraightening<'_> {
    pub fn apply(&self, x: f64) -> f64 {
        self.line.signed_radial(self.center, x)
    }
}

pub fn radial_straightening(line: &LineMetricSpace, p: f64, r: f64) -> Result<RadialStraightening<'_>> {
    if !(r > 0.0) {
        return Err(Error::Precondition(format!("radius must be positive, got {r}")));
    }
    let (lo, hi) = line.ball(p, r);
    let first_interval = line.first_interval_meeting(lo, hi);
    let predicted_eps = match first_interval {
        None => 0.0,
        Some(n) => {
            let s = line.s(n);
            let profile = line.profile(n);
            if r < 0.5 * s * profile.knee_height() {
                0.0
            } else {
                profile.additivity_gap() * s.min(2.0 * r)
            }
        }
    };
    Ok(RadialStraightening {
        line,
        center: p,
        radius: r,
        first_interval,
        predicted_eps,
    })
}

/// One rescaled ball in a convergence experiment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TangentCase {
    pub n: usize,
    pub center: f64,
    pub lambda: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TangentRow {
    pub n: usize,
    pub center: f64,
    pub lambda: f64,
    pub first_interval: Option<usize>,
    /// Predicted bound in rescaled units.
    pub predicted_eps: f64,
    /// `lambda (2 - 2^alpha_N) min(s_N, 2R / lambda)`: the bound without
    /// the small-ball refinement, which tends to 0 along the sequence.
    pub bound: f64,
    pub measured_eps: f64,
    /// Radial sampling mesh in rescaled units.
    pub mesh: f64,
    pub points: usize,
}

/// Samples `B(center_n, R / lambda_n)` in `(R, delta)`, rescales by
/// `lambda_n`, and measures the straightening map against the matching
/// sample of `[-R, R]`.
pub fn tangent_convergence_line(
    line: &LineMetricSpace,
    cases: &[TangentCase],
    radius: f64,
    count: usize,
) -> Result<Vec<TangentRow>> {
    check_scales(cases)?;
    cases
        .par_iter()
        .map(|case| {
            let r = radius / case.lambda;
            let psi = radial_straightening(line, case.center, r)?;
            let sample = sample_line_ball(line, case.center, r, count)?;
            let domain = sample.space.clone().rescaled(case.lambda);
            let codomain = sample.euclidean_image().rescaled(case.lambda);
            let identity: Vec<usize> = (0..domain.len()).collect();
            let report = check_rough_isometry(&domain, &codomain, &identity)?;
            Ok(TangentRow {
                n: case.n,
                center: case.center,
                lambda: case.lambda,
                first_interval: psi.first_interval,
                predicted_eps: case.lambda * psi.predicted_eps,
                bound: unrefined_bound(line, psi.first_interval, r) * case.lambda,
                measured_eps: report.eps,
                mesh: sample.mesh * case.lambda,
                points: domain.len(),
            })
        })
        .collect()
}

fn unrefined_bound(line: &LineMetricSpace, first: Option<usize>, r: f64) -> f64 {
    match first {
        Some(n) => line.profile(n).additivity_gap() * line.s(n).min(2.0 * r),
        None => 0.0,
    }
}

fn check_scales(cases: &[TangentCase]) -> Result<()> {
    if let Some(bad) = cases.iter().find(|c| !(c.lambda > 0.0)) {
        return Err(Error::Precondition(format!(
            "scale factors must be positive, got {} at n = {}",
            bad.lambda, bad.n
        )));
    }
    Ok(())
}

/// Tensor sample of a `rho`-ball in `X_d`: the radial line sample crossed
/// with an axis grid of `per_axis` points on `[-r, r]` in each Euclidean
/// coordinate, restricted to the ball. Returns the domain sample and its
/// straightened image in `R^d`.
pub fn sample_product_ball(
    space: &ProductSpace,
    center_t: f64,
    radius: f64,
    line_count: usize,
    per_axis: usize,
) -> Result<(FinitePointedSpace<ProductPoint>, FinitePointedSpace<Vec<f64>>, f64)> {
    if per_axis < 2 {
        return Err(Error::Precondition("need at least two grid points per axis".into()));
    }
    let line = sample_line_ball(space.line(), center_t, radius, line_count)?;
    let k = space.dim() - 1;
    let axis: Vec<f64> = (0..per_axis)
        .map(|i| -radius + 2.0 * radius * i as f64 / (per_axis - 1) as f64)
        .collect();
    let spacing = 2.0 * radius / (per_axis - 1) as f64;

    let mut domain_pts = Vec::new();
    let mut image_pts = Vec::new();
    let mut base = None;
    let mut index = vec![0usize; k];
    loop {
        let v: Vec<f64> = index.iter().map(|&i| axis[i]).collect();
        let v_norm2: f64 = v.iter().map(|x| x * x).sum();
        for (j, (&t, &tau)) in line.space.points().iter().zip(&line.radial).enumerate() {
            if tau * tau + v_norm2 <= radius * radius * (1.0 + 1e-12) {
                if j == line.space.base() && v_norm2 == 0.0 {
                    base = Some(domain_pts.len());
                }
                domain_pts.push(ProductPoint::new(t, v.clone()));
                let mut img = Vec::with_capacity(k + 1);
                img.push(tau);
                img.extend_from_slice(&v);
                image_pts.push(img);
            }
        }
        // odometer over the grid
        let mut axis_i = 0;
        while axis_i < k {
            index[axis_i] += 1;
            if index[axis_i] < per_axis {
                break;
            }
            index[axis_i] = 0;
            axis_i += 1;
        }
        if axis_i == k {
            break;
        }
    }
    let base = match base {
        Some(b) => b,
        None => {
            // odd grids contain 0; otherwise add the centre explicitly
            domain_pts.push(ProductPoint::on_axis(center_t, space.dim()));
            image_pts.push(vec![0.0; k + 1]);
            domain_pts.len() - 1
        }
    };
    let domain = FinitePointedSpace::from_metric(domain_pts, base, |x, y| space.rho_unchecked(x, y))?;
    let image = FinitePointedSpace::from_metric(image_pts, base, |x, y| euclidean(x, y))?;
    Ok((domain, image, line.mesh.max(spacing)))
}

/// Product analogue of [`tangent_convergence_line`]: the straightening
/// map crossed with the identity on the Euclidean factor.
pub fn tangent_convergence_product(
    space: &ProductSpace,
    cases: &[TangentCase],
    radius: f64,
    line_count: usize,
    per_axis: usize,
) -> Result<Vec<TangentRow>> {
    check_scales(cases)?;
    cases
        .par_iter()
        .map(|case| {
            let r = radius / case.lambda;
            let psi = radial_straightening(space.line(), case.center, r)?;
            let (domain, image, mesh) = sample_product_ball(space, case.center, r, line_count, per_axis)?;
            let domain = domain.rescaled(case.lambda);
            let image = image.rescaled(case.lambda);
            let identity: Vec<usize> = (0..domain.len()).collect();
            let report = check_rough_isometry(&domain, &image, &identity)?;
            Ok(TangentRow {
                n: case.n,
                center: case.center,
                lambda: case.lambda,
                first_interval: psi.first_interval,
                predicted_eps: case.lambda * psi.predicted_eps,
                bound: unrefined_bound(space.line(), psi.first_interval, r) * case.lambda,
                measured_eps: report.eps,
                mesh: mesh * case.lambda,
                points: domain.len(),
            })
        })
        .collect()
}

/// Evenly spread indices of `0..len` (at most `k`, always including
/// `base`), for cutting samples down to brute-force size.
pub fn spread_indices(len: usize, base: usize, k: usize) -> Vec<usize> {
    if len <= k {
        return (0..len).collect();
    }
    let mut idx: Vec<usize> = (0..k - 1)
        .map(|i| ((i as f64) * (len - 1) as f64 / (k - 2).max(1) as f64).round() as usize)
        .collect();
    idx.push(base);
    idx.sort_unstable();
    idx.dedup();
    idx
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn euclid(points: Vec<f64>, base: usize) -> FinitePointedSpace<f64> {
        FinitePointedSpace::from_metric(points, base, |a, b| (a - b).abs()).unwrap()
    }

    #[test]
    fn sample_in_flat_region() {
        let line = LineMetricSpace::with_default_params(16).unwrap();
        let s = sample_line_ball(&line, 2.0, 0.5, 3).unwrap();
        assert_eq!(s.space.points(), &[1.5, 2.0, 2.5]);
        assert_eq!(s.space.base(), 1);
        assert_abs_diff_eq!(s.space.d(0, 2), 1.0, epsilon = 1e-15);
        let two = sample_line_ball(&line, 2.0, 0.5, 2).unwrap();
        assert_eq!(two.space.points(), &[2.0, 2.5]);
        assert_eq!(two.space.base(), 0);
        assert!(sample_line_ball(&line, 2.0, 0.5, 1).is_err());
    }

    #[test]
    fn sample_extremes_sit_on_the_sphere() {
        let line = LineMetricSpace::with_default_params(16).unwrap();
        for n in [3, 9] {
            let p = line.midpoint(n) + 0.1 * line.s(n);
            let r = line.s(n);
            let s = sample_line_ball(&line, p, r, 9).unwrap();
            let pts = s.space.points();
            assert!((line.delta(p, pts[0]) - r).abs() <= 1e-15);
            assert!((line.delta(p, pts[8]) - r).abs() <= 1e-15);
            s.space.check_metric(1e-9).unwrap();
        }
    }

    #[test]
    fn identity_and_collapse() {
        let a = euclid(vec![0.0, 0.3, 1.0], 0);
        let r = check_rough_isometry(&a, &a, &[0, 1, 2]).unwrap();
        assert_eq!(r.eps, 0.0);
        let pair = euclid(vec![0.0, 1.0], 0);
        let r = check_rough_isometry(&pair, &pair, &[0, 0]).unwrap();
        assert_eq!(r.eps_distortion, 1.0);
        assert!(gh_upper_bound(&pair, &pair, &[0, 0]).unwrap() >= pair.diameter() / 2.0);
        assert!(check_rough_isometry(&pair, &pair, &[0]).is_err());
        assert!(check_rough_isometry(&pair, &pair, &[0, 5]).is_err());
    }

    #[test]
    fn bruteforce_examples() {
        let a = euclid(vec![0.0, 1.0], 0);
        let b = euclid(vec![0.0, 2.0], 0);
        assert_eq!(gh_bruteforce(&a, &b).unwrap(), 1.0);

        let shuffled = euclid(vec![0.7, 0.0, 0.2], 1);
        let sorted = euclid(vec![0.0, 0.2, 0.7], 0);
        assert_eq!(gh_bruteforce(&shuffled, &sorted).unwrap(), 0.0);

        let point = euclid(vec![0.0], 0);
        let ball = euclid(vec![-0.4, 0.0, 0.4], 1);
        assert_abs_diff_eq!(gh_bruteforce(&point, &ball).unwrap(), 0.4, epsilon = 1e-15);

        let big = euclid((0..9).map(f64::from).collect(), 0);
        assert!(matches!(gh_bruteforce(&big, &a), Err(Error::TooLarge { .. })));
    }

    #[test]
    fn radial_map_predictions() {
        let line = LineMetricSpace::with_default_params(16).unwrap();
        let flat = radial_straightening(&line, 2.0, 0.1).unwrap();
        assert_eq!(flat.first_interval, None);
        assert_eq!(flat.predicted_eps, 0.0);

        let n = 5;
        let tiny = radial_straightening(
            &line,
            line.midpoint(n),
            1e-3 * line.s(n) * line.profile(n).knee_height(),
        )
        .unwrap();
        assert_eq!(tiny.first_interval, Some(n));
        assert_eq!(tiny.predicted_eps, 0.0);

        let (a, _) = line.interval(n);
        let full = radial_straightening(&line, a, line.s(n)).unwrap();
        assert_eq!(full.first_interval, Some(n));
        let expected = line.profile(n).additivity_gap() * line.s(n);
        assert!((full.predicted_eps - expected).abs() <= 1e-18);
        assert!(full.apply(a - 0.001) < 0.0 && full.apply(a + 1e-6) > 0.0);
    }

    #[test]
    fn flat_centres_converge_immediately() {
        let line = LineMetricSpace::with_default_params(16).unwrap();
        let cases: Vec<_> = (1..=5)
            .map(|n| TangentCase {
                n,
                center: 2.0,
                lambda: 10f64.powi(n as i32),
            })
            .collect();
        for row in tangent_convergence_line(&line, &cases, 1.0, 17).unwrap() {
            assert!(row.measured_eps <= 1e-9, "{row:?}");
            assert_eq!(row.first_interval, None);
        }
    }

    #[test]
    fn spread_keeps_base() {
        let idx = spread_indices(33, 16, 8);
        assert!(idx.len() <= 8 && idx.contains(&16) && idx.contains(&0) && idx.contains(&32));
        assert_eq!(spread_indices(5, 2, 8), vec![0, 1, 2, 3, 4]);
    }
}
