//! Discrete p-modulus of curve families on weighted grids over boxes in
//! `X_d`, the analytic parallel-plate bounds, and the divergence
//! experiment for the plates `E_n, F_n`.

use std::io::{Read, Write};

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::product_space::{BoxContinuum, ProductPoint, ProductSpace};

const DUMP_MAGIC: &[u8; 8] = b"RHOGRID1";
const BOX_TOL: f64 = 1e-12;

/// A polyline in `X_d`.
#[derive(Debug, Clone, PartialEq)]
pub struct Curve {
    vertices: Vec<ProductPoint>,
}

impl Curve {
    pub fn new(vertices: Vec<ProductPoint>) -> Result<Self> {
        let Some(first) = vertices.first() else {
            return Err(Error::Precondition("a curve needs vertices".into()));
        };
        if vertices.len() < 2 {
            return Err(Error::Precondition("a curve needs at least two vertices".into()));
        }
        let dim = first.v.len() + 1;
        if let Some(bad) = vertices.iter().find(|p| p.v.len() + 1 != dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: bad.v.len() + 1,
            });
        }
        Ok(Self { vertices })
    }

    pub fn segment(from: ProductPoint, to: ProductPoint) -> Result<Self> {
        Self::new(vec![from, to])
    }

    pub fn vertices(&self) -> &[ProductPoint] {
        &self.vertices
    }

    pub fn dim(&self) -> usize {
        self.vertices[0].v.len() + 1
    }

    /// Arclength in `X_d`.
    pub fn length(&self, space: &ProductSpace) -> Result<f64> {
        if self.dim() != space.dim() {
            return Err(Error::DimensionMismatch {
                expected: space.dim(),
                got: self.dim(),
            });
        }
        let line = space.line();
        let mut total = 0.0;
        for w in self.vertices.windows(2) {
            let (lo, hi) = (w[0].t.min(w[1].t), w[0].t.max(w[1].t));
            let flat = crate::product_space::euclidean(&w[0].v, &w[1].v);
            let mut cuts = vec![0.0];
            if hi > lo {
                cuts.extend(
                    line.breakpoints_between(lo, hi)
                        .into_iter()
                        .map(|e| (e - w[0].t) / (w[1].t - w[0].t)),
                );
            }
            cuts.push(1.0);
            cuts.sort_by(f64::total_cmp);
            for u in cuts.windows(2) {
                let mid = w[0].t + 0.5 * (u[0] + u[1]) * (w[1].t - w[0].t);
                let dt = (u[1] - u[0]) * (w[1].t - w[0].t).abs();
                total += (line.length_density(mid) * dt).hypot((u[1] - u[0]) * flat);
            }
        }
        Ok(total)
    }
}

/// A box in `X_d` cut into cells: `t` cells of equal length measure, `v`
/// cells of equal Euclidean width. Cells are numbered with the `t` index
/// varying fastest.
#[derive(Debug, Clone)]
pub struct GridDiscretization {
    space: ProductSpace,
    bounds: BoxContinuum,
    resolution: Vec<usize>,
    /// Cell edges per axis, `t` first.
    edges: Vec<Vec<f64>>,
    weights: Vec<f64>,
    density: Vec<f64>,
}

impl GridDiscretization {
    pub fn new(space: &ProductSpace, bounds: BoxContinuum, resolution: &[usize]) -> Result<Self> {
        if bounds.dim() != space.dim() {
            return Err(Error::DimensionMismatch {
                expected: space.dim(),
                got: bounds.dim(),
            });
        }
        if resolution.len() != space.dim() || resolution.contains(&0) {
            return Err(Error::Precondition(format!(
                "need one positive resolution per axis, got {resolution:?}"
            )));
        }
        let ranges: Vec<(f64, f64)> = std::iter::once(bounds.t_range)
            .chain(bounds.v_ranges.iter().copied())
            .collect();
        if let Some(r) = ranges.iter().find(|(lo, hi)| !(lo < hi)) {
            return Err(Error::Degenerate(format!("grid box has a flat side {r:?}")));
        }

        let line = space.line();
        let (t0, t1) = bounds.t_range;
        let total = line.measure_mu1(t0, t1)?;
        let mt = resolution[0];
        let mut t_edges: Vec<f64> = (0..mt)
            .map(|i| line.advance_by_length(t0, total * i as f64 / mt as f64))
            .collect();
        t_edges[0] = t0;
        t_edges.push(t1);
        let mut edges = vec![t_edges];
        for (axis, &(lo, hi)) in ranges.iter().enumerate().skip(1) {
            let m = resolution[axis];
            let mut e: Vec<f64> = (0..m).map(|i| lo + (hi - lo) * i as f64 / m as f64).collect();
            e.push(hi);
            edges.push(e);
        }

        let t_measure: Vec<f64> = edges[0]
            .windows(2)
            .map(|w| line.measure_mu1(w[0], w[1]))
            .collect::<Result<_>>()?;
        let cells: usize = resolution.iter().product();
        let mut weights = vec![0.0; cells];
        for (cell, w) in weights.iter_mut().enumerate() {
            let idx = unflatten(cell, resolution);
            *w = (1..resolution.len()).fold(t_measure[idx[0]], |acc, axis| {
                acc * (edges[axis][idx[axis] + 1] - edges[axis][idx[axis]])
            });
        }
        Ok(Self {
            space: space.clone(),
            bounds,
            resolution: resolution.to_vec(),
            edges,
            weights,
            density: vec![0.0; cells],
        })
    }

    /// Grid on `I_n x [0, s_n]^(d-1)`.
    pub fn plate_box(space: &ProductSpace, n: usize, resolution: &[usize]) -> Result<Self> {
        let s = space.line().s(n);
        let bounds = BoxContinuum::new(space.line().interval(n), vec![(0.0, s); space.dim() - 1])?;
        Self::new(space, bounds, resolution)
    }

    pub fn space(&self) -> &ProductSpace {
        &self.space
    }

    pub fn bounds(&self) -> &BoxContinuum {
        &self.bounds
    }

    pub fn resolution(&self) -> &[usize] {
        &self.resolution
    }

    pub fn edges(&self, axis: usize) -> &[f64] {
        &self.edges[axis]
    }

    pub fn cells(&self) -> usize {
        self.weights.len()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn density(&self) -> &[f64] {
        &self.density
    }

    pub fn set_density(&mut self, density: Vec<f64>) -> Result<()> {
        if density.len() != self.cells() {
            return Err(Error::Precondition(format!(
                "density has {} values for {} cells",
                density.len(),
                self.cells()
            )));
        }
        if let Some(bad) = density.iter().find(|r| !(**r >= 0.0) || !r.is_finite()) {
            return Err(Error::Precondition(format!(
                "density must be finite and >= 0, got {bad}"
            )));
        }
        self.density = density;
        Ok(())
    }

    pub fn fill_density(&mut self, value: f64) -> Result<()> {
        self.set_density(vec![value; self.cells()])
    }

    /// Same cells with every weight multiplied by `kappa`.
    pub fn with_scaled_weights(mut self, kappa: f64) -> Self {
        self.weights.iter_mut().for_each(|w| *w *= kappa);
        self
    }

    /// `sum w rho^p`.
    pub fn energy(&self, p: f64) -> f64 {
        energy(&self.weights, &self.density, p)
    }

    /// Centre of cell index `idx` along `axis` (length-measure centre for `t`).
    pub fn cell_center(&self, axis: usize, idx: usize) -> f64 {
        let e = &self.edges[axis];
        if axis == 0 {
            let line = self.space.line();
            let half = line.measure_mu1(e[idx], e[idx + 1]).unwrap_or(0.0) / 2.0;
            line.advance_by_length(e[idx], half)
        } else {
            0.5 * (e[idx] + e[idx + 1])
        }
    }

    fn coord_ranges(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        std::iter::once(self.bounds.t_range).chain(self.bounds.v_ranges.iter().copied())
    }

    fn check_inside(&self, p: &ProductPoint) -> Result<()> {
        let coords: Vec<f64> = std::iter::once(p.t).chain(p.v.iter().copied()).collect();
        let inside = coords.iter().zip(self.coord_ranges()).all(|(&x, (lo, hi))| {
            let slack = BOX_TOL * lo.abs().max(hi.abs()).max(hi - lo);
            x >= lo - slack && x <= hi + slack
        });
        if inside {
            Ok(())
        } else {
            Err(Error::OutOfBox(coords))
        }
    }

    fn locate(&self, axis: usize, x: f64) -> usize {
        let e = &self.edges[axis];
        let k = e.partition_point(|&edge| edge <= x);
        k.saturating_sub(1).min(self.resolution[axis] - 1)
    }

    /// Sparse row of the curve: `(cell, arclength of the curve in the
    /// cell)`, merged per cell and sorted by cell.
    pub fn incidence(&self, curve: &Curve) -> Result<Vec<(usize, f64)>> {
        if curve.dim() != self.space.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.space.dim(),
                got: curve.dim(),
            });
        }
        for p in curve.vertices() {
            self.check_inside(p)?;
        }
        let line = self.space.line();
        let mut pieces: Vec<(usize, f64)> = Vec::new();
        for w in curve.vertices().windows(2) {
            let (p, q) = (&w[0], &w[1]);
            let start: Vec<f64> = std::iter::once(p.t).chain(p.v.iter().copied()).collect();
            let end: Vec<f64> = std::iter::once(q.t).chain(q.v.iter().copied()).collect();
            let mut cuts = vec![0.0, 1.0];
            for axis in 0..start.len() {
                let (a, b) = (start[axis], end[axis]);
                if a == b {
                    continue;
                }
                let (lo, hi) = (a.min(b), a.max(b));
                let mut crossings: Vec<f64> = self.edges[axis].iter().copied().filter(|&e| lo < e && e < hi).collect();
                if axis == 0 {
                    crossings.extend(line.breakpoints_between(lo, hi));
                }
                cuts.extend(crossings.into_iter().map(|e| (e - a) / (b - a)));
            }
            cuts.sort_by(f64::total_cmp);
            cuts.dedup();
            let flat = crate::product_space::euclidean(&p.v, &q.v);
            for u in cuts.windows(2) {
                let du = u[1] - u[0];
                if du <= 0.0 {
                    continue;
                }
                let um = 0.5 * (u[0] + u[1]);
                let mid: Vec<f64> = start.iter().zip(&end).map(|(a, b)| a + um * (b - a)).collect();
                let dt = du * (end[0] - start[0]).abs();
                let len = (line.length_density(mid[0]) * dt).hypot(du * flat);
                let idx: Vec<usize> = mid.iter().enumerate().map(|(ax, &x)| self.locate(ax, x)).collect();
                pieces.push((flatten(&idx, &self.resolution), len));
            }
        }
        pieces.sort_by_key(|&(c, _)| c);
        let mut merged: Vec<(usize, f64)> = Vec::with_capacity(pieces.len());
        for (c, len) in pieces {
            match merged.last_mut() {
                Some((last, total)) if *last == c => *total += len,
                _ => merged.push((c, len)),
            }
        }
        Ok(merged)
    }
}

fn unflatten(mut cell: usize, resolution: &[usize]) -> Vec<usize> {
    resolution
        .iter()
        .map(|&m| {
            let i = cell % m;
            cell /= m;
            i
        })
        .collect()
}

fn flatten(idx: &[usize], resolution: &[usize]) -> usize {
    idx.iter().zip(resolution).rev().fold(0, |acc, (&i, &m)| acc * m + i)
}

fn energy(weights: &[f64], density: &[f64], p: f64) -> f64 {
    weights.iter().zip(density).map(|(w, r)| w * r.powf(p)).sum()
}

/// `sum over cells of rho * (arclength of the curve in the cell)`.
pub fn curve_integral(grid: &GridDiscretization, curve: &Curve) -> Result<f64> {
    Ok(grid
        .incidence(curve)?
        .iter()
        .map(|&(c, len)| grid.density[c] * len)
        .sum())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Admissibility {
    pub admissible: bool,
    pub worst_curve_integral: f64,
}

pub fn check_admissible(grid: &GridDiscretization, family: &[Curve], tolerance: f64) -> Result<Admissibility> {
    let worst = family
        .par_iter()
        .map(|c| curve_integral(grid, c))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .fold(f64::INFINITY, f64::min);
    Ok(Admissibility {
        admissible: worst >= 1.0 - tolerance,
        worst_curve_integral: worst,
    })
}

/// The segments `t -> (x, t, v_2, ..., v_(d-1))`, `t in [0, s_n]`, one per
/// cell column of a grid on `I_n x [0, s_n]^(d-1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct VerticalFamily {
    pub n: usize,
    pub d: usize,
    pub t_samples: Vec<f64>,
    /// Samples of `(v_2, ..., v_(d-1))`; a single empty vector when `d = 2`.
    pub v_samples: Vec<Vec<f64>>,
    pub height: f64,
}

impl VerticalFamily {
    pub fn on_grid(grid: &GridDiscretization, n: usize) -> Self {
        let d = grid.space.dim();
        let t_samples = (0..grid.resolution[0]).map(|i| grid.cell_center(0, i)).collect();
        let mut v_samples = vec![Vec::new()];
        for axis in 2..d {
            let centers: Vec<f64> = (0..grid.resolution[axis]).map(|i| grid.cell_center(axis, i)).collect();
            v_samples = v_samples
                .into_iter()
                .flat_map(|prefix| {
                    centers.iter().map(move |&c| {
                        let mut next = prefix.clone();
                        next.push(c);
                        next
                    })
                })
                .collect();
        }
        Self {
            n,
            d,
            t_samples,
            v_samples,
            height: grid.space.line().s(n),
        }
    }

    pub fn curves(&self) -> Vec<Curve> {
        let mut out = Vec::with_capacity(self.t_samples.len() * self.v_samples.len());
        for rest in &self.v_samples {
            for &x in &self.t_samples {
                let mut bottom = vec![0.0];
                bottom.extend_from_slice(rest);
                let mut top = vec![self.height];
                top.extend_from_slice(rest);
                out.push(Curve {
                    vertices: vec![ProductPoint::new(x, bottom), ProductPoint::new(x, top)],
                });
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SolverOptions {
    pub max_iters: usize,
    /// Constraint tolerance for termination.
    pub tol: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            max_iters: 200_000,
            tol: 1e-9,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModulusSolution {
    /// Energy of the returned (exactly admissible) density.
    pub value: f64,
    /// Lagrangian lower bound from the final multipliers.
    pub lower: f64,
    /// `value - lower`.
    pub duality_gap: f64,
    pub density: Vec<f64>,
    pub multipliers: Vec<f64>,
    pub iterations: usize,
}

/// Discrete p-modulus `min sum w rho^p` subject to `integral_gamma rho >= 1`
/// for every curve, by coordinate ascent on the Lagrange dual. The inner
/// minimiser for multipliers `lambda` is
/// `rho_i = (g_i / (p w_i))^(1/(p-1))` with `g = A^T lambda`; each step
/// picks the curve whose multiplier has the steepest dual gradient and
/// solves its one-constraint problem exactly. The final density is scaled
/// to be admissible, so `value` is an upper bound and `lower` a lower bound.
pub fn solve_modulus(
    grid: &GridDiscretization,
    family: &[Curve],
    p: f64,
    options: SolverOptions,
) -> Result<ModulusSolution> {
    if !(p > 1.0) {
        return Err(Error::Precondition(format!("modulus exponent must exceed 1, got {p}")));
    }
    if family.is_empty() {
        return Err(Error::Precondition("curve family is empty".into()));
    }
    let rows = family
        .par_iter()
        .map(|c| grid.incidence(c))
        .collect::<Result<Vec<_>>>()?;
    if let Some(k) = rows.iter().position(|r| r.iter().all(|&(_, a)| a <= 0.0)) {
        return Err(Error::Degenerate(format!("curve {k} has zero length in the grid")));
    }
    Dual::new(&grid.weights, rows, p).run(options)
}

struct Dual<'a> {
    weights: &'a [f64],
    rows: Vec<Vec<(usize, f64)>>,
    /// `(curve, coefficient)` per cell.
    columns: Vec<Vec<(usize, f64)>>,
    p: f64,
    lambda: Vec<f64>,
    g: Vec<f64>,
    rho: Vec<f64>,
    integrals: Vec<f64>,
}

impl<'a> Dual<'a> {
    fn new(weights: &'a [f64], rows: Vec<Vec<(usize, f64)>>, p: f64) -> Self {
        let mut columns = vec![Vec::new(); weights.len()];
        for (k, row) in rows.iter().enumerate() {
            for &(c, a) in row {
                columns[c].push((k, a));
            }
        }
        let m = rows.len();
        Self {
            weights,
            rows,
            columns,
            p,
            lambda: vec![0.0; m],
            g: vec![0.0; weights.len()],
            rho: vec![0.0; weights.len()],
            integrals: vec![0.0; m],
        }
    }

    fn rho_at(&self, cell: usize, g: f64) -> f64 {
        if g <= 0.0 {
            0.0
        } else {
            (g / (self.p * self.weights[cell])).powf(1.0 / (self.p - 1.0))
        }
    }

    /// `A_k rho` with `lambda_k` replaced by `value`.
    fn integral_with(&self, k: usize, value: f64) -> f64 {
        let delta = value - self.lambda[k];
        self.rows[k]
            .iter()
            .map(|&(c, a)| a * self.rho_at(c, self.g[c] + delta * a))
            .sum()
    }

    /// The `lambda_k >= 0` making curve `k` exactly tight, or 0 if it is
    /// slack without its own multiplier.
    fn solve_one(&self, k: usize) -> f64 {
        if self.integral_with(k, 0.0) >= 1.0 {
            return 0.0;
        }
        // ignoring the other multipliers only lowers rho, so this is an upper bracket
        let q = 1.0 / (self.p - 1.0);
        let spread: f64 = self.rows[k]
            .iter()
            .map(|&(c, a)| a * (a / (self.p * self.weights[c])).powf(q))
            .sum();
        let mut hi = spread.powf(-(self.p - 1.0));
        let mut lo = 0.0;
        while self.integral_with(k, hi) < 1.0 {
            lo = hi;
            hi *= 2.0;
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.integral_with(k, mid) < 1.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        hi
    }

    fn set_lambda(&mut self, k: usize, value: f64) {
        let delta = value - self.lambda[k];
        self.lambda[k] = value;
        for i in 0..self.rows[k].len() {
            let (c, a) = self.rows[k][i];
            self.g[c] = (self.g[c] + delta * a).max(0.0);
            let new_rho = self.rho_at(c, self.g[c]);
            let change = new_rho - self.rho[c];
            self.rho[c] = new_rho;
            for &(j, b) in &self.columns[c] {
                self.integrals[j] += b * change;
            }
        }
    }

    fn refresh(&mut self) {
        self.g.iter_mut().for_each(|g| *g = 0.0);
        for (k, row) in self.rows.iter().enumerate() {
            for &(c, a) in row {
                self.g[c] += self.lambda[k] * a;
            }
        }
        for c in 0..self.g.len() {
            self.rho[c] = self.rho_at(c, self.g[c]);
        }
        for (k, row) in self.rows.iter().enumerate() {
            self.integrals[k] = row.iter().map(|&(c, a)| a * self.rho[c]).sum();
        }
    }

    /// Curve with the steepest admissible dual ascent direction.
    fn steepest(&self) -> (usize, f64) {
        let mut best = (0, 0.0);
        for (k, &val) in self.integrals.iter().enumerate() {
            let grad = 1.0 - val;
            let score = if grad > 0.0 || self.lambda[k] > 0.0 {
                grad.abs()
            } else {
                0.0
            };
            if score > best.1 {
                best = (k, score);
            }
        }
        best
    }

    fn lagrangian(&self) -> f64 {
        self.lambda.iter().sum::<f64>() - (self.p - 1.0) * energy(self.weights, &self.rho, self.p)
    }

    fn run(mut self, options: SolverOptions) -> Result<ModulusSolution> {
        let mut iterations = 0;
        loop {
            if iterations % 1024 == 0 {
                self.refresh();
            }
            let (k, score) = self.steepest();
            if score <= options.tol {
                self.refresh();
                if self.steepest().1 <= options.tol {
                    break;
                }
                continue;
            }
            if iterations >= options.max_iters {
                let (upper, lower) = self.bounds();
                return Err(Error::NotConverged {
                    iterations,
                    upper,
                    lower,
                });
            }
            let value = self.solve_one(k);
            self.set_lambda(k, value);
            iterations += 1;
        }
        let (value, lower) = self.bounds();
        let scale = 1.0 / self.min_integral();
        Ok(ModulusSolution {
            value,
            lower,
            duality_gap: value - lower,
            density: self.rho.iter().map(|r| r * scale).collect(),
            multipliers: self.lambda,
            iterations,
        })
    }

    fn min_integral(&self) -> f64 {
        self.integrals.iter().copied().fold(f64::INFINITY, f64::min)
    }

    fn bounds(&self) -> (f64, f64) {
        let worst = self.min_integral();
        let upper = if worst > 0.0 {
            energy(self.weights, &self.rho, self.p) / worst.powf(self.p)
        } else {
            f64::INFINITY
        };
        (upper, self.lagrangian())
    }
}

/// Closed form for a one-curve family with row `a` and weights `w`:
/// `(sum a_i^q w_i^(1-q))^(1-p)` with `q = p / (p - 1)`.
pub fn single_curve_modulus(row: &[(usize, f64)], weights: &[f64], p: f64) -> f64 {
    let q = p / (p - 1.0);
    let s: f64 = row
        .iter()
        .filter(|&&(_, a)| a > 0.0)
        .map(|&(c, a)| a.powf(q) * weights[c].powf(1.0 - q))
        .sum();
    s.powf(1.0 - p)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AnalyticBounds {
    /// `l(I_n) / s_n = L(alpha_n, c_n)`.
    pub lower: f64,
    /// Energy of the admissible density `1 / s_n` on the plate box.
    pub exact_candidate: f64,
}

pub fn analytic_modulus_bounds(space: &ProductSpace, n: usize) -> Result<AnalyticBounds> {
    if !(1..=space.line().n_max()).contains(&n) {
        return Err(Error::Precondition(format!(
            "interval index {n} outside 1..={}",
            space.line().n_max()
        )));
    }
    let s = space.line().s(n);
    let bounds = BoxContinuum::new(space.line().interval(n), vec![(0.0, s); space.dim() - 1])?;
    Ok(AnalyticBounds {
        lower: space.line().slope(n),
        exact_candidate: plate_energy(space, &bounds)?,
    })
}

/// `mu_d(box) / h^d` where `h` is the height of the box in `v_1`: the
/// `d`-energy of the constant density `1 / h`, which is admissible for the
/// family of `v_1`-segments crossing the box.
pub fn plate_energy(space: &ProductSpace, bounds: &BoxContinuum) -> Result<f64> {
    let (lo, hi) = bounds
        .v_ranges
        .first()
        .copied()
        .ok_or_else(|| Error::Precondition("box has no v axis".into()))?;
    let h = hi - lo;
    if !(h > 0.0) {
        return Err(Error::Degenerate("box has zero height".into()));
    }
    Ok(space.measure_mud(bounds)? / h.powi(space.dim() as i32))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DivergenceRow {
    /// `None` for the flat control row.
    pub n: Option<usize>,
    pub delta_ratio: f64,
    pub analytic_lower: f64,
    pub solved_value: f64,
    pub duality_gap: f64,
    pub resolution: usize,
}

/// For each `n`, solves the `d`-modulus of the vertical family on
/// `I_n x [0, s_n]^(d-1)` at `resolution` cells per axis. With `flat_control`
/// a row for the cube `[2 - h, 2] x [0, h]^(d-1)` is appended, with
/// `h = s` of the last listed `n`.
pub fn modulus_divergence_experiment(
    space: &ProductSpace,
    n_list: &[usize],
    resolution: usize,
    flat_control: bool,
    options: SolverOptions,
) -> Result<Vec<DivergenceRow>> {
    let d = space.dim();
    let p = d as f64;
    let res = vec![resolution; d];
    let mut rows = n_list
        .par_iter()
        .map(|&n| {
            let bounds = analytic_modulus_bounds(space, n)?;
            let (e, f) = space.plates(n);
            let grid = GridDiscretization::plate_box(space, n, &res)?;
            let family = VerticalFamily::on_grid(&grid, n).curves();
            let sol = solve_modulus(&grid, &family, p, options)?;
            Ok(DivergenceRow {
                n: Some(n),
                delta_ratio: space.separation_ratio(&e, &f)?,
                analytic_lower: bounds.lower,
                solved_value: sol.value,
                duality_gap: sol.duality_gap,
                resolution,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    if flat_control {
        let h = n_list.last().map_or(1.0, |&n| space.line().s(n));
        rows.push(flat_row(space, h, resolution, options)?);
    }
    Ok(rows)
}

fn flat_row(space: &ProductSpace, h: f64, resolution: usize, options: SolverOptions) -> Result<DivergenceRow> {
    let d = space.dim();
    let bounds = BoxContinuum::new((2.0 - h, 2.0), vec![(0.0, h); d - 1])?;
    let grid = GridDiscretization::new(space, bounds.clone(), &vec![resolution; d])?;
    let lower_plate = BoxContinuum::new((2.0 - h, 2.0), plate_v(d, h, 0.0))?;
    let upper_plate = BoxContinuum::new((2.0 - h, 2.0), plate_v(d, h, h))?;
    let mut family = VerticalFamily::on_grid(&grid, 1);
    family.n = 0;
    family.height = h;
    let sol = solve_modulus(&grid, &family.curves(), d as f64, options)?;
    Ok(DivergenceRow {
        n: None,
        delta_ratio: space.separation_ratio(&lower_plate, &upper_plate)?,
        analytic_lower: plate_energy(space, &bounds)?,
        solved_value: sol.value,
        duality_gap: sol.duality_gap,
        resolution,
    })
}

fn plate_v(d: usize, h: f64, level: f64) -> Vec<(f64, f64)> {
    std::iter::once((level, level))
        .chain(std::iter::repeat_n((0.0, h), d - 2))
        .collect()
}

/// Contract of the divergence table: `solved >= 0.9 analytic` on every
/// interval row and `analytic_lower` strictly increasing along them.
pub fn check_divergence(rows: &[DivergenceRow]) -> Result<()> {
    let mut previous = f64::NEG_INFINITY;
    for (i, row) in rows.iter().enumerate().filter(|(_, r)| r.n.is_some()) {
        if row.solved_value < 0.9 * row.analytic_lower {
            return Err(Error::Invariant {
                index: i,
                reason: format!(
                    "solved value {} below 0.9 x analytic {}",
                    row.solved_value, row.analytic_lower
                ),
            });
        }
        if !(row.analytic_lower > previous) {
            return Err(Error::Invariant {
                index: i,
                reason: "analytic lower bound not strictly increasing".into(),
            });
        }
        previous = row.analytic_lower;
    }
    Ok(())
}

/// Writes the density as `RHOGRID1`, then `u32` dimension, `u64`
/// resolution per axis, `f64` bounds per axis (`lo, hi`), then the cell
/// values, all little-endian.
pub fn write_density<W: Write>(grid: &GridDiscretization, mut out: W) -> std::io::Result<()> {
    out.write_all(DUMP_MAGIC)?;
    out.write_all(&(grid.resolution.len() as u32).to_le_bytes())?;
    for &m in &grid.resolution {
        out.write_all(&(m as u64).to_le_bytes())?;
    }
    for (lo, hi) in grid.coord_ranges() {
        out.write_all(&lo.to_le_bytes())?;
        out.write_all(&hi.to_le_bytes())?;
    }
    for r in &grid.density {
        out.write_all(&r.to_le_bytes())?;
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct DensityDump {
    pub resolution: Vec<usize>,
    pub bounds: Vec<(f64, f64)>,
    pub density: Vec<f64>,
}

pub fn read_density<R: Read>(mut input: R) -> std::io::Result<DensityDump> {
    use std::io::{Error as IoError, ErrorKind};
    let mut magic = [0u8; 8];
    input.read_exact(&mut magic)?;
    if &magic != DUMP_MAGIC {
        return Err(IoError::new(ErrorKind::InvalidData, "not a density dump"));
    }
    let mut b4 = [0u8; 4];
    let mut b8 = [0u8; 8];
    input.read_exact(&mut b4)?;
    let dim = u32::from_le_bytes(b4) as usize;
    let mut resolution = Vec::with_capacity(dim);
    for _ in 0..dim {
        input.read_exact(&mut b8)?;
        resolution.push(u64::from_le_bytes(b8) as usize);
    }
    let mut read_f64 = |input: &mut R| -> std::io::Result<f64> {
        input.read_exact(&mut b8)?;
        Ok(f64::from_le_bytes(b8))
    };
    let mut bounds = Vec::with_capacity(dim);
    for _ in 0..dim {
        let lo = read_f64(&mut input)?;
        let hi = read_f64(&mut input)?;
        bounds.push((lo, hi));
    }
    let cells: usize = resolution.iter().product();
    let density = (0..cells)
        .map(|_| read_f64(&mut input))
        .collect::<std::io::Result<_>>()?;
    Ok(DensityDump {
        resolution,
        bounds,
        density,
    })
}
