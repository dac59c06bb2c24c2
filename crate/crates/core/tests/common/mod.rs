#![allow(dead_code)]

use rand::Rng;
use snowline::LineMetricSpace;

/// Index of the interval containing `x`, by linear scan.
pub fn containing(line: &LineMetricSpace, x: f64) -> Option<usize> {
    (1..=line.n_max()).find(|&n| {
        let (a, b) = line.interval(n);
        a <= x && x <= b
    })
}

/// `s_n phi_n(|u - v| / s_n)` for `u, v` in `I_n`.
pub fn local(line: &LineMetricSpace, n: usize, u: f64, v: f64) -> f64 {
    let s = line.s(n);
    s * line.profile(n).phi(((u - v).abs() / s).min(1.0)).unwrap()
}

/// The metric by its five-case definition: local metric on a shared
/// interval, Euclidean outside, glued through the nearer endpoints.
pub fn delta_oracle(line: &LineMetricSpace, x: f64, y: f64) -> f64 {
    let (x, y) = if x <= y { (x, y) } else { (y, x) };
    match (containing(line, x), containing(line, y)) {
        (Some(n), Some(m)) if n == m => local(line, n, x, y),
        (None, None) => y - x,
        (None, Some(m)) => {
            let (a, _) = line.interval(m);
            (a - x) + local(line, m, a, y)
        }
        (Some(n), None) => {
            let (_, b) = line.interval(n);
            local(line, n, x, b) + (y - b)
        }
        (Some(n), Some(m)) => {
            let (_, b) = line.interval(n);
            let (a, _) = line.interval(m);
            local(line, n, x, b) + (a - b) + local(line, m, a, y)
        }
    }
}

/// Which definition case a sorted pair falls in, numbered 1 to 5.
pub fn case_of(line: &LineMetricSpace, x: f64, y: f64) -> usize {
    let (x, y) = if x <= y { (x, y) } else { (y, x) };
    match (containing(line, x), containing(line, y)) {
        (Some(n), Some(m)) if n == m => 1,
        (None, None) => 2,
        (None, Some(_)) => 3,
        (Some(_), None) => 4,
        (Some(_), Some(_)) => 5,
    }
}

/// A point of `[-2, 2]` from raw draws: uniform, inside a random interval,
/// or at one of its endpoints.
pub fn point_from(line: &LineMetricSpace, kind: u8, n: usize, u: f64, w: f64) -> f64 {
    let n = 1 + (n - 1) % line.n_max();
    let (a, b) = line.interval(n);
    match kind % 4 {
        0 => w,
        1 | 2 => a + u * (b - a),
        _ if u < 0.5 => a,
        _ => b,
    }
}

pub fn random_point<R: Rng>(rng: &mut R, line: &LineMetricSpace) -> f64 {
    point_from(
        line,
        rng.gen_range(0..4),
        rng.gen_range(1..=line.n_max()),
        rng.gen_range(0.0..=1.0),
        rng.gen_range(-2.0..=2.0),
    )
}
