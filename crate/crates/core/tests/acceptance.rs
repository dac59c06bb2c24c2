//! Acceptance criteria. Runs without the libtest harness so that every
//! criterion prints a PASS/FAIL line regardless of output capture.

mod common;

use std::fs;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use snowline::cli::{run, ExperimentConfig, ExperimentKind, ParamsSpec};
use snowline::dimension::{assouad_dimension_estimate, covering_number_interval, AssouadSweep};
use snowline::modulus::{
    check_divergence, modulus_divergence_experiment, single_curve_modulus, solve_modulus, Curve, GridDiscretization,
    SolverOptions,
};
use snowline::tangents::{
    check_rough_isometry, gh_bruteforce, sample_line_ball, spread_indices, tangent_convergence_line, TangentCase,
};
use snowline::{BoxContinuum, LineMetricSpace, ProductPoint, ProductSpace, SnowflakeProfile};

use common::{case_of, delta_oracle, random_point};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn check(cond: bool, msg: String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg)
    }
}

fn within(elapsed: Duration, limit_secs: u64) -> Result<(), String> {
    check(
        elapsed.as_secs_f64() <= limit_secs as f64,
        format!("took {:.1}s, limit {limit_secs}s", elapsed.as_secs_f64()),
    )
}

fn profile_inequalities() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let (mut worst_sub, mut worst_low, mut worst_high) = (f64::INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for _ in 0..100_000 {
        let alpha = rng.gen_range(0.001..0.999);
        let c = rng.gen_range(-27.0f64..0.0).exp();
        let p = SnowflakeProfile::new(alpha, c).map_err(|e| e.to_string())?;
        let (a, b) = (rng.gen_range(0.0..=1.0), rng.gen_range(0.0..=1.0));
        worst_sub = worst_sub.min(p.submultiplicativity_defect(a, b).unwrap());
        let x: f64 = rng.gen_range(0.0..=1.0);
        let t = rng.gen_range(0.0..=x);
        let (lhs, rhs) = p.concavity_defect_bound(t, x).unwrap();
        worst_low = worst_low.min(lhs);
        worst_high = worst_high.max(lhs - rhs);
    }
    check(worst_sub >= -1e-12, format!("submultiplicativity defect {worst_sub}"))?;
    check(worst_low >= -1e-12, format!("concavity defect {worst_low} < 0"))?;
    check(
        worst_high <= 1e-12,
        format!("concavity defect exceeds bound by {worst_high}"),
    )?;
    within(start.elapsed(), 5)?;
    Ok(format!(
        "1e5 samples, min submult defect {worst_sub:.2e}, concavity in [{worst_low:.2e}, bound + {worst_high:.2e}]"
    ))
}

fn line_metric() -> Outcome {
    let start = Instant::now();
    let line = LineMetricSpace::with_default_params(64).map_err(|e| e.to_string())?;
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut cases = [0usize; 5];
    let (mut sym, mut tri, mut oracle, mut add) = (0.0f64, f64::NEG_INFINITY, 0.0f64, f64::NEG_INFINITY);
    for _ in 0..100_000 {
        let (x, y, z) = (
            random_point(&mut rng, &line),
            random_point(&mut rng, &line),
            random_point(&mut rng, &line),
        );
        sym = sym.max((line.delta(x, y) - line.delta(y, x)).abs());
        tri = tri.max(line.delta(x, z) - line.delta(x, y) - line.delta(y, z));
        for (p, q) in [(x, y), (y, z), (x, z)] {
            oracle = oracle.max((line.delta(p, q) - delta_oracle(&line, p, q)).abs());
            cases[case_of(&line, p, q) - 1] += 1;
        }
        let mut v = [x, y, z];
        v.sort_by(f64::total_cmp);
        let (defect, bound) = line.additivity_defect(v[0], v[1], v[2]).unwrap();
        add = add.max((defect - bound).max(-defect));
    }
    check(sym == 0.0, format!("asymmetry {sym}"))?;
    check(tri <= 1e-12, format!("triangle excess {tri}"))?;
    check(
        oracle <= 1e-12,
        format!("closed form differs from definition by {oracle}"),
    )?;
    check(add <= 1e-12, format!("additivity defect outside [0, bound] by {add}"))?;
    check(
        cases.iter().all(|&c| c > 0),
        format!("definition cases not all hit: {cases:?}"),
    )?;
    within(start.elapsed(), 10)?;
    Ok(format!(
        "1e5 triples, triangle excess {tri:.2e}, oracle error {oracle:.2e}, cases {cases:?}"
    ))
}

fn tangents() -> Outcome {
    let start = Instant::now();
    let line = LineMetricSpace::with_default_params(64).map_err(|e| e.to_string())?;
    let radius = 1.0;
    let count = 33;
    let cases: Vec<TangentCase> = (4..=32)
        .map(|n| TangentCase {
            n,
            center: line.midpoint(n),
            lambda: 1.0 / line.s(n),
        })
        .collect();
    let rows = tangent_convergence_line(&line, &cases, radius, count).map_err(|e| e.to_string())?;
    for row in &rows {
        let bound = 2.0 * line.profile(row.n).additivity_gap() * radius + 2.0 * row.mesh;
        check(
            row.measured_eps <= bound,
            format!("n = {}: eps {} > {bound}", row.n, row.measured_eps),
        )?;
    }
    let last = rows.last().unwrap();
    check(last.measured_eps < 0.01, format!("eps_32 = {}", last.measured_eps))?;

    // brute-force GH on small subsamples against the straightening map
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst_gap = 0.0f64;
    let mut checked = 0;
    for case in &cases {
        let sample = sample_line_ball(&line, case.center, radius / case.lambda, count).map_err(|e| e.to_string())?;
        let domain = sample.space.clone().rescaled(case.lambda);
        let image = sample.euclidean_image().rescaled(case.lambda);
        let base = domain.base();
        let mut subsets = vec![
            spread_indices(count, base, 8),
            (base - 3..=base + 4).collect::<Vec<_>>(),
            (0..7).chain([base]).collect(),
        ];
        let mut random: Vec<usize> = (0..count).filter(|&i| i != base).collect();
        for i in 0..7 {
            let j = rng.gen_range(i..random.len());
            random.swap(i, j);
        }
        random.truncate(7);
        random.push(base);
        random.sort_unstable();
        subsets.push(random);
        for idx in subsets {
            let a = domain.subspace(&idx).map_err(|e| e.to_string())?;
            let b = image.subspace(&idx).map_err(|e| e.to_string())?;
            let id: Vec<usize> = (0..a.len()).collect();
            let certified = check_rough_isometry(&a, &b, &id).map_err(|e| e.to_string())?.eps;
            let exact = gh_bruteforce(&a, &b).map_err(|e| e.to_string())?;
            check(
                exact <= certified + 1e-9,
                format!("n = {}: brute force {exact} > map {certified}", case.n),
            )?;
            worst_gap = worst_gap.max(certified - exact);
            checked += 1;
        }
    }
    check(
        worst_gap <= 1e-9,
        format!("map bound exceeds brute force by {worst_gap}"),
    )?;
    within(start.elapsed(), 60)?;
    Ok(format!(
        "n = 4..32, eps_32 = {:.2e}, {checked} brute-force subsamples agree within {worst_gap:.1e}",
        last.measured_eps
    ))
}

fn covering() -> Outcome {
    let start = Instant::now();
    let line = LineMetricSpace::with_default_params(64).map_err(|e| e.to_string())?;
    let mut cells = 0;
    for n in 2..=32 {
        let s = line.s(n);
        for k in 0..40 {
            let r = s * (1e-12f64.ln() * k as f64 / 39.0).exp();
            for eps in [0.5, 0.25, 0.125] {
                let report = covering_number_interval(&line, n, r, eps).map_err(|e| e.to_string())?;
                check(
                    report.holds(),
                    format!(
                        "n = {n}, r = {r}, eps = {eps}: count {} > {}",
                        report.count, report.bound
                    ),
                )?;
                cells += 1;
            }
        }
    }
    let eps_grid: Vec<f64> = (1..=36).map(|k| 0.5f64.powi(k)).collect();
    let mut sweep = AssouadSweep {
        beta_grid: vec![1.05, 1.2, 2.0],
        r_min: 1e-9,
        r_max: 4.0,
        r_steps: 20,
        eps_grid,
        starts: AssouadSweep::default_starts(&line),
    };
    let rows = assouad_dimension_estimate(&line, &sweep).map_err(|e| e.to_string())?;
    let mut summary = Vec::new();
    for row in &rows {
        check(
            row.max_violation <= 1.0,
            format!("beta = {}: violation {}", row.beta, row.max_violation),
        )?;
        summary.push(format!("{}:{:.3}", row.beta, row.max_violation));
    }
    sweep.beta_grid = vec![0.9];
    sweep.starts = vec![1.5, 2.0, 3.0];
    let below = assouad_dimension_estimate(&line, &sweep).map_err(|e| e.to_string())?;
    check(
        below[0].max_violation > 1.0,
        format!("beta = 0.9 not violated: {}", below[0].max_violation),
    )?;
    within(start.elapsed(), 60)?;
    Ok(format!(
        "{cells} interval cells hold; Assouad violations {} and 0.9:{:.3}",
        summary.join(" "),
        below[0].max_violation
    ))
}

fn modulus_divergence() -> Outcome {
    let start = Instant::now();
    let line = LineMetricSpace::with_default_params(64).map_err(|e| e.to_string())?;
    let space = ProductSpace::new(line, 2).map_err(|e| e.to_string())?;
    let n_list: Vec<usize> = (2..=8).collect();
    let rows = modulus_divergence_experiment(&space, &n_list, 64, true, SolverOptions::default())
        .map_err(|e| e.to_string())?;
    check_divergence(&rows).map_err(|e| e.to_string())?;
    let mut previous = f64::NEG_INFINITY;
    for row in rows.iter().filter(|r| r.n.is_some()) {
        let n = row.n.unwrap();
        check(
            (row.delta_ratio - 1.0).abs() <= 1e-12,
            format!("n = {n}: ratio {}", row.delta_ratio),
        )?;
        let expected = n as f64 + 2.0;
        check(
            (row.analytic_lower - expected).abs() <= 1e-9,
            format!("n = {n}: analytic {} vs {expected}", row.analytic_lower),
        )?;
        let ratio = row.solved_value / row.analytic_lower;
        check(
            (0.9..=1.1).contains(&ratio),
            format!("n = {n}: solved/analytic {ratio}"),
        )?;
        check(row.solved_value > previous, format!("n = {n}: not increasing"))?;
        previous = row.solved_value;
    }
    within(start.elapsed(), 300)?;
    let solved: Vec<String> = rows
        .iter()
        .filter(|r| r.n.is_some())
        .map(|r| format!("{:.4}", r.solved_value))
        .collect();
    Ok(format!("n = 2..8 solved [{}]", solved.join(", ")))
}

fn unit_square() -> Outcome {
    let start = Instant::now();
    let line = LineMetricSpace::with_default_params(16).map_err(|e| e.to_string())?;
    let space = ProductSpace::new(line, 2).map_err(|e| e.to_string())?;
    let bounds = BoxContinuum::new((2.0, 3.0), vec![(0.0, 1.0)]).map_err(|e| e.to_string())?;
    let grid = GridDiscretization::new(&space, bounds, &[64, 64]).map_err(|e| e.to_string())?;
    let mut family = Vec::new();
    for i in 0..64 {
        let v = (i as f64 + 0.5) / 64.0;
        family.push(segment(2.0, v, 3.0, v));
        let w = (v + 0.37).fract();
        family.push(segment(2.0, v, 3.0, w));
    }
    let sol = solve_modulus(&grid, &family, 2.0, SolverOptions::default()).map_err(|e| e.to_string())?;
    check(
        (sol.value - 1.0).abs() <= 0.02,
        format!("unit square modulus {}", sol.value),
    )?;

    let curve = segment(2.1, 0.2, 2.9, 0.7);
    let row = grid.incidence(&curve).map_err(|e| e.to_string())?;
    let closed = single_curve_modulus(&row, grid.weights(), 2.0);
    let solved = solve_modulus(&grid, &[curve], 2.0, SolverOptions::default()).map_err(|e| e.to_string())?;
    check(
        (solved.value - closed).abs() <= 1e-9 * closed,
        format!("single curve {} vs closed form {closed}", solved.value),
    )?;
    within(start.elapsed(), 60)?;
    Ok(format!(
        "unit square {:.6}, single curve error {:.1e}",
        sol.value,
        (solved.value - closed).abs() / closed
    ))
}

fn segment(t0: f64, v0: f64, t1: f64, v1: f64) -> Curve {
    Curve::segment(ProductPoint::new(t0, vec![v0]), ProductPoint::new(t1, vec![v1])).unwrap()
}

fn ball_point(rng: &mut ChaCha8Rng, line: &LineMetricSpace) -> Vec<f64> {
    if rng.gen_bool(0.5) {
        loop {
            let p = vec![rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)];
            if p[0] * p[0] + p[1] * p[1] < 1.0 {
                return p;
            }
        }
    }
    let n = rng.gen_range(1..=line.n_max());
    let (a, b) = line.interval(n);
    let q = [rng.gen_range(a..=b), rng.gen_range(-0.5..0.5) * line.s(n)];
    let norm = q[0].hypot(q[1]);
    vec![q[0] / (1.0 + norm), q[1] / (1.0 + norm)]
}

fn sphere_metric() -> Outcome {
    let start = Instant::now();
    let line = LineMetricSpace::with_default_params(64).map_err(|e| e.to_string())?;
    let space = ProductSpace::new(line.clone(), 2).map_err(|e| e.to_string())?;
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let (mut tri, mut lo, mut hi) = (f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for _ in 0..100_000 {
        let x = ball_point(&mut rng, &line);
        let z = ball_point(&mut rng, &line);
        let y = if rng.gen_bool(0.5) {
            let u: f64 = rng.gen_range(0.0..=1.0);
            vec![x[0] + u * (z[0] - x[0]), x[1] + u * (z[1] - x[1])]
        } else {
            ball_point(&mut rng, &line)
        };
        let d = |a: &[f64], b: &[f64]| space.compactified_metric(a, b).unwrap();
        let (xy, yz, xz) = (d(&x, &y), d(&y, &z), d(&x, &z));
        tri = tri.max(xz - xy - yz);
        for v in [xy, yz, xz] {
            lo = lo.min(v);
            hi = hi.max(v);
        }
    }
    check(tri <= 1e-12, format!("triangle excess {tri}"))?;
    check(lo >= 0.0 && hi < 1.0, format!("values in [{lo}, {hi}]"))?;
    within(start.elapsed(), 30)?;
    Ok(format!(
        "1e5 triples, triangle excess {tri:.2e}, values in [{lo:.2e}, {hi:.6}]"
    ))
}

fn reproducibility() -> Outcome {
    let start = Instant::now();
    let kinds = [
        ExperimentKind::VerifyLemmas,
        ExperimentKind::Tangents,
        ExperimentKind::Covering,
        ExperimentKind::Modulus,
        ExperimentKind::SphereMetric,
    ];
    for kind in kinds {
        let mut config = ExperimentConfig::new(kind);
        config.seed = 11;
        config.params = ParamsSpec::Default { n_max: 24 };
        config.verify_lemmas.samples = 2_000;
        config.sphere_metric.samples = 2_000;
        let mut outputs = Vec::new();
        for _ in 0..2 {
            let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
            let summary = run(&config, dir.path()).map_err(|e| e.to_string())?;
            check(
                summary.exit_code == 0,
                format!("{} exited {}", kind.name(), summary.exit_code),
            )?;
            let csv = fs::read(&summary.table_path).map_err(|e| e.to_string())?;
            let manifest = fs::read(&summary.manifest_path).map_err(|e| e.to_string())?;
            outputs.push((csv, manifest));
        }
        check(
            outputs[0].0 == outputs[1].0,
            format!("{} CSV differs between runs", kind.name()),
        )?;
        check(
            outputs[0].1 == outputs[1].1,
            format!("{} manifest differs between runs", kind.name()),
        )?;
    }
    within(start.elapsed(), 120)?;
    Ok("all five experiments byte-identical across two runs".into())
}

fn main() -> ExitCode {
    let criteria: [Criterion; 8] = [
        ("profile inequalities", profile_inequalities),
        ("line metric", line_metric),
        ("tangent convergence", tangents),
        ("covering and Assouad bounds", covering),
        ("modulus divergence", modulus_divergence),
        ("solver calibration", unit_square),
        ("compactified metric", sphere_metric),
        ("reproducibility", reproducibility),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        match f() {
            Ok(detail) => println!("criterion {}: PASS {name}: {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("criterion {}: FAIL {name}: {detail}", i + 1);
            }
        }
    }
    println!(
        "acceptance: {} of {} criteria passed",
        criteria.len() - failed,
        criteria.len()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
