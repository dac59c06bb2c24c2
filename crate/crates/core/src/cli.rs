//! Experiment configuration, the runner behind the `snowline` binary, and
//! its CSV and manifest output.

use std::fmt::Display;
use std::fs;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::dimension::{assouad_dimension_estimate, covering_number_interval, knee_inequality_margin, AssouadSweep};
use crate::error::Error;
use crate::line_metric::{ConstructionParams, LineMetricSpace};
use crate::modulus::{check_divergence, modulus_divergence_experiment, SolverOptions};
use crate::product_space::ProductSpace;
use crate::profile::SnowflakeProfile;
use crate::tangents::{tangent_convergence_line, tangent_convergence_product, TangentCase, TangentRow};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONTRACT: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NOT_CONVERGED: i32 = 3;

/// Closed-form inverse against the forward map; `x^(1/alpha)` loses
/// digits for small `alpha`.
const INVERSE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    VerifyLemmas,
    Tangents,
    Covering,
    Modulus,
    SphereMetric,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            Self::VerifyLemmas => "verify-lemmas",
            Self::Tangents => "tangents",
            Self::Covering => "covering",
            Self::Modulus => "modulus",
            Self::SphereMetric => "sphere-metric",
        }
    }
}

/// Either the default recipe at some depth or explicit sequences.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged, deny_unknown_fields)]
pub enum ParamsSpec {
    Default { n_max: usize },
    Explicit { alpha: Vec<f64>, c: Vec<f64>, s: Vec<f64> },
}

impl Default for ParamsSpec {
    fn default() -> Self {
        Self::Default { n_max: 16 }
    }
}

impl ParamsSpec {
    pub fn build(&self) -> crate::Result<ConstructionParams> {
        match self {
            Self::Default { n_max } => ConstructionParams::default_recipe(*n_max),
            Self::Explicit { alpha, c, s } => ConstructionParams::from_sequences(alpha, c, s),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LemmaKnobs {
    pub samples: usize,
    pub tolerance: f64,
}

impl Default for LemmaKnobs {
    fn default() -> Self {
        Self {
            samples: 10_000,
            tolerance: 1e-12,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TangentKnobs {
    pub n_list: Vec<usize>,
    pub radius: f64,
    pub count: usize,
    /// Use the product space of the configured dimension instead of the line.
    pub product: bool,
    pub per_axis: usize,
}

impl Default for TangentKnobs {
    fn default() -> Self {
        Self {
            n_list: (4..=16).collect(),
            radius: 1.0,
            count: 33,
            product: false,
            per_axis: 9,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CoveringKnobs {
    pub n_list: Vec<usize>,
    pub eps: Vec<f64>,
    /// Set diameters per interval: `r_steps` geometric values in `(0, s_n]`.
    pub r_steps: usize,
    pub r_min_ratio: f64,
    pub beta_grid: Vec<f64>,
    pub assouad_r_min: f64,
    pub assouad_r_max: f64,
    pub assouad_r_steps: usize,
    /// Assouad sweep uses `eps = 2^-k` for `k = 1..=assouad_eps_log2`.
    pub assouad_eps_log2: u32,
}

impl Default for CoveringKnobs {
    fn default() -> Self {
        Self {
            n_list: (2..=16).collect(),
            eps: vec![0.5, 0.25, 0.125],
            r_steps: 12,
            r_min_ratio: 1e-6,
            beta_grid: vec![0.9, 1.05, 1.2, 2.0],
            assouad_r_min: 1e-9,
            assouad_r_max: 4.0,
            assouad_r_steps: 20,
            assouad_eps_log2: 36,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModulusKnobs {
    pub n_list: Vec<usize>,
    pub resolution: usize,
    pub tol: f64,
    pub max_iters: usize,
    pub flat_control: bool,
}

impl Default for ModulusKnobs {
    fn default() -> Self {
        Self {
            n_list: (2..=8).collect(),
            resolution: 64,
            tol: 1e-9,
            max_iters: 200_000,
            flat_control: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SphereKnobs {
    pub samples: usize,
    pub tolerance: f64,
}

impl Default for SphereKnobs {
    fn default() -> Self {
        Self {
            samples: 100_000,
            tolerance: 1e-12,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    #[serde(default)]
    pub params: ParamsSpec,
    #[serde(default = "default_dimension")]
    pub dimension: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub verify_lemmas: LemmaKnobs,
    #[serde(default)]
    pub tangents: TangentKnobs,
    #[serde(default)]
    pub covering: CoveringKnobs,
    #[serde(default)]
    pub modulus: ModulusKnobs,
    #[serde(default)]
    pub sphere_metric: SphereKnobs,
}

fn default_dimension() -> usize {
    2
}

/// Config file contents where `kind` may be left to the command line.
#[derive(Debug, Deserialize)]
struct ConfigFile {
    kind: Option<ExperimentKind>,
    #[serde(flatten)]
    rest: toml::Table,
}

impl ExperimentConfig {
    pub fn new(kind: ExperimentKind) -> Self {
        Self {
            kind,
            params: ParamsSpec::default(),
            dimension: default_dimension(),
            seed: 0,
            out: None,
            verify_lemmas: LemmaKnobs::default(),
            tangents: TangentKnobs::default(),
            covering: CoveringKnobs::default(),
            modulus: ModulusKnobs::default(),
            sphere_metric: SphereKnobs::default(),
        }
    }

    /// Parses a TOML config. `kind` falls back to `default_kind` and must
    /// agree with it when both are given.
    pub fn from_toml(text: &str, default_kind: Option<ExperimentKind>) -> Result<Self, RunError> {
        let file: ConfigFile = toml::from_str(text).map_err(|e| RunError::Config(e.to_string()))?;
        let kind = match (file.kind, default_kind) {
            (Some(a), Some(b)) if a != b => {
                return Err(RunError::Config(format!(
                    "config is for `{}` but `{}` was requested",
                    a.name(),
                    b.name()
                )))
            }
            (Some(k), _) | (None, Some(k)) => k,
            (None, None) => return Err(RunError::Config("experiment kind missing".into())),
        };
        let mut table = file.rest;
        table.insert("kind".into(), toml::Value::String(kind.name().into()));
        let config: Self = toml::Value::Table(table)
            .try_into()
            .map_err(|e: toml::de::Error| RunError::Config(e.to_string()))?;
        Ok(config)
    }

    pub fn load(path: &Path, default_kind: Option<ExperimentKind>) -> Result<Self, RunError> {
        let text =
            fs::read_to_string(path).map_err(|e| RunError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text, default_kind)
    }

    /// Checks the knobs of the selected kind.
    pub fn validate(&self, n_max: usize) -> Result<(), RunError> {
        let bad = |msg: String| Err(RunError::Config(msg));
        let in_range = |list: &[usize], what: &str| -> Result<(), RunError> {
            if list.is_empty() {
                return bad(format!("{what}.n_list is empty"));
            }
            match list.iter().find(|&&n| n == 0 || n > n_max) {
                Some(n) => bad(format!("{what}.n_list entry {n} outside 1..={n_max}")),
                None => Ok(()),
            }
        };
        if self.dimension < 2 {
            return bad(format!("dimension must be at least 2, got {}", self.dimension));
        }
        match self.kind {
            ExperimentKind::VerifyLemmas => {
                let k = &self.verify_lemmas;
                if k.samples == 0 || !(k.tolerance >= 0.0) {
                    return bad("verify_lemmas needs samples > 0 and tolerance >= 0".into());
                }
            }
            ExperimentKind::Tangents => {
                let k = &self.tangents;
                in_range(&k.n_list, "tangents")?;
                if !(k.radius > 0.0) || k.count < 2 || k.per_axis < 2 {
                    return bad("tangents needs radius > 0, count >= 2 and per_axis >= 2".into());
                }
            }
            ExperimentKind::Covering => {
                let k = &self.covering;
                in_range(&k.n_list, "covering")?;
                if k.eps.is_empty() || k.eps.iter().any(|&e| !(e > 0.0 && e <= 0.5)) {
                    return bad("covering.eps must be a nonempty list in (0, 1/2]".into());
                }
                if k.r_steps == 0 || !(k.r_min_ratio > 0.0 && k.r_min_ratio <= 1.0) {
                    return bad("covering needs r_steps > 0 and r_min_ratio in (0, 1]".into());
                }
                if k.beta_grid.is_empty() || k.beta_grid.iter().any(|&b| !(b > 0.0)) {
                    return bad("covering.beta_grid must be a nonempty list of positive values".into());
                }
                if !(k.assouad_r_min > 0.0 && k.assouad_r_min <= k.assouad_r_max)
                    || k.assouad_r_steps == 0
                    || k.assouad_eps_log2 == 0
                {
                    return bad("covering Assouad sweep ranges are invalid".into());
                }
            }
            ExperimentKind::Modulus => {
                let k = &self.modulus;
                in_range(&k.n_list, "modulus")?;
                if k.resolution == 0 || !(k.tol > 0.0) || k.max_iters == 0 {
                    return bad("modulus needs resolution, tol and max_iters positive".into());
                }
            }
            ExperimentKind::SphereMetric => {
                let k = &self.sphere_metric;
                if k.samples == 0 || !(k.tolerance >= 0.0) {
                    return bad("sphere_metric needs samples > 0 and tolerance >= 0".into());
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Library(Error),
}

impl From<Error> for RunError {
    fn from(e: Error) -> Self {
        Self::Library(e)
    }
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Config(_) | Self::Io(_) => EXIT_CONFIG,
            Self::Library(Error::NotConverged { .. }) => EXIT_NOT_CONVERGED,
            Self::Library(Error::InvalidProfile(_) | Error::Invariant { .. }) => EXIT_CONFIG,
            Self::Library(_) => EXIT_CONTRACT,
        }
    }
}

/// A CSV table.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    fn new(header: &[&'static str]) -> Self {
        Self {
            header: header.to_vec(),
            rows: Vec::new(),
        }
    }

    fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<Vec<&str>> {
        let i = self.header.iter().position(|h| *h == name)?;
        Some(self.rows.iter().map(|r| r[i].as_str()).collect())
    }

    pub fn to_csv(&self) -> String {
        let mut out = self.header.join(",");
        out.push('\n');
        for row in &self.rows {
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }
}

fn cell(x: impl Display) -> String {
    x.to_string()
}

/// Shortest round-trip form, in exponent notation when very small or large.
fn num(x: f64) -> String {
    let a = x.abs();
    if a != 0.0 && a.is_finite() && !(1e-4..1e15).contains(&a) {
        format!("{x:e}")
    } else {
        x.to_string()
    }
}

fn opt_cell(x: Option<usize>) -> String {
    x.map_or_else(String::new, |v| v.to_string())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Contract {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

impl Contract {
    fn new(name: impl Into<String>, pass: bool, detail: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            pass,
            detail: detail.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub table: Table,
    pub contracts: Vec<Contract>,
    pub n_max: usize,
    pub truncation_tail_bound: f64,
}

impl Report {
    pub fn passed(&self) -> bool {
        self.contracts.iter().all(|c| c.pass)
    }
}

/// Runs the configured experiment in memory.
pub fn execute(config: &ExperimentConfig) -> Result<Report, RunError> {
    let params = config.params.build().map_err(|e| RunError::Config(e.to_string()))?;
    let line = LineMetricSpace::new(params).map_err(|e| RunError::Config(e.to_string()))?;
    config.validate(line.n_max())?;
    let (table, contracts) = match config.kind {
        ExperimentKind::VerifyLemmas => verify_lemmas(&line, config),
        ExperimentKind::Tangents => tangents(&line, config)?,
        ExperimentKind::Covering => covering(&line, config)?,
        ExperimentKind::Modulus => modulus(&line, config)?,
        ExperimentKind::SphereMetric => sphere_metric(&line, config)?,
    };
    Ok(Report {
        table,
        contracts,
        n_max: line.n_max(),
        truncation_tail_bound: line.truncation_tail_bound(),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub exit_code: i32,
    pub table_path: PathBuf,
    pub manifest_path: PathBuf,
    pub failed: Vec<Contract>,
}

#[derive(Serialize)]
struct Manifest<'a> {
    kind: &'static str,
    version: &'static str,
    seed: u64,
    n_max: usize,
    truncation_tail_bound: f64,
    table: String,
    sha256: String,
    passed: bool,
    contracts: &'a [Contract],
    config: &'a ExperimentConfig,
}

/// Runs the experiment and writes `<kind>.csv` and `manifest.json` into
/// `out_dir`.
pub fn run(config: &ExperimentConfig, out_dir: &Path) -> Result<RunSummary, RunError> {
    let report = execute(config)?;
    fs::create_dir_all(out_dir)?;
    let csv = report.table.to_csv();
    let table_name = format!("{}.csv", config.kind.name());
    let table_path = out_dir.join(&table_name);
    fs::write(&table_path, &csv)?;

    let digest = Sha256::digest(csv.as_bytes());
    let manifest = Manifest {
        kind: config.kind.name(),
        version: env!("CARGO_PKG_VERSION"),
        seed: config.seed,
        n_max: report.n_max,
        truncation_tail_bound: report.truncation_tail_bound,
        table: table_name,
        sha256: digest.iter().map(|b| format!("{b:02x}")).collect(),
        passed: report.passed(),
        contracts: &report.contracts,
        config,
    };
    let manifest_path = out_dir.join("manifest.json");
    let json = serde_json::to_string_pretty(&manifest).map_err(|e| RunError::Config(e.to_string()))?;
    fs::write(&manifest_path, json + "\n")?;

    let failed: Vec<Contract> = report.contracts.into_iter().filter(|c| !c.pass).collect();
    Ok(RunSummary {
        exit_code: if failed.is_empty() { EXIT_OK } else { EXIT_CONTRACT },
        table_path,
        manifest_path,
        failed,
    })
}

struct Worst {
    name: &'static str,
    tolerance: f64,
    samples: usize,
    worst: f64,
}

impl Worst {
    fn new(name: &'static str, tolerance: f64) -> Self {
        Self {
            name,
            tolerance,
            samples: 0,
            worst: f64::NEG_INFINITY,
        }
    }

    fn record(&mut self, excess: f64) {
        self.samples += 1;
        if excess > self.worst || excess.is_nan() {
            self.worst = excess;
        }
    }
}

fn lemma_table(checks: Vec<Worst>, n_max: usize, seed: u64) -> (Table, Vec<Contract>) {
    let mut table = Table::new(&["check", "samples", "worst_excess", "tolerance", "pass", "n_max", "seed"]);
    let mut contracts = Vec::new();
    for c in checks {
        let pass = c.worst <= c.tolerance;
        table.push(vec![
            cell(c.name),
            cell(c.samples),
            num(c.worst),
            num(c.tolerance),
            cell(pass),
            cell(n_max),
            cell(seed),
        ]);
        contracts.push(Contract::new(c.name, pass, format!("worst excess {}", num(c.worst))));
    }
    (table, contracts)
}

/// A point of `(R, delta)` that lands in a random interval half of the time.
fn sample_line_point(rng: &mut ChaCha8Rng, line: &LineMetricSpace, span: f64) -> f64 {
    if rng.gen_bool(0.5) {
        let n = rng.gen_range(1..=line.n_max());
        let (a, b) = line.interval(n);
        rng.gen_range(a..=b)
    } else {
        rng.gen_range(-span..=span)
    }
}

fn random_profile(rng: &mut ChaCha8Rng) -> SnowflakeProfile {
    let alpha = rng.gen_range(0.01..0.99);
    let c = (-rng.gen_range(0.0..20.0_f64)).exp();
    SnowflakeProfile::new(alpha, c).expect("sampled inside the valid range")
}

fn verify_lemmas(line: &LineMetricSpace, config: &ExperimentConfig) -> (Table, Vec<Contract>) {
    let knobs = &config.verify_lemmas;
    let tol = knobs.tolerance;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut submult = Worst::new("profile_submultiplicative", tol);
    let mut concave = Worst::new("profile_concavity_defect", tol);
    let mut decreasing = Worst::new("profile_slope_decreasing_in_c", tol);
    let mut inverse = Worst::new("profile_inverse_round_trip", INVERSE_TOL);
    let mut symmetry = Worst::new("line_symmetry", tol);
    let mut triangle = Worst::new("line_triangle", tol);
    let mut additivity = Worst::new("line_additivity_defect", tol);
    let mut monotone = Worst::new("line_radial_monotone", tol);
    let mut knee = Worst::new("knee_inequality", tol);

    for _ in 0..knobs.samples {
        let prof = random_profile(&mut rng);
        let (a, b) = (rng.gen_range(0.0..=1.0), rng.gen_range(0.0..=1.0));
        let d = prof.submultiplicativity_defect(a, b).expect("unit inputs");
        submult.record(-d);
        let x: f64 = rng.gen_range(0.0..=1.0);
        let t = rng.gen_range(0.0..=x);
        let (lhs, rhs) = prof.concavity_defect_bound(t, x).expect("ordered inputs");
        concave.record((lhs - rhs).max(-lhs));
        let c2 = rng.gen_range(prof.c()..=1.0);
        let other = SnowflakeProfile::new(prof.alpha(), c2).expect("c2 in (0, 1]");
        decreasing.record((other.slope() - prof.slope()) / prof.slope());
        let y = prof.phi(x).expect("unit input");
        inverse.record((prof.phi_inverse(y).expect("unit input") - x).abs());

        let mut pts = [
            sample_line_point(&mut rng, line, 2.0),
            sample_line_point(&mut rng, line, 2.0),
            sample_line_point(&mut rng, line, 2.0),
        ];
        let [p, q, r] = pts;
        symmetry.record((line.delta(p, q) - line.delta(q, p)).abs());
        triangle.record(line.delta(p, r) - line.delta(p, q) - line.delta(q, r));
        pts.sort_by(f64::total_cmp);
        let (defect, bound) = line.additivity_defect(pts[0], pts[1], pts[2]).expect("sorted");
        additivity.record(defect - bound);
        monotone.record(line_radial_excess(line, p, q, r));
    }
    for n in 1..=line.n_max() {
        knee.record(-knee_inequality_margin(line.profile(n)));
    }
    lemma_table(
        vec![
            submult, concave, decreasing, inverse, symmetry, triangle, additivity, monotone, knee,
        ],
        line.n_max(),
        config.seed,
    )
}

/// How much `delta(p, .)` fails to grow from `near` to `far` when both lie
/// on the same side of `p` with `near` closer in position.
fn line_radial_excess(line: &LineMetricSpace, p: f64, a: f64, b: f64) -> f64 {
    let same_side = (a - p) * (b - p) >= 0.0;
    if !same_side {
        return f64::NEG_INFINITY;
    }
    let (near, far) = if (a - p).abs() <= (b - p).abs() { (a, b) } else { (b, a) };
    line.delta(p, near) - line.delta(p, far)
}

fn tangent_cases(line: &LineMetricSpace, knobs: &TangentKnobs) -> Vec<TangentCase> {
    knobs
        .n_list
        .iter()
        .map(|&n| TangentCase {
            n,
            center: line.midpoint(n),
            lambda: 1.0 / line.s(n),
        })
        .collect()
}

fn tangents(line: &LineMetricSpace, config: &ExperimentConfig) -> Result<(Table, Vec<Contract>), RunError> {
    let knobs = &config.tangents;
    let cases = tangent_cases(line, knobs);
    let rows: Vec<TangentRow> = if knobs.product {
        let space = ProductSpace::new(line.clone(), config.dimension)?;
        tangent_convergence_product(&space, &cases, knobs.radius, knobs.count, knobs.per_axis)?
    } else {
        tangent_convergence_line(line, &cases, knobs.radius, knobs.count)?
    };
    let mut table = Table::new(&[
        "n",
        "center",
        "lambda",
        "radius",
        "first_interval",
        "predicted_eps",
        "bound",
        "measured_eps",
        "mesh",
        "points",
        "pass",
        "d",
        "n_max",
    ]);
    let mut contracts = Vec::new();
    let d = if knobs.product { config.dimension } else { 1 };
    for row in &rows {
        let pass = row.measured_eps <= row.bound + 2.0 * row.mesh + 1e-12;
        table.push(vec![
            cell(row.n),
            num(row.center),
            num(row.lambda),
            num(knobs.radius),
            opt_cell(row.first_interval),
            num(row.predicted_eps),
            num(row.bound),
            num(row.measured_eps),
            num(row.mesh),
            cell(row.points),
            cell(pass),
            cell(d),
            cell(line.n_max()),
        ]);
        contracts.push(Contract::new(
            format!("tangent_bound_n{}", row.n),
            pass,
            format!("eps {} vs bound {} + 2 mesh {}", row.measured_eps, row.bound, row.mesh),
        ));
    }
    Ok((table, contracts))
}

fn geometric(lo: f64, hi: f64, steps: usize) -> Vec<f64> {
    if steps == 1 {
        return vec![hi];
    }
    (0..steps)
        .map(|i| lo * ((hi / lo).ln() * i as f64 / (steps - 1) as f64).exp())
        .collect()
}

fn covering(line: &LineMetricSpace, config: &ExperimentConfig) -> Result<(Table, Vec<Contract>), RunError> {
    let knobs = &config.covering;
    let mut table = Table::new(&[
        "section",
        "n",
        "beta",
        "start",
        "r",
        "eps",
        "count",
        "bound",
        "violation",
        "n_max",
    ]);
    let mut contracts = Vec::new();

    let mut worst_ratio = 0.0_f64;
    for &n in &knobs.n_list {
        let s = line.s(n);
        for r in geometric(knobs.r_min_ratio * s, s, knobs.r_steps) {
            for &eps in &knobs.eps {
                let rep = covering_number_interval(line, n, r.min(s), eps)?;
                let ratio = rep.count as f64 / rep.bound;
                worst_ratio = worst_ratio.max(ratio);
                table.push(vec![
                    cell("interval"),
                    cell(n),
                    String::new(),
                    num(line.interval(n).0),
                    num(rep.r),
                    num(eps),
                    cell(rep.count),
                    num(rep.bound),
                    num(ratio),
                    cell(line.n_max()),
                ]);
            }
        }
    }
    contracts.push(Contract::new(
        "interval_covering_function",
        worst_ratio <= 1.0,
        format!("largest count / bound {worst_ratio}"),
    ));

    let eps_grid: Vec<f64> = (1..=knobs.assouad_eps_log2).map(|k| (-(k as f64)).exp2()).collect();
    let (above, below): (Vec<f64>, Vec<f64>) = knobs.beta_grid.iter().partition(|&&b| b > 1.0);
    let mut emit = |rows: Vec<crate::dimension::AssouadRow>, section: &str| {
        for row in &rows {
            table.push(vec![
                cell(section),
                String::new(),
                num(row.beta),
                num(row.worst_start),
                num(row.worst_r),
                num(row.worst_eps),
                cell(row.worst_count),
                num(4.0 * row.constant * row.worst_eps.powf(-row.beta)),
                num(row.max_violation),
                cell(line.n_max()),
            ]);
        }
        rows
    };
    if !above.is_empty() {
        let sweep = AssouadSweep {
            beta_grid: above,
            r_min: knobs.assouad_r_min,
            r_max: knobs.assouad_r_max,
            r_steps: knobs.assouad_r_steps,
            eps_grid: eps_grid.clone(),
            starts: AssouadSweep::default_starts(line),
        };
        for row in emit(assouad_dimension_estimate(line, &sweep)?, "assouad") {
            contracts.push(Contract::new(
                format!("assouad_beta_{}", row.beta),
                row.max_violation <= 1.0,
                format!("max violation {}", row.max_violation),
            ));
        }
    }
    if !below.is_empty() {
        // sets starting at 1.5 or later never meet an interval
        let sweep = AssouadSweep {
            beta_grid: below,
            r_min: knobs.assouad_r_min,
            r_max: knobs.assouad_r_max,
            r_steps: knobs.assouad_r_steps,
            eps_grid,
            starts: vec![1.5, 2.0, 3.0],
        };
        for row in emit(assouad_dimension_estimate(line, &sweep)?, "assouad_flat") {
            contracts.push(Contract::new(
                format!("assouad_flat_beta_{}_detected", row.beta),
                row.beta >= 1.0 || row.max_violation > 1.0,
                format!("max violation {}", row.max_violation),
            ));
        }
    }
    Ok((table, contracts))
}

fn modulus(line: &LineMetricSpace, config: &ExperimentConfig) -> Result<(Table, Vec<Contract>), RunError> {
    let knobs = &config.modulus;
    let space = ProductSpace::new(line.clone(), config.dimension)?;
    let options = SolverOptions {
        max_iters: knobs.max_iters,
        tol: knobs.tol,
    };
    let rows = modulus_divergence_experiment(&space, &knobs.n_list, knobs.resolution, knobs.flat_control, options)?;
    let mut table = Table::new(&[
        "n",
        "delta_ratio",
        "analytic_lower",
        "solved_value",
        "duality_gap",
        "resolution",
        "d",
        "n_max",
    ]);
    for row in &rows {
        table.push(vec![
            row.n.map_or_else(|| "flat".to_string(), |n| n.to_string()),
            num(row.delta_ratio),
            num(row.analytic_lower),
            num(row.solved_value),
            num(row.duality_gap),
            cell(row.resolution),
            cell(config.dimension),
            cell(line.n_max()),
        ]);
    }
    let contract = match check_divergence(&rows) {
        Ok(()) => Contract::new(
            "modulus_divergence",
            true,
            "solved >= 0.9 analytic, analytic increasing",
        ),
        Err(e) => Contract::new("modulus_divergence", false, e.to_string()),
    };
    Ok((table, vec![contract]))
}

fn sphere_metric(line: &LineMetricSpace, config: &ExperimentConfig) -> Result<(Table, Vec<Contract>), RunError> {
    let knobs = &config.sphere_metric;
    let d = config.dimension;
    let space = ProductSpace::new(line.clone(), d)?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let tol = knobs.tolerance;
    let mut triangle = Worst::new("sphere_triangle", tol);
    let mut symmetry = Worst::new("sphere_symmetry", tol);
    let mut bounded = Worst::new("sphere_bounded", 0.0);
    for _ in 0..knobs.samples {
        let x = sample_ball_point(&mut rng, line, d);
        let z = sample_ball_point(&mut rng, line, d);
        // chord points give nearly tight triangles
        let y = if rng.gen_bool(0.5) {
            let u = rng.gen_range(0.0..=1.0);
            x.iter().zip(&z).map(|(a, b)| a + u * (b - a)).collect()
        } else {
            sample_ball_point(&mut rng, line, d)
        };
        let xy = space.compactified_metric(&x, &y)?;
        let yz = space.compactified_metric(&y, &z)?;
        let xz = space.compactified_metric(&x, &z)?;
        triangle.record(xz - xy - yz);
        symmetry.record((xy - space.compactified_metric(&y, &x)?).abs());
        // distance to the interval [0, 1): below 0 or at/above 1 is positive
        bounded.record(if xy < 0.0 {
            -xy
        } else if xy >= 1.0 {
            1.0
        } else {
            -1.0
        });
    }
    Ok(lemma_table(
        vec![triangle, symmetry, bounded],
        line.n_max(),
        config.seed,
    ))
}

/// A point of the open unit ball of `R^d`; half the time it is the image
/// of a point of `X_d` whose first coordinate lies in some `I_n`.
fn sample_ball_point(rng: &mut ChaCha8Rng, line: &LineMetricSpace, d: usize) -> Vec<f64> {
    if rng.gen_bool(0.5) {
        loop {
            let p: Vec<f64> = (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect();
            if p.iter().map(|c| c * c).sum::<f64>() < 1.0 {
                return p;
            }
        }
    }
    let n = rng.gen_range(1..=line.n_max());
    let (a, b) = line.interval(n);
    let mut q = vec![rng.gen_range(a..=b)];
    q.extend((1..d).map(|_| rng.gen_range(-0.5..0.5) * line.s(n)));
    // x' -> x' / (1 + |x'|) inverts x -> x / (1 - |x|)
    let norm = q.iter().map(|c| c * c).sum::<f64>().sqrt();
    q.iter().map(|c| c / (1.0 + norm)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_defaults_and_kind_resolution() {
        let c = ExperimentConfig::from_toml("seed = 7\n", Some(ExperimentKind::Modulus)).unwrap();
        assert_eq!(c.kind, ExperimentKind::Modulus);
        assert_eq!(c.params, ParamsSpec::Default { n_max: 16 });
        assert_eq!(c.modulus.resolution, 64);
        assert_eq!(c.dimension, 2);

        let text = "kind = \"tangents\"\n[params]\nn_max = 8\n[tangents]\nn_list = [2, 3]\n";
        let c = ExperimentConfig::from_toml(text, None).unwrap();
        assert_eq!(c.params, ParamsSpec::Default { n_max: 8 });
        assert_eq!(c.tangents.n_list, vec![2, 3]);
        assert_eq!(c.tangents.count, 33);

        assert!(matches!(
            ExperimentConfig::from_toml(text, Some(ExperimentKind::Modulus)),
            Err(RunError::Config(_))
        ));
        assert!(ExperimentConfig::from_toml("", None).is_err());
    }

    #[test]
    fn malformed_configs() {
        let kind = Some(ExperimentKind::Modulus);
        for text in [
            "seed = \"seven\"",
            "resolution = 3",
            "[modulus]\nresolutoin = 8",
            "[[[",
            "[params]\nn_max = -1",
        ] {
            let err = ExperimentConfig::from_toml(text, kind).unwrap_err();
            assert_eq!(err.exit_code(), EXIT_CONFIG, "{text}: {err}");
        }
    }

    #[test]
    fn explicit_params() {
        let text = "[params]\nalpha = [0.5, 0.6]\nc = [0.1, 0.05]\ns = [0.1, 0.05]\n";
        let c = ExperimentConfig::from_toml(text, Some(ExperimentKind::VerifyLemmas)).unwrap();
        let p = c.params.build().unwrap();
        assert_eq!(p.n_max(), 2);
        let bad = "[params]\nalpha = [0.5, 0.4]\nc = [0.1, 0.05]\ns = [0.1, 0.05]\n";
        let c = ExperimentConfig::from_toml(bad, Some(ExperimentKind::VerifyLemmas)).unwrap();
        assert_eq!(execute(&c).unwrap_err().exit_code(), EXIT_CONFIG);
    }

    #[test]
    fn knobs_checked_against_truncation() {
        let mut c = ExperimentConfig::new(ExperimentKind::Modulus);
        c.params = ParamsSpec::Default { n_max: 4 };
        c.modulus.n_list = vec![2, 5];
        assert!(matches!(execute(&c), Err(RunError::Config(_))));
    }

    #[test]
    fn lemma_run_passes() {
        let mut c = ExperimentConfig::new(ExperimentKind::VerifyLemmas);
        c.seed = 7;
        c.verify_lemmas.samples = 2000;
        let report = execute(&c).unwrap();
        assert!(report.passed(), "{:?}", report.contracts);
        assert_eq!(report.table.rows.len(), 9);
    }

    #[test]
    fn modulus_table_increases() {
        let mut c = ExperimentConfig::new(ExperimentKind::Modulus);
        c.modulus.resolution = 8;
        let report = execute(&c).unwrap();
        assert!(report.passed());
        let lower: Vec<f64> = report.table.column("analytic_lower").unwrap()[..7]
            .iter()
            .map(|v| v.parse().unwrap())
            .collect();
        assert!(lower.windows(2).all(|w| w[1] > w[0]));
    }
}
