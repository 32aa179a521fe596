//! Paired Monte Carlo experiments over a sweep of model parameters.
//!
//! Every `(series, point, trial)` triple draws one instance whose seed is
//!
//! ```text
//! base_seed ^ splitmix64(series_key ^ splitmix64(point_key ^ splitmix64(trial)))
//! ```
//!
//! where a key is the bit pattern of a numeric value or the FNV-1a hash of a
//! label. All requested algorithms run on that instance.

use std::fmt;
use std::io::Write;
use std::path::Path;
use std::time::Instant;

use ndarray::Array1;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::metrics::{diag_mse_direct, mean_stderr, overlap, scaled_terms, ScaledMseAccumulator};
use crate::algorithms::{
    amp_groupwise, gradient_descent, joint_pca, scaled_init, weight_grid_search, AmpConfig, EigenOptions,
    EstimateSet, GdConfig, Normalization, ScaledOperator, WeightGrid,
};
use crate::error::{Error, Result};
use crate::limits::{mmse_from_saddle, solve_limit, ProblemSpec, SolverOptions};
use crate::model::{make_three_group, make_two_group, parse_support, sample_instance, symmetrize, InstanceSpec};
use crate::priors::Prior;

fn half() -> f64 {
    0.5
}

fn third() -> [f64; 3] {
    [1.0 / 3.0; 3]
}

/// Family of models the sweep moves through.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ModelTemplate {
    /// `Λ = λ [[1−α, α], [α, 1−α]]` on two equal groups.
    TwoGroup {
        #[serde(default = "half")]
        alpha: f64,
        lambda: f64,
        priors: [Prior; 2],
    },
    /// Equal SNR on the blocks of `support` (e.g. `"11,23"`), normalized so `βᵀΛβ = λ`.
    ThreeGroup {
        support: String,
        lambda: f64,
        #[serde(default = "third")]
        beta: [f64; 3],
        priors: [Prior; 3],
    },
    /// A fixed spec; a `lambda` sweep multiplies its `Λ`.
    Custom { spec: ProblemSpec },
}

/// A swept parameter and its grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variable", rename_all = "snake_case", deny_unknown_fields)]
pub enum Sweep {
    Alpha { values: Vec<f64> },
    Lambda { values: Vec<f64> },
    Support { labels: Vec<String> },
}

#[derive(Debug, Clone, PartialEq)]
pub enum SweepValue {
    Number(f64),
    Label(String),
}

impl fmt::Display for SweepValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SweepValue::Number(x) => write!(f, "{x}"),
            SweepValue::Label(s) => f.write_str(s),
        }
    }
}

fn fnv1a(s: &str) -> u64 {
    s.bytes()
        .fold(0xcbf2_9ce4_8422_2325, |h, b| (h ^ b as u64).wrapping_mul(0x0100_0000_01b3))
}

impl SweepValue {
    fn key(&self) -> u64 {
        match self {
            SweepValue::Number(x) => x.to_bits(),
            SweepValue::Label(s) => fnv1a(s),
        }
    }

    /// File-name friendly rendering.
    pub fn slug(&self) -> String {
        self.to_string()
            .chars()
            .map(|c| if c.is_ascii_alphanumeric() || c == '.' || c == '-' { c } else { '_' })
            .collect()
    }
}

impl Sweep {
    pub fn variable(&self) -> &'static str {
        match self {
            Sweep::Alpha { .. } => "alpha",
            Sweep::Lambda { .. } => "lambda",
            Sweep::Support { .. } => "support",
        }
    }

    pub fn points(&self) -> Vec<SweepValue> {
        match self {
            Sweep::Alpha { values } | Sweep::Lambda { values } => values.iter().map(|&v| SweepValue::Number(v)).collect(),
            Sweep::Support { labels } => labels.iter().cloned().map(SweepValue::Label).collect(),
        }
    }

    fn len(&self) -> usize {
        match self {
            Sweep::Alpha { values } | Sweep::Lambda { values } => values.len(),
            Sweep::Support { labels } => labels.len(),
        }
    }
}

impl ModelTemplate {
    /// Apply the given `(variable, value)` overrides in order and build the spec.
    pub fn build(&self, settings: &[(&'static str, &SweepValue)]) -> Result<ProblemSpec> {
        let mut t = self.clone();
        for &(var, value) in settings {
            match (&mut t, var, value) {
                (ModelTemplate::TwoGroup { alpha, .. }, "alpha", SweepValue::Number(v)) => *alpha = *v,
                (ModelTemplate::TwoGroup { lambda, .. } | ModelTemplate::ThreeGroup { lambda, .. }, "lambda", SweepValue::Number(v)) => {
                    *lambda = *v
                }
                (ModelTemplate::ThreeGroup { support, .. }, "support", SweepValue::Label(s)) => *support = s.clone(),
                (ModelTemplate::Custom { spec }, "lambda", SweepValue::Number(v)) => {
                    *spec = spec.with_lambda(spec.lambda() * *v)?;
                }
                _ => {
                    return Err(Error::Config(format!(
                        "cannot sweep {var} = {value} on a {} model",
                        t.kind()
                    )))
                }
            }
        }
        match t {
            ModelTemplate::TwoGroup { alpha, lambda, priors: [p1, p2] } => make_two_group(alpha, lambda, p1, p2),
            ModelTemplate::ThreeGroup {
                support,
                lambda,
                beta,
                priors,
            } => make_three_group(&parse_support(&support)?, lambda, beta, priors),
            ModelTemplate::Custom { spec } => Ok(spec),
        }
    }

    fn kind(&self) -> &'static str {
        match self {
            ModelTemplate::TwoGroup { .. } => "two_group",
            ModelTemplate::ThreeGroup { .. } => "three_group",
            ModelTemplate::Custom { .. } => "custom",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum AlgorithmConfig {
    Amp {
        #[serde(default)]
        config: AmpConfig,
    },
    /// Gradient ascent on the likelihood, started from the rescaled joint PCA estimate.
    Gd {
        #[serde(default)]
        config: GdConfig,
    },
    JointPca {},
    /// Oracle-tuned weighted PCA.
    WeightedPca {
        #[serde(default)]
        grid: WeightGrid,
    },
}

impl AlgorithmConfig {
    pub fn name(&self) -> &'static str {
        match self {
            AlgorithmConfig::Amp { .. } => "amp",
            AlgorithmConfig::Gd { .. } => "gd",
            AlgorithmConfig::JointPca {} => "joint_pca",
            AlgorithmConfig::WeightedPca { .. } => "weighted_pca",
        }
    }

    /// Whether `diag_mse` scores the estimate as it is (true) or at the
    /// optimal radius pooled over trials (false).
    pub fn scored_directly(&self) -> bool {
        matches!(self, AlgorithmConfig::Amp { .. })
    }

    fn carries_scale(&self) -> bool {
        matches!(self, AlgorithmConfig::Amp { .. } | AlgorithmConfig::Gd { .. })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    /// Diagonal-block MSE; AMP is scored directly, every other method at the optimal radius.
    DiagMse,
    /// Diagonal-block MSE of the raw output, for methods whose output carries scale.
    DiagMseDirect,
    /// Squared cosine with the truth.
    Overlap,
}

impl Metric {
    fn name(&self) -> &'static str {
        match self {
            Metric::DiagMse => "diag_mse",
            Metric::DiagMseDirect => "diag_mse_direct",
            Metric::Overlap => "overlap",
        }
    }
}

fn default_metrics() -> Vec<Metric> {
    vec![Metric::DiagMse]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub model: ModelTemplate,
    /// Average group size: the instance has `N = n·K` coordinates.
    pub n: usize,
    pub sweep: Sweep,
    /// Optional outer variable; one set of curves per value.
    #[serde(default)]
    pub series: Option<Sweep>,
    /// Empty means only the asymptotic curves are computed.
    #[serde(default)]
    pub algorithms: Vec<AlgorithmConfig>,
    pub trials: usize,
    #[serde(default)]
    pub base_seed: u64,
    #[serde(default = "default_metrics")]
    pub metrics: Vec<Metric>,
    #[serde(default)]
    pub solver: SolverOptions,
    #[serde(default)]
    pub eigen: EigenOptions,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.sweep.len() == 0 {
            return Err(Error::Config("sweep grid is empty".into()));
        }
        if self.series.as_ref().is_some_and(|s| s.len() == 0) {
            return Err(Error::Config("series grid is empty".into()));
        }
        if self.trials == 0 {
            return Err(Error::Config("trials must be at least 1".into()));
        }
        if self.n == 0 {
            return Err(Error::Config("n must be at least 1".into()));
        }
        if let Some(s) = &self.series {
            if s.variable() == self.sweep.variable() {
                return Err(Error::Config(format!("series and sweep both vary {}", s.variable())));
            }
        }
        for (series, point) in self.grid() {
            self.spec_at(series.as_ref(), &point)?;
        }
        Ok(())
    }

    fn grid(&self) -> Vec<(Option<SweepValue>, SweepValue)> {
        let series: Vec<Option<SweepValue>> = match &self.series {
            Some(s) => s.points().into_iter().map(Some).collect(),
            None => vec![None],
        };
        series
            .into_iter()
            .flat_map(|s| self.sweep.points().into_iter().map(move |p| (s.clone(), p)))
            .collect()
    }

    pub fn spec_at(&self, series: Option<&SweepValue>, point: &SweepValue) -> Result<ProblemSpec> {
        let mut settings = Vec::new();
        if let (Some(s), Some(v)) = (&self.series, series) {
            settings.push((s.variable(), v));
        }
        settings.push((self.sweep.variable(), point));
        self.model.build(&settings)
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed of the instance drawn for one trial.
pub fn trial_seed(base_seed: u64, series: Option<&SweepValue>, point: &SweepValue, trial: usize) -> u64 {
    let s = series.map_or(0, SweepValue::key);
    base_seed ^ splitmix64(s ^ splitmix64(point.key() ^ splitmix64(trial as u64)))
}

/// Per-group scores of one estimate.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupScore {
    /// Raw diagonal-block MSE, for estimates that carry scale.
    pub direct: Option<f64>,
    /// `(‖u‖⁴/n², (uᵀû)²/(n‖û‖²))`.
    pub scaled: (f64, f64),
    pub overlap: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialResult {
    pub series: Option<SweepValue>,
    pub point: SweepValue,
    pub trial: usize,
    pub algorithm: &'static str,
    pub seed: u64,
    pub wall_time: f64,
    /// One entry per group; empty when the run failed.
    pub scores: Vec<GroupScore>,
    pub error: Option<String>,
}

impl TrialResult {
    /// Single-trial diagonal-block MSE of group `g` under the algorithm's own scoring rule.
    pub fn diag_mse(&self, g: usize, direct: bool) -> Option<f64> {
        let s = self.scores.get(g)?;
        if direct {
            s.direct
        } else {
            Some(s.scaled.0 - s.scaled.1 * s.scaled.1)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AggregateRow {
    #[serde(skip)]
    pub series: Option<String>,
    pub sweep_var: String,
    pub sweep_value: String,
    pub algorithm: String,
    /// 1-based group index.
    pub group: usize,
    pub metric: String,
    pub mean: f64,
    pub stderr: f64,
    pub trials: usize,
    pub completed: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MmseRow {
    #[serde(skip)]
    pub series: Option<String>,
    pub sweep_value: String,
    /// `"k"` for the vector MMSE of group `k`, `"k,l"` for block `(k, ℓ)` (1-based).
    pub group_or_block: String,
    pub mmse: f64,
    /// False when the value is only a bound (non-unique maximizer).
    pub unique_flag: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TraceRow {
    pub t: usize,
    pub group: usize,
    pub mean_overlap: f64,
    pub mean_variance: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceRecord {
    pub series: Option<SweepValue>,
    pub point: SweepValue,
    pub algorithm: &'static str,
    pub rows: Vec<TraceRow>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentOutput {
    pub trials: Vec<TrialResult>,
    pub aggregates: Vec<AggregateRow>,
    pub mmse: Vec<MmseRow>,
    pub traces: Vec<TraceRecord>,
    /// Points where an algorithm's mean MSE sits more than three standard
    /// errors below the asymptotic MMSE.
    pub bound_warnings: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RunOptions {
    pub workers: usize,
    /// Keep AMP and GD trajectories of the first trial at each point.
    pub trace: bool,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self {
            workers: std::thread::available_parallelism().map_or(1, |n| n.get()),
            trace: false,
        }
    }
}

fn score(truth: &[Array1<f64>], est: &EstimateSet) -> Result<Vec<GroupScore>> {
    truth
        .iter()
        .zip(&est.xhat)
        .map(|(u, h)| {
            if h.iter().any(|v| !v.is_finite()) {
                return Err(Error::Numeric("estimate has non-finite entries".into()));
            }
            Ok(GroupScore {
                direct: (est.normalization == Normalization::PosteriorMean).then(|| diag_mse_direct(u, h)),
                scaled: scaled_terms(u, h)?,
                overlap: overlap(u, h)?,
            })
        })
        .collect()
}

struct Task<'a> {
    series: Option<SweepValue>,
    point: SweepValue,
    spec: &'a ProblemSpec,
    trial: usize,
}

fn run_task(cfg: &ExperimentConfig, task: &Task<'_>, trace: bool) -> Result<(Vec<TrialResult>, Vec<TraceRecord>)> {
    let seed = trial_seed(cfg.base_seed, task.series.as_ref(), &task.point, task.trial);
    let ispec = InstanceSpec::per_group(task.spec.clone(), cfg.n, seed)?;
    let obs = sample_instance(&ispec)?;
    let sym = symmetrize(obs.redacted(), task.spec, ispec.big_n);
    let truth = obs.truth;
    let needs_op = cfg
        .algorithms
        .iter()
        .any(|a| matches!(a, AlgorithmConfig::Amp { .. } | AlgorithmConfig::Gd { .. }));
    let op = needs_op.then(|| ScaledOperator::new(&sym));
    let mut pca: Option<(Result<EstimateSet>, f64)> = None;
    let mut results = Vec::new();
    let mut traces = Vec::new();
    let keep_trace = trace && task.trial == 0;

    for alg in &cfg.algorithms {
        let start = Instant::now();
        let mut extra = 0.0;
        let est: Result<EstimateSet> = match alg {
            AlgorithmConfig::Amp { config } => {
                let c = AmpConfig {
                    seed: config.seed ^ splitmix64(seed),
                    ..config.clone()
                };
                amp_groupwise(op.as_ref().expect("operator built"), &sym, task.spec.priors(), &c, false).map(|o| {
                    if keep_trace {
                        traces.push(TraceRecord {
                            series: task.series.clone(),
                            point: task.point.clone(),
                            algorithm: alg.name(),
                            rows: o
                                .trace
                                .iter()
                                .map(|r| TraceRow {
                                    t: r.t,
                                    group: r.group + 1,
                                    mean_overlap: r.mean_overlap,
                                    mean_variance: Some(r.mean_variance),
                                })
                                .collect(),
                        });
                    }
                    o.estimate
                })
            }
            AlgorithmConfig::JointPca {} | AlgorithmConfig::Gd { .. } => {
                let (init, secs) = pca.get_or_insert_with(|| {
                    let t0 = Instant::now();
                    let r = joint_pca(&sym, &cfg.eigen);
                    (r, t0.elapsed().as_secs_f64())
                });
                match alg {
                    AlgorithmConfig::Gd { config } => {
                        extra = *secs;
                        match init {
                            Ok(init) => gradient_descent(op.as_ref().expect("operator built"), &scaled_init(init), config, keep_trace)
                                .map(|o| {
                                    if keep_trace {
                                        traces.push(TraceRecord {
                                            series: task.series.clone(),
                                            point: task.point.clone(),
                                            algorithm: alg.name(),
                                            rows: o
                                                .trace
                                                .iter()
                                                .map(|r| TraceRow {
                                                    t: r.t,
                                                    group: r.group + 1,
                                                    mean_overlap: r.mean_square,
                                                    mean_variance: None,
                                                })
                                                .collect(),
                                        });
                                    }
                                    o.estimate
                                }),
                            Err(e) => Err(Error::Degenerate(format!("joint PCA initialization failed: {e}"))),
                        }
                    }
                    _ => match init {
                        Ok(e) => Ok(e.clone()),
                        Err(e) => Err(Error::Degenerate(e.to_string())),
                    },
                }
            }
            AlgorithmConfig::WeightedPca { grid } => weight_grid_search(&sym, &truth, grid, &cfg.eigen).map(|g| g.estimates),
        };
        let scores = est.and_then(|e| score(&truth, &e));
        let wall_time = start.elapsed().as_secs_f64() + extra;
        let (scores, error) = match scores {
            Ok(s) => (s, None),
            Err(e) => (Vec::new(), Some(e.to_string())),
        };
        results.push(TrialResult {
            series: task.series.clone(),
            point: task.point.clone(),
            trial: task.trial,
            algorithm: alg.name(),
            seed,
            wall_time,
            scores,
            error,
        });
    }
    Ok((results, traces))
}

fn mmse_rows(series: Option<&SweepValue>, point: &SweepValue, spec: &ProblemSpec, opts: &SolverOptions) -> Result<Vec<MmseRow>> {
    let saddle = solve_limit(spec, opts)?;
    let m = mmse_from_saddle(&saddle, spec)?;
    let k = spec.groups();
    let mut rows = Vec::new();
    for a in 0..k {
        rows.push(MmseRow {
            series: series.map(|s| s.to_string()),
            sweep_value: point.to_string(),
            group_or_block: format!("{}", a + 1),
            mmse: m.vector_mmse[a],
            unique_flag: !m.vector_bound_only[a],
        });
    }
    for a in 0..k {
        for b in a..k {
            rows.push(MmseRow {
                series: series.map(|s| s.to_string()),
                sweep_value: point.to_string(),
                group_or_block: format!("{},{}", a + 1, b + 1),
                mmse: m.block_mmse[[a, b]],
                unique_flag: !m.is_bound_only(a, b),
            });
        }
    }
    Ok(rows)
}

/// Runs the whole sweep and aggregates per `(series, point, algorithm, group, metric)`.
pub fn run_experiment(cfg: &ExperimentConfig, opts: &RunOptions) -> Result<ExperimentOutput> {
    cfg.validate()?;
    let grid = cfg.grid();
    let specs: Vec<ProblemSpec> = grid
        .iter()
        .map(|(s, p)| cfg.spec_at(s.as_ref(), p))
        .collect::<Result<_>>()?;

    let mut mmse = Vec::new();
    for ((s, p), spec) in grid.iter().zip(&specs) {
        mmse.extend(mmse_rows(s.as_ref(), p, spec, &cfg.solver)?);
    }

    let tasks: Vec<Task<'_>> = if cfg.algorithms.is_empty() {
        Vec::new()
    } else {
        grid.iter()
            .zip(&specs)
            .flat_map(|((s, p), spec)| {
                (0..cfg.trials).map(move |trial| Task {
                    series: s.clone(),
                    point: p.clone(),
                    spec,
                    trial,
                })
            })
            .collect()
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(opts.workers.max(1))
        .build()
        .map_err(|e| Error::Resource(format!("cannot start worker pool: {e}")))?;
    let outcomes: Vec<Result<(Vec<TrialResult>, Vec<TraceRecord>)>> =
        pool.install(|| tasks.par_iter().map(|t| run_task(cfg, t, opts.trace)).collect());

    let mut trials = Vec::new();
    let mut traces = Vec::new();
    for o in outcomes {
        let (r, t) = o?;
        trials.extend(r);
        traces.extend(t);
    }

    let mut aggregates = Vec::new();
    let mut bound_warnings = Vec::new();
    let groups = specs.first().map_or(0, ProblemSpec::groups);
    for (s, p) in &grid {
        let at_point: Vec<&TrialResult> = trials.iter().filter(|r| &r.series == s && &r.point == p).collect();
        for alg in &cfg.algorithms {
            let runs: Vec<&TrialResult> = at_point.iter().copied().filter(|r| r.algorithm == alg.name()).collect();
            let ok: Vec<&TrialResult> = runs.iter().copied().filter(|r| r.error.is_none()).collect();
            let failed = runs.len() - ok.len();
            if 2 * failed > runs.len() {
                let first = runs.iter().find_map(|r| r.error.clone()).unwrap_or_default();
                return Err(Error::Numeric(format!(
                    "{} failed in {failed} of {} trials at {} = {p}: {first}",
                    alg.name(),
                    runs.len(),
                    cfg.sweep.variable()
                )));
            }
            for g in 0..groups {
                for metric in &cfg.metrics {
                    let (mean, stderr) = match metric {
                        Metric::DiagMse if alg.scored_directly() => {
                            mean_stderr(&ok.iter().filter_map(|r| r.scores[g].direct).collect::<Vec<_>>())
                        }
                        Metric::DiagMse => {
                            let mut acc = ScaledMseAccumulator::new();
                            ok.iter().for_each(|r| acc.push_terms(r.scores[g].scaled.0, r.scores[g].scaled.1));
                            (acc.mean(), acc.stderr())
                        }
                        Metric::DiagMseDirect if alg.carries_scale() => {
                            mean_stderr(&ok.iter().filter_map(|r| r.scores[g].direct).collect::<Vec<_>>())
                        }
                        Metric::DiagMseDirect => continue,
                        Metric::Overlap => mean_stderr(&ok.iter().map(|r| r.scores[g].overlap).collect::<Vec<_>>()),
                    };
                    if *metric == Metric::DiagMse && ok.len() >= 2 {
                        let label = format!("{},{}", g + 1, g + 1);
                        let limit = mmse.iter().find(|m| {
                            m.series == s.as_ref().map(|v| v.to_string())
                                && m.sweep_value == p.to_string()
                                && m.group_or_block == label
                        });
                        if let Some(m) = limit {
                            if mean + 3.0 * stderr < m.mmse {
                                bound_warnings.push(format!(
                                    "{} group {} at {} = {p}: mean {mean:.4} ± {stderr:.4} is below the asymptotic MMSE {:.4}",
                                    alg.name(),
                                    g + 1,
                                    cfg.sweep.variable(),
                                    m.mmse
                                ));
                            }
                        }
                    }
                    aggregates.push(AggregateRow {
                        series: s.as_ref().map(|v| v.to_string()),
                        sweep_var: cfg.sweep.variable().to_string(),
                        sweep_value: p.to_string(),
                        algorithm: alg.name().to_string(),
                        group: g + 1,
                        metric: metric.name().to_string(),
                        mean,
                        stderr,
                        trials: runs.len(),
                        completed: ok.len(),
                    });
                }
            }
        }
    }

    Ok(ExperimentOutput {
        trials,
        aggregates,
        mmse,
        traces,
        bound_warnings,
    })
}

fn fmt_f64(x: f64) -> String {
    if x.is_nan() {
        String::new()
    } else {
        format!("{x}")
    }
}

/// `sweep_var,sweep_value,algorithm,group,metric,mean,stderr,trials,completed`
pub fn write_results_csv<'a, I: IntoIterator<Item = &'a AggregateRow>>(rows: I, path: &Path) -> Result<()> {
    let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(w, "sweep_var,sweep_value,algorithm,group,metric,mean,stderr,trials,completed")?;
    for r in rows {
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{}",
            r.sweep_var,
            csv_field(&r.sweep_value),
            r.algorithm,
            r.group,
            r.metric,
            fmt_f64(r.mean),
            fmt_f64(r.stderr),
            r.trials,
            r.completed
        )?;
    }
    w.flush()?;
    Ok(())
}

/// `sweep_value,group_or_block,mmse,unique_flag`
pub fn write_mmse_csv<'a, I: IntoIterator<Item = &'a MmseRow>>(rows: I, path: &Path) -> Result<()> {
    let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(w, "sweep_value,group_or_block,mmse,unique_flag")?;
    for r in rows {
        writeln!(
            w,
            "{},{},{},{}",
            csv_field(&r.sweep_value),
            csv_field(&r.group_or_block),
            fmt_f64(r.mmse),
            r.unique_flag
        )?;
    }
    w.flush()?;
    Ok(())
}

/// One row per trial, algorithm and group.
pub fn write_trials_csv<'a, I: IntoIterator<Item = &'a TrialResult>>(rows: I, path: &Path) -> Result<()> {
    let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(w, "series,sweep_value,trial,algorithm,group,diag_mse,overlap,seed,wall_time,error")?;
    for r in rows {
        let series = r.series.as_ref().map(|s| s.to_string()).unwrap_or_default();
        if r.scores.is_empty() {
            writeln!(
                w,
                "{},{},{},{},,,,{},{},{}",
                csv_field(&series),
                csv_field(&r.point.to_string()),
                r.trial,
                r.algorithm,
                r.seed,
                r.wall_time,
                csv_field(r.error.as_deref().unwrap_or(""))
            )?;
            continue;
        }
        let direct = r.algorithm == "amp";
        for (g, s) in r.scores.iter().enumerate() {
            writeln!(
                w,
                "{},{},{},{},{},{},{},{},{},",
                csv_field(&series),
                csv_field(&r.point.to_string()),
                r.trial,
                r.algorithm,
                g + 1,
                fmt_f64(r.diag_mse(g, direct).unwrap_or(f64::NAN)),
                fmt_f64(s.overlap),
                r.seed,
                r.wall_time
            )?;
        }
    }
    w.flush()?;
    Ok(())
}

/// `t,group,mean_overlap,mean_variance`
pub fn write_trace_csv(rows: &[TraceRow], path: &Path) -> Result<()> {
    let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(w, "t,group,mean_overlap,mean_variance")?;
    for r in rows {
        writeln!(
            w,
            "{},{},{},{}",
            r.t,
            r.group,
            fmt_f64(r.mean_overlap),
            r.mean_variance.map(fmt_f64).unwrap_or_default()
        )?;
    }
    w.flush()?;
    Ok(())
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(algorithms: Vec<AlgorithmConfig>) -> ExperimentConfig {
        ExperimentConfig {
            model: ModelTemplate::TwoGroup {
                alpha: 0.5,
                lambda: 2.0,
                priors: [Prior::rademacher(), Prior::rademacher()],
            },
            n: 32,
            sweep: Sweep::Alpha { values: vec![0.25, 0.75] },
            series: None,
            algorithms,
            trials: 3,
            base_seed: 11,
            metrics: vec![Metric::DiagMse, Metric::DiagMseDirect, Metric::Overlap],
            solver: SolverOptions::default(),
            eigen: EigenOptions::default(),
        }
    }

    fn all_algorithms() -> Vec<AlgorithmConfig> {
        vec![
            AlgorithmConfig::Amp { config: AmpConfig::default() },
            AlgorithmConfig::Gd { config: GdConfig::default() },
            AlgorithmConfig::JointPca {},
            AlgorithmConfig::WeightedPca {
                grid: WeightGrid::Simplex { points: 5 },
            },
        ]
    }

    #[test]
    fn seeds_depend_only_on_point_and_trial() {
        let a = SweepValue::Number(0.5);
        let b = SweepValue::Number(0.25);
        assert_eq!(trial_seed(1, None, &a, 3), trial_seed(1, None, &a, 3));
        assert_ne!(trial_seed(1, None, &a, 3), trial_seed(1, None, &b, 3));
        assert_ne!(trial_seed(1, None, &a, 3), trial_seed(1, None, &a, 4));
        let l = SweepValue::Label("11,23".into());
        assert_ne!(trial_seed(1, Some(&l), &a, 3), trial_seed(1, None, &a, 3));
    }

    #[test]
    fn runs_are_reproducible_and_paired() {
        let cfg = small(all_algorithms());
        let opts = RunOptions { workers: 2, trace: true };
        let a = run_experiment(&cfg, &opts).unwrap();
        let b = run_experiment(&cfg, &RunOptions { workers: 1, trace: true }).unwrap();
        assert_eq!(a.aggregates, b.aggregates);
        assert_eq!(a.mmse, b.mmse);
        // every algorithm sees the same instance at a given (point, trial)
        for r in &a.trials {
            let twin = a.trials.iter().find(|s| s.point == r.point && s.trial == r.trial).unwrap();
            assert_eq!(r.seed, twin.seed);
        }
        assert_eq!(a.trials.len(), 2 * 3 * 4);
        assert!(a.trials.iter().all(|r| r.error.is_none()));
        // direct MSE only for methods that carry scale
        let direct: Vec<&str> = a
            .aggregates
            .iter()
            .filter(|r| r.metric == "diag_mse_direct")
            .map(|r| r.algorithm.as_str())
            .collect();
        assert!(direct.iter().all(|&n| n == "amp" || n == "gd"));
        assert_eq!(a.traces.len(), 2 * 2);
    }

    #[test]
    fn mmse_only_run() {
        let mut cfg = small(vec![]);
        cfg.sweep = Sweep::Lambda { values: vec![0.5, 2.0] };
        cfg.model = ModelTemplate::TwoGroup {
            alpha: 0.5,
            lambda: 1.0,
            priors: [Prior::gaussian(), Prior::gaussian()],
        };
        let out = run_experiment(&cfg, &RunOptions::default()).unwrap();
        assert!(out.trials.is_empty() && out.aggregates.is_empty());
        let diag: Vec<f64> = out.mmse.iter().filter(|r| r.group_or_block == "1,1").map(|r| r.mmse).collect();
        assert!((diag[0] - 1.0).abs() < 1e-9);
        assert!((diag[1] - 0.75).abs() < 1e-6);
    }

    #[test]
    fn invalid_configs_are_rejected() {
        let mut cfg = small(vec![]);
        cfg.trials = 0;
        assert!(matches!(cfg.validate(), Err(Error::Config(_))));
        let mut cfg = small(vec![]);
        cfg.sweep = Sweep::Alpha { values: vec![] };
        assert!(cfg.validate().is_err());
        let mut cfg = small(vec![]);
        cfg.sweep = Sweep::Support {
            labels: vec!["11".into()],
        };
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn config_round_trip() {
        let cfg = small(all_algorithms());
        let text = serde_json::to_string(&cfg).unwrap();
        let back: ExperimentConfig = serde_json::from_str(&text).unwrap();
        assert_eq!(back, cfg);
        assert!(serde_json::from_str::<ExperimentConfig>(&text.replacen("\"trials\"", "\"trails\"", 1)).is_err());
    }
}
