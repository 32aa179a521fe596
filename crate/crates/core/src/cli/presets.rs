use crate::algorithms::{AmpConfig, EigenOptions, GdConfig, StepSchedule, WeightGrid};
use crate::error::{Error, Result};
use crate::eval::{AlgorithmConfig, ExperimentConfig, Metric, ModelTemplate, Sweep};
use crate::limits::SolverOptions;
use crate::model::make_three_group;
use crate::priors::Prior;

pub const PRESET_NAMES: [&str; 5] = ["fig1a", "fig1b", "fig2a", "fig2b", "fig_appendix_d"];

const BASE_SEED: u64 = 20220328;

/// `count` evenly spaced points from `lo` to `hi` inclusive.
pub fn linspace(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    match count {
        0 => vec![],
        1 => vec![lo],
        _ => (0..count).map(|i| lo + (hi - lo) * i as f64 / (count - 1) as f64).collect(),
    }
}

fn gd_config() -> GdConfig {
    GdConfig {
        schedule: StepSchedule::Constant { gamma: 0.15 },
        ..GdConfig::default()
    }
}

fn all_algorithms() -> Vec<AlgorithmConfig> {
    vec![
        AlgorithmConfig::Amp {
            config: AmpConfig::default(),
        },
        AlgorithmConfig::Gd { config: gd_config() },
        AlgorithmConfig::JointPca {},
        AlgorithmConfig::WeightedPca {
            grid: WeightGrid::default(),
        },
    ]
}

fn two_group_alpha_sweep(prior: Prior) -> ExperimentConfig {
    ExperimentConfig {
        model: ModelTemplate::TwoGroup {
            alpha: 0.5,
            lambda: 2.0,
            priors: [prior.clone(), prior],
        },
        n: 1024,
        sweep: Sweep::Alpha {
            values: linspace(0.0, 1.0, 32),
        },
        series: None,
        algorithms: all_algorithms(),
        trials: 64,
        base_seed: BASE_SEED,
        metrics: vec![Metric::DiagMse, Metric::DiagMseDirect],
        solver: SolverOptions::default(),
        eigen: EigenOptions::default(),
    }
}

/// One representative label per distinct size-two support.
///
/// Two supports are equivalent when their `Λ + Λᵀ` patterns agree after a
/// relabeling of the groups that leaves `β` unchanged.
pub fn distinct_supports(beta: [f64; 3]) -> Result<Vec<String>> {
    const PERMS: [[usize; 3]; 6] = [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];
    let perms: Vec<&[usize; 3]> = PERMS.iter().filter(|p| (0..3).all(|i| beta[p[i]] == beta[i])).collect();
    let entries: Vec<(usize, usize)> = (0..3).flat_map(|k| (0..3).map(move |l| (k, l))).collect();
    let mut seen: Vec<Vec<i64>> = Vec::new();
    let mut labels = Vec::new();
    for (i, &a) in entries.iter().enumerate() {
        for &b in &entries[i + 1..] {
            let spec = make_three_group(&[a, b], 1.0, beta, [Prior::gaussian(), Prior::gaussian(), Prior::gaussian()])?;
            let sym = spec.lambda_sym();
            let key = perms
                .iter()
                .map(|p| {
                    let mut v = Vec::with_capacity(6);
                    for k in 0..3 {
                        for l in k..3 {
                            v.push((sym[[p[k], p[l]]] * 1e9).round() as i64);
                        }
                    }
                    v
                })
                .min()
                .expect("identity permutation always applies");
            if !seen.contains(&key) {
                seen.push(key);
                labels.push(format!("{}{},{}{}", a.0 + 1, a.1 + 1, b.0 + 1, b.1 + 1));
            }
        }
    }
    Ok(labels)
}

fn three_group(beta: [f64; 3]) -> Result<ExperimentConfig> {
    let labels = distinct_supports(beta)?;
    Ok(ExperimentConfig {
        model: ModelTemplate::ThreeGroup {
            support: labels[0].clone(),
            lambda: 1.0,
            beta,
            priors: [Prior::gaussian(), Prior::gaussian(), Prior::gaussian()],
        },
        n: 1024,
        sweep: Sweep::Lambda {
            values: linspace(0.05, 2.0, 40),
        },
        series: Some(Sweep::Support { labels }),
        algorithms: vec![],
        trials: 1,
        base_seed: BASE_SEED,
        metrics: vec![Metric::DiagMse],
        solver: SolverOptions::default(),
        eigen: EigenOptions::default(),
    })
}

fn appendix_d() -> Result<ExperimentConfig> {
    Ok(ExperimentConfig {
        model: ModelTemplate::TwoGroup {
            alpha: 0.5,
            lambda: 1.0,
            priors: [Prior::bernoulli_standardized(0.1)?, Prior::gaussian()],
        },
        n: 512,
        sweep: Sweep::Lambda {
            values: linspace(0.25, 3.0, 12),
        },
        series: Some(Sweep::Alpha {
            values: vec![0.0, 0.25, 0.5, 0.75, 1.0],
        }),
        algorithms: vec![AlgorithmConfig::Amp {
            config: AmpConfig::default(),
        }],
        trials: 32,
        base_seed: BASE_SEED,
        metrics: vec![Metric::DiagMse],
        solver: SolverOptions::default(),
        eigen: EigenOptions::default(),
    })
}

/// Built-in experiment configurations.
pub fn preset(name: &str) -> Result<ExperimentConfig> {
    match name {
        "fig1a" => Ok(two_group_alpha_sweep(Prior::gaussian())),
        "fig1b" => Ok(two_group_alpha_sweep(Prior::rademacher())),
        "fig2a" => three_group([1.0 / 3.0; 3]),
        "fig2b" => three_group([0.2, 0.4, 0.4]),
        "fig_appendix_d" => appendix_d(),
        _ => Err(Error::Config(format!(
            "unknown preset {name:?}; available: {}",
            PRESET_NAMES.join(", ")
        ))),
    }
}
