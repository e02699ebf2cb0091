use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{optimizer_step, AdamState, MiningMode, TrainConfig, TrainError};
use crate::autograd::{AutogradError, Graph, GrlConfig};
use crate::data::{build_trials, sample_batch, Dataset, TrialPlan, TrialRecord};
use crate::fmt::sig;
use crate::metrics::{compute_metric_suite, embed_utterances, score_trials, MetricSuite};
use crate::model::{build_losses, BatchInputs, LossBreakdown, LossOptions, Mining, ModelParams};

#[derive(Clone, Debug, PartialEq)]
pub struct StepRecord {
    pub step: usize,
    pub epoch: usize,
    pub loss: LossBreakdown,
    /// Gradient reversal scale in effect for this step.
    pub grl_lambda: f64,
}

#[derive(Clone, Debug, PartialEq, Default)]
pub struct TrainHistory {
    pub steps: Vec<StepRecord>,
    /// One entry per epoch; empty when the dataset has no dev split.
    pub dev: Vec<MetricSuite>,
}

impl TrainHistory {
    /// The training log, one line per step.
    pub fn log(&self) -> String {
        self.steps
            .iter()
            .map(|r| format_log_line(r) + "\n")
            .collect()
    }
}

/// `step l_cm l_asv l_tts l_vc l_st total` with six significant digits.
pub fn format_log_line(r: &StepRecord) -> String {
    let l = &r.loss;
    let mut s = r.step.to_string();
    for v in [l.l_cm, l.l_asv, l.l_tts, l.l_vc, l.l_st, l.total] {
        s.push(' ');
        s.push_str(&sig(v, 6));
    }
    s
}

pub fn steps_per_epoch(train_size: usize, batch_size: usize) -> usize {
    train_size.div_ceil(batch_size)
}

pub fn train(ds: &Dataset, cfg: &TrainConfig) -> Result<(ModelParams, TrainHistory), TrainError> {
    train_with(ds, cfg, |_| {})
}

fn dev_metrics(
    params: &ModelParams,
    ds: &Dataset,
    trials: &[TrialRecord],
    cfg: &TrainConfig,
) -> Result<MetricSuite, TrainError> {
    let scores = embed_utterances(params, &ds.dev, cfg.threads)?;
    let scored = score_trials(trials, &ds.dev, &scores, cfg.fusion_weight)?;
    Ok(compute_metric_suite(&scored.sasv)?)
}

fn grl_at(cfg: &TrainConfig, step: usize, total: usize) -> f64 {
    if !cfg.grl_ramp {
        return cfg.grl_lambda;
    }
    let ramp = 0.2 * total as f64;
    cfg.grl_lambda * (step as f64 / ramp).min(1.0)
}

/// Trains from a fresh initialisation, calling `on_step` after every
/// optimizer update.
pub fn train_with<F>(
    ds: &Dataset,
    cfg: &TrainConfig,
    mut on_step: F,
) -> Result<(ModelParams, TrainHistory), TrainError>
where
    F: FnMut(&StepRecord),
{
    cfg.validate()?;
    if ds.train.is_empty() {
        return Err(TrainError::InvalidConfig("training split is empty".into()));
    }
    let model_cfg = cfg.model_config(ds.asv_dim(), ds.raw_dim(), ds.n_train_speakers());
    let mut params = ModelParams::init(&model_cfg, cfg.seed);
    let mut state = AdamState::new(&params);
    let adam = cfg.adam();
    let dev_trials = if ds.dev.is_empty() {
        None
    } else {
        Some(build_trials(&ds.dev, TrialPlan::default(), cfg.seed)?)
    };

    let per_epoch = steps_per_epoch(ds.train.len(), cfg.batch_size);
    let total_steps = per_epoch * cfg.epochs;
    let mut seeds = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x5A5A_5EED_0000_0001);
    let mut history = TrainHistory::default();

    for epoch in 0..cfg.epochs {
        for _ in 0..per_epoch {
            let step = history.steps.len();
            let batch_seed = seeds.next_u64();
            let mining_seed = seeds.next_u64();
            let batch = sample_batch(&ds.train, cfg.batch_size, batch_seed)?;
            let inputs = BatchInputs::from_utterances(batch.indices.iter().map(|&i| &ds.train[i]))?;
            let grl_lambda = grl_at(cfg, step, total_steps);
            let opts = LossOptions {
                weights: cfg.weights,
                margin: cfg.margin,
                grl: GrlConfig::new(grl_lambda)
                    .map_err(|e| TrainError::InvalidConfig(e.to_string()))?,
                aam: cfg.aam(),
                mining: match cfg.mining {
                    MiningMode::Hardest => Mining::Hardest,
                    MiningMode::Random => Mining::Random { seed: mining_seed },
                },
            };

            let mut g = Graph::new();
            let bound = params.bind(&mut g);
            let vars = build_losses(&mut g, &bound, &params, &inputs, &opts)?;
            let loss = vars.breakdown(&g, cfg.weights);
            if let Some(component) = loss.non_finite_component() {
                return Err(TrainError::NonFinite {
                    step,
                    component: component.into(),
                });
            }
            let graph_total = g.scalar(vars.total);
            if loss.total.to_bits() != graph_total.to_bits() {
                return Err(TrainError::Decomposition {
                    step,
                    recorded: loss.total,
                    graph: graph_total,
                });
            }
            let grads = g.backward(vars.total).map_err(|e| match e {
                AutogradError::NonFinite { op, pass, .. } => TrainError::NonFinite {
                    step,
                    component: format!("{op} ({pass} pass)"),
                },
                other => TrainError::Optimizer(other.to_string()),
            })?;
            let grads = bound.gradients(&g, &grads);
            optimizer_step(&mut params, &grads, &mut state, &adam)?;

            let record = StepRecord {
                step,
                epoch,
                loss,
                grl_lambda,
            };
            on_step(&record);
            history.steps.push(record);
        }
        if let Some(trials) = &dev_trials {
            history.dev.push(dev_metrics(&params, ds, trials, cfg)?);
        }
    }
    Ok((params, history))
}
