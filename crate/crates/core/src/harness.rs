//! Experiment driver: runs probe trials, logs per-step traces, aggregates
//! across trials, and writes the CSV outputs.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::features::{compute_features, FEATURE_DIM};
use crate::generators::{generate, GraphModel};
use crate::graph::{load_edge_list, NodeId, OracleGraph};
use crate::learners::{htr_fit, k_from_policy, nol_update, predict, KPolicy, SampleBuffer};
use crate::observed::ObservedState;
use crate::policies::{epsilon_at, explore_pick, exploit_pick, knn_features, KnnHistory, PolicyKind, Scorer};
use crate::samplers::{sample, SampleConfig, SampledSubgraph};

// Every random decision draws from a fixed ChaCha stream of the trial seed,
// so adding draws to one concern never perturbs the others.
const STREAM_SAMPLING: u64 = 0;
const STREAM_EXPLORATION: u64 = 1;
const STREAM_MODEL: u64 = 2;
const STREAM_GENERATION: u64 = 3;

fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Where the hidden graph comes from.
#[derive(Debug, Clone, PartialEq)]
pub enum OracleSource {
    File(PathBuf),
    Model(GraphModel),
}

impl OracleSource {
    /// Loads or generates the oracle. Generation is seeded by `seed` on its
    /// own stream, so it never shares draws with any trial.
    pub fn realize(&self, seed: u64) -> Result<OracleGraph> {
        match self {
            OracleSource::File(path) => load_edge_list(path),
            OracleSource::Model(model) => generate(model, &mut stream_rng(seed, STREAM_GENERATION)),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub policy: PolicyKind,
    /// Number of probes per trial.
    pub budget: usize,
    pub trials: usize,
    /// Trial i seeds its generators with base_seed + i.
    pub base_seed: u64,
    /// Initial exploration rate (learned policies; baselines pin their own).
    pub epsilon: f64,
    pub epsilon_decay: bool,
    /// Gradient step size for the online learner.
    pub alpha: f64,
    /// Subsample count rule for the heavy-tail learner.
    pub k_policy: KPolicy,
    /// Ridge weight for the heavy-tail learner.
    pub lambda: f64,
    pub sample: SampleConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            policy: PolicyKind::NolHtr,
            budget: 500,
            trials: 10,
            base_seed: 0,
            epsilon: 0.3,
            epsilon_decay: true,
            alpha: 0.01,
            k_policy: KPolicy::Ln,
            lambda: 0.0,
            sample: SampleConfig::default(),
        }
    }
}

/// One logged probe step. Row `t = 0` records the initial sample and leaves
/// the probe fields empty.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRow {
    pub t: usize,
    pub node: Option<NodeId>,
    pub reward: Option<usize>,
    pub cum_reward: usize,
    pub prediction: Option<f64>,
    pub pred_error: Option<f64>,
    pub epsilon: f64,
    pub explored: Option<bool>,
    pub n_observed_nodes: usize,
    pub n_observed_edges: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TrialStatus {
    Completed,
    /// Every observed node was already probed before the budget ran out.
    PoolExhausted { step: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialTrace {
    pub trial: usize,
    pub rows: Vec<TraceRow>,
    /// Weight snapshots per row, present for learned policies.
    pub weights: Option<Vec<[f64; FEATURE_DIM]>>,
    pub status: TrialStatus,
}

impl TrialTrace {
    pub fn final_cum_reward(&self) -> usize {
        self.rows.last().map_or(0, |r| r.cum_reward)
    }
}

/// The initial sample a given trial starts from. `run_trial` opens with
/// exactly this subgraph; exposing it lets callers inspect or export what a
/// trial saw before any probing.
pub fn initial_sample(
    oracle: &OracleGraph,
    config: &ExperimentConfig,
    trial: usize,
) -> Result<SampledSubgraph> {
    let trial_seed = config.base_seed.wrapping_add(trial as u64);
    sample(oracle, &config.sample, &mut stream_rng(trial_seed, STREAM_SAMPLING))
}

/// Runs one probe trial. Randomness comes from three streams of
/// `base_seed + trial`: initial sampling, exploration coin flips and picks,
/// and model randomness (weight init, subsample shuffles, tie breaking).
pub fn run_trial(oracle: &OracleGraph, config: &ExperimentConfig, trial: usize) -> Result<TrialTrace> {
    let trial_seed = config.base_seed.wrapping_add(trial as u64);
    let mut rng_explore = stream_rng(trial_seed, STREAM_EXPLORATION);
    let mut rng_model = stream_rng(trial_seed, STREAM_MODEL);

    let sampled = initial_sample(oracle, config, trial)?;
    let mut state = ObservedState::new(oracle.node_count(), &sampled.nodes, &sampled.edges);

    let policy = config.policy;
    let (epsilon0, decay) = policy
        .fixed_epsilon()
        .unwrap_or((config.epsilon, config.epsilon_decay));
    if !(0.0..=1.0).contains(&epsilon0) {
        return Err(Error::InvalidConfig(format!("epsilon {} not in [0, 1]", epsilon0)));
    }

    // The online learner starts from random weights; the heavy-tail learner
    // is refit from its buffer, so it starts at zero and ranks by degree
    // until the buffer reaches the feature dimension.
    let mut theta: [f64; FEATURE_DIM] = match policy {
        PolicyKind::Nol => std::array::from_fn(|_| rng_model.random::<f64>()),
        _ => [0.0; FEATURE_DIM],
    };
    let mut buffer = SampleBuffer::default();
    let mut knn = KnnHistory::default();

    let mut rows = Vec::with_capacity(config.budget + 1);
    rows.push(TraceRow {
        t: 0,
        node: None,
        reward: None,
        cum_reward: 0,
        prediction: None,
        pred_error: None,
        epsilon: epsilon_at(epsilon0, 0, config.budget, decay),
        explored: None,
        n_observed_nodes: state.node_count(),
        n_observed_edges: state.edge_count(),
    });
    let mut weights = policy.is_learned().then(|| vec![theta]);

    let initial_nodes = state.node_count();
    let mut cum_reward = 0;
    let mut status = TrialStatus::Completed;

    for t in 1..=config.budget {
        let eps = epsilon_at(epsilon0, t, config.budget, decay);
        let explore = rng_explore.random::<f64>() < eps;
        let pick = if explore {
            explore_pick(&state, &mut rng_explore)
        } else {
            let scorer = match policy {
                PolicyKind::Nol => Scorer::Linear(&theta),
                PolicyKind::NolHtr => {
                    if buffer.len() < FEATURE_DIM {
                        Scorer::Degree
                    } else {
                        Scorer::Linear(&theta)
                    }
                }
                PolicyKind::HighDegree | PolicyKind::HighDegreeJump | PolicyKind::Random => {
                    Scorer::Degree
                }
                PolicyKind::LowDegree => Scorer::NegDegree,
                PolicyKind::KnnUcb => Scorer::KnnUcb(&knn),
            };
            exploit_pick(&state, &scorer, &mut rng_model)
        };
        let Some(u) = pick else {
            status = TrialStatus::PoolExhausted { step: t };
            break;
        };

        let phi = compute_features(&state, u).as_array();
        let knn_x = knn_features(&state, u);
        let prediction = policy.is_learned().then(|| predict(&theta, &phi));

        let reward = state.probe(u, oracle)?;
        cum_reward += reward;

        match policy {
            PolicyKind::Nol => nol_update(&mut theta, &phi, reward as f64, config.alpha),
            PolicyKind::NolHtr => {
                buffer.append(&phi, reward as f64);
                if buffer.len() >= FEATURE_DIM {
                    let (x, y) = buffer.to_matrices();
                    let k = k_from_policy(config.k_policy, buffer.len());
                    let w = htr_fit(&x, &y, k, config.lambda, &mut rng_model)?;
                    theta = std::array::from_fn(|i| w[i]);
                }
            }
            PolicyKind::KnnUcb => knn.push(knn_x, reward as f64),
            _ => {}
        }
        if let Some(ws) = &mut weights {
            ws.push(theta);
        }

        rows.push(TraceRow {
            t,
            node: Some(u),
            reward: Some(reward),
            cum_reward,
            prediction,
            pred_error: prediction.map(|p| (reward as f64 - p).abs()),
            epsilon: eps,
            explored: Some(explore),
            n_observed_nodes: state.node_count(),
            n_observed_edges: state.edge_count(),
        });
    }

    debug_assert_eq!(initial_nodes + cum_reward, state.node_count());
    Ok(TrialTrace {
        trial,
        rows,
        weights,
        status,
    })
}

/// Runs all trials of the configuration, in parallel, in trial order.
pub fn run_experiment(oracle: &OracleGraph, config: &ExperimentConfig) -> Result<Vec<TrialTrace>> {
    (0..config.trials)
        .into_par_iter()
        .map(|trial| run_trial(oracle, config, trial))
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub t: usize,
    pub mean_cum_reward: f64,
    pub std_cum_reward: f64,
    pub mean_cum_abs_err: f64,
    pub std_cum_abs_err: f64,
}

fn mean_and_sample_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Per-step mean and sample standard deviation of cumulative reward and
/// cumulative absolute prediction error across trials. All trials must have
/// logged the same number of rows.
pub fn aggregate(trials: &[TrialTrace]) -> Result<Vec<SummaryRow>> {
    let Some(first) = trials.first() else {
        return Ok(Vec::new());
    };
    for trace in trials {
        if trace.rows.len() != first.rows.len() {
            return Err(Error::UnequalTraceLengths(first.rows.len(), trace.rows.len()));
        }
    }
    let mut summary = Vec::with_capacity(first.rows.len());
    let mut cum_errs = vec![0.0; trials.len()];
    for (t, _) in first.rows.iter().enumerate() {
        let cums: Vec<f64> = trials.iter().map(|tr| tr.rows[t].cum_reward as f64).collect();
        for (i, trace) in trials.iter().enumerate() {
            cum_errs[i] += trace.rows[t].pred_error.unwrap_or(0.0);
        }
        let (mean_cum_reward, std_cum_reward) = mean_and_sample_std(&cums);
        let (mean_cum_abs_err, std_cum_abs_err) = mean_and_sample_std(&cum_errs);
        summary.push(SummaryRow {
            t: first.rows[t].t,
            mean_cum_reward,
            std_cum_reward,
            mean_cum_abs_err,
            std_cum_abs_err,
        });
    }
    Ok(summary)
}

/// Relative improvement of a cumulative reward over a baseline, in percent.
pub fn performance_gain(candidate: f64, baseline: f64) -> Result<f64> {
    if baseline <= 0.0 {
        return Err(Error::NonPositiveBaseline(baseline));
    }
    Ok((candidate - baseline) / baseline * 100.0)
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    let file = File::create(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    Ok(BufWriter::new(file))
}

fn finish(mut w: BufWriter<File>, path: &Path) -> Result<()> {
    w.flush().map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

macro_rules! emit {
    ($w:expr, $path:expr, $($arg:tt)*) => {
        write!($w, $($arg)*).map_err(|source| Error::Io { path: $path.to_path_buf(), source })?
    };
}

fn opt<T: std::fmt::Display>(v: &Option<T>) -> String {
    v.as_ref().map(ToString::to_string).unwrap_or_default()
}

/// Per-step trace of every trial.
/// Columns: trial,t,node,reward,cum_reward,prediction,pred_error,epsilon,
/// explored,n_observed_nodes,n_observed_edges.
pub fn write_results_csv(path: &Path, trials: &[TrialTrace]) -> Result<()> {
    let mut w = create(path)?;
    emit!(
        w,
        path,
        "trial,t,node,reward,cum_reward,prediction,pred_error,epsilon,explored,n_observed_nodes,n_observed_edges\n"
    );
    for trace in trials {
        for r in &trace.rows {
            emit!(
                w,
                path,
                "{},{},{},{},{},{},{},{},{},{},{}\n",
                trace.trial,
                r.t,
                opt(&r.node),
                opt(&r.reward),
                r.cum_reward,
                opt(&r.prediction),
                opt(&r.pred_error),
                r.epsilon,
                opt(&r.explored),
                r.n_observed_nodes,
                r.n_observed_edges
            );
        }
    }
    finish(w, path)
}

/// Weight snapshots of learned policies.
/// Columns: trial,t,theta_0..theta_4. No-op rows for trials without weights.
pub fn write_weights_csv(path: &Path, trials: &[TrialTrace]) -> Result<()> {
    let mut w = create(path)?;
    emit!(w, path, "trial,t,theta_0,theta_1,theta_2,theta_3,theta_4\n");
    for trace in trials {
        let Some(weights) = &trace.weights else {
            continue;
        };
        for (t, theta) in weights.iter().enumerate() {
            emit!(
                w,
                path,
                "{},{},{},{},{},{},{}\n",
                trace.trial,
                t,
                theta[0],
                theta[1],
                theta[2],
                theta[3],
                theta[4]
            );
        }
    }
    finish(w, path)
}

/// Cross-trial aggregate.
/// Columns: t,mean_cum_reward,std_cum_reward,mean_cum_abs_err,std_cum_abs_err.
pub fn write_summary_csv(path: &Path, summary: &[SummaryRow]) -> Result<()> {
    let mut w = create(path)?;
    emit!(w, path, "t,mean_cum_reward,std_cum_reward,mean_cum_abs_err,std_cum_abs_err\n");
    for r in summary {
        emit!(
            w,
            path,
            "{},{},{},{},{}\n",
            r.t,
            r.mean_cum_reward,
            r.std_cum_reward,
            r.mean_cum_abs_err,
            r.std_cum_abs_err
        );
    }
    finish(w, path)
}

/// One grid point of the heavy-tail parameter sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepCell {
    pub k_policy: KPolicy,
    pub epsilon: f64,
    pub decay: bool,
}

#[derive(Debug, Clone)]
pub struct SweepOutcome {
    pub cell: SweepCell,
    /// Mean final cumulative reward across trials, when the cell ran.
    pub mean_final_cum_reward: Option<f64>,
    /// "ok" or the failure rendered as text.
    pub status: String,
}

pub fn default_k_grid() -> Vec<KPolicy> {
    (1..=16)
        .chain([32, 64, 128])
        .map(KPolicy::Constant)
        .chain([KPolicy::Log10, KPolicy::Ln, KPolicy::Log2])
        .collect()
}

pub fn default_epsilon_grid() -> Vec<f64> {
    vec![0.0, 0.1, 0.2, 0.3, 0.4]
}

/// Cross product of the grids, k-major, epsilon next, decay last.
pub fn sweep_plan(k_grid: &[KPolicy], epsilons: &[f64], decays: &[bool]) -> Vec<SweepCell> {
    let mut cells = Vec::with_capacity(k_grid.len() * epsilons.len() * decays.len());
    for &k_policy in k_grid {
        for &epsilon in epsilons {
            for &decay in decays {
                cells.push(SweepCell {
                    k_policy,
                    epsilon,
                    decay,
                });
            }
        }
    }
    cells
}

/// Runs the heavy-tail policy once per cell, reusing the base configuration
/// (same seeds in every cell). Failed cells are recorded, not fatal.
pub fn run_sweep(
    oracle: &OracleGraph,
    base: &ExperimentConfig,
    cells: &[SweepCell],
) -> Vec<SweepOutcome> {
    cells
        .iter()
        .map(|&cell| {
            let config = ExperimentConfig {
                policy: PolicyKind::NolHtr,
                epsilon: cell.epsilon,
                epsilon_decay: cell.decay,
                k_policy: cell.k_policy,
                ..base.clone()
            };
            match run_experiment(oracle, &config) {
                Ok(trials) => {
                    let mean = trials.iter().map(TrialTrace::final_cum_reward).sum::<usize>() as f64
                        / trials.len().max(1) as f64;
                    SweepOutcome {
                        cell,
                        mean_final_cum_reward: Some(mean),
                        status: "ok".to_string(),
                    }
                }
                Err(err) => SweepOutcome {
                    cell,
                    mean_final_cum_reward: None,
                    status: err.to_string().replace(',', ";"),
                },
            }
        })
        .collect()
}

/// Columns: k,epsilon,decay,status,mean_final_cum_reward.
pub fn write_sweep_csv(path: &Path, outcomes: &[SweepOutcome]) -> Result<()> {
    let mut w = create(path)?;
    emit!(w, path, "k,epsilon,decay,status,mean_final_cum_reward\n");
    for o in outcomes {
        emit!(
            w,
            path,
            "{},{},{},{},{}\n",
            o.cell.k_policy,
            o.cell.epsilon,
            o.cell.decay,
            o.status,
            opt(&o.mean_final_cum_reward)
        );
    }
    finish(w, path)
}
