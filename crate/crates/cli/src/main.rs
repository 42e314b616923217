//! Command line front end: generate synthetic graphs, export initial
//! samples, run probing experiments, sweep learner parameters, and compare
//! finished runs.

use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context};
use clap::{Args, Parser, Subcommand};

use graphprobe::config::{build_oracle, build_run_spec, parse_config_file, RawConfig, RunSpec};
use graphprobe::harness::{
    aggregate, default_epsilon_grid, default_k_grid, initial_sample, performance_gain,
    run_experiment, run_sweep, sweep_plan, write_results_csv, write_summary_csv, write_sweep_csv,
    write_weights_csv, TrialStatus, TrialTrace,
};
use graphprobe::learners::KPolicy;

#[derive(Parser)]
#[command(
    name = "graphprobe",
    version,
    about = "Budgeted discovery of hidden networks by sequential node querying"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic graph and write it as an edge list
    Generate(GenerateArgs),
    /// Export the initial sample a trial starts from as node and edge lists
    Sample(SampleArgs),
    /// Run a probing experiment and write the results, summary, and weights CSVs
    Run(ConfigArgs),
    /// Grid-search the heavy-tail learner over subsample counts and exploration rates
    Sweep(SweepArgs),
    /// Compare two run summaries and print the relative gain
    Report(ReportArgs),
}

/// Configuration file plus per-key overrides. Flags win over file values.
#[derive(Args, Debug, Default)]
struct ConfigArgs {
    /// Configuration file (INI-style [oracle]/[sample]/[policy]/[learner]/[run] sections)
    #[arg(long)]
    config: Option<PathBuf>,

    /// Oracle kind: file, er, ba, kregular, or bter
    #[arg(long)]
    source: Option<String>,
    /// Edge list location for the file oracle
    #[arg(long)]
    path: Option<String>,
    /// Node count for synthetic oracles
    #[arg(long)]
    n: Option<usize>,
    /// Edge probability (er)
    #[arg(long)]
    p: Option<f64>,
    /// Edges per arriving node (ba)
    #[arg(long)]
    m: Option<usize>,
    /// Uniform degree (kregular)
    #[arg(long)]
    k: Option<usize>,
    /// Mean degree (bter)
    #[arg(long)]
    avg_degree: Option<f64>,
    /// Clustering of the densest communities (bter, default 0.95)
    #[arg(long)]
    max_cc: Option<f64>,
    /// Global clustering target (bter)
    #[arg(long)]
    target_cc: Option<f64>,

    /// Sampling method: induction or walk
    #[arg(long)]
    method: Option<String>,
    /// Fraction of the oracle's edges in the initial sample
    #[arg(long)]
    edge_fraction: Option<f64>,
    /// Relative slack accepted on the sample's edge target (induction)
    #[arg(long)]
    tolerance: Option<f64>,
    /// Teleport probability (walk)
    #[arg(long)]
    jump_prob: Option<f64>,

    /// Policy: NOL, NOL_HTR, HIGH_DEGREE, HIGH_DEGREE_JUMP, LOW_DEGREE, RANDOM, or KNN_UCB
    #[arg(long)]
    policy: Option<String>,
    /// Initial exploration rate
    #[arg(long)]
    epsilon: Option<f64>,
    /// Whether exploration decays over the budget
    #[arg(long)]
    decay: Option<bool>,

    /// Gradient step size for the online learner
    #[arg(long)]
    alpha: Option<f64>,
    /// Subsample count for the heavy-tail learner: an integer or ln, log2, log10
    #[arg(long)]
    subsamples: Option<String>,
    /// Ridge weight for the heavy-tail learner
    #[arg(long)]
    lambda: Option<f64>,

    /// Probes per trial
    #[arg(long)]
    budget: Option<usize>,
    /// Number of independent trials
    #[arg(long)]
    trials: Option<usize>,
    /// Trial i seeds its generators with base_seed + i
    #[arg(long)]
    base_seed: Option<u64>,
    /// Directory the CSV outputs are written into
    #[arg(long)]
    output_dir: Option<String>,
}

fn set_opt<T: std::fmt::Display>(
    raw: &mut RawConfig,
    key: &str,
    value: &Option<T>,
) -> graphprobe::Result<()> {
    if let Some(v) = value {
        raw.set(key, v.to_string())?;
    }
    Ok(())
}

impl ConfigArgs {
    fn resolve(&self) -> anyhow::Result<RunSpec> {
        let mut raw = match &self.config {
            Some(path) => parse_config_file(path)?,
            None => RawConfig::default(),
        };
        set_opt(&mut raw, "oracle.source", &self.source)?;
        set_opt(&mut raw, "oracle.path", &self.path)?;
        set_opt(&mut raw, "oracle.n", &self.n)?;
        set_opt(&mut raw, "oracle.p", &self.p)?;
        set_opt(&mut raw, "oracle.m", &self.m)?;
        set_opt(&mut raw, "oracle.k", &self.k)?;
        set_opt(&mut raw, "oracle.avg_degree", &self.avg_degree)?;
        set_opt(&mut raw, "oracle.max_cc", &self.max_cc)?;
        set_opt(&mut raw, "oracle.target_cc", &self.target_cc)?;
        set_opt(&mut raw, "sample.method", &self.method)?;
        set_opt(&mut raw, "sample.edge_fraction", &self.edge_fraction)?;
        set_opt(&mut raw, "sample.tolerance", &self.tolerance)?;
        set_opt(&mut raw, "sample.jump_prob", &self.jump_prob)?;
        set_opt(&mut raw, "policy.name", &self.policy)?;
        set_opt(&mut raw, "policy.epsilon", &self.epsilon)?;
        set_opt(&mut raw, "policy.decay", &self.decay)?;
        set_opt(&mut raw, "learner.alpha", &self.alpha)?;
        set_opt(&mut raw, "learner.subsamples", &self.subsamples)?;
        set_opt(&mut raw, "learner.lambda", &self.lambda)?;
        set_opt(&mut raw, "run.budget", &self.budget)?;
        set_opt(&mut raw, "run.trials", &self.trials)?;
        set_opt(&mut raw, "run.base_seed", &self.base_seed)?;
        set_opt(&mut raw, "run.output_dir", &self.output_dir)?;
        Ok(build_run_spec(&raw)?)
    }
}

#[derive(Args)]
struct GenerateArgs {
    /// Model: er, ba, kregular, or bter
    #[arg(long)]
    model: String,
    /// Node count
    #[arg(long)]
    n: usize,
    /// Edge probability (er)
    #[arg(long)]
    p: Option<f64>,
    /// Edges per arriving node (ba)
    #[arg(long)]
    m: Option<usize>,
    /// Uniform degree (kregular)
    #[arg(long)]
    k: Option<usize>,
    /// Mean degree (bter)
    #[arg(long)]
    avg_degree: Option<f64>,
    /// Clustering of the densest communities (bter, default 0.95)
    #[arg(long)]
    max_cc: Option<f64>,
    /// Global clustering target (bter)
    #[arg(long)]
    target_cc: Option<f64>,
    /// Generation seed; `run --base-seed S` on the same model draws the same graph
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Destination edge list
    #[arg(long)]
    out: PathBuf,
}

fn cmd_generate(args: &GenerateArgs) -> anyhow::Result<()> {
    if args.model == "file" {
        bail!("generate needs a synthetic model: er, ba, kregular, or bter");
    }
    let mut raw = RawConfig::default();
    raw.set("oracle.source", &args.model)?;
    set_opt(&mut raw, "oracle.n", &Some(args.n))?;
    set_opt(&mut raw, "oracle.p", &args.p)?;
    set_opt(&mut raw, "oracle.m", &args.m)?;
    set_opt(&mut raw, "oracle.k", &args.k)?;
    set_opt(&mut raw, "oracle.avg_degree", &args.avg_degree)?;
    set_opt(&mut raw, "oracle.max_cc", &args.max_cc)?;
    set_opt(&mut raw, "oracle.target_cc", &args.target_cc)?;
    let graph = build_oracle(&raw)?.realize(args.seed)?;
    graph.write_edge_list(&args.out)?;
    println!(
        "wrote {} nodes / {} edges to {}",
        graph.node_count(),
        graph.edge_count(),
        args.out.display()
    );
    Ok(())
}

#[derive(Args)]
struct SampleArgs {
    #[command(flatten)]
    config: ConfigArgs,
    /// Trial whose initial sample to export
    #[arg(long, default_value_t = 0)]
    trial: usize,
    /// Destination for sampled node ids, one per line
    #[arg(long)]
    out_nodes: PathBuf,
    /// Destination for sampled edges, one "u v" pair per line
    #[arg(long)]
    out_edges: PathBuf,
}

fn cmd_sample(args: &SampleArgs) -> anyhow::Result<()> {
    let spec = args.config.resolve()?;
    let oracle = spec.oracle.realize(spec.experiment.base_seed)?;
    let sub = initial_sample(&oracle, &spec.experiment, args.trial)?;

    let nodes: String = sub.nodes.iter().map(|u| format!("{}\n", u)).collect();
    std::fs::write(&args.out_nodes, nodes)
        .with_context(|| format!("writing {}", args.out_nodes.display()))?;
    let edges: String = sub.edges.iter().map(|(u, v)| format!("{} {}\n", u, v)).collect();
    std::fs::write(&args.out_edges, edges)
        .with_context(|| format!("writing {}", args.out_edges.display()))?;

    println!(
        "trial {} starts from {} nodes / {} edges ({:.2}% of the oracle's edges)",
        args.trial,
        sub.nodes.len(),
        sub.edges.len(),
        100.0 * sub.edges.len() as f64 / oracle.edge_count().max(1) as f64
    );
    Ok(())
}

fn cmd_run(args: &ConfigArgs) -> anyhow::Result<()> {
    let spec = args.resolve()?;
    let oracle = spec.oracle.realize(spec.experiment.base_seed)?;
    let trials = run_experiment(&oracle, &spec.experiment)?;
    let summary = aggregate(&trials)?;

    std::fs::create_dir_all(&spec.output_dir)
        .with_context(|| format!("creating {}", spec.output_dir.display()))?;
    let mut written = vec!["results.csv", "summary.csv"];
    write_results_csv(&spec.output_dir.join("results.csv"), &trials)?;
    write_summary_csv(&spec.output_dir.join("summary.csv"), &summary)?;
    if spec.experiment.policy.is_learned() {
        write_weights_csv(&spec.output_dir.join("weights.csv"), &trials)?;
        written.push("weights.csv");
    }
    if oracle.has_labels() {
        oracle.write_label_map(&spec.output_dir.join("labels.tsv"))?;
        written.push("labels.tsv");
    }

    let mean_final = trials.iter().map(TrialTrace::final_cum_reward).sum::<usize>() as f64
        / trials.len() as f64;
    let exhausted = trials
        .iter()
        .filter(|t| matches!(t.status, TrialStatus::PoolExhausted { .. }))
        .count();
    println!(
        "{} x {} probes of {} on {} nodes / {} edges",
        spec.experiment.trials,
        spec.experiment.budget,
        spec.experiment.policy,
        oracle.node_count(),
        oracle.edge_count()
    );
    if exhausted > 0 {
        println!("{} of {} trials ran out of unprobed nodes early", exhausted, trials.len());
    }
    println!("mean final cumulative reward {:.2}", mean_final);
    println!("wrote {} in {}", written.join(", "), spec.output_dir.display());
    Ok(())
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    config: ConfigArgs,
    /// Subsample counts to try: integers or ln, log2, log10 (default 1..=16, 32, 64, 128, log10, ln, log2)
    #[arg(long, value_delimiter = ',')]
    k_grid: Vec<KPolicy>,
    /// Exploration rates to try (default 0, 0.1, 0.2, 0.3, 0.4)
    #[arg(long, value_delimiter = ',')]
    epsilon_grid: Vec<f64>,
    /// Decay settings to try (default true, false)
    #[arg(long, value_delimiter = ',')]
    decay_grid: Vec<bool>,
}

fn cmd_sweep(args: &SweepArgs) -> anyhow::Result<()> {
    let spec = args.config.resolve()?;
    let oracle = spec.oracle.realize(spec.experiment.base_seed)?;
    let k_grid = if args.k_grid.is_empty() { default_k_grid() } else { args.k_grid.clone() };
    let epsilons =
        if args.epsilon_grid.is_empty() { default_epsilon_grid() } else { args.epsilon_grid.clone() };
    let decays = if args.decay_grid.is_empty() { vec![true, false] } else { args.decay_grid.clone() };

    let cells = sweep_plan(&k_grid, &epsilons, &decays);
    let outcomes = run_sweep(&oracle, &spec.experiment, &cells);

    std::fs::create_dir_all(&spec.output_dir)
        .with_context(|| format!("creating {}", spec.output_dir.display()))?;
    let path = spec.output_dir.join("sweep.csv");
    write_sweep_csv(&path, &outcomes)?;

    let failed = outcomes.iter().filter(|o| o.status != "ok").count();
    println!("swept {} cells ({} failed), wrote {}", outcomes.len(), failed, path.display());
    let best = outcomes
        .iter()
        .filter_map(|o| o.mean_final_cum_reward.map(|mean| (mean, o)))
        .max_by(|a, b| a.0.total_cmp(&b.0));
    if let Some((mean, outcome)) = best {
        println!(
            "best cell: subsamples = {}, epsilon = {}, decay = {}, mean final cumulative reward {:.2}",
            outcome.cell.k_policy, outcome.cell.epsilon, outcome.cell.decay, mean
        );
    }
    Ok(())
}

#[derive(Args)]
struct ReportArgs {
    /// summary.csv of the baseline run
    #[arg(long)]
    baseline: PathBuf,
    /// summary.csv of the candidate run
    #[arg(long)]
    candidate: PathBuf,
}

fn final_mean_cum_reward(path: &Path) -> anyhow::Result<f64> {
    let text =
        std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let mut lines = text.lines();
    let header = lines.next().unwrap_or("");
    if !header.starts_with("t,mean_cum_reward") {
        bail!("{} does not look like a run summary (header {:?})", path.display(), header);
    }
    let last = lines
        .filter(|l| !l.trim().is_empty())
        .last()
        .ok_or_else(|| anyhow!("{} has no data rows", path.display()))?;
    let field = last
        .split(',')
        .nth(1)
        .ok_or_else(|| anyhow!("{} has a malformed row {:?}", path.display(), last))?;
    field
        .parse()
        .with_context(|| format!("{}: bad mean_cum_reward {:?}", path.display(), field))
}

fn cmd_report(args: &ReportArgs) -> anyhow::Result<()> {
    let base = final_mean_cum_reward(&args.baseline)?;
    let cand = final_mean_cum_reward(&args.candidate)?;
    let gain = performance_gain(cand, base)?;
    println!("baseline  {}: final mean cumulative reward {}", args.baseline.display(), base);
    println!("candidate {}: final mean cumulative reward {}", args.candidate.display(), cand);
    println!("gain {:+.2}%", gain);
    Ok(())
}

fn main() -> anyhow::Result<()> {
    match &Cli::parse().command {
        Command::Generate(args) => cmd_generate(args),
        Command::Sample(args) => cmd_sample(args),
        Command::Run(args) => cmd_run(args),
        Command::Sweep(args) => cmd_sweep(args),
        Command::Report(args) => cmd_report(args),
    }
}
