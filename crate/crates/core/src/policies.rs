//! Probe-selection policies: epsilon-greedy exploration plus a pluggable
//! exploitation score (degree heuristics, learned linear models, KNN-UCB).

use rand::Rng;

use crate::features::compute_features;
use crate::graph::NodeId;
use crate::observed::ObservedState;

/// The seven selection strategies the harness can run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PolicyKind {
    Nol,
    NolHtr,
    HighDegree,
    HighDegreeJump,
    LowDegree,
    Random,
    KnnUcb,
}

impl PolicyKind {
    pub const ALL: [PolicyKind; 7] = [
        PolicyKind::Nol,
        PolicyKind::NolHtr,
        PolicyKind::HighDegree,
        PolicyKind::HighDegreeJump,
        PolicyKind::LowDegree,
        PolicyKind::Random,
        PolicyKind::KnnUcb,
    ];

    pub fn is_learned(self) -> bool {
        matches!(self, PolicyKind::Nol | PolicyKind::NolHtr)
    }

    /// Exploration rate and decay flag. Learned policies take these from
    /// configuration; the baselines pin them.
    pub fn fixed_epsilon(self) -> Option<(f64, bool)> {
        match self {
            PolicyKind::Nol | PolicyKind::NolHtr => None,
            PolicyKind::HighDegree | PolicyKind::LowDegree | PolicyKind::KnnUcb => {
                Some((0.0, false))
            }
            PolicyKind::HighDegreeJump => Some((0.3, false)),
            PolicyKind::Random => Some((1.0, false)),
        }
    }
}

impl std::str::FromStr for PolicyKind {
    type Err = crate::error::Error;

    fn from_str(s: &str) -> crate::error::Result<Self> {
        match s.to_ascii_uppercase().replace('-', "_").as_str() {
            "NOL" => Ok(PolicyKind::Nol),
            "NOL_HTR" => Ok(PolicyKind::NolHtr),
            "HIGH_DEGREE" => Ok(PolicyKind::HighDegree),
            "HIGH_DEGREE_JUMP" => Ok(PolicyKind::HighDegreeJump),
            "LOW_DEGREE" => Ok(PolicyKind::LowDegree),
            "RANDOM" => Ok(PolicyKind::Random),
            "KNN_UCB" => Ok(PolicyKind::KnnUcb),
            other => Err(crate::error::Error::InvalidConfig(format!(
                "unknown policy {:?}",
                other
            ))),
        }
    }
}

impl std::fmt::Display for PolicyKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let name = match self {
            PolicyKind::Nol => "NOL",
            PolicyKind::NolHtr => "NOL_HTR",
            PolicyKind::HighDegree => "HIGH_DEGREE",
            PolicyKind::HighDegreeJump => "HIGH_DEGREE_JUMP",
            PolicyKind::LowDegree => "LOW_DEGREE",
            PolicyKind::Random => "RANDOM",
            PolicyKind::KnnUcb => "KNN_UCB",
        };
        f.write_str(name)
    }
}

/// Exploration rate before probe `t` of `budget`:
/// epsilon0 * exp(-t / budget) when decaying, else epsilon0.
pub fn epsilon_at(epsilon0: f64, t: usize, budget: usize, decay: bool) -> f64 {
    if decay && budget > 0 {
        epsilon0 * (-(t as f64) / budget as f64).exp()
    } else {
        epsilon0
    }
}

/// Uniform exploration draw: from the unprobed remnant of the initial sample
/// while any is left, afterwards from all unprobed nodes.
pub fn explore_pick(state: &ObservedState, rng: &mut impl Rng) -> Option<NodeId> {
    let pool = if state.initial_unprobed().is_empty() {
        state.unprobed()
    } else {
        state.initial_unprobed()
    };
    if pool.is_empty() {
        None
    } else {
        Some(pool[rng.random_range(0..pool.len())])
    }
}

/// Exploitation scoring rule over unprobed candidates.
pub enum Scorer<'a> {
    /// Observed degree, highest first.
    Degree,
    /// Observed degree, lowest first.
    NegDegree,
    /// Dot product of the feature vector with a weight vector.
    Linear(&'a [f64]),
    /// KNN-UCB upper confidence score against past probe outcomes.
    KnnUcb(&'a KnnHistory),
}

impl Scorer<'_> {
    pub fn score(&self, state: &ObservedState, u: NodeId) -> f64 {
        match self {
            Scorer::Degree => state.degree(u) as f64,
            Scorer::NegDegree => -(state.degree(u) as f64),
            Scorer::Linear(theta) => {
                crate::learners::predict(theta, &compute_features(state, u).as_array())
            }
            Scorer::KnnUcb(history) => history.score(&knn_features(state, u)),
        }
    }
}

/// Highest-scoring unprobed node, ties broken uniformly at random.
pub fn exploit_pick(state: &ObservedState, scorer: &Scorer, rng: &mut impl Rng) -> Option<NodeId> {
    let mut best = f64::NEG_INFINITY;
    let mut ties: Vec<NodeId> = Vec::new();
    for &u in state.unprobed() {
        let s = scorer.score(state, u);
        if s > best {
            best = s;
            ties.clear();
            ties.push(u);
        } else if s == best {
            ties.push(u);
        }
    }
    if ties.is_empty() {
        None
    } else {
        Some(ties[rng.random_range(0..ties.len())])
    }
}

/// Raw covariates for the KNN-UCB baseline: degree, mean neighbor degree,
/// median neighbor degree, fraction of neighbors probed.
pub fn knn_features(state: &ObservedState, u: NodeId) -> [f64; 4] {
    let nbrs = state.neighbors(u);
    if nbrs.is_empty() {
        return [0.0; 4];
    }
    let mut degrees: Vec<f64> = nbrs.iter().map(|&v| state.degree(v) as f64).collect();
    degrees.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mean = degrees.iter().sum::<f64>() / degrees.len() as f64;
    let mid = degrees.len() / 2;
    let median = if degrees.len() % 2 == 1 {
        degrees[mid]
    } else {
        (degrees[mid - 1] + degrees[mid]) / 2.0
    };
    let probed_frac = state.probed_neighbor_count(u) as f64 / nbrs.len() as f64;
    [nbrs.len() as f64, mean, median, probed_frac]
}

/// Memory of past probes for KNN-UCB: covariates at probe time and reward.
#[derive(Debug, Clone)]
pub struct KnnHistory {
    entries: Vec<([f64; 4], f64)>,
    neighbors: usize,
    ucb_weight: f64,
}

impl Default for KnnHistory {
    fn default() -> Self {
        KnnHistory::new(20, 2.0)
    }
}

impl KnnHistory {
    pub fn new(neighbors: usize, ucb_weight: f64) -> Self {
        KnnHistory {
            entries: Vec::new(),
            neighbors,
            ucb_weight,
        }
    }

    pub fn push(&mut self, x: [f64; 4], reward: f64) {
        self.entries.push((x, reward));
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Inverse-distance-weighted mean reward of the nearest entries plus an
    /// exploration bonus proportional to their mean distance. An empty
    /// history scores everything infinitely high.
    pub fn score(&self, x: &[f64; 4]) -> f64 {
        if self.entries.is_empty() {
            return f64::INFINITY;
        }
        let mut dists: Vec<(f64, f64)> = self
            .entries
            .iter()
            .map(|(e, r)| {
                let d = e
                    .iter()
                    .zip(x)
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum::<f64>()
                    .sqrt();
                (d, *r)
            })
            .collect();
        dists.sort_by(|a, b| a.partial_cmp(b).unwrap());
        dists.truncate(self.neighbors);
        let mut weight_sum = 0.0;
        let mut weighted_reward = 0.0;
        let mut dist_sum = 0.0;
        for &(d, r) in &dists {
            let w = 1.0 / (d + 1e-12);
            weight_sum += w;
            weighted_reward += w * r;
            dist_sum += d;
        }
        let estimate = weighted_reward / weight_sum;
        let spread = dist_sum / dists.len() as f64;
        estimate + self.ucb_weight * spread
    }
}
