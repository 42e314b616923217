//! Initial-sample construction: the part of the oracle handed to the
//! experiment before any probing happens.

use std::collections::HashSet;

use rand::Rng;

use crate::error::{Error, Result};
use crate::graph::{NodeId, OracleGraph};

/// Nodes and edges revealed to the experiment at time zero.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SampledSubgraph {
    pub nodes: Vec<NodeId>,
    pub edges: Vec<(NodeId, NodeId)>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SampleMethod {
    NodeInduction,
    RandomWalk,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SampleConfig {
    pub method: SampleMethod,
    /// Fraction of the oracle's edges the sample should contain.
    pub edge_fraction: f64,
    /// Relative slack on the edge target accepted by node induction.
    pub tolerance: f64,
    /// Teleport probability for the random walk.
    pub jump_prob: f64,
}

impl Default for SampleConfig {
    fn default() -> Self {
        SampleConfig {
            method: SampleMethod::NodeInduction,
            edge_fraction: 0.01,
            tolerance: 0.02,
            jump_prob: 0.15,
        }
    }
}

pub fn sample(oracle: &OracleGraph, config: &SampleConfig, rng: &mut impl Rng) -> Result<SampledSubgraph> {
    match config.method {
        SampleMethod::NodeInduction => {
            node_sample_induction(oracle, config.edge_fraction, config.tolerance, rng)
        }
        SampleMethod::RandomWalk => {
            random_walk_jump(oracle, config.edge_fraction, config.jump_prob, rng)
        }
    }
}

fn induced_edges(oracle: &OracleGraph, in_sample: &[bool], nodes: &[NodeId]) -> Vec<(NodeId, NodeId)> {
    let mut edges = Vec::new();
    for &u in nodes {
        for &v in oracle.neighbors(u) {
            if u < v && in_sample[v] {
                edges.push((u, v));
            }
        }
    }
    edges
}

/// Samples nodes uniformly and keeps the edges among them, re-adjusting the
/// node count until the induced edge count lands within `tolerance`
/// (relative) of `edge_fraction * |E|`. Errs after 50 failed adjustments.
pub fn node_sample_induction(
    oracle: &OracleGraph,
    edge_fraction: f64,
    tolerance: f64,
    rng: &mut impl Rng,
) -> Result<SampledSubgraph> {
    if !(0.0..=1.0).contains(&edge_fraction) {
        return Err(Error::InvalidConfig(format!(
            "edge fraction {} not in [0, 1]",
            edge_fraction
        )));
    }
    let n = oracle.node_count();
    let target = edge_fraction * oracle.edge_count() as f64;
    // Induced edge counts grow roughly quadratically in the node count.
    let mut guess = ((n as f64 * edge_fraction.sqrt()).round() as usize).clamp(1, n);

    let mut achieved = 0.0;
    for _ in 0..50 {
        let mut nodes: Vec<NodeId> = rand::seq::index::sample(rng, n, guess).into_iter().collect();
        nodes.sort_unstable();
        let mut in_sample = vec![false; n];
        for &u in &nodes {
            in_sample[u] = true;
        }
        let edges = induced_edges(oracle, &in_sample, &nodes);
        achieved = edges.len() as f64;
        if (achieved - target).abs() <= tolerance * target {
            return Ok(SampledSubgraph { nodes, edges });
        }
        guess = if achieved == 0.0 {
            (guess * 2).clamp(1, n)
        } else {
            ((guess as f64 * (target / achieved).sqrt()).round() as usize).clamp(1, n)
        };
    }
    Err(Error::SampleTargetUnreachable {
        iterations: 50,
        achieved: achieved as usize,
        target,
    })
}

/// Walks the oracle recording traversed edges, teleporting with probability
/// `jump_prob` (teleports record only the landing node), until the sample
/// holds `edge_fraction * |E|` distinct edges. A stuck node forces a jump.
pub fn random_walk_jump(
    oracle: &OracleGraph,
    edge_fraction: f64,
    jump_prob: f64,
    rng: &mut impl Rng,
) -> Result<SampledSubgraph> {
    if !(0.0..=1.0).contains(&edge_fraction) {
        return Err(Error::InvalidConfig(format!(
            "edge fraction {} not in [0, 1]",
            edge_fraction
        )));
    }
    if !(0.0..=1.0).contains(&jump_prob) {
        return Err(Error::InvalidConfig(format!(
            "jump probability {} not in [0, 1]",
            jump_prob
        )));
    }
    let n = oracle.node_count();
    if n == 0 {
        return Ok(SampledSubgraph { nodes: Vec::new(), edges: Vec::new() });
    }
    let target = (edge_fraction * oracle.edge_count() as f64).round() as usize;

    let mut seen_nodes = vec![false; n];
    let mut nodes: Vec<NodeId> = Vec::new();
    let mut seen_edges: HashSet<(NodeId, NodeId)> = HashSet::new();
    let mut edges: Vec<(NodeId, NodeId)> = Vec::new();
    let visit = |u: NodeId, seen_nodes: &mut Vec<bool>, nodes: &mut Vec<NodeId>| {
        if !seen_nodes[u] {
            seen_nodes[u] = true;
            nodes.push(u);
        }
    };

    let mut current = rng.random_range(0..n);
    visit(current, &mut seen_nodes, &mut nodes);

    let budget = 200 * target + 1000;
    let mut steps = 0;
    while edges.len() < target {
        if steps >= budget {
            return Err(Error::WalkBudgetExhausted {
                steps,
                achieved: edges.len(),
                target,
            });
        }
        steps += 1;
        let degree = oracle.degree(current);
        if degree == 0 || rng.random::<f64>() < jump_prob {
            current = rng.random_range(0..n);
            visit(current, &mut seen_nodes, &mut nodes);
            continue;
        }
        let next = oracle.neighbors(current)[rng.random_range(0..degree)];
        let key = if current < next { (current, next) } else { (next, current) };
        if seen_edges.insert(key) {
            edges.push(key);
        }
        visit(next, &mut seen_nodes, &mut nodes);
        current = next;
    }

    nodes.sort_unstable();
    edges.sort_unstable();
    Ok(SampledSubgraph { nodes, edges })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators::{gen_ba, gen_er};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    fn complete(n: usize) -> OracleGraph {
        let mut edges = Vec::new();
        for u in 0..n {
            for v in (u + 1)..n {
                edges.push((u, v));
            }
        }
        OracleGraph::from_edges(n, edges)
    }

    #[test]
    fn full_fraction_returns_whole_graph() {
        let oracle = gen_er(100, 0.05, &mut rng(1)).unwrap();
        let s = node_sample_induction(&oracle, 1.0, 0.02, &mut rng(2)).unwrap();
        assert_eq!(s.nodes.len(), 100);
        assert_eq!(s.edges.len(), oracle.edge_count());
    }

    #[test]
    fn complete_graph_percent_sample() {
        // K100 has 4950 edges; a 1% target (49.5) sits between C(10,2)=45
        // and C(11,2)=55, so a loose tolerance is needed to land.
        let oracle = complete(100);
        let s = node_sample_induction(&oracle, 0.01, 0.15, &mut rng(3)).unwrap();
        assert!(s.nodes.len() == 10 || s.nodes.len() == 11, "{} nodes", s.nodes.len());
        let k = s.nodes.len();
        assert_eq!(s.edges.len(), k * (k - 1) / 2);
    }

    #[test]
    fn tight_tolerance_on_lattice_target_errors() {
        let oracle = complete(100);
        let err = node_sample_induction(&oracle, 0.01, 0.02, &mut rng(3));
        assert!(matches!(err, Err(Error::SampleTargetUnreachable { .. })));
    }

    #[test]
    fn induction_converges_on_heterogeneous_graphs() {
        let oracle = gen_ba(2000, 3, &mut rng(10)).unwrap();
        let target = 0.05 * oracle.edge_count() as f64;
        for seed in 0..10 {
            let s = node_sample_induction(&oracle, 0.05, 0.02, &mut rng(100 + seed)).unwrap();
            let achieved = s.edges.len() as f64;
            assert!(
                (achieved - target).abs() <= 0.02 * target,
                "seed {}: achieved {} target {}",
                seed,
                achieved,
                target
            );
            for &(u, v) in &s.edges {
                assert!(oracle.has_edge(u, v));
                assert!(s.nodes.binary_search(&u).is_ok());
                assert!(s.nodes.binary_search(&v).is_ok());
            }
        }
    }

    #[test]
    fn walk_collects_path_edges() {
        let oracle = OracleGraph::from_edges(3, vec![(0, 1), (1, 2)]);
        let s = random_walk_jump(&oracle, 1.0, 0.0, &mut rng(4)).unwrap();
        assert_eq!(s.edges, vec![(0, 1), (1, 2)]);
        assert_eq!(s.nodes, vec![0, 1, 2]);
    }

    #[test]
    fn walk_with_certain_jump_never_finds_edges() {
        let oracle = OracleGraph::from_edges(3, vec![(0, 1), (1, 2)]);
        let err = random_walk_jump(&oracle, 1.0, 1.0, &mut rng(4));
        match err {
            Err(Error::WalkBudgetExhausted { achieved, target, .. }) => {
                assert_eq!(achieved, 0);
                assert_eq!(target, 2);
            }
            other => panic!("expected budget exhaustion, got {:?}", other.map(|_| ())),
        }
    }

    #[test]
    fn walk_jumps_out_of_isolated_nodes() {
        // Node 2 is isolated; a walk landing there must teleport, not stall.
        let oracle = OracleGraph::from_edges(4, vec![(0, 1), (1, 3), (0, 3)]);
        let s = random_walk_jump(&oracle, 1.0, 0.3, &mut rng(6)).unwrap();
        assert_eq!(s.edges.len(), 3);
    }

    #[test]
    fn walk_determinism() {
        let oracle = gen_er(300, 0.03, &mut rng(8)).unwrap();
        let a = random_walk_jump(&oracle, 0.3, 0.15, &mut rng(9)).unwrap();
        let b = random_walk_jump(&oracle, 0.3, 0.15, &mut rng(9)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn sample_dispatch_matches_method() {
        let oracle = gen_er(200, 0.05, &mut rng(12)).unwrap();
        let config = SampleConfig {
            method: SampleMethod::RandomWalk,
            edge_fraction: 0.2,
            ..SampleConfig::default()
        };
        let s = sample(&oracle, &config, &mut rng(13)).unwrap();
        let target = (0.2 * oracle.edge_count() as f64).round() as usize;
        assert_eq!(s.edges.len(), target);
    }
}
