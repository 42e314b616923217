//! Node features fed to the learned policies.
//!
//! Every feature is normalized into [0, 1] against the current observed
//! state, so a weight vector of (1, 0, 0, 0, 0) ranks nodes exactly by
//! observed degree.

use crate::graph::NodeId;
use crate::observed::ObservedState;

pub const FEATURE_DIM: usize = 5;

/// Feature vector of a candidate node at one time step.
/// Field order matches `as_array` and the weight-log columns.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FeatureVector {
    /// Observed degree over the maximum observed degree.
    pub norm_degree: f64,
    /// Local clustering coefficient in the observed subgraph.
    pub clustering: f64,
    /// Observed component size over the number of observed nodes.
    pub comp_size: f64,
    /// Fraction of the node's observed neighbors already probed.
    pub probed_frac: f64,
    /// Lost reward over the maximum lost reward among unprobed nodes.
    pub lost_reward_norm: f64,
}

impl FeatureVector {
    pub fn as_array(&self) -> [f64; FEATURE_DIM] {
        [
            self.norm_degree,
            self.clustering,
            self.comp_size,
            self.probed_frac,
            self.lost_reward_norm,
        ]
    }
}

/// Computes the feature vector of `u` against the current observed state.
/// `u` must be observed; degree-0 nodes get 0 for every ratio with an
/// empty denominator.
pub fn compute_features(state: &ObservedState, u: NodeId) -> FeatureVector {
    debug_assert!(state.is_observed(u));
    let degree = state.degree(u);
    let norm_degree = if state.max_degree() == 0 {
        0.0
    } else {
        degree as f64 / state.max_degree() as f64
    };
    let comp_size = state.component_size(u) as f64 / state.node_count() as f64;
    let probed_frac = if degree == 0 {
        0.0
    } else {
        state.probed_neighbor_count(u) as f64 / degree as f64
    };
    let lost_reward_norm =
        state.lost_reward(u) as f64 / state.max_unprobed_lost_reward().max(1) as f64;
    FeatureVector {
        norm_degree,
        clustering: state.local_clustering(u),
        comp_size,
        probed_frac,
        lost_reward_norm,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::OracleGraph;
    use proptest::prelude::*;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn isolated_node_features() {
        let state = ObservedState::new(4, &[0, 1, 2], &[(1, 2)]);
        let f = compute_features(&state, 0);
        assert_eq!(f.norm_degree, 0.0);
        assert_eq!(f.clustering, 0.0);
        assert!((f.comp_size - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(f.probed_frac, 0.0);
        assert_eq!(f.lost_reward_norm, 0.0);
    }

    #[test]
    fn all_isolated_gives_zero_degree_feature() {
        let state = ObservedState::new(3, &[0, 1, 2], &[]);
        for u in 0..3 {
            assert_eq!(compute_features(&state, u).norm_degree, 0.0);
        }
    }

    #[test]
    fn max_degree_node_has_unit_norm_degree() {
        let oracle = OracleGraph::from_edges(5, vec![(0, 1), (0, 2), (0, 3), (3, 4)]);
        let mut state = ObservedState::new(5, &[0], &[]);
        state.probe(0, &oracle).unwrap();
        let f = compute_features(&state, 0);
        assert_eq!(f.norm_degree, 1.0);
        assert!((compute_features(&state, 3).norm_degree - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn six_node_worked_example() {
        // Oracle: triangle 0-1-2, edge 2-3, isolated pair 4-5. Start from
        // {0, 2, 3, 4, 5} with edges (2,3) and (4,5), then probe 0 and 1.
        let oracle = OracleGraph::from_edges(
            6,
            vec![(0, 1), (0, 2), (1, 2), (2, 3), (4, 5)],
        );
        let mut state = ObservedState::new(6, &[0, 2, 3, 4, 5], &[(2, 3), (4, 5)]);
        // Probing 0 reveals edges 0-1 and 0-2; node 1 is the only new node.
        assert_eq!(state.probe(0, &oracle).unwrap(), 1);
        // Probing 1 reveals the last triangle edge 1-2; nothing new nodewise.
        assert_eq!(state.probe(1, &oracle).unwrap(), 0);
        assert_eq!(state.node_count(), 6);
        assert_eq!(state.max_degree(), 3);

        let f2 = compute_features(&state, 2);
        // Node 2 now sees neighbors {0, 1, 3}, the observed maximum degree.
        assert_eq!(f2.norm_degree, 1.0);
        // One adjacent pair (0, 1) among its three neighbors.
        assert!((f2.clustering - 1.0 / 3.0).abs() < 1e-15);
        assert!((f2.comp_size - 4.0 / 6.0).abs() < 1e-15);
        // Neighbors 0 and 1 are probed, 3 is not.
        assert!((f2.probed_frac - 2.0 / 3.0).abs() < 1e-15);
        // Node 2 absorbed one unit per probe (edges 0-2 and 1-2), and 2 is
        // the lost-reward maximum among unprobed nodes.
        assert_eq!(state.lost_reward(2), 2);
        assert_eq!(f2.lost_reward_norm, 1.0);

        let f3 = compute_features(&state, 3);
        assert!((f3.norm_degree - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(f3.clustering, 0.0);
        assert_eq!(f3.probed_frac, 0.0);
        assert_eq!(f3.lost_reward_norm, 0.0);

        let f4 = compute_features(&state, 4);
        assert!((f4.comp_size - 2.0 / 6.0).abs() < 1e-15);
        assert_eq!(f4.probed_frac, 0.0);
        assert_eq!(f4.lost_reward_norm, 0.0);
    }

    #[test]
    fn lost_reward_normalizes_by_unprobed_max() {
        // Two stars sharing no nodes; probing center 0 gives its leaves lost
        // reward 1. Probing center 4 gives leaves 5..7 lost reward 1 as well,
        // then probing leaf 1 (degree 1, no new edges) changes nothing.
        let oracle = OracleGraph::from_edges(
            8,
            vec![(0, 1), (0, 2), (0, 3), (4, 5), (4, 6), (4, 7)],
        );
        let mut state = ObservedState::new(8, &[0, 4], &[]);
        state.probe(0, &oracle).unwrap();
        state.probe(4, &oracle).unwrap();
        assert_eq!(state.max_unprobed_lost_reward(), 1);
        for u in [1, 2, 3, 5, 6, 7] {
            assert_eq!(compute_features(&state, u).lost_reward_norm, 1.0);
        }
        state.probe(1, &oracle).unwrap();
        assert_eq!(state.max_unprobed_lost_reward(), 1);
        assert_eq!(compute_features(&state, 2).lost_reward_norm, 1.0);
    }

    proptest! {
        #[test]
        fn features_stay_in_unit_interval(seed in 0u64..300, probes in 1usize..15) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut edges = Vec::new();
            for u in 0..25usize {
                for v in (u + 1)..25 {
                    if rng.random::<f64>() < 0.12 {
                        edges.push((u, v));
                    }
                }
            }
            let oracle = OracleGraph::from_edges(25, edges);
            let mut state = ObservedState::new(25, &[0, 1], &[]);
            for _ in 0..probes {
                let pool = state.unprobed().to_vec();
                if pool.is_empty() { break; }
                let u = pool[rng.random_range(0..pool.len())];
                state.probe(u, &oracle).unwrap();
                // Candidates are always unprobed; a probed node's stale lost
                // reward may exceed the unprobed maximum.
                for &v in state.unprobed() {
                    for (i, x) in compute_features(&state, v).as_array().iter().enumerate() {
                        prop_assert!((0.0..=1.0).contains(x), "feature {} = {} at node {}", i, x, v);
                    }
                }
            }
        }
    }
}
