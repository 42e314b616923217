//! Incrementally maintained view of the network revealed so far.
//!
//! `ObservedState` tracks the observed subgraph plus every quantity the node
//! features need (degrees, triangle counts, connected components, lost reward,
//! probed-neighbor counts), updated in place as probes reveal neighborhoods.
//! All collections iterate in a deterministic order.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::graph::{NodeId, OracleGraph};

/// Union-find over node ids with union by size.
///
/// `find_mut` applies path halving; the read-only `find` walks without
/// compressing so component queries can run on a shared reference.
#[derive(Debug, Clone)]
struct DisjointSet {
    parent: Vec<usize>,
    size: Vec<usize>,
}

impl DisjointSet {
    fn new(n: usize) -> Self {
        DisjointSet {
            parent: (0..n).collect(),
            size: vec![1; n],
        }
    }

    fn find(&self, mut x: usize) -> usize {
        while self.parent[x] != x {
            x = self.parent[x];
        }
        x
    }

    fn find_mut(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let mut ra = self.find_mut(a);
        let mut rb = self.find_mut(b);
        if ra == rb {
            return;
        }
        if self.size[ra] < self.size[rb] {
            std::mem::swap(&mut ra, &mut rb);
        }
        self.parent[rb] = ra;
        self.size[ra] += self.size[rb];
    }

    fn component_size(&self, x: usize) -> usize {
        self.size[self.find(x)]
    }
}

/// A swap-remove pool of node ids with O(1) membership updates.
/// Element order depends only on the sequence of inserts and removes.
#[derive(Debug, Clone)]
struct NodePool {
    items: Vec<NodeId>,
    /// Position of each node in `items`, or `usize::MAX` when absent.
    pos: Vec<usize>,
}

impl NodePool {
    fn new(capacity: usize) -> Self {
        NodePool {
            items: Vec::new(),
            pos: vec![usize::MAX; capacity],
        }
    }

    fn insert(&mut self, u: NodeId) {
        debug_assert_eq!(self.pos[u], usize::MAX);
        self.pos[u] = self.items.len();
        self.items.push(u);
    }

    fn remove(&mut self, u: NodeId) {
        let p = self.pos[u];
        if p == usize::MAX {
            return;
        }
        let last = *self.items.last().unwrap();
        self.items.swap_remove(p);
        if last != u {
            self.pos[last] = p;
        }
        self.pos[u] = usize::MAX;
    }

    fn contains(&self, u: NodeId) -> bool {
        self.pos[u] != usize::MAX
    }

    fn as_slice(&self) -> &[NodeId] {
        &self.items
    }
}

/// Everything known about the hidden graph after `time_step` probes.
#[derive(Debug, Clone)]
pub struct ObservedState {
    /// Observed adjacency, each list sorted ascending.
    adj: Vec<Vec<NodeId>>,
    observed: Vec<bool>,
    probed: Vec<bool>,
    /// Probes in the order they were made.
    probe_order: Vec<NodeId>,
    node_count: usize,
    edge_count: usize,
    /// Observed-but-unprobed nodes, any origin.
    unprobed: NodePool,
    /// Unprobed nodes from the initial sample; exploration drains this first.
    initial_unprobed: NodePool,
    /// Lost reward accrued per node: +1 for each revealed edge whose
    /// non-probed endpoint is this node.
    lost_reward: Vec<u64>,
    /// Multiset of lost-reward values over unprobed observed nodes,
    /// so the running maximum survives probes of the current maximum.
    unprobed_lost: BTreeMap<u64, usize>,
    /// Number of probed neighbors per node.
    probed_nbrs: Vec<usize>,
    /// Triangle count per node within the observed subgraph.
    triangles: Vec<u64>,
    components: DisjointSet,
    max_degree: usize,
    time_step: usize,
}

impl ObservedState {
    /// Starts from a sampled subgraph of an oracle on `total_nodes` nodes.
    /// Sample edges must connect sample nodes; duplicates are ignored.
    pub fn new(total_nodes: usize, nodes: &[NodeId], edges: &[(NodeId, NodeId)]) -> Self {
        let mut state = ObservedState {
            adj: vec![Vec::new(); total_nodes],
            observed: vec![false; total_nodes],
            probed: vec![false; total_nodes],
            probe_order: Vec::new(),
            node_count: 0,
            edge_count: 0,
            unprobed: NodePool::new(total_nodes),
            initial_unprobed: NodePool::new(total_nodes),
            lost_reward: vec![0; total_nodes],
            unprobed_lost: BTreeMap::new(),
            probed_nbrs: vec![0; total_nodes],
            triangles: vec![0; total_nodes],
            components: DisjointSet::new(total_nodes),
            max_degree: 0,
            time_step: 0,
        };
        for &u in nodes {
            state.observe(u);
            state.initial_unprobed.insert(u);
        }
        for &(u, v) in edges {
            assert!(state.observed[u] && state.observed[v], "sample edge endpoint not in sample");
            if u != v {
                state.add_edge(u, v);
            }
        }
        state
    }

    /// Marks `u` observed if it was not already. Returns true when new.
    fn observe(&mut self, u: NodeId) -> bool {
        if self.observed[u] {
            return false;
        }
        self.observed[u] = true;
        self.node_count += 1;
        self.unprobed.insert(u);
        *self.unprobed_lost.entry(self.lost_reward[u]).or_insert(0) += 1;
        true
    }

    /// Inserts edge (u, v) if absent, updating degrees, triangles,
    /// components, and probed-neighbor counts. Returns true when new.
    fn add_edge(&mut self, u: NodeId, v: NodeId) -> bool {
        debug_assert_ne!(u, v);
        let pos_u = match self.adj[u].binary_search(&v) {
            Ok(_) => return false,
            Err(p) => p,
        };
        self.adj[u].insert(pos_u, v);
        let pos_v = self.adj[v].binary_search(&u).unwrap_err();
        self.adj[v].insert(pos_v, u);
        self.edge_count += 1;
        self.max_degree = self.max_degree.max(self.adj[u].len()).max(self.adj[v].len());
        self.components.union(u, v);
        if self.probed[u] {
            self.probed_nbrs[v] += 1;
        }
        if self.probed[v] {
            self.probed_nbrs[u] += 1;
        }
        // Each common neighbor closes one new triangle.
        let mut iu = self.adj[u].iter().peekable();
        let mut iv = self.adj[v].iter().peekable();
        while let (Some(&&a), Some(&&b)) = (iu.peek(), iv.peek()) {
            match a.cmp(&b) {
                std::cmp::Ordering::Less => {
                    iu.next();
                }
                std::cmp::Ordering::Greater => {
                    iv.next();
                }
                std::cmp::Ordering::Equal => {
                    self.triangles[u] += 1;
                    self.triangles[v] += 1;
                    self.triangles[a] += 1;
                    iu.next();
                    iv.next();
                }
            }
        }
        true
    }

    fn bump_lost_reward(&mut self, u: NodeId) {
        let old = self.lost_reward[u];
        self.lost_reward[u] = old + 1;
        if self.unprobed.contains(u) {
            self.multiset_remove(old);
            *self.unprobed_lost.entry(old + 1).or_insert(0) += 1;
        }
    }

    fn multiset_remove(&mut self, value: u64) {
        match self.unprobed_lost.get_mut(&value) {
            Some(1) => {
                self.unprobed_lost.remove(&value);
            }
            Some(count) => *count -= 1,
            None => unreachable!("multiset out of sync"),
        }
    }

    /// Reveals the full neighborhood of `u` in the oracle.
    /// Returns the reward: the number of newly observed nodes.
    pub fn probe(&mut self, u: NodeId, oracle: &OracleGraph) -> Result<usize> {
        if !self.observed[u] {
            return Err(Error::NotObserved(u));
        }
        if self.probed[u] {
            return Err(Error::AlreadyProbed(u));
        }
        self.probed[u] = true;
        self.probe_order.push(u);
        self.multiset_remove(self.lost_reward[u]);
        self.unprobed.remove(u);
        self.initial_unprobed.remove(u);
        for &v in self.adj[u].iter() {
            self.probed_nbrs[v] += 1;
        }

        let mut reward = 0;
        for &v in oracle.neighbors(u) {
            if self.observe(v) {
                reward += 1;
            }
            if self.add_edge(u, v) {
                // u is probed, so a surviving new edge always lands on an
                // unprobed v; the reward for finding it leaked to v.
                self.bump_lost_reward(v);
            }
        }
        self.time_step += 1;
        Ok(reward)
    }

    pub fn is_observed(&self, u: NodeId) -> bool {
        self.observed[u]
    }

    pub fn is_probed(&self, u: NodeId) -> bool {
        self.probed[u]
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    pub fn edge_count(&self) -> usize {
        self.edge_count
    }

    /// Total nodes in the underlying oracle, observed or not.
    pub fn capacity(&self) -> usize {
        self.observed.len()
    }

    pub fn time_step(&self) -> usize {
        self.time_step
    }

    pub fn probe_order(&self) -> &[NodeId] {
        &self.probe_order
    }

    pub fn degree(&self, u: NodeId) -> usize {
        self.adj[u].len()
    }

    pub fn neighbors(&self, u: NodeId) -> &[NodeId] {
        &self.adj[u]
    }

    pub fn max_degree(&self) -> usize {
        self.max_degree
    }

    pub fn lost_reward(&self, u: NodeId) -> u64 {
        self.lost_reward[u]
    }

    /// Largest lost-reward value among unprobed observed nodes, 0 if none.
    pub fn max_unprobed_lost_reward(&self) -> u64 {
        self.unprobed_lost.keys().next_back().copied().unwrap_or(0)
    }

    pub fn probed_neighbor_count(&self, u: NodeId) -> usize {
        self.probed_nbrs[u]
    }

    /// Observed-but-unprobed nodes in pool order.
    pub fn unprobed(&self) -> &[NodeId] {
        self.unprobed.as_slice()
    }

    /// Unprobed remnants of the initial sample, in pool order.
    pub fn initial_unprobed(&self) -> &[NodeId] {
        self.initial_unprobed.as_slice()
    }

    /// Local clustering coefficient of `u` in the observed subgraph:
    /// closed wedges at `u` over all wedges at `u`, 0 when degree < 2.
    pub fn local_clustering(&self, u: NodeId) -> f64 {
        let d = self.adj[u].len();
        if d < 2 {
            return 0.0;
        }
        2.0 * self.triangles[u] as f64 / (d as f64 * (d as f64 - 1.0))
    }

    /// Number of observed nodes in `u`'s observed connected component.
    pub fn component_size(&self, u: NodeId) -> usize {
        self.components.component_size(u)
    }

    /// Nodes observed so far, ascending.
    pub fn observed_nodes(&self) -> Vec<NodeId> {
        (0..self.observed.len()).filter(|&u| self.observed[u]).collect()
    }
}
