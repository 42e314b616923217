//! Synthetic oracle graphs: Erdős–Rényi, Barabási–Albert, random regular,
//! and a two-phase block model with tunable clustering.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};

use crate::error::{Error, Result};
use crate::graph::{NodeId, OracleGraph};

/// Graph family plus its parameters.
#[derive(Debug, Clone, PartialEq)]
pub enum GraphModel {
    /// Every pair is an edge independently with probability `p`.
    Er { n: usize, p: f64 },
    /// Preferential attachment: complete seed on `m` nodes, then each new
    /// node attaches to `m` distinct existing nodes picked by degree.
    Ba { n: usize, m: usize },
    /// Uniform-ish random simple graph where every node has degree `k`.
    KRegular { n: usize, k: usize },
    /// Power-law-sized dense communities plus Chung-Lu wiring of heavy-tailed
    /// per-node degree excesses. The smallest communities are wired at
    /// density `max_cc`; density decays with community size, and the decay
    /// plus a degree scale are calibrated so the draw lands on mean degree
    /// `avg_degree` and transitivity `global_cc`.
    Bter {
        n: usize,
        avg_degree: f64,
        max_cc: f64,
        global_cc: f64,
    },
}

pub fn generate(model: &GraphModel, rng: &mut impl Rng) -> Result<OracleGraph> {
    match *model {
        GraphModel::Er { n, p } => gen_er(n, p, rng),
        GraphModel::Ba { n, m } => gen_ba(n, m, rng),
        GraphModel::KRegular { n, k } => gen_kregular(n, k, rng),
        GraphModel::Bter {
            n,
            avg_degree,
            max_cc,
            global_cc,
        } => gen_bter(n, avg_degree, max_cc, global_cc, rng),
    }
}

/// Maps a linear index over all pairs (u, v) with u < v, ordered by u then v,
/// back to the pair. `n` is the node count.
fn pair_from_index(n: usize, t: usize) -> (NodeId, NodeId) {
    // offset(u) = u*(n-1) - u*(u-1)/2 is the index of pair (u, u+1).
    let nf = n as f64;
    let tf = t as f64;
    // Solve offset(u) <= t for the largest u, then fix up float error.
    let raw = (2.0 * nf - 1.0 - ((2.0 * nf - 1.0).powi(2) - 8.0 * tf).max(0.0).sqrt()) / 2.0;
    let mut u = (raw.max(0.0) as usize).min(n - 2);
    let offset = |u: usize| u * (n - 1) - u * u.saturating_sub(1) / 2;
    while u + 1 < n - 1 && offset(u + 1) <= t {
        u += 1;
    }
    while offset(u) > t {
        u -= 1;
    }
    let v = u + 1 + (t - offset(u));
    (u, v)
}

/// Appends each pair from `pairs(i)` for i in 0..total independently with
/// probability `p`, visiting only selected pairs via geometric jumps.
fn bernoulli_pairs(
    total: usize,
    p: f64,
    rng: &mut impl Rng,
    edges: &mut Vec<(NodeId, NodeId)>,
    pair: impl Fn(usize) -> (NodeId, NodeId),
) {
    if p <= 0.0 || total == 0 {
        return;
    }
    if p >= 1.0 {
        edges.extend((0..total).map(pair));
        return;
    }
    let log_q = (1.0 - p).ln();
    let mut i = 0usize;
    loop {
        // Gap to the next success of a Bernoulli(p) stream.
        let u: f64 = 1.0 - rng.random::<f64>();
        let gap = (u.ln() / log_q).floor();
        if gap >= (total - i) as f64 {
            return;
        }
        i += gap as usize;
        edges.push(pair(i));
        i += 1;
        if i >= total {
            return;
        }
    }
}

pub fn gen_er(n: usize, p: f64, rng: &mut impl Rng) -> Result<OracleGraph> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidConfig(format!("edge probability {} not in [0, 1]", p)));
    }
    let total = n * n.saturating_sub(1) / 2;
    let mut edges = Vec::new();
    bernoulli_pairs(total, p, rng, &mut edges, |t| pair_from_index(n, t));
    Ok(OracleGraph::from_edges(n, edges))
}

pub fn gen_ba(n: usize, m: usize, rng: &mut impl Rng) -> Result<OracleGraph> {
    if m == 0 || m >= n {
        return Err(Error::InvalidConfig(format!(
            "attachment count m={} must satisfy 1 <= m < n={}",
            m, n
        )));
    }
    let mut edges: Vec<(NodeId, NodeId)> = Vec::with_capacity(m * (m - 1) / 2 + (n - m) * m);
    // One urn entry per edge endpoint makes uniform urn draws preferential.
    let mut urn: Vec<NodeId> = Vec::with_capacity(2 * edges.capacity());
    for u in 0..m {
        for v in (u + 1)..m {
            edges.push((u, v));
            urn.push(u);
            urn.push(v);
        }
    }
    let mut targets: Vec<NodeId> = Vec::with_capacity(m);
    for t in m..n {
        targets.clear();
        while targets.len() < m {
            let candidate = if urn.is_empty() {
                rng.random_range(0..t)
            } else {
                urn[rng.random_range(0..urn.len())]
            };
            if !targets.contains(&candidate) {
                targets.push(candidate);
            }
        }
        for &v in &targets {
            edges.push((t, v));
            urn.push(t);
            urn.push(v);
        }
    }
    Ok(OracleGraph::from_edges(n, edges))
}

pub fn gen_kregular(n: usize, k: usize, rng: &mut impl Rng) -> Result<OracleGraph> {
    if k >= n || n * k % 2 != 0 {
        return Err(Error::InvalidConfig(format!(
            "no simple {}-regular graph on {} nodes",
            k, n
        )));
    }
    if k == 0 {
        return Ok(OracleGraph::from_edges(n, std::iter::empty()));
    }

    // Random stub pairing, then double-edge swaps to repair loops and
    // duplicates. Whole-pairing rejection stalls already at moderate k.
    let mut stubs: Vec<NodeId> = (0..n).flat_map(|u| std::iter::repeat(u).take(k)).collect();
    stubs.shuffle(rng);
    let mut edges: Vec<(NodeId, NodeId)> = stubs.chunks_exact(2).map(|c| (c[0], c[1])).collect();

    let key = |u: NodeId, v: NodeId| if u < v { (u, v) } else { (v, u) };
    let mut multiplicity: std::collections::HashMap<(NodeId, NodeId), usize> = std::collections::HashMap::new();
    for &(u, v) in &edges {
        if u != v {
            *multiplicity.entry(key(u, v)).or_insert(0) += 1;
        }
    }
    let is_bad = |edges: &[(NodeId, NodeId)],
                  multiplicity: &std::collections::HashMap<(NodeId, NodeId), usize>,
                  i: usize| {
        let (u, v) = edges[i];
        u == v || multiplicity[&key(u, v)] > 1
    };

    let mut worklist: Vec<usize> = (0..edges.len())
        .filter(|&i| is_bad(&edges, &multiplicity, i))
        .collect();
    let mut budget = 200 * edges.len() + 10_000;
    while let Some(&i) = worklist.last() {
        if !is_bad(&edges, &multiplicity, i) {
            worklist.pop();
            continue;
        }
        if budget == 0 {
            return Err(Error::PairingBudgetExhausted);
        }
        budget -= 1;
        let j = rng.random_range(0..edges.len());
        if j == i {
            continue;
        }
        let (u, v) = edges[i];
        let (x, y) = edges[j];
        // Propose (u, v), (x, y) -> (u, x), (v, y), sometimes crossed.
        let (x, y) = if rng.random::<bool>() { (x, y) } else { (y, x) };
        if u == x || v == y {
            continue;
        }
        let present = |a: NodeId, b: NodeId| multiplicity.get(&key(a, b)).copied().unwrap_or(0) > 0;
        if present(u, x) || present(v, y) {
            continue;
        }
        for &(a, b) in &[(u, v), (x, y)] {
            if a != b {
                *multiplicity.get_mut(&key(a, b)).unwrap() -= 1;
            }
        }
        edges[i] = (u, x);
        edges[j] = (v, y);
        *multiplicity.entry(key(u, x)).or_insert(0) += 1;
        *multiplicity.entry(key(v, y)).or_insert(0) += 1;
        worklist.push(j);
    }
    Ok(OracleGraph::from_edges(n, edges))
}

/// Community size distribution: power law with exponent 2 on
/// [s_min, s_max], drawn by inverting the continuous CDF
/// F(s) = (1/a - 1/s) / (1/a - 1/b).
fn draw_community_size(s_min: usize, s_max: usize, rng: &mut impl Rng) -> usize {
    if s_max <= s_min {
        return s_min;
    }
    let a = s_min as f64;
    let b = s_max as f64;
    let u: f64 = rng.random();
    let s = 1.0 / (1.0 / a - u * (1.0 / a - 1.0 / b));
    (s.floor() as usize).clamp(s_min, s_max)
}

/// Expected wiring for one bter draw, fixed before any edge is placed:
/// per-community density and each node's excess weight for the
/// cross-community phase.
struct BterPlan {
    rho: Vec<f64>,
    excess: Vec<f64>,
    excess_sum: f64,
}

/// Every node keeps at least this much cross-community weight, so whole
/// communities cannot detach from the giant component.
const BTER_CROSS_FLOOR: f64 = 0.5;

/// Densities follow rho(s) = max_cc * (s_min/s)^gamma, so the smallest
/// communities sit at `max_cc` and larger ones thin out. Each node's excess
/// is max(c * d_u - intra_u, floor) with the scale c solved by bisection so
/// that intra plus excess sums to n * avg_degree; the excess sum is
/// continuous and unbounded in c, so the scale always exists when the
/// densities leave room.
fn bter_plan(
    sizes: &[usize],
    community: &[usize],
    degree_target: &[f64],
    s_min: usize,
    avg_degree: f64,
    max_cc: f64,
    gamma: f64,
) -> BterPlan {
    let n = community.len();
    let rho: Vec<f64> = sizes
        .iter()
        .map(|&s| {
            if s < 2 {
                0.0
            } else {
                (max_cc * (s_min as f64 / s as f64).powf(gamma)).min(1.0)
            }
        })
        .collect();
    let intra: Vec<f64> = community
        .iter()
        .map(|&c| rho[c] * (sizes[c] as f64 - 1.0))
        .collect();
    let intra_sum: f64 = intra.iter().sum();
    let floor = BTER_CROSS_FLOOR.min(avg_degree / 2.0);
    let need = (n as f64 * avg_degree - intra_sum).max(0.0);
    let excess_sum_at = |c: f64| -> f64 {
        degree_target
            .iter()
            .zip(&intra)
            .map(|(&d, &f)| (c * d - f).max(floor))
            .sum()
    };
    let mut hi = 1.0f64;
    while excess_sum_at(hi) < need && hi < 1e12 {
        hi *= 2.0;
    }
    let mut lo = 0.0f64;
    for _ in 0..60 {
        let mid = (lo + hi) / 2.0;
        if excess_sum_at(mid) < need {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let c = (lo + hi) / 2.0;
    let excess: Vec<f64> = degree_target
        .iter()
        .zip(&intra)
        .map(|(&d, &f)| (c * d - f).max(floor))
        .collect();
    let excess_sum = excess.iter().sum();
    BterPlan {
        rho,
        excess,
        excess_sum,
    }
}

/// Draws one graph realization from a plan: dense blocks inside communities,
/// Chung-Lu pairing of the excess weights across them.
fn bter_draw(
    sizes: &[usize],
    community: &[usize],
    plan: &BterPlan,
    rng: &mut impl Rng,
) -> Vec<(NodeId, NodeId)> {
    let n = community.len();
    let mut edges: Vec<(NodeId, NodeId)> = Vec::new();
    let mut start = 0;
    for (i, &s) in sizes.iter().enumerate() {
        let total = s * s.saturating_sub(1) / 2;
        bernoulli_pairs(total, plan.rho[i], rng, &mut edges, |t| {
            let (u, v) = pair_from_index(s, t);
            (start + u, start + v)
        });
        start += s;
    }
    if plan.excess_sum > 0.0 {
        for u in 0..n {
            if plan.excess[u] <= 0.0 {
                continue;
            }
            for v in (u + 1)..n {
                if community[v] == community[u] || plan.excess[v] <= 0.0 {
                    continue;
                }
                let p = (plan.excess[u] * plan.excess[v] / plan.excess_sum).min(1.0);
                if rng.random::<f64>() < p {
                    edges.push((u, v));
                }
            }
        }
    }
    edges
}

pub fn gen_bter(
    n: usize,
    avg_degree: f64,
    max_cc: f64,
    global_cc: f64,
    rng: &mut impl Rng,
) -> Result<OracleGraph> {
    if avg_degree < 0.0 || avg_degree >= n as f64 {
        return Err(Error::InvalidConfig(format!(
            "average degree {} out of range for {} nodes",
            avg_degree, n
        )));
    }
    if !(0.0..=1.0).contains(&max_cc) {
        return Err(Error::InvalidConfig(format!(
            "community clustering ceiling {} not in [0, 1]",
            max_cc
        )));
    }
    if !(0.0..=1.0).contains(&global_cc) {
        return Err(Error::InvalidConfig(format!(
            "global clustering target {} not in [0, 1]",
            global_cc
        )));
    }
    if global_cc > max_cc {
        return Err(Error::InvalidConfig(format!(
            "global clustering target {} exceeds the community ceiling {}",
            global_cc, max_cc
        )));
    }
    if n == 0 {
        return Ok(OracleGraph::from_edges(0, std::iter::empty()));
    }

    let s_min = avg_degree.ceil() as usize + 1;
    let s_max = (20 * s_min).min(n).max(s_min);

    let mut sizes: Vec<usize> = Vec::new();
    let mut assigned = 0;
    while assigned < n {
        let s = draw_community_size(s_min, s_max, rng).min(n - assigned);
        sizes.push(s);
        assigned += s;
    }

    // A lone community cannot trade density against an overlay; wire it as
    // plain ER at the degree target.
    if sizes.len() == 1 {
        let mut edges = Vec::new();
        let p = if n > 1 { (avg_degree / (n as f64 - 1.0)).min(1.0) } else { 0.0 };
        bernoulli_pairs(n * (n - 1) / 2, p, rng, &mut edges, |t| pair_from_index(n, t));
        return Ok(OracleGraph::from_edges(n, edges));
    }

    let mut community = vec![0usize; n];
    let mut start = 0;
    for (i, &s) in sizes.iter().enumerate() {
        for u in start..start + s {
            community[u] = i;
        }
        start += s;
    }

    // Heavy-tailed per-node degree targets with mean `avg_degree`: Pareto
    // with tail exponent 2, drawn by inverse CDF. The tail is what puts a
    // few hub nodes far above the mean.
    let scale = avg_degree / 2.0;
    let degree_target: Vec<f64> = (0..n)
        .map(|_| {
            let u: f64 = rng.random();
            (scale / (1.0 - u).sqrt()).min(n as f64 - 1.0)
        })
        .collect();

    // The decay exponent trades community triangles against hub wedges:
    // realized transitivity falls as gamma grows. Bisect against trial draws
    // from a forked rng, so clipping and cross-community triangles are priced
    // in without an analytic model of them.
    let calib_seed: u64 = rng.random();
    let mut lo = 0.0;
    let mut hi = 16.0;
    for _ in 0..14 {
        let mid = (lo + hi) / 2.0;
        let plan = bter_plan(&sizes, &community, &degree_target, s_min, avg_degree, max_cc, mid);
        let mut trial_rng = rand_chacha::ChaCha8Rng::seed_from_u64(calib_seed);
        let edges = bter_draw(&sizes, &community, &plan, &mut trial_rng);
        let trial = OracleGraph::from_edges(n, edges);
        if trial.global_clustering() > global_cc {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let plan = bter_plan(
        &sizes,
        &community,
        &degree_target,
        s_min,
        avg_degree,
        max_cc,
        (lo + hi) / 2.0,
    );

    let edges = bter_draw(&sizes, &community, &plan, rng);
    Ok(OracleGraph::from_edges(n, edges))
}
