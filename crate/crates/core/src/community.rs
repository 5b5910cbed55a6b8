//! Louvain community detection on the undirected projection of a network.

use std::collections::HashMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::network::MultiTokenNetwork;

pub const DEFAULT_RESOLUTION: f64 = 1.0;
pub const DEFAULT_SEED: u64 = 42;

/// Local-move passes per level before giving up on convergence.
const MAX_PASSES: usize = 1000;

/// Weighted undirected graph without self-loops.
#[derive(Debug, Clone, PartialEq)]
pub struct UndirectedGraph {
    /// Neighbour lists sorted by neighbour index.
    adjacency: Vec<Vec<(usize, f64)>>,
    edge_count: usize,
}

impl UndirectedGraph {
    /// Build from `(a, b, weight)` triples. Parallel edges are merged by summing;
    /// self-loops and non-positive weights are ignored.
    pub fn from_edges(n: usize, edges: impl IntoIterator<Item = (usize, usize, f64)>) -> Self {
        let mut merged: HashMap<(usize, usize), f64> = HashMap::new();
        for (a, b, w) in edges {
            if a == b || w <= 0.0 {
                continue;
            }
            *merged.entry((a.min(b), a.max(b))).or_insert(0.0) += w;
        }
        let mut pairs: Vec<_> = merged.into_iter().collect();
        pairs.sort_unstable_by_key(|&(k, _)| k);
        let mut adjacency = vec![Vec::new(); n];
        for &((a, b), w) in &pairs {
            adjacency[a].push((b, w));
            adjacency[b].push((a, w));
        }
        for list in &mut adjacency {
            list.sort_unstable_by_key(|&(v, _)| v);
        }
        UndirectedGraph {
            adjacency,
            edge_count: pairs.len(),
        }
    }

    pub fn node_count(&self) -> usize {
        self.adjacency.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edge_count
    }

    pub fn neighbors(&self, v: usize) -> &[(usize, f64)] {
        &self.adjacency[v]
    }

    pub fn degree(&self, v: usize) -> f64 {
        self.adjacency[v].iter().map(|&(_, w)| w).sum()
    }

    /// Sum of all edge weights (`m`).
    pub fn total_weight(&self) -> f64 {
        self.adjacency
            .iter()
            .enumerate()
            .flat_map(|(a, list)| list.iter().filter(move |&&(b, _)| a < b).map(|&(_, w)| w))
            .sum()
    }

    /// Undirected edges `(a, b, weight)` with `a < b`, sorted.
    pub fn edges(&self) -> Vec<(usize, usize, f64)> {
        self.adjacency
            .iter()
            .enumerate()
            .flat_map(|(a, list)| list.iter().filter(move |&&(b, _)| a < b).map(move |&(b, w)| (a, b, w)))
            .collect()
    }
}

/// Same nodes; `{a, b}` weighs the sum of the directed weights both ways.
pub fn project_undirected(net: &MultiTokenNetwork) -> UndirectedGraph {
    UndirectedGraph::from_edges(
        net.node_count(),
        net.edges().iter().map(|e| (e.source, e.target, e.weight as f64)),
    )
}

/// Newman-Girvan weighted modularity
/// `Q = Σ_c [ in_c / 2m - γ (tot_c / 2m)^2 ]`, where `in_c` sums adjacency
/// entries over ordered pairs inside `c` and `tot_c` sums degrees.
pub fn modularity(graph: &UndirectedGraph, membership: &[usize], resolution: f64) -> Result<f64> {
    if membership.len() != graph.node_count() {
        return Err(invalid("membership", membership.len(), "must assign every node"));
    }
    let two_m = 2.0 * graph.total_weight();
    if two_m <= 0.0 {
        return Err(Error::Degenerate("modularity of a graph with zero total weight"));
    }
    let communities = membership.iter().max().map_or(0, |&c| c + 1);
    let mut internal = vec![0.0; communities];
    let mut total = vec![0.0; communities];
    for v in 0..graph.node_count() {
        let c = membership[v];
        for &(u, w) in graph.neighbors(v) {
            total[c] += w;
            if membership[u] == c {
                internal[c] += w;
            }
        }
    }
    Ok(internal
        .iter()
        .zip(&total)
        .map(|(&inner, &tot)| inner / two_m - resolution * (tot / two_m) * (tot / two_m))
        .sum())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Partition {
    /// Community per node; ids are dense and ordered by descending community size.
    pub membership: Vec<usize>,
    pub communities: usize,
    pub modularity: f64,
    pub resolution: f64,
    pub seed: u64,
}

impl Partition {
    pub fn sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.communities];
        for &c in &self.membership {
            sizes[c] += 1;
        }
        sizes
    }
}

/// Graph of one Louvain level. Self-loop weight `loops[v]` holds the adjacency
/// mass internal to the aggregated node, counted over ordered pairs.
struct Level {
    adjacency: Vec<Vec<(usize, f64)>>,
    loops: Vec<f64>,
    degree: Vec<f64>,
}

impl Level {
    fn from_graph(graph: &UndirectedGraph) -> Self {
        let n = graph.node_count();
        Level {
            adjacency: graph.adjacency.clone(),
            loops: vec![0.0; n],
            degree: (0..n).map(|v| graph.degree(v)).collect(),
        }
    }

    fn len(&self) -> usize {
        self.adjacency.len()
    }

    /// Greedy local moves. Returns the community of each node and whether any
    /// node changed community.
    fn local_moves(&self, two_m: f64, resolution: f64, rng: &mut ChaCha8Rng) -> (Vec<usize>, bool) {
        let n = self.len();
        let mut community: Vec<usize> = (0..n).collect();
        let mut total = self.degree.clone();
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(rng);

        let mut link_weight = vec![0.0; n];
        let mut is_touched = vec![false; n];
        let mut touched: Vec<usize> = Vec::new();
        let mut any_move = false;

        for _ in 0..MAX_PASSES {
            let mut moved = false;
            for &v in &order {
                let own = community[v];
                let k_v = self.degree[v];
                for &(u, w) in &self.adjacency[v] {
                    let c = community[u];
                    if !is_touched[c] {
                        is_touched[c] = true;
                        touched.push(c);
                    }
                    link_weight[c] += w;
                }

                total[own] -= k_v;
                let gain = |c: usize, link: f64| link - resolution * total[c] * k_v / two_m;
                let mut best = own;
                let mut best_gain = gain(own, link_weight[own]);
                for &c in &touched {
                    let g = gain(c, link_weight[c]);
                    if g > best_gain {
                        best = c;
                        best_gain = g;
                    }
                }
                total[best] += k_v;
                if best != own {
                    community[v] = best;
                    moved = true;
                }

                for &c in &touched {
                    link_weight[c] = 0.0;
                    is_touched[c] = false;
                }
                touched.clear();
            }
            any_move |= moved;
            if !moved {
                break;
            }
        }
        (community, any_move)
    }

    /// Collapse communities (already densely numbered) into single nodes.
    fn aggregate(&self, community: &[usize], count: usize) -> Level {
        let mut loops = vec![0.0; count];
        let mut degree = vec![0.0; count];
        let mut links: Vec<HashMap<usize, f64>> = vec![HashMap::new(); count];
        for v in 0..self.len() {
            let c = community[v];
            loops[c] += self.loops[v];
            degree[c] += self.degree[v];
            for &(u, w) in &self.adjacency[v] {
                let d = community[u];
                if c == d {
                    loops[c] += w;
                } else {
                    *links[c].entry(d).or_insert(0.0) += w;
                }
            }
        }
        let adjacency = links
            .into_iter()
            .map(|m| {
                let mut list: Vec<_> = m.into_iter().collect();
                list.sort_unstable_by_key(|&(u, _)| u);
                list
            })
            .collect();
        Level {
            adjacency,
            loops,
            degree,
        }
    }
}

/// Renumber labels densely in order of first appearance.
fn densify(labels: &mut [usize]) -> usize {
    let mut map = HashMap::new();
    for label in labels.iter_mut() {
        let next = map.len();
        *label = *map.entry(*label).or_insert(next);
    }
    map.len()
}

/// Two-phase Louvain: local moves until no strictly improving move remains,
/// then aggregation, repeated until a level produces no move. Node visit order
/// is shuffled by a ChaCha8 generator seeded with `seed`.
pub fn louvain(graph: &UndirectedGraph, resolution: f64, seed: u64) -> Result<Partition> {
    if graph.node_count() == 0 {
        return Err(Error::Degenerate("community detection on an empty graph"));
    }
    if !(resolution > 0.0 && resolution.is_finite()) {
        return Err(invalid("resolution", resolution, "must be positive and finite"));
    }
    let two_m = 2.0 * graph.total_weight();
    if two_m <= 0.0 {
        return Err(Error::Degenerate("community detection on a graph with zero total weight"));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut membership: Vec<usize> = (0..graph.node_count()).collect();
    let mut level = Level::from_graph(graph);
    loop {
        let (mut community, moved) = level.local_moves(two_m, resolution, &mut rng);
        if !moved {
            break;
        }
        let count = densify(&mut community);
        for m in membership.iter_mut() {
            *m = community[*m];
        }
        if count == level.len() {
            break;
        }
        level = level.aggregate(&community, count);
    }

    let communities = relabel_by_size(&mut membership);
    let modularity = modularity(graph, &membership, resolution)?;
    Ok(Partition {
        membership,
        communities,
        modularity,
        resolution,
        seed,
    })
}

/// Relabel so that community 0 is the largest; equal sizes are ordered by
/// their smallest member.
fn relabel_by_size(membership: &mut [usize]) -> usize {
    let count = densify(membership);
    let mut sizes = vec![0usize; count];
    for &c in membership.iter() {
        sizes[c] += 1;
    }
    // densify numbers by first appearance, so label order is smallest-member order
    let mut order: Vec<usize> = (0..count).collect();
    order.sort_by(|&a, &b| sizes[b].cmp(&sizes[a]).then(a.cmp(&b)));
    let mut rank = vec![0; count];
    for (new, &old) in order.iter().enumerate() {
        rank[old] = new;
    }
    for c in membership.iter_mut() {
        *c = rank[*c];
    }
    count
}
