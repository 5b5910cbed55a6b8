//! The ego multi-token network.
//!
//! Nodes are `(entity, token)` pairs. A directed edge `a -> b` carries the number
//! of transfers of one token sent by entity `a` and received by entity `b`, so
//! every edge stays inside a single token layer. Only transfers with at least
//! one ego endpoint are kept, and intra-entity transfers are dropped.

use std::collections::{BTreeMap, HashMap};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::ingest::{EntityInfo, EntityMap, TransferRecord};

/// Indices into the owning network's entity and token tables.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct NodeId {
    pub entity: usize,
    pub token: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub struct Edge {
    pub source: usize,
    pub target: usize,
    /// Transfer count.
    pub weight: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    In,
    Out,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum DensityMode {
    /// Edges over all ordered node pairs.
    Global,
    /// Edges over ordered node pairs inside each token layer.
    Layered,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MultiTokenNetwork {
    entities: Vec<EntityInfo>,
    tokens: Vec<String>,
    nodes: Vec<NodeId>,
    /// Sorted by `(source, target)`.
    edges: Vec<Edge>,
    out_offsets: Vec<usize>,
    /// Edge indices sorted by `(target, source)`.
    in_order: Vec<usize>,
    in_offsets: Vec<usize>,
    layers: Vec<Vec<usize>>,
}

/// Incrementally assembles a network; node, entity and token indices follow
/// first-insertion order.
#[derive(Debug, Default)]
pub struct NetworkBuilder {
    entities: Vec<EntityInfo>,
    entity_index: HashMap<String, usize>,
    tokens: Vec<String>,
    token_index: HashMap<String, usize>,
    nodes: Vec<NodeId>,
    node_index: HashMap<NodeId, usize>,
    weights: HashMap<(usize, usize), u64>,
}

impl NetworkBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    /// Add (or look up) a node. An entity is ego if any insertion flags it so.
    pub fn node(&mut self, entity: &str, is_ego: bool, token: &str) -> usize {
        let entity = match self.entity_index.get(entity) {
            Some(&id) => {
                self.entities[id].is_ego |= is_ego;
                id
            }
            None => {
                let id = self.entities.len();
                self.entity_index.insert(entity.to_string(), id);
                self.entities.push(EntityInfo {
                    name: entity.to_string(),
                    is_ego,
                });
                id
            }
        };
        let token = match self.token_index.get(token) {
            Some(&id) => id,
            None => {
                let id = self.tokens.len();
                self.token_index.insert(token.to_string(), id);
                self.tokens.push(token.to_string());
                id
            }
        };
        let key = NodeId { entity, token };
        *self.node_index.entry(key).or_insert_with(|| {
            self.nodes.push(key);
            self.nodes.len() - 1
        })
    }

    pub fn add_edge(&mut self, source: usize, target: usize, weight: u64) {
        *self.weights.entry((source, target)).or_insert(0) += weight;
    }

    pub fn build(self) -> MultiTokenNetwork {
        let mut edges: Vec<Edge> = self
            .weights
            .into_iter()
            .filter(|&(_, w)| w > 0)
            .map(|((source, target), weight)| Edge { source, target, weight })
            .collect();
        edges.sort_unstable_by_key(|e| (e.source, e.target));
        MultiTokenNetwork::from_parts(self.entities, self.tokens, self.nodes, edges)
    }
}

/// Counts of what `build_mtn` kept and dropped.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct BuildSummary {
    pub retained: u64,
    pub dropped_without_ego: u64,
    pub dropped_self_loop: u64,
}

/// Build the multi-token network from transfer records.
///
/// Addresses missing from `entities` become non-ego singleton entities.
/// Index order depends only on the set of retained transfers: tokens, then
/// senders, then receivers, each sorted by name.
pub fn build_mtn(records: &[TransferRecord], entities: &EntityMap) -> MultiTokenNetwork {
    build_mtn_with_summary(records, entities).0
}

pub fn build_mtn_with_summary(records: &[TransferRecord], entities: &EntityMap) -> (MultiTokenNetwork, BuildSummary) {
    let mut counts: BTreeMap<(&str, &str, &str), (u64, bool, bool)> = BTreeMap::new();
    let mut summary = BuildSummary::default();
    for record in records {
        let (sender, sender_ego) = entities.resolve(&record.from);
        let (receiver, receiver_ego) = entities.resolve(&record.to);
        if !sender_ego && !receiver_ego {
            summary.dropped_without_ego += 1;
            continue;
        }
        if sender == receiver {
            summary.dropped_self_loop += 1;
            continue;
        }
        counts
            .entry((record.token.as_str(), sender, receiver))
            .or_insert((0, sender_ego, receiver_ego))
            .0 += 1;
        summary.retained += 1;
    }
    let mut builder = NetworkBuilder::new();
    for ((token, sender, receiver), (weight, sender_ego, receiver_ego)) in counts {
        let source = builder.node(sender, sender_ego, token);
        let target = builder.node(receiver, receiver_ego, token);
        builder.add_edge(source, target, weight);
    }
    let net = builder.build();
    debug_assert_eq!(net.check_invariants(), Ok(()));
    debug_assert_eq!(net.total_weight(), summary.retained);
    (net, summary)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NetworkStats {
    pub nodes: usize,
    pub users: usize,
    pub tokens: usize,
    pub links: usize,
    pub density_global: f64,
    pub density_layered: f64,
}

impl MultiTokenNetwork {
    pub(crate) fn from_parts(
        entities: Vec<EntityInfo>,
        tokens: Vec<String>,
        nodes: Vec<NodeId>,
        edges: Vec<Edge>,
    ) -> Self {
        debug_assert!(edges.windows(2).all(|w| (w[0].source, w[0].target) < (w[1].source, w[1].target)));
        let n = nodes.len();
        let mut out_offsets = vec![0usize; n + 1];
        let mut in_offsets = vec![0usize; n + 1];
        for e in &edges {
            out_offsets[e.source + 1] += 1;
            in_offsets[e.target + 1] += 1;
        }
        for i in 0..n {
            out_offsets[i + 1] += out_offsets[i];
            in_offsets[i + 1] += in_offsets[i];
        }
        let mut in_order: Vec<usize> = (0..edges.len()).collect();
        in_order.sort_by_key(|&i| (edges[i].target, edges[i].source));

        let mut layers = vec![Vec::new(); tokens.len()];
        for (idx, node) in nodes.iter().enumerate() {
            layers[node.token].push(idx);
        }
        MultiTokenNetwork {
            entities,
            tokens,
            nodes,
            edges,
            out_offsets,
            in_order,
            in_offsets,
            layers,
        }
    }

    pub fn empty() -> Self {
        Self::from_parts(Vec::new(), Vec::new(), Vec::new(), Vec::new())
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[NodeId] {
        &self.nodes
    }

    pub fn node(&self, idx: usize) -> NodeId {
        self.nodes[idx]
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn entities(&self) -> &[EntityInfo] {
        &self.entities
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn entity_name(&self, node: usize) -> &str {
        &self.entities[self.nodes[node].entity].name
    }

    pub fn token_name(&self, node: usize) -> &str {
        &self.tokens[self.nodes[node].token]
    }

    pub fn is_ego(&self, node: usize) -> bool {
        self.entities[self.nodes[node].entity].is_ego
    }

    /// Nodes of one token layer, ascending.
    pub fn layer(&self, token: usize) -> &[usize] {
        &self.layers[token]
    }

    pub fn layers(&self) -> &[Vec<usize>] {
        &self.layers
    }

    pub fn find_node(&self, entity: &str, token: &str) -> Option<usize> {
        self.nodes
            .iter()
            .position(|n| self.entities[n.entity].name == entity && self.tokens[n.token] == token)
    }

    /// Outgoing edges of `node`, sorted by target.
    pub fn out_edges(&self, node: usize) -> &[Edge] {
        &self.edges[self.out_offsets[node]..self.out_offsets[node + 1]]
    }

    /// Incoming edges of `node`, sorted by source.
    pub fn in_edges(&self, node: usize) -> impl ExactSizeIterator<Item = &Edge> + '_ {
        self.in_order[self.in_offsets[node]..self.in_offsets[node + 1]]
            .iter()
            .map(move |&i| &self.edges[i])
    }

    /// Number of distinct neighbours in the given direction.
    pub fn degree(&self, node: usize, direction: Direction) -> usize {
        match direction {
            Direction::Out => self.out_offsets[node + 1] - self.out_offsets[node],
            Direction::In => self.in_offsets[node + 1] - self.in_offsets[node],
        }
    }

    pub fn strength(&self, node: usize, direction: Direction) -> u64 {
        match direction {
            Direction::Out => self.out_edges(node).iter().map(|e| e.weight).sum(),
            Direction::In => self.in_edges(node).map(|e| e.weight).sum(),
        }
    }

    pub fn total_weight(&self) -> u64 {
        self.edges.iter().map(|e| e.weight).sum()
    }

    /// Same nodes, every edge reversed.
    pub fn transpose(&self) -> MultiTokenNetwork {
        let mut edges: Vec<Edge> = self
            .edges
            .iter()
            .map(|e| Edge {
                source: e.target,
                target: e.source,
                weight: e.weight,
            })
            .collect();
        edges.sort_unstable_by_key(|e| (e.source, e.target));
        Self::from_parts(self.entities.clone(), self.tokens.clone(), self.nodes.clone(), edges)
    }

    /// Subnetwork spanned by the given edges (indices into `edges()`), keeping
    /// only their endpoints. Node order follows the original network.
    pub fn edge_subnetwork(&self, edge_indices: &[usize]) -> MultiTokenNetwork {
        let mut keep = vec![false; self.nodes.len()];
        for &i in edge_indices {
            keep[self.edges[i].source] = true;
            keep[self.edges[i].target] = true;
        }
        let mut builder = NetworkBuilder::new();
        let mut remap = vec![usize::MAX; self.nodes.len()];
        for (idx, &k) in keep.iter().enumerate() {
            if k {
                remap[idx] = builder.node(self.entity_name(idx), self.is_ego(idx), self.token_name(idx));
            }
        }
        for &i in edge_indices {
            let e = self.edges[i];
            builder.add_edge(remap[e.source], remap[e.target], e.weight);
        }
        builder.build()
    }

    /// Edge density over directed ordered pairs.
    pub fn density(&self, mode: DensityMode) -> Result<f64> {
        let pairs: u64 = match mode {
            DensityMode::Global => {
                let n = self.nodes.len() as u64;
                if n < 2 {
                    return Err(Error::Degenerate("global density needs at least 2 nodes"));
                }
                n * (n - 1)
            }
            DensityMode::Layered => {
                let pairs: u64 = self
                    .layers
                    .iter()
                    .map(|l| l.len() as u64)
                    .map(|n| n * n.saturating_sub(1))
                    .sum();
                if pairs == 0 {
                    return Err(Error::Degenerate("layered density needs a token layer with at least 2 nodes"));
                }
                pairs
            }
        };
        Ok(self.edges.len() as f64 / pairs as f64)
    }

    /// Complementary cumulative degree distribution: for each observed degree `d`
    /// (ascending), the fraction of nodes with degree at least `d`.
    pub fn degree_ccdf(&self, direction: Direction) -> Result<Vec<(usize, f64)>> {
        let n = self.nodes.len();
        if n == 0 {
            return Err(Error::Degenerate("degree distribution of an empty network"));
        }
        let mut degrees: Vec<usize> = (0..n).map(|i| self.degree(i, direction)).collect();
        degrees.sort_unstable();
        let mut out = Vec::new();
        for (i, &d) in degrees.iter().enumerate() {
            if i == 0 || degrees[i - 1] != d {
                out.push((d, (n - i) as f64 / n as f64));
            }
        }
        Ok(out)
    }

    pub fn stats(&self) -> NetworkStats {
        NetworkStats {
            nodes: self.nodes.len(),
            users: self.entities.len(),
            tokens: self.tokens.len(),
            links: self.edges.len(),
            density_global: self.density(DensityMode::Global).unwrap_or(0.0),
            density_layered: self.density(DensityMode::Layered).unwrap_or(0.0),
        }
    }

    /// Entity-indexed mask of entities satisfying `pred`.
    pub fn entity_mask(&self, pred: impl Fn(&EntityInfo) -> bool) -> Vec<bool> {
        self.entities.iter().map(pred).collect()
    }

    /// Edges as `(source entity, target entity, token, weight)`, sorted. Two
    /// networks with equal triples are structurally identical regardless of
    /// index assignment.
    pub fn edge_triples(&self) -> Vec<(String, String, String, u64)> {
        let mut out: Vec<_> = self
            .edges
            .iter()
            .map(|e| {
                (
                    self.entity_name(e.source).to_string(),
                    self.entity_name(e.target).to_string(),
                    self.token_name(e.source).to_string(),
                    e.weight,
                )
            })
            .collect();
        out.sort();
        out
    }

    /// Check the structural invariants every constructed network must satisfy:
    /// token-layer closure, an ego endpoint on every edge, no self-loops, and
    /// positive weights.
    pub fn check_invariants(&self) -> std::result::Result<(), String> {
        for e in &self.edges {
            let (s, t) = (self.nodes[e.source], self.nodes[e.target]);
            if s.token != t.token {
                return Err(format!("edge {} -> {} crosses token layers", e.source, e.target));
            }
            if !self.is_ego(e.source) && !self.is_ego(e.target) {
                return Err(format!("edge {} -> {} has no ego endpoint", e.source, e.target));
            }
            if s.entity == t.entity {
                return Err(format!("self-loop on entity {}", self.entities[s.entity].name));
            }
            if e.weight == 0 {
                return Err(format!("edge {} -> {} has zero weight", e.source, e.target));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::{build_entity_map, AddressLabel, Grouping};
    use chrono::DateTime;
    use std::collections::BTreeSet;

    fn rec(from: &str, to: &str, token: &str) -> TransferRecord {
        TransferRecord {
            block_number: 1,
            timestamp: DateTime::from_timestamp(1_600_000_000, 0).unwrap(),
            tx_hash: "0x0".into(),
            from: from.into(),
            to: to.into(),
            token: token.into(),
            value: "1".into(),
        }
    }

    fn ego_map(egos: &[&str]) -> EntityMap {
        let labels: Vec<_> = egos.iter().map(|a| AddressLabel::new(a, Some(&format!("Fund {a}")))).collect();
        let tags: BTreeSet<String> = ["Fund".to_string()].into();
        build_entity_map(&labels, &tags, Grouping::Entity)
    }

    #[test]
    fn ego_to_alter() {
        let net = build_mtn(&[rec("e", "x", "t")], &ego_map(&["e"]));
        assert_eq!(net.node_count(), 2);
        assert_eq!(net.edges(), &[Edge { source: 0, target: 1, weight: 1 }]);
        assert!(net.is_ego(0) && !net.is_ego(1));
        net.check_invariants().unwrap();
    }

    #[test]
    fn alter_alter_dropped() {
        let recs = vec![rec("x", "y", "t"); 3];
        let (net, summary) = build_mtn_with_summary(&recs, &ego_map(&["e"]));
        assert!(net.is_empty());
        assert_eq!(summary.dropped_without_ego, 3);
    }

    #[test]
    fn repeated_transfers_aggregate() {
        let net = build_mtn(&vec![rec("e", "x", "t"); 3], &ego_map(&["e"]));
        assert_eq!(net.edge_count(), 1);
        assert_eq!(net.edges()[0].weight, 3);
    }

    #[test]
    fn intra_entity_transfers_dropped() {
        let labels = vec![
            AddressLabel::new("a1", Some("Fund: hot wallet")),
            AddressLabel::new("a2", Some("Fund: cold wallet")),
        ];
        let map = build_entity_map(&labels, &["Fund".to_string()].into(), Grouping::Entity);
        let (net, summary) = build_mtn_with_summary(&[rec("a1", "a2", "t"), rec("a1", "x", "t")], &map);
        assert_eq!(summary.dropped_self_loop, 1);
        assert_eq!(net.edge_count(), 1);
        // at address level the same transfer is an edge
        let map = build_entity_map(&labels, &["Fund".to_string()].into(), Grouping::Address);
        assert_eq!(build_mtn(&[rec("a1", "a2", "t")], &map).edge_count(), 1);
    }

    #[test]
    fn edges_stay_in_their_token_layer() {
        let net = build_mtn(&[rec("e", "x", "t1"), rec("x", "e", "t2")], &ego_map(&["e"]));
        assert_eq!(net.node_count(), 4);
        assert_eq!(net.layer(0), &[0, 1]);
        assert_eq!(net.layer(1), &[2, 3]);
        net.check_invariants().unwrap();
    }

    #[test]
    fn transpose_small() {
        assert_eq!(MultiTokenNetwork::empty().transpose(), MultiTokenNetwork::empty());
        let net = build_mtn(&vec![rec("e", "x", "t"); 5], &ego_map(&["e"]));
        let t = net.transpose();
        assert_eq!(t.edges(), &[Edge { source: 1, target: 0, weight: 5 }]);
        assert_eq!(t.transpose(), net);
    }

    #[test]
    fn density_examples() {
        let pair = build_mtn(&[rec("e", "x", "t")], &ego_map(&["e"]));
        assert_eq!(pair.density(DensityMode::Global).unwrap(), 0.5);
        assert_eq!(pair.density(DensityMode::Layered).unwrap(), 0.5);

        let two_layers = build_mtn(&[rec("e", "x", "t1"), rec("e", "y", "t2")], &ego_map(&["e"]));
        assert!((two_layers.density(DensityMode::Global).unwrap() - 2.0 / 12.0).abs() < 1e-15);
        assert_eq!(two_layers.density(DensityMode::Layered).unwrap(), 0.5);

        let mut recs = Vec::new();
        for (a, b) in [("a", "b"), ("b", "a"), ("a", "c"), ("c", "a"), ("b", "c"), ("c", "b")] {
            recs.push(rec(a, b, "t"));
        }
        let complete = build_mtn(&recs, &ego_map(&["a", "b", "c"]));
        assert_eq!(complete.density(DensityMode::Global).unwrap(), 1.0);
        assert_eq!(complete.density(DensityMode::Layered).unwrap(), 1.0);

        assert!(MultiTokenNetwork::empty().density(DensityMode::Global).is_err());
        assert!(MultiTokenNetwork::empty().density(DensityMode::Layered).is_err());
    }

    #[test]
    fn ccdf_examples() {
        let star = build_mtn(&[rec("c", "l1", "t"), rec("c", "l2", "t"), rec("c", "l3", "t")], &ego_map(&["c"]));
        assert_eq!(star.degree_ccdf(Direction::Out).unwrap(), vec![(0, 1.0), (3, 0.25)]);

        let cycle = build_mtn(&[rec("a", "b", "t"), rec("b", "a", "t")], &ego_map(&["a"]));
        assert_eq!(cycle.degree_ccdf(Direction::In).unwrap(), vec![(1, 1.0)]);
        assert_eq!(cycle.degree_ccdf(Direction::Out).unwrap(), cycle.degree_ccdf(Direction::In).unwrap());

        assert!(MultiTokenNetwork::empty().degree_ccdf(Direction::In).is_err());
    }

    #[test]
    fn stats_of_empty_network_are_zero() {
        let s = MultiTokenNetwork::empty().stats();
        assert_eq!((s.nodes, s.users, s.tokens, s.links), (0, 0, 0, 0));
        assert_eq!(s.density_global, 0.0);
        assert_eq!(s.density_layered, 0.0);
    }
}
