//! Directional multiscale backbone (disparity filter).
//!
//! An edge `i -> j` in token layer `t` has two significance scores: its share of
//! `i`'s outgoing transfers (`s_out`) and its share of `j`'s incoming transfers
//! (`s_in`). Under a uniform null over a node's `k` neighbours the edge is
//! significant at the source when `(1 - s_out)^(k_out - 1) < alpha`, and at the
//! target when `(1 - s_in)^(k_in - 1) < alpha`. An edge passing either test is kept.

use serde::Serialize;

use crate::error::{invalid, Result};
use crate::network::{Direction, MultiTokenNetwork};

pub const DEFAULT_ALPHA: f64 = 0.001;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum KeptBy {
    SourceTest,
    TargetTest,
    Both,
}

impl KeptBy {
    pub fn as_str(self) -> &'static str {
        match self {
            KeptBy::SourceTest => "source_test",
            KeptBy::TargetTest => "target_test",
            KeptBy::Both => "both",
        }
    }

    fn from_tests(source: bool, target: bool) -> Option<Self> {
        match (source, target) {
            (true, true) => Some(KeptBy::Both),
            (true, false) => Some(KeptBy::SourceTest),
            (false, true) => Some(KeptBy::TargetTest),
            (false, false) => None,
        }
    }
}

/// Significance of one retained edge. `edge` indexes the original network's edges.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RetainedEdge {
    pub edge: usize,
    pub s_out: f64,
    pub s_in: f64,
    pub kept_by: KeptBy,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BackboneResult {
    pub alpha: f64,
    /// Retained subnetwork; its edges are in the same order as `retained`.
    pub network: MultiTokenNetwork,
    pub retained: Vec<RetainedEdge>,
}

/// `(s_out, s_in)` of the edge at `edge` in `net.edges()`.
pub fn edge_significance(net: &MultiTokenNetwork, edge: usize) -> (f64, f64) {
    let e = net.edges()[edge];
    let w = e.weight as f64;
    let out_total = net.strength(e.source, Direction::Out) as f64;
    let in_total = net.strength(e.target, Direction::In) as f64;
    (w / out_total, w / in_total)
}

/// Disparity test value `(1 - s)^(k - 1)`; equals 1 for a degree-one node.
pub fn disparity_p_value(share: f64, degree: usize) -> f64 {
    debug_assert!(degree >= 1);
    (1.0 - share).powi(degree as i32 - 1)
}

pub fn extract_backbone(net: &MultiTokenNetwork, alpha: f64) -> Result<BackboneResult> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(invalid("alpha", alpha, "must lie in (0, 1]"));
    }
    let n = net.node_count();
    let out_strength: Vec<u64> = (0..n).map(|i| net.strength(i, Direction::Out)).collect();
    let in_strength: Vec<u64> = (0..n).map(|i| net.strength(i, Direction::In)).collect();

    let retained: Vec<RetainedEdge> = net
        .edges()
        .iter()
        .enumerate()
        .filter_map(|(idx, e)| {
            let w = e.weight as f64;
            let s_out = w / out_strength[e.source] as f64;
            let s_in = w / in_strength[e.target] as f64;
            let source_ok = disparity_p_value(s_out, net.degree(e.source, Direction::Out)) < alpha;
            let target_ok = disparity_p_value(s_in, net.degree(e.target, Direction::In)) < alpha;
            KeptBy::from_tests(source_ok, target_ok).map(|kept_by| RetainedEdge {
                edge: idx,
                s_out,
                s_in,
                kept_by,
            })
        })
        .collect();

    let indices: Vec<usize> = retained.iter().map(|r| r.edge).collect();
    let network = net.edge_subnetwork(&indices);
    Ok(BackboneResult {
        alpha,
        network,
        retained,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BackboneStats {
    pub alpha: f64,
    pub nodes: usize,
    pub users: usize,
    pub tokens: usize,
    pub links: usize,
    pub density_global: f64,
    pub density_layered: f64,
    pub fraction_nodes: f64,
    pub fraction_users: f64,
    pub fraction_tokens: f64,
    pub fraction_links: f64,
}

fn fraction(part: usize, whole: usize) -> f64 {
    if whole == 0 {
        0.0
    } else {
        part as f64 / whole as f64
    }
}

pub fn backbone_stats(original: &MultiTokenNetwork, result: &BackboneResult) -> BackboneStats {
    let full = original.stats();
    let kept = result.network.stats();
    BackboneStats {
        alpha: result.alpha,
        nodes: kept.nodes,
        users: kept.users,
        tokens: kept.tokens,
        links: kept.links,
        density_global: kept.density_global,
        density_layered: kept.density_layered,
        fraction_nodes: fraction(kept.nodes, full.nodes),
        fraction_users: fraction(kept.users, full.users),
        fraction_tokens: fraction(kept.tokens, full.tokens),
        fraction_links: fraction(kept.links, full.links),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::NetworkBuilder;

    fn hub(weights: &[u64]) -> MultiTokenNetwork {
        let mut b = NetworkBuilder::new();
        let h = b.node("hub", true, "t");
        for (i, &w) in weights.iter().enumerate() {
            let leaf = b.node(&format!("leaf{i}"), false, "t");
            b.add_edge(h, leaf, w);
        }
        b.build()
    }

    #[test]
    fn significance_shares() {
        let net = hub(&[7]);
        assert_eq!(edge_significance(&net, 0), (1.0, 1.0));
        let net = hub(&[9, 1]);
        assert_eq!(edge_significance(&net, 0).0, 0.9);
        assert_eq!(edge_significance(&net, 1).0, 0.1);
    }

    #[test]
    fn equal_weight_hub_keeps_nothing() {
        let net = hub(&[1; 10]);
        // hub test (0.9)^9 ~ 0.387, leaf tests have exponent zero
        let bb = extract_backbone(&net, 0.001).unwrap();
        assert!(bb.retained.is_empty());
        assert!(bb.network.is_empty());
    }

    #[test]
    fn dominant_edge_survives() {
        let mut weights = vec![91];
        weights.extend([1; 9]);
        let net = hub(&weights);
        let bb = extract_backbone(&net, 0.001).unwrap();
        assert_eq!(bb.retained.len(), 1);
        assert_eq!(bb.retained[0].edge, 0);
        assert_eq!(bb.retained[0].kept_by, KeptBy::SourceTest);
        assert_eq!(bb.network.node_count(), 2);
        assert_eq!(bb.network.edges()[0].weight, 91);
    }

    #[test]
    fn single_edge_never_kept() {
        let net = hub(&[5]);
        assert!(extract_backbone(&net, 0.5).unwrap().retained.is_empty());
        assert!(extract_backbone(&net, 1.0).unwrap().retained.is_empty());
    }

    #[test]
    fn alpha_bounds() {
        let net = hub(&[1, 2]);
        assert!(extract_backbone(&net, 0.0).is_err());
        assert!(extract_backbone(&net, -0.1).is_err());
        assert!(extract_backbone(&net, 1.5).is_err());
        assert!(extract_backbone(&net, f64::NAN).is_err());
        assert!(extract_backbone(&net, 1.0).is_ok());
    }

    #[test]
    fn stats_of_empty_and_full() {
        let net = hub(&[1; 10]);
        let bb = extract_backbone(&net, 0.001).unwrap();
        let s = backbone_stats(&net, &bb);
        assert_eq!((s.nodes, s.users, s.tokens, s.links), (0, 0, 0, 0));
        assert_eq!((s.fraction_nodes, s.fraction_links), (0.0, 0.0));
        assert_eq!(s.density_global, 0.0);

        // complete 3-node layer: every node has two out- and two in-neighbours,
        // so at alpha = 1 each test value (1 - 1/2)^1 = 0.5 passes
        let mut b = NetworkBuilder::new();
        let ids: Vec<_> = ["a", "b", "c"].iter().map(|n| b.node(n, true, "t")).collect();
        for &s in &ids {
            for &t in &ids {
                if s != t {
                    b.add_edge(s, t, 1);
                }
            }
        }
        let dense = b.build();
        let bb = extract_backbone(&dense, 1.0).unwrap();
        let s = backbone_stats(&dense, &bb);
        assert_eq!(
            (s.fraction_nodes, s.fraction_users, s.fraction_tokens, s.fraction_links),
            (1.0, 1.0, 1.0, 1.0)
        );
        assert!(bb.retained.iter().all(|r| r.kept_by == KeptBy::Both));
    }
}
