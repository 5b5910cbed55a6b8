#![allow(dead_code)]

use std::collections::BTreeSet;

use chrono::{TimeZone, Utc};
use proptest::prelude::*;
use tokennet_core::ingest::{build_entity_map, AddressLabel, EntityMap, Grouping, TransferRecord};
use tokennet_core::network::{MultiTokenNetwork, NetworkBuilder};

pub const ADDRESSES: [&str; 8] = ["0xa1", "0xa2", "0xa3", "0xb1", "0xb2", "0xc1", "0xc2", "0xd1"];
pub const TOKENS: [&str; 3] = ["usdc", "weth", "ftt"];

/// Labels for [`ADDRESSES`]: two ego entities (one with two addresses sharing
/// a grouping key), a tagged alter and untagged rest.
pub fn labels() -> Vec<AddressLabel> {
    vec![
        AddressLabel::new("0xa1", Some("Fund A: Hot")),
        AddressLabel::new("0xa2", Some("Fund A: Cold")),
        AddressLabel::new("0xa3", Some("Fund B")),
        AddressLabel::new("0xb1", Some("Exchange 7")),
        AddressLabel::new("0xb2", Some("Exchange 8")),
    ]
}

pub fn ego_tags() -> BTreeSet<String> {
    ["Fund A", "Fund B"].iter().map(|s| s.to_string()).collect()
}

pub fn entity_map() -> EntityMap {
    build_entity_map(&labels(), &ego_tags(), Grouping::Entity)
}

pub fn record(ts: i64, from: &str, to: &str, token: &str) -> TransferRecord {
    TransferRecord {
        block_number: ts as u64 / 13,
        timestamp: Utc.timestamp_opt(ts, 0).unwrap(),
        tx_hash: format!("0x{ts:x}"),
        from: from.to_string(),
        to: to.to_string(),
        token: token.to_string(),
        value: "1".to_string(),
    }
}

prop_compose! {
    pub fn arb_record()(
        ts in 1_500_000_000i64..1_700_000_000,
        from in 0..ADDRESSES.len(),
        to in 0..ADDRESSES.len(),
        token in 0..TOKENS.len(),
    ) -> TransferRecord {
        record(ts, ADDRESSES[from], ADDRESSES[to], TOKENS[token])
    }
}

pub fn arb_records(max: usize) -> impl Strategy<Value = Vec<TransferRecord>> {
    prop::collection::vec(arb_record(), 0..max)
}

/// Single-layer directed graph on `n` nodes, all ego, given as an edge list.
pub fn digraph(n: usize, edges: &[(usize, usize, u64)]) -> MultiTokenNetwork {
    let mut b = NetworkBuilder::new();
    let ids: Vec<usize> = (0..n).map(|i| b.node(&format!("v{i}"), true, "t")).collect();
    for &(s, t, w) in edges {
        b.add_edge(ids[s], ids[t], w);
    }
    b.build()
}

/// `(source, target, weight)` triples in edge order.
pub fn edge_list(net: &MultiTokenNetwork) -> Vec<(usize, usize, f64)> {
    net.edges().iter().map(|e| (e.source, e.target, e.weight as f64)).collect()
}
