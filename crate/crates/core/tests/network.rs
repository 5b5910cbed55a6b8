mod common;

use proptest::prelude::*;
use tokennet_core::network::{build_mtn_with_summary, Direction};
use tokennet_core::synthetic::{random_network, RandomNetworkConfig};

use common::*;

proptest! {
    #[test]
    fn construction_invariants_and_weight_conservation(records in arb_records(80)) {
        let map = entity_map();
        let (net, summary) = build_mtn_with_summary(&records, &map);
        prop_assert_eq!(net.check_invariants(), Ok(()));
        prop_assert_eq!(net.total_weight(), summary.retained);
        prop_assert_eq!(
            summary.retained + summary.dropped_self_loop + summary.dropped_without_ego,
            records.len() as u64
        );
        let out: u64 = (0..net.node_count()).map(|v| net.strength(v, Direction::Out)).sum();
        let inn: u64 = (0..net.node_count()).map(|v| net.strength(v, Direction::In)).sum();
        prop_assert_eq!(out, summary.retained);
        prop_assert_eq!(inn, summary.retained);
    }

    #[test]
    fn construction_ignores_record_order(
        (records, shuffled) in arb_records(60).prop_flat_map(|r| (Just(r.clone()), Just(r).prop_shuffle()))
    ) {
        let map = entity_map();
        prop_assert_eq!(build_mtn_with_summary(&records, &map), build_mtn_with_summary(&shuffled, &map));
    }

    #[test]
    fn transpose_is_an_involution(seed in any::<u64>()) {
        let cfg = RandomNetworkConfig { entities: 20, tokens: 3, edges: 60, ..Default::default() };
        let net = random_network(&cfg, seed);
        let t = net.transpose();
        prop_assert_eq!(t.check_invariants(), Ok(()));
        prop_assert_eq!(t.edge_count(), net.edge_count());
        prop_assert_eq!(t.transpose(), net);
    }
}

#[test]
fn alter_alter_and_self_loop_transfers_are_dropped() {
    let map = entity_map();
    let records = vec![
        record(1, "0xb1", "0xb2", "usdc"),
        record(2, "0xa1", "0xa2", "usdc"),
        record(3, "0xa1", "0xb1", "usdc"),
        record(4, "0xa2", "0xb1", "usdc"),
        record(5, "0xa1", "0xb1", "weth"),
    ];
    let (net, summary) = build_mtn_with_summary(&records, &map);
    assert_eq!(summary.dropped_without_ego, 1);
    assert_eq!(summary.dropped_self_loop, 1);
    assert_eq!(net.edge_count(), 2);
    let usdc = net.find_node("Fund A", "usdc").unwrap();
    assert_eq!(net.out_edges(usdc)[0].weight, 2);
    assert_eq!(net.stats().tokens, 2);
}
