//! Shared inputs for the benchmarks.

use tokennet_core::network::MultiTokenNetwork;
use tokennet_core::synthetic::{random_network, RandomNetworkConfig};

/// Random network with `entities` entities over five tokens, about four
/// edge draws per entity.
pub fn network(entities: usize) -> MultiTokenNetwork {
    let cfg = RandomNetworkConfig {
        entities,
        tokens: 5,
        edges: entities * 4,
        ego_fraction: 0.1,
        max_weight: 50,
    };
    random_network(&cfg, 0xbe7c)
}

pub const SIZES: [usize; 3] = [1_000, 10_000, 50_000];
