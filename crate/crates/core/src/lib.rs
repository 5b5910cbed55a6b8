//! Multi-token transfer network analysis.
//!
//! Transfers between labelled addresses are grouped into entities and laid
//! out as one directed layer per token. On top of that network the crate
//! computes PageRank/CheiRank and their trade balance, disparity-filter
//! backbones, strongly connected components, Louvain communities and
//! per-window temporal series.

pub mod backbone;
pub mod centrality;
pub mod community;
pub mod error;
pub mod export;
pub mod group;
pub mod ingest;
pub mod network;
pub mod ranking;
pub mod structure;
pub mod synthetic;
pub mod temporal;

pub use backbone::{extract_backbone, BackboneResult, BackboneStats, KeptBy};
pub use centrality::{cheirank, pagerank, Axis, CentralityReport, PageRankParams, ScoreVector};
pub use community::{louvain, modularity, project_undirected, Partition, UndirectedGraph};
pub use error::{Error, Result};
pub use group::EntityGroup;
pub use ingest::{
    build_entity_map, filter_transfers, parse_labels, parse_transfers, AddressLabel, EntityMap, Grouping, InputFormat,
    TransferRecord,
};
pub use network::{build_mtn, DensityMode, Direction, Edge, MultiTokenNetwork, NetworkBuilder, NodeId};
pub use ranking::{rbo, top_k};
pub use structure::{scc_decomposition, Component, SccSummary};
pub use temporal::{snapshot_series, Resolution, SnapshotSeries};
