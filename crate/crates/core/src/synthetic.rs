//! Seeded generators for tests, benchmarks and demo datasets.

use chrono::{DateTime, Duration, TimeZone, Utc};
use rand::distr::{weighted::WeightedIndex, Distribution};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::ingest::{AccountType, AddressLabel, TransferRecord};
use crate::network::{MultiTokenNetwork, NetworkBuilder};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RandomNetworkConfig {
    pub entities: usize,
    pub tokens: usize,
    /// Edge draws; repeated pairs merge, so the edge count can be lower.
    pub edges: usize,
    pub ego_fraction: f64,
    pub max_weight: u64,
}

impl Default for RandomNetworkConfig {
    fn default() -> Self {
        RandomNetworkConfig {
            entities: 60,
            tokens: 4,
            edges: 300,
            ego_fraction: 0.2,
            max_weight: 20,
        }
    }
}

/// Random multi-token network that satisfies the ego and self-loop rules.
/// Counterparties are skewed towards low indices so that hubs appear.
pub fn random_network(config: &RandomNetworkConfig, seed: u64) -> MultiTokenNetwork {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = config.entities.max(2);
    let egos = ((n as f64 * config.ego_fraction).ceil() as usize).clamp(1, n);
    let tokens = config.tokens.max(1);
    let mut b = NetworkBuilder::new();
    for _ in 0..config.edges {
        let token = format!("tok{}", rng.random_range(0..tokens));
        let ego = rng.random_range(0..egos);
        let other = loop {
            let u: f64 = rng.random();
            let v = ((u * u) * n as f64) as usize;
            if v != ego {
                break v.min(n - 1);
            }
        };
        let (src, dst) = if rng.random_bool(0.5) { (ego, other) } else { (other, ego) };
        let s = b.node(&format!("e{src}"), src < egos, &token);
        let t = b.node(&format!("e{dst}"), dst < egos, &token);
        b.add_edge(s, t, rng.random_range(1..=config.max_weight.max(1)));
    }
    b.build()
}

/// Transfers plus the side files needed to analyse them.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticDataset {
    pub transfers: Vec<TransferRecord>,
    pub labels: Vec<AddressLabel>,
    pub ego_tags: Vec<String>,
    pub allowlist: Vec<String>,
}

const EGO_TAGS: [&str; 3] = ["Alameda Research", "Jump Trading", "Wintermute"];
const ALTER_TAGS: [&str; 9] = [
    "Binance 7",
    "Binance 14",
    "FTX Exchange",
    "Coinbase 10",
    "Compound: cETH Token",
    "Compound: cUSDC Token",
    "Uniswap V3: USDC-ETH",
    "Uniswap V3: Router",
    "Aave: Lending Pool V2",
];
const TOKENS: [(&str, u32); 12] = [
    ("usdc", 30),
    ("usdt", 25),
    ("weth", 18),
    ("dai", 10),
    ("wbtc", 8),
    ("ftt", 7),
    ("srm", 4),
    ("link", 3),
    ("grt", 3),
    ("uni", 3),
    ("free-airdrop", 2),
    ("zero-value", 1),
];
const ALLOWED_TOKENS: usize = 10;

fn address(rng: &mut ChaCha8Rng) -> String {
    format!("0x{:08x}{:016x}{:016x}", rng.random::<u32>(), rng.random::<u64>(), rng.random::<u64>())
}

fn hash(rng: &mut ChaCha8Rng) -> String {
    let mut out = String::from("0x");
    for _ in 0..4 {
        out.push_str(&format!("{:016x}", rng.random::<u64>()));
    }
    out
}

/// Fund-flow style dataset spanning mid-2019 to early 2023.
///
/// Three ego groups (eight Alameda accounts, two Jump accounts, two
/// Wintermute accounts sharing one grouping key), tagged exchanges and
/// protocols, and a pool of untagged counterparties, some of which have no
/// label row at all. About one in seven transfers has no ego endpoint.
/// Alameda activity drops sharply after 2022-11-11.
pub fn synthetic_dataset(seed: u64, transfers: usize) -> SyntheticDataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut labels = Vec::new();
    let mut label = |rng: &mut ChaCha8Rng, tag: Option<&str>, ty: AccountType| {
        let mut l = AddressLabel::new(&address(rng), tag);
        l.account_type = ty;
        labels.push(l.clone());
        l.address
    };

    let alameda: Vec<String> = (1..=8)
        .map(|i| label(&mut rng, Some(&format!("Alameda Research {i}")), AccountType::Eoa))
        .collect();
    let jump: Vec<String> = ["Jump Trading", "Jump Trading 2"]
        .iter()
        .map(|t| label(&mut rng, Some(t), AccountType::Eoa))
        .collect();
    let wintermute: Vec<String> = ["Wintermute: Hot Wallet", "Wintermute: Market Maker"]
        .iter()
        .map(|t| label(&mut rng, Some(t), AccountType::Eoa))
        .collect();
    let tagged: Vec<String> = ALTER_TAGS
        .iter()
        .map(|t| {
            let ty = if t.contains(':') { AccountType::Ca } else { AccountType::Eoa };
            label(&mut rng, Some(t), ty)
        })
        .collect();
    let mut untagged: Vec<String> = (0..40).map(|_| label(&mut rng, None, AccountType::Unknown)).collect();
    untagged.extend((0..40).map(|_| address(&mut rng)));

    let token_dist = WeightedIndex::new(TOKENS.iter().map(|t| t.1)).expect("static weights");
    let start = Utc.with_ymd_and_hms(2019, 6, 1, 0, 0, 0).unwrap();
    let end = Utc.with_ymd_and_hms(2023, 3, 1, 0, 0, 0).unwrap();
    let collapse = Utc.with_ymd_and_hms(2022, 11, 11, 0, 0, 0).unwrap();
    let span = (end - start).num_seconds();

    let pick_skewed = |rng: &mut ChaCha8Rng, pool: &[String]| {
        let u: f64 = rng.random();
        pool[((u * u * u) * pool.len() as f64) as usize % pool.len()].clone()
    };

    let mut records = Vec::with_capacity(transfers);
    for _ in 0..transfers {
        let group = rng.random_range(0..10);
        let (ego, is_alameda) = match group {
            0..=6 => (pick_skewed(&mut rng, &alameda), true),
            7 | 8 => (jump[rng.random_range(0..jump.len())].clone(), false),
            _ => (wintermute[rng.random_range(0..wintermute.len())].clone(), false),
        };
        let mut timestamp: DateTime<Utc> = start + Duration::seconds(rng.random_range(0..span));
        while is_alameda && timestamp >= collapse && rng.random_bool(0.85) {
            timestamp = start + Duration::seconds(rng.random_range(0..span));
        }
        let roll = rng.random_range(0..100);
        let (from, to) = if roll < 14 {
            (pick_skewed(&mut rng, &untagged), pick_skewed(&mut rng, &tagged))
        } else {
            let other = match roll {
                14..=25 => {
                    let all: Vec<&String> = alameda.iter().chain(&jump).chain(&wintermute).collect();
                    all[rng.random_range(0..all.len())].clone()
                }
                26..=60 => pick_skewed(&mut rng, &tagged),
                _ => pick_skewed(&mut rng, &untagged),
            };
            if rng.random_bool(0.5) {
                (ego, other)
            } else {
                (other, ego)
            }
        };
        let token = TOKENS[token_dist.sample(&mut rng)].0.to_string();
        records.push(TransferRecord {
            block_number: 0,
            timestamp,
            tx_hash: hash(&mut rng),
            from,
            to,
            token,
            value: rng.random_range(1u64..10_000_000_000_000).to_string(),
        });
    }
    records.sort_by(|a, b| a.timestamp.cmp(&b.timestamp).then_with(|| a.tx_hash.cmp(&b.tx_hash)));
    for r in &mut records {
        r.block_number = 7_870_000 + ((r.timestamp - start).num_seconds() / 13) as u64;
    }

    SyntheticDataset {
        transfers: records,
        labels,
        ego_tags: EGO_TAGS.iter().map(|s| s.to_string()).collect(),
        allowlist: TOKENS[..ALLOWED_TOKENS].iter().map(|t| t.0.to_string()).collect(),
    }
}
