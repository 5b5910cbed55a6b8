//! Calendar snapshot series.
//!
//! Each window holds an independent network built from the transfers inside
//! that UTC day, month or year. Windows without transfers are omitted.

use std::collections::{BTreeMap, BTreeSet, HashSet};

use chrono::{DateTime, Datelike, NaiveDate, Utc};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::centrality::{cheirank, compensated_sum, pagerank, PageRankParams};
use crate::error::Result;
use crate::group::EntityGroup;
use crate::ingest::{EntityMap, TransferRecord};
use crate::network::{build_mtn_with_summary, MultiTokenNetwork};
use crate::ranking::top_k;

/// Tokens ranked per side when choosing the default token set.
pub const DEFAULT_TOP_TOKENS: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Resolution {
    Day,
    Month,
    Year,
}

impl std::str::FromStr for Resolution {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "day" => Ok(Resolution::Day),
            "month" => Ok(Resolution::Month),
            "year" => Ok(Resolution::Year),
            other => Err(format!("unknown resolution `{other}` (expected day, month or year)")),
        }
    }
}

fn midnight(date: NaiveDate) -> DateTime<Utc> {
    date.and_hms_opt(0, 0, 0).expect("midnight exists").and_utc()
}

fn month_start(year: i32, month: u32) -> NaiveDate {
    NaiveDate::from_ymd_opt(year, month, 1).expect("valid month")
}

impl Resolution {
    /// Half-open calendar window `[start, end)` containing `ts`.
    pub fn window_of(self, ts: DateTime<Utc>) -> (DateTime<Utc>, DateTime<Utc>) {
        let date = ts.date_naive();
        let (start, end) = match self {
            Resolution::Day => (date, date.succ_opt().expect("date in range")),
            Resolution::Month => {
                let start = month_start(date.year(), date.month());
                let end = if date.month() == 12 {
                    month_start(date.year() + 1, 1)
                } else {
                    month_start(date.year(), date.month() + 1)
                };
                (start, end)
            }
            Resolution::Year => (month_start(date.year(), 1), month_start(date.year() + 1, 1)),
        };
        (midnight(start), midnight(end))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub start: DateTime<Utc>,
    pub end: DateTime<Utc>,
    pub network: MultiTokenNetwork,
    /// Transfers inside the window, before the ego and self-loop rules.
    pub transfers: usize,
    /// Transfers represented in the window's edge weights.
    pub retained: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SnapshotSeries {
    pub resolution: Resolution,
    /// Ascending, disjoint, non-empty windows.
    pub snapshots: Vec<Snapshot>,
    /// Network over every record of the series.
    pub aggregate: MultiTokenNetwork,
}

impl SnapshotSeries {
    pub fn len(&self) -> usize {
        self.snapshots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.snapshots.is_empty()
    }
}

pub fn snapshot_series(records: &[TransferRecord], resolution: Resolution, entities: &EntityMap) -> SnapshotSeries {
    let mut sorted: Vec<&TransferRecord> = records.iter().collect();
    sorted.sort_by_key(|r| r.timestamp);

    let mut windows: Vec<((DateTime<Utc>, DateTime<Utc>), Vec<TransferRecord>)> = Vec::new();
    for r in sorted {
        let window = resolution.window_of(r.timestamp);
        match windows.last_mut() {
            Some((w, bucket)) if *w == window => bucket.push(r.clone()),
            _ => windows.push((window, vec![r.clone()])),
        }
    }

    let snapshots: Vec<Snapshot> = windows
        .par_iter()
        .map(|((start, end), bucket)| {
            let (network, summary) = build_mtn_with_summary(bucket, entities);
            Snapshot {
                start: *start,
                end: *end,
                network,
                transfers: bucket.len(),
                retained: summary.retained,
            }
        })
        .collect();

    let all: Vec<TransferRecord> = windows.into_iter().flat_map(|(_, b)| b).collect();
    let aggregate = build_mtn_with_summary(&all, entities).0;
    SnapshotSeries {
        resolution,
        snapshots,
        aggregate,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Novelty {
    pub new_entity_fraction: f64,
    pub new_token_fraction: f64,
}

/// Share of each window's entities and tokens never seen in an earlier window.
/// The first window reports 1 for both.
pub fn novelty_ratios(series: &SnapshotSeries) -> Vec<Novelty> {
    let mut seen_entities: HashSet<&str> = HashSet::new();
    let mut seen_tokens: HashSet<&str> = HashSet::new();
    let mut out = Vec::with_capacity(series.len());
    for (i, snap) in series.snapshots.iter().enumerate() {
        let entities: BTreeSet<&str> = snap.network.entities().iter().map(|e| e.name.as_str()).collect();
        let tokens: BTreeSet<&str> = snap.network.tokens().iter().map(String::as_str).collect();
        let fraction = |present: &BTreeSet<&str>, seen: &HashSet<&str>| {
            if i == 0 {
                1.0
            } else if present.is_empty() {
                0.0
            } else {
                present.iter().filter(|x| !seen.contains(*x)).count() as f64 / present.len() as f64
            }
        };
        out.push(Novelty {
            new_entity_fraction: fraction(&entities, &seen_entities),
            new_token_fraction: fraction(&tokens, &seen_tokens),
        });
        seen_entities.extend(entities);
        seen_tokens.extend(tokens);
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct EgoActivity {
    pub in_edges: usize,
    pub out_edges: usize,
    /// Weight summed over edges touching the group, each edge counted once.
    pub transactions: u64,
}

/// Edge and transaction counts involving `group`. An edge between two group
/// members counts as both incoming and outgoing.
pub fn ego_activity(series: &SnapshotSeries, group: &EntityGroup) -> Vec<EgoActivity> {
    series
        .snapshots
        .iter()
        .map(|snap| window_activity(&snap.network, group))
        .collect()
}

pub fn window_activity(net: &MultiTokenNetwork, group: &EntityGroup) -> EgoActivity {
    let mask = group.mask(net);
    let mut activity = EgoActivity::default();
    for e in net.edges() {
        let from_group = mask[net.node(e.source).entity];
        let to_group = mask[net.node(e.target).entity];
        activity.out_edges += usize::from(from_group);
        activity.in_edges += usize::from(to_group);
        if from_group || to_group {
            activity.transactions += e.weight;
        }
    }
    activity
}

/// Group-level scores for one network.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GroupScores {
    pub pagerank: f64,
    pub cheirank: f64,
    pub balance: f64,
    /// Per-token contribution to `balance`, over tokens where the group has a node.
    pub token_balance: BTreeMap<String, f64>,
    pub converged: bool,
}

/// Sum the group's PageRank and CheiRank mass on `net`. `None` if the group
/// has no node there.
pub fn group_scores(net: &MultiTokenNetwork, group: &EntityGroup, params: &PageRankParams) -> Result<Option<GroupScores>> {
    let mask = group.mask(net);
    let members: Vec<usize> = (0..net.node_count()).filter(|&i| mask[net.node(i).entity]).collect();
    if members.is_empty() {
        return Ok(None);
    }
    let pr = pagerank(net, params)?;
    let cr = cheirank(net, params)?;
    let p = compensated_sum(members.iter().map(|&i| pr.values[i]));
    let p_star = compensated_sum(members.iter().map(|&i| cr.values[i]));
    let denom = p + p_star;

    let mut per_token: BTreeMap<&str, (Vec<f64>, Vec<f64>)> = BTreeMap::new();
    for &i in &members {
        let entry = per_token.entry(net.token_name(i)).or_default();
        entry.0.push(pr.values[i]);
        entry.1.push(cr.values[i]);
    }
    let token_balance = per_token
        .into_iter()
        .map(|(token, (prs, crs))| {
            let diff = compensated_sum(crs.into_iter().chain(prs.into_iter().map(|x| -x)));
            (token.to_string(), diff / denom)
        })
        .collect();
    Ok(Some(GroupScores {
        pagerank: p,
        cheirank: p_star,
        balance: (p_star - p) / denom,
        token_balance,
        converged: pr.converged && cr.converged,
    }))
}

/// Group scores per window, `None` where the group is absent.
pub fn group_scores_series(
    series: &SnapshotSeries,
    group: &EntityGroup,
    params: &PageRankParams,
) -> Result<Vec<Option<GroupScores>>> {
    series
        .snapshots
        .par_iter()
        .map(|snap| group_scores(&snap.network, group, params))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GroupCentrality {
    pub pagerank: f64,
    pub cheirank: f64,
    pub balance: f64,
}

/// `(p_group, p*_group, B_group)` per window.
pub fn group_centrality_series(
    series: &SnapshotSeries,
    group: &EntityGroup,
    params: &PageRankParams,
) -> Result<Vec<Option<GroupCentrality>>> {
    Ok(group_scores_series(series, group, params)?
        .into_iter()
        .map(|s| {
            s.map(|s| GroupCentrality {
                pagerank: s.pagerank,
                cheirank: s.cheirank,
                balance: s.balance,
            })
        })
        .collect())
}

/// Union of the group's top tokens by PageRank mass and by CheiRank mass on `net`.
pub fn default_token_set(
    net: &MultiTokenNetwork,
    group: &EntityGroup,
    params: &PageRankParams,
    k: usize,
) -> Result<BTreeSet<String>> {
    let mask = group.mask(net);
    if net.is_empty() || !mask.iter().any(|&m| m) {
        return Ok(BTreeSet::new());
    }
    let pr = pagerank(net, params)?;
    let cr = cheirank(net, params)?;
    let mut pr_tok = vec![0.0; net.tokens().len()];
    let mut cr_tok = vec![0.0; net.tokens().len()];
    for (i, node) in net.nodes().iter().enumerate() {
        if mask[node.entity] {
            pr_tok[node.token] += pr.values[i];
            cr_tok[node.token] += cr.values[i];
        }
    }
    let mut out = BTreeSet::new();
    for scores in [&pr_tok, &cr_tok] {
        for (t, s) in top_k(scores, k) {
            if s > 0.0 {
                out.insert(net.tokens()[t].clone());
            }
        }
    }
    Ok(out)
}

/// Per-window token contributions `B_{group,t}` restricted to `tokens`
/// (default: [`default_token_set`] on the series aggregate).
pub fn token_pctb_series(
    series: &SnapshotSeries,
    group: &EntityGroup,
    tokens: Option<&BTreeSet<String>>,
    params: &PageRankParams,
) -> Result<Vec<BTreeMap<String, f64>>> {
    let default;
    let tokens = match tokens {
        Some(t) => t,
        None => {
            default = default_token_set(&series.aggregate, group, params, DEFAULT_TOP_TOKENS)?;
            &default
        }
    };
    Ok(group_scores_series(series, group, params)?
        .into_iter()
        .map(|s| {
            s.map(|s| {
                s.token_balance
                    .into_iter()
                    .filter(|(t, _)| tokens.contains(t))
                    .collect()
            })
            .unwrap_or_default()
        })
        .collect())
}

/// Mean per calendar month over the days that have a value.
pub fn monthly_average(daily: &[(DateTime<Utc>, f64)]) -> Vec<(DateTime<Utc>, f64)> {
    let mut months: BTreeMap<DateTime<Utc>, (f64, usize)> = BTreeMap::new();
    for &(day, value) in daily {
        let (start, _) = Resolution::Month.window_of(day);
        let slot = months.entry(start).or_insert((0.0, 0));
        slot.0 += value;
        slot.1 += 1;
    }
    months
        .into_iter()
        .map(|(m, (sum, count))| (m, sum / count as f64))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::{build_entity_map, AddressLabel, Grouping};

    fn at(date: &str) -> DateTime<Utc> {
        crate::ingest::parse_timestamp(date).unwrap()
    }

    fn rec(ts: &str, from: &str, to: &str, token: &str) -> TransferRecord {
        TransferRecord {
            block_number: 0,
            timestamp: at(ts),
            tx_hash: "0x".into(),
            from: from.into(),
            to: to.into(),
            token: token.into(),
            value: "1".into(),
        }
    }

    fn entities() -> EntityMap {
        let labels = vec![
            AddressLabel::new("e1", Some("Fund A 1")),
            AddressLabel::new("e2", Some("Fund A 2")),
            AddressLabel::new("f", Some("Fund B")),
        ];
        build_entity_map(&labels, &["Fund".to_string()].into(), Grouping::Entity)
    }

    #[test]
    fn window_boundaries() {
        let ts = at("2020-12-31T23:59:59Z");
        assert_eq!(Resolution::Day.window_of(ts), (at("2020-12-31"), at("2021-01-01")));
        assert_eq!(Resolution::Month.window_of(ts), (at("2020-12-01"), at("2021-01-01")));
        assert_eq!(Resolution::Year.window_of(ts), (at("2020-01-01"), at("2021-01-01")));
        assert_eq!(Resolution::Month.window_of(at("2020-02-29T12:00:00Z")).1, at("2020-03-01"));
    }

    #[test]
    fn one_day_is_one_window() {
        let recs = vec![rec("2021-05-05T01:00:00Z", "e1", "x", "t"), rec("2021-05-05T22:00:00Z", "x", "e1", "t")];
        for res in [Resolution::Day, Resolution::Month, Resolution::Year] {
            assert_eq!(snapshot_series(&recs, res, &entities()).len(), 1);
        }
    }

    #[test]
    fn month_boundary() {
        let recs = vec![rec("2021-01-31T12:00:00Z", "e1", "x", "t"), rec("2021-02-01T12:00:00Z", "e1", "x", "t")];
        let e = entities();
        assert_eq!(snapshot_series(&recs, Resolution::Year, &e).len(), 1);
        assert_eq!(snapshot_series(&recs, Resolution::Month, &e).len(), 2);
        assert_eq!(snapshot_series(&recs, Resolution::Day, &e).len(), 2);
    }

    #[test]
    fn empty_month_omitted() {
        let recs = vec![
            rec("2021-03-10T00:00:00Z", "e1", "x", "t"),
            rec("2021-01-10T00:00:00Z", "e1", "y", "t"),
        ];
        let s = snapshot_series(&recs, Resolution::Month, &entities());
        assert_eq!(s.len(), 2);
        assert_eq!(s.snapshots[0].start, at("2021-01-01"));
        assert_eq!(s.snapshots[1].start, at("2021-03-01"));
    }

    #[test]
    fn novelty() {
        let recs = vec![
            rec("2021-01-01T00:00:00Z", "e1", "x", "t"),
            rec("2021-01-02T00:00:00Z", "e1", "x", "t"),
            rec("2021-01-03T00:00:00Z", "e1", "x", "t"),
            rec("2021-01-03T00:00:00Z", "f", "y", "u"),
        ];
        let s = snapshot_series(&recs, Resolution::Day, &entities());
        let n = novelty_ratios(&s);
        assert_eq!(n[0], Novelty { new_entity_fraction: 1.0, new_token_fraction: 1.0 });
        assert_eq!(n[1], Novelty { new_entity_fraction: 0.0, new_token_fraction: 0.0 });
        // entities {Fund A 1, x, Fund B, y}: two unseen; tokens {t, u}: one unseen
        assert_eq!(n[2], Novelty { new_entity_fraction: 0.5, new_token_fraction: 0.5 });
    }

    #[test]
    fn activity_counts() {
        let recs = vec![
            rec("2021-01-01T00:00:00Z", "e1", "x", "t"),
            rec("2021-01-01T00:00:00Z", "e1", "x", "t"),
            rec("2021-01-01T00:00:00Z", "e1", "x", "t"),
            rec("2021-01-01T00:00:00Z", "e1", "x", "t"),
            rec("2021-01-02T00:00:00Z", "f", "x", "t"),
            rec("2021-01-03T00:00:00Z", "x", "e2", "t"),
            rec("2021-01-03T00:00:00Z", "e1", "e2", "t"),
            rec("2021-01-03T00:00:00Z", "e2", "y", "u"),
            rec("2021-01-03T00:00:00Z", "e2", "y", "u"),
        ];
        let s = snapshot_series(&recs, Resolution::Day, &entities());
        let group = EntityGroup::resolve("Fund A", s.aggregate.entities().iter().map(|e| e.name.as_str())).unwrap();
        let a = ego_activity(&s, &group);
        assert_eq!(a[0], EgoActivity { in_edges: 0, out_edges: 1, transactions: 4 });
        assert_eq!(a[1], EgoActivity::default());
        // x->A2 (in), A1->A2 (in and out), A2->y (out, weight 2)
        assert_eq!(a[2], EgoActivity { in_edges: 2, out_edges: 2, transactions: 4 });
    }

    #[test]
    fn monthly_means() {
        assert_eq!(monthly_average(&[(at("2021-04-07"), 5.0)]), vec![(at("2021-04-01"), 5.0)]);
        assert_eq!(
            monthly_average(&[(at("2021-04-07"), 2.0), (at("2021-04-09"), 4.0)]),
            vec![(at("2021-04-01"), 3.0)]
        );
        let daily = [
            (at("2021-04-01"), 1.0),
            (at("2021-04-03"), 2.0),
            (at("2021-04-30"), 6.0),
            (at("2021-05-02"), 10.0),
        ];
        assert_eq!(
            monthly_average(&daily),
            vec![(at("2021-04-01"), 3.0), (at("2021-05-01"), 10.0)]
        );
    }
}
