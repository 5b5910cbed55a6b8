use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;
use tokennet_core::backbone::{backbone_stats, extract_backbone};
use tokennet_core::centrality::{CentralityReport, ScoreVector};
use tokennet_core::community::{louvain, project_undirected};
use tokennet_core::export::{self, Granularity, GraphAttributes, SeriesRow};
use tokennet_core::group::EntityGroup;
use tokennet_core::ingest::{
    self, build_entity_map, filter_transfers, parse_allowlist, parse_labels, parse_line_list, parse_timestamp,
    parse_transfers, EntityMap, Grouping, InputFormat, TransferRecord,
};
use tokennet_core::network::{build_mtn_with_summary, BuildSummary, Direction, MultiTokenNetwork, NetworkStats};
use tokennet_core::ranking::{rbo, top_k};
use tokennet_core::structure::{compute_diameters, diameter_distribution, scc_decomposition};
use tokennet_core::synthetic::synthetic_dataset;
use tokennet_core::temporal::{
    default_token_set, ego_activity, group_scores_series, monthly_average, novelty_ratios, snapshot_series,
    Resolution, DEFAULT_TOP_TOKENS,
};

use crate::config::{usage, RunConfig};

/// PageRank or CheiRank stopped at `max_iter`; exits with status 3.
#[derive(Debug)]
pub struct Unconverged(pub String);

impl fmt::Display for Unconverged {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} did not converge (outputs written; pass --allow-unconverged to accept)", self.0)
    }
}

impl std::error::Error for Unconverged {}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, clap::ValueEnum)]
pub enum Analysis {
    Centrality,
    Pctb,
    Backbone,
    Scc,
    Communities,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum GraphFormat {
    Gexf,
    Dot,
}

struct Output {
    dir: PathBuf,
}

impl Output {
    fn create(cfg: &RunConfig) -> Result<Self> {
        fs::create_dir_all(&cfg.out_dir).with_context(|| format!("creating {}", cfg.out_dir.display()))?;
        let out = Output {
            dir: cfg.out_dir.clone(),
        };
        out.write("config.toml", |w| Ok(w.write_all(cfg.to_toml()?.as_bytes())?))?;
        Ok(out)
    }

    fn write(&self, name: &str, body: impl FnOnce(&mut BufWriter<File>) -> Result<()>) -> Result<()> {
        let path = self.dir.join(name);
        let file = File::create(&path).with_context(|| format!("creating {}", path.display()))?;
        let mut w = BufWriter::new(file);
        body(&mut w).with_context(|| format!("writing {}", path.display()))?;
        w.flush().with_context(|| format!("writing {}", path.display()))?;
        log::info!("wrote {}", path.display());
        Ok(())
    }

    fn json<T: Serialize>(&self, name: &str, value: &T) -> Result<()> {
        self.write(name, |w| {
            serde_json::to_writer_pretty(&mut *w, value)?;
            w.write_all(b"\n")?;
            Ok(())
        })
    }
}

fn required<'a>(slot: &'a Option<PathBuf>, key: &str) -> Result<&'a Path> {
    slot.as_deref()
        .ok_or_else(|| usage(format!("no `{key}` path given (set it in the config or pass --{})", key.replace('_', "-"))))
}

fn open(path: &Path, what: &str) -> Result<File> {
    File::open(path).with_context(|| format!("cannot open {what} file {}", path.display()))
}

/// Parsed and filtered inputs.
pub struct Inputs {
    pub records: Vec<TransferRecord>,
    pub read: usize,
    pub entities: EntityMap,
}

pub fn load(cfg: &RunConfig) -> Result<Inputs> {
    let transfers = required(&cfg.transfers, "transfers")?;
    let labels = required(&cfg.labels, "labels")?;
    let ego_tags = required(&cfg.ego_tags, "ego_tags")?;

    let records = parse_transfers(open(transfers, "transfers")?, InputFormat::from_path(transfers))
        .with_context(|| format!("parsing {}", transfers.display()))?;
    let labels = parse_labels(open(labels, "labels")?).with_context(|| format!("parsing {}", labels.display()))?;
    let ego: BTreeSet<String> = parse_line_list(open(ego_tags, "ego tags")?)
        .with_context(|| format!("parsing {}", ego_tags.display()))?
        .into_iter()
        .collect();
    let allow = match &cfg.allowlist {
        Some(p) => Some(parse_allowlist(open(p, "allowlist")?).with_context(|| format!("parsing {}", p.display()))?),
        None => None,
    };

    let bound = |raw: &Option<String>, key: &str| -> Result<Option<_>> {
        raw.as_deref()
            .map(|s| parse_timestamp(s).ok_or_else(|| usage(format!("{key} = `{s}` is not a timestamp"))))
            .transpose()
    };
    let window = match (bound(&cfg.start, "start")?, bound(&cfg.end, "end")?) {
        (None, None) => None,
        (start, end) => Some((
            start.unwrap_or(chrono::DateTime::<chrono::Utc>::MIN_UTC),
            end.unwrap_or(chrono::DateTime::<chrono::Utc>::MAX_UTC),
        )),
    };
    let read = records.len();
    let records = filter_transfers(&records, allow.as_ref(), window)?;
    let grouping = if cfg.group_entities { Grouping::Entity } else { Grouping::Address };
    let entities = build_entity_map(&labels, &ego, grouping);
    log::info!("{} of {read} transfers after filtering, {} labelled entities", records.len(), entities.len());
    Ok(Inputs {
        records,
        read,
        entities,
    })
}

#[derive(Serialize)]
struct BuildReport {
    #[serde(flatten)]
    stats: NetworkStats,
    transfers_read: usize,
    transfers_after_filter: usize,
    #[serde(flatten)]
    summary: BuildSummary,
}

pub fn build(cfg: &RunConfig) -> Result<()> {
    let inputs = load(cfg)?;
    let (net, summary) = build_mtn_with_summary(&inputs.records, &inputs.entities);
    let out = Output::create(cfg)?;
    out.write("nodes.csv", |w| Ok(export::write_nodes_csv(w, &net)?))?;
    out.write("edges.csv", |w| Ok(export::write_edges_csv(w, &net)?))?;
    out.json(
        "stats.json",
        &BuildReport {
            stats: net.stats(),
            transfers_read: inputs.read,
            transfers_after_filter: inputs.records.len(),
            summary,
        },
    )
}

fn network(cfg: &RunConfig) -> Result<(Inputs, MultiTokenNetwork)> {
    let inputs = load(cfg)?;
    let net = build_mtn_with_summary(&inputs.records, &inputs.entities).0;
    Ok((inputs, net))
}

/// Entity mask for the configured group, or the ego flags when none is set.
fn group_mask(cfg: &RunConfig, inputs: &Inputs, net: &MultiTokenNetwork) -> Result<Vec<bool>> {
    match &cfg.group {
        Some(query) => Ok(resolve_group(query, inputs)?.mask(net)),
        None => Ok(net.entity_mask(|e| e.is_ego)),
    }
}

fn resolve_group(query: &str, inputs: &Inputs) -> Result<EntityGroup> {
    Ok(EntityGroup::resolve(
        query,
        inputs.entities.entities().iter().map(|e| e.name.as_str()),
    )?)
}

#[derive(Serialize)]
struct Convergence {
    iterations: usize,
    residual: f64,
    converged: bool,
}

impl From<&ScoreVector> for Convergence {
    fn from(s: &ScoreVector) -> Self {
        Convergence {
            iterations: s.iterations,
            residual: s.residual,
            converged: s.converged,
        }
    }
}

#[derive(Serialize)]
struct RankingSummary {
    persistence: f64,
    depth: usize,
    user_pagerank_vs_cheirank: Option<f64>,
    token_pagerank_vs_cheirank: Option<f64>,
}

fn ranked_names(names: &[String], scores: &[f64], k: usize) -> Vec<(String, f64)> {
    top_k(scores, k).into_iter().map(|(i, s)| (names[i].clone(), s)).collect()
}

fn list_rbo(a: &[(String, f64)], b: &[(String, f64)], p: f64) -> Result<Option<f64>> {
    if a.is_empty() && b.is_empty() {
        return Ok(None);
    }
    let a: Vec<&str> = a.iter().map(|x| x.0.as_str()).collect();
    let b: Vec<&str> = b.iter().map(|x| x.0.as_str()).collect();
    Ok(Some(rbo(&a, &b, p)?))
}

fn write_top_tables(out: &Output, net: &MultiTokenNetwork, report: &CentralityReport, cfg: &RunConfig) -> Result<()> {
    let users: Vec<String> = net.entities().iter().map(|e| e.name.clone()).collect();
    let k = cfg.top_k;
    let upr = ranked_names(&users, &report.user_pagerank, k);
    let ucr = ranked_names(&users, &report.user_cheirank, k);
    let tpr = ranked_names(net.tokens(), &report.token_pagerank, k);
    let tcr = ranked_names(net.tokens(), &report.token_cheirank, k);
    out.write("top_k.csv", |w| {
        let mut csv = csv::Writer::from_writer(w);
        csv.write_record([
            "rank",
            "user_by_pagerank",
            "user_pagerank",
            "user_by_cheirank",
            "user_cheirank",
            "token_by_pagerank",
            "token_pagerank",
            "token_by_cheirank",
            "token_cheirank",
        ])?;
        let cell = |list: &[(String, f64)], i: usize| match list.get(i) {
            Some((name, score)) => [name.clone(), score.to_string()],
            None => [String::new(), String::new()],
        };
        for i in 0..k.min(users.len().max(net.tokens().len())) {
            let mut row = vec![(i + 1).to_string()];
            for list in [&upr, &ucr, &tpr, &tcr] {
                row.extend(cell(list, i));
            }
            csv.write_record(&row)?;
        }
        csv.flush()?;
        Ok(())
    })?;
    out.json(
        "rbo.json",
        &RankingSummary {
            persistence: cfg.rbo_persistence,
            depth: k,
            user_pagerank_vs_cheirank: list_rbo(&upr, &ucr, cfg.rbo_persistence)?,
            token_pagerank_vs_cheirank: list_rbo(&tpr, &tcr, cfg.rbo_persistence)?,
        },
    )
}

fn write_pctb(out: &Output, net: &MultiTokenNetwork, report: &CentralityReport) -> Result<()> {
    out.write("pctb.csv", |w| {
        let mut csv = csv::Writer::from_writer(w);
        csv.write_record(["level", "key", "pctb"])?;
        let fmt = |b: Option<f64>| b.map(|v| v.to_string()).unwrap_or_default();
        for (i, b) in report.node_balance.iter().enumerate() {
            csv.write_record(["node".to_string(), export::node_key(net, i), fmt(*b)])?;
        }
        for (e, b) in net.entities().iter().zip(&report.user_balance) {
            csv.write_record(["user".to_string(), e.name.clone(), fmt(*b)])?;
        }
        for (t, b) in net.tokens().iter().zip(&report.token_balance) {
            csv.write_record(["token".to_string(), t.clone(), fmt(*b)])?;
        }
        csv.flush()?;
        Ok(())
    })
}

#[derive(Serialize)]
struct DegreeCcdf {
    in_degree: Vec<(usize, f64)>,
    out_degree: Vec<(usize, f64)>,
}

pub fn analyze(cfg: &RunConfig, which: &[Analysis], allow_unconverged: bool) -> Result<()> {
    let which: BTreeSet<Analysis> = if which.is_empty() {
        [
            Analysis::Centrality,
            Analysis::Pctb,
            Analysis::Backbone,
            Analysis::Scc,
            Analysis::Communities,
        ]
        .into()
    } else {
        which.iter().copied().collect()
    };
    let (inputs, net) = network(cfg)?;
    let out = Output::create(cfg)?;
    let mut unconverged = None;

    if which.contains(&Analysis::Centrality) || which.contains(&Analysis::Pctb) {
        if net.is_empty() {
            log::warn!("network is empty; skipping centrality");
        } else {
            let report = CentralityReport::compute(&net, &cfg.pagerank())?;
            if which.contains(&Analysis::Centrality) {
                for (name, level) in [
                    ("centrality_nodes.csv", Granularity::Node),
                    ("centrality_users.csv", Granularity::User),
                    ("centrality_tokens.csv", Granularity::Token),
                ] {
                    out.write(name, |w| Ok(export::write_scores_csv(w, &net, &report, level)?))?;
                }
                write_top_tables(&out, &net, &report, cfg)?;
            }
            if which.contains(&Analysis::Pctb) {
                write_pctb(&out, &net, &report)?;
            }
            let convergence: BTreeMap<&str, Convergence> = [
                ("pagerank", (&report.pagerank).into()),
                ("cheirank", (&report.cheirank).into()),
            ]
            .into();
            out.json("convergence.json", &convergence)?;
            if !report.converged() {
                unconverged = Some("PageRank/CheiRank");
            }
        }
    }

    if which.contains(&Analysis::Backbone) {
        let backbone = extract_backbone(&net, cfg.alpha)?;
        out.write("backbone_nodes.csv", |w| Ok(export::write_nodes_csv(w, &backbone.network)?))?;
        out.write("backbone_edges.csv", |w| Ok(export::write_backbone_edges_csv(w, &backbone)?))?;
        out.json("backbone_stats.json", &backbone_stats(&net, &backbone))?;
    }

    if which.contains(&Analysis::Scc) {
        let mask = group_mask(cfg, &inputs, &net)?;
        let mut summary = scc_decomposition(&net);
        compute_diameters(&net, &mut summary);
        out.write("scc.csv", |w| Ok(export::write_scc_csv(w, &net, &summary, &mask)?))?;
        out.json("scc_diameters.json", &diameter_distribution(&net, &summary, &mask))?;
        if !net.is_empty() {
            out.json(
                "degree_ccdf.json",
                &DegreeCcdf {
                    in_degree: net.degree_ccdf(Direction::In)?,
                    out_degree: net.degree_ccdf(Direction::Out)?,
                },
            )?;
        }
    }

    if which.contains(&Analysis::Communities) {
        let graph = project_undirected(&net);
        if graph.total_weight() > 0.0 {
            let partition = louvain(&graph, cfg.louvain_resolution, cfg.seed)?;
            out.write("communities.csv", |w| Ok(export::write_partition_csv(w, &net, &partition)?))?;
            out.json("communities.json", &CommunitySummary::new(&partition))?;
        } else {
            log::warn!("network has no edges; skipping communities");
        }
    }

    match unconverged {
        Some(what) if !allow_unconverged => Err(Unconverged(what.to_string()).into()),
        _ => Ok(()),
    }
}

#[derive(Serialize)]
struct CommunitySummary {
    communities: usize,
    modularity: f64,
    resolution: f64,
    seed: u64,
    sizes: Vec<usize>,
}

impl CommunitySummary {
    fn new(p: &tokennet_core::community::Partition) -> Self {
        CommunitySummary {
            communities: p.communities,
            modularity: p.modularity,
            resolution: p.resolution,
            seed: p.seed,
            sizes: p.sizes(),
        }
    }
}

#[derive(Serialize)]
struct TemporalSummary {
    group: String,
    members: Vec<String>,
    resolution: Resolution,
    windows: usize,
    tokens: BTreeSet<String>,
    converged: bool,
}

pub fn temporal(cfg: &RunConfig, allow_unconverged: bool) -> Result<()> {
    let query = cfg
        .group
        .as_deref()
        .ok_or_else(|| usage("temporal analysis needs a group (set `group` or pass --group)"))?;
    let inputs = load(cfg)?;
    let group = resolve_group(query, &inputs)?;
    let params = cfg.pagerank();
    let series = snapshot_series(&inputs.records, cfg.resolution, &inputs.entities);
    let tokens: BTreeSet<String> = if cfg.tokens.is_empty() {
        default_token_set(&series.aggregate, &group, &params, DEFAULT_TOP_TOKENS)?
    } else {
        cfg.tokens.iter().map(|t| t.trim().to_lowercase()).collect()
    };

    let novelty = novelty_ratios(&series);
    let activity = ego_activity(&series, &group);
    let scores = group_scores_series(&series, &group, &params)?;
    let mut rows = Vec::new();
    let mut converged = true;
    for (i, snap) in series.snapshots.iter().enumerate() {
        let mut push = |metric: &str, key: &str, value: f64| {
            rows.push(SeriesRow {
                start: snap.start,
                end: snap.end,
                metric: metric.to_string(),
                key: key.to_string(),
                value,
            })
        };
        let stats = snap.network.stats();
        push("nodes", "", stats.nodes as f64);
        push("users", "", stats.users as f64);
        push("tokens", "", stats.tokens as f64);
        push("links", "", stats.links as f64);
        push("transfers", "", snap.transfers as f64);
        push("new_entity_fraction", "", novelty[i].new_entity_fraction);
        push("new_token_fraction", "", novelty[i].new_token_fraction);
        push("ego_in_edges", &group.label, activity[i].in_edges as f64);
        push("ego_out_edges", &group.label, activity[i].out_edges as f64);
        push("ego_transactions", &group.label, activity[i].transactions as f64);
        if let Some(s) = &scores[i] {
            converged &= s.converged;
            push("group_pagerank", &group.label, s.pagerank);
            push("group_cheirank", &group.label, s.cheirank);
            push("group_pctb", &group.label, s.balance);
            for (token, b) in s.token_balance.iter().filter(|(t, _)| tokens.contains(*t)) {
                push("token_pctb", token, *b);
            }
        }
    }

    let out = Output::create(cfg)?;
    out.write("timeseries.csv", |w| Ok(export::write_timeseries_csv(w, &rows)?))?;
    if cfg.resolution == Resolution::Day {
        out.write("monthly.csv", |w| Ok(export::write_timeseries_csv(w, &monthly_rows(&rows))?))?;
    }
    out.json(
        "temporal.json",
        &TemporalSummary {
            group: group.label.clone(),
            members: group.names().iter().cloned().collect(),
            resolution: cfg.resolution,
            windows: series.len(),
            tokens,
            converged,
        },
    )?;
    if !converged && !allow_unconverged {
        return Err(Unconverged("group centrality in at least one window".into()).into());
    }
    Ok(())
}

/// Average every daily `(metric, key)` series per calendar month.
fn monthly_rows(daily: &[SeriesRow]) -> Vec<SeriesRow> {
    let mut grouped: BTreeMap<(&str, &str), Vec<(chrono::DateTime<chrono::Utc>, f64)>> = BTreeMap::new();
    for r in daily {
        grouped.entry((&r.metric, &r.key)).or_default().push((r.start, r.value));
    }
    let mut rows: Vec<SeriesRow> = grouped
        .into_iter()
        .flat_map(|((metric, key), series)| {
            monthly_average(&series).into_iter().map(move |(start, value)| SeriesRow {
                start,
                end: Resolution::Month.window_of(start).1,
                metric: metric.to_string(),
                key: key.to_string(),
                value,
            })
        })
        .collect();
    rows.sort_by(|a, b| (a.start, &a.metric, &a.key).cmp(&(b.start, &b.metric, &b.key)));
    rows
}

pub fn export_graph(cfg: &RunConfig, format: GraphFormat, backbone: bool) -> Result<()> {
    let (_, net) = network(cfg)?;
    let pagerank = if net.is_empty() {
        Vec::new()
    } else {
        tokennet_core::centrality::pagerank(&net, &cfg.pagerank())?.values
    };
    let graph = project_undirected(&net);
    let community = if graph.total_weight() > 0.0 {
        louvain(&graph, cfg.louvain_resolution, cfg.seed)?.membership
    } else {
        (0..net.node_count()).collect()
    };

    let (target, kept_by) = if backbone {
        let result = extract_backbone(&net, cfg.alpha)?;
        let kept = result.retained.iter().map(|r| r.kept_by).collect();
        (result.network, Some(kept))
    } else {
        (net.clone(), None)
    };
    let original: Vec<usize> = (0..target.node_count())
        .map(|i| {
            net.find_node(target.entity_name(i), target.token_name(i))
                .expect("backbone nodes come from the full network")
        })
        .collect();
    let attrs = GraphAttributes {
        community: Some(original.iter().map(|&i| community[i]).collect()),
        pagerank: Some(original.iter().map(|&i| pagerank[i]).collect()),
        kept_by,
    };

    let out = Output::create(cfg)?;
    let stem = if backbone { "backbone" } else { "network" };
    match format {
        GraphFormat::Gexf => out.write(&format!("{stem}.gexf"), |w| Ok(export::write_gexf(w, &target, &attrs)?)),
        GraphFormat::Dot => out.write(&format!("{stem}.dot"), |w| Ok(export::write_dot(w, &target, &attrs)?)),
    }
}

/// Write a synthetic dataset plus a config that points at it.
pub fn synth(dir: &Path, transfers: usize, seed: u64) -> Result<()> {
    let data = synthetic_dataset(seed, transfers);
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let out = Output { dir: dir.to_path_buf() };
    out.write("transfers.csv", |w| Ok(ingest::write_transfers(w, &data.transfers, InputFormat::Csv)?))?;
    out.write("labels.csv", |w| Ok(ingest::write_labels(w, &data.labels)?))?;
    out.write("ego_tags.txt", |w| Ok(writeln!(w, "{}", data.ego_tags.join("\n"))?))?;
    out.write("allowlist.txt", |w| Ok(writeln!(w, "{}", data.allowlist.join("\n"))?))?;
    let cfg = RunConfig {
        transfers: Some("transfers.csv".into()),
        labels: Some("labels.csv".into()),
        ego_tags: Some("ego_tags.txt".into()),
        allowlist: Some("allowlist.txt".into()),
        group: Some(data.ego_tags[0].clone()),
        // A thousand transfers leave too little weight for the default level.
        alpha: 0.1,
        ..Default::default()
    };
    out.write("config.toml", |w| Ok(w.write_all(cfg.to_toml()?.as_bytes())?))
}
