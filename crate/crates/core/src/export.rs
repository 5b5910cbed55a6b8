//! File formats: network dumps, analysis reports and graph exports.
//!
//! Floats are written with Rust's shortest round-trip formatting so that
//! identical inputs produce byte-identical files.

use std::collections::HashMap;
use std::io::{Read, Write};

use chrono::{DateTime, Utc};

use crate::backbone::{BackboneResult, KeptBy};
use crate::centrality::CentralityReport;
use crate::community::Partition;
use crate::error::{Error, Result};
use crate::ingest::format_timestamp;
use crate::network::{MultiTokenNetwork, NetworkBuilder};
use crate::structure::SccSummary;

pub const NODE_HEADER: [&str; 3] = ["entity", "token", "is_ego"];
pub const EDGE_HEADER: [&str; 4] = ["src_entity", "dst_entity", "token", "weight"];

/// Key used for `(entity, token)` nodes in report files.
pub fn node_key(net: &MultiTokenNetwork, node: usize) -> String {
    format!("{}|{}", net.entity_name(node), net.token_name(node))
}

fn opt(value: Option<f64>) -> String {
    value.map(|v| v.to_string()).unwrap_or_default()
}

pub fn write_nodes_csv<W: Write>(sink: W, net: &MultiTokenNetwork) -> Result<()> {
    let mut w = csv::Writer::from_writer(sink);
    w.write_record(NODE_HEADER)?;
    for i in 0..net.node_count() {
        w.write_record([net.entity_name(i), net.token_name(i), if net.is_ego(i) { "true" } else { "false" }])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_edges_csv<W: Write>(sink: W, net: &MultiTokenNetwork) -> Result<()> {
    let mut w = csv::Writer::from_writer(sink);
    w.write_record(EDGE_HEADER)?;
    for e in net.edges() {
        w.write_record([
            net.entity_name(e.source),
            net.entity_name(e.target),
            net.token_name(e.source),
            &e.weight.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Backbone edge list: the network dump columns plus `kept_by`, `s_out`, `s_in`.
pub fn write_backbone_edges_csv<W: Write>(sink: W, backbone: &BackboneResult) -> Result<()> {
    let net = &backbone.network;
    let mut w = csv::Writer::from_writer(sink);
    w.write_record(EDGE_HEADER.iter().chain(&["kept_by", "s_out", "s_in"]))?;
    for (e, r) in net.edges().iter().zip(&backbone.retained) {
        w.write_record([
            net.entity_name(e.source),
            net.entity_name(e.target),
            net.token_name(e.source),
            &e.weight.to_string(),
            r.kept_by.as_str(),
            &r.s_out.to_string(),
            &r.s_in.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

fn parse_bool(raw: &str) -> Option<bool> {
    match raw.trim().to_ascii_lowercase().as_str() {
        "true" | "1" => Some(true),
        "false" | "0" => Some(false),
        _ => None,
    }
}

/// Rebuild a network from its node and edge dumps. Extra edge columns are ignored.
pub fn read_network_dump<N: Read, E: Read>(nodes: N, edges: E) -> Result<MultiTokenNetwork> {
    let mut builder = NetworkBuilder::new();
    let mut index: HashMap<(String, String), usize> = HashMap::new();
    let mut reader = csv::Reader::from_reader(nodes);
    for row in reader.records() {
        let row = row?;
        let line = row.position().map_or(0, |p| p.line());
        let (Some(entity), Some(token), Some(ego)) = (row.get(0), row.get(1), row.get(2)) else {
            return Err(Error::Dump(format!("node line {line}: expected 3 columns")));
        };
        let is_ego = parse_bool(ego).ok_or_else(|| Error::Dump(format!("node line {line}: bad is_ego `{ego}`")))?;
        let id = builder.node(entity, is_ego, token);
        index.insert((entity.to_string(), token.to_string()), id);
    }
    let mut reader = csv::Reader::from_reader(edges);
    for row in reader.records() {
        let row = row?;
        let line = row.position().map_or(0, |p| p.line());
        let (Some(src), Some(dst), Some(token), Some(weight)) = (row.get(0), row.get(1), row.get(2), row.get(3)) else {
            return Err(Error::Dump(format!("edge line {line}: expected at least 4 columns")));
        };
        let lookup = |entity: &str| {
            index
                .get(&(entity.to_string(), token.to_string()))
                .copied()
                .ok_or_else(|| Error::Dump(format!("edge line {line}: unknown node {entity}|{token}")))
        };
        let (s, t) = (lookup(src)?, lookup(dst)?);
        let weight: u64 = weight
            .trim()
            .parse()
            .map_err(|_| Error::Dump(format!("edge line {line}: bad weight `{weight}`")))?;
        builder.add_edge(s, t, weight);
    }
    let net = builder.build();
    net.check_invariants().map_err(Error::Dump)?;
    Ok(net)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Granularity {
    Node,
    User,
    Token,
}

/// Score report with header `key,pagerank,cheirank,pctb`.
pub fn write_scores_csv<W: Write>(
    sink: W,
    net: &MultiTokenNetwork,
    report: &CentralityReport,
    granularity: Granularity,
) -> Result<()> {
    let mut w = csv::Writer::from_writer(sink);
    w.write_record(["key", "pagerank", "cheirank", "pctb"])?;
    let rows: Vec<(String, f64, f64, Option<f64>)> = match granularity {
        Granularity::Node => (0..net.node_count())
            .map(|i| {
                (
                    node_key(net, i),
                    report.pagerank.values[i],
                    report.cheirank.values[i],
                    report.node_balance[i],
                )
            })
            .collect(),
        Granularity::User => net
            .entities()
            .iter()
            .enumerate()
            .map(|(u, e)| (e.name.clone(), report.user_pagerank[u], report.user_cheirank[u], report.user_balance[u]))
            .collect(),
        Granularity::Token => net
            .tokens()
            .iter()
            .enumerate()
            .map(|(t, name)| {
                (
                    name.clone(),
                    report.token_pagerank[t],
                    report.token_cheirank[t],
                    report.token_balance[t],
                )
            })
            .collect(),
    };
    for (key, pr, cr, b) in rows {
        w.write_record([key, pr.to_string(), cr.to_string(), opt(b)])?;
    }
    w.flush()?;
    Ok(())
}

/// SCC report with header `component_id,size,users,token,diameter,has_ego_group`.
/// Singletons report diameter 0. `group` is an entity-indexed mask.
pub fn write_scc_csv<W: Write>(sink: W, net: &MultiTokenNetwork, summary: &SccSummary, group: &[bool]) -> Result<()> {
    let mut w = csv::Writer::from_writer(sink);
    w.write_record(["component_id", "size", "users", "token", "diameter", "has_ego_group"])?;
    for (id, c) in summary.components.iter().enumerate() {
        let has_group = c.nodes.iter().any(|&v| group[net.node(v).entity]);
        w.write_record([
            id.to_string(),
            c.size().to_string(),
            c.users.to_string(),
            net.tokens()[c.token].clone(),
            c.diameter.unwrap_or(0).to_string(),
            has_group.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Partition report with header `entity,token,community`.
pub fn write_partition_csv<W: Write>(sink: W, net: &MultiTokenNetwork, partition: &Partition) -> Result<()> {
    let mut w = csv::Writer::from_writer(sink);
    w.write_record(["entity", "token", "community"])?;
    for (i, c) in partition.membership.iter().enumerate() {
        w.write_record([net.entity_name(i), net.token_name(i), &c.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

/// One row of the long-format time series.
#[derive(Debug, Clone, PartialEq)]
pub struct SeriesRow {
    pub start: DateTime<Utc>,
    pub end: DateTime<Utc>,
    pub metric: String,
    pub key: String,
    pub value: f64,
}

/// Time series with header `window_start,window_end,metric,key,value`.
pub fn write_timeseries_csv<W: Write>(sink: W, rows: &[SeriesRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(sink);
    w.write_record(["window_start", "window_end", "metric", "key", "value"])?;
    for r in rows {
        w.write_record([
            format_timestamp(&r.start),
            format_timestamp(&r.end),
            r.metric.clone(),
            r.key.clone(),
            r.value.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Per-node and per-edge attributes for graph exports, indexed like the
/// exported network.
#[derive(Debug, Clone, Default)]
pub struct GraphAttributes {
    pub community: Option<Vec<usize>>,
    pub pagerank: Option<Vec<f64>>,
    pub kept_by: Option<Vec<KeptBy>>,
}

fn xml_escape(raw: &str) -> String {
    let mut out = String::with_capacity(raw.len());
    for ch in raw.chars() {
        match ch {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            c => out.push(c),
        }
    }
    out
}

/// GEXF 1.3 document of a directed network with node attributes
/// `entity, token, is_ego, community, pagerank` and edge weights.
pub fn write_gexf<W: Write>(mut sink: W, net: &MultiTokenNetwork, attrs: &GraphAttributes) -> Result<()> {
    writeln!(sink, r#"<?xml version="1.0" encoding="UTF-8"?>"#)?;
    writeln!(sink, r#"<gexf xmlns="http://gexf.net/1.3" version="1.3">"#)?;
    writeln!(sink, r#"  <meta><creator>tokennet</creator></meta>"#)?;
    writeln!(sink, r#"  <graph defaultedgetype="directed" mode="static">"#)?;
    writeln!(sink, r#"    <attributes class="node" mode="static">"#)?;
    for (id, title, ty) in [
        (0, "entity", "string"),
        (1, "token", "string"),
        (2, "is_ego", "boolean"),
        (3, "community", "integer"),
        (4, "pagerank", "double"),
    ] {
        writeln!(sink, r#"      <attribute id="{id}" title="{title}" type="{ty}"/>"#)?;
    }
    writeln!(sink, r#"    </attributes>"#)?;
    if attrs.kept_by.is_some() {
        writeln!(sink, r#"    <attributes class="edge" mode="static">"#)?;
        writeln!(sink, r#"      <attribute id="0" title="kept_by" type="string"/>"#)?;
        writeln!(sink, r#"    </attributes>"#)?;
    }
    writeln!(sink, r#"    <nodes>"#)?;
    for i in 0..net.node_count() {
        writeln!(sink, r#"      <node id="n{i}" label="{}">"#, xml_escape(&node_key(net, i)))?;
        writeln!(sink, r#"        <attvalues>"#)?;
        writeln!(sink, r#"          <attvalue for="0" value="{}"/>"#, xml_escape(net.entity_name(i)))?;
        writeln!(sink, r#"          <attvalue for="1" value="{}"/>"#, xml_escape(net.token_name(i)))?;
        writeln!(sink, r#"          <attvalue for="2" value="{}"/>"#, net.is_ego(i))?;
        if let Some(c) = &attrs.community {
            writeln!(sink, r#"          <attvalue for="3" value="{}"/>"#, c[i])?;
        }
        if let Some(p) = &attrs.pagerank {
            writeln!(sink, r#"          <attvalue for="4" value="{}"/>"#, p[i])?;
        }
        writeln!(sink, r#"        </attvalues>"#)?;
        writeln!(sink, r#"      </node>"#)?;
    }
    writeln!(sink, r#"    </nodes>"#)?;
    writeln!(sink, r#"    <edges>"#)?;
    for (j, e) in net.edges().iter().enumerate() {
        match &attrs.kept_by {
            Some(kept) => {
                writeln!(
                    sink,
                    r#"      <edge id="e{j}" source="n{}" target="n{}" weight="{}">"#,
                    e.source, e.target, e.weight
                )?;
                writeln!(
                    sink,
                    r#"        <attvalues><attvalue for="0" value="{}"/></attvalues>"#,
                    kept[j].as_str()
                )?;
                writeln!(sink, r#"      </edge>"#)?;
            }
            None => writeln!(
                sink,
                r#"      <edge id="e{j}" source="n{}" target="n{}" weight="{}"/>"#,
                e.source, e.target, e.weight
            )?,
        }
    }
    writeln!(sink, r#"    </edges>"#)?;
    writeln!(sink, r#"  </graph>"#)?;
    writeln!(sink, r#"</gexf>"#)?;
    sink.flush()?;
    Ok(())
}

fn dot_escape(raw: &str) -> String {
    raw.replace('\\', "\\\\").replace('"', "\\\"").replace('\n', "\\n")
}

/// Graphviz DOT digraph carrying the same attributes as the GEXF export.
pub fn write_dot<W: Write>(mut sink: W, net: &MultiTokenNetwork, attrs: &GraphAttributes) -> Result<()> {
    writeln!(sink, "digraph mtn {{")?;
    for i in 0..net.node_count() {
        write!(
            sink,
            "  n{i} [label=\"{}\", entity=\"{}\", token=\"{}\", is_ego={}",
            dot_escape(&node_key(net, i)),
            dot_escape(net.entity_name(i)),
            dot_escape(net.token_name(i)),
            net.is_ego(i)
        )?;
        if let Some(c) = &attrs.community {
            write!(sink, ", community={}", c[i])?;
        }
        if let Some(p) = &attrs.pagerank {
            write!(sink, ", pagerank=\"{}\"", p[i])?;
        }
        writeln!(sink, "];")?;
    }
    for (j, e) in net.edges().iter().enumerate() {
        write!(sink, "  n{} -> n{} [weight={}", e.source, e.target, e.weight)?;
        if let Some(kept) = &attrs.kept_by {
            write!(sink, ", kept_by=\"{}\"", kept[j].as_str())?;
        }
        writeln!(sink, "];")?;
    }
    writeln!(sink, "}}")?;
    sink.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> MultiTokenNetwork {
        let mut b = NetworkBuilder::new();
        let a = b.node("Alameda \"R\" & co", true, "usdc");
        let x = b.node("0xabc", false, "usdc");
        let y = b.node("Binance, 14", false, "usdc");
        b.add_edge(a, x, 4);
        b.add_edge(y, a, 2);
        b.build()
    }

    #[test]
    fn dump_round_trip() {
        let net = sample();
        let mut nodes = Vec::new();
        let mut edges = Vec::new();
        write_nodes_csv(&mut nodes, &net).unwrap();
        write_edges_csv(&mut edges, &net).unwrap();
        let back = read_network_dump(nodes.as_slice(), edges.as_slice()).unwrap();
        assert_eq!(back, net);
    }

    #[test]
    fn dump_rejects_unknown_nodes_and_violations() {
        let nodes = "entity,token,is_ego\na,t,true\nb,t,false\n";
        let edges = "src_entity,dst_entity,token,weight\na,c,t,1\n";
        assert!(matches!(read_network_dump(nodes.as_bytes(), edges.as_bytes()), Err(Error::Dump(_))));
        let nodes = "entity,token,is_ego\na,t,false\nb,t,false\n";
        let edges = "src_entity,dst_entity,token,weight\na,b,t,1\n";
        assert!(matches!(read_network_dump(nodes.as_bytes(), edges.as_bytes()), Err(Error::Dump(_))));
    }

    #[test]
    fn empty_graph_documents() {
        let net = MultiTokenNetwork::empty();
        let mut gexf = Vec::new();
        write_gexf(&mut gexf, &net, &GraphAttributes::default()).unwrap();
        let text = String::from_utf8(gexf).unwrap();
        assert!(text.contains("<nodes>") && text.contains("</gexf>"));
        let mut dot = Vec::new();
        write_dot(&mut dot, &net, &GraphAttributes::default()).unwrap();
        assert_eq!(String::from_utf8(dot).unwrap(), "digraph mtn {\n}\n");
    }

    #[test]
    fn escaping() {
        let net = sample();
        let mut gexf = Vec::new();
        write_gexf(&mut gexf, &net, &GraphAttributes::default()).unwrap();
        let text = String::from_utf8(gexf).unwrap();
        assert!(text.contains("Alameda &quot;R&quot; &amp; co"));
        let mut dot = Vec::new();
        write_dot(&mut dot, &net, &GraphAttributes::default()).unwrap();
        assert!(String::from_utf8(dot).unwrap().contains(r#"entity="Alameda \"R\" & co""#));
    }
}
