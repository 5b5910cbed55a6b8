//! Transfer and label ingestion.
//!
//! Transfers arrive as CSV (header `block_number,timestamp,tx_hash,from,to,token,value`)
//! or JSONL with the same keys. Addresses, hashes and token identifiers are
//! lowercased and trimmed at parse time. Timestamps may be unix seconds or
//! ISO-8601; sub-second precision is dropped.

use std::collections::{BTreeSet, HashMap};
use std::io::{BufRead, BufReader, Read, Write};

use chrono::{DateTime, NaiveDate, NaiveDateTime, SecondsFormat, Utc};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};

pub const TRANSFER_COLUMNS: [&str; 7] = [
    "block_number",
    "timestamp",
    "tx_hash",
    "from",
    "to",
    "token",
    "value",
];

/// One token transfer.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TransferRecord {
    pub block_number: u64,
    pub timestamp: DateTime<Utc>,
    pub tx_hash: String,
    pub from: String,
    pub to: String,
    pub token: String,
    /// Decimal amount as written in the source. Never used as an edge weight.
    pub value: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InputFormat {
    Csv,
    Jsonl,
}

impl InputFormat {
    /// Guess the format from a file extension, defaulting to CSV.
    pub fn from_path(path: &std::path::Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("jsonl") || ext.eq_ignore_ascii_case("ndjson") => {
                InputFormat::Jsonl
            }
            _ => InputFormat::Csv,
        }
    }
}

/// Parse a unix-seconds or ISO-8601 timestamp. Naive date-times are taken as UTC.
pub fn parse_timestamp(raw: &str) -> Option<DateTime<Utc>> {
    let raw = raw.trim();
    if raw.is_empty() {
        return None;
    }
    let digits = raw.strip_prefix('-').unwrap_or(raw);
    if digits.bytes().all(|b| b.is_ascii_digit()) {
        return raw
            .parse::<i64>()
            .ok()
            .and_then(|secs| DateTime::from_timestamp(secs, 0));
    }
    let parsed = DateTime::parse_from_rfc3339(raw)
        .map(|dt| dt.with_timezone(&Utc))
        .ok()
        .or_else(|| {
            ["%Y-%m-%dT%H:%M:%S%.f", "%Y-%m-%d %H:%M:%S%.f"]
                .iter()
                .find_map(|fmt| NaiveDateTime::parse_from_str(raw, fmt).ok())
                .map(|naive| naive.and_utc())
        })
        .or_else(|| {
            NaiveDate::parse_from_str(raw, "%Y-%m-%d")
                .ok()
                .and_then(|d| d.and_hms_opt(0, 0, 0))
                .map(|naive| naive.and_utc())
        })?;
    DateTime::from_timestamp(parsed.timestamp(), 0)
}

pub fn format_timestamp(ts: &DateTime<Utc>) -> String {
    ts.to_rfc3339_opts(SecondsFormat::Secs, true)
}

fn parse_error(line: u64, field: &str, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        field: field.to_string(),
        message: message.into(),
    }
}

/// Field values for one row before validation, in `TRANSFER_COLUMNS` order.
fn record_from_fields(line: u64, fields: [&str; 7]) -> Result<TransferRecord> {
    let [block, ts, hash, from, to, token, value] = fields.map(str::trim);
    let block_number = block
        .parse::<u64>()
        .map_err(|_| parse_error(line, "block_number", format!("not a non-negative integer: `{block}`")))?;
    let timestamp = parse_timestamp(ts).ok_or_else(|| Error::Timestamp {
        line,
        value: ts.to_string(),
    })?;
    for (name, v) in [("from", from), ("to", to), ("token", token)] {
        if v.is_empty() {
            return Err(parse_error(line, name, "must not be empty"));
        }
    }
    Ok(TransferRecord {
        block_number,
        timestamp,
        tx_hash: hash.to_lowercase(),
        from: from.to_lowercase(),
        to: to.to_lowercase(),
        token: token.to_lowercase(),
        value: value.to_string(),
    })
}

/// Parse transfer records, returned in source order.
pub fn parse_transfers<R: Read>(source: R, format: InputFormat) -> Result<Vec<TransferRecord>> {
    match format {
        InputFormat::Csv => parse_transfers_csv(source),
        InputFormat::Jsonl => parse_transfers_jsonl(source),
    }
}

fn parse_transfers_csv<R: Read>(source: R) -> Result<Vec<TransferRecord>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(false)
        .from_reader(source);
    let headers = reader.headers()?.clone();
    if headers.iter().all(|h| h.trim().is_empty()) {
        return Ok(Vec::new());
    }
    let mut columns = [0usize; 7];
    for (slot, name) in columns.iter_mut().zip(TRANSFER_COLUMNS) {
        *slot = headers
            .iter()
            .position(|h| h.trim().eq_ignore_ascii_case(name))
            .ok_or_else(|| parse_error(1, name, "missing column in header"))?;
    }

    let mut records = Vec::new();
    let mut row = csv::StringRecord::new();
    loop {
        match reader.read_record(&mut row) {
            Ok(false) => break,
            Ok(true) => {}
            Err(err) => {
                let line = err.position().map(|p| p.line()).unwrap_or(0);
                return Err(parse_error(line, "row", err.to_string()));
            }
        }
        let line = row.position().map(|p| p.line()).unwrap_or(0);
        let fields = columns.map(|i| row.get(i).unwrap_or(""));
        records.push(record_from_fields(line, fields)?);
    }
    Ok(records)
}

fn json_field(line: u64, obj: &serde_json::Map<String, Value>, name: &str) -> Result<String> {
    match obj.get(name) {
        Some(Value::String(s)) => Ok(s.clone()),
        Some(Value::Number(n)) => Ok(n.to_string()),
        Some(Value::Null) | None => Err(parse_error(line, name, "missing key")),
        Some(other) => Err(parse_error(line, name, format!("unexpected JSON value {other}"))),
    }
}

fn parse_transfers_jsonl<R: Read>(source: R) -> Result<Vec<TransferRecord>> {
    let mut records = Vec::new();
    for (idx, line) in BufReader::new(source).lines().enumerate() {
        let line_no = idx as u64 + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let value: Value = serde_json::from_str(&line)
            .map_err(|e| parse_error(line_no, "row", e.to_string()))?;
        let Value::Object(obj) = value else {
            return Err(parse_error(line_no, "row", "expected a JSON object"));
        };
        let mut owned: Vec<String> = Vec::with_capacity(7);
        for name in TRANSFER_COLUMNS {
            owned.push(json_field(line_no, &obj, name)?);
        }
        let fields: [&str; 7] = std::array::from_fn(|i| owned[i].as_str());
        records.push(record_from_fields(line_no, fields)?);
    }
    Ok(records)
}

/// Serialize records in the same schema `parse_transfers` accepts.
pub fn write_transfers<W: Write>(sink: W, records: &[TransferRecord], format: InputFormat) -> Result<()> {
    match format {
        InputFormat::Csv => {
            let mut writer = csv::Writer::from_writer(sink);
            writer.write_record(TRANSFER_COLUMNS)?;
            for r in records {
                writer.write_record([
                    r.block_number.to_string().as_str(),
                    &format_timestamp(&r.timestamp),
                    &r.tx_hash,
                    &r.from,
                    &r.to,
                    &r.token,
                    &r.value,
                ])?;
            }
            writer.flush()?;
        }
        InputFormat::Jsonl => {
            let mut sink = sink;
            for r in records {
                let obj = serde_json::json!({
                    "block_number": r.block_number,
                    "timestamp": format_timestamp(&r.timestamp),
                    "tx_hash": r.tx_hash,
                    "from": r.from,
                    "to": r.to,
                    "token": r.token,
                    "value": r.value,
                });
                writeln!(sink, "{obj}")?;
            }
            sink.flush()?;
        }
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
pub enum AccountType {
    /// Externally owned account.
    Eoa,
    /// Contract account.
    Ca,
    #[default]
    Unknown,
}

impl AccountType {
    fn parse(raw: &str) -> Option<Self> {
        match raw.trim().to_ascii_lowercase().as_str() {
            "eoa" => Some(AccountType::Eoa),
            "ca" => Some(AccountType::Ca),
            "" | "unknown" => Some(AccountType::Unknown),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AddressLabel {
    pub address: String,
    pub name_tag: Option<String>,
    pub account_type: AccountType,
}

impl AddressLabel {
    pub fn new(address: &str, name_tag: Option<&str>) -> Self {
        AddressLabel {
            address: address.trim().to_lowercase(),
            name_tag: name_tag.map(str::trim).filter(|t| !t.is_empty()).map(String::from),
            account_type: AccountType::Unknown,
        }
    }
}

/// Parse a labels CSV with header `address,name_tag,account_type`.
pub fn parse_labels<R: Read>(source: R) -> Result<Vec<AddressLabel>> {
    let mut reader = csv::ReaderBuilder::new().flexible(true).from_reader(source);
    let headers = reader.headers()?.clone();
    if headers.iter().all(|h| h.trim().is_empty()) {
        return Ok(Vec::new());
    }
    let col = |name: &str| headers.iter().position(|h| h.trim().eq_ignore_ascii_case(name));
    let address_col = col("address").ok_or_else(|| parse_error(1, "address", "missing column in header"))?;
    let tag_col = col("name_tag");
    let type_col = col("account_type");

    let mut seen = HashMap::new();
    let mut labels = Vec::new();
    for row in reader.records() {
        let row = row?;
        let line = row.position().map(|p| p.line()).unwrap_or(0);
        let address = row.get(address_col).unwrap_or("").trim().to_lowercase();
        if address.is_empty() {
            return Err(parse_error(line, "address", "must not be empty"));
        }
        let raw_type = type_col.and_then(|c| row.get(c)).unwrap_or("");
        let account_type = AccountType::parse(raw_type)
            .ok_or_else(|| parse_error(line, "account_type", format!("expected EOA, CA or unknown, got `{raw_type}`")))?;
        if seen.insert(address.clone(), line).is_some() {
            return Err(Error::DuplicateLabel { line, address });
        }
        let name_tag = tag_col
            .and_then(|c| row.get(c))
            .map(str::trim)
            .filter(|t| !t.is_empty())
            .map(String::from);
        labels.push(AddressLabel {
            address,
            name_tag,
            account_type,
        });
    }
    Ok(labels)
}

pub fn write_labels<W: Write>(sink: W, labels: &[AddressLabel]) -> Result<()> {
    let mut w = csv::Writer::from_writer(sink);
    w.write_record(["address", "name_tag", "account_type"])?;
    for l in labels {
        let ty = match l.account_type {
            AccountType::Eoa => "EOA",
            AccountType::Ca => "CA",
            AccountType::Unknown => "unknown",
        };
        w.write_record([l.address.as_str(), l.name_tag.as_deref().unwrap_or(""), ty])?;
    }
    w.flush()?;
    Ok(())
}

/// One entry per non-blank line; lines starting with `#` are comments.
pub fn parse_line_list<R: Read>(source: R) -> Result<Vec<String>> {
    let mut out = Vec::new();
    for line in BufReader::new(source).lines() {
        let line = line?;
        let entry = line.trim();
        if entry.is_empty() || entry.starts_with('#') {
            continue;
        }
        out.push(entry.to_string());
    }
    Ok(out)
}

/// Token allowlist; entries are lowercased to match parsed records.
pub fn parse_allowlist<R: Read>(source: R) -> Result<BTreeSet<String>> {
    Ok(parse_line_list(source)?
        .into_iter()
        .map(|t| t.to_lowercase())
        .collect())
}

/// Keep records whose token is allowlisted and whose timestamp lies in `[start, end)`.
///
/// `allowlist = None` disables token filtering; `Some(empty)` rejects everything.
pub fn filter_transfers(
    records: &[TransferRecord],
    allowlist: Option<&BTreeSet<String>>,
    window: Option<(DateTime<Utc>, DateTime<Utc>)>,
) -> Result<Vec<TransferRecord>> {
    if let Some((start, end)) = window {
        if start >= end {
            return Err(Error::InvalidWindow {
                start: format_timestamp(&start),
                end: format_timestamp(&end),
            });
        }
    }
    Ok(records
        .iter()
        .filter(|r| allowlist.is_none_or(|a| a.contains(&r.token)))
        .filter(|r| window.is_none_or(|(start, end)| start <= r.timestamp && r.timestamp < end))
        .cloned()
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Grouping {
    /// Addresses sharing a name-tag prefix collapse into one entity.
    #[default]
    Entity,
    /// Every address is its own entity.
    Address,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct EntityInfo {
    pub name: String,
    pub is_ego: bool,
}

/// Address to entity assignment.
#[derive(Debug, Clone, Default)]
pub struct EntityMap {
    by_address: HashMap<String, usize>,
    by_name: HashMap<String, usize>,
    entities: Vec<EntityInfo>,
}

/// The part of a name tag before the first `:`, trimmed.
pub fn grouping_key(name_tag: &str) -> &str {
    match name_tag.split_once(':') {
        Some((prefix, _)) => prefix.trim(),
        None => name_tag.trim(),
    }
}

/// True if some ego tag is a prefix of `key`.
pub fn matches_ego_tag(key: &str, ego_tags: &BTreeSet<String>) -> bool {
    ego_tags.iter().any(|tag| key.starts_with(tag.as_str()))
}

/// Group labelled addresses into entities.
///
/// Untagged addresses become singleton entities named by their address.
/// An entity is an ego when one of `ego_tags` is a prefix of its grouping key.
pub fn build_entity_map(labels: &[AddressLabel], ego_tags: &BTreeSet<String>, grouping: Grouping) -> EntityMap {
    let mut map = EntityMap::default();
    for label in labels {
        let address = label.address.trim().to_lowercase();
        if map.by_address.contains_key(&address) {
            continue;
        }
        let tag = label.name_tag.as_deref().map(str::trim).filter(|t| !t.is_empty());
        let key = tag.map(grouping_key).filter(|k| !k.is_empty());
        let is_ego = key.is_some_and(|k| matches_ego_tag(k, ego_tags));
        let name = match (grouping, tag, key) {
            (Grouping::Entity, _, Some(key)) => key.to_string(),
            (Grouping::Address, Some(tag), _) => {
                if map.by_name.contains_key(tag) {
                    format!("{tag} ({address})")
                } else {
                    tag.to_string()
                }
            }
            _ => address.clone(),
        };
        let id = map.intern(name, is_ego);
        map.by_address.insert(address, id);
    }
    map
}

impl EntityMap {
    fn intern(&mut self, name: String, is_ego: bool) -> usize {
        if let Some(&id) = self.by_name.get(&name) {
            self.entities[id].is_ego |= is_ego;
            return id;
        }
        let id = self.entities.len();
        self.by_name.insert(name.clone(), id);
        self.entities.push(EntityInfo { name, is_ego });
        id
    }

    pub fn len(&self) -> usize {
        self.entities.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entities.is_empty()
    }

    pub fn entity_of(&self, address: &str) -> Option<usize> {
        self.by_address.get(address).copied()
    }

    pub fn info(&self, id: usize) -> &EntityInfo {
        &self.entities[id]
    }

    pub fn entities(&self) -> &[EntityInfo] {
        &self.entities
    }

    pub fn id_by_name(&self, name: &str) -> Option<usize> {
        self.by_name.get(name).copied()
    }

    /// Entity name and ego flag for an address, falling back to a non-ego
    /// singleton named by the address itself.
    pub fn resolve<'a>(&'a self, address: &'a str) -> (&'a str, bool) {
        match self.entity_of(address) {
            Some(id) => (self.entities[id].name.as_str(), self.entities[id].is_ego),
            None => (address, false),
        }
    }

    /// Address-to-entity-name pairs, sorted by address.
    pub fn assignments(&self) -> Vec<(&str, &str)> {
        let mut out: Vec<_> = self
            .by_address
            .iter()
            .map(|(addr, &id)| (addr.as_str(), self.entities[id].name.as_str()))
            .collect();
        out.sort_unstable();
        out
    }
}
