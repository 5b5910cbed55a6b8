//! Named groups of entities, e.g. every account of one fund.

use std::collections::BTreeSet;

use crate::error::{Error, Result};
use crate::network::MultiTokenNetwork;

const MAX_SUGGESTIONS: usize = 5;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EntityGroup {
    pub label: String,
    names: BTreeSet<String>,
}

impl EntityGroup {
    pub fn from_names(label: impl Into<String>, names: impl IntoIterator<Item = String>) -> Self {
        EntityGroup {
            label: label.into(),
            names: names.into_iter().collect(),
        }
    }

    /// All candidate entities whose name starts with `query`.
    ///
    /// Fails with the closest known names (or name prefixes at word
    /// boundaries) when nothing matches.
    pub fn resolve<'a>(query: &str, candidates: impl IntoIterator<Item = &'a str>) -> Result<Self> {
        let query = query.trim();
        let candidates: BTreeSet<&str> = candidates.into_iter().collect();
        let names: BTreeSet<String> = candidates
            .iter()
            .filter(|c| !query.is_empty() && c.starts_with(query))
            .map(|c| c.to_string())
            .collect();
        if names.is_empty() {
            return Err(Error::UnknownGroup {
                query: query.to_string(),
                suggestions: suggest(query, &candidates),
            });
        }
        Ok(EntityGroup {
            label: query.to_string(),
            names,
        })
    }

    pub fn names(&self) -> &BTreeSet<String> {
        &self.names
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn contains(&self, name: &str) -> bool {
        self.names.contains(name)
    }

    /// Entity-indexed membership mask for `net`.
    pub fn mask(&self, net: &MultiTokenNetwork) -> Vec<bool> {
        net.entity_mask(|e| self.names.contains(&e.name))
    }
}

fn suggest(query: &str, candidates: &BTreeSet<&str>) -> Vec<String> {
    let needle = query.to_lowercase();
    let mut keys: BTreeSet<&str> = BTreeSet::new();
    for c in candidates {
        keys.insert(c);
        for (i, ch) in c.char_indices() {
            if ch == ' ' && i > 0 {
                keys.insert(&c[..i]);
            }
        }
    }
    let mut scored: Vec<(f64, &str)> = keys
        .into_iter()
        .map(|k| (strsim::normalized_levenshtein(&needle, &k.to_lowercase()), k))
        .collect();
    scored.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(b.1)));
    scored
        .into_iter()
        .take(MAX_SUGGESTIONS)
        .map(|(_, k)| k.to_string())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    const NAMES: [&str; 4] = ["Alameda Research 1", "Alameda Research 2", "Binance 14", "Jump Trading"];

    #[test]
    fn prefix_resolution() {
        let g = EntityGroup::resolve("Alameda Research", NAMES).unwrap();
        assert_eq!(g.names().len(), 2);
        let g = EntityGroup::resolve("Binance 14", NAMES).unwrap();
        assert!(g.contains("Binance 14"));
    }

    #[test]
    fn misspelling_suggests_neighbours() {
        match EntityGroup::resolve("Alamedda", NAMES) {
            Err(Error::UnknownGroup { suggestions, .. }) => {
                assert_eq!(suggestions[0], "Alameda");
                assert!(suggestions.iter().any(|s| s == "Alameda Research"));
            }
            other => panic!("expected UnknownGroup, got {other:?}"),
        }
        assert!(EntityGroup::resolve("", NAMES).is_err());
    }
}
