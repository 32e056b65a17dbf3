//! Event-specific concept mining from crawled video tags.
//!
//! The pipeline runs per event: count the most frequent tag words (once per
//! video), keep only videos carrying enough of them, then keep the surviving
//! tag words that appear in a visual vocabulary.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{read_file, Error, Result};
use crate::ontology::NodeId;
use crate::similarity::tokenize;

pub const DEFAULT_FREQUENT_WORDS: usize = 10;
pub const DEFAULT_MIN_OVERLAP: usize = 3;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CrawlEntry {
    pub video_id: String,
    /// Unique tag words, tokenized and sorted.
    pub tags: BTreeSet<String>,
}

impl CrawlEntry {
    /// Tokenizes every raw tag; multi-word tags contribute each word.
    pub fn new<S: AsRef<str>>(video_id: impl Into<String>, raw_tags: &[S]) -> Self {
        Self {
            video_id: video_id.into(),
            tags: raw_tags
                .iter()
                .flat_map(|t| tokenize(t.as_ref()).tokens)
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CrawlManifest {
    pub event_id: NodeId,
    pub entries: Vec<CrawlEntry>,
}

#[derive(Deserialize)]
struct ManifestHeader {
    event_id: NodeId,
}

#[derive(Deserialize)]
struct ManifestRecord {
    video_id: String,
    tags: Vec<String>,
}

impl CrawlManifest {
    pub fn new(event_id: impl Into<NodeId>, entries: Vec<CrawlEntry>) -> Result<Self> {
        let mut seen = HashSet::new();
        for e in &entries {
            if !seen.insert(e.video_id.as_str()) {
                return Err(Error::invalid(format!(
                    "duplicate video id `{}` in manifest",
                    e.video_id
                )));
            }
        }
        Ok(Self {
            event_id: event_id.into(),
            entries,
        })
    }

    /// JSON Lines: a header `{"event_id": ...}` followed by one
    /// `{"video_id": ..., "tags": [...]}` record per video.
    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty() && !l.trim_start().starts_with('#'));
        let (hline, header) = lines.next().ok_or(Error::Empty("manifest"))?;
        let header: ManifestHeader = serde_json::from_str(header).map_err(|e| Error::Parse {
            line: hline + 1,
            message: format!("manifest header: {e}"),
        })?;
        let mut entries = Vec::new();
        for (i, line) in lines {
            let rec: ManifestRecord = serde_json::from_str(line).map_err(|e| Error::Parse {
                line: i + 1,
                message: e.to_string(),
            })?;
            entries.push(CrawlEntry::new(rec.video_id, &rec.tags));
        }
        Self::new(header.event_id, entries)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::parse(&read_file(path.as_ref())?)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Vocabulary {
    pub name: String,
    terms: BTreeSet<String>,
}

impl Vocabulary {
    pub fn new<S: AsRef<str>>(name: impl Into<String>, terms: &[S]) -> Result<Self> {
        let terms: BTreeSet<String> = terms
            .iter()
            .map(|t| tokenize(t.as_ref()).joined())
            .filter(|t| !t.is_empty())
            .collect();
        if terms.is_empty() {
            return Err(Error::Empty("vocabulary"));
        }
        Ok(Self {
            name: name.into(),
            terms,
        })
    }

    /// First non-blank line is the header `# vocabulary: <name>`; the rest are
    /// terms, one per line.
    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty());
        let header = lines.next().ok_or(Error::Empty("vocabulary"))?;
        let name = header
            .strip_prefix('#')
            .map(str::trim)
            .and_then(|h| h.strip_prefix("vocabulary:"))
            .map(str::trim)
            .filter(|n| !n.is_empty())
            .ok_or_else(|| Error::Parse {
                line: 1,
                message: format!("expected `# vocabulary: <name>`, found `{header}`"),
            })?;
        let terms: Vec<&str> = lines.filter(|l| !l.starts_with('#')).collect();
        Self::new(name, &terms)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::parse(&read_file(path.as_ref())?)
    }

    /// Exact match on the tokenized form.
    pub fn contains(&self, word: &str) -> bool {
        self.terms.contains(&tokenize(word).joined())
    }

    pub fn terms(&self) -> impl Iterator<Item = &str> {
        self.terms.iter().map(String::as_str)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DiscoveredConcept {
    pub name: String,
    pub event_id: NodeId,
    pub supporting_videos: Vec<String>,
    pub source_vocabulary: String,
}

/// Top-`n` words by document frequency; ties break alphabetically.
pub fn frequent_words(manifest: &CrawlManifest, n: usize) -> Result<Vec<(String, usize)>> {
    if n == 0 {
        return Err(Error::invalid("n must be at least 1"));
    }
    if manifest.is_empty() {
        return Err(Error::Empty("manifest"));
    }
    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    for entry in &manifest.entries {
        for tag in &entry.tags {
            *counts.entry(tag).or_insert(0) += 1;
        }
    }
    let mut ranked: Vec<(String, usize)> = counts
        .into_iter()
        .map(|(w, c)| (w.to_string(), c))
        .collect();
    ranked.sort_by_key(|w| std::cmp::Reverse(w.1));
    ranked.truncate(n);
    Ok(ranked)
}

/// Keeps videos whose tags include at least `min_overlap` of the frequent words.
pub fn filter_videos(
    manifest: &CrawlManifest,
    frequent: &BTreeSet<String>,
    min_overlap: usize,
) -> Result<CrawlManifest> {
    if min_overlap == 0 {
        return Err(Error::invalid("min_overlap must be at least 1"));
    }
    Ok(CrawlManifest {
        event_id: manifest.event_id.clone(),
        entries: manifest
            .entries
            .iter()
            .filter(|e| e.tags.intersection(frequent).count() >= min_overlap)
            .cloned()
            .collect(),
    })
}

pub fn discover_concepts(
    manifest: &CrawlManifest,
    vocabularies: &[Vocabulary],
    n: usize,
    min_overlap: usize,
) -> Result<Vec<DiscoveredConcept>> {
    if vocabularies.is_empty() {
        return Err(Error::Empty("vocabulary list"));
    }
    let frequent: BTreeSet<String> = frequent_words(manifest, n)?
        .into_iter()
        .map(|(w, _)| w)
        .collect();
    let kept = filter_videos(manifest, &frequent, min_overlap)?;

    let mut support: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
    for entry in &kept.entries {
        for tag in &entry.tags {
            support.entry(tag).or_default().push(&entry.video_id);
        }
    }

    Ok(support
        .into_iter()
        .filter_map(|(word, videos)| {
            let vocab = vocabularies.iter().find(|v| v.contains(word))?;
            let mut videos: Vec<String> = videos.into_iter().map(str::to_string).collect();
            videos.sort();
            Some(DiscoveredConcept {
                name: word.to_string(),
                event_id: manifest.event_id.clone(),
                supporting_videos: videos,
                source_vocabulary: vocab.name.clone(),
            })
        })
        .collect())
}
