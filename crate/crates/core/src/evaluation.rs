//! Retrieval and classification metrics and comparison reports.
//!
//! Ground truth is JSON Lines, one query per line:
//!
//! ```text
//! {"id":"q1","text":"wedding shower","restrict_categories":["c.family"],"relevant":["v001","v007"]}
//! ```

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::ScoreMatrix;
use crate::error::{read_file, Error, Result};
use crate::matching::{match_concepts, MatchQuery, DEFAULT_CONCEPT_COUNT, DEFAULT_EVENT_COUNT};
use crate::ontology::{NodeId, OntologyTree};
use crate::scoring::{retrieve, Weighting};
use crate::similarity::PhraseSimilarity;

/// Non-interpolated average precision. Relevant items missing from the
/// ranking contribute precision 0; repeated ids count at their first rank.
pub fn average_precision<I, S>(ranked: I, relevant: &BTreeSet<String>) -> Result<f64>
where
    I: IntoIterator<Item = S>,
    S: AsRef<str>,
{
    if relevant.is_empty() {
        return Err(Error::Empty("relevant set"));
    }
    let mut seen = HashSet::new();
    let (mut rank, mut hits, mut sum) = (0usize, 0usize, 0.0);
    for id in ranked {
        let id = id.as_ref();
        if !seen.insert(id.to_string()) {
            continue;
        }
        rank += 1;
        if relevant.contains(id) {
            hits += 1;
            sum += hits as f64 / rank as f64;
            if hits == relevant.len() {
                break;
            }
        }
    }
    Ok(sum / relevant.len() as f64)
}

pub fn mean_ap(aps: &[f64]) -> Result<f64> {
    if aps.is_empty() {
        return Err(Error::Empty("AP list"));
    }
    Ok(aps.iter().sum::<f64>() / aps.len() as f64)
}

/// Fraction of rows whose true label is among the `k` highest scores, ties
/// going to the lower label index.
pub fn top_k_accuracy(predictions: &[Vec<f64>], labels: &[usize], k: usize) -> Result<f64> {
    Ok(top_k_hits(predictions, labels, k)?
        .iter()
        .filter(|&&h| h)
        .count() as f64
        / predictions.len() as f64)
}

fn top_k_hits(predictions: &[Vec<f64>], labels: &[usize], k: usize) -> Result<Vec<bool>> {
    if k == 0 {
        return Err(Error::invalid("k must be at least 1"));
    }
    if predictions.is_empty() {
        return Err(Error::Empty("predictions"));
    }
    if predictions.len() != labels.len() {
        return Err(Error::DimensionMismatch {
            expected: predictions.len(),
            actual: labels.len(),
        });
    }
    let classes = predictions[0].len();
    predictions
        .iter()
        .zip(labels)
        .map(|(p, &label)| {
            if p.len() != classes {
                return Err(Error::DimensionMismatch {
                    expected: classes,
                    actual: p.len(),
                });
            }
            if label >= classes {
                return Err(Error::LabelOutOfRange { label, classes });
            }
            let target = p[label] + 0.0;
            let ahead = p
                .iter()
                .enumerate()
                .filter(|&(j, &s)| {
                    let s = s + 0.0;
                    s.total_cmp(&target).is_gt() || (s == target && j < label)
                })
                .count();
            Ok(ahead < k)
        })
        .collect()
}

/// Top-k accuracy grouped by the top-level category of each row's true event.
/// `events[i]` is the event predicted by column `i`.
pub fn accuracy_by_top_category(
    tree: &OntologyTree,
    events: &[NodeId],
    predictions: &[Vec<f64>],
    labels: &[usize],
    k: usize,
) -> Result<BTreeMap<NodeId, f64>> {
    let hits = top_k_hits(predictions, labels, k)?;
    if events.len() != predictions[0].len() {
        return Err(Error::DimensionMismatch {
            expected: predictions[0].len(),
            actual: events.len(),
        });
    }
    let mut groups: BTreeMap<NodeId, (usize, usize)> = BTreeMap::new();
    for (&label, hit) in labels.iter().zip(hits) {
        let top = tree.top_category_of(events[label].as_str())?.id.clone();
        let g = groups.entry(top).or_default();
        g.0 += usize::from(hit);
        g.1 += 1;
    }
    Ok(groups
        .into_iter()
        .map(|(id, (h, n))| (id, h as f64 / n as f64))
        .collect())
}

/// Expected AP of a uniformly random ranking of `n` items with `r` relevant.
pub fn expected_random_ap(n: usize, r: usize) -> Result<f64> {
    if r == 0 || r > n {
        return Err(Error::invalid(format!(
            "need 1 <= r <= n, got r={r}, n={n}"
        )));
    }
    let harmonic: f64 = (1..=n).map(|i| 1.0 / i as f64).sum();
    let nf = n as f64;
    if n == 1 {
        return Ok(1.0);
    }
    Ok(harmonic / nf + (r as f64 - 1.0) * (nf - harmonic) / (nf * (nf - 1.0)))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvalQuery {
    pub id: String,
    pub text: String,
    #[serde(default)]
    pub restrict_categories: Vec<NodeId>,
    pub relevant: BTreeSet<String>,
}

pub fn parse_queries(text: &str) -> Result<Vec<EvalQuery>> {
    let mut out: Vec<EvalQuery> = Vec::new();
    let mut ids = HashSet::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let q: EvalQuery = serde_json::from_str(line).map_err(|e| Error::Parse {
            line: i + 1,
            message: e.to_string(),
        })?;
        if !ids.insert(q.id.clone()) {
            return Err(Error::Parse {
                line: i + 1,
                message: format!("duplicate query id `{}`", q.id),
            });
        }
        out.push(q);
    }
    Ok(out)
}

pub fn load_queries(path: impl AsRef<Path>) -> Result<Vec<EvalQuery>> {
    parse_queries(&read_file(path.as_ref())?)
}

pub fn queries_to_document(queries: &[EvalQuery]) -> String {
    queries
        .iter()
        .map(|q| serde_json::to_string(q).expect("queries serialize") + "\n")
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvalConfig {
    pub event_count: usize,
    pub concept_count: usize,
    pub weighting: Weighting,
    /// Apply each query's category restriction.
    pub restricted: bool,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            event_count: DEFAULT_EVENT_COUNT,
            concept_count: DEFAULT_CONCEPT_COUNT,
            weighting: Weighting::Uniform,
            restricted: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueryAp {
    pub id: String,
    pub ap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub per_query: Vec<QueryAp>,
    pub map: f64,
    pub config: EvalConfig,
}

impl EvalReport {
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for q in &self.per_query {
            writeln!(out, "{}\t{:.4}", q.id, q.ap).unwrap();
        }
        writeln!(
            out,
            "mAP\t{:.4}\t(events={}, concepts={}, restricted={})",
            self.map, self.config.event_count, self.config.concept_count, self.config.restricted
        )
        .unwrap();
        out
    }
}

/// Match, retrieve and score every query.
pub fn evaluate(
    tree: &OntologyTree,
    queries: &[EvalQuery],
    corpus: &ScoreMatrix,
    backend: &dyn PhraseSimilarity,
    config: EvalConfig,
) -> Result<EvalReport> {
    if queries.is_empty() {
        return Err(Error::Empty("query set"));
    }
    let mut per_query = Vec::with_capacity(queries.len());
    for q in queries {
        if let Some(v) = q.relevant.iter().find(|v| corpus.row(v).is_err()) {
            return Err(Error::UnknownVideo(v.clone()));
        }
        let mut mq = MatchQuery::new(q.text.as_str())
            .events(config.event_count)
            .concepts(config.concept_count);
        if config.restricted {
            mq.restrict_categories = q.restrict_categories.clone();
        }
        let matched = match_concepts(tree, &mq, backend)?;
        let ranking = retrieve(corpus, &matched, config.weighting)?;
        per_query.push(QueryAp {
            id: q.id.clone(),
            ap: average_precision(ranking.ids(), &q.relevant)?,
        });
    }
    let aps: Vec<f64> = per_query.iter().map(|q| q.ap).collect();
    Ok(EvalReport {
        map: mean_ap(&aps)?,
        per_query,
        config,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchingComparison {
    pub unrestricted: EvalReport,
    pub restricted: EvalReport,
}

impl MatchingComparison {
    pub fn to_text(&self) -> String {
        format!(
            "method\tmAP\nwithout structure\t{:.4}\nwith structure\t{:.4}\n",
            self.unrestricted.map, self.restricted.map
        )
    }
}

/// The same evaluation with and without each query's category restriction.
pub fn compare_matching(
    tree: &OntologyTree,
    queries: &[EvalQuery],
    corpus: &ScoreMatrix,
    backend: &dyn PhraseSimilarity,
    config: EvalConfig,
) -> Result<MatchingComparison> {
    let run = |restricted| {
        evaluate(
            tree,
            queries,
            corpus,
            backend,
            EvalConfig {
                restricted,
                ..config
            },
        )
    };
    Ok(MatchingComparison {
        unrestricted: run(false)?,
        restricted: run(true)?,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub concept_count: usize,
    pub map: f64,
}

/// mAP at each concept count. Counts must be positive and strictly ascending.
pub fn concept_count_sweep(
    tree: &OntologyTree,
    queries: &[EvalQuery],
    corpus: &ScoreMatrix,
    backend: &dyn PhraseSimilarity,
    counts: &[usize],
    config: EvalConfig,
) -> Result<Vec<SweepPoint>> {
    if counts.is_empty() {
        return Err(Error::Empty("concept counts"));
    }
    if counts[0] == 0 {
        return Err(Error::invalid("concept counts must be at least 1"));
    }
    if counts.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::invalid(
            "concept counts must be strictly ascending without duplicates",
        ));
    }
    counts
        .iter()
        .map(|&concept_count| {
            let report = evaluate(
                tree,
                queries,
                corpus,
                backend,
                EvalConfig {
                    concept_count,
                    ..config
                },
            )?;
            Ok(SweepPoint {
                concept_count,
                map: report.map,
            })
        })
        .collect()
}

pub fn sweep_to_tsv(points: &[SweepPoint]) -> String {
    let mut out = String::from("concept_count\tmap\n");
    for p in points {
        writeln!(out, "{}\t{}", p.concept_count, p.map).unwrap();
    }
    out
}
