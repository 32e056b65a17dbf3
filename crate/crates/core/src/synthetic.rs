//! Seeded synthetic ontologies and corpora with planted concept-score signal.

use std::collections::{BTreeMap, BTreeSet};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::corpus::{ScoreMatrix, ScoreVector};
use crate::error::{Error, Result};
use crate::evaluation::{expected_random_ap, EvalConfig, EvalQuery};
use crate::ontology::{NodeId, OntologyBuilder, OntologyTree};

/// Videos to generate for one event and the concepts that respond to it.
#[derive(Debug, Clone, PartialEq)]
pub struct PlantedEvent {
    pub event: NodeId,
    pub videos: usize,
    pub signal: Vec<NodeId>,
}

/// Every score is `N(0, sigma)`; a video's event adds `delta` on that
/// event's signal concepts. Video ids are `<event id>/<index>`.
pub fn planted_corpus(
    tree: &OntologyTree,
    plan: &[PlantedEvent],
    delta: f64,
    sigma: f64,
    seed: u64,
) -> Result<(ScoreMatrix, BTreeMap<NodeId, BTreeSet<String>>)> {
    let noise = Normal::new(0.0, sigma).map_err(|e| Error::invalid(e.to_string()))?;
    let concepts = tree.concept_ids();
    let column: BTreeMap<&NodeId, usize> =
        concepts.iter().enumerate().map(|(i, c)| (c, i)).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rows = Vec::new();
    let mut relevant = BTreeMap::new();
    for p in plan {
        tree.get(p.event.as_str())?;
        let signal = p
            .signal
            .iter()
            .map(|c| {
                column
                    .get(c)
                    .copied()
                    .ok_or_else(|| Error::UnknownConcept(c.to_string()))
            })
            .collect::<Result<Vec<_>>>()?;
        let mut ids = BTreeSet::new();
        for v in 0..p.videos {
            let mut scores: Vec<f64> = (0..concepts.len())
                .map(|_| noise.sample(&mut rng))
                .collect();
            for &c in &signal {
                scores[c] += delta;
            }
            let video_id = format!("{}/{v:03}", p.event);
            ids.insert(video_id.clone());
            rows.push(ScoreVector { video_id, scores });
        }
        relevant.insert(p.event.clone(), ids);
    }
    Ok((ScoreMatrix::new(concepts, rows)?, relevant))
}

/// A complete retrieval benchmark.
#[derive(Debug, Clone)]
pub struct Benchmark {
    pub tree: OntologyTree,
    pub corpus: ScoreMatrix,
    pub queries: Vec<EvalQuery>,
    pub config: EvalConfig,
}

impl Benchmark {
    /// Mean over queries of the expected AP of a uniformly random ranking.
    pub fn random_map(&self) -> Result<f64> {
        let n = self.corpus.len();
        let total = self
            .queries
            .iter()
            .map(|q| expected_random_ap(n, q.relevant.len()))
            .sum::<Result<f64>>()?;
        Ok(total / self.queries.len() as f64)
    }
}

pub const AMBIGUITY_DOMAINS: usize = 10;
pub const CONCEPTS_PER_EVENT: usize = 15;
const OVERLAP_CONCEPTS: usize = 5;
const DECOY_OVERLAP_CONCEPTS: usize = 8;

/// Twenty target events in ten top-level categories plus ten decoy events in
/// categories of their own. Each domain `k` holds:
///
/// * `t{k}.0` named `alpha{k} gamma{k}`: five concepts mention `alpha{k}`,
///   queried as `alpha{k} poly{k}`;
/// * `t{k}.1` named `beta{k} delta{k}`: every concept mentions `beta{k}`,
///   queried by its exact name;
/// * decoy `d{k}` named `poly{k} epsilon{k}` under its own category, with
///   eight concepts mentioning `poly{k}`.
///
/// Target events get 80 videos, decoys 40; every query is restricted to its
/// domain category.
pub fn ambiguity_benchmark(seed: u64) -> Result<Benchmark> {
    let mut b = OntologyBuilder::new("root", "all events");
    let mut plan = Vec::new();
    let mut queries = Vec::new();
    for k in 0..AMBIGUITY_DOMAINS {
        let cat = format!("cat{k:02}");
        let decoy_cat = format!("dcat{k:02}");
        b.category(&cat, &format!("domain{k}"), "root");
        b.category(&decoy_cat, &format!("elsewhere{k}"), "root");

        let decoyed = format!("t{k:02}.0");
        b.event(&decoyed, &format!("alpha{k} gamma{k}"), &cat);
        let plain = format!("t{k:02}.1");
        b.event(&plain, &format!("beta{k} delta{k}"), &cat);
        let decoy = format!("d{k:02}");
        b.event(&decoy, &format!("poly{k} epsilon{k}"), &decoy_cat);

        let mut signal = |event: &str, name: &dyn Fn(usize) -> String| -> Vec<NodeId> {
            (0..CONCEPTS_PER_EVENT)
                .map(|j| {
                    let id = format!("{event}.c{j:02}");
                    b.concept(&id, &name(j), event);
                    NodeId::from(id)
                })
                .collect()
        };
        let s0 = signal(&decoyed, &|j| {
            if j < OVERLAP_CONCEPTS {
                format!("alpha{k} object{k}x{j}")
            } else {
                format!("thing{k}x{j}")
            }
        });
        let s1 = signal(&plain, &|j| format!("beta{k} part{k}x{j}"));
        let sd = signal(&decoy, &|j| {
            if j < DECOY_OVERLAP_CONCEPTS {
                format!("poly{k} item{k}x{j}")
            } else {
                format!("stuff{k}x{j}")
            }
        });

        plan.push(PlantedEvent {
            event: decoyed.as_str().into(),
            videos: 80,
            signal: s0,
        });
        plan.push(PlantedEvent {
            event: plain.as_str().into(),
            videos: 80,
            signal: s1,
        });
        plan.push(PlantedEvent {
            event: decoy.as_str().into(),
            videos: 40,
            signal: sd,
        });
        queries.push((decoyed, format!("alpha{k} poly{k}"), cat.clone()));
        queries.push((plain, format!("beta{k} delta{k}"), cat));
    }
    let tree = b.build()?;
    let (corpus, relevant) = planted_corpus(&tree, &plan, 1.0, 0.3, seed)?;
    let queries = queries
        .into_iter()
        .map(|(event, text, cat)| EvalQuery {
            relevant: relevant[event.as_str()].clone(),
            id: event,
            text,
            restrict_categories: vec![cat.into()],
        })
        .collect();
    Ok(Benchmark {
        tree,
        corpus,
        queries,
        config: EvalConfig::default(),
    })
}

pub const SWEEP_EVENTS: usize = 10;
pub const SWEEP_SIGNAL_CONCEPTS: usize = 3;
pub const SWEEP_CONCEPTS_PER_EVENT: usize = 30;

/// Ten events of thirty concepts each, where only three concepts per event
/// carry signal and only those three share a token with the query. Matching
/// uses a single event, so the concept count alone decides how much noise is
/// averaged in.
pub fn concept_count_fixture(seed: u64) -> Result<Benchmark> {
    let mut b = OntologyBuilder::new("root", "all events");
    let mut plan = Vec::new();
    for k in 0..SWEEP_EVENTS {
        let event = format!("e{k:02}");
        b.event(&event, &format!("topic{k}"), "root");
        let mut signal = Vec::new();
        for j in 0..SWEEP_CONCEPTS_PER_EVENT {
            let id = format!("{event}.c{j:02}");
            if j < SWEEP_SIGNAL_CONCEPTS {
                b.concept(&id, &format!("topic{k} cue{k}x{j}"), &event);
                signal.push(NodeId::from(id));
            } else {
                b.concept(&id, &format!("filler{k}x{j}"), &event);
            }
        }
        plan.push(PlantedEvent {
            event: event.into(),
            videos: 60,
            signal,
        });
    }
    let tree = b.build()?;
    let (corpus, relevant) = planted_corpus(&tree, &plan, 1.0, 1.0, seed)?;
    let queries = relevant
        .into_iter()
        .enumerate()
        .map(|(k, (event, videos))| EvalQuery {
            id: event.to_string(),
            text: format!("topic{k}"),
            restrict_categories: Vec::new(),
            relevant: videos,
        })
        .collect();
    Ok(Benchmark {
        tree,
        corpus,
        queries,
        config: EvalConfig {
            event_count: 1,
            ..EvalConfig::default()
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matching::{match_concepts, MatchQuery};
    use crate::similarity::OverlapBackend;

    #[test]
    fn ambiguity_shape() {
        let bench = ambiguity_benchmark(7).unwrap();
        let stats = bench.tree.stats();
        assert_eq!(stats.event_count, 30);
        assert_eq!(stats.concept_count, 450);
        assert_eq!(bench.corpus.len(), 2000);
        assert_eq!(bench.queries.len(), 20);

        let backend = OverlapBackend::from_tree(&bench.tree);
        let q = MatchQuery::new("alpha3 poly3");
        let r = match_concepts(&bench.tree, &q, &backend).unwrap();
        let events: Vec<_> = r.matched_events.iter().map(|s| s.id.as_str()).collect();
        assert_eq!(events, ["t03.0", "d03"]);
    }

    #[test]
    fn same_seed_same_corpus() {
        let a = concept_count_fixture(1).unwrap();
        let b = concept_count_fixture(1).unwrap();
        assert_eq!(a.corpus, b.corpus);
        assert_ne!(a.corpus, concept_count_fixture(2).unwrap().corpus);
    }
}
