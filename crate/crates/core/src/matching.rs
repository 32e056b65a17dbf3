//! Cascaded query matching: rank events against the query, then rank the
//! concepts of the best events.
//!
//! The event pool starts with the `event_count` best events and grows one
//! event at a time until it holds at least `concept_count` concepts or runs
//! out of events. Concepts from the pool are then ranked globally by their
//! similarity to the query.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ontology::{NodeId, OntologyTree};
use crate::ranking::{sort_ranked, top_k, Scored};
use crate::similarity::PhraseSimilarity;

pub const DEFAULT_EVENT_COUNT: usize = 2;
pub const DEFAULT_CONCEPT_COUNT: usize = 15;

fn default_events() -> usize {
    DEFAULT_EVENT_COUNT
}

fn default_concepts() -> usize {
    DEFAULT_CONCEPT_COUNT
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MatchQuery {
    pub text: String,
    /// Categories chosen by a human to limit the event pool. Empty means
    /// every event is a candidate.
    #[serde(default)]
    pub restrict_categories: Vec<NodeId>,
    #[serde(default = "default_events")]
    pub event_count: usize,
    #[serde(default = "default_concepts")]
    pub concept_count: usize,
}

impl MatchQuery {
    pub fn new(text: impl Into<String>) -> Self {
        Self {
            text: text.into(),
            restrict_categories: Vec::new(),
            event_count: DEFAULT_EVENT_COUNT,
            concept_count: DEFAULT_CONCEPT_COUNT,
        }
    }

    pub fn restrict<I, S>(mut self, categories: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<NodeId>,
    {
        self.restrict_categories = categories.into_iter().map(Into::into).collect();
        self
    }

    pub fn events(mut self, n: usize) -> Self {
        self.event_count = n;
        self
    }

    pub fn concepts(mut self, n: usize) -> Self {
        self.concept_count = n;
        self
    }

    fn validate(&self) -> Result<()> {
        if self.event_count == 0 {
            return Err(Error::invalid("event_count must be at least 1"));
        }
        if self.concept_count == 0 {
            return Err(Error::invalid("concept_count must be at least 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchResult {
    /// The event pool actually used, in rank order.
    pub matched_events: Vec<Scored<NodeId>>,
    pub matched_concepts: Vec<Scored<NodeId>>,
    pub restricted: bool,
    /// Fewer concepts were available than requested.
    pub shortage: bool,
    /// Restriction ids that are categories but not direct children of the root.
    pub flagged_restrictions: Vec<NodeId>,
}

impl MatchResult {
    pub fn concept_ids(&self) -> impl Iterator<Item = &NodeId> {
        self.matched_concepts.iter().map(|s| &s.id)
    }
}

/// Every candidate event ranked by similarity to the query text.
pub fn match_events(
    tree: &OntologyTree,
    query: &MatchQuery,
    backend: &dyn PhraseSimilarity,
) -> Result<Vec<Scored<NodeId>>> {
    query.validate()?;
    let pool: Vec<NodeId> = if query.restrict_categories.is_empty() {
        tree.events().map(|e| e.id.clone()).collect()
    } else {
        tree.events_under(&query.restrict_categories)?
            .into_iter()
            .collect()
    };
    if pool.is_empty() {
        return Err(Error::EmptyPool {
            restriction: query.restrict_categories.clone(),
        });
    }
    let mut ranked: Vec<_> = pool
        .into_iter()
        .map(|id| {
            let name = &tree
                .get(id.as_str())
                .expect("pool ids come from the tree")
                .name;
            let score = backend.similarity(&query.text, name);
            Scored::new(id, score)
        })
        .collect();
    sort_ranked(&mut ranked);
    Ok(ranked)
}

pub fn match_concepts(
    tree: &OntologyTree,
    query: &MatchQuery,
    backend: &dyn PhraseSimilarity,
) -> Result<MatchResult> {
    let ranked_events = match_events(tree, query, backend)?;

    let flagged_restrictions = query
        .restrict_categories
        .iter()
        .filter(|id| !tree.is_top_level(id.as_str()))
        .cloned()
        .collect();

    let mut used = 0;
    let mut candidates: Vec<NodeId> = Vec::new();
    for event in &ranked_events {
        if used >= query.event_count && candidates.len() >= query.concept_count {
            break;
        }
        candidates.extend(tree.concepts_of(event.id.as_str())?.map(|c| c.id.clone()));
        used += 1;
    }
    let shortage = candidates.len() < query.concept_count;

    let scored = candidates
        .into_iter()
        .map(|id| {
            let name = &tree
                .get(id.as_str())
                .expect("candidate ids come from the tree")
                .name;
            let score = backend.similarity(&query.text, name);
            Scored::new(id, score)
        })
        .collect();

    let mut matched_events = ranked_events;
    matched_events.truncate(used);

    Ok(MatchResult {
        matched_events,
        matched_concepts: top_k(scored, query.concept_count),
        restricted: !query.restrict_categories.is_empty(),
        shortage,
        flagged_restrictions,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ontology::OntologyBuilder;
    use crate::similarity::OverlapBackend;

    fn tree() -> OntologyTree {
        OntologyBuilder::new("root", "root")
            .category("family", "family life", "root")
            .category("care", "personal care and style", "root")
            .category("empty", "empty corner", "root")
            .category("weddings", "weddings", "family")
            .event("e.wed", "wedding ceremony", "weddings")
            .event("e.veil", "make a wedding veil", "weddings")
            .event("e.shower", "take a shower", "care")
            .concept("c.bride", "bride", "e.wed")
            .concept("c.ring", "wedding ring", "e.wed")
            .concept("c.cake", "cake", "e.wed")
            .concept("c.veil", "veil", "e.veil")
            .concept("c.lace", "lace", "e.veil")
            .concept("c.head", "shower head", "e.shower")
            .concept("c.soap", "soap", "e.shower")
            .concept("c.towel", "towel", "e.shower")
            .concept("c.tub", "bathtub", "e.shower")
            .build()
            .unwrap()
    }

    #[test]
    fn exact_name_ranks_first_with_score_one() {
        let t = tree();
        let b = OverlapBackend::from_tree(&t);
        let ranked = match_events(&t, &MatchQuery::new("take a shower"), &b).unwrap();
        assert_eq!(ranked[0].id.as_str(), "e.shower");
        assert_eq!(ranked[0].score, 1.0);
    }

    #[test]
    fn restriction_limits_pool_and_empty_pool_errors() {
        let t = tree();
        let b = OverlapBackend::from_tree(&t);
        let q = MatchQuery::new("wedding shower").restrict(["family"]);
        let ranked = match_events(&t, &q, &b).unwrap();
        let allowed = t.events_under(&["family"]).unwrap();
        assert!(ranked.iter().all(|s| allowed.contains(&s.id)));
        assert_eq!(ranked[0].id.as_str(), "e.wed");

        let err = match_events(&t, &MatchQuery::new("x").restrict(["empty"]), &b).unwrap_err();
        assert!(matches!(err, Error::EmptyPool { .. }));
        let err = match_events(&t, &MatchQuery::new("x").restrict(["e.wed"]), &b).unwrap_err();
        assert!(matches!(err, Error::WrongKind { .. }));
    }

    #[test]
    fn deeper_restrictions_are_flagged() {
        let t = tree();
        let b = OverlapBackend::from_tree(&t);
        let r = match_concepts(&t, &MatchQuery::new("wedding").restrict(["weddings"]), &b).unwrap();
        assert!(r.restricted);
        assert_eq!(r.flagged_restrictions, vec![NodeId::from("weddings")]);
        let r = match_concepts(&t, &MatchQuery::new("wedding").restrict(["family"]), &b).unwrap();
        assert!(r.flagged_restrictions.is_empty());
    }

    #[test]
    fn single_event_returns_its_concepts_ranked() {
        let t = tree();
        let b = OverlapBackend::from_tree(&t);
        let q = MatchQuery::new("wedding ceremony").events(1).concepts(3);
        let r = match_concepts(&t, &q, &b).unwrap();
        assert_eq!(r.matched_events.len(), 1);
        let ids: Vec<_> = r.concept_ids().map(NodeId::as_str).collect();
        // "wedding ring" shares a token; the other two tie at zero and sort by id.
        assert_eq!(ids, ["c.ring", "c.bride", "c.cake"]);
        assert!(!r.shortage);
    }

    #[test]
    fn exhaustion_sets_shortage() {
        let t = tree();
        let b = OverlapBackend::from_tree(&t);
        let r = match_concepts(&t, &MatchQuery::new("wedding").concepts(15), &b).unwrap();
        assert_eq!(r.matched_concepts.len(), 9);
        assert_eq!(r.matched_events.len(), 3);
        assert!(r.shortage);
    }

    #[test]
    fn pool_expands_until_enough_concepts() {
        let t = tree();
        let b = OverlapBackend::from_tree(&t);
        // Two best events for this query hold 3 + 2 concepts; asking for 6 pulls in the third.
        let q = MatchQuery::new("wedding veil").events(2).concepts(6);
        let r = match_concepts(&t, &q, &b).unwrap();
        assert_eq!(r.matched_events.len(), 3);
        assert_eq!(r.matched_concepts.len(), 6);
        let q = MatchQuery::new("wedding veil").events(2).concepts(5);
        assert_eq!(match_concepts(&t, &q, &b).unwrap().matched_events.len(), 2);
    }

    #[test]
    fn zero_counts_are_rejected() {
        let t = tree();
        let b = OverlapBackend::from_tree(&t);
        assert!(match_concepts(&t, &MatchQuery::new("x").events(0), &b).is_err());
        assert!(match_concepts(&t, &MatchQuery::new("x").concepts(0), &b).is_err());
    }
}
