//! Concept-score video representations, zero-shot retrieval and recounting.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use crate::corpus::{ScoreMatrix, ScoreVector};
use crate::error::{Error, Result};
use crate::matching::MatchResult;
use crate::models::{softmax, LinearModel, VideoFeatures};
use crate::ontology::{NodeId, OntologyTree};
use crate::ranking::{sort_ranked, top_k, RankedList, Scored};

pub const DEFAULT_RECOUNT_TOP: usize = 5;

/// How selected concept scores are combined into one video score.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Weighting {
    /// Plain mean.
    #[default]
    Uniform,
    /// Mean weighted by each concept's query similarity.
    Similarity,
}

/// Transform applied to each frame's concept score before averaging.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Calibration {
    #[default]
    Raw,
    Sigmoid,
}

impl Calibration {
    pub fn apply(self, x: f64) -> f64 {
        match self {
            Calibration::Raw => x,
            Calibration::Sigmoid => 1.0 / (1.0 + (-x).exp()),
        }
    }
}

/// Per-dimension mean of frame score vectors.
pub fn aggregate_frames(frames: &[Vec<f64>]) -> Result<Vec<f64>> {
    let first = frames.first().ok_or(Error::Empty("frame list"))?;
    let mut sum = vec![0.0; first.len()];
    for f in frames {
        if f.len() != sum.len() {
            return Err(Error::DimensionMismatch {
                expected: sum.len(),
                actual: f.len(),
            });
        }
        for (s, x) in sum.iter_mut().zip(f) {
            *s += x;
        }
    }
    let n = frames.len() as f64;
    Ok(sum.into_iter().map(|s| s / n).collect())
}

/// Orders concept models by the tree's canonical concept order.
pub fn order_concept_models<'a>(
    tree: &OntologyTree,
    models: &'a [LinearModel],
) -> Result<Vec<&'a LinearModel>> {
    let by_target: HashMap<&str, &LinearModel> =
        models.iter().map(|m| (m.target.as_str(), m)).collect();
    tree.concepts()
        .map(|c| {
            by_target
                .get(c.id.as_str())
                .copied()
                .ok_or_else(|| Error::validation(c.id.as_str(), "no concept model"))
        })
        .collect()
}

/// Scores every frame with every concept model and averages over frames.
pub fn video_representation(
    tree: &OntologyTree,
    video: &VideoFeatures,
    models: &[LinearModel],
    calibration: Calibration,
) -> Result<ScoreVector> {
    let ordered = order_concept_models(tree, models)?;
    represent(video, &ordered, calibration)
}

fn represent(
    video: &VideoFeatures,
    ordered: &[&LinearModel],
    calibration: Calibration,
) -> Result<ScoreVector> {
    let frame_scores = video
        .frames
        .iter()
        .map(|frame| {
            ordered
                .iter()
                .map(|m| m.predict(frame).map(|s| calibration.apply(s)))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ScoreVector {
        video_id: video.video_id.clone(),
        scores: aggregate_frames(&frame_scores)?,
    })
}

/// Builds a score matrix for a set of videos, columns in canonical order.
pub fn score_corpus(
    tree: &OntologyTree,
    videos: &[VideoFeatures],
    models: &[LinearModel],
    calibration: Calibration,
) -> Result<ScoreMatrix> {
    let ordered = order_concept_models(tree, models)?;
    let rows = videos
        .iter()
        .map(|v| represent(v, &ordered, calibration))
        .collect::<Result<Vec<_>>>()?;
    ScoreMatrix::new(tree.concept_ids(), rows)
}

/// Matched concepts resolved to corpus columns.
#[derive(Debug, Clone, PartialEq)]
pub struct ConceptSelection {
    columns: Vec<usize>,
    weights: Option<Vec<f64>>,
}

impl ConceptSelection {
    pub fn new(
        corpus: &ScoreMatrix,
        selected: &[Scored<NodeId>],
        weighting: Weighting,
    ) -> Result<Self> {
        if selected.is_empty() {
            return Err(Error::Empty("concept selection"));
        }
        let columns = selected
            .iter()
            .map(|s| {
                corpus
                    .column(s.id.as_str())
                    .ok_or_else(|| Error::UnknownConcept(s.id.to_string()))
            })
            .collect::<Result<Vec<_>>>()?;
        let weights = match weighting {
            Weighting::Uniform => None,
            Weighting::Similarity => {
                let w: Vec<f64> = selected.iter().map(|s| s.score.max(0.0)).collect();
                // All-zero similarities fall back to the plain mean.
                (w.iter().sum::<f64>() > 0.0).then_some(w)
            }
        };
        Ok(Self { columns, weights })
    }

    pub fn score(&self, scores: &[f64]) -> f64 {
        match &self.weights {
            None => {
                self.columns.iter().map(|&c| scores[c]).sum::<f64>() / self.columns.len() as f64
            }
            Some(w) => {
                let num: f64 = self
                    .columns
                    .iter()
                    .zip(w)
                    .map(|(&c, w)| scores[c] * w)
                    .sum();
                num / w.iter().sum::<f64>()
            }
        }
    }
}

pub fn zero_shot_score(
    corpus: &ScoreMatrix,
    video_id: &str,
    selected: &[Scored<NodeId>],
    weighting: Weighting,
) -> Result<f64> {
    let selection = ConceptSelection::new(corpus, selected, weighting)?;
    Ok(selection.score(&corpus.row(video_id)?.scores))
}

/// Ranks every video in the corpus by its zero-shot score for the matched concepts.
pub fn retrieve(
    corpus: &ScoreMatrix,
    matched: &MatchResult,
    weighting: Weighting,
) -> Result<RankedList> {
    retrieve_concepts(corpus, &matched.matched_concepts, weighting)
}

pub fn retrieve_concepts(
    corpus: &ScoreMatrix,
    selected: &[Scored<NodeId>],
    weighting: Weighting,
) -> Result<RankedList> {
    if corpus.is_empty() {
        return Err(Error::Empty("corpus"));
    }
    let selection = ConceptSelection::new(corpus, selected, weighting)?;
    let items = corpus
        .rows()
        .iter()
        .map(|r| Scored::new(r.video_id.clone(), selection.score(&r.scores)))
        .collect();
    Ok(RankedList::from_unsorted(items))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecountedConcept {
    pub id: NodeId,
    pub name: String,
    pub event_id: NodeId,
    pub event_name: String,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Recounting {
    pub video_id: String,
    pub items: Vec<RecountedConcept>,
}

impl Recounting {
    pub fn ids(&self) -> impl Iterator<Item = &NodeId> {
        self.items.iter().map(|c| &c.id)
    }
}

fn recount_filtered(
    tree: &OntologyTree,
    corpus: &ScoreMatrix,
    video_id: &str,
    top_n: usize,
    keep: impl Fn(&NodeId) -> bool,
) -> Result<Recounting> {
    if top_n == 0 {
        return Err(Error::invalid("top_n must be at least 1"));
    }
    let row = corpus.row(video_id)?;
    let candidates = corpus
        .concepts()
        .iter()
        .zip(&row.scores)
        .filter(|(id, _)| keep(id))
        .map(|(id, &s)| Scored::new(id.clone(), s))
        .collect();
    let items = top_k(candidates, top_n)
        .into_iter()
        .map(|s| {
            let concept = tree.get(s.id.as_str())?;
            let event = tree.event_of(s.id.as_str())?;
            Ok(RecountedConcept {
                name: concept.name.clone(),
                event_id: event.id.clone(),
                event_name: event.name.clone(),
                id: s.id,
                score: s.score,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Recounting {
        video_id: video_id.to_string(),
        items,
    })
}

/// The `top_n` highest-scoring concepts of one video.
pub fn recount(
    tree: &OntologyTree,
    corpus: &ScoreMatrix,
    video_id: &str,
    top_n: usize,
) -> Result<Recounting> {
    recount_filtered(tree, corpus, video_id, top_n, |_| true)
}

/// Source of event scores for two-step recounting.
#[derive(Debug, Clone, Copy)]
pub enum EventPredictor<'a> {
    /// Mean score of each event's own concepts.
    ConceptMean,
    /// Softmax over a linear event head, averaged over frames.
    SoftmaxHead {
        models: &'a [LinearModel],
        frames: &'a [Vec<f64>],
    },
}

/// Event scores for one video, ranked.
pub fn predict_events(
    tree: &OntologyTree,
    corpus: &ScoreMatrix,
    video_id: &str,
    predictor: EventPredictor<'_>,
) -> Result<Vec<Scored<NodeId>>> {
    let mut ranked = match predictor {
        EventPredictor::ConceptMean => {
            let row = corpus.row(video_id)?;
            let mut sums: BTreeMap<&NodeId, (f64, usize)> = BTreeMap::new();
            for (id, s) in corpus.concepts().iter().zip(&row.scores) {
                let entry = sums.entry(&tree.event_of(id.as_str())?.id).or_default();
                entry.0 += s;
                entry.1 += 1;
            }
            sums.into_iter()
                .map(|(id, (sum, n))| Scored::new(id.clone(), sum / n as f64))
                .collect::<Vec<_>>()
        }
        EventPredictor::SoftmaxHead { models, frames } => {
            if models.is_empty() {
                return Err(Error::Empty("event head"));
            }
            for m in models {
                tree.get(m.target.as_str())?;
                if tree.events().all(|e| e.id != m.target) {
                    return Err(Error::validation(
                        m.target.as_str(),
                        "event head target is not an event",
                    ));
                }
            }
            let probs = frames
                .iter()
                .map(|f| {
                    let logits = models
                        .iter()
                        .map(|m| m.predict(f))
                        .collect::<Result<Vec<_>>>()?;
                    softmax(&logits)
                })
                .collect::<Result<Vec<_>>>()?;
            let mean = aggregate_frames(&probs)?;
            models
                .iter()
                .zip(mean)
                .map(|(m, p)| Scored::new(m.target.clone(), p))
                .collect()
        }
    };
    sort_ranked(&mut ranked);
    Ok(ranked)
}

/// Recounts using only concepts of the `top_events` best predicted events.
pub fn recount_two_step(
    tree: &OntologyTree,
    corpus: &ScoreMatrix,
    video_id: &str,
    predictor: EventPredictor<'_>,
    top_events: usize,
    top_n: usize,
) -> Result<Recounting> {
    if top_events == 0 {
        return Err(Error::invalid("top_events must be at least 1"));
    }
    let events: BTreeSet<NodeId> = predict_events(tree, corpus, video_id, predictor)?
        .into_iter()
        .take(top_events)
        .map(|s| s.id)
        .collect();
    let owner: HashMap<&NodeId, &NodeId> = tree
        .concepts()
        .map(|c| (&c.id, c.parent.as_ref().expect("concepts have parents")))
        .collect();
    recount_filtered(tree, corpus, video_id, top_n, |id| {
        owner.get(id).is_some_and(|e| events.contains(*e))
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ontology::OntologyBuilder;

    fn tree() -> OntologyTree {
        OntologyBuilder::new("root", "root")
            .event("e1", "fishing", "root")
            .event("e2", "running", "root")
            .concept("c1", "rod", "e1")
            .concept("c2", "lake", "e1")
            .concept("c3", "track", "e2")
            .build()
            .unwrap()
    }

    fn corpus(rows: &[(&str, [f64; 3])]) -> ScoreMatrix {
        ScoreMatrix::new(
            vec!["c1".into(), "c2".into(), "c3".into()],
            rows.iter()
                .map(|(id, s)| ScoreVector {
                    video_id: id.to_string(),
                    scores: s.to_vec(),
                })
                .collect(),
        )
        .unwrap()
    }

    fn sel(ids: &[&str]) -> Vec<Scored<NodeId>> {
        ids.iter()
            .map(|&i| Scored::new(NodeId::from(i), 1.0))
            .collect()
    }

    #[test]
    fn aggregate_examples() {
        assert_eq!(
            aggregate_frames(&[vec![0.3, -1.0]]).unwrap(),
            vec![0.3, -1.0]
        );
        assert_eq!(
            aggregate_frames(&[vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap(),
            vec![0.5, 0.5]
        );
        assert!(matches!(aggregate_frames(&[]), Err(Error::Empty(_))));
        assert!(aggregate_frames(&[vec![0.0], vec![0.0, 1.0]]).is_err());
    }

    #[test]
    fn representation_examples() {
        let t = tree();
        let models = vec![
            LinearModel::new("c3", vec![0.0, 0.0], 3.0),
            LinearModel::new("c1", vec![0.0, 0.0], 1.0),
            LinearModel::new("c2", vec![0.0, 0.0], -2.0),
        ];
        let v = VideoFeatures {
            video_id: "v".into(),
            frames: vec![vec![5.0, 6.0]],
        };
        let r = video_representation(&t, &v, &models, Calibration::Raw).unwrap();
        assert_eq!(r.scores, vec![1.0, -2.0, 3.0]);

        let one = vec![
            LinearModel::new("c1", vec![1.0], 0.0),
            LinearModel::new("c2", vec![0.0], 0.0),
            LinearModel::new("c3", vec![0.0], 0.0),
        ];
        let v = VideoFeatures {
            video_id: "v".into(),
            frames: vec![vec![0.2], vec![0.4]],
        };
        let r = video_representation(&t, &v, &one, Calibration::Raw).unwrap();
        assert!((r.scores[0] - 0.3).abs() < 1e-15);

        let r = video_representation(&t, &v, &one[..2], Calibration::Raw);
        assert!(matches!(r, Err(Error::Validation { .. })));
        let s = video_representation(&t, &v, &one, Calibration::Sigmoid).unwrap();
        assert_eq!(s.scores[1], 0.5);
    }

    #[test]
    fn zero_shot_examples() {
        let c = corpus(&[("v", [0.2, 0.4, 9.0])]);
        assert_eq!(
            zero_shot_score(&c, "v", &sel(&["c3"]), Weighting::Uniform).unwrap(),
            9.0
        );
        let s = zero_shot_score(&c, "v", &sel(&["c1", "c2"]), Weighting::Uniform).unwrap();
        assert!((s - 0.3).abs() < 1e-15);
        assert!(matches!(
            zero_shot_score(&c, "v", &sel(&["zz"]), Weighting::Uniform),
            Err(Error::UnknownConcept(_))
        ));
        assert!(zero_shot_score(&c, "v", &[], Weighting::Uniform).is_err());

        let weighted = vec![
            Scored::new(NodeId::from("c1"), 3.0),
            Scored::new(NodeId::from("c3"), 1.0),
        ];
        let s = zero_shot_score(&c, "v", &weighted, Weighting::Similarity).unwrap();
        assert!((s - (0.6 + 9.0) / 4.0).abs() < 1e-15);
    }

    #[test]
    fn retrieve_ties_break_by_video_id() {
        let c = corpus(&[
            ("b", [1.0, 0.0, 0.0]),
            ("a", [1.0, 0.0, 0.0]),
            ("c", [2.0, 0.0, 0.0]),
        ]);
        let r = retrieve_concepts(&c, &sel(&["c1"]), Weighting::Uniform).unwrap();
        assert_eq!(r.ids().collect::<Vec<_>>(), ["c", "a", "b"]);
        let single = corpus(&[("only", [0.0; 3])]);
        assert_eq!(
            retrieve_concepts(&single, &sel(&["c1"]), Weighting::Uniform)
                .unwrap()
                .len(),
            1
        );
    }

    #[test]
    fn recount_examples() {
        let t = tree();
        let c = corpus(&[("v", [0.0, 1.0, 0.0])]);
        let r = recount(&t, &c, "v", 1).unwrap();
        assert_eq!(r.items[0].id.as_str(), "c2");
        assert_eq!(r.items[0].event_name, "fishing");
        let full = recount(&t, &c, "v", 3).unwrap();
        assert_eq!(
            full.ids().map(NodeId::as_str).collect::<Vec<_>>(),
            ["c2", "c1", "c3"]
        );
        assert!(recount(&t, &c, "v", 0).is_err());
    }

    #[test]
    fn two_step_examples() {
        let t = tree();
        let c = corpus(&[("v", [0.1, 0.2, 0.9])]);
        let all = recount_two_step(&t, &c, "v", EventPredictor::ConceptMean, 2, 3).unwrap();
        assert_eq!(all, recount(&t, &c, "v", 3).unwrap());
        let one = recount_two_step(&t, &c, "v", EventPredictor::ConceptMean, 1, 5).unwrap();
        assert_eq!(one.ids().map(NodeId::as_str).collect::<Vec<_>>(), ["c3"]);

        let head = vec![
            LinearModel::new("e1", vec![1.0], 0.0),
            LinearModel::new("e2", vec![-1.0], 0.0),
        ];
        let frames = vec![vec![2.0], vec![1.0]];
        let p = EventPredictor::SoftmaxHead {
            models: &head,
            frames: &frames,
        };
        let r = recount_two_step(&t, &c, "v", p, 1, 5).unwrap();
        assert_eq!(
            r.ids().map(NodeId::as_str).collect::<Vec<_>>(),
            ["c2", "c1"]
        );
        let bad = vec![LinearModel::new("c1", vec![1.0], 0.0)];
        let p = EventPredictor::SoftmaxHead {
            models: &bad,
            frames: &frames,
        };
        assert!(predict_events(&t, &c, "v", p).is_err());
    }
}
