//! Linear learning components over precomputed frame features.
//!
//! Frames arrive as fixed-dimension feature vectors. On top of them sit a
//! softmax event head trained with the multinomial logistic loss, and
//! one-vs-all linear concept classifiers trained with an L2-regularized hinge
//! loss.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt::Write as _;
use std::path::Path;

use rand::seq::{IndexedRandom, SliceRandom};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{read_file, Error, Result};
use crate::ontology::{ConceptVideos, NodeId, OntologyTree};

pub const DEFAULT_SEED: u64 = 20150601;

fn check_finite(values: &[f64], what: &'static str) -> Result<()> {
    if values.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite(what))
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Unit Euclidean norm; the zero vector passes through unchanged.
pub fn l2_normalize(v: &[f64]) -> Result<Vec<f64>> {
    check_finite(v, "feature vector")?;
    let norm = dot(v, v).sqrt();
    if norm == 0.0 {
        return Ok(v.to_vec());
    }
    Ok(v.iter().map(|x| x / norm).collect())
}

/// Softmax with max subtraction, so large logits cannot overflow.
pub fn softmax(logits: &[f64]) -> Result<Vec<f64>> {
    if logits.is_empty() {
        return Err(Error::Empty("logit vector"));
    }
    check_finite(logits, "logit vector")?;
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|x| (x - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    Ok(exps.into_iter().map(|e| e / sum).collect())
}

/// `log p_k` computed as `x_k - max - ln(sum exp(x - max))`.
pub fn log_softmax(logits: &[f64]) -> Result<Vec<f64>> {
    if logits.is_empty() {
        return Err(Error::Empty("logit vector"));
    }
    check_finite(logits, "logit vector")?;
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lse = logits.iter().map(|x| (x - max).exp()).sum::<f64>().ln();
    Ok(logits.iter().map(|x| (x - max) - lse).collect())
}

fn check_batch(logits: &[Vec<f64>], labels: &[usize]) -> Result<usize> {
    if logits.is_empty() {
        return Err(Error::Empty("batch"));
    }
    if logits.len() != labels.len() {
        return Err(Error::DimensionMismatch {
            expected: logits.len(),
            actual: labels.len(),
        });
    }
    let classes = logits[0].len();
    for (row, &label) in logits.iter().zip(labels) {
        if row.len() != classes {
            return Err(Error::DimensionMismatch {
                expected: classes,
                actual: row.len(),
            });
        }
        if label >= classes {
            return Err(Error::LabelOutOfRange { label, classes });
        }
    }
    Ok(classes)
}

/// Mean negative log-probability of the true labels.
pub fn multinomial_loss(logits: &[Vec<f64>], labels: &[usize]) -> Result<f64> {
    check_batch(logits, labels)?;
    let mut total = 0.0;
    for (row, &label) in logits.iter().zip(labels) {
        total -= log_softmax(row)?[label];
    }
    Ok(total / logits.len() as f64)
}

/// Gradient of [`multinomial_loss`] with respect to each logit: `(p - onehot) / N`.
pub fn multinomial_loss_gradient(logits: &[Vec<f64>], labels: &[usize]) -> Result<Vec<Vec<f64>>> {
    check_batch(logits, labels)?;
    let n = logits.len() as f64;
    logits
        .iter()
        .zip(labels)
        .map(|(row, &label)| {
            let mut p = softmax(row)?;
            p[label] -= 1.0;
            p.iter_mut().for_each(|g| *g /= n);
            Ok(p)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearModel {
    pub target: NodeId,
    pub dim: usize,
    pub weights: Vec<f64>,
    pub bias: f64,
}

impl LinearModel {
    pub fn new(target: impl Into<NodeId>, weights: Vec<f64>, bias: f64) -> Self {
        Self {
            target: target.into(),
            dim: weights.len(),
            weights,
            bias,
        }
    }

    /// `w · v + b`.
    pub fn predict(&self, v: &[f64]) -> Result<f64> {
        if v.len() != self.weights.len() {
            return Err(Error::DimensionMismatch {
                expected: self.weights.len(),
                actual: v.len(),
            });
        }
        Ok(dot(&self.weights, v) + self.bias)
    }

    fn validate(&self) -> Result<()> {
        if self.dim != self.weights.len() {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                actual: self.weights.len(),
            });
        }
        check_finite(&self.weights, "model weights")?;
        check_finite(&[self.bias], "model bias")
    }
}

/// One JSON model record per line.
pub fn models_to_document(models: &[LinearModel]) -> String {
    let mut out = String::new();
    for m in models {
        out.push_str(&serde_json::to_string(m).expect("model serializes"));
        out.push('\n');
    }
    out
}

pub fn parse_models(text: &str) -> Result<Vec<LinearModel>> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let m: LinearModel = serde_json::from_str(line).map_err(|e| Error::Parse {
            line: i + 1,
            message: e.to_string(),
        })?;
        m.validate()?;
        out.push(m);
    }
    Ok(out)
}

pub fn load_models(path: impl AsRef<Path>) -> Result<Vec<LinearModel>> {
    parse_models(&read_file(path.as_ref())?)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HingeConfig {
    pub lambda: f64,
    pub iterations: usize,
    /// Base step; iteration `t` (from 1) uses `step / t`.
    pub step: f64,
}

impl Default for HingeConfig {
    fn default() -> Self {
        Self {
            lambda: 1e-4,
            iterations: 500,
            step: 0.1,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainingTrace {
    pub model: LinearModel,
    /// Objective before the first step and after each iteration.
    pub objective: Vec<f64>,
}

struct HingeProblem<'a> {
    samples: Vec<(&'a [f64], f64)>,
    lambda: f64,
}

impl HingeProblem<'_> {
    fn objective(&self, w: &[f64], b: f64) -> f64 {
        let hinge: f64 = self
            .samples
            .iter()
            .map(|(x, y)| (1.0 - y * (dot(w, x) + b)).max(0.0))
            .sum();
        self.lambda * dot(w, w) + hinge / self.samples.len() as f64
    }

    fn subgradient(&self, w: &[f64], b: f64) -> (Vec<f64>, f64) {
        let n = self.samples.len() as f64;
        let mut gw: Vec<f64> = w.iter().map(|wi| 2.0 * self.lambda * wi).collect();
        let mut gb = 0.0;
        for (x, y) in &self.samples {
            if y * (dot(w, x) + b) < 1.0 {
                gw.iter_mut()
                    .zip(x.iter())
                    .for_each(|(g, xi)| *g -= y * xi / n);
                gb -= y / n;
            }
        }
        (gw, gb)
    }
}

/// Halvings tried per iteration before the step is skipped.
const MAX_BACKTRACK: usize = 30;

/// Full-batch subgradient descent on `lambda * |w|^2 + mean hinge`.
///
/// Starts from zero and uses a `step / t` schedule. A step that would raise the
/// objective is halved until it does not; if no halving helps, the iterate is
/// kept, so the objective never increases.
pub fn train_linear(
    target: impl Into<NodeId>,
    positives: &[Vec<f64>],
    negatives: &[Vec<f64>],
    config: &HingeConfig,
) -> Result<LinearModel> {
    train_linear_traced(target, positives, negatives, config).map(|t| t.model)
}

pub fn train_linear_traced(
    target: impl Into<NodeId>,
    positives: &[Vec<f64>],
    negatives: &[Vec<f64>],
    config: &HingeConfig,
) -> Result<TrainingTrace> {
    if positives.is_empty() {
        return Err(Error::Empty("positive frames"));
    }
    if negatives.is_empty() {
        return Err(Error::Empty("negative frames"));
    }
    let dim = positives[0].len();
    for x in positives.iter().chain(negatives) {
        if x.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                actual: x.len(),
            });
        }
        check_finite(x, "training frame")?;
    }

    let problem = HingeProblem {
        samples: positives
            .iter()
            .map(|x| (x.as_slice(), 1.0))
            .chain(negatives.iter().map(|x| (x.as_slice(), -1.0)))
            .collect(),
        lambda: config.lambda,
    };

    let mut w = vec![0.0; dim];
    let mut b = 0.0;
    let mut current = problem.objective(&w, b);
    let mut objective = vec![current];

    for t in 1..=config.iterations {
        let (gw, gb) = problem.subgradient(&w, b);
        let mut eta = config.step / t as f64;
        for _ in 0..MAX_BACKTRACK {
            let cw: Vec<f64> = w.iter().zip(&gw).map(|(wi, g)| wi - eta * g).collect();
            let cb = b - eta * gb;
            let candidate = problem.objective(&cw, cb);
            if candidate <= current {
                w = cw;
                b = cb;
                current = candidate;
                break;
            }
            eta *= 0.5;
        }
        objective.push(current);
    }

    Ok(TrainingTrace {
        model: LinearModel::new(target, w, b),
        objective,
    })
}

/// Draws as many negative videos as the concept has positives, from concepts
/// attached to other events. Videos that also appear under any concept of the
/// same event are never drawn.
pub fn sample_negatives(
    concept: &str,
    tree: &OntologyTree,
    corpus: &ConceptVideos,
    seed: u64,
) -> Result<Vec<String>> {
    let event = &tree.event_of(concept)?.id;
    let needed = corpus.videos(concept).len();

    let mut same_event: HashSet<&str> = HashSet::new();
    let mut others: BTreeSet<&str> = BTreeSet::new();
    for (cid, videos) in &corpus.0 {
        let owner = &tree.event_of(cid.as_str())?.id;
        let ids = videos.iter().map(String::as_str);
        if owner == event {
            same_event.extend(ids);
        } else {
            others.extend(ids);
        }
    }
    let pool: Vec<&str> = others
        .into_iter()
        .filter(|v| !same_event.contains(v))
        .collect();
    if pool.len() < needed {
        return Err(Error::InsufficientNegatives {
            concept: concept.into(),
            needed,
            available: pool.len(),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(pool
        .choose_multiple(&mut rng, needed)
        .map(|v| v.to_string())
        .collect())
}

/// One hinge model per concept listed in `labels`, in id order. Positives are
/// every frame of the concept's videos; negatives every frame of the sampled
/// negative videos. Concept `i` samples with `seed + i`.
pub fn train_concept_models(
    tree: &OntologyTree,
    labels: &ConceptVideos,
    features: &[VideoFeatures],
    config: &HingeConfig,
    seed: u64,
) -> Result<Vec<LinearModel>> {
    labels.validate(tree)?;
    let frames: BTreeMap<&str, &[Vec<f64>]> = features
        .iter()
        .map(|v| (v.video_id.as_str(), v.frames.as_slice()))
        .collect();
    let gather = |videos: &[String]| -> Result<Vec<Vec<f64>>> {
        let mut out = Vec::new();
        for v in videos {
            let f = frames
                .get(v.as_str())
                .ok_or_else(|| Error::UnknownVideo(v.clone()))?;
            out.extend(f.iter().cloned());
        }
        Ok(out)
    };
    labels
        .0
        .iter()
        .enumerate()
        .map(|(i, (concept, videos))| {
            let negatives =
                sample_negatives(concept.as_str(), tree, labels, seed.wrapping_add(i as u64))?;
            train_linear(
                concept.clone(),
                &gather(videos)?,
                &gather(&negatives)?,
                config,
            )
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitRatios {
    pub train: f64,
    pub validation: f64,
    pub test: f64,
}

impl Default for SplitRatios {
    fn default() -> Self {
        Self {
            train: 0.7,
            validation: 0.1,
            test: 0.2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct EventSplit {
    pub train: Vec<String>,
    pub validation: Vec<String>,
    pub test: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct DatasetSplit {
    pub events: BTreeMap<NodeId, EventSplit>,
}

impl DatasetSplit {
    fn collect(&self, pick: impl Fn(&EventSplit) -> &Vec<String>) -> BTreeSet<String> {
        self.events
            .values()
            .flat_map(|s| pick(s).iter().cloned())
            .collect()
    }

    pub fn train(&self) -> BTreeSet<String> {
        self.collect(|s| &s.train)
    }

    pub fn validation(&self) -> BTreeSet<String> {
        self.collect(|s| &s.validation)
    }

    pub fn test(&self) -> BTreeSet<String> {
        self.collect(|s| &s.test)
    }
}

/// Per-event count for a ratio, floored.
fn floor_share(n: usize, ratio: f64) -> usize {
    (n as f64 * ratio + 1e-9).floor() as usize
}

/// Stratified split: per event, validation and test take the floor of their
/// share and train takes the remainder.
pub fn split_dataset(
    videos: &BTreeMap<NodeId, Vec<String>>,
    ratios: SplitRatios,
    seed: u64,
    min_per_event: usize,
) -> Result<DatasetSplit> {
    let sum = ratios.train + ratios.validation + ratios.test;
    if (sum - 1.0).abs() > 1e-9
        || [ratios.train, ratios.validation, ratios.test]
            .iter()
            .any(|r| *r < 0.0)
    {
        return Err(Error::invalid(format!(
            "split ratios must be non-negative and sum to 1, got {sum}"
        )));
    }
    let mut seen = HashSet::new();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut events = BTreeMap::new();
    for (event, ids) in videos {
        if ids.len() < min_per_event {
            return Err(Error::invalid(format!(
                "event `{event}` has {} videos, below the minimum {min_per_event}",
                ids.len()
            )));
        }
        let mut ids = ids.clone();
        ids.sort();
        for v in &ids {
            if !seen.insert(v.clone()) {
                return Err(Error::invalid(format!(
                    "video `{v}` appears more than once"
                )));
            }
        }
        ids.shuffle(&mut rng);
        let n_val = floor_share(ids.len(), ratios.validation);
        let n_test = floor_share(ids.len(), ratios.test);
        let test = ids.split_off(ids.len() - n_test);
        let validation = ids.split_off(ids.len() - n_val);
        events.insert(
            event.clone(),
            EventSplit {
                train: ids,
                validation,
                test,
            },
        );
    }
    Ok(DatasetSplit { events })
}

/// Frames of one video.
#[derive(Debug, Clone, PartialEq)]
pub struct VideoFeatures {
    pub video_id: String,
    pub frames: Vec<Vec<f64>>,
}

/// Text feature file: per video a header line `<video_id> <frame_count> <D>`
/// followed by `frame_count` lines of `D` whitespace-separated values.
pub fn parse_features(text: &str) -> Result<Vec<VideoFeatures>> {
    let mut lines = text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty() && !l.starts_with('#'));
    let mut out = Vec::new();
    let mut dim_seen: Option<usize> = None;
    while let Some((hl, header)) = lines.next() {
        let parts: Vec<&str> = header.split_whitespace().collect();
        let bad_header = || Error::Parse {
            line: hl + 1,
            message: format!("expected `<video_id> <frame_count> <D>`, found `{header}`"),
        };
        let [id, count, dim] = parts.as_slice() else {
            return Err(bad_header());
        };
        let count: usize = count.parse().map_err(|_| bad_header())?;
        let dim: usize = dim.parse().map_err(|_| bad_header())?;
        if let Some(d) = dim_seen {
            if d != dim {
                return Err(Error::Parse {
                    line: hl + 1,
                    message: format!("dimension {dim} differs from earlier {d}"),
                });
            }
        }
        dim_seen = Some(dim);
        let mut frames = Vec::with_capacity(count);
        for _ in 0..count {
            let (fl, row) = lines.next().ok_or(Error::Parse {
                line: hl + 1,
                message: format!("video `{id}` declares {count} frames but the file ends early"),
            })?;
            let values = row
                .split_whitespace()
                .map(str::parse::<f64>)
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|e| Error::Parse {
                    line: fl + 1,
                    message: e.to_string(),
                })?;
            if values.len() != dim {
                return Err(Error::Parse {
                    line: fl + 1,
                    message: format!("expected {dim} values, found {}", values.len()),
                });
            }
            frames.push(values);
        }
        out.push(VideoFeatures {
            video_id: id.to_string(),
            frames,
        });
    }
    Ok(out)
}

pub fn load_features(path: impl AsRef<Path>) -> Result<Vec<VideoFeatures>> {
    parse_features(&read_file(path.as_ref())?)
}

pub fn features_to_document(videos: &[VideoFeatures]) -> String {
    let mut out = String::new();
    for v in videos {
        let dim = v.frames.first().map_or(0, Vec::len);
        writeln!(out, "{} {} {}", v.video_id, v.frames.len(), dim).unwrap();
        for f in &v.frames {
            let row: Vec<String> = f.iter().map(|x| x.to_string()).collect();
            writeln!(out, "{}", row.join(" ")).unwrap();
        }
    }
    out
}
