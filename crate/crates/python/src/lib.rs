//! Python bindings for `eventnet`.
//!
//! Results that are records on the Rust side come back as plain Python
//! dicts and lists.

use std::collections::BTreeSet;
use std::path::PathBuf;

use eventnet::corpus::ScoreMatrix;
use eventnet::evaluation;
use eventnet::matching::{match_concepts, MatchQuery, MatchResult};
use eventnet::models;
use eventnet::scoring::{self, EventPredictor, Weighting};
use eventnet::similarity::OverlapBackend;
use eventnet::{Error, OntologyTree};
use pyo3::create_exception;
use pyo3::exceptions::{PyKeyError, PyOSError, PyValueError};
use pyo3::prelude::*;
use serde::Serialize;

create_exception!(pyeventnet, EventNetError, PyValueError);

fn to_py_err(e: Error) -> PyErr {
    match e {
        Error::UnknownNode(_) | Error::UnknownVideo(_) | Error::UnknownConcept(_) => {
            PyKeyError::new_err(e.to_string())
        }
        Error::File { .. } | Error::Io(_) => PyOSError::new_err(e.to_string()),
        _ => EventNetError::new_err(e.to_string()),
    }
}

fn to_python<T: Serialize>(py: Python<'_>, value: &T) -> PyResult<Py<PyAny>> {
    let text = serde_json::to_string(value).map_err(|e| EventNetError::new_err(e.to_string()))?;
    Ok(py.import("json")?.call_method1("loads", (text,))?.unbind())
}

fn parse_weighting(name: &str) -> PyResult<Weighting> {
    match name {
        "uniform" => Ok(Weighting::Uniform),
        "similarity" => Ok(Weighting::Similarity),
        other => Err(PyValueError::new_err(format!(
            "unknown weighting `{other}`"
        ))),
    }
}

/// A loaded event ontology with an overlap similarity backend.
#[pyclass(frozen)]
pub struct Ontology {
    tree: OntologyTree,
    backend: OverlapBackend,
}

impl Ontology {
    fn wrap(tree: OntologyTree) -> Self {
        let backend = OverlapBackend::from_tree(&tree);
        Self { tree, backend }
    }

    fn query(
        &self,
        text: &str,
        restrict: Option<Vec<String>>,
        events: usize,
        concepts: usize,
    ) -> Result<MatchResult, Error> {
        let q = MatchQuery::new(text)
            .restrict(restrict.unwrap_or_default())
            .events(events)
            .concepts(concepts);
        match_concepts(&self.tree, &q, &self.backend)
    }
}

#[pymethods]
impl Ontology {
    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        OntologyTree::load(path).map(Self::wrap).map_err(to_py_err)
    }

    #[staticmethod]
    fn parse(text: &str) -> PyResult<Self> {
        OntologyTree::parse(text).map(Self::wrap).map_err(to_py_err)
    }

    fn __len__(&self) -> usize {
        self.tree.len()
    }

    fn stats(&self, py: Python<'_>) -> PyResult<Py<PyAny>> {
        to_python(py, &self.tree.stats())
    }

    fn node(&self, py: Python<'_>, id: &str) -> PyResult<Py<PyAny>> {
        to_python(py, self.tree.get(id).map_err(to_py_err)?)
    }

    fn events_under(&self, categories: Vec<String>) -> PyResult<Vec<String>> {
        let ids = self.tree.events_under(&categories).map_err(to_py_err)?;
        Ok(ids.into_iter().map(|id| id.to_string()).collect())
    }

    fn to_document(&self) -> String {
        self.tree.to_document()
    }

    #[pyo3(name = "match", signature = (text, restrict=None, events=2, concepts=15))]
    fn match_query(
        &self,
        py: Python<'_>,
        text: &str,
        restrict: Option<Vec<String>>,
        events: usize,
        concepts: usize,
    ) -> PyResult<Py<PyAny>> {
        let result = self
            .query(text, restrict, events, concepts)
            .map_err(to_py_err)?;
        to_python(py, &result)
    }
}

/// Per-video concept scores aligned to an ontology.
#[pyclass(frozen)]
pub struct Corpus {
    matrix: ScoreMatrix,
}

#[pymethods]
impl Corpus {
    #[staticmethod]
    fn load(path: PathBuf, ontology: &Ontology) -> PyResult<Self> {
        let matrix = ScoreMatrix::load(path)
            .and_then(|m| m.align_to(&ontology.tree))
            .map_err(to_py_err)?;
        Ok(Self { matrix })
    }

    fn __len__(&self) -> usize {
        self.matrix.len()
    }

    fn video_ids(&self) -> Vec<String> {
        self.matrix
            .rows()
            .iter()
            .map(|r| r.video_id.clone())
            .collect()
    }

    /// Ranked `(video_id, score)` pairs for a query.
    #[pyo3(signature = (ontology, text, restrict=None, events=2, concepts=15, weighting="uniform", top=None))]
    #[allow(clippy::too_many_arguments)]
    fn retrieve(
        &self,
        ontology: &Ontology,
        text: &str,
        restrict: Option<Vec<String>>,
        events: usize,
        concepts: usize,
        weighting: &str,
        top: Option<usize>,
    ) -> PyResult<Vec<(String, f64)>> {
        let weighting = parse_weighting(weighting)?;
        let matched = ontology
            .query(text, restrict, events, concepts)
            .map_err(to_py_err)?;
        let mut ranking =
            scoring::retrieve(&self.matrix, &matched, weighting).map_err(to_py_err)?;
        if let Some(t) = top {
            ranking.truncate(t);
        }
        Ok(ranking.items.into_iter().map(|s| (s.id, s.score)).collect())
    }

    #[pyo3(signature = (ontology, video_id, top_n=5, top_events=None))]
    fn recount(
        &self,
        py: Python<'_>,
        ontology: &Ontology,
        video_id: &str,
        top_n: usize,
        top_events: Option<usize>,
    ) -> PyResult<Py<PyAny>> {
        let tree = &ontology.tree;
        let result = match top_events {
            None => scoring::recount(tree, &self.matrix, video_id, top_n),
            Some(k) => scoring::recount_two_step(
                tree,
                &self.matrix,
                video_id,
                EventPredictor::ConceptMean,
                k,
                top_n,
            ),
        }
        .map_err(to_py_err)?;
        to_python(py, &result)
    }
}

#[pyfunction]
fn average_precision(ranked: Vec<String>, relevant: BTreeSet<String>) -> PyResult<f64> {
    evaluation::average_precision(&ranked, &relevant).map_err(to_py_err)
}

#[pyfunction]
fn mean_ap(aps: Vec<f64>) -> PyResult<f64> {
    evaluation::mean_ap(&aps).map_err(to_py_err)
}

#[pyfunction]
fn expected_random_ap(n: usize, r: usize) -> PyResult<f64> {
    evaluation::expected_random_ap(n, r).map_err(to_py_err)
}

#[pyfunction]
fn top_k_accuracy(predictions: Vec<Vec<f64>>, labels: Vec<usize>, k: usize) -> PyResult<f64> {
    evaluation::top_k_accuracy(&predictions, &labels, k).map_err(to_py_err)
}

#[pyfunction]
fn softmax(logits: Vec<f64>) -> PyResult<Vec<f64>> {
    models::softmax(&logits).map_err(to_py_err)
}

#[pyfunction]
fn multinomial_loss(logits: Vec<Vec<f64>>, labels: Vec<usize>) -> PyResult<f64> {
    models::multinomial_loss(&logits, &labels).map_err(to_py_err)
}

#[pymodule]
pub fn pyeventnet(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("EventNetError", m.py().get_type::<EventNetError>())?;
    m.add_class::<Ontology>()?;
    m.add_class::<Corpus>()?;
    m.add_function(wrap_pyfunction!(average_precision, m)?)?;
    m.add_function(wrap_pyfunction!(mean_ap, m)?)?;
    m.add_function(wrap_pyfunction!(expected_random_ap, m)?)?;
    m.add_function(wrap_pyfunction!(top_k_accuracy, m)?)?;
    m.add_function(wrap_pyfunction!(softmax, m)?)?;
    m.add_function(wrap_pyfunction!(multinomial_loss, m)?)?;
    Ok(())
}
