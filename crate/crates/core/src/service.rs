//! Read-only HTTP API over a loaded ontology and score corpora.
//!
//! All state is loaded at startup and never changes. Each handler is a thin
//! adapter: [`Engine`] methods call the library and the router serializes
//! their results as JSON. Failures are `{code, message, detail}` documents.

use std::collections::BTreeMap;
use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::rejection::QueryRejection;
use axum::extract::{Path as UrlPath, Query, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::Router;
use serde::{Deserialize, Serialize};

use crate::corpus::ScoreMatrix;
use crate::error::Error;
use crate::matching::{match_concepts, MatchQuery, MatchResult};
use crate::ontology::{NodeId, NodeKind, OntologyNode, OntologyStats, OntologyTree};
use crate::ranking::RankedList;
use crate::scoring::{
    recount, recount_two_step, retrieve, EventPredictor, Recounting, Weighting, DEFAULT_RECOUNT_TOP,
};
use crate::similarity::{BackendConfig, PhraseSimilarity};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ServiceConfig {
    pub ontology: PathBuf,
    /// Corpus name → score matrix file.
    #[serde(default)]
    pub corpora: BTreeMap<String, PathBuf>,
    #[serde(default)]
    pub backend: BackendConfig,
    pub listen: SocketAddr,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ApiError {
    pub code: String,
    pub message: String,
    #[serde(default)]
    pub detail: serde_json::Value,
    #[serde(skip)]
    status: u16,
}

impl ApiError {
    fn new(status: StatusCode, code: &str, message: impl Into<String>) -> Self {
        Self {
            code: code.into(),
            message: message.into(),
            detail: serde_json::Value::Null,
            status: status.as_u16(),
        }
    }

    fn with_detail(mut self, detail: serde_json::Value) -> Self {
        self.detail = detail;
        self
    }

    pub fn status(&self) -> StatusCode {
        StatusCode::from_u16(self.status).unwrap_or(StatusCode::INTERNAL_SERVER_ERROR)
    }

    pub fn bad_request(message: impl Into<String>) -> Self {
        Self::new(StatusCode::BAD_REQUEST, "bad-request", message)
    }

    pub fn unknown_corpus(name: &str) -> Self {
        Self::new(
            StatusCode::NOT_FOUND,
            "unknown-corpus",
            format!("unknown corpus `{name}`"),
        )
        .with_detail(serde_json::json!({ "corpus": name }))
    }
}

impl From<Error> for ApiError {
    fn from(e: Error) -> Self {
        use serde_json::json;
        let message = e.to_string();
        match e {
            Error::EmptyPool { restriction } => {
                Self::new(StatusCode::BAD_REQUEST, "empty-pool", message)
                    .with_detail(json!({ "restriction": restriction }))
            }
            Error::UnknownNode(id) => Self::new(StatusCode::NOT_FOUND, "unknown-node", message)
                .with_detail(json!({ "id": id })),
            Error::WrongKind {
                id,
                expected,
                actual,
            } => Self::new(StatusCode::BAD_REQUEST, "wrong-kind", message)
                .with_detail(json!({ "id": id, "expected": expected, "actual": actual })),
            Error::UnknownConcept(id) => {
                Self::new(StatusCode::BAD_REQUEST, "unknown-concept", message)
                    .with_detail(json!({ "id": id }))
            }
            Error::UnknownVideo(id) => Self::new(StatusCode::NOT_FOUND, "unknown-video", message)
                .with_detail(json!({ "id": id })),
            Error::InvalidArgument(_) | Error::Empty(_) => Self::bad_request(message),
            _ => Self::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", message),
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let body = serde_json::to_string(&self).expect("errors serialize");
        (
            self.status(),
            [(header::CONTENT_TYPE, "application/json")],
            body,
        )
            .into_response()
    }
}

pub type ApiResult<T> = std::result::Result<T, ApiError>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Health {
    pub status: String,
    pub backend: String,
    pub stats: OntologyStats,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeView {
    pub id: NodeId,
    pub name: String,
    pub kind: NodeKind,
    /// Omitted children are reported only by count.
    pub child_count: usize,
    pub children: Vec<TreeView>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeView {
    pub node: OntologyNode,
    pub depth: usize,
    /// Ancestors from the root down to the parent.
    pub path: Vec<NodeId>,
    pub children: Vec<NodeId>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusInfo {
    pub name: String,
    pub videos: usize,
    pub concepts: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RetrieveRequest {
    pub corpus: String,
    pub query: MatchQuery,
    /// Keep only the first `top` videos.
    #[serde(default)]
    pub top: Option<usize>,
    #[serde(default)]
    pub weighting: Weighting,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RetrieveResponse {
    #[serde(rename = "match")]
    pub matched: MatchResult,
    pub ranking: RankedList,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecountRequest {
    pub corpus: String,
    pub video_id: String,
    #[serde(default = "default_recount_top")]
    pub top_n: usize,
    /// Restrict to concepts of this many predicted events.
    #[serde(default)]
    pub top_events: Option<usize>,
}

fn default_recount_top() -> usize {
    DEFAULT_RECOUNT_TOP
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TreeQuery {
    pub root: Option<NodeId>,
    pub depth: Option<usize>,
}

/// Immutable engine state shared by all requests.
pub struct Engine {
    tree: OntologyTree,
    backend: Box<dyn PhraseSimilarity>,
    corpora: BTreeMap<String, ScoreMatrix>,
}

impl Engine {
    /// Aligns every corpus to the ontology; any unknown concept fails.
    pub fn new(
        tree: OntologyTree,
        backend: Box<dyn PhraseSimilarity>,
        corpora: BTreeMap<String, ScoreMatrix>,
    ) -> crate::Result<Self> {
        let corpora = corpora
            .into_iter()
            .map(|(name, m)| Ok((name, m.align_to(&tree)?)))
            .collect::<crate::Result<_>>()?;
        Ok(Self {
            tree,
            backend,
            corpora,
        })
    }

    pub fn from_config(config: &ServiceConfig) -> crate::Result<Self> {
        let tree = OntologyTree::load(&config.ontology)?;
        let backend = config.backend.build(&tree)?;
        let corpora = config
            .corpora
            .iter()
            .map(|(name, path)| Ok((name.clone(), ScoreMatrix::load(path)?)))
            .collect::<crate::Result<_>>()?;
        Self::new(tree, backend, corpora)
    }

    pub fn tree(&self) -> &OntologyTree {
        &self.tree
    }

    pub fn backend(&self) -> &dyn PhraseSimilarity {
        self.backend.as_ref()
    }

    pub fn corpus(&self, name: &str) -> ApiResult<&ScoreMatrix> {
        self.corpora
            .get(name)
            .ok_or_else(|| ApiError::unknown_corpus(name))
    }

    pub fn health(&self) -> Health {
        Health {
            status: "ok".into(),
            backend: self.backend.name().to_string(),
            stats: self.tree.stats(),
        }
    }

    pub fn stats(&self) -> OntologyStats {
        self.tree.stats()
    }

    pub fn subtree(&self, query: &TreeQuery) -> ApiResult<TreeView> {
        let root = match &query.root {
            Some(id) => self.tree.get(id.as_str())?,
            None => self.tree.root(),
        };
        Ok(self.view(root, query.depth.unwrap_or(usize::MAX)))
    }

    fn view(&self, node: &OntologyNode, depth: usize) -> TreeView {
        let kids: Vec<&OntologyNode> = self.tree.children(node.id.as_str()).collect();
        TreeView {
            id: node.id.clone(),
            name: node.name.clone(),
            kind: node.kind,
            child_count: kids.len(),
            children: if depth == 0 {
                Vec::new()
            } else {
                kids.into_iter().map(|k| self.view(k, depth - 1)).collect()
            },
        }
    }

    pub fn node(&self, id: &str) -> ApiResult<NodeView> {
        let node = self.tree.get(id)?.clone();
        let mut path = Vec::new();
        let mut cur = self.tree.parent(id);
        while let Some(p) = cur {
            path.push(p.id.clone());
            cur = self.tree.parent(p.id.as_str());
        }
        path.reverse();
        Ok(NodeView {
            depth: self.tree.depth(id).unwrap_or(0),
            children: self.tree.children(id).map(|c| c.id.clone()).collect(),
            path,
            node,
        })
    }

    pub fn corpora(&self) -> Vec<CorpusInfo> {
        self.corpora
            .iter()
            .map(|(name, m)| CorpusInfo {
                name: name.clone(),
                videos: m.len(),
                concepts: m.concepts().len(),
            })
            .collect()
    }

    pub fn match_query(&self, query: &MatchQuery) -> ApiResult<MatchResult> {
        Ok(match_concepts(&self.tree, query, self.backend.as_ref())?)
    }

    pub fn retrieve(&self, req: &RetrieveRequest) -> ApiResult<RetrieveResponse> {
        let corpus = self.corpus(&req.corpus)?;
        let matched = self.match_query(&req.query)?;
        let mut ranking = retrieve(corpus, &matched, req.weighting)?;
        if let Some(top) = req.top {
            ranking.truncate(top);
        }
        Ok(RetrieveResponse { matched, ranking })
    }

    pub fn recount(&self, req: &RecountRequest) -> ApiResult<Recounting> {
        let corpus = self.corpus(&req.corpus)?;
        Ok(match req.top_events {
            None => recount(&self.tree, corpus, &req.video_id, req.top_n)?,
            Some(k) => recount_two_step(
                &self.tree,
                corpus,
                &req.video_id,
                EventPredictor::ConceptMean,
                k,
                req.top_n,
            )?,
        })
    }
}

fn json<T: Serialize>(value: ApiResult<T>) -> Response {
    match value {
        Ok(v) => {
            let body = serde_json::to_string(&v).expect("responses serialize");
            ([(header::CONTENT_TYPE, "application/json")], body).into_response()
        }
        Err(e) => e.into_response(),
    }
}

fn parse_body<T: for<'de> Deserialize<'de>>(body: &[u8]) -> ApiResult<T> {
    serde_json::from_slice(body)
        .map_err(|e| ApiError::bad_request(format!("invalid request body: {e}")))
}

type Shared = Arc<Engine>;

async fn health(State(e): State<Shared>) -> Response {
    json(Ok(e.health()))
}

async fn stats(State(e): State<Shared>) -> Response {
    json(Ok(e.stats()))
}

async fn tree(
    State(e): State<Shared>,
    q: std::result::Result<Query<TreeQuery>, QueryRejection>,
) -> Response {
    match q {
        Ok(Query(q)) => json(e.subtree(&q)),
        Err(r) => json::<()>(Err(ApiError::bad_request(r.body_text()))),
    }
}

async fn node(State(e): State<Shared>, UrlPath(id): UrlPath<String>) -> Response {
    json(e.node(&id))
}

async fn corpora(State(e): State<Shared>) -> Response {
    json(Ok(e.corpora()))
}

async fn do_match(State(e): State<Shared>, body: Bytes) -> Response {
    json(parse_body(&body).and_then(|q| e.match_query(&q)))
}

async fn do_retrieve(State(e): State<Shared>, body: Bytes) -> Response {
    json(parse_body(&body).and_then(|r| e.retrieve(&r)))
}

async fn do_recount(State(e): State<Shared>, body: Bytes) -> Response {
    json(parse_body(&body).and_then(|r| e.recount(&r)))
}

async fn not_found() -> Response {
    ApiError::new(StatusCode::NOT_FOUND, "not-found", "no such endpoint").into_response()
}

pub fn router(engine: Shared) -> Router {
    Router::new()
        .route("/health", get(health))
        .route("/ontology/stats", get(stats))
        .route("/ontology/tree", get(tree))
        .route("/ontology/node/{id}", get(node))
        .route("/corpora", get(corpora))
        .route("/match", post(do_match))
        .route("/retrieve", post(do_retrieve))
        .route("/recount", post(do_recount))
        .fallback(not_found)
        .with_state(engine)
}

/// Serves until the future resolves.
pub async fn serve_with_shutdown(
    engine: Shared,
    listener: tokio::net::TcpListener,
    shutdown: impl std::future::Future<Output = ()> + Send + 'static,
) -> std::io::Result<()> {
    axum::serve(listener, router(engine))
        .with_graceful_shutdown(shutdown)
        .await
}

/// Loads everything, binds, and serves until Ctrl-C.
pub fn serve(config: &ServiceConfig) -> crate::Result<()> {
    let engine = Arc::new(Engine::from_config(config)?);
    let runtime = tokio::runtime::Builder::new_multi_thread()
        .enable_all()
        .build()?;
    runtime.block_on(async {
        let listener = tokio::net::TcpListener::bind(config.listen).await?;
        log::info!("listening on {}", listener.local_addr()?);
        serve_with_shutdown(engine, listener, async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
    })?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::ScoreVector;
    use crate::ontology::OntologyBuilder;
    use crate::similarity::OverlapBackend;

    fn engine() -> Engine {
        let tree = OntologyBuilder::new("root", "root")
            .category("family", "family life", "root")
            .category("empty", "nothing here", "root")
            .event("e.wed", "wedding ceremony", "family")
            .concept("c.ring", "wedding ring", "e.wed")
            .build()
            .unwrap();
        let backend = Box::new(OverlapBackend::from_tree(&tree));
        let corpus = ScoreMatrix::new(
            vec!["c.ring".into()],
            vec![ScoreVector {
                video_id: "v1".into(),
                scores: vec![0.5],
            }],
        )
        .unwrap();
        Engine::new(
            tree,
            backend,
            BTreeMap::from([("main".to_string(), corpus)]),
        )
        .unwrap()
    }

    #[test]
    fn error_codes() {
        let e = engine();
        let err = e
            .match_query(&MatchQuery::new("x").restrict(["empty"]))
            .unwrap_err();
        assert_eq!(err.code, "empty-pool");
        assert_eq!(err.status(), StatusCode::BAD_REQUEST);
        let err = e.node("nope").unwrap_err();
        assert_eq!(err.code, "unknown-node");
        let req = RecountRequest {
            corpus: "other".into(),
            video_id: "v1".into(),
            top_n: 5,
            top_events: None,
        };
        assert_eq!(e.recount(&req).unwrap_err().code, "unknown-corpus");
    }

    #[test]
    fn tree_depth_limits_children() {
        let e = engine();
        let full = e.subtree(&TreeQuery::default()).unwrap();
        assert_eq!(full.children.len(), 2);
        let shallow = e
            .subtree(&TreeQuery {
                root: None,
                depth: Some(0),
            })
            .unwrap();
        assert!(shallow.children.is_empty());
        assert_eq!(shallow.child_count, 2);
        let node = e.node("c.ring").unwrap();
        assert_eq!(
            node.path,
            vec![NodeId::from("root"), "family".into(), "e.wed".into()]
        );
    }

    #[test]
    fn unknown_corpus_concept_fails_startup() {
        let tree = OntologyBuilder::new("root", "root")
            .event("e", "e", "root")
            .concept("c", "c", "e")
            .build()
            .unwrap();
        let bad = ScoreMatrix::new(vec!["c".into(), "ghost".into()], vec![]).unwrap();
        let backend = Box::new(OverlapBackend::from_tree(&tree));
        let err = Engine::new(tree, backend, BTreeMap::from([("x".to_string(), bad)]))
            .err()
            .unwrap();
        assert!(err.to_string().contains("ghost"));
    }
}
