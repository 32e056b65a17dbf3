#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};
use std::io::{Read, Write};
use std::net::{SocketAddr, TcpStream};
use std::path::PathBuf;
use std::sync::Arc;

use eventnet::corpus::ScoreMatrix;
use eventnet::ontology::{NodeId, NodeKind, OntologyBuilder, OntologyTree};
use eventnet::service::{serve_with_shutdown, Engine};
use eventnet::similarity::OverlapBackend;
use rand::seq::IndexedRandom;
use rand::Rng;

pub const WORDS: &[&str] = &[
    "wedding", "shower", "dog", "fish", "cake", "running", "boat", "ring", "groom", "feed", "veil",
    "lake", "wood", "yarn", "plane", "a", "the",
];

pub fn data_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data")
}

pub fn sample_tree() -> OntologyTree {
    OntologyTree::load(data_dir().join("sample.ont")).expect("sample ontology loads")
}

pub fn sample_corpus(tree: &OntologyTree) -> ScoreMatrix {
    ScoreMatrix::load(data_dir().join("sample.scores"))
        .and_then(|m| m.align_to(tree))
        .expect("sample corpus loads")
}

pub fn sample_engine() -> Engine {
    let tree = sample_tree();
    let corpus = sample_corpus(&tree);
    let backend = Box::new(OverlapBackend::from_tree(&tree));
    Engine::new(
        tree,
        backend,
        BTreeMap::from([("sample".to_string(), corpus)]),
    )
    .unwrap()
}

pub fn phrase(rng: &mut impl Rng, max_words: usize) -> String {
    let n = rng.random_range(1..=max_words);
    (0..n)
        .map(|_| *WORDS.choose(rng).unwrap())
        .collect::<Vec<_>>()
        .join(" ")
}

/// Random tree: up to 8 categories nested under earlier ones, up to 12
/// events, up to 5 concepts per event, names drawn from a small word pool.
pub fn random_tree(rng: &mut impl Rng) -> OntologyTree {
    let mut b = OntologyBuilder::new("r", "root");
    let mut categories = vec!["r".to_string()];
    for i in 0..rng.random_range(0..8) {
        let parent = categories.choose(rng).unwrap().clone();
        let id = format!("c{i}");
        b.category(&id, &phrase(rng, 2), &parent);
        categories.push(id);
    }
    for e in 0..rng.random_range(1..12) {
        let parent = categories.choose(rng).unwrap().clone();
        let id = format!("e{e}");
        b.event(&id, &phrase(rng, 3), &parent);
        for c in 0..rng.random_range(0..=5) {
            b.concept(&format!("{id}.k{c}"), &phrase(rng, 3), &id);
        }
    }
    b.build().expect("random tree is valid")
}

/// Events with any of `categories` on their parent chain.
pub fn events_under_oracle(tree: &OntologyTree, categories: &[NodeId]) -> BTreeSet<NodeId> {
    let wanted: BTreeSet<&NodeId> = categories.iter().collect();
    tree.nodes()
        .iter()
        .filter(|n| n.kind == NodeKind::Event)
        .filter(|n| {
            let mut cur = n.parent.as_ref();
            while let Some(p) = cur {
                if wanted.contains(p) {
                    return true;
                }
                cur = tree.node(p.as_str()).and_then(|x| x.parent.as_ref());
            }
            false
        })
        .map(|n| n.id.clone())
        .collect()
}

/// A running server that shuts down when dropped.
pub struct TestServer {
    pub addr: SocketAddr,
    stop: Option<tokio::sync::oneshot::Sender<()>>,
    thread: Option<std::thread::JoinHandle<()>>,
}

impl TestServer {
    pub fn start(engine: Engine) -> Self {
        let (addr_tx, addr_rx) = std::sync::mpsc::channel();
        let (stop, stop_rx) = tokio::sync::oneshot::channel::<()>();
        let thread = std::thread::spawn(move || {
            let rt = tokio::runtime::Builder::new_multi_thread()
                .worker_threads(2)
                .enable_all()
                .build()
                .unwrap();
            rt.block_on(async move {
                let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
                addr_tx.send(listener.local_addr().unwrap()).unwrap();
                serve_with_shutdown(Arc::new(engine), listener, async {
                    let _ = stop_rx.await;
                })
                .await
                .unwrap();
            });
        });
        let addr = addr_rx.recv().unwrap();
        Self {
            addr,
            stop: Some(stop),
            thread: Some(thread),
        }
    }

    pub fn get(&self, path: &str) -> (u16, String) {
        http(self.addr, "GET", path, None)
    }

    pub fn post(&self, path: &str, body: &str) -> (u16, String) {
        http(self.addr, "POST", path, Some(body))
    }
}

impl Drop for TestServer {
    fn drop(&mut self) {
        if let Some(s) = self.stop.take() {
            let _ = s.send(());
        }
        if let Some(t) = self.thread.take() {
            let _ = t.join();
        }
    }
}

/// Minimal HTTP/1.1 client: one request per connection.
pub fn http(addr: SocketAddr, method: &str, path: &str, body: Option<&str>) -> (u16, String) {
    let mut stream = TcpStream::connect(addr).unwrap();
    let body = body.unwrap_or("");
    write!(
        stream,
        "{method} {path} HTTP/1.1\r\nHost: {addr}\r\nConnection: close\r\nContent-Type: application/json\r\nContent-Length: {}\r\n\r\n{body}",
        body.len()
    )
    .unwrap();
    let mut raw = Vec::new();
    stream.read_to_end(&mut raw).unwrap();
    let text = String::from_utf8(raw).unwrap();
    let (head, payload) = text
        .split_once("\r\n\r\n")
        .expect("response has a header block");
    let status: u16 = head.split(' ').nth(1).unwrap().parse().unwrap();
    let chunked = head.lines().any(|l| {
        l.to_ascii_lowercase()
            .starts_with("transfer-encoding: chunked")
    });
    let payload = if chunked {
        dechunk(payload)
    } else {
        payload.to_string()
    };
    (status, payload)
}

fn dechunk(mut s: &str) -> String {
    let mut out = String::new();
    loop {
        let (size, rest) = s.split_once("\r\n").unwrap();
        let n = usize::from_str_radix(size.trim(), 16).unwrap();
        if n == 0 {
            return out;
        }
        out.push_str(&rest[..n]);
        s = &rest[n + 2..];
    }
}
