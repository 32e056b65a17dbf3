//! Regenerates the files under `data/` that are derived from `data/sample.ont`.
//!
//! Usage: `cargo run -p eventnet --example gen_sample_data [DATA_DIR]`

use std::collections::BTreeMap;
use std::path::PathBuf;

use eventnet::evaluation::{queries_to_document, EvalQuery};
use eventnet::models::{features_to_document, VideoFeatures, DEFAULT_SEED};
use eventnet::ontology::{ConceptVideos, NodeId, OntologyTree};
use eventnet::synthetic::{planted_corpus, PlantedEvent};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

const FEATURE_DIM: usize = 8;

fn main() -> eventnet::Result<()> {
    let dir = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data"));
    let tree = OntologyTree::load(dir.join("sample.ont"))?;

    let plan: Vec<PlantedEvent> = tree
        .events()
        .map(|e| PlantedEvent {
            event: e.id.clone(),
            videos: 10,
            signal: tree
                .concepts_of(e.id.as_str())
                .unwrap()
                .map(|c| c.id.clone())
                .collect(),
        })
        .collect();
    let (corpus, relevant) = planted_corpus(&tree, &plan, 1.0, 0.5, DEFAULT_SEED)?;
    corpus.save_text(dir.join("sample.scores"))?;

    let mut queries: Vec<EvalQuery> = tree
        .events()
        .map(|e| EvalQuery {
            id: e.id.to_string(),
            text: e.name.clone(),
            restrict_categories: vec![tree.top_category_of(e.id.as_str()).unwrap().id.clone()],
            relevant: relevant[&e.id].clone(),
        })
        .collect();
    queries.push(EvalQuery {
        id: "q.wedding_shower".into(),
        text: "wedding shower".into(),
        restrict_categories: vec!["c.family".into()],
        relevant: relevant[&NodeId::from("e.wedding_ceremony")].clone(),
    });
    std::fs::write(
        dir.join("sample_queries.jsonl"),
        queries_to_document(&queries),
    )?;

    let mut rng = ChaCha8Rng::seed_from_u64(DEFAULT_SEED);
    let noise = Normal::new(0.0, 0.3).unwrap();
    let mut features = Vec::new();
    let mut labels = BTreeMap::new();
    for (k, e) in tree.events().enumerate() {
        let videos: Vec<String> = (0..4).map(|v| format!("{}/clip{v}", e.id)).collect();
        for v in &videos {
            let frames = (0..2)
                .map(|_| {
                    (0..FEATURE_DIM)
                        .map(|d| {
                            f64::from(u8::from((k >> (d % 4)) & 1 == 1)) + noise.sample(&mut rng)
                        })
                        .collect()
                })
                .collect();
            features.push(VideoFeatures {
                video_id: v.clone(),
                frames,
            });
        }
        for c in tree.concepts_of(e.id.as_str())? {
            labels.insert(c.id.clone(), videos.clone());
        }
    }
    std::fs::write(
        dir.join("sample_features.txt"),
        features_to_document(&features),
    )?;
    std::fs::write(
        dir.join("sample_labels.json"),
        ConceptVideos(labels).to_document(),
    )?;
    Ok(())
}
