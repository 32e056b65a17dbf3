//! Phrase-level similarity between short texts.
//!
//! Two backends ship by default. [`OverlapBackend`] scores the IDF-weighted
//! cosine between token sets, with IDF computed over every node name in the
//! ontology. [`EmbeddingBackend`] mean-pools word vectors from a table and
//! maps their cosine to `[0, 1]` via `(1 + cos) / 2`.

use std::collections::{BTreeSet, HashMap};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{read_file, Error, Result};
use crate::ontology::OntologyTree;

/// Bump when [`STOPWORDS`] changes: tokenization feeds every match result.
pub const STOPWORDS_VERSION: u32 = 1;

/// Sorted, so lookups can binary search.
pub const STOPWORDS: &[&str] = &[
    "a",
    "about",
    "above",
    "after",
    "again",
    "against",
    "all",
    "am",
    "an",
    "and",
    "any",
    "are",
    "as",
    "at",
    "be",
    "because",
    "been",
    "before",
    "being",
    "below",
    "between",
    "both",
    "but",
    "by",
    "can",
    "did",
    "do",
    "does",
    "doing",
    "down",
    "during",
    "each",
    "few",
    "for",
    "from",
    "further",
    "had",
    "has",
    "have",
    "having",
    "he",
    "her",
    "here",
    "hers",
    "herself",
    "him",
    "himself",
    "his",
    "how",
    "i",
    "if",
    "in",
    "into",
    "is",
    "it",
    "its",
    "itself",
    "just",
    "me",
    "more",
    "most",
    "my",
    "myself",
    "no",
    "nor",
    "not",
    "now",
    "of",
    "off",
    "on",
    "once",
    "only",
    "or",
    "other",
    "our",
    "ours",
    "ourselves",
    "out",
    "over",
    "own",
    "same",
    "she",
    "should",
    "so",
    "some",
    "such",
    "than",
    "that",
    "the",
    "their",
    "theirs",
    "them",
    "themselves",
    "then",
    "there",
    "these",
    "they",
    "this",
    "those",
    "through",
    "to",
    "too",
    "under",
    "until",
    "up",
    "very",
    "was",
    "we",
    "were",
    "what",
    "when",
    "where",
    "which",
    "while",
    "who",
    "whom",
    "why",
    "will",
    "with",
    "you",
    "your",
    "yours",
    "yourself",
    "yourselves",
];

pub fn is_stopword(token: &str) -> bool {
    STOPWORDS.binary_search(&token).is_ok()
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TokenizedPhrase {
    pub tokens: Vec<String>,
}

impl TokenizedPhrase {
    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn unique(&self) -> BTreeSet<&str> {
        self.tokens.iter().map(String::as_str).collect()
    }

    pub fn joined(&self) -> String {
        self.tokens.join(" ")
    }
}

/// Splits on non-alphanumeric characters, lowercases, drops stopwords.
pub fn tokenize(text: &str) -> TokenizedPhrase {
    let tokens = text
        .split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_lowercase)
        .filter(|t| !is_stopword(t))
        .collect();
    TokenizedPhrase { tokens }
}

/// A pure, symmetric phrase similarity in `[0, 1]`.
pub trait PhraseSimilarity: Send + Sync {
    fn name(&self) -> &str;

    fn similarity(&self, a: &str, b: &str) -> f64;
}

impl<T: PhraseSimilarity + ?Sized> PhraseSimilarity for Box<T> {
    fn name(&self) -> &str {
        (**self).name()
    }

    fn similarity(&self, a: &str, b: &str) -> f64 {
        (**self).similarity(a, b)
    }
}

impl<T: PhraseSimilarity + ?Sized> PhraseSimilarity for std::sync::Arc<T> {
    fn name(&self) -> &str {
        (**self).name()
    }

    fn similarity(&self, a: &str, b: &str) -> f64 {
        (**self).similarity(a, b)
    }
}

/// IDF-weighted cosine over token sets.
#[derive(Debug, Clone)]
pub struct OverlapBackend {
    idf: HashMap<String, f64>,
    unseen_idf: f64,
}

impl OverlapBackend {
    /// IDF over the names of every node in the tree.
    pub fn from_tree(tree: &OntologyTree) -> Self {
        Self::from_documents(tree.nodes().iter().map(|n| n.name.as_str()))
    }

    /// Smoothed IDF: `ln((N + 1) / (df + 1)) + 1`, so every weight is positive.
    pub fn from_documents<'a>(docs: impl IntoIterator<Item = &'a str>) -> Self {
        let mut df: HashMap<String, usize> = HashMap::new();
        let mut n = 0usize;
        for doc in docs {
            n += 1;
            for t in tokenize(doc).unique() {
                *df.entry(t.to_string()).or_insert(0) += 1;
            }
        }
        let weight = |count: usize| ((n as f64 + 1.0) / (count as f64 + 1.0)).ln() + 1.0;
        Self {
            idf: df.into_iter().map(|(t, c)| (t, weight(c))).collect(),
            unseen_idf: weight(0),
        }
    }

    pub fn idf(&self, token: &str) -> f64 {
        self.idf.get(token).copied().unwrap_or(self.unseen_idf)
    }

    pub fn token_similarity(&self, a: &TokenizedPhrase, b: &TokenizedPhrase) -> f64 {
        if a.is_empty() || b.is_empty() {
            return 0.0;
        }
        let (sa, sb) = (a.unique(), b.unique());
        if sa == sb {
            return 1.0;
        }
        let norm = |s: &BTreeSet<&str>| s.iter().map(|t| self.idf(t).powi(2)).sum::<f64>().sqrt();
        let dot: f64 = sa.intersection(&sb).map(|t| self.idf(t).powi(2)).sum();
        (dot / (norm(&sa) * norm(&sb))).clamp(0.0, 1.0) + 0.0
    }
}

impl PhraseSimilarity for OverlapBackend {
    fn name(&self) -> &str {
        "overlap"
    }

    fn similarity(&self, a: &str, b: &str) -> f64 {
        self.token_similarity(&tokenize(a), &tokenize(b))
    }
}

/// Word vectors read from a text table:
///
/// ```text
/// D=3
/// dog 0.1 0.2 0.3
/// ```
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingTable {
    dim: usize,
    vectors: HashMap<String, Vec<f64>>,
}

impl EmbeddingTable {
    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty());
        let (_, header) = lines.next().ok_or(Error::Empty("embedding table"))?;
        let dim: usize = header
            .trim()
            .strip_prefix("D=")
            .and_then(|d| d.parse().ok())
            .filter(|&d| d > 0)
            .ok_or_else(|| Error::Parse {
                line: 1,
                message: format!("expected header `D=<int>`, found `{header}`"),
            })?;

        let mut vectors = HashMap::new();
        for (i, line) in lines {
            let mut fields = line.split_whitespace();
            let word = fields.next().expect("line is non-blank").to_lowercase();
            let values = fields
                .map(|v| v.parse::<f64>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|e| Error::Parse {
                    line: i + 1,
                    message: e.to_string(),
                })?;
            if values.len() != dim {
                return Err(Error::Parse {
                    line: i + 1,
                    message: format!("expected {dim} values, found {}", values.len()),
                });
            }
            if values.iter().any(|v| !v.is_finite()) {
                return Err(Error::Parse {
                    line: i + 1,
                    message: "non-finite value".into(),
                });
            }
            vectors.insert(word, values);
        }
        Ok(Self { dim, vectors })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::parse(&read_file(path.as_ref())?)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, word: &str) -> Option<&[f64]> {
        self.vectors.get(word).map(Vec::as_slice)
    }

    /// Mean of token vectors; unknown tokens count as zero vectors.
    pub fn mean_pool(&self, phrase: &TokenizedPhrase) -> Vec<f64> {
        let mut acc = vec![0.0; self.dim];
        if phrase.is_empty() {
            return acc;
        }
        for t in &phrase.tokens {
            if let Some(v) = self.get(t) {
                acc.iter_mut().zip(v).for_each(|(a, x)| *a += x);
            }
        }
        let n = phrase.len() as f64;
        acc.iter_mut().for_each(|a| *a /= n);
        acc
    }
}

#[derive(Debug, Clone)]
pub struct EmbeddingBackend {
    table: EmbeddingTable,
}

impl EmbeddingBackend {
    pub fn new(table: EmbeddingTable) -> Self {
        Self { table }
    }

    pub fn table(&self) -> &EmbeddingTable {
        &self.table
    }
}

impl PhraseSimilarity for EmbeddingBackend {
    fn name(&self) -> &str {
        "embedding"
    }

    fn similarity(&self, a: &str, b: &str) -> f64 {
        let (ta, tb) = (tokenize(a), tokenize(b));
        if ta.is_empty() || tb.is_empty() {
            return 0.0;
        }
        if ta == tb {
            return 1.0;
        }
        let (va, vb) = (self.table.mean_pool(&ta), self.table.mean_pool(&tb));
        let dot: f64 = va.iter().zip(&vb).map(|(x, y)| x * y).sum();
        let na = va.iter().map(|x| x * x).sum::<f64>().sqrt();
        let nb = vb.iter().map(|x| x * x).sum::<f64>().sqrt();
        // Zero vectors count as orthogonal.
        let cos = if na == 0.0 || nb == 0.0 {
            0.0
        } else {
            (dot / (na * nb)).clamp(-1.0, 1.0)
        };
        (1.0 + cos) / 2.0
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum BackendConfig {
    /// IDF-weighted overlap cosine.
    #[default]
    Overlap,
    /// Mean-pooled word vectors from a table file.
    Embedding { path: PathBuf },
}

impl BackendConfig {
    /// `name` is `overlap` or `embedding`; the latter needs a table path.
    pub fn from_name(name: &str, table: Option<PathBuf>) -> Result<Self> {
        match (name, table) {
            ("overlap", _) => Ok(BackendConfig::Overlap),
            ("embedding", Some(path)) => Ok(BackendConfig::Embedding { path }),
            ("embedding", None) => Err(Error::BackendNotConfigured(
                "the embedding backend needs a table path".into(),
            )),
            (other, _) => Err(Error::BackendNotConfigured(format!(
                "unknown backend `{other}`"
            ))),
        }
    }

    pub fn build(&self, tree: &OntologyTree) -> Result<Box<dyn PhraseSimilarity>> {
        Ok(match self {
            BackendConfig::Overlap => Box::new(OverlapBackend::from_tree(tree)),
            BackendConfig::Embedding { path } => {
                Box::new(EmbeddingBackend::new(EmbeddingTable::load(path)?))
            }
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ontology::OntologyBuilder;
    use proptest::prelude::*;

    fn words(ws: &[&str]) -> Vec<String> {
        ws.iter().map(|w| w.to_string()).collect()
    }

    #[test]
    fn stopwords_are_sorted() {
        assert!(STOPWORDS.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn tokenize_examples() {
        assert_eq!(
            tokenize("Landing a Fish").tokens,
            words(&["landing", "fish"])
        );
        assert!(tokenize("").is_empty());
        assert_eq!(
            tokenize("wedding-shower!!").tokens,
            words(&["wedding", "shower"])
        );
        assert_eq!(
            tokenize("Working on a Woodworking Project").tokens,
            words(&["working", "woodworking", "project"])
        );
    }

    fn dog_backend() -> OverlapBackend {
        let tree = OntologyBuilder::new("root", "root")
            .category("pets", "pets and animals", "root")
            .event("feed", "feed a dog", "pets")
            .event("groom", "groom a dog", "pets")
            .concept("feed.dog", "dog", "feed")
            .concept("feed.bowl", "bowl", "feed")
            .concept("groom.dog", "dog", "groom")
            .concept("groom.brush", "brush", "groom")
            .build()
            .unwrap();
        OverlapBackend::from_tree(&tree)
    }

    #[test]
    fn overlap_basics() {
        let b = dog_backend();
        assert_eq!(b.similarity("grooming a dog", "grooming a dog"), 1.0);
        assert_eq!(b.similarity("parade", "bake cake"), 0.0);
        assert_eq!(b.similarity("", "dog"), 0.0);
    }

    #[test]
    fn overlap_matches_hand_computed_cosine() {
        // 8 node names: root, pets and animals, feed a dog, groom a dog, dog, bowl,
        // dog, brush. df(dog) = 4, df(feed) = df(groom) = 1.
        let n = 8.0f64;
        let idf = |df: f64| ((n + 1.0) / (df + 1.0)).ln() + 1.0;
        let (dog, feed, groom) = (idf(4.0), idf(1.0), idf(1.0));
        let expected =
            dog * dog / ((feed * feed + dog * dog).sqrt() * (groom * groom + dog * dog).sqrt());
        let got = dog_backend().similarity("feed a dog", "groom a dog");
        assert!((got - expected).abs() < 1e-15, "{got} vs {expected}");
    }

    #[test]
    fn embedding_table_parsing() {
        let table = EmbeddingTable::parse("D=2\ndog 1 0\ncat 0 1\n").unwrap();
        assert_eq!(table.dim(), 2);
        assert!(EmbeddingTable::parse("dog 1 0\n").is_err());
        assert!(matches!(
            EmbeddingTable::parse("D=2\ndog 1\n"),
            Err(Error::Parse { line: 2, .. })
        ));
        let b = EmbeddingBackend::new(table);
        assert_eq!(b.similarity("dog", "cat"), 0.5);
        assert_eq!(b.similarity("a dog", "dog"), 1.0);
        // unknown words are zero vectors, not errors
        assert_eq!(b.similarity("zebra", "cat"), 0.5);
        assert_eq!(b.similarity("zebra", "zebra"), 1.0);
        let pooled = b.table().mean_pool(&tokenize("dog zebra"));
        assert_eq!(pooled, vec![0.5, 0.0]);
    }

    #[test]
    fn backend_config() {
        assert!(matches!(
            BackendConfig::from_name("embedding", None),
            Err(Error::BackendNotConfigured(_))
        ));
        assert!(matches!(
            BackendConfig::from_name("wordnet", None),
            Err(Error::BackendNotConfigured(_))
        ));
        assert_eq!(
            BackendConfig::from_name("overlap", None).unwrap(),
            BackendConfig::Overlap
        );
    }

    #[test]
    fn unrelated_token_shift_stays_within_its_idf_mass() {
        let b = dog_backend();
        let pairs = [
            ("feed dog", "groom dog"),
            ("feed dog bowl", "dog"),
            ("brush", "groom brush"),
        ];
        let extra = "zeppelin";
        let w = b.idf(extra).powi(2);
        for (x, y) in pairs {
            let norm = |p: &str| {
                tokenize(p)
                    .unique()
                    .iter()
                    .map(|t| b.idf(t).powi(2))
                    .sum::<f64>()
                    .sqrt()
            };
            let base = b.similarity(x, y);
            let shifted = b.similarity(&format!("{x} {extra}"), &format!("{y} {extra}"));
            let delta = shifted - base;
            assert!(delta >= 0.0, "{x} / {y}: {delta}");
            assert!(delta <= w / (norm(x) * norm(y)), "{x} / {y}: {delta}");
        }
    }

    fn phrase() -> impl Strategy<Value = String> {
        prop::collection::vec(
            prop::sample::select(vec![
                "dog", "feed", "a", "groom", "brush", "bowl", "the", "zebra", "Wedding", "shower!",
            ]),
            0..5,
        )
        .prop_map(|ws| ws.join(" "))
    }

    proptest! {
        #[test]
        fn overlap_is_symmetric_and_bounded(a in phrase(), b in phrase()) {
            let backend = dog_backend();
            let ab = backend.similarity(&a, &b);
            prop_assert_eq!(ab, backend.similarity(&b, &a));
            prop_assert!((0.0..=1.0).contains(&ab));
            if !tokenize(&a).is_empty() {
                prop_assert_eq!(backend.similarity(&a, &a), 1.0);
            }
        }

        #[test]
        fn embedding_is_symmetric_and_bounded(a in phrase(), b in phrase()) {
            let table = EmbeddingTable::parse("D=3\ndog 1 0 0.5\nfeed 0 1 0\ngroom -1 0.2 0\nbrush 0.3 -0.4 1\nwedding 2 2 2\n").unwrap();
            let backend = EmbeddingBackend::new(table);
            let ab = backend.similarity(&a, &b);
            prop_assert_eq!(ab, backend.similarity(&b, &a));
            prop_assert!((0.0..=1.0).contains(&ab));
            if !tokenize(&a).is_empty() {
                prop_assert_eq!(backend.similarity(&a, &a), 1.0);
            }
        }
    }
}
