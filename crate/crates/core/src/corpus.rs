//! Videos × concepts score matrices and their on-disk formats.
//!
//! Text format, fields separated by tabs (shown as `\t`), checksum over every
//! byte after the first line:
//!
//! ```text
//! #eventnet-scores v1 sha256=<64 hex digits>
//! video_id\t<concept id>\t<concept id>\t...
//! <video id>\t<score>\t<score>\t...
//! ```
//!
//! Binary format, little-endian: magic `ENSM`, `u32` version, `u32` concept
//! count, `u32` video count, the concept ids, then per video its id followed
//! by one `f64` per concept. Strings are a `u32` byte length plus UTF-8 bytes.
//! A trailing 32-byte SHA-256 covers everything before it.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

use sha2::{Digest, Sha256};

use crate::error::{read_file, Error, Result};
use crate::ontology::{NodeId, OntologyTree};

const TEXT_MAGIC: &str = "#eventnet-scores v1";
const BINARY_MAGIC: &[u8; 4] = b"ENSM";
const BINARY_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct ScoreVector {
    pub video_id: String,
    pub scores: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScoreMatrix {
    concepts: Vec<NodeId>,
    column: HashMap<NodeId, usize>,
    rows: Vec<ScoreVector>,
    row_index: HashMap<String, usize>,
}

impl ScoreMatrix {
    pub fn new(concepts: Vec<NodeId>, rows: Vec<ScoreVector>) -> Result<Self> {
        let mut column = HashMap::with_capacity(concepts.len());
        for (i, c) in concepts.iter().enumerate() {
            if column.insert(c.clone(), i).is_some() {
                return Err(Error::invalid(format!("duplicate concept `{c}` in header")));
            }
        }
        let mut row_index = HashMap::with_capacity(rows.len());
        for (i, r) in rows.iter().enumerate() {
            if r.scores.len() != concepts.len() {
                return Err(Error::DimensionMismatch {
                    expected: concepts.len(),
                    actual: r.scores.len(),
                });
            }
            if r.scores.iter().any(|s| !s.is_finite()) {
                return Err(Error::NonFinite("score row"));
            }
            if row_index.insert(r.video_id.clone(), i).is_some() {
                return Err(Error::invalid(format!("duplicate video `{}`", r.video_id)));
            }
        }
        Ok(Self {
            concepts,
            column,
            rows,
            row_index,
        })
    }

    pub fn concepts(&self) -> &[NodeId] {
        &self.concepts
    }

    pub fn rows(&self) -> &[ScoreVector] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn column(&self, concept: &str) -> Option<usize> {
        self.column.get(concept).copied()
    }

    pub fn row(&self, video: &str) -> Result<&ScoreVector> {
        self.row_index
            .get(video)
            .map(|&i| &self.rows[i])
            .ok_or_else(|| Error::UnknownVideo(video.to_string()))
    }

    /// Checks the header against the ontology's concepts and reorders columns
    /// into canonical id order.
    pub fn align_to(self, tree: &OntologyTree) -> Result<Self> {
        for c in &self.concepts {
            match tree.node(c.as_str()) {
                Some(n) if n.kind == crate::ontology::NodeKind::Concept => {}
                _ => return Err(Error::UnknownConcept(c.to_string())),
            }
        }
        let canonical = tree.concept_ids();
        if let Some(missing) = canonical.iter().find(|c| !self.column.contains_key(*c)) {
            return Err(Error::validation(
                missing.as_str(),
                "concept missing from score matrix header",
            ));
        }
        if canonical == self.concepts {
            return Ok(self);
        }
        let order: Vec<usize> = canonical.iter().map(|c| self.column[c]).collect();
        let rows = self
            .rows
            .into_iter()
            .map(|r| ScoreVector {
                scores: order.iter().map(|&i| r.scores[i]).collect(),
                video_id: r.video_id,
            })
            .collect();
        Self::new(canonical, rows)
    }

    fn text_body(&self) -> String {
        let mut body = String::from("video_id");
        for c in &self.concepts {
            body.push('\t');
            body.push_str(c.as_str());
        }
        body.push('\n');
        for r in &self.rows {
            body.push_str(&r.video_id);
            for s in &r.scores {
                write!(body, "\t{s}").unwrap();
            }
            body.push('\n');
        }
        body
    }

    pub fn to_text(&self) -> String {
        let body = self.text_body();
        let digest = hex::encode(Sha256::digest(body.as_bytes()));
        format!("{TEXT_MAGIC} sha256={digest}\n{body}")
    }

    pub fn parse_text(text: &str) -> Result<Self> {
        let (first, body) = text.split_once('\n').ok_or(Error::Empty("score matrix"))?;
        let declared = first
            .strip_prefix(TEXT_MAGIC)
            .and_then(|rest| rest.trim().strip_prefix("sha256="))
            .ok_or_else(|| Error::Parse {
                line: 1,
                message: format!("expected `{TEXT_MAGIC} sha256=<hex>`"),
            })?;
        let computed = hex::encode(Sha256::digest(body.as_bytes()));
        if !declared.eq_ignore_ascii_case(&computed) {
            return Err(Error::Checksum {
                declared: declared.to_string(),
                computed,
            });
        }

        let mut lines = body.lines().enumerate();
        let (_, header) = lines.next().ok_or(Error::Parse {
            line: 2,
            message: "missing concept header".into(),
        })?;
        let mut fields = header.split('\t');
        if fields.next() != Some("video_id") {
            return Err(Error::Parse {
                line: 2,
                message: "header must start with `video_id`".into(),
            });
        }
        let concepts: Vec<NodeId> = fields.map(NodeId::from).collect();

        let mut rows = Vec::new();
        for (i, line) in lines {
            if line.is_empty() {
                continue;
            }
            let mut fields = line.split('\t');
            let video_id = fields
                .next()
                .expect("split yields at least one field")
                .to_string();
            let scores = fields
                .map(str::parse::<f64>)
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|e| Error::Parse {
                    line: i + 2,
                    message: e.to_string(),
                })?;
            rows.push(ScoreVector { video_id, scores });
        }
        Self::new(concepts, rows)
    }

    pub fn to_binary(&self) -> Vec<u8> {
        fn put_str(out: &mut Vec<u8>, s: &str) {
            out.extend_from_slice(&(s.len() as u32).to_le_bytes());
            out.extend_from_slice(s.as_bytes());
        }
        let mut out = Vec::new();
        out.extend_from_slice(BINARY_MAGIC);
        out.extend_from_slice(&BINARY_VERSION.to_le_bytes());
        out.extend_from_slice(&(self.concepts.len() as u32).to_le_bytes());
        out.extend_from_slice(&(self.rows.len() as u32).to_le_bytes());
        for c in &self.concepts {
            put_str(&mut out, c.as_str());
        }
        for r in &self.rows {
            put_str(&mut out, &r.video_id);
            for s in &r.scores {
                out.extend_from_slice(&s.to_le_bytes());
            }
        }
        let digest = Sha256::digest(&out);
        out.extend_from_slice(&digest);
        out
    }

    pub fn parse_binary(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < 4 + 12 + 32 || &bytes[..4] != BINARY_MAGIC {
            return Err(Error::invalid("not a binary score matrix"));
        }
        let (payload, digest) = bytes.split_at(bytes.len() - 32);
        let computed = Sha256::digest(payload);
        if computed.as_slice() != digest {
            return Err(Error::Checksum {
                declared: hex::encode(digest),
                computed: hex::encode(computed),
            });
        }

        let mut reader = Reader {
            bytes: payload,
            pos: 4,
        };
        let version = reader.u32()?;
        if version != BINARY_VERSION {
            return Err(Error::invalid(format!("unsupported version {version}")));
        }
        let n_concepts = reader.u32()? as usize;
        let n_videos = reader.u32()? as usize;
        let concepts = (0..n_concepts)
            .map(|_| reader.string().map(NodeId::from))
            .collect::<Result<Vec<_>>>()?;
        let mut rows = Vec::with_capacity(n_videos);
        for _ in 0..n_videos {
            let video_id = reader.string()?;
            let scores = (0..n_concepts)
                .map(|_| reader.f64())
                .collect::<Result<Vec<_>>>()?;
            rows.push(ScoreVector { video_id, scores });
        }
        if reader.pos != payload.len() {
            return Err(Error::invalid("trailing bytes in binary score matrix"));
        }
        Self::new(concepts, rows)
    }

    /// Picks the format from the leading bytes.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let bytes = std::fs::read(path).map_err(|source| Error::File {
            path: path.to_path_buf(),
            source,
        })?;
        if bytes.starts_with(BINARY_MAGIC) {
            Self::parse_binary(&bytes)
        } else {
            Self::parse_text(&read_file(path)?)
        }
    }

    pub fn save_text(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_text())?;
        Ok(())
    }

    pub fn save_binary(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_binary())?;
        Ok(())
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl Reader<'_> {
    fn take(&mut self, n: usize) -> Result<&[u8]> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.bytes.len())
            .ok_or_else(|| Error::invalid("truncated binary score matrix"))?;
        let out = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(out)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn string(&mut self) -> Result<String> {
        let n = self.u32()? as usize;
        String::from_utf8(self.take(n)?.to_vec())
            .map_err(|_| Error::invalid("invalid UTF-8 in binary score matrix"))
    }
}
