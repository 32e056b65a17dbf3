//! The category → event → concept tree.
//!
//! Documents are JSON Lines, one node record per line:
//!
//! ```text
//! {"id":"c.root","name":"root","kind":"category","parent":null}
//! {"id":"e.fish","name":"fishing","kind":"event","parent":"c.sports"}
//! ```
//!
//! Blank lines and lines starting with `#` are ignored. Saving writes nodes
//! sorted by id, so `save(load(save(t)))` is byte-identical to `save(t)`.

use std::borrow::Borrow;
use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{read_file, Error, Result};

pub const DEFAULT_MAX_DEPTH: usize = 8;

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NodeId(String);

impl NodeId {
    pub fn new(id: impl Into<String>) -> Self {
        NodeId(id.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl Borrow<str> for NodeId {
    fn borrow(&self) -> &str {
        &self.0
    }
}

impl AsRef<str> for NodeId {
    fn as_ref(&self) -> &str {
        &self.0
    }
}

impl From<&str> for NodeId {
    fn from(s: &str) -> Self {
        NodeId(s.to_string())
    }
}

impl From<String> for NodeId {
    fn from(s: String) -> Self {
        NodeId(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NodeKind {
    Category,
    Event,
    Concept,
}

impl fmt::Display for NodeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            NodeKind::Category => "category",
            NodeKind::Event => "event",
            NodeKind::Concept => "concept",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OntologyNode {
    pub id: NodeId,
    pub name: String,
    pub kind: NodeKind,
    pub parent: Option<NodeId>,
}

impl OntologyNode {
    pub fn new(
        id: impl Into<NodeId>,
        name: impl Into<String>,
        kind: NodeKind,
        parent: Option<&str>,
    ) -> Self {
        Self {
            id: id.into(),
            name: name.into(),
            kind,
            parent: parent.map(NodeId::from),
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct LoadOptions {
    /// Nodes deeper than this produce a warning, not an error.
    pub max_depth: usize,
}

impl Default for LoadOptions {
    fn default() -> Self {
        Self {
            max_depth: DEFAULT_MAX_DEPTH,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OntologyStats {
    pub category_count: usize,
    pub event_count: usize,
    pub concept_count: usize,
    pub max_depth: usize,
    /// Mean number of child categories over categories that have at least one.
    pub avg_children_per_category: f64,
    /// Events under each direct child of the root. Events attached to the
    /// root itself are counted under the root id.
    pub events_per_top_category: BTreeMap<NodeId, usize>,
}

/// Immutable, validated ontology. Nodes are stored in id order, so index
/// order is also canonical id order.
#[derive(Debug, Clone)]
pub struct OntologyTree {
    nodes: Vec<OntologyNode>,
    index: HashMap<NodeId, usize>,
    parent: Vec<Option<usize>>,
    children: Vec<Vec<usize>>,
    depth: Vec<usize>,
    by_name: HashMap<String, Vec<usize>>,
    root: usize,
    warnings: Vec<String>,
}

impl PartialEq for OntologyTree {
    fn eq(&self, other: &Self) -> bool {
        self.nodes == other.nodes
    }
}

impl OntologyTree {
    pub fn from_nodes(nodes: Vec<OntologyNode>) -> Result<Self> {
        Self::from_nodes_with(nodes, LoadOptions::default())
    }

    pub fn from_nodes_with(mut nodes: Vec<OntologyNode>, options: LoadOptions) -> Result<Self> {
        if nodes.is_empty() {
            return Err(Error::validation("<document>", "ontology has no nodes"));
        }
        nodes.sort_by(|a, b| a.id.cmp(&b.id));

        let mut index = HashMap::with_capacity(nodes.len());
        for (i, node) in nodes.iter().enumerate() {
            if node.id.as_str().is_empty() {
                return Err(Error::validation("<empty>", "node id must be non-empty"));
            }
            if index.insert(node.id.clone(), i).is_some() {
                return Err(Error::validation(node.id.as_str(), "duplicate id"));
            }
        }

        let mut root = None;
        let mut parent = vec![None; nodes.len()];
        for (i, node) in nodes.iter().enumerate() {
            match &node.parent {
                None => {
                    if node.kind != NodeKind::Category {
                        return Err(Error::validation(
                            node.id.as_str(),
                            format!("root node must be a category, found {}", node.kind),
                        ));
                    }
                    if let Some(r) = root {
                        let r: &OntologyNode = &nodes[r];
                        return Err(Error::validation(
                            node.id.as_str(),
                            format!("second root (already have `{}`)", r.id),
                        ));
                    }
                    root = Some(i);
                }
                Some(p) => {
                    let p_idx = *index.get(p).ok_or_else(|| {
                        Error::validation(node.id.as_str(), format!("missing parent `{p}`"))
                    })?;
                    let parent_kind = nodes[p_idx].kind;
                    let expected = match node.kind {
                        NodeKind::Category | NodeKind::Event => NodeKind::Category,
                        NodeKind::Concept => NodeKind::Event,
                    };
                    if parent_kind != expected {
                        return Err(Error::validation(
                            node.id.as_str(),
                            format!(
                                "a {}'s parent must be a {}, but `{p}` is a {}",
                                node.kind, expected, parent_kind
                            ),
                        ));
                    }
                    parent[i] = Some(p_idx);
                }
            }
        }
        let root = root.ok_or_else(|| Error::validation("<document>", "no root node"))?;

        let mut children = vec![Vec::new(); nodes.len()];
        for (i, p) in parent.iter().enumerate() {
            if let Some(p) = p {
                children[*p].push(i);
            }
        }

        // Everything must hang off the root; anything left over sits on a cycle.
        let mut depth = vec![usize::MAX; nodes.len()];
        depth[root] = 0;
        let mut queue = VecDeque::from([root]);
        while let Some(n) = queue.pop_front() {
            for &c in &children[n] {
                depth[c] = depth[n] + 1;
                queue.push_back(c);
            }
        }
        if let Some(i) = depth.iter().position(|&d| d == usize::MAX) {
            return Err(Error::validation(
                nodes[i].id.as_str(),
                "cycle: node is not reachable from the root",
            ));
        }

        let warnings = nodes
            .iter()
            .zip(&depth)
            .filter(|(_, &d)| d > options.max_depth)
            .map(|(n, d)| {
                format!(
                    "node `{}` at depth {d} exceeds the configured maximum {}",
                    n.id, options.max_depth
                )
            })
            .collect();

        let mut by_name: HashMap<String, Vec<usize>> = HashMap::new();
        for (i, n) in nodes.iter().enumerate() {
            by_name.entry(n.name.clone()).or_default().push(i);
        }

        Ok(Self {
            nodes,
            index,
            parent,
            children,
            depth,
            by_name,
            root,
            warnings,
        })
    }

    pub fn parse(text: &str) -> Result<Self> {
        Self::parse_with(text, LoadOptions::default())
    }

    pub fn parse_with(text: &str, options: LoadOptions) -> Result<Self> {
        let mut nodes = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let node: OntologyNode = serde_json::from_str(line).map_err(|e| Error::Parse {
                line: lineno + 1,
                message: e.to_string(),
            })?;
            nodes.push(node);
        }
        Self::from_nodes_with(nodes, options)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::parse(&read_file(path.as_ref())?)
    }

    pub fn load_with(path: impl AsRef<Path>, options: LoadOptions) -> Result<Self> {
        Self::parse_with(&read_file(path.as_ref())?, options)
    }

    /// Canonical document: one record per line, ids ascending.
    pub fn to_document(&self) -> String {
        let mut out = String::new();
        for node in &self.nodes {
            out.push_str(&serde_json::to_string(node).expect("node serializes"));
            out.push('\n');
        }
        out
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_document())?;
        Ok(())
    }

    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn root(&self) -> &OntologyNode {
        &self.nodes[self.root]
    }

    /// All nodes in canonical id order.
    pub fn nodes(&self) -> &[OntologyNode] {
        &self.nodes
    }

    pub fn node(&self, id: &str) -> Option<&OntologyNode> {
        self.index.get(id).map(|&i| &self.nodes[i])
    }

    pub fn get(&self, id: &str) -> Result<&OntologyNode> {
        self.node(id).ok_or_else(|| Error::UnknownNode(id.into()))
    }

    fn expect_kind(&self, id: &str, kind: NodeKind) -> Result<usize> {
        let &i = self
            .index
            .get(id)
            .ok_or_else(|| Error::UnknownNode(id.into()))?;
        let actual = self.nodes[i].kind;
        if actual != kind {
            return Err(Error::WrongKind {
                id: id.into(),
                expected: kind,
                actual,
            });
        }
        Ok(i)
    }

    pub fn parent(&self, id: &str) -> Option<&OntologyNode> {
        let &i = self.index.get(id)?;
        self.parent[i].map(|p| &self.nodes[p])
    }

    pub fn children(&self, id: &str) -> impl Iterator<Item = &OntologyNode> {
        let kids: &[usize] = match self.index.get(id) {
            Some(&i) => &self.children[i],
            None => &[],
        };
        kids.iter().map(move |&c| &self.nodes[c])
    }

    pub fn depth(&self, id: &str) -> Option<usize> {
        self.index.get(id).map(|&i| self.depth[i])
    }

    pub fn nodes_named(&self, name: &str) -> impl Iterator<Item = &OntologyNode> {
        let hits: &[usize] = self.by_name.get(name).map(Vec::as_slice).unwrap_or(&[]);
        hits.iter().map(move |&i| &self.nodes[i])
    }

    pub fn of_kind(&self, kind: NodeKind) -> impl Iterator<Item = &OntologyNode> {
        self.nodes.iter().filter(move |n| n.kind == kind)
    }

    pub fn events(&self) -> impl Iterator<Item = &OntologyNode> {
        self.of_kind(NodeKind::Event)
    }

    /// Concepts in canonical id order, which is also the score-matrix column order.
    pub fn concepts(&self) -> impl Iterator<Item = &OntologyNode> {
        self.of_kind(NodeKind::Concept)
    }

    pub fn concept_ids(&self) -> Vec<NodeId> {
        self.concepts().map(|n| n.id.clone()).collect()
    }

    pub fn top_level_categories(&self) -> impl Iterator<Item = &OntologyNode> {
        self.children[self.root]
            .iter()
            .map(move |&i| &self.nodes[i])
            .filter(|n| n.kind == NodeKind::Category)
    }

    pub fn is_top_level(&self, id: &str) -> bool {
        self.index
            .get(id)
            .is_some_and(|&i| self.parent[i] == Some(self.root))
    }

    /// The root's child on the path to `id`; the root itself for the root and
    /// for non-category nodes attached directly to it.
    pub fn top_category_of(&self, id: &str) -> Result<&OntologyNode> {
        let &i = self
            .index
            .get(id)
            .ok_or_else(|| Error::UnknownNode(id.into()))?;
        Ok(&self.nodes[self.top_ancestor(i)])
    }

    /// Event that owns a concept.
    pub fn event_of(&self, concept: &str) -> Result<&OntologyNode> {
        let i = self.expect_kind(concept, NodeKind::Concept)?;
        Ok(&self.nodes[self.parent[i].expect("concepts always have a parent")])
    }

    pub fn concepts_of(&self, event: &str) -> Result<impl Iterator<Item = &OntologyNode>> {
        let i = self.expect_kind(event, NodeKind::Event)?;
        Ok(self.children[i].iter().map(move |&c| &self.nodes[c]))
    }

    pub fn stats(&self) -> OntologyStats {
        let count = |k| self.nodes.iter().filter(|n| n.kind == k).count();
        let (mut branching_sum, mut branching_nodes) = (0usize, 0usize);
        for (i, n) in self.nodes.iter().enumerate() {
            if n.kind != NodeKind::Category {
                continue;
            }
            let sub = self.children[i]
                .iter()
                .filter(|&&c| self.nodes[c].kind == NodeKind::Category)
                .count();
            if sub > 0 {
                branching_sum += sub;
                branching_nodes += 1;
            }
        }

        let mut events_per_top_category = BTreeMap::new();
        for (i, n) in self.nodes.iter().enumerate() {
            if n.kind == NodeKind::Event {
                let top = self.top_ancestor(i);
                *events_per_top_category
                    .entry(self.nodes[top].id.clone())
                    .or_insert(0) += 1;
            }
        }

        OntologyStats {
            category_count: count(NodeKind::Category),
            event_count: count(NodeKind::Event),
            concept_count: count(NodeKind::Concept),
            max_depth: self.depth.iter().copied().max().unwrap_or(0),
            avg_children_per_category: if branching_nodes == 0 {
                0.0
            } else {
                branching_sum as f64 / branching_nodes as f64
            },
            events_per_top_category,
        }
    }

    // The root for its direct children, otherwise the depth-1 ancestor.
    fn top_ancestor(&self, mut i: usize) -> usize {
        while let Some(p) = self.parent[i] {
            if p == self.root {
                return if self.nodes[i].kind == NodeKind::Category {
                    i
                } else {
                    p
                };
            }
            i = p;
        }
        i
    }

    fn descendants(&self, start: usize) -> impl Iterator<Item = usize> + '_ {
        let mut stack = vec![start];
        std::iter::from_fn(move || {
            let n = stack.pop()?;
            stack.extend(self.children[n].iter().rev());
            Some(n)
        })
    }

    /// Every event below any of the given categories.
    pub fn events_under<S: AsRef<str>>(&self, categories: &[S]) -> Result<BTreeSet<NodeId>> {
        let mut out = BTreeSet::new();
        for c in categories {
            let i = self.expect_kind(c.as_ref(), NodeKind::Category)?;
            out.extend(
                self.descendants(i)
                    .filter(|&d| self.nodes[d].kind == NodeKind::Event)
                    .map(|d| self.nodes[d].id.clone()),
            );
        }
        Ok(out)
    }

    /// Events on other branches than `event`: everything except events
    /// attached to the event's category, its ancestors, or its descendants.
    pub fn redundancy_candidates(&self, event: &str) -> Result<BTreeSet<NodeId>> {
        let e = self.expect_kind(event, NodeKind::Event)?;
        let home = self.parent[e].expect("events always have a parent");

        let mut excluded = vec![false; self.nodes.len()];
        let mut cur = Some(home);
        while let Some(c) = cur {
            excluded[c] = true;
            cur = self.parent[c];
        }
        for d in self.descendants(home) {
            if self.nodes[d].kind == NodeKind::Category {
                excluded[d] = true;
            }
        }

        Ok(self
            .nodes
            .iter()
            .enumerate()
            .filter(|(i, n)| {
                n.kind == NodeKind::Event
                    && *i != e
                    && !excluded[self.parent[*i].expect("events always have a parent")]
            })
            .map(|(_, n)| n.id.clone())
            .collect())
    }
}

/// Maps each concept to the videos it was discovered from.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ConceptVideos(pub BTreeMap<NodeId, Vec<String>>);

impl ConceptVideos {
    pub fn parse(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::parse(&read_file(path.as_ref())?)
    }

    pub fn to_document(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("manifest serializes");
        s.push('\n');
        s
    }

    pub fn videos(&self, concept: &str) -> &[String] {
        self.0.get(concept).map(Vec::as_slice).unwrap_or(&[])
    }

    /// Every key must be a concept of `tree`.
    pub fn validate(&self, tree: &OntologyTree) -> Result<()> {
        for id in self.0.keys() {
            tree.event_of(id.as_str())?;
        }
        Ok(())
    }
}

/// Incremental construction for code-built trees.
#[derive(Debug, Default, Clone)]
pub struct OntologyBuilder {
    nodes: Vec<OntologyNode>,
}

impl OntologyBuilder {
    pub fn new(root_id: &str, root_name: &str) -> Self {
        Self {
            nodes: vec![OntologyNode::new(
                root_id,
                root_name,
                NodeKind::Category,
                None,
            )],
        }
    }

    pub fn category(&mut self, id: &str, name: &str, parent: &str) -> &mut Self {
        self.push(id, name, NodeKind::Category, parent)
    }

    pub fn event(&mut self, id: &str, name: &str, parent: &str) -> &mut Self {
        self.push(id, name, NodeKind::Event, parent)
    }

    pub fn concept(&mut self, id: &str, name: &str, parent: &str) -> &mut Self {
        self.push(id, name, NodeKind::Concept, parent)
    }

    fn push(&mut self, id: &str, name: &str, kind: NodeKind, parent: &str) -> &mut Self {
        self.nodes
            .push(OntologyNode::new(id, name, kind, Some(parent)));
        self
    }

    pub fn build(&self) -> Result<OntologyTree> {
        OntologyTree::from_nodes(self.nodes.clone())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn minimal() -> OntologyTree {
        OntologyBuilder::new("root", "root")
            .event("e1", "feed a dog", "root")
            .concept("c1", "dog", "e1")
            .concept("c2", "bowl", "e1")
            .build()
            .unwrap()
    }

    #[test]
    fn minimal_tree_stats() {
        let stats = minimal().stats();
        assert_eq!(
            (stats.category_count, stats.event_count, stats.concept_count),
            (1, 1, 2)
        );
        assert_eq!(stats.max_depth, 2);
        assert_eq!(stats.events_per_top_category.get("root"), Some(&1));
    }

    #[test]
    fn concept_under_category_is_rejected() {
        let doc = r#"{"id":"root","name":"r","kind":"category","parent":null}
{"id":"bad","name":"dog","kind":"concept","parent":"root"}"#;
        match OntologyTree::parse(doc) {
            Err(Error::Validation { node, .. }) => assert_eq!(node, "bad"),
            other => panic!("expected validation error, got {other:?}"),
        }
    }

    #[test]
    fn duplicate_ids_are_fatal_but_duplicate_names_are_not() {
        let dup = OntologyBuilder::new("root", "r")
            .event("e", "x", "root")
            .event("e", "y", "root")
            .build();
        assert!(matches!(dup, Err(Error::Validation { node, .. }) if node == "e"));

        let same_name = OntologyBuilder::new("root", "r")
            .event("e1", "feed a dog", "root")
            .event("e2", "groom a dog", "root")
            .concept("c1", "dog", "e1")
            .concept("c2", "dog", "e2")
            .build()
            .unwrap();
        assert_eq!(same_name.nodes_named("dog").count(), 2);
    }

    #[test]
    fn missing_parent_and_cycles() {
        let missing = OntologyBuilder::new("root", "r")
            .event("e1", "x", "nowhere")
            .build();
        assert!(matches!(missing, Err(Error::Validation { node, .. }) if node == "e1"));

        let cyc = OntologyTree::from_nodes(vec![
            OntologyNode::new("root", "r", NodeKind::Category, None),
            OntologyNode::new("a", "a", NodeKind::Category, Some("b")),
            OntologyNode::new("b", "b", NodeKind::Category, Some("a")),
        ]);
        match cyc {
            Err(Error::Validation { node, reason }) => {
                assert_eq!(node, "a");
                assert!(reason.contains("cycle"));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn root_rules() {
        let two_roots = OntologyTree::from_nodes(vec![
            OntologyNode::new("r1", "r", NodeKind::Category, None),
            OntologyNode::new("r2", "r", NodeKind::Category, None),
        ]);
        assert!(matches!(two_roots, Err(Error::Validation { node, .. }) if node == "r2"));
        let event_root =
            OntologyTree::from_nodes(vec![OntologyNode::new("e", "e", NodeKind::Event, None)]);
        assert!(event_root.is_err());
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let doc = "# header\n{\"id\":\"root\",\"name\":\"r\",\"kind\":\"category\",\"parent\":null}\n{oops}\n";
        assert!(matches!(
            OntologyTree::parse(doc),
            Err(Error::Parse { line: 3, .. })
        ));
        let unknown_kind = r#"{"id":"root","name":"r","kind":"thing","parent":null}"#;
        assert!(matches!(
            OntologyTree::parse(unknown_kind),
            Err(Error::Parse { line: 1, .. })
        ));
    }

    #[test]
    fn depth_limit_is_a_warning() {
        let mut b = OntologyBuilder::new("c0", "c0");
        for d in 1..=4 {
            b.category(&format!("c{d}"), "x", &format!("c{}", d - 1));
        }
        let nodes = b.nodes.clone();
        let tree = OntologyTree::from_nodes_with(nodes, LoadOptions { max_depth: 3 }).unwrap();
        assert_eq!(tree.warnings().len(), 1);
        assert!(tree.warnings()[0].contains("c4"));
        assert!(b.build().unwrap().warnings().is_empty());
    }

    #[test]
    fn events_under_root_and_empty_leaf() {
        let tree = OntologyBuilder::new("root", "r")
            .category("a", "a", "root")
            .category("leaf", "leaf", "a")
            .event("e1", "x", "a")
            .event("e2", "y", "root")
            .build()
            .unwrap();
        let all: BTreeSet<NodeId> = tree.events().map(|n| n.id.clone()).collect();
        assert_eq!(tree.events_under(&["root"]).unwrap(), all);
        assert!(tree.events_under(&["leaf"]).unwrap().is_empty());
        assert!(matches!(
            tree.events_under(&["nope"]),
            Err(Error::UnknownNode(_))
        ));
        assert!(matches!(
            tree.events_under(&["e1"]),
            Err(Error::WrongKind { .. })
        ));
    }

    #[test]
    fn redundancy_on_a_single_branch_is_empty() {
        let tree = OntologyBuilder::new("root", "r")
            .category("a", "a", "root")
            .category("b", "b", "a")
            .event("e0", "x", "root")
            .event("e1", "x", "a")
            .event("e2", "y", "b")
            .build()
            .unwrap();
        for e in ["e0", "e1", "e2"] {
            assert!(tree.redundancy_candidates(e).unwrap().is_empty(), "{e}");
        }
    }

    #[test]
    fn redundancy_between_sibling_subtrees() {
        let tree = OntologyBuilder::new("root", "r")
            .category("a", "a", "root")
            .category("b", "b", "root")
            .event("ea", "x", "a")
            .event("eb", "y", "b")
            .build()
            .unwrap();
        let only = |id: &str| BTreeSet::from([NodeId::from(id)]);
        assert_eq!(tree.redundancy_candidates("ea").unwrap(), only("eb"));
        assert_eq!(tree.redundancy_candidates("eb").unwrap(), only("ea"));
        assert!(matches!(
            tree.redundancy_candidates("a"),
            Err(Error::WrongKind { .. })
        ));
    }

    #[test]
    fn save_is_canonical() {
        let tree = minimal();
        let doc = tree.to_document();
        let again = OntologyTree::parse(&doc).unwrap();
        assert_eq!(again, tree);
        assert_eq!(again.to_document(), doc);
        assert!(doc.lines().next().unwrap().contains("\"c1\""));
    }

    #[test]
    fn concept_videos_validate_against_tree() {
        let tree = minimal();
        let mut cv = ConceptVideos::default();
        cv.0.insert("c1".into(), vec!["v1".into()]);
        cv.validate(&tree).unwrap();
        cv.0.insert("e1".into(), vec![]);
        assert!(cv.validate(&tree).is_err());
        let back = ConceptVideos::parse(&cv.to_document()).unwrap();
        assert_eq!(back, cv);
    }
}
