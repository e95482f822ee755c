//! Extensible hierarchical label taxonomy.
//!
//! Labels live in a tree of up to four levels (level 1 at the top).
//! Novel labels are placed top-down by a [`SemanticMatcher`]: start from
//! the best-matching level-1 label, keep descending while some child
//! still relates to the query without being its duplicate, then insert
//! below the deepest match. Duplicate consolidation merges synonym and
//! spelling variants first, then function-level duplicates, keeping the
//! higher-frequency node. Label mapping loads per-image label counts and
//! induces the sub-tree of labels that actually occur.
//!
//! Names and synonyms are normalized (lowercase, trimmed, inner
//! whitespace collapsed) and must stay unique across the whole tree.

mod matcher;

pub use matcher::{
    DictionaryMatcher, LabelQuery, MatcherError, RemoteMatcher, SemanticMatcher,
};

use std::collections::{BTreeMap, BTreeSet, HashSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum TaxonomyError {
    #[error("label {0:?} already present (as a name or synonym)")]
    AlreadyPresent(String),
    #[error("unknown node id {0}")]
    UnknownNode(u32),
    #[error("invalid tree: {0}")]
    Invalid(String),
    #[error("bad taxonomy document: {0}")]
    BadDocument(String),
    #[error(transparent)]
    Matcher(#[from] MatcherError),
}

pub(crate) fn normalize(name: &str) -> String {
    name.trim()
        .to_lowercase()
        .split_whitespace()
        .collect::<Vec<_>>()
        .join(" ")
}

pub const MAX_LEVEL: u8 = 4;

/// Reserved level-1 root that absorbs labels with no semantic match.
pub const UNCLASSIFIED: &str = "unclassified";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelNode {
    pub id: u32,
    pub name: String,
    pub level: u8,
    #[serde(default)]
    pub parent: Option<u32>,
    #[serde(default)]
    pub description: String,
    #[serde(default)]
    pub synonyms: BTreeSet<String>,
    #[serde(default)]
    pub frequency: u64,
}

impl LabelNode {
    pub(crate) fn as_query(&self) -> LabelQuery {
        LabelQuery {
            name: self.name.clone(),
            description: self.description.clone(),
            synonyms: self.synonyms.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelTree {
    version: u64,
    nodes: BTreeMap<u32, LabelNode>,
    next_id: u32,
}

/// On-disk form: `{"version": .., "nodes": [{id, name, level, parent,
/// description, synonyms, frequency}, ..]}`.
#[derive(Serialize, Deserialize)]
struct TreeDoc {
    version: u64,
    nodes: Vec<LabelNode>,
}

impl Serialize for LabelTree {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        TreeDoc {
            version: self.version,
            nodes: self.nodes.values().cloned().collect(),
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for LabelTree {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let doc = TreeDoc::deserialize(deserializer)?;
        let mut nodes = BTreeMap::new();
        for node in doc.nodes {
            let id = node.id;
            if nodes.insert(id, node).is_some() {
                return Err(serde::de::Error::custom(format!("duplicate node id {id}")));
            }
        }
        let next_id = nodes.keys().max().map_or(1, |m| m + 1);
        Ok(LabelTree {
            version: doc.version,
            nodes,
            next_id,
        })
    }
}

/// Where a novel label landed.
#[derive(Debug, Clone, Serialize)]
pub struct Placement {
    pub node: u32,
    pub parent: u32,
    pub level: u8,
    pub parent_name: String,
}

/// Matcher score thresholds used by the top-down placement walk.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct MatcherThresholds {
    /// Minimum score for a child to justify descending another level.
    pub descend: f64,
    /// Minimum level-1 score; anything below lands under "unclassified".
    pub floor: f64,
}

impl Default for MatcherThresholds {
    fn default() -> Self {
        MatcherThresholds {
            descend: 0.6,
            floor: 0.3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum MergeReason {
    Synonym,
    Spelling,
    Function,
}

#[derive(Debug, Clone, Serialize)]
pub struct MergeRecord {
    pub survivor: u32,
    pub survivor_name: String,
    pub absorbed_name: String,
    pub reason: MergeReason,
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct MergeReport {
    pub merges: Vec<MergeRecord>,
    /// Duplicate pairs that could not merge without breaking the level
    /// invariant; reported, never applied.
    pub skipped: Vec<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct MappingOutcome {
    pub subtree: LabelTree,
    pub rejects: Vec<String>,
    pub accepted_total: u64,
}

impl Default for LabelTree {
    fn default() -> Self {
        Self::new()
    }
}

impl LabelTree {
    pub fn new() -> Self {
        LabelTree {
            version: 0,
            nodes: BTreeMap::new(),
            next_id: 1,
        }
    }

    /// The taxonomy shipped with the toolkit: seven top-level land-use
    /// groups with common second- and third-level labels.
    pub fn base() -> Self {
        serde_json::from_str(include_str!("../../data/base_taxonomy.json"))
            .expect("bundled taxonomy parses")
    }

    pub fn from_json(text: &str) -> Result<Self, TaxonomyError> {
        let tree: LabelTree =
            serde_json::from_str(text).map_err(|e| TaxonomyError::BadDocument(e.to_string()))?;
        tree.validate()?;
        Ok(tree)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("tree serializes")
    }

    pub fn version(&self) -> u64 {
        self.version
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn node(&self, id: u32) -> Option<&LabelNode> {
        self.nodes.get(&id)
    }

    pub fn nodes(&self) -> impl Iterator<Item = &LabelNode> {
        self.nodes.values()
    }

    pub fn roots(&self) -> Vec<u32> {
        self.nodes
            .values()
            .filter(|n| n.parent.is_none())
            .map(|n| n.id)
            .collect()
    }

    pub fn children(&self, id: u32) -> Vec<u32> {
        self.nodes
            .values()
            .filter(|n| n.parent == Some(id))
            .map(|n| n.id)
            .collect()
    }

    /// Node whose name or synonym set contains the normalized label.
    pub fn find_name(&self, name: &str) -> Option<u32> {
        let norm = normalize(name);
        self.nodes
            .values()
            .find(|n| n.name == norm || n.synonyms.contains(&norm))
            .map(|n| n.id)
    }

    pub fn add_root(&mut self, name: &str, description: &str) -> Result<u32, TaxonomyError> {
        self.insert_node(None, name, description)
    }

    pub fn add_child(
        &mut self,
        parent: u32,
        name: &str,
        description: &str,
    ) -> Result<u32, TaxonomyError> {
        if !self.nodes.contains_key(&parent) {
            return Err(TaxonomyError::UnknownNode(parent));
        }
        self.insert_node(Some(parent), name, description)
    }

    fn insert_node(
        &mut self,
        parent: Option<u32>,
        name: &str,
        description: &str,
    ) -> Result<u32, TaxonomyError> {
        let norm = normalize(name);
        if norm.is_empty() {
            return Err(TaxonomyError::Invalid("empty label name".into()));
        }
        if self.find_name(&norm).is_some() {
            return Err(TaxonomyError::AlreadyPresent(norm));
        }
        let level = match parent {
            None => 1,
            Some(p) => self.nodes[&p].level + 1,
        };
        if level > MAX_LEVEL {
            return Err(TaxonomyError::Invalid(format!(
                "insertion under level-{} node would exceed the {MAX_LEVEL}-level cap",
                level - 1
            )));
        }
        let id = self.next_id;
        self.next_id += 1;
        self.nodes.insert(
            id,
            LabelNode {
                id,
                name: norm,
                level,
                parent,
                description: description.to_string(),
                synonyms: BTreeSet::new(),
                frequency: 0,
            },
        );
        self.version += 1;
        Ok(id)
    }

    /// Full structural validation: level arithmetic, acyclicity, single
    /// root ancestry, and global name/synonym uniqueness.
    pub fn validate(&self) -> Result<(), TaxonomyError> {
        let mut seen: HashSet<&str> = HashSet::new();
        for node in self.nodes.values() {
            if node.name != normalize(&node.name) {
                return Err(TaxonomyError::Invalid(format!(
                    "name {:?} is not normalized",
                    node.name
                )));
            }
            if !seen.insert(node.name.as_str()) {
                return Err(TaxonomyError::Invalid(format!(
                    "duplicate name or synonym {:?}",
                    node.name
                )));
            }
            for syn in &node.synonyms {
                if !seen.insert(syn.as_str()) {
                    return Err(TaxonomyError::Invalid(format!(
                        "duplicate name or synonym {syn:?}"
                    )));
                }
            }
            if node.level < 1 || node.level > MAX_LEVEL {
                return Err(TaxonomyError::Invalid(format!(
                    "node {:?} has level {} outside 1..={MAX_LEVEL}",
                    node.name, node.level
                )));
            }
            match node.parent {
                None => {
                    if node.level != 1 {
                        return Err(TaxonomyError::Invalid(format!(
                            "node {:?} has no parent but level {}",
                            node.name, node.level
                        )));
                    }
                }
                Some(p) => {
                    let parent = self.nodes.get(&p).ok_or_else(|| {
                        TaxonomyError::Invalid(format!(
                            "node {:?} points at missing parent {p}",
                            node.name
                        ))
                    })?;
                    if node.level != parent.level + 1 {
                        return Err(TaxonomyError::Invalid(format!(
                            "node {:?} at level {} under parent at level {}",
                            node.name, node.level, parent.level
                        )));
                    }
                }
            }
            // Walk to a root; the level arithmetic bounds the walk, so a
            // cycle shows up as a missing or repeated ancestor.
            let mut current = node;
            let mut hops = 0;
            while let Some(p) = current.parent {
                current = self
                    .nodes
                    .get(&p)
                    .ok_or_else(|| TaxonomyError::Invalid(format!("missing ancestor {p}")))?;
                hops += 1;
                if hops > MAX_LEVEL {
                    return Err(TaxonomyError::Invalid(format!(
                        "cycle reached from node {:?}",
                        node.name
                    )));
                }
            }
        }
        Ok(())
    }

    /// Place a novel label by the top-down strategy. The label must not
    /// already exist; labels nothing matches land under "unclassified".
    pub fn include_novel_label(
        &mut self,
        name: &str,
        description: &str,
        matcher: &dyn SemanticMatcher,
        thresholds: &MatcherThresholds,
    ) -> Result<Placement, TaxonomyError> {
        let norm = normalize(name);
        if self.find_name(&norm).is_some() {
            return Err(TaxonomyError::AlreadyPresent(norm));
        }
        let query = LabelQuery {
            name: norm.clone(),
            description: description.to_string(),
            synonyms: BTreeSet::new(),
        };

        let roots = self.roots();
        let best_root = matcher.best_match(&query, self, &roots)?;
        let mut current = match best_root {
            Some((id, score)) if score >= thresholds.floor => id,
            _ => self.ensure_unclassified_root()?,
        };

        loop {
            let current_node = &self.nodes[&current];
            if current_node.level + 1 >= MAX_LEVEL {
                // A child of `current` sits at the level cap already;
                // descending further would require a level-5 insertion.
                break;
            }
            let children = self.children(current);
            if children.is_empty() {
                break;
            }
            match matcher.best_match(&query, self, &children)? {
                Some((child, score)) if score >= thresholds.descend => {
                    let child_node = &self.nodes[&child];
                    if matcher.is_duplicate(&query, &child_node.as_query())? {
                        break;
                    }
                    current = child;
                }
                _ => break,
            }
        }

        let node = self.add_child(current, &norm, description)?;
        let parent_node = &self.nodes[&current];
        Ok(Placement {
            node,
            parent: current,
            level: parent_node.level + 1,
            parent_name: parent_node.name.clone(),
        })
    }

    fn ensure_unclassified_root(&mut self) -> Result<u32, TaxonomyError> {
        if let Some(id) = self.find_name(UNCLASSIFIED) {
            return Ok(id);
        }
        self.add_root(UNCLASSIFIED, "reserved root for labels with no semantic match")
    }

    /// Merge duplicate labels: synonym/spelling pairs first, then
    /// function-level duplicates, repeating until nothing merges. The
    /// higher-frequency node survives (ties: lexicographically smaller
    /// name); the absorbed name and synonyms become survivor synonyms.
    pub fn consolidate_duplicates(
        &mut self,
        matcher: &dyn SemanticMatcher,
    ) -> Result<MergeReport, TaxonomyError> {
        let mut report = MergeReport::default();
        let mut skipped_pairs: HashSet<(u32, u32)> = HashSet::new();
        let passes = [
            &[MergeReason::Synonym, MergeReason::Spelling][..],
            &[MergeReason::Function][..],
        ];
        loop {
            let mut merged_any = false;
            for pass in passes {
                'rescan: loop {
                    let ids: Vec<u32> = self.nodes.keys().copied().collect();
                    for (ai, &a) in ids.iter().enumerate() {
                        for &b in &ids[ai + 1..] {
                            let (na, nb) = (&self.nodes[&a], &self.nodes[&b]);
                            let reason =
                                match matcher.duplicate_reason(&na.as_query(), &nb.as_query())? {
                                    Some(r) if pass.contains(&r) => r,
                                    _ => continue,
                                };
                            if na.level != nb.level {
                                if skipped_pairs.insert((a.min(b), a.max(b))) {
                                    report.skipped.push(format!(
                                        "{:?} (level {}) vs {:?} (level {}): cross-level merge would break the tree",
                                        na.name, na.level, nb.name, nb.level
                                    ));
                                }
                                continue;
                            }
                            let survivor = self.pick_survivor(a, b);
                            let absorbed = if survivor == a { b } else { a };
                            report.merges.push(self.merge_nodes(survivor, absorbed, reason));
                            merged_any = true;
                            continue 'rescan;
                        }
                    }
                    break;
                }
            }
            if !merged_any {
                break;
            }
        }
        // The revision counter records the consolidation attempt even
        // when nothing merged.
        self.version += 1;
        Ok(report)
    }

    fn pick_survivor(&self, a: u32, b: u32) -> u32 {
        let (na, nb) = (&self.nodes[&a], &self.nodes[&b]);
        match na.frequency.cmp(&nb.frequency) {
            std::cmp::Ordering::Greater => a,
            std::cmp::Ordering::Less => b,
            std::cmp::Ordering::Equal => {
                if na.name <= nb.name {
                    a
                } else {
                    b
                }
            }
        }
    }

    fn merge_nodes(&mut self, survivor: u32, absorbed: u32, reason: MergeReason) -> MergeRecord {
        let absorbed_node = self.nodes.remove(&absorbed).expect("absorbed node exists");
        let child_ids: Vec<u32> = self
            .nodes
            .values()
            .filter(|n| n.parent == Some(absorbed))
            .map(|n| n.id)
            .collect();
        for id in child_ids {
            self.nodes.get_mut(&id).expect("child exists").parent = Some(survivor);
        }
        let node = self.nodes.get_mut(&survivor).expect("survivor exists");
        node.frequency += absorbed_node.frequency;
        node.synonyms.insert(absorbed_node.name.clone());
        node.synonyms.extend(absorbed_node.synonyms);
        MergeRecord {
            survivor,
            survivor_name: node.name.clone(),
            absorbed_name: absorbed_node.name,
            reason,
        }
    }

    /// Replace all frequencies with the given per-label counts (names or
    /// synonyms) and induce the sub-tree of labels that occur, together
    /// with their ancestors. Unknown labels are rejected, not fatal.
    pub fn map_labels(&mut self, counts: &BTreeMap<String, u64>) -> MappingOutcome {
        for node in self.nodes.values_mut() {
            node.frequency = 0;
        }
        let mut rejects = Vec::new();
        let mut accepted_total = 0u64;
        for (name, &count) in counts {
            match self.find_name(name) {
                Some(id) => {
                    self.nodes.get_mut(&id).expect("resolved node").frequency += count;
                    accepted_total += count;
                }
                None => rejects.push(name.clone()),
            }
        }
        self.version += 1;

        let mut keep: BTreeSet<u32> = BTreeSet::new();
        for node in self.nodes.values() {
            if node.frequency > 0 {
                let mut current = Some(node.id);
                while let Some(id) = current {
                    if !keep.insert(id) {
                        break;
                    }
                    current = self.nodes[&id].parent;
                }
            }
        }
        let subtree = LabelTree {
            version: self.version,
            nodes: self
                .nodes
                .iter()
                .filter(|(id, _)| keep.contains(id))
                .map(|(id, n)| (*id, n.clone()))
                .collect(),
            next_id: self.next_id,
        };
        MappingOutcome {
            subtree,
            rejects,
            accepted_total,
        }
    }

    /// Lift every label to its ancestor at the requested level. Labels
    /// already there pass through; labels above it are dropped.
    pub fn ancestor_closure(&self, labels: &BTreeSet<u32>, level: u8) -> BTreeSet<u32> {
        let mut out = BTreeSet::new();
        for &id in labels {
            let mut current = self.nodes.get(&id);
            while let Some(node) = current {
                if node.level == level {
                    out.insert(node.id);
                    break;
                }
                if node.level < level {
                    break; // above the requested level: no descendant expansion
                }
                current = node.parent.and_then(|p| self.nodes.get(&p));
            }
        }
        out
    }

    /// Counts of nodes per level, for quick summaries.
    pub fn level_counts(&self) -> BTreeMap<u8, usize> {
        let mut out = BTreeMap::new();
        for node in self.nodes.values() {
            *out.entry(node.level).or_default() += 1;
        }
        out
    }
}

/// Aggregate per-label counts from `image_id,label_name` CSV rows. A
/// leading header row is skipped when present.
pub fn ingest_label_counts(text: &str) -> Result<BTreeMap<String, u64>, TaxonomyError> {
    let mut counts: BTreeMap<String, u64> = BTreeMap::new();
    for (idx, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let (image, label) = line.split_once(',').ok_or_else(|| {
            TaxonomyError::BadDocument(format!("line {}: expected image_id,label_name", idx + 1))
        })?;
        if idx == 0 && image.trim().eq_ignore_ascii_case("image_id") {
            continue;
        }
        let label = normalize(label);
        if label.is_empty() {
            return Err(TaxonomyError::BadDocument(format!(
                "line {}: empty label name",
                idx + 1
            )));
        }
        *counts.entry(label).or_default() += 1;
    }
    Ok(counts)
}
