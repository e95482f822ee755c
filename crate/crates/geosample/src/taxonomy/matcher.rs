//! Semantic matching behind label placement and duplicate detection.
//!
//! The deterministic [`DictionaryMatcher`] scores candidates from token
//! overlap plus a configurable synonym dictionary and is the offline
//! default for the whole pipeline. The [`RemoteMatcher`] speaks a minimal
//! HTTP JSON contract to an external language-model service and records
//! every exchange in a replayable transcript.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::io::Write;
use std::path::PathBuf;
use std::sync::Mutex;
use std::time::Duration;

use serde::Serialize;
use thiserror::Error;

use super::{normalize, LabelTree, MergeReason};

#[derive(Debug, Error)]
pub enum MatcherError {
    #[error("matcher transport failure: {0}; the request may be retried")]
    Transport(String),
    #[error("matcher returned a malformed response: {0}")]
    BadResponse(String),
}

/// A label, viewed as matcher input: a prospective node or an existing one.
#[derive(Debug, Clone, Serialize)]
pub struct LabelQuery {
    pub name: String,
    pub description: String,
    #[serde(skip_serializing_if = "BTreeSet::is_empty")]
    pub synonyms: BTreeSet<String>,
}

pub trait SemanticMatcher {
    /// Best-matching candidate (by id) with a score in `[0, 1]`, or
    /// `None` when there are no candidates.
    fn best_match(
        &self,
        query: &LabelQuery,
        tree: &LabelTree,
        candidates: &[u32],
    ) -> Result<Option<(u32, f64)>, MatcherError>;

    fn is_duplicate(&self, a: &LabelQuery, b: &LabelQuery) -> Result<bool, MatcherError>;

    /// Classified duplicate verdict; the default treats every duplicate
    /// as a function-level one.
    fn duplicate_reason(
        &self,
        a: &LabelQuery,
        b: &LabelQuery,
    ) -> Result<Option<MergeReason>, MatcherError> {
        Ok(self.is_duplicate(a, b)?.then_some(MergeReason::Function))
    }
}

const STOPWORDS: &[&str] = &[
    "a", "an", "the", "of", "for", "or", "and", "in", "on", "to", "is", "are", "be", "by",
    "as", "at", "it", "its", "that", "this", "which", "such", "would", "typically", "often",
    "with", "used", "use",
];

fn singularize(token: &str) -> String {
    if token.len() > 4 && token.ends_with("ies") {
        format!("{}y", &token[..token.len() - 3])
    } else if token.len() > 3 && token.ends_with('s') && !token.ends_with("ss") {
        token[..token.len() - 1].to_string()
    } else {
        token.to_string()
    }
}

fn tokenize(text: &str) -> BTreeSet<String> {
    text.to_lowercase()
        .split(|c: char| !c.is_alphanumeric())
        .filter(|t| t.len() > 1 && !STOPWORDS.contains(t))
        .map(singularize)
        .collect()
}

/// Optimal-string-alignment distance: one edit covers an insertion, a
/// deletion, a substitution, or an adjacent transposition, so common
/// typos like "reservior" sit one edit from "reservoir".
fn edit_distance(a: &str, b: &str) -> usize {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    let (n, m) = (a.len(), b.len());
    let mut d = vec![vec![0usize; m + 1]; n + 1];
    for (i, row) in d.iter_mut().enumerate() {
        row[0] = i;
    }
    for (j, cell) in d[0].iter_mut().enumerate() {
        *cell = j;
    }
    for i in 1..=n {
        for j in 1..=m {
            let cost = usize::from(a[i - 1] != b[j - 1]);
            let mut best = (d[i - 1][j] + 1).min(d[i][j - 1] + 1).min(d[i - 1][j - 1] + cost);
            if i > 1 && j > 1 && a[i - 1] == b[j - 2] && a[i - 2] == b[j - 1] {
                best = best.min(d[i - 2][j - 2] + 1);
            }
            d[i][j] = best;
        }
    }
    d[n][m]
}

/// Deterministic matcher backed by token overlap and a synonym dictionary.
#[derive(Debug, Clone, Default)]
pub struct DictionaryMatcher {
    groups: Vec<BTreeSet<String>>,
    term_group: HashMap<String, usize>,
}

impl DictionaryMatcher {
    pub fn new() -> Self {
        Self::default()
    }

    /// The synonym groups shipped with the toolkit.
    pub fn with_default_groups() -> Self {
        let mut matcher = Self::new();
        for group in [
            &["cemetery", "graveyard"][..],
            &["amenity", "infrastructure"][..],
            &["shop", "store"][..],
            &["farmland", "cropland"][..],
            &["road", "street"][..],
            &["railway", "railroad"][..],
            &["house", "dwelling"][..],
        ] {
            matcher.add_group(group);
        }
        matcher
    }

    pub fn add_group(&mut self, terms: &[&str]) {
        let idx = self.groups.len();
        let group: BTreeSet<String> = terms.iter().map(|t| normalize(t)).collect();
        for term in &group {
            self.term_group.insert(term.clone(), idx);
        }
        self.groups.push(group);
    }

    fn group_of(&self, term: &str) -> Option<usize> {
        self.term_group.get(term).copied()
    }

    /// Query tokens plus every dictionary sibling of each token.
    fn expanded_tokens(&self, query: &LabelQuery) -> BTreeSet<String> {
        let mut tokens = tokenize(&format!("{} {}", query.name, query.description));
        tokens.insert(normalize(&query.name));
        for syn in &query.synonyms {
            tokens.insert(syn.clone());
            tokens.extend(tokenize(syn));
        }
        let mut expanded = tokens.clone();
        for token in &tokens {
            if let Some(g) = self.group_of(token) {
                expanded.extend(self.groups[g].iter().cloned());
            }
        }
        expanded
    }

    fn name_terms(node: &LabelQuery) -> BTreeSet<String> {
        let mut terms = BTreeSet::new();
        let name = normalize(&node.name);
        terms.insert(singularize(&name));
        terms.insert(name);
        for syn in &node.synonyms {
            terms.insert(syn.clone());
            terms.insert(singularize(syn));
        }
        terms
    }

    fn direct_score(&self, query: &LabelQuery, expanded: &BTreeSet<String>, node: &LabelQuery) -> f64 {
        let query_name = normalize(&query.name);
        let query_text = normalize(&format!("{} {}", query.name, query.description));
        let mut best: f64 = 0.0;
        for term in Self::name_terms(node) {
            if term == query_name {
                return 1.0;
            }
            if expanded.contains(&term)
                || (term.contains(' ') && query_text.contains(&term))
            {
                best = best.max(0.9);
            }
        }
        let node_desc_tokens = tokenize(&node.description);
        if tokenize(&query.name)
            .iter()
            .any(|t| node_desc_tokens.contains(t))
        {
            best = best.max(0.7);
        }
        let mut node_tokens = tokenize(&format!("{} {}", node.name, node.description));
        for syn in &node.synonyms {
            node_tokens.extend(tokenize(syn));
        }
        let intersection = expanded.intersection(&node_tokens).count();
        let union = expanded.union(&node_tokens).count();
        if union > 0 {
            best = best.max(0.6 * intersection as f64 / union as f64);
        }
        best
    }

    /// A node scores as its own match or, damped, as its best descendant's:
    /// the top-down walk needs level-1 candidates to surface deep matches.
    fn subtree_score(
        &self,
        query: &LabelQuery,
        expanded: &BTreeSet<String>,
        tree: &LabelTree,
        id: u32,
    ) -> f64 {
        let node = match tree.node(id) {
            Some(n) => n,
            None => return 0.0,
        };
        let mut score = self.direct_score(query, expanded, &node.as_query());
        for child in tree.children(id) {
            score = score.max(0.9 * self.subtree_score(query, expanded, tree, child));
        }
        score
    }
}

impl SemanticMatcher for DictionaryMatcher {
    fn best_match(
        &self,
        query: &LabelQuery,
        tree: &LabelTree,
        candidates: &[u32],
    ) -> Result<Option<(u32, f64)>, MatcherError> {
        let expanded = self.expanded_tokens(query);
        let mut best: Option<(u32, f64)> = None;
        for &id in candidates {
            let score = self.subtree_score(query, &expanded, tree, id);
            let better = match best {
                None => true,
                Some((best_id, best_score)) => {
                    score > best_score || (score == best_score && id < best_id)
                }
            };
            if better {
                best = Some((id, score));
            }
        }
        Ok(best)
    }

    fn is_duplicate(&self, a: &LabelQuery, b: &LabelQuery) -> Result<bool, MatcherError> {
        Ok(self.duplicate_reason(a, b)?.is_some())
    }

    fn duplicate_reason(
        &self,
        a: &LabelQuery,
        b: &LabelQuery,
    ) -> Result<Option<MergeReason>, MatcherError> {
        let name_a = normalize(&a.name);
        let name_b = normalize(&b.name);
        let mut terms_a: BTreeSet<String> = a.synonyms.clone();
        terms_a.insert(name_a.clone());
        let mut terms_b: BTreeSet<String> = b.synonyms.clone();
        terms_b.insert(name_b.clone());

        if terms_a.intersection(&terms_b).next().is_some() {
            return Ok(Some(MergeReason::Synonym));
        }
        let groups_a: HashSet<usize> = terms_a.iter().filter_map(|t| self.group_of(t)).collect();
        if terms_b.iter().filter_map(|t| self.group_of(t)).any(|g| groups_a.contains(&g)) {
            return Ok(Some(MergeReason::Synonym));
        }
        if edit_distance(&name_a, &name_b) <= 1 {
            return Ok(Some(MergeReason::Spelling));
        }
        if !a.description.is_empty() && !b.description.is_empty() {
            let ta = tokenize(&a.description);
            let tb = tokenize(&b.description);
            let union = ta.union(&tb).count();
            if union > 0 {
                let jaccard = ta.intersection(&tb).count() as f64 / union as f64;
                if jaccard >= 0.8 {
                    return Ok(Some(MergeReason::Function));
                }
            }
        }
        Ok(None)
    }
}

#[derive(Serialize)]
struct WireCandidate<'a> {
    id: u32,
    name: &'a str,
    description: &'a str,
    level: u8,
}

/// Client for a remote semantic-matching service.
///
/// Contract: POST one JSON document per call.
/// `{"op":"best_match","query":{...},"candidates":[{...}]}` answers
/// `{"best": <id or null>, "score": <0..1>}`;
/// `{"op":"is_duplicate","a":{...},"b":{...}}` answers
/// `{"duplicate": <bool>, "reason": "synonym"|"spelling"|"function"?}`.
pub struct RemoteMatcher {
    endpoint: String,
    agent: ureq::Agent,
    transcript: Option<Mutex<PathBuf>>,
}

impl RemoteMatcher {
    pub fn new(endpoint: impl Into<String>, timeout: Duration) -> Self {
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .timeout_global(Some(timeout))
            .build()
            .into();
        RemoteMatcher {
            endpoint: endpoint.into(),
            agent,
            transcript: None,
        }
    }

    /// Log every request/response pair as one JSON line in `path`.
    pub fn with_transcript(mut self, path: PathBuf) -> Self {
        self.transcript = Some(Mutex::new(path));
        self
    }

    fn call(&self, request: serde_json::Value) -> Result<serde_json::Value, MatcherError> {
        let mut response = self
            .agent
            .post(&self.endpoint)
            .send_json(&request)
            .map_err(|e| MatcherError::Transport(e.to_string()))?;
        let body: serde_json::Value = response
            .body_mut()
            .read_json()
            .map_err(|e| MatcherError::BadResponse(e.to_string()))?;
        if let Some(lock) = &self.transcript {
            let path = lock.lock().expect("transcript lock");
            let line = serde_json::json!({"request": request, "response": body});
            if let Ok(mut file) = std::fs::OpenOptions::new()
                .create(true)
                .append(true)
                .open(&*path)
            {
                let _ = writeln!(file, "{line}");
            }
        }
        Ok(body)
    }
}

impl SemanticMatcher for RemoteMatcher {
    fn best_match(
        &self,
        query: &LabelQuery,
        tree: &LabelTree,
        candidates: &[u32],
    ) -> Result<Option<(u32, f64)>, MatcherError> {
        if candidates.is_empty() {
            return Ok(None);
        }
        let wire: Vec<WireCandidate> = candidates
            .iter()
            .filter_map(|&id| tree.node(id))
            .map(|n| WireCandidate {
                id: n.id,
                name: &n.name,
                description: &n.description,
                level: n.level,
            })
            .collect();
        let body = self.call(serde_json::json!({
            "op": "best_match",
            "query": query,
            "candidates": wire,
        }))?;
        let score = body.get("score").and_then(|s| s.as_f64()).unwrap_or(0.0);
        match body.get("best") {
            None | Some(serde_json::Value::Null) => Ok(None),
            Some(v) => {
                let id = v.as_u64().ok_or_else(|| {
                    MatcherError::BadResponse(format!("best is not an id: {v}"))
                })? as u32;
                Ok(Some((id, score)))
            }
        }
    }

    fn is_duplicate(&self, a: &LabelQuery, b: &LabelQuery) -> Result<bool, MatcherError> {
        let body = self.call(serde_json::json!({
            "op": "is_duplicate",
            "a": a,
            "b": b,
        }))?;
        body.get("duplicate")
            .and_then(|d| d.as_bool())
            .ok_or_else(|| MatcherError::BadResponse("missing duplicate field".into()))
    }

    fn duplicate_reason(
        &self,
        a: &LabelQuery,
        b: &LabelQuery,
    ) -> Result<Option<MergeReason>, MatcherError> {
        let body = self.call(serde_json::json!({
            "op": "is_duplicate",
            "a": a,
            "b": b,
        }))?;
        let duplicate = body
            .get("duplicate")
            .and_then(|d| d.as_bool())
            .ok_or_else(|| MatcherError::BadResponse("missing duplicate field".into()))?;
        if !duplicate {
            return Ok(None);
        }
        Ok(Some(match body.get("reason").and_then(|r| r.as_str()) {
            Some("synonym") => MergeReason::Synonym,
            Some("spelling") => MergeReason::Spelling,
            _ => MergeReason::Function,
        }))
    }
}
