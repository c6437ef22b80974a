//! Node vocabulary and the recursive statement-tree encoder.
//!
//! Each node's token is embedded by a row lookup in `W_e`, projected by
//! `W_n`, and combined bottom-up with its children's hidden states:
//! `h(n) = tanh(w_n · W_n + Σ h(child) + b_n)`. A statement tree's vector is
//! the column-wise max over all of its nodes' hidden states.

use std::collections::{BTreeMap, HashMap};
use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cfront::AstNode;
use crate::tensor::{Graph, ParamId, ParamStore, Tensor, TensorError, Var};
use crate::treesplit::{node_token, StatementSequence, StatementTree};

pub const PAD: usize = 0;
pub const UNK: usize = 1;
pub const PAD_TOKEN: &str = "<pad>";
pub const UNK_TOKEN: &str = "<unk>";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EncoderError {
    #[error("cannot build a vocabulary from an empty corpus")]
    EmptyCorpus,
    #[error("statement sequence is empty")]
    EmptySequence,
    #[error(transparent)]
    Tensor(#[from] TensorError),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    token_to_id: HashMap<String, usize>,
    id_to_token: Vec<String>,
    min_freq: usize,
}

impl Vocabulary {
    /// Ids 0 and 1 are reserved for padding and unknown tokens. Remaining
    /// tokens with at least `min_freq` occurrences are numbered from 2 in
    /// order of descending frequency, ties broken lexicographically.
    pub fn build(corpus: &[Vec<String>], min_freq: usize) -> Result<Self, EncoderError> {
        if corpus.iter().all(Vec::is_empty) {
            return Err(EncoderError::EmptyCorpus);
        }
        let mut counts: HashMap<&str, usize> = HashMap::new();
        for tok in corpus.iter().flatten() {
            *counts.entry(tok.as_str()).or_default() += 1;
        }
        let mut ranked: Vec<(&str, usize)> = counts.into_iter().filter(|&(_, c)| c >= min_freq.max(1)).collect();
        ranked.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));

        let mut id_to_token = vec![PAD_TOKEN.to_string(), UNK_TOKEN.to_string()];
        id_to_token.extend(ranked.into_iter().map(|(t, _)| t.to_string()));
        let token_to_id = id_to_token.iter().enumerate().map(|(i, t)| (t.clone(), i)).collect();
        Ok(Self { token_to_id, id_to_token, min_freq })
    }

    pub fn len(&self) -> usize {
        self.id_to_token.len()
    }

    pub fn is_empty(&self) -> bool {
        self.id_to_token.is_empty()
    }

    pub fn min_freq(&self) -> usize {
        self.min_freq
    }

    /// Id of `token`, or [`UNK`].
    pub fn lookup(&self, token: &str) -> usize {
        self.token_to_id.get(token).copied().unwrap_or(UNK)
    }

    pub fn contains(&self, token: &str) -> bool {
        self.token_to_id.contains_key(token)
    }

    pub fn token(&self, id: usize) -> Option<&str> {
        self.id_to_token.get(id).map(String::as_str)
    }

    /// `{token: id}` map, as stored in checkpoints.
    pub fn to_map(&self) -> BTreeMap<String, usize> {
        self.token_to_id.iter().map(|(t, &i)| (t.clone(), i)).collect()
    }

    /// Inverse of [`Vocabulary::to_map`]. Ids must be contiguous from 0.
    pub fn from_map(map: &BTreeMap<String, usize>, min_freq: usize) -> Option<Self> {
        let mut id_to_token = vec![String::new(); map.len()];
        let mut seen = vec![false; map.len()];
        for (tok, &id) in map {
            if id >= map.len() || seen[id] {
                return None;
            }
            seen[id] = true;
            id_to_token[id] = tok.clone();
        }
        let token_to_id = map.iter().map(|(t, &i)| (t.clone(), i)).collect();
        Some(Self { token_to_id, id_to_token, min_freq })
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq, Eq)]
pub struct EncoderDims {
    pub vocab: usize,
    /// Embedding width.
    pub embed: usize,
    /// Encoded width.
    pub hidden: usize,
}

/// Handles of the encoder's parameters inside a [`ParamStore`].
#[derive(Debug, Clone, Copy)]
pub struct EncoderParams {
    /// `|V| x d` embedding table.
    pub w_e: ParamId,
    /// `d x k` node projection.
    pub w_n: ParamId,
    /// `1 x k` bias.
    pub b_n: ParamId,
}

impl EncoderParams {
    pub fn init(store: &mut ParamStore, dims: EncoderDims, rng: &mut impl Rng) -> Self {
        let w_e = store.add_glorot("encoder.w_e", dims.vocab, dims.embed, rng);
        let w_n = store.add_glorot("encoder.w_n", dims.embed, dims.hidden, rng);
        let b_n = store.add("encoder.b_n", Tensor::zeros(1, dims.hidden));
        Self { w_e, w_n, b_n }
    }

    pub fn lookup(store: &ParamStore) -> Option<Self> {
        Some(Self {
            w_e: store.find("encoder.w_e")?,
            w_n: store.find("encoder.w_n")?,
            b_n: store.find("encoder.b_n")?,
        })
    }
}

/// Embedding of a single token: row `id(token)` of `W_e`.
pub fn embed_node(token: &str, store: &ParamStore, params: &EncoderParams, vocab: &Vocabulary) -> Vec<f64> {
    store.value(params.w_e).row(vocab.lookup(token)).to_vec()
}

/// Flattened forest ready for encoding: every node's token id, its parent
/// within the flat list and the node range of each tree.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ForestInput {
    pub ids: Vec<usize>,
    pub parent: Arc<[Option<usize>]>,
    pub segments: Vec<(usize, usize)>,
}

impl ForestInput {
    pub fn from_trees<'a>(trees: impl IntoIterator<Item = &'a StatementTree>, vocab: &Vocabulary) -> Self {
        let mut ids = Vec::new();
        let mut parent = Vec::new();
        let mut segments = Vec::new();
        for tree in trees {
            let start = ids.len();
            flatten(&tree.root, None, vocab, &mut ids, &mut parent);
            segments.push((start, ids.len()));
        }
        Self { ids, parent: parent.into(), segments }
    }

    pub fn from_sequence(seq: &StatementSequence, vocab: &Vocabulary) -> Self {
        Self::from_trees(&seq.trees, vocab)
    }

    /// Stack several forests into one; parent links and tree ranges are
    /// shifted past the earlier inputs.
    pub fn concat(parts: &[&ForestInput]) -> Self {
        let mut ids = Vec::new();
        let mut parent = Vec::new();
        let mut segments = Vec::new();
        for part in parts {
            let off = ids.len();
            ids.extend_from_slice(&part.ids);
            parent.extend(part.parent.iter().map(|p| p.map(|x| x + off)));
            segments.extend(part.segments.iter().map(|&(s, e)| (s + off, e + off)));
        }
        Self { ids, parent: parent.into(), segments }
    }

    pub fn tree_count(&self) -> usize {
        self.segments.len()
    }

    pub fn node_count(&self) -> usize {
        self.ids.len()
    }
}

fn flatten(
    node: &AstNode,
    parent_idx: Option<usize>,
    vocab: &Vocabulary,
    ids: &mut Vec<usize>,
    parent: &mut Vec<Option<usize>>,
) {
    let me = ids.len();
    ids.push(vocab.lookup(&node_token(node)));
    parent.push(parent_idx);
    for c in &node.children {
        flatten(c, Some(me), vocab, ids, parent);
    }
}

/// Encode every tree of `input`; returns a `trees x k` matrix.
pub fn encode_forest(
    g: &mut Graph,
    store: &ParamStore,
    params: &EncoderParams,
    input: &ForestInput,
) -> Result<Var, EncoderError> {
    if input.segments.is_empty() {
        return Err(EncoderError::EmptySequence);
    }
    let w_e = g.param(store, params.w_e);
    let w_n = g.param(store, params.w_n);
    let b_n = g.param(store, params.b_n);
    let emb = g.gather_rows(w_e, &input.ids)?;
    let proj = g.matmul(emb, w_n)?;
    let pre = g.add(proj, b_n)?;
    let hidden = g.tree_recurrence(pre, Arc::clone(&input.parent))?;
    Ok(g.segment_max_rows(hidden, &input.segments)?)
}

/// `1 x k` encoding of one statement tree.
pub fn encode_tree(
    g: &mut Graph,
    store: &ParamStore,
    params: &EncoderParams,
    tree: &StatementTree,
    vocab: &Vocabulary,
) -> Result<Var, EncoderError> {
    encode_forest(g, store, params, &ForestInput::from_trees([tree], vocab))
}

/// `N x k` matrix whose row `i` encodes tree `i`.
pub fn encode_sequence(
    g: &mut Graph,
    store: &ParamStore,
    params: &EncoderParams,
    seq: &StatementSequence,
    vocab: &Vocabulary,
) -> Result<Var, EncoderError> {
    encode_forest(g, store, params, &ForestInput::from_sequence(seq, vocab))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cfront::{parse_source, NodeKind};
    use crate::treesplit::split;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn toks(list: &[&str]) -> Vec<String> {
        list.iter().map(|s| s.to_string()).collect()
    }

    fn setup(vocab: &Vocabulary, k: usize, seed: u64) -> (ParamStore, EncoderParams) {
        let mut store = ParamStore::new();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let p = EncoderParams::init(&mut store, EncoderDims { vocab: vocab.len(), embed: k, hidden: k }, &mut rng);
        (store, p)
    }

    fn tree(root: AstNode) -> StatementTree {
        StatementTree { index: 0, header_kind: root.kind, root }
    }

    fn leaf(kind: NodeKind, lex: &str) -> AstNode {
        AstNode::leaf(kind, lex, (0, 0))
    }

    #[test]
    fn vocab_ids_and_min_freq() {
        let corpus = vec![toks(&["a", "a", "b"])];
        let v = Vocabulary::build(&corpus, 1).unwrap();
        assert_eq!(v.to_map(), BTreeMap::from([
            ("<pad>".into(), 0), ("<unk>".into(), 1), ("a".into(), 2), ("b".into(), 3)
        ]));
        let v2 = Vocabulary::build(&corpus, 2).unwrap();
        assert!(!v2.contains("b"));
        assert_eq!(v2.lookup("b"), UNK);
        assert_eq!(v2.lookup("a"), 2);
    }

    #[test]
    fn vocab_ties_break_lexicographically() {
        let v = Vocabulary::build(&[toks(&["z", "y", "x", "x"])], 1).unwrap();
        assert_eq!((v.lookup("x"), v.lookup("y"), v.lookup("z")), (2, 3, 4));
    }

    #[test]
    fn empty_corpus() {
        assert_eq!(Vocabulary::build(&[], 1).unwrap_err(), EncoderError::EmptyCorpus);
        assert_eq!(Vocabulary::build(&[vec![]], 1).unwrap_err(), EncoderError::EmptyCorpus);
    }

    #[test]
    fn vocab_map_roundtrip() {
        let v = Vocabulary::build(&[toks(&["For", "i", "i", "Return"])], 1).unwrap();
        assert_eq!(Vocabulary::from_map(&v.to_map(), 1).unwrap(), v);
    }

    #[test]
    fn embed_is_row_lookup_and_one_hot_product() {
        let v = Vocabulary::build(&[toks(&["a", "b", "c"])], 1).unwrap();
        let (store, p) = setup(&v, 6, 3);
        let table = store.value(p.w_e);
        for tok in ["a", "b", "c", "never-seen"] {
            let id = v.lookup(tok);
            let mut onehot = Tensor::zeros(v.len(), 1);
            onehot.set(id, 0, 1.0);
            let product = table.transpose().matmul(&onehot).unwrap();
            assert_eq!(embed_node(tok, &store, &p, &v), product.data());
        }
        assert_eq!(embed_node("never-seen", &store, &p, &v), table.row(UNK));
    }

    #[test]
    fn zero_weights_encode_to_zero() {
        let v = Vocabulary::build(&[toks(&["Return"])], 1).unwrap();
        let (mut store, p) = setup(&v, 4, 1);
        store.value_mut(p.w_n).data_mut().fill(0.0);
        let mut g = Graph::new();
        let t = tree(AstNode::new(NodeKind::Return, None, vec![], (0, 0)));
        let e = encode_tree(&mut g, &store, &p, &t, &v).unwrap();
        assert_eq!(g.value(e).data(), &[0.0; 4]);
    }

    #[test]
    fn single_node_pools_to_its_hidden_state() {
        let v = Vocabulary::build(&[toks(&["Break"])], 1).unwrap();
        let (store, p) = setup(&v, 5, 9);
        let mut g = Graph::new();
        let t = tree(AstNode::new(NodeKind::Break, None, vec![], (0, 0)));
        let e = encode_tree(&mut g, &store, &p, &t, &v).unwrap();
        let w = embed_node("Break", &store, &p, &v);
        let wn = store.value(p.w_n);
        let expected: Vec<f64> = (0..5).map(|c| (0..5).map(|r| w[r] * wn.get(r, c)).sum::<f64>().tanh()).collect();
        let got = g.value(e).data();
        for (a, b) in got.iter().zip(&expected) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    /// Independent scalar evaluation of the recursion on a 3-node chain with
    /// hand-picked weights.
    #[test]
    fn chain_matches_hand_evaluation() {
        let v = Vocabulary::build(&[toks(&["Return", "UnaryOp:-", "x"])], 1).unwrap();
        // ids: Return=2? all freq 1, lexicographic: Return, UnaryOp:-, x
        assert_eq!((v.lookup("Return"), v.lookup("UnaryOp:-"), v.lookup("x")), (2, 3, 4));
        let mut store = ParamStore::new();
        let w_e = store.add(
            "encoder.w_e",
            Tensor::from_rows(&[
                vec![0.0, 0.0],
                vec![0.0, 0.0],
                vec![0.5, -0.25],
                vec![0.1, 0.2],
                vec![-0.3, 0.4],
            ]),
        );
        let w_n = store.add("encoder.w_n", Tensor::from_rows(&[vec![0.2, -0.1], vec![0.3, 0.05]]));
        let b_n = store.add("encoder.b_n", Tensor::row_vector(&[0.01, -0.02]));
        let p = EncoderParams { w_e, w_n, b_n };

        let x = leaf(NodeKind::ID, "x");
        let neg = AstNode::new(NodeKind::UnaryOp, Some("-".into()), vec![x], (0, 0));
        let ret = AstNode::new(NodeKind::Return, None, vec![neg], (0, 0));
        let mut g = Graph::new();
        let e = encode_tree(&mut g, &store, &p, &tree(ret), &v).unwrap();

        let cell = |w: [f64; 2], child: [f64; 2]| -> [f64; 2] {
            [
                (w[0] * 0.2 + w[1] * 0.3 + child[0] + 0.01).tanh(),
                (w[0] * -0.1 + w[1] * 0.05 + child[1] - 0.02).tanh(),
            ]
        };
        let hx = cell([-0.3, 0.4], [0.0, 0.0]);
        let hneg = cell([0.1, 0.2], hx);
        let hret = cell([0.5, -0.25], hneg);
        let expected = [hx[0].max(hneg[0]).max(hret[0]), hx[1].max(hneg[1]).max(hret[1])];
        let got = g.value(e).data();
        assert!((got[0] - expected[0]).abs() < 1e-15 && (got[1] - expected[1]).abs() < 1e-15);
    }

    #[test]
    fn child_order_does_not_matter() {
        let v = Vocabulary::build(&[toks(&["Call", "f", "a", "b", "Constant:1"])], 1).unwrap();
        let (store, p) = setup(&v, 8, 5);
        let kids = vec![leaf(NodeKind::ID, "f"), leaf(NodeKind::ID, "a"), leaf(NodeKind::ID, "b"), leaf(NodeKind::Constant, "1")];
        let mut rev = kids.clone();
        rev.reverse();
        let t1 = tree(AstNode::new(NodeKind::Call, None, kids, (0, 0)));
        let t2 = tree(AstNode::new(NodeKind::Call, None, rev, (0, 0)));
        let mut g = Graph::new();
        let e1 = encode_tree(&mut g, &store, &p, &t1, &v).unwrap();
        let e2 = encode_tree(&mut g, &store, &p, &t2, &v).unwrap();
        let (a, b) = (g.value(e1).data(), g.value(e2).data());
        assert!(a.iter().zip(b).all(|(x, y)| (x - y).abs() < 1e-15));
    }

    #[test]
    fn sequence_rows_match_individual_trees() {
        let seq = split(&parse_source(crate::corpus::appendix()[0].source).unwrap()).unwrap();
        let corpus: Vec<Vec<String>> = seq.trees.iter().map(|t| t.tokens()).collect();
        let v = Vocabulary::build(&corpus, 1).unwrap();
        let (store, p) = setup(&v, 16, 2);
        let mut g = Graph::new();
        let e = encode_sequence(&mut g, &store, &p, &seq, &v).unwrap();
        assert_eq!(g.shape(e), [7, 16]);
        for (i, t) in seq.trees.iter().enumerate() {
            let single = encode_tree(&mut g, &store, &p, t, &v).unwrap();
            assert_eq!(g.value(single).data(), g.value(e).row(i));
        }
        assert!(g.value(e).data().iter().all(|x| x.abs() < 1.0));
    }

    #[test]
    fn embedding_gradient_touches_only_used_rows() {
        let corpus = vec![toks(&["Return", "Constant:0", "Break", "unused"])];
        let v = Vocabulary::build(&corpus, 1).unwrap();
        let (mut store, p) = setup(&v, 4, 11);
        let ret = AstNode::new(NodeKind::Return, None, vec![leaf(NodeKind::Constant, "0")], (0, 0));
        let t = tree(ret);
        let mut g = Graph::new();
        let e = encode_tree(&mut g, &store, &p, &t, &v).unwrap();
        let loss = g.sum(e);
        let grads = g.backward(loss).unwrap();
        grads.accumulate_into(&g, &mut store);
        let ge = store.grad(p.w_e);
        let used = [v.lookup("Return"), v.lookup("Constant:0")];
        for id in 0..v.len() {
            let nonzero = ge.row(id).iter().any(|x| *x != 0.0);
            assert_eq!(nonzero, used.contains(&id), "row {id}");
        }
    }
}
