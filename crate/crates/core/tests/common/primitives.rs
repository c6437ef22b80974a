//! Finite-difference cases for each autodiff primitive. Every function
//! returns the worst relative error for one seed.

use std::sync::Arc;

use rand::Rng;
use sacc::tensor::{DenseMask, Graph, SparsePattern, Var, LAYER_NORM_EPS};

use super::{grad_check, random_tensor, rng};

/// Reduce any tensor to a scalar through a fixed random projection so every
/// output element carries a distinct upstream gradient.
pub fn project(g: &mut Graph, x: Var, seed: u64) -> Var {
    let [r, c] = g.shape(x);
    let w = g.leaf(random_tensor(&mut rng(seed ^ 0xabcd), r, c));
    let p = g.mul(x, w).unwrap();
    g.sum(p)
}

fn random_mask(rng: &mut impl Rng, rows: usize, cols: usize) -> Vec<bool> {
    (0..rows * cols).map(|_| rng.gen_bool(0.6)).collect()
}

pub fn matmul(s: u64) -> f64 {
    let mut r = rng(s);
    let ins = [random_tensor(&mut r, 3, 4), random_tensor(&mut r, 4, 2)];
    grad_check(&ins, |g, v| {
        let y = g.matmul(v[0], v[1]).unwrap();
        project(g, y, s)
    })
}

pub fn add_and_row_broadcast(s: u64) -> f64 {
    let mut r = rng(s);
    let ins = [random_tensor(&mut r, 3, 4), random_tensor(&mut r, 3, 4), random_tensor(&mut r, 1, 4)];
    grad_check(&ins, |g, v| {
        let y = g.add(v[0], v[1]).unwrap();
        let y = g.add(y, v[2]).unwrap();
        project(g, y, s)
    })
}

pub fn mul_scale_tanh_relu(s: u64) -> f64 {
    let mut r = rng(s);
    let ins = [random_tensor(&mut r, 2, 5), random_tensor(&mut r, 2, 5)];
    grad_check(&ins, |g, v| {
        let m = g.mul(v[0], v[1]).unwrap();
        let t = g.tanh(m);
        let sc = g.scale(v[0], -1.7);
        let rl = g.relu(sc);
        let y = g.add(t, rl).unwrap();
        project(g, y, s)
    })
}

pub fn transpose_concat_gather_slice(s: u64) -> f64 {
    let mut r = rng(s);
    let ins = [random_tensor(&mut r, 3, 2), random_tensor(&mut r, 3, 3), random_tensor(&mut r, 5, 4)];
    grad_check(&ins, |g, v| {
        let c = g.concat_cols(&[v[0], v[1]]).unwrap();
        let t = g.transpose(c);
        let gathered = g.gather_rows(v[2], &[4, 0, 4, 2, 1]).unwrap();
        let sl = g.slice_rows(gathered, 1, 4).unwrap();
        let a = project(g, t, s);
        let b = project(g, sl, s + 1);
        let both = g.add(a, b).unwrap();
        g.tanh(both)
    })
}

pub fn maxpool_and_segments(s: u64) -> f64 {
    let mut r = rng(s);
    let ins = [random_tensor(&mut r, 6, 3)];
    grad_check(&ins, |g, v| {
        let (m, _) = g.maxpool_rows(v[0]).unwrap();
        let seg = g.segment_max_rows(v[0], &[(0, 2), (2, 3), (3, 6)]).unwrap();
        let a = project(g, m, s);
        let b = project(g, seg, s + 3);
        g.add(a, b).unwrap()
    })
}

pub fn layer_norm(s: u64) -> f64 {
    let mut r = rng(s);
    let ins = [random_tensor(&mut r, 3, 6), random_tensor(&mut r, 1, 6), random_tensor(&mut r, 1, 6)];
    grad_check(&ins, |g, v| {
        let y = g.layer_norm(v[0], v[1], v[2], LAYER_NORM_EPS).unwrap();
        project(g, y, s)
    })
}

pub fn masked_softmax(s: u64) -> f64 {
    let mut r = rng(s);
    let ins = [random_tensor(&mut r, 4, 5)];
    let mut allowed = random_mask(&mut r, 4, 5);
    allowed[5..10].fill(false);
    let mask = Arc::new(DenseMask::new(4, 5, allowed));
    grad_check(&ins, |g, v| {
        let y = g.softmax_rows_masked(v[0], Arc::clone(&mask)).unwrap();
        project(g, y, s)
    })
}

pub fn sparse_attention(s: u64) -> f64 {
    let mut r = rng(s);
    let n = 5;
    let rows: Vec<Vec<usize>> = (0..n)
        .map(|i| (0..n).filter(|&j| j == i || r.gen_bool(0.4)).collect())
        .collect();
    let pattern = Arc::new(SparsePattern::from_rows(&rows, n));
    let ins = [random_tensor(&mut r, n, 3), random_tensor(&mut r, n, 3), random_tensor(&mut r, n, 2)];
    grad_check(&ins, |g, v| {
        let y = g.sparse_attention(v[0], v[1], v[2], Arc::clone(&pattern), 0.6).unwrap();
        project(g, y, s)
    })
}

pub fn tree_recurrence(s: u64) -> f64 {
    let mut r = rng(s);
    let n = 7;
    let parent: Arc<[Option<usize>]> =
        (0..n).map(|i| if i == 0 || i == 4 { None } else { Some(r.gen_range(0..i)) }).collect();
    let ins = [random_tensor(&mut r, n, 3)];
    grad_check(&ins, |g, v| {
        let h = g.tree_recurrence(v[0], Arc::clone(&parent)).unwrap();
        project(g, h, s)
    })
}

pub fn cross_entropy(s: u64) -> f64 {
    let mut r = rng(s);
    let labels: Vec<usize> = (0..3).map(|_| r.gen_range(0..4)).collect();
    let ins = [random_tensor(&mut r, 3, 4)];
    grad_check(&ins, |g, v| g.cross_entropy(v[0], &labels).unwrap())
}

pub fn matmul_chain_4x4(s: u64) -> f64 {
    let mut r = rng(s);
    let ins = [random_tensor(&mut r, 4, 4), random_tensor(&mut r, 4, 4), random_tensor(&mut r, 4, 4)];
    grad_check(&ins, |g, v| {
        let ab = g.matmul(v[0], v[1]).unwrap();
        let abc = g.matmul(ab, v[2]).unwrap();
        g.sum(abc)
    })
}

pub const ALL: &[(&str, fn(u64) -> f64)] = &[
    ("matmul", matmul),
    ("add", add_and_row_broadcast),
    ("elementwise", mul_scale_tanh_relu),
    ("layout", transpose_concat_gather_slice),
    ("maxpool", maxpool_and_segments),
    ("layer_norm", layer_norm),
    ("softmax_rows_masked", masked_softmax),
    ("sparse_attention", sparse_attention),
    ("tree_recurrence", tree_recurrence),
    ("cross_entropy", cross_entropy),
    ("matmul chain", matmul_chain_4x4),
];

/// Full classifier loss on two appendix programs: analytic parameter
/// gradients against central differences on sampled entries of every
/// parameter tensor.
pub fn end_to_end(s: u64) -> f64 {
    use sacc::attention::{AttentionPath, ModelConfig, Pattern};
    use sacc::cfront::parse_source;
    use sacc::corpus::appendix;
    use sacc::encoder::Vocabulary;
    use sacc::model::SaccModel;
    use sacc::treesplit::split;

    let mut r = rng(s);
    let picks = [r.gen_range(0..7), r.gen_range(0..7)];
    let seqs: Vec<_> = picks.iter().map(|&i| split(&parse_source(appendix()[i].source).unwrap()).unwrap()).collect();
    let corpus: Vec<Vec<String>> = seqs.iter().flat_map(|q| q.trees.iter().map(|t| t.tokens())).collect();
    let vocab = Vocabulary::build(&corpus, 1).unwrap();
    let cfg = ModelConfig {
        embed_dim: 6,
        d_model: 4,
        heads: 2,
        d_k: 2,
        d_ff: 8,
        patterns: vec![Pattern::Local, Pattern::Global, Pattern::Ast],
        attention: if s.is_multiple_of(2) { AttentionPath::Sparse } else { AttentionPath::Dense },
        ..ModelConfig::default()
    };
    let mut model = SaccModel::new(cfg, vocab, vec!["a".into(), "b".into(), "c".into()], s).unwrap();
    let prepared: Vec<_> = seqs.iter().map(|q| model.prepare(q).unwrap()).collect();
    let labels = [r.gen_range(0..3), r.gen_range(0..3)];

    let loss_of = |m: &SaccModel| {
        let mut g = Graph::new();
        let f = m.forward(&mut g, &prepared.iter().collect::<Vec<_>>()).unwrap();
        let loss = g.cross_entropy(f.logits, &labels).unwrap();
        (g, loss)
    };
    let (g, loss) = loss_of(&model);
    let grads = g.backward(loss).unwrap();
    model.store.zero_grad();
    grads.accumulate_into(&g, &mut model.store);
    drop(g);

    let mut worst: f64 = 0.0;
    for id in model.store.ids().collect::<Vec<_>>() {
        let len = model.store.value(id).len();
        for _ in 0..4 {
            let idx = r.gen_range(0..len);
            let analytic = model.store.grad(id).data()[idx];
            let orig = model.store.value(id).data()[idx];
            let mut eval = |x: f64| {
                model.store.value_mut(id).data_mut()[idx] = x;
                let (g, l) = loss_of(&model);
                g.value(l).item()
            };
            let numeric = (eval(orig + super::FD_EPS) - eval(orig - super::FD_EPS)) / (2.0 * super::FD_EPS);
            model.store.value_mut(id).data_mut()[idx] = orig;
            worst = worst.max(super::rel_err(analytic, numeric));
        }
    }
    worst
}
