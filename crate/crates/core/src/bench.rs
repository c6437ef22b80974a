//! Sparse versus dense timing of the encoder stack on random inputs.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::attention::{encoder_stack, AttentionError, AttentionMask, MaskPlan, ModelConfig, ModelParams};
use crate::tensor::{Graph, ParamStore, Tensor};
use crate::treesplit::AdjMatrix;

/// Adjacency of a random tree on `n` nodes: each node `i > 0` hangs under
/// a uniformly chosen earlier node.
pub fn random_tree_adjacency(n: usize, rng: &mut impl Rng) -> AdjMatrix {
    let mut adj = AdjMatrix::identity(n);
    for i in 1..n {
        let p = rng.gen_range(0..i);
        adj.set(i, p, true);
        adj.set(p, i, true);
    }
    adj
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BenchRow {
    #[serde(rename = "N")]
    pub n: usize,
    pub pairs: usize,
    pub pairs_dense: usize,
    /// Median seconds for one forward and backward pass.
    pub t_sparse: f64,
    pub t_dense: f64,
}

/// Allowed-pair count of the configured mask on a random tree of `n`
/// statement trees.
pub fn pair_count(cfg: &ModelConfig, n: usize, seed: u64) -> Result<usize, AttentionError> {
    let adj = random_tree_adjacency(n, &mut ChaCha8Rng::seed_from_u64(seed));
    Ok(cfg.build_mask(&adj)?.pair_count())
}

fn time_pass(store: &ParamStore, params: &ModelParams, e: &Tensor, plan: &MaskPlan) -> Result<f64, AttentionError> {
    let positions: Vec<usize> = (0..e.rows()).collect();
    let start = Instant::now();
    let mut g = Graph::new();
    let x = g.leaf(e.clone());
    let out = encoder_stack(&mut g, store, params, x, plan, &positions)?;
    let loss = g.sum(out.out);
    std::hint::black_box(g.backward(loss)?);
    Ok(start.elapsed().as_secs_f64())
}

fn median(mut xs: Vec<f64>) -> f64 {
    xs.sort_by(f64::total_cmp);
    let m = xs.len() / 2;
    if xs.len() % 2 == 1 {
        xs[m]
    } else {
        (xs[m - 1] + xs[m]) / 2.0
    }
}

/// One row per length: pair counts plus median sparse and dense times over
/// `repeats` runs (at least one).
pub fn run(cfg: &ModelConfig, lengths: &[usize], repeats: usize, seed: u64) -> Result<Vec<BenchRow>, AttentionError> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut store = ParamStore::new();
    let params = ModelParams::init(&mut store, cfg, 16, &mut rng);
    let mut rows = Vec::with_capacity(lengths.len());
    for &n in lengths {
        let adj = random_tree_adjacency(n, &mut rng);
        let mask: AttentionMask = cfg.build_mask(&adj)?;
        let e = Tensor::from_vec(n, cfg.d_model, (0..n * cfg.d_model).map(|_| rng.gen_range(-1.0..1.0)).collect())?;
        let (sparse, dense) = (MaskPlan::sparse(&mask), MaskPlan::dense(&mask));
        let mut ts = Vec::new();
        let mut td = Vec::new();
        for _ in 0..repeats.max(1) {
            ts.push(time_pass(&store, &params, &e, &sparse)?);
            td.push(time_pass(&store, &params, &e, &dense)?);
        }
        rows.push(BenchRow { n, pairs: mask.pair_count(), pairs_dense: n * n, t_sparse: median(ts), t_dense: median(td) });
    }
    Ok(rows)
}

pub fn to_csv(rows: &[BenchRow]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("ascii csv")
}
