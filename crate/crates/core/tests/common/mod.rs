//! Helpers shared by the integration suites.
#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sacc::tensor::{Graph, Tensor, Var};

pub mod primitives;

pub const FD_EPS: f64 = 1e-5;
pub const FD_TOL: f64 = 1e-4;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_tensor(rng: &mut impl Rng, rows: usize, cols: usize) -> Tensor {
    let data = (0..rows * cols).map(|_| rng.gen_range(-1.0..1.0)).collect();
    Tensor::from_vec(rows, cols, data).unwrap()
}

/// Relative error with a small floor so exact zeros compare cleanly.
pub fn rel_err(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-6)
}

/// Compare reverse-mode gradients of a scalar function of `inputs` against
/// central differences. `build` must only use forward values. Returns the
/// worst relative error seen.
pub fn grad_check<F>(inputs: &[Tensor], build: F) -> f64
where
    F: Fn(&mut Graph, &[Var]) -> Var,
{
    let mut g = Graph::new();
    let vars: Vec<Var> = inputs.iter().map(|t| g.leaf(t.clone())).collect();
    let loss = build(&mut g, &vars);
    let grads = g.backward(loss).unwrap();

    let eval = |perturbed: &[Tensor]| {
        let mut g = Graph::new();
        let vars: Vec<Var> = perturbed.iter().map(|t| g.leaf(t.clone())).collect();
        let loss = build(&mut g, &vars);
        g.value(loss).item()
    };

    let mut worst: f64 = 0.0;
    let mut work: Vec<Tensor> = inputs.to_vec();
    for (which, input) in inputs.iter().enumerate() {
        let analytic = grads.get(vars[which]).cloned().unwrap_or_else(|| Tensor::zeros(input.rows(), input.cols()));
        for idx in 0..input.len() {
            let orig = input.data()[idx];
            work[which].data_mut()[idx] = orig + FD_EPS;
            let plus = eval(&work);
            work[which].data_mut()[idx] = orig - FD_EPS;
            let minus = eval(&work);
            work[which].data_mut()[idx] = orig;
            let numeric = (plus - minus) / (2.0 * FD_EPS);
            worst = worst.max(rel_err(analytic.data()[idx], numeric));
        }
    }
    worst
}
