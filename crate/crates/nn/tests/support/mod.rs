#![allow(dead_code)]

use mrisr_nn::{Tape, Tensor, Var};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn random(shape: &[usize], seed: u64) -> Tensor<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = shape.iter().product();
    Tensor::from_vec(shape, (0..n).map(|_| rng.random::<f64>() * 2.0 - 1.0).collect()).unwrap()
}

/// Reduces an op output to a scalar with fixed random weights so every output
/// entry contributes a distinct coefficient: `L = mean((y - r)^2)` expanded
/// through a constant offset.
pub fn probe_loss(tape: &Tape<f64>, y: Var, seed: u64) -> Var {
    let shape = tape.value(y).shape().to_vec();
    let r = tape.constant(random(&shape, seed ^ 0x5eed));
    let d = tape.add(y, r).unwrap();
    tape.mean_sq_to(d, 0.0)
}

/// Largest elementwise relative error between analytic and central-difference
/// gradients of `f` at `inputs[which]`.
pub fn check<F>(inputs: &[Tensor<f64>], which: usize, f: F) -> f64
where
    F: Fn(&Tape<f64>, &[Var]) -> Var,
{
    let tape = Tape::new();
    let vars: Vec<Var> = inputs
        .iter()
        .enumerate()
        .map(|(i, t)| if i == which { tape.param(t.clone()) } else { tape.constant(t.clone()) })
        .collect();
    let loss = f(&tape, &vars);
    let grads = tape.backward(loss).unwrap();
    let analytic = grads.get(vars[which]).cloned().unwrap_or_else(|| Tensor::zeros(inputs[which].shape()));

    let eval = |t: Tensor<f64>| {
        let mut ins = inputs.to_vec();
        ins[which] = t;
        let tape = Tape::new();
        let vars: Vec<Var> = ins.into_iter().map(|t| tape.constant(t)).collect();
        let loss = f(&tape, &vars);
        let v = tape.value(loss).data()[0];
        v
    };
    let h = 1e-6;
    let mut worst: f64 = 0.0;
    for i in 0..inputs[which].numel() {
        let mut plus = inputs[which].clone();
        plus.data_mut()[i] += h;
        let mut minus = inputs[which].clone();
        minus.data_mut()[i] -= h;
        let numeric = (eval(plus) - eval(minus)) / (2.0 * h);
        let a = analytic.data()[i];
        let rel = (a - numeric).abs() / a.abs().max(numeric.abs()).max(1e-4);
        worst = worst.max(rel);
    }
    worst
}
