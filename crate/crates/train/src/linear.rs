//! Sparse linear models with softmax, sigmoid or squared-error heads.

use rand::seq::SliceRandom;
use rand_chacha::ChaCha8Rng;

use crate::optim::{total_steps, Adam};
use crate::recipe::TrainRecipe;

#[derive(Debug, Clone, PartialEq)]
pub enum Target {
    /// Index of the gold class.
    Class(usize),
    /// One flag per output.
    Labels(Vec<bool>),
    /// One real value per output.
    Values(Vec<f32>),
}

/// `outputs` scores per example: `W x + b`, binary features.
#[derive(Debug, Clone, PartialEq)]
pub struct Linear {
    pub features: usize,
    pub outputs: usize,
    /// Row-major `features x outputs`, followed by `outputs` biases.
    pub weights: Vec<f32>,
}

impl Linear {
    pub fn zeros(features: usize, outputs: usize) -> Self {
        Linear {
            features,
            outputs,
            weights: vec![0.0; (features + 1) * outputs],
        }
    }

    pub fn from_weights(features: usize, outputs: usize, weights: Vec<f32>) -> Option<Self> {
        (weights.len() == (features + 1) * outputs).then_some(Linear {
            features,
            outputs,
            weights,
        })
    }

    pub fn scores(&self, x: &[u32]) -> Vec<f32> {
        let bias = self.features * self.outputs;
        let mut s = self.weights[bias..bias + self.outputs].to_vec();
        for &f in x {
            let row = f as usize * self.outputs;
            for (o, v) in s.iter_mut().enumerate() {
                *v += self.weights[row + o];
            }
        }
        s
    }

    fn add_grad(&self, grad: &mut [f32], x: &[u32], d: &[f32]) {
        let bias = self.features * self.outputs;
        for o in 0..self.outputs {
            grad[bias + o] += d[o];
        }
        for &f in x {
            let row = f as usize * self.outputs;
            for o in 0..self.outputs {
                grad[row + o] += d[o];
            }
        }
    }
}

pub fn softmax(scores: &[f32]) -> Vec<f32> {
    let max = scores.iter().cloned().fold(f32::NEG_INFINITY, f32::max);
    let exps: Vec<f32> = scores.iter().map(|s| (s - max).exp()).collect();
    let z: f32 = exps.iter().sum();
    exps.iter().map(|e| e / z).collect()
}

pub fn sigmoid(x: f32) -> f32 {
    1.0 / (1.0 + (-x).exp())
}

/// d(loss)/d(score) for one example.
fn output_grad(scores: &[f32], target: &Target) -> Vec<f32> {
    match target {
        Target::Class(c) => {
            let mut p = softmax(scores);
            p[*c] -= 1.0;
            p
        }
        Target::Labels(ls) => scores
            .iter()
            .zip(ls)
            .map(|(s, &l)| sigmoid(*s) - if l { 1.0 } else { 0.0 })
            .collect(),
        Target::Values(vs) => scores.iter().zip(vs).map(|(s, v)| s - v).collect(),
    }
}

/// Minibatch training with the recipe's optimizer, schedule, epochs and
/// batch size. Example order is reshuffled every epoch from `rng`.
pub fn fit(model: &mut Linear, data: &[(Vec<u32>, Target)], recipe: &TrainRecipe, rng: &mut ChaCha8Rng) {
    if data.is_empty() {
        return;
    }
    let mut opt = Adam::new(recipe, model.weights.len(), total_steps(data.len(), recipe));
    let mut grad = vec![0.0f32; model.weights.len()];
    let mut order: Vec<usize> = (0..data.len()).collect();
    for _ in 0..recipe.epochs {
        order.shuffle(rng);
        for batch in order.chunks(recipe.batch_size) {
            grad.iter_mut().for_each(|g| *g = 0.0);
            let scale = 1.0 / batch.len() as f32;
            for &i in batch {
                let (x, t) = &data[i];
                let d: Vec<f32> = output_grad(&model.scores(x), t).iter().map(|g| g * scale).collect();
                model.add_grad(&mut grad, x, &d);
            }
            opt.update(&mut model.weights, &grad);
        }
    }
}

pub fn argmax(xs: &[f32]) -> usize {
    let mut best = 0;
    for (i, x) in xs.iter().enumerate() {
        if *x > xs[best] {
            best = i;
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use goalcoach_core::backend::BackendKind;
    use rand::SeedableRng;

    #[test]
    fn learns_separable_classes() {
        let data: Vec<(Vec<u32>, Target)> = (0..40)
            .map(|i| (vec![(i % 2) as u32, 2], Target::Class(i % 2)))
            .collect();
        let mut m = Linear::zeros(3, 2);
        let mut r = TrainRecipe::cpu_small(BackendKind::Carryover);
        r.epochs = 20;
        fit(&mut m, &data, &r, &mut ChaCha8Rng::seed_from_u64(1));
        assert_eq!(argmax(&m.scores(&[0, 2])), 0);
        assert_eq!(argmax(&m.scores(&[1, 2])), 1);
    }

    #[test]
    fn regression_and_labels() {
        let data: Vec<(Vec<u32>, Target)> = (0..40)
            .map(|i| (vec![(i % 2) as u32], Target::Values(vec![if i % 2 == 0 { 0.5 } else { 1.5 }])))
            .collect();
        let mut m = Linear::zeros(2, 1);
        let mut r = TrainRecipe::cpu_small(BackendKind::EmpathyRegressor);
        r.epochs = 200;
        r.learning_rate = 0.05;
        fit(&mut m, &data, &r, &mut ChaCha8Rng::seed_from_u64(1));
        assert!((m.scores(&[0])[0] - 0.5).abs() < 0.1);
        assert!((m.scores(&[1])[0] - 1.5).abs() < 0.1);

        let data = vec![(vec![0], Target::Labels(vec![true, false])); 10];
        let mut m = Linear::zeros(1, 2);
        fit(&mut m, &data, &r, &mut ChaCha8Rng::seed_from_u64(1));
        let s = m.scores(&[0]);
        assert!(sigmoid(s[0]) > 0.5 && sigmoid(s[1]) < 0.5);
    }
}
