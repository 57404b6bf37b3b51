//! Adam/AdamW over a flat parameter vector with linear warmup and decay.

use crate::recipe::{Optimizer, TrainRecipe};

const BETA1: f32 = 0.9;
const BETA2: f32 = 0.999;
const EPS: f32 = 1e-8;

/// Learning rate at `step` (0-based): linear warmup over `warmup` steps,
/// then linear decay to zero at `total`.
pub fn scheduled_lr(base: f64, step: usize, warmup: usize, total: usize) -> f64 {
    if warmup > 0 && step < warmup {
        return base * (step + 1) as f64 / warmup as f64;
    }
    let span = total.saturating_sub(warmup).max(1) as f64;
    let done = step.saturating_sub(warmup) as f64;
    base * (1.0 - done / span).max(0.0)
}

pub struct Adam {
    kind: Optimizer,
    lr: f64,
    weight_decay: f32,
    warmup: usize,
    total: usize,
    step: usize,
    m: Vec<f32>,
    v: Vec<f32>,
}

impl Adam {
    pub fn new(recipe: &TrainRecipe, params: usize, total_steps: usize) -> Self {
        Adam {
            kind: recipe.optimizer,
            lr: recipe.learning_rate,
            weight_decay: recipe.weight_decay as f32,
            warmup: recipe.warmup_steps,
            total: total_steps,
            step: 0,
            m: vec![0.0; params],
            v: vec![0.0; params],
        }
    }

    pub fn current_lr(&self) -> f64 {
        scheduled_lr(self.lr, self.step, self.warmup, self.total)
    }

    /// Apply one dense update.
    pub fn update(&mut self, params: &mut [f32], grad: &[f32]) {
        let lr = self.current_lr() as f32;
        self.step += 1;
        let t = self.step as i32;
        let c1 = 1.0 - BETA1.powi(t);
        let c2 = 1.0 - BETA2.powi(t);
        for i in 0..params.len() {
            let mut g = grad[i];
            if self.kind == Optimizer::Adam && self.weight_decay > 0.0 {
                g += self.weight_decay * params[i];
            }
            self.m[i] = BETA1 * self.m[i] + (1.0 - BETA1) * g;
            self.v[i] = BETA2 * self.v[i] + (1.0 - BETA2) * g * g;
            let mhat = self.m[i] / c1;
            let vhat = self.v[i] / c2;
            params[i] -= lr * mhat / (vhat.sqrt() + EPS);
            if self.kind == Optimizer::AdamW && self.weight_decay > 0.0 {
                params[i] -= lr * self.weight_decay * params[i];
            }
        }
    }
}

/// Number of optimizer steps for `n` examples.
pub fn total_steps(n: usize, recipe: &TrainRecipe) -> usize {
    n.div_ceil(recipe.batch_size) * recipe.epochs as usize
}

#[cfg(test)]
mod tests {
    use super::*;
    use goalcoach_core::backend::BackendKind;

    #[test]
    fn schedule_shape() {
        assert_eq!(scheduled_lr(1.0, 0, 4, 10), 0.25);
        assert_eq!(scheduled_lr(1.0, 3, 4, 10), 1.0);
        assert_eq!(scheduled_lr(1.0, 4, 4, 10), 1.0);
        assert!((scheduled_lr(1.0, 7, 4, 10) - 0.5).abs() < 1e-12);
        assert_eq!(scheduled_lr(1.0, 10, 4, 10), 0.0);
        assert_eq!(scheduled_lr(2.0, 0, 0, 4), 2.0);
    }

    #[test]
    fn minimizes_a_quadratic() {
        let mut r = TrainRecipe::cpu_small(BackendKind::EmpathyRegressor);
        r.learning_rate = 0.1;
        let steps = 500;
        let mut opt = Adam::new(&r, 2, steps);
        let mut p = vec![3.0f32, -2.0];
        for _ in 0..steps {
            let g = vec![2.0 * (p[0] - 1.0), 2.0 * (p[1] + 0.5)];
            opt.update(&mut p, &g);
        }
        assert!((p[0] - 1.0).abs() < 0.05 && (p[1] + 0.5).abs() < 0.05, "{p:?}");
    }
}
