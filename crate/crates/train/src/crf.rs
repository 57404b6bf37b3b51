//! Linear-chain CRF over BIO labels. Transitions that would produce an
//! ill-formed sequence (an `I-x` not continuing `x`) are excluded from the
//! model, so decoded sequences are always well formed.

use goalcoach_core::bio::BioLabel;
use rand::seq::SliceRandom;
use rand_chacha::ChaCha8Rng;

use crate::features::{token_features, FeatureIndex};
use crate::linear::Linear;
use crate::optim::{total_steps, Adam};
use crate::recipe::TrainRecipe;

pub fn labels() -> Vec<BioLabel> {
    BioLabel::all()
}

fn allowed(prev: Option<BioLabel>, next: BioLabel) -> bool {
    match prev {
        Some(p) => p.allows_next(next),
        None => !matches!(next, BioLabel::I(_)),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Crf {
    pub features: FeatureIndex,
    pub emission: Linear,
    /// `(L + 1) x L`; the last row scores the first label.
    pub transitions: Vec<f32>,
}

fn log_sum_exp(xs: &[f64]) -> f64 {
    let max = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + xs.iter().map(|x| (x - max).exp()).sum::<f64>().ln()
}

impl Crf {
    pub fn new(features: FeatureIndex) -> Self {
        let l = labels().len();
        let emission = Linear::zeros(features.len(), l);
        Crf {
            features,
            emission,
            transitions: vec![0.0; (l + 1) * l],
        }
    }

    fn n_labels(&self) -> usize {
        self.emission.outputs
    }

    /// Transition score from `prev` (None = start) to `next`, or -inf.
    fn trans(&self, prev: Option<usize>, next: usize) -> f64 {
        let all = labels();
        if !allowed(prev.map(|p| all[p]), all[next]) {
            return f64::NEG_INFINITY;
        }
        let row = prev.unwrap_or(self.n_labels());
        self.transitions[row * self.n_labels() + next] as f64
    }

    fn emissions(&self, xs: &[Vec<u32>]) -> Vec<Vec<f64>> {
        xs.iter()
            .map(|x| self.emission.scores(x).into_iter().map(f64::from).collect())
            .collect()
    }

    pub fn encode(&self, tokens: &[String]) -> Vec<Vec<u32>> {
        (0..tokens.len())
            .map(|i| self.features.encode(&token_features(tokens, i)))
            .collect()
    }

    /// Highest-scoring well-formed label sequence.
    pub fn viterbi(&self, xs: &[Vec<u32>]) -> Vec<BioLabel> {
        let n = xs.len();
        if n == 0 {
            return Vec::new();
        }
        let l = self.n_labels();
        let em = self.emissions(xs);
        let mut score: Vec<f64> = (0..l).map(|y| self.trans(None, y) + em[0][y]).collect();
        let mut back = vec![vec![0usize; l]; n];
        for t in 1..n {
            let mut next = vec![f64::NEG_INFINITY; l];
            for y in 0..l {
                for p in 0..l {
                    let s = score[p] + self.trans(Some(p), y);
                    if s > next[y] {
                        next[y] = s;
                        back[t][y] = p;
                    }
                }
                next[y] += em[t][y];
            }
            score = next;
        }
        let mut best = 0;
        for y in 0..l {
            if score[y] > score[best] {
                best = y;
            }
        }
        let mut path = vec![best; n];
        for t in (1..n).rev() {
            path[t - 1] = back[t][path[t]];
        }
        let all = labels();
        path.into_iter().map(|y| all[y]).collect()
    }

    /// Negative log-likelihood of `gold`, accumulating its gradient.
    fn nll_grad(&self, xs: &[Vec<u32>], gold: &[usize], grad: &mut [f32], scale: f32) -> f64 {
        let n = xs.len();
        let l = self.n_labels();
        let em = self.emissions(xs);
        let mut alpha = vec![vec![f64::NEG_INFINITY; l]; n];
        for y in 0..l {
            alpha[0][y] = self.trans(None, y) + em[0][y];
        }
        for t in 1..n {
            for y in 0..l {
                let terms: Vec<f64> = (0..l).map(|p| alpha[t - 1][p] + self.trans(Some(p), y)).collect();
                alpha[t][y] = log_sum_exp(&terms) + em[t][y];
            }
        }
        let mut beta = vec![vec![0.0f64; l]; n];
        for t in (0..n.saturating_sub(1)).rev() {
            for y in 0..l {
                let terms: Vec<f64> = (0..l)
                    .map(|nx| self.trans(Some(y), nx) + em[t + 1][nx] + beta[t + 1][nx])
                    .collect();
                beta[t][y] = log_sum_exp(&terms);
            }
        }
        let log_z = log_sum_exp(&alpha[n - 1]);

        let mut gold_score = self.trans(None, gold[0]) + em[0][gold[0]];
        for t in 1..n {
            gold_score += self.trans(Some(gold[t - 1]), gold[t]) + em[t][gold[t]];
        }

        let bias = self.emission.features * l;
        let tbase = self.emission.weights.len();
        for t in 0..n {
            let mut d = vec![0.0f32; l];
            for y in 0..l {
                d[y] = ((alpha[t][y] + beta[t][y] - log_z).exp()) as f32;
            }
            d[gold[t]] -= 1.0;
            for y in 0..l {
                let g = d[y] * scale;
                if g == 0.0 {
                    continue;
                }
                grad[bias + y] += g;
                for &f in &xs[t] {
                    grad[f as usize * l + y] += g;
                }
            }
        }
        for y in 0..l {
            let p = (self.trans(None, y) + em[0][y] + beta[0][y] - log_z).exp() as f32;
            grad[tbase + l * l + y] += p * scale;
        }
        grad[tbase + l * l + gold[0]] -= scale;
        for t in 1..n {
            for p in 0..l {
                if alpha[t - 1][p] == f64::NEG_INFINITY {
                    continue;
                }
                for y in 0..l {
                    let tr = self.trans(Some(p), y);
                    if tr == f64::NEG_INFINITY {
                        continue;
                    }
                    let m = (alpha[t - 1][p] + tr + em[t][y] + beta[t][y] - log_z).exp() as f32;
                    grad[tbase + p * l + y] += m * scale;
                }
            }
            grad[tbase + gold[t - 1] * l + gold[t]] -= scale;
        }
        log_z - gold_score
    }

    /// Minibatch maximum-likelihood training. Returns the mean training
    /// loss of the last epoch.
    pub fn fit(&mut self, data: &[(Vec<Vec<u32>>, Vec<usize>)], recipe: &TrainRecipe, rng: &mut ChaCha8Rng) -> f64 {
        let data: Vec<&(Vec<Vec<u32>>, Vec<usize>)> = data.iter().filter(|(x, _)| !x.is_empty()).collect();
        if data.is_empty() {
            return 0.0;
        }
        let n_emit = self.emission.weights.len();
        let mut params: Vec<f32> = self.emission.weights.iter().chain(&self.transitions).copied().collect();
        let mut opt = Adam::new(recipe, params.len(), total_steps(data.len(), recipe));
        let mut grad = vec![0.0f32; params.len()];
        let mut order: Vec<usize> = (0..data.len()).collect();
        let mut last = 0.0;
        for _ in 0..recipe.epochs {
            order.shuffle(rng);
            let mut total = 0.0;
            for batch in order.chunks(recipe.batch_size) {
                grad.iter_mut().for_each(|g| *g = 0.0);
                let scale = 1.0 / batch.len() as f32;
                for &i in batch {
                    let (x, y) = data[i];
                    total += self.nll_grad(x, y, &mut grad, scale);
                }
                opt.update(&mut params, &grad);
                self.emission.weights.copy_from_slice(&params[..n_emit]);
                self.transitions.copy_from_slice(&params[n_emit..]);
            }
            last = total / data.len() as f64;
        }
        last
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use goalcoach_core::backend::BackendKind;
    use goalcoach_core::bio::validate_labels;
    use goalcoach_core::SlotName;
    use rand::SeedableRng;

    fn brute_log_z(crf: &Crf, xs: &[Vec<u32>]) -> f64 {
        let l = crf.n_labels();
        let em = crf.emissions(xs);
        let n = xs.len();
        let mut scores = Vec::new();
        let mut path = vec![0usize; n];
        loop {
            let mut s = crf.trans(None, path[0]) + em[0][path[0]];
            for t in 1..n {
                s += crf.trans(Some(path[t - 1]), path[t]) + em[t][path[t]];
            }
            scores.push(s);
            let mut t = 0;
            loop {
                if t == n {
                    return log_sum_exp(&scores);
                }
                path[t] += 1;
                if path[t] < l {
                    break;
                }
                path[t] = 0;
                t += 1;
            }
        }
    }

    fn random_crf(seed: u64) -> Crf {
        use rand::Rng;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut crf = Crf::new(FeatureIndex::from(vec!["a".to_string(), "b".to_string()]));
        for w in crf.emission.weights.iter_mut().chain(crf.transitions.iter_mut()) {
            *w = rng.gen_range(-1.0..1.0);
        }
        crf
    }

    #[test]
    fn partition_matches_enumeration() {
        let crf = random_crf(3);
        let xs = vec![vec![0], vec![1], vec![0, 1]];
        let mut grad = vec![0.0; crf.emission.weights.len() + crf.transitions.len()];
        let nll = crf.nll_grad(&xs, &[0, 1, 2], &mut grad, 1.0);
        let em = crf.emissions(&xs);
        let gold = crf.trans(None, 0) + em[0][0] + crf.trans(Some(0), 1) + em[1][1] + crf.trans(Some(1), 2) + em[2][2];
        assert!((nll - (brute_log_z(&crf, &xs) - gold)).abs() < 1e-6);
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let crf = random_crf(4);
        let xs = vec![vec![0], vec![1, 0]];
        let gold = [1, 2];
        let mut grad = vec![0.0f32; crf.emission.weights.len() + crf.transitions.len()];
        crf.nll_grad(&xs, &gold, &mut grad, 1.0);
        let n_emit = crf.emission.weights.len();
        let l = crf.n_labels();
        for idx in [0, 1, 5, n_emit - 3, n_emit + l + 2, n_emit + l * l + 1, n_emit + l + 2] {
            let mut plus = crf.clone();
            let mut minus = crf.clone();
            let h = 1e-2f32;
            if idx < n_emit {
                plus.emission.weights[idx] += h;
                minus.emission.weights[idx] -= h;
            } else {
                plus.transitions[idx - n_emit] += h;
                minus.transitions[idx - n_emit] -= h;
            }
            let mut scratch = vec![0.0f32; grad.len()];
            let fd = (plus.nll_grad(&xs, &gold, &mut scratch, 1.0) - minus.nll_grad(&xs, &gold, &mut scratch, 1.0))
                / (2.0 * h as f64);
            assert!((fd - grad[idx] as f64).abs() < 1e-2, "param {idx}: fd {fd} vs {}", grad[idx]);
        }
    }

    #[test]
    fn learns_and_decodes_well_formed() {
        let tokens: Vec<String> = "I will walk 30 minutes".split(' ').map(String::from).collect();
        let gold = vec![
            BioLabel::O,
            BioLabel::O,
            BioLabel::B(SlotName::Activity),
            BioLabel::B(SlotName::Duration),
            BioLabel::I(SlotName::Duration),
        ];
        let feats: Vec<Vec<String>> = (0..tokens.len()).map(|i| token_features(&tokens, i)).collect();
        let mut crf = Crf::new(FeatureIndex::build(&feats, 1));
        let x = crf.encode(&tokens);
        let y: Vec<usize> = gold.iter().map(|l| l.index()).collect();
        let mut r = TrainRecipe::cpu_small(BackendKind::SlotTagger);
        r.epochs = 30;
        crf.fit(&[(x.clone(), y)], &r, &mut ChaCha8Rng::seed_from_u64(0));
        let out = crf.viterbi(&x);
        assert_eq!(out, gold);
        let rc = random_crf(9);
        validate_labels(&rc.viterbi(&rc.encode(&tokens))).unwrap();
    }

    proptest::proptest! {
        #[test]
        fn viterbi_is_always_well_formed(seed in 0u64..500, len in 1usize..12) {
            let crf = random_crf(seed);
            let xs: Vec<Vec<u32>> = (0..len).map(|i| vec![(i % 2) as u32]).collect();
            let out = crf.viterbi(&xs);
            proptest::prop_assert_eq!(out.len(), len);
            proptest::prop_assert!(validate_labels(&out).is_ok());
        }
    }
}

