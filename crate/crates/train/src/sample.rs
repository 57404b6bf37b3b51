//! Top-k / top-p sampling over a categorical distribution.

use goalcoach_core::backend::DecodeParams;
use rand::{Rng, RngCore};

/// Index drawn from `probs` under `decode`; greedy decoding takes the
/// argmax (lowest index on ties).
pub fn choose(probs: &[f64], decode: &DecodeParams, rng: &mut dyn RngCore) -> Option<usize> {
    if probs.is_empty() {
        return None;
    }
    let mut order: Vec<usize> = (0..probs.len()).collect();
    order.sort_by(|&a, &b| probs[b].total_cmp(&probs[a]).then(a.cmp(&b)));
    if !decode.sample {
        return Some(order[0]);
    }
    order.truncate(decode.top_k.max(1));
    let total: f64 = order.iter().map(|&i| probs[i]).sum();
    let mut kept = Vec::new();
    let mut mass = 0.0;
    for &i in &order {
        kept.push(i);
        mass += probs[i] / total;
        if mass >= decode.top_p {
            break;
        }
    }
    let z: f64 = kept.iter().map(|&i| probs[i]).sum();
    if z <= 0.0 {
        return Some(kept[0]);
    }
    let mut u = rng.gen::<f64>() * z;
    for &i in &kept {
        u -= probs[i];
        if u < 0.0 {
            return Some(i);
        }
    }
    kept.last().copied()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn respects_top_k_and_top_p() {
        let probs = [0.5, 0.3, 0.15, 0.05];
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let d = DecodeParams {
            sample: true,
            top_k: 2,
            top_p: 1.0,
            max_tokens: 1,
        };
        for _ in 0..200 {
            assert!(choose(&probs, &d, &mut rng).unwrap() < 2);
        }
        let d = DecodeParams { top_k: 4, top_p: 0.5, ..d };
        for _ in 0..50 {
            assert_eq!(choose(&probs, &d, &mut rng), Some(0));
        }
        assert_eq!(choose(&[0.1, 0.7, 0.2], &DecodeParams::greedy(1), &mut rng), Some(1));
        assert_eq!(choose(&[], &d, &mut rng), None);
    }
}
