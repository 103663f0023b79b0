//! Multiclass softmax objective.

/// Numerically stable softmax.
pub fn softmax(scores: &[f64]) -> Vec<f64> {
    let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = scores.iter().map(|s| (s - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

/// `-ln softmax(scores)[label]`.
pub fn multiclass_log_loss(scores: &[f64], label: usize) -> f64 {
    let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lse = max + scores.iter().map(|s| (s - max).exp()).sum::<f64>().ln();
    lse - scores[label]
}

/// Per-class gradient `p_c − 1[c = label]` and diagonal hessian
/// `p_c (1 − p_c)` of the log-loss with respect to the raw scores.
pub fn softmax_gradients(scores: &[f64], label: usize) -> (Vec<f64>, Vec<f64>) {
    let p = softmax(scores);
    let grad = p
        .iter()
        .enumerate()
        .map(|(c, &pc)| if c == label { pc - 1.0 } else { pc })
        .collect();
    let hess = p.iter().map(|&pc| pc * (1.0 - pc)).collect();
    (grad, hess)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn softmax_is_shift_invariant() {
        let a = softmax(&[0.0, 1.0, 0.0]);
        let b = softmax(&[1000.0, 1001.0, 1000.0]);
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-15);
        }
        let e = 1f64.exp();
        assert!((a[1] - e / (2.0 + e)).abs() < 1e-15);
    }

    #[test]
    fn gradients_sum_to_zero() {
        let (g, h) = softmax_gradients(&[0.3, -1.2, 2.0, 0.0], 2);
        assert!(g.iter().sum::<f64>().abs() < 1e-15);
        assert!(h.iter().all(|&x| (0.0..=0.25).contains(&x)));
    }
}
