//! Shared InfoNCE kernel.

/// Weighted sum of rows `(buffer, row, weight)` drawn from a list of feature
/// buffers that share a channel count.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Combo {
    terms: Vec<(usize, usize, f64)>,
}

impl Combo {
    pub(crate) fn new(terms: Vec<(usize, usize, f64)>) -> Self {
        Combo { terms }
    }

    pub(crate) fn single(buf: usize, row: usize) -> Self {
        Combo {
            terms: vec![(buf, row, 1.0)],
        }
    }

    pub(crate) fn eval(&self, bufs: &[&[f64]], channels: usize) -> Vec<f64> {
        let mut out = vec![0.0; channels];
        for &(b, r, w) in &self.terms {
            let row = &bufs[b][r * channels..(r + 1) * channels];
            out.iter_mut().zip(row).for_each(|(o, x)| *o += w * x);
        }
        out
    }

    fn scatter(&self, grad: &[f64], grads: &mut [Vec<f64>], channels: usize) {
        for &(b, r, w) in &self.terms {
            let row = &mut grads[b][r * channels..(r + 1) * channels];
            row.iter_mut().zip(grad).for_each(|(g, x)| *g += w * x);
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    y.iter_mut().zip(x).for_each(|(y, x)| *y += alpha * x);
}

/// Mean over rows `t` of
/// `−log( exp(a_t·b_t/τ) / (exp(a_t·b_t/τ) + Σ_{k≠t} exp(a_t·c_k/τ)) )`
/// where `c` is `negatives`, or `positives` when `negatives` is `None`.
///
/// Returns the loss and one gradient buffer per input buffer.
pub(crate) fn infonce(
    bufs: &[&[f64]],
    channels: usize,
    anchors: &[Combo],
    positives: &[Combo],
    negatives: Option<&[Combo]>,
    tau: f64,
) -> (f64, Vec<Vec<f64>>) {
    let rows = anchors.len();
    debug_assert_eq!(rows, positives.len());
    let a: Vec<Vec<f64>> = anchors.iter().map(|c| c.eval(bufs, channels)).collect();
    let b: Vec<Vec<f64>> = positives.iter().map(|c| c.eval(bufs, channels)).collect();
    let neg_owned: Option<Vec<Vec<f64>>> = negatives.map(|ns| ns.iter().map(|c| c.eval(bufs, channels)).collect());
    let neg = neg_owned.as_ref().unwrap_or(&b);

    let mut grad_a = vec![vec![0.0; channels]; rows];
    let mut grad_b = vec![vec![0.0; channels]; rows];
    let mut grad_neg = vec![vec![0.0; channels]; rows];
    let scale = 1.0 / (rows as f64 * tau);
    let mut loss = 0.0;
    let mut logits = vec![0.0; rows];
    for t in 0..rows {
        for (k, l) in logits.iter_mut().enumerate() {
            *l = if k == t { dot(&a[t], &b[t]) } else { dot(&a[t], &neg[k]) } / tau;
        }
        let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let sum: f64 = logits.iter().map(|l| (l - max).exp()).sum();
        loss += max + sum.ln() - logits[t];
        for k in 0..rows {
            let p = (logits[k] - max).exp() / sum;
            if k == t {
                axpy((p - 1.0) * scale, &b[t], &mut grad_a[t]);
                axpy((p - 1.0) * scale, &a[t], &mut grad_b[t]);
            } else {
                axpy(p * scale, &neg[k], &mut grad_a[t]);
                axpy(p * scale, &a[t], &mut grad_neg[k]);
            }
        }
    }
    loss /= rows as f64;

    let mut grads: Vec<Vec<f64>> = bufs.iter().map(|b| vec![0.0; b.len()]).collect();
    for t in 0..rows {
        anchors[t].scatter(&grad_a[t], &mut grads, channels);
        positives[t].scatter(&grad_b[t], &mut grads, channels);
        match negatives {
            Some(ns) => ns[t].scatter(&grad_neg[t], &mut grads, channels),
            None => positives[t].scatter(&grad_neg[t], &mut grads, channels),
        }
    }
    (loss, grads)
}
