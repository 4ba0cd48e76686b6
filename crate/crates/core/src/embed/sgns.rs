use alloc::vec::Vec;

use super::EmbeddingTable;
use crate::{Error, Result};

pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + libm::exp(-x))
    } else {
        let e = libm::exp(x);
        e / (1.0 + e)
    }
}

/// `log σ(x)`, stable for large |x|.
pub fn log_sigmoid(x: f64) -> f64 {
    let softplus_neg = if x >= 0.0 { 0.0 } else { -x } + libm::log1p(libm::exp(-x.abs()));
    -softplus_neg
}

/// Row access to the two SGNS matrices. Implemented by [`EmbeddingTable`]
/// and by shared-memory tables used for multi-worker training.
pub trait RowStore {
    fn dim(&self) -> usize;
    fn rows(&self) -> usize;
    fn read_input(&self, row: usize, buf: &mut [f64]);
    fn read_output(&self, row: usize, buf: &mut [f64]);
    /// `input[row] += scale * delta`
    fn add_input(&mut self, row: usize, scale: f64, delta: &[f64]);
    /// `output[row] += scale * delta`
    fn add_output(&mut self, row: usize, scale: f64, delta: &[f64]);
}

impl RowStore for EmbeddingTable {
    fn dim(&self) -> usize {
        self.dim
    }

    fn rows(&self) -> usize {
        self.vocab.len()
    }

    fn read_input(&self, row: usize, buf: &mut [f64]) {
        buf.copy_from_slice(self.input_row(row));
    }

    fn read_output(&self, row: usize, buf: &mut [f64]) {
        buf.copy_from_slice(self.output_row(row));
    }

    fn add_input(&mut self, row: usize, scale: f64, delta: &[f64]) {
        for (x, d) in self.input_row_mut(row).iter_mut().zip(delta) {
            *x += scale * d;
        }
    }

    fn add_output(&mut self, row: usize, scale: f64, delta: &[f64]) {
        for (x, d) in self.output_row_mut(row).iter_mut().zip(delta) {
            *x += scale * d;
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct SgnsScratch {
    center: Vec<f64>,
    targets: Vec<f64>,
    coeffs: Vec<f64>,
    grad_center: Vec<f64>,
}

impl SgnsScratch {
    pub fn new(dim: usize) -> Self {
        SgnsScratch {
            center: alloc::vec![0.0; dim],
            targets: Vec::new(),
            coeffs: Vec::new(),
            grad_center: alloc::vec![0.0; dim],
        }
    }
}

/// One SGNS update for `(center, context)` with the given negatives.
///
/// Loss is `-log σ(u_ctx·v_c) - Σ log σ(-u_neg·v_c)`, evaluated before the
/// update. All gradients are taken at the pre-update point: `v_c` moves by
/// `-lr Σ g_j u_j` and each `u_j` by `-lr g_j v_c`, where
/// `g_j = σ(u_j·v_c) - label_j`. Repeated negatives accumulate.
pub fn sgns_step_store<S: RowStore + ?Sized>(
    store: &mut S,
    center: usize,
    context: usize,
    negatives: &[usize],
    lr: f64,
    scratch: &mut SgnsScratch,
) -> f64 {
    let dim = store.dim();
    let n = 1 + negatives.len();
    scratch.center.resize(dim, 0.0);
    scratch.grad_center.clear();
    scratch.grad_center.resize(dim, 0.0);
    scratch.targets.resize(n * dim, 0.0);
    scratch.coeffs.clear();

    store.read_input(center, &mut scratch.center);
    let mut loss = 0.0;
    for (j, &target) in core::iter::once(&context).chain(negatives).enumerate() {
        let u = &mut scratch.targets[j * dim..(j + 1) * dim];
        store.read_output(target, u);
        let s = super::dot(u, &scratch.center);
        let label = if j == 0 { 1.0 } else { 0.0 };
        loss -= if j == 0 { log_sigmoid(s) } else { log_sigmoid(-s) };
        let g = sigmoid(s) - label;
        scratch.coeffs.push(g);
        for (acc, x) in scratch.grad_center.iter_mut().zip(u.iter()) {
            *acc += g * x;
        }
    }
    for (j, &target) in core::iter::once(&context).chain(negatives).enumerate() {
        store.add_output(target, -lr * scratch.coeffs[j], &scratch.center);
    }
    store.add_input(center, -lr, &scratch.grad_center);
    loss
}

/// Checked [`sgns_step_store`] on an [`EmbeddingTable`].
pub fn sgns_step(
    center: usize,
    context: usize,
    negatives: &[usize],
    lr: f64,
    table: &mut EmbeddingTable,
) -> Result<f64> {
    let len = table.rows();
    for &i in core::iter::once(&center).chain(Some(&context)).chain(negatives) {
        if i >= len {
            return Err(Error::IndexOutOfRange { index: i, len });
        }
    }
    let mut scratch = SgnsScratch::new(table.dim);
    Ok(sgns_step_store(table, center, context, negatives, lr, &mut scratch))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::vocab::{VocabEntry, Vocabulary};
    use alloc::vec;

    fn vocab(n: usize) -> Vocabulary {
        let entries = (0..n)
            .map(|i| VocabEntry { word: alloc::format!("w{i}"), count: 1, is_formula: false })
            .collect();
        Vocabulary::from_entries(entries, n as u64)
    }

    #[test]
    fn zero_vectors_give_log_two_per_target() {
        let mut t = EmbeddingTable::zeros(vocab(4), 3);
        let loss = sgns_step(0, 1, &[2, 3], 0.1, &mut t).unwrap();
        assert!((loss - 3.0 * core::f64::consts::LN_2).abs() < 1e-12);
    }

    #[test]
    fn confident_pair_has_tiny_loss() {
        let mut t = EmbeddingTable::zeros(vocab(3), 1);
        t.input = vec![1.0, 0.0, 0.0];
        t.output = vec![0.0, 10.0, -10.0];
        let loss = sgns_step(0, 1, &[2], 0.0, &mut t).unwrap();
        // 2 * ln(1 + e^-10)
        assert!((loss - 9.0799e-5).abs() < 1e-8, "{loss}");
    }

    #[test]
    fn rejects_out_of_range() {
        let mut t = EmbeddingTable::zeros(vocab(2), 2);
        assert_eq!(
            sgns_step(0, 5, &[1], 0.1, &mut t),
            Err(Error::IndexOutOfRange { index: 5, len: 2 })
        );
    }

    #[test]
    fn stable_log_sigmoid() {
        assert!((log_sigmoid(0.0) + core::f64::consts::LN_2).abs() < 1e-15);
        assert!(log_sigmoid(-800.0).is_finite());
        assert_eq!(log_sigmoid(800.0), 0.0);
        assert!((sigmoid(-800.0)).abs() < 1e-300);
    }
}
