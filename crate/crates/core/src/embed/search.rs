use alloc::string::String;
use alloc::vec::Vec;
use core::cmp::Ordering;

use super::Embeddings;
use crate::{Error, Result};

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn l2_norm(a: &[f64]) -> f64 {
    libm::sqrt(dot(a, a))
}

/// `u·v / (‖u‖‖v‖)`, clamped to `[-1, 1]`.
pub fn cosine_similarity(u: &[f64], v: &[f64]) -> Result<f64> {
    if u.len() != v.len() {
        return Err(Error::DimensionMismatch { expected: u.len(), found: v.len() });
    }
    let (nu, nv) = (l2_norm(u), l2_norm(v));
    if nu == 0.0 || nv == 0.0 || !nu.is_finite() || !nv.is_finite() {
        return Err(Error::DegenerateVector);
    }
    Ok((dot(u, v) / (nu * nv)).clamp(-1.0, 1.0))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Neighbor {
    pub word: String,
    pub similarity: f64,
}

/// The `k` most cosine-similar words to `query`, most similar first, ties
/// by ascending word. Rows with zero norm and words for which `exclude`
/// returns true are skipped. Returns fewer than `k` when fewer are
/// eligible.
pub fn nearest_neighbors(
    emb: &Embeddings,
    query: &[f64],
    k: usize,
    exclude: impl Fn(&str) -> bool,
) -> Result<Vec<Neighbor>> {
    if k == 0 {
        return Err(Error::InvalidParameter(String::from("k must be >= 1")));
    }
    if query.len() != emb.dim() {
        return Err(Error::DimensionMismatch { expected: emb.dim(), found: query.len() });
    }
    let qn = l2_norm(query);
    if qn == 0.0 || !qn.is_finite() {
        return Err(Error::DegenerateVector);
    }
    let mut scored: Vec<(f64, usize)> = (0..emb.len())
        .filter(|&i| emb.norm(i) > 0.0 && !exclude(emb.word(i)))
        .map(|i| ((dot(query, emb.row(i)) / (qn * emb.norm(i))).clamp(-1.0, 1.0), i))
        .collect();
    let order = |a: &(f64, usize), b: &(f64, usize)| -> Ordering {
        b.0.total_cmp(&a.0).then_with(|| emb.word(a.1).cmp(emb.word(b.1)))
    };
    if scored.len() > k {
        scored.select_nth_unstable_by(k - 1, order);
        scored.truncate(k);
    }
    scored.sort_unstable_by(order);
    Ok(scored
        .into_iter()
        .map(|(similarity, i)| Neighbor { word: String::from(emb.word(i)), similarity })
        .collect())
}
