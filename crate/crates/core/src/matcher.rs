//! Longest-match phrase lookup over token sequences.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

#[derive(Debug, Clone)]
pub struct PhraseMatcher<V> {
    by_first: BTreeMap<String, Vec<(Vec<String>, V)>>,
    len: usize,
}

impl<V> Default for PhraseMatcher<V> {
    fn default() -> Self {
        PhraseMatcher { by_first: BTreeMap::new(), len: 0 }
    }
}

impl<V> PhraseMatcher<V> {
    pub fn new() -> Self {
        Self::default()
    }

    /// Inserts a phrase; a duplicate phrase keeps its first value.
    pub fn insert(&mut self, phrase: Vec<String>, value: V) -> bool {
        let Some(first) = phrase.first().cloned() else {
            return false;
        };
        let bucket = self.by_first.entry(first).or_default();
        if bucket.iter().any(|(p, _)| *p == phrase) {
            return false;
        }
        let at = bucket.partition_point(|(p, _)| p.len() >= phrase.len());
        bucket.insert(at, (phrase, value));
        self.len += 1;
        true
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Longest phrase starting at `keys[start]`, as (token length, value).
    pub fn longest_at<S: AsRef<str>>(&self, keys: &[S], start: usize) -> Option<(usize, &V)> {
        let bucket = self.by_first.get(keys.get(start)?.as_ref())?;
        bucket.iter().find_map(|(phrase, v)| {
            let end = start + phrase.len();
            (end <= keys.len()
                && phrase.iter().zip(&keys[start..end]).all(|(p, k)| p == k.as_ref()))
            .then_some((phrase.len(), v))
        })
    }

    /// Greedy leftmost-longest scan; returns (start, end, value) spans.
    pub fn scan<'a, S: AsRef<str>>(&'a self, keys: &[S]) -> Vec<(usize, usize, &'a V)> {
        let mut out = Vec::new();
        let mut i = 0;
        while i < keys.len() {
            match self.longest_at(keys, i) {
                Some((n, v)) => {
                    out.push((i, i + n, v));
                    i += n;
                }
                None => i += 1,
            }
        }
        out
    }
}
