//! Ordered `(id, score)` lists shared by matching, retrieval and recounting.
//!
//! Every list produced by this crate is sorted by score descending, with ties
//! broken by id ascending, so that identical inputs always give identical
//! output.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scored<I = String> {
    pub id: I,
    pub score: f64,
}

impl<I> Scored<I> {
    pub fn new(id: I, score: f64) -> Self {
        Self { id, score }
    }
}

/// Descending score, ascending id. `-0.0` and `0.0` compare equal.
pub fn rank_order<I: Ord>(a: &Scored<I>, b: &Scored<I>) -> Ordering {
    (b.score + 0.0)
        .total_cmp(&(a.score + 0.0))
        .then_with(|| a.id.cmp(&b.id))
}

pub fn sort_ranked<I: Ord>(items: &mut [Scored<I>]) {
    items.sort_by(rank_order);
}

/// Sorts and keeps the first `k` entries.
pub fn top_k<I: Ord>(mut items: Vec<Scored<I>>, k: usize) -> Vec<Scored<I>> {
    if k < items.len() && k > 0 {
        items.select_nth_unstable_by(k - 1, rank_order);
        items.truncate(k);
    } else if k == 0 {
        items.clear();
    }
    sort_ranked(&mut items);
    items
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct RankedList {
    pub items: Vec<Scored<String>>,
}

impl RankedList {
    pub fn from_unsorted(mut items: Vec<Scored<String>>) -> Self {
        sort_ranked(&mut items);
        Self { items }
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.items.iter().map(|s| s.id.as_str())
    }

    pub fn truncate(&mut self, n: usize) {
        self.items.truncate(n);
    }

    /// True when scores are non-increasing and ties are in id order.
    pub fn is_canonical(&self) -> bool {
        self.items
            .windows(2)
            .all(|w| rank_order(&w[0], &w[1]) != Ordering::Greater)
    }
}
