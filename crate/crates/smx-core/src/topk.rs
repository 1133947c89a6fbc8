//! Bounded top-K collection with deterministic tie-breaking.
//!
//! Workers fill local collectors and merge them pairwise; because insertion
//! order never affects the retained set (ties break on the lexicographic
//! index tuple and duplicates are dropped), the merged result is identical
//! for any worker count or tile schedule.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashSet};

use crate::miner::Direction;

/// A candidate index set with its canonical score.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct ScoredSet {
    pub indices: Vec<usize>,
    pub score: f64,
}

/// Heap item ordered so the *worst* retained candidate sits on top.
#[derive(Debug)]
struct HeapItem {
    /// Direction-adjusted score: higher is always better.
    rank: f64,
    indices: Vec<usize>,
    score: f64,
}

impl PartialEq for HeapItem {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for HeapItem {}

impl PartialOrd for HeapItem {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for HeapItem {
    fn cmp(&self, other: &Self) -> Ordering {
        // Greater == worse: lower rank first, then lexicographically larger
        // index tuple.
        other
            .rank
            .total_cmp(&self.rank)
            .then_with(|| self.indices.cmp(&other.indices))
    }
}

/// Keeps the best `capacity` distinct index sets seen so far.
#[derive(Debug)]
pub struct BoundedTopK {
    capacity: usize,
    direction: Direction,
    heap: BinaryHeap<HeapItem>,
    seen: HashSet<Vec<usize>>,
}

impl BoundedTopK {
    pub fn new(capacity: usize, direction: Direction) -> Self {
        BoundedTopK {
            capacity,
            direction,
            heap: BinaryHeap::with_capacity(capacity + 1),
            seen: HashSet::with_capacity(capacity + 1),
        }
    }

    fn rank_of(&self, score: f64) -> f64 {
        match self.direction {
            Direction::Max => score,
            Direction::Min => -score,
        }
    }

    pub fn len(&self) -> usize {
        self.heap.len()
    }

    pub fn is_empty(&self) -> bool {
        self.heap.is_empty()
    }

    /// Score of the current K-th (worst retained) entry, once full.
    pub fn threshold(&self) -> Option<f64> {
        if self.heap.len() == self.capacity {
            self.heap.peek().map(|item| item.score)
        } else {
            None
        }
    }

    /// Would a candidate with this score and index tuple enter the collector?
    pub fn would_accept(&self, indices: &[usize], score: f64) -> bool {
        if self.heap.len() < self.capacity {
            return true;
        }
        let worst = self.heap.peek().expect("non-empty at capacity");
        let rank = self.rank_of(score);
        match rank.total_cmp(&worst.rank) {
            Ordering::Greater => true,
            Ordering::Less => false,
            Ordering::Equal => indices < worst.indices.as_slice(),
        }
    }

    /// Offer a candidate; clones the index tuple only when it is retained.
    pub fn offer(&mut self, indices: &[usize], score: f64) {
        if !self.would_accept(indices, score) {
            return;
        }
        if self.seen.contains(indices) {
            return;
        }
        self.seen.insert(indices.to_vec());
        self.heap.push(HeapItem {
            rank: self.rank_of(score),
            indices: indices.to_vec(),
            score,
        });
        if self.heap.len() > self.capacity {
            let evicted = self.heap.pop().expect("over capacity");
            self.seen.remove(&evicted.indices);
        }
    }

    /// Absorb another collector with the same capacity and direction.
    pub fn merge(&mut self, other: BoundedTopK) {
        debug_assert_eq!(self.capacity, other.capacity);
        debug_assert_eq!(self.direction, other.direction);
        for item in other.heap.into_iter() {
            self.offer(&item.indices, item.score);
        }
    }

    /// Drain into a ranked list: best first, ties in ascending lexicographic
    /// index order.
    pub fn into_sorted(self) -> Vec<ScoredSet> {
        // ascending by Ord, and Less means better, so best comes first
        let items = self.heap.into_sorted_vec();
        items
            .into_iter()
            .map(|item| ScoredSet {
                indices: item.indices,
                score: item.score,
            })
            .collect()
    }
}
