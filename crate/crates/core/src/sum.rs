//! Deterministic pairwise summation.
//!
//! Results depend only on the order of the input terms, never on how work is
//! split across threads: parallel reductions sum fixed-size blocks pairwise and
//! then combine block totals pairwise in block order.

use std::ops::Add;

use num_traits::Zero;
use rayon::prelude::*;

/// Block length used by [`par_pairwise_map`]. Part of the reduction order, so
/// changing it changes results in the last bits.
pub const BLOCK: usize = 4096;

/// Streaming pairwise (cascade) accumulator with `O(log n)` state.
///
/// Pushing `n` terms yields the same value as a balanced binary tree over the
/// terms in push order, padded on the right.
#[derive(Clone, Debug)]
pub struct Pairwise<S> {
    // (height, partial) with strictly decreasing heights
    stack: Vec<(u32, S)>,
}

impl<S: Copy + Add<Output = S> + Zero> Default for Pairwise<S> {
    fn default() -> Self {
        Self::new()
    }
}

impl<S: Copy + Add<Output = S> + Zero> Pairwise<S> {
    pub fn new() -> Self {
        Self { stack: Vec::with_capacity(40) }
    }

    pub fn push(&mut self, x: S) {
        let mut h = 0u32;
        let mut v = x;
        while let Some(&(top_h, top_v)) = self.stack.last() {
            if top_h != h {
                break;
            }
            self.stack.pop();
            v = top_v + v;
            h += 1;
        }
        self.stack.push((h, v));
    }

    pub fn total(&self) -> S {
        // combine the smaller trailing partials first
        let mut acc = S::zero();
        let mut first = true;
        for &(_, v) in self.stack.iter().rev() {
            acc = if first { v } else { v + acc };
            first = false;
        }
        acc
    }
}

/// Pairwise sum of a slice.
pub fn pairwise<S: Copy + Add<Output = S> + Zero>(xs: &[S]) -> S {
    let mut acc = Pairwise::new();
    for &x in xs {
        acc.push(x);
    }
    acc.total()
}

/// Maps every index in `0..n` to a term and sums the terms pairwise, in index
/// order, using all available threads. Bit-identical for any thread count.
pub fn par_pairwise_map<S, F>(n: usize, f: F) -> S
where
    S: Copy + Add<Output = S> + Zero + Send + Sync,
    F: Fn(usize) -> S + Sync + Send,
{
    let blocks = n.div_ceil(BLOCK);
    let partials: Vec<S> = (0..blocks)
        .into_par_iter()
        .map(|b| {
            let mut acc = Pairwise::new();
            for i in b * BLOCK..((b + 1) * BLOCK).min(n) {
                acc.push(f(i));
            }
            acc.total()
        })
        .collect();
    pairwise(&partials)
}
