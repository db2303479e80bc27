//! Indexed binary min-heap of putative firing times.
//!
//! Every index `0..len` is always present exactly once; updates move the
//! entry in place. Ordering is by time, then by lower index, which makes the
//! pop order fully deterministic even when times tie.

use alloc::vec::Vec;
use core::cmp::Ordering;

#[derive(Debug, Clone)]
pub struct IndexedQueue {
    times: Vec<f64>,
    heap: Vec<usize>,
    pos: Vec<usize>,
}

impl IndexedQueue {
    /// Builds the heap from one time per index.
    pub fn new(times: Vec<f64>) -> Self {
        let n = times.len();
        let mut q = Self {
            times,
            heap: (0..n).collect(),
            pos: (0..n).collect(),
        };
        for i in (0..n / 2).rev() {
            q.sift_down(i);
        }
        q
    }

    pub fn len(&self) -> usize {
        self.heap.len()
    }

    pub fn is_empty(&self) -> bool {
        self.heap.is_empty()
    }

    /// Index and time of the least entry.
    pub fn peek(&self) -> Option<(usize, f64)> {
        self.heap.first().map(|&i| (i, self.times[i]))
    }

    pub fn time(&self, index: usize) -> f64 {
        self.times[index]
    }

    /// Changes the time of `index` and restores heap order.
    pub fn update(&mut self, index: usize, time: f64) {
        let old = self.times[index];
        self.times[index] = time;
        let p = self.pos[index];
        match time.total_cmp(&old) {
            Ordering::Less => self.sift_up(p),
            Ordering::Greater => self.sift_down(p),
            Ordering::Equal => {}
        }
    }

    fn less(&self, a: usize, b: usize) -> bool {
        match self.times[a].total_cmp(&self.times[b]) {
            Ordering::Less => true,
            Ordering::Greater => false,
            Ordering::Equal => a < b,
        }
    }

    fn swap(&mut self, i: usize, j: usize) {
        self.heap.swap(i, j);
        self.pos[self.heap[i]] = i;
        self.pos[self.heap[j]] = j;
    }

    fn sift_up(&mut self, mut p: usize) {
        while p > 0 {
            let parent = (p - 1) / 2;
            if self.less(self.heap[p], self.heap[parent]) {
                self.swap(p, parent);
                p = parent;
            } else {
                break;
            }
        }
    }

    fn sift_down(&mut self, mut p: usize) {
        let n = self.heap.len();
        loop {
            let l = 2 * p + 1;
            if l >= n {
                break;
            }
            let r = l + 1;
            let mut m = l;
            if r < n && self.less(self.heap[r], self.heap[l]) {
                m = r;
            }
            if self.less(self.heap[m], self.heap[p]) {
                self.swap(m, p);
                p = m;
            } else {
                break;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use proptest::prelude::*;

    #[test]
    fn ties_break_on_lowest_index() {
        let q = IndexedQueue::new(vec![1.0, 0.5, 0.5, f64::INFINITY]);
        assert_eq!(q.peek(), Some((1, 0.5)));
    }

    #[test]
    fn infinity_sinks() {
        let mut q = IndexedQueue::new(vec![1.0, 2.0]);
        q.update(0, f64::INFINITY);
        assert_eq!(q.peek(), Some((1, 2.0)));
        q.update(1, f64::INFINITY);
        assert_eq!(q.peek(), Some((0, f64::INFINITY)));
    }

    proptest! {
        #[test]
        fn min_matches_linear_scan(init in prop::collection::vec(0.0f64..100.0, 1..40),
                                   ops in prop::collection::vec((0usize..40, 0.0f64..100.0), 0..200)) {
            let mut shadow = init.clone();
            let mut q = IndexedQueue::new(init);
            for (i, t) in ops {
                let i = i % shadow.len();
                shadow[i] = t;
                q.update(i, t);
                let (best, bt) = shadow.iter().enumerate()
                    .fold((usize::MAX, f64::INFINITY), |acc, (j, &v)| if v < acc.1 || acc.0 == usize::MAX { (j, v) } else { acc });
                prop_assert_eq!(q.peek(), Some((best, bt)));
            }
        }
    }
}
