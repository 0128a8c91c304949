//! Binary indexed tree used as an order-statistic set over `1..=capacity`.

#[derive(Debug, Clone)]
pub struct Fenwick {
    tree: Vec<i64>,
    // largest power of two <= capacity, for top-down descent
    top: usize,
}

impl Fenwick {
    pub fn zeros(capacity: usize) -> Self {
        Self {
            tree: vec![0; capacity + 1],
            top: top_bit(capacity),
        }
    }

    /// Every position holds weight one. Built in O(n).
    pub fn ones(capacity: usize) -> Self {
        let tree = (0..=capacity)
            .map(|i| if i == 0 { 0 } else { lowbit(i) as i64 })
            .collect();
        Self {
            tree,
            top: top_bit(capacity),
        }
    }

    pub fn capacity(&self) -> usize {
        self.tree.len() - 1
    }

    pub fn add(&mut self, mut idx: usize, delta: i64) {
        debug_assert!(idx >= 1 && idx <= self.capacity());
        while idx < self.tree.len() {
            self.tree[idx] += delta;
            idx += lowbit(idx);
        }
    }

    /// Sum of weights at positions `1..=idx`.
    pub fn prefix(&self, mut idx: usize) -> i64 {
        let mut s = 0;
        while idx > 0 {
            s += self.tree[idx];
            idx -= lowbit(idx);
        }
        s
    }

    /// Smallest position whose prefix sum reaches `k` (weights must be
    /// nonnegative). Returns `None` if the total is below `k`.
    pub fn select(&self, k: i64) -> Option<usize> {
        if k <= 0 {
            return None;
        }
        let mut pos = 0;
        let mut rem = k;
        let mut step = self.top;
        while step > 0 {
            let next = pos + step;
            if next < self.tree.len() && self.tree[next] < rem {
                pos = next;
                rem -= self.tree[next];
            }
            step >>= 1;
        }
        (pos < self.capacity()).then_some(pos + 1)
    }

    /// Like [`select`](Self::select) but counts *empty* slots, treating each
    /// position as holding `1 - weight`. Weights must be 0 or 1.
    pub fn select_vacant(&self, k: i64) -> Option<usize> {
        if k <= 0 {
            return None;
        }
        let mut pos = 0;
        let mut rem = k;
        let mut step = self.top;
        while step > 0 {
            let next = pos + step;
            if next < self.tree.len() {
                let vacant = step as i64 - self.tree[next];
                if vacant < rem {
                    pos = next;
                    rem -= vacant;
                }
            }
            step >>= 1;
        }
        (pos < self.capacity()).then_some(pos + 1)
    }
}

#[inline]
fn lowbit(i: usize) -> usize {
    i & i.wrapping_neg()
}

fn top_bit(n: usize) -> usize {
    if n == 0 {
        0
    } else {
        1 << (usize::BITS - 1 - n.leading_zeros())
    }
}
