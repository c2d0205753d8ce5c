/// Fenwick tree over non-negative integer weights with O(log n) sampling.
#[derive(Debug, Clone)]
pub(crate) struct Fenwick {
    tree: Vec<u64>,
    len: usize,
    total: u64,
}

impl Fenwick {
    pub fn with_capacity(capacity: usize) -> Result<Self, std::collections::TryReserveError> {
        let mut tree = Vec::new();
        tree.try_reserve_exact(capacity + 1)?;
        tree.push(0);
        Ok(Self { tree, len: 0, total: 0 })
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    /// Appends an element with weight `w`.
    pub fn push(&mut self, w: u64) {
        self.len += 1;
        let i = self.len;
        // node i covers (i - lowbit(i), i]
        let low = i & i.wrapping_neg();
        let mut acc = w;
        let mut j = i - 1;
        let stop = i - low;
        while j > stop {
            acc += self.tree[j];
            j -= j & j.wrapping_neg();
        }
        self.tree.push(acc);
        self.total += w;
    }

    pub fn add(&mut self, index: usize, delta: u64) {
        let mut i = index + 1;
        while i <= self.len {
            self.tree[i] += delta;
            i += i & i.wrapping_neg();
        }
        self.total += delta;
    }

    /// Sum of weights of elements `0..index`.
    pub fn prefix(&self, index: usize) -> u64 {
        let mut i = index;
        let mut s = 0;
        while i > 0 {
            s += self.tree[i];
            i -= i & i.wrapping_neg();
        }
        s
    }

    /// Smallest index whose inclusive prefix sum exceeds `r`. Requires `r < total`.
    pub fn find(&self, mut r: u64) -> usize {
        let mut pos = 0;
        let mut step = if self.len == 0 { 0 } else { 1usize << (usize::BITS - 1 - self.len.leading_zeros()) };
        while step > 0 {
            let next = pos + step;
            if next <= self.len && self.tree[next] <= r {
                pos = next;
                r -= self.tree[next];
            }
            step >>= 1;
        }
        pos
    }
}
