//! Binary sum tree over nonnegative weights for O(log n) proportional selection.
//! Internal nodes are recomputed from their children on every update, so sums never
//! accumulate drift.

#[derive(Debug, Clone, Default)]
pub struct SumTree {
    len: usize,
    cap: usize,
    nodes: Vec<f64>,
}

impl SumTree {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_weights(weights: &[f64]) -> Self {
        let mut t = Self::new();
        t.rebuild(weights);
        t
    }

    pub fn rebuild(&mut self, weights: &[f64]) {
        self.len = weights.len();
        self.cap = weights.len().next_power_of_two().max(1);
        self.nodes = vec![0.0; 2 * self.cap];
        self.nodes[self.cap..self.cap + self.len].copy_from_slice(weights);
        for i in (1..self.cap).rev() {
            self.nodes[i] = self.nodes[2 * i] + self.nodes[2 * i + 1];
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn total(&self) -> f64 {
        if self.len == 0 {
            0.0
        } else {
            self.nodes[1]
        }
    }

    pub fn get(&self, i: usize) -> f64 {
        self.nodes[self.cap + i]
    }

    pub fn weights(&self) -> &[f64] {
        &self.nodes[self.cap..self.cap + self.len]
    }

    pub fn set(&mut self, i: usize, w: f64) {
        debug_assert!(i < self.len && w >= 0.0);
        let mut k = self.cap + i;
        self.nodes[k] = w;
        while k > 1 {
            k /= 2;
            self.nodes[k] = self.nodes[2 * k] + self.nodes[2 * k + 1];
        }
    }

    pub fn push(&mut self, w: f64) {
        if self.len == self.cap {
            let mut ws = self.weights().to_vec();
            ws.push(w);
            self.rebuild(&ws);
        } else {
            self.len += 1;
            self.set(self.len - 1, w);
        }
    }

    /// Mirrors `Vec::swap_remove`.
    pub fn swap_remove(&mut self, i: usize) {
        let last = self.len - 1;
        let w = self.get(last);
        self.set(last, 0.0);
        self.len -= 1;
        if i != last {
            self.set(i, w);
        }
    }

    /// Index `i` with prefix(i) ≤ u < prefix(i+1), for u in [0, total). Zero-weight
    /// leaves are never returned.
    pub fn find(&self, mut u: f64) -> usize {
        let mut k = 1;
        while k < self.cap {
            let left = self.nodes[2 * k];
            if u < left || self.nodes[2 * k + 1] == 0.0 {
                k *= 2;
            } else {
                u -= left;
                k = 2 * k + 1;
            }
        }
        let mut i = k - self.cap;
        // rounding can land on an empty leaf at the right edge
        while self.get(i) == 0.0 && i > 0 {
            i -= 1;
        }
        i
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn selection_and_updates() {
        let mut t = SumTree::from_weights(&[1.0, 0.0, 2.0, 3.0, 0.5]);
        assert_eq!(t.total(), 6.5);
        assert_eq!(t.find(0.5), 0);
        assert_eq!(t.find(1.0), 2);
        assert_eq!(t.find(2.99), 2);
        assert_eq!(t.find(3.0), 3);
        assert_eq!(t.find(6.4), 4);
        t.set(1, 4.0);
        assert_eq!(t.total(), 10.5);
        assert_eq!(t.find(1.5), 1);
        t.swap_remove(0);
        assert_eq!(t.weights(), &[0.5, 4.0, 2.0, 3.0]);
        assert_eq!(t.total(), 9.5);
        t.push(1.0);
        t.push(1.0);
        assert_eq!(t.len(), 6);
        assert_eq!(t.total(), 11.5);
    }

    #[test]
    fn matches_linear_scan() {
        let ws: Vec<f64> = (0..37).map(|i| ((i * 7919) % 13) as f64 * 0.25).collect();
        let t = SumTree::from_weights(&ws);
        let total: f64 = ws.iter().sum();
        for k in 0..1000 {
            let u = total * k as f64 / 1000.0;
            let mut acc = 0.0;
            let mut want = 0;
            for (i, w) in ws.iter().enumerate() {
                if u < acc + w {
                    want = i;
                    break;
                }
                acc += w;
            }
            assert_eq!(t.find(u), want, "u = {u}");
        }
    }
}
