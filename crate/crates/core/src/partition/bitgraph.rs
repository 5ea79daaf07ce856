use crate::distance::Distance;

/// Small undirected graph with optional self-loops, stored as bitset rows.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BitGraph {
    n: usize,
    words: usize,
    rows: Vec<u64>,
}

#[inline]
fn word_bit(j: usize) -> (usize, u64) {
    (j / 64, 1u64 << (j % 64))
}

impl BitGraph {
    pub fn new(n: usize) -> BitGraph {
        let words = n.div_ceil(64).max(1);
        BitGraph {
            n,
            words,
            rows: vec![0; n * words],
        }
    }

    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> BitGraph {
        let mut g = BitGraph::new(n);
        for &(i, j) in edges {
            g.add_edge(i, j);
        }
        g
    }

    /// Adds `{i, j}`; `i == j` adds a self-loop.
    pub fn add_edge(&mut self, i: usize, j: usize) {
        assert!(i < self.n && j < self.n, "vertex out of range");
        let (w, b) = word_bit(j);
        self.rows[i * self.words + w] |= b;
        let (w, b) = word_bit(i);
        self.rows[j * self.words + w] |= b;
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    fn row(&self, i: usize) -> &[u64] {
        &self.rows[i * self.words..(i + 1) * self.words]
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        let (w, b) = word_bit(j);
        self.row(i)[w] & b != 0
    }

    pub fn has_loop(&self, i: usize) -> bool {
        self.has_edge(i, i)
    }

    /// Whether `i` has any incident edge, a loop included.
    pub fn has_any_edge(&self, i: usize) -> bool {
        self.row(i).iter().any(|&w| w != 0)
    }

    pub fn neighbors(&self, i: usize) -> impl Iterator<Item = usize> + '_ {
        self.row(i).iter().enumerate().flat_map(|(w, &bits)| {
            let mut bits = bits;
            std::iter::from_fn(move || {
                if bits == 0 {
                    return None;
                }
                let t = bits.trailing_zeros() as usize;
                bits &= bits - 1;
                Some(w * 64 + t)
            })
        })
    }

    pub fn edge_count(&self) -> usize {
        let mut c = 0;
        for i in 0..self.n {
            for j in self.neighbors(i) {
                if j >= i {
                    c += 1;
                }
            }
        }
        c
    }

    /// Levels of a bitset BFS. `step` maps a frontier to its neighbourhood.
    fn or_rows(&self, frontier: &[u64], out: &mut [u64]) {
        out.iter_mut().for_each(|w| *w = 0);
        for (w, &bits) in frontier.iter().enumerate() {
            let mut bits = bits;
            while bits != 0 {
                let v = w * 64 + bits.trailing_zeros() as usize;
                bits &= bits - 1;
                for (o, r) in out.iter_mut().zip(self.row(v)) {
                    *o |= r;
                }
            }
        }
    }

    /// Shortest-path distances from `s`; loops play no role.
    pub fn distances_from(&self, s: usize) -> Vec<Distance> {
        let mut dist = vec![Distance::Infinite; self.n];
        let mut seen = vec![0u64; self.words];
        let mut frontier = vec![0u64; self.words];
        let mut next = vec![0u64; self.words];
        let (w, b) = word_bit(s);
        seen[w] |= b;
        frontier[w] |= b;
        dist[s] = Distance::ZERO;
        let mut d = 0;
        loop {
            self.or_rows(&frontier, &mut next);
            let mut any = false;
            for (nx, sn) in next.iter_mut().zip(seen.iter_mut()) {
                *nx &= !*sn;
                *sn |= *nx;
                any |= *nx != 0;
            }
            if !any {
                break;
            }
            d += 1;
            for (w, &bits) in next.iter().enumerate() {
                let mut bits = bits;
                while bits != 0 {
                    dist[w * 64 + bits.trailing_zeros() as usize] = Distance::Finite(d);
                    bits &= bits - 1;
                }
            }
            std::mem::swap(&mut frontier, &mut next);
        }
        dist
    }

    /// Walk distances from `s`: the shortest path length to every `t != s`,
    /// and the shortest closed walk of positive length back to `s` (1 with a
    /// loop, 2 with any neighbour, infinite for an isolated vertex).
    pub fn walk_distances_from(&self, s: usize) -> Vec<Distance> {
        let mut d = self.distances_from(s);
        d[s] = if self.has_loop(s) {
            Distance::Finite(1)
        } else if self.has_any_edge(s) {
            Distance::Finite(2)
        } else {
            Distance::Infinite
        };
        d
    }

    /// Largest walk distance over all ordered pairs, `s = t` included.
    ///
    /// This is the distance notion for which a random graph built on the
    /// cells inherits its diameter: two vertices of one cell are joined
    /// through a loop in one step, or through a neighbouring cell in two.
    pub fn diameter(&self) -> Distance {
        (0..self.n)
            .map(|s| self.walk_distances_from(s).into_iter().max().unwrap_or(Distance::ZERO))
            .max()
            .unwrap_or(Distance::ZERO)
    }

    /// Ordinary diameter over pairs of distinct vertices, loops ignored.
    pub fn simple_diameter(&self) -> Distance {
        (0..self.n)
            .map(|s| self.distances_from(s).into_iter().max().unwrap_or(Distance::ZERO))
            .max()
            .unwrap_or(Distance::ZERO)
    }

    pub fn is_connected(&self) -> bool {
        self.n == 0 || self.distances_from(0).iter().all(|d| d.is_finite())
    }

    /// `[even, odd]` parity distances from `s`: the shortest walk to each
    /// vertex with an even and with an odd number of steps.
    pub fn parity_distances_from(&self, s: usize) -> Vec<[Distance; 2]> {
        let mut dist = vec![[Distance::Infinite; 2]; self.n];
        let mut seen = [vec![0u64; self.words], vec![0u64; self.words]];
        let mut frontier = vec![0u64; self.words];
        let mut next = vec![0u64; self.words];
        let (w, b) = word_bit(s);
        seen[0][w] |= b;
        frontier[w] |= b;
        dist[s][0] = Distance::ZERO;
        let mut d = 0u32;
        loop {
            d += 1;
            let par = (d % 2) as usize;
            self.or_rows(&frontier, &mut next);
            let mut any = false;
            for (nx, sn) in next.iter_mut().zip(seen[par].iter_mut()) {
                *nx &= !*sn;
                *sn |= *nx;
                any |= *nx != 0;
            }
            if !any {
                break;
            }
            for (w, &bits) in next.iter().enumerate() {
                let mut bits = bits;
                while bits != 0 {
                    dist[w * 64 + bits.trailing_zeros() as usize][par] = Distance::Finite(d);
                    bits &= bits - 1;
                }
            }
            std::mem::swap(&mut frontier, &mut next);
        }
        dist
    }

    /// Whether a walk with exactly `len` steps joins `s` and `t`, read off
    /// the parity distances: a shortest walk of the right parity can be
    /// padded by going back and forth along its last edge.
    pub fn exact_walk_exists(&self, s: usize, t: usize, len: u32) -> bool {
        let pd = self.parity_distances_from(s);
        exact_from_parity(&pd, self.has_any_edge(s), t, len)
    }

    /// Whether exact-`len` walks join every pair (with repetition).
    pub fn all_pairs_exact_walk(&self, len: u32) -> bool {
        (0..self.n).all(|s| {
            let pd = self.parity_distances_from(s);
            let any = self.has_any_edge(s);
            (s..self.n).all(|t| exact_from_parity(&pd, any, t, len))
        })
    }

    /// First pair `(s, t)`, `s <= t`, with no walk of exactly `len` steps.
    pub fn exact_walk_witness(&self, len: u32) -> Option<(usize, usize)> {
        (0..self.n).find_map(|s| {
            let pd = self.parity_distances_from(s);
            let any = self.has_any_edge(s);
            (s..self.n)
                .find(|&t| !exact_from_parity(&pd, any, t, len))
                .map(|t| (s, t))
        })
    }
}

fn exact_from_parity(pd: &[[Distance; 2]], start_has_edge: bool, t: usize, len: u32) -> bool {
    match pd[t][(len % 2) as usize] {
        Distance::Finite(d) => d <= len && (d > 0 || len == 0 || start_has_edge),
        Distance::Infinite => false,
    }
}
