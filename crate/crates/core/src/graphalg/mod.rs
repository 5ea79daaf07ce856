//! Exact algorithms on sampled graphs: BFS, components, exact diameter and
//! the neighbourhood-expansion recursion.

mod diameter;
mod expansion;

use std::collections::VecDeque;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use rayon::prelude::*;

pub use diameter::{all_pairs_diameter, eccentricities, exact_diameter, DiameterResult};
pub use expansion::{
    expansion_trace, neighbor_hit_count, s_ij, t_of, CellMembership, ExpansionTrace, WalkSpec,
};

use crate::distance::Distance;
use crate::error::{Error, Result};

/// Marker for unreachable vertices in distance arrays.
pub const UNREACHABLE: u32 = u32::MAX;

/// Undirected simple graph in compressed sparse row form with sorted
/// neighbour lists.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CsrGraph {
    offsets: Vec<usize>,
    targets: Vec<u32>,
}

impl CsrGraph {
    /// Build from undirected edges. Duplicates (in either orientation) are
    /// merged; self-loops and out-of-range endpoints are errors.
    pub fn from_edges(n: usize, edges: &[(u32, u32)]) -> Result<CsrGraph> {
        if n > u32::MAX as usize {
            return Err(Error::UnsupportedSize {
                what: "vertices",
                size: n,
                limit: u32::MAX as usize,
            });
        }
        let mut degree = vec![0usize; n + 1];
        for &(u, v) in edges {
            if u as usize >= n || v as usize >= n {
                return Err(Error::Domain(format!("edge ({u}, {v}) leaves 0..{n}")));
            }
            if u == v {
                return Err(Error::Domain(format!("self-loop at {u}")));
            }
            degree[u as usize + 1] += 1;
            degree[v as usize + 1] += 1;
        }
        for i in 0..n {
            degree[i + 1] += degree[i];
        }
        let offsets = degree;
        let mut fill = offsets[..n].to_vec();
        let mut targets = vec![0u32; offsets[n]];
        for &(u, v) in edges {
            targets[fill[u as usize]] = v;
            fill[u as usize] += 1;
            targets[fill[v as usize]] = u;
            fill[v as usize] += 1;
        }
        let mut rows: Vec<&mut [u32]> = Vec::with_capacity(n);
        let mut rest = targets.as_mut_slice();
        for i in 0..n {
            let (row, tail) = rest.split_at_mut(offsets[i + 1] - offsets[i]);
            rows.push(row);
            rest = tail;
        }
        let dup = rows
            .par_iter_mut()
            .map(|r| {
                r.sort_unstable();
                r.windows(2).any(|w| w[0] == w[1])
            })
            .reduce(|| false, |a, b| a || b);
        let mut g = CsrGraph { offsets, targets };
        if dup {
            g.dedup();
        }
        Ok(g)
    }

    fn dedup(&mut self) {
        let n = self.len();
        let mut out = Vec::with_capacity(self.targets.len());
        let mut offsets = vec![0usize; n + 1];
        for i in 0..n {
            let row = &self.targets[self.offsets[i]..self.offsets[i + 1]];
            for (k, &t) in row.iter().enumerate() {
                if k == 0 || row[k - 1] != t {
                    out.push(t);
                }
            }
            offsets[i + 1] = out.len();
        }
        self.offsets = offsets;
        self.targets = out;
    }

    /// Graph on `n` vertices with no edges.
    pub fn empty(n: usize) -> CsrGraph {
        CsrGraph {
            offsets: vec![0; n + 1],
            targets: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn edge_count(&self) -> usize {
        self.targets.len() / 2
    }

    #[inline]
    pub fn neighbors(&self, v: usize) -> &[u32] {
        &self.targets[self.offsets[v]..self.offsets[v + 1]]
    }

    pub fn degree(&self, v: usize) -> usize {
        self.offsets[v + 1] - self.offsets[v]
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.neighbors(u).binary_search(&(v as u32)).is_ok()
    }

    /// Edges `(u, v)` with `u < v` in lexicographic order.
    pub fn edges(&self) -> impl Iterator<Item = (u32, u32)> + '_ {
        (0..self.len()).flat_map(move |u| {
            self.neighbors(u)
                .iter()
                .filter(move |&&v| v as usize > u)
                .map(move |&v| (u as u32, v))
        })
    }

    /// Whether every edge of `self` is an edge of `other`.
    pub fn is_subgraph_of(&self, other: &CsrGraph) -> bool {
        self.len() == other.len()
            && (0..self.len()).into_par_iter().all(|u| {
                let theirs = other.neighbors(u);
                let mut k = 0;
                self.neighbors(u).iter().all(|&v| {
                    while k < theirs.len() && theirs[k] < v {
                        k += 1;
                    }
                    k < theirs.len() && theirs[k] == v
                })
            })
    }

    /// Write `# n <count>` followed by one `u v` line per edge, `u < v`.
    pub fn write_edge_list(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let io = |e| Error::io(path, e);
        let mut w = BufWriter::new(File::create(path).map_err(io)?);
        writeln!(w, "# n {}", self.len()).map_err(io)?;
        for (u, v) in self.edges() {
            writeln!(w, "{u} {v}").map_err(io)?;
        }
        w.flush().map_err(io)
    }

    /// Read an edge list. Blank lines and `#` comments are skipped; a
    /// `# n <count>` comment fixes the vertex count, otherwise it is one more
    /// than the largest endpoint. Self-loops are dropped and duplicates merged.
    pub fn read_edge_list(path: impl AsRef<Path>) -> Result<CsrGraph> {
        let path = path.as_ref();
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        let mut declared: Option<usize> = None;
        let mut edges = Vec::new();
        let mut max_id: Option<u32> = None;
        for (no, line) in BufReader::new(file).lines().enumerate() {
            let line = line.map_err(|e| Error::io(path, e))?;
            let line = line.trim();
            if let Some(comment) = line.strip_prefix('#') {
                let mut it = comment.split_whitespace();
                if let (Some("n"), Some(v)) = (it.next(), it.next()) {
                    declared = Some(v.parse().map_err(|_| {
                        Error::parse(path, format!("line {}: bad vertex count {v:?}", no + 1))
                    })?);
                }
                continue;
            }
            if line.is_empty() {
                continue;
            }
            let mut it = line.split_whitespace();
            let mut field = || -> Result<u32> {
                it.next()
                    .and_then(|s| s.parse().ok())
                    .ok_or_else(|| Error::parse(path, format!("line {}: expected \"u v\"", no + 1)))
            };
            let (u, v) = (field()?, field()?);
            max_id = Some(max_id.map_or(u.max(v), |m| m.max(u).max(v)));
            if u != v {
                edges.push((u, v));
            }
        }
        let n = match (declared, max_id) {
            (Some(n), Some(m)) if (m as usize) >= n => {
                return Err(Error::parse(path, format!("vertex {m} exceeds declared count {n}")))
            }
            (Some(n), _) => n,
            (None, Some(m)) => m as usize + 1,
            (None, None) => 0,
        };
        CsrGraph::from_edges(n, &edges)
    }
}

/// BFS distances from `source`, [`UNREACHABLE`] where there is no path.
pub fn bfs_distances(graph: &CsrGraph, source: usize) -> Result<Vec<u32>> {
    if source >= graph.len() {
        return Err(Error::Domain(format!(
            "source {source} is not a vertex of a graph on {} vertices",
            graph.len()
        )));
    }
    let mut dist = vec![UNREACHABLE; graph.len()];
    let mut queue = VecDeque::new();
    dist[source] = 0;
    queue.push_back(source as u32);
    while let Some(v) = queue.pop_front() {
        let d = dist[v as usize] + 1;
        for &w in graph.neighbors(v as usize) {
            if dist[w as usize] == UNREACHABLE {
                dist[w as usize] = d;
                queue.push_back(w);
            }
        }
    }
    Ok(dist)
}

/// Convert a raw BFS distance.
pub fn to_distance(d: u32) -> Distance {
    if d == UNREACHABLE {
        Distance::Infinite
    } else {
        Distance::Finite(d)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Components {
    /// Component index of every vertex, numbered by smallest member.
    pub label: Vec<u32>,
    /// Sizes in the same order; they sum to `n`.
    pub sizes: Vec<usize>,
}

impl Components {
    pub fn is_connected(&self) -> bool {
        self.sizes.len() <= 1
    }

    pub fn largest(&self) -> usize {
        self.sizes.iter().copied().max().unwrap_or(0)
    }
}

pub fn components(graph: &CsrGraph) -> Components {
    let n = graph.len();
    let mut label = vec![u32::MAX; n];
    let mut sizes = Vec::new();
    let mut stack = Vec::new();
    for s in 0..n {
        if label[s] != u32::MAX {
            continue;
        }
        let c = sizes.len() as u32;
        label[s] = c;
        stack.push(s as u32);
        let mut size = 0;
        while let Some(v) = stack.pop() {
            size += 1;
            for &w in graph.neighbors(v as usize) {
                if label[w as usize] == u32::MAX {
                    label[w as usize] = c;
                    stack.push(w);
                }
            }
        }
        sizes.push(size);
    }
    Components { label, sizes }
}

pub fn is_connected(graph: &CsrGraph) -> bool {
    components(graph).is_connected()
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;

    pub fn path(n: u32) -> CsrGraph {
        let e: Vec<_> = (1..n).map(|i| (i - 1, i)).collect();
        CsrGraph::from_edges(n as usize, &e).unwrap()
    }

    pub fn complete(n: u32) -> CsrGraph {
        let e: Vec<_> = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect();
        CsrGraph::from_edges(n as usize, &e).unwrap()
    }

    #[test]
    fn csr_is_sorted_and_deduplicated() {
        let g = CsrGraph::from_edges(4, &[(3, 0), (0, 1), (1, 0), (2, 0), (0, 3)]).unwrap();
        assert_eq!(g.neighbors(0), &[1, 2, 3]);
        assert_eq!(g.edge_count(), 3);
        assert_eq!(g.edges().collect::<Vec<_>>(), vec![(0, 1), (0, 2), (0, 3)]);
        assert!(CsrGraph::from_edges(2, &[(1, 1)]).is_err());
        assert!(CsrGraph::from_edges(2, &[(0, 2)]).is_err());
    }

    #[test]
    fn bfs_examples() {
        assert_eq!(bfs_distances(&CsrGraph::empty(1), 0).unwrap(), vec![0]);
        assert_eq!(bfs_distances(&path(3), 0).unwrap(), vec![0, 1, 2]);
        let d = bfs_distances(&CsrGraph::empty(2), 0).unwrap();
        assert_eq!(d.iter().map(|&x| to_distance(x)).collect::<Vec<_>>(), vec![Distance::ZERO, Distance::Infinite]);
        assert!(bfs_distances(&path(3), 3).is_err());
    }

    #[test]
    fn component_examples() {
        let c = components(&complete(5));
        assert!(c.is_connected());
        assert_eq!(c.sizes, vec![5]);
        assert_eq!(components(&CsrGraph::empty(3)).sizes, vec![1, 1, 1]);
        let t = CsrGraph::from_edges(6, &[(0, 1), (1, 2), (0, 2), (3, 4), (4, 5), (3, 5)]).unwrap();
        let c = components(&t);
        assert!(!c.is_connected());
        assert_eq!(c.sizes, vec![3, 3]);
    }

    #[test]
    fn edge_list_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("g.txt");
        let g = CsrGraph::from_edges(6, &[(0, 1), (2, 4), (1, 4)]).unwrap();
        g.write_edge_list(&p).unwrap();
        assert_eq!(CsrGraph::read_edge_list(&p).unwrap(), g);
        std::fs::write(&p, "0 1\n1 0\n\n2 2\n# comment\n1 3\n").unwrap();
        let h = CsrGraph::read_edge_list(&p).unwrap();
        assert_eq!((h.len(), h.edge_count()), (4, 2));
        std::fs::write(&p, "0 x\n").unwrap();
        assert!(matches!(CsrGraph::read_edge_list(&p), Err(Error::Parse { .. })));
    }

    #[test]
    fn subgraph_check() {
        let g = path(4);
        assert!(g.is_subgraph_of(&complete(4)));
        assert!(!complete(4).is_subgraph_of(&g));
    }
}
