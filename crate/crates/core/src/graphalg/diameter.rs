use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{bfs_distances, CsrGraph, UNREACHABLE};
use crate::distance::Distance;

/// Sources handled by one bit-parallel BFS.
const LANES: usize = 256;
const WORDS: usize = LANES / 64;
type Lanes = [u64; WORDS];

const PULL_CHUNK: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DiameterResult {
    pub diameter: Distance,
    pub connected: bool,
    /// Single-source BFS computations performed (a bit-parallel batch
    /// counts once per source).
    pub bfs_sweeps_used: usize,
}

#[inline]
fn or(a: &mut Lanes, b: &Lanes) {
    for k in 0..WORDS {
        a[k] |= b[k];
    }
}

#[inline]
fn is_zero(a: &Lanes) -> bool {
    a.iter().all(|&w| w == 0)
}

/// Eccentricity of every source, `Infinite` for sources that do not reach
/// the whole graph. Sources are processed 256 at a time by a bit-parallel
/// BFS that switches between pushing from a sparse frontier and pulling into
/// unsaturated vertices.
pub fn eccentricities(graph: &CsrGraph, sources: &[u32]) -> Vec<Distance> {
    sources.chunks(LANES).flat_map(|batch| batch_ecc(graph, batch)).collect()
}

fn batch_ecc(graph: &CsrGraph, sources: &[u32]) -> Vec<Distance> {
    let n = graph.len();
    let mut full: Lanes = [0; WORDS];
    for lane in 0..sources.len() {
        full[lane / 64] |= 1 << (lane % 64);
    }
    let mut visited: Vec<Lanes> = vec![[0; WORDS]; n];
    let mut frontier: Vec<Lanes> = vec![[0; WORDS]; n];
    let mut next: Vec<Lanes> = vec![[0; WORDS]; n];
    let mut active: Vec<u32> = Vec::new();
    for (lane, &s) in sources.iter().enumerate() {
        let s = s as usize;
        if frontier[s] == [0; WORDS] {
            active.push(s as u32);
        }
        visited[s][lane / 64] |= 1 << (lane % 64);
        frontier[s][lane / 64] |= 1 << (lane % 64);
    }
    let mut ecc = vec![0u32; sources.len()];
    let mut saturated = visited.iter().filter(|v| **v == full).count();
    let mut level = 0u32;
    while !active.is_empty() && saturated < n {
        level += 1;
        if active.len() * 16 < n {
            for &v in &active {
                let f = frontier[v as usize];
                for &w in graph.neighbors(v as usize) {
                    or(&mut next[w as usize], &f);
                }
            }
        } else {
            let frontier = &frontier;
            let visited = &visited;
            next.par_chunks_mut(PULL_CHUNK).enumerate().for_each(|(c, chunk)| {
                for (k, slot) in chunk.iter_mut().enumerate() {
                    let v = c * PULL_CHUNK + k;
                    if visited[v] == full {
                        continue;
                    }
                    for &w in graph.neighbors(v) {
                        or(slot, &frontier[w as usize]);
                    }
                }
            });
        }
        let mut fresh: Lanes = [0; WORDS];
        active.clear();
        for v in 0..n {
            let mut nv = next[v];
            if is_zero(&nv) {
                frontier[v] = [0; WORDS];
                continue;
            }
            next[v] = [0; WORDS];
            for k in 0..WORDS {
                nv[k] &= !visited[v][k];
            }
            frontier[v] = nv;
            if !is_zero(&nv) {
                or(&mut visited[v], &nv);
                or(&mut fresh, &nv);
                active.push(v as u32);
                if visited[v] == full {
                    saturated += 1;
                }
            }
        }
        for (lane, e) in ecc.iter_mut().enumerate() {
            if fresh[lane / 64] >> (lane % 64) & 1 == 1 {
                *e = level;
            }
        }
    }
    let mut reached_all: Lanes = full;
    for v in &visited {
        for k in 0..WORDS {
            reached_all[k] &= v[k];
        }
    }
    (0..sources.len())
        .map(|lane| {
            if reached_all[lane / 64] >> (lane % 64) & 1 == 1 {
                Distance::Finite(ecc[lane])
            } else {
                Distance::Infinite
            }
        })
        .collect()
}

fn farthest(dist: &[u32]) -> (usize, u32) {
    let mut best = (0, 0);
    for (v, &d) in dist.iter().enumerate() {
        if d > best.1 {
            best = (v, d);
        }
    }
    best
}

/// Exact diameter; infinite for disconnected graphs.
///
/// Four BFS sweeps give a lower bound and a central root; the levels of the
/// root's BFS tree are then processed from the deepest up (iFUB), computing
/// eccentricities of each level until the lower bound reaches twice the
/// remaining depth.
pub fn exact_diameter(graph: &CsrGraph) -> DiameterResult {
    let n = graph.len();
    if n <= 1 {
        return DiameterResult {
            diameter: Distance::ZERO,
            connected: true,
            bfs_sweeps_used: 0,
        };
    }
    let r = (0..n).max_by_key(|&v| (graph.degree(v), std::cmp::Reverse(v))).unwrap();
    let dr = bfs_distances(graph, r).expect("vertex in range");
    if dr.contains(&UNREACHABLE) {
        return DiameterResult {
            diameter: Distance::Infinite,
            connected: false,
            bfs_sweeps_used: 1,
        };
    }
    let (a, _) = farthest(&dr);
    let da = bfs_distances(graph, a).expect("vertex in range");
    let (b, ecc_a) = farthest(&da);
    let db = bfs_distances(graph, b).expect("vertex in range");
    let mut lb = ecc_a.max(farthest(&db).1);
    // walk back from b to the middle of a shortest a-b path
    let mut root = b;
    while da[root] > ecc_a / 2 {
        root = graph
            .neighbors(root)
            .iter()
            .map(|&w| w as usize)
            .find(|&w| da[w] + 1 == da[root])
            .expect("BFS parent exists");
    }
    let du = bfs_distances(graph, root).expect("vertex in range");
    let ecc_root = farthest(&du).1;
    lb = lb.max(ecc_root);
    let mut sweeps = 4;
    let mut levels: Vec<Vec<u32>> = vec![Vec::new(); ecc_root as usize + 1];
    for (v, &d) in du.iter().enumerate() {
        levels[d as usize].push(v as u32);
    }
    for i in (1..=ecc_root).rev() {
        if lb >= 2 * i {
            break;
        }
        let fringe = &levels[i as usize];
        sweeps += fringe.len();
        for e in eccentricities(graph, fringe) {
            lb = lb.max(e.finite().expect("graph is connected"));
        }
    }
    DiameterResult {
        diameter: Distance::Finite(lb),
        connected: true,
        bfs_sweeps_used: sweeps,
    }
}

/// Diameter by BFS from every vertex. Reference implementation.
pub fn all_pairs_diameter(graph: &CsrGraph) -> Distance {
    let mut best = Distance::ZERO;
    for s in 0..graph.len() {
        for &d in &bfs_distances(graph, s).expect("vertex in range") {
            best = best.max(super::to_distance(d));
        }
    }
    best
}
