#![allow(dead_code)]

use rand::Rng;

use irgraph::kernel::{Kernel, TypeSpace};
use irgraph::partition::BitGraph;

pub fn random_step(rng: &mut impl Rng, m: usize, zero_prob: f64) -> Kernel {
    let weights: Vec<f64> = (0..m).map(|_| rng.random_range(0.1..1.0)).collect();
    let total: f64 = weights.iter().sum();
    let mut matrix = vec![vec![0.0; m]; m];
    for i in 0..m {
        for j in i..m {
            let v = if rng.random_bool(zero_prob) { 0.0 } else { rng.random_range(0.01..=1.0) };
            matrix[i][j] = v;
            matrix[j][i] = v;
        }
    }
    Kernel::step(TypeSpace::finite(weights.iter().map(|w| w / total).collect()).unwrap(), matrix)
        .unwrap()
}

/// `A^L` by repeated boolean products on bitmask rows.
pub fn walk_matrix_powers(adj: &[u16], max_len: usize) -> Vec<Vec<u16>> {
    let n = adj.len();
    let mut powers = vec![(0..n).map(|i| 1u16 << i).collect::<Vec<_>>()];
    for _ in 0..max_len {
        let prev = powers.last().unwrap();
        let next = (0..n)
            .map(|i| {
                (0..n)
                    .filter(|&k| prev[i] >> k & 1 == 1)
                    .fold(0u16, |acc, k| acc | adj[k])
            })
            .collect();
        powers.push(next);
    }
    powers
}

pub fn check_against_oracle(g: &BitGraph, adj: &[u16]) -> usize {
    let powers = walk_matrix_powers(adj, 10);
    let n = adj.len();
    let mut mismatches = 0;
    for (len, pw) in powers.iter().enumerate() {
        for s in 0..n {
            for t in 0..n {
                if g.exact_walk_exists(s, t, len as u32) != (pw[s] >> t & 1 == 1) {
                    mismatches += 1;
                }
            }
        }
    }
    mismatches
}

pub fn bitgraph(n: usize, adj: &[u16]) -> BitGraph {
    let mut edges = Vec::new();
    for i in 0..n {
        for j in i..n {
            if adj[i] >> j & 1 == 1 {
                edges.push((i, j));
            }
        }
    }
    BitGraph::from_edges(n, &edges)
}

/// Mismatches against the oracle over every labelled graph (loops allowed)
/// on `1..=max_n` vertices.
pub fn exhaustive_walk_mismatches(max_n: usize) -> usize {
    let mut mismatches = 0;
    for n in 1..=max_n {
        let slots: Vec<(usize, usize)> =
            (0..n).flat_map(|i| (i..n).map(move |j| (i, j))).collect();
        for mask in 0u32..1 << slots.len() {
            let adj = adjacency(n, &slots, mask);
            mismatches += check_against_oracle(&bitgraph(n, &adj), &adj);
        }
    }
    mismatches
}

/// Same over every loopless graph on `n` vertices.
pub fn exhaustive_loopless_walk_mismatches(n: usize) -> usize {
    let slots: Vec<(usize, usize)> =
        (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect();
    (0u32..1 << slots.len())
        .map(|mask| {
            let adj = adjacency(n, &slots, mask);
            check_against_oracle(&bitgraph(n, &adj), &adj)
        })
        .sum()
}

fn adjacency(n: usize, slots: &[(usize, usize)], mask: u32) -> Vec<u16> {
    let mut adj = vec![0u16; n];
    for (b, &(i, j)) in slots.iter().enumerate() {
        if mask >> b & 1 == 1 {
            adj[i] |= 1 << j;
            adj[j] |= 1 << i;
        }
    }
    adj
}

/// Same over `count` random graphs on 6 to 12 vertices with varied density.
pub fn random_walk_mismatches(rng: &mut impl Rng, count: usize) -> usize {
    let mut mismatches = 0;
    for _ in 0..count {
        let n = rng.random_range(6..=12usize);
        let density = rng.random_range(0.05..0.6);
        let loop_density = rng.random_range(0.0..0.3);
        let mut adj = vec![0u16; n];
        for i in 0..n {
            for j in i..n {
                let p = if i == j { loop_density } else { density };
                if rng.random_bool(p) {
                    adj[i] |= 1 << j;
                    adj[j] |= 1 << i;
                }
            }
        }
        mismatches += check_against_oracle(&bitgraph(n, &adj), &adj);
    }
    mismatches
}
