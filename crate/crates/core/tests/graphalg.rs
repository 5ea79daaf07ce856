use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use irgraph::graphalg::{
    all_pairs_diameter, bfs_distances, eccentricities, exact_diameter, expansion_trace,
    neighbor_hit_count, s_ij, CellMembership, CsrGraph, WalkSpec,
};
use irgraph::kernel::{Kernel, TypeAssignment, TypeSpace};
use irgraph::partition::{Partition, PartitionGraph};
use irgraph::sampler::{sample_graph, sample_graph_given_types, SampleParams};
use irgraph::Distance;

fn gnp(rng: &mut impl Rng, n: usize, p: f64) -> CsrGraph {
    let mut edges = Vec::new();
    for u in 0..n as u32 {
        for v in u + 1..n as u32 {
            if rng.random_bool(p) {
                edges.push((u, v));
            }
        }
    }
    CsrGraph::from_edges(n, &edges).unwrap()
}

fn random_tree(rng: &mut impl Rng, n: usize) -> CsrGraph {
    let edges: Vec<(u32, u32)> = (1..n as u32).map(|v| (rng.random_range(0..v), v)).collect();
    CsrGraph::from_edges(n, &edges).unwrap()
}

/// Graphs that stress the pruning: sparse, near-threshold, trees, long
/// cycles with chords, and disjoint unions.
fn random_graph(rng: &mut impl Rng) -> CsrGraph {
    let n = rng.random_range(1..=200);
    match rng.random_range(0..4) {
        0 => {
            let c = rng.random_range(0.5..4.0);
            gnp(rng, n, (c / n as f64).min(1.0))
        }
        1 => random_tree(rng, n),
        2 => {
            let mut edges: Vec<(u32, u32)> = (0..n as u32).map(|v| (v, (v + 1) % n as u32)).collect();
            for _ in 0..rng.random_range(0..4) {
                edges.push((rng.random_range(0..n as u32), rng.random_range(0..n as u32)));
            }
            edges.retain(|(u, v)| u != v);
            CsrGraph::from_edges(n, &edges).unwrap()
        }
        _ => {
            let p = rng.random_range(0.0..0.3);
            gnp(rng, n, p)
        }
    }
}

#[test]
fn exact_diameter_matches_all_pairs_bfs() {
    let mut rng = ChaCha8Rng::seed_from_u64(20);
    for _ in 0..500 {
        let g = random_graph(&mut rng);
        let d = exact_diameter(&g);
        assert_eq!(d.diameter, all_pairs_diameter(&g));
        assert_eq!(d.connected, d.diameter.is_finite());
    }
}

#[test]
fn exact_diameter_dominates_sampled_eccentricities() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for _ in 0..100 {
        let n = rng.random_range(50..2000);
        let g = gnp(&mut rng, n, 8.0 / n as f64);
        let d = exact_diameter(&g).diameter;
        let mut sources: Vec<u32> = (0..n as u32).collect();
        sources.shuffle(&mut rng);
        sources.truncate(10);
        for e in eccentricities(&g, &sources) {
            assert!(e <= d);
        }
    }
}

#[test]
fn double_sweep_is_exact_on_trees() {
    let mut rng = ChaCha8Rng::seed_from_u64(22);
    for _ in 0..200 {
        let n = rng.random_range(2..3000);
        let g = random_tree(&mut rng, n);
        let start = rng.random_range(0..n);
        let d0 = bfs_distances(&g, start).unwrap();
        let far = (0..n).max_by_key(|&v| d0[v]).unwrap();
        let d1 = bfs_distances(&g, far).unwrap();
        let sweep = *d1.iter().max().unwrap();
        assert_eq!(exact_diameter(&g).diameter, Distance::Finite(sweep));
    }
}

fn path_cells() -> (Kernel, Partition) {
    let k = Kernel::path(3, 0.5, 1.0).unwrap();
    let p = Partition::blocks(k.space()).unwrap();
    (k, p)
}

/// `G(n, K, p1) ⊆ G(n, K, p2)` by keeping each edge of the denser graph with
/// probability `p1/p2`.
fn thin(g: &CsrGraph, keep: f64, rng: &mut impl Rng) -> CsrGraph {
    let edges: Vec<(u32, u32)> = g.edges().filter(|_| rng.random_bool(keep)).collect();
    CsrGraph::from_edges(g.len(), &edges).unwrap()
}

#[test]
fn expansion_is_monotone_in_p_under_coupling() {
    let (k, part) = path_cells();
    let lower = PartitionGraph::lower(&k, &part).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    let n = 6000;
    let mut compared = 0;
    for trial in 0..40u64 {
        let p2 = rng.random_range(1.0..2.5) / n as f64;
        let p1 = p2 * rng.random_range(0.3..1.0);
        let dense = sample_graph(&k, &SampleParams::new(n, p2, trial).unwrap()).unwrap();
        let sparse = thin(&dense.graph, p1 / p2, &mut rng);
        let cells = CellMembership::from_partition(&part, &dense.types).unwrap();
        let start = cells.members(0)[0];
        for walk in [vec![0, 1, 2], vec![0, 1, 0, 1], vec![1, 2, 1, 0]] {
            let start = if walk[0] == 0 { start } else { cells.members(1)[0] };
            let spec = WalkSpec { walk, start, phi: 4, omega: 4, truncation_seed: trial };
            let hi = expansion_trace(&dense.graph, &cells, &lower, p2, &spec).unwrap();
            let lo = expansion_trace(&sparse, &cells, &lower, p1, &spec).unwrap();
            // Truncation picks a different subset once it bites, which breaks
            // the pointwise order; only untruncated traces are compared.
            if hi.gamma_sizes != hi.gamma_prime_sizes {
                continue;
            }
            compared += 1;
            for (a, b) in lo.gamma_sizes.iter().zip(&hi.gamma_sizes) {
                assert!(a <= b, "{lo:?} vs {hi:?}");
            }
        }
    }
    assert!(compared > 60, "only {compared} untruncated traces");
}

#[test]
fn neighbor_hits_average_at_least_half_of_s() {
    let k = Kernel::step(
        TypeSpace::finite(vec![0.5, 0.5]).unwrap(),
        vec![vec![1.0, 0.5], vec![0.5, 1.0]],
    )
    .unwrap();
    let part = Partition::blocks(k.space()).unwrap();
    let n = 2000;
    let p = 0.01;
    let types = TypeAssignment::Blocks((0..n).map(|v| (v % 2) as u32).collect());
    let cells = CellMembership::from_partition(&part, &types).unwrap();
    let u: Vec<u32> = cells.members(0).into_iter().take(8).collect();
    let trials = 1000;
    for (i, j, kl) in [(0, 1, 0.5), (0, 0, 1.0)] {
        let s = s_ij(n as f64, 0.5, kl, p, u.len() as f64);
        let counts: Vec<f64> = (0..trials)
            .map(|t| {
                let g = sample_graph_given_types(&k, types.clone(), &SampleParams::new(n, p, t).unwrap())
                    .unwrap();
                neighbor_hit_count(&g.graph, &cells, &u, i, j).unwrap() as f64
            })
            .collect();
        let mean = counts.iter().sum::<f64>() / trials as f64;
        let var = counts.iter().map(|c| (c - mean).powi(2)).sum::<f64>() / (trials - 1) as f64;
        let se = (var / trials as f64).sqrt();
        assert!(mean >= s / 2.0 - 3.0 * se, "({i},{j}): mean {mean} < S/2 = {}", s / 2.0);
    }
}
