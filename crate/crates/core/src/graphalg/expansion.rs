use serde::{Deserialize, Serialize};

use super::CsrGraph;
use crate::error::{Error, Result};
use crate::kernel::TypeAssignment;
use crate::partition::{Partition, PartitionGraph};
use crate::rng;

/// Which partition cell each vertex belongs to, with cell sizes `|V(A_i)|`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CellMembership {
    cell_of: Vec<u32>,
    sizes: Vec<usize>,
}

impl CellMembership {
    pub fn new(cell_of: Vec<u32>, cells: usize) -> Result<CellMembership> {
        let mut sizes = vec![0; cells];
        for &c in &cell_of {
            *sizes
                .get_mut(c as usize)
                .ok_or_else(|| Error::Domain(format!("cell {c} out of range 0..{cells}")))? += 1;
        }
        Ok(CellMembership { cell_of, sizes })
    }

    pub fn from_partition(partition: &Partition, types: &TypeAssignment) -> Result<CellMembership> {
        CellMembership::new(partition.assign(types)?, partition.len())
    }

    pub fn cell_of(&self, v: usize) -> usize {
        self.cell_of[v] as usize
    }

    pub fn size(&self, cell: usize) -> usize {
        self.sizes[cell]
    }

    pub fn cells(&self) -> usize {
        self.sizes.len()
    }

    pub fn vertices(&self) -> usize {
        self.cell_of.len()
    }

    pub fn members(&self, cell: usize) -> Vec<u32> {
        (0..self.cell_of.len() as u32)
            .filter(|&v| self.cell_of[v as usize] as usize == cell)
            .collect()
    }
}

/// `t(k) = k` up to `Φ − 2`, then constant.
pub fn t_of(k: u32, phi: u32) -> u32 {
    k.min(phi.saturating_sub(2))
}

/// `S_{i,j} = n μ(A_j) (1 − (1 − K_ℓ(A_i, A_j) p)^{|U|})`.
pub fn s_ij(n: f64, mu_j: f64, k_l: f64, p: f64, u_size: f64) -> f64 {
    n * mu_j * -(u_size * (-k_l * p).ln_1p()).exp_m1()
}

/// `|N(U) ∩ (V(A_j) \ U)|` for `U ⊆ V(A_i)` with `|U| ≤ |V(A_i)|/2`.
pub fn neighbor_hit_count(
    graph: &CsrGraph,
    cells: &CellMembership,
    u_set: &[u32],
    source_cell: usize,
    target_cell: usize,
) -> Result<usize> {
    if graph.len() != cells.vertices() {
        return Err(Error::Domain("cell membership and graph disagree on n".into()));
    }
    if source_cell >= cells.cells() || target_cell >= cells.cells() {
        return Err(Error::Domain("cell index out of range".into()));
    }
    let mut in_u = vec![false; graph.len()];
    for &v in u_set {
        let v = v as usize;
        if v >= graph.len() || cells.cell_of(v) != source_cell {
            return Err(Error::Precondition(format!("vertex {v} is not in V(A_{source_cell})")));
        }
        if std::mem::replace(&mut in_u[v], true) {
            return Err(Error::Precondition(format!("vertex {v} repeated in U")));
        }
    }
    if 2 * u_set.len() > cells.size(source_cell) {
        return Err(Error::Precondition(format!(
            "|U| = {} exceeds |V(A_i)|/2 = {}/2",
            u_set.len(),
            cells.size(source_cell)
        )));
    }
    let mut hit = vec![false; graph.len()];
    let mut count = 0;
    for &v in u_set {
        for &w in graph.neighbors(v as usize) {
            let w = w as usize;
            if !in_u[w] && !hit[w] && cells.cell_of(w) == target_cell {
                hit[w] = true;
                count += 1;
            }
        }
    }
    Ok(count)
}

/// A walk `A_0, …, A_ℓ` in the lower partition graph and a start vertex.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WalkSpec {
    pub walk: Vec<usize>,
    pub start: u32,
    pub phi: u32,
    /// Cap on the walk length.
    pub omega: u32,
    /// Seed of the random truncations, kept apart from edge sampling so that
    /// traces at different `p` make the same choices.
    pub truncation_seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExpansionTrace {
    pub walk: Vec<usize>,
    pub gamma_sizes: Vec<usize>,
    pub gamma_prime_sizes: Vec<usize>,
    /// `S = n ‖A‖_μ K_ℓ p / 4`.
    pub s: f64,
    pub t: Vec<u32>,
    /// `S^{t(k)}`.
    pub bound: Vec<f64>,
    pub bound_satisfied: Vec<bool>,
}

impl ExpansionTrace {
    pub fn all_satisfied(&self) -> bool {
        self.bound_satisfied.iter().all(|&b| b)
    }
}

/// Neighbourhood expansion along a walk: `Γ_0 = {u}` and `Γ_k` is the set of
/// vertices of `A_k` outside `Γ'_{k−1}` with a neighbour in `Γ'_{k−1}`, where
/// `Γ'_k` is `Γ_k` cut down to a uniformly random subset of
/// `⌊|V(A_k)|/2⌋` vertices when it is larger than that.
pub fn expansion_trace(
    graph: &CsrGraph,
    cells: &CellMembership,
    lower: &PartitionGraph,
    p: f64,
    spec: &WalkSpec,
) -> Result<ExpansionTrace> {
    let n = graph.len();
    if cells.vertices() != n || cells.cells() != lower.len() {
        return Err(Error::Domain("graph, cells and partition graph disagree".into()));
    }
    let walk = &spec.walk;
    if walk.is_empty() {
        return Err(Error::Precondition("the walk needs at least one cell".into()));
    }
    if let Some(&c) = walk.iter().find(|&&c| c >= lower.len()) {
        return Err(Error::Precondition(format!("cell {c} out of range")));
    }
    let len = walk.len() - 1;
    if len > spec.omega as usize {
        return Err(Error::Precondition(format!(
            "walk length {len} exceeds ω = {}",
            spec.omega
        )));
    }
    for w in walk.windows(2) {
        if !lower.has_edge(w[0], w[1]) {
            return Err(Error::Precondition(format!(
                "cells {} and {} are not adjacent in the lower partition graph",
                w[0], w[1]
            )));
        }
    }
    let u = spec.start as usize;
    if u >= n || cells.cell_of(u) != walk[0] {
        return Err(Error::Precondition(format!("start vertex {u} is not in V(A_0)")));
    }
    let s = n as f64 * lower.min_cell_measure() * lower.min_edge_value().unwrap_or(0.0) * p / 4.0;

    let mut prime_epoch = vec![u32::MAX; n];
    let mut gamma_epoch = vec![u32::MAX; n];
    let mut gamma: Vec<u32> = vec![spec.start];
    let mut trace = ExpansionTrace {
        walk: walk.clone(),
        gamma_sizes: Vec::with_capacity(walk.len()),
        gamma_prime_sizes: Vec::with_capacity(walk.len()),
        s,
        t: Vec::with_capacity(walk.len()),
        bound: Vec::with_capacity(walk.len()),
        bound_satisfied: Vec::with_capacity(walk.len()),
    };
    let mut prime: Vec<u32> = Vec::new();
    for (k, &cell) in walk.iter().enumerate() {
        if k > 0 {
            let epoch = k as u32;
            for &x in &prime {
                prime_epoch[x as usize] = epoch;
            }
            gamma.clear();
            for &x in &prime {
                for &w in graph.neighbors(x as usize) {
                    let wi = w as usize;
                    if cells.cell_of(wi) == cell
                        && prime_epoch[wi] != epoch
                        && gamma_epoch[wi] != epoch
                    {
                        gamma_epoch[wi] = epoch;
                        gamma.push(w);
                    }
                }
            }
        }
        let cap = cells.size(cell) / 2;
        prime = if gamma.len() <= cap {
            gamma.clone()
        } else {
            let mut keyed: Vec<(u64, u32)> = gamma
                .iter()
                .map(|&v| (rng::derive_seed(spec.truncation_seed, &[k as u64, v as u64]), v))
                .collect();
            keyed.select_nth_unstable(cap);
            keyed.truncate(cap);
            keyed.into_iter().map(|(_, v)| v).collect()
        };
        let t = t_of(k as u32, spec.phi);
        let bound = s.powi(t as i32);
        trace.gamma_sizes.push(gamma.len());
        trace.gamma_prime_sizes.push(prime.len());
        trace.t.push(t);
        trace.bound.push(bound);
        trace.bound_satisfied.push(gamma.len() as f64 >= bound);
    }
    Ok(trace)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graphalg::tests::complete;
    use crate::kernel::{Kernel, TypeSpace};

    #[test]
    fn s_ij_example() {
        let v = s_ij(1000.0, 0.5, 0.2, 0.01, 10.0);
        // 500 (1 − 0.998^10) evaluated with 40-digit arithmetic
        assert!((v - 9.910_478_324_025_288).abs() < 1e-9, "{v}");
    }

    #[test]
    fn t_examples() {
        assert_eq!((0..6).map(|k| t_of(k, 4)).collect::<Vec<_>>(), vec![0, 1, 2, 2, 2, 2]);
        assert_eq!(t_of(3, 1), 0);
    }

    #[test]
    fn hit_count_examples() {
        let g = complete(10);
        let cells = CellMembership::new(vec![0, 0, 0, 0, 1, 1, 1, 1, 1, 1], 2).unwrap();
        assert_eq!(neighbor_hit_count(&g, &cells, &[0, 1], 0, 1).unwrap(), 6);
        assert_eq!(neighbor_hit_count(&g, &cells, &[0, 1], 0, 0).unwrap(), 2);
        let e = CsrGraph::empty(10);
        assert_eq!(neighbor_hit_count(&e, &cells, &[0], 0, 1).unwrap(), 0);
        assert!(matches!(
            neighbor_hit_count(&g, &cells, &[0, 1, 2], 0, 1),
            Err(Error::Precondition(_))
        ));
        assert!(neighbor_hit_count(&g, &cells, &[4], 0, 1).is_err());
    }

    #[test]
    fn complete_graph_trace() {
        let n = 20;
        let k = Kernel::constant(TypeSpace::uniform_finite(1), 1.0).unwrap();
        let part = Partition::trivial(k.space());
        let lower = PartitionGraph::lower(&k, &part).unwrap();
        let cells = CellMembership::new(vec![0; n], 1).unwrap();
        let spec = WalkSpec {
            walk: vec![0, 0],
            start: 3,
            phi: 1,
            omega: 3,
            truncation_seed: 1,
        };
        let t = expansion_trace(&complete(n as u32), &cells, &lower, 1.0, &spec).unwrap();
        assert_eq!(t.gamma_sizes, vec![1, n - 1]);
        assert_eq!(t.gamma_prime_sizes, vec![1, n / 2]);
        assert!(t.all_satisfied());
        let bad = WalkSpec { walk: vec![0, 0, 0, 0, 0], ..spec.clone() };
        assert!(expansion_trace(&complete(n as u32), &cells, &lower, 1.0, &bad).is_err());
        let bad = WalkSpec { start: 99, ..spec };
        assert!(expansion_trace(&complete(n as u32), &cells, &lower, 1.0, &bad).is_err());
    }

    #[test]
    fn walks_must_follow_lower_edges() {
        let k = Kernel::path(3, 0.0, 1.0).unwrap();
        let part = Partition::blocks(k.space()).unwrap();
        let lower = PartitionGraph::lower(&k, &part).unwrap();
        let cells = CellMembership::new(vec![0, 1, 2], 3).unwrap();
        let g = CsrGraph::from_edges(3, &[(0, 1), (1, 2)]).unwrap();
        let spec = WalkSpec { walk: vec![0, 2], start: 0, phi: 2, omega: 3, truncation_seed: 0 };
        assert!(matches!(expansion_trace(&g, &cells, &lower, 1.0, &spec), Err(Error::Precondition(_))));
        let spec = WalkSpec { walk: vec![0, 1, 2], ..spec };
        let t = expansion_trace(&g, &cells, &lower, 1.0, &spec).unwrap();
        assert_eq!(t.gamma_sizes, vec![1, 0, 0]);
        // cells of one vertex truncate Γ' to nothing
        assert_eq!(t.gamma_prime_sizes, vec![0, 0, 0]);
    }
}
