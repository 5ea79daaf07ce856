use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{BitGraph, Partition};
use crate::distance::Distance;
use crate::error::{Error, Result};
use crate::kernel::{Kernel, LatticeCell, DEFAULT_SUBDIVISIONS};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Flavor {
    /// Edges where `K_ℓ > 0`.
    Lower,
    /// Edges where `K_u > 0`.
    Upper,
}

/// `P_ℓ(A)` or `P_u(A)`: cells of `A`, with an edge (a loop when `i = j`)
/// wherever the corresponding bound of `K` on `A_i × A_j` is positive.
#[derive(Debug, Clone)]
pub struct PartitionGraph {
    flavor: Flavor,
    partition: Partition,
    values: Vec<f64>,
    graph: BitGraph,
    exact: bool,
}

impl PartitionGraph {
    pub fn lower(kernel: &Kernel, partition: &Partition) -> Result<PartitionGraph> {
        Ok(PartitionGraph::pair(kernel, partition)?.0)
    }

    pub fn upper(kernel: &Kernel, partition: &Partition) -> Result<PartitionGraph> {
        Ok(PartitionGraph::pair(kernel, partition)?.1)
    }

    /// Both flavours from one pass over the cell pairs.
    pub fn pair(kernel: &Kernel, partition: &Partition) -> Result<(PartitionGraph, PartitionGraph)> {
        PartitionGraph::pair_with(kernel, partition, DEFAULT_SUBDIVISIONS)
    }

    pub fn pair_with(
        kernel: &Kernel,
        partition: &Partition,
        subdivisions: usize,
    ) -> Result<(PartitionGraph, PartitionGraph)> {
        if kernel.space() != partition.space() {
            return Err(Error::Domain(
                "the partition is not a partition of the kernel's type space".into(),
            ));
        }
        let m = partition.len();
        let cells = partition.cells();
        let exact = kernel.has_exact_bounds();
        let rows: Vec<Vec<(f64, f64)>> = if exact {
            (0..m)
                .map(|i| {
                    (i..m)
                        .map(|j| {
                            kernel
                                .cell_bounds(&cells[i], &cells[j])
                                .map(|b| (b.lower, b.upper))
                        })
                        .collect::<Result<Vec<_>>>()
                })
                .collect::<Result<_>>()?
        } else {
            let lattices: Vec<LatticeCell> =
                cells.iter().map(|c| LatticeCell::new(c, subdivisions)).collect();
            (0..m)
                .into_par_iter()
                .map(|i| {
                    (i..m)
                        .map(|j| kernel.lattice_extrema(&lattices[i], &lattices[j]))
                        .collect()
                })
                .collect()
        };
        let mut lower = vec![0.0; m * m];
        let mut upper = vec![0.0; m * m];
        let mut gl = BitGraph::new(m);
        let mut gu = BitGraph::new(m);
        for (i, row) in rows.iter().enumerate() {
            for (k, &(lo, hi)) in row.iter().enumerate() {
                let j = i + k;
                for (vals, v, g) in [(&mut lower, lo, &mut gl), (&mut upper, hi, &mut gu)] {
                    vals[i * m + j] = v;
                    vals[j * m + i] = v;
                    if v > 0.0 {
                        g.add_edge(i, j);
                    }
                }
            }
        }
        let make = |flavor, values, graph| PartitionGraph {
            flavor,
            partition: partition.clone(),
            values,
            graph,
            exact,
        };
        Ok((make(Flavor::Lower, lower, gl), make(Flavor::Upper, upper, gu)))
    }

    pub fn flavor(&self) -> Flavor {
        self.flavor
    }

    pub fn partition(&self) -> &Partition {
        &self.partition
    }

    pub fn graph(&self) -> &BitGraph {
        &self.graph
    }

    pub fn len(&self) -> usize {
        self.partition.len()
    }

    pub fn is_empty(&self) -> bool {
        self.partition.is_empty()
    }

    /// Whether the edge values are exact rather than lattice estimates.
    pub fn is_exact(&self) -> bool {
        self.exact
    }

    /// `K_ℓ(A_i, A_j)` or `K_u(A_i, A_j)` according to the flavour.
    pub fn value(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.len() + j]
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        self.graph.has_edge(i, j)
    }

    /// Smallest value over present edges; `None` without edges.
    pub fn min_edge_value(&self) -> Option<f64> {
        let m = self.len();
        (0..m)
            .flat_map(|i| (i..m).map(move |j| (i, j)))
            .filter(|&(i, j)| self.has_edge(i, j))
            .map(|(i, j)| self.value(i, j))
            .reduce(f64::min)
    }

    /// `‖A‖_μ`.
    pub fn min_cell_measure(&self) -> f64 {
        self.partition.min_measure()
    }

    /// Walk diameter; see [`BitGraph::diameter`].
    pub fn diameter(&self) -> Distance {
        self.graph.diameter()
    }

    pub fn exact_walk_exists(&self, i: usize, j: usize, len: u32) -> Result<bool> {
        if i >= self.len() || j >= self.len() {
            return Err(Error::Domain(format!(
                "cell index out of range for a graph on {} cells",
                self.len()
            )));
        }
        Ok(self.graph.exact_walk_exists(i, j, len))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::TypeSpace;

    #[test]
    fn constant_kernel_gives_complete_graph_with_loops() {
        let k = Kernel::constant(TypeSpace::uniform_interval(1.0), 0.4).unwrap();
        let p = Partition::regular_grid(k.space(), 5).unwrap();
        let (lo, up) = PartitionGraph::pair(&k, &p).unwrap();
        for g in [&lo, &up] {
            for i in 0..5 {
                for j in 0..5 {
                    assert!(g.has_edge(i, j));
                }
            }
            assert_eq!(g.diameter(), Distance::Finite(1));
            assert_eq!(g.min_edge_value(), Some(0.4));
            assert!((g.min_cell_measure() - 0.2).abs() < 1e-15);
        }
    }

    #[test]
    fn path_kernel_block_graph() {
        let k = Kernel::path(4, 0.5, 1.0).unwrap();
        let p = Partition::blocks(k.space()).unwrap();
        let lo = PartitionGraph::lower(&k, &p).unwrap();
        assert!(lo.is_exact());
        for i in 0..4 {
            for j in 0..4 {
                assert_eq!(lo.has_edge(i, j), i.abs_diff(j) <= 1);
            }
        }
        assert_eq!(lo.diameter(), Distance::Finite(3));
        let z = Kernel::path(4, 0.0, 1.0).unwrap();
        let lo = PartitionGraph::lower(&z, &p).unwrap();
        assert!(!lo.has_edge(2, 2));
        assert!(lo.has_edge(2, 3));
        assert!(lo.exact_walk_exists(0, 4, 1).is_err());
    }

    #[test]
    fn overlap_grid_graphs_differ_across_the_band() {
        let k = Kernel::overlap(2, 0.01).unwrap();
        let p = Partition::regular_grid(k.space(), 40).unwrap();
        let (lo, up) = PartitionGraph::pair(&k, &p).unwrap();
        let mut differ = 0;
        for i in 0..40 {
            for j in 0..40 {
                if lo.has_edge(i, j) {
                    assert!(up.has_edge(i, j));
                }
                differ += (lo.has_edge(i, j) != up.has_edge(i, j)) as usize;
                assert!(lo.value(i, j) <= up.value(i, j));
            }
        }
        assert!(differ > 0);
        // cells 10 cells apart have width 0.1 and gap exactly 1.0 − 0.1 … 1.1
        assert!(up.has_edge(0, 10));
    }
}
