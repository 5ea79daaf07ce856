use serde::{Deserialize, Serialize};

use super::{BitGraph, Partition, PartitionGraph};
use crate::distance::Distance;
use crate::error::{Error, Result};
use crate::kernel::{Kernel, KernelVariant};

/// Largest block count for which coarsenings are enumerated (Bell(12) ≈ 4.2M).
pub const MAX_COARSENING_BLOCKS: usize = 12;

/// Grid schedule for kernels without block structure.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DeltaOptions {
    pub start_cells: usize,
    /// Doubling stops once the grid would exceed this many cells.
    pub max_cells: usize,
    /// Lattice subdivisions per cell; by default `8192 / cells` clamped to
    /// `[8, 64]`, which keeps every round at a similar cost.
    pub subdivisions: Option<usize>,
}

impl Default for DeltaOptions {
    fn default() -> Self {
        DeltaOptions {
            start_cells: 8,
            max_cells: 1024,
            subdivisions: None,
        }
    }
}

impl DeltaOptions {
    fn subdivisions_for(&self, cells: usize) -> usize {
        self.subdivisions
            .unwrap_or_else(|| (8192 / cells.max(1)).clamp(8, 64))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GridRound {
    pub cells: usize,
    pub delta_u: Distance,
    pub delta_l: Distance,
}

/// `Δ_u = sup_A diam P_u(A)` and `Δ_ℓ = inf_A diam P_ℓ(A)`.
#[derive(Debug, Clone, Serialize)]
pub struct DeltaBounds {
    pub delta_u: Distance,
    pub delta_l: Distance,
    pub exact: bool,
    /// Grid size at which the reported values were first reached.
    pub resolution: Option<usize>,
    pub witness_upper: Option<Partition>,
    pub witness_lower: Option<Partition>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub rounds: Vec<GridRound>,
    pub irreducible: bool,
}

impl DeltaBounds {
    /// Bounds given directly, e.g. when reading a report.
    pub fn from_values(delta_u: Distance, delta_l: Distance) -> DeltaBounds {
        DeltaBounds {
            delta_u,
            delta_l,
            exact: true,
            resolution: None,
            witness_upper: None,
            witness_lower: None,
            rounds: Vec::new(),
            irreducible: delta_l.is_finite(),
        }
    }
}

pub fn delta_bounds(kernel: &Kernel) -> Result<DeltaBounds> {
    delta_bounds_with(kernel, &DeltaOptions::default())
}

pub fn delta_bounds_with(kernel: &Kernel, options: &DeltaOptions) -> Result<DeltaBounds> {
    let irreducible = kernel.is_irreducible()?;
    if !irreducible.value {
        return Ok(DeltaBounds {
            delta_u: Distance::Infinite,
            delta_l: Distance::Infinite,
            exact: irreducible.exact,
            resolution: irreducible.resolution,
            witness_upper: None,
            witness_lower: None,
            rounds: Vec::new(),
            irreducible: false,
        });
    }
    if let Some(bs) = kernel.block_structure() {
        // Coarsening can only remove lower edges and add upper ones, and the
        // atoms cannot be split, so the finest partition attains both.
        let (lo, up) = PartitionGraph::pair(kernel, &bs.partition)?;
        return Ok(DeltaBounds {
            delta_u: up.diameter(),
            delta_l: lo.diameter(),
            exact: true,
            resolution: None,
            witness_upper: Some(bs.partition.clone()),
            witness_lower: Some(bs.partition),
            rounds: Vec::new(),
            irreducible: true,
        });
    }
    if options.start_cells == 0 || options.max_cells < options.start_cells {
        return Err(Error::Domain(format!(
            "grid schedule {}..={} is empty",
            options.start_cells, options.max_cells
        )));
    }
    let mut rounds = Vec::new();
    let mut best_u: Option<(Distance, Partition, usize)> = None;
    let mut best_l: Option<(Distance, Partition, usize)> = None;
    let mut cells = options.start_cells;
    while cells <= options.max_cells {
        let grid = Partition::regular_grid(kernel.space(), cells)?;
        let (lo, up) = PartitionGraph::pair_with(kernel, &grid, options.subdivisions_for(cells))?;
        let (du, dl) = (up.diameter(), lo.diameter());
        rounds.push(GridRound {
            cells,
            delta_u: du,
            delta_l: dl,
        });
        if best_u.as_ref().is_none_or(|b| du > b.0) {
            best_u = Some((du, grid.clone(), cells));
        }
        if best_l.as_ref().is_none_or(|b| dl < b.0) {
            best_l = Some((dl, grid, cells));
        }
        cells *= 2;
    }
    let (du, wu, ru) = best_u.expect("at least one round");
    let (dl, wl, rl) = best_l.expect("at least one round");
    Ok(DeltaBounds {
        delta_u: du,
        delta_l: dl,
        exact: false,
        resolution: Some(ru.max(rl)),
        witness_upper: Some(wu),
        witness_lower: Some(wl),
        rounds,
        irreducible: true,
    })
}

/// `Δ_u ≤ Δ_ℓ ≤ Δ_u + 2`.
pub fn check_diff2(bounds: &DeltaBounds) -> Result<bool> {
    check_diff2_values(bounds.delta_u, bounds.delta_l)
}

pub fn check_diff2_values(delta_u: Distance, delta_l: Distance) -> Result<bool> {
    if !delta_l.is_finite() {
        return Err(Error::Precondition("Δ_ℓ is infinite".into()));
    }
    Ok(delta_u <= delta_l && delta_l <= delta_u.plus(2))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WalkCondition {
    /// Some pair of cells has no walk of length exactly `Φ`.
    Holds,
    /// Every pair of cells is joined by walks of length exactly `Φ`.
    Fails,
    Unknown,
}

/// Whether the finest partition has a pair of cells with no walk of length
/// exactly `phi` in its upper graph. Exact for kernels with block structure,
/// `Unknown` otherwise.
///
/// The trivial partition always has a loop when `K ≠ 0`, so the condition
/// only makes sense for fine partitions; refining can only remove walks,
/// and for block kernels the atoms are the finest cells.
pub fn walk_condition(kernel: &Kernel, phi: u32) -> Result<WalkCondition> {
    let Some(bs) = kernel.block_structure() else {
        return Ok(WalkCondition::Unknown);
    };
    let up = PartitionGraph::upper(kernel, &bs.partition)?;
    Ok(if up.graph().exact_walk_witness(phi).is_some() {
        WalkCondition::Holds
    } else {
        WalkCondition::Fails
    })
}

/// Brute-force version of [`walk_condition`] over every coarsening of the
/// block set: `Holds` iff some coarsening has a witness pair. Used to check
/// that the finest partition decides the question.
pub fn walk_condition_over_coarsenings(kernel: &Kernel, phi: u32) -> Result<WalkCondition> {
    let matrix = match kernel.variant() {
        KernelVariant::Step { matrix } => matrix.clone(),
        KernelVariant::Constant { value } => vec![vec![*value]],
        _ => return Ok(WalkCondition::Unknown),
    };
    let m = matrix.len();
    if m > MAX_COARSENING_BLOCKS {
        return Err(Error::UnsupportedSize {
            what: "blocks",
            size: m,
            limit: MAX_COARSENING_BLOCKS,
        });
    }
    for labels in coarsenings(m) {
        let k = labels.iter().copied().max().map_or(0, |x| x as usize + 1);
        let mut g = BitGraph::new(k);
        for a in 0..m {
            for b in a..m {
                if matrix[a][b] > 0.0 {
                    g.add_edge(labels[a] as usize, labels[b] as usize);
                }
            }
        }
        if g.exact_walk_witness(phi).is_some() {
            return Ok(WalkCondition::Holds);
        }
    }
    Ok(WalkCondition::Fails)
}

/// All set partitions of `0..m` as restricted growth strings: `labels[i]` is
/// the group of element `i`, groups numbered by first appearance.
pub fn coarsenings(m: usize) -> impl Iterator<Item = Vec<u8>> {
    let mut cur: Option<Vec<u8>> = Some(vec![0; m]);
    std::iter::from_fn(move || {
        let out = cur.take()?;
        // next string: bump the rightmost position that may grow
        let mut next = out.clone();
        let mut prefix_max = vec![0u8; m];
        for i in 1..m {
            prefix_max[i] = prefix_max[i - 1].max(next[i - 1]);
        }
        let mut i = m;
        while i > 1 {
            i -= 1;
            if next[i] <= prefix_max[i] {
                next[i] += 1;
                for x in next.iter_mut().skip(i + 1) {
                    *x = 0;
                }
                cur = Some(next);
                break;
            }
        }
        Some(out)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::TypeSpace;

    #[test]
    fn bell_numbers() {
        let bell = [1usize, 1, 2, 5, 15, 52, 203, 877];
        for (m, &b) in bell.iter().enumerate().skip(1) {
            assert_eq!(coarsenings(m).count(), b, "m = {m}");
        }
        let all: Vec<_> = coarsenings(3).collect();
        assert_eq!(all.first().unwrap(), &vec![0, 0, 0]);
        assert_eq!(all.last().unwrap(), &vec![0, 1, 2]);
    }

    #[test]
    fn step_examples() {
        let d = delta_bounds(&Kernel::path(4, 1.0, 1.0).unwrap()).unwrap();
        assert_eq!((d.delta_u, d.delta_l, d.exact), (Distance::Finite(3), Distance::Finite(3), true));
        let c = delta_bounds(&Kernel::constant(TypeSpace::uniform_interval(1.0), 0.3).unwrap()).unwrap();
        assert_eq!((c.delta_u, c.delta_l), (Distance::Finite(1), Distance::Finite(1)));
        let r = delta_bounds(&Kernel::step_uniform(vec![vec![0.5, 0.0], vec![0.0, 0.5]]).unwrap()).unwrap();
        assert_eq!((r.delta_u, r.delta_l, r.exact), (Distance::Infinite, Distance::Infinite, true));
    }

    #[test]
    fn diff2_examples() {
        let f = Distance::Finite;
        assert!(check_diff2_values(f(2), f(4)).unwrap());
        assert!(check_diff2_values(f(3), f(3)).unwrap());
        assert!(!check_diff2_values(f(2), f(5)).unwrap());
        assert!(!check_diff2_values(f(4), f(3)).unwrap());
        assert!(check_diff2_values(f(2), Distance::Infinite).is_err());
    }

    #[test]
    fn walk_condition_examples() {
        let c = Kernel::constant(TypeSpace::uniform_finite(1), 0.5).unwrap();
        assert_eq!(walk_condition(&c, 2).unwrap(), WalkCondition::Fails);
        let p = Kernel::path(4, 0.0, 1.0).unwrap();
        assert_eq!(walk_condition(&p, 2).unwrap(), WalkCondition::Holds);
        assert_eq!(walk_condition_over_coarsenings(&p, 2).unwrap(), WalkCondition::Holds);
        let b = Kernel::step_uniform(vec![vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
        // odd walks never return to the starting block
        assert_eq!(walk_condition(&b, 3).unwrap(), WalkCondition::Holds);
        let o = Kernel::overlap(2, 0.01).unwrap();
        assert_eq!(walk_condition(&o, 3).unwrap(), WalkCondition::Unknown);
        let big = Kernel::path(13, 1.0, 1.0).unwrap();
        assert!(matches!(
            walk_condition_over_coarsenings(&big, 2),
            Err(Error::UnsupportedSize { .. })
        ));
    }
}
