//! Partitions of a type space, partition graphs and the estimation of
//! `Δ_u` and `Δ_ℓ`.

mod bitgraph;
mod delta;
mod graph;

use serde::ser::{Serialize, SerializeStruct, Serializer};

pub use bitgraph::BitGraph;
pub use delta::{
    check_diff2, check_diff2_values, coarsenings, delta_bounds, delta_bounds_with,
    walk_condition, walk_condition_over_coarsenings, DeltaBounds, DeltaOptions, GridRound,
    WalkCondition, MAX_COARSENING_BLOCKS,
};
pub use graph::{Flavor, PartitionGraph};

use crate::error::{Error, Result};
use crate::kernel::{Cell, Point, TypeAssignment, TypeSpace};

const MEASURE_TOL: f64 = 1e-12;

/// A finite partition of a type space into cells of positive measure.
#[derive(Debug, Clone, PartialEq)]
pub struct Partition {
    space: TypeSpace,
    cells: Vec<Cell>,
    measures: Vec<f64>,
}

impl Partition {
    /// Validate `cells` as a partition of `space` up to measure zero.
    pub fn new(space: &TypeSpace, cells: Vec<Cell>) -> Result<Partition> {
        if cells.is_empty() {
            return Err(Error::InvalidPartition("a partition needs at least one cell".into()));
        }
        let mut measures = Vec::with_capacity(cells.len());
        for c in &cells {
            let m = space.measure(c).map_err(|e| Error::InvalidPartition(e.to_string()))?;
            if m <= MEASURE_TOL {
                return Err(Error::InvalidPartition(format!("cell {c:?} has measure zero")));
            }
            measures.push(m);
        }
        match space {
            TypeSpace::Finite { weights } => {
                let mut owner = vec![usize::MAX; weights.len()];
                for (i, c) in cells.iter().enumerate() {
                    let Cell::Blocks(bs) = c else { unreachable!("measured above") };
                    for &b in bs {
                        if owner[b] != usize::MAX {
                            return Err(Error::InvalidPartition(format!(
                                "block {b} lies in cells {} and {i}",
                                owner[b]
                            )));
                        }
                        owner[b] = i;
                    }
                }
                if let Some(b) = owner.iter().position(|&o| o == usize::MAX) {
                    return Err(Error::InvalidPartition(format!("block {b} is not covered")));
                }
            }
            TypeSpace::Interval { length, .. } => {
                let mut pieces: Vec<(f64, f64)> = cells
                    .iter()
                    .flat_map(|c| match c {
                        Cell::Intervals(p) => p.clone(),
                        Cell::Blocks(_) => unreachable!("measured above"),
                    })
                    .collect();
                pieces.sort_by(|a, b| a.0.total_cmp(&b.0));
                let mut reach = 0.0f64;
                for &(a, b) in &pieces {
                    if a > reach + MEASURE_TOL {
                        return Err(Error::InvalidPartition(format!("[{reach}, {a}) is not covered")));
                    }
                    if a < reach - MEASURE_TOL {
                        return Err(Error::InvalidPartition(format!("cells overlap near {a}")));
                    }
                    reach = reach.max(b);
                }
                if (reach - length).abs() > MEASURE_TOL {
                    return Err(Error::InvalidPartition(format!("[{reach}, {length}] is not covered")));
                }
            }
        }
        Ok(Partition {
            space: space.clone(),
            cells,
            measures,
        })
    }

    /// One cell per atom of a finite space.
    pub fn blocks(space: &TypeSpace) -> Result<Partition> {
        let m = space
            .block_count()
            .ok_or_else(|| Error::Domain("block partitions need a finite type space".into()))?;
        Partition::new(space, (0..m).map(|b| Cell::blocks([b])).collect())
    }

    /// Group the atoms of a finite space.
    pub fn from_groups(space: &TypeSpace, groups: Vec<Vec<usize>>) -> Result<Partition> {
        Partition::new(space, groups.into_iter().map(Cell::blocks).collect())
    }

    /// Consecutive intervals between interior breakpoints of an interval space.
    pub fn from_breakpoints(space: &TypeSpace, interior: &[f64]) -> Result<Partition> {
        let TypeSpace::Interval { length, .. } = space else {
            return Err(Error::Domain("breakpoint partitions need an interval space".into()));
        };
        let mut pts = Vec::with_capacity(interior.len() + 2);
        pts.push(0.0);
        pts.extend_from_slice(interior);
        pts.push(*length);
        if pts.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidPartition(
                "breakpoints must increase strictly inside the interval".into(),
            ));
        }
        Partition::new(space, pts.windows(2).map(|w| Cell::interval(w[0], w[1])).collect())
    }

    /// `cells` intervals of equal length.
    pub fn regular_grid(space: &TypeSpace, cells: usize) -> Result<Partition> {
        let TypeSpace::Interval { length, .. } = space else {
            return Err(Error::Domain("grid partitions need an interval space".into()));
        };
        if cells == 0 {
            return Err(Error::InvalidPartition("a grid needs at least one cell".into()));
        }
        let h = length / cells as f64;
        let interior: Vec<f64> = (1..cells).map(|i| h * i as f64).collect();
        Partition::from_breakpoints(space, &interior)
    }

    /// The partition with the whole space as its only cell.
    pub fn trivial(space: &TypeSpace) -> Partition {
        let cell = match space {
            TypeSpace::Finite { weights } => Cell::blocks(0..weights.len()),
            TypeSpace::Interval { length, .. } => Cell::interval(0.0, *length),
        };
        Partition {
            space: space.clone(),
            cells: vec![cell],
            measures: vec![1.0],
        }
    }

    pub fn space(&self) -> &TypeSpace {
        &self.space
    }

    pub fn cells(&self) -> &[Cell] {
        &self.cells
    }

    pub fn measures(&self) -> &[f64] {
        &self.measures
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    /// `‖A‖_μ`, the smallest cell measure.
    pub fn min_measure(&self) -> f64 {
        self.measures.iter().copied().fold(f64::INFINITY, f64::min)
    }

    fn same_space(&self, other: &Partition) -> Result<()> {
        if self.space == other.space {
            Ok(())
        } else {
            Err(Error::Domain("partitions of different type spaces".into()))
        }
    }

    /// Whether every cell of `self` lies inside a cell of `coarser`, up to
    /// measure zero.
    pub fn is_refinement(&self, coarser: &Partition) -> Result<bool> {
        self.same_space(coarser)?;
        for (a, &ma) in self.cells.iter().zip(&self.measures) {
            let mut inside = false;
            for b in &coarser.cells {
                let m = self.space.measure(&a.intersect(b)?)?;
                if m >= ma - MEASURE_TOL {
                    inside = true;
                    break;
                }
            }
            if !inside {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// `A ∨ B`: the positive-measure intersections, ordered by `(i, j)`.
    pub fn common_refinement(&self, other: &Partition) -> Result<Partition> {
        self.same_space(other)?;
        let mut cells = Vec::new();
        let mut measures = Vec::new();
        for a in &self.cells {
            for b in &other.cells {
                let c = a.intersect(b)?;
                let m = self.space.measure(&c)?;
                if m > MEASURE_TOL {
                    cells.push(c);
                    measures.push(m);
                }
            }
        }
        Ok(Partition {
            space: self.space.clone(),
            cells,
            measures,
        })
    }

    /// The same cells ordered by their leftmost point (smallest block).
    pub fn canonical(&self) -> Partition {
        let mut idx: Vec<usize> = (0..self.cells.len()).collect();
        let key = |c: &Cell| match c {
            Cell::Blocks(b) => b[0] as f64,
            Cell::Intervals(p) => p[0].0,
        };
        idx.sort_by(|&i, &j| key(&self.cells[i]).total_cmp(&key(&self.cells[j])));
        Partition {
            space: self.space.clone(),
            cells: idx.iter().map(|&i| self.cells[i].clone()).collect(),
            measures: idx.iter().map(|&i| self.measures[i]).collect(),
        }
    }

    /// Equality of the cell sets, ignoring order.
    pub fn same_cells(&self, other: &Partition) -> bool {
        self.space == other.space && self.canonical().cells == other.canonical().cells
    }

    /// Index of the cell containing `point`.
    pub fn locate(&self, point: &Point) -> Option<usize> {
        let len = match &self.space {
            TypeSpace::Interval { length, .. } => Some(*length),
            TypeSpace::Finite { .. } => None,
        };
        self.cells.iter().position(|c| c.contains(point, len))
    }

    /// Cell index of every vertex.
    pub fn assign(&self, types: &TypeAssignment) -> Result<Vec<u32>> {
        match (&self.space, types) {
            (TypeSpace::Finite { weights }, TypeAssignment::Blocks(bs)) => {
                let mut owner = vec![0u32; weights.len()];
                for (i, c) in self.cells.iter().enumerate() {
                    if let Cell::Blocks(b) = c {
                        for &x in b {
                            owner[x] = i as u32;
                        }
                    }
                }
                bs.iter()
                    .map(|&b| {
                        owner.get(b as usize).copied().ok_or_else(|| {
                            Error::Domain(format!("type {b} is outside the type space"))
                        })
                    })
                    .collect()
            }
            (TypeSpace::Interval { length, .. }, TypeAssignment::Positions(xs)) => {
                let mut pieces: Vec<(f64, f64, u32)> = Vec::new();
                for (i, c) in self.cells.iter().enumerate() {
                    if let Cell::Intervals(p) = c {
                        pieces.extend(p.iter().map(|&(a, b)| (a, b, i as u32)));
                    }
                }
                pieces.sort_by(|a, b| a.0.total_cmp(&b.0));
                xs.iter()
                    .map(|&x| {
                        if !(0.0..=*length).contains(&x) {
                            return Err(Error::Domain(format!("type {x} is outside the type space")));
                        }
                        // last piece starting at or before x
                        let k = pieces.partition_point(|p| p.0 <= x).max(1) - 1;
                        Ok(pieces[k].2)
                    })
                    .collect()
            }
            _ => Err(Error::Domain("type assignment does not match the type space".into())),
        }
    }
}

impl Serialize for Partition {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut st = s.serialize_struct("Partition", 2)?;
        st.serialize_field("cells", &self.cells)?;
        st.serialize_field("measures", &self.measures)?;
        st.end()
    }
}
