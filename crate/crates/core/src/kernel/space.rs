use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub(crate) const MASS_TOL: f64 = 1e-12;

/// A point of a type space: a block index for finite spaces, a position for
/// intervals.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Point {
    Block(usize),
    Real(f64),
}

/// Piecewise-constant probability density on `[0, length]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Density {
    breakpoints: Vec<f64>,
    values: Vec<f64>,
}

impl Density {
    pub fn uniform(length: f64) -> Density {
        Density {
            breakpoints: vec![0.0, length],
            values: vec![1.0 / length],
        }
    }

    pub fn new(length: f64, breakpoints: Vec<f64>, values: Vec<f64>) -> Result<Density> {
        if breakpoints.len() != values.len() + 1 || values.is_empty() {
            return Err(Error::Domain(format!(
                "density needs one more breakpoint than values (got {} and {})",
                breakpoints.len(),
                values.len()
            )));
        }
        if breakpoints[0] != 0.0 || (breakpoints[breakpoints.len() - 1] - length).abs() > MASS_TOL {
            return Err(Error::Domain(format!(
                "density breakpoints must run from 0 to {length}"
            )));
        }
        if breakpoints.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Domain("density breakpoints must increase".into()));
        }
        if values.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(Error::Domain("density must be positive on every piece".into()));
        }
        let mass: f64 = values
            .iter()
            .zip(breakpoints.windows(2))
            .map(|(v, w)| v * (w[1] - w[0]))
            .sum();
        if (mass - 1.0).abs() > MASS_TOL {
            return Err(Error::Domain(format!("density integrates to {mass}, not 1")));
        }
        let mut breakpoints = breakpoints;
        let last = breakpoints.len() - 1;
        breakpoints[last] = length;
        Ok(Density { breakpoints, values })
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// `(start, end, density)` for every piece.
    pub fn pieces(&self) -> impl Iterator<Item = (f64, f64, f64)> + '_ {
        self.breakpoints
            .windows(2)
            .zip(&self.values)
            .map(|(w, &v)| (w[0], w[1], v))
    }

    /// Probability mass of `[a, b)`.
    pub fn mass(&self, a: f64, b: f64) -> f64 {
        self.pieces()
            .map(|(s, t, v)| {
                let lo = a.max(s);
                let hi = b.min(t);
                if hi > lo {
                    v * (hi - lo)
                } else {
                    0.0
                }
            })
            .sum()
    }
}

/// The type space `S` together with its probability measure `μ`.
#[derive(Debug, Clone, PartialEq)]
pub enum TypeSpace {
    /// `m` atoms with the given probabilities.
    Finite { weights: Vec<f64> },
    /// `[0, length]` with a piecewise-constant density.
    Interval { length: f64, density: Density },
}

impl TypeSpace {
    pub fn finite(weights: Vec<f64>) -> Result<TypeSpace> {
        if weights.is_empty() {
            return Err(Error::Domain("finite type space needs at least one type".into()));
        }
        if weights.iter().any(|w| !(w.is_finite() && *w > 0.0)) {
            return Err(Error::Domain("type weights must be positive".into()));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > MASS_TOL {
            return Err(Error::Domain(format!("type weights sum to {total}, not 1")));
        }
        Ok(TypeSpace::Finite { weights })
    }

    pub fn uniform_finite(m: usize) -> TypeSpace {
        assert!(m > 0);
        TypeSpace::Finite {
            weights: vec![1.0 / m as f64; m],
        }
    }

    pub fn interval(length: f64, density: Option<Density>) -> Result<TypeSpace> {
        if !(length.is_finite() && length > 0.0) {
            return Err(Error::Domain(format!("interval length {length} must be positive")));
        }
        let density = match density {
            Some(d) => {
                // re-validate against this length
                Density::new(length, d.breakpoints, d.values)?
            }
            None => Density::uniform(length),
        };
        Ok(TypeSpace::Interval { length, density })
    }

    pub fn uniform_interval(length: f64) -> TypeSpace {
        TypeSpace::interval(length, None).expect("positive length")
    }

    pub fn is_finite(&self) -> bool {
        matches!(self, TypeSpace::Finite { .. })
    }

    pub fn block_count(&self) -> Option<usize> {
        match self {
            TypeSpace::Finite { weights } => Some(weights.len()),
            TypeSpace::Interval { .. } => None,
        }
    }

    pub fn contains(&self, point: &Point) -> bool {
        match (self, point) {
            (TypeSpace::Finite { weights }, Point::Block(b)) => *b < weights.len(),
            (TypeSpace::Interval { length, .. }, Point::Real(x)) => (0.0..=*length).contains(x),
            _ => false,
        }
    }

    pub(crate) fn check_point(&self, point: &Point) -> Result<()> {
        if self.contains(point) {
            Ok(())
        } else {
            Err(Error::Domain(format!("point {point:?} is outside the type space")))
        }
    }

    /// `μ(cell)`.
    pub fn measure(&self, cell: &Cell) -> Result<f64> {
        match (self, cell) {
            (TypeSpace::Finite { weights }, Cell::Blocks(bs)) => {
                if let Some(b) = bs.iter().find(|&&b| b >= weights.len()) {
                    return Err(Error::InvalidCell(format!("block {b} out of range")));
                }
                Ok(bs.iter().map(|&b| weights[b]).sum())
            }
            (TypeSpace::Interval { length, density }, Cell::Intervals(pieces)) => {
                if let Some(&(a, b)) = pieces
                    .iter()
                    .find(|(a, b)| *a < -MASS_TOL || *b > length + MASS_TOL)
                {
                    return Err(Error::InvalidCell(format!(
                        "[{a}, {b}) leaves the interval [0, {length}]"
                    )));
                }
                Ok(pieces.iter().map(|&(a, b)| density.mass(a, b)).sum())
            }
            _ => Err(Error::Domain("cell kind does not match the type space".into())),
        }
    }

    /// Draw one point from `μ`.
    pub fn sample_point<R: Rng + ?Sized>(&self, rng: &mut R) -> Point {
        match self {
            TypeSpace::Finite { weights } => {
                let mut u: f64 = rng.random();
                for (b, w) in weights.iter().enumerate() {
                    if u < *w {
                        return Point::Block(b);
                    }
                    u -= w;
                }
                Point::Block(weights.len() - 1)
            }
            TypeSpace::Interval { density, .. } => {
                let mut u: f64 = rng.random();
                let pieces: Vec<_> = density.pieces().collect();
                for &(s, t, v) in &pieces {
                    let mass = v * (t - s);
                    if u < mass {
                        return Point::Real(s + u / v);
                    }
                    u -= mass;
                }
                let (s, t, _) = pieces[pieces.len() - 1];
                Point::Real(s + rng.random::<f64>() * (t - s))
            }
        }
    }
}

/// A measurable subset of a type space: a set of atoms or a finite union of
/// half-open intervals. Constructors normalise the representation so that
/// structurally equal cells compare equal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Cell {
    Blocks(Vec<usize>),
    Intervals(Vec<(f64, f64)>),
}

impl Cell {
    pub fn blocks(blocks: impl IntoIterator<Item = usize>) -> Cell {
        let mut v: Vec<usize> = blocks.into_iter().collect();
        v.sort_unstable();
        v.dedup();
        Cell::Blocks(v)
    }

    pub fn interval(a: f64, b: f64) -> Cell {
        Cell::intervals([(a, b)])
    }

    /// Union of intervals; empty pieces are dropped and touching pieces merged.
    pub fn intervals(pieces: impl IntoIterator<Item = (f64, f64)>) -> Cell {
        let mut v: Vec<(f64, f64)> = pieces.into_iter().filter(|(a, b)| b > a).collect();
        v.sort_by(|x, y| x.0.total_cmp(&y.0));
        let mut merged: Vec<(f64, f64)> = Vec::with_capacity(v.len());
        for (a, b) in v {
            match merged.last_mut() {
                Some(last) if a <= last.1 + MASS_TOL => last.1 = last.1.max(b),
                _ => merged.push((a, b)),
            }
        }
        Cell::Intervals(merged)
    }

    pub fn is_empty(&self) -> bool {
        match self {
            Cell::Blocks(b) => b.is_empty(),
            Cell::Intervals(p) => p.is_empty(),
        }
    }

    /// Lebesgue length for interval cells, atom count for block cells.
    pub fn size(&self) -> f64 {
        match self {
            Cell::Blocks(b) => b.len() as f64,
            Cell::Intervals(p) => p.iter().map(|(a, b)| b - a).sum(),
        }
    }

    pub fn intersect(&self, other: &Cell) -> Result<Cell> {
        match (self, other) {
            (Cell::Blocks(a), Cell::Blocks(b)) => {
                Ok(Cell::blocks(a.iter().copied().filter(|x| b.binary_search(x).is_ok())))
            }
            (Cell::Intervals(a), Cell::Intervals(b)) => {
                let mut out = Vec::new();
                for &(s1, t1) in a {
                    for &(s2, t2) in b {
                        let lo = s1.max(s2);
                        let hi = t1.min(t2);
                        if hi > lo {
                            out.push((lo, hi));
                        }
                    }
                }
                Ok(Cell::intervals(out))
            }
            _ => Err(Error::Domain("cannot intersect cells of different kinds".into())),
        }
    }

    /// Membership; interval cells are closed at the right end of the space.
    pub fn contains(&self, point: &Point, space_len: Option<f64>) -> bool {
        match (self, point) {
            (Cell::Blocks(bs), Point::Block(b)) => bs.binary_search(b).is_ok(),
            (Cell::Intervals(ps), Point::Real(x)) => ps.iter().any(|&(a, b)| {
                (*x >= a && *x < b) || (Some(b) == space_len && *x == b)
            }),
            _ => false,
        }
    }
}

/// Types `X_1, …, X_n` of sampled vertices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TypeAssignment {
    Blocks(Vec<u32>),
    Positions(Vec<f64>),
}

impl TypeAssignment {
    pub fn len(&self) -> usize {
        match self {
            TypeAssignment::Blocks(v) => v.len(),
            TypeAssignment::Positions(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn point(&self, v: usize) -> Point {
        match self {
            TypeAssignment::Blocks(b) => Point::Block(b[v] as usize),
            TypeAssignment::Positions(x) => Point::Real(x[v]),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn finite_weights_are_validated() {
        assert!(TypeSpace::finite(vec![0.5, 0.5]).is_ok());
        assert!(TypeSpace::finite(vec![0.5, 0.4]).is_err());
        assert!(TypeSpace::finite(vec![1.0, 0.0]).is_err());
        assert!(TypeSpace::finite(vec![]).is_err());
    }

    #[test]
    fn density_is_validated() {
        assert!(Density::new(2.0, vec![0.0, 1.0, 2.0], vec![0.25, 0.75]).is_ok());
        assert!(Density::new(2.0, vec![0.0, 1.0, 2.0], vec![0.25, 0.7]).is_err());
        assert!(Density::new(2.0, vec![0.0, 2.0], vec![0.0]).is_err());
        assert!(Density::new(2.0, vec![0.0, 1.5], vec![0.5]).is_err());
    }

    #[test]
    fn measures() {
        let s = TypeSpace::finite(vec![0.2, 0.3, 0.5]).unwrap();
        assert!((s.measure(&Cell::blocks([0, 2])).unwrap() - 0.7).abs() < 1e-15);
        assert!(s.measure(&Cell::blocks([3])).is_err());
        let d = Density::new(2.0, vec![0.0, 1.0, 2.0], vec![0.25, 0.75]).unwrap();
        let s = TypeSpace::interval(2.0, Some(d)).unwrap();
        let m = s.measure(&Cell::intervals([(0.5, 1.5)])).unwrap();
        assert!((m - 0.5).abs() < 1e-15);
        assert!(s.measure(&Cell::blocks([0])).is_err());
    }

    #[test]
    fn interval_cells_normalise() {
        let c = Cell::intervals([(0.5, 0.7), (0.0, 0.2), (0.2, 0.3), (0.9, 0.9)]);
        assert_eq!(c, Cell::Intervals(vec![(0.0, 0.3), (0.5, 0.7)]));
        let i = c.intersect(&Cell::interval(0.25, 0.6)).unwrap();
        assert_eq!(i, Cell::Intervals(vec![(0.25, 0.3), (0.5, 0.6)]));
    }

    #[test]
    fn sampled_points_lie_in_space() {
        let mut rng = crate::rng::stream(1, &[]);
        let d = Density::new(3.0, vec![0.0, 1.0, 3.0], vec![0.5, 0.25]).unwrap();
        let s = TypeSpace::interval(3.0, Some(d)).unwrap();
        for _ in 0..1000 {
            assert!(s.contains(&s.sample_point(&mut rng)));
        }
    }
}
