//! Type spaces, kernels and the cell-pair quantities `K_ℓ`, `K_u`, `λ`.

mod file;
mod quad;
mod space;

use rayon::prelude::*;

pub use file::{DensityDef, KernelFile, SpaceDef, VariantDef};
pub use space::{Cell, Density, Point, TypeAssignment, TypeSpace};

use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::partition::{Partition, PartitionGraph};
use space::MASS_TOL;

/// Lattice subdivisions per interval piece used for ess-inf/ess-sup estimates.
pub const DEFAULT_SUBDIVISIONS: usize = 64;
/// Absolute tolerance of the `λ(x)` quadrature.
pub const LAMBDA_TOL: f64 = 1e-9;
/// Points (minus one) of the `x` lattice minimised over by [`Kernel::isolation`].
pub const DEFAULT_ISOLATION_RESOLUTION: usize = 256;
/// Grid cells used to certify irreducibility of non-step kernels.
pub const IRREDUCIBILITY_GRID: usize = 64;

/// An analytic kernel on an interval. The expression is evaluated with
/// `x <= y` and mirrored.
#[derive(Debug, Clone, PartialEq)]
pub struct AnalyticKernel {
    expression: Expr,
    range: (f64, f64),
    discontinuities: Vec<Expr>,
}

impl AnalyticKernel {
    pub fn expression(&self) -> &Expr {
        &self.expression
    }

    pub fn range(&self) -> (f64, f64) {
        self.range
    }

    /// Curves `g(x, y) = 0` (in canonical order) where the kernel may jump.
    pub fn discontinuities(&self) -> &[Expr] {
        &self.discontinuities
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum KernelVariant {
    /// Block-constant kernel on a finite type space.
    Step { matrix: Vec<Vec<f64>> },
    Constant { value: f64 },
    /// Two-sided tightness construction on `[0, k + 2]` whose lower diameter
    /// exceeds the upper one by two.
    Overlap { k: u32, eps: f64 },
    Analytic(AnalyticKernel),
}

/// Lower and upper essential bounds of `K` over a pair of cells.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CellBounds {
    pub lower: f64,
    pub upper: f64,
    /// `false` when the values are lattice estimates.
    pub exact: bool,
}

/// A real-valued estimate that may be exact.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub exact: bool,
    /// Lattice resolution behind an inexact estimate.
    pub resolution: Option<usize>,
}

/// Outcome of a yes/no check that may be certified only on a grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Verdict {
    pub value: bool,
    pub exact: bool,
    pub resolution: Option<usize>,
}

/// A kernel that is constant on the cells of a finite partition.
#[derive(Debug, Clone)]
pub struct BlockStructure {
    pub weights: Vec<f64>,
    pub matrix: Vec<Vec<f64>>,
    /// The finest partition available for this kernel: single atoms for step
    /// kernels, the whole space for constant kernels.
    pub partition: Partition,
}

/// Symmetric kernel `K: S × S → [0, 1]` on a type space.
#[derive(Debug, Clone, PartialEq)]
pub struct Kernel {
    name: Option<String>,
    space: TypeSpace,
    variant: KernelVariant,
}

fn check_prob(v: f64, what: &str) -> Result<()> {
    if (0.0..=1.0).contains(&v) {
        Ok(())
    } else {
        Err(Error::InvalidKernel(format!("{what} = {v} is not in [0, 1]")))
    }
}

impl Kernel {
    pub fn step(space: TypeSpace, matrix: Vec<Vec<f64>>) -> Result<Kernel> {
        let m = space.block_count().ok_or_else(|| {
            Error::InvalidKernel("step kernels live on finite type spaces".into())
        })?;
        let matrix = mirror_matrix(matrix, m)?;
        Ok(Kernel {
            name: None,
            space,
            variant: KernelVariant::Step { matrix },
        })
    }

    /// Step kernel with equal block weights.
    pub fn step_uniform(matrix: Vec<Vec<f64>>) -> Result<Kernel> {
        let m = matrix.len();
        if m == 0 {
            return Err(Error::InvalidKernel("empty matrix".into()));
        }
        Kernel::step(TypeSpace::uniform_finite(m), matrix)
    }

    /// Tridiagonal step kernel on `m` equally likely blocks: `diag` on the
    /// diagonal, `off` between neighbouring blocks, zero elsewhere.
    pub fn path(m: usize, diag: f64, off: f64) -> Result<Kernel> {
        let matrix = (0..m)
            .map(|i| {
                (0..m)
                    .map(|j| match i.abs_diff(j) {
                        0 => diag,
                        1 => off,
                        _ => 0.0,
                    })
                    .collect()
            })
            .collect();
        Ok(Kernel::step_uniform(matrix)?.with_name(format!("path{m}")))
    }

    pub fn constant(space: TypeSpace, value: f64) -> Result<Kernel> {
        check_prob(value, "constant")?;
        Ok(Kernel {
            name: None,
            space,
            variant: KernelVariant::Constant { value },
        })
    }

    /// Largest admissible `eps` for the overlap kernel: consecutive windows
    /// must overlap, i.e. `(k + 2)(1 - eps)/k > 1`.
    pub fn overlap_eps_max(k: u32) -> f64 {
        2.0 / (k as f64 + 2.0)
    }

    pub fn overlap(k: u32, eps: f64) -> Result<Kernel> {
        if k == 0 {
            return Err(Error::InvalidKernel("overlap kernel needs k >= 1".into()));
        }
        let max = Kernel::overlap_eps_max(k);
        if !(eps > 0.0 && eps < max) {
            return Err(Error::InvalidKernel(format!(
                "overlap kernel needs 0 < eps < {max} for k = {k}, got {eps}"
            )));
        }
        Ok(Kernel {
            name: None,
            space: TypeSpace::uniform_interval(k as f64 + 2.0),
            variant: KernelVariant::Overlap { k, eps },
        })
    }

    pub fn analytic(
        space: TypeSpace,
        expression: &str,
        range: (f64, f64),
        discontinuities: &[&str],
    ) -> Result<Kernel> {
        let length = match &space {
            TypeSpace::Interval { length, .. } => *length,
            TypeSpace::Finite { .. } => {
                return Err(Error::InvalidKernel(
                    "analytic kernels live on interval type spaces".into(),
                ))
            }
        };
        if !(0.0 <= range.0 && range.0 <= range.1 && range.1 <= 1.0) {
            return Err(Error::InvalidKernel(format!(
                "declared range {range:?} is not inside [0, 1]"
            )));
        }
        let analytic = AnalyticKernel {
            expression: Expr::parse(expression)?,
            range,
            discontinuities: discontinuities
                .iter()
                .map(|s| Expr::parse(s))
                .collect::<Result<_>>()?,
        };
        // spot-check the declared range on a canonical lattice
        const R: usize = 128;
        for i in 0..=R {
            let x = length * i as f64 / R as f64;
            for j in i..=R {
                let y = length * j as f64 / R as f64;
                let v = analytic.expression.eval(x, y);
                if !(v >= range.0 - MASS_TOL && v <= range.1 + MASS_TOL) {
                    return Err(Error::InvalidKernel(format!(
                        "expression gives {v} at ({x}, {y}), outside the declared range {range:?}"
                    )));
                }
            }
        }
        Ok(Kernel {
            name: None,
            space,
            variant: KernelVariant::Analytic(analytic),
        })
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Kernel {
        self.name = Some(name.into());
        self
    }

    pub fn name(&self) -> Option<&str> {
        self.name.as_deref()
    }

    /// Short human-readable identifier.
    pub fn id(&self) -> String {
        if let Some(n) = &self.name {
            return n.clone();
        }
        match &self.variant {
            KernelVariant::Step { matrix } => format!("step{}", matrix.len()),
            KernelVariant::Constant { value } => format!("constant({value})"),
            KernelVariant::Overlap { k, eps } => format!("overlap(k={k},eps={eps})"),
            KernelVariant::Analytic(a) => format!("analytic({})", a.expression.source()),
        }
    }

    pub fn space(&self) -> &TypeSpace {
        &self.space
    }

    pub fn variant(&self) -> &KernelVariant {
        &self.variant
    }

    /// Largest value the kernel can take.
    pub fn max_value(&self) -> f64 {
        match &self.variant {
            KernelVariant::Step { matrix } => matrix
                .iter()
                .flatten()
                .copied()
                .fold(0.0, f64::max),
            KernelVariant::Constant { value } => *value,
            KernelVariant::Overlap { .. } => 1.0,
            KernelVariant::Analytic(a) => a.range.1,
        }
    }

    /// `K(x, y)`.
    pub fn eval(&self, x: &Point, y: &Point) -> Result<f64> {
        self.space.check_point(x)?;
        self.space.check_point(y)?;
        Ok(self.eval_unchecked(x, y))
    }

    pub(crate) fn eval_unchecked(&self, x: &Point, y: &Point) -> f64 {
        match (&self.variant, x, y) {
            (KernelVariant::Step { matrix }, Point::Block(a), Point::Block(b)) => matrix[*a][*b],
            (KernelVariant::Constant { value }, _, _) => *value,
            (_, Point::Real(a), Point::Real(b)) => self.eval_real(*a, *b),
            _ => unreachable!("point kind checked against the space"),
        }
    }

    /// `K(x, y)` for interval kernels, without domain checks.
    #[inline]
    pub(crate) fn eval_real(&self, x: f64, y: f64) -> f64 {
        let (x, y) = if x <= y { (x, y) } else { (y, x) };
        match &self.variant {
            KernelVariant::Constant { value } => *value,
            KernelVariant::Overlap { k, eps } => overlap_value(*k, *eps, x, y),
            KernelVariant::Analytic(a) => a.expression.eval(x, y),
            KernelVariant::Step { .. } => unreachable!("step kernels have block types"),
        }
    }

    #[inline]
    fn near_discontinuity(&self, x: f64, y: f64, h: f64) -> bool {
        let (x, y) = if x <= y { (x, y) } else { (y, x) };
        match &self.variant {
            KernelVariant::Overlap { .. } => (y - x - 1.0).abs() < h,
            KernelVariant::Analytic(a) => a.discontinuities.iter().any(|g| g.eval(x, y).abs() < h),
            _ => false,
        }
    }

    /// Exact for step and constant kernels; interval kernels are estimated.
    pub fn has_exact_bounds(&self) -> bool {
        matches!(
            self.variant,
            KernelVariant::Step { .. } | KernelVariant::Constant { .. }
        )
    }

    /// `K_ℓ(a, b)` and `K_u(a, b)` with the default lattice.
    pub fn cell_bounds(&self, a: &Cell, b: &Cell) -> Result<CellBounds> {
        self.cell_bounds_with(a, b, DEFAULT_SUBDIVISIONS)
    }

    pub fn cell_bounds_with(&self, a: &Cell, b: &Cell, subdivisions: usize) -> Result<CellBounds> {
        for c in [a, b] {
            if self.space.measure(c)? <= 0.0 {
                return Err(Error::InvalidCell(format!("{c:?} has measure zero")));
            }
        }
        match (&self.variant, a, b) {
            (KernelVariant::Constant { value }, _, _) => Ok(CellBounds {
                lower: *value,
                upper: *value,
                exact: true,
            }),
            (KernelVariant::Step { matrix }, Cell::Blocks(ba), Cell::Blocks(bb)) => {
                let mut lower = f64::INFINITY;
                let mut upper = f64::NEG_INFINITY;
                for &i in ba {
                    for &j in bb {
                        lower = lower.min(matrix[i][j]);
                        upper = upper.max(matrix[i][j]);
                    }
                }
                Ok(CellBounds {
                    lower,
                    upper,
                    exact: true,
                })
            }
            _ => {
                let la = LatticeCell::new(a, subdivisions);
                let lb = LatticeCell::new(b, subdivisions);
                let (lower, upper) = self.lattice_extrema(&la, &lb);
                Ok(CellBounds {
                    lower,
                    upper,
                    exact: false,
                })
            }
        }
    }

    /// `K_ℓ(a, b)`.
    pub fn kernel_inf(&self, a: &Cell, b: &Cell) -> Result<f64> {
        Ok(self.cell_bounds(a, b)?.lower)
    }

    /// `K_u(a, b)`.
    pub fn kernel_sup(&self, a: &Cell, b: &Cell) -> Result<f64> {
        Ok(self.cell_bounds(a, b)?.upper)
    }

    /// Min and max of `K` over the lattice of a pair of interval cells,
    /// skipping points within one lattice step of a declared discontinuity.
    pub(crate) fn lattice_extrema(&self, a: &LatticeCell, b: &LatticeCell) -> (f64, f64) {
        let h = a.step.min(b.step);
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for &x in &a.points {
            for &y in &b.points {
                if self.near_discontinuity(x, y, h) {
                    continue;
                }
                let v = self.eval_real(x, y);
                lo = lo.min(v);
                hi = hi.max(v);
            }
        }
        if lo > hi {
            // every lattice point sits on a discontinuity; use them all
            for &x in &a.points {
                for &y in &b.points {
                    let v = self.eval_real(x, y);
                    lo = lo.min(v);
                    hi = hi.max(v);
                }
            }
        }
        (lo.max(0.0), hi.min(1.0))
    }

    /// `λ(x) = ∫ K(x, y) dμ(y)`.
    pub fn lambda_at(&self, x: &Point) -> Result<f64> {
        self.space.check_point(x)?;
        Ok(match (&self.variant, &self.space, x) {
            (KernelVariant::Constant { value }, _, _) => *value,
            (KernelVariant::Step { matrix }, TypeSpace::Finite { weights }, Point::Block(b)) => {
                matrix[*b].iter().zip(weights).map(|(k, w)| k * w).sum()
            }
            (_, TypeSpace::Interval { density, .. }, Point::Real(x)) => self.lambda_real(*x, density),
            _ => unreachable!("point kind checked against the space"),
        })
    }

    fn lambda_real(&self, x: f64, density: &Density) -> f64 {
        let mut splits = vec![x - 1.0, x, x + 1.0];
        if let KernelVariant::Overlap { k, eps } = self.variant {
            let (a, b) = overlap_windows(k, eps);
            splits.extend(a);
            splits.extend(b);
        }
        let pieces: Vec<_> = density.pieces().collect();
        let tol = LAMBDA_TOL / pieces.len() as f64;
        pieces
            .iter()
            .map(|&(s, t, d)| {
                d * quad::integrate_split(&|y| self.eval_real(x, y), s, t, &splits, tol / d.max(1.0))
            })
            .sum()
    }

    /// `λ_ = ess inf λ(x)`: exact for step kernels, a lattice minimum otherwise.
    pub fn isolation(&self) -> Estimate {
        self.isolation_with(DEFAULT_ISOLATION_RESOLUTION)
    }

    pub fn isolation_with(&self, resolution: usize) -> Estimate {
        match (&self.variant, &self.space) {
            (KernelVariant::Constant { value }, _) => Estimate {
                value: *value,
                exact: true,
                resolution: None,
            },
            (KernelVariant::Step { matrix }, TypeSpace::Finite { weights }) => Estimate {
                value: matrix
                    .iter()
                    .map(|row| row.iter().zip(weights).map(|(k, w)| k * w).sum::<f64>())
                    .fold(f64::INFINITY, f64::min),
                exact: true,
                resolution: None,
            },
            (_, TypeSpace::Interval { length, density }) => {
                let r = resolution.max(1);
                let value = (0..=r)
                    .into_par_iter()
                    .map(|i| self.lambda_real(length * i as f64 / r as f64, density))
                    .reduce(|| f64::INFINITY, f64::min);
                Estimate {
                    value,
                    exact: false,
                    resolution: Some(r),
                }
            }
            _ => unreachable!("kernel variants match their spaces"),
        }
    }

    /// Block view of step and constant kernels.
    pub fn block_structure(&self) -> Option<BlockStructure> {
        match (&self.variant, &self.space) {
            (KernelVariant::Step { matrix }, TypeSpace::Finite { weights }) => Some(BlockStructure {
                weights: weights.clone(),
                matrix: matrix.clone(),
                partition: Partition::blocks(&self.space).expect("finite space"),
            }),
            (KernelVariant::Constant { value }, _) => Some(BlockStructure {
                weights: vec![1.0],
                matrix: vec![vec![*value]],
                partition: Partition::trivial(&self.space),
            }),
            _ => None,
        }
    }

    /// Irreducibility. Exact for step and constant kernels; other kernels are
    /// checked through the upper partition graph of a regular grid.
    pub fn is_irreducible(&self) -> Result<Verdict> {
        match &self.variant {
            KernelVariant::Step { matrix } => {
                let m = matrix.len();
                let mut seen = vec![false; m];
                let mut stack = vec![0];
                seen[0] = true;
                while let Some(i) = stack.pop() {
                    for j in 0..m {
                        if !seen[j] && matrix[i][j] > 0.0 {
                            seen[j] = true;
                            stack.push(j);
                        }
                    }
                }
                Ok(Verdict {
                    value: seen.iter().all(|&s| s),
                    exact: true,
                    resolution: None,
                })
            }
            KernelVariant::Constant { value } => Ok(Verdict {
                // a single atom admits no proper positive-measure subset
                value: *value > 0.0 || self.space.block_count() == Some(1),
                exact: true,
                resolution: None,
            }),
            _ => {
                let grid = Partition::regular_grid(&self.space, IRREDUCIBILITY_GRID)?;
                let upper = PartitionGraph::upper(self, &grid)?;
                Ok(Verdict {
                    value: upper.graph().is_connected(),
                    exact: false,
                    resolution: Some(IRREDUCIBILITY_GRID),
                })
            }
        }
    }
}

/// Lattice points of an interval cell.
#[derive(Debug, Clone)]
pub(crate) struct LatticeCell {
    pub points: Vec<f64>,
    pub step: f64,
}

impl LatticeCell {
    pub fn new(cell: &Cell, subdivisions: usize) -> LatticeCell {
        let r = subdivisions.max(1);
        let mut points = Vec::new();
        let mut step = f64::INFINITY;
        if let Cell::Intervals(pieces) = cell {
            for &(a, b) in pieces {
                let h = (b - a) / r as f64;
                step = step.min(h);
                points.extend((0..=r).map(|i| if i == r { b } else { a + h * i as f64 }));
            }
        }
        LatticeCell { points, step }
    }
}

/// Window endpoints `(a_i, b_i)`, `i = 1..=k`, of the overlap kernel.
pub fn overlap_windows(k: u32, eps: f64) -> (Vec<f64>, Vec<f64>) {
    let len = k as f64 + 2.0;
    let kf = k as f64;
    (1..=k)
        .map(|i| {
            let i = i as f64;
            ((i - 1.0) * len * (1.0 - eps) / kf, i * len / kf)
        })
        .unzip()
}

/// Overlap kernel value for `x <= y`:
/// `1` on the band `y - x <= 1`, otherwise the sum over windows
/// `a_i <= x < y <= b_i` of `(x - a_i)(b_i - y)`.
#[inline]
fn overlap_value(k: u32, eps: f64, x: f64, y: f64) -> f64 {
    if y - x <= 1.0 {
        return 1.0;
    }
    let len = k as f64 + 2.0;
    let kf = k as f64;
    let mut v = 0.0;
    for i in 1..=k {
        let i = i as f64;
        let a = (i - 1.0) * len * (1.0 - eps) / kf;
        let b = i * len / kf;
        if a <= x && x < y && y <= b {
            v += (x - a) * (b - y);
        }
    }
    v
}

/// Accept a full symmetric matrix or its upper triangle (row `i` holding
/// columns `i..m`), and return the full matrix.
fn mirror_matrix(matrix: Vec<Vec<f64>>, m: usize) -> Result<Vec<Vec<f64>>> {
    if matrix.len() != m {
        return Err(Error::InvalidKernel(format!(
            "matrix has {} rows but the space has {m} types",
            matrix.len()
        )));
    }
    let full = if matrix.iter().all(|r| r.len() == m) {
        for i in 0..m {
            for j in 0..i {
                if (matrix[i][j] - matrix[j][i]).abs() > MASS_TOL {
                    return Err(Error::InvalidKernel(format!(
                        "matrix is not symmetric at ({i}, {j})"
                    )));
                }
            }
        }
        // take the upper triangle as authoritative so the result is exactly symmetric
        (0..m)
            .map(|i| {
                (0..m)
                    .map(|j| if j >= i { matrix[i][j] } else { matrix[j][i] })
                    .collect()
            })
            .collect::<Vec<Vec<f64>>>()
    } else if matrix.iter().enumerate().all(|(i, r)| r.len() == m - i) {
        (0..m)
            .map(|i| {
                (0..m)
                    .map(|j| if j >= i { matrix[i][j - i] } else { matrix[j][i - j] })
                    .collect()
            })
            .collect()
    } else {
        return Err(Error::InvalidKernel(
            "matrix must be square or an upper triangle".into(),
        ));
    };
    for (i, row) in full.iter().enumerate() {
        for (j, &v) in row.iter().enumerate() {
            check_prob(v, &format!("W[{i}][{j}]"))?;
        }
    }
    Ok(full)
}
