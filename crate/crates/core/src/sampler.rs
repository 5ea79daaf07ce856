//! Sampling `G(n, K, p)`: i.i.d. types from `μ`, then each pair independently
//! with probability `K(X_i, X_j)·p`.
//!
//! Pairs are enumerated implicitly per block pair (or bucket pair for kernels
//! on an interval) and visited with geometric skips, so the cost is linear in
//! `n` plus the number of edges. Long pair ranges are cut into fixed-size
//! chunks, each with its own derived stream; the output therefore depends on
//! the seed only, never on the number of threads.

use std::fs;
use std::path::{Path, PathBuf};

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::graphalg::CsrGraph;
use crate::kernel::{
    overlap_windows, Cell, Kernel, KernelVariant, LatticeCell, TypeAssignment, TypeSpace,
};
use crate::rng::{self, phase, StreamRng};

/// Pair indices per independently seeded chunk.
const CHUNK_PAIRS: u64 = 1 << 26;
/// Buckets per axis for kernels on an interval.
pub const DEFAULT_BUCKETS: usize = 64;
const BUCKET_SUBDIVISIONS: usize = 16;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleParams {
    pub n: usize,
    pub p: f64,
    pub seed: u64,
    /// Slack `ω` for diagnostics; `ln ln n` when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub omega: Option<f64>,
}

impl SampleParams {
    pub fn new(n: usize, p: f64, seed: u64) -> Result<SampleParams> {
        let params = SampleParams {
            n,
            p,
            seed,
            omega: None,
        };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 || self.n > u32::MAX as usize {
            return Err(Error::Domain(format!("n = {} must be in 1..=2^32-1", self.n)));
        }
        if !(0.0..=1.0).contains(&self.p) {
            return Err(Error::Domain(format!("p = {} is not in [0, 1]", self.p)));
        }
        if let Some(w) = self.omega {
            if !(w.is_finite() && w > 0.0) {
                return Err(Error::Domain(format!("omega = {w} must be positive")));
            }
        }
        Ok(())
    }

    pub fn omega(&self) -> f64 {
        self.omega.unwrap_or_else(|| default_omega(self.n))
    }
}

/// `ln ln n`, floored at 1 so that small `n` stays meaningful.
pub fn default_omega(n: usize) -> f64 {
    (n as f64).ln().ln().max(1.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub kernel_id: String,
    pub kernel_digest: String,
    pub params: SampleParams,
    /// Which sampler produced the graph.
    pub method: String,
}

/// A sampled graph with its vertex types.
#[derive(Debug, Clone)]
pub struct SampledGraph {
    pub types: TypeAssignment,
    pub graph: CsrGraph,
    pub provenance: Provenance,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleMeta {
    pub provenance: Provenance,
    pub n: usize,
    pub edges: usize,
    pub types_digest: String,
}

impl SampledGraph {
    pub fn n(&self) -> usize {
        self.graph.len()
    }

    pub fn edge_count(&self) -> usize {
        self.graph.edge_count()
    }

    /// SHA-256 over the little-endian encoding of the types.
    pub fn types_digest(&self) -> String {
        let mut h = Sha256::new();
        match &self.types {
            TypeAssignment::Blocks(b) => b.iter().for_each(|x| h.update(x.to_le_bytes())),
            TypeAssignment::Positions(x) => x.iter().for_each(|x| h.update(x.to_le_bytes())),
        }
        h.finalize().iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn meta(&self) -> SampleMeta {
        SampleMeta {
            provenance: self.provenance.clone(),
            n: self.n(),
            edges: self.edge_count(),
            types_digest: self.types_digest(),
        }
    }

    /// Write the edge list to `path` and metadata to `<path>.meta.json`.
    pub fn write(&self, path: impl AsRef<Path>) -> Result<PathBuf> {
        let path = path.as_ref();
        self.graph.write_edge_list(path)?;
        let mut meta_path = path.as_os_str().to_owned();
        meta_path.push(".meta.json");
        let meta_path = PathBuf::from(meta_path);
        let text = serde_json::to_string_pretty(&self.meta()).expect("metadata serialises");
        fs::write(&meta_path, text).map_err(|e| Error::io(&meta_path, e))?;
        Ok(meta_path)
    }
}

/// `n` i.i.d. draws from `μ`.
pub fn sample_types(space: &TypeSpace, n: usize, rng: &mut StreamRng) -> TypeAssignment {
    match space {
        TypeSpace::Finite { weights } => {
            // inverse CDF on the cumulative weights
            let mut cum = Vec::with_capacity(weights.len());
            let mut acc = 0.0;
            for w in weights {
                acc += w;
                cum.push(acc);
            }
            let last = weights.len() as u32 - 1;
            TypeAssignment::Blocks(
                (0..n)
                    .map(|_| {
                        let u: f64 = rng.random();
                        (cum.partition_point(|&c| c <= u) as u32).min(last)
                    })
                    .collect(),
            )
        }
        TypeSpace::Interval { .. } => TypeAssignment::Positions(
            (0..n)
                .map(|_| match space.sample_point(rng) {
                    crate::kernel::Point::Real(x) => x,
                    crate::kernel::Point::Block(_) => unreachable!(),
                })
                .collect(),
        ),
    }
}

fn provenance(kernel: &Kernel, params: &SampleParams, method: &str) -> Provenance {
    Provenance {
        kernel_id: kernel.id(),
        kernel_digest: kernel.digest(),
        params: params.clone(),
        method: method.to_string(),
    }
}

/// Geometric skip: the number of failures before the next success of a
/// Bernoulli(`q`) sequence, given `ln(1 − q)`.
#[inline]
fn skip(rng: &mut StreamRng, ln_1mq: f64) -> u64 {
    let u: f64 = rng.random();
    let s = ((-u).ln_1p() / ln_1mq).floor();
    if s >= u64::MAX as f64 {
        u64::MAX
    } else {
        s as u64
    }
}

/// One range of implicitly enumerated vertex pairs.
#[derive(Debug, Clone, Copy)]
enum PairSpace<'a> {
    /// Unordered pairs inside one group.
    Within(&'a [u32]),
    /// `left × right`.
    Across(&'a [u32], &'a [u32]),
}

impl PairSpace<'_> {
    fn total(&self) -> u64 {
        match self {
            PairSpace::Within(g) => {
                let m = g.len() as u64;
                m * m.saturating_sub(1) / 2
            }
            PairSpace::Across(a, b) => a.len() as u64 * b.len() as u64,
        }
    }

    #[inline]
    fn pair(&self, t: u64) -> (u32, u32) {
        match self {
            PairSpace::Within(g) => {
                // t = v (v − 1) / 2 + w with 0 <= w < v
                let mut v = ((1.0 + (1.0 + 8.0 * t as f64).sqrt()) / 2.0) as u64;
                while v * (v - 1) / 2 > t {
                    v -= 1;
                }
                while v * (v + 1) / 2 <= t {
                    v += 1;
                }
                let w = t - v * (v - 1) / 2;
                (g[w as usize], g[v as usize])
            }
            PairSpace::Across(a, b) => {
                let m = b.len() as u64;
                (a[(t / m) as usize], b[(t % m) as usize])
            }
        }
    }
}

/// Indices in `[lo, hi)` kept independently with probability `q`.
fn skip_range(
    rng: &mut StreamRng,
    lo: u64,
    hi: u64,
    q: f64,
    mut emit: impl FnMut(&mut StreamRng, u64),
) {
    if q <= 0.0 {
        return;
    }
    if q >= 1.0 {
        for t in lo..hi {
            emit(rng, t);
        }
        return;
    }
    let ln_1mq = (-q).ln_1p();
    let mut t = lo;
    loop {
        let s = skip(rng, ln_1mq);
        t = match t.checked_add(s) {
            Some(x) if x < hi => x,
            _ => return,
        };
        emit(rng, t);
        t += 1;
    }
}

/// A unit of sampling work: one chunk of one pair range.
struct Task<'a> {
    pairs: PairSpace<'a>,
    lo: u64,
    hi: u64,
    /// Candidate probability.
    q: f64,
    stream: Vec<u64>,
    /// Acceptance test for candidates, if any.
    accept: Option<&'a (dyn Fn(u32, u32) -> f64 + Sync)>,
}

fn chunked<'a>(
    tasks: &mut Vec<Task<'a>>,
    pairs: PairSpace<'a>,
    q: f64,
    path: &[u64],
    accept: Option<&'a (dyn Fn(u32, u32) -> f64 + Sync)>,
) {
    if q <= 0.0 {
        return;
    }
    let total = pairs.total();
    let mut lo = 0;
    let mut chunk = 0u64;
    while lo < total {
        let hi = (lo + CHUNK_PAIRS).min(total);
        let mut stream = path.to_vec();
        stream.push(chunk);
        tasks.push(Task {
            pairs,
            lo,
            hi,
            q,
            stream,
            accept,
        });
        lo = hi;
        chunk += 1;
    }
}

fn run_tasks(seed: u64, tasks: &[Task<'_>]) -> Vec<(u32, u32)> {
    let parts: Vec<Vec<(u32, u32)>> = tasks
        .par_iter()
        .map(|task| {
            let mut rng = rng::stream(seed, &task.stream);
            let mut out = Vec::new();
            skip_range(&mut rng, task.lo, task.hi, task.q, |rng, t| {
                let (u, v) = task.pairs.pair(t);
                match task.accept {
                    None => out.push((u, v)),
                    Some(f) => {
                        let a: f64 = rng.random();
                        if a < f(u, v) {
                            out.push((u, v));
                        }
                    }
                }
            });
            out
        })
        .collect();
    let mut edges = Vec::with_capacity(parts.iter().map(Vec::len).sum());
    for p in parts {
        edges.extend(p);
    }
    edges
}

fn group_by<F: Fn(usize) -> usize>(n: usize, groups: usize, key: F) -> Vec<Vec<u32>> {
    let mut out = vec![Vec::new(); groups];
    for v in 0..n {
        out[key(v)].push(v as u32);
    }
    out
}

/// Whether the overlap kernel can be positive somewhere on `X × Y`.
fn overlap_may_be_positive(k: u32, eps: f64, x: (f64, f64), y: (f64, f64)) -> bool {
    let gap = (y.0 - x.1).max(x.0 - y.1).max(0.0);
    if gap <= 1.0 {
        return true;
    }
    let (a, b) = overlap_windows(k, eps);
    a.iter().zip(&b).any(|(&ai, &bi)| {
        x.1.min(bi) > x.0.max(ai) && y.1.min(bi) > y.0.max(ai)
    })
}

/// Draw `G(n, K, p)`.
pub fn sample_graph(kernel: &Kernel, params: &SampleParams) -> Result<SampledGraph> {
    Sampler::new(kernel).sample(params)
}

/// Edges of `G(n, K, p)` conditional on the vertex types; see
/// [`Sampler::sample_given_types`].
pub fn sample_graph_given_types(
    kernel: &Kernel,
    types: TypeAssignment,
    params: &SampleParams,
) -> Result<SampledGraph> {
    Sampler::new(kernel).sample_given_types(types, params)
}

/// A kernel with its per-kernel sampling tables, for drawing many graphs.
///
/// For kernels on an interval the tables record which bucket pairs can carry
/// edges at all, which costs far more than one sparse sample.
pub struct Sampler<'k> {
    kernel: &'k Kernel,
    /// Row-major `DEFAULT_BUCKETS²` flags; empty for block kernels.
    live: Vec<bool>,
}

impl<'k> Sampler<'k> {
    pub fn new(kernel: &'k Kernel) -> Sampler<'k> {
        let live = match kernel.space() {
            TypeSpace::Interval { length, .. } => {
                let nb = DEFAULT_BUCKETS;
                let edge = bucket_edges(*length, nb);
                let lattices: Vec<LatticeCell> = (0..nb)
                    .map(|i| {
                        let (a, b) = edge(i);
                        LatticeCell::new(&Cell::interval(a, b), BUCKET_SUBDIVISIONS)
                    })
                    .collect();
                (0..nb * nb)
                    .into_par_iter()
                    .map(|ab| {
                        let (a, b) = (ab / nb, ab % nb);
                        if b < a {
                            return false;
                        }
                        match kernel.variant() {
                            KernelVariant::Overlap { k, eps } => {
                                overlap_may_be_positive(*k, *eps, edge(a), edge(b))
                            }
                            _ => kernel.lattice_extrema(&lattices[a], &lattices[b]).1 > 0.0,
                        }
                    })
                    .collect()
            }
            TypeSpace::Finite { .. } => Vec::new(),
        };
        Sampler { kernel, live }
    }

    pub fn kernel(&self) -> &Kernel {
        self.kernel
    }

    pub fn sample(&self, params: &SampleParams) -> Result<SampledGraph> {
        params.validate()?;
        let types = sample_types(
            self.kernel.space(),
            params.n,
            &mut rng::stream(params.seed, &[phase::TYPES]),
        );
        self.sample_given_types(types, params)
    }

    /// The edge streams are the ones `sample` uses, so with the same seed and
    /// the types it would have drawn the result is the same graph.
    pub fn sample_given_types(
        &self,
        types: TypeAssignment,
        params: &SampleParams,
    ) -> Result<SampledGraph> {
        let kernel = self.kernel;
        params.validate()?;
        let n = params.n;
        let seed = params.seed;
        if types.len() != n {
            return Err(Error::Domain(format!("{} types for n = {n}", types.len())));
        }
        if let Some(v) = (0..n).find(|&v| !kernel.space().contains(&types.point(v))) {
            return Err(Error::Domain(format!("type of vertex {v} is outside the space")));
        }
        let edges = match (kernel.variant(), &types) {
            (KernelVariant::Constant { value }, _) => {
                let all: Vec<u32> = (0..n as u32).collect();
                let mut tasks = Vec::new();
                let path = [phase::EDGES, 0, 0];
                chunked(&mut tasks, PairSpace::Within(&all), value * params.p, &path, None);
                run_tasks(seed, &tasks)
            }
            (KernelVariant::Step { matrix }, TypeAssignment::Blocks(bs)) => {
                let m = matrix.len();
                let groups = group_by(n, m, |v| bs[v] as usize);
                let mut tasks = Vec::new();
                for a in 0..m {
                    for b in a..m {
                        let pairs = if a == b {
                            PairSpace::Within(&groups[a])
                        } else {
                            PairSpace::Across(&groups[a], &groups[b])
                        };
                        let path = [phase::EDGES, a as u64, b as u64];
                        chunked(&mut tasks, pairs, matrix[a][b] * params.p, &path, None);
                    }
                }
                run_tasks(seed, &tasks)
            }
            (_, TypeAssignment::Positions(xs)) => {
                let TypeSpace::Interval { length, .. } = kernel.space() else {
                    unreachable!("positions come from interval spaces")
                };
                let nb = DEFAULT_BUCKETS;
                let h = length / nb as f64;
                let groups = group_by(n, nb, |v| ((xs[v] / h) as usize).min(nb - 1));
                let bound = kernel.max_value().min(1.0);
                let accept =
                    |u: u32, v: u32| kernel.eval_real(xs[u as usize], xs[v as usize]) / bound;
                let accept: &(dyn Fn(u32, u32) -> f64 + Sync) = &accept;
                let mut tasks = Vec::new();
                for a in 0..nb {
                    for b in a..nb {
                        if !self.live[a * nb + b] {
                            continue;
                        }
                        let pairs = if a == b {
                            PairSpace::Within(&groups[a])
                        } else {
                            PairSpace::Across(&groups[a], &groups[b])
                        };
                        let path = [phase::EDGES, a as u64, b as u64];
                        chunked(&mut tasks, pairs, bound * params.p, &path, Some(accept));
                    }
                }
                run_tasks(seed, &tasks)
            }
            _ => unreachable!("type assignments match their spaces"),
        };
        Ok(SampledGraph {
            graph: CsrGraph::from_edges(n, &edges)?,
            types,
            provenance: provenance(kernel, params, "skip"),
        })
    }
}

/// `[a, b)` of bucket `i`; the last bucket ends exactly at `length`.
fn bucket_edges(length: f64, nb: usize) -> impl Fn(usize) -> (f64, f64) {
    let h = length / nb as f64;
    move |i| (h * i as f64, if i + 1 == nb { length } else { h * (i + 1) as f64 })
}

/// Kernel value between the types of two vertices.
fn type_value(kernel: &Kernel, types: &TypeAssignment, u: usize, v: usize) -> f64 {
    kernel.eval_unchecked(&types.point(u), &types.point(v))
}

/// `G(n, K, p)` and `G(n, p)` on shared uniforms: the pair `ij` is an edge of
/// the second graph iff `U_ij < p` and of the first iff `U_ij < K(X_i, X_j) p`.
/// Given `U_ij < p`, `U_ij / p` is uniform, which is what is drawn for the
/// pairs the skip sampler visits.
pub fn coupled_pair(kernel: &Kernel, params: &SampleParams) -> Result<(SampledGraph, SampledGraph)> {
    params.validate()?;
    let n = params.n;
    let seed = params.seed;
    let types = sample_types(kernel.space(), n, &mut rng::stream(seed, &[phase::TYPES]));
    let all: Vec<u32> = (0..n as u32).collect();
    let mut tasks = Vec::new();
    chunked(&mut tasks, PairSpace::Within(&all), params.p, &[phase::COUPLING], None);
    let parts: Vec<(Vec<(u32, u32)>, Vec<(u32, u32)>)> = tasks
        .par_iter()
        .map(|task| {
            let mut rng = rng::stream(seed, &task.stream);
            let mut er = Vec::new();
            let mut kg = Vec::new();
            skip_range(&mut rng, task.lo, task.hi, task.q, |rng, t| {
                let (u, v) = task.pairs.pair(t);
                er.push((u, v));
                let w: f64 = rng.random();
                if w < type_value(kernel, &types, u as usize, v as usize) {
                    kg.push((u, v));
                }
            });
            (kg, er)
        })
        .collect();
    let (mut kg, mut er) = (Vec::new(), Vec::new());
    for (k, e) in parts {
        kg.extend(k);
        er.extend(e);
    }
    let kernel_graph = SampledGraph {
        graph: CsrGraph::from_edges(n, &kg)?,
        types: types.clone(),
        provenance: provenance(kernel, params, "coupled-kernel"),
    };
    let er_graph = SampledGraph {
        graph: CsrGraph::from_edges(n, &er)?,
        types,
        provenance: provenance(
            &Kernel::constant(kernel.space().clone(), 1.0)?,
            params,
            "coupled-er",
        ),
    };
    if !kernel_graph.graph.is_subgraph_of(&er_graph.graph) {
        return Err(Error::Invariant("coupled kernel graph is not a subgraph".into()));
    }
    Ok((kernel_graph, er_graph))
}

/// Reference sampler: one uniform per pair, `O(n²)`.
pub fn sample_graph_naive(kernel: &Kernel, params: &SampleParams) -> Result<SampledGraph> {
    params.validate()?;
    let n = params.n;
    let types = sample_types(kernel.space(), n, &mut rng::stream(params.seed, &[phase::TYPES]));
    let mut rng = rng::stream(params.seed, &[phase::NAIVE]);
    let mut edges = Vec::new();
    for u in 0..n {
        for v in u + 1..n {
            let q = type_value(kernel, &types, u, v) * params.p;
            if rng.random::<f64>() < q {
                edges.push((u as u32, v as u32));
            }
        }
    }
    Ok(SampledGraph {
        graph: CsrGraph::from_edges(n, &edges)?,
        types,
        provenance: provenance(kernel, params, "naive"),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn triangular_index_roundtrip() {
        let g: Vec<u32> = (0..2000).collect();
        let ps = PairSpace::Within(&g);
        let mut t = 0u64;
        for v in 1..2000u32 {
            for w in 0..v {
                assert_eq!(ps.pair(t), (w, v));
                t += 1;
                if v > 50 {
                    break;
                }
            }
            t = (v as u64 + 1) * v as u64 / 2;
        }
        let big = PairSpace::Within(&[]);
        let _ = big.total();
    }

    #[test]
    fn triangular_index_large() {
        // check the float inversion near the top of a 10^6-vertex block
        let m = 1_000_000u64;
        let g: Vec<u32> = (0..m as u32).collect();
        let ps = PairSpace::Within(&g);
        let total = ps.total();
        for t in [total - 1, total - m + 1, total / 2, 12345678901] {
            let (w, v) = ps.pair(t);
            assert!(w < v);
            assert_eq!(v as u64 * (v as u64 - 1) / 2 + w as u64, t);
        }
    }

    #[test]
    fn trivial_examples() {
        let one = Kernel::step(TypeSpace::finite(vec![1.0]).unwrap(), vec![vec![1.0]]).unwrap();
        let g = sample_graph(&one, &SampleParams::new(50, 0.0, 1).unwrap()).unwrap();
        assert_eq!(g.edge_count(), 0);
        assert_eq!(g.types, TypeAssignment::Blocks(vec![0; 50]));
        let c = Kernel::constant(TypeSpace::uniform_interval(1.0), 1.0).unwrap();
        let g = sample_graph(&c, &SampleParams::new(60, 1.0, 1).unwrap()).unwrap();
        assert_eq!(g.edge_count(), 60 * 59 / 2);
        assert!(SampleParams::new(0, 0.5, 1).is_err());
        assert!(SampleParams::new(5, 1.5, 1).is_err());
    }

    #[test]
    fn coupling_examples() {
        let params = SampleParams::new(300, 0.05, 4).unwrap();
        let one = Kernel::constant(TypeSpace::uniform_finite(2), 1.0).unwrap();
        let (k, e) = coupled_pair(&one, &params).unwrap();
        assert_eq!(k.graph, e.graph);
        let zero = Kernel::constant(TypeSpace::uniform_finite(2), 0.0).unwrap();
        let (k, e) = coupled_pair(&zero, &params).unwrap();
        assert_eq!(k.edge_count(), 0);
        assert!(e.edge_count() > 0);
    }

    #[test]
    fn overlap_support_test() {
        assert!(overlap_may_be_positive(2, 0.01, (0.0, 0.1), (1.0, 1.1)));
        assert!(overlap_may_be_positive(2, 0.01, (0.0, 0.1), (1.5, 1.6)));
        // x near 0 and y near 4 share no window
        assert!(!overlap_may_be_positive(2, 0.01, (0.0, 0.1), (3.9, 4.0)));
    }

    #[test]
    fn sidecar_metadata() {
        let dir = tempfile::tempdir().unwrap();
        let k = Kernel::path(3, 1.0, 0.5).unwrap();
        let g = sample_graph(&k, &SampleParams::new(100, 0.1, 3).unwrap()).unwrap();
        let meta_path = g.write(dir.path().join("g.txt")).unwrap();
        let meta: SampleMeta = serde_json::from_str(&fs::read_to_string(meta_path).unwrap()).unwrap();
        assert_eq!(meta.edges, g.edge_count());
        assert_eq!(meta.provenance.kernel_id, "path3");
        let back = CsrGraph::read_edge_list(dir.path().join("g.txt")).unwrap();
        assert_eq!(back, g.graph);
    }
}
