use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use statrs::distribution::{ChiSquared, ContinuousCDF};

use irgraph::kernel::{Kernel, Point, TypeAssignment, TypeSpace};
use irgraph::rng;
use irgraph::sampler::{
    coupled_pair, sample_graph, sample_graph_given_types, sample_graph_naive, sample_types,
    SampleParams, SampledGraph, Sampler,
};

fn three_block() -> Kernel {
    Kernel::step(
        TypeSpace::finite(vec![0.2, 0.3, 0.5]).unwrap(),
        vec![vec![0.9, 0.2, 0.0], vec![0.2, 0.6, 0.4], vec![0.0, 0.4, 1.0]],
    )
    .unwrap()
}

fn analytic() -> Kernel {
    Kernel::analytic(
        TypeSpace::uniform_interval(2.0),
        "if(abs(x - y) < 0.7, 1 - abs(x - y), 0.1 * x * y)",
        (0.0, 1.0),
        &["abs(x - y) - 0.7"],
    )
    .unwrap()
}

fn kernels() -> Vec<Kernel> {
    vec![
        three_block(),
        Kernel::constant(TypeSpace::uniform_finite(1), 0.7).unwrap(),
        Kernel::overlap(2, 0.01).unwrap(),
        analytic(),
    ]
}

fn with_width<T: Send>(w: usize, f: impl FnOnce() -> T + Send) -> T {
    rayon::ThreadPoolBuilder::new().num_threads(w).build().unwrap().install(f)
}

fn edges(g: &SampledGraph) -> Vec<(u32, u32)> {
    g.graph.edges().collect()
}

#[test]
fn samples_do_not_depend_on_thread_count() {
    for k in kernels() {
        let params = SampleParams::new(3000, 0.01, 99).unwrap();
        let a = with_width(1, || sample_graph(&k, &params).unwrap());
        let b = with_width(4, || sample_graph(&k, &params).unwrap());
        assert_eq!(edges(&a), edges(&b), "{}", k.id());
        assert_eq!(a.types, b.types);
        let (ka, ea) = with_width(1, || coupled_pair(&k, &params).unwrap());
        let (kb, eb) = with_width(3, || coupled_pair(&k, &params).unwrap());
        assert_eq!(edges(&ka), edges(&kb));
        assert_eq!(edges(&ea), edges(&eb));
        let c = sample_graph(&k, &SampleParams::new(3000, 0.01, 100).unwrap()).unwrap();
        assert_ne!(edges(&a), edges(&c));
    }
}

/// Two-sample chi-square homogeneity test on values binned at pooled deciles.
fn two_sample_p_value(x: &[usize], y: &[usize]) -> f64 {
    let mut pooled: Vec<usize> = x.iter().chain(y).copied().collect();
    pooled.sort_unstable();
    let mut cuts: Vec<usize> = (1..10).map(|q| pooled[q * pooled.len() / 10]).collect();
    cuts.dedup();
    let bin = |v: usize| cuts.partition_point(|&c| c <= v);
    let bins = cuts.len() + 1;
    let mut table = vec![[0.0f64; 2]; bins];
    for &v in x {
        table[bin(v)][0] += 1.0;
    }
    for &v in y {
        table[bin(v)][1] += 1.0;
    }
    let (nx, ny) = (x.len() as f64, y.len() as f64);
    let total = nx + ny;
    let mut stat = 0.0;
    let mut used = 0;
    for row in &table {
        let r = row[0] + row[1];
        if r == 0.0 {
            continue;
        }
        used += 1;
        for (c, n) in [(row[0], nx), (row[1], ny)] {
            let e = r * n / total;
            stat += (c - e) * (c - e) / e;
        }
    }
    1.0 - ChiSquared::new((used - 1) as f64).unwrap().cdf(stat)
}

#[test]
fn skip_sampling_matches_the_pair_loop() {
    for k in [three_block(), Kernel::overlap(2, 0.01).unwrap(), analytic()] {
        let sampler = Sampler::new(&k);
        let (skip, naive): (Vec<usize>, Vec<usize>) = (0..200u64)
            .map(|t| {
                let a = SampleParams::new(500, 0.05, t).unwrap();
                let b = SampleParams::new(500, 0.05, 10_000 + t).unwrap();
                (
                    sampler.sample(&a).unwrap().edge_count(),
                    sample_graph_naive(&k, &b).unwrap().edge_count(),
                )
            })
            .unzip();
        let p = two_sample_p_value(&skip, &naive);
        assert!(p > 0.001, "{}: p = {p}", k.id());
    }
}

fn type_value(k: &Kernel, types: &TypeAssignment, u: usize, v: usize) -> f64 {
    k.eval(&types.point(u), &types.point(v)).unwrap()
}

#[test]
fn pair_frequencies_match_kernel_times_p() {
    let n = 30;
    let p = 0.6;
    let trials = 10_000;
    for k in [three_block(), analytic()] {
        let sampler = Sampler::new(&k);
        let types = sample_types(k.space(), n, &mut rng::stream(5, &[1]));
        let mut counts = vec![vec![0u32; n]; n];
        for t in 0..trials {
            let params = SampleParams::new(n, p, t).unwrap();
            let g = sampler.sample_given_types(types.clone(), &params).unwrap();
            for (u, v) in g.graph.edges() {
                counts[u as usize][v as usize] += 1;
            }
        }
        for u in 0..n {
            for v in u + 1..n {
                let q = type_value(&k, &types, u, v) * p;
                let mean = q * trials as f64;
                let sd = (trials as f64 * q * (1.0 - q)).sqrt();
                let c = counts[u][v] as f64;
                assert!(
                    (c - mean).abs() <= 4.0 * sd + 1e-9,
                    "{} pair ({u}, {v}): {c} vs {mean} ± {sd}",
                    k.id()
                );
            }
        }
    }
}

#[test]
fn edge_counts_are_within_four_sigma_given_types() {
    for k in kernels() {
        let sampler = Sampler::new(&k);
        for seed in 0..5 {
            let params = SampleParams::new(2000, 0.02, seed).unwrap();
            let g = sampler.sample(&params).unwrap();
            let (mut mean, mut var) = (0.0, 0.0);
            for u in 0..2000 {
                for v in u + 1..2000 {
                    let q = type_value(&k, &g.types, u, v) * params.p;
                    mean += q;
                    var += q * (1.0 - q);
                }
            }
            let c = g.edge_count() as f64;
            assert!((c - mean).abs() <= 4.0 * var.sqrt(), "{}: {c} vs {mean}", k.id());
        }
    }
}

#[test]
fn block_frequencies_concentrate() {
    let space = TypeSpace::finite(vec![0.1, 0.6, 0.3]).unwrap();
    let n = 100_000;
    let TypeAssignment::Blocks(b) = sample_types(&space, n, &mut rng::stream(1, &[1])) else {
        panic!()
    };
    for (i, w) in [0.1, 0.6, 0.3].into_iter().enumerate() {
        let f = b.iter().filter(|&&x| x as usize == i).count() as f64 / n as f64;
        assert!((f - w).abs() <= 4.0 * (w * (1.0 - w) / n as f64).sqrt());
    }
}

#[test]
fn interval_types_pass_dkw() {
    use irgraph::kernel::Density;
    let density = Density::new(3.0, vec![0.0, 1.0, 2.5, 3.0], vec![0.5, 0.2, 0.4]).unwrap();
    let space = TypeSpace::interval(3.0, Some(density.clone())).unwrap();
    let n = 50_000;
    let TypeAssignment::Positions(mut xs) = sample_types(&space, n, &mut rng::stream(2, &[1]))
    else {
        panic!()
    };
    xs.sort_by(f64::total_cmp);
    let eps = ((2.0f64 / 1e-6).ln() / (2.0 * n as f64)).sqrt();
    let worst = xs
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = density.mass(0.0, x);
            (f - i as f64 / n as f64).abs().max((f - (i + 1) as f64 / n as f64).abs())
        })
        .fold(0.0, f64::max);
    assert!(worst <= eps, "{worst} > {eps}");
}

#[test]
fn coupling_extremes() {
    let one = Kernel::constant(TypeSpace::uniform_finite(2), 1.0).unwrap();
    let params = SampleParams::new(800, 0.03, 4).unwrap();
    let (kg, er) = coupled_pair(&one, &params).unwrap();
    assert_eq!(edges(&kg), edges(&er));

    let zero = Kernel::constant(TypeSpace::uniform_finite(2), 0.0).unwrap();
    let (kg, er) = coupled_pair(&zero, &params).unwrap();
    assert_eq!(kg.edge_count(), 0);
    let pairs = 800.0 * 799.0 / 2.0;
    let sd = (pairs * 0.03 * 0.97f64).sqrt();
    assert!((er.edge_count() as f64 - pairs * 0.03).abs() <= 4.0 * sd);

    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for k in kernels() {
        let params = SampleParams::new(1500, rng.random_range(0.001..0.05), rng.random()).unwrap();
        let (kg, er) = coupled_pair(&k, &params).unwrap();
        assert!(kg.graph.is_subgraph_of(&er.graph));
        for (u, v) in kg.graph.edges() {
            assert!(type_value(&k, &kg.types, u as usize, v as usize) > 0.0);
        }
    }
}

#[test]
fn given_types_reproduces_sample_graph() {
    let k = three_block();
    let params = SampleParams::new(1000, 0.02, 8).unwrap();
    let g = sample_graph(&k, &params).unwrap();
    let h = sample_graph_given_types(&k, g.types.clone(), &params).unwrap();
    assert_eq!(edges(&g), edges(&h));
    let bad = TypeAssignment::Blocks(vec![7; 1000]);
    assert!(sample_graph_given_types(&k, bad, &params).is_err());
    let _ = Point::Block(0);
}
