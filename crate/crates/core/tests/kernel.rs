use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use irgraph::kernel::{overlap_windows, Cell, Kernel, Point, TypeSpace};

fn step_kernel() -> impl Strategy<Value = Kernel> {
    (1usize..=6).prop_flat_map(|m| {
        (
            prop::collection::vec(0.05f64..1.0, m),
            prop::collection::vec(prop_oneof![Just(0.0), 0.0f64..=1.0], m * m),
        )
            .prop_map(move |(w, vals)| {
                let total: f64 = w.iter().sum();
                let weights = w.iter().map(|x| x / total).collect();
                let mut matrix = vec![vec![0.0; m]; m];
                for i in 0..m {
                    for j in i..m {
                        matrix[i][j] = vals[i * m + j];
                        matrix[j][i] = vals[i * m + j];
                    }
                }
                Kernel::step(TypeSpace::finite(weights).unwrap(), matrix).unwrap()
            })
    })
}

fn block_cell(m: usize) -> impl Strategy<Value = Cell> {
    prop::collection::btree_set(0..m, 1..=m).prop_map(Cell::blocks)
}

fn analytic() -> Kernel {
    Kernel::analytic(
        TypeSpace::uniform_interval(2.0),
        "exp(-abs(x - y)) * (0.5 + 0.25 * sin(x + y))",
        (0.0, 0.75),
        &[],
    )
    .unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn step_bounds_match_brute_force(
        (k, a, b) in step_kernel().prop_flat_map(|k| {
            let m = k.space().block_count().unwrap();
            (Just(k), block_cell(m), block_cell(m))
        })
    ) {
        let inf = k.kernel_inf(&a, &b).unwrap();
        let sup = k.kernel_sup(&a, &b).unwrap();
        let (Cell::Blocks(xa), Cell::Blocks(xb)) = (&a, &b) else { unreachable!() };
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for &i in xa {
            for &j in xb {
                let v = k.eval(&Point::Block(i), &Point::Block(j)).unwrap();
                lo = lo.min(v);
                hi = hi.max(v);
            }
        }
        prop_assert_eq!(inf, lo);
        prop_assert_eq!(sup, hi);
        prop_assert!((0.0..=1.0).contains(&inf) && inf <= sup && sup <= 1.0);
    }

    #[test]
    fn interval_bounds_are_ordered(a0 in 0.0f64..1.9, la in 0.01f64..0.5, b0 in 0.0f64..1.9, lb in 0.01f64..0.5) {
        let a = Cell::interval(a0, (a0 + la).min(2.0));
        let b = Cell::interval(b0, (b0 + lb).min(2.0));
        for k in [analytic(), Kernel::overlap(2, 0.01).unwrap()] {
            let inf = k.kernel_inf(&a, &b).unwrap();
            let sup = k.kernel_sup(&a, &b).unwrap();
            prop_assert!(0.0 <= inf && inf <= sup && sup <= 1.0, "{inf} {sup}");
        }
    }

    #[test]
    fn kernel_files_round_trip(k in step_kernel()) {
        let back = Kernel::from_toml_str(&k.to_toml_string()).unwrap();
        prop_assert_eq!(back.digest(), k.digest());
        prop_assert_eq!(back.variant(), k.variant());
    }
}

#[test]
fn symmetry_on_random_pairs() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let step = Kernel::step(
        TypeSpace::finite(vec![0.2, 0.3, 0.5]).unwrap(),
        vec![vec![0.1, 0.7, 0.0], vec![0.7, 0.4, 0.9], vec![0.0, 0.9, 1.0]],
    )
    .unwrap();
    let kernels = [step, analytic(), Kernel::overlap(3, 0.01).unwrap()];
    for k in &kernels {
        for _ in 0..10_000 {
            let x = k.space().sample_point(&mut rng);
            let y = k.space().sample_point(&mut rng);
            let a = k.eval(&x, &y).unwrap();
            let b = k.eval(&y, &x).unwrap();
            if k.has_exact_bounds() {
                assert_eq!(a, b);
            } else {
                assert!((a - b).abs() <= 1e-12, "{x:?} {y:?}: {a} vs {b}");
            }
        }
    }
}

#[test]
fn isolation_is_below_lambda() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for k in [analytic(), Kernel::overlap(2, 0.01).unwrap(), Kernel::path(4, 0.3, 0.8).unwrap()] {
        let iso = k.isolation();
        // Between lattice points λ moves by at most a few step masses: each
        // jump of K in x shifts λ by the measure it sweeps over.
        let slack = match (k.space(), iso.resolution) {
            (TypeSpace::Interval { length, .. }, Some(r)) => 4.0 * length / r as f64,
            _ => 1e-12,
        };
        for _ in 0..200 {
            let x = k.space().sample_point(&mut rng);
            let lam = k.lambda_at(&x).unwrap();
            assert!(iso.value <= lam + slack, "{}: {} > λ({x:?}) = {lam}", k.id(), iso.value);
        }
    }
}

#[test]
fn overlap_is_one_on_band_and_zero_off_windows() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for k in 2..=4u32 {
        let kernel = Kernel::overlap(k, 0.01).unwrap();
        let (a, b) = overlap_windows(k, 0.01);
        let len = (k + 2) as f64;
        for _ in 0..20_000 {
            let x: f64 = rng.random_range(0.0..len);
            let y: f64 = rng.random_range(0.0..len);
            let v = kernel.eval(&Point::Real(x), &Point::Real(y)).unwrap();
            let in_band = (x - y).abs() <= 1.0;
            let in_window = a
                .iter()
                .zip(&b)
                .any(|(&lo, &hi)| (lo..=hi).contains(&x) && (lo..=hi).contains(&y));
            if in_band {
                assert_eq!(v, 1.0, "k={k} ({x}, {y})");
            } else if !in_window {
                assert_eq!(v, 0.0, "k={k} ({x}, {y})");
            }
        }
    }
}
