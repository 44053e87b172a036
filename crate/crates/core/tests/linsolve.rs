use gamma_core::fem::{assemble, FeSpace, Form, SparseSymMatrix};
use gamma_core::linsolve::{cg_solve, cg_solve_from, direct_solve, Preconditioner, SolveOptions};
use gamma_core::mesh::{build_unit_disk, BoundaryTag};
use gamma_core::Error;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::sync::Arc;

fn dense_to_sparse(a: &[Vec<f64>]) -> SparseSymMatrix {
    let n = a.len();
    let mut t = Vec::new();
    for (i, row) in a.iter().enumerate() {
        for (j, &v) in row.iter().enumerate() {
            if v != 0.0 {
                t.push((i, j, v));
            }
        }
    }
    SparseSymMatrix::from_triplets(n, &t)
}

/// `B B^T + n I` with uniform random `B`.
fn random_spd(n: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let b: Vec<Vec<f64>> = (0..n)
        .map(|_| (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect())
        .collect();
    (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    let s: f64 = (0..n).map(|k| b[i][k] * b[j][k]).sum();
                    s + if i == j { n as f64 } else { 0.0 }
                })
                .collect()
        })
        .collect()
}

/// Textbook Cholesky `A = L L^T` followed by two triangular solves.
fn cholesky_oracle(a: &[Vec<f64>], b: &[f64]) -> Vec<f64> {
    let n = a.len();
    let mut l = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..=i {
            let s: f64 = (0..j).map(|k| l[i][k] * l[j][k]).sum();
            if i == j {
                l[i][i] = (a[i][i] - s).sqrt();
            } else {
                l[i][j] = (a[i][j] - s) / l[j][j];
            }
        }
    }
    let mut y = vec![0.0; n];
    for i in 0..n {
        y[i] = (b[i] - (0..i).map(|k| l[i][k] * y[k]).sum::<f64>()) / l[i][i];
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        x[i] = (y[i] - (i + 1..n).map(|k| l[k][i] * x[k]).sum::<f64>()) / l[i][i];
    }
    x
}

fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

fn tight() -> SolveOptions {
    SolveOptions {
        tol: 1e-13,
        ..SolveOptions::default()
    }
}

#[test]
fn identity_in_one_iteration() {
    let n = 7;
    let id = SparseSymMatrix::from_triplets(n, &(0..n).map(|i| (i, i, 1.0)).collect::<Vec<_>>());
    let b: Vec<f64> = (0..n).map(|i| (i as f64).sin() + 0.5).collect();
    for pc in [Preconditioner::None, Preconditioner::Jacobi] {
        let out = cg_solve(
            &id,
            &b,
            &SolveOptions {
                preconditioner: pc,
                ..SolveOptions::default()
            },
        )
        .unwrap();
        assert_eq!(out.iterations, 1);
        assert!(max_diff(&out.x, &b) <= 1e-15);
    }
    assert_eq!(direct_solve(&id, &b).unwrap(), b);
}

#[test]
fn two_by_two() {
    let a = dense_to_sparse(&[vec![2.0, 1.0], vec![1.0, 2.0]]);
    let out = cg_solve(&a, &[3.0, 3.0], &tight()).unwrap();
    assert!(max_diff(&out.x, &[1.0, 1.0]) <= 1e-14);
    let x = direct_solve(&a, &[3.0, 3.0]).unwrap();
    assert!(max_diff(&x, &[1.0, 1.0]) <= 1e-15);
}

#[test]
fn random_spd_against_cholesky() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for n in [50, 100] {
        let dense = random_spd(n, &mut rng);
        let a = dense_to_sparse(&dense);
        let b: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let oracle = cholesky_oracle(&dense, &b);
        let cg = cg_solve(&a, &b, &tight()).unwrap();
        assert!(max_diff(&cg.x, &oracle) <= 1e-8, "n = {n}");
        let direct = direct_solve(&a, &b).unwrap();
        assert!(max_diff(&direct, &oracle) <= 1e-12, "n = {n}");
        assert!(max_diff(&direct, &cg.x) <= 1e-8, "n = {n}");
        let r = a.matvec(&direct);
        let bn = b.iter().map(|v| v * v).sum::<f64>().sqrt();
        let rn = r
            .iter()
            .zip(&b)
            .map(|(x, y)| (x - y).powi(2))
            .sum::<f64>()
            .sqrt();
        assert!(rn <= 1e-12 * bn);
    }
}

#[test]
fn hilbert_four() {
    let h: Vec<Vec<f64>> = (0..4)
        .map(|i| (0..4).map(|j| 1.0 / (i + j + 1) as f64).collect())
        .collect();
    let b: Vec<f64> = h.iter().map(|r| r.iter().sum()).collect();
    let x = direct_solve(&dense_to_sparse(&h), &b).unwrap();
    assert!(max_diff(&x, &[1.0; 4]) <= 1e-8, "{x:?}");
}

#[test]
fn failures_are_reported() {
    let a = dense_to_sparse(&[vec![1.0, 2.0], vec![2.0, 1.0]]);
    assert!(matches!(
        direct_solve(&a, &[1.0, 0.0]),
        Err(Error::NotPositiveDefinite { .. })
    ));

    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let a = dense_to_sparse(&random_spd(40, &mut rng));
    let b = vec![1.0; 40];
    let opts = SolveOptions {
        max_iter: Some(2),
        tol: 1e-14,
        preconditioner: Preconditioner::None,
        record_history: false,
    };
    match cg_solve(&a, &b, &opts) {
        Err(Error::NoConvergence {
            iterations,
            residual,
        }) => {
            assert_eq!(iterations, 2);
            assert!(residual > 1e-14 && residual.is_finite());
        }
        other => panic!("expected non-convergence, got {other:?}"),
    }
}

#[test]
fn robin_system_with_tiny_eps_converges() {
    let space = FeSpace::new(Arc::new(build_unit_disk(0.05).unwrap()), 1).unwrap();
    let k = assemble(&space, Form::Stiffness);
    let m = assemble(&space, Form::BoundaryMass(BoundaryTag::RobinDirichlet));
    let a = k.plus_scaled(1e6, &m).unwrap();
    let b: Vec<f64> = space.nodes().iter().map(|p| p[0] * p[1]).collect();
    let out = cg_solve(&a, &b, &SolveOptions::default()).unwrap();
    assert!(out.relative_residual <= 1e-10);
    let again = cg_solve(&a, &b, &SolveOptions::default()).unwrap();
    assert_eq!(out.x, again.x);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn energy_history_is_nonincreasing(seed in any::<u64>(), n in 5usize..60, jacobi in any::<bool>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut dense = random_spd(n, &mut rng);
        for (i, row) in dense.iter_mut().enumerate() {
            row[i] *= 1.0 + 10.0 * rng.gen::<f64>();
        }
        let a = dense_to_sparse(&dense);
        let b: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let x0: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let pc = if jacobi { Preconditioner::Jacobi } else { Preconditioner::None };
        let out = cg_solve_from(&a, &b, Some(&x0), &SolveOptions { record_history: true, preconditioner: pc, ..tight() }).unwrap();
        prop_assert_eq!(out.energy_history.len(), out.iterations + 1);
        let scale = out.energy_history[0].abs().max(1.0);
        for w in out.energy_history.windows(2) {
            prop_assert!(w[1] <= w[0] + 1e-13 * scale, "{} -> {}", w[0], w[1]);
        }
    }

    #[test]
    fn diagonal_scaling(seed in any::<u64>(), n in 5usize..40) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let dense = random_spd(n, &mut rng);
        let d: Vec<f64> = (0..n).map(|_| 10f64.powf(rng.gen_range(-1.0..1.0))).collect();
        let scaled: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| d[i] * dense[i][j] * d[j]).collect()).collect();
        let b: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let db: Vec<f64> = b.iter().zip(&d).map(|(x, y)| x * y).collect();
        let x = cg_solve(&dense_to_sparse(&dense), &b, &tight()).unwrap().x;
        let y = cg_solve(&dense_to_sparse(&scaled), &db, &tight()).unwrap().x;
        let xn = x.iter().map(|v| v.abs()).fold(0.0, f64::max);
        for i in 0..n {
            prop_assert!((d[i] * y[i] - x[i]).abs() <= 1e-8 * xn);
        }
    }
}
