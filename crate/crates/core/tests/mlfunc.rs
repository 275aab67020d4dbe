mod common;

use common::ml_series::{gamma_fixed, ml_series, GammaTable, Reference};
use fracctrl_core::mlfunc::{ml_matrix, ml_scalar, sectorial_diagnostic, solution_op_s, solution_op_t, SectorParams};
use fracctrl_core::{Error, FracOrder};
use nalgebra::{dmatrix, DMatrix};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::ToPrimitive;
use proptest::prelude::*;

fn close(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * b.abs().max(f64::MIN_POSITIVE)
}

#[test]
fn oracle_gamma_half_is_sqrt_pi() {
    let g = gamma_fixed(1, 2, 60);
    let v = BigRational::new(g, BigInt::from(10u32).pow(60)).to_f64().unwrap();
    // Correctly rounded sqrt(pi); `PI.sqrt()` is one ulp below.
    assert_eq!(v, 1.772_453_850_905_516);
    let g = gamma_fixed(3, 4, 30);
    let v = BigRational::new(g, BigInt::from(10u32).pow(30)).to_f64().unwrap();
    assert!(close(v, 1.225_416_702_465_177_6, 1e-15));
}

#[test]
fn oracle_closed_forms() {
    let mut t = GammaTable::default();
    assert_eq!(ml_series((1, 1), (1, 1), 1.0, &mut t), Reference::Finite(std::f64::consts::E));
    // E_{1/2}(z) = e^{z^2} erfc(-z).
    let Reference::Finite(v) = ml_series((1, 2), (1, 1), -4.0, &mut t) else { panic!() };
    assert!(close(v, 0.136_999_457_625_061_4, 1e-15));
    let Reference::Finite(v) = ml_series((1, 2), (1, 1), -1.0, &mut t) else { panic!() };
    assert!(close(v, 0.427_583_576_155_807, 1e-15));
    let Reference::Finite(v) = ml_series((1, 2), (1, 2), 0.0, &mut t) else { panic!() };
    assert!(close(v, 0.564_189_583_547_756_3, 1e-15));
    assert_eq!(ml_series((3, 10), (1, 1), 9.0, &mut t), Reference::Overflow);
}

#[test]
fn scalar_examples() {
    assert!(close(ml_scalar(1.0, 1.0, 1.0).unwrap(), std::f64::consts::E, 1e-15));
    assert!(close(ml_scalar(0.5, 0.5, 0.0).unwrap(), 0.564_189_583_547_756_3, 1e-15));
    assert!(close(ml_scalar(0.5, 1.0, -1.0).unwrap(), 0.427_583_576_155_807, 1e-12));
    assert!(matches!(ml_scalar(0.0, 1.0, 1.0), Err(Error::Domain(_))));
    assert!(matches!(ml_scalar(0.5, -1.0, 1.0), Err(Error::Domain(_))));
    assert!(matches!(ml_scalar(0.3, 1.0, 10.0), Err(Error::Overflow(_))));
}

#[test]
fn scalar_matches_series_oracle_on_grid() {
    let orders = [(3, 10), (1, 2), (3, 4), (9, 10)];
    let mut table = GammaTable::default();
    let mut worst = 0.0f64;
    for q in orders {
        let qf = q.0 as f64 / q.1 as f64;
        for beta in [q, (1, 1)] {
            let bf = beta.0 as f64 / beta.1 as f64;
            for i in 0..100 {
                let z = -10.0 + 20.0 * i as f64 / 99.0;
                let got = ml_scalar(qf, bf, z);
                match ml_series(q, beta, z, &mut table) {
                    Reference::Finite(want) => {
                        let got = got.unwrap_or_else(|e| panic!("q={qf} b={bf} z={z}: {e}"));
                        let rel = (got - want).abs() / want.abs();
                        worst = worst.max(rel);
                        assert!(rel <= 1e-10, "q={qf} b={bf} z={z}: {got} vs {want} (rel {rel:e})");
                    }
                    Reference::Overflow => {
                        assert!(matches!(got, Err(Error::Overflow(_))), "q={qf} b={bf} z={z}: {got:?}")
                    }
                }
            }
        }
    }
    println!("worst relative deviation {worst:e}");
}

#[test]
fn matrix_examples() {
    let z = DMatrix::<f64>::zeros(2, 2);
    assert_eq!(ml_matrix(1.0, 1.0, &z).unwrap(), DMatrix::identity(2, 2));
    let e = ml_matrix(1.0, 1.0, &dmatrix![1.0, 0.0; 0.0, -1.0]).unwrap();
    assert!(close(e[(0, 0)], std::f64::consts::E, 1e-15));
    assert!(close(e[(1, 1)], (-1.0f64).exp(), 1e-15));
    let mut table = GammaTable::default();
    let Reference::Finite(want) = ml_series((1, 2), (1, 2), -1.0, &mut table) else { panic!() };
    let m = ml_matrix(0.5, 0.5, &dmatrix![-1.0]).unwrap();
    assert!(close(m[(0, 0)], want, 1e-12));
}

#[test]
fn solution_operator_examples() {
    let half = FracOrder::new(0.5).unwrap();
    assert_eq!(solution_op_s(&dmatrix![0.0], half, 1.0).unwrap(), dmatrix![1.0]);
    let s = solution_op_s(&dmatrix![-1.0], half, 1.0).unwrap();
    assert!(close(s[(0, 0)], 0.427_583_576_155_807, 1e-12));
    let t = solution_op_t(&dmatrix![0.0], half, 4.0).unwrap();
    assert!(close(t[(0, 0)], 0.282_094_791_773_878_1, 1e-14));
    let one = FracOrder::new(1.0).unwrap();
    assert_eq!(solution_op_t(&dmatrix![0.0], one, 7.0).unwrap(), dmatrix![1.0]);
    let q = FracOrder::new(0.75).unwrap();
    let mut table = GammaTable::default();
    let Reference::Finite(want) = ml_series((3, 4), (3, 4), -1.0, &mut table) else { panic!() };
    assert!(close(solution_op_t(&dmatrix![-1.0], q, 1.0).unwrap()[(0, 0)], want, 1e-12));
    assert!(matches!(solution_op_t(&dmatrix![-1.0], q, 0.0), Err(Error::Domain(_))));
}

/// Scaling and squaring with a plain Taylor core, as a reference exponential.
fn expm_reference(a: &DMatrix<f64>) -> DMatrix<f64> {
    let norm = a.abs().row_sum().max();
    let s = if norm > 0.5 { (norm / 0.5).log2().ceil() as i32 } else { 0 };
    let b = a / 2f64.powi(s);
    let n = a.nrows();
    let mut term = DMatrix::identity(n, n);
    let mut sum = term.clone();
    for k in 1..30 {
        term = &term * &b / k as f64;
        sum += &term;
    }
    for _ in 0..s {
        sum = &sum * &sum;
    }
    sum
}

#[test]
fn classical_limit_is_matrix_exponential() {
    let a = dmatrix![0.3, -1.2, 0.4; 0.8, -0.5, 0.1; -0.2, 0.6, -0.9];
    let one = FracOrder::new(1.0).unwrap();
    for t in [0.1, 1.0, 3.0, 5.0] {
        let want = expm_reference(&(&a * t));
        let scale = want.norm();
        assert!((solution_op_s(&a, one, t).unwrap() - &want).norm() <= 1e-8 * scale.max(1.0));
        assert!((solution_op_t(&a, one, t).unwrap() - &want).norm() <= 1e-8 * scale.max(1.0));
    }
    let near = FracOrder::new(1.0 - 1e-9).unwrap();
    let want = expm_reference(&a);
    assert!((solution_op_s(&a, near, 1.0).unwrap() - &want).norm() < 1e-6);
}

#[test]
fn non_diagonalizable_generator() {
    // exp of a Jordan block is [[e, e], [0, e]]; the Taylor path certifies 1e-8.
    let j = dmatrix![1.0, 1.0; 0.0, 1.0];
    let e = ml_matrix(1.0, 1.0, &j).unwrap();
    let want = dmatrix![1.0, 1.0; 0.0, 1.0] * std::f64::consts::E;
    assert!((e - &want).norm() < 1e-8 * want.norm());
    // E_{q,β}(N) for nilpotent N = [[0, 1], [0, 0]] is I/Γ(β) + N/Γ(q+β).
    let n = dmatrix![0.0, 1.0; 0.0, 0.0];
    let m = ml_matrix(0.5, 1.0, &n).unwrap();
    assert!((m[(0, 1)] - 1.0 / statrs::function::gamma::gamma(1.5)).abs() < 1e-12);
    assert!((m[(0, 0)] - 1.0).abs() < 1e-14 && m[(1, 0)].abs() < 1e-14);
}

#[test]
fn sectorial_examples() {
    let half = FracOrder::new(0.5).unwrap();
    let stable = sectorial_diagnostic(&dmatrix![-1.0], half, SectorParams::default());
    assert!(stable.all_pass);
    let unstable = sectorial_diagnostic(&dmatrix![1.0], half, SectorParams::default());
    assert!(!unstable.all_pass && !unstable.eigenvalues[0].pass);
    let rot = sectorial_diagnostic(&dmatrix![0.0, -1.0; 1.0, 0.0], half, SectorParams::default());
    let mut ims: Vec<f64> = rot.eigenvalues.iter().map(|e| e.eigenvalue.im).collect();
    ims.sort_by(f64::total_cmp);
    assert!((ims[0] + 1.0).abs() < 1e-12 && (ims[1] - 1.0).abs() < 1e-12);
    assert!(rot.eigenvalues.iter().all(|e| e.eigenvalue.re.abs() < 1e-12));
}

proptest! {
    #![proptest_config(ProptestConfig { failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn diagonal_matrix_is_elementwise(
        q in 0.2f64..=1.0,
        beta in 0.2f64..2.0,
        d in prop::collection::vec(-8.0f64..3.0, 1..4),
    ) {
        let m = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(d.clone()));
        let e = ml_matrix(q, beta, &m).unwrap();
        for (i, x) in d.iter().enumerate() {
            let want = ml_scalar(q, beta, *x).unwrap();
            prop_assert!((e[(i, i)] - want).abs() <= 1e-13 * want.abs().max(1.0));
            for j in 0..d.len() {
                if i != j {
                    prop_assert_eq!(e[(i, j)], 0.0);
                }
            }
        }
    }

    #[test]
    fn s_at_zero_is_identity(q in 0.05f64..=1.0, a in prop::collection::vec(-3.0f64..3.0, 4)) {
        let a = DMatrix::from_row_slice(2, 2, &a);
        let s = solution_op_s(&a, FracOrder::new(q).unwrap(), 0.0).unwrap();
        prop_assert_eq!(s, DMatrix::identity(2, 2));
    }

    #[test]
    fn t_times_power_is_bounded(q in 0.1f64..1.0, a in -2.0f64..0.5, t in 1e-6f64..2.0) {
        let order = FracOrder::new(q).unwrap();
        let x = solution_op_t(&dmatrix![a], order, t).unwrap()[(0, 0)] * t.powf(1.0 - q);
        // t^{1-q} T(t) = E_{q,q}(a t^q), continuous with E_{q,q}(0) = 1/Γ(q).
        let want = ml_scalar(q, q, a * t.powf(q)).unwrap();
        prop_assert!((x - want).abs() <= 1e-12 * want.abs().max(1.0));
        prop_assert!(x.is_finite() && x.abs() < 10.0);
    }
}
