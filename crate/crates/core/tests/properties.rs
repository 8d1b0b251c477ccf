use proptest::prelude::*;

use wlgrid_core::filters::{run_filter, FilterKind, FilterModel, NodeFilterState, StepInput};
use wlgrid_core::grid::{clarke, ThreePhaseSample};
use wlgrid_core::linalg::{augment_vector, solve_hermitian, Complex, ComplexMatrix, ComplexVector};
use wlgrid_core::model::{LinearModel, NoiseModel};
use wlgrid_core::network::{combination_weights, Network, ObservationNoise, Topology, WeightRule};

fn complex() -> impl Strategy<Value = Complex> {
    (-2.0..2.0f64, -2.0..2.0f64).prop_map(|(re, im)| Complex::new(re, im))
}

fn vector(len: usize) -> impl Strategy<Value = ComplexVector> {
    prop::collection::vec(complex(), len).prop_map(|v| ComplexVector::new(v).unwrap())
}

fn matrix(rows: usize, cols: usize) -> impl Strategy<Value = ComplexMatrix> {
    prop::collection::vec(complex(), rows * cols)
        .prop_map(move |v| ComplexMatrix::new(rows, cols, v).unwrap())
}

fn max_diff(a: &ComplexMatrix, b: &ComplexMatrix) -> f64 {
    (a - b).max_abs()
}

fn topology() -> impl Strategy<Value = Topology> {
    (2usize..8).prop_flat_map(|n| {
        prop::collection::vec((0..n, 0..n), 0..2 * n).prop_map(move |pairs| {
            let edges: Vec<(usize, usize)> = pairs.into_iter().filter(|(a, b)| a != b).collect();
            Topology::new(n, &edges).unwrap()
        })
    })
}

proptest! {
    #[test]
    fn augmented_vector_mirrors(x in (1usize..5).prop_flat_map(vector)) {
        let full = augment_vector(&x).into_full();
        let l = x.len();
        for k in 0..l {
            prop_assert_eq!(full[k], x[k]);
            prop_assert_eq!(full[l + k], x[k].conj());
        }
    }

    #[test]
    fn product_hermitian_transpose_reverses(
        (a, b) in (1usize..5, 1usize..5, 1usize..5)
            .prop_flat_map(|(r, k, c)| (matrix(r, k), matrix(k, c)))
    ) {
        let lhs = a.matmul(&b).unwrap().hermitian_transpose();
        let rhs = b.hermitian_transpose().matmul(&a.hermitian_transpose()).unwrap();
        prop_assert!(max_diff(&lhs, &rhs) <= 1e-12);
    }

    #[test]
    fn hermitian_solve_has_small_residual(
        (x, b) in (1usize..7, 1usize..4).prop_flat_map(|(n, m)| (matrix(n, n), matrix(n, m)))
    ) {
        let n = x.rows();
        let a = (&x.matmul(&x.hermitian_transpose()).unwrap()
            + &ComplexMatrix::scalar_identity(n, Complex::new(0.5, 0.0)))
            .hermitian_part();
        let sol = solve_hermitian(&a, &b).unwrap();
        let residual = max_diff(&a.matmul(&sol.solution).unwrap(), &b);
        prop_assert!(residual <= 1e-9 * (1.0 + a.max_abs() * sol.solution.max_abs()));
    }

    #[test]
    fn clarke_is_linear(
        s in prop::array::uniform6(-2.0..2.0f64),
        k in -3.0..3.0f64,
    ) {
        let p = ThreePhaseSample::new(s[0], s[1], s[2]);
        let q = ThreePhaseSample::new(s[3], s[4], s[5]);
        let kq = ThreePhaseSample::new(k * q.a, k * q.b, k * q.c);
        let lhs = clarke(p + kq);
        let rhs = clarke(p) + clarke(q) * k;
        prop_assert!((lhs - rhs).norm() <= 1e-12);
    }

    #[test]
    fn zero_sequence_vanishes(v in -5.0..5.0f64) {
        prop_assert!(clarke(ThreePhaseSample::new(v, v, v)).norm() <= 1e-12);
    }

    #[test]
    fn combination_weights_are_column_stochastic(t in topology(), metropolis in any::<bool>()) {
        let rule = if metropolis { WeightRule::Metropolis } else { WeightRule::Uniform };
        let w = combination_weights(&t, rule);
        prop_assert!(w.validate(&t).is_ok());
        for i in 0..t.node_count() {
            let hood = t.neighborhood(i).unwrap();
            prop_assert!(hood.contains(&i));
            let sum: f64 = hood.iter().map(|&k| w.weight(k, i)).sum();
            prop_assert!((sum - 1.0).abs() <= 1e-12);
        }
    }

    #[test]
    fn augmented_filters_keep_the_mirror(
        f in complex(), a in complex(), h in complex(), b in complex(),
        ys in prop::collection::vec(prop::collection::vec(complex(), 3), 1..30),
        info in any::<bool>(),
    ) {
        let s = |v: Complex| ComplexMatrix::scalar(v);
        let obs = ObservationNoise::uniform(3, s(Complex::new(0.2, 0.0)), s(Complex::new(0.05, 0.02))).unwrap();
        let noise = NoiseModel::new(s(Complex::new(0.1, 0.0)), s(Complex::new(0.03, -0.01)), obs).unwrap();
        let model = LinearModel::new(s(f * 0.4), s(a * 0.2), vec![s(h); 3], vec![s(b * 0.3); 3], noise).unwrap();
        let network = Network::new(Topology::line(3).unwrap(), WeightRule::Metropolis);
        let kind = if info { FilterKind::DackfInfo } else { FilterKind::Dackf };
        let x0 = ComplexVector::new(vec![Complex::new(0.3, -0.1)]).unwrap();
        let inputs: Vec<StepInput> = ys.iter().enumerate().map(|(n, y)| StepInput::scalars(n, y)).collect();
        let states = (0..3).map(|_| NodeFilterState::augmented(&x0, 1.0)).collect();
        let (states, traj) = run_filter(&inputs, kind, FilterModel::Linear(&model), &network, states).unwrap();
        for st in &states {
            prop_assert!(st.mirror_defect() <= 1e-12);
            prop_assert!(st.covariance.hermitian_defect() <= 1e-12);
        }
        for step in &traj.estimates {
            for e in step {
                prop_assert!((e[1] - e[0].conj()).norm() <= 1e-12);
            }
        }
    }
}
