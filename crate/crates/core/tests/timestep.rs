use std::f64::consts::PI;

use approx::assert_abs_diff_eq;
use nalgebra::{DMatrix, DVector};
use ndarray::{array, Array1, Array2};
use proptest::prelude::*;
use rand::rngs::StdRng;
use rand::{RngExt, SeedableRng};

use ::sirm::dynsys::cavity::CavitySpec;
use ::sirm::linalg::norm2;
use ::sirm::timestep::{DiagonalOperator, DirichletLaplacian, Preconditioner};
use ::sirm::*;

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

#[test]
fn cyclic_cn_system_matches_dense_lu() {
    let n = 16;
    let h = 1.0 / n as f64;
    let a = 0.5 * 0.1 * 1e-2 / (h * h);
    let sub = vec![-a; n];
    let sup = vec![-a; n];
    let diag = vec![1.0 + 2.0 * a; n];
    let mut rng = StdRng::seed_from_u64(7);
    let rhs: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();

    let dense = DMatrix::from_fn(n, n, |i, j| {
        if i == j {
            1.0 + 2.0 * a
        } else if (i + 1) % n == j || (j + 1) % n == i {
            -a
        } else {
            0.0
        }
    });
    let oracle = dense.lu().solve(&DVector::from_vec(rhs.clone())).unwrap();
    let (x, _) = solve_cyclic_tridiagonal(&sub, &diag, &sup, &rhs).unwrap();
    assert!(max_abs_diff(&x, oracle.as_slice()) < 1e-12);
}

#[test]
fn cyclic_solver_trivial_systems() {
    let n = 9;
    let rhs: Vec<f64> = (0..n).map(|i| i as f64 - 3.0).collect();
    let (x, _) = solve_cyclic_tridiagonal(&vec![0.0; n], &vec![1.0; n], &vec![0.0; n], &rhs).unwrap();
    assert_eq!(x, rhs);
    let (z, _) = solve_cyclic_tridiagonal(&vec![-1.0; n], &vec![3.0; n], &vec![-1.0; n], &vec![0.0; n]).unwrap();
    assert!(z.iter().all(|v| *v == 0.0));
}

fn dense_dirichlet_laplacian(m: usize, h: f64) -> DMatrix<f64> {
    let idx = |p: usize, q: usize| p + q * m;
    let mut a = DMatrix::zeros(m * m, m * m);
    let s = 1.0 / (h * h);
    for q in 0..m {
        for p in 0..m {
            let c = idx(p, q);
            a[(c, c)] = 4.0 * s;
            if p > 0 {
                a[(c, idx(p - 1, q))] = -s;
            }
            if p + 1 < m {
                a[(c, idx(p + 1, q))] = -s;
            }
            if q > 0 {
                a[(c, idx(p, q - 1))] = -s;
            }
            if q + 1 < m {
                a[(c, idx(p, q + 1))] = -s;
            }
        }
    }
    a
}

#[test]
fn poisson_17_matches_dense_oracle_for_both_preconditioners() {
    let n_side = 17;
    let m = n_side - 2;
    let h = 1.0 / (n_side - 1) as f64;
    let mut rng = StdRng::seed_from_u64(11);
    let b: Vec<f64> = (0..m * m).map(|_| rng.random_range(-5.0..5.0)).collect();
    let oracle = dense_dirichlet_laplacian(m, h).lu().solve(&DVector::from_vec(b.clone())).unwrap();
    let onorm = oracle.norm();
    for pc in [Preconditioner::FastSine, Preconditioner::Diagonal] {
        let lap = DirichletLaplacian::new(m, h, pc);
        let (u, stats) = lap.solve(0.0, Array1::from(b.clone()).view(), None).unwrap();
        let diff: f64 = u.iter().zip(oracle.iter()).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
        assert!(diff / onorm < 1e-8, "{pc:?}: rel diff {}", diff / onorm);
        assert!(stats.residual_norm >= 0.0);
    }
}

fn manufactured_error(n_side: usize) -> f64 {
    let model = make_cavity(CavitySpec::<f64>::new(n_side, 100.0).unwrap()).unwrap();
    let h = 1.0 / (n_side - 1) as f64;
    let mut omega = Array1::zeros(n_side * n_side);
    let mut exact = Array1::zeros(n_side * n_side);
    for j in 0..n_side {
        for i in 0..n_side {
            let (x, y) = (i as f64 * h, j as f64 * h);
            let s = (PI * x).sin() * (PI * y).sin();
            omega[j * n_side + i] = 2.0 * PI * PI * s;
            exact[j * n_side + i] = s;
        }
    }
    let (psi, _) = model.solve_stream(omega.view(), None).unwrap();
    max_abs_diff(psi.as_slice().unwrap(), exact.as_slice().unwrap())
}

#[test]
fn poisson_manufactured_solution_is_second_order() {
    let e33 = manufactured_error(33);
    assert!(e33 < 5e-3, "33x33 max error {e33}");
    let e17 = manufactured_error(17);
    let e65 = manufactured_error(65);
    for (coarse, fine) in [(e17, e33), (e33, e65)] {
        let order = (coarse / fine).log2();
        assert!((1.8..=2.2).contains(&order), "observed order {order}");
    }
}

#[test]
fn poisson_respects_left_right_mirror() {
    let n_side = 33;
    let model = make_cavity(CavitySpec::<f64>::new(n_side, 100.0).unwrap()).unwrap();
    let mut rng = StdRng::seed_from_u64(3);
    let mut omega: Array1<f64> = Array1::zeros(n_side * n_side);
    for j in 1..n_side - 1 {
        for i in 1..n_side - 1 {
            omega[j * n_side + i] = rng.random_range(-1.0..1.0);
        }
    }
    let mut mirrored = omega.clone();
    for j in 0..n_side {
        for i in 0..n_side {
            mirrored[j * n_side + i] = omega[j * n_side + (n_side - 1 - i)];
        }
    }
    let (psi, _) = model.solve_stream(omega.view(), None).unwrap();
    let (psi_m, _) = model.solve_stream(mirrored.view(), None).unwrap();
    let scale = psi.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    for j in 0..n_side {
        for i in 0..n_side {
            let d = (psi_m[j * n_side + i] - psi[j * n_side + (n_side - 1 - i)]).abs();
            assert!(d <= 1e-9 * scale);
        }
    }
}

#[test]
fn crank_nicolson_matches_closed_form_on_scalar_decay() {
    let lambda = -3.0;
    let dt = 0.01;
    let model = LinearModel::<f64>::diagonal(array![lambda], array![2.0]).unwrap();
    let cfg = IntegratorConfig::new(dt, 0.0, 1.0);
    let traj = integrate_full(&model, &cfg).unwrap();
    assert_eq!(traj.len(), 101);
    let g: f64 = (1.0 + lambda * dt / 2.0) / (1.0 - lambda * dt / 2.0);
    for k in 0..traj.len() {
        let expect = 2.0 * g.powi(k as i32);
        assert!((traj.state(k)[0] - expect).abs() <= 1e-10 * expect.abs().max(1e-300));
    }
}

fn damped_rotation(dt: f64, split: bool) -> f64 {
    let a = 0.3;
    let rot = array![[0.0, 1.0], [-1.0, 0.0]];
    let damp = array![-a, -a];
    let model = if split {
        LinearModel::new(Some(rot), Some(Box::new(DiagonalOperator(damp))), array![1.0, 0.0]).unwrap()
    } else {
        let full = &rot + &Array2::from_diag(&damp);
        LinearModel::explicit(full, array![1.0, 0.0]).unwrap()
    };
    let t_end = 2.0;
    let traj = integrate_full(&model, &IntegratorConfig::new(dt, 0.0, t_end)).unwrap();
    let e = (-a * t_end).exp();
    let exact = array![e * t_end.cos(), -e * t_end.sin()];
    norm2((&traj.final_state() - &exact).view())
}

#[test]
fn imex_scheme_is_second_order() {
    for split in [false, true] {
        let e1 = damped_rotation(0.02, split);
        let e2 = damped_rotation(0.01, split);
        let order = (e1 / e2).log2();
        assert!((1.7..=2.3).contains(&order), "split={split}: observed order {order}");
    }
}

#[test]
fn first_two_steps_follow_euler_then_ab2() {
    let g = array![[0.0, 2.0], [-1.0, 0.5]];
    let l = array![-1.0, -4.0];
    let x0 = array![1.0, -1.0];
    let dt = 0.1;
    let model = LinearModel::new(Some(g.clone()), Some(Box::new(DiagonalOperator(l.clone()))), x0.clone()).unwrap();
    let traj = integrate_full(&model, &IntegratorConfig::new(dt, 0.0, 2.0 * dt)).unwrap();

    let cn = |rhs: Array1<f64>| -> Array1<f64> { Array1::from_shape_fn(2, |i| rhs[i] / (1.0 - dt / 2.0 * l[i])) };
    let half = |x: &Array1<f64>| -> Array1<f64> { Array1::from_shape_fn(2, |i| x[i] * (1.0 + dt / 2.0 * l[i])) };
    let g0 = g.dot(&x0);
    let x1 = cn(half(&x0) + dt * &g0);
    let g1 = g.dot(&x1);
    let x2 = cn(half(&x1) + dt * (1.5 * &g1 - 0.5 * &g0));
    for i in 0..2 {
        assert_abs_diff_eq!(traj.state(1)[i], x1[i], epsilon = 1e-14);
        assert_abs_diff_eq!(traj.state(2)[i], x2[i], epsilon = 1e-14);
    }
}

#[test]
fn zero_field_keeps_the_initial_state() {
    let x0 = array![0.5, -2.0, 3.0];
    let model = LinearModel::explicit(Array2::zeros((3, 3)), x0.clone()).unwrap();
    let traj = integrate_full(&model, &IntegratorConfig::new(0.1, 0.0, 1.0)).unwrap();
    for k in 0..traj.len() {
        assert_eq!(traj.state(k), x0.view());
    }
}

#[test]
fn stride_records_the_final_state() {
    let model = LinearModel::diagonal(array![-1.0], array![1.0]).unwrap();
    let cfg = IntegratorConfig::new(0.1, 0.0, 1.0).with_record_every(3);
    let traj = integrate_full(&model, &cfg).unwrap();
    let times: Vec<f64> = traj.times().to_vec();
    let expect = [0.0, 0.3, 0.6, 0.9, 1.0];
    assert_eq!(times.len(), expect.len());
    for (a, b) in times.iter().zip(expect) {
        assert_abs_diff_eq!(*a, b, epsilon = 1e-12);
    }
}

#[test]
fn advection_diffusion_benchmark_runs_stably() {
    let grid = GridSpec1D::unit(500).unwrap();
    let model = make_advection_diffusion::<f64>(grid, 0.5, 1e-3).unwrap();
    let x0 = model.initial_state();
    assert!(model.cfl_number(x0.view(), 1e-3).unwrap() <= 1.0);
    let traj = integrate_full(&model, &IntegratorConfig::new(1e-3, 0.0, 0.5)).unwrap();
    assert_eq!(traj.len(), 501);
    let peak = traj.states().iter().fold(0.0f64, |a, v| a.max(v.abs()));
    assert!(peak <= 1.0 + 1e-12);
    let mass0: f64 = x0.sum();
    let mass1: f64 = traj.final_state().sum();
    assert_abs_diff_eq!(mass0, mass1, epsilon = 1e-9);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn crank_nicolson_never_grows_pure_diffusion(
        values in prop::collection::vec(-1.0f64..1.0, 32),
        nu in 1e-4f64..1.0,
        dt in 1e-4f64..1.0,
    ) {
        let grid = GridSpec1D::unit(32).unwrap();
        let model = make_advection_diffusion(grid, 0.0, nu).unwrap().with_initial_state(Array1::from(values)).unwrap();
        let traj = integrate_full(&model, &IntegratorConfig::new(dt, 0.0, 20.0 * dt)).unwrap();
        let mut prev = norm2(traj.state(0));
        for k in 1..traj.len() {
            let now = norm2(traj.state(k));
            prop_assert!(now <= prev * (1.0 + 1e-12) + 1e-15);
            prev = now;
        }
    }
}
