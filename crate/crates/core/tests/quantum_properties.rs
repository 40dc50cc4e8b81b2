mod common;

use itermeas::belavkin::{
    diffusive_noise_term, extract_diffusive_model, extract_jump_model, integrate_belavkin_diffusive,
    integrate_belavkin_jump, jump_noise_term, lindblad_d, lindblad_p, BelavkinOptions, DiffusiveBelavkinModel,
    JumpBelavkinModel,
};
use itermeas::error::Error;
use itermeas::kernel::{bayes_update, PointerDistribution};
use itermeas::linalg::{c, expm_hermitian, hermiticity_error, max_abs, pauli, trace, CMatrix, CVector};
use itermeas::quantum::{
    build_propagator, check_qnd, induced_kernel, measurement_update, outcome_probabilities, random_density_matrix,
    simulate_quantum_chain, DensityMatrix, QuantumApparatus, QND_TOLERANCE,
};
use itermeas::rng::stream_rng;
use itermeas::scaling::{
    diffusive_from_kernels, integrate_diffusive, integrate_jump_thinning, DiffusiveOptions, JumpOptions,
};
use num_complex::Complex64;
use proptest::prelude::*;
use rand::Rng;
use rand_distr::StandardNormal;

use common::mixed_qubit;

fn gaussian_matrix(rng: &mut impl Rng, n: usize) -> CMatrix {
    CMatrix::from_fn(n, n, |_, _| Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
}

fn random_hermitian(rng: &mut impl Rng, n: usize) -> CMatrix {
    let a = gaussian_matrix(rng, n);
    (&a + a.adjoint()).scale(0.5)
}

fn random_basis(rng: &mut impl Rng, n: usize) -> Vec<CVector> {
    let u = expm_hermitian(&random_hermitian(rng, n), 1.0);
    (0..n).map(|k| u.column(k).into_owned()).collect()
}

fn random_state(rng: &mut impl Rng, n: usize) -> CVector {
    let v = CVector::from_fn(n, |_, _| Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)));
    let norm = v.norm();
    v.unscale(norm)
}

fn random_apparatus(seed: u64, ds: usize, dp: usize, delta: f64) -> QuantumApparatus {
    let mut rng = stream_rng(seed, 0);
    let energies = (0..ds).map(|_| rng.random_range(-1.0..1.0)).collect();
    let blocks = (0..ds).map(|_| random_hermitian(&mut rng, dp)).collect();
    let hp = random_hermitian(&mut rng, dp);
    let psi = random_state(&mut rng, dp);
    let basis = random_basis(&mut rng, dp);
    QuantumApparatus::new(energies, blocks, hp, psi, basis, delta).unwrap()
}

/// `exp(−iA)` by scaling and squaring of a truncated Taylor series.
fn taylor_expm(a: &CMatrix) -> CMatrix {
    let n = a.nrows();
    let norm = max_abs(a) * n as f64;
    let squarings = (norm.max(1.0).log2().ceil() as u32) + 4;
    let step = a.unscale(2f64.powi(squarings as i32)) * c(0.0, -1.0);
    let mut term = CMatrix::identity(n, n);
    let mut sum = CMatrix::identity(n, n);
    for k in 1..30 {
        term = &term * &step / c(k as f64, 0.0);
        sum += &term;
    }
    for _ in 0..squarings {
        sum = &sum * &sum;
    }
    sum
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn random_apparatus_is_complete_and_qnd(seed in any::<u64>(), ds in 2usize..=3, dp in 2usize..=3, delta in 1e-3f64..1.0) {
        let apparatus = random_apparatus(seed, ds, dp, delta);
        let props = build_propagator(&apparatus).unwrap();
        prop_assert!(props.completeness_error() < 1e-10);
        prop_assert!(check_qnd(&props, QND_TOLERANCE).passed);
        let kernel = induced_kernel(&props).unwrap();
        for alpha in 0..ds {
            let total: f64 = kernel.row(alpha).iter().sum();
            prop_assert!((total - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn induced_kernel_matches_series_exponential(seed in any::<u64>(), delta in 1e-2f64..1.0) {
        let apparatus = random_apparatus(seed, 2, 3, delta);
        let kernel = induced_kernel(&build_propagator(&apparatus).unwrap()).unwrap();
        for alpha in 0..2 {
            let h = CMatrix::identity(3, 3) * c(apparatus.pointer_energies()[alpha], 0.0)
                + apparatus.probe_hamiltonian()
                + apparatus.interaction_block(alpha).unscale(delta.sqrt());
            let u = taylor_expm(&h.scale(delta));
            let evolved = &u * apparatus.probe_state();
            for (i, b) in apparatus.probe_basis().iter().enumerate() {
                let amplitude = b.dotc(&evolved);
                prop_assert!((kernel.prob(alpha, i) - amplitude.norm_sqr()).abs() < 1e-11);
            }
        }
    }

    #[test]
    fn updates_keep_density_matrices_valid(seed in any::<u64>(), ds in 2usize..=3, steps in 1usize..40) {
        let apparatus = random_apparatus(seed, ds, 2, 0.1);
        let props = build_propagator(&apparatus).unwrap();
        let mut rng = stream_rng(seed, 1);
        let mut rho = random_density_matrix(&mut rng, ds);
        for _ in 0..steps {
            let pi = outcome_probabilities(&props, &rho);
            prop_assert!((pi.iter().sum::<f64>() - 1.0).abs() < 1e-10);
            let outcome = itermeas::rng::sample_categorical(&mut rng, &pi);
            let (next, p) = measurement_update(&props, &rho, outcome).unwrap();
            prop_assert!((p - pi[outcome]).abs() < 1e-14);
            prop_assert!((trace(next.matrix()).re - 1.0).abs() < 1e-12);
            prop_assert!(hermiticity_error(next.matrix()) < 1e-14);
            prop_assert!(next.min_eigenvalue() > -1e-8);
            rho = next;
        }
    }

    #[test]
    fn pointer_states_are_fixed(seed in any::<u64>(), ds in 2usize..=3, alpha in 0usize..3) {
        let apparatus = random_apparatus(seed, ds, 2, 0.2);
        let props = build_propagator(&apparatus).unwrap();
        let alpha = alpha % ds;
        let pointer = DensityMatrix::pointer(ds, alpha);
        for outcome in 0..props.outcome_count() {
            if let Ok((next, _)) = measurement_update(&props, &pointer, outcome) {
                prop_assert!(max_abs(&(next.matrix() - pointer.matrix())) < 1e-12);
            }
        }
    }

    #[test]
    fn diagonal_follows_classical_recursion(seed in any::<u64>(), ds in 2usize..=3) {
        let apparatus = random_apparatus(seed, ds, 2, 0.05);
        let props = build_propagator(&apparatus).unwrap();
        let kernel = induced_kernel(&props).unwrap();
        let mut rng = stream_rng(seed, 2);
        let rho0 = random_density_matrix(&mut rng, ds);
        let chain = simulate_quantum_chain(&props, &rho0, 1000, seed, 1000).unwrap();
        let mut q = PointerDistribution::new(rho0.diagonal()).unwrap();
        for (n, &i) in chain.outcomes.iter().enumerate() {
            q = bayes_update(&kernel, &q, i).unwrap();
            for (a, b) in q.weights().iter().zip(&chain.q_path[n + 1]) {
                prop_assert!((a - b).abs() < 1e-11);
            }
        }
    }

    #[test]
    fn continuum_generators_are_traceless(seed in any::<u64>(), n in 2usize..=3, outcomes in 2usize..=3) {
        let mut rng = stream_rng(seed, 3);
        let h = random_hermitian(&mut rng, n);
        let raw: Vec<f64> = (0..outcomes).map(|_| rng.random_range(0.1..1.0)).collect();
        let total: f64 = raw.iter().sum();
        let p0: Vec<f64> = raw.iter().map(|x| x / total).collect();
        let mut cs: Vec<CMatrix> = (0..outcomes).map(|_| gaussian_matrix(&mut rng, n)).collect();
        let mean = cs.iter().zip(&p0).fold(CMatrix::zeros(n, n), |acc, (ci, &p)| acc + ci.scale(p));
        for ci in &mut cs {
            *ci -= &mean;
        }
        let diffusive = DiffusiveBelavkinModel::new(h.clone(), cs, p0).unwrap();
        let ds: Vec<CMatrix> = (1..outcomes).map(|_| gaussian_matrix(&mut rng, n)).collect();
        let jump = JumpBelavkinModel::new(h, 0, outcomes, ds).unwrap();
        let rho = random_density_matrix(&mut rng, n);
        prop_assert!(trace(&lindblad_d(&diffusive, rho.matrix())).norm() < 1e-12);
        prop_assert!(trace(&lindblad_p(&jump, rho.matrix())).norm() < 1e-12);
        for j in 0..outcomes {
            prop_assert!(trace(&diffusive_noise_term(&diffusive, rho.matrix(), j)).norm() < 1e-12);
        }
        for channel in 0..outcomes - 1 {
            prop_assert!(trace(&jump_noise_term(&jump, rho.matrix(), channel).unwrap()).norm() < 1e-12);
        }
    }
}

#[test]
fn interaction_off_pointer_blocks_is_not_qnd() {
    let apparatus = common::diffusive_qubit(0.1, [0.0, 0.0], CMatrix::zeros(2, 2))
        .with_pointer_coupling(0, 1, &pauli::x().scale(0.3))
        .unwrap();
    let props = build_propagator(&apparatus).unwrap();
    assert!(props.completeness_error() < 1e-10);
    assert!(!check_qnd(&props, QND_TOLERANCE).passed);
    assert!(matches!(induced_kernel(&props), Err(Error::NotQnd(_))));
}

#[test]
fn qubit_fixtures_reduce_to_classical_limits() {
    let diffusive = extract_diffusive_model(&common::diffusive_qubit(1e-3, [0.0, 0.0], CMatrix::zeros(2, 2)))
        .unwrap()
        .classical_limit()
        .unwrap();
    let expected = common::diff2();
    for (a, b) in diffusive.p0().iter().zip(expected.p0()) {
        assert!((a - b).abs() < 1e-12);
    }
    for (ra, rb) in diffusive.gamma().iter().zip(expected.gamma()) {
        for (a, b) in ra.iter().zip(rb) {
            assert!((a - b).abs() < 1e-12, "{ra:?} vs {rb:?}");
        }
    }
    let jump = extract_jump_model(&common::jump_qubit(1e-3)).unwrap().classical_limit().unwrap();
    assert_eq!(jump.star(), 0);
    assert!((jump.theta()[0][0] - 1.0).abs() < 1e-12);
    assert!((jump.theta()[1][0] - 2.0).abs() < 1e-12);
}

#[test]
fn belavkin_pointer_states_do_not_move() {
    let model = extract_diffusive_model(&common::diffusive_qubit(1e-3, [0.3, -0.2], CMatrix::zeros(2, 2))).unwrap();
    let jump = extract_jump_model(&common::jump_qubit(1e-3)).unwrap();
    for alpha in 0..2 {
        let pointer = DensityMatrix::pointer(2, alpha);
        let options = BelavkinOptions::new(2.0, 1e-3, 5 + alpha as u64).with_stride(100);
        let a = integrate_belavkin_diffusive(&model, &pointer, &options).unwrap();
        let b = integrate_belavkin_jump(&jump, &pointer, &options).unwrap();
        for rho in a.rho_path.iter().chain(&b.rho_path) {
            assert!(max_abs(&(rho.matrix() - pointer.matrix())) < 1e-12);
        }
    }
}

#[test]
fn belavkin_diagonal_reproduces_classical_sdes() {
    let rho0 = DensityMatrix::new(mixed_qubit()).unwrap();
    let q0 = PointerDistribution::new(rho0.diagonal()).unwrap();
    let model = extract_diffusive_model(&common::diffusive_qubit(1e-3, [0.3, -0.2], CMatrix::zeros(2, 2))).unwrap();
    let classical = model.classical_limit().unwrap();
    let jump = extract_jump_model(&common::jump_qubit(1e-3)).unwrap();
    let jump_classical = jump.classical_limit().unwrap();
    for seed in 0..20u64 {
        let options = BelavkinOptions::new(3.0, 1e-3, seed).with_stride(10);
        let quantum = integrate_belavkin_diffusive(&model, &rho0, &options).unwrap();
        let path = integrate_diffusive(&classical, &q0, &DiffusiveOptions::new(3.0, 1e-3, seed).with_stride(10)).unwrap();
        assert_eq!(quantum.times.len(), path.times.len());
        for (rho, q) in quantum.rho_path.iter().zip(&path.q_path) {
            for (a, b) in rho.diagonal().iter().zip(q) {
                assert!((a - b).abs() < 1e-9, "seed {seed}");
            }
        }
        let quantum = integrate_belavkin_jump(&jump, &rho0, &options).unwrap();
        let path =
            integrate_jump_thinning(&jump_classical, &q0, &JumpOptions::new(3.0, 1e-3, seed).with_stride(10)).unwrap();
        assert_eq!(quantum.jump_events, path.jump_events);
        for (rho, q) in quantum.rho_path.iter().zip(&path.q_path) {
            for (a, b) in rho.diagonal().iter().zip(q) {
                assert!((a - b).abs() < 1e-9, "seed {seed}");
            }
        }
        assert!(quantum.trace_drift_rate < 1e-9);
    }
}

/// `ρ ↦ Σ_i M_i ρ M_i†` iterated `steps` times.
fn averaged_chain(apparatus: &QuantumApparatus, rho0: &CMatrix, steps: usize) -> CMatrix {
    let props = build_propagator(apparatus).unwrap();
    let mut rho = rho0.clone();
    for _ in 0..steps {
        rho = props
            .kraus()
            .iter()
            .fold(CMatrix::zeros(2, 2), |acc, m| acc + m * &rho * m.adjoint());
    }
    rho
}

#[test]
fn probe_hamiltonian_drops_out_of_the_limit() {
    let energies = [0.0, 0.7];
    let probe_h = pauli::z().scale(0.8) + pauli::x().scale(0.3);
    let rho0 = mixed_qubit();
    let horizon = 1.0;
    let lindblad = common::diffusive_qubit_lindblad(&rho0, energies, horizon);
    let closed = rho0[(0, 1)] * (c(-0.5 * horizon, 0.7 * horizon)).exp();
    assert!((lindblad[(0, 1)] - closed).norm() < 1e-10);

    let mut errors = Vec::new();
    for delta in [1e-2, 1e-3, 1e-4] {
        let steps = (horizon / delta).round() as usize;
        let with_hp = averaged_chain(&common::diffusive_qubit(delta, energies, probe_h.clone()), &rho0, steps);
        let without = averaged_chain(&common::diffusive_qubit(delta, energies, CMatrix::zeros(2, 2)), &rho0, steps);
        errors.push((max_abs(&(&with_hp - &lindblad)), max_abs(&(&without - &lindblad))));
    }
    for pair in errors.windows(2) {
        assert!(pair[1].0 < pair[0].0, "{errors:?}");
        assert!(pair[1].1 < pair[0].1, "{errors:?}");
    }
    assert!(errors[2].0 < 1e-3 && errors[2].1 < 1e-3, "{errors:?}");

    let coarse = induced_kernel(&build_propagator(&common::diffusive_qubit(1e-3, energies, probe_h.clone())).unwrap()).unwrap();
    let fine = induced_kernel(&build_propagator(&common::diffusive_qubit(1e-5, energies, probe_h)).unwrap()).unwrap();
    let extraction = diffusive_from_kernels(&coarse, 1e-3, &fine, 1e-5).unwrap();
    for (ra, rb) in extraction.model.gamma().iter().zip(common::diff2().gamma()) {
        for (a, b) in ra.iter().zip(rb) {
            assert!((a - b).abs() < 1e-2, "{ra:?}");
        }
    }
}

#[test]
fn jump_lindbladian_closed_form() {
    let rho0 = mixed_qubit();
    let evolved = common::jump_qubit_lindblad(&rho0, 2.0);
    let rate = 1.5 - 2f64.sqrt();
    assert!((evolved[(0, 1)].re - 0.3 * (-rate * 2.0).exp()).abs() < 1e-10);
    assert!((evolved[(0, 0)].re - 0.5).abs() < 1e-12);
    let chain = averaged_chain(&common::jump_qubit(1e-4), &rho0, 20_000);
    assert!(max_abs(&(&chain - &evolved)) < 1e-3);
    let model = extract_jump_model(&common::jump_qubit(1e-3)).unwrap();
    let generator = lindblad_p(&model, &rho0);
    assert!((generator[(0, 1)].re + rate * 0.3).abs() < 1e-12);
}
