#![allow(dead_code)]

use itermeas::kernel::{MeasurementKernel, PointerDistribution};
use itermeas::linalg::{c, pauli, CMatrix, CVector};
use itermeas::quantum::QuantumApparatus;
use itermeas::scaling::{DiffusiveModel, JumpModel};

pub const K2_RATE_A_B: f64 = 0.183787;

pub fn k2() -> MeasurementKernel {
    MeasurementKernel::from_rows(vec![vec![0.7, 0.3], vec![0.4, 0.6]]).unwrap()
}

pub fn uniform2() -> PointerDistribution {
    PointerDistribution::uniform(2)
}

pub fn diff2() -> DiffusiveModel {
    DiffusiveModel::new(vec![0.5, 0.5], vec![vec![1.0, -1.0], vec![-1.0, 1.0]]).unwrap()
}

pub fn pois2() -> JumpModel {
    JumpModel::new(0, 2, vec![vec![1.0], vec![2.0]]).unwrap()
}

pub fn ket(re: &[f64]) -> CVector {
    CVector::from_iterator(re.len(), re.iter().map(|&x| c(x, 0.0)))
}

/// Qubit pointer, qubit probe in `|0⟩`, `H_a = ½Y`, `H_b = −½Y`, read out in
/// the `|±⟩` basis. Its classical limit is DIFF2.
pub fn diffusive_qubit(delta: f64, energies: [f64; 2], probe_h: CMatrix) -> QuantumApparatus {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    QuantumApparatus::new(
        energies.to_vec(),
        vec![pauli::y().scale(0.5), pauli::y().scale(-0.5)],
        probe_h,
        ket(&[1.0, 0.0]),
        vec![ket(&[s, s]), ket(&[s, -s])],
        delta,
    )
    .unwrap()
}

/// `H_α = g_α X` with `g = (1, √2)`, probe in `|0⟩`, computational readout.
/// Its classical limit is POIS2 with no-click outcome 0.
pub fn jump_qubit(delta: f64) -> QuantumApparatus {
    QuantumApparatus::new(
        vec![0.0, 0.0],
        vec![pauli::x(), pauli::x().scale(2f64.sqrt())],
        CMatrix::zeros(2, 2),
        ket(&[1.0, 0.0]),
        vec![ket(&[1.0, 0.0]), ket(&[0.0, 1.0])],
        delta,
    )
    .unwrap()
}

pub fn mixed_qubit() -> CMatrix {
    CMatrix::from_row_slice(2, 2, &[c(0.5, 0.0), c(0.3, 0.0), c(0.3, 0.0), c(0.5, 0.0)])
}

/// `Σ_α q0(α) Π_k p(i_k|α)` by direct multiplication.
pub fn direct_sequence_probability(rows: &[Vec<f64>], q0: &[f64], sequence: &[usize]) -> f64 {
    rows.iter()
        .zip(q0)
        .map(|(row, &w)| w * sequence.iter().map(|&i| row[i]).product::<f64>())
        .sum()
}

/// Posterior after a sequence by direct multiplication and normalization.
pub fn direct_posterior(rows: &[Vec<f64>], q0: &[f64], sequence: &[usize]) -> Vec<f64> {
    let joint: Vec<f64> = rows
        .iter()
        .zip(q0)
        .map(|(row, &w)| w * sequence.iter().map(|&i| row[i]).product::<f64>())
        .collect();
    let total: f64 = joint.iter().sum();
    joint.iter().map(|x| x / total).collect()
}

pub fn direct_kl(p: &[f64], q: &[f64]) -> f64 {
    p.iter()
        .zip(q)
        .filter(|(a, _)| **a > 0.0)
        .map(|(a, b)| a * (a / b).ln())
        .sum()
}

/// `−i[H, ρ] + Σ_k w_k (L_k ρ L_k† − ½{L_k†L_k, ρ})`.
pub fn lindbladian(h: &CMatrix, ops: &[(f64, CMatrix)], rho: &CMatrix) -> CMatrix {
    let minus_i = c(0.0, -1.0);
    let mut out = (h * rho - rho * h) * minus_i;
    for (w, l) in ops {
        let ld = l.adjoint();
        let ldl = &ld * l;
        out += (l * rho * &ld - (&ldl * rho + rho * &ldl) * c(0.5, 0.0)) * c(*w, 0.0);
    }
    out
}

/// Classical fourth-order Runge–Kutta for `dρ/dt = f(ρ)`.
pub fn rk4(rho0: &CMatrix, horizon: f64, steps: usize, f: impl Fn(&CMatrix) -> CMatrix) -> CMatrix {
    let h = horizon / steps as f64;
    let half = c(h / 2.0, 0.0);
    let full = c(h, 0.0);
    let sixth = c(h / 6.0, 0.0);
    let mut rho = rho0.clone();
    for _ in 0..steps {
        let k1 = f(&rho);
        let k2 = f(&(&rho + &k1 * half));
        let k3 = f(&(&rho + &k2 * half));
        let k4 = f(&(&rho + &k3 * full));
        rho += (k1 + k2 * c(2.0, 0.0) + k3 * c(2.0, 0.0) + k4) * sixth;
    }
    rho
}

/// Lindblad evolution of the diffusive qubit: `C_± = ±½Z` with weights ½.
pub fn diffusive_qubit_lindblad(rho0: &CMatrix, energies: [f64; 2], horizon: f64) -> CMatrix {
    let h = CMatrix::from_diagonal(&ket(&energies));
    let ops = vec![(0.5, pauli::z().scale(0.5)), (0.5, pauli::z().scale(-0.5))];
    rk4(rho0, horizon, 2000, |r| lindbladian(&h, &ops, r))
}

/// Lindblad evolution of the jump qubit: `D = −i diag(1, √2)`.
pub fn jump_qubit_lindblad(rho0: &CMatrix, horizon: f64) -> CMatrix {
    let h = CMatrix::zeros(2, 2);
    let d = CMatrix::from_diagonal(&CVector::from_vec(vec![c(0.0, -1.0), c(0.0, -(2f64.sqrt()))]));
    rk4(rho0, horizon, 2000, |r| lindbladian(&h, &[(1.0, d.clone())], r))
}

/// Two-sided band of `sigmas` standard errors on a sample mean; samples
/// without spread must match to 1e-10.
pub fn within_sigma(samples: &[f64], expected: f64, sigmas: f64) -> (bool, f64) {
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    let var = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    let se = (var / n).sqrt();
    let z = if se > 1e-12 {
        (mean - expected).abs() / se
    } else if (mean - expected).abs() < 1e-10 {
        0.0
    } else {
        f64::INFINITY
    };
    (z < sigmas, z)
}
