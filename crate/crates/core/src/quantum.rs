//! Repeated indirect measurement of a quantum system through probes.
//!
//! System and probe interact for a time `δ` under
//! `H = H_s ⊗ 1 + 1 ⊗ H_p + δ^{-1/2} H_I`, after which the probe is
//! measured in an orthonormal basis `{|i⟩}`. Tensor indices are ordered
//! `α·d_p + k` (pointer state `α`, probe basis vector `k`).

use rand::Rng;
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::kernel::MeasurementKernel;
use crate::linalg::{
    diagonal_block, expm_hermitian_blocked, hermiticity_error, hermitize, kron, max_abs,
    min_eigenvalue, off_block_norm, trace, CMatrix, CVector, ComplexMatrixRepr,
};
use crate::rng::{sample_categorical, stream, stream_rng};

pub const HERMITICITY_TOLERANCE: f64 = 1e-12;
pub const QND_TOLERANCE: f64 = 1e-12;
pub const DENSITY_TOLERANCE: f64 = 1e-10;
pub const EIGENVALUE_FLOOR: f64 = -1e-8;
pub const MIN_OUTCOME_PROBABILITY: f64 = 1e-300;

#[derive(Debug, Clone, PartialEq)]
pub struct QuantumApparatus {
    pointer_energies: Vec<f64>,
    interaction: CMatrix,
    probe_hamiltonian: CMatrix,
    probe_state: CVector,
    probe_basis: Vec<CVector>,
    delta: f64,
}

impl QuantumApparatus {
    /// Apparatus with `H_I = Σ_α |α⟩⟨α| ⊗ H_α`.
    pub fn new(
        pointer_energies: Vec<f64>,
        interaction_blocks: Vec<CMatrix>,
        probe_hamiltonian: CMatrix,
        probe_state: CVector,
        probe_basis: Vec<CVector>,
        delta: f64,
    ) -> Result<Self> {
        let ds = pointer_energies.len();
        if interaction_blocks.len() != ds {
            return Err(Error::InvalidApparatus(format!(
                "{} interaction blocks for {ds} pointer states",
                interaction_blocks.len()
            )));
        }
        let dp = probe_state.len();
        let mut interaction = CMatrix::zeros(ds * dp, ds * dp);
        for (alpha, block) in interaction_blocks.iter().enumerate() {
            if block.nrows() != dp || block.ncols() != dp {
                return Err(Error::InvalidApparatus(format!(
                    "interaction block {alpha} is {}×{}, expected {dp}×{dp}",
                    block.nrows(),
                    block.ncols()
                )));
            }
            let err = hermiticity_error(block);
            if err > HERMITICITY_TOLERANCE {
                return Err(Error::InvalidApparatus(format!(
                    "interaction block {alpha} is not Hermitian (error {err:e})"
                )));
            }
            interaction
                .view_mut((alpha * dp, alpha * dp), (dp, dp))
                .copy_from(block);
        }
        Self::with_interaction(
            pointer_energies,
            interaction,
            probe_hamiltonian,
            probe_state,
            probe_basis,
            delta,
        )
    }

    /// Apparatus with a general Hermitian interaction on the joint space.
    pub fn with_interaction(
        pointer_energies: Vec<f64>,
        interaction: CMatrix,
        probe_hamiltonian: CMatrix,
        probe_state: CVector,
        probe_basis: Vec<CVector>,
        delta: f64,
    ) -> Result<Self> {
        let ds = pointer_energies.len();
        let dp = probe_state.len();
        if ds == 0 || dp == 0 {
            return Err(Error::InvalidApparatus("empty system or probe space".into()));
        }
        if !(delta > 0.0) || !delta.is_finite() {
            return Err(Error::InvalidApparatus(format!("δ = {delta} must be positive")));
        }
        if interaction.nrows() != ds * dp || interaction.ncols() != ds * dp {
            return Err(Error::InvalidApparatus(format!(
                "interaction must be {0}×{0}",
                ds * dp
            )));
        }
        let err = hermiticity_error(&interaction);
        if err > HERMITICITY_TOLERANCE {
            return Err(Error::InvalidApparatus(format!(
                "interaction is not Hermitian (error {err:e})"
            )));
        }
        if probe_hamiltonian.nrows() != dp || probe_hamiltonian.ncols() != dp {
            return Err(Error::InvalidApparatus(format!(
                "probe Hamiltonian must be {dp}×{dp}"
            )));
        }
        let err = hermiticity_error(&probe_hamiltonian);
        if err > HERMITICITY_TOLERANCE {
            return Err(Error::InvalidApparatus(format!(
                "probe Hamiltonian is not Hermitian (error {err:e})"
            )));
        }
        let norm = probe_state.norm();
        if (norm - 1.0).abs() > DENSITY_TOLERANCE {
            return Err(Error::InvalidApparatus(format!("probe state has norm {norm}")));
        }
        if probe_basis.len() != dp || probe_basis.iter().any(|b| b.len() != dp) {
            return Err(Error::InvalidApparatus(format!(
                "probe basis must hold {dp} vectors of length {dp}"
            )));
        }
        for (a, u) in probe_basis.iter().enumerate() {
            for (b, v) in probe_basis.iter().enumerate() {
                let overlap = u.dotc(v);
                let expected = if a == b { 1.0 } else { 0.0 };
                if (overlap.re - expected).abs() > HERMITICITY_TOLERANCE
                    || overlap.im.abs() > HERMITICITY_TOLERANCE
                {
                    return Err(Error::InvalidApparatus(format!(
                        "probe basis not orthonormal: ⟨{a}|{b}⟩ = {overlap}"
                    )));
                }
            }
        }
        if pointer_energies.iter().any(|e| !e.is_finite()) {
            return Err(Error::InvalidApparatus("pointer energies must be finite".into()));
        }
        Ok(Self {
            pointer_energies,
            interaction,
            probe_hamiltonian,
            probe_state,
            probe_basis,
            delta,
        })
    }

    /// Adds `|α⟩⟨β| ⊗ V + |β⟩⟨α| ⊗ V†` to `H_I`, breaking the pointer
    /// block structure.
    pub fn with_pointer_coupling(mut self, alpha: usize, beta: usize, coupling: &CMatrix) -> Result<Self> {
        let (ds, dp) = (self.system_dim(), self.probe_dim());
        if alpha >= ds || beta >= ds || alpha == beta {
            return Err(Error::InvalidApparatus("coupling needs two distinct pointer states".into()));
        }
        if coupling.nrows() != dp || coupling.ncols() != dp {
            return Err(Error::InvalidApparatus(format!("coupling must be {dp}×{dp}")));
        }
        let mut upper = self.interaction.view_mut((alpha * dp, beta * dp), (dp, dp));
        upper += coupling;
        let mut lower = self.interaction.view_mut((beta * dp, alpha * dp), (dp, dp));
        lower += coupling.adjoint();
        Ok(self)
    }

    pub fn system_dim(&self) -> usize {
        self.pointer_energies.len()
    }

    pub fn probe_dim(&self) -> usize {
        self.probe_state.len()
    }

    pub fn pointer_energies(&self) -> &[f64] {
        &self.pointer_energies
    }

    pub fn interaction(&self) -> &CMatrix {
        &self.interaction
    }

    /// `H_α`, the diagonal pointer block of `H_I`.
    pub fn interaction_block(&self, alpha: usize) -> CMatrix {
        diagonal_block(&self.interaction, self.probe_dim(), alpha)
    }

    pub fn probe_hamiltonian(&self) -> &CMatrix {
        &self.probe_hamiltonian
    }

    pub fn probe_state(&self) -> &CVector {
        &self.probe_state
    }

    pub fn probe_basis(&self) -> &[CVector] {
        &self.probe_basis
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    /// `H_s = Σ_α E_α |α⟩⟨α|`.
    pub fn system_hamiltonian(&self) -> CMatrix {
        CMatrix::from_fn(self.system_dim(), self.system_dim(), |r, k| {
            if r == k {
                self.pointer_energies[r].into()
            } else {
                0.0.into()
            }
        })
    }

    /// `⟨i|O|ψ⟩` as a system operator, for an operator `O` on the joint space.
    pub fn probe_matrix_element(&self, op: &CMatrix, bra: &CVector, ket: &CVector) -> CMatrix {
        let (ds, dp) = (self.system_dim(), self.probe_dim());
        CMatrix::from_fn(ds, ds, |a, b| {
            let mut total = num_complex::Complex64::new(0.0, 0.0);
            for k in 0..dp {
                for l in 0..dp {
                    total += bra[k].conj() * op[(a * dp + k, b * dp + l)] * ket[l];
                }
            }
            total
        })
    }

    /// The full Hamiltonian `H_s ⊗ 1 + 1 ⊗ H_p + δ^{-1/2} H_I`.
    pub fn hamiltonian(&self) -> CMatrix {
        let (ds, dp) = (self.system_dim(), self.probe_dim());
        kron(&self.system_hamiltonian(), &CMatrix::identity(dp, dp))
            + kron(&CMatrix::identity(ds, ds), &self.probe_hamiltonian)
            + self.interaction.scale(self.delta.powf(-0.5))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PropagatorSet {
    system_dim: usize,
    probe_dim: usize,
    unitary: CMatrix,
    pointer_blocks: Vec<CMatrix>,
    kraus: Vec<CMatrix>,
    probe_state: CVector,
    probe_basis: Vec<CVector>,
}

impl PropagatorSet {
    pub fn system_dim(&self) -> usize {
        self.system_dim
    }

    pub fn probe_dim(&self) -> usize {
        self.probe_dim
    }

    pub fn outcome_count(&self) -> usize {
        self.kraus.len()
    }

    pub fn unitary(&self) -> &CMatrix {
        &self.unitary
    }

    /// `U_α`, the diagonal pointer blocks of `U`.
    pub fn pointer_blocks(&self) -> &[CMatrix] {
        &self.pointer_blocks
    }

    /// `M_i = ⟨i|U|ψ⟩`.
    pub fn kraus(&self) -> &[CMatrix] {
        &self.kraus
    }

    /// Largest entry of `Σ_i M_i†M_i − 1`.
    pub fn completeness_error(&self) -> f64 {
        let n = self.system_dim;
        let total = self
            .kraus
            .iter()
            .fold(CMatrix::zeros(n, n), |acc, m| acc + m.adjoint() * m);
        max_abs(&(total - CMatrix::identity(n, n)))
    }
}

/// Builds `U = exp(−iδH)` and the measurement operators.
pub fn build_propagator(apparatus: &QuantumApparatus) -> Result<PropagatorSet> {
    let h = apparatus.hamiltonian();
    let err = hermiticity_error(&h);
    if err > HERMITICITY_TOLERANCE * (1.0 + max_abs(&h)) {
        return Err(Error::InvalidApparatus(format!("Hamiltonian is not Hermitian (error {err:e})")));
    }
    let dp = apparatus.probe_dim();
    let unitary = expm_hermitian_blocked(&h, dp, apparatus.delta());
    let pointer_blocks = (0..apparatus.system_dim())
        .map(|alpha| diagonal_block(&unitary, dp, alpha))
        .collect();
    let kraus = apparatus
        .probe_basis()
        .iter()
        .map(|bra| apparatus.probe_matrix_element(&unitary, bra, apparatus.probe_state()))
        .collect();
    Ok(PropagatorSet {
        system_dim: apparatus.system_dim(),
        probe_dim: dp,
        unitary,
        pointer_blocks,
        kraus,
        probe_state: apparatus.probe_state().clone(),
        probe_basis: apparatus.probe_basis().to_vec(),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct QndReport {
    pub off_block_norm: f64,
    pub tolerance: f64,
    pub passed: bool,
    pub blocks: Option<Vec<CMatrix>>,
}

pub fn check_qnd(propagators: &PropagatorSet, tolerance: f64) -> QndReport {
    let norm = off_block_norm(&propagators.unitary, propagators.probe_dim);
    let passed = norm <= tolerance;
    QndReport {
        off_block_norm: norm,
        tolerance,
        passed,
        blocks: passed.then(|| propagators.pointer_blocks.clone()),
    }
}

/// `p(i|α) = |⟨i|U_α ψ⟩|²`.
pub fn induced_kernel(propagators: &PropagatorSet) -> Result<MeasurementKernel> {
    let report = check_qnd(propagators, QND_TOLERANCE);
    if !report.passed {
        return Err(Error::NotQnd(report.off_block_norm));
    }
    let rows = propagators
        .pointer_blocks
        .iter()
        .map(|u| {
            let evolved = u * &propagators.probe_state;
            propagators
                .probe_basis
                .iter()
                .map(|b| b.dotc(&evolved).norm_sqr())
                .collect()
        })
        .collect();
    MeasurementKernel::from_rows(rows)
}

#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix(CMatrix);

impl DensityMatrix {
    pub fn new(matrix: CMatrix) -> Result<Self> {
        if matrix.nrows() != matrix.ncols() || matrix.nrows() == 0 {
            return Err(Error::InvalidDensityMatrix("must be a non-empty square matrix".into()));
        }
        let herm = hermiticity_error(&matrix);
        if herm > DENSITY_TOLERANCE {
            return Err(Error::InvalidDensityMatrix(format!("not Hermitian (error {herm:e})")));
        }
        let tr = trace(&matrix);
        if (tr.re - 1.0).abs() > DENSITY_TOLERANCE || tr.im.abs() > DENSITY_TOLERANCE {
            return Err(Error::InvalidDensityMatrix(format!("trace {tr}")));
        }
        let min = min_eigenvalue(&matrix);
        if min < EIGENVALUE_FLOOR {
            return Err(Error::InvalidDensityMatrix(format!("minimum eigenvalue {min:e}")));
        }
        Ok(Self(matrix))
    }

    pub fn pure(state: &CVector) -> Result<Self> {
        let norm = state.norm();
        if !(norm > 0.0) {
            return Err(Error::InvalidDensityMatrix("zero state vector".into()));
        }
        let v = state.unscale(norm);
        Self::new(&v * v.adjoint())
    }

    /// `|α⟩⟨α|`.
    pub fn pointer(dim: usize, alpha: usize) -> Self {
        let mut m = CMatrix::zeros(dim, dim);
        m[(alpha, alpha)] = 1.0.into();
        Self(m)
    }

    pub fn from_diagonal(weights: &[f64]) -> Result<Self> {
        let n = weights.len();
        Self::new(CMatrix::from_fn(n, n, |r, k| {
            if r == k {
                weights[r].into()
            } else {
                0.0.into()
            }
        }))
    }

    pub(crate) fn from_unchecked(matrix: CMatrix) -> Self {
        Self(matrix)
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.0
    }

    pub fn into_matrix(self) -> CMatrix {
        self.0
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    /// `Q(α) = ⟨α|ρ|α⟩`.
    pub fn diagonal(&self) -> Vec<f64> {
        self.0.diagonal().iter().map(|z| z.re).collect()
    }

    pub fn min_eigenvalue(&self) -> f64 {
        min_eigenvalue(&self.0)
    }
}

impl Serialize for DensityMatrix {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        ComplexMatrixRepr::from_matrix(&self.0).serialize(serializer)
    }
}

/// `π(i) = Tr(M_i ρ M_i†)` for every outcome.
pub fn outcome_probabilities(propagators: &PropagatorSet, rho: &DensityMatrix) -> Vec<f64> {
    propagators
        .kraus
        .iter()
        .map(|m| trace(&(m * rho.matrix() * m.adjoint())).re.max(0.0))
        .collect()
}

/// `ρ' = M_i ρ M_i† / π(i)`, returned with `π(i)`.
pub fn measurement_update(
    propagators: &PropagatorSet,
    rho: &DensityMatrix,
    outcome: usize,
) -> Result<(DensityMatrix, f64)> {
    let m = propagators.kraus.get(outcome).ok_or_else(|| {
        Error::InvalidDensityMatrix(format!("outcome {outcome} out of range"))
    })?;
    let projected = m * rho.matrix() * m.adjoint();
    let pi = trace(&projected).re;
    if !(pi >= MIN_OUTCOME_PROBABILITY) {
        return Err(Error::ImpossibleOutcome { outcome, mass: pi });
    }
    let mut next = hermitize(&projected.unscale(pi));
    let tr = trace(&next).re;
    next.unscale_mut(tr);
    let min = min_eigenvalue(&next);
    if min < EIGENVALUE_FLOOR {
        return Err(Error::InvalidDensityMatrix(format!(
            "update produced minimum eigenvalue {min:e}"
        )));
    }
    Ok((DensityMatrix(next), pi))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QuantumTrajectory {
    pub seed: u64,
    pub outcomes: Vec<usize>,
    /// `diag(ρ_n)` for `n = 0 … steps`.
    pub q_path: Vec<Vec<f64>>,
    /// Steps at which `rho_path` was recorded.
    pub rho_steps: Vec<usize>,
    pub rho_path: Vec<DensityMatrix>,
}

impl QuantumTrajectory {
    pub fn final_q(&self) -> &[f64] {
        self.q_path.last().expect("path holds Q_0")
    }
}

/// Samples outcomes from `π` and applies the measurement update, recording
/// `ρ` every `stride` steps and at the end.
pub fn simulate_quantum_chain(
    propagators: &PropagatorSet,
    rho0: &DensityMatrix,
    steps: usize,
    seed: u64,
    stride: usize,
) -> Result<QuantumTrajectory> {
    if rho0.dim() != propagators.system_dim {
        return Err(Error::InvalidDensityMatrix(format!(
            "ρ0 is {0}×{0}, system dimension is {1}",
            rho0.dim(),
            propagators.system_dim
        )));
    }
    let stride = stride.max(1);
    let mut rng = stream_rng(seed, stream::MAIN);
    let mut rho = rho0.clone();
    let mut trajectory = QuantumTrajectory {
        seed,
        outcomes: Vec::with_capacity(steps),
        q_path: vec![rho.diagonal()],
        rho_steps: vec![0],
        rho_path: vec![rho.clone()],
    };
    for step in 1..=steps {
        let pi = outcome_probabilities(propagators, &rho);
        let outcome = sample_categorical(&mut rng, &pi);
        rho = measurement_update(propagators, &rho, outcome)?.0;
        trajectory.outcomes.push(outcome);
        trajectory.q_path.push(rho.diagonal());
        if step % stride == 0 || step == steps {
            trajectory.rho_steps.push(step);
            trajectory.rho_path.push(rho.clone());
        }
    }
    Ok(trajectory)
}

/// Random full-rank density matrix `A A† / Tr(A A†)` with Gaussian `A`.
pub fn random_density_matrix<R: Rng + ?Sized>(rng: &mut R, n: usize) -> DensityMatrix {
    use rand_distr::{Distribution, StandardNormal};
    let a = CMatrix::from_fn(n, n, |_, _| {
        num_complex::Complex64::new(StandardNormal.sample(rng), StandardNormal.sample(rng))
    });
    let m = &a * a.adjoint();
    let tr = trace(&m).re;
    DensityMatrix::from_unchecked(hermitize(&m.unscale(tr)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::{bayes_update, PointerDistribution};
    use crate::linalg::{c, pauli, unitarity_error};

    fn plus_minus() -> Vec<CVector> {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        vec![
            CVector::from_vec(vec![c(s, 0.0), c(s, 0.0)]),
            CVector::from_vec(vec![c(s, 0.0), c(-s, 0.0)]),
        ]
    }

    fn ket0() -> CVector {
        CVector::from_vec(vec![c(1.0, 0.0), c(0.0, 0.0)])
    }

    fn diffusive_fixture(delta: f64) -> QuantumApparatus {
        QuantumApparatus::new(
            vec![0.0, 0.0],
            vec![pauli::y().scale(0.5), pauli::y().scale(-0.5)],
            CMatrix::zeros(2, 2),
            ket0(),
            plus_minus(),
            delta,
        )
        .unwrap()
    }

    #[test]
    fn zero_hamiltonian_gives_identity() {
        let app = QuantumApparatus::new(
            vec![0.0, 0.0],
            vec![CMatrix::zeros(2, 2), CMatrix::zeros(2, 2)],
            CMatrix::zeros(2, 2),
            ket0(),
            vec![ket0(), CVector::from_vec(vec![c(0.0, 0.0), c(1.0, 0.0)])],
            0.1,
        )
        .unwrap();
        let props = build_propagator(&app).unwrap();
        assert!(max_abs(&(props.unitary() - CMatrix::identity(4, 4))) < 1e-15);
        assert!(max_abs(&(&props.kraus()[0] - CMatrix::identity(2, 2))) < 1e-15);
        assert!(max_abs(&props.kraus()[1]) < 1e-15);
        let k = induced_kernel(&props).unwrap();
        assert_eq!(k.row(0), &[1.0, 0.0]);
        assert_eq!(k.row(1), &[1.0, 0.0]);
    }

    #[test]
    fn fixture_is_complete_and_qnd() {
        let props = build_propagator(&diffusive_fixture(1e-4)).unwrap();
        assert!(props.completeness_error() < 1e-10);
        assert!(unitarity_error(props.unitary()) < 1e-10);
        let report = check_qnd(&props, QND_TOLERANCE);
        assert!(report.passed);
        assert_eq!(report.off_block_norm, 0.0);
    }

    #[test]
    fn fixture_kernel_matches_expansion() {
        let props = build_propagator(&diffusive_fixture(1e-4)).unwrap();
        let k = induced_kernel(&props).unwrap();
        // p(+|a) = 0.5(1 + sin 2g√δ) for H_a = gY.
        let exact = 0.5 * (1.0 + (2.0 * 0.5 * 1e-2f64).sin());
        assert!((k.prob(0, 0) - exact).abs() < 1e-12);
        assert!((k.prob(0, 0) - 0.505).abs() < 2e-4);
        assert!((k.prob(1, 0) - 0.495).abs() < 2e-4);
    }

    #[test]
    fn pointer_coupling_breaks_qnd() {
        let app = diffusive_fixture(1e-2)
            .with_pointer_coupling(0, 1, &pauli::x().scale(1e-3))
            .unwrap();
        let props = build_propagator(&app).unwrap();
        let report = check_qnd(&props, QND_TOLERANCE);
        assert!(!report.passed && report.off_block_norm > 0.0);
        assert!(matches!(induced_kernel(&props), Err(Error::NotQnd(_))));
    }

    #[test]
    fn pointer_state_is_fixed() {
        let props = build_propagator(&diffusive_fixture(1e-2)).unwrap();
        let k = induced_kernel(&props).unwrap();
        let rho = DensityMatrix::pointer(2, 1);
        for i in 0..2 {
            let (next, pi) = measurement_update(&props, &rho, i).unwrap();
            assert!(max_abs(&(next.matrix() - rho.matrix())) < 1e-12);
            assert!((pi - k.prob(1, i)).abs() < 1e-12);
        }
    }

    #[test]
    fn diagonal_update_is_bayes() {
        let props = build_propagator(&diffusive_fixture(1e-2)).unwrap();
        let k = induced_kernel(&props).unwrap();
        let q = [0.3, 0.7];
        let rho = DensityMatrix::from_diagonal(&q).unwrap();
        for i in 0..2 {
            let (next, _) = measurement_update(&props, &rho, i).unwrap();
            let classical = bayes_update(&k, &PointerDistribution::new(q.to_vec()).unwrap(), i).unwrap();
            for (a, b) in next.diagonal().iter().zip(classical.weights()) {
                assert!((a - b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn non_hermitian_block_rejected() {
        let mut bad = pauli::y();
        bad[(0, 1)] = c(0.0, 0.0);
        let err = QuantumApparatus::new(
            vec![0.0, 0.0],
            vec![bad, pauli::y()],
            CMatrix::zeros(2, 2),
            ket0(),
            plus_minus(),
            0.1,
        )
        .unwrap_err();
        assert!(matches!(err, Error::InvalidApparatus(_)));
    }
}
