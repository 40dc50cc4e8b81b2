//! Continuous-time quantum filters.
//!
//! Diffusive: `dρ = L_d(ρ) dt + Σ_j 𝒟_j(ρ) dX(j)`.
//! Jumpy: `dρ = L_p(ρ) dt + Σ_{i≠i*} 𝒟̂_i(ρ) dY(i)` with
//! `dN(i) = dY(i) + Tr[D_i ρ D_i†] dt`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{
    anticommutator, commutator, hermiticity_error, hermitize, is_diagonal, max_abs,
    min_eigenvalue, trace, CMatrix, I,
};
use crate::quantum::{DensityMatrix, QuantumApparatus};
use crate::rng::{stream, stream_rng, SimRng};
use crate::scaling::{
    jump_substeps, select_jump, DiffusiveModel, JumpEvent, JumpModel, NoiseGenerator,
    MAX_HALVINGS, RANGE_TOLERANCE,
};

pub const SUM_TOLERANCE: f64 = 1e-10;
/// Minimum eigenvalue below which an integrator aborts.
pub const POSITIVITY_FLOOR: f64 = -1e-6;
pub const MIN_JUMP_INTENSITY: f64 = 1e-300;
const DIAGONAL_TOLERANCE: f64 = 1e-12;

fn check_square(m: &CMatrix, n: usize, what: &str) -> Result<()> {
    if m.nrows() != n || m.ncols() != n {
        return Err(Error::InvalidModel(format!("{what} must be {n}×{n}")));
    }
    Ok(())
}

fn check_hamiltonian(h_s: &CMatrix) -> Result<()> {
    let err = hermiticity_error(h_s);
    if err > 1e-12 {
        return Err(Error::InvalidModel(format!(
            "system Hamiltonian is not Hermitian (error {err:e})"
        )));
    }
    Ok(())
}

/// `⟨ψ|H_I|ψ⟩` must vanish for either limit to exist.
fn check_centered(apparatus: &QuantumApparatus) -> Result<()> {
    let psi = apparatus.probe_state();
    let mean = apparatus.probe_matrix_element(apparatus.interaction(), psi, psi);
    let size = max_abs(&mean);
    if size > SUM_TOLERANCE {
        return Err(Error::NoContinuumLimit(format!(
            "⟨ψ|H_I|ψ⟩ has entries up to {size:e}; the probe coupling must be centered"
        )));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiffusiveBelavkinModel {
    h_s: CMatrix,
    c: Vec<CMatrix>,
    p0: Vec<f64>,
}

impl DiffusiveBelavkinModel {
    pub fn new(h_s: CMatrix, c: Vec<CMatrix>, p0: Vec<f64>) -> Result<Self> {
        let n = h_s.nrows();
        check_square(&h_s, n, "system Hamiltonian")?;
        check_hamiltonian(&h_s)?;
        if c.len() != p0.len() || c.is_empty() {
            return Err(Error::InvalidModel(format!(
                "{} operators for {} outcome weights",
                c.len(),
                p0.len()
            )));
        }
        if let Some(i) = p0.iter().position(|&p| !(p > 0.0)) {
            return Err(Error::InvalidModel(format!("p0({i}) = {} is not positive", p0[i])));
        }
        let total: f64 = p0.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidModel(format!("p0 sums to {total}")));
        }
        let mut weighted = CMatrix::zeros(n, n);
        for (i, (ci, &p)) in c.iter().zip(&p0).enumerate() {
            check_square(ci, n, &format!("C_{i}"))?;
            weighted += ci.scale(p);
        }
        let residual = max_abs(&weighted);
        if residual > SUM_TOLERANCE {
            return Err(Error::InvalidModel(format!(
                "Σ_i p0(i) C_i has entries up to {residual:e}, expected 0"
            )));
        }
        if !c.iter().all(|ci| is_diagonal(ci, DIAGONAL_TOLERANCE)) {
            log::warn!("C operators are not pointer-diagonal; the noise law is only guaranteed for non-demolition models");
        }
        Ok(Self { h_s, c, p0 })
    }

    pub fn dim(&self) -> usize {
        self.h_s.nrows()
    }

    pub fn h_s(&self) -> &CMatrix {
        &self.h_s
    }

    pub fn c(&self) -> &[CMatrix] {
        &self.c
    }

    pub fn p0(&self) -> &[f64] {
        &self.p0
    }

    /// Classical data with `Γ(j|α) = (C_j + C_j†)_{αα}`; requires
    /// pointer-diagonal operators.
    pub fn classical_limit(&self) -> Result<DiffusiveModel> {
        if !self.c.iter().all(|ci| is_diagonal(ci, DIAGONAL_TOLERANCE)) {
            return Err(Error::NotApplicable(
                "classical reduction needs pointer-diagonal C operators".into(),
            ));
        }
        let gamma = (0..self.dim())
            .map(|alpha| self.c.iter().map(|ci| 2.0 * ci[(alpha, alpha)].re).collect())
            .collect();
        DiffusiveModel::new(self.p0.clone(), gamma)
    }
}

/// `C_i = −i ⟨i|H_I|ψ⟩ / ⟨i|ψ⟩`, `p0(i) = |⟨i|ψ⟩|²`, `H_s = diag(E)`.
pub fn extract_diffusive_model(apparatus: &QuantumApparatus) -> Result<DiffusiveBelavkinModel> {
    check_centered(apparatus)?;
    let psi = apparatus.probe_state();
    let mut c = Vec::new();
    let mut p0 = Vec::new();
    for (i, basis) in apparatus.probe_basis().iter().enumerate() {
        let amplitude = basis.dotc(psi);
        if amplitude.norm() < 1e-12 {
            return Err(Error::WrongLimit(format!(
                "⟨{i}|ψ⟩ = 0; this apparatus has a Poissonian limit, use the jump model"
            )));
        }
        let element = apparatus.probe_matrix_element(apparatus.interaction(), basis, psi);
        c.push(element.map(|z| -I * z / amplitude));
        p0.push(amplitude.norm_sqr());
    }
    if apparatus.probe_hamiltonian().iter().any(|z| z.norm() > 0.0) {
        log::info!("probe Hamiltonian does not enter the continuum model");
    }
    DiffusiveBelavkinModel::new(apparatus.system_hamiltonian(), c, p0)
}

/// `L_d(ρ) = −i[H_s, ρ] + Σ_i p0(i)(C_i ρ C_i† − ½{C_i†C_i, ρ})`.
pub fn lindblad_d(model: &DiffusiveBelavkinModel, rho: &CMatrix) -> CMatrix {
    let mut out = commutator(&model.h_s, rho) * (-I);
    for (ci, &p) in model.c.iter().zip(&model.p0) {
        let cd = ci.adjoint();
        out += (ci * rho * &cd - anticommutator(&(&cd * ci), rho).scale(0.5)).scale(p);
    }
    out
}

/// `𝒟_j(ρ) = C_j ρ + ρ C_j† − ρ Tr[(C_j + C_j†)ρ]`.
pub fn diffusive_noise_term(model: &DiffusiveBelavkinModel, rho: &CMatrix, j: usize) -> CMatrix {
    let cj = &model.c[j];
    let cd = cj.adjoint();
    let shift = trace(&((cj + &cd) * rho));
    cj * rho + rho * &cd - rho * shift
}

#[derive(Debug, Clone, PartialEq)]
pub struct JumpBelavkinModel {
    h_s: CMatrix,
    star: usize,
    outcome_count: usize,
    d: Vec<CMatrix>,
}

impl JumpBelavkinModel {
    /// `d` lists `D_i` for the outcomes `0..outcome_count` with `star`
    /// skipped, in increasing order.
    pub fn new(h_s: CMatrix, star: usize, outcome_count: usize, d: Vec<CMatrix>) -> Result<Self> {
        let n = h_s.nrows();
        check_square(&h_s, n, "system Hamiltonian")?;
        check_hamiltonian(&h_s)?;
        if outcome_count < 2 || star >= outcome_count {
            return Err(Error::InvalidModel(format!(
                "star outcome {star} invalid for {outcome_count} outcomes"
            )));
        }
        if d.len() != outcome_count - 1 {
            return Err(Error::InvalidModel(format!(
                "{} jump operators, expected {}",
                d.len(),
                outcome_count - 1
            )));
        }
        for (c, dc) in d.iter().enumerate() {
            check_square(dc, n, &format!("D of channel {c}"))?;
        }
        if !d.iter().all(|dc| is_diagonal(dc, DIAGONAL_TOLERANCE)) {
            log::warn!("D operators are not pointer-diagonal; the noise law is only guaranteed for non-demolition models");
        }
        Ok(Self {
            h_s,
            star,
            outcome_count,
            d,
        })
    }

    pub fn dim(&self) -> usize {
        self.h_s.nrows()
    }

    pub fn h_s(&self) -> &CMatrix {
        &self.h_s
    }

    pub fn star(&self) -> usize {
        self.star
    }

    pub fn outcome_count(&self) -> usize {
        self.outcome_count
    }

    /// `D_i` per channel.
    pub fn d(&self) -> &[CMatrix] {
        &self.d
    }

    pub fn channels(&self) -> Vec<usize> {
        (0..self.outcome_count).filter(|&i| i != self.star).collect()
    }

    /// `Tr[D_i ρ D_i†]` per channel.
    pub fn intensities(&self, rho: &CMatrix) -> Vec<f64> {
        self.d
            .iter()
            .map(|dc| trace(&(dc * rho * dc.adjoint())).re.max(0.0))
            .collect()
    }

    /// Classical data with `θ(i|α) = |D_i(α,α)|²`; requires pointer-diagonal
    /// operators.
    pub fn classical_limit(&self) -> Result<JumpModel> {
        if !self.d.iter().all(|dc| is_diagonal(dc, DIAGONAL_TOLERANCE)) {
            return Err(Error::NotApplicable(
                "classical reduction needs pointer-diagonal D operators".into(),
            ));
        }
        let theta = (0..self.dim())
            .map(|alpha| self.d.iter().map(|dc| dc[(alpha, alpha)].norm_sqr()).collect())
            .collect();
        JumpModel::new(self.star, self.outcome_count, theta)
    }
}

/// `D_i = −i ⟨i|H_I|ψ⟩` for `|ψ⟩ = |i*⟩`.
pub fn extract_jump_model(apparatus: &QuantumApparatus) -> Result<JumpBelavkinModel> {
    let psi = apparatus.probe_state();
    let basis = apparatus.probe_basis();
    let star = basis
        .iter()
        .position(|b| b.dotc(psi).norm() > 1.0 - 1e-10)
        .ok_or_else(|| {
            Error::WrongLimit(
                "probe state is not a measurement basis vector; use the diffusive model".into(),
            )
        })?;
    check_centered(apparatus)?;
    let d = basis
        .iter()
        .enumerate()
        .filter(|&(i, _)| i != star)
        .map(|(_, b)| {
            apparatus
                .probe_matrix_element(apparatus.interaction(), b, psi)
                .map(|z| -I * z)
        })
        .collect();
    JumpBelavkinModel::new(apparatus.system_hamiltonian(), star, basis.len(), d)
}

/// `L_p(ρ) = −i[H_s, ρ] + Σ_{i≠i*}(D_i ρ D_i† − ½{D_i†D_i, ρ})`.
pub fn lindblad_p(model: &JumpBelavkinModel, rho: &CMatrix) -> CMatrix {
    let mut out = commutator(&model.h_s, rho) * (-I);
    for dc in &model.d {
        let dd = dc.adjoint();
        out += dc * rho * &dd - anticommutator(&(&dd * dc), rho).scale(0.5);
    }
    out
}

/// `𝒟̂_i(ρ) = D_i ρ D_i† / Tr[D_i ρ D_i†] − ρ` for channel index `channel`.
pub fn jump_noise_term(model: &JumpBelavkinModel, rho: &CMatrix, channel: usize) -> Result<CMatrix> {
    let dc = &model.d[channel];
    let jumped = dc * rho * dc.adjoint();
    let intensity = trace(&jumped).re;
    if !(intensity >= MIN_JUMP_INTENSITY) {
        return Err(Error::ImpossibleJump { channel, intensity });
    }
    Ok(jumped.unscale(intensity) - rho)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BelavkinOptions {
    pub horizon: f64,
    pub dt: f64,
    pub seed: u64,
    pub record_stride: usize,
}

impl BelavkinOptions {
    pub fn new(horizon: f64, dt: f64, seed: u64) -> Self {
        Self {
            horizon,
            dt,
            seed,
            record_stride: 1,
        }
    }

    pub fn with_stride(mut self, stride: usize) -> Self {
        self.record_stride = stride.max(1);
        self
    }

    pub fn steps(&self) -> usize {
        (self.horizon / self.dt).round() as usize
    }

    fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0) || !(self.horizon > 0.0) {
            return Err(Error::InvalidModel("horizon and dt must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BelavkinPath {
    pub seed: u64,
    pub times: Vec<f64>,
    pub rho_path: Vec<DensityMatrix>,
    /// Cumulative `X_t` at the recorded times (diffusive integrator only).
    pub x_path: Vec<Vec<f64>>,
    /// Jump events (jump integrator only).
    pub jump_events: Vec<JumpEvent>,
    pub min_eigenvalue: f64,
    /// `Σ |Tr ρ − 1|` before renormalization, per unit time.
    pub trace_drift_rate: f64,
    pub halvings: u64,
}

impl BelavkinPath {
    pub fn final_rho(&self) -> &DensityMatrix {
        self.rho_path.last().expect("path holds ρ_0")
    }

    pub fn q_path(&self) -> Vec<Vec<f64>> {
        self.rho_path.iter().map(DensityMatrix::diagonal).collect()
    }
}

struct Monitor {
    min_eigenvalue: f64,
    trace_drift: f64,
}

impl Monitor {
    /// Re-Hermitizes and renormalizes `next`, recording the trace drift and
    /// aborting on positivity loss.
    fn accept(&mut self, next: CMatrix, time: f64) -> Result<CMatrix> {
        let tr = trace(&next).re;
        self.trace_drift += (tr - 1.0).abs();
        let mut rho = hermitize(&next);
        rho.unscale_mut(tr);
        let min = min_eigenvalue(&rho);
        self.min_eigenvalue = self.min_eigenvalue.min(min);
        if min < POSITIVITY_FLOOR {
            return Err(Error::PositivityLoss {
                time,
                min_eigenvalue: min,
            });
        }
        Ok(rho)
    }
}

fn diagonal_in_range(m: &CMatrix) -> bool {
    m.diagonal()
        .iter()
        .all(|z| z.re >= -RANGE_TOLERANCE && z.re <= 1.0 + RANGE_TOLERANCE)
}

struct DiffusiveBelavkinStepper<'a> {
    model: &'a DiffusiveBelavkinModel,
    noise: NoiseGenerator,
    refine_rng: SimRng,
    monitor: Monitor,
    halvings: u64,
}

impl DiffusiveBelavkinStepper<'_> {
    fn advance(
        &mut self,
        rho: &mut CMatrix,
        x: &mut [f64],
        dx: &[f64],
        time: f64,
        dt: f64,
        depth: u32,
    ) -> Result<()> {
        let mut next = rho.clone() + lindblad_d(self.model, rho).scale(dt);
        for (j, &dxj) in dx.iter().enumerate() {
            next += diffusive_noise_term(self.model, rho, j).scale(dxj);
        }
        if !diagonal_in_range(&next) {
            if depth >= MAX_HALVINGS {
                return Err(Error::PositivityLoss {
                    time,
                    min_eigenvalue: min_eigenvalue(&hermitize(&next)),
                });
            }
            self.halvings += 1;
            let bridge = self.noise.sample(dt / 4.0, &mut self.refine_rng);
            let first: Vec<f64> = dx.iter().zip(&bridge).map(|(d, b)| 0.5 * d + b).collect();
            let second: Vec<f64> = dx.iter().zip(&bridge).map(|(d, b)| 0.5 * d - b).collect();
            self.advance(rho, x, &first, time, dt / 2.0, depth + 1)?;
            return self.advance(rho, x, &second, time + dt / 2.0, dt / 2.0, depth + 1);
        }
        *rho = self.monitor.accept(next, time + dt)?;
        for (xi, d) in x.iter_mut().zip(dx) {
            *xi += d;
        }
        Ok(())
    }
}

/// Euler–Maruyama integration of the diffusive filter, driven by the same
/// noise construction and seed streams as the classical integrator.
pub fn integrate_belavkin_diffusive(
    model: &DiffusiveBelavkinModel,
    rho0: &DensityMatrix,
    options: &BelavkinOptions,
) -> Result<BelavkinPath> {
    options.validate()?;
    if rho0.dim() != model.dim() {
        return Err(Error::InvalidDensityMatrix(format!(
            "ρ0 is {0}×{0}, model dimension is {1}",
            rho0.dim(),
            model.dim()
        )));
    }
    let noise = NoiseGenerator::new(model.p0());
    let mut rng = stream_rng(options.seed, stream::MAIN);
    let mut stepper = DiffusiveBelavkinStepper {
        model,
        noise: noise.clone(),
        refine_rng: stream_rng(options.seed, stream::REFINE),
        monitor: Monitor {
            min_eigenvalue: rho0.min_eigenvalue(),
            trace_drift: 0.0,
        },
        halvings: 0,
    };
    let stride = options.record_stride.max(1);
    let steps = options.steps();
    let mut rho = rho0.matrix().clone();
    let mut x = vec![0.0; model.p0().len()];
    let mut dx = vec![0.0; model.p0().len()];
    let mut path = BelavkinPath {
        seed: options.seed,
        times: vec![0.0],
        rho_path: vec![rho0.clone()],
        x_path: vec![x.clone()],
        jump_events: Vec::new(),
        min_eigenvalue: 0.0,
        trace_drift_rate: 0.0,
        halvings: 0,
    };
    for step in 0..steps {
        noise.sample_into(options.dt, &mut rng, &mut dx);
        let t = step as f64 * options.dt;
        stepper.advance(&mut rho, &mut x, &dx, t, options.dt, 0)?;
        if (step + 1) % stride == 0 || step + 1 == steps {
            path.times.push((step + 1) as f64 * options.dt);
            path.rho_path.push(DensityMatrix::from_unchecked(rho.clone()));
            path.x_path.push(x.clone());
        }
    }
    path.min_eigenvalue = stepper.monitor.min_eigenvalue;
    path.trace_drift_rate = stepper.monitor.trace_drift / options.horizon;
    path.halvings = stepper.halvings;
    Ok(path)
}

/// Thinning integrator of the jumpy filter. Jumps are selected exactly as in
/// the classical thinning integrator, so both follow the same event stream
/// for a given seed.
pub fn integrate_belavkin_jump(
    model: &JumpBelavkinModel,
    rho0: &DensityMatrix,
    options: &BelavkinOptions,
) -> Result<BelavkinPath> {
    options.validate()?;
    if rho0.dim() != model.dim() {
        return Err(Error::InvalidDensityMatrix(format!(
            "ρ0 is {0}×{0}, model dimension is {1}",
            rho0.dim(),
            model.dim()
        )));
    }
    use rand::Rng;
    let channels = model.channels();
    let mut rng = stream_rng(options.seed, stream::MAIN);
    let mut monitor = Monitor {
        min_eigenvalue: rho0.min_eigenvalue(),
        trace_drift: 0.0,
    };
    let stride = options.record_stride.max(1);
    let steps = options.steps();
    let mut rho = rho0.matrix().clone();
    let mut path = BelavkinPath {
        seed: options.seed,
        times: vec![0.0],
        rho_path: vec![rho0.clone()],
        x_path: Vec::new(),
        jump_events: Vec::new(),
        min_eigenvalue: 0.0,
        trace_drift_rate: 0.0,
        halvings: 0,
    };
    for step in 0..steps {
        let t0 = step as f64 * options.dt;
        let lambda0 = model.intensities(&rho);
        let substeps = jump_substeps(lambda0.iter().sum(), options.dt);
        let h = options.dt / substeps as f64;
        for sub in 0..substeps {
            let lambda = if sub == 0 { lambda0.clone() } else { model.intensities(&rho) };
            let fired = select_jump(&lambda, h, rng.random::<f64>());
            // L_p(ρ) − Σ_i 𝒟̂_i(ρ) Tr[D_i ρ D_i†]
            let mut drift = lindblad_p(model, &rho);
            for (dc, &l) in model.d.iter().zip(&lambda) {
                drift -= dc * &rho * dc.adjoint() - rho.scale(l);
            }
            let mut next = &rho + drift.scale(h);
            let time = t0 + (sub + 1) as f64 * h;
            if let Some(c) = fired {
                next += jump_noise_term(model, &rho, c)?;
                path.jump_events.push(JumpEvent {
                    time,
                    outcome: channels[c],
                });
            }
            rho = monitor.accept(next, time)?;
        }
        if (step + 1) % stride == 0 || step + 1 == steps {
            path.times.push((step + 1) as f64 * options.dt);
            path.rho_path.push(DensityMatrix::from_unchecked(rho.clone()));
        }
    }
    path.min_eigenvalue = monitor.min_eigenvalue;
    path.trace_drift_rate = monitor.trace_drift / options.horizon;
    Ok(path)
}
