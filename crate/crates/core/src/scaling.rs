//! Continuous-time limits of the classical chain.
//!
//! Diffusive limit: `dQ_t(α) = Q_t(α) Σ_i (Γ(i|α) − ⟨Γ(i)⟩_t) dX_t(i)` with
//! Gaussian martingales of quadratic variation `G(i,j) dt`.
//!
//! Poissonian limit: `dQ_t(α) = Q_t(α) Σ_{i≠i*} (θ(i|α)/⟨θ(i)⟩_t − 1) dY_t(i)`
//! with `dN = dY + ⟨θ⟩ dt`. Two constructions are provided: a time-stepped
//! thinning integrator and an event-driven exact construction through the
//! exponential Poisson martingale.

use rand::Rng;
use rand_distr::{Distribution, Exp, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::{normalize_log_weights, MeasurementKernel, PointerDistribution};
use crate::rng::{sample_categorical, stream, stream_rng, SimRng};

/// Tolerance on `Σ_i p0(i) Γ(i|α) = 0`.
pub const CENTERING_TOLERANCE: f64 = 1e-10;
/// Admissible band for `Q` after an Euler step.
pub const RANGE_TOLERANCE: f64 = 1e-9;
/// Maximum number of successive step halvings.
pub const MAX_HALVINGS: u32 = 30;
/// Expected jumps per (sub)step above which thinning sub-steps.
pub const MAX_JUMP_MASS: f64 = 0.1;

fn rows_distinct_warn(rows: &[Vec<f64>], what: &str) {
    for a in 0..rows.len() {
        for b in (a + 1)..rows.len() {
            let diff = rows[a]
                .iter()
                .zip(&rows[b])
                .map(|(x, y)| (x - y).abs())
                .fold(0.0, f64::max);
            if diff <= 1e-12 {
                log::warn!("{what} rows {a} and {b} coincide; the limit does not collapse between them");
            }
        }
    }
}

/// Diffusive-limit data `(p0, Γ)`; `gamma[α][i] = Γ(i|α)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiffusiveModel {
    p0: Vec<f64>,
    gamma: Vec<Vec<f64>>,
}

impl DiffusiveModel {
    pub fn new(p0: Vec<f64>, gamma: Vec<Vec<f64>>) -> Result<Self> {
        if p0.is_empty() || gamma.is_empty() {
            return Err(Error::InvalidModel("empty diffusive model".into()));
        }
        if let Some(i) = p0.iter().position(|&p| !(p > 0.0)) {
            return Err(Error::NotDiffusive(format!("p0({i}) = {} is not positive", p0[i])));
        }
        let total: f64 = p0.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidModel(format!("p0 sums to {total}")));
        }
        for (alpha, row) in gamma.iter().enumerate() {
            if row.len() != p0.len() {
                return Err(Error::InvalidModel(format!(
                    "gamma row {alpha} has {} entries, expected {}",
                    row.len(),
                    p0.len()
                )));
            }
            let centered: f64 = row.iter().zip(&p0).map(|(g, p)| g * p).sum();
            if centered.abs() > CENTERING_TOLERANCE {
                return Err(Error::InvalidModel(format!(
                    "Σ_i p0(i)Γ(i|{alpha}) = {centered:e}, expected 0"
                )));
            }
        }
        rows_distinct_warn(&gamma, "gamma");
        Ok(Self { p0, gamma })
    }

    pub fn p0(&self) -> &[f64] {
        &self.p0
    }

    pub fn gamma(&self) -> &[Vec<f64>] {
        &self.gamma
    }

    pub fn pointer_count(&self) -> usize {
        self.gamma.len()
    }

    pub fn outcome_count(&self) -> usize {
        self.p0.len()
    }

    /// `⟨Γ(i)⟩ = Σ_α Γ(i|α) Q(α)`.
    pub fn mean_gamma(&self, q: &[f64]) -> Vec<f64> {
        let mut mean = vec![0.0; self.outcome_count()];
        for (row, &w) in self.gamma.iter().zip(q) {
            for (m, g) in mean.iter_mut().zip(row) {
                *m += g * w;
            }
        }
        mean
    }

    /// The discrete kernel `p(i|α) = p0(i)(1 + √δ Γ(i|α))` at resolution `δ`.
    pub fn kernel_at(&self, delta: f64) -> Result<MeasurementKernel> {
        let s = delta.sqrt();
        let rows = self
            .gamma
            .iter()
            .map(|row| row.iter().zip(&self.p0).map(|(g, p)| p * (1.0 + s * g)).collect())
            .collect();
        MeasurementKernel::from_rows(rows)
    }
}

/// `G(i,j) = p0(i)δ_ij − p0(i)p0(j)`.
pub fn noise_covariance(p0: &[f64]) -> Vec<Vec<f64>> {
    p0.iter()
        .enumerate()
        .map(|(i, &pi)| {
            p0.iter()
                .enumerate()
                .map(|(j, &pj)| if i == j { pi - pi * pj } else { -pi * pj })
                .collect()
        })
        .collect()
}

/// `(G v)(i)`.
fn apply_covariance(p0: &[f64], v: &[f64]) -> Vec<f64> {
    let weighted: f64 = p0.iter().zip(v).map(|(p, x)| p * x).sum();
    p0.iter().zip(v).map(|(p, x)| p * x - p * weighted).collect()
}

/// Result of [`diffusive_from_kernels`].
#[derive(Debug, Clone, PartialEq)]
pub struct DiffusiveExtraction {
    pub model: DiffusiveModel,
    /// Largest spread of the fitted `p0` across pointers.
    pub p0_spread: f64,
    /// Largest centering correction applied to a `Γ` row.
    pub projection_residual: f64,
}

/// Extracts `(p0, Γ)` from one kernel family sampled at two small `δ`,
/// by a linear fit in `√δ`.
pub fn diffusive_from_kernels(
    coarse: &MeasurementKernel,
    delta_coarse: f64,
    fine: &MeasurementKernel,
    delta_fine: f64,
) -> Result<DiffusiveExtraction> {
    if coarse.pointer_count() != fine.pointer_count() || coarse.outcome_count() != fine.outcome_count() {
        return Err(Error::InvalidModel("kernel shapes differ".into()));
    }
    if !(delta_coarse > 0.0 && delta_fine > 0.0) || delta_coarse == delta_fine {
        return Err(Error::InvalidModel("need two distinct positive resolutions".into()));
    }
    let (s1, s2) = (delta_coarse.sqrt(), delta_fine.sqrt());
    let (pointers, outcomes) = (coarse.pointer_count(), coarse.outcome_count());
    let mut intercepts = vec![vec![0.0; outcomes]; pointers];
    let mut slopes = vec![vec![0.0; outcomes]; pointers];
    for alpha in 0..pointers {
        for i in 0..outcomes {
            let (y1, y2) = (coarse.prob(alpha, i), fine.prob(alpha, i));
            let slope = (y1 - y2) / (s1 - s2);
            slopes[alpha][i] = slope;
            intercepts[alpha][i] = y1 - slope * s1;
        }
    }
    let mut p0 = vec![0.0; outcomes];
    let mut p0_spread: f64 = 0.0;
    for i in 0..outcomes {
        let column: Vec<f64> = intercepts.iter().map(|r| r[i]).collect();
        p0[i] = column.iter().sum::<f64>() / pointers as f64;
        let (lo, hi) = column
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), &v| (l.min(v), h.max(v)));
        p0_spread = p0_spread.max(hi - lo);
    }
    if let Some(i) = p0.iter().position(|&p| !(p > 1e-9)) {
        return Err(Error::NotDiffusive(format!(
            "outcome {i} has vanishing limit probability {:e}; use a jump model",
            p0[i]
        )));
    }
    let total: f64 = p0.iter().sum();
    for p in &mut p0 {
        *p /= total;
    }
    let mut projection_residual: f64 = 0.0;
    let mut gamma = Vec::with_capacity(pointers);
    for row in &slopes {
        let mut g: Vec<f64> = row.iter().zip(&p0).map(|(s, p)| s / p).collect();
        let center: f64 = g.iter().zip(&p0).map(|(x, p)| x * p).sum();
        projection_residual = projection_residual.max(center.abs());
        for x in &mut g {
            *x -= center;
        }
        if let Some(i) = g.iter().position(|x| (s1 * x).abs() >= 0.5) {
            return Err(Error::NotDiffusive(format!(
                "√δ·Γ({i}) = {:.3} is not small; the family is not in the diffusive regime",
                s1 * g[i]
            )));
        }
        gamma.push(g);
    }
    Ok(DiffusiveExtraction {
        model: DiffusiveModel::new(p0, gamma)?,
        p0_spread,
        projection_residual,
    })
}

/// Gaussian increments with covariance `G·dt` built as
/// `dX(i) = √dt (√p0(i) ξ_i − p0(i) Σ_j √p0(j) ξ_j)`.
#[derive(Debug, Clone)]
pub struct NoiseGenerator {
    p0: Vec<f64>,
    sqrt_p0: Vec<f64>,
}

impl NoiseGenerator {
    pub fn new(p0: &[f64]) -> Self {
        Self {
            p0: p0.to_vec(),
            sqrt_p0: p0.iter().map(|p| p.sqrt()).collect(),
        }
    }

    /// Fills `out` with one increment. The last component is the negated
    /// sum of the others, so the components sum to exactly zero.
    pub fn sample_into<R: Rng + ?Sized>(&self, dt: f64, rng: &mut R, out: &mut [f64]) {
        let root_dt = dt.sqrt();
        let mut projection = 0.0;
        for (slot, &r) in out.iter_mut().zip(&self.sqrt_p0) {
            let xi: f64 = StandardNormal.sample(rng);
            *slot = xi;
            projection += r * xi;
        }
        let last = out.len() - 1;
        let mut partial = 0.0;
        for i in 0..last {
            out[i] = root_dt * (self.sqrt_p0[i] * out[i] - self.p0[i] * projection);
            partial += out[i];
        }
        out[last] = -partial;
    }

    pub fn sample<R: Rng + ?Sized>(&self, dt: f64, rng: &mut R) -> Vec<f64> {
        let mut out = vec![0.0; self.p0.len()];
        self.sample_into(dt, rng, &mut out);
        out
    }
}

pub fn sample_noise_increment<R: Rng + ?Sized>(p0: &[f64], dt: f64, rng: &mut R) -> Vec<f64> {
    NoiseGenerator::new(p0).sample(dt, rng)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum DiffusiveMode {
    /// Sample under `P`: the increments `dX` are centered.
    #[default]
    Unconditioned,
    /// Draw `α ~ q0` and sample under `P_α` through the Girsanov drift.
    Conditioned,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiffusiveOptions {
    pub horizon: f64,
    pub dt: f64,
    pub seed: u64,
    pub mode: DiffusiveMode,
    pub record_stride: usize,
}

impl DiffusiveOptions {
    pub fn new(horizon: f64, dt: f64, seed: u64) -> Self {
        Self {
            horizon,
            dt,
            seed,
            mode: DiffusiveMode::Unconditioned,
            record_stride: 1,
        }
    }

    pub fn with_mode(mut self, mode: DiffusiveMode) -> Self {
        self.mode = mode;
        self
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
pub struct DiffusivePath {
    pub seed: u64,
    pub sampled_alpha: Option<usize>,
    pub times: Vec<f64>,
    pub q_path: Vec<Vec<f64>>,
    pub x_path: Vec<Vec<f64>>,
    pub w_path: Vec<Vec<f64>>,
    /// Largest `|Σ_α Q − 1|` seen before renormalization.
    pub max_normalization_drift: f64,
    pub halvings: u64,
}

impl DiffusivePath {
    pub fn final_q(&self) -> &[f64] {
        self.q_path.last().expect("path holds Q_0")
    }
}

/// Euler step of the diffusive filter, without renormalization.
fn diffusive_euler(model: &DiffusiveModel, q: &[f64], mean_gamma: &[f64], dx: &[f64]) -> Vec<f64> {
    q.iter()
        .zip(model.gamma())
        .map(|(&w, row)| {
            let drive: f64 = row
                .iter()
                .zip(mean_gamma)
                .zip(dx)
                .map(|((g, m), x)| (g - m) * x)
                .sum();
            w + w * drive
        })
        .collect()
}

fn in_range(q: &[f64]) -> bool {
    q.iter().all(|&w| w >= -RANGE_TOLERANCE && w <= 1.0 + RANGE_TOLERANCE)
}

struct DiffusiveStepper<'a> {
    model: &'a DiffusiveModel,
    noise: NoiseGenerator,
    conditioned_on: Option<usize>,
    refine_rng: SimRng,
    max_drift: f64,
    halvings: u64,
}

impl DiffusiveStepper<'_> {
    /// Advances `q`, `x`, `w` over `dt` given the centered noise `dxhat`.
    /// Rejected steps are split in two with a Brownian bridge.
    fn advance(
        &mut self,
        q: &mut Vec<f64>,
        x: &mut [f64],
        w: &mut [f64],
        dxhat: &[f64],
        dt: f64,
        depth: u32,
    ) -> Result<()> {
        let mean_gamma = self.model.mean_gamma(q);
        let dx: Vec<f64> = match self.conditioned_on {
            None => dxhat.to_vec(),
            Some(alpha) => {
                let shift: Vec<f64> = self.model.gamma()[alpha]
                    .iter()
                    .zip(&mean_gamma)
                    .map(|(g, m)| g - m)
                    .collect();
                let drift = apply_covariance(self.model.p0(), &shift);
                dxhat.iter().zip(&drift).map(|(n, d)| n + d * dt).collect()
            }
        };
        let next = diffusive_euler(self.model, q, &mean_gamma, &dx);
        if !in_range(&next) {
            if depth >= MAX_HALVINGS {
                return Err(Error::StepSize(format!(
                    "Q left [0, 1] after {MAX_HALVINGS} halvings of dt"
                )));
            }
            self.halvings += 1;
            let bridge = self.noise.sample(dt / 4.0, &mut self.refine_rng);
            let first: Vec<f64> = dxhat.iter().zip(&bridge).map(|(d, b)| 0.5 * d + b).collect();
            let second: Vec<f64> = dxhat.iter().zip(&bridge).map(|(d, b)| 0.5 * d - b).collect();
            self.advance(q, x, w, &first, dt / 2.0, depth + 1)?;
            return self.advance(q, x, w, &second, dt / 2.0, depth + 1);
        }
        let total: f64 = next.iter().sum();
        self.max_drift = self.max_drift.max((total - 1.0).abs());
        let clipped: Vec<f64> = next.into_iter().map(|v| v.max(0.0)).collect();
        let clipped_total: f64 = clipped.iter().sum();
        for (slot, v) in q.iter_mut().zip(clipped) {
            *slot = v / clipped_total;
        }
        for (i, (xi, wi)) in x.iter_mut().zip(w.iter_mut()).enumerate() {
            *xi += dx[i];
            *wi += dx[i] + self.model.p0()[i] * mean_gamma[i] * dt;
        }
        Ok(())
    }
}

/// Euler–Maruyama integration of the diffusive filter.
pub fn integrate_diffusive(
    model: &DiffusiveModel,
    q0: &PointerDistribution,
    options: &DiffusiveOptions,
) -> Result<DiffusivePath> {
    let mut rng = stream_rng(options.seed, stream::MAIN);
    let noise = NoiseGenerator::new(model.p0());
    let steps = options.steps();
    let dt = options.dt;
    let mut dxhat = vec![0.0; model.outcome_count()];
    integrate_diffusive_driven(model, q0, options, |_| {
        noise.sample_into(dt, &mut rng, &mut dxhat);
        dxhat.clone()
    })
    .map(|path| {
        debug_assert_eq!(path.times.len(), steps.div_ceil(options.record_stride.max(1)) + 1);
        path
    })
}

/// Same as [`integrate_diffusive`] with the centered increments supplied by
/// `noise(step)`.
pub fn integrate_diffusive_driven<F>(
    model: &DiffusiveModel,
    q0: &PointerDistribution,
    options: &DiffusiveOptions,
    mut noise: F,
) -> Result<DiffusivePath>
where
    F: FnMut(usize) -> Vec<f64>,
{
    options.validate()?;
    if q0.len() != model.pointer_count() {
        return Err(Error::InvalidDistribution(format!(
            "{} weights for {} pointers",
            q0.len(),
            model.pointer_count()
        )));
    }
    let sampled_alpha = match options.mode {
        DiffusiveMode::Unconditioned => None,
        DiffusiveMode::Conditioned => {
            let mut prior = stream_rng(options.seed, stream::PRIOR);
            Some(sample_categorical(&mut prior, q0.weights()))
        }
    };
    let mut stepper = DiffusiveStepper {
        model,
        noise: NoiseGenerator::new(model.p0()),
        conditioned_on: sampled_alpha,
        refine_rng: stream_rng(options.seed, stream::REFINE),
        max_drift: 0.0,
        halvings: 0,
    };
    let width = model.outcome_count();
    let stride = options.record_stride.max(1);
    let steps = options.steps();
    let mut q = q0.weights().to_vec();
    let mut x = vec![0.0; width];
    let mut w = vec![0.0; width];
    let mut path = DiffusivePath {
        seed: options.seed,
        sampled_alpha,
        times: vec![0.0],
        q_path: vec![q.clone()],
        x_path: vec![x.clone()],
        w_path: vec![w.clone()],
        max_normalization_drift: 0.0,
        halvings: 0,
    };
    for step in 0..steps {
        let dxhat = noise(step);
        stepper.advance(&mut q, &mut x, &mut w, &dxhat, options.dt, 0)?;
        if (step + 1) % stride == 0 || step + 1 == steps {
            path.times.push((step + 1) as f64 * options.dt);
            path.q_path.push(q.clone());
            path.x_path.push(x.clone());
            path.w_path.push(w.clone());
        }
    }
    path.max_normalization_drift = stepper.max_drift;
    path.halvings = stepper.halvings;
    Ok(path)
}

/// Poissonian-limit data: a quiet outcome `i*` and intensities `θ(i|α)` of
/// every other outcome. `theta[α][c]` is the intensity of channel
/// `channels()[c]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JumpModel {
    star: usize,
    outcome_count: usize,
    theta: Vec<Vec<f64>>,
}

impl JumpModel {
    /// `theta` rows list the intensities of the outcomes `0..outcome_count`
    /// with `star` skipped, in increasing order.
    pub fn new(star: usize, outcome_count: usize, theta: Vec<Vec<f64>>) -> Result<Self> {
        if outcome_count < 2 || star >= outcome_count {
            return Err(Error::InvalidModel(format!(
                "star outcome {star} invalid for {outcome_count} outcomes"
            )));
        }
        if theta.is_empty() {
            return Err(Error::InvalidModel("no pointer rows".into()));
        }
        for (alpha, row) in theta.iter().enumerate() {
            if row.len() != outcome_count - 1 {
                return Err(Error::InvalidModel(format!(
                    "theta row {alpha} has {} entries, expected {}",
                    row.len(),
                    outcome_count - 1
                )));
            }
            if let Some(c) = row.iter().position(|&t| !(t > 0.0) || !t.is_finite()) {
                return Err(Error::InvalidModel(format!(
                    "θ of channel {c} for pointer {alpha} must be positive, got {}",
                    row[c]
                )));
            }
        }
        rows_distinct_warn(&theta, "theta");
        Ok(Self {
            star,
            outcome_count,
            theta,
        })
    }

    pub fn star(&self) -> usize {
        self.star
    }

    pub fn outcome_count(&self) -> usize {
        self.outcome_count
    }

    pub fn pointer_count(&self) -> usize {
        self.theta.len()
    }

    pub fn channel_count(&self) -> usize {
        self.outcome_count - 1
    }

    /// Outcome index of each channel.
    pub fn channels(&self) -> Vec<usize> {
        (0..self.outcome_count).filter(|&i| i != self.star).collect()
    }

    pub fn theta(&self) -> &[Vec<f64>] {
        &self.theta
    }

    /// `σ(i*|α) = Σ_{i≠i*} θ(i|α)`.
    pub fn total_rate(&self, alpha: usize) -> f64 {
        self.theta[alpha].iter().sum()
    }

    /// `⟨θ(i)⟩` per channel.
    pub fn mean_theta(&self, q: &[f64]) -> Vec<f64> {
        let mut mean = vec![0.0; self.channel_count()];
        for (row, &w) in self.theta.iter().zip(q) {
            for (m, t) in mean.iter_mut().zip(row) {
                *m += t * w;
            }
        }
        mean
    }

    /// The discrete kernel `p(i|α) = δ θ(i|α)`, `p(i*|α) = 1 − δ σ(i*|α)`.
    pub fn kernel_at(&self, delta: f64) -> Result<MeasurementKernel> {
        let channels = self.channels();
        let rows = self
            .theta
            .iter()
            .map(|row| {
                let mut p = vec![0.0; self.outcome_count];
                for (c, &i) in channels.iter().enumerate() {
                    p[i] = delta * row[c];
                }
                p[self.star] = 1.0 - delta * row.iter().sum::<f64>();
                p
            })
            .collect();
        MeasurementKernel::from_rows(rows)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JumpEvent {
    pub time: f64,
    /// Outcome index (never `i*`).
    pub outcome: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct JumpPath {
    pub seed: u64,
    pub sampled_alpha: Option<usize>,
    pub times: Vec<f64>,
    pub q_path: Vec<Vec<f64>>,
    pub jump_events: Vec<JumpEvent>,
    /// `N_t(i)` per channel at each recorded time.
    pub n_path: Vec<Vec<u64>>,
    /// `Y_t(i) = N_t(i) − ∫_0^t ⟨θ(i)⟩ ds` per channel.
    pub y_path: Vec<Vec<f64>>,
}

impl JumpPath {
    pub fn final_q(&self) -> &[f64] {
        self.q_path.last().expect("path holds Q_0")
    }

    pub fn final_counts(&self) -> &[u64] {
        self.n_path.last().expect("path holds N_0")
    }

    /// `M_t(i*) = −Σ_{i≠i*} N_t(i)` at each recorded time.
    pub fn star_counts(&self) -> Vec<i64> {
        self.n_path
            .iter()
            .map(|n| -(n.iter().sum::<u64>() as i64))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JumpOptions {
    pub horizon: f64,
    pub dt: f64,
    pub seed: u64,
    pub record_stride: usize,
}

impl JumpOptions {
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
}

/// Number of sub-steps needed so that each carries at most
/// [`MAX_JUMP_MASS`] expected jumps.
pub fn jump_substeps(total_intensity: f64, dt: f64) -> usize {
    ((total_intensity * dt) / MAX_JUMP_MASS - 1e-9).ceil().max(1.0) as usize
}

/// Thinning with one uniform draw per (sub)step: channel `c` fires when `u`
/// lands in its slice of length `λ_c·h`, so at most one jump occurs.
pub fn select_jump(intensities: &[f64], h: f64, u: f64) -> Option<usize> {
    let mut cumulative = 0.0;
    for (c, &lambda) in intensities.iter().enumerate() {
        cumulative += lambda * h;
        if u < cumulative {
            return Some(c);
        }
    }
    None
}

/// Time-stepped thinning integrator of the Poissonian filter.
pub fn integrate_jump_thinning(
    model: &JumpModel,
    q0: &PointerDistribution,
    options: &JumpOptions,
) -> Result<JumpPath> {
    if !(options.dt > 0.0) || !(options.horizon > 0.0) {
        return Err(Error::InvalidModel("horizon and dt must be positive".into()));
    }
    if q0.len() != model.pointer_count() {
        return Err(Error::InvalidDistribution(format!(
            "{} weights for {} pointers",
            q0.len(),
            model.pointer_count()
        )));
    }
    let channels = model.channels();
    let mut rng = stream_rng(options.seed, stream::MAIN);
    let stride = options.record_stride.max(1);
    let steps = options.steps();
    let mut q = q0.weights().to_vec();
    let mut counts = vec![0u64; model.channel_count()];
    let mut compensator = vec![0.0; model.channel_count()];
    let mut path = JumpPath {
        seed: options.seed,
        sampled_alpha: None,
        times: vec![0.0],
        q_path: vec![q.clone()],
        jump_events: Vec::new(),
        n_path: vec![counts.clone()],
        y_path: vec![vec![0.0; model.channel_count()]],
    };
    for step in 0..steps {
        let t0 = step as f64 * options.dt;
        let lambda0 = model.mean_theta(&q);
        let substeps = jump_substeps(lambda0.iter().sum(), options.dt);
        let h = options.dt / substeps as f64;
        for sub in 0..substeps {
            let lambda = if sub == 0 { lambda0.clone() } else { model.mean_theta(&q) };
            let fired = select_jump(&lambda, h, rng.random::<f64>());
            let next: Vec<f64> = q
                .iter()
                .zip(model.theta())
                .map(|(&w, row)| {
                    let drive: f64 = row
                        .iter()
                        .zip(&lambda)
                        .enumerate()
                        .map(|(c, (&th, &l))| {
                            let dn = if fired == Some(c) { 1.0 } else { 0.0 };
                            (th / l - 1.0) * (dn - l * h)
                        })
                        .sum();
                    (w + w * drive).max(0.0)
                })
                .collect();
            let total: f64 = next.iter().sum();
            for (slot, v) in q.iter_mut().zip(next) {
                *slot = v / total;
            }
            for (acc, l) in compensator.iter_mut().zip(&lambda) {
                *acc += l * h;
            }
            if let Some(c) = fired {
                counts[c] += 1;
                path.jump_events.push(JumpEvent {
                    time: t0 + (sub + 1) as f64 * h,
                    outcome: channels[c],
                });
            }
        }
        if (step + 1) % stride == 0 || step + 1 == steps {
            path.times.push((step + 1) as f64 * options.dt);
            path.q_path.push(q.clone());
            path.n_path.push(counts.clone());
            path.y_path.push(
                counts
                    .iter()
                    .zip(&compensator)
                    .map(|(&n, &a)| n as f64 - a)
                    .collect(),
            );
        }
    }
    Ok(path)
}

/// `ln Z_t(α) = Σ_{i≠i*} [N_t(i) ln θ(i|α) − t(θ(i|α) − 1)]`.
pub fn log_exponential_martingale(model: &JumpModel, alpha: usize, counts: &[u64], t: f64) -> f64 {
    model.theta()[alpha]
        .iter()
        .zip(counts)
        .map(|(&th, &n)| n as f64 * th.ln() - t * (th - 1.0))
        .sum()
}

fn exact_posterior(model: &JumpModel, log_q0: &[f64], counts: &[u64], t: f64) -> Vec<f64> {
    let log_weights: Vec<f64> = log_q0
        .iter()
        .enumerate()
        .map(|(alpha, &lq)| lq + log_exponential_martingale(model, alpha, counts, t))
        .collect();
    normalize_log_weights(&log_weights).expect("some prior weight is positive")
}

/// Composite Simpson panels per inter-event segment for `∫⟨θ⟩ds`.
const SIMPSON_PANELS: usize = 32;

/// Event-driven construction: `α ~ q0`, independent Poisson streams of rate
/// `θ(i|α)`, and `Q_t = q0 Z_t(α)/Z_t` from the exponential martingale.
pub fn integrate_jump_exact(
    model: &JumpModel,
    q0: &PointerDistribution,
    horizon: f64,
    seed: u64,
) -> Result<JumpPath> {
    if !(horizon > 0.0) {
        return Err(Error::InvalidModel("horizon must be positive".into()));
    }
    if q0.len() != model.pointer_count() {
        return Err(Error::InvalidDistribution(format!(
            "{} weights for {} pointers",
            q0.len(),
            model.pointer_count()
        )));
    }
    let mut prior = stream_rng(seed, stream::PRIOR);
    let alpha = sample_categorical(&mut prior, q0.weights());
    let mut rng = stream_rng(seed, stream::MAIN);
    let channels = model.channels();
    let rates = &model.theta()[alpha];
    let total_rate: f64 = rates.iter().sum();
    let waiting = Exp::new(total_rate).map_err(|e| Error::InvalidModel(e.to_string()))?;
    let log_q0: Vec<f64> = q0
        .weights()
        .iter()
        .map(|&w| if w > 0.0 { w.ln() } else { f64::NEG_INFINITY })
        .collect();

    let width = model.channel_count();
    let mut counts = vec![0u64; width];
    let mut compensator = vec![0.0; width];
    let mut path = JumpPath {
        seed,
        sampled_alpha: Some(alpha),
        times: vec![0.0],
        q_path: vec![q0.weights().to_vec()],
        jump_events: Vec::new(),
        n_path: vec![counts.clone()],
        y_path: vec![vec![0.0; width]],
    };
    let mut t = 0.0;
    loop {
        let next = t + waiting.sample(&mut rng);
        let end = next.min(horizon);
        // ∫_t^end ⟨θ(i)⟩_s ds with the counts frozen on the segment.
        let h = (end - t) / SIMPSON_PANELS as f64;
        if h > 0.0 {
            for k in 0..=SIMPSON_PANELS {
                let s = t + k as f64 * h;
                let weight = if k == 0 || k == SIMPSON_PANELS {
                    1.0
                } else if k % 2 == 1 {
                    4.0
                } else {
                    2.0
                };
                let q = exact_posterior(model, &log_q0, &counts, s);
                for (acc, m) in compensator.iter_mut().zip(model.mean_theta(&q)) {
                    *acc += weight * h / 3.0 * m;
                }
            }
        }
        t = end;
        if next >= horizon {
            break;
        }
        let c = sample_categorical(&mut rng, rates);
        counts[c] += 1;
        path.jump_events.push(JumpEvent {
            time: t,
            outcome: channels[c],
        });
        path.times.push(t);
        path.q_path.push(exact_posterior(model, &log_q0, &counts, t));
        path.n_path.push(counts.clone());
        path.y_path.push(
            counts
                .iter()
                .zip(&compensator)
                .map(|(&n, &a)| n as f64 - a)
                .collect(),
        );
    }
    path.times.push(horizon);
    path.q_path.push(exact_posterior(model, &log_q0, &counts, horizon));
    path.n_path.push(counts.clone());
    path.y_path.push(
        counts
            .iter()
            .zip(&compensator)
            .map(|(&n, &a)| n as f64 - a)
            .collect(),
    );
    Ok(path)
}
