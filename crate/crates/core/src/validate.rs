//! Statistical checks of the collapse theorems on simulated ensembles.
//!
//! Every check returns a [`TestReport`]. Significance levels are `1e-3` for
//! goodness-of-fit tests and 4σ for moment bands.

use std::collections::HashMap;
use std::fmt::Write as _;

use serde::Serialize;

use crate::discrete::{run_ensemble, simulate_trajectory, RateFit, TrajectoryConfig};
use crate::ensemble::map_indexed;
use crate::error::Result;
use crate::kernel::{
    bayes_update, doob_decompose, posterior_closed_form, relative_entropy, sequence_probability,
    MeasurementKernel, OutcomeRecord, PointerDistribution,
};
use crate::quantum::{
    build_propagator, check_qnd, induced_kernel, measurement_update, outcome_probabilities,
    simulate_quantum_chain, DensityMatrix, QuantumApparatus, QND_TOLERANCE,
};
use crate::rng::trajectory_seed;
use crate::scaling::{
    integrate_diffusive, integrate_jump_exact, integrate_jump_thinning, noise_covariance,
    DiffusiveModel, DiffusiveOptions, JumpModel, JumpOptions, JumpPath, NoiseGenerator,
};
use crate::stats::{chi_square_gof, cluster_values, ks_two_sample, median, PathMoments};

pub const SIGNIFICANCE: f64 = 1e-3;
pub const SIGMA_BAND: f64 = 4.0;
pub const RATE_TOLERANCE: f64 = 0.1;
pub const MAX_EXCLUDED_FRACTION: f64 = 0.05;
/// Log-odds resolution at which terminal jump-model posteriors are compared.
pub const LOG_ODDS_RESOLUTION: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum TestStatus {
    Pass,
    Fail,
    Inconclusive,
}

/// How the statistic is compared with the threshold.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Criterion {
    /// Pass iff `statistic ≤ threshold`.
    AtMost,
    /// Pass iff `statistic ≥ threshold` (p-values).
    AtLeast,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TestReport {
    pub name: String,
    pub statistic: f64,
    pub threshold: f64,
    pub criterion: Criterion,
    pub passed: bool,
    pub status: TestStatus,
    pub sample_size: u64,
    pub notes: String,
}

impl TestReport {
    pub fn new(
        name: impl Into<String>,
        statistic: f64,
        threshold: f64,
        criterion: Criterion,
        sample_size: u64,
    ) -> Self {
        let passed = match criterion {
            Criterion::AtMost => statistic <= threshold,
            Criterion::AtLeast => statistic >= threshold,
        };
        Self {
            name: name.into(),
            statistic,
            threshold,
            criterion,
            passed,
            status: if passed { TestStatus::Pass } else { TestStatus::Fail },
            sample_size,
            notes: String::new(),
        }
    }

    pub fn with_notes(mut self, notes: impl Into<String>) -> Self {
        self.notes = notes.into();
        self
    }

    fn inconclusive(mut self, why: &str) -> Self {
        self.passed = false;
        self.status = TestStatus::Inconclusive;
        if !self.notes.is_empty() {
            self.notes.push_str("; ");
        }
        self.notes.push_str(why);
        self
    }
}

/// Checks `|mean Q_n(α) − Q_0(α)| < 4·std/√N` at each grid step and pointer.
/// The statistic is the largest standardized deviation.
pub fn test_martingale(moments: &PathMoments, q0: &[f64], grid: &[usize]) -> TestReport {
    let n = moments.count;
    let mut worst: f64 = 0.0;
    let mut worst_at = (0, 0);
    for &step in grid.iter().filter(|&&s| s < moments.steps()) {
        for (alpha, &q) in q0.iter().enumerate() {
            let deviation = (moments.mean(step, alpha) - q).abs();
            let se = moments.std(step, alpha) / (n as f64).sqrt();
            let z = if se > 0.0 {
                deviation / se
            } else if deviation <= 1e-15 {
                0.0
            } else {
                f64::INFINITY
            };
            if z > worst {
                worst = z;
                worst_at = (step, alpha);
            }
        }
    }
    let report = TestReport::new("martingale", worst, SIGMA_BAND, Criterion::AtMost, n).with_notes(
        format!("largest deviation at step {} pointer {}", worst_at.0, worst_at.1),
    );
    if n < 100 && worst > 0.0 {
        return report.inconclusive("fewer than 100 paths");
    }
    report
}

/// Chi-square goodness of fit of collapse targets against `q0`. Paths that
/// did not collapse are excluded.
pub fn test_collapse_law(targets: &[Option<usize>], q0: &[f64]) -> TestReport {
    let mut histogram = vec![0u64; q0.len()];
    let mut excluded = 0u64;
    for target in targets {
        match target {
            Some(alpha) => histogram[*alpha] += 1,
            None => excluded += 1,
        }
    }
    let used: u64 = histogram.iter().sum();
    let result = chi_square_gof(&histogram, q0);
    let report = TestReport::new("collapse_law", result.p_value, SIGNIFICANCE, Criterion::AtLeast, used)
        .with_notes(format!(
            "histogram {histogram:?}, chi2 {:.3} on {} dof, {excluded} uncollapsed excluded",
            result.statistic, result.degrees_of_freedom
        ));
    if excluded > 0 {
        log::warn!("{excluded} uncollapsed paths excluded from the collapse law test");
    }
    if targets.is_empty() || excluded as f64 > MAX_EXCLUDED_FRACTION * targets.len() as f64 {
        return report.inconclusive("too many uncollapsed paths");
    }
    report
}

/// Slopes of the fits for wrong pointer `pointer` on paths collapsed to
/// `target`.
pub fn rate_samples_for(fits: &[RateFit], target: usize, pointer: usize) -> Vec<f64> {
    fits.iter()
        .filter(|f| f.target == target && f.pointer == pointer)
        .map(|f| f.slope)
        .collect()
}

/// Ensemble-median slope within 10% of `reference` (within `1e-9` when the
/// reference is zero).
pub fn test_rate(name: &str, slopes: &[f64], reference: f64) -> TestReport {
    let m = median(slopes);
    let (statistic, threshold) = if reference == 0.0 {
        (m.abs(), 1e-9)
    } else {
        ((m - reference).abs() / reference.abs(), RATE_TOLERANCE)
    };
    let report = TestReport::new(
        name,
        statistic,
        threshold,
        Criterion::AtMost,
        slopes.len() as u64,
    )
    .with_notes(format!("median slope {m:.6}, reference {reference:.6}"));
    if slopes.is_empty() {
        return report.inconclusive("no rate samples");
    }
    report
}

/// Checks that every reordering of every sequence up to `max_len` has the
/// same probability, comparing the sequentially accumulated predictive
/// product against the count-based formula.
pub fn test_exchangeability(
    kernel: &MeasurementKernel,
    q0: &PointerDistribution,
    max_len: usize,
) -> Result<TestReport> {
    let width = kernel.outcome_count();
    let mut by_counts: HashMap<Vec<u64>, f64> = HashMap::new();
    let mut worst: f64 = 0.0;
    let mut checked = 0u64;
    for len in 1..=max_len {
        let total = width.pow(len as u32);
        for code in 0..total {
            let mut sequence = Vec::with_capacity(len);
            let mut rest = code;
            for _ in 0..len {
                sequence.push(rest % width);
                rest /= width;
            }
            let mut q = q0.clone();
            let mut sequential = 1.0;
            let mut possible = true;
            for &i in &sequence {
                let pi: f64 = (0..kernel.pointer_count()).map(|a| kernel.prob(a, i) * q[a]).sum();
                sequential *= pi;
                if pi == 0.0 {
                    possible = false;
                    break;
                }
                q = bayes_update(kernel, &q, i)?;
            }
            if !possible {
                sequential = 0.0;
            }
            let closed = sequence_probability(kernel, q0, &sequence);
            worst = worst.max((sequential - closed).abs());
            let counts = OutcomeRecord::from_sequence(width, &sequence).counts().to_vec();
            let first = *by_counts.entry(counts).or_insert(sequential);
            worst = worst.max((sequential - first).abs());
            checked += 1;
        }
    }
    Ok(
        TestReport::new("exchangeability", worst, 1e-14, Criterion::AtMost, checked)
            .with_notes(format!("all sequences up to length {max_len}")),
    )
}

/// Agreement between the recursive posterior and the closed form along
/// simulated trajectories.
pub fn test_closed_form(
    kernel: &MeasurementKernel,
    q0: &PointerDistribution,
    cases: usize,
    max_steps: usize,
    seed: u64,
) -> Result<TestReport> {
    let mut worst: f64 = 0.0;
    for case in 0..cases {
        let steps = 1 + (trajectory_seed(seed ^ 0x5eed, case as u64) % max_steps as u64) as usize;
        let config = TrajectoryConfig::new(steps, trajectory_seed(seed, case as u64));
        let trajectory = simulate_trajectory(kernel, q0, &config)?;
        let closed = posterior_closed_form(kernel, q0, trajectory.outcomes.counts())?;
        for (a, b) in trajectory.final_q().weights().iter().zip(closed.weights()) {
            worst = worst.max((a - b).abs());
        }
    }
    Ok(TestReport::new("closed_form_posterior", worst, 1e-12, Criterion::AtMost, cases as u64)
        .with_notes(format!("trajectories up to {max_steps} steps")))
}

/// `N_n = X_n + A_n` along simulated trajectories.
pub fn test_doob(
    kernel: &MeasurementKernel,
    q0: &PointerDistribution,
    cases: usize,
    steps: usize,
    seed: u64,
) -> Result<TestReport> {
    let mut worst: f64 = 0.0;
    for case in 0..cases {
        let config = TrajectoryConfig::new(steps, trajectory_seed(seed, case as u64));
        let trajectory = simulate_trajectory(kernel, q0, &config)?;
        for d in doob_decompose(kernel, q0, trajectory.outcomes.sequence())? {
            for ((&n, x), a) in d.counts.iter().zip(&d.martingale_part).zip(&d.predictable_part) {
                worst = worst.max((n as f64 - x - a).abs());
            }
        }
    }
    Ok(TestReport::new("doob_identity", worst, 1e-9, Criterion::AtMost, cases as u64))
}

/// Two-sample KS test at significance `1e-3`.
pub fn test_equivalence(name: &str, a: &[f64], b: &[f64]) -> TestReport {
    let result = ks_two_sample(a, b);
    TestReport::new(name, result.p_value, SIGNIFICANCE, Criterion::AtLeast, (a.len().min(b.len())) as u64)
        .with_notes(format!("KS distance {:.5}", result.statistic))
}

/// Two-sample KS after merging values within `resolution` of each other,
/// for laws concentrated on atoms that one sample reproduces only up to
/// discretization error.
pub fn test_equivalence_resolved(name: &str, a: &[f64], b: &[f64], resolution: f64) -> TestReport {
    let (a, b) = cluster_values(a, b, resolution);
    let result = ks_two_sample(&a, &b);
    TestReport::new(name, result.p_value, SIGNIFICANCE, Criterion::AtLeast, (a.len().min(b.len())) as u64)
        .with_notes(format!("KS distance {:.5} at resolution {resolution}", result.statistic))
}

/// `ln Q(0) - ln Σ_{α>0} Q(α)`.
pub fn log_odds(q: &[f64]) -> f64 {
    let rest: f64 = q[1..].iter().sum();
    (q[0].max(f64::MIN_POSITIVE)).ln() - rest.max(f64::MIN_POSITIVE).ln()
}

/// Empirical second moments of noise increments (row-major, `width` per
/// sample) against `G·dt`, each entry standardized by its sampling error
/// `√((G_ii G_jj + G_ij²)/n)·dt`.
pub fn test_increment_covariance(increments: &[f64], p0: &[f64], dt: f64) -> TestReport {
    let width = p0.len();
    let n = increments.len() / width;
    let g = noise_covariance(p0);
    let mut sums = vec![vec![0.0; width]; width];
    for sample in increments.chunks_exact(width) {
        for i in 0..width {
            for j in 0..width {
                sums[i][j] += sample[i] * sample[j];
            }
        }
    }
    let mut worst: f64 = 0.0;
    for i in 0..width {
        for j in 0..width {
            let empirical = sums[i][j] / n as f64;
            let se = ((g[i][i] * g[j][j] + g[i][j] * g[i][j]) / n as f64).sqrt() * dt;
            worst = worst.max((empirical - g[i][j] * dt).abs() / se);
        }
    }
    TestReport::new("increment_covariance", worst, SIGMA_BAND, Criterion::AtMost, n as u64)
}

/// Draws `count` increments of step `dt` from the noise generator.
pub fn sample_increments(p0: &[f64], dt: f64, count: usize, seed: u64) -> Vec<f64> {
    let generator = NoiseGenerator::new(p0);
    let mut rng = crate::rng::stream_rng(seed, crate::rng::stream::MAIN);
    let mut out = vec![0.0; count * p0.len()];
    for chunk in out.chunks_exact_mut(p0.len()) {
        generator.sample_into(dt, &mut rng, chunk);
    }
    out
}

/// Jump counts in recorded windows against the compensator increments,
/// pooled in bins of the total intensity `Σ⟨θ⟩` at the window start. The
/// statistic is the largest Poisson-standardized bin deviation among bins
/// with at least 10 expected jumps.
pub fn test_jump_compensator(paths: &[JumpPath], model: &JumpModel, bins: usize) -> TestReport {
    let rates: Vec<f64> = (0..model.pointer_count()).map(|a| model.total_rate(a)).collect();
    let lo = rates.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = rates.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let bins = bins.max(1);
    let mut observed = vec![0.0; bins];
    let mut expected = vec![0.0; bins];
    let mut windows = 0u64;
    for path in paths {
        for k in 1..path.times.len() {
            let intensity: f64 = model.mean_theta(&path.q_path[k - 1]).iter().sum();
            let bin = if hi > lo {
                (((intensity - lo) / (hi - lo)) * bins as f64).floor().clamp(0.0, (bins - 1) as f64) as usize
            } else {
                0
            };
            let dn: f64 = path.n_path[k]
                .iter()
                .zip(&path.n_path[k - 1])
                .map(|(a, b)| (a - b) as f64)
                .sum();
            let dy: f64 = path.y_path[k]
                .iter()
                .zip(&path.y_path[k - 1])
                .map(|(a, b)| a - b)
                .sum();
            observed[bin] += dn;
            expected[bin] += dn - dy;
            windows += 1;
        }
    }
    let mut worst: f64 = 0.0;
    let mut used = 0;
    for (o, e) in observed.iter().zip(&expected) {
        if *e >= 10.0 {
            worst = worst.max((o - e).abs() / e.sqrt());
            used += 1;
        }
    }
    let report = TestReport::new("jump_compensator", worst, SIGMA_BAND, Criterion::AtMost, windows)
        .with_notes(format!("{used} intensity bins with enough mass"));
    if used == 0 {
        return report.inconclusive("no bin reached 10 expected jumps");
    }
    report
}

/// Settings shared by the suites.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteConfig {
    pub trajectories: usize,
    pub steps: usize,
    pub horizon: f64,
    pub dt: f64,
    pub seed: u64,
    pub grid: Vec<usize>,
    pub exchangeability_length: usize,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        Self {
            trajectories: 20_000,
            steps: 300,
            horizon: 10.0,
            dt: 1e-3,
            seed: 1,
            grid: vec![10, 100, 300],
            exchangeability_length: 8,
        }
    }
}

/// Exact identities plus the ensemble checks on a discrete chain.
pub fn discrete_suite(
    kernel: &MeasurementKernel,
    q0: &PointerDistribution,
    config: &SuiteConfig,
) -> Result<Vec<TestReport>> {
    let mut reports = vec![
        test_closed_form(kernel, q0, 100, config.steps.max(1), config.seed)?,
        test_doob(kernel, q0, 20, config.steps.max(1), config.seed)?,
        test_exchangeability(kernel, q0, config.exchangeability_length)?,
    ];
    let trajectory = TrajectoryConfig::new(config.steps, config.seed);
    let summary = run_ensemble(kernel, q0, &trajectory, config.trajectories)?;
    reports.push(test_martingale(&summary.moments, q0.weights(), &config.grid));
    reports.push(test_collapse_law(&summary.targets, q0.weights()));
    for target in 0..kernel.pointer_count() {
        for pointer in 0..kernel.pointer_count() {
            if target == pointer || q0[target] == 0.0 || q0[pointer] == 0.0 {
                continue;
            }
            let slopes = rate_samples_for(&summary.rate_samples, target, pointer);
            reports.push(test_rate(
                &format!("rate[{target}->{pointer}]"),
                &slopes,
                relative_entropy(kernel, target, pointer),
            ));
        }
    }
    Ok(reports)
}

/// Steps between recorded points so that a path keeps about 100 samples.
fn coarse_stride(steps: usize) -> usize {
    (steps / 100).max(1)
}

/// Noise covariance, martingale and collapse-law checks for the diffusive
/// filter.
pub fn diffusive_suite(
    model: &DiffusiveModel,
    q0: &PointerDistribution,
    config: &SuiteConfig,
) -> Result<Vec<TestReport>> {
    let mut reports = vec![test_increment_covariance(
        &sample_increments(model.p0(), config.dt, 1_000_000, config.seed),
        model.p0(),
        config.dt,
    )];
    let base = DiffusiveOptions::new(config.horizon, config.dt, config.seed);
    let stride = coarse_stride(base.steps());
    let paths = map_indexed(config.trajectories, |index| {
        let mut options = base.clone().with_stride(stride);
        options.seed = trajectory_seed(config.seed, index as u64);
        integrate_diffusive(model, q0, &options)
    });
    let paths = paths.into_iter().collect::<Result<Vec<_>>>()?;
    let q_paths: Vec<Vec<Vec<f64>>> = paths.iter().map(|p| p.q_path.clone()).collect();
    let moments = PathMoments::from_paths(&q_paths);
    let grid: Vec<usize> = vec![1, moments.steps() / 2, moments.steps() - 1];
    reports.push(test_martingale(&moments, q0.weights(), &grid));
    let targets: Vec<Option<usize>> = paths
        .iter()
        .map(|p| {
            let q = p.final_q();
            let (alpha, w) = q
                .iter()
                .copied()
                .enumerate()
                .fold((0, f64::NEG_INFINITY), |best, (a, w)| if w > best.1 { (a, w) } else { best });
            (w >= 0.5).then_some(alpha)
        })
        .collect();
    reports.push(test_collapse_law(&targets, q0.weights()).with_notes("target = final most probable pointer"));
    Ok(reports)
}

/// Thinning against the exact construction, compensator and martingale
/// checks for the Poissonian filter.
pub fn jump_suite(
    model: &JumpModel,
    q0: &PointerDistribution,
    config: &SuiteConfig,
) -> Result<Vec<TestReport>> {
    let base = JumpOptions::new(config.horizon, config.dt, config.seed);
    let stride = coarse_stride(base.steps());
    let thinned = map_indexed(config.trajectories, |index| {
        let mut options = base.clone().with_stride(stride);
        options.seed = trajectory_seed(config.seed, index as u64);
        integrate_jump_thinning(model, q0, &options)
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    let exact = map_indexed(config.trajectories, |index| {
        integrate_jump_exact(model, q0, config.horizon, trajectory_seed(config.seed ^ 0xe4ac7, index as u64))
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    let final_q = |paths: &[JumpPath]| paths.iter().map(|p| log_odds(p.final_q())).collect::<Vec<_>>();
    let final_n = |paths: &[JumpPath]| {
        paths
            .iter()
            .map(|p| p.final_counts().iter().sum::<u64>() as f64)
            .collect::<Vec<_>>()
    };
    let mut reports = vec![
        test_equivalence_resolved(
            "thinning_vs_exact_q",
            &final_q(&thinned),
            &final_q(&exact),
            LOG_ODDS_RESOLUTION,
        ),
        test_equivalence("thinning_vs_exact_counts", &final_n(&thinned), &final_n(&exact)),
        test_jump_compensator(&thinned, model, 8),
    ];
    let q_paths: Vec<Vec<Vec<f64>>> = thinned.iter().map(|p| p.q_path.clone()).collect();
    let moments = PathMoments::from_paths(&q_paths);
    let grid: Vec<usize> = vec![1, moments.steps() / 2, moments.steps() - 1];
    reports.push(test_martingale(&moments, q0.weights(), &grid));
    Ok(reports)
}

/// Propagator identities, the classical reduction of the quantum chain, and
/// the discrete suite on the induced kernel.
pub fn quantum_suite(
    apparatus: &QuantumApparatus,
    rho0: &DensityMatrix,
    config: &SuiteConfig,
) -> Result<Vec<TestReport>> {
    let props = build_propagator(apparatus)?;
    let qnd = check_qnd(&props, QND_TOLERANCE);
    let mut reports = vec![
        TestReport::new("kraus_completeness", props.completeness_error(), 1e-10, Criterion::AtMost, 1),
        TestReport::new("qnd_structure", qnd.off_block_norm, QND_TOLERANCE, Criterion::AtMost, 1),
    ];
    if !qnd.passed {
        return Ok(reports);
    }
    let kernel = induced_kernel(&props)?;
    let q0 = PointerDistribution::from_unnormalized(rho0.diagonal())?;
    let steps = 1000;
    let chain = simulate_quantum_chain(&props, rho0, steps, config.seed, steps)?;
    let mut q = q0.clone();
    let mut worst: f64 = 0.0;
    let mut law: f64 = 0.0;
    let mut rho = rho0.clone();
    for (n, &outcome) in chain.outcomes.iter().enumerate() {
        law = law.max((outcome_probabilities(&props, &rho).iter().sum::<f64>() - 1.0).abs());
        rho = measurement_update(&props, &rho, outcome)?.0;
        q = bayes_update(&kernel, &q, outcome)?;
        for (a, b) in chain.q_path[n + 1].iter().zip(q.weights()) {
            worst = worst.max((a - b).abs());
        }
    }
    reports.push(TestReport::new("classical_reduction", worst, 1e-11, Criterion::AtMost, steps as u64));
    reports.push(TestReport::new("outcome_law", law, 1e-10, Criterion::AtMost, steps as u64));
    reports.extend(discrete_suite(&kernel, &q0, config)?);
    Ok(reports)
}

/// Fixed-width text table of reports.
pub fn render_table(reports: &[TestReport]) -> String {
    let width = reports.iter().map(|r| r.name.len()).max().unwrap_or(4).max(4);
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:<width$}  {:>12}  {:>10}  {:>12}  {:>8}  notes",
        "test", "statistic", "threshold", "status", "samples"
    );
    for r in reports {
        let status = match r.status {
            TestStatus::Pass => "pass",
            TestStatus::Fail => "FAIL",
            TestStatus::Inconclusive => "inconclusive",
        };
        let _ = writeln!(
            out,
            "{:<width$}  {:>12.5e}  {:>10.3e}  {:>12}  {:>8}  {}",
            r.name, r.statistic, r.threshold, status, r.sample_size, r.notes
        );
    }
    out
}

pub fn all_passed(reports: &[TestReport]) -> bool {
    reports.iter().all(|r| r.status == TestStatus::Pass)
}
