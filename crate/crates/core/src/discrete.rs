//! Simulation of the discrete measurement chain, collapse detection, decay
//! rate fits, ensembles and kernel calibration.

use serde::{Deserialize, Serialize};

use crate::ensemble;
use crate::error::{Error, Result};
use crate::kernel::{bayes_update, predictive, MeasurementKernel, OutcomeRecord, PointerDistribution};
use crate::rng::{sample_categorical, stream, stream_rng, trajectory_seed};
use crate::stats::{fit_line, PathMoments};

pub const DEFAULT_COLLAPSE_THRESHOLD: f64 = 1.0 - 1e-6;
/// Weights at or below this are excluded from rate fits.
pub const LOG_FLOOR: f64 = 1e-300;

/// How outcomes are drawn.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum SamplingMode {
    /// `i_n ~ π_{n−1}`, the law `P` seen through the filtration.
    #[default]
    Predictive,
    /// Draw `α ~ q0`, then i.i.d. `i_n ~ p(·|α)`.
    Conditioned,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryConfig {
    pub steps: usize,
    pub seed: u64,
    pub sampling_mode: SamplingMode,
    pub collapse_threshold: f64,
}

impl TrajectoryConfig {
    pub fn new(steps: usize, seed: u64) -> Self {
        Self {
            steps,
            seed,
            sampling_mode: SamplingMode::Predictive,
            collapse_threshold: DEFAULT_COLLAPSE_THRESHOLD,
        }
    }

    pub fn with_mode(mut self, mode: SamplingMode) -> Self {
        self.sampling_mode = mode;
        self
    }

    pub fn with_threshold(mut self, threshold: f64) -> Self {
        self.collapse_threshold = threshold;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.steps == 0 {
            return Err(Error::InvalidModel("steps must be at least 1".into()));
        }
        if !(self.collapse_threshold > 0.5 && self.collapse_threshold < 1.0) {
            return Err(Error::InvalidModel(format!(
                "collapse threshold {} outside (0.5, 1)",
                self.collapse_threshold
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Collapse {
    pub step: usize,
    pub target: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteTrajectory {
    pub seed: u64,
    pub outcomes: OutcomeRecord,
    /// `Q_0 … Q_n`.
    pub q_path: Vec<PointerDistribution>,
    pub sampled_alpha: Option<usize>,
    pub collapse: Option<Collapse>,
    pub collapse_threshold: f64,
}

impl DiscreteTrajectory {
    pub fn final_q(&self) -> &PointerDistribution {
        self.q_path.last().expect("path holds Q_0")
    }
}

pub fn simulate_trajectory(
    kernel: &MeasurementKernel,
    q0: &PointerDistribution,
    config: &TrajectoryConfig,
) -> Result<DiscreteTrajectory> {
    config.validate()?;
    if q0.len() != kernel.pointer_count() {
        return Err(Error::InvalidDistribution(format!(
            "{} weights for {} pointers",
            q0.len(),
            kernel.pointer_count()
        )));
    }
    let mut rng = stream_rng(config.seed, stream::MAIN);
    let sampled_alpha = match config.sampling_mode {
        SamplingMode::Predictive => None,
        SamplingMode::Conditioned => {
            let mut prior_rng = stream_rng(config.seed, stream::PRIOR);
            Some(sample_categorical(&mut prior_rng, q0.weights()))
        }
    };
    let mut outcomes = OutcomeRecord::new(kernel.outcome_count());
    let mut q_path = Vec::with_capacity(config.steps + 1);
    q_path.push(q0.clone());
    let mut q = q0.clone();
    for _ in 0..config.steps {
        let outcome = match sampled_alpha {
            Some(alpha) => sample_categorical(&mut rng, kernel.row(alpha)),
            None => sample_categorical(&mut rng, &predictive(kernel, &q)),
        };
        q = bayes_update(kernel, &q, outcome)?;
        outcomes.push(outcome);
        q_path.push(q.clone());
    }
    let mut trajectory = DiscreteTrajectory {
        seed: config.seed,
        outcomes,
        q_path,
        sampled_alpha,
        collapse: None,
        collapse_threshold: config.collapse_threshold,
    };
    trajectory.collapse = detect_collapse(&trajectory);
    Ok(trajectory)
}

/// First step at which `max_α Q_n(α)` reaches the trajectory's threshold.
pub fn detect_collapse(trajectory: &DiscreteTrajectory) -> Option<Collapse> {
    detect_collapse_in(&trajectory.q_path, trajectory.collapse_threshold)
}

pub fn detect_collapse_in(q_path: &[PointerDistribution], threshold: f64) -> Option<Collapse> {
    q_path.iter().enumerate().find_map(|(step, q)| {
        let (target, weight) = q.argmax();
        (weight >= threshold).then_some(Collapse { step, target })
    })
}

/// Least-squares decay rate of one non-target weight.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RateFit {
    pub target: usize,
    pub pointer: usize,
    pub slope: f64,
    pub slope_stderr: f64,
    pub points: usize,
    /// Confidence interval too wide for the slope to be meaningful.
    pub wide: bool,
}

/// Fits `−ln Q ≈ c + slope·t` on the points with `Q > LOG_FLOOR`.
/// The fit is marked wide when fewer than 3 points remain or the 95%
/// interval half-width exceeds 10% of the slope.
pub fn fit_log_decay(times: &[f64], weights: &[f64]) -> Option<(f64, f64, usize, bool)> {
    let (x, y): (Vec<f64>, Vec<f64>) = times
        .iter()
        .zip(weights)
        .filter(|(_, &w)| w > LOG_FLOOR)
        .map(|(&t, &w)| (t, -w.ln()))
        .unzip();
    let fit = fit_line(&x, &y)?;
    let half_width = 1.96 * fit.slope_stderr;
    let wide = fit.points < 3 || !(half_width <= 0.1 * fit.slope.abs());
    Some((fit.slope, fit.slope_stderr, fit.points, wide))
}

/// Decay slopes of every non-target pointer over the last half of the
/// post-collapse steps.
pub fn fit_decay_rate(trajectory: &DiscreteTrajectory) -> Result<Vec<RateFit>> {
    let collapse = trajectory
        .collapse
        .ok_or_else(|| Error::NotApplicable("trajectory did not collapse".into()))?;
    let last = trajectory.q_path.len() - 1;
    let start = collapse.step + (last - collapse.step) / 2;
    let window = &trajectory.q_path[start..=last];
    let times: Vec<f64> = (start..=last).map(|n| n as f64).collect();
    let mut fits = Vec::new();
    for pointer in 0..trajectory.final_q().len() {
        if pointer == collapse.target {
            continue;
        }
        let weights: Vec<f64> = window.iter().map(|q| q[pointer]).collect();
        if let Some((slope, slope_stderr, points, wide)) = fit_log_decay(&times, &weights) {
            fits.push(RateFit {
                target: collapse.target,
                pointer,
                slope,
                slope_stderr,
                points,
                wide,
            });
        }
    }
    Ok(fits)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnsembleSummary {
    pub trajectory_count: u64,
    /// Counts of the final most-probable pointer; sums to `trajectory_count`.
    pub target_histogram: Vec<u64>,
    pub collapsed_count: u64,
    /// Collapse target per trajectory, in index order.
    pub targets: Vec<Option<usize>>,
    pub moments: PathMoments,
    pub rate_samples: Vec<RateFit>,
}

impl EnsembleSummary {
    pub fn empty(steps: usize, pointers: usize) -> Self {
        Self {
            trajectory_count: 0,
            target_histogram: vec![0; pointers],
            collapsed_count: 0,
            targets: Vec::new(),
            moments: PathMoments::new(steps + 1, pointers),
            rate_samples: Vec::new(),
        }
    }

    pub fn add(&mut self, trajectory: &DiscreteTrajectory) {
        self.trajectory_count += 1;
        self.target_histogram[trajectory.final_q().argmax().0] += 1;
        self.targets.push(trajectory.collapse.map(|c| c.target));
        if trajectory.collapse.is_some() {
            self.collapsed_count += 1;
            if let Ok(fits) = fit_decay_rate(trajectory) {
                self.rate_samples.extend(fits);
            }
        }
        let path: Vec<&[f64]> = trajectory.q_path.iter().map(|q| q.weights()).collect();
        self.moments.add_path(&path);
    }

    pub fn merge(&mut self, other: EnsembleSummary) {
        self.trajectory_count += other.trajectory_count;
        for (a, b) in self.target_histogram.iter_mut().zip(&other.target_histogram) {
            *a += b;
        }
        self.collapsed_count += other.collapsed_count;
        self.targets.extend(other.targets);
        self.moments.merge(&other.moments);
        self.rate_samples.extend(other.rate_samples);
    }

    pub fn mean_q_path(&self) -> Vec<Vec<f64>> {
        self.moments.mean_path()
    }
}

/// Runs `count` independent trajectories whose seeds derive from
/// `config.seed` and their index.
pub fn run_ensemble(
    kernel: &MeasurementKernel,
    q0: &PointerDistribution,
    config: &TrajectoryConfig,
    count: usize,
) -> Result<EnsembleSummary> {
    config.validate()?;
    if count == 0 {
        return Err(Error::InvalidModel("ensemble needs at least one trajectory".into()));
    }
    let pointers = kernel.pointer_count();
    let (summary, failure) = ensemble::fold_indexed(
        count,
        || (EnsembleSummary::empty(config.steps, pointers), None::<Error>),
        |(acc, err), index| {
            if err.is_some() {
                return;
            }
            let mut own = config.clone();
            own.seed = trajectory_seed(config.seed, index as u64);
            match simulate_trajectory(kernel, q0, &own) {
                Ok(t) => acc.add(&t),
                Err(e) => *err = Some(e),
            }
        },
        |(acc, err), (chunk, chunk_err)| {
            if err.is_none() {
                *err = chunk_err;
            }
            acc.merge(chunk);
        },
    );
    match failure {
        Some(e) => Err(e),
        None => Ok(summary),
    }
}

/// Outcome counts of one peaked run whose pointer is unknown.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FrequencyRun {
    pub counts: Vec<u64>,
}

impl FrequencyRun {
    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn frequencies(&self) -> Vec<f64> {
        let n = self.total() as f64;
        self.counts.iter().map(|&c| c as f64 / n).collect()
    }
}

fn total_variation(a: &[f64], b: &[f64]) -> f64 {
    0.5 * a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum::<f64>()
}

/// Cluster assignment produced by [`calibrate_kernel`].
#[derive(Debug, Clone, PartialEq)]
pub struct Calibration {
    pub kernel: MeasurementKernel,
    /// Cluster index per input run.
    pub assignment: Vec<usize>,
    pub distance_threshold: f64,
}

/// Recovers kernel rows from peaked runs by single-linkage clustering of
/// their frequency vectors under total-variation distance with threshold
/// `5·√(1/(4 n_min))`. A cluster whose diameter exceeds twice the threshold
/// indicates chained, overlapping populations and is rejected.
pub fn calibrate_kernel(runs: &[FrequencyRun]) -> Result<Calibration> {
    let first = runs
        .first()
        .ok_or_else(|| Error::InvalidModel("no calibration runs".into()))?;
    let width = first.counts.len();
    if width == 0 {
        return Err(Error::InvalidModel("runs have no outcomes".into()));
    }
    for (k, run) in runs.iter().enumerate() {
        if run.counts.len() != width {
            return Err(Error::InvalidModel(format!(
                "run {k} has {} outcomes, expected {width}",
                run.counts.len()
            )));
        }
        if run.total() == 0 {
            return Err(Error::InvalidModel(format!("run {k} is empty")));
        }
    }
    let n_min = runs.iter().map(FrequencyRun::total).min().unwrap_or(1) as f64;
    let threshold = 5.0 * (1.0 / (4.0 * n_min)).sqrt();
    let freqs: Vec<Vec<f64>> = runs.iter().map(FrequencyRun::frequencies).collect();

    // Union-find single linkage.
    let mut parent: Vec<usize> = (0..runs.len()).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    for a in 0..runs.len() {
        for b in (a + 1)..runs.len() {
            if total_variation(&freqs[a], &freqs[b]) <= threshold {
                let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
                if ra != rb {
                    parent[ra.max(rb)] = ra.min(rb);
                }
            }
        }
    }
    let mut roots: Vec<usize> = Vec::new();
    let mut assignment = Vec::with_capacity(runs.len());
    for k in 0..runs.len() {
        let root = find(&mut parent, k);
        let cluster = match roots.iter().position(|&r| r == root) {
            Some(c) => c,
            None => {
                roots.push(root);
                roots.len() - 1
            }
        };
        assignment.push(cluster);
    }
    let mut rows = Vec::with_capacity(roots.len());
    for cluster in 0..roots.len() {
        let members: Vec<usize> = (0..runs.len()).filter(|&k| assignment[k] == cluster).collect();
        for (x, &a) in members.iter().enumerate() {
            for &b in &members[x + 1..] {
                let d = total_variation(&freqs[a], &freqs[b]);
                if d > 2.0 * threshold {
                    return Err(Error::CalibrationAmbiguous(format!(
                        "runs {a} and {b} share a cluster at distance {d:.4} > {:.4}",
                        2.0 * threshold
                    )));
                }
            }
        }
        let mut pooled = vec![0u64; width];
        for &k in &members {
            for (p, c) in pooled.iter_mut().zip(&runs[k].counts) {
                *p += c;
            }
        }
        let total: u64 = pooled.iter().sum();
        rows.push(pooled.iter().map(|&c| c as f64 / total as f64).collect());
    }
    let pointer_labels = (0..rows.len()).map(|c| format!("c{c}")).collect();
    let outcome_labels = (0..width).map(|i| i.to_string()).collect();
    Ok(Calibration {
        kernel: MeasurementKernel::new(pointer_labels, outcome_labels, rows)?,
        assignment,
        distance_threshold: threshold,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn k2() -> MeasurementKernel {
        MeasurementKernel::from_rows(vec![vec![0.7, 0.3], vec![0.4, 0.6]]).unwrap()
    }

    #[test]
    fn path_follows_bayes_recursion_exactly() {
        let q0 = PointerDistribution::uniform(2);
        let t = simulate_trajectory(&k2(), &q0, &TrajectoryConfig::new(50, 3)).unwrap();
        assert_eq!(t.q_path.len(), 51);
        for (k, &i) in t.outcomes.sequence().iter().enumerate() {
            assert_eq!(bayes_update(&k2(), &t.q_path[k], i).unwrap(), t.q_path[k + 1]);
        }
    }

    #[test]
    fn same_seed_same_trajectory() {
        let q0 = PointerDistribution::uniform(2);
        let cfg = TrajectoryConfig::new(100, 99).with_mode(SamplingMode::Conditioned);
        let a = simulate_trajectory(&k2(), &q0, &cfg).unwrap();
        let b = simulate_trajectory(&k2(), &q0, &cfg).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn peaked_start_collapses_at_step_zero() {
        let q0 = PointerDistribution::point_mass(2, 1);
        let t = simulate_trajectory(&k2(), &q0, &TrajectoryConfig::new(10, 1)).unwrap();
        assert_eq!(t.collapse, Some(Collapse { step: 0, target: 1 }));
    }

    #[test]
    fn degenerate_kernel_never_collapses() {
        let kernel = MeasurementKernel::from_rows(vec![vec![0.5, 0.5], vec![0.5, 0.5]]).unwrap();
        let q0 = PointerDistribution::uniform(2);
        let t = simulate_trajectory(&kernel, &q0, &TrajectoryConfig::new(500, 4)).unwrap();
        assert!(t.q_path.iter().all(|q| *q == q0));
        assert_eq!(t.collapse, None);
        assert!(matches!(fit_decay_rate(&t), Err(Error::NotApplicable(_))));
    }

    #[test]
    fn exact_exponential_gives_exact_slope() {
        let c = 0.37;
        let times: Vec<f64> = (0..50).map(f64::from).collect();
        let weights: Vec<f64> = times.iter().map(|t| (-c * t).exp()).collect();
        let (slope, _, points, wide) = fit_log_decay(&times, &weights).unwrap();
        assert!((slope - c).abs() < 1e-12);
        assert_eq!(points, 50);
        assert!(!wide);
    }

    #[test]
    fn noisy_prefix_is_flagged_wide() {
        use rand::Rng;
        let mut rng = stream_rng(5, 0);
        let times: Vec<f64> = (0..40).map(f64::from).collect();
        let mut level: f64 = 0.5;
        let weights: Vec<f64> = times
            .iter()
            .map(|_| {
                level = (level + rng.random_range(-0.05..0.05)).clamp(0.2, 0.8);
                level
            })
            .collect();
        let (_, _, _, wide) = fit_log_decay(&times, &weights).unwrap();
        assert!(wide);
    }

    #[test]
    fn single_trajectory_ensemble_matches_trajectory() {
        let q0 = PointerDistribution::uniform(2);
        let cfg = TrajectoryConfig::new(200, 12);
        let summary = run_ensemble(&k2(), &q0, &cfg, 1).unwrap();
        let mut own = cfg.clone();
        own.seed = trajectory_seed(12, 0);
        let t = simulate_trajectory(&k2(), &q0, &own).unwrap();
        assert_eq!(summary.trajectory_count, 1);
        assert_eq!(summary.target_histogram.iter().sum::<u64>(), 1);
        assert_eq!(summary.target_histogram[t.final_q().argmax().0], 1);
        for (step, q) in t.q_path.iter().enumerate() {
            assert_eq!(summary.moments.mean(step, 0), q[0]);
        }
        assert_eq!(summary.targets, vec![t.collapse.map(|c| c.target)]);
    }

    #[test]
    fn calibrate_single_run() {
        let run = FrequencyRun { counts: vec![30, 70] };
        let cal = calibrate_kernel(&[run]).unwrap();
        assert_eq!(cal.kernel.rows(), vec![vec![0.3, 0.7]]);
    }

    #[test]
    fn calibrate_identical_rows_merge() {
        let runs = vec![
            FrequencyRun { counts: vec![5000, 5000] },
            FrequencyRun { counts: vec![5010, 4990] },
        ];
        let cal = calibrate_kernel(&runs).unwrap();
        assert_eq!(cal.kernel.pointer_count(), 1);
        assert_eq!(cal.assignment, vec![0, 0]);
    }

    #[test]
    fn calibrate_chained_runs_are_ambiguous() {
        // n = 100 gives threshold 0.25; a chain of steps 0.2 spans 0.6.
        let runs: Vec<FrequencyRun> = [10u64, 30, 50, 70]
            .iter()
            .map(|&c| FrequencyRun { counts: vec![c, 100 - c] })
            .collect();
        assert!(matches!(
            calibrate_kernel(&runs),
            Err(Error::CalibrationAmbiguous(_))
        ));
    }
}
