//! Measurement kernels and the exact discrete-time Bayesian mathematics.
//!
//! A [`MeasurementKernel`] holds the conditional outcome laws `p(i|α)` of one
//! partial measurement. Everything here is a pure function of immutable
//! values: the predictive law, the Bayes update, the closed-form posterior,
//! sequence probabilities, the Doob split of the counting process, the
//! likelihood-ratio martingales and relative entropies.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Row-sum deviation tolerated on input before a kernel is rejected.
pub const VALIDATION_TOLERANCE: f64 = 1e-9;
/// Default threshold under which two kernel rows count as identical.
pub const DEFAULT_DEGENERACY_THRESHOLD: f64 = 1e-9;

/// Conditional outcome probabilities `p(i|α)` over a finite pointer set and a
/// finite outcome alphabet.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasurementKernel {
    pointer_labels: Vec<String>,
    outcome_labels: Vec<String>,
    /// Row-major, `pointers × outcomes`.
    probs: Vec<f64>,
}

/// Outcome of [`validate_kernel`].
#[derive(Debug, Clone, PartialEq)]
pub struct KernelReport {
    pub max_row_deviation: f64,
    /// Pointer pairs `(α, β)` with `α < β` whose rows are indistinguishable.
    pub degenerate_pairs: Vec<(usize, usize)>,
}

impl KernelReport {
    pub fn is_degenerate(&self) -> bool {
        !self.degenerate_pairs.is_empty()
    }
}

/// Checks row-stochasticity and pairwise distinctness of a candidate kernel.
///
/// Bound violations and row sums off by more than [`VALIDATION_TOLERANCE`]
/// are errors; identical rows are only reported.
pub fn validate_kernel(rows: &[Vec<f64>], degeneracy_threshold: f64) -> Result<KernelReport> {
    if rows.is_empty() {
        return Err(Error::InvalidKernel("no pointer rows".into()));
    }
    let width = rows[0].len();
    if width == 0 {
        return Err(Error::InvalidKernel("empty outcome alphabet".into()));
    }
    let mut max_row_deviation: f64 = 0.0;
    for (alpha, row) in rows.iter().enumerate() {
        if row.len() != width {
            return Err(Error::InvalidKernel(format!(
                "row {alpha} has {} entries, expected {width}",
                row.len()
            )));
        }
        for (i, &p) in row.iter().enumerate() {
            if !p.is_finite() || !(0.0..=1.0).contains(&p) {
                return Err(Error::InvalidKernel(format!(
                    "p({i}|{alpha}) = {p} is not a probability"
                )));
            }
        }
        let deviation = (row.iter().sum::<f64>() - 1.0).abs();
        if deviation > VALIDATION_TOLERANCE {
            return Err(Error::InvalidKernel(format!(
                "row {alpha} sums to 1 {:+e}",
                row.iter().sum::<f64>() - 1.0
            )));
        }
        max_row_deviation = max_row_deviation.max(deviation);
    }
    let mut degenerate_pairs = Vec::new();
    for a in 0..rows.len() {
        for b in (a + 1)..rows.len() {
            let diff = rows[a]
                .iter()
                .zip(&rows[b])
                .map(|(x, y)| (x - y).abs())
                .fold(0.0, f64::max);
            if diff <= degeneracy_threshold {
                degenerate_pairs.push((a, b));
            }
        }
    }
    Ok(KernelReport {
        max_row_deviation,
        degenerate_pairs,
    })
}

impl MeasurementKernel {
    /// Builds a kernel, renormalizing each row exactly after validation.
    /// Degenerate rows are accepted with a logged warning.
    pub fn new(
        pointer_labels: Vec<String>,
        outcome_labels: Vec<String>,
        rows: Vec<Vec<f64>>,
    ) -> Result<Self> {
        let report = validate_kernel(&rows, DEFAULT_DEGENERACY_THRESHOLD)?;
        if pointer_labels.len() != rows.len() {
            return Err(Error::InvalidKernel(format!(
                "{} pointer labels for {} rows",
                pointer_labels.len(),
                rows.len()
            )));
        }
        if outcome_labels.len() != rows[0].len() {
            return Err(Error::InvalidKernel(format!(
                "{} outcome labels for {} columns",
                outcome_labels.len(),
                rows[0].len()
            )));
        }
        for &(a, b) in &report.degenerate_pairs {
            log::warn!(
                "kernel rows {} and {} are indistinguishable; collapse guarantees do not apply",
                pointer_labels[a],
                pointer_labels[b]
            );
        }
        let mut probs = Vec::with_capacity(rows.len() * rows[0].len());
        for row in rows {
            let total: f64 = row.iter().sum();
            probs.extend(row.into_iter().map(|p| p / total));
        }
        Ok(Self {
            pointer_labels,
            outcome_labels,
            probs,
        })
    }

    /// Kernel with generated labels `0..` for pointers and outcomes.
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let pointers = (0..rows.len()).map(|a| a.to_string()).collect();
        let outcomes = (0..rows.first().map_or(0, Vec::len))
            .map(|i| i.to_string())
            .collect();
        Self::new(pointers, outcomes, rows)
    }

    pub fn pointer_count(&self) -> usize {
        self.pointer_labels.len()
    }

    pub fn outcome_count(&self) -> usize {
        self.outcome_labels.len()
    }

    pub fn pointer_labels(&self) -> &[String] {
        &self.pointer_labels
    }

    pub fn outcome_labels(&self) -> &[String] {
        &self.outcome_labels
    }

    /// `p(i|α)`.
    #[inline]
    pub fn prob(&self, alpha: usize, outcome: usize) -> f64 {
        self.probs[alpha * self.outcome_count() + outcome]
    }

    /// The outcome law `p(·|α)`.
    pub fn row(&self, alpha: usize) -> &[f64] {
        let width = self.outcome_count();
        &self.probs[alpha * width..(alpha + 1) * width]
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        (0..self.pointer_count())
            .map(|a| self.row(a).to_vec())
            .collect()
    }

    pub fn validate(&self, degeneracy_threshold: f64) -> KernelReport {
        validate_kernel(&self.rows(), degeneracy_threshold)
            .expect("a constructed kernel is row-stochastic")
    }
}

/// A probability vector `Q(α)` over the pointer set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PointerDistribution(Vec<f64>);

impl PointerDistribution {
    /// Accepts weights summing to 1 within [`VALIDATION_TOLERANCE`] and
    /// rescales them to unit sum.
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::InvalidDistribution("empty weight vector".into()));
        }
        if let Some((a, w)) = weights
            .iter()
            .enumerate()
            .find(|(_, w)| !w.is_finite() || **w < 0.0)
        {
            return Err(Error::InvalidDistribution(format!("weight {a} is {w}")));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > VALIDATION_TOLERANCE {
            return Err(Error::InvalidDistribution(format!(
                "weights sum to {total}"
            )));
        }
        Ok(Self(weights.into_iter().map(|w| w / total).collect()))
    }

    /// Normalizes arbitrary nonnegative weights with positive total.
    pub fn from_unnormalized(weights: Vec<f64>) -> Result<Self> {
        let total: f64 = weights.iter().sum();
        if !(total > 0.0) || !total.is_finite() {
            return Err(Error::InvalidDistribution(format!(
                "weights sum to {total}"
            )));
        }
        Self::new(weights.into_iter().map(|w| w / total).collect())
    }

    pub fn point_mass(len: usize, alpha: usize) -> Self {
        let mut weights = vec![0.0; len];
        weights[alpha] = 1.0;
        Self(weights)
    }

    pub fn uniform(len: usize) -> Self {
        Self(vec![1.0 / len as f64; len])
    }

    pub(crate) fn from_normalized_unchecked(weights: Vec<f64>) -> Self {
        Self(weights)
    }

    pub fn weights(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Index and value of the largest weight (first one on ties).
    pub fn argmax(&self) -> (usize, f64) {
        self.0
            .iter()
            .copied()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |best, (a, w)| {
                if w > best.1 {
                    (a, w)
                } else {
                    best
                }
            })
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl std::ops::Index<usize> for PointerDistribution {
    type Output = f64;
    fn index(&self, alpha: usize) -> &f64 {
        &self.0[alpha]
    }
}

/// A realized outcome sequence together with its occurrence counts.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OutcomeRecord {
    sequence: Vec<usize>,
    counts: Vec<u64>,
}

impl OutcomeRecord {
    pub fn new(outcome_count: usize) -> Self {
        Self {
            sequence: Vec::new(),
            counts: vec![0; outcome_count],
        }
    }

    pub fn from_sequence(outcome_count: usize, sequence: &[usize]) -> Self {
        let mut record = Self::new(outcome_count);
        for &i in sequence {
            record.push(i);
        }
        record
    }

    pub fn push(&mut self, outcome: usize) {
        self.sequence.push(outcome);
        self.counts[outcome] += 1;
    }

    pub fn sequence(&self) -> &[usize] {
        &self.sequence
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn len(&self) -> usize {
        self.sequence.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sequence.is_empty()
    }

    /// Occurrence frequencies `N_n(i)/n`.
    pub fn frequencies(&self) -> Vec<f64> {
        let n = self.len().max(1) as f64;
        self.counts.iter().map(|&c| c as f64 / n).collect()
    }
}

fn check_dims(kernel: &MeasurementKernel, q: &PointerDistribution) -> Result<()> {
    if q.len() != kernel.pointer_count() {
        return Err(Error::InvalidDistribution(format!(
            "{} weights for {} pointers",
            q.len(),
            kernel.pointer_count()
        )));
    }
    Ok(())
}

/// Predictive outcome law `π(i) = Σ_α p(i|α) q(α)`.
pub fn predictive(kernel: &MeasurementKernel, q: &PointerDistribution) -> Vec<f64> {
    let mut pi = vec![0.0; kernel.outcome_count()];
    for (alpha, &w) in q.weights().iter().enumerate() {
        if w == 0.0 {
            continue;
        }
        for (slot, &p) in pi.iter_mut().zip(kernel.row(alpha)) {
            *slot += p * w;
        }
    }
    pi
}

/// One Bayes step: `Q'(α) = p(i|α) q(α) / π(i)`.
pub fn bayes_update(
    kernel: &MeasurementKernel,
    q: &PointerDistribution,
    outcome: usize,
) -> Result<PointerDistribution> {
    check_dims(kernel, q)?;
    if outcome >= kernel.outcome_count() {
        return Err(Error::InvalidKernel(format!("outcome {outcome} out of range")));
    }
    let numerators: Vec<f64> = q
        .weights()
        .iter()
        .enumerate()
        .map(|(alpha, &w)| kernel.prob(alpha, outcome) * w)
        .collect();
    let mass: f64 = numerators.iter().sum();
    if !(mass > 0.0) {
        return Err(Error::ImpossibleOutcome { outcome, mass });
    }
    Ok(PointerDistribution::from_normalized_unchecked(
        numerators.into_iter().map(|x| x / mass).collect(),
    ))
}

/// Normalizes log-weights by max subtraction. `None` if every weight is zero.
pub(crate) fn normalize_log_weights(log_weights: &[f64]) -> Option<Vec<f64>> {
    let max = log_weights.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY || max.is_nan() {
        return None;
    }
    let scaled: Vec<f64> = log_weights.iter().map(|&l| (l - max).exp()).collect();
    let total: f64 = scaled.iter().sum();
    Some(scaled.into_iter().map(|x| x / total).collect())
}

/// `Σ_i N(i) ln p(i|α)`, with `0·ln 0 = 0` and `N·ln 0 = −∞` for `N > 0`.
fn log_likelihood(kernel: &MeasurementKernel, alpha: usize, counts: &[u64]) -> f64 {
    counts
        .iter()
        .zip(kernel.row(alpha))
        .map(|(&n, &p)| {
            if n == 0 {
                0.0
            } else if p == 0.0 {
                f64::NEG_INFINITY
            } else {
                n as f64 * p.ln()
            }
        })
        .sum()
}

/// Closed-form posterior `Q(α) ∝ q0(α) Π_i p(i|α)^{N(i)}`, evaluated in the
/// log domain.
pub fn posterior_closed_form(
    kernel: &MeasurementKernel,
    q0: &PointerDistribution,
    counts: &[u64],
) -> Result<PointerDistribution> {
    check_dims(kernel, q0)?;
    if counts.len() != kernel.outcome_count() {
        return Err(Error::InvalidKernel(format!(
            "{} counts for {} outcomes",
            counts.len(),
            kernel.outcome_count()
        )));
    }
    let log_weights: Vec<f64> = (0..kernel.pointer_count())
        .map(|alpha| {
            let w = q0[alpha];
            if w == 0.0 {
                f64::NEG_INFINITY
            } else {
                w.ln() + log_likelihood(kernel, alpha, counts)
            }
        })
        .collect();
    normalize_log_weights(&log_weights)
        .map(PointerDistribution::from_normalized_unchecked)
        .ok_or(Error::ImpossibleOutcome {
            outcome: counts.iter().position(|&c| c > 0).unwrap_or(0),
            mass: 0.0,
        })
}

fn count_outcomes(outcome_count: usize, sequence: &[usize]) -> Vec<u64> {
    let mut counts = vec![0u64; outcome_count];
    for &i in sequence {
        counts[i] += 1;
    }
    counts
}

/// `ln P(i_1..i_n) = ln Σ_α q0(α) Π_k p(i_k|α)`. Depends on the sequence only
/// through its counts, so it is exactly permutation invariant.
pub fn log_sequence_probability(
    kernel: &MeasurementKernel,
    q0: &PointerDistribution,
    sequence: &[usize],
) -> f64 {
    let counts = count_outcomes(kernel.outcome_count(), sequence);
    let terms: Vec<f64> = (0..kernel.pointer_count())
        .map(|alpha| {
            let w = q0[alpha];
            if w == 0.0 {
                f64::NEG_INFINITY
            } else {
                w.ln() + log_likelihood(kernel, alpha, &counts)
            }
        })
        .collect();
    let max = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    max + terms.iter().map(|t| (t - max).exp()).sum::<f64>().ln()
}

/// Probability of an outcome sequence under `P = Σ_α q0(α) P_α`.
pub fn sequence_probability(
    kernel: &MeasurementKernel,
    q0: &PointerDistribution,
    sequence: &[usize],
) -> f64 {
    let counts = count_outcomes(kernel.outcome_count(), sequence);
    (0..kernel.pointer_count())
        .map(|alpha| {
            let likelihood: f64 = counts
                .iter()
                .zip(kernel.row(alpha))
                .map(|(&n, &p)| p.powi(n as i32))
                .product();
            q0[alpha] * likelihood
        })
        .sum()
}

/// Doob split `N_n(i) = X_n(i) + A_n(i)` of the counting process at step `n`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DoobDecomposition {
    pub step: usize,
    pub counts: Vec<u64>,
    pub martingale_part: Vec<f64>,
    pub predictable_part: Vec<f64>,
}

/// Doob decomposition along a realized trajectory, one entry per step `1..=n`.
pub fn doob_decompose(
    kernel: &MeasurementKernel,
    q0: &PointerDistribution,
    sequence: &[usize],
) -> Result<Vec<DoobDecomposition>> {
    check_dims(kernel, q0)?;
    let width = kernel.outcome_count();
    let mut q = q0.clone();
    let mut counts = vec![0u64; width];
    let mut compensator = vec![0.0; width];
    let mut steps = Vec::with_capacity(sequence.len());
    for (k, &outcome) in sequence.iter().enumerate() {
        let pi = predictive(kernel, &q);
        for (a, p) in compensator.iter_mut().zip(&pi) {
            *a += p;
        }
        counts[outcome] += 1;
        q = bayes_update(kernel, &q, outcome)?;
        let martingale_part = counts
            .iter()
            .zip(&compensator)
            .map(|(&n, &a)| n as f64 - a)
            .collect();
        steps.push(DoobDecomposition {
            step: k + 1,
            counts: counts.clone(),
            martingale_part,
            predictable_part: compensator.clone(),
        });
    }
    Ok(steps)
}

/// Reference measure `P^0` against which likelihood ratios are taken.
#[derive(Debug, Clone, PartialEq)]
pub enum BaseMeasure {
    /// i.i.d. uniform outcomes: `P^0[B] = |I|^{-n}`.
    UniformIid,
    /// i.i.d. outcomes with the given strictly positive law on `I`.
    Iid(Vec<f64>),
    /// The probability `P^0[B_{i_1..i_n}]` of the observed cylinder itself,
    /// in the log domain.
    LogCylinder(f64),
}

impl BaseMeasure {
    fn log_cylinder(&self, outcome_count: usize, sequence: &[usize]) -> Result<f64> {
        match self {
            BaseMeasure::UniformIid => Ok(-(sequence.len() as f64) * (outcome_count as f64).ln()),
            BaseMeasure::Iid(weights) => {
                if weights.len() != outcome_count {
                    return Err(Error::InvalidBaseMeasure(format!(
                        "{} base weights for {outcome_count} outcomes",
                        weights.len()
                    )));
                }
                if let Some(i) = weights.iter().position(|&w| !(w > 0.0)) {
                    return Err(Error::InvalidBaseMeasure(format!(
                        "base weight of outcome {i} is not strictly positive"
                    )));
                }
                Ok(sequence.iter().map(|&i| weights[i].ln()).sum())
            }
            BaseMeasure::LogCylinder(log_z) => {
                if !log_z.is_finite() {
                    return Err(Error::InvalidBaseMeasure(
                        "cylinder probability must be strictly positive".into(),
                    ));
                }
                Ok(*log_z)
            }
        }
    }
}

/// Radon–Nikodym densities `Z_n(α)` of `P_α` and `Z_n` of `P` with respect
/// to a base measure, stored as logarithms.
#[derive(Debug, Clone, PartialEq)]
pub struct LikelihoodMartingale {
    pub log_z_alpha: Vec<f64>,
    pub log_z_total: f64,
}

impl LikelihoodMartingale {
    pub fn z_alpha(&self) -> Vec<f64> {
        self.log_z_alpha.iter().map(|l| l.exp()).collect()
    }

    pub fn z_total(&self) -> f64 {
        self.log_z_total.exp()
    }

    /// `Q_n(α) = q0(α) Z_n(α) / Z_n`.
    pub fn posterior(&self, q0: &PointerDistribution) -> Result<PointerDistribution> {
        let log_weights: Vec<f64> = q0
            .weights()
            .iter()
            .zip(&self.log_z_alpha)
            .map(|(&w, &lz)| if w == 0.0 { f64::NEG_INFINITY } else { w.ln() + lz })
            .collect();
        normalize_log_weights(&log_weights)
            .map(PointerDistribution::from_normalized_unchecked)
            .ok_or(Error::ImpossibleOutcome {
                outcome: 0,
                mass: 0.0,
            })
    }
}

pub fn likelihood_martingale(
    kernel: &MeasurementKernel,
    q0: &PointerDistribution,
    sequence: &[usize],
    base: &BaseMeasure,
) -> Result<LikelihoodMartingale> {
    check_dims(kernel, q0)?;
    let log_base = base.log_cylinder(kernel.outcome_count(), sequence)?;
    let counts = count_outcomes(kernel.outcome_count(), sequence);
    let log_z_alpha: Vec<f64> = (0..kernel.pointer_count())
        .map(|alpha| log_likelihood(kernel, alpha, &counts) - log_base)
        .collect();
    let terms: Vec<f64> = q0
        .weights()
        .iter()
        .zip(&log_z_alpha)
        .map(|(&w, &lz)| if w == 0.0 { f64::NEG_INFINITY } else { w.ln() + lz })
        .collect();
    let max = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let log_z_total = if max == f64::NEG_INFINITY {
        f64::NEG_INFINITY
    } else {
        max + terms.iter().map(|t| (t - max).exp()).sum::<f64>().ln()
    };
    Ok(LikelihoodMartingale {
        log_z_alpha,
        log_z_total,
    })
}

/// Relative entropy `S(γ|α) = Σ_i p(i|γ) ln(p(i|γ)/p(i|α))` in nats;
/// `+∞` when `p(·|γ)` is not absolutely continuous w.r.t. `p(·|α)`.
pub fn relative_entropy(kernel: &MeasurementKernel, gamma: usize, alpha: usize) -> f64 {
    kernel
        .row(gamma)
        .iter()
        .zip(kernel.row(alpha))
        .map(|(&pg, &pa)| {
            if pg == 0.0 {
                0.0
            } else if pa == 0.0 {
                f64::INFINITY
            } else {
                pg * (pg / pa).ln()
            }
        })
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn k2() -> MeasurementKernel {
        MeasurementKernel::new(
            vec!["a".into(), "b".into()],
            vec!["0".into(), "1".into()],
            vec![vec![0.7, 0.3], vec![0.4, 0.6]],
        )
        .unwrap()
    }

    fn half() -> PointerDistribution {
        PointerDistribution::new(vec![0.5, 0.5]).unwrap()
    }

    #[test]
    fn validate_k2_is_clean() {
        let report = validate_kernel(&[vec![0.7, 0.3], vec![0.4, 0.6]], 1e-9).unwrap();
        assert!(!report.is_degenerate());
        assert!(report.max_row_deviation < 1e-15);
    }

    #[test]
    fn identical_rows_warn_only() {
        let report = validate_kernel(&[vec![0.5, 0.5], vec![0.5, 0.5]], 1e-9).unwrap();
        assert_eq!(report.degenerate_pairs, vec![(0, 1)]);
        assert!(MeasurementKernel::from_rows(vec![vec![0.5, 0.5], vec![0.5, 0.5]]).is_ok());
    }

    #[test]
    fn out_of_range_probability_rejected() {
        let err = validate_kernel(&[vec![1.2, -0.2], vec![0.4, 0.6]], 1e-9).unwrap_err();
        assert!(matches!(err, Error::InvalidKernel(_)));
        let err = validate_kernel(&[vec![0.7, 0.31]], 1e-9).unwrap_err();
        assert!(matches!(err, Error::InvalidKernel(_)));
    }

    #[test]
    fn predictive_values() {
        let pi = predictive(&k2(), &half());
        assert!((pi[0] - 0.55).abs() < 1e-15);
        assert!((pi[1] - 0.45).abs() < 1e-15);
        let peaked = predictive(&k2(), &PointerDistribution::point_mass(2, 0));
        assert_eq!(peaked, vec![0.7, 0.3]);
    }

    #[test]
    fn bayes_update_values() {
        let q = bayes_update(&k2(), &half(), 0).unwrap();
        assert!((q[0] - 7.0 / 11.0).abs() < 1e-15);
        assert!((q[1] - 4.0 / 11.0).abs() < 1e-15);
    }

    #[test]
    fn peaked_distribution_is_fixed_exactly() {
        let peaked = PointerDistribution::point_mass(2, 0);
        for i in 0..2 {
            assert_eq!(bayes_update(&k2(), &peaked, i).unwrap(), peaked);
        }
    }

    #[test]
    fn zero_mass_outcome_is_impossible() {
        let kernel = MeasurementKernel::from_rows(vec![vec![0.5, 0.5], vec![0.0, 1.0]]).unwrap();
        let err = bayes_update(&kernel, &PointerDistribution::point_mass(2, 1), 0).unwrap_err();
        assert!(matches!(err, Error::ImpossibleOutcome { outcome: 0, .. }));
    }

    #[test]
    fn closed_form_values() {
        let q = posterior_closed_form(&k2(), &half(), &[3, 1]).unwrap();
        // 0.7^3·0.3 = 0.1029, 0.4^3·0.6 = 0.0384
        assert!((q[0] - 0.1029 / 0.1413).abs() < 1e-14);
        assert!((q[0] - 0.728238).abs() < 1e-6);
        let unchanged = posterior_closed_form(&k2(), &half(), &[0, 0]).unwrap();
        assert_eq!(unchanged, half());
    }

    #[test]
    fn sequence_probabilities() {
        let k = k2();
        assert!((sequence_probability(&k, &half(), &[0, 1]) - 0.225).abs() < 1e-15);
        assert!((sequence_probability(&k, &half(), &[1, 0]) - 0.225).abs() < 1e-15);
        assert_eq!(sequence_probability(&k, &half(), &[]), 1.0);
        assert!(
            (log_sequence_probability(&k, &half(), &[0, 1]).exp() - 0.225).abs() < 1e-15
        );
    }

    #[test]
    fn doob_first_step() {
        let steps = doob_decompose(&k2(), &half(), &[0]).unwrap();
        let first = &steps[0];
        assert!((first.predictable_part[0] - 0.55).abs() < 1e-15);
        assert!((first.martingale_part[0] - 0.45).abs() < 1e-15);
        assert!((first.martingale_part[1] + 0.45).abs() < 1e-15);
    }

    #[test]
    fn doob_peaked_compensator_is_linear() {
        let seq = [0, 1, 1, 0, 0, 1, 0];
        let steps = doob_decompose(&k2(), &PointerDistribution::point_mass(2, 0), &seq).unwrap();
        for s in &steps {
            let n = s.step as f64;
            assert!((s.predictable_part[0] - 0.7 * n).abs() < 1e-13);
            assert!((s.predictable_part[1] - 0.3 * n).abs() < 1e-13);
        }
    }

    #[test]
    fn likelihood_martingale_values() {
        let z = likelihood_martingale(&k2(), &half(), &[0], &BaseMeasure::UniformIid).unwrap();
        let za = z.z_alpha();
        assert!((za[0] - 1.4).abs() < 1e-14);
        assert!((za[1] - 0.8).abs() < 1e-14);
    }

    #[test]
    fn likelihood_martingale_against_own_measure_is_one() {
        let k = k2();
        let seq = [0, 1, 1, 0, 1];
        let base = BaseMeasure::LogCylinder(log_sequence_probability(&k, &half(), &seq));
        let z = likelihood_martingale(&k, &half(), &seq, &base).unwrap();
        assert!((z.z_total() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn zero_base_weight_rejected() {
        let err = likelihood_martingale(&k2(), &half(), &[0], &BaseMeasure::Iid(vec![1.0, 0.0]))
            .unwrap_err();
        assert!(matches!(err, Error::InvalidBaseMeasure(_)));
    }

    #[test]
    fn relative_entropy_values() {
        let k = k2();
        let expected = 0.7 * (0.7f64 / 0.4).ln() + 0.3 * (0.3f64 / 0.6).ln();
        assert!((relative_entropy(&k, 0, 1) - expected).abs() < 1e-15);
        assert!((relative_entropy(&k, 0, 1) - 0.183787).abs() < 1e-6);
        assert_eq!(relative_entropy(&k, 1, 1), 0.0);
        let support = MeasurementKernel::from_rows(vec![vec![0.5, 0.5], vec![1.0, 0.0]]).unwrap();
        assert_eq!(relative_entropy(&support, 0, 1), f64::INFINITY);
    }
}
