//! Small statistics toolbox: ensemble moments, regression, and the
//! goodness-of-fit statistics used by the validation harness.

use serde::Serialize;
use statrs::distribution::{ChiSquared, ContinuousCDF};

/// Per-step, per-component running sums over an ensemble of paths.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PathMoments {
    pub count: u64,
    pub sum: Vec<Vec<f64>>,
    pub sum_sq: Vec<Vec<f64>>,
}

impl PathMoments {
    pub fn new(steps: usize, width: usize) -> Self {
        Self {
            count: 0,
            sum: vec![vec![0.0; width]; steps],
            sum_sq: vec![vec![0.0; width]; steps],
        }
    }

    pub fn steps(&self) -> usize {
        self.sum.len()
    }

    pub fn width(&self) -> usize {
        self.sum.first().map_or(0, Vec::len)
    }

    /// Adds one path, given as `path[step][component]`.
    pub fn add_path<P: AsRef<[f64]>>(&mut self, path: &[P]) {
        assert_eq!(path.len(), self.steps(), "path length mismatch");
        for ((row, row_sq), values) in self.sum.iter_mut().zip(&mut self.sum_sq).zip(path) {
            for ((s, s2), &v) in row.iter_mut().zip(row_sq.iter_mut()).zip(values.as_ref()) {
                *s += v;
                *s2 += v * v;
            }
        }
        self.count += 1;
    }

    pub fn merge(&mut self, other: &PathMoments) {
        if other.count == 0 {
            return;
        }
        if self.count == 0 {
            *self = other.clone();
            return;
        }
        for (a, b) in self.sum.iter_mut().zip(&other.sum) {
            for (x, y) in a.iter_mut().zip(b) {
                *x += y;
            }
        }
        for (a, b) in self.sum_sq.iter_mut().zip(&other.sum_sq) {
            for (x, y) in a.iter_mut().zip(b) {
                *x += y;
            }
        }
        self.count += other.count;
    }

    pub fn from_paths<P: AsRef<[f64]>>(paths: &[Vec<P>]) -> Self {
        let steps = paths.first().map_or(0, Vec::len);
        let width = paths
            .first()
            .and_then(|p| p.first())
            .map_or(0, |v| v.as_ref().len());
        let mut moments = Self::new(steps, width);
        for path in paths {
            moments.add_path(path);
        }
        moments
    }

    pub fn mean(&self, step: usize, component: usize) -> f64 {
        self.sum[step][component] / self.count as f64
    }

    /// Sample standard deviation (n − 1 denominator); zero for one path.
    pub fn std(&self, step: usize, component: usize) -> f64 {
        if self.count < 2 {
            return 0.0;
        }
        let n = self.count as f64;
        let mean = self.sum[step][component] / n;
        let var = (self.sum_sq[step][component] - n * mean * mean) / (n - 1.0);
        var.max(0.0).sqrt()
    }

    pub fn mean_path(&self) -> Vec<Vec<f64>> {
        (0..self.steps())
            .map(|s| (0..self.width()).map(|c| self.mean(s, c)).collect())
            .collect()
    }
}

pub fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// Median; `NaN` for an empty slice.
pub fn median(values: &[f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mid = sorted.len() / 2;
    if sorted.len() % 2 == 0 {
        0.5 * (sorted[mid - 1] + sorted[mid])
    } else {
        sorted[mid]
    }
}

/// Ordinary least-squares line `y = intercept + slope·x`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    /// Standard error of the slope from the residual variance.
    pub slope_stderr: f64,
    pub points: usize,
}

pub fn fit_line(x: &[f64], y: &[f64]) -> Option<LineFit> {
    let n = x.len();
    if n < 2 || y.len() != n {
        return None;
    }
    let nf = n as f64;
    let mx = x.iter().sum::<f64>() / nf;
    let my = y.iter().sum::<f64>() / nf;
    let sxx: f64 = x.iter().map(|v| (v - mx) * (v - mx)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let slope_stderr = if n > 2 {
        let rss: f64 = x
            .iter()
            .zip(y)
            .map(|(a, b)| {
                let r = b - intercept - slope * a;
                r * r
            })
            .sum();
        (rss / (nf - 2.0) / sxx).sqrt()
    } else {
        f64::INFINITY
    };
    Some(LineFit {
        slope,
        intercept,
        slope_stderr,
        points: n,
    })
}

/// Asymptotic Kolmogorov survival function `P(K > λ)`.
pub fn kolmogorov_survival(lambda: f64) -> f64 {
    if lambda <= 0.0 {
        return 1.0;
    }
    if lambda < 0.2 {
        return 1.0;
    }
    let mut total = 0.0;
    for k in 1..=100 {
        let kf = k as f64;
        let term = 2.0 * (-2.0 * kf * kf * lambda * lambda).exp();
        total += if k % 2 == 1 { term } else { -term };
        if term < 1e-16 {
            break;
        }
    }
    total.clamp(0.0, 1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KsResult {
    pub statistic: f64,
    pub p_value: f64,
}

/// Two-sample Kolmogorov–Smirnov test with the Stephens small-sample
/// correction.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> KsResult {
    if a.is_empty() || b.is_empty() {
        return KsResult {
            statistic: 0.0,
            p_value: 1.0,
        };
    }
    let mut xs = a.to_vec();
    let mut ys = b.to_vec();
    xs.sort_by(f64::total_cmp);
    ys.sort_by(f64::total_cmp);
    let (n, m) = (xs.len(), ys.len());
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < n && j < m {
        let v = xs[i].min(ys[j]);
        while i < n && xs[i] <= v {
            i += 1;
        }
        while j < m && ys[j] <= v {
            j += 1;
        }
        d = d.max((i as f64 / n as f64 - j as f64 / m as f64).abs());
    }
    let ne = (n * m) as f64 / (n + m) as f64;
    let sqrt_ne = ne.sqrt();
    let lambda = (sqrt_ne + 0.12 + 0.11 / sqrt_ne) * d;
    KsResult {
        statistic: d,
        p_value: kolmogorov_survival(lambda),
    }
}

/// Replaces each value of the pooled samples by the index of its cluster,
/// where sorted values closer than `resolution` share a cluster.
pub fn cluster_values(a: &[f64], b: &[f64], resolution: f64) -> (Vec<f64>, Vec<f64>) {
    let mut pooled: Vec<f64> = a.iter().chain(b).copied().collect();
    pooled.sort_by(f64::total_cmp);
    let mut starts = Vec::new();
    let mut previous = f64::NEG_INFINITY;
    for &v in &pooled {
        if starts.is_empty() || v - previous > resolution {
            starts.push(v);
        }
        previous = v;
    }
    let index = |v: &f64| (starts.partition_point(|s| s <= v) - 1) as f64;
    (a.iter().map(index).collect(), b.iter().map(index).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ChiSquareResult {
    pub statistic: f64,
    pub degrees_of_freedom: usize,
    pub p_value: f64,
}

/// Pearson goodness of fit of observed counts against expected
/// probabilities. Categories with zero expected probability must have zero
/// counts, otherwise the p-value is 0.
pub fn chi_square_gof(observed: &[u64], expected_probs: &[f64]) -> ChiSquareResult {
    let total: u64 = observed.iter().sum();
    let mut statistic = 0.0;
    let mut categories = 0usize;
    let mut impossible = false;
    for (&o, &p) in observed.iter().zip(expected_probs) {
        if p > 0.0 {
            let e = p * total as f64;
            statistic += (o as f64 - e).powi(2) / e;
            categories += 1;
        } else if o > 0 {
            impossible = true;
        }
    }
    let dof = categories.saturating_sub(1);
    let p_value = if impossible {
        0.0
    } else if dof == 0 || total == 0 {
        1.0
    } else {
        let dist = ChiSquared::new(dof as f64).expect("positive degrees of freedom");
        1.0 - dist.cdf(statistic)
    };
    ChiSquareResult {
        statistic: if impossible { f64::INFINITY } else { statistic },
        degrees_of_freedom: dof,
        p_value,
    }
}
