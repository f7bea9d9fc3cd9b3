//! Small statistical toolbox: running moments, Kolmogorov–Smirnov
//! distances, the standard normal CDF and batch-means confidence
//! intervals.

/// Welford's online mean/variance accumulator.
#[derive(Debug, Clone, Copy, Default)]
pub struct Moments {
    count: usize,
    mean: f64,
    m2: f64,
}

impl Moments {
    pub fn update(&mut self, x: f64) {
        self.count += 1;
        let d1 = x - self.mean;
        self.mean += d1 / self.count as f64;
        let d2 = x - self.mean;
        self.m2 += d1 * d2;
    }

    pub fn from_samples(xs: &[f64]) -> Self {
        let mut m = Moments::default();
        for &x in xs {
            m.update(x);
        }
        m
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    /// Unbiased sample variance.
    pub fn variance(&self) -> f64 {
        if self.count <= 1 {
            0.0
        } else {
            self.m2 / (self.count - 1) as f64
        }
    }

    /// Standard error of the mean.
    pub fn std_error(&self) -> f64 {
        if self.count == 0 {
            0.0
        } else {
            (self.variance() / self.count as f64).sqrt()
        }
    }
}

/// Standard normal CDF.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / std::f64::consts::SQRT_2)
}

/// One-sample Kolmogorov–Smirnov distance `sup_x |F_n(x) - F(x)|` against a
/// continuous CDF. `samples` need not be sorted.
pub fn ks_distance<F: Fn(f64) -> f64>(samples: &[f64], cdf: F) -> f64 {
    assert!(!samples.is_empty());
    let mut xs = samples.to_vec();
    xs.sort_by(|a, b| a.total_cmp(b));
    let n = xs.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in xs.iter().enumerate() {
        let f = cdf(x);
        d = d.max((f - i as f64 / n).abs());
        d = d.max(((i + 1) as f64 / n - f).abs());
    }
    d
}

/// Two-sample Kolmogorov–Smirnov distance between empirical CDFs.
/// Computed in integer counts, so identical multisets give exactly 0.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> f64 {
    assert!(!a.is_empty() && !b.is_empty());
    let mut xs = a.to_vec();
    let mut ys = b.to_vec();
    xs.sort_by(|p, q| p.total_cmp(q));
    ys.sort_by(|p, q| p.total_cmp(q));
    let (n, m) = (xs.len() as i64, ys.len() as i64);
    let (mut i, mut j) = (0usize, 0usize);
    let mut gap: i64 = 0; // i*m - j*n, the scaled CDF difference
    while i < xs.len() && j < ys.len() {
        match xs[i].total_cmp(&ys[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                let v = xs[i];
                while i < xs.len() && xs[i] == v {
                    i += 1;
                }
                while j < ys.len() && ys[j] == v {
                    j += 1;
                }
            }
        }
        gap = gap.max((i as i64 * m - j as i64 * n).abs());
    }
    // Once one sample is exhausted the scaled difference shrinks
    // monotonically toward 0, so the supremum is already recorded.
    gap as f64 / (n as f64 * m as f64)
}

/// Asymptotic two-sample KS critical value at level `alpha`:
/// `c(alpha) * sqrt((n+m)/(n*m))` with `c(alpha) = sqrt(-ln(alpha/2)/2)`.
pub fn ks_two_sample_critical(n: usize, m: usize, alpha: f64) -> f64 {
    let c = (-(alpha / 2.0).ln() / 2.0).sqrt();
    c * ((n + m) as f64 / (n as f64 * m as f64)).sqrt()
}

/// Survival function of the Kolmogorov distribution,
/// `Q(lambda) = 2 sum_{k>=1} (-1)^(k-1) exp(-2 k^2 lambda^2)`.
pub fn kolmogorov_survival(lambda: f64) -> f64 {
    if lambda <= 0.0 {
        return 1.0;
    }
    let mut sum = 0.0;
    let mut sign = 1.0;
    for k in 1..=100 {
        let term = (-2.0 * (k as f64 * lambda).powi(2)).exp();
        if term < 1e-18 {
            break;
        }
        sum += sign * term;
        sign = -sign;
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

/// Asymptotic p-value proxy for a one-sample KS distance at sample size
/// `n`. A proxy only: with plug-in parameters the true p-value is larger.
pub fn ks_p_value(d: f64, n: usize) -> f64 {
    kolmogorov_survival(d * (n as f64).sqrt())
}

/// Batch-means estimate of a long-run average with a 95% confidence
/// half-width. `values` are consecutive integrals (or means) of equal-length
/// batches taken from a single trajectory.
#[derive(Debug, Clone, Copy)]
pub struct BatchMeans {
    pub mean: f64,
    pub half_width: f64,
    pub batches: usize,
}

/// Student-t 0.975 quantile for `b - 1` degrees of freedom, tabulated for
/// the batch counts used here (falls back to the normal quantile).
fn t_quantile_975(dof: usize) -> f64 {
    const TABLE: [(usize, f64); 8] = [
        (7, 2.365),
        (15, 2.131),
        (23, 2.069),
        (31, 2.040),
        (47, 2.012),
        (63, 1.998),
        (127, 1.979),
        (255, 1.969),
    ];
    for &(d, t) in &TABLE {
        if dof <= d {
            return t;
        }
    }
    1.96
}

pub fn batch_means(batch_values: &[f64]) -> BatchMeans {
    assert!(batch_values.len() >= 2, "need at least two batches");
    let m = Moments::from_samples(batch_values);
    BatchMeans {
        mean: m.mean(),
        half_width: t_quantile_975(batch_values.len() - 1) * m.std_error(),
        batches: batch_values.len(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normal_cdf_reference_values() {
        // Reference values computed with 30-digit arithmetic.
        let cases = [
            (0.0, 0.5),
            (1.0, 0.8413447460685429),
            (1.96, 0.9750021048517795),
            (-1.2345, 0.10850832336267016),
            (0.5, 0.6914624612740131),
            (-8.0, 6.220960574271784e-16),
        ];
        for (x, want) in cases {
            let got = normal_cdf(x);
            assert!(
                (got - want).abs() <= 1e-14 * want.max(1e-3),
                "Phi({x}) = {got}, want {want}"
            );
        }
    }

    #[test]
    fn ks_one_sample_exact_small_case() {
        // Samples 0.1, 0.2, 0.9 against U(0,1):
        // sup gap is at x = 0.2+ where F_n = 2/3 and F = 0.2.
        let d = ks_distance(&[0.9, 0.1, 0.2], |x| x.clamp(0.0, 1.0));
        assert!((d - (2.0 / 3.0 - 0.2)).abs() < 1e-15);
    }

    #[test]
    fn ks_two_sample_disjoint_supports() {
        let a = [0.0, 1.0, 2.0];
        let b = [5.0, 6.0];
        assert!((ks_two_sample(&a, &b) - 1.0).abs() < 1e-15);
        assert!(ks_two_sample(&a, &a) < 1e-15);
    }

    #[test]
    fn ks_two_sample_hand_case() {
        // F_a jumps at 1,2,3; F_b jumps at 2,4. Max gap 1/2 on [3,4).
        let a = [1.0, 2.0, 3.0];
        let b = [2.0, 4.0];
        assert!((ks_two_sample(&a, &b) - 0.5).abs() < 1e-15);
        // Identical multisets give exactly zero.
        let c = [0.1, 0.2, 0.2, 7.0];
        assert_eq!(ks_two_sample(&c, &c), 0.0);
    }

    #[test]
    fn ks_critical_value_frozen() {
        let th = ks_two_sample_critical(10_000, 10_000, 0.01);
        assert!((th - 0.02301807413001365).abs() < 1e-12);
    }

    #[test]
    fn kolmogorov_survival_reference_values() {
        // Partial sums of the alternating series, frozen by hand:
        // Q(0.5) = 2(e^-0.5 - e^-2 + e^-4.5 - ...), Q(1) ~ 0.27,
        // Q(1.5) ~ 0.0222.
        assert!((kolmogorov_survival(0.5) - 0.9639452436648751).abs() < 1e-12);
        assert!((kolmogorov_survival(1.0) - 0.2699996716773545).abs() < 1e-12);
        assert!((kolmogorov_survival(1.5) - 0.02221796261652513).abs() < 1e-12);
        assert_eq!(kolmogorov_survival(0.0), 1.0);
        assert!(kolmogorov_survival(5.0) < 1e-20);
        // Monotone decreasing.
        assert!(ks_p_value(0.02, 1000) > ks_p_value(0.05, 1000));
    }

    #[test]
    fn welford_matches_two_pass() {
        let xs: Vec<f64> = (0..100).map(|i| (i as f64 * 0.37).sin()).collect();
        let m = Moments::from_samples(&xs);
        let mean = xs.iter().sum::<f64>() / xs.len() as f64;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (xs.len() - 1) as f64;
        assert!((m.mean() - mean).abs() < 1e-13);
        assert!((m.variance() - var).abs() < 1e-13);
    }
}
