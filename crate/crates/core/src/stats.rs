//! Compensated summation and ensemble summary statistics.

/// Neumaier-compensated running sum.
#[derive(Clone, Copy, Debug, Default)]
pub struct CompensatedSum {
    sum: f64,
    carry: f64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.carry += (self.sum - t) + x;
        } else {
            self.carry += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.carry
    }
}

impl FromIterator<f64> for CompensatedSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut s = CompensatedSum::new();
        for x in iter {
            s.add(x);
        }
        s
    }
}

pub fn compensated_sum<I: IntoIterator<Item = f64>>(iter: I) -> f64 {
    iter.into_iter().collect::<CompensatedSum>().value()
}

/// Mean and standard error of the mean. The standard error is `None` for
/// fewer than two samples.
pub fn mean_and_se(samples: &[f64]) -> (f64, Option<f64>) {
    let n = samples.len();
    if n == 0 {
        return (f64::NAN, None);
    }
    let mean = compensated_sum(samples.iter().copied()) / n as f64;
    if n < 2 {
        return (mean, None);
    }
    let ss = compensated_sum(samples.iter().map(|x| (x - mean) * (x - mean)));
    let var = ss / (n - 1) as f64;
    (mean, Some((var / n as f64).sqrt()))
}

/// Ordinary least-squares fit `y = intercept + slope x`. Returns
/// `(slope, intercept, rms_residual)`.
pub fn ols(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let w = vec![1.0; x.len()];
    weighted_ols(x, y, &w)
}

/// Weighted least squares with weights `w` (typically inverse variances).
pub fn weighted_ols(x: &[f64], y: &[f64], w: &[f64]) -> (f64, f64, f64) {
    assert_eq!(x.len(), y.len());
    assert_eq!(x.len(), w.len());
    let sw = compensated_sum(w.iter().copied());
    let mx = compensated_sum(x.iter().zip(w).map(|(a, b)| a * b)) / sw;
    let my = compensated_sum(y.iter().zip(w).map(|(a, b)| a * b)) / sw;
    let sxy = compensated_sum(
        x.iter()
            .zip(y)
            .zip(w)
            .map(|((a, b), c)| c * (a - mx) * (b - my)),
    );
    let sxx = compensated_sum(x.iter().zip(w).map(|(a, c)| c * (a - mx) * (a - mx)));
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rss = compensated_sum(
        x.iter()
            .zip(y)
            .zip(w)
            .map(|((a, b), c)| c * (b - intercept - slope * a).powi(2)),
    );
    (slope, intercept, (rss / sw).sqrt())
}
