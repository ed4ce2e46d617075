//! Compensated floating-point summation.

/// Kahan–Neumaier compensated accumulator.
///
/// Long series of near-equal terms (the escape series can run to 10^8 terms)
/// lose low-order bits under naive accumulation; the running compensation
/// keeps the error independent of the term count.
#[derive(Debug, Clone, Copy, Default)]
pub struct KahanSum {
    sum: f64,
    comp: f64,
}

impl KahanSum {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, value: f64) {
        let t = self.sum + value;
        if self.sum.abs() >= value.abs() {
            self.comp += (self.sum - t) + value;
        } else {
            self.comp += (value - t) + self.sum;
        }
        self.sum = t;
    }

    #[inline]
    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

impl std::iter::FromIterator<f64> for KahanSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut acc = Self::new();
        for v in iter {
            acc.add(v);
        }
        acc
    }
}

/// Sample mean and standard deviation (unbiased variance estimate).
pub fn mean_sd(samples: &[f64]) -> (f64, f64) {
    let n = samples.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = samples.iter().copied().collect::<KahanSum>().value() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let ss = samples
        .iter()
        .map(|&x| (x - mean) * (x - mean))
        .collect::<KahanSum>()
        .value();
    (mean, (ss / (n - 1) as f64).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn compensation_beats_naive() {
        let mut acc = KahanSum::new();
        acc.add(1e16);
        for _ in 0..10_000 {
            acc.add(0.1);
        }
        acc.add(-1e16);
        assert!((acc.value() - 1000.0).abs() < 1e-6);
    }

    #[test]
    fn mean_sd_basics() {
        let (m, s) = mean_sd(&[1.0, 2.0, 3.0, 4.0]);
        assert!((m - 2.5).abs() < 1e-15);
        assert!((s - (5.0f64 / 3.0).sqrt()).abs() < 1e-15);
    }
}
