//! Compensated summation and replication confidence intervals.

use statrs::distribution::{ContinuousCDF, StudentsT};

/// Neumaier-compensated running sum.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn merge(&mut self, other: &CompensatedSum) {
        self.add(other.sum);
        self.add(other.comp);
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

pub fn sum(xs: impl IntoIterator<Item = f64>) -> f64 {
    let mut acc = CompensatedSum::default();
    for x in xs {
        acc.add(x);
    }
    acc.value()
}

pub fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    sum(xs.iter().copied()) / xs.len() as f64
}

/// Unbiased sample variance.
pub fn variance(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return f64::NAN;
    }
    let m = mean(xs);
    sum(xs.iter().map(|x| (x - m) * (x - m))) / (xs.len() - 1) as f64
}

/// Half-width of the two-sided Student-t interval for the mean of `xs`.
/// `None` with fewer than two samples.
pub fn ci_half_width(xs: &[f64], level: f64) -> Option<f64> {
    if xs.len() < 2 {
        return None;
    }
    let dof = (xs.len() - 1) as f64;
    let t = StudentsT::new(0.0, 1.0, dof)
        .expect("dof is positive")
        .inverse_cdf(0.5 + level / 2.0);
    Some(t * (variance(xs) / xs.len() as f64).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn compensated_sum_recovers_small_terms() {
        let xs = [1e16, 1.0, -1e16, 1.0];
        assert_eq!(sum(xs), 2.0);
    }

    #[test]
    fn t_quantile_matches_table() {
        // t_{0.995, 19} = 2.8609
        let xs: Vec<f64> = (0..20).map(|i| i as f64).collect();
        let hw = ci_half_width(&xs, 0.99).unwrap();
        let se = (variance(&xs) / 20.0).sqrt();
        assert!((hw / se - 2.8609).abs() < 1e-3);
        assert!(ci_half_width(&xs[..1], 0.99).is_none());
    }
}
