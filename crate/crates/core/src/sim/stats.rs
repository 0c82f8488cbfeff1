//! Small-sample statistics.

use statrs::distribution::{ContinuousCDF, StudentsT};

pub fn mean(v: &[f64]) -> f64 {
    if v.is_empty() {
        return 0.0;
    }
    v.iter().sum::<f64>() / v.len() as f64
}

/// Sample standard deviation (`n − 1` denominator); zero below two values.
pub fn sample_sd(v: &[f64]) -> f64 {
    if v.len() < 2 {
        return 0.0;
    }
    let m = mean(v);
    (v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (v.len() - 1) as f64).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TTest {
    pub mean_difference: f64,
    pub t: f64,
    /// Two-sided.
    pub p_value: f64,
}

impl TTest {
    pub fn significant(&self, level: f64) -> bool {
        self.p_value < level
    }
}

/// Paired t-test of `a − b`. With zero spread the p-value is 1 for a zero
/// mean difference and 0 otherwise.
pub fn paired_t_test(a: &[f64], b: &[f64]) -> TTest {
    assert_eq!(a.len(), b.len(), "paired samples differ in length");
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    let m = mean(&d);
    let sd = sample_sd(&d);
    let n = d.len();
    if n < 2 || sd == 0.0 {
        let p = if m == 0.0 { 1.0 } else { 0.0 };
        let t = if m == 0.0 { 0.0 } else { m.signum() * f64::INFINITY };
        return TTest { mean_difference: m, t, p_value: p };
    }
    let t = m / (sd / (n as f64).sqrt());
    let dist = StudentsT::new(0.0, 1.0, (n - 1) as f64).expect("positive degrees of freedom");
    TTest { mean_difference: m, t, p_value: 2.0 * (1.0 - dist.cdf(t.abs())) }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matches_a_hand_computed_t() {
        // Differences 1, 2, 3: mean 2, sd 1, t = 2·√3.
        let r = paired_t_test(&[2.0, 4.0, 6.0], &[1.0, 2.0, 3.0]);
        assert!((r.t - 2.0 * 3f64.sqrt()).abs() < 1e-12);
        // Two-sided p for t = 3.4641 with 2 df.
        assert!((r.p_value - 0.07417990).abs() < 1e-6, "{}", r.p_value);
    }

    #[test]
    fn identical_samples_are_not_significant() {
        let r = paired_t_test(&[1.0, 2.0], &[1.0, 2.0]);
        assert_eq!(r.p_value, 1.0);
    }
}
