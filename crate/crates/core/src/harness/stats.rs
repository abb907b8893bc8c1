use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{Error, Result};

/// Mean of final metrics with a t-based 95% confidence half-width.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Summary {
    pub mean: f64,
    /// `None` with fewer than two runs.
    pub half_width: Option<f64>,
    pub runs: usize,
}

pub fn t_quantile_975(df: usize) -> f64 {
    StudentsT::new(0.0, 1.0, df as f64)
        .expect("positive degrees of freedom")
        .inverse_cdf(0.975)
}

pub fn aggregate_runs(values: &[f64]) -> Result<Summary> {
    if values.is_empty() {
        return Err(Error::Empty("no run results to aggregate"));
    }
    let n = values.len();
    let mean = values.iter().sum::<f64>() / n as f64;
    let half_width = (n >= 2).then(|| {
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        t_quantile_975(n - 1) * var.sqrt() / (n as f64).sqrt()
    });
    Ok(Summary {
        mean,
        half_width,
        runs: n,
    })
}

pub fn median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let mid = v.len() / 2;
    Some(if v.len().is_multiple_of(2) {
        (v[mid - 1] + v[mid]) / 2.0
    } else {
        v[mid]
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_results() {
        let s = aggregate_runs(&[1.0; 4]).unwrap();
        assert_eq!(s.mean, 1.0);
        assert_eq!(s.half_width, Some(0.0));
        assert_eq!(s.runs, 4);
    }

    #[test]
    fn two_results_use_one_degree_of_freedom() {
        // t(0.975, 1) * s / sqrt(2) with s = sqrt(2)
        let s = aggregate_runs(&[0.0, 2.0]).unwrap();
        assert_eq!(s.mean, 1.0);
        assert!((s.half_width.unwrap() - 12.706).abs() < 1e-3);
    }

    #[test]
    fn single_and_empty() {
        let s = aggregate_runs(&[3.5]).unwrap();
        assert_eq!((s.mean, s.half_width), (3.5, None));
        assert!(aggregate_runs(&[]).is_err());
    }

    #[test]
    fn t_table() {
        assert!((t_quantile_975(5) - 2.5706).abs() < 1e-4);
        assert!((t_quantile_975(19) - 2.0930).abs() < 1e-4);
    }

    #[test]
    fn medians() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), Some(2.0));
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), Some(2.5));
        assert_eq!(median(&[]), None);
    }
}
