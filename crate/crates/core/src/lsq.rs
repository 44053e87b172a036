//! Small dense least-squares solves.

use crate::{Error, Result};

/// Least-squares solution of `X beta = y` by modified Gram-Schmidt QR.
///
/// Returns the coefficients and the residual sum of squares. Fails when a design column
/// is (numerically) in the span of the previous ones.
pub(crate) fn lstsq(rows: &[Vec<f64>], y: &[f64]) -> Result<(Vec<f64>, f64)> {
    let m = rows.len();
    let n = rows.first().map_or(0, Vec::len);
    if m < n || n == 0 {
        return Err(Error::DegenerateFit(format!(
            "{m} observations for {n} parameters"
        )));
    }
    let mut q: Vec<Vec<f64>> = (0..n)
        .map(|j| rows.iter().map(|r| r[j]).collect())
        .collect();
    let mut r = vec![vec![0.0; n]; n];
    for j in 0..n {
        let norm0 = q[j].iter().map(|v| v * v).sum::<f64>().sqrt();
        for k in 0..j {
            let d: f64 = q[k].iter().zip(&q[j]).map(|(a, b)| a * b).sum();
            r[k][j] = d;
            let qk = q[k].clone();
            for (v, w) in q[j].iter_mut().zip(qk) {
                *v -= d * w;
            }
        }
        let norm = q[j].iter().map(|v| v * v).sum::<f64>().sqrt();
        if !(norm > 1e-10 * norm0.max(f64::MIN_POSITIVE)) {
            return Err(Error::DegenerateFit(format!(
                "design column {j} is linearly dependent on the others"
            )));
        }
        r[j][j] = norm;
        for v in q[j].iter_mut() {
            *v /= norm;
        }
    }
    let qty: Vec<f64> = q
        .iter()
        .map(|col| col.iter().zip(y).map(|(a, b)| a * b).sum())
        .collect();
    let mut beta = vec![0.0; n];
    for j in (0..n).rev() {
        let mut s = qty[j];
        for k in j + 1..n {
            s -= r[j][k] * beta[k];
        }
        beta[j] = s / r[j][j];
    }
    let rss = rows
        .iter()
        .zip(y)
        .map(|(row, yi)| (yi - row.iter().zip(&beta).map(|(a, b)| a * b).sum::<f64>()).powi(2))
        .sum();
    Ok((beta, rss))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recovers_exact_line() {
        let rows: Vec<Vec<f64>> = (0..5).map(|i| vec![1.0, i as f64]).collect();
        let y: Vec<f64> = (0..5).map(|i| 2.0 - 0.5 * i as f64).collect();
        let (b, rss) = lstsq(&rows, &y).unwrap();
        assert!((b[0] - 2.0).abs() < 1e-14 && (b[1] + 0.5).abs() < 1e-14 && rss < 1e-26);
    }

    #[test]
    fn duplicate_columns_fail() {
        let rows: Vec<Vec<f64>> = (0..4).map(|i| vec![i as f64, i as f64]).collect();
        assert!(lstsq(&rows, &[0.0, 1.0, 2.0, 3.0]).is_err());
    }
}
