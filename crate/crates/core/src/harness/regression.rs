use serde::Serialize;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum RegressionError {
    #[error("need at least {needed} rows for {params} parameters, got {rows}")]
    TooFewRows { rows: usize, params: usize, needed: usize },
    #[error("row {0} has a different number of columns")]
    RaggedRows(usize),
    #[error("{rows} rows but {targets} targets")]
    LengthMismatch { rows: usize, targets: usize },
    #[error("design matrix is rank deficient (column {0})")]
    RankDeficient(usize),
    #[error("non-finite input")]
    NonFinite,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegressionResult {
    /// Intercept first, then one coefficient per design column.
    pub betas: Vec<f64>,
    pub r_squared: f64,
    pub residuals: Vec<f64>,
}

/// Ordinary least squares of `y` on `rows` plus an intercept, solved
/// through the normal equations.
pub fn ols_fit(rows: &[Vec<f64>], y: &[f64]) -> Result<RegressionResult, RegressionError> {
    let cols = rows.first().map_or(0, Vec::len);
    let p = cols + 1;
    if rows.len() < p + 2 {
        return Err(RegressionError::TooFewRows {
            rows: rows.len(),
            params: p,
            needed: p + 2,
        });
    }
    if rows.len() != y.len() {
        return Err(RegressionError::LengthMismatch {
            rows: rows.len(),
            targets: y.len(),
        });
    }
    if let Some(i) = rows.iter().position(|r| r.len() != cols) {
        return Err(RegressionError::RaggedRows(i));
    }
    if !rows.iter().flatten().chain(y).all(|v| v.is_finite()) {
        return Err(RegressionError::NonFinite);
    }

    let design = |r: &[f64], j: usize| if j == 0 { 1.0 } else { r[j - 1] };
    // augmented [XᵀX | Xᵀy]
    let mut a = vec![vec![0.0; p + 1]; p];
    for (r, &t) in rows.iter().zip(y) {
        for i in 0..p {
            let xi = design(r, i);
            for j in 0..p {
                a[i][j] += xi * design(r, j);
            }
            a[i][p] += xi * t;
        }
    }
    let scale: Vec<f64> = (0..p).map(|i| a[i][i]).collect();

    for c in 0..p {
        let pivot = (c..p)
            .max_by(|&i, &j| a[i][c].abs().total_cmp(&a[j][c].abs()))
            .expect("nonempty range");
        if a[pivot][c].abs() <= 1e-10 * scale[c].max(f64::MIN_POSITIVE) {
            return Err(RegressionError::RankDeficient(c));
        }
        a.swap(c, pivot);
        for i in 0..p {
            if i != c {
                let f = a[i][c] / a[c][c];
                for j in c..=p {
                    a[i][j] -= f * a[c][j];
                }
            }
        }
    }
    let betas: Vec<f64> = (0..p).map(|i| a[i][p] / a[i][i]).collect();

    let residuals: Vec<f64> = rows
        .iter()
        .zip(y)
        .map(|(r, &t)| t - (0..p).map(|j| betas[j] * design(r, j)).sum::<f64>())
        .collect();
    let mean = y.iter().sum::<f64>() / y.len() as f64;
    let sst: f64 = y.iter().map(|t| (t - mean).powi(2)).sum();
    let ssr: f64 = residuals.iter().map(|e| e * e).sum();
    let r_squared = if sst == 0.0 { 0.0 } else { 1.0 - ssr / sst };
    Ok(RegressionResult {
        betas,
        r_squared,
        residuals,
    })
}
