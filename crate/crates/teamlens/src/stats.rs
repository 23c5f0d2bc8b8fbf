//! Rank and product-moment correlation between metric and outcome series.
//!
//! No p-values on purpose: the series here span a handful of team-sprints,
//! so the report carries the sample size instead of significance claims.

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum StatsError {
    #[error("series lengths disagree: labels {labels}, x {x}, y {y}")]
    LengthMismatch { labels: usize, x: usize, y: usize },
    #[error("need at least 2 paired observations, got {got}")]
    TooFewPoints { got: usize },
    #[error("non-finite value in series")]
    NonFinite,
    #[error("zero variance")]
    ZeroVariance,
}

/// Two aligned value series with (team, sprint) labels. Undefined values
/// must be dropped pairwise before construction.
#[derive(Debug, Clone, PartialEq)]
pub struct PairedSeries {
    pub labels: Vec<(String, String)>,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

impl PairedSeries {
    pub fn new(
        labels: Vec<(String, String)>,
        x: Vec<f64>,
        y: Vec<f64>,
    ) -> Result<Self, StatsError> {
        if labels.len() != x.len() || x.len() != y.len() {
            return Err(StatsError::LengthMismatch {
                labels: labels.len(),
                x: x.len(),
                y: y.len(),
            });
        }
        if x.len() < 2 {
            return Err(StatsError::TooFewPoints { got: x.len() });
        }
        if x.iter().chain(y.iter()).any(|v| !v.is_finite()) {
            return Err(StatsError::NonFinite);
        }
        Ok(PairedSeries { labels, x, y })
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }
}

/// Average ranks (1-based); tied values share the mean of the rank span
/// they occupy.
pub fn average_ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&i, &j| values[i].partial_cmp(&values[j]).expect("finite values"));

    let mut ranks = vec![0.0; values.len()];
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && values[order[end]] == values[order[start]] {
            end += 1;
        }
        // Ranks start..end (0-based) average to this:
        let mean_rank = (start + end + 1) as f64 / 2.0;
        for &idx in &order[start..end] {
            ranks[idx] = mean_rank;
        }
        start = end;
    }
    ranks
}

fn pearson_slices(x: &[f64], y: &[f64]) -> Result<f64, StatsError> {
    let n = x.len() as f64;
    let mean_x = x.iter().sum::<f64>() / n;
    let mean_y = y.iter().sum::<f64>() / n;
    let mut cov = 0.0;
    let mut var_x = 0.0;
    let mut var_y = 0.0;
    for (&xi, &yi) in x.iter().zip(y) {
        let dx = xi - mean_x;
        let dy = yi - mean_y;
        cov += dx * dy;
        var_x += dx * dx;
        var_y += dy * dy;
    }
    if var_x == 0.0 || var_y == 0.0 {
        return Err(StatsError::ZeroVariance);
    }
    Ok((cov / (var_x * var_y).sqrt()).clamp(-1.0, 1.0))
}

/// Product-moment correlation.
pub fn pearson(series: &PairedSeries) -> Result<f64, StatsError> {
    pearson_slices(&series.x, &series.y)
}

/// Spearman rank correlation: Pearson on average-ranked series.
pub fn spearman(series: &PairedSeries) -> Result<f64, StatsError> {
    let rx = average_ranks(&series.x);
    let ry = average_ranks(&series.y);
    pearson_slices(&rx, &ry)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn series(x: &[f64], y: &[f64]) -> PairedSeries {
        let labels = (0..x.len())
            .map(|i| ("t".to_string(), format!("s{i}")))
            .collect();
        PairedSeries::new(labels, x.to_vec(), y.to_vec()).unwrap()
    }

    #[test]
    fn ranks_average_over_ties() {
        assert_eq!(average_ranks(&[1.0, 2.0, 2.0, 4.0]), vec![1.0, 2.5, 2.5, 4.0]);
        assert_eq!(average_ranks(&[3.0, 1.0, 2.0]), vec![3.0, 1.0, 2.0]);
        assert_eq!(average_ranks(&[5.0, 5.0, 5.0]), vec![2.0, 2.0, 2.0]);
    }

    #[test]
    fn monotone_series_hit_the_extremes() {
        let up = series(&[1.0, 2.0, 3.0, 4.0], &[10.0, 20.0, 30.0, 40.0]);
        assert_eq!(spearman(&up).unwrap(), 1.0);
        let down = series(&[1.0, 2.0, 3.0, 4.0], &[9.0, 6.0, 3.0, 1.0]);
        assert_eq!(spearman(&down).unwrap(), -1.0);
    }

    #[test]
    fn tied_fixture_matches_definitional_oracle() {
        let s = series(&[1.0, 2.0, 2.0, 4.0], &[1.0, 3.0, 2.0, 4.0]);
        let rho = spearman(&s).unwrap();
        // Oracle: rank both series by hand, then plain Pearson.
        // ranks x = [1, 2.5, 2.5, 4], ranks y = [1, 3, 2, 4]
        // cov = 4.5, var_x = 4.5, var_y = 5 -> rho = sqrt(0.9).
        let expected = (0.9_f64).sqrt();
        assert!((rho - expected).abs() < 1e-12, "{rho} vs {expected}");
    }

    #[test]
    fn pearson_is_exact_on_affine_series() {
        let s = series(&[1.0, 2.0, 3.0], &[3.0, 5.0, 7.0]); // y = 2x + 1
        assert_eq!(pearson(&s).unwrap(), 1.0);
        let neg = series(&[1.0, 2.0, 3.0], &[-1.0, -2.0, -3.0]);
        assert_eq!(pearson(&neg).unwrap(), -1.0);
    }

    #[test]
    fn pearson_fixture_matches_definitional_oracle() {
        let x = [0.2, 1.4, 2.5, 3.1, 4.9, 5.0];
        let y = [1.1, 0.9, 2.8, 2.4, 4.0, 4.4];
        let r = pearson(&series(&x, &y)).unwrap();
        // Independent route: expanded sums formula.
        let n = x.len() as f64;
        let sx: f64 = x.iter().sum();
        let sy: f64 = y.iter().sum();
        let sxy: f64 = x.iter().zip(&y).map(|(a, b)| a * b).sum();
        let sxx: f64 = x.iter().map(|a| a * a).sum();
        let syy: f64 = y.iter().map(|a| a * a).sum();
        let expected =
            (n * sxy - sx * sy) / ((n * sxx - sx * sx).sqrt() * (n * syy - sy * sy).sqrt());
        assert!((r - expected).abs() < 1e-12, "{r} vs {expected}");
    }

    #[test]
    fn constant_series_error() {
        let s = series(&[1.0, 1.0, 1.0], &[1.0, 2.0, 3.0]);
        assert_eq!(spearman(&s).unwrap_err(), StatsError::ZeroVariance);
        assert_eq!(pearson(&s).unwrap_err(), StatsError::ZeroVariance);
    }

    #[test]
    fn construction_guards() {
        assert!(matches!(
            PairedSeries::new(vec![], vec![1.0], vec![1.0]),
            Err(StatsError::LengthMismatch { .. })
        ));
        assert!(matches!(
            PairedSeries::new(vec![("t".into(), "s".into())], vec![1.0], vec![2.0]),
            Err(StatsError::TooFewPoints { .. })
        ));
        let labels = vec![("t".into(), "a".into()), ("t".into(), "b".into())];
        assert!(matches!(
            PairedSeries::new(labels, vec![f64::NAN, 1.0], vec![1.0, 2.0]),
            Err(StatsError::NonFinite)
        ));
    }

    #[test]
    fn correlations_are_symmetric_in_x_and_y() {
        let x = [3.0, 1.0, 4.0, 1.5, 9.0];
        let y = [2.0, 7.0, 1.0, 8.0, 2.8];
        let fwd = series(&x, &y);
        let rev = series(&y, &x);
        assert_eq!(spearman(&fwd).unwrap(), spearman(&rev).unwrap());
        assert_eq!(pearson(&fwd).unwrap(), pearson(&rev).unwrap());
    }
}
