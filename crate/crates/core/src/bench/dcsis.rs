//! Distance-correlation screening: rank variables by their sample distance
//! correlation with the response.

use crate::data::Dataset;
use crate::kings::rank_variables;
use crate::par;

/// Double-centered pairwise distance matrix, row-major `n x n`.
fn centered_distances(v: &[f64]) -> Vec<f64> {
    let n = v.len();
    let mut a = vec![0.0; n * n];
    for k in 0..n {
        for l in 0..n {
            a[k * n + l] = (v[k] - v[l]).abs();
        }
    }
    let row: Vec<f64> = (0..n).map(|k| a[k * n..(k + 1) * n].iter().sum::<f64>() / n as f64).collect();
    let grand = row.iter().sum::<f64>() / n as f64;
    // distance matrices are symmetric, so column means equal row means
    for k in 0..n {
        for l in 0..n {
            a[k * n + l] += grand - row[k] - row[l];
        }
    }
    a
}

fn mean_product(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>() / a.len() as f64
}

fn dcor_from(a: &[f64], va: f64, b: &[f64], vb: f64) -> f64 {
    if va <= 0.0 || vb <= 0.0 {
        return 0.0;
    }
    let cov = mean_product(a, b).max(0.0);
    (cov / (va * vb).sqrt()).sqrt()
}

/// Sample distance correlation; 0 when either sample is constant.
pub fn distance_correlation(x: &[f64], y: &[f64]) -> f64 {
    assert_eq!(x.len(), y.len());
    let a = centered_distances(x);
    let b = centered_distances(y);
    dcor_from(&a, mean_product(&a, &a), &b, mean_product(&b, &b))
}

/// Distance correlation of every variable with the response.
pub fn dc_sis_scores(data: &Dataset) -> Vec<f64> {
    let b = centered_distances(data.y());
    let vb = mean_product(&b, &b);
    par::map_range(data.p(), |v| {
        let a = centered_distances(data.column(v));
        dcor_from(&a, mean_product(&a, &a), &b, vb)
    })
}

/// Variables by descending distance correlation; ties by index.
pub fn dc_sis(data: &Dataset) -> Vec<usize> {
    rank_variables(&dc_sis_scores(data))
}
