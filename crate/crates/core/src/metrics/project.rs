//! Two-dimensional principal-component projection.

use nalgebra::{DMatrix, SymmetricEigen};

use super::MetricsError;

#[derive(Clone, Debug, PartialEq)]
pub struct Projection {
    pub coords: Vec<[f64; 2]>,
    /// Covariance eigenvalues (population normalisation, `1/n`), descending.
    pub eigenvalues: Vec<f64>,
    /// The data span fewer than two dimensions; the second coordinate is 0.
    pub rank_deficient: bool,
}

/// Projects mean-centred rows onto the top two principal axes. Each axis is
/// signed so that its largest-magnitude entry is positive.
pub fn project_2d(points: &[Vec<f64>]) -> Result<Projection, MetricsError> {
    let n = points.len();
    if n < 3 {
        return Err(MetricsError::InvalidArgument(format!(
            "projection needs at least 3 points, got {n}"
        )));
    }
    let dim = points[0].len();
    if dim == 0 || points.iter().any(|p| p.len() != dim) {
        return Err(MetricsError::InvalidArgument(
            "points have differing sizes".into(),
        ));
    }
    let x = DMatrix::from_fn(n, dim, |r, c| points[r][c]);
    let mean = x.row_mean();
    let centred = DMatrix::from_fn(n, dim, |r, c| x[(r, c)] - mean[c]);
    let cov = centred.transpose() * &centred / n as f64;
    let eig = SymmetricEigen::new(cov);
    let mut order: Vec<usize> = (0..dim).collect();
    order.sort_by(|&a, &b| {
        eig.eigenvalues[b]
            .total_cmp(&eig.eigenvalues[a])
            .then(a.cmp(&b))
    });
    let eigenvalues: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i].max(0.0)).collect();

    let axis = |k: usize| -> Vec<f64> {
        let Some(&i) = order.get(k) else {
            return vec![0.0; dim];
        };
        let v = eig.eigenvectors.column(i);
        let pivot = (0..dim)
            .max_by(|&a, &b| v[a].abs().total_cmp(&v[b].abs()).then(b.cmp(&a)))
            .expect("dim > 0");
        let sign = if v[pivot] < 0.0 { -1.0 } else { 1.0 };
        v.iter().map(|x| x * sign).collect()
    };
    let top = eigenvalues.first().copied().unwrap_or(0.0);
    let second = eigenvalues.get(1).copied().unwrap_or(0.0);
    let rank_deficient = second <= 1e-12 * top.max(1.0);
    let a1 = axis(0);
    let a2 = if rank_deficient {
        vec![0.0; dim]
    } else {
        axis(1)
    };
    let coords = (0..n)
        .map(|r| {
            let row = centred.row(r);
            let dot = |a: &[f64]| row.iter().zip(a).map(|(x, y)| x * y).sum::<f64>();
            [dot(&a1), dot(&a2)]
        })
        .collect();
    Ok(Projection {
        coords,
        eigenvalues,
        rank_deficient,
    })
}
