use rayon::prelude::*;

use crate::error::{Error, Result};

/// `max_{a ∈ A} min_{b ∈ B} |a - b|` by exhaustive search.
pub fn directed_hausdorff<P: AsRef<[f64]> + Sync>(a: &[P], b: &[P]) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::EmptySet("Hausdorff distance needs nonempty sets".into()));
    }
    let dim = a[0].as_ref().len();
    if let Some(p) = a.iter().chain(b).find(|p| p.as_ref().len() != dim) {
        return Err(Error::DimensionMismatch {
            expected: dim,
            found: p.as_ref().len(),
        });
    }
    let worst_sq = a
        .par_iter()
        .map(|p| {
            let p = p.as_ref();
            b.iter()
                .map(|q| {
                    p.iter()
                        .zip(q.as_ref())
                        .map(|(x, y)| (x - y) * (x - y))
                        .sum::<f64>()
                })
                .fold(f64::INFINITY, f64::min)
        })
        .reduce(|| 0.0, f64::max);
    Ok(worst_sq.sqrt())
}

/// Symmetric Hausdorff distance between two finite point sets.
pub fn hausdorff_distance<P: AsRef<[f64]> + Sync>(a: &[P], b: &[P]) -> Result<f64> {
    Ok(directed_hausdorff(a, b)?.max(directed_hausdorff(b, a)?))
}
