use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Outcome of an orthogonal Procrustes fit.
#[derive(Debug, Clone, PartialEq)]
pub struct Procrustes {
    /// Centered input after rotation, `n x d` row-major.
    pub aligned: Vec<f64>,
    /// Orthogonal `d x d` map applied on the right, row-major.
    pub rotation: Vec<f64>,
    /// Centroid of the reference, to translate `aligned` back if wanted.
    pub reference_centroid: Vec<f64>,
    /// The cross-covariance was rank deficient; `aligned` is the centered
    /// input without rotation.
    pub degenerate: bool,
}

fn centered(points: &[f64], n: usize, d: usize) -> (DMatrix<f64>, Vec<f64>) {
    let m = DMatrix::from_row_slice(n, d, points);
    let centroid: Vec<f64> = (0..d).map(|c| m.column(c).mean()).collect();
    let c = DMatrix::from_fn(n, d, |r, k| m[(r, k)] - centroid[k]);
    (c, centroid)
}

/// Rotates (reflections allowed) the centered point set `x` onto the centered
/// `reference`, minimizing the Frobenius distance. Both sets are `n x d`
/// row-major.
pub fn procrustes_align(x: &[f64], reference: &[f64], d: usize) -> Result<Procrustes> {
    if d == 0 || x.len() % d != 0 {
        return Err(Error::Dimension(format!("{} values do not form points of dimension {d}", x.len())));
    }
    if x.len() != reference.len() {
        return Err(Error::Dimension(format!(
            "point sets have {} and {} values",
            x.len(),
            reference.len()
        )));
    }
    let n = x.len() / d;
    if n < d {
        return Err(Error::InvalidParameter(format!("need at least {d} points, got {n}")));
    }
    if x.iter().chain(reference).any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("Procrustes input".into()));
    }
    let (xc, _) = centered(x, n, d);
    let (rc, reference_centroid) = centered(reference, n, d);
    let cross = xc.transpose() * &rc;
    let svd = cross.svd(true, true);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    let (rotation, degenerate) = if !(smax > 0.0) || smin <= 1e-12 * smax {
        log::warn!("Procrustes cross-covariance is rank deficient; returning the centered input");
        (DMatrix::identity(d, d), true)
    } else {
        let u = svd.u.expect("requested U");
        let v_t = svd.v_t.expect("requested V^T");
        (u * v_t, false)
    };
    let aligned = &xc * &rotation;
    let to_rows = |m: &DMatrix<f64>| -> Vec<f64> {
        (0..m.nrows()).flat_map(|r| (0..m.ncols()).map(move |c| (r, c))).map(|ix| m[ix]).collect()
    };
    Ok(Procrustes {
        aligned: to_rows(&aligned),
        rotation: to_rows(&rotation),
        reference_centroid,
        degenerate,
    })
}
