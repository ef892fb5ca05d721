use super::{check_same_shape, SoftImage};
use crate::error::{Error, Result};

pub const DEFAULT_KLD_EPS: f64 = 1e-8;
pub const DEFAULT_LOSS_ALPHA: f64 = 0.2;

/// Wasserstein-1 distance between two distributions on rows `1..=h`, in
/// row units: `sum_j |CDF_a(j) - CDF_b(j)|`.
pub fn emd_column(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut ca = 0.0;
    let mut cb = 0.0;
    let mut total = 0.0;
    for (x, y) in a.iter().zip(b) {
        ca += x;
        cb += y;
        total += (ca - cb).abs();
    }
    total
}

/// Sum over channels and columns of the per-column EMD.
pub fn emd(a: &SoftImage, b: &SoftImage) -> Result<f64> {
    check_same_shape(a.shape(), b.shape())?;
    let h = a.params().h;
    Ok(a.columns()
        .chunks(h)
        .zip(b.columns().chunks(h))
        .map(|(x, y)| emd_column(x, y))
        .sum())
}

/// Column-wise `KL(p || q)` after adding `eps` to every cell and
/// renormalizing, summed over channels and columns.
pub fn kld(p: &SoftImage, q: &SoftImage, eps: f64) -> Result<f64> {
    check_same_shape(p.shape(), q.shape())?;
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(Error::Config(format!("KLD smoothing eps = {eps} must be positive")));
    }
    let h = p.params().h;
    let norm = 1.0 + h as f64 * eps;
    let mut total = 0.0;
    for (pc, qc) in p.columns().chunks(h).zip(q.columns().chunks(h)) {
        let mut col = 0.0;
        for (x, y) in pc.iter().zip(qc) {
            let ps = (x + eps) / norm;
            let qs = (y + eps) / norm;
            col += ps * (ps / qs).ln();
        }
        // Gibbs: each column term is >= 0; clip rounding residue
        total += col.max(0.0);
    }
    Ok(total)
}

/// `emd(pred, target) + alpha * kld(pred, target)` with the default
/// smoothing.
pub fn loss(pred: &SoftImage, target: &SoftImage, alpha: f64) -> Result<f64> {
    Ok(emd(pred, target)? + alpha * kld(pred, target, DEFAULT_KLD_EPS)?)
}
