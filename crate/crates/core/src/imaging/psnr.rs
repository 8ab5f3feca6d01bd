use super::image::Image;
use crate::error::{Error, Result};

/// Value reported for pairs that match exactly.
pub const PSNR_CAP: f64 = 100.0;

/// `-10 log10(mean squared error)` for images with peak value 1, capped at
/// [`PSNR_CAP`].
pub fn psnr(pred: &Image, target: &Image) -> Result<f64> {
    if (pred.height, pred.width, pred.channels) != (target.height, target.width, target.channels) {
        return Err(Error::invalid(format!(
            "shape mismatch: {}x{}x{} vs {}x{}x{}",
            pred.channels, pred.height, pred.width, target.channels, target.height, target.width
        )));
    }
    let sse: f64 = pred.data.iter().zip(&target.data).map(|(a, b)| (a - b) * (a - b)).sum();
    if sse == 0.0 {
        return Ok(PSNR_CAP);
    }
    Ok((-10.0 * (sse / pred.data.len() as f64).log10()).min(PSNR_CAP))
}

/// Mean PSNR over a batch of pairs.
pub fn psnr_batch(preds: &[Image], targets: &[Image]) -> Result<f64> {
    if preds.len() != targets.len() || preds.is_empty() {
        return Err(Error::invalid(format!(
            "need equally many predictions and targets, got {} and {}",
            preds.len(),
            targets.len()
        )));
    }
    let mut total = 0.0;
    for (p, t) in preds.iter().zip(targets) {
        total += psnr(p, t)?;
    }
    Ok(total / preds.len() as f64)
}
