use num_complex::Complex64;

use crate::error::{Error, Result};

/// `||pred - target|| / ||target||` and its gradient with respect to `pred`
/// (real and imaginary parts packed as a complex number).
pub fn rel_l2_with_grad(pred: &[Complex64], target: &[Complex64]) -> Result<(f64, Vec<Complex64>)> {
    if pred.len() != target.len() {
        return Err(Error::invalid(format!(
            "prediction has {} entries, target {}",
            pred.len(),
            target.len()
        )));
    }
    let tn = target.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    if tn == 0.0 {
        return Err(Error::invalid("target has zero norm"));
    }
    let diff: Vec<Complex64> = pred.iter().zip(target).map(|(p, t)| p - t).collect();
    let dn = diff.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    let grad = if dn == 0.0 {
        vec![Complex64::new(0.0, 0.0); diff.len()]
    } else {
        diff.iter().map(|d| d / (dn * tn)).collect()
    };
    Ok((dn / tn, grad))
}

/// Sum over the batch of per-sample relative errors.
pub fn loss_rel_l2<P: AsRef<[Complex64]>, T: AsRef<[Complex64]>>(preds: &[P], targets: &[T]) -> Result<f64> {
    if preds.len() != targets.len() {
        return Err(Error::invalid("batch sizes differ"));
    }
    let mut total = 0.0;
    for (p, t) in preds.iter().zip(targets) {
        total += rel_l2_with_grad(p.as_ref(), t.as_ref())?.0;
    }
    Ok(total)
}
