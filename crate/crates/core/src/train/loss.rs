use crate::error::{Error, Result};

/// Negative log-likelihood of label `y` under prediction `y_hat`, with
/// `y_hat` clamped to `[eps, 1 - eps]`. Bounded above by `-ln(eps)`.
pub fn bce_loss(y_hat: f64, y: f64, eps: f64) -> Result<f64> {
    if y != 0.0 && y != 1.0 {
        return Err(Error::invalid(format!("label must be 0 or 1, got {y}")));
    }
    let p = y_hat.clamp(eps, 1.0 - eps);
    Ok(if y == 1.0 { -p.ln() } else { -(1.0 - p).ln() })
}

/// Derivative of [`bce_loss`] with respect to the pre-sigmoid logit.
/// Zero where the clamp is active, since the loss is flat there.
#[inline]
pub fn bce_grad_logit(y_hat: f64, y: f64, eps: f64) -> f64 {
    if y_hat < eps || y_hat > 1.0 - eps {
        0.0
    } else {
        y_hat - y
    }
}
