use crate::error::{Error, Result};

/// Absolute-error fallback threshold for near-zero gradients.
const TINY: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FiniteDifferenceReport {
    pub max_relative_error: f64,
    /// Parameter index where the maximum was attained.
    pub worst_index: usize,
    pub analytic: f64,
    pub numeric: f64,
}

/// Relative error between two gradient estimates, absolute when both are tiny.
pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    let diff = (analytic - numeric).abs();
    let scale = analytic.abs().max(numeric.abs());
    if scale < TINY {
        diff
    } else {
        diff / scale
    }
}

/// Compares `analytic` against central differences `(f(p+h) - f(p-h)) / 2h`
/// of `loss` for every entry of `params`.
pub fn finite_difference_check<F>(
    mut loss: F,
    params: &[f64],
    analytic: &[f64],
    step: f64,
) -> Result<FiniteDifferenceReport>
where
    F: FnMut(&[f64]) -> f64,
{
    if params.len() != analytic.len() {
        return Err(Error::shape(format!(
            "{} parameters but {} analytic gradients",
            params.len(),
            analytic.len()
        )));
    }
    if !(step > 0.0) {
        return Err(Error::invalid(format!("finite-difference step must be positive, got {step}")));
    }
    let base = loss(params);
    if !base.is_finite() {
        return Err(Error::numeric("loss at base point", base.to_string()));
    }
    let mut report = FiniteDifferenceReport {
        max_relative_error: 0.0,
        worst_index: 0,
        analytic: analytic.first().copied().unwrap_or(0.0),
        numeric: 0.0,
    };
    let mut probe = params.to_vec();
    for i in 0..params.len() {
        let orig = probe[i];
        probe[i] = orig + step;
        let up = loss(&probe);
        probe[i] = orig - step;
        let down = loss(&probe);
        probe[i] = orig;
        if !up.is_finite() || !down.is_finite() {
            return Err(Error::numeric(
                format!("loss perturbed at parameter {i}"),
                format!("f(+h) = {up}, f(-h) = {down}"),
            ));
        }
        let numeric = (up - down) / (2.0 * step);
        let err = relative_error(analytic[i], numeric);
        if err > report.max_relative_error || i == 0 {
            report = FiniteDifferenceReport {
                max_relative_error: err,
                worst_index: i,
                analytic: analytic[i],
                numeric,
            };
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadratic() {
        let r = finite_difference_check(|p| p[0] * p[0], &[3.0], &[6.0], 1e-5).unwrap();
        assert!(r.max_relative_error <= 1e-6, "{r:?}");
    }

    #[test]
    fn constant() {
        let r = finite_difference_check(|_| 4.2, &[1.0, -2.0], &[0.0, 0.0], 1e-5).unwrap();
        assert!(r.max_relative_error <= 1e-8);
    }

    #[test]
    fn detects_wrong_gradient() {
        let r = finite_difference_check(|p| p[0] * p[1], &[2.0, 3.0], &[3.0, 2.5], 1e-5).unwrap();
        assert_eq!(r.worst_index, 1);
        assert!(r.max_relative_error > 0.1);
    }

    #[test]
    fn non_finite_loss_is_an_error() {
        let e = finite_difference_check(|p| (p[0]).ln(), &[0.0], &[1.0], 1e-5).unwrap_err();
        assert!(matches!(e, Error::Numeric { .. }));
    }
}
