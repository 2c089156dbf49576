//! Central finite-difference verification of analytic gradients.
//!
//! The loss is returned as `f64` so that a 32-bit gradient can be checked
//! against differences of a loss evaluated in higher precision.

use crate::error::{Error, Result};
use crate::tensor::Real;

/// `|a - n| / max(1e-12, |a| + |n|)`.
pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / (analytic.abs() + numeric.abs()).max(1e-12)
}

#[derive(Clone, Debug, PartialEq)]
pub struct GradCheck {
    /// `‖a − n‖ / (‖a‖ + ‖n‖)` over all checked entries.
    pub relative_error: f64,
    /// Largest per-entry [`relative_error`].
    pub max_entry_error: f64,
    /// Parameter index of the largest per-entry error.
    pub worst_index: Option<usize>,
    pub analytic: Vec<f64>,
    pub numeric: Vec<f64>,
    /// Entries left out because every step tried straddled a kink.
    pub skipped: Vec<usize>,
}

/// Step reductions tried by [`grad_check_piecewise`] before an entry is skipped.
pub const KINK_RETRIES: usize = 3;

/// Checks every parameter. See [`grad_check_at`].
pub fn grad_check<T, F, G>(params: &[T], epsilon: f64, loss: F, gradient: G) -> Result<GradCheck>
where
    T: Real,
    F: FnMut(&[T]) -> f64,
    G: FnOnce(&[T]) -> Vec<T>,
{
    let all: Vec<usize> = (0..params.len()).collect();
    grad_check_at(params, &all, epsilon, loss, gradient)
}

/// Compares `gradient(params)` with central differences of `loss` at the
/// given parameter indices.
pub fn grad_check_at<T, F, G>(
    params: &[T],
    indices: &[usize],
    epsilon: f64,
    mut loss: F,
    gradient: G,
) -> Result<GradCheck>
where
    T: Real,
    F: FnMut(&[T]) -> f64,
    G: FnOnce(&[T]) -> Vec<T>,
{
    grad_check_piecewise(params, indices, epsilon, |p| (loss(p), ()), gradient)
}

/// [`grad_check_at`] for piecewise-smooth losses. `evaluate` returns the loss
/// and a label of the smooth piece containing its argument (for a ReLU
/// network, the sign pattern of every pre-activation). When either side of a
/// difference lands on a different piece than the unperturbed parameters, the
/// step is divided by 10, up to [`KINK_RETRIES`] times; entries that still
/// straddle a kink are listed in `skipped` and left out of the errors.
pub fn grad_check_piecewise<T, R, F, G>(
    params: &[T],
    indices: &[usize],
    epsilon: f64,
    mut evaluate: F,
    gradient: G,
) -> Result<GradCheck>
where
    T: Real,
    R: PartialEq,
    F: FnMut(&[T]) -> (f64, R),
    G: FnOnce(&[T]) -> Vec<T>,
{
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "epsilon must be positive, got {epsilon}"
        )));
    }
    let grad = gradient(params);
    if grad.len() != params.len() {
        return Err(Error::shape(format!(
            "gradient has {} entries for {} parameters",
            grad.len(),
            params.len()
        )));
    }
    if let Some(&i) = indices.iter().find(|&&i| i >= params.len()) {
        return Err(Error::InvalidArgument(format!(
            "parameter index {i} out of range"
        )));
    }
    let mut probe = params.to_vec();
    let mut report = GradCheck {
        relative_error: 0.0,
        max_entry_error: 0.0,
        worst_index: None,
        analytic: Vec::with_capacity(indices.len()),
        numeric: Vec::with_capacity(indices.len()),
        skipped: Vec::new(),
    };
    let (_, piece) = evaluate(&probe);
    for &i in indices {
        let orig = probe[i];
        let a = grad[i].as_f64();
        let mut numeric = None;
        let mut eps = epsilon;
        for _ in 0..=KINK_RETRIES {
            let (up, down) = (orig + T::lit(eps), orig - T::lit(eps));
            probe[i] = up;
            let (plus, piece_up) = evaluate(&probe);
            probe[i] = down;
            let (minus, piece_down) = evaluate(&probe);
            probe[i] = orig;
            if !plus.is_finite() || !minus.is_finite() || !a.is_finite() {
                return Err(Error::NonFinite(format!(
                    "gradient check evaluation at parameter {i}"
                )));
            }
            if piece_up == piece && piece_down == piece {
                // divide by the step actually taken after rounding
                numeric = Some((plus - minus) / (up.as_f64() - down.as_f64()));
                break;
            }
            eps /= 10.0;
        }
        let Some(numeric) = numeric else {
            report.skipped.push(i);
            continue;
        };
        let e = relative_error(a, numeric);
        if report.worst_index.is_none() || e > report.max_entry_error {
            report.max_entry_error = e;
            report.worst_index = Some(i);
        }
        report.analytic.push(a);
        report.numeric.push(numeric);
    }
    let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
    let diff: Vec<f64> = report.analytic.iter().zip(&report.numeric).map(|(a, n)| a - n).collect();
    report.relative_error = norm(&diff) / (norm(&report.analytic) + norm(&report.numeric)).max(1e-12);
    Ok(report)
}
