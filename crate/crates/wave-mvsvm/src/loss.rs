//! The wave loss: a bounded, smooth, asymmetric loss for margin violations.
//!
//! The plain form is
//!
//! ```text
//! L(h) = (1/λ) · (1 − 1/(1 + λ h² exp(a h)))
//! ```
//!
//! with bounding parameter `λ > 0` (the loss never reaches `1/λ`) and shape
//! parameter `a`. Inside the training objective the per-sample exponent picks
//! up the label, `exp(a ζ y)`; [`labeled_wave_loss`] evaluates that variant
//! so callers never have to fold the label into `a` themselves.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Exponent arguments are clamped to this magnitude before `exp`. Beyond it
/// the loss is saturated at 0 or 1/λ to well below 1e-20, so clamping only
/// removes overflow, not signal.
const EXP_CLAMP: f64 = 50.0;

/// Parameters of the wave loss.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WaveParams {
    /// Bounding parameter λ; the loss lives in `[0, 1/λ)`.
    pub lambda: f64,
    /// Shape parameter a; controls steepness and asymmetry.
    pub a: f64,
}

impl WaveParams {
    /// Validates `lambda > 0` and `a` finite.
    pub fn new(lambda: f64, a: f64) -> Result<Self> {
        if !(lambda > 0.0) || !lambda.is_finite() {
            return Err(Error::Domain(format!(
                "wave loss lambda must be positive and finite, got {lambda}"
            )));
        }
        if !a.is_finite() {
            return Err(Error::Domain(format!(
                "wave loss shape parameter must be finite, got {a}"
            )));
        }
        Ok(Self { lambda, a })
    }

    pub(crate) fn validate(&self) -> Result<()> {
        Self::new(self.lambda, self.a).map(|_| ())
    }
}

#[inline]
fn clamped_exp(x: f64) -> f64 {
    x.clamp(-EXP_CLAMP, EXP_CLAMP).exp()
}

/// Raw evaluation with the label already folded into the exponent sign.
#[inline]
pub(crate) fn loss_raw(h: f64, lambda: f64, exponent_scale: f64) -> f64 {
    let g = lambda * h * h * clamped_exp(exponent_scale * h);
    (1.0 - 1.0 / (1.0 + g)) / lambda
}

/// Raw derivative with respect to `h`.
#[inline]
pub(crate) fn grad_raw(h: f64, lambda: f64, exponent_scale: f64) -> f64 {
    let ex = clamped_exp(exponent_scale * h);
    let h2 = h * h;
    let g = lambda * h2 * ex;
    if !g.is_finite() {
        return 0.0; // fully saturated: the true derivative underflows
    }
    let num = (2.0 * h + exponent_scale * h2) * ex;
    if !num.is_finite() {
        return 0.0;
    }
    let den = (1.0 + g) * (1.0 + g);
    num / den
}

fn check_finite(name: &str, x: f64) -> Result<()> {
    if x.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("{name} must be finite, got {x}")))
    }
}

fn check_label(y: f64) -> Result<()> {
    if y == 1.0 || y == -1.0 {
        Ok(())
    } else {
        Err(Error::Input(format!("label must be +1 or -1, got {y}")))
    }
}

/// Wave loss `(1/λ)(1 − 1/(1 + λ h² e^{a h}))`; lives in `[0, 1/λ)`.
pub fn wave_loss(h: f64, p: &WaveParams) -> Result<f64> {
    p.validate()?;
    check_finite("h", h)?;
    Ok(loss_raw(h, p.lambda, p.a))
}

/// Derivative of [`wave_loss`] with respect to `h`:
/// `(2h + a h²) e^{a h} / (1 + λ h² e^{a h})²`.
pub fn wave_loss_grad(h: f64, p: &WaveParams) -> Result<f64> {
    p.validate()?;
    check_finite("h", h)?;
    Ok(grad_raw(h, p.lambda, p.a))
}

/// Per-sample objective term `(1/λ)(1 − 1/(1 + λ ζ² e^{a ζ y}))`.
///
/// Identical to [`wave_loss`] with the label folded into the shape
/// parameter: `labeled_wave_loss(ζ, y, {λ, a}) = wave_loss(ζ, {λ, a·y})`.
pub fn labeled_wave_loss(zeta: f64, y: f64, p: &WaveParams) -> Result<f64> {
    p.validate()?;
    check_finite("zeta", zeta)?;
    check_label(y)?;
    Ok(loss_raw(zeta, p.lambda, p.a * y))
}

/// Derivative of [`labeled_wave_loss`] with respect to `ζ`:
/// `ζ e^{a y ζ} (2 + a y ζ) / (1 + λ ζ² e^{a y ζ})²`.
pub fn labeled_wave_loss_grad(zeta: f64, y: f64, p: &WaveParams) -> Result<f64> {
    p.validate()?;
    check_finite("zeta", zeta)?;
    check_label(y)?;
    Ok(grad_raw(zeta, p.lambda, p.a * y))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn wp(lambda: f64, a: f64) -> WaveParams {
        WaveParams::new(lambda, a).unwrap()
    }

    /// Central finite difference of the loss, the independent oracle for the
    /// analytic gradients.
    fn fd_grad(h: f64, p: &WaveParams, y: f64) -> f64 {
        let step = 1e-5;
        let up = loss_raw(h + step, p.lambda, p.a * y);
        let dn = loss_raw(h - step, p.lambda, p.a * y);
        (up - dn) / (2.0 * step)
    }

    fn grad_close(analytic: f64, fd: f64) {
        let scale = analytic.abs().max(fd.abs()).max(1.0);
        assert!(
            (analytic - fd).abs() <= 1e-6 * scale,
            "analytic {analytic} vs finite difference {fd}"
        );
    }

    #[test]
    fn loss_at_zero_is_zero() {
        assert_eq!(wave_loss(0.0, &wp(1.0, 1.0)).unwrap(), 0.0);
    }

    #[test]
    fn loss_unit_case_matches_closed_form() {
        // 1 − 1/(1+e) = e/(1+e)
        let v = wave_loss(1.0, &wp(1.0, 1.0)).unwrap();
        assert_relative_eq!(v, 0.731059, epsilon = 1e-6);
        assert_relative_eq!(v, std::f64::consts::E / (1.0 + std::f64::consts::E), epsilon = 1e-12);
    }

    #[test]
    fn loss_saturates_at_ceiling() {
        let v = wave_loss(1e6, &wp(2.0, 1.0)).unwrap();
        assert!((v - 0.5).abs() <= 1e-9);
    }

    #[test]
    fn grad_at_zero_is_zero() {
        assert_eq!(wave_loss_grad(0.0, &wp(0.3, 1.7)).unwrap(), 0.0);
        assert_eq!(labeled_wave_loss_grad(0.0, -1.0, &wp(0.3, 1.7)).unwrap(), 0.0);
    }

    #[test]
    fn grad_hand_case() {
        // λ=1, a=0, h=1: g = 1, numerator 2, (1+1)² = 4 → 0.5
        let v = wave_loss_grad(1.0, &wp(1.0, 0.0)).unwrap();
        assert!((v - 0.5).abs() <= 1e-9);
        let v = labeled_wave_loss_grad(1.0, 1.0, &wp(1.0, 0.0)).unwrap();
        assert!((v - 0.5).abs() <= 1e-9);
    }

    #[test]
    fn grad_matches_finite_difference_spot() {
        let p = wp(0.6, 1.5);
        let analytic = wave_loss_grad(0.3, &p).unwrap();
        let fd = fd_grad(0.3, &p, 1.0);
        assert_relative_eq!(analytic, fd, max_relative = 1e-6);
    }

    #[test]
    fn grad_matches_finite_difference_on_grid() {
        for &lambda in &[0.2, 0.4, 0.6, 0.8, 1.0] {
            for &a in &[0.0, 0.5, 1.0, 1.5, 2.0] {
                let p = wp(lambda, a);
                for k in 0..=200 {
                    let h = -10.0 + 0.1 * k as f64;
                    grad_close(wave_loss_grad(h, &p).unwrap(), fd_grad(h, &p, 1.0));
                    for &y in &[1.0, -1.0] {
                        grad_close(
                            labeled_wave_loss_grad(h, y, &p).unwrap(),
                            fd_grad(h, &p, y),
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn labeled_loss_reduces_to_plain_loss() {
        let p = wp(0.7, 1.3);
        for k in -20..=20 {
            let z = 0.37 * k as f64;
            assert_eq!(
                labeled_wave_loss(z, 1.0, &p).unwrap(),
                wave_loss(z, &p).unwrap()
            );
            assert_eq!(
                labeled_wave_loss(z, -1.0, &p).unwrap(),
                wave_loss(z, &wp(0.7, -1.3)).unwrap()
            );
        }
        assert_eq!(labeled_wave_loss(0.0, 1.0, &p).unwrap(), 0.0);
    }

    #[test]
    fn pointwise_convergence_to_step_loss() {
        // a = 100 pushes the loss toward the 0–1/λ step; λ = 1.
        let p = wp(1.0, 100.0);
        for k in 1..=2000 {
            let h = 0.1 + 0.05 * k as f64;
            let loss_pos = wave_loss(h, &p).unwrap();
            let loss_neg = wave_loss(-h, &p).unwrap();
            assert!((loss_pos - 1.0).abs() < 0.01, "h={h}: {loss_pos}");
            assert!(loss_neg < 0.01, "h={h}: {loss_neg}");
        }
    }

    #[test]
    fn asymmetric_for_positive_shape() {
        let p = wp(1.0, 1.0);
        let plus = wave_loss(1.0, &p).unwrap();
        let minus = wave_loss(-1.0, &p).unwrap();
        assert!((plus - minus).abs() > 1e-3);
    }

    #[test]
    fn continuous_at_origin() {
        let p = wp(1.0, 1.0);
        assert!(wave_loss(1e-12, &p).unwrap() < 1e-20);
        assert!(wave_loss(-1e-12, &p).unwrap() < 1e-20);
    }

    #[test]
    fn clamped_exponent_keeps_values_finite() {
        let p = wp(1.0, 100.0);
        let v = wave_loss(10.0, &p).unwrap(); // a·h = 1000 without the clamp
        assert!(v.is_finite() && v < 1.0 && v > 0.999);
        let g = wave_loss_grad(10.0, &p).unwrap();
        assert!(g.is_finite());
        let g = wave_loss_grad(1e200, &wp(1.0, 0.0)).unwrap();
        assert_eq!(g, 0.0);
    }

    #[test]
    fn rejects_invalid_inputs() {
        assert!(WaveParams::new(0.0, 1.0).is_err());
        assert!(WaveParams::new(-1.0, 1.0).is_err());
        assert!(WaveParams::new(1.0, f64::NAN).is_err());
        assert!(wave_loss(f64::INFINITY, &wp(1.0, 1.0)).is_err());
        assert!(wave_loss_grad(f64::NAN, &wp(1.0, 1.0)).is_err());
        assert!(labeled_wave_loss(1.0, 0.0, &wp(1.0, 1.0)).is_err());
    }

    proptest! {
        #[test]
        fn bounded_below_ceiling(
            h in -10.0f64..10.0,
            lambda in 0.2f64..1.0,
            a in 0.0f64..2.0,
        ) {
            let v = wave_loss(h, &wp(lambda, a)).unwrap();
            prop_assert!(v >= 0.0);
            prop_assert!(v < 1.0 / lambda);
        }

        #[test]
        fn labeled_grad_matches_finite_difference(
            z in -5.0f64..5.0,
            lambda in 0.2f64..1.0,
            a in 0.0f64..2.0,
            y_pos in any::<bool>(),
        ) {
            let y = if y_pos { 1.0 } else { -1.0 };
            let p = wp(lambda, a);
            let analytic = labeled_wave_loss_grad(z, y, &p).unwrap();
            let fd = fd_grad(z, &p, y);
            let scale = analytic.abs().max(fd.abs()).max(1.0);
            prop_assert!((analytic - fd).abs() <= 1e-6 * scale);
        }
    }
}
