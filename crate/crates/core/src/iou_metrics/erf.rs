//! Error function of a complex argument.
//!
//! `erf(z) = (2/√π) ∫_0^z e^{-u²} du` is integrated along the straight path
//! `u = s·z`, `s ∈ [0, 1]`, with composite Gauss–Legendre. The panel count
//! grows with `|z|²`, which bounds the phase change of `e^{-s² z²}` per panel.

use std::f64::consts::PI;
use std::sync::OnceLock;

use crate::error::{Error, Result};
use crate::fourier::Complex;
use crate::quadrature::GaussLegendre;

/// Largest `|Im z|` accepted by [`complex_erf`].
pub const ERF_IMAG_LIMIT: f64 = 6.0;

const ORDER: usize = 20;

fn rule() -> &'static GaussLegendre {
    static RULE: OnceLock<GaussLegendre> = OnceLock::new();
    RULE.get_or_init(|| GaussLegendre::new(ORDER))
}

pub fn complex_erf(z: Complex) -> Result<Complex> {
    if !z.re.is_finite() || !z.im.is_finite() {
        return Err(Error::NonFinite(format!("erf argument {z}")));
    }
    if z.im.abs() > ERF_IMAG_LIMIT {
        return Err(Error::Envelope(format!(
            "erf argument {z} has |Im| above {ERF_IMAG_LIMIT}"
        )));
    }
    let z2 = z * z;
    let panels = (z.norm_sqr().ceil() as usize) / 2 + 4;
    let integral: Complex = rule().integrate(|s| (-(z2 * (s * s))).exp(), 0.0, 1.0, panels);
    Ok(z * integral * (2.0 / PI.sqrt()))
}

/// Real error function.
pub fn erf(x: f64) -> f64 {
    complex_erf(Complex::new(x, 0.0)).expect("real arguments are inside the envelope").re
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Maclaurin series, accurate for moderate |z|.
    fn series(z: Complex) -> Complex {
        let z2 = z * z;
        let mut term = z;
        let mut sum = z;
        for n in 1..200 {
            term *= -z2 / n as f64;
            let add = term / (2 * n + 1) as f64;
            sum += add;
            if add.norm() < 1e-18 * sum.norm() {
                break;
            }
        }
        sum * (2.0 / PI.sqrt())
    }

    #[test]
    fn known_values() {
        assert_eq!(complex_erf(Complex::new(0.0, 0.0)).unwrap(), Complex::new(0.0, 0.0));
        assert!((erf(1.0) - 0.842_700_792_949_714_9).abs() < 1e-14);
        assert!((erf(3.0) - 0.999_977_909_503_001_4).abs() < 1e-14);
        assert!((erf(40.0) - 1.0).abs() < 1e-14);
        // erf(i) = i·erfi(1)
        let v = complex_erf(Complex::new(0.0, 1.0)).unwrap();
        assert!((v - Complex::new(0.0, 1.650_425_758_797_542_8)).norm() < 1e-13);
    }

    #[test]
    fn agrees_with_series() {
        for (x, y) in [(0.3, 0.2), (1.0, -1.5), (2.0, 2.0), (-1.2, 0.7), (2.5, -0.4)] {
            let z = Complex::new(x, y);
            let a = complex_erf(z).unwrap();
            let b = series(z);
            assert!((a - b).norm() <= 1e-10 * b.norm().max(1.0), "{z}: {a} vs {b}");
        }
    }

    #[test]
    fn reflection_symmetry() {
        for (x, y) in [(0.7, 2.0), (3.0, -5.5), (12.0, 4.0)] {
            let z = Complex::new(x, y);
            let a = complex_erf(z.conj()).unwrap();
            let b = complex_erf(z).unwrap().conj();
            assert!((a - b).norm() <= 1e-12 * b.norm().max(1.0));
            let odd = complex_erf(-z).unwrap();
            assert!((odd + complex_erf(z).unwrap()).norm() <= 1e-12 * odd.norm().max(1.0));
        }
    }

    #[test]
    fn large_real_part_tends_to_one() {
        let v = complex_erf(Complex::new(30.0, 5.0)).unwrap();
        assert!((v - Complex::new(1.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn envelope_enforced() {
        assert!(matches!(complex_erf(Complex::new(0.5, 6.5)), Err(Error::Envelope(_))));
        assert!(matches!(complex_erf(Complex::new(f64::NAN, 0.0)), Err(Error::NonFinite(_))));
    }
}
