use std::f64::consts::PI;

use crate::error::{FracError, Result};

// Lanczos approximation, g = 7, nine terms.
const LANCZOS_G: f64 = 7.0;
const LANCZOS_COEF: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

fn lanczos_sum(x: f64) -> f64 {
    LANCZOS_COEF[1..]
        .iter()
        .enumerate()
        .fold(LANCZOS_COEF[0], |acc, (i, c)| acc + c / (x + i as f64 + 1.0))
}

fn is_pole(z: f64) -> bool {
    z <= 0.0 && z == z.round()
}

/// Euler's Gamma function on the real line.
pub fn gamma_fn(z: f64) -> Result<f64> {
    if !z.is_finite() {
        return Err(FracError::NonFinite("gamma argument"));
    }
    if is_pole(z) {
        return Err(FracError::Pole(z));
    }
    Ok(gamma_unchecked(z))
}

pub(crate) fn gamma_unchecked(z: f64) -> f64 {
    if z < 0.5 {
        PI / ((PI * z).sin() * gamma_unchecked(1.0 - z))
    } else if z == z.round() && z <= 24.0 {
        // exact factorials
        (1..z as u64).fold(1.0, |acc, k| acc * k as f64)
    } else {
        let x = z - 1.0;
        let t = x + LANCZOS_G + 0.5;
        (2.0 * PI).sqrt() * t.powf(x + 0.5) * (-t).exp() * lanczos_sum(x)
    }
}

/// `ln Γ(z)` for `z > 0`.
pub fn ln_gamma(z: f64) -> Result<f64> {
    if !(z.is_finite() && z > 0.0) {
        return Err(FracError::InvalidInput(format!("ln_gamma needs z > 0, got {z}")));
    }
    Ok(ln_gamma_unchecked(z))
}

pub(crate) fn ln_gamma_unchecked(z: f64) -> f64 {
    if z < 0.5 {
        (PI / (PI * z).sin()).ln() - ln_gamma_unchecked(1.0 - z)
    } else {
        let x = z - 1.0;
        let t = x + LANCZOS_G + 0.5;
        0.5 * (2.0 * PI).ln() + (x + 0.5) * t.ln() - t + lanczos_sum(x).ln()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn known_values() {
        assert_eq!(gamma_fn(1.0).unwrap(), 1.0);
        assert!((gamma_fn(0.5).unwrap() - PI.sqrt()).abs() < 1e-15);
        // Γ(3.5) = 2.5 · 1.5 · 0.5 · √π
        let g35 = 2.5 * 1.5 * 0.5 * PI.sqrt();
        assert!((gamma_fn(3.5).unwrap() - g35).abs() / g35 < 1e-14);
        assert!((g35 - 3.323_350_970_447_842_6).abs() < 1e-14);
        // Γ(-0.5) = -2√π
        assert!((gamma_fn(-0.5).unwrap() + 2.0 * PI.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn poles_are_rejected() {
        for z in [0.0, -1.0, -7.0] {
            assert_eq!(gamma_fn(z), Err(FracError::Pole(z)));
        }
    }

    #[test]
    fn recurrence_holds() {
        let mut z = 0.1;
        while z <= 20.0 {
            let lhs = gamma_fn(z + 1.0).unwrap();
            let rhs = z * gamma_fn(z).unwrap();
            assert!((lhs - rhs).abs() <= 1e-11 * lhs.abs(), "z = {z}");
            z += 0.037;
        }
    }

    #[test]
    fn accuracy_against_half_integer_recurrence() {
        // Γ(k + 1/2) = (2k)! √π / (4^k k!)
        let mut g = PI.sqrt();
        for k in 0..29 {
            let z = k as f64 + 0.5;
            assert!((gamma_fn(z).unwrap() - g).abs() <= 1e-12 * g, "z = {z}");
            g *= z;
        }
    }

    #[test]
    fn ln_gamma_agrees_with_gamma() {
        for &z in &[0.05, 0.3, 1.7, 12.25, 29.9] {
            let g = gamma_fn(z).unwrap();
            assert!((ln_gamma(z).unwrap() - g.ln()).abs() < 1e-13 * g.ln().abs().max(1.0));
        }
        assert!((ln_gamma(300.0).unwrap() - 1409.202_067_470_41).abs() < 1e-9);
    }
}
