//! Complex special functions used by the closed-form solutions: digamma and
//! harmonic numbers, exponential integrals, the scaled complementary error
//! function, a truncated Lerch-type sum, and the partial-fraction expansion
//! of coth.
//!
//! Every function switches between series, recurrence and continued-fraction
//! or asymptotic branches; the switch radii are fixed by the unit tests.

use crate::error::{Error, Result};
use crate::{Complex, Real};

/// Euler–Mascheroni constant γ_E.
pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// Truncation control for series evaluations.
#[derive(Debug, Clone, Copy)]
pub struct TruncationBudget<T = f64> {
    pub max_terms: usize,
    pub abs_tol: T,
    pub rel_tol: T,
}

impl<T: Real> Default for TruncationBudget<T> {
    fn default() -> Self {
        TruncationBudget {
            max_terms: 100_000,
            abs_tol: T::lit(1e-12),
            rel_tol: T::lit(1e-10),
        }
    }
}

impl<T: Real> TruncationBudget<T> {
    pub fn validate(&self) -> Result<()> {
        let ok = self.max_terms >= 8
            && self.abs_tol > T::zero()
            && self.abs_tol < T::one()
            && self.rel_tol > T::zero()
            && self.rel_tol < T::one();
        if ok {
            Ok(())
        } else {
            Err(Error::invalid(
                "truncation budget needs max_terms >= 8 and tolerances in (0, 1)",
            ))
        }
    }
}

fn fmt_z<T: Real>(z: Complex<T>) -> String {
    format!(
        "{}{:+}i",
        z.re.to_f64().unwrap_or(f64::NAN),
        z.im.to_f64().unwrap_or(f64::NAN)
    )
}

fn is_nonpositive_integer<T: Real>(z: Complex<T>) -> bool {
    z.im == T::zero() && z.re <= T::zero() && z.re.fract() == T::zero()
}

/// π·cot(πz), safe against overflow for large |Im z|.
fn pi_cot_pi<T: Real>(z: Complex<T>) -> Complex<T> {
    let pi = T::PI();
    let w = z * pi;
    let big = T::lit(18.0);
    if w.im > big {
        return Complex::new(T::zero(), -pi);
    }
    if w.im < -big {
        return Complex::new(T::zero(), pi);
    }
    w.cos() / w.sin() * pi
}

/// Coefficients B₂ₙ/(2n) of the asymptotic digamma series.
const DIGAMMA_ASYMP: [f64; 7] = [
    1.0 / 12.0,
    -1.0 / 120.0,
    1.0 / 252.0,
    -1.0 / 240.0,
    1.0 / 132.0,
    -691.0 / 32760.0,
    1.0 / 12.0,
];

/// Digamma function ψ(z) for complex z.
///
/// Strategy: reflection for Re z < 1/2, recurrence shifts until |z| ≥ 10,
/// then the logarithmic asymptotic series.
pub fn digamma<T: Real>(z: Complex<T>) -> Result<Complex<T>> {
    if is_nonpositive_integer(z) {
        return Err(Error::Pole {
            location: fmt_z(z),
            context: "digamma pole at non-positive integer".into(),
        });
    }
    let half = T::lit(0.5);
    if z.re < half {
        // ψ(z) = ψ(1−z) − π cot(πz)
        let psi = digamma(Complex::new(T::one(), T::zero()) - z)?;
        return Ok(psi - pi_cot_pi(z));
    }
    let mut acc = Complex::new(T::zero(), T::zero());
    let mut w = z;
    let radius = T::lit(10.0);
    while w.norm() < radius {
        acc -= w.inv();
        w += Complex::new(T::one(), T::zero());
    }
    let u = w.inv();
    let u2 = u * u;
    let mut series = Complex::new(T::zero(), T::zero());
    let mut power = u2;
    for &coef in &DIGAMMA_ASYMP {
        series += power * T::lit(coef);
        power *= u2;
    }
    Ok(acc + w.ln() - u * half - series)
}

/// Harmonic number H(z) = γ_E + ψ(z+1), analytic off the negative integers.
pub fn harmonic_number<T: Real>(z: Complex<T>) -> Result<Complex<T>> {
    if z.re == T::zero() && z.im == T::zero() {
        return Ok(Complex::new(T::zero(), T::zero()));
    }
    let shifted = z + Complex::new(T::one(), T::zero());
    if is_nonpositive_integer(shifted) {
        return Err(Error::Pole {
            location: fmt_z(z),
            context: "harmonic number pole at negative integer".into(),
        });
    }
    Ok(digamma(shifted)? + Complex::new(T::lit(EULER_GAMMA), T::zero()))
}

/// Exponential integral E₁(z), principal branch (cut along the negative real
/// axis).
pub fn exp_integral_e1<T: Real>(z: Complex<T>) -> Result<Complex<T>> {
    Ok(e1_scaled(z)? * (-z).exp())
}

/// Scaled exponential integral e^z·E₁(z). Finite for all |arg z| < π and
/// free of overflow for large |z|.
pub fn e1_scaled<T: Real>(z: Complex<T>) -> Result<Complex<T>> {
    if z.re == T::zero() && z.im == T::zero() {
        return Err(Error::Pole {
            location: fmt_z(z),
            context: "E1 diverges logarithmically at 0".into(),
        });
    }
    if z.im == T::zero() && z.re < T::zero() {
        return Err(Error::BranchCut {
            location: fmt_z(z),
            context: "E1 branch cut along the negative real axis; use the principal-value Ei form"
                .into(),
        });
    }
    if z.norm() < T::lit(4.0) {
        // e^z (−γ − ln z + Σ_{k≥1} (−1)^{k+1} z^k/(k·k!))
        let mut sum = Complex::new(-T::lit(EULER_GAMMA), T::zero()) - z.ln();
        let mut term = Complex::new(T::one(), T::zero());
        for k in 1..200 {
            let kf = T::of_usize(k);
            term *= -z / kf;
            let contrib = -term / kf;
            sum += contrib;
            if contrib.norm() < T::epsilon() * sum.norm() {
                break;
            }
        }
        Ok(sum * z.exp())
    } else {
        // Continued fraction E₁(z) = e^{−z}/(z+1− 1²/(z+3− 2²/(z+5−…)))
        // evaluated by the modified Lentz algorithm.
        let tiny = Complex::new(T::lit(1e-280), T::zero());
        let one = Complex::new(T::one(), T::zero());
        let mut f = z + one;
        if f.norm() == T::zero() {
            f = tiny;
        }
        let mut c = f;
        let mut d = Complex::new(T::zero(), T::zero());
        for n in 1..400 {
            let nf = T::of_usize(n);
            let a = Complex::new(-nf * nf, T::zero());
            let b = z + Complex::new(T::lit(2.0) * nf + T::one(), T::zero());
            d = b + a * d;
            if d.norm() == T::zero() {
                d = tiny;
            }
            c = b + a / c;
            if c.norm() == T::zero() {
                c = tiny;
            }
            d = d.inv();
            let delta = c * d;
            f *= delta;
            if (delta - one).norm() < T::epsilon() * T::lit(4.0) {
                break;
            }
        }
        Ok(f.inv())
    }
}

/// Principal-value exponential integral Ei(x) for real x ≠ 0.
pub fn exp_integral_ei<T: Real>(x: T) -> Result<T> {
    Ok(ei_scaled(x)? * x.exp())
}

/// Scaled principal-value exponential integral e^{−x}·Ei(x). Stable for
/// large |x| where Ei itself overflows.
pub fn ei_scaled<T: Real>(x: T) -> Result<T> {
    if x == T::zero() {
        return Err(Error::Pole {
            location: "0".into(),
            context: "Ei diverges logarithmically at 0".into(),
        });
    }
    if x < T::zero() {
        // Ei(x) = −E₁(−x) for x < 0.
        return Ok(-e1_scaled(Complex::new(-x, T::zero()))?.re);
    }
    if x <= T::lit(40.0) {
        // All-positive-term series: γ + ln x + Σ x^k/(k·k!).
        let mut sum = T::lit(EULER_GAMMA) + x.ln();
        let mut term = T::one();
        for k in 1..400 {
            let kf = T::of_usize(k);
            term *= x / kf;
            let contrib = term / kf;
            sum += contrib;
            if contrib < T::epsilon() * sum.abs() {
                break;
            }
        }
        Ok(sum * (-x).exp())
    } else {
        // Asymptotic: e^{−x}Ei(x) ~ (1/x) Σ k!/x^k, truncated at the
        // smallest term.
        let mut sum = T::one();
        let mut term = T::one();
        let mut prev = T::infinity();
        for k in 1..200 {
            term *= T::of_usize(k) / x;
            if term.abs() > prev {
                break;
            }
            sum += term;
            prev = term.abs();
            if term.abs() < T::epsilon() {
                break;
            }
        }
        Ok(sum / x)
    }
}

/// Scaled complementary error function erfcx(z) = e^{z²}·erfc(z).
///
/// Branches: Maclaurin series in a strip (|Re z| ≤ 2.5, |z| ≤ 8), a Lentz
/// continued fraction for Re z > 2.5, the large-|z| asymptotic series near
/// the imaginary axis, and the reflection erfcx(z) = 2e^{z²} − erfcx(−z) for
/// Re z < 0.
pub fn erfcx<T: Real>(z: Complex<T>) -> Result<Complex<T>> {
    let zero = T::zero();
    if z.re < zero {
        let z2 = z * z;
        if z2.re > T::lit(700.0) {
            return Err(Error::Overflow {
                context: format!("erfcx reflection term 2·exp(z²) at z={}", fmt_z(z)),
            });
        }
        let refl = erfcx(-z)?;
        return Ok(z2.exp() * T::lit(2.0) - refl);
    }
    let r = z.norm();
    if z.re <= T::lit(2.5) && r <= T::lit(8.0) {
        // erf series: (2/√π) Σ (−1)^n z^{2n+1}/(n!(2n+1)).
        let z2 = z * z;
        let mut term = z;
        let mut sum = z;
        for n in 1..300 {
            let nf = T::of_usize(n);
            term *= -z2 / nf;
            let contrib = term / (T::lit(2.0) * nf + T::one());
            sum += contrib;
            if contrib.norm() < T::epsilon() * sum.norm() {
                break;
            }
        }
        let two_over_sqrt_pi = T::lit(2.0) / T::PI().sqrt();
        let erf = sum * two_over_sqrt_pi;
        let one = Complex::new(T::one(), T::zero());
        return Ok(z2.exp() * (one - erf));
    }
    if z.re > T::lit(2.5) {
        // Continued fraction erfcx(z) = (1/√π)/(z + (1/2)/(z + 1/(z + (3/2)/(z + …)))).
        let tiny = Complex::new(T::lit(1e-280), T::zero());
        let one = Complex::new(T::one(), T::zero());
        let mut f = z;
        let mut c = f;
        let mut d = Complex::new(T::zero(), T::zero());
        for n in 1..400 {
            let a = Complex::new(T::of_usize(n) * T::lit(0.5), T::zero());
            let b = z;
            d = b + a * d;
            if d.norm() == T::zero() {
                d = tiny;
            }
            c = b + a / c;
            if c.norm() == T::zero() {
                c = tiny;
            }
            d = d.inv();
            let delta = c * d;
            f *= delta;
            if (delta - one).norm() < T::epsilon() * T::lit(4.0) {
                break;
            }
        }
        return Ok(f.inv() / T::PI().sqrt());
    }
    // Near-imaginary axis, large |z|: asymptotic series
    // erfcx(z) ~ (1/(√π z))·Σ (−1)^k (2k−1)!!/(2z²)^k, |arg z| < 3π/4.
    let z2_inv = (z * z * T::lit(2.0)).inv();
    let mut term = Complex::new(T::one(), T::zero());
    let mut sum = term;
    let mut prev = T::infinity();
    for k in 1..200 {
        term *= -z2_inv * T::lit(2.0 * k as f64 - 1.0);
        if term.norm() > prev {
            break;
        }
        sum += term;
        prev = term.norm();
        if term.norm() < T::epsilon() {
            break;
        }
    }
    Ok(sum / (z * T::PI().sqrt()))
}

/// Complementary error function erfc(z) = 1 − erf(z).
pub fn erfc<T: Real>(z: Complex<T>) -> Result<Complex<T>> {
    let z2 = z * z;
    if (-z2).re > T::lit(700.0) {
        return Err(Error::Overflow {
            context: format!("erfc(z) ~ exp(−z²) overflows at z={}; use erfcx", fmt_z(z)),
        });
    }
    Ok(erfcx(z)? * (-z2).exp())
}

/// Error function erf(z) = 1 − erfc(z).
pub fn erf<T: Real>(z: Complex<T>) -> Result<Complex<T>> {
    Ok(Complex::new(T::one(), T::zero()) - erfc(z)?)
}

/// Truncated Lerch-type sum Φ₁(z;λ) = Σ_{k≥1} e^{−λk}/(k+z) for λ > 0,
/// with a geometric tail bound controlled by the budget.
pub fn lerch_phi1<T: Real>(
    z: Complex<T>,
    lambda: T,
    budget: TruncationBudget<T>,
) -> Result<Complex<T>> {
    budget.validate()?;
    if lambda <= T::zero() {
        return Err(Error::invalid("lerch_phi1 requires lambda > 0"));
    }
    if z.im == T::zero() && z.re < T::zero() && z.re.fract() == T::zero() {
        return Err(Error::Pole {
            location: fmt_z(z),
            context: "term k = −z has a vanishing denominator".into(),
        });
    }
    let q = (-lambda).exp();
    let zn = z.norm();
    let mut sum = Complex::new(T::zero(), T::zero());
    let mut power = T::one();
    for k in 1..=budget.max_terms {
        let kf = T::of_usize(k);
        power *= q;
        sum += Complex::new(power, T::zero()) / (z + Complex::new(kf, T::zero()));
        // Tail: Σ_{j>k} q^j/|j+z| ≤ q^{k+1}/((1−q)(k+1−|z|)) once k+1 > |z|.
        let next = kf + T::one();
        if next > zn + T::one() {
            let tail = power * q / ((T::one() - q) * (next - zn));
            if tail < budget.abs_tol || tail < budget.rel_tol * sum.norm() {
                return Ok(sum);
            }
        }
    }
    Err(Error::Convergence {
        terms: budget.max_terms,
        residual: (power / (T::one() - q)).to_f64().unwrap_or(f64::NAN),
        tolerance: budget.abs_tol.to_f64().unwrap_or(f64::NAN),
    })
}

/// Partial-fraction evaluation of coth(ω/2T):
/// 2T/ω + (2x/π)·Σ_{k=1}^{K} 1/(x²+k²) with x = ω/(2πT), truncated by the
/// budget and completed with an arctangent tail plus an Euler–Maclaurin
/// correction. Returns exactly 1 at T = 0.
pub fn coth_partial<T: Real>(omega: T, temperature: T, budget: TruncationBudget<T>) -> Result<T> {
    budget.validate()?;
    if omega <= T::zero() {
        return Err(Error::invalid("coth_partial requires omega > 0"));
    }
    if temperature == T::zero() {
        return Ok(T::one());
    }
    let x = omega / (T::lit(2.0) * T::PI() * temperature);
    let two_over_pi = T::lit(2.0) / T::PI();
    let mut sum = T::lit(2.0) * temperature / omega;
    let mut k = 0usize;
    while k < budget.max_terms {
        k += 1;
        let kf = T::of_usize(k);
        sum += two_over_pi * x / (x * x + kf * kf);
        let t0 = kf + T::lit(0.5);
        let tail = two_over_pi * (x / t0).atan();
        if tail < budget.abs_tol || tail < budget.rel_tol * sum {
            break;
        }
    }
    let t0 = T::of_usize(k) + T::lit(0.5);
    let denom = x * x + t0 * t0;
    let tail = two_over_pi * (x / t0).atan();
    let correction = -(x * t0) / (T::lit(6.0) * T::PI() * denom * denom);
    Ok(sum + tail + correction)
}

/// Raw partial sum of the coth expansion with exactly `k_terms` terms and no
/// tail estimate. Monotonically increasing in `k_terms`, approaching
/// coth(ω/2T) from below.
pub fn coth_partial_raw<T: Real>(omega: T, temperature: T, k_terms: usize) -> T {
    if temperature == T::zero() {
        return T::one();
    }
    let x = omega / (T::lit(2.0) * T::PI() * temperature);
    let two_over_pi = T::lit(2.0) / T::PI();
    let mut sum = T::lit(2.0) * temperature / omega;
    for k in 1..=k_terms {
        let kf = T::of_usize(k);
        sum += two_over_pi * x / (x * x + kf * kf);
    }
    sum
}

/// coth(ω/2T) evaluated directly (1 + 2/(e^{ω/T} − 1)); exactly 1 at T = 0.
/// This is the production path; the partial-fraction form exists for
/// term-by-term constructions and cross-checks.
pub fn bose_coth<T: Real>(omega: T, temperature: T) -> T {
    if temperature == T::zero() {
        return T::one();
    }
    let ratio = omega / temperature;
    if ratio > T::lit(700.0) {
        return T::one();
    }
    T::one() + T::lit(2.0) / ratio.exp_m1()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quad::{integrate, QuadTol};
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex<f64> {
        Complex::new(re, im)
    }

    #[test]
    fn digamma_at_one_is_minus_euler_gamma() {
        let v = digamma(c(1.0, 0.0)).unwrap();
        assert_relative_eq!(v.re, -EULER_GAMMA, epsilon = 1e-13);
        assert!(v.im.abs() < 1e-15);
    }

    #[test]
    fn digamma_at_two_uses_recurrence() {
        let v = digamma(c(2.0, 0.0)).unwrap();
        assert_relative_eq!(v.re, 1.0 - EULER_GAMMA, epsilon = 1e-13);
    }

    #[test]
    fn digamma_at_ten_matches_truncated_log_expansion() {
        let v = digamma(c(10.0, 0.0)).unwrap();
        let approx10 = (10.0f64).ln() - 1.0 / 20.0 - 1.0 / 1200.0;
        assert!((v.re - approx10).abs() < 1e-6);
    }

    #[test]
    fn digamma_recurrence_identity_random_samples() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut checked = 0;
        while checked < 1000 {
            let re: f64 = rng.random_range(-8.0..12.0);
            let im: f64 = rng.random_range(-10.0..10.0);
            let dist_to_pole = if re < 0.5 {
                (re - re.round()).abs().hypot(im)
            } else {
                1.0
            };
            if dist_to_pole < 0.05 {
                continue;
            }
            let z = c(re, im);
            let lhs = digamma(z + c(1.0, 0.0)).unwrap();
            let rhs = digamma(z).unwrap() + z.inv();
            let denom = rhs.norm().max(1.0);
            assert!(
                (lhs - rhs).norm() / denom < 1e-10,
                "recurrence failed at z={z}: lhs={lhs} rhs={rhs}"
            );
            checked += 1;
        }
    }

    #[test]
    fn digamma_pole_errors() {
        for z in [c(0.0, 0.0), c(-1.0, 0.0), c(-7.0, 0.0)] {
            assert!(matches!(digamma(z), Err(Error::Pole { .. })));
        }
    }

    #[test]
    fn harmonic_number_basics() {
        assert_eq!(harmonic_number(c(0.0, 0.0)).unwrap().norm(), 0.0);
        let h3 = harmonic_number(c(3.0, 0.0)).unwrap();
        assert_relative_eq!(h3.re, 11.0 / 6.0, epsilon = 1e-12);
        assert!(matches!(
            harmonic_number(c(-2.0, 0.0)),
            Err(Error::Pole { .. })
        ));
    }

    #[test]
    fn harmonic_number_matches_partial_sums_to_fifty() {
        let mut partial = 0.0f64;
        for n in 1..=50 {
            partial += 1.0 / n as f64;
            let h = harmonic_number(c(n as f64, 0.0)).unwrap();
            assert_relative_eq!(h.re, partial, epsilon = 1e-12);
            assert!(h.im.abs() < 1e-13);
        }
    }

    #[test]
    fn harmonic_number_complex_against_partial_fraction_oracle() {
        // H(z) = Σ_{k≥1} (1/k − 1/(k+z)); sum K terms directly, then close
        // the tail with the midpoint integral ln(1 + z/(K+1/2)).
        let z = c(0.5, 2.0);
        let k_max = 1_000_000;
        let mut sum = c(0.0, 0.0);
        for k in 1..=k_max {
            let kf = k as f64;
            sum += c(1.0 / kf, 0.0) - (z + c(kf, 0.0)).inv();
        }
        let tail = (c(1.0, 0.0) + z / c(k_max as f64 + 0.5, 0.0)).ln();
        let oracle = sum + tail;
        let h = harmonic_number(z).unwrap();
        assert!((h - oracle).norm() < 1e-9, "H={h} oracle={oracle}");
    }

    #[test]
    fn e1_at_one_matches_quadrature_oracle() {
        let oracle = integrate(
            &|t: f64| (-t).exp() / t,
            1.0,
            60.0,
            QuadTol::new(1e-14, 1e-14),
            "E1 oracle",
        )
        .unwrap();
        let v = exp_integral_e1(c(1.0, 0.0)).unwrap();
        assert_relative_eq!(v.re, oracle, epsilon = 1e-10);
        assert!(v.im.abs() < 1e-15);
    }

    #[test]
    fn e1_large_argument_asymptotics() {
        let z = 50.0f64;
        let scaled = e1_scaled(c(z, 0.0)).unwrap().re;
        let asymp = (1.0 - 1.0 / z + 2.0 / (z * z) - 6.0 / (z * z * z)) / z;
        assert_relative_eq!(scaled, asymp, max_relative = 1e-5);
    }

    #[test]
    fn e1_small_argument_series() {
        let z = c(0.01, 0.0);
        let v = exp_integral_e1(z).unwrap();
        let lead =
            -EULER_GAMMA - 0.01f64.ln() + 0.01 - 0.01f64.powi(2) / 4.0 + 0.01f64.powi(3) / 18.0;
        assert!((v.re - lead).abs() < 1e-9);
    }

    #[test]
    fn e1_pole_and_branch_cut() {
        assert!(matches!(
            exp_integral_e1(c(0.0, 0.0)),
            Err(Error::Pole { .. })
        ));
        assert!(matches!(
            exp_integral_e1(c(-1.0, 0.0)),
            Err(Error::BranchCut { .. })
        ));
    }

    #[test]
    fn ei_consistent_with_e1_reflection_and_series() {
        // Ei(−x) = −E1(x) for x > 0.
        let x = 1.3f64;
        let ei = exp_integral_ei(-x).unwrap();
        let e1 = exp_integral_e1(c(x, 0.0)).unwrap().re;
        assert_relative_eq!(ei, -e1, epsilon = 1e-13);
        // Large-x scaled value against the asymptotic series.
        let big = 120.0f64;
        let scaled = ei_scaled(big).unwrap();
        let asymp = (1.0 + 1.0 / big + 2.0 / (big * big)) / big;
        assert_relative_eq!(scaled, asymp, max_relative = 1e-5);
        // Series region against quadrature of the principal value: for
        // 0 < x, Ei(x) = γ + ln x + ∫_0^x (e^t−1)/t dt.
        let x = 3.7f64;
        let integral = integrate(
            &|t: f64| (t.exp_m1()) / t,
            0.0,
            x,
            QuadTol::new(1e-13, 1e-13),
            "Ei oracle",
        )
        .unwrap();
        let oracle = EULER_GAMMA + x.ln() + integral;
        assert_relative_eq!(exp_integral_ei(x).unwrap(), oracle, epsilon = 1e-11);
    }

    #[test]
    fn erfc_at_zero_is_one() {
        let v = erfc(c(0.0, 0.0)).unwrap();
        assert_eq!(v.re, 1.0);
        assert_eq!(v.im, 0.0);
    }

    #[test]
    fn erfc_reflection_identity() {
        // erf odd ⇒ erfc(z) + erfc(−z) = 2.
        for &(r, deg) in &[
            (0.5, 30.0),
            (1.5, 80.0),
            (3.0, 150.0),
            (3.0, 100.0),
            (6.0, 95.0),
        ] {
            let th = (deg as f64).to_radians();
            let z = c(r * th.cos(), r * th.sin());
            let a = erfc(z).unwrap();
            let b = erfc(-z).unwrap();
            let s = a + b;
            // Tolerance scales with the summand magnitudes: near the
            // imaginary axis both terms are huge and cancel to 2.
            let scale = a.norm().max(b.norm()).max(1.0);
            assert!(
                (s - c(2.0, 0.0)).norm() < 1e-12 * scale,
                "reflection failed at {z}: {s}"
            );
        }
    }

    #[test]
    fn erf_plus_erfc_is_one() {
        for &(re, im) in &[(0.3, 0.4), (2.0, -1.0), (4.0, 4.0)] {
            let z = c(re, im);
            let s = erf(z).unwrap() + erfc(z).unwrap();
            assert!((s - c(1.0, 0.0)).norm() < 1e-12);
        }
    }

    #[test]
    fn erfcx_large_real_asymptotics() {
        let z = 5.0f64;
        let v = erfcx(c(z, 0.0)).unwrap().re;
        let z2 = 2.0 * z * z;
        // Four asymptotic terms; the next one is ~105/(2z²)⁴ ≈ 1.7e−5.
        let asymp = (1.0 - 1.0 / z2 + 3.0 / (z2 * z2) - 15.0 / (z2 * z2 * z2))
            / (z * core::f64::consts::PI.sqrt());
        assert_relative_eq!(v, asymp, max_relative = 3e-5);
    }

    /// Central finite-difference check of y' = 2z·y − 2/√π across branch
    /// seams; an inconsistent branch switch would break differentiability.
    fn assert_erfcx_ode_at(z: Complex<f64>) {
        let h = 1e-3;
        let dirs = [c(h, 0.0), c(0.0, h)];
        for d in dirs {
            let yp1 = erfcx(z + d).unwrap();
            let ym1 = erfcx(z - d).unwrap();
            let yp2 = erfcx(z + d * 2.0).unwrap();
            let ym2 = erfcx(z - d * 2.0).unwrap();
            let deriv = (ym2 - yp2 + (yp1 - ym1) * 8.0) / (d * 12.0);
            let y = erfcx(z).unwrap();
            let rhs = z * y * 2.0 - c(2.0 / core::f64::consts::PI.sqrt(), 0.0);
            let scale = rhs.norm().max(1e-3);
            assert!(
                (deriv - rhs).norm() / scale < 1e-7,
                "ODE residual too large at {z}: {deriv} vs {rhs}"
            );
        }
    }

    #[test]
    fn erfcx_branch_seams_are_consistent() {
        // Series/continued-fraction seam at Re z = 2.5.
        assert_erfcx_ode_at(c(2.5, 1.0));
        assert_erfcx_ode_at(c(2.5, 4.0));
        // Series/asymptotic seam at |z| = 8 near the imaginary axis.
        assert_erfcx_ode_at(c(1.0, 7.94));
        // Reflection seam at Re z = 0.
        assert_erfcx_ode_at(c(0.0, 0.6));
        assert_erfcx_ode_at(c(0.0, 5.0));
        // Rays near |arg z| = 3π/4 where the asymptotic split changes.
        let r = 6.0f64;
        for deg in [130.0, 135.0, 140.0] {
            let th = (deg as f64).to_radians();
            assert_erfcx_ode_at(c(r * th.cos(), r * th.sin()));
        }
    }

    #[test]
    fn lerch_phi1_suppressed_at_large_lambda() {
        let v = lerch_phi1(c(2.0, 3.0), 50.0, TruncationBudget::default()).unwrap();
        assert!(v.norm() <= 2.0 * (-50.0f64).exp());
    }

    #[test]
    fn lerch_phi1_matches_direct_summation() {
        let z = c(1.0, 0.0);
        let lambda = 1.0;
        let mut oracle = c(0.0, 0.0);
        for k in 1..=10_000 {
            let kf = k as f64;
            oracle += c((-lambda * kf).exp(), 0.0) / (z + c(kf, 0.0));
        }
        let tight = TruncationBudget {
            abs_tol: 1e-14,
            rel_tol: 1e-14,
            ..TruncationBudget::default()
        };
        let v = lerch_phi1(z, lambda, tight).unwrap();
        assert!((v - oracle).norm() < 1e-12);
    }

    #[test]
    fn lerch_phi1_matches_integral_representation() {
        // Φ₁(z;λ) = w·∫_0^1 t^z/(1−wt) dt with w = e^{−λ}, Re z > −1.
        let lambda = 0.5f64;
        let w = (-lambda).exp();
        for &(re, im) in &[(0.7, 0.0), (1.3, 0.4)] {
            let z = c(re, im);
            let re_part = integrate(
                &|t: f64| {
                    let tz = (z * t.ln()).exp();
                    (tz / (1.0 - w * t)).re
                },
                1e-300,
                1.0,
                QuadTol::new(1e-12, 1e-12),
                "lerch re",
            )
            .unwrap();
            let im_part = integrate(
                &|t: f64| {
                    let tz = (z * t.ln()).exp();
                    (tz / (1.0 - w * t)).im
                },
                1e-300,
                1.0,
                QuadTol::new(1e-12, 1e-12),
                "lerch im",
            )
            .unwrap();
            let oracle = c(re_part, im_part) * w;
            let v = lerch_phi1(z, lambda, TruncationBudget::default()).unwrap();
            assert!((v - oracle).norm() < 1e-9, "z={z}: {v} vs {oracle}");
        }
    }

    #[test]
    fn lerch_phi1_error_paths() {
        assert!(matches!(
            lerch_phi1(c(-3.0, 0.0), 1.0, TruncationBudget::default()),
            Err(Error::Pole { .. })
        ));
        let tight = TruncationBudget {
            max_terms: 8,
            abs_tol: 1e-12,
            rel_tol: 1e-12,
        };
        assert!(matches!(
            lerch_phi1(c(1.0, 0.0), 0.01, tight),
            Err(Error::Convergence { .. })
        ));
    }

    #[test]
    fn coth_partial_zero_temperature_is_exactly_one() {
        assert_eq!(
            coth_partial(1.0, 0.0, TruncationBudget::default()).unwrap(),
            1.0
        );
        assert_eq!(bose_coth(1.0, 0.0), 1.0);
    }

    #[test]
    fn coth_partial_small_frequency_dominated_by_classical_pole() {
        let omega = 1e-6;
        let temp = 1.0;
        let v = coth_partial(omega, temp, TruncationBudget::default()).unwrap();
        assert_relative_eq!(v * omega / (2.0 * temp), 1.0, epsilon = 1e-8);
    }

    #[test]
    fn coth_partial_500_terms_reaches_1e8() {
        let budget = TruncationBudget {
            max_terms: 500,
            abs_tol: 1e-30,
            rel_tol: 1e-30,
        };
        let v = coth_partial(1.0, 0.3, budget).unwrap();
        let exact = 1.0 / (1.0f64 / 0.6).tanh();
        assert!((v - exact).abs() < 1e-8, "v={v} exact={exact}");
    }

    #[test]
    fn coth_partial_matches_direct_for_various_arguments() {
        for &(omega, temp) in &[(0.3, 1.0), (2.0, 0.7), (10.0, 5.0), (1.0, 0.01)] {
            let v = coth_partial(omega, temp, TruncationBudget::default()).unwrap();
            let exact = bose_coth(omega, temp);
            assert_relative_eq!(v, exact, max_relative = 1e-9);
        }
    }

    #[test]
    fn coth_raw_partial_sums_increase_toward_limit() {
        let omega = 1.0;
        let temp = 0.3;
        let exact = 1.0 / (1.0f64 / 0.6).tanh();
        let mut prev = 0.0;
        for k in (10..=100).step_by(10) {
            let raw = coth_partial_raw(omega, temp, k);
            assert!(raw > prev, "partial sums must increase");
            assert!(raw < exact, "partial sums approach from below");
            prev = raw;
        }
    }
}
