//! Green functions and phase-space propagators for the damped oscillator.
//!
//! The retarded Green function obeys Ĝ(s) = (1/M)/(s² + 2sγ̂(s) + Ω²) in the
//! Laplace domain. For the built-in bath families the inverse transform is a
//! finite sum of exponential and erfc-type modes computed here in closed
//! form; tabulated baths fall back to certified numerical inversion. On top
//! of G(t) sit the 2×2 phase-space propagator Φ(t) = [[MĠ, G], [M²G̈, MĠ]],
//! the two-time transition matrix Φ(t)Φ⁻¹(τ), the final-value propagator,
//! characteristic decay rates, and the dissipative-regime classifier.

use crate::error::{Error, Result};
use crate::laplace;
use crate::linalg::Mat2;
use crate::poly;
use crate::specfun::erfcx;
use crate::spectrum::{BathFamily, SpectralModel};
use crate::{Complex, Real};

/// Parameters of the exact cubic factoring
/// (s² + Ω²)(s + Λ) + 2γ₀Λs = (s + Λ*)(s² + 2γ*s + Ω*²).
///
/// `omega_tilde_star` = √(Ω*² − γ*²) is stored as a complex number so the
/// overdamped analytic continuation (imaginary value) is representable.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StarParams<T = f64> {
    pub gamma_star: T,
    pub omega_star: T,
    pub lambda_star: T,
    pub omega_tilde_star: Complex<T>,
}

/// Dissipative regime of the rational-cutoff ohmic bath.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RegimeLabel {
    Underdamped,
    Overdamped,
    StrongCoupling,
}

/// The phase-space propagator matrix [[MĠ, G], [M²G̈, MĠ]].
pub type PhaseMatrix<T> = Mat2<T>;

/// Closed-form mode decomposition of M·G(t).
///
/// Exponential modes contribute A e^{f t}; erfc modes contribute
/// A r erfcx(−r √t) = A r e^{r²t} erfc(−r √t). Complex modes occur in
/// conjugate pairs, so the sums are real up to roundoff.
#[derive(Debug, Clone)]
pub struct ModeDecomposition<T = f64> {
    pub exp_modes: Vec<(Complex<T>, Complex<T>)>,
    pub erfc_modes: Vec<(Complex<T>, Complex<T>)>,
    mass: T,
    /// Coefficient of 1/√(πt) in M·Ġ; exactly cancelling sums are zeroed.
    sing_dg: T,
    /// Coefficient of 1/√(πt) in M·G̈.
    sing_ddg: T,
}

impl<T: Real> ModeDecomposition<T> {
    fn new(
        mass: T,
        exp_modes: Vec<(Complex<T>, Complex<T>)>,
        erfc_modes: Vec<(Complex<T>, Complex<T>)>,
    ) -> Self {
        // Singular 1/√(πt) coefficients of the derivatives come from the
        // erfc-mode power sums Σ A r² (for Ġ) and Σ A r⁴ (for G̈). For the
        // built-in decompositions these vanish identically; tiny residues
        // are roundoff and are zeroed against the term-magnitude scale.
        let mut s2 = Complex::new(T::zero(), T::zero());
        let mut s4 = Complex::new(T::zero(), T::zero());
        let mut scale2 = T::zero();
        let mut scale4 = T::zero();
        for &(a, r) in &erfc_modes {
            let r2 = r * r;
            s2 += a * r2;
            s4 += a * r2 * r2;
            scale2 += (a * r2).norm();
            scale4 += (a * r2 * r2).norm();
        }
        let eps64 = T::epsilon() * T::lit(64.0);
        let clean = |v: Complex<T>, scale: T| {
            if v.norm() < eps64 * scale {
                T::zero()
            } else {
                v.re
            }
        };
        ModeDecomposition {
            exp_modes,
            erfc_modes,
            mass,
            sing_dg: clean(s2, scale2),
            sing_ddg: clean(s4, scale4),
        }
    }

    /// M·G(t) as a complex sum (imaginary part is roundoff).
    pub fn complex_green(&self, t: T) -> Result<Complex<T>> {
        let mut acc = Complex::new(T::zero(), T::zero());
        for &(a, f) in &self.exp_modes {
            acc += a * (f * t).exp();
        }
        let sqrt_t = t.sqrt();
        for &(a, r) in &self.erfc_modes {
            acc += a * r * erfcx(-r * sqrt_t)?;
        }
        Ok(acc)
    }

    pub fn green(&self, t: T) -> Result<T> {
        if t == T::zero() {
            return Ok(T::zero());
        }
        Ok(self.complex_green(t)?.re / self.mass)
    }

    pub fn dgreen(&self, t: T) -> Result<T> {
        if t == T::zero() {
            return Ok(self.mass.recip());
        }
        let mut acc = Complex::new(T::zero(), T::zero());
        for &(a, f) in &self.exp_modes {
            acc += a * f * (f * t).exp();
        }
        let sqrt_t = t.sqrt();
        for &(a, r) in &self.erfc_modes {
            acc += a * r * r * r * erfcx(-r * sqrt_t)?;
        }
        let singular = self.sing_dg / (T::PI() * t).sqrt();
        Ok((acc.re + singular) / self.mass)
    }

    pub fn ddgreen(&self, t: T) -> Result<T> {
        if t == T::zero() {
            return Ok(T::zero());
        }
        let mut acc = Complex::new(T::zero(), T::zero());
        for &(a, f) in &self.exp_modes {
            acc += a * f * f * (f * t).exp();
        }
        let sqrt_t = t.sqrt();
        for &(a, r) in &self.erfc_modes {
            let r2 = r * r;
            acc += a * r2 * r2 * r * erfcx(-r * sqrt_t)?;
        }
        let singular = self.sing_ddg / (T::PI() * t).sqrt();
        Ok((acc.re + singular) / self.mass)
    }
}

/// Exact factoring of the ohmic characteristic cubic. The mass does not
/// enter the cubic; it is validated for interface uniformity only.
pub fn star_parameters<T: Real>(
    mass: T,
    omega: T,
    gamma0: T,
    lambda: T,
) -> Result<StarParams<T>> {
    if !(mass > T::zero() && omega > T::zero() && gamma0 > T::zero() && lambda > T::zero()) {
        return Err(Error::invalid("star_parameters needs positive inputs"));
    }
    let roots = ohmic_cubic_roots(omega, gamma0, lambda)?;
    let reals: Vec<T> = roots
        .iter()
        .filter(|r| r.im == T::zero())
        .map(|r| r.re)
        .collect();
    let (lambda_star, pair_sum, pair_prod) = match reals.len() {
        1 => {
            let pair: Vec<_> = roots.iter().filter(|r| r.im != T::zero()).collect();
            (
                -reals[0],
                pair[0].re + pair[1].re,
                (*pair[0] * *pair[1]).re,
            )
        }
        3 => {
            // All roots real: take the most negative as −Λ* so the quadratic
            // factor carries the slower pair (continuous with the local
            // overdamped limit where the cutoff root is the fast one).
            let mut sorted = reals.clone();
            sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
            (-sorted[0], sorted[1] + sorted[2], sorted[1] * sorted[2])
        }
        _ => {
            return Err(Error::RootFinding {
                residual: f64::NAN,
                tolerance: 1e-12,
            })
        }
    };
    let gamma_star = -pair_sum * T::lit(0.5);
    let omega_star_sq = pair_prod;
    let omega_tilde_star = Complex::new(omega_star_sq - gamma_star * gamma_star, T::zero()).sqrt();
    Ok(StarParams {
        gamma_star,
        omega_star: omega_star_sq.sqrt(),
        lambda_star,
        omega_tilde_star,
    })
}

/// Roots of s³ + Λs² + (Ω² + 2γ₀Λ)s + ΛΩ².
fn ohmic_cubic_roots<T: Real>(omega: T, gamma0: T, lambda: T) -> Result<Vec<Complex<T>>> {
    let om2 = omega * omega;
    poly::roots(&[
        lambda * om2,
        om2 + T::lit(2.0) * gamma0 * lambda,
        lambda,
        T::one(),
    ])
}

/// Laplace-domain Green function Ĝ(s) = (1/M)/(s² + 2sγ̂(s) + Ω²).
pub fn green_laplace<T: Real>(model: &SpectralModel<T>, s: Complex<T>) -> Result<Complex<T>> {
    let om2 = model.system.omega * model.system.omega;
    let denom = match &model.family {
        BathFamily::SubOhmicSqrt { gamma_star } => {
            // 2sγ̂(s) = 2γ*√(2ω*)·√s, finite at s = 0.
            let ws = model.sub_omega_star(*gamma_star);
            s * s
                + s.sqrt() * (T::lit(2.0) * *gamma_star * (T::lit(2.0) * ws).sqrt())
                + om2
        }
        _ => {
            let gh = model.damping_laplace(s)?;
            s * s + s * gh * T::lit(2.0) + om2
        }
    };
    let scale = s.norm_sqr() + om2 + denom.norm();
    if denom.norm() < T::lit(1e-12) * scale {
        return Err(Error::Pole {
            location: format!(
                "s = {:e} + {:e}i",
                s.re.to_f64().unwrap_or(f64::NAN),
                s.im.to_f64().unwrap_or(f64::NAN)
            ),
            context: "green_laplace at a characteristic root".into(),
        });
    }
    Ok(denom.inv() / model.system.mass)
}

/// Green-function evaluator with a cached mode decomposition where one
/// exists, and certified numerical inversion for tabulated baths. Cheap to
/// evaluate repeatedly and thread-safe after construction.
#[derive(Debug, Clone)]
pub struct Propagator<T = f64> {
    model: SpectralModel<T>,
    modes: Option<ModeDecomposition<T>>,
    star: Option<StarParams<T>>,
    /// Dominant oscillation frequency, used as an inversion hint.
    oscillation: T,
}

impl<T: Real> Propagator<T> {
    pub fn new(model: &SpectralModel<T>) -> Result<Self> {
        let sys = model.system;
        let (modes, star, oscillation) = match &model.family {
            BathFamily::OhmicRational { gamma0, lambda } => {
                let star = star_parameters(sys.mass, sys.omega, *gamma0, *lambda)?;
                let modes = ohmic_modes(sys.omega, *gamma0, *lambda)?;
                let osc = star.omega_tilde_star.norm();
                (Some(modes), Some(star), osc)
            }
            BathFamily::SubOhmicSqrt { gamma_star } => {
                let modes = sub_ohmic_modes(sys.omega, *gamma_star, model)?;
                let ws = model.sub_omega_star(*gamma_star);
                let osc = (ws * (ws + T::lit(2.0) * *gamma_star)).sqrt();
                (Some(modes), None, osc)
            }
            BathFamily::SupraOhmicRational { gamma2, lambda } => {
                let modes = supra_ohmic_modes(sys.omega, *gamma2, *lambda)?;
                let osc = modes
                    .exp_modes
                    .iter()
                    .map(|&(_, f)| f.im.abs())
                    .fold(T::zero(), T::max);
                (Some(modes), None, osc)
            }
            BathFamily::CustomTabulated(_) => (None, None, sys.omega),
        };
        Ok(Propagator {
            model: model.clone(),
            modes,
            star,
            oscillation,
        })
    }

    pub fn model(&self) -> &SpectralModel<T> {
        &self.model
    }

    pub fn modes(&self) -> Option<&ModeDecomposition<T>> {
        self.modes.as_ref()
    }

    pub fn star(&self) -> Option<&StarParams<T>> {
        self.star.as_ref()
    }

    /// Dominant oscillation frequency of G(t).
    pub fn oscillation_frequency(&self) -> T {
        self.oscillation
    }

    fn check_time(t: T) -> Result<()> {
        if t < T::zero() || !t.is_finite() {
            return Err(Error::invalid("propagator times must be finite and >= 0"));
        }
        Ok(())
    }

    fn invert(&self, weight: impl Fn(Complex<T>) -> Complex<T>, t: T) -> Result<T> {
        let model = &self.model;
        let f = |s: Complex<T>| {
            green_laplace(model, s)
                .map(|g| weight(s) * g)
                .unwrap_or_else(|_| Complex::new(T::nan(), T::nan()))
        };
        let scale = (self.model.system.mass * self.model.system.omega).recip();
        laplace::talbot_invert(&f, t, self.oscillation, T::lit(1e-8) * scale)
    }

    /// G(t).
    pub fn green(&self, t: T) -> Result<T> {
        Self::check_time(t)?;
        if t == T::zero() {
            return Ok(T::zero());
        }
        match &self.modes {
            Some(m) => m.green(t),
            None => self.invert(|_| Complex::new(T::one(), T::zero()), t),
        }
    }

    /// Ġ(t).
    pub fn dgreen(&self, t: T) -> Result<T> {
        Self::check_time(t)?;
        if t == T::zero() {
            return Ok(self.model.system.mass.recip());
        }
        match &self.modes {
            Some(m) => m.dgreen(t),
            // L[Ġ] = sĜ(s) because G(0) = 0.
            None => self.invert(|s| s, t),
        }
    }

    /// G̈(t), always from the closed decomposition or the transform, never
    /// from finite differences.
    pub fn ddgreen(&self, t: T) -> Result<T> {
        Self::check_time(t)?;
        if t == T::zero() {
            return Ok(T::zero());
        }
        match &self.modes {
            Some(m) => m.ddgreen(t),
            // L[G̈] = s²Ĝ(s) − 1/M; the subtraction keeps the transform
            // decaying so the inversion converges.
            None => {
                let mass = self.model.system.mass;
                let model = &self.model;
                let f = |s: Complex<T>| {
                    green_laplace(model, s)
                        .map(|g| s * s * g - mass.recip())
                        .unwrap_or_else(|_| Complex::new(T::nan(), T::nan()))
                };
                let scale = self.model.system.omega / self.model.system.mass;
                laplace::talbot_invert(&f, t, self.oscillation, T::lit(1e-8) * scale)
            }
        }
    }

    /// Φ(t) = [[MĠ, G], [M²G̈, MĠ]].
    pub fn phase_matrix(&self, t: T) -> Result<PhaseMatrix<T>> {
        Self::check_time(t)?;
        if t == T::zero() {
            return Ok(Mat2::identity());
        }
        let mass = self.model.system.mass;
        let g = self.green(t)?;
        let dg = mass * self.dgreen(t)?;
        let ddg = mass * mass * self.ddgreen(t)?;
        Ok(Mat2::new(dg, g, ddg, dg))
    }

    /// Φ(t, τ) = Φ(t)Φ⁻¹(τ).
    pub fn transition(&self, t: T, tau: T) -> Result<PhaseMatrix<T>> {
        let phi_t = self.phase_matrix(t)?;
        let phi_tau = self.phase_matrix(tau)?;
        let inv = phi_tau
            .try_inverse(T::lit(1e-10))
            .ok_or_else(|| Error::SingularTransition {
                t: tau.to_f64().unwrap_or(f64::NAN),
                det: phi_tau.det().to_f64().unwrap_or(f64::NAN),
            })?;
        Ok(phi_t * inv)
    }

    /// Final-value propagator
    /// Φ_f(τ, τ′) = −Φ(τ, t)Φ(t − τ′) + θ(τ − τ′)Φ(τ − τ′)
    /// on the window [0, t_final].
    pub fn final_value(&self, tau: T, tau_prime: T, t_final: T) -> Result<PhaseMatrix<T>> {
        if tau < T::zero() || tau_prime < T::zero() || tau > t_final || tau_prime > t_final {
            return Err(Error::invalid(
                "final_value needs 0 <= tau, tau' <= t_final",
            ));
        }
        let advanced = self.transition(tau, t_final)? * self.phase_matrix(t_final - tau_prime)?;
        let mut result = -advanced;
        if tau >= tau_prime {
            result = result + self.phase_matrix(tau - tau_prime)?;
        }
        Ok(result)
    }
}

/// Ohmic modes: three simple poles of (s+Λ)/[(s+Λ*)(s²+2γ*s+Ω*²)] with the
/// uniform residue formula A_k = (f_k + Λ)/D′(f_k).
fn ohmic_modes<T: Real>(omega: T, gamma0: T, lambda: T) -> Result<ModeDecomposition<T>> {
    let roots = ohmic_cubic_roots(omega, gamma0, lambda)?;
    let om2 = omega * omega;
    let b = om2 + T::lit(2.0) * gamma0 * lambda;
    let mut modes = Vec::with_capacity(3);
    let mut min_sep = T::infinity();
    for (i, &f) in roots.iter().enumerate() {
        for &g in roots.iter().skip(i + 1) {
            min_sep = min_sep.min((f - g).norm());
        }
    }
    let scale = roots.iter().map(|r| r.norm()).fold(T::zero(), T::max);
    if min_sep < T::lit(1e-9) * scale {
        return Err(Error::DegenerateBoundary {
            context: "coincident characteristic rates in the ohmic cubic".into(),
        });
    }
    for &f in &roots {
        // D′(s) = 3s² + 2Λs + (Ω² + 2γ₀Λ).
        let dprime = f * f * T::lit(3.0) + f * (T::lit(2.0) * lambda) + b;
        modes.push(((f + lambda) / dprime, f));
    }
    Ok(ModeDecomposition::new(T::one(), modes, Vec::new()))
}

/// Sub-ohmic modes: the quartic x⁴ + 2γ*√(2ω*)x + Ω² in x = √s has the
/// closed-form roots
/// r₁,₂ = (√ω* ± i√(ω*+2γ*))/√2, r₃,₄ = (−√ω* ± i√(ω*−2γ*))/√2,
/// each polished by one Newton step; amplitudes A_j = Π_{k≠j} (r_j−r_k)⁻¹.
fn sub_ohmic_modes<T: Real>(
    omega: T,
    gamma_star: T,
    model: &SpectralModel<T>,
) -> Result<ModeDecomposition<T>> {
    let ws = model.sub_omega_star(gamma_star);
    let two = T::lit(2.0);
    let half_sqrt = |v: T| Complex::new(v, T::zero()).sqrt() / two.sqrt();
    let sw = ws.sqrt() / two.sqrt();
    let p_plus = half_sqrt(ws + two * gamma_star);
    let p_minus = half_sqrt(ws - two * gamma_star);
    let i = Complex::new(T::zero(), T::one());
    let mut roots = [
        Complex::new(sw, T::zero()) + i * p_plus,
        Complex::new(sw, T::zero()) - i * p_plus,
        -Complex::new(sw, T::zero()) + i * p_minus,
        -Complex::new(sw, T::zero()) - i * p_minus,
    ];
    // One Newton polish per root on the quartic.
    let lin = two * gamma_star * (two * ws).sqrt();
    let om2 = omega * omega;
    for r in roots.iter_mut() {
        let p = *r * *r * *r * *r + *r * lin + om2;
        let dp = *r * *r * *r * T::lit(4.0) + lin;
        *r -= p / dp;
        let resid = (*r * *r * *r * *r + *r * lin + om2).norm();
        let scale = r.norm_sqr() * r.norm_sqr() + lin * r.norm() + om2;
        if resid > T::lit(1e-12) * scale {
            return Err(Error::RootFinding {
                residual: resid.to_f64().unwrap_or(f64::NAN),
                tolerance: 1e-12,
            });
        }
    }
    let mut modes = Vec::with_capacity(4);
    for (j, &rj) in roots.iter().enumerate() {
        let mut denom = Complex::new(T::one(), T::zero());
        for (k, &rk) in roots.iter().enumerate() {
            if k != j {
                denom *= rj - rk;
            }
        }
        modes.push((denom.inv(), rj));
    }
    Ok(ModeDecomposition::new(T::one(), Vec::new(), modes))
}

/// Supra-ohmic modes: four simple poles of
/// (s+Λ)²/[(s²+Ω²)(s+Λ)² + γ₂Λs²] with residues A_k = (s_k+Λ)²/Q′(s_k).
fn supra_ohmic_modes<T: Real>(omega: T, gamma2: T, lambda: T) -> Result<ModeDecomposition<T>> {
    let om2 = omega * omega;
    let two = T::lit(2.0);
    // Q(s) = s⁴ + 2Λs³ + (Λ²+Ω²+γ₂Λ)s² + 2ΛΩ²s + Λ²Ω².
    let c2 = lambda * lambda + om2 + gamma2 * lambda;
    let coeffs = [
        lambda * lambda * om2,
        two * lambda * om2,
        c2,
        two * lambda,
        T::one(),
    ];
    let roots = poly::roots(&coeffs)?;
    let scale = roots.iter().map(|r| r.norm()).fold(T::zero(), T::max);
    for (i, &f) in roots.iter().enumerate() {
        for &g in roots.iter().skip(i + 1) {
            if (f - g).norm() < T::lit(1e-9) * scale {
                return Err(Error::DegenerateBoundary {
                    context: "coincident characteristic rates in the supra-ohmic quartic".into(),
                });
            }
        }
    }
    let mut modes = Vec::with_capacity(4);
    for &s in &roots {
        let dq = s * s * s * T::lit(4.0)
            + s * s * (T::lit(6.0) * lambda)
            + s * (two * c2)
            + two * lambda * om2;
        let num = (s + lambda) * (s + lambda);
        modes.push((num / dq, s));
    }
    Ok(ModeDecomposition::new(T::one(), modes, Vec::new()))
}

/// G(t) for any family (mode sums for the built-ins, certified numerical
/// inversion for tabulated baths).
pub fn green_time<T: Real>(model: &SpectralModel<T>, t: T) -> Result<T> {
    Propagator::new(model)?.green(t)
}

/// Φ(t) for any family.
pub fn phase_propagator<T: Real>(model: &SpectralModel<T>, t: T) -> Result<PhaseMatrix<T>> {
    Propagator::new(model)?.phase_matrix(t)
}

/// Φ(t, τ) = Φ(t)Φ⁻¹(τ).
pub fn transition_matrix<T: Real>(model: &SpectralModel<T>, t: T, tau: T) -> Result<PhaseMatrix<T>> {
    Propagator::new(model)?.transition(t, tau)
}

/// Φ_f(τ, τ′) on the window [0, t_final].
pub fn final_value_propagator<T: Real>(
    model: &SpectralModel<T>,
    tau: T,
    tau_prime: T,
    t_final: T,
) -> Result<PhaseMatrix<T>> {
    Propagator::new(model)?.final_value(tau, tau_prime, t_final)
}

/// All characteristic rates of the model: poles of Ĝ for the rational
/// families, quartic roots in the √s variable for the sub-ohmic family.
pub fn characteristic_rates<T: Real>(model: &SpectralModel<T>) -> Result<Vec<Complex<T>>> {
    let sys = model.system;
    match &model.family {
        BathFamily::OhmicRational { gamma0, lambda } => {
            ohmic_cubic_roots(sys.omega, *gamma0, *lambda)
        }
        BathFamily::SubOhmicSqrt { gamma_star } => {
            let modes = sub_ohmic_modes(sys.omega, *gamma_star, model)?;
            Ok(modes.erfc_modes.iter().map(|&(_, r)| r).collect())
        }
        BathFamily::SupraOhmicRational { gamma2, lambda } => {
            let modes = supra_ohmic_modes(sys.omega, *gamma2, *lambda)?;
            Ok(modes.exp_modes.iter().map(|&(_, f)| f).collect())
        }
        BathFamily::CustomTabulated(_) => Err(Error::invalid(
            "characteristic rates require a closed-form damping kernel",
        )),
    }
}

/// Classifies the ohmic dissipative regime from the root structure of the
/// characteristic cubic.
pub fn classify_regime<T: Real>(
    mass: T,
    omega: T,
    gamma0: T,
    lambda: T,
) -> Result<RegimeLabel> {
    if !(mass > T::zero() && omega > T::zero() && gamma0 > T::zero() && lambda > T::zero()) {
        return Err(Error::invalid("classify_regime needs positive inputs"));
    }
    // Discriminant of s³ + as² + bs + c.
    let a = lambda;
    let b = omega * omega + T::lit(2.0) * gamma0 * lambda;
    let c = lambda * omega * omega;
    let t1 = T::lit(18.0) * a * b * c;
    let t2 = -T::lit(4.0) * a * a * a * c;
    let t3 = a * a * b * b;
    let t4 = -T::lit(4.0) * b * b * b;
    let t5 = -T::lit(27.0) * c * c;
    let disc = t1 + t2 + t3 + t4 + t5;
    let disc_scale = t1.abs() + t2.abs() + t3.abs() + t4.abs() + t5.abs();
    if disc.abs() <= T::lit(1e-12) * disc_scale {
        return Err(Error::DegenerateBoundary {
            context: format!(
                "characteristic cubic on a root-degeneracy boundary (discriminant {:e} \
                 against scale {:e})",
                disc.to_f64().unwrap_or(f64::NAN),
                disc_scale.to_f64().unwrap_or(f64::NAN)
            ),
        });
    }
    if disc > T::zero() {
        // Three distinct real roots.
        return Ok(RegimeLabel::Overdamped);
    }
    let star = star_parameters(mass, omega, gamma0, lambda)?;
    if star.gamma_star <= star.lambda_star {
        Ok(RegimeLabel::Underdamped)
    } else {
        Ok(RegimeLabel::StrongCoupling)
    }
}

/// Certified numerical inverse Laplace transform (deformed-contour method
/// with an internal agreement check).
pub fn inverse_laplace_numeric<T: Real, F>(f_hat: F, t: T, tol: T) -> Result<T>
where
    F: Fn(Complex<T>) -> Complex<T>,
{
    laplace::talbot_invert(&f_hat, t, T::zero(), tol)
}
