//! Bath spectral densities and the kernels they induce: I(ω), the Laplace
//! damping kernel γ̂(s), the time-domain damping kernel γ(t), the noise
//! kernel ν(t), the frequency renormalization, and a roundtrip validator for
//! user-supplied damping kernels.
//!
//! Conventions (ħ = k_B = 1): the equation of motion is
//! M ẍ + 2M ∫₀ᵗ γ(t−τ) ẋ(τ) dτ + M Ω² x + 2M γ(t) x(0) = F(t) + ξ(t),
//! with Ω the physical (post-renormalization) frequency,
//! γ(t) = (1/M)∫₀^∞ dω [I(ω)/ω] cos(ωt) and
//! ν(t) = ∫₀^∞ dω I(ω) coth(ω/2T) cos(ωt).

use crate::error::{Error, Result};
use crate::quad::{self, QuadTol};
use crate::specfun::bose_coth;
use crate::{Complex, Real};

/// Oscillator parameters and bath temperature (ħ = k_B = 1).
///
/// `temperature == 0` is the exact zero-temperature branch: coth factors are
/// then exactly 1 and low-temperature expansions are used where closed forms
/// differ.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SystemParams<T = f64> {
    pub mass: T,
    pub omega: T,
    pub temperature: T,
}

impl<T: Real> SystemParams<T> {
    pub fn new(mass: T, omega: T, temperature: T) -> Result<Self> {
        if !(mass > T::zero() && mass.is_finite()) {
            return Err(Error::invalid("mass must be positive and finite"));
        }
        if !(omega > T::zero() && omega.is_finite()) {
            return Err(Error::invalid("frequency must be positive and finite"));
        }
        if !(temperature >= T::zero() && temperature.is_finite()) {
            return Err(Error::invalid("temperature must be non-negative and finite"));
        }
        Ok(SystemParams {
            mass,
            omega,
            temperature,
        })
    }

    /// True exactly at T = 0.
    pub fn is_zero_temperature(&self) -> bool {
        self.temperature == T::zero()
    }

    /// coth(ω/2T), exactly 1 at T = 0.
    pub fn coth(&self, omega: T) -> T {
        bose_coth(omega, self.temperature)
    }
}

/// Strictly increasing tabulated spectral density with a shape-preserving
/// (monotone cubic) interpolant in log-frequency. Queries outside the grid
/// are refused.
#[derive(Debug, Clone, PartialEq)]
pub struct TabulatedDensity<T = f64> {
    log_omegas: Vec<T>,
    omegas: Vec<T>,
    intensities: Vec<T>,
    slopes: Vec<T>,
    pub odd_extension: bool,
}

impl<T: Real> TabulatedDensity<T> {
    pub fn from_samples(samples: &[(T, T)], odd_extension: bool) -> Result<Self> {
        if samples.len() < 4 {
            return Err(Error::invalid(
                "tabulated spectral density needs at least 4 samples",
            ));
        }
        let mut omegas = Vec::with_capacity(samples.len());
        let mut intensities = Vec::with_capacity(samples.len());
        for &(w, i) in samples {
            if !(w > T::zero() && w.is_finite()) {
                return Err(Error::invalid("tabulated frequencies must be positive"));
            }
            if !(i >= T::zero() && i.is_finite()) {
                return Err(Error::invalid(
                    "tabulated intensities must be non-negative and finite",
                ));
            }
            if let Some(&last) = omegas.last() {
                if w <= last {
                    return Err(Error::invalid(
                        "tabulated frequencies must be strictly increasing",
                    ));
                }
            }
            omegas.push(w);
            intensities.push(i);
        }
        let log_omegas: Vec<T> = omegas.iter().map(|w| w.ln()).collect();
        let slopes = pchip_slopes(&log_omegas, &intensities);
        Ok(TabulatedDensity {
            log_omegas,
            omegas,
            intensities,
            slopes,
            odd_extension,
        })
    }

    /// Reads a two-column CSV with header `omega,intensity`.
    pub fn from_csv_path(path: &std::path::Path, odd_extension: bool) -> Result<Self> {
        let mut reader = csv::Reader::from_path(path).map_err(|e| Error::Io {
            context: format!("{}: {e}", path.display()),
        })?;
        let headers = reader.headers().map_err(|e| Error::Io {
            context: format!("{}: {e}", path.display()),
        })?;
        if headers.len() < 2 || &headers[0] != "omega" || &headers[1] != "intensity" {
            return Err(Error::Io {
                context: format!(
                    "{}: expected header `omega,intensity`, found `{}`",
                    path.display(),
                    headers.iter().collect::<Vec<_>>().join(",")
                ),
            });
        }
        let mut samples = Vec::new();
        for record in reader.records() {
            let record = record.map_err(|e| Error::Io {
                context: format!("{}: {e}", path.display()),
            })?;
            let parse = |field: &str| -> Result<T> {
                field
                    .trim()
                    .parse::<f64>()
                    .map(T::lit)
                    .map_err(|e| Error::Io {
                        context: format!("{}: bad number `{field}`: {e}", path.display()),
                    })
            };
            samples.push((parse(&record[0])?, parse(&record[1])?));
        }
        Self::from_samples(&samples, odd_extension)
    }

    pub fn omega_min(&self) -> T {
        self.omegas[0]
    }

    pub fn omega_max(&self) -> T {
        *self.omegas.last().unwrap()
    }

    pub fn knots(&self) -> &[T] {
        &self.omegas
    }

    /// Interpolated I(ω); refuses extrapolation.
    pub fn evaluate(&self, omega: T) -> Result<T> {
        if !(omega >= self.omega_min() && omega <= self.omega_max()) {
            return Err(Error::Interpolation {
                context: format!(
                    "omega={:e} outside tabulated range [{:e}, {:e}]",
                    omega.to_f64().unwrap_or(f64::NAN),
                    self.omega_min().to_f64().unwrap_or(f64::NAN),
                    self.omega_max().to_f64().unwrap_or(f64::NAN),
                ),
            });
        }
        let x = omega.ln();
        let n = self.log_omegas.len();
        // Binary search for the containing interval.
        let mut lo = 0usize;
        let mut hi = n - 1;
        while hi - lo > 1 {
            let mid = (lo + hi) / 2;
            if self.log_omegas[mid] <= x {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let h = self.log_omegas[hi] - self.log_omegas[lo];
        let s = (x - self.log_omegas[lo]) / h;
        let (y0, y1) = (self.intensities[lo], self.intensities[hi]);
        let (d0, d1) = (self.slopes[lo] * h, self.slopes[hi] * h);
        // Cubic Hermite basis.
        let s2 = s * s;
        let s3 = s2 * s;
        let two = T::lit(2.0);
        let three = T::lit(3.0);
        Ok(y0 * (two * s3 - three * s2 + T::one()) + y1 * (three * s2 - two * s3)
            + d0 * (s3 - two * s2 + s)
            + d1 * (s3 - s2))
    }
}

/// Shape-preserving cubic slopes (Fritsch–Carlson limiter).
pub(crate) fn pchip_slopes<T: Real>(xs: &[T], ys: &[T]) -> Vec<T> {
    let n = xs.len();
    let mut deltas = Vec::with_capacity(n - 1);
    for i in 0..n - 1 {
        deltas.push((ys[i + 1] - ys[i]) / (xs[i + 1] - xs[i]));
    }
    let mut slopes = vec![T::zero(); n];
    slopes[0] = deltas[0];
    slopes[n - 1] = deltas[n - 2];
    for i in 1..n - 1 {
        let (d0, d1) = (deltas[i - 1], deltas[i]);
        if d0 * d1 <= T::zero() {
            slopes[i] = T::zero();
        } else {
            let (h0, h1) = (xs[i] - xs[i - 1], xs[i + 1] - xs[i]);
            let w1 = T::lit(2.0) * h1 + h0;
            let w2 = h1 + T::lit(2.0) * h0;
            slopes[i] = (w1 + w2) / (w1 / d0 + w2 / d1);
        }
    }
    slopes
}

/// Bath family: the spectral density shape and its parameters.
#[derive(Debug, Clone, PartialEq)]
pub enum BathFamily<T = f64> {
    /// I(ω) = (2/π) M γ₀ ω / (1 + (ω/Λ)²): linear low-frequency rise with a
    /// rational high-frequency cutoff.
    OhmicRational { gamma0: T, lambda: T },
    /// I(ω) = (2/π) M γ* √(ω* ω) with ω*² = Ω² + γ*²: square-root
    /// low-frequency rise and no ultraviolet cutoff.
    SubOhmicSqrt { gamma_star: T },
    /// I(ω) = (2/π) M γ₂ ω (ω/Λ)² / (1 + (ω/Λ)²)²: cubic low-frequency rise
    /// with a rational cutoff.
    SupraOhmicRational { gamma2: T, lambda: T },
    /// Interpolated user table.
    CustomTabulated(TabulatedDensity<T>),
}

/// A spectral model: oscillator parameters plus a bath family.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralModel<T = f64> {
    pub system: SystemParams<T>,
    pub family: BathFamily<T>,
}

/// One (t, value) sample of a kernel, as emitted by tabulation commands.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelSample<T = f64> {
    pub t: T,
    pub value: T,
}

/// Outcome of the damping-kernel roundtrip validation.
pub enum DampingValidation<T: Real> {
    /// The candidate is reproduced by its own induced spectral density.
    Accepted,
    /// The candidate is not reproducible; the returned model carries the
    /// induced spectral density whose damping kernel is the corrected one.
    Replacement(SpectralModel<T>),
}

impl<T: Real> SpectralModel<T> {
    pub fn new(system: SystemParams<T>, family: BathFamily<T>) -> Result<Self> {
        match &family {
            BathFamily::OhmicRational { gamma0, lambda } => {
                if !(*gamma0 > T::zero() && *lambda > T::zero()) {
                    return Err(Error::invalid("ohmic family needs gamma0 > 0, lambda > 0"));
                }
            }
            BathFamily::SubOhmicSqrt { gamma_star } => {
                if !(*gamma_star > T::zero()) {
                    return Err(Error::invalid("sub-ohmic family needs gamma_star > 0"));
                }
            }
            BathFamily::SupraOhmicRational { gamma2, lambda } => {
                if !(*gamma2 > T::zero() && *lambda > T::zero()) {
                    return Err(Error::invalid(
                        "supra-ohmic family needs gamma2 > 0, lambda > 0",
                    ));
                }
            }
            BathFamily::CustomTabulated(_) => {}
        }
        Ok(SpectralModel { system, family })
    }

    /// √(Ω² + γ*²) for the sub-ohmic family.
    pub(crate) fn sub_omega_star(&self, gamma_star: T) -> T {
        (self.system.omega * self.system.omega + gamma_star * gamma_star).sqrt()
    }

    /// Spectral density I(ω) for ω ≥ 0.
    pub fn spectral_density(&self, omega: T) -> Result<T> {
        if omega < T::zero() {
            return Err(Error::invalid(
                "spectral_density takes omega >= 0; use spectral_density_odd for signed arguments",
            ));
        }
        let m = self.system.mass;
        let two_over_pi = T::lit(2.0) / T::PI();
        match &self.family {
            BathFamily::OhmicRational { gamma0, lambda } => {
                let r = omega / *lambda;
                Ok(two_over_pi * m * *gamma0 * omega / (T::one() + r * r))
            }
            BathFamily::SubOhmicSqrt { gamma_star } => {
                let ws = self.sub_omega_star(*gamma_star);
                Ok(two_over_pi * m * *gamma_star * (ws * omega).sqrt())
            }
            BathFamily::SupraOhmicRational { gamma2, lambda } => {
                let r = omega / *lambda;
                let denom = T::one() + r * r;
                Ok(two_over_pi * m * *gamma2 * omega * r * r / (denom * denom))
            }
            BathFamily::CustomTabulated(table) => {
                if omega == T::zero() {
                    return Ok(T::zero());
                }
                table.evaluate(omega)
            }
        }
    }

    /// Odd extension I(−ω) = −I(ω), defined for any sign of ω.
    pub fn spectral_density_odd(&self, omega: T) -> Result<T> {
        if let BathFamily::CustomTabulated(table) = &self.family {
            if !table.odd_extension && omega < T::zero() {
                return Err(Error::invalid(
                    "tabulated model was constructed without the odd extension",
                ));
            }
        }
        let v = self.spectral_density(omega.abs())?;
        Ok(if omega < T::zero() { -v } else { v })
    }

    /// Laplace-domain damping kernel γ̂(s), Re s > 0 (imaginary-axis values
    /// are the ε → 0⁺ limits).
    pub fn damping_laplace(&self, s: Complex<T>) -> Result<Complex<T>> {
        match &self.family {
            BathFamily::OhmicRational { gamma0, lambda } => {
                let one = Complex::new(T::one(), T::zero());
                Ok(Complex::new(*gamma0, T::zero()) / (one + s / *lambda))
            }
            BathFamily::SubOhmicSqrt { gamma_star } => {
                let ws = self.sub_omega_star(*gamma_star);
                let ratio = Complex::new(T::lit(2.0) * ws, T::zero()) / s;
                Ok(ratio.sqrt() * *gamma_star)
            }
            BathFamily::SupraOhmicRational { gamma2, lambda } => {
                let one = Complex::new(T::one(), T::zero());
                let r = s / *lambda;
                let denom = (one + r) * (one + r);
                Ok(r * T::lit(0.5) * *gamma2 / denom)
            }
            BathFamily::CustomTabulated(table) => {
                // γ̂(s) = (1/M)∫ [I(ω)/ω]·s/(s² + ω²) dω over the support.
                let m = self.system.mass;
                let table = table.clone();
                let f = |w: T| {
                    let i = table.evaluate(w).unwrap_or(T::zero());
                    i / w
                };
                let (a, b) = (table.omega_min(), table.omega_max());
                let splits: Vec<T> = decimated_knots(table.knots());
                let scale = typical_intensity(&table);
                let tol = QuadTol {
                    abs_tol: T::lit(1e-13) * scale * (b - a) / m,
                    rel_tol: T::lit(1e-11),
                    ..QuadTol::default()
                };
                let re = quad::integrate_with_splits(
                    &|w: T| f(w) * (s / (s * s + Complex::new(w * w, T::zero()))).re,
                    a,
                    b,
                    &splits,
                    tol,
                    "custom damping kernel (re)",
                )?;
                let im = quad::integrate_with_splits(
                    &|w: T| f(w) * (s / (s * s + Complex::new(w * w, T::zero()))).im,
                    a,
                    b,
                    &splits,
                    tol,
                    "custom damping kernel (im)",
                )?;
                Ok(Complex::new(re / m, im / m))
            }
        }
    }

    /// Time-domain damping kernel γ(t) = (1/M)∫ [I(ω)/ω] cos(ωt) dω,
    /// evaluated via |t| (the kernel is even).
    pub fn damping_time(&self, t: T) -> Result<T> {
        let t = t.abs();
        match &self.family {
            BathFamily::OhmicRational { gamma0, lambda } => Ok(*gamma0 * *lambda * (-*lambda * t).exp()),
            BathFamily::SubOhmicSqrt { gamma_star } => {
                if t == T::zero() {
                    return Err(Error::divergence(
                        "sub-ohmic damping kernel behaves as t^{-1/2} near t = 0",
                    ));
                }
                let ws = self.sub_omega_star(*gamma_star);
                Ok(*gamma_star * (T::lit(2.0) * ws / (T::PI() * t)).sqrt())
            }
            BathFamily::SupraOhmicRational { gamma2, lambda } => {
                let x = *lambda * t;
                Ok(*gamma2 * *lambda * T::lit(0.5) * (-x).exp() * (T::one() - x))
            }
            BathFamily::CustomTabulated(table) => {
                let m = self.system.mass;
                let table = table.clone();
                let (a, b) = (table.omega_min(), table.omega_max());
                let splits = decimated_knots(table.knots());
                let scale = typical_intensity(&table);
                let tol = QuadTol {
                    abs_tol: T::lit(1e-13) * scale * (b - a) / m,
                    rel_tol: T::lit(1e-11),
                    ..QuadTol::default()
                };
                let v = quad::integrate_with_splits(
                    &|w: T| table.evaluate(w).unwrap_or(T::zero()) / w * (w * t).cos(),
                    a,
                    b,
                    &splits,
                    tol,
                    "custom damping kernel (time)",
                )?;
                Ok(v / m)
            }
        }
    }

    /// Noise kernel ν(t) = ∫ I(ω) coth(ω/2T) cos(ωt) dω, evaluated via |t|.
    ///
    /// For the built-in families the integral diverges logarithmically at
    /// t = 0 (their densities decay no faster than 1/ω), so t = 0 is an
    /// error rather than a fabricated number. For t > 0 the integral is
    /// split into a head on [0, W] and an accelerated oscillatory tail; the
    /// sub-ohmic zero-point part (whose envelope grows like √ω) is summed in
    /// the Abel sense, which has the closed form −Mγ*√(ω*/2π)·t^{−3/2}.
    pub fn noise_kernel(&self, t: T) -> Result<T> {
        let t = t.abs();
        let sys = self.system;
        if let BathFamily::CustomTabulated(table) = &self.family {
            let table = table.clone();
            let (a, b) = (table.omega_min(), table.omega_max());
            let splits = decimated_knots(table.knots());
            let scale = typical_intensity(&table) * (b - a);
            let tol = QuadTol {
                abs_tol: T::lit(1e-13) * scale,
                rel_tol: T::lit(1e-11),
                max_intervals: 20_000,
            };
            return quad::integrate_with_splits(
                &|w: T| {
                    table.evaluate(w).unwrap_or(T::zero()) * sys.coth(w) * (w * t).cos()
                },
                a,
                b,
                &splits,
                tol,
                "custom noise kernel",
            );
        }
        if t == T::zero() {
            return Err(Error::divergence(
                "noise kernel at t = 0: ∫ I(ω) coth(ω/2T) dω diverges logarithmically \
                 for this family",
            ));
        }
        // Zero-point part.
        let vacuum = match &self.family {
            BathFamily::SubOhmicSqrt { gamma_star } => {
                let ws = self.sub_omega_star(*gamma_star);
                -sys.mass * *gamma_star * (ws / (T::lit(2.0) * T::PI())).sqrt()
                    / (t * t.sqrt())
            }
            _ => self.oscillatory_cosine_integral(&|w| self.spectral_density(w).unwrap(), t)?,
        };
        // Thermal part: envelope decays like e^{−ω/T}.
        let thermal = if sys.is_zero_temperature() {
            T::zero()
        } else {
            let env = |w: T| {
                let n2 = sys.coth(w) - T::one();
                self.spectral_density(w).unwrap() * n2
            };
            self.oscillatory_cosine_integral(&env, t)?
        };
        Ok(vacuum + thermal)
    }

    /// ∫₀^∞ E(ω) cos(ωt) dω for a smooth envelope with the family's scales;
    /// adaptive head on [0, W], accelerated alternating tail beyond.
    fn oscillatory_cosine_integral<F: Fn(T) -> T>(&self, envelope: &F, t: T) -> Result<T> {
        let sys = self.system;
        let mut splits = vec![sys.omega, T::lit(2.0) * T::PI() * sys.temperature];
        let lam = match &self.family {
            BathFamily::OhmicRational { lambda, .. }
            | BathFamily::SupraOhmicRational { lambda, .. } => *lambda,
            _ => sys.omega,
        };
        splits.push(lam);
        let w_head = T::lit(30.0) / t;
        // Tolerances scale with the envelope's peak over the characteristic
        // frequencies, times a characteristic width.
        let mut env_peak = T::zero();
        for w in [
            sys.omega * T::lit(0.1),
            sys.omega,
            sys.temperature,
            T::lit(2.0) * sys.temperature,
            lam,
            w_head * T::lit(0.5),
        ] {
            if w > T::zero() && w.is_finite() {
                env_peak = env_peak.max(envelope(w).abs());
            }
        }
        let width = w_head.min(lam + sys.omega + T::lit(15.0) * (sys.temperature + sys.omega));
        let scale = env_peak.max(T::min_positive_value()) * width;
        let tol = QuadTol {
            abs_tol: T::lit(1e-13) * scale,
            rel_tol: T::lit(1e-11),
            max_intervals: 8_000,
        };
        let head = quad::integrate_with_splits(
            &|w: T| envelope(w) * (w * t).cos(),
            T::zero(),
            w_head,
            &splits,
            tol,
            "noise kernel head",
        )?;
        let tail = quad::integrate_fourier_tail(
            envelope,
            t,
            w_head,
            true,
            T::lit(1e-12) * scale,
            "noise kernel tail",
        )?;
        Ok(head + tail)
    }

    /// Frequency renormalization δΩ² = 2γ(0) = (2/M)∫ [I(ω)/ω] dω.
    pub fn frequency_renormalization(&self) -> Result<T> {
        match &self.family {
            BathFamily::OhmicRational { gamma0, lambda } => {
                Ok(T::lit(2.0) * *gamma0 * *lambda)
            }
            BathFamily::SubOhmicSqrt { .. } => Err(Error::divergence(
                "sub-ohmic frequency renormalization: ∫ I(ω)/ω dω diverges at large ω \
                 (logarithmically divergent bare counterterm)",
            )),
            BathFamily::SupraOhmicRational { gamma2, lambda } => Ok(*gamma2 * *lambda),
            BathFamily::CustomTabulated(_) => {
                Ok(T::lit(2.0) * self.damping_time(T::zero())?)
            }
        }
    }
}

fn typical_intensity<T: Real>(table: &TabulatedDensity<T>) -> T {
    let mid = table.intensities.len() / 2;
    table
        .intensities
        .iter()
        .fold(table.intensities[mid], |acc, &v| acc.max(v))
        .max(T::min_positive_value())
}

/// At most 32 interior split points from a knot list.
fn decimated_knots<T: Real>(knots: &[T]) -> Vec<T> {
    let stride = (knots.len() / 32).max(1);
    knots.iter().step_by(stride).copied().collect()
}

/// Validates a candidate Laplace damping kernel by the spectral roundtrip:
/// the candidate induces I(ω) = (Mω/π)·lim_{ε→0}[γ̂(ε+iω) + γ̂(ε−iω)], and
/// that density induces a damping kernel of its own. A candidate that
/// reproduces itself at 64 logarithmic sample points is accepted; otherwise
/// the induced (corrected) model is returned.
pub fn validate_damping_candidate<T: Real, F>(
    system: SystemParams<T>,
    candidate: F,
) -> Result<DampingValidation<T>>
where
    F: Fn(Complex<T>) -> Complex<T>,
{
    let omega0 = system.omega;
    let m = system.mass;
    let induced = |w: T| -> T {
        // Two-point Richardson extrapolation of the ε → 0⁺ limit.
        let eps1 = T::lit(1e-5) * (w + omega0);
        let eps2 = eps1 * T::lit(0.5);
        let sym = |eps: T| {
            (candidate(Complex::new(eps, w)) + candidate(Complex::new(eps, -w))).re
        };
        let v1 = sym(eps1);
        let v2 = sym(eps2);
        (m * w / T::PI()) * (T::lit(2.0) * v2 - v1)
    };

    // Positivity scan of the induced density.
    let n = 64;
    let (lo, hi) = (omega0 * T::lit(0.01), omega0 * T::lit(100.0));
    let ratio = (hi / lo).ln() / T::of_usize(n - 1);
    let mut max_abs = T::zero();
    let mut worst_neg: Option<(T, T)> = None;
    let mut samples = Vec::with_capacity(n);
    for k in 0..n {
        let w = lo * (ratio * T::of_usize(k)).exp();
        let i_w = induced(w);
        max_abs = max_abs.max(i_w.abs());
        samples.push((w, i_w));
    }
    for &(w, i_w) in &samples {
        if i_w < -T::lit(1e-10) * max_abs {
            worst_neg = Some((w, i_w));
            break;
        }
    }
    if let Some((w, i_w)) = worst_neg {
        return Err(Error::NonPositiveSpectrum {
            omega: w.to_f64().unwrap_or(f64::NAN),
            context: format!("induced density {:e}", i_w.to_f64().unwrap_or(f64::NAN)),
        });
    }

    // Roundtrip kernel from the induced density.
    let roundtrip = |s: T| -> Result<T> {
        let f = |w: T| induced(w).max(T::zero()) / w * s / (s * s + w * w) / m;
        let tol = QuadTol::new(1e-12, 1e-10);
        let head = quad::integrate_with_splits(
            &f,
            T::zero(),
            hi,
            &[omega0, s],
            tol,
            "roundtrip head",
        )?;
        let tail = quad::integrate_to_infinity(&f, hi, hi, tol, "roundtrip tail")?;
        Ok(head + tail)
    };

    let mut max_dev = T::zero();
    let mut cand_scale = T::zero();
    for k in 0..n {
        let s = lo * (ratio * T::of_usize(k)).exp();
        let cand = candidate(Complex::new(s, T::zero())).re;
        let rt = roundtrip(s)?;
        max_dev = max_dev.max((cand - rt).abs());
        cand_scale = cand_scale.max(cand.abs());
    }
    if max_dev <= T::lit(1e-4) * cand_scale.max(T::min_positive_value()) {
        return Ok(DampingValidation::Accepted);
    }

    // Build the corrected model from a dense sampling of the induced density.
    let dense = 200;
    let (dlo, dhi) = (omega0 * T::lit(1e-3), omega0 * T::lit(1e3));
    let dratio = (dhi / dlo).ln() / T::of_usize(dense - 1);
    let mut table = Vec::with_capacity(dense);
    for k in 0..dense {
        let w = dlo * (dratio * T::of_usize(k)).exp();
        table.push((w, induced(w).max(T::zero())));
    }
    let density = TabulatedDensity::from_samples(&table, true)?;
    Ok(DampingValidation::Replacement(SpectralModel::new(
        system,
        BathFamily::CustomTabulated(density),
    )?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::specfun::{e1_scaled, ei_scaled};
    use approx::assert_relative_eq;

    fn sys() -> SystemParams<f64> {
        SystemParams::new(1.0, 1.0, 0.0).unwrap()
    }

    fn sys_at(temp: f64) -> SystemParams<f64> {
        SystemParams::new(1.0, 1.0, temp).unwrap()
    }

    fn ohmic(gamma0: f64, lambda: f64, temp: f64) -> SpectralModel<f64> {
        SpectralModel::new(
            sys_at(temp),
            BathFamily::OhmicRational { gamma0, lambda },
        )
        .unwrap()
    }

    #[test]
    fn system_params_validation() {
        assert!(SystemParams::new(0.0, 1.0, 0.0).is_err());
        assert!(SystemParams::new(1.0, -1.0, 0.0).is_err());
        assert!(SystemParams::new(1.0, 1.0, -0.1).is_err());
        assert!(sys().is_zero_temperature());
        assert!(!sys_at(0.5).is_zero_temperature());
    }

    #[test]
    fn spectral_density_reference_points() {
        let m = ohmic(0.1, 20.0, 0.0);
        // At ω = Λ the rational cutoff halves the linear rise.
        assert_relative_eq!(
            m.spectral_density(20.0).unwrap(),
            (1.0 / core::f64::consts::PI) * 0.1 * 20.0,
            epsilon = 1e-14
        );
        let sub = SpectralModel::new(sys(), BathFamily::SubOhmicSqrt { gamma_star: 0.25 }).unwrap();
        let ws = (1.0f64 + 0.0625).sqrt();
        assert_relative_eq!(
            sub.spectral_density(ws).unwrap(),
            (2.0 / core::f64::consts::PI) * 0.25 * ws,
            epsilon = 1e-14
        );
        let supra = SpectralModel::new(
            sys(),
            BathFamily::SupraOhmicRational {
                gamma2: 0.3,
                lambda: 50.0,
            },
        )
        .unwrap();
        for model in [&m, &sub, &supra] {
            assert_eq!(model.spectral_density(0.0).unwrap(), 0.0);
        }
    }

    #[test]
    fn spectral_density_odd_extension() {
        let m = ohmic(0.1, 20.0, 0.0);
        let v = m.spectral_density(3.0).unwrap();
        assert_relative_eq!(m.spectral_density_odd(-3.0).unwrap(), -v, epsilon = 1e-15);
    }

    #[test]
    fn damping_laplace_reference_points() {
        // Effectively cutoff-free ohmic bath: γ̂ ≈ γ₀.
        let m = ohmic(0.1, 1e8, 0.0);
        let v = m.damping_laplace(Complex::new(0.0, 1.0)).unwrap();
        assert_relative_eq!(v.re, 0.1, max_relative = 1e-7);
        // Supra-ohmic kernel vanishes linearly at s → 0.
        let supra = SpectralModel::new(
            sys(),
            BathFamily::SupraOhmicRational {
                gamma2: 0.3,
                lambda: 50.0,
            },
        )
        .unwrap();
        let s = 1e-8;
        let v = supra.damping_laplace(Complex::new(s, 0.0)).unwrap();
        assert_relative_eq!(v.re / s, 0.3 / (2.0 * 50.0), max_relative = 1e-6);
        // Sub-ohmic: s² + 2sγ̂(s) + Ω² matches the quartic in x = √s.
        let gs = 0.25;
        let sub = SpectralModel::new(sys(), BathFamily::SubOhmicSqrt { gamma_star: gs }).unwrap();
        let ws = (1.0f64 + gs * gs).sqrt();
        for &s in &[0.3f64, 1.0, 7.0] {
            let gh = sub.damping_laplace(Complex::new(s, 0.0)).unwrap().re;
            let lhs = s * s + 2.0 * s * gh + 1.0;
            let x = s.sqrt();
            let rhs = x.powi(4) + 2.0 * gs * (2.0 * ws).sqrt() * x + 1.0;
            assert_relative_eq!(lhs, rhs, max_relative = 1e-12);
        }
    }

    #[test]
    fn damping_time_closed_forms_match_quadrature() {
        let m = ohmic(0.1, 20.0, 0.0);
        assert_relative_eq!(m.damping_time(0.0).unwrap(), 0.1 * 20.0, epsilon = 1e-14);
        // Quadrature oracle: (1/M)∫ [I/ω] cos(ωt) dω with head + tail.
        let oracle = |t: f64| {
            let env = |w: f64| m.spectral_density(w).unwrap() / w;
            let head = quad::integrate_with_splits(
                &|w: f64| env(w) * (w * t).cos(),
                0.0,
                30.0 / t,
                &[1.0, 20.0],
                QuadTol::new(1e-13, 1e-12),
                "head",
            )
            .unwrap();
            let tail =
                quad::integrate_fourier_tail(&env, t, 30.0 / t, true, 1e-12, "tail").unwrap();
            head + tail
        };
        for &t in &[0.1, 0.5] {
            assert_relative_eq!(m.damping_time(t).unwrap(), oracle(t), max_relative = 1e-7);
        }
        // At Λt = 20 the kernel is ~4e−9 while the integrand is O(0.1); the
        // oracle's cancellation floor makes this an absolute comparison.
        assert_relative_eq!(
            m.damping_time(1.0).unwrap(),
            oracle(1.0),
            epsilon = 5e-12
        );
        // Evenness.
        assert_eq!(m.damping_time(-0.7).unwrap(), m.damping_time(0.7).unwrap());
        // Supra-ohmic closed form against quadrature.
        let supra = SpectralModel::new(
            sys(),
            BathFamily::SupraOhmicRational {
                gamma2: 0.3,
                lambda: 10.0,
            },
        )
        .unwrap();
        for &t in &[0.05, 0.3] {
            let env = |w: f64| supra.spectral_density(w).unwrap() / w;
            let head = quad::integrate_with_splits(
                &|w: f64| env(w) * (w * t).cos(),
                0.0,
                30.0 / t,
                &[1.0, 10.0],
                QuadTol::new(1e-13, 1e-12),
                "head",
            )
            .unwrap();
            let tail =
                quad::integrate_fourier_tail(&env, t, 30.0 / t, true, 1e-12, "tail").unwrap();
            assert_relative_eq!(supra.damping_time(t).unwrap(), head + tail, epsilon = 1e-8);
        }
        // Sub-ohmic closed form against quadrature at t = 1.
        let gs = 0.25;
        let sub = SpectralModel::new(sys(), BathFamily::SubOhmicSqrt { gamma_star: gs }).unwrap();
        let t = 1.0;
        let env = |w: f64| sub.spectral_density(w).unwrap() / w;
        let head = quad::integrate(
            &|w: f64| env(w) * (w * t).cos(),
            0.0,
            30.0,
            QuadTol::new(1e-12, 1e-12),
            "head",
        )
        .unwrap();
        let tail = quad::integrate_fourier_tail(&env, t, 30.0, true, 1e-12, "tail").unwrap();
        assert_relative_eq!(sub.damping_time(t).unwrap(), head + tail, max_relative = 1e-8);
        // And the sub-ohmic kernel diverges at t = 0.
        assert!(matches!(
            sub.damping_time(0.0),
            Err(Error::Divergence { .. })
        ));
    }

    #[test]
    fn noise_kernel_zero_time_diverges_for_builtin_families() {
        for model in [
            ohmic(0.1, 20.0, 0.0),
            ohmic(0.1, 20.0, 1.0),
            SpectralModel::new(sys(), BathFamily::SubOhmicSqrt { gamma_star: 0.25 }).unwrap(),
        ] {
            assert!(matches!(
                model.noise_kernel(0.0),
                Err(Error::Divergence { .. })
            ));
        }
    }

    #[test]
    fn noise_kernel_ohmic_zero_temperature_matches_exponential_integral_form() {
        // ∫₀^∞ ω cos(ωt)/(ω²+Λ²) dω = −(A(Λt)+B(Λt))/2 with
        // A(x) = eˣEi(−x), B(x) = e⁻ˣEi(x), so
        // ν(t) = −(Mγ₀Λ²/π)(B(Λt) + A(Λt)).
        let gamma0 = 0.1;
        let lambda = 20.0;
        let m = ohmic(gamma0, lambda, 0.0);
        for &t in &[0.01, 0.1, 1.0] {
            let x = lambda * t;
            let a = -e1_scaled(Complex::new(x, 0.0)).unwrap().re;
            let b = ei_scaled(x).unwrap();
            let closed = -(gamma0 * lambda * lambda / core::f64::consts::PI) * (a + b);
            let v = m.noise_kernel(t).unwrap();
            assert_relative_eq!(v, closed, max_relative = 1e-7);
        }
    }

    #[test]
    fn noise_kernel_thermal_route_consistency() {
        // Production evaluates vacuum + thermal; cross-check against the
        // undecomposed coth integrand over a finite head plus tail.
        let m = ohmic(0.1, 20.0, 1.0);
        let t = 0.7;
        let env = |w: f64| m.spectral_density(w).unwrap() * m.system.coth(w);
        let head = quad::integrate_with_splits(
            &|w: f64| env(w) * (w * t).cos(),
            0.0,
            30.0 / t,
            &[1.0, 20.0, 2.0 * core::f64::consts::PI],
            QuadTol::new(1e-12, 1e-12),
            "head",
        )
        .unwrap();
        let tail = quad::integrate_fourier_tail(&env, t, 30.0 / t, true, 1e-11, "tail").unwrap();
        assert_relative_eq!(m.noise_kernel(t).unwrap(), head + tail, max_relative = 1e-6);
    }

    #[test]
    fn noise_kernel_is_even() {
        let m = ohmic(0.1, 20.0, 0.5);
        assert_eq!(m.noise_kernel(-0.4).unwrap(), m.noise_kernel(0.4).unwrap());
    }

    #[test]
    fn noise_kernel_sub_ohmic_powerlaw_tail() {
        let gs = 0.25;
        let sub = SpectralModel::new(sys(), BathFamily::SubOhmicSqrt { gamma_star: gs }).unwrap();
        let ws = (1.0f64 + gs * gs).sqrt();
        let t = 2.0f64;
        let expect = -1.0 * gs * (ws / (2.0 * core::f64::consts::PI)).sqrt() * t.powf(-1.5);
        assert_relative_eq!(sub.noise_kernel(t).unwrap(), expect, epsilon = 1e-12);
    }

    #[test]
    fn frequency_renormalization_values() {
        assert_relative_eq!(
            ohmic(0.1, 20.0, 0.0).frequency_renormalization().unwrap(),
            2.0 * 0.1 * 20.0,
            epsilon = 1e-14
        );
        // Linear in the coupling.
        assert_relative_eq!(
            ohmic(0.2, 20.0, 0.0).frequency_renormalization().unwrap(),
            2.0 * ohmic(0.1, 20.0, 0.0).frequency_renormalization().unwrap(),
            epsilon = 1e-14
        );
        let supra = SpectralModel::new(
            sys(),
            BathFamily::SupraOhmicRational {
                gamma2: 0.3,
                lambda: 50.0,
            },
        )
        .unwrap();
        assert_relative_eq!(
            supra.frequency_renormalization().unwrap(),
            0.3 * 50.0,
            epsilon = 1e-14
        );
        let sub = SpectralModel::new(sys(), BathFamily::SubOhmicSqrt { gamma_star: 0.25 }).unwrap();
        assert!(matches!(
            sub.frequency_renormalization(),
            Err(Error::Divergence { .. })
        ));
    }

    #[test]
    fn tabulated_density_interpolates_and_refuses_extrapolation() {
        // Tabulate the ohmic density and compare interpolation mid-grid.
        let m = ohmic(0.1, 20.0, 0.0);
        let samples: Vec<(f64, f64)> = (0..200)
            .map(|k| {
                let w = 0.01 * (1.07f64).powi(k);
                (w, m.spectral_density(w).unwrap())
            })
            .collect();
        let w_hi = samples.last().unwrap().0;
        let table = TabulatedDensity::from_samples(&samples, false).unwrap();
        for &w in &[0.5, 3.0, 17.0] {
            assert_relative_eq!(
                table.evaluate(w).unwrap(),
                m.spectral_density(w).unwrap(),
                max_relative = 1e-4
            );
        }
        assert!(matches!(
            table.evaluate(w_hi * 1.01),
            Err(Error::Interpolation { .. })
        ));
        assert!(matches!(
            table.evaluate(0.005),
            Err(Error::Interpolation { .. })
        ));
        // Rejects a non-increasing grid.
        assert!(TabulatedDensity::from_samples(
            &[(1.0, 1.0), (1.0, 2.0), (2.0, 1.0), (3.0, 1.0)],
            false
        )
        .is_err());
    }

    #[test]
    fn tabulated_damping_kernel_matches_closed_form() {
        let m = ohmic(0.1, 20.0, 0.0);
        let samples: Vec<(f64, f64)> = (0..260)
            .map(|k| {
                let w = 1e-3 * (1.06f64).powi(k);
                (w, m.spectral_density(w).unwrap())
            })
            .collect();
        let custom = SpectralModel::new(
            sys(),
            BathFamily::CustomTabulated(TabulatedDensity::from_samples(&samples, false).unwrap()),
        )
        .unwrap();
        for &s in &[0.5, 2.0] {
            let got = custom.damping_laplace(Complex::new(s, 0.0)).unwrap().re;
            let want = 0.1 / (1.0 + s / 20.0);
            // The finite table support truncates the exact integral at the
            // percent-of-a-percent level.
            assert_relative_eq!(got, want, max_relative = 2e-3);
        }
        // Noise kernel at t = 0 is finite for a finite-support table.
        let v = custom.noise_kernel(0.0).unwrap();
        assert!(v > 0.0);
    }

    #[test]
    fn validate_accepts_builtin_kernels() {
        let m = ohmic(0.1, 20.0, 0.0);
        let cand = {
            let m = m.clone();
            move |s: Complex<f64>| m.damping_laplace(s).unwrap()
        };
        assert!(matches!(
            validate_damping_candidate(sys(), cand).unwrap(),
            DampingValidation::Accepted
        ));
        let sub = SpectralModel::new(sys(), BathFamily::SubOhmicSqrt { gamma_star: 0.25 }).unwrap();
        let cand = {
            let sub = sub.clone();
            move |s: Complex<f64>| sub.damping_laplace(s).unwrap()
        };
        assert!(matches!(
            validate_damping_candidate(sys(), cand).unwrap(),
            DampingValidation::Accepted
        ));
        let supra = SpectralModel::new(
            sys(),
            BathFamily::SupraOhmicRational {
                gamma2: 0.3,
                lambda: 50.0,
            },
        )
        .unwrap();
        let cand = {
            let supra = supra.clone();
            move |s: Complex<f64>| supra.damping_laplace(s).unwrap()
        };
        assert!(matches!(
            validate_damping_candidate(sys(), cand).unwrap(),
            DampingValidation::Accepted
        ));
    }

    #[test]
    fn validate_accepts_constant_kernel() {
        let cand = |_s: Complex<f64>| Complex::new(0.1, 0.0);
        assert!(matches!(
            validate_damping_candidate(sys(), cand).unwrap(),
            DampingValidation::Accepted
        ));
    }

    #[test]
    fn validate_replaces_antisymmetric_kernel() {
        // A pure mass-like term γ̂(s) = γ₀ s/Λ has an antisymmetric
        // imaginary-axis combination; the induced density vanishes and the
        // corrected kernel differs from the candidate.
        let cand = |s: Complex<f64>| s * (0.1 / 20.0);
        match validate_damping_candidate(sys(), cand).unwrap() {
            DampingValidation::Replacement(model) => {
                let v = model.damping_laplace(Complex::new(1.0, 0.0)).unwrap();
                assert!(v.norm() < 1e-6, "corrected kernel should vanish, got {v}");
            }
            DampingValidation::Accepted => panic!("mass-like kernel must not validate"),
        }
    }

    #[test]
    fn validate_rejects_negative_induced_density() {
        let cand = |_s: Complex<f64>| Complex::new(-0.1, 0.0);
        assert!(matches!(
            validate_damping_candidate(sys(), cand),
            Err(Error::NonPositiveSpectrum { .. })
        ));
    }
}
