//! Thermal covariances of the damped oscillator.
//!
//! The noise-driven part of the phase-space covariance is a double time
//! integral of the Green function against the noise kernel. Writing the
//! noise kernel as a frequency integral and carrying out both time
//! integrals first reduces every entry to a single frequency quadrature
//! over products of the convolutions [G * cos ωt] and [G * sin ωt]. For
//! the exponential-mode bath families those convolutions have closed
//! coefficients; for the erfc-mode and tabulated families they are
//! computed from a cached Green-function table. High-frequency tails are
//! integrated with dedicated closures so no oscillatory mass is dropped.
//!
//! On top of the one-time covariance sit its exact time derivative, the
//! two-time covariance block, the stationary covariance by a single
//! smooth quadrature, its closed residue form for the rational-cutoff
//! ohmic bath, the late-time covariance flow, and Cauchy–Schwarz growth
//! bounds on the covariance rates.

use crate::error::{Error, Result};
use crate::linalg::Mat2;
use crate::propagator::{ModeDecomposition, Propagator};
use crate::quad::{self, QuadTol};
use crate::specfun::{bose_coth, harmonic_number};
use crate::spectrum::{BathFamily, SpectralModel};
use crate::{Complex, Real};

/// Symmetric 2×2 phase-space covariance (xx, xp, pp entries).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Covariance2<T = f64> {
    pub sxx: T,
    pub sxp: T,
    pub spp: T,
}

impl<T: Real> Covariance2<T> {
    pub fn new(sxx: T, sxp: T, spp: T) -> Self {
        Covariance2 { sxx, sxp, spp }
    }

    pub fn zero() -> Self {
        Covariance2 {
            sxx: T::zero(),
            sxp: T::zero(),
            spp: T::zero(),
        }
    }

    pub fn as_matrix(&self) -> Mat2<T> {
        Mat2::symmetric(self.sxx, self.sxp, self.spp)
    }

    /// Symmetric part of a general 2×2 matrix as a covariance.
    pub fn from_matrix(m: &Mat2<T>) -> Self {
        let half = T::lit(0.5);
        Covariance2 {
            sxx: m.m[0][0],
            sxp: half * (m.m[0][1] + m.m[1][0]),
            spp: m.m[1][1],
        }
    }

    pub fn det(&self) -> T {
        self.sxx * self.spp - self.sxp * self.sxp
    }

    /// Smaller eigenvalue of the symmetric matrix.
    pub fn min_eigenvalue(&self) -> T {
        let half = T::lit(0.5);
        let tr = self.sxx + self.spp;
        let gap = (self.sxx - self.spp) * (self.sxx - self.spp)
            + T::lit(4.0) * self.sxp * self.sxp;
        half * (tr - gap.sqrt())
    }

    /// Positive semidefinite up to a small negative tolerance on the
    /// smallest eigenvalue (roundoff allowance, default −1e−10·scale).
    pub fn is_positive_semidefinite(&self) -> bool {
        let scale = T::one() + self.sxx.abs() + self.spp.abs();
        self.min_eigenvalue() >= -T::lit(1e-10) * scale
    }
}

/// Symmetrized two-time covariance block.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoTimeCovariance<T = f64> {
    pub t1: T,
    pub t2: T,
    pub block: Mat2<T>,
}

/// Outcome of a pointwise covariance-growth-bound scan.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GrowthBoundsReport<T = f64> {
    pub points_checked: usize,
    /// max over the grid of |σ̇_xx| / bound_xx.
    pub max_xx_ratio: T,
    /// max over the grid of |σ̇_pp| / bound_pp.
    pub max_pp_ratio: T,
}

// ---------------------------------------------------------------------------
// Trig-split representation of M·[G^(l) * cos] and M·[G^(l) * sin].
//
// For a single exponential mode A e^{f t} at weight level l (weight A f^l):
//   M[G^(l) * cos ω·](t) = uc + a cos ωt + b sin ωt
//   M[G^(l) * sin ω·](t) = us − b cos ωt + a sin ωt
// with uc = Re Σ w f e^{ft}/(f²+ω²), us = ω Re Σ w e^{ft}/(f²+ω²),
// a = −Re Σ w f/(f²+ω²), b = ω Re Σ w/(f²+ω²). Conjugate mode pairs make
// every coefficient real.
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy)]
struct TrigSplit<T> {
    uc: T,
    us: T,
    a: T,
    b: T,
}

fn cpow_level<T: Real>(f: Complex<T>, level: usize) -> Complex<T> {
    let mut acc = Complex::new(T::one(), T::zero());
    for _ in 0..level {
        acc *= f;
    }
    acc
}

fn exp_split<T: Real>(
    modes: &ModeDecomposition<T>,
    level: usize,
    t: T,
    omega: T,
) -> TrigSplit<T> {
    let zero = Complex::new(T::zero(), T::zero());
    let (mut uc, mut usb, mut a, mut bb) = (zero, zero, zero, zero);
    let w2 = omega * omega;
    for &(amp, f) in &modes.exp_modes {
        let w = amp * cpow_level(f, level);
        let d = (f * f + Complex::new(w2, T::zero())).inv();
        let e = (f * t).exp();
        uc += w * f * e * d;
        usb += w * e * d;
        a -= w * f * d;
        bb += w * d;
    }
    TrigSplit {
        uc: uc.re,
        us: omega * usb.re,
        a: a.re,
        b: omega * bb.re,
    }
}

/// Large-ω closure of the same coefficients from the boundary values
/// v = [MG, MĠ, MG̈](t); exact up to O(ω^{-2}) relative corrections for
/// smooth response functions.
///
/// `frac15` is the coefficient κ of a u^{−1/2} singular part in
/// d²(MĠ)/du² at the origin (square-root damping kernels). Its endpoint
/// contribution ∫₀ u^{−1/2}e^{−iωu}du = √(π/ω)·e^{−iπ/4} adds the
/// fractional order κ√π·e^{iωt}(iω)^{−5/2} to the velocity-level
/// transform, which would otherwise dominate the truncation error against
/// a spectral density that grows at high frequency.
fn asym_split<T: Real>(v: &[T; 3], level: usize, omega: T, frac15: T) -> TrigSplit<T> {
    let w2 = omega * omega;
    match level {
        0 => TrigSplit {
            uc: v[1] / w2,
            us: v[0] / omega,
            a: -w2.recip(),
            b: T::zero(),
        },
        _ => {
            let k = frac15 * (T::PI() * T::lit(0.5)).sqrt() / (w2 * omega.sqrt());
            TrigSplit {
                uc: v[2] / w2,
                us: v[1] / omega,
                a: -k,
                b: omega.recip() - k,
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Cached Green-function table with Hermite interpolation (erfc-mode and
// tabulated families, where no closed convolution coefficients exist).
// ---------------------------------------------------------------------------

struct GreenTable<T> {
    h: T,
    /// M·G at the grid nodes.
    v0: Vec<T>,
    /// M·Ġ at the grid nodes.
    v1: Vec<T>,
    /// M·G̈ at the grid nodes (used as slopes for v1).
    v2: Vec<T>,
}

impl<T: Real> GreenTable<T> {
    fn build(prop: &Propagator<T>, t_max: T, n: usize) -> Result<Self> {
        let mass = prop.model().system.mass;
        let h = t_max / T::of_usize(n);
        let mut v0 = Vec::with_capacity(n + 1);
        let mut v1 = Vec::with_capacity(n + 1);
        let mut v2 = Vec::with_capacity(n + 1);
        for i in 0..=n {
            let u = h * T::of_usize(i);
            v0.push(mass * prop.green(u)?);
            v1.push(mass * prop.dgreen(u)?);
            v2.push(mass * prop.ddgreen(u)?);
        }
        Ok(GreenTable { h, v0, v1, v2 })
    }

    fn eval(&self, level: usize, u: T) -> T {
        let (vals, slopes) = match level {
            0 => (&self.v0, &self.v1),
            _ => (&self.v1, &self.v2),
        };
        let n = vals.len() - 1;
        let mut idx = (u / self.h).floor().to_f64().unwrap_or(0.0) as usize;
        if idx >= n {
            idx = n - 1;
        }
        let theta = u / self.h - T::of_usize(idx);
        let t2 = theta * theta;
        let t3 = t2 * theta;
        let h00 = T::lit(2.0) * t3 - T::lit(3.0) * t2 + T::one();
        let h10 = t3 - T::lit(2.0) * t2 + theta;
        let h01 = T::lit(3.0) * t2 - T::lit(2.0) * t3;
        let h11 = t3 - t2;
        h00 * vals[idx]
            + h10 * self.h * slopes[idx]
            + h01 * vals[idx + 1]
            + h11 * self.h * slopes[idx + 1]
    }

    /// (M[G^(l) * cos ω·](t), M[G^(l) * sin ω·](t)) by panel-wise
    /// Gauss–Legendre with at most half an oscillation period per panel.
    fn conv(&self, level: usize, t: T, omega: T, osc: T, gl: &[(T, T)]) -> (T, T) {
        let rate = (omega.abs() + osc) * t / T::PI();
        let panels = rate.to_f64().unwrap_or(4.0).ceil().max(4.0) as usize;
        let width = t / T::of_usize(panels);
        let mut x = T::zero();
        let mut y = T::zero();
        for j in 0..panels {
            let a = width * T::of_usize(j);
            let mid = a + width * T::lit(0.5);
            let half = width * T::lit(0.5);
            for &(node, wt) in gl {
                let u = mid + half * node;
                let v = self.eval(level, u);
                let phase = omega * (t - u);
                x += wt * half * v * phase.cos();
                y += wt * half * v * phase.sin();
            }
        }
        (x, y)
    }
}

// ---------------------------------------------------------------------------
// Frequency-integration context shared by every covariance entry.
// ---------------------------------------------------------------------------

enum Route<T: Real> {
    /// Closed convolution coefficients from the exponential modes.
    Split,
    /// Numerical convolution against a cached Green table.
    Table(GreenTable<T>),
}

struct FreqCtx<'a, T: Real> {
    model: &'a SpectralModel<T>,
    prop: &'a Propagator<T>,
    route: Route<T>,
    /// Dominant oscillation frequency of G.
    osc: T,
    /// Slowest decay rate of G (resonance width scale).
    decay: T,
    /// High-frequency structure scale of the spectral density (0 if none).
    knee: T,
    /// Finite spectral support (tabulated families): integration range.
    support: Option<(T, T)>,
    /// Integrate the head in x = √ω (square-root spectral densities).
    sqrt_axis: bool,
    /// κ of the u^{−1/2} origin singularity in d²(MĠ)/du² (0 if smooth).
    frac15: T,
    gl: Vec<(T, T)>,
}

impl<'a, T: Real> FreqCtx<'a, T> {
    fn new(model: &'a SpectralModel<T>, prop: &'a Propagator<T>, t_max: T) -> Result<Self> {
        let osc = prop.oscillation_frequency();
        let gl = quad::gauss_legendre(8);
        match &model.family {
            BathFamily::OhmicRational { lambda, .. }
            | BathFamily::SupraOhmicRational { lambda, .. } => {
                let modes = prop
                    .modes()
                    .ok_or_else(|| Error::invalid("missing mode decomposition"))?;
                let decay = modes
                    .exp_modes
                    .iter()
                    .map(|&(_, f)| -f.re)
                    .fold(T::infinity(), T::min);
                Ok(FreqCtx {
                    model,
                    prop,
                    route: Route::Split,
                    osc,
                    decay,
                    knee: *lambda,
                    support: None,
                    sqrt_axis: false,
                    gl,
                })
            }
            BathFamily::SubOhmicSqrt { gamma_star } => {
                let n = (t_max / T::lit(0.03))
                    .to_f64()
                    .unwrap_or(1024.0)
                    .ceil()
                    .max(1024.0)
                    .min(65536.0) as usize;
                let table = GreenTable::build(prop, t_max * T::lit(1.0000001), n)?;
                Ok(FreqCtx {
                    model,
                    prop,
                    route: Route::Table(table),
                    osc,
                    decay: *gamma_star,
                    knee: T::zero(),
                    support: None,
                    sqrt_axis: true,
                    gl,
                })
            }
            BathFamily::CustomTabulated(tab) => {
                let per_osc = (T::lit(16.0) * (T::one() + t_max * osc))
                    .to_f64()
                    .unwrap_or(256.0)
                    .ceil()
                    .clamp(256.0, 1024.0) as usize;
                let table = GreenTable::build(prop, t_max * T::lit(1.0000001), per_osc)?;
                let r_res = model.spectral_density(osc).unwrap_or(T::zero()) * T::PI()
                    / (T::lit(2.0) * model.system.mass * osc);
                Ok(FreqCtx {
                    model,
                    prop,
                    route: Route::Table(table),
                    osc,
                    decay: r_res.max(T::lit(1e-3) * osc),
                    knee: tab.omega_max(),
                    support: Some((tab.omega_min(), tab.omega_max())),
                    sqrt_axis: false,
                    gl,
                })
            }
        }
    }

    fn icoth(&self, omega: T) -> T {
        let dens = self.model.spectral_density(omega).unwrap_or(T::zero());
        dens * bose_coth(omega, self.model.system.temperature)
    }

    /// Boundary triple [MG, MĠ, MG̈](t) for the tail closures.
    fn boundary(&self, t: T) -> Result<[T; 3]> {
        let mass = self.model.system.mass;
        Ok([
            mass * self.prop.green(t)?,
            mass * self.prop.dgreen(t)?,
            mass * self.prop.ddgreen(t)?,
        ])
    }

    fn split(&self, level: usize, bvals: &[T; 3], t: T, omega: T) -> TrigSplit<T> {
        match &self.route {
            Route::Split => {
                let modes = self.prop.modes().expect("split route has modes");
                exp_split(modes, level, t, omega)
            }
            Route::Table(_) => asym_split(bvals, level, omega),
        }
    }

    fn xy(&self, level: usize, bvals: &[T; 3], t: T, omega: T) -> (T, T) {
        match &self.route {
            Route::Split => {
                let s = self.split(level, bvals, t, omega);
                let (c, sn) = ((omega * t).cos(), (omega * t).sin());
                (s.uc + s.a * c + s.b * sn, s.us - s.b * c + s.a * sn)
            }
            Route::Table(table) => table.conv(level, t, omega, self.osc, &self.gl),
        }
    }

    /// Head window [lo, hi] for the oscillatory frequency quadrature.
    fn window(&self, tbar: T) -> (T, T) {
        if let Some((lo, hi)) = self.support {
            return (lo, hi);
        }
        let sys = self.model.system;
        let base = (T::lit(4.0) * sys.omega + T::lit(2.0))
            .max(self.osc + T::lit(12.0) * self.decay)
            .max(T::lit(6.0) * T::PI() * sys.temperature + T::lit(2.0));
        let reach = T::lit(30.0) / tbar;
        let hi = match self.route {
            Route::Split => base
                .max(reach)
                .max(T::lit(1.2) * self.knee)
                .min(T::lit(2e5)),
            Route::Table(_) => base
                .max(T::lit(48.0))
                .min(T::lit(80.0))
                .max(reach.min(T::lit(2000.0))),
        };
        (T::zero(), hi)
    }

    fn head_splits(&self, lo: T, hi: T) -> Vec<T> {
        let two_pi_t = T::lit(2.0) * T::PI() * self.model.system.temperature;
        let mut pts = vec![
            self.osc - T::lit(3.0) * self.decay,
            self.osc,
            self.osc + T::lit(3.0) * self.decay,
            two_pi_t,
            self.knee,
        ];
        if self.sqrt_axis {
            for p in pts.iter_mut() {
                *p = p.max(T::zero()).sqrt();
            }
        }
        pts.retain(|&p| p > lo + T::lit(1e-12) && p < hi - T::lit(1e-12));
        pts.sort_by(|a, b| a.partial_cmp(b).unwrap());
        pts.dedup_by(|a, b| (*a - *b).abs() < T::lit(1e-9) * hi);
        pts
    }

    /// ∫₀^∞ I(ω) coth(ω/2T)·combo(ω) dω where combo is assembled from the
    /// per-level convolutions; `terms` lists (level, time) factors: one
    /// entry integrates X alone, two entries integrate X₁X₂ + Y₁Y₂.
    /// With `plain` set (single term only), the combo is the plain cosine
    /// transform ∫₀ᵗ v(u)cos(ωu)du = X cos ωt + Y sin ωt instead of the
    /// convolution X.
    fn weighted_integral(&self, terms: &[(usize, T)], plain: bool) -> Result<T> {
        for &(_, t) in terms {
            if t <= T::zero() {
                return Ok(T::zero());
            }
        }
        let tbar = terms
            .iter()
            .map(|&(_, t)| t)
            .fold(T::infinity(), T::min);
        let (lo, mut hi) = self.window(tbar);

        let b: Vec<[T; 3]> = terms
            .iter()
            .map(|&(_, t)| self.boundary(t))
            .collect::<Result<_>>()?;

        // Oscillatory tail frequencies (empty for finite-support models).
        let mut taus: Vec<T> = Vec::new();
        let eps_t = T::lit(1e-9) * (T::one() + tbar);
        if self.support.is_none() {
            match terms {
                [(_, t)] => taus.push(*t),
                [(_, t1), (_, t2)] => {
                    let delta = (*t1 - *t2).abs();
                    if delta > eps_t {
                        taus.push(delta);
                    }
                    taus.push(*t1);
                    if (*t1 - *t2).abs() > eps_t {
                        taus.push(*t2);
                    }
                }
                _ => return Err(Error::invalid("weighted_integral takes 1 or 2 factors")),
            }
            if matches!(self.route, Route::Split) {
                let tau_min = taus.iter().cloned().fold(T::infinity(), T::min);
                if tau_min.is_finite() && tau_min * hi < T::lit(8.0) {
                    hi = (T::lit(10.0) / tau_min).min(T::lit(1e6));
                }
            }
        }

        let head_eval = |omega: T| -> T {
            let w = self.icoth(omega);
            if w == T::zero() {
                return T::zero();
            }
            match terms {
                [(l, t)] => {
                    let (x, y) = self.xy(*l, &b[0], *t, omega);
                    if plain {
                        w * (x * (omega * *t).cos() + y * (omega * *t).sin())
                    } else {
                        w * x
                    }
                }
                [(l1, t1), (l2, t2)] => {
                    let (x1, y1) = self.xy(*l1, &b[0], *t1, omega);
                    let (x2, y2) = self.xy(*l2, &b[1], *t2, omega);
                    w * (x1 * x2 + y1 * y2)
                }
                _ => T::nan(),
            }
        };

        // Magnitude probe for absolute-tolerance scaling.
        let mut probe = T::zero();
        for k in 1..=8 {
            let omega = lo + (hi - lo) * T::of_usize(k) / T::lit(9.0);
            probe = probe.max(head_eval(omega).abs());
        }
        let span = hi - lo;
        let abs_head = (probe * span * T::lit(1e-13)).max(T::lit(1e-300));
        let tol_head = QuadTol {
            abs_tol: abs_head,
            rel_tol: T::lit(1e-9),
            max_intervals: 30000,
        };

        let head = if self.sqrt_axis {
            let fx = |x: T| head_eval(x * x) * T::lit(2.0) * x;
            let splits = self.head_splits(T::zero(), hi.sqrt());
            quad::integrate_with_splits(&fx, T::zero(), hi.sqrt(), &splits, tol_head,
                "covariance head (sqrt axis)")?
        } else {
            let splits = self.head_splits(lo, hi);
            quad::integrate_with_splits(&head_eval, lo, hi, &splits, tol_head,
                "covariance head")?
        };

        if self.support.is_some() {
            return Ok(head);
        }

        // --- Tails beyond the head window -------------------------------
        let abs_tail =
            (head.abs() + probe * span * T::lit(1e-3)).max(T::lit(1e-10)) * T::lit(1e-10);
        let tol_tail = QuadTol {
            abs_tol: abs_tail,
            rel_tol: T::lit(1e-8),
            max_intervals: 4000,
        };

        let coeffs = |omega: T| -> (T, Vec<(T, T)>) {
            // (dc, per-tau (cos,sin) coefficients), matching `taus`.
            match terms {
                [(l, t)] => {
                    let s = self.split(*l, &b[0], *t, omega);
                    if plain {
                        // X cos + Y sin = a + uc·cos ωt + us·sin ωt.
                        (s.a, vec![(s.uc, s.us)])
                    } else {
                        (s.uc, vec![(s.a, s.b)])
                    }
                }
                [(l1, t1), (l2, t2)] => {
                    let s1 = self.split(*l1, &b[0], *t1, omega);
                    let s2 = self.split(*l2, &b[1], *t2, omega);
                    let mut dc = s1.uc * s2.uc + s1.us * s2.us;
                    let mut list = Vec::with_capacity(3);
                    let delta = *t1 - *t2;
                    let pair = (
                        s1.a * s2.a + s1.b * s2.b,
                        -(s1.a * s2.b - s2.a * s1.b) * delta.signum(),
                    );
                    if delta.abs() > eps_t {
                        list.push(pair);
                    } else {
                        dc += pair.0;
                    }
                    let at_t1 = (s1.a * s2.uc - s1.b * s2.us, s1.b * s2.uc + s1.a * s2.us);
                    let at_t2 = (s2.a * s1.uc - s2.b * s1.us, s2.b * s1.uc + s2.a * s1.us);
                    if delta.abs() > eps_t {
                        list.push(at_t1);
                        list.push(at_t2);
                    } else {
                        list.push((at_t1.0 + at_t2.0, at_t1.1 + at_t2.1));
                    }
                    (dc, list)
                }
                _ => (T::nan(), Vec::new()),
            }
        };

        let dc_env = |omega: T| self.icoth(omega) * coeffs(omega).0;
        let dc_tail = if self.sqrt_axis {
            // The square-root spectrum makes the envelope decay like w^(-3/2),
            // too slow for the rational tail map.  On the x = sqrt(w) axis the
            // substituted envelope falls off like x^(-2), which the map turns
            // into a bounded, smooth integrand.
            let x0 = hi.sqrt();
            let dc_env_x = |x: T| {
                let w = x * x;
                if !w.is_finite() {
                    return T::zero();
                }
                dc_env(w) * T::lit(2.0) * x
            };
            quad::integrate_to_infinity(
                &dc_env_x,
                x0,
                x0.max(T::one()),
                tol_tail,
                "covariance tail (non-oscillatory, sqrt axis)",
            )?
        } else {
            quad::integrate_to_infinity(
                &dc_env,
                hi,
                hi.max(self.knee),
                tol_tail,
                "covariance tail (non-oscillatory)",
            )?
        };
        let mut total = head + dc_tail;

        for (j, &tau) in taus.iter().enumerate() {
            let cos_env = |omega: T| self.icoth(omega) * coeffs(omega).1[j].0;
            let sin_env = |omega: T| self.icoth(omega) * coeffs(omega).1[j].1;
            total += quad::integrate_fourier_tail(&cos_env, tau, hi, true, abs_tail,
                "covariance tail (cos)")?;
            total += quad::integrate_fourier_tail(&sin_env, tau, hi, false, abs_tail,
                "covariance tail (sin)")?;
        }
        Ok(total)
    }

    fn entry(&self, l1: usize, t1: T, l2: usize, t2: T) -> Result<T> {
        self.weighted_integral(&[(l1, t1), (l2, t2)], false)
    }

    fn scalar(&self, level: usize, t: T) -> Result<T> {
        self.weighted_integral(&[(level, t)], false)
    }

    /// ∫₀ᵗ ν(v)·v_level(v) dv — the diagonal noise/propagator product that
    /// appears when the covariance-rate domain boundary is differentiated.
    fn diagonal(&self, level: usize, t: T) -> Result<T> {
        self.weighted_integral(&[(level, t)], true)
    }
}

fn check_time<T: Real>(t: T) -> Result<()> {
    if !(t >= T::zero()) || !t.is_finite() {
        return Err(Error::invalid("covariance times must be finite and >= 0"));
    }
    Ok(())
}

/// Noise-driven covariance σ_T(t), starting from σ_T(0) = 0.
pub fn thermal_covariance<T: Real>(model: &SpectralModel<T>, t: T) -> Result<Covariance2<T>> {
    check_time(t)?;
    if t == T::zero() {
        return Ok(Covariance2::zero());
    }
    let prop = Propagator::new(model)?;
    let ctx = FreqCtx::new(model, &prop, t)?;
    let mass = model.system.mass;
    let e00 = ctx.entry(0, t, 0, t)?;
    let e11 = ctx.entry(1, t, 1, t)?;
    let s0 = ctx.scalar(0, t)?;
    let g = prop.green(t)?;
    Ok(Covariance2 {
        sxx: e00 / (mass * mass),
        sxp: g * s0,
        spp: e11,
    })
}

/// Exact time derivative σ̇_T(t), computed from the boundary-term
/// identities σ̇_xx = 2G·(ν∗G), σ̇_xp = M[Ġ(ν∗G) + G(ν∗Ġ)],
/// σ̇_pp = 2M²Ġ·(ν∗Ġ) rather than by differencing σ_T.
pub fn thermal_covariance_rate<T: Real>(model: &SpectralModel<T>, t: T) -> Result<Mat2<T>> {
    check_time(t)?;
    if t == T::zero() {
        return Ok(Mat2::zero());
    }
    let prop = Propagator::new(model)?;
    let ctx = FreqCtx::new(model, &prop, t)?;
    let mass = model.system.mass;
    let s0 = ctx.scalar(0, t)?;
    let s1 = ctx.scalar(1, t)?;
    let g = prop.green(t)?;
    let dg = prop.dgreen(t)?;
    let rxx = T::lit(2.0) * g * s0 / mass;
    let rxp = dg * s0 + g * s1;
    let rpp = T::lit(2.0) * mass * dg * s1;
    Ok(Mat2::symmetric(rxx, rxp, rpp))
}

/// Symmetrized two-time covariance block σ_T(t1, t2).
pub fn two_time_covariance<T: Real>(
    model: &SpectralModel<T>,
    t1: T,
    t2: T,
) -> Result<TwoTimeCovariance<T>> {
    check_time(t1)?;
    check_time(t2)?;
    if t1 == T::zero() || t2 == T::zero() {
        return Ok(TwoTimeCovariance {
            t1,
            t2,
            block: Mat2::zero(),
        });
    }
    let prop = Propagator::new(model)?;
    let ctx = FreqCtx::new(model, &prop, t1.max(t2))?;
    let mass = model.system.mass;
    let b11 = ctx.entry(0, t1, 0, t2)? / (mass * mass);
    let b12 = ctx.entry(0, t1, 1, t2)? / mass;
    let b21 = ctx.entry(1, t1, 0, t2)? / mass;
    let b22 = ctx.entry(1, t1, 1, t2)?;
    Ok(TwoTimeCovariance {
        t1,
        t2,
        block: Mat2::new(b11, b12, b21, b22),
    })
}

/// Full symmetrized two-point function Φ(t1) σ₀ Φᵀ(t2) + σ_T(t1, t2).
pub fn two_point_function<T: Real>(
    model: &SpectralModel<T>,
    sigma0: &Mat2<T>,
    t1: T,
    t2: T,
) -> Result<Mat2<T>> {
    let prop = Propagator::new(model)?;
    let drift = prop.phase_matrix(t1)? * *sigma0 * prop.phase_matrix(t2)?.transpose();
    Ok(drift + two_time_covariance(model, t1, t2)?.block)
}

/// Damping kernel transform on the imaginary axis, γ̂(iω) = R + iJ.
fn damping_imag_axis<T: Real>(model: &SpectralModel<T>, omega: T) -> Result<Complex<T>> {
    match &model.family {
        BathFamily::OhmicRational { gamma0, lambda } => {
            Ok(Complex::new(*gamma0, T::zero())
                * Complex::new(T::one(), omega / *lambda).inv())
        }
        BathFamily::SubOhmicSqrt { gamma_star } => {
            let ws = model.sub_omega_star(*gamma_star);
            let mag = *gamma_star * (ws / omega).sqrt();
            Ok(Complex::new(mag, -mag))
        }
        BathFamily::SupraOhmicRational { gamma2, lambda } => {
            let z = Complex::new(T::zero(), omega / *lambda);
            let one = Complex::new(T::one(), T::zero());
            let opz = one + z;
            Ok(Complex::new(T::lit(0.5) * *gamma2, T::zero()) * z * (opz * opz).inv())
        }
        BathFamily::CustomTabulated(tab) => {
            let mass = model.system.mass;
            let (lo, hi) = (tab.omega_min(), tab.omega_max());
            let re = if omega >= lo && omega <= hi {
                T::PI() * model.spectral_density(omega)? / (T::lit(2.0) * mass * omega)
            } else {
                T::zero()
            };
            let im = principal_value_damping(model, lo, hi, omega)?;
            Ok(Complex::new(re, im))
        }
    }
}

/// J(ω) = (ω/M)·PV ∫ [I(w)/w] / (w² − ω²) dw over the tabulated support.
fn principal_value_damping<T: Real>(
    model: &SpectralModel<T>,
    lo: T,
    hi: T,
    omega: T,
) -> Result<T> {
    let mass = model.system.mass;
    let tol = QuadTol::new(1e-12, 1e-9);
    let plain = |w: T| {
        let dens = model.spectral_density(w).unwrap_or(T::nan());
        (dens / w) / (w * w - omega * omega)
    };
    let inside = omega > lo + T::lit(1e-12) && omega < hi - T::lit(1e-12);
    if !inside {
        let v = quad::integrate(&plain, lo, hi, tol, "tabulated damping transform")?;
        return Ok(omega * v / mass);
    }
    let delta = T::lit(0.5) * (omega - lo).min(hi - omega).min(omega);
    let phi = |w: T| {
        let dens = model.spectral_density(w).unwrap_or(T::nan());
        (dens / w) / (w + omega)
    };
    let core = |u: T| (phi(omega + u) - phi(omega - u)) / u;
    let mut total = quad::integrate(&core, T::zero(), delta, tol,
        "tabulated damping transform (principal value core)")?;
    total += quad::integrate(&plain, lo, omega - delta, tol,
        "tabulated damping transform (left)")?;
    total += quad::integrate(&plain, omega + delta, hi, tol,
        "tabulated damping transform (right)")?;
    Ok(omega * total / mass)
}

/// Stationary covariance by a single smooth frequency quadrature over
/// I(ω)coth(ω/2T)·|Ĝ(iω)|²·diag(1, M²ω²); the cross entry vanishes
/// identically.
pub fn late_covariance<T: Real>(model: &SpectralModel<T>) -> Result<Covariance2<T>> {
    let prop = Propagator::new(model)?;
    let sys = model.system;
    let mass = sys.mass;

    // A tabulated bath only damps inside its support; a resonance outside
    // is undamped and the covariance never settles.
    if let BathFamily::CustomTabulated(tab) = &model.family {
        verify_tabulated_stationary(model, tab.omega_min(), tab.omega_max())?;
    }

    let denom = |omega: T| -> T {
        let gam = damping_imag_axis(model, omega).unwrap_or_else(|_| {
            Complex::new(T::nan(), T::nan())
        });
        let re = sys.omega * sys.omega - omega * omega
            - T::lit(2.0) * omega * gam.im;
        let im = T::lit(2.0) * omega * gam.re;
        re * re + im * im
    };
    let weight = |omega: T| {
        model.spectral_density(omega).unwrap_or(T::zero())
            * bose_coth(omega, sys.temperature)
    };

    let osc = prop.oscillation_frequency();
    // Width of the resonance peak: decay rate of the oscillatory mode pair
    // (falling back to the slowest rate when nothing oscillates).
    let decay = match prop.modes() {
        Some(m) if !m.exp_modes.is_empty() => {
            let oscillatory = m
                .exp_modes
                .iter()
                .filter(|&&(_, f)| f.im.abs() > T::lit(1e-9) * f.norm())
                .map(|&(_, f)| -f.re)
                .fold(T::infinity(), T::min);
            if oscillatory.is_finite() {
                oscillatory
            } else {
                m.exp_modes
                    .iter()
                    .map(|&(_, f)| -f.re)
                    .fold(T::infinity(), T::min)
            }
        }
        _ => match &model.family {
            BathFamily::SubOhmicSqrt { gamma_star } => *gamma_star,
            _ => T::lit(1e-2) * osc,
        },
    };
    let knee = match &model.family {
        BathFamily::OhmicRational { lambda, .. }
        | BathFamily::SupraOhmicRational { lambda, .. } => *lambda,
        _ => T::zero(),
    };

    let (lo, hi) = match &model.family {
        BathFamily::CustomTabulated(tab) => (tab.omega_min(), tab.omega_max()),
        _ => (
            T::zero(),
            (T::lit(8.0) * sys.omega)
                .max(osc + T::lit(50.0) * decay)
                .max(T::lit(6.0) * T::PI() * sys.temperature + T::lit(4.0))
                .max(T::lit(2.5) * knee),
        ),
    };

    let mut splits = vec![
        osc - T::lit(10.0) * decay,
        osc - T::lit(3.0) * decay,
        osc,
        osc + T::lit(3.0) * decay,
        osc + T::lit(10.0) * decay,
        T::lit(2.0) * T::PI() * sys.temperature,
        knee,
    ];
    let sqrt_axis = matches!(model.family, BathFamily::SubOhmicSqrt { .. });
    if sqrt_axis {
        for p in splits.iter_mut() {
            *p = p.max(T::zero()).sqrt();
        }
    }
    let axis_hi = if sqrt_axis { hi.sqrt() } else { hi };
    let axis_lo = if sqrt_axis { T::zero() } else { lo };
    splits.retain(|&p| p > axis_lo + T::lit(1e-12) && p < axis_hi - T::lit(1e-12));
    splits.sort_by(|a, b| a.partial_cmp(b).unwrap());
    splits.dedup_by(|a, b| (*a - *b).abs() < T::lit(1e-9) * axis_hi);

    let tol = QuadTol {
        abs_tol: T::lit(1e-14),
        rel_tol: T::lit(1e-10),
        max_intervals: 20000,
    };
    let integral = |wfun: &dyn Fn(T) -> T, ctx: &str| -> Result<T> {
        let f = |omega: T| weight(omega) * wfun(omega) / denom(omega);
        let head = if sqrt_axis {
            let fx = |x: T| f(x * x) * T::lit(2.0) * x;
            quad::integrate_with_splits(&fx, axis_lo, axis_hi, &splits, tol, ctx)?
        } else {
            quad::integrate_with_splits(&f, axis_lo, axis_hi, &splits, tol, ctx)?
        };
        if matches!(model.family, BathFamily::CustomTabulated(_)) {
            return Ok(head);
        }
        let tail = if sqrt_axis {
            // w^(-3/2) decay is too slow for the rational tail map; on the
            // x = sqrt(w) axis the substituted integrand decays like x^(-2).
            let fx = |x: T| {
                let w = x * x;
                if !w.is_finite() {
                    return T::zero();
                }
                f(w) * T::lit(2.0) * x
            };
            quad::integrate_to_infinity(&fx, axis_hi, axis_hi.max(T::one()), tol, ctx)?
        } else {
            quad::integrate_to_infinity(&f, hi, hi, tol, ctx)?
        };
        Ok(head + tail)
    };

    let sxx = integral(&|_| mass.recip() * mass.recip(), "stationary covariance xx")?;
    let spp = integral(&|omega: T| omega * omega, "stationary covariance pp")?;
    Ok(Covariance2 {
        sxx,
        sxp: T::zero(),
        spp,
    })
}

/// Bisection check that Ω² − ω² − 2ωJ(ω) has no zero outside the
/// tabulated support, where the damping R vanishes and a zero would be an
/// undamped resonance.
fn verify_tabulated_stationary<T: Real>(model: &SpectralModel<T>, lo: T, hi: T) -> Result<()> {
    let f = |omega: T| -> Result<T> {
        let j = principal_value_damping(model, lo, hi, omega)?;
        Ok(model.system.omega * model.system.omega - omega * omega - T::lit(2.0) * omega * j)
    };
    let check_range = |a: T, b: T| -> Result<()> {
        if b <= a {
            return Ok(());
        }
        let n = 24;
        let mut prev = f(a + (b - a) * T::lit(1e-6))?;
        for k in 1..=n {
            let x = a + (b - a) * T::of_usize(k) / T::of_usize(n);
            let cur = f(x.min(b - (b - a) * T::lit(1e-9)))?;
            if prev * cur < T::zero() {
                return Err(Error::NoStationaryLimit {
                    context: format!(
                        "undamped resonance near omega={:.6e} outside the tabulated support",
                        x.to_f64().unwrap_or(f64::NAN)
                    ),
                });
            }
            prev = cur;
        }
        Ok(())
    };
    check_range(T::lit(1e-6) * lo.min(model.system.omega), lo)?;
    let top = (T::lit(3.0) * model.system.omega).max(T::lit(1.5) * hi);
    check_range(hi, top)
}

/// Closed stationary covariance for the rational-cutoff ohmic bath, built
/// from harmonic numbers of the characteristic rates. Overdamped
/// parameters are handled by evaluating the same symmetric combination at
/// the analytically continued (imaginary) oscillation frequency.
pub fn late_covariance_ohmic_closed<T: Real>(
    mass: T,
    omega: T,
    gamma0: T,
    lambda: T,
    temperature: T,
) -> Result<Covariance2<T>> {
    let star = crate::propagator::star_parameters(mass, omega, gamma0, lambda)?;
    let g = star.gamma_star;
    let l = star.lambda_star;
    let w = star.omega_tilde_star;
    let scale = g.max(star.omega_star);
    if w.norm() < T::lit(1e-8) * scale {
        return Err(Error::DegenerateBoundary {
            context: "critically damped: closed stationary covariance is singular".into(),
        });
    }
    if temperature < T::zero() {
        return Err(Error::invalid("temperature must be >= 0"));
    }

    let i = Complex::new(T::zero(), T::one());
    let cg = Complex::new(g, T::zero());
    let cl = Complex::new(l, T::zero());
    let two_over_pi = Complex::new(T::lit(2.0) / T::PI(), T::zero());

    let resonant = |v: Complex<T>| -> Result<Complex<T>> {
        let pref = two_over_pi * (cl + cg - i * v) * (cl - cg - i * v).inv();
        let brace = if temperature == T::zero() {
            ((cg + i * v) * cl.inv()).ln()
        } else {
            let two_pi_t = T::lit(2.0) * T::PI() * temperature;
            let d = Complex::new(two_pi_t, T::zero()).inv();
            harmonic_number((cg + i * v) * d)? - harmonic_number(cl * d)?
        };
        Ok(pref * brace)
    };

    let rp = resonant(w)?;
    let rm = resonant(-w)?;
    let four_i_m = Complex::new(T::zero(), T::lit(4.0) * mass);
    let sxx_fluct = (rp - rm) * (four_i_m * w).inv();

    let fterm = |v: Complex<T>, r: Complex<T>| -> Complex<T> {
        let u = Complex::new(T::one(), T::zero()) - i * cg * v.inv();
        v * u * u * r
    };
    let spp_fluct = Complex::new(mass, T::zero())
        * (fterm(w, rp) + fterm(-w, rm))
        * Complex::new(T::zero(), T::lit(4.0)).inv();

    let imag_scale = sxx_fluct.re.abs() + spp_fluct.re.abs() + T::lit(1e-30);
    if sxx_fluct.im.abs() + spp_fluct.im.abs() > T::lit(1e-7) * imag_scale {
        return Err(Error::invalid(
            "closed stationary covariance produced a non-real value",
        ));
    }

    let thermal_xx = temperature / (mass * omega * omega);
    let thermal_pp = mass * temperature;
    Ok(Covariance2 {
        sxx: thermal_xx + sxx_fluct.re,
        sxp: T::zero(),
        spp: thermal_pp + spp_fluct.re,
    })
}

/// Two slowest characteristic rates as a (decay, oscillation) pair for the
/// late-time local propagator; oscillation is imaginary for a pair of real
/// rates.
fn slowest_pair<T: Real>(modes: &ModeDecomposition<T>) -> Result<(T, Complex<T>)> {
    if !modes.erfc_modes.is_empty() {
        return Err(Error::NoStationaryLimit {
            context: "power-law memory has no exponential late-time regime".into(),
        });
    }
    if modes.exp_modes.len() < 2 {
        return Err(Error::invalid("need at least two characteristic rates"));
    }
    let mut rates: Vec<Complex<T>> = modes.exp_modes.iter().map(|&(_, f)| f).collect();
    rates.sort_by(|p, q| q.re.partial_cmp(&p.re).unwrap());
    let f1 = rates[0];
    let f2 = if f1.im.abs() > T::lit(1e-12) * f1.norm() {
        let tol = T::lit(1e-9) * f1.norm();
        *rates
            .iter()
            .find(|r| (r.im + f1.im).abs() < tol && (r.re - f1.re).abs() < tol)
            .ok_or(Error::DegenerateBoundary {
                context: "slowest rates do not form a real late-time pair".into(),
            })?
    } else {
        let f2 = rates[1];
        if f2.im.abs() > T::lit(1e-12) * f2.norm() {
            return Err(Error::DegenerateBoundary {
                context: "slowest rates do not form a real late-time pair".into(),
            });
        }
        f2
    };
    let gamma = -(f1.re + f2.re) * T::lit(0.5);
    let w = (f1 - f2) * Complex::new(T::zero(), T::lit(2.0)).inv();
    Ok((gamma, w))
}

/// Late-time local phase-space propagator from the two slowest rates.
fn late_local_propagator<T: Real>(gamma: T, w: Complex<T>, mass: T, tau: T) -> Mat2<T> {
    let e = (-gamma * tau).exp();
    let z = w * Complex::new(tau, T::zero());
    let (cz, sz) = (z.cos(), z.sin());
    let sinc = sz * w.inv();
    let cg = Complex::new(gamma, T::zero());
    let mdg = (cz - cg * sinc) * Complex::new(e, T::zero());
    let gfun = sinc * Complex::new(e / mass, T::zero());
    let mddg = (cg * cg - w * w) * sinc - (cg + cg) * cz;
    let m2ddg = mddg * Complex::new(e * mass, T::zero());
    Mat2::new(mdg.re, gfun.re, m2ddg.re, mdg.re)
}

/// Covariance flow in the stationary regime:
/// σ(t) = σ∞ + Φ_R(t−t_i)[σ(t_i) − σ∞]Φ_Rᵀ(t−t_i).
pub fn late_time_covariance_evolution<T: Real>(
    model: &SpectralModel<T>,
    sigma_ti: &Covariance2<T>,
    t_i: T,
    t: T,
) -> Result<Covariance2<T>> {
    check_time(t_i)?;
    check_time(t)?;
    if t < t_i {
        return Err(Error::invalid("evolution requires t >= t_i"));
    }
    let prop = Propagator::new(model)?;
    let modes = prop.modes().ok_or(Error::NoStationaryLimit {
        context: "tabulated bath has no closed late-time propagator".into(),
    })?;
    let (gamma, w) = slowest_pair(modes)?;
    let sinf = late_covariance(model)?.as_matrix();
    let phi = late_local_propagator(gamma, w, model.system.mass, t - t_i);
    let dev = sigma_ti.as_matrix() - sinf;
    let out = sinf + phi * dev * phi.transpose();
    Ok(Covariance2::from_matrix(&out))
}

fn growth_point<T: Real>(
    mass: T,
    t: T,
    sigma: &Covariance2<T>,
    rate: &Mat2<T>,
    kappa: T,
    diag_pp: T,
) -> Result<(T, T)> {
    let bound_xx = T::lit(2.0) / mass * (sigma.sxx * sigma.spp).max(T::zero()).sqrt();
    let bound_pp = T::lit(2.0) * mass * (sigma.spp * kappa).max(T::zero()).sqrt();
    let slack = |b: T| T::lit(1e-6) * b + T::lit(1e-9) * (T::one() + b);
    let rxx = rate.m[0][0].abs();
    // The momentum rate carries an unbounded diagonal (diffusion) part from
    // the moving domain boundary; Cauchy–Schwarz constrains the remainder.
    let rpp = (rate.m[1][1] - T::lit(2.0) * diag_pp).abs();
    if rxx > bound_xx + slack(bound_xx) {
        return Err(Error::BoundViolation {
            t: t.to_f64().unwrap_or(f64::NAN),
            rate: rxx.to_f64().unwrap_or(f64::NAN),
            bound: bound_xx.to_f64().unwrap_or(f64::NAN),
        });
    }
    if rpp > bound_pp + slack(bound_pp) {
        return Err(Error::BoundViolation {
            t: t.to_f64().unwrap_or(f64::NAN),
            rate: rpp.to_f64().unwrap_or(f64::NAN),
            bound: bound_pp.to_f64().unwrap_or(f64::NAN),
        });
    }
    let ratio = |r: T, b: T| {
        if b > T::zero() {
            r / b
        } else {
            T::zero()
        }
    };
    Ok((ratio(rxx, bound_xx), ratio(rpp, bound_pp)))
}

/// Pointwise Cauchy–Schwarz bounds on the covariance rates:
/// |σ̇_xx| ≤ (2/M)√(σ_xx σ_pp) exactly, and, for the momentum rate,
/// |σ̇_pp − 2M∫₀ᵗν(v)Ġ(v)dv| ≤ 2M√(σ_pp·(G̈ν G̈)): the subtracted term is
/// the moving-boundary (diffusion) part of the rate, which carries the
/// early-time jolt and is not constrained by positivity; the remainder is
/// the ν-inner product ⟨G̈,Ġ⟩ bounded by its Gram diagonal. Supported for
/// the exponential-mode families, where the momentum-side comparator
/// (G̈ ν G̈) is a convergent frequency integral.
pub fn growth_bounds_check<T: Real>(
    model: &SpectralModel<T>,
    times: &[T],
) -> Result<GrowthBoundsReport<T>> {
    match model.family {
        BathFamily::OhmicRational { .. } | BathFamily::SupraOhmicRational { .. } => {}
        _ => {
            return Err(Error::invalid(
                "growth bounds need a spectral density that grows at least \
                 linearly at high frequency; the momentum comparator integral \
                 diverges otherwise",
            ))
        }
    }
    let prop = Propagator::new(model)?;
    let mass = model.system.mass;
    let mut max_xx = T::zero();
    let mut max_pp = T::zero();
    let mut checked = 0usize;
    for &t in times {
        check_time(t)?;
        checked += 1;
        if t == T::zero() {
            continue;
        }
        let ctx = FreqCtx::new(model, &prop, t)?;
        let sigma = thermal_covariance(model, t)?;
        let rate = thermal_covariance_rate(model, t)?;
        let kappa = ctx.entry(2, t, 2, t)? / (mass * mass);
        let diag_pp = ctx.diagonal(1, t)?;
        let (rx, rp) = growth_point(mass, t, &sigma, &rate, kappa, diag_pp)?;
        max_xx = max_xx.max(rx);
        max_pp = max_pp.max(rp);
    }
    Ok(GrowthBoundsReport {
        points_checked: checked,
        max_xx_ratio: max_xx,
        max_pp_ratio: max_pp,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectrum::SystemParams;
    use approx::assert_relative_eq;

    fn ohmic(gamma0: f64, lambda: f64, temperature: f64) -> SpectralModel<f64> {
        SpectralModel::new(
            SystemParams::new(1.0, 1.0, temperature).unwrap(),
            BathFamily::OhmicRational { gamma0, lambda },
        )
        .unwrap()
    }

    fn supra(gamma2: f64, lambda: f64, temperature: f64) -> SpectralModel<f64> {
        SpectralModel::new(
            SystemParams::new(1.0, 1.0, temperature).unwrap(),
            BathFamily::SupraOhmicRational { gamma2, lambda },
        )
        .unwrap()
    }

    fn sub(gamma_star: f64, temperature: f64) -> SpectralModel<f64> {
        SpectralModel::new(
            SystemParams::new(1.0, 1.0, temperature).unwrap(),
            BathFamily::SubOhmicSqrt { gamma_star },
        )
        .unwrap()
    }

    #[test]
    fn covariance2_algebra() {
        let c = Covariance2::new(2.0, 0.5, 1.0);
        let m = c.as_matrix();
        assert_eq!(m.m[0][1], m.m[1][0]);
        assert_relative_eq!(c.det(), 2.0 - 0.25);
        let lo = c.min_eigenvalue();
        let hi = c.sxx + c.spp - lo;
        assert_relative_eq!(lo * hi, c.det(), max_relative = 1e-12);
        assert!(c.is_positive_semidefinite());
        assert!(!Covariance2::new(1.0, 2.0, 1.0).is_positive_semidefinite());
    }

    /// Closed trig-split coefficients against a direct Gauss–Legendre
    /// evaluation of the convolution integrals.
    #[test]
    fn exp_split_matches_direct_convolution() {
        let model = ohmic(0.4, 8.0, 0.0);
        let prop = Propagator::new(&model).unwrap();
        let modes = prop.modes().unwrap();
        let gl = quad::gauss_legendre::<f64>(24);
        for &(level, t, omega) in &[(0usize, 2.3, 0.7), (1, 1.1, 3.9), (2, 3.7, 1.6)] {
            let s = exp_split(modes, level, t, omega);
            let x_closed = s.uc + s.a * (omega * t).cos() + s.b * (omega * t).sin();
            let y_closed = s.us - s.b * (omega * t).cos() + s.a * (omega * t).sin();
            let deriv = |u: f64| match level {
                0 => prop.green(u).unwrap(),
                1 => prop.dgreen(u).unwrap(),
                _ => prop.ddgreen(u).unwrap(),
            };
            let panels = 60;
            let (mut x, mut y) = (0.0, 0.0);
            for j in 0..panels {
                let a = t * j as f64 / panels as f64;
                let w2 = t / panels as f64 / 2.0;
                for &(node, wt) in &gl {
                    let u = a + w2 * (1.0 + node);
                    x += wt * w2 * deriv(u) * (omega * (t - u)).cos();
                    y += wt * w2 * deriv(u) * (omega * (t - u)).sin();
                }
            }
            assert_relative_eq!(x_closed, x, max_relative = 1e-9, epsilon = 1e-11);
            assert_relative_eq!(y_closed, y, max_relative = 1e-9, epsilon = 1e-11);
        }
    }

    /// The tabulated-Green convolution machinery against the closed split
    /// coefficients, forced onto an exponential-mode model.
    #[test]
    fn green_table_convolution_matches_split() {
        let model = ohmic(0.3, 6.0, 0.0);
        let prop = Propagator::new(&model).unwrap();
        let modes = prop.modes().unwrap();
        let t = 4.0;
        let table = GreenTable::build(&prop, t * 1.0000001, 4096).unwrap();
        let gl = quad::gauss_legendre(8);
        for &omega in &[0.3, 1.0, 4.7, 12.0] {
            for level in 0..2usize {
                let s = exp_split(modes, level, t, omega);
                let xc = s.uc + s.a * (omega * t).cos() + s.b * (omega * t).sin();
                let yc = s.us - s.b * (omega * t).cos() + s.a * (omega * t).sin();
                let (x, y) = table.conv(level, t, omega, prop.oscillation_frequency(), &gl);
                assert_relative_eq!(x, xc, max_relative = 2e-7, epsilon = 2e-9);
                assert_relative_eq!(y, yc, max_relative = 2e-7, epsilon = 2e-9);
            }
        }
    }

    #[test]
    fn thermal_covariance_starts_at_zero() {
        let model = ohmic(0.1, 20.0, 1.0);
        let c = thermal_covariance(&model, 0.0).unwrap();
        assert_eq!(c.sxx, 0.0);
        assert_eq!(c.sxp, 0.0);
        assert_eq!(c.spp, 0.0);
        assert_eq!(thermal_covariance_rate(&model, 0.0).unwrap(), Mat2::zero());
    }

    /// σ_xp must equal (M/2)·dσ_xx/dt; the rate routine must match a
    /// centered finite difference of σ_xx.
    #[test]
    fn cross_entry_is_half_position_rate() {
        let model = ohmic(0.1, 20.0, 1.0);
        for &t in &[0.7, 3.0] {
            // Fourth-order five-point stencil keeps both the truncation error
            // and the quadrature-noise amplification near 1e-10.
            let h = 1e-2;
            let samples: Vec<Covariance2> = [-2.0, -1.0, 1.0, 2.0]
                .iter()
                .map(|&k| thermal_covariance(&model, t + k * h).unwrap())
                .collect();
            let stencil = |f: &dyn Fn(&Covariance2) -> f64| -> f64 {
                (f(&samples[0]) - 8.0 * f(&samples[1]) + 8.0 * f(&samples[2])
                    - f(&samples[3]))
                    / (12.0 * h)
            };
            let c = thermal_covariance(&model, t).unwrap();
            let rate = thermal_covariance_rate(&model, t).unwrap();
            let fd_xx = stencil(&|s| s.sxx);
            assert_relative_eq!(c.sxp, 0.5 * fd_xx, max_relative = 1e-6, epsilon = 1e-9);
            assert_relative_eq!(rate.m[0][0], fd_xx, max_relative = 1e-6, epsilon = 1e-9);
            assert_relative_eq!(rate.m[1][1], stencil(&|s| s.spp), max_relative = 1e-6, epsilon = 1e-9);
            assert_relative_eq!(rate.m[0][1], stencil(&|s| s.sxp), max_relative = 1e-6, epsilon = 1e-9);
        }
    }

    /// The momentum entry rewritten through the position convolutions plus
    /// the boundary term (M G)²·∫ I coth and the cross term must match the
    /// direct momentum-convolution assembly over the same window.
    #[test]
    fn momentum_entry_alternative_assembly() {
        let model = ohmic(0.1, 20.0, 1.0);
        let prop = Propagator::new(&model).unwrap();
        let ctx = FreqCtx::new(&model, &prop, 3.0).unwrap();
        let t = 3.0;
        let b = ctx.boundary(t).unwrap();
        let v0 = b[0];
        let w = 6.0 * 20.0;
        let tol = QuadTol {
            abs_tol: 1e-12,
            rel_tol: 1e-11,
            max_intervals: 30000,
        };
        let direct = |omega: f64| {
            let (x1, y1) = ctx.xy(1, &b, t, omega);
            ctx.icoth(omega) * (x1 * x1 + y1 * y1)
        };
        let alt = |omega: f64| {
            let (x0, y0) = ctx.xy(0, &b, t, omega);
            ctx.icoth(omega)
                * (omega * omega * (x0 * x0 + y0 * y0) + v0 * v0
                    - 2.0 * v0 * omega * y0)
        };
        let splits = ctx.head_splits(0.0, w);
        let d = quad::integrate_with_splits(&direct, 0.0, w, &splits, tol, "direct").unwrap();
        let a = quad::integrate_with_splits(&alt, 0.0, w, &splits, tol, "alt").unwrap();
        assert_relative_eq!(d, a, max_relative = 1e-6);
    }

    #[test]
    fn determinant_nonnegative_along_evolution() {
        let model = ohmic(0.1, 20.0, 1.0);
        for &t in &[0.2, 1.0, 4.0, 12.0] {
            let c = thermal_covariance(&model, t).unwrap();
            let scale = 1.0 + c.sxx.abs() + c.spp.abs();
            assert!(c.det() >= -1e-10 * scale, "det {} at t={}", c.det(), t);
            assert!(c.is_positive_semidefinite());
        }
    }

    #[test]
    fn two_time_diagonal_matches_one_time() {
        let model = ohmic(0.1, 20.0, 1.0);
        let t = 2.5;
        let two = two_time_covariance(&model, t, t).unwrap();
        let one = thermal_covariance(&model, t).unwrap();
        assert_relative_eq!(two.block.m[0][0], one.sxx, max_relative = 1e-6);
        assert_relative_eq!(two.block.m[1][1], one.spp, max_relative = 1e-6);
        assert_relative_eq!(
            0.5 * (two.block.m[0][1] + two.block.m[1][0]),
            one.sxp,
            max_relative = 1e-6,
            epsilon = 1e-10
        );
        // On the diagonal the block itself is symmetric.
        assert_relative_eq!(two.block.m[0][1], two.block.m[1][0], max_relative = 1e-6, epsilon = 1e-10);
    }

    #[test]
    fn two_time_zero_edge_and_exchange_symmetry() {
        let model = ohmic(0.2, 10.0, 0.5);
        let z = two_time_covariance(&model, 0.0, 1.5).unwrap();
        assert_eq!(z.block, Mat2::zero());
        let a = two_time_covariance(&model, 1.2, 2.8).unwrap();
        let b = two_time_covariance(&model, 2.8, 1.2).unwrap();
        let bt = b.block.transpose();
        assert_relative_eq!(a.block.m[0][0], bt.m[0][0], max_relative = 1e-7, epsilon = 1e-10);
        assert_relative_eq!(a.block.m[0][1], bt.m[0][1], max_relative = 1e-7, epsilon = 1e-10);
        assert_relative_eq!(a.block.m[1][0], bt.m[1][0], max_relative = 1e-7, epsilon = 1e-10);
        assert_relative_eq!(a.block.m[1][1], bt.m[1][1], max_relative = 1e-7, epsilon = 1e-10);
    }

    /// Stationary covariance: weak coupling reproduces the free thermal
    /// state, high temperature the classical equipartition values.
    #[test]
    fn late_covariance_limits() {
        let weak = ohmic(1e-3, 20.0, 0.7);
        let c = late_covariance(&weak).unwrap();
        let coth = bose_coth(1.0, 0.7);
        assert_relative_eq!(c.sxx, coth / 2.0, max_relative = 1e-2);
        assert_relative_eq!(c.spp, coth / 2.0, max_relative = 2e-2);
        assert_eq!(c.sxp, 0.0);

        let hot = ohmic(0.1, 1000.0, 100.0);
        let ch = late_covariance(&hot).unwrap();
        assert_relative_eq!(ch.sxx, 100.0, max_relative = 2e-2);
        assert_relative_eq!(ch.spp, 100.0, max_relative = 2e-2);
    }

    #[test]
    fn late_covariance_closed_matches_quadrature_grid() {
        // 3×3 spot grid here; the full 5×5 sweep lives in the integration
        // tests. Includes an overdamped column.
        for &gamma0 in &[0.05, 0.4, 1.6] {
            for &temperature in &[0.0, 0.3, 2.0] {
                let model = ohmic(gamma0, 20.0, temperature);
                let quadrature = late_covariance(&model).unwrap();
                let closed =
                    late_covariance_ohmic_closed(1.0, 1.0, gamma0, 20.0, temperature).unwrap();
                assert_relative_eq!(closed.sxx, quadrature.sxx, max_relative = 1e-6);
                assert_relative_eq!(closed.spp, quadrature.spp, max_relative = 1e-6);
            }
        }
    }

    #[test]
    fn late_covariance_strong_coupling_localizes_position() {
        let model = ohmic(1000.0, 10.0, 0.0);
        let c = late_covariance(&model).unwrap();
        let star = crate::propagator::star_parameters(1.0, 1.0, 1000.0, 10.0).unwrap();
        // Momentum spread set by the star frequency, position strongly
        // squeezed below the free ground state.
        assert_relative_eq!(c.spp, star.omega_star / 2.0, max_relative = 0.2);
        assert!(c.sxx < 0.05);
        let closed = late_covariance_ohmic_closed(1.0, 1.0, 1000.0, 10.0, 0.0).unwrap();
        assert_relative_eq!(closed.sxx, c.sxx, max_relative = 1e-6);
        assert_relative_eq!(closed.spp, c.spp, max_relative = 1e-6);
    }

    /// At zero temperature the momentum spread keeps a log Λ growth while
    /// the position spread is cutoff-stable.
    #[test]
    fn momentum_log_cutoff_sensitivity() {
        let lambdas = [100.0, 1000.0, 10000.0];
        let vals: Vec<Covariance2<f64>> = lambdas
            .iter()
            .map(|&l| late_covariance_ohmic_closed(1.0, 1.0, 0.1, l, 0.0).unwrap())
            .collect();
        let d1 = vals[1].spp - vals[0].spp;
        let d2 = vals[2].spp - vals[1].spp;
        assert!(d1 > 0.0 && d2 > 0.0);
        // Equal log-steps give equal increments.
        assert_relative_eq!(d2 / d1, 1.0, max_relative = 0.05);
        let xx_change = (vals[2].sxx - vals[0].sxx).abs() / vals[0].sxx;
        assert!(xx_change < 0.01, "xx drifted {}", xx_change);
    }

    /// Cubic-coupling stationary spreads against the weak-coupling closed
    /// asymptote MΩ/2 + Mγ₂/π: the regulator factor cancels exactly between
    /// the density numerator and the response numerator, so the momentum
    /// spread approaches that constant from below and stays cutoff-stable
    /// (both at fixed γ₂ and under γ₂ → (Ω/Λ)γ₂), as does position.
    #[test]
    fn supra_momentum_cutoff_scaling() {
        let lambdas = [50.0, 200.0, 800.0];
        let gamma2 = 0.2;
        let fixed: Vec<Covariance2<f64>> = lambdas
            .iter()
            .map(|&l| late_covariance(&supra(gamma2, l, 0.0)).unwrap())
            .collect();
        let asymptote = 0.5 + gamma2 / std::f64::consts::PI;
        for c in &fixed {
            assert_relative_eq!(c.spp, asymptote, max_relative = 6e-3);
            assert_relative_eq!(c.sxx, 0.5, max_relative = 2e-2);
        }
        // Approach is monotone from below with an O(Λ⁻²)-shrinking gap.
        assert!(fixed[0].spp < fixed[1].spp && fixed[1].spp < fixed[2].spp);
        assert!(fixed[2].spp < asymptote);
        let variation = (fixed[2].spp - fixed[0].spp) / fixed[0].spp;
        assert!(variation < 0.01, "momentum drifted {}", variation);
        // Rescaled coupling γ₂ → (Ω/Λ)γ₂ is likewise cutoff-stable.
        let rescaled: Vec<f64> = lambdas
            .iter()
            .map(|&l| late_covariance(&supra(gamma2 / l, l, 0.0)).unwrap().spp)
            .collect();
        let s1 = rescaled[1] / rescaled[0];
        let s2 = rescaled[2] / rescaled[1];
        assert!((0.95..1.05).contains(&s1), "ratio {}", s1);
        assert!((0.95..1.05).contains(&s2), "ratio {}", s2);
    }

    #[test]
    fn evolution_fixed_point_and_decay() {
        let model = ohmic(0.1, 20.0, 1.0);
        let sinf = late_covariance(&model).unwrap();
        let stay = late_time_covariance_evolution(&model, &sinf, 30.0, 45.0).unwrap();
        assert_relative_eq!(stay.sxx, sinf.sxx, max_relative = 1e-9);
        assert_relative_eq!(stay.spp, sinf.spp, max_relative = 1e-9);

        let displaced = Covariance2::new(sinf.sxx * 3.0, 0.2, sinf.spp * 0.5);
        let near = late_time_covariance_evolution(&model, &displaced, 30.0, 32.0).unwrap();
        // Contraction rate is 2γ* ≈ 0.2, so Δt = 120 leaves ≈ e⁻²⁴ of the
        // initial displacement.
        let far = late_time_covariance_evolution(&model, &displaced, 30.0, 150.0).unwrap();
        let dev = |c: &Covariance2<f64>| {
            (c.sxx - sinf.sxx).abs() + (c.sxp - sinf.sxp).abs() + (c.spp - sinf.spp).abs()
        };
        assert!(dev(&far) < 1e-3 * dev(&near));
        assert!(dev(&far) < 1e-8);
    }

    #[test]
    fn evolution_matches_exact_mid_regime() {
        let model = ohmic(0.1, 20.0, 1.0);
        let t_i = 25.0;
        let start = thermal_covariance(&model, t_i).unwrap();
        for &dt in &[5.0, 15.0, 30.0] {
            let predicted =
                late_time_covariance_evolution(&model, &start, t_i, t_i + dt).unwrap();
            let exact = thermal_covariance(&model, t_i + dt).unwrap();
            assert_relative_eq!(predicted.sxx, exact.sxx, max_relative = 1e-2);
            assert_relative_eq!(predicted.spp, exact.spp, max_relative = 1e-2);
        }
    }

    #[test]
    fn evolution_refuses_powerlaw_memory() {
        let model = sub(0.15, 0.5);
        let sigma = Covariance2::new(1.0, 0.0, 1.0);
        let err = late_time_covariance_evolution(&model, &sigma, 10.0, 12.0).unwrap_err();
        assert!(matches!(err, Error::NoStationaryLimit { .. }));
    }

    /// Strongly non-Markovian parameter point: the covariance growth obeys
    /// both Cauchy–Schwarz bounds on a grid through the jolt region.
    #[test]
    fn growth_bounds_hold_in_jolt_regime() {
        // Bare parameters whose star form is T = γ* = Ω*/10, Λ* = 100 Ω*.
        let (gs, ls, os2) = (0.1f64, 100.0, 1.0);
        let lambda = ls + 2.0 * gs;
        let omega2 = os2 * ls / lambda;
        let gamma0 = gs * (ls * ls + 2.0 * gs * ls + os2) / (lambda * lambda);
        let model = SpectralModel::new(
            SystemParams::new(1.0, omega2.sqrt(), 0.1).unwrap(),
            BathFamily::OhmicRational {
                gamma0,
                lambda,
            },
        )
        .unwrap();
        let grid = [0.0, 0.02, 0.05, 0.15, 0.5, 1.5];
        let report = growth_bounds_check(&model, &grid).unwrap();
        assert_eq!(report.points_checked, grid.len());
        assert!(report.max_xx_ratio <= 1.0 + 1e-6);
        assert!(report.max_pp_ratio <= 1.0 + 1e-6);
        assert!(report.max_xx_ratio > 0.1);
    }

    #[test]
    fn growth_bound_detects_injected_violation() {
        let model = ohmic(0.1, 20.0, 1.0);
        let t = 1.0;
        let prop = Propagator::new(&model).unwrap();
        let ctx = FreqCtx::new(&model, &prop, t).unwrap();
        let sigma = thermal_covariance(&model, t).unwrap();
        let rate = thermal_covariance_rate(&model, t).unwrap();
        let kappa = ctx.entry(2, t, 2, t).unwrap();
        let diag = ctx.diagonal(1, t).unwrap();
        assert!(growth_point(1.0, t, &sigma, &rate, kappa, diag).is_ok());
        let corrupted = rate * 40.0;
        let err = growth_point(1.0, t, &sigma, &corrupted, kappa, diag).unwrap_err();
        assert!(matches!(err, Error::BoundViolation { .. }));
    }

    /// The early-time momentum-rate transient grows linearly with the
    /// cutoff (amplitude O(Λ) at t ~ 1/Λ).
    #[test]
    fn momentum_rate_jolt_scales_with_cutoff() {
        let at_cutoff_time = |lambda: f64| {
            let model = ohmic(0.1, lambda, 0.0);
            thermal_covariance_rate(&model, 1.0 / lambda).unwrap().m[1][1]
        };
        let r200 = at_cutoff_time(200.0);
        let r400 = at_cutoff_time(400.0);
        assert!(r200 > 0.2 * 0.1 * 200.0 * (2.0 / core::f64::consts::PI) * 0.3);
        let ratio = r400 / r200;
        assert!((1.5..2.6).contains(&ratio), "jolt ratio {}", ratio);
    }

    #[test]
    fn sub_ohmic_covariance_is_finite_and_psd() {
        let model = sub(0.15, 0.8);
        let c = thermal_covariance(&model, 4.0).unwrap();
        assert!(c.sxx > 0.0 && c.spp > 0.0);
        assert!(c.is_positive_semidefinite());
        let late = late_covariance(&model).unwrap();
        assert!(late.sxx > 0.0 && late.spp > 0.0);
    }
}
