//! Roots of real-coefficient polynomials (degree ≤ 6 in practice) by
//! Durand–Kerner iteration with Newton polishing, used for the
//! characteristic rates of the damped oscillator.

use crate::error::{Error, Result};
use crate::{Complex, Real};

/// Evaluates p(z) for ascending real coefficients by Horner's scheme.
pub fn eval<T: Real>(coeffs: &[T], z: Complex<T>) -> Complex<T> {
    let mut acc = Complex::new(T::zero(), T::zero());
    for &c in coeffs.iter().rev() {
        acc = acc * z + Complex::new(c, T::zero());
    }
    acc
}

/// Evaluates p'(z) for ascending real coefficients.
pub fn eval_deriv<T: Real>(coeffs: &[T], z: Complex<T>) -> Complex<T> {
    let mut acc = Complex::new(T::zero(), T::zero());
    for (k, &c) in coeffs.iter().enumerate().skip(1).rev() {
        acc = acc * z + Complex::new(c * T::of_usize(k), T::zero());
    }
    acc
}

/// Scale-aware residual bound: Σ|aᵢ||z|ⁱ, the natural size of rounding noise
/// in a Horner evaluation at z.
fn residual_scale<T: Real>(coeffs: &[T], z: Complex<T>) -> T {
    let r = z.norm();
    let mut acc = T::zero();
    let mut pw = T::one();
    for &c in coeffs {
        acc += c.abs() * pw;
        pw *= r;
    }
    acc.max(T::min_positive_value())
}

/// All complex roots of the polynomial with ascending real coefficients.
/// Roots are polished by Newton iteration; the relative residual of each
/// polished root must reach 1e−12 or the call fails.
pub fn roots<T: Real>(coeffs: &[T]) -> Result<Vec<Complex<T>>> {
    let degree = match coeffs.iter().rposition(|c| *c != T::zero()) {
        Some(d) => d,
        None => return Err(Error::invalid("zero polynomial has no defined roots")),
    };
    if coeffs.iter().any(|c| !c.is_finite()) {
        return Err(Error::invalid("polynomial coefficients must be finite"));
    }
    if degree == 0 {
        return Ok(Vec::new());
    }
    let lead = coeffs[degree];
    let monic: Vec<T> = coeffs[..=degree].iter().map(|&c| c / lead).collect();

    // Cauchy-type root bound.
    let mut bound = T::zero();
    for &c in &monic[..degree] {
        bound = bound.max(c.abs());
    }
    let radius = T::one() + bound;

    // Durand–Kerner from staggered points on a circle.
    let mut zs: Vec<Complex<T>> = (0..degree)
        .map(|k| {
            let angle = T::lit(2.0) * T::PI() * T::of_usize(k) / T::of_usize(degree)
                + T::lit(0.4);
            Complex::new(radius * angle.cos(), radius * angle.sin())
        })
        .collect();
    for _ in 0..600 {
        let mut max_step = T::zero();
        for i in 0..degree {
            let zi = zs[i];
            let mut denom = Complex::new(T::one(), T::zero());
            for j in 0..degree {
                if j != i {
                    denom *= zi - zs[j];
                }
            }
            if denom.norm() == T::zero() {
                // Coincident iterates; nudge apart.
                zs[i] = zi + Complex::new(T::lit(1e-6) * radius, T::lit(1e-6) * radius);
                max_step = radius;
                continue;
            }
            let step = eval(&monic, zi) / denom;
            zs[i] = zi - step;
            max_step = max_step.max(step.norm());
        }
        if max_step < T::lit(1e-14) * radius {
            break;
        }
    }

    // Newton polish against the original (non-monic) coefficients.
    let tol = T::lit(1e-12);
    for z in zs.iter_mut() {
        for _ in 0..60 {
            let p = eval(coeffs, *z);
            let dp = eval_deriv(coeffs, *z);
            if dp.norm() == T::zero() {
                break;
            }
            let step = p / dp;
            *z -= step;
            if step.norm() <= T::epsilon() * z.norm().max(T::one()) {
                break;
            }
        }
        let residual = eval(coeffs, *z).norm() / residual_scale(coeffs, *z);
        if residual > tol {
            return Err(Error::RootFinding {
                residual: residual.to_f64().unwrap_or(f64::NAN),
                tolerance: tol.to_f64().unwrap_or(f64::NAN),
            });
        }
        // Real-coefficient polynomials: collapse numerically-real roots.
        if z.im.abs() < T::lit(1e3) * T::epsilon() * z.norm() {
            z.im = T::zero();
        }
    }
    zs.sort_by(|a, b| {
        a.re.partial_cmp(&b.re)
            .unwrap()
            .then(a.im.partial_cmp(&b.im).unwrap())
    });
    Ok(zs)
}
