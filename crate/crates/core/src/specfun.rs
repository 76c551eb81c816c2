//! Special functions used by the volume formulas.
//!
//! * [`dilog`]: Spence's dilogarithm on the principal branch, for complex
//!   arguments of any modulus.
//! * [`lobachevsky`]: the Lobachevsky function, through the identity
//!   `Λ(θ) = ½ Im Li₂(e^{2iθ})`.
//! * [`acosh_checked`]: inverse hyperbolic cosine that tolerates last-digit
//!   noise just below 1.
//! * [`integrate`]: globally adaptive Gauss–Kronrod (7/15) quadrature.

use std::f64::consts::{FRAC_PI_2, PI};

use num_complex::Complex64;

use crate::error::{Error, Result};

pub type ComplexScalar = Complex64;

/// Default tolerance below 1 accepted by [`acosh_checked`].
pub const CLAMP_EPS: f64 = 1e-12;

/// Maximum number of panel bisections performed by [`integrate`].
pub const MAX_SUBDIVISIONS: usize = 60;

const PI2_6: f64 = PI * PI / 6.0;

/// `B_{2k} / (2k+1)!` for k = 1..22.
const BERNOULLI_COEFFS: [f64; 22] = [
    0.027777777777777776,
    -0.0002777777777777778,
    4.72411186696901e-06,
    -9.185773074661964e-08,
    1.8978869988971e-09,
    -4.0647616451442256e-11,
    8.921691020456452e-13,
    -1.9939295860721074e-14,
    4.518980029619918e-16,
    -1.0356517612181247e-17,
    2.395218621026187e-19,
    -5.581785874325009e-21,
    1.3091507554183213e-22,
    -3.0874198024267403e-24,
    7.315975652702203e-26,
    -1.740845657234001e-27,
    4.1576356446139e-29,
    -9.962148488284622e-31,
    2.3940344248961652e-32,
    -5.76834735536739e-34,
    1.393179479647008e-35,
    -3.3721219654850894e-37,
];

/// Spence's dilogarithm `Li₂(z) = Σ z^k / k²`, analytically continued on the
/// principal branch (cut along `[1, ∞)`).
///
/// Arguments of modulus above 1 are inverted, arguments with real part above
/// ½ are reflected. What remains is summed directly when `|z| ≤ ½` and by the
/// Bernoulli series in `−log(1 − z)` otherwise, which covers the points near
/// `e^{±iπ/3}` that neither identity can move into the small disc.
pub fn dilog(z: ComplexScalar) -> Result<ComplexScalar> {
    if !z.re.is_finite() || !z.im.is_finite() {
        return Err(Error::InvalidArgument {
            what: "dilog",
            value: if z.re.is_finite() { z.im } else { z.re },
        });
    }
    Ok(dilog_unchecked(z))
}

fn dilog_unchecked(z: Complex64) -> Complex64 {
    if z == Complex64::new(0.0, 0.0) {
        return z;
    }
    if z == Complex64::new(1.0, 0.0) {
        return Complex64::new(PI2_6, 0.0);
    }
    if z.norm_sqr() > 1.0 {
        let log_neg = (-z).ln();
        return -PI2_6 - 0.5 * log_neg * log_neg - dilog_unit_disc(z.inv());
    }
    dilog_unit_disc(z)
}

/// `|z| ≤ 1`.
fn dilog_unit_disc(z: Complex64) -> Complex64 {
    if z.re > 0.5 {
        let w = Complex64::new(1.0, 0.0) - z;
        if w == Complex64::new(0.0, 0.0) {
            return Complex64::new(PI2_6, 0.0);
        }
        return PI2_6 - z.ln() * w.ln() - dilog_left_half(w);
    }
    dilog_left_half(z)
}

/// `|z| ≤ 1` and `Re z ≤ ½`.
fn dilog_left_half(z: Complex64) -> Complex64 {
    if z.norm_sqr() <= 0.25 {
        return dilog_series(z);
    }
    let u = -(Complex64::new(1.0, 0.0) - z).ln();
    let u2 = u * u;
    let mut sum = u - 0.25 * u2;
    let mut power = u;
    for coeff in BERNOULLI_COEFFS {
        power *= u2;
        let term = coeff * power;
        sum += term;
        if term.norm() <= f64::EPSILON * 1e-2 * sum.norm() {
            break;
        }
    }
    sum
}

fn dilog_series(z: Complex64) -> Complex64 {
    let mut sum = Complex64::new(0.0, 0.0);
    let mut power = Complex64::new(1.0, 0.0);
    for k in 1..200u32 {
        power *= z;
        let kf = f64::from(k);
        let term = power / (kf * kf);
        sum += term;
        if term.norm() <= f64::EPSILON * 1e-2 * sum.norm() {
            break;
        }
    }
    sum
}

/// Lobachevsky function `Λ(θ) = −∫₀^θ log|2 sin u| du`.
///
/// Odd and π-periodic. Evaluated as `½ Im Li₂(e^{2iθ})` after reducing θ to
/// `(−π/2, π/2]`.
pub fn lobachevsky(theta: f64) -> Result<f64> {
    if !theta.is_finite() {
        return Err(Error::InvalidArgument {
            what: "lobachevsky",
            value: theta,
        });
    }
    let mut reduced = theta.rem_euclid(PI);
    if reduced > FRAC_PI_2 {
        reduced -= PI;
    }
    if reduced == 0.0 {
        return Ok(0.0);
    }
    let z = Complex64::from_polar(1.0, 2.0 * reduced);
    Ok(0.5 * dilog_unchecked(z).im)
}

/// `arccosh(max(x, 1))`, accepting arguments down to `1 − CLAMP_EPS`.
pub fn acosh_checked(x: f64) -> Result<f64> {
    acosh_clamped(x, CLAMP_EPS)
}

/// As [`acosh_checked`] with an explicit clamp tolerance.
pub fn acosh_clamped(x: f64, eps: f64) -> Result<f64> {
    if !x.is_finite() {
        return Err(Error::InvalidArgument {
            what: "acosh",
            value: x,
        });
    }
    if x < 1.0 - eps {
        return Err(Error::Domain {
            what: "acosh",
            value: x,
        });
    }
    if x <= 1.0 {
        return Ok(0.0);
    }
    Ok(x.acosh())
}

// Gauss–Kronrod 7/15 abscissae and weights on [-1, 1], non-negative half.
const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
// Gauss weights for XGK[1], XGK[3], XGK[5], XGK[7].
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

#[derive(Debug, Clone, Copy)]
struct Panel {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

fn gauss_kronrod<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> Result<Panel> {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let eval = |x: f64| -> Result<f64> {
        let y = f(x);
        if y.is_finite() {
            Ok(y)
        } else {
            Err(Error::InvalidArgument {
                what: "integrand value",
                value: x,
            })
        }
    };
    let fc = eval(center)?;
    let mut kronrod = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    for (j, (&x, &w)) in XGK.iter().zip(WGK.iter()).take(7).enumerate() {
        let dx = half * x;
        let pair = eval(center - dx)? + eval(center + dx)?;
        kronrod += w * pair;
        if j % 2 == 1 {
            gauss += WG[j / 2] * pair;
        }
    }
    Ok(Panel {
        a,
        b,
        value: kronrod * half,
        error: ((kronrod - gauss) * half).abs(),
    })
}

/// Adaptive quadrature of `f` over `[a, b]` with [`MAX_SUBDIVISIONS`] bisections.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> Result<f64> {
    integrate_with_limit(f, a, b, tol, MAX_SUBDIVISIONS)
}

/// Globally adaptive Gauss–Kronrod quadrature: the panel with the largest
/// error estimate is bisected until the summed estimate drops below `tol`.
/// On failure the error carries the best estimate.
pub fn integrate_with_limit<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    tol: f64,
    max_subdivisions: usize,
) -> Result<f64> {
    if !(a.is_finite() && b.is_finite()) || a > b {
        return Err(Error::InvalidArgument {
            what: "integration interval",
            value: if a.is_finite() { b } else { a },
        });
    }
    if !(tol > 0.0) {
        return Err(Error::InvalidArgument {
            what: "integration tolerance",
            value: tol,
        });
    }
    if a == b {
        return Ok(0.0);
    }
    let mut panels = vec![gauss_kronrod(&f, a, b)?];
    for _ in 0..max_subdivisions {
        let total_error: f64 = panels.iter().map(|p| p.error).sum();
        if total_error <= tol {
            break;
        }
        let (worst, _) = panels
            .iter()
            .enumerate()
            .max_by(|x, y| x.1.error.total_cmp(&y.1.error))
            .expect("at least one panel");
        let panel = panels.swap_remove(worst);
        let mid = 0.5 * (panel.a + panel.b);
        panels.push(gauss_kronrod(&f, panel.a, mid)?);
        panels.push(gauss_kronrod(&f, mid, panel.b)?);
    }
    // Sum in interval order so the result does not depend on bisection history.
    panels.sort_by(|x, y| x.a.total_cmp(&y.a));
    let value: f64 = panels.iter().map(|p| p.value).sum();
    let error: f64 = panels.iter().map(|p| p.error).sum();
    if error > tol {
        return Err(Error::Accuracy {
            what: "adaptive quadrature",
            estimate: value,
            error,
        });
    }
    Ok(value)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_4;

    fn brute_series(z: Complex64, terms: u32) -> Complex64 {
        (1..=terms)
            .map(|k| z.powu(k) / f64::from(k * k))
            .fold(Complex64::new(0.0, 0.0), |acc, t| acc + t)
    }

    #[test]
    fn dilog_classical_values() {
        assert_eq!(dilog(Complex64::new(0.0, 0.0)).unwrap(), Complex64::new(0.0, 0.0));
        let one = dilog(Complex64::new(1.0, 0.0)).unwrap();
        assert!((one.re - PI * PI / 6.0).abs() < 1e-15 && one.im == 0.0);
        let half = dilog(Complex64::new(0.5, 0.0)).unwrap();
        let oracle = brute_series(Complex64::new(0.5, 0.0), 200);
        assert!((half - oracle).norm() < 1e-14, "{half} vs {oracle}");
        let minus_one = dilog(Complex64::new(-1.0, 0.0)).unwrap();
        assert!((minus_one.re + PI * PI / 12.0).abs() < 1e-14);
    }

    #[test]
    fn dilog_matches_series_inside_small_disc() {
        for k in 0..24 {
            let phase = f64::from(k) * PI / 12.0;
            for r in [0.1, 0.3, 0.5] {
                let z = Complex64::from_polar(r, phase);
                let got = dilog(z).unwrap();
                assert!((got - brute_series(z, 400)).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn dilog_on_unit_circle_matches_clausen_series() {
        // Re Li₂(e^{iφ}) = π²/6 − φ(2π − φ)/4 on [0, 2π]; Im is Clausen's Cl₂(φ).
        for k in 1..36 {
            let phi = f64::from(k) * PI / 18.0;
            let got = dilog(Complex64::from_polar(1.0, phi)).unwrap();
            let re = PI * PI / 6.0 - phi * (2.0 * PI - phi) / 4.0;
            assert!((got.re - re).abs() < 1e-13, "phi={phi}");
        }
    }

    #[test]
    fn dilog_rejects_non_finite() {
        assert!(matches!(
            dilog(Complex64::new(f64::NAN, 0.0)),
            Err(Error::InvalidArgument { .. })
        ));
        assert!(dilog(Complex64::new(0.0, f64::INFINITY)).is_err());
    }

    #[test]
    fn lobachevsky_basic_values() {
        assert_eq!(lobachevsky(0.0).unwrap(), 0.0);
        assert!(lobachevsky(FRAC_PI_2).unwrap().abs() < 1e-15);
        let oracle = -integrate(|u| (2.0 * u.sin()).abs().ln(), 0.0, FRAC_PI_4, 1e-12).unwrap();
        assert!((lobachevsky(FRAC_PI_4).unwrap() - oracle).abs() < 1e-10);
        // Λ(π/6) = (3/2) Λ(π/3)
        let l6 = lobachevsky(PI / 6.0).unwrap();
        let l3 = lobachevsky(PI / 3.0).unwrap();
        assert!((l6 - 1.5 * l3).abs() < 1e-14);
        assert!(lobachevsky(f64::NAN).is_err());
    }

    #[test]
    fn acosh_checked_clamps_and_rejects() {
        assert_eq!(acosh_checked(1.0).unwrap(), 0.0);
        assert_eq!(acosh_checked(1.0 - 1e-13).unwrap(), 0.0);
        let x = (3.0 + 3f64.sqrt()) / 4.0;
        let direct = (x + (x * x - 1.0).sqrt()).ln();
        assert!((acosh_checked(x).unwrap() - direct).abs() < 1e-15);
        match acosh_checked(0.5) {
            Err(Error::Domain { value, .. }) => assert_eq!(value, 0.5),
            other => panic!("{other:?}"),
        }
        assert!(acosh_checked(f64::INFINITY).is_err());
    }

    #[test]
    fn integrate_constant_and_polynomial() {
        assert!((integrate(|_| 1.0, 0.0, 1.0, 1e-12).unwrap() - 1.0).abs() < 1e-14);
        let v = integrate(|x| x.powi(5), -1.0, 2.0, 1e-12).unwrap();
        assert!((v - (64.0 - 1.0) / 6.0).abs() < 1e-12);
        assert_eq!(integrate(|x| x, 3.0, 3.0, 1e-9).unwrap(), 0.0);
    }

    #[test]
    fn integrate_reports_non_convergence() {
        // 1/sqrt(x) has an integrable singularity that needs far more than 3 bisections.
        match integrate_with_limit(|x| 1.0 / x.sqrt(), 0.0, 1.0, 1e-14, 3) {
            Err(Error::Accuracy { estimate, .. }) => assert!((estimate - 2.0).abs() < 0.1),
            other => panic!("{other:?}"),
        }
        assert!(integrate(|x| x, 1.0, 0.0, 1e-9).is_err());
        assert!(integrate(|x| x, 0.0, 1.0, 0.0).is_err());
    }
}
