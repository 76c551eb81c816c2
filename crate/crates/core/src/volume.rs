//! Volume of truncated tetrahedra from their dihedral angles.
//!
//! The main entry point is [`ushijima_volume`], the dilogarithm formula
//! `½ Im(U(z₁) − U(z₂))` built on the Gram matrix of the face planes. It is
//! valid on the closure of the angle polytope.

use std::f64::consts::PI;

use nalgebra::Matrix4;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::convert::{lengths_to_angles, CLOSURE_SLACK};
use crate::domain::{in_closure_with_slack, DihedralAngles, EdgeLengths};
use crate::error::{Error, Result};
use crate::specfun::{dilog, integrate, lobachevsky, ComplexScalar};

/// Smallest modulus accepted for the shared denominator of `z₁, z₂`.
pub const DENOMINATOR_GUARD: f64 = 1e-14;

/// `det G` up to this value is treated as a degenerate (flat) configuration.
pub const DET_EPS: f64 = 1e-10;

/// Volumes in `[−NEGATIVE_CLAMP, 0)` are reported as 0.
pub const NEGATIVE_CLAMP: f64 = 1e-9;

/// Gram matrix of the four face planes: unit diagonal, `−cos θ` off it.
///
/// Row/column order follows the faces `123, 124, 134, 234`, so that
/// `G[0][1] = −cos θ₁₂`, `G[0][2] = −cos θ₁₃`, `G[0][3] = −cos θ₂₃`,
/// `G[1][2] = −cos θ₁₄`, `G[1][3] = −cos θ₂₄`, `G[2][3] = −cos θ₃₄`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GramMatrix(pub Matrix4<f64>);

impl GramMatrix {
    pub fn entry(&self, r: usize, c: usize) -> f64 {
        self.0[(r, c)]
    }

    /// Determinant by LU with partial pivoting.
    pub fn det(&self) -> f64 {
        self.0.lu().determinant()
    }
}

pub fn gram(a: &DihedralAngles) -> GramMatrix {
    let [t12, t13, t14, t34, t24, t23] = a.0.map(|x| -x.cos());
    GramMatrix(Matrix4::new(
        1.0, t12, t13, t23, //
        t12, 1.0, t14, t24, //
        t13, t14, 1.0, t34, //
        t23, t24, t34, 1.0,
    ))
}

/// The complex quantities entering the volume formula.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UshijimaIntermediates {
    /// `e^{iθ}` in edge order: `a = e^{iθ₁₂}, b, c, d, e, f = e^{iθ₂₃}`.
    pub units: [ComplexScalar; 6],
    pub det_g: f64,
    pub z1: ComplexScalar,
    pub z2: ComplexScalar,
}

/// Evaluates `det G`, the unit numbers `a…f`, and `z₁, z₂`.
///
/// `√det G` is the principal complex root, so for `det G < 0` it equals
/// `i √|det G|`; `z₁` takes the minus sign and `z₂` the plus sign.
pub fn ushijima_intermediates(angles: &DihedralAngles) -> Result<UshijimaIntermediates> {
    let det_g = gram(angles).det();
    let units = angles.0.map(|x| Complex64::from_polar(1.0, x));
    let [a, b, c, d, e, f] = units;
    let sines = angles.0.map(f64::sin);
    let sine_sum = sines[0] * sines[3] + sines[1] * sines[4] + sines[2] * sines[5];
    let denominator = a * d + b * e + c * f + a * b * f + a * c * e + b * c * d + d * e * f
        + a * b * c * d * e * f;
    let root = Complex64::new(det_g, 0.0).sqrt();
    let nan = Complex64::new(f64::NAN, f64::NAN);
    if denominator.norm() < DENOMINATOR_GUARD {
        return Err(Error::Evaluation {
            reason: "vanishing denominator",
            det_g,
            z1: nan,
            z2: nan,
        });
    }
    let z1 = -2.0 * (sine_sum - root) / denominator;
    let z2 = -2.0 * (sine_sum + root) / denominator;
    if !(z1.re.is_finite() && z1.im.is_finite() && z2.re.is_finite() && z2.im.is_finite()) {
        return Err(Error::Evaluation {
            reason: "non-finite z",
            det_g,
            z1,
            z2,
        });
    }
    Ok(UshijimaIntermediates {
        units,
        det_g,
        z1,
        z2,
    })
}

impl UshijimaIntermediates {
    /// `U(z) = ½ [Li₂(z) + Li₂(abde z) + Li₂(acdf z) + Li₂(bcef z)
    ///          − Li₂(−abc z) − Li₂(−aef z) − Li₂(−bdf z) − Li₂(−cde z)]`.
    pub fn u(&self, z: ComplexScalar) -> Result<ComplexScalar> {
        let [a, b, c, d, e, f] = self.units;
        let plus = [Complex64::new(1.0, 0.0), a * b * d * e, a * c * d * f, b * c * e * f];
        let minus = [a * b * c, a * e * f, b * d * f, c * d * e];
        let mut sum = Complex64::new(0.0, 0.0);
        for m in plus {
            sum += dilog(m * z)?;
        }
        for m in minus {
            sum -= dilog(-m * z)?;
        }
        Ok(0.5 * sum)
    }

    pub fn volume(&self) -> Result<f64> {
        let wrap = |err: Error| match err {
            Error::InvalidArgument { .. } => Error::Evaluation {
                reason: "non-finite dilogarithm argument",
                det_g: self.det_g,
                z1: self.z1,
                z2: self.z2,
            },
            other => other,
        };
        let u1 = self.u(self.z1).map_err(wrap)?;
        let u2 = self.u(self.z2).map_err(wrap)?;
        let v = 0.5 * (u1 - u2).im;
        if !v.is_finite() {
            return Err(Error::Evaluation {
                reason: "non-finite volume",
                det_g: self.det_g,
                z1: self.z1,
                z2: self.z2,
            });
        }
        Ok(v)
    }
}

fn clamp_volume(v: f64) -> f64 {
    if (-NEGATIVE_CLAMP..0.0).contains(&v) {
        0.0
    } else {
        v
    }
}

/// Volume of the truncated tetrahedron with the given dihedral angles, on the
/// closure of the angle polytope.
///
/// Where the formula degenerates to `0/0` (the shared denominator vanishes,
/// as at the flat corner `(0, 0, π, 0, 0, π)`), the value is the limit along
/// the segment toward the regular point with all angles π/6, read off by
/// Richardson extrapolation. The volume extends continuously to the closure,
/// so this limit is the value there.
pub fn ushijima_volume(a: &DihedralAngles) -> Result<f64> {
    if !a.is_finite() {
        return Err(Error::InvalidArgument {
            what: "ushijima_volume",
            value: a.iter().copied().find(|x| !x.is_finite()).unwrap(),
        });
    }
    if !in_closure_with_slack(a, CLOSURE_SLACK) {
        return Err(Error::Precondition(format!(
            "angles {:?} are outside the closed angle polytope",
            a.0
        )));
    }
    match ushijima_intermediates(a) {
        Ok(im) => {
            if im.det_g > DET_EPS {
                return Err(Error::Evaluation {
                    reason: "positive Gram determinant",
                    det_g: im.det_g,
                    z1: im.z1,
                    z2: im.z2,
                });
            }
            let v = im.volume()?;
            if v < -NEGATIVE_CLAMP {
                return Err(Error::Evaluation {
                    reason: "negative volume",
                    det_g: im.det_g,
                    z1: im.z1,
                    z2: im.z2,
                });
            }
            Ok(clamp_volume(v))
        }
        Err(Error::Evaluation {
            reason: "vanishing denominator",
            ..
        }) => volume_by_continuity(a),
        Err(e) => Err(e),
    }
}

/// Limit of the volume at a degenerate closure point, approached along the
/// segment toward the regular π/6 point.
fn volume_by_continuity(a: &DihedralAngles) -> Result<f64> {
    let centre = DihedralAngles::splat(PI / 6.0);
    let steps = [4e-3, 2e-3, 1e-3];
    let mut values = [0.0; 3];
    for (slot, &h) in values.iter_mut().zip(steps.iter()) {
        let im = ushijima_intermediates(&a.lerp(&centre, h))?;
        *slot = im.volume()?;
    }
    // Quadratic extrapolation to h = 0 for steps in ratio 2:1.
    let first = [2.0 * values[1] - values[0], 2.0 * values[2] - values[1]];
    let v = (4.0 * first[1] - first[0]) / 3.0;
    Ok(clamp_volume(v).max(0.0))
}

/// Volume as a function of edge lengths, defined on the closure of the
/// length chart.
pub fn volume_of_lengths(l: &EdgeLengths) -> Result<f64> {
    ushijima_volume(&lengths_to_angles(l)?)
}

/// `8Λ(π/4) − 3∫₀^{π/6} arccosh(cos t / (2 cos t − 1)) dt`, the volume of the
/// regular truncated tetrahedron with all dihedral angles π/6.
pub fn regular_volume_l0() -> Result<f64> {
    let integral = integrate(
        |t: f64| {
            let c = t.cos();
            (c / (2.0 * c - 1.0)).max(1.0).acosh()
        },
        0.0,
        PI / 6.0,
        1e-13,
    )?;
    Ok(8.0 * lobachevsky(PI / 4.0)? - 3.0 * integral)
}

/// Total area of the four truncation triangles, `4π − 2 Σθ`. Each angle is a
/// corner of exactly two truncation triangles.
pub fn truncation_area(a: &DihedralAngles) -> f64 {
    4.0 * PI - 2.0 * a.sum()
}
