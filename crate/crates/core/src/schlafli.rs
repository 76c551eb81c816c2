//! Volume gradients in both charts and the trigonometric expressions that
//! decide the sign of `∂vol/∂ℓ₁₂` at a longest edge.
//!
//! In the angle chart the gradient is closed form: `∂vol/∂θ_ij = −ℓ_ij / 2`.
//! In the length chart it is `−½ Σ_kl ℓ_kl ∂θ_kl/∂ℓ_ij`, with the Jacobian
//! `∂θ/∂ℓ` obtained numerically and checked against the inverse of `∂ℓ/∂θ`.

use std::f64::consts::PI;

use nalgebra::Matrix6;
use serde::{Deserialize, Serialize};

use crate::convert::{angles_to_lengths, in_l, lengths_to_angles};
use crate::domain::{DihedralAngles, EdgeLengths, Tetrahedron, VertexPermutation, EDGES};
use crate::error::{Error, Result};

/// Base step for finite differences.
pub const FD_STEP: f64 = 1e-5;

/// Cap on the Jacobian step relative to the coordinate, so that short edges
/// and small angles are not differenced across a scale comparable to their size.
pub const FD_RELATIVE_STEP: f64 = 1e-3;

/// Largest condition number accepted for a Jacobian.
pub const MAX_CONDITION: f64 = 1e10;

/// Largest accepted `|J_θ(ℓ) · J_ℓ(θ) − I|` entry.
pub const INVERSE_CONSISTENCY_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Chart {
    Angles,
    Lengths,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GradientVector {
    pub values: [f64; 6],
    pub chart: Chart,
}

impl std::ops::Index<usize> for GradientVector {
    type Output = f64;
    fn index(&self, p: usize) -> &f64 {
        &self.values[p]
    }
}

/// `∂vol/∂θ_ij = −ℓ_ij / 2`.
pub fn dvol_dangles(t: &Tetrahedron) -> GradientVector {
    GradientVector {
        values: t.lengths.0.map(|l| -0.5 * l),
        chart: Chart::Angles,
    }
}

fn add_scaled(acc: &mut [f64; 6], v: &[f64; 6], s: f64) {
    for (a, x) in acc.iter_mut().zip(v) {
        *a += s * x;
    }
}

/// Derivative at `x` of a vector-valued map, by central differences with one
/// Richardson step (fourth order). Falls back to second-order one-sided
/// stencils, also Richardson-extrapolated, when one side cannot be evaluated.
pub fn richardson_derivative<F>(f: F, x: f64, h: f64) -> Result<[f64; 6]>
where
    F: Fn(f64) -> Result<[f64; 6]>,
{
    let central = |h: f64| -> Result<[f64; 6]> {
        let (plus, minus) = (f(x + h)?, f(x - h)?);
        Ok(std::array::from_fn(|p| (plus[p] - minus[p]) / (2.0 * h)))
    };
    if let (Ok(coarse), Ok(fine)) = (central(h), central(0.5 * h)) {
        return Ok(std::array::from_fn(|p| (4.0 * fine[p] - coarse[p]) / 3.0));
    }
    let f0 = f(x)?;
    // sign = +1 forward, −1 backward
    let one_sided = |h: f64, sign: f64| -> Result<[f64; 6]> {
        let (f1, f2) = (f(x + sign * h)?, f(x + 2.0 * sign * h)?);
        let mut d = [0.0; 6];
        add_scaled(&mut d, &f0, -3.0);
        add_scaled(&mut d, &f1, 4.0);
        add_scaled(&mut d, &f2, -1.0);
        Ok(d.map(|v| sign * v / (2.0 * h)))
    };
    for sign in [1.0, -1.0] {
        if let (Ok(coarse), Ok(fine)) = (one_sided(h, sign), one_sided(0.5 * h, sign)) {
            return Ok(std::array::from_fn(|p| (4.0 * fine[p] - coarse[p]) / 3.0));
        }
    }
    Err(Error::Precondition(format!(
        "no finite-difference stencil of width {h} fits around {x}"
    )))
}

/// Scalar version of [`richardson_derivative`].
pub fn richardson_derivative_scalar<F>(f: F, x: f64, h: f64) -> Result<f64>
where
    F: Fn(f64) -> Result<f64>,
{
    Ok(richardson_derivative(|s| f(s).map(|v| [v; 6]), x, h)?[0])
}

fn numeric_jacobian<F>(base: &[f64; 6], map: F) -> Result<Matrix6<f64>>
where
    F: Fn(&[f64; 6]) -> Result<[f64; 6]>,
{
    let mut jac = Matrix6::zeros();
    for q in 0..6 {
        let column = richardson_derivative(
            |s| {
                let mut x = *base;
                x[q] = s;
                map(&x)
            },
            base[q],
            FD_STEP.min(FD_RELATIVE_STEP * base[q].abs()),
        )?;
        for (p, v) in column.iter().enumerate() {
            jac[(p, q)] = *v;
        }
    }
    Ok(jac)
}

fn condition_number(m: &Matrix6<f64>) -> f64 {
    let sv = m.singular_values();
    let max = sv.max();
    let min = sv.min();
    if min == 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}

/// `∂ℓ_p / ∂θ_q` at the given angles.
pub fn jacobian_lengths_of_angles(a: &DihedralAngles) -> Result<Matrix6<f64>> {
    numeric_jacobian(&a.0, |x| Ok(angles_to_lengths(&DihedralAngles(*x))?.0))
}

fn raw_jacobian_angles_of_lengths(l: &EdgeLengths) -> Result<Matrix6<f64>> {
    numeric_jacobian(&l.0, |x| Ok(lengths_to_angles(&EdgeLengths(*x))?.0))
}

/// Largest entry of `J_θ(ℓ) · J_ℓ(θ) − I`.
pub fn jacobian_inverse_defect(l: &EdgeLengths) -> Result<f64> {
    let forward = raw_jacobian_angles_of_lengths(l)?;
    let backward = jacobian_lengths_of_angles(&lengths_to_angles(l)?)?;
    Ok((forward * backward - Matrix6::identity()).abs().max())
}

/// `∂θ_p / ∂ℓ_q`, entry `(p, q)`, at a point of the length chart.
///
/// The result is rejected if its condition number exceeds [`MAX_CONDITION`]
/// or if it fails to invert the Jacobian of the opposite conversion to
/// within [`INVERSE_CONSISTENCY_TOL`].
pub fn jacobian_angles_of_lengths(l: &EdgeLengths) -> Result<Matrix6<f64>> {
    if !in_l(l, 1e-9) {
        return Err(Error::Precondition(format!(
            "lengths {:?} are not inside the length chart",
            l.0
        )));
    }
    let forward = raw_jacobian_angles_of_lengths(l)?;
    let condition = condition_number(&forward);
    if !(condition <= MAX_CONDITION) {
        return Err(Error::NearDegenerate { condition });
    }
    let backward = jacobian_lengths_of_angles(&lengths_to_angles(l)?)?;
    let defect = (forward * backward - Matrix6::identity()).abs().max();
    if defect > INVERSE_CONSISTENCY_TOL {
        return Err(Error::Accuracy {
            what: "Jacobian inverse consistency",
            estimate: defect,
            error: defect,
        });
    }
    Ok(forward)
}

/// `∂vol/∂ℓ_q = −½ Σ_p ℓ_p ∂θ_p/∂ℓ_q`.
pub fn dvol_dlengths(t: &Tetrahedron) -> Result<GradientVector> {
    let jac = jacobian_angles_of_lengths(&t.lengths)?;
    let values = std::array::from_fn(|q| {
        -0.5 * (0..6).map(|p| t.lengths[p] * jac[(p, q)]).sum::<f64>()
    });
    Ok(GradientVector {
        values,
        chart: Chart::Lengths,
    })
}

/// Relabels the vertices so that a longest edge sits at position 12.
pub fn with_longest_edge_first(t: &Tetrahedron) -> Tetrahedron {
    let (p, _) = t
        .lengths
        .iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |best, (p, &l)| if l > best.1 { (p, l) } else { best });
    let (i, j) = EDGES[p];
    let mut rest = (0..4).filter(|&v| v != i && v != j);
    let sigma = VertexPermutation::new([i, j, rest.next().unwrap(), rest.next().unwrap()])
        .expect("distinct vertices");
    t.permuted(&sigma)
}

struct Trig {
    c: [f64; 6],
    s: [f64; 6],
}

impl Trig {
    fn new(a: &DihedralAngles) -> Self {
        Self {
            c: a.0.map(f64::cos),
            s: a.0.map(f64::sin),
        }
    }
}

// Edge positions.
const E12: usize = 0;
const E13: usize = 1;
const E14: usize = 2;
const E34: usize = 3;
const E24: usize = 4;
const E23: usize = 5;

/// Bracket whose sign is opposite to that of `∂vol/∂ℓ₁₂`:
///
/// ```text
/// B = ℓ₁₂ (cos θ₁₂ (cos θ₁₃ cos θ₂₃ + cos θ₁₄ cos θ₂₄) + cos θ₁₃ cos θ₂₄ + cos θ₁₄ cos θ₂₃)
///   − ℓ₁₃ sin θ₁₂ sin θ₁₃ cos θ₂₃ − ℓ₁₄ sin θ₁₂ sin θ₁₄ cos θ₂₄ + ℓ₃₄ sin θ₁₂ sin θ₃₄
///   − ℓ₂₄ sin θ₁₂ sin θ₂₄ cos θ₁₄ − ℓ₂₃ sin θ₁₂ sin θ₂₃ cos θ₁₃
/// ```
pub fn key_bracket(t: &Tetrahedron) -> f64 {
    let Trig { c, s } = Trig::new(&t.angles);
    let l = &t.lengths;
    l[E12] * (c[E12] * (c[E13] * c[E23] + c[E14] * c[E24]) + c[E13] * c[E24] + c[E14] * c[E23])
        - l[E13] * s[E12] * s[E13] * c[E23]
        - l[E14] * s[E12] * s[E14] * c[E24]
        + l[E34] * s[E12] * s[E34]
        - l[E24] * s[E12] * s[E24] * c[E14]
        - l[E23] * s[E12] * s[E23] * c[E13]
}

/// The ratio `(∂vol/∂ℓ₁₂) / B`. Only its sign (negative) is known in closed form.
pub fn bracket_scale(t: &Tetrahedron) -> Result<f64> {
    Ok(dvol_dlengths(t)?[E12] / key_bracket(t))
}

/// Angle-only inequality that makes the bracket positive at a longest edge 12:
///
/// ```text
/// cos θ₁₂ (cos θ₁₃ cos θ₂₃ + cos θ₁₄ cos θ₂₄) + cos θ₁₃ cos θ₂₄ + cos θ₁₄ cos θ₂₃
///   − sin θ₁₂ (sin(θ₁₃ + θ₂₃) + sin(θ₁₄ + θ₂₄))
/// ```
///
/// The result is `LHS − RHS`; nonnegative on tetrahedra at least as large as
/// the regular one with angles π/6.
pub fn angle_inequality_gap(a: &DihedralAngles) -> f64 {
    let Trig { c, s } = Trig::new(a);
    c[E12] * (c[E13] * c[E23] + c[E14] * c[E24]) + c[E13] * c[E24] + c[E14] * c[E23]
        - s[E12] * ((a[E13] + a[E23]).sin() + (a[E14] + a[E24]).sin())
}

/// The three intermediate estimates behind [`angle_inequality_gap`], each as
/// `LHS − RHS`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LemmaGaps {
    /// `cos θ₁₃ cos θ₂₄ + cos θ₁₄ cos θ₂₃ − 2 sin(θ₁₂/2)`; claimed ≥ 0 when π/6 ≤ θ₁₂ ≤ π/3.
    pub cross_vs_half_angle: f64,
    /// `cos θ₁₃ cos θ₂₄ + cos θ₁₄ cos θ₂₃ − (1 − sin(π/12))`.
    pub cross_vs_constant: f64,
    /// `cos θ₁₂ (cos θ₁₃ cos θ₂₃ + cos θ₁₄ cos θ₂₄) − sin θ₁₂ (sin(θ₁₃+θ₂₃) + sin(θ₁₄+θ₂₄)) + 2 sin(θ₁₂/2)`.
    pub mixed_vs_half_angle: f64,
}

pub fn lemma_gaps(a: &DihedralAngles) -> LemmaGaps {
    let Trig { c, s } = Trig::new(a);
    let cross = c[E13] * c[E24] + c[E14] * c[E23];
    let half = 2.0 * (0.5 * a[E12]).sin();
    let mixed = c[E12] * (c[E13] * c[E23] + c[E14] * c[E24])
        - s[E12] * ((a[E13] + a[E23]).sin() + (a[E14] + a[E24]).sin());
    LemmaGaps {
        cross_vs_half_angle: cross - half,
        cross_vs_constant: cross - (1.0 - (PI / 12.0).sin()),
        mixed_vs_half_angle: mixed + half,
    }
}
