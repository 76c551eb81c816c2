//! Closed-form conversion between dihedral angles and edge lengths.
//!
//! For a vertex `i` with other vertices `j, k, l`:
//!
//! ```text
//! d_i  = 2 cos θ_ij cos θ_ik cos θ_il + cos² θ_ij + cos² θ_ik + cos² θ_il − 1
//! c_ij = cos θ_ij (cos θ_il cos θ_jk + cos θ_ik cos θ_jl)
//!        + cos θ_il cos θ_jl + cos θ_ik cos θ_jk + cos θ_kl sin² θ_ij
//! cosh ℓ_ij = c_ij / √(d_i d_j)
//! ```
//!
//! and dually, with `z_i` built from the three lengths of the face opposite `i`,
//!
//! ```text
//! w_ij = cosh ℓ_ij (cosh ℓ_il cosh ℓ_jk + cosh ℓ_ik cosh ℓ_jl)
//!        + cosh ℓ_ik cosh ℓ_il + cosh ℓ_jk cosh ℓ_jl − sinh² ℓ_ij cosh ℓ_kl
//! cos θ_ij = w_ij / √(z_k z_l)
//! ```
//!
//! Near `ℓ = 0` or `θ ∈ {0, π}` the inverse cosines lose half their digits, so
//! the sines are taken from the Gram determinants instead:
//! `c_ij² − d_i d_j = −det G · sin² θ_ij` and `z_k z_l − w_ij² = −det H · sinh² ℓ_ij`,
//! where `G` and `H` are the Gram matrices of the angles and of the lengths.

use serde::{Deserialize, Serialize};

use crate::domain::{
    complement, edge_index, in_closure_with_slack, in_o, opposite, DihedralAngles, EdgeLengths,
    EDGES, VERTEX_STARS,
};
use crate::error::{Error, Result};
use crate::specfun::CLAMP_EPS;
use crate::volume::gram;

use nalgebra::Matrix4;

/// Round-off allowed when deciding whether recovered angles lie in the closed polytope.
pub const CLOSURE_SLACK: f64 = 1e-9;

/// The auxiliary quantities of both conversion directions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConversionCoefficients {
    pub d: [f64; 4],
    pub c: [f64; 6],
    pub z: [f64; 4],
    pub w: [f64; 6],
}

impl ConversionCoefficients {
    pub fn new(angles: &DihedralAngles, lengths: &EdgeLengths) -> Self {
        let (d, c) = coefficients_from_angles(angles);
        let (z, w) = coefficients_from_lengths(lengths);
        Self { d, c, z, w }
    }
}

/// The symmetric cubic used for both `d_i` (cosines of a vertex star) and
/// `z_i` (hyperbolic cosines of a face).
fn triple_form(x: f64, y: f64, z: f64) -> f64 {
    2.0 * x * y * z + x * x + y * y + z * z - 1.0
}

/// `(d, c)` evaluated at the given angles.
pub fn coefficients_from_angles(a: &DihedralAngles) -> ([f64; 4], [f64; 6]) {
    let cos = a.0.map(f64::cos);
    let d = VERTEX_STARS.map(|[p, q, r]| triple_form(cos[p], cos[q], cos[r]));
    let c = std::array::from_fn(|p| {
        let (i, j) = EDGES[p];
        let (k, l) = complement(p);
        let ct = |u, v| cos[edge_index(u, v)];
        let sin = a[p].sin();
        cos[p] * (ct(i, l) * ct(j, k) + ct(i, k) * ct(j, l))
            + ct(i, l) * ct(j, l)
            + ct(i, k) * ct(j, k)
            + cos[opposite(p)] * sin * sin
    });
    (d, c)
}

/// `(z, w)` evaluated at the given lengths.
pub fn coefficients_from_lengths(l: &EdgeLengths) -> ([f64; 4], [f64; 6]) {
    let ch = l.0.map(f64::cosh);
    let z = VERTEX_STARS.map(|star| {
        let [p, q, r] = star.map(opposite);
        triple_form(ch[p], ch[q], ch[r])
    });
    let w = std::array::from_fn(|p| {
        let (i, j) = EDGES[p];
        let (k, l_) = complement(p);
        let hc = |u, v| ch[edge_index(u, v)];
        let sinh = l[p].sinh();
        ch[p] * (hc(i, l_) * hc(j, k) + hc(i, k) * hc(j, l_)) + hc(i, k) * hc(i, l_)
            + hc(j, k) * hc(j, l_)
            - sinh * sinh * ch[opposite(p)]
    });
    (z, w)
}

/// Vertex-indexed Gram matrix of the lengths: unit diagonal, `−cosh ℓ_ij` off it.
fn length_gram(l: &EdgeLengths) -> Matrix4<f64> {
    let mut h = Matrix4::identity();
    for (p, &(i, j)) in EDGES.iter().enumerate() {
        h[(i, j)] = -l[p].cosh();
        h[(j, i)] = h[(i, j)];
    }
    h
}

/// Edge lengths of the tetrahedron with the given dihedral angles.
pub fn angles_to_lengths(a: &DihedralAngles) -> Result<EdgeLengths> {
    if !a.is_finite() {
        return Err(Error::InvalidArgument {
            what: "angles_to_lengths",
            value: a.iter().copied().find(|x| !x.is_finite()).unwrap(),
        });
    }
    let (d, c) = coefficients_from_angles(a);
    if let Some(i) = d.iter().position(|&x| !(x > 0.0)) {
        return Err(Error::NotATetrahedron {
            index: i,
            reason: "d_i is not positive",
        });
    }
    let neg_det = (-gram(a).det()).max(0.0).sqrt();
    let mut out = [0.0; 6];
    for (p, slot) in out.iter_mut().enumerate() {
        let (i, j) = EDGES[p];
        let norm = (d[i] * d[j]).sqrt();
        let arg = c[p] / norm;
        if !(arg >= 1.0 - CLAMP_EPS) {
            return Err(Error::NotATetrahedron {
                index: p,
                reason: "cosh argument below 1",
            });
        }
        *slot = (a[p].sin().abs() * neg_det / norm).asinh();
    }
    Ok(EdgeLengths(out))
}

/// Dihedral angles of the tetrahedron with the given edge lengths.
///
/// Points of the boundary of the length chart map continuously to points of
/// the closed angle polytope, so a result on `∂𝒪` is returned, not rejected.
pub fn lengths_to_angles(l: &EdgeLengths) -> Result<DihedralAngles> {
    if !l.is_finite() {
        return Err(Error::InvalidArgument {
            what: "lengths_to_angles",
            value: l.iter().copied().find(|x| !x.is_finite()).unwrap(),
        });
    }
    if let Some(p) = l.iter().position(|&x| x < 0.0) {
        return Err(Error::InvalidArgument {
            what: "edge length",
            value: l[p],
        });
    }
    let (z, w) = coefficients_from_lengths(l);
    if let Some(i) = z.iter().position(|&x| !(x > 0.0)) {
        return Err(Error::NotATetrahedron {
            index: i,
            reason: "z_i is not positive",
        });
    }
    let neg_det = (-length_gram(l).determinant()).max(0.0).sqrt();
    let mut out = [0.0; 6];
    for (p, slot) in out.iter_mut().enumerate() {
        let (k, l_) = complement(p);
        let norm = (z[k] * z[l_]).sqrt();
        let arg = w[p] / norm;
        if !arg.is_finite() || arg.abs() > 1.0 + CLAMP_EPS {
            return Err(Error::NotInClosure { index: p, value: arg });
        }
        *slot = (l[p].sinh() * neg_det).atan2(w[p]);
    }
    let angles = DihedralAngles(out);
    if !in_closure_with_slack(&angles, CLOSURE_SLACK) {
        return Err(Error::Inconsistent { angles: out });
    }
    Ok(angles)
}

/// Outcome of the round-trip membership test for the length chart.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Membership {
    Inside,
    Outside,
    /// The recovered angles are within `tol` of the polytope boundary, or the
    /// round-trip error is within a factor of ten of `tol`.
    Indeterminate,
}

/// Round-trip classification of a length vector.
pub fn classify_lengths(l: &EdgeLengths, tol: f64) -> Membership {
    let Ok(angles) = lengths_to_angles(l) else {
        return Membership::Outside;
    };
    if !in_o(&angles, true) {
        return Membership::Outside;
    }
    let Ok(back) = angles_to_lengths(&angles) else {
        return Membership::Outside;
    };
    let err = back.max_abs_diff(l);
    let slack = angles.interior_slack();
    if err > tol {
        return if err <= 10.0 * tol || slack < tol {
            Membership::Indeterminate
        } else {
            Membership::Outside
        };
    }
    if slack < tol || err > 0.1 * tol {
        Membership::Indeterminate
    } else {
        Membership::Inside
    }
}

/// True when the lengths convert to angles strictly inside the polytope and
/// convert back to themselves within `tol`.
pub fn in_l(l: &EdgeLengths, tol: f64) -> bool {
    let Ok(angles) = lengths_to_angles(l) else {
        return false;
    };
    in_o(&angles, true)
        && angles_to_lengths(&angles).is_ok_and(|back| back.max_abs_diff(l) <= tol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{permute, permute_lengths, VertexPermutation};
    use std::f64::consts::{FRAC_PI_2, PI};

    fn l0() -> f64 {
        ((3.0 + 3f64.sqrt()) / 4.0).acosh()
    }

    /// Side and central-diagonal lengths of the regular right-angled octagon.
    fn octagon_lengths() -> EdgeLengths {
        let side = 2.0 * ((PI / 8.0).cos() / (PI / 4.0).sin()).acosh();
        let diagonal = 2.0 * ((PI / 4.0).cos() / (PI / 8.0).sin()).acosh();
        EdgeLengths([side, side, diagonal, side, side, diagonal])
    }

    #[test]
    fn coefficients_at_regular_points() {
        let (d, _) = coefficients_from_angles(&DihedralAngles::splat(PI / 6.0));
        let expected = (3.0 * 3f64.sqrt() + 5.0) / 4.0;
        assert!(d.iter().all(|&x| (x - expected).abs() < 1e-15));
        let (d, _) = coefficients_from_angles(&DihedralAngles::splat(FRAC_PI_2));
        assert!(d.iter().all(|&x| (x + 1.0).abs() < 1e-15));
        assert!(matches!(
            angles_to_lengths(&DihedralAngles::splat(FRAC_PI_2)),
            Err(Error::NotATetrahedron { index: 0, .. })
        ));
    }

    #[test]
    fn c_is_symmetric_in_the_complementary_pair() {
        let a = DihedralAngles([0.3, 0.2, 0.25, 0.4, 0.1, 0.35]);
        let (_, c) = coefficients_from_angles(&a);
        // swapping the two vertices off edge 12 (3 <-> 4) fixes edge 12 and 34
        let sigma = VertexPermutation::swap(2, 3);
        let (_, c_swapped) = coefficients_from_angles(&permute(&sigma, &a));
        assert!((c[0] - c_swapped[0]).abs() < 1e-15);
        assert!((c[3] - c_swapped[3]).abs() < 1e-15);
    }

    #[test]
    fn regular_pi_over_six_has_length_l0() {
        let l = angles_to_lengths(&DihedralAngles::splat(PI / 6.0)).unwrap();
        assert!(l.iter().all(|&x| (x - l0()).abs() < 1e-12));
        let a = lengths_to_angles(&EdgeLengths::splat(l0())).unwrap();
        assert!(a.iter().all(|&x| (x - PI / 6.0).abs() < 1e-12));
    }

    #[test]
    fn lengths_diverge_toward_flat_regular_limit() {
        let l = angles_to_lengths(&DihedralAngles::splat(PI / 3.0 - 1e-8)).unwrap();
        assert!(l.min() > 8.0);
    }

    #[test]
    fn regular_lengths_give_equal_angles() {
        for ell in [0.1, 1.0, 3.0] {
            let a = lengths_to_angles(&EdgeLengths::splat(ell)).unwrap();
            assert!(a.max() - a.min() < 1e-12);
            assert!(a[0] > 0.0 && a[0] < PI / 3.0);
        }
    }

    #[test]
    fn octagon_maps_to_flat_corner() {
        let a = lengths_to_angles(&octagon_lengths()).unwrap();
        let target = DihedralAngles([0.0, 0.0, PI, 0.0, 0.0, PI]);
        assert!(a.max_abs_diff(&target) < 1e-6, "{a:?}");
        assert!(!in_l(&octagon_lengths(), 1e-9));
        assert_ne!(classify_lengths(&octagon_lengths(), 1e-9), Membership::Inside);
    }

    #[test]
    fn in_l_examples() {
        assert!(in_l(&EdgeLengths::splat(l0()), 1e-9));
        assert_eq!(classify_lengths(&EdgeLengths::splat(l0()), 1e-9), Membership::Inside);
        // Long opposite pair 12/34 with four short edges: the round trip decides.
        let skewed = EdgeLengths([10.0, 0.01, 0.01, 10.0, 0.01, 0.01]);
        assert!(!in_l(&skewed, 1e-9));
        assert!(!in_l(&EdgeLengths([f64::NAN; 6]), 1e-9));
    }

    #[test]
    fn lengths_are_equivariant() {
        let a = DihedralAngles([0.3, 0.2, 0.25, 0.4, 0.1, 0.35]);
        let l = angles_to_lengths(&a).unwrap();
        for s in VertexPermutation::all() {
            let lhs = angles_to_lengths(&permute(&s, &a)).unwrap();
            assert!(lhs.max_abs_diff(&permute_lengths(&s, &l)) < 1e-13);
        }
    }

    #[test]
    fn rejects_bad_lengths() {
        assert!(lengths_to_angles(&EdgeLengths([-1.0, 1.0, 1.0, 1.0, 1.0, 1.0])).is_err());
        assert!(lengths_to_angles(&EdgeLengths([f64::INFINITY, 1.0, 1.0, 1.0, 1.0, 1.0])).is_err());
    }
}
