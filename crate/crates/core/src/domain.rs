//! Parameter charts for marked truncated tetrahedra.
//!
//! Vertices (truncation triangles) are numbered 0..4 internally; the six
//! internal edges are stored in the fixed order `12, 13, 14, 34, 24, 23`
//! (1-based vertex labels). Positions `p` and `p + 3` are opposite edges.

use std::f64::consts::PI;
use std::fmt;
use std::ops::{Index, IndexMut, Mul};

use rand::Rng;
use rand_distr::Exp1;
use serde::{Deserialize, Serialize};

use crate::convert::angles_to_lengths;
use crate::error::{Error, Result};
use crate::volume::ushijima_volume;

/// Edge position -> (vertex, vertex), 0-based, in the `12,13,14,34,24,23` order.
pub const EDGES: [(usize, usize); 6] = [(0, 1), (0, 2), (0, 3), (2, 3), (1, 3), (1, 2)];

/// Edge positions meeting at each vertex.
pub const VERTEX_STARS: [[usize; 3]; 4] = [[0, 1, 2], [0, 4, 5], [1, 3, 5], [2, 3, 4]];

const EDGE_INDEX: [[usize; 4]; 4] = [
    [usize::MAX, 0, 1, 2],
    [0, usize::MAX, 5, 4],
    [1, 5, usize::MAX, 3],
    [2, 4, 3, usize::MAX],
];

/// Human-readable edge labels in storage order.
pub const EDGE_LABELS: [&str; 6] = ["12", "13", "14", "34", "24", "23"];

/// Position of the edge joining vertices `i != j` (0-based).
pub fn edge_index(i: usize, j: usize) -> usize {
    let p = EDGE_INDEX[i][j];
    assert!(p != usize::MAX, "no edge joins a vertex to itself");
    p
}

/// Position of the edge sharing no vertex with edge `p`.
pub const fn opposite(p: usize) -> usize {
    (p + 3) % 6
}

/// The two vertices not on edge `p`, in increasing order.
pub fn complement(p: usize) -> (usize, usize) {
    let (i, j) = EDGES[p];
    let mut rest = (0..4).filter(|&v| v != i && v != j);
    (rest.next().unwrap(), rest.next().unwrap())
}

macro_rules! six_vector {
    ($name:ident) => {
        #[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
        #[serde(transparent)]
        pub struct $name(pub [f64; 6]);

        impl $name {
            pub fn new(values: [f64; 6]) -> Self {
                Self(values)
            }

            pub fn splat(value: f64) -> Self {
                Self([value; 6])
            }

            pub fn as_array(&self) -> &[f64; 6] {
                &self.0
            }

            pub fn iter(&self) -> std::slice::Iter<'_, f64> {
                self.0.iter()
            }

            pub fn is_finite(&self) -> bool {
                self.0.iter().all(|x| x.is_finite())
            }

            pub fn sum(&self) -> f64 {
                self.0.iter().sum()
            }

            pub fn min(&self) -> f64 {
                self.0.iter().copied().fold(f64::INFINITY, f64::min)
            }

            pub fn max(&self) -> f64 {
                self.0.iter().copied().fold(f64::NEG_INFINITY, f64::max)
            }

            /// Largest absolute componentwise difference.
            pub fn max_abs_diff(&self, other: &Self) -> f64 {
                self.0
                    .iter()
                    .zip(other.0.iter())
                    .map(|(a, b)| (a - b).abs())
                    .fold(0.0, f64::max)
            }

            /// `(1 - t) * self + t * other`.
            pub fn lerp(&self, other: &Self, t: f64) -> Self {
                Self(std::array::from_fn(|p| (1.0 - t) * self.0[p] + t * other.0[p]))
            }
        }

        impl Index<usize> for $name {
            type Output = f64;
            fn index(&self, p: usize) -> &f64 {
                &self.0[p]
            }
        }

        impl IndexMut<usize> for $name {
            fn index_mut(&mut self, p: usize) -> &mut f64 {
                &mut self.0[p]
            }
        }

        impl From<[f64; 6]> for $name {
            fn from(values: [f64; 6]) -> Self {
                Self(values)
            }
        }
    };
}

six_vector!(DihedralAngles);
six_vector!(EdgeLengths);

impl DihedralAngles {
    /// Sums of the three angles at each vertex.
    pub fn vertex_sums(&self) -> [f64; 4] {
        VERTEX_STARS.map(|star| star.iter().map(|&p| self.0[p]).sum())
    }

    /// Distance to the boundary of the angle polytope, measured as the smallest of
    /// the entries and the vertex-sum deficits `π − Σ`.
    pub fn interior_slack(&self) -> f64 {
        let deficit = self
            .vertex_sums()
            .iter()
            .map(|s| PI - s)
            .fold(f64::INFINITY, f64::min);
        self.min().min(deficit)
    }
}

/// Membership in the open polytope of admissible angles (`strict = true`) or
/// in its closure.
pub fn in_o(a: &DihedralAngles, strict: bool) -> bool {
    if !a.is_finite() {
        return false;
    }
    if strict {
        a.iter().all(|&x| x > 0.0) && a.vertex_sums().iter().all(|&s| s < PI)
    } else {
        a.iter().all(|&x| x >= 0.0) && a.vertex_sums().iter().all(|&s| s <= PI)
    }
}

/// Closure membership allowing `slack` of round-off on every inequality.
pub fn in_closure_with_slack(a: &DihedralAngles, slack: f64) -> bool {
    a.is_finite()
        && a.iter().all(|&x| x >= -slack)
        && a.vertex_sums().iter().all(|&s| s <= PI + slack)
}

/// Necessary conditions on the angles of any tetrahedron at least as large as
/// the regular one with all angles π/6: total angle at most π, every angle
/// acute, and any two angles sharing a vertex summing below 7π/12.
pub fn acute_constraints_hold(a: &DihedralAngles) -> bool {
    if a.sum() > PI || a.iter().any(|&x| x >= PI / 2.0) {
        return false;
    }
    VERTEX_STARS.iter().all(|star| {
        let [p, q, r] = *star;
        a[p] + a[q] < 7.0 * PI / 12.0 && a[q] + a[r] < 7.0 * PI / 12.0 && a[p] + a[r] < 7.0 * PI / 12.0
    })
}

/// A permutation of the four truncation triangles, stored 0-based.
///
/// Products read left to right: `(σ * τ)(i) = τ(σ(i))`, which makes
/// [`permute`] a group action: `permute(σ * τ, a) == permute(σ, permute(τ, a))`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct VertexPermutation([usize; 4]);

impl VertexPermutation {
    pub const IDENTITY: Self = Self([0, 1, 2, 3]);

    /// Builds a permutation from the images of vertices 0..4.
    pub fn new(images: [usize; 4]) -> Result<Self> {
        let mut seen = [false; 4];
        for &v in &images {
            if v >= 4 || seen[v] {
                return Err(Error::Precondition(format!(
                    "{images:?} is not a permutation of 0..4"
                )));
            }
            seen[v] = true;
        }
        Ok(Self(images))
    }

    /// Transposition of two vertices.
    pub fn swap(i: usize, j: usize) -> Self {
        let mut images = [0, 1, 2, 3];
        images.swap(i, j);
        Self(images)
    }

    pub fn apply(&self, v: usize) -> usize {
        self.0[v]
    }

    pub fn images(&self) -> [usize; 4] {
        self.0
    }

    pub fn inverse(&self) -> Self {
        let mut inv = [0; 4];
        for (i, &v) in self.0.iter().enumerate() {
            inv[v] = i;
        }
        Self(inv)
    }

    /// All 24 elements of S₄ in lexicographic order of their image tuples.
    pub fn all() -> Vec<Self> {
        let mut out = Vec::with_capacity(24);
        for a in 0..4 {
            for b in 0..4 {
                for c in 0..4 {
                    for d in 0..4 {
                        if let Ok(p) = Self::new([a, b, c, d]) {
                            out.push(p);
                        }
                    }
                }
            }
        }
        out
    }

    /// Where the edge at position `p` is sent: the position of `{σ(i), σ(j)}`.
    pub fn edge_image(&self, p: usize) -> usize {
        let (i, j) = EDGES[p];
        edge_index(self.0[i], self.0[j])
    }
}

impl Mul for VertexPermutation {
    type Output = Self;
    fn mul(self, rhs: Self) -> Self {
        Self(self.0.map(|v| rhs.0[v]))
    }
}

impl fmt::Display for VertexPermutation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let [a, b, c, d] = self.0.map(|v| v + 1);
        write!(f, "(1 2 3 4 -> {a} {b} {c} {d})")
    }
}

fn permute_six(sigma: &VertexPermutation, values: &[f64; 6]) -> [f64; 6] {
    std::array::from_fn(|p| values[sigma.edge_image(p)])
}

/// Relabels the vertices: the entry at edge `{i, j}` of the result is the
/// entry of `a` at edge `{σ(i), σ(j)}`.
pub fn permute(sigma: &VertexPermutation, a: &DihedralAngles) -> DihedralAngles {
    DihedralAngles(permute_six(sigma, &a.0))
}

/// The same relabeling applied to edge lengths.
pub fn permute_lengths(sigma: &VertexPermutation, l: &EdgeLengths) -> EdgeLengths {
    EdgeLengths(permute_six(sigma, &l.0))
}

/// A marked truncated tetrahedron with both parametrizations and its volume.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tetrahedron {
    pub angles: DihedralAngles,
    pub lengths: EdgeLengths,
    pub volume: f64,
}

impl Tetrahedron {
    /// Builds the tetrahedron with the given dihedral angles, which must lie in
    /// the open polytope.
    pub fn from_angles(angles: DihedralAngles) -> Result<Self> {
        if !angles.is_finite() {
            return Err(Error::InvalidArgument {
                what: "dihedral angles",
                value: angles.iter().copied().find(|x| !x.is_finite()).unwrap(),
            });
        }
        if !in_o(&angles, true) {
            return Err(Error::Precondition(format!(
                "angles {:?} are not in the open angle polytope",
                angles.0
            )));
        }
        let lengths = angles_to_lengths(&angles)?;
        let volume = ushijima_volume(&angles)?;
        Ok(Self {
            angles,
            lengths,
            volume,
        })
    }

    /// Builds the tetrahedron with the given edge lengths.
    pub fn from_lengths(lengths: EdgeLengths) -> Result<Self> {
        let angles = crate::convert::lengths_to_angles(&lengths)?;
        if !in_o(&angles, true) {
            return Err(Error::Precondition(format!(
                "lengths {:?} lie on the boundary of the length chart",
                lengths.0
            )));
        }
        let volume = ushijima_volume(&angles)?;
        Ok(Self {
            angles,
            lengths,
            volume,
        })
    }

    /// Relabels the vertices of the tetrahedron.
    pub fn permuted(&self, sigma: &VertexPermutation) -> Self {
        Self {
            angles: permute(sigma, &self.angles),
            lengths: permute_lengths(sigma, &self.lengths),
            volume: self.volume,
        }
    }

    /// True when every relabeling fixes the angles (within `tol`).
    pub fn is_regular(&self, tol: f64) -> bool {
        VertexPermutation::all()
            .iter()
            .all(|s| permute(s, &self.angles).max_abs_diff(&self.angles) <= tol)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("finite record serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Precondition(format!("bad record: {e}")))
    }
}

/// The regular truncated tetrahedron with all dihedral angles `theta`.
pub fn regular_from_angle(theta: f64) -> Result<Tetrahedron> {
    if !(theta > 0.0 && theta < PI / 3.0) {
        return Err(Error::Domain {
            what: "regular dihedral angle",
            value: theta,
        });
    }
    Tetrahedron::from_angles(DihedralAngles::splat(theta))
}

const REGULAR_BRACKET: (f64, f64) = (1e-9, PI / 3.0 - 1e-9);

fn regular_length(theta: f64) -> Result<f64> {
    Ok(angles_to_lengths(&DihedralAngles::splat(theta))?[0])
}

/// The regular truncated tetrahedron with all edge lengths `ell`, found by
/// bisection on the strictly increasing map from common angle to common length.
pub fn regular_from_length(ell: f64) -> Result<Tetrahedron> {
    if !(ell > 0.0 && ell.is_finite()) {
        return Err(Error::Domain {
            what: "regular edge length",
            value: ell,
        });
    }
    let (mut lo, mut hi) = REGULAR_BRACKET;
    let (l_lo, l_hi) = (regular_length(lo)?, regular_length(hi)?);
    if ell < l_lo || ell > l_hi {
        return Err(Error::Accuracy {
            what: "regular length inversion (target outside bracket)",
            estimate: if ell < l_lo { lo } else { hi },
            error: f64::INFINITY,
        });
    }
    for _ in 0..200 {
        if hi - lo <= 1e-12 {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if regular_length(mid)? < ell {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    if hi - lo > 1e-12 {
        return Err(Error::Accuracy {
            what: "regular length inversion",
            estimate: 0.5 * (lo + hi),
            error: hi - lo,
        });
    }
    regular_from_angle(0.5 * (lo + hi))
}

/// Default number of proposals a rejection sampler may draw.
pub const DEFAULT_REJECTION_BUDGET: u64 = 1_000_000;

/// What a sampled angle vector must satisfy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SampleConstraint {
    /// Any point of the open polytope.
    Interior,
    /// The acute region of [`acute_constraints_hold`].
    Acute,
    /// Acute and with volume at least the given floor.
    VolumeFloor(f64),
}

/// Uniform point of the open simplex `{x > 0, Σx < total}` in ℝ⁶.
pub fn uniform_simplex<R: Rng + ?Sized>(rng: &mut R, total: f64) -> DihedralAngles {
    let draws: [f64; 7] = std::array::from_fn(|_| rng.sample::<f64, _>(Exp1));
    let norm: f64 = draws.iter().sum();
    DihedralAngles(std::array::from_fn(|p| total * draws[p] / norm))
}

/// Uniform point of the slice `{x > 0, Σx = total}`.
pub fn uniform_simplex_slice<R: Rng + ?Sized>(rng: &mut R, total: f64) -> DihedralAngles {
    let draws: [f64; 6] = std::array::from_fn(|_| rng.sample::<f64, _>(Exp1));
    let norm: f64 = draws.iter().sum();
    DihedralAngles(draws.map(|x| total * x / norm))
}

/// Rejection sampler for the angle polytope with the default budget.
pub fn sample_o<R: Rng + ?Sized>(rng: &mut R, constraint: SampleConstraint) -> Result<DihedralAngles> {
    sample_o_with_budget(rng, constraint, DEFAULT_REJECTION_BUDGET)
}

/// Interior samples are drawn uniformly from the simplex `Σx < 2π`, which
/// contains the polytope. Acute and volume-floor samples are drawn uniformly
/// from `Σx ≤ π`, where the acute region lives.
pub fn sample_o_with_budget<R: Rng + ?Sized>(
    rng: &mut R,
    constraint: SampleConstraint,
    budget: u64,
) -> Result<DihedralAngles> {
    for _ in 0..budget {
        let candidate = match constraint {
            SampleConstraint::Interior => uniform_simplex(rng, 2.0 * PI),
            SampleConstraint::Acute | SampleConstraint::VolumeFloor(_) => uniform_simplex(rng, PI),
        };
        if !in_o(&candidate, true) {
            continue;
        }
        let accepted = match constraint {
            SampleConstraint::Interior => true,
            SampleConstraint::Acute => acute_constraints_hold(&candidate),
            SampleConstraint::VolumeFloor(floor) => {
                acute_constraints_hold(&candidate)
                    && ushijima_volume(&candidate).is_ok_and(|v| v >= floor)
            }
        };
        if accepted {
            return Ok(candidate);
        }
    }
    Err(Error::Sampling { draws: budget })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::FRAC_PI_2;

    #[test]
    fn edge_table_is_consistent() {
        for p in 0..6 {
            let (i, j) = EDGES[p];
            assert_eq!(edge_index(i, j), p);
            assert_eq!(edge_index(j, i), p);
            let (k, l) = complement(p);
            assert_eq!(edge_index(k, l), opposite(p));
        }
        for (v, star) in VERTEX_STARS.iter().enumerate() {
            for &p in star {
                let (i, j) = EDGES[p];
                assert!(i == v || j == v);
            }
        }
    }

    #[test]
    fn polytope_membership_examples() {
        assert!(in_o(&DihedralAngles::splat(PI / 6.0), true));
        let bad = DihedralAngles([FRAC_PI_2, FRAC_PI_2, FRAC_PI_2, 0.1, 0.1, 0.1]);
        assert!(!in_o(&bad, true) && !in_o(&bad, false));
        let flat = DihedralAngles([0.0, 0.0, PI, 0.0, 0.0, PI]);
        assert!(in_o(&flat, false));
        assert!(!in_o(&flat, true));
        assert!(!in_o(&DihedralAngles([f64::NAN, 0.1, 0.1, 0.1, 0.1, 0.1]), false));
    }

    #[test]
    fn acute_examples() {
        assert!(acute_constraints_hold(&DihedralAngles::splat(PI / 6.0)));
        let obtuse = DihedralAngles([FRAC_PI_2 + 0.01, 0.1, 0.1, 0.1, 0.1, 0.1]);
        assert!(!acute_constraints_hold(&obtuse));
        // two angles at vertex 1 summing past 7π/12
        let wide = DihedralAngles([0.9, 0.95, 0.05, 0.05, 0.05, 0.05]);
        assert!(!acute_constraints_hold(&wide));
    }

    #[test]
    fn transposition_relabels_edges() {
        let a = DihedralAngles([1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
        assert_eq!(permute(&VertexPermutation::IDENTITY, &a), a);
        let swapped = permute(&VertexPermutation::swap(0, 1), &a);
        assert_eq!(swapped, DihedralAngles([1.0, 6.0, 5.0, 4.0, 3.0, 2.0]));
    }

    #[test]
    fn symmetric_group_has_24_elements_and_inverses() {
        let all = VertexPermutation::all();
        assert_eq!(all.len(), 24);
        for s in &all {
            assert_eq!(*s * s.inverse(), VertexPermutation::IDENTITY);
        }
        assert!(VertexPermutation::new([0, 0, 1, 2]).is_err());
        assert!(VertexPermutation::new([0, 1, 2, 4]).is_err());
    }

    #[test]
    fn regular_from_angle_edges() {
        let l0 = ((3.0 + 3f64.sqrt()) / 4.0).acosh();
        let t = regular_from_angle(PI / 6.0).unwrap();
        assert!(t.lengths.iter().all(|&l| (l - l0).abs() < 1e-12));
        let tiny = regular_from_angle(1e-6).unwrap();
        assert!(tiny.lengths.iter().all(|l| l.is_finite()));
        let near_flat = regular_from_angle(PI / 3.0 - 1e-6).unwrap();
        assert!(near_flat.lengths.min() > 10.0);
        assert!(regular_from_angle(PI / 3.0).is_err());
        assert!(regular_from_angle(0.0).is_err());
    }

    #[test]
    fn regular_from_length_inverts() {
        let l0 = ((3.0 + 3f64.sqrt()) / 4.0).acosh();
        let t = regular_from_length(l0).unwrap();
        assert!(t.angles.iter().all(|&x| (x - PI / 6.0).abs() < 1e-10));
        for theta in [0.1, 0.5, 1.0] {
            let ell = regular_from_angle(theta).unwrap().lengths[0];
            let back = regular_from_length(ell).unwrap();
            assert!((back.angles[0] - theta).abs() < 1e-10);
        }
        // θ ↦ ℓ is increasing and ℓ(π/6) = ℓ₀ ≈ 0.596, so ℓ = 0.3 has a smaller angle.
        let t = regular_from_length(0.3).unwrap();
        assert!(t.is_regular(1e-15));
        assert!(t.angles[0] > 0.0 && t.angles[0] < PI / 6.0);
        assert!(regular_from_length(-1.0).is_err());
    }

    #[test]
    fn samplers_meet_their_constraints() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..50 {
            assert!(in_o(&sample_o(&mut rng, SampleConstraint::Interior).unwrap(), true));
            assert!(acute_constraints_hold(&sample_o(&mut rng, SampleConstraint::Acute).unwrap()));
        }
        let floor = 3.226;
        for _ in 0..20 {
            let a = sample_o(&mut rng, SampleConstraint::VolumeFloor(floor)).unwrap();
            assert!(ushijima_volume(&a).unwrap() >= floor);
            assert!(acute_constraints_hold(&a));
        }
        assert!(matches!(
            sample_o_with_budget(&mut rng, SampleConstraint::VolumeFloor(10.0), 100),
            Err(Error::Sampling { draws: 100 })
        ));
    }

    #[test]
    fn sampler_is_deterministic_given_seed() {
        let draw = |seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            sample_o(&mut rng, SampleConstraint::Acute).unwrap()
        };
        assert_eq!(draw(5), draw(5));
        assert_ne!(draw(5), draw(6));
    }

    #[test]
    fn json_record_round_trips() {
        let t = regular_from_angle(0.4).unwrap();
        let text = t.to_json();
        assert!(text.starts_with("{\"angles\":["));
        assert_eq!(Tetrahedron::from_json(&text).unwrap(), t);
    }
}
