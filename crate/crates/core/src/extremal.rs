//! Volume maximization at desk scale: the flow that shrinks longest edges,
//! sampling campaigns for the volume and area bounds, the regular family,
//! degeneration toward the flat boundary, and probes of the open conjectures.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::convert::angles_to_lengths;
use crate::domain::{
    in_o, permute, regular_from_angle, regular_from_length, uniform_simplex, uniform_simplex_slice,
    DihedralAngles, EdgeLengths, Tetrahedron, VertexPermutation, DEFAULT_REJECTION_BUDGET,
    EDGE_LABELS,
};
use crate::error::{Error, Result};
use crate::volume::ushijima_volume;

/// Two edge lengths closer than this count as tied.
pub const TIE_TOL: f64 = 1e-9;

/// Default acceptance tolerance for campaign margins.
pub const DEFAULT_TOL: f64 = 1e-9;

/// Default flow step in length space.
pub const DEFAULT_DT: f64 = 1e-3;

/// Margins of conjecture probes closer to zero than this are never reported
/// as counterexamples.
pub const INDETERMINATE_BAND: f64 = 1e-6;

/// Largest number of steps a single flow may take.
pub const FLOW_STEP_BUDGET: usize = 1_000_000;

/// Number of near-extremal witnesses kept by a report.
pub const WITNESS_COUNT: usize = 16;

/// Samples handled by one seed stream of a campaign.
pub const CHUNK_SIZE: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    /// A segment ended because the shrinking edges reached the next length.
    Merged,
    /// All six lengths agree.
    Regular,
    /// A step left the length chart.
    Boundary,
    /// The step budget ran out.
    Budget,
}

impl std::fmt::Display for Termination {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Termination::Merged => "merged",
            Termination::Regular => "regular",
            Termination::Boundary => "boundary",
            Termination::Budget => "budget",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryPoint {
    pub t: f64,
    pub tetrahedron: Tetrahedron,
    /// Number of edges tied for the maximal length.
    pub multiplicity: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub ell_floor: f64,
    pub dt: f64,
    pub termination: Termination,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub diagnostic: Option<String>,
    pub points: Vec<TrajectoryPoint>,
}

impl Trajectory {
    pub fn first(&self) -> &TrajectoryPoint {
        &self.points[0]
    }

    pub fn last(&self) -> &TrajectoryPoint {
        self.points.last().expect("trajectories are never empty")
    }

    pub fn volumes(&self) -> impl Iterator<Item = f64> + '_ {
        self.points.iter().map(|p| p.tetrahedron.volume)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("t");
        for label in EDGE_LABELS {
            out.push_str(",l");
            out.push_str(label);
        }
        out.push_str(",volume\n");
        for p in &self.points {
            write!(out, "{}", p.t).unwrap();
            for l in p.tetrahedron.lengths.iter() {
                write!(out, ",{l}").unwrap();
            }
            writeln!(out, ",{}", p.tetrahedron.volume).unwrap();
        }
        out
    }
}

fn maximal_edges(l: &EdgeLengths) -> (f64, Vec<usize>) {
    let max = l.max();
    (max, (0..6).filter(|&p| max - l[p] <= TIE_TOL).collect())
}

/// Number of edges whose length is within [`TIE_TOL`] of the maximum.
pub fn maximal_multiplicity(l: &EdgeLengths) -> usize {
    maximal_edges(l).1.len()
}

fn check_flow_input(t0: &Tetrahedron, ell_floor: f64, dt: f64) -> Result<()> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::InvalidArgument { what: "flow step", value: dt });
    }
    if !ell_floor.is_finite() {
        return Err(Error::InvalidArgument { what: "length floor", value: ell_floor });
    }
    if t0.lengths.min() < ell_floor - TIE_TOL {
        return Err(Error::Precondition(format!(
            "shortest edge {} is below the floor {ell_floor}",
            t0.lengths.min()
        )));
    }
    Ok(())
}

fn run_flow(t0: &Tetrahedron, ell_floor: f64, dt: f64, stop_at_merge: bool) -> Result<Trajectory> {
    check_flow_input(t0, ell_floor, dt)?;
    let mut points = vec![TrajectoryPoint {
        t: 0.0,
        tetrahedron: *t0,
        multiplicity: maximal_multiplicity(&t0.lengths),
    }];
    let mut current = *t0;
    let mut t = 0.0;
    let finish = |points, termination, diagnostic| Trajectory {
        ell_floor,
        dt,
        termination,
        diagnostic,
        points,
    };
    for _ in 0..FLOW_STEP_BUDGET {
        let (max, tied) = maximal_edges(&current.lengths);
        if tied.len() == 6 {
            return Ok(finish(points, Termination::Regular, None));
        }
        let second = (0..6)
            .filter(|p| !tied.contains(p))
            .map(|p| current.lengths[p])
            .fold(f64::NEG_INFINITY, f64::max);
        let gap = max - second;
        let merged = gap <= dt;
        let target = if merged { second } else { max - dt };
        let mut lengths = current.lengths;
        for &p in &tied {
            lengths[p] = target;
        }
        let next = match Tetrahedron::from_lengths(lengths) {
            Ok(next) => next,
            Err(e) => {
                let diagnostic = format!("step from t = {t} to lengths {:?} failed: {e}", lengths.0);
                return Ok(finish(points, Termination::Boundary, Some(diagnostic)));
            }
        };
        t += gap.min(dt);
        current = next;
        points.push(TrajectoryPoint {
            t,
            tetrahedron: next,
            multiplicity: maximal_multiplicity(&next.lengths),
        });
        if merged && stop_at_merge {
            let termination = if maximal_multiplicity(&next.lengths) == 6 {
                Termination::Regular
            } else {
                Termination::Merged
            };
            return Ok(finish(points, termination, None));
        }
    }
    Ok(finish(points, Termination::Budget, None))
}

/// Shrinks the longest edges of `t0` in lockstep, absorbing each edge they
/// reach, until all six lengths agree.
///
/// Every step moves the current set of maximal edges by `dt`, or by less when
/// that is enough to reach the next length. Leaving the length chart stops the
/// flow with [`Termination::Boundary`] and a diagnostic.
pub fn deformation_flow(t0: &Tetrahedron, ell_floor: f64, dt: f64) -> Result<Trajectory> {
    run_flow(t0, ell_floor, dt, false)
}

/// One segment of [`deformation_flow`]: stops as soon as the maximal edges
/// reach the next length.
pub fn flow_segment(t0: &Tetrahedron, ell_floor: f64, dt: f64) -> Result<Trajectory> {
    run_flow(t0, ell_floor, dt, true)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub tetrahedron: Tetrahedron,
    pub margin: f64,
}

/// Outcome of a sampling campaign. `passed + failed == samples`;
/// `indeterminate` counts passing samples whose margin is within
/// [`INDETERMINATE_BAND`] of zero (conjecture campaigns only).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub campaign: String,
    pub seed: u64,
    pub parameters: BTreeMap<String, f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub regime: Option<String>,
    pub samples: u64,
    pub passed: u64,
    pub failed: u64,
    pub indeterminate: u64,
    /// Proposals drawn by the rejection sampler.
    pub proposals: u64,
    pub worst_margin: Option<f64>,
    /// Samples with the smallest margins, smallest first.
    pub witnesses: Vec<Witness>,
}

impl VerificationReport {
    fn empty(campaign: &str, seed: u64) -> Self {
        Self {
            campaign: campaign.to_owned(),
            seed,
            parameters: BTreeMap::new(),
            regime: None,
            samples: 0,
            passed: 0,
            failed: 0,
            indeterminate: 0,
            proposals: 0,
            worst_margin: None,
            witnesses: Vec::new(),
        }
    }

    pub fn with_parameter(mut self, name: &str, value: f64) -> Self {
        self.parameters.insert(name.to_owned(), value);
        self
    }

    pub fn all_passed(&self) -> bool {
        self.failed == 0
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    fn absorb(&mut self, other: Tally) {
        self.samples += other.samples;
        self.passed += other.passed;
        self.failed += other.failed;
        self.indeterminate += other.indeterminate;
        self.proposals += other.proposals;
        self.worst_margin = match (self.worst_margin, other.worst_margin) {
            (Some(a), Some(b)) => Some(a.min(b)),
            (a, b) => a.or(b),
        };
        self.witnesses.extend(other.witnesses);
        self.witnesses.sort_by(|a, b| a.margin.total_cmp(&b.margin));
        self.witnesses.truncate(WITNESS_COUNT);
    }
}

#[derive(Default)]
struct Tally {
    samples: u64,
    passed: u64,
    failed: u64,
    indeterminate: u64,
    proposals: u64,
    worst_margin: Option<f64>,
    witnesses: Vec<Witness>,
}

/// How margins are judged.
#[derive(Clone, Copy)]
struct Judge {
    fail_below: f64,
    band: Option<f64>,
}

/// Draws `n` samples in chunks of [`CHUNK_SIZE`]; chunk `c` uses stream `c` of
/// the ChaCha generator keyed by `seed`, so the result does not depend on how
/// chunks are scheduled.
fn run_campaign<D, M>(
    campaign: &str,
    n: u64,
    seed: u64,
    judge: Judge,
    draw: D,
    margin: M,
) -> Result<VerificationReport>
where
    D: Fn(&mut ChaCha8Rng) -> Result<(Tetrahedron, u64)> + Sync,
    M: Fn(&Tetrahedron) -> Result<f64> + Sync,
{
    let chunks = n.div_ceil(CHUNK_SIZE as u64);
    let tallies: Vec<Result<Tally>> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(c);
            let size = (n - c * CHUNK_SIZE as u64).min(CHUNK_SIZE as u64);
            let mut tally = Tally::default();
            for _ in 0..size {
                let (t, draws) = draw(&mut rng)?;
                let m = margin(&t)?;
                tally.samples += 1;
                tally.proposals += draws;
                if m < judge.fail_below {
                    tally.failed += 1;
                } else {
                    tally.passed += 1;
                    if judge.band.is_some_and(|b| m.abs() < b) {
                        tally.indeterminate += 1;
                    }
                }
                tally.worst_margin = Some(tally.worst_margin.map_or(m, |w| w.min(m)));
                tally.witnesses.push(Witness { tetrahedron: t, margin: m });
                if tally.witnesses.len() > 4 * WITNESS_COUNT {
                    tally.witnesses.sort_by(|a, b| a.margin.total_cmp(&b.margin));
                    tally.witnesses.truncate(WITNESS_COUNT);
                }
            }
            tally.witnesses.sort_by(|a, b| a.margin.total_cmp(&b.margin));
            tally.witnesses.truncate(WITNESS_COUNT);
            Ok(tally)
        })
        .collect();
    let mut report = VerificationReport::empty(campaign, seed).with_parameter("samples", n as f64);
    for tally in tallies {
        report.absorb(tally?);
    }
    Ok(report)
}

/// Rejection sampler for tetrahedra with every edge at least `ell`: angles are
/// drawn uniformly from the simplex `Σθ < 2π` and kept when they lie in the
/// open polytope and their lengths clear the floor.
pub fn sample_with_length_floor<R: Rng + ?Sized>(
    rng: &mut R,
    ell: f64,
    budget: u64,
) -> Result<(Tetrahedron, u64)> {
    for draws in 1..=budget {
        let angles = uniform_simplex(rng, 2.0 * PI);
        if !in_o(&angles, true) {
            continue;
        }
        let lengths = angles_to_lengths(&angles)?;
        if lengths.min() < ell {
            continue;
        }
        let volume = ushijima_volume(&angles)?;
        return Ok((Tetrahedron { angles, lengths, volume }, draws));
    }
    Err(Error::Sampling { draws: budget })
}

fn check_floor(ell: f64) -> Result<()> {
    if ell > 0.0 && ell.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidArgument { what: "length floor", value: ell })
    }
}

fn regime(ell: f64) -> String {
    if ell <= crate::ell_0() { "theorem" } else { "conjecture" }.to_owned()
}

/// Samples `n` tetrahedra with all edges at least `ell` and checks
/// `vol ≤ vol(Δ_ℓ) + 1e-9`, where `Δ_ℓ` is regular with edge length `ell`.
pub fn verify_theorem(ell: f64, n: u64, seed: u64) -> Result<VerificationReport> {
    verify_theorem_with_tol(ell, n, seed, DEFAULT_TOL)
}

/// [`verify_theorem`] with the margin `vol(Δ_ℓ) − vol` accepted down to `−tol`.
pub fn verify_theorem_with_tol(ell: f64, n: u64, seed: u64, tol: f64) -> Result<VerificationReport> {
    check_floor(ell)?;
    let bound = regular_from_length(ell)?.volume;
    let judge = Judge { fail_below: -tol, band: None };
    let mut report = run_campaign(
        "theorem",
        n,
        seed,
        judge,
        |rng| sample_with_length_floor(rng, ell, DEFAULT_REJECTION_BUDGET),
        |t| Ok(bound - t.volume),
    )?;
    report.regime = Some(regime(ell));
    Ok(report.with_parameter("ell", ell).with_parameter("tol", tol).with_parameter("bound", bound))
}

/// Samples `n` tetrahedra with all edges at least `ell` and checks that their
/// angle sum is at least that of `Δ_ℓ` (equivalently, that the total area of
/// the truncation triangles is at most that of `Δ_ℓ`).
pub fn verify_area_bound(ell: f64, n: u64, seed: u64, tol: f64) -> Result<VerificationReport> {
    check_floor(ell)?;
    let bound = regular_from_length(ell)?.angles.sum();
    let judge = Judge { fail_below: -tol, band: None };
    let mut report = run_campaign(
        "area",
        n,
        seed,
        judge,
        |rng| sample_with_length_floor(rng, ell, DEFAULT_REJECTION_BUDGET),
        |t| Ok(t.angles.sum() - bound),
    )?;
    report.regime = Some(regime(ell));
    Ok(report.with_parameter("ell", ell).with_parameter("tol", tol).with_parameter("bound", bound))
}

/// Samples `n` points of the polytope with angle sum `theta_sum` and checks
/// that none has larger volume than the regular tetrahedron with the same sum.
pub fn verify_fixed_angle_sum(theta_sum: f64, n: u64, seed: u64) -> Result<VerificationReport> {
    verify_fixed_angle_sum_with_tol(theta_sum, n, seed, DEFAULT_TOL)
}

pub fn verify_fixed_angle_sum_with_tol(
    theta_sum: f64,
    n: u64,
    seed: u64,
    tol: f64,
) -> Result<VerificationReport> {
    if !(theta_sum > 0.0 && theta_sum.is_finite()) {
        return Err(Error::InvalidArgument { what: "angle sum", value: theta_sum });
    }
    if theta_sum / 6.0 >= PI / 3.0 {
        return Err(Error::Domain { what: "regular angle for the given sum", value: theta_sum / 6.0 });
    }
    let bound = regular_from_angle(theta_sum / 6.0)?.volume;
    let judge = Judge { fail_below: -tol, band: None };
    let draw = |rng: &mut ChaCha8Rng| {
        for draws in 1..=DEFAULT_REJECTION_BUDGET {
            let angles = uniform_simplex_slice(rng, theta_sum);
            if in_o(&angles, true) {
                return Ok((Tetrahedron::from_angles(angles)?, draws));
            }
        }
        Err(Error::Sampling { draws: DEFAULT_REJECTION_BUDGET })
    };
    let report = run_campaign("angle_sum", n, seed, judge, draw, |t| Ok(bound - t.volume))?;
    Ok(report
        .with_parameter("theta_sum", theta_sum)
        .with_parameter("tol", tol)
        .with_parameter("bound", bound))
}

/// Volumes of the regular tetrahedra with the given edge lengths.
pub fn regular_volume_scan(ell_grid: &[f64]) -> Result<Vec<(f64, f64)>> {
    ell_grid
        .iter()
        .map(|&ell| Ok((ell, regular_from_length(ell)?.volume)))
        .collect()
}

/// Evenly spaced grid of `count` points on `[lo, hi]`.
pub fn linear_grid(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    match count {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..count)
            .map(|k| lo + (hi - lo) * k as f64 / (count - 1) as f64)
            .collect(),
    }
}

/// Largest `ε` on the degeneration path.
pub const DEGENERATION_START: f64 = 0.1;

/// Walks `(ε, ε, π − 3ε, ε, ε, π − 3ε)` with `ε` decreasing linearly from
/// [`DEGENERATION_START`] to zero, ending at the flat configuration
/// `(0, 0, π, 0, 0, π)` whose volume is zero.
pub fn degeneration_path(steps: usize) -> Result<Vec<(DihedralAngles, f64)>> {
    if steps < 2 {
        return Err(Error::InvalidArgument { what: "degeneration steps", value: steps as f64 });
    }
    (0..steps)
        .map(|k| {
            let eps = DEGENERATION_START * (1.0 - k as f64 / (steps - 1) as f64);
            let delta = 3.0 * eps;
            let angles = DihedralAngles([eps, eps, PI - delta, eps, eps, PI - delta]);
            Ok((angles, ushijima_volume(&angles)?))
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PrimaOutcome {
    pub holds: bool,
    /// Edge length of the regular tetrahedron with the mean angle, minus `ell`.
    pub margin: f64,
    /// `|margin|` is below [`INDETERMINATE_BAND`].
    pub indeterminate: bool,
}

fn check_in_floor(t: &Tetrahedron, ell: f64) -> Result<()> {
    if !ell.is_finite() {
        return Err(Error::InvalidArgument { what: "length floor", value: ell });
    }
    if t.lengths.min() < ell - TIE_TOL {
        return Err(Error::Precondition(format!(
            "shortest edge {} is below the floor {ell}",
            t.lengths.min()
        )));
    }
    Ok(())
}

/// Tests whether averaging the dihedral angles of `t` keeps every edge at
/// least `ell` long.
pub fn conjecture_prima_test(t: &Tetrahedron, ell: f64) -> Result<PrimaOutcome> {
    check_in_floor(t, ell)?;
    let mean = t.angles.sum() / 6.0;
    if mean >= PI / 3.0 {
        return Err(Error::Domain { what: "mean dihedral angle", value: mean });
    }
    let margin = regular_from_angle(mean)?.lengths[0] - ell;
    Ok(PrimaOutcome {
        holds: margin >= -DEFAULT_TOL,
        margin,
        indeterminate: margin.abs() < INDETERMINATE_BAND,
    })
}

/// Runs [`conjecture_prima_test`] on `n` sampled tetrahedra with `ell` set to
/// each one's shortest edge. Only margins below `−INDETERMINATE_BAND` count as
/// failures.
pub fn explore_conjecture_prima(n: u64, seed: u64) -> Result<VerificationReport> {
    let judge = Judge { fail_below: -INDETERMINATE_BAND, band: Some(INDETERMINATE_BAND) };
    let report = run_campaign(
        "conjecture_prima",
        n,
        seed,
        judge,
        |rng| sample_with_length_floor(rng, 0.0, DEFAULT_REJECTION_BUDGET),
        |t| Ok(conjecture_prima_test(t, t.lengths.min())?.margin),
    )?;
    Ok(report.with_parameter("band", INDETERMINATE_BAND))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prima2Outcome {
    pub nonempty: bool,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub witness: Option<Tetrahedron>,
    pub probes_used: u64,
}

/// The angle vectors of all 24 relabelings of `t`.
pub fn orbit(t: &Tetrahedron) -> Vec<DihedralAngles> {
    VertexPermutation::all().iter().map(|s| permute(s, &t.angles)).collect()
}

fn convex_combination(points: &[DihedralAngles], weights: &[f64]) -> DihedralAngles {
    let total: f64 = weights.iter().sum();
    DihedralAngles(std::array::from_fn(|p| {
        points.iter().zip(weights).map(|(a, w)| a[p] * w).sum::<f64>() / total
    }))
}

/// Searches the convex hull of the orbit of `t` (without its vertices) for a
/// tetrahedron with every edge at least `ell`. The barycenter is tried first,
/// then random combinations: odd probes mix two orbit points, even probes use
/// Dirichlet weights on all of them. `nonempty = false` only means the budget
/// ran out.
pub fn conjecture_prima2_test(t: &Tetrahedron, ell: f64, probes: u64, seed: u64) -> Result<Prima2Outcome> {
    check_in_floor(t, ell)?;
    if t.is_regular(TIE_TOL) {
        return Err(Error::Precondition("the tetrahedron is regular".to_owned()));
    }
    let vertices = orbit(t);
    let is_vertex = |a: &DihedralAngles| vertices.iter().any(|v| v.max_abs_diff(a) <= 1e-12);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for k in 0..probes {
        let candidate = if k == 0 {
            DihedralAngles::splat(t.angles.sum() / 6.0)
        } else if k % 2 == 1 {
            let i = rng.random_range(0..vertices.len());
            let j = rng.random_range(0..vertices.len());
            let s: f64 = rng.random_range(0.0..1.0);
            vertices[i].lerp(&vertices[j], s)
        } else {
            let weights: Vec<f64> = (0..vertices.len()).map(|_| rng.sample(Exp1)).collect();
            convex_combination(&vertices, &weights)
        };
        if is_vertex(&candidate) || !in_o(&candidate, true) {
            continue;
        }
        let lengths = angles_to_lengths(&candidate)?;
        if lengths.min() >= ell - TIE_TOL {
            return Ok(Prima2Outcome {
                nonempty: true,
                witness: Some(Tetrahedron::from_angles(candidate)?),
                probes_used: k + 1,
            });
        }
    }
    Ok(Prima2Outcome { nonempty: false, witness: None, probes_used: probes })
}
