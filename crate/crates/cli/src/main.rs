use std::fmt::Write as _;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use hyperideal::extremal::{
    self, conjecture_prima2_test, conjecture_prima_test, deformation_flow, degeneration_path,
    explore_conjecture_prima, linear_grid, regular_volume_scan, verify_area_bound,
    verify_fixed_angle_sum_with_tol, verify_theorem_with_tol, VerificationReport,
};
use hyperideal::schlafli::{dvol_dangles, dvol_dlengths};
use hyperideal::{DihedralAngles, EdgeLengths, Error, Tetrahedron};
use serde_json::json;

const DEFAULT_TOL: f64 = extremal::DEFAULT_TOL;
const DEFAULT_DT: f64 = extremal::DEFAULT_DT;
const DEFAULT_SAMPLES: u64 = 10_000;
const DEFAULT_SEED: u64 = 0;

#[derive(Parser)]
#[command(name = "hyperideal", version, about = "Truncated hyperbolic tetrahedra: conversion, volume, gradients and volume-bound checks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Convert between dihedral angles and edge lengths.
    Convert(InputArgs),
    /// Volume of a tetrahedron.
    Volume(InputArgs),
    /// Volume gradient in both charts.
    Grad(InputArgs),
    /// Sampling campaigns.
    #[command(subcommand)]
    Verify(Verify),
    /// Shrink the longest edges until the tetrahedron is regular.
    Flow(FlowArgs),
    /// Probes of the averaging conjectures.
    #[command(subcommand)]
    Conjecture(Conjecture),
    /// Volumes along a path to the flat configuration (0,0,π,0,0,π).
    Degenerate(DegenerateArgs),
    /// Volumes of regular tetrahedra over a grid of edge lengths.
    Scan(ScanArgs),
}

#[derive(Subcommand)]
enum Verify {
    /// Every tetrahedron with edges ≥ ell has volume ≤ that of the regular one with edge ell.
    Theorem(CampaignArgs),
    /// Angle sum of tetrahedra with edges ≥ ell is at least that of the regular one.
    Area(CampaignArgs),
    /// Among angle vectors with a fixed sum, the regular one has the largest volume.
    AngleSum(AngleSumArgs),
}

#[derive(Subcommand)]
enum Conjecture {
    /// Averaging the angles keeps every edge ≥ ell. Without an input, runs a campaign.
    Prima(PrimaArgs),
    /// The convex hull of the relabelings meets the region with edges ≥ ell.
    Prima2(Prima2Args),
}

#[derive(Args)]
struct Input {
    /// Six dihedral angles in edge order 12,13,14,34,24,23.
    #[arg(long, value_name = "a,b,c,d,e,f", allow_hyphen_values = true, conflicts_with = "lengths")]
    angles: Option<String>,
    /// Six edge lengths in edge order 12,13,14,34,24,23.
    #[arg(long, value_name = "a,b,c,d,e,f", allow_hyphen_values = true)]
    lengths: Option<String>,
    /// Read --angles in degrees.
    #[arg(long, requires = "angles")]
    degrees: bool,
}

#[derive(Args)]
struct Output {
    /// Emit JSON.
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct TableOutput {
    /// Emit JSON.
    #[arg(long, conflicts_with = "csv")]
    json: bool,
    /// Emit CSV.
    #[arg(long)]
    csv: bool,
}

#[derive(Args)]
struct InputArgs {
    #[command(flatten)]
    input: Input,
    #[command(flatten)]
    out: Output,
}

#[derive(Args)]
struct Sampling {
    #[arg(long, default_value_t = DEFAULT_SAMPLES)]
    samples: u64,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    /// Margin tolerance.
    #[arg(long, default_value_t = DEFAULT_TOL, allow_hyphen_values = true)]
    tol: f64,
}

#[derive(Args)]
struct CampaignArgs {
    /// Lower bound on edge lengths.
    #[arg(long, allow_hyphen_values = true)]
    ell: f64,
    #[command(flatten)]
    sampling: Sampling,
    #[command(flatten)]
    out: Output,
}

#[derive(Args)]
struct AngleSumArgs {
    /// Total of the six dihedral angles.
    #[arg(long, allow_hyphen_values = true)]
    sum: f64,
    /// Read --sum in degrees.
    #[arg(long)]
    degrees: bool,
    #[command(flatten)]
    sampling: Sampling,
    #[command(flatten)]
    out: Output,
}

#[derive(Args)]
struct FlowArgs {
    #[command(flatten)]
    input: Input,
    /// Lower bound on edge lengths (defaults to the shortest edge).
    #[arg(long, allow_hyphen_values = true)]
    ell: Option<f64>,
    #[arg(long, default_value_t = DEFAULT_DT, allow_hyphen_values = true)]
    dt: f64,
    #[arg(long, default_value_t = DEFAULT_TOL, allow_hyphen_values = true)]
    tol: f64,
    #[command(flatten)]
    out: TableOutput,
}

#[derive(Args)]
struct PrimaArgs {
    #[command(flatten)]
    input: Input,
    /// Lower bound on edge lengths (defaults to the shortest edge).
    #[arg(long, allow_hyphen_values = true)]
    ell: Option<f64>,
    #[command(flatten)]
    sampling: Sampling,
    #[command(flatten)]
    out: Output,
}

#[derive(Args)]
struct Prima2Args {
    #[command(flatten)]
    input: Input,
    /// Lower bound on edge lengths (defaults to the shortest edge).
    #[arg(long, allow_hyphen_values = true)]
    ell: Option<f64>,
    /// Probe budget.
    #[arg(long, default_value_t = DEFAULT_SAMPLES)]
    samples: u64,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    #[command(flatten)]
    out: Output,
}

#[derive(Args)]
struct DegenerateArgs {
    /// Number of points on the path, endpoint included.
    #[arg(long, default_value_t = 11)]
    steps: usize,
    #[command(flatten)]
    out: TableOutput,
}

#[derive(Args)]
struct ScanArgs {
    #[arg(long, default_value_t = 0.05, allow_hyphen_values = true)]
    from: f64,
    #[arg(long, default_value_t = 3.0, allow_hyphen_values = true)]
    to: f64,
    #[arg(long, default_value_t = 100)]
    points: usize,
    #[command(flatten)]
    out: TableOutput,
}

enum Failure {
    Usage(String),
    Numerical(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Accuracy { .. }
            | Error::Evaluation { .. }
            | Error::NearDegenerate { .. }
            | Error::Sampling { .. } => Failure::Numerical(e.to_string()),
            _ => Failure::Usage(e.to_string()),
        }
    }
}

type CliResult = Result<(String, ExitCode), Failure>;

fn parse_vector(text: &str, what: &str) -> Result<[f64; 6], Failure> {
    let values: Vec<f64> = text
        .split(',')
        .map(|s| s.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|e| Failure::Usage(format!("malformed --{what}: {e}")))?;
    let values: [f64; 6] = values
        .try_into()
        .map_err(|v: Vec<f64>| Failure::Usage(format!("--{what} needs 6 values, got {}", v.len())))?;
    if values.iter().any(|x| !x.is_finite()) {
        return Err(Failure::Usage(format!("--{what} must be finite")));
    }
    Ok(values)
}

fn tetrahedron(input: &Input) -> Result<Tetrahedron, Failure> {
    match (&input.angles, &input.lengths) {
        (Some(a), None) => {
            let mut values = parse_vector(a, "angles")?;
            if input.degrees {
                values = values.map(f64::to_radians);
            }
            Ok(Tetrahedron::from_angles(DihedralAngles(values))?)
        }
        (None, Some(l)) => Ok(Tetrahedron::from_lengths(EdgeLengths(parse_vector(l, "lengths")?))?),
        _ => Err(Failure::Usage("exactly one of --angles or --lengths is required".into())),
    }
}

fn optional_tetrahedron(input: &Input) -> Result<Option<Tetrahedron>, Failure> {
    if input.angles.is_none() && input.lengths.is_none() {
        Ok(None)
    } else {
        tetrahedron(input).map(Some)
    }
}

fn ok(text: String) -> CliResult {
    Ok((text, ExitCode::SUCCESS))
}

fn check_positive(what: &str, value: f64) -> Result<(), Failure> {
    if value > 0.0 && value.is_finite() {
        Ok(())
    } else {
        Err(Failure::Usage(format!("--{what} must be positive, got {value}")))
    }
}

fn join(values: &[f64]) -> String {
    values.iter().map(f64::to_string).collect::<Vec<_>>().join(",")
}

fn pretty(value: &impl serde::Serialize) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable output");
    s.push('\n');
    s
}

fn record_text(t: &Tetrahedron) -> String {
    format!(
        "angles  {}\nlengths {}\nvolume  {}\n",
        join(&t.angles.0),
        join(&t.lengths.0),
        t.volume
    )
}

fn report_output(report: VerificationReport, sampling: &Sampling, json: bool) -> CliResult {
    let report = report
        .with_parameter("seed", sampling.seed as f64)
        .with_parameter("tol", sampling.tol)
        .with_parameter("dt", DEFAULT_DT);
    let code = if report.all_passed() { ExitCode::SUCCESS } else { ExitCode::from(3) };
    if json {
        return Ok((pretty(&report), code));
    }
    let mut s = String::new();
    writeln!(s, "campaign      {}", report.campaign).unwrap();
    for (k, v) in &report.parameters {
        writeln!(s, "{:<13} {v}", format!("param.{k}")).unwrap();
    }
    if let Some(r) = &report.regime {
        writeln!(s, "regime        {r}").unwrap();
    }
    writeln!(s, "samples       {}", report.samples).unwrap();
    writeln!(s, "passed        {}", report.passed).unwrap();
    writeln!(s, "failed        {}", report.failed).unwrap();
    writeln!(s, "indeterminate {}", report.indeterminate).unwrap();
    writeln!(s, "proposals     {}", report.proposals).unwrap();
    match report.worst_margin {
        Some(m) => writeln!(s, "worst margin  {m}").unwrap(),
        None => writeln!(s, "worst margin  none").unwrap(),
    }
    if let Some(w) = report.witnesses.first() {
        writeln!(s, "worst angles  {}", join(&w.tetrahedron.angles.0)).unwrap();
    }
    Ok((s, code))
}

fn check_tol(tol: f64) -> Result<(), Failure> {
    if tol >= 0.0 && tol.is_finite() {
        Ok(())
    } else {
        Err(Failure::Usage(format!("--tol must be nonnegative, got {tol}")))
    }
}

fn run(command: Command) -> CliResult {
    match command {
        Command::Convert(args) => {
            let t = tetrahedron(&args.input)?;
            ok(pretty(&t))
        }
        Command::Volume(args) => {
            let t = tetrahedron(&args.input)?;
            if args.out.json {
                ok(pretty(&t))
            } else {
                ok(format!("{}\n", t.volume))
            }
        }
        Command::Grad(args) => {
            let t = tetrahedron(&args.input)?;
            let angles = dvol_dangles(&t);
            let lengths = dvol_dlengths(&t)?;
            if args.out.json {
                ok(pretty(&json!({
                    "tetrahedron": t,
                    "d_volume_d_angles": angles.values,
                    "d_volume_d_lengths": lengths.values,
                })))
            } else {
                ok(format!(
                    "{}d_volume_d_angles  {}\nd_volume_d_lengths {}\n",
                    record_text(&t),
                    join(&angles.values),
                    join(&lengths.values)
                ))
            }
        }
        Command::Verify(Verify::Theorem(args)) => {
            check_positive("ell", args.ell)?;
            check_tol(args.sampling.tol)?;
            let s = &args.sampling;
            let report = verify_theorem_with_tol(args.ell, s.samples, s.seed, s.tol)?;
            report_output(report, s, args.out.json)
        }
        Command::Verify(Verify::Area(args)) => {
            check_positive("ell", args.ell)?;
            check_tol(args.sampling.tol)?;
            let s = &args.sampling;
            let report = verify_area_bound(args.ell, s.samples, s.seed, s.tol)?;
            report_output(report, s, args.out.json)
        }
        Command::Verify(Verify::AngleSum(args)) => {
            let sum = if args.degrees { args.sum.to_radians() } else { args.sum };
            check_positive("sum", sum)?;
            check_tol(args.sampling.tol)?;
            let s = &args.sampling;
            let report = verify_fixed_angle_sum_with_tol(sum, s.samples, s.seed, s.tol)?;
            report_output(report, s, args.out.json)
        }
        Command::Flow(args) => {
            let t = tetrahedron(&args.input)?;
            check_positive("dt", args.dt)?;
            check_tol(args.tol)?;
            let ell = args.ell.unwrap_or(t.lengths.min());
            let traj = deformation_flow(&t, ell, args.dt)?;
            if args.out.json {
                return ok(pretty(&traj));
            }
            if args.out.csv {
                return ok(traj.to_csv());
            }
            let last = &traj.last().tetrahedron;
            let mut s = String::new();
            writeln!(s, "ell           {ell}").unwrap();
            writeln!(s, "dt            {}", args.dt).unwrap();
            writeln!(s, "tol           {}", args.tol).unwrap();
            writeln!(s, "termination   {}", traj.termination).unwrap();
            writeln!(s, "points        {}", traj.points.len()).unwrap();
            writeln!(s, "t end         {}", traj.last().t).unwrap();
            writeln!(s, "start volume  {}", t.volume).unwrap();
            writeln!(s, "end volume    {}", last.volume).unwrap();
            writeln!(s, "end lengths   {}", join(&last.lengths.0)).unwrap();
            writeln!(s, "end regular   {}", last.is_regular(args.tol.max(1e-12))).unwrap();
            if let Some(d) = &traj.diagnostic {
                writeln!(s, "diagnostic    {d}").unwrap();
            }
            ok(s)
        }
        Command::Conjecture(Conjecture::Prima(args)) => {
            check_tol(args.sampling.tol)?;
            match optional_tetrahedron(&args.input)? {
                Some(t) => {
                    let ell = args.ell.unwrap_or(t.lengths.min());
                    let out = conjecture_prima_test(&t, ell)?;
                    if args.out.json {
                        ok(pretty(&json!({ "tetrahedron": t, "ell": ell, "outcome": out })))
                    } else {
                        ok(format!(
                            "ell           {ell}\nholds         {}\nmargin        {}\nindeterminate {}\n",
                            out.holds, out.margin, out.indeterminate
                        ))
                    }
                }
                None => {
                    if args.ell.is_some() {
                        return Err(Failure::Usage(
                            "--ell needs --angles or --lengths; the campaign uses each sample's shortest edge".into(),
                        ));
                    }
                    let s = &args.sampling;
                    let report = explore_conjecture_prima(s.samples, s.seed)?;
                    report_output(report, s, args.out.json)
                }
            }
        }
        Command::Conjecture(Conjecture::Prima2(args)) => {
            let t = tetrahedron(&args.input)?;
            let ell = args.ell.unwrap_or(t.lengths.min());
            let out = conjecture_prima2_test(&t, ell, args.samples, args.seed)?;
            if args.out.json {
                return ok(pretty(&json!({
                    "tetrahedron": t,
                    "ell": ell,
                    "seed": args.seed,
                    "probes": args.samples,
                    "outcome": out,
                })));
            }
            let mut s = format!(
                "ell           {ell}\nnonempty      {}\nprobes used   {}\n",
                out.nonempty, out.probes_used
            );
            match &out.witness {
                Some(w) => s.push_str(&record_text(w)),
                None => s.push_str("inconclusive: probe budget exhausted\n"),
            }
            ok(s)
        }
        Command::Degenerate(args) => {
            let path = degeneration_path(args.steps)?;
            if args.out.json {
                let rows: Vec<_> = path
                    .iter()
                    .map(|(a, v)| json!({ "angles": a, "volume": v }))
                    .collect();
                return ok(pretty(&rows));
            }
            let mut s = String::from("a12,a13,a14,a34,a24,a23,volume\n");
            for (a, v) in &path {
                writeln!(s, "{},{v}", join(&a.0)).unwrap();
            }
            ok(s)
        }
        Command::Scan(args) => {
            check_positive("from", args.from)?;
            check_positive("to", args.to)?;
            let grid = linear_grid(args.from, args.to, args.points);
            let scan = regular_volume_scan(&grid)?;
            if args.out.json {
                let rows: Vec<_> = scan.iter().map(|(l, v)| json!({ "ell": l, "volume": v })).collect();
                return ok(pretty(&rows));
            }
            let mut s = String::from("ell,volume\n");
            for (l, v) in &scan {
                writeln!(s, "{l},{v}").unwrap();
            }
            ok(s)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli.command) {
        Ok((text, code)) => {
            print!("{text}");
            code
        }
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Numerical(msg)) => {
            eprintln!("numerical failure: {msg}");
            ExitCode::from(2)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn command_definition_is_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn failed_campaign_exits_with_three() {
        let report: VerificationReport = serde_json::from_value(json!({
            "campaign": "theorem",
            "seed": 1,
            "parameters": {},
            "samples": 2,
            "passed": 1,
            "failed": 1,
            "indeterminate": 0,
            "proposals": 2,
            "worst_margin": -0.5,
            "witnesses": [],
        }))
        .unwrap();
        let sampling = Sampling { samples: 2, seed: 1, tol: DEFAULT_TOL };
        let Ok((_, code)) = report_output(report.clone(), &sampling, true) else {
            panic!("report output failed");
        };
        assert_eq!(code, ExitCode::from(3));
        let passing = VerificationReport { failed: 0, passed: 2, ..report };
        let Ok((_, code)) = report_output(passing, &sampling, false) else {
            panic!("report output failed");
        };
        assert_eq!(code, ExitCode::SUCCESS);
    }

    #[test]
    fn vectors_parse_strictly() {
        assert!(parse_vector("1,2,3,4,5,6", "angles").is_ok());
        assert!(parse_vector("1,2,3,4,5", "angles").is_err());
        assert!(parse_vector("1,2,3,4,5,x", "angles").is_err());
        assert!(parse_vector("1,2,3,4,5,inf", "angles").is_err());
    }
}
