use std::process::{Command, Output};

use hyperideal::extremal::VerificationReport;
use hyperideal::Tetrahedron;

const PI_6: &str = "0.5235987755982988";

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hyperideal"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn regular_angles() -> String {
    [PI_6; 6].join(",")
}

#[test]
fn convert_regular_angles() {
    let out = run(&["convert", "--angles", &regular_angles()]);
    assert_eq!(out.status.code(), Some(0));
    let t = Tetrahedron::from_json(&stdout(&out)).unwrap();
    let ell0 = ((3.0 + 3f64.sqrt()) / 4.0).acosh();
    assert!(t.lengths.iter().all(|l| (l - ell0).abs() < 1e-12));
}

#[test]
fn convert_lengths_round_trips() {
    let out = run(&["convert", "--lengths", "1,1.1,1.2,1,1.1,1.2"]);
    assert_eq!(out.status.code(), Some(0));
    let t = Tetrahedron::from_json(&stdout(&out)).unwrap();
    let back = run(&["convert", "--angles", &t.angles.iter().map(f64::to_string).collect::<Vec<_>>().join(",")]);
    let u = Tetrahedron::from_json(&stdout(&back)).unwrap();
    assert!(u.lengths.max_abs_diff(&t.lengths) < 1e-9);
}

#[test]
fn volume_in_radians_and_degrees() {
    let out = run(&["volume", "--angles", &regular_angles()]);
    let v: f64 = stdout(&out).trim().parse().unwrap();
    assert!((v - 3.226).abs() < 1e-3);
    let deg = run(&["volume", "--degrees", "--angles", "30,30,30,30,30,30"]);
    let w: f64 = stdout(&deg).trim().parse().unwrap();
    assert!((v - w).abs() < 1e-12);
    let json = run(&["volume", "--json", "--angles", &regular_angles()]);
    let t = Tetrahedron::from_json(&stdout(&json)).unwrap();
    assert_eq!(t.volume, v);
}

#[test]
fn grad_json_has_both_charts() {
    let out = run(&["grad", "--json", "--lengths", "1,1.1,1.2,1,1.1,1.2"]);
    assert_eq!(out.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(v["d_volume_d_angles"][0].as_f64(), Some(-0.5));
    assert!(v["d_volume_d_lengths"].as_array().unwrap().iter().all(|x| x.as_f64().unwrap() < 0.0));
}

#[test]
fn verify_theorem_example() {
    let out = run(&["verify", "theorem", "--ell", "0.59", "--samples", "100000", "--seed", "7", "--json"]);
    assert_eq!(out.status.code(), Some(0));
    let report: VerificationReport = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(report.passed, 100_000);
    assert_eq!(report.failed, 0);
    assert_eq!(report.parameters["seed"], 7.0);
    assert_eq!(report.parameters["tol"], 1e-9);
    assert_eq!(report.parameters["dt"], 1e-3);
    assert_eq!(report.parameters["samples"], 100_000.0);
}

#[test]
fn verify_angle_sum_and_area() {
    let out = run(&["verify", "angle-sum", "--sum", "180", "--degrees", "--samples", "500"]);
    assert_eq!(out.status.code(), Some(0), "{}", stdout(&out));
    let out = run(&["verify", "area", "--ell", "0.3", "--samples", "500"]);
    assert_eq!(out.status.code(), Some(0));
    let out = run(&["verify", "angle-sum", "--sum", "6.2831853071795865"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn flow_outputs() {
    let start = ["--angles", "0.15,0.1,0.05,0.12,0.08,0.2"];
    let csv = run(&[&["flow", "--csv"][..], &start].concat());
    assert_eq!(csv.status.code(), Some(0));
    let text = stdout(&csv);
    assert!(text.starts_with("t,l12,l13,l14,l34,l24,l23,volume\n"));
    let summary = stdout(&run(&[&["flow"][..], &start].concat()));
    assert!(summary.contains("termination   regular"));
    let json = stdout(&run(&[&["flow", "--json"][..], &start].concat()));
    let v: serde_json::Value = serde_json::from_str(&json).unwrap();
    assert_eq!(v["termination"], "regular");
    assert_eq!(v["points"].as_array().unwrap().len() + 1, text.lines().count());
}

#[test]
fn conjecture_commands() {
    let single = run(&["conjecture", "prima", "--angles", "0.15,0.1,0.05,0.12,0.08,0.2"]);
    assert_eq!(single.status.code(), Some(0));
    assert!(stdout(&single).contains("holds         true"));
    let campaign = run(&["conjecture", "prima", "--samples", "300", "--json"]);
    let report: VerificationReport = serde_json::from_str(&stdout(&campaign)).unwrap();
    assert_eq!(report.samples, 300);
    let hull = run(&["conjecture", "prima2", "--angles", "0.15,0.1,0.05,0.12,0.08,0.2"]);
    assert!(stdout(&hull).contains("nonempty      true"));
    let regular = run(&["conjecture", "prima2", "--angles", &regular_angles()]);
    assert_eq!(regular.status.code(), Some(1));
}

#[test]
fn degenerate_and_scan() {
    let path = stdout(&run(&["degenerate", "--steps", "5"]));
    let last = path.lines().last().unwrap();
    assert_eq!(last.rsplit(',').next(), Some("0"));
    let scan = stdout(&run(&["scan", "--from", "0.2", "--to", "2", "--points", "10"]));
    let vols: Vec<f64> = scan.lines().skip(1).map(|l| l.split(',').nth(1).unwrap().parse().unwrap()).collect();
    assert_eq!(vols.len(), 10);
    assert!(vols.windows(2).all(|w| w[1] < w[0]));
}

#[test]
fn usage_errors_exit_with_one() {
    for args in [
        &["volume", "--angles", "1,2"][..],
        &["volume", "--angles", "a,b,c,d,e,f"],
        &["volume", "--angles", &regular_angles(), "--lengths", "1,1,1,1,1,1"],
        &["volume"],
        &["volume", "--angles", "1.2,1.2,1.2,1.2,1.2,1.2"],
        &["volume", "--lengths", "10,0.01,0.01,10,0.01,0.01"],
        &["degenerate", "--lengths", "1,1,1,1,1,1"],
        &["degenerate", "--steps", "1"],
        &["verify", "theorem", "--ell", "-1"],
        &["bogus"],
        &[],
    ] {
        let out = run(args);
        assert_eq!(out.status.code(), Some(1), "{args:?}");
        assert!(out.stdout.is_empty(), "{args:?}");
        assert!(!out.stderr.is_empty(), "{args:?}");
    }
}

#[test]
fn help_exits_with_zero() {
    assert_eq!(run(&["--help"]).status.code(), Some(0));
    assert_eq!(run(&["verify", "--help"]).status.code(), Some(0));
}

#[test]
fn sampling_starvation_is_a_numerical_failure() {
    let out = run(&["verify", "theorem", "--ell", "5", "--samples", "1"]);
    assert_eq!(out.status.code(), Some(2));
}
