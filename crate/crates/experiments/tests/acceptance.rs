//! Acceptance run: every criterion of the default `verify-all` at its stated
//! tolerance and time budget, plus run-to-run determinism.

use contactkit_experiments::{run, ExperimentReport, Settings};

struct Criterion {
    label: &'static str,
    experiment: &'static str,
    minutes: f64,
}

const CRITERIA: [Criterion; 9] = [
    Criterion { label: "C1 contactomorphism certificate", experiment: "contact-certificate", minutes: 2.0 },
    Criterion { label: "C2 squeezing formula", experiment: "squeeze-formula", minutes: 1.0 },
    Criterion { label: "C3 radial spectrum", experiment: "radial-spectrum", minutes: 2.0 },
    Criterion { label: "C4 lift endpoints", experiment: "lift-endpoints", minutes: 3.0 },
    Criterion { label: "C5 spectrum containment", experiment: "spectrum-bound", minutes: 10.0 },
    Criterion { label: "C6 displacement spectrum", experiment: "displacement-spectrum", minutes: 2.0 },
    Criterion { label: "C7 rational rotation lower bound", experiment: "rational-rotation", minutes: 10.0 },
    Criterion { label: "C8 Rokhlin approximation", experiment: "rokhlin-demo", minutes: 10.0 },
    Criterion { label: "C9 path independence of action", experiment: "path-independence", minutes: 3.0 },
];

fn find<'a>(reports: &'a [ExperimentReport], id: &str) -> &'a ExperimentReport {
    reports.iter().find(|r| r.id == id).unwrap_or_else(|| panic!("no report for {id}"))
}

/// Extra structural requirements that a passing report alone does not show.
fn shape_ok(r: &ExperimentReport) -> Result<(), String> {
    let has = |prefix: &str| r.measurements.iter().filter(|m| m.name.starts_with(prefix)).count();
    match r.id.as_str() {
        "contact-certificate" if r.params.get("points_per_map").and_then(|v| v.as_u64()) < Some(1000) => {
            Err("fewer than 1000 points per map".into())
        }
        "squeeze-formula" if has("formula_error") < 3 => Err("missing squeeze factors".into()),
        "radial-spectrum" if has("spectrum_error") < 3 => Err("missing times".into()),
        "lift-endpoints" if has("max_error") < 5 || has("max_error[sign-changing]") != 1 => {
            Err("need five families including a sign-changing one".into())
        }
        "spectrum-bound" if r.params.get("count").and_then(|v| v.as_u64()) < Some(100) => {
            Err("fewer than 100 maps".into())
        }
        "rational-rotation" if r.params.get("conjugators").and_then(|v| v.as_u64()) < Some(50) => {
            Err("fewer than 50 conjugators".into())
        }
        "rokhlin-demo" if has("distance_over_bound") < 3 => Err("missing eps values".into()),
        "path-independence" if has("action_gap") < 10 => Err("fewer than 10 maps".into()),
        _ => Ok(()),
    }
}

fn main() {
    let settings = Settings::default();
    let first = run("verify-all", &settings).expect("first verify-all run");
    let second = run("verify-all", &settings).expect("second verify-all run");

    let mut all = true;
    for c in &CRITERIA {
        let r = find(&first, c.experiment);
        let within = r.runtime_seconds < 60.0 * c.minutes;
        let shape = shape_ok(r);
        let ok = r.passed() && within && shape.is_ok();
        all &= ok;
        let mut detail = format!("{:.1}s (limit {} min)", r.runtime_seconds, c.minutes);
        for m in r.failures() {
            detail.push_str(&format!("; {} = {:e} > {:e}", m.name, m.value, m.tolerance));
        }
        if let Err(e) = shape {
            detail.push_str(&format!("; {e}"));
        }
        println!("{} {}: {}", if ok { "PASS" } else { "FAIL" }, c.label, detail);
    }

    let mut same = first.len() == second.len();
    for (a, b) in first.iter().zip(&second) {
        same &= a.measured_json().unwrap() == b.measured_json().unwrap();
    }
    all &= same;
    println!(
        "{} C10 determinism: {} reports compared",
        if same { "PASS" } else { "FAIL" },
        first.len()
    );

    if !all {
        eprintln!("acceptance criteria failed");
        std::process::exit(1);
    }
}
