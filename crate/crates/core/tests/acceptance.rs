//! End-to-end acceptance checks. Each criterion prints one PASS/FAIL line with the
//! measured quantities and its runtime; the test fails if any criterion fails.
//!
//! Run with `cargo test -p thermotopo --test acceptance` (add `--release` for
//! representative runtimes).

use std::f64::consts::PI;
use std::io::Write;
use std::time::{Duration, Instant};

use thermotopo::checks::{algebra_checks, connection_checks, thermal_checks, CheckOutcome, CheckSizes};
use thermotopo::invariants::{
    dd_invariant, first_chern_4d, nt_chern_2d, second_chern, thermal_chern_2d, DdWeighting, IntegrandOptions, QuadratureGrid, Rule, WedgeForm,
};
use thermotopo::sweep::{detect_transition, detect_transitions, emit_configs, run_sweep, FigureId, SweepConfig, SweepRecord};
use thermotopo::{Embedding, Family, ModelSpec};

/// Allowed rise per step of a series that must be non-increasing.
const MONOTONE_TOL: f64 = 1e-4;

struct Outcome {
    pass: bool,
    detail: String,
}

/// Writes straight to stdout so the lines show even when libtest captures output.
fn report(n: usize, outcome: &Outcome, elapsed: Duration, budget: Option<Duration>) -> bool {
    let within = budget.is_none_or(|b| elapsed <= b);
    let pass = outcome.pass && within;
    let budget = budget.map_or(String::new(), |b| format!(" / limit {}s", b.as_secs()));
    let line = format!(
        "criterion {n:>2}: {} — {} [{:.1}s{budget}{}]\n",
        if pass { "PASS" } else { "FAIL" },
        outcome.detail,
        elapsed.as_secs_f64(),
        if within { "" } else { ", over time limit" }
    );
    let mut out = std::io::stdout().lock();
    out.write_all(line.as_bytes()).unwrap();
    out.flush().unwrap();
    pass
}

/// Fixed-point or scientific rendering of a fallible value (errors show their tag).
fn show(r: &thermotopo::Result<f64>, sci: bool) -> String {
    match r {
        Ok(v) if sci => format!("{v:.2e}"),
        Ok(v) => format!("{v:.4}"),
        Err(e) => format!("error({})", e.tag()),
    }
}

fn run(name: &str, figure: FigureId) -> Vec<SweepRecord> {
    let (_, config) = figure.configs().into_iter().find(|(n, _)| *n == name).expect("sweep exists");
    run_sweep(&config).expect("valid figure config")
}

fn spec(family: Family, gamma: f64, embedding: Embedding) -> ModelSpec {
    ModelSpec::new(family, gamma, embedding).unwrap()
}

fn max_dev<'a>(records: impl IntoIterator<Item = &'a SweepRecord>, target: f64) -> f64 {
    records.into_iter().map(|r| (r.value - target).abs()).fold(0.0, |a, b| if b.is_nan() { f64::INFINITY } else { a.max(b) })
}

fn fig1() -> Outcome {
    let r = run("phase", FigureId::Fig1);
    let low = max_dev(r.iter().filter(|x| x.axis < 1.9), PI);
    let high = max_dev(r.iter().filter(|x| x.axis > 2.0), 0.0);
    let t = detect_transition(&r, &[0.0, PI]);
    let ok_t = matches!(t, Ok(v) if (v - 1.95).abs() <= 0.05);
    Outcome { pass: low < 5e-3 && high < 5e-3 && ok_t, detail: format!("plateau |Φ−π| ≤ {low:.1e}, |Φ| ≤ {high:.1e}, T_c = {} (want 1.95 ± 0.05)", show(&t, false)) }
}

fn fig2() -> Outcome {
    let r = run("phase", FigureId::Fig2);
    let crossings = detect_transitions(&r, &[0.0, PI, 2.0 * PI]);
    let ok_c = crossings.len() == 2 && (crossings[0] - 1.0).abs() <= 0.05 && (crossings[1] - 3.0).abs() <= 0.05;
    let p2 = max_dev(r.iter().filter(|x| x.axis < 0.95), 2.0 * PI);
    let p1 = max_dev(r.iter().filter(|x| x.axis > 1.05 && x.axis < 2.95), PI);
    let p0 = max_dev(r.iter().filter(|x| x.axis > 3.05), 0.0);
    Outcome {
        pass: ok_c && p2.max(p1).max(p0) < 5e-3,
        detail: format!("plateau deviations 2π {p2:.1e} / π {p1:.1e} / 0 {p0:.1e}; crossings {crossings:.3?} (want 1 and 3 ± 0.05)"),
    }
}

fn chern_points() -> Outcome {
    let opts = IntegrandOptions::default();
    let grid = QuadratureGrid::for_embedding(&Embedding::Sphere2D { radius: 1.0 }, &[200, 400], Rule::Trapezoid).unwrap();
    let c = |r: f64| thermal_chern_2d(&spec(Family::NH2, 1.0, Embedding::Sphere2D { radius: r }), r, 0.5, &grid, &opts).map(|x| x.value);
    let (c2, c05) = (c(2.0), c(0.5));
    let step = detect_transition(&run("chern1", FigureId::Fig4), &[0.0, 1.0]);
    let pass = matches!(c2, Ok(v) if (v - 1.0).abs() <= 1e-2) && matches!(c05, Ok(v) if v.abs() <= 1e-2) && matches!(step, Ok(s) if (s - 1.0).abs() <= 0.02);
    Outcome { pass, detail: format!("C_U(2γ) = {}, C_U(0.5γ) = {}, step at R = {} (want 1 ± 0.02)", show(&c2, false), show(&c05, true), show(&step, false)) }
}

fn fig3() -> Outcome {
    let cu = run("chern1", FigureId::Fig3);
    let nt = run("chern1_nt", FigureId::Fig3);
    let dev = max_dev(&cu, 1.0);
    let rises: Vec<f64> = nt.windows(2).filter(|w| w[1].value > w[0].value + MONOTONE_TOL).map(|w| w[1].axis).collect();
    let start = nt[0].value;
    Outcome {
        pass: dev <= 1e-2 && rises.is_empty() && (start - 1.0).abs() <= 1e-2 && nt.iter().all(|r| r.is_ok()),
        detail: format!("max |C_U − 1| = {dev:.1e}; C_U^nt from {start:.4} to {:.4}, rises > 1e-4 at T = {rises:?}", nt.last().unwrap().value),
    }
}

fn dd() -> Outcome {
    let opts = IntegrandOptions::default();
    let grid = QuadratureGrid::for_embedding(&Embedding::S3 { radius: 1.0 }, &[64, 64, 64], Rule::Trapezoid).unwrap();
    let h3 = spec(Family::Hermitian3, 1.0, Embedding::S3 { radius: 1.0 });
    let herm: Vec<f64> = [0.2, 1.0, 2.0].iter().map(|&t| dd_invariant(&h3, 1.0, t, &grid, DdWeighting::Restoring, &opts).map_or(f64::NAN, |x| x.value)).collect();
    let ok_h = herm.iter().all(|v| (v - 1.0).abs() <= 1e-2);
    let inside = run("nh3_not_enclosing", FigureId::FigDd);
    let worst_inside = inside.iter().max_by(|a, b| a.value.abs().total_cmp(&b.value.abs())).unwrap();
    let ok_in = max_dev(&inside, 0.0) <= 1e-2;
    let outside = run("nh3_enclosing", FigureId::FigDd);
    let decreasing = outside.windows(2).all(|w| w[1].value <= w[0].value + MONOTONE_TOL);
    let ok_out = (outside[0].value - 1.0).abs() <= 2e-2 && decreasing;
    Outcome {
        pass: ok_h && ok_in && ok_out,
        detail: format!(
            "Hermitian DD_B(T=0.2,1,2) = {herm:.4?}; NH3 enclosing DD^nt from {:.4} (T={}) to {:.4}, decreasing: {decreasing}; NH3 non-enclosing max |DD^nt| = {:.3} at T = {}",
            outside[0].value,
            outside[0].axis,
            outside.last().unwrap().value,
            worst_inside.value,
            worst_inside.axis
        ),
    }
}

fn four_d() -> Outcome {
    let opts = IntegrandOptions::default();
    let at = |r: f64| spec(Family::NH4, 1.0, Embedding::S4 { radius: r });
    let g4 = |dims: &[usize]| QuadratureGrid::for_embedding(&Embedding::S4 { radius: 1.0 }, dims, Rule::Trapezoid).unwrap();
    let c1 = first_chern_4d(&at(2.0), 2.0, 0.5, &g4(&[32, 32, 32, 32]), true, &opts).map(|x| x.value);
    let grid = g4(&[48, 48, 32, 32]);
    let c2 = |r: f64| second_chern(&at(r), r, 0.5, &grid, true, WedgeForm::Symmetric, &opts).map(|x| x.value);
    let (big, small) = (c2(2.0), c2(0.5));
    let tc = detect_transition(&run("phase", FigureId::Fig5), &[0.0, PI]);
    let pass = matches!(c1, Ok(v) if v.abs() <= 1e-4)
        && matches!(big, Ok(v) if (v - 3.0).abs() <= 3e-2)
        && matches!(small, Ok(v) if v.abs() <= 1e-2)
        && matches!(tc, Ok(v) if (v - 1.98).abs() <= 0.05);
    Outcome {
        pass,
        detail: format!("C_U1 = {}; C_U2(2γ) = {} (want 3 ± 0.03); C_U2(0.5γ) = {}; 4D phase T_c = {} (want 1.98 ± 0.05)", show(&c1, true), show(&big, false), show(&small, true), show(&tc, false)),
    }
}

fn suite_outcome(results: &[CheckOutcome]) -> Outcome {
    let detail = results.iter().map(|c| format!("{} {:.1e} (< {:.0e}{})", c.name, c.residual, c.tolerance, if c.points > 0 { format!(", {} pts", c.points) } else { String::new() })).collect::<Vec<_>>().join("; ");
    Outcome { pass: results.iter().all(|c| c.passed()), detail }
}

fn oracles() -> Outcome {
    suite_outcome(&connection_checks(7, CheckSizes::default()).unwrap())
}

fn algebra() -> Outcome {
    let mut all = algebra_checks();
    all.extend(thermal_checks(11, CheckSizes::default().thermal_states).unwrap());
    suite_outcome(&all)
}

fn hermitian_limits() -> Outcome {
    let opts = IntegrandOptions::default();
    let t = 0.01;
    let s2 = spec(Family::NH2, 0.0, Embedding::Sphere2D { radius: 1.0 });
    let grid = QuadratureGrid::for_embedding(&Embedding::Sphere2D { radius: 1.0 }, &[200, 400], Rule::Trapezoid).unwrap();
    let c1 = nt_chern_2d(&s2, 1.0, t, &grid, &opts).map(|x| x.value);
    let s4 = spec(Family::NH4, 0.0, Embedding::S4 { radius: 1.0 });
    let g4 = QuadratureGrid::for_embedding(&Embedding::S4 { radius: 1.0 }, &[48, 48, 32, 32], Rule::Trapezoid).unwrap();
    let c2 = second_chern(&s4, 1.0, t, &g4, false, WedgeForm::Symmetric, &opts).map(|x| x.value);
    Outcome {
        pass: matches!(c1, Ok(v) if (v - 1.0).abs() <= 1e-2) && matches!(c2, Ok(v) if (v - 3.0).abs() <= 1e-2),
        detail: format!("γ = 0, T = {t}: two-band monopole C = {} (want 1); four-band second Chern {} (want 3)", show(&c1, false), show(&c2, false)),
    }
}

/// Keeps the first few points of every sweep so all figures are exercised quickly.
fn truncated(figure: FigureId) -> Vec<(&'static str, SweepConfig)> {
    figure
        .configs()
        .into_iter()
        .map(|(n, mut c)| {
            c.sweep.stop = c.sweep.start + 2.0 * c.sweep.step;
            if let Some(o) = c.outer.as_mut() {
                o.stop = o.start + o.step;
            }
            (n, c)
        })
        .collect()
}

fn snapshot(dir: &std::path::Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<_> =
        std::fs::read_dir(dir).unwrap().map(|e| e.unwrap().path()).map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read(&p).unwrap())).collect();
    files.sort();
    files
}

fn determinism() -> Outcome {
    let mut checked = Vec::new();
    let mut mismatches = Vec::new();
    for figure in FigureId::ALL {
        let configs = match figure {
            FigureId::Fig1 | FigureId::Fig3 | FigureId::FigDd => figure.configs(),
            _ => truncated(figure),
        };
        let mut runs = Vec::new();
        for threads in [1, 4, 4] {
            let dir = tempfile::tempdir().unwrap();
            let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
            pool.install(|| emit_configs(figure, &configs, dir.path())).unwrap();
            runs.push(snapshot(dir.path()));
        }
        if runs[0] != runs[1] || runs[1] != runs[2] {
            mismatches.push(figure.name());
        }
        checked.push(figure.name());
    }
    Outcome {
        pass: mismatches.is_empty(),
        detail: format!("byte-identical data at 1/4/4 threads for {checked:?} (fig2, fig4–6 on their first points); mismatches {mismatches:?}"),
    }
}

#[test]
fn acceptance_criteria() {
    type Check = fn() -> Outcome;
    let secs = |s| Some(Duration::from_secs(s));
    let criteria: [(usize, Check, Option<Duration>); 10] = [
        (1, fig1, secs(120)),
        (2, fig2, secs(120)),
        (3, chern_points, secs(180)),
        (4, fig3, secs(300)),
        (5, dd, secs(600)),
        (6, four_d, secs(600)),
        (7, oracles, None),
        (8, algebra, None),
        (9, hermitian_limits, None),
        (10, determinism, None),
    ];
    let mut failed = Vec::new();
    for (n, check, budget) in criteria {
        let start = Instant::now();
        let outcome = check();
        if !report(n, &outcome, start.elapsed(), budget) {
            failed.push(n);
        }
    }
    assert!(failed.is_empty(), "failing acceptance criteria: {failed:?}");
}
