use std::fmt;
use std::fs;
use std::path::Path;

use apwave::branch::{
    almost_periodic_demo, nonuniqueness_demo, BranchFile, BranchSolver, DemoOptions,
};
use apwave::freqset::ModeKind;
use apwave::reconstruct::{
    build_field, emit_profile, profile_csv, verify_system, FlowGrid, Thresholds, Verdict,
    VerificationReport,
};
use apwave::waveop::{bifurcation_lambdas, dispersion_residual, stagnation_indicator, transversality};
use apwave::WaveParams;
use serde::Serialize;

use crate::config::{self, load_pair};
use crate::{BranchArgs, DemoArgs, PhysicsArgs, ProfileArgs, VerifyArgs};

#[derive(Debug)]
pub enum CliError {
    Io(String),
    Input(String),
    /// Resonance, non-convergence and other refusals of the mathematics.
    Math(String),
    /// Verification ran but did not meet its thresholds.
    Failed(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Io(_) => 1,
            CliError::Input(_) => 2,
            CliError::Math(_) | CliError::Failed(_) => 3,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Io(m) | CliError::Input(m) | CliError::Math(m) | CliError::Failed(m) => f.write_str(m),
        }
    }
}

impl From<apwave::Error> for CliError {
    fn from(e: apwave::Error) -> Self {
        if e.is_refusal() {
            CliError::Math(e.to_string())
        } else {
            CliError::Input(e.to_string())
        }
    }
}

type Res = Result<(), CliError>;

fn write(path: &Path, contents: &str) -> Res {
    fs::write(path, contents).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

fn emit(output: Option<&Path>, contents: &str) -> Res {
    match output {
        Some(p) => write(p, contents),
        None => {
            print!("{contents}");
            Ok(())
        }
    }
}

fn out_dir(dir: &Path) -> Res {
    fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))
}

fn json<T: Serialize>(value: &T) -> String {
    serde_json::to_string_pretty(value).expect("plain data serialises") + "\n"
}

pub fn freqset_check(path: &Path) -> Res {
    let spec = load_pair(path)?;
    let canonical = spec.canonical()?;
    let report = spec.build()?.check();
    #[derive(Serialize)]
    struct Out<'a> {
        pair: &'a apwave::freqset::CanonicalPair,
        report: &'a apwave::freqset::AdmissibilityReport,
    }
    print!("{}", json(&Out { pair: &canonical, report: &report }));
    if report.valid {
        Ok(())
    } else {
        Err(CliError::Input(format!("pair {report}")))
    }
}

pub fn freqset_gen(path: &Path, cutoff: Option<f64>, csv: bool, output: Option<&Path>) -> Res {
    let mut spec = load_pair(path)?;
    if let Some(c) = cutoff {
        spec.cutoff = c;
    }
    let pair = spec.build()?;
    let modes = pair.enumerate();
    let text = if csv {
        let mut s = String::from("kind,vector,frequency\n");
        for m in &modes {
            let coeffs: Vec<String> = m.vec.coeffs().iter().map(i32::to_string).collect();
            let kind = match m.kind {
                ModeKind::Mean => "mean",
                ModeKind::Cos => "cos",
                ModeKind::Sin => "sin",
            };
            s.push_str(&format!("{kind},{},{}\n", coeffs.join(" "), pair.frequency(m)));
        }
        s
    } else {
        #[derive(Serialize)]
        struct Row {
            kind: ModeKind,
            vector: Vec<i32>,
            frequency: f64,
        }
        let rows: Vec<Row> = modes
            .iter()
            .map(|m| Row {
                kind: m.kind,
                vector: m.vec.coeffs().to_vec(),
                frequency: pair.frequency(m),
            })
            .collect();
        json(&rows)
    };
    emit(output, &text)
}

pub fn dispersion(pair_path: &Path, physics: &PhysicsArgs, output: Option<&Path>) -> Res {
    let p = config::params(&Default::default(), physics)?;
    let pair = load_pair(pair_path)?.build()?;
    let mut out = String::from(
        "k,lambda_plus,lambda_minus,residual_plus,residual_minus,transversality_plus,transversality_minus,stagnation_plus,stagnation_minus\n",
    );
    let mut seen = Vec::new();
    for m in pair.enumerate() {
        if m.kind == ModeKind::Mean || seen.contains(&m.vec) {
            continue;
        }
        seen.push(m.vec);
        let k = pair.frequency(&m);
        let (lp, lm) = bifurcation_lambdas(&p, k)?;
        let tr = |l: f64| transversality(&p, l, k).map_or("nan".to_string(), |t| t.to_string());
        out.push_str(&format!(
            "{k},{lp},{lm},{},{},{},{},{},{}\n",
            dispersion_residual(&p, lp, k),
            dispersion_residual(&p, lm, k),
            tr(lp),
            tr(lm),
            stagnation_indicator(&p, lp),
            stagnation_indicator(&p, lm),
        ));
    }
    emit(output, &out)
}

pub fn branch(args: &BranchArgs) -> Res {
    let (params, cfg) = config::branch_run(args)?;
    let solver = BranchSolver::new(params, cfg)?;
    let points = solver.continue_branch()?;
    let file = BranchFile::new(params, &solver, &points);
    out_dir(&args.out)?;
    write(&args.out.join("branch.json"), &file.to_json())?;
    write(&args.out.join("branch.csv"), &file.to_csv()?)?;
    println!(
        "{} points, lambda* = {}, s in [{}, {}]",
        points.len(),
        solver.lambda_star(),
        points.first().map_or(0.0, |p| p.s),
        points.last().map_or(0.0, |p| p.s)
    );
    Ok(())
}

#[derive(Serialize)]
struct PointCheck {
    report: VerificationReport,
    verdict: Verdict,
}

#[derive(Serialize)]
struct VerifyOut {
    thresholds: Thresholds,
    nx: usize,
    ny: usize,
    passed: bool,
    points: Vec<PointCheck>,
}

pub fn verify(args: &VerifyArgs) -> Res {
    let file = BranchFile::from_json(&config::read(&args.branch)?)?;
    let points = file.points()?;
    let p = file.params;
    let thresholds = Thresholds {
        bernoulli: args.bernoulli_tol,
        boundary: args.boundary_tol,
        laplacian: args.laplacian_tol,
        order_min: args.order_min,
        order_max: args.order_max,
        cauchy_riemann: args.cr_tol,
    };
    let every = args.every.max(1);
    let mut checks = Vec::new();
    for (i, pt) in points.iter().enumerate() {
        if i % every != 0 && i + 1 != points.len() {
            continue;
        }
        let grid = FlowGrid::window(pt.w.basis(), p.h, args.nx, args.ny)?;
        let report = verify_system(&p, &build_field(&p, pt, &grid)?, pt);
        let verdict = report.check(&thresholds);
        println!(
            "s = {:<12} bernoulli {:.2e}  xi {:.2e}/{:.2e}  laplacian order {}  {}",
            pt.s,
            report.bernoulli,
            report.xi_top,
            report.xi_bottom,
            report.laplacian_order.map_or("exact".into(), |o| format!("{o:.4}")),
            if verdict.passed { "pass" } else { "FAIL" }
        );
        checks.push(PointCheck { report, verdict });
    }
    let passed = checks.iter().all(|c| c.verdict.passed);
    out_dir(&args.out)?;
    let out = VerifyOut {
        thresholds,
        nx: args.nx,
        ny: args.ny,
        passed,
        points: checks,
    };
    write(&args.out.join("verify.json"), &json(&out))?;
    if passed {
        Ok(())
    } else {
        let n = out.points.iter().filter(|c| !c.verdict.passed).count();
        Err(CliError::Failed(format!("{n} of {} points failed verification", out.points.len())))
    }
}

fn demo_params(a: &DemoArgs) -> Result<WaveParams, CliError> {
    Ok(WaveParams::new(a.gamma, a.g, a.h)?)
}

fn demo_options(a: &DemoArgs, mut o: DemoOptions) -> DemoOptions {
    if let Some(s) = a.s_max {
        o.s_max = s;
    }
    if let Some(n) = a.steps {
        o.n_steps = n;
    }
    if let Some(c) = a.cutoff {
        o.cutoff = c;
    }
    if let Some(b) = a.coeff_bound {
        o.coeff_bound = b;
    }
    o
}

fn window(len: f64, n: usize) -> Vec<f64> {
    let n = n.max(2);
    (0..n).map(|i| len * i as f64 / (n - 1) as f64).collect()
}

pub fn demo_nonuniqueness(a: &DemoArgs) -> Res {
    let p = demo_params(a)?;
    let opts = demo_options(a, DemoOptions::nonuniqueness());
    let rep = nonuniqueness_demo(p, &opts)?;
    out_dir(&a.out)?;

    #[derive(Serialize)]
    struct Out<'a> {
        params: WaveParams,
        options: &'a DemoOptions,
        lambda_star: f64,
        rows: &'a [apwave::branch::NonuniquenessRow],
    }
    write(
        &a.out.join("nonuniqueness.json"),
        &json(&Out { params: p, options: &opts, lambda_star: rep.lambda_star, rows: &rep.rows }),
    )?;
    let mut csv = String::from("s,lambda_even,lambda_odd,distance,evenness_defect_even,evenness_defect_odd\n");
    for r in &rep.rows {
        csv.push_str(&format!(
            "{},{},{},{},{},{}\n",
            r.s, r.lambda_even, r.lambda_odd, r.distance, r.evenness_defect_even, r.evenness_defect_odd
        ));
    }
    write(&a.out.join("nonuniqueness.csv"), &csv)?;
    write(&a.out.join("branch_even.json"), &BranchFile::new(p, &rep.even_solver, &rep.even).to_json())?;
    write(&a.out.join("branch_odd.json"), &BranchFile::new(p, &rep.odd_solver, &rep.odd).to_json())?;

    let xs = window(4.0 * std::f64::consts::PI, a.samples);
    let even = emit_profile(&p, rep.even.last().expect("seed"), &xs);
    let odd = emit_profile(&p, rep.odd.last().expect("seed"), &xs);
    let mut prof = String::from("x,eta_even,eta_odd\n");
    for (e, o) in even.iter().zip(&odd) {
        prof.push_str(&format!("{},{},{}\n", e.0, e.1, o.1));
    }
    write(&a.out.join("profiles.csv"), &prof)?;
    println!(
        "lambda* = {}; {} amplitudes, distance at s = {}: {}",
        rep.lambda_star,
        rep.rows.len(),
        rep.rows.last().map_or(0.0, |r| r.s),
        rep.rows.last().map_or(0.0, |r| r.distance)
    );
    Ok(())
}

pub fn demo_almost_periodic(a: &DemoArgs) -> Res {
    let p = demo_params(a)?;
    let opts = demo_options(a, DemoOptions::almost_periodic());
    let rep = almost_periodic_demo(p, &opts)?;
    out_dir(&a.out)?;

    #[derive(Serialize)]
    struct Out<'a> {
        params: WaveParams,
        options: &'a DemoOptions,
        lambda_star: f64,
        k0: apwave::ModeId,
        support: &'a [apwave::FreqVector],
        support_rank: usize,
        closure_rank: usize,
        frequency_set_rank: usize,
        witness: Option<(apwave::FreqVector, apwave::FreqVector)>,
        certification: apwave::branch::Certification,
    }
    write(
        &a.out.join("almostperiodic.json"),
        &json(&Out {
            params: p,
            options: &opts,
            lambda_star: rep.lambda_star,
            k0: rep.k0,
            support: &rep.support,
            support_rank: rep.support_rank,
            closure_rank: rep.closure_rank,
            frequency_set_rank: rep.frequency_set_rank,
            witness: rep.witness,
            certification: rep.certification,
        }),
    )?;
    write(&a.out.join("branch.json"), &BranchFile::new(p, &rep.solver, &rep.points).to_json())?;
    let xs = window(8.0 * std::f64::consts::PI, a.samples);
    let rows = emit_profile(&p, rep.points.last().expect("seed"), &xs);
    write(&a.out.join("profile.csv"), &profile_csv(&rows))?;
    println!(
        "lambda* = {}; support rank {}, closure rank {}, frequency-set rank {}; certification {:?}",
        rep.lambda_star, rep.support_rank, rep.closure_rank, rep.frequency_set_rank, rep.certification
    );
    Ok(())
}

pub fn profile(a: &ProfileArgs) -> Res {
    let file = BranchFile::from_json(&config::read(&a.branch)?)?;
    let points = file.points()?;
    let idx = a.index.unwrap_or(points.len().saturating_sub(1));
    let pt = points
        .get(idx)
        .ok_or_else(|| CliError::Input(format!("index {idx} out of range ({} points)", points.len())))?;
    let len = 2.0 * std::f64::consts::PI / pt.w.basis().generators()[0];
    let x_max = a.x_max.unwrap_or(a.x_min + len);
    if !(x_max > a.x_min) || a.samples < 2 {
        return Err(CliError::Input("profile window must be non-empty with at least 2 samples".into()));
    }
    let xs: Vec<f64> = (0..a.samples)
        .map(|i| a.x_min + (x_max - a.x_min) * i as f64 / (a.samples - 1) as f64)
        .collect();
    emit(a.output.as_deref(), &profile_csv(&emit_profile(&file.params, pt, &xs)))
}
