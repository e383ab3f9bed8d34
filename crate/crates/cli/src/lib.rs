//! Command line front end for `trinet-core`.
//!
//! Each subcommand prints one document to standard output (JSON, or CSV for
//! scans). With `--out-dir` the same documents, plus seesaw traces and
//! certificates, are written as files. Outputs contain no timings or paths,
//! so identical flags give identical bytes.
//!
//! Exit codes: 0 success or feasible, 2 usage error, 3 infeasibility with a
//! verified certificate, 4 numerical failure.

pub mod cli;
pub mod config;
pub mod crosscheck;
pub mod formats;
pub mod parallel;

use std::ffi::OsString;
use std::fmt;
use std::io::Write;
use std::path::Path;

use anyhow::{Context, Result};
use clap::Parser;
use serde::Serialize;
use trinet_core::dists::w_dist;
use trinet_core::inflation::{
    assemble_lp, assemble_reduced_lp, bisect_threshold, build_scenario, exact_target, solve, verify_certificate,
    ExactTarget, SimplexOptions, Verdict,
};
use trinet_core::local::{self, search_restart};
use trinet_core::quantum::{self, bipartite_chsh, chsh_onset, scan_points, visibility_grid};
use trinet_core::seesaw::{self, is_monotone, run_restart, SeesawConfig};
use trinet_core::{Error as CoreError, TripartiteDistribution, Visibility};

use cli::{Cli, Command, InflateArgs, LocalAction, ModelAction, SeesawArgs, TargetArgs};
use crosscheck::{conic_verdict, ConicVerdict};
use formats::*;
use parallel::{par_map, threads_from_env};

pub const EXIT_SUCCESS: i32 = 0;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_INFEASIBLE: i32 = 3;
pub const EXIT_NUMERICAL: i32 = 4;

/// Scan points per independently started chunk. Fixed, so the CSV does not
/// depend on the thread count.
pub const SCAN_CHUNK: usize = 100;

/// Bad input: flags, files or parameter values.
#[derive(Debug)]
pub struct UsageError(pub String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

/// A computation finished but failed its own check.
#[derive(Debug)]
pub struct NumericalFailure(pub String);

impl fmt::Display for NumericalFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for NumericalFailure {}

/// Exit code for an error, from the first classifiable cause.
pub fn exit_code(err: &anyhow::Error) -> i32 {
    for cause in err.chain() {
        if cause.is::<UsageError>() || cause.is::<serde_json::Error>() || cause.is::<std::io::Error>() {
            return EXIT_USAGE;
        }
        if cause.is::<NumericalFailure>() {
            return EXIT_NUMERICAL;
        }
        if let Some(e) = cause.downcast_ref::<CoreError>() {
            return match e {
                CoreError::Infeasible(_)
                | CoreError::NoConvergence(_)
                | CoreError::Numerical(_)
                | CoreError::NotHermitian(_) => EXIT_NUMERICAL,
                _ => EXIT_USAGE,
            };
        }
    }
    EXIT_NUMERICAL
}

/// Parse `args` (program name first), run, and return the exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_SUCCESS };
            let target: &mut dyn Write = if e.use_stderr() { err } else { out };
            let _ = write!(target, "{}", e.render());
            return code;
        }
    };
    match dispatch(cli, out) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e:#}");
            exit_code(&e)
        }
    }
}

fn dispatch(cli: Cli, out: &mut dyn Write) -> Result<i32> {
    let threads = threads_from_env().map_err(|e| UsageError(e.to_string()))?;
    let mut sink = Sink {
        out,
        dir: cli.out_dir.as_deref(),
    };
    match cli.command {
        Command::Wdist { v } => {
            let doc = to_json(&DistributionJson::new(&w_dist(&v), Some(&v)))?;
            sink.primary("wdist.json", &doc)?;
            Ok(EXIT_SUCCESS)
        }
        Command::Model { action } => cmd_model(action, threads, &mut sink),
        Command::Seesaw(args) => cmd_seesaw(args, threads, &mut sink),
        Command::Inflate(args) => cmd_inflate(args, &mut sink),
        Command::Local { action } => cmd_local(action, threads, &mut sink),
        Command::Run { config } => {
            let cfg: config::RunConfig = read_json(&config)?;
            let args = cfg.to_args().map_err(|e| UsageError(e.to_string()))?;
            let cli = Cli::try_parse_from(args).map_err(|e| UsageError(e.render().to_string()))?;
            dispatch(cli, sink.out)
        }
    }
}

/// Standard output plus the optional output directory.
struct Sink<'a> {
    out: &'a mut dyn Write,
    dir: Option<&'a Path>,
}

impl Sink<'_> {
    /// Print `text` and save it as `name`.
    fn primary(&mut self, name: &str, text: &str) -> Result<()> {
        self.out.write_all(text.as_bytes())?;
        self.file(name, text.as_bytes())
    }

    fn file(&mut self, name: &str, bytes: &[u8]) -> Result<()> {
        if let Some(dir) = self.dir {
            std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
            let path = dir.join(name);
            std::fs::write(&path, bytes).with_context(|| format!("writing {}", path.display()))?;
        }
        Ok(())
    }
}

fn load_target(t: &TargetArgs) -> Result<(TripartiteDistribution, Option<Visibility>)> {
    match (&t.w, &t.target) {
        (Some(v), _) => Ok((w_dist(v), Some(*v))),
        (None, Some(path)) => Ok((read_json::<DistributionJson>(path)?.to_distribution()?, None)),
        (None, None) => Err(UsageError("a target is required (--w or --target)".into()).into()),
    }
}

fn cmd_model(action: ModelAction, threads: usize, sink: &mut Sink) -> Result<i32> {
    match action {
        ModelAction::Eval { params } => {
            let p = read_json::<ModelParamsJson>(&params)?.to_params()?;
            let d = quantum::distribution(&p)?;
            sink.primary("model_eval.json", &to_json(&DistributionJson::new(&d, None))?)?;
        }
        ModelAction::Fit { v, grid, refine_iters } => {
            let f = quantum::fit(&v, grid, refine_iters)?;
            sink.primary("model_fit.json", &to_json(&FitJson::from(&f))?)?;
        }
        ModelAction::Scan { from, to, step } => {
            let grid = visibility_grid(from.ratio(), to.ratio(), step.ratio())?;
            let chunks: Vec<&[Visibility]> = grid.chunks(SCAN_CHUNK).collect();
            let parts = par_map(chunks.len(), threads, |i| scan_points(chunks[i]));
            let mut fits = Vec::with_capacity(grid.len());
            for p in parts {
                fits.extend(p?);
            }
            let mut buf = Vec::new();
            write_csv(&mut buf, SCAN_SCHEMA, &SCAN_HEADER, &scan_rows(&fits))?;
            sink.primary("scan.csv", std::str::from_utf8(&buf)?)?;
        }
        ModelAction::Chsh { v: Some(v), .. } => {
            #[derive(Serialize)]
            struct Doc {
                v: String,
                chsh_value: f64,
                violated: bool,
                correlators: [[f64; 2]; 2],
                fit: FitJson,
            }
            let f = quantum::fit(&v, quantum::DEFAULT_GRID, quantum::DEFAULT_REFINE_ITERS)?;
            let r = bipartite_chsh(&f.params)?;
            let doc = Doc {
                v: v.to_string(),
                chsh_value: r.value,
                violated: r.value > 2.0,
                correlators: r.correlators,
                fit: (&f).into(),
            };
            sink.primary("model_chsh.json", &to_json(&doc)?)?;
        }
        ModelAction::Chsh { onset, depth, .. } => {
            #[derive(Serialize)]
            struct Doc {
                lo: String,
                hi: String,
                lo_value: f64,
                hi_value: f64,
                depth: usize,
            }
            let bounds = onset.unwrap_or_default();
            let [lo, hi] = bounds[..] else {
                return Err(UsageError("--onset takes two visibilities".into()).into());
            };
            let (lo, hi) = chsh_onset(&lo, &hi, depth)?;
            let doc = Doc {
                lo: lo.to_string(),
                hi: hi.to_string(),
                lo_value: lo.value(),
                hi_value: hi.value(),
                depth,
            };
            sink.primary("model_chsh_onset.json", &to_json(&doc)?)?;
        }
    }
    Ok(EXIT_SUCCESS)
}

#[derive(Serialize)]
struct RestartSummary {
    restart: usize,
    l2: f64,
    sweeps: usize,
    monotone: bool,
}

#[derive(Serialize)]
struct SeesawConfigJson {
    dim: usize,
    restarts: usize,
    seed: u64,
    max_sweeps: usize,
    block_iters: usize,
    extrapolate: bool,
    polish_steps: usize,
    block_tol: f64,
    conv_tol: f64,
}

#[derive(Serialize)]
struct SeesawBundle {
    target: DistributionJson,
    config: SeesawConfigJson,
    best_restart: usize,
    l2: f64,
    restarts: Vec<RestartSummary>,
    testers: [TesterJson; 3],
}

/// Tolerance for the monotonicity flag: the block solves are inexact at
/// about this level.
const MONOTONE_TOL: f64 = 1e-9;

fn cmd_seesaw(args: SeesawArgs, threads: usize, sink: &mut Sink) -> Result<i32> {
    let (target, v) = load_target(&args.target)?;
    let cfg = SeesawConfig {
        wire_dim: args.dim,
        restarts: args.restarts,
        max_sweeps: args.max_sweeps,
        block_iters: args.block_iters,
        extrapolate: !args.no_extrapolate,
        polish_steps: args.polish_steps,
        seed: args.seed,
        ..SeesawConfig::default()
    };
    cfg.validate()?;
    let results = par_map(cfg.restarts, threads, |i| run_restart(&target, &cfg, i))
        .into_iter()
        .collect::<Result<Vec<_>, _>>()?;
    let mut trace_rows = Vec::new();
    for r in &results {
        for (k, l2) in r.trace.iter().enumerate() {
            trace_rows.push(vec![r.restart_index.to_string(), k.to_string(), fmt_f64(*l2)]);
        }
    }
    let restarts = results
        .iter()
        .map(|r| RestartSummary {
            restart: r.restart_index,
            l2: r.l2,
            sweeps: r.sweeps_used,
            monotone: is_monotone(&r.trace, MONOTONE_TOL),
        })
        .collect();
    let best = seesaw::reduce(results).expect("at least one restart");
    let testers = [(&best.testers[0]).into(), (&best.testers[1]).into(), (&best.testers[2]).into()];
    let bundle = SeesawBundle {
        target: DistributionJson::new(&target, v.as_ref()),
        config: SeesawConfigJson {
            dim: cfg.wire_dim,
            restarts: cfg.restarts,
            seed: cfg.seed,
            max_sweeps: cfg.max_sweeps,
            block_iters: cfg.block_iters,
            extrapolate: cfg.extrapolate,
            polish_steps: cfg.polish_steps,
            block_tol: cfg.block_tol,
            conv_tol: cfg.conv_tol,
        },
        best_restart: best.restart_index,
        l2: best.l2,
        restarts,
        testers,
    };
    sink.primary("seesaw.json", &to_json(&bundle)?)?;
    sink.file("seesaw_testers.json", to_json(&bundle.testers)?.as_bytes())?;
    let mut buf = Vec::new();
    write_csv(&mut buf, TRACE_SCHEMA, &TRACE_HEADER, &trace_rows)?;
    sink.file("seesaw_traces.csv", &buf)?;
    Ok(EXIT_SUCCESS)
}

#[derive(Serialize)]
struct CrossCheckJson {
    solver: &'static str,
    program: &'static str,
    verdict: ConicVerdict,
    min_violation: f64,
    agrees: bool,
}

#[derive(Serialize)]
struct InflateJson {
    level: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    v: Option<String>,
    target: [f64; 8],
    max_injectable: usize,
    rows: usize,
    variables: usize,
    reduced: bool,
    verdict: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    residual: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    certificate: Option<CertificateJson>,
    #[serde(skip_serializing_if = "Option::is_none")]
    cross_check: Option<CrossCheckJson>,
}

fn cmd_inflate(args: InflateArgs, sink: &mut Sink) -> Result<i32> {
    if let Some(hi) = args.bisect_to {
        #[derive(Serialize)]
        struct Doc {
            level: usize,
            lo: String,
            hi: String,
            lo_value: f64,
            hi_value: f64,
            depth: usize,
        }
        let lo = args.v.expect("clap requires --v with --bisect-to");
        let (lo, hi) = bisect_threshold(args.level, &lo, &hi, args.depth, args.max_injectable)?;
        let doc = Doc {
            level: args.level,
            lo: lo.to_string(),
            hi: hi.to_string(),
            lo_value: lo.value(),
            hi_value: hi.value(),
            depth: args.depth,
        };
        sink.primary("inflate_bisect.json", &to_json(&doc)?)?;
        return Ok(EXIT_SUCCESS);
    }
    let (target, exact): (TripartiteDistribution, ExactTarget) = match (&args.v, &args.target) {
        (Some(v), _) => (w_dist(v), trinet_core::inflation::exact_w_target(v)),
        (None, Some(path)) => {
            let d = read_json::<DistributionJson>(path)?.to_distribution()?;
            let e = exact_target(&d);
            (d, e)
        }
        (None, None) => return Err(UsageError("a target is required (--v or --target)".into()).into()),
    };
    let scenario = build_scenario(args.level)?;
    let lp = if args.unreduced {
        assemble_lp(&scenario, &exact, args.max_injectable)?
    } else {
        assemble_reduced_lp(&scenario, &exact, args.max_injectable)?
    };
    let verdict = solve(&lp, &SimplexOptions::default())?;
    let mut doc = InflateJson {
        level: args.level,
        v: args.v.map(|v| v.to_string()),
        target: *target.probs(),
        max_injectable: args.max_injectable,
        rows: lp.rows.len(),
        variables: lp.n_vars,
        reduced: lp.is_reduced(),
        verdict: "feasible",
        residual: None,
        certificate: None,
        cross_check: None,
    };
    let mut code = EXIT_SUCCESS;
    match verdict {
        Verdict::Feasible { residual, .. } => doc.residual = Some(residual),
        Verdict::Infeasible(mut cert) => {
            if args.exact_certificate && !(cert.make_exact(&lp) && verify_certificate(&lp, &cert, true)) {
                return Err(NumericalFailure("the certificate did not survive exact verification".into()).into());
            }
            doc.verdict = "infeasible";
            doc.certificate = Some(CertificateJson::new(&lp, &cert));
            code = EXIT_INFEASIBLE;
        }
    }
    if args.cross_check {
        let full = assemble_lp(&scenario, &exact, args.max_injectable)?;
        let report = conic_verdict(&full).context("cross-check")?;
        let expected = if code == EXIT_INFEASIBLE {
            ConicVerdict::Infeasible
        } else {
            ConicVerdict::Feasible
        };
        let agrees = report.verdict == expected;
        doc.cross_check = Some(CrossCheckJson {
            solver: "clarabel",
            program: "full",
            verdict: report.verdict,
            min_violation: report.min_violation,
            agrees,
        });
        if !agrees {
            let text = to_json(&doc)?;
            sink.primary("inflate.json", &text)?;
            return Err(NumericalFailure("the cross-check disagrees with the simplex verdict".into()).into());
        }
    }
    sink.primary("inflate.json", &to_json(&doc)?)?;
    if let Some(c) = &doc.certificate {
        sink.file("certificate.json", to_json(c)?.as_bytes())?;
    }
    Ok(code)
}

fn cmd_local(action: LocalAction, threads: usize, sink: &mut Sink) -> Result<i32> {
    match action {
        LocalAction::Eval { model } => {
            let m = read_json::<LocalModelJson>(&model)?.to_model()?;
            sink.primary("local_eval.json", &to_json(&DistributionJson::new(&m.evaluate(), None))?)?;
            Ok(EXIT_SUCCESS)
        }
        LocalAction::Search {
            target,
            cards,
            restarts,
            seed,
        } => {
            #[derive(Serialize)]
            struct Doc {
                target: DistributionJson,
                cards: [usize; 3],
                restarts: usize,
                seed: u64,
                best_restart: usize,
                l2: f64,
                distribution: [f64; 8],
                model: LocalModelJson,
            }
            let (t, v) = load_target(&target)?;
            let [ca, cb, cg] = cards[..] else {
                return Err(UsageError("--cards takes three values".into()).into());
            };
            if ca == 0 || cb == 0 || cg == 0 || restarts == 0 {
                return Err(UsageError("cardinalities and restarts must be positive".into()).into());
            }
            let all = par_map(restarts, threads, |i| search_restart(&t, (ca, cb, cg), seed, i));
            let best = local::reduce(all).expect("at least one restart");
            let doc = Doc {
                target: DistributionJson::new(&t, v.as_ref()),
                cards: [ca, cb, cg],
                restarts,
                seed,
                best_restart: best.restart_index,
                l2: best.l2,
                distribution: *best.model.evaluate().probs(),
                model: (&best.model).into(),
            };
            sink.primary("local_search.json", &to_json(&doc)?)?;
            Ok(EXIT_SUCCESS)
        }
        LocalAction::VerifyGolden => {
            #[derive(Serialize)]
            struct Doc {
                passed: bool,
                l2_stated: f64,
                l2_quantum: f64,
                stated_tol: f64,
                quantum_tol: f64,
                distribution: [f64; 8],
                stated: [f64; 8],
                model: LocalModelJson,
            }
            let r = local::verify_golden()?;
            let doc = Doc {
                passed: r.passed,
                l2_stated: r.l2_stated,
                l2_quantum: r.l2_quantum,
                stated_tol: local::GOLDEN_STATED_TOL,
                quantum_tol: local::GOLDEN_QUANTUM_TOL,
                distribution: *r.distribution.probs(),
                stated: local::GOLDEN_STATED,
                model: (&local::golden_model()).into(),
            };
            sink.primary("verify_local.json", &to_json(&doc)?)?;
            if !r.passed {
                return Err(NumericalFailure("the published local model did not reproduce its distribution".into()).into());
            }
            Ok(EXIT_SUCCESS)
        }
    }
}
