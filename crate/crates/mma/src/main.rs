use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use mma::conditions::{self, Verdict};
use mma::config::{ExperimentConfig, PathFormat};
use mma::error::Error;
use mma::io::{self, Manifest, ManifestFile, TimedReport};
use mma::levy_basis::BorelQuery;
use mma::paths::{sup_norm, CadlagPath};
use mma::pointproc;
use mma::simulate::{self, EnsembleSettings};
use mma::tails::{self, LimitFunctional};

/// Simulation and numerical verification of heavy-tailed mixed moving
/// average processes.
#[derive(Parser)]
#[command(name = "mma", version, about)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args)]
struct Common {
    /// Experiment configuration (TOML)
    #[arg(long)]
    config: PathBuf,
    /// Output directory (overrides run.out from the config)
    #[arg(long)]
    out: Option<PathBuf>,
    /// Master seed (overrides run.seed)
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads; 0 = library default. Never affects outputs.
    #[arg(long)]
    threads: Option<usize>,
    /// Proceed even when condition checks fail (recorded in the manifest)
    #[arg(long)]
    force: bool,
}

#[derive(Subcommand)]
enum Cmd {
    /// Certify existence, regular-variation, and small-increment conditions
    Check(Common),
    /// Draw a path ensemble and store it with a checksummed manifest
    Simulate(Common),
    /// Tail-index, limit-measure, and relative-compactness estimates from a
    /// stored ensemble
    Estimate(Common),
    /// Exceedance point process and Poisson-limit diagnostics from a stored
    /// ensemble
    Pointprocess(Common),
}

const EXIT_OK: i32 = 0;
const EXIT_CONFIG: i32 = 1;
const EXIT_FAIL: i32 = 2;
const EXIT_INCONCLUSIVE: i32 = 3;
const EXIT_IO: i32 = 4;

fn exit_for(e: &Error) -> i32 {
    match e {
        Error::Config(_) | Error::Domain(_) | Error::NotApplicable(_) => EXIT_CONFIG,
        Error::Precondition { .. } => EXIT_FAIL,
        Error::Io(_) => EXIT_IO,
    }
}

fn main() {
    let cli = Cli::parse();
    let code = match &cli.cmd {
        Cmd::Check(c) => run(c, cmd_check),
        Cmd::Simulate(c) => run(c, cmd_simulate),
        Cmd::Estimate(c) => run(c, cmd_estimate),
        Cmd::Pointprocess(c) => run(c, cmd_pointprocess),
    };
    std::process::exit(code);
}

struct Ctx {
    cfg: ExperimentConfig,
    config_path: PathBuf,
    out: PathBuf,
    seed: u64,
    force: bool,
}

fn run(common: &Common, f: fn(&Ctx) -> i32) -> i32 {
    let cfg = match ExperimentConfig::load(&common.config) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("config error: {e}");
            return exit_for(&e);
        }
    };
    let threads = common.threads.unwrap_or(cfg.run.threads);
    if threads > 0 {
        // ignore the error if a global pool already exists
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global();
    }
    let ctx = Ctx {
        out: common
            .out
            .clone()
            .unwrap_or_else(|| PathBuf::from(&cfg.run.out)),
        seed: common.seed.unwrap_or(cfg.run.seed),
        force: common.force,
        config_path: common.config.clone(),
        cfg,
    };
    if let Err(e) = std::fs::create_dir_all(&ctx.out) {
        eprintln!("cannot create output directory: {e}");
        return EXIT_IO;
    }
    f(&ctx)
}

fn checked_reports(ctx: &Ctx) -> Result<Vec<TimedReport>, Error> {
    let (quad, kernel) = ctx.cfg.to_domain()?;
    let mut timed = Vec::new();
    let mut push_batch = |reports: Vec<conditions::ConditionReport>, secs: f64| {
        let per = secs / reports.len().max(1) as f64;
        for report in reports {
            timed.push(TimedReport {
                report,
                wall_time_s: per,
            });
        }
    };
    let t0 = Instant::now();
    let existence = conditions::check_existence(&quad, &kernel)?;
    push_batch(existence, t0.elapsed().as_secs_f64());
    let alpha = ctx.cfg.alpha;
    let t0 = Instant::now();
    let rv = conditions::check_regvar_sufficient(&quad, &kernel, alpha)?;
    push_batch(vec![rv], t0.elapsed().as_secs_f64());
    let t0 = Instant::now();
    let xt2 = conditions::check_xt2(&quad, &kernel, Some(alpha))?;
    push_batch(vec![xt2], t0.elapsed().as_secs_f64());
    let t0 = Instant::now();
    let fd = conditions::check_fdelta_vanishing(&quad, &kernel, alpha)?;
    push_batch(vec![fd], t0.elapsed().as_secs_f64());
    if matches!(kernel, mma::kernels::Kernel::SupOu { .. }) {
        let t0 = Instant::now();
        let supou = conditions::check_supou(&quad, &kernel, Some(alpha))?;
        push_batch(supou, t0.elapsed().as_secs_f64());
    }
    Ok(timed)
}

fn cmd_check(ctx: &Ctx) -> i32 {
    let timed = match checked_reports(ctx) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("check: {e}");
            return exit_for(&e);
        }
    };
    for t in &timed {
        println!(
            "{}\t{}\tvalue={}\terror_bound={}\t{}",
            t.report.id, t.report.verdict, t.report.value, t.report.error_bound, t.report.detail
        );
    }
    if let Err(e) = io::write_jsonl(&timed, &ctx.out.join("conditions.jsonl")) {
        eprintln!("check: {e}");
        return exit_for(&e);
    }
    let reports: Vec<_> = timed.into_iter().map(|t| t.report).collect();
    conditions::exit_code(&reports)
}

fn cmd_simulate(ctx: &Ctx) -> i32 {
    let (quad, kernel) = match ctx.cfg.to_domain() {
        Ok(d) => d,
        Err(e) => {
            eprintln!("simulate: {e}");
            return exit_for(&e);
        }
    };
    let mut warnings = Vec::new();
    match checked_reports(ctx) {
        Ok(timed) => {
            let reports: Vec<_> = timed.into_iter().map(|t| t.report).collect();
            let code = conditions::exit_code(&reports);
            if code != EXIT_OK {
                let bad: Vec<String> = reports
                    .iter()
                    .filter(|r| !matches!(r.verdict, Verdict::Pass | Verdict::NotApplicable))
                    .map(|r| format!("{} {}", r.id, r.verdict))
                    .collect();
                if ctx.force {
                    let w = format!("forced past condition checks: {}", bad.join(", "));
                    eprintln!("warning: {w}");
                    warnings.push(w);
                } else {
                    eprintln!("simulate: condition checks did not pass ({})", bad.join(", "));
                    return code;
                }
            }
        }
        Err(e) => {
            if ctx.force {
                let w = format!("forced past condition-check error: {e}");
                eprintln!("warning: {w}");
                warnings.push(w);
            } else {
                eprintln!("simulate: {e}");
                return exit_for(&e);
            }
        }
    }
    let grid = match ctx.cfg.grid_times() {
        Ok(g) => g,
        Err(e) => {
            eprintln!("simulate: {e}");
            return exit_for(&e);
        }
    };
    let s_max = if ctx.cfg.ensemble.s_max > 0.0 {
        ctx.cfg.ensemble.s_max
    } else {
        simulate::auto_s_max(&quad, &kernel, ctx.cfg.ensemble.eps)
    };
    let settings = EnsembleSettings {
        n_paths: ctx.cfg.ensemble.n,
        grid,
        eps: ctx.cfg.ensemble.eps,
        s_max,
        force: true, // gating already handled above, with --force recorded
    };
    let ensemble = match simulate::simulate_ensemble(&quad, &kernel, &settings, ctx.seed) {
        Ok(e) => e,
        Err(e) => {
            eprintln!("simulate: {e}");
            return exit_for(&e);
        }
    };
    let binary = ctx.cfg.run.format == PathFormat::Bin;
    let mut files = Vec::new();
    for (i, dec) in ensemble.iter().enumerate() {
        let name = io::path_file_name(i, binary);
        let file = ctx.out.join(&name);
        if let Err(e) = io::write_path_file(&dec.total, &file, binary) {
            eprintln!("simulate: {e}");
            return exit_for(&e);
        }
        match io::sha256_file(&file) {
            Ok(sha256) => files.push(ManifestFile { name, sha256 }),
            Err(e) => {
                eprintln!("simulate: {e}");
                return exit_for(&e);
            }
        }
    }
    let config_sha256 = match std::fs::read(&ctx.config_path) {
        Ok(bytes) => io::sha256_hex(&bytes),
        Err(_) => String::new(),
    };
    let manifest = Manifest {
        config_sha256,
        seed: ctx.seed,
        n_paths: ensemble.len(),
        eps: ctx.cfg.ensemble.eps,
        s_max,
        format: if binary { "bin".into() } else { "tsv".into() },
        forced: !warnings.is_empty(),
        warnings,
        files,
    };
    if let Err(e) = manifest.write(&ctx.out) {
        eprintln!("simulate: {e}");
        return exit_for(&e);
    }
    println!(
        "simulated {} paths (seed {}, s_max {}, eps {}) into {}",
        ensemble.len(),
        ctx.seed,
        s_max,
        ctx.cfg.ensemble.eps,
        ctx.out.display()
    );
    EXIT_OK
}

fn load_ensemble(out: &Path) -> Result<Vec<CadlagPath>, Error> {
    let manifest = Manifest::read(out)?;
    let mut paths = Vec::with_capacity(manifest.files.len());
    for f in &manifest.files {
        let file = out.join(&f.name);
        let sha = io::sha256_file(&file)?;
        if sha != f.sha256 {
            return Err(Error::Config(format!(
                "{}: checksum mismatch against manifest",
                f.name
            )));
        }
        paths.push(io::read_path_file(&file)?);
    }
    Ok(paths)
}

fn cmd_estimate(ctx: &Ctx) -> i32 {
    let (quad, kernel) = match ctx.cfg.to_domain() {
        Ok(d) => d,
        Err(e) => {
            eprintln!("estimate: {e}");
            return exit_for(&e);
        }
    };
    let paths = match load_ensemble(&ctx.out) {
        Ok(p) => p,
        Err(e) => {
            eprintln!("estimate: {e}");
            return exit_for(&e);
        }
    };
    if paths.is_empty() {
        eprintln!("estimate: ensemble is empty");
        return EXIT_INCONCLUSIVE;
    }
    let n = paths.len();
    let alpha = ctx.cfg.alpha;
    let est = &ctx.cfg.estimate;
    let marginals: Vec<_> = paths.iter().map(|p| p.values[0].clone()).collect();
    let marginal_norms: Vec<f64> = marginals.iter().map(|m| m.norm()).collect();
    let mut sups: Vec<f64> = paths.iter().map(|p| sup_norm(p).0).collect();
    let mut records: Vec<serde_json::Value> = Vec::new();

    let k = if est.hill_k > 0 {
        est.hill_k
    } else {
        tails::default_hill_k(n)
    };
    match tails::hill(&marginal_norms, k) {
        Ok(h) => records.push(json!({"record": "hill", "estimate": h})),
        Err(e) => {
            eprintln!("estimate: hill estimator: {e}");
            return EXIT_INCONCLUSIVE;
        }
    }

    let a_n = tails::default_a_n(&quad.nu, alpha, n);
    for &r in &est.radial_rs {
        let functional = LimitFunctional::Radial { r };
        let theory = match tails::mu_x_query(&quad, &kernel, alpha, &functional) {
            Ok(q) => q,
            Err(e) => {
                eprintln!("estimate: limit measure at r={r}: {e}");
                return exit_for(&e);
            }
        };
        let empirical =
            match tails::empirical_tail_measure(&marginals, a_n, &BorelQuery::RadiusAbove(r)) {
                Ok(v) => v,
                Err(e) => {
                    eprintln!("estimate: empirical measure at r={r}: {e}");
                    return exit_for(&e);
                }
            };
        let p_hat = empirical / n as f64;
        let stderr = (n as f64 * p_hat * (1.0 - p_hat)).sqrt();
        records.push(json!({
            "record": "limit_measure_radial",
            "r": r,
            "a_n": a_n,
            "empirical": empirical,
            "empirical_stderr": stderr,
            "theoretical": theory.value,
            "theoretical_error_bound": theory.error_bound,
        }));
    }

    for &delta in &est.relcomp_deltas {
        match tails::relcomp_diagnostics(&paths, a_n, est.relcomp_eps, delta) {
            Ok(r) => records.push(json!({"record": "relcomp", "rates": r})),
            Err(e) => {
                eprintln!("estimate: relative-compactness rates at delta={delta}: {e}");
                return exit_for(&e);
            }
        }
    }

    let u = if est.u > 0.0 {
        est.u
    } else {
        // default harvest threshold: 95% quantile of the sup-norms
        sups.sort_by(f64::total_cmp);
        sups[((n - 1) as f64 * 0.95).floor() as usize].max(f64::MIN_POSITIVE)
    };
    let harvested = match tails::spectral_harvest(&paths, u) {
        Ok(h) => h,
        Err(e) => {
            eprintln!("estimate: spectral harvest: {e}");
            return exit_for(&e);
        }
    };
    let binary = ctx.cfg.run.format == PathFormat::Bin;
    for (i, s) in harvested.iter().enumerate() {
        let name = format!(
            "spectral_{i:06}.{}",
            if binary { "bin" } else { "tsv" }
        );
        if let Err(e) = io::write_path_file(&s.normalized_path, &ctx.out.join(&name), binary) {
            eprintln!("estimate: {e}");
            return exit_for(&e);
        }
        records.push(json!({
            "record": "spectral_sample",
            "file": name,
            "radius": s.radius,
            "argmax_time": s.argmax_time,
            "direction_at_max": s.direction_at_max.as_slice(),
        }));
    }
    records.push(json!({
        "record": "spectral_summary",
        "threshold": u,
        "harvested": harvested.len(),
        "n": n,
    }));

    if let Err(e) = io::write_jsonl(&records, &ctx.out.join("estimate.jsonl")) {
        eprintln!("estimate: {e}");
        return exit_for(&e);
    }
    println!(
        "estimated tails over {n} paths: hill k={k}, a_n={a_n}, {} spectral samples",
        harvested.len()
    );
    EXIT_OK
}

fn cmd_pointprocess(ctx: &Ctx) -> i32 {
    let (quad, _kernel) = match ctx.cfg.to_domain() {
        Ok(d) => d,
        Err(e) => {
            eprintln!("pointprocess: {e}");
            return exit_for(&e);
        }
    };
    let paths = match load_ensemble(&ctx.out) {
        Ok(p) => p,
        Err(e) => {
            eprintln!("pointprocess: {e}");
            return exit_for(&e);
        }
    };
    let n = paths.len();
    let a_n = tails::default_a_n(&quad.nu, ctx.cfg.alpha, n.max(1));
    let pp = match pointproc::build_point_process(&paths, a_n, ctx.cfg.pointprocess.u) {
        Ok(p) => p,
        Err(e) => {
            eprintln!("pointprocess: {e}");
            return exit_for(&e);
        }
    };
    let mut tsv = String::from("replica\tradius\targmax_time\tdirection\tmarginal\n");
    for p in &pp.points {
        let dir: Vec<String> = p.direction.iter().map(|x| format!("{x}")).collect();
        let mrg: Vec<String> = p.marginal.iter().map(|x| format!("{x}")).collect();
        tsv.push_str(&format!(
            "{}\t{}\t{}\t{}\t{}\n",
            p.replica,
            p.radius,
            p.argmax_time,
            dir.join(","),
            mrg.join(",")
        ));
    }
    if let Err(e) = std::fs::write(ctx.out.join("points.tsv"), tsv) {
        eprintln!("pointprocess: {e}");
        return EXIT_IO;
    }
    match pointproc::poisson_limit_diagnostics(&pp, &ctx.cfg.pointprocess.shells) {
        Ok(reports) => {
            if let Err(e) = io::write_jsonl(&reports, &ctx.out.join("poisson_diagnostics.jsonl")) {
                eprintln!("pointprocess: {e}");
                return exit_for(&e);
            }
            for r in &reports {
                println!(
                    "shell ({}, {}]: count={} dispersion={:.4}",
                    r.shell.0, r.shell.1, r.count, r.dispersion
                );
            }
            EXIT_OK
        }
        Err(Error::NotApplicable(msg)) => {
            eprintln!("pointprocess: inconclusive: {msg}");
            EXIT_INCONCLUSIVE
        }
        Err(e) => {
            eprintln!("pointprocess: {e}");
            exit_for(&e)
        }
    }
}
