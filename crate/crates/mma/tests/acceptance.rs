//! Acceptance gate: one test per release criterion, each printing a single
//! pass/fail line. Run with `cargo test --test acceptance -- --nocapture`
//! to see the lines.

use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use rand::Rng;

use mma::conditions::{self, ConditionId, Verdict};
use mma::kernels::{fdelta_alpha_integral, IntegralOutcome, Kernel};
use mma::levy_basis::{
    compute_triplet, BorelQuery, GeneratingQuadruple, LevyMeasureSpec, MixingAtom,
    MixingMeasureSpec, ScalarDist, SpectralAtom, TripletSettings,
};
use mma::paths::{modulus_w, modulus_wpp, sup_norm, CadlagPath, PathJump};
use mma::pointproc::{build_point_process, pearson, poisson_limit_diagnostics};
use mma::rng::replica_rng;
use mma::simulate::{
    path_direct, path_ode, simulate_ensemble, simulate_marginals, CloudPoint, EnsembleSettings,
    PoissonCloud,
};
use mma::tails::{
    default_a_n, default_hill_k, empirical_tail_measure, hill, mu_x_query, relcomp_diagnostics,
    LimitFunctional,
};

fn verdict(criterion: usize, ok: bool, detail: &str) {
    println!(
        "acceptance criterion {criterion}: {} ({detail})",
        if ok { "pass" } else { "FAIL" }
    );
    assert!(ok, "criterion {criterion} failed: {detail}");
}

/// Compound-Poisson supOU toy: d = 1, pi = delta_{-1}, nu = delta_1, and
/// gamma chosen so the finite-variation drift vanishes.
fn toy_quadruple() -> GeneratingQuadruple {
    GeneratingQuadruple {
        gamma: DVector::from_element(1, 1.0),
        sigma: DMatrix::zeros(1, 1),
        nu: LevyMeasureSpec::FiniteDiscrete {
            atoms: vec![(DVector::from_element(1, 1.0), 1.0)],
        },
        pi: MixingMeasureSpec::dirac(MixingAtom::from_scalar(1.0, 1)),
    }
}

/// Symmetric Pareto(alpha) radial driver with unit tail constant and
/// jumps bounded below by 1; supOU mixing pi = delta_{-1}.
fn pareto_quadruple(alpha: f64) -> GeneratingQuadruple {
    GeneratingQuadruple {
        gamma: DVector::zeros(1),
        sigma: DMatrix::zeros(1, 1),
        nu: LevyMeasureSpec::ParetoRadial {
            alpha,
            c: 1.0,
            r_min: 1.0,
            spectral: vec![
                SpectralAtom {
                    theta: DVector::from_element(1, 1.0),
                    p: 0.5,
                },
                SpectralAtom {
                    theta: DVector::from_element(1, -1.0),
                    p: 0.5,
                },
            ],
        },
        pi: MixingMeasureSpec::dirac(MixingAtom::from_scalar(1.0, 1)),
    }
}

fn gamma_mixing_quadruple(shape: f64) -> GeneratingQuadruple {
    GeneratingQuadruple {
        gamma: DVector::from_element(1, 1.0),
        sigma: DMatrix::zeros(1, 1),
        nu: LevyMeasureSpec::FiniteDiscrete {
            atoms: vec![(DVector::from_element(1, 1.0), 1.0)],
        },
        pi: MixingMeasureSpec::ScalarFamily {
            dim: 1,
            dist: ScalarDist::Gamma { shape, rate: 1.0 },
        },
    }
}

#[test]
fn criterion_1_triplet_oracle() {
    let start = Instant::now();
    let quad = toy_quadruple();
    let kernel = Kernel::SupOu { dim: 1 };
    let triplet = compute_triplet(&quad, &kernel, &TripletSettings::default()).unwrap();
    let mut worst = 0.0f64;
    for b in [(-1.0f64).exp(), (-2.0f64).exp(), 0.5] {
        let (value, _err) = triplet
            .nu_int(&BorelQuery::Rectangle {
                lo: vec![b],
                hi: vec![1.0],
            })
            .unwrap();
        worst = worst.max((value - (-b.ln())).abs());
    }
    let elapsed = start.elapsed().as_secs_f64();
    verdict(
        1,
        worst <= 1e-8 && elapsed < 1.0,
        &format!("max |nu_int - (-ln b)| = {worst:.3e}, {elapsed:.3}s"),
    );
}

#[test]
fn criterion_2_representation_equivalence() {
    use rayon::prelude::*;
    let start = Instant::now();
    let quad = toy_quadruple();
    let kernel = Kernel::SupOu { dim: 1 };
    let grid: Vec<f64> = (0..=25).map(|i| i as f64 / 25.0).collect();
    let mut rng = replica_rng(20260826, 0);
    let clouds: Vec<PoissonCloud> = (0..100)
        .map(|_| {
            let n_points = rng.gen_range(0..=50);
            let mut points: Vec<CloudPoint> = (0..n_points)
                .map(|_| CloudPoint {
                    x: DVector::from_element(1, rng.gen_range(-2.0..2.0)),
                    a: MixingAtom::from_scalar(rng.gen_range(0.5..2.0), 1),
                    time: rng.gen_range(-5.0..1.0),
                })
                .collect();
            points.sort_by(|a, b| a.time.total_cmp(&b.time));
            points.dedup_by(|a, b| a.time == b.time);
            PoissonCloud {
                points,
                window: (-5.0, 1.0),
                eps: 1.0,
            }
        })
        .collect();
    let worst = clouds
        .par_iter()
        .map(|cloud| {
            let direct = path_direct(cloud, &kernel, &quad, &grid).unwrap();
            let ode = path_ode(cloud, &kernel, &quad, &grid).unwrap();
            assert_eq!(direct.jumps.len(), ode.jumps.len());
            let mut worst = 0.0f64;
            for (a, b) in direct.values.iter().zip(&ode.values) {
                worst = worst.max((a - b).norm());
            }
            for (a, b) in direct.jumps.iter().zip(&ode.jumps) {
                worst = worst.max((&a.left - &b.left).norm());
                worst = worst.max((&a.right - &b.right).norm());
            }
            worst
        })
        .reduce(|| 0.0, f64::max);
    let elapsed = start.elapsed().as_secs_f64();
    verdict(
        2,
        worst <= 1e-8 && elapsed < 10.0,
        &format!("sup-norm gap = {worst:.3e}, {elapsed:.3}s"),
    );
}

#[test]
fn criterion_3_fdelta_closed_form() {
    let quad = toy_quadruple();
    let kernel = Kernel::SupOu { dim: 1 };
    let mut worst = 0.0f64;
    let mut monotone = true;
    for alpha in [0.8, 1.5] {
        let mut prev = f64::INFINITY;
        for delta in [0.2, 0.1, 0.05] {
            let out = fdelta_alpha_integral(&kernel, &quad.pi, delta, alpha, 1e-10).unwrap();
            let value = match out {
                IntegralOutcome::Value(q) => q.value,
                IntegralOutcome::Divergent { .. } => f64::INFINITY,
            };
            let expected = (1.0 - (-delta).exp()).powf(alpha) * (1.0 + 1.0 / alpha);
            worst = worst.max((value - expected).abs());
            monotone &= value < prev;
            prev = value;
        }
    }
    verdict(
        3,
        worst <= 1e-6 && monotone,
        &format!("max closed-form gap = {worst:.3e}, strictly decreasing: {monotone}"),
    );
}

#[test]
fn criterion_4_condition_truth_table() {
    let kernel = Kernel::SupOu { dim: 1 };

    let good = conditions::check_all(&gamma_mixing_quadruple(2.0), &kernel, Some(1.5)).unwrap();
    let all_pass = good
        .iter()
        .all(|r| matches!(r.verdict, Verdict::Pass | Verdict::NotApplicable));
    let good_exit = conditions::exit_code(&good);

    let heavy = conditions::check_all(&gamma_mixing_quadruple(0.5), &kernel, Some(1.5)).unwrap();
    let k2r_divergent = heavy
        .iter()
        .any(|r| r.id == ConditionId::SupouK2R && r.verdict == Verdict::Divergent);
    let heavy_exit = conditions::exit_code(&heavy);

    let indicator = Kernel::IndicatorTest {
        dim: 1,
        lo: 0.0,
        hi: 1.0,
    };
    let ind = conditions::check_all(&toy_quadruple(), &indicator, Some(1.5)).unwrap();
    let fd_fails = ind
        .iter()
        .any(|r| r.id == ConditionId::FdVanish && r.verdict == Verdict::Fail);
    let ind_exit = conditions::exit_code(&ind);

    verdict(
        4,
        all_pass && good_exit == 0 && k2r_divergent && heavy_exit == 2 && fd_fails && ind_exit == 2,
        &format!(
            "gamma(2) all pass (exit {good_exit}); gamma(0.5) K2R divergent: {k2r_divergent} \
             (exit {heavy_exit}); indicator FD-VANISH fail: {fd_fails} (exit {ind_exit})"
        ),
    );
}

#[test]
fn criterion_5_marginal_tail_law() {
    let start = Instant::now();
    let alpha = 1.5;
    let quad = pareto_quadruple(alpha);
    let kernel = Kernel::SupOu { dim: 1 };
    let n = 100_000usize;
    let a_n = default_a_n(&quad.nu, alpha, n);

    let marginals = simulate_marginals(&quad, &kernel, n, 0.0, 1.0, 0.0, 1).unwrap();
    let mut tail_ok = true;
    let mut tail_detail = String::new();
    for r in [1.0, 2.0, 4.0] {
        let theory = mu_x_query(&quad, &kernel, alpha, &LimitFunctional::Radial { r })
            .unwrap()
            .value;
        let empirical =
            empirical_tail_measure(&marginals, a_n, &BorelQuery::RadiusAbove(r)).unwrap();
        let p = theory / n as f64;
        let sigma = (n as f64 * p * (1.0 - p)).sqrt();
        let ok = (empirical - theory).abs() <= 3.0 * sigma;
        tail_ok &= ok;
        tail_detail.push_str(&format!(
            "r={r}: emp {empirical:.2} vs mu {theory:.3} (3sigma {:.2}); ",
            3.0 * sigma
        ));
    }

    let mut hill_hits = 0usize;
    for seed in 0..20u64 {
        let xs = simulate_marginals(&quad, &kernel, n, 0.0, 1.0, 0.0, 100 + seed).unwrap();
        let norms: Vec<f64> = xs.iter().map(|v| v.norm()).collect();
        let est = hill(&norms, default_hill_k(n)).unwrap();
        if (1.35..=1.65).contains(&est.alpha_hat) {
            hill_hits += 1;
        }
    }
    let elapsed = start.elapsed().as_secs_f64();
    verdict(
        5,
        tail_ok && hill_hits >= 18 && elapsed < 300.0,
        &format!("{tail_detail}hill in band {hill_hits}/20, {elapsed:.1}s"),
    );
}

fn random_step_path(rng: &mut impl Rng) -> CadlagPath {
    let d = rng.gen_range(1..=2);
    let m = rng.gen_range(2..=20);
    let grid: Vec<f64> = (0..m).map(|i| i as f64 / (m - 1) as f64).collect();
    let values: Vec<DVector<f64>> = (0..m)
        .map(|_| DVector::from_fn(d, |_, _| rng.gen_range(-3.0..3.0)))
        .collect();
    let mut jumps: Vec<PathJump> = (0..rng.gen_range(0..=15))
        .map(|_| PathJump {
            time: rng.gen_range(0.001..0.999),
            left: DVector::from_fn(d, |_, _| rng.gen_range(-3.0..3.0)),
            right: DVector::from_fn(d, |_, _| rng.gen_range(-3.0..3.0)),
        })
        .collect();
    jumps.sort_by(|a, b| a.time.total_cmp(&b.time));
    jumps.dedup_by(|a, b| a.time == b.time);
    CadlagPath { grid, values, jumps }
}

#[test]
fn criterion_6_moduli_against_brute_force() {
    let mut rng = replica_rng(6, 0);
    let mut checked = 0usize;
    for _ in 0..1000 {
        let p = random_step_path(&mut rng);
        let ev = p.events();
        let m = ev.len();
        assert!(m <= 50);

        // sup-norm: O(m) scan
        let brute_sup = ev
            .iter()
            .map(|e| e.value.norm())
            .fold(0.0f64, f64::max);
        assert_eq!(sup_norm(&p).0, brute_sup);

        // w on [lo, hi): O(m^2) over all event pairs in the window
        let (lo, hi) = (0.25, 0.75);
        let mut brute_w = 0.0f64;
        for i in 0..m {
            for j in 0..m {
                if ev[i].time >= lo && ev[i].time < hi && ev[j].time >= lo && ev[j].time < hi {
                    brute_w = brute_w.max((ev[i].value - ev[j].value).norm());
                }
            }
        }
        assert_eq!(modulus_w(&p, (lo, hi)), brute_w);

        // w'' at delta: O(m^3) over ordered event triples
        let delta = 0.3;
        let mut brute_wpp = 0.0f64;
        for i in 0..m {
            for mid in (i + 1)..m {
                for k in (mid + 1)..m {
                    if ev[k].time - ev[i].time <= delta {
                        let a = (ev[mid].value - ev[i].value).norm();
                        let b = (ev[k].value - ev[mid].value).norm();
                        brute_wpp = brute_wpp.max(a.min(b));
                    }
                }
            }
        }
        assert_eq!(modulus_wpp(&p, delta), brute_wpp);
        checked += 1;
    }
    verdict(6, checked == 1000, &format!("{checked}/1000 paths match exactly"));
}

fn pareto_ensemble(n: usize, grid_points: usize, seed: u64) -> Vec<CadlagPath> {
    let quad = pareto_quadruple(1.5);
    let kernel = Kernel::SupOu { dim: 1 };
    let grid: Vec<f64> = (0..=grid_points)
        .map(|i| i as f64 / grid_points as f64)
        .collect();
    let settings = EnsembleSettings {
        n_paths: n,
        grid,
        eps: 1.0,
        s_max: 0.0,
        force: true,
    };
    simulate_ensemble(&quad, &kernel, &settings, seed)
        .unwrap()
        .into_iter()
        .map(|d| d.total)
        .collect()
}

#[test]
fn criterion_7_relative_compactness_decay() {
    let n = 10_000usize;
    let paths = pareto_ensemble(n, 32, 7);
    let a_n = default_a_n(&pareto_quadruple(1.5).nu, 1.5, n);
    let eps = 0.5;
    let mut prev: Option<mma::tails::RelcompRates> = None;
    let mut ok = true;
    let mut detail = String::new();
    for delta in [0.1, 0.05, 0.025] {
        let rates = relcomp_diagnostics(&paths, a_n, eps, delta).unwrap();
        detail.push_str(&format!(
            "d={delta}: w0 {:.2} w1 {:.2} wpp {:.2}; ",
            rates.w_start.rate, rates.w_end.rate, rates.wpp.rate
        ));
        if let Some(p) = &prev {
            let fits = |cur: &mma::tails::EmpiricalRate, before: &mma::tails::EmpiricalRate| {
                cur.rate <= before.rate + 2.0 * (cur.stderr.powi(2) + before.stderr.powi(2)).sqrt()
            };
            ok &= fits(&rates.w_start, &p.w_start)
                && fits(&rates.w_end, &p.w_end)
                && fits(&rates.wpp, &p.wpp);
        }
        prev = Some(rates);
    }
    verdict(7, ok, detail.trim_end_matches("; "));
}

#[test]
fn criterion_8_poisson_limit_diagnostics() {
    let n = 10_000usize;
    let a_n = default_a_n(&pareto_quadruple(1.5).nu, 1.5, n);
    let shells = [(0.125, 0.25), (0.25, 0.5)];
    let mut hits_dispersion = 0usize;
    let mut hits_corr = 0usize;
    for seed in 0..20u64 {
        let paths = pareto_ensemble(n, 16, 800 + seed);
        let pp = build_point_process(&paths, a_n, 0.0625).unwrap();
        let reports = poisson_limit_diagnostics(&pp, &shells).unwrap();
        if reports
            .iter()
            .all(|r| (0.8..=1.2).contains(&r.dispersion))
        {
            hits_dispersion += 1;
        }
        let xs: Vec<f64> = reports[0].block_counts.iter().map(|&c| c as f64).collect();
        let ys: Vec<f64> = reports[1].block_counts.iter().map(|&c| c as f64).collect();
        if pearson(&xs, &ys).abs() <= 0.1 {
            hits_corr += 1;
        }
    }
    verdict(
        8,
        hits_dispersion >= 18 && hits_corr >= 18,
        &format!("dispersion in band {hits_dispersion}/20, correlation in band {hits_corr}/20"),
    );
}

fn write_pipeline_config(dir: &std::path::Path) -> std::path::PathBuf {
    let cfg = r#"
alpha = 1.5

[quadruple]
gamma = [0.0]
sigma = [[0.0]]

[quadruple.nu]
family = "pareto_radial"
alpha = 1.5
c = 1.0
r_min = 1.0
spectral = [
  { theta = [1.0], p = 0.5 },
  { theta = [-1.0], p = 0.5 },
]

[quadruple.pi]
family = "finite_discrete"
atoms = [{ matrix = [[-1.0]], p = 1.0 }]

[kernel]
family = "supou"

[grid]
step = 0.125

[ensemble]
n = 48

[run]
seed = 9
out = "unused"

[pointprocess]
u = 0.01
shells = [[0.01, 0.1], [0.1, 1.0]]
"#;
    let path = dir.join("experiment.toml");
    std::fs::write(&path, cfg).unwrap();
    path
}

fn run_pipeline(bin: &str, config: &std::path::Path, out: &std::path::Path, threads: usize) {
    for sub in ["simulate", "estimate", "pointprocess"] {
        let status = std::process::Command::new(bin)
            .args([
                sub,
                "--config",
                config.to_str().unwrap(),
                "--out",
                out.to_str().unwrap(),
                "--threads",
                &threads.to_string(),
            ])
            .stdout(std::process::Stdio::null())
            .stderr(std::process::Stdio::inherit())
            .status()
            .unwrap();
        assert!(status.success(), "{sub} failed");
    }
}

fn dir_digest(dir: &std::path::Path) -> Vec<(String, String)> {
    let mut entries: Vec<(String, String)> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            let name = e.file_name().into_string().unwrap();
            let sha = mma::io::sha256_hex(&std::fs::read(e.path()).unwrap());
            (name, sha)
        })
        .collect();
    entries.sort();
    entries
}

#[test]
fn criterion_9_determinism() {
    let bin = env!("CARGO_BIN_EXE_mma");
    let tmp = tempfile::tempdir().unwrap();
    let config = write_pipeline_config(tmp.path());
    let digests: Vec<_> = [("a", 1), ("b", 1), ("c", 8)]
        .iter()
        .map(|(name, threads)| {
            let out = tmp.path().join(name);
            run_pipeline(bin, &config, &out, *threads);
            dir_digest(&out)
        })
        .collect();
    let identical = digests[0] == digests[1] && digests[0] == digests[2];
    verdict(
        9,
        identical && !digests[0].is_empty(),
        &format!(
            "{} output files byte-identical across repeat run and threads 1 vs 8",
            digests[0].len()
        ),
    );
}

#[test]
fn criterion_10_homogeneity() {
    let alpha = 1.5;
    let quad = pareto_quadruple(alpha);
    let kernel = Kernel::SupOu { dim: 1 };
    let n = 100_000usize;
    let a_n = default_a_n(&quad.nu, alpha, n);
    let marginals = simulate_marginals(&quad, &kernel, n, 0.0, 1.0, 0.0, 10).unwrap();

    let r0 = 0.5;
    let base_q = mu_x_query(&quad, &kernel, alpha, &LimitFunctional::Radial { r: r0 }).unwrap();
    let base_e = empirical_tail_measure(&marginals, a_n, &BorelQuery::RadiusAbove(r0)).unwrap();
    let mut ok = true;
    let mut detail = String::new();
    for t in [2.0, 4.0] {
        let scaled_q =
            mu_x_query(&quad, &kernel, alpha, &LimitFunctional::Radial { r: t * r0 }).unwrap();
        let expected = t.powf(-alpha) * base_q.value;
        let quad_gap = (scaled_q.value - expected).abs();
        let quad_ok = quad_gap <= 1e-6 + base_q.error_bound + scaled_q.error_bound;

        let scaled_e =
            empirical_tail_measure(&marginals, a_n, &BorelQuery::RadiusAbove(t * r0)).unwrap();
        let target = t.powf(-alpha) * base_e;
        // binomial noise of both counts
        let sigma = (base_e.max(1.0) * t.powf(-2.0 * alpha) + scaled_e.max(1.0)).sqrt();
        let emp_ok = (scaled_e - target).abs() <= 3.0 * sigma;
        ok &= quad_ok && emp_ok;
        detail.push_str(&format!(
            "t={t}: query gap {quad_gap:.2e}, empirical {scaled_e:.0} vs {target:.1} (3sigma {:.1}); ",
            3.0 * sigma
        ));
    }
    verdict(10, ok, detail.trim_end_matches("; "));
}
