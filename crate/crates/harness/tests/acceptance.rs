//! Acceptance suite: one line per criterion, nonzero exit if any fails.
//!
//! Criterion 5 runs the full desk-scale replication study (several CPU-hours
//! on one core) only when `SPDNN_ACCEPT_FULL=1`. Criterion 8 uses the real
//! PM10 series when `SPDNN_PM10_CSV` points at it.

use std::fs::File;
use std::io::BufReader;
use std::process::Command;
use std::time::Instant;

use ndarray::{Array2, ArrayView2};
use rand::Rng;
use spdnn::bounds::{self, BoundInputs, NetClass};
use spdnn::dgp::{check_stability, make_supervised, simulate_arx_arch, DgpKind, DgpSpec};
use spdnn::loss::{empirical_risk, LossVariant};
use spdnn::penalty::{clipped_norm, l0_norm, l1_norm};
use spdnn::rng::rng_from_seed;
use spdnn::train::backprop;
use spdnn::{Architecture, InitScheme, LossKind, Network, ParamVector};
use spdnn_harness::experiment::{Estimator, LAGS};
use spdnn_harness::pm10::synthetic_dar_series;
use spdnn_harness::{
    excess_risk, pm10_pipeline, run_replications, ExperimentSpec, GridSpec, OraclePredictor, Pm10Config, Pm10Series,
};

enum Outcome {
    Pass(String),
    Fail(String),
    Skip(String),
}

fn check(cond: bool, detail: String) -> Outcome {
    if cond {
        Outcome::Pass(detail)
    } else {
        Outcome::Fail(detail)
    }
}

/// Signs of every hidden pre-activation for each row.
fn activation_pattern(net: &Network, x: ArrayView2<'_, f64>) -> Vec<bool> {
    let mut a: Array2<f64> = x.to_owned();
    let mut pattern = Vec::new();
    for j in 0..net.num_layers() - 1 {
        let (w, b) = net.layer(j);
        let z = a.dot(&w) + b;
        pattern.extend(z.iter().map(|&v| v > 0.0));
        a = z.mapv(|v| v.max(0.0));
    }
    pattern
}

/// Central differences at h = 1e-6 carry ~1e-11 absolute noise in f64, so
/// gradients below this magnitude are compared in absolute terms.
const RESOLVABLE: f64 = 1e-6;

fn criterion_1() -> Outcome {
    let h = 1e-6;
    let tol = 1e-5;
    let arch = Architecture::uniform(3, 2, 100, 1e3, 1e3).unwrap();
    let net = Network::new(arch.clone(), InitScheme::GlorotUniform, 11).unwrap();
    let spec = DgpSpec::new(DgpKind::Dgp1);
    let traj = simulate_arx_arch(&spec, 10 * 32 + LAGS, &mut rng_from_seed(12), 12).unwrap();
    let data = make_supervised(&traj, LAGS).unwrap();
    let loss = LossKind::l2();
    let mut rng = rng_from_seed(13);
    let (mut checked, mut skipped, mut tiny, mut worst, mut worst_abs) = (0, 0, 0, 0.0f64, 0.0f64);
    for b in 0..10 {
        let batch = data.slice(32 * b, 32 * (b + 1));
        let grad = backprop(&net, &batch, &loss).unwrap();
        let base = activation_pattern(&net, batch.x());
        for _ in 0..50 {
            let k = rng.gen_range(0..arch.param_count());
            let shifted = |delta: f64| {
                let mut p = net.flatten_params();
                p.0[k] += delta;
                net.load_params(ParamVector(p.0)).unwrap()
            };
            let (plus, minus) = (shifted(h), shifted(-h));
            if activation_pattern(&plus, batch.x()) != base || activation_pattern(&minus, batch.x()) != base {
                skipped += 1;
                continue;
            }
            let fd = (empirical_risk(&plus, &batch, &loss).unwrap().value
                - empirical_risk(&minus, &batch, &loss).unwrap().value)
                / (2.0 * h);
            let scale = grad[k].abs().max(fd.abs());
            if scale < RESOLVABLE {
                tiny += 1;
                worst_abs = worst_abs.max((grad[k] - fd).abs());
            } else {
                worst = worst.max((grad[k] - fd).abs() / scale);
                checked += 1;
            }
        }
    }
    check(
        worst <= tol && worst_abs <= 1e-10 && checked > 0,
        format!(
            "{checked} coordinates max rel err {worst:.2e} (tol {tol:.0e}); {tiny} below {RESOLVABLE:.0e} max abs err {worst_abs:.1e}; {skipped} kink-adjacent skipped"
        ),
    )
}

fn criterion_2() -> Outcome {
    let mut rng = rng_from_seed(21);
    let mut violations = 0usize;
    let draws = 100_000;
    for _ in 0..draws {
        let len = rng.gen_range(1..=20);
        let theta: Vec<f64> = (0..len)
            .map(|_| {
                if rng.gen_bool(0.3) {
                    0.0
                } else {
                    let mag = 10f64.powf(rng.gen_range(-6.0..1.0));
                    if rng.gen_bool(0.5) {
                        mag
                    } else {
                        -mag
                    }
                }
            })
            .collect();
        let tau = 10f64.powf(rng.gen_range(-4.0..1.0));
        let clip = clipped_norm(&theta, tau).unwrap();
        let nnz = theta.iter().filter(|t| **t != 0.0).count() as f64;
        let l1_bound = l1_norm(&theta) / tau;
        let upper = nnz.min(l1_bound).min(l0_norm(&theta) as f64);
        if !(clip >= 0.0 && clip <= upper * (1.0 + 1e-12)) {
            violations += 1;
        }
        let larger = tau * (1.0 + rng.gen_range(0.0..10.0));
        if clipped_norm(&theta, larger).unwrap() > clip {
            violations += 1;
        }
        let c = 10f64.powf(rng.gen_range(-3.0..3.0));
        let scaled: Vec<f64> = theta.iter().map(|t| c * t).collect();
        let sc = clipped_norm(&scaled, c * tau).unwrap();
        if (sc - clip).abs() > 1e-12 * clip.max(1.0) {
            violations += 1;
        }
    }
    check(violations == 0, format!("{draws} draws, {violations} violations"))
}

fn criterion_3() -> Outcome {
    let n = 100_000;
    let target = 0.25 / (1.0 - 0.1);
    let mut details = Vec::new();
    let mut ok = true;
    for (kind, seed) in [(DgpKind::Dgp1, 31), (DgpKind::Dgp2, 32)] {
        let spec = DgpSpec::new(kind.clone());
        let traj = simulate_arx_arch(&spec, n, &mut rng_from_seed(seed), seed).unwrap();
        let var = |v: &[f64]| {
            let m = v.iter().sum::<f64>() / v.len() as f64;
            v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (v.len() - 1) as f64
        };
        let (vxi, veps) = (var(&traj.xi), var(&traj.eps));
        ok &= vxi > 0.99 && vxi < 1.01 && (veps - target).abs() <= 0.1 * target;
        details.push(format!("{}: var(xi)={vxi:.4} var(eps)={veps:.4}", kind.name()));
    }
    let spec = DgpSpec::new(DgpKind::Dgp1);
    let report = check_stability(&spec, DgpKind::Dgp1.lipschitz().unwrap());
    // max(α₁, a₁ + √φ₁(1 + a₁)) + a₂ + √φ₁ a₂ with a₁ = 0.2, a₂ = 0.15.
    let r = 0.1f64.sqrt();
    let hand = (0.5f64).max(0.2 + r * 1.2) + 0.15 + r * 0.15;
    ok &= report.stable && (report.total - hand).abs() < 1e-12 && (report.total - 0.777).abs() < 5e-4;
    details.push(format!("stability total {:.4} (target {target:.4} for var(eps))", report.total));
    check(ok, details.join("; "))
}

fn criterion_4() -> Outcome {
    let mut ok = true;
    let mut details = Vec::new();
    for (kind, seed) in [(DgpKind::Dgp1, 41), (DgpKind::Dgp2, 42)] {
        let spec = DgpSpec::new(kind.clone());
        for variant in [LossVariant::L1, LossVariant::L2] {
            let oracle = OraclePredictor { kind: kind.clone() };
            let er = excess_risk(&oracle, &spec, 10_000, &LossKind::from(variant), &mut rng_from_seed(seed)).unwrap();
            ok &= er.value.abs() <= 3.0 * er.std_error;
            details.push(format!("{}/{variant}: {:.1e} (se {:.1e})", kind.name(), er.value, er.std_error));
        }
    }
    check(ok, details.join("; "))
}

fn criterion_5() -> Outcome {
    if std::env::var("SPDNN_ACCEPT_FULL").as_deref() != Ok("1") {
        return Outcome::Skip("full replication study disabled; set SPDNN_ACCEPT_FULL=1".into());
    }
    let mut ok = true;
    let mut details = Vec::new();
    for kind in [DgpKind::Dgp1, DgpKind::Dgp2] {
        let spec = ExperimentSpec {
            sizes: vec![250, 1000],
            replications: 20,
            losses: vec![LossVariant::L2],
            grid: GridSpec::thinned(),
            master_seed: 7,
            ..ExperimentSpec::new(DgpSpec::new(kind.clone()))
        };
        let table = run_replications(&spec).unwrap();
        let med = |n, e| table.median(kind.name(), n, e, LossVariant::L2).unwrap_or(f64::NAN);
        let (s250, s1000, n1000) =
            (med(250, Estimator::Spdnn), med(1000, Estimator::Spdnn), med(1000, Estimator::Npdnn));
        let failures = table.rows.iter().filter(|r| !r.ok()).count();
        ok &= s1000 < s250 && s1000 <= 1.1 * n1000;
        details.push(format!(
            "{}: spdnn median {s250:.5} (n=250) -> {s1000:.5} (n=1000), npdnn {n1000:.5}, {failures} failed rows",
            kind.name()
        ));
    }
    check(ok, details.join("; "))
}

fn criterion_6() -> Outcome {
    let class = NetClass { depth: 2.0, width: 10.0, weight_bound: 1.0, sparsity: 50.0 };
    let (mut accepted, mut rejected, mut bad) = (0, 0, 0);
    let mut worst_resid = 0.0f64;
    for n in [1e6, 1e8, 1e10, 1e12, 1e14] {
        for eta in [0.01, 0.05, 0.2] {
            for nu0 in [0.3, 0.45, 0.6] {
                for m in [0.5, 1.0, 4.0] {
                    let inputs = BoundInputs { n, eta, nu0, m, theta_inf: 0.5, g: 1.0, c_sigma: 1.0, class };
                    if !bounds::sample_size_report(&inputs).accepted() {
                        rejected += 1;
                        continue;
                    }
                    accepted += 1;
                    let g = bounds::generalization_epsilon(&inputs).unwrap();
                    let resid = bounds::phi(&inputs, g.eps1).abs();
                    worst_resid = worst_resid.max(resid);
                    if resid > 1e-10 || g.eps1.is_nan() || g.eps1 >= 2.0 * m / n.powf(nu0 / 2.0) {
                        bad += 1;
                    }
                }
            }
        }
    }
    check(
        bad == 0 && accepted >= 20,
        format!(
            "{accepted} accepted ({rejected} below threshold), {bad} contract failures, max |phi| {worst_resid:.1e}"
        ),
    )
}

fn criterion_7() -> Outcome {
    let exact = bounds::rate_exponent_theorem4(0.0) == 1.0 / 3.0;
    let checks = [
        (bounds::rho_from_constants(2.0, 2.0, 0.0, 1000.0), 2f64.powf(-1.0 / 3.0) / 10.0),
        // μ = 1, C₁ = C₂ = 8: (8/(2·2))^{3/5} / n^{2/5}
        (bounds::rho_from_constants(8.0, 8.0, 1.0, 1e5), 2f64.powf(0.6) / 100.0),
        (1e4f64.powf(-2.0 * 0.1), 10f64.powf(-0.8)),
    ];
    let worst = checks.iter().map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    check(exact && worst <= 1e-12, format!("mu=0 exponent exact: {exact}, max rho deviation {worst:.1e}"))
}

fn criterion_8() -> Outcome {
    match std::env::var("SPDNN_PM10_CSV") {
        Ok(path) => {
            let series = Pm10Series::read_csv(BufReader::new(File::open(&path).unwrap())).unwrap();
            let mut best: Option<(f64, f64)> = None;
            let mut dar = None;
            for seed in 0..5 {
                let out = pm10_pipeline(&series, &Pm10Config::new(seed)).unwrap();
                let rel = out.spdnn.mean_rel.unwrap();
                if best.is_none_or(|(r, _)| rel < r) {
                    best = Some((rel, out.spdnn.mean_abs));
                }
                dar = Some((out.dar.mean_abs, out.dar.mean_rel.unwrap()));
            }
            let (dar_abs, dar_rel) = dar.unwrap();
            let (sp_rel, sp_abs) = best.unwrap();
            check(
                (dar_abs - 19.79).abs() <= 0.5
                    && (100.0 * dar_rel - 6.01).abs() <= 0.25
                    && 100.0 * sp_rel <= 6.5
                    && sp_abs <= 19.5,
                format!("DAR {dar_abs:.3} / {:.3}%, best SPDNN {sp_abs:.3} / {:.3}%", 100.0 * dar_rel, 100.0 * sp_rel),
            )
        }
        Err(_) => {
            let series = synthetic_dar_series(408);
            let out = pm10_pipeline(&series, &Pm10Config::new(0)).unwrap();
            let dar_rel = out.dar.mean_rel.unwrap();
            check(
                out.dar.mean_abs == 0.0 && dar_rel == 0.0 && out.predictions.len() == 100,
                format!(
                    "synthetic series (no SPDNN_PM10_CSV): DAR ({}, {}), SPDNN {:.4} / {:.4}%",
                    out.dar.mean_abs,
                    dar_rel,
                    out.spdnn.mean_abs,
                    100.0 * out.spdnn.mean_rel.unwrap()
                ),
            )
        }
    }
}

fn criterion_9() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str, threads: &str| {
        let status = Command::new(env!("CARGO_BIN_EXE_spdnn"))
            .args(["--seed", "99", "--threads", threads, "--out"])
            .arg(dir.path())
            .args(["experiment", "--dgp", "dgp1,dgp2", "--sizes", "40,80", "--reps", "2", "--width", "10"])
            .args(["--max-epochs", "15", "--test-size", "500", "--file", name])
            .output()
            .unwrap();
        assert!(status.status.success(), "{}", String::from_utf8_lossy(&status.stderr));
        std::fs::read(dir.path().join(name)).unwrap()
    };
    let (a, b, c) = (run("a.csv", "1"), run("b.csv", "1"), run("c.csv", "3"));
    check(
        a == b && a == c && !a.is_empty(),
        format!("{} bytes, identical across reruns and thread counts: {}", a.len(), a == b && a == c),
    )
}

type Criterion = (&'static str, fn() -> Outcome);

fn main() {
    let criteria: [Criterion; 9] = [
        ("gradient correctness", criterion_1),
        ("clipped-norm properties", criterion_2),
        ("DGP statistics", criterion_3),
        ("oracle excess risk", criterion_4),
        ("excess-risk trend", criterion_5),
        ("generalization contract", criterion_6),
        ("rate exponents", criterion_7),
        ("PM10 table", criterion_8),
        ("determinism", criterion_9),
    ];
    let mut failed = 0;
    for (k, (name, f)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = std::panic::catch_unwind(f).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Outcome::Fail(format!("panicked: {msg}"))
        });
        let secs = start.elapsed().as_secs_f64();
        let (tag, detail) = match outcome {
            Outcome::Pass(d) => ("PASS", d),
            Outcome::Fail(d) => {
                failed += 1;
                ("FAIL", d)
            }
            Outcome::Skip(d) => ("SKIP", d),
        };
        println!("criterion {} [{tag}] {name} ({secs:.1}s): {detail}", k + 1);
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
