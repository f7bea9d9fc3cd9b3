//! Acceptance suite: one test per acceptance criterion, each printing a
//! PASS/FAIL line with the measured values. Criteria 2-11 drive the CLI on
//! the shipped configs and assert the stated tolerances on the summary;
//! criterion 1 exercises the scalar semigroup algebra directly and
//! criterion 12 reruns every config twice and compares output bytes.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::Command;

use serde_json::Value;

fn repo_configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../configs")
        .canonicalize()
        .expect("configs directory")
}

struct CliRun {
    exit_ok: bool,
    summary: Value,
    /// Keeps the artifacts alive for the duration of the assertions.
    _out_dir: tempfile::TempDir,
}

/// Runs the CLI on a shipped config, writing into a fresh temp dir.
fn run_cli(config_name: &str) -> CliRun {
    let out_dir = tempfile::tempdir().expect("tempdir");
    let status = Command::new(env!("CARGO_BIN_EXE_shocksim"))
        .arg("run")
        .arg("--config")
        .arg(repo_configs().join(config_name))
        .arg("--out")
        .arg(out_dir.path())
        .arg("--quiet")
        .status()
        .expect("spawn shocksim");
    let summary: Value = serde_json::from_str(
        &std::fs::read_to_string(out_dir.path().join("summary.json")).expect("summary.json"),
    )
    .expect("summary parses");
    CliRun {
        exit_ok: status.success(),
        summary,
        _out_dir: out_dir,
    }
}

/// Extracts `(value, threshold, pass)` of a named check from a summary.
fn check(summary: &Value, name: &str) -> (f64, f64, bool) {
    let checks = summary["checks"].as_array().expect("checks array");
    let c = checks
        .iter()
        .find(|c| c["name"] == name)
        .unwrap_or_else(|| panic!("check {name} missing"));
    (
        c["value"].as_f64().unwrap(),
        c["threshold"].as_f64().unwrap(),
        c["pass"].as_bool().unwrap(),
    )
}

fn report(criterion: &str, pass: bool, detail: &str) {
    println!(
        "[acceptance] {criterion}: {} ({detail})",
        if pass { "PASS" } else { "FAIL" }
    );
}

#[test]
fn criterion_01_ode_semigroup_algebra() {
    use rand::{Rng, SeedableRng};
    use shocksim_core::ode::{ode_certificate, ode_evolve, OdeSemigroupParams};
    use shocksim_core::semigroup::decay_envelope;

    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
    let mut worst_law = 0.0f64;
    let mut worst_odd = 0.0f64;
    for _ in 0..10_000 {
        let params = OdeSemigroupParams {
            rho: rng.gen_range(0.2..3.0),
        };
        let (t, h, v) = (
            rng.gen_range(0.0..100.0),
            rng.gen_range(0.0..100.0),
            rng.gen_range(-10.0..10.0),
        );
        let comp = ode_evolve(params, t, ode_evolve(params, h, v));
        let direct = ode_evolve(params, t + h, v);
        worst_law = worst_law.max((comp - direct).abs());
        worst_odd = worst_odd
            .max((ode_evolve(params, t, -v) + ode_evolve(params, t, v)).abs());
    }

    let mut worst_decay = f64::NEG_INFINITY;
    for rho in [0.4, 0.5, 1.0, 2.0] {
        let params = OdeSemigroupParams { rho };
        let cert = ode_certificate(params);
        for _ in 0..2_500 {
            let (t, u, v) = (
                rng.gen_range(0.0..1000.0),
                rng.gen_range(-20.0..20.0),
                rng.gen_range(-20.0..20.0),
            );
            let lhs = (ode_evolve(params, t, u) - ode_evolve(params, t, v)).abs();
            let rhs = decay_envelope(&cert, t, (u - v).abs());
            worst_decay = worst_decay.max(lhs - rhs);
        }
    }

    let pass = worst_law <= 1e-12 && worst_odd <= 1e-12 && worst_decay <= 1e-12;
    report(
        "criterion 01 (scalar semigroup algebra)",
        pass,
        &format!("law {worst_law:.2e}, odd {worst_odd:.2e}, decay margin {worst_decay:.2e}, tolerance 1e-12"),
    );
    assert!(pass);
}

#[test]
fn criterion_02_pathwise_bounds() {
    let run = run_cli("ode-bounds.json");
    let (norm, _, _) = check(&run.summary, "norm_bound_margin");
    let (coup, _, _) = check(&run.summary, "coupling_bound_margin");
    let (cont, _, _) = check(&run.summary, "pathwise_continuity_margin");
    let pass = run.exit_ok && norm <= 1e-9 && coup <= 1e-9 && cont <= 1e-9;
    report(
        "criterion 02 (pathwise bounds, 100 paths, T=100)",
        pass,
        &format!("margins: norm {norm:.2e}, coupling {coup:.2e}, continuity {cont:.2e} <= 1e-9"),
    );
    assert!(pass);
}

#[test]
fn criterion_03_residual_life_identity() {
    let run = run_cli("ode-moments.json");
    let (sup, _, _) = check(&run.summary, "residual_life_sup_error");
    let pass = run.exit_ok && sup < 0.02;
    report(
        "criterion 03 (residual-life identity, theta=1, t=10, 1e5 samples)",
        pass,
        &format!("sup error {sup:.4} < 0.02"),
    );
    assert!(pass);
}

#[test]
fn criterion_04_chapman_kolmogorov() {
    let run = run_cli("ode-ck.json");
    let (ks, threshold, _) = check(&run.summary, "ck_two_sample_ks");
    let pass = run.exit_ok && ks < threshold;
    report(
        "criterion 04 (Chapman-Kolmogorov two-sample KS, t=h=1, 1e4/arm)",
        pass,
        &format!("KS {ks:.4} < 1% critical value {threshold:.4}"),
    );
    assert!(pass);
}

#[test]
fn criterion_05_slln() {
    let run = run_cli("ode-slln.json");
    let (agree, _, _) = check(&run.summary, "stationary_mean_agreement");
    let (forget, _, _) = check(&run.summary, "forgetting_margin");
    let pass = run.exit_ok && agree <= 0.0 && forget <= 1e-9;
    report(
        "criterion 05 (SLLN at T=1e4: arm agreement + forgetting bound)",
        pass,
        &format!("agreement margin {agree:.3e} <= 0, forgetting margin {forget:.3e} <= 1e-9"),
    );
    assert!(pass);
}

#[test]
fn criterion_06_clt() {
    let run = run_cli("ode-clt.json");
    let (ks, _, _) = check(&run.summary, "clt_ks_normal");
    let (stab, stab_threshold, _) = check(&run.summary, "sigma2_doubling_stability");
    let pass = run.exit_ok && ks < 0.05 && stab <= stab_threshold;
    report(
        "criterion 06 (CLT, T=500, 2000 replicas)",
        pass,
        &format!(
            "studentized KS {ks:.4} < 0.05, sigma2 doubling delta {stab:.3e} <= 3se {stab_threshold:.3e}"
        ),
    );
    assert!(pass);
}

#[test]
fn criterion_07_counterexample() {
    use shocksim_core::ode::counterexample_statistic;

    let run = run_cli("ode-counterexample.json");
    let (diff, _, _) = check(&run.summary, "counterexample_closed_form_agreement");
    let slow = counterexample_statistic(0.4, 1e4);
    let fast = counterexample_statistic(0.6, 1e4);
    let closed_ok = run.exit_ok && diff <= 1e-9;
    let slow_ok = slow > 1.0;
    let fast_ok = fast < 0.2;
    let pass = closed_ok && slow_ok && fast_ok;
    report(
        "criterion 07 (counterexample statistic)",
        pass,
        &format!(
            "closed-form agreement {diff:.2e} <= 1e-9 ({}), rho=0.4 value {slow:.3} > 1 ({}), \
             rho=0.6 value {fast:.3} < 0.2 ({})",
            if closed_ok { "ok" } else { "fail" },
            if slow_ok { "ok" } else { "fail" },
            if fast_ok { "ok" } else { "fail" },
        ),
    );
    if !fast_ok {
        // The rho=0.6 statistic at T=1e4 equals ((1e4+1)^0.4 - 1)/(0.4*100)
        // = 0.9703 by the same antiderivative the criterion pins to 1e-9;
        // it only falls below 0.2 near T ~ 1e12. The threshold is
        // unreachable at T=1e4, so this assertion stays red.
        println!(
            "[acceptance] criterion 07 note: rho=0.6 statistic decays like t^(-0.1); \
             value at T=1e12 would be {:.3}",
            counterexample_statistic(0.6, 1e12)
        );
    }
    assert!(pass);
}

#[test]
fn criterion_08_plaplacian_structure() {
    let run = run_cli("plap-bounds.json");
    let (mass, _, _) = check(&run.summary, "mass_conservation");
    let (linf, _, _) = check(&run.summary, "linf_nonexpansion");
    let (l2, _, _) = check(&run.summary, "l2_step_contraction");
    let (mono, _, _) = check(&run.summary, "monotonicity_margin");
    let pass = run.exit_ok && mass < 1e-10 && linf <= 1e-9 && l2 <= 1e-9 && mono <= 1e-12;
    report(
        "criterion 08 (p-Laplacian discrete structure, n=64, p=3)",
        pass,
        &format!(
            "mass {mass:.2e} < 1e-10, linf growth {linf:.2e} <= 1e-9, \
             L2 expansion {l2:.2e} <= 1e-9, monotonicity deficit {mono:.2e} <= 1e-12"
        ),
    );
    assert!(pass);
}

#[test]
fn criterion_09_plaplacian_decay() {
    use shocksim_core::plaplacian::discrete_poincare_constant;

    let run = run_cli("plap-bounds.json");
    let (decay, _, _) = check(&run.summary, "decay_envelope_margin");
    let (refine, _, _) = check(&run.summary, "poincare_refinement_decreasing");
    let (above, _, _) = check(&run.summary, "poincare_above_continuum");

    let continuum = 1.0 / std::f64::consts::PI;
    let cs: Vec<f64> = [16usize, 32, 64, 128]
        .iter()
        .map(|&n| discrete_poincare_constant(n, 1.0 / n as f64))
        .collect();
    let monotone = cs.windows(2).all(|w| w[1] < w[0]) && cs.iter().all(|&c| c > continuum);
    let gap = cs[3] - continuum;

    let pass =
        run.exit_ok && decay <= 1e-6 && refine <= 0.0 && above <= 0.0 && monotone && gap < 1e-4;
    report(
        "criterion 09 (p-Laplacian decay certificate)",
        pass,
        &format!(
            "envelope margin {decay:.2e} <= 1e-6 on 20 pairs over [0,50]; \
             C_S2 monotone {monotone}, gap to 1/pi at n=128 {gap:.2e}"
        ),
    );
    assert!(pass);
}

#[test]
fn criterion_10_shocked_plaplacian_slln() {
    let run = run_cli("plap-slln.json");
    let (stab, _, _) = check(&run.summary, "stabilization_margin");
    let pass = run.exit_ok && stab <= 0.0;
    report(
        "criterion 10 (shocked p-Laplacian time-average stabilization, T=200)",
        pass,
        &format!("2T-vs-T margin {stab:.3e} <= 0"),
    );
    assert!(pass);
}

#[test]
fn criterion_11_compound_moments() {
    let run = run_cli("ode-moments.json");
    let (mean_err, _, _) = check(&run.summary, "compound_mean_rel_error");
    let (var_err, _, _) = check(&run.summary, "compound_variance_rel_error");
    let pass = run.exit_ok && mean_err < 0.02 && var_err < 0.02;
    report(
        "criterion 11 (compound moments at 1e5 samples)",
        pass,
        &format!("relative errors: mean {mean_err:.4}, variance {var_err:.4} < 0.02"),
    );
    assert!(pass);
}

#[test]
fn criterion_12_determinism() {
    // Rerun every config behind criteria 2-11 twice from different working
    // directories (identical relative out dirs) and demand byte-identical
    // artifacts.
    let configs = [
        "ode-bounds.json",
        "ode-moments.json",
        "ode-ck.json",
        "ode-slln.json",
        "ode-clt.json",
        "ode-counterexample.json",
        "plap-bounds.json",
        "plap-slln.json",
    ];
    let mut all_ok = true;
    for config in configs {
        let mut digests: Vec<BTreeMap<String, Vec<u8>>> = Vec::new();
        for _ in 0..2 {
            let work = tempfile::tempdir().expect("tempdir");
            let status = Command::new(env!("CARGO_BIN_EXE_shocksim"))
                .current_dir(work.path())
                .arg("run")
                .arg("--config")
                .arg(repo_configs().join(config))
                .arg("--out")
                .arg("out")
                .arg("--quiet")
                .status()
                .expect("spawn shocksim");
            assert!(
                status.code() == Some(0) || status.code() == Some(1),
                "{config}: unexpected exit {status:?}"
            );
            let mut files = BTreeMap::new();
            for entry in std::fs::read_dir(work.path().join("out")).expect("out dir") {
                let entry = entry.expect("entry");
                files.insert(
                    entry.file_name().to_string_lossy().into_owned(),
                    std::fs::read(entry.path()).expect("read artifact"),
                );
            }
            digests.push(files);
        }
        let identical = digests[0] == digests[1];
        if !identical {
            all_ok = false;
            println!("[acceptance] criterion 12: {config} artifacts differ between reruns");
        }
    }
    report(
        "criterion 12 (byte-identical reruns of criteria 2-11)",
        all_ok,
        &format!("{} configs, 2 runs each", configs.len()),
    );
    assert!(all_ok);
}
