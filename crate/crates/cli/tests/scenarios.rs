use std::path::Path;
use std::process::Command;

use zeno_cli::config::CouplingProfile;
use zeno_cli::run::Metric;
use zeno_cli::table::{parse_complex, parse_float};
use zeno_cli::{build_scenario, perturbed_invariance_check, run_scenario, ModelConfig, ScenarioConfig, WarningKind};
use zeno_core::operator::{evolve_real, norm_unchecked};
use zeno_core::zeno::AzcFit;
use zeno_core::{CMatrix, C64};

fn config(body: &str, out: &Path) -> ScenarioConfig {
    let text = format!("schema_version = 1\noutput_path = {:?}\n{body}", out.display().to_string());
    ScenarioConfig::from_toml(&text).unwrap()
}

fn read(path: &Path) -> String {
    std::fs::read_to_string(path).unwrap()
}

const FRIEDRICHS: &str = "task = \"survival\"\n[model.friedrichs]\nn_modes = 200\nband = [-2.0, 2.0]\nexcited_energy = 0.0\ncoupling_strength = 0.05\nprofile = \"flat\"\n";

#[test]
fn rabi_convergence_csv_schema_and_rate() {
    let dir = tempfile::tempdir().unwrap();
    let c = config("task = \"converge\"\n[model.rabi]\n", dir.path());
    let report = run_scenario(&c).unwrap();
    assert!(!report.has_warnings());
    assert!((report.float("rate_exponent").unwrap() + 1.0).abs() < 0.05);
    let text = read(&dir.path().join("convergence.csv"));
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "n,distance_to_limit,cauchy_delta");
    for (line, k) in lines.zip(1..) {
        let cells: Vec<&str> = line.split(',').collect();
        assert_eq!(cells[0], (1u64 << k).to_string());
        let n = (1u64 << k) as f64;
        // EHE = 0, so the distance is 1 - cos(1/n)^n
        assert!((parse_float(cells[1]).unwrap() - (1.0 - (1.0 / n).cos().powf(n))).abs() < 1e-12);
    }
}

#[test]
fn every_task_freezes_its_schema() {
    let dir = tempfile::tempdir().unwrap();
    let cases = [
        ("task = \"converge\"\n[model.perturbed]\ndim = 4\nseed = 2\nperturbation_norm = 0.1\n", vec![("convergence.csv", "n,distance_to_limit,cauchy_delta"), ("invariance.csv", "t,leakage,dyson_bound")]),
        ("task = \"classify\"\n[model.rabi]\n[distribution.pareto]\nalpha = 0.5\nscale = 1.0\n", vec![("tail.csv", "x,delta"), ("modulus.csv", "n,modulus")]),
        ("task = \"gibbs\"\nbeta = 1.0\n[model.random]\ndim = 4\nrank_E = 2\nseed = 3\n", vec![("kms.csv", "t,max_residual,max_scaled_residual,reduced_max_residual,reduced_max_scaled_residual")]),
        ("task = \"sweep\"\nreplicas = 3\nn_schedule = [16, 32, 64]\n[model.random]\ndim = 3\nrank_E = 1\nseed = 4\n", vec![("sweep.csv", "replica,seed,rate_exponent,final_distance,target_residual"), ("replica_0002.csv", "n,distance_to_limit,cauchy_delta")]),
    ];
    for (i, (body, files)) in cases.iter().enumerate() {
        let out = dir.path().join(i.to_string());
        let report = run_scenario(&config(body, &out)).unwrap();
        for (name, header) in files {
            assert_eq!(read(&out.join(name)).lines().next().unwrap(), *header, "{name}");
            assert_eq!(report.schemas[*name].join(","), *header);
        }
    }
}

#[test]
fn identical_configs_give_identical_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let bodies = [
        "task = \"sweep\"\nreplicas = 6\n[model.perturbed]\ndim = 5\nseed = 11\nperturbation_norm = 0.2\n",
        "task = \"gibbs\"\nbeta = 0.5\nt_grid = [-1.0, 0.0, 1.5]\n[model.random]\ndim = 5\nrank_E = 2\nseed = 8\n",
        "task = \"survival\"\n[model.random]\ndim = 6\nrank_E = 3\nseed = 7\n",
    ];
    for (i, body) in bodies.iter().enumerate() {
        let (a, b) = (dir.path().join(format!("{i}a")), dir.path().join(format!("{i}b")));
        let ra = run_scenario(&config(body, &a)).unwrap();
        let rb = run_scenario(&config(body, &b)).unwrap();
        assert_eq!(ra.headline, rb.headline);
        for path in &ra.csv_paths {
            let name = path.file_name().unwrap();
            assert_eq!(std::fs::read(path).unwrap(), std::fs::read(b.join(name)).unwrap());
        }
    }
}

#[test]
fn gibbs_headline_is_within_tolerance() {
    let dir = tempfile::tempdir().unwrap();
    let report = run_scenario(&config("task = \"gibbs\"\nbeta = 1.0\n[model.random]\ndim = 4\nrank_E = 2\nseed = 1\n", dir.path())).unwrap();
    assert!(report.float("max_scaled_kms_residual").unwrap() <= 1.0);
    assert!(report.float("max_scaled_reduced_kms_residual").unwrap() <= 1.0);
    assert!(!report.warned(WarningKind::KmsViolation));
}

#[test]
fn classify_reports_regimes() {
    let dir = tempfile::tempdir().unwrap();
    for (dist, regime) in [
        ("[distribution.gaussian]\nmean = 0.0\nstd_dev = 1.0\n", "zeno"),
        ("[distribution.cauchy]\nlocation = 0.0\nscale = 1.0\n", "borderline"),
        ("[distribution.registry]\nname = \"pareto_half\"\n", "anti_zeno"),
    ] {
        let body = format!("task = \"classify\"\n[model.rabi]\n{dist}");
        let report = run_scenario(&config(&body, dir.path())).unwrap();
        assert_eq!(report.text("regime"), Some(regime));
    }
    // no distribution: the state's own (discrete) spectral measure
    let report = run_scenario(&config("task = \"classify\"\n[model.random]\ndim = 5\nrank_E = 2\nseed = 1\n", dir.path())).unwrap();
    assert_eq!(report.text("regime"), Some("zeno"));
}

#[test]
fn friedrichs_rate_matches_golden_rule() {
    let dir = tempfile::tempdir().unwrap();
    let report = run_scenario(&config(FRIEDRICHS, dir.path())).unwrap();
    let (g0, golden) = (report.float("gamma0").unwrap(), report.float("gamma_golden").unwrap());
    assert!((g0 / golden - 1.0).abs() < 0.2, "{g0} vs {golden}");
    // a flat band pushes the renormalization above one: Z ≈ 1 + 2g² here
    let z = report.float("z").unwrap();
    assert!((z - 1.005).abs() < 2e-3, "{z}");
    assert!(report.warned(WarningKind::NoCrossing));
}

#[test]
fn friedrichs_wing_level_crosses() {
    // level in the wing of a Gaussian form factor: the self-energy slope is negative and Z < 1
    let dir = tempfile::tempdir().unwrap();
    let body = FRIEDRICHS.replace("excited_energy = 0.0", "excited_energy = 1.5").replace("0.05", "0.15").replace("\"flat\"", "\"gaussian\"");
    let report = run_scenario(&config(&body, dir.path())).unwrap();
    assert!(!report.has_warnings(), "{:?}", report.warnings);
    let g0 = report.float("gamma0").unwrap();
    assert!(report.float("z").unwrap() < 1.0);
    assert!((g0 / report.float("gamma_golden").unwrap() - 1.0).abs() < 0.2);
    assert!(report.float("gamma_eff_at_half_tau_star").unwrap() < g0);
    assert!(report.float("gamma_eff_past_tau_star").unwrap() > g0);
}

#[test]
fn rabi_survival_is_not_exponential() {
    let dir = tempfile::tempdir().unwrap();
    let report = run_scenario(&config("task = \"survival\"\n[model.rabi]\n", dir.path())).unwrap();
    assert!(report.warned(WarningKind::NonExponential));
    assert!(!report.headline.contains_key("gamma0"));
    assert_eq!(report.headline["zeno_time"], Metric::Float(1.0));
}

/// `V(t) - I` to third order in `P`, where `U(t) = U_P(t) V(t)`, from
/// cumulative trapezoid sums of the interaction-picture recursion.
fn dyson_third_order(h_p: &zeno_core::HermitianOperator, p: &CMatrix, t: f64, steps: usize) -> CMatrix {
    let dim = p.nrows();
    let ds = t / steps as f64;
    let p_int: Vec<CMatrix> =
        (0..=steps).map(|k| evolve_real(h_p, -(k as f64) * ds) * p * evolve_real(h_p, k as f64 * ds)).collect();
    let mut term: Vec<CMatrix> = vec![CMatrix::identity(dim, dim); steps + 1];
    let mut total = CMatrix::zeros(dim, dim);
    for _ in 0..3 {
        let integrand: Vec<CMatrix> = p_int.iter().zip(&term).map(|(a, v)| a * v * C64::new(0.0, 1.0)).collect();
        let mut next = vec![CMatrix::zeros(dim, dim); steps + 1];
        for k in 1..=steps {
            next[k] = &next[k - 1] + (&integrand[k - 1] + &integrand[k]) * C64::new(0.5 * ds, 0.0);
        }
        total += &next[steps];
        term = next;
    }
    total
}

#[test]
fn invariance_leakage_against_dyson_oracle() {
    let model = ModelConfig::Perturbed { dim: 6, seed: 5, perturbation_norm: 0.1 };
    let s = build_scenario(&model).unwrap();
    let split = s.perturbation.as_ref().unwrap();
    let t = 0.5;
    let perp = s.e.complement();
    let leak = norm_unchecked(&(perp.matrix() * evolve_real(&s.h, t) * s.e.matrix()));
    let v = dyson_third_order(&split.h_p, &split.p, t, 2000);
    let oracle = norm_unchecked(&(perp.matrix() * evolve_real(&split.h_p, t) * v * s.e.matrix()));
    // fourth-order remainder ≤ (0.05)^4/24
    assert!((leak - oracle).abs() < 1e-6, "{leak} vs {oracle}");
    assert!(leak <= 0.05f64.exp_m1());
    let r = perturbed_invariance_check(&model).unwrap();
    assert!(r.holds());
    let AzcFit::Fitted { exponent, constant } = r.azc else { panic!() };
    assert!((exponent - 1.0).abs() < 0.02);
    assert!(constant <= 0.1 * 1.05);
}

fn zeno(args: &[&str]) -> (i32, String, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_zeno")).args(args).output().unwrap();
    (out.status.code().unwrap(), String::from_utf8(out.stdout).unwrap(), String::from_utf8(out.stderr).unwrap())
}

#[test]
fn binary_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("rabi.toml");
    std::fs::write(&path, "schema_version = 1\ntask = \"converge\"\noutput_path = \"unused\"\n[model.rabi]\n").unwrap();
    let out = dir.path().join("out");
    let (p, o) = (path.to_str().unwrap(), out.to_str().unwrap());
    let (code, stdout, _) = zeno(&["converge", "--config", p, "--out", o]);
    assert_eq!(code, 0);
    assert!(stdout.contains("rate_exponent"));
    assert!(out.join("convergence.csv").exists());
    let (code, stdout, _) = zeno(&["converge", "--config", p, "--out", o, "--quiet"]);
    assert_eq!((code, stdout.as_str()), (0, ""));
    let (code, _, stderr) = zeno(&["survival", "--config", p, "--out", o]);
    assert_eq!(code, 2);
    assert!(stderr.contains("task"));
    std::fs::write(&path, "schema_version = 1\ntask = \"survival\"\noutput_path = \"unused\"\n[model.rabi]\n").unwrap();
    let (code, _, stderr) = zeno(&["survival", "--config", p, "--out", o, "--quiet"]);
    assert_eq!(code, 1);
    assert!(stderr.contains("NonExponential"));
    std::fs::write(&path, "schema_version = 1\ntask = \"survival\"\noutput = \"x\"\n[model.rabi]\n").unwrap();
    assert_eq!(zeno(&["survival", "--config", p]).0, 2);
}

#[test]
fn seed_flag_overrides_the_model_seed() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("r.toml");
    std::fs::write(&path, "schema_version = 1\ntask = \"converge\"\noutput_path = \"x\"\n[model.random]\ndim = 4\nrank_E = 2\nseed = 1\n").unwrap();
    let p = path.to_str().unwrap();
    let run = |seed: &str, sub: &str| {
        let out = dir.path().join(sub);
        assert_eq!(zeno(&["converge", "--config", p, "--out", out.to_str().unwrap(), "--seed", seed, "--quiet"]).0, 0);
        read(&out.join("convergence.csv"))
    };
    assert_eq!(run("9", "a"), run("9", "b"));
    assert_ne!(run("9", "a"), run("10", "c"));
    let direct = dir.path().join("d");
    let mut c = ScenarioConfig::load(&path).unwrap();
    c.override_seed(9);
    c.output_path = direct.clone();
    run_scenario(&c).unwrap();
    assert_eq!(read(&direct.join("convergence.csv")), run("9", "a"));
}

#[test]
fn complex_cells_parse() {
    assert_eq!(parse_complex("1.0000000000000000e0-2.5000000000000000e-1j"), Some(C64::new(1.0, -0.25)));
    assert!(CouplingProfile::Flat != CouplingProfile::Gaussian);
}

#[test]
fn shipped_configs_are_valid() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut count = 0;
    for entry in std::fs::read_dir(&dir).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_some_and(|e| e == "toml") {
            ScenarioConfig::load(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
            count += 1;
        }
    }
    assert!(count >= 6);
}
