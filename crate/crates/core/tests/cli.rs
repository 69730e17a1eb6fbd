use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use impact_game::cli::record::{
    CostResult, DerandomizeResult, Envelope, EquilibriumRecord, KernelCheckResult, RefineResult,
};
use impact_game::market_sim::SimulationReport;
use impact_game::Extended;
use serde::de::DeserializeOwned;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_impact-game"))
}

fn config(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("examples/configs").join(name)
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn run_config(cmd: &str, name: &str, extra: &[&str]) -> Output {
    let path = config(name);
    let mut args = vec![cmd, "--config", path.to_str().unwrap()];
    args.extend_from_slice(extra);
    run(&args)
}

fn parse<T: DeserializeOwned>(out: &Output) -> Envelope<T> {
    assert_eq!(out.status.code(), Some(0), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("record re-parses")
}

fn write_temp(text: &str) -> tempfile::NamedTempFile {
    let f = tempfile::NamedTempFile::new().unwrap();
    std::fs::write(f.path(), text).unwrap();
    f
}

const EXP_GRID: &str = "[kernel]\nfamily = \"exponential\"\nlambda = 1.0\n[grid]\nT = 1.0\nn = 1\n";

fn code_for(cmd: &str, text: &str) -> Option<i32> {
    let f = write_temp(text);
    run(&[cmd, "--config", f.path().to_str().unwrap()]).status.code()
}

#[test]
fn every_record_reparses() {
    let e: Envelope<KernelCheckResult> = parse(&run_config("kernel-check", "kernel_check_exponential.toml", &[]));
    assert_eq!(e.command, "kernel-check");
    assert_eq!(e.inputs_digest.len(), 64);
    assert!(e.results.checks[0].report.is_strictly_pd);

    let e: Envelope<CostResult> = parse(&run_config("cost", "cost.toml", &[]));
    assert_eq!(e.results.traders.len(), 3);
    assert!(e.results.traders[2].randomized);

    let e: Envelope<DerandomizeResult> = parse(&run_config("derandomize", "derandomize.toml", &[]));
    let gap = e.results.traders[0].gap.gap.as_option().unwrap();
    assert!((gap - (1.0 - (-1.0f64).exp()) / 4.0).abs() < 1e-12);
    assert!(e.results.traders[0].gap.strict);

    let e: Envelope<EquilibriumRecord> = parse(&run_config("equilibrium", "equilibrium_three.toml", &[]));
    assert!(e.results.br_verified);
    assert!(e.results.restarts.unwrap().agree);

    let e: Envelope<RefineResult> = parse(&run_config("refine", "refine.toml", &[]));
    assert_eq!(e.results.rows.len(), 5);

    let e: Envelope<SimulationReport> = parse(&run_config("simulate", "simulate_jumps.toml", &[]));
    assert_eq!(e.results.traders.len(), 2);
}

#[test]
fn kernel_check_examples() {
    let e: Envelope<KernelCheckResult> = parse(&run_config("kernel-check", "kernel_check_constant.toml", &[]));
    assert!(!e.results.checks[0].report.is_strictly_pd);

    let e: Envelope<KernelCheckResult> = parse(&run_config("kernel-check", "kernel_check_singular.toml", &[]));
    let shifts: Vec<_> = e.results.checks.iter().map(|c| c.surrogate_n).collect();
    assert_eq!(shifts, vec![None, Some(10), Some(100), Some(1000)]);
    assert!(e.results.checks.iter().all(|c| c.report.is_strictly_pd));
}

#[test]
fn single_trader_sells_half_at_each_time() {
    let e: Envelope<EquilibriumRecord> = parse(&run_config("equilibrium", "equilibrium_single.toml", &[]));
    assert_eq!(e.results.profile[0].blocks.len(), 2);
    for b in &e.results.profile[0].blocks {
        assert!((b + 0.5).abs() < 1e-12);
    }
}

#[test]
fn refinement_total_variation_increases() {
    let e: Envelope<RefineResult> = parse(&run_config("refine", "refine.toml", &[]));
    let tv: Vec<f64> = e.results.rows.iter().map(|r| r.total_variation[0]).collect();
    assert!(tv.windows(2).all(|w| w[1] > w[0]), "{tv:?}");
}

#[test]
fn zero_volatility_has_zero_z_score() {
    let e: Envelope<SimulationReport> = parse(&run_config("simulate", "simulate_zero_vol.toml", &[]));
    let t = e.results.traders[0];
    assert_eq!(t.z_score, Some(0.0));
    assert_eq!(t.std_error, 0.0);
    assert!((t.mean - t.analytic).abs() < 1e-10);
}

#[test]
fn output_is_byte_identical_across_runs_and_thread_counts() {
    let a = run_config("simulate", "simulate_jumps.toml", &["--threads", "1"]);
    let b = run_config("simulate", "simulate_jumps.toml", &["--threads", "4"]);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    let a = run_config("equilibrium", "equilibrium_three.toml", &[]);
    let b = run_config("equilibrium", "equilibrium_three.toml", &[]);
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn seed_flag_overrides_config() {
    let base = run_config("simulate", "simulate_jumps.toml", &[]);
    let same = run_config("simulate", "simulate_jumps.toml", &["--seed", "42"]);
    let other = run_config("simulate", "simulate_jumps.toml", &["--seed", "43"]);
    let base: Envelope<SimulationReport> = parse(&base);
    let same: Envelope<SimulationReport> = parse(&same);
    let other: Envelope<SimulationReport> = parse(&other);
    assert_eq!(base.results, same.results);
    assert_ne!(base.inputs_digest, same.inputs_digest);
    assert_eq!(other.results.seed, 43);
    assert_ne!(base.results.traders[0].mean, other.results.traders[0].mean);
}

#[test]
fn out_flag_and_table_format() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("refine.csv");
    let o = run_config("refine", "refine.toml", &["--format", "table", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    assert!(o.stdout.is_empty());
    let text = std::fs::read_to_string(out).unwrap();
    assert!(text.starts_with("n,tv_0,tv_1,objective_0,objective_1\n"));
    assert_eq!(text.lines().count(), 6);
}

#[test]
fn infinite_values_serialize_as_strings() {
    let text = format!("{EXP_GRID}[[traders]]\nx0 = 1.0\nliquidation = true\nblocks = [-0.5, 0.0]\n");
    let f = write_temp(&text);
    let o = run(&["cost", "--config", f.path().to_str().unwrap()]);
    assert!(String::from_utf8_lossy(&o.stdout).contains("\"+inf\""));
    let e: Envelope<CostResult> = parse(&o);
    assert_eq!(e.results.traders[0].terms.total, Extended::PosInfinity);
}

#[test]
fn config_errors_exit_with_two() {
    assert_eq!(run(&["cost", "--config", "/nonexistent/config.toml"]).status.code(), Some(2));
    assert_eq!(run(&["cost"]).status.code(), Some(2));
    assert_eq!(run(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(code_for("cost", "[kernel\n"), Some(2));
    assert_eq!(code_for("cost", &format!("{EXP_GRID}extra = 1\n")), Some(2));
    assert_eq!(
        code_for("cost", &format!("{EXP_GRID}[[traders]]\nx0 = 1.0\nphi = 1.0\nliquidation = true\n")),
        Some(2)
    );
    // constant kernel without the test flag
    let constant = EXP_GRID.replace("family = \"exponential\"\nlambda = 1.0", "family = \"constant\"");
    assert_eq!(code_for("kernel-check", &constant), Some(2));
    // negative decay rate
    assert_eq!(code_for("kernel-check", &EXP_GRID.replace("1.0\n[grid]", "-1.0\n[grid]")), Some(2));
    // wrong number of blocks
    assert_eq!(code_for("cost", &format!("{EXP_GRID}[[traders]]\nx0 = 0.0\nblocks = [1.0]\n")), Some(2));
    // price field that does not belong to the model
    let sim = format!(
        "{EXP_GRID}[[traders]]\nx0 = 0.0\n[price]\nmodel = \"gaussian_increments\"\nvolatility = 1.0\nstep = 0.1\n"
    );
    assert_eq!(code_for("simulate", &sim), Some(2));
}

#[test]
fn run_failures_exit_with_three() {
    // a block trade under the singular kernel
    let singular = "[kernel]\nfamily = \"singular_power_law\"\ngamma = 0.5\n[grid]\nT = 1.0\nn = 1\n";
    assert_eq!(
        code_for("cost", &format!("{singular}[[traders]]\nx0 = 0.0\nblocks = [1.0, 0.0]\n")),
        Some(3)
    );
    // the constant kernel gives a singular KKT system
    let constant = "[kernel]\nfamily = \"constant\"\ntest_kernel = true\n[grid]\nT = 1.0\nn = 2\n";
    assert_eq!(
        code_for(
            "equilibrium",
            &format!("{constant}[[traders]]\nx0 = 1.0\nliquidation = true\n[experiment]\nclass = \"blocks\"\n")
        ),
        Some(3)
    );
}

#[test]
fn every_sample_config_runs() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("examples/configs");
    let mut seen = 0;
    for entry in std::fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        let stem = path.file_stem().unwrap().to_str().unwrap().to_string();
        let cmd = if stem.starts_with("kernel_check") {
            "kernel-check"
        } else {
            stem.split('_').next().unwrap()
        };
        let out = run(&[cmd, "--config", path.to_str().unwrap(), "--format", "table"]);
        assert_eq!(out.status.code(), Some(0), "{stem}: {}", String::from_utf8_lossy(&out.stderr));
        seen += 1;
    }
    assert!(seen >= 10);
}
