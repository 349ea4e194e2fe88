use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use datasplit::cmd::{NoiseRow, PlanReport, SweepRow};
use datasplit::config::RunConfig;

const SMALL: &str = r#"
seed = 11
[data]
n_samples = 240
dim = 5
[network]
n_devices = 4
[sweep]
l_min = -1
l_max = 3
[noise]
levels = [0.0, 0.2]
draws = 300
bootstrap = 100
l_values = [2, 3]
"#;

fn datasplit(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_datasplit"))
        .args(args)
        .output()
        .unwrap()
}

fn write_config(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    fs::write(&path, text).unwrap();
    path.display().to_string()
}

fn header(path: &Path) -> String {
    fs::read_to_string(path).unwrap().lines().next().unwrap().to_owned()
}

#[test]
fn csv_headers_are_stable() {
    assert_eq!(
        SweepRow::HEADER.join(","),
        "l,tau_comm,b1_newton,b1_cardano,b1_small_comm,b1_large_comm,b1_planned,b1_uniform,method,\
         b1_newton_continuous,b1_cardano_continuous,predicted_planned,predicted_uniform,sim_planned,\
         sim_uniform,outer_planned,outer_uniform,speedup,error"
    );
    assert_eq!(
        NoiseRow::HEADER.join(","),
        "level,l,tau_comm,ratio_mean,ratio_ci_lo,ratio_ci_hi,f_var_empirical,f_var_ci_lo,f_var_ci_hi,\
         f_var_theory,within_ci,error"
    );
    assert_eq!(PlanReport::HEADER.join(","), "device,planned,uniform");
}

#[test]
fn sweep_noise_and_render_write_their_files() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "run.toml", SMALL);
    let out = dir.path().join("out");
    let out_s = out.display().to_string();

    let sweep = datasplit(&["sweep", "--config", &cfg, "--out", &out_s, "--threads", "2"]);
    assert!(sweep.status.success(), "{}", String::from_utf8_lossy(&sweep.stderr));
    assert_eq!(header(&out.join("results.csv")), SweepRow::HEADER.join(","));
    assert_eq!(fs::read_to_string(out.join("results.csv")).unwrap().lines().count(), 6);
    assert!(!out.join("speedup.svg").exists());

    let noise = datasplit(&["noise", "--config", &cfg, "--out", &out_s, "--svg"]);
    assert!(noise.status.success(), "{}", String::from_utf8_lossy(&noise.stderr));
    assert_eq!(header(&out.join("noise.csv")), NoiseRow::HEADER.join(","));
    assert!(out.join("noise.svg").exists() && out.join("speedup.svg").exists());

    fs::remove_file(out.join("speedup.svg")).unwrap();
    let render = datasplit(&["render", "--out", &out_s]);
    assert!(render.status.success());
    roxmltree::Document::parse(&fs::read_to_string(out.join("speedup.svg")).unwrap()).unwrap();
}

#[test]
fn plan_respects_overlays_and_seed() {
    let dir = tempfile::tempdir().unwrap();
    let base = write_config(dir.path(), "base.toml", SMALL);
    let overlay = write_config(dir.path(), "one.toml", "[network]\nn_devices = 1\n");
    let out = dir.path().join("out").display().to_string();

    let single = datasplit(&["plan", "--config", &base, "--config", &overlay, "--out", &out]);
    assert!(single.status.success());
    assert!(String::from_utf8_lossy(&single.stdout).contains("b1: 240"));

    let run = |seed: &str| {
        let o = datasplit(&["plan", "--config", &base, "--out", &out, "--seed", seed]);
        assert!(o.status.success());
        (o.stdout, fs::read(dir.path().join("out/plan.csv")).unwrap())
    };
    let first = run("5");
    assert_eq!(first, run("5"));
    assert_ne!(first.0, run("6").0, "the seed draws the worker costs");
}

#[test]
fn calibrate_writes_an_overlay_that_loads() {
    let dir = tempfile::tempdir().unwrap();
    let base = write_config(dir.path(), "base.toml", SMALL);
    let out = dir.path().join("out");
    let o = datasplit(&["calibrate", "--config", &base, "--out", &out.display().to_string()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let overlay = out.join("calibration.toml");
    let cfg = RunConfig::load(&[Path::new(&base), overlay.as_path()]).unwrap();
    assert!(cfg.problem.c1.value().unwrap() > 0.0);
    assert!(cfg.problem.c2.value().unwrap() > 0.0);
}

#[test]
fn config_errors_exit_with_one_and_name_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let bad = write_config(dir.path(), "bad.toml", "[problem]\nlambda = -1.0\n");
    let o = datasplit(&["plan", "--config", &bad]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("problem.lambda"));

    let typo = write_config(dir.path(), "typo.toml", "[network]\nn_device = 3\n");
    let o = datasplit(&["plan", "--config", &typo]);
    assert_eq!(o.status.code(), Some(1));

    let missing = write_config(dir.path(), "missing.toml", "[data]\npath = \"nowhere.svm\"\n");
    let o = datasplit(&["sweep", "--config", &missing]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("data.path"));

    let o = datasplit(&["render", "--out", &dir.path().join("empty").display().to_string()]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn numeric_failures_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    // a step far beyond the stable range blows the iterate up
    let text = format!("{SMALL}[solver]\ntheta = 1e6\nmax_outer = 2000\n");
    let cfg = write_config(dir.path(), "diverge.toml", &text);
    let o = datasplit(&[
        "calibrate",
        "--config",
        &cfg,
        "--out",
        &dir.path().display().to_string(),
    ]);
    assert_eq!(o.status.code(), Some(2), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(String::from_utf8_lossy(&o.stderr).contains("non-finite"));
}

#[test]
fn sweep_is_byte_identical_across_runs_and_thread_counts() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "run.toml", SMALL);
    let mut outputs = Vec::new();
    for (i, threads) in ["1", "3", "1"].into_iter().enumerate() {
        let out = dir.path().join(format!("out{i}"));
        let o = datasplit(&[
            "sweep",
            "--config",
            &cfg,
            "--out",
            &out.display().to_string(),
            "--threads",
            threads,
        ]);
        assert!(o.status.success());
        outputs.push(fs::read(out.join("results.csv")).unwrap());
    }
    assert_eq!(outputs[0], outputs[1]);
    assert_eq!(outputs[0], outputs[2]);
}
