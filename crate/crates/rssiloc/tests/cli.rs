use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use rssiloc::dataset_csv;
use rssiloc_core::{codec, MinMax, MlpModel};

fn rssiloc(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rssiloc"))
        .args(args)
        .current_dir(cwd)
        .env_remove("RSSILOC_OUT_DIR")
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn data_rows(path: &Path) -> usize {
    dataset_csv::load(path).unwrap().len()
}

#[test]
fn gen_data_defaults_match_the_survey() {
    let dir = tempfile::tempdir().unwrap();
    let o = rssiloc(&["gen-data", "--out-dir", "d"], dir.path());
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert_eq!(data_rows(&dir.path().join("d/train_pool.csv")), 2350);
    assert_eq!(data_rows(&dir.path().join("d/unknown_test.csv")), 105);
    assert!(stdout(&o).contains("2350 survey rows"));
}

#[test]
fn gen_data_two_anchor_files_have_two_rssi_columns() {
    let dir = tempfile::tempdir().unwrap();
    let o = rssiloc(&["gen-data", "--config", "two_a", "--samples-per-point", "2", "--out-dir", "."], dir.path());
    assert_eq!(code(&o), 0);
    let data = dataset_csv::load(&dir.path().join("train_pool.csv")).unwrap();
    assert_eq!(data.anchor_count(), 2);
    let first = fs::read_to_string(dir.path().join("train_pool.csv")).unwrap();
    assert_eq!(first.lines().nth(1).unwrap().split(',').count(), 4);
}

#[test]
fn unknown_configuration_lists_valid_names() {
    let dir = tempfile::tempdir().unwrap();
    let o = rssiloc(&["gen-data", "--config", "seven"], dir.path());
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("two_a, two_b, three_a, three_b, four, five"), "{}", stderr(&o));
    assert_eq!(fs::read_dir(dir.path()).unwrap().count(), 0);
}

#[test]
fn bad_testbed_file_is_a_data_error() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("tb.conf"), "p0 = -45\nwidth = 3\n").unwrap();
    let o = rssiloc(&["gen-data", "--testbed", "tb.conf"], dir.path());
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("line 2"), "{}", stderr(&o));
}

#[test]
fn out_dir_defaults_to_the_environment() {
    let dir = tempfile::tempdir().unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_rssiloc"))
        .args(["gen-data", "--samples-per-point", "1", "--samples-per-unknown", "1"])
        .current_dir(dir.path())
        .env("RSSILOC_OUT_DIR", "from_env")
        .output()
        .unwrap();
    assert_eq!(code(&o), 0);
    assert!(dir.path().join("from_env/train_pool.csv").exists());
}

#[test]
fn train_br_writes_model_and_report_reproducibly() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    assert_eq!(code(&rssiloc(&["gen-data", "--seed", "3", "--out-dir", "d"], p)), 0);
    let args = |out: &'static str| {
        ["train", "--data", "d/train_pool.csv", "--algo", "br", "--seed", "3", "--max-epochs", "20", "--out-dir", out]
    };
    let o = rssiloc(&args("a"), p);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert_eq!(code(&rssiloc(&args("b"), p)), 0);
    for file in ["model.mlp", "train_report.txt", "test_split.csv"] {
        let (a, b) = (fs::read(p.join("a").join(file)).unwrap(), fs::read(p.join("b").join(file)).unwrap());
        assert_eq!(a, b, "{file} differs between identical runs");
    }
    assert!(p.join("a/train_report.time").exists());
    let record = rssiloc::report::load(&p.join("a/train_report.txt")).unwrap();
    assert_eq!(record.layers, vec![4, 12, 12, 2]);
    assert!(record.report.effective_parameters.is_some());
    assert_eq!(data_rows(&p.join("a/test_split.csv")), 470);
    let model = codec::decode(&fs::read(p.join("a/model.mlp")).unwrap()).unwrap();
    assert_eq!(model.seed(), 3);
}

#[test]
fn zero_width_hidden_layer_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = rssiloc(&["train", "--data", "missing.csv", "--hidden", "0"], dir.path());
    assert_eq!(code(&o), 1);
}

#[test]
fn missing_or_malformed_data_is_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(&rssiloc(&["train", "--data", "missing.csv"], dir.path())), 2);
    fs::write(dir.path().join("bad.csv"), "# anchors=2\n-50,-60,0\n").unwrap();
    let o = rssiloc(&["train", "--data", "bad.csv", "--train-fraction", "1"], dir.path());
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("line 2"), "{}", stderr(&o));
}

#[test]
fn diverging_training_is_exit_three_and_writes_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    assert_eq!(code(&rssiloc(&["gen-data", "--samples-per-point", "3", "--out-dir", "d"], p)), 0);
    let o = rssiloc(
        &[
            "train",
            "--data",
            "d/train_pool.csv",
            "--algo",
            "gd",
            "--learning-rate",
            "1e6",
            "--validation-fraction",
            "0",
            "--max-epochs",
            "500",
            "--out-dir",
            "out",
        ],
        p,
    );
    assert_eq!(code(&o), 3, "{}", stderr(&o));
    assert!(stderr(&o).contains("non-finite"));
    assert!(!p.join("out").exists());
}

fn write_model(path: &Path, model: &MlpModel) {
    fs::write(path, codec::encode(model)).unwrap();
}

fn zero_model() -> MlpModel {
    let mut m = MlpModel::localization(3, &[12, 12], 0).unwrap();
    m.set_params(&vec![0.0; m.parameter_count()]).unwrap();
    m.with_normalization(
        vec![MinMax::new(-96.0, -20.0).unwrap(); 3],
        vec![MinMax::new(0.0, 3.6).unwrap(), MinMax::new(0.0, 4.5).unwrap()],
    )
    .unwrap()
}

#[test]
fn infer_on_zero_network_prints_the_constant_point() {
    let dir = tempfile::tempdir().unwrap();
    write_model(&dir.path().join("zero.mlp"), &zero_model());
    let o = rssiloc(&["infer", "--model", "zero.mlp", "--rssi", "-50,-60,-70"], dir.path());
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert_eq!(stdout(&o), "1.8000,2.2500\n");
    let o = rssiloc(&["infer", "--model", "zero.mlp", "--rssi", "-50,-60"], dir.path());
    assert_eq!(code(&o), 2);
}

#[test]
fn eval_on_an_overfit_tiny_dataset_is_near_zero() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    let text = "# anchors=2 points=3 tiny\n-40,-80,0,0\n-60,-60,1,2\n-80,-40,2,1\n";
    fs::write(p.join("tiny.csv"), text).unwrap();
    let o = rssiloc(
        &[
            "train",
            "--data",
            "tiny.csv",
            "--train-fraction",
            "1",
            "--validation-fraction",
            "0",
            "--hidden",
            "6",
            "--goal",
            "1e-20",
            "--max-epochs",
            "200",
            "--out-dir",
            ".",
        ],
        p,
    );
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let o = rssiloc(&["eval", "--model", "model.mlp", "--data", "tiny.csv"], p);
    assert_eq!(code(&o), 0);
    let avg: f64 = stdout(&o).lines().find_map(|l| l.strip_prefix("average_error_m = ")).unwrap().parse().unwrap();
    assert!(avg < 1e-6, "{}", stdout(&o));
}

#[test]
fn sweep_writes_six_configs_by_two_algorithms() {
    let dir = tempfile::tempdir().unwrap();
    let o = rssiloc(
        &[
            "sweep",
            "--seeds",
            "1",
            "--samples-per-point",
            "3",
            "--samples-per-unknown",
            "2",
            "--max-epochs",
            "5",
            "--jobs",
            "2",
            "--out-dir",
            "s",
        ],
        dir.path(),
    );
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let csv = fs::read_to_string(dir.path().join("s/sweep.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 12);
    for name in ["sweep.json", "sweep.time.csv"] {
        assert!(dir.path().join("s").join(name).exists());
    }

    let o = rssiloc(&["plot", "--report", "s/sweep.json", "--out-dir", "charts"], dir.path());
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    for name in ["average_error.svg", "max_error.svg", "pct_below.svg", "wall_time.svg", "plot_data.csv"] {
        assert!(dir.path().join("charts").join(name).exists(), "{name}");
    }
    let o =
        rssiloc(&["plot", "--report", "s/sweep.json", "--times", "s/sweep.time.csv", "--out-dir", "again"], dir.path());
    assert_eq!(code(&o), 0);
    let again = fs::read(dir.path().join("again/average_error.svg")).unwrap();
    assert_eq!(again, fs::read(dir.path().join("charts/average_error.svg")).unwrap());
}

#[test]
fn compare_reports_five_algorithms() {
    let dir = tempfile::tempdir().unwrap();
    let args = [
        "compare",
        "--seeds",
        "1",
        "--samples-per-point",
        "3",
        "--samples-per-unknown",
        "2",
        "--max-epochs",
        "5",
        "--out-dir",
        "c",
    ];
    assert_eq!(code(&rssiloc(&args, dir.path())), 0);
    let csv = fs::read_to_string(dir.path().join("c/comparison.csv")).unwrap();
    let algos: Vec<&str> = csv.lines().skip(1).map(|l| l.split(',').nth(1).unwrap()).collect();
    assert_eq!(algos, ["lm", "br", "rp", "scg", "gd"]);
    assert_eq!(code(&rssiloc(&["plot", "--report", "c/comparison.json", "--out-dir", "p"], dir.path())), 0);
    let svg = fs::read_to_string(dir.path().join("p/average_error.svg")).unwrap();
    assert_eq!(svg.matches(r#"class="bar""#).count(), 5);
}

#[test]
fn plot_rejects_empty_reports() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("empty.json"), "").unwrap();
    let o = rssiloc(&["plot", "--report", "empty.json", "--out-dir", "p"], dir.path());
    assert_eq!(code(&o), 2);
    assert!(!dir.path().join("p").exists());
}

#[test]
fn export_writes_source_and_conformance() {
    let dir = tempfile::tempdir().unwrap();
    write_model(&dir.path().join("m.mlp"), &zero_model());
    let o =
        rssiloc(&["export", "--model", "m.mlp", "--precision", "f32", "--name", "fw", "--out-dir", "x"], dir.path());
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(fs::read_to_string(dir.path().join("x/fw.c")).unwrap().contains("float"));
    assert_eq!(data_rows(&dir.path().join("x/fw_conformance.csv")), 100);
    assert_eq!(code(&rssiloc(&["export", "--model", "absent.mlp"], dir.path())), 2);
}

#[test]
fn corrupt_model_is_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let mut bytes = codec::encode(&zero_model());
    bytes[20] ^= 1;
    fs::write(dir.path().join("m.mlp"), bytes).unwrap();
    let o = rssiloc(&["infer", "--model", "m.mlp", "--rssi", "-50,-60,-70"], dir.path());
    assert_eq!(code(&o), 2);
}

#[test]
fn help_lists_every_flag() {
    let dir = tempfile::tempdir().unwrap();
    let cases: [(&str, &[&str]); 8] = [
        ("gen-data", &["--config", "--seed", "--samples-per-point", "--samples-per-unknown", "--testbed", "--out-dir"]),
        (
            "train",
            &[
                "--data",
                "--algo",
                "--hidden",
                "--seed",
                "--max-epochs",
                "--goal",
                "--train-fraction",
                "--validation-fraction",
                "--learning-rate",
                "--out-dir",
            ],
        ),
        ("eval", &["--model", "--data", "--threshold"]),
        ("infer", &["--model", "--rssi"]),
        (
            "sweep",
            &["--configs", "--algos", "--seeds", "--first-seed", "--hidden", "--max-epochs", "--jobs", "--out-dir"],
        ),
        ("compare", &["--config", "--algos", "--seeds", "--threshold", "--testbed", "--out-dir"]),
        ("export", &["--model", "--precision", "--name", "--out-dir"]),
        ("plot", &["--report", "--times", "--set", "--out-dir"]),
    ];
    for (cmd, flags) in cases {
        let o = rssiloc(&[cmd, "--help"], dir.path());
        assert_eq!(code(&o), 0, "{cmd}");
        let text = stdout(&o);
        for flag in flags {
            assert!(text.contains(flag), "{cmd} --help lacks {flag}");
        }
    }
    assert_eq!(code(&rssiloc(&["--help"], dir.path())), 0);
    assert_eq!(code(&rssiloc(&[], dir.path())), 1);
    assert_eq!(code(&rssiloc(&["frobnicate"], dir.path())), 1);
}
