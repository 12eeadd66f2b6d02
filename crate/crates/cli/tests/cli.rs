use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn cmr(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cmr-forge"))
        .args(args)
        .current_dir(dir)
        .env_remove("CMR_FORGE_THREADS")
        .output()
        .unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn phantom(dir: &Path, out: &str, patients: &str) {
    let o = cmr(
        dir,
        &[
            "phantom",
            "--patients",
            patients,
            "--seed",
            "7",
            "--size",
            "64",
            "--out",
            out,
        ],
    );
    assert!(o.status.success(), "{}", stderr(&o));
}

fn files_under(root: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out: Vec<_> = walkdir::WalkDir::new(root)
        .into_iter()
        .map(|e| e.unwrap())
        .filter(|e| e.file_type().is_file() && e.file_name() != "run.json")
        .map(|e| {
            (
                e.path().strip_prefix(root).unwrap().display().to_string(),
                fs::read(e.path()).unwrap(),
            )
        })
        .collect();
    out.sort();
    out
}

#[test]
fn phantom_writes_five_patients_deterministically() {
    let dir = tempfile::tempdir().unwrap();
    phantom(dir.path(), "a", "5");
    phantom(dir.path(), "b", "5");
    let a = dir.path().join("a");
    let patients: Vec<_> = fs::read_dir(&a)
        .unwrap()
        .map(|e| e.unwrap())
        .filter(|e| e.path().is_dir())
        .collect();
    assert_eq!(patients.len(), 5);
    for p in &patients {
        assert_eq!(fs::read_dir(p.path()).unwrap().count(), 7);
    }
    assert_eq!(files_under(&a), files_under(&dir.path().join("b")));
    let run = json(&a.join("run.json"));
    assert_eq!(run["command"], "phantom");
    assert_eq!(run["config"]["seed"], 7);
    assert_eq!(run["version"], env!("CARGO_PKG_VERSION"));
}

#[test]
fn evaluate_identical_dirs_gives_perfect_dice() {
    let dir = tempfile::tempdir().unwrap();
    phantom(dir.path(), "d", "2");
    for side in ["p", "g"] {
        fs::create_dir_all(dir.path().join(side).join("sub")).unwrap();
        for (pid, seq, name) in [("P001", "lge", "a"), ("P002", "t2", "sub/b")] {
            let src = dir.path().join("d").join(pid).join(format!("{seq}_labels.nii.gz"));
            fs::copy(src, dir.path().join(side).join(format!("{name}.nii.gz"))).unwrap();
        }
    }
    let o = cmr(
        dir.path(),
        &[
            "evaluate",
            "--pred",
            "p",
            "--gt",
            "g",
            "--spacing-from-header",
            "--out",
            "ev",
        ],
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let report = json(&dir.path().join("ev/report.json"));
    let cases = report["cases"].as_array().unwrap();
    assert_eq!(cases.len(), 2);
    for case in cases {
        for s in ["LV", "MYO", "RV"] {
            assert_eq!(case["structures"][s]["dice"], 1.0);
            assert_eq!(case["structures"][s]["hausdorff_mm"], 0.0);
        }
    }
    assert!(fs::read_to_string(dir.path().join("ev/metrics.txt"))
        .unwrap()
        .contains("Dice score"));
    assert!(dir.path().join("ev/run.json").is_file());

    let o = cmr(
        dir.path(),
        &[
            "evaluate",
            "--pred",
            "p",
            "--gt",
            "g",
            "--mode",
            "2d",
            "--spacing",
            "1,1,2",
            "--hausdorff-percentile",
            "95",
            "--out",
            "ev2",
        ],
    );
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(
        json(&dir.path().join("ev2/run.json"))["config"]["spacing"],
        serde_json::json!([1.0, 1.0, 2.0])
    );
}

#[test]
fn synthetic_configs_require_the_directory_flag() {
    let dir = tempfile::tempdir().unwrap();
    for id in ["5", "8"] {
        let o = cmr(
            dir.path(),
            &["build-dataset", "--config", id, "--cohort", "c", "--out", "o"],
        );
        assert_eq!(o.status.code(), Some(1));
        assert!(stderr(&o).contains("--synthetic-dir"), "{}", stderr(&o));
    }
}

#[test]
fn exit_codes_distinguish_usage_and_data_errors() {
    let dir = tempfile::tempdir().unwrap();
    for sub in [
        "phantom",
        "preprocess",
        "augment",
        "build-dataset",
        "evaluate",
        "inspect",
    ] {
        assert_eq!(cmr(dir.path(), &[sub, "--help"]).status.code(), Some(0));
    }
    assert_eq!(cmr(dir.path(), &["phantom", "--bogus"]).status.code(), Some(1));
    assert_eq!(cmr(dir.path(), &["phantom", "--out", "x"]).status.code(), Some(1));
    assert_eq!(
        cmr(
            dir.path(),
            &["build-dataset", "--config", "9", "--cohort", "c", "--out", "o"]
        )
        .status
        .code(),
        Some(1)
    );
    assert_eq!(
        cmr(
            dir.path(),
            &["phantom", "--patients", "1", "--out", "x", "--threads", "0"]
        )
        .status
        .code(),
        Some(1)
    );

    let o = cmr(
        dir.path(),
        &["build-dataset", "--config", "1", "--cohort", "missing", "--out", "o"],
    );
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("cohort.json"), "{}", stderr(&o));

    fs::create_dir_all(dir.path().join("g")).unwrap();
    fs::create_dir_all(dir.path().join("p")).unwrap();
    fs::write(dir.path().join("g/broken.nii"), b"not a nifti").unwrap();
    fs::write(dir.path().join("p/broken.nii"), b"not a nifti").unwrap();
    let o = cmr(dir.path(), &["evaluate", "--pred", "p", "--gt", "g", "--out", "ev"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("broken.nii"), "{}", stderr(&o));
}

#[test]
fn config_file_values_yield_to_flags() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(
        dir.path().join("c.json"),
        r#"{"patients": 2, "seed": 1, "size": 64, "out": "cf", "threads": 1}"#,
    )
    .unwrap();
    let o = cmr(dir.path(), &["phantom", "--config-file", "c.json", "--seed", "5"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let run = json(&dir.path().join("cf/run.json"));
    assert_eq!(run["config"]["seed"], 5);
    assert_eq!(run["config"]["patients"], 2);
    assert_eq!(run["threads"], 1);

    fs::write(dir.path().join("bad.json"), r#"{"patientz": 2}"#).unwrap();
    let o = cmr(dir.path(), &["phantom", "--config-file", "bad.json"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("bad.json") && stderr(&o).contains("patientz"));

    let o = Command::new(env!("CARGO_BIN_EXE_cmr-forge"))
        .args(["phantom", "--patients", "1", "--size", "64", "--out", "env"])
        .current_dir(dir.path())
        .env("CMR_FORGE_THREADS", "2")
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(json(&dir.path().join("env/run.json"))["threads"], 2);
}

#[test]
fn pipeline_stages_chain_through_files() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    phantom(d, "raw", "2");

    let o = cmr(
        d,
        &[
            "preprocess",
            "--input",
            "raw",
            "--out",
            "pp",
            "--target-size",
            "96",
            "--scope",
            "per-sequence",
        ],
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let refs = json(&d.join("pp/references.json"));
    assert_eq!(
        refs.as_object().unwrap().keys().collect::<Vec<_>>(),
        ["LGE", "T2", "bSSFP"]
    );
    assert_eq!(
        json(&d.join("pp/run.json"))["config"]["options"]["scope"],
        "per-sequence"
    );

    let o = cmr(
        d,
        &[
            "augment",
            "--input",
            "pp",
            "--out",
            "aug",
            "--rotations",
            "3",
            "--global-seed",
            "1",
        ],
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let index = json(&d.join("aug/augment.json"));
    let first = &index.as_array().unwrap()[0];
    assert_eq!(first["rotations"].as_array().unwrap().len(), 4);
    assert!(first["global"]["angle_deg"].as_f64().unwrap().abs() <= 15.0);
    assert!(d.join("aug/P001/landmarks.json").is_file());

    for out in ["ds1", "ds2"] {
        let o = cmr(
            d,
            &[
                "build-dataset",
                "--config",
                "4",
                "--cohort",
                "pp",
                "--seed",
                "3",
                "--out",
                out,
            ],
        );
        assert!(o.status.success(), "{}", stderr(&o));
    }
    assert_eq!(
        fs::read(d.join("ds1/config_4.json")).unwrap(),
        fs::read(d.join("ds2/config_4.json")).unwrap()
    );
    assert_eq!(
        fs::read(d.join("ds1/summary_config_4.txt")).unwrap(),
        fs::read(d.join("ds2/summary_config_4.txt")).unwrap()
    );

    let o = cmr(d, &["inspect", "--input", "ds1/config_4.json", "--out", "ins"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(String::from_utf8_lossy(&o.stdout).contains("configuration 4"));
    assert_eq!(json(&d.join("ins/inspect.json"))["kind"], "dataset");
    let o = cmr(d, &["inspect", "--input", "raw/P001/lge_labels.nii.gz"]);
    assert!(String::from_utf8_lossy(&o.stdout).contains("label_counts"));
}
