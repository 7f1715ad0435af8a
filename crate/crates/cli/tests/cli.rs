use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

/// Writes tiny IDX files: label `c` lights a class-specific block.
fn write_mnist(dir: &Path, train: u32, test: u32) {
    let write = |name: &str, count: u32| {
        let mut images = 0x0000_0803u32.to_be_bytes().to_vec();
        for d in [count, 28, 28] {
            images.extend_from_slice(&d.to_be_bytes());
        }
        let mut labels = 0x0000_0801u32.to_be_bytes().to_vec();
        labels.extend_from_slice(&count.to_be_bytes());
        for i in 0..count {
            let label = (i % 10) as usize;
            let mut img = vec![0u8; 784];
            for r in 0..8 {
                for c in 0..5 {
                    img[(4 + 10 * (label / 5) + r) * 28 + 2 + 5 * (label % 5) + c] = 200 + (i % 50) as u8;
                }
            }
            images.extend_from_slice(&img);
            labels.push(label as u8);
        }
        fs::write(dir.join(format!("{name}-images-idx3-ubyte")), images).unwrap();
        fs::write(dir.join(format!("{name}-labels-idx1-ubyte")), labels).unwrap();
    };
    write("train", train);
    write("t10k", test);
}

fn gcnn(root: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gcnn"))
        .arg("--mnist-dir")
        .arg(root.join("mnist"))
        .arg("--cache-dir")
        .arg(root.join("cache"))
        .args(args)
        .output()
        .unwrap()
}

fn json(out: &Output) -> Value {
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).unwrap()
}

fn setup() -> tempfile::TempDir {
    let root = tempfile::tempdir().unwrap();
    fs::create_dir(root.path().join("mnist")).unwrap();
    write_mnist(&root.path().join("mnist"), 200, 50);
    root
}

#[test]
fn train_then_dump_filters() {
    let root = setup();
    let p = root.path();
    let run_dir = p.join("run");
    let out = gcnn(
        p,
        &["train", "--dataset", "subsampled", "--arch", "400-LRF800-MP400-10", "--epochs", "2", "--out", run_dir.to_str().unwrap()],
    );
    let report = json(&out);
    assert_eq!(report["architecture"], "400-LRF800-MP400-10");
    for f in ["report.json", "epochs.csv", "checkpoint.json"] {
        assert!(run_dir.join(f).exists(), "{f}");
    }
    let csv = fs::read_to_string(run_dir.join("epochs.csv")).unwrap();
    assert_eq!(csv.lines().count(), 3);

    let filters = p.join("filters");
    let out = gcnn(
        p,
        &["dump-filters", "--ckpt", run_dir.join("checkpoint.json").to_str().unwrap(), "--layer", "0", "--pgm", "--out", filters.to_str().unwrap()],
    );
    let summary = json(&out);
    assert_eq!(summary["kind"], "LRF");
    assert_eq!(summary["filters"], 2);
    assert!(filters.join("filters.csv").exists());
    let pgms = fs::read_dir(&filters).unwrap().filter(|e| e.as_ref().unwrap().path().extension().is_some_and(|x| x == "pgm")).count();
    assert_eq!(pgms, 2);

    let out = gcnn(p, &["dump-filters", "--ckpt", run_dir.join("checkpoint.json").to_str().unwrap(), "--layer", "1"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn baseline_and_dataset_commands() {
    let root = setup();
    let p = root.path();
    let b = json(&gcnn(p, &["baseline-nn", "--dataset", "subsampled", "--train-count", "100", "--test-count", "30"]));
    assert_eq!(b["train"], 100);
    assert_eq!(b["test"], 30);
    assert!(b["error"].as_f64().unwrap() <= 100.0);

    let copy = p.join("copy");
    let d = json(&gcnn(p, &["make-dataset", "--dataset", "subsampled", "--out", copy.to_str().unwrap()]));
    assert_eq!(d["nodes"], 400);
    assert_eq!(d["classes"], 10);
    assert!(copy.join("manifest.json").exists());
}

#[test]
fn configuration_errors_exit_with_two() {
    let root = setup();
    let p = root.path();
    let bad_dataset = gcnn(p, &["baseline-nn", "--dataset", "cifar"]);
    assert_eq!(bad_dataset.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&bad_dataset.stderr).contains("unknown dataset"));
    let bad_arch = gcnn(p, &["train", "--dataset", "subsampled", "--arch", "400-LRF999-10", "--epochs", "1"]);
    assert_eq!(bad_arch.status.code(), Some(2));
    let missing = Command::new(env!("CARGO_BIN_EXE_gcnn"))
        .args(["--mnist-dir", "/nonexistent", "--cache-dir"])
        .arg(p.join("empty-cache"))
        .args(["baseline-nn", "--dataset", "subsampled"])
        .output()
        .unwrap();
    assert_eq!(missing.status.code(), Some(2));
}
