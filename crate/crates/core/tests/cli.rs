use std::fs;
use std::path::Path;
use std::process::{Command, Output};
use tempfile::TempDir;

fn pdfsi(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pdfsi"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, body: &str) -> String {
    let path = dir.join("run.cfg");
    fs::write(&path, body).unwrap();
    path.to_str().unwrap().to_string()
}

fn rows(csv: &str) -> Vec<Vec<String>> {
    csv.lines().skip(1).map(|l| l.split(',').map(str::to_string).collect()).collect()
}

const SMALL: &str = "St = 10\nbeta = 20\nRe = 0.5\nDelta = 0.05\nnum_particles = 121\ndt = 1e-3\nst_override = 1\n";

#[test]
fn steady_writes_fields_and_metadata() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), SMALL);
    let out = tmp.path().join("out");
    let o = pdfsi(&["--config", &cfg, "--out", out.to_str().unwrap(), "steady"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_to_string(out.join("steady.csv")).unwrap();
    assert!(csv.starts_with("X,H,Q,P\n"));
    let r = rows(&csv);
    assert_eq!(r.len(), 121);
    assert!(r.iter().all(|row| (row[2].parse::<f64>().unwrap() - 1.0).abs() < 1e-4));
    let meta = fs::read_to_string(out.join("run.meta")).unwrap();
    assert!(meta.contains("beta = 20"));
    assert!(meta.contains("status: ok"));
    assert!(meta.contains("wall-clock"));
}

#[test]
fn metadata_reproduces_outputs_byte_for_byte() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), SMALL);
    let first = tmp.path().join("a");
    let o = pdfsi(&[
        "--config", &cfg, "--out", first.to_str().unwrap(), "--set", "sample_stride=20", "simulate", "--t-end", "0.1",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let second = tmp.path().join("b");
    let meta = first.join("run.meta");
    let o = pdfsi(&["--config", meta.to_str().unwrap(), "--out", second.to_str().unwrap(), "simulate"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    for name in ["history.csv", "history_summary.csv", "report.txt"] {
        assert_eq!(
            fs::read(first.join(name)).unwrap(),
            fs::read(second.join(name)).unwrap(),
            "{name} differs"
        );
    }
}

#[test]
fn elastic_dispersion_has_real_frequencies() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), "St = 10\nbeta = 0\nRe = 0.5\nDelta = 0.04\n");
    let out = tmp.path().join("out");
    let o = pdfsi(&[
        "--config", &cfg, "--out", out.to_str().unwrap(), "dispersion", "--k-min", "0.5", "--k-max", "500", "--k-points", "64",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_to_string(out.join("dispersion.csv")).unwrap();
    let r = rows(&csv);
    assert_eq!(r.len(), 64);
    assert!(r.iter().all(|row| row[2].parse::<f64>().unwrap() == 0.0));
    let meta = fs::read_to_string(out.join("run.meta")).unwrap();
    assert!(meta.contains("k_points = 64"));
}

#[test]
fn damping_sweep_is_written() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), "St = 10\nbeta = 1e5\nRe = 1e-5\nDelta = 1e-5\n");
    let out = tmp.path().join("out");
    let o = pdfsi(&["--config", &cfg, "--out", out.to_str().unwrap(), "damping", "--omega-points", "20"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_to_string(out.join("damping.csv")).unwrap();
    assert!(csv.starts_with("omega,re_k,im_k\n"));
    assert_eq!(rows(&csv).len(), 20);
}

#[test]
fn two_by_two_sweep_has_four_rows() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), "St = 1\nbeta = 1\nRe = 0.5\nDelta = 0.05\nnum_particles = 121\ndt = 1e-3\n");
    let out = tmp.path().join("out");
    let o = pdfsi(&[
        "--config", &cfg, "--out", out.to_str().unwrap(), "--threads", "2", "sweep", "--st-range", "1:10:2", "--beta-range", "1:10:2",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_to_string(out.join("sweep.csv")).unwrap();
    assert!(csv.starts_with("St,beta,Re,Delta,max_C_fsi,max_C_static,regime\n"));
    let r = rows(&csv);
    assert_eq!(r.len(), 4);
    assert!(r.iter().all(|row| row[6] != "failed"));
    assert!(out.join("fit.txt").exists());
    assert!(out.join("run.meta").exists());
}

#[test]
fn damage_reports_curvature_and_strength_outcome() {
    let tmp = TempDir::new().unwrap();
    let body = SMALL.replace("st_override = 1\n", "C_cr = 1e6\n");
    let cfg = write_config(tmp.path(), &body);
    let out = tmp.path().join("out");
    let o = pdfsi(&["--config", &cfg, "--out", out.to_str().unwrap(), "--set", "sample_stride=200", "damage"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = fs::read_to_string(out.join("damage.txt")).unwrap();
    assert!(text.contains("survives"), "{text}");
    let csv = fs::read_to_string(out.join("curvature.csv")).unwrap();
    assert!(csv.starts_with("T,X,C\n"));
}

#[test]
fn exit_codes_distinguish_failure_kinds() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("out");
    let out = out.to_str().unwrap();

    let bad = write_config(tmp.path(), "St = 1\nbeta = 1\nRe = 0.5\nDelta = 0.05\nwobble = 3\n");
    let o = pdfsi(&["--config", &bad, "--out", out, "steady"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("wobble"));

    let o = pdfsi(&["--out", out, "steady"]);
    assert_eq!(o.status.code(), Some(1), "an empty configuration is incomplete");

    let short = write_config(tmp.path(), &format!("{SMALL}max_steps = 5\n"));
    let o = pdfsi(&["--config", &short, "--out", out, "steady"]);
    assert_eq!(o.status.code(), Some(2));

    let o = pdfsi(&["--config", &short, "--out", out, "sweep", "--st-range", "1:10:2", "--beta-range", "1:10:2"]);
    assert_eq!(o.status.code(), Some(3));
    let csv = fs::read_to_string(Path::new(out).join("sweep.csv")).unwrap();
    assert_eq!(rows(&csv).iter().filter(|r| r[6] == "failed").count(), 4);
}
