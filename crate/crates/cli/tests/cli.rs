use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use std::sync::atomic::{AtomicUsize, Ordering};

fn scratch(name: &str) -> PathBuf {
    static NEXT: AtomicUsize = AtomicUsize::new(0);
    let dir = std::env::temp_dir().join(format!(
        "cascade-cli-{}-{name}-{}",
        std::process::id(),
        NEXT.fetch_add(1, Ordering::Relaxed)
    ));
    let _ = fs::remove_dir_all(&dir);
    fs::create_dir_all(&dir).unwrap();
    dir
}

fn cascade(cwd: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cascade"))
        .current_dir(cwd)
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn report(dir: &Path) -> toml::Table {
    fs::read_to_string(dir.join("report.toml")).unwrap().parse().unwrap()
}

fn float(t: &toml::Table, path: &[&str]) -> f64 {
    let mut v = &t[path[0]];
    for k in &path[1..] {
        v = &v[*k];
    }
    v.as_float().unwrap_or_else(|| panic!("{path:?} is not a float: {v:?}"))
}

#[test]
fn smoke_simulation_writes_one_stream_per_setting() {
    let dir = scratch("smoke");
    fs::write(dir.join("short.toml"), "[experiment]\nduration = 0.001\n").unwrap();
    let o = cascade(
        &dir,
        &["simulate", "--config", "short.toml", "--out", "sim", "--paper-exact"],
    );
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let streams = fs::read_dir(dir.join("sim/streams"))
        .unwrap()
        .filter(|e| {
            e.as_ref()
                .unwrap()
                .file_name()
                .to_string_lossy()
                .starts_with("setting_")
        })
        .count();
    assert_eq!(streams, 27);
    let manifest: toml::Table = fs::read_to_string(dir.join("sim/manifest.toml"))
        .unwrap()
        .parse()
        .unwrap();
    assert_eq!(manifest["pipeline"].as_str(), Some("simulate"));
    assert_eq!(manifest["provenance"]["config_hash"].as_str().unwrap().len(), 64);
    assert!(dir.join("sim/config.toml").exists());
}

#[test]
fn same_seed_same_bytes() {
    let dir = scratch("seed");
    for out in ["a", "b", "c"] {
        let seed = if out == "c" { "8" } else { "7" };
        let o = cascade(
            &dir,
            &["simulate", "--settings", "xxx,zzz", "--seed", seed, "--out", out],
        );
        assert_eq!(code(&o), 0, "{}", stderr(&o));
    }
    let bytes = |d: &str| fs::read(dir.join(d).join("streams/setting_01.bin")).unwrap();
    assert_eq!(bytes("a"), bytes("b"));
    assert_ne!(bytes("a"), bytes("c"));
}

#[test]
fn simulated_streams_feed_the_analyses() {
    let dir = scratch("pipeline");
    let o = cascade(&dir, &["simulate", "--out", "sim"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let o = cascade(&dir, &["tomo", "--input", "sim", "--out", "tomo", "--bootstrap", "0"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let r = report(&dir.join("tomo"));
    let f = float(&r, &["fidelity"]);
    assert!((0.7..=1.0).contains(&f), "fidelity {f}");
    assert!(dir.join("tomo/rho.txt").exists());

    // The count tables written by `simulate` give the same Mermin value.
    let o = cascade(&dir, &["inequality", "mermin", "--input", "sim/counts", "--out", "m"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let s = float(&report(&dir.join("m")), &["S"]);
    assert!((s - float(&r, &["mermin", "S"])).abs() < 1e-12);
    let csv = fs::read_to_string(dir.join("m/terms.csv")).unwrap();
    assert!(csv.starts_with("term,sign,E,sigma,N\n"));
    assert_eq!(csv.lines().count(), 6);
}

#[test]
fn config_errors_exit_2_with_line() {
    let dir = scratch("config");
    fs::write(dir.join("bad.toml"), "[noise]\ncoherence = 0.9\n\n[run]\nbogus = 1\n").unwrap();
    let o = cascade(&dir, &["dispersion", "--config", "bad.toml"]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("line 5"), "{}", stderr(&o));
    assert_eq!(code(&cascade(&dir, &["tomo", "--config", "missing.toml"])), 2);
    assert_eq!(code(&cascade(&dir, &["frobnicate"])), 2);
}

#[test]
fn data_errors_exit_3() {
    let dir = scratch("data");
    assert_eq!(code(&cascade(&dir, &["tomo", "--input", "nowhere"])), 3);
    fs::write(dir.join("junk.bin"), b"not a stream").unwrap();
    assert_eq!(code(&cascade(&dir, &["histogram", "--input", "junk.bin"])), 3);
}

#[test]
fn non_convergence_exits_4() {
    let dir = scratch("mle");
    fs::write(dir.join("short.toml"), "[run]\nmle_max_iter = 1\n").unwrap();
    let o = cascade(&dir, &["tomo", "--config", "short.toml", "--bootstrap", "0"]);
    assert_eq!(code(&o), 4, "{}", stderr(&o));
}

#[test]
fn output_directories_are_not_reused() {
    let dir = scratch("dirs");
    assert_eq!(code(&cascade(&dir, &["dispersion", "--out", "d"])), 0);
    assert_eq!(code(&cascade(&dir, &["dispersion", "--out", "d"])), 2);
    assert_eq!(code(&cascade(&dir, &["dispersion", "--out", "d", "--force"])), 0);
    assert_eq!(code(&cascade(&dir, &["dispersion"])), 0);
    assert_eq!(code(&cascade(&dir, &["dispersion"])), 0);
    assert_eq!(fs::read_dir(dir.join("runs")).unwrap().count(), 2);
}

#[test]
fn dispersion_curve() {
    let dir = scratch("dispersion");
    let o = cascade(&dir, &["dispersion", "--out", "d", "--mismatch", "0.15"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let csv = fs::read_to_string(dir.join("d/dispersion.csv")).unwrap();
    let v: Vec<(f64, f64)> = csv
        .lines()
        .skip(1)
        .map(|l| {
            let (a, b) = l.split_once(',').unwrap();
            (a.parse().unwrap(), b.parse().unwrap())
        })
        .collect();
    assert_eq!(v.len(), 41);
    assert_eq!(v[20], (0.0, 0.9));
    assert!((0..41).all(|k| v[k].1 == v[40 - k].1));
    assert!(v[20..].windows(2).all(|w| w[1].1 < w[0].1));
    let r = report(&dir.join("d"));
    assert!((float(&r, &["best_added_length_m"]) - 0.15).abs() < 1e-9);
}

#[test]
fn exact_phase_scans() {
    let dir = scratch("scan");
    fs::write(dir.join("pure.toml"), "[noise]\nwhite_noise = 0.0\ncoherence = 1.0\n").unwrap();
    fs::write(dir.join("flat.toml"), "[noise]\nwhite_noise = 0.0\ncoherence = 0.0\n").unwrap();
    let o = cascade(
        &dir,
        &["phase-scan", "--exact", "--config", "pure.toml", "--out", "pure"],
    );
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let r = report(&dir.join("pure"));
    assert!((float(&r, &["fit", "amplitude"]) - 1.0).abs() < 1e-9);
    let o = cascade(
        &dir,
        &["phase-scan", "--exact", "--config", "flat.toml", "--out", "flat"],
    );
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let r = report(&dir.join("flat"));
    assert!(float(&r, &["fit", "amplitude"]) < 1e-9);
    assert_eq!(r["fit"]["significant"].as_bool(), Some(false));
    assert_eq!(
        fs::read_to_string(dir.join("flat/phase_scan.csv"))
            .unwrap()
            .lines()
            .count(),
        13
    );
}
