//! End-to-end runs of every experiment kind through the library entry point,
//! plus the rerun-determinism contract.

use std::fs;
use std::path::PathBuf;

use sheetlab::config::parse_config;
use sheetlab::run::run;

fn scratch(label: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("sheetlab-cli-{}-{label}", std::process::id()));
    fs::remove_dir_all(&dir).ok();
    dir
}

fn run_config(text: &str, dir: &PathBuf) -> Vec<(String, String)> {
    // the output directory is a runtime override, like the --out flag; it
    // never enters the echoed config text
    let mut cfg = parse_config(text).unwrap();
    cfg.out_dir = dir.display().to_string();
    run(&cfg)
        .unwrap()
        .into_iter()
        .map(|e| (e.file, e.sha256))
        .collect()
}

#[test]
fn every_experiment_kind_produces_artifacts() {
    let cases: Vec<(&str, String, Vec<&str>)> = vec![
        (
            "simulate",
            "[fields]\npreset = grushin\n[grid]\nn-s = 6\nn-t = 6\n\
             [experiment]\nkind = simulate\nx0 = 0, 0\ndump-sheet = true\n"
                .to_string(),
            vec!["path.csv", "sheet.bin", "summary.json", "manifest.json"],
        ),
        (
            "hormander",
            "[fields]\npreset = grushin\n[experiment]\nkind = hormander\nx0 = 0, 0\n\
             depth = 2\ns0 = 0.5\nradius = 0.3\nsamples = 64\n"
                .to_string(),
            vec!["levels.csv", "hormander.json", "manifest.json"],
        ),
        (
            "malliavin",
            "[fields]\npreset = additive\n[grid]\nn-s = 6\nn-t = 6\n\
             [experiment]\nkind = malliavin\ntrials = 20\nmoment-p = 2\n"
                .to_string(),
            vec!["dets.csv", "moments.json", "manifest.json"],
        ),
        (
            "probe",
            "[fields]\npreset = grushin\n[grid]\nn-s = 6\nn-t = 6\n\
             [experiment]\nkind = probe\ntrials = 1000\npinned = 0, 1\ndirections = 2\n"
                .to_string(),
            vec!["probe.csv", "probe.json", "manifest.json"],
        ),
        (
            "norris-brownian",
            "[fields]\npreset = additive\n[experiment]\nkind = norris\ntrials = 1000\n\
             steps = 32\nalpha1 = 3e9\nalpha2 = 0.5\nrho = 15.001\nnu = 6.001\n"
                .to_string(),
            vec!["norris.csv", "norris.json", "manifest.json"],
        ),
        (
            "norris-spde",
            "[fields]\npreset = grushin\n[grid]\nn-s = 12\nn-t = 8\n\
             [experiment]\nkind = norris\nsource = spde\ntrials = 1000\n\
             direction = 0, 1\nbracket-level = 0\nalpha1 = 1\nalpha2 = 0.1\nrho = 16\nnu = 6.5\n"
                .to_string(),
            vec!["norris.csv", "norris.json", "manifest.json"],
        ),
        (
            "density",
            "[fields]\npreset = additive\n[grid]\nn-s = 6\nn-t = 6\n\
             [experiment]\nkind = density\ntrials = 500\nresolution = 12\ndump-endpoints = true\n"
                .to_string(),
            vec!["density.csv", "endpoints.csv", "density.json", "manifest.json"],
        ),
        (
            "converge",
            "[fields]\npreset = bessel-drift\n[experiment]\nkind = converge\nx0 = 1\n\
             trials = 1\nbase = 4\nlevels = 3\n"
                .to_string(),
            vec!["converge.csv", "converge.json", "manifest.json"],
        ),
    ];

    for (label, text, expected) in cases {
        let dir = scratch(label);
        let entries = run_config(&text, &dir);
        let files: Vec<&str> = entries.iter().map(|(f, _)| f.as_str()).collect();
        for want in expected {
            assert!(files.contains(&want), "{label}: missing {want} in {files:?}");
        }
        // every JSON artifact embeds the config echo and the tool version
        for (file, _) in &entries {
            if file.ends_with(".json") && file != "manifest.json" {
                let body = fs::read_to_string(dir.join(file)).unwrap();
                let v: serde_json::Value = serde_json::from_str(&body).unwrap();
                assert!(v.get("config_text").is_some(), "{label}/{file} lacks config echo");
                assert!(v.get("version").is_some(), "{label}/{file} lacks version");
            }
        }
        fs::remove_dir_all(&dir).ok();
    }
}

#[test]
fn rerunning_a_config_reproduces_every_hash() {
    let text = "[fields]\npreset = grushin\n[grid]\nn-s = 6\nn-t = 6\n\
                [experiment]\nkind = probe\ntrials = 1000\npinned = 0, 1\nseed = 5\n";
    let dir_a = scratch("rerun-a");
    let dir_b = scratch("rerun-b");
    let a = run_config(text, &dir_a);
    let b = run_config(text, &dir_b);
    // artifact names and hashes agree exactly, manifest included
    assert_eq!(a, b);
    fs::remove_dir_all(&dir_a).ok();
    fs::remove_dir_all(&dir_b).ok();
}

#[test]
fn divergent_solve_surfaces_as_error() {
    let text = "[fields]\nm = 1\na0 = (* 1e12 (powi 3 x0))\n\
                [experiment]\nkind = simulate\nx0 = 10\n";
    let dir = scratch("diverge");
    let mut cfg = parse_config(text).unwrap();
    cfg.out_dir = dir.display().to_string();
    let err = run(&cfg).unwrap_err();
    assert!(err.to_string().contains("diverged"), "{err}");
    fs::remove_dir_all(&dir).ok();
}

#[test]
fn binary_exits_nonzero_with_machine_readable_error() {
    let dir = scratch("bin-diverge");
    fs::create_dir_all(&dir).unwrap();
    let config_path = dir.join("run.ini");
    fs::write(
        &config_path,
        "[fields]\nm = 1\na0 = (* 1e12 (powi 3 x0))\n\
         [experiment]\nkind = simulate\nx0 = 10\n",
    )
    .unwrap();
    let out_dir = dir.join("out");
    let status = std::process::Command::new(env!("CARGO_BIN_EXE_sheetlab"))
        .args(["simulate", "--config"])
        .arg(&config_path)
        .arg("--out")
        .arg(&out_dir)
        .status()
        .unwrap();
    assert!(!status.success());
    let record: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out_dir.join("error.json")).unwrap()).unwrap();
    assert!(record["error"].as_str().unwrap().contains("diverged"));
    fs::remove_dir_all(&dir).ok();
}

#[test]
fn binary_succeeds_on_a_valid_config() {
    let dir = scratch("bin-ok");
    fs::create_dir_all(&dir).unwrap();
    let config_path = dir.join("run.ini");
    fs::write(
        &config_path,
        "[fields]\npreset = additive\n[grid]\nn-s = 4\nn-t = 4\n\
         [experiment]\nkind = simulate\n",
    )
    .unwrap();
    let out_dir = dir.join("out");
    let status = std::process::Command::new(env!("CARGO_BIN_EXE_sheetlab"))
        .args(["simulate", "--config"])
        .arg(&config_path)
        .arg("--out")
        .arg(&out_dir)
        .status()
        .unwrap();
    assert!(status.success());
    assert!(out_dir.join("manifest.json").exists());
    fs::remove_dir_all(&dir).ok();
}
