//! End-to-end checks of the evoxsl binary.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

fn evoxsl(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_evoxsl"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn stdout_of(out: &Output) -> String {
    assert!(
        out.status.success(),
        "exit {:?}, stderr: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout.clone()).unwrap()
}

#[test]
fn apply_prints_the_exact_target_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let out = evoxsl(
        &[
            "apply",
            fixture("solution_doc1.xsl").to_str().unwrap(),
            fixture("doc1.xml").to_str().unwrap(),
        ],
        dir.path(),
    );
    let expected = std::fs::read(fixture("target1.xml")).unwrap();
    assert_eq!(stdout_of(&out).into_bytes(), expected);
}

#[test]
fn score_reports_the_known_optimum() {
    let dir = tempfile::tempdir().unwrap();
    let out = evoxsl(
        &[
            "score",
            fixture("solution_doc1.xsl").to_str().unwrap(),
            fixture("doc1.xml").to_str().unwrap(),
            fixture("target1.xml").to_str().unwrap(),
        ],
        dir.path(),
    );
    let text = stdout_of(&out);
    for line in ["d = 0", "s = 0", "f = 0.0016", "solution = true"] {
        assert!(text.contains(line), "missing {line:?} in:\n{text}");
    }
}

#[test]
fn root_only_sheet_applies_to_just_the_wrapper() {
    let dir = tempfile::tempdir().unwrap();
    let sheet = dir.path().join("root_only.xsl");
    std::fs::write(
        &sheet,
        "<?xml version=\"1.0\"?>\n<xsl:stylesheet version=\"1.0\" xmlns:xsl=\"http://www.w3.org/1999/XSL/Transform\">\n  <xsl:template match=\"/\">\n  </xsl:template>\n</xsl:stylesheet>\n",
    )
    .unwrap();
    let out = evoxsl(
        &["apply", sheet.to_str().unwrap(), fixture("doc1.xml").to_str().unwrap()],
        dir.path(),
    );
    assert_eq!(stdout_of(&out), "<biblioteca_musical>\n</biblioteca_musical>\n");
}

#[test]
fn unsupported_instructions_are_import_errors() {
    let dir = tempfile::tempdir().unwrap();
    let sheet = dir.path().join("foreach.xsl");
    std::fs::write(
        &sheet,
        "<?xml version=\"1.0\"?>\n<xsl:stylesheet version=\"1.0\" xmlns:xsl=\"http://www.w3.org/1999/XSL/Transform\">\n  <xsl:template match=\"/\">\n    <xsl:for-each select=\"x\"/>\n  </xsl:template>\n</xsl:stylesheet>\n",
    )
    .unwrap();
    let out = evoxsl(
        &["apply", sheet.to_str().unwrap(), fixture("doc1.xml").to_str().unwrap()],
        dir.path(),
    );
    assert!(!out.status.success());
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("for-each"), "{stderr}");
}

#[test]
fn missing_files_and_bad_configs_exit_nonzero() {
    let dir = tempfile::tempdir().unwrap();
    let out = evoxsl(
        &[
            "evolve",
            "no_such_input.xml",
            fixture("target1.xml").to_str().unwrap(),
        ],
        dir.path(),
    );
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("no_such_input.xml"));

    let config = dir.path().join("bad.cfg");
    std::fs::write(&config, "population = 10\n").unwrap();
    let out = evoxsl(
        &[
            "evolve",
            fixture("doc1.xml").to_str().unwrap(),
            fixture("target1.xml").to_str().unwrap(),
            "--config",
            config.to_str().unwrap(),
        ],
        dir.path(),
    );
    assert!(!out.status.success());
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("line 1") && stderr.contains("population"), "{stderr}");
}

fn small_config(dir: &Path) -> PathBuf {
    let config = dir.join("small.cfg");
    std::fs::write(
        &config,
        "population_size = 20\nmax_generations = 4\nstructure_type = 2\n",
    )
    .unwrap();
    config
}

#[test]
fn evolve_writes_sheet_and_record_that_rescore_identically() {
    let dir = tempfile::tempdir().unwrap();
    let config = small_config(dir.path());
    let out = evoxsl(
        &[
            "evolve",
            fixture("doc1.xml").to_str().unwrap(),
            fixture("target1.xml").to_str().unwrap(),
            "--config",
            config.to_str().unwrap(),
            "--seed",
            "7",
            "--out",
            "best.xsl",
        ],
        dir.path(),
    );
    let summary = stdout_of(&out);
    assert_eq!(summary.lines().count(), 1);
    assert!(summary.contains("success=") && summary.contains("generations=") && summary.contains("f="));

    let record: serde_json::Value = serde_json::from_str(
        &std::fs::read_to_string(dir.path().join("best.json")).unwrap(),
    )
    .unwrap();
    assert_eq!(record["seed"], 7);
    assert_eq!(record["structure_type"], "type2");
    let recorded_f = record["best"]["f"].as_f64().unwrap();

    // the emitted file re-imports and re-scores to the recorded F
    let rescored = stdout_of(&evoxsl(
        &[
            "score",
            "best.xsl",
            fixture("doc1.xml").to_str().unwrap(),
            fixture("target1.xml").to_str().unwrap(),
        ],
        dir.path(),
    ));
    let f_line = rescored.lines().find(|l| l.starts_with("f = ")).unwrap();
    let f: f64 = f_line[4..].parse().unwrap();
    assert_eq!(f, recorded_f);
}

#[test]
fn evolve_is_byte_repeatable_up_to_timing() {
    let dir = tempfile::tempdir().unwrap();
    let config = small_config(dir.path());
    for out_name in ["a.xsl", "b.xsl"] {
        let out = evoxsl(
            &[
                "evolve",
                fixture("doc1.xml").to_str().unwrap(),
                fixture("target1.xml").to_str().unwrap(),
                "--config",
                config.to_str().unwrap(),
                "--seed",
                "11",
                "--out",
                out_name,
            ],
            dir.path(),
        );
        stdout_of(&out);
    }
    let a = std::fs::read(dir.path().join("a.xsl")).unwrap();
    let b = std::fs::read(dir.path().join("b.xsl")).unwrap();
    assert_eq!(a, b);

    let mut ja: serde_json::Value = serde_json::from_str(
        &std::fs::read_to_string(dir.path().join("a.json")).unwrap(),
    )
    .unwrap();
    let mut jb: serde_json::Value = serde_json::from_str(
        &std::fs::read_to_string(dir.path().join("b.json")).unwrap(),
    )
    .unwrap();
    ja["wallclock_secs"] = 0.into();
    jb["wallclock_secs"] = 0.into();
    assert_eq!(ja, jb);
}

#[test]
fn experiment_writes_grid_records_and_summaries() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("exp.cfg");
    std::fs::write(
        &config,
        format!(
            "population_size = 16\nmax_generations = 3\npair = {} {}\n",
            fixture("doc1.xml").display(),
            fixture("target1.xml").display()
        ),
    )
    .unwrap();

    let out = evoxsl(
        &[
            "experiment",
            "--config",
            config.to_str().unwrap(),
            "--seeds",
            "2",
            "--out",
            "grid",
        ],
        dir.path(),
    );
    let text = stdout_of(&out);
    assert!(text.contains("6 runs, 0 failed cells"));

    let summary = std::fs::read_to_string(dir.path().join("grid/summary.csv")).unwrap();
    assert_eq!(summary.lines().count(), 4);
    for stype in ["type1", "type2", "type3"] {
        assert!(summary.contains(&format!("doc1,{stype},2,")), "{summary}");
    }
    let wallclock = std::fs::read_to_string(dir.path().join("grid/wallclock.csv")).unwrap();
    assert_eq!(wallclock.lines().count(), 7);
    assert_eq!(std::fs::read_dir(dir.path().join("grid/runs")).unwrap().count(), 6);

    // a single-seed rerun leaves the sd columns empty
    let out = evoxsl(
        &[
            "experiment",
            "--config",
            config.to_str().unwrap(),
            "--seeds",
            "1",
            "--out",
            "grid1",
        ],
        dir.path(),
    );
    stdout_of(&out);
    let summary = std::fs::read_to_string(dir.path().join("grid1/summary.csv")).unwrap();
    let row = summary.lines().nth(1).unwrap();
    let cols: Vec<&str> = row.split(',').collect();
    assert_eq!(cols[2], "1");
    // generations sd and best-f sd for one seed
    assert_eq!(cols[6], "");
    assert_eq!(cols[8], "");
}

#[test]
fn experiment_without_pairs_is_an_error() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("empty.cfg");
    std::fs::write(&config, "population_size = 10\n").unwrap();
    let out = evoxsl(
        &["experiment", "--config", config.to_str().unwrap()],
        dir.path(),
    );
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("pair"));
}
