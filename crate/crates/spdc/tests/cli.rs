use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn spdc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_spdc"))
        .args(args)
        .env_remove("SPDC_CONSTANTS_DIR")
        .output()
        .expect("spawn spdc")
}

fn shipped(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../configs")
        .join(name)
}

fn write_config(dir: &Path, name: &str, text: &str) -> PathBuf {
    let path = dir.join(name);
    fs::write(&path, text).unwrap();
    path
}

fn run(config: &Path, out: &Path) -> Output {
    spdc(&[
        "run",
        config.to_str().unwrap(),
        "--out-dir",
        out.to_str().unwrap(),
    ])
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn all_finite(csv: &str) -> bool {
    let mut reader = csv::Reader::from_reader(csv.as_bytes());
    reader.records().all(|r| {
        r.unwrap()
            .iter()
            .all(|cell| cell.parse::<f64>().map_or(true, f64::is_finite))
    })
}

#[test]
fn json_summary_reruns_to_identical_csv() {
    let tmp = tempfile::tempdir().unwrap();
    let (first, second) = (tmp.path().join("a"), tmp.path().join("b"));
    let o = run(&shipped("separability.conf"), &first);
    assert!(o.status.success(), "{}", stderr(&o));
    let o = run(&first.join("separability.json"), &second);
    assert!(o.status.success(), "{}", stderr(&o));
    let a = fs::read(first.join("separability.csv")).unwrap();
    let b = fs::read(second.join("separability.csv")).unwrap();
    assert_eq!(a, b);

    let summary: Value =
        serde_json::from_slice(&fs::read(first.join("separability.json")).unwrap()).unwrap();
    assert_eq!(summary["csv"]["records"], 41);
    assert_eq!(summary["config"]["crystal.file"], "bbo.sellmeier");
    assert_eq!(summary["config"]["spectrum.convention"], "fwhm-intensity");
    assert!(all_finite(std::str::from_utf8(&a).unwrap()));
}

#[test]
fn empty_grid_fails_without_output() {
    let tmp = tempfile::tempdir().unwrap();
    let config = write_config(
        tmp.path(),
        "empty.conf",
        "task = separability\nscan.from = 25 um\nscan.to = 2.5 mm\nscan.points = 0\n",
    );
    let out = tmp.path().join("out");
    let o = run(&config, &out);
    assert_eq!(o.status.code(), Some(1), "{}", stderr(&o));
    assert!(stderr(&o).contains("scan.points"), "{}", stderr(&o));
    assert!(!out.exists());
}

#[test]
fn unknown_key_and_bad_unit_are_config_errors() {
    let tmp = tempfile::tempdir().unwrap();
    let unknown = write_config(
        tmp.path(),
        "unknown.conf",
        "task = constants\nsetup.lenght = 1 mm\n",
    );
    let o = spdc(&["validate", unknown.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("setup.lenght"), "{}", stderr(&o));

    let unit = write_config(
        tmp.path(),
        "unit.conf",
        "task = constants\nsetup.L = 1 furlong\n",
    );
    let o = spdc(&["validate", unit.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("setup.L"), "{}", stderr(&o));

    let o = spdc(&["run", tmp.path().join("missing.conf").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    let o = spdc(&["frobnicate"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn validate_prints_every_default() {
    let o = spdc(&["validate", shipped("constants.conf").to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = String::from_utf8(o.stdout).unwrap();
    for line in [
        "task = constants",
        "setup.L = 1 mm",
        "spectrum.pump = 5 nm",
        "oracle = analytic",
    ] {
        assert!(
            text.lines().any(|l| l.trim() == line),
            "missing `{line}` in\n{text}"
        );
    }
}

#[test]
fn constants_command_reports_derived_values() {
    let o = spdc(&["constants", shipped("constants.conf").to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    let alpha = v["alpha_rad"].as_f64().expect("alpha in rad");
    assert!((alpha - 0.524_164_254_665_745).abs() < 1e-12, "{v}");
    let gamma = v["gamma_rad"].as_f64().expect("gamma");
    assert!((gamma - 0.069_351_018_802_042).abs() < 1e-12, "{v}");
}

#[test]
fn constants_dir_supplies_crystal_files() {
    let tmp = tempfile::tempdir().unwrap();
    let data = tmp.path().join("crystals");
    fs::create_dir(&data).unwrap();
    let builtin =
        fs::read_to_string(Path::new(env!("CARGO_MANIFEST_DIR")).join("data/bbo.sellmeier"))
            .unwrap();
    fs::write(
        data.join("other.sellmeier"),
        builtin.replace("sellmeier.o.A = 2.7359", "sellmeier.o.A = 2.7360"),
    )
    .unwrap();
    let config = write_config(
        tmp.path(),
        "c.conf",
        "task = constants\ncrystal.file = other.sellmeier\n",
    );

    let o = spdc(&["constants", config.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1), "found without the directory");

    let o = Command::new(env!("CARGO_BIN_EXE_spdc"))
        .args(["constants", config.to_str().unwrap()])
        .env("SPDC_CONSTANTS_DIR", &data)
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", stderr(&o));
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    let alpha = v["alpha_rad"].as_f64().unwrap();
    assert!(
        (alpha - 0.524_164_254_665_745).abs() > 1e-6,
        "the modified set should move the cut"
    );
}

#[test]
fn cheap_shipped_configs_produce_finite_tables() {
    let tmp = tempfile::tempdir().unwrap();
    for (config, name, records) in [
        ("constants.conf", "constants", None),
        ("jsa-2500um.conf", "jsa-2500um", Some(41 * 41)),
        ("optimize-lines.conf", "optimize-lines", None),
    ] {
        let o = run(&shipped(config), tmp.path());
        assert!(o.status.success(), "{config}: {}", stderr(&o));
        let csv = fs::read_to_string(tmp.path().join(format!("{name}.csv"))).unwrap();
        assert!(all_finite(&csv), "{config}");
        if let Some(n) = records {
            assert_eq!(csv.lines().count(), n + 1, "{config}");
        }
    }
}
