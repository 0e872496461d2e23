use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn lifespan(args: &[&str], config: &Path, out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lifespan"))
        .args(args)
        .arg("--config")
        .arg(config)
        .arg("--out")
        .arg(out)
        .arg("--quiet")
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn body(path: &Path) -> String {
    fs::read_to_string(path).unwrap().lines().filter(|l| !l.starts_with('#')).collect::<Vec<_>>().join("\n")
}

type Row = HashMap<String, String>;

/// Rows of a CSV body as header-keyed maps.
fn rows(path: &Path) -> Vec<Row> {
    csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_path(path)
        .unwrap()
        .deserialize()
        .collect::<Result<_, _>>()
        .unwrap()
}

fn row<'a>(rows: &'a [Row], key: &str, name: &str) -> &'a Row {
    rows.iter().find(|r| r[key] == name).unwrap_or_else(|| panic!("no row {name}"))
}

/// Writes an edited copy of a bundled config into `dir`.
fn edited(dir: &Path, name: &str, edit: impl FnOnce(&mut Value)) -> PathBuf {
    let mut v: Value = serde_json::from_str(&fs::read_to_string(configs().join(name)).unwrap()).unwrap();
    edit(&mut v);
    let path = dir.join(name);
    fs::write(&path, serde_json::to_string_pretty(&v).unwrap()).unwrap();
    path
}

#[test]
fn constant_datum_full_pipeline() {
    let tmp = TempDir::new().unwrap();
    let cfg = configs().join("constant.json");
    for cmd in ["density", "bounds", "simulate", "kernel-check"] {
        let o = lifespan(&[cmd], &cfg, tmp.path());
        assert_eq!(code(&o), 0, "{cmd}: {}", String::from_utf8_lossy(&o.stderr));
    }
    for f in ["density.csv", "bounds.csv", "blowup.csv", "history.csv", "kernel_check.csv"] {
        assert!(tmp.path().join(f).exists(), "{f}");
    }
    let o = lifespan(&["verify"], &cfg, tmp.path());
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));

    let b = rows(&tmp.path().join("bounds.csv"));
    for name in ["lower", "thm1", "thm2"] {
        let v: f64 = row(&b, "name", name)["value"].parse().unwrap();
        assert!((v - 1.0).abs() < 1e-9, "{name} = {v}");
    }
    let blowup = rows(&tmp.path().join("blowup.csv"));
    assert_eq!(blowup[0]["status"], "blew_up");
    let t: f64 = blowup[0]["t_num"].parse().unwrap();
    assert!((t - 1.0).abs() < 1e-3, "{t}");
    let v = rows(&tmp.path().join("verify.csv"));
    assert!(v.iter().all(|r| r["status"] == "pass"));
}

#[test]
fn stripe_verify_passes_and_sandwiches() {
    let tmp = TempDir::new().unwrap();
    let o = lifespan(&["verify"], &configs().join("stripe.json"), tmp.path());
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let blowup = rows(&tmp.path().join("blowup.csv"));
    let t: f64 = blowup[0]["t_num"].parse().unwrap();
    assert!((1.0..=2.0).contains(&t), "{t}");
    let b = rows(&tmp.path().join("bounds.csv"));
    let thm2: f64 = row(&b, "name", "thm2")["value"].parse().unwrap();
    assert!(t <= thm2 * 1.02);
    assert_eq!(row(&b, "name", "yamauchi")["available"].split(':').next(), Some("false"));
}

#[test]
fn outputs_are_reproducible() {
    let a = TempDir::new().unwrap();
    let b = TempDir::new().unwrap();
    let cfg = configs().join("cone.json");
    assert_eq!(code(&lifespan(&["bounds"], &cfg, a.path())), 0);
    assert_eq!(code(&lifespan(&["bounds"], &cfg, b.path())), 0);
    for f in ["density.csv", "bounds.csv"] {
        assert_eq!(body(&a.path().join(f)), body(&b.path().join(f)), "{f}");
    }
    let reseeded = TempDir::new().unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_lifespan"))
        .args(["bounds", "--quiet", "--seed", "4", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(reseeded.path())
        .output()
        .unwrap();
    assert_eq!(code(&o), 0);
    let ha = &rows(&a.path().join("bounds.csv"))[0]["config_hash"];
    let hr = &rows(&reseeded.path().join("bounds.csv"))[0]["config_hash"];
    assert_ne!(ha, hr);
}

#[test]
fn factorial_rings_bounds() {
    let tmp = TempDir::new().unwrap();
    let o = lifespan(&["bounds"], &configs().join("factorial_rings.json"), tmp.path());
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let b = rows(&tmp.path().join("bounds.csv"));
    let thm1: f64 = row(&b, "name", "thm1")["value"].parse().unwrap();
    assert!(thm1 > 1.0 && thm1 < 1.0 / (1.0 - 0.21), "{thm1}");
    assert_eq!(row(&b, "name", "yamauchi")["value"], "unavailable");
}

#[test]
fn gaussian_has_only_the_lower_bound() {
    let tmp = TempDir::new().unwrap();
    let o = lifespan(&["bounds"], &configs().join("gaussian.json"), tmp.path());
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let b = rows(&tmp.path().join("bounds.csv"));
    assert_eq!(row(&b, "name", "lower")["available"], "true");
    for name in ["thm1", "thm2", "yamauchi", "weissler"] {
        assert_eq!(row(&b, "name", name)["value"], "unavailable", "{name}");
    }
}

#[test]
fn missing_seed_is_a_config_error() {
    let tmp = TempDir::new().unwrap();
    let cfg = edited(tmp.path(), "stripe.json", |v| {
        v.as_object_mut().unwrap().remove("seed");
    });
    let o = lifespan(&["density"], &cfg, &tmp.path().join("out"));
    assert_eq!(code(&o), 2);
}

#[test]
fn malformed_config_is_a_config_error() {
    let tmp = TempDir::new().unwrap();
    let cfg = edited(tmp.path(), "constant.json", |v| v["problem"]["p"] = Value::from(0.5));
    assert_eq!(code(&lifespan(&["bounds"], &cfg, &tmp.path().join("out"))), 2);
    let o = Command::new(env!("CARGO_BIN_EXE_lifespan")).arg("bounds").output().unwrap();
    assert_eq!(code(&o), 2);
}

#[test]
fn step_limit_is_a_numerical_failure() {
    let tmp = TempDir::new().unwrap();
    let cfg = edited(tmp.path(), "constant.json", |v| v["simulate"]["max_steps"] = Value::from(10));
    let out = tmp.path().join("out");
    let o = lifespan(&["simulate"], &cfg, &out);
    assert_eq!(code(&o), 3, "{}", String::from_utf8_lossy(&o.stderr));
    let blowup = rows(&out.join("blowup.csv"));
    assert_eq!(blowup[0]["status"], "numerical_failure");
}

#[test]
fn corrupted_densities_fail_verification() {
    let tmp = TempDir::new().unwrap();
    let first = tmp.path().join("first");
    assert_eq!(code(&lifespan(&["density"], &configs().join("stripe.json"), &first)), 0);
    let text = fs::read_to_string(first.join("density.csv")).unwrap();
    let forged: Vec<String> = text
        .lines()
        .map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            if f[0] == "d_bar" && f[1] == "1" {
                let mut g = f.clone();
                g[4] = "1";
                g.join(",")
            } else {
                l.to_string()
            }
        })
        .collect();
    assert_ne!(forged.join("\n"), text.trim_end());
    let forged_path = tmp.path().join("forged.csv");
    fs::write(&forged_path, forged.join("\n") + "\n").unwrap();

    let cfg = edited(tmp.path(), "stripe.json", |v| {
        v["density"]["ingest"] = Value::from(forged_path.to_str().unwrap());
    });
    let out = tmp.path().join("second");
    let o = lifespan(&["verify"], &cfg, &out);
    assert_eq!(code(&o), 1, "{}", String::from_utf8_lossy(&o.stderr));
    let v = rows(&out.join("verify.csv"));
    assert_eq!(row(&v, "check", "sandwich_thm2")["status"], "fail");
}

#[test]
fn out_of_range_density_is_rejected_on_ingest() {
    let tmp = TempDir::new().unwrap();
    let first = tmp.path().join("first");
    assert_eq!(code(&lifespan(&["density"], &configs().join("constant.json"), &first)), 0);
    let text = fs::read_to_string(first.join("density.csv")).unwrap().replacen(",1,grid_oracle", ",1.5,grid_oracle", 1);
    let bad = tmp.path().join("bad.csv");
    fs::write(&bad, text).unwrap();
    let cfg = edited(tmp.path(), "constant.json", |v| v["density"]["ingest"] = Value::from(bad.to_str().unwrap()));
    assert_eq!(code(&lifespan(&["bounds"], &cfg, &tmp.path().join("out"))), 2);
}
