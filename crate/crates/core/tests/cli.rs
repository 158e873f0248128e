use std::path::Path;
use std::process::Command;

use sitepair::feshbach::{pseudopotential_curve, synthetic_data, Branch, FeshbachParams};
use sitepair::quantities::{derive_pair_parameters, AtomSpecies, TrapSpec};

const HARMONIC: &str = r#"
task = "solve"
[atoms]
first = "Rb87"
second = "Rb87"
[trap]
wavelength = { value = 1030.0, unit = "nm" }
depth_first = { value = 40.0, unit = "Er1" }
depth_second = { value = 40.0, unit = "Er1" }
taylor_orders = [2]
[interaction]
kind = "none"
[basis]
l_max = 0
com = { kind = "linear", r_max = { value = 0.6, unit = "um" }, intervals = 40, order = 8 }
rel = { kind = "linear", r_max = { value = 0.6, unit = "um" }, intervals = 40, order = 8 }
[ci]
com_orbitals = 4
rel_orbitals = 4
"#;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_sitepair"))
}

fn run(config: &Path, out: &Path) -> std::process::Output {
    bin().arg("--config").arg(config).arg("--out").arg(out).arg("--threads").arg("1").output().unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> std::path::PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn column(csv_text: &str, name: &str) -> Vec<String> {
    let mut r = csv::Reader::from_reader(csv_text.as_bytes());
    let i = r.headers().unwrap().iter().position(|h| h == name).unwrap();
    r.records().map(|x| x.unwrap()[i].to_string()).collect()
}

#[test]
fn harmonic_solve_gives_zero_point_energy() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "h.toml", HARMONIC);
    let o = run(&cfg, &dir.path().join("out"));
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));

    let rb = AtomSpecies::from_catalog("Rb87").unwrap();
    let er = rb.recoil_energy(1030.0 / sitepair::quantities::constants::BOHR_NM);
    let trap = TrapSpec::isotropic(1030.0, 40.0 * er, 40.0 * er, 2).unwrap();
    let p = derive_pair_parameters(&rb, &rb, &trap).unwrap();
    let expect = 1.5 * (p.omega_rel.unwrap() + p.omega_com.unwrap());

    let text = std::fs::read_to_string(dir.path().join("out/energies.csv")).unwrap();
    let levels = column(&text, "level");
    let idx = column(&text, "index");
    let e = column(&text, "energy_hartree");
    for lv in ["E2", "CI2"] {
        let k = (0..levels.len()).find(|&k| levels[k] == lv && idx[k] == "0").unwrap();
        let v: f64 = e[k].parse().unwrap();
        assert!(((v - expect) / expect).abs() < 1e-8, "{lv}: {v} vs {expect}");
    }
    assert!(!dir.path().join("out/ledger.csv").exists());
    let m: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("out/manifest.json")).unwrap()).unwrap();
    assert_eq!(m["com_splines"], 45);
    assert!(m["artifacts"]["energies.csv"].as_str().unwrap().len() == 64);
}

#[test]
fn reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "h.toml", HARMONIC);
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    assert!(run(&cfg, &a).status.success());
    assert!(run(&cfg, &b).status.success());
    for f in ["energies.csv", "manifest.json"] {
        assert_eq!(std::fs::read(a.join(f)).unwrap(), std::fs::read(b.join(f)).unwrap(), "{f}");
    }
}

#[test]
fn json_config_matches_toml() {
    let dir = tempfile::tempdir().unwrap();
    let toml_cfg = write(dir.path(), "h.toml", HARMONIC);
    let value: toml::Value = toml::from_str(HARMONIC).unwrap();
    let json_cfg = write(dir.path(), "h.json", &serde_json::to_string(&value).unwrap());
    assert!(run(&toml_cfg, &dir.path().join("t")).status.success());
    assert!(run(&json_cfg, &dir.path().join("j")).status.success());
    assert_eq!(
        std::fs::read(dir.path().join("t/energies.csv")).unwrap(),
        std::fs::read(dir.path().join("j/energies.csv")).unwrap()
    );
}

#[test]
fn missing_unit_is_rejected_with_line() {
    let dir = tempfile::tempdir().unwrap();
    let bad = HARMONIC.replace("depth_second = { value = 40.0, unit = \"Er1\" }", "depth_second = { value = 40.0 }");
    let cfg = write(dir.path(), "bad.toml", &bad);
    let o = run(&cfg, &dir.path().join("out"));
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("bad.toml:9"), "{err}");
    assert!(err.contains("unit"), "{err}");
    assert!(!dir.path().join("out").exists());
}

#[test]
fn task_flag_overrides_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "h.toml", HARMONIC);
    let o = bin().arg("--config").arg(&cfg).arg("--out").arg(dir.path().join("o")).args(["--task", "sweep"]).output().unwrap();
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("[sweep]"));
}

#[test]
fn fit_recovers_synthetic_resonance() {
    let dir = tempfile::tempdir().unwrap();
    let rb = AtomSpecies::from_catalog("Rb87").unwrap();
    let k = AtomSpecies::from_catalog("K40").unwrap();
    let er = rb.recoil_energy(1030.0 / sitepair::quantities::constants::BOHR_NM);
    let trap = TrapSpec::isotropic(1030.0, 40.0 * er, 37.2 * er, 2).unwrap();
    let p = derive_pair_parameters(&rb, &k, &trap).unwrap();
    let grid: Vec<f64> = (-40..=40).filter(|&i| i != 0).map(|i| 9000.0 / i as f64).chain([-185.0]).collect();
    let curve = pseudopotential_curve(&grid, p.omega_rel.unwrap(), p.a_ho.unwrap(), 1.5 * p.omega_com.unwrap()).unwrap();
    let truth = FeshbachParams::RBK_REFIT;
    let fields = [(Branch::RM, 546.2), (Branch::RM, 546.4), (Branch::RIP, 546.0), (Branch::RIP, 545.5), (Branch::CIM, 547.5), (Branch::CIM, 548.5)];
    let data = synthetic_data(&curve, &truth, &fields).unwrap();
    let mut text = String::from("b_gauss,e_b_khz,branch,sigma_khz\n");
    for d in &data {
        text += &format!("{:.16e},{:.16e},{},\n", d.b, d.e_b, d.branch);
    }
    write(dir.path(), "data.csv", &text);
    let a: Vec<String> = grid.iter().map(|x| format!("{x:.16e}")).collect();
    let cfg = format!(
        r#"
task = "fit"
[atoms]
first = "Rb87"
second = "K40"
[trap]
wavelength = {{ value = 1030.0, unit = "nm" }}
depth_first = {{ value = 40.0, unit = "Er1" }}
depth_second = {{ value = 37.2, unit = "Er1" }}
taylor_orders = [2]
[interaction]
kind = "none"
[map]
source = "pseudopotential"
level = "E2"
a_sc = {{ values = [{}], unit = "a0" }}
resonance = {{ b0 = {{ value = 546.8, unit = "G" }}, delta_b = {{ value = -3.0, unit = "G" }}, a_bg = {{ value = -185.0, unit = "a0" }} }}
[fit]
data_file = "data.csv"
free = ["b0"]
half_width = [{{ value = 0.5, unit = "G" }}]
scan_points = 201
"#,
        a.join(", ")
    );
    let cfg = write(dir.path(), "fit.toml", &cfg);
    let o = run(&cfg, &dir.path().join("out"));
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("out/fit.json")).unwrap()).unwrap();
    let b0 = report["best"]["params"]["b0"].as_f64().unwrap();
    assert!((b0 - truth.b0).abs() < 1e-4, "{b0}");
    let curve_csv = std::fs::read_to_string(dir.path().join("out/curve.csv")).unwrap();
    let branches = column(&curve_csv, "branch");
    for b in ["RM", "CIM", "RIP"] {
        assert!(branches.iter().any(|x| x == b), "{b}");
    }
    // The pseudopotential curve is its own energy-dependent map: a^E = a.
    let a_col = column(&curve_csv, "a_sc_a0");
    let ae = column(&curve_csv, "a_sc_energy_dependent_a0");
    for (x, y) in a_col.iter().zip(&ae) {
        let (x, y): (f64, f64) = (x.parse().unwrap(), y.parse().unwrap());
        assert!((x - y).abs() < 1e-6 * x.abs().max(1.0), "{x} {y}");
    }
}

#[test]
fn reduced_sweep_is_monotone_and_maps_from_file() {
    let dir = tempfile::tempdir().unwrap();
    let base = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/../../configs/rbk_sweep.toml")).unwrap();
    let small = base
        .replace("l_max = 3", "l_max = 0")
        .replace("com_orbitals = 60", "com_orbitals = 10")
        .replace("rel_orbitals = 120", "rel_orbitals = 30")
        .replace("[-6600.0, -3000.0, -1000.0, -185.0, 1000.0, 3000.0, 6600.0]", "[-6600.0, -1000.0, -185.0, 1000.0, 6600.0]");
    let cfg = write(dir.path(), "sweep.toml", &small);
    let o = run(&cfg, &dir.path().join("sweep"));
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(dir.path().join("sweep/energies.csv")).unwrap();
    let (lv, a, tag, e) = (column(&text, "level"), column(&text, "a_sc_a0"), column(&text, "tag"), column(&text, "energy_hartree"));
    let mut ti: Vec<(f64, f64)> = Vec::new();
    for k in 0..lv.len() {
        let x: f64 = a[k].parse().unwrap();
        if lv[k] == "CI6" && tag[k] == "1ti" && !ti.iter().any(|p| p.0 == x) {
            ti.push((x, e[k].parse().unwrap()));
        }
    }
    assert_eq!(ti.len(), 5);
    assert!(ti.windows(2).all(|w| w[0].0 < w[1].0 && w[0].1 < w[1].1), "{ti:?}");

    let map = format!(
        "{}\n[map]\nsource = \"file\"\nenergies_file = \"sweep/energies.csv\"\nresonance = {{ b0 = {{ value = 546.66, unit = \"G\" }}, delta_b = {{ value = -3.0, unit = \"G\" }}, a_bg = {{ value = -185.0, unit = \"a0\" }} }}\n",
        small.replace("task = \"sweep\"", "task = \"map\"")
    );
    let cfg = write(dir.path(), "map.toml", &map);
    let o = run(&cfg, &dir.path().join("map"));
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let c = std::fs::read_to_string(dir.path().join("map/curve.csv")).unwrap();
    let (br, ca, eb, ae) = (column(&c, "branch"), column(&c, "a_sc_a0"), column(&c, "e_b_khz"), column(&c, "a_sc_energy_dependent_a0"));
    for k in 0..br.len() {
        let x: f64 = ca[k].parse().unwrap();
        let y: f64 = eb[k].parse().unwrap();
        match br[k].as_str() {
            "CIM" if x == -185.0 => assert_eq!(y, 0.0),
            "RIP" => assert!(y < 0.0, "{x} {y}"),
            "RM" => assert!(y > 0.0, "{x} {y}"),
            _ => {}
        }
        // The remapped a^E keeps the sign of a_sc on the trap-induced branches.
        if br[k] != "RM" && !ae[k].is_empty() {
            assert_eq!(ae[k].parse::<f64>().unwrap() > 0.0, x > 0.0, "{x} {}", ae[k]);
        }
    }
    assert!(!dir.path().join("map/energies.csv").exists());
}
