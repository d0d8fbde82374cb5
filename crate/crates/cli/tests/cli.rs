use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use mbprop_cli::config;
use tempfile::TempDir;

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs")
}

fn mbprop(out: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mbprop"))
        .arg("--out")
        .arg(out)
        .args(args)
        .output()
        .expect("binary runs")
}

const SMALL: &str = "[grid]\nnz = 20\ntail_window = 300\n";

fn small_config(dir: &TempDir, extra: &str) -> String {
    let p = dir.path().join("small.ini");
    fs::write(&p, format!("{SMALL}{extra}")).unwrap();
    p.to_string_lossy().into_owned()
}

fn manifest_value(dir: &Path, key: &str) -> String {
    let text = fs::read_to_string(dir.join("manifest.txt")).unwrap();
    text.lines()
        .find_map(|l| l.split_once(" = ").filter(|(k, _)| *k == key).map(|(_, v)| v.to_string()))
        .unwrap_or_else(|| panic!("{key} missing"))
}

fn data_rows(path: &Path) -> Vec<String> {
    fs::read_to_string(path).unwrap().lines().filter(|l| !l.starts_with('#')).map(String::from).collect()
}

fn without_wall_time(path: &Path) -> String {
    fs::read_to_string(path).unwrap().lines().filter(|l| !l.starts_with("wall_time_s")).collect::<Vec<_>>().join("\n")
}

#[test]
fn reference_run_writes_four_files_with_nt_rows() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("run");
    let cfg = configs().join("reference.ini");
    let o = mbprop(&out, &["run", cfg.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let nt: usize = manifest_value(&out, "grid_nt").parse().unwrap();
    for f in ["omega1_out.csv", "omega_s_out.csv", "rho_probes.csv"] {
        let text = fs::read_to_string(out.join(f)).unwrap();
        assert!(text.starts_with("# t_fs"), "{f}");
        assert_eq!(text.lines().filter(|l| l.starts_with('#')).count(), 1, "{f}");
        assert_eq!(data_rows(&out.join(f)).len(), nt, "{f}");
    }
    let digest = manifest_value(&out, "config_sha256");
    assert_eq!(digest.len(), 64);
}

#[test]
fn csv_values_round_trip() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("run");
    assert!(mbprop(&out, &["run", &small_config(&tmp, "")]).status.success());
    for row in data_rows(&out.join("omega_s_out.csv")).iter().take(2000) {
        let v: Vec<f64> = row.split(',').map(|c| c.parse().unwrap()).collect();
        assert_eq!(v.len(), 4);
        assert_eq!(v[3], v[1] * v[1] + v[2] * v[2]);
    }
}

#[test]
fn negative_density_is_rejected_by_name() {
    let tmp = TempDir::new().unwrap();
    let cfg = small_config(&tmp, "[medium]\ndensity = -4e16\n");
    let o = mbprop(&tmp.path().join("x"), &["run", &cfg]);
    assert_eq!(o.status.code(), Some(1));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("density") && err.contains("line 5"), "{err}");
}

#[test]
fn unknown_key_and_bad_syntax_exit_one() {
    let tmp = TempDir::new().unwrap();
    for (extra, needle) in [("[run]\nrho_cc = 0.1\n", "rho_cc"), ("[run]\nrho_bb 0.1\n", "line 5"), ("[grid]\ndt = fast\n", "fast")] {
        let o = mbprop(&tmp.path().join("x"), &["run", &small_config(&tmp, extra)]);
        assert_eq!(o.status.code(), Some(1), "{extra}");
        assert!(String::from_utf8_lossy(&o.stderr).contains(needle), "{extra}");
    }
    let missing = mbprop(&tmp.path().join("x"), &["run", "/nonexistent/cfg.ini"]);
    assert_eq!(missing.status.code(), Some(1));
}

#[test]
fn reruns_are_byte_identical() {
    let tmp = TempDir::new().unwrap();
    let cfg = small_config(&tmp, "[run]\ndelay = 200\n");
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    assert!(mbprop(&a, &["run", &cfg]).status.success());
    assert!(mbprop(&b, &["run", &cfg]).status.success());
    for f in ["omega1_out.csv", "omega_s_out.csv", "rho_probes.csv"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f}");
    }
    assert_eq!(without_wall_time(&a.join("manifest.txt")), without_wall_time(&b.join("manifest.txt")));
}

#[test]
fn delay_scan_is_independent_of_worker_count() {
    let tmp = TempDir::new().unwrap();
    let cfg = small_config(&tmp, "[run]\nrho_bb = 0.4\n");
    let (a, b) = (tmp.path().join("j1"), tmp.path().join("j8"));
    let args = |_: &Path| vec!["delay-scan", cfg.as_str(), "--taus", "0:400:100", "--fit", "100:400"];
    let oa = Command::new(env!("CARGO_BIN_EXE_mbprop")).args(["--out", a.to_str().unwrap(), "--jobs", "1"]).args(args(&a)).output().unwrap();
    let ob = Command::new(env!("CARGO_BIN_EXE_mbprop")).args(["--out", b.to_str().unwrap(), "--jobs", "8"]).args(args(&b)).output().unwrap();
    assert!(oa.status.success() && ob.status.success(), "{}", String::from_utf8_lossy(&oa.stderr));
    assert_eq!(fs::read(a.join("scan.csv")).unwrap(), fs::read(b.join("scan.csv")).unwrap());
    assert_eq!(data_rows(&a.join("scan.csv")).len(), 5);
    assert_eq!(data_rows(&a.join("scan.csv"))[1].split(',').next(), Some("100"));
    let fit = fs::read_to_string(a.join("fit.txt")).unwrap();
    for key in ["rate_per_ns = ", "amplitude = ", "residual = "] {
        assert!(fit.contains(key), "{fit}");
    }
    roxmltree::Document::parse(&fs::read_to_string(a.join("scan.svg")).unwrap()).unwrap();
}

#[test]
fn single_delay_scan_matches_run() {
    let tmp = TempDir::new().unwrap();
    let cfg = small_config(&tmp, "[run]\ndelay = 100\n");
    let (scan, run) = (tmp.path().join("scan"), tmp.path().join("run"));
    assert!(mbprop(&scan, &["delay-scan", &cfg, "--taus", "100:100:50"]).status.success());
    assert!(mbprop(&run, &["run", &cfg]).status.success());
    let row = data_rows(&scan.join("scan.csv"));
    assert_eq!(row.len(), 1);
    let integral = row[0].split(',').nth(1).unwrap().to_string();
    assert_eq!(integral, manifest_value(&run, "integrated_signal"));
}

#[test]
fn population_scan_rows_and_errors() {
    let tmp = TempDir::new().unwrap();
    let cfg = small_config(&tmp, "");
    let out = tmp.path().join("p");
    assert!(mbprop(&out, &["population-scan", &cfg, "--rho-bb", "0", "--tau", "0"]).status.success());
    let rows = data_rows(&out.join("scan.csv"));
    assert_eq!(rows.len(), 1);
    assert_eq!(rows[0].split(',').count(), 3);
    let bad = mbprop(&out, &["population-scan", &cfg, "--rho-bb", "0.2,0.1"]);
    assert_eq!(bad.status.code(), Some(1));
    let range = mbprop(&out, &["population-scan", &cfg, "--rho-bb", "0,1.5"]);
    assert_eq!(range.status.code(), Some(1));
}

#[test]
fn spectrum_from_record_csv() {
    let tmp = TempDir::new().unwrap();
    let run = tmp.path().join("run");
    assert!(mbprop(&run, &["run", &small_config(&tmp, "")]).status.success());
    let spec = tmp.path().join("spec");
    let input = run.join("omega_s_out.csv");
    let o = mbprop(&spec, &["--logy", "spectrum", input.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = fs::read_to_string(spec.join("spectrum.csv")).unwrap();
    assert!(text.contains("# asymmetry = ") && text.contains("# fwhm_THz = "));
    assert!(text.contains("# offset_THz, power"));
    let svg = fs::read_to_string(spec.join("spectrum.svg")).unwrap();
    let doc = roxmltree::Document::parse(&svg).unwrap();
    assert_eq!(doc.root_element().tag_name().name(), "svg");
    assert!(doc.descendants().any(|n| n.has_tag_name("polyline")));
    assert!(svg.contains("tau = 0 fs"), "title from the manifest");
}

#[test]
fn constant_series_peaks_at_zero() {
    let tmp = TempDir::new().unwrap();
    let mut text = String::from("# t_fs, re, im, abs2\n");
    for k in 0..64 {
        text.push_str(&format!("{},2,0,4\n", k as f64 * 0.5));
    }
    let input = tmp.path().join("const.csv");
    fs::write(&input, text).unwrap();
    let out = tmp.path().join("s");
    assert!(mbprop(&out, &["spectrum", input.to_str().unwrap()]).status.success());
    let csv = fs::read_to_string(out.join("spectrum.csv")).unwrap();
    assert!(csv.contains("# peak_offset_THz = 0\n"), "{}", &csv[..200]);
}

#[test]
fn malformed_spectrum_input_exits_one() {
    let tmp = TempDir::new().unwrap();
    let input = tmp.path().join("bad.csv");
    fs::write(&input, "# t_fs, re, im, abs2\n0,1,2\n").unwrap();
    let o = mbprop(&tmp.path().join("s"), &["spectrum", input.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 2"));
}

fn seed_gain(out: &Path) -> f64 {
    let input: f64 = manifest_value(out, "input_signal").parse().unwrap();
    let output: f64 = manifest_value(out, "integrated_signal").parse().unwrap();
    output / input
}

#[test]
fn seed_is_amplified_when_b_is_inverted_and_absorbed_otherwise() {
    let tmp = TempDir::new().unwrap();
    let gain_cfg = configs().join("seed_gain.ini");
    let out = tmp.path().join("gain");
    let o = mbprop(&out, &["seed-run", gain_cfg.to_str().unwrap(), "--delay", "500"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(seed_gain(&out) > 1.0, "{}", seed_gain(&out));

    let absorb = tmp.path().join("absorb.ini");
    fs::write(&absorb, "[pulses]\nread_amplitude = 0\nseed_amplitude = 1e7\n[run]\nrho_bb = 0\n").unwrap();
    let out = tmp.path().join("absorb");
    assert!(mbprop(&out, &["seed-run", absorb.to_str().unwrap(), "--delay", "500"]).status.success());
    assert!(seed_gain(&out) < 1.0, "{}", seed_gain(&out));
}

#[test]
fn zero_seed_is_rejected() {
    let tmp = TempDir::new().unwrap();
    let o = mbprop(&tmp.path().join("x"), &["seed-run", &small_config(&tmp, ""), "--delay", "500"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn convergence_report() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("c");
    let o = mbprop(&out, &["convergence", &small_config(&tmp, "")]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stdout));
    assert!(fs::read_to_string(out.join("convergence.txt")).unwrap().contains("passed = true"));
}

#[test]
fn injected_fault_fails_validation_with_numerical_status() {
    let tmp = TempDir::new().unwrap();
    let o = mbprop(&tmp.path().join("v"), &["--jobs", "4", "validate", "--inject-fault"]);
    assert_eq!(o.status.code(), Some(2));
    let report = String::from_utf8_lossy(&o.stdout);
    assert!(report.lines().any(|l| l.starts_with("FAIL model: two-photon elimination")), "{report}");
}

#[test]
fn config_dump_reloads_identically() {
    let text = fs::read_to_string(configs().join("reference.ini")).unwrap();
    let a = config::parse(&text).unwrap();
    let b = config::parse(&a.dump()).unwrap();
    assert_eq!(a, b);
    let odd = "[medium]\ndelta = 6.283185307179586\ndensity = 3.3e16\nlambda_ax = 791.7\n\
               [grid]\ndt = 0.07\nprobes = 0, 0.05, 0.15\n[run]\ndelay = -123.4\nrho_aa = 0.3\n\
               [sweep]\ntaus = 500:2000:100\nfit = 600:1900\nrho_bb = 0, 0.1\n";
    let c = config::parse(odd).unwrap();
    let d = config::parse(&c.dump()).unwrap();
    assert_eq!(c, d);
    assert_eq!(c.dump(), d.dump());
}

#[test]
fn reference_file_matches_built_in_defaults() {
    let text = fs::read_to_string(configs().join("reference.ini")).unwrap();
    let mut a = config::parse(&text).unwrap();
    a.sweep = Default::default();
    assert_eq!(a, config::parse("").unwrap());
}
