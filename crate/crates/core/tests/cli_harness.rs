use std::path::{Path, PathBuf};
use std::process::Command;

use fnls::harness::io::read_orbital_dump;
use fnls::harness::{run, ExperimentSpec, Kind, RawConfig, Results, RunRecord, SCHEMA_VERSION};
use fnls::ledger::BindingLedger;
use fnls::Error;
use proptest::prelude::*;

fn spec(kind: Kind, text: &str, out: &Path) -> ExperimentSpec {
    ExperimentSpec::resolve(Some(kind), &RawConfig::parse(text).unwrap(), out.to_path_buf()).unwrap()
}

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_fnls"))
}

/// Header plus rows; checks LF endings and a constant column count.
fn read_csv(path: &Path) -> (Vec<String>, Vec<Vec<String>>) {
    let text = std::fs::read_to_string(path).unwrap();
    assert!(!text.contains('\r'), "{}: CR found", path.display());
    assert!(text.ends_with('\n'));
    let mut lines = text.lines();
    let header: Vec<String> = lines.next().unwrap().split(',').map(String::from).collect();
    let rows: Vec<Vec<String>> = lines.map(|l| l.split(',').map(String::from).collect()).collect();
    for r in &rows {
        assert_eq!(r.len(), header.len(), "{}", path.display());
    }
    (header, rows)
}

#[test]
fn solve_writes_a_loadable_record_and_density() {
    let dir = tempfile::tempdir().unwrap();
    let s = spec(Kind::Solve, "mass = 1.5\ndump_orbitals = true\n", dir.path());
    let rec = run(&s).unwrap();
    assert!(rec.converged);
    assert_eq!(rec.schema_version, SCHEMA_VERSION);
    let loaded = RunRecord::load(&dir.path().join("record.json")).unwrap();
    assert_eq!(loaded, rec);
    let Results::Solve(state) = &rec.results else { panic!("wrong result kind") };
    assert_eq!(state.mu.len(), 2);

    let (header, rows) = read_csv(&dir.path().join("density.csv"));
    assert_eq!(header, ["x", "rho"]);
    assert_eq!(rows.len(), state.grid.n);

    let raw = read_orbital_dump(&dir.path().join("orbitals_solve.f64")).unwrap();
    assert_eq!(raw.len(), 2 * state.grid.n);
    let h = state.grid.length / state.grid.n as f64;
    let norm: f64 = raw[..state.grid.n].iter().map(|x| x * x).sum::<f64>() * h;
    assert!((norm - 1.0).abs() < 1e-10);
    let sidecar: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("orbitals_solve.json")).unwrap()).unwrap();
    assert_eq!(sidecar["format"], "f64le");
    assert_eq!(sidecar["count"], 2);
    assert!(rec.files.iter().any(|f| f == "summary.txt"));
}

#[test]
fn binding_table_ledger_loads_back() {
    let dir = tempfile::tempdir().unwrap();
    let s = spec(Kind::BindingTable, "n_max = 3\n", dir.path());
    let rec = run(&s).unwrap();
    let Results::BindingTable(report) = &rec.results else { panic!("wrong result kind") };
    let ledger = BindingLedger::load(&dir.path().join("ledger.json")).unwrap();
    assert_eq!(&ledger, &report.ledger);
    assert_eq!(ledger.entries.len(), 3);
    assert!(ledger.entries.values().all(|e| e.provenance.starts_with("binding-table:seed0")));
    let (header, rows) = read_csv(&dir.path().join("binding.csv"));
    assert_eq!(header, ["N", "K", "margin", "slack", "binds"]);
    assert_eq!(rows.len(), 2);
}

#[test]
fn dimer_csv_has_the_documented_columns() {
    let dir = tempfile::tempdir().unwrap();
    let s = spec(Kind::DimerCurve, "r_min = 4\nr_max = 10\nr_step = 2\n", dir.path());
    run(&s).unwrap();
    let (header, rows) = read_csv(&dir.path().join("dimer.csv"));
    assert_eq!(header, ["R", "interaction", "fitted_rate", "theory_rate_attract", "theory_rate_orth", "gram_condition"]);
    assert_eq!(rows.len(), 4);
    let summary = std::fs::read_to_string(dir.path().join("summary.txt")).unwrap();
    assert!(summary.contains("theory_rate_orth: 2ε'"));
}

#[test]
fn cli_exit_status_tracks_convergence() {
    let dir = tempfile::tempdir().unwrap();
    let ok = bin().args(["solve", "--mass", "1.2", "--out"]).arg(dir.path().join("a")).output().unwrap();
    assert_eq!(ok.status.code(), Some(0), "{}", String::from_utf8_lossy(&ok.stderr));

    let cfg = dir.path().join("short.cfg");
    std::fs::write(&cfg, "# too few iterations\nmax_iter = 2\n").unwrap();
    let short = bin().args(["solve", "--config"]).arg(&cfg).arg("--out").arg(dir.path().join("b")).output().unwrap();
    assert_eq!(short.status.code(), Some(2));
    let rec = RunRecord::load(&dir.path().join("b/record.json")).unwrap();
    assert!(!rec.converged);
}

#[test]
fn cli_reports_config_errors_with_line_numbers() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.cfg");
    std::fs::write(&cfg, "dim = 1\n# comment\nwidth = 3\n").unwrap();
    let out = bin().args(["validate-config", "--config"]).arg(&cfg).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("line 3") && err.contains("width"), "{err}");

    std::fs::write(&cfg, "dim = 2\np = 2.0\n").unwrap();
    let out = bin().args(["validate-config", "--config"]).arg(&cfg).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("open range"));
}

#[test]
fn validate_config_prints_a_config_that_resolves_identically() {
    let out = bin().args(["validate-config", "--dim", "2", "--p", "1.4", "--grid-n", "64", "--box-l", "30"]).output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    let raw = RawConfig::parse(&text).unwrap();
    let s = ExperimentSpec::resolve(None, &raw, PathBuf::from("out")).unwrap();
    assert_eq!(s.dim, 2);
    assert_eq!(s.solver.grid.grid_n, Some(64));
    assert_eq!(s.to_config_text(), text);
}

#[test]
fn unknown_keys_are_errors() {
    match RawConfig::parse("p = 1.3\nlamda = 2\n") {
        Err(Error::Config { line: 2, .. }) => {}
        other => panic!("{other:?}"),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn resolved_configs_round_trip(
        kind in prop::sample::select(Kind::ALL.to_vec()),
        dim in 1usize..=3,
        t in 0.05f64..0.95,
        mass in 0.1f64..20.0,
        seed in any::<u64>(),
        restarts in 1usize..5,
        n_half in 4usize..64,
    ) {
        let p = 1.0 + t * (2.0 / dim as f64).min(1.0);
        let text = format!("dim = {dim}\np = {p}\nmass = {mass}\nseed = {seed}\nn_restarts = {restarts}\ngrid_n = {}\np_list = {p}\n", 2 * n_half);
        let raw = RawConfig::parse(&text).unwrap();
        let s = ExperimentSpec::resolve(Some(kind), &raw, PathBuf::from("o")).unwrap();
        let again = ExperimentSpec::resolve(Some(kind), &RawConfig::parse(&s.to_config_text()).unwrap(), PathBuf::from("o")).unwrap();
        prop_assert_eq!(s, again);
    }
}
