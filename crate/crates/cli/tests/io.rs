use std::fs;
use std::path::Path;

use redundancy_cli::bundle::{
    MatrixRecord, ReportRow, CURVE_FILE, HIDDEN_HISTOGRAM_FILE, RELEVANT_HISTOGRAM_FILE,
    TARGET_RELEVANT_HISTOGRAM_FILE,
};
use redundancy_cli::{
    emit_plot_data, load_panel_csv, load_te_matrix_csv, save_panel_csv, save_reports_json,
    save_te_matrix_csv, CliError, Provenance, ReportBundle,
};
use redundancy_core::{ProcessId, TeMatrix, TimeSeriesPanel};

fn write(dir: &Path, name: &str, text: &str) -> std::path::PathBuf {
    let path = dir.join(name);
    fs::write(&path, text).unwrap();
    path
}

fn provenance(dir: &Path) -> Provenance {
    Provenance::new("test", Some(1), &serde_json::json!({ "k": 10 }), dir)
}

#[test]
fn loads_small_panel() {
    let dir = tempfile::tempdir().unwrap();
    let path = write(dir.path(), "p.csv", "ch1,ch2\n1.0,2\n-3.5,4e-1\n0,1\n");
    let panel = load_panel_csv(&path).unwrap();
    assert_eq!(panel.labels(), ["ch1", "ch2"]);
    assert_eq!(panel.channel_count(), 2);
    assert_eq!(panel.sample_count(), 3);
    assert_eq!(panel.channel(1), [2.0, 0.4, 1.0]);
}

#[test]
fn ragged_row_reports_line() {
    let dir = tempfile::tempdir().unwrap();
    let path = write(dir.path(), "p.csv", "a,b\n1,2\n3\n4,5\n");
    match load_panel_csv(&path).unwrap_err() {
        CliError::Parse { line, column, .. } => {
            assert_eq!(line, 3);
            assert_eq!(column, 2);
        }
        other => panic!("unexpected {other:?}"),
    }
}

#[test]
fn bad_number_reports_position() {
    let dir = tempfile::tempdir().unwrap();
    let path = write(dir.path(), "p.csv", "a,b\n1,2\n3,x7\n");
    let err = load_panel_csv(&path).unwrap_err();
    assert!(
        matches!(
            err,
            CliError::Parse {
                line: 3,
                column: 2,
                ..
            }
        ),
        "{err:?}"
    );
    assert_eq!(err.exit_code(), 2);
}

#[test]
fn nan_is_non_finite_with_location() {
    let dir = tempfile::tempdir().unwrap();
    let path = write(dir.path(), "p.csv", "a,b\n1,2\n3,4\nNaN,5\n");
    match load_panel_csv(&path).unwrap_err() {
        CliError::NonFinite {
            line,
            column,
            label,
            ..
        } => {
            assert_eq!((line, column), (4, 1));
            assert_eq!(label, "a");
        }
        other => panic!("unexpected {other:?}"),
    }
}

#[test]
fn panel_validation_errors_surface() {
    let dir = tempfile::tempdir().unwrap();
    let dup = write(dir.path(), "dup.csv", "a,a\n1,2\n3,4\n");
    assert!(matches!(
        load_panel_csv(&dup).unwrap_err(),
        CliError::Analysis(redundancy_core::Error::DuplicateLabel(_))
    ));
    let empty = write(dir.path(), "empty.csv", "a,b\n");
    assert!(matches!(
        load_panel_csv(&empty).unwrap_err(),
        CliError::Analysis(redundancy_core::Error::EmptyPanel)
    ));
    let missing = dir.path().join("absent.csv");
    assert!(matches!(
        load_panel_csv(&missing).unwrap_err(),
        CliError::Io { .. }
    ));
}

#[test]
fn panel_round_trip_is_exact() {
    let dir = tempfile::tempdir().unwrap();
    let panel = TimeSeriesPanel::new(
        vec!["x".into(), "y, quoted".into()],
        vec![vec![0.1, 1.0 / 3.0, -2e-300], vec![5.0, f64::MAX, -0.0]],
    )
    .unwrap();
    let path = dir.path().join("p.csv");
    save_panel_csv(&panel, &path).unwrap();
    assert_eq!(load_panel_csv(&path).unwrap(), panel);
}

fn table_one() -> (TeMatrix, Vec<String>) {
    let rows = [
        [None, Some(0.0), Some(0.0), Some(0.0), Some(0.03)],
        [Some(0.0), None, Some(0.09), Some(0.09), Some(0.04)],
        [Some(-0.004), Some(0.0), None, Some(0.0), Some(0.06)],
        [Some(0.0), Some(0.0), Some(0.0), None, Some(0.06)],
        [Some(0.0), Some(0.0), Some(0.0), Some(0.0), None],
    ];
    let ids: Vec<ProcessId> = (0..5).map(ProcessId).collect();
    let m = TeMatrix::from_raw(ids.clone(), ids, rows.iter().map(|r| r.to_vec()).collect());
    let labels = ["psi", "phi", "X", "Y", "Z"].map(String::from).to_vec();
    (m, labels)
}

#[test]
fn matrix_csv_layout() {
    let dir = tempfile::tempdir().unwrap();
    let (m, labels) = table_one();
    let path = dir.path().join("te.csv");
    save_te_matrix_csv(&m, &labels, &path).unwrap();
    let text = fs::read_to_string(&path).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "from/to,psi,phi,X,Y,Z");
    assert_eq!(lines[2], "phi,0.0000,-,0.0900,0.0900,0.0400");
    // Clamped values are written.
    assert!(lines[3].starts_with("X,0.0000,"));
    assert!(!text.contains('\r'));
}

#[test]
fn matrix_round_trip_to_four_decimals() {
    let dir = tempfile::tempdir().unwrap();
    let ids: Vec<ProcessId> = (0..3).map(ProcessId).collect();
    let raw = vec![
        vec![None, Some(0.123_456), Some(0.5)],
        vec![Some(0.000_04), None, Some(1.999_96)],
        vec![Some(0.0), Some(0.25), None],
    ];
    let m = TeMatrix::from_raw(ids.clone(), ids.clone(), raw);
    let labels = ["a", "b", "c"].map(String::from).to_vec();
    let path = dir.path().join("te.csv");
    save_te_matrix_csv(&m, &labels, &path).unwrap();
    let back = load_te_matrix_csv(&path).unwrap();
    assert_eq!(back.row_labels, labels);
    assert_eq!(back.col_labels, labels);
    for (r, row) in m.values.iter().enumerate() {
        for (c, v) in row.iter().enumerate() {
            match (v, back.values[r][c]) {
                (None, None) => {}
                (Some(a), Some(b)) => assert!((a - b).abs() <= 0.5e-4 + 1e-12, "{a} vs {b}"),
                other => panic!("cell ({r}, {c}) mismatch {other:?}"),
            }
        }
    }
    assert_eq!(back.get("b", "c"), Some(2.0));
}

#[test]
fn empty_bundle_json_and_plot_files() {
    let dir = tempfile::tempdir().unwrap();
    let bundle = ReportBundle::empty(provenance(dir.path()));
    let path = dir.path().join("reports.json");
    save_reports_json(&bundle, &path).unwrap();
    let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(v["reports"], serde_json::json!([]));
    assert_eq!(v["provenance"]["tool"], "redundancy");
    assert_eq!(v["provenance"]["config"]["k"], 10);
    assert!(v["provenance"]["runtime"]["created_unix_seconds"].is_u64());

    let out = dir.path().join("plots");
    let files = emit_plot_data(&bundle, &out).unwrap();
    assert_eq!(files.len(), 4);
    assert_eq!(
        fs::read_to_string(out.join(CURVE_FILE)).unwrap(),
        "target,R_phi_to_z,R_phi_to_set,R_set_to_z,bound\n"
    );
    for f in [
        HIDDEN_HISTOGRAM_FILE,
        RELEVANT_HISTOGRAM_FILE,
        TARGET_RELEVANT_HISTOGRAM_FILE,
    ] {
        assert_eq!(fs::read_to_string(out.join(f)).unwrap(), "source,count\n");
    }
}

fn row(target: &str, hidden: &str, relevant: &[&str], t_set: &[&str]) -> ReportRow {
    ReportRow {
        target: target.into(),
        target_relevant: t_set.iter().map(|s| s.to_string()).collect(),
        hidden: hidden.into(),
        relevant: relevant.iter().map(|s| s.to_string()).collect(),
        r_phi_to_z: 0.04,
        r_phi_to_set: 0.09,
        r_set_to_z: 0.06,
        bound: 0.04,
        degenerate_flags: Vec::new(),
    }
}

fn bundle_with(dir: &Path, sources: &[String], reports: Vec<ReportRow>) -> ReportBundle {
    let mut b = ReportBundle::empty(provenance(dir));
    b.sources = sources.to_vec();
    b.targets = reports.iter().map(|r| r.target.clone()).collect();
    b.reports = reports;
    b
}

#[test]
fn curve_has_one_row_per_target() {
    let dir = tempfile::tempdir().unwrap();
    let sources: Vec<String> = (1..=40).map(|i| format!("ch{i}")).collect();
    let reports = (41..=60)
        .map(|i| {
            row(
                &format!("ch{i}"),
                "ch3",
                &["ch1", "ch2"],
                &["ch1", "ch2", "ch5"],
            )
        })
        .collect();
    let bundle = bundle_with(dir.path(), &sources, reports);
    emit_plot_data(&bundle, dir.path()).unwrap();
    let curve = fs::read_to_string(dir.path().join(CURVE_FILE)).unwrap();
    assert_eq!(curve.lines().count(), 21);
    assert_eq!(curve.lines().nth(1).unwrap(), "ch41,0.04,0.09,0.06,0.04");
    let relevant = fs::read_to_string(dir.path().join(RELEVANT_HISTOGRAM_FILE)).unwrap();
    assert!(relevant.contains("\nch1,20\n"));
    assert!(relevant.contains("\nch4,0\n"));
    assert_eq!(relevant.lines().count(), 41);
    let t_set = fs::read_to_string(dir.path().join(TARGET_RELEVANT_HISTOGRAM_FILE)).unwrap();
    assert!(t_set.contains("\nch5,20\n"));
}

#[test]
fn hidden_histogram_counts_selection() {
    let dir = tempfile::tempdir().unwrap();
    let sources: Vec<String> = (60..=76).map(|i| format!("ch{i}")).collect();
    let bundle = bundle_with(
        dir.path(),
        &sources,
        vec![row("ch1", "ch68", &["ch70"], &["ch70"])],
    );
    emit_plot_data(&bundle, dir.path()).unwrap();
    let hist = fs::read_to_string(dir.path().join(HIDDEN_HISTOGRAM_FILE)).unwrap();
    assert!(hist.contains("\nch68,1\n"));
    let total: usize = hist
        .lines()
        .skip(1)
        .map(|l| l.rsplit(',').next().unwrap().parse::<usize>().unwrap())
        .sum();
    assert_eq!(total, 1);
}

#[test]
fn matrix_record_keeps_raw_and_clamped() {
    let (m, labels) = table_one();
    let rec = MatrixRecord::from_matrix(&m, &labels);
    assert_eq!(rec.sources, labels);
    assert_eq!(rec.raw[2][0], Some(-0.004));
    assert_eq!(rec.clamped[2][0], Some(0.0));
    assert_eq!(rec.clamped[1][1], None);
}
