use gkdv_modstab::modulation::{Classification, ModulationCubic};
use gkdv_modstab::par::Execution;
use gkdv_modstab::potential::WaveParams;
use gkdv_modstab::report::{
    checks, csv_header, csv_row, csv_string, load_config, plot_csv_string, run_analyze, run_scan,
    run_scan_streaming, single_row, Axis, AxisRange, Mode, ReportDocument, ReportRecord, RunConfig,
    SCHEMA,
};
use gkdv_modstab::Error;
use proptest::prelude::*;
use std::sync::OnceLock;

fn kdv_record() -> &'static ReportRecord {
    static RECORD: OnceLock<ReportRecord> = OnceLock::new();
    RECORD.get_or_init(|| run_analyze(&RunConfig::default()).unwrap())
}

fn e_scan(min: f64, max: f64, count: usize) -> RunConfig {
    RunConfig {
        mode: Mode::Scan,
        grid: vec![AxisRange {
            axis: Axis::E,
            min,
            max,
            count,
        }],
        ..Default::default()
    }
}

#[test]
fn kdv_reference_analysis() {
    let r = kdv_record();
    assert_eq!(r.classification, Classification::ModulationallyStable);
    assert!(r.oracle.is_some());
    for c in checks(r) {
        assert!(c.pass, "{c:?}");
    }
}

#[test]
fn below_the_well_is_a_domain_error() {
    let cfg = RunConfig {
        params: WaveParams::new(0.0, -0.2, 1.0),
        ..Default::default()
    };
    let e = run_analyze(&cfg).unwrap_err();
    assert!(matches!(e, Error::NoPeriodicOrbit(_)), "{e}");
    assert_eq!(e.stage(), "potential_orbit");
    assert!(e.is_domain_error());
}

#[test]
fn invalid_configs_are_rejected() {
    let base = RunConfig::default();
    let mut bad = Vec::new();
    let mut c = base.clone();
    c.numeric.kappas = vec![0.3];
    bad.push(c);
    let mut c = base.clone();
    c.numeric.grid_points = 100;
    bad.push(c);
    let mut c = base.clone();
    c.numeric.ode_tol = 0.0;
    bad.push(c);
    let mut c = e_scan(-0.1, -0.2, 3);
    bad.push(c.clone());
    c.grid[0] = AxisRange {
        min: -0.2,
        max: -0.1,
        count: 0,
        axis: Axis::E,
    };
    bad.push(c);
    for c in bad {
        assert!(matches!(c.validate(), Err(Error::Config(_))), "{c:?}");
    }
}

#[test]
fn repeated_runs_are_byte_identical() {
    let cfg = RunConfig::default();
    let a = ReportDocument::single(&cfg, run_analyze(&cfg).unwrap())
        .to_json()
        .unwrap();
    let b = ReportDocument::single(&cfg, run_analyze(&cfg).unwrap())
        .to_json()
        .unwrap();
    assert_eq!(a, b);
}

#[test]
fn single_report_keys() {
    let doc = ReportDocument::single(&RunConfig::default(), kdv_record().clone());
    let v: serde_json::Value = serde_json::from_str(&doc.to_json().unwrap()).unwrap();
    let mut keys: Vec<&str> = v.as_object().unwrap().keys().map(|k| k.as_str()).collect();
    keys.sort();
    assert_eq!(keys, ["config_echo", "record", "schema"]);
    assert_eq!(v["schema"], SCHEMA);
}

#[test]
fn json_round_trip_is_exact() {
    let cfg = RunConfig::default();
    let doc = ReportDocument::verify(&cfg, kdv_record().clone());
    let text = doc.to_json().unwrap();
    let back = ReportDocument::from_json(&text).unwrap();
    assert_eq!(back, doc);
    assert_eq!(back.to_json().unwrap(), text);
}

#[test]
fn foreign_schema_is_refused() {
    let text = ReportDocument::single(&RunConfig::default(), kdv_record().clone())
        .to_json()
        .unwrap()
        .replacen(SCHEMA, "gkdv-modstab/0", 1);
    assert!(matches!(
        ReportDocument::from_json(&text),
        Err(Error::Config(_))
    ));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn arbitrary_values_survive_the_round_trip(
        vals in prop::array::uniform8(any::<f64>().prop_filter("finite", |v| v.is_finite()))
    ) {
        let mut r = kdv_record().clone();
        r.params = WaveParams::new(vals[0], vals[1], vals[2]);
        r.conserved.T = vals[3];
        r.table.grad_m = [vals[4], vals[5], vals[6]];
        r.proportionality.residual = vals[7];
        let doc = ReportDocument::single(&RunConfig::default(), r);
        let back = ReportDocument::from_json(&doc.to_json().unwrap()).unwrap();
        prop_assert_eq!(back, doc);
    }
}

#[test]
fn config_echo_replays_the_run() {
    let cfg = RunConfig {
        params: WaveParams::new(0.02, -0.08, 1.1),
        ..Default::default()
    };
    let doc = ReportDocument::single(&cfg, run_analyze(&cfg).unwrap());
    let text = doc.to_json().unwrap();
    let replay = load_config(&text).unwrap();
    assert_eq!(replay, cfg);
    let again = ReportDocument::single(&replay, run_analyze(&replay).unwrap());
    assert_eq!(again.to_json().unwrap(), text);
    // a bare config parses too
    let bare = serde_json::to_string(&cfg).unwrap();
    assert_eq!(load_config(&bare).unwrap(), cfg);
}

#[test]
fn scan_across_the_kdv_well() {
    let rows = run_scan(&e_scan(-0.16, -0.01, 20)).unwrap();
    assert_eq!(rows.len(), 20);
    for (i, row) in rows.iter().enumerate() {
        assert_eq!(row.index, i);
        let r = row.record.as_ref().expect("in the well");
        assert_eq!(
            r.classification,
            Classification::ModulationallyStable,
            "E={}",
            row.params.e
        );
    }
}

#[test]
fn out_of_domain_point_becomes_a_skip_row() {
    // E = -0.2 lies below the bottom of the kdv well
    let rows = run_scan(&e_scan(-0.2, -0.1, 3)).unwrap();
    assert_eq!(rows.len(), 3);
    let skip = rows[0].skip.as_ref().expect("skip row");
    assert_eq!(skip.stage, "potential_orbit");
    assert!(rows[0].record.is_none());
    for row in &rows[1..] {
        let cfg = RunConfig {
            params: row.params,
            ..Default::default()
        };
        assert_eq!(row.record.as_ref().unwrap(), &run_analyze(&cfg).unwrap());
    }
    let csv = csv_string(&rows).unwrap();
    let first = csv.lines().nth(1).unwrap();
    assert!(first.starts_with("0,skipped,potential_orbit,"), "{first}");
}

#[test]
fn single_point_scan_matches_analyze() {
    let rows = run_scan(&e_scan(-0.1, -0.1, 1)).unwrap();
    assert_eq!(rows.len(), 1);
    assert_eq!(rows[0].record.as_ref().unwrap(), kdv_record());
}

#[test]
fn csv_has_one_row_per_record() {
    let rows = run_scan(&e_scan(-0.12, -0.06, 3)).unwrap();
    let csv = csv_string(&rows).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines.len(), 4);
    assert_eq!(lines[0], csv_header().join(","));
    for l in &lines[1..] {
        assert_eq!(l.split(',').count(), csv_header().len());
    }
    let plot = plot_csv_string(&rows).unwrap();
    let plot_lines: Vec<&str> = plot.lines().collect();
    assert_eq!(plot_lines.len(), 4);
    assert_eq!(
        plot_lines[0],
        "E,discriminant,root1_re,root1_im,root2_re,root2_im,root3_re,root3_im"
    );
}

#[test]
fn algebraic_roots_in_csv() {
    let mut r = kdv_record().clone();
    r.cubic = ModulationCubic::new(2.0, 0.0);
    let header = csv_header();
    let row = csv_row(&single_row(&r));
    let cell = |name: &str| row[header.iter().position(|h| h == name).unwrap()].clone();
    assert_eq!(cell("root1_re"), "-1.4142135623730951");
    assert_eq!(cell("root1_im"), "0.0");
    assert_eq!(cell("root2_re"), "0.0");
    assert_eq!(cell("root3_re"), "1.4142135623730951");
    assert_eq!(cell("discriminant"), "32.0");
}

#[test]
fn streaming_keeps_grid_order() {
    let cfg = RunConfig {
        grid: vec![
            AxisRange {
                axis: Axis::C,
                min: 0.9,
                max: 1.1,
                count: 2,
            },
            AxisRange {
                axis: Axis::E,
                min: -0.12,
                max: -0.06,
                count: 3,
            },
        ],
        ..e_scan(0.0, 0.0, 1)
    };
    let mut seen = Vec::new();
    let rows = run_scan_streaming(&cfg, |row| {
        seen.push(row.index);
        Ok(())
    })
    .unwrap();
    assert_eq!(seen, (0..6).collect::<Vec<_>>());
    // first axis varies slowest
    assert_eq!(rows[2].params.c, 0.9);
    assert_eq!(rows[3].params.c, 1.1);
    assert_eq!(rows[1].params.e, -0.09);
}

#[test]
fn parallel_and_sequential_scans_agree() {
    let mut cfg = e_scan(-0.15, -0.03, 6);
    cfg.exec = Execution::Sequential;
    let seq = run_scan(&cfg).unwrap();
    cfg.exec = Execution::Parallel;
    cfg.workers = Some(3);
    let par = run_scan(&cfg).unwrap();
    assert_eq!(seq, par);
}
