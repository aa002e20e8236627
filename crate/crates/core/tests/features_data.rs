mod common;

use common::label;
use ilsi::features::{
    apply_standardization, build_feature_vector, fit_standardization, read_csv, read_csv_from,
    roi_schema, reference_fixture, write_csv, write_csv_to, Dataset, FeatureError, FeatureVector,
};
use ilsi::speckle::{simulate_speckle, PhasorFieldConfig};
use ilsi::{AreaLabel, ClassLabel, GrayImage, Roi, Schema};
use proptest::prelude::*;

fn three_areas() -> Vec<Roi> {
    vec![
        Roi::new(0, 0, 50, 50).labeled(AreaLabel::A),
        Roi::new(60, 0, 50, 50).labeled(AreaLabel::B),
        Roi::new(0, 60, 50, 50).labeled(AreaLabel::C),
    ]
}

#[test]
fn constant_window_is_nine_zeros() {
    let img = GrayImage::filled(80, 80, 40).unwrap();
    let v = build_feature_vector::<f64>(&img, &[Roi::new(10, 10, 50, 50)]).unwrap();
    assert_eq!(v.values(), &[0.0; 9]);
    assert_eq!(v.attribute_names()[0], "Russ_3x3_R0");
}

#[test]
fn three_areas_give_twenty_seven_attributes() {
    let img = simulate_speckle(&PhasorFieldConfig {
        width: 120,
        height: 120,
        seed: 3,
        ..Default::default()
    })
    .unwrap();
    let rois = three_areas();
    let v = build_feature_vector::<f64>(&img, &rois).unwrap();
    assert_eq!(v.len(), 27);
    assert_eq!(v.attribute_names()[0], "Russ_3x3_A");
    assert_eq!(v.attribute_names()[9], "Russ_3x3_B");
    assert_eq!(v.attribute_names()[26], "StdDev_3x3_C");
    assert_eq!(v.schema(), &roi_schema(&rois).unwrap());
    let again = build_feature_vector::<f64>(&img, &rois).unwrap();
    assert_eq!(v, again);
}

#[test]
fn roi_outside_image() {
    let img = GrayImage::filled(40, 40, 1).unwrap();
    assert!(matches!(
        build_feature_vector::<f64>(&img, &[Roi::new(0, 0, 50, 50)]),
        Err(FeatureError::Image(_))
    ));
}

#[test]
fn duplicate_areas_are_rejected() {
    let rois = vec![
        Roi::new(0, 0, 5, 5).labeled(AreaLabel::A),
        Roi::new(5, 5, 5, 5).labeled(AreaLabel::A),
    ];
    assert!(matches!(roi_schema(&rois), Err(FeatureError::DuplicateAttribute(_))));
}

/// Spreadsheet-style recomputation of the Levine_3x3 column.
#[test]
fn fixture_levine_standardization() {
    let ds = reference_fixture::<f64>();
    let col = [
        6002.0, 5233.0, 5215.0, 5726.0, 5634.0, 5445.0, 5800.0, 5390.0, 3788.0, 6344.0, 3266.0,
        3499.0, 4194.0, 3112.0, 4201.0, 2977.0, 3770.0, 3442.0, 2884.0, 3629.0,
    ];
    let total: f64 = col.iter().sum();
    let mean = total / 20.0;
    let sumsq: f64 = col.iter().map(|v| v * v).sum();
    let std = (sumsq / 20.0 - mean * mean).sqrt();
    let p = fit_standardization(&ds).unwrap();
    assert!((p.means[1] - 4477.55).abs() < 1e-9);
    assert!((p.means[1] - mean).abs() < 1e-9);
    assert!((p.stds[1] - std).abs() < 1e-6);
    // first normal row after scaling
    let z = apply_standardization(&ds.row(0), &p).unwrap();
    assert!((z.values()[1] - (6002.0 - mean) / std).abs() < 1e-9);
    assert!((z.values()[1] - PINNED_ROW0_LEVINE_Z).abs() < 1e-12);
}

const PINNED_ROW0_LEVINE_Z: f64 = 1.3542749862698025;

#[test]
fn small_standardization_examples() {
    let schema = Schema::new(vec!["a".into(), "b".into()]).unwrap();
    let ds = Dataset::from_rows(
        schema,
        vec![vec![1.0, 7.0], vec![3.0, 7.0]],
        vec![ClassLabel::normal(), ClassLabel::normal()],
    )
    .unwrap();
    let p = fit_standardization(&ds).unwrap();
    assert_eq!((p.means[0], p.stds[0]), (2.0, 1.0));
    assert_eq!(p.stds[1], 0.0);
    let z = p.apply_dataset(&ds).unwrap();
    assert_eq!(z.rows()[0], vec![-1.0, 0.0]);
    let one = ds.subset(&[0]);
    assert!(matches!(
        fit_standardization(&one),
        Err(FeatureError::TooFewRows { needed: 2, found: 1 })
    ));
}

#[test]
fn fixture_csv_has_twenty_one_lines() {
    let mut buf = Vec::new();
    write_csv_to(&reference_fixture::<f64>(), &mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    assert_eq!(text.lines().count(), 21);
    assert!(text.starts_with("label,Russ_3x3,Levine_3x3,Sigma_3x3,Skewness_3x3,Russ_5x5"));
    assert!(text.lines().nth(1).unwrap().starts_with("normal,378,6002,77.47,0.5,"));
}

#[test]
fn csv_errors_name_the_line() {
    let text = "label,a,b\nnormal,1,2\nnormal,3\n";
    match read_csv_from::<f64, _>(text.as_bytes(), "mem.csv") {
        Err(e @ FeatureError::RaggedRow { line: 3, .. }) => {
            assert!(e.to_string().starts_with("mem.csv:3:"));
        }
        other => panic!("unexpected {other:?}"),
    }
    let text = "label,a,b\nnormal,1,2\nnormal,3,x\n";
    assert!(matches!(
        read_csv_from::<f64, _>(text.as_bytes(), "mem.csv"),
        Err(FeatureError::NotNumeric { line: 3, ref column, .. }) if column == "b"
    ));
    assert!(matches!(
        read_csv_from::<f64, _>("a,b\n1,2\n".as_bytes(), "mem.csv"),
        Err(FeatureError::BadHeader { .. })
    ));
    assert!(matches!(
        read_csv_from::<f64, _>("".as_bytes(), "mem.csv"),
        Err(FeatureError::MissingHeader { .. })
    ));
    assert!(matches!(
        read_csv::<f64>("/nonexistent/file.csv"),
        Err(FeatureError::Io { .. })
    ));
}

#[test]
fn schema_mismatch_between_vector_and_params() {
    let p = fit_standardization(&reference_fixture::<f64>()).unwrap();
    let other = FeatureVector::new(vec![1.0], Schema::new(vec!["x".into()]).unwrap()).unwrap();
    assert!(apply_standardization(&other, &p).is_err());
}

#[test]
fn class_queries() {
    let ds = reference_fixture::<f64>();
    assert_eq!(ds.classes(), vec![ClassLabel::normal(), ClassLabel::micro_collapse()]);
    let m = ds.class_mean("Levine_3x3", &label("normal")).unwrap();
    assert!((m - 5457.7).abs() < 1e-9);
    let c = ds.class_mean("Levine_3x3", &label("MICRO-COLLAPSE")).unwrap();
    assert!((c - 3497.4).abs() < 1e-9);
    assert!(matches!(ds.column("nope"), Err(FeatureError::UnknownAttribute(_))));
}

fn arb_dataset() -> impl Strategy<Value = Dataset<f64>> {
    (1usize..6, 2usize..12).prop_flat_map(|(cols, rows)| {
        (
            proptest::collection::vec(proptest::collection::vec(-1e6f64..1e6, cols), rows),
            proptest::collection::vec(prop::sample::select(vec!["normal", "micro-collapse", "dry"]), rows),
        )
            .prop_map(move |(data, labels)| {
                let schema = Schema::new((0..cols).map(|c| format!("f{c}")).collect()).unwrap();
                Dataset::from_rows(schema, data, labels.into_iter().map(label).collect()).unwrap()
            })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn csv_round_trip(ds in arb_dataset()) {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("d.csv");
        write_csv(&ds, &path).unwrap();
        let back = read_csv::<f64>(&path).unwrap();
        prop_assert_eq!(back, ds);
    }

    #[test]
    fn standardization_is_idempotent(ds in arb_dataset()) {
        let once = fit_standardization(&ds).unwrap().apply_dataset(&ds).unwrap();
        let p2 = fit_standardization(&once).unwrap();
        let twice = p2.apply_dataset(&once).unwrap();
        for (a, b) in once.rows().iter().flatten().zip(twice.rows().iter().flatten()) {
            prop_assert!((a - b).abs() <= 1e-6, "{} vs {}", a, b);
        }
        for (m, s) in p2.means.iter().zip(&p2.stds) {
            prop_assert!(m.abs() < 1e-9);
            prop_assert!(*s == 0.0 || (s - 1.0).abs() < 1e-9);
        }
    }
}
