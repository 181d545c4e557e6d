use std::io::Write;

use subpost::data::{
    generate, ingest_csv, read_dataset_csv, write_dataset_csv, ExampleId, GeneratedData, GeneratorSpec, LabelRule,
    TabularSource,
};
use subpost::models::{sigmoid, LogisticRow, MixtureRow};
use subpost::Error;

#[test]
fn logistic_labels_are_calibrated() {
    let spec = GeneratorSpec::new(ExampleId::Logistic, 1_000_000, 3);
    let truth = spec.truth();
    let GeneratedData::Logistic(data) = generate(&spec).unwrap() else {
        panic!("wrong variant");
    };
    let mut sums = [(0.0f64, 0.0f64, 0usize); 10];
    for row in data.rows() {
        let q = sigmoid(row.x.iter().zip(&truth).map(|(a, b)| a * b).sum());
        let bin = ((q * 10.0) as usize).min(9);
        sums[bin].0 += q;
        sums[bin].1 += f64::from(row.y);
        sums[bin].2 += 1;
    }
    let mut checked = 0;
    for (i, (q, y, n)) in sums.iter().enumerate() {
        // below this size binomial noise alone approaches the tolerance
        if *n < 20_000 {
            continue;
        }
        checked += 1;
        let err = (q - y).abs() / *n as f64;
        assert!(err < 0.01, "bin {i}: calibration error {err} over {n} rows");
    }
    assert!(checked >= 2);
}

#[test]
fn generators_are_pure_functions_of_their_settings() {
    for e in ExampleId::ALL {
        let spec = GeneratorSpec::new(e, 500, 42);
        let a = generate(&spec).unwrap();
        let b = generate(&spec).unwrap();
        assert_eq!(format!("{a:?}"), format!("{b:?}"));
        assert_eq!(a.n(), 500);
        let other = generate(&GeneratorSpec::new(e, 500, 43)).unwrap();
        assert_ne!(format!("{a:?}"), format!("{other:?}"));
    }
}

#[test]
fn generated_moments_match_truth() {
    let GeneratedData::Mixture(d) = generate(&GeneratorSpec::new(ExampleId::Mixture, 100_000, 1)).unwrap() else {
        panic!()
    };
    // E[y^2] = p psi2 + (1 - p)(alpha^2 + beta^2 + sigma2), E[y x2] = (1 - p) beta
    let y2 = d.rows().iter().map(|r| r.y * r.y).sum::<f64>() / 1e5;
    let yx2 = d.rows().iter().map(|r| r.y * r.x2).sum::<f64>() / 1e5;
    assert!((y2 - 29.0).abs() < 0.6, "{y2}");
    assert!((yx2 - 4.75).abs() < 0.07, "{yx2}");
    let GeneratedData::Bernoulli(b) = generate(&GeneratorSpec::new(ExampleId::BetaBernoulli, 100_000, 2)).unwrap() else {
        panic!()
    };
    let p = b.rows().iter().map(|&x| f64::from(x)).sum::<f64>() / 1e5;
    assert!((p - 0.1).abs() < 4.0 * (0.09f64 / 1e5).sqrt());
}

#[test]
fn example_ids_parse_by_name_or_number() {
    for e in ExampleId::ALL {
        assert_eq!(e.name().parse::<ExampleId>().unwrap(), e);
        assert_eq!(e.number().to_string().parse::<ExampleId>().unwrap(), e);
    }
    assert!(matches!("nope".parse::<ExampleId>(), Err(Error::UnknownExample(_))));
}

#[test]
fn cache_round_trips_exactly() {
    let dir = tempfile::tempdir().unwrap();
    let GeneratedData::Logistic(d) = generate(&GeneratorSpec::new(ExampleId::Logistic, 300, 9)).unwrap() else {
        panic!()
    };
    let path = dir.path().join("l.csv");
    write_dataset_csv(&d, &path).unwrap();
    let back = read_dataset_csv::<LogisticRow>(&path).unwrap();
    assert_eq!(back, d);
    let GeneratedData::Mixture(m) = generate(&GeneratorSpec::new(ExampleId::Mixture, 300, 9)).unwrap() else {
        panic!()
    };
    let path = dir.path().join("m.csv");
    write_dataset_csv(&m, &path).unwrap();
    assert_eq!(read_dataset_csv::<MixtureRow>(&path).unwrap(), m);
}

fn write(dir: &tempfile::TempDir, name: &str, text: &str) -> std::path::PathBuf {
    let p = dir.path().join(name);
    std::fs::File::create(&p).unwrap().write_all(text.as_bytes()).unwrap();
    p
}

#[test]
fn ingest_standardizes_and_labels() {
    let dir = tempfile::tempdir().unwrap();
    let p = write(&dir, "c.csv", "a,b,c,label\n1,10,5,2\n2,20,5,1\n3,30,5,2\n4,40,5,7\n");
    let got = ingest_csv(&TabularSource::new(p), 2, 4).unwrap();
    assert_eq!(got.positives, 2);
    assert_eq!(got.class_balance, 0.5);
    let sd = (1.25f64).sqrt();
    assert!((got.feature_means[0] - 2.5).abs() < 1e-12);
    assert!((got.feature_sds[0] - sd).abs() < 1e-12);
    let first = &got.data.rows()[0];
    assert_eq!(first.x.len(), 3);
    assert_eq!(first.x[0], 1.0);
    assert!((first.x[1] + 1.5 / sd).abs() < 1e-12);
    assert_eq!(first.y, 1);
}

#[test]
fn ingest_errors_name_the_line() {
    let dir = tempfile::tempdir().unwrap();
    let p = write(&dir, "bad.csv", "1,2\n3,x\n");
    match ingest_csv(&TabularSource::new(p), 1, 2) {
        Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
        other => panic!("unexpected {other:?}"),
    }
    let p = write(&dir, "short.csv", "1,2\n3,2\n");
    assert!(matches!(ingest_csv(&TabularSource::new(p), 1, 5), Err(Error::InsufficientRows { .. })));
    let p = write(&dir, "flat.csv", "1,2\n1,1\n1,2\n");
    let mut src = TabularSource::new(p);
    src.label_rule = LabelRule::GreaterThan(1.5);
    assert!(ingest_csv(&src, 1, 3).is_err());
}
