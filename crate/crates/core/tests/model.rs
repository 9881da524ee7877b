//! Scenario classification, validation and textual round trips.

use inar_outliers::io::{read_series, series_to_csv, series_to_json, write_series, SeriesFormat};
use inar_outliers::model::validate_scenario;
use inar_outliers::{
    simulate, Error, Family, InitDist, InnovationDist, ModelSpec, OutlierPlan, OutlierScenario,
    ScenarioTag, Series, SimConfig,
};

fn flat(n: usize) -> Series {
    Series::new(vec![1; n + 1]).unwrap()
}

fn scenario(family: Family, times: &[usize], mu_known: bool) -> OutlierScenario {
    OutlierScenario::new(family, times.to_vec(), mu_known).unwrap()
}

#[test]
fn validation_examples() {
    let add = |t: &[usize], k| scenario(Family::Additive, t, k);
    assert_eq!(validate_scenario(&flat(6), &add(&[5], true), Some(1.0)).unwrap(), ScenarioTag::Add1);
    assert!(matches!(
        validate_scenario(&flat(4), &add(&[3, 4], false), None),
        Err(Error::SampleTooShort { required: 5, actual: 4, .. })
    ));
    let inn = scenario(Family::Innovational, &[2, 7], false);
    assert_eq!(validate_scenario(&flat(7), &inn, None).unwrap(), ScenarioTag::Inn2M);
    assert!(matches!(
        validate_scenario(&flat(6), &add(&[5], true), None),
        Err(Error::MissingMu)
    ));
}

#[test]
fn classification_covers_all_ten_tags() {
    use Family::*;
    let cases = [
        (Additive, vec![5], true, ScenarioTag::Add1),
        (Additive, vec![5], false, ScenarioTag::Add1M),
        (Additive, vec![5, 9], true, ScenarioTag::Add2Sep),
        (Additive, vec![5, 9], false, ScenarioTag::Add2SepM),
        (Additive, vec![5, 6], true, ScenarioTag::Add2Adj),
        (Additive, vec![5, 6], false, ScenarioTag::Add2AdjM),
        (Innovational, vec![5], true, ScenarioTag::Inn1),
        (Innovational, vec![5], false, ScenarioTag::Inn1M),
        (Innovational, vec![5, 6], true, ScenarioTag::Inn2),
        (Innovational, vec![5, 9], false, ScenarioTag::Inn2M),
    ];
    for (family, times, known, tag) in cases {
        let sc = OutlierScenario::new(family, times.clone(), known).unwrap();
        assert_eq!(sc.tag(), tag);
        let mut rev = times.clone();
        rev.reverse();
        assert_eq!(OutlierScenario::new(family, rev, known).unwrap(), sc);
        assert_eq!(tag.as_str().parse::<ScenarioTag>().unwrap(), tag);
    }
}

#[test]
fn minimum_sample_sizes_are_boundaries() {
    use Family::*;
    let cases: [(Family, &[usize], bool, usize); 10] = [
        (Additive, &[5], true, 6),
        (Additive, &[1], false, 3),
        (Additive, &[2, 5], true, 6),
        (Additive, &[1, 3], false, 5),
        (Additive, &[4, 5], true, 6),
        (Additive, &[1, 2], false, 3),
        (Innovational, &[1], true, 3),
        (Innovational, &[6], false, 6),
        (Innovational, &[1, 2], true, 3),
        (Innovational, &[2, 7], false, 7),
    ];
    for (family, times, known, n) in cases {
        let sc = scenario(family, times, known);
        let mu = known.then_some(1.0);
        assert!(validate_scenario(&flat(n), &sc, mu).is_ok(), "{} at n={n}", sc.tag());
        assert!(
            matches!(validate_scenario(&flat(n - 1), &sc, mu), Err(Error::SampleTooShort { .. })),
            "{} at n={}",
            sc.tag(),
            n - 1
        );
    }
}

#[test]
fn malformed_scenarios_rejected() {
    assert!(matches!(
        OutlierScenario::new(Family::Additive, vec![], true),
        Err(Error::BadTimes(_))
    ));
    assert!(OutlierScenario::new(Family::Additive, vec![1, 2, 3], true).is_err());
    assert!(OutlierScenario::new(Family::Additive, vec![4, 4], true).is_err());
    assert!(OutlierScenario::new(Family::Additive, vec![0], true).is_err());
}

#[test]
fn parameter_validation() {
    assert!(ModelSpec::poisson(0.0, 1.0).is_err());
    assert!(ModelSpec::poisson(1.0, 1.0).is_err());
    assert!(ModelSpec::poisson(0.5, 0.0).is_err());
    assert!(InnovationDist::finite_pmf(vec![(0, 1.0)]).is_err());
    assert!(InnovationDist::finite_pmf(vec![(1, 0.5), (2, 0.4)]).is_err());
    assert!(Series::new(vec![3]).is_err());
}

#[test]
fn textual_forms_round_trip() {
    for text in ["poisson:1.5", "pmf:0:0.2,2:0.5,3:0.3"] {
        let d: InnovationDist = text.parse().unwrap();
        assert_eq!(d.to_string().parse::<InnovationDist>().unwrap(), d);
    }
    let d: InnovationDist = "pmf:0:0.2,2:0.5,3:0.3".parse().unwrap();
    assert!((d.mean() - 1.9).abs() < 1e-15);
    assert_eq!("4".parse::<InitDist>().unwrap(), InitDist::Fixed { value: 4 });
    assert!(matches!("poisson:2".parse::<InitDist>().unwrap(), InitDist::Random { .. }));
    for text in ["additive:s=50:theta=10", "innovational:s=40:theta=8,s=120:theta=6"] {
        let p: OutlierPlan = text.parse().unwrap();
        assert_eq!(p.to_string(), text);
    }
    assert!("additive:s=5".parse::<OutlierPlan>().is_err());
    assert!("poisson:x".parse::<InnovationDist>().is_err());
}

#[test]
fn series_files_round_trip() {
    let model = ModelSpec::poisson(0.5, 1.0).unwrap();
    let y = simulate(&SimConfig::new(model, 500, 7).unwrap()).unwrap();
    let csv = series_to_csv(&y);
    let json = series_to_json(&y);
    assert_eq!(read_series(&csv).unwrap(), y);
    assert_eq!(read_series(&json).unwrap(), y);
    assert_eq!(write_series(&y, SeriesFormat::Csv), csv);
    assert_eq!(write_series(&read_series(&json).unwrap(), SeriesFormat::Csv), csv);
}
