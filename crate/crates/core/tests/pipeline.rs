use fairaudit::audit::flip_test;
use fairaudit::metrics::{base_rates, contingency, disparity_metrics};
use fairaudit::model::{train_logistic, ScoringModel, TrainConfig};
use fairaudit::repair::{apply_repair, fit_repair, RepairPlan};
use fairaudit::synth::{self, GeneratorSpec};
use fairaudit::{Dataset, Schema};

fn biased(n: usize, seed: u64) -> Dataset {
    let spec = GeneratorSpec { n, seed, ..GeneratorSpec::default() }.with_target_di(0.6).unwrap();
    synth::generate(&spec).unwrap().dataset
}

fn di(d: &Dataset) -> f64 {
    let r = base_rates(&contingency(d).unwrap()).unwrap();
    disparity_metrics(&r).unwrap().di.value().unwrap()
}

#[test]
fn csv_round_trip_preserves_values() {
    let d = biased(300, 4);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("d.csv");
    d.save_csv(&path).unwrap();
    let schema = Schema::from_json(&serde_json::to_string(&synth::schema()).unwrap()).unwrap();
    let back = Dataset::load_csv(&path, &schema).unwrap();
    assert_eq!(back.n_rows(), d.n_rows());
    for name in ["x1", "x2"] {
        assert_eq!(back.numeric(name).unwrap(), d.numeric(name).unwrap());
    }
    assert_eq!(back.to_csv_string().unwrap(), d.to_csv_string().unwrap());
    assert_eq!(di(&back), di(&d));
}

#[test]
fn persisted_plan_and_model_reproduce_results() {
    let d = biased(1200, 5);
    let plan = fit_repair(&d, &["x1", "x2"]).unwrap();
    let plan2 = RepairPlan::from_json(&plan.to_json().unwrap()).unwrap();
    let a = apply_repair(&plan, &d, 0.6).unwrap().dataset;
    let b = apply_repair(&plan2, &d, 0.6).unwrap().dataset;
    assert_eq!(a.to_csv_string().unwrap(), b.to_csv_string().unwrap());

    let m = train_logistic(&d, true, &TrainConfig::default()).unwrap();
    let m2 = fairaudit::model::LogisticModel::from_json(&m.to_json().unwrap()).unwrap();
    assert_eq!(m.scores(&d).unwrap(), m2.scores(&d).unwrap());
}

#[test]
fn repair_then_retrain_removes_disparity() {
    let d = biased(4000, 6);
    let before = di(&d);
    assert!((before - 0.6).abs() < 0.06, "before {before}");

    let plan = fit_repair(&d, &["x1", "x2"]).unwrap();
    let repaired = apply_repair(&plan, &d, 1.0).unwrap().dataset;
    let model = train_logistic(&repaired, false, &TrainConfig::default()).unwrap();
    let decisions: Vec<_> = model
        .scores(&repaired)
        .unwrap()
        .iter()
        .map(|&s| if s >= 0.5 { "1" } else { "0" })
        .collect();
    let audited = repaired
        .with_values("decision", fairaudit::Values::Text(decisions.iter().map(|s| Some(s.to_string())).collect()))
        .unwrap();
    assert!((di(&audited) - 1.0).abs() < 0.05, "after {}", di(&audited));

    let flips = flip_test(&model, &repaired, 0.5).unwrap();
    assert!(flips.vacuous);
    assert_eq!(flips.flip_rate, 0.0);
}
