use uws::formats::{read_dataset, write_dataset, Dataset};
use uws::inference::{aggregate_tasks, CandidatePolicy, NegativeWeights, RankingSpace};
use uws::label_model::{learn_label_model, CorrelationSet, LabelData, LabelModel, LearnOptions, LearnPath, PriorSpec};
use uws::perm::kendall_tau;
use uws::synthgen::{gen_ranking_tasks, gen_regression_tasks, RankingScenario, RegressionScenario};

#[test]
fn ranking_dataset_survives_csv_and_model_survives_json() {
    let s = RankingScenario::with_thetas(2000, 5, vec![1.5, 0.9, 0.4], 21);
    let (truth, data) = gen_ranking_tasks(&s).unwrap();

    let mut buf = Vec::new();
    write_dataset(&data, &mut buf).unwrap();
    let Dataset::Rankings(back) = read_dataset(&buf[..]).unwrap() else { panic!("wrong kind") };
    assert_eq!(back, data);

    let model = learn_label_model(
        LabelData::Rankings(&back),
        &CorrelationSet::empty(),
        &PriorSpec::Uniform,
        &LearnOptions::new(LearnPath::Continuous),
    )
    .unwrap();
    let again = LabelModel::from_json(&model.to_json().unwrap()).unwrap();
    assert_eq!(again, model);
    again.check_compatible(&LabelData::Rankings(&back)).unwrap();
    for (est, want) in model.thetas.iter().zip([1.5, 0.9, 0.4]) {
        assert!((est - want).abs() / want < 0.25, "{est} vs {want}");
    }

    let space = RankingSpace { rho: 5 };
    let policy = CandidatePolicy::EnumerateAll;
    let w = aggregate_tasks(&space, &back, Some(&model.thetas), policy, NegativeWeights::Clamp).unwrap();
    let mv = aggregate_tasks(&space, &back, None, policy, NegativeWeights::Clamp).unwrap();
    let mean = |pred: &[uws::perm::Permutation]| {
        pred.iter().zip(&truth).map(|(a, b)| kendall_tau(a, b).unwrap() as f64).sum::<f64>() / truth.len() as f64
    };
    assert!(mean(&w) <= mean(&mv));
}

#[test]
fn regression_model_rejects_ranking_data() {
    let r = RegressionScenario::conditionally_independent(500, 1.0, vec![0.8, 0.6, 0.5], vec![0.36, 0.64, 0.75], 3);
    let (_, real) = gen_regression_tasks(&r).unwrap();
    let model = learn_label_model(
        LabelData::Real(&real),
        &CorrelationSet::empty(),
        &PriorSpec::SecondMoment { values: vec![1.0] },
        &LearnOptions::new(LearnPath::Continuous),
    )
    .unwrap();
    let (_, ranks) = gen_ranking_tasks(&RankingScenario::with_thetas(50, 4, vec![1.0; 3], 1)).unwrap();
    assert!(model.check_compatible(&LabelData::Rankings(&ranks)).is_err());
}
