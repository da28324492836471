#[test]
fn repro_omega2() {
    use avc_model::design::DesignMatrices;
    use avc_model::engine::sampler::ChainSampler;
    use avc_model::exposure::DpHyper;
    use avc_model::collision::CollisionHyper;
    use avc_model::stream::RandomStream;
    use avc_model::data::simulate::{simulate_dataset, CovariateDist, SimulationSpec};
    use avc_model::data::DataSchema;
    let schema = DataSchema::new(vec!["a".into(), "b".into()], vec!["r".into()], 4).unwrap();
    let spec = SimulationSpec {
        schema,
        segments: 30,
        x_dists: vec![CovariateDist::Normal { mean: 0.0, sd: 1.0 }, CovariateDist::Bernoulli { p: 0.4 }],
        y_dists: vec![CovariateDist::Normal { mean: 0.0, sd: 1.0 }],
        beta: vec![0.3, -0.4],
        alpha0: vec![-0.2; 4],
        gamma: vec![vec![0.1]; 4],
        q: vec![0.5; 4],
        cluster_weights: vec![0.8, 0.2],
        cluster_means: vec![-0.3, 2.0],
        cluster_sds: vec![0.2, 1.0],
    };
    let mut rng = RandomStream::new(404, 0);
    let (ds, _) = simulate_dataset(&spec, &mut rng).unwrap();
    let design = DesignMatrices::from_dataset(&ds, false);
    let mut sampler = ChainSampler::init(&design, DpHyper::default(), CollisionHyper::default(), 50, RandomStream::new(13, 0)).unwrap();
    for it in 0..20 {
        sampler.prior_draw().unwrap();
        sampler.regenerate_data().unwrap();
        sampler.sweep().unwrap();
        if let Err(e) = sampler.check_legal() {
            let bad: Vec<(usize, u32, f64)> = sampler.exposure.counts.iter().zip(&sampler.regression.omega).enumerate()
                .filter(|(_, (&n, &w))| n > 0 && !(w > 0.0)).map(|(i, (&n, &w))| (i, n, w)).take(5).collect();
            panic!("iter {it}: {e}; offending cells {bad:?}; n[0]={} omega[0]={} k[0]={}",
                sampler.exposure.counts[0], sampler.regression.omega[0], sampler.observed_counts()[0]);
        }
    }
}
