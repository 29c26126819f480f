use ebmlp_core::data::{synthetic_task, BatchSchedule};
use ebmlp_core::equivalence::{run_equivalence_experiment, EquivalenceConfig};
use ebmlp_core::mlp::{grad_backprop, mean_loss};
use ebmlp_core::rng::seeded;
use ebmlp_core::train::{train_ebm, train_mlp};
use ebmlp_core::{
    Adam, AdamConfig, Dims, EbmModel, GibbsSampler, Init, MlpModel, SamplerConfig, SimAnnealSampler, TrainConfig,
};

fn quick_sampler() -> SamplerConfig {
    SamplerConfig {
        reads: 100,
        burn_in: 10,
        anneal_sweeps: 30,
        ..Default::default()
    }
}

#[test]
fn mlp_reaches_full_train_accuracy_on_separable_data() {
    let data = synthetic_task(2, 40, 21).unwrap();
    let model = MlpModel::init(Dims::new(2, 4, 1), Init::FanInUniform, &mut seeded(1));
    let cfg = TrainConfig {
        batch_size: 40,
        steps: 50,
        adam: AdamConfig::with_learning_rate(0.2),
        ..Default::default()
    };
    let trace = train_mlp(model, &data, &data, &cfg).unwrap();
    assert_eq!(trace.records.len(), 51);
    assert_eq!(trace.last().unwrap().test_accuracy, 1.0);
}

#[test]
fn full_batch_loss_is_nearly_monotone_at_small_learning_rate() {
    let data = synthetic_task(4, 30, 2).unwrap();
    let mut model = MlpModel::init(Dims::new(4, 5, 1), Init::FanInUniform, &mut seeded(3));
    let batch = data.examples();
    let mut adam = Adam::for_params(AdamConfig::with_learning_rate(1e-3), &model.params);
    let mut losses = vec![mean_loss(&model, &batch).unwrap()];
    for _ in 0..20 {
        let g = grad_backprop(&model, &batch).unwrap();
        adam.step_params(&mut model.params, &g).unwrap();
        losses.push(mean_loss(&model, &batch).unwrap());
    }
    let increases = losses.windows(2).filter(|w| w[1] > w[0]).count();
    assert!(increases <= 1, "{losses:?}");
    assert!(losses[20] < losses[0]);
}

#[test]
fn fixed_seed_gives_identical_traces() {
    let data = synthetic_task(5, 20, 4).unwrap();
    let cfg = TrainConfig {
        steps: 4,
        seed: 9,
        ..Default::default()
    };
    let run_gibbs = || {
        let model = EbmModel::init(Dims::new(5, 3, 1), Init::default(), &mut seeded(cfg.seed));
        train_ebm(model, &data, &data, GibbsSampler, quick_sampler(), &cfg).unwrap()
    };
    assert_eq!(run_gibbs(), run_gibbs());
    let run_sa = || {
        let model = EbmModel::init(Dims::new(5, 3, 1), Init::default(), &mut seeded(cfg.seed));
        train_ebm(model, &data, &data, SimAnnealSampler::default(), quick_sampler(), &cfg).unwrap()
    };
    assert_eq!(run_sa(), run_sa());
    let run_mlp = || {
        let model = MlpModel::init(Dims::new(5, 3, 1), Init::default(), &mut seeded(cfg.seed));
        train_mlp(model, &data, &data, &cfg).unwrap()
    };
    assert_eq!(run_mlp(), run_mlp());
}

#[test]
fn gibbs_trained_ebm_learns_separable_data() {
    let data = synthetic_task(6, 40, 5).unwrap();
    let model = EbmModel::init(Dims::new(6, 8, 1), Init::default(), &mut seeded(6));
    let cfg = TrainConfig {
        batch_size: 40,
        steps: 40,
        seed: 6,
        ..Default::default()
    };
    let trace = train_ebm(model, &data, &data, GibbsSampler, SamplerConfig::default(), &cfg).unwrap();
    let first = trace.records[0];
    let last = *trace.last().unwrap();
    assert!(last.ebm_loglik > first.ebm_loglik + 0.3, "{last:?}");
    let best = trace.accuracies().into_iter().fold(0.0, f64::max);
    assert!(best >= 0.9, "{best}");
}

#[test]
fn equal_schedules_yield_equal_batches() {
    let mut a = BatchSchedule::new(17, 5, 3).unwrap();
    let mut b = BatchSchedule::new(17, 5, 3).unwrap();
    for _ in 0..10 {
        assert_eq!(a.next_batch(), b.next_batch());
    }
}

#[test]
fn equivalence_starts_from_identical_models() {
    let data = synthetic_task(8, 30, 7).unwrap();
    let config = EquivalenceConfig {
        dims: Dims::new(8, 4, 1),
        init: Init::default(),
        train: TrainConfig {
            batch_size: 10,
            steps: 3,
            seed: 1,
            ..Default::default()
        },
        sampler: quick_sampler(),
    };
    let report = run_equivalence_experiment(&data, &data, &config).unwrap();
    assert_eq!(report.records.len(), 4);
    let r0 = report.records[0];
    assert_eq!(r0.mlp_loss, r0.mlp_loss_inherited);
    assert_eq!(r0.mlp_accuracy, r0.mlp_accuracy_inherited);
    // Identical weights differ only by the second-order gap between readings.
    assert!(r0.kl_nats < 1e-6, "{}", r0.kl_nats);
    assert!(report.records.iter().all(|r| r.kl_nats >= 0.0));
    assert_eq!(report.to_csv().lines().count(), 5);
}
