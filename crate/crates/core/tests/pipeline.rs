use slideregret::metrics::{
    episode_samples, max_window_regret, suboptimal_run_lengths, RegExpCurve,
};
use slideregret::theory::{predict, Prediction};
use slideregret::{pseudo_regret, run_once, run_seed, BanditInstance, PolicyConfig, PolicyKind};

fn inst() -> BanditInstance {
    BanditInstance::two_arm(0.9, 0.8).unwrap()
}

#[test]
fn every_policy_runs_deterministically() {
    for kind in PolicyKind::ALL {
        let cfg = PolicyConfig::new(kind);
        let a = run_once(&inst(), &cfg, 500, run_seed(1, 2)).unwrap();
        let b = run_once(&inst(), &cfg, 500, run_seed(1, 2)).unwrap();
        assert_eq!(a, b, "{kind:?}");
        assert_eq!(a.actions.len(), 500);
        let c = run_once(&inst(), &cfg, 500, run_seed(1, 3)).unwrap();
        assert_ne!(a.rewards, c.rewards, "{kind:?}");
    }
}

#[test]
fn metrics_agree_on_a_run() {
    let log = run_once(&inst(), &PolicyConfig::new(PolicyKind::Ucb), 3000, 9).unwrap();
    let n2 = log.pulls_of(1);
    let total = pseudo_regret(&log, &inst(), 1, 3000).unwrap()
        + 0.1 * f64::from(u8::from(log.action(3000) == 1));
    assert!((total - 0.1 * n2 as f64).abs() < 1e-9);

    let samples = episode_samples(&log, &inst(), 50, 0).unwrap();
    assert!(!samples.is_empty());
    let (start, best) = max_window_regret(&log, &inst(), 50, 1).unwrap();
    assert!(samples.iter().all(|s| s.window_regret <= best + 1e-12));
    assert!((pseudo_regret(&log, &inst(), start, start + 50).unwrap() - best).abs() < 1e-12);

    let blocks = suboptimal_run_lengths(&log, 0, 1);
    assert_eq!(blocks.iter().sum::<usize>(), n2);
    assert_eq!(blocks.len(), samples.len() + samples_dropped(&log, 50));

    let curve = RegExpCurve::build(&samples, 50, 64, 16, 2950).unwrap();
    for p in &curve.points {
        assert_eq!(p.estimate.is_some(), p.n_samples > 0);
    }
}

fn samples_dropped(log: &slideregret::RunLog, window: usize) -> usize {
    slideregret::metrics::detect_episodes(log, 0)
        .unwrap()
        .iter()
        .filter(|&&tau| tau + window > log.horizon())
        .count()
}

#[test]
fn index_predictions_dominate_the_gap() {
    for kind in [
        PolicyKind::Ucb,
        PolicyKind::Moss,
        PolicyKind::Klucb,
        PolicyKind::Imed,
        PolicyKind::Ucbv,
    ] {
        let p: Prediction = predict(kind, 0.9, 0.8, 100, 1.0).unwrap();
        let sigma = p.expected_sigma.unwrap();
        assert!((1.0..=100.0).contains(&sigma), "{kind:?}: {sigma}");
        assert!((p.predicted_regexp - 0.1 * sigma).abs() < 1e-12);
    }
    let ts = predict(PolicyKind::Ts, 0.9, 0.8, 100, 1.0).unwrap();
    assert!((ts.predicted_regexp - 0.1).abs() < 1e-12);
}
