use vropt_core::dist::{dsarah_round, dzerosarah_round, Federation, Participation};
use vropt_core::optim::{Optimizer, ZeroSarah};
use vropt_core::schedule::{ceil_sqrt, DistSchedule, DsarahParams, ParamSchedule, Preset, PresetExtras};
use vropt_core::{Point, QuadraticTest};

#[test]
fn cor1_paper_count() {
    let q = QuadraticTest::random(400, 2, 1.0, 0.2, 1).unwrap();
    let sched = ParamSchedule::preset(Preset::Cor1, 400, q.smoothness(), PresetExtras::default()).unwrap();
    let mut opt = ZeroSarah::new(&q, Point::new(vec![1.0, 1.0]), sched, 0).unwrap();
    for _ in 0..50 {
        opt.step().unwrap();
    }
    assert_eq!(opt.counters().paper_count, 400 + 49 * 20);
    assert_eq!(opt.counters().actual_count, 400 + 49 * 40);
    assert_eq!(opt.counters().full_batch_events, 1);
}

#[test]
fn cor2_never_computes_a_full_gradient() {
    let n = 150;
    let q = QuadraticTest::random(n, 3, 1.0, 0.2, 2).unwrap();
    let sched = ParamSchedule::preset(Preset::Cor2, n, q.smoothness(), PresetExtras::default()).unwrap();
    let mut opt = ZeroSarah::new(&q, Point::new(vec![1.0, 0.0, -1.0]), sched, 1).unwrap();
    let b = ceil_sqrt(n) as u64;
    for k in 0..1000 {
        let r = opt.step().unwrap();
        assert!(!r.full_batch);
        assert_eq!(r.actual_evals, if k == 0 { b } else { 2 * b });
    }
    assert_eq!(opt.counters().full_batch_events, 0);
}

#[test]
fn cor2d_never_uses_full_participation() {
    let (n, m) = (9, 16);
    let q = QuadraticTest::random(n * m, 2, 1.0, 0.2, 3).unwrap();
    let sched = DistSchedule::preset(Preset::Cor2, n, m, q.smoothness(), PresetExtras::default()).unwrap();
    let mut fed = Federation::new(q.split_clients(n).unwrap(), Point::new(vec![1.0, -2.0]), 8).unwrap();
    for k in 0..1000 {
        let ev = dzerosarah_round(&mut fed, &sched).unwrap();
        assert_eq!(ev.participation, Participation::Sampled);
        assert_eq!(ev.sampled.len(), 3);
        assert_eq!(ev.actual_evals, if k == 0 { 12 } else { 24 });
    }
    assert_eq!(fed.counters().full_batch_events, 0);
}

#[test]
fn dsarah_full_rounds_are_ceil_k_over_l() {
    let (n, m) = (4, 9);
    let q = QuadraticTest::random(n * m, 2, 1.0, 0.2, 4).unwrap();
    let params = DsarahParams::standard(n, m, 0.05);
    let l = params.epoch_len as u64;
    let mut fed = Federation::new(q.split_clients(n).unwrap(), Point::zeros(2), 2).unwrap();
    let rounds = 45u64;
    let mut full = 0;
    for _ in 0..rounds {
        if dsarah_round(&mut fed, &params).unwrap().participation == Participation::Full {
            full += 1;
        }
    }
    assert_eq!(full, rounds.div_ceil(l));
    let sampled = rounds - full;
    assert_eq!(fed.counters().actual_count, full * 36 + sampled * 2 * 2 * 3);
}

#[test]
fn next_paper_evals_predicts_every_step() {
    use vropt_core::dist::{DSarah, DZeroSarah};
    use vropt_core::optim::{Gd, Sarah};
    use vropt_core::schedule::SarahParams;

    let (n, m) = (4, 9);
    let q = QuadraticTest::random(n * m, 2, 1.0, 0.2, 5).unwrap();
    let l = q.smoothness();
    let x0 = Point::new(vec![1.0, -1.0]);
    let clients = q.split_clients(n).unwrap();
    let mut optimizers: Vec<Box<dyn Optimizer + '_>> = vec![
        Box::new(
            ZeroSarah::new(
                &q,
                x0.clone(),
                ParamSchedule::preset(Preset::Cor1, n * m, l, PresetExtras::default()).unwrap(),
                1,
            )
            .unwrap(),
        ),
        Box::new(Sarah::new(&q, x0.clone(), SarahParams { epoch_len: 4, batch: 5, eta: 0.05 }, 2).unwrap()),
        Box::new(Gd::new(&q, x0.clone(), 0.05).unwrap()),
        Box::new(
            DZeroSarah::new(
                clients.clone(),
                x0.clone(),
                DistSchedule::preset(Preset::Cor1, n, m, l, PresetExtras::default()).unwrap(),
                3,
            )
            .unwrap(),
        ),
        Box::new(DSarah::new(clients, x0, DsarahParams::standard(n, m, 0.05), 4).unwrap()),
    ];
    for opt in optimizers.iter_mut() {
        for k in 0..25 {
            let predicted = opt.next_paper_evals();
            assert_eq!(opt.step().unwrap().paper_evals, predicted, "step {k}");
        }
    }
}
