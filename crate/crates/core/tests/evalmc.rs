mod common;

use common::pathloss_ref;
use mmwave_core::deploy::{make_deployment, prepare, site_costs, Deployment, Outcome, Prepared};
use mmwave_core::evalmc::{aggregate, empirical_cdf, evaluate, run_trial, McConfig, TrialRecord};
use mmwave_core::gen::{generate, SizeClass};
use mmwave_core::Scenario;

fn build_all(s: &Scenario, prep: &Prepared) -> Deployment {
    make_deployment(
        "all",
        vec![true; s.n_sites()],
        &prep.coverage.lambda,
        &prep.links,
        &s.grids,
        &site_costs(s),
        &s.radio,
        None,
    )
}

fn center(s: &Scenario, trials: usize, seed: u64) -> McConfig {
    McConfig {
        n_trials: trials,
        seed,
        use_grid_center: true,
        ..McConfig::for_scenario(s)
    }
}

#[test]
fn empty_streets_produce_nothing() {
    let mut doc = generate(SizeClass::Tiny, 0);
    for r in &mut doc.regions {
        r.lambda = 0.0;
    }
    let s = Scenario::from_doc(doc).unwrap();
    let prep = prepare(&s).unwrap();
    let d = build_all(&s, &prep);
    let rep = evaluate(&d, &s, &prep.links, &center(&s, 20, 1)).unwrap();
    assert!(rep.sinr_samples.is_empty());
    assert!(rep.ue_counts.iter().all(|&c| c == 0));
    assert!(rep.ue_outage_est.iter().all(Option::is_none));
}

#[test]
fn lone_ue_sinr_by_hand() {
    let s = Scenario::from_json(
        r#"{"sites": [{"x": 0, "y": 2.5, "cost": 1}],
            "grid": {"x0": 5, "y0": 0, "nx": 1, "ny": 1, "side": 5},
            "regions": [{"x0": 5, "y0": 0, "x1": 10, "y1": 5, "lambda": 0.02, "zeta": 0.05}],
            "radio": {"alpha": 0.01, "beta": 0.01}}"#,
    )
    .unwrap();
    let prep = prepare(&s).unwrap();
    let d = build_all(&s, &prep);
    let cfg = center(&s, 1, 9);
    let p = &s.radio;
    let r = (7.5f64 * 7.5 + 8.5 * 8.5).sqrt();
    let hand = p.p_tx * p.g_main * pathloss_ref(r) / p.noise;
    let mut seen = 0;
    for t in 0..400 {
        let rec = run_trial(&d, &s, &prep.links, &cfg, t).unwrap();
        if rec.ues[0] == 1 && rec.links.len() == 1 {
            assert!((rec.links[0].sinr / hand - 1.0).abs() < 1e-12);
            seen += 1;
        }
    }
    assert!(seen > 10, "only {seen} single-UE trials");
}

#[test]
fn same_seed_same_report() {
    let s = Scenario::from_doc(generate(SizeClass::Small, 0)).unwrap();
    let prep = prepare(&s).unwrap();
    let d = build_all(&s, &prep);
    for use_grid_center in [true, false] {
        let cfg = McConfig {
            use_grid_center,
            ..center(&s, 30, 4)
        };
        let a = evaluate(&d, &s, &prep.links, &cfg).unwrap();
        let one = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .unwrap();
        let b = one.install(|| evaluate(&d, &s, &prep.links, &cfg).unwrap());
        assert_eq!(a, b);
        let other = McConfig { seed: 5, ..cfg };
        assert_ne!(a, evaluate(&d, &s, &prep.links, &other).unwrap());
    }
}

#[test]
fn single_outage_trial() {
    let s = Scenario::from_doc(generate(SizeClass::Tiny, 0)).unwrap();
    let prep = prepare(&s).unwrap();
    let d = build_all(&s, &prep);
    let mut rec = TrialRecord {
        links: Vec::new(),
        ues: vec![0; s.n_grids()],
        outages: vec![0; s.n_grids()],
        attempting: vec![0; s.n_sites()],
        served: vec![0; s.n_sites()],
    };
    rec.ues[3] = 1;
    rec.outages[3] = 1;
    let rep = aggregate(&[rec], &d, &s, &prep.links).unwrap();
    assert_eq!(rep.ue_outage_est[3], Some(1.0));
    assert_eq!(rep.ue_outage_est.iter().flatten().count(), 1);
}

#[test]
fn aggregation_ignores_trial_order() {
    let s = Scenario::from_doc(generate(SizeClass::Tiny, 2)).unwrap();
    let prep = prepare(&s).unwrap();
    let d = build_all(&s, &prep);
    let cfg = center(&s, 1, 3);
    let trials: Vec<TrialRecord> = (0..40)
        .map(|t| run_trial(&d, &s, &prep.links, &cfg, t).unwrap())
        .collect();
    let mut reversed = trials.clone();
    reversed.reverse();
    let a = aggregate(&trials, &d, &s, &prep.links).unwrap();
    let b = aggregate(&reversed, &d, &s, &prep.links).unwrap();
    assert_eq!(a.ue_outage_est, b.ue_outage_est);
    assert_eq!(a.ue_counts, b.ue_counts);
    let mut sa = a.sinr_samples.clone();
    let mut sb = b.sinr_samples.clone();
    sa.sort_by(f64::total_cmp);
    sb.sort_by(f64::total_cmp);
    assert_eq!(sa, sb);
    for (x, y) in a.access_block_est.iter().zip(&b.access_block_est) {
        assert!((x.estimate - y.estimate).abs() < 1e-12);
    }
    let total: u64 = trials
        .iter()
        .map(|t| t.ues.iter().map(|&u| u as u64).sum::<u64>())
        .sum();
    assert_eq!(a.ue_counts.iter().sum::<u64>(), total);
}

#[test]
fn report_shapes_and_ranges() {
    let s = Scenario::from_doc(generate(SizeClass::Small, 1)).unwrap();
    let prep = prepare(&s).unwrap();
    let d = build_all(&s, &prep);
    let rep = evaluate(
        &d,
        &s,
        &prep.links,
        &McConfig {
            use_grid_center: false,
            ..center(&s, 40, 2)
        },
    )
    .unwrap();
    assert_eq!(rep.diversity_hist.iter().sum::<usize>(), s.n_grids());
    assert_eq!(rep.sinr_samples.len(), rep.sinr_lb_samples.len());
    for e in rep.ue_outage_est.iter().flatten() {
        assert!((0.0..=1.0).contains(e));
    }
    for a in &rep.access_block_est {
        assert!((0.0..=1.0).contains(&a.estimate));
    }
}

#[test]
fn unblocked_load_matches_thinning() {
    let s = Scenario::from_doc(generate(SizeClass::Small, 0)).unwrap();
    let prep = prepare(&s).unwrap();
    let d = build_all(&s, &prep);
    let n = 2000;
    let rep = evaluate(&d, &s, &prep.links, &center(&s, n, 8)).unwrap();
    for a in &rep.access_block_est {
        let se = (a.expected_load / n as f64).sqrt();
        assert!(
            (a.mean_attempting - a.expected_load).abs() <= 3.0 * se.max(1e-12),
            "site {}: {} vs {}",
            a.site,
            a.mean_attempting,
            a.expected_load
        );
    }
}

#[test]
fn realized_sinr_never_undercuts_the_bound() {
    for seed in 0..4 {
        let s = Scenario::from_doc(generate(SizeClass::Tiny, seed)).unwrap();
        let prep = prepare(&s).unwrap();
        let Outcome::Deployed(d) = mmwave_core::deploy::solve_prepared(&s, &prep).unwrap() else {
            continue;
        };
        let rep = evaluate(&d, &s, &prep.links, &center(&s, 500, seed)).unwrap();
        assert!(!rep.sinr_samples.is_empty());
        assert_eq!(rep.bound_violations, 0);
        for (v, lb) in rep.sinr_samples.iter().zip(&rep.sinr_lb_samples) {
            assert!(*v >= lb * (1.0 - 1e-12));
        }
    }
}

#[test]
fn cdf_steps() {
    let c = empirical_cdf(&[3.0, 1.0, 2.0, 2.0]);
    assert_eq!(c, vec![(1.0, 0.25), (2.0, 0.5), (2.0, 0.75), (3.0, 1.0)]);
    assert!(empirical_cdf(&[]).is_empty());
}
