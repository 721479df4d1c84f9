mod common;

use common::{bits, coverage_ref, exhaustive_min_cost, outage_lhs_ref, LinearSystem, PairData};
use mmwave_core::deploy::{
    build_selection_ilp, evaluate_outage_lhs, prepare, site_costs, solve_deployment,
    solve_prepared, BigMRule, Outcome,
};
use mmwave_core::gen::{generate, SizeClass};
use mmwave_core::{CoreError, Scenario};
use mmwave_ilp::{null_variables, solve_bb, Constraint, Sense, Status};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn tiny(seed: u64) -> Scenario {
    Scenario::from_doc(generate(SizeClass::Tiny, seed)).unwrap()
}

#[test]
fn optimum_matches_exhaustive_search() {
    let mut deployed = 0;
    for seed in 0..15 {
        let s = tiny(seed);
        let prep = prepare(&s).unwrap();
        let pairs = PairData::new(&s);
        let cover = coverage_ref(&s, &pairs, prep.phi);
        assert_eq!(cover, prep.coverage.lambda);
        let oracle = exhaustive_min_cost(&s, &pairs, &cover);
        match (solve_prepared(&s, &prep).unwrap(), oracle) {
            (Outcome::Deployed(d), Some(best)) => {
                assert!(
                    (d.cost - best).abs() < 1e-9,
                    "seed {seed}: {} vs {best}",
                    d.cost
                );
                deployed += 1;
            }
            (Outcome::Infeasible(_), None) => {}
            (got, want) => panic!("seed {seed}: solver {got:?}, oracle {want:?}"),
        }
    }
    assert!(deployed >= 10);
}

#[test]
fn linear_system_admits_exactly_the_feasible_deployments() {
    for seed in 0..8 {
        let s = tiny(seed);
        let prep = prepare(&s).unwrap();
        let pairs = PairData::new(&s);
        let ilp = build_selection_ilp(
            &prep.coverage,
            &prep.links,
            &s.grids,
            &site_costs(&s),
            &s.radio,
            BigMRule::Widened,
        )
        .unwrap();
        let sys = LinearSystem::new(&ilp);
        let n = s.n_sites();
        let mut admitted = 0;
        for mask in 0..1u64 << n {
            let y = bits(mask, n);
            let direct = common::meets_guarantees(&s, &pairs, &prep.coverage.lambda, &y);
            assert_eq!(sys.admits(&y), direct, "seed {seed}, y = {y:?}");
            admitted += direct as usize;
        }
        assert!(admitted > 0);
    }
}

#[test]
fn search_instance_keeps_the_optimum() {
    for seed in 0..6 {
        let s = tiny(seed);
        let prep = prepare(&s).unwrap();
        let ilp = build_selection_ilp(
            &prep.coverage,
            &prep.links,
            &s.grids,
            &site_costs(&s),
            &s.radio,
            BigMRule::Widened,
        )
        .unwrap();
        let full = solve_bb(&ilp.instance).unwrap();
        let reduced = solve_bb(&ilp.search_instance()).unwrap();
        assert_eq!(full.status, reduced.status);
        if full.status == Status::Optimal {
            assert!((full.objective_value - reduced.objective_value).abs() < 1e-9);
            let y = &reduced.assignment[..s.n_sites()];
            assert!(LinearSystem::new(&ilp).admits(y));
        }
    }
}

#[test]
fn outage_lhs_matches_independent_evaluation() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for seed in 0..3 {
        let s = Scenario::from_doc(generate(SizeClass::Small, seed)).unwrap();
        let prep = prepare(&s).unwrap();
        let pairs = PairData::new(&s);
        for _ in 0..30 {
            let y: Vec<bool> = (0..s.n_sites()).map(|_| rng.random_bool(0.5)).collect();
            for g in 0..s.n_grids() {
                let lib =
                    evaluate_outage_lhs(&y, &prep.coverage, &prep.links, g, &s.radio).unwrap();
                let hand = outage_lhs_ref(&s, &pairs, &prep.coverage.lambda, &y, g);
                assert!((lib - hand).abs() <= 1e-9 * hand.abs().max(1.0));
            }
        }
    }
}

#[test]
fn extra_coverage_never_raises_the_outage_lhs() {
    let mut rng = ChaCha8Rng::seed_from_u64(22);
    let s = Scenario::from_doc(generate(SizeClass::Small, 4)).unwrap();
    let prep = prepare(&s).unwrap();
    let mut checked = 0;
    for _ in 0..400 {
        let y: Vec<bool> = (0..s.n_sites()).map(|_| rng.random_bool(0.6)).collect();
        let g = rng.random_range(0..s.n_grids());
        let candidates: Vec<usize> = (0..s.n_sites())
            .filter(|&b| !prep.coverage.lambda.get(b, g))
            .collect();
        if candidates.is_empty() {
            continue;
        }
        let b = candidates[rng.random_range(0..candidates.len())];
        let before = evaluate_outage_lhs(&y, &prep.coverage, &prep.links, g, &s.radio).unwrap();
        let mut wider = prep.coverage.clone();
        wider.lambda.set(b, g, true);
        let after = evaluate_outage_lhs(&y, &wider, &prep.links, g, &s.radio).unwrap();
        assert!(
            after <= before + 1e-12,
            "grid {g}, site {b}: {before} -> {after}"
        );
        checked += 1;
    }
    assert!(checked > 300);
}

#[test]
fn per_link_failure_term_rises_with_denial() {
    let steps = 40;
    for i in 0..=steps {
        let p = i as f64 / steps as f64 * 0.999;
        for j in 0..=steps {
            let p_hat = j as f64 / steps as f64 * (1.0 - p);
            let mut last = f64::NEG_INFINITY;
            for k in 0..=steps {
                let rho = k as f64 / steps as f64;
                let v = (p + rho * (1.0 - p) + (1.0 - rho) * p_hat).ln();
                assert!(v >= last - 1e-15, "p {p}, p_hat {p_hat}, rho {rho}");
                last = v;
            }
        }
    }
}

#[test]
fn deployments_satisfy_their_invariants() {
    for seed in 0..10 {
        let s = tiny(seed);
        let prep = prepare(&s).unwrap();
        let Outcome::Deployed(d) = solve_prepared(&s, &prep).unwrap() else {
            continue;
        };
        let cost: f64 = (0..s.n_sites())
            .filter(|&b| d.y[b])
            .map(|b| s.sites[b].cost)
            .sum();
        assert!((d.cost - cost).abs() < 1e-12);
        for b in 0..s.n_sites() {
            for g in 0..s.n_grids() {
                assert_eq!(d.x.get(b, g), d.y[b] && prep.coverage.lambda.get(b, g));
            }
        }
        for (g, diag) in d.per_grid.iter().enumerate() {
            if s.grids[g].needs_guarantee() {
                assert!(diag.outage_bound_lhs <= s.grids[g].outage_tolerance.ln() + 1e-9);
                assert!(diag.macro_diversity >= 1);
            }
            assert_eq!(diag.macro_diversity, d.x.col_count(g));
        }
    }
}

#[test]
fn credited_links_clear_the_threshold() {
    for seed in 0..10 {
        let s = tiny(seed);
        let prep = prepare(&s).unwrap();
        let Outcome::Deployed(d) = solve_prepared(&s, &prep).unwrap() else {
            continue;
        };
        let ilp = build_selection_ilp(
            &prep.coverage,
            &prep.links,
            &s.grids,
            &site_costs(&s),
            &s.radio,
            BigMRule::Widened,
        )
        .unwrap();
        let full = LinearSystem::new(&ilp)
            .resolve(&d.y)
            .expect("optimum is admitted");
        let mut credited = 0;
        for (k, &(b, g)) in ilp.model.pairs.iter().enumerate() {
            if !full[ilp.s_vars[k]] {
                continue;
            }
            let lb = d.per_grid[g]
                .sinr_lb
                .iter()
                .find(|e| e.0 == b)
                .expect("credited links are associated")
                .1;
            assert!(
                lb >= s.radio.z * (1.0 - 1e-9),
                "seed {seed}, link {b}->{g}: {lb}"
            );
            credited += 1;
        }
        assert!(credited > 0);
    }
}

#[test]
fn big_m_data() {
    let s = tiny(3);
    let prep = prepare(&s).unwrap();
    let costs = site_costs(&s);
    for rule in [BigMRule::Widened, BigMRule::InterferenceOnly] {
        let ilp = build_selection_ilp(
            &prep.coverage,
            &prep.links,
            &s.grids,
            &costs,
            &s.radio,
            rule,
        )
        .unwrap();
        let m = &ilp.model;
        for (k, &(b, g)) in m.pairs.iter().enumerate() {
            assert!(m.log_term_blocked[k] < 0.0);
            assert!(prep.coverage.lambda.get(b, g));
            let i_sum: f64 = (0..s.n_sites())
                .map(|i| prep.links.i_hat(i, g, prep.coverage.lambda.get(i, g)))
                .sum();
            let mut want = 2.0 * s.radio.noise + i_sum;
            if rule == BigMRule::Widened {
                want += m.p_bar[k] / s.radio.z;
            }
            assert!((m.big_m[k] - want).abs() <= 1e-12 * want);
        }
    }
}

#[test]
fn no_guarantees_deploys_nothing() {
    let mut doc = generate(SizeClass::Tiny, 1);
    for r in &mut doc.regions {
        r.zeta = 1.0;
    }
    let s = Scenario::from_doc(doc).unwrap();
    let Outcome::Deployed(d) = solve_deployment(&s).unwrap() else {
        panic!("nothing to satisfy");
    };
    assert_eq!(d.n_deployed(), 0);
    assert_eq!(d.cost, 0.0);
}

#[test]
fn forced_cover_selects_exactly_the_needed_sites() {
    // The only site with a view of the street is the expensive one.
    let s = Scenario::from_json(
        r#"{"buildings": [{"x0": 12, "y0": -50, "x1": 88, "y1": 50, "h": 40}],
            "sites": [{"x": 0, "y": 2.5, "cost": 0.7}, {"x": 100, "y": 2.5, "cost": 0.4},
                      {"x": 0, "y": 300, "cost": 0.1}],
            "grid": {"x0": 2, "y0": 0, "nx": 2, "ny": 1, "side": 5},
            "regions": [{"x0": 0, "y0": 0, "x1": 12, "y1": 5, "lambda": 4e-4, "zeta": 0.2}],
            "radio": {"alpha": 0.01, "beta": 0.01}}"#,
    )
    .unwrap();
    let Outcome::Deployed(d) = solve_deployment(&s).unwrap() else {
        panic!("covered by the first site");
    };
    assert_eq!(d.y, vec![true, false, false]);
}

#[test]
fn removing_candidates_makes_it_infeasible() {
    let mut doc = generate(SizeClass::Tiny, 2);
    let s = Scenario::from_doc(doc.clone()).unwrap();
    assert!(matches!(
        solve_deployment(&s).unwrap(),
        Outcome::Deployed(_)
    ));
    doc.sites.truncate(1);
    let s = Scenario::from_doc(doc).unwrap();
    let Outcome::Infeasible(report) = solve_deployment(&s).unwrap() else {
        panic!("one site cannot protect a street");
    };
    assert!(!report.grids.is_empty());
    for &g in &report.grids {
        assert!(s.grids[g].needs_guarantee());
    }
}

#[test]
fn nulling_uncovered_links_keeps_the_optimum() {
    let mut padded_total = 0;
    let mut compared = 0;
    for seed in 0..20 {
        // Crowded streets, so the load ceiling trims coverage.
        let mut doc = generate(SizeClass::Tiny, seed);
        for r in &mut doc.regions {
            r.lambda *= 40.0;
        }
        let s = Scenario::from_doc(doc).unwrap();
        let prep = prepare(&s).unwrap();
        let ilp = match build_selection_ilp(
            &prep.coverage,
            &prep.links,
            &s.grids,
            &site_costs(&s),
            &s.radio,
            BigMRule::Widened,
        ) {
            Ok(ilp) => ilp,
            Err(CoreError::Uncoverable { .. }) => continue,
            Err(e) => panic!("{e}"),
        };
        compared += 1;
        // Add indicators for the usable pairs outside the coverage pattern,
        // as an unreduced formulation would: `s <= y_b * 0` plus an outage
        // weight. Nulling them must give back the same problem.
        let mut padded = ilp.instance.clone();
        let mut extra = Vec::new();
        for (g, cell) in s.grids.iter().enumerate() {
            if !cell.needs_guarantee() {
                continue;
            }
            let row = ilp.outage_rows[g].unwrap();
            for b in 0..s.n_sites() {
                if !prep.links.usable(b, g) || prep.coverage.lambda.get(b, g) {
                    continue;
                }
                let v = padded.add_var(0.0, Some(format!("u{}_{}", b + 1, g + 1)));
                padded
                    .add_constraint(Constraint::new(vec![(v, 1.0), (b, 0.0)], Sense::Le, 0.0))
                    .unwrap();
                let p = prep.links.p_blk(b, g);
                let w = (p + s.radio.gamma * (1.0 - p)).ln();
                padded.constraints[row].coeffs.push((v, w));
                extra.push(v);
            }
        }
        padded_total += extra.len();
        let plain = solve_bb(&padded).unwrap();
        let nulled = solve_bb(&null_variables(&padded, &extra).unwrap()).unwrap();
        let reference = solve_bb(&ilp.instance).unwrap();
        assert_eq!(plain.status, nulled.status, "seed {seed}");
        assert_eq!(plain.status, reference.status, "seed {seed}");
        if plain.status == Status::Optimal {
            assert!((plain.objective_value - nulled.objective_value).abs() < 1e-9);
            assert!((plain.objective_value - reference.objective_value).abs() < 1e-9);
            assert!(nulled.nodes_explored <= plain.nodes_explored, "seed {seed}");
        }
    }
    assert!(compared >= 10, "only {compared} buildable instances");
    assert!(padded_total > 0);
}
