use nfms_core::scenario::{generate, inter_arrival_sampler, ScenarioConfig};
use nfms_core::sim::{run, SimOptions};
use nfms_core::SolverKind;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn small() -> ScenarioConfig {
    ScenarioConfig {
        total_arrivals: 50,
        ..ScenarioConfig::desk_scale()
    }
}

fn audited() -> SimOptions {
    SimOptions {
        audit: true,
        ..Default::default()
    }
}

#[test]
fn zero_deadline_rejects_everything() {
    let cfg = ScenarioConfig {
        deadline_range: (0, 0),
        ..small()
    };
    for kind in SolverKind::ALL {
        let t = run(&cfg, kind, &audited()).unwrap();
        assert_eq!(t.metrics.accepted, 0, "{kind}");
        assert_eq!(t.records.len(), 50);
    }
}

#[test]
fn incapable_network_rejects_everything() {
    let cfg = ScenarioConfig {
        capabilities_per_node_range: (0, 0),
        ..small()
    };
    for kind in SolverKind::ALL {
        assert_eq!(
            run(&cfg, kind, &audited())
                .unwrap()
                .metrics
                .acceptance_ratio(),
            0.0,
            "{kind}"
        );
    }
}

#[test]
fn runs_keep_their_invariants() {
    for kind in SolverKind::ALL {
        let t = run(&small(), kind, &audited()).unwrap();
        let audit = t.audit.unwrap();
        assert_eq!(audit.violations(), 0, "{kind}");
        assert_eq!(audit.checks, t.metrics.accepted);
        assert!(t
            .records
            .windows(2)
            .all(|w| w[0].arrival_time <= w[1].arrival_time));
        assert!(t
            .records
            .iter()
            .all(|r| (0.0..=1.0).contains(&r.acceptance_ratio)));
        assert!(t.records.windows(2).all(|w| {
            w[0].cumulative_revenue <= w[1].cumulative_revenue
                && w[0].cumulative_cost <= w[1].cumulative_cost
        }));
        assert_eq!(
            t.records.iter().filter(|r| r.accepted).count(),
            t.metrics.accepted
        );
    }
}

#[test]
fn replays_are_identical() {
    for kind in SolverKind::ALL {
        let a = run(&small(), kind, &SimOptions::default()).unwrap();
        let b = run(&small(), kind, &SimOptions::default()).unwrap();
        assert_eq!(
            serde_json::to_string(&a.records).unwrap(),
            serde_json::to_string(&b.records).unwrap()
        );
    }
    assert_eq!(generate(&small()).unwrap(), generate(&small()).unwrap());
}

#[test]
fn inter_arrival_mean_matches_the_rate() {
    let mut gap = inter_arrival_sampler(1.0 / 3.0);
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mean = (0..10_000).map(|_| gap(&mut rng)).sum::<u64>() as f64 / 10_000.0;
    assert!((mean - 3.0).abs() <= 0.15, "{mean}");
}

#[test]
fn generated_values_stay_in_range() {
    let cfg = ScenarioConfig::default();
    let sc = generate(&cfg).unwrap();
    for r in &sc.arrivals {
        assert!((5..=10).contains(&(r.len() as u64)));
        assert!((5000..=10_000).contains(&(r.deadline() - r.arrival_time())));
        assert!(r
            .functions()
            .iter()
            .all(|f| (20..=30).contains(&f.buffer_demand) && (1..=10).contains(&f.kind.0)));
    }
}
