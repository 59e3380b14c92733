use hapcache::channel::{sample_fso, FsoParams};
use hapcache::routing::{
    check_feasibility, solve_routing, solve_unicast_routing, RoutingProblem,
};
use hapcache::topology::{build_topology, GeometryConfig, NetworkTopology, Node};
use hapcache::traffic::{build_sessions, demand_profile, sample_requests, CachePlacement, Catalog, CatalogConfig, MulticastSession};
use hapcache::Error;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn butterfly() -> (NetworkTopology, Vec<f64>) {
    let cfg = GeometryConfig {
        haps: 7,
        dcs: 0,
        users: 0,
        ..Default::default()
    };
    let topo = build_topology(&cfg, &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
    // S=0, A=1, B=2, C=3, D=4, T1=5, T2=6
    let edges = [(0, 1), (0, 2), (1, 5), (2, 6), (1, 3), (2, 3), (3, 4), (4, 5), (4, 6)];
    let caps = topo
        .links
        .iter()
        .map(|l| match (l.src, l.dst) {
            (Node::Hap(a), Node::Hap(b)) if edges.contains(&(a, b)) => 1e6,
            _ => 0.0,
        })
        .collect();
    (topo, caps)
}

#[test]
fn butterfly_multicast_beats_unicast() {
    let (topo, caps) = butterfly();
    let fso = FsoParams {
        bandwidth_hz: 1e12,
        ..Default::default()
    };
    let gains = vec![1e6; topo.num_links()];
    let sessions = [MulticastSession {
        content: 0,
        sources: vec![Node::Hap(0)],
        dest_cac: vec![5, 6],
        dest_acc: vec![],
        mu_cac: 2e6,
        mu_acc: 1e6,
    }];
    let mut p = RoutingProblem::new(&topo, &sessions, &gains, &fso, 1.0);
    p.rate_caps = Some(&caps);
    let multi = solve_routing(&p).expect("network coding reaches rate 2");
    let rep = check_feasibility(&p, &multi, 1e-6);
    assert!(rep.passes(1e-6), "{rep:?}");
    match solve_unicast_routing(&p) {
        Err(Error::Infeasible(_)) => {}
        other => panic!("unicast should be infeasible, got {other:?}"),
    }
}

fn calibrated_fso() -> FsoParams {
    FsoParams {
        noise_var: 1e-31,
        ..Default::default()
    }
}

struct Instance {
    topo: NetworkTopology,
    sessions: Vec<MulticastSession>,
    gains: Vec<f64>,
}

fn random_instance(seed: u64) -> Instance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let k = rng.random_range(2..=4);
    let d = rng.random_range(1..=k.min(2));
    let cfg = GeometryConfig {
        haps: k,
        dcs: d,
        users: rng.random_range(k..=4 * k),
        ..Default::default()
    };
    let topo = build_topology(&cfg, &mut rng).unwrap();
    let cat = Catalog::generate(
        &CatalogConfig {
            contents: rng.random_range(2..=5),
            ..Default::default()
        },
        k,
        &mut rng,
    )
    .unwrap();
    let random_z = |rng: &mut ChaCha8Rng| {
        let mut z = CachePlacement::empty(k, cat.contents);
        for kk in 0..k {
            for c in 0..cat.contents {
                if rng.random_bool(0.3) && z.row_count(kk) < 2 {
                    z.set(kk, c, true);
                }
            }
        }
        z
    };
    let z_now = random_z(&mut rng);
    let z_next = random_z(&mut rng);
    let alpha = sample_requests(&cat, &topo, &mut rng);
    let demand = demand_profile(&z_now, &z_next, &alpha, &cat, &topo).unwrap();
    let sessions = build_sessions(&z_now, &demand, &topo, &cat).unwrap();
    let fso = calibrated_fso();
    let gains = sample_fso(&topo, &fso, &mut rng).iter().map(|s| s.g).collect();
    Instance { topo, sessions, gains }
}

#[test]
fn random_instances_unicast_dominates_and_verifies() {
    let fso = calibrated_fso();
    for seed in 0..20 {
        let inst = random_instance(seed);
        let p = RoutingProblem::new(&inst.topo, &inst.sessions, &inst.gains, &fso, 1.0);
        let start = std::time::Instant::now();
        let multi = solve_routing(&p).unwrap();
        let uni = solve_unicast_routing(&p).unwrap();
        let elapsed = start.elapsed();
        let rm = check_feasibility(&p, &multi, 1e-6);
        let ru = check_feasibility(&p, &uni, 1e-6);
        assert!(rm.passes(1e-6), "seed {seed}: {rm:?}");
        assert!(ru.passes(1e-6), "seed {seed}: {ru:?}");
        assert!(
            uni.objective >= multi.objective * (1.0 - 1e-6),
            "seed {seed}: unicast {} < multicast {}",
            uni.objective,
            multi.objective
        );
        eprintln!(
            "seed {seed}: {} sessions, multicast {:.4e}, unicast {:.4e}, {:?}",
            inst.sessions.len(),
            multi.objective,
            uni.objective,
            elapsed
        );
    }
}

#[test]
fn single_destination_unicast_equals_multicast() {
    let fso = calibrated_fso();
    let inst = random_instance(5);
    let single: Vec<MulticastSession> = inst
        .sessions
        .iter()
        .take(1)
        .map(|s| {
            let mut s = s.clone();
            let first = s.destinations().next().unwrap().0;
            if s.dest_cac.contains(&first) {
                s.dest_cac = vec![first];
                s.dest_acc.clear();
            } else {
                s.dest_acc = vec![first];
            }
            s
        })
        .collect();
    let p = RoutingProblem::new(&inst.topo, &single, &inst.gains, &fso, 1.0);
    let m = solve_routing(&p).unwrap();
    let u = solve_unicast_routing(&p).unwrap();
    assert!((m.objective - u.objective).abs() <= 1e-6 * m.objective);
}

#[test]
fn omega_shifts_power_towards_dcs() {
    let fso = calibrated_fso();
    let mut checked = 0;
    for seed in 100..110 {
        let inst = random_instance(seed);
        if inst.sessions.is_empty() {
            continue;
        }
        let sols: Vec<_> = [0.5, 1.0, 2.0]
            .iter()
            .map(|&w| solve_routing(&RoutingProblem::new(&inst.topo, &inst.sessions, &inst.gains, &fso, w)).unwrap())
            .collect();
        for pair in sols.windows(2) {
            let tol_h = 1e-5 * pair[0].p_fso_hap.max(pair[0].p_fso_dc);
            assert!(pair[1].p_fso_hap <= pair[0].p_fso_hap + tol_h, "seed {seed}");
            assert!(pair[1].p_fso_dc >= pair[0].p_fso_dc - tol_h, "seed {seed}");
        }
        checked += 1;
    }
    assert!(checked >= 5);
}
