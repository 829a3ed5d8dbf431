use dasee::channel::{draw_channel, draw_user_position, DasTopology};
use dasee::selection::{
    all_on_baselines, cas_baseline, distance_order, norm_order, select_distance, select_exhaustive, select_norm_based,
    CasCircuitPower, SetEvaluator, Strategy,
};
use dasee::solver::SolverConfig;
use dasee::Channel;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const W: f64 = 20e6;

fn draw(topology: &DasTopology, seed: u64) -> Channel {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let user = draw_user_position(topology.cell_radius_m, &mut rng);
    draw_channel(topology, user, 4, &mut rng).unwrap()
}

#[test]
fn exhaustive_dominates_the_heuristics() {
    let topo = DasTopology::reference(4).unwrap();
    let cfg = SolverConfig::default();
    for seed in 0..15 {
        let ch = draw(&topo, seed);
        for floor in [0.0, 100e6 / W, 300e6 / W] {
            let ex = select_exhaustive(&ch, &topo, floor, &cfg).unwrap();
            assert_eq!(ex.sets_evaluated, 15);
            let best = ex.energy_efficiency();
            let d = select_distance(&ch, &topo, floor, &cfg).unwrap();
            let n = select_norm_based(&ch, &topo, floor, &cfg).unwrap();
            let (ee, _) = all_on_baselines(&ch, &topo, floor, &cfg).unwrap();
            for r in [&d, &n, &ee] {
                if r.feasible {
                    assert!(
                        best >= r.energy_efficiency() * (1.0 - 1e-9),
                        "seed {seed} {}",
                        r.strategy
                    );
                }
            }
        }
    }
}

#[test]
fn greedy_walks_a_prefix_of_its_order() {
    let topo = DasTopology::reference(6).unwrap();
    let cfg = SolverConfig::default();
    for seed in 0..10 {
        let ch = draw(&topo, seed);
        let order = distance_order(&ch.distances_m);
        let sel = select_distance(&ch, &topo, 0.0, &cfg).unwrap();
        assert!(sel.sets_evaluated <= 6);
        let mut prefix = order[..sel.active_set.len()].to_vec();
        prefix.sort_unstable();
        assert_eq!(sel.active_set, prefix);
        assert!(sel.solution.rate_bps_hz >= 0.0);
    }
}

#[test]
fn unreachable_floor_falls_back_to_all_on_rate_max() {
    let topo = DasTopology::reference(3).unwrap();
    let cfg = SolverConfig::default();
    let ch = draw(&topo, 3);
    let ev = SetEvaluator::new(&ch, &topo, &cfg).unwrap();
    let r1 = ev.rate_max(&[0, 1, 2]).unwrap().rate_bps_hz;
    for strategy in [Strategy::Distance, Strategy::Norm, Strategy::Exhaustive] {
        let sel = match strategy {
            Strategy::Distance => ev.select_distance(2.0 * r1),
            Strategy::Norm => ev.select_norm_based(2.0 * r1),
            _ => ev.select_exhaustive(2.0 * r1),
        }
        .unwrap();
        assert!(!sel.feasible);
        assert_eq!(sel.active_set, vec![0, 1, 2]);
        assert!((sel.solution.rate_bps_hz - r1).abs() <= 1e-12 * r1);
    }
}

#[test]
fn all_on_se_spends_the_full_budget() {
    let topo = DasTopology::reference(4).unwrap();
    let cfg = SolverConfig::default();
    let ch = draw(&topo, 4);
    let (ee, se) = all_on_baselines(&ch, &topo, 0.0, &cfg).unwrap();
    assert!((se.solution.transmit_power_w - 40.0).abs() < 1e-6);
    assert!(se.solution.rate_bps_hz >= ee.solution.rate_bps_hz * (1.0 - 1e-9));
    assert!(ee.energy_efficiency() >= se.energy_efficiency() * (1.0 - 1e-9));
    assert_eq!(ee.solution.circuit_power_w, 20.0);
}

#[test]
fn cas_uses_one_site_and_the_chosen_circuit_power() {
    let topo = DasTopology::reference(4).unwrap();
    assert_eq!(CasCircuitPower::Literal.watts(&topo), 20.0);
    assert_eq!(CasCircuitPower::PerAntenna.watts(&topo), 17.0);
    let cas_topo = topo.colocated();
    assert_eq!(cas_topo.rau_count(), 1);
    assert_eq!(cas_topo.antennas_per_rau, vec![16]);
    let cfg = SolverConfig::default();
    let ch = draw(&cas_topo, 5);
    let a = cas_baseline(&ch, &topo, 0.0, &cfg, CasCircuitPower::Literal).unwrap();
    let b = cas_baseline(&ch, &topo, 0.0, &cfg, CasCircuitPower::PerAntenna).unwrap();
    assert_eq!(a.active_set, vec![0]);
    assert_eq!(a.solution.circuit_power_w, 20.0);
    assert_eq!(b.solution.circuit_power_w, 17.0);
    assert!(b.energy_efficiency() > a.energy_efficiency());
}

#[test]
fn orders_break_ties_by_index() {
    assert_eq!(distance_order(&[3.0, 1.0, 3.0, 0.5]), vec![3, 1, 0, 2]);
    assert_eq!(norm_order(&[1.0, 2.0, 2.0, 0.1]), vec![1, 2, 0, 3]);
}

#[test]
fn strategies_parse_by_name() {
    for s in Strategy::ALL {
        assert_eq!(s.name().parse::<Strategy>().unwrap(), s);
    }
    assert_eq!("ALL_ON_EE".parse::<Strategy>().unwrap(), Strategy::AllOnEe);
    assert!("nearest".parse::<Strategy>().is_err());
}

#[test]
fn exhaustive_refuses_large_systems() {
    let topo = DasTopology::uniform(13, 1000.0, 1, 10.0).unwrap();
    let ch = draw(&topo, 6);
    assert!(select_exhaustive(&ch, &topo, 0.0, &SolverConfig::default()).is_err());
}
