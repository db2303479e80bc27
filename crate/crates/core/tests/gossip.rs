use chemcons_core::gossip::{run_gossip, GossipAlgorithm, GossipState};
use chemcons_core::protocol::EventSchedule;
use chemcons_core::topology::{make_regular_lattice, make_small_world};
use proptest::prelude::*;

fn spread(x: &[f64]) -> f64 {
    x.iter().copied().fold(f64::MIN, f64::max) - x.iter().copied().fold(f64::MAX, f64::min)
}

#[test]
fn global_clock_ticks_at_m_mu() {
    let g = make_regular_lattice(100, 2).unwrap();
    for seed in 0..5 {
        let mut st = GossipState::new(&vec![1.0; 100], 2.0, 0.5, seed).unwrap();
        st.advance_to(&g, GossipAlgorithm::Randomized, 10.0);
        let sigma = 2000f64.sqrt();
        assert!((st.ticks() as f64 - 2000.0).abs() <= 3.0 * sigma, "seed {seed}: {}", st.ticks());
    }
}

#[test]
fn randomized_reaches_the_average() {
    let g = make_small_world(25, 75, 0.2, 3).unwrap();
    let z: Vec<f64> = (1..=25).map(f64::from).collect();
    let traj = run_gossip(&g, &z, GossipAlgorithm::Randomized, 1.0, 0.5, &EventSchedule::default(), 60.0, 1.0, 7).unwrap();
    let last = traj.last().unwrap();
    assert!(spread(&last.state) <= 1e-3 * spread(&z), "{:?}", last.state);
    assert!(last.state.iter().all(|x| (x - 13.0).abs() <= 1e-3 * 24.0));
}

#[test]
fn seeded_runs_repeat() {
    let g = make_small_world(25, 75, 0.2, 3).unwrap();
    let z: Vec<f64> = (1..=25).map(f64::from).collect();
    for algo in [GossipAlgorithm::Randomized, GossipAlgorithm::Broadcast] {
        let a = run_gossip(&g, &z, algo, 1.0, 0.5, &EventSchedule::default(), 20.0, 0.5, 11).unwrap();
        let b = run_gossip(&g, &z, algo, 1.0, 0.5, &EventSchedule::default(), 20.0, 0.5, 11).unwrap();
        assert_eq!(a, b);
        let c = run_gossip(&g, &z, algo, 1.0, 0.5, &EventSchedule::default(), 20.0, 0.5, 12).unwrap();
        assert_ne!(a, c);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn ticks_never_widen_the_spread(z in prop::collection::vec(-100.0f64..100.0, 8..20),
                                    nodes in prop::collection::vec(any::<prop::sample::Index>(), 1..200),
                                    mix in 0.05f64..0.95, seed in any::<u64>()) {
        let m = z.len();
        let g = make_small_world(m, 2 * m, 0.3, seed).unwrap();
        for algo in [GossipAlgorithm::Randomized, GossipAlgorithm::Broadcast] {
            let mut st = GossipState::new(&z, 1.0, mix, seed).unwrap();
            let mut prev = spread(&st.x);
            for n in &nodes {
                st.tick(&g, algo, n.index(m));
                let now = spread(&st.x);
                prop_assert!(now <= prev);
                prev = now;
            }
        }
    }

    #[test]
    fn randomized_keeps_the_mean(z in prop::collection::vec(-100.0f64..100.0, 8..20),
                                 nodes in prop::collection::vec(any::<prop::sample::Index>(), 1..200),
                                 seed in any::<u64>()) {
        let m = z.len();
        let g = make_small_world(m, 2 * m, 0.3, seed).unwrap();
        let mut st = GossipState::new(&z, 1.0, 0.5, seed).unwrap();
        let sum: f64 = z.iter().sum();
        let scale: f64 = z.iter().map(|v| v.abs()).sum::<f64>().max(1.0);
        for n in &nodes {
            st.rn_tick(&g, n.index(m));
            let now: f64 = st.x.iter().sum();
            prop_assert!((now - sum).abs() <= 64.0 * f64::EPSILON * scale);
        }
    }
}
