use chemcons_core::chem::{mass_action_rate, MultisetState, Step};
use chemcons_core::queue::IndexedQueue;
use chemcons_core::{Engine, Reaction, SpeciesId, SpeciesKind};
use proptest::prelude::*;

fn sp(k: u16) -> SpeciesId {
    SpeciesId::new(0, SpeciesKind::Custom(k))
}

#[derive(Debug, Clone)]
struct Net {
    reactions: Vec<Reaction>,
    counts: Vec<u64>,
}

/// Up to four species on one node, up to six reactions of order <= 2.
fn arb_net(closed: bool) -> impl Strategy<Value = Net> {
    let side = prop::collection::vec((0u16..4, 1u32..3), 1..3);
    let reaction = (side.clone(), side, 0.1f64..3.0);
    (
        prop::collection::vec(reaction, 1..6),
        prop::collection::vec(0u64..40, 4),
    )
        .prop_map(move |(rs, counts)| {
            let reactions = rs
                .into_iter()
                .enumerate()
                .map(|(id, (lhs, rhs, k))| {
                    let mut r = Reaction::new(id, 0, k);
                    for &(s, c) in &lhs {
                        r = r.reactant(sp(s), c);
                    }
                    if closed {
                        // same molecule total on both sides
                        let total: u32 = lhs.iter().map(|p| p.1).sum();
                        let mut left = total;
                        for &(s, c) in &rhs {
                            let c = c.min(left);
                            if c > 0 {
                                r = r.product(sp(s), c);
                                left -= c;
                            }
                        }
                        if left > 0 {
                            r = r.product(sp(rhs[0].0), left);
                        }
                    } else {
                        for &(s, c) in rhs.iter().skip(1) {
                            r = r.product(sp(s), c);
                        }
                    }
                    r
                })
                .collect();
            Net { reactions, counts }
        })
}

fn build(net: &Net) -> Engine {
    let mut init = MultisetState::new();
    for (k, &c) in net.counts.iter().enumerate() {
        init = init.with(sp(k as u16), c);
    }
    Engine::new(net.reactions.clone(), init).unwrap()
}

fn firings(engine: &mut Engine, n: usize) -> Vec<(usize, u64, Vec<u64>)> {
    let mut out = Vec::new();
    for _ in 0..n {
        match engine.execute_next() {
            Step::Fired { reaction, at } => out.push((reaction, at.to_bits(), engine.counts().to_vec())),
            Step::Delivered { .. } => {}
            Step::Exhausted => break,
        }
    }
    out
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn identical_inputs_fire_identically(net in arb_net(false)) {
        let a = firings(&mut build(&net), 300);
        let b = firings(&mut build(&net), 300);
        prop_assert_eq!(a, b);
    }

    #[test]
    fn counts_never_go_negative(net in arb_net(false)) {
        let mut e = build(&net);
        for _ in 0..300 {
            let before = e.counts().to_vec();
            match e.execute_next() {
                Step::Fired { reaction, .. } => {
                    let r = &net.reactions[reaction];
                    // the fired reaction had its reactants available
                    for &(s, a) in &r.reactants {
                        let i = e.species_index(s).unwrap();
                        prop_assert!(before[i] >= a as u64);
                    }
                }
                Step::Exhausted => break,
                Step::Delivered { .. } => {}
            }
        }
    }

    #[test]
    fn closed_networks_conserve_molecules(net in arb_net(true)) {
        let mut e = build(&net);
        let total: u64 = e.counts().iter().sum();
        for _ in 0..300 {
            if let Step::Exhausted = e.execute_next() {
                break;
            }
            prop_assert_eq!(e.counts().iter().sum::<u64>(), total);
        }
    }

    #[test]
    fn fresh_draw_is_reciprocal_rate(net in arb_net(false)) {
        let mut e = build(&net);
        for _ in 0..100 {
            match e.execute_next() {
                Step::Fired { reaction, at } => {
                    let idx = net.reactions.iter().position(|r| r.id == reaction).unwrap();
                    let v = mass_action_rate(&net.reactions[idx], &e.state());
                    let next = e.putative_time(reaction).unwrap();
                    if v > 0.0 {
                        prop_assert_eq!(next, 1.0 / v + at);
                    } else {
                        prop_assert_eq!(next, f64::INFINITY);
                    }
                }
                _ => break,
            }
        }
    }

    #[test]
    fn queue_pops_in_time_then_index_order(times in prop::collection::vec(prop_oneof![Just(1.0f64), 0.0f64..5.0, Just(f64::INFINITY)], 1..30),
                                           updates in prop::collection::vec((0usize..30, 0.0f64..5.0), 0..30)) {
        let mut q = IndexedQueue::new(times.clone());
        let mut reference = times;
        for (i, t) in updates {
            let i = i % reference.len();
            q.update(i, t);
            reference[i] = t;
        }
        let mut order: Vec<usize> = (0..reference.len()).collect();
        order.sort_by(|&a, &b| reference[a].total_cmp(&reference[b]).then(a.cmp(&b)));
        for &expect in &order {
            let (i, t) = q.peek().unwrap();
            if t == f64::INFINITY {
                prop_assert_eq!(reference[expect], f64::INFINITY);
                break;
            }
            prop_assert_eq!(i, expect);
            prop_assert_eq!(t, reference[expect]);
            q.update(i, f64::INFINITY);
        }
    }
}

#[test]
fn reversible_pair_tracks_closed_form() {
    let s1 = SpeciesId::s(0);
    let s2 = SpeciesId::s(1);
    let reactions = vec![
        Reaction::new(0, 0, 1.0).reactant(s1, 1).product(s2, 1),
        Reaction::new(1, 1, 1.0).reactant(s2, 1).product(s1, 1),
    ];
    let init = MultisetState::new().with(s1, 500).with(s2, 300);
    let mut e = Engine::new(reactions, init).unwrap();
    let samples = e.run_until(5.0, 0.01).unwrap();
    let mut worst: f64 = 0.0;
    for s in &samples {
        let exact = 400.0 + 100.0 * (-2.0 * s.t).exp();
        worst = worst.max((s.counts[0] as f64 - exact).abs() / 500.0);
        assert_eq!(s.counts[0] + s.counts[1], 800);
    }
    assert!(worst <= 0.02, "relative sup-norm error {worst}");
    assert_eq!(samples.len(), 501);
}

#[test]
fn clamped_measurement_reclamped_to_zero_blocks_reaction() {
    let z = SpeciesId::z(0);
    let s = SpeciesId::s(0);
    let r = Reaction::new(0, 0, 0.1).reactant(z, 1).product(z, 1).product(s, 1);
    let mut e = Engine::new(vec![r], MultisetState::new().with_clamped(z, 50)).unwrap();
    e.advance_to(10.0);
    assert_eq!(e.count(z), 50);
    assert!(e.count(s) > 0);
    e.set_clamped(z, 0).unwrap();
    assert_eq!(e.putative_time(0), Some(f64::INFINITY));
}
