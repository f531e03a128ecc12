mod common;

use bsm::guarantees::{
    cap_verify_closure, cap_verify_exhaustive, close, guarantee_satisfied, implementation_satisfies,
    is_entangled, AvailabilityPairing, BehaviourRelation, CapDetail, ClosureOutcome, Guarantee,
};
use bsm::kernel::System;
use common::*;
use fixedbitset::FixedBitSet;
use proptest::prelude::*;
use rand::Rng;

fn subsets(n: usize) -> impl Iterator<Item = FixedBitSet> {
    (0u32..1 << n).map(move |m| {
        let mut s = FixedBitSet::with_capacity(n);
        (0..n).filter(|i| m >> i & 1 == 1).for_each(|i| s.insert(i));
        s
    })
}

fn random_guarantee(rng: &mut Rng8, g: &System) -> Guarantee {
    let n = g.len();
    match rng.gen_range(0..5) {
        0 => Guarantee::consistency(g, random_subset(rng, n, 0.6)).unwrap(),
        1 => Guarantee::weak_availability(random_relation(rng, g, 0.3)),
        2 => Guarantee::strong_availability(random_relation(rng, g, 0.3)),
        3 => Guarantee::explicit(g, (0..3).map(|_| random_subset(rng, n, 0.5)).collect()).unwrap(),
        _ => Guarantee::conjunction(
            g,
            vec![
                Guarantee::consistency(g, random_subset(rng, n, 0.7)).unwrap(),
                Guarantee::strong_availability(random_relation(rng, g, 0.2)),
            ],
        )
        .unwrap(),
    }
}

/// The least `R`-successor-closed superset, by iteration.
fn successor_closure(r: &BehaviourRelation, x: &FixedBitSet) -> FixedBitSet {
    let mut out = x.clone();
    loop {
        let before = out.count_ones(..);
        let members: Vec<usize> = out.ones().collect();
        for a in members {
            for &b in r.successors(a) {
                out.insert(b);
            }
        }
        if out.count_ones(..) == before {
            return out;
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    /// Two implementations into `g` with the same image get the same verdict,
    /// and that verdict is the membership of the image.
    #[test]
    fn satisfaction_depends_only_on_the_image(seed in any::<u64>()) {
        let mut rng = rng(seed);
        let cs = vec![component("a", 2), component("b", 2)];
        let n = rng.gen_range(1..=5);
        let f = random_system(&mut rng, "f", &cs, n);
        let sigma = random_implementation(&mut rng, &f, "g", &cs[..1], 3);
        let g = sigma.target().clone();
        // re-pick every image point among the rows with the same snapshot
        let rows: Vec<usize> = (0..f.len())
            .map(|x| {
                let s = snap(&g, sigma.apply(x));
                let same: Vec<usize> = (0..g.len()).filter(|&y| snap(&g, y) == s).collect();
                same[rng.gen_range(0..same.len())]
            })
            .collect();
        let tau = match bsm::kernel::validate_indices(&f, &g, rows).unwrap() {
            bsm::kernel::Validation::Valid(m) => m,
            v => panic!("{v:?}"),
        };
        for _ in 0..8 {
            let gu = random_guarantee(&mut rng, &g);
            let a = implementation_satisfies(&sigma, &gu).unwrap();
            prop_assert_eq!(a, guarantee_satisfied(&sigma.image(), &gu).unwrap());
            if sigma.image() == tau.image() {
                prop_assert_eq!(a, implementation_satisfies(&tau, &gu).unwrap());
            }
        }
    }

    #[test]
    fn consistency_is_downward_and_strong_availability_union_closed(seed in any::<u64>()) {
        let mut rng = rng(seed);
        let cs = vec![component("a", 3)];
        let n = rng.gen_range(1..=5);
        let g = random_system(&mut rng, "g", &cs, n);
        let cons = Guarantee::consistency(&g, random_subset(&mut rng, n, 0.6)).unwrap();
        let r = random_relation(&mut rng, &g, 0.25);
        let strong = Guarantee::strong_availability(r.clone());
        let all: Vec<FixedBitSet> = subsets(n).collect();
        for x in &all {
            let sx = guarantee_satisfied(x, &strong).unwrap();
            // strong availability is successor closure
            prop_assert_eq!(sx, successor_closure(&r, x) == *x);
            for y in &all {
                if x.is_subset(y) && guarantee_satisfied(y, &cons).unwrap() {
                    prop_assert!(guarantee_satisfied(x, &cons).unwrap());
                }
                if sx && guarantee_satisfied(y, &strong).unwrap() {
                    let mut u = x.clone();
                    u.union_with(y);
                    prop_assert!(guarantee_satisfied(&u, &strong).unwrap());
                }
            }
        }
    }

    /// The exhaustive mode against brute force, and soundness of the
    /// theorem on every sampled instance.
    #[test]
    fn entangled_instances_have_no_satisfying_subset(seed in any::<u64>()) {
        let mut rng = rng(seed);
        let cs = [component("a", rng.gen_range(1..=3)), component("b", rng.gen_range(1..=3))];
        let n = rng.gen_range(1..=6);
        let f = random_system(&mut rng, "f", &cs, n);
        let inst = random_cap_instance(&mut rng, &f);
        let rep = cap_verify_exhaustive(&inst, &limits()).unwrap();
        let naive = satisfying_subsets_naive(&inst);
        prop_assert_eq!(rep.verdict, naive.is_empty());
        let ent = is_entangled(&inst).entangled;
        prop_assert_eq!(ent, entangled_naive(&inst));
        if ent {
            prop_assert!(rep.verdict);
        }
        let CapDetail::Exhaustive(d) = &rep.detail else { panic!("mode") };
        prop_assert_eq!(d.satisfying_count as usize, naive.len());
        prop_assert_eq!(d.subsets_checked, (1u64 << n) - 1);
    }

    /// Closure mode never contradicts exhaustive mode: an all-satisfied
    /// closure is a satisfying subset, and a true exhaustive verdict makes
    /// every closure fail.
    #[test]
    fn closure_and_exhaustive_modes_agree(seed in any::<u64>(), pairing in 0usize..4) {
        let mut rng = rng(seed);
        let cs = [component("a", rng.gen_range(1..=3)), component("b", rng.gen_range(1..=3))];
        let n = rng.gen_range(1..=6);
        let f = random_system(&mut rng, "f", &cs, n);
        let inst = random_cap_instance(&mut rng, &f).with_pairing(AvailabilityPairing::ALL[pairing]);
        let ex = cap_verify_exhaustive(&inst, &limits()).unwrap();
        let ent = ex.entanglement.entangled;
        for x in 0..n {
            let rep = cap_verify_closure(&inst, f.behaviour(x), &limits()).unwrap();
            if ex.verdict {
                prop_assert!(rep.verdict);
            }
            if ent && pairing == 0 {
                prop_assert!(rep.verdict);
            }
            let CapDetail::Closure(d) = &rep.detail else { panic!("mode") };
            if d.outcome == ClosureOutcome::AllSatisfied {
                let set = d.closure.iter().map(|b| f.index_of(b).unwrap()).collect();
                let g = inst.guarantee().unwrap();
                prop_assert!(guarantee_satisfied(&set, &g).unwrap());
                prop_assert!(!ex.verdict);
            }
        }
    }

    #[test]
    fn closing_is_idempotent(seed in any::<u64>()) {
        let mut rng = rng(seed);
        let cs = [component("a", 2), component("b", 3)];
        let n = rng.gen_range(1..=6);
        let f = random_system(&mut rng, "f", &cs, n);
        let inst = random_cap_instance(&mut rng, &f);
        let start = random_subset(&mut rng, n, 0.3);
        let once = close(&inst, &start, &limits()).unwrap();
        if once.unrealizable.is_none() {
            let twice = close(&inst, &once.set, &limits()).unwrap();
            prop_assert_eq!(twice.set, once.set.clone());
            prop_assert!(start.is_subset(&once.set));
        }
    }
}

#[test]
fn fixed_point_seed_in_c_is_all_satisfied() {
    // one component, identity partition maps, no relations: {seed} is closed
    let cs = [component("a", 2), component("b", 2)];
    let f = system_from_rows("f", &cs, &[vec![0, 0], vec![1, 1]]);
    let s1 = random_implementation(&mut rng(1), &f, "g1", &cs[..1], 0);
    let s2 = random_implementation(&mut rng(2), &f, "g2", &cs[1..], 0);
    let mut c = FixedBitSet::with_capacity(2);
    c.insert(0);
    let inst = bsm::guarantees::CapInstance::new(
        s1,
        s2,
        c,
        BehaviourRelation::empty(&f),
        BehaviourRelation::empty(&f),
    )
    .unwrap();
    let rep = cap_verify_closure(&inst, f.behaviour(0), &limits()).unwrap();
    assert!(!rep.verdict);
    assert!(!rep.entanglement.entangled);
}
