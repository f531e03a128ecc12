mod common;

use std::collections::BTreeSet;
use std::sync::Arc;

use bsm::kernel::{components_as_system, implementation_exists, validate_indices, Behaviour, Component, Validation};
use bsm::timed::{derived_order, minimal_behaviours, validate_timed, OrderedComponent, TimedClause, TimedImplementation};
use common::*;
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::Rng;

/// A random partial order on `0..k` as a reflexive, transitive,
/// antisymmetric matrix.
fn random_order(rng: &mut Rng8, k: usize) -> Vec<Vec<bool>> {
    let mut perm: Vec<usize> = (0..k).collect();
    perm.shuffle(rng);
    let mut leq = vec![vec![false; k]; k];
    for i in 0..k {
        leq[perm[i]][perm[i]] = true;
        for j in i + 1..k {
            leq[perm[i]][perm[j]] = rng.gen_bool(0.4);
        }
    }
    for m in 0..k {
        for i in 0..k {
            for j in 0..k {
                if leq[i][m] && leq[m][j] {
                    leq[i][j] = true;
                }
            }
        }
    }
    leq
}

struct Instance {
    t: TimedImplementation,
    leq: Vec<Vec<bool>>,
    /// Observed value of every behaviour of `h`, and its image under σ.
    observed: Vec<usize>,
    map: Vec<usize>,
}

/// `h` extends every behaviour of `f` with one to three observer values;
/// `constant` pins them all to the first observer value.
fn instance(rng: &mut Rng8, constant: bool) -> Instance {
    let k = rng.gen_range(1..=4);
    let o = component("o", k);
    let leq = random_order(rng, k);
    let pairs: Vec<(Behaviour, Behaviour)> = (0..k)
        .flat_map(|a| (0..k).map(move |b| (a, b)))
        .filter(|&(a, b)| a != b && leq[a][b])
        .map(|(a, b)| (o.behaviour(a as u32).clone(), o.behaviour(b as u32).clone()))
        .collect();
    let observer = OrderedComponent::with_reflexive_pairs(o.clone(), &pairs).unwrap();
    let cs: Vec<Arc<Component>> = vec![component("a", 3), component("b", 2)];
    let n = rng.gen_range(1..=5);
    let f = random_system(rng, "f", &cs, n);
    let h_comps = [cs.clone(), vec![o.clone()]].concat();
    let (mut rows, mut map, mut observed) = (Vec::new(), Vec::new(), Vec::new());
    for x in 0..f.len() {
        let base: Vec<u32> = cs.iter().map(|c| c.position(f.local(x, c.id()).unwrap()).unwrap()).collect();
        for _ in 0..rng.gen_range(1..=3) {
            let ov = if constant { 0 } else { rng.gen_range(0..k) };
            rows.push([base.clone(), vec![ov as u32]].concat());
            map.push(x);
            observed.push(ov);
        }
    }
    let h = system_from_rows("h", &h_comps, &rows);
    let Validation::Valid(sigma) = validate_indices(&h, &f, map.clone()).unwrap() else { panic!("σ") };
    let rho = implementation_exists(&h, &components_as_system(&[o], &limits()).unwrap()).unwrap();
    Instance { t: TimedImplementation::new(observer, sigma, rho).unwrap(), leq, observed, map }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn derived_order_matches_a_literal_scan(seed in any::<u64>()) {
        let mut rng = rng(seed);
        let inst = instance(&mut rng, false);
        prop_assert!(validate_timed(&inst.t).valid);
        let ord = derived_order(&inst.t);
        let n = inst.t.f().len();
        let fiber = |x: usize| -> Vec<usize> {
            (0..inst.map.len()).filter(|&v| inst.map[v] == x).map(|v| inst.observed[v]).collect()
        };
        for x in 0..n {
            for y in 0..n {
                let literal = fiber(x).iter().all(|&a| fiber(y).iter().all(|&b| inst.leq[a][b]));
                prop_assert_eq!(ord.leq(x, y), literal);
            }
            // antisymmetry of the observer: x ≤ x iff its fiber sees one value
            let seen: BTreeSet<usize> = fiber(x).into_iter().collect();
            prop_assert_eq!(ord.leq(x, x), seen.len() == 1);
        }
        prop_assert!(ord.is_transitive());
    }

    #[test]
    fn minimal_behaviours_match_their_definition(seed in any::<u64>()) {
        let mut rng = rng(seed);
        let inst = instance(&mut rng, false);
        let ord = derived_order(&inst.t);
        let f = inst.t.f();
        let expected: Vec<Behaviour> = (0..f.len())
            .filter(|&x| !(0..f.len()).any(|y| y != x && ord.leq(y, x) && !ord.leq(x, y)))
            .map(|x| f.behaviour(x).clone())
            .collect();
        prop_assert_eq!(minimal_behaviours(&inst.t), expected);
    }

    #[test]
    fn constant_observation_makes_everything_minimal(seed in any::<u64>()) {
        let mut rng = rng(seed);
        let inst = instance(&mut rng, true);
        let ord = derived_order(&inst.t);
        let n = inst.t.f().len();
        prop_assert!((0..n).all(|x| (0..n).all(|y| ord.leq(x, y))));
        prop_assert_eq!(minimal_behaviours(&inst.t).len(), n);
        prop_assert_eq!(ord.preorder_classes().len(), 1);
    }
}

#[test]
fn observer_inside_the_system_is_rejected() {
    let o = component("o", 2);
    let observer = OrderedComponent::with_reflexive_pairs(o.clone(), &[]).unwrap();
    let f = system_from_rows("f", std::slice::from_ref(&o), &[vec![0], vec![1]]);
    let sigma = implementation_exists(&f, &f).unwrap();
    let rho = implementation_exists(&f, &components_as_system(&[o], &limits()).unwrap()).unwrap();
    let v = validate_timed(&TimedImplementation::new(observer, sigma, rho).unwrap());
    assert!(!v.valid);
    // Comp(h) = Comp(f) ∪ {o} still holds since o is already in f
    assert_eq!(v.failed, vec![TimedClause::ObserverOutsideSystem]);
}
