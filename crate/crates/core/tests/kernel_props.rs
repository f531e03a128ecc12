mod common;

use std::collections::BTreeSet;
use std::sync::Arc;

use bsm::kernel::{
    compatible_pairs, components_as_system, factor_through_tensor, implementation_exists, interface,
    is_free_composition, is_input_set, is_runnable, project, systems_equivalent, tensor, validate_indices,
    Component, CompositionWitness, System,
};
use common::*;
use proptest::prelude::*;
use rand::Rng;

fn rows_strategy(sizes: [u32; 2], max: usize) -> impl Strategy<Value = Vec<Vec<u32>>> {
    prop::collection::vec((0..sizes[0], 0..sizes[1]).prop_map(|(a, b)| vec![a, b]), 1..=max)
}

/// `f` over (a, b) and `g` over (b, c), sharing component `b`.
fn pair(rf: &[Vec<u32>], rg: &[Vec<u32>]) -> (System, System) {
    let (a, b, c) = (component("a", 2), component("b", 3), component("c", 2));
    (system_from_rows("f", &[a, b.clone()], rf), system_from_rows("g", &[b, c], rg))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn implementations_commute_with_projection(seed in any::<u64>()) {
        let mut rng = rng(seed);
        let cs = vec![component("a", 2), component("b", 3), component("c", 2)];
        let n = rng.gen_range(1..=6);
        let f = random_system(&mut rng, "f", &cs, n);
        let k = rng.gen_range(1..=3);
        let sigma = random_implementation(&mut rng, &f, "g", &cs[..k], 2);
        let g = sigma.target();
        let keep: BTreeSet<String> = comps(g);
        for x in 0..f.len() {
            let mut s = snap(&f, x);
            s.retain(|c, _| keep.contains(c));
            prop_assert_eq!(s, snap(g, sigma.apply(x)));
        }
    }

    #[test]
    fn every_system_implements_its_component_subsets(rows in rows_strategy([2, 3], 6), mask in 1u8..4) {
        let (f, _) = pair(&rows, &[vec![0, 0]]);
        let chosen: Vec<Arc<Component>> =
            f.components().iter().enumerate().filter(|(i, _)| mask >> i & 1 == 1).map(|(_, c)| c.clone()).collect();
        let target = components_as_system(&chosen, &limits()).unwrap();
        let sigma = implementation_exists(&f, &target);
        prop_assert!(sigma.is_some());
        let proj = project(&f, &target.component_ids()).unwrap();
        let sigma = sigma.unwrap();
        for x in 0..f.len() {
            prop_assert_eq!(proj.at(x), &target.snapshot(sigma.apply(x)));
        }
    }

    #[test]
    fn tensors_are_free_compositions(rf in rows_strategy([2, 3], 5), rg in rows_strategy([3, 2], 5)) {
        let (f, g) = pair(&rf, &rg);
        let t = tensor(&f, &g, &limits()).unwrap();
        prop_assert_eq!(t.system.len(), compatible_pairs(&f, &g).unwrap().len());
        if t.system.is_empty() {
            return Ok(());
        }
        let w = CompositionWitness::new(t.left.clone(), t.right.clone()).unwrap();
        prop_assert!(is_free_composition(&w).unwrap().free);
        prop_assert!(systems_equivalent(&t.system, &naive_tensor(&f, &g)));
    }

    #[test]
    fn input_interfaces_make_tensors_runnable(rf in rows_strategy([2, 3], 6), rg in rows_strategy([3, 2], 4)) {
        let (f, g) = pair(&rf, &rg);
        let int = interface(&f, &g);
        if is_input_set(&f, &int).unwrap() && is_runnable(&g) {
            prop_assert!(is_runnable(&tensor(&f, &g, &limits()).unwrap().system));
        }
    }

    /// A composition `h` over (a, b, c) with its projections; whenever it is
    /// free, the factor map onto the tensor is onto.
    #[test]
    fn free_compositions_factor_surjectively(seed in any::<u64>()) {
        let mut rng = rng(seed);
        let cs = vec![component("a", 2), component("b", 2), component("c", 2)];
        let n = rng.gen_range(1..=6);
        let h = random_system(&mut rng, "h", &cs, n);
        let left = random_implementation(&mut rng, &h, "f", &cs[..2], 0);
        let right = random_implementation(&mut rng, &h, "g", &cs[1..], 0);
        let w = CompositionWitness::new(left, right).unwrap();
        let free = is_free_composition(&w).unwrap().free;
        match factor_through_tensor(&w, &limits()) {
            Ok(fact) => prop_assert!(free && fact.surjective),
            Err(e) => prop_assert!(!free && matches!(e, bsm::Error::Precondition(_))),
        }
    }

    /// Checked empirically; not a guaranteed law.
    #[test]
    fn tensor_is_associative_up_to_equivalence(seed in any::<u64>()) {
        let mut rng = rng(seed);
        let cs = vec![component("a", 2), component("b", 2), component("c", 2), component("d", 2)];
        let (n1, n2, n3) = (rng.gen_range(1..=4), rng.gen_range(1..=4), rng.gen_range(1..=4));
        let f = random_system(&mut rng, "f", &cs[..2], n1);
        let g = random_system(&mut rng, "g", &cs[1..3], n2);
        let h = random_system(&mut rng, "h", &cs[2..], n3);
        let lim = limits();
        let left = tensor(&tensor(&f, &g, &lim).unwrap().system, &h, &lim).unwrap().system;
        let right = tensor(&f, &tensor(&g, &h, &lim).unwrap().system, &lim).unwrap().system;
        prop_assert!(systems_equivalent(&left, &right));
    }

    #[test]
    fn implementation_exists_iff_image_inclusion(rf in rows_strategy([2, 2], 4), rg in rows_strategy([2, 2], 4), k in 1usize..=2) {
        let (a, b) = (component("a", 2), component("b", 2));
        let f = system_from_rows("f", &[a.clone(), b.clone()], &rf);
        let g_comps = [a, b];
        let g_rows: Vec<Vec<u32>> = rg.iter().map(|r| r[..k].to_vec()).collect();
        let g = system_from_rows("g", &g_comps[..k], &g_rows);
        // brute force over all |Beh(g)|^|Beh(f)| maps
        let (n, m) = (f.len(), g.len());
        let any_map = (0..m.pow(n as u32)).any(|code| {
            let map: Vec<usize> = (0..n).map(|i| code / m.pow(i as u32) % m).collect();
            validate_indices(&f, &g, map).unwrap().is_valid()
        });
        prop_assert_eq!(implementation_exists(&f, &g).is_some(), any_map);
    }
}

/// Every system over two components of size 2 with at most 4 behaviours,
/// up to row order, including the empty one.
fn small_systems(c1: &Arc<Component>, c2: &Arc<Component>, name: &str) -> Vec<System> {
    let points: Vec<Vec<u32>> = (0..2).flat_map(|a| (0..2).map(move |b| vec![a, b])).collect();
    let mut out = vec![System::new(name, vec![c1.clone(), c2.clone()], vec![]).unwrap()];
    let mut stack: Vec<Vec<usize>> = (0..4).map(|i| vec![i]).collect();
    while let Some(choice) = stack.pop() {
        let rows: Vec<Vec<u32>> = choice.iter().map(|&i| points[i].clone()).collect();
        out.push(system_from_rows(name, &[c1.clone(), c2.clone()], &rows));
        if choice.len() < 4 {
            for i in *choice.last().unwrap()..4 {
                stack.push([choice.clone(), vec![i]].concat());
            }
        }
    }
    out
}

#[test]
fn runnable_tensor_iff_compatible_pair_exhaustively() {
    let (a, b, c) = (component("a", 2), component("b", 2), component("c", 2));
    let fs = small_systems(&a, &b, "f");
    let gs = small_systems(&b, &c, "g");
    assert_eq!(fs.len(), 70);
    for f in &fs {
        for g in &gs {
            let t = tensor(f, g, &limits()).unwrap();
            assert_eq!(is_runnable(&t.system), !compatible_pairs(f, g).unwrap().is_empty());
        }
    }
}

#[test]
fn equivalence_is_an_equivalence_relation() {
    let mut rng = rng(11);
    let cs = vec![component("a", 2), component("b", 2)];
    let mut family = Vec::new();
    for i in 0..12 {
        let n = rng.gen_range(1..=3);
        let rows = random_rows(&mut rng, &cs, n);
        family.push(system_from_rows(&format!("s{i}_"), &cs, &rows));
        // the same image with duplicated and permuted rows
        let mut more = rows.clone();
        more.push(rows[0].clone());
        more.reverse();
        family.push(system_from_rows(&format!("t{i}_"), &cs, &more));
    }
    let eq = |x: &System, y: &System| systems_equivalent(x, y);
    for x in &family {
        assert!(eq(x, x));
        for y in &family {
            assert_eq!(eq(x, y), eq(y, x));
            for z in &family {
                if eq(x, y) && eq(y, z) {
                    assert!(eq(x, z));
                }
            }
        }
    }
    assert!(eq(&family[0], &family[1]));
}
