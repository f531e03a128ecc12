mod common;

use bsm::logic::{
    check_absoluteness, frame_rule, hm_equivalent, AbsolutenessMode, Evaluator, Formula, HmFlavour, Universe,
    Variable,
};
use common::*;
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::Rng;

/// Random formula with every connective, structural ones included.
fn structural(rng: &mut Rng8, vars: &[Variable], depth: usize) -> Formula {
    if depth == 0 || rng.gen_bool(0.25) {
        return match rng.gen_range(0..6) {
            0 => Formula::Top,
            _ => Formula::atom(vars.choose(rng).unwrap().clone()),
        };
    }
    let sub = |rng: &mut Rng8| structural(rng, vars, depth - 1);
    let (a, b) = (sub(rng), sub(rng));
    match rng.gen_range(0..10) {
        0 => Formula::not(a),
        1 => Formula::and(a, b),
        2 => Formula::or(a, b),
        3 => Formula::necessity(a),
        4 => Formula::star(a, b),
        5 => Formula::dir_star(a, b),
        6 => Formula::disj_star(a, b),
        7 => Formula::wand(a, b),
        8 => Formula::dir_wand(a, b),
        _ => Formula::implies(a, b),
    }
}

struct World {
    members: Vec<bsm::kernel::System>,
    universe: Universe,
    valuation: bsm::logic::Valuation,
    vars: Vec<Variable>,
}

fn world(rng: &mut Rng8) -> World {
    let cs = vec![component("a", 2), component("b", 2), component("c", 2)];
    let (n1, n2, n3) = (rng.gen_range(1..=3), rng.gen_range(1..=3), rng.gen_range(1..=2));
    let f = random_system(rng, "f", &cs[..2], n1);
    let g = random_system(rng, "g", &cs[1..], n2);
    let fa = random_implementation(rng, &f, "fa", &cs[..1], 0).target().clone();
    let c = random_system(rng, "cc", &cs[2..], n3);
    let universe = Universe::new(vec![f, g, fa, c], 1, &limits()).unwrap();
    let valuation = random_valuation(rng, &cs, 1);
    let vars = valuation.variables().cloned().collect();
    World { members: universe.members().to_vec(), universe, valuation, vars }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    /// The library evaluator against the naive semantics on every universe
    /// member where the formula is defined.
    #[test]
    fn evaluator_matches_naive_semantics(seed in any::<u64>()) {
        let mut rng = rng(seed);
        let w = world(&mut rng);
        let naive = Naive { valuation: &w.valuation, universe: &w.members };
        let mut ev = Evaluator::new(&w.valuation, Some(&w.universe));
        for _ in 0..6 {
            let phi = structural(&mut rng, &w.vars, 3);
            for m in &w.members {
                if !defined(m, &phi) {
                    prop_assert!(ev.truth(m, &phi).is_err());
                    continue;
                }
                let t = ev.truth(m, &phi).unwrap();
                for x in 0..m.len() {
                    prop_assert_eq!(t.contains(x), naive.holds(m, x, &phi), "{} at {} of {}", phi, x, m.name());
                }
            }
        }
    }

    #[test]
    fn restricted_stars_imply_star_and_box_is_global(seed in any::<u64>()) {
        let mut rng = rng(seed);
        let w = world(&mut rng);
        let mut ev = Evaluator::new(&w.valuation, Some(&w.universe));
        for _ in 0..6 {
            let (a, b) = (structural(&mut rng, &w.vars, 2), structural(&mut rng, &w.vars, 2));
            for m in &w.members {
                let star = ev.truth(m, &Formula::star(a.clone(), b.clone())).unwrap();
                let dir = ev.truth(m, &Formula::dir_star(a.clone(), b.clone())).unwrap();
                let disj = ev.truth(m, &Formula::disj_star(a.clone(), b.clone())).unwrap();
                prop_assert!(dir.is_subset(&star) && disj.is_subset(&star));
                if defined(m, &a) {
                    let boxed = ev.truth(m, &Formula::necessity(a.clone())).unwrap();
                    prop_assert!(boxed.count_ones(..) == 0 || boxed.count_ones(..) == m.len());
                }
            }
        }
    }

    #[test]
    fn derived_connectives_match_their_expansions(seed in any::<u64>()) {
        let mut rng = rng(seed);
        let w = world(&mut rng);
        let f = &w.members[0];
        let vars = vars_over(&w.valuation, &f.component_ids());
        let mut ev = Evaluator::new(&w.valuation, None);
        let top = ev.truth(f, &Formula::Top).unwrap();
        prop_assert_eq!(top.count_ones(..), f.len());
        for _ in 0..10 {
            let (a, b) = (random_formula(&mut rng, &vars, 2, true), random_formula(&mut rng, &vars, 2, true));
            let ta = ev.truth(f, &a).unwrap();
            let tb = ev.truth(f, &b).unwrap();
            let or = ev.truth(f, &Formula::or(a.clone(), b.clone())).unwrap();
            let imp = ev.truth(f, &Formula::implies(a.clone(), b.clone())).unwrap();
            for x in 0..f.len() {
                prop_assert_eq!(or.contains(x), ta.contains(x) || tb.contains(x));
                prop_assert_eq!(imp.contains(x), !ta.contains(x) || tb.contains(x));
            }
        }
    }

    #[test]
    fn absoluteness_along_random_implementations(seed in any::<u64>()) {
        let mut rng = rng(seed);
        let cs = vec![component("a", 2), component("b", 3)];
        let n = rng.gen_range(1..=5);
        let f = random_system(&mut rng, "f", &cs, n);
        let sigma = random_implementation(&mut rng, &f, "g", &cs[1..], 2);
        let v = random_valuation(&mut rng, &cs, 2);
        let vars = vars_over(&v, &sigma.target().component_ids());
        for _ in 0..10 {
            let alpha = random_formula(&mut rng, &vars, 3, false);
            prop_assert!(check_absoluteness(&sigma, &v, &alpha, AbsolutenessMode::Biconditional).unwrap().holds);
            let boxed = random_formula(&mut rng, &vars, 3, true);
            match check_absoluteness(&sigma, &v, &boxed, AbsolutenessMode::Directed) {
                Ok(verdict) => prop_assert!(verdict.holds),
                Err(e) => prop_assert!(matches!(e, bsm::Error::Precondition(_))),
            }
        }
    }

    /// Types decide agreement on the characteristic formulas.
    #[test]
    fn hm_flavours_match_characteristic_formulas(seed in any::<u64>()) {
        let mut rng = rng(seed);
        let cs = vec![component("a", 2), component("b", 2)];
        let (n1, n2) = (rng.gen_range(1..=3), rng.gen_range(1..=3));
        let f = random_system(&mut rng, "f", &cs, n1);
        let g = random_system(&mut rng, "g", &cs, n2);
        let v = random_valuation(&mut rng, &cs, 2);
        let vars: Vec<Variable> = v.variables().cloned().collect();
        let naive = Naive { valuation: &v, universe: &[] };
        let (tf, tg) = (naive_types(&f, &v, &vars), naive_types(&g, &v, &vars));
        let ds: Vec<_> = tf.iter().chain(&tg).cloned().collect();
        let poss = |s: &bsm::kernel::System, d| {
            naive.holds(s, 0, &Formula::not(Formula::necessity(Formula::not(char_formula(d, &vars)))))
        };
        for x in 0..f.len() {
            for y in 0..g.len() {
                let elem = ds.iter().all(|d| {
                    let phi = char_formula(d, &vars);
                    naive.holds(&f, x, &phi) == naive.holds(&g, y, &phi)
                });
                let boxed = elem && ds.iter().all(|d| poss(&f, d) == poss(&g, d));
                let (bx, by) = (f.behaviour(x), g.behaviour(y));
                prop_assert_eq!(hm_equivalent(&f, &g, bx, by, &v, HmFlavour::Elementary).unwrap(), elem);
                prop_assert_eq!(hm_equivalent(&f, &g, bx, by, &v, HmFlavour::Boxed).unwrap(), boxed);
            }
        }
    }

    /// With an empty interface every subformula has the same truth value at
    /// `(x, y)` in `g ⊗ h` as at `y` in `h`, whether or not `h ⊨ β`.
    #[test]
    fn frame_bridging_holds_for_every_subformula(seed in any::<u64>()) {
        let mut rng = rng(seed);
        let cs = vec![component("a", 2), component("b", 2), component("c", 2)];
        let (n1, n2) = (rng.gen_range(1..=3), rng.gen_range(1..=4));
        let g = random_system(&mut rng, "g", &cs[..1], n1);
        let h = random_system(&mut rng, "h", &cs[1..], n2);
        let v = random_valuation(&mut rng, &cs, 2);
        let vars = vars_over(&v, &h.component_ids());
        let beta = random_formula(&mut rng, &vars, 3, true);
        let t = naive_tensor(&g, &h);
        let naive = Naive { valuation: &v, universe: &[] };
        for delta in beta.subformulas() {
            for x in 0..g.len() {
                for y in 0..h.len() {
                    let z = x * h.len() + y;
                    prop_assert_eq!(naive.holds(&t, z, delta), naive.holds(&h, y, delta));
                }
            }
        }
        let rep = frame_rule(&g, &h, &v, &beta, &limits(), true).unwrap();
        if let Some(audit) = rep.audit {
            prop_assert_eq!(audit.bridging_failures, Some(0));
            prop_assert!(audit.agrees);
        }
    }
}

#[test]
fn equal_types_but_different_type_sets() {
    let cs = vec![component("a", 2)];
    let f = system_from_rows("f", &cs, &[vec![0], vec![1]]);
    let g = system_from_rows("g", &cs, &[vec![0]]);
    let mut v = bsm::logic::Valuation::new();
    v.insert(&cs[0], "p", &[cs[0].behaviour(1).clone()]).unwrap();
    let (x, y) = (f.behaviour(0), g.behaviour(0));
    assert!(hm_equivalent(&f, &g, x, y, &v, HmFlavour::Elementary).unwrap());
    assert!(!hm_equivalent(&f, &g, x, y, &v, HmFlavour::Boxed).unwrap());
    assert!(hm_equivalent(&f, &f, x, x, &v, HmFlavour::Boxed).unwrap());
}
