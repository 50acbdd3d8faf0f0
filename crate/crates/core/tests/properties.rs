mod common;

use std::collections::BTreeSet;

use common::*;
use hypermon::analysis::{check_reflexivity, check_symmetry, check_transitivity, DominanceCheck, minimize_insert};
use hypermon::engine::{
    lockstep_events, run_offline_universal, run_online_sequential, run_parallel_online, SequentialOptions, Verdict,
};
use hypermon::formula::{parse_formula, IndexedAtom, LtlExpr, QuantifiedFormula};
use hypermon::ltl_engine::{build_fsm_monitor, eval_on_lasso, is_satisfiable, is_valid, FsmVerdict, Satisfiability};
use hypermon::monitor::MonitorTemplate;
use hypermon::trace::{project, sequential_events, zip_tuple, Trace};
use hypermon::triestore::{run_trie_parallel, run_trie_sequential};
use proptest::prelude::*;
use rand::Rng;

/// `X^i` of the literal description of each letter, restricted to `atoms`.
fn prefix_constraint(letters: &[BTreeSet<IndexedAtom>], atoms: &BTreeSet<IndexedAtom>) -> LtlExpr {
    let mut out = LtlExpr::True;
    for (i, letter) in letters.iter().enumerate() {
        let mut lit = LtlExpr::all(atoms.iter().map(|a| {
            let e = LtlExpr::Atom(a.clone());
            if letter.contains(a) {
                e
            } else {
                LtlExpr::not(e)
            }
        }));
        for _ in 0..i {
            lit = LtlExpr::next(lit);
        }
        out = LtlExpr::and(out, lit);
    }
    out
}

/// Some infinite continuation of the zipped tuple satisfies the body.
fn extendable(f: &QuantifiedFormula, tuple: &[&Trace]) -> bool {
    let w = zip_tuple(tuple, &f.vars()).unwrap();
    let c = prefix_constraint(&w.letters, &f.body.atoms());
    is_satisfiable(&LtlExpr::and(c, f.body.clone())).unwrap().is_sat()
}

#[test]
fn confman_example_tuple_accepted() {
    let f = phi(CONFMAN);
    let tpl = MonitorTemplate::from_formula(&f).unwrap();
    let x = t(&["-", "s", "-", "-", "-"]);
    let y = t(&["pc", "-", "v", "-", "-"]);
    assert!(tpl.accepts_tuple(&[&x, &y]));
    assert!(extendable(&f, &[&x, &y]));
    // A PC member who never sees the submission.
    let z = t(&["pc", "-", "-", "-", "-"]);
    assert!(!tpl.accepts_tuple(&[&x, &z]));
    assert!(!extendable(&f, &[&x, &z]));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn formula_display_round_trips(seed: u64) {
        let f = random_forall(&mut rng(seed), 2, &["a", "b"], 4);
        prop_assert_eq!(parse_formula(&f.to_string()).unwrap(), f);
    }

    #[test]
    fn desugar_is_idempotent_and_core(seed: u64) {
        let f = random_forall(&mut rng(seed), 2, &["a", "b"], 4);
        let d = f.body.desugar();
        prop_assert!(d.is_core());
        prop_assert_eq!(d.desugar(), d);
    }

    #[test]
    fn zip_then_project_truncates(seed: u64) {
        let mut r = rng(seed);
        let f = random_forall(&mut r, 3, &["a", "b"], 1);
        let tuple = random_traces(&mut r, 3, &["a", "b", "c"], 6);
        let refs: Vec<&Trace> = tuple.iter().collect();
        let w = zip_tuple(&refs, &f.vars()).unwrap();
        let m = tuple.iter().map(Trace::len).min().unwrap();
        prop_assert_eq!(w.len(), m);
        for (v, t) in f.vars().iter().zip(&tuple) {
            let back: Vec<_> = w.letters.iter().map(|l| project(l, v)).collect();
            prop_assert_eq!(&back[..], &t.steps[..m]);
        }
    }

    #[test]
    fn sat_witness_satisfies_and_validity_is_dual(seed: u64) {
        let f = random_forall(&mut rng(seed), 2, &["a", "b"], 4);
        let body = f.body.desugar();
        match is_satisfiable(&body).unwrap() {
            Satisfiability::Sat(w) => prop_assert!(eval_on_lasso(&body, &w)),
            Satisfiability::Unsat => prop_assert!(is_valid(&LtlExpr::not(body.clone())).unwrap()),
        }
        let neg = LtlExpr::not(body.clone());
        prop_assert_eq!(is_valid(&body).unwrap(), !is_satisfiable(&neg).unwrap().is_sat());
    }

    #[test]
    fn fsm_verdicts_match_prefix_satisfiability(seed: u64) {
        let mut r = rng(seed);
        let f = random_forall(&mut r, 1, &["a", "b"], 3);
        let body = f.body.desugar();
        let fsm = build_fsm_monitor(&body).unwrap();
        let atoms: BTreeSet<IndexedAtom> = fsm.alphabet().iter().cloned().collect();
        let len = r.gen_range(0..5);
        let letters: Vec<u64> = (0..len).map(|_| r.gen_range(0..fsm.letter_count() as u64)).collect();
        let mut q = fsm.initial();
        for &l in &letters {
            q = fsm.step(q, l);
        }
        let word: Vec<_> = letters.iter().map(|&l| fsm.decode(l)).collect();
        let c = prefix_constraint(&word, &atoms);
        let good_possible = is_satisfiable(&LtlExpr::and(c.clone(), body.clone())).unwrap().is_sat();
        let bad_possible = is_satisfiable(&LtlExpr::and(c, LtlExpr::not(body))).unwrap().is_sat();
        prop_assert_eq!(fsm.verdict(q) == FsmVerdict::Bottom, !good_possible);
        prop_assert_eq!(fsm.verdict(q) == FsmVerdict::Top, !bad_possible);
    }

    #[test]
    fn template_rejection_means_bad_prefix(seed: u64) {
        let mut r = rng(seed);
        let f = random_forall(&mut r, 2, &["a", "b"], 4);
        let tpl = MonitorTemplate::from_formula(&f).unwrap();
        let tuple = random_traces(&mut r, 2, &["a", "b"], 5);
        let refs: Vec<&Trace> = tuple.iter().collect();
        if !tpl.accepts_tuple(&refs) {
            prop_assert!(!extendable(&f, &refs));
        }
    }

    #[test]
    fn template_acceptance_is_exact(seed: u64) {
        let mut r = rng(seed);
        let f = random_forall(&mut r, 2, &["a", "b"], 3);
        let tpl = MonitorTemplate::from_formula(&f).unwrap();
        let tuple = random_traces(&mut r, 2, &["a", "b"], 4);
        let refs: Vec<&Trace> = tuple.iter().collect();
        // Rejection happens on a letter, so a zero-length run always accepts.
        if tuple.iter().any(|t| t.is_empty()) {
            prop_assert!(tpl.accepts_tuple(&refs));
        } else {
            prop_assert_eq!(tpl.accepts_tuple(&refs), extendable(&f, &refs), "{} {:?}", f, tuple);
        }
    }

    #[test]
    fn relation_properties_are_sound(seed: u64) {
        let mut r = rng(seed);
        let f = random_forall(&mut r, 2, &["a"], 3);
        let tpl = MonitorTemplate::from_formula(&f).unwrap();
        let len = r.gen_range(0..6);
        let ts: Vec<Trace> = (0..3)
            .map(|id| Trace::new(id, (0..len).map(|_| random_step(&mut r, &["a"])).collect()))
            .collect();
        let acc = |i: usize, j: usize| tpl.accepts_tuple(&[&ts[i], &ts[j]]);
        if check_symmetry(&f).unwrap() {
            prop_assert_eq!(acc(0, 1), acc(1, 0));
        }
        if check_reflexivity(&f).unwrap() {
            prop_assert!(acc(0, 0));
        }
        if check_transitivity(&f).unwrap() == Some(true) && acc(0, 1) && acc(1, 2) {
            prop_assert!(acc(0, 2));
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(400))]

    #[test]
    fn online_offline_and_parallel_agree(seed: u64) {
        let mut r = rng(seed);
        let f = random_forall(&mut r, 2, &["a"], 3);
        let traces = random_traces(&mut r, 5, &["a"], 4);
        let online = run_online_sequential(&f, &sequential_events(&traces), SequentialOptions::default()).unwrap();
        let offline = run_offline_universal(&f, &traces, 2).unwrap();
        prop_assert_eq!(class(&online.verdict), class(&offline.verdict));
        let lock = lockstep_events(&traces);
        let par = run_parallel_online(&f, &lock).unwrap();
        let trie = run_trie_parallel(&f, &lock).unwrap();
        prop_assert_eq!(class(&par.verdict), class(&offline.verdict));
        prop_assert_eq!(class(&trie.verdict), class(&offline.verdict));
    }

    #[test]
    fn optimizations_are_transparent(seed: u64) {
        let mut r = rng(seed);
        let f = random_forall(&mut r, 2, &["a", "b"], 3);
        let traces = random_traces(&mut r, 8, &["a", "b"], 4);
        let events = sequential_events(&traces);
        let base = run_online_sequential(&f, &events, SequentialOptions::default()).unwrap();
        for (spec_analysis, trace_analysis) in [(true, false), (false, true), (true, true)] {
            let opts = SequentialOptions { spec_analysis, trace_analysis, ..Default::default() };
            let out = run_online_sequential(&f, &events, opts).unwrap();
            prop_assert_eq!(class(&out.verdict), class(&base.verdict));
        }
        for spec_analysis in [false, true] {
            let opts = SequentialOptions { spec_analysis, ..Default::default() };
            let out = run_trie_sequential(&f, &events, opts).unwrap();
            prop_assert_eq!(class(&out.verdict), class(&base.verdict));
        }
    }

    #[test]
    fn witnesses_are_rejected_and_accounting_holds(seed: u64) {
        let mut r = rng(seed);
        let f = random_forall(&mut r, 2, &["a"], 3);
        let tpl = MonitorTemplate::from_formula(&f).unwrap();
        let traces = random_traces(&mut r, 6, &["a"], 4);
        let events = sequential_events(&traces);
        let lock = lockstep_events(&traces);
        let opts = SequentialOptions { trace_analysis: true, spec_analysis: true, ..Default::default() };
        let outcomes = [
            run_online_sequential(&f, &events, opts).unwrap(),
            run_trie_sequential(&f, &events, SequentialOptions::default()).unwrap(),
            run_parallel_online(&f, &lock).unwrap(),
            run_trie_parallel(&f, &lock).unwrap(),
        ];
        for out in &outcomes {
            if let Verdict::Violation(w) = &out.verdict {
                prop_assert!(!tpl.accepts_tuple(&w.traces()));
            }
        }
        prop_assert!(outcomes[0].rows.iter().all(|s| s.accounting_holds()));
        prop_assert!(outcomes[1].rows.iter().all(|s| s.instances_live <= s.tuples_checked));
    }

    #[test]
    fn minimized_sets_stay_minimal(seed: u64) {
        let mut r = rng(seed);
        let f = random_forall(&mut r, 2, &["a"], 3);
        let check = DominanceCheck::new(&f).unwrap();
        let mut set = Vec::new();
        for t in random_traces(&mut r, 15, &["a"], 4) {
            minimize_insert(&mut set, t, &check);
            for (i, x) in set.iter().enumerate() {
                for (j, y) in set.iter().enumerate() {
                    prop_assert!(i == j || !check.dominates(x, y));
                }
            }
        }
    }
}
