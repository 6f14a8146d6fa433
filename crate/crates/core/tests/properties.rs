//! Property suites: grammar round trips, closure algebra, derivation
//! soundness against an independent oracle, activation monotonicity, warrant
//! exclusivity, and the numeric invariants of the ranking subsystem.

mod support;

use std::collections::BTreeSet;

use proptest::prelude::*;

use argus_core::cbr::{
    self, graph_similarity, mrr, train_bagged_trees, FeatureVector, Label, SemanticGraph,
    TrainConfig,
};
use argus_core::derivation::{derive, Argument, SearchBounds};
use argus_core::kb::{strict_closure, Fact, KnowledgeBase, Literal, Rule, RuleKind, Term};
use argus_core::specificity::{
    activates, more_specific_poole, relevant_universe, specificity_preorder, warranted,
    SpecificityConfig, SpecificityError, Verdict,
};

// ---------------------------------------------------------------------------
// Strategies for the rule language.
// ---------------------------------------------------------------------------

const PREDICATES: [&str; 4] = ["p", "q", "r", "s"];
const CONSTANTS: [&str; 3] = ["a", "b", "c"];
const VARIABLES: [&str; 2] = ["X", "Y"];

fn arb_ground_literal() -> impl Strategy<Value = Literal> {
    (
        any::<bool>(),
        0..PREDICATES.len(),
        prop::collection::vec(0..CONSTANTS.len(), 0..=2),
    )
        .prop_map(|(negated, pred, args)| Literal {
            negated,
            predicate: PREDICATES[pred].to_string(),
            args: args
                .into_iter()
                .map(|c| Term::Constant(CONSTANTS[c].to_string()))
                .collect(),
        })
}

// arguments encoded as indices: even = constant, odd = variable
fn arb_body_literal() -> impl Strategy<Value = Literal> {
    (
        any::<bool>(),
        0..PREDICATES.len(),
        prop::collection::vec(0..6usize, 1..=2),
    )
        .prop_map(|(negated, pred, args)| Literal {
            negated,
            predicate: PREDICATES[pred].to_string(),
            args: args
                .into_iter()
                .map(|i| {
                    if i % 2 == 0 {
                        Term::Constant(CONSTANTS[(i / 2) % CONSTANTS.len()].to_string())
                    } else {
                        Term::Variable(VARIABLES[(i / 2) % VARIABLES.len()].to_string())
                    }
                })
                .collect(),
        })
}

fn arb_rule() -> impl Strategy<Value = Rule> {
    (
        prop::collection::vec(arb_body_literal(), 1..=3),
        any::<bool>(),
        0..PREDICATES.len(),
        prop::collection::vec(0..8usize, 0..=2),
        any::<bool>(),
    )
        .prop_map(|(body, negated, pred, head_args, strict)| {
            let body_vars: Vec<&str> = body
                .iter()
                .flat_map(|l| l.variables())
                .collect::<BTreeSet<_>>()
                .into_iter()
                .collect();
            let args = head_args
                .into_iter()
                .map(|i| {
                    if i % 2 == 1 && !body_vars.is_empty() {
                        Term::Variable(body_vars[(i / 2) % body_vars.len()].to_string())
                    } else {
                        Term::Constant(CONSTANTS[(i / 2) % CONSTANTS.len()].to_string())
                    }
                })
                .collect();
            Rule::new(
                if strict {
                    RuleKind::Strict
                } else {
                    RuleKind::Defeasible
                },
                Literal {
                    negated,
                    predicate: PREDICATES[pred].to_string(),
                    args,
                },
                body,
            )
        })
}

fn arb_kb() -> impl Strategy<Value = KnowledgeBase> {
    (
        prop::collection::vec(arb_ground_literal(), 0..5),
        prop::collection::vec(arb_rule(), 0..6),
    )
        .prop_map(|(facts, rules)| {
            let mut kb = KnowledgeBase::new();
            for literal in facts {
                kb.add_fact(Fact::new(literal).expect("ground by construction"));
            }
            for rule in rules {
                kb.add_rule(rule).expect("range restricted by construction");
            }
            kb
        })
}

proptest! {
    #[test]
    fn print_parse_round_trip(kb in arb_kb()) {
        let reparsed = KnowledgeBase::parse(&kb.to_text()).unwrap();
        prop_assert_eq!(reparsed, kb);
    }

    #[test]
    fn strict_closure_is_monotone(
        kb in arb_kb(),
        premises in prop::collection::btree_set(arb_ground_literal(), 0..6),
        extra in prop::collection::btree_set(arb_ground_literal(), 0..3),
    ) {
        let ground = match kb.ground_with(&CONSTANTS.iter().map(|c| c.to_string()).collect()) {
            Ok(g) => g,
            Err(_) => return Ok(()),
        };
        let rules: Vec<Rule> = ground.rules().cloned().collect();
        let larger: BTreeSet<Literal> = premises.union(&extra).cloned().collect();
        let (small_closure, _) = strict_closure(&premises, rules.iter());
        let (large_closure, _) = strict_closure(&larger, rules.iter());
        prop_assert!(small_closure.is_subset(&large_closure));
    }

    #[test]
    fn strict_closure_is_idempotent(
        kb in arb_kb(),
        premises in prop::collection::btree_set(arb_ground_literal(), 0..6),
    ) {
        let ground = match kb.ground_with(&CONSTANTS.iter().map(|c| c.to_string()).collect()) {
            Ok(g) => g,
            Err(_) => return Ok(()),
        };
        let rules: Vec<Rule> = ground.rules().cloned().collect();
        let (once, _) = strict_closure(&premises, rules.iter());
        let (twice, _) = strict_closure(&once, rules.iter());
        prop_assert_eq!(once, twice);
    }

    #[test]
    fn grounding_count_follows_the_universe_size(
        var_counts in prop::collection::vec(0..=2usize, 1..=4),
        n_constants in 1..=3usize,
    ) {
        // rule i gets its own predicates, so instances never collide
        let mut kb = KnowledgeBase::new();
        for c in &CONSTANTS[..n_constants] {
            kb.add_fact(Fact::new(Literal::positive("dom", vec![Term::Constant(c.to_string())])).unwrap());
        }
        for (i, &vars) in var_counts.iter().enumerate() {
            let args: Vec<Term> = (0..vars)
                .map(|v| Term::Variable(format!("V{v}")))
                .collect();
            let head_args = if args.is_empty() {
                vec![Term::Constant(CONSTANTS[0].to_string())]
            } else {
                args.clone()
            };
            kb.add_rule(Rule::new(
                RuleKind::Strict,
                Literal::positive(format!("h{i}"), head_args.clone()),
                vec![Literal::positive(format!("b{i}"), head_args)],
            ))
            .unwrap();
        }
        let expected: usize = var_counts.iter().map(|&v| n_constants.pow(v as u32)).sum();
        let ground = kb.ground().unwrap();
        prop_assert_eq!(ground.strict_count(), expected);
    }

    #[test]
    fn mrr_is_monotone_in_any_single_rank(
        ranks in prop::collection::vec(prop::option::of(1..=20usize), 1..10),
        index in 0..10usize,
        better in 1..=20usize,
    ) {
        let index = index % ranks.len();
        let mut improved = ranks.clone();
        improved[index] = match ranks[index] {
            None => Some(better),
            Some(r) => Some(better.min(r)),
        };
        prop_assert!(mrr::<f64>(&improved) >= mrr::<f64>(&ranks));
    }

    #[test]
    fn graph_similarity_is_symmetric_bounded_and_reflexive(
        nodes_a in prop::collection::vec(0..5usize, 0..6),
        nodes_b in prop::collection::vec(0..5usize, 0..6),
        edge_picks in prop::collection::vec((0..6usize, 0..6usize), 0..4),
    ) {
        let labels = ["n0", "n1", "n2", "n3", "n4"];
        let build = |picks: &[usize], edges: bool| {
            let nodes: Vec<String> = picks.iter().map(|&i| labels[i].to_string()).collect();
            let edge_list = if edges && nodes.len() >= 2 {
                edge_picks
                    .iter()
                    .map(|(s, t)| {
                        (nodes[s % nodes.len()].clone(), "rel".to_string(), nodes[t % nodes.len()].clone())
                    })
                    .collect()
            } else {
                Vec::new()
            };
            SemanticGraph { nodes, edges: edge_list }
        };
        let a = build(&nodes_a, true);
        let b = build(&nodes_b, false);
        let ab: f64 = graph_similarity(&a, &b);
        let ba: f64 = graph_similarity(&b, &a);
        prop_assert_eq!(ab, ba);
        prop_assert!((0.0..=1.0).contains(&ab));
        let aa: f64 = graph_similarity(&a, &a);
        prop_assert_eq!(aa, 1.0);
    }

    #[test]
    fn rank_returns_a_permutation_in_descending_order(
        values in prop::collection::vec((0.0f64..1.0, 0.0f64..1.0), 1..20),
    ) {
        let samples: Vec<(FeatureVector<f64>, Label)> = (0..10)
            .map(|i| {
                let x = if i % 2 == 0 { 0.9 } else { 0.1 };
                (
                    FeatureVector::from_pairs(&[("x", x + i as f64 * 0.001), ("y", 0.5)]).unwrap(),
                    if i % 2 == 0 { Label::Correct } else { Label::Incorrect },
                )
            })
            .collect();
        let ranker = train_bagged_trees(&samples, &TrainConfig::default()).unwrap().ranker;
        let candidates: Vec<FeatureVector<f64>> = values
            .iter()
            .map(|(x, y)| FeatureVector::from_pairs(&[("x", *x), ("y", *y)]).unwrap())
            .collect();
        let ranked = cbr::rank(&ranker, &candidates).unwrap();
        let mut indices: Vec<usize> = ranked.iter().map(|r| r.index).collect();
        indices.sort_unstable();
        prop_assert_eq!(indices, (0..candidates.len()).collect::<Vec<_>>());
        for pair in ranked.windows(2) {
            prop_assert!(pair[0].score >= pair[1].score);
            prop_assert!((0.0..=1.0).contains(&pair[0].score));
        }
    }
}

// ---------------------------------------------------------------------------
// Seeded-loop properties against the independent oracles.
// ---------------------------------------------------------------------------

#[test]
fn derive_agrees_with_the_forward_closure_oracle() {
    let mut rng = support::seeded(0xD0_01);
    let mut checked = 0;
    for _ in 0..150 {
        let kb = support::random_ground_kb(&mut rng, 4, 10);
        let rules: Vec<Rule> = kb.rules().cloned().collect();
        let closure = support::closure_oracle(&kb.fact_literals(), &rules);
        let bounds = SearchBounds {
            max_depth: 32,
            max_trees: 4096,
        };
        for goal in support::literal_pool(4) {
            let trees = match derive(&kb, &goal, &bounds) {
                Ok(trees) => trees,
                Err(_) => continue,
            };
            assert_eq!(
                !trees.is_empty(),
                closure.contains(&goal),
                "derive disagrees with the closure oracle on {goal} for\n{kb}"
            );
            for tree in &trees {
                assert_eq!(tree.root, goal);
                support::assert_tree_sound(tree, &kb);
                assert!(
                    tree.defeasible_leaf_literals()
                        .is_subset(&tree.fact_leaves()),
                    "defeasible leaves must be fact leaves"
                );
            }
            checked += 1;
        }
    }
    assert!(checked > 500, "only {checked} goals checked");
}

#[test]
fn derivable_strict_only_implies_derivable_with_defeasible() {
    use argus_core::derivation::derivable;
    let mut rng = support::seeded(0xD0_02);
    for _ in 0..100 {
        let kb = support::random_ground_kb(&mut rng, 4, 10);
        let premises = kb.fact_literals();
        for goal in support::literal_pool(4) {
            if derivable(kb.rules(), &premises, &goal, false) {
                assert!(derivable(kb.rules(), &premises, &goal, true));
            }
        }
    }
}

#[test]
fn activation_is_monotone_in_the_activation_set() {
    use rand::Rng;
    let mut rng = support::seeded(0xAC_01);
    let mut checked = 0;
    'outer: for _ in 0..200 {
        let kb = support::random_ground_kb(&mut rng, 3, 8);
        let Some(args) = support::arguments_of(&kb, 3) else {
            continue;
        };
        for arg in args.iter().filter(|a| a.uses_defeasible()).take(3) {
            let universe: Vec<Literal> = relevant_universe([arg]).literals().to_vec();
            if universe.len() > 10 {
                continue 'outer;
            }
            for _ in 0..20 {
                let large_mask: u64 = rng.gen_range(0..(1u64 << universe.len()));
                let small_mask = large_mask & rng.gen_range(0..(1u64 << universe.len()));
                let to_set = |mask: u64| -> BTreeSet<Literal> {
                    (0..universe.len())
                        .filter(|i| mask & (1 << i) != 0)
                        .map(|i| universe[i].clone())
                        .collect()
                };
                let small = to_set(small_mask);
                let large = to_set(large_mask);
                let (Ok(act_small), Ok(act_large)) =
                    (activates(&kb, &small, arg), activates(&kb, &large, arg))
                else {
                    continue; // inconsistent candidate
                };
                if act_small {
                    assert!(
                        act_large,
                        "activation not monotone: {small:?} activates but {large:?} does not"
                    );
                }
                checked += 1;
            }
        }
    }
    assert!(checked > 300, "only {checked} subset pairs checked");
}

#[test]
fn warrant_is_exclusive_and_complement_consistent() {
    let mut rng = support::seeded(0x7A_01);
    let config = SpecificityConfig::default();
    let mut checked = 0;
    for _ in 0..150 {
        let kb = support::random_ground_kb(&mut rng, 3, 8);
        for goal in support::literal_pool(3) {
            let direct = match warranted(&kb, &goal, &config) {
                Ok(outcome) => outcome,
                Err(SpecificityError::StrictInconsistency { .. }) => break,
                Err(_) => continue,
            };
            let complement = warranted(&kb, &goal.complement(), &config).unwrap();
            assert_eq!(
                direct.verdict == Verdict::Yes,
                complement.verdict == Verdict::No,
                "asymmetric warrant for {goal} in\n{kb}"
            );
            assert_eq!(
                direct.verdict == Verdict::No,
                complement.verdict == Verdict::Yes
            );
            checked += 1;
        }
    }
    assert!(checked > 100, "only {checked} queries checked");
}

#[test]
fn classical_reduction_without_defeasible_rules() {
    // with no defeasible rules, warranted(q) == yes iff q is in the strict closure
    let mut rng = support::seeded(0x7A_02);
    let config = SpecificityConfig::default();
    let mut checked = 0;
    for _ in 0..150 {
        let kb = support::random_ground_kb(&mut rng, 3, 8);
        if kb.defeasible_count() > 0 {
            continue;
        }
        let rules: Vec<Rule> = kb.rules().cloned().collect();
        let (closure, consistent) = strict_closure(&kb.fact_literals(), rules.iter());
        if !consistent {
            continue;
        }
        for goal in support::literal_pool(3) {
            let outcome = warranted(&kb, &goal, &config).unwrap();
            assert_eq!(
                outcome.verdict == Verdict::Yes,
                closure.contains(&goal),
                "classical reduction failed for {goal} in\n{kb}"
            );
            checked += 1;
        }
    }
    assert!(checked > 50, "only {checked} classical queries checked");
}

#[test]
fn preorder_stays_reflexive_and_transitive_on_random_instances() {
    let mut rng = support::seeded(0x5E_01);
    let config = SpecificityConfig::default();
    let mut instances = 0;
    for _ in 0..60 {
        let kb = support::random_ground_kb(&mut rng, 3, 8);
        let Some(args) = support::arguments_of(&kb, 3) else {
            continue;
        };
        let args: Vec<Argument> = args.into_iter().take(5).collect();
        if args.is_empty() {
            continue;
        }
        let matrix = match specificity_preorder(&kb, &args, &config) {
            Ok(matrix) => matrix,
            Err(_) => continue,
        };
        let n = args.len();
        for i in 0..n {
            assert!(matrix.at_least_as_specific(i, i));
            for j in 0..n {
                for k in 0..n {
                    if matrix.at_least_as_specific(i, j) && matrix.at_least_as_specific(j, k) {
                        assert!(matrix.at_least_as_specific(i, k));
                    }
                }
            }
        }
        instances += 1;
    }
    assert!(instances > 30, "only {instances} matrices checked");
}

// Raw pairwise specificity (with per-pair universes) is documented as *not*
// a quasi-ordering. This searches for a non-transitivity witness and reports
// the outcome without asserting it: exploratory, not an invariant.
#[test]
fn exploratory_search_for_poole_non_transitivity() {
    let mut rng = support::seeded(0x90_01);
    let config = SpecificityConfig::default();
    let mut witness = None;
    'search: for _ in 0..250 {
        let kb = support::random_ground_kb(&mut rng, 3, 8);
        let Some(args) = support::arguments_of(&kb, 3) else {
            continue;
        };
        let defeasible: Vec<Argument> = args
            .into_iter()
            .filter(Argument::uses_defeasible)
            .take(6)
            .collect();
        let n = defeasible.len();
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    if i == j || j == k || i == k {
                        continue;
                    }
                    let (a, b, c) = (&defeasible[i], &defeasible[j], &defeasible[k]);
                    let uab = relevant_universe([a, b]);
                    let ubc = relevant_universe([b, c]);
                    let uac = relevant_universe([a, c]);
                    let (Ok(ab), Ok(bc), Ok(ac)) = (
                        more_specific_poole(&kb, a, b, &uab, &config),
                        more_specific_poole(&kb, b, c, &ubc, &config),
                        more_specific_poole(&kb, a, c, &uac, &config),
                    ) else {
                        continue;
                    };
                    if ab && bc && !ac {
                        witness = Some((
                            a.conclusion().clone(),
                            b.conclusion().clone(),
                            c.conclusion().clone(),
                        ));
                        break 'search;
                    }
                }
            }
        }
    }
    match witness {
        Some((a, b, c)) => {
            println!("non-transitivity witness found: {a} >= {b} >= {c} but not {a} >= {c}")
        }
        None => println!("no non-transitivity witness in this search budget"),
    }
}

#[test]
fn valid_formulas_hold_in_random_serial_models() {
    use argus_core::deontic::{kd_valid, KripkeModel};
    use rand::Rng;
    use std::collections::{BTreeMap, BTreeSet};

    let mut rng = support::seeded(0xDA_02);
    let atoms = ["p", "q", "r"];
    let mut pairs_checked = 0;
    while pairs_checked < 1000 {
        // validity-schema instances over random content
        let mut ops = 0;
        let f = support::random_modal_formula(&mut rng, 3, &mut ops, 0);
        let mut ops = 0;
        let g = support::random_modal_formula(&mut rng, 3, &mut ops, 0);
        let axiom_d = f.clone().obligatory().implies(f.clone().permitted());
        let axiom_k = f
            .clone()
            .implies(g.clone())
            .obligatory()
            .implies(f.clone().obligatory().implies(g.clone().obligatory()));
        for formula in [axiom_d, axiom_k] {
            assert!(
                kd_valid(&formula),
                "schema instance must be valid: {formula}"
            );
            // a random serial model: random edges plus a self-loop fallback
            let n = rng.gen_range(1..=4usize);
            let worlds: Vec<String> = (0..n).map(|i| format!("w{i}")).collect();
            let mut accessibility: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
            for w in &worlds {
                let mut successors: BTreeSet<String> = worlds
                    .iter()
                    .filter(|_| rng.gen_bool(0.4))
                    .cloned()
                    .collect();
                if successors.is_empty() {
                    successors.insert(w.clone());
                }
                accessibility.insert(w.clone(), successors);
            }
            let mut valuation: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
            for w in &worlds {
                valuation.insert(
                    w.clone(),
                    atoms
                        .iter()
                        .filter(|_| rng.gen_bool(0.5))
                        .map(|a| a.to_string())
                        .collect(),
                );
            }
            let model = KripkeModel::new(worlds.clone(), accessibility, valuation).unwrap();
            assert!(model.is_serial());
            for world in &worlds {
                assert!(
                    model.satisfies(world, &formula),
                    "valid formula {formula} fails at {world}"
                );
                pairs_checked += 1;
            }
        }
    }
    assert!(pairs_checked >= 1000);
}

#[test]
fn modal_duality_holds_on_random_models() {
    use argus_core::deontic::KripkeModel;
    use rand::Rng;
    use std::collections::{BTreeMap, BTreeSet};

    let mut rng = support::seeded(0xDA_01);
    let atoms = ["p", "q", "r"];
    let mut checked = 0;
    for _ in 0..150 {
        let n = rng.gen_range(1..=4usize);
        let worlds: Vec<String> = (0..n).map(|i| format!("w{i}")).collect();
        let mut accessibility: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
        for w in &worlds {
            let mut successors = BTreeSet::new();
            for v in &worlds {
                if rng.gen_bool(0.4) {
                    successors.insert(v.clone());
                }
            }
            if !successors.is_empty() {
                accessibility.insert(w.clone(), successors);
            }
        }
        let mut valuation: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
        for w in &worlds {
            let true_atoms: BTreeSet<String> = atoms
                .iter()
                .filter(|_| rng.gen_bool(0.5))
                .map(|a| a.to_string())
                .collect();
            valuation.insert(w.clone(), true_atoms);
        }
        let model = KripkeModel::new(worlds.clone(), accessibility, valuation).unwrap();
        let mut ops = 0;
        let inner = support::random_modal_formula(&mut rng, 4, &mut ops, 1);
        let diamond = inner.clone().permitted();
        let dual = inner.not().obligatory().not();
        for world in &worlds {
            assert_eq!(
                model.satisfies(world, &diamond),
                model.satisfies(world, &dual),
                "duality failed at {world} for {diamond}"
            );
            checked += 1;
        }
    }
    assert!(checked > 150);
}
