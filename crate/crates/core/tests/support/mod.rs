//! Shared generators and independent oracles for the integration suites.
//! The oracles deliberately re-derive everything from definitions (snapshot
//! fixpoints, activation-family inclusion, exhaustive serial-model search)
//! and never call the production code paths they check.

#![allow(dead_code)]

use std::collections::BTreeSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use argus_core::deontic::ModalFormula;
use argus_core::derivation::{derive, Argument, DerivationTree, ProofStep, SearchBounds};
use argus_core::kb::{Fact, KnowledgeBase, Literal, Rule, RuleKind};

pub fn seeded(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

// ---------------------------------------------------------------------------
// Random ground knowledge bases over a small propositional literal pool.
// ---------------------------------------------------------------------------

/// All literals over `n_predicates` zero-arity predicates, both signs:
/// 2 * n_predicates literals in total.
pub fn literal_pool(n_predicates: usize) -> Vec<Literal> {
    (0..n_predicates)
        .flat_map(|i| {
            let name = format!("p{i}");
            [
                Literal::positive(name.clone(), vec![]),
                Literal::negative(name, vec![]),
            ]
        })
        .collect()
}

/// A random ground knowledge base: up to `max_rules` rules (random kind,
/// bodies of one or two literals) and a handful of facts over the pool.
pub fn random_ground_kb(
    rng: &mut ChaCha8Rng,
    n_predicates: usize,
    max_rules: usize,
) -> KnowledgeBase {
    let pool = literal_pool(n_predicates);
    let mut kb = KnowledgeBase::new();
    for literal in &pool {
        if rng.gen_bool(0.3) {
            kb.add_fact(Fact::new(literal.clone()).unwrap());
        }
    }
    let n_rules = rng.gen_range(1..=max_rules);
    for _ in 0..n_rules {
        let head = pool[rng.gen_range(0..pool.len())].clone();
        let body_len = rng.gen_range(1..=2);
        let mut body = Vec::new();
        while body.len() < body_len {
            let candidate = pool[rng.gen_range(0..pool.len())].clone();
            if candidate != head && !body.contains(&candidate) {
                body.push(candidate);
            }
        }
        let kind = if rng.gen_bool(0.5) {
            RuleKind::Strict
        } else {
            RuleKind::Defeasible
        };
        kb.add_rule(Rule::new(kind, head, body)).unwrap();
    }
    kb
}

/// Derive arguments for every pool literal, skipping knowledge bases that
/// blow the (generous) search budget.
pub fn arguments_of(kb: &KnowledgeBase, n_predicates: usize) -> Option<Vec<Argument>> {
    let bounds = SearchBounds {
        max_depth: 32,
        max_trees: 4096,
    };
    let mut args = Vec::new();
    for goal in literal_pool(n_predicates) {
        match derive(kb, &goal, &bounds) {
            Ok(trees) => args.extend(trees.into_iter().map(Argument::from_tree)),
            Err(_) => return None,
        }
    }
    Some(args)
}

// ---------------------------------------------------------------------------
// Independent forward-chaining closure (snapshot fixpoint, not the
// production worklist).
// ---------------------------------------------------------------------------

pub fn closure_oracle(premises: &BTreeSet<Literal>, rules: &[Rule]) -> BTreeSet<Literal> {
    let mut current = premises.clone();
    loop {
        let next: BTreeSet<Literal> = current
            .iter()
            .cloned()
            .chain(
                rules
                    .iter()
                    .filter(|r| r.body.iter().all(|b| current.contains(b)))
                    .map(|r| r.head.clone()),
            )
            .collect();
        if next == current {
            return current;
        }
        current = next;
    }
}

// ---------------------------------------------------------------------------
// Activation-family oracle for the specificity comparison: enumerate every
// consistent subset of the universe, collect the family of subsets that
// activate each argument, and compare families by inclusion.
// ---------------------------------------------------------------------------

fn subset_of(universe: &[Literal], mask: u64) -> BTreeSet<Literal> {
    (0..universe.len())
        .filter(|i| mask & (1 << i) != 0)
        .map(|i| universe[i].clone())
        .collect()
}

fn is_consistent(set: &BTreeSet<Literal>) -> bool {
    set.iter().all(|l| !set.contains(&l.complement()))
}

/// Masks of every consistent subset of `universe` from which `requirement`
/// is fully derivable under the rules (facts play no role).
pub fn activation_family(
    rules: &[Rule],
    requirement: &BTreeSet<Literal>,
    universe: &[Literal],
) -> BTreeSet<u64> {
    let mut family = BTreeSet::new();
    for mask in 0u64..(1 << universe.len()) {
        let subset = subset_of(universe, mask);
        if !is_consistent(&subset) {
            continue;
        }
        let closure = closure_oracle(&subset, rules);
        if requirement.iter().all(|l| closure.contains(l)) {
            family.insert(mask);
        }
    }
    family
}

/// Definition-level specificity: every activation subset of `a` is an
/// activation subset of `b`.
pub fn oracle_more_specific(
    kb: &KnowledgeBase,
    a: &Argument,
    b: &Argument,
    universe: &[Literal],
) -> bool {
    let rules: Vec<Rule> = kb.rules().cloned().collect();
    let family_a = activation_family(&rules, &a.tree().defeasible_body_literals(), universe);
    let family_b = activation_family(&rules, &b.tree().defeasible_body_literals(), universe);
    family_a.is_subset(&family_b)
}

// ---------------------------------------------------------------------------
// Derivation-tree well-formedness (the soundness invariant).
// ---------------------------------------------------------------------------

pub fn assert_tree_sound(tree: &DerivationTree, kb: &KnowledgeBase) {
    match &tree.step {
        ProofStep::Fact => {
            assert!(tree.children.is_empty(), "fact leaves have no children");
            assert!(
                kb.fact_literals().contains(&tree.root),
                "fact leaf {} not in the knowledge base",
                tree.root
            );
        }
        ProofStep::Rule(rule) => {
            assert_eq!(
                tree.root, rule.head,
                "node root must equal the applied rule head"
            );
            assert_eq!(
                tree.children.len(),
                rule.body.len(),
                "children match the body"
            );
            for (child, body_lit) in tree.children.iter().zip(&rule.body) {
                assert_eq!(
                    &child.root, body_lit,
                    "child root must equal the body literal"
                );
                assert_tree_sound(child, kb);
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Exhaustive serial-model search: the KD oracle. Successor sets are
// non-empty subsets (seriality by construction); the designated world is 0.
// ---------------------------------------------------------------------------

fn eval_indexed(
    formula: &ModalFormula,
    world: usize,
    successors: &[u32],
    valuation: &[u32],
    atoms: &[String],
) -> bool {
    match formula {
        ModalFormula::Atom(a) => {
            let idx = atoms.iter().position(|x| x == a).expect("atom in pool");
            valuation[world] & (1 << idx) != 0
        }
        ModalFormula::Not(f) => !eval_indexed(f, world, successors, valuation, atoms),
        ModalFormula::And(a, b) => {
            eval_indexed(a, world, successors, valuation, atoms)
                && eval_indexed(b, world, successors, valuation, atoms)
        }
        ModalFormula::Or(a, b) => {
            eval_indexed(a, world, successors, valuation, atoms)
                || eval_indexed(b, world, successors, valuation, atoms)
        }
        ModalFormula::Implies(a, b) => {
            !eval_indexed(a, world, successors, valuation, atoms)
                || eval_indexed(b, world, successors, valuation, atoms)
        }
        ModalFormula::Obligatory(f) => (0..successors.len())
            .filter(|v| successors[world] & (1 << v) != 0)
            .all(|v| eval_indexed(f, v, successors, valuation, atoms)),
        ModalFormula::Permitted(f) => (0..successors.len())
            .filter(|v| successors[world] & (1 << v) != 0)
            .any(|v| eval_indexed(f, v, successors, valuation, atoms)),
    }
}

/// True iff some serial model with at most `max_worlds` worlds satisfies the
/// formula at its designated world. Every relation and valuation is tried.
pub fn exists_serial_model(formula: &ModalFormula, atoms: &[String], max_worlds: usize) -> bool {
    for n in 1..=max_worlds {
        let choices: Vec<u32> = (1..(1u32 << n)).collect(); // non-empty successor sets
        let mut successor_pick = vec![0usize; n];
        loop {
            let successors: Vec<u32> = successor_pick.iter().map(|&i| choices[i]).collect();
            let valuation_space = 1u64 << (n * atoms.len());
            for val_mask in 0..valuation_space {
                let valuation: Vec<u32> = (0..n)
                    .map(|w| ((val_mask >> (w * atoms.len())) as u32) & ((1 << atoms.len()) - 1))
                    .collect();
                if eval_indexed(formula, 0, &successors, &valuation, atoms) {
                    return true;
                }
            }
            let mut pos = 0;
            loop {
                if pos == n {
                    break;
                }
                successor_pick[pos] += 1;
                if successor_pick[pos] < choices.len() {
                    break;
                }
                successor_pick[pos] = 0;
                pos += 1;
            }
            if pos == n {
                break;
            }
        }
    }
    false
}

// ---------------------------------------------------------------------------
// Random modal formulas: at most 3 atoms, modal depth <= 2, and at most two
// modal operators, which keeps the 3-world oracle complete.
// ---------------------------------------------------------------------------

pub fn random_modal_formula(
    rng: &mut ChaCha8Rng,
    size_budget: usize,
    modal_ops: &mut usize,
    modal_depth_left: usize,
) -> ModalFormula {
    let atoms = ["p", "q", "r"];
    if size_budget == 0 {
        return ModalFormula::atom(atoms[rng.gen_range(0..atoms.len())]);
    }
    match rng.gen_range(0..10) {
        0..=2 => ModalFormula::atom(atoms[rng.gen_range(0..atoms.len())]),
        3..=4 => random_modal_formula(rng, size_budget - 1, modal_ops, modal_depth_left).not(),
        5..=7 => {
            let half = (size_budget - 1) / 2;
            let left = random_modal_formula(rng, half, modal_ops, modal_depth_left);
            let right =
                random_modal_formula(rng, size_budget - 1 - half, modal_ops, modal_depth_left);
            match rng.gen_range(0..3) {
                0 => left.and(right),
                1 => left.or(right),
                _ => left.implies(right),
            }
        }
        _ if *modal_ops < 2 && modal_depth_left > 0 => {
            *modal_ops += 1;
            let inner = random_modal_formula(rng, size_budget - 1, modal_ops, modal_depth_left - 1);
            if rng.gen_bool(0.5) {
                inner.obligatory()
            } else {
                inner.permitted()
            }
        }
        _ => ModalFormula::atom(atoms[rng.gen_range(0..atoms.len())]),
    }
}
