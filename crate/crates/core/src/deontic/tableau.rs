//! KD satisfiability by labeled tableau. Propositional rules branch within a
//! world; each permitted formula spawns a successor world that also receives
//! every box constraint; a world with box constraints but no successor gets
//! one fresh successor (the seriality rule). Worlds still without successors
//! when the model is read off get a self-loop, which is safe because all
//! their box obligations were already discharged.

use std::collections::{BTreeMap, BTreeSet};

use super::{KripkeModel, ModalFormula};

/// Result of a KD satisfiability check: a serial model with a designated
/// world, or unsatisfiable.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Satisfiability {
    Satisfiable { model: KripkeModel, world: String },
    Unsatisfiable,
}

impl Satisfiability {
    pub fn is_satisfiable(&self) -> bool {
        matches!(self, Satisfiability::Satisfiable { .. })
    }

    pub fn model(&self) -> Option<(&KripkeModel, &str)> {
        match self {
            Satisfiability::Satisfiable { model, world } => Some((model, world)),
            Satisfiability::Unsatisfiable => None,
        }
    }
}

struct WorldTree {
    atoms: BTreeSet<String>,
    children: Vec<WorldTree>,
}

type Signed<'a> = (bool, &'a ModalFormula);

fn expand<'a>(
    mut queue: Vec<Signed<'a>>,
    mut pos: BTreeSet<&'a str>,
    mut neg: BTreeSet<&'a str>,
    mut boxes: Vec<Signed<'a>>,
    mut diamonds: Vec<Signed<'a>>,
) -> Option<WorldTree> {
    while let Some((sign, formula)) = queue.pop() {
        match formula {
            ModalFormula::Atom(a) => {
                if sign {
                    if neg.contains(a.as_str()) {
                        return None;
                    }
                    pos.insert(a.as_str());
                } else {
                    if pos.contains(a.as_str()) {
                        return None;
                    }
                    neg.insert(a.as_str());
                }
            }
            ModalFormula::Not(inner) => queue.push((!sign, inner)),
            ModalFormula::And(a, b) if sign => {
                queue.push((true, a));
                queue.push((true, b));
            }
            ModalFormula::And(a, b) => {
                return branch(
                    &queue,
                    &pos,
                    &neg,
                    &boxes,
                    &diamonds,
                    (false, a),
                    (false, b),
                );
            }
            ModalFormula::Or(a, b) if sign => {
                return branch(&queue, &pos, &neg, &boxes, &diamonds, (true, a), (true, b));
            }
            ModalFormula::Or(a, b) => {
                queue.push((false, a));
                queue.push((false, b));
            }
            ModalFormula::Implies(a, b) if sign => {
                return branch(&queue, &pos, &neg, &boxes, &diamonds, (false, a), (true, b));
            }
            ModalFormula::Implies(a, b) => {
                queue.push((true, a));
                queue.push((false, b));
            }
            ModalFormula::Obligatory(inner) => {
                if sign {
                    boxes.push((true, inner));
                } else {
                    diamonds.push((false, inner));
                }
            }
            ModalFormula::Permitted(inner) => {
                if sign {
                    diamonds.push((true, inner));
                } else {
                    boxes.push((false, inner));
                }
            }
        }
    }

    // propositional part saturated and clash-free: discharge the modalities
    let mut children = Vec::new();
    if diamonds.is_empty() {
        if !boxes.is_empty() {
            children.push(expand(
                boxes,
                BTreeSet::new(),
                BTreeSet::new(),
                Vec::new(),
                Vec::new(),
            )?);
        }
    } else {
        for diamond in &diamonds {
            let mut successor_queue = boxes.clone();
            successor_queue.push(*diamond);
            children.push(expand(
                successor_queue,
                BTreeSet::new(),
                BTreeSet::new(),
                Vec::new(),
                Vec::new(),
            )?);
        }
    }
    Some(WorldTree {
        atoms: pos.iter().map(|a| (*a).to_string()).collect(),
        children,
    })
}

#[allow(clippy::too_many_arguments)]
fn branch<'a>(
    queue: &[Signed<'a>],
    pos: &BTreeSet<&'a str>,
    neg: &BTreeSet<&'a str>,
    boxes: &[Signed<'a>],
    diamonds: &[Signed<'a>],
    left: Signed<'a>,
    right: Signed<'a>,
) -> Option<WorldTree> {
    for alternative in [left, right] {
        let mut queue = queue.to_vec();
        queue.push(alternative);
        if let Some(tree) = expand(
            queue,
            pos.clone(),
            neg.clone(),
            boxes.to_vec(),
            diamonds.to_vec(),
        ) {
            return Some(tree);
        }
    }
    None
}

fn read_off_model(root: WorldTree) -> (KripkeModel, String) {
    let mut worlds = Vec::new();
    let mut accessibility: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
    let mut valuation = BTreeMap::new();
    let mut stack = vec![(root, None::<String>)];
    while let Some((node, parent)) = stack.pop() {
        let name = format!("w{}", worlds.len());
        worlds.push(name.clone());
        if let Some(parent) = parent {
            accessibility
                .entry(parent)
                .or_default()
                .insert(name.clone());
        }
        if !node.atoms.is_empty() {
            valuation.insert(name.clone(), node.atoms);
        }
        for child in node.children {
            stack.push((child, Some(name.clone())));
        }
    }
    for world in &worlds {
        accessibility
            .entry(world.clone())
            .or_insert_with(|| BTreeSet::from([world.clone()]));
    }
    let model =
        KripkeModel::new(worlds, accessibility, valuation).expect("tableau model is well formed");
    (model, "w0".to_string())
}

/// Decide KD satisfiability. A satisfiable formula comes back with a serial
/// Kripke model and a designated world that satisfies it.
pub fn kd_satisfiable(formula: &ModalFormula) -> Satisfiability {
    match expand(
        vec![(true, formula)],
        BTreeSet::new(),
        BTreeSet::new(),
        Vec::new(),
        Vec::new(),
    ) {
        Some(tree) => {
            let (model, world) = read_off_model(tree);
            debug_assert!(model.is_serial(), "tableau model must be serial");
            debug_assert!(
                model.satisfies(&world, formula),
                "tableau model must satisfy the input"
            );
            Satisfiability::Satisfiable { model, world }
        }
        None => Satisfiability::Unsatisfiable,
    }
}

/// True iff the formula holds in every serial model, decided as
/// unsatisfiability of the negation.
pub fn kd_valid(formula: &ModalFormula) -> bool {
    kd_satisfiable(&formula.clone().not()) == Satisfiability::Unsatisfiable
}

/// A serial model refuting the formula, when one exists.
pub fn kd_countermodel(formula: &ModalFormula) -> Option<(KripkeModel, String)> {
    match kd_satisfiable(&formula.clone().not()) {
        Satisfiability::Satisfiable { model, world } => Some((model, world)),
        Satisfiability::Unsatisfiable => None,
    }
}
