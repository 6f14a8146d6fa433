//! Standard deontic logic: propositional modal K plus seriality. `O(φ)` is
//! read "it is obligatory that φ", `P(φ)` "it is permitted that φ". Kripke
//! model checking, KD tableau satisfiability, and norm-status reporting.

mod parse;
mod tableau;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::Serialize;
use thiserror::Error;

pub use parse::parse_modal;
pub use tableau::{kd_countermodel, kd_satisfiable, kd_valid, Satisfiability};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DeonticError {
    #[error("syntax error at {line}:{col}: {message}")]
    Syntax {
        line: usize,
        col: usize,
        message: String,
    },
    #[error(
        "norm must have the shape `antecedent -> O(consequent)` with non-modal parts: {formula}"
    )]
    NormShape { formula: String },
    #[error("background formula must be free of modal operators: {formula}")]
    ModalBackground { formula: String },
    #[error("facts contradict the background knowledge: {detail}")]
    FactsContradictBackground { detail: String },
    #[error("world {world} has an edge or valuation but is not listed")]
    UnknownWorld { world: String },
    #[error("a Kripke model needs at least one world")]
    NoWorlds,
}

/// A formula of standard deontic logic.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub enum ModalFormula {
    Atom(String),
    Not(Box<ModalFormula>),
    And(Box<ModalFormula>, Box<ModalFormula>),
    Or(Box<ModalFormula>, Box<ModalFormula>),
    Implies(Box<ModalFormula>, Box<ModalFormula>),
    /// The box operator: it is obligatory that.
    Obligatory(Box<ModalFormula>),
    /// The diamond operator: it is permitted that.
    Permitted(Box<ModalFormula>),
}

impl ModalFormula {
    pub fn atom(name: impl Into<String>) -> ModalFormula {
        ModalFormula::Atom(name.into())
    }

    #[allow(clippy::should_implement_trait)] // builder, no `use` needed at call sites
    pub fn not(self) -> ModalFormula {
        ModalFormula::Not(Box::new(self))
    }

    pub fn and(self, other: ModalFormula) -> ModalFormula {
        ModalFormula::And(Box::new(self), Box::new(other))
    }

    pub fn or(self, other: ModalFormula) -> ModalFormula {
        ModalFormula::Or(Box::new(self), Box::new(other))
    }

    pub fn implies(self, other: ModalFormula) -> ModalFormula {
        ModalFormula::Implies(Box::new(self), Box::new(other))
    }

    pub fn obligatory(self) -> ModalFormula {
        ModalFormula::Obligatory(Box::new(self))
    }

    pub fn permitted(self) -> ModalFormula {
        ModalFormula::Permitted(Box::new(self))
    }

    pub fn is_propositional(&self) -> bool {
        match self {
            ModalFormula::Atom(_) => true,
            ModalFormula::Not(f) => f.is_propositional(),
            ModalFormula::And(a, b) | ModalFormula::Or(a, b) | ModalFormula::Implies(a, b) => {
                a.is_propositional() && b.is_propositional()
            }
            ModalFormula::Obligatory(_) | ModalFormula::Permitted(_) => false,
        }
    }

    pub fn modal_depth(&self) -> usize {
        match self {
            ModalFormula::Atom(_) => 0,
            ModalFormula::Not(f) => f.modal_depth(),
            ModalFormula::And(a, b) | ModalFormula::Or(a, b) | ModalFormula::Implies(a, b) => {
                a.modal_depth().max(b.modal_depth())
            }
            ModalFormula::Obligatory(f) | ModalFormula::Permitted(f) => 1 + f.modal_depth(),
        }
    }

    pub fn collect_atoms(&self, out: &mut BTreeSet<String>) {
        match self {
            ModalFormula::Atom(a) => {
                out.insert(a.clone());
            }
            ModalFormula::Not(f) | ModalFormula::Obligatory(f) | ModalFormula::Permitted(f) => {
                f.collect_atoms(out)
            }
            ModalFormula::And(a, b) | ModalFormula::Or(a, b) | ModalFormula::Implies(a, b) => {
                a.collect_atoms(out);
                b.collect_atoms(out);
            }
        }
    }

    pub fn atoms(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_atoms(&mut out);
        out
    }

    fn fmt_prec(&self, f: &mut fmt::Formatter<'_>, prec: u8) -> fmt::Result {
        match self {
            ModalFormula::Atom(a) => write!(f, "{a}"),
            ModalFormula::Not(x) => {
                write!(f, "~")?;
                x.fmt_prec(f, 4)
            }
            ModalFormula::Obligatory(x) => {
                write!(f, "O(")?;
                x.fmt_prec(f, 0)?;
                write!(f, ")")
            }
            ModalFormula::Permitted(x) => {
                write!(f, "P(")?;
                x.fmt_prec(f, 0)?;
                write!(f, ")")
            }
            ModalFormula::And(a, b) => Self::binary(f, prec, 3, a, "&", b),
            ModalFormula::Or(a, b) => Self::binary(f, prec, 2, a, "|", b),
            ModalFormula::Implies(a, b) => Self::binary(f, prec, 1, a, "->", b),
        }
    }

    // binary connectives parse right-associatively, so the left operand is
    // printed one level tighter
    fn binary(
        f: &mut fmt::Formatter<'_>,
        prec: u8,
        own: u8,
        a: &ModalFormula,
        op: &str,
        b: &ModalFormula,
    ) -> fmt::Result {
        if prec > own {
            write!(f, "(")?;
        }
        a.fmt_prec(f, own + 1)?;
        write!(f, " {op} ")?;
        b.fmt_prec(f, own)?;
        if prec > own {
            write!(f, ")")?;
        }
        Ok(())
    }
}

impl fmt::Display for ModalFormula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.fmt_prec(f, 0)
    }
}

/// A finite Kripke model: worlds, an accessibility relation stored as an
/// adjacency map, and a valuation listing the atoms true at each world.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct KripkeModel {
    worlds: Vec<String>,
    accessibility: BTreeMap<String, BTreeSet<String>>,
    valuation: BTreeMap<String, BTreeSet<String>>,
}

impl KripkeModel {
    pub fn new(
        worlds: Vec<String>,
        accessibility: BTreeMap<String, BTreeSet<String>>,
        valuation: BTreeMap<String, BTreeSet<String>>,
    ) -> Result<KripkeModel, DeonticError> {
        if worlds.is_empty() {
            return Err(DeonticError::NoWorlds);
        }
        let known: BTreeSet<&String> = worlds.iter().collect();
        for (from, tos) in &accessibility {
            if !known.contains(from) {
                return Err(DeonticError::UnknownWorld {
                    world: from.clone(),
                });
            }
            if let Some(to) = tos.iter().find(|t| !known.contains(t)) {
                return Err(DeonticError::UnknownWorld { world: to.clone() });
            }
        }
        if let Some(w) = valuation.keys().find(|w| !known.contains(w)) {
            return Err(DeonticError::UnknownWorld { world: w.clone() });
        }
        Ok(KripkeModel {
            worlds,
            accessibility,
            valuation,
        })
    }

    pub fn worlds(&self) -> &[String] {
        &self.worlds
    }

    pub fn successors(&self, world: &str) -> impl Iterator<Item = &String> {
        self.accessibility.get(world).into_iter().flatten()
    }

    pub fn true_atoms(&self, world: &str) -> impl Iterator<Item = &String> {
        self.valuation.get(world).into_iter().flatten()
    }

    /// Every world has at least one successor. Required for SDL use: there is
    /// always an ideal world fulfilling the obligations.
    pub fn is_serial(&self) -> bool {
        self.worlds
            .iter()
            .all(|w| self.successors(w).next().is_some())
    }

    /// Standard Kripke evaluation. Panics if `world` is not in the model.
    pub fn satisfies(&self, world: &str, formula: &ModalFormula) -> bool {
        assert!(
            self.worlds.iter().any(|w| w == world),
            "unknown world {world}"
        );
        match formula {
            ModalFormula::Atom(a) => self
                .valuation
                .get(world)
                .is_some_and(|atoms| atoms.contains(a)),
            ModalFormula::Not(f) => !self.satisfies(world, f),
            ModalFormula::And(a, b) => self.satisfies(world, a) && self.satisfies(world, b),
            ModalFormula::Or(a, b) => self.satisfies(world, a) || self.satisfies(world, b),
            ModalFormula::Implies(a, b) => !self.satisfies(world, a) || self.satisfies(world, b),
            ModalFormula::Obligatory(f) => self.successors(world).all(|v| self.satisfies(v, f)),
            ModalFormula::Permitted(f) => self.successors(world).any(|v| self.satisfies(v, f)),
        }
    }
}

/// A conditional obligation `antecedent -> O(consequent)`; unconditional
/// norms `O(consequent)` have no antecedent.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Norm {
    antecedent: Option<ModalFormula>,
    consequent: ModalFormula,
    source: ModalFormula,
}

impl Norm {
    /// Check the required shape and split the norm into its parts.
    pub fn from_formula(formula: &ModalFormula) -> Result<Norm, DeonticError> {
        let shape_error = || DeonticError::NormShape {
            formula: formula.to_string(),
        };
        match formula {
            ModalFormula::Implies(a, c) => match c.as_ref() {
                ModalFormula::Obligatory(inner)
                    if a.is_propositional() && inner.is_propositional() =>
                {
                    Ok(Norm {
                        antecedent: Some(a.as_ref().clone()),
                        consequent: inner.as_ref().clone(),
                        source: formula.clone(),
                    })
                }
                _ => Err(shape_error()),
            },
            ModalFormula::Obligatory(inner) if inner.is_propositional() => Ok(Norm {
                antecedent: None,
                consequent: inner.as_ref().clone(),
                source: formula.clone(),
            }),
            _ => Err(shape_error()),
        }
    }

    pub fn source(&self) -> &ModalFormula {
        &self.source
    }
}

/// Status of a single norm in the actual world.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum NormStatus {
    Fulfilled,
    Violated,
    Inapplicable,
}

impl fmt::Display for NormStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            NormStatus::Fulfilled => "fulfilled",
            NormStatus::Violated => "violated",
            NormStatus::Inapplicable => "inapplicable",
        };
        write!(f, "{s}")
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct NormEntry {
    pub norm: String,
    pub status: NormStatus,
}

/// Per-norm statuses plus KD-consistency of norms, background, and facts
/// taken together. A violated norm can coexist with KD-consistency: the
/// ideal world fulfilling the obligation still exists.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct NormReport {
    pub norms: Vec<NormEntry>,
    pub kd_consistent: bool,
}

impl NormReport {
    pub fn count(&self, status: NormStatus) -> usize {
        self.norms.iter().filter(|e| e.status == status).count()
    }

    /// Plain-text table rendering.
    pub fn to_table(&self) -> String {
        let width = self
            .norms
            .iter()
            .map(|e| e.norm.len())
            .max()
            .unwrap_or(4)
            .max(4);
        let mut out = format!("{:width$}  STATUS\n", "NORM", width = width);
        for entry in &self.norms {
            out.push_str(&format!(
                "{:width$}  {}\n",
                entry.norm,
                entry.status,
                width = width
            ));
        }
        out.push_str(&format!(
            "kd-consistent: {}\n",
            if self.kd_consistent { "yes" } else { "no" }
        ));
        out
    }
}

fn eval_prop(formula: &ModalFormula, valuation: &BTreeMap<String, bool>) -> bool {
    match formula {
        ModalFormula::Atom(a) => valuation.get(a).copied().unwrap_or(false),
        ModalFormula::Not(f) => !eval_prop(f, valuation),
        ModalFormula::And(a, b) => eval_prop(a, valuation) && eval_prop(b, valuation),
        ModalFormula::Or(a, b) => eval_prop(a, valuation) || eval_prop(b, valuation),
        ModalFormula::Implies(a, b) => !eval_prop(a, valuation) || eval_prop(b, valuation),
        ModalFormula::Obligatory(_) | ModalFormula::Permitted(_) => {
            unreachable!("propositional evaluation of a modal formula")
        }
    }
}

// atoms of `formula` when it is a conjunction of atoms, for implication
// propagation; None otherwise
fn conjunct_atoms(formula: &ModalFormula) -> Option<Vec<&str>> {
    match formula {
        ModalFormula::Atom(a) => Some(vec![a.as_str()]),
        ModalFormula::And(a, b) => {
            let mut left = conjunct_atoms(a)?;
            left.extend(conjunct_atoms(b)?);
            Some(left)
        }
        _ => None,
    }
}

/// Evaluate each norm against the actual world described by `facts` (closed
/// under the background implications, unmentioned atoms false), and check KD
/// satisfiability of norms, background, and facts together.
pub fn norm_status(
    norms: &[ModalFormula],
    background: &[ModalFormula],
    facts: &BTreeMap<String, bool>,
) -> Result<NormReport, DeonticError> {
    let norms: Vec<Norm> = norms
        .iter()
        .map(Norm::from_formula)
        .collect::<Result<_, _>>()?;
    for formula in background {
        if !formula.is_propositional() {
            return Err(DeonticError::ModalBackground {
                formula: formula.to_string(),
            });
        }
    }

    // close the valuation under background implications with propagatable heads
    let mut valuation = facts.clone();
    let mut changed = true;
    while changed {
        changed = false;
        for formula in background {
            if let ModalFormula::Implies(lhs, rhs) = formula {
                if !eval_prop(lhs, &valuation) {
                    continue;
                }
                if let Some(atoms) = conjunct_atoms(rhs) {
                    for atom in atoms {
                        match valuation.get(atom) {
                            Some(true) => {}
                            Some(false) => {
                                return Err(DeonticError::FactsContradictBackground {
                                    detail: format!(
                                        "{formula} forces {atom}, but the facts set it false"
                                    ),
                                });
                            }
                            None => {
                                valuation.insert(atom.to_string(), true);
                                changed = true;
                            }
                        }
                    }
                }
            }
        }
    }
    if let Some(formula) = background.iter().find(|f| !eval_prop(f, &valuation)) {
        return Err(DeonticError::FactsContradictBackground {
            detail: format!("{formula} is false in the actual world"),
        });
    }

    let entries = norms
        .iter()
        .map(|norm| {
            let applicable = norm
                .antecedent
                .as_ref()
                .is_none_or(|a| eval_prop(a, &valuation));
            let status = if !applicable {
                NormStatus::Inapplicable
            } else if eval_prop(&norm.consequent, &valuation) {
                NormStatus::Fulfilled
            } else {
                NormStatus::Violated
            };
            NormEntry {
                norm: norm.source.to_string(),
                status,
            }
        })
        .collect();

    // facts are asserted at the designated world, over every mentioned atom
    let mut atoms: BTreeSet<String> = facts.keys().cloned().collect();
    for norm in &norms {
        norm.source.collect_atoms(&mut atoms);
    }
    for formula in background {
        formula.collect_atoms(&mut atoms);
    }
    let mut conjuncts: Vec<ModalFormula> = norms
        .iter()
        .map(|n| n.source.clone())
        .chain(background.iter().cloned())
        .collect();
    for atom in &atoms {
        let lit = ModalFormula::atom(atom.clone());
        conjuncts.push(if valuation.get(atom).copied().unwrap_or(false) {
            lit
        } else {
            lit.not()
        });
    }
    let kd_consistent = match conjuncts.into_iter().reduce(ModalFormula::and) {
        Some(conjunction) => kd_satisfiable(&conjunction).is_satisfiable(),
        None => true,
    };

    Ok(NormReport {
        norms: entries,
        kd_consistent,
    })
}
