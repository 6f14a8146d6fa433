//! Activation sets, the more-specific-than relation between arguments, the
//! closure-based quasi-ordering on top of it, and warrant decisions between
//! conflicting arguments.
//!
//! An activation set is a set of literals from which everything the
//! defeasible steps of a derivation need is derivable, using rules only —
//! contingent facts are excluded. One argument is at least as specific as
//! another iff every activation set of the former also activates the latter.
//! Arguments that use no defeasible rule at all outrank every argument that
//! does.

use std::collections::BTreeSet;

use serde::Serialize;
use thiserror::Error;

use crate::derivation::{derive, Argument, DeriveError, SearchBounds};
use crate::kb::{strict_closure, KbError, KnowledgeBase, Literal};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SpecificityError {
    #[error("universe of {size} literals exceeds the tractability bound of {max}")]
    UniverseTooLarge { size: usize, max: usize },
    #[error("inconsistent activation candidate: contains {literal} and its complement")]
    InconsistentActivationSet { literal: String },
    #[error("strict knowledge is inconsistent: derives {literal} and its complement")]
    StrictInconsistency { literal: String },
    #[error("query {literal} must be ground")]
    NonGroundQuery { literal: String },
    #[error(transparent)]
    Kb(#[from] KbError),
    #[error(transparent)]
    Derive(#[from] DeriveError),
}

/// Bounds for specificity comparisons. `max_universe` caps the subset
/// enumeration (2^n activation candidates).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SpecificityConfig {
    pub max_universe: usize,
    pub bounds: SearchBounds,
}

impl Default for SpecificityConfig {
    fn default() -> SpecificityConfig {
        SpecificityConfig {
            max_universe: 20,
            bounds: SearchBounds::default(),
        }
    }
}

/// The ground literals over which activation candidates range: everything
/// that occurs in the derivations under comparison.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LiteralUniverse {
    literals: Vec<Literal>,
}

impl LiteralUniverse {
    pub fn literals(&self) -> &[Literal] {
        &self.literals
    }

    pub fn len(&self) -> usize {
        self.literals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.literals.is_empty()
    }
}

/// Universe of all literals occurring (as head, body member, or leaf) in the
/// arguments' trees.
pub fn relevant_universe<'a, I>(args: I) -> LiteralUniverse
where
    I: IntoIterator<Item = &'a Argument>,
{
    let mut set = BTreeSet::new();
    for arg in args {
        set.extend(arg.tree().node_literals());
    }
    LiteralUniverse {
        literals: set.into_iter().collect(),
    }
}

/// True iff `activation` derives every literal the argument's defeasible
/// steps need, using strict and defeasible rules with contingent facts
/// excluded. Errors on an inconsistent activation candidate.
pub fn activates(
    kb: &KnowledgeBase,
    activation: &BTreeSet<Literal>,
    arg: &Argument,
) -> Result<bool, SpecificityError> {
    if let Some(lit) = activation
        .iter()
        .find(|l| activation.contains(&l.complement()))
    {
        return Err(SpecificityError::InconsistentActivationSet {
            literal: lit.to_string(),
        });
    }
    let requirements = arg.tree().defeasible_body_literals();
    let (closure, _) = strict_closure(activation, kb.rules());
    Ok(requirements.iter().all(|l| closure.contains(l)))
}

/// Poole's relation as a single direction: `a` is at least as specific as
/// `b` iff every consistent activation subset of the universe that activates
/// `a` also activates `b`. Exhaustive subset enumeration.
pub fn more_specific_poole(
    kb: &KnowledgeBase,
    a: &Argument,
    b: &Argument,
    universe: &LiteralUniverse,
    config: &SpecificityConfig,
) -> Result<bool, SpecificityError> {
    poole_pair(kb, a, b, universe, config).map(|(ab, _)| ab)
}

/// Both directions of Poole's relation in one subset sweep.
fn poole_pair(
    kb: &KnowledgeBase,
    a: &Argument,
    b: &Argument,
    universe: &LiteralUniverse,
    config: &SpecificityConfig,
) -> Result<(bool, bool), SpecificityError> {
    let lits = universe.literals();
    let n = lits.len();
    // 62 keeps the subset masks inside u64 no matter how the bound is configured
    let max = config.max_universe.min(62);
    if n > max {
        return Err(SpecificityError::UniverseTooLarge { size: n, max });
    }
    let req_a = a.tree().defeasible_body_literals();
    let req_b = b.tree().defeasible_body_literals();

    // masks of complementary pairs; subsets containing one are skipped
    let mut forbidden: Vec<u64> = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if lits[i].is_complement_of(&lits[j]) {
                forbidden.push((1 << i) | (1 << j));
            }
        }
    }

    let mut a_ge_b = true;
    let mut b_ge_a = true;
    for mask in 0u64..(1u64 << n) {
        if forbidden.iter().any(|f| mask & f == *f) {
            continue;
        }
        let premises: BTreeSet<Literal> = (0..n)
            .filter(|i| mask & (1 << i) != 0)
            .map(|i| lits[i].clone())
            .collect();
        let (closure, _) = strict_closure(&premises, kb.rules());
        let act_a = req_a.iter().all(|l| closure.contains(l));
        let act_b = req_b.iter().all(|l| closure.contains(l));
        if act_a && !act_b {
            a_ge_b = false;
        }
        if act_b && !act_a {
            b_ge_a = false;
        }
        if !a_ge_b && !b_ge_a {
            break;
        }
    }
    Ok((a_ge_b, b_ge_a))
}

/// Relation between an ordered pair of arguments in the specificity
/// quasi-ordering.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SpecificityRelation {
    MoreSpecific,
    LessSpecific,
    Equivalent,
    Incomparable,
}

/// Pairwise verdicts for a slice of arguments, in the order they were given.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SpecificityMatrix {
    n: usize,
    relations: Vec<SpecificityRelation>,
}

impl SpecificityMatrix {
    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn at(&self, i: usize, j: usize) -> SpecificityRelation {
        self.relations[i * self.n + j]
    }

    /// The underlying preorder: row argument at least as specific as column.
    pub fn at_least_as_specific(&self, i: usize, j: usize) -> bool {
        matches!(
            self.at(i, j),
            SpecificityRelation::MoreSpecific | SpecificityRelation::Equivalent
        )
    }
}

/// The quasi-ordering: reflexive-transitive closure of strict preference
/// (arguments free of defeasible rules above all others) united with Poole's
/// relation among the defeasible arguments.
pub fn specificity_preorder(
    kb: &KnowledgeBase,
    args: &[Argument],
    config: &SpecificityConfig,
) -> Result<SpecificityMatrix, SpecificityError> {
    let n = args.len();
    let mut geq = vec![false; n * n];
    for i in 0..n {
        geq[i * n + i] = true;
        for j in 0..n {
            if i != j && !args[i].uses_defeasible() && args[j].uses_defeasible() {
                geq[i * n + j] = true;
            }
        }
    }
    for i in 0..n {
        for j in i + 1..n {
            if args[i].uses_defeasible() && args[j].uses_defeasible() {
                let universe = relevant_universe([&args[i], &args[j]]);
                let (ij, ji) = poole_pair(kb, &args[i], &args[j], &universe, config)?;
                geq[i * n + j] |= ij;
                geq[j * n + i] |= ji;
            }
        }
    }
    // transitive closure
    for k in 0..n {
        for i in 0..n {
            if geq[i * n + k] {
                for j in 0..n {
                    if geq[k * n + j] {
                        geq[i * n + j] = true;
                    }
                }
            }
        }
    }
    let relations = (0..n * n)
        .map(|idx| {
            let (i, j) = (idx / n, idx % n);
            match (geq[i * n + j], geq[j * n + i]) {
                (true, true) => SpecificityRelation::Equivalent,
                (true, false) => SpecificityRelation::MoreSpecific,
                (false, true) => SpecificityRelation::LessSpecific,
                (false, false) => SpecificityRelation::Incomparable,
            }
        })
        .collect();
    Ok(SpecificityMatrix { n, relations })
}

/// Outcome of a warrant check.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Yes,
    No,
    Undecided,
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Verdict::Yes => "yes",
            Verdict::No => "no",
            Verdict::Undecided => "undecided",
        };
        write!(f, "{s}")
    }
}

/// A warrant decision with the arguments that produced it. The matrix covers
/// `pro` followed by `con`, in order.
#[derive(Debug, Clone)]
pub struct WarrantOutcome {
    pub verdict: Verdict,
    pub pro: Vec<Argument>,
    pub con: Vec<Argument>,
    pub matrix: SpecificityMatrix,
}

impl WarrantOutcome {
    /// A pro argument strictly above every con argument, if the verdict is
    /// yes; symmetrically a con argument for no.
    pub fn winning_argument(&self) -> Option<&Argument> {
        let np = self.pro.len();
        let nc = self.con.len();
        match self.verdict {
            Verdict::Yes => (0..np)
                .find(|&i| {
                    (np..np + nc).all(|j| self.matrix.at(i, j) == SpecificityRelation::MoreSpecific)
                })
                .map(|i| &self.pro[i]),
            Verdict::No => (np..np + nc)
                .find(|&j| {
                    (0..np).all(|i| self.matrix.at(j, i) == SpecificityRelation::MoreSpecific)
                })
                .map(|j| &self.con[j - np]),
            Verdict::Undecided => None,
        }
    }
}

/// Decide a ground query against the knowledge base: derive arguments for
/// the query and its complement, order them by specificity, and report yes
/// if some pro argument is strictly above every con argument (no for the
/// symmetric case, undecided otherwise).
pub fn warranted(
    kb: &KnowledgeBase,
    query: &Literal,
    config: &SpecificityConfig,
) -> Result<WarrantOutcome, SpecificityError> {
    if !query.is_ground() {
        return Err(SpecificityError::NonGroundQuery {
            literal: query.to_string(),
        });
    }
    let extra: BTreeSet<String> = query.constants().map(str::to_string).collect();
    let kb = kb.ground_with(&extra)?;

    let (closure, consistent) = strict_closure(&kb.fact_literals(), kb.strict_rules());
    if !consistent {
        let literal = closure
            .iter()
            .find(|l| closure.contains(&l.complement()))
            .map(|l| l.to_string())
            .unwrap_or_default();
        return Err(SpecificityError::StrictInconsistency { literal });
    }

    let pro: Vec<Argument> = derive(&kb, query, &config.bounds)?
        .into_iter()
        .map(Argument::from_tree)
        .collect();
    let con: Vec<Argument> = derive(&kb, &query.complement(), &config.bounds)?
        .into_iter()
        .map(Argument::from_tree)
        .collect();

    let mut all = pro.clone();
    all.extend(con.iter().cloned());
    let matrix = specificity_preorder(&kb, &all, config)?;

    let np = pro.len();
    let nc = con.len();
    let yes = !pro.is_empty()
        && (0..np)
            .any(|i| (np..np + nc).all(|j| matrix.at(i, j) == SpecificityRelation::MoreSpecific));
    let no = !con.is_empty()
        && (np..np + nc)
            .any(|j| (0..np).all(|i| matrix.at(j, i) == SpecificityRelation::MoreSpecific));
    debug_assert!(!(yes && no), "warrant must be exclusive");
    let verdict = if yes {
        Verdict::Yes
    } else if no {
        Verdict::No
    } else {
        Verdict::Undecided
    };
    Ok(WarrantOutcome {
        verdict,
        pro,
        con,
        matrix,
    })
}
