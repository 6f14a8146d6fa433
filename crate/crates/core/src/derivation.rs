//! Derivation trees for ground goals: backward-chaining enumeration with
//! per-path repetition blocking, the forward-chaining derivability primitive,
//! and the argument/conflict notions built on top.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use serde::Serialize;
use thiserror::Error;

use crate::kb::{KnowledgeBase, Literal, Rule, RuleKind};

/// Resource bounds for derivation search. Exceeding either is an explicit
/// error, never a silent truncation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SearchBounds {
    pub max_depth: usize,
    pub max_trees: usize,
}

impl Default for SearchBounds {
    fn default() -> SearchBounds {
        SearchBounds {
            max_depth: 64,
            max_trees: 256,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DeriveError {
    #[error("derivation for {goal} exceeded the depth bound of {max_depth}")]
    MaxDepthExceeded { goal: String, max_depth: usize },
    #[error("derivation for {goal} exceeded the tree budget of {max_trees}")]
    MaxTreesExceeded { goal: String, max_trees: usize },
    #[error("{what} must be ground")]
    NonGroundInput { what: &'static str },
}

/// How a node's literal was established: as a contingent fact, or by applying
/// a ground rule whose body the children prove.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub enum ProofStep {
    Fact,
    Rule(Rule),
}

/// A proof tree for a ground literal. Invariants: the root equals the applied
/// rule's head (or the fact literal at a leaf), children match the rule body
/// position by position, and no literal repeats along a root-to-leaf path.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct DerivationTree {
    pub root: Literal,
    pub step: ProofStep,
    pub children: Vec<DerivationTree>,
}

impl DerivationTree {
    pub fn fact_leaf(literal: Literal) -> DerivationTree {
        DerivationTree {
            root: literal,
            step: ProofStep::Fact,
            children: Vec::new(),
        }
    }

    pub fn depth(&self) -> usize {
        1 + self
            .children
            .iter()
            .map(DerivationTree::depth)
            .max()
            .unwrap_or(0)
    }

    pub fn uses_defeasible(&self) -> bool {
        matches!(&self.step, ProofStep::Rule(r) if r.kind == RuleKind::Defeasible)
            || self.children.iter().any(DerivationTree::uses_defeasible)
    }

    /// Literals at fact leaves.
    pub fn fact_leaves(&self) -> BTreeSet<Literal> {
        let mut out = BTreeSet::new();
        self.visit(&mut |node| {
            if matches!(node.step, ProofStep::Fact) {
                out.insert(node.root.clone());
            }
        });
        out
    }

    /// Every literal occurring in the tree (heads, body members, leaves).
    pub fn node_literals(&self) -> BTreeSet<Literal> {
        let mut out = BTreeSet::new();
        self.visit(&mut |node| {
            out.insert(node.root.clone());
        });
        out
    }

    /// Fact leaves that lie below at least one defeasible rule application;
    /// empty for purely strict trees.
    pub fn defeasible_leaf_literals(&self) -> BTreeSet<Literal> {
        fn walk(node: &DerivationTree, under_defeasible: bool, out: &mut BTreeSet<Literal>) {
            match &node.step {
                ProofStep::Fact => {
                    if under_defeasible {
                        out.insert(node.root.clone());
                    }
                }
                ProofStep::Rule(rule) => {
                    let under = under_defeasible || rule.kind == RuleKind::Defeasible;
                    for child in &node.children {
                        walk(child, under, out);
                    }
                }
            }
        }
        let mut out = BTreeSet::new();
        walk(self, false, &mut out);
        out
    }

    /// The body literals of every defeasible rule application in the tree:
    /// what must hold for the tree's defeasible steps to fire. Empty for
    /// purely strict trees.
    pub fn defeasible_body_literals(&self) -> BTreeSet<Literal> {
        let mut out = BTreeSet::new();
        self.visit(&mut |node| {
            if let ProofStep::Rule(rule) = &node.step {
                if rule.kind == RuleKind::Defeasible {
                    out.extend(rule.body.iter().cloned());
                }
            }
        });
        out
    }

    fn visit(&self, f: &mut impl FnMut(&DerivationTree)) {
        f(self);
        for child in &self.children {
            child.visit(f);
        }
    }

    fn step_label(&self) -> &'static str {
        match &self.step {
            ProofStep::Fact => "fact",
            ProofStep::Rule(r) if r.kind == RuleKind::Strict => "strict",
            ProofStep::Rule(_) => "defeasible",
        }
    }

    /// Structured form for JSON output.
    pub fn to_json_node(&self) -> TreeNode {
        TreeNode {
            literal: self.root.to_string(),
            rule_kind: self.step_label().to_string(),
            children: self
                .children
                .iter()
                .map(DerivationTree::to_json_node)
                .collect(),
        }
    }

    /// Indented text form for `--explain` output.
    pub fn render_indented(&self) -> String {
        fn walk(node: &DerivationTree, indent: usize, out: &mut String) {
            let _ = writeln!(
                out,
                "{:indent$}{}  [{}]",
                "",
                node.root,
                node.step_label(),
                indent = indent
            );
            for child in &node.children {
                walk(child, indent + 2, out);
            }
        }
        let mut out = String::new();
        walk(self, 0, &mut out);
        out
    }

    /// One-line rendering of the applied rule chain, root first.
    pub fn render_chain(&self) -> String {
        let mut parts = Vec::new();
        self.visit(&mut |node| match &node.step {
            ProofStep::Rule(rule) => parts.push(format!("{rule}")),
            ProofStep::Fact => parts.push(format!("{} is a fact", node.root)),
        });
        parts.join("; ")
    }
}

/// Serializable derivation-tree node.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TreeNode {
    pub literal: String,
    pub rule_kind: String,
    pub children: Vec<TreeNode>,
}

/// An answer candidate paired with its derivation; the unit compared by
/// specificity.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct Argument {
    conclusion: Literal,
    tree: DerivationTree,
    uses_defeasible: bool,
}

impl Argument {
    pub fn from_tree(tree: DerivationTree) -> Argument {
        Argument {
            conclusion: tree.root.clone(),
            uses_defeasible: tree.uses_defeasible(),
            tree,
        }
    }

    pub fn conclusion(&self) -> &Literal {
        &self.conclusion
    }

    pub fn tree(&self) -> &DerivationTree {
        &self.tree
    }

    pub fn uses_defeasible(&self) -> bool {
        self.uses_defeasible
    }
}

/// Two arguments conflict iff their conclusions are complementary literals.
pub fn conflicts(a: &Argument, b: &Argument) -> bool {
    a.conclusion.is_complement_of(&b.conclusion)
}

/// Enumerate all derivation trees for `goal` over a ground knowledge base,
/// using facts as leaves and rules (both kinds) as inner nodes. Returns an
/// empty set when the goal is underivable.
pub fn derive(
    kb: &KnowledgeBase,
    goal: &Literal,
    bounds: &SearchBounds,
) -> Result<Vec<DerivationTree>, DeriveError> {
    if !kb.is_ground() {
        return Err(DeriveError::NonGroundInput {
            what: "knowledge base",
        });
    }
    if !goal.is_ground() {
        return Err(DeriveError::NonGroundInput { what: "goal" });
    }
    let facts = kb.fact_literals();
    let rules: Vec<&Rule> = kb.rules().collect();
    let mut path = Vec::new();
    prove(goal, &facts, &rules, &mut path, bounds)
}

fn prove(
    goal: &Literal,
    facts: &BTreeSet<Literal>,
    rules: &[&Rule],
    path: &mut Vec<Literal>,
    bounds: &SearchBounds,
) -> Result<Vec<DerivationTree>, DeriveError> {
    if path.len() >= bounds.max_depth {
        return Err(DeriveError::MaxDepthExceeded {
            goal: goal.to_string(),
            max_depth: bounds.max_depth,
        });
    }
    if path.contains(goal) {
        // repeated literal on the path: blocked, not an error
        return Ok(Vec::new());
    }

    let mut trees = Vec::new();
    if facts.contains(goal) {
        trees.push(DerivationTree::fact_leaf(goal.clone()));
    }

    path.push(goal.clone());
    let result = (|| {
        for rule in rules.iter().filter(|r| r.head == *goal) {
            // every body literal needs at least one subtree; combine all choices
            let mut alternatives: Vec<Vec<DerivationTree>> = Vec::with_capacity(rule.body.len());
            let mut applicable = true;
            for body_lit in &rule.body {
                let subtrees = prove(body_lit, facts, rules, path, bounds)?;
                if subtrees.is_empty() {
                    applicable = false;
                    break;
                }
                alternatives.push(subtrees);
            }
            if !applicable {
                continue;
            }
            let mut choice = vec![0usize; alternatives.len()];
            loop {
                let children: Vec<DerivationTree> = choice
                    .iter()
                    .enumerate()
                    .map(|(i, &j)| alternatives[i][j].clone())
                    .collect();
                trees.push(DerivationTree {
                    root: goal.clone(),
                    step: ProofStep::Rule((*rule).clone()),
                    children,
                });
                if trees.len() > bounds.max_trees {
                    return Err(DeriveError::MaxTreesExceeded {
                        goal: goal.to_string(),
                        max_trees: bounds.max_trees,
                    });
                }
                let mut pos = 0;
                loop {
                    if pos == choice.len() {
                        break;
                    }
                    choice[pos] += 1;
                    if choice[pos] < alternatives[pos].len() {
                        break;
                    }
                    choice[pos] = 0;
                    pos += 1;
                }
                if pos == choice.len() {
                    break;
                }
            }
        }
        Ok(())
    })();
    path.pop();
    result.map(|()| trees)
}

/// True iff `goal` is in the forward-chaining closure of `premises` under the
/// selected rules (strict only, or strict plus defeasible). Contingent facts
/// play no role here: `premises` stand in for them.
pub fn derivable<'a, I>(
    rules: I,
    premises: &BTreeSet<Literal>,
    goal: &Literal,
    include_defeasible: bool,
) -> bool
where
    I: IntoIterator<Item = &'a Rule>,
{
    let rules: Vec<&Rule> = rules
        .into_iter()
        .filter(|r| include_defeasible || r.kind == RuleKind::Strict)
        .collect();
    let mut closure = premises.clone();
    if closure.contains(goal) {
        return true;
    }
    let mut changed = true;
    while changed {
        changed = false;
        for rule in &rules {
            if !closure.contains(&rule.head) && rule.body.iter().all(|b| closure.contains(b)) {
                if rule.head == *goal {
                    return true;
                }
                closure.insert(rule.head.clone());
                changed = true;
            }
        }
    }
    false
}
