//! The rule language: contingent facts, strict rules, and defeasible rules
//! over function-free literals, with a parser/printer, grounding, and the
//! strict-closure sub-engine.
//!
//! Surface syntax (`.dkb` files): `~` classical negation, `<-` strict rules,
//! `-<` defeasible rules, `.` statement terminator, `%` line comments.
//! Constants start lowercase, variables uppercase.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

/// Errors produced while parsing, validating, or grounding a knowledge base.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum KbError {
    #[error("syntax error at {line}:{col}: {message}")]
    Syntax {
        line: usize,
        col: usize,
        message: String,
    },
    #[error("line {line}: head variable {variable} does not occur in the rule body")]
    UnboundHeadVariable { line: usize, variable: String },
    #[error("line {line}: fact {literal} must be ground")]
    NonGroundFact { line: usize, literal: String },
    #[error("no grounding universe: the knowledge base contains variables but no constants")]
    NoGroundingUniverse,
    #[error("invalid {kind} name {name:?}")]
    InvalidName { kind: &'static str, name: String },
}

/// A non-fatal observation made while parsing.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseWarning {
    pub line: usize,
    pub message: String,
}

impl fmt::Display for ParseWarning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}: {}", self.line, self.message)
    }
}

fn valid_constant(name: &str) -> bool {
    let mut chars = name.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_lowercase())
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

fn valid_variable(name: &str) -> bool {
    let mut chars = name.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_uppercase())
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

/// A term is a constant (lowercase) or a variable (uppercase). Function
/// symbols are excluded, which keeps every grounding universe finite.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Term {
    Constant(String),
    Variable(String),
}

impl Term {
    pub fn constant(name: impl Into<String>) -> Result<Term, KbError> {
        let name = name.into();
        if valid_constant(&name) {
            Ok(Term::Constant(name))
        } else {
            Err(KbError::InvalidName {
                kind: "constant",
                name,
            })
        }
    }

    pub fn variable(name: impl Into<String>) -> Result<Term, KbError> {
        let name = name.into();
        if valid_variable(&name) {
            Ok(Term::Variable(name))
        } else {
            Err(KbError::InvalidName {
                kind: "variable",
                name,
            })
        }
    }

    pub fn name(&self) -> &str {
        match self {
            Term::Constant(n) | Term::Variable(n) => n,
        }
    }

    pub fn is_variable(&self) -> bool {
        matches!(self, Term::Variable(_))
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.name())
    }
}

/// A literal: an optionally negated predicate applied to terms. Negation is
/// classical; `complement` flips it.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Literal {
    pub negated: bool,
    pub predicate: String,
    pub args: Vec<Term>,
}

impl Literal {
    pub fn positive(predicate: impl Into<String>, args: Vec<Term>) -> Literal {
        Literal {
            negated: false,
            predicate: predicate.into(),
            args,
        }
    }

    pub fn negative(predicate: impl Into<String>, args: Vec<Term>) -> Literal {
        Literal {
            negated: true,
            predicate: predicate.into(),
            args,
        }
    }

    /// The complementary literal (same predicate and arguments, flipped sign).
    pub fn complement(&self) -> Literal {
        Literal {
            negated: !self.negated,
            predicate: self.predicate.clone(),
            args: self.args.clone(),
        }
    }

    pub fn is_complement_of(&self, other: &Literal) -> bool {
        self.negated != other.negated
            && self.predicate == other.predicate
            && self.args == other.args
    }

    pub fn is_ground(&self) -> bool {
        self.args.iter().all(|t| !t.is_variable())
    }

    pub fn variables(&self) -> BTreeSet<&str> {
        self.args
            .iter()
            .filter(|t| t.is_variable())
            .map(|t| t.name())
            .collect()
    }

    pub fn constants(&self) -> impl Iterator<Item = &str> {
        self.args
            .iter()
            .filter(|t| !t.is_variable())
            .map(|t| t.name())
    }

    fn substitute(&self, subst: &BTreeMap<&str, &str>) -> Literal {
        let args = self
            .args
            .iter()
            .map(|t| match t {
                Term::Variable(v) => match subst.get(v.as_str()) {
                    Some(c) => Term::Constant((*c).to_string()),
                    None => t.clone(),
                },
                c => c.clone(),
            })
            .collect();
        Literal {
            negated: self.negated,
            predicate: self.predicate.clone(),
            args,
        }
    }

    /// Parse a single literal, e.g. `~flies(tom)`.
    pub fn parse(text: &str) -> Result<Literal, KbError> {
        let tokens = lex(text)?;
        let mut parser = Parser { tokens, pos: 0 };
        let lit = parser.literal()?;
        parser.expect_eof()?;
        Ok(lit)
    }
}

impl fmt::Display for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.negated {
            write!(f, "~")?;
        }
        write!(f, "{}", self.predicate)?;
        if !self.args.is_empty() {
            write!(f, "(")?;
            for (i, a) in self.args.iter().enumerate() {
                if i > 0 {
                    write!(f, ",")?;
                }
                write!(f, "{a}")?;
            }
            write!(f, ")")?;
        }
        Ok(())
    }
}

/// Strict rules hold without exception; defeasible rules only hold normally
/// and can be defeated by more specific counterarguments.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum RuleKind {
    Strict,
    Defeasible,
}

impl RuleKind {
    pub fn arrow(self) -> &'static str {
        match self {
            RuleKind::Strict => "<-",
            RuleKind::Defeasible => "-<",
        }
    }
}

/// A positive-conditional rule `head <- body` (strict) or `head -< body`
/// (defeasible). Range restricted: every head variable occurs in the body.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Rule {
    pub head: Literal,
    pub body: Vec<Literal>,
    pub kind: RuleKind,
}

impl Rule {
    pub fn new(kind: RuleKind, head: Literal, body: Vec<Literal>) -> Rule {
        Rule { head, body, kind }
    }

    pub fn is_ground(&self) -> bool {
        self.head.is_ground() && self.body.iter().all(Literal::is_ground)
    }

    pub fn variables(&self) -> BTreeSet<&str> {
        let mut vars = self.head.variables();
        for lit in &self.body {
            vars.extend(lit.variables());
        }
        vars
    }

    fn body_variables(&self) -> BTreeSet<&str> {
        self.body.iter().flat_map(|l| l.variables()).collect()
    }

    /// Head variables not bound by the body (empty for range-restricted rules).
    pub fn unbound_head_variables(&self) -> Vec<String> {
        let bound = self.body_variables();
        self.head
            .variables()
            .into_iter()
            .filter(|v| !bound.contains(v))
            .map(str::to_string)
            .collect()
    }

    pub fn substitute(&self, subst: &BTreeMap<&str, &str>) -> Rule {
        Rule {
            head: self.head.substitute(subst),
            body: self.body.iter().map(|l| l.substitute(subst)).collect(),
            kind: self.kind,
        }
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {} ", self.head, self.kind.arrow())?;
        for (i, lit) in self.body.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{lit}")?;
        }
        Ok(())
    }
}

/// A contingent fact: a ground literal describing the current situation.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Fact {
    literal: Literal,
}

impl Fact {
    pub fn new(literal: Literal) -> Result<Fact, KbError> {
        if literal.is_ground() {
            Ok(Fact { literal })
        } else {
            Err(KbError::NonGroundFact {
                line: 0,
                literal: literal.to_string(),
            })
        }
    }

    pub fn literal(&self) -> &Literal {
        &self.literal
    }

    pub fn into_literal(self) -> Literal {
        self.literal
    }
}

impl fmt::Display for Fact {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.literal)
    }
}

/// Facts plus strict and defeasible rules, duplicate-free. Immutable in
/// spirit: construct, then query; all reasoning operations are pure.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct KnowledgeBase {
    facts: BTreeSet<Fact>,
    strict: BTreeSet<Rule>,
    defeasible: BTreeSet<Rule>,
}

impl KnowledgeBase {
    pub fn new() -> KnowledgeBase {
        KnowledgeBase::default()
    }

    /// Insert a fact; returns false if it was already present.
    pub fn add_fact(&mut self, fact: Fact) -> bool {
        self.facts.insert(fact)
    }

    /// Insert a rule after checking range restriction; returns false on duplicates.
    pub fn add_rule(&mut self, rule: Rule) -> Result<bool, KbError> {
        if let Some(variable) = rule.unbound_head_variables().into_iter().next() {
            return Err(KbError::UnboundHeadVariable { line: 0, variable });
        }
        Ok(match rule.kind {
            RuleKind::Strict => self.strict.insert(rule),
            RuleKind::Defeasible => self.defeasible.insert(rule),
        })
    }

    pub fn facts(&self) -> impl Iterator<Item = &Fact> {
        self.facts.iter()
    }

    pub fn fact_literals(&self) -> BTreeSet<Literal> {
        self.facts.iter().map(|f| f.literal().clone()).collect()
    }

    pub fn strict_rules(&self) -> impl Iterator<Item = &Rule> {
        self.strict.iter()
    }

    pub fn defeasible_rules(&self) -> impl Iterator<Item = &Rule> {
        self.defeasible.iter()
    }

    /// All rules, strict first.
    pub fn rules(&self) -> impl Iterator<Item = &Rule> {
        self.strict.iter().chain(self.defeasible.iter())
    }

    pub fn fact_count(&self) -> usize {
        self.facts.len()
    }

    pub fn strict_count(&self) -> usize {
        self.strict.len()
    }

    pub fn defeasible_count(&self) -> usize {
        self.defeasible.len()
    }

    pub fn is_empty(&self) -> bool {
        self.facts.is_empty() && self.strict.is_empty() && self.defeasible.is_empty()
    }

    /// Every constant occurring anywhere in the knowledge base.
    pub fn constants(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        for fact in &self.facts {
            out.extend(fact.literal().constants().map(str::to_string));
        }
        for rule in self.rules() {
            out.extend(rule.head.constants().map(str::to_string));
            for lit in &rule.body {
                out.extend(lit.constants().map(str::to_string));
            }
        }
        out
    }

    pub fn is_ground(&self) -> bool {
        self.rules().all(Rule::is_ground)
    }

    /// Replace every rule by all of its instantiations over the constants of
    /// the knowledge base. Facts are unchanged.
    pub fn ground(&self) -> Result<KnowledgeBase, KbError> {
        self.ground_with(&BTreeSet::new())
    }

    /// Ground over the knowledge base's constants plus `extra` (typically the
    /// constants of a query).
    pub fn ground_with(&self, extra: &BTreeSet<String>) -> Result<KnowledgeBase, KbError> {
        let mut universe = self.constants();
        universe.extend(extra.iter().cloned());
        if universe.is_empty() && !self.is_ground() {
            return Err(KbError::NoGroundingUniverse);
        }
        let universe: Vec<&str> = universe.iter().map(String::as_str).collect();

        let mut out = KnowledgeBase {
            facts: self.facts.clone(),
            ..KnowledgeBase::default()
        };
        for rule in self.rules() {
            let vars: Vec<&str> = rule.variables().into_iter().collect();
            if vars.is_empty() {
                out.insert_ground_rule(rule.clone());
                continue;
            }
            let mut choice = vec![0usize; vars.len()];
            loop {
                let subst: BTreeMap<&str, &str> = vars
                    .iter()
                    .zip(&choice)
                    .map(|(v, &i)| (*v, universe[i]))
                    .collect();
                out.insert_ground_rule(rule.substitute(&subst));
                // odometer over the universe
                let mut pos = 0;
                loop {
                    if pos == choice.len() {
                        break;
                    }
                    choice[pos] += 1;
                    if choice[pos] < universe.len() {
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
        Ok(out)
    }

    fn insert_ground_rule(&mut self, rule: Rule) {
        match rule.kind {
            RuleKind::Strict => self.strict.insert(rule),
            RuleKind::Defeasible => self.defeasible.insert(rule),
        };
    }

    /// Parse a knowledge base, discarding warnings.
    pub fn parse(text: &str) -> Result<KnowledgeBase, KbError> {
        Self::parse_with_warnings(text).map(|(kb, _)| kb)
    }

    /// Parse a knowledge base, reporting duplicate statements as warnings.
    pub fn parse_with_warnings(text: &str) -> Result<(KnowledgeBase, Vec<ParseWarning>), KbError> {
        let tokens = lex(text)?;
        let mut parser = Parser { tokens, pos: 0 };
        let mut kb = KnowledgeBase::new();
        let mut warnings = Vec::new();
        while !parser.at_eof() {
            let line = parser.peek().line;
            match parser.statement()? {
                Statement::Fact(fact) => {
                    if !kb.add_fact(fact.clone()) {
                        warnings.push(ParseWarning {
                            line,
                            message: format!("duplicate statement: {fact}."),
                        });
                    }
                }
                Statement::Rule(rule) => {
                    if let Some(variable) = rule.unbound_head_variables().into_iter().next() {
                        return Err(KbError::UnboundHeadVariable { line, variable });
                    }
                    let fresh = match rule.kind {
                        RuleKind::Strict => kb.strict.insert(rule.clone()),
                        RuleKind::Defeasible => kb.defeasible.insert(rule.clone()),
                    };
                    if !fresh {
                        warnings.push(ParseWarning {
                            line,
                            message: format!("duplicate statement: {rule}."),
                        });
                    }
                }
            }
        }
        Ok((kb, warnings))
    }

    /// Canonical text: facts, then strict rules, then defeasible rules, each
    /// section sorted lexicographically. `parse(to_text(kb)) == kb`.
    pub fn to_text(&self) -> String {
        let mut lines = Vec::new();
        let mut section = |stmts: Vec<String>| {
            let mut stmts = stmts;
            stmts.sort();
            lines.extend(stmts);
        };
        section(self.facts.iter().map(|f| format!("{f}.")).collect());
        section(self.strict.iter().map(|r| format!("{r}.")).collect());
        section(self.defeasible.iter().map(|r| format!("{r}.")).collect());
        if lines.is_empty() {
            String::new()
        } else {
            lines.join("\n") + "\n"
        }
    }
}

impl fmt::Display for KnowledgeBase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_text())
    }
}

/// Least fixpoint of forward application of `rules` to `premises`, plus a
/// consistency flag (no complementary pair in the closure). Inconsistency is
/// reported, not raised.
pub fn strict_closure<'a, I>(premises: &BTreeSet<Literal>, rules: I) -> (BTreeSet<Literal>, bool)
where
    I: IntoIterator<Item = &'a Rule>,
{
    let rules: Vec<&Rule> = rules.into_iter().collect();
    let mut closure = premises.clone();
    let mut changed = true;
    while changed {
        changed = false;
        for rule in &rules {
            if !closure.contains(&rule.head) && rule.body.iter().all(|b| closure.contains(b)) {
                closure.insert(rule.head.clone());
                changed = true;
            }
        }
    }
    let consistent = closure
        .iter()
        .all(|lit| !closure.contains(&lit.complement()));
    (closure, consistent)
}

// ---------------------------------------------------------------------------
// Lexer and parser for the surface syntax.
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Eq)]
enum TokenKind {
    Ident(String),
    Var(String),
    Tilde,
    LParen,
    RParen,
    Comma,
    Dot,
    StrictArrow,
    DefeasibleArrow,
    Eof,
}

#[derive(Debug, Clone)]
struct Token {
    kind: TokenKind,
    line: usize,
    col: usize,
}

struct Cursor {
    chars: Vec<char>,
    pos: usize,
    line: usize,
    col: usize,
}

impl Cursor {
    fn new(text: &str) -> Cursor {
        Cursor {
            chars: text.chars().collect(),
            pos: 0,
            line: 1,
            col: 1,
        }
    }

    fn peek(&self) -> Option<char> {
        self.chars.get(self.pos).copied()
    }

    fn bump(&mut self) -> char {
        let c = self.chars[self.pos];
        self.pos += 1;
        if c == '\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        c
    }
}

fn lex(text: &str) -> Result<Vec<Token>, KbError> {
    let mut tokens = Vec::new();
    let mut cur = Cursor::new(text);
    while let Some(c) = cur.peek() {
        let (line, col) = (cur.line, cur.col);
        match c {
            c if c.is_whitespace() => {
                cur.bump();
            }
            '%' => while cur.peek().is_some() && cur.bump() != '\n' {},
            c if c.is_ascii_alphabetic() => {
                let mut name = String::new();
                while matches!(cur.peek(), Some(c) if c.is_ascii_alphanumeric() || c == '_') {
                    name.push(cur.bump());
                }
                let kind = if c.is_ascii_uppercase() {
                    TokenKind::Var(name)
                } else {
                    TokenKind::Ident(name)
                };
                tokens.push(Token { kind, line, col });
            }
            '~' | '(' | ')' | ',' | '.' => {
                let kind = match cur.bump() {
                    '~' => TokenKind::Tilde,
                    '(' => TokenKind::LParen,
                    ')' => TokenKind::RParen,
                    ',' => TokenKind::Comma,
                    _ => TokenKind::Dot,
                };
                tokens.push(Token { kind, line, col });
            }
            '<' => {
                cur.bump();
                if cur.peek() == Some('-') {
                    cur.bump();
                    tokens.push(Token {
                        kind: TokenKind::StrictArrow,
                        line,
                        col,
                    });
                } else {
                    return Err(KbError::Syntax {
                        line,
                        col,
                        message: "expected `<-`".to_string(),
                    });
                }
            }
            '-' => {
                cur.bump();
                if cur.peek() == Some('<') {
                    cur.bump();
                    tokens.push(Token {
                        kind: TokenKind::DefeasibleArrow,
                        line,
                        col,
                    });
                } else {
                    return Err(KbError::Syntax {
                        line,
                        col,
                        message: "expected `-<`".to_string(),
                    });
                }
            }
            other => {
                return Err(KbError::Syntax {
                    line,
                    col,
                    message: format!("unexpected character {other:?}"),
                });
            }
        }
    }
    tokens.push(Token {
        kind: TokenKind::Eof,
        line: cur.line,
        col: cur.col,
    });
    Ok(tokens)
}

enum Statement {
    Fact(Fact),
    Rule(Rule),
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> &Token {
        &self.tokens[self.pos]
    }

    fn next(&mut self) -> Token {
        let tok = self.tokens[self.pos].clone();
        if self.pos + 1 < self.tokens.len() {
            self.pos += 1;
        }
        tok
    }

    fn at_eof(&self) -> bool {
        self.peek().kind == TokenKind::Eof
    }

    fn error(&self, tok: &Token, message: impl Into<String>) -> KbError {
        KbError::Syntax {
            line: tok.line,
            col: tok.col,
            message: message.into(),
        }
    }

    fn expect_eof(&mut self) -> Result<(), KbError> {
        let tok = self.next();
        if tok.kind == TokenKind::Eof {
            Ok(())
        } else {
            Err(self.error(&tok, "expected end of input"))
        }
    }

    fn literal(&mut self) -> Result<Literal, KbError> {
        let negated = if self.peek().kind == TokenKind::Tilde {
            self.next();
            true
        } else {
            false
        };
        let tok = self.next();
        let predicate = match tok.kind {
            TokenKind::Ident(name) => name,
            _ => return Err(self.error(&tok, "expected a predicate name")),
        };
        let mut args = Vec::new();
        if self.peek().kind == TokenKind::LParen {
            self.next();
            loop {
                let tok = self.next();
                match tok.kind {
                    TokenKind::Ident(name) => args.push(Term::Constant(name)),
                    TokenKind::Var(name) => args.push(Term::Variable(name)),
                    _ => return Err(self.error(&tok, "expected a term")),
                }
                let tok = self.next();
                match tok.kind {
                    TokenKind::Comma => continue,
                    TokenKind::RParen => break,
                    _ => return Err(self.error(&tok, "expected `,` or `)`")),
                }
            }
        }
        Ok(Literal {
            negated,
            predicate,
            args,
        })
    }

    fn statement(&mut self) -> Result<Statement, KbError> {
        let start = self.peek().clone();
        let head = self.literal()?;
        let tok = self.next();
        match tok.kind {
            TokenKind::Dot => {
                if !head.is_ground() {
                    return Err(KbError::NonGroundFact {
                        line: start.line,
                        literal: head.to_string(),
                    });
                }
                Ok(Statement::Fact(Fact { literal: head }))
            }
            TokenKind::StrictArrow | TokenKind::DefeasibleArrow => {
                let kind = if tok.kind == TokenKind::StrictArrow {
                    RuleKind::Strict
                } else {
                    RuleKind::Defeasible
                };
                let mut body = vec![self.literal()?];
                loop {
                    let tok = self.next();
                    match tok.kind {
                        TokenKind::Comma => body.push(self.literal()?),
                        TokenKind::Dot => break,
                        _ => return Err(self.error(&tok, "expected `,` or `.`")),
                    }
                }
                Ok(Statement::Rule(Rule { head, body, kind }))
            }
            _ => Err(self.error(&tok, "expected `.`, `<-`, or `-<`")),
        }
    }
}
