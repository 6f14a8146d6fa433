//! Parser for the modal formula syntax: atoms `[a-z][A-Za-z0-9_]*`, `~` for
//! negation, `&`, `|`, `->`, `O(...)` for obligation, `P(...)` for
//! permission, parentheses. Unary operators bind tightest, then `&`, then
//! `|`, then `->` (right-associative).

use super::{DeonticError, ModalFormula};

#[derive(Debug, Clone, PartialEq, Eq)]
enum Token {
    Atom(String),
    Obligation,
    Permission,
    Tilde,
    And,
    Or,
    Arrow,
    LParen,
    RParen,
    Eof,
}

#[derive(Debug, Clone)]
struct Spanned {
    token: Token,
    line: usize,
    col: usize,
}

fn lex(text: &str) -> Result<Vec<Spanned>, DeonticError> {
    let chars: Vec<char> = text.chars().collect();
    let mut tokens = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1usize, 1usize);
    while i < chars.len() {
        let (tok_line, tok_col) = (line, col);
        let c = chars[i];
        let single = match c {
            '\n' => {
                line += 1;
                col = 1;
                i += 1;
                continue;
            }
            c if c.is_whitespace() => None,
            '~' => Some(Token::Tilde),
            '&' => Some(Token::And),
            '|' => Some(Token::Or),
            '(' => Some(Token::LParen),
            ')' => Some(Token::RParen),
            'O' => Some(Token::Obligation),
            'P' => Some(Token::Permission),
            '-' => {
                if chars.get(i + 1) == Some(&'>') {
                    i += 1;
                    col += 1;
                    Some(Token::Arrow)
                } else {
                    return Err(DeonticError::Syntax {
                        line: tok_line,
                        col: tok_col,
                        message: "expected `->`".to_string(),
                    });
                }
            }
            c if c.is_ascii_lowercase() => {
                let mut name = String::new();
                while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                    name.push(chars[i]);
                    i += 1;
                    col += 1;
                }
                tokens.push(Spanned {
                    token: Token::Atom(name),
                    line: tok_line,
                    col: tok_col,
                });
                continue;
            }
            other => {
                return Err(DeonticError::Syntax {
                    line: tok_line,
                    col: tok_col,
                    message: format!("unexpected character {other:?}"),
                });
            }
        };
        if let Some(token) = single {
            tokens.push(Spanned {
                token,
                line: tok_line,
                col: tok_col,
            });
        }
        i += 1;
        col += 1;
    }
    tokens.push(Spanned {
        token: Token::Eof,
        line,
        col,
    });
    Ok(tokens)
}

struct Parser {
    tokens: Vec<Spanned>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> &Spanned {
        &self.tokens[self.pos]
    }

    fn bump(&mut self) -> Spanned {
        let tok = self.tokens[self.pos].clone();
        if self.pos + 1 < self.tokens.len() {
            self.pos += 1;
        }
        tok
    }

    fn error(&self, at: &Spanned, message: impl Into<String>) -> DeonticError {
        DeonticError::Syntax {
            line: at.line,
            col: at.col,
            message: message.into(),
        }
    }

    fn expect(&mut self, token: Token, what: &str) -> Result<(), DeonticError> {
        let tok = self.bump();
        if tok.token == token {
            Ok(())
        } else {
            Err(self.error(&tok, format!("expected {what}")))
        }
    }

    fn implication(&mut self) -> Result<ModalFormula, DeonticError> {
        let lhs = self.disjunction()?;
        if self.peek().token == Token::Arrow {
            self.bump();
            let rhs = self.implication()?;
            Ok(lhs.implies(rhs))
        } else {
            Ok(lhs)
        }
    }

    fn disjunction(&mut self) -> Result<ModalFormula, DeonticError> {
        let lhs = self.conjunction()?;
        if self.peek().token == Token::Or {
            self.bump();
            let rhs = self.disjunction()?;
            Ok(lhs.or(rhs))
        } else {
            Ok(lhs)
        }
    }

    fn conjunction(&mut self) -> Result<ModalFormula, DeonticError> {
        let lhs = self.unary()?;
        if self.peek().token == Token::And {
            self.bump();
            let rhs = self.conjunction()?;
            Ok(lhs.and(rhs))
        } else {
            Ok(lhs)
        }
    }

    fn unary(&mut self) -> Result<ModalFormula, DeonticError> {
        let tok = self.bump();
        match tok.token {
            Token::Atom(name) => Ok(ModalFormula::Atom(name)),
            Token::Tilde => Ok(self.unary()?.not()),
            Token::Obligation => {
                self.expect(Token::LParen, "`(` after O")?;
                let inner = self.implication()?;
                self.expect(Token::RParen, "`)`")?;
                Ok(inner.obligatory())
            }
            Token::Permission => {
                self.expect(Token::LParen, "`(` after P")?;
                let inner = self.implication()?;
                self.expect(Token::RParen, "`)`")?;
                Ok(inner.permitted())
            }
            Token::LParen => {
                let inner = self.implication()?;
                self.expect(Token::RParen, "`)`")?;
                Ok(inner)
            }
            _ => Err(self.error(&tok, "expected a formula")),
        }
    }
}

/// Parse a single modal formula.
pub fn parse_modal(text: &str) -> Result<ModalFormula, DeonticError> {
    let tokens = lex(text)?;
    let mut parser = Parser { tokens, pos: 0 };
    let formula = parser.implication()?;
    let tok = parser.bump();
    if tok.token == Token::Eof {
        Ok(formula)
    } else {
        Err(parser.error(&tok, "expected end of input"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_the_prohibition_norm() {
        assert_eq!(
            parse_modal("O(~steal)").unwrap(),
            ModalFormula::atom("steal").not().obligatory()
        );
    }

    #[test]
    fn parses_the_conditional_obligation() {
        assert_eq!(
            parse_modal("bird -> O(flies)").unwrap(),
            ModalFormula::atom("bird").implies(ModalFormula::atom("flies").obligatory())
        );
    }

    #[test]
    fn dangling_paren_is_a_syntax_error() {
        assert!(matches!(parse_modal("("), Err(DeonticError::Syntax { .. })));
    }

    #[test]
    fn precedence_binds_unary_then_and_then_or_then_implies() {
        assert_eq!(
            parse_modal("~p & q | r -> s").unwrap(),
            ModalFormula::atom("p")
                .not()
                .and(ModalFormula::atom("q"))
                .or(ModalFormula::atom("r"))
                .implies(ModalFormula::atom("s"))
        );
    }

    #[test]
    fn implication_is_right_associative() {
        assert_eq!(
            parse_modal("p -> q -> r").unwrap(),
            ModalFormula::atom("p")
                .implies(ModalFormula::atom("q").implies(ModalFormula::atom("r")))
        );
    }

    #[test]
    fn error_positions_point_at_the_offending_token() {
        match parse_modal("p &").unwrap_err() {
            DeonticError::Syntax { line, col, .. } => {
                assert_eq!(line, 1);
                assert_eq!(col, 4);
            }
            other => panic!("expected syntax error, got {other:?}"),
        }
    }
}
