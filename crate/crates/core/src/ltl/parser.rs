use super::{Bound, Formula, LtlError};

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Not,
    And,
    Or,
    LParen,
    RParen,
    /// `[n]` directly after an operator keyword; signed so that negative
    /// bounds are reported rather than rejected as syntax.
    Bound(i64),
}

fn lex(text: &str) -> Result<Vec<(Tok, usize)>, LtlError> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let start = i;
        match c {
            c if c.is_whitespace() => {
                i += 1;
                continue;
            }
            '!' => out.push((Tok::Not, start)),
            '&' => out.push((Tok::And, start)),
            '|' => out.push((Tok::Or, start)),
            '(' => out.push((Tok::LParen, start)),
            ')' => out.push((Tok::RParen, start)),
            '[' => {
                let close = chars[i..]
                    .iter()
                    .position(|&c| c == ']')
                    .map(|p| p + i)
                    .ok_or(LtlError::Syntax {
                        pos: start,
                        msg: "unterminated bound".into(),
                    })?;
                let body: String = chars[i + 1..close].iter().collect();
                let n: i64 = body.trim().parse().map_err(|_| LtlError::Syntax {
                    pos: start,
                    msg: format!("bad bound `{body}`"),
                })?;
                out.push((Tok::Bound(n), start));
                i = close + 1;
                continue;
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                    i += 1;
                }
                out.push((Tok::Ident(chars[start..i].iter().collect()), start));
                continue;
            }
            other => {
                return Err(LtlError::Syntax {
                    pos: start,
                    msg: format!("unexpected character `{other}`"),
                })
            }
        }
        i += 1;
    }
    Ok(out)
}

struct Parser<'a> {
    toks: Vec<(Tok, usize)>,
    pos: usize,
    alphabet: &'a [String],
    end: usize,
}

impl Parser<'_> {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|t| &t.0)
    }

    fn peek_at(&self, k: usize) -> Option<&Tok> {
        self.toks.get(self.pos + k).map(|t| &t.0)
    }

    fn here(&self) -> usize {
        self.toks.get(self.pos).map(|t| t.1).unwrap_or(self.end)
    }

    fn syntax(&self, msg: impl Into<String>) -> LtlError {
        LtlError::Syntax {
            pos: self.here(),
            msg: msg.into(),
        }
    }

    fn is_letter(&self, name: &str) -> bool {
        self.alphabet.iter().any(|a| a == name)
    }

    fn starts_operand(tok: Option<&Tok>) -> bool {
        matches!(tok, Some(Tok::Ident(_) | Tok::Not | Tok::LParen))
    }

    fn bound(&mut self) -> Result<Bound, LtlError> {
        if let Some(&Tok::Bound(n)) = self.peek() {
            let pos = self.here();
            self.pos += 1;
            if n < 0 {
                return Err(LtlError::NegativeBound { pos });
            }
            let n = u32::try_from(n).map_err(|_| LtlError::Syntax {
                pos,
                msg: "bound too large".into(),
            })?;
            return Ok(Bound::Finite(n));
        }
        Ok(Bound::Infinite)
    }

    fn or(&mut self) -> Result<Formula, LtlError> {
        let mut lhs = self.and()?;
        while self.peek() == Some(&Tok::Or) {
            self.pos += 1;
            lhs = Formula::or(lhs, self.and()?);
        }
        Ok(lhs)
    }

    fn and(&mut self) -> Result<Formula, LtlError> {
        let mut lhs = self.until()?;
        while self.peek() == Some(&Tok::And) {
            self.pos += 1;
            lhs = Formula::and(lhs, self.until()?);
        }
        Ok(lhs)
    }

    fn until(&mut self) -> Result<Formula, LtlError> {
        let lhs = self.unary()?;
        match self.peek() {
            Some(Tok::Ident(k)) if k == "U" => {
                self.pos += 1;
                let b = self.bound()?;
                let rhs = self.until()?;
                Ok(Formula::until(lhs, rhs, b))
            }
            Some(Tok::Ident(k)) if k == "W" => {
                self.pos += 1;
                if matches!(self.peek(), Some(Tok::Bound(_))) {
                    return Err(self.syntax("weak until takes no bound"));
                }
                let rhs = self.until()?;
                Ok(Formula::weak_until(lhs, rhs))
            }
            _ => Ok(lhs),
        }
    }

    /// Whether the keyword at the cursor acts as a unary operator rather
    /// than naming a letter.
    fn keyword_is_operator(&self, name: &str) -> bool {
        let after = self.peek_at(1);
        if matches!(after, Some(Tok::Bound(_))) {
            return true;
        }
        if !self.is_letter(name) {
            return true;
        }
        match after {
            Some(Tok::Ident(next)) if next == "U" || next == "W" => false,
            other => Self::starts_operand(other),
        }
    }

    fn unary(&mut self) -> Result<Formula, LtlError> {
        let Some(tok) = self.peek().cloned() else {
            return Err(self.syntax("unexpected end of formula"));
        };
        match tok {
            Tok::Not => {
                self.pos += 1;
                Ok(Formula::not(self.unary()?))
            }
            Tok::LParen => {
                self.pos += 1;
                let inner = self.or()?;
                if self.peek() != Some(&Tok::RParen) {
                    return Err(self.syntax("expected `)`"));
                }
                self.pos += 1;
                Ok(inner)
            }
            Tok::Ident(name) => {
                let pos = self.here();
                if matches!(name.as_str(), "X" | "F" | "G") && self.keyword_is_operator(&name) {
                    self.pos += 1;
                    let b = if name == "X" {
                        if matches!(self.peek(), Some(Tok::Bound(_))) {
                            return Err(self.syntax("next takes no bound"));
                        }
                        Bound::Infinite
                    } else {
                        self.bound()?
                    };
                    let body = self.unary()?;
                    return Ok(match name.as_str() {
                        "X" => Formula::next(body),
                        "F" => Formula::eventually(body, b),
                        _ => Formula::always(body, b),
                    });
                }
                self.pos += 1;
                match name.as_str() {
                    "true" => Ok(Formula::True),
                    "false" => Ok(Formula::False),
                    _ => match self.alphabet.iter().position(|a| *a == name) {
                        Some(i) => Ok(Formula::Atom(i)),
                        None => Err(LtlError::UnknownLetter { name, pos }),
                    },
                }
            }
            _ => Err(self.syntax("expected an operand")),
        }
    }
}

/// Parse LTL text over `alphabet`.
///
/// Operators: `! & | X U W F G true false`, bounds `U[n]`, `F[n]`, `G[n]`.
/// Unary operators bind tightest, then `U`/`W` (right associative), then
/// `&`, then `|`. A letter named like a keyword is read as a letter where an
/// operator would not make sense, e.g. `(G)` or `S U G`.
pub fn parse_ltl(text: &str, alphabet: &[String]) -> Result<Formula, LtlError> {
    let toks = lex(text)?;
    let mut p = Parser {
        toks,
        pos: 0,
        alphabet,
        end: text.chars().count(),
    };
    let f = p.or()?;
    if p.pos != p.toks.len() {
        return Err(p.syntax("unexpected trailing input"));
    }
    Ok(f)
}

fn bound_suffix(b: Bound) -> String {
    match b {
        Bound::Finite(n) => format!("[{n}]"),
        Bound::Infinite => String::new(),
    }
}

/// Fully parenthesised text that parses back to the same tree.
pub fn unparse(f: &Formula, alphabet: &[String]) -> String {
    match f {
        Formula::True => "true".into(),
        Formula::False => "false".into(),
        Formula::Atom(a) => {
            let name = &alphabet[*a];
            if matches!(name.as_str(), "X" | "F" | "G" | "U" | "W" | "true" | "false") {
                format!("({name})")
            } else {
                name.clone()
            }
        }
        Formula::Not(g) => format!("!{}", unparse(g, alphabet)),
        Formula::And(a, b) => format!("({} & {})", unparse(a, alphabet), unparse(b, alphabet)),
        Formula::Or(a, b) => format!("({} | {})", unparse(a, alphabet), unparse(b, alphabet)),
        Formula::Next(g) => format!("X {}", unparse(g, alphabet)),
        Formula::Until(a, b, k) => format!(
            "({} U{} {})",
            unparse(a, alphabet),
            bound_suffix(*k),
            unparse(b, alphabet)
        ),
        Formula::WeakUntil(a, b) => format!("({} W {})", unparse(a, alphabet), unparse(b, alphabet)),
        Formula::Eventually(g, k) => format!("F{} {}", bound_suffix(*k), unparse(g, alphabet)),
        Formula::Always(g, k) => format!("G{} {}", bound_suffix(*k), unparse(g, alphabet)),
    }
}
