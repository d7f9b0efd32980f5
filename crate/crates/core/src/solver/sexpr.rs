//! Text form of constraints used by the `solve` debug command and in reports.
//!
//! ```text
//! formula := true | false
//!          | (and formula*) | (or formula*) | (not formula) | (=> formula formula)
//!          | (cmp term term)            cmp ∈ { <  <=  >  >=  =  ==  != }
//! term    := integer | symbol
//!          | (+ term*) | (- term term*) | (- term) | (* term term*)
//!          | (div term term) | (mod term term) | (select symbol term)
//! ```

use super::{CmpOp, Constraint, LinExpr};
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SexprError {
    #[error("unexpected end of input")]
    Eof,
    #[error("unexpected `{0}` at offset {1}")]
    Unexpected(String, usize),
    #[error("unknown operator `{0}`")]
    UnknownOp(String),
    #[error("trailing input at offset {0}")]
    Trailing(usize),
}

#[derive(Debug, Clone, PartialEq)]
enum Sx {
    Atom(String, usize),
    List(Vec<Sx>, usize),
}

fn tokenize(src: &str) -> Vec<(String, usize)> {
    let mut out = Vec::new();
    let mut cur = String::new();
    let mut start = 0;
    for (i, ch) in src.char_indices() {
        if ch == '(' || ch == ')' || ch.is_whitespace() {
            if !cur.is_empty() {
                out.push((std::mem::take(&mut cur), start));
            }
            if !ch.is_whitespace() {
                out.push((ch.to_string(), i));
            }
        } else {
            if cur.is_empty() {
                start = i;
            }
            cur.push(ch);
        }
    }
    if !cur.is_empty() {
        out.push((cur, start));
    }
    out
}

fn read(tokens: &[(String, usize)], pos: &mut usize) -> Result<Sx, SexprError> {
    let (tok, at) = tokens.get(*pos).ok_or(SexprError::Eof)?;
    *pos += 1;
    match tok.as_str() {
        "(" => {
            let mut items = Vec::new();
            loop {
                match tokens.get(*pos) {
                    None => return Err(SexprError::Eof),
                    Some((t, _)) if t == ")" => {
                        *pos += 1;
                        return Ok(Sx::List(items, *at));
                    }
                    Some(_) => items.push(read(tokens, pos)?),
                }
            }
        }
        ")" => Err(SexprError::Unexpected(")".into(), *at)),
        _ => Ok(Sx::Atom(tok.clone(), *at)),
    }
}

pub fn parse_constraint(src: &str) -> Result<Constraint, SexprError> {
    let tokens = tokenize(src);
    let mut pos = 0;
    let sx = read(&tokens, &mut pos)?;
    if let Some((_, at)) = tokens.get(pos) {
        return Err(SexprError::Trailing(*at));
    }
    formula(&sx)
}

pub fn parse_term(src: &str) -> Result<LinExpr, SexprError> {
    let tokens = tokenize(src);
    let mut pos = 0;
    let sx = read(&tokens, &mut pos)?;
    if let Some((_, at)) = tokens.get(pos) {
        return Err(SexprError::Trailing(*at));
    }
    term(&sx)
}

fn formula(sx: &Sx) -> Result<Constraint, SexprError> {
    match sx {
        Sx::Atom(a, at) => match a.as_str() {
            "true" => Ok(Constraint::True),
            "false" => Ok(Constraint::False),
            _ => Err(SexprError::Unexpected(a.clone(), *at)),
        },
        Sx::List(items, at) => {
            let (head, args) = match items.split_first() {
                Some((Sx::Atom(h, _), rest)) => (h.as_str(), rest),
                _ => return Err(SexprError::Unexpected("(".into(), *at)),
            };
            let op = match head {
                "and" => return Ok(Constraint::and(args.iter().map(formula).collect::<Result<Vec<_>, _>>()?)),
                "or" => return Ok(Constraint::or(args.iter().map(formula).collect::<Result<Vec<_>, _>>()?)),
                "not" => {
                    let [a] = args else { return Err(SexprError::Unexpected("not".into(), *at)) };
                    return Ok(formula(a)?.negate());
                }
                "=>" => {
                    let [a, b] = args else { return Err(SexprError::Unexpected("=>".into(), *at)) };
                    return Ok(formula(a)?.implies(&formula(b)?));
                }
                "<" => CmpOp::Lt,
                "<=" => CmpOp::Le,
                ">" => CmpOp::Gt,
                ">=" => CmpOp::Ge,
                "=" | "==" => CmpOp::Eq,
                "!=" | "distinct" => CmpOp::Ne,
                other => return Err(SexprError::UnknownOp(other.to_string())),
            };
            let [l, r] = args else { return Err(SexprError::Unexpected(head.into(), *at)) };
            Ok(Constraint::cmp(&term(l)?, op, &term(r)?))
        }
    }
}

fn term(sx: &Sx) -> Result<LinExpr, SexprError> {
    match sx {
        Sx::Atom(a, at) => {
            if let Ok(n) = a.parse::<i64>() {
                Ok(LinExpr::constant(n))
            } else if a.chars().next().is_some_and(|c| c.is_ascii_digit()) {
                Err(SexprError::Unexpected(a.clone(), *at))
            } else {
                Ok(LinExpr::var(a.clone()))
            }
        }
        Sx::List(items, at) => {
            let (head, args) = match items.split_first() {
                Some((Sx::Atom(h, _), rest)) => (h.as_str(), rest),
                _ => return Err(SexprError::Unexpected("(".into(), *at)),
            };
            let terms = || args.iter().map(term).collect::<Result<Vec<_>, _>>();
            match head {
                "+" => Ok(terms()?.iter().fold(LinExpr::constant(0), |a, b| a.add(b))),
                "-" => {
                    let ts = terms()?;
                    match ts.split_first() {
                        None => Err(SexprError::Unexpected("-".into(), *at)),
                        Some((first, [])) => Ok(first.neg()),
                        Some((first, rest)) => Ok(rest.iter().fold(first.clone(), |a, b| a.sub(b))),
                    }
                }
                "*" => {
                    let ts = terms()?;
                    let Some((first, rest)) = ts.split_first() else {
                        return Err(SexprError::Unexpected("*".into(), *at));
                    };
                    Ok(rest.iter().fold(first.clone(), |a, b| a.mul(b)))
                }
                "div" | "mod" => {
                    let ts = terms()?;
                    let [a, b] = &ts[..] else { return Err(SexprError::Unexpected(head.into(), *at)) };
                    Ok(if head == "div" { a.div(b) } else { a.rem(b) })
                }
                "select" => {
                    let [Sx::Atom(buf, _), off] = args else {
                        return Err(SexprError::Unexpected("select".into(), *at));
                    };
                    Ok(LinExpr::select(buf.clone(), term(off)?))
                }
                other => Err(SexprError::UnknownOp(other.to_string())),
            }
        }
    }
}
