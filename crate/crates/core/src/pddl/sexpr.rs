//! S-expression reader with source positions.

use super::PddlError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Pos {
    pub line: usize,
    pub col: usize,
}

#[derive(Debug, Clone)]
pub enum Sexpr {
    Symbol(String, Pos),
    List(Vec<Sexpr>, Pos),
}

impl Sexpr {
    pub fn pos(&self) -> Pos {
        match self {
            Sexpr::Symbol(_, p) | Sexpr::List(_, p) => *p,
        }
    }

    pub fn as_symbol(&self) -> Option<&str> {
        match self {
            Sexpr::Symbol(s, _) => Some(s),
            Sexpr::List(..) => None,
        }
    }

    pub fn as_list(&self) -> Option<&[Sexpr]> {
        match self {
            Sexpr::List(items, _) => Some(items),
            Sexpr::Symbol(..) => None,
        }
    }

    /// Head symbol of a list, if any.
    pub fn head(&self) -> Option<&str> {
        self.as_list().and_then(|l| l.first()).and_then(Sexpr::as_symbol)
    }
}

/// Parses exactly one top-level expression. Symbols are lower-cased since
/// PDDL is case-insensitive.
pub fn read(text: &str) -> Result<Sexpr, PddlError> {
    let mut stack: Vec<(Vec<Sexpr>, Pos)> = Vec::new();
    let mut result: Option<Sexpr> = None;
    let mut line = 1;
    let mut col = 1;
    let mut chars = text.chars().peekable();
    let mut symbol = String::new();
    let mut symbol_pos = Pos { line, col };

    fn flush(symbol: &mut String, pos: Pos, stack: &mut [(Vec<Sexpr>, Pos)], result: &Option<Sexpr>) -> Result<(), PddlError> {
        if symbol.is_empty() {
            return Ok(());
        }
        let sym = Sexpr::Symbol(std::mem::take(symbol).to_lowercase(), pos);
        match stack.last_mut() {
            Some((items, _)) => {
                items.push(sym);
                Ok(())
            }
            None => Err(syntax(pos, if result.is_some() { "trailing input after expression" } else { "expected `(`" })),
        }
    }

    while let Some(c) = chars.next() {
        let here = Pos { line, col };
        if c == '\n' {
            line += 1;
            col = 1;
        } else {
            col += 1;
        }
        match c {
            ';' => {
                flush(&mut symbol, symbol_pos, &mut stack, &result)?;
                while let Some(&n) = chars.peek() {
                    if n == '\n' {
                        break;
                    }
                    chars.next();
                    col += 1;
                }
            }
            '(' => {
                flush(&mut symbol, symbol_pos, &mut stack, &result)?;
                if stack.is_empty() && result.is_some() {
                    return Err(syntax(here, "trailing input after expression"));
                }
                stack.push((Vec::new(), here));
            }
            ')' => {
                flush(&mut symbol, symbol_pos, &mut stack, &result)?;
                let (items, pos) = stack.pop().ok_or_else(|| syntax(here, "unbalanced `)`"))?;
                let list = Sexpr::List(items, pos);
                match stack.last_mut() {
                    Some((parent, _)) => parent.push(list),
                    None => result = Some(list),
                }
            }
            c if c.is_whitespace() => flush(&mut symbol, symbol_pos, &mut stack, &result)?,
            c => {
                if symbol.is_empty() {
                    symbol_pos = here;
                }
                symbol.push(c);
            }
        }
    }
    flush(&mut symbol, symbol_pos, &mut stack, &result)?;
    if let Some((_, pos)) = stack.last() {
        return Err(syntax(*pos, "unclosed `(`"));
    }
    result.ok_or_else(|| syntax(Pos { line, col }, "empty input"))
}

fn syntax(pos: Pos, msg: &str) -> PddlError {
    PddlError::Syntax { line: pos.line, col: pos.col, message: msg.to_string() }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reads_nested_lists_with_positions() {
        let e = read("; comment\n(define (Domain x)\n  (:predicates (p)))").unwrap();
        let items = e.as_list().unwrap();
        assert_eq!(items[0].as_symbol(), Some("define"));
        assert_eq!(items[1].head(), Some("domain"));
        assert_eq!(items[2].pos(), Pos { line: 3, col: 3 });
    }

    #[test]
    fn reports_unbalanced_parens() {
        match read("(a (b)") {
            Err(PddlError::Syntax { line: 1, col: 1, .. }) => {}
            other => panic!("{other:?}"),
        }
        match read("(a))") {
            Err(PddlError::Syntax { line: 1, col: 4, .. }) => {}
            other => panic!("{other:?}"),
        }
    }
}
