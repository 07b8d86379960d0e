//! A minimal s-expression reader: atoms and lists, `;` comments.

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Sexp {
    Atom { text: String, line: usize },
    List { items: Vec<Sexp>, line: usize },
}

impl Sexp {
    pub fn line(&self) -> usize {
        match self {
            Sexp::Atom { line, .. } | Sexp::List { line, .. } => *line,
        }
    }

    pub fn atom(&self) -> Option<&str> {
        match self {
            Sexp::Atom { text, .. } => Some(text),
            _ => None,
        }
    }

    pub fn list(&self) -> Option<&[Sexp]> {
        match self {
            Sexp::List { items, .. } => Some(items),
            _ => None,
        }
    }

    /// The atom, or an error naming `what`.
    pub fn expect_atom(&self, what: &str) -> Result<&str> {
        self.atom()
            .ok_or_else(|| Error::parse(self.line(), format!("expected {what}, found a list")))
    }

    pub fn expect_list(&self, what: &str) -> Result<&[Sexp]> {
        self.list()
            .ok_or_else(|| Error::parse(self.line(), format!("expected {what}, found an atom")))
    }

    /// A list whose head is an atom: `(head rest..)`.
    pub fn form(&self) -> Result<(&str, &[Sexp])> {
        let items = self.expect_list("a form")?;
        match items.split_first() {
            Some((h, rest)) => Ok((h.expect_atom("a form name")?, rest)),
            None => Err(Error::parse(self.line(), "empty form")),
        }
    }
}

/// All top-level expressions of `text`.
pub fn parse_all(text: &str) -> Result<Vec<Sexp>> {
    let mut stack: Vec<(Vec<Sexp>, usize)> = vec![(Vec::new(), 0)];
    let mut atom = String::new();
    let mut atom_line = 0;
    let mut line = 1;
    let mut comment = false;
    for ch in text.chars().chain(std::iter::once('\n')) {
        if comment {
            if ch == '\n' {
                comment = false;
                line += 1;
            }
            continue;
        }
        let delim = ch.is_whitespace() || ch == '(' || ch == ')' || ch == ';';
        if delim && !atom.is_empty() {
            let text = std::mem::take(&mut atom);
            stack.last_mut().unwrap().0.push(Sexp::Atom { text, line: atom_line });
        }
        match ch {
            '(' => stack.push((Vec::new(), line)),
            ')' => {
                if stack.len() == 1 {
                    return Err(Error::parse(line, "unbalanced `)`"));
                }
                let (items, start) = stack.pop().unwrap();
                stack.last_mut().unwrap().0.push(Sexp::List { items, line: start });
            }
            ';' => comment = true,
            '\n' => line += 1,
            c if c.is_whitespace() => {}
            c => {
                if atom.is_empty() {
                    atom_line = line;
                }
                atom.push(c);
            }
        }
    }
    if stack.len() > 1 {
        return Err(Error::parse(stack.last().unwrap().1, "unclosed `(`"));
    }
    Ok(stack.pop().unwrap().0)
}

/// Exactly one expression.
pub fn parse_one(text: &str) -> Result<Sexp> {
    let mut all = parse_all(text)?;
    match all.len() {
        1 => Ok(all.pop().unwrap()),
        0 => Err(Error::parse(1, "empty document")),
        _ => Err(Error::parse(all[1].line(), "more than one expression")),
    }
}
