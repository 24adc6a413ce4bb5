//! Positioned s-expression reader shared by the domain, problem and constraint parsers.

use super::ParseError;

/// Bound on list nesting so hostile input cannot exhaust the stack.
pub const MAX_DEPTH: usize = 128;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Pos {
    pub line: usize,
    pub col: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SExpr {
    Symbol(String, Pos),
    List(Vec<SExpr>, Pos),
}

impl SExpr {
    pub fn pos(&self) -> Pos {
        match self {
            SExpr::Symbol(_, p) | SExpr::List(_, p) => *p,
        }
    }

    pub fn as_symbol(&self) -> Option<&str> {
        match self {
            SExpr::Symbol(s, _) => Some(s),
            SExpr::List(..) => None,
        }
    }

    pub fn as_list(&self) -> Option<&[SExpr]> {
        match self {
            SExpr::List(items, _) => Some(items),
            SExpr::Symbol(..) => None,
        }
    }

    /// Lowercased head symbol of a list, if any.
    pub fn head(&self) -> Option<String> {
        self.as_list()?
            .first()?
            .as_symbol()
            .map(str::to_ascii_lowercase)
    }

    pub fn is_keyword(&self, kw: &str) -> bool {
        self.as_symbol().is_some_and(|s| s.eq_ignore_ascii_case(kw))
    }
}

pub fn syntax(pos: Pos, message: impl Into<String>) -> ParseError {
    ParseError::Syntax {
        line: pos.line,
        col: pos.col,
        message: message.into(),
    }
}

struct Reader<'a> {
    chars: std::iter::Peekable<std::str::Chars<'a>>,
    line: usize,
    col: usize,
}

impl Reader<'_> {
    fn pos(&self) -> Pos {
        Pos {
            line: self.line,
            col: self.col,
        }
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.chars.next()?;
        if c == '\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(c)
    }

    fn skip_trivia(&mut self) {
        while let Some(&c) = self.chars.peek() {
            if c.is_whitespace() {
                self.bump();
            } else if c == ';' {
                while let Some(&c) = self.chars.peek() {
                    if c == '\n' {
                        break;
                    }
                    self.bump();
                }
            } else {
                break;
            }
        }
    }

    fn read(&mut self, depth: usize) -> Result<Option<SExpr>, ParseError> {
        self.skip_trivia();
        let pos = self.pos();
        if depth > MAX_DEPTH {
            return Err(syntax(pos, format!("nesting deeper than {MAX_DEPTH}")));
        }
        match self.chars.peek().copied() {
            None => Ok(None),
            Some(')') => Err(syntax(pos, "unexpected ')'")),
            Some('(') => {
                self.bump();
                let mut items = Vec::new();
                loop {
                    self.skip_trivia();
                    match self.chars.peek() {
                        None => return Err(syntax(pos, "unclosed '('")),
                        Some(')') => {
                            self.bump();
                            return Ok(Some(SExpr::List(items, pos)));
                        }
                        Some(_) => {
                            let item = self.read(depth + 1)?.expect("peeked a non-empty input");
                            items.push(item);
                        }
                    }
                }
            }
            Some(_) => {
                let mut text = String::new();
                while let Some(&c) = self.chars.peek() {
                    if c.is_whitespace() || c == '(' || c == ')' || c == ';' {
                        break;
                    }
                    text.push(c);
                    self.bump();
                }
                Ok(Some(SExpr::Symbol(text, pos)))
            }
        }
    }
}

/// Reads every top-level expression in `text`.
pub fn read_all(text: &str) -> Result<Vec<SExpr>, ParseError> {
    let mut reader = Reader {
        chars: text.chars().peekable(),
        line: 1,
        col: 1,
    };
    let mut out = Vec::new();
    while let Some(e) = reader.read(0)? {
        out.push(e);
    }
    Ok(out)
}

/// Reads exactly one top-level expression.
pub fn read_one(text: &str) -> Result<SExpr, ParseError> {
    let mut all = read_all(text)?;
    match all.len() {
        0 => Err(syntax(Pos { line: 1, col: 1 }, "empty input")),
        1 => Ok(all.pop().expect("len checked")),
        _ => Err(syntax(all[1].pos(), "trailing input after expression")),
    }
}
