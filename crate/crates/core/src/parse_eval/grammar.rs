//! Recursive-descent parser for the output grammar:
//!
//! ```text
//! result = "[" [call {"," call}] [","] "]"
//! call   = NAME "(" [kw {"," kw} [","]] ")"
//! kw     = NAME "=" (string | list)
//! list   = "[" [string {"," string}] [","] "]"
//! ```
//!
//! Strings take either quote style with Python escapes. Whitespace,
//! including newlines, may separate any two tokens. A surrounding code
//! fence and a leading `result =` are removed first.

use std::fmt;

use crate::pylit;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum KwValue {
    Str(String),
    List(Vec<String>),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Call {
    pub name: String,
    pub kwargs: Vec<(String, KwValue)>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SyntaxError {
    /// Character offset into the input after fence and prefix stripping.
    pub offset: usize,
    pub message: String,
}

impl fmt::Display for SyntaxError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "at offset {}: {}", self.offset, self.message)
    }
}

/// Removes a surrounding ``` fence (with optional language tag) and a
/// leading `result =`.
pub fn strip_wrapping(raw: &str) -> &str {
    let mut s = raw.trim();
    if let Some(rest) = s.strip_prefix("```") {
        let body = match rest.find('\n') {
            Some(nl) if rest[..nl].trim().chars().all(|c| c.is_ascii_alphanumeric()) => &rest[nl + 1..],
            _ => rest,
        };
        s = body.trim_end().strip_suffix("```").unwrap_or(body).trim();
    }
    if let Some(rest) = s.strip_prefix("result") {
        let rest = rest.trim_start();
        if let Some(value) = rest.strip_prefix('=') {
            if !value.starts_with('=') {
                s = value.trim_start();
            }
        }
    }
    s
}

struct Parser {
    chars: Vec<char>,
    pos: usize,
}

impl Parser {
    fn err<T>(&self, message: impl Into<String>) -> Result<T, SyntaxError> {
        Err(SyntaxError {
            offset: self.pos,
            message: message.into(),
        })
    }

    fn skip_ws(&mut self) {
        while self.chars.get(self.pos).is_some_and(|c| c.is_whitespace()) {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<char> {
        self.skip_ws();
        self.chars.get(self.pos).copied()
    }

    fn expect(&mut self, want: char) -> Result<(), SyntaxError> {
        match self.peek() {
            Some(c) if c == want => {
                self.pos += 1;
                Ok(())
            }
            Some(c) => self.err(format!("expected `{want}`, found `{c}`")),
            None => self.err(format!("expected `{want}`, found end of input")),
        }
    }

    /// Consumes `c` if it is next.
    fn eat(&mut self, c: char) -> bool {
        if self.peek() == Some(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn name(&mut self) -> Result<String, SyntaxError> {
        match self.peek() {
            Some(c) if c.is_alphabetic() || c == '_' => {}
            Some(c) => return self.err(format!("expected a name, found `{c}`")),
            None => return self.err("expected a name, found end of input"),
        }
        let start = self.pos;
        while self
            .chars
            .get(self.pos)
            .is_some_and(|c| c.is_alphanumeric() || *c == '_')
        {
            self.pos += 1;
        }
        Ok(self.chars[start..self.pos].iter().collect())
    }

    fn string(&mut self) -> Result<String, SyntaxError> {
        self.skip_ws();
        match pylit::scan_string(&self.chars, self.pos) {
            Ok((s, end)) => {
                self.pos = end;
                Ok(s)
            }
            Err(message) => self.err(message),
        }
    }

    /// Comma-separated items up to `close`, allowing a trailing comma.
    fn sequence<T>(
        &mut self,
        close: char,
        mut item: impl FnMut(&mut Self) -> Result<T, SyntaxError>,
    ) -> Result<Vec<T>, SyntaxError> {
        let mut items = Vec::new();
        loop {
            if self.eat(close) {
                return Ok(items);
            }
            items.push(item(self)?);
            if self.eat(close) {
                return Ok(items);
            }
            if !self.eat(',') {
                return match self.peek() {
                    Some(c) => self.err(format!("expected `,` or `{close}`, found `{c}`")),
                    None => self.err(format!("expected `,` or `{close}`, found end of input")),
                };
            }
        }
    }

    fn value(&mut self) -> Result<KwValue, SyntaxError> {
        match self.peek() {
            Some('"' | '\'') => self.string().map(KwValue::Str),
            Some('[') => {
                self.pos += 1;
                self.sequence(']', |p| match p.peek() {
                    Some('"' | '\'') => p.string(),
                    Some(c) => p.err(format!("list items must be strings, found `{c}`")),
                    None => p.err("unterminated list"),
                })
                .map(KwValue::List)
            }
            Some(c) => self.err(format!("expected a string or list, found `{c}`")),
            None => self.err("expected a value, found end of input"),
        }
    }

    fn call(&mut self) -> Result<Call, SyntaxError> {
        let name = self.name()?;
        self.expect('(')?;
        let kwargs = self.sequence(')', |p| {
            let key = p.name()?;
            p.expect('=')?;
            Ok((key, p.value()?))
        })?;
        Ok(Call { name, kwargs })
    }

    fn result(&mut self) -> Result<Vec<Call>, SyntaxError> {
        self.expect('[')?;
        let calls = self.sequence(']', Self::call)?;
        if let Some(c) = self.peek() {
            return self.err(format!("unexpected `{c}` after the result list"));
        }
        Ok(calls)
    }
}

/// Parses a generation into constructor calls.
pub fn parse_calls(raw: &str) -> Result<Vec<Call>, SyntaxError> {
    let mut p = Parser {
        chars: strip_wrapping(raw).chars().collect(),
        pos: 0,
    };
    p.result()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn extradite_output_with_odd_spacing() {
        let raw = "[Extradite(\n    mention=\"extradited\",\n    person=[\"him\"], \n    destination=[\"Hague\"], \n    agent=[\"government\"],\n    origin=[]\n)]";
        let calls = parse_calls(raw).unwrap();
        assert_eq!(calls.len(), 1);
        assert_eq!(calls[0].name, "Extradite");
        assert_eq!(calls[0].kwargs[0], ("mention".into(), KwValue::Str("extradited".into())));
        assert_eq!(calls[0].kwargs[4], ("origin".into(), KwValue::List(vec![])));
    }

    #[test]
    fn wrappers_and_trailing_commas() {
        let raw = "```python\nresult = [A(mention='x', r=['a', \"b\",],),]\n```";
        let calls = parse_calls(raw).unwrap();
        assert_eq!(calls[0].kwargs[1].1, KwValue::List(vec!["a".into(), "b".into()]));
        assert_eq!(parse_calls("[]").unwrap(), vec![]);
        assert_eq!(parse_calls(" result=[ ] ").unwrap(), vec![]);
        assert_eq!(parse_calls("[A()]").unwrap()[0].kwargs, vec![]);
    }

    #[test]
    fn rejects() {
        for bad in [
            "",
            "[",
            "[A(mention=\"x\")",
            "[A(mention=x)]",
            "[A(mention=\"x\") B()]",
            "[A(mention=[1])]",
            "[A(mention=\"x\")] trailing",
            "[,]",
            "[A(,)]",
            "[A(mention=\"x\"), , ]",
            "None",
            "[A(mention=\"unterminated)]",
            "result == []",
        ] {
            assert!(parse_calls(bad).is_err(), "accepted {bad:?}");
        }
    }
}
