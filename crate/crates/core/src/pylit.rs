//! Python string literals: canonical quoting for rendered code and a scanner
//! that decodes the escapes Python itself accepts.

use std::fmt::Write;

/// Double-quoted literal with backslash escapes. Non-ASCII text is kept as is.
pub fn quote(s: &str) -> String {
    quote_with(s, '"')
}

/// Python `repr()` of a `str`: single quotes unless the text holds a single
/// quote and no double quote.
pub fn repr(s: &str) -> String {
    let q = if s.contains('\'') && !s.contains('"') {
        '"'
    } else {
        '\''
    };
    quote_with(s, q)
}

fn quote_with(s: &str, q: char) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push(q);
    for c in s.chars() {
        match c {
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            '\t' => out.push_str("\\t"),
            c if c == q => {
                out.push('\\');
                out.push(c);
            }
            c if (c as u32) < 0x20 || c as u32 == 0x7f => {
                let _ = write!(out, "\\x{:02x}", c as u32);
            }
            c => out.push(c),
        }
    }
    out.push(q);
    out
}

/// A `Python list[str]` repr, e.g. `['x', 'y']`.
pub fn repr_list<S: AsRef<str>>(items: &[S]) -> String {
    let inner: Vec<String> = items.iter().map(|s| repr(s.as_ref())).collect();
    format!("[{}]", inner.join(", "))
}

/// Scans a quoted literal starting at `chars[start]` (which must be `'` or
/// `"`). Returns the decoded text and the index just past the closing quote.
pub fn scan_string(chars: &[char], start: usize) -> Result<(String, usize), String> {
    let quote = match chars.get(start) {
        Some(&c @ ('"' | '\'')) => c,
        _ => return Err(format!("expected a string literal at offset {start}")),
    };
    let mut out = String::new();
    let mut i = start + 1;
    loop {
        let Some(&c) = chars.get(i) else {
            return Err(format!("unterminated string starting at offset {start}"));
        };
        i += 1;
        match c {
            c if c == quote => return Ok((out, i)),
            '\n' | '\r' => {
                return Err(format!("line break inside string starting at offset {start}"))
            }
            '\\' => {
                let Some(&e) = chars.get(i) else {
                    return Err(format!("unterminated string starting at offset {start}"));
                };
                i += 1;
                match e {
                    '\n' => {}
                    '\\' => out.push('\\'),
                    '\'' => out.push('\''),
                    '"' => out.push('"'),
                    'n' => out.push('\n'),
                    'r' => out.push('\r'),
                    't' => out.push('\t'),
                    'a' => out.push('\x07'),
                    'b' => out.push('\x08'),
                    'f' => out.push('\x0c'),
                    'v' => out.push('\x0b'),
                    '0'..='7' => {
                        let mut value = e.to_digit(8).unwrap();
                        let mut taken = 1;
                        while taken < 3 {
                            match chars.get(i).and_then(|d| d.to_digit(8)) {
                                Some(d) => {
                                    value = value * 8 + d;
                                    i += 1;
                                    taken += 1;
                                }
                                None => break,
                            }
                        }
                        out.push(char::from_u32(value).unwrap_or('\u{fffd}'));
                    }
                    'x' | 'u' | 'U' => {
                        let width = match e {
                            'x' => 2,
                            'u' => 4,
                            _ => 8,
                        };
                        let digits: String = chars.get(i..i + width).unwrap_or(&[]).iter().collect();
                        if digits.chars().count() != width
                            || !digits.chars().all(|d| d.is_ascii_hexdigit())
                        {
                            return Err(format!("truncated \\{e} escape at offset {}", i - 2));
                        }
                        let value = u32::from_str_radix(&digits, 16).unwrap();
                        let ch = char::from_u32(value)
                            .ok_or_else(|| format!("invalid code point \\{e}{digits}"))?;
                        out.push(ch);
                        i += width;
                    }
                    // Python keeps unrecognized escapes verbatim.
                    other => {
                        out.push('\\');
                        out.push(other);
                    }
                }
            }
            c => out.push(c),
        }
    }
}
