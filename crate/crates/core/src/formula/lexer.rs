use std::fmt;

use thiserror::Error;

use crate::ingest::address::{column_index, MAX_ROW};

/// Byte range into the formula text (`start..end`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct Span {
    pub start: usize,
    pub end: usize,
}

impl Span {
    pub fn new(start: usize, end: usize) -> Self {
        Span { start, end }
    }

    pub fn cover(self, other: Span) -> Span {
        Span::new(self.start.min(other.start), self.end.max(other.end))
    }

    pub fn slice(self, text: &str) -> &str {
        &text[self.start..self.end]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TokenKind {
    Number,
    String,
    Boolean,
    ErrorLiteral,
    Identifier,
    CellRef,
    RangeSep,
    /// `,` between arguments or array items; `;` between array rows.
    ArgSep,
    Operator,
    OpenParen,
    CloseParen,
    OpenBrace,
    CloseBrace,
    SheetPrefix,
    ExternalPrefix,
    Percent,
    /// `Table1[Column]` style references. Recognized so they can be rejected cleanly.
    StructuredRef,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token<'a> {
    pub kind: TokenKind,
    pub lexeme: &'a str,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("lex error at offset {offset}: {message}")]
pub struct LexError {
    pub offset: usize,
    pub message: String,
}

/// The seven standard error values.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, serde::Serialize, serde::Deserialize)]
pub enum ErrorCode {
    Null,
    Div0,
    Value,
    Ref,
    Name,
    Num,
    NA,
}

impl ErrorCode {
    pub const ALL: [ErrorCode; 7] = [
        ErrorCode::Null,
        ErrorCode::Div0,
        ErrorCode::Value,
        ErrorCode::Ref,
        ErrorCode::Name,
        ErrorCode::Num,
        ErrorCode::NA,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ErrorCode::Null => "#NULL!",
            ErrorCode::Div0 => "#DIV/0!",
            ErrorCode::Value => "#VALUE!",
            ErrorCode::Ref => "#REF!",
            ErrorCode::Name => "#NAME?",
            ErrorCode::Num => "#NUM!",
            ErrorCode::NA => "#N/A",
        }
    }

    pub fn parse(text: &str) -> Option<ErrorCode> {
        Self::ALL
            .into_iter()
            .find(|c| c.as_str().eq_ignore_ascii_case(text.trim()))
    }
}

impl fmt::Display for ErrorCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

fn is_ident_byte(b: u8) -> bool {
    b.is_ascii_alphanumeric() || b == b'_' || b == b'.' || b == b'\\' || b >= 0x80
}

fn is_space(b: u8) -> bool {
    matches!(b, b' ' | b'\t' | b'\r' | b'\n')
}

/// Tokenize formula text (without the leading `=`).
pub fn tokenize(text: &str) -> Result<Vec<Token<'_>>, LexError> {
    Lexer {
        text,
        bytes: text.as_bytes(),
        pos: 0,
        tokens: Vec::new(),
    }
    .run()
}

struct Lexer<'a> {
    text: &'a str,
    bytes: &'a [u8],
    pos: usize,
    tokens: Vec<Token<'a>>,
}

impl<'a> Lexer<'a> {
    fn run(mut self) -> Result<Vec<Token<'a>>, LexError> {
        while self.pos < self.bytes.len() {
            let b = self.bytes[self.pos];
            if is_space(b) {
                self.pos += 1;
                continue;
            }
            let start = self.pos;
            match b {
                b'"' => self.string()?,
                b'#' => self.error_literal()?,
                b'\'' => self.quoted_sheet()?,
                b'[' => self.bracket()?,
                b'(' => self.single(TokenKind::OpenParen),
                b')' => self.single(TokenKind::CloseParen),
                b'{' => self.single(TokenKind::OpenBrace),
                b'}' => self.single(TokenKind::CloseBrace),
                b',' | b';' => self.single(TokenKind::ArgSep),
                b':' => self.single(TokenKind::RangeSep),
                b'%' => self.single(TokenKind::Percent),
                b'+' | b'-' | b'*' | b'/' | b'^' | b'&' | b'=' => self.single(TokenKind::Operator),
                b'<' => {
                    let len = if matches!(self.peek(1), Some(b'=') | Some(b'>')) {
                        2
                    } else {
                        1
                    };
                    self.emit(TokenKind::Operator, start, start + len);
                }
                b'>' => {
                    let len = if self.peek(1) == Some(b'=') { 2 } else { 1 };
                    self.emit(TokenKind::Operator, start, start + len);
                }
                b'$' => {
                    if !self.try_reference() {
                        return Err(self.error(start, "'$' outside a cell reference"));
                    }
                }
                b'0'..=b'9' | b'.' => {
                    if !self.try_reference() {
                        self.number()?;
                    }
                }
                _ if is_ident_byte(b) => self.word()?,
                _ => {
                    let ch = self.text[start..].chars().next().unwrap_or('?');
                    return Err(self.error(start, &format!("unexpected character {ch:?}")));
                }
            }
        }
        Ok(self.tokens)
    }

    fn peek(&self, ahead: usize) -> Option<u8> {
        self.bytes.get(self.pos + ahead).copied()
    }

    fn error(&self, offset: usize, message: &str) -> LexError {
        LexError {
            offset,
            message: message.to_string(),
        }
    }

    fn emit(&mut self, kind: TokenKind, start: usize, end: usize) {
        self.tokens.push(Token {
            kind,
            lexeme: &self.text[start..end],
            span: Span::new(start, end),
        });
        self.pos = end;
    }

    fn single(&mut self, kind: TokenKind) {
        self.emit(kind, self.pos, self.pos + 1);
    }

    fn string(&mut self) -> Result<(), LexError> {
        let start = self.pos;
        let mut i = start + 1;
        loop {
            match self.bytes.get(i) {
                None => return Err(self.error(start, "unterminated string")),
                Some(b'"') if self.bytes.get(i + 1) == Some(&b'"') => i += 2,
                Some(b'"') => break,
                Some(_) => i += 1,
            }
        }
        self.emit(TokenKind::String, start, i + 1);
        Ok(())
    }

    fn error_literal(&mut self) -> Result<(), LexError> {
        let start = self.pos;
        let rest = &self.text[start..];
        for code in ErrorCode::ALL {
            let lit = code.as_str();
            if rest.len() >= lit.len() && rest.as_bytes()[..lit.len()].eq_ignore_ascii_case(lit.as_bytes()) {
                self.emit(TokenKind::ErrorLiteral, start, start + lit.len());
                return Ok(());
            }
        }
        Err(self.error(start, "unknown error literal"))
    }

    /// `'Sheet name'!`, `'[Book.xlsx]Sheet'!` or `'S1:S3'!`.
    fn quoted_sheet(&mut self) -> Result<(), LexError> {
        let start = self.pos;
        let mut i = start + 1;
        loop {
            match self.bytes.get(i) {
                None => return Err(self.error(start, "unterminated quoted sheet name")),
                Some(b'\'') if self.bytes.get(i + 1) == Some(&b'\'') => i += 2,
                Some(b'\'') => break,
                Some(_) => i += 1,
            }
        }
        if self.bytes.get(i + 1) != Some(&b'!') {
            return Err(self.error(start, "quoted name must be followed by '!'"));
        }
        self.emit(TokenKind::SheetPrefix, start, i + 2);
        Ok(())
    }

    fn bracket_end(&self, start: usize) -> Option<usize> {
        let mut depth = 0usize;
        for (i, &b) in self.bytes.iter().enumerate().skip(start) {
            match b {
                b'[' => depth += 1,
                b']' => {
                    depth -= 1;
                    if depth == 0 {
                        return Some(i + 1);
                    }
                }
                _ => {}
            }
        }
        None
    }

    /// `[Book.xlsx]` / `[1]` external prefixes, or a bare structured reference.
    fn bracket(&mut self) -> Result<(), LexError> {
        let start = self.pos;
        let end = self
            .bracket_end(start)
            .ok_or_else(|| self.error(start, "unterminated '['"))?;
        let inner = &self.text[start + 1..end - 1];
        let structured = inner.starts_with(['@', '#', '['])
            || inner.contains('[')
            || !matches!(self.bytes.get(end), Some(&b) if is_ident_byte(b) || b == b'\'' || b == b'$');
        let kind = if structured {
            TokenKind::StructuredRef
        } else {
            TokenKind::ExternalPrefix
        };
        self.emit(kind, start, end);
        Ok(())
    }

    fn number(&mut self) -> Result<(), LexError> {
        let start = self.pos;
        let mut i = start;
        let digits = |i: &mut usize, bytes: &[u8]| {
            let s = *i;
            while bytes.get(*i).is_some_and(u8::is_ascii_digit) {
                *i += 1;
            }
            *i - s
        };
        let int_digits = digits(&mut i, self.bytes);
        let mut frac_digits = 0;
        if self.bytes.get(i) == Some(&b'.') {
            i += 1;
            frac_digits = digits(&mut i, self.bytes);
        }
        if int_digits + frac_digits == 0 {
            return Err(self.error(start, "malformed number"));
        }
        if matches!(self.bytes.get(i), Some(b'e') | Some(b'E')) {
            let mut j = i + 1;
            if matches!(self.bytes.get(j), Some(b'+') | Some(b'-')) {
                j += 1;
            }
            if digits(&mut j, self.bytes) == 0 {
                return Err(self.error(start, "malformed exponent"));
            }
            i = j;
        }
        if self.bytes.get(i).is_some_and(|&b| is_ident_byte(b)) {
            return Err(self.error(start, "malformed number"));
        }
        self.emit(TokenKind::Number, start, i);
        Ok(())
    }

    /// Identifier-like text: sheet prefixes, cell references, booleans, names, functions.
    fn word(&mut self) -> Result<(), LexError> {
        let start = self.pos;
        let end = self.ident_end(start);
        match self.bytes.get(end) {
            Some(b'!') => {
                self.emit(TokenKind::SheetPrefix, start, end + 1);
                return Ok(());
            }
            Some(b':') => {
                // 3-D prefix `Sheet1:Sheet3!`
                let second = end + 1;
                let second_end = self.ident_end(second);
                if second_end > second && self.bytes.get(second_end) == Some(&b'!') {
                    self.emit(TokenKind::SheetPrefix, start, second_end + 1);
                    return Ok(());
                }
            }
            Some(b'[') => {
                let close = self
                    .bracket_end(end)
                    .ok_or_else(|| self.error(end, "unterminated '['"))?;
                self.emit(TokenKind::StructuredRef, start, close);
                return Ok(());
            }
            _ => {}
        }
        if self.try_reference() {
            return Ok(());
        }
        let word = &self.text[start..end];
        let next = self.bytes[end..].iter().copied().find(|&b| !is_space(b));
        let kind = if (word.eq_ignore_ascii_case("TRUE") || word.eq_ignore_ascii_case("FALSE")) && next != Some(b'(') {
            TokenKind::Boolean
        } else {
            TokenKind::Identifier
        };
        self.emit(kind, start, end);
        Ok(())
    }

    fn ident_end(&self, start: usize) -> usize {
        let mut i = start;
        while self.bytes.get(i).is_some_and(|&b| is_ident_byte(b)) {
            i += 1;
        }
        i
    }

    /// Lex a cell, column-only or row-only reference at the cursor if one is there.
    fn try_reference(&mut self) -> bool {
        let start = self.pos;
        let after_range_sep = self.tokens.last().is_some_and(|t| t.kind == TokenKind::RangeSep)
            && self.tokens.len() >= 2
            && self.tokens[self.tokens.len() - 2].kind == TokenKind::CellRef;

        let col = scan_column(self.bytes, start);
        if let Some(col_end) = col {
            if let Some(row_end) = scan_row(self.bytes, col_end) {
                if !self.continues_word(row_end) {
                    self.emit(TokenKind::CellRef, start, row_end);
                    return true;
                }
            }
            // Column-only part of `A:C`.
            if !self.continues_word(col_end) {
                let before_sep = self.bytes.get(col_end) == Some(&b':')
                    && scan_column(self.bytes, col_end + 1)
                        .is_some_and(|e| !self.continues_word(e) && scan_row(self.bytes, e).is_none());
                let prev_is_column = after_range_sep && is_column_part(self.tokens[self.tokens.len() - 2].lexeme);
                if before_sep || prev_is_column {
                    self.emit(TokenKind::CellRef, start, col_end);
                    return true;
                }
            }
        }
        // Row-only part of `3:5`.
        if let Some(row_end) = scan_row(self.bytes, start) {
            if !self.continues_word(row_end) && self.bytes.get(row_end) != Some(&b'.') {
                let before_sep = self.bytes.get(row_end) == Some(&b':')
                    && scan_row(self.bytes, row_end + 1).is_some_and(|e| !self.continues_word(e));
                let prev_is_row = after_range_sep && is_row_part(self.tokens[self.tokens.len() - 2].lexeme);
                if before_sep || prev_is_row {
                    self.emit(TokenKind::CellRef, start, row_end);
                    return true;
                }
            }
        }
        false
    }

    fn continues_word(&self, at: usize) -> bool {
        matches!(self.bytes.get(at), Some(&b) if is_ident_byte(b) || b == b'(' || b == b'!' || b == b'[' || b == b'$')
    }
}

/// `$?[A-Za-z]{1,3}` naming a column within the grid; returns the end offset.
fn scan_column(bytes: &[u8], start: usize) -> Option<usize> {
    let mut i = start;
    if bytes.get(i) == Some(&b'$') {
        i += 1;
    }
    let letters_start = i;
    while bytes.get(i).is_some_and(u8::is_ascii_alphabetic) {
        i += 1;
    }
    let letters = std::str::from_utf8(&bytes[letters_start..i]).ok()?;
    column_index(letters)?;
    Some(i)
}

/// `$?[0-9]+` naming a row within the grid; returns the end offset.
fn scan_row(bytes: &[u8], start: usize) -> Option<usize> {
    let mut i = start;
    if bytes.get(i) == Some(&b'$') {
        i += 1;
    }
    let digits_start = i;
    while bytes.get(i).is_some_and(u8::is_ascii_digit) {
        i += 1;
    }
    if i == digits_start || bytes[digits_start] == b'0' {
        return None;
    }
    let row: u64 = std::str::from_utf8(&bytes[digits_start..i]).ok()?.parse().ok()?;
    (row <= u64::from(MAX_ROW)).then_some(i)
}

fn is_column_part(lexeme: &str) -> bool {
    let s = lexeme.trim_start_matches('$');
    !s.is_empty() && s.bytes().all(|b| b.is_ascii_alphabetic())
}

fn is_row_part(lexeme: &str) -> bool {
    let s = lexeme.trim_start_matches('$');
    !s.is_empty() && s.bytes().all(|b| b.is_ascii_digit())
}

#[cfg(test)]
mod tests {
    use super::*;
    use TokenKind::*;

    fn kinds(text: &str) -> Vec<(TokenKind, &str)> {
        tokenize(text)
            .unwrap()
            .into_iter()
            .map(|t| (t.kind, t.lexeme))
            .collect()
    }

    #[test]
    fn buried_constant_example() {
        assert_eq!(
            kinds("780000*.35"),
            vec![(Number, "780000"), (Operator, "*"), (Number, ".35")]
        );
    }

    #[test]
    fn empty_input() {
        assert!(tokenize("").unwrap().is_empty());
    }

    #[test]
    fn sum_over_range() {
        assert_eq!(
            kinds("SUM(A1:A10)"),
            vec![
                (Identifier, "SUM"),
                (OpenParen, "("),
                (CellRef, "A1"),
                (RangeSep, ":"),
                (CellRef, "A10"),
                (CloseParen, ")")
            ]
        );
    }

    #[test]
    fn numbers() {
        for n in ["1", "1.5", ".35", "1e-3", "2.5E+10", "10."] {
            assert_eq!(kinds(n), vec![(Number, n)], "{n}");
        }
        assert!(tokenize("1e").is_err());
        assert!(tokenize("12abc").is_err());
    }

    #[test]
    fn strings_with_escaped_quotes() {
        assert_eq!(kinds(r#""say ""hi""""#), vec![(String, r#""say ""hi""""#)]);
        assert!(tokenize("\"open").is_err());
    }

    #[test]
    fn error_literals() {
        for code in ErrorCode::ALL {
            assert_eq!(kinds(code.as_str()), vec![(ErrorLiteral, code.as_str())]);
        }
        assert!(tokenize("#BOGUS!").is_err());
    }

    #[test]
    fn comparison_operators() {
        assert_eq!(
            kinds("A1<>B1<=C1>=D1"),
            vec![
                (CellRef, "A1"),
                (Operator, "<>"),
                (CellRef, "B1"),
                (Operator, "<="),
                (CellRef, "C1"),
                (Operator, ">="),
                (CellRef, "D1")
            ]
        );
    }

    #[test]
    fn sheet_and_external_prefixes() {
        assert_eq!(
            kinds("[Budget.xlsx]Q1!C3+D4"),
            vec![
                (ExternalPrefix, "[Budget.xlsx]"),
                (SheetPrefix, "Q1!"),
                (CellRef, "C3"),
                (Operator, "+"),
                (CellRef, "D4")
            ]
        );
        assert_eq!(
            kinds("'My Sheet'!$A$1"),
            vec![(SheetPrefix, "'My Sheet'!"), (CellRef, "$A$1")]
        );
        assert_eq!(
            kinds("Sheet1:Sheet3!A1"),
            vec![(SheetPrefix, "Sheet1:Sheet3!"), (CellRef, "A1")]
        );
    }

    #[test]
    fn whole_columns_and_rows() {
        assert_eq!(kinds("A:A"), vec![(CellRef, "A"), (RangeSep, ":"), (CellRef, "A")]);
        assert_eq!(kinds("$B:$D"), vec![(CellRef, "$B"), (RangeSep, ":"), (CellRef, "$D")]);
        assert_eq!(kinds("3:5"), vec![(CellRef, "3"), (RangeSep, ":"), (CellRef, "5")]);
    }

    #[test]
    fn names_functions_booleans() {
        assert_eq!(
            kinds("LOG10(x)"),
            vec![
                (Identifier, "LOG10"),
                (OpenParen, "("),
                (Identifier, "x"),
                (CloseParen, ")")
            ]
        );
        assert_eq!(kinds("TRUE"), vec![(Boolean, "TRUE")]);
        assert_eq!(
            kinds("TRUE()"),
            vec![(Identifier, "TRUE"), (OpenParen, "("), (CloseParen, ")")]
        );
        assert_eq!(kinds("Tax_Rate"), vec![(Identifier, "Tax_Rate")]);
        assert_eq!(kinds("_xlfn.CONCAT"), vec![(Identifier, "_xlfn.CONCAT")]);
    }

    #[test]
    fn structured_references() {
        assert_eq!(kinds("Table1[Amount]"), vec![(StructuredRef, "Table1[Amount]")]);
        assert_eq!(kinds("[@Amount]"), vec![(StructuredRef, "[@Amount]")]);
    }

    #[test]
    fn stray_characters_fail() {
        let err = tokenize("A1 ? 2").unwrap_err();
        assert_eq!(err.offset, 3);
        assert!(tokenize("$").is_err());
        assert!(tokenize("'open").is_err());
    }

    #[test]
    fn lexemes_reconstruct_input() {
        let text = "IF( ABS(B5 - C5) < 0.01 , \"OK\", \"CHECK\" )";
        let tokens = tokenize(text).unwrap();
        let mut rebuilt = std::string::String::new();
        let mut last = 0;
        for t in &tokens {
            rebuilt.push_str(&text[last..t.span.start]);
            rebuilt.push_str(t.lexeme);
            last = t.span.end;
        }
        rebuilt.push_str(&text[last..]);
        assert_eq!(rebuilt, text);
    }
}
