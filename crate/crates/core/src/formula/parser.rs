use thiserror::Error;

use super::ast::{Ast, BinaryOp, RangeBound, UnaryOp};
use super::lexer::{tokenize, ErrorCode, LexError, Span, Token, TokenKind};
use crate::ingest::address::{column_index, CellAddress};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("parse error at offset {offset}: expected {}, found {found}", expected.join(" or "))]
pub struct ParseError {
    pub offset: usize,
    pub expected: Vec<String>,
    pub found: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FormulaError {
    #[error(transparent)]
    Lex(#[from] LexError),
    #[error(transparent)]
    Parse(#[from] ParseError),
}

impl FormulaError {
    pub fn offset(&self) -> usize {
        match self {
            FormulaError::Lex(e) => e.offset,
            FormulaError::Parse(e) => e.offset,
        }
    }
}

/// Parse formula text (without the leading `=`).
pub fn parse_formula(text: &str) -> Result<Ast, FormulaError> {
    let tokens = tokenize(text)?;
    let mut p = Parser {
        tokens,
        pos: 0,
        len: text.len(),
        depth: 0,
    };
    if p.tokens.is_empty() {
        return Err(p.error(&["expression"]).into());
    }
    let ast = p.expr()?;
    if p.pos < p.tokens.len() {
        return Err(p.error(&["end of formula"]).into());
    }
    Ok(ast)
}

struct Parser<'a> {
    tokens: Vec<Token<'a>>,
    pos: usize,
    len: usize,
    depth: usize,
}

/// Nesting limit; spreadsheet applications stop at 64 levels of functions.
const MAX_DEPTH: usize = 256;

fn binary_op(lexeme: &str) -> Option<BinaryOp> {
    Some(match lexeme {
        "+" => BinaryOp::Add,
        "-" => BinaryOp::Sub,
        "*" => BinaryOp::Mul,
        "/" => BinaryOp::Div,
        "^" => BinaryOp::Pow,
        "&" => BinaryOp::Concat,
        "=" => BinaryOp::Eq,
        "<>" => BinaryOp::Ne,
        "<" => BinaryOp::Lt,
        "<=" => BinaryOp::Le,
        ">" => BinaryOp::Gt,
        ">=" => BinaryOp::Ge,
        _ => return None,
    })
}

/// Binding levels, loosest first.
const LEVELS: [&[BinaryOp]; 5] = [
    &[
        BinaryOp::Eq,
        BinaryOp::Ne,
        BinaryOp::Lt,
        BinaryOp::Le,
        BinaryOp::Gt,
        BinaryOp::Ge,
    ],
    &[BinaryOp::Concat],
    &[BinaryOp::Add, BinaryOp::Sub],
    &[BinaryOp::Mul, BinaryOp::Div],
    &[BinaryOp::Pow],
];

impl<'a> Parser<'a> {
    fn peek(&self) -> Option<&Token<'a>> {
        self.tokens.get(self.pos)
    }

    fn peek_kind(&self) -> Option<TokenKind> {
        self.peek().map(|t| t.kind)
    }

    fn next(&mut self) -> Option<Token<'a>> {
        let t = self.tokens.get(self.pos).cloned();
        self.pos += 1;
        t
    }

    fn error(&self, expected: &[&str]) -> ParseError {
        let (offset, found) = match self.peek() {
            Some(t) => (t.span.start, format!("{:?}", t.lexeme)),
            None => (self.len, "end of formula".to_string()),
        };
        ParseError {
            offset,
            expected: expected.iter().map(|s| s.to_string()).collect(),
            found,
        }
    }

    fn unsupported(&self, at: &Token<'_>, what: &str) -> ParseError {
        ParseError {
            offset: at.span.start,
            expected: vec![],
            found: format!("{what} {:?} (unsupported)", at.lexeme),
        }
    }

    fn expect(&mut self, kind: TokenKind, what: &str) -> Result<Token<'a>, ParseError> {
        match self.peek() {
            Some(t) if t.kind == kind => Ok(self.next().unwrap()),
            _ => Err(self.error(&[what])),
        }
    }

    fn expr(&mut self) -> Result<Ast, ParseError> {
        self.nested(|p| p.binary(0))
    }

    fn nested<T>(&mut self, f: impl FnOnce(&mut Self) -> Result<T, ParseError>) -> Result<T, ParseError> {
        if self.depth >= MAX_DEPTH {
            return Err(self.error(&["shallower nesting"]));
        }
        self.depth += 1;
        let out = f(self);
        self.depth -= 1;
        out
    }

    fn binary(&mut self, level: usize) -> Result<Ast, ParseError> {
        if level == LEVELS.len() {
            return self.unary();
        }
        let mut left = self.binary(level + 1)?;
        loop {
            let op = match self.peek() {
                Some(t) if t.kind == TokenKind::Operator => match binary_op(t.lexeme) {
                    Some(op) if LEVELS[level].contains(&op) => op,
                    _ => break,
                },
                _ => break,
            };
            self.pos += 1;
            let right = self.binary(level + 1)?;
            left = Ast::Binary {
                op,
                left: Box::new(left),
                right: Box::new(right),
            };
        }
        Ok(left)
    }

    fn unary(&mut self) -> Result<Ast, ParseError> {
        if let Some(t) = self.peek() {
            if t.kind == TokenKind::Operator && (t.lexeme == "-" || t.lexeme == "+") {
                let op = if t.lexeme == "-" { UnaryOp::Minus } else { UnaryOp::Plus };
                let start = t.span.start;
                self.pos += 1;
                let operand = self.nested(|p| p.unary())?;
                let end = self.tokens[self.pos - 1].span.end;
                return Ok(Ast::Unary {
                    op,
                    operand: Box::new(operand),
                    span: Span::new(start, end),
                });
            }
        }
        let start = self.peek().map(|t| t.span.start).unwrap_or(self.len);
        let mut node = self.primary()?;
        while self.peek_kind() == Some(TokenKind::Percent) {
            let end = self.next().unwrap().span.end;
            node = Ast::Unary {
                op: UnaryOp::Percent,
                operand: Box::new(node),
                span: Span::new(start, end),
            };
        }
        Ok(node)
    }

    fn primary(&mut self) -> Result<Ast, ParseError> {
        const EXPECTED: &[&str] = &["number", "string", "reference", "function", "'('"];
        let Some(tok) = self.peek().cloned() else {
            return Err(self.error(EXPECTED));
        };
        match tok.kind {
            TokenKind::Number => {
                self.pos += 1;
                let value: f64 = tok.lexeme.parse().map_err(|_| self.unsupported(&tok, "number"))?;
                if !value.is_finite() {
                    return Err(self.unsupported(&tok, "number out of range"));
                }
                Ok(Ast::Number {
                    value,
                    lexeme: tok.lexeme.to_string(),
                    span: tok.span,
                })
            }
            TokenKind::String => {
                self.pos += 1;
                let inner = &tok.lexeme[1..tok.lexeme.len() - 1];
                Ok(Ast::Text(inner.replace("\"\"", "\"")))
            }
            TokenKind::Boolean => {
                self.pos += 1;
                Ok(Ast::Bool(tok.lexeme.eq_ignore_ascii_case("TRUE")))
            }
            TokenKind::ErrorLiteral => {
                self.pos += 1;
                Ok(Ast::Error(ErrorCode::parse(tok.lexeme).expect("lexer validated")))
            }
            TokenKind::OpenParen => {
                self.pos += 1;
                let inner = self.expr()?;
                self.expect(TokenKind::CloseParen, "')'")?;
                Ok(Ast::Paren(Box::new(inner)))
            }
            TokenKind::OpenBrace => self.array(),
            TokenKind::Identifier if self.tokens.get(self.pos + 1).map(|t| t.kind) == Some(TokenKind::OpenParen) => {
                self.call()
            }
            TokenKind::Identifier | TokenKind::CellRef | TokenKind::SheetPrefix | TokenKind::ExternalPrefix => {
                self.reference()
            }
            TokenKind::StructuredRef => Err(self.unsupported(&tok, "structured reference")),
            _ => Err(self.error(EXPECTED)),
        }
    }

    fn call(&mut self) -> Result<Ast, ParseError> {
        let name_tok = self.next().unwrap();
        self.pos += 1; // (
        let mut name = name_tok.lexeme.to_ascii_uppercase();
        for prefix in ["_XLFN.", "_XLWS."] {
            if let Some(rest) = name.strip_prefix(prefix) {
                name = rest.to_string();
            }
        }
        let mut args = Vec::new();
        if self.peek_kind() == Some(TokenKind::CloseParen) {
            self.pos += 1;
            return Ok(Ast::Call { name, args });
        }
        loop {
            let arg = match self.peek() {
                Some(t) if t.kind == TokenKind::ArgSep && t.lexeme == "," => Ast::Empty,
                Some(t) if t.kind == TokenKind::CloseParen => Ast::Empty,
                _ => self.expr()?,
            };
            args.push(arg);
            match self.peek() {
                Some(t) if t.kind == TokenKind::ArgSep && t.lexeme == "," => self.pos += 1,
                Some(t) if t.kind == TokenKind::CloseParen => {
                    self.pos += 1;
                    return Ok(Ast::Call { name, args });
                }
                _ => return Err(self.error(&["','", "')'"])),
            }
        }
    }

    fn array(&mut self) -> Result<Ast, ParseError> {
        self.pos += 1; // {
        let mut rows = vec![Vec::new()];
        loop {
            let item = self.array_item()?;
            rows.last_mut().unwrap().push(item);
            match self.next() {
                Some(t) if t.kind == TokenKind::ArgSep && t.lexeme == "," => {}
                Some(t) if t.kind == TokenKind::ArgSep => rows.push(Vec::new()),
                Some(t) if t.kind == TokenKind::CloseBrace => return Ok(Ast::Array(rows)),
                _ => {
                    self.pos -= 1;
                    return Err(self.error(&["','", "';'", "'}'"]));
                }
            }
        }
    }

    fn array_item(&mut self) -> Result<Ast, ParseError> {
        let tok = self.peek().cloned();
        match tok {
            Some(t) if t.kind == TokenKind::Operator && t.lexeme == "-" => {
                self.pos += 1;
                let operand = self.nested(|p| p.array_item())?;
                if !matches!(operand, Ast::Number { .. }) {
                    return Err(self.error(&["number"]));
                }
                let end = self.tokens[self.pos - 1].span.end;
                Ok(Ast::Unary {
                    op: UnaryOp::Minus,
                    operand: Box::new(operand),
                    span: Span::new(t.span.start, end),
                })
            }
            Some(t)
                if matches!(
                    t.kind,
                    TokenKind::Number | TokenKind::String | TokenKind::Boolean | TokenKind::ErrorLiteral
                ) =>
            {
                self.primary()
            }
            _ => Err(self.error(&["array constant"])),
        }
    }

    /// `[book]` `Sheet!` prefixes followed by a cell, range, name, or `#REF!`.
    fn reference(&mut self) -> Result<Ast, ParseError> {
        let mut book: Option<String> = None;
        let mut sheet: Option<String> = None;

        if self.peek_kind() == Some(TokenKind::ExternalPrefix) {
            let t = self.next().unwrap();
            book = Some(t.lexeme[1..t.lexeme.len() - 1].to_string());
            if self.peek_kind() != Some(TokenKind::SheetPrefix) {
                // `[1]Name` without a sheet: external workbook-level name.
                let t = self.expect(TokenKind::Identifier, "sheet or name")?;
                return Ok(Ast::Name {
                    book,
                    sheet: None,
                    name: t.lexeme.to_string(),
                });
            }
        }
        if self.peek_kind() == Some(TokenKind::SheetPrefix) {
            let t = self.next().unwrap();
            let (b, s) = split_sheet_prefix(t.lexeme);
            if s.contains(':') {
                return Err(self.unsupported(&t, "3-D reference"));
            }
            if let Some(b) = b {
                if book.is_some() {
                    return Err(self.unsupported(&t, "doubled workbook prefix"));
                }
                book = Some(b);
            }
            sheet = Some(s);
        }

        let Some(tok) = self.next() else {
            return Err(self.error(&["reference"]));
        };
        match tok.kind {
            TokenKind::ErrorLiteral if sheet.is_some() || book.is_some() => {
                Ok(Ast::Error(ErrorCode::parse(tok.lexeme).expect("lexer validated")))
            }
            TokenKind::Identifier => {
                if self.peek_kind() == Some(TokenKind::OpenParen) {
                    return Err(self.unsupported(&tok, "sheet-qualified function"));
                }
                if is_r1c1(tok.lexeme) {
                    return Err(self.unsupported(&tok, "R1C1 reference"));
                }
                Ok(Ast::Name {
                    book,
                    sheet,
                    name: tok.lexeme.to_string(),
                })
            }
            TokenKind::CellRef => {
                let start = decode_bound(tok.lexeme);
                if self.peek_kind() == Some(TokenKind::RangeSep) {
                    self.pos += 1;
                    let end_tok = self.expect(TokenKind::CellRef, "range end")?;
                    let end = decode_bound(end_tok.lexeme);
                    let kinds_match =
                        (start.column.is_some(), start.row.is_some()) == (end.column.is_some(), end.row.is_some());
                    if !kinds_match {
                        return Err(self.unsupported(&end_tok, "mixed range bounds"));
                    }
                    return Ok(Ast::Range {
                        book,
                        sheet,
                        start,
                        end,
                    });
                }
                match (start.column, start.row) {
                    (Some(column), Some(row)) => Ok(Ast::Ref {
                        book,
                        address: CellAddress {
                            sheet,
                            column,
                            row,
                            col_absolute: start.col_absolute,
                            row_absolute: start.row_absolute,
                        },
                    }),
                    _ => Err(self.unsupported(&tok, "partial reference outside a range")),
                }
            }
            _ => {
                self.pos -= 1;
                Err(self.error(&["cell reference", "name"]))
            }
        }
    }
}

pub(crate) fn decode_bound(lexeme: &str) -> RangeBound {
    let (col_absolute, rest) = match lexeme.strip_prefix('$') {
        Some(r) if r.starts_with(|c: char| c.is_ascii_alphabetic()) => (true, r),
        _ => (false, lexeme),
    };
    let split = rest.find(|c: char| !c.is_ascii_alphabetic()).unwrap_or(rest.len());
    let (letters, rest) = rest.split_at(split);
    let (row_absolute, digits) = match rest.strip_prefix('$') {
        Some(d) => (true, d),
        None => (false, rest),
    };
    RangeBound {
        column: column_index(letters),
        row: digits.parse().ok(),
        col_absolute: col_absolute && !letters.is_empty(),
        row_absolute,
    }
}

/// Split a `SheetPrefix` lexeme into an optional workbook and the sheet name.
fn split_sheet_prefix(lexeme: &str) -> (Option<String>, String) {
    let body = &lexeme[..lexeme.len() - 1];
    let name = match body.strip_prefix('\'').and_then(|b| b.strip_suffix('\'')) {
        Some(inner) => inner.replace("''", "'"),
        None => body.to_string(),
    };
    if let (Some(open), Some(close)) = (name.find('['), name.find(']')) {
        if open < close {
            let book = format!("{}{}", &name[..open], &name[open + 1..close]);
            return (Some(book), name[close + 1..].to_string());
        }
    }
    (None, name)
}

/// `R1C1`, `RC`, `R2C`, ... (case-insensitive).
fn is_r1c1(name: &str) -> bool {
    let u = name.to_ascii_uppercase();
    let Some(rest) = u.strip_prefix('R') else {
        return false;
    };
    let rest = rest.trim_start_matches(|c: char| c.is_ascii_digit());
    let Some(rest) = rest.strip_prefix('C') else {
        return false;
    };
    rest.chars().all(|c| c.is_ascii_digit())
}
