//! Formula tokenizer, parser and the two extractions the control checks
//! rely on: references and numeric literals.

pub mod ast;
pub mod lexer;
pub mod parser;

pub use ast::{Ast, BinaryOp, RangeBound, UnaryOp};
pub use lexer::{tokenize, ErrorCode, LexError, Span, Token, TokenKind};
pub use parser::{parse_formula, FormulaError, ParseError};

use crate::ingest::address::{column_letters, CellAddress, MAX_COLUMN, MAX_ROW};

/// A reference appearing in a formula, in the form it was written.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Reference {
    Cell {
        book: Option<String>,
        address: CellAddress,
    },
    Range {
        book: Option<String>,
        sheet: Option<String>,
        start: RangeBound,
        end: RangeBound,
    },
    Name {
        book: Option<String>,
        sheet: Option<String>,
        name: String,
    },
}

impl Reference {
    pub fn is_external(&self) -> bool {
        match self {
            Reference::Cell { book, .. } | Reference::Range { book, .. } | Reference::Name { book, .. } => {
                book.is_some()
            }
        }
    }

    pub fn book(&self) -> Option<&str> {
        match self {
            Reference::Cell { book, .. } | Reference::Range { book, .. } | Reference::Name { book, .. } => {
                book.as_deref()
            }
        }
    }

    pub fn sheet(&self) -> Option<&str> {
        match self {
            Reference::Cell { address, .. } => address.sheet.as_deref(),
            Reference::Range { sheet, .. } | Reference::Name { sheet, .. } => sheet.as_deref(),
        }
    }

    /// Formula text for this reference.
    pub fn render(&self) -> String {
        self.to_ast().render()
    }

    fn to_ast(&self) -> Ast {
        match self.clone() {
            Reference::Cell { book, address } => Ast::Ref { book, address },
            Reference::Range {
                book,
                sheet,
                start,
                end,
            } => Ast::Range {
                book,
                sheet,
                start,
                end,
            },
            Reference::Name { book, sheet, name } => Ast::Name { book, sheet, name },
        }
    }
}

/// Every reference in the tree in left-to-right source order. Ranges are
/// reported whole; names are left for the dependency graph to resolve.
pub fn extract_refs(ast: &Ast) -> Vec<Reference> {
    let mut out = Vec::new();
    ast.walk(&mut |node| match node {
        Ast::Ref { book, address } => out.push(Reference::Cell {
            book: book.clone(),
            address: address.clone(),
        }),
        Ast::Range {
            book,
            sheet,
            start,
            end,
        } => out.push(Reference::Range {
            book: book.clone(),
            sheet: sheet.clone(),
            start: start.clone(),
            end: end.clone(),
        }),
        Ast::Name { book, sheet, name } => out.push(Reference::Name {
            book: book.clone(),
            sheet: sheet.clone(),
            name: name.clone(),
        }),
        _ => {}
    });
    out
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum LiteralContext {
    /// Direct argument of a function call; `index` is 1-based.
    FunctionArg {
        function: String,
        index: usize,
    },
    GeneralExpression,
}

/// A numeric constant written into a formula.
///
/// A literal absorbs any prefix sign and postfix percent applied directly to
/// it: `-5%` is one literal with value -0.05 whose span covers all three
/// characters.
#[derive(Debug, Clone, PartialEq)]
pub struct NumericLiteral {
    pub value: f64,
    pub span: Span,
    pub context: LiteralContext,
}

impl NumericLiteral {
    pub fn excerpt<'t>(&self, formula_text: &'t str) -> &'t str {
        self.span.slice(formula_text)
    }
}

/// Every numeric literal in source order, tagged with its context.
pub fn extract_numeric_literals(ast: &Ast) -> Vec<NumericLiteral> {
    let mut out = Vec::new();
    collect_literals(ast, LiteralContext::GeneralExpression, &mut out);
    out
}

fn collect_literals(node: &Ast, context: LiteralContext, out: &mut Vec<NumericLiteral>) {
    if let Some((value, span)) = fold_literal(node) {
        out.push(NumericLiteral { value, span, context });
        return;
    }
    match node {
        Ast::Call { name, args } => {
            for (i, arg) in args.iter().enumerate() {
                let ctx = LiteralContext::FunctionArg {
                    function: name.clone(),
                    index: i + 1,
                };
                collect_literals(arg, ctx, out);
            }
        }
        Ast::Unary { operand, .. } => collect_literals(operand, LiteralContext::GeneralExpression, out),
        Ast::Binary { left, right, .. } => {
            collect_literals(left, LiteralContext::GeneralExpression, out);
            collect_literals(right, LiteralContext::GeneralExpression, out);
        }
        Ast::Paren(inner) => collect_literals(inner, LiteralContext::GeneralExpression, out),
        Ast::Array(rows) => {
            for item in rows.iter().flatten() {
                collect_literals(item, LiteralContext::GeneralExpression, out);
            }
        }
        _ => {}
    }
}

/// A number wrapped only in unary operators, folded to its effective value.
fn fold_literal(node: &Ast) -> Option<(f64, Span)> {
    match node {
        Ast::Number { value, span, .. } => Some((*value, *span)),
        Ast::Unary { op, operand, span } => {
            let (v, _) = fold_literal(operand)?;
            let v = match op {
                UnaryOp::Plus => v,
                UnaryOp::Minus => -v,
                UnaryOp::Percent => v / 100.0,
            };
            Some((v, *span))
        }
        _ => None,
    }
}

/// Rewrite the relative parts of every reference in `text`, as a spreadsheet
/// does when it fills a shared formula from its anchor cell. References pushed
/// off the grid become `#REF!`. Everything other than reference tokens is
/// copied through unchanged.
pub fn shift_formula(text: &str, row_delta: i64, col_delta: i64) -> Result<String, LexError> {
    let tokens = tokenize(text)?;
    let mut out = String::with_capacity(text.len());
    let mut last = 0;
    for tok in &tokens {
        if tok.kind != TokenKind::CellRef {
            continue;
        }
        out.push_str(&text[last..tok.span.start]);
        out.push_str(&shift_ref_token(tok.lexeme, row_delta, col_delta));
        last = tok.span.end;
    }
    out.push_str(&text[last..]);
    Ok(out)
}

fn shift_ref_token(lexeme: &str, row_delta: i64, col_delta: i64) -> String {
    let bound = parser::decode_bound(lexeme);
    let mut s = String::new();
    if let Some(c) = bound.column {
        let c = if bound.col_absolute {
            i64::from(c)
        } else {
            i64::from(c) + col_delta
        };
        if c < 1 || c > i64::from(MAX_COLUMN) {
            return ErrorCode::Ref.as_str().to_string();
        }
        if bound.col_absolute {
            s.push('$');
        }
        s.push_str(&column_letters(c as u32));
    }
    if let Some(r) = bound.row {
        let r = if bound.row_absolute {
            i64::from(r)
        } else {
            i64::from(r) + row_delta
        };
        if r < 1 || r > i64::from(MAX_ROW) {
            return ErrorCode::Ref.as_str().to_string();
        }
        if bound.row_absolute {
            s.push('$');
        }
        s.push_str(&r.to_string());
    }
    s
}
