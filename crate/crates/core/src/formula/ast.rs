use std::fmt::{self, Write as _};

use super::lexer::{ErrorCode, Span};
use crate::ingest::address::{column_letters, quote_sheet_name, CellAddress};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum UnaryOp {
    Plus,
    Minus,
    Percent,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BinaryOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
    Concat,
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
}

impl BinaryOp {
    pub fn symbol(self) -> &'static str {
        match self {
            BinaryOp::Add => "+",
            BinaryOp::Sub => "-",
            BinaryOp::Mul => "*",
            BinaryOp::Div => "/",
            BinaryOp::Pow => "^",
            BinaryOp::Concat => "&",
            BinaryOp::Eq => "=",
            BinaryOp::Ne => "<>",
            BinaryOp::Lt => "<",
            BinaryOp::Le => "<=",
            BinaryOp::Gt => ">",
            BinaryOp::Ge => ">=",
        }
    }

    pub fn is_comparison(self) -> bool {
        matches!(
            self,
            BinaryOp::Eq | BinaryOp::Ne | BinaryOp::Lt | BinaryOp::Le | BinaryOp::Gt | BinaryOp::Ge
        )
    }
}

/// One end of a range. Whole-column ranges have no row, whole-row ranges no column.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct RangeBound {
    pub column: Option<u32>,
    pub row: Option<u32>,
    pub col_absolute: bool,
    pub row_absolute: bool,
}

impl RangeBound {
    pub fn render(&self) -> String {
        let mut s = String::new();
        if let Some(c) = self.column {
            if self.col_absolute {
                s.push('$');
            }
            s.push_str(&column_letters(c));
        }
        if let Some(r) = self.row {
            if self.row_absolute {
                s.push('$');
            }
            s.push_str(&r.to_string());
        }
        s
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Ast {
    Number {
        value: f64,
        lexeme: String,
        span: Span,
    },
    Text(String),
    Bool(bool),
    Error(ErrorCode),
    /// Omitted function argument, as in `IF(A1,,1)`.
    Empty,
    Ref {
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
    Call {
        name: String,
        args: Vec<Ast>,
    },
    Unary {
        op: UnaryOp,
        operand: Box<Ast>,
        span: Span,
    },
    Binary {
        op: BinaryOp,
        left: Box<Ast>,
        right: Box<Ast>,
    },
    Paren(Box<Ast>),
    /// Array constant; rows of items.
    Array(Vec<Vec<Ast>>),
}

impl Ast {
    /// Copy of the tree with every span zeroed, for structural comparison.
    pub fn without_spans(&self) -> Ast {
        match self {
            Ast::Number { value, lexeme, .. } => Ast::Number {
                value: *value,
                lexeme: lexeme.clone(),
                span: Span::default(),
            },
            Ast::Unary { op, operand, .. } => Ast::Unary {
                op: *op,
                operand: Box::new(operand.without_spans()),
                span: Span::default(),
            },
            Ast::Binary { op, left, right } => Ast::Binary {
                op: *op,
                left: Box::new(left.without_spans()),
                right: Box::new(right.without_spans()),
            },
            Ast::Call { name, args } => Ast::Call {
                name: name.clone(),
                args: args.iter().map(Ast::without_spans).collect(),
            },
            Ast::Paren(inner) => Ast::Paren(Box::new(inner.without_spans())),
            Ast::Array(rows) => Ast::Array(
                rows.iter()
                    .map(|r| r.iter().map(Ast::without_spans).collect())
                    .collect(),
            ),
            other => other.clone(),
        }
    }

    /// Number of `Number` nodes in the tree.
    pub fn number_literal_count(&self) -> usize {
        let mut n = 0;
        self.walk(&mut |node| {
            if matches!(node, Ast::Number { .. }) {
                n += 1;
            }
        });
        n
    }

    /// Pre-order traversal.
    pub fn walk<'a>(&'a self, f: &mut impl FnMut(&'a Ast)) {
        f(self);
        match self {
            Ast::Call { args, .. } => args.iter().for_each(|a| a.walk(f)),
            Ast::Unary { operand, .. } => operand.walk(f),
            Ast::Binary { left, right, .. } => {
                left.walk(f);
                right.walk(f);
            }
            Ast::Paren(inner) => inner.walk(f),
            Ast::Array(rows) => rows.iter().flatten().for_each(|a| a.walk(f)),
            _ => {}
        }
    }

    /// Strip any number of enclosing parentheses.
    pub fn unparen(&self) -> &Ast {
        let mut node = self;
        while let Ast::Paren(inner) = node {
            node = inner;
        }
        node
    }

    pub fn is_literal(&self) -> bool {
        match self.unparen() {
            Ast::Number { .. } | Ast::Text(_) | Ast::Bool(_) | Ast::Error(_) | Ast::Empty => true,
            Ast::Unary { operand, .. } => operand.is_literal(),
            _ => false,
        }
    }

    /// Canonical formula text (no leading `=`).
    pub fn render(&self) -> String {
        let mut s = String::new();
        self.render_into(&mut s);
        s
    }

    fn render_into(&self, s: &mut String) {
        match self {
            Ast::Number { lexeme, .. } => s.push_str(lexeme),
            Ast::Text(t) => {
                s.push('"');
                s.push_str(&t.replace('"', "\"\""));
                s.push('"');
            }
            Ast::Bool(b) => s.push_str(if *b { "TRUE" } else { "FALSE" }),
            Ast::Error(code) => s.push_str(code.as_str()),
            Ast::Empty => {}
            Ast::Ref { book, address } => {
                render_prefix(s, book.as_deref(), address.sheet.as_deref());
                s.push_str(&address.local_a1());
            }
            Ast::Range {
                book,
                sheet,
                start,
                end,
            } => {
                render_prefix(s, book.as_deref(), sheet.as_deref());
                s.push_str(&start.render());
                s.push(':');
                s.push_str(&end.render());
            }
            Ast::Name { book, sheet, name } => {
                render_prefix(s, book.as_deref(), sheet.as_deref());
                s.push_str(name);
            }
            Ast::Call { name, args } => {
                s.push_str(name);
                s.push('(');
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        s.push(',');
                    }
                    a.render_into(s);
                }
                s.push(')');
            }
            Ast::Unary { op, operand, .. } => match op {
                UnaryOp::Plus => {
                    s.push('+');
                    operand.render_into(s);
                }
                UnaryOp::Minus => {
                    s.push('-');
                    operand.render_into(s);
                }
                UnaryOp::Percent => {
                    operand.render_into(s);
                    s.push('%');
                }
            },
            Ast::Binary { op, left, right } => {
                left.render_into(s);
                s.push_str(op.symbol());
                right.render_into(s);
            }
            Ast::Paren(inner) => {
                s.push('(');
                inner.render_into(s);
                s.push(')');
            }
            Ast::Array(rows) => {
                s.push('{');
                for (i, row) in rows.iter().enumerate() {
                    if i > 0 {
                        s.push(';');
                    }
                    for (j, item) in row.iter().enumerate() {
                        if j > 0 {
                            s.push(',');
                        }
                        item.render_into(s);
                    }
                }
                s.push('}');
            }
        }
    }
}

impl Ast {
    /// Structural dump as an S-expression, e.g. `(* (num 780000) (num .35))`.
    /// Used for golden trees; spans are omitted.
    pub fn sexpr(&self) -> String {
        let mut s = String::new();
        self.sexpr_into(&mut s);
        s
    }

    fn sexpr_into(&self, s: &mut String) {
        let quoted = |t: &str| format!("\"{}\"", t.replace('"', "\"\""));
        let prefix = |s: &mut String, book: Option<&str>, sheet: Option<&str>| {
            if let Some(b) = book {
                let _ = write!(s, " :book {}", quoted(b));
            }
            if let Some(sh) = sheet {
                let _ = write!(s, " :sheet {}", quoted(sh));
            }
        };
        match self {
            Ast::Number { lexeme, .. } => {
                let _ = write!(s, "(num {lexeme})");
            }
            Ast::Text(t) => {
                let _ = write!(s, "(str {})", quoted(t));
            }
            Ast::Bool(b) => s.push_str(if *b { "(bool TRUE)" } else { "(bool FALSE)" }),
            Ast::Error(code) => {
                let _ = write!(s, "(err {})", code.as_str());
            }
            Ast::Empty => s.push_str("(empty)"),
            Ast::Ref { book, address } => {
                s.push_str("(ref");
                prefix(s, book.as_deref(), address.sheet.as_deref());
                let _ = write!(s, " {})", address.local_a1());
            }
            Ast::Range {
                book,
                sheet,
                start,
                end,
            } => {
                s.push_str("(range");
                prefix(s, book.as_deref(), sheet.as_deref());
                let _ = write!(s, " {} {})", start.render(), end.render());
            }
            Ast::Name { book, sheet, name } => {
                s.push_str("(name");
                prefix(s, book.as_deref(), sheet.as_deref());
                let _ = write!(s, " {name})");
            }
            Ast::Call { name, args } => {
                let _ = write!(s, "(call {name}");
                for a in args {
                    s.push(' ');
                    a.sexpr_into(s);
                }
                s.push(')');
            }
            Ast::Unary { op, operand, .. } => {
                s.push_str(match op {
                    UnaryOp::Plus => "(pos ",
                    UnaryOp::Minus => "(neg ",
                    UnaryOp::Percent => "(pct ",
                });
                operand.sexpr_into(s);
                s.push(')');
            }
            Ast::Binary { op, left, right } => {
                let _ = write!(s, "({} ", op.symbol());
                left.sexpr_into(s);
                s.push(' ');
                right.sexpr_into(s);
                s.push(')');
            }
            Ast::Paren(inner) => {
                s.push_str("(paren ");
                inner.sexpr_into(s);
                s.push(')');
            }
            Ast::Array(rows) => {
                s.push_str("(array");
                for row in rows {
                    s.push_str(" (row");
                    for item in row {
                        s.push(' ');
                        item.sexpr_into(s);
                    }
                    s.push(')');
                }
                s.push(')');
            }
        }
    }
}

fn render_prefix(s: &mut String, book: Option<&str>, sheet: Option<&str>) {
    match (book, sheet) {
        (None, None) => {}
        (None, Some(sheet)) => {
            let _ = write!(s, "{}!", quote_sheet_name(sheet));
        }
        (Some(book), None) => {
            let _ = write!(s, "[{book}]");
        }
        (Some(book), Some(sheet)) => {
            let joined = format!("[{book}]{sheet}");
            let plain = sheet.starts_with(|c: char| c.is_alphabetic() || c == '_')
                && sheet.chars().all(|c| c.is_alphanumeric() || c == '_' || c == '.')
                && !book.contains(['\'', ' ', '\\', '/', '[', ']']);
            if plain {
                let _ = write!(s, "{joined}!");
            } else {
                let _ = write!(s, "'{}'!", joined.replace('\'', "''"));
            }
        }
    }
}

impl fmt::Display for Ast {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render())
    }
}
