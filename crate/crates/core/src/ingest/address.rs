//! A1-style cell addresses.

use std::fmt;

use thiserror::Error;

/// Largest column index in the XLSX grid (`XFD`).
pub const MAX_COLUMN: u32 = 16_384;
/// Largest row index in the XLSX grid.
pub const MAX_ROW: u32 = 1_048_576;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("bad cell address syntax: {0:?}")]
pub struct BadAddressSyntax(pub String);

/// One cell location. `sheet` is `None` for unqualified references that
/// resolve against the sheet the formula lives on.
///
/// Ordering is by sheet name, then column, then row; that ordering is what
/// "smallest address" means everywhere in the crate.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CellAddress {
    pub sheet: Option<String>,
    pub column: u32,
    pub row: u32,
    pub col_absolute: bool,
    pub row_absolute: bool,
}

impl CellAddress {
    pub fn new(sheet: Option<&str>, column: u32, row: u32) -> Self {
        CellAddress {
            sheet: sheet.map(str::to_string),
            column,
            row,
            col_absolute: false,
            row_absolute: false,
        }
    }

    /// Address on `sheet` with absolute markers dropped.
    pub fn on_sheet(sheet: &str, column: u32, row: u32) -> Self {
        Self::new(Some(sheet), column, row)
    }

    /// The same location without `$` markers.
    pub fn relative(&self) -> Self {
        CellAddress {
            col_absolute: false,
            row_absolute: false,
            ..self.clone()
        }
    }

    /// `B3`-style text without any sheet prefix.
    pub fn local_a1(&self) -> String {
        let mut s = String::new();
        if self.col_absolute {
            s.push('$');
        }
        s.push_str(&column_letters(self.column));
        if self.row_absolute {
            s.push('$');
        }
        s.push_str(&self.row.to_string());
        s
    }
}

impl fmt::Display for CellAddress {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(sheet) = &self.sheet {
            write!(f, "{}!", quote_sheet_name(sheet))?;
        }
        f.write_str(&self.local_a1())
    }
}

/// Column letters for a 1-based index (bijective base 26).
pub fn column_letters(mut col: u32) -> String {
    let mut buf = Vec::with_capacity(3);
    while col > 0 {
        let rem = (col - 1) % 26;
        buf.push(b'A' + rem as u8);
        col = (col - 1) / 26;
    }
    buf.reverse();
    String::from_utf8(buf).expect("ascii")
}

/// Decode column letters; `None` if empty, non-alphabetic or past `XFD`.
pub fn column_index(letters: &str) -> Option<u32> {
    if letters.is_empty() || letters.len() > 3 {
        return None;
    }
    let mut col = 0u32;
    for b in letters.bytes() {
        if !b.is_ascii_alphabetic() {
            return None;
        }
        col = col * 26 + u32::from(b.to_ascii_uppercase() - b'A' + 1);
    }
    (col <= MAX_COLUMN).then_some(col)
}

/// True when a sheet name can appear unquoted before `!`.
pub fn sheet_name_is_bare(name: &str) -> bool {
    let mut chars = name.chars();
    let first_ok = matches!(chars.next(), Some(c) if c.is_ascii_alphabetic() || c == '_');
    if !first_ok || !name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '.') {
        return false;
    }
    // Anything the formula lexer would read as a reference or literal must be quoted.
    if name.eq_ignore_ascii_case("TRUE") || name.eq_ignore_ascii_case("FALSE") {
        return false;
    }
    let split = name.find(|c: char| c.is_ascii_digit()).unwrap_or(name.len());
    let (letters, digits) = name.split_at(split);
    let looks_like_cell =
        column_index(letters).is_some() && !digits.is_empty() && digits.chars().all(|c| c.is_ascii_digit());
    let looks_like_r1c1 = {
        let u = name.to_ascii_uppercase();
        u.starts_with('R') && u[1..].trim_start_matches(|c: char| c.is_ascii_digit()).starts_with('C')
    };
    !looks_like_cell && !looks_like_r1c1
}

pub fn quote_sheet_name(name: &str) -> String {
    if sheet_name_is_bare(name) {
        name.to_string()
    } else {
        format!("'{}'", name.replace('\'', "''"))
    }
}

/// Parse `[$]COL[$]ROW` with an optional `Sheet!` or `'Sheet name'!` prefix.
pub fn parse_address(text: &str) -> Result<CellAddress, BadAddressSyntax> {
    let bad = || BadAddressSyntax(text.to_string());
    let (sheet, local) = split_sheet_prefix(text).ok_or_else(bad)?;
    let (column, col_absolute, rest) = take_column(local).ok_or_else(bad)?;
    let (row_absolute, digits) = match rest.strip_prefix('$') {
        Some(d) => (true, d),
        None => (false, rest),
    };
    if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) || digits.starts_with('0') {
        return Err(bad());
    }
    let row: u32 = digits.parse().map_err(|_| bad())?;
    if row == 0 || row > MAX_ROW {
        return Err(bad());
    }
    Ok(CellAddress {
        sheet,
        column,
        row,
        col_absolute,
        row_absolute,
    })
}

fn take_column(s: &str) -> Option<(u32, bool, &str)> {
    let (abs, s) = match s.strip_prefix('$') {
        Some(rest) => (true, rest),
        None => (false, s),
    };
    let end = s.find(|c: char| !c.is_ascii_alphabetic()).unwrap_or(s.len());
    let col = column_index(&s[..end])?;
    Some((col, abs, &s[end..]))
}

/// Split `Sheet!A1` into (`Some("Sheet")`, `"A1"`); unquotes quoted names.
fn split_sheet_prefix(text: &str) -> Option<(Option<String>, &str)> {
    if let Some(rest) = text.strip_prefix('\'') {
        let mut name = String::new();
        let mut chars = rest.char_indices();
        while let Some((i, c)) = chars.next() {
            if c == '\'' {
                if rest[i + 1..].starts_with('\'') {
                    name.push('\'');
                    chars.next();
                    continue;
                }
                let after = rest[i + 1..].strip_prefix('!')?;
                if name.is_empty() {
                    return None;
                }
                return Some((Some(name), after));
            }
            name.push(c);
        }
        return None;
    }
    match text.rfind('!') {
        Some(i) => {
            let name = &text[..i];
            if name.is_empty() || !sheet_name_is_bare(name) {
                return None;
            }
            Some((Some(name.to_string()), &text[i + 1..]))
        }
        None => Some((None, text)),
    }
}
