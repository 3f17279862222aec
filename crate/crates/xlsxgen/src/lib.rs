//! A small writer for SpreadsheetML (`.xlsx`) packages.
//!
//! This crate exists to author test workbooks: it writes exactly the parts a
//! reader needs (workbook, worksheets, shared strings, styles, external links,
//! core properties) and nothing else. It does not try to produce files that
//! every spreadsheet application accepts byte-for-byte; it produces files that
//! follow the Office Open XML part layout closely enough for a conforming
//! reader.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::io::{Cursor, Write};
use std::path::Path;

use zip::write::SimpleFileOptions;
use zip::ZipWriter;

const NS_MAIN: &str = "http://schemas.openxmlformats.org/spreadsheetml/2006/main";
const NS_REL: &str = "http://schemas.openxmlformats.org/officeDocument/2006/relationships";
const NS_PKG_REL: &str = "http://schemas.openxmlformats.org/package/2006/relationships";
const REL_BASE: &str = "http://schemas.openxmlformats.org/officeDocument/2006/relationships";

/// Visual attributes of one cell format record.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Style {
    /// ARGB fill color, e.g. `FFDDEBF7`.
    pub fill: Option<String>,
    /// ARGB font color.
    pub font_color: Option<String>,
    pub bold: bool,
    pub border: bool,
}

impl Style {
    pub fn fill(rgb: &str) -> Self {
        Style {
            fill: Some(rgb.to_string()),
            ..Style::default()
        }
    }

    pub fn bold() -> Self {
        Style {
            bold: true,
            ..Style::default()
        }
    }
}

/// Cached result stored next to a formula.
#[derive(Debug, Clone, PartialEq)]
pub enum Cached {
    Number(f64),
    Text(String),
    Bool(bool),
    Error(String),
}

#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    /// A cell element carrying only a style.
    Blank,
    Number(f64),
    Text(String),
    Bool(bool),
    Error(String),
    Formula {
        text: String,
        cached: Option<Cached>,
    },
    /// Anchor of a shared formula group covering `range`.
    SharedMaster {
        text: String,
        range: String,
        si: u32,
        cached: Option<Cached>,
    },
    /// Member of a shared formula group; carries no formula text of its own.
    SharedChild {
        si: u32,
        cached: Option<Cached>,
    },
    /// Anchor of an array formula spilling over `range`.
    ArrayFormula {
        text: String,
        range: String,
        cached: Option<Cached>,
    },
}

impl Value {
    pub fn formula(text: &str) -> Self {
        Value::Formula {
            text: text.to_string(),
            cached: None,
        }
    }

    pub fn formula_cached(text: &str, cached: Cached) -> Self {
        Value::Formula {
            text: text.to_string(),
            cached: Some(cached),
        }
    }

    pub fn text(text: &str) -> Self {
        Value::Text(text.to_string())
    }

    /// True when a reader should treat the cell as holding content.
    pub fn is_occupied(&self) -> bool {
        !matches!(self, Value::Blank)
    }

    pub fn is_formula(&self) -> bool {
        matches!(
            self,
            Value::Formula { .. } | Value::SharedMaster { .. } | Value::SharedChild { .. } | Value::ArrayFormula { .. }
        )
    }
}

impl From<f64> for Value {
    fn from(v: f64) -> Self {
        Value::Number(v)
    }
}

impl From<i32> for Value {
    fn from(v: i32) -> Self {
        Value::Number(v as f64)
    }
}

impl From<&str> for Value {
    fn from(v: &str) -> Self {
        if let Some(f) = v.strip_prefix('=') {
            Value::formula(f)
        } else {
            Value::Text(v.to_string())
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SheetState {
    #[default]
    Visible,
    Hidden,
    VeryHidden,
}

#[derive(Debug, Clone)]
pub struct Sheet {
    pub name: String,
    pub state: SheetState,
    cells: BTreeMap<(u32, u32), (Value, u32)>,
    hidden_rows: BTreeSet<u32>,
    hidden_cols: BTreeSet<u32>,
    raw_xml: Option<String>,
    omit_refs: bool,
}

impl Sheet {
    pub fn new(name: &str) -> Self {
        Sheet {
            name: name.to_string(),
            state: SheetState::Visible,
            cells: BTreeMap::new(),
            hidden_rows: BTreeSet::new(),
            hidden_cols: BTreeSet::new(),
            raw_xml: None,
            omit_refs: false,
        }
    }

    pub fn with_state(mut self, state: SheetState) -> Self {
        self.state = state;
        self
    }

    /// Set a cell by A1 address with the default style.
    pub fn set(&mut self, a1: &str, value: impl Into<Value>) -> &mut Self {
        self.set_styled(a1, value, 0)
    }

    pub fn set_styled(&mut self, a1: &str, value: impl Into<Value>, style: u32) -> &mut Self {
        let (row, col) = decode_a1(a1).unwrap_or_else(|| panic!("bad address {a1}"));
        self.set_rc(row, col, value, style)
    }

    /// Set a cell by 1-based row and column.
    pub fn set_rc(&mut self, row: u32, col: u32, value: impl Into<Value>, style: u32) -> &mut Self {
        self.cells.insert((row, col), (value.into(), style));
        self
    }

    pub fn hide_row(&mut self, row: u32) -> &mut Self {
        self.hidden_rows.insert(row);
        self
    }

    pub fn hide_col(&mut self, col: u32) -> &mut Self {
        self.hidden_cols.insert(col);
        self
    }

    /// Replace the generated worksheet XML with `xml` verbatim.
    pub fn raw_xml(&mut self, xml: &str) -> &mut Self {
        self.raw_xml = Some(xml.to_string());
        self
    }

    /// Write `<row>` and `<c>` elements without their `r` attributes.
    pub fn omit_refs(&mut self, omit: bool) -> &mut Self {
        self.omit_refs = omit;
        self
    }

    pub fn cells(&self) -> impl Iterator<Item = (u32, u32, &Value)> {
        self.cells.iter().map(|(&(r, c), (v, _))| (r, c, v))
    }

    pub fn occupied_count(&self) -> usize {
        self.cells.values().filter(|(v, _)| v.is_occupied()).count()
    }

    pub fn formula_count(&self) -> usize {
        self.cells.values().filter(|(v, _)| v.is_formula()).count()
    }
}

#[derive(Debug, Clone)]
pub struct DefinedName {
    pub name: String,
    /// Index of the sheet the name is local to.
    pub local_sheet: Option<usize>,
    pub refers_to: String,
}

#[derive(Debug, Clone)]
pub struct ExternalLink {
    /// Target path of the external workbook, e.g. `Budget.xlsx`.
    pub target: String,
    pub sheet_names: Vec<String>,
}

#[derive(Debug, Clone, Default)]
pub struct Workbook {
    pub sheets: Vec<Sheet>,
    styles: Vec<Style>,
    pub defined_names: Vec<DefinedName>,
    pub external_links: Vec<ExternalLink>,
    /// W3CDTF timestamp written to `docProps/core.xml`.
    pub created: Option<String>,
    /// Write text values as inline strings instead of shared strings.
    pub inline_strings: bool,
    /// Leave out `xl/workbook.xml` entirely.
    pub omit_workbook_part: bool,
}

impl Workbook {
    pub fn new() -> Self {
        Workbook {
            styles: vec![Style::default()],
            ..Workbook::default()
        }
    }

    /// Register a style and return its index for use with `set_styled`.
    pub fn add_style(&mut self, style: Style) -> u32 {
        if let Some(i) = self.styles.iter().position(|s| *s == style) {
            return i as u32;
        }
        self.styles.push(style);
        (self.styles.len() - 1) as u32
    }

    pub fn add_sheet(&mut self, sheet: Sheet) -> usize {
        self.sheets.push(sheet);
        self.sheets.len() - 1
    }

    pub fn sheet_mut(&mut self, name: &str) -> &mut Sheet {
        self.sheets
            .iter_mut()
            .find(|s| s.name == name)
            .unwrap_or_else(|| panic!("no sheet {name}"))
    }

    pub fn define_name(&mut self, name: &str, local_sheet: Option<usize>, refers_to: &str) {
        self.defined_names.push(DefinedName {
            name: name.to_string(),
            local_sheet,
            refers_to: refers_to.to_string(),
        });
    }

    pub fn occupied_count(&self) -> usize {
        self.sheets.iter().map(Sheet::occupied_count).sum()
    }

    pub fn formula_count(&self) -> usize {
        self.sheets.iter().map(Sheet::formula_count).sum()
    }

    pub fn save(&self, path: impl AsRef<Path>) -> std::io::Result<()> {
        std::fs::write(path, self.to_bytes()?)
    }

    pub fn to_bytes(&self) -> std::io::Result<Vec<u8>> {
        let mut zip = ZipWriter::new(Cursor::new(Vec::new()));
        let opts = SimpleFileOptions::default().compression_method(zip::CompressionMethod::Deflated);
        let mut strings = StringTable::default();

        let mut sheet_xml = Vec::with_capacity(self.sheets.len());
        for sheet in &self.sheets {
            let xml = match &sheet.raw_xml {
                Some(raw) => raw.clone(),
                None => self.sheet_xml(sheet, &mut strings),
            };
            sheet_xml.push(xml);
        }

        let mut put = |name: &str, body: &str| -> std::io::Result<()> {
            zip.start_file(name, opts).map_err(std::io::Error::other)?;
            zip.write_all(body.as_bytes())
        };

        put("[Content_Types].xml", &self.content_types())?;
        put("_rels/.rels", &root_rels(self.created.is_some()))?;
        if !self.omit_workbook_part {
            put("xl/workbook.xml", &self.workbook_xml())?;
        }
        put("xl/_rels/workbook.xml.rels", &self.workbook_rels())?;
        for (i, xml) in sheet_xml.iter().enumerate() {
            put(&format!("xl/worksheets/sheet{}.xml", i + 1), xml)?;
        }
        if !self.inline_strings {
            put("xl/sharedStrings.xml", &strings.to_xml())?;
        }
        put("xl/styles.xml", &self.styles_xml())?;
        for (i, link) in self.external_links.iter().enumerate() {
            put(
                &format!("xl/externalLinks/externalLink{}.xml", i + 1),
                &external_link_xml(link),
            )?;
            put(
                &format!("xl/externalLinks/_rels/externalLink{}.xml.rels", i + 1),
                &format!(
                    r#"<?xml version="1.0" encoding="UTF-8" standalone="yes"?>
<Relationships xmlns="{NS_PKG_REL}"><Relationship Id="rId1" Type="{REL_BASE}/externalLinkPath" Target="{}" TargetMode="External"/></Relationships>"#,
                    escape(&link.target)
                ),
            )?;
        }
        if let Some(created) = &self.created {
            put(
                "docProps/core.xml",
                &format!(
                    r#"<?xml version="1.0" encoding="UTF-8" standalone="yes"?>
<cp:coreProperties xmlns:cp="http://schemas.openxmlformats.org/package/2006/metadata/core-properties" xmlns:dc="http://purl.org/dc/elements/1.1/" xmlns:dcterms="http://purl.org/dc/terms/" xmlns:xsi="http://www.w3.org/2001/XMLSchema-instance"><dc:creator>fixture</dc:creator><dcterms:created xsi:type="dcterms:W3CDTF">{}</dcterms:created></cp:coreProperties>"#,
                    escape(created)
                ),
            )?;
        }
        Ok(zip.finish().map_err(std::io::Error::other)?.into_inner())
    }

    fn content_types(&self) -> String {
        let mut s = String::from(
            r#"<?xml version="1.0" encoding="UTF-8" standalone="yes"?>
<Types xmlns="http://schemas.openxmlformats.org/package/2006/content-types"><Default Extension="rels" ContentType="application/vnd.openxmlformats-package.relationships+xml"/><Default Extension="xml" ContentType="application/xml"/><Override PartName="/xl/workbook.xml" ContentType="application/vnd.openxmlformats-officedocument.spreadsheetml.sheet.main+xml"/>"#,
        );
        for i in 0..self.sheets.len() {
            let _ = write!(
                s,
                r#"<Override PartName="/xl/worksheets/sheet{}.xml" ContentType="application/vnd.openxmlformats-officedocument.spreadsheetml.worksheet+xml"/>"#,
                i + 1
            );
        }
        s.push_str("</Types>");
        s
    }

    fn workbook_xml(&self) -> String {
        let mut s = format!(
            r#"<?xml version="1.0" encoding="UTF-8" standalone="yes"?>
<workbook xmlns="{NS_MAIN}" xmlns:r="{NS_REL}"><sheets>"#
        );
        for (i, sheet) in self.sheets.iter().enumerate() {
            let state = match sheet.state {
                SheetState::Visible => "",
                SheetState::Hidden => r#" state="hidden""#,
                SheetState::VeryHidden => r#" state="veryHidden""#,
            };
            let _ = write!(
                s,
                r#"<sheet name="{}" sheetId="{}"{} r:id="rId{}"/>"#,
                escape(&sheet.name),
                i + 1,
                state,
                i + 1
            );
        }
        s.push_str("</sheets>");
        if !self.external_links.is_empty() {
            s.push_str("<externalReferences>");
            for i in 0..self.external_links.len() {
                let _ = write!(s, r#"<externalReference r:id="rId{}"/>"#, self.external_rel_id(i));
            }
            s.push_str("</externalReferences>");
        }
        if !self.defined_names.is_empty() {
            s.push_str("<definedNames>");
            for dn in &self.defined_names {
                let local = dn
                    .local_sheet
                    .map(|i| format!(r#" localSheetId="{i}""#))
                    .unwrap_or_default();
                let _ = write!(
                    s,
                    r#"<definedName name="{}"{}>{}</definedName>"#,
                    escape(&dn.name),
                    local,
                    escape(&dn.refers_to)
                );
            }
            s.push_str("</definedNames>");
        }
        s.push_str("</workbook>");
        s
    }

    fn external_rel_id(&self, i: usize) -> usize {
        self.sheets.len() + 3 + i
    }

    fn workbook_rels(&self) -> String {
        let mut s = format!(
            r#"<?xml version="1.0" encoding="UTF-8" standalone="yes"?>
<Relationships xmlns="{NS_PKG_REL}">"#
        );
        for i in 0..self.sheets.len() {
            let _ = write!(
                s,
                r#"<Relationship Id="rId{}" Type="{REL_BASE}/worksheet" Target="worksheets/sheet{}.xml"/>"#,
                i + 1,
                i + 1
            );
        }
        let n = self.sheets.len();
        let _ = write!(
            s,
            r#"<Relationship Id="rId{}" Type="{REL_BASE}/styles" Target="styles.xml"/>"#,
            n + 1
        );
        if !self.inline_strings {
            let _ = write!(
                s,
                r#"<Relationship Id="rId{}" Type="{REL_BASE}/sharedStrings" Target="sharedStrings.xml"/>"#,
                n + 2
            );
        }
        for i in 0..self.external_links.len() {
            let _ = write!(
                s,
                r#"<Relationship Id="rId{}" Type="{REL_BASE}/externalLink" Target="externalLinks/externalLink{}.xml"/>"#,
                self.external_rel_id(i),
                i + 1
            );
        }
        s.push_str("</Relationships>");
        s
    }

    fn styles_xml(&self) -> String {
        // One font, fill and border record per style keeps indices aligned.
        let mut fonts = String::new();
        let mut fills = String::from(
            r#"<fill><patternFill patternType="none"/></fill><fill><patternFill patternType="gray125"/></fill>"#,
        );
        let mut borders = String::new();
        let mut xfs = String::new();
        for (i, st) in self.styles.iter().enumerate() {
            fonts.push_str("<font>");
            if st.bold {
                fonts.push_str("<b/>");
            }
            fonts.push_str(r#"<sz val="11"/>"#);
            if let Some(c) = &st.font_color {
                let _ = write!(fonts, r#"<color rgb="{c}"/>"#);
            }
            fonts.push_str(r#"<name val="Calibri"/></font>"#);
            match &st.fill {
                Some(rgb) => {
                    let _ = write!(
                        fills,
                        r#"<fill><patternFill patternType="solid"><fgColor rgb="{rgb}"/><bgColor indexed="64"/></patternFill></fill>"#
                    );
                }
                None => fills.push_str(r#"<fill><patternFill patternType="none"/></fill>"#),
            }
            if st.border {
                borders.push_str(
                    r#"<border><left style="thin"/><right style="thin"/><top style="thin"/><bottom style="thin"/><diagonal/></border>"#,
                );
            } else {
                borders.push_str("<border><left/><right/><top/><bottom/><diagonal/></border>");
            }
            let _ = write!(
                xfs,
                r#"<xf numFmtId="0" fontId="{i}" fillId="{}" borderId="{i}" xfId="0"/>"#,
                i + 2
            );
        }
        format!(
            r#"<?xml version="1.0" encoding="UTF-8" standalone="yes"?>
<styleSheet xmlns="{NS_MAIN}"><fonts count="{n}">{fonts}</fonts><fills count="{nf}">{fills}</fills><borders count="{n}">{borders}</borders><cellStyleXfs count="1"><xf numFmtId="0" fontId="0" fillId="0" borderId="0"/></cellStyleXfs><cellXfs count="{n}">{xfs}</cellXfs></styleSheet>"#,
            n = self.styles.len(),
            nf = self.styles.len() + 2
        )
    }

    fn sheet_xml(&self, sheet: &Sheet, strings: &mut StringTable) -> String {
        let mut s = String::with_capacity(64 + sheet.cells.len() * 48);
        let _ = write!(
            s,
            r#"<?xml version="1.0" encoding="UTF-8" standalone="yes"?>
<worksheet xmlns="{NS_MAIN}" xmlns:r="{NS_REL}">"#
        );
        if !sheet.hidden_cols.is_empty() {
            s.push_str("<cols>");
            for c in &sheet.hidden_cols {
                let _ = write!(s, r#"<col min="{c}" max="{c}" width="0" hidden="1"/>"#);
            }
            s.push_str("</cols>");
        }
        s.push_str("<sheetData>");

        let mut rows: BTreeSet<u32> = sheet.cells.keys().map(|&(r, _)| r).collect();
        rows.extend(sheet.hidden_rows.iter().copied());
        let mut cells = sheet.cells.iter().peekable();
        for row in rows {
            let hidden = if sheet.hidden_rows.contains(&row) {
                r#" hidden="1""#
            } else {
                ""
            };
            if sheet.omit_refs {
                let _ = write!(s, "<row{hidden}>");
            } else {
                let _ = write!(s, r#"<row r="{row}"{hidden}>"#);
            }
            while let Some(&(&(r, c), (value, style))) = cells.peek() {
                if r != row {
                    break;
                }
                let addr = if sheet.omit_refs {
                    String::new()
                } else {
                    format!(r#" r="{}{}""#, column_name(c), r)
                };
                write_cell(&mut s, &addr, value, *style, strings, self.inline_strings);
                cells.next();
            }
            s.push_str("</row>");
        }
        s.push_str("</sheetData></worksheet>");
        s
    }
}

fn write_cell(s: &mut String, addr: &str, value: &Value, style: u32, strings: &mut StringTable, inline: bool) {
    let st = if style != 0 {
        format!(r#" s="{style}""#)
    } else {
        String::new()
    };
    match value {
        Value::Blank => {
            let _ = write!(s, "<c{addr}{st}/>");
        }
        Value::Number(n) => {
            let _ = write!(s, "<c{addr}{st}><v>{}</v></c>", fmt_num(*n));
        }
        Value::Text(t) if inline => {
            let _ = write!(
                s,
                r#"<c{addr}{st} t="inlineStr"><is><t xml:space="preserve">{}</t></is></c>"#,
                escape(t)
            );
        }
        Value::Text(t) => {
            let idx = strings.intern(t);
            let _ = write!(s, r#"<c{addr}{st} t="s"><v>{idx}</v></c>"#);
        }
        Value::Bool(b) => {
            let _ = write!(s, r#"<c{addr}{st} t="b"><v>{}</v></c>"#, u8::from(*b));
        }
        Value::Error(e) => {
            let _ = write!(s, r#"<c{addr}{st} t="e"><v>{}</v></c>"#, escape(e));
        }
        Value::Formula { text, cached } => {
            let (t, v) = cached_parts(cached.as_ref());
            let _ = write!(s, "<c{addr}{st}{t}><f>{}</f>{v}</c>", escape(text));
        }
        Value::SharedMaster {
            text,
            range,
            si,
            cached,
        } => {
            let (t, v) = cached_parts(cached.as_ref());
            let _ = write!(
                s,
                r#"<c{addr}{st}{t}><f t="shared" ref="{range}" si="{si}">{}</f>{v}</c>"#,
                escape(text)
            );
        }
        Value::SharedChild { si, cached } => {
            let (t, v) = cached_parts(cached.as_ref());
            let _ = write!(s, r#"<c{addr}{st}{t}><f t="shared" si="{si}"/>{v}</c>"#);
        }
        Value::ArrayFormula { text, range, cached } => {
            let (t, v) = cached_parts(cached.as_ref());
            let _ = write!(
                s,
                r#"<c{addr}{st}{t}><f t="array" ref="{range}">{}</f>{v}</c>"#,
                escape(text)
            );
        }
    }
}

fn cached_parts(cached: Option<&Cached>) -> (String, String) {
    match cached {
        None => (String::new(), String::new()),
        Some(Cached::Number(n)) => (String::new(), format!("<v>{}</v>", fmt_num(*n))),
        Some(Cached::Text(t)) => (r#" t="str""#.into(), format!("<v>{}</v>", escape(t))),
        Some(Cached::Bool(b)) => (r#" t="b""#.into(), format!("<v>{}</v>", u8::from(*b))),
        Some(Cached::Error(e)) => (r#" t="e""#.into(), format!("<v>{}</v>", escape(e))),
    }
}

fn fmt_num(n: f64) -> String {
    format!("{n}")
}

fn external_link_xml(link: &ExternalLink) -> String {
    let mut names = String::new();
    for n in &link.sheet_names {
        let _ = write!(names, r#"<sheetName val="{}"/>"#, escape(n));
    }
    format!(
        r#"<?xml version="1.0" encoding="UTF-8" standalone="yes"?>
<externalLink xmlns="{NS_MAIN}" xmlns:r="{NS_REL}"><externalBook r:id="rId1"><sheetNames>{names}</sheetNames></externalBook></externalLink>"#
    )
}

fn root_rels(with_core: bool) -> String {
    let core = if with_core {
        r#"<Relationship Id="rId2" Type="http://schemas.openxmlformats.org/package/2006/relationships/metadata/core-properties" Target="docProps/core.xml"/>"#
    } else {
        ""
    };
    format!(
        r#"<?xml version="1.0" encoding="UTF-8" standalone="yes"?>
<Relationships xmlns="{NS_PKG_REL}"><Relationship Id="rId1" Type="{REL_BASE}/officeDocument" Target="xl/workbook.xml"/>{core}</Relationships>"#
    )
}

#[derive(Default)]
struct StringTable {
    items: Vec<String>,
    index: std::collections::HashMap<String, usize>,
}

impl StringTable {
    fn intern(&mut self, s: &str) -> usize {
        if let Some(&i) = self.index.get(s) {
            return i;
        }
        self.items.push(s.to_string());
        self.index.insert(s.to_string(), self.items.len() - 1);
        self.items.len() - 1
    }

    fn to_xml(&self) -> String {
        let mut s = format!(
            r#"<?xml version="1.0" encoding="UTF-8" standalone="yes"?>
<sst xmlns="{NS_MAIN}" count="{n}" uniqueCount="{n}">"#,
            n = self.items.len()
        );
        for item in &self.items {
            let _ = write!(s, r#"<si><t xml:space="preserve">{}</t></si>"#, escape(item));
        }
        s.push_str("</sst>");
        s
    }
}

pub fn escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for ch in s.chars() {
        match ch {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            c => out.push(c),
        }
    }
    out
}

/// Column letters for a 1-based column index.
pub fn column_name(mut col: u32) -> String {
    let mut buf = Vec::new();
    while col > 0 {
        let rem = (col - 1) % 26;
        buf.push(b'A' + rem as u8);
        col = (col - 1) / 26;
    }
    buf.reverse();
    String::from_utf8(buf).unwrap()
}

/// Decode a plain `B12` style address to (row, column).
pub fn decode_a1(a1: &str) -> Option<(u32, u32)> {
    let split = a1.find(|c: char| c.is_ascii_digit())?;
    let (letters, digits) = a1.split_at(split);
    if letters.is_empty() || !letters.chars().all(|c| c.is_ascii_alphabetic()) {
        return None;
    }
    let col = letters
        .bytes()
        .fold(0u32, |acc, b| acc * 26 + u32::from(b.to_ascii_uppercase() - b'A' + 1));
    let row = digits.parse().ok()?;
    Some((row, col))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn column_names() {
        assert_eq!(column_name(1), "A");
        assert_eq!(column_name(26), "Z");
        assert_eq!(column_name(27), "AA");
        assert_eq!(column_name(16384), "XFD");
        assert_eq!(decode_a1("XFD1048576"), Some((1048576, 16384)));
    }

    #[test]
    fn writes_a_zip() {
        let mut wb = Workbook::new();
        let mut sheet = Sheet::new("Sheet1");
        sheet.set("A1", 42);
        wb.add_sheet(sheet);
        let bytes = wb.to_bytes().unwrap();
        assert_eq!(&bytes[..2], b"PK");
        assert_eq!(wb.occupied_count(), 1);
    }
}
