//! XLSX package reader producing a [`WorkbookModel`].

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::io::{Cursor, Read};
use std::path::Path;

use quick_xml::events::{BytesStart, Event};
use quick_xml::Reader;
use thiserror::Error;
use zip::ZipArchive;

use super::address::{parse_address, CellAddress, MAX_COLUMN, MAX_ROW};
use super::model::*;
use crate::formula::{shift_formula, ErrorCode};

const CFB_MAGIC: [u8; 4] = [0xD0, 0xCF, 0x11, 0xE0];

#[derive(Debug, Error)]
pub enum LoadError {
    #[error("cannot read file: {0}")]
    Io(#[from] std::io::Error),
    #[error("not a zip container")]
    NotAZipContainer,
    #[error("workbook part missing from package")]
    MissingWorkbookPart,
    #[error("malformed XML in sheet '{sheet}' at byte {offset}: {message}")]
    MalformedSheetXml {
        sheet: String,
        offset: u64,
        message: String,
    },
    #[error("malformed package part {part}: {message}")]
    MalformedPart { part: String, message: String },
    #[error("encrypted or legacy binary workbook is not supported")]
    UnsupportedEncryptedFile,
}

impl LoadError {
    /// Short stable name used in reports.
    pub fn code(&self) -> &'static str {
        match self {
            LoadError::Io(_) => "Io",
            LoadError::NotAZipContainer => "NotAZipContainer",
            LoadError::MissingWorkbookPart => "MissingWorkbookPart",
            LoadError::MalformedSheetXml { .. } => "MalformedSheetXml",
            LoadError::MalformedPart { .. } => "MalformedPart",
            LoadError::UnsupportedEncryptedFile => "UnsupportedEncryptedFile",
        }
    }
}

pub fn load_workbook(path: impl AsRef<Path>) -> Result<WorkbookModel, LoadError> {
    let path = path.as_ref();
    let bytes = std::fs::read(path)?;
    load_bytes(&path.to_string_lossy(), &bytes)
}

/// Load from an in-memory package; `path` is recorded in the model only.
pub fn load_bytes(path: &str, bytes: &[u8]) -> Result<WorkbookModel, LoadError> {
    if bytes.starts_with(&CFB_MAGIC) {
        return Err(LoadError::UnsupportedEncryptedFile);
    }
    let archive = ZipArchive::new(Cursor::new(bytes)).map_err(|_| LoadError::NotAZipContainer)?;
    let mut pkg = Package { archive };

    let workbook_part = pkg
        .relationships("")
        .ok()
        .flatten()
        .and_then(|rels| {
            rels.into_values()
                .find(|r| r.kind.ends_with("/officeDocument"))
                .map(|r| r.target)
        })
        .unwrap_or_else(|| "xl/workbook.xml".to_string());
    let workbook_xml = pkg.part(&workbook_part)?.ok_or(LoadError::MissingWorkbookPart)?;
    let info = parse_workbook(&workbook_part, &workbook_xml)?;
    let rels = pkg.relationships(&workbook_part)?.unwrap_or_default();

    let shared_strings = match rels.values().find(|r| r.kind.ends_with("/sharedStrings")) {
        Some(r) => pkg.part(&r.target)?,
        None => pkg.part("xl/sharedStrings.xml")?,
    }
    .map(|xml| parse_shared_strings(&xml))
    .transpose()?
    .unwrap_or_default();

    let styles = match rels.values().find(|r| r.kind.ends_with("/styles")) {
        Some(r) => pkg.part(&r.target)?,
        None => pkg.part("xl/styles.xml")?,
    }
    .map(|xml| parse_styles(&xml))
    .transpose()?
    .unwrap_or_default();
    let styles = if styles.is_empty() {
        vec![StyleRecord::default()]
    } else {
        styles
    };

    let mut seen = BTreeSet::new();
    let mut sheets = Vec::with_capacity(info.sheets.len());
    for entry in &info.sheets {
        if !seen.insert(entry.name.to_lowercase()) {
            return Err(malformed_part(
                &workbook_part,
                format!("duplicate sheet name '{}'", entry.name),
            ));
        }
        let target = rels.get(&entry.rel_id).map(|r| r.target.clone());
        let xml = match target {
            Some(t) => pkg.part(&t)?,
            None => None,
        };
        let xml = xml.ok_or_else(|| LoadError::MalformedSheetXml {
            sheet: entry.name.clone(),
            offset: 0,
            message: "worksheet part missing".into(),
        })?;
        let parsed = parse_sheet(&entry.name, &xml, &shared_strings, styles.len())?;
        sheets.push(SheetModel {
            name: entry.name.clone(),
            visibility: entry.visibility,
            cells: parsed.cells,
            hidden_rows: parsed.hidden_rows,
            hidden_columns: parsed.hidden_columns,
        });
    }
    if sheets.is_empty() {
        return Err(malformed_part(&workbook_part, "workbook lists no sheets".into()));
    }

    let mut external_links = Vec::new();
    for (i, rel_id) in info.external_refs.iter().enumerate() {
        let mut link = ExternalLink {
            index: i + 1,
            target: None,
            sheet_names: Vec::new(),
        };
        if let Some(rel) = rels.get(rel_id) {
            if let Some(xml) = pkg.part(&rel.target)? {
                let (book_rel, names) = parse_external_link(&rel.target, &xml)?;
                link.sheet_names = names;
                if let Some(book_rel) = book_rel {
                    link.target = pkg
                        .relationships(&rel.target)?
                        .and_then(|r| r.get(&book_rel).map(|r| r.raw_target.clone()));
                }
            }
        }
        external_links.push(link);
    }

    let file_creation_date = pkg.part("docProps/core.xml")?.and_then(|xml| parse_created(&xml));

    Ok(WorkbookModel {
        path: path.to_string(),
        sheets,
        defined_names: info.defined_names,
        external_links,
        file_creation_date,
        styles,
    })
}

fn malformed_part(part: &str, message: String) -> LoadError {
    LoadError::MalformedPart {
        part: part.to_string(),
        message,
    }
}

struct Package<'a> {
    archive: ZipArchive<Cursor<&'a [u8]>>,
}

struct Relationship {
    kind: String,
    /// Target resolved to a package path.
    target: String,
    raw_target: String,
}

impl Package<'_> {
    fn part(&mut self, name: &str) -> Result<Option<Vec<u8>>, LoadError> {
        let name = name.trim_start_matches('/');
        let index = match self.archive.index_for_name(name) {
            Some(i) => i,
            None => {
                // Part names are case-insensitive in OPC.
                let found = self
                    .archive
                    .file_names()
                    .find(|n| n.eq_ignore_ascii_case(name))
                    .map(str::to_string);
                match found.and_then(|n| self.archive.index_for_name(&n)) {
                    Some(i) => i,
                    None => return Ok(None),
                }
            }
        };
        let mut file = self
            .archive
            .by_index(index)
            .map_err(|e| malformed_part(name, e.to_string()))?;
        let mut buf = Vec::with_capacity(file.size() as usize);
        file.read_to_end(&mut buf)
            .map_err(|e| malformed_part(name, e.to_string()))?;
        Ok(Some(buf))
    }

    /// Relationships of `part` ("" for the package root), keyed by id.
    fn relationships(&mut self, part: &str) -> Result<Option<HashMap<String, Relationship>>, LoadError> {
        let (dir, file) = match part.rfind('/') {
            Some(i) => (&part[..i + 1], &part[i + 1..]),
            None => ("", part),
        };
        let rels_name = format!("{dir}_rels/{file}.rels");
        let Some(xml) = self.part(&rels_name)? else {
            return Ok(None);
        };
        let mut out = HashMap::new();
        let mut reader = xml_reader(&xml);
        let mut buf = Vec::new();
        loop {
            match reader.read_event_into(&mut buf) {
                Ok(Event::Start(e) | Event::Empty(e)) if e.local_name().as_ref() == b"Relationship" => {
                    let attrs = attributes(&e);
                    let id = attrs.get("Id").cloned().unwrap_or_default();
                    let raw = attrs.get("Target").cloned().unwrap_or_default();
                    let external = attrs.get("TargetMode").is_some_and(|m| m == "External");
                    let target = if external {
                        raw.clone()
                    } else {
                        resolve_target(dir, &raw)
                    };
                    out.insert(
                        id,
                        Relationship {
                            kind: attrs.get("Type").cloned().unwrap_or_default(),
                            target,
                            raw_target: raw,
                        },
                    );
                }
                Ok(Event::Eof) => break,
                Err(e) => return Err(malformed_part(&rels_name, e.to_string())),
                _ => {}
            }
            buf.clear();
        }
        Ok(Some(out))
    }
}

fn resolve_target(base_dir: &str, target: &str) -> String {
    if let Some(abs) = target.strip_prefix('/') {
        return abs.to_string();
    }
    let mut parts: Vec<&str> = base_dir.split('/').filter(|s| !s.is_empty()).collect();
    for seg in target.split('/') {
        match seg {
            "" | "." => {}
            ".." => {
                parts.pop();
            }
            s => parts.push(s),
        }
    }
    parts.join("/")
}

fn xml_reader(xml: &[u8]) -> Reader<&[u8]> {
    let mut reader = Reader::from_reader(xml);
    reader.config_mut().trim_text(false);
    reader
}

/// Attributes by local name, unescaped.
fn attributes(e: &BytesStart) -> HashMap<String, String> {
    let mut out = HashMap::new();
    for attr in e.attributes().flatten() {
        let key = String::from_utf8_lossy(attr.key.local_name().as_ref()).into_owned();
        let value = attr
            .unescape_value()
            .map(|v| v.into_owned())
            .unwrap_or_else(|_| String::from_utf8_lossy(&attr.value).into_owned());
        out.insert(key, value);
    }
    out
}

fn attr(e: &BytesStart, name: &[u8]) -> Option<String> {
    e.attributes()
        .flatten()
        .find(|a| a.key.local_name().as_ref() == name)
        .map(|a| {
            a.unescape_value()
                .map(|v| v.into_owned())
                .unwrap_or_else(|_| String::from_utf8_lossy(&a.value).into_owned())
        })
}

fn truthy(v: Option<&str>) -> bool {
    matches!(v, Some("1" | "true"))
}

struct SheetEntry {
    name: String,
    visibility: SheetVisibility,
    rel_id: String,
}

struct WorkbookInfo {
    sheets: Vec<SheetEntry>,
    defined_names: Vec<DefinedName>,
    external_refs: Vec<String>,
}

fn parse_workbook(part: &str, xml: &[u8]) -> Result<WorkbookInfo, LoadError> {
    let mut info = WorkbookInfo {
        sheets: Vec::new(),
        defined_names: Vec::new(),
        external_refs: Vec::new(),
    };
    let mut reader = xml_reader(xml);
    let mut buf = Vec::new();
    let mut pending_name: Option<(String, Option<usize>)> = None;
    let mut name_text = String::new();
    loop {
        match reader.read_event_into(&mut buf) {
            Ok(Event::Start(e)) | Ok(Event::Empty(e)) if e.local_name().as_ref() == b"sheet" => {
                let a = attributes(&e);
                let visibility = match a.get("state").map(String::as_str) {
                    Some("hidden") => SheetVisibility::Hidden,
                    Some("veryHidden") => SheetVisibility::VeryHidden,
                    _ => SheetVisibility::Visible,
                };
                info.sheets.push(SheetEntry {
                    name: a.get("name").cloned().unwrap_or_default(),
                    visibility,
                    rel_id: a.get("id").cloned().unwrap_or_default(),
                });
            }
            Ok(Event::Start(e)) | Ok(Event::Empty(e)) if e.local_name().as_ref() == b"externalReference" => {
                info.external_refs.push(attr(&e, b"id").unwrap_or_default());
            }
            Ok(Event::Start(e)) if e.local_name().as_ref() == b"definedName" => {
                let a = attributes(&e);
                let scope = a.get("localSheetId").and_then(|s| s.parse().ok());
                pending_name = Some((a.get("name").cloned().unwrap_or_default(), scope));
                name_text.clear();
            }
            Ok(Event::Text(t)) if pending_name.is_some() => {
                name_text.push_str(&t.unescape().map_err(|e| malformed_part(part, e.to_string()))?);
            }
            Ok(Event::CData(t)) if pending_name.is_some() => {
                name_text.push_str(&String::from_utf8_lossy(&t));
            }
            Ok(Event::End(e)) if e.local_name().as_ref() == b"definedName" => {
                if let Some((name, scope)) = pending_name.take() {
                    let text = name_text.trim();
                    info.defined_names.push(DefinedName {
                        name,
                        scope: scope.map(|i: usize| i.to_string()),
                        refers_to: text.strip_prefix('=').unwrap_or(text).to_string(),
                    });
                }
            }
            Ok(Event::Eof) => break,
            Err(e) => return Err(malformed_part(part, e.to_string())),
            _ => {}
        }
        buf.clear();
    }
    // Local name scopes are recorded as sheet positions; map them to names.
    for d in &mut info.defined_names {
        if let Some(idx) = d.scope.as_ref().and_then(|s| s.parse::<usize>().ok()) {
            d.scope = info.sheets.get(idx).map(|s| s.name.clone());
        }
    }
    Ok(info)
}

fn parse_shared_strings(xml: &[u8]) -> Result<Vec<String>, LoadError> {
    let part = "xl/sharedStrings.xml";
    let mut out = Vec::new();
    let mut reader = xml_reader(xml);
    let mut buf = Vec::new();
    let mut current: Option<String> = None;
    let mut in_text = false;
    let mut phonetic_depth = 0usize;
    loop {
        match reader.read_event_into(&mut buf) {
            Ok(Event::Start(e)) => match e.local_name().as_ref() {
                b"si" => current = Some(String::new()),
                b"rPh" => phonetic_depth += 1,
                b"t" => in_text = phonetic_depth == 0,
                _ => {}
            },
            Ok(Event::Empty(e)) if e.local_name().as_ref() == b"si" => out.push(String::new()),
            Ok(Event::End(e)) => match e.local_name().as_ref() {
                b"si" => out.push(current.take().unwrap_or_default()),
                b"rPh" => phonetic_depth = phonetic_depth.saturating_sub(1),
                b"t" => in_text = false,
                _ => {}
            },
            Ok(Event::Text(t)) if in_text => {
                if let Some(s) = current.as_mut() {
                    s.push_str(&t.unescape().map_err(|e| malformed_part(part, e.to_string()))?);
                }
            }
            Ok(Event::CData(t)) if in_text => {
                if let Some(s) = current.as_mut() {
                    s.push_str(&String::from_utf8_lossy(&t));
                }
            }
            Ok(Event::Eof) => break,
            Err(e) => return Err(malformed_part(part, e.to_string())),
            _ => {}
        }
        buf.clear();
    }
    Ok(out)
}

fn color_of(e: &BytesStart) -> Option<String> {
    let a = attributes(e);
    let base = if let Some(rgb) = a.get("rgb") {
        format!("rgb:{}", rgb.to_ascii_uppercase())
    } else if let Some(theme) = a.get("theme") {
        format!("theme:{theme}")
    } else {
        // auto or absent yields no colour
        format!("indexed:{}", a.get("indexed")?)
    };
    Some(match a.get("tint") {
        Some(t) if t.parse::<f64>().is_ok_and(|v| v != 0.0) => format!("{base}{t:+}").replace("+-", "-"),
        _ => base,
    })
}

fn parse_styles(xml: &[u8]) -> Result<Vec<StyleRecord>, LoadError> {
    let part = "xl/styles.xml";
    #[derive(Default, Clone)]
    struct Font {
        bold: bool,
        color: Option<String>,
    }
    let mut fonts: Vec<Font> = Vec::new();
    let mut fills: Vec<Option<String>> = Vec::new();
    let mut borders: Vec<bool> = Vec::new();
    let mut xfs: Vec<(usize, usize, usize)> = Vec::new();

    #[derive(PartialEq)]
    enum Section {
        None,
        Fonts,
        Fills,
        Borders,
        CellXfs,
    }
    let mut section = Section::None;
    let mut pattern_none = false;
    let mut reader = xml_reader(xml);
    let mut buf = Vec::new();
    loop {
        let event = reader.read_event_into(&mut buf);
        let (e, empty) = match event {
            Ok(Event::Start(e)) => (e, false),
            Ok(Event::Empty(e)) => (e, true),
            Ok(Event::End(e)) => {
                match e.local_name().as_ref() {
                    b"fonts" | b"fills" | b"borders" | b"cellXfs" => section = Section::None,
                    _ => {}
                }
                buf.clear();
                continue;
            }
            Ok(Event::Eof) => break,
            Err(e) => return Err(malformed_part(part, e.to_string())),
            _ => {
                buf.clear();
                continue;
            }
        };
        match (e.local_name().as_ref(), &section) {
            (b"fonts", _) if !empty => section = Section::Fonts,
            (b"fills", _) if !empty => section = Section::Fills,
            (b"borders", _) if !empty => section = Section::Borders,
            (b"cellXfs", _) if !empty => section = Section::CellXfs,
            (b"font", Section::Fonts) => fonts.push(Font::default()),
            (b"b", Section::Fonts) => {
                if let Some(f) = fonts.last_mut() {
                    f.bold = !matches!(attr(&e, b"val").as_deref(), Some("0" | "false"));
                }
            }
            (b"color", Section::Fonts) => {
                if let Some(f) = fonts.last_mut() {
                    f.color = color_of(&e);
                }
            }
            (b"fill", Section::Fills) => fills.push(None),
            (b"patternFill", Section::Fills) => {
                pattern_none = matches!(attr(&e, b"patternType").as_deref(), None | Some("none"));
                if !pattern_none {
                    if let Some(f) = fills.last_mut() {
                        // Solid fill with no color element still counts as a fill.
                        *f = Some("pattern".into());
                    }
                }
            }
            (b"fgColor", Section::Fills) if !pattern_none => {
                if let (Some(f), Some(c)) = (fills.last_mut(), color_of(&e)) {
                    *f = Some(c);
                }
            }
            (b"gradientFill", Section::Fills) => {
                if let Some(f) = fills.last_mut() {
                    *f = Some("gradient".into());
                }
            }
            (b"border", Section::Borders) => {
                borders.push(false);
            }
            (b"left" | b"right" | b"top" | b"bottom" | b"start" | b"end" | b"diagonal", Section::Borders) => {
                if attr(&e, b"style").is_some_and(|s| s != "none") {
                    if let Some(b) = borders.last_mut() {
                        *b = true;
                    }
                }
            }
            (b"xf", Section::CellXfs) => {
                let a = attributes(&e);
                let get = |k: &str| a.get(k).and_then(|v| v.parse::<usize>().ok()).unwrap_or(0);
                xfs.push((get("fontId"), get("fillId"), get("borderId")));
            }
            _ => {}
        }
        buf.clear();
    }
    Ok(xfs
        .into_iter()
        .map(|(font, fill, border)| {
            let f = fonts.get(font).cloned().unwrap_or_default();
            StyleRecord {
                fill: fills.get(fill).cloned().flatten(),
                font_color: f.color,
                bold: f.bold,
                border: borders.get(border).copied().unwrap_or(false),
            }
        })
        .collect())
}

fn parse_external_link(part: &str, xml: &[u8]) -> Result<(Option<String>, Vec<String>), LoadError> {
    let mut rel = None;
    let mut names = Vec::new();
    let mut reader = xml_reader(xml);
    let mut buf = Vec::new();
    loop {
        match reader.read_event_into(&mut buf) {
            Ok(Event::Start(e) | Event::Empty(e)) => match e.local_name().as_ref() {
                b"externalBook" => rel = attr(&e, b"id"),
                b"sheetName" => {
                    if let Some(v) = attr(&e, b"val") {
                        names.push(v);
                    }
                }
                _ => {}
            },
            Ok(Event::Eof) => break,
            Err(e) => return Err(malformed_part(part, e.to_string())),
            _ => {}
        }
        buf.clear();
    }
    Ok((rel, names))
}

fn parse_created(xml: &[u8]) -> Option<String> {
    let mut reader = xml_reader(xml);
    let mut buf = Vec::new();
    let mut inside = false;
    let mut text = String::new();
    loop {
        match reader.read_event_into(&mut buf) {
            Ok(Event::Start(e)) if e.local_name().as_ref() == b"created" => inside = true,
            Ok(Event::Text(t)) if inside => text.push_str(&t.unescape().ok()?),
            Ok(Event::End(e)) if e.local_name().as_ref() == b"created" => {
                let t = text.trim();
                return (!t.is_empty()).then(|| t.to_string());
            }
            Ok(Event::Eof) | Err(_) => return None,
            _ => {}
        }
        buf.clear();
    }
}

struct ParsedSheet {
    cells: BTreeMap<(u32, u32), Cell>,
    hidden_rows: BTreeSet<u32>,
    hidden_columns: BTreeSet<u32>,
}

#[derive(Default)]
struct RawCell {
    row: u32,
    col: u32,
    style: usize,
    kind: Option<String>,
    value: Option<String>,
    inline: Option<String>,
    formula: Option<String>,
    formula_kind: Option<String>,
    formula_ref: Option<String>,
    shared_index: Option<String>,
    offset: u64,
}

enum Capture {
    None,
    Value,
    Formula,
    Inline,
}

fn parse_sheet(
    sheet: &str,
    xml: &[u8],
    shared_strings: &[String],
    style_count: usize,
) -> Result<ParsedSheet, LoadError> {
    let malformed = |offset: u64, message: String| LoadError::MalformedSheetXml {
        sheet: sheet.to_string(),
        offset,
        message,
    };
    let mut cells = BTreeMap::new();
    let mut hidden_rows = BTreeSet::new();
    let mut hidden_columns = BTreeSet::new();
    let mut shared_masters: HashMap<String, (u32, u32, String)> = HashMap::new();
    let mut shared_children: Vec<(u32, u32, String)> = Vec::new();
    let mut arrays: Vec<(String, String)> = Vec::new();

    let mut reader = xml_reader(xml);
    let mut buf = Vec::new();
    let mut row: u32 = 0;
    let mut last_col: u32 = 0;
    let mut current: Option<RawCell> = None;
    let mut capture = Capture::None;
    let mut in_sheet_data = false;
    let mut in_inline_t = false;

    loop {
        let offset = reader.buffer_position();
        let event = reader
            .read_event_into(&mut buf)
            .map_err(|e| malformed(reader.error_position(), e.to_string()))?;
        let is_empty = matches!(event, Event::Empty(_));
        match event {
            Event::Start(e) | Event::Empty(e) if !in_sheet_data || current.is_none() => match e.local_name().as_ref() {
                b"sheetData" => in_sheet_data = true,
                b"col" => {
                    let a = attributes(&e);
                    if truthy(a.get("hidden").map(String::as_str)) {
                        let min: u32 = a.get("min").and_then(|v| v.parse().ok()).unwrap_or(1);
                        let max: u32 = a.get("max").and_then(|v| v.parse().ok()).unwrap_or(min);
                        for c in min.max(1)..=max.min(MAX_COLUMN) {
                            hidden_columns.insert(c);
                        }
                    }
                }
                b"row" if in_sheet_data => {
                    let a = attributes(&e);
                    row = match a.get("r") {
                        Some(r) => r
                            .parse()
                            .map_err(|_| malformed(offset, format!("bad row number '{r}'")))?,
                        None => row + 1,
                    };
                    if row == 0 || row > MAX_ROW {
                        return Err(malformed(offset, format!("row {row} outside the grid")));
                    }
                    last_col = 0;
                    if truthy(a.get("hidden").map(String::as_str)) {
                        hidden_rows.insert(row);
                    }
                }
                b"c" if in_sheet_data => {
                    let a = attributes(&e);
                    let (r, c) = match a.get("r") {
                        Some(text) => {
                            let addr = parse_address(text)
                                .map_err(|_| malformed(offset, format!("bad cell reference '{text}'")))?;
                            (addr.row, addr.column)
                        }
                        None => (row.max(1), last_col + 1),
                    };
                    if c > MAX_COLUMN || r > MAX_ROW || r == 0 || c == 0 {
                        return Err(malformed(offset, "cell outside the grid".into()));
                    }
                    row = r;
                    last_col = c;
                    let style = a.get("s").and_then(|s| s.parse::<usize>().ok()).unwrap_or(0);
                    let raw = RawCell {
                        row: r,
                        col: c,
                        style: if style < style_count { style } else { 0 },
                        kind: a.get("t").cloned(),
                        offset,
                        ..Default::default()
                    };
                    if is_empty {
                        finish_cell(
                            sheet,
                            raw,
                            shared_strings,
                            &mut cells,
                            &mut shared_masters,
                            &mut shared_children,
                            &mut arrays,
                        )
                        .map_err(|m| malformed(offset, m))?;
                    } else {
                        current = Some(raw);
                    }
                }
                _ => {}
            },
            Event::Start(e) | Event::Empty(e) => {
                let cell = current.as_mut().expect("inside a cell");
                match e.local_name().as_ref() {
                    b"v" => {
                        cell.value.get_or_insert_with(String::new);
                        capture = if is_empty { Capture::None } else { Capture::Value };
                    }
                    b"f" => {
                        let a = attributes(&e);
                        cell.formula_kind = a.get("t").cloned();
                        cell.formula_ref = a.get("ref").cloned();
                        cell.shared_index = a.get("si").cloned();
                        cell.formula.get_or_insert_with(String::new);
                        capture = if is_empty { Capture::None } else { Capture::Formula };
                    }
                    b"is" => {
                        cell.inline.get_or_insert_with(String::new);
                        capture = Capture::Inline;
                    }
                    b"rPh" => capture = Capture::None,
                    b"t" if matches!(capture, Capture::Inline) => in_inline_t = !is_empty,
                    _ => {}
                }
            }
            Event::Text(t) => {
                if let Some(cell) = current.as_mut() {
                    let text = t.unescape().map_err(|e| malformed(offset, e.to_string()))?;
                    match capture {
                        Capture::Value => cell.value.get_or_insert_with(String::new).push_str(&text),
                        Capture::Formula => cell.formula.get_or_insert_with(String::new).push_str(&text),
                        Capture::Inline if in_inline_t => cell.inline.get_or_insert_with(String::new).push_str(&text),
                        _ => {}
                    }
                }
            }
            Event::CData(t) => {
                if let Some(cell) = current.as_mut() {
                    let text = String::from_utf8_lossy(&t);
                    match capture {
                        Capture::Value => cell.value.get_or_insert_with(String::new).push_str(&text),
                        Capture::Formula => cell.formula.get_or_insert_with(String::new).push_str(&text),
                        Capture::Inline if in_inline_t => cell.inline.get_or_insert_with(String::new).push_str(&text),
                        _ => {}
                    }
                }
            }
            Event::End(e) => match e.local_name().as_ref() {
                b"v" | b"f" => capture = Capture::None,
                b"t" => in_inline_t = false,
                b"is" => capture = Capture::None,
                b"rPh" => capture = Capture::Inline,
                b"c" => {
                    if let Some(raw) = current.take() {
                        let at = raw.offset;
                        finish_cell(
                            sheet,
                            raw,
                            shared_strings,
                            &mut cells,
                            &mut shared_masters,
                            &mut shared_children,
                            &mut arrays,
                        )
                        .map_err(|m| malformed(at, m))?;
                    }
                    capture = Capture::None;
                }
                b"sheetData" => in_sheet_data = false,
                _ => {}
            },
            Event::Eof => break,
            _ => {}
        }
        buf.clear();
    }
    if current.is_some() {
        return Err(malformed(reader.buffer_position(), "unterminated cell".into()));
    }

    for (r, c, si) in shared_children {
        let Some((mr, mc, text)) = shared_masters.get(&si) else {
            return Err(malformed(0, format!("shared formula {si} has no anchor")));
        };
        let shifted = shift_formula(text, i64::from(r) - i64::from(*mr), i64::from(c) - i64::from(*mc))
            .unwrap_or_else(|_| text.clone());
        if let Some(Cell {
            content: CellContent::Formula { text, .. },
            ..
        }) = cells.get_mut(&(r, c))
        {
            *text = shifted;
        }
    }
    for (range, text) in arrays {
        let Some((start, end)) = split_range(&range) else {
            continue;
        };
        for r in start.row..=end.row {
            for c in start.column..=end.column {
                if let Some(cell) = cells.get_mut(&(r, c)) {
                    if cell.content.kind() != CellKind::Formula && cell.is_occupied() {
                        let cached = literal_as_cached(&cell.content);
                        cell.content = CellContent::Formula {
                            text: text.clone(),
                            cached,
                        };
                    }
                }
            }
        }
    }
    Ok(ParsedSheet {
        cells,
        hidden_rows,
        hidden_columns,
    })
}

fn split_range(range: &str) -> Option<(CellAddress, CellAddress)> {
    let (a, b) = range.split_once(':').unwrap_or((range, range));
    Some((parse_address(a).ok()?, parse_address(b).ok()?))
}

fn literal_as_cached(content: &CellContent) -> Option<CellValue> {
    match content {
        CellContent::Number(n) => Some(CellValue::Number(*n)),
        CellContent::Text(t) => Some(CellValue::Text(t.clone())),
        CellContent::Boolean(b) => Some(CellValue::Boolean(*b)),
        CellContent::Error(e) => Some(CellValue::Error(*e)),
        _ => None,
    }
}

#[allow(clippy::too_many_arguments)]
fn finish_cell(
    sheet: &str,
    raw: RawCell,
    shared_strings: &[String],
    cells: &mut BTreeMap<(u32, u32), Cell>,
    shared_masters: &mut HashMap<String, (u32, u32, String)>,
    shared_children: &mut Vec<(u32, u32, String)>,
    arrays: &mut Vec<(String, String)>,
) -> Result<(), String> {
    let value = decode_value(&raw, shared_strings)?;
    let formula_text = raw.formula.as_deref().map(|f| {
        let f = f.trim();
        f.strip_prefix('=').unwrap_or(f).to_string()
    });
    let content = match (raw.formula_kind.as_deref(), formula_text) {
        (Some("dataTable"), _) => value_content(value),
        (Some("shared"), Some(text)) if text.is_empty() => {
            let si = raw.shared_index.clone().ok_or("shared formula without index")?;
            shared_children.push((raw.row, raw.col, si));
            // Text is filled in from the anchor once the sheet is read.
            CellContent::Formula {
                text: String::new(),
                cached: value,
            }
        }
        (kind, Some(text)) if !text.is_empty() => {
            if kind == Some("shared") {
                if let Some(si) = raw.shared_index.clone() {
                    shared_masters.entry(si).or_insert((raw.row, raw.col, text.clone()));
                }
            }
            if kind == Some("array") {
                if let Some(r) = raw.formula_ref.clone() {
                    arrays.push((r, text.clone()));
                }
            }
            CellContent::Formula { text, cached: value }
        }
        _ => value_content(value),
    };
    cells.insert(
        (raw.row, raw.col),
        Cell {
            address: CellAddress::on_sheet(sheet, raw.col, raw.row),
            content,
            style: raw.style,
        },
    );
    Ok(())
}

fn value_content(value: Option<CellValue>) -> CellContent {
    match value {
        None => CellContent::Blank,
        Some(CellValue::Number(n)) => CellContent::Number(n),
        Some(CellValue::Text(t)) => CellContent::Text(t),
        Some(CellValue::Boolean(b)) => CellContent::Boolean(b),
        Some(CellValue::Error(e)) => CellContent::Error(e),
    }
}

fn decode_value(raw: &RawCell, shared_strings: &[String]) -> Result<Option<CellValue>, String> {
    let kind = raw.kind.as_deref().unwrap_or("n");
    if kind == "inlineStr" {
        return Ok(raw.inline.clone().or_else(|| raw.value.clone()).map(CellValue::Text));
    }
    let Some(v) = raw.value.as_deref() else {
        return Ok(None);
    };
    Ok(Some(match kind {
        "s" => {
            let idx: usize = v.trim().parse().map_err(|_| format!("bad shared string index '{v}'"))?;
            CellValue::Text(
                shared_strings
                    .get(idx)
                    .cloned()
                    .ok_or_else(|| format!("shared string index {idx} out of range"))?,
            )
        }
        "str" | "d" => CellValue::Text(v.to_string()),
        "b" => CellValue::Boolean(matches!(v.trim(), "1" | "TRUE" | "true")),
        "e" => match ErrorCode::parse(v.trim()) {
            Some(code) => CellValue::Error(code),
            // Newer error kinds (#SPILL!, #CALC!) are kept as their text.
            None => CellValue::Text(v.to_string()),
        },
        _ => {
            if v.trim().is_empty() {
                return Ok(None);
            }
            let n: f64 = v.trim().parse().map_err(|_| format!("bad number '{v}'"))?;
            if !n.is_finite() {
                return Err(format!("bad number '{v}'"));
            }
            CellValue::Number(n)
        }
    }))
}
