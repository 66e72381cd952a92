//! Survey-response data model, file ingestion, and poor-call labeling.
//!
//! A [`Dataset`] owns a [`TokenCatalog`], the per-call [`ResponseRecord`]s and
//! the derived poor-call labels. Records without a star rating are kept (they
//! count as survey displays) but carry no label and are skipped by every
//! label-conditioned statistic.

use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Positional index of a token in its catalog.
pub type TokenId = usize;

/// Lowest rating that is *not* a poor call.
const POOR_CALL_MAX_RATING: u8 = 2;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Panel {
    Audio,
    Video,
}

impl fmt::Display for Panel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Panel::Audio => "audio",
            Panel::Video => "video",
        })
    }
}

impl FromStr for Panel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "audio" => Ok(Panel::Audio),
            "video" => Ok(Panel::Video),
            other => Err(Error::Schema(format!("unknown panel `{other}`"))),
        }
    }
}

/// Experiment arm a call was assigned to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Arm {
    Control,
    Treatment,
    None,
}

impl fmt::Display for Arm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Arm::Control => "control",
            Arm::Treatment => "treatment",
            Arm::None => "none",
        })
    }
}

impl FromStr for Arm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "control" => Ok(Arm::Control),
            "treatment" => Ok(Arm::Treatment),
            "none" => Ok(Arm::None),
            other => Err(Error::Parameter(format!("unknown arm `{other}`"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Token {
    pub id: TokenId,
    pub label: String,
    pub panel: Panel,
}

/// The universe of problem tokens. Ids are `0..len`, labels are unique.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TokenCatalog {
    tokens: Vec<Token>,
}

/// Audio tokens in their original fixed display order.
const DEFAULT_AUDIO: [&str; 8] = [
    "I could not hear any sound",
    "The other side could not hear any sound",
    "I heard echo in the call",
    "I heard noise in the call",
    "Volume was low",
    "The call ended unexpectedly",
    "Speech was not natural or sounded distorted",
    "We kept interrupting each other",
];

/// Video tokens in their original fixed display order.
const DEFAULT_VIDEO: [&str; 7] = [
    "I could not see any video",
    "The other side could not see my video",
    "Image quality was poor",
    "Video kept freezing",
    "Video stopped unexpectedly",
    "The other side was too dark",
    "Video was ahead or behind audio",
];

impl TokenCatalog {
    /// Selections are stored as a 64-bit set.
    pub const MAX_TOKENS: usize = 64;

    /// Builds a catalog, assigning ids by position.
    pub fn new<S: Into<String>>(entries: impl IntoIterator<Item = (S, Panel)>) -> Result<Self> {
        let tokens = entries
            .into_iter()
            .enumerate()
            .map(|(id, (label, panel))| Token {
                id,
                label: label.into(),
                panel,
            })
            .collect();
        Self::from_tokens(tokens)
    }

    pub fn from_tokens(tokens: Vec<Token>) -> Result<Self> {
        if tokens.is_empty() {
            return Err(Error::Schema("catalog has no tokens".into()));
        }
        if tokens.len() > Self::MAX_TOKENS {
            return Err(Error::Capacity(format!(
                "catalog has {} tokens, at most {} supported",
                tokens.len(),
                Self::MAX_TOKENS
            )));
        }
        for (pos, token) in tokens.iter().enumerate() {
            if token.id != pos {
                return Err(Error::Schema(format!(
                    "token ids must be contiguous from 0: found id {} at position {pos}",
                    token.id
                )));
            }
            if token.label.is_empty() {
                return Err(Error::Schema(format!("token {pos} has an empty label")));
            }
            if tokens[..pos].iter().any(|t| t.label == token.label) {
                return Err(Error::Schema(format!(
                    "duplicate token label `{}`",
                    token.label
                )));
            }
        }
        Ok(Self { tokens })
    }

    /// The 15-token catalog (8 audio, 7 video) in its original fixed order.
    pub fn default_catalog() -> Self {
        let audio = DEFAULT_AUDIO.iter().map(|l| (*l, Panel::Audio));
        let video = DEFAULT_VIDEO.iter().map(|l| (*l, Panel::Video));
        Self::new(audio.chain(video)).expect("built-in catalog is valid")
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn tokens(&self) -> &[Token] {
        &self.tokens
    }

    pub fn get(&self, id: TokenId) -> Option<&Token> {
        self.tokens.get(id)
    }

    /// Label of `id`. Panics if `id` is out of range.
    pub fn label(&self, id: TokenId) -> &str {
        &self.tokens[id].label
    }

    pub fn id_of(&self, label: &str) -> Option<TokenId> {
        self.tokens.iter().position(|t| t.label == label)
    }

    /// Ids of the tokens on `panel`, in catalog order.
    pub fn panel_tokens(&self, panel: Panel) -> Vec<TokenId> {
        self.tokens
            .iter()
            .filter(|t| t.panel == panel)
            .map(|t| t.id)
            .collect()
    }

    /// Checks that every id in `subset` is in range and appears once.
    pub fn check_subset(&self, subset: &[TokenId]) -> Result<()> {
        let mut seen = 0u64;
        for &id in subset {
            if id >= self.len() {
                return Err(Error::Parameter(format!(
                    "token id {id} out of range for a catalog of {}",
                    self.len()
                )));
            }
            if seen & (1 << id) != 0 {
                return Err(Error::Parameter(format!(
                    "token id {id} repeated in subset"
                )));
            }
            seen |= 1 << id;
        }
        Ok(())
    }

    /// Reads a catalog CSV with header `id,label,panel`.
    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().flexible(true).from_reader(reader);
        let headers = rdr.headers().map_err(csv_load_error)?.clone();
        if headers.iter().collect::<Vec<_>>() != ["id", "label", "panel"] {
            return Err(Error::Schema(
                "catalog header must be `id,label,panel`".into(),
            ));
        }
        let mut tokens = Vec::new();
        for row in rdr.records() {
            let row = row.map_err(csv_load_error)?;
            let line = row.position().map_or(0, |p| p.line() as usize);
            if row.len() != 3 {
                return Err(Error::Load {
                    line,
                    message: format!("expected 3 columns, found {}", row.len()),
                });
            }
            let id = row[0].parse().map_err(|_| Error::Load {
                line,
                message: format!("token id `{}` is not a non-negative integer", &row[0]),
            })?;
            let panel = row[2].parse().map_err(|e: Error| Error::Load {
                line,
                message: e.to_string(),
            })?;
            tokens.push(Token {
                id,
                label: row[1].to_string(),
                panel,
            });
        }
        Self::from_tokens(tokens)
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(writer);
        wtr.write_record(["id", "label", "panel"])
            .map_err(csv_write_error)?;
        for t in &self.tokens {
            wtr.write_record([t.id.to_string(), t.label.clone(), t.panel.to_string()])
                .map_err(csv_write_error)?;
        }
        wtr.flush().map_err(|e| Error::io("<catalog>", e))?;
        Ok(())
    }

    pub fn load_csv(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        Self::read_csv(BufReader::new(file))
    }

    pub fn save_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_csv(BufWriter::new(file))
    }
}

/// Per-call token selections as a bit set over catalog ids.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub struct Selections(u64);

impl Selections {
    pub const fn empty() -> Self {
        Selections(0)
    }

    pub const fn from_bits(bits: u64) -> Self {
        Selections(bits)
    }

    pub fn from_ids(ids: impl IntoIterator<Item = TokenId>) -> Self {
        Selections(ids.into_iter().fold(0, |acc, id| acc | (1 << id)))
    }

    pub const fn bits(self) -> u64 {
        self.0
    }

    pub const fn contains(self, id: TokenId) -> bool {
        self.0 >> id & 1 == 1
    }

    pub fn insert(&mut self, id: TokenId) {
        self.0 |= 1 << id;
    }

    pub fn remove(&mut self, id: TokenId) {
        self.0 &= !(1 << id);
    }

    pub const fn count(self) -> u32 {
        self.0.count_ones()
    }

    pub const fn is_empty(self) -> bool {
        self.0 == 0
    }

    /// Packs the values of `subset` into a cell index: bit `j` holds `subset[j]`.
    #[inline]
    pub fn pattern(self, subset: &[TokenId]) -> u32 {
        subset
            .iter()
            .enumerate()
            .fold(0, |acc, (j, &id)| acc | ((self.0 >> id & 1) as u32) << j)
    }

    pub fn ids(self) -> impl Iterator<Item = TokenId> {
        (0..64).filter(move |&id| self.contains(id))
    }
}

/// One call's survey outcome.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ResponseRecord {
    pub call_id: String,
    pub arm: Arm,
    pub platform: String,
    pub rating: Option<u8>,
    pub selections: Selections,
}

impl ResponseRecord {
    /// A call responds to the questionnaire iff any token is selected.
    pub fn responded(&self) -> bool {
        !self.selections.is_empty()
    }

    pub fn poor_call(&self) -> Option<bool> {
        label_pc(self.rating)
    }
}

/// Poor-call indicator: ratings 1 and 2 are poor calls.
pub fn label_pc(rating: Option<u8>) -> Option<bool> {
    rating.map(|r| r <= POOR_CALL_MAX_RATING)
}

/// Rated calls in columnar form: selections alongside their poor-call labels.
#[derive(Clone, Copy, Debug)]
pub struct Labeled<'a> {
    pub selections: &'a [Selections],
    pub poor: &'a [bool],
}

impl<'a> Labeled<'a> {
    pub fn new(selections: &'a [Selections], poor: &'a [bool]) -> Self {
        assert_eq!(selections.len(), poor.len(), "columns must be aligned");
        Self { selections, poor }
    }

    pub fn len(&self) -> usize {
        self.poor.len()
    }

    pub fn is_empty(&self) -> bool {
        self.poor.is_empty()
    }

    pub fn poor_count(&self) -> usize {
        self.poor.iter().filter(|&&p| p).count()
    }
}

/// Owned counterpart of [`Labeled`], used for train/test partitions.
#[derive(Clone, Debug, Default)]
pub struct LabeledRows {
    pub selections: Vec<Selections>,
    pub poor: Vec<bool>,
}

impl LabeledRows {
    pub fn gather(source: Labeled<'_>, rows: &[usize]) -> Self {
        Self {
            selections: rows.iter().map(|&i| source.selections[i]).collect(),
            poor: rows.iter().map(|&i| source.poor[i]).collect(),
        }
    }

    pub fn view(&self) -> Labeled<'_> {
        Labeled::new(&self.selections, &self.poor)
    }
}

/// Predicate for [`Dataset::filter`]. The default keeps every record.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct RecordFilter {
    pub arm: Option<Arm>,
    pub rated_only: bool,
    pub responded_only: bool,
}

impl RecordFilter {
    pub fn matches(&self, record: &ResponseRecord) -> bool {
        self.arm.is_none_or(|arm| record.arm == arm)
            && (!self.rated_only || record.rating.is_some())
            && (!self.responded_only || record.responded())
    }
}

/// Immutable collection of survey responses over one catalog.
#[derive(Clone, Debug)]
pub struct Dataset {
    catalog: Arc<TokenCatalog>,
    records: Vec<ResponseRecord>,
    pc_labels: Vec<Option<bool>>,
    rated_selections: Vec<Selections>,
    rated_poor: Vec<bool>,
}

impl PartialEq for Dataset {
    fn eq(&self, other: &Self) -> bool {
        self.catalog == other.catalog && self.records == other.records
    }
}

impl Dataset {
    pub fn new(
        catalog: impl Into<Arc<TokenCatalog>>,
        records: Vec<ResponseRecord>,
    ) -> Result<Self> {
        let catalog = catalog.into();
        let valid_bits = if catalog.len() == 64 {
            u64::MAX
        } else {
            (1u64 << catalog.len()) - 1
        };
        for (i, r) in records.iter().enumerate() {
            if let Some(rating) = r.rating {
                if !(1..=5).contains(&rating) {
                    return Err(Error::Parameter(format!(
                        "record {i} ({}): rating {rating} outside 1-5",
                        r.call_id
                    )));
                }
            }
            if r.selections.bits() & !valid_bits != 0 {
                return Err(Error::Parameter(format!(
                    "record {i} ({}): selection outside a catalog of {} tokens",
                    r.call_id,
                    catalog.len()
                )));
            }
        }
        let pc_labels: Vec<_> = records.iter().map(ResponseRecord::poor_call).collect();
        let (rated_selections, rated_poor) = records
            .iter()
            .zip(&pc_labels)
            .filter_map(|(r, pc)| pc.map(|pc| (r.selections, pc)))
            .unzip();
        Ok(Self {
            catalog,
            records,
            pc_labels,
            rated_selections,
            rated_poor,
        })
    }

    pub fn catalog(&self) -> &TokenCatalog {
        &self.catalog
    }

    pub fn shared_catalog(&self) -> Arc<TokenCatalog> {
        Arc::clone(&self.catalog)
    }

    pub fn records(&self) -> &[ResponseRecord] {
        &self.records
    }

    /// Poor-call labels aligned with [`records`](Self::records); `None` for unrated calls.
    pub fn pc_labels(&self) -> &[Option<bool>] {
        &self.pc_labels
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn rated_count(&self) -> usize {
        self.rated_poor.len()
    }

    pub fn responded_count(&self) -> usize {
        self.records.iter().filter(|r| r.responded()).count()
    }

    /// Rated records only, as aligned selection/label columns.
    pub fn labeled(&self) -> Labeled<'_> {
        Labeled::new(&self.rated_selections, &self.rated_poor)
    }

    /// Values of token `id` over all records.
    pub fn token_column(&self, id: TokenId) -> Vec<bool> {
        self.records
            .iter()
            .map(|r| r.selections.contains(id))
            .collect()
    }

    pub fn filter(&self, predicate: &RecordFilter) -> Dataset {
        let records = self
            .records
            .iter()
            .filter(|r| predicate.matches(r))
            .cloned()
            .collect();
        Dataset::new(self.shared_catalog(), records).expect("subset of a valid dataset is valid")
    }

    /// Copy of the dataset with every record tagged `arm`.
    pub fn with_arm(&self, arm: Arm) -> Dataset {
        let records = self
            .records
            .iter()
            .map(|r| ResponseRecord { arm, ..r.clone() })
            .collect();
        Dataset::new(self.shared_catalog(), records).expect("retagging keeps validity")
    }
}

/// On-disk dataset encodings.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Csv,
    Jsonl,
}

impl Format {
    /// `.jsonl`/`.json` files are JSONL, everything else CSV.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some("jsonl") | Some("json") => Format::Jsonl,
            _ => Format::Csv,
        }
    }
}

impl FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(Format::Csv),
            "jsonl" => Ok(Format::Jsonl),
            other => Err(Error::Parameter(format!("unknown format `{other}`"))),
        }
    }
}

const FIXED_COLUMNS: [&str; 4] = ["call_id", "arm", "platform", "rating"];

pub fn load_dataset(
    path: impl AsRef<Path>,
    format: Format,
    catalog: &TokenCatalog,
) -> Result<Dataset> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let reader = BufReader::new(file);
    match format {
        Format::Csv => read_csv(reader, catalog),
        Format::Jsonl => read_jsonl(reader, catalog),
    }
}

pub fn save_dataset(dataset: &Dataset, path: impl AsRef<Path>, format: Format) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut writer = BufWriter::new(file);
    match format {
        Format::Csv => write_csv(dataset, &mut writer)?,
        Format::Jsonl => write_jsonl(dataset, &mut writer)?,
    }
    writer.flush().map_err(|e| Error::io(path, e))
}

fn csv_load_error(e: csv::Error) -> Error {
    let line = e.position().map_or(0, |p| p.line() as usize);
    Error::Load {
        line,
        message: e.to_string(),
    }
}

fn csv_write_error(e: csv::Error) -> Error {
    Error::Io {
        path: "<csv>".into(),
        source: std::io::Error::other(e.to_string()),
    }
}

fn parse_rating(cell: &str, line: usize) -> Result<Option<u8>> {
    let cell = cell.trim();
    if cell.is_empty() {
        return Ok(None);
    }
    match cell.parse::<u8>() {
        Ok(r @ 1..=5) => Ok(Some(r)),
        _ => Err(Error::Load {
            line,
            message: format!("rating `{cell}` is not blank or an integer 1-5"),
        }),
    }
}

fn parse_arm(cell: &str, line: usize) -> Result<Arm> {
    cell.parse().map_err(|_| Error::Load {
        line,
        message: format!("arm `{cell}` is not one of control, treatment, none"),
    })
}

/// Maps each column of a token header to a catalog id, rejecting unknown,
/// repeated, or missing labels.
fn map_token_columns<'a>(
    labels: impl Iterator<Item = &'a str>,
    catalog: &TokenCatalog,
) -> Result<Vec<TokenId>> {
    let mut ids = Vec::new();
    let mut seen = Selections::empty();
    for label in labels {
        let id = catalog
            .id_of(label)
            .ok_or_else(|| Error::Schema(format!("unknown token column `{label}`")))?;
        if seen.contains(id) {
            return Err(Error::Schema(format!(
                "token column `{label}` appears twice"
            )));
        }
        seen.insert(id);
        ids.push(id);
    }
    if let Some(missing) = (0..catalog.len()).find(|&id| !seen.contains(id)) {
        return Err(Error::Schema(format!(
            "missing token column `{}`",
            catalog.label(missing)
        )));
    }
    Ok(ids)
}

pub fn read_csv<R: Read>(reader: R, catalog: &TokenCatalog) -> Result<Dataset> {
    let mut rdr = csv::ReaderBuilder::new().flexible(true).from_reader(reader);
    let headers = rdr.headers().map_err(csv_load_error)?.clone();
    if headers.len() < FIXED_COLUMNS.len()
        || headers.iter().take(FIXED_COLUMNS.len()).ne(FIXED_COLUMNS)
    {
        return Err(Error::Schema(format!(
            "header must start with `{}`",
            FIXED_COLUMNS.join(",")
        )));
    }
    let columns = map_token_columns(headers.iter().skip(FIXED_COLUMNS.len()), catalog)?;
    let width = headers.len();

    let mut records = Vec::new();
    for row in rdr.records() {
        let row = row.map_err(csv_load_error)?;
        let line = row.position().map_or(0, |p| p.line() as usize);
        if row.len() != width {
            return Err(Error::Load {
                line,
                message: format!("expected {width} columns, found {}", row.len()),
            });
        }
        let mut selections = Selections::empty();
        for (cell, &id) in row.iter().skip(FIXED_COLUMNS.len()).zip(&columns) {
            match cell.trim() {
                "0" => {}
                "1" => selections.insert(id),
                other => {
                    return Err(Error::Load {
                        line,
                        message: format!(
                            "token `{}` cell `{other}` is not 0 or 1",
                            catalog.label(id)
                        ),
                    })
                }
            }
        }
        records.push(ResponseRecord {
            call_id: row[0].to_string(),
            arm: parse_arm(&row[1], line)?,
            platform: row[2].to_string(),
            rating: parse_rating(&row[3], line)?,
            selections,
        });
    }
    Dataset::new(catalog.clone(), records)
}

pub fn write_csv<W: Write>(dataset: &Dataset, writer: W) -> Result<()> {
    let catalog = dataset.catalog();
    let mut wtr = csv::Writer::from_writer(writer);
    let header = FIXED_COLUMNS
        .iter()
        .copied()
        .chain(catalog.tokens().iter().map(|t| t.label.as_str()));
    wtr.write_record(header).map_err(csv_write_error)?;
    let mut row: Vec<String> = Vec::with_capacity(FIXED_COLUMNS.len() + catalog.len());
    for r in dataset.records() {
        row.clear();
        row.push(r.call_id.clone());
        row.push(r.arm.to_string());
        row.push(r.platform.clone());
        row.push(r.rating.map(|v| v.to_string()).unwrap_or_default());
        row.extend(
            (0..catalog.len())
                .map(|id| if r.selections.contains(id) { "1" } else { "0" }.to_string()),
        );
        wtr.write_record(&row).map_err(csv_write_error)?;
    }
    wtr.flush().map_err(|e| Error::io("<csv>", e))?;
    Ok(())
}

#[derive(Serialize, Deserialize)]
struct JsonRecord {
    call_id: String,
    arm: String,
    platform: String,
    rating: Option<serde_json::Value>,
    selections: serde_json::Map<String, serde_json::Value>,
}

pub fn read_jsonl<R: BufRead>(reader: R, catalog: &TokenCatalog) -> Result<Dataset> {
    let mut records = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line.map_err(|e| Error::io("<jsonl>", e))?;
        if line.trim().is_empty() {
            continue;
        }
        let raw: JsonRecord = serde_json::from_str(&line).map_err(|e| Error::Load {
            line: line_no,
            message: e.to_string(),
        })?;
        let rating = match raw.rating {
            None | Some(serde_json::Value::Null) => None,
            Some(v) => match v.as_u64() {
                Some(r @ 1..=5) => Some(r as u8),
                _ => {
                    return Err(Error::Load {
                        line: line_no,
                        message: format!("rating `{v}` is not null or an integer 1-5"),
                    })
                }
            },
        };
        let ids = map_token_columns(raw.selections.keys().map(String::as_str), catalog)?;
        let mut selections = Selections::empty();
        for (value, id) in raw.selections.values().zip(ids) {
            match value.as_u64() {
                Some(0) => {}
                Some(1) => selections.insert(id),
                _ => {
                    return Err(Error::Load {
                        line: line_no,
                        message: format!(
                            "token `{}` value `{value}` is not 0 or 1",
                            catalog.label(id)
                        ),
                    })
                }
            }
        }
        records.push(ResponseRecord {
            call_id: raw.call_id,
            arm: parse_arm(&raw.arm, line_no)?,
            platform: raw.platform,
            rating,
            selections,
        });
    }
    Dataset::new(catalog.clone(), records)
}

pub fn write_jsonl<W: Write>(dataset: &Dataset, mut writer: W) -> Result<()> {
    let catalog = dataset.catalog();
    for r in dataset.records() {
        let selections = catalog
            .tokens()
            .iter()
            .map(|t| {
                (
                    t.label.clone(),
                    u8::from(r.selections.contains(t.id)).into(),
                )
            })
            .collect();
        let json = JsonRecord {
            call_id: r.call_id.clone(),
            arm: r.arm.to_string(),
            platform: r.platform.clone(),
            rating: Some(r.rating.map_or(serde_json::Value::Null, Into::into)),
            selections,
        };
        serde_json::to_writer(&mut writer, &json)?;
        writer
            .write_all(b"\n")
            .map_err(|e| Error::io("<jsonl>", e))?;
    }
    Ok(())
}
