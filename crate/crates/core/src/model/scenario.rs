use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::map::{Cell, GridMap};
use super::text_lines;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ScenarioError {
    #[error("missing `version` line")]
    MissingVersion,
    #[error("malformed row on line {line}: expected 9 tab-separated fields, found {fields}")]
    MalformedRow { line: usize, fields: usize },
    #[error("non-numeric field `{field}` on line {line}: {value:?}")]
    NonNumericField { line: usize, field: &'static str, value: String },
    #[error("scenario has no entries")]
    EmptyScenario,
    #[error("invalid scenario name {0:?}")]
    InvalidName(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BindError {
    #[error("entry {entry} refers to map {found:?}, expected {expected:?}")]
    MapName { entry: usize, expected: String, found: String },
    #[error("entry {entry} declares {found_w}x{found_h}, map is {w}x{h}")]
    Dimensions { entry: usize, found_w: u32, found_h: u32, w: u32, h: u32 },
    #[error("entry {entry}: {which} {cell} is outside the declared dimensions")]
    OutOfBounds { entry: usize, which: &'static str, cell: Cell },
    #[error("entry {entry}: {which} {cell} is not traversable")]
    Blocked { entry: usize, which: &'static str, cell: Cell },
}

/// One start/goal row of a scenario file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenEntry {
    pub bucket: u32,
    /// Map file field as written, e.g. `empty-16-16.map`.
    pub map_file: String,
    pub map_width: u32,
    pub map_height: u32,
    pub start: Cell,
    pub goal: Cell,
    /// Opaque reference distance; never used as a bound.
    pub ref_distance: f64,
}

impl ScenEntry {
    /// The map name: the file field without directories or `.map` suffix.
    pub fn map_name(&self) -> &str {
        let base = self.map_file.rsplit(['/', '\\']).next().unwrap_or(&self.map_file);
        base.strip_suffix(".map").unwrap_or(base)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScenKind {
    Even,
    Random,
}

impl ScenKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ScenKind::Even => "even",
            ScenKind::Random => "random",
        }
    }
}

impl FromStr for ScenKind {
    type Err = ScenarioError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "even" => Ok(ScenKind::Even),
            "random" | "rand" => Ok(ScenKind::Random),
            _ => Err(ScenarioError::InvalidName(s.to_string())),
        }
    }
}

impl fmt::Display for ScenKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Identifies one scenario file of one map.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ScenarioId {
    pub map_name: String,
    pub kind: ScenKind,
    pub index: u32,
}

impl ScenarioId {
    pub fn new(map_name: impl Into<String>, kind: ScenKind, index: u32) -> Self {
        Self { map_name: map_name.into(), kind, index }
    }

    /// Parses the `<kind>-<index>` label used in submission files.
    pub fn parse_label(map_name: &str, label: &str) -> Result<Self, ScenarioError> {
        let (kind, index) =
            label.split_once('-').ok_or_else(|| ScenarioError::InvalidName(label.into()))?;
        let index = index.parse().map_err(|_| ScenarioError::InvalidName(label.into()))?;
        Ok(Self::new(map_name, kind.parse()?, index))
    }

    /// Applies the `<map>-<kind>-<index>.scen` file name convention.
    pub fn from_file_name(file_name: &str) -> Result<Self, ScenarioError> {
        let bad = || ScenarioError::InvalidName(file_name.to_string());
        let stem = file_name.strip_suffix(".scen").ok_or_else(bad)?;
        let (rest, index) = stem.rsplit_once('-').ok_or_else(bad)?;
        let (map, kind) = rest.rsplit_once('-').ok_or_else(bad)?;
        let index: u32 = index.parse().map_err(|_| bad())?;
        if map.is_empty() {
            return Err(bad());
        }
        Ok(Self::new(map, kind.parse().map_err(|_| bad())?, index))
    }

    /// `even-1`, `random-25`, ...
    pub fn label(&self) -> String {
        format!("{}-{}", self.kind, self.index)
    }

    pub fn file_name(&self) -> String {
        format!("{}-{}-{}.scen", self.map_name, self.kind, self.index)
    }
}

impl fmt::Display for ScenarioId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}-{}", self.map_name, self.kind, self.index)
    }
}

/// An ordered list of start/goal entries; agent `i` of an `n`-agent instance
/// is entry `i`.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub id: ScenarioId,
    pub entries: Vec<ScenEntry>,
}

/// Parses the scenario grammar, preserving file order.
pub fn parse_scenario(text: &str) -> Result<Vec<ScenEntry>, ScenarioError> {
    let mut lines = text_lines(text).enumerate().skip_while(|(_, l)| l.trim().is_empty());
    match lines.next() {
        Some((_, l)) if l.split_whitespace().next() == Some("version") => {}
        _ => return Err(ScenarioError::MissingVersion),
    }

    let mut entries = Vec::new();
    for (i, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let line_no = i + 1;
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 9 {
            return Err(ScenarioError::MalformedRow { line: line_no, fields: fields.len() });
        }
        let uint = |idx: usize, field: &'static str| -> Result<u32, ScenarioError> {
            fields[idx].trim().parse().map_err(|_| ScenarioError::NonNumericField {
                line: line_no,
                field,
                value: fields[idx].to_string(),
            })
        };
        let ref_distance: f64 =
            fields[8].trim().parse().map_err(|_| ScenarioError::NonNumericField {
                line: line_no,
                field: "distance",
                value: fields[8].to_string(),
            })?;
        entries.push(ScenEntry {
            bucket: uint(0, "bucket")?,
            map_file: fields[1].to_string(),
            map_width: uint(2, "width")?,
            map_height: uint(3, "height")?,
            start: Cell::new(uint(4, "start-x")?, uint(5, "start-y")?),
            goal: Cell::new(uint(6, "goal-x")?, uint(7, "goal-y")?),
            ref_distance,
        });
    }
    if entries.is_empty() {
        return Err(ScenarioError::EmptyScenario);
    }
    Ok(entries)
}

impl Scenario {
    pub fn parse(text: &str, kind: ScenKind, index: u32) -> Result<Self, ScenarioError> {
        let entries = parse_scenario(text)?;
        let map_name = entries[0].map_name().to_string();
        Ok(Self { id: ScenarioId::new(map_name, kind, index), entries })
    }

    /// Parses a scenario, taking kind and index from its file name.
    pub fn parse_named(file_name: &str, text: &str) -> Result<Self, ScenarioError> {
        let id = ScenarioId::from_file_name(file_name)?;
        let entries = parse_scenario(text)?;
        Ok(Self { id, entries })
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn pairs(&self) -> impl Iterator<Item = (Cell, Cell)> + '_ {
        self.entries.iter().map(|e| (e.start, e.goal))
    }

    /// Checks every entry against the map's name, dimensions and obstacles.
    pub fn bind(&self, map: &GridMap) -> Result<(), BindError> {
        for (i, e) in self.entries.iter().enumerate() {
            if !map.name().is_empty() && e.map_name() != map.name() {
                return Err(BindError::MapName {
                    entry: i,
                    expected: map.name().to_string(),
                    found: e.map_name().to_string(),
                });
            }
            if e.map_width != map.width() || e.map_height != map.height() {
                return Err(BindError::Dimensions {
                    entry: i,
                    found_w: e.map_width,
                    found_h: e.map_height,
                    w: map.width(),
                    h: map.height(),
                });
            }
            for (which, c) in [("start", e.start), ("goal", e.goal)] {
                if c.x >= e.map_width || c.y >= e.map_height {
                    return Err(BindError::OutOfBounds { entry: i, which, cell: c });
                }
                if !map.is_passable(c) {
                    return Err(BindError::Blocked { entry: i, which, cell: c });
                }
            }
        }
        Ok(())
    }

    /// Serializes to the scenario grammar (`version 1` header).
    pub fn to_text(&self) -> String {
        let mut out = String::from("version 1\n");
        for e in &self.entries {
            out.push_str(&format!(
                "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{:.8}\n",
                e.bucket,
                e.map_file,
                e.map_width,
                e.map_height,
                e.start.x,
                e.start.y,
                e.goal.x,
                e.goal.y,
                e.ref_distance
            ));
        }
        out
    }
}
