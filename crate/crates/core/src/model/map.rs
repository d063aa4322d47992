use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::text_lines;

/// A grid cell; `x` is the column and `y` the row, origin at the top-left.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Cell {
    pub x: u32,
    pub y: u32,
}

impl Cell {
    pub const fn new(x: u32, y: u32) -> Self {
        Self { x, y }
    }
}

impl fmt::Display for Cell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.x, self.y)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MapError {
    #[error("malformed header on line {line}: {reason}")]
    MalformedHeader { line: usize, reason: String },
    #[error("dimension mismatch: {reason}")]
    DimensionMismatch { reason: String },
    #[error("map has no traversable cell")]
    NoTraversableCell,
}

/// A 4-connected grid with traversable and blocked cells.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GridMap {
    name: String,
    width: u32,
    height: u32,
    passable: Vec<bool>,
}

/// `.` and `G` are traversable; everything else is blocked.
fn is_passable_char(c: u8) -> bool {
    matches!(c, b'.' | b'G')
}

/// Parses the standard benchmark map grammar. The returned map is unnamed;
/// see [`GridMap::with_name`].
pub fn parse_map(text: &str) -> Result<GridMap, MapError> {
    let mut lines = text_lines(text);
    let mut header = |n: usize, key: &str| -> Result<String, MapError> {
        let line = lines.next().ok_or_else(|| MapError::MalformedHeader {
            line: n,
            reason: format!("expected `{key}` line, found end of input"),
        })?;
        let mut parts = line.split_whitespace();
        match parts.next() {
            Some(k) if k == key => Ok(parts.collect::<Vec<_>>().join(" ")),
            _ => Err(MapError::MalformedHeader {
                line: n,
                reason: format!("expected `{key}`, found {line:?}"),
            }),
        }
    };

    let kind = header(1, "type")?;
    if kind.is_empty() {
        return Err(MapError::MalformedHeader { line: 1, reason: "missing map type".into() });
    }
    let dim = |line: usize, raw: String| -> Result<u32, MapError> {
        match raw.parse::<u32>() {
            Ok(v) if v >= 1 => Ok(v),
            _ => Err(MapError::MalformedHeader {
                line,
                reason: format!("invalid dimension {raw:?}"),
            }),
        }
    };
    let height = dim(2, header(2, "height")?)?;
    let width = dim(3, header(3, "width")?)?;
    let rest = header(4, "map")?;
    if !rest.is_empty() {
        return Err(MapError::MalformedHeader { line: 4, reason: format!("unexpected {rest:?}") });
    }

    let mut passable = Vec::with_capacity(width as usize * height as usize);
    let mut rows = 0u32;
    for line in lines {
        if rows == height {
            if line.trim().is_empty() {
                continue;
            }
            return Err(MapError::DimensionMismatch {
                reason: format!("more than the declared {height} rows"),
            });
        }
        if line.len() != width as usize {
            return Err(MapError::DimensionMismatch {
                reason: format!("row {rows} has {} characters, expected {width}", line.len()),
            });
        }
        passable.extend(line.bytes().map(is_passable_char));
        rows += 1;
    }
    if rows != height {
        return Err(MapError::DimensionMismatch {
            reason: format!("declared {height} rows, found {rows}"),
        });
    }
    if !passable.iter().any(|&p| p) {
        return Err(MapError::NoTraversableCell);
    }
    Ok(GridMap { name: String::new(), width, height, passable })
}

impl GridMap {
    /// Builds a map from row-major traversability flags.
    pub fn from_cells(
        name: impl Into<String>,
        width: u32,
        height: u32,
        passable: Vec<bool>,
    ) -> Result<Self, MapError> {
        if width == 0 || height == 0 || passable.len() != width as usize * height as usize {
            return Err(MapError::DimensionMismatch {
                reason: format!("{} cells for a {width}x{height} map", passable.len()),
            });
        }
        if !passable.iter().any(|&p| p) {
            return Err(MapError::NoTraversableCell);
        }
        Ok(Self { name: name.into(), width, height, passable })
    }

    /// An obstacle-free map.
    pub fn open(name: impl Into<String>, width: u32, height: u32) -> Self {
        Self::from_cells(name, width, height, vec![true; width as usize * height as usize])
            .expect("non-empty dimensions")
    }

    pub fn parse(text: &str) -> Result<Self, MapError> {
        parse_map(text)
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn num_cells(&self) -> usize {
        self.passable.len()
    }

    pub fn in_bounds(&self, x: i64, y: i64) -> bool {
        x >= 0 && y >= 0 && x < self.width as i64 && y < self.height as i64
    }

    /// Row-major index of an in-bounds cell.
    pub fn index(&self, c: Cell) -> usize {
        c.y as usize * self.width as usize + c.x as usize
    }

    pub fn cell_at(&self, index: usize) -> Cell {
        let w = self.width as usize;
        Cell::new((index % w) as u32, (index / w) as u32)
    }

    /// False for out-of-bounds cells.
    pub fn is_passable(&self, c: Cell) -> bool {
        c.x < self.width && c.y < self.height && self.passable[self.index(c)]
    }

    pub fn passable_flags(&self) -> &[bool] {
        &self.passable
    }

    pub fn traversable_count(&self) -> usize {
        self.passable.iter().filter(|&&p| p).count()
    }

    pub fn traversable_cells(&self) -> impl Iterator<Item = Cell> + '_ {
        self.passable.iter().enumerate().filter(|(_, &p)| p).map(|(i, _)| self.cell_at(i))
    }

    /// Traversable 4-neighbours of a cell index, in up/down/left/right order.
    pub fn neighbours(&self, index: usize) -> impl Iterator<Item = usize> + '_ {
        let w = self.width as usize;
        let h = self.height as usize;
        let (x, y) = (index % w, index / w);
        let up = (y > 0).then(|| index - w);
        let down = (y + 1 < h).then(|| index + w);
        let left = (x > 0).then(|| index - 1);
        let right = (x + 1 < w).then(|| index + 1);
        [up, down, left, right].into_iter().flatten().filter(|&n| self.passable[n])
    }

    /// Serializes to the map grammar, writing `.` for open and `@` for blocked.
    pub fn to_text(&self) -> String {
        let mut out = format!("type octile\nheight {}\nwidth {}\nmap\n", self.height, self.width);
        for row in self.passable.chunks(self.width as usize) {
            out.extend(row.iter().map(|&p| if p { '.' } else { '@' }));
            out.push('\n');
        }
        out
    }
}
