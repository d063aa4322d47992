use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::text_lines;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ManifestError {
    #[error("map {map:?} assigned to both {first} and {second}")]
    DuplicateMapAssignment { map: String, first: Domain, second: Domain },
    #[error("unknown domain name {0:?}")]
    UnknownDomainName(String),
    #[error("malformed manifest line {line}: {text:?}")]
    MalformedLine { line: usize, text: String },
}

/// The six benchmark map domains.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Domain {
    Game,
    Street,
    Maze,
    Room,
    Open,
    Warehouse,
}

impl Domain {
    pub const ALL: [Domain; 6] =
        [Domain::Game, Domain::Street, Domain::Maze, Domain::Room, Domain::Open, Domain::Warehouse];

    pub fn as_str(self) -> &'static str {
        match self {
            Domain::Game => "Game",
            Domain::Street => "Street",
            Domain::Maze => "Maze",
            Domain::Room => "Room",
            Domain::Open => "Open",
            Domain::Warehouse => "Warehouse",
        }
    }
}

impl fmt::Display for Domain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Domain {
    type Err = ManifestError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let d = match s.trim().to_ascii_lowercase().as_str() {
            "game" => Domain::Game,
            "street" | "city" => Domain::Street,
            "maze" => Domain::Maze,
            "room" => Domain::Room,
            "open" => Domain::Open,
            "warehouse" => Domain::Warehouse,
            _ => return Err(ManifestError::UnknownDomainName(s.trim().to_string())),
        };
        Ok(d)
    }
}

/// Assignment of benchmark maps to domains; each map is in exactly one domain.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct DomainManifest {
    domains: BTreeMap<Domain, Vec<String>>,
    by_map: BTreeMap<String, Domain>,
}

impl DomainManifest {
    /// Parses `domain: map1, map2, ...` lines. Blank lines and `#` comments
    /// are skipped; a domain may span several lines.
    pub fn parse(text: &str) -> Result<Self, ManifestError> {
        let mut m = DomainManifest::default();
        for (i, line) in text_lines(text).enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (domain, maps) = line.split_once(':').ok_or_else(|| ManifestError::MalformedLine {
                line: i + 1,
                text: line.to_string(),
            })?;
            let domain: Domain = domain.parse()?;
            m.domains.entry(domain).or_default();
            for map in maps.split(',').map(str::trim).filter(|s| !s.is_empty()) {
                m.insert(domain, map)?;
            }
        }
        Ok(m)
    }

    pub fn insert(&mut self, domain: Domain, map: &str) -> Result<(), ManifestError> {
        if let Some(&first) = self.by_map.get(map) {
            return Err(ManifestError::DuplicateMapAssignment {
                map: map.to_string(),
                first,
                second: domain,
            });
        }
        self.by_map.insert(map.to_string(), domain);
        self.domains.entry(domain).or_default().push(map.to_string());
        Ok(())
    }

    pub fn domain_of(&self, map: &str) -> Option<Domain> {
        self.by_map.get(map).copied()
    }

    pub fn maps(&self, domain: Domain) -> &[String] {
        self.domains.get(&domain).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn domains(&self) -> impl Iterator<Item = Domain> + '_ {
        self.domains.keys().copied()
    }

    pub fn map_count(&self) -> usize {
        self.by_map.len()
    }

    pub fn to_text(&self) -> String {
        self.domains.iter().map(|(d, maps)| format!("{d}: {}\n", maps.join(", "))).collect()
    }
}

/// Domain assignment of the 33 standard benchmark maps.
pub const DEFAULT_MANIFEST: &str = "\
Game: brc202d, den312d, den520d, lak303d, orz900d, ost003d, w_woundedcoast, ht_chantry, ht_mansion_n, lt_gallowstemplar_n
Street: Berlin_1_256, Boston_0_256, Paris_1_256
Maze: maze-32-32-2, maze-32-32-4, maze-128-128-1, maze-128-128-2, maze-128-128-10
Room: room-32-32-4, room-64-64-8, room-64-64-16
Open: empty-8-8, empty-16-16, empty-32-32, empty-48-48, random-32-32-10, random-32-32-20, random-64-64-10, random-64-64-20
Warehouse: warehouse-10-20-10-2-1, warehouse-10-20-10-2-2, warehouse-20-40-10-2-1, warehouse-20-40-10-2-2
";

pub fn default_manifest() -> DomainManifest {
    DomainManifest::parse(DEFAULT_MANIFEST).expect("shipped manifest is well-formed")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shipped_manifest_shape() {
        let m = default_manifest();
        assert_eq!(m.domains().count(), 6);
        assert_eq!(m.map_count(), 33);
        assert_eq!(m.domain_of("orz900d"), Some(Domain::Game));
        assert_eq!(m.domain_of("empty-16-16"), Some(Domain::Open));
        assert_eq!(m.to_text(), DEFAULT_MANIFEST);
    }

    #[test]
    fn small_manifest() {
        let m = DomainManifest::parse("Game: orz900d\nMaze: maze-32-32-2\n").unwrap();
        assert_eq!(m.maps(Domain::Game), ["orz900d"]);
        assert_eq!(m.domain_of("maze-32-32-2"), Some(Domain::Maze));
        assert!(m.maps(Domain::Room).is_empty());
    }

    #[test]
    fn errors() {
        assert!(matches!(
            DomainManifest::parse("Game: a, b\nMaze: b").unwrap_err(),
            ManifestError::DuplicateMapAssignment { .. }
        ));
        assert_eq!(
            DomainManifest::parse("Forest: a").unwrap_err(),
            ManifestError::UnknownDomainName("Forest".into())
        );
        assert!(matches!(
            DomainManifest::parse("Game a").unwrap_err(),
            ManifestError::MalformedLine { line: 1, .. }
        ));
    }
}
