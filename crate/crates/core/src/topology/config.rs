use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use super::graph::ZoneLabel;
use crate::constants::BE9_MASS;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum Species {
    #[default]
    #[serde(rename = "9Be+")]
    Be9,
}

impl Species {
    /// kg
    pub fn mass(self) -> f64 {
        match self {
            Species::Be9 => BE9_MASS,
        }
    }
}

/// An ion, identified by a single lowercase letter.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct IonId {
    pub label: char,
    pub species: Species,
}

impl IonId {
    pub fn be9(label: char) -> Self {
        Self { label, species: Species::Be9 }
    }

    pub fn mass(&self) -> f64 {
        self.species.mass()
    }
}

/// One occupied potential well; ions listed in spatial order.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Well {
    pub zone: ZoneLabel,
    pub ions: Vec<char>,
}

/// Assignment of ions to wells, e.g. `S_ab` or `A_a B_b`.
///
/// Entry order is preserved and significant for equality; it is the order
/// in which the configuration is written.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct WellConfiguration {
    wells: Vec<Well>,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ConfigError {
    #[error("empty configuration")]
    Empty,
    #[error("unknown zone label {label:?} at offset {offset}")]
    UnknownZone { label: String, offset: usize },
    #[error("expected '_' after zone label at offset {offset}")]
    MissingUnderscore { offset: usize },
    #[error("empty ion subscript at offset {offset}")]
    EmptySubscript { offset: usize },
    #[error("duplicate zone {zone} at offset {offset}")]
    DuplicateZone { zone: ZoneLabel, offset: usize },
    #[error("duplicate ion '{ion}' at offset {offset}")]
    DuplicateIon { ion: char, offset: usize },
    #[error("unexpected character {ch:?} at offset {offset}")]
    Unexpected { ch: char, offset: usize },
}

impl WellConfiguration {
    pub fn new(wells: Vec<Well>) -> Result<Self, ConfigError> {
        if wells.is_empty() {
            return Err(ConfigError::Empty);
        }
        let mut zones = BTreeSet::new();
        let mut ions = BTreeSet::new();
        for w in &wells {
            if w.ions.is_empty() {
                return Err(ConfigError::EmptySubscript { offset: 0 });
            }
            if !zones.insert(w.zone) {
                return Err(ConfigError::DuplicateZone { zone: w.zone, offset: 0 });
            }
            for &ion in &w.ions {
                if !ion.is_ascii_lowercase() {
                    return Err(ConfigError::Unexpected { ch: ion, offset: 0 });
                }
                if !ions.insert(ion) {
                    return Err(ConfigError::DuplicateIon { ion, offset: 0 });
                }
            }
        }
        Ok(Self { wells })
    }

    /// A single well holding `ions` in order.
    pub fn single(zone: ZoneLabel, ions: &str) -> Result<Self, ConfigError> {
        Self::new(vec![Well { zone, ions: ions.chars().collect() }])
    }

    pub fn wells(&self) -> &[Well] {
        &self.wells
    }

    pub fn into_wells(self) -> Vec<Well> {
        self.wells
    }

    pub fn ions(&self) -> BTreeSet<char> {
        self.wells.iter().flat_map(|w| w.ions.iter().copied()).collect()
    }

    pub fn zones(&self) -> BTreeSet<ZoneLabel> {
        self.wells.iter().map(|w| w.zone).collect()
    }

    /// Well holding `ion`, with the ion's index inside it.
    pub fn locate(&self, ion: char) -> Option<(ZoneLabel, usize)> {
        self.wells
            .iter()
            .find_map(|w| w.ions.iter().position(|&i| i == ion).map(|p| (w.zone, p)))
    }

    pub fn well_at(&self, zone: ZoneLabel) -> Option<&Well> {
        self.wells.iter().find(|w| w.zone == zone)
    }

    /// Apply an ion relabelling; ions missing from `map` keep their label.
    pub fn relabel(&self, map: &dyn Fn(char) -> char) -> WellConfiguration {
        WellConfiguration {
            wells: self
                .wells
                .iter()
                .map(|w| Well { zone: w.zone, ions: w.ions.iter().map(|&c| map(c)).collect() })
                .collect(),
        }
    }
}

impl fmt::Display for WellConfiguration {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, w) in self.wells.iter().enumerate() {
            if k > 0 {
                f.write_str(" ")?;
            }
            write!(f, "{}_", w.zone)?;
            for c in &w.ions {
                write!(f, "{c}")?;
            }
        }
        Ok(())
    }
}

impl FromStr for WellConfiguration {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_configuration(s)
    }
}

impl Serialize for WellConfiguration {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for WellConfiguration {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let text = String::deserialize(d)?;
        parse_configuration(&text).map_err(serde::de::Error::custom)
    }
}

/// Parse the configuration notation.
///
/// Tokens are `Zone_ions`, e.g. `S_ab` or `C'_a`, separated by whitespace.
/// Because zone labels are upper case and ion labels lower case, the
/// compact form `A_aB_b` is accepted as well. Offsets in errors are byte
/// offsets into `text`.
pub fn parse_configuration(text: &str) -> Result<WellConfiguration, ConfigError> {
    let bytes: Vec<(usize, char)> = text.char_indices().collect();
    let mut pos = 0;
    let mut wells = Vec::new();
    let mut zone_seen = BTreeSet::new();
    let mut ion_seen = BTreeSet::new();
    let offset_at = |p: usize| bytes.get(p).map_or(text.len(), |&(o, _)| o);

    loop {
        while pos < bytes.len() && bytes[pos].1.is_whitespace() {
            pos += 1;
        }
        if pos >= bytes.len() {
            break;
        }
        let start = pos;
        let (_, first) = bytes[pos];
        if !first.is_ascii_uppercase() {
            return Err(ConfigError::Unexpected { ch: first, offset: offset_at(pos) });
        }
        pos += 1;
        while pos < bytes.len() && (bytes[pos].1 == '\'' || bytes[pos].1.is_ascii_uppercase()) {
            pos += 1;
        }
        let label: String = bytes[start..pos].iter().map(|&(_, c)| c).collect();
        let zone: ZoneLabel = label
            .parse()
            .map_err(|_| ConfigError::UnknownZone { label: label.clone(), offset: offset_at(start) })?;
        if pos >= bytes.len() || bytes[pos].1 != '_' {
            return Err(ConfigError::MissingUnderscore { offset: offset_at(pos) });
        }
        pos += 1;
        let sub_start = pos;
        let mut ions = Vec::new();
        while pos < bytes.len() && bytes[pos].1.is_ascii_lowercase() {
            let ion = bytes[pos].1;
            if !ion_seen.insert(ion) {
                return Err(ConfigError::DuplicateIon { ion, offset: offset_at(pos) });
            }
            ions.push(ion);
            pos += 1;
        }
        if ions.is_empty() {
            return Err(ConfigError::EmptySubscript { offset: offset_at(sub_start) });
        }
        if !zone_seen.insert(zone) {
            return Err(ConfigError::DuplicateZone { zone, offset: offset_at(start) });
        }
        if pos < bytes.len() {
            let c = bytes[pos].1;
            if !c.is_whitespace() && !c.is_ascii_uppercase() {
                return Err(ConfigError::Unexpected { ch: c, offset: offset_at(pos) });
            }
        }
        wells.push(Well { zone, ions });
    }
    if wells.is_empty() {
        return Err(ConfigError::Empty);
    }
    Ok(WellConfiguration { wells })
}

/// Canonical text: single spaces between wells, ions concatenated.
pub fn format_configuration(config: &WellConfiguration) -> String {
    config.to_string()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use ZoneLabel::*;

    #[test]
    fn parses_chain_notation() {
        let c = parse_configuration("S_ab").unwrap();
        assert_eq!(c.wells(), &[Well { zone: S, ions: vec!['a', 'b'] }]);
        let c = parse_configuration("A_a B_b").unwrap();
        assert_eq!(c.wells().len(), 2);
        assert_eq!(c.locate('b'), Some((B, 0)));
        assert_eq!(parse_configuration("A_aB_b").unwrap(), c);
        let c = parse_configuration("  C'_a ").unwrap();
        assert_eq!(c.wells()[0].zone, CPrime);
    }

    #[test]
    fn formats_canonically() {
        let c = WellConfiguration::single(S, "ba").unwrap();
        assert_eq!(format_configuration(&c), "S_ba");
        let c = parse_configuration("A_a\t  B_b").unwrap();
        assert_eq!(c.to_string(), "A_a B_b");
    }

    #[test]
    fn reports_errors_with_offsets() {
        assert_eq!(
            parse_configuration("A_a A_b"),
            Err(ConfigError::DuplicateZone { zone: A, offset: 4 })
        );
        assert_eq!(
            parse_configuration("S_ab B_a"),
            Err(ConfigError::DuplicateIon { ion: 'a', offset: 7 })
        );
        assert_eq!(
            parse_configuration("S_a X_b"),
            Err(ConfigError::UnknownZone { label: "X".into(), offset: 4 })
        );
        assert_eq!(parse_configuration("S_ B_b"), Err(ConfigError::EmptySubscript { offset: 2 }));
        assert_eq!(parse_configuration("S_"), Err(ConfigError::EmptySubscript { offset: 2 }));
        assert_eq!(parse_configuration("Sab"), Err(ConfigError::MissingUnderscore { offset: 1 }));
        assert_eq!(parse_configuration("S_a1"), Err(ConfigError::Unexpected { ch: '1', offset: 3 }));
        assert_eq!(parse_configuration("   "), Err(ConfigError::Empty));
        assert_eq!(WellConfiguration::new(vec![]), Err(ConfigError::Empty));
    }

    fn arb_config() -> impl Strategy<Value = WellConfiguration> {
        (
            proptest::sample::subsequence(ZoneLabel::ALL.to_vec(), 1..=5).prop_shuffle(),
            proptest::sample::subsequence(('a'..='z').collect::<Vec<_>>(), 5..=12).prop_shuffle(),
            proptest::collection::vec(1usize..=3, 5),
        )
            .prop_map(|(zones, ions, sizes)| {
                let mut it = ions.into_iter();
                let wells = zones
                    .into_iter()
                    .zip(sizes)
                    .map(|(zone, n)| Well { zone, ions: it.by_ref().take(n).collect() })
                    .filter(|w| !w.ions.is_empty())
                    .collect();
                WellConfiguration::new(wells).unwrap()
            })
    }

    proptest! {
        #[test]
        fn parse_format_round_trip(c in arb_config()) {
            let text = format_configuration(&c);
            prop_assert_eq!(parse_configuration(&text).unwrap(), c);
        }

        #[test]
        fn format_is_fixed_point_on_canonical_text(c in arb_config()) {
            let text = format_configuration(&c);
            prop_assert_eq!(format_configuration(&parse_configuration(&text).unwrap()), text);
        }
    }
}
