//! Automatic line outage records and their one-minute generation groups.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use crate::{Error, Result};

/// A calendar timestamp at one-minute granularity.
///
/// Ordering and equality are on the literal fields; no timezone or DST
/// arithmetic is performed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Minute {
    pub year: i32,
    pub month: u8,
    pub day: u8,
    pub hour: u8,
    pub minute: u8,
}

fn days_in_month(year: i32, month: u8) -> u8 {
    match month {
        1 | 3 | 5 | 7 | 8 | 10 | 12 => 31,
        4 | 6 | 9 | 11 => 30,
        2 if (year % 4 == 0 && year % 100 != 0) || year % 400 == 0 => 29,
        2 => 28,
        _ => 0,
    }
}

impl Minute {
    pub fn new(year: i32, month: u8, day: u8, hour: u8, minute: u8) -> Result<Self> {
        if !(1..=12).contains(&month)
            || day == 0
            || day > days_in_month(year, month)
            || hour > 23
            || minute > 59
        {
            return Err(Error::InvalidRecord(format!(
                "timestamp out of range: {year:04}-{month:02}-{day:02} {hour:02}:{minute:02}"
            )));
        }
        Ok(Minute { year, month, day, hour, minute })
    }
}

impl FromStr for Minute {
    type Err = Error;

    /// Parses `YYYY-MM-DD HH:MM`. A `:00` seconds suffix is tolerated; any
    /// other seconds value is rejected since records are minute-granular.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidRecord(format!("unparseable timestamp {s:?}"));
        let s = s.trim();
        let (date, time) = s
            .split_once([' ', 'T'])
            .ok_or_else(bad)?;
        let mut d = date.split('-');
        let year = d.next().ok_or_else(bad)?;
        let month = d.next().ok_or_else(bad)?;
        let day = d.next().ok_or_else(bad)?;
        if d.next().is_some() || year.len() != 4 || month.len() != 2 || day.len() != 2 {
            return Err(bad());
        }
        let mut t = time.trim().split(':');
        let hour = t.next().ok_or_else(bad)?;
        let minute = t.next().ok_or_else(bad)?;
        if let Some(sec) = t.next() {
            if sec != "00" || t.next().is_some() {
                return Err(bad());
            }
        }
        if hour.len() != 2 || minute.len() != 2 {
            return Err(bad());
        }
        let num = |v: &str| -> Result<u32> {
            if !v.bytes().all(|b| b.is_ascii_digit()) {
                return Err(bad());
            }
            v.parse::<u32>().map_err(|_| bad())
        };
        Minute::new(
            num(year)? as i32,
            num(month)? as u8,
            num(day)? as u8,
            num(hour)? as u8,
            num(minute)? as u8,
        )
    }
}

impl fmt::Display for Minute {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{:04}-{:02}-{:02} {:02}:{:02}",
            self.year, self.month, self.day, self.hour, self.minute
        )
    }
}

/// Trim, collapse internal whitespace runs to one space, and upper-case.
pub fn normalize_bus_name(raw: &str) -> String {
    let mut out = String::with_capacity(raw.len());
    for (i, word) in raw.split_whitespace().enumerate() {
        if i > 0 {
            out.push(' ');
        }
        out.push_str(&word.to_uppercase());
    }
    out
}

/// Raw-to-canonical bus name map. Keys and values are stored normalized.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct AliasMap {
    map: BTreeMap<String, String>,
}

impl AliasMap {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, raw: &str, canonical: &str) {
        self.map
            .insert(normalize_bus_name(raw), normalize_bus_name(canonical));
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    /// Normalize then apply the alias, if any.
    pub fn canonical(&self, raw: &str) -> String {
        let name = normalize_bus_name(raw);
        match self.map.get(&name) {
            Some(canonical) => canonical.clone(),
            None => name,
        }
    }
}

/// An unordered pair of distinct bus names, stored lexicographically sorted.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct BusPair {
    first: String,
    second: String,
}

impl BusPair {
    pub fn new(a: impl Into<String>, b: impl Into<String>) -> Result<Self> {
        let (a, b) = (a.into(), b.into());
        if a == b {
            return Err(Error::InvalidRecord(format!("self-loop line at bus {a}")));
        }
        if a.is_empty() || b.is_empty() {
            return Err(Error::InvalidRecord("empty bus name".into()));
        }
        Ok(if a < b {
            BusPair { first: a, second: b }
        } else {
            BusPair { first: b, second: a }
        })
    }

    pub fn first(&self) -> &str {
        &self.first
    }

    pub fn second(&self) -> &str {
        &self.second
    }
}

impl fmt::Display for BusPair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}-{}", self.first, self.second)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OutageRecord {
    pub timestamp: Minute,
    pub from_bus: String,
    pub to_bus: String,
    /// Never empty; a missing circuit id is recorded as `"1"`.
    pub circuit_id: String,
    pub automatic: bool,
}

impl OutageRecord {
    pub fn line(&self) -> BusPair {
        // from_bus != to_bus is a construction invariant
        BusPair::new(self.from_bus.clone(), self.to_bus.clone())
            .expect("record endpoints are distinct")
    }
}

/// What happened to one raw row.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RowOutcome {
    Kept(OutageRecord),
    NonAutomatic,
    SelfLoop,
}

pub fn is_automatic_flag(flag: &str) -> bool {
    let flag = flag.trim();
    ["auto", "1", "true"]
        .iter()
        .any(|v| flag.eq_ignore_ascii_case(v))
}

/// Build a record from the five raw fields of one outage row.
pub fn parse_row(
    timestamp: &str,
    from_bus: &str,
    to_bus: &str,
    circuit_id: &str,
    automatic: &str,
    aliases: &AliasMap,
) -> Result<RowOutcome> {
    let timestamp: Minute = timestamp.parse()?;
    let from_bus = aliases.canonical(from_bus);
    let to_bus = aliases.canonical(to_bus);
    if from_bus.is_empty() || to_bus.is_empty() {
        return Err(Error::InvalidRecord("empty bus name".into()));
    }
    if !is_automatic_flag(automatic) {
        return Ok(RowOutcome::NonAutomatic);
    }
    if from_bus == to_bus {
        return Ok(RowOutcome::SelfLoop);
    }
    let circuit_id = match circuit_id.trim() {
        "" => "1".to_string(),
        c => c.to_string(),
    };
    Ok(RowOutcome::Kept(OutageRecord {
        timestamp,
        from_bus,
        to_bus,
        circuit_id,
        automatic: true,
    }))
}

/// All distinct lines outaged in one minute, with the distinct circuit ids
/// seen per line.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GenerationGroup {
    pub minute: Minute,
    pub lines: BTreeMap<BusPair, BTreeSet<String>>,
}

impl GenerationGroup {
    pub fn len(&self) -> usize {
        self.lines.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lines.is_empty()
    }

    /// Number of distinct circuits of `line` outaged in this minute.
    pub fn circuit_count(&self, line: &BusPair) -> usize {
        self.lines.get(line).map_or(0, BTreeSet::len)
    }
}

/// One group per distinct minute, in chronological order. Repeat outages of
/// a line within the minute collapse to one entry.
pub fn group_into_generations(records: &[OutageRecord]) -> Vec<GenerationGroup> {
    let mut by_minute: BTreeMap<Minute, BTreeMap<BusPair, BTreeSet<String>>> = BTreeMap::new();
    for record in records {
        by_minute
            .entry(record.timestamp)
            .or_default()
            .entry(record.line())
            .or_default()
            .insert(record.circuit_id.clone());
    }
    by_minute
        .into_iter()
        .map(|(minute, lines)| GenerationGroup { minute, lines })
        .collect()
}
