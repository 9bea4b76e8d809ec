//! Raw outage CSV: `timestamp,from_bus,to_bus,circuit_id,automatic`.

use std::path::Path;

use protpat_core::ingest::{parse_row, AliasMap, RowOutcome};
use protpat_core::OutageRecord;

use crate::error::{CliError, Result};

pub const OUTAGE_COLUMNS: [&str; 5] = ["timestamp", "from_bus", "to_bus", "circuit_id", "automatic"];

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ParseStats {
    pub rows: u64,
    pub kept: u64,
    pub non_automatic: u64,
    pub self_loop_dropped: u64,
}

/// Positions of the named columns in a header row.
pub(crate) fn column_indices(
    path: &Path,
    header: &csv::StringRecord,
    names: &[&str],
) -> Result<Vec<usize>> {
    names
        .iter()
        .map(|name| {
            header
                .iter()
                .position(|h| h.trim().eq_ignore_ascii_case(name))
                .ok_or_else(|| CliError::format(path, 1, format!("missing column `{name}`")))
        })
        .collect()
}

pub(crate) fn reader(path: &Path) -> Result<csv::Reader<std::fs::File>> {
    let file = std::fs::File::open(path).map_err(|e| CliError::io(path, e))?;
    Ok(csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .flexible(false)
        .from_reader(file))
}

pub(crate) fn csv_error(path: &Path, e: csv::Error) -> CliError {
    let line = e.position().map_or(0, |p| p.line());
    match e.into_kind() {
        csv::ErrorKind::Io(io) => CliError::io(path, io),
        kind => CliError::format(path, line, format!("{kind:?}")),
    }
}

/// Read and clean an outage file. Non-automatic rows and rows whose two
/// buses normalize to the same name are dropped and counted.
pub fn parse_outage_file(path: &Path, aliases: &AliasMap) -> Result<(Vec<OutageRecord>, ParseStats)> {
    let mut rdr = reader(path)?;
    let header = rdr.headers().map_err(|e| csv_error(path, e))?.clone();
    let idx = column_indices(path, &header, &OUTAGE_COLUMNS)?;
    let mut stats = ParseStats::default();
    let mut records = Vec::new();
    for row in rdr.records() {
        let row = row.map_err(|e| csv_error(path, e))?;
        let line = row.position().map_or(0, |p| p.line());
        let field = |i: usize| row.get(idx[i]).unwrap_or("");
        stats.rows += 1;
        let outcome = parse_row(field(0), field(1), field(2), field(3), field(4), aliases)
            .map_err(|e| CliError::format(path, line, e.to_string()))?;
        match outcome {
            RowOutcome::Kept(r) => {
                stats.kept += 1;
                records.push(r);
            }
            RowOutcome::NonAutomatic => stats.non_automatic += 1,
            RowOutcome::SelfLoop => stats.self_loop_dropped += 1,
        }
    }
    Ok((records, stats))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn file(contents: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(contents.as_bytes()).unwrap();
        f
    }

    #[test]
    fn normalizes_and_filters() {
        let f = file(
            "timestamp,from_bus,to_bus,circuit_id,automatic\n\
             2010-05-01 12:03, ALPHA , beta,1,auto\n\
             2010-05-01 12:03,X,x,1,auto\n\
             2010-05-01 12:04,A,B,,planned\n\
             2010-05-01 12:05,A,B,,TRUE\n",
        );
        let (records, stats) = parse_outage_file(f.path(), &AliasMap::new()).unwrap();
        assert_eq!(stats, ParseStats { rows: 4, kept: 2, non_automatic: 1, self_loop_dropped: 1 });
        assert_eq!(records[0].from_bus, "ALPHA");
        assert_eq!(records[0].to_bus, "BETA");
        assert_eq!(records[0].timestamp.to_string(), "2010-05-01 12:03");
        assert_eq!(records[1].circuit_id, "1");
    }

    #[test]
    fn three_automatic_two_planned() {
        let f = file(
            "from_bus,to_bus,timestamp,automatic,circuit_id\n\
             A,B,2010-01-01 00:00,auto,1\n\
             B,C,2010-01-01 00:00,1,1\n\
             C,D,2010-01-01 00:01,true,1\n\
             A,B,2010-01-01 00:02,planned,1\n\
             A,B,2010-01-01 00:03,0,1\n",
        );
        let (records, _) = parse_outage_file(f.path(), &AliasMap::new()).unwrap();
        assert_eq!(records.len(), 3);
    }

    #[test]
    fn aliases_apply_after_normalization() {
        let f = file("timestamp,from_bus,to_bus,circuit_id,automatic\n2010-05-01 12:03,old  name,B,1,auto\n");
        let mut aliases = AliasMap::new();
        aliases.insert("OLD NAME", "NEW");
        let (records, _) = parse_outage_file(f.path(), &aliases).unwrap();
        assert_eq!(records[0].from_bus, "NEW");
    }

    #[test]
    fn errors_carry_line_numbers() {
        let f = file("timestamp,from_bus,to_bus,circuit_id,automatic\n2010-05-01 12:03,A,B,1,auto\n2010-13-01 12:03,A,B,1,auto\n");
        match parse_outage_file(f.path(), &AliasMap::new()).unwrap_err() {
            CliError::Format { line, .. } => assert_eq!(line, 3),
            other => panic!("{other}"),
        }
        let f = file("timestamp,from_bus,to_bus\n");
        assert!(matches!(
            parse_outage_file(f.path(), &AliasMap::new()).unwrap_err(),
            CliError::Format { line: 1, .. }
        ));
        let missing = parse_outage_file(Path::new("/nonexistent/outages.csv"), &AliasMap::new());
        assert_eq!(missing.unwrap_err().exit_code(), 2);
    }
}
