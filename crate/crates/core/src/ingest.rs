//! Touch logs to grid-state event streams.
//!
//! File formats (UTF-8, comma separated, header row required, lines starting
//! with `#` ignored):
//!
//! * touch CSV: `time,x,y,down` with normalized coordinates (origin
//!   bottom-left) and `down` ∈ {0, 1};
//! * state CSV: `time,state`, one row per state-change event.

use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use thiserror::Error;

use crate::format_f64;
use crate::grid::GridSpec;
use crate::markov::{EventStream, MarkovError};

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("empty input")]
    EmptyInput,
    #[error("no finger contact in the input")]
    NoContact,
    #[error("row {row}: timestamp {time} is earlier than the previous one")]
    NonMonotoneTime { row: usize, time: f64 },
    #[error("row {row}: coordinates ({x}, {y}) outside the unit square")]
    InvalidCoordinate { row: usize, x: f64, y: f64 },
    #[error("row {row}: {message}")]
    Parse { row: usize, message: String },
    #[error("missing column `{0}`")]
    MissingColumn(&'static str),
    #[error("row {row}: state {state} out of range for {n_states} states")]
    StateOutOfRange { row: usize, state: usize, n_states: usize },
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error(transparent)]
    Markov(#[from] MarkovError),
}

pub type Result<T> = std::result::Result<T, IngestError>;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TouchEvent {
    pub time: f64,
    pub x: f64,
    pub y: f64,
    pub down: bool,
}

/// An event stream with the timestamp of every event.
#[derive(Debug, Clone, PartialEq)]
pub struct TimedStream {
    pub stream: EventStream,
    pub times: Vec<f64>,
}

/// Maps touches to grid states.
///
/// Contact events become their cell, a run of lifts becomes the off-screen
/// state of the last touched cell, and repeated states collapse into one
/// event stamped with the time of the first. Lifts before the first contact
/// are dropped; sessions start whenever the finger returns to the screen.
pub fn quantize(events: &[TouchEvent], grid: &GridSpec) -> Result<TimedStream> {
    if events.is_empty() {
        return Err(IngestError::EmptyInput);
    }
    let mut prev_time = f64::NEG_INFINITY;
    for (i, e) in events.iter().enumerate() {
        let row = i + 1;
        if !e.time.is_finite() || e.time < prev_time {
            return Err(IngestError::NonMonotoneTime { row, time: e.time });
        }
        prev_time = e.time;
        if e.down && !((0.0..=1.0).contains(&e.x) && (0.0..=1.0).contains(&e.y)) {
            return Err(IngestError::InvalidCoordinate { row, x: e.x, y: e.y });
        }
    }
    let first = events.iter().position(|e| e.down).ok_or(IngestError::NoContact)?;

    let mut states = Vec::new();
    let mut times = Vec::new();
    let mut last_cell = 0;
    for e in &events[first..] {
        let state = if e.down {
            last_cell = grid.quantize(e.x, e.y);
            last_cell
        } else {
            grid.off_screen(last_cell)
        };
        if states.last() != Some(&state) {
            states.push(state);
            times.push(e.time);
        }
    }
    let stream = EventStream::split_by(grid.n_states(), states, |a, b| grid.is_session_boundary(a, b))?;
    Ok(TimedStream { stream, times })
}

fn csv_reader<R: Read>(input: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new().comment(Some(b'#')).trim(csv::Trim::All).has_headers(true).from_reader(input)
}

fn column(headers: &csv::StringRecord, name: &'static str) -> Result<usize> {
    headers.iter().position(|h| h == name).ok_or(IngestError::MissingColumn(name))
}

fn line_of(record: &csv::StringRecord, fallback: usize) -> usize {
    record.position().map(|p| p.line() as usize).unwrap_or(fallback)
}

fn parse_error(e: csv::Error) -> IngestError {
    let row = e.position().map(|p| p.line() as usize).unwrap_or(0);
    IngestError::Parse { row, message: e.to_string() }
}

fn field<T: std::str::FromStr>(record: &csv::StringRecord, idx: usize, name: &str, row: usize) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    let raw = record.get(idx).ok_or_else(|| IngestError::Parse { row, message: format!("missing `{name}`") })?;
    raw.parse().map_err(|e| IngestError::Parse { row, message: format!("`{name}` = `{raw}`: {e}") })
}

/// Reads `time,x,y,down` rows. Row numbers in errors are file line numbers.
pub fn parse_touch_csv<R: Read>(input: R) -> Result<Vec<TouchEvent>> {
    let mut rdr = csv_reader(input);
    let headers = rdr.headers().map_err(parse_error)?.clone();
    if headers.is_empty() {
        return Err(IngestError::EmptyInput);
    }
    let cols = [column(&headers, "time")?, column(&headers, "x")?, column(&headers, "y")?, column(&headers, "down")?];
    let mut out = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(parse_error)?;
        let row = line_of(&rec, i + 2);
        let down = match rec.get(cols[3]) {
            Some("0") => false,
            Some("1") => true,
            other => return Err(IngestError::Parse { row, message: format!("`down` must be 0 or 1, got `{}`", other.unwrap_or("")) }),
        };
        out.push(TouchEvent {
            time: field(&rec, cols[0], "time", row)?,
            x: field(&rec, cols[1], "x", row)?,
            y: field(&rec, cols[2], "y", row)?,
            down,
        });
    }
    if out.is_empty() {
        return Err(IngestError::EmptyInput);
    }
    Ok(out)
}

pub fn write_touch_csv<W: Write>(events: &[TouchEvent], mut out: W) -> std::io::Result<()> {
    writeln!(out, "time,x,y,down")?;
    for e in events {
        writeln!(out, "{},{},{},{}", format_f64(e.time), format_f64(e.x), format_f64(e.y), u8::from(e.down))?;
    }
    Ok(())
}

/// Reads `time,state` rows into a grid-state stream; sessions are
/// reconstructed at every return to the screen.
pub fn parse_state_csv<R: Read>(input: R, grid: &GridSpec) -> Result<TimedStream> {
    let mut rdr = csv_reader(input);
    let headers = rdr.headers().map_err(parse_error)?.clone();
    if headers.is_empty() {
        return Err(IngestError::EmptyInput);
    }
    let (tc, sc) = (column(&headers, "time")?, column(&headers, "state")?);
    let n_states = grid.n_states();
    let mut states = Vec::new();
    let mut times = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(parse_error)?;
        let row = line_of(&rec, i + 2);
        let state: usize = field(&rec, sc, "state", row)?;
        if state >= n_states {
            return Err(IngestError::StateOutOfRange { row, state, n_states });
        }
        times.push(field(&rec, tc, "time", row)?);
        states.push(state);
    }
    if states.is_empty() {
        return Err(IngestError::EmptyInput);
    }
    let stream = EventStream::split_by(n_states, states, |a, b| grid.is_session_boundary(a, b))?;
    Ok(TimedStream { stream, times })
}

pub fn write_state_csv<W: Write>(timed: &TimedStream, mut out: W) -> std::io::Result<()> {
    writeln!(out, "time,state")?;
    for (t, s) in timed.times.iter().zip(timed.stream.events()) {
        writeln!(out, "{},{s}", format_f64(*t))?;
    }
    Ok(())
}

/// Stamps every event with its index.
pub fn index_times(stream: EventStream) -> TimedStream {
    let times = (0..stream.len()).map(|i| i as f64).collect();
    TimedStream { stream, times }
}

fn open(path: &Path) -> Result<File> {
    File::open(path).map_err(|source| IngestError::Io { path: path.display().to_string(), source })
}

pub fn read_touch_csv(path: impl AsRef<Path>) -> Result<Vec<TouchEvent>> {
    parse_touch_csv(open(path.as_ref())?)
}

pub fn read_state_csv(path: impl AsRef<Path>) -> Result<TimedStream> {
    parse_state_csv(open(path.as_ref())?, &GridSpec::default())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn touch(time: f64, x: f64, y: f64, down: bool) -> TouchEvent {
        TouchEvent { time, x, y, down }
    }

    #[test]
    fn quantize_examples() {
        let g = GridSpec::default();
        let q = quantize(&[touch(0.0, 0.1, 0.1, true), touch(1.0, 0.0, 0.0, false)], &g).unwrap();
        assert_eq!(q.stream.events(), &[0, 9]);
        assert_eq!(q.times, vec![0.0, 1.0]);

        let drag = [touch(0.0, 0.1, 0.1, true), touch(0.1, 0.5, 0.1, true), touch(0.2, 0.9, 0.1, true), touch(0.3, 0.9, 0.1, false)];
        assert_eq!(quantize(&drag, &g).unwrap().stream.events(), &[0, 1, 2, 11]);
        assert_eq!(quantize(&[touch(0.0, 1.0, 1.0, true)], &g).unwrap().stream.events(), &[8]);
    }

    #[test]
    fn quantize_collapses_and_segments() {
        let g = GridSpec::default();
        let ev = [
            touch(0.0, 0.5, 0.5, false),
            touch(0.5, 0.1, 0.1, true),
            touch(0.6, 0.2, 0.2, true),
            touch(0.7, 0.2, 0.2, false),
            touch(0.8, 0.2, 0.2, false),
            touch(0.9, 0.5, 0.9, true),
            touch(1.0, 0.5, 0.9, false),
        ];
        let q = quantize(&ev, &g).unwrap();
        assert_eq!(q.stream.events(), &[0, 9, 7, 16]);
        assert_eq!(q.times, vec![0.5, 0.7, 0.9, 1.0]);
        assert_eq!(q.stream.session_starts(), &[0, 2]);
    }

    #[test]
    fn quantize_errors() {
        let g = GridSpec::default();
        assert!(matches!(quantize(&[], &g), Err(IngestError::EmptyInput)));
        assert!(matches!(quantize(&[touch(0.0, 0.1, 0.1, false)], &g), Err(IngestError::NoContact)));
        let back = [touch(1.0, 0.1, 0.1, true), touch(0.5, 0.1, 0.1, true)];
        assert!(matches!(quantize(&back, &g), Err(IngestError::NonMonotoneTime { row: 2, .. })));
        assert!(matches!(quantize(&[touch(0.0, 1.5, 0.1, true)], &g), Err(IngestError::InvalidCoordinate { row: 1, .. })));
    }

    #[test]
    fn touch_csv_parsing() {
        let text = "# recorded on a tablet\ntime,x,y,down\n0,0.1,0.1,1\n# lift\n1,0,0,0\n";
        let ev = parse_touch_csv(text.as_bytes()).unwrap();
        assert_eq!(ev.len(), 2);
        assert!(ev[0].down && !ev[1].down);

        let err = parse_touch_csv("time,x,y,down\n0,0.1,0.1,1\n1,0.2,0.2,2\n".as_bytes()).unwrap_err();
        assert!(matches!(err, IngestError::Parse { row: 3, .. }), "{err}");
        assert!(err.to_string().contains("row 3"));
        assert!(matches!(parse_touch_csv("".as_bytes()), Err(IngestError::EmptyInput)));
        assert!(matches!(parse_touch_csv("time,x,y,down\n".as_bytes()), Err(IngestError::EmptyInput)));
        assert!(matches!(parse_touch_csv("time,x,down\n0,1,1\n".as_bytes()), Err(IngestError::MissingColumn("y"))));
        assert!(matches!(parse_touch_csv("time,x,y,down\n0,abc,0.1,1\n".as_bytes()), Err(IngestError::Parse { row: 2, .. })));
    }

    #[test]
    fn state_csv_parsing() {
        let g = GridSpec::default();
        let s = parse_state_csv("time,state\n0,0\n1,1\n2,10\n3,4\n".as_bytes(), &g).unwrap();
        assert_eq!(s.stream.events(), &[0, 1, 10, 4]);
        assert_eq!(s.stream.session_starts(), &[0, 3]);
        assert!(matches!(
            parse_state_csv("time,state\n0,18\n".as_bytes(), &g),
            Err(IngestError::StateOutOfRange { row: 2, state: 18, .. })
        ));
        assert!(matches!(parse_state_csv("".as_bytes(), &g), Err(IngestError::EmptyInput)));
    }
}
