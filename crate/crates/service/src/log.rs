use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, BufWriter, ErrorKind, Write};
use std::path::{Path, PathBuf};

use crate::error::{ServiceError, ServiceResult};
use crate::model::Event;

/// Append-only JSONL event log. Each event is flushed before the caller applies it.
#[derive(Debug)]
pub struct EventLog {
    path: PathBuf,
    out: BufWriter<File>,
}

impl EventLog {
    pub fn open(path: impl Into<PathBuf>) -> ServiceResult<Self> {
        let path = path.into();
        let file = OpenOptions::new().create(true).append(true).open(&path).map_err(|e| ServiceError::log(&path, e))?;
        Ok(EventLog { path, out: BufWriter::new(file) })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn append(&mut self, event: &Event) -> ServiceResult<()> {
        let line = serde_json::to_string(event).expect("events always serialise");
        writeln!(self.out, "{line}").and_then(|_| self.out.flush()).map_err(|e| ServiceError::log(&self.path, e))
    }

    /// Flushes and fsyncs.
    pub fn sync(&mut self) -> ServiceResult<()> {
        self.out.flush().and_then(|_| self.out.get_ref().sync_all()).map_err(|e| ServiceError::log(&self.path, e))
    }
}

/// Reads every event in a log; a missing file is an empty log. A torn final line (a crash
/// mid-write) is dropped with a warning; corruption anywhere else is an error.
pub fn read_events(path: impl AsRef<Path>) -> ServiceResult<Vec<Event>> {
    let path = path.as_ref();
    let file = match File::open(path) {
        Ok(f) => f,
        Err(e) if e.kind() == ErrorKind::NotFound => return Ok(Vec::new()),
        Err(e) => return Err(ServiceError::log(path, e)),
    };
    let lines: Vec<String> =
        BufReader::new(file).lines().collect::<Result<_, _>>().map_err(|e| ServiceError::log(path, e))?;
    let last = lines.iter().rposition(|l| !l.trim().is_empty());
    let mut events = Vec::with_capacity(lines.len());
    for (i, line) in lines.iter().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        match serde_json::from_str(line) {
            Ok(e) => events.push(e),
            Err(e) if Some(i) == last && e.is_eof() => {
                tracing::warn!(path = %path.display(), line = i + 1, "dropping torn final log line");
            }
            Err(e) => return Err(ServiceError::CorruptLog { path: path.into(), line: i + 1, message: e.to_string() }),
        }
    }
    Ok(events)
}

#[cfg(test)]
mod tests {
    use std::io::Write;

    use super::*;

    #[test]
    fn append_then_read() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("events.jsonl");
        let mut log = EventLog::open(&path).unwrap();
        let e = Event::WorkerRegistered { worker_id: "w1".into(), at: 5 };
        log.append(&e).unwrap();
        log.append(&e).unwrap();
        assert_eq!(read_events(&path).unwrap(), vec![e.clone(), e]);
    }

    #[test]
    fn missing_log_is_empty() {
        let dir = tempfile::tempdir().unwrap();
        assert!(read_events(dir.path().join("none.jsonl")).unwrap().is_empty());
    }

    #[test]
    fn torn_tail_is_dropped_but_inner_corruption_is_not() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("events.jsonl");
        let good = serde_json::to_string(&Event::WorkerRegistered { worker_id: "w1".into(), at: 5 }).unwrap();
        std::fs::File::create(&path)
            .unwrap()
            .write_all(format!("{good}\n{{\"event\":\"worker_reg").as_bytes())
            .unwrap();
        assert_eq!(read_events(&path).unwrap().len(), 1);
        std::fs::File::create(&path)
            .unwrap()
            .write_all(format!("{{\"event\":\"worker_reg\n{good}\n").as_bytes())
            .unwrap();
        assert!(matches!(read_events(&path), Err(ServiceError::CorruptLog { line: 1, .. })));
    }
}
