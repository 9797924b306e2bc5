//! Append-only JSON-lines journal.
//!
//! One record per line, UTF-8. The writer holds an exclusive OS lock on the
//! file for its lifetime, so a second writer fails fast instead of
//! interleaving lines. A torn or unparseable *last* line (the signature of a
//! crash mid-append) is truncated on open with a warning; damage anywhere
//! else is reported as corruption.

use std::collections::HashSet;
use std::fs::{File, OpenOptions, TryLockError};
use std::io::{Read, Seek, SeekFrom, Write};
use std::marker::PhantomData;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::error::{CoreError, Result};

/// Records that must be unique within a journal expose a key.
pub trait Keyed {
    fn journal_key(&self) -> Option<String> {
        None
    }
}

/// Position of an appended record. Receipts from one writer are totally
/// ordered by `seq`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct Receipt {
    pub seq: u64,
    pub offset: u64,
}

pub struct JournalWriter<T> {
    path: PathBuf,
    file: File,
    keys: HashSet<String>,
    next_seq: u64,
    offset: u64,
    sync: bool,
    _record: PhantomData<fn(T)>,
}

impl<T> std::fmt::Debug for JournalWriter<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("JournalWriter").field("path", &self.path).field("next_seq", &self.next_seq).finish()
    }
}

impl<T: Serialize + DeserializeOwned + Keyed> JournalWriter<T> {
    /// Opens (creating if needed) and locks the journal, repairing a torn
    /// tail. Returns the writer and every record already present.
    pub fn open(path: impl AsRef<Path>) -> Result<(Self, Vec<T>)> {
        let path = path.as_ref().to_path_buf();
        if let Some(dir) = path.parent() {
            std::fs::create_dir_all(dir).map_err(|e| CoreError::io(dir, e))?;
        }
        let mut file =
            OpenOptions::new().read(true).append(true).create(true).open(&path).map_err(|e| CoreError::io(&path, e))?;
        match file.try_lock() {
            Ok(()) => {}
            Err(TryLockError::WouldBlock) => return Err(CoreError::Locked { path }),
            Err(TryLockError::Error(e)) => return Err(CoreError::io(&path, e)),
        }

        let mut bytes = Vec::new();
        file.read_to_end(&mut bytes).map_err(|e| CoreError::io(&path, e))?;
        let (records, good_len) = decode_lines::<T>(&path, &bytes, true)?;
        if good_len < bytes.len() {
            log::warn!("{}: dropping {} bytes of torn trailing record", path.display(), bytes.len() - good_len);
            file.set_len(good_len as u64).map_err(|e| CoreError::io(&path, e))?;
            file.seek(SeekFrom::End(0)).map_err(|e| CoreError::io(&path, e))?;
        }

        let mut keys = HashSet::new();
        for r in &records {
            if let Some(k) = r.journal_key() {
                if !keys.insert(k.clone()) {
                    return Err(CoreError::DuplicateKey { key: k });
                }
            }
        }
        let writer = JournalWriter {
            path,
            file,
            keys,
            next_seq: records.len() as u64,
            offset: good_len as u64,
            sync: true,
            _record: PhantomData,
        };
        Ok((writer, records))
    }

    /// Disables the per-append fsync. Appends stay ordered but a machine
    /// crash may lose the most recent records.
    pub fn without_sync(mut self) -> Self {
        self.sync = false;
        self
    }

    pub fn contains(&self, key: &str) -> bool {
        self.keys.contains(key)
    }

    pub fn len(&self) -> u64 {
        self.next_seq
    }

    pub fn is_empty(&self) -> bool {
        self.next_seq == 0
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn append(&mut self, record: &T) -> Result<Receipt> {
        let key = record.journal_key();
        if let Some(k) = &key {
            if self.keys.contains(k) {
                return Err(CoreError::DuplicateKey { key: k.clone() });
            }
        }
        let mut line = serde_json::to_vec(record)?;
        line.push(b'\n');
        self.write_raw(&line)?;
        if let Some(k) = key {
            self.keys.insert(k);
        }
        let receipt = Receipt { seq: self.next_seq, offset: self.offset };
        self.next_seq += 1;
        self.offset += line.len() as u64;
        Ok(receipt)
    }

    fn write_raw(&mut self, bytes: &[u8]) -> Result<()> {
        self.file.write_all(bytes).map_err(|e| CoreError::io(&self.path, e))?;
        if self.sync {
            self.file.sync_data().map_err(|e| CoreError::io(&self.path, e))?;
        }
        Ok(())
    }

    /// Test hook: writes a prefix of a record without its newline, leaving
    /// the file as a crash mid-append would.
    #[doc(hidden)]
    pub fn append_torn(&mut self, record: &T) -> Result<()> {
        let line = serde_json::to_vec(record)?;
        let cut = line.len() / 2;
        self.write_raw(&line[..cut])
    }
}

/// Reads a journal without locking it. A torn final line is skipped (the
/// writer will repair it); a missing file reads as empty.
pub fn read_journal<T: DeserializeOwned>(path: impl AsRef<Path>) -> Result<Vec<T>> {
    let path = path.as_ref();
    let bytes = match std::fs::read(path) {
        Ok(b) => b,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(Vec::new()),
        Err(e) => return Err(CoreError::io(path, e)),
    };
    decode_lines(path, &bytes, true).map(|(records, _)| records)
}

/// Decodes complete lines. Returns the records and the byte length of the
/// valid prefix. With `tolerate_tail`, an undecodable final line ends the
/// valid prefix instead of failing.
fn decode_lines<T: DeserializeOwned>(path: &Path, bytes: &[u8], tolerate_tail: bool) -> Result<(Vec<T>, usize)> {
    let mut records = Vec::new();
    let mut start = 0;
    let mut line_no = 0;
    while start < bytes.len() {
        line_no += 1;
        let Some(nl) = bytes[start..].iter().position(|&b| b == b'\n') else {
            // no terminating newline: torn append
            if tolerate_tail {
                return Ok((records, start));
            }
            return Err(CoreError::Corrupt {
                path: path.to_path_buf(),
                line: line_no,
                message: "unterminated record".into(),
            });
        };
        let end = start + nl;
        let line = &bytes[start..end];
        let is_last = end + 1 == bytes.len();
        if !line.iter().all(u8::is_ascii_whitespace) {
            match serde_json::from_slice::<T>(line) {
                Ok(r) => records.push(r),
                Err(_) if is_last && tolerate_tail => return Ok((records, start)),
                Err(e) => {
                    return Err(CoreError::Corrupt { path: path.to_path_buf(), line: line_no, message: e.to_string() })
                }
            }
        }
        start = end + 1;
    }
    Ok((records, start))
}
