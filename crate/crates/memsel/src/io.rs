//! JSON-lines readers and writers for score files, token records and labels.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use memsel_core::{PositionDist, SamplePool, ScoredSample, TokenRecord, TrueToken};
use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },

    #[error("{}:{line}: {message}", path.display())]
    Line { path: PathBuf, line: usize, message: String },

    #[error("{}: {source}", path.display())]
    Core { path: PathBuf, source: memsel_core::Error },

    #[error("{}: {message}", path.display())]
    Format { path: PathBuf, message: String },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Serialize, Deserialize)]
struct ScoreLine {
    id: String,
    score: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    member: Option<u8>,
}

#[derive(Debug, Serialize, Deserialize)]
struct PositionLine {
    probs: Vec<f64>,
    tail_mass: f64,
    true_index: i64,
}

#[derive(Debug, Serialize, Deserialize)]
struct TokenLine {
    id: String,
    token_logprobs: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    text: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    positions: Option<Vec<PositionLine>>,
}

#[derive(Debug, Deserialize)]
struct LabelLine {
    id: String,
    member: u8,
}

fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|source| Error::Io { path: path.into(), source })
}

/// Parses each non-blank line of `reader` as `T`, handing `(line number, value)` to `f`.
fn for_each_line<T, R, F>(path: &Path, reader: R, mut f: F) -> Result<()>
where
    T: for<'de> Deserialize<'de>,
    R: BufRead,
    F: FnMut(usize, T) -> std::result::Result<(), String>,
{
    for (i, line) in reader.lines().enumerate() {
        let line_no = i + 1;
        let line = line.map_err(|source| Error::Io { path: path.into(), source })?;
        if line.trim().is_empty() {
            continue;
        }
        let value: T = serde_json::from_str(&line).map_err(|e| Error::Line {
            path: path.into(),
            line: line_no,
            message: e.to_string(),
        })?;
        f(line_no, value).map_err(|message| Error::Line { path: path.into(), line: line_no, message })?;
    }
    Ok(())
}

fn member_flag(value: u8) -> std::result::Result<bool, String> {
    match value {
        0 => Ok(false),
        1 => Ok(true),
        other => Err(format!("member must be 0 or 1, got {other}")),
    }
}

pub fn read_scores<R: BufRead>(path: &Path, reader: R) -> Result<SamplePool> {
    let mut samples = Vec::new();
    let mut seen = std::collections::HashSet::new();
    for_each_line(path, reader, |_, line: ScoreLine| {
        if !line.score.is_finite() {
            return Err(format!("score for {:?} is not finite", line.id));
        }
        if !seen.insert(line.id.clone()) {
            return Err(format!("duplicate id {:?}", line.id));
        }
        let member = line.member.map(member_flag).transpose()?;
        samples.push(ScoredSample::new(line.id, line.score, member));
        Ok(())
    })?;
    SamplePool::new(samples).map_err(|source| Error::Core { path: path.into(), source })
}

/// Reads a score file, keeping file order.
pub fn load_scores(path: &Path) -> Result<SamplePool> {
    read_scores(path, open(path)?)
}

pub fn write_scores_to<W: Write>(mut w: W, pool: &SamplePool) -> std::io::Result<()> {
    for s in pool.samples() {
        let line = ScoreLine { id: s.id.clone(), score: s.score, member: s.member.map(u8::from) };
        serde_json::to_writer(&mut w, &line)?;
        w.write_all(b"\n")?;
    }
    Ok(())
}

fn position_from_line(p: PositionLine) -> std::result::Result<PositionDist, String> {
    let true_token = match p.true_index {
        -1 => TrueToken::Tail,
        i if i >= 0 => TrueToken::Index(i as usize),
        other => return Err(format!("true_index must be >= 0 or -1, got {other}")),
    };
    Ok(PositionDist { probs: p.probs, tail_mass: p.tail_mass, true_token })
}

pub fn read_token_records<R: BufRead>(path: &Path, reader: R) -> Result<Vec<TokenRecord>> {
    let mut records = Vec::new();
    for_each_line(path, reader, |_, line: TokenLine| {
        let positions = line
            .positions
            .map(|ps| ps.into_iter().map(position_from_line).collect::<std::result::Result<Vec<_>, _>>())
            .transpose()?;
        let rec = TokenRecord::new(line.id.clone(), line.token_logprobs, line.text, positions)
            .map_err(|e| format!("record {:?}: {e}", line.id))?;
        records.push(rec);
        Ok(())
    })?;
    Ok(records)
}

/// Reads a token-record file, validating every record.
pub fn load_token_records(path: &Path) -> Result<Vec<TokenRecord>> {
    read_token_records(path, open(path)?)
}

pub fn write_token_records_to<W: Write>(mut w: W, records: &[TokenRecord]) -> std::io::Result<()> {
    for r in records {
        let positions = r.positions.as_ref().map(|ps| {
            ps.iter()
                .map(|p| PositionLine {
                    probs: p.probs.clone(),
                    tail_mass: p.tail_mass,
                    true_index: match p.true_token {
                        TrueToken::Index(i) => i as i64,
                        TrueToken::Tail => -1,
                    },
                })
                .collect()
        });
        let line = TokenLine {
            id: r.id.clone(),
            token_logprobs: r.token_logprobs.clone(),
            text: r.text.clone(),
            positions,
        };
        serde_json::to_writer(&mut w, &line)?;
        w.write_all(b"\n")?;
    }
    Ok(())
}

/// Reads `{"id": ..., "member": 0|1}` lines into an id → label map.
pub fn load_labels(path: &Path) -> Result<BTreeMap<String, bool>> {
    let mut labels = BTreeMap::new();
    for_each_line(path, open(path)?, |_, line: LabelLine| {
        let member = member_flag(line.member)?;
        if labels.insert(line.id.clone(), member).is_some() {
            return Err(format!("duplicate id {:?}", line.id));
        }
        Ok(())
    })?;
    Ok(labels)
}
