//! Plain-text partition formats.
//!
//! Both formats hold one non-negative integer per line: the block id of
//! each matrix row, or the domain id of each supernode. Blank lines and
//! lines starting with `#` or `%` are ignored. Block ids must be dense
//! (every id in `0..max` used at least once).

use std::io::Write;

use super::IoError;
use crate::sparse::BlockPartition;

fn parse_ids(text: &str) -> Result<Vec<usize>, IoError> {
    let mut ids = Vec::new();
    for (k, line) in text.lines().enumerate() {
        let t = line.trim();
        if t.is_empty() || t.starts_with('#') || t.starts_with('%') {
            continue;
        }
        let v = t.parse::<usize>().map_err(|_| IoError::Parse {
            line: k + 1,
            msg: format!("expected a non-negative integer, got '{t}'"),
        })?;
        ids.push(v);
    }
    Ok(ids)
}

/// Parses a block partition (block id per row).
pub fn parse_block_partition(text: &str) -> Result<BlockPartition, IoError> {
    let ids = parse_ids(text)?;
    if let Some(&m) = ids.iter().max() {
        if m >= ids.len() {
            return Err(IoError::Parse {
                line: 0,
                msg: format!("block id {m} exceeds the row count"),
            });
        }
    }
    BlockPartition::from_block_of(ids).map_err(|e| IoError::Parse {
        line: 0,
        msg: e.to_string(),
    })
}

pub fn write_block_partition<W: Write>(p: &BlockPartition, mut w: W) -> std::io::Result<()> {
    for &b in p.block_of() {
        writeln!(w, "{b}")?;
    }
    Ok(())
}

/// Parses a domain assignment (domain id per supernode). Returns the ids
/// and the number of domains they reference.
pub fn parse_domain_assignment(text: &str) -> Result<(Vec<usize>, usize), IoError> {
    let ids = parse_ids(text)?;
    let p = ids.iter().map(|&d| d + 1).max().unwrap_or(0);
    if p > ids.len() {
        return Err(IoError::Parse {
            line: 0,
            msg: format!("domain id {} exceeds the supernode count", p - 1),
        });
    }
    let mut used = vec![false; p];
    for &d in &ids {
        used[d] = true;
    }
    if let Some(d) = used.iter().position(|u| !u) {
        return Err(IoError::Parse {
            line: 0,
            msg: format!("domain {d} has no supernodes"),
        });
    }
    Ok((ids, p))
}

pub fn write_domain_assignment<W: Write>(owner: &[usize], mut w: W) -> std::io::Result<()> {
    for &d in owner {
        writeln!(w, "{d}")?;
    }
    Ok(())
}
