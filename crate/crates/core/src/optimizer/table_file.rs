//! `ACXT` binary logic-table format.
//!
//! All integers and floats are little-endian:
//!
//! ```text
//! magic        b"ACXT"
//! version      u32 (= 1)
//! dim count    u32 (= 4)
//! per dim      u32 name length, name bytes, u32 cut count, f64 cut points
//!              (dims in order: h, hdot0, hdot1, tau)
//! advisories   u32 count, then per advisory u32 length + name bytes
//! values       u64 count, then f32 values in [τ][a_prev][h][hdot0][hdot1][action] order
//! ```

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::{Grid, LogicTable};
use crate::airspace::Advisory;
use crate::{Error, Result};

pub const MAGIC: &[u8; 4] = b"ACXT";
pub const VERSION: u32 = 1;
const DIMS: [&str; 4] = ["h", "hdot0", "hdot1", "tau"];

pub fn write_table<W: Write>(table: &LogicTable, mut w: W) -> Result<()> {
    let g = table.grid();
    let taus: Vec<f64> = (0..=g.tau_max()).map(f64::from).collect();
    w.write_all(MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    w.write_all(&(DIMS.len() as u32).to_le_bytes())?;
    for (name, cuts) in DIMS.iter().zip([g.h(), g.hdot0(), g.hdot1(), &taus]) {
        write_str(&mut w, name)?;
        w.write_all(&(cuts.len() as u32).to_le_bytes())?;
        for c in cuts {
            w.write_all(&c.to_le_bytes())?;
        }
    }
    w.write_all(&(g.advisories().len() as u32).to_le_bytes())?;
    for a in g.advisories() {
        write_str(&mut w, a.name())?;
    }
    w.write_all(&(table.values().len() as u64).to_le_bytes())?;
    let mut buf = Vec::with_capacity(table.values().len() * 4);
    for v in table.values() {
        buf.extend_from_slice(&(*v as f32).to_le_bytes());
    }
    w.write_all(&buf)?;
    w.flush()?;
    Ok(())
}

pub fn read_table<R: Read>(mut r: R) -> Result<LogicTable> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic).map_err(truncated)?;
    if &magic != MAGIC {
        return Err(Error::TableFormat(format!("bad magic {magic:?}")));
    }
    let version = read_u32(&mut r)?;
    if version != VERSION {
        return Err(Error::TableFormat(format!("unsupported version {version}")));
    }
    let ndims = read_u32(&mut r)?;
    if ndims as usize != DIMS.len() {
        return Err(Error::TableFormat(format!("expected {} dimensions, found {ndims}", DIMS.len())));
    }
    let mut axes = Vec::with_capacity(DIMS.len());
    for expected in DIMS {
        let name = read_str(&mut r)?;
        if name != expected {
            return Err(Error::TableFormat(format!("expected dimension `{expected}`, found `{name}`")));
        }
        let n = read_u32(&mut r)? as usize;
        let cuts = (0..n).map(|_| read_f64(&mut r)).collect::<Result<Vec<_>>>()?;
        axes.push(cuts);
    }
    let taus = axes.pop().unwrap();
    let tau_max = taus.len().checked_sub(1).ok_or_else(|| Error::TableFormat("empty tau axis".into()))?;
    if taus.iter().enumerate().any(|(i, t)| *t != i as f64) {
        return Err(Error::TableFormat("tau axis must be 0, 1, ..., tau_max".into()));
    }
    let n_adv = read_u32(&mut r)? as usize;
    let advisories = (0..n_adv).map(|_| read_str(&mut r)?.parse::<Advisory>()).collect::<Result<Vec<_>>>()?;
    let hdot1 = axes.pop().unwrap();
    let hdot0 = axes.pop().unwrap();
    let h = axes.pop().unwrap();
    let grid = Grid::new(h, hdot0, hdot1, advisories, tau_max as u32)?;
    let count = read_u64(&mut r)? as usize;
    let expected = grid.num_states() * grid.advisories().len();
    if count != expected {
        return Err(Error::TableFormat(format!("value count {count} does not match grid size {expected}")));
    }
    let mut raw = vec![0u8; count * 4];
    r.read_exact(&mut raw).map_err(truncated)?;
    let values = raw.chunks_exact(4).map(|b| f32::from_le_bytes(b.try_into().unwrap()) as f64).collect();
    let mut rest = [0u8; 1];
    if r.read(&mut rest)? != 0 {
        return Err(Error::TableFormat("trailing bytes after value array".into()));
    }
    LogicTable::new(grid, values).map_err(|e| Error::TableFormat(e.to_string()))
}

pub fn save(table: &LogicTable, path: &Path) -> Result<()> {
    write_table(table, BufWriter::new(File::create(path)?))
}

pub fn load(path: &Path) -> Result<LogicTable> {
    read_table(BufReader::new(File::open(path)?))
}

fn truncated(e: std::io::Error) -> Error {
    if e.kind() == std::io::ErrorKind::UnexpectedEof {
        Error::TableFormat("unexpected end of file".into())
    } else {
        Error::Io(e)
    }
}

fn write_str<W: Write>(w: &mut W, s: &str) -> Result<()> {
    w.write_all(&(s.len() as u32).to_le_bytes())?;
    w.write_all(s.as_bytes())?;
    Ok(())
}

fn read_u32<R: Read>(r: &mut R) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b).map_err(truncated)?;
    Ok(u32::from_le_bytes(b))
}

fn read_u64<R: Read>(r: &mut R) -> Result<u64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b).map_err(truncated)?;
    Ok(u64::from_le_bytes(b))
}

fn read_f64<R: Read>(r: &mut R) -> Result<f64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b).map_err(truncated)?;
    Ok(f64::from_le_bytes(b))
}

fn read_str<R: Read>(r: &mut R) -> Result<String> {
    let n = read_u32(r)? as usize;
    if n > 64 {
        return Err(Error::TableFormat(format!("name length {n} is implausible")));
    }
    let mut b = vec![0u8; n];
    r.read_exact(&mut b).map_err(truncated)?;
    String::from_utf8(b).map_err(|e| Error::TableFormat(format!("name is not UTF-8: {e}")))
}
