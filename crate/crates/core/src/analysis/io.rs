//! On-disk formats of the analysis outputs.

use std::fmt::Write as _;
use std::io::{Read, Write};
use std::path::Path;

use super::{BinaryCodeSet, LabelGrid, Neighbor, OccupancyCurve, OutputStats, ProbeResponse};
use crate::{Error, Result};

const CODES_MAGIC: &[u8; 4] = b"IPUC";
const CODES_VERSION: u32 = 1;

/// `IPUC`, u32 version, u32 bits, u64 entries, then per entry the
/// little-endian bit-packed code in `ceil(bits / 8)` bytes and a u64 count.
pub fn codes_to_bytes(set: &BinaryCodeSet) -> Vec<u8> {
    let width = set.bits().div_ceil(8);
    let mut out = Vec::with_capacity(20 + set.distinct() * (width + 8));
    out.extend_from_slice(CODES_MAGIC);
    out.extend_from_slice(&CODES_VERSION.to_le_bytes());
    out.extend_from_slice(&(set.bits() as u32).to_le_bytes());
    out.extend_from_slice(&(set.distinct() as u64).to_le_bytes());
    for (code, count) in set.iter() {
        out.extend_from_slice(&code.to_le_bytes()[..width]);
        out.extend_from_slice(&count.to_le_bytes());
    }
    out
}

struct Cursor<'a>(&'a [u8]);

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.0.len() < n {
            return Err(Error::Format("code file is truncated".into()));
        }
        let (head, tail) = self.0.split_at(n);
        self.0 = tail;
        Ok(head)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }
}

pub fn codes_from_bytes(bytes: &[u8]) -> Result<BinaryCodeSet> {
    let mut r = Cursor(bytes);
    if r.take(4)? != CODES_MAGIC {
        return Err(Error::Format("not a code file (bad magic)".into()));
    }
    let version = r.u32()?;
    if version != CODES_VERSION {
        return Err(Error::Format(format!("unsupported code file version {version}")));
    }
    let bits = r.u32()? as usize;
    let entries = r.u64()?;
    let mut set = BinaryCodeSet::new(bits).map_err(|e| Error::Format(e.to_string()))?;
    let width = bits.div_ceil(8);
    for _ in 0..entries {
        let mut code = [0u8; 16];
        code[..width].copy_from_slice(r.take(width)?);
        let count = r.u64()?;
        set.insert(u128::from_le_bytes(code), count)
            .map_err(|e| Error::Format(e.to_string()))?;
    }
    if !r.0.is_empty() {
        return Err(Error::Format("trailing bytes after the last code".into()));
    }
    Ok(set)
}

pub fn write_codes<W: Write>(mut w: W, set: &BinaryCodeSet) -> Result<()> {
    w.write_all(&codes_to_bytes(set))?;
    Ok(())
}

pub fn read_codes<R: Read>(mut r: R) -> Result<BinaryCodeSet> {
    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes)?;
    codes_from_bytes(&bytes)
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn write_histogram_csv(path: &Path, stats: &OutputStats) -> Result<()> {
    let mut s = String::from("bin_lo,bin_hi,count\n");
    for b in &stats.histogram {
        writeln!(s, "{},{},{}", b.lo, b.hi, b.count).unwrap();
    }
    write_text(path, &s)
}

pub fn write_activation_csv(path: &Path, stats: &OutputStats) -> Result<()> {
    let mut s = String::from("node,prob\n");
    for (n, p) in stats.activation_prob.iter().enumerate() {
        writeln!(s, "{n},{p}").unwrap();
    }
    write_text(path, &s)
}

/// The `count` column holds cumulative counts within distance `d`.
pub fn write_occupancy_csv(path: &Path, curves: &[OccupancyCurve]) -> Result<()> {
    let mut s = String::from("anchor,d,count,rate\n");
    for (a, c) in curves.iter().enumerate() {
        for (d, (n, r)) in c.cumulative.iter().zip(&c.rate).enumerate() {
            writeln!(s, "{a},{d},{n},{r}").unwrap();
        }
    }
    write_text(path, &s)
}

pub fn write_label_grid_csv(path: &Path, grid: &LabelGrid) -> Result<()> {
    let mut s = String::from("x,y,dim,label\n");
    for (d, labels) in grid.labels.iter().enumerate() {
        for ((y, x), l) in labels.indexed_iter() {
            writeln!(s, "{x},{y},{d},{l}").unwrap();
        }
    }
    write_text(path, &s)
}

pub fn write_probe_csv(path: &Path, probe: &ProbeResponse) -> Result<()> {
    let mut s = String::from("node,start_col,end_col\n");
    for (n, node) in probe.nodes.iter().enumerate() {
        for (a, b) in &node.intervals {
            writeln!(s, "{n},{a},{b}").unwrap();
        }
    }
    write_text(path, &s)
}

/// `[[index, distance], ...]`.
pub fn neighbors_json(neighbors: &[Neighbor]) -> String {
    let pairs: Vec<(usize, u32)> = neighbors.iter().map(|n| (n.index, n.distance)).collect();
    serde_json::to_string(&pairs).expect("plain data")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn code_file_layout() {
        let set = BinaryCodeSet::from_codes(12, [0x0ABC, 0x0001, 0x0ABC]).unwrap();
        let bytes = codes_to_bytes(&set);
        assert_eq!(&bytes[..4], b"IPUC");
        assert_eq!(bytes.len(), 20 + 2 * (2 + 8));
        // first entry: code 1, count 1
        assert_eq!(&bytes[20..30], &[1, 0, 1, 0, 0, 0, 0, 0, 0, 0]);
        assert_eq!(&bytes[30..32], &[0xBC, 0x0A]);
        assert_eq!(codes_from_bytes(&bytes).unwrap(), set);
    }

    #[test]
    fn code_file_errors() {
        let set = BinaryCodeSet::from_codes(128, [u128::MAX, 7]).unwrap();
        let bytes = codes_to_bytes(&set);
        assert_eq!(codes_from_bytes(&bytes).unwrap(), set);
        assert!(codes_from_bytes(&bytes[..bytes.len() - 1]).is_err());
        let mut extra = bytes.clone();
        extra.push(0);
        assert!(codes_from_bytes(&extra).is_err());
        let mut bad = bytes;
        bad[0] = b'X';
        assert!(matches!(codes_from_bytes(&bad), Err(Error::Format(_))));
    }

    #[test]
    fn neighbor_json_shape() {
        let n = [Neighbor { index: 0, distance: 0 }, Neighbor { index: 4, distance: 2 }];
        assert_eq!(neighbors_json(&n), "[[0,0],[4,2]]");
    }
}
