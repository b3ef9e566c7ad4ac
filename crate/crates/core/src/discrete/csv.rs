//! CSV exchange for distributions, partitions and the toy curve.

use std::io::{BufRead, Write};

use super::{Partition, ToyExampleResult};
use crate::{Error, Result};

pub fn write_index_value_csv<W: Write, T: std::fmt::Display>(mut w: W, values: &[T]) -> Result<()> {
    writeln!(w, "index,value")?;
    for (i, v) in values.iter().enumerate() {
        writeln!(w, "{i},{v}")?;
    }
    Ok(())
}

pub fn write_distribution_csv<W: Write>(w: W, probs: &[f64]) -> Result<()> {
    write_index_value_csv(w, probs)
}

/// One line per input state holding its group index.
pub fn write_partition_csv<W: Write>(w: W, f: &Partition) -> Result<()> {
    write_index_value_csv(w, f.assignment())
}

/// Reads an `index,value` file. Indices must run 0, 1, 2, ...
pub fn read_index_value_csv<R: BufRead>(r: R) -> Result<Vec<f64>> {
    let mut lines = r.lines();
    let header = lines.next().transpose()?.unwrap_or_default();
    if header.trim() != "index,value" {
        return Err(Error::Format("expected header `index,value`".into()));
    }
    let mut values = Vec::new();
    for (expected, line) in lines.enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let (idx, val) = line
            .split_once(',')
            .ok_or_else(|| Error::Format(format!("line {}: missing comma", expected + 2)))?;
        let idx: usize = idx
            .trim()
            .parse()
            .map_err(|_| Error::Format(format!("line {}: bad index", expected + 2)))?;
        if idx != expected {
            return Err(Error::Format(format!("line {}: index {idx} out of sequence", expected + 2)));
        }
        values.push(
            val.trim()
                .parse()
                .map_err(|_| Error::Format(format!("line {}: bad value", expected + 2)))?,
        );
    }
    Ok(values)
}

pub fn write_toy_curve_csv<W: Write>(mut w: W, toy: &ToyExampleResult) -> Result<()> {
    writeln!(w, "r,hq_minus_logM")?;
    for (r, h) in &toy.hq_curve {
        writeln!(w, "{r},{h}")?;
    }
    Ok(())
}
