//! Plain-text dump of Tucker tensors for debugging and interchange.
//!
//! Layout (whitespace separated, one record per line):
//!
//! ```text
//! tucker3
//! dims n1 n2 n3
//! ranks r1 r2 r3
//! core <r1*r2*r3 values, first index fastest>
//! factor1 <n1 rows of r1 values, row-major>
//! factor2 ...
//! factor3 ...
//! ```
//!
//! Values are written in shortest round-trip form, so a write/read cycle is
//! exact.

use std::fmt::Write as _;

use nalgebra::DMatrix;

use super::dense::DenseTensor3;
use super::tensor::TuckerTensor3;
use crate::error::{Error, Result};

pub fn write_tucker(x: &TuckerTensor3) -> String {
    let mut s = String::new();
    let d = x.dims();
    let r = x.rank().0;
    let _ = writeln!(s, "tucker3");
    let _ = writeln!(s, "dims {} {} {}", d[0], d[1], d[2]);
    let _ = writeln!(s, "ranks {} {} {}", r[0], r[1], r[2]);
    s.push_str("core");
    for v in x.core().data() {
        let _ = write!(s, " {v:e}");
    }
    s.push('\n');
    for t in 0..3 {
        let f = x.factor(t);
        let _ = write!(s, "factor{}", t + 1);
        for i in 0..f.nrows() {
            for j in 0..f.ncols() {
                let _ = write!(s, " {:e}", f[(i, j)]);
            }
        }
        s.push('\n');
    }
    s
}

pub fn read_tucker(text: &str) -> Result<TuckerTensor3> {
    let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty());
    let mut next = |tag: &str| -> Result<Vec<String>> {
        let line = lines
            .next()
            .ok_or_else(|| Error::Parse(format!("missing '{tag}' record")))?;
        let mut parts = line.split_whitespace();
        let head = parts.next().unwrap_or_default();
        if head != tag {
            return Err(Error::Parse(format!("expected '{tag}', found '{head}'")));
        }
        Ok(parts.map(String::from).collect())
    };
    next("tucker3")?;
    let dims = parse_triple(&next("dims")?)?;
    let ranks = parse_triple(&next("ranks")?)?;
    let core = parse_floats(&next("core")?)?;
    let core = DenseTensor3::from_vec(ranks, core).map_err(|e| Error::Parse(e.to_string()))?;
    let mut factors: [DMatrix<f64>; 3] = Default::default();
    for t in 0..3 {
        let vals = parse_floats(&next(&format!("factor{}", t + 1))?)?;
        if vals.len() != dims[t] * ranks[t] {
            return Err(Error::Parse(format!(
                "factor{} has {} values, expected {}",
                t + 1,
                vals.len(),
                dims[t] * ranks[t]
            )));
        }
        factors[t] = DMatrix::from_row_slice(dims[t], ranks[t], &vals);
    }
    TuckerTensor3::new(core, factors)
}

fn parse_triple(v: &[String]) -> Result<[usize; 3]> {
    if v.len() != 3 {
        return Err(Error::Parse(format!("expected three integers, got {}", v.len())));
    }
    let mut out = [0; 3];
    for (o, s) in out.iter_mut().zip(v) {
        *o = s.parse().map_err(|_| Error::Parse(format!("bad integer '{s}'")))?;
    }
    Ok(out)
}

fn parse_floats(v: &[String]) -> Result<Vec<f64>> {
    v.iter()
        .map(|s| s.parse().map_err(|_| Error::Parse(format!("bad number '{s}'"))))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roundtrip_is_exact() {
        let core = DenseTensor3::from_fn([2, 1, 3], |i, _, k| (i as f64 + 0.1) / (k as f64 + 3.0));
        let f = [
            DMatrix::from_fn(3, 2, |i, j| 1.0 / (1.0 + i as f64 + j as f64)),
            DMatrix::from_fn(2, 1, |i, _| std::f64::consts::PI * i as f64),
            DMatrix::from_fn(4, 3, |i, j| (i as f64 - j as f64) * 1e-300),
        ];
        let x = TuckerTensor3::new(core, f).unwrap();
        let y = read_tucker(&write_tucker(&x)).unwrap();
        assert_eq!(x, y);
    }

    #[test]
    fn malformed_input_is_rejected() {
        assert!(read_tucker("tucker3\ndims 1 1\n").is_err());
        assert!(read_tucker("tucker3\ndims 1 1 1\nranks 1 1 1\ncore x\n").is_err());
    }
}
