//! The `POSESET` text format.
//!
//! ```text
//! POSESET <space-tag> <num_joints> <num_records>
//! x y z x y z ...      (one record per line, joint-major)
//! ```
//!
//! Space tags ending in `2d` carry two coordinates per joint, everything else
//! three. Floats are written with Rust's shortest round-trip formatting, so
//! write then read is exact.

use std::io::{BufRead, Write};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct PoseSet {
    pub space: String,
    pub num_joints: usize,
    pub records: Vec<Vec<f64>>,
}

pub fn coords_per_joint(space: &str) -> usize {
    if space.ends_with("2d") {
        2
    } else {
        3
    }
}

impl PoseSet {
    pub fn new(space: impl Into<String>, num_joints: usize) -> Self {
        PoseSet {
            space: space.into(),
            num_joints,
            records: Vec::new(),
        }
    }

    pub fn record_len(&self) -> usize {
        self.num_joints * coords_per_joint(&self.space)
    }

    pub fn write<W: Write>(&self, mut w: W) -> Result<()> {
        if self.space.split_whitespace().count() != 1 {
            return Err(Error::InvalidConfig(format!("bad space tag '{}'", self.space)));
        }
        writeln!(w, "POSESET {} {} {}", self.space, self.num_joints, self.records.len())?;
        for r in &self.records {
            if r.len() != self.record_len() {
                return Err(Error::DimensionMismatch {
                    expected: self.record_len(),
                    got: r.len(),
                });
            }
            write_floats(&mut w, r)?;
        }
        Ok(())
    }

    pub fn read<R: BufRead>(r: R) -> Result<Self> {
        let mut lines = r.lines().enumerate();
        let (n, header) = lines
            .next()
            .ok_or_else(|| Error::parse(1, "missing POSESET header"))?;
        let header = header?;
        let (space, num_joints, count) = parse_header(&header, n + 1)?;
        let mut set = PoseSet::new(space, num_joints);
        for _ in 0..count {
            let (n, line) = lines
                .next()
                .ok_or_else(|| Error::parse(set.records.len() + 2, "unexpected end of file"))?;
            set.records.push(parse_floats(&line?, set.record_len(), n + 1)?);
        }
        if let Some((n, line)) = lines.next() {
            if !line?.trim().is_empty() {
                return Err(Error::parse(n + 1, "trailing data after last record"));
            }
        }
        Ok(set)
    }
}

pub(crate) fn parse_header(line: &str, lineno: usize) -> Result<(String, usize, usize)> {
    let f: Vec<&str> = line.split(' ').collect();
    if f.len() != 4 || f[0] != "POSESET" {
        return Err(Error::parse(lineno, "expected 'POSESET <space> <num_joints> <num_records>'"));
    }
    let nj = f[2]
        .parse()
        .map_err(|_| Error::parse(lineno, format!("bad joint count '{}'", f[2])))?;
    let nr = f[3]
        .parse()
        .map_err(|_| Error::parse(lineno, format!("bad record count '{}'", f[3])))?;
    Ok((f[1].to_string(), nj, nr))
}

pub(crate) fn write_floats<W: Write>(w: &mut W, values: &[f64]) -> Result<()> {
    let mut first = true;
    for v in values {
        if !first {
            w.write_all(b" ")?;
        }
        first = false;
        write!(w, "{v}")?;
    }
    w.write_all(b"\n")?;
    Ok(())
}

pub(crate) fn parse_floats(line: &str, expected: usize, lineno: usize) -> Result<Vec<f64>> {
    let out: Vec<f64> = line
        .split(' ')
        .map(|t| {
            t.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| Error::parse(lineno, format!("bad number '{t}'")))
        })
        .collect::<Result<_>>()?;
    if out.len() != expected {
        return Err(Error::parse(
            lineno,
            format!("expected {expected} values, found {}", out.len()),
        ));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_is_exact() {
        let mut s = PoseSet::new("pose2d", 2);
        s.records.push(vec![0.1, 1.0 / 3.0, -2.5e-17, 1e300]);
        s.records.push(vec![512.0, 511.999_999_999_999_9, 0.0, -0.0]);
        let mut buf = Vec::new();
        s.write(&mut buf).unwrap();
        let back = PoseSet::read(&buf[..]).unwrap();
        assert_eq!(back, s);
    }

    #[test]
    fn rejects_wrong_field_count() {
        let text = "POSESET pose3d 1 2\n1 2 3\n1 2\n";
        match PoseSet::read(text.as_bytes()) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn rejects_truncated_file() {
        let text = "POSESET pose3d 1 3\n1 2 3\n";
        assert!(matches!(PoseSet::read(text.as_bytes()), Err(Error::Parse { line: 3, .. })));
    }

    #[test]
    fn rejects_bad_header() {
        assert!(PoseSet::read("POSESET pose3d 17\n".as_bytes()).is_err());
        assert!(PoseSet::read("POSES pose3d 17 0\n".as_bytes()).is_err());
    }

    #[test]
    fn empty_set() {
        let s = PoseSet::new("pose3d", 17);
        let mut buf = Vec::new();
        s.write(&mut buf).unwrap();
        assert_eq!(buf, b"POSESET pose3d 17 0\n");
        assert_eq!(PoseSet::read(&buf[..]).unwrap(), s);
    }
}
