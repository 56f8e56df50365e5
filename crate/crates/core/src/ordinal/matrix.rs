use std::io::{BufRead, Write};

use crate::error::{Error, Result};
use crate::pose::Pose3D;

/// Pairwise depth relation between joints `i` and `j`: `1` if `i` is farther
/// from the camera than `j`, `2` if nearer, `3` if roughly equal.
pub const FARTHER: u8 = 1;
pub const NEARER: u8 = 2;
pub const EQUAL: u8 = 3;

/// Code that the relation `(j, i)` must carry for `(i, j) = code` to be
/// consistent.
pub fn complement(code: u8) -> u8 {
    match code {
        FARTHER => NEARER,
        NEARER => FARTHER,
        other => other,
    }
}

/// N x N joint-ordinal relation matrix with a validity mask.
///
/// Masked entries are stored as code `0`. The diagonal is always `3` and
/// unmasked; unmasked pairs are antisymmetric.
#[derive(Clone, Debug, PartialEq)]
pub struct OrdinalMatrix {
    n: usize,
    codes: Vec<u8>,
    epsilon: Option<f64>,
}

impl OrdinalMatrix {
    /// The relation matrix of a pose over `scoring_joints`, in the order
    /// given. `epsilon` (mm) is the tolerance of the "roughly equal" relation.
    pub fn from_pose(pose: &Pose3D, epsilon: f64, scoring_joints: &[usize]) -> Result<Self> {
        if !(epsilon >= 0.0) {
            return Err(Error::InvalidConfig(format!("epsilon must be non-negative, got {epsilon}")));
        }
        if let Some(&j) = scoring_joints.iter().find(|&&j| j >= pose.num_joints()) {
            return Err(Error::DimensionMismatch {
                expected: pose.num_joints(),
                got: j + 1,
            });
        }
        let depth: Vec<f64> = scoring_joints.iter().map(|&j| pose.joint(j)[2]).collect();
        let n = depth.len();
        let mut codes = vec![EQUAL; n * n];
        for i in 0..n {
            for j in 0..n {
                let d = depth[i] - depth[j];
                codes[i * n + j] = if d.abs() <= epsilon {
                    EQUAL
                } else if d > 0.0 {
                    FARTHER
                } else {
                    NEARER
                };
            }
        }
        Ok(OrdinalMatrix {
            n,
            codes,
            epsilon: Some(epsilon),
        })
    }

    /// Cleans a raw predicted matrix (row-major, `n * n` codes in `1..=3`):
    /// the diagonal is set to `3` and every pair whose two entries are not
    /// complements of each other is masked.
    pub fn sanitize(n: usize, raw: &[u8]) -> Result<Self> {
        if raw.len() != n * n {
            return Err(Error::DimensionMismatch {
                expected: n * n,
                got: raw.len(),
            });
        }
        for (k, &c) in raw.iter().enumerate() {
            if !(FARTHER..=EQUAL).contains(&c) {
                return Err(Error::InvalidCode {
                    row: k / n,
                    col: k % n,
                    code: c,
                });
            }
        }
        Ok(Self::from_raw_unchecked(n, raw, None))
    }

    /// Like `sanitize` but `0` is accepted as an already-masked entry.
    fn from_raw_unchecked(n: usize, raw: &[u8], epsilon: Option<f64>) -> Self {
        let mut codes = raw.to_vec();
        for i in 0..n {
            codes[i * n + i] = EQUAL;
            for j in (i + 1)..n {
                let (a, b) = (raw[i * n + j], raw[j * n + i]);
                if a == 0 || b != complement(a) {
                    codes[i * n + j] = 0;
                    codes[j * n + i] = 0;
                }
            }
        }
        OrdinalMatrix { n, codes, epsilon }
    }

    pub fn size(&self) -> usize {
        self.n
    }

    pub fn epsilon(&self) -> Option<f64> {
        self.epsilon
    }

    /// The code at `(i, j)`, or `None` if the pair is masked.
    pub fn code(&self, i: usize, j: usize) -> Option<u8> {
        match self.codes[i * self.n + j] {
            0 => None,
            c => Some(c),
        }
    }

    pub fn is_masked(&self, i: usize, j: usize) -> bool {
        self.codes[i * self.n + j] == 0
    }

    /// Row-major codes with `0` for masked pairs.
    pub fn raw_codes(&self) -> &[u8] {
        &self.codes
    }

    /// Number of unmasked ordered off-diagonal pairs.
    pub fn unmasked_pairs(&self) -> usize {
        self.codes.iter().filter(|&&c| c != 0).count() - self.n
    }

    /// Rewrites the unordered pair `(i, j)`, keeping antisymmetry.
    pub(crate) fn set_pair(&mut self, i: usize, j: usize, code: u8) {
        debug_assert!(i != j);
        self.codes[i * self.n + j] = code;
        self.codes[j * self.n + i] = complement(code);
    }

    /// Text block: `ORDINAL <N>` (plus `<epsilon>` when known), then `N`
    /// lines of `N` codes.
    pub fn write<W: Write>(&self, mut w: W) -> Result<()> {
        match self.epsilon {
            Some(e) => writeln!(w, "ORDINAL {} {}", self.n, e)?,
            None => writeln!(w, "ORDINAL {}", self.n)?,
        }
        for row in self.codes.chunks(self.n.max(1)).take(self.n) {
            let line: Vec<String> = row.iter().map(|c| c.to_string()).collect();
            writeln!(w, "{}", line.join(" "))?;
        }
        Ok(())
    }

    pub fn read<R: BufRead>(r: R) -> Result<Self> {
        let mut lines = numbered_lines(r);
        let (n, header) = lines.next().ok_or_else(|| Error::parse(1, "missing ORDINAL header"))??;
        let m = Self::parse_block(&header, n, &mut lines)?;
        for item in lines {
            let (n, line) = item?;
            if !line.trim().is_empty() {
                return Err(Error::parse(n, "trailing data after ordinal matrix"));
            }
        }
        Ok(m)
    }

    /// Parses the body of a block whose header line has already been read.
    /// Inconsistent pairs in the input are masked as in `sanitize`.
    pub(crate) fn parse_block(
        header: &str,
        header_line: usize,
        lines: &mut dyn Iterator<Item = Result<(usize, String)>>,
    ) -> Result<Self> {
        let fields: Vec<&str> = header.split_whitespace().collect();
        if fields.first() != Some(&"ORDINAL") || !(2..=3).contains(&fields.len()) {
            return Err(Error::parse(header_line, "expected 'ORDINAL <N> [epsilon]'"));
        }
        let n: usize = fields[1]
            .parse()
            .map_err(|_| Error::parse(header_line, format!("bad matrix size '{}'", fields[1])))?;
        let epsilon = match fields.get(2) {
            Some(e) => Some(
                e.parse::<f64>()
                    .ok()
                    .filter(|v| *v >= 0.0)
                    .ok_or_else(|| Error::parse(header_line, format!("bad epsilon '{e}'")))?,
            ),
            None => None,
        };
        let mut raw = Vec::with_capacity(n * n);
        for row in 0..n {
            let (lineno, line) = lines
                .next()
                .ok_or_else(|| Error::parse(header_line + row + 1, "unexpected end of ordinal matrix"))??;
            let before = raw.len();
            for tok in line.split_whitespace() {
                let c: u8 = tok
                    .parse()
                    .ok()
                    .filter(|c| *c <= EQUAL)
                    .ok_or_else(|| Error::parse(lineno, format!("bad ordinal code '{tok}'")))?;
                raw.push(c);
            }
            if raw.len() - before != n {
                return Err(Error::parse(
                    lineno,
                    format!("expected {n} codes, found {}", raw.len() - before),
                ));
            }
        }
        Ok(Self::from_raw_unchecked(n, &raw, epsilon))
    }
}

/// Line iterator yielding 1-based line numbers.
pub(crate) fn numbered_lines<R: BufRead>(r: R) -> impl Iterator<Item = Result<(usize, String)>> {
    r.lines()
        .enumerate()
        .map(|(i, l)| l.map(|l| (i + 1, l)).map_err(Error::from))
}
