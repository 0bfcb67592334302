use std::fmt;
use std::str::FromStr;

/// Unit-cost edit operation. `Ins` consumes a read character only, `Del` a
/// graph character only.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum CigarOp {
    Match,
    Mismatch,
    Ins,
    Del,
}

impl CigarOp {
    pub fn symbol(self) -> char {
        match self {
            CigarOp::Match => 'M',
            CigarOp::Mismatch => 'X',
            CigarOp::Ins => 'I',
            CigarOp::Del => 'D',
        }
    }

    pub fn consumes_read(self) -> bool {
        !matches!(self, CigarOp::Del)
    }

    pub fn consumes_graph(self) -> bool {
        !matches!(self, CigarOp::Ins)
    }

    pub fn is_edit(self) -> bool {
        !matches!(self, CigarOp::Match)
    }
}

/// Run-length encoded edit transcript.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct Cigar {
    runs: Vec<(CigarOp, u32)>,
}

impl Cigar {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, op: CigarOp) {
        self.push_n(op, 1);
    }

    pub fn push_n(&mut self, op: CigarOp, n: u32) {
        if n == 0 {
            return;
        }
        match self.runs.last_mut() {
            Some((last, count)) if *last == op => *count += n,
            _ => self.runs.push((op, n)),
        }
    }

    pub fn extend_from(&mut self, other: &Cigar) {
        for &(op, n) in &other.runs {
            self.push_n(op, n);
        }
    }

    pub fn runs(&self) -> &[(CigarOp, u32)] {
        &self.runs
    }

    pub fn is_empty(&self) -> bool {
        self.runs.is_empty()
    }

    /// Expanded op sequence.
    pub fn ops(&self) -> impl Iterator<Item = CigarOp> + '_ {
        self.runs
            .iter()
            .flat_map(|&(op, n)| std::iter::repeat_n(op, n as usize))
    }

    pub fn count(&self, op: CigarOp) -> usize {
        self.runs
            .iter()
            .filter(|(o, _)| *o == op)
            .map(|&(_, n)| n as usize)
            .sum()
    }

    pub fn edit_count(&self) -> usize {
        self.runs
            .iter()
            .filter(|(o, _)| o.is_edit())
            .map(|&(_, n)| n as usize)
            .sum()
    }

    pub fn read_len(&self) -> usize {
        self.runs
            .iter()
            .filter(|(o, _)| o.consumes_read())
            .map(|&(_, n)| n as usize)
            .sum()
    }

    pub fn graph_len(&self) -> usize {
        self.runs
            .iter()
            .filter(|(o, _)| o.consumes_graph())
            .map(|&(_, n)| n as usize)
            .sum()
    }
}

impl FromIterator<CigarOp> for Cigar {
    fn from_iter<I: IntoIterator<Item = CigarOp>>(iter: I) -> Self {
        let mut c = Cigar::new();
        iter.into_iter().for_each(|op| c.push(op));
        c
    }
}

impl fmt::Display for Cigar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.runs.is_empty() {
            return write!(f, "*");
        }
        for &(op, n) in &self.runs {
            write!(f, "{n}{}", op.symbol())?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseCigarError(pub String);

impl fmt::Display for ParseCigarError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "bad CIGAR: {}", self.0)
    }
}

impl std::error::Error for ParseCigarError {}

impl FromStr for Cigar {
    type Err = ParseCigarError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut cigar = Cigar::new();
        if s == "*" {
            return Ok(cigar);
        }
        let mut num = String::new();
        for ch in s.chars() {
            if ch.is_ascii_digit() {
                num.push(ch);
                continue;
            }
            let op = match ch {
                'M' | '=' => CigarOp::Match,
                'X' => CigarOp::Mismatch,
                'I' => CigarOp::Ins,
                'D' => CigarOp::Del,
                other => return Err(ParseCigarError(format!("unknown op {other:?}"))),
            };
            let n: u32 = num
                .parse()
                .map_err(|_| ParseCigarError(format!("missing count before {ch}")))?;
            cigar.push_n(op, n);
            num.clear();
        }
        if !num.is_empty() {
            return Err(ParseCigarError("trailing count".into()));
        }
        Ok(cigar)
    }
}
