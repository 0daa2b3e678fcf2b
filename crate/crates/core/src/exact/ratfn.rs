use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::str::FromStr;

use num_traits::Zero;

use super::{Poly, Q};
use crate::error::{Error, Result};

/// Reduced rational function `num / den` with a monic denominator.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct RationalFn {
    num: Poly,
    den: Poly,
}

impl RationalFn {
    pub fn new(num: Poly, den: Poly) -> Result<Self> {
        if den.is_zero() {
            return Err(Error::DivisionByZero);
        }
        if num.is_zero() {
            return Ok(Self::zero());
        }
        let g = Poly::gcd(&num, &den);
        let num = num.divmod(&g)?.0;
        let den = den.divmod(&g)?.0;
        let lead = den.leading().expect("nonzero denominator").clone();
        Ok(Self {
            num: num.scale(&lead.recip()),
            den: den.monic(),
        })
    }

    pub fn zero() -> Self {
        Self {
            num: Poly::zero(),
            den: Poly::one(),
        }
    }

    pub fn from_poly(p: Poly) -> Self {
        Self {
            num: p,
            den: Poly::one(),
        }
    }

    pub fn num(&self) -> &Poly {
        &self.num
    }

    pub fn den(&self) -> &Poly {
        &self.den
    }

    pub fn is_zero(&self) -> bool {
        self.num.is_zero()
    }

    /// `deg num < deg den`; the zero function counts as strictly proper.
    pub fn is_strictly_proper(&self) -> bool {
        match (self.num.degree(), self.den.degree()) {
            (None, _) => true,
            (Some(n), Some(d)) => n < d,
            (Some(_), None) => false,
        }
    }

    /// Exact value at `z`, `None` at a pole.
    pub fn eval(&self, z: &Q) -> Option<Q> {
        let d = self.den.eval(z);
        (!d.is_zero()).then(|| self.num.eval(z) / d)
    }

    /// Parses `num / den` with comma-separated ascending coefficients.
    pub fn parse(s: &str) -> Result<Self> {
        let toks: Vec<&str> = s.split_whitespace().collect();
        let slashes: Vec<usize> = (0..toks.len()).filter(|&i| toks[i] == "/").collect();
        let (n, d) = match slashes.as_slice() {
            [] => (toks.concat(), "1".to_string()),
            [k] => (toks[..*k].concat(), toks[k + 1..].concat()),
            _ => {
                return Err(Error::Parse(format!(
                    "transfer-function entry '{}' must look like 'num / den'",
                    s.trim()
                )))
            }
        };
        if n.is_empty() || d.is_empty() {
            return Err(Error::Parse(format!("incomplete entry '{}'", s.trim())));
        }
        let num = Poly::parse_ascending(n.trim())?;
        let den = Poly::parse_ascending(d.trim())?;
        if den.is_zero() {
            return Err(Error::Parse(format!("zero denominator in '{}'", s.trim())));
        }
        Self::new(num, den)
    }

    pub fn to_entry_string(&self) -> String {
        format!(
            "{} / {}",
            self.num.to_ascending_string(),
            self.den.to_ascending_string()
        )
    }
}

impl fmt::Display for RationalFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.den.degree() == Some(0) {
            write!(f, "{}", self.num)
        } else {
            write!(f, "({}) / ({})", self.num, self.den)
        }
    }
}

impl Add<&RationalFn> for &RationalFn {
    type Output = RationalFn;
    fn add(self, rhs: &RationalFn) -> RationalFn {
        let num = &(&self.num * &rhs.den) + &(&rhs.num * &self.den);
        RationalFn::new(num, &self.den * &rhs.den).expect("nonzero denominators")
    }
}

impl Sub<&RationalFn> for &RationalFn {
    type Output = RationalFn;
    fn sub(self, rhs: &RationalFn) -> RationalFn {
        self + &(-rhs)
    }
}

impl Mul<&RationalFn> for &RationalFn {
    type Output = RationalFn;
    fn mul(self, rhs: &RationalFn) -> RationalFn {
        RationalFn::new(&self.num * &rhs.num, &self.den * &rhs.den).expect("nonzero denominators")
    }
}

impl Neg for &RationalFn {
    type Output = RationalFn;
    fn neg(self) -> RationalFn {
        RationalFn {
            num: -&self.num,
            den: self.den.clone(),
        }
    }
}

/// Dense `rows x cols` matrix of rational functions, row-major.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct RationalMatrix {
    rows: usize,
    cols: usize,
    entries: Vec<RationalFn>,
}

impl RationalMatrix {
    pub fn new(rows: usize, cols: usize, entries: Vec<RationalFn>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::EmptyMatrix);
        }
        if entries.len() != rows * cols {
            return Err(Error::Dimension(format!(
                "{} entries for a {rows}x{cols} matrix",
                entries.len()
            )));
        }
        Ok(Self { rows, cols, entries })
    }

    pub fn from_rows(rows: Vec<Vec<RationalFn>>) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|row| row.len() != c) {
            return Err(Error::Dimension("ragged rows in rational matrix".into()));
        }
        Self::new(r, c, rows.into_iter().flatten().collect())
    }

    pub fn scalar(f: RationalFn) -> Self {
        Self {
            rows: 1,
            cols: 1,
            entries: vec![f],
        }
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn get(&self, i: usize, j: usize) -> &RationalFn {
        &self.entries[i * self.cols + j]
    }

    pub fn entries(&self) -> &[RationalFn] {
        &self.entries
    }

    pub fn is_strictly_proper(&self) -> bool {
        self.entries.iter().all(RationalFn::is_strictly_proper)
    }

    /// First entry that is not strictly proper, as `(row, col)`.
    pub fn first_improper(&self) -> Option<(usize, usize)> {
        self.entries
            .iter()
            .position(|e| !e.is_strictly_proper())
            .map(|k| (k / self.cols, k % self.cols))
    }

    /// Exact value at `z`, `None` if `z` is a pole of any entry.
    pub fn eval(&self, z: &Q) -> Option<Vec<Q>> {
        self.entries.iter().map(|e| e.eval(z)).collect()
    }

    pub fn is_zero(&self) -> bool {
        self.entries.iter().all(|e| e.num().is_zero())
    }

    /// Text form: one row per line, entries separated by `;`.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for i in 0..self.rows {
            let row: Vec<String> = (0..self.cols).map(|j| self.get(i, j).to_entry_string()).collect();
            out.push_str(&row.join(" ; "));
            out.push('\n');
        }
        out
    }
}

impl FromStr for RationalMatrix {
    type Err = Error;

    /// One row per line (`#` starts a comment), entries separated by `;`,
    /// each entry `num / den` with ascending comma-separated coefficients.
    fn from_str(s: &str) -> Result<Self> {
        let mut rows = Vec::new();
        for (lineno, line) in s.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let row = line
                .split(';')
                .map(RationalFn::parse)
                .collect::<Result<Vec<_>>>()
                .map_err(|e| Error::Parse(format!("line {}: {e}", lineno + 1)))?;
            rows.push(row);
        }
        if rows.is_empty() {
            return Err(Error::EmptyMatrix);
        }
        Self::from_rows(rows)
    }
}

impl fmt::Display for RationalMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.rows {
            let row: Vec<String> = (0..self.cols).map(|j| self.get(i, j).to_string()).collect();
            writeln!(f, "[{}]", row.join(", "))?;
        }
        Ok(())
    }
}
