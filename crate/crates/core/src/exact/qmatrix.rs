use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use nalgebra::DMatrix;
use num_traits::{One, Zero};

use super::{parse_q, q_from_f64, q_to_f64, qi, Poly, Q};
use crate::error::{Error, Result};

/// Dense matrix of exact rationals, row-major.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct QMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Q>,
}

impl QMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![Q::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = Q::one();
        }
        m
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<Q>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::Dimension(format!(
                "{} entries for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_rows(rows: Vec<Vec<Q>>) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|row| row.len() != c) {
            return Err(Error::Dimension("ragged rows".into()));
        }
        Self::from_vec(r, c, rows.into_iter().flatten().collect())
    }

    /// Rows of entries such as `"-8/45"`, `"2"`, `"0.5"`.
    pub fn parse_rows<S: AsRef<str>>(rows: &[Vec<S>]) -> Result<Self> {
        Self::from_rows(
            rows.iter()
                .map(|r| r.iter().map(|s| parse_q(s.as_ref())).collect::<Result<Vec<_>>>())
                .collect::<Result<Vec<_>>>()?,
        )
    }

    pub fn from_i64(rows: usize, cols: usize, data: &[i64]) -> Result<Self> {
        Self::from_vec(rows, cols, data.iter().map(|&x| qi(x)).collect())
    }

    /// Exact image of a floating-point matrix.
    pub fn from_f64(m: &DMatrix<f64>) -> Result<Self> {
        let mut out = Self::zeros(m.nrows(), m.ncols());
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                out.set(i, j, q_from_f64(m[(i, j)])?);
            }
        }
        Ok(out)
    }

    pub fn to_f64(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.rows, self.cols, |i, j| q_to_f64(self.get(i, j)))
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn nrows(&self) -> usize {
        self.rows
    }

    pub fn ncols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> &Q {
        &self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: Q) {
        self.data[i * self.cols + j] = v;
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(Zero::is_zero)
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t.set(j, i, self.get(i, j).clone());
            }
        }
        t
    }

    pub fn scale(&self, c: &Q) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|x| x * c).collect(),
        }
    }

    pub fn trace(&self) -> Q {
        (0..self.rows.min(self.cols)).map(|i| self.get(i, i).clone()).sum()
    }

    pub fn block(&self, r0: usize, c0: usize, rows: usize, cols: usize) -> Self {
        let mut out = Self::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                out.set(i, j, self.get(r0 + i, c0 + j).clone());
            }
        }
        out
    }

    pub fn set_block(&mut self, r0: usize, c0: usize, b: &QMatrix) {
        for i in 0..b.rows {
            for j in 0..b.cols {
                self.set(r0 + i, c0 + j, b.get(i, j).clone());
            }
        }
    }

    pub fn hstack(blocks: &[QMatrix]) -> Result<Self> {
        let rows = blocks.first().map_or(0, |b| b.rows);
        if blocks.iter().any(|b| b.rows != rows) {
            return Err(Error::Dimension("hstack row mismatch".into()));
        }
        let cols = blocks.iter().map(|b| b.cols).sum();
        let mut out = Self::zeros(rows, cols);
        let mut c0 = 0;
        for b in blocks {
            out.set_block(0, c0, b);
            c0 += b.cols;
        }
        Ok(out)
    }

    pub fn vstack(blocks: &[QMatrix]) -> Result<Self> {
        let cols = blocks.first().map_or(0, |b| b.cols);
        if blocks.iter().any(|b| b.cols != cols) {
            return Err(Error::Dimension("vstack column mismatch".into()));
        }
        let rows = blocks.iter().map(|b| b.rows).sum();
        let mut out = Self::zeros(rows, cols);
        let mut r0 = 0;
        for b in blocks {
            out.set_block(r0, 0, b);
            r0 += b.rows;
        }
        Ok(out)
    }

    /// Rank by exact Gaussian elimination.
    pub fn rank(&self) -> usize {
        let mut m = self.clone();
        let mut rank = 0;
        for col in 0..m.cols {
            let Some(piv) = (rank..m.rows).find(|&r| !m.get(r, col).is_zero()) else {
                continue;
            };
            if piv != rank {
                for j in 0..m.cols {
                    m.data.swap(piv * m.cols + j, rank * m.cols + j);
                }
            }
            let p = m.get(rank, col).clone();
            for r in rank + 1..m.rows {
                let f = m.get(r, col) / &p;
                if f.is_zero() {
                    continue;
                }
                for j in col..m.cols {
                    let v = m.get(r, j) - &f * m.get(rank, j);
                    m.set(r, j, v);
                }
            }
            rank += 1;
            if rank == m.rows {
                break;
            }
        }
        rank
    }

    /// Characteristic polynomial `det(zI - A)` and the matrices `M_1..M_n`
    /// with `adj(zI - A) = Σ_k M_k z^(n-k)`, by the Faddeev–LeVerrier recursion.
    pub fn resolvent(&self) -> Result<(Poly, Vec<QMatrix>)> {
        if self.rows != self.cols {
            return Err(Error::Dimension("resolvent of a non-square matrix".into()));
        }
        let n = self.rows;
        let mut c = vec![Q::zero(); n + 1];
        c[n] = Q::one();
        let id = QMatrix::identity(n);
        let mut prev = QMatrix::zeros(n, n);
        let mut ms = Vec::with_capacity(n);
        for k in 1..=n {
            let mk = &(self * &prev) + &id.scale(&c[n - k + 1]);
            c[n - k] = -(self * &mk).trace() / qi(k as i64);
            ms.push(mk.clone());
            prev = mk;
        }
        Ok((Poly::new(c), ms))
    }

    pub fn charpoly(&self) -> Result<Poly> {
        Ok(self.resolvent()?.0)
    }

    pub fn pow(&self, k: usize) -> Self {
        let mut out = QMatrix::identity(self.rows);
        for _ in 0..k {
            out = &out * self;
        }
        out
    }

    /// Entries as strings (`p/q` or integers), row by row.
    pub fn to_string_rows(&self) -> Vec<Vec<String>> {
        (0..self.rows)
            .map(|i| (0..self.cols).map(|j| self.get(i, j).to_string()).collect())
            .collect()
    }
}

impl fmt::Display for QMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for row in self.to_string_rows() {
            writeln!(f, "[{}]", row.join(", "))?;
        }
        Ok(())
    }
}

impl Mul<&QMatrix> for &QMatrix {
    type Output = QMatrix;
    fn mul(self, rhs: &QMatrix) -> QMatrix {
        assert_eq!(self.cols, rhs.rows, "QMatrix product shape mismatch");
        let mut out = QMatrix::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a.is_zero() {
                    continue;
                }
                for j in 0..rhs.cols {
                    let v = out.get(i, j) + a * rhs.get(k, j);
                    out.set(i, j, v);
                }
            }
        }
        out
    }
}

impl Add<&QMatrix> for &QMatrix {
    type Output = QMatrix;
    fn add(self, rhs: &QMatrix) -> QMatrix {
        assert_eq!(self.shape(), rhs.shape(), "QMatrix sum shape mismatch");
        QMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect(),
        }
    }
}

impl Sub<&QMatrix> for &QMatrix {
    type Output = QMatrix;
    fn sub(self, rhs: &QMatrix) -> QMatrix {
        assert_eq!(self.shape(), rhs.shape(), "QMatrix difference shape mismatch");
        QMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect(),
        }
    }
}

impl Neg for &QMatrix {
    type Output = QMatrix;
    fn neg(self) -> QMatrix {
        self.scale(&-Q::one())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::q;

    fn demo_a() -> QMatrix {
        QMatrix::parse_rows(&[vec!["-8/45", "1/30"], vec!["-1/45", "-1/10"]]).unwrap()
    }

    #[test]
    fn charpoly_of_demo_matrix() {
        let (p, ms) = demo_a().resolvent().unwrap();
        assert_eq!(p, Poly::new(vec![q(1, 54), q(5, 18), qi(1)]));
        assert_eq!(ms[0], QMatrix::identity(2));
        // adj(zI - A) = I z + (A - tr(A) I)
        let expect = &demo_a() - &QMatrix::identity(2).scale(&demo_a().trace());
        assert_eq!(ms[1], expect);
    }

    #[test]
    fn exact_rank() {
        assert_eq!(QMatrix::from_i64(2, 2, &[1, 2, 2, 4]).unwrap().rank(), 1);
        assert_eq!(QMatrix::zeros(3, 2).rank(), 0);
        assert_eq!(QMatrix::identity(3).rank(), 3);
        assert_eq!(QMatrix::from_i64(2, 3, &[0, 1, 0, 0, 0, 1]).unwrap().rank(), 2);
    }

    #[test]
    fn float_conversion_is_exact() {
        let m = DMatrix::from_row_slice(1, 2, &[0.1, -2.5]);
        let qm = QMatrix::from_f64(&m).unwrap();
        assert_eq!(qm.to_f64(), m);
        assert_eq!(qm.get(0, 1), &q(-5, 2));
    }

    #[test]
    fn stacking() {
        let a = QMatrix::identity(2);
        let h = QMatrix::hstack(&[a.clone(), a.scale(&qi(2))]).unwrap();
        assert_eq!(h.shape(), (2, 4));
        assert_eq!(h.get(1, 3), &qi(2));
        let v = QMatrix::vstack(&[a.clone(), a]).unwrap();
        assert_eq!(v.shape(), (4, 2));
        assert_eq!(v.transpose(), QMatrix::hstack(&[QMatrix::identity(2), QMatrix::identity(2)]).unwrap());
    }
}
