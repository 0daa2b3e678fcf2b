use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use nalgebra::DMatrix;
use num_traits::{One, Signed, Zero};

use super::{convergents, parse_q, q_to_f64, Q};
use crate::error::{Error, Result};
use crate::linalg::{self, C64};

/// Polynomial in `z` with exact rational coefficients, lowest degree first.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct Poly {
    coeffs: Vec<Q>,
}

impl Poly {
    pub fn new(mut coeffs: Vec<Q>) -> Self {
        while coeffs.last().is_some_and(Zero::is_zero) {
            coeffs.pop();
        }
        Self { coeffs }
    }

    pub fn from_i64(c: &[i64]) -> Self {
        Self::new(c.iter().map(|&x| super::qi(x)).collect())
    }

    pub fn zero() -> Self {
        Self { coeffs: Vec::new() }
    }

    pub fn one() -> Self {
        Self::constant(Q::one())
    }

    pub fn constant(c: Q) -> Self {
        Self::new(vec![c])
    }

    /// The monomial `z`.
    pub fn z() -> Self {
        Self::new(vec![Q::zero(), Q::one()])
    }

    /// `z - r`
    pub fn linear_root(r: &Q) -> Self {
        Self::new(vec![-r.clone(), Q::one()])
    }

    pub fn coeffs(&self) -> &[Q] {
        &self.coeffs
    }

    /// Coefficient of `z^k` (zero beyond the degree).
    pub fn coeff(&self, k: usize) -> Q {
        self.coeffs.get(k).cloned().unwrap_or_else(Q::zero)
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Degree; `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn leading(&self) -> Option<&Q> {
        self.coeffs.last()
    }

    pub fn scale(&self, c: &Q) -> Self {
        Self::new(self.coeffs.iter().map(|x| x * c).collect())
    }

    pub fn monic(&self) -> Self {
        match self.leading() {
            Some(l) => self.scale(&l.recip()),
            None => Self::zero(),
        }
    }

    pub fn divmod(&self, d: &Poly) -> Result<(Poly, Poly)> {
        let dd = d.degree().ok_or(Error::DivisionByZero)?;
        let lead = d.coeffs[dd].clone();
        let mut rem = self.coeffs.clone();
        let Some(nd) = self.degree() else {
            return Ok((Poly::zero(), Poly::zero()));
        };
        if nd < dd {
            return Ok((Poly::zero(), self.clone()));
        }
        let mut quot = vec![Q::zero(); nd - dd + 1];
        for k in (0..=nd - dd).rev() {
            let c = &rem[k + dd] / &lead;
            if !c.is_zero() {
                for (i, di) in d.coeffs.iter().enumerate() {
                    rem[k + i] -= &c * di;
                }
            }
            quot[k] = c;
        }
        rem.truncate(dd);
        Ok((Poly::new(quot), Poly::new(rem)))
    }

    /// Monic greatest common divisor; zero only when both inputs are zero.
    pub fn gcd(a: &Poly, b: &Poly) -> Poly {
        let (mut x, mut y) = (a.clone(), b.clone());
        while !y.is_zero() {
            let r = x.divmod(&y).expect("nonzero divisor").1;
            x = y;
            y = r;
        }
        x.monic()
    }

    /// Monic least common multiple.
    pub fn lcm(a: &Poly, b: &Poly) -> Poly {
        if a.is_zero() || b.is_zero() {
            return Poly::zero();
        }
        let g = Poly::gcd(a, b);
        let (q, _) = (a * b).divmod(&g).expect("gcd is nonzero");
        q.monic()
    }

    pub fn eval(&self, z: &Q) -> Q {
        let mut acc = Q::zero();
        for c in self.coeffs.iter().rev() {
            acc = acc * z + c;
        }
        acc
    }

    pub fn eval_c64(&self, z: C64) -> C64 {
        let mut acc = C64::new(0.0, 0.0);
        for c in self.coeffs.iter().rev() {
            acc = acc * z + q_to_f64(c);
        }
        acc
    }

    pub fn derivative(&self) -> Poly {
        Poly::new(
            self.coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(k, c)| c * super::qi(k as i64))
                .collect(),
        )
    }

    pub fn pow(&self, k: usize) -> Poly {
        let mut out = Poly::one();
        for _ in 0..k {
            out = &out * self;
        }
        out
    }

    pub fn to_f64(&self) -> Vec<f64> {
        self.coeffs.iter().map(q_to_f64).collect()
    }

    /// Complex roots (with multiplicity) from the eigenvalues of the companion matrix.
    pub fn roots(&self) -> Result<Vec<C64>> {
        let Some(deg) = self.degree() else {
            return Err(Error::DivisionByZero);
        };
        let m = self.monic().to_f64();
        let lead_zeros = m.iter().take_while(|c| **c == 0.0).count();
        let mut out = vec![C64::new(0.0, 0.0); lead_zeros];
        let k = deg - lead_zeros;
        if k > 0 {
            let mut comp = DMatrix::<f64>::zeros(k, k);
            for i in 1..k {
                comp[(i, i - 1)] = 1.0;
            }
            for i in 0..k {
                comp[(i, k - 1)] = -m[lead_zeros + i];
            }
            out.extend(linalg::eigenvalues(&comp)?);
        }
        out.sort_by(|x, y| x.re.total_cmp(&y.re).then(x.im.total_cmp(&y.im)));
        Ok(out)
    }

    /// Square-free part `p / gcd(p, p')`, monic.
    pub fn squarefree(&self) -> Poly {
        let g = Poly::gcd(self, &self.derivative());
        self.divmod(&g).expect("gcd is nonzero").0.monic()
    }

    /// Square-free factorization (Yun): monic `s_i` with `self ∝ Π s_i^i`.
    /// Factors equal to 1 are omitted.
    pub fn squarefree_factorization(&self) -> Vec<(Poly, usize)> {
        let mut out = Vec::new();
        if self.degree().unwrap_or(0) == 0 {
            return out;
        }
        let d = self.derivative();
        let b = Poly::gcd(self, &d);
        let mut c = self.divmod(&b).expect("gcd is nonzero").0;
        let mut w = &d.divmod(&b).expect("gcd is nonzero").0 - &c.derivative();
        let mut i = 1;
        while c.degree().unwrap_or(0) > 0 {
            let a = Poly::gcd(&c, &w);
            c = c.divmod(&a).expect("gcd is nonzero").0;
            w = &w.divmod(&a).expect("gcd is nonzero").0 - &c.derivative();
            if a.degree().unwrap_or(0) > 0 {
                out.push((a.monic(), i));
            }
            i += 1;
        }
        out
    }

    /// All rational roots with their multiplicities, ascending.
    ///
    /// Candidates come from the floating-point roots of the square-free part;
    /// each is accepted only after exact verification.
    pub fn rational_roots(&self) -> Vec<(Q, usize)> {
        if self.degree().unwrap_or(0) == 0 {
            return Vec::new();
        }
        let sf = self.squarefree();
        let mut found: Vec<Q> = Vec::new();
        if let Ok(roots) = sf.roots() {
            for r in roots {
                if r.im.abs() > 1e-6 * (1.0 + r.re.abs()) {
                    continue;
                }
                for cand in convergents(r.re, 1_000_000_000_000) {
                    if !found.contains(&cand) && sf.eval(&cand).is_zero() {
                        found.push(cand);
                        break;
                    }
                }
            }
        }
        found.sort();
        found
            .into_iter()
            .map(|r| {
                let lin = Poly::linear_root(&r);
                let mut mult = 0;
                let mut p = self.clone();
                loop {
                    let (qt, rem) = p.divmod(&lin).expect("nonzero divisor");
                    if !rem.is_zero() {
                        break;
                    }
                    mult += 1;
                    p = qt;
                }
                (r, mult)
            })
            .collect()
    }

    /// Parses comma-separated ascending coefficients, e.g. `5,75,270`.
    pub fn parse_ascending(s: &str) -> Result<Poly> {
        let coeffs = s
            .split(',')
            .map(parse_q)
            .collect::<Result<Vec<_>>>()?;
        Ok(Poly::new(coeffs))
    }

    /// Comma-separated ascending coefficients; `0` for the zero polynomial.
    pub fn to_ascending_string(&self) -> String {
        if self.is_zero() {
            return "0".into();
        }
        self.coeffs
            .iter()
            .map(|c| c.to_string())
            .collect::<Vec<_>>()
            .join(",")
    }
}

impl fmt::Display for Poly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let mut first = true;
        for (k, c) in self.coeffs.iter().enumerate().rev() {
            if c.is_zero() {
                continue;
            }
            let neg = c.is_negative();
            let abs = c.abs();
            if first {
                if neg {
                    write!(f, "-")?;
                }
            } else {
                write!(f, " {} ", if neg { '-' } else { '+' })?;
            }
            first = false;
            let unit = abs.is_one();
            match k {
                0 => write!(f, "{abs}")?,
                _ => {
                    if !unit {
                        write!(f, "{abs}*")?;
                    }
                    if k == 1 {
                        write!(f, "z")?;
                    } else {
                        write!(f, "z^{k}")?;
                    }
                }
            }
        }
        Ok(())
    }
}

impl Add<&Poly> for &Poly {
    type Output = Poly;
    fn add(self, rhs: &Poly) -> Poly {
        let n = self.coeffs.len().max(rhs.coeffs.len());
        Poly::new((0..n).map(|k| self.coeff(k) + rhs.coeff(k)).collect())
    }
}

impl Sub<&Poly> for &Poly {
    type Output = Poly;
    fn sub(self, rhs: &Poly) -> Poly {
        let n = self.coeffs.len().max(rhs.coeffs.len());
        Poly::new((0..n).map(|k| self.coeff(k) - rhs.coeff(k)).collect())
    }
}

impl Mul<&Poly> for &Poly {
    type Output = Poly;
    fn mul(self, rhs: &Poly) -> Poly {
        if self.is_zero() || rhs.is_zero() {
            return Poly::zero();
        }
        let mut out = vec![Q::zero(); self.coeffs.len() + rhs.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, b) in rhs.coeffs.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Poly::new(out)
    }
}

impl Neg for &Poly {
    type Output = Poly;
    fn neg(self) -> Poly {
        Poly::new(self.coeffs.iter().map(|c| -c).collect())
    }
}

macro_rules! owned_ops {
    ($($tr:ident $m:ident),*) => {$(
        impl $tr<Poly> for Poly {
            type Output = Poly;
            fn $m(self, rhs: Poly) -> Poly {
                (&self).$m(&rhs)
            }
        }
    )*};
}
owned_ops!(Add add, Sub sub, Mul mul);
