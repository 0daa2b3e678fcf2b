//! Finite computational windows of a time scale and the delta calculus on them.
//!
//! A grid is an ordered list of segments. Continuous intervals are sampled
//! with a uniform node spacing `h`, but their nodes are right-dense: they
//! report `mu = 0` and `sigma(t) = t`. Discrete point runs and the final node
//! of an interval that is followed by a gap are right-scattered.

use std::fmt;
use std::ops::{AddAssign, Mul};
use std::str::FromStr;

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Relative tolerance for locating a time value on the grid.
pub const LOOKUP_RTOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub enum Segment {
    /// Continuous interval `[start, end]` discretized with node spacing at most `step`.
    Interval { start: f64, end: f64, step: f64 },
    /// Strictly increasing isolated points.
    Points(Vec<f64>),
}

impl Segment {
    fn first(&self) -> f64 {
        match self {
            Segment::Interval { start, .. } => *start,
            Segment::Points(p) => p[0],
        }
    }

    fn last(&self) -> f64 {
        match self {
            Segment::Interval { end, .. } => *end,
            Segment::Points(p) => p[p.len() - 1],
        }
    }
}

/// Description of a time scale, as entered by a user.
///
/// Text form: one entry per line (or separated by `;`), each either
/// `interval a b h` or `points t1 t2 ... tk`, in ascending order.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TimeScaleSpec {
    pub segments: Vec<Segment>,
}

impl TimeScaleSpec {
    pub fn new(segments: Vec<Segment>) -> Self {
        Self { segments }
    }

    /// The integer lattice `Z ∩ [a, b]`.
    pub fn integers(a: i64, b: i64) -> Self {
        Self::new(vec![Segment::Points((a..=b).map(|k| k as f64).collect())])
    }

    /// A single continuous interval.
    pub fn interval(start: f64, end: f64, step: f64) -> Self {
        Self::new(vec![Segment::Interval { start, end, step }])
    }

    /// Points with constant graininess `mu`: `t0, t0 + mu, ..., t0 + count*mu`.
    pub fn uniform(t0: f64, mu: f64, count: usize) -> Self {
        Self::new(vec![Segment::Points(
            (0..=count).map(|k| t0 + k as f64 * mu).collect(),
        )])
    }

    pub fn push(mut self, segment: Segment) -> Self {
        self.segments.push(segment);
        self
    }
}

fn parse_real(tok: &str) -> Result<f64> {
    if let Some((n, d)) = tok.split_once('/') {
        let n: f64 = n
            .trim()
            .parse()
            .map_err(|_| Error::Parse(format!("bad number '{tok}'")))?;
        let d: f64 = d
            .trim()
            .parse()
            .map_err(|_| Error::Parse(format!("bad number '{tok}'")))?;
        if d == 0.0 {
            return Err(Error::Parse(format!("zero denominator in '{tok}'")));
        }
        Ok(n / d)
    } else {
        tok.parse()
            .map_err(|_| Error::Parse(format!("bad number '{tok}'")))
    }
}

impl FromStr for TimeScaleSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut segments = Vec::new();
        for (lineno, line) in s.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("");
            for entry in line.split(';') {
                let mut toks = entry.split_whitespace();
                let Some(kind) = toks.next() else { continue };
                let nums = toks.map(parse_real).collect::<Result<Vec<_>>>().map_err(|e| {
                    Error::Parse(format!("line {}: {}", lineno + 1, e))
                })?;
                match kind {
                    "interval" => {
                        if nums.len() != 3 {
                            return Err(Error::Parse(format!(
                                "line {}: 'interval' takes exactly 3 numbers (a b h), got {}",
                                lineno + 1,
                                nums.len()
                            )));
                        }
                        segments.push(Segment::Interval {
                            start: nums[0],
                            end: nums[1],
                            step: nums[2],
                        });
                    }
                    "points" => {
                        if nums.is_empty() {
                            return Err(Error::Parse(format!(
                                "line {}: 'points' needs at least one time",
                                lineno + 1
                            )));
                        }
                        segments.push(Segment::Points(nums));
                    }
                    other => {
                        return Err(Error::Parse(format!(
                            "line {}: unknown entry '{other}' (expected 'interval' or 'points')",
                            lineno + 1
                        )))
                    }
                }
            }
        }
        Ok(Self { segments })
    }
}

impl fmt::Display for TimeScaleSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, seg) in self.segments.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            match seg {
                Segment::Interval { start, end, step } => {
                    write!(f, "interval {start:?} {end:?} {step:?}")?
                }
                Segment::Points(p) => {
                    write!(f, "points")?;
                    for t in p {
                        write!(f, " {t:?}")?;
                    }
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PointKind {
    RightScattered { mu: f64 },
    RightDense,
    /// The last node of the finite window; its forward jump lies outside the grid.
    WindowEnd,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridPoint {
    pub t: f64,
    pub kind: PointKind,
}

/// One quadrature sample of a delta integral.
///
/// `dense` samples stand for the continuous part of the measure: the
/// integrand must be evaluated with `mu = 0` and `sigma(t) = t` there, even at
/// the closing node of an interval that is itself right-scattered.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadNode {
    pub index: usize,
    pub t: f64,
    pub mu: f64,
    pub sigma: f64,
    pub weight: f64,
    pub dense: bool,
}

/// One propagation step from node `index` to node `index + 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Step {
    pub index: usize,
    pub t: f64,
    pub next: f64,
    pub dense: bool,
}

impl Step {
    pub fn width(&self) -> f64 {
        self.next - self.t
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TimeScaleGrid {
    spec: TimeScaleSpec,
    times: Vec<f64>,
    /// `dense[i]`: node `i` and node `i + 1` belong to the same continuous interval.
    dense: Vec<bool>,
    segment_of: Vec<usize>,
    mu_max: f64,
}

impl TimeScaleGrid {
    pub fn build(spec: TimeScaleSpec) -> Result<Self> {
        if spec.segments.is_empty() {
            return Err(Error::EmptyTimeScale);
        }
        for (index, seg) in spec.segments.iter().enumerate() {
            let invalid = |reason: &str| Error::InvalidSegment {
                index,
                reason: reason.to_string(),
            };
            match seg {
                Segment::Interval { start, end, step } => {
                    if !(start.is_finite() && end.is_finite() && step.is_finite()) {
                        return Err(invalid("non-finite bound or step"));
                    }
                    if end <= start {
                        return Err(invalid("interval needs b > a"));
                    }
                    if *step <= 0.0 {
                        return Err(invalid("step must be positive"));
                    }
                    if *step > (end - start) * (1.0 + 1e-12) {
                        return Err(invalid("step exceeds the interval length"));
                    }
                }
                Segment::Points(p) => {
                    if p.is_empty() {
                        return Err(invalid("empty point run"));
                    }
                    if p.iter().any(|t| !t.is_finite()) {
                        return Err(invalid("non-finite point"));
                    }
                    if p.windows(2).any(|w| w[1] <= w[0]) {
                        return Err(invalid("points must be strictly increasing"));
                    }
                }
            }
        }
        for (i, w) in spec.segments.windows(2).enumerate() {
            if w[1].first() <= w[0].last() {
                return Err(Error::OverlappingSegments {
                    first: i,
                    second: i + 1,
                });
            }
        }

        let mut times = Vec::new();
        let mut dense = Vec::new();
        let mut segment_of = Vec::new();
        for (si, seg) in spec.segments.iter().enumerate() {
            match seg {
                Segment::Interval { start, end, step } => {
                    let ratio = (end - start) / step;
                    let count = if (ratio - ratio.round()).abs() <= 1e-9 * ratio.max(1.0) {
                        ratio.round() as usize
                    } else {
                        ratio.ceil() as usize
                    }
                    .max(1);
                    let h = (end - start) / count as f64;
                    for k in 0..=count {
                        let t = if k == count { *end } else { start + k as f64 * h };
                        times.push(t);
                        dense.push(k < count);
                        segment_of.push(si);
                    }
                }
                Segment::Points(p) => {
                    for &t in p {
                        times.push(t);
                        dense.push(false);
                        segment_of.push(si);
                    }
                }
            }
        }
        let mut mu_max = 0.0f64;
        for i in 0..times.len().saturating_sub(1) {
            if !dense[i] {
                mu_max = mu_max.max(times[i + 1] - times[i]);
            }
        }
        Ok(Self {
            spec,
            times,
            dense,
            segment_of,
            mu_max,
        })
    }

    pub fn spec(&self) -> &TimeScaleSpec {
        &self.spec
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn time(&self, i: usize) -> f64 {
        self.times[i]
    }

    pub fn t_min(&self) -> f64 {
        self.times[0]
    }

    pub fn t_max(&self) -> f64 {
        self.times[self.times.len() - 1]
    }

    pub fn mu_max(&self) -> f64 {
        self.mu_max
    }

    pub fn last_index(&self) -> usize {
        self.times.len() - 1
    }

    /// True when the grid has no continuous intervals.
    pub fn is_discrete(&self) -> bool {
        self.spec
            .segments
            .iter()
            .all(|s| matches!(s, Segment::Points(_)))
    }

    pub fn index_of(&self, t: f64) -> Result<usize> {
        let tol = LOOKUP_RTOL * t.abs().max(1.0);
        let pos = self.times.partition_point(|&x| x < t - tol);
        if pos < self.times.len() && (self.times[pos] - t).abs() <= tol {
            Ok(pos)
        } else {
            Err(Error::NotOnGrid(t))
        }
    }

    /// Whether node `i` is right-dense (its successor is an interior quadrature node).
    pub fn is_dense(&self, i: usize) -> bool {
        self.dense[i]
    }

    pub fn point(&self, i: usize) -> GridPoint {
        let t = self.times[i];
        let kind = if i == self.last_index() {
            PointKind::WindowEnd
        } else if self.dense[i] {
            PointKind::RightDense
        } else {
            PointKind::RightScattered {
                mu: self.times[i + 1] - t,
            }
        };
        GridPoint { t, kind }
    }

    /// Graininess at node `i`; right-dense nodes and the window end report 0.
    pub fn mu_at(&self, i: usize) -> f64 {
        if i + 1 >= self.times.len() || self.dense[i] {
            0.0
        } else {
            self.times[i + 1] - self.times[i]
        }
    }

    /// Forward jump at node `i`; right-dense nodes and the window end map to themselves.
    pub fn sigma_at(&self, i: usize) -> f64 {
        if i + 1 >= self.times.len() || self.dense[i] {
            self.times[i]
        } else {
            self.times[i + 1]
        }
    }

    pub fn sigma(&self, t: f64) -> Result<f64> {
        Ok(self.sigma_at(self.index_of(t)?))
    }

    pub fn mu(&self, t: f64) -> Result<f64> {
        Ok(self.mu_at(self.index_of(t)?))
    }

    /// Continuous interval containing node `i`, as `(start, end, node spacing)`.
    pub fn interval_of(&self, i: usize) -> Option<(f64, f64, f64)> {
        match &self.spec.segments[self.segment_of[i]] {
            Segment::Interval { start, end, .. } => {
                // recover the realized spacing from neighbouring nodes
                let h = if i + 1 < self.times.len() && self.dense[i] {
                    self.times[i + 1] - self.times[i]
                } else {
                    self.times[i] - self.times[i - 1]
                };
                Some((*start, *end, h))
            }
            Segment::Points(_) => None,
        }
    }

    /// Resolves `[a, b]` to node indices, checking `a <= b`.
    pub fn span(&self, a: f64, b: f64) -> Result<(usize, usize)> {
        if a > b {
            return Err(Error::InvalidInterval {
                a,
                b,
                reason: "a > b".into(),
            });
        }
        Ok((self.index_of(a)?, self.index_of(b)?))
    }

    pub fn steps(&self, from: usize, to: usize) -> impl Iterator<Item = Step> + '_ {
        (from..to).map(move |i| Step {
            index: i,
            t: self.times[i],
            next: self.times[i + 1],
            dense: self.dense[i],
        })
    }

    /// Quadrature samples for the delta integral over `[t_from, t_to)`.
    ///
    /// Right-scattered nodes carry weight `mu`; continuous runs use the
    /// trapezoid rule on their nodes.
    pub fn quadrature(&self, from: usize, to: usize) -> Vec<QuadNode> {
        let mut out = Vec::with_capacity(to.saturating_sub(from) + 1);
        let mut carry = 0.0;
        for i in from..=to {
            let t = self.times[i];
            let mut dense_w = carry;
            carry = 0.0;
            let stepping = i < to;
            if stepping && self.dense[i] {
                let h = self.times[i + 1] - t;
                dense_w += 0.5 * h;
                carry = 0.5 * h;
            }
            if dense_w > 0.0 {
                out.push(QuadNode {
                    index: i,
                    t,
                    mu: 0.0,
                    sigma: t,
                    weight: dense_w,
                    dense: true,
                });
            }
            if stepping && !self.dense[i] {
                let mu = self.times[i + 1] - t;
                out.push(QuadNode {
                    index: i,
                    t,
                    mu,
                    sigma: self.times[i + 1],
                    weight: mu,
                    dense: false,
                });
            }
        }
        out
    }

    /// Generic delta integral over `[a, b)` of an integrand evaluated per quadrature sample.
    pub fn integrate_nodes<T, F>(&self, a: f64, b: f64, zero: T, mut f: F) -> Result<T>
    where
        T: AddAssign + Mul<f64, Output = T>,
        F: FnMut(&QuadNode) -> T,
    {
        let (ia, ib) = self.span(a, b)?;
        let mut acc = zero;
        for node in self.quadrature(ia, ib) {
            acc += f(&node) * node.weight;
        }
        Ok(acc)
    }

    /// Delta integral of a matrix function of time over `[a, b)`.
    pub fn delta_integral<F>(&self, a: f64, b: f64, mut f: F) -> Result<DMatrix<f64>>
    where
        F: FnMut(f64) -> DMatrix<f64>,
    {
        let (ia, _) = self.span(a, b)?;
        let probe = f(self.times[ia]);
        let zero = DMatrix::zeros(probe.nrows(), probe.ncols());
        self.integrate_nodes(a, b, zero, |n| f(n.t))
    }

    pub fn delta_integral_scalar<F>(&self, a: f64, b: f64, mut f: F) -> Result<f64>
    where
        F: FnMut(f64) -> f64,
    {
        self.integrate_nodes(a, b, 0.0, |n| f(n.t))
    }

    /// Delta derivative at a grid point: forward difference quotient at
    /// right-scattered points, second-order finite differences on continuous runs.
    pub fn delta_derivative<F>(&self, mut f: F, t: f64) -> Result<DMatrix<f64>>
    where
        F: FnMut(f64) -> DMatrix<f64>,
    {
        let i = self.index_of(t)?;
        if i == self.last_index() {
            return Err(Error::FinalPoint(t));
        }
        let t = self.times[i];
        if !self.dense[i] {
            let mu = self.times[i + 1] - t;
            return Ok((f(self.times[i + 1]) - f(t)) / mu);
        }
        let h = self.times[i + 1] - t;
        let has_left = i > 0 && self.dense[i - 1];
        let has_right2 = i + 2 < self.times.len() && self.dense[i + 1];
        if has_left {
            Ok((f(self.times[i + 1]) - f(self.times[i - 1])) / (2.0 * h))
        } else if has_right2 {
            Ok((f(t) * -3.0 + f(self.times[i + 1]) * 4.0 - f(self.times[i + 2])) / (2.0 * h))
        } else {
            Ok((f(self.times[i + 1]) - f(t)) / h)
        }
    }
}

impl TryFrom<TimeScaleSpec> for TimeScaleGrid {
    type Error = Error;

    fn try_from(spec: TimeScaleSpec) -> Result<Self> {
        Self::build(spec)
    }
}

impl FromStr for TimeScaleGrid {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::build(s.parse()?)
    }
}
