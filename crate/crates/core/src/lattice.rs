//! Lattice points, weight fields and one-dimensional windows.

use std::ops::{Add, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// A site of Z^2. `x` is the e1 coordinate, `y` the e2 coordinate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Point {
    pub x: i64,
    pub y: i64,
}

impl Point {
    pub const fn new(x: i64, y: i64) -> Self {
        Point { x, y }
    }

    /// `self - e1`
    pub const fn west(self) -> Self {
        Point::new(self.x - 1, self.y)
    }

    /// `self - e2`
    pub const fn south(self) -> Self {
        Point::new(self.x, self.y - 1)
    }

    /// Coordinatewise order `self <= other`.
    pub fn le(self, other: Point) -> bool {
        self.x <= other.x && self.y <= other.y
    }

    pub fn l1(self) -> i64 {
        self.x.abs() + self.y.abs()
    }
}

impl Add for Point {
    type Output = Point;
    fn add(self, o: Point) -> Point {
        Point::new(self.x + o.x, self.y + o.y)
    }
}

impl Sub for Point {
    type Output = Point;
    fn sub(self, o: Point) -> Point {
        Point::new(self.x - o.x, self.y - o.y)
    }
}

/// Rectangular block of vertex weights. Row `r` holds level `origin.y + r`,
/// column `c` holds `origin.x + c`; storage is row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightField {
    pub origin: Point,
    pub rows: usize,
    pub cols: usize,
    pub values: Vec<f64>,
}

impl WeightField {
    pub fn new(origin: Point, rows: usize, cols: usize, values: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return invalid("weight field must be non-empty");
        }
        if values.len() != rows * cols {
            return invalid(format!(
                "weight field has {} values, expected {}x{}",
                values.len(),
                rows,
                cols
            ));
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite() || **v < 0.0) {
            return invalid(format!("weights must be finite and nonnegative, found {v}"));
        }
        Ok(WeightField {
            origin,
            rows,
            cols,
            values,
        })
    }

    /// Upper-right corner of the block.
    pub fn top_right(&self) -> Point {
        Point::new(
            self.origin.x + self.cols as i64 - 1,
            self.origin.y + self.rows as i64 - 1,
        )
    }

    pub fn contains(&self, p: Point) -> bool {
        self.origin.le(p) && p.le(self.top_right())
    }

    pub(crate) fn index(&self, p: Point) -> usize {
        let r = (p.y - self.origin.y) as usize;
        let c = (p.x - self.origin.x) as usize;
        r * self.cols + c
    }

    pub fn get(&self, p: Point) -> Option<f64> {
        self.contains(p).then(|| self.values[self.index(p)])
    }

    /// Weight at `p`; panics when `p` is outside the block.
    pub fn at(&self, p: Point) -> f64 {
        assert!(self.contains(p), "{p:?} outside weight field");
        self.values[self.index(p)]
    }

    /// Weights of level `y` over columns `x0..=x1`.
    pub fn level(&self, y: i64, x0: i64, x1: i64) -> Result<SeqWindow> {
        if !self.contains(Point::new(x0, y)) || !self.contains(Point::new(x1, y)) || x1 < x0 {
            return invalid(format!("level {y} range {x0}..={x1} outside weight field"));
        }
        let start = self.index(Point::new(x0, y));
        let len = (x1 - x0 + 1) as usize;
        Ok(SeqWindow::new(x0, self.values[start..start + len].to_vec()))
    }
}

/// Finite window `values[i]` = sequence value at index `offset + i`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeqWindow {
    pub offset: i64,
    pub values: Vec<f64>,
}

impl SeqWindow {
    pub fn new(offset: i64, values: Vec<f64>) -> Self {
        SeqWindow { offset, values }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Last index covered by the window.
    pub fn end(&self) -> i64 {
        self.offset + self.values.len() as i64 - 1
    }

    pub fn get(&self, k: i64) -> Option<f64> {
        if k < self.offset {
            return None;
        }
        self.values.get((k - self.offset) as usize).copied()
    }

    /// Same index set as `other`?
    pub fn aligned(&self, other: &SeqWindow) -> bool {
        self.offset == other.offset && self.len() == other.len()
    }

    /// Drops the first `n` values.
    pub fn drop_prefix(&self, n: usize) -> SeqWindow {
        let n = n.min(self.len());
        SeqWindow::new(self.offset + n as i64, self.values[n..].to_vec())
    }

    /// Restriction to indices `a..=b`.
    pub fn restrict(&self, a: i64, b: i64) -> Result<SeqWindow> {
        if a < self.offset || b > self.end() || b < a {
            return invalid(format!(
                "range {a}..={b} not inside window {}..={}",
                self.offset,
                self.end()
            ));
        }
        let i = (a - self.offset) as usize;
        let j = (b - self.offset) as usize;
        Ok(SeqWindow::new(a, self.values[i..=j].to_vec()))
    }

    pub fn validate(&self, what: &str) -> Result<()> {
        if let Some(v) = self.values.iter().find(|v| !v.is_finite() || **v < 0.0) {
            return invalid(format!("{what}: values must be finite and nonnegative, found {v}"));
        }
        Ok(())
    }
}

/// An ordered tuple of aligned windows, one per class/line, with the
/// nominal exponential means when known.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultiConfig {
    pub lines: Vec<SeqWindow>,
    pub rates: Option<Vec<f64>>,
}

impl MultiConfig {
    pub fn new(lines: Vec<SeqWindow>, rates: Option<Vec<f64>>) -> Result<Self> {
        if lines.is_empty() {
            return invalid("configuration needs at least one line");
        }
        if lines.iter().any(|l| !l.aligned(&lines[0])) {
            return invalid("all lines must share offset and length");
        }
        if let Some(r) = &rates {
            if r.len() != lines.len() {
                return invalid(format!("{} rates for {} lines", r.len(), lines.len()));
            }
        }
        Ok(MultiConfig { lines, rates })
    }

    pub fn n_lines(&self) -> usize {
        self.lines.len()
    }

    pub fn offset(&self) -> i64 {
        self.lines[0].offset
    }

    pub fn len(&self) -> usize {
        self.lines[0].len()
    }

    pub fn is_empty(&self) -> bool {
        self.lines[0].is_empty()
    }

    pub fn drop_prefix(&self, n: usize) -> MultiConfig {
        MultiConfig {
            lines: self.lines.iter().map(|l| l.drop_prefix(n)).collect(),
            rates: self.rates.clone(),
        }
    }

    /// Values of all lines at index `k`.
    pub fn column(&self, k: i64) -> Option<Vec<f64>> {
        self.lines.iter().map(|l| l.get(k)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn field_indexing_is_row_major_by_level() {
        let f = WeightField::new(Point::new(-2, 5), 2, 3, vec![0., 1., 2., 3., 4., 5.]).unwrap();
        assert_eq!(f.at(Point::new(-2, 5)), 0.0);
        assert_eq!(f.at(Point::new(0, 5)), 2.0);
        assert_eq!(f.at(Point::new(-1, 6)), 4.0);
        assert_eq!(f.top_right(), Point::new(0, 6));
        assert_eq!(f.get(Point::new(1, 6)), None);
        assert_eq!(f.level(6, -1, 0).unwrap().values, vec![4.0, 5.0]);
    }

    #[test]
    fn rejects_bad_fields() {
        assert!(WeightField::new(Point::new(0, 0), 1, 2, vec![1.0]).is_err());
        assert!(WeightField::new(Point::new(0, 0), 1, 1, vec![-1.0]).is_err());
        assert!(WeightField::new(Point::new(0, 0), 1, 1, vec![f64::NAN]).is_err());
    }

    #[test]
    fn window_restrict_and_prefix() {
        let w = SeqWindow::new(10, vec![1., 2., 3., 4.]);
        assert_eq!(w.end(), 13);
        assert_eq!(w.restrict(11, 12).unwrap().values, vec![2., 3.]);
        assert!(w.restrict(9, 12).is_err());
        let d = w.drop_prefix(3);
        assert_eq!((d.offset, d.values.clone()), (13, vec![4.]));
        assert_eq!(w.get(9), None);
        assert_eq!(w.get(13), Some(4.));
    }

    #[test]
    fn multiconfig_requires_alignment() {
        let a = SeqWindow::new(0, vec![1., 2.]);
        let b = SeqWindow::new(1, vec![1., 2.]);
        assert!(MultiConfig::new(vec![a.clone(), b], None).is_err());
        assert!(MultiConfig::new(vec![a.clone(), a.clone()], Some(vec![1.0])).is_err());
        let m = MultiConfig::new(vec![a.clone(), a], Some(vec![1.0, 2.0])).unwrap();
        assert_eq!(m.column(1), Some(vec![2.0, 2.0]));
    }
}
